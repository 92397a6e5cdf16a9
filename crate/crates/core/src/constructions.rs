//! New quantum pseudometrics from old ones, and the standard small examples.

use crate::error::{Error, Result};
use crate::filtration::{time_leq, MetricContext, StepFiltration};
use crate::numerics::{
    c, hermitian_eig, hs_norm, identity, is_projection, matrix_unit, projection_basis, CMatrix, NumericConfig,
};
use crate::opspace::{generated_vn_algebra, OperatorSubspace, VNAlgebra};

/// Sorted union of breakpoint lists, merging times that agree up to [`crate::filtration::TIME_EPS`].
fn union_grid<'a>(lists: impl IntoIterator<Item = &'a [f64]>) -> Vec<f64> {
    let mut all: Vec<f64> = lists.into_iter().flatten().copied().collect();
    all.sort_by(f64::total_cmp);
    all.dedup_by(|x, y| time_leq(*x, *y));
    all
}

/// `V_t` for `t < C`, and `M_n` from `C` on.
pub fn truncate(f: &StepFiltration, cap: f64) -> Result<StepFiltration> {
    if !(cap >= 0.0) {
        return Err(Error::InvalidParameter(format!("truncation level {cap} must be non-negative")));
    }
    let n = f.ambient_dim();
    let mut steps: Vec<(f64, OperatorSubspace)> = f
        .breakpoints()
        .iter()
        .zip(f.levels())
        .filter(|(t, _)| !time_leq(cap, **t))
        .map(|(t, l)| (*t, l.clone()))
        .collect();
    if cap.is_finite() {
        steps.push((cap, OperatorSubspace::full(n)));
    }
    StepFiltration::from_steps(n, steps)
}

fn embed_block(b: &CMatrix, offset: usize, total: usize) -> CMatrix {
    let mut m = CMatrix::zeros(total, total);
    m.view_mut((offset, offset), (b.nrows(), b.ncols())).copy_from(b);
    m
}

/// Block-diagonal levels `V_t ⊕ W_t`, optionally joined by full off-diagonal
/// blocks from the bridge time `r` on.
pub fn direct_sum(f: &StepFiltration, g: &StepFiltration, bridge: Option<f64>) -> Result<StepFiltration> {
    let n = f.ambient_dim();
    let k = g.ambient_dim();
    let total = n + k;
    if let Some(r) = bridge {
        let needed = f.diameter().max(g.diameter()) / 2.0;
        if !(r.is_finite() && needed.is_finite() && r >= needed) {
            return Err(Error::BridgeTooSmall { bridge: r, needed });
        }
    }
    let bridge_grid = bridge.map(|r| vec![r]).unwrap_or_default();
    let grid = union_grid([f.breakpoints(), g.breakpoints(), &bridge_grid[..]]);
    let mut steps = Vec::with_capacity(grid.len());
    for &t in &grid {
        let mut mats: Vec<CMatrix> = f.value_at(t)?.basis().iter().map(|b| embed_block(b, 0, total)).collect();
        mats.extend(g.value_at(t)?.basis().iter().map(|b| embed_block(b, n, total)));
        if bridge.is_some_and(|r| time_leq(r, t)) {
            for i in 0..n {
                for j in n..total {
                    mats.push(matrix_unit(total, i, j));
                    mats.push(matrix_unit(total, j, i));
                }
            }
        }
        steps.push((t, OperatorSubspace::from_orthonormal_unchecked(total, &mats)));
    }
    StepFiltration::from_steps(total, steps)
}

/// Levelwise intersection on the union grid.
pub fn meet(fs: &[StepFiltration], cfg: &NumericConfig) -> Result<StepFiltration> {
    let first = fs.first().ok_or_else(|| Error::InvalidParameter("meet of no filtrations".into()))?;
    let n = first.ambient_dim();
    for f in fs {
        if f.ambient_dim() != n {
            return Err(Error::MixedDimensions { expected: n, found: f.ambient_dim() });
        }
    }
    let grid = union_grid(fs.iter().map(|f| f.breakpoints()));
    let mut steps = Vec::with_capacity(grid.len());
    for &t in &grid {
        let mut level = OperatorSubspace::full(n);
        for f in fs {
            level = level.intersect(&f.value_at(t)?, cfg)?;
        }
        steps.push((t, level));
    }
    StepFiltration::from_steps(n, steps)
}

/// Fubini product: `(V_t ⊗ M_k) ∩ (M_n ⊗ W_t)` on the union grid.
///
/// At finite dimension this equals `V_t ⊗ W_t`; the equality is checked.
pub fn metric_product(f: &StepFiltration, g: &StepFiltration, cfg: &NumericConfig) -> Result<StepFiltration> {
    let n = f.ambient_dim();
    let k = g.ambient_dim();
    let grid = union_grid([f.breakpoints(), g.breakpoints()]);
    let mut steps = Vec::with_capacity(grid.len());
    for &t in &grid {
        let v = f.value_at(t)?;
        let w = g.value_at(t)?;
        let left = v.tensor(&OperatorSubspace::full(k));
        let right = OperatorSubspace::full(n).tensor(&w);
        let level = left.intersect(&right, cfg)?;
        if !level.equals(&v.tensor(&w), cfg) {
            return Err(Error::PostconditionFailed(format!(
                "Fubini level at t = {t} differs from the algebraic tensor product"
            )));
        }
        steps.push((t, level));
    }
    StepFiltration::from_steps(n * k, steps)
}

/// Generating data for the smallest filtration above a floor.
#[derive(Debug, Clone)]
pub struct TimedGenerators {
    /// Mandatory `V₀` floor; a von Neumann algebra.
    pub base: VNAlgebra,
    /// `(t, G)`: `G ⊆ V_t` is required.
    pub gens: Vec<(f64, OperatorSubspace)>,
}

/// Output of [`generated_filtration`].
#[derive(Debug, Clone)]
pub struct Generated {
    pub filtration: StepFiltration,
    /// False when a horizon cut off candidate times at which levels could still grow.
    pub stabilized: bool,
}

const GENERATION_CAP: usize = 10_000;

/// Smallest step filtration with `V₀ ⊇ base` and each generator inside its level.
///
/// `V_τ` is the span of words `B·G₁·B·…·G_j·B` with total time at most `τ`.
/// Only times at which some level grew can seed new candidate times, so the
/// search terminates once the dimension stops increasing and is exact
/// without a horizon. A horizon truncates the search.
pub fn generated_filtration(tg: &TimedGenerators, horizon: Option<f64>, cfg: &NumericConfig) -> Result<Generated> {
    let n = tg.base.ambient_dim();
    let base = tg.base.as_subspace();
    let mut gens = Vec::with_capacity(tg.gens.len());
    for (t, g) in &tg.gens {
        if !(t.is_finite() && *t > 0.0) {
            return Err(Error::InvalidParameter(format!("generator time {t} must be positive and finite")));
        }
        if g.ambient_dim() != n {
            return Err(Error::MixedDimensions { expected: n, found: g.ambient_dim() });
        }
        let sa = g.sum(&g.adjoint(), cfg)?;
        let right = if base.dim() == 1 { sa } else { sa.product_span(base, cfg)? };
        gens.push((*t, right));
    }
    if let Some(h) = horizon {
        let max_t = gens.iter().map(|(t, _)| *t).fold(0.0, f64::max);
        if !(h >= max_t) {
            return Err(Error::InvalidParameter(format!("horizon {h} is below the largest generator time {max_t}")));
        }
    }

    let mut steps: Vec<(f64, OperatorSubspace)> = vec![(0.0, base.clone())];
    let mut queue: Vec<f64> = gens.iter().map(|(t, _)| *t).collect();
    let mut stabilized = true;
    let mut processed = 0;
    let level_at = |steps: &[(f64, OperatorSubspace)], s: f64| -> Option<usize> {
        steps.iter().rposition(|(t, _)| time_leq(*t, s))
    };
    loop {
        queue.sort_by(f64::total_cmp);
        queue.dedup_by(|x, y| time_leq(*x, *y));
        if queue.is_empty() || steps.last().expect("nonempty").1.is_full() {
            break;
        }
        let tau = queue.remove(0);
        if horizon.is_some_and(|h| !time_leq(tau, h)) {
            stabilized = false;
            break;
        }
        processed += 1;
        if processed > GENERATION_CAP {
            return Err(Error::NonConvergent(GENERATION_CAP));
        }
        let prev = &steps.last().expect("nonempty").1;
        let mut mats = prev.basis();
        for (tg_time, gb) in &gens {
            if !time_leq(*tg_time, tau) {
                continue;
            }
            let Some(idx) = level_at(&steps, tau - tg_time) else { continue };
            let left = steps[idx].1.basis();
            for x in gb.basis() {
                for l in &left {
                    mats.push(l * &x);
                }
            }
        }
        let next = OperatorSubspace::span(n, &mats, cfg)?;
        if next.dim() > prev.dim() {
            steps.push((tau, next));
            queue.extend(gens.iter().map(|(t, _)| tau + t));
        }
    }
    Ok(Generated { filtration: StepFiltration::from_steps(n, steps)?, stabilized })
}

/// The quantum graph metric of an `M′`-bimodule operator system `V`: the
/// smallest quantum metric with `V ⊆ V₁`.
pub fn quantum_graph_metric(ctx: &MetricContext, v: &OperatorSubspace, cfg: &NumericConfig) -> Result<StepFiltration> {
    let tg = TimedGenerators { base: ctx.commutant.clone(), gens: vec![(1.0, v.clone())] };
    Ok(generated_filtration(&tg, None, cfg)?.filtration)
}

/// Graph metric of a classical graph, as a filtration over the diagonal algebra.
pub fn graph_filtration(adjacency: &[Vec<bool>], cfg: &NumericConfig) -> Result<(StepFiltration, MetricContext)> {
    let n = adjacency.len();
    if n == 0 || adjacency.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidParameter("adjacency matrix must be square and nonempty".into()));
    }
    let mut pairs: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
    for (i, row) in adjacency.iter().enumerate() {
        for (j, &e) in row.iter().enumerate() {
            if e && i != j {
                pairs.push((i, j));
                pairs.push((j, i));
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    let ctx = MetricContext::diagonal(n);
    let v = OperatorSubspace::from_matrix_units(n, &pairs);
    Ok((quantum_graph_metric(&ctx, &v, cfg)?, ctx))
}

/// Restriction to a central corner: `W_t = R V_t R`, realized on `ran R`.
pub fn quotient(
    f: &StepFiltration,
    ctx: &MetricContext,
    r: &CMatrix,
    cfg: &NumericConfig,
) -> Result<(StepFiltration, MetricContext)> {
    let n = f.ambient_dim();
    if r.nrows() != n || r.ncols() != n || !is_projection(r, cfg.membership_tol.sqrt()) {
        return Err(Error::NotAProjection("quotient needs a projection".into()));
    }
    if !ctx.algebra.is_central(r, cfg) {
        return Err(Error::NotCentral);
    }
    let u = projection_basis(r, cfg);
    if u.ncols() == 0 {
        return Err(Error::ZeroProjection);
    }
    let mut steps = Vec::with_capacity(f.num_levels());
    for (t, l) in f.breakpoints().iter().zip(f.levels()) {
        steps.push((*t, l.compress(&u, cfg)?));
    }
    Ok((StepFiltration::from_steps(u.ncols(), steps)?, ctx.compress(&u, cfg)?))
}

/// The metric subobject on a unital subalgebra `N ⊆ M`: the smallest
/// pseudometric on `N` dominating `F`.
pub fn subobject(
    f: &StepFiltration,
    ctx: &MetricContext,
    sub: &VNAlgebra,
    cfg: &NumericConfig,
) -> Result<(StepFiltration, MetricContext)> {
    let n = f.ambient_dim();
    if sub.ambient_dim() != n {
        return Err(Error::MixedDimensions { expected: n, found: sub.ambient_dim() });
    }
    if !sub.contains(&identity(n), cfg) {
        return Err(Error::NotSubalgebra("subalgebra is not unital".into()));
    }
    if !ctx.algebra.as_subspace().contains_subspace(sub.as_subspace(), cfg) {
        return Err(Error::NotSubalgebra("not contained in the ambient algebra".into()));
    }
    let sub_ctx = MetricContext::new(sub.clone(), cfg)?;
    let mut floor = sub_ctx.commutant.as_subspace().basis();
    floor.extend(f.level(0).basis());
    let base = generated_vn_algebra(&floor, n, cfg)?;
    let gens = f.breakpoints().iter().zip(f.levels()).skip(1).map(|(t, l)| (*t, l.clone())).collect();
    let out = generated_filtration(&TimedGenerators { base, gens }, None, cfg)?;
    Ok((out.filtration, sub_ctx))
}

/// The `l^p` product: generated by `S_i ⊗ T_j` at time `(t_i^p + u_j^p)^{1/p}`
/// over the floor `S₀ ⊗ T₀`.
pub fn lp_product(f: &StepFiltration, g: &StepFiltration, p: f64, cfg: &NumericConfig) -> Result<StepFiltration> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("exponent {p} must lie in [1, ∞)")));
    }
    let base = VNAlgebra::new_unchecked(f.level(0).tensor(g.level(0)));
    let mut gens = Vec::new();
    for (i, (s, v)) in f.breakpoints().iter().zip(f.levels()).enumerate() {
        for (j, (t, w)) in g.breakpoints().iter().zip(g.levels()).enumerate() {
            if i == 0 && j == 0 {
                continue;
            }
            gens.push(((s.powf(p) + t.powf(p)).powf(1.0 / p), v.tensor(w)));
        }
    }
    Ok(generated_filtration(&TimedGenerators { base, gens }, None, cfg)?.filtration)
}

/// Monotone reparametrization of time for [`f_transform`].
#[derive(Debug, Clone, PartialEq)]
pub enum Reparam {
    /// `f(t) = t^e`, superadditive for `e ≥ 1`.
    Power { exponent: f64 },
    /// Linear interpolation through `knots` (first knot `(0, 0)`), continued
    /// with the last slope, and `+∞` from `infinite_from` on.
    PiecewiseLinear { knots: Vec<(f64, f64)>, infinite_from: Option<f64> },
}

impl Reparam {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Reparam::Power { exponent } => t.powf(*exponent),
            Reparam::PiecewiseLinear { knots, infinite_from } => {
                if infinite_from.is_some_and(|cut| t >= cut) {
                    return f64::INFINITY;
                }
                let k = knots.iter().rposition(|(x, _)| *x <= t).unwrap_or(0);
                let (x0, y0) = knots[k];
                let (xa, ya, xb, yb) = if k + 1 < knots.len() {
                    (x0, y0, knots[k + 1].0, knots[k + 1].1)
                } else {
                    (knots[k - 1].0, knots[k - 1].1, x0, y0)
                };
                y0 + (t - x0) * (yb - ya) / (xb - xa)
            }
        }
    }

    /// `inf{t : f(t) ≥ s}`; the time at which `V_s` enters the transform.
    pub fn threshold(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match self {
            Reparam::Power { exponent } => s.powf(1.0 / exponent),
            Reparam::PiecewiseLinear { knots, infinite_from } => {
                let cut = infinite_from.unwrap_or(f64::INFINITY);
                let mut linear = f64::INFINITY;
                for w in knots.windows(2) {
                    let ((xa, ya), (xb, yb)) = (w[0], w[1]);
                    if yb >= s {
                        linear = if yb == ya { xa } else { xa + (s - ya) * (xb - xa) / (yb - ya) };
                        break;
                    }
                }
                if linear.is_infinite() {
                    let ((xa, ya), (xb, yb)) = (knots[knots.len() - 2], knots[knots.len() - 1]);
                    if yb > ya {
                        linear = xb + (s - yb) * (xb - xa) / (yb - ya);
                    }
                }
                linear.min(cut)
            }
        }
    }

    /// `f(0) = 0`, monotone, and `f(s) + f(t) ≤ f(s + t)` on the knot grid.
    pub fn validate(&self) -> Result<()> {
        match self {
            Reparam::Power { exponent } => {
                if !(exponent.is_finite() && *exponent >= 1.0) {
                    return Err(Error::NotSuperadditive { s: 1.0, t: 1.0 });
                }
                Ok(())
            }
            Reparam::PiecewiseLinear { knots, infinite_from } => {
                if knots.len() < 2 || knots[0] != (0.0, 0.0) {
                    return Err(Error::InvalidParameter("need at least two knots, starting at (0, 0)".into()));
                }
                for w in knots.windows(2) {
                    if !(w[1].0 > w[0].0 && w[1].1 >= w[0].1 && w[1].0.is_finite() && w[1].1.is_finite()) {
                        return Err(Error::InvalidParameter("knots must increase".into()));
                    }
                }
                if infinite_from.is_some_and(|cut| !(cut > 0.0)) {
                    return Err(Error::InvalidParameter("infinite cut must be positive".into()));
                }
                let mut xs: Vec<f64> = knots.iter().map(|k| k.0).collect();
                xs.extend(*infinite_from);
                for &s in &xs {
                    for &t in &xs {
                        let lhs = self.eval(s) + self.eval(t);
                        let rhs = self.eval(s + t);
                        if lhs > rhs + 1e-12 * rhs.abs().max(1.0) {
                            return Err(Error::NotSuperadditive { s, t });
                        }
                    }
                }
                Ok(())
            }
        }
    }
}

/// `V^f_t = V_{f(t)}`. Level `i` enters at `inf{t : f(t) ≥ t_i}`.
pub fn f_transform(f: &StepFiltration, reparam: &Reparam) -> Result<StepFiltration> {
    reparam.validate()?;
    let steps: Vec<(f64, OperatorSubspace)> = f
        .breakpoints()
        .iter()
        .zip(f.levels())
        .map(|(t, l)| (reparam.threshold(*t), l.clone()))
        .filter(|(t, _)| t.is_finite())
        .collect();
    StepFiltration::from_steps(f.ambient_dim(), steps)
}

/// Hölder transform: distances become `ρ^α`.
pub fn hoelder(f: &StepFiltration, alpha: f64) -> Result<StepFiltration> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("Hölder exponent {alpha} must lie in (0, 1]")));
    }
    f_transform(f, &Reparam::Power { exponent: 1.0 / alpha })
}

/// `ℂI` at 0, `A` at 1, `M_n` at 2.
pub fn operator_system_metric(a: &OperatorSubspace, cfg: &NumericConfig) -> Result<StepFiltration> {
    if !a.is_operator_system(cfg) {
        return Err(Error::NotOperatorSystem("subspace must be unital and self-adjoint".into()));
    }
    if a.dim() <= 1 || a.is_full() {
        return Err(Error::DegenerateChain(format!("dimension {} gives no proper middle level", a.dim())));
    }
    let n = a.ambient_dim();
    StepFiltration::new(
        n,
        vec![0.0, 1.0, 2.0],
        vec![OperatorSubspace::scalars(n), a.clone(), OperatorSubspace::full(n)],
    )
}

/// The three traceless Hermitian generators used for `M₂`, in the order of
/// the canonical chain: `diag(1,−1)`, the real off-diagonal, the imaginary off-diagonal.
pub fn m2_generators() -> [CMatrix; 3] {
    let mut x = CMatrix::zeros(2, 2);
    x[(0, 0)] = c(1.0, 0.0);
    x[(1, 1)] = c(-1.0, 0.0);
    let mut y = CMatrix::zeros(2, 2);
    y[(0, 1)] = c(1.0, 0.0);
    y[(1, 0)] = c(1.0, 0.0);
    let mut z = CMatrix::zeros(2, 2);
    z[(0, 1)] = c(0.0, 1.0);
    z[(1, 0)] = c(0.0, -1.0);
    [x, y, z]
}

/// Parameters of a quantum pseudometric on `M₂` in canonical form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct M2Params {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl M2Params {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let ok = [a, b, c].iter().all(|v| !v.is_nan()) && 0.0 <= a && a <= b && b <= c && c <= a + b;
        if !ok {
            return Err(Error::ConstraintViolation(format!("need 0 ≤ a ≤ b ≤ c ≤ a + b, got ({a}, {b}, {c})")));
        }
        Ok(Self { a, b, c })
    }

    /// Reflexive exactly when the last two parameters agree.
    pub fn is_reflexive(&self) -> bool {
        self.b == self.c
    }
}

/// `ℂI ⊂ +diag(1,−1) ⊂ +real off-diagonal ⊂ M₂` at times `a, b, c`.
pub fn m2_metric(p: M2Params) -> Result<StepFiltration> {
    let p = M2Params::new(p.a, p.b, p.c)?;
    let [x, y, _] = m2_generators();
    let id = identity(2);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let chain = [vec![id.scale(h)], vec![id.scale(h), x.scale(h)], vec![id.scale(h), x.scale(h), y.scale(h)]];
    let mut steps = vec![(0.0, OperatorSubspace::scalars(2))];
    for (t, mats) in [p.a, p.b].iter().zip(&chain[1..]) {
        if t.is_finite() {
            steps.push((*t, OperatorSubspace::from_orthonormal_unchecked(2, mats)));
        }
    }
    if p.c.is_finite() {
        steps.push((p.c, OperatorSubspace::full(2)));
    }
    StepFiltration::from_steps(2, steps)
}

/// Canonical parameters and a unitary `U` with `U F U* = m2_metric(params)`.
pub fn canonicalize_m2(f: &StepFiltration, cfg: &NumericConfig) -> Result<(M2Params, CMatrix)> {
    if f.ambient_dim() != 2 {
        return Err(Error::NotCanonicalizable(format!("ambient dimension {} ≠ 2", f.ambient_dim())));
    }
    let first_with = |d: usize| -> f64 {
        f.levels().iter().position(|l| l.dim() >= d).map_or(f64::INFINITY, |i| f.breakpoints()[i])
    };
    if f.level(0).dim() < 1 || !f.levels().iter().all(|l| l.is_operator_system(cfg)) {
        return Err(Error::NotCanonicalizable("levels must be operator systems".into()));
    }
    let params = M2Params::new(first_with(2), first_with(3), first_with(4))?;

    // Hermitian traceless directions of the first levels of dimension 2 and 3.
    let traceless = |l: &OperatorSubspace| -> Vec<CMatrix> {
        l.basis()
            .iter()
            .flat_map(|b| [(b + b.adjoint()).scale(0.5), (b - b.adjoint()) * c(0.0, -0.5)])
            .map(|h| {
                let tr = h.trace() * c(0.5, 0.0);
                h - identity(2) * tr
            })
            .filter(|h| hs_norm(h) > cfg.membership_tol)
            .collect()
    };
    let level_of_dim = |d: usize| f.levels().iter().find(|l| l.dim() == d);
    let dim2 = level_of_dim(2).or_else(|| level_of_dim(3));
    let Some(l2) = dim2 else {
        return Ok((params, identity(2)));
    };
    let h = traceless(l2)
        .into_iter()
        .max_by(|a, b| hs_norm(a).total_cmp(&hs_norm(b)))
        .ok_or_else(|| Error::NotCanonicalizable("no traceless direction".into()))?;
    let spec = hermitian_eig(&h, cfg)?;
    if spec.values.len() != 2 {
        return Err(Error::NotCanonicalizable("degenerate generator".into()));
    }
    // Rows of U: top eigenvector first, so U H U* ∝ diag(1, −1).
    let top = projection_basis(&spec.projections[1], cfg);
    let bottom = projection_basis(&spec.projections[0], cfg);
    let mut u = CMatrix::zeros(2, 2);
    u.set_row(0, &top.column(0).adjoint());
    u.set_row(1, &bottom.column(0).adjoint());

    if let Some(l3) = level_of_dim(3) {
        let conj = l3.conjugate(&u);
        let k = traceless(&conj)
            .into_iter()
            .map(|m| {
                let mut off = m.clone();
                off[(0, 0)] = c(0.0, 0.0);
                off[(1, 1)] = c(0.0, 0.0);
                off
            })
            .max_by(|a, b| hs_norm(a).total_cmp(&hs_norm(b)))
            .ok_or_else(|| Error::NotCanonicalizable("no off-diagonal direction".into()))?;
        let z = k[(0, 1)];
        if z.norm() <= cfg.membership_tol {
            return Err(Error::NotCanonicalizable("off-diagonal generator vanished".into()));
        }
        // diag(1, e^{iθ}) maps the (0,1) entry z to z e^{-iθ}; choose θ = arg z.
        let mut d = identity(2);
        d[(1, 1)] = z / z.norm();
        u = d * u;
    }
    Ok((params, u))
}

/// A morphism `φ(A) = U*(I ⊗ A)U` from `M` into `N`, given in decomposed form.
#[derive(Debug, Clone)]
pub struct Morphism {
    /// Dimension `k̃` of the auxiliary factor.
    pub aux_dim: usize,
    /// Projection in `M_{k̃} ⊗ M′` whose range contains `ran U`.
    pub r: CMatrix,
    /// Isometry from the space of `N` into `ℂ^{k̃} ⊗ ℂ^n`.
    pub u: CMatrix,
}

/// Smallest `L` with `W_s ⊆ U*(M_{k̃} ⊗ V_{Ls})U` for all `s`.
///
/// `F` lives on `M` (the source of `φ`) and `G` on `N`.
pub fn co_lipschitz_number(
    f: &StepFiltration,
    ctx_m: &MetricContext,
    g: &StepFiltration,
    phi: &Morphism,
    cfg: &NumericConfig,
) -> Result<f64> {
    let n = f.ambient_dim();
    let k = phi.aux_dim;
    let big = k * n;
    let u = &phi.u;
    if u.nrows() != big || u.ncols() != g.ambient_dim() {
        return Err(Error::DimensionMismatch(format!(
            "isometry is {}x{}, expected {big}x{}",
            u.nrows(),
            u.ncols(),
            g.ambient_dim()
        )));
    }
    let tol = cfg.membership_tol.sqrt();
    if hs_norm(&(u.adjoint() * u - identity(u.ncols()))) > tol {
        return Err(Error::NotIsometry);
    }
    let r = &phi.r;
    if r.nrows() != big || !is_projection(r, tol) || hs_norm(&(r * u - u)) > tol {
        return Err(Error::NotAProjection("R must be a projection containing ran U".into()));
    }
    let lift = |a: &CMatrix| identity(k).kronecker(a);
    let phi_of = |a: &CMatrix| u.adjoint() * lift(a) * u;
    let m_basis = ctx_m.algebra.as_subspace().basis();
    for a in &m_basis {
        if hs_norm(&(r * lift(a) - lift(a) * r)) > tol {
            return Err(Error::NotHomomorphism("R does not commute with I ⊗ M".into()));
        }
        for b in &m_basis {
            if hs_norm(&(phi_of(&(a * b)) - phi_of(a) * phi_of(b))) > tol {
                return Err(Error::NotHomomorphism("φ(AB) ≠ φ(A)φ(B)".into()));
            }
        }
    }

    let pulled: Vec<OperatorSubspace> = f
        .levels()
        .iter()
        .map(|l| {
            let mut mats = Vec::with_capacity(k * k * l.dim());
            for b in l.basis() {
                for i in 0..k {
                    for j in 0..k {
                        mats.push(u.adjoint() * matrix_unit(k, i, j).kronecker(&b) * u);
                    }
                }
            }
            OperatorSubspace::span(u.ncols(), &mats, cfg)
        })
        .collect::<Result<_>>()?;
    let t_min = |w: &OperatorSubspace| -> f64 {
        pulled.iter().position(|x| x.contains_subspace(w, cfg)).map_or(f64::INFINITY, |i| f.breakpoints()[i])
    };

    let mut best = 0.0f64;
    for (s, w) in g.breakpoints().iter().zip(g.levels()) {
        let t = t_min(w);
        if *s == 0.0 {
            if t > 0.0 {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        best = best.max(t / s);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtration::{from_classical, to_classical, validate};
    use crate::geometry::{rho, AmplifiedProjection};
    use crate::numerics::{diag, random};
    use rand::SeedableRng;

    fn cfg() -> NumericConfig {
        NumericConfig::default()
    }

    fn classical(d: &[Vec<f64>]) -> StepFiltration {
        from_classical(d).unwrap().0
    }

    fn dist(f: &StepFiltration) -> Vec<Vec<f64>> {
        to_classical(f, &MetricContext::diagonal(f.ambient_dim()), &cfg()).unwrap()
    }

    #[test]
    fn truncation_caps_classical_distances() {
        let f = classical(&[vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 2.0], vec![3.0, 2.0, 0.0]]);
        let t = truncate(&f, 1.5).unwrap();
        assert_eq!(dist(&t), vec![vec![0.0, 1.0, 1.5], vec![1.0, 0.0, 1.5], vec![1.5, 1.5, 0.0]]);
        assert!(truncate(&f, 10.0).unwrap().equals(&f, &cfg()));
        assert_eq!(truncate(&f, 0.0).unwrap().num_levels(), 1);
    }

    #[test]
    fn bridged_direct_sum() {
        let p = classical(&[vec![0.0]]);
        let open = direct_sum(&p, &p, None).unwrap();
        assert_eq!(dist(&open)[0][1], f64::INFINITY);
        let joined = direct_sum(&p, &p, Some(1.0)).unwrap();
        assert_eq!(dist(&joined)[0][1], 1.0);
        let two = classical(&[vec![0.0, 4.0], vec![4.0, 0.0]]);
        assert!(matches!(direct_sum(&two, &p, Some(1.0)), Err(Error::BridgeTooSmall { .. })));
        let ok = direct_sum(&two, &p, Some(2.0)).unwrap();
        let ctx = MetricContext::diagonal(3);
        assert!(validate(&ok, Some(&ctx), &cfg()).unwrap().is_metric);
    }

    #[test]
    fn classical_meet_is_max() {
        let f = classical(&[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 2.0], vec![2.0, 2.0, 0.0]]);
        let g = classical(&[vec![0.0, 2.0, 1.0], vec![2.0, 0.0, 2.0], vec![1.0, 2.0, 0.0]]);
        let m = meet(&[f, g], &cfg()).unwrap();
        assert_eq!(dist(&m), vec![vec![0.0, 2.0, 2.0], vec![2.0, 0.0, 2.0], vec![2.0, 2.0, 0.0]]);
    }

    #[test]
    fn product_of_classical_is_max_metric() {
        let f = classical(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let g = classical(&[vec![0.0, 3.0], vec![3.0, 0.0]]);
        let p = metric_product(&f, &g, &cfg()).unwrap();
        let d = dist(&p);
        assert_eq!(d[0][1], 3.0);
        assert_eq!(d[0][2], 1.0);
        assert_eq!(d[0][3], 3.0);
    }

    #[test]
    fn graph_path_distances() {
        let adj = vec![
            vec![false, true, false, false],
            vec![true, false, true, false],
            vec![false, true, false, false],
            vec![false, false, false, false],
        ];
        let (f, _) = graph_filtration(&adj, &cfg()).unwrap();
        let d = dist(&f);
        assert_eq!(d[0][2], 2.0);
        assert_eq!(d[0][3], f64::INFINITY);
    }

    #[test]
    fn taxicab_from_l1_product() {
        let e = classical(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let p = lp_product(&e, &e, 1.0, &cfg()).unwrap();
        let d = dist(&p);
        assert_eq!(d[0][3], 2.0);
        assert_eq!(d[1][2], 2.0);
        assert_eq!(d[0][1], 1.0);
        let p2 = lp_product(&e, &e, 2.0, &cfg()).unwrap();
        assert!((dist(&p2)[0][3] - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn quotient_restricts() {
        let f = classical(&[vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 2.0], vec![3.0, 2.0, 0.0]]);
        let ctx = MetricContext::diagonal(3);
        let (q, qctx) = quotient(&f, &ctx, &diag(&[1.0, 0.0, 1.0]), &cfg()).unwrap();
        assert_eq!(to_classical(&q, &qctx, &cfg()).unwrap(), vec![vec![0.0, 3.0], vec![3.0, 0.0]]);
        let full = MetricContext::full(3);
        assert!(matches!(quotient(&f, &full, &diag(&[1.0, 0.0, 0.0]), &cfg()), Err(Error::NotCentral)));
    }

    #[test]
    fn hoelder_snowflake() {
        let f = classical(&[vec![0.0, 4.0], vec![4.0, 0.0]]);
        let h = hoelder(&f, 0.5).unwrap();
        assert!((dist(&h)[0][1] - 2.0).abs() < 1e-12);
        let trunc = Reparam::PiecewiseLinear { knots: vec![(0.0, 0.0), (1.0, 1.0)], infinite_from: Some(3.0) };
        assert!(f_transform(&f, &trunc).unwrap().equals(&truncate(&f, 3.0).unwrap(), &cfg()));
        let concave = Reparam::PiecewiseLinear { knots: vec![(0.0, 0.0), (1.0, 2.0), (2.0, 3.0)], infinite_from: None };
        assert!(matches!(concave.validate(), Err(Error::NotSuperadditive { .. })));
    }

    #[test]
    fn operator_system_example() {
        let [x, y, _] = m2_generators();
        let a = OperatorSubspace::span(2, &[identity(2), x, y], &cfg()).unwrap();
        let f = operator_system_metric(&a, &cfg()).unwrap();
        assert_eq!(f.diameter(), 2.0);
        assert!(matches!(
            operator_system_metric(&OperatorSubspace::scalars(2), &cfg()),
            Err(Error::DegenerateChain(_))
        ));
    }

    #[test]
    fn m2_round_trip() {
        assert!(M2Params::new(1.0, 1.0, 3.0).is_err());
        let p = M2Params::new(1.0, 2.0, 2.5).unwrap();
        let f = m2_metric(p).unwrap();
        assert_eq!(f.level_dims(), vec![1, 2, 3, 4]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let v = random::unitary(&mut rng, 2);
        let g = f.conjugate(&v);
        let (q, u) = canonicalize_m2(&g, &cfg()).unwrap();
        assert_eq!(q, p);
        assert!(g.conjugate(&u).equals(&f, &cfg()));
    }

    #[test]
    fn identity_morphism_is_one_lipschitz() {
        let (f, ctx) = from_classical(&[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]]).unwrap();
        let phi = Morphism { aux_dim: 1, r: identity(3), u: identity(3) };
        assert_eq!(co_lipschitz_number(&f, &ctx, &f, &phi, &cfg()).unwrap(), 1.0);
        let g = truncate(&f, 1.0).unwrap();
        assert_eq!(co_lipschitz_number(&f, &ctx, &g, &phi, &cfg()).unwrap(), 2.0);
    }

    #[test]
    fn meet_counterexample_distance() {
        let [_, y, z] = m2_generators();
        let id = identity(2);
        let a = OperatorSubspace::span(2, &[id.clone(), y], &cfg()).unwrap();
        let b = OperatorSubspace::span(2, &[id, z], &cfg()).unwrap();
        let fa = operator_system_metric(&a, &cfg()).unwrap();
        let fb = operator_system_metric(&b, &cfg()).unwrap();
        let m = meet(&[fa.clone(), fb], &cfg()).unwrap();
        let p = AmplifiedProjection::base(matrix_unit(2, 0, 0), &cfg()).unwrap();
        let q = AmplifiedProjection::base(matrix_unit(2, 1, 1), &cfg()).unwrap();
        assert_eq!(rho(&m, &p, &q, &cfg()).unwrap(), 2.0);
        assert_eq!(rho(&fa, &p, &q, &cfg()).unwrap(), 1.0);
    }
}
