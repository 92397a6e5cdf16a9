//! Spectral and commutation Lipschitz numbers, distance operators and Lipschitz witnesses.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::filtration::{MetricContext, StepFiltration};
use crate::geometry::{orbit_projection, rho, separating_projections, AmplifiedProjection};
use crate::numerics::{
    c, commutator, hermitian_eig, hs_norm, identity, matrix_unit, op_norm, projection_leq, range_projection, CMatrix,
    NumericConfig,
};
use crate::opspace::OperatorSubspace;

/// A Lipschitz number together with the data that attains it.
#[derive(Debug, Clone)]
pub struct LipschitzReport {
    pub value: f64,
    pub witness: Option<LipschitzWitness>,
}

#[derive(Debug, Clone)]
pub enum LipschitzWitness {
    /// Eigenvalues `λ_lo < λ_hi` and the projections `P_{≤λ_lo}`, `P_{≥λ_hi}`.
    Spectral { lower: f64, upper: f64, below: CMatrix, above: CMatrix, distance: f64 },
    /// Time `t` and contraction `C ∈ V_t` with `‖[A,C]‖ / t` equal to the value.
    Commutation { t: f64, contraction: CMatrix },
}

impl LipschitzReport {
    fn zero() -> Self {
        Self { value: 0.0, witness: None }
    }

    /// Recompute the value from the witness.
    pub fn reevaluate(&self, f: &StepFiltration, a: &CMatrix, cfg: &NumericConfig) -> Result<f64> {
        match &self.witness {
            None => Ok(0.0),
            Some(LipschitzWitness::Spectral { lower, upper, below, above, .. }) => {
                let n = f.ambient_dim();
                let m = a.nrows() / n;
                let p = AmplifiedProjection::from_parts_unchecked(n, m, below.clone());
                let q = AmplifiedProjection::from_parts_unchecked(n, m, above.clone());
                Ok(gap_ratio(upper - lower, rho(f, &p, &q, cfg)?))
            }
            Some(LipschitzWitness::Commutation { t, contraction }) => {
                Ok(gap_ratio(op_norm(&commutator(a, contraction)), *t))
            }
        }
    }
}

fn gap_ratio(num: f64, den: f64) -> f64 {
    if den == f64::INFINITY {
        0.0
    } else if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// Search budget for the commutation ascent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub restarts: usize,
    pub steps: usize,
    pub seed: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Self { restarts: 32, steps: 200, seed: 0 }
    }
}

fn amplification_of(f: &StepFiltration, a: &CMatrix) -> Result<usize> {
    let n = f.ambient_dim();
    if a.nrows() != a.ncols() || a.nrows() == 0 || !a.nrows().is_multiple_of(n) {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{}, not a multiple of {n}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(a.nrows() / n)
}

/// `L_s(A) = sup (b − a) / ρ(P_{(−∞,a]}(A), P_{[b,∞)}(A))` over `a < b`.
///
/// `A` may be amplified (`nm × nm`). For finite spectra the supremum is taken
/// over eigenvalue pairs.
pub fn spectral_lipschitz(f: &StepFiltration, a: &CMatrix, cfg: &NumericConfig) -> Result<LipschitzReport> {
    let n = f.ambient_dim();
    let m = amplification_of(f, a)?;
    let spec = hermitian_eig(a, cfg)?;
    let mut best = LipschitzReport::zero();
    let k = spec.values.len();
    for i in 0..k {
        let p = AmplifiedProjection::from_parts_unchecked(n, m, spec.below(i));
        for j in (i + 1)..k {
            let q = AmplifiedProjection::from_parts_unchecked(n, m, spec.above(j));
            let d = rho(f, &p, &q, cfg)?;
            let ratio = gap_ratio(spec.values[j] - spec.values[i], d);
            if ratio > best.value {
                best = LipschitzReport {
                    value: ratio,
                    witness: Some(LipschitzWitness::Spectral {
                        lower: spec.values[i],
                        upper: spec.values[j],
                        below: p.matrix().clone(),
                        above: q.matrix().clone(),
                        distance: d,
                    }),
                };
                if ratio == f64::INFINITY {
                    return Ok(best);
                }
            }
        }
    }
    Ok(best)
}

/// Certified lower bound on `L_c(A) = sup ‖[A,C]‖ / t` over contractions `C ∈ V_t`.
///
/// Each level is searched with deterministic candidates (normalized basis
/// elements and contained matrix units) followed by seeded multi-start ascent
/// of `σ_max([A,C])` over the level, renormalized to the operator-norm sphere.
pub fn commutation_lipschitz_lower(
    f: &StepFiltration,
    a: &CMatrix,
    budget: Budget,
    cfg: &NumericConfig,
) -> Result<LipschitzReport> {
    let n = f.ambient_dim();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch(format!("operator is {}x{}", a.nrows(), a.ncols())));
    }
    let scale = op_norm(a).max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let mut best = LipschitzReport::zero();

    for (idx, (&t, level)) in f.breakpoints().iter().zip(f.levels()).enumerate() {
        let candidates = deterministic_candidates(level, cfg);
        if idx == 0 {
            if let Some(cm) = candidates.iter().find(|cm| op_norm(&commutator(a, cm)) > cfg.membership_tol * scale) {
                return Ok(LipschitzReport {
                    value: f64::INFINITY,
                    witness: Some(LipschitzWitness::Commutation { t: 0.0, contraction: cm.clone() }),
                });
            }
            continue;
        }
        let consider = |cm: CMatrix, best: &mut LipschitzReport| {
            let v = op_norm(&commutator(a, &cm)) / t;
            if v > best.value {
                *best =
                    LipschitzReport { value: v, witness: Some(LipschitzWitness::Commutation { t, contraction: cm }) };
            }
        };
        for cm in candidates {
            consider(cm, &mut best);
        }
        let basis = level.basis();
        for _ in 0..budget.restarts {
            let x: Vec<Complex64> =
                (0..basis.len()).map(|_| c(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))).collect();
            if let Some(cm) = ascend(a, level, &basis, x, budget.steps) {
                consider(cm, &mut best);
            }
        }
    }
    Ok(best)
}

fn normalize_op(x: &CMatrix) -> Option<CMatrix> {
    let nrm = op_norm(x);
    (nrm > 0.0).then(|| x.unscale(nrm))
}

fn deterministic_candidates(level: &OperatorSubspace, cfg: &NumericConfig) -> Vec<CMatrix> {
    let n = level.ambient_dim();
    let mut out: Vec<CMatrix> = level.basis().iter().filter_map(normalize_op).collect();
    for i in 0..n {
        for j in 0..n {
            let e = matrix_unit(n, i, j);
            if i != j && level.contains(&e, cfg) {
                out.push(e);
            }
        }
    }
    out
}

/// Projected ascent of `σ_max([A,C])` on the unit operator-norm sphere of a level.
fn ascend(
    a: &CMatrix,
    level: &OperatorSubspace,
    basis: &[CMatrix],
    x0: Vec<Complex64>,
    steps: usize,
) -> Option<CMatrix> {
    let objective = |cm: &CMatrix| op_norm(&commutator(a, cm));
    let mut cm = normalize_op(&level.combine(&x0))?;
    let mut val = objective(&cm);
    let mut eta = 1.0;
    for _ in 0..steps {
        let d = commutator(a, &cm);
        let svd = d.svd(true, true);
        let (k, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc });
        let u = svd.u.as_ref()?.column(k).into_owned();
        let v = svd.v_t.as_ref()?.row(k).adjoint();
        let uv = &u * v.adjoint();
        let g = a.adjoint() * &uv - &uv * a.adjoint();
        let coeffs: Vec<Complex64> = basis.iter().map(|b| crate::numerics::hs_inner(b, &g)).collect();
        let grad = level.combine(&coeffs);
        if hs_norm(&grad) < 1e-14 {
            break;
        }
        let mut improved = false;
        while eta > 1e-10 {
            if let Some(next) = normalize_op(&(&cm + grad.scale(eta))) {
                let nv = objective(&next);
                if nv > val {
                    cm = next;
                    val = nv;
                    improved = true;
                    eta *= 1.5;
                    break;
                }
            }
            eta *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Some(cm)
}

/// Distance operator `A = ⋁_P min{ρ(P,R), c}·P` in closed form.
///
/// With `N_t` the range projection of `(V_t ⊗ I)·ran R`, the spectral
/// projections are `P_{(a,∞)}(A) = I − N_a` for `a < c`, so
/// `A = Σ_i (min(t_{i+1}, c) − t_i)(I − N_{t_i})` over breakpoints below `c`.
pub fn distance_operator(
    f: &StepFiltration,
    r: &AmplifiedProjection,
    c_max: f64,
    cfg: &NumericConfig,
) -> Result<CMatrix> {
    if !(c_max > 0.0) || !c_max.is_finite() {
        return Err(Error::InvalidParameter(format!("cap {c_max} must be positive and finite")));
    }
    if r.is_zero(cfg) {
        return Err(Error::ZeroProjection);
    }
    let size = r.base_dim() * r.amp_degree();
    let bps = f.breakpoints();
    let mut a = CMatrix::zeros(size, size);
    let mut last_far = None;
    for (i, (&t, level)) in bps.iter().zip(f.levels()).enumerate() {
        if t >= c_max {
            break;
        }
        let next = bps.get(i + 1).copied().unwrap_or(f64::INFINITY).min(c_max);
        let far = identity(size) - orbit_projection(level, r, cfg).matrix();
        a += far.scale(next - t);
        last_far = Some(far);
    }

    let tol = cfg.membership_tol.sqrt() * c_max.max(1.0);
    if hs_norm(&(&a * r.matrix())) > tol {
        return Err(Error::PostconditionFailed("A·R ≠ 0".into()));
    }
    if let Some(q) = last_far {
        if hs_norm(&(&a * &q - q.scale(c_max))) > tol {
            return Err(Error::PostconditionFailed("A·Q ≠ c·Q on the far projection".into()));
        }
    }
    let ls = spectral_lipschitz(f, &a, cfg)?.value;
    if ls > 1.0 + 1e-8 {
        return Err(Error::PostconditionFailed(format!("distance operator has L_s = {ls}")));
    }
    Ok(a)
}

/// `ρ(P,Q)` read off the spectrum of `distance_operator(R = P, c = ρ(P,Q))`.
///
/// This is a consistency check between the gauge and the distance function:
/// the result is the largest `λ` with `Q ≤ P_{[λ,∞)}(A)`, and it must agree
/// with [`rho`].
pub fn rho_from_gauge(
    f: &StepFiltration,
    p: &AmplifiedProjection,
    q: &AmplifiedProjection,
    cfg: &NumericConfig,
) -> Result<f64> {
    let (p, q) = crate::geometry::align(p, q)?;
    let r = rho(f, &p, &q, cfg)?;
    if r == 0.0 || r == f64::INFINITY {
        return Ok(r);
    }
    let a = distance_operator(f, &p, r, cfg)?;
    let spec = hermitian_eig(&a, cfg)?;
    let tol = cfg.membership_tol.sqrt();
    let mut read = 0.0;
    for j in (0..spec.values.len()).rev() {
        if projection_leq(q.matrix(), &spec.above(j), tol) {
            read = spec.values[j];
            break;
        }
    }
    if !projection_leq(p.matrix(), &spec.below(0), tol) || spec.values[0].abs() > 1e-8 {
        return Err(Error::PostconditionFailed("P is not in the zero eigenspace".into()));
    }
    if (read - r).abs() > 1e-8 * r.max(1.0) {
        return Err(Error::PostconditionFailed(format!("gauge read-off {read} vs ρ = {r}")));
    }
    Ok(read)
}

/// A Lipschitz element that fails to commute with a given operator.
#[derive(Debug, Clone)]
pub struct SeparatingWitness {
    pub operator: CMatrix,
    pub commutator_norm: f64,
    pub spectral_lipschitz: f64,
}

/// Hermitian `B ∈ M` with `L_s(B) ≤ 1` and `[B,C] ≠ 0`.
///
/// Separates `C` from `V₀`, builds the distance operator from the first
/// projection, and compresses it to the base level by a unit slot vector.
pub fn lipschitz_witness(
    f: &StepFiltration,
    ctx: &MetricContext,
    cm: &CMatrix,
    cfg: &NumericConfig,
) -> Result<SeparatingWitness> {
    let n = f.ambient_dim();
    if cm.nrows() != n || cm.ncols() != n {
        return Err(Error::DimensionMismatch(format!("operator is {}x{}", cm.nrows(), cm.ncols())));
    }
    if ctx.commutant.contains(cm, cfg) {
        return Err(Error::CommutantMember);
    }
    let (p, q) = separating_projections(f, ctx, 0.0, cm, cfg)?;
    let r = rho(f, &p, &q, cfg)?;
    let cap = if r.is_finite() { r } else { f.breakpoints().get(1).copied().unwrap_or(1.0) };
    let a = distance_operator(f, &p, cap, cfg)?;
    let m = p.amp_degree();

    let mut best: Option<(f64, CMatrix)> = None;
    for xi in slot_vectors(m) {
        let b = compress_slot(&a, n, m, &xi);
        let b = (&b + b.adjoint()).scale(0.5);
        let norm = op_norm(&commutator(&b, cm));
        if best.as_ref().is_none_or(|(v, _)| norm > *v) {
            best = Some((norm, b));
        }
    }
    let (norm, b) = best.expect("at least one slot vector");
    if norm <= cfg.membership_tol * op_norm(cm).max(1.0) {
        return Err(Error::PostconditionFailed("compressed commutator vanished".into()));
    }
    let ls = spectral_lipschitz(f, &b, cfg)?.value;
    if ls > 1.0 + 1e-8 {
        return Err(Error::PostconditionFailed(format!("witness has L_s = {ls}")));
    }
    Ok(SeparatingWitness { operator: b, commutator_norm: norm, spectral_lipschitz: ls })
}

/// `e_a`, `(e_a + e_b)/√2`, `(e_a + i e_b)/√2`: by polarization, some
/// compression of a nonzero operator along one of these is nonzero.
fn slot_vectors(m: usize) -> Vec<Vec<Complex64>> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::new();
    for a in 0..m {
        let mut v = vec![c(0.0, 0.0); m];
        v[a] = c(1.0, 0.0);
        out.push(v);
    }
    for a in 0..m {
        for b in (a + 1)..m {
            for phase in [c(h, 0.0), c(0.0, h)] {
                let mut v = vec![c(0.0, 0.0); m];
                v[a] = c(h, 0.0);
                v[b] = phase;
                out.push(v);
            }
        }
    }
    out
}

/// `(I ⊗ ξ*) A (I ⊗ ξ)` for `A ∈ M_n ⊗ M_m`.
fn compress_slot(a: &CMatrix, n: usize, m: usize, xi: &[Complex64]) -> CMatrix {
    let mut out = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut s = c(0.0, 0.0);
            for (p, xp) in xi.iter().enumerate() {
                for (q, xq) in xi.iter().enumerate() {
                    s += xp.conj() * a[(i * m + p, j * m + q)] * xq;
                }
            }
            out[(i, j)] = s;
        }
    }
    out
}

/// Spectral join: `P_{[λ,∞)}(A ∨ B) = P_{[λ,∞)}(A) ∨ P_{[λ,∞)}(B)` on the merged grid.
pub fn spectral_join(a: &CMatrix, b: &CMatrix, cfg: &NumericConfig) -> Result<CMatrix> {
    let sa = hermitian_eig(a, cfg)?;
    let sb = hermitian_eig(b, cfg)?;
    let size = a.nrows();
    let mut grid: Vec<f64> = sa.values.iter().chain(&sb.values).copied().collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|x, y| (*x - *y).abs() <= cfg.eig_cluster_tol);
    let upper = |s: &crate::numerics::Spectrum, lam: f64| -> CMatrix {
        match s.values.iter().position(|&v| v >= lam - cfg.eig_cluster_tol) {
            Some(j) => s.above(j),
            None => CMatrix::zeros(size, size),
        }
    };
    let floor = sa.values[0].max(sb.values[0]);
    let mut out = identity(size).scale(floor);
    let mut prev = floor;
    for &lam in grid.iter().filter(|&&l| l > floor + cfg.eig_cluster_tol) {
        let mut cols = CMatrix::zeros(size, 2 * size);
        cols.columns_mut(0, size).copy_from(&upper(&sa, lam));
        cols.columns_mut(size, size).copy_from(&upper(&sb, lam));
        out += range_projection(&cols, cfg).scale(lam - prev);
        prev = lam;
    }
    Ok(out)
}

/// `A_[B]` for positive `A`: `P_{(a,∞)}(A_[B]) = [B·P_{(a,∞)}(A)]` for `a > 0`.
pub fn spectral_compression(a: &CMatrix, b: &CMatrix, cfg: &NumericConfig) -> Result<CMatrix> {
    let sa = hermitian_eig(a, cfg)?;
    if sa.values[0] < -cfg.eig_cluster_tol {
        return Err(Error::InvalidParameter("operator is not positive".into()));
    }
    let size = a.nrows();
    let mut out = CMatrix::zeros(size, size);
    let mut prev = 0.0f64;
    for (j, &lam) in sa.values.iter().enumerate() {
        if lam <= cfg.eig_cluster_tol {
            continue;
        }
        out += range_projection(&(b * sa.above(j)), cfg).scale(lam - prev);
        prev = lam;
    }
    Ok(out)
}
