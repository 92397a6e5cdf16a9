//! Step filtrations: the quantum pseudometric object itself.

use crate::error::{Error, Result};
use crate::numerics::{matrix_unit, CMatrix, NumericConfig};
use crate::opspace::{commutant, OperatorSubspace, VNAlgebra};

/// Relative slack used when looking up a time against the breakpoint grid.
///
/// Sums such as `t_i + t_j` or `(s^p + t^p)^{1/p}` are recomputed in floating
/// point; without slack a sum landing one ulp below a breakpoint would read
/// the level beneath it.
pub const TIME_EPS: f64 = 1e-12;

/// `a ≤ b` up to the relative slack [`TIME_EPS`].
pub fn time_leq(a: f64, b: f64) -> bool {
    a <= b + TIME_EPS * b.abs().max(1.0)
}

/// A quantum pseudometric on a subalgebra of `M_n`, as finitely many levels.
///
/// `V_t = S_i` for the largest breakpoint `t_i ≤ t`. Breakpoints start at 0
/// and increase strictly. A top level smaller than `M_n` encodes infinite
/// distances.
#[derive(Debug, Clone)]
pub struct StepFiltration {
    n: usize,
    breakpoints: Vec<f64>,
    levels: Vec<OperatorSubspace>,
}

impl StepFiltration {
    /// Structural checks only; the axioms are checked by [`validate`].
    pub fn new(n: usize, breakpoints: Vec<f64>, levels: Vec<OperatorSubspace>) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != levels.len() {
            return Err(Error::MalformedFiltration("need one level per breakpoint and at least one level".into()));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::MalformedFiltration("first breakpoint must be 0".into()));
        }
        if breakpoints.iter().any(|t| !t.is_finite()) {
            return Err(Error::MalformedFiltration("breakpoints must be finite".into()));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::MalformedFiltration("breakpoints must increase strictly".into()));
        }
        if let Some(l) = levels.iter().find(|l| l.ambient_dim() != n) {
            return Err(Error::MixedDimensions { expected: n, found: l.ambient_dim() });
        }
        Ok(Self { n, breakpoints, levels })
    }

    /// Build from `(time, level)` pairs in any order, dropping repeated levels.
    ///
    /// Levels are assumed nested in time order; a level whose dimension does
    /// not exceed its predecessor's is merged into it.
    pub fn from_steps(n: usize, mut steps: Vec<(f64, OperatorSubspace)>) -> Result<Self> {
        steps.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut breakpoints: Vec<f64> = Vec::new();
        let mut levels: Vec<OperatorSubspace> = Vec::new();
        for (t, s) in steps {
            match levels.last() {
                Some(prev) if s.dim() <= prev.dim() => continue,
                _ => {}
            }
            if let Some(&last) = breakpoints.last() {
                if time_leq(t, last) {
                    *levels.last_mut().expect("nonempty") = s;
                    continue;
                }
            }
            breakpoints.push(t);
            levels.push(s);
        }
        Self::new(n, breakpoints, levels)
    }

    /// Single level `S` at every time.
    pub fn constant(level: OperatorSubspace) -> Self {
        let n = level.ambient_dim();
        Self { n, breakpoints: vec![0.0], levels: vec![level] }
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn levels(&self) -> &[OperatorSubspace] {
        &self.levels
    }

    pub fn level(&self, i: usize) -> &OperatorSubspace {
        &self.levels[i]
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn top(&self) -> &OperatorSubspace {
        self.levels.last().expect("filtration has a level")
    }

    pub fn level_dims(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.dim()).collect()
    }

    /// Index of the level in force at time `t` (or `None` for `t = ∞` past a proper top).
    pub fn index_at(&self, t: f64) -> Result<usize> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::NegativeTime(t));
        }
        Ok(self.breakpoints.iter().rposition(|&b| time_leq(b, t)).unwrap_or(0))
    }

    /// `V_t`, with `V_∞ = M_n`.
    pub fn value_at(&self, t: f64) -> Result<OperatorSubspace> {
        if t == f64::INFINITY {
            return Ok(OperatorSubspace::full(self.n));
        }
        Ok(self.levels[self.index_at(t)?].clone())
    }

    /// `V_{<t}`: the largest level strictly before `t`; `V_{<∞}` is the top level.
    pub fn v_less_than(&self, t: f64) -> Result<OperatorSubspace> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::NegativeTime(t));
        }
        if t == f64::INFINITY {
            return Ok(self.top().clone());
        }
        match self.breakpoints.iter().rposition(|&b| !time_leq(t, b)) {
            Some(i) => Ok(self.levels[i].clone()),
            None => Ok(OperatorSubspace::zero(self.n)),
        }
    }

    /// `D(A) = inf{t : A ∈ V_t}`; `+∞` when no level contains `A`.
    pub fn displacement_gauge(&self, a: &CMatrix, cfg: &NumericConfig) -> f64 {
        self.levels.iter().position(|l| l.contains(a, cfg)).map_or(f64::INFINITY, |i| self.breakpoints[i])
    }

    /// Smallest breakpoint whose level is all of `M_n`.
    pub fn diameter(&self) -> f64 {
        self.levels.iter().position(|l| l.is_full()).map_or(f64::INFINITY, |i| self.breakpoints[i])
    }

    /// Conjugate every level by a unitary.
    pub fn conjugate(&self, u: &CMatrix) -> Self {
        Self {
            n: self.n,
            breakpoints: self.breakpoints.clone(),
            levels: self.levels.iter().map(|l| l.conjugate(u)).collect(),
        }
    }

    pub fn descriptors(&self, cfg: &NumericConfig) -> Result<Descriptors> {
        Ok(Descriptors {
            diameter: self.diameter(),
            discreteness_gap: self.breakpoints.get(1).copied().unwrap_or(f64::INFINITY),
            path: self.is_path(cfg)?,
            grid_path: self.is_grid_path(cfg)?,
        })
    }

    /// The path condition `⋂_ε V_{s+ε}V_{t+ε} = V_{s+t}` for all real `s, t ≥ 0`.
    ///
    /// By right continuity `V_{s+ε} = V_s` for small ε. On a pair of cells
    /// `[t_i, t_{i+1}) × [t_j, t_{j+1})` the product is constant while
    /// `V_{s+t}` climbs up to `V_{<t_{i+1}+t_{j+1}}`, so one comparison per
    /// pair of cells decides the property.
    pub fn is_path(&self, cfg: &NumericConfig) -> Result<bool> {
        let k = self.levels.len();
        let end = |i: usize| self.breakpoints.get(i + 1).copied().unwrap_or(f64::INFINITY);
        for i in 0..k {
            for j in i..k {
                let prod = self.levels[i].product_span(&self.levels[j], cfg)?;
                let reach = self.v_less_than(end(i) + end(j))?;
                if !prod.contains_subspace(&reach, cfg) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// The path identity `span(V_s V_t) = V_{s+t}` restricted to breakpoints `s, t`.
    pub fn is_grid_path(&self, cfg: &NumericConfig) -> Result<bool> {
        let k = self.levels.len();
        for i in 0..k {
            for j in i..k {
                let prod = self.levels[i].product_span(&self.levels[j], cfg)?;
                let target = self.value_at(self.breakpoints[i] + self.breakpoints[j])?;
                if !prod.contains_subspace(&target, cfg) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Rebuild levels from the gauge: `{A : D(A) ≤ t}` sampled on a spanning set.
    ///
    /// The sample is the union of all level bases plus the matrix units; the
    /// returned filtration collects, at each breakpoint, the samples whose
    /// gauge does not exceed it.
    pub fn rebuild_from_gauge(&self, cfg: &NumericConfig) -> Result<Self> {
        let mut samples: Vec<CMatrix> = self.levels.iter().flat_map(|l| l.basis()).collect();
        for i in 0..self.n {
            for j in 0..self.n {
                samples.push(matrix_unit(self.n, i, j));
            }
        }
        let gauges: Vec<f64> = samples.iter().map(|a| self.displacement_gauge(a, cfg)).collect();
        let mut steps = Vec::new();
        for &t in &self.breakpoints {
            let inside: Vec<CMatrix> =
                samples.iter().zip(&gauges).filter(|(_, g)| time_leq(**g, t)).map(|(a, _)| a.clone()).collect();
            steps.push((t, OperatorSubspace::span(self.n, &inside, cfg)?));
        }
        Self::from_steps(self.n, steps)
    }

    /// Level-by-level equality of breakpoints and subspaces.
    pub fn equals(&self, other: &Self, cfg: &NumericConfig) -> bool {
        self.n == other.n
            && self.breakpoints.len() == other.breakpoints.len()
            && self
                .breakpoints
                .iter()
                .zip(&other.breakpoints)
                .all(|(a, b)| (a - b).abs() <= TIME_EPS * a.abs().max(1.0))
            && self.levels.iter().zip(&other.levels).all(|(a, b)| a.equals(b, cfg))
    }
}

/// Scalar summaries of a filtration.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptors {
    pub diameter: f64,
    /// Uniform discreteness gap `t₁` (`+∞` for a single level).
    pub discreteness_gap: f64,
    /// Path property over all real `s, t`.
    pub path: bool,
    /// Path identity restricted to breakpoint pairs.
    pub grid_path: bool,
}

/// The algebra `M` together with its cached commutant `M′`.
#[derive(Debug, Clone)]
pub struct MetricContext {
    pub algebra: VNAlgebra,
    pub commutant: VNAlgebra,
}

impl MetricContext {
    pub fn new(algebra: VNAlgebra, cfg: &NumericConfig) -> Result<Self> {
        let commutant = algebra.commutant(cfg)?;
        Ok(Self { algebra, commutant })
    }

    /// Build from a generating set of `M`.
    pub fn generated_by(gens: &[CMatrix], n: usize, cfg: &NumericConfig) -> Result<Self> {
        let algebra = crate::opspace::generated_vn_algebra(gens, n, cfg)?;
        let comm = commutant(gens, n, cfg)?;
        Ok(Self { algebra, commutant: comm })
    }

    /// `M = M_n`, `M′ = ℂI`.
    pub fn full(n: usize) -> Self {
        Self { algebra: VNAlgebra::full(n), commutant: VNAlgebra::scalars(n) }
    }

    /// `M = ℓ^∞(n)` as diagonal matrices; `M′ = M`.
    pub fn diagonal(n: usize) -> Self {
        Self { algebra: VNAlgebra::diagonal(n), commutant: VNAlgebra::diagonal(n) }
    }

    /// `M = ⊕ M_{n_i}`.
    pub fn block_diagonal(sizes: &[usize]) -> Self {
        Self { algebra: VNAlgebra::block_diagonal(sizes), commutant: VNAlgebra::block_scalars(sizes) }
    }

    pub fn ambient_dim(&self) -> usize {
        self.algebra.ambient_dim()
    }

    /// `M ⊗ N` with commutant `M′ ⊗ N′`.
    pub fn tensor(&self, other: &Self) -> Self {
        Self { algebra: self.algebra.tensor(&other.algebra), commutant: self.commutant.tensor(&other.commutant) }
    }

    /// `M ⊕ N` with commutant `M′ ⊕ N′`.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let n = self.ambient_dim();
        let k = other.ambient_dim();
        let embed = |alg: &VNAlgebra, offset: usize| -> Vec<CMatrix> {
            alg.as_subspace()
                .basis()
                .into_iter()
                .map(|b| {
                    let mut m = CMatrix::zeros(n + k, n + k);
                    m.view_mut((offset, offset), (b.nrows(), b.ncols())).copy_from(&b);
                    m
                })
                .collect()
        };
        let join = |a: &VNAlgebra, b: &VNAlgebra| {
            let mut mats = embed(a, 0);
            mats.extend(embed(b, n));
            VNAlgebra::new_unchecked(OperatorSubspace::from_orthonormal_unchecked(n + k, &mats))
        };
        Self { algebra: join(&self.algebra, &other.algebra), commutant: join(&self.commutant, &other.commutant) }
    }

    /// Restrict to the corner `U* (·) U` for an isometry `U` whose range
    /// projection lies in `M`.
    pub fn compress(&self, u: &CMatrix, cfg: &NumericConfig) -> Result<Self> {
        let alg = self.algebra.as_subspace().compress(u, cfg)?;
        let comm = self.commutant.as_subspace().compress(u, cfg)?;
        Ok(Self { algebra: VNAlgebra::new_unchecked(alg), commutant: VNAlgebra::new_unchecked(comm) })
    }
}

/// One failed axiom, with the level indices that witness it.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NotOperatorSystem { level: usize },
    NotNested { level: usize },
    ProductLaw { i: usize, j: usize },
    CommutantNotInV0,
    V0NotCommutant,
}

/// Result of [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub is_filtration: bool,
    pub is_pseudometric: bool,
    pub is_metric: bool,
    pub violations: Vec<Violation>,
}

/// Check the filtration axioms and, given a context, the (pseudo)metric conditions.
pub fn validate(f: &StepFiltration, ctx: Option<&MetricContext>, cfg: &NumericConfig) -> Result<ValidationReport> {
    let mut violations = Vec::new();
    for (i, l) in f.levels.iter().enumerate() {
        if !l.is_operator_system(cfg) {
            violations.push(Violation::NotOperatorSystem { level: i });
        }
        if i > 0 && !(l.dim() > f.levels[i - 1].dim() && l.contains_subspace(&f.levels[i - 1], cfg)) {
            violations.push(Violation::NotNested { level: i });
        }
    }
    let k = f.levels.len();
    for i in 0..k {
        for j in i..k {
            let target = f.value_at(f.breakpoints[i] + f.breakpoints[j])?;
            if target.is_full() {
                continue;
            }
            let left = f.levels[i].basis();
            let right = f.levels[j].basis();
            let ok = left
                .iter()
                .all(|a| right.iter().all(|b| target.contains(&(a * b), cfg) && target.contains(&(b * a), cfg)));
            if !ok {
                violations.push(Violation::ProductLaw { i, j });
            }
        }
    }
    let is_filtration = violations.is_empty();
    let (mut is_pseudometric, mut is_metric) = (false, false);
    if let Some(ctx) = ctx {
        if ctx.ambient_dim() != f.n {
            return Err(Error::MixedDimensions { expected: f.n, found: ctx.ambient_dim() });
        }
        let comm = ctx.commutant.as_subspace();
        let v0 = &f.levels[0];
        let contains_comm = v0.contains_subspace(comm, cfg);
        if !contains_comm {
            violations.push(Violation::CommutantNotInV0);
        }
        is_pseudometric = is_filtration && contains_comm;
        let equal = contains_comm && v0.dim() == comm.dim();
        if contains_comm && !equal {
            violations.push(Violation::V0NotCommutant);
        }
        is_metric = is_pseudometric && equal;
    }
    Ok(ValidationReport { is_filtration, is_pseudometric, is_metric, violations })
}

/// Filtration of a classical pseudometric `d` on `n` points over `ℓ^∞(n)`.
///
/// Entries may be `+∞`; the level at `t` spans the `E_xy` with `d(x,y) ≤ t`.
pub fn from_classical(d: &[Vec<f64>]) -> Result<(StepFiltration, MetricContext)> {
    let n = d.len();
    check_classical(d)?;
    let mut times: Vec<f64> = d.iter().flatten().copied().filter(|v| v.is_finite()).collect();
    times.push(0.0);
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut levels = Vec::with_capacity(times.len());
    for &t in &times {
        let pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|x| (0..n).map(move |y| (x, y))).filter(|&(x, y)| d[x][y] <= t).collect();
        levels.push(OperatorSubspace::from_matrix_units(n, &pairs));
    }
    Ok((StepFiltration::new(n, times, levels)?, MetricContext::diagonal(n)))
}

fn check_classical(d: &[Vec<f64>]) -> Result<()> {
    let n = d.len();
    if d.iter().any(|row| row.len() != n) {
        return Err(Error::NotAPseudometric("distance matrix is not square".into()));
    }
    for x in 0..n {
        if d[x][x] != 0.0 {
            return Err(Error::NotAPseudometric(format!("d({x},{x}) ≠ 0")));
        }
        for y in 0..n {
            let v = d[x][y];
            if v.is_nan() || v < 0.0 {
                return Err(Error::NotAPseudometric(format!("d({x},{y}) = {v}")));
            }
            if v != d[y][x] {
                return Err(Error::NotAPseudometric(format!("d({x},{y}) ≠ d({y},{x})")));
            }
            for z in 0..n {
                let via = d[x][z] + d[z][y];
                if v > via + TIME_EPS * via.max(1.0) {
                    return Err(Error::NotAPseudometric(format!("triangle inequality fails for ({x},{z},{y})")));
                }
            }
        }
    }
    Ok(())
}

/// Recover `d(x,y) = inf{t : some A ∈ V_t has ⟨A e_y, e_x⟩ ≠ 0}`.
pub fn to_classical(f: &StepFiltration, ctx: &MetricContext, cfg: &NumericConfig) -> Result<Vec<Vec<f64>>> {
    if ctx.ambient_dim() != f.n {
        return Err(Error::MixedDimensions { expected: f.n, found: ctx.ambient_dim() });
    }
    if !ctx.algebra.is_diagonal(cfg) {
        return Err(Error::NotDiagonalContext);
    }
    Ok(entry_distances(f, cfg))
}

/// Smallest breakpoint whose level has a nonzero `(x, y)` entry, for all pairs.
pub(crate) fn entry_distances(f: &StepFiltration, cfg: &NumericConfig) -> Vec<Vec<f64>> {
    let n = f.n;
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (t, level) in f.breakpoints.iter().zip(&f.levels).rev() {
        let vecs = level.basis_vectors();
        for x in 0..n {
            for y in 0..n {
                // column-major index of entry (x, y)
                let row = vecs.row(x + y * n);
                if row.iter().any(|z| z.norm() > cfg.membership_tol) {
                    d[x][y] = *t;
                }
            }
        }
    }
    d
}
