//! The distance function ρ on amplified projections and the geometry built on it.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::filtration::{MetricContext, StepFiltration, TIME_EPS};
use crate::numerics::{
    amplify, c, hs_norm, identity, is_projection, matrix_unit, null_space, projection_basis, projection_leq,
    range_basis, range_projection, CMatrix, NumericConfig,
};
use crate::opspace::OperatorSubspace;

/// An orthogonal projection in `M_n ⊗ M_m`.
///
/// The amplification slot is the right tensor factor, so an operator `A` on
/// the base space acts as `A ⊗ I_m`.
#[derive(Debug, Clone)]
pub struct AmplifiedProjection {
    n: usize,
    m: usize,
    matrix: CMatrix,
}

impl AmplifiedProjection {
    pub fn new(n: usize, m: usize, matrix: CMatrix, cfg: &NumericConfig) -> Result<Self> {
        if m == 0 || matrix.nrows() != n * m || matrix.ncols() != n * m {
            return Err(Error::DimensionMismatch(format!(
                "projection is {}x{}, expected {}",
                matrix.nrows(),
                matrix.ncols(),
                n * m
            )));
        }
        if !is_projection(&matrix, cfg.membership_tol.max(1e-10) * (n * m) as f64) {
            return Err(Error::NotAProjection("P ≠ P* or P² ≠ P".into()));
        }
        let matrix = (&matrix + matrix.adjoint()).scale(0.5);
        Ok(Self { n, m, matrix })
    }

    /// Unamplified projection (`m = 1`).
    pub fn base(matrix: CMatrix, cfg: &NumericConfig) -> Result<Self> {
        let n = matrix.nrows();
        Self::new(n, 1, matrix, cfg)
    }

    pub(crate) fn from_parts_unchecked(n: usize, m: usize, matrix: CMatrix) -> Self {
        Self { n, m, matrix }
    }

    /// Projection onto the span of the given columns.
    pub fn range_of(n: usize, m: usize, columns: &CMatrix, cfg: &NumericConfig) -> Self {
        Self { n, m, matrix: range_projection(columns, cfg) }
    }

    pub fn zero(n: usize, m: usize) -> Self {
        Self { n, m, matrix: CMatrix::zeros(n * m, n * m) }
    }

    pub fn identity(n: usize, m: usize) -> Self {
        Self { n, m, matrix: identity(n * m) }
    }

    pub fn base_dim(&self) -> usize {
        self.n
    }

    pub fn amp_degree(&self) -> usize {
        self.m
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.matrix.trace().re.round().max(0.0) as usize
    }

    pub fn is_zero(&self, cfg: &NumericConfig) -> bool {
        hs_norm(&self.matrix) <= cfg.membership_tol
    }

    pub fn complement(&self) -> Self {
        Self { n: self.n, m: self.m, matrix: identity(self.n * self.m) - &self.matrix }
    }

    /// Embed into a larger amplification by adding zero slots.
    pub fn pad_to(&self, m: usize) -> Result<Self> {
        if m < self.m {
            return Err(Error::DimensionMismatch(format!("cannot pad degree {} down to {m}", self.m)));
        }
        if m == self.m {
            return Ok(self.clone());
        }
        let mut out = CMatrix::zeros(self.n * m, self.n * m);
        for i in 0..self.n {
            for a in 0..self.m {
                for j in 0..self.n {
                    for b in 0..self.m {
                        out[(i * m + a, j * m + b)] = self.matrix[(i * self.m + a, j * self.m + b)];
                    }
                }
            }
        }
        Ok(Self { n: self.n, m, matrix: out })
    }

    /// `P ∈ M ⊗ M_m`, i.e. `P` commutes with `M′ ⊗ I_m`.
    pub fn lies_in(&self, ctx: &MetricContext, cfg: &NumericConfig) -> bool {
        ctx.commutant.as_subspace().basis().iter().all(|x| {
            let xa = amplify(x, self.m);
            hs_norm(&(&xa * &self.matrix - &self.matrix * &xa)) <= cfg.membership_tol
        })
    }

    /// `P ∨ Q`.
    pub fn join(&self, other: &Self, cfg: &NumericConfig) -> Result<Self> {
        let (p, q) = align(self, other)?;
        let mut cols = CMatrix::zeros(p.n * p.m, 2 * p.n * p.m);
        cols.columns_mut(0, p.n * p.m).copy_from(&p.matrix);
        cols.columns_mut(p.n * p.m, p.n * p.m).copy_from(&q.matrix);
        Ok(Self::range_of(p.n, p.m, &cols, cfg))
    }

    /// `P ≤ Q`.
    pub fn leq(&self, other: &Self, cfg: &NumericConfig) -> Result<bool> {
        let (p, q) = align(self, other)?;
        Ok(projection_leq(&p.matrix, &q.matrix, cfg.membership_tol.sqrt()))
    }
}

/// Pad the smaller amplification so both projections share one degree.
pub fn align(p: &AmplifiedProjection, q: &AmplifiedProjection) -> Result<(AmplifiedProjection, AmplifiedProjection)> {
    if p.n != q.n {
        return Err(Error::DimensionMismatch(format!("base dims {} and {}", p.n, q.n)));
    }
    let m = p.m.max(q.m);
    Ok((p.pad_to(m)?, q.pad_to(m)?))
}

/// Compressions `U_P* (B ⊗ I) U_Q` for the range bases of `P` and `Q`.
struct Compressor {
    m: usize,
    up: CMatrix,
    uq: CMatrix,
}

impl Compressor {
    fn new(p: &AmplifiedProjection, q: &AmplifiedProjection, cfg: &NumericConfig) -> Self {
        Self { m: p.m, up: projection_basis(&p.matrix, cfg), uq: projection_basis(&q.matrix, cfg) }
    }

    fn empty(&self) -> bool {
        self.up.ncols() == 0 || self.uq.ncols() == 0
    }

    fn compress(&self, b: &CMatrix) -> CMatrix {
        self.up.adjoint() * amplify(b, self.m) * &self.uq
    }

    fn links(&self, level: &OperatorSubspace, cfg: &NumericConfig) -> bool {
        !self.empty() && level.basis().iter().any(|b| hs_norm(&self.compress(b)) > cfg.membership_tol)
    }
}

/// `ρ(P,Q) = inf{t : P(A⊗I)Q ≠ 0 for some A ∈ V_t}`.
///
/// Linearity reduces the infimum to a scan of each level's basis.
pub fn rho(f: &StepFiltration, p: &AmplifiedProjection, q: &AmplifiedProjection, cfg: &NumericConfig) -> Result<f64> {
    check_base(f, p)?;
    let (p, q) = align(p, q)?;
    let comp = Compressor::new(&p, &q, cfg);
    if comp.empty() {
        return Ok(f64::INFINITY);
    }
    for (t, level) in f.breakpoints().iter().zip(f.levels()) {
        if comp.links(level, cfg) {
            return Ok(*t);
        }
    }
    Ok(f64::INFINITY)
}

fn check_base(f: &StepFiltration, p: &AmplifiedProjection) -> Result<()> {
    if p.n != f.ambient_dim() {
        return Err(Error::DimensionMismatch(format!(
            "projection base dim {} vs filtration dim {}",
            p.n,
            f.ambient_dim()
        )));
    }
    Ok(())
}

/// Whether some `A ∈ M_n` has `P(A⊗I)Q ≠ 0`.
pub fn linkable(p: &AmplifiedProjection, q: &AmplifiedProjection, cfg: &NumericConfig) -> Result<bool> {
    let (p, q) = align(p, q)?;
    let comp = Compressor::new(&p, &q, cfg);
    if comp.empty() {
        return Ok(false);
    }
    let n = p.n;
    for i in 0..n {
        for j in 0..n {
            if hs_norm(&comp.compress(&matrix_unit(n, i, j))) > cfg.membership_tol {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Range projection of `span{(B⊗I)v : B ∈ level, v ∈ ran P}`.
pub(crate) fn orbit_projection(
    level: &OperatorSubspace,
    p: &AmplifiedProjection,
    cfg: &NumericConfig,
) -> AmplifiedProjection {
    let up = projection_basis(&p.matrix, cfg);
    let basis = level.basis();
    let size = p.n * p.m;
    let mut cols = CMatrix::zeros(size, basis.len() * up.ncols());
    for (k, b) in basis.iter().enumerate() {
        let img = amplify(b, p.m) * &up;
        cols.columns_mut(k * up.ncols(), up.ncols()).copy_from(&img);
    }
    AmplifiedProjection::range_of(p.n, p.m, &cols, cfg)
}

/// Open ε-neighborhood `(P)_ε`: the range projection of `V_{<ε} · ran P`.
pub fn neighborhood(
    f: &StepFiltration,
    p: &AmplifiedProjection,
    eps: f64,
    cfg: &NumericConfig,
) -> Result<AmplifiedProjection> {
    check_base(f, p)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("neighborhood radius {eps} must be positive")));
    }
    Ok(orbit_projection(&f.v_less_than(eps)?, p, cfg))
}

/// Closure of `P`: the range projection of `V₀ · ran P`.
pub fn closure(f: &StepFiltration, p: &AmplifiedProjection, cfg: &NumericConfig) -> Result<AmplifiedProjection> {
    check_base(f, p)?;
    Ok(orbit_projection(f.level(0), p, cfg))
}

pub fn is_closed(f: &StepFiltration, p: &AmplifiedProjection, cfg: &NumericConfig) -> Result<bool> {
    let cl = closure(f, p, cfg)?;
    Ok(hs_norm(&(cl.matrix() - p.matrix())) <= cfg.membership_tol.sqrt())
}

/// `inf{ε : P ≤ (Q)_ε and Q ≤ (P)_ε}`.
///
/// `(Q)_ε` only changes as ε crosses a breakpoint, and on `(t_i, t_{i+1}]`
/// it is built from level `i`; the infimum is therefore the first breakpoint
/// whose level makes both inclusions hold.
pub fn hausdorff_distance(
    f: &StepFiltration,
    p: &AmplifiedProjection,
    q: &AmplifiedProjection,
    cfg: &NumericConfig,
) -> Result<f64> {
    check_base(f, p)?;
    let (p, q) = align(p, q)?;
    for (t, level) in f.breakpoints().iter().zip(f.levels()) {
        let qn = orbit_projection(level, &q, cfg);
        let pn = orbit_projection(level, &p, cfg);
        if p.leq(&qn, cfg)? && q.leq(&pn, cfg)? {
            return Ok(*t);
        }
    }
    Ok(f64::INFINITY)
}

/// Projections `P, Q ∈ M ⊗ M_n` with `P(A⊗I)Q ≠ 0` but `P(B⊗I)Q = 0` for `B ∈ V_t`.
///
/// With `C` the component of `A` orthogonal to `V_t` and `C = Σ w_i v_i*`,
/// set `η = Σ v_i ⊗ e_i`, `ξ = Σ w_i ⊗ e_i`. Then `⟨(B⊗I)η, ξ⟩ = ⟨C, B⟩`
/// vanishes on `V_t` and equals `‖C‖²` at `A`. `Q` is the `(M′⊗I)`-orbit
/// of `η`, and `P` is the complement of `(V_t ⊗ I)·ran Q`, which misses `ξ`.
pub fn separating_projections(
    f: &StepFiltration,
    ctx: &MetricContext,
    t: f64,
    a: &CMatrix,
    cfg: &NumericConfig,
) -> Result<(AmplifiedProjection, AmplifiedProjection)> {
    let n = f.ambient_dim();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch(format!("matrix is {}x{}", a.nrows(), a.ncols())));
    }
    let level = f.value_at(t)?;
    if level.contains(a, cfg) {
        return Err(Error::AlreadyInside);
    }
    let cmat = a - level.project(a);
    let svd = cmat.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let m = n;
    let mut eta = CMatrix::zeros(n * m, 1);
    let mut xi = CMatrix::zeros(n * m, 1);
    for i in 0..svd.singular_values.len() {
        let s = svd.singular_values[i];
        for j in 0..n {
            eta[(j * m + i, 0)] = v_t[(i, j)].conj();
            xi[(j * m + i, 0)] = u[(j, i)] * c(s, 0.0);
        }
    }

    let comm = ctx.commutant.as_subspace().basis();
    let mut orbit = CMatrix::zeros(n * m, comm.len());
    for (k, x) in comm.iter().enumerate() {
        orbit.set_column(k, &(amplify(x, m) * &eta).column(0));
    }
    let q = AmplifiedProjection::range_of(n, m, &orbit, cfg);
    let l = orbit_projection(&level, &q, cfg);
    let p = l.complement();

    let comp = Compressor::new(&p, &q, cfg);
    let hits = hs_norm(&comp.compress(a)) > cfg.membership_tol;
    let clean = !comp.links(&level, cfg);
    if !(hits && clean) {
        return Err(Error::PostconditionFailed(format!(
            "separation failed (hits A: {hits}, vanishes on level: {clean})"
        )));
    }
    Ok((p, q))
}

/// `{A : P(A⊗I)Q = 0 for every probe with ρ(P,Q) > t}`.
pub fn rebuild_level(
    f: &StepFiltration,
    t: f64,
    probes: &[(AmplifiedProjection, AmplifiedProjection)],
    cfg: &NumericConfig,
) -> Result<OperatorSubspace> {
    let n = f.ambient_dim();
    let mut z = CMatrix::identity(n * n, n * n);
    for (p, q) in probes {
        let r = rho(f, p, q, cfg)?;
        if r <= t + TIME_EPS * t.abs().max(1.0) {
            continue;
        }
        z = restrict_to_kernel(&z, n, p, q, cfg)?;
        if z.ncols() == 0 {
            break;
        }
    }
    Ok(OperatorSubspace::from_vecs(n, z))
}

/// Columns of `z` (vectorized matrices) restricted to the kernel of `A ↦ P(A⊗I)Q`.
fn restrict_to_kernel(
    z: &CMatrix,
    n: usize,
    p: &AmplifiedProjection,
    q: &AmplifiedProjection,
    cfg: &NumericConfig,
) -> Result<CMatrix> {
    let (p, q) = align(p, q)?;
    let comp = Compressor::new(&p, &q, cfg);
    if comp.empty() {
        return Ok(z.clone());
    }
    let rows = comp.up.ncols() * comp.uq.ncols();
    let mut image = CMatrix::zeros(rows, z.ncols());
    for k in 0..z.ncols() {
        let a = crate::numerics::unvectorize(z.column(k).as_slice(), n);
        let img = comp.compress(&a);
        image.set_column(k, &nalgebra::DVector::from_column_slice(img.as_slice()));
    }
    if image.norm() <= cfg.membership_tol {
        return Ok(z.clone());
    }
    Ok(z * null_space(&image, cfg))
}

/// Probe pairs sufficient to recover `V_t` with [`rebuild_level`].
///
/// Probes are generated adaptively: while the constrained space still exceeds
/// `V_t`, one of its elements outside `V_t` is separated and the new probe's
/// kernel cuts the space down. Each probe removes at least one dimension.
pub fn separation_probes(
    f: &StepFiltration,
    ctx: &MetricContext,
    t: f64,
    cfg: &NumericConfig,
) -> Result<Vec<(AmplifiedProjection, AmplifiedProjection)>> {
    let n = f.ambient_dim();
    let target = f.value_at(t)?;
    let mut z = CMatrix::identity(n * n, n * n);
    let mut probes = Vec::new();
    for _ in 0..=n * n {
        if z.ncols() <= target.dim() {
            return Ok(probes);
        }
        let current = OperatorSubspace::from_vecs(n, z.clone());
        let candidate = current
            .basis()
            .into_iter()
            .map(|b| {
                let r = target.residual(&b);
                (r, b)
            })
            .max_by(|x, y| x.0.total_cmp(&y.0));
        let Some((res, a)) = candidate else { return Ok(probes) };
        if res <= cfg.membership_tol {
            return Ok(probes);
        }
        let (p, q) = separating_projections(f, ctx, t, &a, cfg)?;
        z = restrict_to_kernel(&z, n, &p, &q, cfg)?;
        probes.push((p, q));
    }
    Err(Error::NonConvergent(n * n))
}

/// For each level jump, a separated pair realizing that breakpoint as a distance.
pub fn jump_witnesses(
    f: &StepFiltration,
    ctx: &MetricContext,
    cfg: &NumericConfig,
) -> Result<Vec<(f64, AmplifiedProjection, AmplifiedProjection)>> {
    let mut out = Vec::new();
    for i in 1..f.num_levels() {
        let prev = f.level(i - 1);
        let a = f
            .level(i)
            .basis()
            .into_iter()
            .max_by(|x, y| prev.residual(x).total_cmp(&prev.residual(y)))
            .expect("a strictly larger level has a basis");
        let (p, q) = separating_projections(f, ctx, f.breakpoints()[i - 1], &a, cfg)?;
        out.push((rho(f, &p, &q, cfg)?, p, q));
    }
    Ok(out)
}

/// Rank-one projection onto a vector (normalized internally).
pub fn vector_projection(v: &[Complex64], cfg: &NumericConfig) -> Result<CMatrix> {
    let col = CMatrix::from_column_slice(v.len(), 1, v);
    if col.norm() <= cfg.membership_tol {
        return Err(Error::ZeroProjection);
    }
    let u = range_basis(&col, cfg);
    Ok(&u * u.adjoint())
}
