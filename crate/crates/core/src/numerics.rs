//! Dense complex linear algebra primitives.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix, the ambient arithmetic object.
pub type CMatrix = DMatrix<Complex64>;

/// Tolerances shared by every rank and membership decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericConfig {
    /// Relative singular-value cutoff.
    pub rank_tol: f64,
    /// Residual Hilbert–Schmidt cutoff for membership tests.
    pub membership_tol: f64,
    /// Absolute width used to merge nearby eigenvalues.
    pub eig_cluster_tol: f64,
}

impl Default for NumericConfig {
    fn default() -> Self {
        Self { rank_tol: 1e-9, membership_tol: 1e-8, eig_cluster_tol: 1e-9 }
    }
}

impl NumericConfig {
    pub fn validate(&self) -> Result<()> {
        let all = [self.rank_tol, self.membership_tol, self.eig_cluster_tol];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidConfig("tolerances must be positive and finite".into()));
        }
        if self.rank_tol >= 1.0 {
            return Err(Error::InvalidConfig("rank_tol must be below 1".into()));
        }
        Ok(())
    }

    /// Singular values at or below this cutoff count as zero.
    ///
    /// The absolute floor keeps rank decisions consistent with [`contains`]
    /// style residual tests on unit-scale data.
    ///
    /// [`contains`]: crate::opspace::OperatorSubspace::contains
    pub fn sv_cutoff(&self, sigma_max: f64) -> f64 {
        (self.rank_tol * sigma_max).max(self.membership_tol)
    }
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Matrix unit `E_ij` in `M_n`.
pub fn matrix_unit(n: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    m[(i, j)] = c(1.0, 0.0);
    m
}

/// Real diagonal matrix.
pub fn diag(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { c(values[i], 0.0) } else { c(0.0, 0.0) })
}

/// Build a complex matrix from real row-major rows.
pub fn real_matrix(rows: &[Vec<f64>]) -> CMatrix {
    let r = rows.len();
    let cols = rows.first().map_or(0, |row| row.len());
    CMatrix::from_fn(r, cols, |i, j| c(rows[i][j], 0.0))
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `A ⊗ I_m`.
pub fn amplify(a: &CMatrix, m: usize) -> CMatrix {
    if m == 1 {
        a.clone()
    } else {
        a.kronecker(&identity(m))
    }
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn hs_norm(a: &CMatrix) -> f64 {
    a.norm()
}

/// `tr(A* B)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Complex64 {
    a.dotc(b)
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.trace()
}

pub fn is_finite(a: &CMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Column-major vectorization; `hs_inner(A, B) = vec(A)* vec(B)`.
pub fn vectorize(a: &CMatrix) -> DVector<Complex64> {
    DVector::from_column_slice(a.as_slice())
}

pub fn unvectorize(v: &[Complex64], n: usize) -> CMatrix {
    CMatrix::from_column_slice(n, n, v)
}

fn singular_values(a: &CMatrix) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    a.clone().svd(false, false).singular_values.iter().copied().collect()
}

/// Operator norm (largest singular value).
pub fn op_norm(a: &CMatrix) -> f64 {
    singular_values(a).into_iter().fold(0.0, f64::max)
}

pub fn ensure_square(a: &CMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::NonSquare { rows: a.nrows(), cols: a.ncols() });
    }
    Ok(a.nrows())
}

/// Check `‖A − A*‖ ≤ membership_tol·‖A‖` and return the symmetrized matrix.
pub fn hermitian_part(a: &CMatrix, cfg: &NumericConfig) -> Result<CMatrix> {
    ensure_square(a)?;
    if !is_finite(a) {
        return Err(Error::NonFinite);
    }
    let asym = op_norm(&(a - a.adjoint()));
    if asym > cfg.membership_tol * op_norm(a) {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    Ok((a + a.adjoint()).scale(0.5))
}

/// Distinct eigenvalues (ascending) with their spectral projections.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub projections: Vec<CMatrix>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.projections.first().map_or(0, |p| p.nrows())
    }

    /// `Σ_{λ_k ≤ λ_i} P_k`.
    pub fn below(&self, i: usize) -> CMatrix {
        self.projections[..=i].iter().fold(CMatrix::zeros(self.dim(), self.dim()), |acc, p| acc + p)
    }

    /// `Σ_{λ_k ≥ λ_j} P_k`.
    pub fn above(&self, j: usize) -> CMatrix {
        self.projections[j..].iter().fold(CMatrix::zeros(self.dim(), self.dim()), |acc, p| acc + p)
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.values
            .iter()
            .zip(&self.projections)
            .fold(CMatrix::zeros(self.dim(), self.dim()), |acc, (l, p)| acc + p.scale(*l))
    }
}

/// Eigendecomposition of a Hermitian matrix with clustered eigenvalues.
pub fn hermitian_eig(a: &CMatrix, cfg: &NumericConfig) -> Result<Spectrum> {
    let h = hermitian_part(a, cfg)?;
    let n = h.nrows();
    if n == 0 {
        return Ok(Spectrum { values: Vec::new(), projections: Vec::new() });
    }
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let mut values = Vec::new();
    let mut projections = Vec::new();
    let mut group: Vec<usize> = Vec::new();
    let flush = |group: &mut Vec<usize>, values: &mut Vec<f64>, projections: &mut Vec<CMatrix>| {
        if group.is_empty() {
            return;
        }
        let mean = group.iter().map(|&k| eig.eigenvalues[k]).sum::<f64>() / group.len() as f64;
        let mut p = CMatrix::zeros(n, n);
        for &k in group.iter() {
            let v = eig.eigenvectors.column(k);
            p += v * v.adjoint();
        }
        values.push(mean);
        projections.push(p);
        group.clear();
    };
    for &k in &order {
        if let Some(&last) = group.last() {
            if eig.eigenvalues[k] - eig.eigenvalues[last] > cfg.eig_cluster_tol {
                flush(&mut group, &mut values, &mut projections);
            }
        }
        group.push(k);
    }
    flush(&mut group, &mut values, &mut projections);
    Ok(Spectrum { values, projections })
}

/// Closed half-line of the spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HalfLine {
    AtMost(f64),
    AtLeast(f64),
}

/// `P_{(−∞,a]}(A)` or `P_{[b,∞)}(A)`, boundary inclusive within `eig_cluster_tol`.
pub fn spectral_projection(a: &CMatrix, half: HalfLine, cfg: &NumericConfig) -> Result<CMatrix> {
    let spec = hermitian_eig(a, cfg)?;
    let n = a.nrows();
    let mut p = CMatrix::zeros(n, n);
    for (l, q) in spec.values.iter().zip(&spec.projections) {
        let keep = match half {
            HalfLine::AtMost(x) => *l <= x + cfg.eig_cluster_tol,
            HalfLine::AtLeast(x) => *l >= x - cfg.eig_cluster_tol,
        };
        if keep {
            p += q;
        }
    }
    Ok(p)
}

/// Orthonormal basis (as columns) of the column span of `a`.
///
/// Rank is revealed by column-pivoted Householder QR, with the cutoff taken
/// relative to the leading pivot.
pub fn range_basis(a: &CMatrix, cfg: &NumericConfig) -> CMatrix {
    let rows = a.nrows();
    if rows == 0 || a.ncols() == 0 {
        return CMatrix::zeros(rows, 0);
    }
    let qr = a.clone().col_piv_qr();
    let r = qr.r();
    let pivots: Vec<f64> = (0..r.nrows().min(r.ncols())).map(|i| r[(i, i)].norm()).collect();
    let cut = cfg.sv_cutoff(pivots[0]);
    let rank = pivots.iter().take_while(|&&d| d > cut).count();
    qr.q().columns(0, rank).into_owned()
}

/// Orthonormal basis (as columns) of the null space of `a`.
pub fn null_space(a: &CMatrix, cfg: &NumericConfig) -> CMatrix {
    let cols = a.ncols();
    if cols == 0 {
        return CMatrix::zeros(0, 0);
    }
    let rows = range_basis(&a.adjoint(), cfg);
    let complement = CMatrix::identity(cols, cols) - &rows * rows.adjoint();
    range_basis(&complement, cfg)
}

/// Orthogonal projection `[A]` onto the column span of `a`.
pub fn range_projection(a: &CMatrix, cfg: &NumericConfig) -> CMatrix {
    let u = range_basis(a, cfg);
    &u * u.adjoint()
}

/// Orthonormal basis of the range of a projection.
pub fn projection_basis(p: &CMatrix, cfg: &NumericConfig) -> CMatrix {
    range_basis(p, cfg)
}

pub fn is_projection(p: &CMatrix, tol: f64) -> bool {
    p.nrows() == p.ncols() && hs_norm(&(p - p.adjoint())) <= tol && hs_norm(&(p * p - p)) <= tol
}

/// `P ≤ Q` for projections, i.e. `(I − Q)P = 0`.
pub fn projection_leq(p: &CMatrix, q: &CMatrix, tol: f64) -> bool {
    hs_norm(&(p - q * p)) <= tol
}

pub fn projection_rank(p: &CMatrix) -> usize {
    trace(p).re.round().max(0.0) as usize
}

/// Projection onto the orthogonal complement.
pub fn complement_projection(p: &CMatrix) -> CMatrix {
    identity(p.nrows()) - p
}


/// Random test and restart data.
pub mod random {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    pub fn gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| {
            c(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
        })
    }

    pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
        let g = gaussian(rng, n, n);
        (&g + g.adjoint()).scale(0.5)
    }

    /// Haar-ish unitary from the QR factor of a Gaussian matrix.
    pub fn unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
        gaussian(rng, n, n).qr().q()
    }

    /// Random orthogonal projection of the given rank.
    pub fn projection<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> CMatrix {
        let u = unitary(rng, n);
        let v = u.columns(0, rank);
        v * v.adjoint()
    }
}
