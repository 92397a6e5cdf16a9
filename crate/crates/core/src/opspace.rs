//! Linear subspaces of `M_n` under the Hilbert–Schmidt inner product.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{
    c, hs_norm, identity, matrix_unit, null_space, op_norm, range_basis, unvectorize, vectorize, CMatrix, NumericConfig,
};

/// A subspace of `M_n` stored as an HS-orthonormal basis.
///
/// Internally the basis is kept as the columns of an `n² × d` matrix of
/// column-major vectorizations.
#[derive(Debug, Clone)]
pub struct OperatorSubspace {
    n: usize,
    vecs: CMatrix,
}

impl OperatorSubspace {
    pub fn zero(n: usize) -> Self {
        Self { n, vecs: CMatrix::zeros(n * n, 0) }
    }

    /// `ℂI`.
    pub fn scalars(n: usize) -> Self {
        let unit = identity(n).scale(1.0 / (n as f64).sqrt());
        Self::from_orthonormal_unchecked(n, &[unit])
    }

    /// All of `M_n`.
    pub fn full(n: usize) -> Self {
        Self { n, vecs: CMatrix::identity(n * n, n * n) }
    }

    /// Diagonal matrices.
    pub fn diagonal(n: usize) -> Self {
        let units: Vec<CMatrix> = (0..n).map(|i| matrix_unit(n, i, i)).collect();
        Self::from_orthonormal_unchecked(n, &units)
    }

    /// Span of the given matrix units `E_ij`.
    pub fn from_matrix_units(n: usize, pairs: &[(usize, usize)]) -> Self {
        let mut seen = std::collections::BTreeSet::new();
        let units: Vec<CMatrix> =
            pairs.iter().filter(|p| seen.insert(**p)).map(|&(i, j)| matrix_unit(n, i, j)).collect();
        Self::from_orthonormal_unchecked(n, &units)
    }

    /// Wrap matrices already known to be HS-orthonormal.
    pub fn from_orthonormal(n: usize, mats: &[CMatrix], cfg: &NumericConfig) -> Result<Self> {
        check_dims(n, mats)?;
        let s = Self::from_orthonormal_unchecked(n, mats);
        let gram = s.vecs.adjoint() * &s.vecs;
        let err = hs_norm(&(gram - CMatrix::identity(mats.len(), mats.len())));
        if err > cfg.membership_tol {
            return Err(Error::InvalidParameter(format!("basis is not orthonormal (Gram error {err:.3e})")));
        }
        Ok(s)
    }

    pub(crate) fn from_orthonormal_unchecked(n: usize, mats: &[CMatrix]) -> Self {
        let mut vecs = CMatrix::zeros(n * n, mats.len());
        for (k, m) in mats.iter().enumerate() {
            vecs.set_column(k, &vectorize(m));
        }
        Self { n, vecs }
    }

    pub(crate) fn from_vecs(n: usize, vecs: CMatrix) -> Self {
        debug_assert_eq!(vecs.nrows(), n * n);
        Self { n, vecs }
    }

    /// HS-orthonormal basis of the linear span of `mats`.
    ///
    /// All inputs are divided by the largest HS norm before the rank decision.
    /// A common scale keeps round-off in near-zero products from being
    /// inflated into spurious directions.
    pub fn span(n: usize, mats: &[CMatrix], cfg: &NumericConfig) -> Result<Self> {
        check_dims(n, mats)?;
        let scale = mats.iter().map(hs_norm).fold(0.0, f64::max);
        if scale <= cfg.membership_tol {
            return Ok(Self::zero(n));
        }
        let mut stacked = CMatrix::zeros(n * n, mats.len());
        for (k, m) in mats.iter().enumerate() {
            stacked.set_column(k, &vectorize(m).unscale(scale));
        }
        Ok(Self { n, vecs: range_basis(&stacked, cfg) })
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.vecs.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn is_full(&self) -> bool {
        self.dim() == self.n * self.n
    }

    /// The `n² × d` matrix whose columns are the vectorized basis.
    pub fn basis_vectors(&self) -> &CMatrix {
        &self.vecs
    }

    pub fn element(&self, k: usize) -> CMatrix {
        unvectorize(self.vecs.column(k).as_slice(), self.n)
    }

    pub fn basis(&self) -> Vec<CMatrix> {
        (0..self.dim()).map(|k| self.element(k)).collect()
    }

    /// Coefficients `⟨B_k, A⟩` of the orthogonal projection onto the subspace.
    pub fn coefficients(&self, a: &CMatrix) -> Vec<Complex64> {
        let v = vectorize(a);
        (self.vecs.adjoint() * v).iter().copied().collect()
    }

    pub fn combine(&self, coeffs: &[Complex64]) -> CMatrix {
        let mut v = nalgebra::DVector::<Complex64>::zeros(self.n * self.n);
        for (k, z) in coeffs.iter().enumerate() {
            v += self.vecs.column(k) * *z;
        }
        unvectorize(v.as_slice(), self.n)
    }

    /// Orthogonal projection of `a` onto the subspace.
    pub fn project(&self, a: &CMatrix) -> CMatrix {
        let v = vectorize(a);
        let p = &self.vecs * (self.vecs.adjoint() * v);
        unvectorize(p.as_slice(), self.n)
    }

    /// HS distance from `a` to the subspace.
    pub fn residual(&self, a: &CMatrix) -> f64 {
        hs_norm(&(a - self.project(a)))
    }

    pub fn contains(&self, a: &CMatrix, cfg: &NumericConfig) -> bool {
        a.nrows() == self.n && a.ncols() == self.n && self.residual(a) <= cfg.membership_tol * hs_norm(a).max(1.0)
    }

    pub fn contains_subspace(&self, other: &Self, cfg: &NumericConfig) -> bool {
        if other.n != self.n {
            return false;
        }
        if self.is_full() || other.is_zero() {
            return true;
        }
        let inside = &self.vecs * (self.vecs.adjoint() * &other.vecs);
        (0..other.dim()).all(|k| (other.vecs.column(k) - inside.column(k)).norm() <= cfg.membership_tol)
    }

    /// Mutual containment.
    pub fn equals(&self, other: &Self, cfg: &NumericConfig) -> bool {
        self.dim() == other.dim() && self.contains_subspace(other, cfg) && other.contains_subspace(self, cfg)
    }

    /// HS-orthogonal complement in `M_n`.
    pub fn complement(&self, cfg: &NumericConfig) -> Self {
        if self.is_zero() {
            return Self::full(self.n);
        }
        Self { n: self.n, vecs: null_space(&self.vecs.adjoint(), cfg) }
    }

    pub fn sum(&self, other: &Self, cfg: &NumericConfig) -> Result<Self> {
        self.same_ambient(other)?;
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        let mut stacked = CMatrix::zeros(self.n * self.n, self.dim() + other.dim());
        stacked.columns_mut(0, self.dim()).copy_from(&self.vecs);
        stacked.columns_mut(self.dim(), other.dim()).copy_from(&other.vecs);
        Ok(Self { n: self.n, vecs: range_basis(&stacked, cfg) })
    }

    /// `S ∩ T = (S^⊥ + T^⊥)^⊥`.
    pub fn intersect(&self, other: &Self, cfg: &NumericConfig) -> Result<Self> {
        self.same_ambient(other)?;
        if self.is_full() {
            return Ok(other.clone());
        }
        if other.is_full() {
            return Ok(self.clone());
        }
        let perp = self.complement(cfg).sum(&other.complement(cfg), cfg)?;
        Ok(perp.complement(cfg))
    }

    /// `span{B_i C_j}`.
    pub fn product_span(&self, other: &Self, cfg: &NumericConfig) -> Result<Self> {
        self.same_ambient(other)?;
        let left = self.basis();
        let right = other.basis();
        let mut prods = Vec::with_capacity(left.len() * right.len());
        for b in &left {
            for cm in &right {
                prods.push(b * cm);
            }
        }
        Self::span(self.n, &prods, cfg)
    }

    /// `span{B_i*}`.
    pub fn adjoint(&self) -> Self {
        let mats: Vec<CMatrix> = self.basis().iter().map(|b| b.adjoint()).collect();
        Self::from_orthonormal_unchecked(self.n, &mats)
    }

    pub fn is_self_adjoint(&self, cfg: &NumericConfig) -> bool {
        self.basis().iter().all(|b| self.contains(&b.adjoint(), cfg))
    }

    pub fn is_unital(&self, cfg: &NumericConfig) -> bool {
        self.contains(&identity(self.n), cfg)
    }

    pub fn is_operator_system(&self, cfg: &NumericConfig) -> bool {
        self.is_unital(cfg) && self.is_self_adjoint(cfg)
    }

    /// `span{B_i ⊗ C_j}` in `M_{nm}`.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut mats = Vec::with_capacity(self.dim() * other.dim());
        let right = other.basis();
        for b in self.basis() {
            for cm in &right {
                mats.push(b.kronecker(cm));
            }
        }
        Self::from_orthonormal_unchecked(self.n * other.n, &mats)
    }

    /// `A·S·B ⊆ S` for all `A, B` in `algebra`.
    pub fn is_bimodule_over(&self, algebra: &Self, cfg: &NumericConfig) -> bool {
        let alg = algebra.basis();
        self.basis().iter().all(|s| alg.iter().all(|a| self.contains(&(a * s), cfg) && self.contains(&(s * a), cfg)))
    }

    /// `span{U* B U}` for an isometry `U: ℂ^r → ℂ^n`.
    pub fn compress(&self, u: &CMatrix, cfg: &NumericConfig) -> Result<Self> {
        if u.nrows() != self.n {
            return Err(Error::MixedDimensions { expected: self.n, found: u.nrows() });
        }
        let mats: Vec<CMatrix> = self.basis().iter().map(|b| u.adjoint() * b * u).collect();
        Self::span(u.ncols(), &mats, cfg)
    }

    /// Conjugate every element by a unitary: `U S U*`.
    pub fn conjugate(&self, u: &CMatrix) -> Self {
        let mats: Vec<CMatrix> = self.basis().iter().map(|b| u * b * u.adjoint()).collect();
        Self::from_orthonormal_unchecked(self.n, &mats)
    }

    fn same_ambient(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::MixedDimensions { expected: self.n, found: other.n });
        }
        Ok(())
    }
}

fn check_dims(n: usize, mats: &[CMatrix]) -> Result<()> {
    for m in mats {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::MixedDimensions { expected: n, found: m.nrows().max(m.ncols()) });
        }
    }
    Ok(())
}

/// A von Neumann subalgebra of `M_n`: unital, `*`-closed and product-closed.
#[derive(Debug, Clone)]
pub struct VNAlgebra {
    space: OperatorSubspace,
}

impl VNAlgebra {
    /// Verify closure and wrap.
    pub fn new(space: OperatorSubspace, cfg: &NumericConfig) -> Result<Self> {
        if !space.is_operator_system(cfg) {
            return Err(Error::NotSubalgebra("not a unital self-adjoint subspace".into()));
        }
        let basis = space.basis();
        for a in &basis {
            for b in &basis {
                if !space.contains(&(a * b), cfg) {
                    return Err(Error::NotSubalgebra("not closed under products".into()));
                }
            }
        }
        Ok(Self { space })
    }

    pub(crate) fn new_unchecked(space: OperatorSubspace) -> Self {
        Self { space }
    }

    pub fn scalars(n: usize) -> Self {
        Self { space: OperatorSubspace::scalars(n) }
    }

    pub fn full(n: usize) -> Self {
        Self { space: OperatorSubspace::full(n) }
    }

    pub fn diagonal(n: usize) -> Self {
        Self { space: OperatorSubspace::diagonal(n) }
    }

    /// `⊕ M_{n_i}` embedded block-diagonally.
    pub fn block_diagonal(sizes: &[usize]) -> Self {
        let n: usize = sizes.iter().sum();
        let mut pairs = Vec::new();
        let mut offset = 0;
        for &s in sizes {
            for i in 0..s {
                for j in 0..s {
                    pairs.push((offset + i, offset + j));
                }
            }
            offset += s;
        }
        Self { space: OperatorSubspace::from_matrix_units(n, &pairs) }
    }

    /// `⊕ ℂI_{n_i}`, the commutant of [`block_diagonal`](Self::block_diagonal).
    pub fn block_scalars(sizes: &[usize]) -> Self {
        let n: usize = sizes.iter().sum();
        let mut mats = Vec::new();
        let mut offset = 0;
        for &s in sizes {
            let mut m = CMatrix::zeros(n, n);
            for i in 0..s {
                m[(offset + i, offset + i)] = c(1.0 / (s as f64).sqrt(), 0.0);
            }
            mats.push(m);
            offset += s;
        }
        Self { space: OperatorSubspace::from_orthonormal_unchecked(n, &mats) }
    }

    pub fn as_subspace(&self) -> &OperatorSubspace {
        &self.space
    }

    pub fn ambient_dim(&self) -> usize {
        self.space.ambient_dim()
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn contains(&self, a: &CMatrix, cfg: &NumericConfig) -> bool {
        self.space.contains(a, cfg)
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self { space: self.space.tensor(&other.space) }
    }

    /// Commutant of this algebra.
    pub fn commutant(&self, cfg: &NumericConfig) -> Result<Self> {
        commutant(&self.space.basis(), self.ambient_dim(), cfg)
    }

    /// True when every element is a diagonal matrix.
    pub fn is_diagonal(&self, cfg: &NumericConfig) -> bool {
        OperatorSubspace::diagonal(self.ambient_dim()).contains_subspace(&self.space, cfg)
    }

    /// Central projections are the projections in `M ∩ M′`.
    pub fn is_central(&self, p: &CMatrix, cfg: &NumericConfig) -> bool {
        self.contains(p, cfg) && self.space.basis().iter().all(|a| hs_norm(&(a * p - p * a)) <= cfg.membership_tol)
    }
}

/// `{X : X A_i = A_i X for all i}`.
pub fn commutant(gens: &[CMatrix], n: usize, cfg: &NumericConfig) -> Result<VNAlgebra> {
    check_dims(n, gens)?;
    // Shrink the candidate space one generator at a time; each step is a small SVD.
    let mut z = CMatrix::identity(n * n, n * n);
    for g in gens {
        let scale = op_norm(g);
        if scale <= cfg.membership_tol {
            continue;
        }
        let a = g.unscale(scale);
        let mut image = CMatrix::zeros(n * n, z.ncols());
        for k in 0..z.ncols() {
            let x = unvectorize(z.column(k).as_slice(), n);
            image.set_column(k, &vectorize(&(&x * &a - &a * &x)));
        }
        if image.norm() <= cfg.membership_tol {
            continue;
        }
        let coeffs = null_space(&image, cfg);
        z = &z * coeffs;
        if z.ncols() == 0 {
            break;
        }
    }
    Ok(VNAlgebra::new_unchecked(OperatorSubspace::from_vecs(n, z)))
}

/// `W*(gens)`: the smallest unital `*`-subalgebra containing `gens`.
pub fn generated_vn_algebra(gens: &[CMatrix], n: usize, cfg: &NumericConfig) -> Result<VNAlgebra> {
    check_dims(n, gens)?;
    let mut letters: Vec<CMatrix> = Vec::new();
    for g in gens {
        letters.push(g.clone());
        letters.push(g.adjoint());
    }
    let mut seed = letters.clone();
    seed.push(identity(n));
    let mut current = OperatorSubspace::span(n, &seed, cfg)?;
    for _ in 0..=n * n {
        let mut words = current.basis();
        for b in current.basis() {
            for l in &letters {
                words.push(&b * l);
            }
        }
        let next = OperatorSubspace::span(n, &words, cfg)?;
        if next.dim() == current.dim() {
            return Ok(VNAlgebra::new_unchecked(next));
        }
        current = next;
    }
    Err(Error::NonConvergent(n * n))
}
