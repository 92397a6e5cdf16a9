//! Hamming-type error models and the geometry of quantum codes.

use num_complex::Complex64;

use crate::constructions::{generated_filtration, TimedGenerators};
use crate::error::{Error, Result};
use crate::filtration::{MetricContext, StepFiltration};
use crate::numerics::{c, hermitian_eig, hs_norm, is_projection, op_norm, projection_basis, CMatrix, NumericConfig};
use crate::opspace::{generated_vn_algebra, OperatorSubspace};

/// Largest total dimension accepted by the dense builders.
///
/// Levels are stored as `N² × dim` matrices, so a full level costs `N⁴` entries.
pub const DEFAULT_SIZE_CAP: usize = 32;

/// Orthonormal basis of `M_d`: `I/√d`, then the diagonal, symmetric and
/// antisymmetric generalized Gell-Mann matrices, each HS-normalized.
///
/// For `d = 2` this is `I, Z, X, Y` over `√2`.
pub fn local_basis(d: usize) -> Vec<CMatrix> {
    let mut out = vec![CMatrix::identity(d, d).unscale((d as f64).sqrt())];
    for k in 1..d {
        let mut m = CMatrix::zeros(d, d);
        for j in 0..k {
            m[(j, j)] = c(1.0, 0.0);
        }
        m[(k, k)] = c(-(k as f64), 0.0);
        out.push(m.unscale(((k * (k + 1)) as f64).sqrt()));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..d {
        for k in (j + 1)..d {
            let mut s = CMatrix::zeros(d, d);
            s[(j, k)] = c(h, 0.0);
            s[(k, j)] = c(h, 0.0);
            out.push(s);
            let mut a = CMatrix::zeros(d, d);
            a[(j, k)] = c(0.0, -h);
            a[(k, j)] = c(0.0, h);
            out.push(a);
        }
    }
    out
}

/// Label of a local basis index: `I, Z, X, Y` for qubits, `G<k>` otherwise.
pub fn local_label(d: usize, k: usize) -> String {
    if d == 2 {
        ["I", "Z", "X", "Y"][k].to_string()
    } else if k == 0 {
        "I".to_string()
    } else {
        format!("G{k}")
    }
}

/// Multi-indices of weight at most `t`, site 1 varying fastest.
fn multi_indices(n: usize, d: usize, t: usize) -> Vec<Vec<usize>> {
    let q = d * d;
    let total = q.pow(n as u32);
    let mut out = Vec::new();
    for mut code in 0..total {
        let mut idx = vec![0; n];
        for slot in idx.iter_mut() {
            *slot = code % q;
            code /= q;
        }
        if idx.iter().filter(|&&k| k != 0).count() <= t {
            out.push(idx);
        }
    }
    out
}

/// Elementary tensors of weight at most `t`, with their multi-indices.
///
/// Site 1 is the leftmost tensor factor, so the basis state `|x₁…x_n⟩` has
/// index `Σ x_i d^{n−i}`.
pub fn hamming_basis(n: usize, d: usize, t: usize) -> Vec<(Vec<usize>, CMatrix)> {
    let local = local_basis(d);
    multi_indices(n, d, t)
        .into_iter()
        .map(|idx| {
            let m = idx.iter().fold(CMatrix::identity(1, 1), |acc, &k| acc.kronecker(&local[k]));
            (idx, m)
        })
        .collect()
}

/// Readable name of a Hamming basis element, e.g. `Z1` or `X1 Z3`; `I` for the identity.
pub fn hamming_label(d: usize, idx: &[usize]) -> String {
    let parts: Vec<String> = idx
        .iter()
        .enumerate()
        .filter(|(_, &k)| k != 0)
        .map(|(site, &k)| format!("{}{}", local_label(d, k), site + 1))
        .collect();
    if parts.is_empty() {
        "I".to_string()
    } else {
        parts.join(" ")
    }
}

fn check_size(size: usize, cap: usize) -> Result<()> {
    if size > cap {
        return Err(Error::SizeLimit { size, cap });
    }
    Ok(())
}

/// The quantum Hamming metric on `n` qudits of dimension `d`, with the default size cap.
pub fn hamming_filtration(n: usize, d: usize) -> Result<StepFiltration> {
    hamming_filtration_capped(n, d, DEFAULT_SIZE_CAP)
}

/// Level `t` spans the elementary tensors with at most `⌊t⌋` non-identity factors.
pub fn hamming_filtration_capped(n: usize, d: usize, cap: usize) -> Result<StepFiltration> {
    if n == 0 || d < 2 {
        return Err(Error::InvalidParameter(format!("need n ≥ 1 and d ≥ 2, got n = {n}, d = {d}")));
    }
    let size = d.checked_pow(n as u32).ok_or(Error::SizeLimit { size: usize::MAX, cap })?;
    check_size(size, cap)?;
    let mut breakpoints = Vec::with_capacity(n + 1);
    let mut levels = Vec::with_capacity(n + 1);
    for t in 0..=n {
        let mats: Vec<CMatrix> = hamming_basis(n, d, t).into_iter().map(|(_, m)| m).collect();
        breakpoints.push(t as f64);
        levels.push(OperatorSubspace::from_orthonormal_unchecked(size, &mats));
    }
    StepFiltration::new(size, breakpoints, levels)
}

/// `dim V_t = Σ_{j ≤ t} C(n, j)(d² − 1)^j`.
pub fn hamming_level_dim(n: usize, d: usize, t: usize) -> usize {
    let mut binom = 1usize;
    let mut total = 1usize;
    for j in 1..=t.min(n) {
        binom = binom * (n - j + 1) / j;
        total += binom * (d * d - 1).pow(j as u32);
    }
    total
}

/// Mixed model on `⊕_i M_{2^{n_i}}`: `V_t = ⊕_i Ham_t(n_i)`.
///
/// This is the bimodule closure over the block scalars of the span of
/// direct sums with at most `⌊t⌋` non-identity factors in total.
pub fn block_filtration(blocks: &[usize]) -> Result<(StepFiltration, MetricContext)> {
    block_filtration_capped(blocks, DEFAULT_SIZE_CAP)
}

pub fn block_filtration_capped(blocks: &[usize], cap: usize) -> Result<(StepFiltration, MetricContext)> {
    if blocks.is_empty() {
        return Err(Error::InvalidParameter("need at least one block".into()));
    }
    let sizes: Vec<usize> = blocks.iter().map(|&b| 2usize.checked_pow(b as u32).unwrap_or(usize::MAX)).collect();
    let total = sizes.iter().try_fold(0usize, |acc, &s| acc.checked_add(s)).unwrap_or(usize::MAX);
    check_size(total, cap)?;
    let top = *blocks.iter().max().expect("nonempty");
    let mut breakpoints = Vec::with_capacity(top + 1);
    let mut levels = Vec::with_capacity(top + 1);
    for t in 0..=top {
        let mut mats = Vec::new();
        let mut offset = 0;
        for (&b, &s) in blocks.iter().zip(&sizes) {
            for (_, m) in hamming_basis(b, 2, t) {
                let mut e = CMatrix::zeros(total, total);
                e.view_mut((offset, offset), (s, s)).copy_from(&m);
                mats.push(e);
            }
            offset += s;
        }
        breakpoints.push(t as f64);
        levels.push(OperatorSubspace::from_orthonormal_unchecked(total, &mats));
    }
    Ok((StepFiltration::new(total, breakpoints, levels)?, MetricContext::block_diagonal(&sizes)))
}

/// A code subspace, given by its projection, inside an error model.
#[derive(Debug, Clone)]
pub struct QuantumCode {
    projection: CMatrix,
    model: StepFiltration,
}

impl QuantumCode {
    pub fn new(projection: CMatrix, model: StepFiltration, cfg: &NumericConfig) -> Result<Self> {
        let n = model.ambient_dim();
        if projection.nrows() != n || projection.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "code projection is {}x{}, model acts on {n}",
                projection.nrows(),
                projection.ncols()
            )));
        }
        if !is_projection(&projection, cfg.membership_tol.sqrt()) {
            return Err(Error::NotAProjection("code projection".into()));
        }
        if projection.trace().re < 0.5 {
            return Err(Error::ZeroProjection);
        }
        Ok(Self { projection, model })
    }

    /// Code spanned by the given vectors.
    pub fn from_vectors(vectors: &[Vec<Complex64>], model: StepFiltration, cfg: &NumericConfig) -> Result<Self> {
        let n = model.ambient_dim();
        let mut cols = CMatrix::zeros(n, vectors.len());
        for (k, v) in vectors.iter().enumerate() {
            if v.len() != n {
                return Err(Error::DimensionMismatch(format!("code vector of length {}", v.len())));
            }
            cols.set_column(k, &nalgebra::DVector::from_column_slice(v));
        }
        let p = crate::numerics::range_projection(&cols, cfg);
        Self::new(p, model, cfg)
    }

    pub fn projection(&self) -> &CMatrix {
        &self.projection
    }

    pub fn model(&self) -> &StepFiltration {
        &self.model
    }

    pub fn dim(&self) -> usize {
        self.projection.trace().re.round() as usize
    }

    /// `ε(A) = tr(PAP)/tr(P)`.
    pub fn epsilon(&self, a: &CMatrix) -> Complex64 {
        (&self.projection * a * &self.projection).trace() / self.projection.trace()
    }
}

/// Outcome of a Knill–Laflamme check on one level.
#[derive(Debug, Clone)]
pub struct KlReport {
    pub detects: bool,
    /// `ε(B)` for each basis element of the level, in basis order.
    pub epsilon: Vec<Complex64>,
    /// Largest `‖PBP − ε(B)P‖` (operator norm) and the basis index attaining it.
    pub worst_residual: f64,
    pub worst_index: usize,
    pub worst_operator: CMatrix,
}

/// Whether `PBP = ε(B)P` for every basis element `B` of `V_t`.
pub fn kl_check(code: &QuantumCode, t: f64, cfg: &NumericConfig) -> Result<KlReport> {
    let level = code.model.value_at(t)?;
    let p = &code.projection;
    let basis = level.basis();
    let mut epsilon = Vec::with_capacity(basis.len());
    let mut worst = (0.0f64, 0usize);
    let mut detects = true;
    for (k, b) in basis.iter().enumerate() {
        let eps = code.epsilon(b);
        let res = op_norm(&(p * b * p - p * eps));
        if res > worst.0 {
            worst = (res, k);
        }
        if res > cfg.membership_tol * hs_norm(b).max(1.0) {
            detects = false;
        }
        epsilon.push(eps);
    }
    Ok(KlReport {
        detects,
        epsilon,
        worst_residual: worst.0,
        worst_index: worst.1,
        worst_operator: basis.get(worst.1).cloned().unwrap_or_else(|| CMatrix::zeros(p.nrows(), p.ncols())),
    })
}

fn compressed_span(code: &QuantumCode, level: &OperatorSubspace, cfg: &NumericConfig) -> Result<OperatorSubspace> {
    let p = &code.projection;
    let mats: Vec<CMatrix> = level.basis().iter().map(|b| p * b * p).collect();
    OperatorSubspace::span(p.nrows(), &mats, cfg)
}

/// `δ(P) = sup{t : P V_t P = P V₀ P}`: the first breakpoint at which the
/// compressed span grows, or `+∞` if it never does.
pub fn min_distance(code: &QuantumCode, cfg: &NumericConfig) -> Result<f64> {
    let f = &code.model;
    let base = compressed_span(code, f.level(0), cfg)?.dim();
    for (t, level) in f.breakpoints().iter().zip(f.levels()).skip(1) {
        if compressed_span(code, level, cfg)?.dim() > base {
            return Ok(*t);
        }
    }
    Ok(f64::INFINITY)
}

/// Outcome of the volume bound `dim C ≤ dim H / dim K`.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeReport {
    pub code_dim: usize,
    pub dim_k: usize,
    pub bound: f64,
    pub holds: bool,
}

/// Volume bound for a code passing the KL check at level `k`, using the
/// Gram form `⟨A,B⟩ = ε(B*A)` on level `⌊k/2⌋`.
pub fn volume_bound(code: &QuantumCode, k: usize, cfg: &NumericConfig) -> Result<VolumeReport> {
    let kl = kl_check(code, k as f64, cfg)?;
    if !kl.detects {
        return Err(Error::NotACode(format!("KL condition fails at level {k} (residual {:.3e})", kl.worst_residual)));
    }
    let half = code.model.value_at((k / 2) as f64)?.basis();
    let m = half.len();
    let mut gram = CMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            gram[(i, j)] = code.epsilon(&(half[j].adjoint() * &half[i]));
        }
    }
    let spec = hermitian_eig(&gram, cfg)?;
    let top = spec.values.iter().copied().fold(0.0, f64::max);
    let cutoff = cfg.sv_cutoff(top);
    let dim_k: usize = spec
        .values
        .iter()
        .zip(&spec.projections)
        .filter(|(v, _)| **v > cutoff)
        .map(|(_, p)| p.trace().re.round() as usize)
        .sum();
    let n = code.model.ambient_dim();
    let bound = n as f64 / dim_k.max(1) as f64;
    let code_dim = code.dim();
    Ok(VolumeReport { code_dim, dim_k, bound, holds: code_dim as f64 <= bound + 1e-9 })
}

/// The smallest pseudometric on the corner `PMP` with `P V_t P ⊆ Ṽ_t`,
/// realized on `ran P`.
pub fn induced_metric(
    f: &StepFiltration,
    ctx: &MetricContext,
    p: &CMatrix,
    cfg: &NumericConfig,
) -> Result<(StepFiltration, MetricContext)> {
    if !is_projection(p, cfg.membership_tol.sqrt()) || p.nrows() != f.ambient_dim() {
        return Err(Error::NotAProjection("corner projection".into()));
    }
    if !ctx.algebra.contains(p, cfg) {
        return Err(Error::InvalidParameter("corner projection must lie in the algebra".into()));
    }
    let u = projection_basis(p, cfg);
    if u.ncols() == 0 {
        return Err(Error::ZeroProjection);
    }
    let r = u.ncols();
    let corner = ctx.compress(&u, cfg)?;
    let mut floor = corner.commutant.as_subspace().basis();
    floor.extend(f.level(0).compress(&u, cfg)?.basis());
    let base = generated_vn_algebra(&floor, r, cfg)?;
    let gens = f
        .breakpoints()
        .iter()
        .zip(f.levels())
        .skip(1)
        .map(|(t, l)| Ok((*t, l.compress(&u, cfg)?)))
        .collect::<Result<Vec<_>>>()?;
    let out = generated_filtration(&TimedGenerators { base, gens }, None, cfg)?;
    Ok((out.filtration, corner))
}
