//! Shared random generators and brute-force oracles for the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use qwm_core::constructions::{generated_filtration, TimedGenerators};
use qwm_core::numerics::{identity, random, CMatrix};
use qwm_core::opspace::{OperatorSubspace, VNAlgebra};
use qwm_core::{MetricContext, NumericConfig, StepFiltration};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn cfg() -> NumericConfig {
    NumericConfig::default()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// Shortest-path closure of random positive weights along a spanning chain
/// plus random chords, so every entry is finite.
pub fn random_metric(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    let weight = |rng: &mut ChaCha8Rng| rng.random_range(1..=12) as f64 * 0.25;
    for i in 1..n {
        let w = weight(rng);
        d[i - 1][i] = w;
        d[i][i - 1] = w;
    }
    for i in 0..n {
        for j in (i + 2)..n {
            if rng.random_bool(0.5) {
                let w = weight(rng);
                d[i][j] = w;
                d[j][i] = w;
            }
        }
    }
    floyd_warshall(&mut d);
    d
}

pub fn floyd_warshall(d: &mut [Vec<f64>]) {
    let n = d.len();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
}

pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Vec<Vec<bool>> {
    let mut adj = vec![vec![false; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(p) {
                adj[i][j] = true;
                adj[j][i] = true;
            }
        }
    }
    adj
}

pub fn bfs_distances(adj: &[Vec<bool>]) -> Vec<Vec<f64>> {
    let n = adj.len();
    let mut out = vec![vec![f64::INFINITY; n]; n];
    for s in 0..n {
        let mut queue = std::collections::VecDeque::from([s]);
        out[s][s] = 0.0;
        while let Some(x) = queue.pop_front() {
            for y in 0..n {
                if adj[x][y] && out[s][y].is_infinite() {
                    out[s][y] = out[s][x] + 1.0;
                    queue.push_back(y);
                }
            }
        }
    }
    out
}

/// Brute-force Lipschitz constant of `f` on a finite metric space.
pub fn lipschitz_constant(d: &[Vec<f64>], f: &[f64]) -> f64 {
    let mut best = 0.0f64;
    for i in 0..f.len() {
        for j in 0..f.len() {
            if i != j {
                best = best.max((f[i] - f[j]).abs() / d[i][j]);
            }
        }
    }
    best
}

/// A random context of dimension 2 to 4: full matrix algebra, diagonal, or two blocks.
pub fn random_context(rng: &mut ChaCha8Rng) -> MetricContext {
    match rng.random_range(0..3) {
        0 => MetricContext::full(rng.random_range(2..=4)),
        1 => MetricContext::diagonal(rng.random_range(2..=4)),
        _ => {
            let a = rng.random_range(1..=2);
            MetricContext::block_diagonal(&[a, rng.random_range(1..=2)])
        }
    }
}

/// Random quantum metric over `ctx`: generated by one to three random
/// self-adjoint subspaces at random times, conjugated into a generic basis
/// when the context allows it.
pub fn random_filtration(rng: &mut ChaCha8Rng, ctx: &MetricContext) -> StepFiltration {
    let n = ctx.ambient_dim();
    let cfg = cfg();
    let count = rng.random_range(1..=3);
    let mut gens = Vec::new();
    for _ in 0..count {
        let k = rng.random_range(1..=2);
        let mats: Vec<CMatrix> = (0..k).map(|_| random::hermitian(rng, n)).collect();
        let t = rng.random_range(1..=8) as f64 * 0.5;
        gens.push((t, OperatorSubspace::span(n, &mats, &cfg).unwrap()));
    }
    let tg = TimedGenerators { base: ctx.commutant.clone(), gens };
    generated_filtration(&tg, None, &cfg).unwrap().filtration
}

/// Random pseudometric over the full algebra `M_n` whose floor is the diagonal algebra.
pub fn random_pseudometric(rng: &mut ChaCha8Rng, n: usize) -> StepFiltration {
    let cfg = cfg();
    let mats = vec![random::hermitian(rng, n)];
    let t = rng.random_range(1..=4) as f64 * 0.5;
    let tg = TimedGenerators {
        base: VNAlgebra::diagonal(n),
        gens: vec![(t, OperatorSubspace::span(n, &mats, &cfg).unwrap())],
    };
    generated_filtration(&tg, None, &cfg).unwrap().filtration
}

/// Random projection in `M ⊗ M_m`: the `(M′ ⊗ I)`-orbit of `rank` random vectors.
pub fn random_projection_in(rng: &mut ChaCha8Rng, ctx: &MetricContext, m: usize, rank: usize) -> CMatrix {
    let n = ctx.ambient_dim();
    let cols = random::gaussian(rng, n * m, rank);
    let comm = ctx.commutant.as_subspace().basis();
    let mut orbit = CMatrix::zeros(n * m, comm.len() * rank);
    for (i, x) in comm.iter().enumerate() {
        let img = x.kronecker(&identity(m)) * &cols;
        orbit.columns_mut(i * rank, rank).copy_from(&img);
    }
    qwm_core::numerics::range_projection(&orbit, &cfg())
}

pub fn approx(a: f64, b: f64, tol: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
