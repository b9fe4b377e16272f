//! Numerical compilation of a target unitary from local layers and forward
//! applications of an imprimitive generator.
//!
//! For a fixed number of queries `k` the local layers are optimized by
//! alternating polar updates: with every other factor held fixed,
//! `|tr(T^dag E)|` is linear in one local factor and the optimal unitary
//! comes from an SVD. Each update is monotone in the fidelity.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bipartite::{classify_matrix, DEFAULT_CLASSIFY_TOL};
use crate::error::{dims_mismatch, Error, Result};
use crate::linalg::{aligned_distance, checked_svd, identity, phase_distance_unchecked, random_unitary, BipartiteUnitary, CMatrix};
use crate::sequential::mix_seed;
use crate::template::{CircuitTemplate, LocalLayer};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SynthesisConfig {
    /// Required phase distance to the target.
    pub epsilon: f64,
    pub k_min: usize,
    pub k_max: usize,
    pub restarts: usize,
    pub seed: u64,
    pub max_sweeps: usize,
    /// A restart stops once `1 - |tr(T^dag E)|/d` falls below this.
    pub fidelity_tol: f64,
    pub classify_tol: f64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            k_min: 0,
            k_max: 12,
            restarts: 16,
            seed: 0,
            max_sweeps: 3000,
            fidelity_tol: 1e-15,
            classify_tol: DEFAULT_CLASSIFY_TOL,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SynthesisResult {
    pub template: CircuitTemplate,
    /// `phase_distance(evaluate(template, generator), target)`.
    pub delta: f64,
    /// Operator-norm distance after aligning the global phase.
    pub op_error: f64,
    pub layer_count: usize,
    /// Seed of the winning restart.
    pub seed: u64,
    /// Best delta seen so far, after each `k` tried.
    pub delta_trace: Vec<f64>,
}

/// `sum_i uses_i * delta_i`.
pub fn error_budget(uses: &[(usize, f64)]) -> f64 {
    uses.iter().map(|&(n, d)| n as f64 * d).sum()
}

pub fn synthesize(target: &BipartiteUnitary, generator: &BipartiteUnitary, cfg: &SynthesisConfig) -> Result<SynthesisResult> {
    if target.dims() != generator.dims() {
        return Err(dims_mismatch("synthesize", target.dims(), generator.dims()));
    }
    let (d_a, d_b) = target.dims();
    if classify_matrix(generator.matrix(), d_a, d_b, cfg.classify_tol)?.is_primitive() {
        return Err(Error::GeneratorPrimitive);
    }
    let x = generator.matrix();
    let t_dag = target.matrix().adjoint();

    let mut best: Option<(f64, u64, CircuitTemplate, usize)> = None;
    let mut trace = Vec::new();
    for k in cfg.k_min..=cfg.k_max {
        let warm = best.as_ref().map(|b| b.2.padded()).filter(|t| t.query_count() == k);
        let runs: Vec<(f64, usize, u64, CircuitTemplate)> = (0..cfg.restarts.max(1))
            .into_par_iter()
            .map(|r| {
                let seed = mix_seed(cfg.seed, k as u64, r as u64);
                let start = match (r, &warm) {
                    (0, _) => identity_template(d_a, d_b, k),
                    (1, Some(w)) => w.clone(),
                    _ => random_template(d_a, d_b, k, seed),
                };
                let t = optimize(start, x, &t_dag, cfg);
                let delta = phase_distance_unchecked(&t.evaluate_matrix(x), target.matrix());
                (delta, r, seed, t)
            })
            .collect();
        let (delta, _, seed, t) = runs
            .into_iter()
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .expect("at least one restart");
        if best.as_ref().is_none_or(|b| delta < b.0) {
            best = Some((delta, seed, t, k));
        }
        let (best_delta, best_seed, best_t, best_k) = best.as_ref().expect("set above");
        trace.push(*best_delta);
        if *best_delta <= cfg.epsilon {
            let op_error = aligned_distance(&best_t.evaluate_matrix(x), target.matrix());
            return Ok(SynthesisResult {
                template: best_t.clone(),
                delta: *best_delta,
                op_error,
                layer_count: *best_k,
                seed: *best_seed,
                delta_trace: trace,
            });
        }
    }
    let (best_delta, _, _, best_k) = best.expect("k range is non-empty");
    Err(Error::SynthesisFailed { best_delta, best_k })
}

fn identity_template(d_a: usize, d_b: usize, k: usize) -> CircuitTemplate {
    CircuitTemplate::from_locals(d_a, d_b, vec![LocalLayer::identity(d_a, d_b); k + 1]).expect("consistent dims")
}

fn random_template(d_a: usize, d_b: usize, k: usize, seed: u64) -> CircuitTemplate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let locals = (0..=k)
        .map(|_| LocalLayer::new(random_unitary(d_a, &mut rng), random_unitary(d_b, &mut rng)))
        .collect();
    CircuitTemplate::from_locals(d_a, d_b, locals).expect("consistent dims")
}

/// Runs polar sweeps until converged, stalled or out of sweeps.
fn optimize(mut t: CircuitTemplate, x: &CMatrix, t_dag: &CMatrix, cfg: &SynthesisConfig) -> CircuitTemplate {
    const WINDOW: usize = 50;
    let mut history: Vec<f64> = Vec::new();
    for _ in 0..cfg.max_sweeps {
        let defect = 1.0 - sweep(&mut t, x, t_dag);
        if defect <= cfg.fidelity_tol {
            break;
        }
        history.push(defect);
        if history.len() > WINDOW {
            let old = history[history.len() - 1 - WINDOW];
            if old - defect <= 1e-3 * defect {
                break;
            }
        }
    }
    t
}

/// One forward pass over all layers; returns the fidelity `|tr(T^dag E)|/d`
/// after the last update.
fn sweep(t: &mut CircuitTemplate, x: &CMatrix, t_dag: &CMatrix) -> f64 {
    let (d_a, d_b) = t.dims();
    let d = d_a * d_b;
    let k = t.query_count();
    // suffix[j] = L_k X ... L_{j+1} X
    let mut suffix = vec![identity(d); k + 1];
    for j in (0..k).rev() {
        suffix[j] = &suffix[j + 1] * t.locals()[j + 1].matrix() * x;
    }
    let mut prefix = identity(d);
    let mut fidelity = 0.0;
    for (j, suf) in suffix.iter().enumerate() {
        let env = &prefix * t_dag * suf;
        let layer = &mut t.locals_mut()[j];
        layer.factor_a = polar_update(&contract_for_a(&env, &layer.factor_b, d_a, d_b));
        let nb = contract_for_b(&env, &layer.factor_a, d_a, d_b);
        layer.factor_b = polar_update(&nb);
        fidelity = (&nb * &layer.factor_b).trace().norm() / d as f64;
        prefix = x * layer.matrix() * prefix;
    }
    fidelity
}

/// `N[a2, a1] = sum_{b1,b2} M[(a2,b2),(a1,b1)] b[b1,b2]`, so that
/// `tr(M (a (x) b)) = tr(N a)`.
fn contract_for_a(m: &CMatrix, b: &CMatrix, d_a: usize, d_b: usize) -> CMatrix {
    CMatrix::from_fn(d_a, d_a, |a2, a1| {
        let mut s = num_complex::Complex64::new(0.0, 0.0);
        for b1 in 0..d_b {
            for b2 in 0..d_b {
                s += m[(a2 * d_b + b2, a1 * d_b + b1)] * b[(b1, b2)];
            }
        }
        s
    })
}

fn contract_for_b(m: &CMatrix, a: &CMatrix, d_a: usize, d_b: usize) -> CMatrix {
    CMatrix::from_fn(d_b, d_b, |b2, b1| {
        let mut s = num_complex::Complex64::new(0.0, 0.0);
        for a1 in 0..d_a {
            for a2 in 0..d_a {
                s += m[(a2 * d_b + b2, a1 * d_b + b1)] * a[(a1, a2)];
            }
        }
        s
    })
}

/// The unitary `a` maximizing `|tr(N a)|`: `V U^dag` for `N = U S V^dag`.
fn polar_update(n: &CMatrix) -> CMatrix {
    let svd = checked_svd(n);
    svd.v_t.adjoint() * svd.u.adjoint()
}
