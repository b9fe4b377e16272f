//! Sequential discrimination of two single-system unitaries.
//!
//! For `U != V` (beyond a global phase) we build interleavers `w_1..w_N` and an
//! input `|psi>` with `U w_N U ... w_1 U |psi>` orthogonal to the same circuit
//! with `V`. The construction is greedy: keep the composites `A`, `B` of the
//! two branches and at every stage pick `w` so that the arc of
//! `(A w U)^dag (B w V)` grows as much as possible, until it reaches `pi`.
//!
//! A stage can add at most `theta(U^dag V)` to the arc. The structured seed
//! attains that bound by aligning the eigenbases of `A^dag B` and `V U^dag`
//! (extreme eigenphases matched up); when the aligned sum overshoots `pi`, a
//! rotation inside the two extreme eigenvectors lands the pair of extreme
//! eigenvalues exactly antipodal. Random restarts refined by local ascent on
//! `w = w_seed exp(i H)` cover the case where the structured seed is disabled.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arc::{arc_of_phases, smallest_arc_with_tol, zero_overlap_state_with_tol, DEFAULT_TOL_ANGLE};
use crate::error::{dims_mismatch, Error, Result};
use crate::linalg::{c, eig_unitary, expi_hermitian, identity, phase_distance, random_unitary, CMatrix, PureState};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SequentialConfig {
    /// Pairs closer than this in [`phase_distance`] are the same operation.
    pub distinct_tol: f64,
    pub overlap_tol: f64,
    pub tol_angle: f64,
    /// Extra queries allowed beyond `ceil(pi / theta)`.
    pub slack: usize,
    /// Required per-stage arc gain, as a fraction of `theta(U^dag V)`.
    pub min_gain: f64,
    /// Fallback gain fraction, used at most once per scheme.
    pub relaxed_gain: f64,
    pub restarts: usize,
    pub seed: u64,
    pub structured_seed: bool,
    /// Pattern-search sweeps per restart.
    pub ascent_sweeps: usize,
}

impl Default for SequentialConfig {
    fn default() -> Self {
        Self {
            distinct_tol: 1e-9,
            overlap_tol: 1e-8,
            tol_angle: DEFAULT_TOL_ANGLE,
            slack: 1,
            min_gain: 0.5,
            relaxed_gain: 0.25,
            restarts: 8,
            seed: 0,
            structured_seed: true,
            ascent_sweeps: 200,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SequentialScheme {
    /// `w_1..w_N`, in application order.
    pub interleavers: Vec<CMatrix>,
    pub input_state: PureState,
    pub query_count: usize,
    pub achieved_overlap: f64,
    /// Arc of `A^dag B` after each stage, starting with `theta(U^dag V)`.
    pub theta_trace: Vec<f64>,
}

/// `X w_N X ... w_1 X`.
pub fn compose_sequential(x: &CMatrix, interleavers: &[CMatrix]) -> Result<CMatrix> {
    if !x.is_square() {
        return Err(dims_mismatch("compose_sequential", x.shape(), "square"));
    }
    let mut out = x.clone();
    for w in interleavers {
        if w.shape() != x.shape() {
            return Err(dims_mismatch("compose_sequential", w.shape(), x.shape()));
        }
        out = x * w * out;
    }
    Ok(out)
}

fn arc(m: &CMatrix, cfg: &SequentialConfig) -> Result<f64> {
    Ok(smallest_arc_with_tol(m, cfg.tol_angle)?.theta)
}

pub fn build_sequential_scheme(u: &CMatrix, v: &CMatrix, cfg: &SequentialConfig) -> Result<SequentialScheme> {
    if u.shape() != v.shape() || !u.is_square() {
        return Err(dims_mismatch("build_sequential_scheme", u.shape(), v.shape()));
    }
    if phase_distance(u, v)? <= cfg.distinct_tol {
        return Err(Error::Indistinguishable);
    }
    let theta0 = arc(&(u.adjoint() * v), cfg)?;
    if theta0 <= 0.0 {
        return Err(Error::Indistinguishable);
    }
    let target = PI - cfg.tol_angle;
    let max_interleavers = crate::arc::query_count_for_arc(theta0, cfg.tol_angle)? + cfg.slack - 1;

    let (mut a, mut b) = (u.clone(), v.clone());
    let mut theta = theta0;
    let mut trace = vec![theta0];
    let mut interleavers = Vec::new();
    let mut relaxed = false;
    while theta < target {
        if interleavers.len() >= max_interleavers {
            return Err(Error::StageStalled { stage: interleavers.len(), trace });
        }
        let stage = interleavers.len();
        // the new stage runs after everything so far: U w A against V w B
        let (w, new_theta) = optimize_stage_at(u, v, &a, &b, cfg, stage as u64)?;
        let remaining = target - theta;
        let gain = new_theta - theta;
        if gain < (cfg.min_gain * theta0).min(remaining) {
            if relaxed || gain < (cfg.relaxed_gain * theta0).min(remaining) || gain <= 0.0 {
                trace.push(new_theta);
                return Err(Error::StageStalled { stage, trace });
            }
            relaxed = true;
        }
        a = u * &w * &a;
        b = v * &w * &b;
        theta = arc(&(a.adjoint() * &b), cfg)?;
        trace.push(theta);
        interleavers.push(w);
    }

    let composite = a.adjoint() * &b;
    let zero = zero_overlap_state_with_tol(&composite, cfg.tol_angle)?;
    let psi = zero.state.amplitudes.clone();
    let achieved_overlap = psi.dotc(&(&composite * &psi)).norm();
    if achieved_overlap > cfg.overlap_tol {
        return Err(Error::NumericalFailure(format!(
            "sequential scheme overlap {achieved_overlap:.3e} exceeds {:.3e}",
            cfg.overlap_tol
        )));
    }
    Ok(SequentialScheme {
        query_count: interleavers.len() + 1,
        interleavers,
        input_state: zero.state,
        achieved_overlap,
        theta_trace: trace,
    })
}

/// One greedy stage: returns `w` and `theta((A w U)^dag (B w V))`.
///
/// When `theta(A^dag B)` already reaches `pi`, returns the identity and the
/// current arc unchanged.
pub fn optimize_stage(
    a: &CMatrix,
    b: &CMatrix,
    u: &CMatrix,
    v: &CMatrix,
    cfg: &SequentialConfig,
) -> Result<(CMatrix, f64)> {
    optimize_stage_at(a, b, u, v, cfg, 0)
}

fn optimize_stage_at(
    a: &CMatrix,
    b: &CMatrix,
    u: &CMatrix,
    v: &CMatrix,
    cfg: &SequentialConfig,
    stage: u64,
) -> Result<(CMatrix, f64)> {
    let d = u.nrows();
    let m = a.adjoint() * b;
    let theta_m = arc(&m, cfg)?;
    if theta_m >= PI - cfg.tol_angle {
        return Ok((identity(d), theta_m));
    }
    let dd = v * u.adjoint();
    let theta_d = arc(&dd, cfg)?;
    let ceiling = (theta_m + theta_d).min(PI);
    let objective = |w: &CMatrix| -> f64 {
        let next = u.adjoint() * w.adjoint() * &m * w * v;
        arc(&next, cfg).map_or(f64::NEG_INFINITY, |t| t.min(PI))
    };

    let mut seeds = vec![identity(d)];
    if cfg.structured_seed {
        seeds.push(aligned_interleaver(&m, &dd, cfg)?);
    }
    let scored: Vec<(f64, usize)> = seeds.iter().enumerate().map(|(i, w)| (objective(w), i)).collect();
    let (best_theta, best_idx) = pick_best(&scored);
    if best_theta >= ceiling - 1e-12 {
        return Ok((seeds[best_idx].clone(), best_theta));
    }

    for r in 0..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, stage, r as u64));
        seeds.push(random_unitary(d, &mut rng));
    }
    let refined: Vec<(CMatrix, f64)> = seeds
        .par_iter()
        .map(|w| local_ascent(w, &objective, cfg.ascent_sweeps, ceiling))
        .collect();
    let scored: Vec<(f64, usize)> = refined.iter().enumerate().map(|(i, r)| (r.1, i)).collect();
    let (_, winner) = pick_best(&scored);
    let (w, theta) = refined.into_iter().nth(winner).expect("winner index in range");
    Ok((w, theta))
}

/// Highest score, lowest index on ties.
fn pick_best(scored: &[(f64, usize)]) -> (f64, usize) {
    scored
        .iter()
        .copied()
        .fold((f64::NEG_INFINITY, usize::MAX), |best, cur| if cur.0 > best.0 { cur } else { best })
}

pub(crate) fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    // splitmix-style scramble so neighbouring indices get unrelated streams
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Interleaver aligning the eigenbases of `M = A^dag B` and `D = V U^dag` so
/// the arc of `w^dag M w D` is `theta(M) + theta(D)`, or exactly `pi` when
/// that sum overshoots.
fn aligned_interleaver(m: &CMatrix, dd: &CMatrix, cfg: &SequentialConfig) -> Result<CMatrix> {
    let n = m.nrows();
    let sm = eig_unitary(m)?;
    let sd = eig_unitary(dd)?;
    let am = arc_of_phases(&sm.phases, cfg.tol_angle);
    let ad = arc_of_phases(&sd.phases, cfg.tol_angle);
    let rel = |p: f64, start: f64| (p - start).rem_euclid(std::f64::consts::TAU);
    let mut order_m: Vec<usize> = (0..n).collect();
    order_m.sort_by(|&i, &j| rel(sm.phases[i], am.start_phase).total_cmp(&rel(sm.phases[j], am.start_phase)));
    let mut order_d: Vec<usize> = (0..n).collect();
    order_d.sort_by(|&i, &j| rel(sd.phases[i], ad.start_phase).total_cmp(&rel(sd.phases[j], ad.start_phase)));

    let (alpha, beta) = (am.theta, ad.theta);
    let mut w = CMatrix::zeros(n, n);
    let rotate = n >= 2 && alpha + beta >= PI - cfg.tol_angle;
    for r in 0..n {
        if rotate && (r == 0 || r == n - 1) {
            continue;
        }
        w += &sm.eigenvectors[order_m[r]] * sd.eigenvectors[order_d[r]].adjoint();
    }
    if rotate {
        // tr of the SU(2) part is 2(cos(a/2)cos(b/2) - sin(a/2)sin(b/2)cos 2phi);
        // zero trace means the two block eigenvalues are antipodal
        let ratio = ((alpha / 2.0).tan() * (beta / 2.0).tan()).recip();
        let phi = ratio.clamp(-1.0, 1.0).acos() / 2.0;
        let (cs, sn) = (phi.cos(), phi.sin());
        let (p_lo, p_hi) = (&sm.eigenvectors[order_m[0]], &sm.eigenvectors[order_m[n - 1]]);
        let (q_lo, q_hi) = (&sd.eigenvectors[order_d[0]], &sd.eigenvectors[order_d[n - 1]]);
        // [p_lo p_hi] R(phi) [q_lo q_hi]^dag with R = [[c, -s], [s, c]]
        let col_lo = p_lo * c(cs, 0.0) + p_hi * c(sn, 0.0);
        let col_hi = p_lo * c(-sn, 0.0) + p_hi * c(cs, 0.0);
        w += col_lo * q_lo.adjoint() + col_hi * q_hi.adjoint();
    }
    Ok(w)
}

/// Coordinate pattern search over `w = seed exp(i H(params))`.
fn local_ascent<F>(seed: &CMatrix, objective: &F, sweeps: usize, ceiling: f64) -> (CMatrix, f64)
where
    F: Fn(&CMatrix) -> f64,
{
    let d = seed.nrows();
    let mut params = vec![0.0; d * d];
    let eval = |p: &[f64]| {
        let w = seed * expi_hermitian(&hermitian_from_params(p, d));
        let val = objective(&w);
        (w, val)
    };
    let (mut best_w, mut best) = (seed.clone(), objective(seed));
    let mut step = 0.4;
    for _ in 0..sweeps {
        if best >= ceiling - 1e-12 || step < 1e-7 {
            break;
        }
        let mut improved = false;
        for k in 0..params.len() {
            for sign in [1.0, -1.0] {
                let mut trial = params.clone();
                trial[k] += sign * step;
                let (w, val) = eval(&trial);
                if val > best + 1e-14 {
                    params = trial;
                    best = val;
                    best_w = w;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (best_w, best)
}

fn hermitian_from_params(p: &[f64], d: usize) -> CMatrix {
    let mut h = CMatrix::zeros(d, d);
    let mut idx = 0;
    for j in 0..d {
        h[(j, j)] = c(p[idx], 0.0);
        idx += 1;
    }
    for j in 0..d {
        for k in (j + 1)..d {
            let z = c(p[idx], p[idx + 1]);
            h[(j, k)] = z;
            h[(k, j)] = z.conj();
            idx += 2;
        }
    }
    h
}
