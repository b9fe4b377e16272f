//! Eigenphase arcs and the single-query distinguishability criterion.
//!
//! `theta(W)` is the length of the smallest arc of the unit circle holding
//! every eigenvalue of `W`. Two unitaries `U`, `V` can be told apart with one
//! query exactly when `theta(U^dag V) >= pi`; with `N` parallel copies the arc
//! grows to `min(N theta, 2 pi)`.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{dims_mismatch, Error, Result};
use crate::linalg::{c, eig_unitary, CMatrix, CVector, PureState, SpectralDecomposition};

/// Angular tolerance used for deduplicating phases and for `theta >= pi` tests.
pub const DEFAULT_TOL_ANGLE: f64 = 1e-8;

/// Weights below this are treated as exact solutions of `sum p_k z_k = 0`.
const EXACT_RESIDUAL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcInfo {
    /// Arc length in `[0, 2pi]`.
    pub theta: f64,
    /// The arc runs counter-clockwise from `start_phase` to `end_phase`.
    pub start_phase: f64,
    pub end_phase: f64,
    /// Indices (into the sorted phase list) of the two extremal eigenphases.
    pub witness_phase_indices: (usize, usize),
}

/// Smallest arc of a sorted list of phases in `[0, 2pi)`.
pub fn arc_of_phases(phases: &[f64], tol_angle: f64) -> ArcInfo {
    let n = phases.len();
    if n <= 1 {
        let p = phases.first().copied().unwrap_or(0.0);
        return ArcInfo { theta: 0.0, start_phase: p, end_phase: p, witness_phase_indices: (0, 0) };
    }
    let mut best_gap = f64::NEG_INFINITY;
    let mut best = 0;
    for i in 0..n {
        let gap = if i + 1 < n { phases[i + 1] - phases[i] } else { phases[0] + TAU - phases[n - 1] };
        if gap > best_gap {
            best_gap = gap;
            best = i;
        }
    }
    let start = (best + 1) % n;
    let end = best;
    let mut theta = (phases[end] - phases[start]).rem_euclid(TAU);
    if theta <= tol_angle {
        theta = 0.0;
    }
    ArcInfo {
        theta,
        start_phase: phases[start],
        end_phase: phases[end],
        witness_phase_indices: (start, end),
    }
}

pub fn smallest_arc(u: &CMatrix) -> Result<ArcInfo> {
    smallest_arc_with_tol(u, DEFAULT_TOL_ANGLE)
}

pub fn smallest_arc_with_tol(u: &CMatrix, tol_angle: f64) -> Result<ArcInfo> {
    let eig = eig_unitary(u)?;
    Ok(arc_of_phases(&eig.phases, tol_angle))
}

/// `theta(U^dag V)`.
pub fn relative_arc(u: &CMatrix, v: &CMatrix) -> Result<ArcInfo> {
    if u.shape() != v.shape() {
        return Err(dims_mismatch("relative_arc", u.shape(), v.shape()));
    }
    smallest_arc(&(u.adjoint() * v))
}

pub fn single_query_distinguishable(u: &CMatrix, v: &CMatrix) -> Result<bool> {
    Ok(relative_arc(u, v)?.theta >= PI - DEFAULT_TOL_ANGLE)
}

/// Smallest `N` with `N theta >= pi`, the number of parallel copies needed.
pub fn query_count_for_arc(theta: f64, tol_angle: f64) -> Result<usize> {
    if theta <= 0.0 {
        return Err(Error::Indistinguishable);
    }
    Ok((((PI - tol_angle) / theta).ceil() as usize).max(1))
}

pub fn parallel_query_count(u: &CMatrix, v: &CMatrix) -> Result<usize> {
    query_count_for_arc(relative_arc(u, v)?.theta, DEFAULT_TOL_ANGLE)
}

/// A state with `<psi|T|psi> = 0`, built from at most three eigenvectors.
#[derive(Clone, Debug)]
pub struct ZeroOverlap {
    pub state: PureState,
    /// `(eigen index, weight)` pairs; weights sum to one.
    pub weights: Vec<(usize, f64)>,
    /// `|sum_k p_k e^{i theta_k}|`, zero for an exact convex combination.
    pub residual: f64,
}

pub fn zero_overlap_state(t: &CMatrix) -> Result<ZeroOverlap> {
    zero_overlap_state_with_tol(t, DEFAULT_TOL_ANGLE)
}

pub fn zero_overlap_state_with_tol(t: &CMatrix, tol_angle: f64) -> Result<ZeroOverlap> {
    let eig = eig_unitary(t)?;
    let arc = arc_of_phases(&eig.phases, tol_angle);
    let points = eig.eigenvalues();
    if arc.theta < PI - tol_angle {
        return Err(Error::ArcTooSmall { theta: arc.theta, min_overlap: hull_distance(&points) });
    }

    let candidates = convex_candidates(&points);
    let exact = candidates
        .iter()
        .filter(|cand| cand.residual <= EXACT_RESIDUAL)
        .max_by(|a, b| a.min_weight().total_cmp(&b.min_weight()).then(b.order.cmp(&a.order)));
    let chosen = match exact {
        Some(cand) => cand.clone(),
        // theta is within tolerance of pi but no exact combination exists
        None => candidates
            .into_iter()
            .min_by(|a, b| a.residual.total_cmp(&b.residual).then(a.order.cmp(&b.order)))
            .ok_or(Error::ArcTooSmall { theta: arc.theta, min_overlap: 1.0 })?,
    };
    Ok(build_state(&eig, &chosen))
}

#[derive(Clone, Debug)]
struct Candidate {
    weights: Vec<(usize, f64)>,
    residual: f64,
    order: usize,
}

impl Candidate {
    fn min_weight(&self) -> f64 {
        self.weights.iter().map(|w| w.1).fold(f64::INFINITY, f64::min)
    }
}

fn combination_residual(points: &[Complex64], weights: &[(usize, f64)]) -> f64 {
    weights.iter().map(|&(k, p)| points[k] * p).sum::<Complex64>().norm()
}

fn convex_candidates(points: &[Complex64]) -> Vec<Candidate> {
    let n = points.len();
    let mut out = Vec::new();
    let mut order = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = points[i] - points[j];
            let dd = d.norm_sqr();
            if dd < 1e-24 {
                continue;
            }
            let p = (-(d.conj() * points[j]).re / dd).clamp(0.0, 1.0);
            let weights = vec![(i, p), (j, 1.0 - p)];
            let residual = combination_residual(points, &weights);
            out.push(Candidate { weights, residual, order });
            order += 1;
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let (d1, d2, z3) = (points[i] - points[k], points[j] - points[k], points[k]);
                let det = d1.re * d2.im - d2.re * d1.im;
                if det.abs() < 1e-12 {
                    continue;
                }
                let p1 = (-z3.re * d2.im + z3.im * d2.re) / det;
                let p2 = (-d1.re * z3.im + d1.im * z3.re) / det;
                let p3 = 1.0 - p1 - p2;
                if p1 < -1e-12 || p2 < -1e-12 || p3 < -1e-12 {
                    continue;
                }
                let raw = [p1.max(0.0), p2.max(0.0), p3.max(0.0)];
                let s: f64 = raw.iter().sum();
                let weights = vec![(i, raw[0] / s), (j, raw[1] / s), (k, raw[2] / s)];
                let residual = combination_residual(points, &weights);
                out.push(Candidate { weights, residual, order });
                order += 1;
            }
        }
    }
    out
}

fn build_state(eig: &SpectralDecomposition, cand: &Candidate) -> ZeroOverlap {
    let d = eig.eigenvectors[0].len();
    let mut v = CVector::zeros(d);
    let weights: Vec<(usize, f64)> = cand.weights.iter().copied().filter(|w| w.1 > 0.0).collect();
    for &(k, p) in &weights {
        v += &eig.eigenvectors[k] * c(p.sqrt(), 0.0);
    }
    let n = v.norm();
    ZeroOverlap {
        state: PureState { amplitudes: v / c(n, 0.0), dims: None },
        weights,
        residual: cand.residual,
    }
}

/// Distance from the origin to the convex hull of points on the unit circle.
fn hull_distance(points: &[Complex64]) -> f64 {
    let mut best = points.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let d = points[i] - points[j];
            let dd = d.norm_sqr();
            if dd < 1e-24 {
                continue;
            }
            let p = (-(d.conj() * points[j]).re / dd).clamp(0.0, 1.0);
            best = best.min((points[j] + d * p).norm());
        }
    }
    best
}

/// Distinct eigenphases with multiplicities, merged at `tol_angle`.
pub fn phase_clusters(phases: &[f64], tol_angle: f64) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    for &p in phases {
        match out.last_mut() {
            Some((rep, m)) if p - *rep <= tol_angle => *m += 1,
            _ => out.push((p, 1)),
        }
    }
    // merge across the 0 / 2pi seam
    if out.len() > 1 {
        let (first, last) = (out[0].0, out[out.len() - 1].0);
        if first + TAU - last <= tol_angle {
            let (_, m) = out.pop().expect("len > 1");
            out[0].1 += m;
        }
    }
    out
}

/// CSV rows `index,phase,multiplicity` for plotting arc diagrams.
pub fn eigenphase_csv(phases: &[f64], tol_angle: f64) -> String {
    let mut s = String::from("index,phase,multiplicity\n");
    for (i, (p, m)) in phase_clusters(phases, tol_angle).iter().enumerate() {
        let _ = writeln!(s, "{i},{p},{m}");
    }
    s
}
