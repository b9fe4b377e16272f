//! Dense complex matrices and pure states.
//!
//! Every bipartite operator in the crate uses the composite index convention
//! `|a>|b> -> a * d_b + b`. Helpers here are pure functions over
//! [`nalgebra::DMatrix`] with `Complex64` entries.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use crate::error::{dims_mismatch, Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Default bound on `||M^dag M - I||` for accepting a matrix as unitary.
pub const DEFAULT_UNITARY_TOL: f64 = 1e-9;

const NORM_TOL: f64 = 1e-9;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn from_real_rows(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
    CMatrix::from_row_iterator(rows, cols, data.iter().map(|&x| c(x, 0.0)))
}

pub fn diag_phases(phases: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        phases.len(),
        phases.iter().map(|&p| Complex64::from_polar(1.0, p)),
    ))
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn multiply(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.ncols() != b.nrows() {
        return Err(dims_mismatch("multiply", a.shape(), b.shape()));
    }
    Ok(a * b)
}

pub fn apply(u: &CMatrix, psi: &PureState) -> Result<PureState> {
    if u.ncols() != psi.len() {
        return Err(dims_mismatch("apply", u.shape(), psi.len()));
    }
    Ok(PureState { amplitudes: u * &psi.amplitudes, dims: psi.dims })
}

/// `<psi|phi>`, conjugate-linear in the first argument.
pub fn overlap(psi: &PureState, phi: &PureState) -> Result<Complex64> {
    if psi.len() != phi.len() {
        return Err(dims_mismatch("overlap", psi.len(), phi.len()));
    }
    Ok(psi.amplitudes.dotc(&phi.amplitudes))
}

/// The swap `P|x>|y> = |y>|x>` on `d (x) d`.
pub fn swap_operator(d: usize) -> CMatrix {
    let mut p = CMatrix::zeros(d * d, d * d);
    for x in 0..d {
        for y in 0..d {
            p[(y * d + x, x * d + y)] = c(1.0, 0.0);
        }
    }
    p
}

/// Largest singular value.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    checked_svd(m).singular_values.first().copied().unwrap_or(0.0)
}

pub fn unitarity_defect(m: &CMatrix) -> f64 {
    let d = m.ncols();
    op_norm(&(m.adjoint() * m - identity(d)))
}

/// Global-phase-invariant distance `sqrt(max(0, 1 - |tr(U^dag V)| / dim))`.
pub fn phase_distance(u: &CMatrix, v: &CMatrix) -> Result<f64> {
    if u.shape() != v.shape() || !u.is_square() {
        return Err(dims_mismatch("phase_distance", u.shape(), v.shape()));
    }
    Ok(phase_distance_unchecked(u, v))
}

/// For unitaries `1 - |tr(U^dag V)|/d = ||U - e^{i phi} V||_F^2 / 2d` at the
/// aligning phase; the Frobenius form avoids cancellation near zero.
pub(crate) fn phase_distance_unchecked(u: &CMatrix, v: &CMatrix) -> f64 {
    let t = trace_adjoint_product(v, u);
    let phase = if t.norm() > 0.0 { t / t.norm() } else { c(1.0, 0.0) };
    let d = u.nrows() as f64;
    let f2 = u.iter().zip(v.iter()).map(|(a, b)| (a - b * phase).norm_sqr()).sum::<f64>();
    (f2 / (2.0 * d)).min(1.0).sqrt()
}

/// `tr(U^dag V)` without forming the product.
pub fn trace_adjoint_product(u: &CMatrix, v: &CMatrix) -> Complex64 {
    u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Operator-norm distance after the best global phase:
/// `|| U - e^{i phi} V ||` with `phi = arg tr(V^dag U)`.
///
/// This is the per-use error that propagates through circuits.
pub fn aligned_distance(u: &CMatrix, v: &CMatrix) -> f64 {
    let t = trace_adjoint_product(v, u);
    let phase = if t.norm() > 0.0 { t / t.norm() } else { c(1.0, 0.0) };
    op_norm(&(u - v * phase))
}

/// `exp(i H)` for Hermitian `H`, unitary to working precision.
pub fn expi_hermitian(h: &CMatrix) -> CMatrix {
    let herm = (h + h.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let phases = diag_phases(eig.eigenvalues.as_slice());
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

/// Nearest unitary in Frobenius norm (polar factor).
pub fn nearest_unitary(m: &CMatrix) -> CMatrix {
    let svd = checked_svd(m);
    svd.u * svd.v_t
}

/// Thin SVD with singular values in descending order.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    pub v_t: CMatrix,
}

fn raw_svd(m: &CMatrix) -> Option<Svd> {
    let svd = m.clone().svd(true, true);
    let (u, v_t) = (svd.u?, svd.v_t?);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    Some(Svd {
        u: CMatrix::from_fn(u.nrows(), order.len(), |r, k| u[(r, order[k])]),
        singular_values: order.iter().map(|&i| svd.singular_values[i]).collect(),
        v_t: CMatrix::from_fn(order.len(), v_t.ncols(), |k, col| v_t[(order[k], col)]),
    })
}

fn recompose_error(m: &CMatrix, svd: &Svd) -> f64 {
    let s = CMatrix::from_diagonal(&CVector::from_iterator(
        svd.singular_values.len(),
        svd.singular_values.iter().map(|&x| c(x, 0.0)),
    ));
    (&svd.u * s * &svd.v_t - m).norm()
}

/// SVD verified by reconstruction.
///
/// The underlying routine occasionally returns a wrong factorization for
/// structured rank-deficient inputs; on failure the adjoint is tried, then
/// the input under fixed random unitary rotations.
pub fn checked_svd(m: &CMatrix) -> Svd {
    let tol = 1e-11 * (1.0 + m.norm());
    let mut best: Option<(f64, Svd)> = None;
    let mut consider = |svd: Option<Svd>| {
        if let Some(svd) = svd {
            let err = recompose_error(m, &svd);
            if best.as_ref().is_none_or(|(e, _)| err < *e) {
                best = Some((err, svd));
            }
        }
        best.as_ref().is_some_and(|(e, _)| *e <= tol)
    };
    if consider(raw_svd(m)) {
        return best.expect("accepted").1;
    }
    let adj = raw_svd(&m.adjoint()).map(|s| Svd { u: s.v_t.adjoint(), singular_values: s.singular_values, v_t: s.u.adjoint() });
    if consider(adj) {
        return best.expect("accepted").1;
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5bd1_e995);
    for _ in 0..8 {
        let (p, q) = (random_unitary(m.nrows(), &mut rng), random_unitary(m.ncols(), &mut rng));
        let rotated = raw_svd(&(p.adjoint() * m * &q))
            .map(|s| Svd { u: &p * s.u, singular_values: s.singular_values, v_t: s.v_t * q.adjoint() });
        if consider(rotated) {
            break;
        }
    }
    best.expect("at least one factorization").1
}

/// Haar-random unitary via QR of a complex Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| {
        c(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        let rjj = r[(j, j)];
        let ph = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { c(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= ph;
    }
    q
}

/// Random normalized state vector.
pub fn random_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(d, |_, _| {
        c(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let n = v.norm();
    v / c(n, 0.0)
}

/// A unitary with declared factor dimensions `(d_a, d_b)`.
///
/// `d_b = 1` is used for single-system operators.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteUnitary {
    matrix: CMatrix,
    d_a: usize,
    d_b: usize,
    unitarity_defect: f64,
}

impl BipartiteUnitary {
    pub fn new(matrix: CMatrix, d_a: usize, d_b: usize) -> Result<Self> {
        validate_unitary(matrix, d_a, d_b, DEFAULT_UNITARY_TOL)
    }

    pub fn single(matrix: CMatrix) -> Result<Self> {
        let d = matrix.nrows();
        validate_unitary(matrix, d, 1, DEFAULT_UNITARY_TOL)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.d_a, self.d_b)
    }

    pub fn dim(&self) -> usize {
        self.d_a * self.d_b
    }

    pub fn unitarity_defect(&self) -> f64 {
        self.unitarity_defect
    }

    /// Adjoint of a matrix the workbench holds explicitly.
    pub fn dagger(&self) -> Self {
        Self { matrix: self.matrix.adjoint(), ..self.clone() }
    }
}

impl AsRef<CMatrix> for BipartiteUnitary {
    fn as_ref(&self) -> &CMatrix {
        &self.matrix
    }
}

pub fn validate_unitary(m: CMatrix, d_a: usize, d_b: usize, tol: f64) -> Result<BipartiteUnitary> {
    let d = d_a * d_b;
    if d == 0 || m.nrows() != d || m.ncols() != d {
        return Err(dims_mismatch("validate_unitary", m.shape(), (d_a, d_b)));
    }
    let defect = unitarity_defect(&m);
    if defect.is_nan() || defect > tol {
        return Err(Error::NotUnitary { defect });
    }
    Ok(BipartiteUnitary { matrix: m, d_a, d_b, unitarity_defect: defect })
}

/// Normalized state vector, optionally split as `d_a (x) d_b`.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    pub amplitudes: CVector,
    pub dims: Option<(usize, usize)>,
}

impl PureState {
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amplitudes, dims: None })
    }

    /// Normalizes `v`; fails only on the zero vector.
    pub fn normalized(v: CVector) -> Result<Self> {
        let n = v.norm();
        if n == 0.0 {
            return Err(Error::NotNormalized { norm: 0.0 });
        }
        Ok(Self { amplitudes: v / c(n, 0.0), dims: None })
    }

    pub fn basis(d: usize, i: usize) -> Self {
        let mut v = CVector::zeros(d);
        v[i] = c(1.0, 0.0);
        Self { amplitudes: v, dims: None }
    }

    pub fn product(a: &PureState, b: &PureState) -> Self {
        Self {
            amplitudes: a.amplitudes.kronecker(&b.amplitudes),
            dims: Some((a.len(), b.len())),
        }
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }
}

/// Eigendecomposition of a unitary: `U = sum_k e^{i phase_k} |v_k><v_k|`.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    /// Angles in `[0, 2pi)`, ascending.
    pub phases: Vec<f64>,
    pub eigenvectors: Vec<CVector>,
}

impl SpectralDecomposition {
    pub fn reconstruct(&self) -> CMatrix {
        let d = self.eigenvectors.first().map_or(0, |v| v.len());
        let mut m = CMatrix::zeros(d, d);
        for (p, v) in self.phases.iter().zip(&self.eigenvectors) {
            m += v * v.adjoint() * Complex64::from_polar(1.0, *p);
        }
        m
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect()
    }
}

const SCHUR_EPS: f64 = 1e-15;
const SCHUR_MAX_ITER: usize = 10_000;

/// Spectral decomposition of a unitary (any normal matrix works).
///
/// The complex Schur form of a normal matrix is diagonal, so the Schur vectors
/// are an orthonormal eigenbasis; degenerate clusters come out orthonormal.
pub fn eig_unitary(u: &CMatrix) -> Result<SpectralDecomposition> {
    if !u.is_square() || u.is_empty() {
        return Err(dims_mismatch("eig_unitary", u.shape(), "square"));
    }
    let d = u.nrows();
    let schur = Schur::try_new(u.clone(), SCHUR_EPS, SCHUR_MAX_ITER)
        .ok_or_else(|| Error::NumericalFailure("Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();

    let mut pairs: Vec<(f64, CVector)> = (0..d)
        .map(|k| {
            let lambda = t[(k, k)];
            let mut phase = lambda.arg().rem_euclid(TAU);
            if phase >= TAU - 1e-14 {
                phase = 0.0;
            }
            (phase, canonical_phase(q.column(k).into_owned()))
        })
        .collect();

    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // ties: order by the first significant amplitude position, then its magnitude
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && pairs[end].0 == pairs[end - 1].0 {
            end += 1;
        }
        pairs[start..end].sort_by(|a, b| lead_key(&a.1).partial_cmp(&lead_key(&b.1)).unwrap());
        start = end;
    }

    let (phases, eigenvectors) = pairs.into_iter().unzip();
    Ok(SpectralDecomposition { phases, eigenvectors })
}

fn first_significant(v: &CVector) -> Option<usize> {
    v.iter().position(|z| z.norm() > 1e-8)
}

fn lead_key(v: &CVector) -> (usize, f64) {
    match first_significant(v) {
        Some(i) => (i, -v[i].norm()),
        None => (usize::MAX, 0.0),
    }
}

/// Rotates `v` so its first significant amplitude is real positive.
fn canonical_phase(v: CVector) -> CVector {
    match first_significant(&v) {
        Some(i) => {
            let z = v[i];
            v * (z.conj() / z.norm())
        }
        None => v,
    }
}

/// Partial trace over B of an operator on `d_a (x) d_b`.
pub fn partial_trace_b(m: &CMatrix, d_a: usize, d_b: usize) -> CMatrix {
    CMatrix::from_fn(d_a, d_a, |i, j| (0..d_b).map(|b| m[(i * d_b + b, j * d_b + b)]).sum())
}

/// Partial trace over A of an operator on `d_a (x) d_b`.
pub fn partial_trace_a(m: &CMatrix, d_a: usize, d_b: usize) -> CMatrix {
    CMatrix::from_fn(d_b, d_b, |i, j| (0..d_a).map(|a| m[(a * d_b + i, a * d_b + j)]).sum())
}

/// A unit vector orthogonal to `v` (built from the computational basis).
pub fn orthogonal_unit(v: &CVector) -> CVector {
    let d = v.len();
    let vn = v / c(v.norm(), 0.0);
    let mut best: Option<(f64, CVector)> = None;
    for j in 0..d {
        let mut e = CVector::zeros(d);
        e[j] = c(1.0, 0.0);
        let r = &e - &vn * vn[j].conj();
        let n = r.norm();
        if best.as_ref().is_none_or(|(bn, _)| n > *bn + 1e-12) {
            best = Some((n, r));
        }
    }
    let (n, r) = best.expect("dimension >= 1");
    r / c(n, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn hadamard() -> CMatrix {
        let s = 1.0 / 2f64.sqrt();
        from_real_rows(2, 2, &[s, s, s, -s])
    }

    #[test]
    fn identity_has_zero_defect() {
        let u = validate_unitary(identity(4), 2, 2, DEFAULT_UNITARY_TOL).unwrap();
        assert_eq!(u.unitarity_defect(), 0.0);
    }

    #[test]
    fn hadamard_product_is_unitary() {
        let hh = kron(&hadamard(), &hadamard());
        let u = validate_unitary(hh, 2, 2, DEFAULT_UNITARY_TOL).unwrap();
        assert!(u.unitarity_defect() <= 1e-15);
    }

    #[test]
    fn shear_is_rejected() {
        let m = from_real_rows(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(matches!(validate_unitary(m, 2, 1, 1e-9), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn wrong_size_is_rejected() {
        assert!(matches!(
            validate_unitary(identity(3), 2, 2, 1e-9),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn eig_of_diagonal_sign() {
        let s = eig_unitary(&diag_phases(&[0.0, PI])).unwrap();
        assert_eq!(s.phases.len(), 2);
        assert!(s.phases[0].abs() < 1e-15);
        assert!((s.phases[1] - PI).abs() < 1e-15);
    }

    #[test]
    fn eig_of_identity_is_degenerate_zero() {
        let s = eig_unitary(&identity(3)).unwrap();
        assert!(s.phases.iter().all(|&p| p == 0.0));
        assert!((s.reconstruct() - identity(3)).norm() < 1e-14);
    }

    #[test]
    fn eig_reconstructs_random_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in [3, 4, 6] {
            let u = random_unitary(d, &mut rng);
            let s = eig_unitary(&u).unwrap();
            let resid = (s.reconstruct() - &u).norm() / u.norm();
            assert!(resid <= 1e-10, "d = {d}: residual {resid}");
            for w in s.phases.windows(2) {
                assert!(w[0] <= w[1]);
            }
        }
    }

    #[test]
    fn eig_handles_degenerate_clusters_in_random_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let q = random_unitary(5, &mut rng);
        let d = diag_phases(&[0.3, 0.3, 0.3, 2.0, 2.0 + 1e-9]);
        let u = &q * d * q.adjoint();
        let s = eig_unitary(&u).unwrap();
        assert!((s.reconstruct() - &u).norm() <= 1e-10);
        for (i, vi) in s.eigenvectors.iter().enumerate() {
            for (j, vj) in s.eigenvectors.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((vi.dotc(vj).norm() - expected).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn phase_distance_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_unitary(3, &mut rng);
        assert!(phase_distance(&u, &u).unwrap() < 1e-7);
        let shifted = &u * Complex64::from_polar(1.0, PI / 7.0);
        assert!(phase_distance(&u, &shifted).unwrap() < 1e-7);
        let x = from_real_rows(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!((phase_distance(&identity(2), &x).unwrap() - 1.0).abs() < 1e-15);
        assert!(phase_distance(&identity(2), &identity(3)).is_err());
    }

    #[test]
    fn swap_examples() {
        let p = swap_operator(2);
        let psi = PureState::product(&PureState::basis(2, 0), &PureState::basis(2, 1));
        let out = apply(&p, &psi).unwrap();
        let expected = PureState::product(&PureState::basis(2, 1), &PureState::basis(2, 0));
        assert_eq!(out.amplitudes, expected.amplitudes);
        assert!((&p * &p - identity(4)).norm() <= 1e-15);
        let p3 = swap_operator(3);
        assert!((&p3 * &p3 - identity(9)).norm() <= 1e-15);
    }

    #[test]
    fn kron_and_overlap_basics() {
        assert_eq!(kron(&identity(2), &identity(2)), identity(4));
        let o = overlap(&PureState::basis(2, 0), &PureState::basis(2, 1)).unwrap();
        assert_eq!(o, c(0.0, 0.0));
        assert!(multiply(&identity(2), &identity(3)).is_err());
    }

    #[test]
    fn expi_hermitian_matches_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_unitary(3, &mut rng);
        let h = (&a + a.adjoint()) * c(0.5, 0.0);
        let expected = (h.clone() * c(0.0, 1.0)).exp();
        assert!((expi_hermitian(&h) - expected).norm() < 1e-12);
    }

    #[test]
    fn aligned_distance_ignores_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_unitary(4, &mut rng);
        let v = &u * Complex64::from_polar(1.0, 2.1);
        assert!(aligned_distance(&u, &v) < 1e-14);
    }

    #[test]
    fn orthogonal_unit_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = random_state(3, &mut rng);
        let w = orthogonal_unit(&v);
        assert!(v.dotc(&w).norm() < 1e-14);
        assert!((w.norm() - 1.0).abs() < 1e-14);
    }
}
