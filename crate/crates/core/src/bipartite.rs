//! Structure of bipartite unitaries: operator Schmidt decomposition,
//! primitivity (product or swapped product) and the `e^{i x u1 (x) u2}`
//! family singled out by its local reflection symmetry.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, checked_svd, identity, kron, nearest_unitary, op_norm, phase_distance_unchecked, swap_operator, BipartiteUnitary,
    CMatrix, CVector,
};

/// Schmidt coefficients below `rank_tol * largest` are treated as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-7;
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-8;
pub const DEFAULT_WITNESS_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct OperatorSchmidtDecomposition {
    /// Descending.
    pub coefficients: Vec<f64>,
    pub left_ops: Vec<CMatrix>,
    pub right_ops: Vec<CMatrix>,
}

impl OperatorSchmidtDecomposition {
    pub fn rank(&self, rank_tol: f64) -> usize {
        let top = self.coefficients.first().copied().unwrap_or(0.0);
        self.coefficients.iter().filter(|&&s| s > rank_tol * top).count()
    }

    pub fn reconstruct(&self) -> CMatrix {
        let (da, db) = (self.left_ops[0].nrows(), self.right_ops[0].nrows());
        let mut m = CMatrix::zeros(da * db, da * db);
        for ((s, a), b) in self.coefficients.iter().zip(&self.left_ops).zip(&self.right_ops) {
            m += kron(a, b) * c(*s, 0.0);
        }
        m
    }
}

/// Realignment `R[(a,a'),(b,b')] = M[(a,b),(a',b')]`.
pub fn realign(m: &CMatrix, d_a: usize, d_b: usize) -> CMatrix {
    CMatrix::from_fn(d_a * d_a, d_b * d_b, |r, col| {
        let (a, ap) = (r / d_a, r % d_a);
        let (b, bp) = (col / d_b, col % d_b);
        m[(a * d_b + b, ap * d_b + bp)]
    })
}

pub fn operator_schmidt(u: &BipartiteUnitary) -> OperatorSchmidtDecomposition {
    operator_schmidt_matrix(u.matrix(), u.d_a(), u.d_b())
}

pub fn operator_schmidt_matrix(m: &CMatrix, d_a: usize, d_b: usize) -> OperatorSchmidtDecomposition {
    let svd = checked_svd(&realign(m, d_a, d_b));
    let mut out = OperatorSchmidtDecomposition { coefficients: vec![], left_ops: vec![], right_ops: vec![] };
    for (i, &s) in svd.singular_values.iter().enumerate() {
        out.coefficients.push(s);
        out.left_ops.push(CMatrix::from_fn(d_a, d_a, |a, ap| svd.u[(a * d_a + ap, i)]));
        out.right_ops.push(CMatrix::from_fn(d_b, d_b, |b, bp| svd.v_t[(i, b * d_b + bp)]));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrimitiveKind {
    Product,
    SwapProduct,
    Imprimitive,
}

impl std::fmt::Display for PrimitiveKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PrimitiveKind::Product => "Product",
            PrimitiveKind::SwapProduct => "SwapProduct",
            PrimitiveKind::Imprimitive => "Imprimitive",
        })
    }
}

/// A product input whose image is entangled.
#[derive(Clone, Debug)]
pub struct ImprimitivityWitness {
    pub state_a: CVector,
    pub state_b: CVector,
    /// Second Schmidt coefficient of `U |a>|b>`.
    pub second_coefficient: f64,
}

#[derive(Clone, Debug)]
pub struct PrimitiveForm {
    pub kind: PrimitiveKind,
    pub factor_a: Option<CMatrix>,
    pub factor_b: Option<CMatrix>,
    /// Phase distance to the classified form (0 for `Imprimitive`).
    pub residual: f64,
    pub schmidt_coefficients: Vec<f64>,
    pub witness: Option<ImprimitivityWitness>,
}

impl PrimitiveForm {
    pub fn is_primitive(&self) -> bool {
        self.kind != PrimitiveKind::Imprimitive
    }

    /// `factor_a (x) factor_b`, the local part of a primitive form.
    pub fn local_part(&self) -> Option<CMatrix> {
        Some(kron(self.factor_a.as_ref()?, self.factor_b.as_ref()?))
    }
}

/// Splits a rank-one operator into unitary factors, returning the residual
/// phase distance of the product from `m`.
///
/// The largest-magnitude entry of `factor_a` is made real positive; the
/// remaining scalar goes into `factor_b`.
pub fn factor_product(m: &CMatrix, d_a: usize, d_b: usize) -> (CMatrix, CMatrix, f64) {
    let osd = operator_schmidt_matrix(m, d_a, d_b);
    let s = osd.coefficients[0];
    let sa = (d_a as f64).sqrt();
    let mut fa = &osd.left_ops[0] * c(sa, 0.0);
    let mut fb = &osd.right_ops[0] * c(s / sa, 0.0);
    let max = fa.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(z) = fa.transpose().iter().find(|z| z.norm() >= max - 1e-12).copied() {
        let ph = z / z.norm();
        fa *= ph.conj();
        fb *= ph;
    }
    let (fa, fb) = (nearest_unitary(&fa), nearest_unitary(&fb));
    let residual = phase_distance_unchecked(m, &kron(&fa, &fb));
    (fa, fb, residual)
}

pub fn classify_primitive(u: &BipartiteUnitary, tol: f64) -> Result<PrimitiveForm> {
    classify_matrix(u.matrix(), u.d_a(), u.d_b(), tol)
}

pub fn classify_matrix(m: &CMatrix, d_a: usize, d_b: usize, tol: f64) -> Result<PrimitiveForm> {
    let osd = operator_schmidt_matrix(m, d_a, d_b);
    let schmidt_coefficients = osd.coefficients.clone();
    let product_rank = osd.rank(DEFAULT_RANK_TOL);

    let product = (product_rank == 1).then(|| factor_product(m, d_a, d_b)).filter(|f| f.2 <= tol);
    let swapped = if d_a == d_b {
        let mp = m * swap_operator(d_a);
        let rank = operator_schmidt_matrix(&mp, d_a, d_b).rank(DEFAULT_RANK_TOL);
        (rank == 1).then(|| factor_product(&mp, d_a, d_b)).filter(|f| f.2 <= tol)
    } else {
        None
    };

    match (product, swapped) {
        (Some(p), Some(s)) => Err(Error::AmbiguousClassification { product: p.2, swap: s.2 }),
        (Some((fa, fb, residual)), None) => Ok(PrimitiveForm {
            kind: PrimitiveKind::Product,
            factor_a: Some(fa),
            factor_b: Some(fb),
            residual,
            schmidt_coefficients,
            witness: None,
        }),
        (None, Some((fa, fb, residual))) => Ok(PrimitiveForm {
            kind: PrimitiveKind::SwapProduct,
            factor_a: Some(fa),
            factor_b: Some(fb),
            residual,
            schmidt_coefficients,
            witness: None,
        }),
        (None, None) => Ok(PrimitiveForm {
            kind: PrimitiveKind::Imprimitive,
            factor_a: None,
            factor_b: None,
            residual: 0.0,
            schmidt_coefficients,
            witness: imprimitivity_witness(m, d_a, d_b, DEFAULT_WITNESS_TOL),
        }),
    }
}

/// Product states from a small grid: basis states and the two-level
/// superpositions `(|i> + |j>)/sqrt2`, `(|i> + i|j>)/sqrt2`.
fn product_grid(d: usize) -> Vec<CVector> {
    let mut out = Vec::new();
    let s = 1.0 / 2f64.sqrt();
    for i in 0..d {
        let mut e = CVector::zeros(d);
        e[i] = c(1.0, 0.0);
        out.push(e);
    }
    for i in 0..d {
        for j in (i + 1)..d {
            for phase in [c(s, 0.0), c(0.0, s)] {
                let mut e = CVector::zeros(d);
                e[i] = c(s, 0.0);
                e[j] = phase;
                out.push(e);
            }
        }
    }
    out
}

/// Searches the product grid for an input that `m` maps to an entangled state.
pub fn imprimitivity_witness(m: &CMatrix, d_a: usize, d_b: usize, witness_tol: f64) -> Option<ImprimitivityWitness> {
    let (grid_a, grid_b) = (product_grid(d_a), product_grid(d_b));
    let mut best: Option<ImprimitivityWitness> = None;
    for a in &grid_a {
        for b in &grid_b {
            let out = m * a.kronecker(b);
            let psi = CMatrix::from_fn(d_a, d_b, |i, j| out[i * d_b + j]);
            let sv = checked_svd(&psi).singular_values;
            let second = sv.get(1).copied().unwrap_or(0.0);
            if best.as_ref().is_none_or(|w| second > w.second_coefficient) {
                best = Some(ImprimitivityWitness { state_a: a.clone(), state_b: b.clone(), second_coefficient: second });
            }
        }
    }
    best.filter(|w| w.second_coefficient >= witness_tol)
}

/// `sigma (+) I_{d-2}` for a 2x2 block `sigma`.
fn pad_block(block: [[Complex64; 2]; 2], d: usize) -> CMatrix {
    let mut m = identity(d);
    for i in 0..2 {
        for j in 0..2 {
            m[(i, j)] = block[i][j];
        }
    }
    m
}

fn sigma_z() -> [[Complex64; 2]; 2] {
    [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]]
}

fn sigma_y() -> [[Complex64; 2]; 2] {
    [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]]
}

/// `sigma_x (+) 0_{d-2}`.
pub fn u_sigma_x(d: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    m[(0, 1)] = c(1.0, 0.0);
    m[(1, 0)] = c(1.0, 0.0);
    m
}

/// The four local reflections `(sz+I)(x)I`, `(sy+I)(x)I`, `I(x)(sz+I)`,
/// `I(x)(sy+I)`, each Hermitian and unitary.
#[derive(Clone, Debug)]
pub struct ReversalSymmetrySet {
    pub d_a: usize,
    pub d_b: usize,
    pub elements: [CMatrix; 4],
    /// Local factors `(a, b)` of each element.
    pub factors: [(CMatrix, CMatrix); 4],
}

pub fn build_symmetry_set(d_a: usize, d_b: usize) -> Result<ReversalSymmetrySet> {
    for d in [d_a, d_b] {
        if d < 2 {
            return Err(Error::DimensionTooSmall(d));
        }
    }
    let factors = [
        (pad_block(sigma_z(), d_a), identity(d_b)),
        (pad_block(sigma_y(), d_a), identity(d_b)),
        (identity(d_a), pad_block(sigma_z(), d_b)),
        (identity(d_a), pad_block(sigma_y(), d_b)),
    ];
    let elements = factors.clone().map(|(a, b)| kron(&a, &b));
    Ok(ReversalSymmetrySet { d_a, d_b, elements, factors })
}

/// `||U^dag - W U W^dag||` for each element of `S`.
pub fn reversal_symmetry_deviations(u: &BipartiteUnitary) -> Result<[f64; 4]> {
    let s = build_symmetry_set(u.d_a(), u.d_b())?;
    let m = u.matrix();
    let ud = m.adjoint();
    Ok(s.elements.map(|w| op_norm(&(&ud - &w * m * w.adjoint()))))
}

/// `U^dag = W U W^dag` for every `W` in `S`, as a literal matrix equation.
pub fn satisfies_reversal_symmetry(u: &BipartiteUnitary, tol: f64) -> bool {
    reversal_symmetry_deviations(u).is_ok_and(|devs| devs.iter().all(|&d| d <= tol))
}

/// `exp(i x (sx+0)(x)(sx+0))`: identity outside the `{0,1}(x){0,1}` block and
/// `cos x I + i sin x sx(x)sx` inside.
pub fn exp_xx_matrix(x: f64, d_a: usize, d_b: usize) -> CMatrix {
    let mut m = identity(d_a * d_b);
    let idx = block_indices(d_b);
    let (cs, sn) = (x.cos(), x.sin());
    for (r, &i) in idx.iter().enumerate() {
        m[(i, i)] = c(cs, 0.0);
        // sx (x) sx maps |ab> to |(1-a)(1-b)>, i.e. block index r -> 3 - r
        m[(idx[3 - r], i)] = c(0.0, sn);
    }
    m
}

pub fn exp_xx_form(x: f64, d_a: usize, d_b: usize) -> Result<BipartiteUnitary> {
    for d in [d_a, d_b] {
        if d < 2 {
            return Err(Error::DimensionTooSmall(d));
        }
    }
    BipartiteUnitary::new(exp_xx_matrix(x, d_a, d_b), d_a, d_b)
}

/// Composite indices of `|00>, |01>, |10>, |11>`.
fn block_indices(d_b: usize) -> [usize; 4] {
    [0, 1, d_b, d_b + 1]
}

/// Eigenvalue-weighted sums over the `sx(x)sx = +1` and `-1` eigenvector
/// families of the 4-dim block: `(sum_+ <e|M|e>, sum_- <e|M|e>) / 2`.
fn family_means(m: &CMatrix, d_b: usize) -> (Complex64, Complex64) {
    let [i00, i01, i10, i11] = block_indices(d_b);
    let quad = |p: usize, q: usize, sign: f64| -> Complex64 {
        // <e|M|e> with e = (|p> + sign |q>)/sqrt2
        (m[(p, p)] + m[(q, q)] + (m[(p, q)] + m[(q, p)]) * sign) * 0.5
    };
    let plus = (quad(i00, i11, 1.0) + quad(i01, i10, 1.0)) * 0.5;
    let minus = (quad(i00, i11, -1.0) + quad(i01, i10, -1.0)) * 0.5;
    (plus, minus)
}

fn canonical_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Recovers `x` in `(-pi, pi]` with `||U - exp_xx(x)|| <= tol`, if any.
///
/// The sign of `x` comes from which eigenvector family carries `e^{+ix}`.
pub fn match_exp_xx(u: &BipartiteUnitary, tol: f64) -> Option<f64> {
    let (d_a, d_b) = u.dims();
    if d_a < 2 || d_b < 2 {
        return None;
    }
    let (plus, minus) = family_means(u.matrix(), d_b);
    let z = plus + minus.conj();
    if z.norm() < 1e-12 {
        return None;
    }
    let x = canonical_angle(z.arg());
    let x = if x <= -PI { PI } else { x };
    (op_norm(&(u.matrix() - exp_xx_matrix(x, d_a, d_b))) <= tol).then_some(x)
}

/// Like [`match_exp_xx`] but up to a global phase: `U ~ e^{i phase} exp_xx(x)`.
///
/// On `2 (x) 2` the pair `(phase, x)` is only defined modulo a joint shift by
/// `pi`; the representative with `x` closest to `prefer` is returned.
pub fn match_exp_xx_up_to_phase(m: &CMatrix, d_a: usize, d_b: usize, tol: f64, prefer: f64) -> Option<(f64, f64)> {
    if d_a < 2 || d_b < 2 {
        return None;
    }
    let (plus, minus) = family_means(m, d_b);
    if plus.norm() < 1e-12 || minus.norm() < 1e-12 {
        return None;
    }
    let (ap, am) = (plus.arg(), minus.arg());
    let outside: Vec<usize> = {
        let block = block_indices(d_b);
        (0..d_a * d_b).filter(|i| !block.contains(i)).collect()
    };
    let candidates: Vec<(f64, f64)> = if outside.is_empty() {
        let x0 = canonical_angle((ap - am) / 2.0);
        let th0 = (ap + am) / 2.0;
        vec![(th0, x0), (th0 + PI, canonical_angle(x0 + PI))]
    } else {
        let z: Complex64 = outside.iter().map(|&i| m[(i, i)]).sum();
        let th = z.arg();
        vec![(th, canonical_angle(ap - th))]
    };
    let dist = |x: f64| canonical_angle(x - prefer).abs();
    let (th, x) = candidates.into_iter().min_by(|a, b| dist(a.1).total_cmp(&dist(b.1)))?;
    let th = canonical_angle(th);
    let err = op_norm(&(m * Complex64::from_polar(1.0, -th) - exp_xx_matrix(x, d_a, d_b)));
    (err <= tol).then_some((th, x))
}

/// Blocks `U_a` when `m = sum_a |a><a| (x) U_a` (control on A), else `None`.
pub fn control_blocks(m: &CMatrix, d_a: usize, d_b: usize, tol: f64) -> Option<Vec<CMatrix>> {
    let mut off = 0.0f64;
    for a in 0..d_a {
        for ap in 0..d_a {
            if a != ap {
                off = off.max(m.view((a * d_b, ap * d_b), (d_b, d_b)).norm());
            }
        }
    }
    (off <= tol).then(|| (0..d_a).map(|a| m.view((a * d_b, a * d_b), (d_b, d_b)).into_owned()).collect())
}

/// `sum_a |a><a| (x) blocks[a]`.
pub fn controlled_from_blocks(blocks: &[CMatrix]) -> CMatrix {
    let d_a = blocks.len();
    let d_b = blocks[0].nrows();
    let mut m = CMatrix::zeros(d_a * d_b, d_a * d_b);
    for (a, blk) in blocks.iter().enumerate() {
        m.view_mut((a * d_b, a * d_b), (d_b, d_b)).copy_from(blk);
    }
    m
}
