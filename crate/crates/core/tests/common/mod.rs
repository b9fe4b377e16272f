//! Constructions shared by the integration suites.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use seqlocc_core::bipartite::{classify_matrix, exp_xx_matrix, PrimitiveKind};
use seqlocc_core::engine::EngineConfig;
use seqlocc_core::linalg::{
    c, diag_phases, eig_unitary, from_real_rows, identity, kron, phase_distance, random_unitary, swap_operator,
    BipartiteUnitary, CMatrix,
};
use seqlocc_core::synthesis::synthesize;
use seqlocc_core::template::CircuitTemplate;

pub fn bu(m: CMatrix, d_a: usize, d_b: usize) -> BipartiteUnitary {
    BipartiteUnitary::new(m, d_a, d_b).unwrap()
}

pub fn cnot() -> CMatrix {
    from_real_rows(4, 4, &[1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0.])
}

pub fn cz() -> CMatrix {
    diag_phases(&[0.0, 0.0, 0.0, PI])
}

pub fn hadamard() -> CMatrix {
    from_real_rows(2, 2, &[1.0, 1.0, 1.0, -1.0]) * c(1.0 / 2f64.sqrt(), 0.0)
}

pub fn sigma_z() -> CMatrix {
    diag_phases(&[0.0, PI])
}

pub fn random_product<R: Rng>(rng: &mut R, d_a: usize, d_b: usize) -> CMatrix {
    kron(&random_unitary(d_a, rng), &random_unitary(d_b, rng))
}

pub fn random_swap_product<R: Rng>(rng: &mut R, d: usize) -> CMatrix {
    random_product(rng, d, d) * swap_operator(d)
}

pub fn random_imprimitive<R: Rng>(rng: &mut R, d_a: usize, d_b: usize) -> CMatrix {
    loop {
        let m = random_unitary(d_a * d_b, rng);
        if classify_matrix(&m, d_a, d_b, 1e-8).unwrap().kind == PrimitiveKind::Imprimitive {
            return m;
        }
    }
}

/// The template the engine synthesizes to bring `u` to `exp_xx(1)`.
pub fn engine_f(u: &CMatrix, d_a: usize, d_b: usize) -> CircuitTemplate {
    let cfg = EngineConfig::default();
    let e1 = bu(exp_xx_matrix(1.0, d_a, d_b), d_a, d_b);
    synthesize(&e1, &bu(u.clone(), d_a, d_b), &cfg.synthesis).unwrap().template
}

/// An imprimitive `V` with `f(V) = target` exactly, for a two-query `f`,
/// as far from `u` as the square-root branches allow.
pub fn partner_with_image(f: &CircuitTemplate, u: &CMatrix, target: &CMatrix) -> Option<CMatrix> {
    assert_eq!(f.query_count(), 2, "construction needs a two-query template");
    let (d_a, d_b) = f.dims();
    let l: Vec<CMatrix> = f.locals().iter().map(|x| x.matrix()).collect();
    // L2 V L1 V L0 = T  <=>  (L1 V)^2 = L1 L2^dag T L0^dag
    let r = &l[1] * l[2].adjoint() * target * l[0].adjoint();
    let eig = eig_unitary(&r).unwrap();
    let n = eig.phases.len();
    let mut best: Option<(f64, CMatrix)> = None;
    for mask in 0..(1u32 << n) {
        let mut m = CMatrix::zeros(n, n);
        for (i, (ph, vec)) in eig.phases.iter().zip(&eig.eigenvectors).enumerate() {
            let flip = if mask >> i & 1 == 1 { PI } else { 0.0 };
            m += vec * vec.adjoint() * Complex64::from_polar(1.0, ph / 2.0 + flip);
        }
        let v = l[1].adjoint() * m;
        if classify_matrix(&v, d_a, d_b, 1e-8).unwrap().kind != PrimitiveKind::Imprimitive {
            continue;
        }
        let dist = phase_distance(&v, u).unwrap();
        if best.as_ref().is_none_or(|(b, _)| dist > *b) {
            best = Some((dist, v));
        }
    }
    best.filter(|(d, _)| *d > 1e-3).map(|(_, v)| v)
}

pub fn identity4() -> CMatrix {
    identity(4)
}

/// Labelled pairs covering every case of the engine.
pub struct CorpusEntry {
    pub label: &'static str,
    pub u: CMatrix,
    pub v: CMatrix,
    pub dims: (usize, usize),
}

pub fn corpus() -> Vec<CorpusEntry> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let rng = &mut rng;
    let mut out = Vec::new();
    let mut push = |label, u, v, dims| out.push(CorpusEntry { label, u, v, dims });

    push("i-a", identity(4), kron(&sigma_z(), &identity(2)), (2, 2));
    for _ in 0..2 {
        push("i-a", random_product(rng, 2, 2), random_product(rng, 2, 2), (2, 2));
    }
    for _ in 0..3 {
        push("i-a", random_product(rng, 2, 3), random_product(rng, 2, 3), (2, 3));
    }

    push("i-b", identity(4), swap_operator(2), (2, 2));
    for _ in 0..2 {
        push("i-b", random_product(rng, 2, 2), random_swap_product(rng, 2), (2, 2));
    }

    let p = swap_operator(2);
    push("i-c", p.clone(), kron(&sigma_z(), &identity(2)) * &p, (2, 2));
    for _ in 0..2 {
        push("i-c", random_swap_product(rng, 2), random_swap_product(rng, 2), (2, 2));
    }

    push("ii-a", cnot(), kron(&hadamard(), &hadamard()), (2, 2));
    push("ii-a", cz(), kron(&hadamard(), &hadamard()), (2, 2));
    push("ii-a", random_imprimitive(rng, 2, 2), random_product(rng, 2, 2), (2, 2));
    for _ in 0..3 {
        push("ii-a", random_imprimitive(rng, 2, 3), random_product(rng, 2, 3), (2, 3));
    }

    push("ii-b", cnot(), swap_operator(2), (2, 2));
    push("ii-b", cz(), kron(&hadamard(), &hadamard()) * &p, (2, 2));
    push("ii-b", random_imprimitive(rng, 2, 2), random_swap_product(rng, 2), (2, 2));

    push("iii-a", cnot(), random_imprimitive(rng, 2, 2), (2, 2));
    push("iii-a", cz(), random_imprimitive(rng, 2, 2), (2, 2));
    push("iii-a", random_imprimitive(rng, 2, 2), random_imprimitive(rng, 2, 2), (2, 2));

    let local = |rng: &mut rand_chacha::ChaCha8Rng| random_product(rng, 2, 2);
    let dressed = local(rng) * cnot() * local(rng);
    for u in [cnot(), cz(), dressed] {
        let f = engine_f(&u, 2, 2);
        let v = partner_with_image(&f, &u, &exp_xx_matrix(1.0, 2, 2)).expect("partner exists");
        push("iii-b(x=1)", u, v, (2, 2));
    }
    for (u, x) in [(cnot(), 0.5), (cz(), -0.3), (cnot(), 2.0)] {
        let f = engine_f(&u, 2, 2);
        let v = partner_with_image(&f, &u, &exp_xx_matrix(x, 2, 2)).expect("partner exists");
        push("iii-b(x!=1)", u, v, (2, 2));
    }
    out
}
