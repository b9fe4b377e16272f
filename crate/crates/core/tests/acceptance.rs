//! Acceptance suite. Each test prints one `criterion N ...: PASS|FAIL` line.

mod common;

use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use common::*;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seqlocc_core::arc::{single_query_distinguishable, smallest_arc};
use seqlocc_core::bipartite::{
    classify_primitive, exp_xx_form, match_exp_xx, satisfies_reversal_symmetry, PrimitiveKind, DEFAULT_CLASSIFY_TOL,
};
use seqlocc_core::engine::{discriminate, verify_scheme, DiscriminationReport, EngineConfig, LoccSequentialScheme, SchemeFile};
use seqlocc_core::linalg::{
    diag_phases, identity, kron, phase_distance, random_unitary, swap_operator, BipartiteUnitary, CMatrix,
};
use seqlocc_core::sequential::{build_sequential_scheme, SequentialConfig};
use seqlocc_core::synthesis::{synthesize, SynthesisConfig};
use seqlocc_core::template::{scan_forward_only, CircuitTemplate, LocalLayer};

fn report(n: u32, name: &str, ok: bool, detail: String) {
    println!("criterion {n} ({name}): {} | {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n} failed: {detail}");
}

/// `Q diag(e^{i phases}) Q^dag` for a random `Q`.
fn with_spectrum(rng: &mut ChaCha8Rng, phases: &[f64]) -> CMatrix {
    let q = random_unitary(phases.len(), rng);
    &q * diag_phases(phases) * q.adjoint()
}

/// Smallest covering arc by trying every eigenphase as the arc start.
fn brute_force_arc(phases: &[f64]) -> f64 {
    phases
        .iter()
        .map(|&s| phases.iter().map(|&p| (p - s).rem_euclid(TAU)).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min)
}

fn random_phases_in_arc(rng: &mut ChaCha8Rng, d: usize, theta: f64) -> Vec<f64> {
    let offset = rng.random_range(0.0..TAU);
    let mut ph = vec![offset, offset + theta];
    for _ in 2..d {
        ph.push(offset + rng.random_range(0.0..theta));
    }
    ph.iter().map(|p| p.rem_euclid(TAU)).collect()
}

#[test]
fn criterion_1_arc_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut elapsed = Duration::ZERO;
    for i in 0..200 {
        let d = 1 + i % 8;
        let phases: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..TAU)).collect();
        let w = with_spectrum(&mut rng, &phases);
        let t = Instant::now();
        let arc = smallest_arc(&w).unwrap();
        elapsed += t.elapsed();
        worst = worst.max((arc.theta - brute_force_arc(&phases)).abs());
    }
    report(
        1,
        "arc oracle",
        worst <= 1e-9 && elapsed < Duration::from_secs(1),
        format!("max |theta - brute force| = {worst:.2e}, total time {elapsed:.2?}"),
    );
}

#[test]
fn criterion_2_single_query() {
    let cfg = SequentialConfig::default();
    let i2 = identity(2);
    let sz = diag_phases(&[0.0, PI]);
    let s = build_sequential_scheme(&i2, &sz, &cfg).unwrap();
    let psi = &s.input_state.amplitudes;
    let overlap = psi.dotc(&(&sz * psi)).norm();
    let quarter = diag_phases(&[0.0, PI / 2.0]);
    let ok = single_query_distinguishable(&i2, &sz).unwrap()
        && s.query_count == 1
        && overlap <= 1e-12
        && !single_query_distinguishable(&i2, &quarter).unwrap();
    report(2, "single-query criterion", ok, format!("queries {}, overlap {overlap:.2e}", s.query_count));
}

#[test]
fn criterion_3_tensor_power_arc() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let n = 1 + i % 4;
        let d = if n == 4 { 2 } else { 2 + i % 2 };
        // the arc law needs the complementary gap to stay the largest one
        let theta = rng.random_range(0.05..TAU / (n as f64 + 1.0));
        let phases = random_phases_in_arc(&mut rng, d, theta);
        let w = with_spectrum(&mut rng, &phases);
        let base = smallest_arc(&w).unwrap().theta;
        let mut power = w.clone();
        for _ in 1..n {
            power = kron(&power, &w);
        }
        let got = smallest_arc(&power).unwrap().theta;
        worst = worst.max((got - (n as f64 * base).min(TAU)).abs());
    }
    report(3, "tensor-power arc law", worst <= 1e-9, format!("max deviation {worst:.2e} over 50 cases"));
}

#[test]
fn criterion_4_sequential_engine() {
    let cfg = SequentialConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_overlap, mut worst_excess, mut slowest) = (0.0f64, i64::MIN, Duration::ZERO);
    let mut failures = Vec::new();
    let mut count = 0;
    while count < 100 {
        let d = 2 + count % 3;
        let theta = rng.random_range(PI / 4.0..PI);
        if ((PI / theta) - (PI / theta).round()).abs() < 1e-6 {
            continue;
        }
        count += 1;
        let u = random_unitary(d, &mut rng);
        let phases = random_phases_in_arc(&mut rng, d, theta);
        let v = &u * with_spectrum(&mut rng, &phases);
        let t = Instant::now();
        match build_sequential_scheme(&u, &v, &cfg) {
            Ok(s) => {
                slowest = slowest.max(t.elapsed());
                // outputs rebuilt by hand from the emitted interleavers
                let (mut ou, mut ov) = (&u * &s.input_state.amplitudes, &v * &s.input_state.amplitudes);
                for w in &s.interleavers {
                    ou = &u * (w * ou);
                    ov = &v * (w * ov);
                }
                worst_overlap = worst_overlap.max(ou.dotc(&ov).norm());
                worst_excess = worst_excess.max(s.query_count as i64 - (PI / theta).ceil() as i64);
            }
            Err(e) => failures.push(format!("d={d} theta={theta:.4}: {e}")),
        }
    }
    let mut commuting_exact = true;
    for i in 0..30 {
        let d = 2 + i % 3;
        let theta = rng.random_range(PI / 4.0..PI);
        if ((PI / theta) - (PI / theta).round()).abs() < 1e-6 {
            continue;
        }
        let base: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..TAU)).collect();
        let rel = random_phases_in_arc(&mut rng, d, theta);
        let u = diag_phases(&base);
        let v = diag_phases(&base.iter().zip(&rel).map(|(a, b)| a + b).collect::<Vec<_>>());
        let s = build_sequential_scheme(&u, &v, &cfg).unwrap();
        commuting_exact &= s.query_count == (PI / theta).ceil() as usize;
    }
    let ok = failures.is_empty() && worst_overlap <= 1e-6 && worst_excess <= 1 && commuting_exact;
    report(
        4,
        "sequential engine",
        ok,
        format!(
            "max overlap {worst_overlap:.2e}, max queries over ceil(pi/theta) {worst_excess}, commuting exact {commuting_exact}, slowest {slowest:.2?}, failures {failures:?}"
        ),
    );
}

#[test]
fn criterion_5_primitivity() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let dims = [(2, 2), (2, 3), (3, 2), (3, 3)];
    let mut worst = 0.0f64;
    let mut wrong = Vec::new();
    for i in 0..100 {
        let (da, db) = dims[i % 4];
        let (a, b) = (random_unitary(da, &mut rng), random_unitary(db, &mut rng));
        let f = classify_primitive(&bu(kron(&a, &b), da, db), DEFAULT_CLASSIFY_TOL).unwrap();
        if f.kind != PrimitiveKind::Product {
            wrong.push(format!("product #{i} -> {}", f.kind));
            continue;
        }
        worst = worst.max(phase_distance(f.factor_a.as_ref().unwrap(), &a).unwrap());
        worst = worst.max(phase_distance(f.factor_b.as_ref().unwrap(), &b).unwrap());
    }
    for d in [2, 3] {
        let k = classify_primitive(&bu(swap_operator(d), d, d), DEFAULT_CLASSIFY_TOL).unwrap().kind;
        if k != PrimitiveKind::SwapProduct {
            wrong.push(format!("SWAP d={d} -> {k}"));
        }
    }
    for (name, m) in [("CNOT", cnot()), ("CZ", cz())] {
        let k = classify_primitive(&bu(m, 2, 2), DEFAULT_CLASSIFY_TOL).unwrap().kind;
        if k != PrimitiveKind::Imprimitive {
            wrong.push(format!("{name} -> {k}"));
        }
    }
    report(
        5,
        "primitivity",
        wrong.is_empty() && worst <= 1e-8,
        format!("max factor phase distance {worst:.2e}, misclassified {wrong:?}"),
    );
}

#[test]
fn criterion_6_symmetry_equivalence() {
    let grid: Vec<f64> = (0..20).map(|i| -PI + (i as f64 + 0.5) * TAU / 20.0).collect();
    let mut sym_fail = Vec::new();
    let mut worst_round_trip = 0.0f64;
    for (da, db) in [(2, 2), (2, 3), (3, 3)] {
        for &x in &grid {
            let u = exp_xx_form(x, da, db).unwrap();
            if !satisfies_reversal_symmetry(&u, 1e-10) {
                sym_fail.push((da, db, x));
            }
            let back = match_exp_xx(&u, 1e-9).map_or(f64::INFINITY, |y| (y - x).abs());
            worst_round_trip = worst_round_trip.max(back);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let dims = [(2, 2), (2, 3), (3, 3)];
    let mut passing_random = 0;
    for i in 0..100 {
        let (da, db) = dims[i % 3];
        let m = random_imprimitive(&mut rng, da, db);
        if satisfies_reversal_symmetry(&bu(m, da, db), 1e-10) {
            passing_random += 1;
        }
    }
    report(
        6,
        "symmetry test",
        sym_fail.is_empty() && passing_random == 0 && worst_round_trip <= 1e-9,
        format!(
            "grid failures {sym_fail:?}, random imprimitive passing {passing_random}/100, max round trip error {worst_round_trip:.2e}"
        ),
    );
}

#[test]
fn criterion_7_synthesis() {
    let h = hadamard();
    let oracle = CircuitTemplate::from_locals(
        2,
        2,
        vec![
            LocalLayer::identity(2, 2),
            LocalLayer::new(h.clone(), h.clone()),
            LocalLayer::new(h.clone(), h),
            LocalLayer::identity(2, 2),
        ],
    )
    .unwrap();
    let oracle_err = (oracle.evaluate_matrix(&cnot()) - swap_operator(2)).norm();

    let gen = bu(cnot(), 2, 2);
    let swap = synthesize(&bu(swap_operator(2), 2, 2), &gen, &SynthesisConfig { epsilon: 1e-6, ..Default::default() });
    let (swap_ok, swap_detail) = match &swap {
        Ok(r) => (r.layer_count == 3 && r.delta <= 1e-6, format!("SWAP k = {}, delta {:.2e}", r.layer_count, r.delta)),
        Err(e) => (false, format!("SWAP failed: {e}")),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = SynthesisConfig { epsilon: 1e-3, k_max: 6, ..Default::default() };
    let (mut worst_delta, mut worst_k, mut slowest) = (0.0f64, 0, Duration::ZERO);
    let mut failures = Vec::new();
    for i in 0..20 {
        let mut t = random_unitary(4, &mut rng);
        let det = t.determinant();
        t *= Complex64::from_polar(1.0, -det.arg() / 4.0);
        let start = Instant::now();
        match synthesize(&bu(t, 2, 2), &gen, &cfg) {
            Ok(r) => {
                worst_delta = worst_delta.max(r.delta);
                worst_k = worst_k.max(r.layer_count);
            }
            Err(e) => failures.push(format!("target {i}: {e}")),
        }
        slowest = slowest.max(start.elapsed());
    }
    let ok = oracle_err < 1e-12 && swap_ok && failures.is_empty() && worst_delta <= 1e-3 && worst_k <= 6;
    report(
        7,
        "synthesis",
        ok,
        format!(
            "oracle error {oracle_err:.1e}; {swap_detail}; random SU(4): max delta {worst_delta:.2e}, max k {worst_k}, slowest {slowest:.2?}, failures {failures:?}"
        ),
    );
}

struct CorpusRun {
    label: &'static str,
    u: BipartiteUnitary,
    v: BipartiteUnitary,
    result: Result<(LoccSequentialScheme, DiscriminationReport), String>,
}

fn corpus_runs() -> &'static Vec<CorpusRun> {
    static RUNS: OnceLock<Vec<CorpusRun>> = OnceLock::new();
    RUNS.get_or_init(|| {
        corpus()
            .into_iter()
            .map(|e| {
                let (u, v) = (bu(e.u, e.dims.0, e.dims.1), bu(e.v, e.dims.0, e.dims.1));
                let result = discriminate(&u, &v, &EngineConfig::default()).map_err(|err| err.to_string());
                CorpusRun { label: e.label, u, v, result }
            })
            .collect()
    })
}

fn trace_matches(label: &str, trace: &[String]) -> bool {
    if label.starts_with("iii") {
        trace.first().is_some_and(|t| t == "iii") && (label == "iii" || trace.get(1).is_some_and(|t| t == label))
    } else {
        trace.first().is_some_and(|t| t == label)
    }
}

#[test]
fn criterion_8_end_to_end() {
    let runs = corpus_runs();
    let mut problems = Vec::new();
    let mut max_budget = 0.0f64;
    for r in runs {
        match &r.result {
            Err(e) => problems.push(format!("{}: {e}", r.label)),
            Ok((scheme, _)) => {
                let rep = verify_scheme(scheme, &r.u, &r.v).unwrap();
                max_budget = max_budget.max(scheme.budget);
                if !rep.passed || rep.overlap > scheme.budget || scheme.budget > 1e-2 {
                    problems.push(format!("{}: overlap {:.2e} budget {:.2e}", r.label, rep.overlap, scheme.budget));
                }
                if !trace_matches(r.label, &scheme.case_trace) {
                    problems.push(format!("{}: trace {:?}", r.label, scheme.case_trace));
                }
            }
        }
    }
    let labels = ["i-a", "i-b", "i-c", "ii-a", "ii-b", "iii-a", "iii-b(x=1)", "iii-b(x!=1)"];
    for l in labels {
        let n = runs.iter().filter(|r| r.label == l && r.u.dims() == (2, 2)).count();
        if n < 3 {
            problems.push(format!("only {n} pairs for {l} at 2x2"));
        }
    }
    for l in ["i-a", "ii-a"] {
        if !runs.iter().any(|r| r.label == l && r.u.dims() == (2, 3)) {
            problems.push(format!("no 2x3 pair for {l}"));
        }
    }
    report(
        8,
        "end-to-end discrimination",
        problems.is_empty(),
        format!("{} pairs, max budget {max_budget:.2e}, problems {problems:?}", runs.len()),
    );
}

#[test]
fn criterion_9_structure() {
    let runs = corpus_runs();
    let mut problems = Vec::new();
    for r in runs {
        let Ok((scheme, report)) = &r.result else {
            problems.push(format!("{}: no scheme", r.label));
            continue;
        };
        if !scheme.template.is_locc_legal(1e-10) {
            problems.push(format!("{}: non-product layer", r.label));
        }
        let text = SchemeFile::new(scheme, Some(report)).to_json();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        match scan_forward_only(&value["template"]) {
            Ok(q) if q == scheme.query_count() => {}
            other => problems.push(format!("{}: scan {other:?}", r.label)),
        }
        let again = discriminate(&r.u, &r.v, &EngineConfig::default()).unwrap();
        if SchemeFile::new(&again.0, Some(&again.1)).to_json() != text {
            problems.push(format!("{}: rerun differs", r.label));
        }
    }
    report(9, "structural guarantees", problems.is_empty(), format!("{} schemes, problems {problems:?}", runs.len()));
}
