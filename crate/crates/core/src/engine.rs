//! Sequential LOCC discrimination of two bipartite unitaries.
//!
//! The engine classifies both operations and reduces the pair step by step:
//! each reduction wraps the current unknown block in a template `g` so that
//! `g(U)` and `g(V)` are structurally simpler, until a pair is reached that a
//! product input and local interleavers can separate. Every template uses the
//! unknown operation forward only, and the final circuit is flattened into a
//! single sequence of product layers and queries.
//!
//! Synthesized blocks are approximate. The engine tracks, per branch, an
//! operator-norm bound on the distance between the block actually applied
//! and the ideal one its case logic assumes; the final budget is the ideal
//! overlap plus the number of block uses times those bounds.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arc::relative_arc;
use crate::bipartite::{
    build_symmetry_set, classify_matrix, control_blocks, controlled_from_blocks, exp_xx_matrix,
    match_exp_xx_up_to_phase, u_sigma_x, PrimitiveForm, PrimitiveKind, DEFAULT_CLASSIFY_TOL,
};
use crate::error::{dims_mismatch, Error, Result};
use crate::io::{state_entries, state_from_entries};
use crate::linalg::{
    aligned_distance, c, diag_phases, expi_hermitian, identity, orthogonal_unit, phase_distance_unchecked,
    random_unitary, BipartiteUnitary, CMatrix, CVector, PureState,
};
use crate::sequential::{build_sequential_scheme, mix_seed, SequentialConfig};
use crate::synthesis::{synthesize, SynthesisConfig};
use crate::template::{CircuitTemplate, LocalLayer, Step, TemplateFile};

/// Slack added to the budget for floating-point noise in the overlap itself.
pub const OVERLAP_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Pairs closer than this in phase distance are the same operation.
    pub distinct_tol: f64,
    pub classify_tol: f64,
    /// Tolerance for recognizing an exact structured form without synthesis.
    pub certify_tol: f64,
    /// Minimum phase distance for an accepted swap-case interleaver.
    pub selection_tol: f64,
    /// Minimum distance from identity for the reflected pair `W f W f`.
    pub identity_tol: f64,
    pub x_tol: f64,
    pub max_depth: usize,
    pub budget_threshold: f64,
    /// Random interleaver candidates tried in the swap/swap case.
    pub restarts: usize,
    pub seed: u64,
    pub sequential: SequentialConfig,
    pub synthesis: SynthesisConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            distinct_tol: 1e-9,
            classify_tol: DEFAULT_CLASSIFY_TOL,
            certify_tol: 1e-10,
            selection_tol: 1e-6,
            identity_tol: 1e-6,
            x_tol: 1e-6,
            max_depth: 4,
            budget_threshold: 1e-2,
            restarts: 16,
            seed: 0,
            sequential: SequentialConfig::default(),
            synthesis: SynthesisConfig { epsilon: 1e-6, ..SynthesisConfig::default() },
        }
    }
}

impl EngineConfig {
    /// Applies one seed to every randomized stage.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.sequential.seed = seed;
        self.synthesis.seed = seed;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoccSequentialScheme {
    pub template: CircuitTemplate,
    pub input_a: PureState,
    pub input_b: PureState,
    pub achieved_overlap: f64,
    pub budget: f64,
    pub case_trace: Vec<String>,
}

impl LoccSequentialScheme {
    pub fn input(&self) -> PureState {
        PureState::product(&self.input_a, &self.input_b)
    }

    pub fn query_count(&self) -> usize {
        self.template.query_count()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationReport {
    pub overlap: f64,
    pub query_count: usize,
    pub budget: f64,
    pub passed: bool,
    /// Error bound carried by the U branch and the V branch.
    pub per_branch_error: Vec<f64>,
    pub theta_trace: Vec<f64>,
    pub case_trace: Vec<String>,
    pub wall_notes: Vec<String>,
}

/// A scheme over the current block: template plus product input.
#[derive(Clone, Debug)]
pub struct BlockScheme {
    pub template: CircuitTemplate,
    pub input_a: CVector,
    pub input_b: CVector,
    pub theta_trace: Vec<f64>,
}

#[derive(Clone, Copy)]
enum Side {
    A,
    B,
}

fn basis(d: usize, i: usize) -> CVector {
    PureState::basis(d, i).amplitudes
}

/// `X w_N X ... w_1 X` with each `w` acting on one side.
fn interleaved_template(d_a: usize, d_b: usize, interleavers: &[CMatrix], side: Side) -> CircuitTemplate {
    let mut steps = vec![Step::Query];
    for w in interleavers {
        let layer = match side {
            Side::A => LocalLayer::on_a(w.clone(), d_b),
            Side::B => LocalLayer::on_b(d_a, w.clone()),
        };
        steps.push(Step::Local(layer));
        steps.push(Step::Query);
    }
    CircuitTemplate::from_steps(d_a, d_b, steps)
}

/// Both operations are products: separate them on the side with the larger
/// relative arc and leave the other side idle in `|0>`.
pub fn case_product_product(
    u_a: &CMatrix,
    u_b: &CMatrix,
    v_a: &CMatrix,
    v_b: &CMatrix,
    cfg: &SequentialConfig,
) -> Result<BlockScheme> {
    let (d_a, d_b) = (u_a.nrows(), u_b.nrows());
    let theta_a = relative_arc(u_a, v_a)?.theta;
    let theta_b = relative_arc(u_b, v_b)?.theta;
    if theta_a <= 0.0 && theta_b <= 0.0 {
        return Err(Error::Indistinguishable);
    }
    if theta_a >= theta_b {
        let s = build_sequential_scheme(u_a, v_a, cfg)?;
        Ok(BlockScheme {
            template: interleaved_template(d_a, d_b, &s.interleavers, Side::A),
            input_a: s.input_state.amplitudes,
            input_b: basis(d_b, 0),
            theta_trace: s.theta_trace,
        })
    } else {
        let s = build_sequential_scheme(u_b, v_b, cfg)?;
        Ok(BlockScheme {
            template: interleaved_template(d_a, d_b, &s.interleavers, Side::B),
            input_a: basis(d_a, 0),
            input_b: s.input_state.amplitudes,
            theta_trace: s.theta_trace,
        })
    }
}

/// `U = U_A (x) U_B` against `V = (V_A (x) V_B) P`: one query on
/// `|0> (x) V_A^dag U_A |1>` gives overlap `<0|1> <...>`.
pub fn case_product_swap(u_a: &CMatrix, _u_b: &CMatrix, v_a: &CMatrix, _v_b: &CMatrix) -> Result<BlockScheme> {
    let d = u_a.nrows();
    if d < 2 {
        return Err(Error::DimensionTooSmall(d));
    }
    let phi = v_a.adjoint() * u_a * basis(d, 1);
    Ok(BlockScheme {
        template: CircuitTemplate::query(d, d),
        input_a: basis(d, 0),
        input_b: phi,
        theta_trace: Vec::new(),
    })
}

/// `X (I (x) w) X`, the two-query template of the swap/swap case.
pub fn swap_pair_template(d: usize, w: &CMatrix) -> CircuitTemplate {
    CircuitTemplate::from_steps(d, d, [Step::Query, Step::Local(LocalLayer::on_b(d, w.clone())), Step::Query])
}

/// Picks `w` (identity first, then seeded random unitaries) such that
/// `X (I (x) w) X` maps the two swap products to distinct products.
pub fn select_swap_interleaver(u: &CMatrix, v: &CMatrix, d: usize, cfg: &EngineConfig) -> Result<CMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 0x5a, 0));
    for attempt in 0..=cfg.restarts {
        let w = if attempt == 0 { identity(d) } else { random_unitary(d, &mut rng) };
        let g = swap_pair_template(d, &w);
        if phase_distance_unchecked(&g.evaluate_matrix(u), &g.evaluate_matrix(v)) > cfg.selection_tol {
            return Ok(w);
        }
    }
    Err(Error::VSelectionFailed(cfg.restarts))
}

/// `|0><0| (x) I + (I - |0><0|) (x) G` with `G = diag(1, e^{2 pi i/3}, 1, ...)`.
pub fn controlled_target(d_a: usize, d_b: usize) -> CMatrix {
    let mut g_phases = vec![0.0; d_b];
    g_phases[1] = 2.0 * PI / 3.0;
    let g = diag_phases(&g_phases);
    let blocks: Vec<CMatrix> = (0..d_a).map(|a| if a == 0 { identity(d_b) } else { g.clone() }).collect();
    controlled_from_blocks(&blocks)
}

/// Current unknown block with its ideal values on both branches.
#[derive(Clone, Debug)]
struct Level {
    /// The block as a template over the original query.
    template: CircuitTemplate,
    u: CMatrix,
    v: CMatrix,
    err_u: f64,
    err_v: f64,
    /// `u` and `v` hold the original V and U branches.
    flipped: bool,
}

impl Level {
    fn swapped(self) -> Self {
        Level {
            template: self.template,
            u: self.v,
            v: self.u,
            err_u: self.err_v,
            err_v: self.err_u,
            flipped: !self.flipped,
        }
    }

    fn dims(&self) -> (usize, usize) {
        self.template.dims()
    }

    /// Block `g(current)`; a given target replaces the exact evaluation and
    /// its distance is added to that branch's error.
    fn descend(&self, g: &CircuitTemplate, target_u: Option<CMatrix>, target_v: Option<CMatrix>) -> Result<Level> {
        let q = g.query_count() as f64;
        let step = |ideal: &CMatrix, err: f64, target: Option<CMatrix>| {
            let exact = g.evaluate_matrix(ideal);
            match target {
                Some(t) => {
                    let e = aligned_distance(&exact, &t);
                    (t, q * err + e)
                }
                None => (exact, q * err),
            }
        };
        let (u, err_u) = step(&self.u, self.err_u, target_u);
        let (v, err_v) = step(&self.v, self.err_v, target_v);
        Ok(Level { template: CircuitTemplate::compose(g, &self.template)?, u, v, err_u, err_v, flipped: self.flipped })
    }
}

struct Solved {
    template: CircuitTemplate,
    input_a: CVector,
    input_b: CVector,
    ideal_overlap: f64,
    /// In original (U, V) order.
    branch_error: [f64; 2],
}

struct Run<'a> {
    cfg: &'a EngineConfig,
    trace: Vec<String>,
    theta_trace: Vec<f64>,
    notes: Vec<String>,
}

impl Run<'_> {
    fn classify(&self, m: &CMatrix, (d_a, d_b): (usize, usize)) -> Result<PrimitiveForm> {
        classify_matrix(m, d_a, d_b, self.cfg.classify_tol)
    }

    fn finish(&mut self, level: &Level, block: BlockScheme) -> Result<Solved> {
        let psi = block.input_a.kronecker(&block.input_b);
        let out_u = block.template.evaluate_matrix(&level.u) * &psi;
        let out_v = block.template.evaluate_matrix(&level.v) * &psi;
        let q = block.template.query_count() as f64;
        let (eu, ev) = (q * level.err_u, q * level.err_v);
        self.theta_trace.extend(block.theta_trace);
        Ok(Solved {
            template: CircuitTemplate::compose(&block.template, &level.template)?,
            input_a: block.input_a,
            input_b: block.input_b,
            ideal_overlap: out_u.dotc(&out_v).norm(),
            branch_error: if level.flipped { [ev, eu] } else { [eu, ev] },
        })
    }

    fn solve(&mut self, level: Level, depth: usize) -> Result<Solved> {
        if depth > self.cfg.max_depth {
            return Err(Error::RecursionDepthExceeded(self.cfg.max_depth));
        }
        if phase_distance_unchecked(&level.u, &level.v) <= self.cfg.distinct_tol {
            return Err(Error::Indistinguishable);
        }
        let dims = level.dims();
        let fu = self.classify(&level.u, dims)?;
        let fv = self.classify(&level.v, dims)?;
        use PrimitiveKind::*;
        let (label, result) = match (fu.kind, fv.kind) {
            (Product, Product) => ("i-a", self.case_i_a(&level, &fu, &fv)),
            (Product, SwapProduct) => ("i-b", self.case_i_b(&level, &fu, &fv)),
            (SwapProduct, Product) => ("i-b", self.case_i_b(&level.swapped(), &fv, &fu)),
            (SwapProduct, SwapProduct) => ("i-c", self.case_i_c(level, depth)),
            (Imprimitive, Product) => ("ii-a", self.case_ii(level, "ii-a")),
            (Product, Imprimitive) => ("ii-a", self.case_ii(level.swapped(), "ii-a")),
            (Imprimitive, SwapProduct) => ("ii-b", self.case_ii(level, "ii-b")),
            (SwapProduct, Imprimitive) => ("ii-b", self.case_ii(level.swapped(), "ii-b")),
            (Imprimitive, Imprimitive) => ("iii", self.case_iii(level, depth)),
        };
        result.map_err(|e| e.in_case(label))
    }

    fn case_i_a(&mut self, level: &Level, fu: &PrimitiveForm, fv: &PrimitiveForm) -> Result<Solved> {
        self.trace.push("i-a".into());
        let factors = |f: &PrimitiveForm| (f.factor_a.clone().expect("primitive"), f.factor_b.clone().expect("primitive"));
        let ((ua, ub), (va, vb)) = (factors(fu), factors(fv));
        let block = case_product_product(&ua, &ub, &va, &vb, &self.cfg.sequential)?;
        self.finish(level, block)
    }

    fn case_i_b(&mut self, level: &Level, fu: &PrimitiveForm, fv: &PrimitiveForm) -> Result<Solved> {
        self.trace.push("i-b".into());
        let (ua, ub) = (fu.factor_a.as_ref().expect("primitive"), fu.factor_b.as_ref().expect("primitive"));
        let (va, vb) = (fv.factor_a.as_ref().expect("primitive"), fv.factor_b.as_ref().expect("primitive"));
        let block = case_product_swap(ua, ub, va, vb)?;
        self.finish(level, block)
    }

    fn case_i_c(&mut self, level: Level, depth: usize) -> Result<Solved> {
        self.trace.push("i-c".into());
        let (d, _) = level.dims();
        let w = select_swap_interleaver(&level.u, &level.v, d, self.cfg)?;
        let next = level.descend(&swap_pair_template(d, &w), None, None)?;
        self.solve(next, depth + 1)
    }

    /// Brings `level.u` into controlled form, by block extraction when it
    /// already is one, otherwise by synthesis of [`controlled_target`].
    fn controlled_level(&mut self, level: Level) -> Result<(Level, Vec<CMatrix>)> {
        let (d_a, d_b) = level.dims();
        if let Some(blocks) = control_blocks(&level.u, d_a, d_b, self.cfg.certify_tol) {
            let distinct = blocks.iter().any(|b| phase_distance_unchecked(b, &blocks[0]) > self.cfg.distinct_tol);
            if distinct {
                self.notes.push("operation already in controlled form; no synthesis".into());
                let exact = controlled_from_blocks(&blocks);
                let next = level.descend(&CircuitTemplate::query(d_a, d_b), Some(exact), None)?;
                return Ok((next, blocks));
            }
        }
        let target = controlled_target(d_a, d_b);
        let res = self.synthesize(&target, &level.u, (d_a, d_b), "controlled target")?;
        let next = level.descend(&res, Some(target.clone()), None)?;
        let blocks = control_blocks(&target, d_a, d_b, 0.0).expect("block diagonal by construction");
        Ok((next, blocks))
    }

    fn synthesize(&mut self, target: &CMatrix, generator: &CMatrix, dims: (usize, usize), what: &str) -> Result<CircuitTemplate> {
        let t = BipartiteUnitary::new(target.clone(), dims.0, dims.1)?;
        let g = BipartiteUnitary::new(generator.clone(), dims.0, dims.1)?;
        let res = synthesize(&t, &g, &self.cfg.synthesis)?;
        self.notes.push(format!(
            "synthesized {what}: k = {}, delta = {:.3e}, operator error = {:.3e}",
            res.layer_count, res.delta, res.op_error
        ));
        Ok(res.template)
    }

    fn case_ii(&mut self, level: Level, label: &str) -> Result<Solved> {
        self.trace.push(label.into());
        let dims = level.dims();
        let (level, blocks) = self.controlled_level(level)?;
        let fv = self.classify(&level.v, dims)?;
        match fv.kind {
            PrimitiveKind::Product => {
                if label == "ii-b" {
                    self.trace.push("ii-a".into());
                }
                self.controlled_vs_product(&level, &blocks, fv.factor_b.as_ref().expect("primitive"))
            }
            PrimitiveKind::SwapProduct => self.controlled_vs_swap(&level, fv.factor_a.as_ref().expect("primitive")),
            PrimitiveKind::Imprimitive => {
                Err(Error::NumericalFailure("local template applied to a primitive operation became imprimitive".into()))
            }
        }
    }

    /// `sum_a |a><a| (x) U_a` against `V'_A (x) V'_B`: keep A in the basis
    /// state whose block differs most from `V'_B` and separate on B.
    fn controlled_vs_product(&mut self, level: &Level, blocks: &[CMatrix], v_b: &CMatrix) -> Result<Solved> {
        let (d_a, d_b) = level.dims();
        let mut best: Option<(usize, f64)> = None;
        for (a, blk) in blocks.iter().enumerate() {
            if phase_distance_unchecked(blk, v_b) <= self.cfg.distinct_tol {
                continue;
            }
            let theta = relative_arc(blk, v_b)?.theta;
            if best.is_none_or(|(_, t)| theta > t) {
                best = Some((a, theta));
            }
        }
        let (a, _) = best.ok_or(Error::BranchSelectionFailed)?;
        let s = build_sequential_scheme(&blocks[a], v_b, &self.cfg.sequential)?;
        let block = BlockScheme {
            template: interleaved_template(d_a, d_b, &s.interleavers, Side::B),
            input_a: basis(d_a, a),
            input_b: s.input_state.amplitudes,
            theta_trace: s.theta_trace,
        };
        self.finish(level, block)
    }

    /// Controlled `U` against `(V'_A (x) V'_B) P`: one query on `|1>|phi>`
    /// with `phi` orthogonal to `V'_A^dag |1>`.
    fn controlled_vs_swap(&mut self, level: &Level, v_a: &CMatrix) -> Result<Solved> {
        let (d_a, d_b) = level.dims();
        let alpha = basis(d_a, 1);
        let block = BlockScheme {
            template: CircuitTemplate::query(d_a, d_b),
            input_a: alpha.clone(),
            input_b: orthogonal_unit(&(v_a.adjoint() * alpha)),
            theta_trace: Vec::new(),
        };
        self.finish(level, block)
    }

    fn case_iii(&mut self, level: Level, depth: usize) -> Result<Solved> {
        self.trace.push("iii".into());
        let (d_a, d_b) = level.dims();
        let e1 = exp_xx_matrix(1.0, d_a, d_b);
        let f = match match_exp_xx_up_to_phase(&level.u, d_a, d_b, self.cfg.certify_tol, 1.0) {
            Some((_, x)) if (x - 1.0).abs() <= self.cfg.certify_tol => {
                self.notes.push("operation already of exp_xx(1) form; no synthesis".into());
                CircuitTemplate::query(d_a, d_b)
            }
            _ => self.synthesize(&e1, &level.u, (d_a, d_b), "exp_xx(1)")?,
        };
        let inner = level.descend(&f, Some(e1.clone()), None)?;
        let fv = self.classify(&inner.v, (d_a, d_b))?;
        if fv.is_primitive() {
            return self.solve(inner, depth + 1);
        }
        if let Some((phase, x)) = match_exp_xx_up_to_phase(&inner.v, d_a, d_b, self.cfg.certify_tol, 1.0) {
            if (x - 1.0).abs() <= self.cfg.x_tol {
                self.trace.push("iii-b(x=1)".into());
                // h(f(X)) undoes the block on the U branch: X h(f(X)) is I there
                let h = self.synthesize(&level.u.adjoint(), &e1, (d_a, d_b), "inverse of the block")?;
                let g = CircuitTemplate::compose(&h, &f)?.then(&CircuitTemplate::query(d_a, d_b))?;
                let next = level.descend(&g, Some(identity(d_a * d_b)), None)?;
                return self.solve(next, depth + 1);
            }
            self.trace.push("iii-b(x!=1)".into());
            let tv = exp_xx_matrix(x, d_a, d_b) * c(phase.cos(), phase.sin());
            let inner = level.descend(&f, Some(e1), Some(tv))?;
            return self.separate_exp_xx(&inner, x);
        }
        self.trace.push("iii-a".into());
        let s = build_symmetry_set(d_a, d_b)?;
        let fv = &inner.v;
        let mut best: Option<(usize, f64)> = None;
        for (i, w) in s.elements.iter().enumerate() {
            let dist = phase_distance_unchecked(&(w * fv * w * fv), &identity(d_a * d_b));
            if best.is_none_or(|(_, d)| dist > d) {
                best = Some((i, dist));
            }
        }
        let (i, dist) = best.expect("four elements");
        if dist <= self.cfg.identity_tol {
            return Err(Error::BranchSelectionFailed);
        }
        let (wa, wb) = s.factors[i].clone();
        let layer = LocalLayer::new(wa, wb);
        let g = f.then_local(layer.clone()).then(&f)?.then_local(layer);
        let next = level.descend(&g, Some(identity(d_a * d_b)), None)?;
        self.solve(next, depth + 1)
    }

    /// `exp(i u1 (x) u2)` against `e^{i phase} exp(i x u1 (x) u2)`: with B in
    /// the `+1` eigenvector of `u2` both act on A as `exp(i u1)` and
    /// `exp(i x u1)`.
    fn separate_exp_xx(&mut self, level: &Level, x: f64) -> Result<Solved> {
        let (d_a, d_b) = level.dims();
        let u1 = u_sigma_x(d_a);
        let (ea, eb) = (expi_hermitian(&u1), expi_hermitian(&(&u1 * c(x, 0.0))));
        let s = build_sequential_scheme(&ea, &eb, &self.cfg.sequential)?;
        let plus = (basis(d_b, 0) + basis(d_b, 1)) * c(1.0 / 2f64.sqrt(), 0.0);
        let block = BlockScheme {
            template: interleaved_template(d_a, d_b, &s.interleavers, Side::A),
            input_a: s.input_state.amplitudes,
            input_b: plus,
            theta_trace: s.theta_trace,
        };
        self.finish(level, block)
    }
}

/// Full discrimination: a flat scheme, verified against `U` and `V`.
pub fn discriminate(
    u: &BipartiteUnitary,
    v: &BipartiteUnitary,
    cfg: &EngineConfig,
) -> Result<(LoccSequentialScheme, DiscriminationReport)> {
    if u.dims() != v.dims() {
        return Err(dims_mismatch("discriminate", u.dims(), v.dims()));
    }
    if phase_distance_unchecked(u.matrix(), v.matrix()) <= cfg.distinct_tol {
        return Err(Error::Indistinguishable);
    }
    let (d_a, d_b) = u.dims();
    let level = Level {
        template: CircuitTemplate::query(d_a, d_b),
        u: u.matrix().clone(),
        v: v.matrix().clone(),
        err_u: 0.0,
        err_v: 0.0,
        flipped: false,
    };
    let mut run = Run { cfg, trace: Vec::new(), theta_trace: Vec::new(), notes: Vec::new() };
    let solved = run.solve(level, 1)?;
    let budget = solved.ideal_overlap + solved.branch_error[0] + solved.branch_error[1] + OVERLAP_FLOOR;
    if budget > cfg.budget_threshold {
        return Err(Error::BudgetExceeded { budget, threshold: cfg.budget_threshold });
    }
    let mut scheme = LoccSequentialScheme {
        template: solved.template,
        input_a: PureState::normalized(solved.input_a)?,
        input_b: PureState::normalized(solved.input_b)?,
        achieved_overlap: 0.0,
        budget,
        case_trace: run.trace,
    };
    let mut report = verify_scheme(&scheme, u, v)?;
    scheme.achieved_overlap = report.overlap;
    report.per_branch_error = solved.branch_error.to_vec();
    report.theta_trace = run.theta_trace;
    report.wall_notes = run.notes;
    report.wall_notes.push(format!("ideal overlap {:.3e}", solved.ideal_overlap));
    Ok((scheme, report))
}

/// Recomputes both output states from the flat template.
pub fn verify_scheme(
    scheme: &LoccSequentialScheme,
    u: &BipartiteUnitary,
    v: &BipartiteUnitary,
) -> Result<DiscriminationReport> {
    for dims in [u.dims(), v.dims()] {
        if dims != scheme.template.dims() {
            return Err(dims_mismatch("verify_scheme", dims, scheme.template.dims()));
        }
    }
    let psi = scheme.input().amplitudes;
    let out_u = scheme.template.evaluate_matrix(u.matrix()) * &psi;
    let out_v = scheme.template.evaluate_matrix(v.matrix()) * &psi;
    let overlap = out_u.dotc(&out_v).norm();
    Ok(DiscriminationReport {
        overlap,
        query_count: scheme.template.query_count(),
        budget: scheme.budget,
        passed: overlap <= scheme.budget + OVERLAP_FLOOR,
        per_branch_error: Vec::new(),
        theta_trace: Vec::new(),
        case_trace: scheme.case_trace.clone(),
        wall_notes: Vec::new(),
    })
}

/// Serialized scheme: the flat template, the two input factors, and an
/// optional report block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeFile {
    pub template: TemplateFile,
    pub input_a: Vec<[f64; 2]>,
    pub input_b: Vec<[f64; 2]>,
    pub achieved_overlap: f64,
    pub budget: f64,
    pub case_trace: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<DiscriminationReport>,
}

impl SchemeFile {
    pub fn new(scheme: &LoccSequentialScheme, report: Option<&DiscriminationReport>) -> Self {
        Self {
            template: scheme.template.to_file(),
            input_a: state_entries(&scheme.input_a),
            input_b: state_entries(&scheme.input_b),
            achieved_overlap: scheme.achieved_overlap,
            budget: scheme.budget,
            case_trace: scheme.case_trace.clone(),
            report: report.cloned(),
        }
    }

    pub fn to_scheme(&self, tol: f64) -> Result<LoccSequentialScheme> {
        let template = CircuitTemplate::from_file(&self.template, tol)?;
        let (d_a, d_b) = template.dims();
        let input_a = state_from_entries(&self.input_a)?;
        let input_b = state_from_entries(&self.input_b)?;
        if input_a.len() != d_a || input_b.len() != d_b {
            return Err(dims_mismatch("scheme inputs", (input_a.len(), input_b.len()), (d_a, d_b)));
        }
        Ok(LoccSequentialScheme {
            template,
            input_a,
            input_b,
            achieved_overlap: self.achieved_overlap,
            budget: self.budget,
            case_trace: self.case_trace.clone(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}
