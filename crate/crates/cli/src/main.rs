//! `seqlocc`: classify bipartite unitaries, measure eigenphase arcs, and
//! build or check inverse-free sequential discrimination schemes.
//!
//! Exit codes: 0 ok, 1 verification failed, 2 input error,
//! 3 indistinguishable pair, 4 construction failure.

use std::fs;
use std::io::{self, Read};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use seqlocc_core::arc::{eigenphase_csv, query_count_for_arc, smallest_arc_with_tol};
use seqlocc_core::bipartite::{classify_primitive, ImprimitivityWitness};
use seqlocc_core::engine::{discriminate, verify_scheme, EngineConfig, SchemeFile};
use seqlocc_core::io::MatrixFile;
use seqlocc_core::linalg::{eig_unitary, BipartiteUnitary, DEFAULT_UNITARY_TOL};
use seqlocc_core::synthesis::synthesize;
use seqlocc_core::Error;

#[derive(Parser)]
#[command(name = "seqlocc", version, about = "Inverse-free sequential LOCC discrimination of bipartite unitaries")]
struct Cli {
    #[command(flatten)]
    run: RunConfig,
    #[command(subcommand)]
    command: Command,
}

/// Shared knobs. Defaults match the library defaults.
#[derive(Args)]
struct RunConfig {
    /// Unitarity check on input matrices.
    #[arg(long, global = true, default_value_t = DEFAULT_UNITARY_TOL)]
    tol_unitary: f64,
    /// Pairs closer than this in phase distance count as equal.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol_distinct: f64,
    /// Target overlap for the single-system sequential stage.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol_overlap: f64,
    /// Synthesis accuracy (phase distance to the target).
    #[arg(long, global = true)]
    tol_epsilon: Option<f64>,
    /// Residual allowed when recognizing product and swap forms.
    #[arg(long, global = true, default_value_t = seqlocc_core::bipartite::DEFAULT_CLASSIFY_TOL)]
    tol_classify: f64,
    /// Eigenphases closer than this are merged.
    #[arg(long, global = true, default_value_t = seqlocc_core::arc::DEFAULT_TOL_ANGLE)]
    tol_angle: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true)]
    restarts: Option<usize>,
    #[arg(long, global = true)]
    k_max: Option<usize>,
    #[arg(long, global = true)]
    max_depth: Option<usize>,
    /// Write the main output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Product / swap-product / imprimitive classification.
    Classify { matrix: String },
    /// Smallest eigenphase arc of one operator, or of U^dag V for two.
    Theta {
        matrix: String,
        other: Option<String>,
        /// Also write `index,phase,multiplicity` rows here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Build a scheme for the pair and verify it.
    Discriminate { u: String, v: String },
    /// Re-check a scheme file against a pair.
    Verify { scheme: String, u: String, v: String },
    /// Express a target as locals interleaved with a generator.
    Synth { target: String, generator: String },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_)
            | Error::DimensionMismatch(_)
            | Error::NotUnitary { .. }
            | Error::NotNormalized { .. }
            | Error::DimensionTooSmall(_) => 2,
            Error::Indistinguishable => 3,
            _ => 4,
        };
        Failure { code, message: e.to_string() }
    }
}

fn input_error(message: String) -> Failure {
    Failure { code: 2, message }
}

type Outcome = Result<u8, Failure>;

impl RunConfig {
    fn engine(&self) -> EngineConfig {
        let mut cfg = EngineConfig::default().with_seed(self.seed);
        cfg.distinct_tol = self.tol_distinct;
        cfg.classify_tol = self.tol_classify;
        cfg.sequential.distinct_tol = self.tol_distinct;
        cfg.sequential.overlap_tol = self.tol_overlap;
        cfg.sequential.tol_angle = self.tol_angle;
        cfg.synthesis.classify_tol = self.tol_classify;
        if let Some(eps) = self.tol_epsilon {
            cfg.synthesis.epsilon = eps;
        }
        if let Some(r) = self.restarts {
            cfg.restarts = r;
            cfg.synthesis.restarts = r;
        }
        if let Some(k) = self.k_max {
            cfg.synthesis.k_max = k;
        }
        if let Some(d) = self.max_depth {
            cfg.max_depth = d;
        }
        cfg
    }

    fn check(&self) -> Result<(), Failure> {
        let tols = [
            ("tol-unitary", self.tol_unitary),
            ("tol-distinct", self.tol_distinct),
            ("tol-overlap", self.tol_overlap),
            ("tol-epsilon", self.tol_epsilon.unwrap_or(1.0)),
            ("tol-classify", self.tol_classify),
            ("tol-angle", self.tol_angle),
        ];
        match tols.iter().find(|(_, t)| !(t.is_finite() && *t > 0.0)) {
            Some((name, t)) => Err(input_error(format!("--{name} must be positive, got {t}"))),
            None => Ok(()),
        }
    }

    fn emit(&self, text: &str) -> Result<(), Failure> {
        match &self.out {
            Some(p) => fs::write(p, text).map_err(|e| input_error(format!("{}: {e}", p.display()))),
            None => {
                println!("{}", text.trim_end());
                Ok(())
            }
        }
    }
}

/// Reads a path, or standard input for `-`.
fn read_source(src: &str) -> Result<String, Failure> {
    if src == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(|e| input_error(format!("stdin: {e}")))?;
        Ok(s)
    } else {
        fs::read_to_string(src).map_err(|e| input_error(format!("{src}: {e}")))
    }
}

fn read_unitary(src: &str, cfg: &RunConfig) -> Result<BipartiteUnitary, Failure> {
    let text = read_source(src)?;
    MatrixFile::parse(&text)
        .and_then(|f| f.to_unitary(cfg.tol_unitary))
        .map_err(|e| input_error(format!("{src}: {e}")))
}

fn check_single_stdin(sources: &[&str]) -> Result<(), Failure> {
    if sources.iter().filter(|s| **s == "-").count() > 1 {
        return Err(input_error("standard input can supply at most one file".into()));
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("plain data serializes")
}

#[derive(Serialize)]
struct ClassifyRecord {
    kind: String,
    d_a: usize,
    d_b: usize,
    residual: f64,
    schmidt_coefficients: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    factor_a: Option<MatrixFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    factor_b: Option<MatrixFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<WitnessRecord>,
}

#[derive(Serialize)]
struct WitnessRecord {
    /// Product input `|a>|b>` that the operator entangles.
    state_a: Vec<[f64; 2]>,
    state_b: Vec<[f64; 2]>,
    second_coefficient: f64,
}

impl From<&ImprimitivityWitness> for WitnessRecord {
    fn from(w: &ImprimitivityWitness) -> Self {
        let pairs = |v: &seqlocc_core::linalg::CVector| v.iter().map(|z| [z.re, z.im]).collect();
        Self { state_a: pairs(&w.state_a), state_b: pairs(&w.state_b), second_coefficient: w.second_coefficient }
    }
}

fn cmd_classify(cfg: &RunConfig, src: &str) -> Outcome {
    let u = read_unitary(src, cfg)?;
    let form = classify_primitive(&u, cfg.tol_classify)?;
    let record = ClassifyRecord {
        kind: form.kind.to_string(),
        d_a: u.d_a(),
        d_b: u.d_b(),
        residual: form.residual,
        schmidt_coefficients: form.schmidt_coefficients.clone(),
        factor_a: form.factor_a.as_ref().map(|m| MatrixFile::from_matrix(m, m.nrows(), 1)),
        factor_b: form.factor_b.as_ref().map(|m| MatrixFile::from_matrix(m, m.nrows(), 1)),
        witness: form.witness.as_ref().map(WitnessRecord::from),
    };
    cfg.emit(&to_json(&record))?;
    Ok(0)
}

#[derive(Serialize)]
struct ThetaRecord {
    theta: f64,
    single_query_distinguishable: bool,
    /// `None` when the operator is a global phase.
    parallel_query_count: Option<usize>,
    start_phase: f64,
    end_phase: f64,
}

fn cmd_theta(cfg: &RunConfig, first: &str, second: Option<&str>, csv: Option<&PathBuf>) -> Outcome {
    check_single_stdin(&[first, second.unwrap_or("")])?;
    let u = read_unitary(first, cfg)?;
    let op = match second {
        None => u.matrix().clone(),
        Some(src) => {
            let v = read_unitary(src, cfg)?;
            if u.dims() != v.dims() {
                return Err(input_error(format!("dimension mismatch: {:?} vs {:?}", u.dims(), v.dims())));
            }
            u.matrix().adjoint() * v.matrix()
        }
    };
    let arc = smallest_arc_with_tol(&op, cfg.tol_angle)?;
    let record = ThetaRecord {
        theta: arc.theta,
        single_query_distinguishable: arc.theta >= std::f64::consts::PI - cfg.tol_angle,
        parallel_query_count: query_count_for_arc(arc.theta, cfg.tol_angle).ok(),
        start_phase: arc.start_phase,
        end_phase: arc.end_phase,
    };
    if let Some(path) = csv {
        let phases = eig_unitary(&op)?.phases;
        fs::write(path, eigenphase_csv(&phases, cfg.tol_angle))
            .map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    }
    cfg.emit(&to_json(&record))?;
    Ok(0)
}

fn cmd_discriminate(cfg: &RunConfig, u_src: &str, v_src: &str) -> Outcome {
    check_single_stdin(&[u_src, v_src])?;
    let (u, v) = (read_unitary(u_src, cfg)?, read_unitary(v_src, cfg)?);
    let (scheme, report) = discriminate(&u, &v, &cfg.engine())?;
    cfg.emit(&SchemeFile::new(&scheme, Some(&report)).to_json())?;
    eprintln!(
        "queries {}, overlap {:.3e}, budget {:.3e}, cases {}",
        report.query_count,
        report.overlap,
        report.budget,
        report.case_trace.join(" > ")
    );
    Ok(if report.passed { 0 } else { 1 })
}

fn cmd_verify(cfg: &RunConfig, scheme_src: &str, u_src: &str, v_src: &str) -> Outcome {
    check_single_stdin(&[scheme_src, u_src, v_src])?;
    let file = SchemeFile::parse(&read_source(scheme_src)?).map_err(|e| input_error(format!("{scheme_src}: {e}")))?;
    let scheme = file.to_scheme(cfg.tol_unitary).map_err(|e| input_error(format!("{scheme_src}: {e}")))?;
    let (u, v) = (read_unitary(u_src, cfg)?, read_unitary(v_src, cfg)?);
    let report = verify_scheme(&scheme, &u, &v).map_err(|e| input_error(e.to_string()))?;
    cfg.emit(&to_json(&report))?;
    Ok(if report.passed { 0 } else { 1 })
}

fn cmd_synth(cfg: &RunConfig, target_src: &str, gen_src: &str) -> Outcome {
    check_single_stdin(&[target_src, gen_src])?;
    let (target, generator) = (read_unitary(target_src, cfg)?, read_unitary(gen_src, cfg)?);
    let mut scfg = cfg.engine().synthesis;
    if cfg.tol_epsilon.is_none() {
        scfg.epsilon = seqlocc_core::synthesis::SynthesisConfig::default().epsilon;
    }
    let result = synthesize(&target, &generator, &scfg)?;
    cfg.emit(&to_json(&result.template.to_file()))?;
    eprintln!("k = {}, delta {:.3e}, op error {:.3e}", result.layer_count, result.delta, result.op_error);
    Ok(0)
}

fn run(cli: &Cli) -> Outcome {
    let cfg = &cli.run;
    cfg.check()?;
    match &cli.command {
        Command::Classify { matrix } => cmd_classify(cfg, matrix),
        Command::Theta { matrix, other, csv } => cmd_theta(cfg, matrix, other.as_deref(), csv.as_ref()),
        Command::Discriminate { u, v } => cmd_discriminate(cfg, u, v),
        Command::Verify { scheme, u, v } => cmd_verify(cfg, scheme, u, v),
        Command::Synth { target, generator } => cmd_synth(cfg, target, generator),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
