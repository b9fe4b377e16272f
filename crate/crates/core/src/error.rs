use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not unitary (defect {defect:.3e})")]
    NotUnitary { defect: f64 },

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("operations are equal up to a global phase")]
    Indistinguishable,

    #[error("eigenphase arc {theta:.6} is below pi; best achievable |<psi|T|psi>| is {min_overlap:.3e}")]
    ArcTooSmall { theta: f64, min_overlap: f64 },

    #[error("arc growth stalled at stage {stage}; theta trace {trace:?}")]
    StageStalled { stage: usize, trace: Vec<f64> },

    #[error("classification is ambiguous (product residual {product:.3e}, swap residual {swap:.3e})")]
    AmbiguousClassification { product: f64, swap: f64 },

    #[error("dimension {0} is too small (need at least 2)")]
    DimensionTooSmall(usize),

    #[error("synthesis failed: best delta {best_delta:.3e} at k = {best_k}")]
    SynthesisFailed { best_delta: f64, best_k: usize },

    #[error("generator is primitive and cannot generate entangling targets")]
    GeneratorPrimitive,

    #[error("no local interleaver separated the swap-product pair after {0} candidates")]
    VSelectionFailed(usize),

    #[error("no control branch differs from the product block")]
    BranchSelectionFailed,

    #[error("recursion depth {0} exceeded")]
    RecursionDepthExceeded(usize),

    #[error("error budget {budget:.3e} exceeds acceptance threshold {threshold:.3e}")]
    BudgetExceeded { budget: f64, threshold: f64 },

    #[error("case {case} failed: {source}")]
    CaseFailure {
        case: String,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn in_case(self, case: &str) -> Error {
        match self {
            // keep the innermost label; outer cases are visible in the trace
            e @ Error::CaseFailure { .. } => e,
            e @ (Error::Indistinguishable | Error::RecursionDepthExceeded(_)) => e,
            other => Error::CaseFailure { case: case.to_string(), source: Box::new(other) },
        }
    }
}

pub(crate) fn dims_mismatch(what: &str, left: impl std::fmt::Debug, right: impl std::fmt::Debug) -> Error {
    Error::DimensionMismatch(format!("{what}: {left:?} vs {right:?}"))
}
