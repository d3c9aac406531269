//! Rank correlation, inter-annotator agreement and the human rating rubric.

mod alpha;
mod correlate;
mod rank;
mod rubric;

pub use alpha::{krippendorff_alpha, AnnotationMatrix, Scale};
pub use correlate::{correlate_metrics, correlation_table, CorrelationRow};
pub use rank::{average_ranks, kendall_tau, spearman_rho, PairedSamples};
pub use rubric::{likert_rubric, likert_rubric_half_units, majority_vote, Vote};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StatsError {
    #[error("{0} is constant")]
    DegenerateSample(&'static str),
    #[error("paired samples differ in length ({xs} vs {ys})")]
    LengthMismatch { xs: usize, ys: usize },
    #[error("need at least 2 paired samples, got {0}")]
    TooFewSamples(usize),
    #[error("sample contains a non-finite value")]
    NonFinite,
    #[error("no item has two or more annotations")]
    InsufficientOverlap,
    #[error("invalid annotation matrix: {0}")]
    InvalidMatrix(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
}
