use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A model parameter violated one of the construction rules.
    #[error("invalid model: rule `{rule}` violated ({detail})")]
    InvalidModel { rule: &'static str, detail: String },

    #[error("radius {r} outside the model domain [0, {r_max}]")]
    OutOfDomain { r: f64, r_max: f64 },

    #[error("k(r) = {k} is not positive at r = {r}")]
    NonPositiveK { r: f64, k: f64 },

    /// 1 - k(r) t < 0: the point lies beyond the singularity curve.
    #[error("point (r = {r}, t = {t}) is post-singular")]
    PostSingular { r: f64, t: f64 },

    /// 1 - k(r) t = 0 where R' is required.
    #[error("R' is singular at (r = {r}, t = {t})")]
    SingularDerivative { r: f64, t: f64 },

    #[error("shell-focusing singularity at (r = {r}, t = {t})")]
    ShellFocusing { r: f64, t: f64 },

    #[error("shell-crossing singularity at (r = {r}, t = {t})")]
    ShellCrossing { r: f64, t: f64 },

    #[error("no singular start for n = {n}, a = {a}: {reason}")]
    NoNakedStart { n: u32, a: f64, reason: String },

    #[error("backward probe left the pre-singular region near r = {r}")]
    ProbeHitSingularity { r: f64 },

    #[error("step size underflow at r = {r}")]
    StepFailure { r: f64 },

    #[error("Q(a, x) undefined for x = {x} >= a = {a}")]
    QDomain { a: f64, x: f64 },

    #[error("bisection predicate is not monotone on [{lo}, {hi}]")]
    NonMonotonePredicate { lo: f64, hi: f64 },

    #[error("bisection bracket [{lo}, {hi}] does not straddle the boundary")]
    BadBracket { lo: f64, hi: f64 },

    #[error("envelope reconstruction failed: {0}")]
    Envelope(String),

    #[error("exponent fit window [{lo}, {hi}] holds {count} samples, need at least 10")]
    DegenerateWindow { lo: f64, hi: f64, count: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
