use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid frequency menu: {0}")]
    InvalidMenu(String),

    #[error("invalid task: {0}")]
    InvalidTask(String),

    #[error("invalid task set: {0}")]
    InvalidTaskSet(String),

    #[error("empty schedule")]
    EmptySchedule,

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("expected {expected} scheduling functions, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid kill policy: {0}")]
    InvalidPolicy(String),

    #[error("missing percentile data for task {0}")]
    MissingPercentileData(usize),

    #[error("empty sample set")]
    EmptySamples,

    #[error("no time remaining (now = {now}, deadline = {deadline})")]
    NoTimeRemaining { now: f64, deadline: f64 },

    #[error("empty resume set")]
    EmptyResumeSet,

    #[error("task {0} has no global WCEC bound")]
    MissingGlobalWcec(usize),

    #[error("task {0} has no remaining-cycles estimate (needs a global WCEC or an overrun factor)")]
    MissingRemainingEstimate(usize),

    #[error("not an increase: observed {observed} < wcec {wcec} for task {task}")]
    NotAnIncrease { task: usize, observed: u64, wcec: u64 },

    #[error("not a decrease: observed {observed} > wcec {wcec} for task {task}")]
    NotADecrease { task: usize, observed: u64, wcec: u64 },

    #[error("duplicate overrun event for task {0}")]
    DuplicateEvent(usize),

    #[error("task index {index} out of range (N = {n})")]
    TaskOutOfRange { index: usize, n: usize },

    #[error("invalid workload: {0}")]
    InvalidWorkload(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty sweep")]
    EmptySweep,

    #[error("trace parse error at line {line}: {message}")]
    TraceParse { line: u64, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
