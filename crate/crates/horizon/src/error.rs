use crate::cq::LocalityReport;

/// Errors surfaced by window, path, queueing and sampling operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("index {index} outside window range [{base}, {end}]")]
    IndexOutOfRange { index: i64, base: i64, end: i64 },

    #[error("empty summation range: k={k} > l={l}")]
    EmptyRange { k: i64, l: i64 },

    #[error("window must hold at least one value")]
    EmptyWindow,

    #[error("windows disagree: base {base_a} len {len_a} vs base {base_b} len {len_b}")]
    WindowMismatch {
        base_a: i64,
        len_a: usize,
        base_b: i64,
        len_b: usize,
    },

    #[error("interpolation requires the knot range to contain 0 (got [{lo}, {hi}])")]
    OriginNotCovered { lo: i64, hi: i64 },

    #[error("{what} must be strictly positive (got {value})")]
    NonPositive { what: &'static str, value: f64 },

    #[error("path evaluation at {t} outside domain [{left}, {right}]")]
    OutsideDomain { t: f64, left: f64, right: f64 },

    #[error("path domain [{left}, {right}] does not cover [{need_left}, {need_right}]")]
    DomainTooSmall {
        left: f64,
        right: f64,
        need_left: f64,
        need_right: f64,
    },

    #[error("paths must share a knot grid (left {left_a} vs {left_b}, step {step_a} vs {step_b}, len {len_a} vs {len_b})")]
    GridMismatch {
        left_a: f64,
        left_b: f64,
        step_a: f64,
        step_b: f64,
        len_a: usize,
        len_b: usize,
    },

    #[error("the origin must lie on the knot grid for this operation")]
    OriginNotOnGrid,

    #[error("densities must be strictly positive and strictly decreasing")]
    BadDensities,

    #[error("negative boundary sojourn {0}")]
    NegativeSeed(f64),

    #[error("burn-in of {burn_in} steps needs input longer than {len}")]
    BurnInTooLong { burn_in: usize, len: usize },

    #[error("boundary mode not supported here: {0}")]
    UnsupportedBoundary(&'static str),

    #[error("ensemble must hold at least one line")]
    EmptyEnsemble,

    #[error("line {index} disagrees with line 0 on base/length")]
    EnsembleMismatch { index: usize },

    #[error("line index {index} out of range for {lines} lines")]
    LineOutOfRange { index: usize, lines: usize },

    #[error("position {x} lies in the burn-in region (valid from {valid_from})")]
    PositionInBurnIn { x: i64, valid_from: i64 },

    #[error("paths must be anchored at zero (got {0} at the origin)")]
    NotAnchored(f64),

    #[error("grid of {what} values must be strictly increasing")]
    UnsortedGrid { what: &'static str },

    #[error("locality check failed: running-max location {} outside [{}, {}]", report.argmax_location, -2.0 * report.horizon, -report.horizon)]
    LocalityExcluded { report: LocalityReport },

    #[error("density {rho} outside (0, 1)")]
    DensityOutOfRange { rho: f64 },

    #[error("sample of {n} values too small (need at least {min})")]
    SampleTooSmall { n: usize, min: usize },

    #[error("sample contains a non-finite value")]
    NonFiniteSample,

    #[error("samples must have equal length ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("vertex ({x1}, {y1}) is not weakly northeast of ({x0}, {y0})")]
    NotNortheast { x0: i64, y0: i64, x1: i64, y1: i64 },

    #[error("lattice size {n1}x{n2} exceeds the budget of {budget} cells")]
    BudgetExceeded { n1: usize, n2: usize, budget: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
