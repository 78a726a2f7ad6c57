use thiserror::Error;

/// Failure modes across the crate.  Degenerate/invalid inputs are caller
/// errors; the convergence variants carry enough context to decide whether
/// a retry with a larger radius or finer sampling would help.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolitonError {
    /// Curvature/rhs formulas evaluated where a warping factor vanishes.
    #[error("degenerate point at r = {r}: the closed-form right-hand sides need r > 0, a > 0, b > 0")]
    DegeneratePoint { r: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    /// Jet evaluated beyond its trust radius.
    #[error("r = {r} is outside the series trust radius {r_series_max}")]
    OutOfRange { r: f64, r_series_max: f64 },

    /// State left the overflow guard; signals bad parameters (e.g. f0 > 0).
    #[error("solution blew up near r = {r}")]
    BlowUp { r: f64 },

    /// A sign the solution must keep (a' > 0, b' > 0, f' < 0) was lost
    /// beyond tolerance — an integration failure, not a property of the
    /// continuous solution.
    #[error("monotonicity of {quantity} violated at r = {r}")]
    MonotonicityViolation { r: f64, quantity: &'static str },

    #[error("step limit exhausted at r = {r}")]
    StepLimitExceeded { r: f64 },

    /// `f'` never reached −1 within the integrated range.
    #[error("f' stayed above -1 up to r = {r_max}; increase the range")]
    NotReached { r_max: f64 },

    /// Tail estimators disagree beyond the acceptance threshold.
    #[error("tail quantity not converged: err_estimate = {err_estimate:.3e} at r_max = {r_max}")]
    NotConverged { err_estimate: f64, r_max: f64 },

    /// Metric gap never dropped below epsilon on the scanned cone range.
    #[error("gap {max_gap:.3e} stayed above epsilon on the scanned range")]
    NeverConical { max_gap: f64 },

    /// Sweep endpoints do not straddle the target value.
    #[error("endpoint values {lo:.6} and {hi:.6} do not bracket the target")]
    BracketFailure { lo: f64, hi: f64 },

    /// Winding loop is sampled too coarsely (an angular step reached π).
    #[error("winding loop needs refinement at segment {segment}")]
    Refine { segment: usize },

    /// A winding loop sample coincides with the target.
    #[error("loop value {segment} hits the winding target")]
    OnTarget { segment: usize },

    /// Root search exhausted all starts without a preimage — a meaningful
    /// outcome (it feeds the non-surjectivity certificate), not a crash.
    #[error("no preimage found in the search box")]
    NoneFound,
}
