//! Every Monte-Carlo slack and numerical threshold used by the checks.

/// Standard errors allowed for binomial frequencies against a bound.
pub const CRAMER_SE_SLACK: f64 = 3.0;
/// Standard errors allowed for the Haar volume ratio.
pub const HAAR_SE_SLACK: f64 = 5.0;
/// Allowed max/min spread of `m̃(K_u)/u²`.
pub const HAAR_RATIO_SPREAD: f64 = 4.0;
/// Relative reproducibility of the extrapolated normalization constant.
pub const HAAR_KAPPA_REL_TOL: f64 = 0.01;
/// Minimum log-log slope of the additivity residual.
pub const VART_MIN_SLOPE: f64 = 2.5;
/// Residual-free tolerance for the entropy/variance inequality.
pub const ENTROPY_VARIANCE_TOL: f64 = 0.05;
/// Standard errors allowed in W₁ consistency comparisons.
pub const W1_SE_SLACK: f64 = 4.0;
/// Standard errors allowed when comparing renewal statistics.
pub const RENEWAL_SE_SLACK: f64 = 3.0;
/// Tolerance for deterministic inequalities of the detail calculus.
pub const DETAIL_TOL: f64 = 1e-6;
/// Quadrature target for the truncated Gaussian.
pub const QUADRATURE_REL_TOL: f64 = 1e-10;
