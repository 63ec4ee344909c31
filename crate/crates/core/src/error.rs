use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExposeError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("empty domain: no interior witness found in the chart")]
    EmptyDomain,
    #[error("degenerate gradient: |dρ| = {0:e}")]
    DegenerateGradient(f64),
    #[error("point is not on the boundary: |ρ| = {0:e}")]
    NotOnBoundary(f64),
    #[error("too many ray misses: {misses} of {rays} rays exited the chart")]
    RayMiss { misses: usize, rays: usize },
    #[error("boundary is not convex at the requested point (certificate {0:e})")]
    NotConvex(f64),
    #[error("family member {index}: {source}")]
    FamilyMember { index: usize, source: Box<ExposeError> },
    #[error("peak is not certified (decay constant is zero)")]
    UncertifiedPeak,
    #[error("peak does not attain 1 at its peak point (|f(ζ) - 1| = {0:e})")]
    PeakNormalization(f64),
    #[error("parameter planner did not converge: {0}")]
    NonConvergence(String),
    #[error("newton inversion diverged: residual {0:e}")]
    NewtonDivergence(f64),
    #[error("möbius dichotomy violated at r = {r}, z = {z_re}+{z_im}i")]
    DichotomyViolation { r: f64, z_re: f64, z_im: f64 },
    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),
    #[error("point too close to the unit circle: |z| = {modulus}, limit {limit}")]
    TooCloseToBoundary { modulus: f64, limit: f64 },
    #[error("region is not star-shaped about the center: {0}")]
    StarShapeViolation(String),
    #[error("consistency check failed: {0}")]
    Consistency(String),
    #[error("empty data: {0}")]
    EmptyData(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, ExposeError>;
