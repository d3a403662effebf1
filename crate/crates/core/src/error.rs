use thiserror::Error;

/// Every failure mode surfaced by the numerical modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{what} did not converge after {iterations} iterations (last residual {residual:e})")]
    ConvergenceFailure {
        what: String,
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("state lies on a symmetry axis (x={x}, y={y}); use the series start-up")]
    AxisSingularity { x: f64, y: f64 },

    #[error("integration failed at arclength {arclength}: {reason}")]
    IntegrationFailure { arclength: f64, reason: String },

    #[error("curve left the open quadrant at arclength {arclength}")]
    DomainViolation { arclength: f64 },

    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),

    #[error("test function does not vanish on the window ends (phi={left:e} at start, {right:e} at end)")]
    SupportViolation { left: f64, right: f64 },

    #[error("discretization error: {0}")]
    Discretization(String),

    #[error("insufficient oscillation: requested {requested} negative directions, found {found}")]
    InsufficientOscillation { requested: usize, found: usize },

    #[error("solution basis is dependent (Wronskian {wronskian:e})")]
    DependentBasis { wronskian: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("linearized operator is numerically singular (smallest pivot {smallest_pivot:e})")]
    NearKernel { smallest_pivot: f64 },

    #[error("shape mismatch: expected {expected} samples, found {found}")]
    Shape { expected: usize, found: usize },

    #[error("ambiguous nearest point: arclengths {s_a} and {s_b} are equidistant")]
    AmbiguousProjection { s_a: f64, s_b: f64 },

    #[error("window of width {width} is too narrow for a bump (need at least {minimum})")]
    NarrowWindow { width: f64, minimum: f64 },

    #[error("grid spacing {spacing} does not resolve the transition layer (max 0.25)")]
    Resolution { spacing: f64 },
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;

impl LabError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        LabError::InvalidInput(msg.into())
    }

    /// True for the errors produced by iterative solvers failing to converge.
    pub fn is_convergence(&self) -> bool {
        matches!(
            self,
            LabError::ConvergenceFailure { .. }
                | LabError::IntegrationFailure { .. }
                | LabError::InsufficientOscillation { .. }
                | LabError::DependentBasis { .. }
                | LabError::NearKernel { .. }
        )
    }
}
