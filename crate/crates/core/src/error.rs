//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised while querying or validating a hybrid system description.
#[derive(Debug, Clone, Error)]
pub enum HybridError {
    /// More than one mode domain accepted the state. Domains must be
    /// pairwise disjoint, so this indicates a malformed scene.
    #[error("state accepted by modes {0} and {1}; domains must be disjoint")]
    AmbiguousMode(usize, usize),
    /// No mode domain accepted the state.
    #[error("state lies outside every mode domain")]
    NoMode,
    /// A reset was requested for a state not within `eps_guard` of the guard.
    #[error("state is {dist} from guard {guard}, beyond tolerance {tol}")]
    NotOnGuard { guard: usize, dist: f64, tol: f64 },
    /// A reset landed outside the target mode's domain.
    #[error("reset across guard {guard} landed outside mode {to_mode}'s domain")]
    BadLanding { guard: usize, to_mode: usize },
    #[error("expected vector of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no guard declared from mode {from} to mode {to}")]
    NoSuchGuard { from: usize, to: usize },
    #[error("invalid system description: {0}")]
    Invalid(String),
}

/// Errors raised by the trajectory optimizer.
#[derive(Debug, Clone, Error)]
pub enum SolveError {
    /// The penalty was driven to its cap without the constraint violation
    /// improving; the boundary-value problem is treated as unreachable.
    #[error("segment infeasible: constraint violation {violation} stalled at penalty cap")]
    Infeasible { violation: f64 },
    #[error("solver hit the iteration budget with KKT residual {kkt}")]
    MaxIterations { kkt: f64, violation: f64 },
    #[error("bad problem: {0}")]
    BadProblem(String),
    #[error(transparent)]
    Hybrid(#[from] HybridError),
}

/// Errors raised by the samplers.
#[derive(Debug, Error)]
pub enum SampleError {
    /// The domain predicate rejected every candidate; the region is empty
    /// or vanishingly small relative to the sampling radius.
    #[error("no valid sample found in domain after {attempts} attempts")]
    EmptyDomain { attempts: usize },
    #[error("sampling box has zero or negative width on dimension {0}")]
    DegenerateBox(usize),
}

/// Errors raised during roadmap construction and search.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error("no path from start to goal in the mode graph")]
    NoPath,
    #[error("state could not be attached to the roadmap: {0}")]
    Attach(#[from] HybridError),
    #[error("vertex id {0} out of range")]
    BadVertex(usize),
}

/// Errors raised by the learned cost model.
#[derive(Debug, Error)]
pub enum ModelError {
    /// Training batch has too few converged samples to fit a model.
    #[error("degenerate training batch: {0}")]
    DegenerateBatch(String),
    #[error("model file is not in the expected format: {0}")]
    FormatError(String),
    #[error("model schema version {found} unsupported (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },
    #[error("feature dimension mismatch: model expects {expected}, got {got}")]
    FeatureDim { expected: usize, got: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Top-level pipeline error, carrying the process exit code mapping.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Hybrid(#[from] HybridError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl PipelineError {
    /// Process exit code for the CLI: distinct codes for "no path" and
    /// "infeasible" so scripts can branch on the failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Graph(GraphError::NoPath) => 2,
            PipelineError::Solve(SolveError::Infeasible { .. }) => 3,
            PipelineError::Config(_) | PipelineError::Io(_) => 4,
            _ => 1,
        }
    }
}
