use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("shooting bracket [{lo}, {hi}] does not separate undershoot from overshoot")]
    BracketFailure { lo: f64, hi: f64 },
    #[error("identity residual {residual:e} exceeds 1e-4; radial step too coarse")]
    StepTooCoarse { residual: f64 },
    #[error("invalid shooting parameters: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("field is identically zero")]
    ZeroField,
    #[error("center ({x}, {y}) lies outside the computational box")]
    CenterOutsideBox { x: f64, y: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field length {got} does not match grid ({expected} values)")]
    LengthMismatch { expected: usize, got: usize },
    #[error("profile tails not resolved: {0}")]
    TailsNotResolved(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("energy {energy:e} fell below the collapse floor after {iters} iterations")]
    CollapseDetected { energy: f64, iters: usize },
    #[error("residual stalled at {residual:e} after {iters} iterations")]
    MaxItersExceeded { residual: f64, iters: usize },
    #[error("invalid solver input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("at a = {a}: {source}")]
    AtStrength {
        a: f64,
        #[source]
        source: Box<SolverError>,
    },
}

impl SolverError {
    /// Strips `AtStrength` wrappers.
    pub fn root(&self) -> &SolverError {
        match self {
            SolverError::AtStrength { source, .. } => source.root(),
            other => other,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("need at least 4 states spanning 1.5 decades of a* - a (got {count} states, {decades:.2} decades)")]
    InsufficientSpan { count: usize, decades: f64 },
    #[error("rescaled comparison window of radius {radius} around ({x}, {y}) leaves the box")]
    WindowOutsideGrid { x: f64, y: f64, radius: f64 },
    #[error("state at a = {a} is not below a* = {a_star}")]
    NotBelowCritical { a: f64, a_star: f64 },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid value for `{field}`: {message}")]
    Validation { field: String, message: String },
}

/// Failure of one pipeline stage.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("stage q-profile: {0}")]
    Profile(#[from] ProfileError),
    #[error("stage sweep: {0}")]
    Solver(#[from] SolverError),
    #[error("stage analyze: {0}")]
    Analysis(#[from] AnalysisError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Field(#[from] FieldError),
}

impl PipelineError {
    /// Process exit code: 2 validation, 3 solver failure, 4 analysis failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Profile(_) | PipelineError::Solver(_) => 3,
            PipelineError::Analysis(_) => 4,
            PipelineError::Field(_) => 2,
            PipelineError::Io(_) | PipelineError::Json(_) | PipelineError::Csv(_) => 1,
        }
    }

    pub fn stage(&self) -> &'static str {
        match self {
            PipelineError::Config(_) => "config",
            PipelineError::Profile(_) => "q-profile",
            PipelineError::Solver(_) => "sweep",
            PipelineError::Analysis(_) => "analyze",
            PipelineError::Field(_) => "config",
            PipelineError::Io(_) | PipelineError::Json(_) | PipelineError::Csv(_) => "io",
        }
    }
}
