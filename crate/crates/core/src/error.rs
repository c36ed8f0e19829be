use thiserror::Error;

/// Stages of a single time step, used to tag solver failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Setup,
    Initialize,
    ExplicitDispersive,
    ToAdvection,
    Advection,
    ToDispersive,
    ImplicitDispersive,
    Traces,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Stage::Setup => "setup",
            Stage::Initialize => "initialize",
            Stage::ExplicitDispersive => "explicit dispersive half-step",
            Stage::ToAdvection => "dispersive-to-advection transfer",
            Stage::Advection => "advection Crank-Nicolson solve",
            Stage::ToDispersive => "advection-to-dispersive transfer",
            Stage::ImplicitDispersive => "implicit dispersive half-step",
            Stage::Traces => "boundary trace reconstruction",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum KdvError {
    #[error("eigen-solver did not converge ({context})")]
    EigenSolve { context: String },

    #[error("quadrature verification failed: {0}")]
    QuadratureVerification(String),

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("singular basis system for index {index} ({space} space)")]
    SingularBasisSystem { index: usize, space: &'static str },

    #[error("singular lift system")]
    SingularLiftSystem,

    #[error("root sign pattern violated: {negative} roots with negative real part at z = {z}")]
    SignPatternViolation { negative: usize, z: String },

    #[error("kernel accuracy check failed: {0}")]
    KernelAccuracy(String),

    #[error("bandwidth violation in {matrix}: entry ({row}, {col}) = {value:e}")]
    BandwidthViolation {
        matrix: &'static str,
        row: usize,
        col: usize,
        value: f64,
    },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("initial value does not vanish at the boundary: |u0(a)| = {left:e}, |u0(b)| = {right:e}")]
    SupportViolation { left: f64, right: f64 },

    #[error("Fourier reference requires constant advection")]
    NonConstantAdvection,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{stage}: {source}")]
    AtStage {
        stage: Stage,
        #[source]
        source: Box<KdvError>,
    },

    #[error("config error{}: {field}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config {
        line: Option<usize>,
        field: String,
        message: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl KdvError {
    pub(crate) fn at(self, stage: Stage) -> KdvError {
        match self {
            e @ KdvError::AtStage { .. } => e,
            e => KdvError::AtStage {
                stage,
                source: Box::new(e),
            },
        }
    }

    pub(crate) fn config(line: Option<usize>, field: &str, message: impl Into<String>) -> KdvError {
        KdvError::Config {
            line,
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> KdvError {
        KdvError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code for the CLI: 1 config, 2 numerical, 3 IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            KdvError::Config { .. }
            | KdvError::InvalidArgument(_)
            | KdvError::NonConstantAdvection
            | KdvError::SupportViolation { .. } => 1,
            KdvError::Io { .. } => 3,
            KdvError::AtStage { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, KdvError>;
