use thiserror::Error;

#[derive(Error, Debug)]
pub enum FdaError {
    #[error(transparent)]
    Spline(#[from] splinet::SplineError),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("bad magic number in {path}: expected {expected:#010x}, got {got:#010x}")]
    BadMagic {
        path: String,
        expected: u32,
        got: u32,
    },

    #[error("{path}: {what}")]
    MalformedData { path: String, what: String },

    #[error("label/image count mismatch: {labels} labels vs {images} images")]
    CountMismatch { labels: usize, images: usize },

    #[error(
        "image must be a square power-of-two side for the Hilbert flattening, got {height}x{width}"
    )]
    NotPowerOfTwoSquare { height: usize, width: usize },

    #[error("unknown flattener: {0}")]
    UnknownFlattener(String),

    #[error("no candidate knots remain")]
    NoCandidates,

    #[error("knot selection needs at least {needed} grid points, got {got}")]
    GridTooSmall { needed: usize, got: usize },

    #[error("start knots must be grid points, {0} is not")]
    KnotOffGrid(f64),

    #[error("class {0} needs at least 2 training curves")]
    TooFewCurves(usize),

    #[error("label {label} outside 0..{classes}")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("eigenvalue count {requested} exceeds the {available} retained eigenfunctions")]
    TooManyEigenfunctions { requested: usize, available: usize },

    #[error("negative eigenvalue {0} in the generator model")]
    NegativeEigenvalue(f64),

    #[error("truncation {truncation} exceeds the {eigenfunctions} eigenfunctions of the model")]
    TruncationTooDeep {
        truncation: usize,
        eigenfunctions: usize,
    },

    #[error("class {0} has no data")]
    EmptyClass(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing artifact: {0}")]
    MissingArtifact(String),

    #[error("{context}: {source}")]
    Stage {
        context: String,
        #[source]
        source: Box<FdaError>,
    },
}

impl FdaError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        FdaError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn with_context(self, context: impl Into<String>) -> Self {
        FdaError::Stage {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Process exit code class: 2 for data problems, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            FdaError::Spline(e) if e.is_numeric() => 3,
            FdaError::Spline(_) => 2,
            FdaError::Stage { source, .. } => source.exit_code(),
            FdaError::Config(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, FdaError>;
