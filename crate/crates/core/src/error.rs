use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape {shape:?} holds {expected} entries but {got} were given")]
    ShapeMismatch {
        shape: Vec<usize>,
        expected: usize,
        got: usize,
    },
    #[error("zero extent in shape {0:?}")]
    ZeroExtent(Vec<usize>),
    #[error("tensor contains a non-finite entry")]
    NonFinite,
    #[error("axis {axis} out of range for a rank-{rank} tensor")]
    AxisOutOfRange { axis: usize, rank: usize },
    #[error("axis {0} listed more than once")]
    DuplicateAxis(usize),
    #[error("extent mismatch: {left} vs {right}")]
    ExtentMismatch { left: usize, right: usize },
    #[error("invalid axis split: {0}")]
    InvalidSplit(String),
    #[error("every singular value was dropped (degenerate input)")]
    Degenerate,
    #[error("linear algebra backend failure: {0}")]
    Linalg(String),
    #[error("dense reconstruction of {n_sites} sites exceeds the cap of {cap}")]
    SizeCap { n_sites: usize, cap: usize },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("site {site} out of range for {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },
    #[error("sites {0} and {1} are not adjacent")]
    NotAdjacent(usize, usize),
    #[error("operator is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("channel acts on {got} sites, expected {expected}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("Kraus operators are not trace preserving (deviation {0:.3e})")]
    NotTracePreserving(f64),
    #[error("{name} = {value} is out of range")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("norm is zero")]
    ZeroNorm,
    #[error("size mismatch: {0} vs {1} sites")]
    SizeMismatch(usize, usize),
    #[error("local amplitudes of site {0} are not normalized")]
    Unnormalized(usize),
    #[error("loss became non-finite at iteration {0}; lower the learning rate")]
    Diverged(usize),
    #[error("operator is not positive semidefinite (eigenvalue {0:.3e})")]
    NotPositive(f64),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("format: {0}")]
    Format(String),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
