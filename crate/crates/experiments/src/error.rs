use thiserror::Error;

pub type Result<T> = std::result::Result<T, ExperimentError>;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Core(#[from] lpdo_core::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("depth grids differ: {0} vs {1} rows")]
    GridMismatch(usize, usize),
    #[error("fit needs at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("fit points must be positive, got ({0}, {1})")]
    NonPositive(f64, f64),
    #[error("all epsilon values are equal; the slope is undefined")]
    DegenerateGrid,
    #[error("{n_sites} sites exceed the dense reference cap of {cap}")]
    ReferenceTooLarge { n_sites: usize, cap: usize },
    #[error("worker pool: {0}")]
    Pool(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("config parse: {0}")]
    Toml(#[from] toml::de::Error),
}
