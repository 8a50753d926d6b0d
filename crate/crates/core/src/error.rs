use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("site count {0} is not supported here")]
    InvalidSize(usize),
    #[error("site {site} out of range for {sites} sites")]
    SiteOutOfRange { site: usize, sites: usize },
    #[error("a two-site operation needs distinct sites, got {0} twice")]
    SameSite(usize),
    #[error("kernel is not a valid Hermitian BdG matrix (defect {0:.3e})")]
    NonHermitianKernel(f64),
    #[error("column {column} collapsed during orthonormalization (norm {norm:.3e})")]
    RankDeficient { column: usize, norm: f64 },
    #[error("matrix columns are not orthonormal (defect {0:.3e})")]
    NotOrthonormal(f64),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("trajectory {trajectory} failed at step {step}: {source}")]
    Trajectory {
        trajectory: u64,
        step: u64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
