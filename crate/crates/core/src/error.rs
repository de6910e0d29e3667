use thiserror::Error;

/// Errors raised by state construction, linear algebra and analyses.
///
/// Every variant names the violated invariant so the CLI can surface a
/// one-line diagnostic.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite entry (NaN or Inf) in input")]
    NonFinite,

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max |H - H^dagger| = {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("tolerance out of range: eps must satisfy 0 < eps < 1e-3 (got {0:.3e})")]
    BadTolerance(f64),

    #[error("party dimensions invalid: {0}")]
    BadDims(String),

    #[error("joint dimension {0} exceeds the 2^20 guard")]
    DimOverflow(usize),

    #[error("state vector is not normalized (|norm - 1| = {0:.3e})")]
    NotNormalized(f64),

    #[error("trace is not 1 (got {0:.17e})")]
    BadTrace(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPositive(f64),

    #[error("party subset invalid: {0}")]
    BadSubset(String),

    #[error("bipartition invalid: {0}")]
    BadPartition(String),

    #[error("operator is not an isometry (max |U^dagger U - I| = {0:.3e})")]
    NotIsometry(f64),

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("decomposition result is not decomposable; no reconstruction exists")]
    NotDecomposable,

    #[error("ensemble does not realize the required reduced state (max deviation {0:.3e})")]
    EnsembleMismatch(f64),

    #[error("projection branch has negligible weight ({0:.3e})")]
    ZeroBranch(f64),

    #[error("branch slice at index {index} is not a product vector (second singular value {sigma2:.3e})")]
    NotProductBranch { index: usize, sigma2: f64 },

    #[error("pair ({i},{j}) violates the partial-transpose branch condition (minor {minor:.3e})")]
    BranchViolation { i: usize, j: usize, minor: f64 },

    #[error("layered form invariant failed: {0}")]
    InvariantFailure(String),

    #[error("invalid fixture spec: {0}")]
    BadSpec(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
