use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("truncation too small: need K >= {needed}, got {got}")]
    TruncationTooSmall { needed: usize, got: usize },

    #[error("quadrature did not converge for coefficient index {index}")]
    QuadratureDiverged { index: usize },

    #[error("adaptive quadrature did not reach tolerance on [{lo}, {hi}]")]
    IntegralDiverged { lo: f64, hi: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("hurst index {hurst} outside the Breuer-Major regime for rank {rank}")]
    OutsideRegime { rank: u32, hurst: f64 },

    #[error("circulant embedding eigenvalue {value:.3e} below tolerance {tol:.3e} at size {size}")]
    NegativeEmbedding { value: f64, tol: f64, size: usize },

    #[error("unsupported cumulant order {0} (at most 8)")]
    UnsupportedOrder(usize),

    #[error("identically zero: {0}")]
    IdenticallyZero(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("branch tracking failed at t = {t}")]
    BranchTracking { t: f64 },

    #[error("curves are not comparable: {0}")]
    GridMismatch(String),

    #[error("degenerate scaling: third cumulant is zero")]
    DegenerateScaling,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
