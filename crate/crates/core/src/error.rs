use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("a ring network needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),

    #[error("expected {expected} edge parameters (one per ring edge), got {got}")]
    EdgeCountMismatch { expected: usize, got: usize },

    #[error("edge {edge}: alpha = {alpha} is outside [0, 0.5]; map alpha -> 1 - alpha before building the network")]
    AlphaOutOfRange { edge: usize, alpha: f64 },

    #[error("basis index {index} out of range for {n_edges} edges")]
    IndexOutOfRange { index: usize, n_edges: usize },

    #[error("vertex {vertex} out of range for a ring of {n_vertices} vertices")]
    VertexOutOfRange { vertex: usize, n_vertices: usize },

    #[error("dimension cap exceeded: N = {n} > {cap} ({hint})")]
    DimensionCap { n: usize, cap: usize, hint: &'static str },

    #[error("coin state is not normalized: |c0|^2 + |c1|^2 = {0}")]
    CoinNotNormalized(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("invalid bipartition: {0}")]
    Bipartition(String),

    #[error("line walk of {steps} steps overflows the allocated half-width {half_width}")]
    BoundaryOverflow { steps: usize, half_width: usize },

    #[error("degenerate least-squares design: {0}")]
    DegenerateFit(String),

    #[error("distribution label sets differ")]
    LabelMismatch,

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("empty series")]
    EmptySeries,

    #[error("invalid sampler: {0}")]
    InvalidSampler(String),

    #[error("target spread infeasible: {0}")]
    InfeasibleSigma(String),

    #[error("reference curve: {0}")]
    Curve(String),

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
