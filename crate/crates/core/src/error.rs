use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Shape(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid dataset: {0}")]
    InvalidData(String),
    /// Every labeled/unlabeled pair coincides, so the graph bandwidth is zero.
    #[error("degenerate dataset: average labeled-to-unlabeled distance is zero")]
    ZeroBandwidth,
    #[error("cluster {cluster} has zero total weight in the center update")]
    EmptyCluster { cluster: usize },
    #[error("class {class} has no labeled instance")]
    UnlabeledClass { class: usize },
    #[error("could not draw a labeled subset covering all classes after {attempts} attempts")]
    SplitExhausted { attempts: usize },
    #[error("safety QP did not converge in {iterations} iterations (KKT residual {residual:e})")]
    QpNotConverged { iterations: usize, residual: f64 },
}
