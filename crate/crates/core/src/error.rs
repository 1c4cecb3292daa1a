use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("{0} must not be empty")]
    Empty(&'static str),
    #[error("homography is singular")]
    SingularHomography,
    #[error("degenerate point configuration: three points are collinear")]
    DegenerateConfiguration,
    #[error("region does not intersect the depth map")]
    EmptyIntersection,
    #[error("scale aligner has not been initialized")]
    UninitializedAligner,
    #[error("plate does not project inside the frame")]
    OutOfFrame,
}
