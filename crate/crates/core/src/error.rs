use alloc::string::String;

/// Errors raised by the core pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("mesh has no faces")]
    EmptyMesh,
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("point cloud is degenerate (covariance rank < 3)")]
    DegenerateCloud,
    #[error("bounds have zero extent")]
    DegenerateBounds,
    #[error("region normals are parallel")]
    DegeneratePair,
    #[error("box has no source regions")]
    NoSourceRegions,
    #[error("box has no visible faces")]
    NoVisibleFaces,
    #[error("no view has enough non-coplanar points inside the box")]
    NoValidViews,
    #[error("too few points: need {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("covariance is degenerate")]
    DegenerateCovariance,
    #[error("box does not contain any voxel center")]
    EmptyIntersection,
    #[error("dataset has {got} other shapes, need at least {needed}")]
    InsufficientDataset { needed: usize, got: usize },
    #[error("weight matrix entry ({row}, {col}) is not finite")]
    NonFiniteWeight { row: usize, col: usize },
    #[error("shape context has no proposals")]
    EmptyContext,
    #[error("problem is infeasible")]
    Infeasible,
    #[error("numerical failure in the LP solver: {0}")]
    NumericalFailure(&'static str),
    #[error("problem too large for exhaustive search: {0} binary variables")]
    TooLarge(usize),
    #[error("empty input")]
    EmptyInput,
    #[error("grid lattices differ")]
    ResolutionMismatch,
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
