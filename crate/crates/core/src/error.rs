use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty scene")]
    EmptyScene,
    #[error("leaf size must be at least 1")]
    InvalidLeafSize,
    #[error("bvh depth {0} exceeds the traversal stack limit of {limit}", limit = crate::bvh::MAX_DEPTH)]
    DepthExceeded(usize),
    #[error("cutoff must be finite and positive, got {0}")]
    InvalidCutoff(f32),
    #[error("epsilon {epsilon} must be positive and at most cutoff/100 ({limit})")]
    InvalidEpsilon { epsilon: f32, limit: f32 },
    #[error("particle {0} has a non-finite coordinate")]
    NonFinitePosition(usize),
    #[error("particle {0} lies outside the grid bounds")]
    OutOfBounds(usize),
    #[error("grid would need {0} cells")]
    GridTooLarge(u128),
    #[error("oracle is capped at {cap} particles, got {n}")]
    OracleCapExceeded { n: usize, cap: usize },
    #[error("invalid generator parameter: {0}")]
    InvalidConfig(&'static str),
    #[error("could not place particle {index} at least {separation} away from the others after {attempts} attempts")]
    SeparationFailed {
        index: usize,
        separation: f32,
        attempts: u32,
    },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
