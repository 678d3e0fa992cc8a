use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate simplex")]
    DegenerateSimplex,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unbounded")]
    Unbounded,

    #[error("vertex lies {offset:e} off the stated affine hull")]
    OffHull { offset: f64 },

    #[error("rank deficient")]
    RankDeficient,

    #[error("no closed form implemented for moment of order {0}")]
    NoClosedForm(u32),

    #[error("instance too large: {expected:.0} expected points exceeds cap {cap:.0}")]
    InstanceTooLarge { expected: f64, cap: f64 },

    #[error("degenerate configuration ({subset} points)")]
    DegenerateConfiguration { subset: usize },

    #[error("unsupported dimension {0} (supported: 1..=4)")]
    UnsupportedDimension(usize),

    #[error("probe outside coverage")]
    ProbeOutsideCoverage,

    #[error("infinite tile")]
    InfiniteTile,

    #[error("zero probe volume")]
    ZeroProbeVolume,

    #[error("internal consistency error: {0}")]
    Inconsistent(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("trial {index} (seed {seed}) failed: {source}")]
    Trial { index: usize, seed: u64, source: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
