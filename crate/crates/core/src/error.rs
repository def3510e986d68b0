//! Error type shared by every pipeline stage.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("image has zero width or height")]
    ZeroSizeImage,
    #[error("region ({x0},{y0},{w},{h}) is outside the {width}x{height} image")]
    RegionOutOfBounds {
        x0: usize,
        y0: usize,
        w: usize,
        h: usize,
        width: usize,
        height: usize,
    },
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),

    #[error("negative optical density {0}")]
    NegativeDensity(f64),
    #[error("field has no pixels")]
    EmptyField,

    #[error("matrix is not symmetric (|a_ij - a_ji| = {0:e})")]
    NotSymmetric(f64),
    #[error("eigensolver did not converge within {0} sweeps")]
    NoConvergence(usize),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("distance matrix has negative entry {0}")]
    NegativeEntry(f64),

    #[error("field is degenerate (all pixels equal)")]
    DegenerateField,
    #[error("retained dimension {d} outside 0..={len}")]
    DOutOfRange { d: usize, len: usize },

    #[error("k = {k} too large for {n} points")]
    KTooLarge { k: usize, n: usize },
    #[error("neighbor graph is disconnected ({components} components)")]
    DisconnectedGraph { components: usize },
    #[error("target dimension {d} invalid for {n} points")]
    InvalidDimension { d: usize, n: usize },
    #[error("all MDS eigenvalues are nonpositive")]
    AllEigenvaluesNonpositive,
    #[error("{n} points exceed the isomap guard of {guard}")]
    TooManyPoints { n: usize, guard: usize },

    #[error("covariance is degenerate (condition ratio {0:e})")]
    DegenerateCovariance(f64),

    #[error("hue samples span {0:.1} degrees, no wedge under 180 degrees")]
    ArcTooWide(f64),
    #[error("every sample is achromatic")]
    AllGray,
    #[error("no samples")]
    EmptySamples,

    #[error("pure vectors are parallel")]
    ParallelPureVectors,
    #[error("degenerate input for alignment")]
    DegenerateInput,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Process exit code for the CLI. Each variant maps to its own code.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::FileNotFound(_) => 10,
            Error::UnsupportedFormat(_) => 11,
            Error::ZeroSizeImage => 12,
            Error::RegionOutOfBounds { .. } => 13,
            Error::Io(_) => 14,
            Error::NegativeDensity(_) => 20,
            Error::EmptyField => 21,
            Error::NotSymmetric(_) => 30,
            Error::NoConvergence(_) => 31,
            Error::TooFewPoints { .. } => 32,
            Error::NegativeEntry(_) => 33,
            Error::DegenerateField => 40,
            Error::DOutOfRange { .. } => 41,
            Error::KTooLarge { .. } => 50,
            Error::DisconnectedGraph { .. } => 51,
            Error::InvalidDimension { .. } => 52,
            Error::AllEigenvaluesNonpositive => 53,
            Error::TooManyPoints { .. } => 54,
            Error::DegenerateCovariance(_) => 60,
            Error::ArcTooWide(_) => 70,
            Error::AllGray => 71,
            Error::EmptySamples => 72,
            Error::ParallelPureVectors => 80,
            Error::DegenerateInput => 81,
            Error::InvalidArgument(_) => 2,
        }
    }

    /// Stable machine-readable name, printed on the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::FileNotFound(_) => "FileNotFound",
            Error::UnsupportedFormat(_) => "UnsupportedFormat",
            Error::ZeroSizeImage => "ZeroSizeImage",
            Error::RegionOutOfBounds { .. } => "RegionOutOfBounds",
            Error::Io(_) => "IoFailure",
            Error::NegativeDensity(_) => "NegativeDensity",
            Error::EmptyField => "EmptyField",
            Error::NotSymmetric(_) => "NotSymmetric",
            Error::NoConvergence(_) => "NoConvergence",
            Error::TooFewPoints { .. } => "TooFewPoints",
            Error::NegativeEntry(_) => "NegativeEntry",
            Error::DegenerateField => "DegenerateField",
            Error::DOutOfRange { .. } => "DOutOfRange",
            Error::KTooLarge { .. } => "KTooLarge",
            Error::DisconnectedGraph { .. } => "DisconnectedGraph",
            Error::InvalidDimension { .. } => "InvalidDimension",
            Error::AllEigenvaluesNonpositive => "AllEigenvaluesNonpositive",
            Error::TooManyPoints { .. } => "TooManyPoints",
            Error::DegenerateCovariance(_) => "DegenerateCovariance",
            Error::ArcTooWide(_) => "ArcTooWide",
            Error::AllGray => "AllGray",
            Error::EmptySamples => "EmptySamples",
            Error::ParallelPureVectors => "ParallelPureVectors",
            Error::DegenerateInput => "DegenerateInput",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }
}
