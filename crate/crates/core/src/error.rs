use alloc::boxed::Box;
use alloc::string::String;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("pixel ({x}, {y}): {source}")]
    AtPixel {
        x: usize,
        y: usize,
        source: Box<Error>,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("class {0} has no labeled pixels")]
    MissingClass(u8),

    #[error("label {label} exceeds class count {classes}")]
    LabelOutOfRange { label: u8, classes: u8 },

    #[error("constant bit vector has undefined correlation")]
    ConstantFeature,

    #[error("only {survivors} features survived preselection, {required} required")]
    InsufficientFeatures { survivors: usize, required: usize },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn at_pixel(self, x: usize, y: usize) -> Self {
        Error::AtPixel {
            x,
            y,
            source: Box::new(self),
        }
    }
}
