//! File formats, reports, cross-validation and the `polferns` command-line
//! tool on top of [`polferns_core`].

pub mod cli;
pub mod crossval;
pub mod error;
pub mod io;
pub mod manifest;
pub mod report;

pub use error::{Error, Result};
