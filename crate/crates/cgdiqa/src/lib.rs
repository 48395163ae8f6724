//! No-reference document image quality scoring from character gradients.
//!
//! The pipeline: decode to grayscale, downsample large images, detect
//! character candidate patches with MSER on the gray-level component tree,
//! compute Sobel gradient magnitudes, and pool the standard deviation of
//! gradients over all patch pixels into a scalar quality score. Higher
//! scores track sharper, more OCR-able pages. An evaluation harness
//! correlates scores against OCR-accuracy ground truth (Pearson LCC and
//! Spearman SROCC, document-wise medians).

pub mod cli;
pub mod degrade;
pub mod eval;
pub mod imgio;
pub mod mser;
pub mod scoring;

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("format error in {path} at byte {offset}: {message}")]
    Format {
        path: PathBuf,
        offset: usize,
        message: String,
    },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("manifest error at line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
