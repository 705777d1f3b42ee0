//! File formats, model-service clients and the command-line driver for
//! `taxolink-core`.
//!
//! Exit codes: 0 success, 1 usage or other errors, 2 reference-data
//! ingestion errors, 3 embedding provider or sequence labeler errors,
//! 4 evaluation id mismatches.

pub mod cache_io;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod replay;
pub mod service;
pub mod taxonomy_io;

pub use error::{Error, IngestError, Result};
