use std::path::PathBuf;

use taxolink_core::cache::CacheError;
use taxolink_core::{EvalError, LabelerError, LinkError, ProviderError, TaxonomyError};
use thiserror::Error;

/// Stable process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const GENERAL: i32 = 1;
    pub const INGEST: i32 = 2;
    pub const PROVIDER: i32 = 3;
    pub const EVALUATION: i32 = 4;
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{}: missing required column `{column}`", path.display())]
    MissingColumn { path: PathBuf, column: String },
    #[error("{}: duplicate id `{id}` at row {row}", path.display())]
    DuplicateId { path: PathBuf, id: String, row: u64 },
    #[error("{}: empty preferred label at row {row}", path.display())]
    EmptyLabel { path: PathBuf, row: u64 },
    #[error("{}: empty id at row {row}", path.display())]
    EmptyId { path: PathBuf, row: u64 },
    #[error("{}: missing qualification string at row {row}", path.display())]
    MissingQualification { path: PathBuf, row: u64 },
    #[error("{}: EQF level `{value}` at row {row} is not an integer in 1..=8", path.display())]
    EqfLevel { path: PathBuf, row: u64, value: String },
    #[error("{}: {source}", path.display())]
    Taxonomy {
        path: PathBuf,
        #[source]
        source: TaxonomyError,
    },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("{context}: {source}")]
    Provider {
        context: String,
        #[source]
        source: ProviderError,
    },
    #[error("{context}: {source}")]
    Labeler {
        context: String,
        #[source]
        source: LabelerError,
    },
    #[error("{}: {source}", path.display())]
    Cache {
        path: PathBuf,
        #[source]
        source: CacheError,
    },
    #[error("{context}: {source}")]
    Link {
        context: String,
        #[source]
        source: LinkError,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {message}")]
    Format { context: String, message: String },
    #[error("{failed} of {total} documents failed")]
    DocumentsFailed { failed: usize, total: usize, code: i32 },
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub fn format(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Format {
            context: context.into(),
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Ingest(_) => exit::INGEST,
            Error::Provider { .. } | Error::Labeler { .. } => exit::PROVIDER,
            Error::Link { source, .. } => link_exit_code(source),
            Error::Eval(_) => exit::EVALUATION,
            Error::DocumentsFailed { code, .. } => *code,
            Error::Config(_) | Error::Cache { .. } | Error::Io { .. } | Error::Format { .. } => exit::GENERAL,
        }
    }
}

pub fn link_exit_code(e: &LinkError) -> i32 {
    match e {
        LinkError::Provider(_) | LinkError::Labeler(_) => exit::PROVIDER,
        _ => exit::GENERAL,
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
