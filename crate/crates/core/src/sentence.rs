//! Whole-text retrieval: embed the query, rank nodes of one kind.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::embedding::{provider_embed, EmbeddingProvider, ProviderError};
use crate::index::{IndexError, RankedCandidate, VectorIndex};
use crate::recognition::LabelerError;
use crate::taxonomy::EntityKind;

pub const DEFAULT_K: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub enum LinkError {
    EmptyQuery,
    InvalidK,
    KindMismatch { query: EntityKind, index: EntityKind },
    MissingIndex(EntityKind),
    Provider(ProviderError),
    Index(IndexError),
    Labeler(LabelerError),
}

impl fmt::Display for LinkError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinkError::EmptyQuery => f.write_str("query text is empty"),
            LinkError::InvalidK => f.write_str("k must be at least 1"),
            LinkError::KindMismatch { query, index } => {
                write!(f, "{query} query against a {index} index")
            }
            LinkError::MissingIndex(kind) => write!(f, "no {kind} index loaded"),
            LinkError::Provider(e) => e.fmt(f),
            LinkError::Index(e) => e.fmt(f),
            LinkError::Labeler(e) => e.fmt(f),
        }
    }
}

impl core::error::Error for LinkError {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            LinkError::Provider(e) => Some(e),
            LinkError::Index(e) => Some(e),
            LinkError::Labeler(e) => Some(e),
            _ => None,
        }
    }
}

impl From<ProviderError> for LinkError {
    fn from(e: ProviderError) -> Self {
        LinkError::Provider(e)
    }
}

impl From<IndexError> for LinkError {
    fn from(e: IndexError) -> Self {
        LinkError::Index(e)
    }
}

impl From<LabelerError> for LinkError {
    fn from(e: LabelerError) -> Self {
        LinkError::Labeler(e)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceQuery {
    pub text: String,
    pub kind: EntityKind,
    pub k: usize,
}

impl SentenceQuery {
    pub fn new(text: impl Into<String>, kind: EntityKind) -> Self {
        SentenceQuery {
            text: text.into(),
            kind,
            k: DEFAULT_K,
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkResult {
    pub query: SentenceQuery,
    pub candidates: Vec<RankedCandidate>,
}

/// Embeds `text` and returns the `k` nearest nodes of `index`.
pub(crate) fn retrieve<P>(
    text: &str,
    index: &VectorIndex,
    provider: &mut P,
    k: usize,
) -> Result<Vec<RankedCandidate>, LinkError>
where
    P: EmbeddingProvider + ?Sized,
{
    if text.trim().is_empty() {
        return Err(LinkError::EmptyQuery);
    }
    if k == 0 {
        return Err(LinkError::InvalidK);
    }
    let mut vectors = provider_embed(provider, &[text])?;
    let vector = vectors.pop().expect("provider_embed returns one vector per text");
    Ok(index.query_top_k(vector.as_slice(), k)?)
}

pub fn link_sentence<P>(query: SentenceQuery, index: &VectorIndex, provider: &mut P) -> Result<LinkResult, LinkError>
where
    P: EmbeddingProvider + ?Sized,
{
    if index.kind() != query.kind {
        return Err(LinkError::KindMismatch {
            query: query.kind,
            index: index.kind(),
        });
    }
    let candidates = retrieve(&query.text, index, provider, query.k)?;
    Ok(LinkResult { query, candidates })
}

/// Sentence linking with a job title as the whole query.
pub fn link_title<P>(title: &str, index: &VectorIndex, provider: &mut P, k: usize) -> Result<LinkResult, LinkError>
where
    P: EmbeddingProvider + ?Sized,
{
    link_sentence(SentenceQuery::new(title, index.kind()).with_k(k), index, provider)
}
