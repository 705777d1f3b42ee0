//! Core of the taxolink engine: linking job-vacancy text to ESCO occupation
//! and skill nodes and to EQF qualification levels.
//!
//! Two methods are provided. *Sentence linking* embeds a whole text (or
//! just a job title) and ranks taxonomy nodes by cosine similarity.
//! *Entity linking* first finds entity mentions with a BIO sequence labeler,
//! then ranks nodes of the matching kind for each mention. The [`eval`]
//! module scores both the same way so they can be compared.
//!
//! The crate is `no_std` and only needs `alloc`. Embedding models and
//! sequence labelers are reached through the [`EmbeddingProvider`] and
//! [`SequenceLabeler`] traits; file formats, network clients and the
//! command line live in the `taxolink` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod cache;
pub mod embedding;
pub mod eval;
pub mod index;
pub mod linking;
pub mod recognition;
pub mod sentence;
pub mod taxonomy;

pub use embedding::{
    build_embeddings, build_node_texts, provider_embed, EmbeddingProvider, EmbeddingRecord, EmbeddingStrategy,
    EmbeddingVector, FieldTag, HashEmbedder, ProviderError,
};
pub use eval::{EvalError, EvalReport, Method};
pub use index::{cosine, IndexError, RankedCandidate, VectorIndex};
pub use linking::{aggregate_to_sentence, link_document, link_mention, IndexSet, MentionLinkResult};
pub use recognition::{
    recognize, repair_bio, tokenize, BioLabel, Document, LabelerError, Mention, SequenceLabeler, TokenizedSentence,
};
pub use sentence::{link_sentence, link_title, LinkError, LinkResult, SentenceQuery};
pub use taxonomy::{EntityKind, ReferenceSet, TaxonomyError, TaxonomyNode};
