//! Per-mention retrieval and mention-to-sentence aggregation.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::embedding::EmbeddingProvider;
use crate::index::{rank_order, RankedCandidate, VectorIndex};
use crate::recognition::{recognize, Document, Mention, SequenceLabeler};
use crate::sentence::{retrieve, LinkError};
use crate::taxonomy::EntityKind;

/// One index per entity kind.
#[derive(Debug, Clone, Default)]
pub struct IndexSet {
    indexes: BTreeMap<EntityKind, VectorIndex>,
}

impl IndexSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds (or replaces) the index for its kind.
    pub fn insert(&mut self, index: VectorIndex) {
        self.indexes.insert(index.kind(), index);
    }

    pub fn get(&self, kind: EntityKind) -> Option<&VectorIndex> {
        self.indexes.get(&kind)
    }

    pub fn kinds(&self) -> impl Iterator<Item = EntityKind> + '_ {
        self.indexes.keys().copied()
    }
}

impl FromIterator<VectorIndex> for IndexSet {
    fn from_iter<I: IntoIterator<Item = VectorIndex>>(iter: I) -> Self {
        let mut set = IndexSet::new();
        for index in iter {
            set.insert(index);
        }
        set
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MentionLinkResult {
    pub mention: Mention,
    pub candidates: Vec<RankedCandidate>,
}

/// Retrieves candidates for `mention` from the index of its own kind. The
/// query text is the exact document slice.
pub fn link_mention<P>(
    mention: Mention,
    indexes: &IndexSet,
    provider: &mut P,
    k: usize,
) -> Result<MentionLinkResult, LinkError>
where
    P: EmbeddingProvider + ?Sized,
{
    let index = indexes.get(mention.kind).ok_or(LinkError::MissingIndex(mention.kind))?;
    let candidates = retrieve(&mention.text, index, provider, k)?;
    Ok(MentionLinkResult { mention, candidates })
}

/// Recognizes mentions in `doc` and links each one. No mentions means no
/// results; there is no fallback to whole-text retrieval.
pub fn link_document<P, L>(
    doc: &Document,
    labeler: &mut L,
    indexes: &IndexSet,
    provider: &mut P,
    k: usize,
) -> Result<Vec<MentionLinkResult>, LinkError>
where
    P: EmbeddingProvider + ?Sized,
    L: SequenceLabeler + ?Sized,
{
    recognize(doc, labeler)?
        .mentions
        .into_iter()
        .map(|m| link_mention(m, indexes, provider, k))
        .collect()
}

/// Merges the candidate lists of one instance's mentions into a single
/// ranking: each node once, at its best score.
pub fn aggregate_to_sentence(results: &[MentionLinkResult]) -> Vec<RankedCandidate> {
    let mut best: BTreeMap<&str, &RankedCandidate> = BTreeMap::new();
    for c in results.iter().flat_map(|r| &r.candidates) {
        best.entry(c.node_id.as_str())
            .and_modify(|cur| {
                let better = c.score > cur.score || (c.score == cur.score && c.best_field < cur.best_field);
                if better {
                    *cur = c;
                }
            })
            .or_insert(c);
    }
    let mut merged: Vec<RankedCandidate> = best.into_values().cloned().collect();
    merged.sort_by(rank_order);
    merged
}

/// Node ids of `results` in rank order, for reporting.
pub fn candidate_ids(candidates: &[RankedCandidate]) -> Vec<String> {
    candidates.iter().map(|c| c.node_id.clone()).collect()
}
