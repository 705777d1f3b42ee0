//! Node-text strategies, the embedding-provider contract and record building.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::taxonomy::{EntityKind, ReferenceSet, TaxonomyNode};

pub const DEFAULT_BATCH_SIZE: usize = 64;

/// Separator placed between preferred label and description.
pub const LABEL_DESCRIPTION_SEPARATOR: &str = ". ";

/// A finite, non-empty `f32` vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Result<Self, ProviderError> {
        if values.is_empty() {
            return Err(ProviderError::EmptyVector);
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(ProviderError::NonFinite { index: pos });
        }
        Ok(EmbeddingVector(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.0)
    }

    /// Rescales to unit L2 norm. Fails on the zero vector.
    pub fn normalized(&self) -> Option<EmbeddingVector> {
        let norm = self.norm();
        if norm == 0.0 || !norm.is_finite() {
            return None;
        }
        Some(EmbeddingVector(
            self.0.iter().map(|&v| (f64::from(v) / norm) as f32).collect(),
        ))
    }
}

impl AsRef<[f32]> for EmbeddingVector {
    fn as_ref(&self) -> &[f32] {
        &self.0
    }
}

pub(crate) fn l2_norm(values: &[f32]) -> f64 {
    libm::sqrt(values.iter().map(|&v| f64::from(v) * f64::from(v)).sum())
}

/// How a node's text fields are turned into one or more vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EmbeddingStrategy {
    /// One vector: preferred label.
    PreferredLabel,
    /// One vector: description.
    Description,
    /// One vector: label and description concatenated.
    LabelAndDescription,
    /// Up to three vectors: label, description, all alt labels joined.
    MultiCombinedFields,
    /// Label, description and one vector per alt label.
    MultiSeparateAltLabels,
}

impl EmbeddingStrategy {
    pub const ALL: [EmbeddingStrategy; 5] = [
        EmbeddingStrategy::PreferredLabel,
        EmbeddingStrategy::Description,
        EmbeddingStrategy::LabelAndDescription,
        EmbeddingStrategy::MultiCombinedFields,
        EmbeddingStrategy::MultiSeparateAltLabels,
    ];

    /// Short name (`s1`..`s5`), used in cache file names.
    pub fn short_name(self) -> &'static str {
        match self {
            EmbeddingStrategy::PreferredLabel => "s1",
            EmbeddingStrategy::Description => "s2",
            EmbeddingStrategy::LabelAndDescription => "s3",
            EmbeddingStrategy::MultiCombinedFields => "s4",
            EmbeddingStrategy::MultiSeparateAltLabels => "s5",
        }
    }
}

impl fmt::Display for EmbeddingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownStrategy(pub String);

impl fmt::Display for UnknownStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown embedding strategy `{}` (expected s1..s5)", self.0)
    }
}

impl core::error::Error for UnknownStrategy {}

impl FromStr for EmbeddingStrategy {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "s1" | "1" | "preferred-label" => Ok(EmbeddingStrategy::PreferredLabel),
            "s2" | "2" | "description" => Ok(EmbeddingStrategy::Description),
            "s3" | "3" | "label-and-description" => Ok(EmbeddingStrategy::LabelAndDescription),
            "s4" | "4" | "multi-combined" => Ok(EmbeddingStrategy::MultiCombinedFields),
            "s5" | "5" | "multi-separate" => Ok(EmbeddingStrategy::MultiSeparateAltLabels),
            _ => Err(UnknownStrategy(s.to_string())),
        }
    }
}

/// Which node field a vector was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FieldTag {
    PreferredLabel,
    Description,
    LabelAndDescription,
    CombinedAltLabels,
    AltLabel(u16),
}

impl FieldTag {
    /// `(kind code, alt index)` as stored in the cache.
    pub fn to_parts(self) -> (u8, u16) {
        match self {
            FieldTag::PreferredLabel => (0, 0),
            FieldTag::Description => (1, 0),
            FieldTag::LabelAndDescription => (2, 0),
            FieldTag::CombinedAltLabels => (3, 0),
            FieldTag::AltLabel(i) => (4, i),
        }
    }

    pub fn from_parts(kind: u8, index: u16) -> Option<Self> {
        match (kind, index) {
            (0, 0) => Some(FieldTag::PreferredLabel),
            (1, 0) => Some(FieldTag::Description),
            (2, 0) => Some(FieldTag::LabelAndDescription),
            (3, 0) => Some(FieldTag::CombinedAltLabels),
            (4, i) => Some(FieldTag::AltLabel(i)),
            _ => None,
        }
    }
}

impl fmt::Display for FieldTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldTag::PreferredLabel => f.write_str("preferred_label"),
            FieldTag::Description => f.write_str("description"),
            FieldTag::LabelAndDescription => f.write_str("label_and_description"),
            FieldTag::CombinedAltLabels => f.write_str("combined_alt_labels"),
            FieldTag::AltLabel(i) => write!(f, "alt_label[{i}]"),
        }
    }
}

/// One vector attached to a `(node, field)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub node_id: String,
    pub kind: EntityKind,
    pub field: FieldTag,
    pub vector: EmbeddingVector,
}

/// The texts to embed for `node` under `strategy`, in a fixed order.
///
/// An empty description never produces an empty text: single-vector
/// strategies fall back to the preferred label, multi-vector strategies
/// omit the field.
pub fn build_node_texts(node: &TaxonomyNode, strategy: EmbeddingStrategy) -> Vec<(FieldTag, String)> {
    let label = node.preferred_label.clone();
    let has_description = !node.description.trim().is_empty();
    let mut out = Vec::new();
    match strategy {
        EmbeddingStrategy::PreferredLabel => out.push((FieldTag::PreferredLabel, label)),
        EmbeddingStrategy::Description => {
            let text = if has_description {
                node.description.clone()
            } else {
                label
            };
            out.push((FieldTag::Description, text));
        }
        EmbeddingStrategy::LabelAndDescription => {
            let mut text = label;
            if has_description {
                text.push_str(LABEL_DESCRIPTION_SEPARATOR);
                text.push_str(&node.description);
            }
            out.push((FieldTag::LabelAndDescription, text));
        }
        EmbeddingStrategy::MultiCombinedFields => {
            out.push((FieldTag::PreferredLabel, label));
            if has_description {
                out.push((FieldTag::Description, node.description.clone()));
            }
            if !node.alt_labels.is_empty() {
                out.push((FieldTag::CombinedAltLabels, node.alt_labels.join("\n")));
            }
        }
        EmbeddingStrategy::MultiSeparateAltLabels => {
            out.push((FieldTag::PreferredLabel, label));
            if has_description {
                out.push((FieldTag::Description, node.description.clone()));
            }
            for (i, alt) in node.alt_labels.iter().enumerate() {
                let index = u16::try_from(i).expect("more than 65535 alt labels on one node");
                out.push((FieldTag::AltLabel(index), alt.clone()));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProviderError {
    EmptyInput,
    EmptyText { index: usize },
    EmptyVector,
    Unavailable(String),
    UnknownText(String),
    CountMismatch { expected: usize, found: usize },
    DimensionMismatch { expected: usize, found: usize },
    NonFinite { index: usize },
    ZeroNorm { index: usize },
}

impl ProviderError {
    /// Position of the offending input text, when the error names one.
    pub fn text_index(&self) -> Option<usize> {
        match self {
            ProviderError::EmptyText { index } | ProviderError::ZeroNorm { index } => Some(*index),
            _ => None,
        }
    }
}

impl fmt::Display for ProviderError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProviderError::EmptyInput => f.write_str("no texts to embed"),
            ProviderError::EmptyText { index } => write!(f, "text #{index} is empty"),
            ProviderError::EmptyVector => f.write_str("provider returned an empty vector"),
            ProviderError::Unavailable(msg) => write!(f, "embedding provider unavailable: {msg}"),
            ProviderError::UnknownText(text) => write!(f, "no replay vector for text {text:?}"),
            ProviderError::CountMismatch { expected, found } => {
                write!(f, "provider returned {found} vectors for {expected} texts")
            }
            ProviderError::DimensionMismatch { expected, found } => {
                write!(
                    f,
                    "vector dimension {found} does not match declared dimension {expected}"
                )
            }
            ProviderError::NonFinite { index } => {
                write!(f, "non-finite value in vector (position {index})")
            }
            ProviderError::ZeroNorm { index } => write!(f, "vector #{index} has zero norm"),
        }
    }
}

impl core::error::Error for ProviderError {}

/// Maps texts to vectors. Implementations must be deterministic within a
/// session and preserve input order.
pub trait EmbeddingProvider {
    /// Declared output dimension, if known before the first call.
    fn dim(&self) -> Option<usize>;

    fn embed(&mut self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, ProviderError>;
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for &mut P {
    fn dim(&self) -> Option<usize> {
        (**self).dim()
    }

    fn embed(&mut self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        (**self).embed(texts)
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Box<P> {
    fn dim(&self) -> Option<usize> {
        (**self).dim()
    }

    fn embed(&mut self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        (**self).embed(texts)
    }
}

/// Calls `provider` and enforces the contract on both sides: non-empty
/// input texts, one vector per text, uniform declared dimension, finite
/// values.
pub fn provider_embed<P>(provider: &mut P, texts: &[&str]) -> Result<Vec<EmbeddingVector>, ProviderError>
where
    P: EmbeddingProvider + ?Sized,
{
    if texts.is_empty() {
        return Err(ProviderError::EmptyInput);
    }
    if let Some(index) = texts.iter().position(|t| t.trim().is_empty()) {
        return Err(ProviderError::EmptyText { index });
    }
    let vectors = provider.embed(texts)?;
    if vectors.len() != texts.len() {
        return Err(ProviderError::CountMismatch {
            expected: texts.len(),
            found: vectors.len(),
        });
    }
    let expected = provider.dim().unwrap_or_else(|| vectors[0].dim());
    for v in &vectors {
        if v.dim() != expected {
            return Err(ProviderError::DimensionMismatch {
                expected,
                found: v.dim(),
            });
        }
        if let Some(index) = v.as_slice().iter().position(|x| !x.is_finite()) {
            return Err(ProviderError::NonFinite { index });
        }
    }
    Ok(vectors)
}

/// A provider failure while embedding a particular node.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildError {
    pub node_id: String,
    pub source: ProviderError,
}

impl fmt::Display for BuildError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "embedding node `{}`: {}", self.node_id, self.source)
    }
}

impl core::error::Error for BuildError {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        Some(&self.source)
    }
}

/// Embeds every node of `set` under `strategy`, batching provider calls in
/// node order. Vectors are L2-normalized.
pub fn build_embeddings<P>(
    set: &ReferenceSet,
    strategy: EmbeddingStrategy,
    provider: &mut P,
    batch_size: usize,
) -> Result<Vec<EmbeddingRecord>, BuildError>
where
    P: EmbeddingProvider + ?Sized,
{
    let batch_size = batch_size.max(1);
    let pending: Vec<(&TaxonomyNode, FieldTag, String)> = set
        .nodes()
        .iter()
        .flat_map(|node| {
            build_node_texts(node, strategy)
                .into_iter()
                .map(move |(field, text)| (node, field, text))
        })
        .collect();

    let mut records = Vec::with_capacity(pending.len());
    for batch in pending.chunks(batch_size) {
        let texts: Vec<&str> = batch.iter().map(|(_, _, t)| t.as_str()).collect();
        let fail = |source: ProviderError| {
            let at = source.text_index().unwrap_or(0).min(batch.len() - 1);
            BuildError {
                node_id: batch[at].0.id.clone(),
                source,
            }
        };
        let vectors = provider_embed(provider, &texts).map_err(fail)?;
        for (index, ((node, field, _), vector)) in batch.iter().zip(vectors).enumerate() {
            let vector = vector
                .normalized()
                .ok_or(ProviderError::ZeroNorm { index })
                .map_err(fail)?;
            records.push(EmbeddingRecord {
                node_id: node.id.clone(),
                kind: node.kind,
                field: *field,
                vector,
            });
        }
    }
    Ok(records)
}

/// Deterministic pseudo-embedding: the text's FNV-1a hash seeds a SplitMix64
/// stream of values in `[-1, 1)`. Equal texts give equal vectors; distinct
/// texts give near-orthogonal ones in high dimension.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
}

impl HashEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "hash embedder dimension must be positive");
        HashEmbedder { dim }
    }

    pub fn vector_for(&self, text: &str) -> Vec<f32> {
        let mut state = fnv1a64(text.as_bytes());
        (0..self.dim)
            .map(|_| {
                let bits = splitmix64(&mut state) >> 40;
                (bits as f64 / (1u64 << 23) as f64 - 1.0) as f32
            })
            .collect()
    }
}

impl EmbeddingProvider for HashEmbedder {
    fn dim(&self) -> Option<usize> {
        Some(self.dim)
    }

    fn embed(&mut self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        texts.iter().map(|t| EmbeddingVector::new(self.vector_for(t))).collect()
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
