//! File-backed stand-ins for the model service: recorded embeddings and
//! gold BIO annotations.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;
use taxolink_core::recognition::{align_tokens, strip_special_tokens, DEFAULT_SPECIAL_TOKENS};
use taxolink_core::{
    BioLabel, Document, EmbeddingProvider, EmbeddingVector, EntityKind, LabelerError, ProviderError, SequenceLabeler,
    TokenizedSentence,
};

use crate::error::{Error, Result};

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(format!("opening {what} {}", path.display()), e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item =
            serde_json::from_str(&line).map_err(|e| Error::format(format!("{}:{}", path.display(), i + 1), e))?;
        out.push(item);
    }
    Ok(out)
}

#[derive(Deserialize)]
struct RecordedVector {
    text: String,
    vector: Vec<f32>,
}

/// Returns recorded vectors for known texts and fails on anything else.
/// File format: JSONL of `{"text": "...", "vector": [...]}`.
#[derive(Debug, Clone)]
pub struct ReplayProvider {
    vectors: Arc<HashMap<String, Vec<f32>>>,
    dim: Option<usize>,
}

impl ReplayProvider {
    pub fn load(path: &Path) -> Result<Self> {
        let recorded: Vec<RecordedVector> = read_jsonl(path, "replay file")?;
        Self::from_pairs(recorded.into_iter().map(|r| (r.text, r.vector)))
            .map_err(|m| Error::format(path.display().to_string(), m))
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, Vec<f32>)>) -> Result<Self, String> {
        let mut vectors = HashMap::new();
        let mut dim = None;
        for (text, vector) in pairs {
            if *dim.get_or_insert(vector.len()) != vector.len() {
                return Err(format!("vector for {text:?} has dimension {}", vector.len()));
            }
            if let Some(prev) = vectors.get(&text) {
                if prev != &vector {
                    return Err(format!("conflicting vectors for {text:?}"));
                }
            }
            vectors.insert(text, vector);
        }
        Ok(ReplayProvider {
            vectors: Arc::new(vectors),
            dim,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

impl EmbeddingProvider for ReplayProvider {
    fn dim(&self) -> Option<usize> {
        self.dim
    }

    fn embed(&mut self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        texts
            .iter()
            .map(|t| {
                let v = self
                    .vectors
                    .get(*t)
                    .ok_or_else(|| ProviderError::UnknownText((*t).to_string()))?;
                EmbeddingVector::new(v.clone())
            })
            .collect()
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct AnnotatedEntity {
    #[serde(with = "crate::formats::kind_serde")]
    pub kind: EntityKind,
    pub sentence: usize,
    pub start: usize,
    pub end: usize,
    #[serde(default)]
    pub gold_id: Option<String>,
}

/// One annotated document. Labels may be given directly or derived from
/// `entities`; when both are present the labels win.
#[derive(Debug, Clone, Deserialize)]
pub struct Annotation {
    pub id: String,
    pub tokens: Vec<Vec<String>>,
    #[serde(default)]
    pub labels: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub entities: Vec<AnnotatedEntity>,
}

impl Annotation {
    /// Per-sentence labels, with special tokens removed from both sides.
    pub fn resolve(&self) -> Result<ResolvedAnnotation, String> {
        let labels: Vec<Vec<BioLabel>> = match &self.labels {
            Some(rows) => rows
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|l| l.parse::<BioLabel>().map_err(|e| e.to_string()))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<_, _>>()?,
            None => {
                let mut rows: Vec<Vec<BioLabel>> =
                    self.tokens.iter().map(|s| vec![BioLabel::Outside; s.len()]).collect();
                for e in &self.entities {
                    let row = rows
                        .get_mut(e.sentence)
                        .ok_or_else(|| format!("entity in missing sentence {}", e.sentence))?;
                    if e.start >= e.end || e.end > row.len() {
                        return Err(format!("entity span {}..{} out of range", e.start, e.end));
                    }
                    row[e.start] = BioLabel::Begin(e.kind);
                    for l in &mut row[e.start + 1..e.end] {
                        *l = BioLabel::Inside(e.kind);
                    }
                }
                rows
            }
        };
        if labels.len() != self.tokens.len() {
            return Err(format!(
                "{} label rows for {} sentences",
                labels.len(),
                self.tokens.len()
            ));
        }
        let mut tokens_out = Vec::with_capacity(labels.len());
        let mut labels_out = Vec::with_capacity(labels.len());
        for (tokens, labels) in self.tokens.iter().zip(labels) {
            let (t, l) = strip_special_tokens(tokens.clone(), labels, DEFAULT_SPECIAL_TOKENS)
                .map_err(|e| format!("{} labels for {} tokens", e.labels, e.tokens))?;
            tokens_out.push(t);
            labels_out.push(l);
        }
        Ok(ResolvedAnnotation {
            tokens: tokens_out,
            labels: labels_out,
        })
    }
}

/// Tokens and labels of one document, special tokens removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedAnnotation {
    pub tokens: Vec<Vec<String>>,
    pub labels: Vec<Vec<BioLabel>>,
}

/// Replays gold BIO annotations, keyed by document id. The annotation's own
/// tokenization is used, aligned to the document text.
#[derive(Debug, Clone)]
pub struct GoldLabeler {
    annotations: Arc<HashMap<String, ResolvedAnnotation>>,
}

impl GoldLabeler {
    pub fn load(path: &Path) -> Result<Self> {
        let annotations: Vec<Annotation> = read_jsonl(path, "annotation file")?;
        Self::from_annotations(annotations).map_err(|m| Error::format(path.display().to_string(), m))
    }

    pub fn from_annotations(annotations: impl IntoIterator<Item = Annotation>) -> Result<Self, String> {
        let mut map = HashMap::new();
        for a in annotations {
            let resolved = a.resolve().map_err(|m| format!("document `{}`: {m}", a.id))?;
            if map.insert(a.id.clone(), resolved).is_some() {
                return Err(format!("document `{}` annotated twice", a.id));
            }
        }
        Ok(GoldLabeler {
            annotations: Arc::new(map),
        })
    }

    fn get(&self, id: &str) -> Result<&ResolvedAnnotation, LabelerError> {
        self.annotations
            .get(id)
            .ok_or_else(|| LabelerError::UnknownDocument(id.to_string()))
    }
}

impl SequenceLabeler for GoldLabeler {
    fn segment(&mut self, doc: &Document) -> Result<Option<Vec<TokenizedSentence>>, LabelerError> {
        let a = self.get(&doc.id)?;
        Ok(Some(align_tokens(&doc.text, &a.tokens)?))
    }

    fn label(&mut self, doc: &Document, sentences: &[Vec<&str>]) -> Result<Vec<Vec<BioLabel>>, LabelerError> {
        let a = self.get(&doc.id)?;
        if sentences.len() != a.labels.len() {
            return Err(LabelerError::SentenceCount {
                expected: sentences.len(),
                found: a.labels.len(),
            });
        }
        for (i, (s, l)) in sentences.iter().zip(&a.labels).enumerate() {
            if s.len() != l.len() {
                return Err(LabelerError::Length {
                    sentence: i,
                    expected: s.len(),
                    found: l.len(),
                });
            }
        }
        Ok(a.labels.clone())
    }
}
