//! Mention detection: rule-based chunking, BIO post-processing and
//! span extraction around a pluggable sequence labeler.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::taxonomy::EntityKind;

/// Special tokens dropped before BIO repair.
pub const DEFAULT_SPECIAL_TOKENS: &[&str] = &["[SEP]", "[CLS]", "[PAD]", "[UNK]", "<s>", "</s>", "<pad>"];

/// Words whose trailing period never ends a sentence.
pub const ABBREVIATIONS: &[&str] = &["e.g.", "i.e.", "etc.", "Mr.", "Ms.", "Dr.", "vs.", "No."];

/// Characters split off as single-character tokens.
pub const PUNCTUATION: &[char] = &[
    '.', ',', ';', ':', '!', '?', '(', ')', '[', ']', '{', '}', '\'', '"', '/', '&',
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmptyDocument;

impl fmt::Display for EmptyDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("document text is empty")
    }
}

impl core::error::Error for EmptyDocument {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub text: String,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Result<Self, EmptyDocument> {
        let text = text.into();
        if text.is_empty() {
            return Err(EmptyDocument);
        }
        Ok(Document { id: id.into(), text })
    }
}

/// A token with its byte range in the document text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.text
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedSentence {
    pub index: usize,
    /// Document-wide index of this sentence's first token.
    pub first_token: usize,
    pub tokens: Vec<Token>,
}

impl TokenizedSentence {
    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.text.as_str()).collect()
    }
}

fn is_sentence_end(text: &str, pos: usize, ch: char) -> bool {
    if !matches!(ch, '.' | '!' | '?') {
        return false;
    }
    let after = pos + ch.len_utf8();
    if !text[after..].chars().next().is_some_and(char::is_whitespace) {
        return false;
    }
    if ch != '.' {
        return true;
    }
    let chunk_start = text[..pos]
        .char_indices()
        .rev()
        .find(|(_, c)| c.is_whitespace())
        .map_or(0, |(i, c)| i + c.len_utf8());
    let chunk = &text[chunk_start..after];
    !ABBREVIATIONS.iter().any(|abbr| {
        chunk.ends_with(abbr)
            && chunk[..chunk.len() - abbr.len()]
                .chars()
                .next_back()
                .is_none_or(|c| !c.is_alphanumeric())
    })
}

fn tokenize_span(text: &str, start: usize, end: usize, out: &mut Vec<Token>) {
    let mut word_start: Option<usize> = None;
    let push = |out: &mut Vec<Token>, s: usize, e: usize| {
        out.push(Token {
            text: text[s..e].to_string(),
            start: s,
            end: e,
        })
    };
    for (off, ch) in text[start..end].char_indices() {
        let pos = start + off;
        if ch.is_whitespace() || PUNCTUATION.contains(&ch) {
            if let Some(s) = word_start.take() {
                push(out, s, pos);
            }
            if !ch.is_whitespace() {
                push(out, pos, pos + ch.len_utf8());
            }
        } else if word_start.is_none() {
            word_start = Some(pos);
        }
    }
    if let Some(s) = word_start {
        push(out, s, end);
    }
}

/// Splits `doc` into sentences and tokens. Sentences end at `.`, `!` or `?`
/// followed by whitespace, except after a listed abbreviation. Tokens are
/// whitespace-separated with punctuation detached. Sentences without tokens
/// are dropped.
pub fn tokenize(doc: &Document) -> Vec<TokenizedSentence> {
    let text = doc.text.as_str();
    let mut bounds = Vec::new();
    let mut start = 0;
    for (pos, ch) in text.char_indices() {
        if is_sentence_end(text, pos, ch) {
            bounds.push((start, pos + ch.len_utf8()));
            start = pos + ch.len_utf8();
        }
    }
    bounds.push((start, text.len()));

    let mut sentences = Vec::new();
    let mut first_token = 0;
    for (s, e) in bounds {
        let mut tokens = Vec::new();
        tokenize_span(text, s, e, &mut tokens);
        if tokens.is_empty() {
            continue;
        }
        let count = tokens.len();
        sentences.push(TokenizedSentence {
            index: sentences.len(),
            first_token,
            tokens,
        });
        first_token += count;
    }
    sentences
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentError {
    pub sentence: usize,
    pub token: String,
}

impl fmt::Display for AlignmentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "token {:?} of sentence {} does not occur in the document text",
            self.token, self.sentence
        )
    }
}

impl core::error::Error for AlignmentError {}

/// Locates externally supplied tokens in `text`, left to right, giving them
/// byte offsets. Used when a labeler carries its own tokenization.
pub fn align_tokens<S: AsRef<str>>(text: &str, sentences: &[Vec<S>]) -> Result<Vec<TokenizedSentence>, AlignmentError> {
    let mut cursor = 0;
    let mut first_token = 0;
    let mut out = Vec::with_capacity(sentences.len());
    for (index, sentence) in sentences.iter().enumerate() {
        let mut tokens = Vec::with_capacity(sentence.len());
        for token in sentence {
            let token = token.as_ref();
            let found = if token.is_empty() {
                None
            } else {
                text[cursor..].find(token)
            };
            let Some(rel) = found else {
                return Err(AlignmentError {
                    sentence: index,
                    token: token.to_string(),
                });
            };
            let start = cursor + rel;
            cursor = start + token.len();
            tokens.push(Token {
                text: token.to_string(),
                start,
                end: cursor,
            });
        }
        let count = tokens.len();
        out.push(TokenizedSentence {
            index,
            first_token,
            tokens,
        });
        first_token += count;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BioLabel {
    Outside,
    Begin(EntityKind),
    Inside(EntityKind),
}

impl BioLabel {
    pub fn kind(self) -> Option<EntityKind> {
        match self {
            BioLabel::Outside => None,
            BioLabel::Begin(k) | BioLabel::Inside(k) => Some(k),
        }
    }

    fn continues(self, kind: EntityKind) -> bool {
        matches!(self, BioLabel::Begin(k) | BioLabel::Inside(k) if k == kind)
    }
}

impl fmt::Display for BioLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BioLabel::Outside => f.write_str("O"),
            BioLabel::Begin(k) => write!(f, "B-{k}"),
            BioLabel::Inside(k) => write!(f, "I-{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownLabel(pub String);

impl fmt::Display for UnknownLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown BIO label `{}`", self.0)
    }
}

impl core::error::Error for UnknownLabel {}

impl FromStr for BioLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || UnknownLabel(s.to_string());
        if s == "O" {
            return Ok(BioLabel::Outside);
        }
        let (prefix, kind) = s.split_once('-').ok_or_else(unknown)?;
        let kind: EntityKind = kind.parse().map_err(|_| unknown())?;
        match prefix {
            "B" => Ok(BioLabel::Begin(kind)),
            "I" => Ok(BioLabel::Inside(kind)),
            _ => Err(unknown()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LengthMismatch {
    pub tokens: usize,
    pub labels: usize,
}

impl fmt::Display for LengthMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} tokens but {} labels", self.tokens, self.labels)
    }
}

impl core::error::Error for LengthMismatch {}

/// Drops every position whose surface is in `specials` from both lists.
pub fn strip_special_tokens<T: AsRef<str>>(
    tokens: Vec<T>,
    labels: Vec<BioLabel>,
    specials: &[&str],
) -> Result<(Vec<T>, Vec<BioLabel>), LengthMismatch> {
    if tokens.len() != labels.len() {
        return Err(LengthMismatch {
            tokens: tokens.len(),
            labels: labels.len(),
        });
    }
    Ok(tokens
        .into_iter()
        .zip(labels)
        .filter(|(t, _)| !specials.contains(&t.as_ref()))
        .unzip())
}

/// True when every `I-κ` directly follows a `B-κ` or `I-κ`.
pub fn is_valid_bio(labels: &[BioLabel]) -> bool {
    labels.iter().enumerate().all(|(i, label)| match label {
        BioLabel::Inside(kind) => i > 0 && labels[i - 1].continues(*kind),
        _ => true,
    })
}

/// Repairs a predicted label sequence into valid BIO:
///
/// 1. an `O` directly between a `B-κ`/`I-κ` and an `I-κ` becomes `I-κ`;
/// 2. a sentence-final `I-κ` not preceded by `B-κ`/`I-κ` becomes `O`;
/// 3. any remaining `I-κ` that does not continue a span becomes `B-κ`.
pub fn repair_bio(labels: &[BioLabel]) -> Vec<BioLabel> {
    let mut out = labels.to_vec();
    for i in 1..labels.len().saturating_sub(1) {
        if let (BioLabel::Outside, BioLabel::Inside(kind)) = (labels[i], labels[i + 1]) {
            if labels[i - 1].continues(kind) {
                out[i] = BioLabel::Inside(kind);
            }
        }
    }
    if let Some(&BioLabel::Inside(kind)) = out.last() {
        let n = out.len();
        if n == 1 || !out[n - 2].continues(kind) {
            out[n - 1] = BioLabel::Outside;
        }
    }
    for i in 0..out.len() {
        if let BioLabel::Inside(kind) = out[i] {
            if i == 0 || !out[i - 1].continues(kind) {
                out[i] = BioLabel::Begin(kind);
            }
        }
    }
    out
}

/// A recognized entity mention.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mention {
    pub kind: EntityKind,
    pub sentence: usize,
    /// `[start, end)` token range within the sentence.
    pub token_span: (usize, usize),
    /// `[start, end)` token range within the whole document.
    pub doc_token_span: (usize, usize),
    /// `[start, end)` byte range in the document text.
    pub char_span: (usize, usize),
    /// Covered token surfaces joined by single spaces.
    pub surface: String,
    /// The exact document slice.
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtractError {
    Length(LengthMismatch),
    /// An `I` label at this position has no span to continue.
    InvalidBio {
        position: usize,
    },
}

impl fmt::Display for ExtractError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtractError::Length(e) => e.fmt(f),
            ExtractError::InvalidBio { position } => {
                write!(
                    f,
                    "I label at position {position} has no B/I head (run repair_bio first)"
                )
            }
        }
    }
}

impl core::error::Error for ExtractError {}

/// Turns each maximal `B-κ I-κ*` run into a mention.
pub fn extract_mentions(
    doc_text: &str,
    sentence: &TokenizedSentence,
    labels: &[BioLabel],
) -> Result<Vec<Mention>, ExtractError> {
    if sentence.tokens.len() != labels.len() {
        return Err(ExtractError::Length(LengthMismatch {
            tokens: sentence.tokens.len(),
            labels: labels.len(),
        }));
    }
    let mut spans: Vec<(EntityKind, usize, usize)> = Vec::new();
    let mut open: Option<(EntityKind, usize)> = None;
    for (i, label) in labels.iter().enumerate() {
        match *label {
            BioLabel::Outside => {
                if let Some((kind, s)) = open.take() {
                    spans.push((kind, s, i));
                }
            }
            BioLabel::Begin(kind) => {
                if let Some((k, s)) = open.replace((kind, i)) {
                    spans.push((k, s, i));
                }
            }
            BioLabel::Inside(kind) => match open {
                Some((k, _)) if k == kind => {}
                _ => return Err(ExtractError::InvalidBio { position: i }),
            },
        }
    }
    if let Some((kind, s)) = open {
        spans.push((kind, s, labels.len()));
    }

    Ok(spans
        .into_iter()
        .map(|(kind, s, e)| {
            let covered = &sentence.tokens[s..e];
            let char_span = (covered[0].start, covered[e - s - 1].end);
            Mention {
                kind,
                sentence: sentence.index,
                token_span: (s, e),
                doc_token_span: (sentence.first_token + s, sentence.first_token + e),
                char_span,
                surface: covered.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" "),
                text: doc_text[char_span.0..char_span.1].to_string(),
            }
        })
        .collect())
}

/// Inverse of [`extract_mentions`] for one sentence of `len` tokens.
pub fn mentions_to_labels(len: usize, mentions: &[Mention]) -> Vec<BioLabel> {
    let mut labels = alloc::vec![BioLabel::Outside; len];
    for m in mentions {
        let (s, e) = m.token_span;
        labels[s] = BioLabel::Begin(m.kind);
        for label in &mut labels[s + 1..e] {
            *label = BioLabel::Inside(m.kind);
        }
    }
    labels
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelerError {
    Unavailable(String),
    SentenceCount {
        expected: usize,
        found: usize,
    },
    Length {
        sentence: usize,
        expected: usize,
        found: usize,
    },
    UnknownLabel(String),
    UnknownDocument(String),
    Alignment(AlignmentError),
}

impl fmt::Display for LabelerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelerError::Unavailable(msg) => write!(f, "sequence labeler unavailable: {msg}"),
            LabelerError::SentenceCount { expected, found } => {
                write!(f, "labeler returned {found} sentences for {expected}")
            }
            LabelerError::Length {
                sentence,
                expected,
                found,
            } => write!(
                f,
                "labeler returned {found} labels for {expected} tokens in sentence {sentence}"
            ),
            LabelerError::UnknownLabel(l) => write!(f, "labeler returned unknown label `{l}`"),
            LabelerError::UnknownDocument(id) => write!(f, "no annotations for document `{id}`"),
            LabelerError::Alignment(e) => e.fmt(f),
        }
    }
}

impl core::error::Error for LabelerError {}

impl From<AlignmentError> for LabelerError {
    fn from(e: AlignmentError) -> Self {
        LabelerError::Alignment(e)
    }
}

/// Assigns a BIO label to each token of each sentence.
pub trait SequenceLabeler {
    /// A labeler that carries its own tokenization returns it here;
    /// otherwise the rule-based [`tokenize`] is used.
    fn segment(&mut self, _doc: &Document) -> Result<Option<Vec<TokenizedSentence>>, LabelerError> {
        Ok(None)
    }

    fn label(&mut self, doc: &Document, sentences: &[Vec<&str>]) -> Result<Vec<Vec<BioLabel>>, LabelerError>;
}

impl<L: SequenceLabeler + ?Sized> SequenceLabeler for &mut L {
    fn segment(&mut self, doc: &Document) -> Result<Option<Vec<TokenizedSentence>>, LabelerError> {
        (**self).segment(doc)
    }

    fn label(&mut self, doc: &Document, sentences: &[Vec<&str>]) -> Result<Vec<Vec<BioLabel>>, LabelerError> {
        (**self).label(doc, sentences)
    }
}

impl<L: SequenceLabeler + ?Sized> SequenceLabeler for alloc::boxed::Box<L> {
    fn segment(&mut self, doc: &Document) -> Result<Option<Vec<TokenizedSentence>>, LabelerError> {
        (**self).segment(doc)
    }

    fn label(&mut self, doc: &Document, sentences: &[Vec<&str>]) -> Result<Vec<Vec<BioLabel>>, LabelerError> {
        (**self).label(doc, sentences)
    }
}

/// Mentions plus the (special-token-free) tokenization they index into.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recognition {
    pub sentences: Vec<TokenizedSentence>,
    pub mentions: Vec<Mention>,
}

/// Segment, label, strip special tokens, repair and extract, in document
/// order.
pub fn recognize<L>(doc: &Document, labeler: &mut L) -> Result<Recognition, LabelerError>
where
    L: SequenceLabeler + ?Sized,
{
    let sentences = match labeler.segment(doc)? {
        Some(s) => s,
        None => tokenize(doc),
    };
    if sentences.is_empty() {
        return Ok(Recognition {
            sentences,
            mentions: Vec::new(),
        });
    }
    let surfaces: Vec<Vec<&str>> = sentences.iter().map(TokenizedSentence::surfaces).collect();
    let labels = labeler.label(doc, &surfaces)?;
    if labels.len() != sentences.len() {
        return Err(LabelerError::SentenceCount {
            expected: sentences.len(),
            found: labels.len(),
        });
    }

    let mut kept = Vec::with_capacity(sentences.len());
    let mut mentions = Vec::new();
    let mut first_token = 0;
    for (sentence, labels) in sentences.into_iter().zip(labels) {
        let (tokens, labels) = strip_special_tokens(sentence.tokens, labels, DEFAULT_SPECIAL_TOKENS).map_err(|e| {
            LabelerError::Length {
                sentence: sentence.index,
                expected: e.tokens,
                found: e.labels,
            }
        })?;
        let stripped = TokenizedSentence {
            index: sentence.index,
            first_token,
            tokens,
        };
        first_token += stripped.tokens.len();
        let repaired = repair_bio(&labels);
        mentions.extend(extract_mentions(&doc.text, &stripped, &repaired).expect("repaired labels are valid BIO"));
        kept.push(stripped);
    }
    Ok(Recognition {
        sentences: kept,
        mentions,
    })
}
