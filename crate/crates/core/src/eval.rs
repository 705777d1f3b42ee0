//! Evaluation: in-KB filtering, strict span F1, Jaccard attribution,
//! Accuracy@1 and the method comparison table.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::{self, Write as _};

use crate::linking::MentionLinkResult;
use crate::taxonomy::EntityKind;

/// Gold label for an entity with no counterpart in the reference set.
pub const UNK: &str = "UNK";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    EmptyEvaluationSet,
    DuplicateInstance(String),
    MixedKinds {
        expected: EntityKind,
        found: EntityKind,
    },
    /// Predictions and gold disagree on instance ids.
    InstanceMismatch {
        missing: Vec<String>,
        unexpected: Vec<String>,
    },
    /// Methods were evaluated over different instances for one kind.
    MethodMismatch {
        kind: EntityKind,
    },
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn preview(ids: &[String]) -> String {
            let mut s = ids.iter().take(5).cloned().collect::<Vec<_>>().join(", ");
            if ids.len() > 5 {
                let _ = write!(s, ", ... ({} total)", ids.len());
            }
            s
        }
        match self {
            EvalError::EmptyEvaluationSet => f.write_str("empty evaluation set"),
            EvalError::DuplicateInstance(id) => write!(f, "instance `{id}` appears twice"),
            EvalError::MixedKinds { expected, found } => {
                write!(f, "evaluation set mixes {expected} and {found} instances")
            }
            EvalError::InstanceMismatch { missing, unexpected } => {
                f.write_str("instance ids differ between results and gold")?;
                if !missing.is_empty() {
                    write!(f, "; missing results for [{}]", preview(missing))?;
                }
                if !unexpected.is_empty() {
                    write!(f, "; results for unknown ids [{}]", preview(unexpected))?;
                }
                Ok(())
            }
            EvalError::MethodMismatch { kind } => {
                write!(f, "methods were evaluated over different {kind} instances")
            }
        }
    }
}

impl core::error::Error for EvalError {}

/// A gold entity span over document token indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldSpan {
    pub tokens: Vec<usize>,
    pub label: String,
}

impl GoldSpan {
    fn start(&self) -> usize {
        self.tokens.iter().copied().min().unwrap_or(usize::MAX)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldInstance {
    pub id: String,
    pub text: String,
    pub kind: EntityKind,
    pub gold: Vec<String>,
    pub spans: Option<Vec<GoldSpan>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InKb {
    pub instances: Vec<GoldInstance>,
    /// UNK entries removed from instance label lists.
    pub unk_removed: usize,
    /// UNK gold spans removed.
    pub unk_spans_removed: usize,
    /// Instances left without any label.
    pub dropped: usize,
}

/// Removes UNK labels and spans; drops instances left with no label.
pub fn filter_in_kb(instances: Vec<GoldInstance>) -> InKb {
    let mut out = InKb::default();
    for mut inst in instances {
        let before = inst.gold.len();
        inst.gold.retain(|g| g != UNK);
        out.unk_removed += before - inst.gold.len();
        if let Some(spans) = inst.spans.as_mut() {
            let before = spans.len();
            spans.retain(|s| s.label != UNK);
            out.unk_spans_removed += before - spans.len();
        }
        if inst.gold.is_empty() {
            out.dropped += 1;
        } else {
            out.instances.push(inst);
        }
    }
    out
}

/// `[start, end)` token span with an entity kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabeledSpan {
    pub start: usize,
    pub end: usize,
    pub kind: EntityKind,
}

impl LabeledSpan {
    pub fn new(start: usize, end: usize, kind: EntityKind) -> Self {
        LabeledSpan { start, end, kind }
    }
}

/// Strict-match counts; ratios follow the usual conventions for empty sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SpanCounts {
    pub true_positives: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl SpanCounts {
    pub fn precision(&self) -> f64 {
        match (self.predicted, self.gold) {
            (0, 0) => 1.0,
            (0, _) => 0.0,
            (p, _) => self.true_positives as f64 / p as f64,
        }
    }

    pub fn recall(&self) -> f64 {
        match (self.predicted, self.gold) {
            (0, 0) => 1.0,
            (_, 0) => 0.0,
            (_, g) => self.true_positives as f64 / g as f64,
        }
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    pub fn merge(self, other: SpanCounts) -> SpanCounts {
        SpanCounts {
            true_positives: self.true_positives + other.true_positives,
            predicted: self.predicted + other.predicted,
            gold: self.gold + other.gold,
        }
    }
}

/// Exact `(span, kind)` matches, counted with multiplicity.
pub fn span_f1_strict(pred: &[LabeledSpan], gold: &[LabeledSpan]) -> SpanCounts {
    let mut counts: BTreeMap<LabeledSpan, (usize, usize)> = BTreeMap::new();
    for s in pred {
        counts.entry(*s).or_default().0 += 1;
    }
    for s in gold {
        counts.entry(*s).or_default().1 += 1;
    }
    SpanCounts {
        true_positives: counts.values().map(|&(p, g)| p.min(g)).sum(),
        predicted: pred.len(),
        gold: gold.len(),
    }
}

/// `|a ∩ b| / |a ∪ b|` over token-index sets; 0 when both are empty.
pub fn jaccard(a: &[usize], b: &[usize]) -> f64 {
    let a: BTreeSet<usize> = a.iter().copied().collect();
    let b: BTreeSet<usize> = b.iter().copied().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

/// The gold span an extracted mention is scored against.
#[derive(Debug, Clone, PartialEq)]
pub struct Attribution {
    /// Index into the gold spans, `None` when nothing overlaps.
    pub gold_span: Option<usize>,
    pub jaccard: f64,
    /// Gold label, or [`UNK`].
    pub label: String,
}

impl Attribution {
    pub fn is_unk(&self) -> bool {
        self.gold_span.is_none()
    }
}

/// Attributes each mention (as a token-index set) to the gold span with the
/// highest Jaccard similarity. Ties go to the span starting earliest, then
/// to the earlier-listed span.
pub fn attribute_spans(mentions: &[Vec<usize>], gold: &[GoldSpan]) -> Vec<Attribution> {
    mentions
        .iter()
        .map(|tokens| {
            let mut best: Option<(usize, f64)> = None;
            for (i, span) in gold.iter().enumerate() {
                let j = jaccard(tokens, &span.tokens);
                if j <= 0.0 {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((b, bj)) => j > bj || (j == bj && span.start() < gold[b].start()),
                };
                if better {
                    best = Some((i, j));
                }
            }
            match best {
                Some((i, j)) => Attribution {
                    gold_span: Some(i),
                    jaccard: j,
                    label: gold[i].label.clone(),
                },
                None => Attribution {
                    gold_span: None,
                    jaccard: 0.0,
                    label: UNK.to_string(),
                },
            }
        })
        .collect()
}

/// [`attribute_spans`] over linked mentions, using their document token
/// ranges.
pub fn attribute_mentions(extracted: &[MentionLinkResult], gold: &[GoldSpan]) -> Vec<Attribution> {
    let sets: Vec<Vec<usize>> = extracted
        .iter()
        .map(|r| {
            let (s, e) = r.mention.doc_token_span;
            (s..e).collect()
        })
        .collect();
    attribute_spans(&sets, gold)
}

/// A rank-1 prediction paired with what counts as correct.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccuracyRecord {
    pub top1: Option<String>,
    pub gold: Vec<String>,
}

impl AccuracyRecord {
    fn in_kb(&self) -> bool {
        self.gold.iter().any(|g| g != UNK)
    }

    pub fn is_hit(&self) -> bool {
        self.top1
            .as_ref()
            .is_some_and(|t| t != UNK && self.gold.iter().any(|g| g == t))
    }
}

/// Fraction of in-KB records whose rank-1 candidate is gold. Records
/// without candidates are misses; UNK-only records are skipped.
pub fn accuracy_at_1(records: &[AccuracyRecord]) -> Result<f64, EvalError> {
    let (mut total, mut hits) = (0usize, 0usize);
    for r in records.iter().filter(|r| r.in_kb()) {
        total += 1;
        hits += usize::from(r.is_hit());
    }
    if total == 0 {
        return Err(EvalError::EmptyEvaluationSet);
    }
    Ok(hits as f64 / total as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    EntityLinking,
    SentenceLinking,
    TitleLinking,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::EntityLinking, Method::SentenceLinking, Method::TitleLinking];

    pub fn name(self) -> &'static str {
        match self {
            Method::EntityLinking => "Entity Linking",
            Method::SentenceLinking => "Sentence Linking",
            Method::TitleLinking => "Title Linking",
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Method::EntityLinking => "el",
            Method::SentenceLinking => "sl",
            Method::TitleLinking => "title",
        }
    }
}

impl core::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "el" | "entity" | "entity-linking" => Ok(Method::EntityLinking),
            "sl" | "sentence" | "sentence-linking" => Ok(Method::SentenceLinking),
            "title" | "title-linking" => Ok(Method::TitleLinking),
            other => Err(alloc::format!("unknown method `{other}` (expected sl, el or title)")),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

/// Per-instance record of a sentence-level decision.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceTrace {
    pub id: String,
    /// Candidate labels in rank order (top-k retained).
    pub ranked: Vec<String>,
    pub gold: Vec<String>,
    pub correct: bool,
}

/// Per-mention record of an entity-level decision.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityTrace {
    pub instance: String,
    pub tokens: (usize, usize),
    pub attributed: String,
    pub jaccard: f64,
    pub top1: Option<String>,
    pub correct: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvalCounts {
    pub instances: usize,
    pub entities: usize,
    pub unk_removed: usize,
    pub unk_spans_removed: usize,
    pub dropped_instances: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub method: Method,
    pub kind: EntityKind,
    /// Sentence-level Accuracy@1.
    pub accuracy_at_1: f64,
    /// Entity-level Accuracy@1 over attributed mentions.
    pub entity_accuracy_at_1: Option<f64>,
    /// Strict span counts of recognized mentions.
    pub span: Option<SpanCounts>,
    pub counts: EvalCounts,
    pub trace: Vec<InstanceTrace>,
    pub entity_trace: Vec<EntityTrace>,
}

impl EvalReport {
    pub fn instance_ids(&self) -> BTreeSet<&str> {
        self.trace.iter().map(|t| t.id.as_str()).collect()
    }
}

/// One extracted mention with its candidates mapped to gold-label space.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictedMention {
    pub kind: EntityKind,
    /// `[start, end)` document token range.
    pub tokens: (usize, usize),
    pub ranked: Vec<String>,
}

/// Predictions for one instance: a sentence-level ranking and, for entity
/// linking, the mentions it was aggregated from.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InstancePrediction {
    pub ranked: Vec<String>,
    pub mentions: Option<Vec<PredictedMention>>,
}

fn check_ids(
    gold: &[GoldInstance],
    predictions: &BTreeMap<String, InstancePrediction>,
) -> Result<EntityKind, EvalError> {
    let kind = gold.first().ok_or(EvalError::EmptyEvaluationSet)?.kind;
    let mut seen = BTreeSet::new();
    for g in gold {
        if g.kind != kind {
            return Err(EvalError::MixedKinds {
                expected: kind,
                found: g.kind,
            });
        }
        if !seen.insert(g.id.as_str()) {
            return Err(EvalError::DuplicateInstance(g.id.clone()));
        }
    }
    let missing: Vec<String> = gold
        .iter()
        .filter(|g| !predictions.contains_key(&g.id))
        .map(|g| g.id.clone())
        .collect();
    let unexpected: Vec<String> = predictions
        .keys()
        .filter(|id| !seen.contains(id.as_str()))
        .cloned()
        .collect();
    if !missing.is_empty() || !unexpected.is_empty() {
        return Err(EvalError::InstanceMismatch { missing, unexpected });
    }
    Ok(kind)
}

/// Scores `predictions` against `gold` under the in-KB protocol.
///
/// Sentence-level Accuracy@1 uses each instance's ranking. When mentions
/// are present and gold spans exist, mentions are attributed to gold spans
/// for entity-level Accuracy@1, and strict span F1 is computed against all
/// gold spans (UNK included, since recognition does not depend on the
/// knowledge base).
pub fn evaluate(
    method: Method,
    gold: Vec<GoldInstance>,
    predictions: &BTreeMap<String, InstancePrediction>,
) -> Result<EvalReport, EvalError> {
    let kind = check_ids(&gold, predictions)?;

    let mut span_counts: Option<SpanCounts> = None;
    for g in &gold {
        let (Some(spans), Some(mentions)) = (&g.spans, &predictions[&g.id].mentions) else {
            continue;
        };
        let gold_spans: Vec<LabeledSpan> = spans
            .iter()
            .filter(|s| !s.tokens.is_empty())
            .map(|s| LabeledSpan::new(s.start(), s.tokens.iter().max().unwrap() + 1, kind))
            .collect();
        let pred_spans: Vec<LabeledSpan> = mentions
            .iter()
            .map(|m| LabeledSpan::new(m.tokens.0, m.tokens.1, m.kind))
            .collect();
        let c = span_f1_strict(&pred_spans, &gold_spans);
        span_counts = Some(span_counts.unwrap_or_default().merge(c));
    }

    let filtered = filter_in_kb(gold);
    let mut trace = Vec::with_capacity(filtered.instances.len());
    let mut records = Vec::with_capacity(filtered.instances.len());
    let mut entity_trace = Vec::new();
    let mut entity_records = Vec::new();
    for g in &filtered.instances {
        let prediction = &predictions[&g.id];
        let record = AccuracyRecord {
            top1: prediction.ranked.first().cloned(),
            gold: g.gold.clone(),
        };
        trace.push(InstanceTrace {
            id: g.id.clone(),
            ranked: prediction.ranked.clone(),
            gold: g.gold.clone(),
            correct: record.is_hit(),
        });
        records.push(record);

        if let (Some(spans), Some(mentions)) = (&g.spans, &prediction.mentions) {
            let sets: Vec<Vec<usize>> = mentions.iter().map(|m| (m.tokens.0..m.tokens.1).collect()).collect();
            for (m, a) in mentions.iter().zip(attribute_spans(&sets, spans)) {
                let record = AccuracyRecord {
                    top1: m.ranked.first().cloned(),
                    gold: alloc::vec![a.label.clone()],
                };
                entity_trace.push(EntityTrace {
                    instance: g.id.clone(),
                    tokens: m.tokens,
                    attributed: a.label,
                    jaccard: a.jaccard,
                    top1: record.top1.clone(),
                    correct: record.is_hit(),
                });
                entity_records.push(record);
            }
        }
    }

    let accuracy = accuracy_at_1(&records)?;
    let entity_accuracy = if entity_records.is_empty() {
        None
    } else {
        accuracy_at_1(&entity_records).ok()
    };
    Ok(EvalReport {
        method,
        kind,
        accuracy_at_1: accuracy,
        entity_accuracy_at_1: entity_accuracy,
        span: span_counts,
        counts: EvalCounts {
            instances: records.len(),
            entities: entity_records.iter().filter(|r| r.in_kb()).count(),
            unk_removed: filtered.unk_removed,
            unk_spans_removed: filtered.unk_spans_removed,
            dropped_instances: filtered.dropped,
        },
        trace,
        entity_trace,
    })
}

/// Accuracy@1 per method (rows) and entity kind (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub kinds: Vec<EntityKind>,
    pub rows: Vec<(Method, Vec<Option<f64>>)>,
}

impl ComparisonTable {
    pub fn get(&self, method: Method, kind: EntityKind) -> Option<f64> {
        let col = self.kinds.iter().position(|&k| k == kind)?;
        self.rows.iter().find(|(m, _)| *m == method)?.1[col]
    }

    /// Aligned plain-text rendering.
    pub fn render(&self) -> String {
        let method_width = Method::ALL.iter().map(|m| m.name().len()).max().unwrap_or(0);
        let widths: Vec<usize> = self.kinds.iter().map(|k| k.as_str().len().max(6)).collect();
        let mut out = String::new();
        let _ = write!(out, "{:<method_width$}", "Method");
        for (k, w) in self.kinds.iter().zip(&widths) {
            let _ = write!(out, "  {:>w$}", k.as_str());
        }
        out.push('\n');
        for (method, cells) in &self.rows {
            let _ = write!(out, "{:<method_width$}", method.name());
            for (cell, w) in cells.iter().zip(&widths) {
                match cell {
                    Some(v) => {
                        let _ = write!(out, "  {v:>w$.4}");
                    }
                    None => {
                        let _ = write!(out, "  {:>w$}", "-");
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Builds the method comparison. Reports for one kind must cover the same
/// instance ids.
pub fn compare_methods(
    sl_reports: &[EvalReport],
    el_reports: &[EvalReport],
    title_reports: &[EvalReport],
) -> Result<ComparisonTable, EvalError> {
    let mut by_kind: BTreeMap<EntityKind, Vec<&EvalReport>> = BTreeMap::new();
    for r in sl_reports.iter().chain(el_reports).chain(title_reports) {
        by_kind.entry(r.kind).or_default().push(r);
    }
    for (kind, reports) in &by_kind {
        let ids = reports[0].instance_ids();
        if reports.iter().any(|r| r.instance_ids() != ids) {
            return Err(EvalError::MethodMismatch { kind: *kind });
        }
    }
    let kinds: Vec<EntityKind> = by_kind.keys().copied().collect();
    let sources = [
        (Method::EntityLinking, el_reports),
        (Method::SentenceLinking, sl_reports),
        (Method::TitleLinking, title_reports),
    ];
    let rows = sources
        .iter()
        .filter(|(_, reports)| !reports.is_empty())
        .map(|(method, reports)| {
            let cells = kinds
                .iter()
                .map(|k| reports.iter().find(|r| r.kind == *k).map(|r| r.accuracy_at_1))
                .collect();
            (*method, cells)
        })
        .collect();
    Ok(ComparisonTable { kinds, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn s(start: usize, end: usize) -> LabeledSpan {
        LabeledSpan::new(start, end, EntityKind::Skill)
    }

    fn inst(id: &str, gold: &[&str]) -> GoldInstance {
        GoldInstance {
            id: id.to_string(),
            text: String::new(),
            kind: EntityKind::Skill,
            gold: gold.iter().map(|g| g.to_string()).collect(),
            spans: None,
        }
    }

    #[test]
    fn in_kb_filter() {
        let out = filter_in_kb(vec![inst("a", &["UNK"]), inst("b", &["A", "UNK"])]);
        assert_eq!(out.instances.len(), 1);
        assert_eq!(out.instances[0].gold, vec!["A"]);
        assert_eq!(out.unk_removed, 2);
        assert_eq!(out.dropped, 1);
    }

    #[test]
    fn strict_f1_examples() {
        let c = span_f1_strict(&[s(0, 2), s(3, 4)], &[s(0, 2)]);
        assert_eq!((c.precision(), c.recall()), (0.5, 1.0));
        assert!((c.f1() - 2.0 / 3.0).abs() < 1e-12);
        let same = span_f1_strict(&[s(0, 2)], &[s(0, 2)]);
        assert_eq!((same.precision(), same.recall(), same.f1()), (1.0, 1.0, 1.0));
        let off = span_f1_strict(&[s(0, 3)], &[s(0, 2)]);
        assert_eq!((off.precision(), off.recall(), off.f1()), (0.0, 0.0, 0.0));
        let wrong_kind = span_f1_strict(&[LabeledSpan::new(0, 2, EntityKind::Occupation)], &[s(0, 2)]);
        assert_eq!(wrong_kind.true_positives, 0);
    }

    #[test]
    fn strict_f1_empty_conventions() {
        let both = span_f1_strict(&[], &[]);
        assert_eq!((both.precision(), both.recall(), both.f1()), (1.0, 1.0, 1.0));
        let no_pred = span_f1_strict(&[], &[s(0, 1)]);
        assert_eq!((no_pred.precision(), no_pred.recall(), no_pred.f1()), (0.0, 0.0, 0.0));
        let no_gold = span_f1_strict(&[s(0, 1)], &[]);
        assert_eq!((no_gold.precision(), no_gold.recall(), no_gold.f1()), (0.0, 0.0, 0.0));
    }

    #[test]
    fn strict_f1_multiplicity() {
        let c = span_f1_strict(&[s(0, 1), s(0, 1)], &[s(0, 1)]);
        assert_eq!(c.true_positives, 1);
    }

    #[test]
    fn jaccard_examples() {
        assert_eq!(jaccard(&[1, 2], &[1, 2]), 1.0);
        assert_eq!(jaccard(&[1, 2, 3], &[2, 3, 4]), 0.5);
        assert_eq!(jaccard(&[1], &[2]), 0.0);
        assert_eq!(jaccard(&[], &[]), 0.0);
    }

    fn span(tokens: &[usize], label: &str) -> GoldSpan {
        GoldSpan {
            tokens: tokens.to_vec(),
            label: label.to_string(),
        }
    }

    #[test]
    fn attribution_examples() {
        let a = attribute_spans(&[vec![5, 6]], &[span(&[5, 6], "A"), span(&[9], "B")]);
        assert_eq!(a[0].label, "A");
        let none = attribute_spans(&[vec![1]], &[span(&[5, 6], "A"), span(&[9], "B")]);
        assert!(none[0].is_unk());
        assert_eq!(none[0].label, UNK);
        // equal Jaccard 1/3: earliest start wins, regardless of listing order
        let tie = attribute_spans(&[vec![2, 3]], &[span(&[3, 4], "B"), span(&[1, 2], "A")]);
        assert_eq!(tie[0].label, "A");
        assert!((tie[0].jaccard - 1.0 / 3.0).abs() < 1e-12);
    }

    fn rec(top: Option<&str>, gold: &[&str]) -> AccuracyRecord {
        AccuracyRecord {
            top1: top.map(str::to_string),
            gold: gold.iter().map(|g| g.to_string()).collect(),
        }
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy_at_1(&[rec(Some("A"), &["A"])]), Ok(1.0));
        assert_eq!(
            accuracy_at_1(&[rec(Some("A"), &["A"]), rec(Some("B"), &["A"])]),
            Ok(0.5)
        );
        assert_eq!(
            accuracy_at_1(&[rec(None, &["A"]), rec(Some("A"), &["A", "C"])]),
            Ok(0.5)
        );
        assert_eq!(accuracy_at_1(&[]), Err(EvalError::EmptyEvaluationSet));
        assert_eq!(
            accuracy_at_1(&[rec(Some("A"), &[UNK])]),
            Err(EvalError::EmptyEvaluationSet)
        );
    }

    fn pred(ranked: &[&str]) -> InstancePrediction {
        InstancePrediction {
            ranked: ranked.iter().map(|r| r.to_string()).collect(),
            mentions: None,
        }
    }

    #[test]
    fn evaluate_sentence_level() {
        let gold = vec![inst("1", &["A"]), inst("2", &["B", "UNK"]), inst("3", &["UNK"])];
        let mut p = BTreeMap::new();
        p.insert("1".to_string(), pred(&["A", "B"]));
        p.insert("2".to_string(), pred(&["A"]));
        p.insert("3".to_string(), pred(&["A"]));
        let r = evaluate(Method::SentenceLinking, gold.clone(), &p).unwrap();
        assert_eq!(r.accuracy_at_1, 0.5);
        assert_eq!(r.counts.instances, 2);
        assert_eq!(r.counts.unk_removed, 2);
        assert_eq!(r.counts.dropped_instances, 1);

        p.remove("1");
        p.insert("9".to_string(), pred(&["A"]));
        match evaluate(Method::SentenceLinking, gold, &p) {
            Err(EvalError::InstanceMismatch { missing, unexpected }) => {
                assert_eq!(missing, vec!["1"]);
                assert_eq!(unexpected, vec!["9"]);
            }
            other => panic!("expected mismatch, got {other:?}"),
        }
    }

    #[test]
    fn evaluate_entity_level() {
        let mut g = inst("1", &["A", "B"]);
        g.spans = Some(vec![span(&[0, 1], "A"), span(&[4], "B"), span(&[7], UNK)]);
        let mentions = vec![
            PredictedMention {
                kind: EntityKind::Skill,
                tokens: (0, 2),
                ranked: vec!["A".to_string()],
            },
            PredictedMention {
                kind: EntityKind::Skill,
                tokens: (3, 5),
                ranked: vec!["C".to_string()],
            },
            PredictedMention {
                kind: EntityKind::Skill,
                tokens: (9, 10),
                ranked: vec!["A".to_string()],
            },
        ];
        let mut p = BTreeMap::new();
        p.insert(
            "1".to_string(),
            InstancePrediction {
                ranked: vec!["A".to_string(), "C".to_string()],
                mentions: Some(mentions),
            },
        );
        let r = evaluate(Method::EntityLinking, vec![g], &p).unwrap();
        assert_eq!(r.accuracy_at_1, 1.0);
        assert_eq!(r.entity_accuracy_at_1, Some(0.5));
        assert_eq!(r.counts.entities, 2);
        let span = r.span.unwrap();
        assert_eq!((span.true_positives, span.predicted, span.gold), (1, 3, 3));
    }

    fn report(method: Method, kind: EntityKind, ids: &[&str], acc: f64) -> EvalReport {
        EvalReport {
            method,
            kind,
            accuracy_at_1: acc,
            entity_accuracy_at_1: None,
            span: None,
            counts: EvalCounts::default(),
            trace: ids
                .iter()
                .map(|id| InstanceTrace {
                    id: id.to_string(),
                    ranked: vec![],
                    gold: vec![],
                    correct: false,
                })
                .collect(),
            entity_trace: vec![],
        }
    }

    #[test]
    fn comparison_layout() {
        let occ = EntityKind::Occupation;
        let sk = EntityKind::Skill;
        let table = compare_methods(
            &[
                report(Method::SentenceLinking, occ, &["1"], 0.4981),
                report(Method::SentenceLinking, sk, &["x"], 0.2211),
            ],
            &[
                report(Method::EntityLinking, occ, &["1"], 0.4704),
                report(Method::EntityLinking, sk, &["x"], 0.3969),
            ],
            &[report(Method::TitleLinking, occ, &["1"], 0.5387)],
        )
        .unwrap();
        assert_eq!(table.kinds, vec![occ, sk]);
        assert_eq!(table.rows.len(), 3);
        assert_eq!(table.get(Method::TitleLinking, sk), None);
        assert_eq!(table.get(Method::EntityLinking, sk), Some(0.3969));
        let text = table.render();
        assert_eq!(text.lines().count(), 4);
        assert!(text.contains("0.5387"));

        let err = compare_methods(
            &[report(Method::SentenceLinking, occ, &["1"], 1.0)],
            &[report(Method::EntityLinking, occ, &["2"], 1.0)],
            &[],
        );
        assert_eq!(err, Err(EvalError::MethodMismatch { kind: occ }));
    }
}
