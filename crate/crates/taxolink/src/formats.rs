//! JSON Lines records read and written by the command-line tool.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use taxolink_core::eval::{
    EntityTrace, EvalCounts, GoldInstance, GoldSpan, InstancePrediction, InstanceTrace, PredictedMention, SpanCounts,
};
use taxolink_core::{EntityKind, EvalReport, MentionLinkResult, Method, RankedCandidate, ReferenceSet};

/// Entity kinds as lowercase slugs; any spelling `EntityKind` parses is
/// accepted on input.
pub mod kind_serde {
    use serde::{Deserialize, Deserializer, Serializer};
    use taxolink_core::EntityKind;

    pub fn serialize<S: Serializer>(kind: &EntityKind, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(kind.slug())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<EntityKind, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

mod method_serde {
    use serde::{Deserialize, Deserializer, Serializer};
    use taxolink_core::Method;

    pub fn serialize<S: Serializer>(m: &Method, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(m.short_name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Method, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A job vacancy (or sentence) to link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDocument {
    pub id: String,
    #[serde(default)]
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateOut {
    pub node_id: String,
    pub score: f64,
    pub field: String,
    /// EQF level label, for qualification candidates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
}

impl CandidateOut {
    pub fn new(c: &RankedCandidate, targets: Option<&ReferenceSet>) -> Self {
        let target = targets
            .and_then(|set| set.get(&c.node_id).ok())
            .filter(|n| n.kind == EntityKind::Qualification)
            .map(|n| n.target_label());
        CandidateOut {
            node_id: c.node_id.clone(),
            score: c.score,
            field: c.best_field.to_string(),
            target,
        }
    }

    /// The label this candidate is scored as: its target if it has one.
    pub fn label(&self) -> &str {
        self.target.as_deref().unwrap_or(&self.node_id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MentionOut {
    #[serde(with = "kind_serde")]
    pub kind: EntityKind,
    pub sentence: usize,
    pub surface: String,
    pub text: String,
    pub char_span: (usize, usize),
    /// Document-level token range.
    pub token_span: (usize, usize),
    pub candidates: Vec<CandidateOut>,
}

impl MentionOut {
    pub fn new(r: &MentionLinkResult, targets: Option<&ReferenceSet>) -> Self {
        MentionOut {
            kind: r.mention.kind,
            sentence: r.mention.sentence,
            surface: r.mention.surface.clone(),
            text: r.mention.text.clone(),
            char_span: r.mention.char_span,
            token_span: r.mention.doc_token_span,
            candidates: r.candidates.iter().map(|c| CandidateOut::new(c, targets)).collect(),
        }
    }
}

/// One line of `link` output. Sentence and title linking fill `kind` and
/// `candidates`; entity linking fills `mentions`; failures fill `error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkOutput {
    pub id: String,
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<CandidateOut>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mentions: Option<Vec<MentionOut>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl LinkOutput {
    /// Converts to an evaluation prediction for `kind`. Entity-linking
    /// output is restricted to mentions of `kind` and aggregated by best
    /// score per label.
    pub fn prediction(&self, kind: EntityKind) -> InstancePrediction {
        if let Some(mentions) = &self.mentions {
            let relevant: Vec<&MentionOut> = mentions.iter().filter(|m| m.kind == kind).collect();
            let mut best: BTreeMap<&str, f64> = BTreeMap::new();
            for c in relevant.iter().flat_map(|m| &m.candidates) {
                let e = best.entry(c.label()).or_insert(f64::NEG_INFINITY);
                *e = e.max(c.score);
            }
            let mut ranked: Vec<(&str, f64)> = best.into_iter().collect();
            ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
            return InstancePrediction {
                ranked: ranked.into_iter().map(|(l, _)| l.to_string()).collect(),
                mentions: Some(
                    relevant
                        .iter()
                        .map(|m| PredictedMention {
                            kind: m.kind,
                            tokens: m.token_span,
                            ranked: m.candidates.iter().map(|c| c.label().to_string()).collect(),
                        })
                        .collect(),
                ),
            };
        }
        InstancePrediction {
            ranked: self
                .candidates
                .iter()
                .flatten()
                .map(|c| c.label().to_string())
                .collect(),
            mentions: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldSpanLine {
    pub tokens: Vec<usize>,
    pub label: String,
}

/// One line of an evaluation set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldLine {
    pub id: String,
    #[serde(default)]
    pub text: String,
    #[serde(with = "kind_serde")]
    pub kind: EntityKind,
    pub gold: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_spans: Option<Vec<GoldSpanLine>>,
}

impl From<GoldLine> for GoldInstance {
    fn from(g: GoldLine) -> Self {
        GoldInstance {
            id: g.id,
            text: g.text,
            kind: g.kind,
            gold: g.gold,
            spans: g.gold_spans.map(|spans| {
                spans
                    .into_iter()
                    .map(|s| GoldSpan {
                        tokens: s.tokens,
                        label: s.label,
                    })
                    .collect()
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanOut {
    pub true_positives: usize,
    pub predicted: usize,
    pub gold: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsOut {
    pub instances: usize,
    pub entities: usize,
    pub unk_removed: usize,
    pub unk_spans_removed: usize,
    pub dropped_instances: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceOut {
    pub id: String,
    pub ranked: Vec<String>,
    pub gold: Vec<String>,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityOut {
    pub instance: String,
    pub tokens: (usize, usize),
    pub attributed: String,
    pub jaccard: f64,
    pub top1: Option<String>,
    pub correct: bool,
}

/// Serialized evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportOut {
    #[serde(with = "method_serde")]
    pub method: Method,
    #[serde(with = "kind_serde")]
    pub kind: EntityKind,
    pub accuracy_at_1: f64,
    pub entity_accuracy_at_1: Option<f64>,
    pub span: Option<SpanOut>,
    pub counts: CountsOut,
    pub instances: Vec<InstanceOut>,
    pub entities: Vec<EntityOut>,
}

impl From<&EvalReport> for ReportOut {
    fn from(r: &EvalReport) -> Self {
        ReportOut {
            method: r.method,
            kind: r.kind,
            accuracy_at_1: r.accuracy_at_1,
            entity_accuracy_at_1: r.entity_accuracy_at_1,
            span: r.span.map(|s| SpanOut {
                true_positives: s.true_positives,
                predicted: s.predicted,
                gold: s.gold,
                precision: s.precision(),
                recall: s.recall(),
                f1: s.f1(),
            }),
            counts: CountsOut {
                instances: r.counts.instances,
                entities: r.counts.entities,
                unk_removed: r.counts.unk_removed,
                unk_spans_removed: r.counts.unk_spans_removed,
                dropped_instances: r.counts.dropped_instances,
            },
            instances: r
                .trace
                .iter()
                .map(|t| InstanceOut {
                    id: t.id.clone(),
                    ranked: t.ranked.clone(),
                    gold: t.gold.clone(),
                    correct: t.correct,
                })
                .collect(),
            entities: r
                .entity_trace
                .iter()
                .map(|e| EntityOut {
                    instance: e.instance.clone(),
                    tokens: e.tokens,
                    attributed: e.attributed.clone(),
                    jaccard: e.jaccard,
                    top1: e.top1.clone(),
                    correct: e.correct,
                })
                .collect(),
        }
    }
}

impl From<ReportOut> for EvalReport {
    fn from(r: ReportOut) -> Self {
        EvalReport {
            method: r.method,
            kind: r.kind,
            accuracy_at_1: r.accuracy_at_1,
            entity_accuracy_at_1: r.entity_accuracy_at_1,
            span: r.span.map(|s| SpanCounts {
                true_positives: s.true_positives,
                predicted: s.predicted,
                gold: s.gold,
            }),
            counts: EvalCounts {
                instances: r.counts.instances,
                entities: r.counts.entities,
                unk_removed: r.counts.unk_removed,
                unk_spans_removed: r.counts.unk_spans_removed,
                dropped_instances: r.counts.dropped_instances,
            },
            trace: r
                .instances
                .into_iter()
                .map(|t| InstanceTrace {
                    id: t.id,
                    ranked: t.ranked,
                    gold: t.gold,
                    correct: t.correct,
                })
                .collect(),
            entity_trace: r
                .entities
                .into_iter()
                .map(|e| EntityTrace {
                    instance: e.instance,
                    tokens: e.tokens,
                    attributed: e.attributed,
                    jaccard: e.jaccard,
                    top1: e.top1,
                    correct: e.correct,
                })
                .collect(),
        }
    }
}

/// Human-readable summary of one report.
pub fn render_report(r: &EvalReport) -> String {
    let mut rows: Vec<(String, String)> = vec![
        ("method".into(), r.method.name().into()),
        ("kind".into(), r.kind.as_str().into()),
        ("instances".into(), r.counts.instances.to_string()),
        ("accuracy@1".into(), format!("{:.4}", r.accuracy_at_1)),
    ];
    if let Some(a) = r.entity_accuracy_at_1 {
        rows.push(("entity accuracy@1".into(), format!("{a:.4}")));
        rows.push(("entities".into(), r.counts.entities.to_string()));
    }
    if let Some(s) = r.span {
        rows.push(("span precision".into(), format!("{:.4}", s.precision())));
        rows.push(("span recall".into(), format!("{:.4}", s.recall())));
        rows.push(("span F1 (strict)".into(), format!("{:.4}", s.f1())));
    }
    rows.push(("UNK labels removed".into(), r.counts.unk_removed.to_string()));
    rows.push(("instances dropped".into(), r.counts.dropped_instances.to_string()));
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter().map(|(k, v)| format!("{k:<width$}  {v}\n")).collect()
}
