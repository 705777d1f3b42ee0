//! Property tests against independent brute-force oracles.

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use taxolink_core::cache;
use taxolink_core::embedding::{build_embeddings, build_node_texts, EmbeddingStrategy, HashEmbedder};
use taxolink_core::eval::{
    accuracy_at_1, attribute_spans, filter_in_kb, jaccard, span_f1_strict, AccuracyRecord, GoldInstance, GoldSpan,
    LabeledSpan, UNK,
};
use taxolink_core::index::{cosine, RankedCandidate, VectorIndex};
use taxolink_core::linking::{aggregate_to_sentence, MentionLinkResult};
use taxolink_core::recognition::{
    extract_mentions, mentions_to_labels, repair_bio, strip_special_tokens, tokenize, BioLabel, Document, Mention,
    Token, TokenizedSentence, DEFAULT_SPECIAL_TOKENS,
};
use taxolink_core::{
    link_sentence, link_title, EmbeddingRecord, EmbeddingVector, EntityKind, FieldTag, ReferenceSet, SentenceQuery,
    TaxonomyNode,
};

// ---------------------------------------------------------------- oracles

/// Every cosine (on the 1e-12 tie grid), grouped by node, max per node,
/// sorted (score desc, id asc), truncated to k.
fn brute_force_top_k(records: &[EmbeddingRecord], query: &[f32], k: usize) -> Vec<(String, f64)> {
    let mut best: BTreeMap<String, f64> = BTreeMap::new();
    for r in records {
        let dot: f64 = r
            .vector
            .as_slice()
            .iter()
            .zip(query)
            .map(|(&a, &b)| a as f64 * b as f64)
            .sum();
        let na: f64 = r
            .vector
            .as_slice()
            .iter()
            .map(|&a| a as f64 * a as f64)
            .sum::<f64>()
            .sqrt();
        let nb: f64 = query.iter().map(|&b| b as f64 * b as f64).sum::<f64>().sqrt();
        let c = ((dot / (na * nb)) * 1e12).round() / 1e12;
        let e = best.entry(r.node_id.clone()).or_insert(f64::NEG_INFINITY);
        if c > *e {
            *e = c;
        }
    }
    let mut all: Vec<(String, f64)> = best.into_iter().collect();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

fn is_valid_bio_oracle(labels: &[BioLabel]) -> bool {
    let mut prev: Option<EntityKind> = None;
    for l in labels {
        match l {
            BioLabel::Outside => prev = None,
            BioLabel::Begin(k) => prev = Some(*k),
            BioLabel::Inside(k) => {
                if prev != Some(*k) {
                    return false;
                }
            }
        }
    }
    true
}

fn jaccard_oracle(a: &[usize], b: &[usize]) -> f64 {
    let a: BTreeSet<_> = a.iter().collect();
    let b: BTreeSet<_> = b.iter().collect();
    let inter = a.iter().filter(|x| b.contains(*x)).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Scan all gold spans, keep the strictly-greater Jaccard, break ties by
/// smallest start, then smallest index.
fn attribution_oracle(mention: &[usize], gold: &[GoldSpan]) -> Option<usize> {
    let mut scored: Vec<(usize, f64, usize)> = gold
        .iter()
        .enumerate()
        .map(|(i, g)| (i, jaccard_oracle(mention, &g.tokens), *g.tokens.iter().min().unwrap()))
        .filter(|(_, j, _)| *j > 0.0)
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.2.cmp(&b.2)).then(a.0.cmp(&b.0)));
    scored.first().map(|s| s.0)
}

fn naive_tp(pred: &[LabeledSpan], gold: &[LabeledSpan]) -> usize {
    let mut unused: Vec<bool> = vec![true; gold.len()];
    let mut tp = 0;
    for p in pred {
        if let Some(i) = (0..gold.len()).find(|&i| unused[i] && gold[i] == *p) {
            unused[i] = false;
            tp += 1;
        }
    }
    tp
}

// ------------------------------------------------------------- strategies

fn kind() -> impl Strategy<Value = EntityKind> {
    prop_oneof![
        Just(EntityKind::Occupation),
        Just(EntityKind::Skill),
        Just(EntityKind::Qualification)
    ]
}

fn label() -> impl Strategy<Value = BioLabel> {
    prop_oneof![
        Just(BioLabel::Outside),
        kind().prop_map(BioLabel::Begin),
        kind().prop_map(BioLabel::Inside),
    ]
}

fn nonzero_vec(dim: usize) -> impl Strategy<Value = Vec<f32>> {
    prop::collection::vec(-1.0f32..1.0, dim).prop_filter("non-zero", |v| v.iter().any(|x| x.abs() > 1e-3))
}

/// (records, query) with ≤ 200 nodes, ≤ 5 records per node, dim ≤ 16.
fn index_case() -> impl Strategy<Value = (Vec<EmbeddingRecord>, Vec<f32>, usize)> {
    (1usize..=16).prop_flat_map(|dim| {
        let node = (1usize..=5).prop_flat_map(move |n| prop::collection::vec(nonzero_vec(dim), n));
        (prop::collection::vec(node, 1..=200), nonzero_vec(dim), 1usize..=20).prop_map(|(nodes, query, k)| {
            let mut records = Vec::new();
            for (i, vectors) in nodes.into_iter().enumerate() {
                for (j, v) in vectors.into_iter().enumerate() {
                    records.push(EmbeddingRecord {
                        node_id: format!("n{i:03}"),
                        kind: EntityKind::Skill,
                        field: FieldTag::AltLabel(j as u16),
                        vector: EmbeddingVector::new(v).unwrap(),
                    });
                }
            }
            (records, query, k)
        })
    })
}

// ------------------------------------------------------------ vector index

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn top_k_matches_brute_force((records, query, k) in index_case()) {
        let index = VectorIndex::build(&records).unwrap();
        let got = index.query_top_k(&query, k).unwrap();
        let want = brute_force_top_k(&records, &query, k);
        prop_assert_eq!(got.len(), want.len());
        for (g, (id, score)) in got.iter().zip(&want) {
            prop_assert_eq!(&g.node_id, id);
            prop_assert!((g.score - score).abs() < 1e-6);
        }
    }

    #[test]
    fn ranks_are_monotone((records, query, k) in index_case()) {
        let got = VectorIndex::build(&records).unwrap().query_top_k(&query, k).unwrap();
        for pair in got.windows(2) {
            prop_assert!(pair[0].score >= pair[1].score);
        }
    }

    #[test]
    fn query_scale_does_not_change_order((records, query, k) in index_case(), scale in 0.01f32..100.0) {
        let index = VectorIndex::build(&records).unwrap();
        let scaled: Vec<f32> = query.iter().map(|v| v * scale).collect();
        let a: Vec<String> = index.query_top_k(&query, k).unwrap().into_iter().map(|c| c.node_id).collect();
        let b: Vec<String> = index.query_top_k(&scaled, k).unwrap().into_iter().map(|c| c.node_id).collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn cosine_bounded_and_symmetric(u in nonzero_vec(6), v in nonzero_vec(6)) {
        let c = cosine(&u, &v).unwrap();
        prop_assert!((-1.0 - 1e-6..=1.0 + 1e-6).contains(&c));
        prop_assert!((c - cosine(&v, &u).unwrap()).abs() < 1e-12);
    }
}

// ------------------------------------------------------------ recognition

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn repair_yields_valid_bio(labels in prop::collection::vec(label(), 0..=12)) {
        let repaired = repair_bio(&labels);
        prop_assert_eq!(repaired.len(), labels.len());
        prop_assert!(is_valid_bio_oracle(&repaired));
    }

    #[test]
    fn repair_is_idempotent(labels in prop::collection::vec(label(), 0..=12)) {
        let once = repair_bio(&labels);
        prop_assert_eq!(repair_bio(&once), once);
    }

    #[test]
    fn mentions_and_labels_are_inverse(labels in prop::collection::vec(label(), 1..=12)) {
        let labels = repair_bio(&labels);
        let mut text = String::new();
        let mut tokens = Vec::new();
        for i in 0..labels.len() {
            if i > 0 {
                text.push(' ');
            }
            let start = text.len();
            text.push_str(&format!("t{i}"));
            tokens.push(Token { text: format!("t{i}"), start, end: text.len() });
        }
        let sentence = TokenizedSentence { index: 0, first_token: 0, tokens };
        let mentions = extract_mentions(&text, &sentence, &labels).unwrap();
        prop_assert_eq!(mentions_to_labels(labels.len(), &mentions), labels.clone());
        let again = extract_mentions(&text, &sentence, &mentions_to_labels(labels.len(), &mentions)).unwrap();
        prop_assert_eq!(again, mentions);
    }

    #[test]
    fn strip_preserves_order(
        tokens in prop::collection::vec(prop_oneof![
            Just("[CLS]".to_string()), Just("<s>".to_string()), "[a-z]{1,4}"
        ], 0..12),
    ) {
        let labels = vec![BioLabel::Outside; tokens.len()];
        let survivors: Vec<String> = tokens.iter().filter(|t| !DEFAULT_SPECIAL_TOKENS.contains(&t.as_str())).cloned().collect();
        let (kept, kept_labels) = strip_special_tokens(tokens, labels, DEFAULT_SPECIAL_TOKENS).unwrap();
        prop_assert_eq!(kept_labels.len(), kept.len());
        prop_assert_eq!(kept, survivors);
    }

    #[test]
    fn tokenizer_is_lossless(text in "[a-zA-Zé .,;:!?()'\"/&\n-]{1,80}") {
        let doc = Document::new("d", text.clone()).unwrap();
        let mut last_end = 0;
        let mut expected_first = 0;
        for s in tokenize(&doc) {
            prop_assert_eq!(s.first_token, expected_first);
            expected_first += s.tokens.len();
            for t in &s.tokens {
                prop_assert_eq!(&text[t.start..t.end], t.text.as_str());
                prop_assert!(t.start >= last_end && t.end > t.start);
                last_end = t.end;
            }
        }
        // every non-whitespace character is covered by some token
        let covered: usize = tokenize(&doc).iter().flat_map(|s| &s.tokens).map(|t| t.text.chars().count()).sum();
        prop_assert_eq!(covered, text.chars().filter(|c| !c.is_whitespace()).count());
    }
}

#[test]
fn repair_exhaustive_length_four() {
    let alphabet = [
        BioLabel::Outside,
        BioLabel::Begin(EntityKind::Skill),
        BioLabel::Inside(EntityKind::Skill),
        BioLabel::Begin(EntityKind::Occupation),
        BioLabel::Inside(EntityKind::Occupation),
    ];
    let mut checked = 0;
    for len in 0..=4u32 {
        for code in 0..5usize.pow(len) {
            let seq: Vec<BioLabel> = (0..len).map(|p| alphabet[code / 5usize.pow(p) % 5]).collect();
            let r = repair_bio(&seq);
            assert!(is_valid_bio_oracle(&r), "{seq:?} -> {r:?}");
            assert_eq!(repair_bio(&r), r);
            if is_valid_bio_oracle(&seq) {
                assert_eq!(r, seq, "valid input must be left alone");
            }
            checked += 1;
        }
    }
    assert_eq!(checked, 1 + 5 + 25 + 125 + 625);
}

// ----------------------------------------------------------- evaluation

fn gold_spans() -> impl Strategy<Value = Vec<GoldSpan>> {
    prop::collection::vec((0usize..20, 1usize..4, "[A-E]"), 1..=10).prop_map(|v| {
        v.into_iter()
            .map(|(s, len, label)| GoldSpan {
                tokens: (s..s + len).collect(),
                label,
            })
            .collect()
    })
}

fn mention_sets() -> impl Strategy<Value = Vec<Vec<usize>>> {
    prop::collection::vec((0usize..22, 1usize..4).prop_map(|(s, l)| (s..s + l).collect()), 0..=6)
}

fn spans(max: usize) -> impl Strategy<Value = Vec<LabeledSpan>> {
    prop::collection::vec(
        (
            0usize..6,
            1usize..3,
            prop_oneof![Just(EntityKind::Skill), Just(EntityKind::Occupation)],
        )
            .prop_map(|(s, l, k)| LabeledSpan::new(s, s + l, k)),
        0..max,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn attribution_matches_argmax(mentions in mention_sets(), gold in gold_spans()) {
        let got = attribute_spans(&mentions, &gold);
        for (m, a) in mentions.iter().zip(&got) {
            let want = attribution_oracle(m, &gold);
            prop_assert_eq!(a.gold_span, want);
            match want {
                Some(i) => {
                    prop_assert!(jaccard_oracle(m, &gold[i].tokens) > 0.0);
                    prop_assert_eq!(&a.label, &gold[i].label);
                }
                None => prop_assert_eq!(a.label.as_str(), UNK),
            }
        }
    }

    #[test]
    fn jaccard_properties(a in prop::collection::vec(0usize..10, 0..6), b in prop::collection::vec(0usize..10, 0..6)) {
        let j = jaccard(&a, &b);
        prop_assert!((0.0..=1.0).contains(&j));
        prop_assert_eq!(j, jaccard(&b, &a));
        prop_assert_eq!(j, jaccard_oracle(&a, &b));
        if !a.is_empty() {
            prop_assert_eq!(jaccard(&a, &a), 1.0);
        }
    }

    #[test]
    fn span_f1_recount_and_symmetry(pred in spans(8), gold in spans(8)) {
        let c = span_f1_strict(&pred, &gold);
        prop_assert_eq!(c.true_positives, naive_tp(&pred, &gold));
        let swapped = span_f1_strict(&gold, &pred);
        prop_assert_eq!(c.precision(), swapped.recall());
        prop_assert_eq!(c.recall(), swapped.precision());
        prop_assert!((0.0..=1.0).contains(&c.f1()));
    }

    #[test]
    fn accuracy_matches_recount(
        rows in prop::collection::vec((prop::option::of("[A-D]"), prop::collection::vec("[A-D]|UNK", 1..3)), 1..30)
    ) {
        let records: Vec<AccuracyRecord> = rows
            .iter()
            .map(|(t, g)| AccuracyRecord { top1: t.clone(), gold: g.clone() })
            .collect();
        let eligible: Vec<&(Option<String>, Vec<String>)> =
            rows.iter().filter(|(_, g)| g.iter().any(|x| x != "UNK")).collect();
        let hits = eligible.iter().filter(|(t, g)| t.as_ref().is_some_and(|t| g.contains(t))).count();
        match accuracy_at_1(&records) {
            Ok(acc) => prop_assert_eq!(acc, hits as f64 / eligible.len() as f64),
            Err(_) => prop_assert!(eligible.is_empty()),
        }
    }

    #[test]
    fn in_kb_filter_never_grows(golds in prop::collection::vec(prop::collection::vec("[A-C]|UNK", 0..4), 0..10)) {
        let instances: Vec<GoldInstance> = golds
            .iter()
            .enumerate()
            .map(|(i, g)| GoldInstance {
                id: i.to_string(),
                text: String::new(),
                kind: EntityKind::Skill,
                gold: g.clone(),
                spans: None,
            })
            .collect();
        let before: BTreeMap<String, usize> = instances.iter().map(|i| (i.id.clone(), i.gold.len())).collect();
        let out = filter_in_kb(instances.clone());
        prop_assert!(out.instances.len() <= instances.len());
        for i in &out.instances {
            prop_assert!(i.gold.len() <= before[&i.id]);
            prop_assert!(!i.gold.is_empty() && i.gold.iter().all(|g| g != UNK));
        }
    }

    #[test]
    fn aggregation_is_order_insensitive(
        lists in prop::collection::vec(prop::collection::vec(("[A-F]", 0u8..10), 0..5), 0..5),
        seed in any::<u64>(),
    ) {
        let results: Vec<MentionLinkResult> = lists
            .into_iter()
            .map(|cands| MentionLinkResult {
                mention: Mention {
                    kind: EntityKind::Skill,
                    sentence: 0,
                    token_span: (0, 1),
                    doc_token_span: (0, 1),
                    char_span: (0, 1),
                    surface: "x".into(),
                    text: "x".into(),
                },
                candidates: cands
                    .into_iter()
                    .map(|(id, s)| RankedCandidate {
                        node_id: id,
                        score: f64::from(s) / 10.0,
                        best_field: FieldTag::AltLabel(u16::from(s % 3)),
                    })
                    .collect(),
            })
            .collect();
        let mut shuffled = results.clone();
        let n = shuffled.len();
        if n > 1 {
            shuffled.rotate_left((seed as usize) % n);
            shuffled.swap(0, n - 1);
        }
        let a = aggregate_to_sentence(&results);
        prop_assert_eq!(&a, &aggregate_to_sentence(&shuffled));
        let ids: BTreeSet<&str> = a.iter().map(|c| c.node_id.as_str()).collect();
        prop_assert_eq!(ids.len(), a.len());
    }
}

// ----------------------------------------------------- embeddings & cache

fn random_records() -> impl Strategy<Value = Vec<EmbeddingRecord>> {
    (1usize..12).prop_flat_map(|dim| {
        prop::collection::vec(
            (
                "\\PC{0,12}",
                kind(),
                0u8..5,
                any::<u16>(),
                prop::collection::vec(-1e6f32..1e6, dim),
            ),
            0..=10,
        )
        .prop_map(|rows| {
            rows.into_iter()
                .map(|(id, kind, fk, idx, values)| EmbeddingRecord {
                    node_id: id,
                    kind,
                    field: FieldTag::from_parts(fk, if fk == 4 { idx } else { 0 }).unwrap(),
                    vector: EmbeddingVector::new(values).unwrap(),
                })
                .collect()
        })
    })
}

proptest! {
    #[test]
    fn cache_roundtrip_bit_exact(records in random_records(), normalized in any::<bool>()) {
        let bytes = cache::encode(&records, normalized).unwrap();
        let back = cache::decode(&bytes).unwrap();
        prop_assert_eq!(back.normalized, normalized);
        prop_assert_eq!(back.records.len(), records.len());
        for (a, b) in records.iter().zip(&back.records) {
            prop_assert_eq!(&a.node_id, &b.node_id);
            prop_assert_eq!(a.kind, b.kind);
            prop_assert_eq!(a.field, b.field);
            let bits_a: Vec<u32> = a.vector.as_slice().iter().map(|v| v.to_bits()).collect();
            let bits_b: Vec<u32> = b.vector.as_slice().iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(bits_a, bits_b);
        }
        prop_assert_eq!(cache::encode(&back.records, normalized).unwrap(), bytes);
    }

    #[test]
    fn strategy_cardinality(
        desc in prop_oneof![Just(String::new()), "[a-z ]{1,20}".prop_filter("non-blank", |s| !s.trim().is_empty())],
        alts in prop::collection::btree_set("[a-z]{1,6}", 0..5),
    ) {
        let alts: Vec<String> = alts.into_iter().collect();
        let node = TaxonomyNode::new("n", EntityKind::Skill, "label").with_description(desc.clone()).with_alt_labels(alts.clone());
        let has_desc = usize::from(!desc.is_empty());
        let has_alts = usize::from(!alts.is_empty());
        for strategy in [EmbeddingStrategy::PreferredLabel, EmbeddingStrategy::Description, EmbeddingStrategy::LabelAndDescription] {
            prop_assert_eq!(build_node_texts(&node, strategy).len(), 1);
        }
        let s4 = build_node_texts(&node, EmbeddingStrategy::MultiCombinedFields).len();
        prop_assert_eq!(s4, 1 + has_desc + has_alts);
        prop_assert!((1..=3).contains(&s4));
        prop_assert_eq!(build_node_texts(&node, EmbeddingStrategy::MultiSeparateAltLabels).len(), 1 + has_desc + alts.len());
        prop_assert!(build_node_texts(&node, EmbeddingStrategy::MultiSeparateAltLabels).iter().all(|(_, t)| !t.trim().is_empty()));
    }
}

// ---------------------------------------------------------- sentence linking

fn occupation_set(n: usize) -> ReferenceSet {
    let nodes = (0..n)
        .map(|i| {
            TaxonomyNode::new(
                format!("{:04}.{}", 1000 + i, i % 3),
                EntityKind::Occupation,
                format!("occupation number {i}"),
            )
            .with_description(format!("does task {i}"))
            .with_alt_labels([format!("alt {i}")])
        })
        .collect();
    ReferenceSet::new(EntityKind::Occupation, nodes, "fixture").unwrap()
}

#[test]
fn self_retrieval_every_strategy() {
    let set = occupation_set(30);
    let mut hash = HashEmbedder::new(48);
    for strategy in EmbeddingStrategy::ALL {
        let records = build_embeddings(&set, strategy, &mut hash, 7).unwrap();
        let index = VectorIndex::build(&records).unwrap();
        assert!(index.is_normalized());
        for node in set.nodes() {
            for (_, text) in build_node_texts(node, strategy) {
                let r = link_sentence(
                    SentenceQuery::new(text, EntityKind::Occupation).with_k(3),
                    &index,
                    &mut hash,
                )
                .unwrap();
                assert_eq!(r.candidates[0].node_id, node.id, "{strategy}");
                assert!((r.candidates[0].score - 1.0).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn title_and_sentence_results_identical() {
    let set = occupation_set(10);
    let mut hash = HashEmbedder::new(16);
    let index =
        VectorIndex::build(&build_embeddings(&set, EmbeddingStrategy::PreferredLabel, &mut hash, 64).unwrap()).unwrap();
    for title in ["Senior Trade Service Officer", "occupation number 3", "chef"] {
        let t = link_title(title, &index, &mut hash, 5).unwrap();
        let s = link_sentence(
            SentenceQuery::new(title, EntityKind::Occupation).with_k(5),
            &index,
            &mut hash,
        )
        .unwrap();
        assert_eq!(format!("{t:?}"), format!("{s:?}"));
        let again = link_title(title, &index, &mut hash, 5).unwrap();
        assert_eq!(t, again);
    }
}
