//! The `ingest`, `embed`, `link`, `eval` and `compare` commands.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use taxolink_core::embedding::build_embeddings;
use taxolink_core::eval::{compare_methods, evaluate, ComparisonTable, GoldInstance};
use taxolink_core::{
    link_mention, link_sentence, link_title, recognize, Document, EmbeddingStrategy, EntityKind, EvalReport, IndexSet,
    LinkError, Method, ReferenceSet, SentenceQuery,
};

use crate::cache_io;
use crate::config::{Config, DynLabeler, DynProvider};
use crate::error::{exit, link_exit_code, Error, Result};
use crate::formats::{render_report, CandidateOut, GoldLine, InputDocument, LinkOutput, MentionOut, ReportOut};
use crate::taxonomy_io::load_reference_set;

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Error::io(format!("creating {}", p.display()), e))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn open_input(path: Option<&Path>) -> Result<Box<dyn BufRead + Send>> {
    Ok(match path {
        Some(p) => Box::new(BufReader::new(
            File::open(p).map_err(|e| Error::io(format!("opening {}", p.display()), e))?,
        )),
        None => Box::new(BufReader::new(io::stdin())),
    })
}

fn read_jsonl<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let reader = open_input(Some(path))?;
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::format(format!("{}:{}", path.display(), i + 1), e))?);
    }
    Ok(out)
}

fn load_set(config: &Config, kind: EntityKind) -> Result<ReferenceSet> {
    let path = config
        .reference_path(kind)
        .ok_or_else(|| Error::Config(format!("no reference file configured for {kind}")))?;
    Ok(load_reference_set(kind, path)?)
}

/// Loads every configured reference set and returns a one-line summary
/// such as `occupations=3007 skills=13896 qualifications=814`.
pub fn ingest(config: &Config) -> Result<String> {
    let kinds = config.configured_kinds();
    if kinds.is_empty() {
        return Err(Error::Config("no reference files configured under [paths]".to_string()));
    }
    let mut parts = Vec::new();
    let mut levels = None;
    for kind in kinds {
        let set = load_set(config, kind)?;
        log::info!("{kind}: {} nodes ({})", set.len(), set.version_tag());
        if kind == EntityKind::Qualification {
            levels = Some(set.eqf_level_counts());
        }
        parts.push(format!("{}={}", plural(kind), set.len()));
    }
    let mut summary = parts.join(" ");
    if let Some(levels) = levels {
        let per_level: Vec<String> = levels
            .iter()
            .enumerate()
            .map(|(i, n)| format!("{}:{n}", i + 1))
            .collect();
        summary.push_str(&format!("\neqf_levels={}", per_level.join(",")));
    }
    Ok(summary)
}

fn plural(kind: EntityKind) -> &'static str {
    match kind {
        EntityKind::Occupation => "occupations",
        EntityKind::Skill => "skills",
        EntityKind::Qualification => "qualifications",
    }
}

/// Embeds the reference sets of `kinds` (all configured kinds if empty) and
/// writes one cache file per kind. Returns the written paths.
pub fn embed(config: &Config, kinds: &[EntityKind], strategy: Option<EmbeddingStrategy>) -> Result<Vec<PathBuf>> {
    let kinds = if kinds.is_empty() {
        config.configured_kinds()
    } else {
        kinds.to_vec()
    };
    if kinds.is_empty() {
        return Err(Error::Config("no reference files configured under [paths]".to_string()));
    }
    let mut provider = config.open_provider()?;
    let mut written = Vec::new();
    for kind in kinds {
        let set = load_set(config, kind)?;
        let strategy = strategy.unwrap_or_else(|| config.strategy_for(kind));
        let records =
            build_embeddings(&set, strategy, &mut provider, config.batch_size).map_err(|e| Error::Provider {
                context: format!("embedding {kind} node `{}`", e.node_id),
                source: e.source,
            })?;
        let path = cache_io::cache_path(&config.cache_dir, kind, strategy);
        cache_io::save(&path, &records, true)?;
        log::info!("{kind}/{strategy}: {} vectors for {} nodes", records.len(), set.len());
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Sentence,
    Title,
    Entity,
}

impl Mode {
    pub fn method(self) -> Method {
        match self {
            Mode::Sentence => Method::SentenceLinking,
            Mode::Title => Method::TitleLinking,
            Mode::Entity => Method::EntityLinking,
        }
    }

    pub fn from_method(m: Method) -> Mode {
        match m {
            Method::SentenceLinking => Mode::Sentence,
            Method::TitleLinking => Mode::Title,
            Method::EntityLinking => Mode::Entity,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LinkOptions {
    pub mode: Mode,
    /// Required for sentence and title linking; restricts entity linking.
    pub kind: Option<EntityKind>,
    pub k: usize,
    pub jobs: usize,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkSummary {
    pub documents: usize,
    pub failed: usize,
}

/// Shared read-only state of a link run.
struct LinkContext {
    mode: Mode,
    kind: Option<EntityKind>,
    k: usize,
    indexes: IndexSet,
    qualifications: Option<ReferenceSet>,
}

struct Worker {
    ctx: Arc<LinkContext>,
    provider: DynProvider,
    labeler: Option<DynLabeler>,
}

impl Worker {
    fn link_line(&mut self, line: &str, line_no: usize) -> (String, Option<i32>) {
        let mode = self.ctx.mode.method().short_name().to_string();
        let kind = self
            .ctx
            .kind
            .map(|k| k.slug().to_string())
            .filter(|_| self.ctx.mode != Mode::Entity);
        let (id, result) = match serde_json::from_str::<InputDocument>(line) {
            Ok(doc) => {
                let r = self.link(&doc);
                (doc.id, r)
            }
            Err(e) => (
                format!("line {line_no}"),
                Err((format!("malformed input: {e}"), exit::GENERAL)),
            ),
        };
        let (output, code) = match result {
            Ok(out) => (out, None),
            Err((message, code)) => {
                log::error!("document `{id}`: {message}");
                let out = LinkOutput {
                    id,
                    mode,
                    kind,
                    query: None,
                    candidates: None,
                    mentions: None,
                    error: Some(message),
                };
                (out, Some(code))
            }
        };
        (serde_json::to_string(&output).expect("link output serializes"), code)
    }

    fn link(&mut self, doc: &InputDocument) -> std::result::Result<LinkOutput, (String, i32)> {
        let fail = |e: LinkError| (e.to_string(), link_exit_code(&e));
        let ctx = &*self.ctx;
        let targets = ctx.qualifications.as_ref();
        let mode = ctx.mode.method().short_name().to_string();
        match ctx.mode {
            Mode::Sentence | Mode::Title => {
                let kind = ctx.kind.expect("checked before linking");
                let index = ctx.indexes.get(kind).expect("index loaded for kind");
                let result = if ctx.mode == Mode::Title {
                    let title = doc
                        .title
                        .as_deref()
                        .ok_or_else(|| ("document has no title".to_string(), exit::GENERAL))?;
                    link_title(title, index, &mut self.provider, ctx.k)
                } else {
                    link_sentence(
                        SentenceQuery::new(doc.text.as_str(), kind).with_k(ctx.k),
                        index,
                        &mut self.provider,
                    )
                }
                .map_err(fail)?;
                Ok(LinkOutput {
                    id: doc.id.clone(),
                    mode,
                    kind: Some(kind.slug().to_string()),
                    query: Some(result.query.text),
                    candidates: Some(
                        result
                            .candidates
                            .iter()
                            .map(|c| CandidateOut::new(c, targets))
                            .collect(),
                    ),
                    mentions: None,
                    error: None,
                })
            }
            Mode::Entity => {
                let labeler = self.labeler.as_mut().expect("labeler opened for entity linking");
                let document =
                    Document::new(doc.id.as_str(), doc.text.as_str()).map_err(|e| (e.to_string(), exit::GENERAL))?;
                let recognition = recognize(&document, labeler).map_err(|e| fail(e.into()))?;
                let mut mentions = Vec::new();
                for m in recognition.mentions {
                    if ctx.kind.is_some_and(|k| k != m.kind) {
                        continue;
                    }
                    if ctx.indexes.get(m.kind).is_none() {
                        log::warn!("document `{}`: no index for {} mention {:?}", doc.id, m.kind, m.text);
                        continue;
                    }
                    let r = link_mention(m, &ctx.indexes, &mut self.provider, ctx.k).map_err(fail)?;
                    mentions.push(MentionOut::new(&r, targets));
                }
                Ok(LinkOutput {
                    id: doc.id.clone(),
                    mode,
                    kind: None,
                    query: None,
                    candidates: None,
                    mentions: Some(mentions),
                    error: None,
                })
            }
        }
    }
}

fn load_link_context(config: &Config, opts: &LinkOptions) -> Result<LinkContext> {
    let kinds: Vec<EntityKind> = match (opts.mode, opts.kind) {
        (Mode::Sentence | Mode::Title, None) => {
            return Err(Error::Config(
                "--kind is required for sentence and title linking".to_string(),
            ))
        }
        (_, Some(k)) => vec![k],
        (Mode::Entity, None) => EntityKind::ALL.to_vec(),
    };
    let mut indexes = IndexSet::new();
    for kind in kinds {
        let path = cache_io::cache_path(&config.cache_dir, kind, config.strategy_for(kind));
        if !path.exists() {
            if opts.mode == Mode::Entity && opts.kind.is_none() {
                log::info!("no cache for {kind} at {}; its mentions are skipped", path.display());
                continue;
            }
            return Err(Error::Config(format!(
                "no embedding cache at {}; run `taxolink embed` first",
                path.display()
            )));
        }
        indexes.insert(cache_io::load_index(&path, kind)?);
    }
    if indexes.kinds().next().is_none() {
        return Err(Error::Config(format!(
            "no embedding caches found in {}",
            config.cache_dir.display()
        )));
    }
    let qualifications = match config.reference_path(EntityKind::Qualification) {
        Some(_) if indexes.get(EntityKind::Qualification).is_some() => {
            Some(load_set(config, EntityKind::Qualification)?)
        }
        _ => None,
    };
    Ok(LinkContext {
        mode: opts.mode,
        kind: opts.kind,
        k: opts.k,
        indexes,
        qualifications,
    })
}

/// Links every document of the input stream, writing one output line per
/// input line in input order. Per-document failures are written as error
/// lines and reported at the end.
pub fn link(config: &Config, opts: &LinkOptions) -> Result<LinkSummary> {
    if opts.k == 0 {
        return Err(Error::Config("k must be at least 1".to_string()));
    }
    let ctx = Arc::new(load_link_context(config, opts)?);
    let jobs = opts.jobs.max(1);
    let mut workers = Vec::with_capacity(jobs);
    for _ in 0..jobs {
        workers.push(Worker {
            ctx: Arc::clone(&ctx),
            provider: config.open_provider()?,
            labeler: if opts.mode == Mode::Entity {
                Some(config.open_labeler()?)
            } else {
                None
            },
        });
    }
    let input = open_input(opts.input.as_deref())?;
    let mut out = open_output(opts.out.as_deref())?;
    let (documents, codes) = run_ordered(input, workers, &mut out)?;
    out.flush().map_err(|e| Error::io("writing output", e))?;

    let failed = codes.len();
    if failed > 0 {
        let code = if codes.contains(&exit::PROVIDER) {
            exit::PROVIDER
        } else {
            exit::GENERAL
        };
        return Err(Error::DocumentsFailed {
            failed,
            total: documents,
            code,
        });
    }
    Ok(LinkSummary { documents, failed })
}

/// Fans input lines out to the workers and writes results back in input
/// order. Returns the number of documents and the exit codes of failures.
fn run_ordered(input: Box<dyn BufRead + Send>, workers: Vec<Worker>, out: &mut dyn Write) -> Result<(usize, Vec<i32>)> {
    let jobs = workers.len();
    let (task_tx, task_rx) = crossbeam_channel::bounded::<(usize, String)>(jobs * 4);
    let (done_tx, done_rx) = crossbeam_channel::bounded::<(usize, String, Option<i32>)>(jobs * 4);

    std::thread::scope(|scope| {
        let reader = scope.spawn(move || -> io::Result<()> {
            let mut seq = 0;
            for line in input.lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                if task_tx.send((seq, line)).is_err() {
                    break;
                }
                seq += 1;
            }
            Ok(())
        });
        for mut worker in workers {
            let rx = task_rx.clone();
            let tx = done_tx.clone();
            scope.spawn(move || {
                for (seq, line) in rx {
                    let (json, code) = worker.link_line(&line, seq + 1);
                    if tx.send((seq, json, code)).is_err() {
                        break;
                    }
                }
            });
        }
        drop(task_rx);
        drop(done_tx);

        let mut pending: BTreeMap<usize, (String, Option<i32>)> = BTreeMap::new();
        let mut next = 0;
        let mut codes = Vec::new();
        let mut write_err = None;
        for (seq, json, code) in done_rx {
            pending.insert(seq, (json, code));
            while let Some((json, code)) = pending.remove(&next) {
                if write_err.is_none() {
                    if let Err(e) = writeln!(out, "{json}") {
                        write_err = Some(e);
                    }
                }
                codes.extend(code);
                next += 1;
            }
        }
        if let Some(e) = write_err {
            return Err(Error::io("writing output", e));
        }
        reader
            .join()
            .expect("reader thread panicked")
            .map_err(|e| Error::io("reading input", e))?;
        Ok((next, codes))
    })
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub results: PathBuf,
    pub gold: PathBuf,
    /// Inferred from the results when absent.
    pub method: Option<Method>,
    pub kind: Option<EntityKind>,
    pub out: Option<PathBuf>,
}

/// Evaluates a `link` output against an evaluation set, one report per
/// entity kind present in the (filtered) gold file.
pub fn eval(opts: &EvalOptions) -> Result<Vec<EvalReport>> {
    let results: Vec<LinkOutput> = read_jsonl(&opts.results)?;
    let gold: Vec<GoldLine> = read_jsonl(&opts.gold)?;

    let method = match opts.method {
        Some(m) => m,
        None => {
            let first = results
                .first()
                .ok_or_else(|| Error::format(opts.results.display().to_string(), "no results"))?;
            first
                .mode
                .parse()
                .map_err(|e| Error::format(opts.results.display().to_string(), e))?
        }
    };

    // sentence and title results name their kind; without --kind, evaluate
    // only the kinds they cover
    let result_kinds: Option<BTreeSet<EntityKind>> = match (opts.kind, Mode::from_method(method)) {
        (None, Mode::Sentence | Mode::Title) => Some(
            results
                .iter()
                .filter_map(|r| r.kind.as_deref().and_then(|k| k.parse().ok()))
                .collect(),
        ),
        _ => None,
    };
    let mut by_kind: BTreeMap<EntityKind, Vec<GoldInstance>> = BTreeMap::new();
    for g in gold {
        let wanted = match (&opts.kind, &result_kinds) {
            (Some(k), _) => *k == g.kind,
            (None, Some(kinds)) => kinds.contains(&g.kind),
            (None, None) => true,
        };
        if wanted {
            by_kind.entry(g.kind).or_default().push(g.into());
        }
    }
    if by_kind.is_empty() {
        return Err(taxolink_core::EvalError::EmptyEvaluationSet.into());
    }

    let mut seen = BTreeSet::new();
    for r in &results {
        let key = (r.id.as_str(), r.kind.as_deref());
        if !seen.insert(key) {
            return Err(Error::format(
                opts.results.display().to_string(),
                format!("duplicate result for `{}`", r.id),
            ));
        }
    }

    let mut reports = Vec::new();
    for (kind, instances) in by_kind {
        let ids: BTreeSet<&str> = instances.iter().map(|g| g.id.as_str()).collect();
        let predictions: BTreeMap<String, _> = results
            .iter()
            .filter(|r| match (&r.kind, Mode::from_method(method)) {
                (_, Mode::Entity) => ids.contains(r.id.as_str()),
                (Some(k), _) => k.parse::<EntityKind>().is_ok_and(|k| k == kind),
                (None, _) => ids.contains(r.id.as_str()),
            })
            .map(|r| (r.id.clone(), r.prediction(kind)))
            .collect();
        reports.push(evaluate(method, instances, &predictions)?);
    }

    if let Some(path) = &opts.out {
        write_reports(path, &reports)?;
    }
    Ok(reports)
}

pub fn render_reports(reports: &[EvalReport]) -> String {
    reports.iter().map(render_report).collect::<Vec<_>>().join("\n")
}

pub fn write_reports(path: &Path, reports: &[EvalReport]) -> Result<()> {
    let out: Vec<ReportOut> = reports.iter().map(ReportOut::from).collect();
    let mut json = serde_json::to_string_pretty(&out).expect("reports serialize");
    json.push('\n');
    std::fs::write(path, json).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn read_reports(path: &Path) -> Result<Vec<EvalReport>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::format(path.display().to_string(), e))?;
    let reports: Vec<ReportOut> = if value.is_array() {
        serde_json::from_value(value)
    } else {
        serde_json::from_value(value).map(|r| vec![r])
    }
    .map_err(|e| Error::format(path.display().to_string(), e))?;
    Ok(reports.into_iter().map(EvalReport::from).collect())
}

/// Builds the method comparison from report files.
pub fn compare(sl: &[PathBuf], el: &[PathBuf], title: &[PathBuf]) -> Result<ComparisonTable> {
    let load = |paths: &[PathBuf], expected: Method| -> Result<Vec<EvalReport>> {
        let mut all = Vec::new();
        for p in paths {
            for r in read_reports(p)? {
                if r.method != expected {
                    return Err(Error::format(
                        p.display().to_string(),
                        format!("holds a {} report, expected {}", r.method.name(), expected.name()),
                    ));
                }
                all.push(r);
            }
        }
        Ok(all)
    };
    let sl = load(sl, Method::SentenceLinking)?;
    let el = load(el, Method::EntityLinking)?;
    let title = load(title, Method::TitleLinking)?;
    if sl.is_empty() && el.is_empty() && title.is_empty() {
        return Err(Error::Config("no reports given".to_string()));
    }
    let mut seen: HashMap<(Method, EntityKind), ()> = HashMap::new();
    for r in sl.iter().chain(&el).chain(&title) {
        if seen.insert((r.method, r.kind), ()).is_some() {
            return Err(Error::Config(format!("two {} reports for {}", r.method.name(), r.kind)));
        }
    }
    Ok(compare_methods(&sl, &el, &title)?)
}
