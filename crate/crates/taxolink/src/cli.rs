use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use taxolink_core::{EmbeddingStrategy, EntityKind, Method};

use crate::commands::{self, EvalOptions, LinkOptions, Mode};
use crate::config::Config;
use crate::error::{exit, Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "taxolink",
    version,
    about = "Link job-vacancy text to ESCO occupations, skills and EQF levels"
)]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and validate the reference sets, printing node counts.
    Ingest,
    /// Embed reference sets into cache files.
    Embed(EmbedArgs),
    /// Link documents from JSON Lines input.
    Link(LinkArgs),
    /// Score link output against an evaluation set.
    Eval(EvalArgs),
    /// Tabulate Accuracy@1 across methods and kinds.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Occupation,
    Skill,
    Qualification,
}

impl From<KindArg> for EntityKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Occupation => EntityKind::Occupation,
            KindArg::Skill => EntityKind::Skill,
            KindArg::Qualification => EntityKind::Qualification,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Sl,
    El,
    Title,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Sl => Mode::Sentence,
            ModeArg::El => Mode::Entity,
            ModeArg::Title => Mode::Title,
        }
    }
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long, value_enum)]
    pub kind: Vec<KindArg>,
    /// Overrides the configured strategy (s1..s5).
    #[arg(long)]
    pub strategy: Option<EmbeddingStrategy>,
}

#[derive(Debug, Args)]
pub struct LinkArgs {
    #[arg(long, value_enum, default_value = "sl")]
    pub mode: ModeArg,
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// JSON Lines input; stdin when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Output of `taxolink link`.
    #[arg(long)]
    pub results: PathBuf,
    /// Evaluation set (JSON Lines).
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Report file (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, num_args = 1..)]
    pub sl: Vec<PathBuf>,
    #[arg(long, num_args = 1..)]
    pub el: Vec<PathBuf>,
    #[arg(long, num_args = 1..)]
    pub title: Vec<PathBuf>,
    /// Table file (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn load_config(cli: &Cli) -> Result<Config> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("--config is required".to_string()))?;
    Config::load(path)
}

pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest => {
            let config = load_config(&cli)?;
            println!("{}", commands::ingest(&config)?);
        }
        Command::Embed(args) => {
            let config = load_config(&cli)?;
            let kinds: Vec<EntityKind> = args.kind.iter().map(|&k| k.into()).collect();
            for path in commands::embed(&config, &kinds, args.strategy)? {
                println!("{}", path.display());
            }
        }
        Command::Link(args) => {
            let config = load_config(&cli)?;
            let opts = LinkOptions {
                mode: args.mode.into(),
                kind: args.kind.map(Into::into),
                k: args.k.unwrap_or(config.k),
                jobs: args.jobs.unwrap_or(config.jobs),
                input: args.input.clone(),
                out: args.out.clone(),
            };
            let summary = commands::link(&config, &opts)?;
            log::info!("linked {} documents", summary.documents);
        }
        Command::Eval(args) => {
            let reports = commands::eval(&EvalOptions {
                results: args.results.clone(),
                gold: args.gold.clone(),
                method: args.mode.map(|m| Mode::from(m).method()),
                kind: args.kind.map(Into::into),
                out: args.out.clone(),
            })?;
            print!("{}", commands::render_reports(&reports));
        }
        Command::Compare(args) => {
            let table = commands::compare(&args.sl, &args.el, &args.title)?;
            print!("{}", table.render());
            if let Some(path) = &args.out {
                write_table(path, &table)?;
            }
        }
    }
    Ok(())
}

fn write_table(path: &std::path::Path, table: &taxolink_core::eval::ComparisonTable) -> Result<()> {
    let rows: Vec<serde_json::Value> = table
        .rows
        .iter()
        .map(|(method, cells)| {
            let cells: serde_json::Map<String, serde_json::Value> = table
                .kinds
                .iter()
                .zip(cells)
                .map(|(k, v)| (k.slug().to_string(), serde_json::json!(v)))
                .collect();
            serde_json::json!({ "method": method_name(*method), "accuracy_at_1": cells })
        })
        .collect();
    let json = serde_json::to_string_pretty(&rows).expect("table serializes") + "\n";
    std::fs::write(path, json).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn method_name(m: Method) -> &'static str {
    m.short_name()
}

/// Parses arguments, runs, and maps the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::GENERAL } else { exit::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .try_init();
    match run(cli) {
        Ok(()) => exit::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            e.exit_code()
        }
    }
}
