use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use cscime::config::{Config, CONFIG_KEYS};
use cscime::error::{Error, IoContext, Result};
use cscime::formats::{self, PairFormat};
use cscime::pipeline::{self, FilterOutputs, GenerateOptions, Probabilities};
use cscime::resources::{self, Resources};
use cscime_core::filter::LmProbabilityProvider;
use cscime_core::{Generator, Ime, Tagger};
use serde::Serialize;

/// Generate pinyin-IME pseudo data for Chinese spelling correction, and tag,
/// filter and evaluate spelling-correction corpora.
#[derive(Parser)]
#[command(name = "cscime", version)]
struct Cli {
    /// TOML config file; relative paths inside it are resolved against its directory
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override a config key, e.g. --set noise.delta=0.2 (repeatable)
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Add corpus word counts to a lexicon's frequencies
    BuildDict(BuildDictArgs),
    /// Train the character n-gram language model
    TrainLm(TrainLmArgs),
    /// Generate noised sentence pairs from correct sentences
    Generate(GenerateArgs),
    /// Report the pinyin and semantic error distribution of a pair file
    Tag(TagArgs),
    /// Split a corpus into likely-correct and suspect sentences
    Filter(FilterArgs),
    /// Score predictions against gold corrections
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct BuildDictArgs {
    /// Corpus, one sentence per line
    #[arg(long)]
    corpus: PathBuf,
    /// Base lexicon [default: paths.lexicon]
    #[arg(long)]
    base: Option<PathBuf>,
    /// Output lexicon file
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args)]
struct TrainLmArgs {
    /// Corpus, one sentence per line
    #[arg(long)]
    corpus: PathBuf,
    /// N-gram order [config: lm.order]
    #[arg(long)]
    order: Option<usize>,
    /// Absolute discount [config: lm.discount]
    #[arg(long)]
    discount: Option<f64>,
    /// Model file [default: paths.lm]
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    /// Correct sentences, one per line
    #[arg(long, short)]
    input: PathBuf,
    /// Pair output file
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long, value_enum, default_value_t = PairFormat::Jsonl)]
    format: PairFormat,
    /// Stop after this many emitted pairs
    #[arg(long)]
    max_pairs: Option<u64>,
    /// Base seed [config: run.seed]
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads [config: run.parallelism]
    #[arg(long)]
    parallelism: Option<usize>,
    /// Perplexity filter threshold [config: noise.delta]
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    /// Disable the perplexity filter [config: noise.enable_lm_filter]
    #[arg(long)]
    no_lm_filter: bool,
    /// Write the run report as JSON here
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct TagArgs {
    /// Pairs as JSON lines or source TAB target
    #[arg(long, short)]
    input: PathBuf,
    /// Target word segmentation, one line of space-separated words per pair
    /// (default: forward maximum matching over the lexicon)
    #[arg(long)]
    segmentation: Option<PathBuf>,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct FilterArgs {
    /// Sentences, one per line
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long)]
    kept: PathBuf,
    #[arg(long)]
    suspect: PathBuf,
    /// Per-character error probabilities, one JSON array per sentence line
    /// (default: language-model surprisal)
    #[arg(long)]
    probs: Option<PathBuf>,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    report: Option<PathBuf>,
    /// Worker threads [config: run.parallelism]
    #[arg(long)]
    parallelism: Option<usize>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    src: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    /// Write the JSON report here instead of stdout
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn config_help() -> String {
    let width = CONFIG_KEYS.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut s = String::from("Configuration keys (TOML sections; override with --set KEY=VALUE):\n");
    for (k, d) in CONFIG_KEYS {
        s += &format!("  {k:<width$}  {d}\n");
    }
    s += "\nExit codes: 0 success, 1 invalid input or configuration, 2 I/O error, 3 internal error.";
    s
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).at(path)?))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).at(path)?))
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    match path {
        Some(p) => std::fs::write(p, text + "\n").at(p),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn load_config(cli: &Cli, extra: Vec<String>) -> Result<Config> {
    let mut overrides = cli.overrides.clone();
    overrides.extend(extra);
    Config::load(cli.config.as_deref(), &overrides)
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::BuildDict(a) => {
            let cfg = load_config(&cli, vec![])?;
            let scheme = resources::load_scheme(&cfg)?;
            let base = a.base.clone().unwrap_or_else(|| cfg.paths.lexicon.clone());
            let mut lex = resources::load_lexicon_file(&base, &scheme)?;
            let n = pipeline::build_dict(&mut lex, open(&a.corpus)?, &a.corpus)?;
            let mut out = create(&a.output)?;
            formats::write_lexicon(&mut out, &lex, &a.output)?;
            out.flush().at(&a.output)?;
            eprintln!("counted {n} sentences; wrote {} entries to {}", lex.len(), a.output.display());
        }
        Command::TrainLm(a) => {
            let mut extra = vec![];
            extra.extend(a.order.map(|o| format!("lm.order={o}")));
            extra.extend(a.discount.map(|d| format!("lm.discount={d}")));
            let cfg = load_config(&cli, extra)?;
            let model = pipeline::train_lm(open(&a.corpus)?, &a.corpus, cfg.lm.order, cfg.lm.discount)?;
            let out = a.output.clone().unwrap_or_else(|| cfg.paths.lm.clone());
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).at(dir)?;
            }
            std::fs::write(&out, model.to_arpa()).at(&out)?;
            eprintln!("n-gram counts {:?}; wrote {}", model.ngram_counts(), out.display());
        }
        Command::Generate(a) => {
            let mut extra = vec![];
            extra.extend(a.seed.map(|s| format!("run.seed={s}")));
            extra.extend(a.parallelism.map(|p| format!("run.parallelism={p}")));
            extra.extend(a.delta.map(|d| format!("noise.delta={}", toml_float(d))));
            if a.no_lm_filter {
                extra.push("noise.enable_lm_filter=false".into());
            }
            let cfg = load_config(&cli, extra)?;
            cfg.require_files(&["paths.lm"])?;
            let res = Resources::load(&cfg)?;
            let model = resources::load_model(&cfg.paths.lm)?;
            let ime = Ime::new(&res.scheme, &res.lexicon, &model);
            let generator = Generator::new(ime, &res.readings, &model, cfg.noise.clone()).map_err(|issues| {
                Error::Validation(issues.into_iter().map(|i| format!("{}: {}", i.key, i.message)).collect())
            })?;
            let opts = GenerateOptions {
                seed: cfg.run.seed,
                parallelism: cfg.run.parallelism,
                chunk_size: cfg.run.chunk_size,
                max_pairs: a.max_pairs,
                format: a.format,
            };
            let mut out = create(&a.output)?;
            let report = pipeline::generate(&generator, open(&a.input)?, &a.input, &mut out, &a.output, &opts)?;
            eprintln!(
                "attempted {}, emitted {}, filtered by LM {}, no candidate {}, no eligible token {}",
                report.attempted, report.emitted, report.filtered_by_lm, report.no_candidate, report.no_eligible_token
            );
            if let Some(p) = &a.report {
                write_json(&report, Some(p))?;
            }
        }
        Command::Tag(a) => {
            let cfg = load_config(&cli, vec![])?;
            let res = Resources::load(&cfg)?;
            let tagger =
                Tagger { scheme: &res.scheme, readings: &res.readings, lexicon: &res.lexicon, special: &res.special };
            let segmentation = match &a.segmentation {
                Some(p) => Some((open(p)?, p.as_path())),
                None => None,
            };
            let report = pipeline::tag(&tagger, open(&a.input)?, &a.input, segmentation)?;
            print!("{}", report.table());
            if a.report.is_none() {
                println!();
            }
            write_json(&report, a.report.as_deref())?;
        }
        Command::Filter(a) => {
            let mut extra = vec![];
            extra.extend(a.parallelism.map(|p| format!("run.parallelism={p}")));
            let cfg = load_config(&cli, extra)?;
            let res = Resources::load(&cfg)?;
            let mut outputs = FilterOutputs {
                kept: create(&a.kept)?,
                kept_path: &a.kept,
                suspect: create(&a.suspect)?,
                suspect_path: &a.suspect,
            };
            let thresholds = cfg.filter.thresholds();
            let report = match &a.probs {
                Some(p) => {
                    let probs = Probabilities::File { reader: open(p)?, path: p };
                    pipeline::filter(
                        open(&a.input)?,
                        &a.input,
                        probs,
                        &res.lexicon,
                        &res.special,
                        &thresholds,
                        &mut outputs,
                        cfg.run.parallelism,
                        cfg.run.chunk_size,
                    )?
                }
                None => {
                    cfg.require_files(&["paths.lm"])?;
                    let model = resources::load_model(&cfg.paths.lm)?;
                    let provider = LmProbabilityProvider::new(&model, cfg.filter.surprisal_cap);
                    let probs: Probabilities<'_, BufReader<File>> = Probabilities::Provider(&provider);
                    pipeline::filter(
                        open(&a.input)?,
                        &a.input,
                        probs,
                        &res.lexicon,
                        &res.special,
                        &thresholds,
                        &mut outputs,
                        cfg.run.parallelism,
                        cfg.run.chunk_size,
                    )?
                }
            };
            #[derive(Serialize)]
            struct Out {
                total: u64,
                kept: u64,
                suspect: u64,
                kept_rate: Option<f64>,
                suspect_rate: Option<f64>,
            }
            let out = Out {
                total: report.total,
                kept: report.kept,
                suspect: report.suspect,
                kept_rate: report.kept_rate(),
                suspect_rate: report.suspect_rate(),
            };
            write_json(&out, a.report.as_deref())?;
        }
        Command::Evaluate(a) => {
            let report =
                pipeline::evaluate((open(&a.src)?, &a.src), (open(&a.gold)?, &a.gold), (open(&a.pred)?, &a.pred))?;
            write_json(&report, a.output.as_deref())?;
        }
    }
    Ok(())
}

/// TOML spelling of a float (`inf`, `-inf`, `nan` included).
fn toml_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:?}")
    }
}

fn main() -> ExitCode {
    let command = Cli::command().after_long_help(config_help());
    let cli = match Cli::from_arg_matches(&command.get_matches()) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.into()
        }
    }
}
