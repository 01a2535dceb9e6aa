//! `creak` — synthetic-corpus generation, feature extraction and
//! LOSO evaluation for social creak classification, driven by a config
//! file with flag overrides. Results go to files; logs go to stderr.

mod config;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use creak_core::corpus::{
    balance_classes, binarize_all, generate_synthetic_corpus, load_manifest, CreakLabel,
    SyntheticCorpusSpec,
};
use creak_core::eval::{aggregate, run_experiment, CellValue, ExperimentReport, RunResult};
use creak_core::features::{config_hash, FeatureCache, FeatureKind};
use creak_core::ml::ClassifierKind;
use creak_core::features::FeatureExtractor;
use creak_core::pipeline::{build_feature_table, extract_recording};

use config::ExperimentConfig;

const CACHE_ENV: &str = "CREAK_CACHE_DIR";

/// Invalid invocation (as opposed to a runtime failure); exits with 2.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Usage(msg.into()))
}

#[derive(Parser)]
#[command(name = "creak", version, about = "Classify low vs. high social creak in speech")]
struct Cli {
    /// Silence all logging (results still go to files).
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a deterministic synthetic creaky-speech corpus.
    Synth(SynthArgs),
    /// Preprocess recordings and fill the feature cache.
    Extract(ExtractArgs),
    /// Run the feature × classifier grid under LOSO cross-validation.
    Evaluate(EvaluateArgs),
    /// Re-render reports from per-run JSON logs.
    Report(ReportArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory for WAVs and the manifest.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 45)]
    n_per_class: usize,
    #[arg(long, default_value_t = 16_000)]
    sample_rate: u32,
    /// Recording length in seconds.
    #[arg(long, default_value_t = 20.0)]
    duration: f64,
    /// Creak-fraction interval of the low class, as `min,max`.
    #[arg(long, default_value = "0.0,0.2")]
    low: String,
    /// Creak-fraction interval of the high class, as `min,max`.
    #[arg(long, default_value = "0.5,0.9")]
    high: String,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Args)]
struct ExtractArgs {
    /// Manifest CSV of the corpus to extract.
    #[arg(long)]
    manifest: PathBuf,
    /// Comma-separated feature kinds (default: all three).
    #[arg(long)]
    features: Option<String>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Silence threshold in dB relative to the normalized peak.
    #[arg(long)]
    threshold_db: Option<f64>,
    /// Minimum silent run removed, in seconds.
    #[arg(long)]
    min_silence: Option<f64>,
    /// Working sample rate in Hz.
    #[arg(long)]
    target_rate: Option<u32>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Experiment config file (TOML); flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Output directory (default: `results`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated feature kinds.
    #[arg(long)]
    features: Option<String>,
    /// Comma-separated classifiers (svm-linear, svm-rbf, lr, adaboost, rf, dt, mlp).
    #[arg(long)]
    classifiers: Option<String>,
    /// Comma-separated classifier seeds.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long)]
    threshold_db: Option<f64>,
    #[arg(long)]
    min_silence: Option<f64>,
    #[arg(long)]
    target_rate: Option<u32>,
    /// Seed for majority-class downsampling.
    #[arg(long)]
    balance_seed: Option<u64>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory of per-run JSON logs.
    #[arg(long)]
    runs: PathBuf,
    /// Where to write report.md and report.csv.
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let level = if cli.quiet { "off" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Extract(args) => cmd_extract(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Report(args) => cmd_report(args),
    };
    let code = match result {
        Ok(()) => 0,
        Err(e) if e.downcast_ref::<Usage>().is_some() => {
            eprintln!("usage error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    };
    std::process::exit(code);
}

fn parse_interval(text: &str, flag: &str) -> anyhow::Result<(f64, f64)> {
    let parts: Vec<&str> = text.split(',').collect();
    let err = || usage(format!("--{flag} expects `min,max`, got `{text}`"));
    if parts.len() != 2 {
        return Err(err());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| err())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| err())?;
    Ok((lo, hi))
}

fn parse_list<T: std::str::FromStr<Err = String>>(
    text: &str,
    flag: &str,
) -> anyhow::Result<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|e| usage(format!("--{flag}: {e}"))))
        .collect()
}

fn parse_seeds(text: &str) -> anyhow::Result<Vec<u64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<u64>()
                .map_err(|_| usage(format!("--seeds: `{s}` is not an integer")))
        })
        .collect()
}

fn thread_pool(jobs: Option<usize>) -> anyhow::Result<rayon::ThreadPool> {
    let threads = jobs.unwrap_or_else(|| {
        std::thread::available_parallelism().map_or(1, std::num::NonZeroUsize::get)
    });
    Ok(rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()?)
}

fn cmd_synth(args: SynthArgs) -> anyhow::Result<()> {
    if args.n_per_class == 0 {
        return Err(usage("--n-per-class must be at least 1"));
    }
    let spec = SyntheticCorpusSpec {
        n_per_class: args.n_per_class,
        sample_rate: args.sample_rate,
        duration_s: args.duration,
        creak_fraction_low: parse_interval(&args.low, "low")?,
        creak_fraction_high: parse_interval(&args.high, "high")?,
        seed: args.seed,
    };
    spec.validate().map_err(|e| usage(e.to_string()))?;

    let corpus = generate_synthetic_corpus(&spec, &args.out)?;
    let outcome = binarize_all(&corpus.entries);
    let low = outcome
        .samples
        .iter()
        .filter(|s| s.label == CreakLabel::Low)
        .count();
    let high = outcome.samples.len() - low;
    info!("wrote {} recordings to {}", corpus.entries.len(), args.out.display());
    println!("manifest: {}", corpus.manifest_path.display());
    println!("low: {low}");
    println!("high: {high}");
    Ok(())
}

fn resolve_cache_dir(flag: Option<PathBuf>, fallback: PathBuf) -> PathBuf {
    flag.or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
        .unwrap_or(fallback)
}

fn cmd_extract(args: ExtractArgs) -> anyhow::Result<()> {
    let kinds: Vec<FeatureKind> = match &args.features {
        Some(list) => parse_list(list, "features")?,
        None => FeatureKind::ALL.to_vec(),
    };
    let mut pipeline = creak_core::pipeline::PipelineConfig::default();
    if let Some(v) = args.threshold_db {
        pipeline.preprocess.threshold_db = v;
    }
    if let Some(v) = args.min_silence {
        pipeline.preprocess.min_silence_s = v;
    }
    if let Some(v) = args.target_rate {
        pipeline.preprocess.target_rate = v;
    }

    let entries = load_manifest(&args.manifest)?;
    let base_dir = args
        .manifest
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let cache_dir = resolve_cache_dir(args.cache_dir, base_dir.join("cache"));
    let cache = FeatureCache::new(&cache_dir)?;
    info!("cache: {}", cache_dir.display());

    let extractor =
        FeatureExtractor::<f64>::new(pipeline.features.clone(), pipeline.preprocess.target_rate)?;
    let hash = config_hash(&pipeline.preprocess, &pipeline.features);
    let pool = thread_pool(args.jobs)?;
    pool.install(|| -> anyhow::Result<()> {
        use rayon::prelude::*;
        for &kind in &kinds {
            let hits = entries
                .par_iter()
                .map(|entry| -> anyhow::Result<usize> {
                    let path = entry.resolved_path(&base_dir);
                    let hit = cache
                        .lookup::<f64>(&path, kind, &hash, &pipeline.features)?
                        .is_some();
                    let vector = extract_recording(&path, kind, &extractor, &pipeline, Some(&cache))?;
                    anyhow::ensure!(
                        vector.dim() == kind.vector_dim(&pipeline.features),
                        "dimension contract violated for {}",
                        path.display()
                    );
                    Ok(usize::from(hit))
                })
                .sum::<anyhow::Result<usize>>()?;
            println!(
                "{kind}: dim {} ({} recordings, {hits} cached)",
                kind.vector_dim(&pipeline.features),
                entries.len()
            );
        }
        Ok(())
    })
}

fn cmd_evaluate(args: EvaluateArgs) -> anyhow::Result<()> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = args.manifest {
        cfg.manifest = Some(v);
    }
    if let Some(v) = args.out {
        cfg.output_dir = v;
    }
    if let Some(list) = &args.features {
        cfg.features = parse_list(list, "features")?;
    }
    if let Some(list) = &args.classifiers {
        let kinds: Vec<ClassifierKind> = parse_list(list, "classifiers")?;
        cfg.classifiers = kinds.into_iter().map(config::ClassifierEntry::of_kind).collect();
    }
    if let Some(list) = &args.seeds {
        cfg.seeds = parse_seeds(list)?;
    }
    if let Some(v) = args.jobs {
        cfg.jobs = Some(v);
    }
    if let Some(v) = args.cache_dir {
        cfg.cache_dir = Some(v);
    }
    if let Some(v) = args.threshold_db {
        cfg.pipeline.preprocess.threshold_db = v;
    }
    if let Some(v) = args.min_silence {
        cfg.pipeline.preprocess.min_silence_s = v;
    }
    if let Some(v) = args.target_rate {
        cfg.pipeline.preprocess.target_rate = v;
    }
    if let Some(v) = args.balance_seed {
        cfg.balance_seed = v;
    }

    if cfg.features.is_empty() {
        return Err(usage("no feature kinds requested"));
    }
    if cfg.classifiers.is_empty() {
        return Err(usage("no classifiers requested"));
    }
    if cfg.seeds.is_empty() {
        return Err(usage("no seeds requested"));
    }
    if cfg.manifest.is_none() && cfg.synth.is_none() {
        return Err(usage("either --manifest or a [synth] config section is required"));
    }

    std::fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("cannot create {}", cfg.output_dir.display()))?;

    // Materialize the synthetic corpus when no manifest was given.
    if cfg.manifest.is_none() {
        let spec = cfg.synth.clone().expect("checked above");
        let corpus_dir = cfg.output_dir.join("corpus");
        info!("generating synthetic corpus in {}", corpus_dir.display());
        let corpus = generate_synthetic_corpus(&spec, &corpus_dir)?;
        cfg.manifest = Some(corpus.manifest_path);
    }
    let manifest_path = cfg.manifest.clone().expect("manifest resolved");

    // The effective merged config is part of the results.
    std::fs::write(cfg.output_dir.join("config.toml"), cfg.to_toml()?)?;

    let entries = load_manifest(&manifest_path)?;
    let outcome = binarize_all(&entries);
    if !outcome.excluded.is_empty() {
        info!(
            "excluded {} boundary-rated recording(s): {}",
            outcome.excluded.len(),
            outcome.excluded.join(", ")
        );
    }
    let samples = balance_classes(&outcome.samples, cfg.balance_seed)?;
    let n_low = samples.iter().filter(|s| s.label == CreakLabel::Low).count();
    info!(
        "{} balanced samples ({n_low} low / {} high) from {} manifest rows",
        samples.len(),
        samples.len() - n_low,
        entries.len()
    );

    let base_dir = manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let cache_dir = resolve_cache_dir(cfg.cache_dir.clone(), cfg.output_dir.join("cache"));
    let cache = FeatureCache::new(&cache_dir)?;
    let specs = cfg.classifier_specs()?;
    let kinds = cfg.features.clone();
    let runs_dir = cfg.output_dir.join("runs");
    std::fs::create_dir_all(&runs_dir)?;

    let classifier_kinds: Vec<ClassifierKind> = specs.iter().map(|s| s.kind()).collect();
    let mut report = ExperimentReport::new(&classifier_kinds, &kinds);

    let pool = thread_pool(cfg.jobs)?;
    pool.install(|| -> anyhow::Result<()> {
        for &kind in &kinds {
            let table = match build_feature_table::<f64>(
                &samples,
                &base_dir,
                kind,
                &cfg.pipeline,
                Some(&cache),
            ) {
                Ok(t) => t,
                Err(e) => {
                    warn!("feature {kind} failed: {e}");
                    for spec in &specs {
                        report.set_cell(
                            spec.kind(),
                            kind,
                            CellValue::Failed {
                                message: e.to_string(),
                            },
                        );
                    }
                    continue;
                }
            };
            info!("extracted {kind}: {} × {}", table.n(), table.x.ncols());

            for spec in &specs {
                match run_experiment(&table, spec, &cfg.seeds) {
                    Ok(runs) => {
                        for run in &runs {
                            write_run_log(&runs_dir, run)?;
                        }
                        let (mean, std) = aggregate(&runs);
                        info!("{} × {kind}: {mean:.1}±{std:.1}", spec.kind());
                        report.set_cell(
                            spec.kind(),
                            kind,
                            CellValue::Value {
                                mean_pct: mean,
                                std_pct: std,
                            },
                        );
                    }
                    Err(e) => {
                        warn!("{} × {kind} failed: {e}", spec.kind());
                        report.set_cell(
                            spec.kind(),
                            kind,
                            CellValue::Failed {
                                message: e.to_string(),
                            },
                        );
                    }
                }
            }
        }
        Ok(())
    })?;

    write_reports(&cfg.output_dir, &report)?;
    if report.any_failed() {
        anyhow::bail!("one or more grid cells failed; see the report");
    }
    Ok(())
}

fn write_run_log(runs_dir: &Path, run: &RunResult) -> anyhow::Result<()> {
    let name = format!("{}_{}_seed{:03}.json", run.classifier, run.feature, run.seed);
    let bytes = serde_json::to_vec_pretty(run)?;
    std::fs::write(runs_dir.join(name), bytes)?;
    Ok(())
}

fn write_reports(out_dir: &Path, report: &ExperimentReport) -> anyhow::Result<()> {
    let md = report.render_markdown()?;
    let csv = report.render_csv()?;
    std::fs::write(out_dir.join("report.md"), &md)?;
    std::fs::write(out_dir.join("report.csv"), &csv)?;
    if let Some((c, f, mean)) = report.best_cell() {
        info!("best cell: {} × {f} at {mean:.1}%", c.display_name());
    }
    info!("report written to {}", out_dir.display());
    Ok(())
}

fn cmd_report(args: ReportArgs) -> anyhow::Result<()> {
    let mut by_cell: BTreeMap<(ClassifierKind, FeatureKind), Vec<RunResult>> = BTreeMap::new();
    let mut n_files = 0;
    for entry in std::fs::read_dir(&args.runs)
        .with_context(|| format!("cannot read {}", args.runs.display()))?
    {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let bytes = std::fs::read(&path)?;
        let run: RunResult = serde_json::from_slice(&bytes)
            .with_context(|| format!("malformed run log {}", path.display()))?;
        by_cell.entry((run.classifier, run.feature)).or_default().push(run);
        n_files += 1;
    }
    if by_cell.is_empty() {
        return Err(usage(format!("no run logs found in {}", args.runs.display())));
    }
    info!("loaded {n_files} run logs covering {} cells", by_cell.len());

    let classifiers: Vec<ClassifierKind> = by_cell.keys().map(|(c, _)| *c).collect();
    let features: Vec<FeatureKind> = by_cell.keys().map(|(_, f)| *f).collect();
    let mut report = ExperimentReport::new(&classifiers, &features);
    for c in report.classifiers().to_vec() {
        for f in report.features().to_vec() {
            match by_cell.get_mut(&(c, f)) {
                Some(runs) => {
                    runs.sort_by_key(|r| r.seed);
                    let (mean, std) = aggregate(runs);
                    report.set_cell(
                        c,
                        f,
                        CellValue::Value {
                            mean_pct: mean,
                            std_pct: std,
                        },
                    );
                }
                None => report.set_cell(
                    c,
                    f,
                    CellValue::Failed {
                        message: "no runs found".into(),
                    },
                ),
            }
        }
    }

    std::fs::create_dir_all(&args.out)?;
    write_reports(&args.out, &report)
}
