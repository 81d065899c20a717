use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use dyadrisk::analysis::top_correlations;
use dyadrisk::corpus::{validate, write_rttm, DiskCorpus, SessionSource};
use dyadrisk::diarization::{default_p_grid, diarization_error_rate, tune_p};
use dyadrisk::evaluation::{
    partition_table, render_report, run_experiment, subset_table, EvalReport, PartitionScheme, Scenario,
};
use dyadrisk::features::{Family, FeatureTable};
use dyadrisk::pipeline::{dev_sessions, extract_table, role_segments, PipelineConfig};
use dyadrisk::synth::{write_corpus, Effects, SynthCorpus, SynthSpec};

#[derive(Parser)]
#[command(name = "dyadrisk", version, about = "Risk classification over couples' conversations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a corpus for missing files and inconsistent artifacts.
    Validate(CorpusArgs),
    /// Cluster segments into speakers and assign roles by pitch.
    Diarize(CorpusArgs),
    /// Pick the pruning parameter with the lowest DER on labelled sessions.
    TuneP(TuneArgs),
    /// Extract per-speaker feature vectors to `features.csv`.
    Extract(CorpusArgs),
    /// Leave-one-couple-out training and evaluation.
    TrainEval(TrainArgs),
    /// Spearman correlations of every feature with degree of risk.
    Analyze(AnalyzeArgs),
    /// Generate a synthetic corpus.
    Synth(SynthArgs),
    /// Render a `report.json` as text tables.
    Report(ReportArgs),
}

#[derive(Args, Clone)]
struct CorpusArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus directory holding `manifest.jsonl` and `lexicon.txt`.
    #[arg(long, default_value = "corpus")]
    corpus: PathBuf,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Pruning parameter for sessions that need diarization.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    merge_gap: Option<f64>,
    /// Feature families, e.g. `A,E,L,T`.
    #[arg(long)]
    families: Option<String>,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Comma-separated grid of p values.
    #[arg(long)]
    grid: Option<String>,
    /// Use at most this many labelled sessions.
    #[arg(long)]
    dev_sessions: Option<usize>,
    #[arg(long)]
    collar: Option<f64>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Read features from this CSV instead of extracting them.
    #[arg(long)]
    features: Option<PathBuf>,
    /// `degree`, `no-risk-vs-risk`, `non-severe-vs-severe` or `all`.
    #[arg(long)]
    scenario: Option<String>,
    /// `none`, `gender`, `content`, `demand` or `all`.
    #[arg(long)]
    partition: Option<String>,
    /// Evaluate every non-empty subset of the feature families.
    #[arg(long)]
    subsets: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    top: usize,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value = "corpus")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    couples: Option<usize>,
    /// Class priors of none, ideation and attempt, e.g. `0.5,0.3,0.2`.
    #[arg(long)]
    priors: Option<String>,
    #[arg(long)]
    session_s: Option<f64>,
    #[arg(long)]
    frame_period: Option<f64>,
    #[arg(long)]
    channels: Option<usize>,
    /// Effect sizes for A, E, L and T, e.g. `0.4,1,0.2,0.6`.
    #[arg(long, conflicts_with = "null")]
    effects: Option<String>,
    /// Set every effect size to zero.
    #[arg(long)]
    null: bool,
    /// Tag segments by anonymous speaker instead of by role.
    #[arg(long)]
    anonymous_tags: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// A `report.json` written by `train-eval`.
    #[arg(long, default_value = "out/report.json")]
    input: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Validate(a) => cmd_validate(&a),
        Command::Diarize(a) => cmd_diarize(&a),
        Command::TuneP(a) => cmd_tune_p(&a),
        Command::Extract(a) => cmd_extract(&a),
        Command::TrainEval(a) => cmd_train_eval(&a),
        Command::Analyze(a) => cmd_analyze(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::Report(a) => cmd_report(&a),
    }
}

fn config(a: &CorpusArgs) -> Result<PipelineConfig> {
    let mut cfg = match &a.config {
        Some(path) => PipelineConfig::load(path).with_context(|| format!("reading config {}", path.display()))?,
        None => {
            let mut c =
                PipelineConfig::new(a.corpus.join("manifest.jsonl"), a.corpus.join("lexicon.txt"), a.seed.unwrap_or(0));
            c.output_dir = PathBuf::from("out");
            c
        }
    };
    if let Some(m) = &a.manifest {
        cfg.manifest = m.clone();
    }
    if let Some(l) = &a.lexicon {
        cfg.lexicon = l.clone();
    }
    if let Some(o) = &a.out {
        cfg.output_dir = o.clone();
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(p) = a.p {
        cfg.diarization.p = Some(p);
    }
    if let Some(g) = a.merge_gap {
        cfg.diarization.merge_gap_s = g;
    }
    if let Some(f) = &a.families {
        cfg.families = f.clone();
    }
    Ok(cfg)
}

fn open(cfg: &PipelineConfig) -> Result<DiskCorpus> {
    Ok(DiskCorpus::open(&cfg.manifest, &cfg.lexicon)?)
}

fn out_dir(cfg: &PipelineConfig) -> Result<&Path> {
    std::fs::create_dir_all(&cfg.output_dir).with_context(|| format!("creating {}", cfg.output_dir.display()))?;
    Ok(&cfg.output_dir)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_validate(a: &CorpusArgs) -> Result<ExitCode> {
    let cfg = config(a)?;
    let corpus = open(&cfg)?;
    let report = validate(&corpus);
    for e in &report.errors {
        eprintln!("error: {e}");
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    println!("{} sessions, {} error(s), {} warning(s)", report.sessions, report.errors.len(), report.warnings.len());
    Ok(if report.is_ok() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_diarize(a: &CorpusArgs) -> Result<ExitCode> {
    let cfg = config(a)?;
    let corpus = open(&cfg)?;
    let opts = cfg.extract_options()?;
    let collar = cfg.collar()?;
    let mut rttm = String::new();
    let mut roles = String::new();
    let mut ders = Vec::new();
    for r in corpus.records() {
        let data = corpus.load(r)?;
        if data.embeddings.is_none() {
            log::warn!("session {}: no embeddings, skipped", r.session_id);
            continue;
        }
        // force clustering even when the reference is role-tagged
        let anonymous = data.segments.retagged(&vec!["spk"; data.segments.len()]);
        let mut d = data.clone();
        d.segments = anonymous;
        let (tagged, assignment) = role_segments(r, &d, &opts)?;
        rttm.push_str(&write_rttm(&r.session_id, &tagged));
        if let Some(asg) = assignment {
            roles.push_str(&serde_json::to_string(&serde_json::json!({
                "session_id": r.session_id,
                "median_f0": asg.median_f0,
                "roles": asg.roles,
                "tied": asg.tied,
            }))?);
            roles.push('\n');
        }
        if data.segments.tags().iter().all(|t| dyadrisk::corpus::Role::from_tag(t).is_some()) {
            ders.push(diarization_error_rate(&tagged, &data.segments, collar)?.der());
        }
    }
    let out = out_dir(&cfg)?;
    write(&out.join("diarization.rttm"), &rttm)?;
    write(&out.join("roles.jsonl"), &roles)?;
    if !ders.is_empty() {
        println!(
            "mean DER against role-tagged reference: {:.4} over {} sessions",
            ders.iter().sum::<f64>() / ders.len() as f64,
            ders.len()
        );
    }
    println!("wrote {}", out.join("diarization.rttm").display());
    Ok(ExitCode::SUCCESS)
}

fn parse_floats(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().with_context(|| format!("`{s}` is not a number")))
        .collect()
}

fn cmd_tune_p(a: &TuneArgs) -> Result<ExitCode> {
    let mut cfg = config(&a.corpus)?;
    if let Some(c) = a.collar {
        cfg.diarization.collar_s = c;
    }
    let grid = match (&a.grid, &cfg.diarization.p_grid) {
        (Some(g), _) => parse_floats(g)?,
        (None, Some(g)) => g.clone(),
        (None, None) => default_p_grid(),
    };
    let corpus = open(&cfg)?;
    let dev = dev_sessions(&corpus, a.dev_sessions)?;
    let report = tune_p(&dev, &grid, cfg.collar()?, cfg.seed)?;
    let out = out_dir(&cfg)?;
    write(&out.join("tune_p.json"), &serde_json::to_string_pretty(&report)?)?;
    for (p, der) in &report.curve {
        println!("p = {p:.2}  DER = {der:.4}");
    }
    println!("tuned p = {} ({} dev sessions)", report.p, dev.len());
    Ok(ExitCode::SUCCESS)
}

fn features(cfg: &PipelineConfig, from: Option<&Path>) -> Result<FeatureTable> {
    match from {
        Some(path) => Ok(FeatureTable::read_csv(path)?),
        None => {
            let corpus = open(cfg)?;
            Ok(extract_table(&corpus, &Family::ALL, &cfg.extract_options()?)?)
        }
    }
}

fn cmd_extract(a: &CorpusArgs) -> Result<ExitCode> {
    let cfg = config(a)?;
    let families = cfg.families()?;
    let corpus = open(&cfg)?;
    let table = extract_table(&corpus, &families, &cfg.extract_options()?)?;
    let out = out_dir(&cfg)?;
    let path = out.join("features.csv");
    table.write_csv(&path)?;
    let sizes: Vec<String> = table.family_sizes().iter().map(|(f, n)| format!("{f}={n}")).collect();
    println!(
        "{} speaker-sessions, {} features ({}) -> {}",
        table.len(),
        table.names.len(),
        sizes.join(", "),
        path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn choices<T: Copy>(text: &str, all: &[T], parse: impl Fn(&str) -> dyadrisk::Result<T>) -> Result<Vec<T>> {
    if text == "all" {
        Ok(all.to_vec())
    } else {
        Ok(vec![parse(text)?])
    }
}

fn cmd_train_eval(a: &TrainArgs) -> Result<ExitCode> {
    let mut cfg = config(&a.corpus)?;
    if let Some(s) = &a.scenario {
        cfg.scenario = s.clone();
    }
    if let Some(p) = &a.partition {
        cfg.partition = p.clone();
    }
    let scenarios = choices(&cfg.scenario, &Scenario::ALL, |s| s.parse())?;
    let partitions = choices(&cfg.partition, &PartitionScheme::ALL, |s| s.parse())?;
    let subsets = if a.subsets { Family::subsets() } else { vec![cfg.families()?] };
    let table = features(&cfg, a.features.as_deref())?;
    let mut base = {
        let mut c = cfg.clone();
        c.scenario = scenarios[0].as_str().into();
        c.partition = partitions[0].as_str().into();
        c.experiment()?
    };
    let mut reports: Vec<EvalReport> = Vec::new();
    for &scenario in &scenarios {
        for &partition in &partitions {
            for families in &subsets {
                base.scenario = scenario;
                base.partition = partition;
                base.families = families.clone();
                let r = run_experiment(&table, &base).with_context(|| {
                    format!("{} / {} / {}", scenario.title(), partition.title(), Family::label(families))
                })?;
                log::info!("{} / {} / {}: {:.4}", scenario.title(), partition.title(), r.families, r.macro_recall);
                reports.push(r);
            }
        }
    }
    let out = out_dir(&cfg)?;
    write(&out.join("report.json"), &serde_json::to_string_pretty(&serde_json::json!({ "reports": reports }))?)?;
    let text = render_all(&reports);
    write(&out.join("report.txt"), &text)?;
    print!("{text}");
    Ok(ExitCode::SUCCESS)
}

fn render_all(reports: &[EvalReport]) -> String {
    let mut text = String::new();
    for r in reports {
        text.push_str(&render_report(r));
        text.push('\n');
    }
    if reports.len() > 1 {
        text.push_str("Best macro recall (%) per partition scheme\n");
        text.push_str(&partition_table(reports));
        text.push_str("\nBest macro recall (%) per feature set\n");
        text.push_str(&subset_table(reports));
    }
    text
}

fn cmd_analyze(a: &AnalyzeArgs) -> Result<ExitCode> {
    let cfg = config(&a.corpus)?;
    let table = features(&cfg, a.features.as_deref())?;
    let report = top_correlations(&table, a.top)?;
    let out = out_dir(&cfg)?;
    write(&out.join("correlations.csv"), &report.to_csv())?;
    let text = report.to_text();
    write(&out.join("correlations.txt"), &text)?;
    print!("{text}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_synth(a: &SynthArgs) -> Result<ExitCode> {
    let mut spec = if a.null { SynthSpec::null() } else { SynthSpec::default() };
    if let Some(n) = a.couples {
        spec.couples = n;
    }
    if let Some(p) = &a.priors {
        let v = parse_floats(p)?;
        let [none, ideation, attempt] = v[..] else { bail!("--priors needs three values, got {}", v.len()) };
        spec.priors = [none, ideation, attempt];
    }
    if let Some(s) = a.session_s {
        spec.session_s = s;
    }
    if let Some(f) = a.frame_period {
        spec.frame_period_s = f;
    }
    if let Some(d) = a.channels {
        spec.channels = d;
    }
    if let Some(e) = &a.effects {
        let v = parse_floats(e)?;
        let [acoustic, behavior, lexical, turn_taking] = v[..] else {
            bail!("--effects needs four values, got {}", v.len())
        };
        spec.effects = Effects { acoustic, behavior, lexical, turn_taking };
    }
    spec.anonymous_tags = a.anonymous_tags;
    let corpus = SynthCorpus::new(spec, a.seed)?;
    let manifest = write_corpus(&corpus, &a.out)?;
    println!("{} sessions -> {}", corpus.records().len(), manifest.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(a: &ReportArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    #[derive(serde::Deserialize)]
    struct Doc {
        reports: Vec<EvalReport>,
    }
    let doc: Doc = serde_json::from_str(&text).with_context(|| format!("parsing {}", a.input.display()))?;
    if doc.reports.is_empty() {
        bail!("{} holds no reports", a.input.display());
    }
    print!("{}", render_all(&doc.reports));
    Ok(ExitCode::SUCCESS)
}
