//! `clusterrec` command-line entry point.

mod exec;
mod manifest;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use manifest::Manifest;
use settings::Settings;

#[derive(Parser, Debug)]
#[command(name = "clusterrec", version, about = "Similarity-based clustering and co-clustering matrix completion")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = "CLUSTERREC_OUT", default_value = "clusterrec-out")]
    out: PathBuf,

    /// Worker threads for the parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Key-value file with defaults; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Replay a manifest written by an earlier run instead of a subcommand.
    #[arg(long)]
    manifest: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load a rating file and write it as indexed triples.
    Ingest(IngestArgs),
    /// Generate a synthetic instance and its threshold report.
    Synth(SynthArgs),
    /// Hide-and-predict evaluation of one algorithm.
    Run(RunArgs),
    /// Exact-recovery rate of an algorithm over a parameter grid.
    Sweep(SweepArgs),
    /// Recompute the metrics of an earlier `run` from its stored predictions.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct DataArgs {
    /// Rating file.
    #[arg(long)]
    data: Option<String>,
    /// Input layout: movielens-dat or csv-triples.
    #[arg(long)]
    format: Option<String>,
    /// Id mapping: compact, one-based or zero-based.
    #[arg(long)]
    ids: Option<String>,
    /// Number of rating levels (inferred when absent).
    #[arg(long)]
    levels: Option<String>,
}

#[derive(Args, Debug)]
struct IngestArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Binarize at this threshold ("none" keeps the levels).
    #[arg(long)]
    quantize: Option<String>,
}

#[derive(Args, Debug)]
struct ModelArgs {
    #[arg(long = "U", alias = "users")]
    users: Option<String>,
    #[arg(long = "M", alias = "items")]
    items: Option<String>,
    #[arg(long = "K", alias = "clusters")]
    clusters: Option<String>,
    /// Rating levels of the synthetic model.
    #[arg(long = "G")]
    g: Option<String>,
    /// Probability that an entry shows its true level.
    #[arg(long)]
    p: Option<String>,
    /// Observation probability of a sparse user/item pair.
    #[arg(long)]
    alpha: Option<String>,
    /// Observation probability when either side is rich.
    #[arg(long)]
    beta: Option<String>,
    /// Upper bound on rich entities per cluster.
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    rich_users: Option<String>,
    #[arg(long)]
    rich_items: Option<String>,
    /// Largest accepted cross-cluster agreement fraction.
    #[arg(long)]
    mu_cap: Option<String>,
    #[arg(long)]
    seed: Option<String>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Constant standing in for asymptotic bounds in the threshold report.
    #[arg(long)]
    omega: Option<String>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Without --data, a synthetic instance is generated from these.
    #[command(flatten)]
    model: ModelArgs,
    /// ucr, icr, cor, hucr, hicr, hcor or paf.
    #[arg(long)]
    algo: Option<String>,
    /// User-side size (cluster size, T or k): a number, auto or k:<clusters>.
    #[arg(long, visible_aliases = ["t", "k"])]
    size: Option<String>,
    /// Item-side size: a number, auto or k:<clusters>.
    #[arg(long)]
    item_size: Option<String>,
    /// Fraction of ratings hidden for testing.
    #[arg(long)]
    hide: Option<String>,
    /// Flip probability for training entries.
    #[arg(long)]
    noise: Option<String>,
    /// Binarize at this threshold ("none" keeps the levels).
    #[arg(long)]
    quantize: Option<String>,
    /// Level ranked as "liked" in the top-x metric.
    #[arg(long)]
    liked: Option<String>,
    /// Comma-separated x values of the top-x metric.
    #[arg(long)]
    top_x: Option<String>,
    /// Comma-separated training-count thresholds for the sparse-user metric.
    #[arg(long)]
    thresholds: Option<String>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// alpha, beta or p.
    #[arg(long)]
    param: Option<String>,
    #[arg(long)]
    from: Option<String>,
    #[arg(long)]
    to: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    omega: Option<String>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Output directory of an earlier `run`.
    #[arg(long)]
    run: Option<String>,
}

fn init_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("could not start the worker pool")?;
    }
    Ok(())
}

fn explicit_flags(m: &ArgMatches) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for id in m.ids() {
        let id = id.as_str();
        if matches!(id, "out" | "threads" | "config" | "manifest") {
            continue;
        }
        if m.value_source(id) != Some(clap::parser::ValueSource::CommandLine) {
            continue;
        }
        if let Ok(Some(v)) = m.try_get_one::<String>(id) {
            out.push((id.to_string(), v.clone()));
        }
    }
    out
}

fn real_main() -> Result<()> {
    let matches = match Cli::command().try_get_matches() {
        Ok(m) => m,
        Err(e) => match e.kind() {
            clap::error::ErrorKind::DisplayHelp
            | clap::error::ErrorKind::DisplayVersion
            | clap::error::ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => e.exit(),
            _ => {
                let text = e.to_string();
                let first = text.lines().next().unwrap_or("invalid arguments");
                bail!("{} (see --help)", first.trim_start_matches("error: "));
            }
        },
    };
    let cli = Cli::from_arg_matches(&matches)?;
    init_threads(cli.threads)?;

    let manifest = match (&cli.manifest, matches.subcommand()) {
        (Some(_), Some(_)) => bail!("--manifest replays a complete run; drop the subcommand"),
        (None, None) => bail!("missing subcommand (ingest, synth, run, sweep or report); see --help"),
        (Some(path), None) => Manifest::read(path)?,
        (None, Some((name, sub))) => {
            let mut settings = match &cli.config {
                Some(path) => Settings::from_file(path)?,
                None => Settings::default(),
            };
            settings.overlay(explicit_flags(sub));
            settings::resolve(name, settings)?
        }
    };
    exec::execute(&manifest, &cli.out)
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
