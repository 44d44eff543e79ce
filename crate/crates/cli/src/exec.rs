//! Executing a resolved manifest and writing its output files.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use clusterrec::algorithms::{Algorithm, CompletedMatrix};
use clusterrec::algorithms::estimate::observation_rate;
use clusterrec::eval::{evaluate, phase_sweep, prepare, run_protocol, SweepGrid};
use clusterrec::ratings::{parse_ratings, quantize_binary, IdPolicy, Level, LoadOptions, RatingFormat, RatingMatrix};
use clusterrec::synth::{generate, thresholds};

use crate::manifest::{DataSource, IngestConfig, Manifest, ReportSpec, RunConfig, RunSpec, SweepSpec, SynthRun};
use crate::settings::load;

/// Shape and scoring settings needed to read a run's stored predictions.
#[derive(Debug, Serialize, Deserialize)]
struct RunMeta {
    users: usize,
    items: usize,
    levels: Level,
    liked: Level,
    algorithm: Algorithm,
}

#[derive(Debug, Serialize)]
struct DataSummary {
    users: usize,
    items: usize,
    levels: Level,
    ratings: usize,
    observation_rate: f64,
}

#[derive(Debug, Serialize)]
struct InstanceSummary {
    achieved_mu: f64,
    observed: usize,
    observation_rate: f64,
}

struct Output<'a> {
    dir: &'a Path,
}

impl Output<'_> {
    fn write(&self, name: &str, fill: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        let mut w = BufWriter::new(file);
        fill(&mut w)?;
        w.flush().with_context(|| format!("cannot write {}", path.display()))?;
        Ok(())
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }
}

pub fn execute(manifest: &Manifest, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
    if let RunConfig::Report(c) = &manifest.config {
        if dir.canonicalize()? == c.run_dir {
            bail!("--out must differ from the run directory being reported on");
        }
    }
    let out = Output { dir };
    out.write("manifest.json", |w| Ok(w.write_all(manifest.to_json()?.as_bytes())?))?;
    match &manifest.config {
        RunConfig::Ingest(c) => ingest(c, &out),
        RunConfig::Synth(c) => synth(c, &out),
        RunConfig::Run(c) => run(c, &out),
        RunConfig::Sweep(c) => sweep(c, &out),
        RunConfig::Report(c) => report(c, &out),
    }
}

fn summary(r: &RatingMatrix) -> DataSummary {
    DataSummary {
        users: r.num_users(),
        items: r.num_items(),
        levels: r.levels(),
        ratings: r.nnz(),
        observation_rate: observation_rate(r),
    }
}

fn ingest(c: &IngestConfig, out: &Output) -> Result<()> {
    let data = load(&c.source)?;
    let ratings = match c.quantize {
        Some(t) => quantize_binary(&data.ratings, t),
        None => data.ratings,
    };
    out.write("ratings.csv", |w| Ok(ratings.write_csv(w)?))?;
    for (name, ids) in [("user_ids.csv", &data.user_ids), ("item_ids.csv", &data.item_ids)] {
        out.write(name, |w| {
            writeln!(w, "index,id")?;
            for (i, id) in ids.iter().enumerate() {
                writeln!(w, "{i},{id}")?;
            }
            Ok(())
        })?;
    }
    out.json("summary.json", &summary(&ratings))
}

fn synth(c: &SynthRun, out: &Output) -> Result<()> {
    let inst = generate(&c.model)?;
    out.write("truth.csv", |w| Ok(inst.truth.to_ratings().write_csv(w)?))?;
    out.write("observed.csv", |w| Ok(inst.observed.write_csv(w)?))?;
    out.write("clusters.csv", |w| Ok(inst.clusters.write_csv(w)?))?;
    out.json("thresholds.json", &thresholds(&c.model, c.omega_constant))?;
    out.json(
        "instance.json",
        &InstanceSummary {
            achieved_mu: inst.achieved_mu,
            observed: inst.observed.nnz(),
            observation_rate: observation_rate(&inst.observed),
        },
    )
}

fn run(c: &RunSpec, out: &Output) -> Result<()> {
    let data = match &c.source {
        DataSource::File(f) => load(f)?.ratings,
        DataSource::Synthetic(cfg) => generate(cfg)?.observed,
    };
    let split = prepare(&data, &c.protocol)?;
    let (report, pred) = run_protocol(&data, &c.plan, &c.protocol)?;
    out.write("train.csv", |w| Ok(split.train.write_csv(w)?))?;
    out.write("test.csv", |w| Ok(split.test.write_csv(w)?))?;
    out.write("predictions.csv", |w| Ok(pred.write_csv(w)?))?;
    out.json(
        "meta.json",
        &RunMeta {
            users: pred.num_users(),
            items: pred.num_items(),
            levels: pred.levels(),
            liked: pred.liked_level(),
            algorithm: report.algorithm,
        },
    )?;
    out.write("report.csv", |w| Ok(report.write_csv(w)?))?;
    out.write("report.json", |w| Ok(writeln!(w, "{}", report.to_json()?)?))
}

fn sweep(c: &SweepSpec, out: &Output) -> Result<()> {
    let grid = SweepGrid::linear(c.param, c.from, c.to, c.steps)?;
    let table = phase_sweep(&c.base, &grid, c.trials, c.algorithm, c.omega_constant)?;
    out.write("sweep.csv", |w| Ok(table.write_csv(w)?))?;
    out.write("recovery.csv", |w| {
        writeln!(w, "{},recovery_fraction", c.param.name())?;
        for (v, f) in table.recovery_fractions() {
            writeln!(w, "{v},{f}")?;
        }
        Ok(())
    })
}

fn read_indexed(path: &Path, users: usize, items: usize, levels: Level) -> Result<RatingMatrix> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let opts = LoadOptions {
        levels: Some(levels),
        ids: IdPolicy::ZeroBased,
    };
    let ds = parse_ratings(BufReader::new(file), RatingFormat::CsvTriples, &opts, path)?;
    if ds.ratings.num_users() > users || ds.ratings.num_items() > items {
        bail!("{} has indices outside {users} x {items}", path.display());
    }
    Ok(RatingMatrix::from_triples(users, items, levels, ds.ratings.iter())?)
}

fn report(c: &ReportSpec, out: &Output) -> Result<()> {
    let dir = &c.run_dir;
    let source = Manifest::read(&dir.join("manifest.json"))?;
    let RunConfig::Run(spec) = source.config else {
        bail!("{} does not hold the output of a 'run'", dir.display());
    };
    let meta: RunMeta = serde_json::from_reader(BufReader::new(
        File::open(dir.join("meta.json")).with_context(|| format!("cannot open {}", dir.join("meta.json").display()))?,
    ))
    .context("meta.json is malformed")?;
    let train = read_indexed(&dir.join("train.csv"), meta.users, meta.items, meta.levels)?;
    let test = read_indexed(&dir.join("test.csv"), meta.users, meta.items, meta.levels)?;
    let path = dir.join("predictions.csv");
    let file = File::open(&path).with_context(|| format!("cannot open {}", path.display()))?;
    let pred = CompletedMatrix::read_csv(
        BufReader::new(file),
        meta.users,
        meta.items,
        meta.levels,
        meta.liked,
        meta.algorithm,
    )
    .with_context(|| format!("in {}", path.display()))?;
    let report = evaluate(meta.algorithm, &pred, &train, &test, &spec.protocol)?;
    out.write("report.csv", |w| Ok(report.write_csv(w)?))?;
    out.write("report.json", |w| Ok(writeln!(w, "{}", report.to_json()?)?))
}
