//! Merging config-file entries and flags into a resolved manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

use clusterrec::algorithms::AlgorithmKind;
use clusterrec::eval::{AlgorithmPlan, ProtocolOptions, SizeRule, SweepGrid, SweepParam};
use clusterrec::ratings::{load_ratings_with, IdPolicy, Level, LoadOptions, RatingFormat};
use clusterrec::synth::{parse_key_values, SynthConfig};

use crate::manifest::{
    DataSource, FileSource, IngestConfig, Manifest, ReportSpec, RunConfig, RunSpec, SweepSpec, SynthRun,
};

/// Raw `key -> value` settings; keys use the flag names with underscores.
#[derive(Debug, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
    used: BTreeSet<String>,
}

const MODEL_KEYS: [&str; 12] = [
    "users",
    "items",
    "clusters",
    "g",
    "p",
    "alpha",
    "beta",
    "eta",
    "rich_users",
    "rich_items",
    "mu_cap",
    "seed",
];

fn canonical_key(key: &str) -> String {
    match key {
        "U" => "users".into(),
        "M" => "items".into(),
        "K" => "clusters".into(),
        "G" => "g".into(),
        "t" | "k" => "size".into(),
        other => other.replace('-', "_"),
    }
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config file {}", path.display()))?;
        let pairs = parse_key_values(&text).with_context(|| format!("in config file {}", path.display()))?;
        let mut s = Settings::default();
        s.overlay(pairs);
        Ok(s)
    }

    pub fn overlay(&mut self, pairs: impl IntoIterator<Item = (String, String)>) {
        for (k, v) in pairs {
            self.values.insert(canonical_key(&k), v);
        }
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.used.insert(key.to_string());
        self.values.get(key).cloned()
    }

    fn parse<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| anyhow!("invalid value '{v}' for --{}: {e}", key.replace('_', "-"))),
        }
    }

    fn parse_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    fn require(&mut self, key: &str) -> Result<String> {
        self.take(key)
            .ok_or_else(|| anyhow!("missing required --{}", key.replace('_', "-")))
    }

    fn list(&mut self, key: &str) -> Result<Option<Vec<usize>>> {
        let Some(v) = self.take(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|x| {
                x.trim()
                    .parse()
                    .map_err(|_| anyhow!("invalid value '{v}' for --{}: expected comma-separated counts", key.replace('_', "-")))
            })
            .collect::<Result<Vec<usize>>>()
            .map(Some)
    }

    /// `None` for "none", otherwise a number.
    fn threshold(&mut self, key: &str) -> Result<Option<Option<f64>>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) if v.eq_ignore_ascii_case("none") => Ok(Some(None)),
            Some(v) => v
                .parse()
                .map(|x| Some(Some(x)))
                .map_err(|_| anyhow!("invalid value '{v}' for --{key}: expected a number or 'none'")),
        }
    }

    fn finish(self, command: &str) -> Result<()> {
        if let Some(k) = self.values.keys().find(|k| !self.used.contains(*k)) {
            bail!("setting '{k}' does not apply to '{command}'");
        }
        Ok(())
    }

    fn model(&mut self) -> Result<SynthConfig> {
        let mut cfg = SynthConfig::default();
        for key in MODEL_KEYS {
            if let Some(v) = self.take(key) {
                let target = if key == "g" { "levels" } else { key };
                cfg.set(target, &v)
                    .map_err(|_| anyhow!("invalid value '{v}' for --{}", flag_name(key)))?;
            }
        }
        Ok(cfg)
    }

    fn file_source(&mut self) -> Result<Option<FileSource>> {
        let Some(data) = self.take("data") else {
            for key in ["format", "ids", "levels"] {
                if self.values.contains_key(key) {
                    bail!("--{key} only applies together with --data");
                }
            }
            return Ok(None);
        };
        let path = PathBuf::from(&data);
        let path = path
            .canonicalize()
            .with_context(|| format!("data file '{data}' not found"))?;
        let format = match self.take("format") {
            Some(f) => f.parse::<RatingFormat>()?,
            None => guess_format(&path),
        };
        let ids = match self.take("ids").as_deref() {
            None | Some("compact") => IdPolicy::Compact,
            Some("one-based") => IdPolicy::OneBased,
            Some("zero-based") => IdPolicy::ZeroBased,
            Some(other) => bail!("invalid value '{other}' for --ids: expected compact, one-based or zero-based"),
        };
        let levels = self.parse::<Level>("levels")?;
        Ok(Some(FileSource {
            path,
            format,
            ids,
            levels,
        }))
    }
}

fn flag_name(key: &str) -> String {
    match key {
        "users" => "U".into(),
        "items" => "M".into(),
        "clusters" => "K".into(),
        "g" => "G".into(),
        other => other.replace('_', "-"),
    }
}

fn guess_format(path: &Path) -> RatingFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some("dat") => RatingFormat::MovielensDat,
        _ => RatingFormat::CsvTriples,
    }
}

fn check_model(cfg: &SynthConfig) -> Result<()> {
    cfg.validate().map_err(|e| anyhow!("{e}"))
}

pub fn load(source: &FileSource) -> Result<clusterrec::ratings::Dataset> {
    let opts = LoadOptions {
        levels: source.levels,
        ids: source.ids,
    };
    load_ratings_with(&source.path, source.format, &opts).with_context(|| format!("cannot load {}", source.path.display()))
}

/// Turn the settings of subcommand `name` into a manifest.
pub fn resolve(name: &str, mut s: Settings) -> Result<Manifest> {
    let manifest = match name {
        "ingest" => {
            let source = s.file_source()?.ok_or_else(|| anyhow!("missing required --data"))?;
            let quantize = s.threshold("quantize")?.flatten();
            Manifest::new(None, RunConfig::Ingest(IngestConfig { source, quantize }))
        }
        "synth" => {
            let model = s.model()?;
            check_model(&model)?;
            let omega_constant = s.parse_or("omega", 1.0)?;
            Manifest::new(Some(model.seed), RunConfig::Synth(SynthRun { model, omega_constant }))
        }
        "run" => resolve_run(&mut s)?,
        "sweep" => {
            let base = s.model()?;
            let param: SweepParam = s.require("param")?.parse()?;
            let from: f64 = s.parse("from")?.ok_or_else(|| anyhow!("missing required --from"))?;
            let to: f64 = s.parse("to")?.ok_or_else(|| anyhow!("missing required --to"))?;
            let steps: usize = s.parse_or("steps", 10)?;
            let trials: usize = s.parse_or("trials", 20)?;
            if trials == 0 {
                bail!("--trials must be at least 1");
            }
            let algorithm: AlgorithmKind = s.parse_or("algo", AlgorithmKind::Ucr)?;
            let omega_constant = s.parse_or("omega", 1.0)?;
            let grid = SweepGrid::linear(param, from, to, steps)?;
            for &v in [grid.values.first(), grid.values.last()].into_iter().flatten() {
                let mut cfg = base.clone();
                match param {
                    SweepParam::Alpha => cfg.alpha = v,
                    SweepParam::Beta => cfg.beta = v,
                    SweepParam::P => cfg.p = v,
                }
                check_model(&cfg).with_context(|| format!("at {} = {v}", param.name()))?;
            }
            Manifest::new(
                Some(base.seed),
                RunConfig::Sweep(SweepSpec {
                    base,
                    param,
                    from,
                    to,
                    steps,
                    trials,
                    algorithm,
                    omega_constant,
                }),
            )
        }
        "report" => {
            let dir = s.require("run")?;
            let run_dir = PathBuf::from(&dir)
                .canonicalize()
                .with_context(|| format!("run directory '{dir}' not found"))?;
            Manifest::new(None, RunConfig::Report(ReportSpec { run_dir }))
        }
        other => bail!("unknown subcommand '{other}'"),
    };
    s.finish(name)?;
    Ok(manifest)
}

fn resolve_run(s: &mut Settings) -> Result<Manifest> {
    let file = s.file_source()?;
    let model = s.model()?;
    let seed = model.seed;
    let algo: AlgorithmKind = s.require("algo")?.parse()?;
    let users: SizeRule = s.parse_or("size", SizeRule::Estimate)?;
    let items: SizeRule = s.parse_or("item_size", SizeRule::Estimate)?;
    let defaults = ProtocolOptions::default();
    let hide_fraction = s.parse_or("hide", defaults.hide_fraction)?;
    let noise = s.parse_or("noise", defaults.noise)?;
    let quantize_flag = s.threshold("quantize")?;
    let liked = s.parse::<Level>("liked")?;
    let top_x = s.list("top_x")?.unwrap_or(defaults.top_x);
    let sparse_thresholds = s.list("thresholds")?.unwrap_or(defaults.sparse_thresholds);

    let (source, levels) = match file {
        Some(f) => {
            if MODEL_KEYS.iter().any(|k| *k != "seed" && s.values.contains_key(*k)) {
                bail!("synthetic model flags cannot be combined with --data");
            }
            let g = load(&f)?.ratings.levels();
            (DataSource::File(f), g)
        }
        None => {
            check_model(&model)?;
            let g = model.levels;
            (DataSource::Synthetic(model), g)
        }
    };
    let quantize = match quantize_flag {
        Some(q) => q,
        None if levels > 2 && matches!(source, DataSource::File(_)) => defaults.quantize,
        None => None,
    };
    let effective_levels = if quantize.is_some() { 2 } else { levels };
    if effective_levels != 2 && liked.is_none() && !top_x.is_empty() {
        bail!("ratings have {effective_levels} levels; pass --liked <level> or --quantize <threshold> for the top-x metric");
    }
    Ok(Manifest::new(
        Some(seed),
        RunConfig::Run(RunSpec {
            source,
            plan: AlgorithmPlan { kind: algo, users, items },
            protocol: ProtocolOptions {
                hide_fraction,
                noise,
                seed,
                quantize,
                top_x,
                sparse_thresholds,
                liked,
            },
        }),
    ))
}
