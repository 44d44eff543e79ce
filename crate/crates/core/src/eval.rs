//! Hide-and-predict evaluation: error metrics, the train/test protocol with
//! optional flip noise, and synthetic phase sweeps.
//!
//! A test entry without a prediction always counts as an error.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::estimate::estimate_cluster_size_on;
use crate::algorithms::{Algorithm, AlgorithmKind, CompletedMatrix, FitOptions};
use crate::error::{domain, Error, Result};
use crate::ratings::{flip_noise, quantize_binary, split_mask, Axis, Level, RatingMatrix, LIKED};
use crate::seed::{derive_indexed, derive_seed};
use crate::synth::{generate, thresholds, PreferenceMatrix, SynthConfig};

/// Outcome counts over a set of test entries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorCounts {
    pub total: usize,
    pub correct: usize,
    pub wrong: usize,
    pub unpredicted: usize,
}

impl ErrorCounts {
    pub fn predicted(&self) -> usize {
        self.correct + self.wrong
    }

    /// `(wrong + unpredicted) / total`, `None` for an empty set.
    pub fn error_rate(&self) -> Option<f64> {
        (self.total > 0).then(|| (self.wrong + self.unpredicted) as f64 / self.total as f64)
    }

    fn record(&mut self, predicted: Option<Level>, truth: Level) {
        self.total += 1;
        match predicted {
            None => self.unpredicted += 1,
            Some(g) if g == truth => self.correct += 1,
            Some(_) => self.wrong += 1,
        }
    }
}

fn check_shape(pred: &CompletedMatrix, test: &RatingMatrix) -> Result<()> {
    if pred.num_users() != test.num_users() || pred.num_items() != test.num_items() {
        return Err(Error::Dimension {
            expected: test.num_users() * test.num_items(),
            actual: pred.num_users() * pred.num_items(),
        });
    }
    Ok(())
}

/// Counts over every entry of `test`.
pub fn error_counts(pred: &CompletedMatrix, test: &RatingMatrix) -> Result<ErrorCounts> {
    check_shape(pred, test)?;
    let mut counts = ErrorCounts::default();
    for (u, m, truth) in test.iter() {
        counts.record(pred.level(u, m), truth);
    }
    Ok(counts)
}

/// Fraction of test entries predicted wrongly or not at all.
pub fn overall_error(pred: &CompletedMatrix, test: &RatingMatrix) -> Result<f64> {
    match error_counts(pred, test)?.error_rate() {
        Some(e) => Ok(e),
        None => domain("test set is empty"),
    }
}

/// Errors among the top-`x` recommendations per user.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopXResult {
    pub x: usize,
    pub selected: usize,
    pub errors: usize,
    pub error: f64,
}

fn resolve_liked(pred: &CompletedMatrix, test: &RatingMatrix, liked: Option<Level>) -> Result<Level> {
    let liked = match liked {
        Some(l) => l,
        None if test.levels() == 2 => LIKED,
        None => {
            return domain(format!(
                "ranking needs a designated liked level when G = {} is not binary",
                test.levels()
            ))
        }
    };
    if liked != pred.liked_level() {
        return domain(format!(
            "predictions carry margins for level {}, not the requested liked level {liked}",
            pred.liked_level()
        ));
    }
    Ok(liked)
}

/// For each user, rank the user's test items by the vote margin of the
/// liked level (unpredicted items last, smaller item index first on ties),
/// take the top `x`, and count selections whose hidden rating is not the
/// liked level or which have no prediction. Users with fewer than `x` test
/// items contribute all of them.
pub fn top_x_error(pred: &CompletedMatrix, test: &RatingMatrix, x: usize, liked: Option<Level>) -> Result<TopXResult> {
    check_shape(pred, test)?;
    if x == 0 {
        return domain("x must be at least 1");
    }
    let liked = resolve_liked(pred, test, liked)?;
    let mut selected = 0;
    let mut errors = 0;
    for u in 0..test.num_users() {
        let (items, truths) = test.row(u);
        let mut ranked: Vec<(usize, Level, Option<f32>)> = items
            .iter()
            .zip(truths)
            .map(|(&m, &t)| {
                let score = pred.get(u, m as usize).filter(|p| p.level.is_some()).map(|p| p.liked_margin);
                (m as usize, t, score)
            })
            .collect();
        ranked.sort_by(|a, b| match (a.2, b.2) {
            (Some(x), Some(y)) => y.total_cmp(&x).then(a.0.cmp(&b.0)),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => a.0.cmp(&b.0),
        });
        for &(_, truth, score) in ranked.iter().take(x) {
            selected += 1;
            if score.is_none() || truth != liked {
                errors += 1;
            }
        }
    }
    if selected == 0 {
        return domain("test set is empty");
    }
    Ok(TopXResult {
        x,
        selected,
        errors,
        error: errors as f64 / selected as f64,
    })
}

/// Overall error restricted to users whose training rating count is below
/// each threshold; thresholds with no such user map to `None`.
pub fn sparse_user_error(
    pred: &CompletedMatrix,
    train: &RatingMatrix,
    test: &RatingMatrix,
    thresholds: &[usize],
) -> Result<BTreeMap<usize, Option<f64>>> {
    check_shape(pred, test)?;
    let per_user: Vec<(usize, ErrorCounts)> = (0..test.num_users())
        .map(|u| {
            let mut c = ErrorCounts::default();
            let (items, truths) = test.row(u);
            for (&m, &t) in items.iter().zip(truths) {
                c.record(pred.level(u, m as usize), t);
            }
            let seen = if u < train.num_users() { train.row_len(u) } else { 0 };
            (seen, c)
        })
        .collect();
    Ok(thresholds
        .iter()
        .map(|&th| {
            let mut agg = ErrorCounts::default();
            for (seen, c) in &per_user {
                if *seen < th {
                    agg.total += c.total;
                    agg.correct += c.correct;
                    agg.wrong += c.wrong;
                    agg.unpredicted += c.unpredicted;
                }
            }
            (th, agg.error_rate())
        })
        .collect())
}

/// How a neighbor-set size is chosen from the training data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule", content = "value")]
pub enum SizeRule {
    Fixed(usize),
    /// `entities / K` for a known cluster count.
    ClusterCount(usize),
    /// Max-gap estimate anchored at the most active entity.
    Estimate,
}

impl SizeRule {
    pub fn resolve(self, r: &RatingMatrix, axis: Axis) -> Result<usize> {
        match self {
            SizeRule::Fixed(n) => Ok(n),
            SizeRule::ClusterCount(k) => Ok(estimate_cluster_size_on(r, axis, Some(k))?.size),
            SizeRule::Estimate => Ok(estimate_cluster_size_on(r, axis, None)?.size),
        }
    }
}

impl std::str::FromStr for SizeRule {
    type Err = Error;

    /// `auto`, `k:<clusters>` or a plain size.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("auto") {
            return Ok(SizeRule::Estimate);
        }
        if let Some(k) = s.strip_prefix("k:") {
            return k
                .parse()
                .map(SizeRule::ClusterCount)
                .map_err(|_| Error::Config(format!("bad cluster count in '{s}'")));
        }
        s.parse()
            .map(SizeRule::Fixed)
            .map_err(|_| Error::Config(format!("size '{s}' is not a number, 'auto' or 'k:<clusters>'")))
    }
}

/// An algorithm with size rules still to be resolved against training data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgorithmPlan {
    pub kind: AlgorithmKind,
    pub users: SizeRule,
    pub items: SizeRule,
}

impl AlgorithmPlan {
    pub fn resolve(&self, train: &RatingMatrix) -> Result<Algorithm> {
        let users = match self.kind {
            AlgorithmKind::Icr | AlgorithmKind::Hicr => 0,
            _ => self.users.resolve(train, Axis::Users)?,
        };
        let items = match self.kind {
            AlgorithmKind::Icr | AlgorithmKind::Hicr | AlgorithmKind::Cor | AlgorithmKind::Hcor => {
                self.items.resolve(train, Axis::Items)?
            }
            _ => 0,
        };
        Ok(self.kind.with_sizes(users, items))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolOptions {
    pub hide_fraction: f64,
    /// Flip probability applied to training entries only.
    pub noise: f64,
    pub seed: u64,
    /// Ratings above the threshold become "liked"; `None` keeps levels.
    pub quantize: Option<f64>,
    pub top_x: Vec<usize>,
    pub sparse_thresholds: Vec<usize>,
    pub liked: Option<Level>,
}

impl Default for ProtocolOptions {
    fn default() -> Self {
        ProtocolOptions {
            hide_fraction: 0.7,
            noise: 0.0,
            seed: 0,
            quantize: Some(3.5),
            top_x: (1..=6).collect(),
            sparse_thresholds: (3..=20).map(|i| i * 10).collect(),
            liked: None,
        }
    }
}

/// Settings that produced a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolInfo {
    pub hide_fraction: f64,
    pub noise: f64,
    pub seed: u64,
    pub quantize: Option<f64>,
    pub train_size: usize,
    pub test_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub algorithm: Algorithm,
    pub overall_error: f64,
    pub counts: ErrorCounts,
    pub top_x_error: BTreeMap<usize, f64>,
    pub sparse_user_error: BTreeMap<usize, Option<f64>>,
    pub protocol: ProtocolInfo,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `metric,key,value` rows; absent buckets have an empty value.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "metric,key,value")?;
        writeln!(w, "overall_error,,{}", self.overall_error)?;
        writeln!(w, "total,,{}", self.counts.total)?;
        writeln!(w, "correct,,{}", self.counts.correct)?;
        writeln!(w, "wrong,,{}", self.counts.wrong)?;
        writeln!(w, "unpredicted,,{}", self.counts.unpredicted)?;
        for (x, e) in &self.top_x_error {
            writeln!(w, "top_x_error,{x},{e}")?;
        }
        for (t, e) in &self.sparse_user_error {
            match e {
                Some(e) => writeln!(w, "sparse_user_error,{t},{e}")?,
                None => writeln!(w, "sparse_user_error,{t},")?,
            }
        }
        Ok(())
    }
}

/// All metrics of one prediction against held-out truth.
pub fn evaluate(
    algorithm: Algorithm,
    pred: &CompletedMatrix,
    train: &RatingMatrix,
    test: &RatingMatrix,
    opts: &ProtocolOptions,
) -> Result<EvalReport> {
    let counts = error_counts(pred, test)?;
    let overall_error = counts
        .error_rate()
        .ok_or_else(|| Error::Domain("test set is empty".into()))?;
    let top_x_error = opts
        .top_x
        .iter()
        .map(|&x| Ok((x, top_x_error(pred, test, x, opts.liked)?.error)))
        .collect::<Result<_>>()?;
    Ok(EvalReport {
        algorithm,
        overall_error,
        counts,
        top_x_error,
        sparse_user_error: sparse_user_error(pred, train, test, &opts.sparse_thresholds)?,
        protocol: ProtocolInfo {
            hide_fraction: opts.hide_fraction,
            noise: opts.noise,
            seed: opts.seed,
            quantize: opts.quantize,
            train_size: train.nnz(),
            test_size: test.nnz(),
        },
    })
}

/// Training and test matrices of one protocol run.
#[derive(Clone, Debug)]
pub struct ProtocolData {
    pub train: RatingMatrix,
    pub test: RatingMatrix,
}

/// Quantize, split with stream `"split"`, then flip training entries with
/// stream `"noise"`.
pub fn prepare(data: &RatingMatrix, opts: &ProtocolOptions) -> Result<ProtocolData> {
    let data = match opts.quantize {
        Some(t) => quantize_binary(data, t),
        None => data.clone(),
    };
    let split = split_mask(&data, opts.hide_fraction, derive_seed(opts.seed, "split"))?;
    let (mut train, test) = split.partition(&data);
    if opts.noise > 0.0 {
        train = flip_noise(&train, opts.noise, derive_seed(opts.seed, "noise"))?;
    }
    Ok(ProtocolData { train, test })
}

/// Full protocol: prepare the data, fit on the training part, predict the
/// test cells and score them.
pub fn run_protocol(data: &RatingMatrix, plan: &AlgorithmPlan, opts: &ProtocolOptions) -> Result<(EvalReport, CompletedMatrix)> {
    let ProtocolData { train, test } = prepare(data, opts)?;
    let algorithm = plan.resolve(&train)?;
    let fit = FitOptions { liked: opts.liked };
    let pred = algorithm.predict_cells(&train, &test.support(), &fit)?;
    let report = evaluate(algorithm, &pred, &train, &test, opts)?;
    Ok((report, pred))
}

/// Wrong and unpredicted cells of a completion against the ground truth.
pub fn recovery_errors(pred: &CompletedMatrix, truth: &PreferenceMatrix) -> Result<(usize, usize)> {
    if pred.num_users() != truth.num_users() || pred.num_items() != truth.num_items() {
        return Err(Error::Dimension {
            expected: truth.num_users() * truth.num_items(),
            actual: pred.num_users() * pred.num_items(),
        });
    }
    let mut wrong = 0;
    let mut unpredicted = 0;
    for u in 0..truth.num_users() {
        for m in 0..truth.num_items() {
            match pred.level(u, m) {
                None => unpredicted += 1,
                Some(g) if g != truth.get(u, m) => wrong += 1,
                Some(_) => {}
            }
        }
    }
    Ok((wrong, unpredicted))
}

/// True when every cell is predicted and equals the ground truth.
pub fn exact_recovery(pred: &CompletedMatrix, truth: &PreferenceMatrix) -> Result<bool> {
    Ok(recovery_errors(pred, truth)? == (0, 0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Alpha,
    Beta,
    P,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Alpha => "alpha",
            SweepParam::Beta => "beta",
            SweepParam::P => "p",
        }
    }

    fn apply(self, cfg: &mut SynthConfig, value: f64) {
        match self {
            SweepParam::Alpha => cfg.alpha = value,
            SweepParam::Beta => cfg.beta = value,
            SweepParam::P => cfg.p = value,
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "alpha" => Ok(SweepParam::Alpha),
            "beta" => Ok(SweepParam::Beta),
            "p" => Ok(SweepParam::P),
            _ => Err(Error::Config(format!("cannot sweep '{s}' (expected alpha, beta or p)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

impl SweepGrid {
    /// `steps` evenly spaced values from `from` to `to` inclusive.
    pub fn linear(param: SweepParam, from: f64, to: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return domain("a sweep needs at least one step");
        }
        let values = if steps == 1 {
            vec![from]
        } else {
            (0..steps)
                .map(|i| from + (to - from) * i as f64 / (steps - 1) as f64)
                .collect()
        };
        Ok(SweepGrid { param, values })
    }
}

/// One trial at one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub point: usize,
    pub value: f64,
    pub trial: usize,
    pub seed: u64,
    pub recovered: bool,
    pub wrong_cells: usize,
    pub unpredicted_cells: usize,
    pub observed: usize,
    pub achieved_mu: f64,
    /// `alpha / (K ln M / M)` at this point.
    pub alpha_over_sufficient_scale: f64,
    pub clustering_recoverable: bool,
    pub cocluster_recoverable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub param: SweepParam,
    pub algorithm: AlgorithmKind,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// `(value, recovery fraction)` per grid point in grid order.
    pub fn recovery_fractions(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, usize, usize)> = Vec::new();
        for row in &self.rows {
            if out.len() <= row.point {
                out.resize(row.point + 1, (row.value, 0, 0));
            }
            out[row.point].0 = row.value;
            out[row.point].1 += row.recovered as usize;
            out[row.point].2 += 1;
        }
        out.into_iter()
            .map(|(v, ok, n)| (v, if n == 0 { 0.0 } else { ok as f64 / n as f64 }))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "param,value,trial,seed,algorithm,recovered,wrong_cells,unpredicted_cells,observed,achieved_mu,alpha_over_sufficient_scale,clustering_recoverable,cocluster_recoverable"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                self.param.name(),
                r.value,
                r.trial,
                r.seed,
                self.algorithm,
                r.recovered as u8,
                r.wrong_cells,
                r.unpredicted_cells,
                r.observed,
                r.achieved_mu,
                r.alpha_over_sufficient_scale,
                r.clustering_recoverable as u8,
                r.cocluster_recoverable as u8
            )?;
        }
        Ok(())
    }
}

/// Seed of trial `trial` at grid point `point`.
pub fn trial_seed(base: u64, point: usize, trial: usize) -> u64 {
    derive_indexed(derive_indexed(base, "sweep-point", point as u64), "trial", trial as u64)
}

/// Exact-recovery rate over a parameter grid. Each trial generates a fresh
/// instance and runs `algorithm` with cluster-size parameters `U/K` and
/// `M/K`. Trials run in parallel; rows come out in grid-then-trial order.
pub fn phase_sweep(
    base: &SynthConfig,
    grid: &SweepGrid,
    trials: usize,
    algorithm: AlgorithmKind,
    omega_constant: f64,
) -> Result<SweepTable> {
    if grid.values.is_empty() {
        return domain("sweep grid is empty");
    }
    let jobs: Vec<(usize, usize)> = (0..grid.values.len())
        .flat_map(|p| (0..trials).map(move |t| (p, t)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(point, trial)| -> Result<SweepRow> {
            let mut cfg = base.clone();
            let value = grid.values[point];
            grid.param.apply(&mut cfg, value);
            cfg.seed = trial_seed(base.seed, point, trial);
            let inst = generate(&cfg)?;
            let algo = algorithm.with_sizes(cfg.user_cluster_size(), cfg.item_cluster_size());
            let pred = algo.complete(&inst.observed)?;
            let (wrong_cells, unpredicted_cells) = recovery_errors(&pred, &inst.truth)?;
            let th = thresholds(&cfg, omega_constant);
            Ok(SweepRow {
                point,
                value,
                trial,
                seed: cfg.seed,
                recovered: wrong_cells == 0 && unpredicted_cells == 0,
                wrong_cells,
                unpredicted_cells,
                observed: inst.observed.nnz(),
                achieved_mu: inst.achieved_mu,
                alpha_over_sufficient_scale: cfg.alpha / th.clustering_sufficient_alpha,
                clustering_recoverable: th.flags.clustering_recoverable,
                cocluster_recoverable: th.flags.cocluster_recoverable,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable {
        param: grid.param,
        algorithm,
        rows,
    })
}
