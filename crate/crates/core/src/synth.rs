//! Synthetic block-model instances with information-rich and
//! information-sparse entities, the recovery thresholds they are measured
//! against, and closed-form expectations of pairwise similarity.
//!
//! Generation pipeline: block preference matrix `B` (fractionally separable),
//! then a biased rating channel, then an erasure channel where a cell is
//! observed with probability `beta` if its user or item is information-rich
//! and `alpha` otherwise.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::ratings::{Level, RatingMatrix};
use crate::seed::{derive_seed, rng_from};

/// Block redraws before generation gives up.
pub const MAX_BLOCK_DRAWS: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub users: usize,
    pub items: usize,
    pub clusters: usize,
    pub levels: Level,
    /// Probability the channel reveals the true preference.
    pub p: f64,
    /// Observation probability of cells between information-sparse entities.
    pub alpha: f64,
    /// Observation probability of cells touching an information-rich entity.
    pub beta: f64,
    pub eta: usize,
    /// Information-rich users per user cluster; 0 disables rich users.
    pub rich_users_per_cluster: usize,
    /// Information-rich items per item cluster; 0 disables rich items.
    pub rich_items_per_cluster: usize,
    pub mu_cap: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            users: 400,
            items: 400,
            clusters: 4,
            levels: 2,
            p: 0.9,
            alpha: 0.08,
            beta: 0.5,
            eta: 2,
            rich_users_per_cluster: 2,
            rich_items_per_cluster: 0,
            mu_cap: 0.5,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn user_cluster_size(&self) -> usize {
        self.users / self.clusters.max(1)
    }

    pub fn item_cluster_size(&self) -> usize {
        self.items / self.clusters.max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.users == 0 || self.items == 0 || self.clusters == 0 {
            return bad("users, items and clusters must be positive".into());
        }
        if !self.users.is_multiple_of(self.clusters) || !self.items.is_multiple_of(self.clusters) {
            return bad(format!(
                "K = {} must divide U = {} and M = {}",
                self.clusters, self.users, self.items
            ));
        }
        if self.levels < 2 {
            return bad(format!("G must be at least 2, got {}", self.levels));
        }
        if !(self.p > 1.0 / self.levels as f64 && self.p <= 1.0) {
            return bad(format!("p = {} must lie in (1/G, 1]", self.p));
        }
        if !(self.alpha > 0.0 && self.alpha < self.beta && self.beta < 1.0) {
            return bad(format!(
                "need 0 < alpha < beta < 1, got alpha = {}, beta = {}",
                self.alpha, self.beta
            ));
        }
        for (name, count, size) in [
            ("rich_users_per_cluster", self.rich_users_per_cluster, self.user_cluster_size()),
            ("rich_items_per_cluster", self.rich_items_per_cluster, self.item_cluster_size()),
        ] {
            if count != 0 && !(2..=self.eta).contains(&count) {
                return bad(format!("{name} = {count} must be 0 or in [2, eta = {}]", self.eta));
            }
            if count > size {
                return bad(format!("{name} = {count} exceeds the cluster size {size}"));
            }
        }
        if !(self.mu_cap > 0.0 && self.mu_cap < 1.0) {
            return bad(format!("mu_cap = {} must lie in (0, 1)", self.mu_cap));
        }
        Ok(())
    }

    /// Set one field from a `key = value` pair.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("bad value '{value}' for '{key}'")))
        }
        match key {
            "users" | "U" => self.users = num(key, value)?,
            "items" | "M" => self.items = num(key, value)?,
            "clusters" | "K" => self.clusters = num(key, value)?,
            "levels" | "G" => self.levels = num(key, value)?,
            "p" => self.p = num(key, value)?,
            "alpha" => self.alpha = num(key, value)?,
            "beta" => self.beta = num(key, value)?,
            "eta" => self.eta = num(key, value)?,
            "rich_users" | "rich_users_per_cluster" => self.rich_users_per_cluster = num(key, value)?,
            "rich_items" | "rich_items_per_cluster" => self.rich_items_per_cluster = num(key, value)?,
            "mu_cap" => self.mu_cap = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            other => return Err(Error::Config(format!("unknown synth key '{other}'"))),
        }
        Ok(())
    }

    /// Parse `key = value` lines on top of the defaults. `#` starts a comment.
    pub fn from_key_values(text: &str) -> Result<Self> {
        let mut cfg = SynthConfig::default();
        for (key, value) in parse_key_values(text)? {
            cfg.set(&key, &value)?;
        }
        Ok(cfg)
    }
}

/// Split `key = value` lines, skipping blanks and `#` comments.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Cluster assignments and information-rich entities.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub clusters: usize,
    pub user_cluster: Vec<u32>,
    pub item_cluster: Vec<u32>,
    /// Information-rich users of each user cluster.
    pub rich_users: Vec<Vec<usize>>,
    /// Information-rich items of each item cluster.
    pub rich_items: Vec<Vec<usize>>,
    user_is_rich: Vec<bool>,
    item_is_rich: Vec<bool>,
}

impl ClusterModel {
    /// Equal contiguous clusters; user `u` belongs to cluster `u K / U`.
    /// The first `rich_*` members of each cluster are information-rich.
    pub fn contiguous(users: usize, items: usize, clusters: usize, rich_users: usize, rich_items: usize) -> Self {
        let assign = |n: usize| -> Vec<u32> { (0..n).map(|i| (i * clusters / n) as u32).collect() };
        let user_cluster = assign(users);
        let item_cluster = assign(items);
        let pick = |n: usize, per: usize| -> Vec<Vec<usize>> {
            let size = n / clusters;
            (0..clusters)
                .map(|k| (k * size..k * size + per.min(size)).collect())
                .collect()
        };
        let mut model = ClusterModel {
            clusters,
            user_cluster,
            item_cluster,
            rich_users: pick(users, rich_users),
            rich_items: pick(items, rich_items),
            user_is_rich: vec![false; users],
            item_is_rich: vec![false; items],
        };
        model.refresh_masks();
        model
    }

    /// Replace the rich sets; membership masks follow.
    pub fn with_rich_sets(mut self, rich_users: Vec<Vec<usize>>, rich_items: Vec<Vec<usize>>) -> Self {
        self.rich_users = rich_users;
        self.rich_items = rich_items;
        self.refresh_masks();
        self
    }

    fn refresh_masks(&mut self) {
        self.user_is_rich.iter_mut().for_each(|x| *x = false);
        self.item_is_rich.iter_mut().for_each(|x| *x = false);
        for &u in self.rich_users.iter().flatten() {
            self.user_is_rich[u] = true;
        }
        for &m in self.rich_items.iter().flatten() {
            self.item_is_rich[m] = true;
        }
    }

    pub fn num_users(&self) -> usize {
        self.user_cluster.len()
    }

    pub fn num_items(&self) -> usize {
        self.item_cluster.len()
    }

    pub fn is_rich_user(&self, u: usize) -> bool {
        self.user_is_rich[u]
    }

    pub fn is_rich_item(&self, m: usize) -> bool {
        self.item_is_rich[m]
    }

    /// `axis,index,cluster,rich` lines.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "axis,index,cluster,rich")?;
        for (u, k) in self.user_cluster.iter().enumerate() {
            writeln!(w, "user,{u},{k},{}", self.user_is_rich[u] as u8)?;
        }
        for (m, k) in self.item_cluster.iter().enumerate() {
            writeln!(w, "item,{m},{k},{}", self.item_is_rich[m] as u8)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Storage {
    Blocks {
        user_cluster: Vec<u32>,
        item_cluster: Vec<u32>,
        item_clusters: usize,
        values: Vec<Level>,
    },
    Dense(Vec<Level>),
}

/// Ground-truth preferences, dense or as a block matrix plus assignments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreferenceMatrix {
    users: usize,
    items: usize,
    levels: Level,
    storage: Storage,
}

/// Largest cross-cluster agreement fractions, from exhaustive counts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Separability {
    pub users_within_identical: bool,
    pub items_within_identical: bool,
    pub mu_users: f64,
    pub mu_items: f64,
}

impl Separability {
    pub fn mu(&self) -> f64 {
        self.mu_users.max(self.mu_items)
    }
}

impl PreferenceMatrix {
    /// Block form: `blocks[k_u * item_clusters + k_m]`.
    pub fn from_blocks(levels: Level, user_cluster: Vec<u32>, item_cluster: Vec<u32>, blocks: Vec<Level>) -> Result<Self> {
        let user_clusters = user_cluster.iter().map(|&k| k as usize + 1).max().unwrap_or(0);
        let item_clusters = item_cluster.iter().map(|&k| k as usize + 1).max().unwrap_or(0);
        if blocks.len() != user_clusters * item_clusters {
            return Err(Error::Dimension {
                expected: user_clusters * item_clusters,
                actual: blocks.len(),
            });
        }
        if let Some(v) = blocks.iter().find(|&&v| v == 0 || v > levels) {
            return domain(format!("block value {v} outside [1, {levels}]"));
        }
        Ok(PreferenceMatrix {
            users: user_cluster.len(),
            items: item_cluster.len(),
            levels,
            storage: Storage::Blocks {
                user_cluster,
                item_cluster,
                item_clusters,
                values: blocks,
            },
        })
    }

    pub fn from_dense(users: usize, items: usize, levels: Level, values: Vec<Level>) -> Result<Self> {
        if values.len() != users * items {
            return Err(Error::Dimension {
                expected: users * items,
                actual: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|&&v| v == 0 || v > levels) {
            return domain(format!("preference {v} outside [1, {levels}]"));
        }
        Ok(PreferenceMatrix {
            users,
            items,
            levels,
            storage: Storage::Dense(values),
        })
    }

    pub fn num_users(&self) -> usize {
        self.users
    }

    pub fn num_items(&self) -> usize {
        self.items
    }

    pub fn levels(&self) -> Level {
        self.levels
    }

    pub fn get(&self, u: usize, m: usize) -> Level {
        match &self.storage {
            Storage::Blocks {
                user_cluster,
                item_cluster,
                item_clusters,
                values,
            } => values[user_cluster[u] as usize * item_clusters + item_cluster[m] as usize],
            Storage::Dense(v) => v[u * self.items + m],
        }
    }

    pub fn to_dense(&self) -> Vec<Level> {
        (0..self.users)
            .flat_map(|u| (0..self.items).map(move |m| (u, m)))
            .map(|(u, m)| self.get(u, m))
            .collect()
    }

    /// Every cell as an observed rating.
    pub fn to_ratings(&self) -> RatingMatrix {
        RatingMatrix::from_dense(self.users, self.items, self.levels, &self.to_dense())
            .expect("preferences are valid levels")
    }

    pub fn transpose(&self) -> PreferenceMatrix {
        let mut t = vec![0; self.users * self.items];
        for u in 0..self.users {
            for m in 0..self.items {
                t[m * self.users + u] = self.get(u, m);
            }
        }
        PreferenceMatrix::from_dense(self.items, self.users, self.levels, t).expect("same levels")
    }

    /// Exhaustive check of the fractional separability conditions: every
    /// pair of rows (columns) is compared cell by cell.
    pub fn separability(&self, clusters: &ClusterModel) -> Separability {
        let dense = self.to_dense();
        let (u_n, m_n) = (self.users, self.items);
        let row = |u: usize| &dense[u * m_n..(u + 1) * m_n];
        let mut users_within_identical = true;
        let mut mu_users: f64 = 0.0;
        for u in 0..u_n {
            for v in u + 1..u_n {
                let agree = row(u).iter().zip(row(v)).filter(|(a, b)| a == b).count();
                if clusters.user_cluster[u] == clusters.user_cluster[v] {
                    users_within_identical &= agree == m_n;
                } else {
                    mu_users = mu_users.max(agree as f64 / m_n as f64);
                }
            }
        }
        let mut items_within_identical = true;
        let mut mu_items: f64 = 0.0;
        for m in 0..m_n {
            for n in m + 1..m_n {
                let agree = (0..u_n).filter(|&u| dense[u * m_n + m] == dense[u * m_n + n]).count();
                if clusters.item_cluster[m] == clusters.item_cluster[n] {
                    items_within_identical &= agree == u_n;
                } else {
                    mu_items = mu_items.max(agree as f64 / u_n as f64);
                }
            }
        }
        Separability {
            users_within_identical,
            items_within_identical,
            mu_users,
            mu_items,
        }
    }
}

/// Largest cross-cluster agreement fraction of a `K x K` block matrix with
/// equal cluster sizes, over both rows and columns.
fn block_mu(blocks: &[Level], k: usize) -> f64 {
    let mut worst = 0usize;
    for a in 0..k {
        for b in a + 1..k {
            let rows = (0..k).filter(|&l| blocks[a * k + l] == blocks[b * k + l]).count();
            let cols = (0..k).filter(|&l| blocks[l * k + a] == blocks[l * k + b]).count();
            worst = worst.max(rows).max(cols);
        }
    }
    if k == 0 {
        0.0
    } else {
        worst as f64 / k as f64
    }
}

/// Draw i.i.d. uniform `K x K` blocks until both separability conditions hold
/// with `mu <= mu_cap`. Returns the preferences, the contiguous clustering and
/// the achieved `mu`.
pub fn generate_preferences(cfg: &SynthConfig) -> Result<(PreferenceMatrix, ClusterModel, f64)> {
    cfg.validate()?;
    let k = cfg.clusters;
    let clusters = ClusterModel::contiguous(
        cfg.users,
        cfg.items,
        k,
        cfg.rich_users_per_cluster,
        cfg.rich_items_per_cluster,
    );
    let mut rng = rng_from(derive_seed(cfg.seed, "blocks"));
    let mut best = f64::INFINITY;
    for _ in 0..MAX_BLOCK_DRAWS {
        let blocks: Vec<Level> = (0..k * k).map(|_| rng.random_range(1..=cfg.levels)).collect();
        let mu = block_mu(&blocks, k);
        if mu <= cfg.mu_cap {
            let truth = PreferenceMatrix::from_blocks(
                cfg.levels,
                clusters.user_cluster.clone(),
                clusters.item_cluster.clone(),
                blocks,
            )?;
            return Ok((truth, clusters, mu));
        }
        best = best.min(mu);
    }
    Err(Error::Infeasible {
        mu_cap: cfg.mu_cap,
        attempts: MAX_BLOCK_DRAWS,
        best_mu: best,
    })
}

/// Pass every observed cell of `r` through the biased channel: keep the level
/// with probability `p`, otherwise replace it by a uniformly chosen other
/// level.
pub fn biased_channel(r: &RatingMatrix, p: f64, seed: u64) -> Result<RatingMatrix> {
    let g = r.levels();
    if !(p > 1.0 / g as f64 && p <= 1.0) {
        return domain(format!("channel needs 1/G < p <= 1, got p = {p} with G = {g}"));
    }
    let mut rng = rng_from(seed);
    let triples: Vec<_> = r
        .iter()
        .map(|(u, m, v)| {
            let out = if rng.random::<f64>() < p {
                v
            } else {
                let w = rng.random_range(1..g);
                if w >= v {
                    w + 1
                } else {
                    w
                }
            };
            (u, m, out)
        })
        .collect();
    RatingMatrix::from_triples(r.num_users(), r.num_items(), g, triples)
}

/// Noisy copy of every preference cell.
pub fn apply_biased_channel(truth: &PreferenceMatrix, p: f64, seed: u64) -> Result<RatingMatrix> {
    biased_channel(&truth.to_ratings(), p, seed)
}

/// Keep each stored cell independently with probability `beta` when its user
/// or item is information-rich and `alpha` otherwise.
pub fn apply_erasure(dense: &RatingMatrix, clusters: &ClusterModel, alpha: f64, beta: f64, seed: u64) -> Result<RatingMatrix> {
    for (name, x) in [("alpha", alpha), ("beta", beta)] {
        if !(0.0..=1.0).contains(&x) {
            return domain(format!("{name} = {x} outside [0, 1]"));
        }
    }
    if clusters.num_users() != dense.num_users() || clusters.num_items() != dense.num_items() {
        return Err(Error::Dimension {
            expected: clusters.num_users() * clusters.num_items(),
            actual: dense.num_users() * dense.num_items(),
        });
    }
    let mut rng = rng_from(seed);
    let kept: Vec<_> = dense
        .iter()
        .filter(|&(u, m, _)| {
            let keep = if clusters.is_rich_user(u) || clusters.is_rich_item(m) {
                beta
            } else {
                alpha
            };
            rng.random::<f64>() < keep
        })
        .collect();
    RatingMatrix::from_triples(dense.num_users(), dense.num_items(), dense.levels(), kept)
}

#[derive(Clone, Debug)]
pub struct GeneratedInstance {
    pub truth: PreferenceMatrix,
    pub observed: RatingMatrix,
    pub clusters: ClusterModel,
    pub config: SynthConfig,
    pub achieved_mu: f64,
}

/// Full pipeline `B -> biased channel -> erasure`, seeded from `cfg.seed`.
pub fn generate(cfg: &SynthConfig) -> Result<GeneratedInstance> {
    let (truth, clusters, achieved_mu) = generate_preferences(cfg)?;
    let noisy = apply_biased_channel(&truth, cfg.p, derive_seed(cfg.seed, "channel"))?;
    let observed = apply_erasure(
        &noisy,
        &clusters,
        cfg.alpha,
        cfg.beta,
        derive_seed(cfg.seed, "erasure"),
    )?;
    Ok(GeneratedInstance {
        truth,
        observed,
        clusters,
        config: cfg.clone(),
        achieved_mu,
    })
}

/// Number of cells with an information-rich user or item.
pub fn rich_endpoint_cells(cfg: &SynthConfig) -> usize {
    let rich_users = cfg.clusters * cfg.rich_users_per_cluster;
    let rich_items = cfg.clusters * cfg.rich_items_per_cluster;
    rich_users * cfg.items + rich_items * cfg.users - rich_users * rich_items
}

/// Exact `E[X_R]` under the generator.
pub fn expected_observations(cfg: &SynthConfig) -> f64 {
    let rich = rich_endpoint_cells(cfg) as f64;
    let all = (cfg.users * cfg.items) as f64;
    cfg.beta * rich + cfg.alpha * (all - rich)
}

/// Where a configured cluster count sits relative to `M / ln M`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterCountRegime {
    Within,
    Tight,
    Exceeded,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeFlags {
    /// `alpha <= K/U`: no algorithm recovers all `B` under user clustering.
    pub clustering_impossible: bool,
    /// `alpha >= c K ln M / M` and `alpha beta >= c ln M / M`.
    pub clustering_recoverable: bool,
    /// `alpha <= K^2/(UM)` and `beta <= K / (eta (M+U) - eta^2 K)`.
    pub cocluster_impossible: bool,
    /// `(alpha >= c K^2 ln M / M^2 or beta >= c K ln M / M)` and
    /// `(alpha beta >= c ln M / M or beta^2 >= c ln M / K)`.
    pub cocluster_recoverable: bool,
    pub cluster_count: ClusterCountRegime,
}

/// Numeric thresholds for one configuration. Asymptotic `omega(x)` is read as
/// `>= c x` with `c = omega_constant`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub omega_constant: f64,
    /// `K / U`
    pub clustering_necessary_alpha: f64,
    /// `K ln M / M`
    pub clustering_sufficient_alpha: f64,
    /// `ln M / M`, the scale of `alpha beta`
    pub clustering_sufficient_alpha_beta: f64,
    /// `ln M / (M beta)`, the `alpha` scale implied by the product condition
    pub clustering_sufficient_alpha_given_beta: f64,
    /// `K^2 / (U M)`
    pub cocluster_necessary_alpha: f64,
    /// `K / (eta (M + U) - eta^2 K)`
    pub cocluster_necessary_beta: f64,
    /// `M K ln M`
    pub clustering_observation_scale: f64,
    /// `K^2 ln M`
    pub cocluster_observation_scale: f64,
    /// `M / ln M`, the largest cluster count the model allows
    pub cluster_count_limit: f64,
    pub expected_observations: f64,
    pub flags: RegimeFlags,
}

pub fn thresholds(cfg: &SynthConfig, omega_constant: f64) -> ThresholdReport {
    let c = omega_constant;
    let (u, m, k) = (cfg.users as f64, cfg.items as f64, cfg.clusters as f64);
    let eta = cfg.eta as f64;
    let ln_m = m.ln();
    let (alpha, beta) = (cfg.alpha, cfg.beta);

    let clustering_necessary_alpha = k / u;
    let clustering_sufficient_alpha = k * ln_m / m;
    let clustering_sufficient_alpha_beta = ln_m / m;
    let cocluster_necessary_alpha = k * k / (u * m);
    let cocluster_necessary_beta = k / (eta * (m + u) - eta * eta * k);
    let cluster_count_limit = m / ln_m;

    let cluster_count = if (k - cluster_count_limit).abs() <= 1.0 {
        ClusterCountRegime::Tight
    } else if k < cluster_count_limit {
        ClusterCountRegime::Within
    } else {
        ClusterCountRegime::Exceeded
    };
    let flags = RegimeFlags {
        clustering_impossible: alpha <= clustering_necessary_alpha,
        clustering_recoverable: alpha >= c * clustering_sufficient_alpha
            && alpha * beta >= c * clustering_sufficient_alpha_beta,
        cocluster_impossible: alpha <= cocluster_necessary_alpha && beta <= cocluster_necessary_beta,
        cocluster_recoverable: (alpha >= c * k * k * ln_m / (m * m) || beta >= c * k * ln_m / m)
            && (alpha * beta >= c * ln_m / m || beta * beta >= c * ln_m / k),
        cluster_count,
    };
    ThresholdReport {
        omega_constant,
        clustering_necessary_alpha,
        clustering_sufficient_alpha,
        clustering_sufficient_alpha_beta,
        clustering_sufficient_alpha_given_beta: ln_m / (m * beta),
        cocluster_necessary_alpha,
        cocluster_necessary_beta,
        clustering_observation_scale: m * k * ln_m,
        cocluster_observation_scale: k * k * ln_m,
        cluster_count_limit,
        expected_observations: expected_observations(cfg),
        flags,
    }
}

/// Probability two independent channel outputs agree when the preferences
/// agree: `p^2 + (1-p)^2 / (G-1)`.
pub fn z1(p: f64, levels: Level) -> f64 {
    let g1 = levels as f64 - 1.0;
    p * p + (1.0 - p) * (1.0 - p) / g1
}

/// Probability two independent channel outputs agree when the preferences
/// differ: `(1-p^2)/(G-1) - ((1-p)/(G-1))^2`.
pub fn z2(p: f64, levels: Level) -> f64 {
    let g1 = levels as f64 - 1.0;
    (1.0 - p * p) / g1 - ((1.0 - p) / g1).powi(2)
}

/// The six kinds of user pair distinguished by richness and cluster
/// membership.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairCase {
    RichRichSame = 1,
    RichSparseSame = 2,
    RichRichCross = 3,
    RichSparseCross = 4,
    SparseSparseSame = 5,
    SparseSparseCross = 6,
}

impl PairCase {
    pub const ALL: [PairCase; 6] = [
        PairCase::RichRichSame,
        PairCase::RichSparseSame,
        PairCase::RichRichCross,
        PairCase::RichSparseCross,
        PairCase::SparseSparseSame,
        PairCase::SparseSparseCross,
    ];

    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            1..=6 => Ok(Self::ALL[id as usize - 1]),
            _ => domain(format!("pair case {id} is not one of 1..=6")),
        }
    }

    pub fn same_cluster(self) -> bool {
        matches!(
            self,
            PairCase::RichRichSame | PairCase::RichSparseSame | PairCase::SparseSparseSame
        )
    }

    /// Number of information-rich users in the pair.
    pub fn rich_count(self) -> usize {
        match self {
            PairCase::RichRichSame | PairCase::RichRichCross => 2,
            PairCase::RichSparseSame | PairCase::RichSparseCross => 1,
            PairCase::SparseSparseSame | PairCase::SparseSparseCross => 0,
        }
    }
}

/// Bounds on `E[sigma_uv]`. Same-cluster cases are exact (`lower == upper`).
/// For cross-cluster pairs the upper bound is exact when `mu` is the pair's
/// actual preference agreement fraction; the lower bound is the `mu = 0`
/// value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityBounds {
    pub lower: f64,
    pub upper: f64,
}

pub fn expected_similarity(case: PairCase, cfg: &SynthConfig, mu: f64) -> SimilarityBounds {
    let m = cfg.items as f64;
    let (a1, a2) = (z1(cfg.p, cfg.levels), z2(cfg.p, cfg.levels));
    let joint = match case.rich_count() {
        2 => cfg.beta * cfg.beta,
        1 => cfg.alpha * cfg.beta,
        _ => cfg.alpha * cfg.alpha,
    };
    if case.same_cluster() {
        let v = m * joint * (2.0 * a1 - 1.0);
        SimilarityBounds { lower: v, upper: v }
    } else {
        SimilarityBounds {
            lower: m * joint * (2.0 * a2 - 1.0),
            upper: m * joint * (2.0 * mu * a1 + 2.0 * (1.0 - mu) * a2 - 1.0),
        }
    }
}

/// `E[phi_uv]` for two rich users (`M beta^2`) or a rich and a sparse user
/// (`M alpha beta`).
pub fn expected_co_rating(both_rich: bool, cfg: &SynthConfig) -> f64 {
    let m = cfg.items as f64;
    if both_rich {
        m * cfg.beta * cfg.beta
    } else {
        m * cfg.alpha * cfg.beta
    }
}
