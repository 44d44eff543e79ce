//! Completion algorithms.
//!
//! * `Ucr` / `Icr`: anchor on the most similar entity, cluster by normalized
//!   similarity to the anchor, plurality vote inside the cluster.
//! * `Cor`: user and item clusters as above, vote over the user x item block.
//! * `Hucr` / `Hicr`: three candidate sets per entity, each fused into a
//!   super-entity; the super-entity most similar to the target wins.
//! * `Hcor`: hybrid user and item sets with a three-region vote whose block
//!   term is square-root weighted.
//! * `Paf`: top-k most similar users, plurality vote.

mod fit;
mod predict;

pub mod estimate;
pub mod incremental;
pub mod select;
pub mod vote;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use fit::{hybrid_candidates, NeighborSet, Provenance};
pub use vote::Prediction;

use crate::error::{domain, Error, Result};
use crate::ratings::{Axis, Level, RatingMatrix};
use crate::similarity::SimilarityIndex;
use predict::Plan;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum Algorithm {
    Ucr { cluster_size: usize },
    Icr { cluster_size: usize },
    Cor { user_cluster_size: usize, item_cluster_size: usize },
    Hucr { t: usize },
    Hicr { t: usize },
    Hcor { t_users: usize, t_items: usize },
    Paf { k: usize },
}

/// Algorithm names without parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmKind {
    Ucr,
    Icr,
    Cor,
    Hucr,
    Hicr,
    Hcor,
    Paf,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 7] = [
        AlgorithmKind::Ucr,
        AlgorithmKind::Icr,
        AlgorithmKind::Cor,
        AlgorithmKind::Hucr,
        AlgorithmKind::Hicr,
        AlgorithmKind::Hcor,
        AlgorithmKind::Paf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmKind::Ucr => "ucr",
            AlgorithmKind::Icr => "icr",
            AlgorithmKind::Cor => "cor",
            AlgorithmKind::Hucr => "hucr",
            AlgorithmKind::Hicr => "hicr",
            AlgorithmKind::Hcor => "hcor",
            AlgorithmKind::Paf => "paf",
        }
    }

    /// Attach sizes: `users` applies to user-axis sets, `items` to item-axis
    /// sets; the baseline uses `users` as `k`.
    pub fn with_sizes(self, users: usize, items: usize) -> Algorithm {
        match self {
            AlgorithmKind::Ucr => Algorithm::Ucr { cluster_size: users },
            AlgorithmKind::Icr => Algorithm::Icr { cluster_size: items },
            AlgorithmKind::Cor => Algorithm::Cor {
                user_cluster_size: users,
                item_cluster_size: items,
            },
            AlgorithmKind::Hucr => Algorithm::Hucr { t: users },
            AlgorithmKind::Hicr => Algorithm::Hicr { t: items },
            AlgorithmKind::Hcor => Algorithm::Hcor {
                t_users: users,
                t_items: items,
            },
            AlgorithmKind::Paf => Algorithm::Paf { k: users },
        }
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AlgorithmKind::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown algorithm '{s}' (expected ucr, icr, cor, hucr, hicr, hcor or paf)")))
    }
}

/// Optional knobs shared by every algorithm.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Level whose vote margin is recorded for ranking; defaults to the
    /// highest level.
    pub liked: Option<Level>,
}

impl Algorithm {
    pub fn kind(&self) -> AlgorithmKind {
        match self {
            Algorithm::Ucr { .. } => AlgorithmKind::Ucr,
            Algorithm::Icr { .. } => AlgorithmKind::Icr,
            Algorithm::Cor { .. } => AlgorithmKind::Cor,
            Algorithm::Hucr { .. } => AlgorithmKind::Hucr,
            Algorithm::Hicr { .. } => AlgorithmKind::Hicr,
            Algorithm::Hcor { .. } => AlgorithmKind::Hcor,
            Algorithm::Paf { .. } => AlgorithmKind::Paf,
        }
    }

    pub fn validate(&self, r: &RatingMatrix) -> Result<()> {
        let (u, m) = (r.num_users(), r.num_items());
        let size = |name: &str, n: usize, limit: usize, what: &str| -> Result<()> {
            if n < 2 {
                return domain(format!("{name} = {n} must be at least 2"));
            }
            if n > limit {
                return domain(format!("{name} = {n} exceeds the {limit} {what}"));
            }
            Ok(())
        };
        match *self {
            Algorithm::Ucr { cluster_size } => size("cluster_size", cluster_size, u, "users"),
            Algorithm::Icr { cluster_size } => size("cluster_size", cluster_size, m, "items"),
            Algorithm::Cor {
                user_cluster_size,
                item_cluster_size,
            } => {
                size("user_cluster_size", user_cluster_size, u, "users")?;
                size("item_cluster_size", item_cluster_size, m, "items")
            }
            Algorithm::Hucr { t } => size("T", t, u, "users"),
            Algorithm::Hicr { t } => size("T", t, m, "items"),
            Algorithm::Hcor { t_users, t_items } => {
                size("T_users", t_users, u, "users")?;
                size("T_items", t_items, m, "items")
            }
            Algorithm::Paf { k } => {
                if k == 0 || k >= u {
                    domain(format!("k = {k} must lie in [1, U - 1] with U = {u}"))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Predict every cell.
    pub fn complete(&self, r: &RatingMatrix) -> Result<CompletedMatrix> {
        self.complete_with(r, &FitOptions::default())
    }

    pub fn complete_with(&self, r: &RatingMatrix, opts: &FitOptions) -> Result<CompletedMatrix> {
        self.run(r, None, opts)
    }

    /// Predict only the listed `(user, item)` cells.
    pub fn predict_cells(&self, r: &RatingMatrix, cells: &[(u32, u32)], opts: &FitOptions) -> Result<CompletedMatrix> {
        if let Some(&(u, m)) = cells
            .iter()
            .find(|&&(u, m)| u as usize >= r.num_users() || m as usize >= r.num_items())
        {
            return domain(format!("cell ({u}, {m}) outside {} x {}", r.num_users(), r.num_items()));
        }
        self.run(r, Some(cells), opts)
    }

    /// The neighbor set each user (for user-axis and co-clustering methods)
    /// or item (for item-axis methods) ends up voting with.
    pub fn neighbor_sets(&self, r: &RatingMatrix) -> Result<Vec<NeighborSet>> {
        self.validate(r)?;
        Ok(match *self {
            Algorithm::Ucr { cluster_size } => fit::theory_sets(&SimilarityIndex::new(r, Axis::Users), cluster_size),
            Algorithm::Icr { cluster_size } => fit::theory_sets(&SimilarityIndex::new(r, Axis::Items), cluster_size),
            Algorithm::Cor { user_cluster_size, .. } => {
                fit::theory_sets(&SimilarityIndex::new(r, Axis::Users), user_cluster_size)
            }
            Algorithm::Hucr { t } | Algorithm::Hcor { t_users: t, .. } => {
                fit::hybrid_sets(&SimilarityIndex::new(r, Axis::Users), t)
            }
            Algorithm::Hicr { t } => fit::hybrid_sets(&SimilarityIndex::new(r, Axis::Items), t),
            Algorithm::Paf { k } => fit::top_k_sets(&SimilarityIndex::new(r, Axis::Users), k),
        })
    }

    fn run(&self, r: &RatingMatrix, cells: Option<&[(u32, u32)]>, opts: &FitOptions) -> Result<CompletedMatrix> {
        self.validate(r)?;
        let liked = opts.liked.unwrap_or(r.levels());
        if liked == 0 || liked > r.levels() {
            return domain(format!("liked level {liked} outside [1, {}]", r.levels()));
        }
        let members = |sets: Vec<NeighborSet>| -> Vec<Vec<usize>> { sets.into_iter().map(|s| s.members).collect() };
        let users = || SimilarityIndex::new(r, Axis::Users);
        let items = || SimilarityIndex::new(r, Axis::Items);
        let user_plan = || match cells {
            None => Plan::All {
                rows: r.num_users(),
                cols: r.num_items(),
            },
            Some(c) => Plan::from_cells(r.num_users(), c),
        };
        let (per_row, transposed, plan) = match *self {
            Algorithm::Ucr { cluster_size } => {
                let sets = members(fit::theory_sets(&users(), cluster_size));
                let plan = user_plan();
                (predict::row_vote(r, &sets, &plan, liked), false, plan)
            }
            Algorithm::Hucr { t } => {
                let sets = members(fit::hybrid_sets(&users(), t));
                let plan = user_plan();
                (predict::row_vote(r, &sets, &plan, liked), false, plan)
            }
            Algorithm::Paf { k } => {
                let sets = members(fit::top_k_sets(&users(), k));
                let plan = user_plan();
                (predict::row_vote(r, &sets, &plan, liked), false, plan)
            }
            Algorithm::Icr { cluster_size: n } | Algorithm::Hicr { t: n } => {
                let index = items();
                let sets = members(match self {
                    Algorithm::Icr { .. } => fit::theory_sets(&index, n),
                    _ => fit::hybrid_sets(&index, n),
                });
                let plan = match cells {
                    None => Plan::All {
                        rows: r.num_items(),
                        cols: r.num_users(),
                    },
                    Some(c) => {
                        let flipped: Vec<(u32, u32)> = c.iter().map(|&(u, m)| (m, u)).collect();
                        Plan::from_cells(r.num_items(), &flipped)
                    }
                };
                (predict::row_vote(index.rows(), &sets, &plan, liked), true, plan)
            }
            Algorithm::Cor {
                user_cluster_size,
                item_cluster_size,
            } => {
                let us = members(fit::theory_sets(&users(), user_cluster_size));
                let is = members(fit::theory_sets(&items(), item_cluster_size));
                let plan = user_plan();
                (predict::block_vote(r, &us, &is, &plan, liked), false, plan)
            }
            Algorithm::Hcor { t_users, t_items } => {
                let us = members(fit::hybrid_sets(&users(), t_users));
                let is = members(fit::hybrid_sets(&items(), t_items));
                let plan = user_plan();
                (predict::region_vote(r, &us, &is, &plan, liked), false, plan)
            }
        };
        Ok(CompletedMatrix::assemble(
            r.num_users(),
            r.num_items(),
            r.levels(),
            liked,
            *self,
            &plan,
            per_row,
            transposed,
        ))
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Algorithm::Ucr { cluster_size } | Algorithm::Icr { cluster_size } => {
                write!(f, "{}(size={cluster_size})", self.kind())
            }
            Algorithm::Cor {
                user_cluster_size,
                item_cluster_size,
            } => write!(f, "cor(users={user_cluster_size}, items={item_cluster_size})"),
            Algorithm::Hucr { t } | Algorithm::Hicr { t } => write!(f, "{}(T={t})", self.kind()),
            Algorithm::Hcor { t_users, t_items } => write!(f, "hcor(T_users={t_users}, T_items={t_items})"),
            Algorithm::Paf { k } => write!(f, "paf(k={k})"),
        }
    }
}

pub fn ucr(r: &RatingMatrix, cluster_size: usize) -> Result<CompletedMatrix> {
    Algorithm::Ucr { cluster_size }.complete(r)
}

pub fn icr(r: &RatingMatrix, cluster_size: usize) -> Result<CompletedMatrix> {
    Algorithm::Icr { cluster_size }.complete(r)
}

pub fn cor(r: &RatingMatrix, user_cluster_size: usize, item_cluster_size: usize) -> Result<CompletedMatrix> {
    Algorithm::Cor {
        user_cluster_size,
        item_cluster_size,
    }
    .complete(r)
}

pub fn hucr(r: &RatingMatrix, t: usize) -> Result<CompletedMatrix> {
    Algorithm::Hucr { t }.complete(r)
}

pub fn hicr(r: &RatingMatrix, t: usize) -> Result<CompletedMatrix> {
    Algorithm::Hicr { t }.complete(r)
}

pub fn hcor(r: &RatingMatrix, t_users: usize, t_items: usize) -> Result<CompletedMatrix> {
    Algorithm::Hcor { t_users, t_items }.complete(r)
}

pub fn paf_baseline(r: &RatingMatrix, k: usize) -> Result<CompletedMatrix> {
    Algorithm::Paf { k }.complete(r)
}

#[derive(Clone, Debug, PartialEq)]
enum Cells {
    Dense(Vec<Prediction>),
    Sparse { keys: Vec<(u32, u32)>, values: Vec<Prediction> },
}

/// Predictions of one algorithm run, for every cell or for a requested
/// subset. A cell whose voters had no observed rating is unpredicted.
#[derive(Clone, Debug, PartialEq)]
pub struct CompletedMatrix {
    num_users: usize,
    num_items: usize,
    levels: Level,
    liked: Level,
    method: Algorithm,
    cells: Cells,
}

impl CompletedMatrix {
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        num_users: usize,
        num_items: usize,
        levels: Level,
        liked: Level,
        method: Algorithm,
        plan: &Plan,
        per_row: Vec<Vec<Prediction>>,
        transposed: bool,
    ) -> Self {
        let cells = match plan {
            Plan::All { .. } => {
                let mut dense = vec![Prediction::EMPTY; num_users * num_items];
                for (row, preds) in per_row.into_iter().enumerate() {
                    for (col, p) in preds.into_iter().enumerate() {
                        let (u, m) = if transposed { (col, row) } else { (row, col) };
                        dense[u * num_items + m] = p;
                    }
                }
                Cells::Dense(dense)
            }
            Plan::Cells { .. } => {
                let mut pairs: Vec<((u32, u32), Prediction)> = Vec::new();
                for (row, preds) in per_row.into_iter().enumerate() {
                    for (col, p) in plan.columns(row).into_iter().zip(preds) {
                        let key = if transposed { (col, row as u32) } else { (row as u32, col) };
                        pairs.push((key, p));
                    }
                }
                pairs.sort_unstable_by_key(|(k, _)| *k);
                let (keys, values) = pairs.into_iter().unzip();
                Cells::Sparse { keys, values }
            }
        };
        CompletedMatrix {
            num_users,
            num_items,
            levels,
            liked,
            method,
            cells,
        }
    }

    /// Build from explicit cells; later duplicates replace earlier ones.
    pub fn from_cells(
        num_users: usize,
        num_items: usize,
        levels: Level,
        liked: Level,
        method: Algorithm,
        cells: impl IntoIterator<Item = (u32, u32, Prediction)>,
    ) -> Result<Self> {
        let mut pairs: Vec<((u32, u32), Prediction)> = Vec::new();
        for (u, m, p) in cells {
            if u as usize >= num_users || m as usize >= num_items {
                return domain(format!("cell ({u}, {m}) outside {num_users} x {num_items}"));
            }
            if let Some(g) = p.level {
                if g == 0 || g > levels {
                    return domain(format!("predicted level {g} outside [1, {levels}]"));
                }
            }
            pairs.push(((u, m), p));
        }
        pairs.reverse();
        pairs.sort_by_key(|(k, _)| *k);
        pairs.dedup_by_key(|(k, _)| *k);
        let (keys, values) = pairs.into_iter().unzip();
        Ok(CompletedMatrix {
            num_users,
            num_items,
            levels,
            liked,
            method,
            cells: Cells::Sparse { keys, values },
        })
    }

    /// Parse the output of [`CompletedMatrix::write_csv`].
    pub fn read_csv<R: std::io::BufRead>(
        reader: R,
        num_users: usize,
        num_items: usize,
        levels: Level,
        liked: Level,
        method: Algorithm,
    ) -> Result<Self> {
        let origin = std::path::PathBuf::from("<predictions>");
        let bad = |line: usize, message: String| Error::Parse {
            path: origin.clone(),
            line,
            message,
        };
        let mut cells = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(bad(i + 1, format!("expected 5 fields, got {}", f.len())));
            }
            let num = |s: &str| s.parse::<u32>().map_err(|_| bad(i + 1, format!("bad index '{s}'")));
            let (u, m) = (num(f[0])?, num(f[1])?);
            let p = if f[2] == "NA" {
                Prediction::EMPTY
            } else {
                let level = f[2].parse().map_err(|_| bad(i + 1, format!("bad level '{}'", f[2])))?;
                let float = |s: &str| s.parse::<f32>().map_err(|_| bad(i + 1, format!("bad margin '{s}'")));
                Prediction {
                    level: Some(level),
                    margin: float(f[3])?,
                    liked_margin: float(f[4])?,
                }
            };
            cells.push((u, m, p));
        }
        Self::from_cells(num_users, num_items, levels, liked, method, cells)
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn levels(&self) -> Level {
        self.levels
    }

    /// Level whose margin [`Prediction::liked_margin`] records.
    pub fn liked_level(&self) -> Level {
        self.liked
    }

    pub fn method(&self) -> Algorithm {
        self.method
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.cells, Cells::Dense(_))
    }

    /// `None` when the cell was not requested.
    pub fn get(&self, u: usize, m: usize) -> Option<Prediction> {
        if u >= self.num_users || m >= self.num_items {
            return None;
        }
        match &self.cells {
            Cells::Dense(d) => Some(d[u * self.num_items + m]),
            Cells::Sparse { keys, values } => keys
                .binary_search(&(u as u32, m as u32))
                .ok()
                .map(|i| values[i]),
        }
    }

    /// Predicted level, `None` if unpredicted or not requested.
    pub fn level(&self, u: usize, m: usize) -> Option<Level> {
        self.get(u, m).and_then(|p| p.level)
    }

    pub fn len(&self) -> usize {
        match &self.cells {
            Cells::Dense(d) => d.len(),
            Cells::Sparse { keys, .. } => keys.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every stored cell in row-major order.
    pub fn iter(&self) -> Box<dyn Iterator<Item = (usize, usize, Prediction)> + '_> {
        match &self.cells {
            Cells::Dense(d) => {
                let m = self.num_items;
                Box::new(d.iter().enumerate().map(move |(i, p)| (i / m, i % m, *p)))
            }
            Cells::Sparse { keys, values } => Box::new(
                keys.iter()
                    .zip(values)
                    .map(|(&(u, m), p)| (u as usize, m as usize, *p)),
            ),
        }
    }

    /// Row-major levels with 0 for unpredicted; requires a dense matrix.
    pub fn to_dense_levels(&self) -> Result<Vec<Level>> {
        match &self.cells {
            Cells::Dense(d) => Ok(d.iter().map(|p| p.level.unwrap_or(0)).collect()),
            Cells::Sparse { .. } => domain("matrix holds only requested cells"),
        }
    }

    pub fn unpredicted_count(&self) -> usize {
        self.iter().filter(|c| c.2.level.is_none()).count()
    }

    /// `user,item,prediction,margin,liked_margin`; unpredicted cells are
    /// written as `NA`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "user,item,prediction,margin,liked_margin")?;
        for (u, m, p) in self.iter() {
            match p.level {
                Some(g) => writeln!(w, "{u},{m},{g},{},{}", p.margin, p.liked_margin)?,
                None => writeln!(w, "{u},{m},NA,,")?,
            }
        }
        Ok(())
    }
}
