//! Rating matrices, dataset ingestion, binary quantization, train/test masking
//! and noise injection.
//!
//! A [`RatingMatrix`] is a sparse `U x M` matrix whose stored entries are
//! rating levels in `1..=G`. Absent entries are erased. Indices are 0-based.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::seed::rng_from;

/// A rating level in `1..=G`. Erased entries are represented by absence.
pub type Level = u8;

/// Which entity a row of pairwise scores refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Users,
    Items,
}

impl Axis {
    pub fn other(self) -> Axis {
        match self {
            Axis::Users => Axis::Items,
            Axis::Items => Axis::Users,
        }
    }
}

/// Sparse rating matrix in compressed-row form. Immutable once built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatingMatrix {
    num_users: usize,
    num_items: usize,
    levels: Level,
    row_ptr: Vec<usize>,
    items: Vec<u32>,
    values: Vec<Level>,
}

impl RatingMatrix {
    /// Build from `(user, item, level)` triples. A later triple for the same
    /// cell replaces an earlier one.
    pub fn from_triples<I>(num_users: usize, num_items: usize, levels: Level, triples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, Level)>,
    {
        if levels < 2 {
            return domain(format!("rating levels G must be at least 2, got {levels}"));
        }
        let mut cells: Vec<(u32, u32, usize, Level)> = Vec::new();
        for (seq, (u, m, v)) in triples.into_iter().enumerate() {
            if u >= num_users || m >= num_items {
                return domain(format!(
                    "cell ({u}, {m}) outside a {num_users}x{num_items} matrix"
                ));
            }
            if v == 0 || v > levels {
                return domain(format!("rating {v} at ({u}, {m}) outside [1, {levels}]"));
            }
            cells.push((u as u32, m as u32, seq, v));
        }
        cells.sort_unstable_by_key(|&(u, m, seq, _)| (u, m, seq));
        let mut row_ptr = vec![0usize; num_users + 1];
        let mut items = Vec::with_capacity(cells.len());
        let mut values = Vec::with_capacity(cells.len());
        for (i, &(u, m, _, v)) in cells.iter().enumerate() {
            let last_for_cell = cells
                .get(i + 1)
                .is_none_or(|&(u2, m2, _, _)| (u2, m2) != (u, m));
            if last_for_cell {
                row_ptr[u as usize + 1] += 1;
                items.push(m);
                values.push(v);
            }
        }
        for u in 0..num_users {
            row_ptr[u + 1] += row_ptr[u];
        }
        Ok(RatingMatrix {
            num_users,
            num_items,
            levels,
            row_ptr,
            items,
            values,
        })
    }

    /// Build from a dense row-major grid where `0` marks an erased cell.
    pub fn from_dense(num_users: usize, num_items: usize, levels: Level, cells: &[Level]) -> Result<Self> {
        if cells.len() != num_users * num_items {
            return Err(Error::Dimension {
                expected: num_users * num_items,
                actual: cells.len(),
            });
        }
        let triples = cells
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(i, &v)| (i / num_items.max(1), i % num_items.max(1), v));
        Self::from_triples(num_users, num_items, levels, triples)
    }

    pub fn empty(num_users: usize, num_items: usize, levels: Level) -> Result<Self> {
        Self::from_triples(num_users, num_items, levels, std::iter::empty())
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

    /// Number of observed entries, `X_R`.
    pub fn nnz(&self) -> usize {
        self.items.len()
    }

    /// Observed items of `user` (ascending) and their levels.
    pub fn row(&self, user: usize) -> (&[u32], &[Level]) {
        let (lo, hi) = (self.row_ptr[user], self.row_ptr[user + 1]);
        (&self.items[lo..hi], &self.values[lo..hi])
    }

    pub fn row_len(&self, user: usize) -> usize {
        self.row_ptr[user + 1] - self.row_ptr[user]
    }

    pub fn get(&self, user: usize, item: usize) -> Option<Level> {
        let (items, values) = self.row(user);
        items
            .binary_search(&(item as u32))
            .ok()
            .map(|i| values[i])
    }

    /// Observed entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Level)> + '_ {
        (0..self.num_users).flat_map(move |u| {
            let (items, values) = self.row(u);
            items
                .iter()
                .zip(values)
                .map(move |(&m, &v)| (u, m as usize, v))
        })
    }

    /// Observed positions in row-major order.
    pub fn support(&self) -> Vec<(u32, u32)> {
        self.iter().map(|(u, m, _)| (u as u32, m as u32)).collect()
    }

    /// Number of observed entries per column.
    pub fn column_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_items];
        for &m in &self.items {
            counts[m as usize] += 1;
        }
        counts
    }

    pub fn transpose(&self) -> RatingMatrix {
        let mut row_ptr = vec![0usize; self.num_items + 1];
        for &m in &self.items {
            row_ptr[m as usize + 1] += 1;
        }
        for m in 0..self.num_items {
            row_ptr[m + 1] += row_ptr[m];
        }
        let mut cursor = row_ptr.clone();
        let mut items = vec![0u32; self.nnz()];
        let mut values = vec![0; self.nnz()];
        // Rows are visited in ascending order, so each column list stays sorted.
        for (u, m, v) in self.iter() {
            let slot = cursor[m];
            items[slot] = u as u32;
            values[slot] = v;
            cursor[m] += 1;
        }
        RatingMatrix {
            num_users: self.num_items,
            num_items: self.num_users,
            levels: self.levels,
            row_ptr,
            items,
            values,
        }
    }

    /// Keep only the given positions. `positions` must be a subset of the
    /// support; cells outside it are ignored.
    pub fn restrict(&self, positions: &[(u32, u32)]) -> RatingMatrix {
        let triples = positions.iter().filter_map(|&(u, m)| {
            self.get(u as usize, m as usize)
                .map(|v| (u as usize, m as usize, v))
        });
        Self::from_triples(self.num_users, self.num_items, self.levels, triples)
            .expect("restriction of a valid matrix is valid")
    }

    /// Apply `f` to every stored level, producing a matrix with `levels` levels.
    pub fn map_levels(&self, levels: Level, f: impl Fn(Level) -> Level) -> Result<RatingMatrix> {
        let triples: Vec<_> = self.iter().map(|(u, m, v)| (u, m, f(v))).collect();
        Self::from_triples(self.num_users, self.num_items, levels, triples)
    }

    /// Fill `buf` (length `M`) with row `user`, `0` marking erased cells.
    pub fn dense_row_into(&self, user: usize, buf: &mut [Level]) {
        buf.fill(0);
        let (items, values) = self.row(user);
        for (&m, &v) in items.iter().zip(values) {
            buf[m as usize] = v;
        }
    }

    /// Row-major dense copy, `0` marking erased cells.
    pub fn to_dense(&self) -> Vec<Level> {
        let mut out = vec![0; self.num_users * self.num_items];
        for (u, m, v) in self.iter() {
            out[u * self.num_items + m] = v;
        }
        out
    }

    /// Append one row, returning the augmented matrix.
    pub fn with_appended_row(&self, row: &[Option<Level>]) -> Result<RatingMatrix> {
        if row.len() != self.num_items {
            return Err(Error::Dimension {
                expected: self.num_items,
                actual: row.len(),
            });
        }
        let new_user = self.num_users;
        let triples: Vec<_> = self
            .iter()
            .chain(
                row.iter()
                    .enumerate()
                    .filter_map(|(m, v)| v.map(|v| (new_user, m, v))),
            )
            .collect();
        Self::from_triples(self.num_users + 1, self.num_items, self.levels, triples)
    }

    /// Write `user,item,rating` triples with 0-based indices.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "user,item,rating")?;
        for (u, m, v) in self.iter() {
            writeln!(w, "{u},{m},{v}")?;
        }
        Ok(())
    }
}

/// Input file layouts understood by [`load_ratings`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatingFormat {
    /// `UserID::MovieID::Rating::Timestamp`
    MovielensDat,
    /// `user,item,rating[,timestamp]`, optional header line.
    CsvTriples,
}

impl std::str::FromStr for RatingFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "movielens-dat" | "movielens" | "dat" => Ok(RatingFormat::MovielensDat),
            "csv-triples" | "csv" => Ok(RatingFormat::CsvTriples),
            other => Err(Error::Config(format!(
                "unknown rating format '{other}' (expected movielens-dat or csv-triples)"
            ))),
        }
    }
}

/// How raw ids are mapped onto matrix indices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdPolicy {
    /// Seen ids, sorted ascending, become `0..n`.
    #[default]
    Compact,
    /// Id `k` becomes index `k - 1`; dimensions are the largest id seen.
    OneBased,
    /// Id `k` becomes index `k`, as in files this crate writes.
    ZeroBased,
}

#[derive(Clone, Debug, Default)]
pub struct LoadOptions {
    /// Fix `G` instead of inferring it from the largest observed level.
    pub levels: Option<Level>,
    pub ids: IdPolicy,
}

/// A loaded rating file together with the raw ids of each row and column.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub ratings: RatingMatrix,
    pub user_ids: Vec<u64>,
    pub item_ids: Vec<u64>,
}

pub fn load_ratings(path: impl AsRef<Path>, format: RatingFormat) -> Result<RatingMatrix> {
    Ok(load_ratings_with(path, format, &LoadOptions::default())?.ratings)
}

pub fn load_ratings_with(path: impl AsRef<Path>, format: RatingFormat, opts: &LoadOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path)?;
    parse_ratings(BufReader::new(file), format, opts, path)
}

/// Parse ratings from any buffered reader. `origin` is only used in error
/// messages.
pub fn parse_ratings<R: BufRead>(reader: R, format: RatingFormat, opts: &LoadOptions, origin: &Path) -> Result<Dataset> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };

    let mut records: Vec<(u64, u64, u32)> = Vec::new();
    let mut seen_content = false;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = match format {
            RatingFormat::MovielensDat => line.split("::").collect(),
            RatingFormat::CsvTriples => line.split(',').map(str::trim).collect(),
        };
        let first_content = !seen_content;
        seen_content = true;
        if fields.len() < 3 || fields.len() > 4 {
            return Err(parse_err(
                lineno,
                format!("expected 3 or 4 fields, found {}", fields.len()),
            ));
        }
        let user = fields[0].parse::<u64>();
        let item = fields[1].parse::<u64>();
        if format == RatingFormat::CsvTriples && first_content && user.is_err() && item.is_err() {
            // header line
            continue;
        }
        let user = user.map_err(|e| parse_err(lineno, format!("bad user id '{}': {e}", fields[0])))?;
        let item = item.map_err(|e| parse_err(lineno, format!("bad item id '{}': {e}", fields[1])))?;
        let rating = parse_level(fields[2]).ok_or_else(|| {
            parse_err(lineno, format!("bad rating '{}'", fields[2]))
        })?;
        if let Some(ts) = fields.get(3) {
            ts.parse::<i64>()
                .map_err(|e| parse_err(lineno, format!("bad timestamp '{ts}': {e}")))?;
        }
        records.push((user, item, rating));
    }

    let observed_max = records.iter().map(|r| r.2).max().unwrap_or(0);
    let levels = match opts.levels {
        Some(g) => g,
        None => {
            if observed_max > Level::MAX as u32 {
                return domain(format!("rating {observed_max} exceeds the supported level range"));
            }
            (observed_max as Level).max(2)
        }
    };
    if let Some(&(u, m, r)) = records
        .iter()
        .find(|&&(_, _, r)| r == 0 || r > levels as u32)
    {
        return domain(format!(
            "rating {r} for user {u}, item {m} outside [1, {levels}]"
        ));
    }

    let (user_ids, user_index) = index_ids(records.iter().map(|r| r.0), opts.ids)?;
    let (item_ids, item_index) = index_ids(records.iter().map(|r| r.1), opts.ids)?;
    let triples = records
        .iter()
        .map(|&(u, m, r)| (user_index[&u], item_index[&m], r as Level));
    let ratings = RatingMatrix::from_triples(user_ids.len(), item_ids.len(), levels, triples)?;
    Ok(Dataset {
        ratings,
        user_ids,
        item_ids,
    })
}

fn parse_level(s: &str) -> Option<u32> {
    if let Ok(v) = s.parse::<u32>() {
        return Some(v);
    }
    let x = s.parse::<f64>().ok()?;
    (x.fract() == 0.0 && x >= 0.0 && x <= u32::MAX as f64).then_some(x as u32)
}

fn index_ids(ids: impl Iterator<Item = u64>, policy: IdPolicy) -> Result<(Vec<u64>, BTreeMap<u64, usize>)> {
    let mut index: BTreeMap<u64, usize> = ids.map(|id| (id, 0)).collect();
    match policy {
        IdPolicy::Compact => {
            for (i, slot) in index.values_mut().enumerate() {
                *slot = i;
            }
            let raw = index.keys().copied().collect();
            Ok((raw, index))
        }
        IdPolicy::OneBased => {
            if index.contains_key(&0) {
                return domain("id 0 cannot be mapped under the one-based id policy");
            }
            for (id, slot) in index.iter_mut() {
                *slot = (*id - 1) as usize;
            }
            let max = index.keys().next_back().copied().unwrap_or(0);
            Ok(((1..=max).collect(), index))
        }
        IdPolicy::ZeroBased => {
            for (id, slot) in index.iter_mut() {
                *slot = *id as usize;
            }
            let end = index.keys().next_back().map_or(0, |&m| m + 1);
            Ok(((0..end).collect(), index))
        }
    }
}

/// Binary level encoding the "liked" label (+1) after quantization.
pub const LIKED: Level = 2;
/// Binary level encoding the "disliked" label (-1) after quantization.
pub const DISLIKED: Level = 1;

/// Map ratings above `threshold` to [`LIKED`] and the rest to [`DISLIKED`].
pub fn quantize_binary(r: &RatingMatrix, threshold: f64) -> RatingMatrix {
    r.map_levels(2, |v| if v as f64 > threshold { LIKED } else { DISLIKED })
        .expect("binary levels are valid")
}

/// A partition of a matrix's support into training and held-out cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskSplit {
    pub train: Vec<(u32, u32)>,
    pub test: Vec<(u32, u32)>,
    pub hide_fraction: f64,
    pub seed: u64,
}

impl MaskSplit {
    /// Split `r` into `(train, test)` matrices.
    pub fn partition(&self, r: &RatingMatrix) -> (RatingMatrix, RatingMatrix) {
        (r.restrict(&self.train), r.restrict(&self.test))
    }

    /// Audit file: one `user,item,split` line per support cell, row-major.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "user,item,split")?;
        let mut all: Vec<((u32, u32), &str)> = self
            .train
            .iter()
            .map(|&p| (p, "train"))
            .chain(self.test.iter().map(|&p| (p, "test")))
            .collect();
        all.sort_unstable();
        for ((u, m), split) in all {
            writeln!(w, "{u},{m},{split}")?;
        }
        Ok(())
    }
}

/// Hide a uniformly random `round(hide_fraction * |support|)` cells of `r`.
pub fn split_mask(r: &RatingMatrix, hide_fraction: f64, seed: u64) -> Result<MaskSplit> {
    if !(0.0..=1.0).contains(&hide_fraction) {
        return domain(format!("hide fraction {hide_fraction} outside [0, 1]"));
    }
    let mut cells = r.support();
    let n_test = (hide_fraction * cells.len() as f64).round() as usize;
    cells.shuffle(&mut rng_from(seed));
    let mut test = cells.split_off(cells.len() - n_test);
    let mut train = cells;
    train.sort_unstable();
    test.sort_unstable();
    Ok(MaskSplit {
        train,
        test,
        hide_fraction,
        seed,
    })
}

/// Independently swap each observed binary rating to the other level with
/// probability `flip_prob`.
pub fn flip_noise(r: &RatingMatrix, flip_prob: f64, seed: u64) -> Result<RatingMatrix> {
    if r.levels() != 2 {
        return domain(format!(
            "flip noise needs a binary matrix, got G = {}",
            r.levels()
        ));
    }
    if !(0.0..=1.0).contains(&flip_prob) {
        return domain(format!("flip probability {flip_prob} outside [0, 1]"));
    }
    let mut rng = rng_from(seed);
    let triples: Vec<_> = r
        .iter()
        .map(|(u, m, v)| {
            let flip = rng.random::<f64>() < flip_prob;
            (u, m, if flip { 3 - v } else { v })
        })
        .collect();
    RatingMatrix::from_triples(r.num_users(), r.num_items(), 2, triples)
}
