//! Pairwise co-rating, similarity and normalized similarity scores.
//!
//! For two users `u, v` the co-rating `phi` counts items both rated, the
//! similarity `sigma` is agreements minus disagreements over those items, the
//! normalized similarity is `sigma / phi`, and the modified normalized
//! similarity is `sigma / sqrt(|support(v)|)`. Item scores are the same
//! quantities computed on the transposed matrix.
//!
//! Everything is exact integer arithmetic; normalized scores are compared by
//! cross-multiplication, so rankings do not depend on floating point.

use std::cmp::Ordering;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::ratings::{Axis, RatingMatrix};

/// Co-rating and agreement count of one pair.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct PairStats {
    pub co_rated: u32,
    pub agree: u32,
}

impl PairStats {
    pub fn sigma(self) -> i64 {
        2 * self.agree as i64 - self.co_rated as i64
    }

    pub fn disagree(self) -> u32 {
        self.co_rated - self.agree
    }

    pub fn normalized(self) -> NormalizedScore {
        NormalizedScore::new(self.sigma(), self.co_rated as u64)
    }

    /// `sigma / sqrt(other_support)` where `other_support` is the rating
    /// count of the second entity of the pair.
    pub fn modified(self, other_support: usize) -> ModifiedScore {
        ModifiedScore::new(self.sigma(), other_support as u64)
    }
}

/// `sigma / phi`, or `Undefined` when `phi = 0`. `Undefined` orders below
/// every defined value.
#[derive(Clone, Copy, Debug)]
pub enum NormalizedScore {
    Undefined,
    Ratio { sigma: i64, co_rated: u64 },
}

impl NormalizedScore {
    pub fn new(sigma: i64, co_rated: u64) -> Self {
        if co_rated == 0 {
            NormalizedScore::Undefined
        } else {
            NormalizedScore::Ratio { sigma, co_rated }
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            NormalizedScore::Undefined => None,
            NormalizedScore::Ratio { sigma, co_rated } => Some(sigma as f64 / co_rated as f64),
        }
    }
}

impl Ord for NormalizedScore {
    fn cmp(&self, other: &Self) -> Ordering {
        use NormalizedScore::*;
        match (*self, *other) {
            (Undefined, Undefined) => Ordering::Equal,
            (Undefined, Ratio { .. }) => Ordering::Less,
            (Ratio { .. }, Undefined) => Ordering::Greater,
            (Ratio { sigma: a, co_rated: p }, Ratio { sigma: b, co_rated: q }) => {
                (a as i128 * q as i128).cmp(&(b as i128 * p as i128))
            }
        }
    }
}

impl PartialOrd for NormalizedScore {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for NormalizedScore {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for NormalizedScore {}

/// `sigma / sqrt(support)`, or `Undefined` when `support = 0`.
#[derive(Clone, Copy, Debug)]
pub enum ModifiedScore {
    Undefined,
    Root { sigma: i64, support: u64 },
}

impl ModifiedScore {
    pub fn new(sigma: i64, support: u64) -> Self {
        if support == 0 {
            ModifiedScore::Undefined
        } else {
            ModifiedScore::Root { sigma, support }
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            ModifiedScore::Undefined => None,
            ModifiedScore::Root { sigma, support } => Some(sigma as f64 / (support as f64).sqrt()),
        }
    }
}

impl Ord for ModifiedScore {
    fn cmp(&self, other: &Self) -> Ordering {
        use ModifiedScore::*;
        match (*self, *other) {
            (Undefined, Undefined) => Ordering::Equal,
            (Undefined, Root { .. }) => Ordering::Less,
            (Root { .. }, Undefined) => Ordering::Greater,
            (Root { sigma: a, support: p }, Root { sigma: b, support: q }) => {
                match a.signum().cmp(&b.signum()) {
                    Ordering::Equal => {}
                    ord => return ord,
                }
                // same sign: compare a^2 q with b^2 p, reversed for negatives
                let lhs = (a as i128 * a as i128) * q as i128;
                let rhs = (b as i128 * b as i128) * p as i128;
                if a >= 0 {
                    lhs.cmp(&rhs)
                } else {
                    rhs.cmp(&lhs)
                }
            }
        }
    }
}

impl PartialOrd for ModifiedScore {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for ModifiedScore {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ModifiedScore {}

fn axis_len(r: &RatingMatrix, axis: Axis) -> usize {
    match axis {
        Axis::Users => r.num_users(),
        Axis::Items => r.num_items(),
    }
}

fn check_pair(r: &RatingMatrix, a: usize, b: usize, axis: Axis) -> Result<()> {
    let n = axis_len(r, axis);
    if a >= n || b >= n {
        return domain(format!("index out of range: ({a}, {b}) with {n} entities"));
    }
    if a == b {
        return domain(format!("self-pair ({a}, {a}) has no similarity"));
    }
    Ok(())
}

/// Co-rating and agreement count of the pair `(a, b)` on `axis`.
pub fn pair_stats(r: &RatingMatrix, a: usize, b: usize, axis: Axis) -> Result<PairStats> {
    check_pair(r, a, b, axis)?;
    let mut stats = PairStats::default();
    match axis {
        Axis::Users => {
            // walk the shorter support, probe the longer one
            let (short, long) = if r.row_len(a) <= r.row_len(b) { (a, b) } else { (b, a) };
            let (items, values) = r.row(short);
            for (&m, &v) in items.iter().zip(values) {
                if let Some(w) = r.get(long, m as usize) {
                    stats.co_rated += 1;
                    stats.agree += (v == w) as u32;
                }
            }
        }
        Axis::Items => {
            for u in 0..r.num_users() {
                if let (Some(x), Some(y)) = (r.get(u, a), r.get(u, b)) {
                    stats.co_rated += 1;
                    stats.agree += (x == y) as u32;
                }
            }
        }
    }
    Ok(stats)
}

pub fn co_rating(r: &RatingMatrix, a: usize, b: usize, axis: Axis) -> Result<u32> {
    Ok(pair_stats(r, a, b, axis)?.co_rated)
}

pub fn similarity(r: &RatingMatrix, a: usize, b: usize, axis: Axis) -> Result<i64> {
    Ok(pair_stats(r, a, b, axis)?.sigma())
}

pub fn normalized_similarity(r: &RatingMatrix, a: usize, b: usize, axis: Axis) -> Result<NormalizedScore> {
    Ok(pair_stats(r, a, b, axis)?.normalized())
}

/// Asymmetric: the denominator is the rating count of `b`.
pub fn modified_normalized_similarity(r: &RatingMatrix, a: usize, b: usize, axis: Axis) -> Result<ModifiedScore> {
    let stats = pair_stats(r, a, b, axis)?;
    let support = match axis {
        Axis::Users => r.row_len(b),
        Axis::Items => r.column_counts()[b],
    };
    Ok(stats.modified(support))
}

/// Inverted-index scorer producing all pair statistics of one entity at a
/// time in `O(sum of co-raters' list lengths)`.
#[derive(Clone, Debug)]
pub struct SimilarityIndex {
    rows: RatingMatrix,
    cols: RatingMatrix,
}

impl SimilarityIndex {
    pub fn new(r: &RatingMatrix, axis: Axis) -> Self {
        let rows = match axis {
            Axis::Users => r.clone(),
            Axis::Items => r.transpose(),
        };
        let cols = rows.transpose();
        SimilarityIndex { rows, cols }
    }

    /// The matrix whose rows are the scored entities.
    pub fn rows(&self) -> &RatingMatrix {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.num_users()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn support_len(&self, a: usize) -> usize {
        self.rows.row_len(a)
    }

    /// Statistics of `(a, b)` for every `b`; the `a` slot is left zero.
    pub fn pair_row(&self, a: usize) -> Vec<PairStats> {
        let mut out = vec![PairStats::default(); self.len()];
        self.pair_row_into(a, &mut out);
        out
    }

    pub fn pair_row_into(&self, a: usize, out: &mut [PairStats]) {
        out.fill(PairStats::default());
        let (items, values) = self.rows.row(a);
        for (&m, &v) in items.iter().zip(values) {
            let (raters, levels) = self.cols.row(m as usize);
            for (&b, &w) in raters.iter().zip(levels) {
                let s = &mut out[b as usize];
                s.co_rated += 1;
                s.agree += (v == w) as u32;
            }
        }
        out[a] = PairStats::default();
    }
}

/// All unordered pairs of one axis, stored in canonical order: pair `(a, b)`
/// with `a < b` sits at `b (b - 1) / 2 + a`, so appending an entity appends
/// its pairs at the end.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimilarityTable {
    axis: Axis,
    entities: usize,
    phi: Vec<u32>,
    sigma: Vec<i32>,
}

fn pair_slot(a: usize, b: usize) -> usize {
    debug_assert!(a < b);
    b * (b - 1) / 2 + a
}

impl SimilarityTable {
    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn num_entities(&self) -> usize {
        self.entities
    }

    pub fn num_pairs(&self) -> usize {
        self.phi.len()
    }

    pub fn get(&self, a: usize, b: usize) -> Option<PairStats> {
        if a == b || a >= self.entities || b >= self.entities {
            return None;
        }
        let slot = pair_slot(a.min(b), a.max(b));
        let phi = self.phi[slot];
        let sigma = self.sigma[slot];
        Some(PairStats {
            co_rated: phi,
            agree: ((sigma as i64 + phi as i64) / 2) as u32,
        })
    }

    pub fn phi(&self, a: usize, b: usize) -> Option<u32> {
        self.get(a, b).map(|s| s.co_rated)
    }

    pub fn sigma(&self, a: usize, b: usize) -> Option<i64> {
        self.get(a, b).map(PairStats::sigma)
    }

    /// Statistics of `(a, b)` for every `b`; the `a` slot is zero.
    pub fn row(&self, a: usize) -> Vec<PairStats> {
        (0..self.entities)
            .map(|b| self.get(a, b).unwrap_or_default())
            .collect()
    }

    /// `(a, b, phi, sigma)` in canonical order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, u32, i32)> + '_ {
        (1..self.entities).flat_map(move |b| {
            (0..b).map(move |a| {
                let slot = pair_slot(a, b);
                (a, b, self.phi[slot], self.sigma[slot])
            })
        })
    }

    /// Append a new entity given its statistics against every existing one.
    pub fn push_entity(&mut self, stats: &[PairStats]) -> Result<()> {
        if stats.len() != self.entities {
            return Err(crate::error::Error::Dimension {
                expected: self.entities,
                actual: stats.len(),
            });
        }
        for s in stats {
            self.phi.push(s.co_rated);
            self.sigma.push(s.sigma() as i32);
        }
        self.entities += 1;
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "a,b,phi,sigma")?;
        for (a, b, phi, sigma) in self.pairs() {
            writeln!(w, "{a},{b},{phi},{sigma}")?;
        }
        Ok(())
    }
}

/// Scores of every unordered pair on `axis`. Output is identical whether or
/// not `parallel` is set.
pub fn similarity_table(r: &RatingMatrix, axis: Axis, parallel: bool) -> SimilarityTable {
    let index = SimilarityIndex::new(r, axis);
    let n = index.len();
    let lower = |b: usize| -> Vec<PairStats> {
        let row = index.pair_row(b);
        row[..b].to_vec()
    };
    let blocks: Vec<Vec<PairStats>> = if parallel {
        (0..n).into_par_iter().map(lower).collect()
    } else {
        (0..n).map(lower).collect()
    };
    let mut table = SimilarityTable {
        axis,
        entities: 0,
        phi: Vec::with_capacity(n * n.saturating_sub(1) / 2),
        sigma: Vec::with_capacity(n * n.saturating_sub(1) / 2),
    };
    for block in blocks {
        table.push_entity(&block).expect("block length matches");
    }
    table
}
