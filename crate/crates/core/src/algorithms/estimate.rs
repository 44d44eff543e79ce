//! Cluster-size estimation from the drop in sorted similarity scores.

use serde::{Deserialize, Serialize};

use super::select::sorted_normalized;
use crate::error::{domain, Result};
use crate::ratings::{Axis, RatingMatrix};
use crate::similarity::{NormalizedScore, SimilarityIndex};

/// Position of the largest consecutive drop in a descending sequence of
/// rational scores `(numerator, denominator)`: returns `T` such that the drop
/// sits between the `T`-th and `T+1`-th score. `T` is searched in
/// `[2, entities / 2]` (capped by the sequence length) and the smallest `T`
/// wins ties.
pub fn max_gap_cut(sorted: &[(i64, u64)], entities: usize) -> Result<usize> {
    if sorted.len() < 3 {
        return domain(format!("need at least 3 candidate scores, got {}", sorted.len()));
    }
    let lo = 2;
    let hi = (entities / 2).min(sorted.len() - 1).max(lo);
    // gap_t = s[t-1] - s[t] = (a q - b p) / (p q)
    let gap = |t: usize| -> (i128, i128) {
        let (a, p) = sorted[t - 1];
        let (b, q) = sorted[t];
        (a as i128 * q as i128 - b as i128 * p as i128, p as i128 * q as i128)
    };
    let mut best = lo;
    let (mut bn, mut bd) = gap(lo);
    for t in lo + 1..=hi {
        let (n, d) = gap(t);
        if n * bd > bn * d {
            best = t;
            bn = n;
            bd = d;
        }
    }
    Ok(best)
}

/// Max-gap cut of the normalized similarities to `anchor`, sorted
/// descending; entities without co-rated positions are left out.
pub fn estimate_t(r: &RatingMatrix, anchor: usize, axis: Axis) -> Result<usize> {
    let index = SimilarityIndex::new(r, axis);
    if anchor >= index.len() {
        return domain(format!("anchor {anchor} outside {} entities", index.len()));
    }
    let scores: Vec<(i64, u64)> = sorted_normalized(&index.pair_row(anchor), anchor)
        .into_iter()
        .filter_map(|s| match s {
            NormalizedScore::Ratio { sigma, co_rated } => Some((sigma, co_rated)),
            NormalizedScore::Undefined => None,
        })
        .collect();
    max_gap_cut(&scores, index.len())
}

/// `X_R / (U M)`: the fraction of observed cells.
pub fn observation_rate(r: &RatingMatrix) -> f64 {
    let cells = r.num_users() * r.num_items();
    if cells == 0 {
        0.0
    } else {
        r.nnz() as f64 / cells as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterSizeEstimate {
    pub axis: Axis,
    pub observation_rate: f64,
    pub size: usize,
    /// Entity the similarity scan was anchored at, when no hint was given.
    pub anchor: Option<usize>,
}

/// Cluster size along `axis`. With a cluster-count hint this is
/// `entities / K`; otherwise the scan is anchored at the entity with the
/// most ratings and the size is that anchor plus the entities above the
/// largest similarity drop.
pub fn estimate_cluster_size_on(r: &RatingMatrix, axis: Axis, k_hint: Option<usize>) -> Result<ClusterSizeEstimate> {
    if r.nnz() == 0 {
        return domain("cannot estimate a cluster size without observed ratings");
    }
    let (n, counts) = match axis {
        Axis::Users => (r.num_users(), (0..r.num_users()).map(|u| r.row_len(u)).collect::<Vec<_>>()),
        Axis::Items => (r.num_items(), r.column_counts()),
    };
    let observation_rate = observation_rate(r);
    if let Some(k) = k_hint {
        if k == 0 || k > n {
            return domain(format!("cluster count hint {k} outside [1, {n}]"));
        }
        return Ok(ClusterSizeEstimate {
            axis,
            observation_rate,
            size: n / k,
            anchor: None,
        });
    }
    let anchor = (0..n).max_by_key(|&i| (counts[i], std::cmp::Reverse(i))).unwrap_or(0);
    let t = estimate_t(r, anchor, axis)?;
    Ok(ClusterSizeEstimate {
        axis,
        observation_rate,
        size: t + 1,
        anchor: Some(anchor),
    })
}

/// User cluster size; see [`estimate_cluster_size_on`].
pub fn estimate_cluster_size(r: &RatingMatrix, k_hint: Option<usize>) -> Result<ClusterSizeEstimate> {
    estimate_cluster_size_on(r, Axis::Users, k_hint)
}
