//! Neighbor selection rules shared by the completion algorithms.

use std::cmp::Ordering;

use crate::similarity::{NormalizedScore, PairStats, SimilarityIndex};

/// Most similar entity by raw similarity among those sharing at least one
/// co-rated position; the smallest index wins ties.
pub fn anchor(stats: &[PairStats], target: usize) -> Option<usize> {
    let mut best: Option<(i64, usize)> = None;
    for (w, s) in stats.iter().enumerate() {
        if w == target || s.co_rated == 0 {
            continue;
        }
        if best.is_none_or(|(b, _)| s.sigma() > b) {
            best = Some((s.sigma(), w));
        }
    }
    best.map(|(_, w)| w)
}

/// The `count` best candidates under `better` (a strict total order where
/// `Less` means ranked higher), skipping `exclude`. Candidates rejected by
/// `eligible` are never selected.
pub fn top_by<F, E>(n: usize, exclude: &[usize], count: usize, eligible: E, better: F) -> Vec<usize>
where
    F: Fn(usize, usize) -> Ordering,
    E: Fn(usize) -> bool,
{
    let mut pool: Vec<usize> = (0..n)
        .filter(|w| !exclude.contains(w) && eligible(*w))
        .collect();
    let cmp = |a: &usize, b: &usize| better(*a, *b).then(a.cmp(b));
    if count < pool.len() {
        pool.select_nth_unstable_by(count, cmp);
        pool.truncate(count);
    }
    pool.sort_unstable_by(cmp);
    pool
}

/// Candidates ranked by normalized similarity to `anchor`, descending.
/// Pairs without co-rated positions are never selected.
pub fn by_normalized(stats: &[PairStats], exclude: &[usize], count: usize) -> Vec<usize> {
    top_by(
        stats.len(),
        exclude,
        count,
        |w| stats[w].co_rated > 0,
        |a, b| stats[b].normalized().cmp(&stats[a].normalized()),
    )
}

/// Candidates ranked by `sigma(target, w) / sqrt(|support(w)|)`, descending.
/// Entities with empty support are never selected.
pub fn by_modified(stats: &[PairStats], index: &SimilarityIndex, exclude: &[usize], count: usize) -> Vec<usize> {
    top_by(
        stats.len(),
        exclude,
        count,
        |w| index.support_len(w) > 0,
        |a, b| {
            let sa = stats[a].modified(index.support_len(a));
            let sb = stats[b].modified(index.support_len(b));
            sb.cmp(&sa)
        },
    )
}

/// Candidates ranked by raw similarity, descending.
pub fn by_raw(stats: &[PairStats], exclude: &[usize], count: usize) -> Vec<usize> {
    top_by(stats.len(), exclude, count, |_| true, |a, b| stats[b].sigma().cmp(&stats[a].sigma()))
}

/// Normalized scores sorted descending, undefined ones dropped.
pub fn sorted_normalized(stats: &[PairStats], target: usize) -> Vec<NormalizedScore> {
    let mut scores: Vec<NormalizedScore> = stats
        .iter()
        .enumerate()
        .filter(|&(w, s)| w != target && s.co_rated > 0)
        .map(|(_, s)| s.normalized())
        .collect();
    scores.sort_unstable_by(|a, b| b.cmp(a));
    scores
}
