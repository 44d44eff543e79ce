//! Neighbor-set construction: the anchor-based clusters of the theory
//! algorithms, the three candidate sets of the hybrid algorithms, and the
//! top-k sets of the baseline.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::select::{anchor, by_modified, by_normalized, by_raw};
use super::vote::Tally;
use crate::ratings::{Level, RatingMatrix};
use crate::similarity::SimilarityIndex;

/// How a neighbor set was built.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Target, its anchor, and the entities closest to the anchor.
    Theory,
    /// Anchor plus the entities closest to it by normalized similarity.
    ViaRichAnchor,
    /// Closest entities by modified normalized similarity to the target.
    DirectModifiedNorm,
    /// Closest entities by raw similarity to the target.
    DirectRaw,
    /// Top-k entities by raw similarity, for the baseline.
    TopSimilar,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborSet {
    pub target: usize,
    /// Most similar entity by raw similarity, when one shares a position.
    pub anchor: Option<usize>,
    pub members: Vec<usize>,
    pub provenance: Provenance,
}

/// Run `f(u, anchors[u])` grouped by anchor, so each anchor's similarity row
/// is computed once. Output is indexed by entity.
fn per_anchor<T, F>(index: &SimilarityIndex, anchors: &[Option<usize>], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, Option<(usize, &[crate::similarity::PairStats])>) -> T + Sync,
{
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut loners = Vec::new();
    let mut by_anchor: Vec<Vec<usize>> = vec![Vec::new(); anchors.len()];
    for (u, a) in anchors.iter().enumerate() {
        match a {
            Some(v) => by_anchor[*v].push(u),
            None => loners.push(u),
        }
    }
    for (v, users) in by_anchor.into_iter().enumerate() {
        if !users.is_empty() {
            groups.push((v, users));
        }
    }
    let mut out: Vec<(usize, T)> = groups
        .par_iter()
        .flat_map_iter(|(v, users)| {
            let stats = index.pair_row(*v);
            users.iter().map(|&u| (u, f(u, Some((*v, &stats))))).collect::<Vec<_>>()
        })
        .collect();
    out.extend(loners.into_iter().map(|u| (u, f(u, None))));
    out.sort_unstable_by_key(|(u, _)| *u);
    out.into_iter().map(|(_, t)| t).collect()
}

fn anchors(index: &SimilarityIndex) -> Vec<Option<usize>> {
    (0..index.len())
        .into_par_iter()
        .map(|u| anchor(&index.pair_row(u), u))
        .collect()
}

/// `F_u = {u, v}` plus the `size - 2` entities with the highest normalized
/// similarity to the anchor `v`. Without an anchor the set is `{u}`.
pub fn theory_sets(index: &SimilarityIndex, size: usize) -> Vec<NeighborSet> {
    let anchors = anchors(index);
    per_anchor(index, &anchors, |u, found| match found {
        None => NeighborSet {
            target: u,
            anchor: None,
            members: vec![u],
            provenance: Provenance::Theory,
        },
        Some((v, stats)) => {
            let mut members = vec![u, v];
            members.extend(by_normalized(stats, &[u, v], size.saturating_sub(2)));
            NeighborSet {
                target: u,
                anchor: Some(v),
                members,
                provenance: Provenance::Theory,
            }
        }
    })
}

/// The three candidate sets of one entity, each of size `t - 1` and
/// excluding the entity itself.
pub fn hybrid_candidates(index: &SimilarityIndex, target: usize, t: usize) -> [NeighborSet; 3] {
    let stats = index.pair_row(target);
    let a = anchor(&stats, target);
    let first = a.map(|v| {
        let mut members = vec![v];
        members.extend(by_normalized(&index.pair_row(v), &[target, v], t.saturating_sub(2)));
        members
    });
    candidates_from(index, target, &stats, a, first, t)
}

fn candidates_from(
    index: &SimilarityIndex,
    target: usize,
    stats: &[crate::similarity::PairStats],
    a: Option<usize>,
    first: Option<Vec<usize>>,
    t: usize,
) -> [NeighborSet; 3] {
    let size = t.saturating_sub(1);
    [
        NeighborSet {
            target,
            anchor: a,
            members: first.unwrap_or_default(),
            provenance: Provenance::ViaRichAnchor,
        },
        NeighborSet {
            target,
            anchor: a,
            members: by_modified(stats, index, &[target], size),
            provenance: Provenance::DirectModifiedNorm,
        },
        NeighborSet {
            target,
            anchor: a,
            members: by_raw(stats, &[target], size),
            provenance: Provenance::DirectRaw,
        },
    ]
}

/// Per-position plurality of a set's rows.
pub fn super_row(rows: &RatingMatrix, members: &[usize], tally: &mut Tally) -> Vec<Option<Level>> {
    tally.clear();
    for &w in members {
        let (items, values) = rows.row(w);
        for (&m, &g) in items.iter().zip(values) {
            tally.add(m as usize, g);
        }
    }
    tally.plurality_row()
}

/// Raw similarity between an observed row and a super-entity row, skipping
/// positions where either is missing.
pub fn sigma_to_row(rows: &RatingMatrix, target: usize, other: &[Option<Level>]) -> i64 {
    let (items, values) = rows.row(target);
    items
        .iter()
        .zip(values)
        .filter_map(|(&m, &g)| other[m as usize].map(|h| if h == g { 1 } else { -1 }))
        .sum()
}

/// Index of the candidate whose super-entity is most similar to the target;
/// empty candidates are skipped and the smallest index wins ties.
pub fn choose_candidate(rows: &RatingMatrix, target: usize, candidates: &[NeighborSet], tally: &mut Tally) -> Option<usize> {
    let mut best: Option<(i64, usize)> = None;
    for (z, c) in candidates.iter().enumerate() {
        if c.members.is_empty() {
            continue;
        }
        let row = super_row(rows, &c.members, tally);
        let s = sigma_to_row(rows, target, &row);
        if best.is_none_or(|(b, _)| s > b) {
            best = Some((s, z));
        }
    }
    best.map(|(_, z)| z)
}

/// The winning candidate set of every entity.
pub fn hybrid_sets(index: &SimilarityIndex, t: usize) -> Vec<NeighborSet> {
    let rows = index.rows();
    let n = index.len();
    let size = t.saturating_sub(1);
    // anchor, modified and raw sets from each entity's own similarity row
    let direct: Vec<(Option<usize>, Vec<usize>, Vec<usize>)> = (0..n)
        .into_par_iter()
        .map(|u| {
            let stats = index.pair_row(u);
            (
                anchor(&stats, u),
                by_modified(&stats, index, &[u], size),
                by_raw(&stats, &[u], size),
            )
        })
        .collect();
    let anchors: Vec<Option<usize>> = direct.iter().map(|d| d.0).collect();
    let first: Vec<Vec<usize>> = per_anchor(index, &anchors, |u, found| match found {
        None => Vec::new(),
        Some((v, stats)) => {
            let mut members = vec![v];
            members.extend(by_normalized(stats, &[u, v], t.saturating_sub(2)));
            members
        }
    });
    direct
        .into_par_iter()
        .zip(first)
        .enumerate()
        .map_init(
            || Tally::new(rows.num_items(), rows.levels()),
            |tally, (u, ((a, modified, raw), first))| {
                let candidates = [
                    NeighborSet {
                        target: u,
                        anchor: a,
                        members: first,
                        provenance: Provenance::ViaRichAnchor,
                    },
                    NeighborSet {
                        target: u,
                        anchor: a,
                        members: modified,
                        provenance: Provenance::DirectModifiedNorm,
                    },
                    NeighborSet {
                        target: u,
                        anchor: a,
                        members: raw,
                        provenance: Provenance::DirectRaw,
                    },
                ];
                match choose_candidate(rows, u, &candidates, tally) {
                    Some(z) => candidates[z].clone(),
                    None => NeighborSet {
                        target: u,
                        anchor: a,
                        members: Vec::new(),
                        provenance: Provenance::ViaRichAnchor,
                    },
                }
            },
        )
        .collect()
}

/// The `k` entities most similar to each target by raw similarity.
pub fn top_k_sets(index: &SimilarityIndex, k: usize) -> Vec<NeighborSet> {
    (0..index.len())
        .into_par_iter()
        .map(|u| {
            let stats = index.pair_row(u);
            let members = by_raw(&stats, &[u], k);
            NeighborSet {
                target: u,
                anchor: members.first().copied(),
                members,
                provenance: Provenance::TopSimilar,
            }
        })
        .collect()
}
