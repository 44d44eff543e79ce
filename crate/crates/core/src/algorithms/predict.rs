//! Vote engines turning neighbor sets into predictions. All engines work in
//! "row space": rows are the entities the sets were built for.

use rayon::prelude::*;

use super::vote::{decide, Prediction, Score, Tally};
use crate::ratings::{Level, RatingMatrix};

/// Which columns to predict for each row.
pub(crate) enum Plan {
    All { rows: usize, cols: usize },
    Cells { per_row: Vec<Vec<u32>> },
}

impl Plan {
    pub(crate) fn from_cells(rows: usize, cells: &[(u32, u32)]) -> Self {
        let mut per_row = vec![Vec::new(); rows];
        for &(r, c) in cells {
            per_row[r as usize].push(c);
        }
        for cols in &mut per_row {
            cols.sort_unstable();
            cols.dedup();
        }
        Plan::Cells { per_row }
    }

    fn rows(&self) -> usize {
        match self {
            Plan::All { rows, .. } => *rows,
            Plan::Cells { per_row } => per_row.len(),
        }
    }

    pub(crate) fn columns(&self, row: usize) -> Vec<u32> {
        match self {
            Plan::All { cols, .. } => (0..*cols as u32).collect(),
            Plan::Cells { per_row } => per_row[row].clone(),
        }
    }

    fn is_empty_row(&self, row: usize) -> bool {
        match self {
            Plan::All { cols, .. } => *cols == 0,
            Plan::Cells { per_row } => per_row[row].is_empty(),
        }
    }
}

fn fill_tally(rows: &RatingMatrix, members: &[usize], tally: &mut Tally) {
    tally.clear();
    for &w in members {
        let (items, values) = rows.row(w);
        for (&m, &g) in items.iter().zip(values) {
            tally.add(m as usize, g);
        }
    }
}

fn counts_to_scores(counts: &[u32], out: &mut [Score]) {
    for (s, &c) in out.iter_mut().zip(counts) {
        *s = Score::count(c as u64);
    }
}

/// Per-row plurality over the members' ratings in each column.
pub(crate) fn row_vote(rows: &RatingMatrix, sets: &[Vec<usize>], plan: &Plan, liked: Level) -> Vec<Vec<Prediction>> {
    let g = rows.levels() as usize;
    (0..plan.rows())
        .into_par_iter()
        .map_init(
            || (Tally::new(rows.num_items(), rows.levels()), vec![Score::default(); g]),
            |(tally, scores), u| {
                if plan.is_empty_row(u) {
                    return Vec::new();
                }
                fill_tally(rows, &sets[u], tally);
                plan.columns(u)
                    .into_iter()
                    .map(|m| {
                        counts_to_scores(tally.at(m as usize), scores);
                        decide(scores, liked)
                    })
                    .collect()
            },
        )
        .collect()
}

/// Plurality over the `F_u x N_m` block.
pub(crate) fn block_vote(
    rows: &RatingMatrix,
    row_sets: &[Vec<usize>],
    col_sets: &[Vec<usize>],
    plan: &Plan,
    liked: Level,
) -> Vec<Vec<Prediction>> {
    let g = rows.levels() as usize;
    (0..plan.rows())
        .into_par_iter()
        .map_init(
            || (Tally::new(rows.num_items(), rows.levels()), vec![0u32; g], vec![Score::default(); g]),
            |(tally, sums, scores), u| {
                if plan.is_empty_row(u) {
                    return Vec::new();
                }
                fill_tally(rows, &row_sets[u], tally);
                plan.columns(u)
                    .into_iter()
                    .map(|m| {
                        sums.fill(0);
                        for &n in &col_sets[m as usize] {
                            for (s, c) in sums.iter_mut().zip(tally.at(n)) {
                                *s += c;
                            }
                        }
                        counts_to_scores(sums, scores);
                        decide(scores, liked)
                    })
                    .collect()
            },
        )
        .collect()
}

/// Three-region vote: column `m` over `F_u`, row `u` over `N_m`, and the
/// square root of the `F_u x N_m` block. The target entry never votes.
pub(crate) fn region_vote(
    rows: &RatingMatrix,
    row_sets: &[Vec<usize>],
    col_sets: &[Vec<usize>],
    plan: &Plan,
    liked: Level,
) -> Vec<Vec<Prediction>> {
    let g = rows.levels() as usize;
    let cols = rows.num_items();
    (0..plan.rows())
        .into_par_iter()
        .map_init(
            || {
                (
                    Tally::new(cols, rows.levels()),
                    vec![0 as Level; cols],
                    vec![0u64; 3 * g],
                    vec![Score::default(); g],
                )
            },
            |(tally, own, sums, scores), u| {
                if plan.is_empty_row(u) {
                    return Vec::new();
                }
                let members = &row_sets[u];
                fill_tally(rows, members, tally);
                rows.dense_row_into(u, own);
                let self_member = members.contains(&u);
                plan.columns(u)
                    .into_iter()
                    .map(|m| {
                        let m = m as usize;
                        sums.fill(0);
                        let (r1, rest) = sums.split_at_mut(g);
                        let (r2, r3) = rest.split_at_mut(g);
                        for (s, &c) in r1.iter_mut().zip(tally.at(m)) {
                            *s += c as u64;
                        }
                        for &n in &col_sets[m] {
                            if n != m && own[n] != 0 {
                                r2[own[n] as usize - 1] += 1;
                            }
                            for (s, &c) in r3.iter_mut().zip(tally.at(n)) {
                                *s += c as u64;
                            }
                        }
                        if self_member && own[m] != 0 {
                            let t = own[m] as usize - 1;
                            r1[t] -= 1;
                            if col_sets[m].contains(&m) {
                                r3[t] -= 1;
                            }
                        }
                        for k in 0..g {
                            scores[k] = Score {
                                linear: r1[k] + r2[k],
                                root: r3[k],
                            };
                        }
                        decide(scores, liked)
                    })
                    .collect()
            },
        )
        .collect()
}
