//! Reference implementations written straight from the definitions: dense
//! rows, floating-point ratios, linear scans. Slow, but independent of the
//! library's sparse and exact-arithmetic code paths.

#![allow(dead_code)]

use clusterrec::algorithms::{Algorithm, CompletedMatrix};
use clusterrec::ratings::{Level, RatingMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Rows = Vec<Vec<Option<Level>>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, users: usize, items: usize, levels: Level, density: f64) -> RatingMatrix {
    let cells: Vec<Level> = (0..users * items)
        .map(|_| {
            if rng.random::<f64>() < density {
                rng.random_range(1..=levels)
            } else {
                0
            }
        })
        .collect();
    RatingMatrix::from_dense(users, items, levels, &cells).unwrap()
}

pub fn rows_of(r: &RatingMatrix) -> Rows {
    (0..r.num_users())
        .map(|u| (0..r.num_items()).map(|m| r.get(u, m)).collect())
        .collect()
}

pub fn transpose_rows(rows: &Rows) -> Rows {
    let cols = rows.first().map_or(0, |r| r.len());
    (0..cols).map(|m| rows.iter().map(|row| row[m]).collect()).collect()
}

/// `(co-rated count, agreements - disagreements)`.
pub fn pair(a: &[Option<Level>], b: &[Option<Level>]) -> (u32, i64) {
    let mut phi = 0;
    let mut sigma = 0;
    for (x, y) in a.iter().zip(b) {
        if let (Some(x), Some(y)) = (x, y) {
            phi += 1;
            sigma += if x == y { 1 } else { -1 };
        }
    }
    (phi, sigma)
}

pub fn support(a: &[Option<Level>]) -> usize {
    a.iter().filter(|x| x.is_some()).count()
}

/// Plurality over votes; smallest level on ties, `None` without votes.
pub fn plurality(votes: impl IntoIterator<Item = Level>, levels: Level) -> Option<Level> {
    let mut counts = vec![0usize; levels as usize + 1];
    for v in votes {
        counts[v as usize] += 1;
    }
    let mut best = None;
    let mut best_count = 0;
    for g in 1..=levels {
        if counts[g as usize] > best_count {
            best = Some(g);
            best_count = counts[g as usize];
        }
    }
    best
}

fn anchor(rows: &Rows, u: usize) -> Option<usize> {
    let mut best: Option<(i64, usize)> = None;
    for w in 0..rows.len() {
        if w == u {
            continue;
        }
        let (phi, sigma) = pair(&rows[u], &rows[w]);
        if phi == 0 {
            continue;
        }
        match best {
            Some((b, _)) if sigma <= b => {}
            _ => best = Some((sigma, w)),
        }
    }
    best.map(|(_, w)| w)
}

/// Highest `score` first, smaller index on ties; `None` scores never chosen.
fn top(n: usize, exclude: &[usize], count: usize, score: impl Fn(usize) -> Option<f64>) -> Vec<usize> {
    let mut scored: Vec<(f64, usize)> = (0..n)
        .filter(|w| !exclude.contains(w))
        .filter_map(|w| score(w).map(|s| (s, w)))
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    scored.into_iter().take(count).map(|(_, w)| w).collect()
}

fn normalized_to(rows: &Rows, v: usize) -> impl Fn(usize) -> Option<f64> + '_ {
    move |w| {
        let (phi, sigma) = pair(&rows[v], &rows[w]);
        (phi > 0).then(|| sigma as f64 / phi as f64)
    }
}

pub fn theory_sets(rows: &Rows, size: usize) -> Vec<Vec<usize>> {
    (0..rows.len())
        .map(|u| match anchor(rows, u) {
            None => vec![u],
            Some(v) => {
                let mut f = vec![u, v];
                f.extend(top(rows.len(), &[u, v], size.saturating_sub(2), normalized_to(rows, v)));
                f
            }
        })
        .collect()
}

pub fn super_row(rows: &Rows, members: &[usize], levels: Level) -> Vec<Option<Level>> {
    let cols = rows.first().map_or(0, |r| r.len());
    (0..cols)
        .map(|m| plurality(members.iter().filter_map(|&w| rows[w][m]), levels))
        .collect()
}

pub fn hybrid_sets(rows: &Rows, t: usize, levels: Level) -> Vec<Vec<usize>> {
    let n = rows.len();
    (0..n)
        .map(|u| {
            let first = match anchor(rows, u) {
                None => Vec::new(),
                Some(v) => {
                    let mut f = vec![v];
                    f.extend(top(n, &[u, v], t.saturating_sub(2), normalized_to(rows, v)));
                    f
                }
            };
            let modified = top(n, &[u], t - 1, |w| {
                let s = support(&rows[w]);
                (s > 0).then(|| pair(&rows[u], &rows[w]).1 as f64 / (s as f64).sqrt())
            });
            let raw = top(n, &[u], t - 1, |w| Some(pair(&rows[u], &rows[w]).1 as f64));
            let mut best: Option<(i64, Vec<usize>)> = None;
            for cand in [first, modified, raw] {
                if cand.is_empty() {
                    continue;
                }
                let (_, s) = pair(&rows[u], &super_row(rows, &cand, levels));
                match &best {
                    Some((b, _)) if s <= *b => {}
                    _ => best = Some((s, cand)),
                }
            }
            best.map(|(_, c)| c).unwrap_or_default()
        })
        .collect()
}

pub fn top_k_sets(rows: &Rows, k: usize) -> Vec<Vec<usize>> {
    (0..rows.len())
        .map(|u| top(rows.len(), &[u], k, |w| Some(pair(&rows[u], &rows[w]).1 as f64)))
        .collect()
}

pub type Dense = Vec<Vec<Option<Level>>>;

pub fn row_vote(rows: &Rows, sets: &[Vec<usize>], levels: Level) -> Dense {
    sets.iter().map(|f| super_row(rows, f, levels)).collect()
}

pub fn block_vote(rows: &Rows, user_sets: &[Vec<usize>], item_sets: &[Vec<usize>], levels: Level) -> Dense {
    (0..rows.len())
        .map(|u| {
            (0..item_sets.len())
                .map(|m| {
                    let votes = user_sets[u]
                        .iter()
                        .flat_map(|&w| item_sets[m].iter().filter_map(move |&n| rows[w][n]));
                    plurality(votes, levels)
                })
                .collect()
        })
        .collect()
}

pub fn region_vote(rows: &Rows, user_sets: &[Vec<usize>], item_sets: &[Vec<usize>], levels: Level) -> Dense {
    (0..rows.len())
        .map(|u| {
            (0..item_sets.len())
                .map(|m| {
                    let mut best: Option<(f64, Level)> = None;
                    for g in 1..=levels {
                        let is = |x: Option<Level>| x == Some(g);
                        let r1 = user_sets[u].iter().filter(|&&w| w != u && is(rows[w][m])).count();
                        let r2 = item_sets[m].iter().filter(|&&n| n != m && is(rows[u][n])).count();
                        let mut r3 = 0;
                        for &w in &user_sets[u] {
                            for &n in &item_sets[m] {
                                if (w, n) != (u, m) && is(rows[w][n]) {
                                    r3 += 1;
                                }
                            }
                        }
                        let score = (r1 + r2) as f64 + (r3 as f64).sqrt();
                        if score > 0.0 && best.is_none_or(|(b, _)| score > b) {
                            best = Some((score, g));
                        }
                    }
                    best.map(|(_, g)| g)
                })
                .collect()
        })
        .collect()
}

pub fn transpose_dense(d: &Dense) -> Dense {
    transpose_rows(d)
}

pub fn dense_of(c: &CompletedMatrix) -> Dense {
    (0..c.num_users())
        .map(|u| (0..c.num_items()).map(|m| c.level(u, m)).collect())
        .collect()
}

pub fn algorithms_for(users: usize, items: usize, size: usize) -> Vec<Algorithm> {
    let su = size.min(users);
    let si = size.min(items);
    vec![
        Algorithm::Ucr { cluster_size: su },
        Algorithm::Icr { cluster_size: si },
        Algorithm::Cor {
            user_cluster_size: su,
            item_cluster_size: si,
        },
        Algorithm::Hucr { t: su },
        Algorithm::Hicr { t: si },
        Algorithm::Hcor { t_users: su, t_items: si },
        Algorithm::Paf { k: (size - 1).min(users - 1) },
    ]
}

/// Dense completion computed by the reference routines above.
pub fn oracle(algo: Algorithm, r: &RatingMatrix) -> Dense {
    let rows = rows_of(r);
    let cols = transpose_rows(&rows);
    let g = r.levels();
    match algo {
        Algorithm::Ucr { cluster_size } => row_vote(&rows, &theory_sets(&rows, cluster_size), g),
        Algorithm::Icr { cluster_size } => transpose_dense(&row_vote(&cols, &theory_sets(&cols, cluster_size), g)),
        Algorithm::Cor {
            user_cluster_size,
            item_cluster_size,
        } => block_vote(
            &rows,
            &theory_sets(&rows, user_cluster_size),
            &theory_sets(&cols, item_cluster_size),
            g,
        ),
        Algorithm::Hucr { t } => row_vote(&rows, &hybrid_sets(&rows, t, g), g),
        Algorithm::Hicr { t } => transpose_dense(&row_vote(&cols, &hybrid_sets(&cols, t, g), g)),
        Algorithm::Hcor { t_users, t_items } => {
            region_vote(&rows, &hybrid_sets(&rows, t_users, g), &hybrid_sets(&cols, t_items, g), g)
        }
        Algorithm::Paf { k } => row_vote(&rows, &top_k_sets(&rows, k), g),
    }
}
