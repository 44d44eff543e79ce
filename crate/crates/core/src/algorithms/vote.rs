//! Plurality votes over integer tallies, optionally with a square-root
//! weighted term, compared exactly.

use std::cmp::Ordering;

use crate::ratings::Level;

/// Score of one level: `linear + sqrt(root)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Score {
    pub linear: u64,
    pub root: u64,
}

impl Score {
    pub fn count(n: u64) -> Self {
        Score { linear: n, root: 0 }
    }

    pub fn is_zero(self) -> bool {
        self.linear == 0 && self.root == 0
    }

    pub fn value(self) -> f64 {
        self.linear as f64 + (self.root as f64).sqrt()
    }
}

impl Ord for Score {
    fn cmp(&self, other: &Self) -> Ordering {
        cmp_root_sums(self.linear, self.root, other.linear, other.root)
    }
}

impl PartialOrd for Score {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exact comparison of `a1 + sqrt(c1)` with `a2 + sqrt(c2)`.
pub fn cmp_root_sums(a1: u64, c1: u64, a2: u64, c2: u64) -> Ordering {
    // compare sqrt(c1) with d + sqrt(c2)
    let d = a2 as i128 - a1 as i128;
    let (c1, c2) = (c1 as i128, c2 as i128);
    if d < 0 && c2 < d * d {
        // right side negative
        return Ordering::Greater;
    }
    // both sides non-negative: compare c1 with d^2 + c2 + 2 d sqrt(c2),
    // i.e. e = c1 - d^2 - c2 against 2 d sqrt(c2)
    let e = c1 - d * d - c2;
    let rhs_sign = if c2 == 0 { 0 } else { d.signum() };
    match (e.signum(), rhs_sign) {
        (s, r) if s != r => s.cmp(&r),
        (0, 0) => Ordering::Equal,
        (1, 1) => (e * e).cmp(&(4 * d * d * c2)),
        _ => (4 * d * d * c2).cmp(&(e * e)),
    }
}

/// Outcome of one cell's vote.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    /// Winning level, or `None` when nobody voted.
    pub level: Option<Level>,
    /// Winner's score minus the best other score; zero on a tie.
    pub margin: f32,
    /// Score of `liked` minus the best other score.
    pub liked_margin: f32,
}

impl Prediction {
    pub const EMPTY: Prediction = Prediction {
        level: None,
        margin: 0.0,
        liked_margin: f32::NEG_INFINITY,
    };
}

/// Plurality over `scores[g - 1]`; the smallest level wins ties.
pub fn decide(scores: &[Score], liked: Level) -> Prediction {
    if scores.iter().all(|s| s.is_zero()) {
        return Prediction::EMPTY;
    }
    let mut best = 0;
    for g in 1..scores.len() {
        if scores[g] > scores[best] {
            best = g;
        }
    }
    let best_other = |skip: usize| {
        scores
            .iter()
            .enumerate()
            .filter(|&(g, _)| g != skip)
            .map(|(_, s)| s.value())
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let margin = if scores
        .iter()
        .enumerate()
        .any(|(g, s)| g != best && *s == scores[best])
    {
        0.0
    } else {
        (scores[best].value() - best_other(best)) as f32
    };
    let li = liked as usize - 1;
    let liked_margin = if li < scores.len() {
        (scores[li].value() - best_other(li)) as f32
    } else {
        f32::NEG_INFINITY
    };
    Prediction {
        level: Some(best as Level + 1),
        margin,
        liked_margin,
    }
}

/// Plurality over plain counts.
pub fn plurality(counts: &[u32]) -> Option<Level> {
    let scores: Vec<Score> = counts.iter().map(|&c| Score::count(c as u64)).collect();
    decide(&scores, 1).level
}

/// Per-position tallies: `counts[pos * levels + g - 1]`.
#[derive(Clone, Debug)]
pub struct Tally {
    levels: usize,
    counts: Vec<u32>,
}

impl Tally {
    pub fn new(positions: usize, levels: Level) -> Self {
        Tally {
            levels: levels as usize,
            counts: vec![0; positions * levels as usize],
        }
    }

    pub fn clear(&mut self) {
        self.counts.fill(0);
    }

    pub fn add(&mut self, pos: usize, level: Level) {
        self.counts[pos * self.levels + level as usize - 1] += 1;
    }

    pub fn sub(&mut self, pos: usize, level: Level) {
        self.counts[pos * self.levels + level as usize - 1] -= 1;
    }

    pub fn at(&self, pos: usize) -> &[u32] {
        &self.counts[pos * self.levels..(pos + 1) * self.levels]
    }

    pub fn positions(&self) -> usize {
        self.counts.len() / self.levels.max(1)
    }

    /// Plurality at each position; `None` where nobody voted.
    pub fn plurality_row(&self) -> Vec<Option<Level>> {
        (0..self.positions()).map(|p| plurality(self.at(p))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plurality_rules() {
        assert_eq!(plurality(&[2, 1]), Some(1));
        assert_eq!(plurality(&[1, 1]), Some(1));
        assert_eq!(plurality(&[0, 0, 3]), Some(3));
        assert_eq!(plurality(&[0, 0]), None);
    }

    #[test]
    fn block_votes_one_one_two() {
        assert_eq!(plurality(&[2, 1]), Some(1));
    }

    #[test]
    fn root_weighted_example() {
        // g=1: 3 + 2 + sqrt(16) = 9; g=2: 2 + 2 + sqrt(4) = 6
        let d = decide(&[Score { linear: 5, root: 16 }, Score { linear: 4, root: 4 }], 2);
        assert_eq!(d.level, Some(1));
        assert_eq!(d.margin, 3.0);
        assert_eq!(d.liked_margin, -3.0);
    }

    #[test]
    fn exact_root_comparisons() {
        assert_eq!(cmp_root_sums(1, 4, 3, 0), Ordering::Equal);
        assert_eq!(cmp_root_sums(0, 2, 1, 0), Ordering::Greater);
        assert_eq!(cmp_root_sums(0, 0, 0, 1), Ordering::Less);
        assert_eq!(cmp_root_sums(5, 0, 0, 24), Ordering::Greater);
        assert_eq!(cmp_root_sums(5, 0, 0, 25), Ordering::Equal);
        assert_eq!(cmp_root_sums(5, 0, 0, 26), Ordering::Less);
        assert_eq!(cmp_root_sums(1, 2, 0, 5), Ordering::Greater); // 2.414 > 2.236
        assert_eq!(cmp_root_sums(0, 8, 1, 3), Ordering::Greater); // 2.828 > 2.732
        let mut scores = Vec::new();
        for a in 0..6u64 {
            for c in 0..30u64 {
                scores.push((a, c));
            }
        }
        for &(a1, c1) in &scores {
            for &(a2, c2) in &scores {
                let x = a1 as f64 + (c1 as f64).sqrt();
                let y = a2 as f64 + (c2 as f64).sqrt();
                let exact = cmp_root_sums(a1, c1, a2, c2);
                if (x - y).abs() > 1e-9 {
                    assert_eq!(exact, x.partial_cmp(&y).unwrap(), "{a1}+r{c1} vs {a2}+r{c2}");
                } else {
                    assert_eq!(exact, Ordering::Equal, "{a1}+r{c1} vs {a2}+r{c2}");
                }
            }
        }
    }

    #[test]
    fn empty_and_tied_decisions() {
        assert_eq!(decide(&[Score::default(); 3], 2), Prediction::EMPTY);
        let tie = decide(&[Score::count(2), Score::count(2)], 2);
        assert_eq!(tie.level, Some(1));
        assert_eq!(tie.margin, 0.0);
        assert_eq!(tie.liked_margin, 0.0);
    }

    #[test]
    fn tally_rows() {
        let mut t = Tally::new(3, 2);
        t.add(0, 2);
        t.add(0, 2);
        t.add(0, 1);
        t.add(2, 1);
        assert_eq!(t.plurality_row(), vec![Some(2), None, Some(1)]);
        t.sub(0, 2);
        t.sub(0, 2);
        assert_eq!(t.at(0), &[1, 0]);
    }
}
