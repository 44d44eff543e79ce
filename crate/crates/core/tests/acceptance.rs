//! Acceptance checks, one PASS/FAIL line each.
//!
//! The process exits 0 so the workspace test run stays usable; set
//! `ACCEPTANCE_STRICT=1` to exit 1 when any check fails. MovieLens checks
//! read `ML1M_RATINGS` or `data/ml-1m/ratings.dat` under the workspace root.

mod common;

use std::path::PathBuf;
use std::time::Instant;

use clusterrec::algorithms::{Algorithm, AlgorithmKind, CompletedMatrix};
use clusterrec::eval::{
    error_counts, evaluate, phase_sweep, run_protocol, sparse_user_error, top_x_error, AlgorithmPlan, EvalReport,
    ProtocolOptions, SizeRule, SweepGrid, SweepParam, SweepTable,
};
use clusterrec::ratings::{load_ratings, Axis, Level, RatingFormat, RatingMatrix};
use clusterrec::similarity::{modified_normalized_similarity, normalized_similarity, pair_stats};
use clusterrec::synth::{expected_similarity, generate, z1, z2, PairCase, SynthConfig};
use common::*;
use rand::Rng;

enum Outcome {
    Pass,
    Fail,
    Blocked,
}

struct Check {
    id: u8,
    name: &'static str,
    outcome: Outcome,
    detail: String,
}

fn check(id: u8, name: &'static str, ok: bool, detail: String) -> Check {
    Check {
        id,
        name,
        outcome: if ok { Outcome::Pass } else { Outcome::Fail },
        detail,
    }
}

fn recovered(table: &SweepTable) -> usize {
    table.rows.iter().filter(|r| r.recovered).count()
}

fn exact_recovery_check(id: u8, name: &'static str, cfg: SynthConfig, algorithm: AlgorithmKind) -> Check {
    let start = Instant::now();
    let grid = SweepGrid {
        param: SweepParam::Alpha,
        values: vec![cfg.alpha],
    };
    let table = phase_sweep(&cfg, &grid, 100, algorithm, 1.0).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let hits = recovered(&table);
    let wrong: usize = table.rows.iter().map(|r| r.wrong_cells + r.unpredicted_cells).sum();
    check(
        id,
        name,
        hits >= 95 && secs < 60.0,
        format!(
            "{hits}/100 exact recoveries (need >= 95), mean wrong cells {:.1}, {secs:.1} s",
            wrong as f64 / 100.0
        ),
    )
}

fn clustering_recovery() -> Check {
    let cfg = SynthConfig {
        users: 400,
        items: 400,
        clusters: 4,
        levels: 2,
        p: 0.9,
        alpha: 0.08,
        beta: 0.5,
        rich_users_per_cluster: 2,
        rich_items_per_cluster: 0,
        seed: 1,
        ..SynthConfig::default()
    };
    exact_recovery_check(1, "UCR exact recovery, 400x400, K=4, alpha=0.08", cfg, AlgorithmKind::Ucr)
}

fn coclustering_recovery() -> Check {
    let cfg = SynthConfig {
        users: 400,
        items: 400,
        clusters: 4,
        levels: 2,
        p: 0.9,
        alpha: 0.03,
        beta: 0.5,
        rich_users_per_cluster: 2,
        rich_items_per_cluster: 2,
        seed: 2,
        ..SynthConfig::default()
    };
    exact_recovery_check(2, "CoR exact recovery, 400x400, K=4, alpha=0.03", cfg, AlgorithmKind::Cor)
}

fn phase_transition() -> Check {
    let cfg = SynthConfig {
        users: 500,
        items: 500,
        clusters: 5,
        beta: 0.5,
        mu_cap: 0.6,
        seed: 3,
        ..SynthConfig::default()
    };
    let scale = 5.0 * 500f64.ln() / 500.0;
    let trials = 20;
    let steps = 9;
    let grid = SweepGrid::linear(SweepParam::Alpha, 0.2 * scale, 5.0 * scale, steps).unwrap();
    let table = phase_sweep(&cfg, &grid, trials, AlgorithmKind::Ucr, 1.0).unwrap();
    let fractions: Vec<f64> = table.recovery_fractions().into_iter().map(|(_, f)| f).collect();
    let slack = 2.0 / trials as f64 + 1e-12;
    let monotone = fractions.windows(2).all(|w| w[1] >= w[0] - slack);
    let (first, last) = (fractions[0], fractions[steps - 1]);
    let shown: Vec<String> = fractions.iter().map(|f| format!("{f:.2}")).collect();
    check(
        3,
        "UCR phase transition over alpha in [0.2, 5] K ln M / M",
        first <= 0.5 && last >= 0.95 && monotone,
        format!("recovery fractions [{}], monotone within 2 trials: {monotone}", shown.join(", ")),
    )
}

/// First user of `cluster` that is (or is not) information-rich.
fn pick(inst: &clusterrec::synth::GeneratedInstance, cluster: usize, rich: bool, skip: usize) -> usize {
    let per = inst.config.user_cluster_size();
    (cluster * per..(cluster + 1) * per)
        .filter(|&u| inst.clusters.is_rich_user(u) == rich)
        .nth(skip)
        .unwrap()
}

fn expectation_oracle() -> Check {
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    let mut bound_violations = 0;
    for levels in [2, 5] {
        for p in [0.6, 0.9] {
            let base = SynthConfig {
                users: 40,
                items: 200,
                clusters: 2,
                levels,
                p,
                alpha: 0.2,
                beta: 0.6,
                rich_users_per_cluster: 2,
                mu_cap: 0.95,
                ..SynthConfig::default()
            };
            // per case: sigma minus its conditional expectation given B
            let mut diffs = vec![Vec::new(); 6];
            for seed in 0..500 {
                let inst = generate(&SynthConfig { seed, ..base.clone() }).unwrap();
                let pairs = [
                    (pick(&inst, 0, true, 0), pick(&inst, 0, true, 1)),
                    (pick(&inst, 0, true, 0), pick(&inst, 0, false, 0)),
                    (pick(&inst, 0, true, 0), pick(&inst, 1, true, 0)),
                    (pick(&inst, 0, true, 0), pick(&inst, 1, false, 0)),
                    (pick(&inst, 0, false, 0), pick(&inst, 0, false, 1)),
                    (pick(&inst, 0, false, 0), pick(&inst, 1, false, 0)),
                ];
                for (i, (case, (u, v))) in PairCase::ALL.into_iter().zip(pairs).enumerate() {
                    let agree = (0..base.items).filter(|&m| inst.truth.get(u, m) == inst.truth.get(v, m)).count();
                    let mu = agree as f64 / base.items as f64;
                    let bounds = expected_similarity(case, &base, mu);
                    let sigma = pair_stats(&inst.observed, u, v, Axis::Users).unwrap().sigma() as f64;
                    diffs[i].push(sigma - bounds.upper);
                    if !case.same_cluster() {
                        let zero = expected_similarity(case, &base, 0.0);
                        bound_violations += (bounds.lower != zero.upper) as usize;
                    }
                }
            }
            for (i, d) in diffs.iter().enumerate() {
                let n = d.len() as f64;
                let mean = d.iter().sum::<f64>() / n;
                let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
                let z = mean / (var / n).sqrt();
                worst = worst.max(z.abs());
                if z.abs() > 3.0 {
                    failures.push(format!("{:?} G={levels} p={p}: {z:.2} SE", PairCase::ALL[i]));
                }
            }
        }
    }
    let mut rng = rng(4);
    let mut identity_err = 0.0f64;
    for _ in 0..10 {
        let g: Level = rng.random_range(2..=10);
        let p: f64 = rng.random_range(1.0 / g as f64..1.0);
        let lhs = z1(p, g) - z2(p, g);
        let rhs = (p - (1.0 - p) / (g as f64 - 1.0)).powi(2);
        identity_err = identity_err.max((lhs - rhs).abs());
    }
    check(
        4,
        "expected similarity closed forms vs Monte Carlo",
        failures.is_empty() && identity_err < 1e-12 && bound_violations == 0,
        format!(
            "24 case/G/p cells, worst |mean diff| = {worst:.2} SE{}; z1 - z2 identity max error {identity_err:.1e}",
            if failures.is_empty() { String::new() } else { format!(", failing: {}", failures.join("; ")) }
        ),
    )
}

fn brute_force_equivalence() -> Check {
    let mut rng = rng(5);
    let mut mismatches = Vec::new();
    for case in 0..100 {
        let users = rng.random_range(2..=8);
        let items = rng.random_range(2..=8);
        let levels = rng.random_range(2..=5);
        let density = rng.random_range(0.2..1.0);
        let r = random_matrix(&mut rng, users, items, levels, density);
        let rows = rows_of(&r);
        for a in 0..users {
            for b in 0..users {
                if a == b {
                    continue;
                }
                let (phi, sigma) = pair(&rows[a], &rows[b]);
                let s = pair_stats(&r, a, b, Axis::Users).unwrap();
                let norm = normalized_similarity(&r, a, b, Axis::Users).unwrap().value();
                let modified = modified_normalized_similarity(&r, a, b, Axis::Users).unwrap().value();
                let sup = support(&rows[b]);
                let ok = s.co_rated == phi
                    && s.sigma() == sigma
                    && norm.map(|x| (x - sigma as f64 / phi as f64).abs() < 1e-12) == (phi > 0).then_some(true)
                    && modified.map(|x| (x - sigma as f64 / (sup as f64).sqrt()).abs() < 1e-12)
                        == (sup > 0).then_some(true);
                if !ok {
                    mismatches.push(format!("case {case} pair ({a},{b})"));
                }
            }
        }
        let size = rng.random_range(2..=4);
        for algo in algorithms_for(users, items, size) {
            let got = dense_of(&algo.complete(&r).unwrap());
            if got != oracle(algo, &r) {
                mismatches.push(format!("case {case} {algo}"));
            }
        }
    }
    check(
        5,
        "similarity, normalized scores and votes vs brute force (100 instances)",
        mismatches.is_empty(),
        if mismatches.is_empty() {
            "all pairs and all seven algorithms agree".into()
        } else {
            format!("{} mismatches, first: {}", mismatches.len(), mismatches[0])
        },
    )
}

fn movielens_path() -> Option<PathBuf> {
    let path = std::env::var_os("ML1M_RATINGS")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/ml-1m/ratings.dat")));
    path.is_file().then_some(path)
}

fn blocked(id: u8, name: &'static str) -> Check {
    Check {
        id,
        name,
        outcome: Outcome::Blocked,
        detail: "MovieLens 1M ratings.dat not found (set ML1M_RATINGS)".into(),
    }
}

fn movielens_options(seed: u64, noise: f64) -> ProtocolOptions {
    ProtocolOptions {
        hide_fraction: 0.7,
        noise,
        seed,
        quantize: Some(3.5),
        top_x: vec![1],
        sparse_thresholds: Vec::new(),
        liked: None,
    }
}

fn estimated(kind: AlgorithmKind) -> AlgorithmPlan {
    AlgorithmPlan {
        kind,
        users: SizeRule::Estimate,
        items: SizeRule::Estimate,
    }
}

/// Mean (top-1 error, overall error) over three splits.
fn movielens_errors(data: &RatingMatrix, kind: AlgorithmKind, noise: f64) -> (f64, f64) {
    let mut top = 0.0;
    let mut overall = 0.0;
    for seed in 1..=3 {
        let (report, _) = run_protocol(data, &estimated(kind), &movielens_options(seed, noise)).unwrap();
        top += report.top_x_error[&1] / 3.0;
        overall += report.overall_error / 3.0;
    }
    (top, overall)
}

fn movielens(data: &Option<RatingMatrix>) -> (Check, Check) {
    const NAME6: &str = "MovieLens 1M: HCoR vs PAF top-1 and overall error";
    const NAME7: &str = "MovieLens 1M: HCoR top-1 error under 0.2 training noise";
    let Some(data) = data else {
        return (blocked(6, NAME6), blocked(7, NAME7));
    };
    let (h_top, h_all) = movielens_errors(data, AlgorithmKind::Hcor, 0.0);
    let (p_top, p_all) = movielens_errors(data, AlgorithmKind::Paf, 0.0);
    let ok6 = (h_top - 0.1227).abs() <= 0.03
        && (p_top - 0.14).abs() <= 0.03
        && (h_all - 0.292).abs() <= 0.02
        && (p_all - 0.3207).abs() <= 0.02
        && h_top < p_top
        && h_all < p_all;
    let c6 = check(
        6,
        NAME6,
        ok6,
        format!(
            "HCoR top-1 {:.2}% overall {:.2}%, PAF top-1 {:.2}% overall {:.2}% (targets 12.27 +/- 3, 29.2 +/- 2, 14 +/- 3, 32.07 +/- 2)",
            100.0 * h_top,
            100.0 * h_all,
            100.0 * p_top,
            100.0 * p_all
        ),
    );
    let (n_top, _) = movielens_errors(data, AlgorithmKind::Hcor, 0.2);
    let c7 = check(
        7,
        NAME7,
        n_top - h_top <= 0.05,
        format!(
            "top-1 error {:.2}% -> {:.2}% (+{:.2} points, limit +5)",
            100.0 * h_top,
            100.0 * n_top,
            100.0 * (n_top - h_top)
        ),
    );
    (c6, c7)
}

fn outputs(report: &EvalReport, pred: &CompletedMatrix, sweep: &SweepTable) -> Vec<u8> {
    let mut buf = report.to_json().unwrap().into_bytes();
    report.write_csv(&mut buf).unwrap();
    pred.write_csv(&mut buf).unwrap();
    sweep.write_csv(&mut buf).unwrap();
    buf
}

fn determinism() -> Check {
    let cfg = SynthConfig {
        users: 120,
        items: 120,
        clusters: 3,
        alpha: 0.2,
        beta: 0.6,
        mu_cap: 0.7,
        seed: 8,
        ..SynthConfig::default()
    };
    let data = generate(&cfg).unwrap().observed;
    let opts = ProtocolOptions {
        noise: 0.2,
        seed: 8,
        quantize: None,
        ..ProtocolOptions::default()
    };
    let grid = SweepGrid::linear(SweepParam::Alpha, 0.05, 0.3, 3).unwrap();
    let run = |threads: usize| -> Vec<Vec<u8>> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let sweep = phase_sweep(&SynthConfig { users: 60, items: 60, ..cfg.clone() }, &grid, 4, AlgorithmKind::Cor, 1.0)
                .unwrap();
            [AlgorithmKind::Ucr, AlgorithmKind::Hucr, AlgorithmKind::Hcor, AlgorithmKind::Paf]
                .into_iter()
                .map(|kind| {
                    let (report, pred) = run_protocol(&data, &estimated(kind), &opts).unwrap();
                    outputs(&report, &pred, &sweep)
                })
                .collect()
        })
    };
    let one = run(1);
    let four = run(4);
    let again = run(4);
    let same = one == four && four == again;
    check(
        8,
        "identical outputs at 1 and 4 worker threads",
        same,
        format!("{} byte streams compared, identical: {same}", one.len()),
    )
}

fn isolated_user() -> Check {
    let mut rng = rng(9);
    let (users, items) = (30, 30);
    let full = random_matrix(&mut rng, users, items, 2, 0.6);
    // user 0 keeps nothing for training; everything they rated is held out
    let mut train_cells = Vec::new();
    let mut test_cells = Vec::new();
    for (u, m, g) in full.iter() {
        if u == 0 || rng.random::<f64>() < 0.5 {
            test_cells.push((u, m, g));
        } else {
            train_cells.push((u, m, g));
        }
    }
    let train = RatingMatrix::from_triples(users, items, 2, train_cells).unwrap();
    let test = RatingMatrix::from_triples(users, items, 2, test_cells).unwrap();
    let opts = ProtocolOptions {
        quantize: None,
        top_x: vec![1, 3],
        sparse_thresholds: vec![1],
        ..ProtocolOptions::default()
    };
    let mut problems = Vec::new();
    let isolated = test.row_len(0);
    for algo in [
        Algorithm::Ucr { cluster_size: 5 },
        Algorithm::Icr { cluster_size: 5 },
        Algorithm::Cor {
            user_cluster_size: 5,
            item_cluster_size: 5,
        },
    ] {
        let pred = algo.predict_cells(&train, &test.support(), &Default::default()).unwrap();
        let report = evaluate(algo, &pred, &train, &test, &opts).unwrap();
        let no_voters = (0..items).filter(|&m| test.get(0, m).is_some() && pred.level(0, m).is_none()).count();
        // reference counts: a missing prediction is never correct
        let bad = test.iter().filter(|&(u, m, g)| pred.level(u, m) != Some(g)).count();
        let counts = error_counts(&pred, &test).unwrap();
        let top1 = top_x_error(&pred, &test, 1, None).unwrap();
        let sparse = sparse_user_error(&pred, &train, &test, &[1]).unwrap();
        let ok = no_voters == isolated
            && counts.unpredicted >= isolated
            && report.overall_error == bad as f64 / test.nnz() as f64
            && top1.selected == users
            && top1.errors >= 1
            && sparse[&1] == Some(1.0);
        if !ok {
            problems.push(format!("{algo}: {no_voters}/{isolated} cells without voters"));
        }
    }
    check(
        9,
        "entries without voters count as errors in every metric",
        problems.is_empty(),
        if problems.is_empty() {
            format!("isolated user with {isolated} hidden ratings: overall, top-x and sparse-user metrics all count them")
        } else {
            problems.join("; ")
        },
    )
}

fn main() {
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let data = movielens_path().map(|p| load_ratings(p, RatingFormat::MovielensDat).unwrap());
    let (c6, c7) = movielens(&data);
    let checks = vec![
        clustering_recovery(),
        coclustering_recovery(),
        phase_transition(),
        expectation_oracle(),
        brute_force_equivalence(),
        c6,
        c7,
        determinism(),
        isolated_user(),
    ];
    let mut failed = 0;
    for c in &checks {
        let tag = match c.outcome {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::Blocked => "FAIL (blocked)",
        };
        failed += !matches!(c.outcome, Outcome::Pass) as usize;
        println!("[{tag}] {}. {}: {}", c.id, c.name, c.detail);
    }
    println!("{} of {} criteria pass", checks.len() - failed, checks.len());
    if strict && failed > 0 {
        std::process::exit(1);
    }
}
