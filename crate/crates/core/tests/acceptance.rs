//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs without the libtest harness so the report is always
//! printed.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use dagforge::counting::ratio_to_f64;
use dagforge::oracle_stats::{tv_distance, uniform_over};
use dagforge::restricted::sample_connected_dag_counted;
use dagforge::sample_limit::{LIMIT_OUTPOINT_FRACTIONS, LIMIT_SCALE};
use dagforge::*;
use rayon::prelude::*;

const CHUNKS: u64 = 16;

/// Histogram of `count` draws split over fixed RNG streams, so the result
/// does not depend on the thread count.
fn histogram<K, F>(count: u64, seed: u64, draw: F) -> Histogram<K>
where
    K: Ord + Clone + Send,
    F: Fn(&mut RandomSource) -> K + Sync,
{
    (0..CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut rng = RandomSource::for_sample(seed, c);
            let share = count / CHUNKS + u64::from(c < count % CHUNKS);
            (0..share).map(|_| draw(&mut rng)).collect::<Histogram<K>>()
        })
        .reduce(Histogram::new, |mut a, b| {
            a.merge(&b);
            a
        })
}

fn uniform_keys(n: usize) -> BTreeMap<DagKey, f64> {
    uniform_over(enumerate_all_dags(n).unwrap().iter().map(Dag::key))
}

struct Report {
    failures: Vec<u32>,
}

impl Report {
    fn record(&mut self, id: u32, title: &str, ok: bool, detail: String) {
        println!("{} criterion {id}: {title} -- {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failures.push(id);
        }
    }
}

fn criterion_1() -> (bool, String) {
    let start = Instant::now();
    let table = build_count_table(30).unwrap();
    let mut ok = (1..=30).all(|n| total_inclusion_exclusion(n, &table).unwrap() == *table.total(n));
    let oracle: Vec<usize> = (1..=5).map(|n| enumerate_all_dags(n).unwrap().len()).collect();
    ok &= oracle == [1, 3, 25, 543, 29281];
    ok &= (1..=5).all(|n| *table.total(n) == BigUint::from(oracle[n - 1]));
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(1);
    (ok, format!("totals {oracle:?}, n <= 30 identities checked in {elapsed:.2?}"))
}

fn criterion_2() -> (bool, String) {
    let table = build_count_table(5).unwrap();
    let mut ok = true;
    let mut rows = Vec::new();
    for n in 3..=5 {
        let hist: Histogram<usize> = enumerate_all_dags(n).unwrap().iter().map(classify_outpoints).collect();
        let row: Vec<u64> = (1..=n).map(|k| hist.count(&k)).collect();
        ok &= (1..=n).all(|k| BigUint::from(row[k - 1]) == *table.a(n, k));
        rows.push(row);
    }
    ok &= rows[0] == [15, 9, 1];
    (ok, format!("rows {rows:?}"))
}

fn criterion_3() -> (bool, String) {
    let start = Instant::now();
    let table = build_count_table(20).unwrap();
    let worst = (1..=7)
        .map(|k| {
            let exact = ratio_to_f64(table.a(20, k), table.total(20));
            (exact - LIMIT_OUTPOINT_FRACTIONS[k - 1] as f64 / LIMIT_SCALE as f64).abs()
        })
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    (
        worst < 1e-10 && elapsed < Duration::from_secs(1),
        format!("max deviation {worst:.2e} in {elapsed:.2?}"),
    )
}

const SEEDS: u64 = 50;
const RUNS: [(usize, u64); 2] = [(3, 25_000), (4, 108_600)];

fn criterion_4() -> (bool, String) {
    let start = Instant::now();
    let table = build_count_table(4).unwrap();
    let mut passed = 0;
    let mut worst = 1.0f64;
    for (n, samples) in RUNS {
        let expected = uniform_keys(n);
        for seed in 0..SEEDS {
            let h = histogram(samples, seed, |rng| sample_uniform_dag(n, &table, rng).unwrap().key());
            let r = chi_square_uniformity(&h, &expected);
            worst = worst.min(r.p_value);
            passed += u64::from(r.p_value > 1e-3);
        }
    }
    let total = SEEDS * RUNS.len() as u64;
    let elapsed = start.elapsed();
    (
        passed * 100 >= 99 * total && elapsed < Duration::from_secs(60),
        format!("{passed}/{total} runs with p > 0.001 (smallest p {worst:.3e}) in {elapsed:.1?}"),
    )
}

fn criterion_5() -> (bool, String) {
    let half = Ratio::new(1, 2);
    let mut failed = 0;
    let mut largest = 0.0f64;
    for (n, samples) in RUNS {
        let expected = uniform_keys(n);
        for seed in 0..SEEDS {
            let h = histogram(samples, 1000 + seed, |rng| sample_triangular(n, half, rng).unwrap().key());
            let r = chi_square_uniformity(&h, &expected);
            largest = largest.max(r.p_value);
            failed += u64::from(r.p_value < 1e-6);
        }
    }
    let total = SEEDS * RUNS.len() as u64;
    let trials = 100_000u64;
    let empty = histogram(trials, 77, |rng| sample_triangular(3, half, rng).unwrap().edge_count() == 0);
    let freq = empty.count(&true) as f64 / trials as f64;
    let sigma = (0.125f64 * 0.875 / trials as f64).sqrt();
    let near_eighth = (freq - 0.125).abs() <= 3.5 * sigma;
    let far_from_uniform = (freq - 1.0 / 25.0).abs() > 3.5 * sigma;
    (
        failed == total && near_eighth && far_from_uniform,
        format!("{failed}/{total} runs rejected at p < 1e-6 (largest p {largest:.1e}); empty-graph frequency {freq:.4} vs 1/8"),
    )
}

fn criterion_6() -> (bool, String) {
    let start = Instant::now();
    let n = 25;
    let samples = 100_000;
    let table = build_count_table(n).unwrap();
    let limits = build_limit_tables(DEFAULT_N_SWITCH).unwrap();
    let marginals = |d: Dag| (classify_outpoints(&d), d.edge_count());
    let exact = histogram(samples, 6, |rng| marginals(sample_uniform_dag(n, &table, rng).unwrap()));
    let hybrid = histogram(samples, 60, |rng| marginals(sample_large_dag(n, &limits, &table, rng).unwrap()));
    let project = |h: &Histogram<(usize, usize)>, pick: fn(&(usize, usize)) -> usize| {
        let mut out = Histogram::new();
        for (k, c) in h.iter() {
            out.add_many(pick(k), c);
        }
        out
    };
    let outpoints = two_sample_test(&project(&exact, |k| k.0), &project(&hybrid, |k| k.0));
    let edges = two_sample_test(&project(&exact, |k| k.1), &project(&hybrid, |k| k.1));
    let elapsed = start.elapsed();
    (
        outpoints.p_value > 1e-3 && edges.p_value > 1e-3 && elapsed < Duration::from_secs(60),
        format!(
            "outpoints p = {:.3}, edges p = {:.3} in {elapsed:.1?}",
            outpoints.p_value, edges.p_value
        ),
    )
}

fn time<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn criterion_7() -> (bool, String) {
    let limits = build_limit_tables(DEFAULT_N_SWITCH).unwrap();
    let table = build_count_table(DEFAULT_N_SWITCH).unwrap();
    let mut rng = RandomSource::seeded(7);
    let (d1000, t1000) = time(|| sample_large_dag(1000, &limits, &table, &mut rng).unwrap());
    let (d5000, t5000) = time(|| sample_large_dag(5000, &limits, &table, &mut rng).unwrap());
    let bits_ok = [&d1000, &d5000].iter().all(|d| {
        let n = d.node_count();
        d.matrix_bytes() * 8 <= n * (n + 63)
    });
    // Best of three to damp scheduler noise.
    let build = |n| (0..3).map(|_| time(|| build_count_table(n).unwrap()).1).min().unwrap();
    let t50 = build(50);
    let t100 = build(100);
    let ratio = t100.as_secs_f64() / t50.as_secs_f64();
    let ok = t1000 < Duration::from_secs(5)
        && t5000 < Duration::from_secs(120)
        && bits_ok
        && t100 < Duration::from_secs(60)
        && ratio <= 20.0;
    (
        ok,
        format!(
            "n=1000 {t1000:.2?}, n=5000 {t5000:.2?} ({} arcs, matrix {} KiB), table build to 50 {t50:.2?} / to 100 {t100:.2?} (ratio {ratio:.1})",
            d5000.edge_count(),
            d5000.matrix_bytes() / 1024
        ),
    )
}

fn criterion_8() -> (bool, String) {
    let connected = enumerate_all_dags(4).unwrap().iter().filter(|d| is_weakly_connected(d)).count();
    let table = build_count_table(10).unwrap();
    let rate = |n: usize, trials: u64, seed: u64| {
        let mut rng = RandomSource::seeded(seed);
        let (mut accepted, mut attempts) = (0u64, 0u64);
        while attempts < trials {
            attempts += sample_connected_dag_counted(n, &table, &mut rng).unwrap().1;
            accepted += 1;
        }
        accepted as f64 / attempts as f64
    };
    let p = connected as f64 / 543.0;
    let trials = 100_000;
    let r4 = rate(4, trials, 8);
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    let r10 = rate(10, 20_000, 80);
    (
        connected == 446 && (r4 - p).abs() <= 3.0 * sigma && r10 > 0.99,
        format!("oracle 446/543 = {p:.4}, sampled rate n=4 {r4:.4} (3 sigma {:.4}), n=10 {r10:.4}", 3.0 * sigma),
    )
}

const SUB_SEEDS: u64 = 10;

/// Runs a test at `SUB_SEEDS` fixed seeds; it holds if at least nine in ten
/// give p > 0.001.
fn over_seeds(base: u64, test: impl Fn(u64) -> f64 + Sync) -> (bool, String) {
    let ps: Vec<f64> = (0..SUB_SEEDS).into_par_iter().map(|i| test(base + i)).collect();
    let passed = ps.iter().filter(|&&p| p > 1e-3).count() as u64;
    let min = ps.iter().copied().fold(1.0, f64::min);
    (passed * 10 >= 9 * SUB_SEEDS, format!("{passed}/{SUB_SEEDS} (min p {min:.3})"))
}

fn criterion_9() -> (bool, String) {
    let mut notes = Vec::new();
    let mut ok = true;
    // (a) non-binding limits: identical tables, same sampling law.
    let n_max = 12;
    let full = build_count_table(n_max).unwrap();
    let same = |t: &CountTable| {
        (1..=n_max).all(|n| {
            t.total(n) == full.total(n) && (1..=n).all(|k| t.a(n, k) == full.a(n, k) && t.b(n, k) == full.b(n, k))
        })
    };
    let tables_ok = same(&build_restricted_table(n_max, n_max - 1, None).unwrap())
        && same(&build_restricted_table(n_max, n_max - 1, Some(n_max - 1)).unwrap())
        && same(&build_children_limited_table(n_max, n_max - 1).unwrap());
    ok &= tables_ok;
    notes.push(format!("non-binding tables equal: {tables_ok}"));
    let samples = 100_000;
    let small = build_count_table(4).unwrap();
    let loose_in = build_restricted_table(4, 3, None).unwrap();
    let loose_children = build_children_limited_table(4, 3).unwrap();
    let base = |seed| histogram(samples, seed, |rng| sample_uniform_dag(4, &small, rng).unwrap().key());
    let (pass, msg) = over_seeds(900, |seed| {
        let other = histogram(samples, seed + 50, |rng| sample_max_in_dag(4, &loose_in, rng).unwrap().key());
        two_sample_test(&base(seed), &other).p_value
    });
    ok &= pass;
    notes.push(format!("non-binding max-in vs unrestricted {msg}"));
    let (pass, msg) = over_seeds(1000, |seed| {
        let other = histogram(samples, seed + 50, |rng| {
            sample_children_limited_dag(4, &loose_children, ChildrenStrategy::default(), rng)
                .unwrap()
                .key()
        });
        two_sample_test(&base(seed), &other).p_value
    });
    ok &= pass;
    notes.push(format!("non-binding children vs unrestricted {msg}"));

    // (b) children limit K = 1 at n = 4.
    let capped = build_children_limited_table(4, 1).unwrap();
    let valid = uniform_over(
        enumerate_all_dags(4)
            .unwrap()
            .iter()
            .filter(|d| (0..4).all(|u| d.out_degree(u) <= 1))
            .map(Dag::key),
    );
    ok &= valid.len() == 125;
    let with = |strategy, seed| {
        histogram(samples, seed, |rng| sample_children_limited_dag(4, &capped, strategy, rng).unwrap().key())
    };
    for (name, strategy, base_seed) in [("A", ChildrenStrategy::A, 1100), ("B", ChildrenStrategy::B, 1200)] {
        let (pass, msg) = over_seeds(base_seed, |seed| chi_square_uniformity(&with(strategy, seed), &valid).p_value);
        ok &= pass;
        notes.push(format!("children K=1 strategy {name} uniform over {} graphs {msg}", valid.len()));
    }
    let (pass, msg) = over_seeds(1300, |seed| {
        two_sample_test(&with(ChildrenStrategy::A, seed), &with(ChildrenStrategy::B, seed + 50)).p_value
    });
    ok &= pass;
    notes.push(format!("A vs B {msg}"));

    // (c) weighted p = 1/4 at n = 3.
    let p = Ratio::new(1u64, 4);
    let wt = build_weighted_table(3, p).unwrap();
    let target: BTreeMap<DagKey, f64> = enumerate_all_dags(3)
        .unwrap()
        .iter()
        .map(|d| {
            let l = d.edge_count() as i32;
            (d.key(), 0.25f64.powi(l) * 0.75f64.powi(3 - l))
        })
        .collect();
    let (pass, msg) = over_seeds(1400, |seed| {
        let h = histogram(samples, seed, |rng| sample_weighted_dag(3, p, &wt, rng).unwrap().key());
        chi_square_uniformity(&h, &target).p_value
    });
    ok &= pass;
    notes.push(format!("weighted p=1/4 {msg}"));
    (ok, notes.join("; "))
}

fn criterion_10() -> (bool, String) {
    let samples = 25_000u64;
    let expected = uniform_keys(3);
    let kept = McmcConfig::new(10_000, 100, false).unwrap();
    let mut rng = RandomSource::seeded(10);
    let mut chain = McmcChain::new(3, kept, &mut rng);
    let mixed: Histogram<DagKey> = (0..samples).map(|_| chain.next_sample(&mut rng).key()).collect();
    let good = chi_square_uniformity(&mixed, &expected);
    let short = McmcConfig::new(10, 1, false).unwrap();
    let unmixed = histogram(samples, 11, |rng| sample_mcmc(3, &short, rng).key());
    let bad = chi_square_uniformity(&unmixed, &expected);
    (
        good.p_value > 1e-3 && bad.p_value <= 1e-3,
        format!(
            "burn-in 1e4/thin 100 p = {:.3} (TV {:.4}); burn-in 10 p = {:.1e} (TV {:.4})",
            good.p_value,
            tv_distance(&mixed, &expected),
            bad.p_value,
            tv_distance(&unmixed, &expected)
        ),
    )
}

type Check = fn() -> (bool, String);

fn main() {
    let mut report = Report { failures: Vec::new() };
    let criteria: [(u32, &str, Check); 10] = [
        (1, "count identities", criterion_1),
        (2, "outpoint classification", criterion_2),
        (3, "limit fractions at n = 20", criterion_3),
        (4, "exact sampler uniformity", criterion_4),
        (5, "triangular sampler bias", criterion_5),
        (6, "hybrid matches exact at n = 25", criterion_6),
        (7, "scaling", criterion_7),
        (8, "connectivity fractions", criterion_8),
        (9, "restricted samplers", criterion_9),
        (10, "Markov chain burn-in", criterion_10),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    for (id, title, run) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let (ok, detail) = run();
        report.record(id, title, ok, detail);
    }
    if !report.failures.is_empty() {
        eprintln!("failed criteria: {:?}", report.failures);
        std::process::exit(1);
    }
}
