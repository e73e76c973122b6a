//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! (visible with `cargo test --test acceptance -- --nocapture`). Every
//! tolerance is pinned here; synthetic cities use frozen seeds, so all
//! checks are deterministic.

use gridhot::detect::{detect, DetectionParams, MinStops, RadiusSpec};
use gridhot::grid::{Cell, CellPointSet, GridSpec, Point};
use gridhot::levels::{classify_stop_counts, loubar_threshold};
use gridhot::neighbors::{count_within, knn_distances};
use gridhot::patterns::{
    coverage_ratio, inhibit_curve, normalized_density_pairs, pattern_report, PatternConfig,
};
use gridhot::rng::derive_seed;
use gridhot::sim::{
    mechanism_experiment, rmse_compare, simulate_cascade, simulate_level, Mechanism,
    MechanismParams,
};
use gridhot::synth::{generate, AccompanySpec, Inhibition, SyntheticCitySpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;
use std::time::Instant;

fn criterion(n: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {n} ({name}): {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {n} ({name}) failed: {detail}");
}

fn grid(n: usize) -> GridSpec {
    GridSpec::new(114.2, 30.5, 10.0, n, n, 30.55).unwrap()
}

fn random_cells(n: usize, extent: usize, rng: &mut ChaCha8Rng) -> Vec<Cell> {
    let mut cells = std::collections::BTreeSet::new();
    while cells.len() < n {
        cells.insert(Cell::new(
            rng.random_range(0..extent),
            rng.random_range(0..extent),
        ));
    }
    cells.into_iter().collect()
}

/// Criterion 1: exact/1e-9 agreement of the spatial primitives with
/// independent brute-force implementations on random configurations.
#[test]
fn criterion_1_oracle_equivalence() {
    let started = Instant::now();
    let g = grid(600);
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let rel = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1.0);
    let mut checks = 0usize;

    for case in 0..100 {
        let n_targets = rng.random_range(1..=200);
        let targets = CellPointSet::new(random_cells(n_targets, 600, &mut rng)).unwrap();
        let q = Point::new(
            rng.random::<f64>() * 6600.0 - 300.0,
            rng.random::<f64>() * 6600.0 - 300.0,
        );

        // knn_distances vs full sort.
        let k = rng.random_range(1..=n_targets);
        let got = knn_distances(q, &targets, k, &g).unwrap();
        let mut all: Vec<f64> = targets
            .iter()
            .map(|&c| q.dist2(&g.cell_center(c)))
            .collect();
        all.sort_by(|a, b| a.total_cmp(b));
        assert_eq!(got.len(), k, "case {case}");
        for (a, b) in got.iter().zip(all.iter().map(|d2| d2.sqrt())) {
            assert!(rel(*a, b), "knn mismatch case {case}: {a} vs {b}");
        }

        // count_within vs linear scan (exact).
        let d = rng.random::<f64>() * 3000.0;
        let brute = targets
            .iter()
            .filter(|&&c| q.dist2(&g.cell_center(c)) < d * d)
            .count();
        assert_eq!(count_within(q, &targets, d, &g), brute, "count case {case}");
        checks += 2;
    }

    let mut disjoint_sets = |na: usize, nb: usize, rng: &mut ChaCha8Rng| {
        let all = random_cells(na + nb, 600, rng);
        (
            CellPointSet::new(all[..na].to_vec()).unwrap(),
            CellPointSet::new(all[na..].to_vec()).unwrap(),
        )
    };

    for case in 0..100 {
        let na = rng.random_range(1..=100);
        let nb = rng.random_range(1..=100);
        let (a, b) = disjoint_sets(na, nb, &mut rng);

        // coverage_ratio vs nearest-distance filter (exact fraction).
        let r = rng.random::<f64>() * 4000.0;
        let got = coverage_ratio(&a, &b, r, &g).unwrap();
        let brute = b
            .iter()
            .filter(|&&x| {
                a.iter()
                    .map(|&y| g.cell_center(x).dist2(&g.cell_center(y)))
                    .fold(f64::INFINITY, f64::min)
                    < r * r
            })
            .count() as f64
            / nb as f64;
        assert_eq!(got, brute, "coverage case {case}");

        // normalized_density_pairs vs linear-scan counts and maxima.
        let d_count = 200.0 + rng.random::<f64>() * 2000.0;
        let pairs = normalized_density_pairs(&a, &b, d_count, &g).unwrap();
        let cnt = |x: Cell, t: &CellPointSet| {
            t.iter()
                .filter(|&&y| g.cell_center(x).dist2(&g.cell_center(y)) < d_count * d_count)
                .count()
        };
        let max_same = a.iter().map(|&x| cnt(x, &a)).max().unwrap() as f64;
        let max_next = a.iter().map(|&x| cnt(x, &b)).max().unwrap() as f64;
        for (i, &x) in a.iter().enumerate() {
            let same = cnt(x, &a) as f64 / max_same;
            let next = if max_next == 0.0 {
                0.0
            } else {
                cnt(x, &b) as f64 / max_next
            };
            assert_eq!(pairs.pairs[i], (same, next), "ndp case {case}");
        }

        // rmse_compare vs brute-force counting.
        let d_rmse = 100.0 + rng.random::<f64>() * 1500.0;
        let got = rmse_compare(&a, &b, d_rmse, &g).unwrap();
        let brute = {
            let cnt_d = |x: Cell, t: &CellPointSet| {
                t.iter()
                    .filter(|&&y| g.cell_center(x).dist2(&g.cell_center(y)) < d_rmse * d_rmse)
                    .count() as f64
            };
            let ss: f64 = a
                .iter()
                .map(|&x| {
                    let diff = cnt_d(x, &a) - cnt_d(x, &b);
                    diff * diff
                })
                .sum();
            (ss / na as f64).sqrt()
        };
        assert!(rel(got, brute), "rmse case {case}: {got} vs {brute}");
        checks += 3;
    }

    let elapsed = started.elapsed();
    criterion(
        1,
        "oracle equivalence",
        elapsed.as_secs_f64() < 10.0,
        &format!("{checks} oracle checks in {elapsed:.2?} (budget 10 s)"),
    );
}

/// Criterion 2: Loubar classification reproduces hand-derived partitions and
/// satisfies the partition properties on random inputs, with per-round
/// thresholds matching the closed form 1 - mean/max.
#[test]
fn criterion_2_loubar_correctness() {
    // Hand case: all equal -> one level.
    let p = classify_stop_counts(&[5, 5, 5, 5]).unwrap();
    assert_eq!(p.levels.len(), 1);
    assert_eq!(p.levels[0].len(), 4);

    // Hand case: [1,2,3,4,10] -> {10,4}, {3,2}, {1}.
    let stops = [1u64, 2, 3, 4, 10];
    let p = classify_stop_counts(&stops).unwrap();
    let as_values: Vec<Vec<u64>> = p
        .levels
        .iter()
        .map(|l| l.iter().map(|&i| stops[i]).collect())
        .collect();
    assert_eq!(as_values, vec![vec![10, 4], vec![3, 2], vec![1]]);

    // 100 random inputs: disjoint, exhaustive, popularity-monotone, and
    // recorded thresholds equal the closed-form oracle per round.
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for case in 0..100 {
        let n = rng.random_range(1..60);
        let values: Vec<u64> = (0..n).map(|_| rng.random_range(1..2000)).collect();
        let p = classify_stop_counts(&values).unwrap();
        let mut seen = vec![false; values.len()];
        for level in &p.levels {
            for &i in level {
                assert!(!seen[i], "case {case}: duplicate assignment");
                seen[i] = true;
            }
        }
        assert!(seen.iter().all(|&s| s), "case {case}: not exhaustive");
        for w in p.levels.windows(2) {
            let min_hi = w[0].iter().map(|&i| values[i]).min().unwrap();
            let max_lo = w[1].iter().map(|&i| values[i]).max().unwrap();
            assert!(min_hi >= max_lo, "case {case}: levels not monotone");
        }
        // Replay the iteration with the closed-form threshold oracle.
        let mut remaining: Vec<u64> = values.clone();
        remaining.sort_unstable();
        for (round, &threshold) in p.thresholds.iter().enumerate() {
            let oracle = loubar_threshold(&remaining).unwrap();
            assert!(
                (threshold - oracle).abs() < 1e-12,
                "case {case} round {round}: {threshold} vs oracle {oracle}"
            );
            let removed = p.levels[round].len();
            remaining.truncate(remaining.len() - removed);
        }
    }
    criterion(
        2,
        "Loubar correctness",
        true,
        "hand partitions and 100 random partition checks",
    );
}

/// Criterion 3: elbow-selected radius within +-1 cell of the planted radius
/// and exact recovery of all 20 planted centers, under 30 s at 2000x2000.
#[test]
fn criterion_3_detection_ground_truth() {
    let started = Instant::now();
    let spec = SyntheticCitySpec {
        origin_lon: 114.2,
        origin_lat: 30.5,
        cell_size: 10.0,
        n_rows: 2000,
        n_cols: 2000,
        street_spacing_cells: 25,
        planted_radius_cells: 4,
        n_level1: 20,
        level_multipliers: vec![],
        accompany: None,
        inhibition: Inhibition::None,
        stop_scatter_sigma: 38.0,
        stop_window_cells: Some(3),
        stops_per_hotspot: vec![200],
        seed: 20240801,
    };
    let city = generate(&spec).unwrap();
    let raster = city.grid.bin_points(&city.stops).unwrap().raster;
    let params = DetectionParams {
        radius_cells: RadiusSpec::Auto,
        radius_search_range: (1, 15),
        min_stops: MinStops::Fixed(1),
        ..Default::default()
    };
    let det = detect(&raster, None, &params).unwrap();
    let planted: HashSet<Cell> = city.levels[0].cells().iter().copied().collect();
    let found: HashSet<Cell> = det.hotspots.iter().map(|h| h.center).collect();
    let recall = planted.intersection(&found).count() as f64 / planted.len() as f64;
    let precision = if found.is_empty() {
        0.0
    } else {
        planted.intersection(&found).count() as f64 / found.len() as f64
    };
    let radius_ok = det.radius_cells.abs_diff(4) <= 1;
    let elapsed = started.elapsed();
    criterion(
        3,
        "detection ground truth",
        recall == 1.0 && precision == 1.0 && radius_ok && elapsed.as_secs_f64() < 30.0,
        &format!(
            "recall {recall} precision {precision}, elbow radius {} (planted 4), {elapsed:.2?} (budget 30 s)",
            det.radius_cells
        ),
    );
}

fn accompany_city() -> gridhot::synth::SyntheticCity {
    let spec = SyntheticCitySpec {
        origin_lon: 114.2,
        origin_lat: 30.5,
        cell_size: 10.0,
        n_rows: 2000,
        n_cols: 2000,
        street_spacing_cells: 10,
        planted_radius_cells: 4,
        n_level1: 20,
        level_multipliers: vec![6, 12],
        accompany: Some(AccompanySpec {
            k_nearest: 3,
            alpha: 2.0,
            d_cut: 600.0,
        }),
        inhibition: Inhibition::None,
        stop_scatter_sigma: 12.0,
        stop_window_cells: None,
        stops_per_hotspot: vec![50, 20, 10],
        seed: 4001,
    };
    generate(&spec).unwrap()
}

/// Criterion 4: on the accompany-planted city the observed mean-KNN curve
/// lies below both null q10 bands for all k <= 10, and the observed coverage
/// curve lies above both q90 bands for all r in [100, 1000] m, n_runs = 100.
#[test]
fn criterion_4_accompanying_pattern() {
    let started = Instant::now();
    let city = accompany_city();
    let config = PatternConfig {
        k_max: 10,
        radii: (0..=40).map(|i| i as f64 * 50.0).collect(),
        d_counts: vec![1000.0],
        n_runs: 100,
        master_seed: 777,
    };
    let report = pattern_report(&city.levels, &city.road, &config, &city.grid).unwrap();
    let mut failures = Vec::new();
    for pair in &report.pairs {
        for i in 0..10 {
            let obs = pair.observed_knn.values[i];
            if !(obs < pair.knn_random1.q10[i] && obs < pair.knn_random2.q10[i]) {
                failures.push(format!(
                    "knn pair {}-{} k={}",
                    pair.upper_level,
                    pair.lower_level,
                    i + 1
                ));
            }
        }
        for (i, &r) in pair.observed_coverage.radii.iter().enumerate() {
            if !(100.0..=1000.0).contains(&r) {
                continue;
            }
            let obs = pair.observed_coverage.values[i];
            if !(obs > pair.coverage_random1.q90[i] && obs > pair.coverage_random2.q90[i]) {
                failures.push(format!(
                    "coverage pair {}-{} r={r}",
                    pair.upper_level, pair.lower_level
                ));
            }
        }
    }
    let elapsed = started.elapsed();
    criterion(
        4,
        "accompanying pattern vs null models",
        failures.is_empty() && elapsed.as_secs_f64() < 120.0,
        &format!(
            "{} level pairs, 100 runs, {elapsed:.2?} (budget 2 min){}{}",
            report.pairs.len(),
            if failures.is_empty() {
                ""
            } else {
                "; failures: "
            },
            failures.join(", ")
        ),
    );
}

fn inhibit_base_spec(inhibition: Inhibition) -> SyntheticCitySpec {
    SyntheticCitySpec {
        origin_lon: 114.2,
        origin_lat: 30.5,
        cell_size: 10.0,
        n_rows: 1600,
        n_cols: 1600,
        street_spacing_cells: 4,
        planted_radius_cells: 1,
        n_level1: 24,
        level_multipliers: vec![30, 60],
        accompany: Some(AccompanySpec {
            k_nearest: 3,
            alpha: 1.0,
            d_cut: 400.0,
        }),
        inhibition,
        stop_scatter_sigma: 10.0,
        stop_window_cells: None,
        stops_per_hotspot: vec![10, 10, 10],
        seed: 5002,
    }
}

/// Fraction of inhibit-curve points with same_level >= 0.6 whose mean
/// next-level density falls strictly below the diagonal, per d_count,
/// pooled over adjacent level pairs.
fn below_diagonal_fractions(
    city: &gridhot::synth::SyntheticCity,
    d_counts: &[f64],
) -> Vec<(f64, f64, usize)> {
    let mut out = Vec::new();
    for &d_count in d_counts {
        let mut below = 0usize;
        let mut total = 0usize;
        for w in city.levels.windows(2) {
            let pairs = normalized_density_pairs(&w[0], &w[1], d_count, &city.grid).unwrap();
            let curve = inhibit_curve(&pairs).unwrap();
            for &(x, y) in &curve {
                if x >= 0.6 {
                    total += 1;
                    if y < x {
                        below += 1;
                    }
                }
            }
        }
        out.push((d_count, below as f64 / total.max(1) as f64, total));
    }
    out
}

/// Criterion 5: the inhibiting signature discriminates the planted regimes:
/// >= 80% of high-density curve points below the diagonal on the
/// accompany+inhibit city, under 50% on the accompany-only city, for every
/// d_count in {500, 1000, 2000} m.
#[test]
fn criterion_5_inhibiting_pattern_discrimination() {
    let d_counts = [500.0, 1000.0, 2000.0];
    let acc_city = generate(&inhibit_base_spec(Inhibition::None)).unwrap();
    let inh_city = generate(&inhibit_base_spec(Inhibition::CapPerDisc {
        radius: 600.0,
        max_count: 10,
        dense_threshold: 18,
    }))
    .unwrap();
    let acc = below_diagonal_fractions(&acc_city, &d_counts);
    let inh = below_diagonal_fractions(&inh_city, &d_counts);
    let acc_ok = acc.iter().all(|&(_, frac, n)| frac < 0.5 && n >= 3);
    let inh_ok = inh.iter().all(|&(_, frac, n)| frac >= 0.8 && n >= 3);
    criterion(
        5,
        "inhibiting pattern discrimination",
        acc_ok && inh_ok,
        &format!(
            "inhibit city fractions {:?} (need >= 0.8 each); accompany-only {:?} (need < 0.5 each)",
            inh.iter()
                .map(|&(d, f, _)| (d, (f * 1000.0).round() / 1000.0))
                .collect::<Vec<_>>(),
            acc.iter()
                .map(|&(d, f, _)| (d, (f * 1000.0).round() / 1000.0))
                .collect::<Vec<_>>(),
        ),
    );
}

/// Criterion 6: on a city planted with the K=3, alpha=1, d_cut=1000 kernel,
/// the knn mechanism's median RMSE is strictly below the global and random
/// medians at every d_rmse in {250, 500, 1000} m for every simulated level.
#[test]
fn criterion_6_mechanism_recovery() {
    let started = Instant::now();
    let spec = SyntheticCitySpec {
        origin_lon: 114.2,
        origin_lat: 30.5,
        cell_size: 10.0,
        n_rows: 700,
        n_cols: 700,
        street_spacing_cells: 7,
        planted_radius_cells: 2,
        n_level1: 24,
        level_multipliers: vec![8, 12, 16],
        accompany: Some(AccompanySpec {
            k_nearest: 3,
            alpha: 1.0,
            d_cut: 1000.0,
        }),
        inhibition: Inhibition::None,
        stop_scatter_sigma: 12.0,
        stop_window_cells: None,
        stops_per_hotspot: vec![50, 20, 10, 5],
        seed: 6001,
    };
    let city = generate(&spec).unwrap();
    // The anchor level is scaffolding; the experiment reproduces the three
    // planted lower levels from the first of them.
    let observed = &city.levels[1..];
    let base = MechanismParams {
        mechanism: Mechanism::Knn,
        k_nearest: 3,
        alpha: 1.0,
        d_cut: 1000.0,
        x_radius_cells: 2,
    };
    let d_grid = [250.0, 500.0, 1000.0];
    let experiment = mechanism_experiment(
        observed,
        &city.road,
        &base,
        &Mechanism::ALL,
        &d_grid,
        100,
        987,
        &city.grid,
    )
    .unwrap();
    let mut failures = Vec::new();
    let mut levels: Vec<u32> = experiment.curves.iter().map(|c| c.level).collect();
    levels.sort_unstable();
    levels.dedup();
    for &level in &levels {
        let median = |m: Mechanism, di: usize| {
            experiment
                .curves
                .iter()
                .find(|c| c.mechanism == m && c.level == level)
                .unwrap()
                .q50[di]
        };
        for (di, &d) in d_grid.iter().enumerate() {
            let knn = median(Mechanism::Knn, di);
            let global = median(Mechanism::Global, di);
            let random = median(Mechanism::Random, di);
            if !(knn < global && knn < random) {
                failures.push(format!(
                    "level {level} d={d}: knn {knn:.3} global {global:.3} random {random:.3}"
                ));
            }
        }
    }
    let partials: usize = experiment.partial_runs.iter().map(|p| p.1).sum();
    let elapsed = started.elapsed();
    criterion(
        6,
        "mechanism recovery",
        failures.is_empty() && partials == 0 && elapsed.as_secs_f64() < 600.0,
        &format!(
            "{} levels x {} distances, 100 runs/mechanism, {partials} partial, {elapsed:.2?} (budget 10 min){}{}",
            levels.len(),
            d_grid.len(),
            if failures.is_empty() { "" } else { "; failures: " },
            failures.join("; ")
        ),
    );
}

/// Criterion 7: cascade bookkeeping contracts and the biased-sampler
/// frequency check (weights 3:1 -> pick ratio 0.75 +- 3 sigma over 10,000
/// seeded draws).
#[test]
fn criterion_7_simulation_contracts() {
    let g = grid(400);
    let road = {
        let cells: Vec<Cell> = (0..400)
            .flat_map(|r| (0..400).map(move |c| Cell::new(r, c)))
            .filter(|c| c.row % 8 == 0 || c.col % 8 == 0)
            .collect();
        gridhot::grid::RoadMask::from_cells(g.clone(), cells).unwrap()
    };
    let o1 = CellPointSet::new(vec![
        Cell::new(40, 40),
        Cell::new(40, 200),
        Cell::new(200, 120),
    ])
    .unwrap();
    let o2 = CellPointSet::new(vec![
        Cell::new(48, 48),
        Cell::new(48, 192),
        Cell::new(192, 128),
        Cell::new(80, 80),
        Cell::new(120, 160),
        Cell::new(390, 390), // beyond d_cut of everything: background
    ])
    .unwrap();
    let o3 = CellPointSet::new(vec![
        Cell::new(56, 40),
        Cell::new(64, 64),
        Cell::new(56, 200),
        Cell::new(176, 112),
        Cell::new(96, 96),
        Cell::new(140, 140),
    ])
    .unwrap();
    let observed = vec![o1, o2, o3];
    let mut contract_failures = Vec::new();
    for mechanism in Mechanism::ALL {
        let params = MechanismParams {
            mechanism,
            k_nearest: 3,
            alpha: 1.0,
            d_cut: 1000.0,
            x_radius_cells: 4,
        };
        let run = simulate_cascade(&observed, &road, &params, 31, &g).unwrap();
        if !run.complete {
            contract_failures.push(format!("{mechanism:?}: incomplete"));
            continue;
        }
        let mut prior: HashSet<Cell> = HashSet::new();
        for (i, rec) in run.levels.iter().enumerate() {
            if rec.simulated.len() + rec.background.len() != observed[i].len() {
                contract_failures.push(format!(
                    "{mechanism:?} level {}: |S|+|B| = {} != |O| = {}",
                    i + 1,
                    rec.simulated.len() + rec.background.len(),
                    observed[i].len()
                ));
            }
            for (j, &a) in rec.simulated.iter().enumerate() {
                for &b in &rec.simulated[j + 1..] {
                    if a.chebyshev(&b) <= params.x_radius_cells {
                        contract_failures.push(format!(
                            "{mechanism:?}: picks {a:?} and {b:?} inside one square"
                        ));
                    }
                }
                if prior.contains(&a) {
                    contract_failures
                        .push(format!("{mechanism:?}: pick {a:?} collides with prior"));
                }
            }
            prior.extend(rec.background.iter().copied());
            prior.extend(rec.simulated.iter().copied());
        }
    }

    // Biased sampler: candidates at 100 m and 300 m with alpha 1 have
    // weights 3:1; over 10,000 single-pick runs the near one should win
    // 75% +- 3 sigma.
    let h = CellPointSet::new(vec![Cell::new(0, 0)]).unwrap();
    let near = Cell::new(0, 10);
    let far = Cell::new(0, 30);
    let params = MechanismParams {
        mechanism: Mechanism::Knn,
        k_nearest: 1,
        alpha: 1.0,
        d_cut: 1000.0,
        x_radius_cells: 4,
    };
    let n = 10_000usize;
    let mut hits = 0usize;
    for run in 0..n {
        let picked = simulate_level(
            &h,
            &[near, far],
            1,
            &params,
            derive_seed(7, &[run as u64]),
            &g,
        )
        .unwrap();
        if picked[0] == near {
            hits += 1;
        }
    }
    let sigma = (n as f64 * 0.75 * 0.25).sqrt();
    let sampler_ok = (hits as f64 - 0.75 * n as f64).abs() <= 3.0 * sigma;
    if !sampler_ok {
        contract_failures.push(format!("sampler: {hits}/10000 near picks"));
    }
    criterion(
        7,
        "simulation contracts",
        contract_failures.is_empty(),
        &format!(
            "3 mechanisms checked; near-candidate frequency {hits}/10000 (expect 7500 +- {:.0}){}{}",
            3.0 * sigma,
            if contract_failures.is_empty() { "" } else { "; failures: " },
            contract_failures.join("; ")
        ),
    );
}

/// Criterion 8: the full CLI pipeline, run twice with the same config and
/// master seed under different thread counts, produces byte-identical
/// JSON/CSV/SVG outputs.
#[test]
fn criterion_8_pipeline_determinism() {
    use std::process::Command;
    let bin = env!("CARGO_BIN_EXE_gridhot");
    let work = tempfile::tempdir().unwrap();
    let synth_spec = serde_json::json!({
        "n_rows": 260, "n_cols": 260,
        "street_spacing_cells": 10,
        "planted_radius_cells": 4,
        "n_level1": 5,
        "level_multipliers": [2, 3],
        "accompany": {"k_nearest": 3, "alpha": 1.0, "d_cut": 1000.0},
        "stop_scatter_sigma": 15.0,
        "stops_per_hotspot": [300, 120, 50],
        "seed": 11
    });
    let spec_path = work.path().join("synth.json");
    std::fs::write(&spec_path, synth_spec.to_string()).unwrap();
    let config = serde_json::json!({
        "grid": {"origin_lon": 114.2, "origin_lat": 30.5, "cell_size": 10.0,
                 "n_rows": 260, "n_cols": 260, "ref_latitude": 30.5},
        "detection": {"radius_cells": 4, "min_stops": 1},
        "classification": {"levels_kept": 3},
        "metrics": {"k_max": 3, "r_max": 800.0, "r_step": 200.0,
                     "d_counts": [500.0], "n_runs": 8},
        "simulation": {"n_sims": 4, "d_rmse_grid": [250.0, 500.0]},
        "master_seed": 42
    });
    let config_path = work.path().join("config.json");
    std::fs::write(&config_path, config.to_string()).unwrap();

    let run_pipeline = |out: &std::path::Path, threads: &str| {
        let run = |args: &[&str]| {
            let status = Command::new(bin)
                .args(args)
                .env("RAYON_NUM_THREADS", threads)
                .status()
                .unwrap();
            assert!(status.success(), "command {args:?} failed");
        };
        let out_s = out.to_str().unwrap();
        let cfg = config_path.to_str().unwrap();
        run(&[
            "synth",
            "--spec",
            spec_path.to_str().unwrap(),
            "--out",
            out_s,
        ]);
        let stops = out.join("stops.csv");
        let roads = out.join("roads.csv");
        run(&[
            "detect",
            "--config",
            cfg,
            "--stops",
            stops.to_str().unwrap(),
            "--roads",
            roads.to_str().unwrap(),
            "--out",
            out_s,
        ]);
        run(&["classify", "--config", cfg, "--out", out_s]);
        run(&["metrics", "--config", cfg, "--out", out_s]);
        run(&["simulate", "--config", cfg, "--out", out_s]);
        run(&["report", "--config", cfg, "--out", out_s]);
    };

    let dir_a = work.path().join("a");
    let dir_b = work.path().join("b");
    run_pipeline(&dir_a, "1");
    run_pipeline(&dir_b, "2");

    let mut names: Vec<String> = std::fs::read_dir(&dir_a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    let mut names_b: Vec<String> = std::fs::read_dir(&dir_b)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names_b.sort();
    assert_eq!(names, names_b, "output file sets differ");
    let mut mismatches = Vec::new();
    let mut svg_count = 0usize;
    for name in &names {
        let a = std::fs::read(dir_a.join(name)).unwrap();
        let b = std::fs::read(dir_b.join(name)).unwrap();
        if a != b {
            mismatches.push(name.clone());
        }
        if name.ends_with(".svg") {
            svg_count += 1;
        }
    }
    criterion(
        8,
        "pipeline determinism",
        mismatches.is_empty() && names.len() >= 15 && svg_count >= 5,
        &format!(
            "{} output files byte-compared across thread counts 1 and 2 ({svg_count} SVG){}{}",
            names.len(),
            if mismatches.is_empty() {
                ""
            } else {
                "; mismatches: "
            },
            mismatches.join(", ")
        ),
    );
}
