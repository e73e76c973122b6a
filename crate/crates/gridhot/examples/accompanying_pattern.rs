//! Measure the accompanying pattern: mean k-nearest-neighbor distances and
//! coverage ratios between adjacent levels, compared against the two
//! road-constrained null models.
//!
//! ```bash
//! cargo run --example accompanying_pattern
//! ```

use gridhot::patterns::{pattern_report, PatternConfig};
use gridhot::synth::{generate, AccompanySpec, Inhibition, SyntheticCitySpec};

fn main() -> gridhot::Result<()> {
    let spec = SyntheticCitySpec {
        origin_lon: 114.2,
        origin_lat: 30.5,
        cell_size: 10.0,
        n_rows: 1000,
        n_cols: 1000,
        street_spacing_cells: 10,
        planted_radius_cells: 4,
        n_level1: 15,
        level_multipliers: vec![5, 10],
        accompany: Some(AccompanySpec {
            k_nearest: 3,
            alpha: 2.0,
            d_cut: 600.0,
        }),
        inhibition: Inhibition::None,
        stop_scatter_sigma: 12.0,
        stop_window_cells: None,
        stops_per_hotspot: vec![50, 20, 10],
        seed: 31,
    };
    let city = generate(&spec)?;
    println!(
        "planted levels: {:?} centers",
        city.levels.iter().map(|l| l.len()).collect::<Vec<_>>()
    );

    let config = PatternConfig {
        k_max: 8,
        radii: (0..=20).map(|i| i as f64 * 100.0).collect(),
        d_counts: vec![1000.0],
        n_runs: 50,
        master_seed: 99,
    };
    let report = pattern_report(&city.levels, &city.road, &config, &city.grid)?;

    for pair in &report.pairs {
        println!(
            "\n=== levels {} -> {} ===",
            pair.upper_level, pair.lower_level
        );
        println!("  k | observed (m) | random1 q10 | random2 q10");
        println!("----+--------------+-------------+------------");
        for (i, &k) in pair.observed_knn.ks.iter().enumerate() {
            println!(
                "{k:>3} | {:>12.1} | {:>11.1} | {:>11.1}",
                pair.observed_knn.values[i], pair.knn_random1.q10[i], pair.knn_random2.q10[i],
            );
        }
        println!("\n  r (m) | observed CR | random1 q90 | random2 q90");
        println!("--------+-------------+-------------+------------");
        for (i, &r) in pair.observed_coverage.radii.iter().enumerate().step_by(4) {
            println!(
                "{r:>7} | {:>11.3} | {:>11.3} | {:>11.3}",
                pair.observed_coverage.values[i],
                pair.coverage_random1.q90[i],
                pair.coverage_random2.q90[i],
            );
        }
        let below = pair
            .observed_knn
            .values
            .iter()
            .zip(&pair.knn_random1.q10)
            .filter(|(obs, q10)| obs < q10)
            .count();
        println!(
            "\nobserved mean-KNN below the random1 10% quantile at {below} of {} k values",
            pair.observed_knn.ks.len()
        );
    }
    Ok(())
}
