//! Tour of the synthetic-city generator: the three planted regimes
//! (random, accompanying, accompanying + inhibiting) and the knobs behind
//! them.
//!
//! ```bash
//! cargo run --example synthetic_city
//! ```

use gridhot::neighbors::NeighborIndex;
use gridhot::synth::{generate, AccompanySpec, Inhibition, SyntheticCity, SyntheticCitySpec};

fn base_spec() -> SyntheticCitySpec {
    SyntheticCitySpec {
        origin_lon: 114.2,
        origin_lat: 30.5,
        cell_size: 10.0,
        n_rows: 600,
        n_cols: 600,
        street_spacing_cells: 8,
        planted_radius_cells: 3,
        n_level1: 10,
        level_multipliers: vec![5],
        accompany: None,
        inhibition: Inhibition::None,
        stop_scatter_sigma: 15.0,
        stop_window_cells: None,
        stops_per_hotspot: vec![200, 60],
        seed: 71,
    }
}

fn describe(label: &str, city: &SyntheticCity) {
    let g = &city.grid;
    let upper = &city.levels[0];
    let lower = &city.levels[1];
    let idx = NeighborIndex::build(upper, g);
    let nearest: Vec<f64> = lower
        .iter()
        .map(|&c| idx.nearest(g.cell_center(c)).unwrap())
        .collect();
    let mean = nearest.iter().sum::<f64>() / nearest.len() as f64;
    let within_600 = nearest.iter().filter(|&&d| d < 600.0).count();
    println!(
        "{label:<28} lower-level centers: {}; mean distance to nearest anchor {mean:>7.1} m; {:>3}% within 600 m",
        lower.len(),
        100 * within_600 / lower.len()
    );
}

fn main() -> gridhot::Result<()> {
    println!("grid streets every 80 m, 10 anchors, 50 lower-level centers, seed 71\n");

    // Regime 1: no accompany kernel - lower level uniform on roads.
    let random_city = generate(&base_spec())?;
    describe("random placement:", &random_city);

    // Regime 2: distance-decay attraction to the anchors.
    let mut spec = base_spec();
    spec.accompany = Some(AccompanySpec {
        k_nearest: 3,
        alpha: 1.0,
        d_cut: 600.0,
    });
    let accompany_city = generate(&spec)?;
    describe("accompanying:", &accompany_city);

    // Regime 3: accompany plus a density cap near dense anchor zones.
    let mut spec = base_spec();
    spec.accompany = Some(AccompanySpec {
        k_nearest: 3,
        alpha: 1.0,
        d_cut: 600.0,
    });
    spec.inhibition = Inhibition::CapPerDisc {
        radius: 500.0,
        max_count: 3,
        dense_threshold: 0,
    };
    let inhibited_city = generate(&spec)?;
    describe("accompanying + inhibiting:", &inhibited_city);

    // Every center respects the road mask and the pairwise spacing.
    let spacing_ok = |city: &SyntheticCity, radius: usize| {
        let all: Vec<_> = city.levels.iter().flat_map(|l| l.iter().copied()).collect();
        all.iter()
            .enumerate()
            .all(|(i, a)| all[i + 1..].iter().all(|b| a.chebyshev(b) > 2 * radius))
            && all.iter().all(|&c| city.road.contains(c))
    };
    println!(
        "\nall centers on roads with pairwise spacing > 2x radius: {}",
        spacing_ok(&random_city, 3)
            && spacing_ok(&accompany_city, 3)
            && spacing_ok(&inhibited_city, 3)
    );

    let truth = accompany_city.ground_truth(3);
    println!(
        "ground truth records {} planted centers with levels",
        truth.centers.len()
    );
    Ok(())
}
