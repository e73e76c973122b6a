//! Classify detected hotspots into popularity levels with the iterative
//! Lorenz-curve (Loubar) rule and print the per-level summary table.
//!
//! ```bash
//! cargo run --example classify_levels
//! ```

use gridhot::detect::{detect, DetectionParams, MinStops, RadiusSpec};
use gridhot::levels::{apply_levels, classify_levels, level_summaries, loubar_threshold};
use gridhot::synth::{generate, AccompanySpec, Inhibition, SyntheticCitySpec};

fn main() -> gridhot::Result<()> {
    let spec = SyntheticCitySpec {
        origin_lon: 114.2,
        origin_lat: 30.5,
        cell_size: 10.0,
        n_rows: 600,
        n_cols: 600,
        street_spacing_cells: 10,
        planted_radius_cells: 4,
        n_level1: 8,
        level_multipliers: vec![3, 8],
        accompany: Some(AccompanySpec::default()),
        inhibition: Inhibition::None,
        stop_scatter_sigma: 20.0,
        stop_window_cells: Some(3),
        // Strongly skewed stop counts give a clear level hierarchy.
        stops_per_hotspot: vec![2500, 400, 90],
        seed: 21,
    };
    let city = generate(&spec)?;
    let raster = city.grid.bin_points(&city.stops)?.raster;
    let params = DetectionParams {
        radius_cells: RadiusSpec::Fixed(4),
        min_stops: MinStops::Fixed(1),
        ..Default::default()
    };
    let mut hotspots = detect(&raster, None, &params)?.hotspots;
    println!("detected {} hotspots", hotspots.len());

    let stops: Vec<u64> = hotspots.iter().map(|h| h.stops).collect();
    println!(
        "first Loubar cut at x* = {:.4} (1 - mean/max of the stop counts)",
        loubar_threshold(&stops)?
    );

    let partition = classify_levels(&hotspots)?;
    apply_levels(&mut hotspots, &partition);

    println!("\nlevel | hotspots | stop fraction range | stops (max-min) | median");
    println!("------+----------+---------------------+-----------------+-------");
    for s in level_summaries(&hotspots, &partition) {
        println!(
            "{:>5} | {:>8} | ({:>6.2}%, {:>6.2}%] | {:>7} - {:>5} | {:>6}",
            s.level,
            s.n_hotspots,
            100.0 * s.stop_fraction_lo,
            100.0 * s.stop_fraction_hi,
            s.stops_max,
            s.stops_min,
            s.stops_median
        );
    }
    println!(
        "\n{} levels total; per-round cut fractions: {:?}",
        partition.n_levels(),
        partition
            .thresholds
            .iter()
            .map(|t| (t * 1000.0).round() / 1000.0)
            .collect::<Vec<_>>()
    );
    Ok(())
}
