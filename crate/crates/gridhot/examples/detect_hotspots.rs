//! Detect local hotspots in a synthetic city: bin stops onto the grid, pick
//! the neighborhood radius by the elbow rule, reshape contested cells by the
//! gravity rule, and keep the popular hotspots.
//!
//! ```bash
//! cargo run --example detect_hotspots
//! ```

use gridhot::detect::{detect, DetectionParams, MinStops, RadiusSpec};
use gridhot::synth::{generate, Inhibition, SyntheticCitySpec};

fn main() -> gridhot::Result<()> {
    let spec = SyntheticCitySpec {
        origin_lon: 114.2,
        origin_lat: 30.5,
        cell_size: 10.0,
        n_rows: 500,
        n_cols: 500,
        street_spacing_cells: 12,
        planted_radius_cells: 4,
        n_level1: 12,
        level_multipliers: vec![],
        accompany: None,
        inhibition: Inhibition::None,
        stop_scatter_sigma: 30.0,
        stop_window_cells: Some(3),
        stops_per_hotspot: vec![250],
        seed: 7,
    };
    let city = generate(&spec)?;
    println!(
        "generated {} stops around {} planted centers on a {}x{} grid",
        city.stops.len(),
        city.levels[0].len(),
        spec.n_rows,
        spec.n_cols
    );

    let binned = city.grid.bin_points(&city.stops)?;
    println!(
        "binned {} events ({} out of bounds)",
        binned.raster.total(),
        binned.out_of_bounds
    );

    let params = DetectionParams {
        radius_cells: RadiusSpec::Auto,
        radius_search_range: (1, 12),
        min_stops: MinStops::Fixed(1),
        ..Default::default()
    };
    let detection = detect(&binned.raster, None, &params)?;
    println!(
        "elbow-selected radius: {} cells ({} m neighborhoods)",
        detection.radius_cells,
        (2 * detection.radius_cells + 1) as f64 * spec.cell_size
    );
    if let Some(curve) = &detection.radius_curve {
        let m: Vec<usize> = curve.iter().map(|&(_, m)| m).collect();
        println!("maxima count by radius: {m:?}");
    }

    println!("\n id | center (row,col) |   lon      lat   | cells | stops");
    println!("----+------------------+------------------+-------+------");
    for (i, h) in detection.hotspots.iter().enumerate() {
        let (lon, lat) = city.grid.cell_lonlat(h.center);
        println!(
            "{i:>3} | ({:>4},{:>4})      | {lon:.4} {lat:.4} | {:>5} | {:>5}",
            h.center.row,
            h.center.col,
            h.members.len(),
            h.stops
        );
    }

    let planted: std::collections::HashSet<_> = city.levels[0].cells().iter().collect();
    let recovered = detection
        .hotspots
        .iter()
        .filter(|h| planted.contains(&h.center))
        .count();
    println!(
        "\nrecovered {recovered} of {} planted centers exactly",
        planted.len()
    );
    Ok(())
}
