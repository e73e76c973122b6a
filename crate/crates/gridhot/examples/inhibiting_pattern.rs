//! Measure the inhibiting pattern: normalized-density pairs between adjacent
//! levels and the mean curve against the diagonal, contrasting a plain
//! accompany city with one planted under a local density cap.
//!
//! ```bash
//! cargo run --example inhibiting_pattern
//! ```

use gridhot::patterns::{inhibit_curve, normalized_density_pairs};
use gridhot::synth::{generate, AccompanySpec, Inhibition, SyntheticCity, SyntheticCitySpec};

fn city(inhibition: Inhibition) -> gridhot::Result<SyntheticCity> {
    generate(&SyntheticCitySpec {
        origin_lon: 114.2,
        origin_lat: 30.5,
        cell_size: 10.0,
        n_rows: 1200,
        n_cols: 1200,
        street_spacing_cells: 4,
        planted_radius_cells: 1,
        n_level1: 16,
        level_multipliers: vec![25, 50],
        accompany: Some(AccompanySpec {
            k_nearest: 3,
            alpha: 1.0,
            d_cut: 400.0,
        }),
        inhibition,
        stop_scatter_sigma: 10.0,
        stop_window_cells: None,
        stops_per_hotspot: vec![10, 10, 10],
        seed: 41,
    })
}

fn report(label: &str, city: &SyntheticCity, d_count: f64) -> gridhot::Result<()> {
    println!("\n=== {label}, d_count = {d_count} m ===");
    for (pi, w) in city.levels.windows(2).enumerate() {
        let pairs = normalized_density_pairs(&w[0], &w[1], d_count, &city.grid)?;
        let curve = inhibit_curve(&pairs)?;
        let high: Vec<(f64, f64)> = curve.iter().copied().filter(|&(x, _)| x >= 0.6).collect();
        let below = high.iter().filter(|&&(x, y)| y < x).count();
        println!(
            "levels {}->{}: {} curve points, {} with same-level density >= 0.6, {below} below the diagonal",
            pi + 1,
            pi + 2,
            curve.len(),
            high.len()
        );
        for &(x, y) in high.iter().take(6) {
            println!(
                "    same {x:.3} -> next mean {y:.3} {}",
                if y < x { "(below)" } else { "" }
            );
        }
    }
    Ok(())
}

fn main() -> gridhot::Result<()> {
    let accompany_only = city(Inhibition::None)?;
    let inhibited = city(Inhibition::CapPerDisc {
        radius: 600.0,
        max_count: 8,
        dense_threshold: 15,
    })?;
    for d_count in [500.0, 1000.0] {
        report("accompany only", &accompany_only, d_count)?;
        report("accompany + cap per disc", &inhibited, d_count)?;
    }
    println!("\nWith the cap, high-density areas hold fewer next-level centers than");
    println!("their own density would suggest: the mean curve drops below y = x.");
    Ok(())
}
