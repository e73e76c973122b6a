//! Popularity-level classification from the Lorenz curve of stop counts.
//!
//! Each round draws the Lorenz curve of the remaining hotspots (ascending
//! stops), takes the tangent slope at (1, 1) — in discrete form
//! `max * n / total` — and extends it to the x-axis, giving the cut fraction
//! `x* = 1 - mean/max`. Hotspots whose ascending-rank fraction strictly
//! exceeds `x*` form the next level; ties at the boundary value are promoted
//! together so equal stop counts never straddle levels.

use crate::detect::Hotspot;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Piecewise-linear Lorenz curve including (0, 0) and (1, 1).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LorenzCurve {
    pub points: Vec<(f64, f64)>,
}

fn check_values(values: &[u64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidInput("value list is empty".into()));
    }
    if values.contains(&0) {
        return Err(Error::InvalidInput("values must be positive".into()));
    }
    Ok(())
}

/// Lorenz curve of positive values: point k is
/// `(k/n, partial_sum_k/total)` over the ascending sort, k = 0..n.
pub fn lorenz_curve(values: &[u64]) -> Result<LorenzCurve> {
    check_values(values)?;
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let total: u64 = sorted.iter().sum();
    let mut points = Vec::with_capacity(sorted.len() + 1);
    points.push((0.0, 0.0));
    let mut partial = 0u64;
    for (k, v) in sorted.iter().enumerate() {
        partial += v;
        points.push(((k as f64 + 1.0) / n, partial as f64 / total as f64));
    }
    Ok(LorenzCurve { points })
}

/// Loubar cut fraction `x* = 1 - mean/max`, the x-intercept of the Lorenz
/// curve's last-segment tangent at (1, 1).
pub fn loubar_threshold(values: &[u64]) -> Result<f64> {
    check_values(values)?;
    let n = values.len() as f64;
    let total: u64 = values.iter().sum();
    let max = *values.iter().max().unwrap();
    Ok(1.0 - (total as f64 / n) / max as f64)
}

/// Ordered grouping of hotspots into levels, level 1 first.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelPartition {
    /// Hotspot indices per level, sorted by descending stops within a level.
    pub levels: Vec<Vec<usize>>,
    /// The Loubar cut fraction applied at each round.
    pub thresholds: Vec<f64>,
}

impl LevelPartition {
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }
}

/// Iterative Loubar classification over stop counts. Indices in the result
/// refer to positions in `stops`.
pub fn classify_stop_counts(stops: &[u64]) -> Result<LevelPartition> {
    check_values(stops)?;
    // Ascending (stops, index) queue of not-yet-classified hotspots.
    let mut remaining: Vec<(u64, usize)> = stops
        .iter()
        .copied()
        .zip(0..)
        .map(|(s, i)| (s, i))
        .collect();
    remaining.sort_unstable();
    let mut levels = Vec::new();
    let mut thresholds = Vec::new();
    while !remaining.is_empty() {
        let n = remaining.len() as u128;
        let total: u128 = remaining.iter().map(|&(s, _)| s as u128).sum();
        let max = remaining.last().unwrap().0 as u128;
        thresholds.push(1.0 - (total as f64 / n as f64) / max as f64);
        if max * n == total {
            // All remaining stops are equal: one final level.
            let mut level: Vec<usize> = remaining.drain(..).map(|(_, i)| i).collect();
            level.sort_unstable();
            levels.push(level);
            break;
        }
        // Rank fraction k/n strictly exceeds x* = (n*max - total)/(n*max)
        // exactly when k*max > n*max - total, in integer arithmetic.
        let bound = n * max - total;
        let mut cut = remaining
            .iter()
            .enumerate()
            .position(|(k0, _)| (k0 as u128 + 1) * max > bound)
            .expect("rank n always satisfies the cut");
        // Promote boundary ties into the level.
        let cut_value = remaining[cut].0;
        while cut > 0 && remaining[cut - 1].0 == cut_value {
            cut -= 1;
        }
        let mut level: Vec<usize> = remaining
            .split_off(cut)
            .into_iter()
            .map(|(_, i)| i)
            .collect();
        level.sort_by_key(|&i| (std::cmp::Reverse(stops[i]), i));
        levels.push(level);
    }
    Ok(LevelPartition { levels, thresholds })
}

/// Classify hotspots by their stop counts.
pub fn classify_levels(hotspots: &[Hotspot]) -> Result<LevelPartition> {
    let stops: Vec<u64> = hotspots.iter().map(|h| h.stops).collect();
    classify_stop_counts(&stops)
}

/// Write level numbers (1-based) back onto the hotspots.
pub fn apply_levels(hotspots: &mut [Hotspot], partition: &LevelPartition) {
    for (li, level) in partition.levels.iter().enumerate() {
        for &idx in level {
            hotspots[idx].level = Some(li as u32 + 1);
        }
    }
}

/// One row of the per-level summary table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: u32,
    pub n_hotspots: usize,
    /// Cumulative stop-fraction range (lo, hi] covered by this level.
    pub stop_fraction_lo: f64,
    pub stop_fraction_hi: f64,
    pub stops_max: u64,
    pub stops_min: u64,
    pub stops_median: f64,
}

/// Per-level statistics mirroring the classification table: counts,
/// cumulative stop-fraction ranges, stop ranges, medians.
pub fn level_summaries(hotspots: &[Hotspot], partition: &LevelPartition) -> Vec<LevelSummary> {
    let total: u64 = hotspots.iter().map(|h| h.stops).sum();
    let mut cum = 0u64;
    let mut out = Vec::with_capacity(partition.levels.len());
    for (li, level) in partition.levels.iter().enumerate() {
        let mut stops: Vec<u64> = level.iter().map(|&i| hotspots[i].stops).collect();
        stops.sort_unstable();
        let level_sum: u64 = stops.iter().sum();
        let lo = cum as f64 / total as f64;
        cum += level_sum;
        let hi = cum as f64 / total as f64;
        let median = if stops.len() % 2 == 1 {
            stops[stops.len() / 2] as f64
        } else {
            (stops[stops.len() / 2 - 1] + stops[stops.len() / 2]) as f64 / 2.0
        };
        out.push(LevelSummary {
            level: li as u32 + 1,
            n_hotspots: stops.len(),
            stop_fraction_lo: lo,
            stop_fraction_hi: hi,
            stops_max: *stops.last().unwrap(),
            stops_min: stops[0],
            stops_median: median,
        });
    }
    out
}
