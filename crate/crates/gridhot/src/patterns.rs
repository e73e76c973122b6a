//! Arrangement-pattern statistics between adjacent popularity levels.
//!
//! The accompanying pattern is measured by the mean k-nearest-neighbor
//! distance from higher-level centers to the next lower level and by the
//! coverage ratio (fraction of lower-level centers strictly within radius r
//! of the upper set). The inhibiting pattern is measured by normalized
//! density pairs: for each upper-level center, the count of same-level and
//! next-level neighbors within a fixed distance, each normalized by the
//! maximum count over the upper set. Both observed statistics are compared
//! against two road-constrained random null models via 10/50/90% quantile
//! bands over seeded runs.

use crate::error::{Error, Result};
use crate::grid::{Cell, CellPointSet, GridSpec, RoadMask};
use crate::neighbors::NeighborIndex;
use crate::rng::{derive_seed, sample_without_replacement};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// Mean k-th-nearest distance curve over k = 1..=k_max.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnnCurve {
    pub ks: Vec<usize>,
    pub values: Vec<f64>,
}

/// Coverage-ratio curve over a radius grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageCurve {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

/// Normalized-density pairs for each upper-level center.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityPairSet {
    /// (same_level, next_level) per center of A, in A's order.
    pub pairs: Vec<(f64, f64)>,
    pub d_count: f64,
}

/// Pointwise 10/50/90% quantiles over null-model runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NullBand {
    pub xs: Vec<f64>,
    pub q10: Vec<f64>,
    pub q50: Vec<f64>,
    pub q90: Vec<f64>,
    pub n_runs: usize,
}

fn check_disjoint(a: &CellPointSet, b: &CellPointSet) -> Result<()> {
    let set: HashSet<Cell> = a.iter().copied().collect();
    if b.iter().any(|c| set.contains(c)) {
        return Err(Error::Precondition("point sets must be disjoint".into()));
    }
    Ok(())
}

/// Mean over x in A of the k-th smallest distance from x to B.
pub fn mean_knn_distance(
    a: &CellPointSet,
    b: &CellPointSet,
    k: usize,
    grid: &GridSpec,
) -> Result<f64> {
    Ok(knn_curve(a, b, k, grid)?.values[k - 1])
}

/// Mean k-th-nearest distances for every k = 1..=k_max in one pass.
pub fn knn_curve(
    a: &CellPointSet,
    b: &CellPointSet,
    k_max: usize,
    grid: &GridSpec,
) -> Result<KnnCurve> {
    if a.is_empty() {
        return Err(Error::Precondition("A must be nonempty".into()));
    }
    if k_max == 0 {
        return Err(Error::Precondition("k must be >= 1".into()));
    }
    if b.len() < k_max {
        return Err(Error::InsufficientTargets {
            needed: k_max,
            available: b.len(),
        });
    }
    check_disjoint(a, b)?;
    let idx = NeighborIndex::build(b, grid);
    let mut sums = vec![0.0f64; k_max];
    for &x in a.iter() {
        let d = idx.knn(grid.cell_center(x), k_max)?;
        for (s, v) in sums.iter_mut().zip(&d) {
            *s += v;
        }
    }
    let n = a.len() as f64;
    Ok(KnnCurve {
        ks: (1..=k_max).collect(),
        values: sums.into_iter().map(|s| s / n).collect(),
    })
}

/// Fraction of B strictly within r of the nearest member of A.
pub fn coverage_ratio(a: &CellPointSet, b: &CellPointSet, r: f64, grid: &GridSpec) -> Result<f64> {
    let curve = coverage_curve(a, b, &[r], grid)?;
    Ok(curve.values[0])
}

/// Coverage ratios over a radius grid, evaluated from one nearest-distance
/// pass over B.
pub fn coverage_curve(
    a: &CellPointSet,
    b: &CellPointSet,
    radii: &[f64],
    grid: &GridSpec,
) -> Result<CoverageCurve> {
    if b.is_empty() {
        return Err(Error::UndefinedRatio(
            "coverage ratio undefined for empty B".into(),
        ));
    }
    if a.is_empty() {
        return Err(Error::Precondition("A must be nonempty".into()));
    }
    if radii.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::InvalidInput("radii must be finite and >= 0".into()));
    }
    let idx = NeighborIndex::build(a, grid);
    let nearest: Vec<f64> = b
        .iter()
        .map(|&x| idx.nearest(grid.cell_center(x)).expect("A nonempty"))
        .collect();
    let n = b.len() as f64;
    let values = radii
        .iter()
        .map(|&r| nearest.iter().filter(|&&d| d < r).count() as f64 / n)
        .collect();
    Ok(CoverageCurve {
        radii: radii.to_vec(),
        values,
    })
}

/// Normalized-density pairs: counts within d_count against the same level
/// (self included) and the next level, each divided by its maximum over A.
/// A zero next-level maximum yields zeros by convention.
pub fn normalized_density_pairs(
    a: &CellPointSet,
    b: &CellPointSet,
    d_count: f64,
    grid: &GridSpec,
) -> Result<DensityPairSet> {
    if a.is_empty() {
        return Err(Error::Precondition("A must be nonempty".into()));
    }
    if !(d_count > 0.0) {
        return Err(Error::Precondition("d_count must be positive".into()));
    }
    let idx_a = NeighborIndex::build(a, grid);
    let idx_b = NeighborIndex::build(b, grid);
    let counts: Vec<(usize, usize)> = a
        .iter()
        .map(|&x| {
            let q = grid.cell_center(x);
            (
                idx_a.count_within(q, d_count),
                idx_b.count_within(q, d_count),
            )
        })
        .collect();
    let max_same = counts.iter().map(|c| c.0).max().unwrap();
    let max_next = counts.iter().map(|c| c.1).max().unwrap();
    debug_assert!(max_same >= 1, "self-inclusion guarantees a positive max");
    let pairs = counts
        .into_iter()
        .map(|(s, t)| {
            let same = s as f64 / max_same as f64;
            let next = if max_next == 0 {
                0.0
            } else {
                t as f64 / max_next as f64
            };
            (same, next)
        })
        .collect();
    Ok(DensityPairSet { pairs, d_count })
}

/// Mean next-level density for each distinct same-level density, ascending.
pub fn inhibit_curve(pairs: &DensityPairSet) -> Result<Vec<(f64, f64)>> {
    if pairs.pairs.is_empty() {
        return Err(Error::Precondition("pair set must be nonempty".into()));
    }
    let mut sorted: Vec<(f64, f64)> = pairs.pairs.clone();
    sorted.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i].0;
        let mut sum = 0.0;
        let mut n = 0usize;
        while i < sorted.len() && sorted[i].0 == x {
            sum += sorted[i].1;
            n += 1;
            i += 1;
        }
        out.push((x, sum / n as f64));
    }
    Ok(out)
}

/// Null model "random 1": keep A observed, draw the lower-level set
/// uniformly from road cells excluding A. Deterministic given the seed.
pub fn null_model_random1(
    a_obs: &CellPointSet,
    n_lower: usize,
    road: &RoadMask,
    seed: u64,
) -> Result<CellPointSet> {
    let a_set: HashSet<Cell> = a_obs.iter().copied().collect();
    let pool: Vec<Cell> = road
        .cells()
        .iter()
        .copied()
        .filter(|c| !a_set.contains(c))
        .collect();
    if pool.len() < n_lower {
        return Err(Error::InsufficientTargets {
            needed: n_lower,
            available: pool.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cells = sample_without_replacement(&pool, n_lower, &mut rng);
    cells.sort();
    CellPointSet::new(cells)
}

/// Null model "random 2": draw both sets uniformly from road cells, disjoint
/// without replacement. Deterministic given the seed.
pub fn null_model_random2(
    n_upper: usize,
    n_lower: usize,
    road: &RoadMask,
    seed: u64,
) -> Result<(CellPointSet, CellPointSet)> {
    if road.len() < n_upper + n_lower {
        return Err(Error::InsufficientTargets {
            needed: n_upper + n_lower,
            available: road.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let drawn = sample_without_replacement(road.cells(), n_upper + n_lower, &mut rng);
    let mut upper = drawn[..n_upper].to_vec();
    let mut lower = drawn[n_upper..].to_vec();
    upper.sort();
    lower.sort();
    Ok((CellPointSet::new(upper)?, CellPointSet::new(lower)?))
}

/// Linear-interpolation quantile of a sample (q in [0, 1]).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = pos - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}

fn band_from_runs(xs: Vec<f64>, runs: &[Vec<f64>]) -> NullBand {
    let n_points = xs.len();
    let mut q10 = Vec::with_capacity(n_points);
    let mut q50 = Vec::with_capacity(n_points);
    let mut q90 = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let mut col: Vec<f64> = runs.iter().map(|r| r[i]).collect();
        col.sort_by(|a, b| a.total_cmp(b));
        q10.push(quantile(&col, 0.10));
        q50.push(quantile(&col, 0.50));
        q90.push(quantile(&col, 0.90));
    }
    NullBand {
        xs,
        q10,
        q50,
        q90,
        n_runs: runs.len(),
    }
}

/// Configuration for the pattern report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatternConfig {
    pub k_max: usize,
    pub radii: Vec<f64>,
    pub d_counts: Vec<f64>,
    pub n_runs: usize,
    pub master_seed: u64,
}

impl PatternConfig {
    pub fn with_seed(master_seed: u64) -> Self {
        PatternConfig {
            k_max: 20,
            radii: (0..=40).map(|i| i as f64 * 50.0).collect(),
            d_counts: vec![500.0, 1000.0, 2000.0],
            n_runs: 100,
            master_seed,
        }
    }
}

/// Inhibit curve at one counting distance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InhibitCurve {
    pub d_count: f64,
    pub pairs: Vec<(f64, f64)>,
    pub mean_curve: Vec<(f64, f64)>,
}

/// Observed curves and null bands for one adjacent level pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelPairReport {
    pub upper_level: u32,
    pub lower_level: u32,
    pub observed_knn: KnnCurve,
    pub observed_coverage: CoverageCurve,
    pub inhibit: Vec<InhibitCurve>,
    pub knn_random1: NullBand,
    pub knn_random2: NullBand,
    pub coverage_random1: NullBand,
    pub coverage_random2: NullBand,
}

/// The full arrangement-pattern report over adjacent level pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatternReport {
    pub config: PatternConfig,
    pub pairs: Vec<LevelPairReport>,
}

/// Observed metrics plus null-model bands for every adjacent level pair.
/// `level_sets[i]` holds the centers of level i+1. Null runs derive their
/// seeds from `(master_seed, pair, model, run)`, so results are independent
/// of the parallel schedule.
pub fn pattern_report(
    level_sets: &[CellPointSet],
    road: &RoadMask,
    config: &PatternConfig,
    grid: &GridSpec,
) -> Result<PatternReport> {
    if level_sets.len() < 2 {
        return Err(Error::Precondition(format!(
            "pattern report needs >= 2 levels, got {}",
            level_sets.len()
        )));
    }
    let mut pairs = Vec::new();
    for i in 0..level_sets.len() - 1 {
        let a = &level_sets[i];
        let b = &level_sets[i + 1];
        let observed_knn = knn_curve(a, b, config.k_max, grid)?;
        let observed_coverage = coverage_curve(a, b, &config.radii, grid)?;
        let inhibit = config
            .d_counts
            .iter()
            .map(|&d| {
                let pairs = normalized_density_pairs(a, b, d, grid)?;
                let mean_curve = inhibit_curve(&pairs)?;
                Ok(InhibitCurve {
                    d_count: d,
                    pairs: pairs.pairs,
                    mean_curve,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        struct RunCurves {
            knn1: Vec<f64>,
            cov1: Vec<f64>,
            knn2: Vec<f64>,
            cov2: Vec<f64>,
        }
        let runs: Vec<RunCurves> = (0..config.n_runs)
            .into_par_iter()
            .map(|run| -> Result<RunCurves> {
                let seed1 = derive_seed(config.master_seed, &[i as u64, 1, run as u64]);
                let b_ran = null_model_random1(a, b.len(), road, seed1)?;
                let knn1 = knn_curve(a, &b_ran, config.k_max, grid)?.values;
                let cov1 = coverage_curve(a, &b_ran, &config.radii, grid)?.values;
                let seed2 = derive_seed(config.master_seed, &[i as u64, 2, run as u64]);
                let (a_ran, b_ran2) = null_model_random2(a.len(), b.len(), road, seed2)?;
                let knn2 = knn_curve(&a_ran, &b_ran2, config.k_max, grid)?.values;
                let cov2 = coverage_curve(&a_ran, &b_ran2, &config.radii, grid)?.values;
                Ok(RunCurves {
                    knn1,
                    cov1,
                    knn2,
                    cov2,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let ks_f: Vec<f64> = observed_knn.ks.iter().map(|&k| k as f64).collect();
        let knn1: Vec<Vec<f64>> = runs.iter().map(|r| r.knn1.clone()).collect();
        let knn2: Vec<Vec<f64>> = runs.iter().map(|r| r.knn2.clone()).collect();
        let cov1: Vec<Vec<f64>> = runs.iter().map(|r| r.cov1.clone()).collect();
        let cov2: Vec<Vec<f64>> = runs.iter().map(|r| r.cov2.clone()).collect();
        pairs.push(LevelPairReport {
            upper_level: i as u32 + 1,
            lower_level: i as u32 + 2,
            observed_knn,
            observed_coverage,
            inhibit,
            knn_random1: band_from_runs(ks_f.clone(), &knn1),
            knn_random2: band_from_runs(ks_f, &knn2),
            coverage_random1: band_from_runs(config.radii.clone(), &cov1),
            coverage_random2: band_from_runs(config.radii.clone(), &cov2),
        });
    }
    Ok(PatternReport {
        config: config.clone(),
        pairs,
    })
}

/// Centers of the first `levels_kept` levels as point sets.
pub fn level_center_sets(
    hotspots: &[crate::detect::Hotspot],
    partition: &crate::levels::LevelPartition,
    levels_kept: usize,
) -> Result<Vec<CellPointSet>> {
    partition
        .levels
        .iter()
        .take(levels_kept)
        .map(|level| CellPointSet::new(level.iter().map(|&i| hotspots[i].center).collect()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neighbors::{count_within, knn_distances};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> GridSpec {
        GridSpec::new(114.2, 30.5, 10.0, 500, 500, 30.55).unwrap()
    }

    fn set(cells: &[(usize, usize)]) -> CellPointSet {
        CellPointSet::new(cells.iter().map(|&(r, c)| Cell::new(r, c)).collect()).unwrap()
    }

    fn random_disjoint_sets(
        na: usize,
        nb: usize,
        extent: usize,
        rng: &mut ChaCha8Rng,
    ) -> (CellPointSet, CellPointSet) {
        let mut cells = std::collections::BTreeSet::new();
        while cells.len() < na + nb {
            cells.insert(Cell::new(
                rng.random_range(0..extent),
                rng.random_range(0..extent),
            ));
        }
        let all: Vec<Cell> = cells.into_iter().collect();
        (
            CellPointSet::new(all[..na].to_vec()).unwrap(),
            CellPointSet::new(all[na..].to_vec()).unwrap(),
        )
    }

    #[test]
    fn mean_knn_single_pair() {
        let g = grid();
        // A at cell (0,0) center; B center 50 m away (3-4-5).
        let a = set(&[(0, 0)]);
        let b = set(&[(4, 3)]);
        assert_eq!(mean_knn_distance(&a, &b, 1, &g).unwrap(), 50.0);
    }

    #[test]
    fn mean_knn_second_neighbor() {
        let g = grid();
        let a = set(&[(0, 0)]);
        let b = set(&[(4, 3), (8, 6)]); // 50 m and 100 m
        assert_eq!(mean_knn_distance(&a, &b, 2, &g).unwrap(), 100.0);
    }

    #[test]
    fn mean_knn_matches_brute_force() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(307);
        let (a, b) = random_disjoint_sets(30, 40, 400, &mut rng);
        for k in 1..=10 {
            let got = mean_knn_distance(&a, &b, k, &g).unwrap();
            let want: f64 = a
                .iter()
                .map(|&x| {
                    let mut d: Vec<f64> = b
                        .iter()
                        .map(|&y| g.cell_center(x).dist(&g.cell_center(y)))
                        .collect();
                    d.sort_by(|p, q| p.total_cmp(q));
                    d[k - 1]
                })
                .sum::<f64>()
                / a.len() as f64;
            assert!(
                (got - want).abs() <= 1e-9 * want.max(1.0),
                "k={k}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn knn_curve_monotone_in_k() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(311);
        let (a, b) = random_disjoint_sets(20, 30, 300, &mut rng);
        let curve = knn_curve(&a, &b, 15, &g).unwrap();
        assert!(curve.values.windows(2).all(|w| w[0] <= w[1] + 1e-12));
    }

    #[test]
    fn knn_requires_disjoint_sets() {
        let g = grid();
        let a = set(&[(1, 1), (2, 2)]);
        let b = set(&[(2, 2), (3, 3)]);
        assert!(matches!(
            mean_knn_distance(&a, &b, 1, &g),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn coverage_zero_radius_is_zero() {
        let g = grid();
        let a = set(&[(0, 0)]);
        let b = set(&[(0, 1), (5, 5)]);
        assert_eq!(coverage_ratio(&a, &b, 0.0, &g).unwrap(), 0.0);
    }

    #[test]
    fn coverage_beyond_diameter_is_one() {
        let g = grid();
        let a = set(&[(0, 0)]);
        let b = set(&[(0, 1), (5, 5), (100, 100)]);
        assert_eq!(coverage_ratio(&a, &b, 1e9, &g).unwrap(), 1.0);
    }

    #[test]
    fn coverage_empty_b_is_undefined() {
        let g = grid();
        let a = set(&[(0, 0)]);
        let b = CellPointSet::empty();
        assert!(matches!(
            coverage_ratio(&a, &b, 100.0, &g),
            Err(Error::UndefinedRatio(_))
        ));
    }

    #[test]
    fn coverage_matches_brute_force_sweep() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(313);
        let (a, b) = random_disjoint_sets(25, 35, 350, &mut rng);
        let radii: Vec<f64> = (0..20).map(|i| i as f64 * 137.0).collect();
        let curve = coverage_curve(&a, &b, &radii, &g).unwrap();
        for (&r, &v) in radii.iter().zip(&curve.values) {
            let brute = b
                .iter()
                .filter(|&&x| {
                    a.iter()
                        .map(|&y| g.cell_center(x).dist(&g.cell_center(y)))
                        .fold(f64::INFINITY, f64::min)
                        < r
                })
                .count() as f64
                / b.len() as f64;
            assert!((v - brute).abs() < 1e-12, "r={r}");
        }
        assert!(curve.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn density_pairs_four_region_example() {
        // Four regions far apart (d_count = 100 m within regions).
        // Region 1: center + 3 same-level neighbors, 4 next-level.
        // Region 4: center + 3 same-level neighbors, 1 next-level.
        // With self-inclusion both centers hit the same-level max (4), so
        // their pairs are (1, 1) and (1, 1/4).
        let g = grid();
        let mut a_cells = vec![
            // region 1 cluster (rows 0..): center (2,2)
            (2, 2),
            (2, 4),
            (4, 2),
            (4, 4),
            // region 2 (rows 100..): center + 1
            (102, 2),
            (102, 4),
            // region 3 (rows 200..): lone center
            (202, 2),
            // region 4 (rows 300..): center (302,2) + 3
            (302, 2),
            (302, 4),
            (304, 2),
            (304, 4),
        ];
        let b_cells = vec![
            // region 1: 4 next-level
            (3, 3),
            (3, 5),
            (5, 3),
            (5, 5),
            // region 2: 2 next-level
            (103, 3),
            (103, 5),
            // region 3: 1 next-level
            (203, 3),
            // region 4: only 1 next-level
            (303, 3),
        ];
        a_cells.sort();
        let a = set(&a_cells);
        let b = set(&b_cells);
        let pairs = normalized_density_pairs(&a, &b, 100.0, &g).unwrap();
        let idx_r1 = a.iter().position(|&c| c == Cell::new(2, 2)).unwrap();
        let idx_r4 = a.iter().position(|&c| c == Cell::new(302, 2)).unwrap();
        assert_eq!(pairs.pairs[idx_r1], (1.0, 1.0));
        assert_eq!(pairs.pairs[idx_r4], (1.0, 0.25));
    }

    #[test]
    fn density_pairs_empty_b_gives_zeros() {
        let g = grid();
        let a = set(&[(0, 0), (10, 10)]);
        let b = CellPointSet::empty();
        let pairs = normalized_density_pairs(&a, &b, 500.0, &g).unwrap();
        assert!(pairs.pairs.iter().all(|p| p.1 == 0.0));
        assert!(pairs.pairs.iter().any(|p| p.0 == 1.0));
    }

    #[test]
    fn density_pairs_match_brute_force() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(317);
        let (a, b) = random_disjoint_sets(30, 40, 300, &mut rng);
        let d = 700.0;
        let pairs = normalized_density_pairs(&a, &b, d, &g).unwrap();
        let count_brute = |x: Cell, targets: &CellPointSet| {
            targets
                .iter()
                .filter(|&&y| g.cell_center(x).dist2(&g.cell_center(y)) < d * d)
                .count()
        };
        let max_same = a.iter().map(|&x| count_brute(x, &a)).max().unwrap() as f64;
        let max_next = a.iter().map(|&x| count_brute(x, &b)).max().unwrap() as f64;
        for (i, &x) in a.iter().enumerate() {
            let same = count_brute(x, &a) as f64 / max_same;
            let next = count_brute(x, &b) as f64 / max_next;
            assert_eq!(pairs.pairs[i], (same, next));
        }
        assert!(pairs.pairs.iter().any(|p| p.0 == 1.0));
    }

    #[test]
    fn inhibit_curve_single_value() {
        let pairs = DensityPairSet {
            pairs: vec![(0.5, 0.3), (0.5, 0.3)],
            d_count: 100.0,
        };
        assert_eq!(inhibit_curve(&pairs).unwrap(), vec![(0.5, 0.3)]);
    }

    #[test]
    fn inhibit_curve_hand_grouping() {
        let pairs = DensityPairSet {
            pairs: vec![(0.5, 0.2), (0.5, 0.4), (1.0, 0.3)],
            d_count: 100.0,
        };
        let curve = inhibit_curve(&pairs).unwrap();
        assert_eq!(curve.len(), 2);
        assert_eq!(curve[0].0, 0.5);
        assert!((curve[0].1 - 0.3).abs() < 1e-12);
        assert_eq!(curve[1], (1.0, 0.3));
    }

    #[test]
    fn inhibit_curve_is_ascending_in_unit_square() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(331);
        let (a, b) = random_disjoint_sets(40, 50, 200, &mut rng);
        let pairs = normalized_density_pairs(&a, &b, 800.0, &g).unwrap();
        let curve = inhibit_curve(&pairs).unwrap();
        assert!(curve.windows(2).all(|w| w[0].0 < w[1].0));
        assert!(curve.iter().all(|p| (0.0..=1.0).contains(&p.1)));
    }

    fn full_road(extent: usize) -> RoadMask {
        let g = GridSpec::new(114.2, 30.5, 10.0, extent, extent, 30.55).unwrap();
        let cells: Vec<Cell> = (0..extent)
            .flat_map(|r| (0..extent).map(move |c| Cell::new(r, c)))
            .collect();
        RoadMask::from_cells(g, cells).unwrap()
    }

    #[test]
    fn random1_exhaustive_draw_returns_pool() {
        let road = full_road(10);
        let a = set(&[(0, 0), (1, 1)]);
        let drawn = null_model_random1(&a, 98, &road, 5).unwrap();
        assert_eq!(drawn.len(), 98);
        assert!(!drawn
            .iter()
            .any(|&c| c == Cell::new(0, 0) || c == Cell::new(1, 1)));
    }

    #[test]
    fn random1_same_seed_is_identical() {
        let road = full_road(20);
        let a = set(&[(3, 3)]);
        let d1 = null_model_random1(&a, 30, &road, 42).unwrap();
        let d2 = null_model_random1(&a, 30, &road, 42).unwrap();
        assert_eq!(d1.cells(), d2.cells());
        let d3 = null_model_random1(&a, 30, &road, 43).unwrap();
        assert_ne!(d1.cells(), d3.cells());
    }

    #[test]
    fn random1_insufficient_pool_errors() {
        let road = full_road(3);
        let a = set(&[(0, 0)]);
        assert!(matches!(
            null_model_random1(&a, 9, &road, 1),
            Err(Error::InsufficientTargets {
                needed: 9,
                available: 8
            })
        ));
    }

    #[test]
    fn random1_draws_are_uniform() {
        // 10,000 single-cell draws from 100 road cells: each cell's frequency
        // within 3 sigma of the multinomial expectation.
        let road = full_road(10);
        let a = CellPointSet::empty();
        let mut freq = std::collections::HashMap::new();
        for run in 0..10_000u64 {
            let drawn = null_model_random1(&a, 1, &road, derive_seed(99, &[run])).unwrap();
            *freq.entry(drawn.cells()[0]).or_insert(0usize) += 1;
        }
        let n = 10_000f64;
        let p = 1.0 / 100.0;
        let sigma = (n * p * (1.0 - p)).sqrt();
        for cell in road.cells() {
            let f = *freq.get(cell).unwrap_or(&0) as f64;
            assert!(
                (f - n * p).abs() <= 3.0 * sigma,
                "cell {cell:?} frequency {f} outside 3 sigma of {}",
                n * p
            );
        }
    }

    #[test]
    fn random2_exhaustive_draw_partitions_road() {
        let road = full_road(6);
        let (a, b) = null_model_random2(10, 26, &road, 7).unwrap();
        assert_eq!(a.len() + b.len(), 36);
        let mut all: Vec<Cell> = a.iter().chain(b.iter()).copied().collect();
        all.sort();
        assert_eq!(all, road.cells());
    }

    #[test]
    fn random2_same_seed_is_identical() {
        let road = full_road(15);
        let r1 = null_model_random2(5, 9, &road, 77).unwrap();
        let r2 = null_model_random2(5, 9, &road, 77).unwrap();
        assert_eq!(r1.0.cells(), r2.0.cells());
        assert_eq!(r1.1.cells(), r2.1.cells());
    }

    #[test]
    fn random2_pooled_draws_are_uniform() {
        // 10,000 draws of one upper and one lower cell from 100 road cells:
        // pooled per-cell frequency within 3 sigma of the multinomial
        // expectation 2/100.
        let road = full_road(10);
        let mut freq = std::collections::HashMap::new();
        for run in 0..10_000u64 {
            let (a, b) = null_model_random2(1, 1, &road, derive_seed(123, &[run])).unwrap();
            *freq.entry(a.cells()[0]).or_insert(0usize) += 1;
            *freq.entry(b.cells()[0]).or_insert(0usize) += 1;
        }
        let n = 10_000f64;
        let p = 2.0 / 100.0;
        let sigma = (n * p * (1.0 - p)).sqrt();
        for cell in road.cells() {
            let f = *freq.get(cell).unwrap_or(&0) as f64;
            assert!(
                (f - n * p).abs() <= 3.0 * sigma,
                "cell {cell:?} pooled frequency {f} outside 3 sigma of {}",
                n * p
            );
        }
    }

    #[test]
    fn quantile_interpolation() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 5.0);
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert!((quantile(&v, 0.10) - 1.4).abs() < 1e-12);
        assert!((quantile(&v, 0.90) - 4.6).abs() < 1e-12);
        assert_eq!(quantile(&[7.0], 0.10), 7.0);
    }

    #[test]
    fn pattern_report_needs_two_levels() {
        let g = grid();
        let road = full_road(10);
        let sets = vec![set(&[(1, 1)])];
        assert!(matches!(
            pattern_report(&sets, &road, &PatternConfig::with_seed(1), &g),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn pattern_report_single_run_bands_collapse() {
        let road = full_road(40);
        let g = road.grid().clone();
        let sets = vec![
            set(&[(5, 5), (30, 30)]),
            set(&[(6, 6), (10, 10), (31, 31), (35, 35)]),
        ];
        let mut cfg = PatternConfig::with_seed(11);
        cfg.k_max = 3;
        cfg.radii = vec![0.0, 100.0, 300.0];
        cfg.n_runs = 1;
        let report = pattern_report(&sets, &road, &cfg, &g).unwrap();
        let pair = &report.pairs[0];
        assert_eq!(pair.knn_random1.q10, pair.knn_random1.q50);
        assert_eq!(pair.knn_random1.q50, pair.knn_random1.q90);
        assert_eq!(pair.coverage_random2.q10, pair.coverage_random2.q90);
        assert_eq!(pair.knn_random1.n_runs, 1);
    }

    #[test]
    fn pattern_report_is_deterministic() {
        let road = full_road(40);
        let g = road.grid().clone();
        let sets = vec![
            set(&[(5, 5), (30, 30), (20, 8)]),
            set(&[(6, 6), (10, 10), (31, 31), (35, 35), (22, 9), (18, 6)]),
        ];
        let mut cfg = PatternConfig::with_seed(1234);
        cfg.k_max = 4;
        cfg.radii = vec![50.0, 150.0, 450.0];
        cfg.n_runs = 8;
        let r1 = pattern_report(&sets, &road, &cfg, &g).unwrap();
        let r2 = pattern_report(&sets, &road, &cfg, &g).unwrap();
        assert_eq!(
            serde_json::to_string(&r1).unwrap(),
            serde_json::to_string(&r2).unwrap()
        );
    }

    #[test]
    fn free_functions_match_index_methods() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(401);
        let (a, b) = random_disjoint_sets(10, 25, 200, &mut rng);
        let idx = NeighborIndex::build(&b, &g);
        for &x in a.iter() {
            let q = g.cell_center(x);
            assert_eq!(knn_distances(q, &b, 5, &g).unwrap(), idx.knn(q, 5).unwrap());
            assert_eq!(count_within(q, &b, 444.0, &g), idx.count_within(q, 444.0));
        }
    }
}
