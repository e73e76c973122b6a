//! Synthetic-city generator: grid streets, planted hotspot centers with
//! known levels, and scattered stop events. The planted lower levels follow
//! the same KNN distance-decay kernel the simulator fits, so recovery
//! experiments have a known-true generator. Two switches shape the planted
//! arrangement: the accompany kernel (off = uniform placement on roads) and
//! a cap on lower-level centers per disc (the inhibiting regime).

use crate::error::{Error, Result};
use crate::grid::{Cell, CellPointSet, GridSpec, RoadMask};
use crate::neighbors::NeighborIndex;
use crate::rng::WeightedSampler;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// Distance-decay kernel used to plant lower-level centers. Unlike the
/// simulator's kernel, `alpha = 0` is allowed here: with a huge `d_cut` it
/// makes the weights flat, reducing placement to uniform-on-roads.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AccompanySpec {
    #[serde(default = "default_k_nearest")]
    pub k_nearest: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_decay")]
    pub d_cut: f64,
}

fn default_k_nearest() -> usize {
    3
}
fn default_alpha() -> f64 {
    1.0
}
fn default_decay() -> f64 {
    1000.0
}

impl Default for AccompanySpec {
    fn default() -> Self {
        AccompanySpec {
            k_nearest: default_k_nearest(),
            alpha: default_alpha(),
            d_cut: default_decay(),
        }
    }
}

/// Inhibition switch for the planted arrangement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Inhibition {
    #[default]
    None,
    /// Around dense higher-level clusters (at least `dense_threshold`
    /// higher-level centers within `radius` of the candidate), reject a
    /// candidate once `max_count` same-level centers sit within `radius`.
    /// A zero threshold caps everywhere.
    CapPerDisc {
        radius: f64,
        max_count: usize,
        #[serde(default)]
        dense_threshold: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticCitySpec {
    #[serde(default = "default_origin_lon")]
    pub origin_lon: f64,
    #[serde(default = "default_origin_lat")]
    pub origin_lat: f64,
    #[serde(default = "default_cell_size")]
    pub cell_size: f64,
    pub n_rows: usize,
    pub n_cols: usize,
    /// Streets run every this many cells, both directions.
    pub street_spacing_cells: usize,
    /// The hotspot radius the detector is expected to recover.
    pub planted_radius_cells: usize,
    pub n_level1: usize,
    /// Center count of level i+1 relative to level 1 (one entry per extra level).
    pub level_multipliers: Vec<usize>,
    /// Kernel for planting lower levels; absent = uniform on roads.
    pub accompany: Option<AccompanySpec>,
    #[serde(default)]
    pub inhibition: Inhibition,
    /// Gaussian scatter of stops around each center, meters.
    pub stop_scatter_sigma: f64,
    /// Chebyshev truncation of the scatter, in cells; defaults to the
    /// planted radius.
    #[serde(default)]
    pub stop_window_cells: Option<usize>,
    /// Stops generated per hotspot, one entry per level.
    pub stops_per_hotspot: Vec<u64>,
    pub seed: u64,
}

fn default_origin_lon() -> f64 {
    114.2
}
fn default_origin_lat() -> f64 {
    30.5
}
fn default_cell_size() -> f64 {
    10.0
}

impl SyntheticCitySpec {
    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(
            self.origin_lon,
            self.origin_lat,
            self.cell_size,
            self.n_rows,
            self.n_cols,
            self.origin_lat,
        )
    }

    pub fn level_counts(&self) -> Vec<usize> {
        let mut counts = vec![self.n_level1];
        counts.extend(self.level_multipliers.iter().map(|&m| self.n_level1 * m));
        counts
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        if self.street_spacing_cells == 0 {
            return Err(Error::Infeasible("street spacing must be >= 1".into()));
        }
        if self.planted_radius_cells == 0 {
            return Err(Error::Infeasible("planted radius must be >= 1".into()));
        }
        if self.n_level1 == 0 {
            return Err(Error::Infeasible("need at least one level-1 center".into()));
        }
        let n_levels = 1 + self.level_multipliers.len();
        if self.stops_per_hotspot.len() != n_levels {
            return Err(Error::Infeasible(format!(
                "stops_per_hotspot has {} entries for {} levels",
                self.stops_per_hotspot.len(),
                n_levels
            )));
        }
        if !(self.stop_scatter_sigma.is_finite() && self.stop_scatter_sigma >= 0.0) {
            return Err(Error::Infeasible("stop scatter sigma must be >= 0".into()));
        }
        // Spacing feasibility: every center blocks a square of side
        // 4*radius+1 cells; they must fit into the grid with slack.
        let total: usize = self.level_counts().iter().sum();
        let stamp = 4 * self.planted_radius_cells + 1;
        if total * stamp * stamp > self.n_rows * self.n_cols / 2 {
            return Err(Error::Infeasible(format!(
                "{total} centers with spacing stamps of {stamp}x{stamp} cells cannot fit a {}x{} grid",
                self.n_rows, self.n_cols
            )));
        }
        Ok(())
    }
}

/// A generated city: road mask, planted centers per level, and stop events.
#[derive(Debug, Clone)]
pub struct SyntheticCity {
    pub grid: GridSpec,
    pub road: RoadMask,
    pub levels: Vec<CellPointSet>,
    pub stops: Vec<(f64, f64)>,
}

/// Ground-truth record written alongside the generated files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub grid: GridSpec,
    pub planted_radius_cells: usize,
    /// (cell, level) per planted center, level 1 first.
    pub centers: Vec<(Cell, u32)>,
}

impl SyntheticCity {
    pub fn ground_truth(&self, planted_radius_cells: usize) -> GroundTruth {
        let centers = self
            .levels
            .iter()
            .enumerate()
            .flat_map(|(i, set)| set.iter().map(move |&c| (c, i as u32 + 1)))
            .collect();
        GroundTruth {
            grid: self.grid.clone(),
            planted_radius_cells,
            centers,
        }
    }
}

fn street_cells(spec: &SyntheticCitySpec) -> Vec<Cell> {
    let s = spec.street_spacing_cells;
    let mut cells = Vec::new();
    for r in 0..spec.n_rows {
        for c in 0..spec.n_cols {
            if r % s == 0 || c % s == 0 {
                cells.push(Cell::new(r, c));
            }
        }
    }
    cells
}

/// Planting weight of a candidate: the simulator's KNN kernel, with
/// `alpha = 0` allowed (flat limit).
fn plant_weight(q: crate::grid::Point, idx: &NeighborIndex, acc: &AccompanySpec) -> f64 {
    idx.distances_within(q, acc.d_cut)
        .iter()
        .take(acc.k_nearest)
        .map(|&d| {
            if acc.alpha == 0.0 {
                1.0
            } else {
                d.powf(-acc.alpha)
            }
        })
        .sum()
}

pub fn generate(spec: &SyntheticCitySpec) -> Result<SyntheticCity> {
    spec.validate()?;
    let grid = spec.grid()?;
    let road = RoadMask::from_cells(grid.clone(), street_cells(spec))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let counts = spec.level_counts();
    // Spacing: pairwise Chebyshev distance strictly above 2 * radius, so
    // every placed center blocks a square of Chebyshev radius 2 * radius.
    let block_radius = 2 * spec.planted_radius_cells;
    let mut blocked: HashSet<Cell> = HashSet::new();
    let block = |center: Cell, blocked: &mut HashSet<Cell>| {
        let r0 = center.row.saturating_sub(block_radius);
        let c0 = center.col.saturating_sub(block_radius);
        for row in r0..=(center.row + block_radius).min(spec.n_rows - 1) {
            for col in c0..=(center.col + block_radius).min(spec.n_cols - 1) {
                blocked.insert(Cell::new(row, col));
            }
        }
    };

    let mut levels: Vec<CellPointSet> = Vec::with_capacity(counts.len());
    for (li, &count) in counts.iter().enumerate() {
        let prev_idx = if li > 0 {
            Some(NeighborIndex::build(&levels[li - 1], &grid))
        } else {
            None
        };
        let mut placement = LevelPlacement::new(&spec.inhibition, li, prev_idx.as_ref());
        if li == 0 || spec.accompany.is_none() {
            // Uniform dart throwing on road cells.
            let max_attempts = 1000 * count.max(1);
            let mut attempts = 0;
            while placement.placed.len() < count {
                attempts += 1;
                if attempts > max_attempts {
                    return Err(Error::Infeasible(format!(
                        "could not place {count} level-{} centers after {max_attempts} attempts",
                        li + 1
                    )));
                }
                let cell = road.cells()[rng.random_range(0..road.len())];
                if blocked.contains(&cell) {
                    continue;
                }
                if placement.try_place(cell, &grid) {
                    block(cell, &mut blocked);
                }
            }
        } else {
            let acc = spec.accompany.as_ref().unwrap();
            let idx = prev_idx.as_ref().expect("li > 0 here");
            let weights: Vec<f64> = road
                .cells()
                .iter()
                .map(|&c| {
                    if blocked.contains(&c) {
                        0.0
                    } else {
                        plant_weight(grid.cell_center(c), idx, acc)
                    }
                })
                .collect();
            let mut sampler = WeightedSampler::new(weights);
            while placement.placed.len() < count {
                let Some(pick) = sampler.sample(&mut rng) else {
                    return Err(Error::Infeasible(format!(
                        "candidate weights exhausted placing level {} ({} of {count} placed)",
                        li + 1,
                        placement.placed.len()
                    )));
                };
                // Rejections are permanent: both constraints are monotone.
                sampler.remove(pick);
                let cell = road.cells()[pick];
                if blocked.contains(&cell) {
                    continue;
                }
                if placement.try_place(cell, &grid) {
                    block(cell, &mut blocked);
                }
            }
        }
        levels.push(CellPointSet::new(placement.placed)?);
    }

    // Scatter stops: a fixed fraction exactly at the center cell keeps the
    // peak at the planted cell, the rest spread by truncated Gaussian.
    let mut stops: Vec<(f64, f64)> = Vec::new();
    let window = spec.stop_window_cells.unwrap_or(spec.planted_radius_cells);
    for (li, level) in levels.iter().enumerate() {
        let n = spec.stops_per_hotspot[li];
        let n_at_center = n.div_ceil(4);
        let normal = Normal::new(0.0, spec.stop_scatter_sigma.max(1e-9)).unwrap();
        for &center in level.iter() {
            let cp = grid.cell_center(center);
            for _ in 0..n_at_center {
                stops.push(grid.unproject(cp));
            }
            for _ in n_at_center..n {
                let mut point = cp;
                for _ in 0..64 {
                    let candidate = crate::grid::Point::new(
                        cp.x + normal.sample(&mut rng),
                        cp.y + normal.sample(&mut rng),
                    );
                    match grid.cell_at(candidate) {
                        Some(cell) if cell.chebyshev(&center) <= window => {
                            point = candidate;
                            break;
                        }
                        _ => {}
                    }
                }
                stops.push(grid.unproject(point));
            }
        }
    }

    Ok(SyntheticCity {
        grid,
        road,
        levels,
        stops,
    })
}

/// Same-level placement state enforcing the cap-per-disc invariant inside
/// dense higher-level zones: after every accepted placement, each placed
/// center in a dense zone has at most `max_count` same-level centers within
/// the disc radius. Rejections are monotone (density of higher-level
/// centers is fixed, same-level counts only grow), so a rejected candidate
/// stays invalid for the rest of the level.
struct LevelPlacement<'a> {
    placed: Vec<Cell>,
    neighbor_counts: Vec<usize>,
    cap: Option<(f64, usize, usize)>,
    prev_idx: Option<&'a NeighborIndex>,
}

impl<'a> LevelPlacement<'a> {
    fn new(
        inhibition: &Inhibition,
        level_index: usize,
        prev_idx: Option<&'a NeighborIndex>,
    ) -> Self {
        let cap = match inhibition {
            Inhibition::CapPerDisc {
                radius,
                max_count,
                dense_threshold,
            } if level_index > 0 => Some((*radius, *max_count, *dense_threshold)),
            _ => None,
        };
        LevelPlacement {
            placed: Vec::new(),
            neighbor_counts: Vec::new(),
            cap,
            prev_idx,
        }
    }

    fn in_dense_zone(&self, q: crate::grid::Point, radius: f64, dense_threshold: usize) -> bool {
        if dense_threshold == 0 {
            return true;
        }
        match self.prev_idx {
            Some(idx) => idx.count_within(q, radius) >= dense_threshold,
            None => false,
        }
    }

    fn try_place(&mut self, cell: Cell, grid: &GridSpec) -> bool {
        let Some((radius, max_count, dense_threshold)) = self.cap else {
            self.placed.push(cell);
            return true;
        };
        let q = grid.cell_center(cell);
        if !self.in_dense_zone(q, radius, dense_threshold) {
            // Outside dense zones the cap does not apply, but the candidate
            // still counts toward its capped neighbors.
            let near: Vec<usize> = self
                .placed
                .iter()
                .enumerate()
                .filter(|(_, &c)| q.dist(&grid.cell_center(c)) < radius)
                .map(|(i, _)| i)
                .collect();
            for &i in &near {
                self.neighbor_counts[i] += 1;
            }
            self.neighbor_counts.push(near.len());
            self.placed.push(cell);
            return true;
        }
        let near: Vec<usize> = self
            .placed
            .iter()
            .enumerate()
            .filter(|(_, &c)| q.dist(&grid.cell_center(c)) < radius)
            .map(|(i, _)| i)
            .collect();
        if near.len() >= max_count || near.iter().any(|&i| self.neighbor_counts[i] >= max_count) {
            return false;
        }
        for &i in &near {
            self.neighbor_counts[i] += 1;
        }
        self.neighbor_counts.push(near.len());
        self.placed.push(cell);
        true
    }
}
