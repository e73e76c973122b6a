//! Generative cascade simulation: attraction mechanisms, background splits,
//! level-by-level center placement, and RMSE goodness-of-fit.
//!
//! Level 1 centers seed the cascade. Each later level draws its centers from
//! road-cell candidates with probability proportional to an attraction
//! kernel evaluated against the previous level's (simulated plus background)
//! centers, removing an exclusion square around every pick. Background
//! centers are the observed ones beyond `d_cut` of all higher-level
//! background centers; they cannot be reproduced by the kernels and are kept
//! from the start.

use crate::error::{Error, Result};
use crate::grid::{Cell, CellPointSet, GridSpec, RoadMask};
use crate::neighbors::NeighborIndex;
use crate::rng::{derive_seed, WeightedSampler};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::str::FromStr;

/// Attraction kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    /// Cumulative distance decay of the K nearest higher-level centers.
    Knn,
    /// Distance decay summed over every higher-level center within range.
    Global,
    /// Uniform within range of any higher-level center.
    Random,
}

impl Mechanism {
    pub const ALL: [Mechanism; 3] = [Mechanism::Knn, Mechanism::Global, Mechanism::Random];

    pub fn name(&self) -> &'static str {
        match self {
            Mechanism::Knn => "knn",
            Mechanism::Global => "global",
            Mechanism::Random => "random",
        }
    }
}

impl FromStr for Mechanism {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "knn" => Ok(Mechanism::Knn),
            "global" => Ok(Mechanism::Global),
            "random" => Ok(Mechanism::Random),
            other => Err(Error::InvalidInput(format!(
                "unknown mechanism {other:?} (expected knn, global, or random)"
            ))),
        }
    }
}

/// Parameters of the attraction kernel and the placement exclusion.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MechanismParams {
    pub mechanism: Mechanism,
    /// Number of nearest centers summed by the knn kernel.
    #[serde(default = "default_k_nearest")]
    pub k_nearest: usize,
    /// Distance-decay exponent.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Interaction cutoff in meters.
    #[serde(default = "default_d_cut")]
    pub d_cut: f64,
    /// Half-width of the exclusion square around a placed center, in cells.
    pub x_radius_cells: usize,
}

fn default_k_nearest() -> usize {
    3
}
fn default_alpha() -> f64 {
    1.0
}
fn default_d_cut() -> f64 {
    1000.0
}

impl MechanismParams {
    pub fn new(mechanism: Mechanism, x_radius_cells: usize) -> Self {
        MechanismParams {
            mechanism,
            k_nearest: default_k_nearest(),
            alpha: default_alpha(),
            d_cut: default_d_cut(),
            x_radius_cells,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_nearest == 0 {
            return Err(Error::InvalidInput("k_nearest must be >= 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidInput("alpha must be positive".into()));
        }
        if !(self.d_cut > 0.0 && self.d_cut.is_finite()) {
            return Err(Error::InvalidInput("d_cut must be positive".into()));
        }
        if self.x_radius_cells == 0 {
            return Err(Error::InvalidInput("x_radius_cells must be >= 1".into()));
        }
        Ok(())
    }
}

/// Attraction of a candidate cell given higher-level centers, evaluated
/// against a prebuilt index. Distances beyond `d_cut` contribute nothing,
/// so every query is bounded by the cutoff disc.
pub(crate) fn attraction_indexed(
    q: crate::grid::Point,
    idx: &NeighborIndex,
    params: &MechanismParams,
) -> f64 {
    let within = idx.distances_within(q, params.d_cut);
    match params.mechanism {
        Mechanism::Knn => within
            .iter()
            .take(params.k_nearest)
            .map(|&d| d.powf(-params.alpha))
            .sum(),
        Mechanism::Global => within.iter().map(|&d| d.powf(-params.alpha)).sum(),
        Mechanism::Random => {
            if within.is_empty() {
                0.0
            } else {
                1.0
            }
        }
    }
}

/// Attraction of cell `x` toward the centers in `h`. Errors when `h` is
/// empty or when `x` coincides with a member (singular distance).
pub fn attraction(
    x: Cell,
    h: &CellPointSet,
    params: &MechanismParams,
    grid: &GridSpec,
) -> Result<f64> {
    params.validate()?;
    if h.is_empty() {
        return Err(Error::Precondition("H must be nonempty".into()));
    }
    if h.iter().any(|&c| c == x) {
        return Err(Error::SingularDistance(x));
    }
    let idx = NeighborIndex::build(h, grid);
    Ok(attraction_indexed(grid.cell_center(x), &idx, params))
}

/// Split observed levels into background sets: `B_1 = O_1`; for i >= 2,
/// `B_i` holds the observed centers whose minimum distance to every
/// higher-level background center exceeds `d_cut`.
pub fn background_split(
    observed: &[CellPointSet],
    d_cut: f64,
    grid: &GridSpec,
) -> Result<Vec<CellPointSet>> {
    if observed.len() < 2 {
        return Err(Error::Precondition(
            "background split needs >= 2 levels".into(),
        ));
    }
    let mut backgrounds: Vec<CellPointSet> = vec![observed[0].clone()];
    let mut union: Vec<Cell> = observed[0].cells().to_vec();
    for level in &observed[1..] {
        let idx = NeighborIndex::build(&CellPointSet::new(union.clone())?, grid);
        let kept: Vec<Cell> = level
            .iter()
            .copied()
            .filter(|&c| match idx.nearest(grid.cell_center(c)) {
                Some(d) => d > d_cut,
                None => true,
            })
            .collect();
        union.extend(&kept);
        backgrounds.push(CellPointSet::new(kept)?);
    }
    Ok(backgrounds)
}

/// Record of one simulated level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimLevelRecord {
    pub level: u32,
    pub background: Vec<Cell>,
    pub simulated: Vec<Cell>,
    pub candidates_before: usize,
    pub candidates_after: usize,
}

/// One cascade realization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationRun {
    pub params: MechanismParams,
    pub seed: u64,
    pub levels: Vec<SimLevelRecord>,
    pub complete: bool,
    pub failure: Option<String>,
}

/// Mutable candidate pool shared across the levels of one cascade.
struct CandidatePool {
    cells: Vec<Cell>,
    index_of: HashMap<Cell, usize>,
    alive: Vec<bool>,
    n_alive: usize,
}

impl CandidatePool {
    fn new(cells: Vec<Cell>) -> Self {
        let index_of = cells.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let n = cells.len();
        CandidatePool {
            cells,
            index_of,
            alive: vec![true; n],
            n_alive: n,
        }
    }

    /// Remove every alive candidate within the Chebyshev square of `center`.
    fn exclude_square(&mut self, center: Cell, radius: usize, sampler: &mut WeightedSampler) {
        let r0 = center.row.saturating_sub(radius);
        let c0 = center.col.saturating_sub(radius);
        for row in r0..=center.row + radius {
            for col in c0..=center.col + radius {
                if let Some(&i) = self.index_of.get(&Cell::new(row, col)) {
                    if self.alive[i] {
                        self.alive[i] = false;
                        self.n_alive -= 1;
                        sampler.remove(i);
                    }
                }
            }
        }
    }
}

/// Draw `n` centers from the pool with probability proportional to the
/// cached attraction weights, excluding a square around each pick.
fn pick_level(
    pool: &mut CandidatePool,
    weights: Vec<f64>,
    n: usize,
    x_radius: usize,
    level: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Cell>> {
    let mut sampler = WeightedSampler::new(weights);
    // Re-kill entries that died in earlier levels.
    for (i, alive) in pool.alive.iter().enumerate() {
        if !alive {
            sampler.remove(i);
        }
    }
    let mut picked = Vec::with_capacity(n);
    for _ in 0..n {
        if pool.n_alive == 0 {
            return Err(Error::Exhausted {
                level,
                requested: n,
                picked: picked.len(),
            });
        }
        let idx = sampler.sample(rng).ok_or(Error::ZeroAttraction {
            level,
            alive: pool.n_alive,
        })?;
        let cell = pool.cells[idx];
        picked.push(cell);
        pool.exclude_square(cell, x_radius, &mut sampler);
    }
    Ok(picked)
}

/// One level of picks against fixed higher-level centers. Candidates must be
/// disjoint from `h_prev`; picked cells carve exclusion squares out of the
/// candidate set as they land.
pub fn simulate_level(
    h_prev: &CellPointSet,
    candidates: &[Cell],
    n: usize,
    params: &MechanismParams,
    seed: u64,
    grid: &GridSpec,
) -> Result<Vec<Cell>> {
    params.validate()?;
    if h_prev.is_empty() {
        return Err(Error::Precondition("H must be nonempty".into()));
    }
    let h_set: HashSet<Cell> = h_prev.iter().copied().collect();
    if candidates.iter().any(|c| h_set.contains(c)) {
        return Err(Error::Precondition(
            "candidates must be disjoint from the higher-level set".into(),
        ));
    }
    let idx = NeighborIndex::build(h_prev, grid);
    let weights: Vec<f64> = candidates
        .par_iter()
        .map(|&c| attraction_indexed(grid.cell_center(c), &idx, params))
        .collect();
    let mut pool = CandidatePool::new(candidates.to_vec());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pick_level(&mut pool, weights, n, params.x_radius_cells, 0, &mut rng)
}

/// Run the full cascade: backgrounds seeded, candidates drawn from road
/// cells minus all background centers, one level at a time. A level-wise
/// exhaustion or zero-attraction aborts with a partial run (`complete =
/// false`); precondition violations are hard errors.
pub fn simulate_cascade(
    observed: &[CellPointSet],
    road: &RoadMask,
    params: &MechanismParams,
    seed: u64,
    grid: &GridSpec,
) -> Result<SimulationRun> {
    params.validate()?;
    if observed.is_empty() || observed[0].is_empty() {
        return Err(Error::Precondition(
            "observed level 1 must be nonempty".into(),
        ));
    }
    if observed.len() < 2 {
        return Err(Error::Precondition("cascade needs >= 2 levels".into()));
    }
    let backgrounds = background_split(observed, params.d_cut, grid)?;
    let all_bg: HashSet<Cell> = backgrounds.iter().flat_map(|b| b.iter().copied()).collect();
    let candidates: Vec<Cell> = road
        .cells()
        .iter()
        .copied()
        .filter(|c| !all_bg.contains(c))
        .collect();
    let mut pool = CandidatePool::new(candidates);

    let mut levels = vec![SimLevelRecord {
        level: 1,
        background: backgrounds[0].cells().to_vec(),
        simulated: Vec::new(),
        candidates_before: pool.n_alive,
        candidates_after: pool.n_alive,
    }];
    let mut h_current: Vec<Cell> = backgrounds[0].cells().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 1..observed.len() {
        let n = observed[i].len() - backgrounds[i].len();
        let before = pool.n_alive;
        let h_set = CellPointSet::new(h_current.clone())?;
        let picked = if n == 0 {
            Vec::new()
        } else {
            if h_set.is_empty() {
                return Err(Error::Precondition(format!(
                    "no higher-level centers available to generate level {}",
                    i + 1
                )));
            }
            let idx = NeighborIndex::build(&h_set, grid);
            let weights: Vec<f64> = pool
                .cells
                .par_iter()
                .zip(&pool.alive)
                .map(|(&c, &alive)| {
                    if alive {
                        attraction_indexed(grid.cell_center(c), &idx, params)
                    } else {
                        0.0
                    }
                })
                .collect();
            match pick_level(
                &mut pool,
                weights,
                n,
                params.x_radius_cells,
                i + 1,
                &mut rng,
            ) {
                Ok(picked) => picked,
                Err(err @ (Error::Exhausted { .. } | Error::ZeroAttraction { .. })) => {
                    return Ok(SimulationRun {
                        params: *params,
                        seed,
                        levels,
                        complete: false,
                        failure: Some(err.to_string()),
                    });
                }
                Err(other) => return Err(other),
            }
        };
        let mut simulated = picked;
        simulated.sort();
        levels.push(SimLevelRecord {
            level: i as u32 + 1,
            background: backgrounds[i].cells().to_vec(),
            simulated: simulated.clone(),
            candidates_before: before,
            candidates_after: pool.n_alive,
        });
        h_current = backgrounds[i]
            .cells()
            .iter()
            .copied()
            .chain(simulated)
            .collect();
    }
    Ok(SimulationRun {
        params: *params,
        seed,
        levels,
        complete: true,
        failure: None,
    })
}

/// RMSE between observed and simulated neighbor counts at the observed
/// centers: sqrt of the mean squared difference of strict-within counts.
pub fn rmse_compare(
    o: &CellPointSet,
    s: &CellPointSet,
    d_rmse: f64,
    grid: &GridSpec,
) -> Result<f64> {
    if o.is_empty() {
        return Err(Error::Precondition("observed set must be nonempty".into()));
    }
    let idx_o = NeighborIndex::build(o, grid);
    let idx_s = NeighborIndex::build(s, grid);
    let sum_sq: f64 = o
        .iter()
        .map(|&x| {
            let q = grid.cell_center(x);
            let diff = idx_o.count_within(q, d_rmse) as f64 - idx_s.count_within(q, d_rmse) as f64;
            diff * diff
        })
        .sum();
    Ok((sum_sq / o.len() as f64).sqrt())
}

/// RMSE quantile curve for one mechanism and level over the d_rmse grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RmseCurve {
    pub mechanism: Mechanism,
    pub level: u32,
    pub d_rmse: Vec<f64>,
    pub q10: Vec<f64>,
    pub q50: Vec<f64>,
    pub q90: Vec<f64>,
}

/// Results of repeated cascade simulation across mechanisms.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MechanismExperiment {
    pub curves: Vec<RmseCurve>,
    pub n_sims: usize,
    pub master_seed: u64,
    /// Partial (excluded) run count per mechanism, in input order.
    pub partial_runs: Vec<(Mechanism, usize)>,
}

/// Run `n_sims` cascades per mechanism with paired per-run seeds, compare
/// each complete run against the observed levels over the d_rmse grid, and
/// aggregate 10/50/90% quantiles. Partial runs are excluded and counted.
pub fn mechanism_experiment(
    observed: &[CellPointSet],
    road: &RoadMask,
    base: &MechanismParams,
    mechanisms: &[Mechanism],
    d_rmse_grid: &[f64],
    n_sims: usize,
    master_seed: u64,
    grid: &GridSpec,
) -> Result<MechanismExperiment> {
    if n_sims == 0 {
        return Err(Error::Precondition("n_sims must be >= 1".into()));
    }
    if d_rmse_grid.is_empty() {
        return Err(Error::Precondition("d_rmse grid must be nonempty".into()));
    }
    let mut curves = Vec::new();
    let mut partial_runs = Vec::new();
    for &mechanism in mechanisms {
        let params = MechanismParams { mechanism, ..*base };
        // runs[r] = Some(per-level per-d rmse) for complete runs.
        let runs: Vec<Option<Vec<Vec<f64>>>> = (0..n_sims)
            .into_par_iter()
            .map(|run| -> Result<Option<Vec<Vec<f64>>>> {
                let seed = derive_seed(master_seed, &[run as u64]);
                let sim = simulate_cascade(observed, road, &params, seed, grid)?;
                if !sim.complete {
                    return Ok(None);
                }
                let mut per_level = Vec::with_capacity(sim.levels.len() - 1);
                for (i, rec) in sim.levels.iter().enumerate().skip(1) {
                    let h: Vec<Cell> = rec
                        .background
                        .iter()
                        .chain(rec.simulated.iter())
                        .copied()
                        .collect();
                    let h_set = CellPointSet::new(h)?;
                    let row = d_rmse_grid
                        .iter()
                        .map(|&d| rmse_compare(&observed[i], &h_set, d, grid))
                        .collect::<Result<Vec<f64>>>()?;
                    per_level.push(row);
                }
                Ok(Some(per_level))
            })
            .collect::<Result<Vec<_>>>()?;
        let complete: Vec<&Vec<Vec<f64>>> = runs.iter().flatten().collect();
        let n_partial = n_sims - complete.len();
        partial_runs.push((mechanism, n_partial));
        if complete.is_empty() {
            return Err(Error::Exhausted {
                level: 0,
                requested: n_sims,
                picked: 0,
            });
        }
        let n_levels = complete[0].len();
        for li in 0..n_levels {
            let mut q10 = Vec::new();
            let mut q50 = Vec::new();
            let mut q90 = Vec::new();
            for (di, _) in d_rmse_grid.iter().enumerate() {
                let mut col: Vec<f64> = complete.iter().map(|r| r[li][di]).collect();
                col.sort_by(|a, b| a.total_cmp(b));
                q10.push(crate::patterns::quantile(&col, 0.10));
                q50.push(crate::patterns::quantile(&col, 0.50));
                q90.push(crate::patterns::quantile(&col, 0.90));
            }
            curves.push(RmseCurve {
                mechanism,
                level: li as u32 + 2,
                d_rmse: d_rmse_grid.to_vec(),
                q10,
                q50,
                q90,
            });
        }
    }
    Ok(MechanismExperiment {
        curves,
        n_sims,
        master_seed,
        partial_runs,
    })
}
