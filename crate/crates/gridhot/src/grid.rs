//! Metric analysis grid: equirectangular projection, event binning, road
//! rasterization, and the cell/point types shared by every stage.
//!
//! All distances are Euclidean meters between cell centers. The grid origin
//! `(origin_lon, origin_lat)` maps to meter coordinate `(0, 0)`; cell `(r, c)`
//! covers `[c*s, (c+1)*s) x [r*s, (r+1)*s)` with its center at
//! `((c+0.5)*s, (r+0.5)*s)` for cell size `s`.

use crate::error::{Error, Result};
use serde::de::{self, SeqAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::HashSet;
use std::fmt;

/// Meters per degree of longitude at the equator.
pub const METERS_PER_DEGREE_LON: f64 = 111_320.0;
/// Meters per degree of latitude.
pub const METERS_PER_DEGREE_LAT: f64 = 110_540.0;

/// A grid cell index, ordered lexicographically by `(row, col)`.
///
/// Serialized as a compact `[row, col]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub fn new(row: usize, col: usize) -> Self {
        Cell { row, col }
    }

    /// Chebyshev distance in cells.
    pub fn chebyshev(&self, other: &Cell) -> usize {
        self.row
            .abs_diff(other.row)
            .max(self.col.abs_diff(other.col))
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        (self.row, self.col).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Cell {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct CellVisitor;
        impl<'de> Visitor<'de> for CellVisitor {
            type Value = Cell;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "a [row, col] pair")
            }
            fn visit_seq<A: SeqAccess<'de>>(
                self,
                mut seq: A,
            ) -> std::result::Result<Cell, A::Error> {
                let row = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let col = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(1, &self))?;
                Ok(Cell { row, col })
            }
        }
        deserializer.deserialize_seq(CellVisitor)
    }
}

/// A point in grid meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist2(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.dist2(other).sqrt()
    }
}

fn default_cell_size() -> f64 {
    10.0
}

/// The metric analysis lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin_lon: f64,
    pub origin_lat: f64,
    /// Cell edge length in meters.
    #[serde(default = "default_cell_size")]
    pub cell_size: f64,
    pub n_rows: usize,
    pub n_cols: usize,
    /// Reference latitude (degrees) for the equirectangular longitude scale.
    pub ref_latitude: f64,
}

impl GridSpec {
    pub fn new(
        origin_lon: f64,
        origin_lat: f64,
        cell_size: f64,
        n_rows: usize,
        n_cols: usize,
        ref_latitude: f64,
    ) -> Result<Self> {
        let spec = GridSpec {
            origin_lon,
            origin_lat,
            cell_size,
            n_rows,
            n_cols,
            ref_latitude,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cell_size.is_finite() && self.cell_size > 0.0) {
            return Err(Error::InvalidInput(format!(
                "cell_size must be positive, got {}",
                self.cell_size
            )));
        }
        if self.n_rows == 0 || self.n_cols == 0 {
            return Err(Error::InvalidInput(format!(
                "grid dimensions must be positive, got {}x{}",
                self.n_rows, self.n_cols
            )));
        }
        if !(self.origin_lon.is_finite()
            && self.origin_lat.is_finite()
            && self.ref_latitude.is_finite())
        {
            return Err(Error::InvalidCoordinate(
                "grid origin and reference latitude must be finite".into(),
            ));
        }
        if self.origin_lat.abs() >= 90.0 || self.ref_latitude.abs() >= 90.0 {
            return Err(Error::InvalidCoordinate(format!(
                "latitudes must satisfy |lat| < 90, got origin {} ref {}",
                self.origin_lat, self.ref_latitude
            )));
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.n_rows * self.n_cols
    }

    fn lon_scale(&self) -> f64 {
        METERS_PER_DEGREE_LON * self.ref_latitude.to_radians().cos()
    }

    /// Equirectangular projection about the grid origin.
    pub fn project(&self, lon: f64, lat: f64) -> Result<Point> {
        if !(lon.is_finite() && lat.is_finite()) {
            return Err(Error::InvalidCoordinate(format!(
                "non-finite coordinate ({lon}, {lat})"
            )));
        }
        if lat.abs() >= 90.0 {
            return Err(Error::InvalidCoordinate(format!(
                "latitude out of range: {lat}"
            )));
        }
        Ok(Point {
            x: (lon - self.origin_lon) * self.lon_scale(),
            y: (lat - self.origin_lat) * METERS_PER_DEGREE_LAT,
        })
    }

    /// Closed-form inverse of [`GridSpec::project`].
    pub fn unproject(&self, p: Point) -> (f64, f64) {
        (
            self.origin_lon + p.x / self.lon_scale(),
            self.origin_lat + p.y / METERS_PER_DEGREE_LAT,
        )
    }

    /// Center of a cell in grid meters.
    pub fn cell_center(&self, cell: Cell) -> Point {
        Point {
            x: (cell.col as f64 + 0.5) * self.cell_size,
            y: (cell.row as f64 + 0.5) * self.cell_size,
        }
    }

    /// Cell containing a meter point, or `None` when out of bounds.
    pub fn cell_at(&self, p: Point) -> Option<Cell> {
        let col = (p.x / self.cell_size).floor();
        let row = (p.y / self.cell_size).floor();
        if row < 0.0 || col < 0.0 {
            return None;
        }
        let (row, col) = (row as usize, col as usize);
        if row < self.n_rows && col < self.n_cols {
            Some(Cell { row, col })
        } else {
            None
        }
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.row < self.n_rows && cell.col < self.n_cols
    }

    /// Geographic coordinates of a cell center.
    pub fn cell_lonlat(&self, cell: Cell) -> (f64, f64) {
        self.unproject(self.cell_center(cell))
    }

    /// Bin geographic points into a density raster. Out-of-bounds points are
    /// counted and reported, not binned.
    pub fn bin_points(&self, points: &[(f64, f64)]) -> Result<BinOutcome> {
        self.validate()?;
        let mut counts = vec![0u32; self.n_cells()];
        let mut out_of_bounds = 0usize;
        for &(lon, lat) in points {
            let p = self.project(lon, lat)?;
            match self.cell_at(p) {
                Some(cell) => counts[cell.row * self.n_cols + cell.col] += 1,
                None => out_of_bounds += 1,
            }
        }
        Ok(BinOutcome {
            raster: DensityRaster::from_counts(self.clone(), counts)?,
            out_of_bounds,
        })
    }

    /// Rasterize road polylines (degrees) into a cell mask: the supercover of
    /// every projected segment, dilated by `buffer_cells` in Chebyshev metric.
    pub fn rasterize_roads(
        &self,
        segments: &[Vec<(f64, f64)>],
        buffer_cells: usize,
    ) -> Result<RoadMask> {
        let mut cover: HashSet<Cell> = HashSet::new();
        for line in segments {
            let pts: Vec<Point> = line
                .iter()
                .map(|&(lon, lat)| self.project(lon, lat))
                .collect::<Result<_>>()?;
            for pair in pts.windows(2) {
                segment_supercover(self, pair[0], pair[1], &mut cover);
            }
            if pts.len() == 1 {
                // Degenerate single-vertex line still marks its cell.
                segment_supercover(self, pts[0], pts[0], &mut cover);
            }
        }
        let mut cells: HashSet<Cell> = HashSet::new();
        let b = buffer_cells as isize;
        for cell in &cover {
            for dr in -b..=b {
                for dc in -b..=b {
                    let row = cell.row as isize + dr;
                    let col = cell.col as isize + dc;
                    if row >= 0
                        && col >= 0
                        && (row as usize) < self.n_rows
                        && (col as usize) < self.n_cols
                    {
                        cells.insert(Cell::new(row as usize, col as usize));
                    }
                }
            }
        }
        let mut cells: Vec<Cell> = cells.into_iter().collect();
        cells.sort();
        RoadMask::from_sorted_cells(self.clone(), cells)
    }
}

/// Chebyshev distance from a point to a segment, by ternary search over the
/// segment parameter (the objective is convex in t).
pub(crate) fn chebyshev_point_segment(p: Point, a: Point, b: Point) -> f64 {
    let f = |t: f64| {
        let x = a.x + t * (b.x - a.x);
        let y = a.y + t * (b.y - a.y);
        (x - p.x).abs().max((y - p.y).abs())
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..70 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    f(0.5 * (lo + hi)).min(f(0.0)).min(f(1.0))
}

/// Tolerance for closed-square intersection tests, in meters.
const COVER_EPS: f64 = 1e-9;

/// Collect the cells whose closed square the segment touches.
fn segment_supercover(grid: &GridSpec, a: Point, b: Point, out: &mut HashSet<Cell>) {
    let s = grid.cell_size;
    let len = a.dist(&b);
    let n_steps = (len / s).ceil() as usize + 1;
    let mut candidates: HashSet<(isize, isize)> = HashSet::new();
    for i in 0..=n_steps {
        let t = i as f64 / n_steps as f64;
        let x = a.x + t * (b.x - a.x);
        let y = a.y + t * (b.y - a.y);
        let (cr, cc) = ((y / s).floor() as isize, (x / s).floor() as isize);
        for dr in -2..=2isize {
            for dc in -2..=2isize {
                candidates.insert((cr + dr, cc + dc));
            }
        }
    }
    for (r, c) in candidates {
        if r < 0 || c < 0 || r as usize >= grid.n_rows || c as usize >= grid.n_cols {
            continue;
        }
        let cell = Cell::new(r as usize, c as usize);
        if chebyshev_point_segment(grid.cell_center(cell), a, b) <= 0.5 * s + COVER_EPS {
            out.insert(cell);
        }
    }
}

/// Result of binning: the raster plus the out-of-bounds count.
#[derive(Debug, Clone)]
pub struct BinOutcome {
    pub raster: DensityRaster,
    pub out_of_bounds: usize,
}

/// Per-cell event counts on a grid. Immutable after construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityRaster {
    grid: GridSpec,
    counts: Vec<u32>,
    total: u64,
}

impl DensityRaster {
    pub fn from_counts(grid: GridSpec, counts: Vec<u32>) -> Result<Self> {
        grid.validate()?;
        if counts.len() != grid.n_cells() {
            return Err(Error::InvalidInput(format!(
                "count vector length {} does not match grid {}x{}",
                counts.len(),
                grid.n_rows,
                grid.n_cols
            )));
        }
        let total = counts.iter().map(|&c| c as u64).sum();
        Ok(DensityRaster {
            grid,
            counts,
            total,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    #[inline]
    pub fn count(&self, cell: Cell) -> u32 {
        self.counts[cell.row * self.grid.n_cols + cell.col]
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Sum of counts over the members of a cell list.
    pub fn sum_over(&self, cells: &[Cell]) -> u64 {
        cells.iter().map(|&c| self.count(c) as u64).sum()
    }

    /// A copy with all counts outside the mask zeroed.
    pub fn masked(&self, mask: &RoadMask) -> DensityRaster {
        let mut counts = vec![0u32; self.counts.len()];
        for &cell in mask.cells() {
            let i = cell.row * self.grid.n_cols + cell.col;
            counts[i] = self.counts[i];
        }
        let total = counts.iter().map(|&c| c as u64).sum();
        DensityRaster {
            grid: self.grid.clone(),
            counts,
            total,
        }
    }
}

/// Set of road cells on a grid, sorted by `(row, col)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoadMask {
    grid: GridSpec,
    cells: Vec<Cell>,
}

impl RoadMask {
    pub fn from_cells(grid: GridSpec, mut cells: Vec<Cell>) -> Result<Self> {
        cells.sort();
        cells.dedup();
        Self::from_sorted_cells(grid, cells)
    }

    fn from_sorted_cells(grid: GridSpec, cells: Vec<Cell>) -> Result<Self> {
        grid.validate()?;
        if let Some(bad) = cells.iter().find(|c| !grid.contains(**c)) {
            return Err(Error::InvalidInput(format!(
                "road cell ({},{}) outside grid {}x{}",
                bad.row, bad.col, grid.n_rows, grid.n_cols
            )));
        }
        Ok(RoadMask { grid, cells })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.cells.binary_search(&cell).is_ok()
    }
}

/// Ordered list of distinct cells interpreted as points at cell centers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellPointSet {
    cells: Vec<Cell>,
}

impl CellPointSet {
    pub fn new(cells: Vec<Cell>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(cells.len());
        for c in &cells {
            if !seen.insert(*c) {
                return Err(Error::InvalidInput(format!(
                    "duplicate cell ({},{}) in point set",
                    c.row, c.col
                )));
            }
        }
        Ok(CellPointSet { cells })
    }

    pub fn empty() -> Self {
        CellPointSet { cells: Vec::new() }
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Cell> {
        self.cells.iter()
    }
}
