//! Exact k-nearest-neighbor and range queries over cell point sets.
//!
//! The index buckets cells into coarse tiles over the grid and answers
//! queries by widening ring search, so results are exact (never
//! approximate). Strict-inequality counting (`d(x, y) < d`) and inclusive
//! range collection (`d(x, y) <= d`) are deliberately separate: the density
//! counts use the former, the attraction kernels the latter. All comparisons
//! happen in squared-distance space, which is lossless for cell-center
//! geometry at city scales.

use crate::error::{Error, Result};
use crate::grid::{Cell, CellPointSet, GridSpec, Point};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Bucket edge length in cells.
const BUCKET_CELLS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cand {
    d2: f64,
    cell: Cell,
}

impl Eq for Cand {}

impl Ord for Cand {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2
            .total_cmp(&other.d2)
            .then_with(|| self.cell.cmp(&other.cell))
    }
}

impl PartialOrd for Cand {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Spatial index over the cell centers of one point set.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    cell_size: f64,
    bucket_m: f64,
    min_br: usize,
    min_bc: usize,
    n_brows: usize,
    n_bcols: usize,
    buckets: Vec<Vec<Cell>>,
    len: usize,
}

impl NeighborIndex {
    pub fn build(points: &CellPointSet, grid: &GridSpec) -> Self {
        let cell_size = grid.cell_size;
        let bucket_m = BUCKET_CELLS as f64 * cell_size;
        if points.is_empty() {
            return NeighborIndex {
                cell_size,
                bucket_m,
                min_br: 0,
                min_bc: 0,
                n_brows: 1,
                n_bcols: 1,
                buckets: vec![Vec::new()],
                len: 0,
            };
        }
        let min_br = points.iter().map(|c| c.row / BUCKET_CELLS).min().unwrap();
        let max_br = points.iter().map(|c| c.row / BUCKET_CELLS).max().unwrap();
        let min_bc = points.iter().map(|c| c.col / BUCKET_CELLS).min().unwrap();
        let max_bc = points.iter().map(|c| c.col / BUCKET_CELLS).max().unwrap();
        let n_brows = max_br - min_br + 1;
        let n_bcols = max_bc - min_bc + 1;
        let mut buckets = vec![Vec::new(); n_brows * n_bcols];
        for &cell in points.iter() {
            let br = cell.row / BUCKET_CELLS - min_br;
            let bc = cell.col / BUCKET_CELLS - min_bc;
            buckets[br * n_bcols + bc].push(cell);
        }
        for b in &mut buckets {
            b.sort();
        }
        NeighborIndex {
            cell_size,
            bucket_m,
            min_br,
            min_bc,
            n_brows,
            n_bcols,
            buckets,
            len: points.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn center(&self, cell: Cell) -> Point {
        Point::new(
            (cell.col as f64 + 0.5) * self.cell_size,
            (cell.row as f64 + 0.5) * self.cell_size,
        )
    }

    /// Bucket coordinate of a query point, clamped into the bucket grid.
    fn clamped_bucket(&self, q: Point) -> (usize, usize) {
        let br = (q.y / self.bucket_m).floor();
        let bc = (q.x / self.bucket_m).floor();
        let br = if br.is_nan() { 0.0 } else { br };
        let bc = if bc.is_nan() { 0.0 } else { bc };
        let br = (br as i64).clamp(self.min_br as i64, (self.min_br + self.n_brows - 1) as i64);
        let bc = (bc as i64).clamp(self.min_bc as i64, (self.min_bc + self.n_bcols - 1) as i64);
        ((br as usize) - self.min_br, (bc as usize) - self.min_bc)
    }

    /// The k smallest distances from `q` to indexed cell centers, ascending.
    /// Ties at the k-th place are broken by `(row, col)` of the target cell.
    pub fn knn(&self, q: Point, k: usize) -> Result<Vec<f64>> {
        if k == 0 {
            return Ok(Vec::new());
        }
        if self.len < k {
            return Err(Error::InsufficientTargets {
                needed: k,
                available: self.len,
            });
        }
        let (qbr, qbc) = self.clamped_bucket(q);
        let max_shell = self.n_brows.max(self.n_bcols);
        // Max-heap keeps the k best candidates; its top is the current k-th.
        let mut heap: BinaryHeap<Cand> = BinaryHeap::with_capacity(k + 1);
        for shell in 0..=max_shell {
            if heap.len() == k {
                let bound = (shell.saturating_sub(1)) as f64 * self.bucket_m;
                if bound * bound > heap.peek().unwrap().d2 {
                    break;
                }
            }
            self.for_shell_buckets(qbr, qbc, shell, |cells| {
                for &cell in cells {
                    let d2 = q.dist2(&self.center(cell));
                    let cand = Cand { d2, cell };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            });
        }
        let mut out: Vec<Cand> = heap.into_vec();
        out.sort();
        Ok(out.into_iter().map(|c| c.d2.sqrt()).collect())
    }

    /// Number of indexed centers strictly within `d` meters of `q`.
    pub fn count_within(&self, q: Point, d: f64) -> usize {
        if d <= 0.0 {
            return 0;
        }
        let d2 = d * d;
        let mut count = 0;
        self.for_disc_buckets(q, d, |cells| {
            for &cell in cells {
                if q.dist2(&self.center(cell)) < d2 {
                    count += 1;
                }
            }
        });
        count
    }

    /// Distances (ascending, ties by cell order) to all indexed centers with
    /// `d(q, y) <= d`.
    pub fn distances_within(&self, q: Point, d: f64) -> Vec<f64> {
        if d < 0.0 {
            return Vec::new();
        }
        let d2 = d * d;
        let mut found: Vec<Cand> = Vec::new();
        self.for_disc_buckets(q, d, |cells| {
            for &cell in cells {
                let dd = q.dist2(&self.center(cell));
                if dd <= d2 {
                    found.push(Cand { d2: dd, cell });
                }
            }
        });
        found.sort();
        found.into_iter().map(|c| c.d2.sqrt()).collect()
    }

    /// Distance to the nearest indexed center, if any.
    pub fn nearest(&self, q: Point) -> Option<f64> {
        if self.len == 0 {
            return None;
        }
        self.knn(q, 1).ok().map(|v| v[0])
    }

    fn for_shell_buckets<F: FnMut(&[Cell])>(&self, qbr: usize, qbc: usize, shell: usize, mut f: F) {
        let (qbr, qbc) = (qbr as i64, qbc as i64);
        let s = shell as i64;
        let visit = |br: i64, bc: i64, f: &mut F| {
            if br >= 0 && bc >= 0 && (br as usize) < self.n_brows && (bc as usize) < self.n_bcols {
                f(&self.buckets[br as usize * self.n_bcols + bc as usize]);
            }
        };
        if s == 0 {
            visit(qbr, qbc, &mut f);
            return;
        }
        for bc in (qbc - s)..=(qbc + s) {
            visit(qbr - s, bc, &mut f);
            visit(qbr + s, bc, &mut f);
        }
        for br in (qbr - s + 1)..=(qbr + s - 1) {
            visit(br, qbc - s, &mut f);
            visit(br, qbc + s, &mut f);
        }
    }

    fn for_disc_buckets<F: FnMut(&[Cell])>(&self, q: Point, d: f64, mut f: F) {
        let lo_br = (((q.y - d) / self.bucket_m).floor() as i64).max(self.min_br as i64);
        let hi_br = (((q.y + d) / self.bucket_m).floor() as i64)
            .min((self.min_br + self.n_brows - 1) as i64);
        let lo_bc = (((q.x - d) / self.bucket_m).floor() as i64).max(self.min_bc as i64);
        let hi_bc = (((q.x + d) / self.bucket_m).floor() as i64)
            .min((self.min_bc + self.n_bcols - 1) as i64);
        for br in lo_br..=hi_br {
            for bc in lo_bc..=hi_bc {
                let i = (br as usize - self.min_br) * self.n_bcols + (bc as usize - self.min_bc);
                f(&self.buckets[i]);
            }
        }
    }
}

/// The k smallest Euclidean distances from `x` to target cell centers.
pub fn knn_distances(
    x: Point,
    targets: &CellPointSet,
    k: usize,
    grid: &GridSpec,
) -> Result<Vec<f64>> {
    NeighborIndex::build(targets, grid).knn(x, k)
}

/// `|{y in targets : d(x, y) < d}|` with strict inequality.
pub fn count_within(x: Point, targets: &CellPointSet, d: f64, grid: &GridSpec) -> usize {
    NeighborIndex::build(targets, grid).count_within(x, d)
}
