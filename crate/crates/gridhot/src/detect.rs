//! Local hotspot detection: windowed local maxima with an elbow-selected
//! radius, gravity-rule reassignment of contested cells, and popularity
//! thresholding.

use crate::error::{Error, Result};
use crate::grid::{Cell, CellPointSet, DensityRaster, RoadMask};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::HashMap;
use std::fmt;

/// A detected local hotspot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Hotspot {
    /// The local-maximum cell.
    pub center: Cell,
    /// Member cells (sorted), always containing the center.
    pub members: Vec<Cell>,
    /// Sum of raster counts over the members.
    pub stops: u64,
    /// Popularity level, assigned by classification (1 = most popular).
    pub level: Option<u32>,
}

/// Neighborhood radius: fixed cell count or elbow-selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadiusSpec {
    Auto,
    Fixed(usize),
}

impl Serialize for RadiusSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            RadiusSpec::Auto => s.serialize_str("auto"),
            RadiusSpec::Fixed(r) => s.serialize_u64(*r as u64),
        }
    }
}

impl<'de> Deserialize<'de> for RadiusSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = RadiusSpec;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "\"auto\" or a positive integer")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<RadiusSpec, E> {
                if v == "auto" {
                    Ok(RadiusSpec::Auto)
                } else {
                    Err(E::custom(format!("unknown radius spec {v:?}")))
                }
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<RadiusSpec, E> {
                if v == 0 {
                    return Err(E::custom("radius must be positive"));
                }
                Ok(RadiusSpec::Fixed(v as usize))
            }
        }
        d.deserialize_any(V)
    }
}

/// Minimum stop count for a final hotspot: fixed or head/tail-selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinStops {
    Auto,
    Fixed(u64),
}

impl Serialize for MinStops {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            MinStops::Auto => s.serialize_str("auto"),
            MinStops::Fixed(v) => s.serialize_u64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for MinStops {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = MinStops;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "\"auto\" or a positive integer")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<MinStops, E> {
                if v == "auto" {
                    Ok(MinStops::Auto)
                } else {
                    Err(E::custom(format!("unknown min_stops spec {v:?}")))
                }
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<MinStops, E> {
                if v == 0 {
                    return Err(E::custom("min_stops must be positive"));
                }
                Ok(MinStops::Fixed(v))
            }
        }
        d.deserialize_any(V)
    }
}

/// Mass used by the gravity rule when reassigning contested cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GravityMass {
    /// Count of the center cell itself.
    #[default]
    CenterCount,
    /// Total counts in the center's full square window.
    WindowStops,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectionParams {
    #[serde(default = "default_radius")]
    pub radius_cells: RadiusSpec,
    /// Inclusive range scanned when the radius is `auto`.
    #[serde(default = "default_search_range")]
    pub radius_search_range: (usize, usize),
    #[serde(default = "default_min_stops")]
    pub min_stops: MinStops,
    /// Distance exponent in the gravity rule.
    #[serde(default = "default_gravity_exponent")]
    pub gravity_exponent: f64,
    #[serde(default)]
    pub gravity_mass: GravityMass,
}

fn default_radius() -> RadiusSpec {
    RadiusSpec::Auto
}
fn default_search_range() -> (usize, usize) {
    (1, 15)
}
fn default_min_stops() -> MinStops {
    MinStops::Auto
}
fn default_gravity_exponent() -> f64 {
    2.0
}

impl Default for DetectionParams {
    fn default() -> Self {
        DetectionParams {
            radius_cells: default_radius(),
            radius_search_range: default_search_range(),
            min_stops: default_min_stops(),
            gravity_exponent: default_gravity_exponent(),
            gravity_mass: GravityMass::default(),
        }
    }
}

/// Detection output with the resolved parameters recorded.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Detection {
    pub hotspots: Vec<Hotspot>,
    /// Radius actually used (elbow-selected when auto).
    pub radius_cells: usize,
    /// Threshold actually applied in the final step.
    pub min_stops_threshold: f64,
    /// The (radius, maxima count) curve, present when the radius was auto.
    pub radius_curve: Option<Vec<(usize, usize)>>,
}

/// Sliding-window maximum over a row-major raster: Chebyshev window of the
/// given radius, computed separably with monotonic deques.
fn window_max(counts: &[u32], n_rows: usize, n_cols: usize, radius: usize) -> Vec<u32> {
    use std::collections::VecDeque;
    // Max over [j-radius, j+radius] along each line of `len` elements.
    fn pass(
        src: &[u32],
        dst: &mut [u32],
        n_lines: usize,
        len: usize,
        stride_line: usize,
        stride_elem: usize,
        radius: usize,
    ) {
        let mut deque: VecDeque<usize> = VecDeque::with_capacity(len);
        for line in 0..n_lines {
            deque.clear();
            let base = line * stride_line;
            let at = |i: usize| src[base + i * stride_elem];
            for i in 0..len + radius {
                if i < len {
                    while let Some(&back) = deque.back() {
                        if at(back) <= at(i) {
                            deque.pop_back();
                        } else {
                            break;
                        }
                    }
                    deque.push_back(i);
                }
                if i >= radius {
                    let j = i - radius;
                    while let Some(&front) = deque.front() {
                        if front + radius < j {
                            deque.pop_front();
                        } else {
                            break;
                        }
                    }
                    dst[base + j * stride_elem] = at(*deque.front().unwrap());
                }
            }
        }
    }
    let mut tmp = vec![0u32; counts.len()];
    let mut out = vec![0u32; counts.len()];
    // Row pass: max over columns within radius.
    pass(counts, &mut tmp, n_rows, n_cols, n_cols, 1, radius);
    // Column pass: max over rows within radius.
    pass(&tmp, &mut out, n_cols, n_rows, 1, n_cols, radius);
    out
}

/// Every nonzero cell that holds the maximum count of its square
/// neighborhood and is the lexicographically smallest cell achieving it.
pub fn find_local_maxima(raster: &DensityRaster, radius_cells: usize) -> Result<CellPointSet> {
    if radius_cells == 0 {
        return Err(Error::Precondition("radius_cells must be >= 1".into()));
    }
    let g = raster.grid();
    let (n_rows, n_cols) = (g.n_rows, g.n_cols);
    let counts = raster.counts();
    let wmax = window_max(counts, n_rows, n_cols, radius_cells);
    let r = radius_cells;
    // A window-max cell qualifies only if it is the lexicographically first
    // achiever of that max within its own window. Scanning in lex order and
    // stopping at the first achiever keeps this O(1) amortized on plateaus.
    let first_achiever_is_self = |row: usize, col: usize, v: u32| -> bool {
        let r0 = row.saturating_sub(r);
        let c0 = col.saturating_sub(r);
        let r1 = (row + r).min(n_rows - 1);
        let c1 = (col + r).min(n_cols - 1);
        for rr in r0..=r1 {
            for cc in c0..=c1 {
                if counts[rr * n_cols + cc] == v {
                    return (rr, cc) == (row, col);
                }
            }
        }
        unreachable!("cell is an achiever of its own window max")
    };
    let mut maxima = Vec::new();
    for row in 0..n_rows {
        for col in 0..n_cols {
            let i = row * n_cols + col;
            let v = counts[i];
            if v != 0 && v == wmax[i] && first_achiever_is_self(row, col, v) {
                maxima.push(Cell::new(row, col));
            }
        }
    }
    CellPointSet::new(maxima)
}

/// Perpendicular distance from `(x, y)` to the chord through `a` and `b`.
fn chord_distance(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let norm = (dx * dx + dy * dy).sqrt();
    if norm == 0.0 {
        return 0.0;
    }
    (dy * (p.0 - a.0) - dx * (p.1 - a.1)).abs() / norm
}

/// Elbow-point radius selection: the radius maximizing perpendicular
/// distance from `(r, |maxima(r)|)` to the chord joining the curve ends.
pub fn select_radius_elbow(raster: &DensityRaster, search_range: (usize, usize)) -> Result<usize> {
    let (lo, hi) = search_range;
    let g = raster.grid();
    let max_allowed = g.n_rows.min(g.n_cols) / 2;
    if lo < 1 || lo > hi || hi > max_allowed {
        return Err(Error::Precondition(format!(
            "radius search range {lo}..={hi} must lie within 1..={max_allowed}"
        )));
    }
    if hi - lo + 1 < 3 {
        return Err(Error::NoElbow(format!(
            "need at least 3 radii, got {}",
            hi - lo + 1
        )));
    }
    let curve: Vec<(usize, usize)> = (lo..=hi)
        .map(|r| Ok((r, find_local_maxima(raster, r)?.len())))
        .collect::<Result<_>>()?;
    elbow_of_curve(&curve)
}

/// Elbow of a generic (r, m) curve; exposed for reuse on cached curves.
pub fn elbow_of_curve(curve: &[(usize, usize)]) -> Result<usize> {
    if curve.len() < 3 {
        return Err(Error::NoElbow(format!(
            "need at least 3 radii, got {}",
            curve.len()
        )));
    }
    if curve.iter().all(|&(_, m)| m == curve[0].1) {
        return Err(Error::NoElbow(
            "maxima count is constant over the range".into(),
        ));
    }
    let first = (curve[0].0 as f64, curve[0].1 as f64);
    let last = (
        curve[curve.len() - 1].0 as f64,
        curve[curve.len() - 1].1 as f64,
    );
    // Curve is scanned in ascending r, so ties keep the smallest radius.
    let mut best: Option<(f64, usize)> = None;
    for &(r, m) in curve {
        let d = chord_distance(first, last, (r as f64, m as f64));
        if best.map_or(true, |(bd, _)| d > bd) {
            best = Some((d, r));
        }
    }
    let (bd, br) = best.unwrap();
    if bd <= 1e-9 {
        return Err(Error::NoElbow(
            "curve is linear: zero chord distance everywhere".into(),
        ));
    }
    Ok(br)
}

fn window_cells(
    center: Cell,
    radius: usize,
    n_rows: usize,
    n_cols: usize,
) -> impl Iterator<Item = Cell> {
    let r0 = center.row.saturating_sub(radius);
    let c0 = center.col.saturating_sub(radius);
    let r1 = (center.row + radius).min(n_rows - 1);
    let c1 = (center.col + radius).min(n_cols - 1);
    (r0..=r1).flat_map(move |rr| (c0..=c1).map(move |cc| Cell::new(rr, cc)))
}

fn is_local_max(raster: &DensityRaster, cell: Cell, radius: usize) -> bool {
    let g = raster.grid();
    let v = raster.count(cell);
    if v == 0 {
        return false;
    }
    for other in window_cells(cell, radius, g.n_rows, g.n_cols) {
        let w = raster.count(other);
        if w > v {
            return false;
        }
        if w == v && other < cell {
            return false;
        }
    }
    true
}

/// Assign every nonzero cell within the radius of at least one center to the
/// center with the highest gravity `mass / dist^exponent`; the center's own
/// cell is assigned unconditionally. Ties go to the nearer center, then to
/// the lexicographically smaller one.
pub fn reshape_neighborhoods(
    centers: &CellPointSet,
    raster: &DensityRaster,
    radius_cells: usize,
    gravity_exponent: f64,
    gravity_mass: GravityMass,
) -> Result<Vec<Hotspot>> {
    if centers.is_empty() {
        return Err(Error::Precondition("centers must be nonempty".into()));
    }
    let g = raster.grid();
    for &c in centers.iter() {
        if !is_local_max(raster, c, radius_cells) {
            return Err(Error::InconsistentInput(format!(
                "center ({},{}) is not a local maximum at radius {}",
                c.row, c.col, radius_cells
            )));
        }
    }
    let mass_of = |center: Cell| -> f64 {
        match gravity_mass {
            GravityMass::CenterCount => raster.count(center) as f64,
            GravityMass::WindowStops => window_cells(center, radius_cells, g.n_rows, g.n_cols)
                .map(|c| raster.count(c) as f64)
                .sum(),
        }
    };

    // Claim of a cell: (gravity, squared distance, center), resolved by
    // larger gravity, then smaller distance, then smaller center.
    struct Claim {
        gravity: f64,
        d2: f64,
        center: Cell,
    }
    let mut claims: HashMap<Cell, Claim> = HashMap::new();
    let mut sorted_centers: Vec<Cell> = centers.iter().copied().collect();
    sorted_centers.sort();
    for &center in &sorted_centers {
        let mass = mass_of(center);
        let cp = g.cell_center(center);
        for cell in window_cells(center, radius_cells, g.n_rows, g.n_cols) {
            if raster.count(cell) == 0 {
                continue;
            }
            let (gravity, d2) = if cell == center {
                (f64::INFINITY, 0.0)
            } else {
                let d2 = cp.dist2(&g.cell_center(cell));
                (mass / d2.sqrt().powf(gravity_exponent), d2)
            };
            let incoming = Claim {
                gravity,
                d2,
                center,
            };
            claims
                .entry(cell)
                .and_modify(|cur| {
                    let win = incoming.gravity > cur.gravity
                        || (incoming.gravity == cur.gravity
                            && (incoming.d2 < cur.d2
                                || (incoming.d2 == cur.d2 && incoming.center < cur.center)));
                    if win {
                        *cur = Claim {
                            gravity: incoming.gravity,
                            d2: incoming.d2,
                            center: incoming.center,
                        };
                    }
                })
                .or_insert(incoming);
        }
    }

    let mut members: HashMap<Cell, Vec<Cell>> = HashMap::new();
    for (cell, claim) in claims {
        members.entry(claim.center).or_default().push(cell);
    }
    let mut hotspots: Vec<Hotspot> = sorted_centers
        .iter()
        .map(|&center| {
            let mut m = members.remove(&center).unwrap_or_default();
            m.sort();
            let stops = raster.sum_over(&m);
            Hotspot {
                center,
                members: m,
                stops,
                level: None,
            }
        })
        .collect();
    hotspots.sort_by_key(|h| h.center);
    Ok(hotspots)
}

/// Recursive head/tail threshold: split at the mean, recurse on the head
/// while it holds under 40% of the current set and at least 3 elements;
/// the threshold is the mean at the final split.
pub fn head_tail_threshold(values: &[u64]) -> f64 {
    let mut current: Vec<u64> = values.to_vec();
    loop {
        let mean = current.iter().map(|&v| v as f64).sum::<f64>() / current.len() as f64;
        let head: Vec<u64> = current
            .iter()
            .copied()
            .filter(|&v| (v as f64) > mean)
            .collect();
        if head.len() >= 3 && (head.len() as f64) < 0.4 * current.len() as f64 {
            current = head;
        } else {
            return mean;
        }
    }
}

/// Keep hotspots with `stops >= min_stops` (or the head/tail threshold when
/// auto). Returns the surviving hotspots and the threshold applied.
pub fn threshold_popular(prelim: Vec<Hotspot>, min_stops: MinStops) -> Result<(Vec<Hotspot>, f64)> {
    if prelim.is_empty() {
        return Err(Error::Precondition(
            "preliminary hotspot list must be nonempty".into(),
        ));
    }
    let threshold = match min_stops {
        MinStops::Fixed(v) => v as f64,
        MinStops::Auto => {
            let stops: Vec<u64> = prelim.iter().map(|h| h.stops).collect();
            head_tail_threshold(&stops)
        }
    };
    let kept: Vec<Hotspot> = prelim
        .into_iter()
        .filter(|h| h.stops as f64 >= threshold)
        .collect();
    Ok((kept, threshold))
}

/// The full three-step detection pipeline. When a road mask is given, the
/// raster is restricted to road cells before step 1.
pub fn detect(
    raster: &DensityRaster,
    road_mask: Option<&RoadMask>,
    params: &DetectionParams,
) -> Result<Detection> {
    let masked;
    let working: &DensityRaster = match road_mask {
        Some(mask) => {
            masked = raster.masked(mask);
            &masked
        }
        None => raster,
    };
    let mut radius_curve = None;
    let radius = match params.radius_cells {
        RadiusSpec::Fixed(r) => r,
        RadiusSpec::Auto => {
            let (lo, hi) = params.radius_search_range;
            let curve: Vec<(usize, usize)> = (lo..=hi)
                .map(|r| Ok((r, find_local_maxima(working, r)?.len())))
                .collect::<Result<_>>()?;
            let g = working.grid();
            let max_allowed = g.n_rows.min(g.n_cols) / 2;
            if lo < 1 || lo > hi || hi > max_allowed {
                return Err(Error::Precondition(format!(
                    "radius search range {lo}..={hi} must lie within 1..={max_allowed}"
                )));
            }
            let r = elbow_of_curve(&curve)?;
            radius_curve = Some(curve);
            r
        }
    };
    let centers = find_local_maxima(working, radius)?;
    if centers.is_empty() {
        return Ok(Detection {
            hotspots: Vec::new(),
            radius_cells: radius,
            min_stops_threshold: 0.0,
            radius_curve,
        });
    }
    let prelim = reshape_neighborhoods(
        &centers,
        working,
        radius,
        params.gravity_exponent,
        params.gravity_mass,
    )?;
    let (hotspots, threshold) = threshold_popular(prelim, params.min_stops)?;
    Ok(Detection {
        hotspots,
        radius_cells: radius,
        min_stops_threshold: threshold,
        radius_curve,
    })
}
