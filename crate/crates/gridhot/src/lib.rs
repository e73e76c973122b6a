//! Local hotspot detection and hierarchical arrangement analysis on metric
//! grids.
//!
//! The crate covers the full workflow for fine-grained point-event hotspots
//! (tens of meters across, e.g. popular pick-up spots on a 10 m city grid):
//!
//! 1. **Detection** ([`detect`]): windowed local-maximum search with an
//!    elbow-selected neighborhood radius, gravity-rule reassignment of
//!    contested cells, and adaptive head/tail thresholding.
//! 2. **Level classification** ([`levels`]): iterative Lorenz-curve (Loubar)
//!    splitting of hotspots into popularity levels.
//! 3. **Arrangement metrics** ([`patterns`]): mean k-nearest-neighbor
//!    distance and coverage ratio between adjacent levels (the accompanying
//!    pattern), normalized-density pairs (the inhibiting pattern), and two
//!    road-constrained random null models with quantile bands.
//! 4. **Generative simulation** ([`sim`]): a level-by-level cascade placing
//!    lower-level centers by a KNN distance-decay kernel, compared against
//!    global-decay and purely random mechanisms via neighbor-count RMSE.
//!
//! A synthetic-city generator ([`synth`]) provides planted ground truth, and
//! [`pipeline`] wires the stages into the file-based batch workflow used by
//! the `gridhot` binary. Every randomized step takes an explicit seed and is
//! reproducible regardless of thread count.
//!
//! # Example
//!
//! ```
//! use gridhot::detect::{detect, DetectionParams, MinStops, RadiusSpec};
//! use gridhot::grid::GridSpec;
//! use gridhot::levels::classify_levels;
//!
//! // A 200 x 200 grid of 10 m cells with two event clusters.
//! let grid = GridSpec::new(114.2, 30.5, 10.0, 200, 200, 30.55)?;
//! let mut points = Vec::new();
//! for i in 0..40 {
//!     let (lon, lat) = grid.cell_lonlat(gridhot::grid::Cell::new(50, 50 + i % 2));
//!     points.push((lon, lat));
//!     let (lon, lat) = grid.cell_lonlat(gridhot::grid::Cell::new(150, 150));
//!     points.push((lon, lat));
//! }
//! let raster = grid.bin_points(&points)?.raster;
//! let params = DetectionParams {
//!     radius_cells: RadiusSpec::Fixed(4),
//!     min_stops: MinStops::Fixed(1),
//!     ..Default::default()
//! };
//! let detection = detect(&raster, None, &params)?;
//! assert_eq!(detection.hotspots.len(), 2);
//! let partition = classify_levels(&detection.hotspots)?;
//! assert!(partition.n_levels() >= 1);
//! # Ok::<(), gridhot::Error>(())
//! ```
//!
//! Runnable walkthroughs for each capability live under `examples/`:
//!
//! ```bash
//! cargo run --example detect_hotspots
//! cargo run --example classify_levels
//! cargo run --example accompanying_pattern
//! cargo run --example inhibiting_pattern
//! cargo run --example cascade_simulation
//! cargo run --example mechanism_comparison
//! cargo run --example synthetic_city
//! cargo run --example svg_report
//! ```

pub mod config;
pub mod detect;
pub mod error;
pub mod grid;
pub mod io;
pub mod levels;
pub mod neighbors;
pub mod patterns;
pub mod pipeline;
pub mod rng;
pub mod sim;
pub mod svg;
pub mod synth;

pub use detect::{Detection, DetectionParams, Hotspot, MinStops, RadiusSpec};
pub use error::{Error, Result};
pub use grid::{Cell, CellPointSet, DensityRaster, GridSpec, Point, RoadMask};
pub use levels::{LevelPartition, LorenzCurve};
pub use neighbors::NeighborIndex;
pub use patterns::{CoverageCurve, DensityPairSet, KnnCurve, NullBand, PatternReport};
pub use sim::{Mechanism, MechanismParams, SimulationRun};
pub use synth::{SyntheticCity, SyntheticCitySpec};
