//! Stage orchestration behind the CLI: each stage is a pure function of its
//! input files, the config, and the master seed. Stages write their outputs
//! plus a manifest chaining input hashes, and reject stale mixes.

use crate::config::PipelineConfig;
use crate::detect::{self, Hotspot};
use crate::error::{Error, Result};
use crate::grid::{CellPointSet, RoadMask};
use crate::io::{self, StageManifest};
use crate::levels::{self, LevelPartition};
use crate::patterns::{self, PatternConfig, PatternReport};
use crate::rng::derive_seed;
use crate::sim::{self, MechanismExperiment, MechanismParams};
use crate::svg::{self, BandSeries, LineSeries};
use crate::synth::{self, SyntheticCitySpec};
use std::path::Path;

pub const HOTSPOTS_JSONL: &str = "hotspots.jsonl";
pub const HOTSPOTS_CSV: &str = "hotspots.csv";
pub const ROAD_MASK_CSV: &str = "road_mask.csv";
pub const CLASSIFIED_JSONL: &str = "hotspots_classified.jsonl";
pub const LEVELS_JSON: &str = "levels.json";
pub const LEVEL_TABLE_CSV: &str = "level_table.csv";
pub const PATTERN_REPORT_JSON: &str = "pattern_report.json";
pub const KNN_CURVES_CSV: &str = "knn_curves.csv";
pub const COVERAGE_CURVES_CSV: &str = "coverage_curves.csv";
pub const INHIBIT_CURVES_CSV: &str = "inhibit_curves.csv";
pub const EXPERIMENT_JSON: &str = "mechanism_experiment.json";
pub const SYNTH_STOPS_CSV: &str = "stops.csv";
pub const SYNTH_ROADS_CSV: &str = "roads.csv";
pub const SYNTH_TRUTH_JSON: &str = "ground_truth.json";

pub struct DetectSummary {
    pub n_hotspots: usize,
    pub radius_cells: usize,
    pub out_of_bounds: usize,
}

/// Detect stage: bin stops, optionally restrict to roads, run detection,
/// write hotspot outputs and the stage manifest.
pub fn run_detect(
    config: &PipelineConfig,
    stops_path: &Path,
    roads_path: Option<&Path>,
    out_dir: &Path,
) -> Result<DetectSummary> {
    std::fs::create_dir_all(out_dir)?;
    let stops = io::read_stops_csv(stops_path)?;
    if stops.is_empty() {
        eprintln!(
            "warning: stops file {} contains no rows",
            stops_path.display()
        );
    }
    let road_mask = match roads_path {
        Some(path) => {
            let mask = io::read_roads(path, &config.grid, config.road_buffer_cells)?;
            if mask.is_empty() {
                eprintln!(
                    "warning: road file {} produced an empty mask",
                    path.display()
                );
            }
            Some(mask)
        }
        None => None,
    };
    let binned = config.grid.bin_points(&stops)?;
    if binned.out_of_bounds > 0 {
        eprintln!(
            "warning: {} of {} stops fall outside the grid extent",
            binned.out_of_bounds,
            stops.len()
        );
    }
    let detection = if binned.raster.total() == 0 {
        detect::Detection {
            hotspots: Vec::new(),
            radius_cells: match config.detection.radius_cells {
                detect::RadiusSpec::Fixed(r) => r,
                detect::RadiusSpec::Auto => 0,
            },
            min_stops_threshold: 0.0,
            radius_curve: None,
        }
    } else {
        detect::detect(&binned.raster, road_mask.as_ref(), &config.detection)?
    };

    let hotspots_path = out_dir.join(HOTSPOTS_JSONL);
    io::write_hotspots_jsonl(&hotspots_path, &detection.hotspots, &config.grid)?;
    let csv_path = out_dir.join(HOTSPOTS_CSV);
    io::write_hotspots_csv(&csv_path, &detection.hotspots, &config.grid)?;

    let mut manifest = StageManifest::new("detect", &config.grid, config.master_seed)?;
    manifest.record_input("stops", stops_path)?;
    if let Some(mask) = &road_mask {
        let mask_path = out_dir.join(ROAD_MASK_CSV);
        io::write_road_cells_csv(&mask_path, mask)?;
        manifest.record_input("roads", roads_path.unwrap())?;
        manifest.record_output(ROAD_MASK_CSV, &mask_path)?;
    }
    manifest.record_output(HOTSPOTS_JSONL, &hotspots_path)?;
    manifest.record_output(HOTSPOTS_CSV, &csv_path)?;
    manifest.set_info("n_stops", stops.len());
    manifest.set_info("out_of_bounds", binned.out_of_bounds);
    manifest.set_info("n_hotspots", detection.hotspots.len());
    manifest.set_info("radius_cells", detection.radius_cells);
    manifest.set_info("min_stops_threshold", detection.min_stops_threshold);
    if let Some(curve) = &detection.radius_curve {
        manifest.set_info("radius_curve", curve);
    }
    manifest.write(out_dir)?;
    Ok(DetectSummary {
        n_hotspots: detection.hotspots.len(),
        radius_cells: detection.radius_cells,
        out_of_bounds: binned.out_of_bounds,
    })
}

pub struct ClassifySummary {
    pub n_levels: usize,
    pub n_hotspots: usize,
}

/// Classify stage: Loubar levels over the detect output.
pub fn run_classify(config: &PipelineConfig, out_dir: &Path) -> Result<ClassifySummary> {
    let upstream = StageManifest::load(out_dir, "detect")?;
    upstream.verify_against(&config.grid, config.master_seed, out_dir)?;
    let hotspots_path = out_dir.join(HOTSPOTS_JSONL);
    let mut hotspots = io::read_hotspots_jsonl(&hotspots_path)?;

    let partition = if hotspots.is_empty() {
        eprintln!("warning: no hotspots to classify");
        LevelPartition {
            levels: Vec::new(),
            thresholds: Vec::new(),
        }
    } else {
        let partition = levels::classify_levels(&hotspots)?;
        levels::apply_levels(&mut hotspots, &partition);
        partition
    };
    let summaries = if hotspots.is_empty() {
        Vec::new()
    } else {
        levels::level_summaries(&hotspots, &partition)
    };

    let classified_path = out_dir.join(CLASSIFIED_JSONL);
    io::write_hotspots_jsonl(&classified_path, &hotspots, &config.grid)?;
    let levels_path = out_dir.join(LEVELS_JSON);
    io::write_json(&levels_path, &partition)?;
    let table_path = out_dir.join(LEVEL_TABLE_CSV);
    io::write_level_table_csv(&table_path, &summaries)?;

    let mut manifest = StageManifest::new("classify", &config.grid, config.master_seed)?;
    manifest
        .inputs
        .insert(HOTSPOTS_JSONL.into(), io::file_hash(&hotspots_path)?);
    manifest.record_output(CLASSIFIED_JSONL, &classified_path)?;
    manifest.record_output(LEVELS_JSON, &levels_path)?;
    manifest.record_output(LEVEL_TABLE_CSV, &table_path)?;
    manifest.set_info("n_levels", partition.levels.len());
    manifest.set_info("levels_kept", config.classification.levels_kept);
    manifest.write(out_dir)?;
    Ok(ClassifySummary {
        n_levels: partition.levels.len(),
        n_hotspots: hotspots.len(),
    })
}

fn load_classified(
    config: &PipelineConfig,
    out_dir: &Path,
) -> Result<(Vec<Hotspot>, LevelPartition)> {
    let upstream = StageManifest::load(out_dir, "classify")?;
    upstream.verify_against(&config.grid, config.master_seed, out_dir)?;
    let hotspots = io::read_hotspots_jsonl(&out_dir.join(CLASSIFIED_JSONL))?;
    let partition: LevelPartition = io::read_json(&out_dir.join(LEVELS_JSON))?;
    Ok((hotspots, partition))
}

fn load_road_mask(config: &PipelineConfig, out_dir: &Path) -> Result<RoadMask> {
    let path = out_dir.join(ROAD_MASK_CSV);
    if !path.exists() {
        return Err(Error::Precondition(
            "road mask missing: run `detect` with a roads file (null models and \
             simulation candidates are road-constrained)"
                .into(),
        ));
    }
    io::read_roads(&path, &config.grid, 0)
}

/// Metrics stage: observed pattern curves plus null-model bands.
pub fn run_metrics(config: &PipelineConfig, out_dir: &Path) -> Result<PatternReport> {
    let (hotspots, partition) = load_classified(config, out_dir)?;
    let road = load_road_mask(config, out_dir)?;
    let level_sets =
        patterns::level_center_sets(&hotspots, &partition, config.classification.levels_kept)?;
    if level_sets.len() < 2 {
        return Err(Error::Precondition(format!(
            "pattern metrics need >= 2 levels, got {}",
            level_sets.len()
        )));
    }
    let pattern_config = PatternConfig {
        k_max: config.metrics.k_max,
        radii: config.metrics.radii(),
        d_counts: config.metrics.d_counts.clone(),
        n_runs: config.metrics.n_runs,
        master_seed: config.master_seed,
    };
    let report = patterns::pattern_report(&level_sets, &road, &pattern_config, &config.grid)?;

    let report_path = out_dir.join(PATTERN_REPORT_JSON);
    io::write_json(&report_path, &report)?;
    write_pattern_csvs(&report, out_dir)?;

    let mut manifest = StageManifest::new("metrics", &config.grid, config.master_seed)?;
    manifest.inputs.insert(
        CLASSIFIED_JSONL.into(),
        io::file_hash(&out_dir.join(CLASSIFIED_JSONL))?,
    );
    manifest.inputs.insert(
        ROAD_MASK_CSV.into(),
        io::file_hash(&out_dir.join(ROAD_MASK_CSV))?,
    );
    manifest.record_output(PATTERN_REPORT_JSON, &report_path)?;
    for name in [KNN_CURVES_CSV, COVERAGE_CURVES_CSV, INHIBIT_CURVES_CSV] {
        manifest.record_output(name, &out_dir.join(name))?;
    }
    manifest.set_info("n_pairs", report.pairs.len());
    manifest.write(out_dir)?;
    Ok(report)
}

fn write_pattern_csvs(report: &PatternReport, out_dir: &Path) -> Result<()> {
    let mut knn = String::from(
        "upper_level,lower_level,k,observed_m,random1_q10,random1_q50,random1_q90,random2_q10,random2_q50,random2_q90\n",
    );
    let mut cov = String::from(
        "upper_level,lower_level,r_m,observed,random1_q10,random1_q50,random1_q90,random2_q10,random2_q50,random2_q90\n",
    );
    let mut inh = String::from("upper_level,lower_level,d_count_m,same_level,next_level_mean\n");
    for pair in &report.pairs {
        for (i, &k) in pair.observed_knn.ks.iter().enumerate() {
            knn.push_str(&format!(
                "{},{},{k},{},{},{},{},{},{},{}\n",
                pair.upper_level,
                pair.lower_level,
                pair.observed_knn.values[i],
                pair.knn_random1.q10[i],
                pair.knn_random1.q50[i],
                pair.knn_random1.q90[i],
                pair.knn_random2.q10[i],
                pair.knn_random2.q50[i],
                pair.knn_random2.q90[i],
            ));
        }
        for (i, &r) in pair.observed_coverage.radii.iter().enumerate() {
            cov.push_str(&format!(
                "{},{},{r},{},{},{},{},{},{},{}\n",
                pair.upper_level,
                pair.lower_level,
                pair.observed_coverage.values[i],
                pair.coverage_random1.q10[i],
                pair.coverage_random1.q50[i],
                pair.coverage_random1.q90[i],
                pair.coverage_random2.q10[i],
                pair.coverage_random2.q50[i],
                pair.coverage_random2.q90[i],
            ));
        }
        for curve in &pair.inhibit {
            for &(x, y) in &curve.mean_curve {
                inh.push_str(&format!(
                    "{},{},{},{x},{y}\n",
                    pair.upper_level, pair.lower_level, curve.d_count
                ));
            }
        }
    }
    std::fs::write(out_dir.join(KNN_CURVES_CSV), knn)?;
    std::fs::write(out_dir.join(COVERAGE_CURVES_CSV), cov)?;
    std::fs::write(out_dir.join(INHIBIT_CURVES_CSV), inh)?;
    Ok(())
}

/// Simulate stage: mechanism experiment plus one example cascade run per
/// mechanism.
pub fn run_simulate(config: &PipelineConfig, out_dir: &Path) -> Result<MechanismExperiment> {
    let (hotspots, partition) = load_classified(config, out_dir)?;
    let road = load_road_mask(config, out_dir)?;
    let level_sets: Vec<CellPointSet> =
        patterns::level_center_sets(&hotspots, &partition, config.classification.levels_kept)?;
    if level_sets.len() < 2 {
        return Err(Error::Precondition(format!(
            "simulation needs >= 2 levels, got {}",
            level_sets.len()
        )));
    }
    let x_radius = match config.simulation.x_radius_cells {
        Some(r) => r,
        None => {
            let detect_manifest = StageManifest::load(out_dir, "detect")?;
            detect_manifest
                .info
                .get("radius_cells")
                .and_then(|v| v.as_u64())
                .filter(|&r| r > 0)
                .ok_or_else(|| {
                    Error::Precondition(
                        "x_radius_cells not set and detect manifest has no radius".into(),
                    )
                })? as usize
        }
    };
    let base = MechanismParams {
        mechanism: sim::Mechanism::Knn,
        k_nearest: config.simulation.k_nearest,
        alpha: config.simulation.alpha,
        d_cut: config.simulation.d_cut,
        x_radius_cells: x_radius,
    };
    let experiment = sim::mechanism_experiment(
        &level_sets,
        &road,
        &base,
        &config.simulation.mechanisms,
        &config.simulation.d_rmse_grid,
        config.simulation.n_sims,
        config.master_seed,
        &config.grid,
    )?;
    for (mechanism, n_partial) in &experiment.partial_runs {
        if *n_partial > 0 {
            eprintln!(
                "warning: {n_partial} of {} {} runs were partial and excluded",
                experiment.n_sims,
                mechanism.name()
            );
        }
    }

    let exp_path = out_dir.join(EXPERIMENT_JSON);
    io::write_json(&exp_path, &experiment)?;
    let mut manifest = StageManifest::new("simulate", &config.grid, config.master_seed)?;
    manifest.inputs.insert(
        CLASSIFIED_JSONL.into(),
        io::file_hash(&out_dir.join(CLASSIFIED_JSONL))?,
    );
    manifest.inputs.insert(
        ROAD_MASK_CSV.into(),
        io::file_hash(&out_dir.join(ROAD_MASK_CSV))?,
    );
    manifest.record_output(EXPERIMENT_JSON, &exp_path)?;
    for &mechanism in &config.simulation.mechanisms {
        let params = MechanismParams { mechanism, ..base };
        let run = sim::simulate_cascade(
            &level_sets,
            &road,
            &params,
            derive_seed(config.master_seed, &[0]),
            &config.grid,
        )?;
        let run_path = out_dir.join(format!("run_{}.json", mechanism.name()));
        io::write_json(&run_path, &run)?;
        manifest.record_output(&format!("run_{}.json", mechanism.name()), &run_path)?;

        let mut csv = String::from("mechanism,level,d_rmse_m,q10,q50,q90\n");
        for curve in experiment
            .curves
            .iter()
            .filter(|c| c.mechanism == mechanism)
        {
            for (i, &d) in curve.d_rmse.iter().enumerate() {
                csv.push_str(&format!(
                    "{},{},{d},{},{},{}\n",
                    mechanism.name(),
                    curve.level,
                    curve.q10[i],
                    curve.q50[i],
                    curve.q90[i],
                ));
            }
        }
        let csv_path = out_dir.join(format!("rmse_{}.csv", mechanism.name()));
        std::fs::write(&csv_path, csv)?;
        manifest.record_output(&format!("rmse_{}.csv", mechanism.name()), &csv_path)?;
    }
    manifest.set_info("x_radius_cells", x_radius);
    manifest.set_info("n_sims", experiment.n_sims);
    manifest.write(out_dir)?;
    Ok(experiment)
}

/// Report stage: SVG figures from the metrics and simulation outputs.
pub fn run_report(config: &PipelineConfig, out_dir: &Path) -> Result<Vec<String>> {
    let mut written = Vec::new();
    let mut manifest = StageManifest::new("report", &config.grid, config.master_seed)?;

    let report_path = out_dir.join(PATTERN_REPORT_JSON);
    if report_path.exists() {
        let report: PatternReport = io::read_json(&report_path)?;
        manifest
            .inputs
            .insert(PATTERN_REPORT_JSON.into(), io::file_hash(&report_path)?);
        for pair in &report.pairs {
            let tag = format!("L{}-L{}", pair.upper_level, pair.lower_level);
            let knn_pts: Vec<(f64, f64)> = pair
                .observed_knn
                .ks
                .iter()
                .zip(&pair.observed_knn.values)
                .map(|(&k, &v)| (k as f64, v))
                .collect();
            let svg_text = svg::band_chart(
                &format!("Mean KNN distance, levels {tag}"),
                "k (neighbors)",
                "mean distance (m)",
                Some(&knn_pts),
                &[
                    BandSeries {
                        label: "random 1",
                        band: &pair.knn_random1,
                    },
                    BandSeries {
                        label: "random 2",
                        band: &pair.knn_random2,
                    },
                ],
            )?;
            written.push(write_figure(
                out_dir,
                &format!("knn_{tag}.svg"),
                &svg_text,
                &mut manifest,
            )?);

            let cov_pts: Vec<(f64, f64)> = pair
                .observed_coverage
                .radii
                .iter()
                .zip(&pair.observed_coverage.values)
                .map(|(&r, &v)| (r, v))
                .collect();
            let svg_text = svg::band_chart(
                &format!("Coverage ratio, levels {tag}"),
                "radius (m)",
                "coverage ratio",
                Some(&cov_pts),
                &[
                    BandSeries {
                        label: "random 1",
                        band: &pair.coverage_random1,
                    },
                    BandSeries {
                        label: "random 2",
                        band: &pair.coverage_random2,
                    },
                ],
            )?;
            written.push(write_figure(
                out_dir,
                &format!("coverage_{tag}.svg"),
                &svg_text,
                &mut manifest,
            )?);

            let labels: Vec<String> = pair
                .inhibit
                .iter()
                .map(|c| format!("d_count = {} m", c.d_count))
                .collect();
            let series: Vec<LineSeries> = pair
                .inhibit
                .iter()
                .zip(&labels)
                .map(|(c, label)| LineSeries {
                    label,
                    points: &c.mean_curve,
                    dashed: false,
                })
                .collect();
            let svg_text = svg::line_chart(
                &format!("Normalized density, levels {tag}"),
                "same-level normalized density",
                "next-level normalized density (mean)",
                &series,
                true,
            )?;
            written.push(write_figure(
                out_dir,
                &format!("inhibit_{tag}.svg"),
                &svg_text,
                &mut manifest,
            )?);
        }
    }

    let exp_path = out_dir.join(EXPERIMENT_JSON);
    if exp_path.exists() {
        let experiment: MechanismExperiment = io::read_json(&exp_path)?;
        manifest
            .inputs
            .insert(EXPERIMENT_JSON.into(), io::file_hash(&exp_path)?);
        let mut levels: Vec<u32> = experiment.curves.iter().map(|c| c.level).collect();
        levels.sort_unstable();
        levels.dedup();
        for level in levels {
            let bands: Vec<(String, crate::patterns::NullBand)> = experiment
                .curves
                .iter()
                .filter(|c| c.level == level)
                .map(|c| {
                    (
                        c.mechanism.name().to_string(),
                        crate::patterns::NullBand {
                            xs: c.d_rmse.clone(),
                            q10: c.q10.clone(),
                            q50: c.q50.clone(),
                            q90: c.q90.clone(),
                            n_runs: experiment.n_sims,
                        },
                    )
                })
                .collect();
            let band_series: Vec<BandSeries> = bands
                .iter()
                .map(|(label, band)| BandSeries { label, band })
                .collect();
            let svg_text = svg::band_chart(
                &format!("Simulation RMSE, level {level}"),
                "d_rmse (m)",
                "RMSE",
                None,
                &band_series,
            )?;
            written.push(write_figure(
                out_dir,
                &format!("rmse_L{level}.svg"),
                &svg_text,
                &mut manifest,
            )?);
        }
    }

    if written.is_empty() {
        return Err(Error::Precondition(
            "nothing to report: run `metrics` or `simulate` first".into(),
        ));
    }
    manifest.write(out_dir)?;
    Ok(written)
}

fn write_figure(
    out_dir: &Path,
    name: &str,
    svg_text: &str,
    manifest: &mut StageManifest,
) -> Result<String> {
    let path = out_dir.join(name);
    std::fs::write(&path, svg_text)?;
    manifest.record_output(name, &path)?;
    Ok(name.to_string())
}

/// Synth stage: generate a city and write the pipeline input files plus
/// ground truth.
pub fn run_synth(spec: &SyntheticCitySpec, out_dir: &Path) -> Result<synth::SyntheticCity> {
    let city = synth::generate(spec)?;
    std::fs::create_dir_all(out_dir)?;
    let mut stops_csv = String::from("lon,lat\n");
    for &(lon, lat) in &city.stops {
        stops_csv.push_str(&format!("{lon},{lat}\n"));
    }
    let stops_path = out_dir.join(SYNTH_STOPS_CSV);
    std::fs::write(&stops_path, stops_csv)?;
    let roads_path = out_dir.join(SYNTH_ROADS_CSV);
    io::write_road_cells_csv(&roads_path, &city.road)?;
    let truth_path = out_dir.join(SYNTH_TRUTH_JSON);
    io::write_json(&truth_path, &city.ground_truth(spec.planted_radius_cells))?;

    let mut manifest = StageManifest::new("synth", &city.grid, spec.seed)?;
    manifest.record_output(SYNTH_STOPS_CSV, &stops_path)?;
    manifest.record_output(SYNTH_ROADS_CSV, &roads_path)?;
    manifest.record_output(SYNTH_TRUTH_JSON, &truth_path)?;
    manifest.set_info("n_stops", city.stops.len());
    manifest.set_info("level_counts", spec.level_counts());
    manifest.write(out_dir)?;
    Ok(city)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::{MinStops, RadiusSpec};
    use crate::synth::AccompanySpec;
    use tempfile::tempdir;

    fn small_city_spec() -> SyntheticCitySpec {
        SyntheticCitySpec {
            origin_lon: 114.2,
            origin_lat: 30.5,
            cell_size: 10.0,
            n_rows: 260,
            n_cols: 260,
            street_spacing_cells: 10,
            planted_radius_cells: 4,
            n_level1: 5,
            level_multipliers: vec![2, 3],
            accompany: Some(AccompanySpec::default()),
            inhibition: crate::synth::Inhibition::None,
            stop_scatter_sigma: 15.0,
            stop_window_cells: None,
            stops_per_hotspot: vec![300, 120, 50],
            seed: 11,
        }
    }

    fn config_for(spec: &SyntheticCitySpec) -> PipelineConfig {
        let mut cfg = PipelineConfig::with_grid_and_seed(spec.grid().unwrap(), 77);
        cfg.detection.radius_cells = RadiusSpec::Fixed(spec.planted_radius_cells);
        cfg.detection.min_stops = MinStops::Fixed(1);
        cfg.metrics.k_max = 3;
        cfg.metrics.r_max = 800.0;
        cfg.metrics.r_step = 200.0;
        cfg.metrics.d_counts = vec![500.0];
        cfg.metrics.n_runs = 5;
        cfg.simulation.n_sims = 3;
        cfg.simulation.d_rmse_grid = vec![250.0, 500.0];
        cfg
    }

    #[test]
    fn full_pipeline_runs_and_chains_manifests() {
        let spec = small_city_spec();
        let cfg = config_for(&spec);
        let dir = tempdir().unwrap();
        let out = dir.path();
        run_synth(&spec, out).unwrap();
        let det = run_detect(
            &cfg,
            &out.join(SYNTH_STOPS_CSV),
            Some(&out.join(SYNTH_ROADS_CSV)),
            out,
        )
        .unwrap();
        assert_eq!(det.n_hotspots, 5 + 10 + 15);
        // Every planted center is recovered within one cell.
        let truth: crate::synth::GroundTruth = io::read_json(&out.join(SYNTH_TRUTH_JSON)).unwrap();
        let detected = io::read_hotspots_jsonl(&out.join(HOTSPOTS_JSONL)).unwrap();
        for (cell, _) in &truth.centers {
            assert!(
                detected.iter().any(|h| h.center.chebyshev(cell) <= 1),
                "planted center {cell:?} not recovered within 1 cell"
            );
        }
        let cls = run_classify(&cfg, out).unwrap();
        assert!(cls.n_levels >= 2);
        let report = run_metrics(&cfg, out).unwrap();
        assert!(!report.pairs.is_empty());
        let experiment = run_simulate(&cfg, out).unwrap();
        assert!(!experiment.curves.is_empty());
        let figures = run_report(&cfg, out).unwrap();
        assert!(figures.iter().any(|f| f.starts_with("knn_")));
        assert!(figures.iter().any(|f| f.starts_with("rmse_")));
        for name in [
            HOTSPOTS_JSONL,
            HOTSPOTS_CSV,
            CLASSIFIED_JSONL,
            LEVELS_JSON,
            LEVEL_TABLE_CSV,
            PATTERN_REPORT_JSON,
            KNN_CURVES_CSV,
            EXPERIMENT_JSON,
            "rmse_knn.csv",
            "run_knn.json",
        ] {
            assert!(out.join(name).exists(), "{name} missing");
        }
    }

    #[test]
    fn classify_rejects_changed_seed() {
        let spec = small_city_spec();
        let cfg = config_for(&spec);
        let dir = tempdir().unwrap();
        let out = dir.path();
        run_synth(&spec, out).unwrap();
        run_detect(&cfg, &out.join(SYNTH_STOPS_CSV), None, out).unwrap();
        let mut other = cfg.clone();
        other.master_seed = 1234;
        assert!(matches!(
            run_classify(&other, out),
            Err(Error::ManifestMismatch(_))
        ));
    }

    #[test]
    fn metrics_requires_road_mask() {
        let spec = small_city_spec();
        let cfg = config_for(&spec);
        let dir = tempdir().unwrap();
        let out = dir.path();
        run_synth(&spec, out).unwrap();
        run_detect(&cfg, &out.join(SYNTH_STOPS_CSV), None, out).unwrap();
        run_classify(&cfg, out).unwrap();
        match run_metrics(&cfg, out) {
            Err(Error::Precondition(msg)) => assert!(msg.contains("road mask")),
            other => panic!("expected precondition error, got {other:?}"),
        }
    }

    #[test]
    fn metrics_single_level_names_requirement() {
        // One planted level only: classification yields one level.
        let mut spec = small_city_spec();
        spec.level_multipliers = vec![];
        spec.stops_per_hotspot = vec![300];
        let cfg = config_for(&spec);
        let dir = tempdir().unwrap();
        let out = dir.path();
        run_synth(&spec, out).unwrap();
        run_detect(
            &cfg,
            &out.join(SYNTH_STOPS_CSV),
            Some(&out.join(SYNTH_ROADS_CSV)),
            out,
        )
        .unwrap();
        run_classify(&cfg, out).unwrap();
        match run_metrics(&cfg, out) {
            Err(Error::Precondition(msg)) => assert!(msg.contains(">= 2 levels"), "{msg}"),
            other => panic!("expected precondition error, got {other:?}"),
        }
    }

    #[test]
    fn empty_stops_file_yields_empty_outputs() {
        let spec = small_city_spec();
        let cfg = config_for(&spec);
        let dir = tempdir().unwrap();
        let out = dir.path();
        let stops = out.join("empty.csv");
        std::fs::create_dir_all(out).unwrap();
        std::fs::write(&stops, "lon,lat\n").unwrap();
        let det = run_detect(&cfg, &stops, None, out).unwrap();
        assert_eq!(det.n_hotspots, 0);
        let lines = std::fs::read_to_string(out.join(HOTSPOTS_JSONL)).unwrap();
        assert!(lines.is_empty());
    }
}
