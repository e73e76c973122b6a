//! File formats: stops CSV, roads (GeoJSON or pre-rasterized CSV), hotspot
//! JSONL/CSV outputs, level tables, report serialization, and the per-stage
//! manifests that chain input hashes between stages.

use crate::detect::Hotspot;
use crate::error::{Error, Result};
use crate::grid::{Cell, GridSpec, RoadMask};
use crate::levels::LevelSummary;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

/// Read `lon,lat` stop coordinates from a headered CSV; extra columns are
/// ignored. Parse failures report the file line.
pub fn read_stops_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::InvalidInput(format!("cannot open {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| parse_err(path, 1, &e.to_string()))?
        .clone();
    let lon_idx = headers.iter().position(|h| h.trim() == "lon");
    let lat_idx = headers.iter().position(|h| h.trim() == "lat");
    let (lon_idx, lat_idx) = match (lon_idx, lat_idx) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(parse_err(
                path,
                1,
                "header must contain `lon` and `lat` columns",
            ))
        }
    };
    let mut stops = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(path, line, &e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let lon_s = record
            .get(lon_idx)
            .ok_or_else(|| parse_err(path, line, "missing lon field"))?;
        let lat_s = record
            .get(lat_idx)
            .ok_or_else(|| parse_err(path, line, "missing lat field"))?;
        let lon: f64 = lon_s
            .trim()
            .parse()
            .map_err(|_| parse_err(path, line, &format!("bad lon {lon_s:?}")))?;
        let lat: f64 = lat_s
            .trim()
            .parse()
            .map_err(|_| parse_err(path, line, &format!("bad lat {lat_s:?}")))?;
        if !(lon.is_finite() && lat.is_finite()) {
            return Err(parse_err(path, line, "non-finite coordinate"));
        }
        stops.push((lon, lat));
    }
    Ok(stops)
}

fn parse_err(path: &Path, line: u64, message: &str) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.to_string(),
    }
}

/// Road input: GeoJSON (`.geojson`/`.json`) LineString/MultiLineString
/// features rasterized onto the grid, or a pre-rasterized CSV of `row,col`
/// cell indices.
pub fn read_roads(path: &Path, grid: &GridSpec, buffer_cells: usize) -> Result<RoadMask> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("geojson") | Some("json") => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
            let lines = polylines_from_geojson(&text).map_err(|msg| parse_err(path, 0, &msg))?;
            grid.rasterize_roads(&lines, buffer_cells)
        }
        Some("csv") => read_road_cells_csv(path, grid),
        other => Err(Error::InvalidInput(format!(
            "unsupported road file extension {other:?} for {} (want .geojson, .json, or .csv)",
            path.display()
        ))),
    }
}

fn polylines_from_geojson(text: &str) -> std::result::Result<Vec<Vec<(f64, f64)>>, String> {
    use geojson::{GeoJson, Value};
    let parsed: GeoJson = text.parse().map_err(|e| format!("geojson: {e}"))?;
    let mut out = Vec::new();
    let push_geometry = |value: &Value, out: &mut Vec<Vec<(f64, f64)>>| match value {
        Value::LineString(coords) => {
            out.push(coords.iter().map(|c| (c[0], c[1])).collect());
        }
        Value::MultiLineString(lines) => {
            for coords in lines {
                out.push(coords.iter().map(|c| (c[0], c[1])).collect());
            }
        }
        _ => {}
    };
    match parsed {
        GeoJson::FeatureCollection(fc) => {
            for feature in fc.features {
                if let Some(geom) = feature.geometry {
                    push_geometry(&geom.value, &mut out);
                }
            }
        }
        GeoJson::Feature(feature) => {
            if let Some(geom) = feature.geometry {
                push_geometry(&geom.value, &mut out);
            }
        }
        GeoJson::Geometry(geom) => push_geometry(&geom.value, &mut out),
    }
    Ok(out)
}

fn read_road_cells_csv(path: &Path, grid: &GridSpec) -> Result<RoadMask> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::InvalidInput(format!("cannot open {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| parse_err(path, 1, &e.to_string()))?
        .clone();
    let row_idx = headers.iter().position(|h| h.trim() == "row");
    let col_idx = headers.iter().position(|h| h.trim() == "col");
    let (row_idx, col_idx) = match (row_idx, col_idx) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(parse_err(
                path,
                1,
                "header must contain `row` and `col` columns",
            ))
        }
    };
    let mut cells = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            parse_err(
                path,
                e.position().map(|p| p.line()).unwrap_or(0),
                &e.to_string(),
            )
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row: usize = record
            .get(row_idx)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| parse_err(path, line, "bad row index"))?;
        let col: usize = record
            .get(col_idx)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| parse_err(path, line, "bad col index"))?;
        cells.push(Cell::new(row, col));
    }
    RoadMask::from_cells(grid.clone(), cells)
}

pub fn write_road_cells_csv(path: &Path, mask: &RoadMask) -> Result<()> {
    let mut out = String::from("row,col\n");
    for cell in mask.cells() {
        out.push_str(&format!("{},{}\n", cell.row, cell.col));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// One hotspot per line, JSON, with the center in both cell and geographic
/// coordinates.
pub fn write_hotspots_jsonl(path: &Path, hotspots: &[Hotspot], grid: &GridSpec) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    for (id, h) in hotspots.iter().enumerate() {
        let (lon, lat) = grid.cell_lonlat(h.center);
        let record = serde_json::json!({
            "id": id,
            "center": {"row": h.center.row, "col": h.center.col, "lon": lon, "lat": lat},
            "members": h.members,
            "stops": h.stops,
            "level": h.level,
        });
        writeln!(file, "{record}")?;
    }
    Ok(())
}

pub fn read_hotspots_jsonl(path: &Path) -> Result<Vec<Hotspot>> {
    let file = BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in file.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line)
            .map_err(|e| parse_err(path, i as u64 + 1, &e.to_string()))?;
        let center = Cell::new(
            value["center"]["row"]
                .as_u64()
                .ok_or_else(|| parse_err(path, i as u64 + 1, "missing center.row"))?
                as usize,
            value["center"]["col"]
                .as_u64()
                .ok_or_else(|| parse_err(path, i as u64 + 1, "missing center.col"))?
                as usize,
        );
        let members: Vec<Cell> = serde_json::from_value(value["members"].clone())
            .map_err(|e| parse_err(path, i as u64 + 1, &e.to_string()))?;
        let stops = value["stops"]
            .as_u64()
            .ok_or_else(|| parse_err(path, i as u64 + 1, "missing stops"))?;
        let level = value["level"].as_u64().map(|l| l as u32);
        out.push(Hotspot {
            center,
            members,
            stops,
            level,
        });
    }
    Ok(out)
}

pub fn write_hotspots_csv(path: &Path, hotspots: &[Hotspot], grid: &GridSpec) -> Result<()> {
    let mut out = String::from("id,center_lon,center_lat,stops,level\n");
    for (id, h) in hotspots.iter().enumerate() {
        let (lon, lat) = grid.cell_lonlat(h.center);
        let level = h.level.map(|l| l.to_string()).unwrap_or_default();
        out.push_str(&format!("{id},{lon},{lat},{},{level}\n", h.stops));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Level table mirroring the classification summary.
pub fn write_level_table_csv(path: &Path, summaries: &[LevelSummary]) -> Result<()> {
    let mut out = String::from(
        "level,n_hotspots,cum_stop_fraction_lo,cum_stop_fraction_hi,stops_max,stops_min,stops_median\n",
    );
    for s in summaries {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.level,
            s.n_hotspots,
            s.stop_fraction_lo,
            s.stop_fraction_hi,
            s.stops_max,
            s.stops_min,
            s.stops_median
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// FNV-1a 64-bit content hash, hex-encoded. Used for manifest chaining, not
/// security.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

pub fn file_hash(path: &Path) -> Result<String> {
    Ok(content_hash(&std::fs::read(path)?))
}

/// Per-stage manifest: configuration echo plus input/output hashes. File
/// names are recorded relative to the stage output directory, so reruns in
/// different directories stay byte-identical.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: String,
    pub grid_hash: String,
    pub master_seed: u64,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub info: BTreeMap<String, serde_json::Value>,
}

impl StageManifest {
    pub fn new(stage: &str, grid: &GridSpec, master_seed: u64) -> Result<Self> {
        Ok(StageManifest {
            stage: stage.to_string(),
            grid_hash: grid_hash(grid)?,
            master_seed,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            info: BTreeMap::new(),
        })
    }

    pub fn record_input(&mut self, name: &str, path: &Path) -> Result<()> {
        self.inputs.insert(name.to_string(), file_hash(path)?);
        Ok(())
    }

    pub fn record_output(&mut self, name: &str, path: &Path) -> Result<()> {
        self.outputs.insert(name.to_string(), file_hash(path)?);
        Ok(())
    }

    pub fn set_info<T: Serialize>(&mut self, key: &str, value: T) {
        self.info
            .insert(key.to_string(), serde_json::to_value(value).unwrap());
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join(format!("{}.manifest.json", self.stage)), self)
    }

    pub fn load(dir: &Path, stage: &str) -> Result<Self> {
        let path = dir.join(format!("{stage}.manifest.json"));
        if !path.exists() {
            return Err(Error::ManifestMismatch(format!(
                "missing manifest for stage `{stage}`; run that stage first"
            )));
        }
        read_json(&path)
    }

    /// Check that this (upstream) manifest matches the current grid/seed and
    /// that its recorded outputs are still byte-identical on disk.
    pub fn verify_against(&self, grid: &GridSpec, master_seed: u64, dir: &Path) -> Result<()> {
        let current = grid_hash(grid)?;
        if self.grid_hash != current {
            return Err(Error::ManifestMismatch(format!(
                "grid spec changed since stage `{}` ran",
                self.stage
            )));
        }
        if self.master_seed != master_seed {
            return Err(Error::ManifestMismatch(format!(
                "master seed changed since stage `{}` ran ({} vs {})",
                self.stage, self.master_seed, master_seed
            )));
        }
        for (name, recorded) in &self.outputs {
            let path = dir.join(name);
            if !path.exists() {
                return Err(Error::ManifestMismatch(format!(
                    "stage `{}` output {name} is missing",
                    self.stage
                )));
            }
            let actual = file_hash(&path)?;
            if &actual != recorded {
                return Err(Error::ManifestMismatch(format!(
                    "stage `{}` output {name} changed on disk",
                    self.stage
                )));
            }
        }
        Ok(())
    }
}

pub fn grid_hash(grid: &GridSpec) -> Result<String> {
    Ok(content_hash(serde_json::to_string(grid)?.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn grid() -> GridSpec {
        GridSpec::new(114.2, 30.5, 10.0, 50, 50, 30.55).unwrap()
    }

    #[test]
    fn stops_csv_roundtrip_ignores_extra_columns() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("stops.csv");
        std::fs::write(
            &path,
            "trip_id,lon,lat,mode\n1,114.201,30.501,walk\n2,114.202,30.502,cycle\n",
        )
        .unwrap();
        let stops = read_stops_csv(&path).unwrap();
        assert_eq!(stops, vec![(114.201, 30.501), (114.202, 30.502)]);
    }

    #[test]
    fn stops_csv_error_names_the_line() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("stops.csv");
        std::fs::write(&path, "lon,lat\n114.2,30.5\nnot_a_number,30.5\n").unwrap();
        match read_stops_csv(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn stops_csv_requires_header_columns() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("stops.csv");
        std::fs::write(&path, "x,y\n1,2\n").unwrap();
        assert!(matches!(read_stops_csv(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn road_cells_csv_roundtrip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("roads.csv");
        let mask = RoadMask::from_cells(
            grid(),
            vec![Cell::new(0, 0), Cell::new(1, 2), Cell::new(3, 4)],
        )
        .unwrap();
        write_road_cells_csv(&path, &mask).unwrap();
        let back = read_roads(&path, &grid(), 0).unwrap();
        assert_eq!(back.cells(), mask.cells());
    }

    #[test]
    fn geojson_roads_rasterize() {
        let g = grid();
        let dir = tempdir().unwrap();
        let path = dir.path().join("roads.geojson");
        // Horizontal street through row 10 cell centers, cols 4..=8.
        let a = g.cell_lonlat(Cell::new(10, 4));
        let b = g.cell_lonlat(Cell::new(10, 8));
        let text = format!(
            r#"{{"type":"FeatureCollection","features":[
                {{"type":"Feature","properties":{{}},"geometry":
                  {{"type":"LineString","coordinates":[[{},{}],[{},{}]]}}}}]}}"#,
            a.0, a.1, b.0, b.1
        );
        std::fs::write(&path, text).unwrap();
        let mask = read_roads(&path, &g, 0).unwrap();
        let expect: Vec<Cell> = (4..=8).map(|c| Cell::new(10, c)).collect();
        assert_eq!(mask.cells(), expect.as_slice());
    }

    #[test]
    fn hotspots_jsonl_roundtrip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("hotspots.jsonl");
        let hotspots = vec![
            Hotspot {
                center: Cell::new(3, 4),
                members: vec![Cell::new(3, 4), Cell::new(3, 5)],
                stops: 17,
                level: Some(2),
            },
            Hotspot {
                center: Cell::new(10, 10),
                members: vec![Cell::new(10, 10)],
                stops: 5,
                level: None,
            },
        ];
        write_hotspots_jsonl(&path, &hotspots, &grid()).unwrap();
        let back = read_hotspots_jsonl(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].center, hotspots[0].center);
        assert_eq!(back[0].members, hotspots[0].members);
        assert_eq!(back[0].stops, 17);
        assert_eq!(back[0].level, Some(2));
        assert_eq!(back[1].level, None);
    }

    #[test]
    fn manifest_verification_detects_drift() {
        let dir = tempdir().unwrap();
        let g = grid();
        let out = dir.path().join("hotspots.jsonl");
        std::fs::write(&out, "{}\n").unwrap();
        let mut m = StageManifest::new("detect", &g, 42).unwrap();
        m.record_output("hotspots.jsonl", &out).unwrap();
        m.write(dir.path()).unwrap();
        let loaded = StageManifest::load(dir.path(), "detect").unwrap();
        loaded.verify_against(&g, 42, dir.path()).unwrap();
        // Seed drift.
        assert!(matches!(
            loaded.verify_against(&g, 43, dir.path()),
            Err(Error::ManifestMismatch(_))
        ));
        // Grid drift.
        let g2 = GridSpec::new(114.2, 30.5, 10.0, 60, 50, 30.55).unwrap();
        assert!(matches!(
            loaded.verify_against(&g2, 42, dir.path()),
            Err(Error::ManifestMismatch(_))
        ));
        // Output drift.
        std::fs::write(&out, "changed\n").unwrap();
        assert!(matches!(
            loaded.verify_against(&g, 42, dir.path()),
            Err(Error::ManifestMismatch(_))
        ));
    }

    #[test]
    fn content_hash_is_stable() {
        assert_eq!(content_hash(b""), "cbf29ce484222325");
        assert_eq!(content_hash(b"a"), content_hash(b"a"));
        assert_ne!(content_hash(b"a"), content_hash(b"b"));
    }
}
