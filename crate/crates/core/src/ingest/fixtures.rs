//! File-backed providers for the public statistical tables (plant inventory,
//! heat rates, balancing-authority demand, peaks, census tracts, BA areas).
//!
//! Directory layout (CSV files carry a header row):
//!
//! | file | columns | required |
//! |------|---------|----------|
//! | `ba_demand.csv` | `ba,hour_utc,mw` (+ optional `date`) | yes |
//! | `state_peaks.csv` | `state,peak_mw` | yes |
//! | `ba_polygons.geojson` | polygon features with a `ba` property | yes |
//! | `census_tracts.geojson` | polygon features with a `population` property | yes |
//! | `eia860.csv` | `name,fuel,capacity_mw,lat,lon` | no |
//! | `eia923.csv` | `plant_name,heat_rate_btu_per_kwh` | no |
//! | `ba_parent.csv` | `ba,parent` | no |
//! | `ba_peaks.csv` | `ba,peak_mw` | no (defaults to max hourly demand) |
//! | `ba_states.csv` | `ba,state` | no |
//! | `eia_circuit_miles.csv` | `voltage_kv,circuit_miles` | no |
//! | `gas_price.txt` | a single number in $/MMBtu | no (defaults to 3.50) |

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Serialize;

use super::geojson::{features, parse_geometry, parse_json, properties, Geometry};
use super::IngestError;
use crate::geo::{Coord, Polygon};

pub const DEFAULT_GAS_PRICE_USD_PER_MMBTU: f64 = 3.50;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Eia860Plant {
    pub name: String,
    pub fuel_raw: String,
    pub capacity_mw: f64,
    pub coord: Coord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CensusTract {
    pub polygon: Polygon,
    pub population: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandRecord {
    pub date: Option<NaiveDate>,
    pub hour: u8,
    pub mw: f64,
}

#[derive(Debug, Clone, Default)]
pub struct FixtureTables {
    pub eia860_plants: Vec<Eia860Plant>,
    /// Keyed by lower-cased plant name.
    pub eia923_heatrates: BTreeMap<String, f64>,
    pub ba_demand_hourly: BTreeMap<String, Vec<DemandRecord>>,
    pub ba_peaks: BTreeMap<String, f64>,
    pub state_peaks: BTreeMap<String, f64>,
    pub ba_polygons: BTreeMap<String, Vec<Polygon>>,
    pub census_tracts: Vec<CensusTract>,
    pub gas_price_usd_per_mmbtu: f64,
    pub ba_parent_map: BTreeMap<String, String>,
    pub ba_states: BTreeMap<String, BTreeSet<String>>,
    pub eia_circuit_miles: BTreeMap<String, f64>,
}

impl FixtureTables {
    /// Follows the sub-BA → parent mapping to the code that publishes demand.
    pub fn resolve_ba(&self, code: &str) -> String {
        let mut cur = code.to_string();
        for _ in 0..16 {
            match self.ba_parent_map.get(&cur) {
                Some(p) if *p != cur => cur = p.clone(),
                _ => break,
            }
        }
        cur
    }

    /// Demand for `ba` (after parent resolution) at `hour`, preferring a row
    /// dated `date` and falling back to undated rows.
    pub fn demand_at(&self, ba: &str, date: Option<NaiveDate>, hour: u8) -> Option<f64> {
        let rows = self.ba_demand_hourly.get(&self.resolve_ba(ba))?;
        let exact = date.and_then(|d| rows.iter().find(|r| r.hour == hour && r.date == Some(d)));
        exact
            .or_else(|| rows.iter().find(|r| r.hour == hour && r.date.is_none()))
            .or_else(|| {
                // single-day fixtures: any row at this hour
                rows.iter().find(|r| r.hour == hour)
            })
            .map(|r| r.mw)
    }

    pub fn ba_peak(&self, ba: &str) -> Option<f64> {
        self.ba_peaks.get(&self.resolve_ba(ba)).copied()
    }

    pub fn heat_rate(&self, plant_name: &str) -> Option<f64> {
        self.eia923_heatrates
            .get(&plant_name.trim().to_lowercase())
            .copied()
    }

    /// Checks the cross-table invariants: non-negative demand, a peak for
    /// every demand BA, and no dangling BA codes.
    pub fn validate(&self) -> Result<(), IngestError> {
        for (ba, rows) in &self.ba_demand_hourly {
            if let Some(r) = rows.iter().find(|r| !(r.mw >= 0.0)) {
                return Err(IngestError::Validation(format!(
                    "negative demand {} MW for {ba} at hour {}",
                    r.mw, r.hour
                )));
            }
            if !self.ba_peaks.contains_key(ba) {
                return Err(IngestError::Validation(format!("BA {ba} has no peak")));
            }
            let known = self.ba_polygons.contains_key(ba)
                || self.ba_parent_map.contains_key(ba)
                || self.ba_parent_map.values().any(|p| p == ba);
            if !known {
                return Err(IngestError::Validation(format!(
                    "BA {ba} has demand but no polygon or parent mapping"
                )));
            }
        }
        if let Some((s, v)) = self.state_peaks.iter().find(|(_, v)| !(**v >= 0.0)) {
            return Err(IngestError::Validation(format!("state {s} has peak {v}")));
        }
        Ok(())
    }
}

/// Source of fixture tables. A live provider could implement this against
/// the public APIs; the pipeline only depends on the trait.
pub trait FixtureProvider {
    fn load(&self) -> Result<FixtureTables, IngestError>;
}

#[derive(Debug, Clone)]
pub struct FixtureDir {
    pub root: PathBuf,
}

impl FixtureDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        FixtureDir { root: root.into() }
    }
}

impl FixtureProvider for FixtureDir {
    fn load(&self) -> Result<FixtureTables, IngestError> {
        load_fixture_tables(&self.root)
    }
}

struct Csv {
    file: String,
    header: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl Csv {
    fn column(&self, name: &str) -> Result<usize, IngestError> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn {
                file: self.file.clone(),
                column: name.to_string(),
            })
    }

    fn optional_column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    fn number(&self, row: &csv::StringRecord, idx: usize, line: usize) -> Result<f64, IngestError> {
        let raw = row.get(idx).unwrap_or("").trim();
        raw.parse::<f64>().map_err(|_| IngestError::Schema {
            file: self.file.clone(),
            message: format!("row {line}: `{raw}` is not a number"),
        })
    }
}

fn io_err(path: &Path, source: std::io::Error) -> IngestError {
    IngestError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn read_csv(path: &Path) -> Result<Csv, IngestError> {
    let file = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| IngestError::Schema {
            file: file.clone(),
            message: e.to_string(),
        })?;
    let header = rdr
        .headers()
        .map_err(|e| IngestError::Schema {
            file: file.clone(),
            message: e.to_string(),
        })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let rows = rdr
        .records()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| IngestError::Schema {
            file: file.clone(),
            message: e.to_string(),
        })?;
    Ok(Csv { file, header, rows })
}

fn read_optional_csv(path: &Path) -> Result<Option<Csv>, IngestError> {
    if path.exists() {
        read_csv(path).map(Some)
    } else {
        Ok(None)
    }
}

/// Parses an `hour_utc` cell: a bare hour `0..=23` or an ISO-like timestamp
/// `YYYY-MM-DDTHH[:MM[:SS]][Z]`.
fn parse_hour_cell(raw: &str) -> Option<(Option<NaiveDate>, u8)> {
    let raw = raw.trim();
    if let Ok(h) = raw.parse::<u8>() {
        return (h < 24).then_some((None, h));
    }
    let (date, time) = raw.split_once(['T', ' '])?;
    let date = NaiveDate::parse_from_str(date, "%Y-%m-%d").ok()?;
    let hour = time.get(0..2)?.parse::<u8>().ok()?;
    (hour < 24).then_some((Some(date), hour))
}

fn read_polygons_by(
    path: &Path,
    key: &str,
) -> Result<Vec<(BTreeMap<String, String>, Polygon)>, IngestError> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    let doc = parse_json(&bytes)?;
    let mut out = Vec::new();
    for f in features(&doc)? {
        let props = properties(f);
        if !props.contains_key(key) {
            return Err(IngestError::MissingColumn {
                file: path.display().to_string(),
                column: key.to_string(),
            });
        }
        if let Some(Geometry::Polygon(p)) = f.get("geometry").and_then(parse_geometry) {
            out.push((props, p));
        }
    }
    Ok(out)
}

/// Loads and cross-validates every fixture table under `dir`.
pub fn load_fixture_tables(dir: &Path) -> Result<FixtureTables, IngestError> {
    let mut t = FixtureTables {
        gas_price_usd_per_mmbtu: DEFAULT_GAS_PRICE_USD_PER_MMBTU,
        ..Default::default()
    };

    let demand = read_csv(&dir.join("ba_demand.csv"))?;
    let (c_ba, c_hour, c_mw) = (
        demand.column("ba")?,
        demand.column("hour_utc")?,
        demand.column("mw")?,
    );
    let c_date = demand.optional_column("date");
    for (i, row) in demand.rows.iter().enumerate() {
        let ba = row.get(c_ba).unwrap_or("").to_string();
        let (mut date, hour) =
            parse_hour_cell(row.get(c_hour).unwrap_or("")).ok_or_else(|| IngestError::Schema {
                file: demand.file.clone(),
                message: format!("row {}: bad hour_utc", i + 2),
            })?;
        if let Some(c) = c_date {
            if let Ok(d) = NaiveDate::parse_from_str(row.get(c).unwrap_or("").trim(), "%Y-%m-%d") {
                date = Some(d);
            }
        }
        let mw = demand.number(row, c_mw, i + 2)?;
        t.ba_demand_hourly
            .entry(ba)
            .or_default()
            .push(DemandRecord { date, hour, mw });
    }

    let peaks = read_csv(&dir.join("state_peaks.csv"))?;
    let (c_state, c_peak) = (peaks.column("state")?, peaks.column("peak_mw")?);
    for (i, row) in peaks.rows.iter().enumerate() {
        let v = peaks.number(row, c_peak, i + 2)?;
        t.state_peaks
            .insert(row.get(c_state).unwrap_or("").to_string(), v);
    }

    for (props, poly) in read_polygons_by(&dir.join("ba_polygons.geojson"), "ba")? {
        t.ba_polygons.entry(props["ba"].clone()).or_default().push(poly);
    }
    for (props, polygon) in read_polygons_by(&dir.join("census_tracts.geojson"), "population")? {
        let population = props["population"].trim().parse::<f64>().unwrap_or(0.0).max(0.0);
        t.census_tracts.push(CensusTract {
            polygon,
            population,
        });
    }

    if let Some(csv) = read_optional_csv(&dir.join("eia860.csv"))? {
        let cols = ["name", "fuel", "capacity_mw", "lat", "lon"]
            .map(|c| csv.column(c))
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
        for (i, row) in csv.rows.iter().enumerate() {
            t.eia860_plants.push(Eia860Plant {
                name: row.get(cols[0]).unwrap_or("").to_string(),
                fuel_raw: row.get(cols[1]).unwrap_or("").to_string(),
                capacity_mw: csv.number(row, cols[2], i + 2)?,
                coord: Coord::new(csv.number(row, cols[4], i + 2)?, csv.number(row, cols[3], i + 2)?),
            });
        }
    }
    if let Some(csv) = read_optional_csv(&dir.join("eia923.csv"))? {
        let (c_name, c_hr) = (csv.column("plant_name")?, csv.column("heat_rate_btu_per_kwh")?);
        for (i, row) in csv.rows.iter().enumerate() {
            let hr = csv.number(row, c_hr, i + 2)?;
            t.eia923_heatrates
                .insert(row.get(c_name).unwrap_or("").trim().to_lowercase(), hr);
        }
    }
    if let Some(csv) = read_optional_csv(&dir.join("ba_parent.csv"))? {
        let (c_child, c_parent) = (csv.column("ba")?, csv.column("parent")?);
        for row in &csv.rows {
            t.ba_parent_map.insert(
                row.get(c_child).unwrap_or("").to_string(),
                row.get(c_parent).unwrap_or("").to_string(),
            );
        }
    }
    if let Some(csv) = read_optional_csv(&dir.join("ba_peaks.csv"))? {
        let (c_ba, c_peak) = (csv.column("ba")?, csv.column("peak_mw")?);
        for (i, row) in csv.rows.iter().enumerate() {
            t.ba_peaks
                .insert(row.get(c_ba).unwrap_or("").to_string(), csv.number(row, c_peak, i + 2)?);
        }
    }
    for (ba, rows) in &t.ba_demand_hourly {
        if !t.ba_peaks.contains_key(ba) {
            let peak = rows.iter().map(|r| r.mw).fold(0.0, f64::max);
            t.ba_peaks.insert(ba.clone(), peak);
        }
    }
    if let Some(csv) = read_optional_csv(&dir.join("ba_states.csv"))? {
        let (c_ba, c_state) = (csv.column("ba")?, csv.column("state")?);
        for row in &csv.rows {
            t.ba_states
                .entry(row.get(c_ba).unwrap_or("").to_string())
                .or_default()
                .insert(row.get(c_state).unwrap_or("").to_string());
        }
    }
    if let Some(csv) = read_optional_csv(&dir.join("eia_circuit_miles.csv"))? {
        let (c_kv, c_mi) = (csv.column("voltage_kv")?, csv.column("circuit_miles")?);
        for (i, row) in csv.rows.iter().enumerate() {
            t.eia_circuit_miles
                .insert(row.get(c_kv).unwrap_or("").to_string(), csv.number(row, c_mi, i + 2)?);
        }
    }
    let gas = dir.join("gas_price.txt");
    if gas.exists() {
        let raw = std::fs::read_to_string(&gas).map_err(|e| io_err(&gas, e))?;
        t.gas_price_usd_per_mmbtu = raw.trim().parse().map_err(|_| IngestError::Schema {
            file: gas.display().to_string(),
            message: format!("`{}` is not a price", raw.trim()),
        })?;
    }

    t.validate()?;
    Ok(t)
}
