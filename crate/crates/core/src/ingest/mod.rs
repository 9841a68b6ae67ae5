//! Reading GeoJSON power features and fixture tables into domain records.

pub mod fixtures;
pub mod geojson;
pub mod tags;

use serde::Serialize;
use thiserror::Error;

use crate::geo::{Coord, Polygon};
pub use fixtures::{load_fixture_tables, FixtureDir, FixtureProvider, FixtureTables};
pub use geojson::{read_feature_collection, Geometry, RawFeature, ReadDiagnostics};
pub use tags::{detect_hvdc_tags, parse_voltage_tag, HvdcNameList, HvdcSignals, ParsedVoltage};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed JSON at byte {offset}: {message}")]
    Json { offset: usize, message: String },
    #[error("document is not a GeoJSON FeatureCollection")]
    NotFeatureCollection,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: missing required column `{column}`")]
    MissingColumn { file: String, column: String },
    #[error("{file}: {message}")]
    Schema { file: String, message: String },
    #[error("fixture validation failed: {0}")]
    Validation(String),
}

/// A `power=line` or `power=cable` way.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineSection {
    pub id: String,
    pub path: Vec<Coord>,
    /// Sorted descending; empty while untagged.
    pub voltages_kv: Vec<f64>,
    pub cables: Option<u32>,
    pub circuits_declared: Option<u32>,
    pub is_hvdc: bool,
    pub is_underground: bool,
    pub name: Option<String>,
    /// Voltage filled in by neighbour consensus rather than read from tags.
    pub voltage_inferred: bool,
    pub source: Option<String>,
}

impl LineSection {
    pub fn max_voltage_kv(&self) -> Option<f64> {
        self.voltages_kv.first().copied()
    }

    pub fn endpoints(&self) -> (Coord, Coord) {
        (self.path[0], self.path[self.path.len() - 1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FacilityKind {
    Substation,
    Plant,
    Converter,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Footprint {
    Polygon(Polygon),
    /// Point-mapped facility; buffered at query time.
    Point(Coord),
}

impl Footprint {
    pub fn anchor(&self) -> Coord {
        match self {
            Footprint::Polygon(p) => p.centroid(),
            Footprint::Point(c) => *c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Facility {
    pub id: String,
    pub kind: FacilityKind,
    pub footprint: Footprint,
    pub voltages_kv: Vec<f64>,
    pub name: Option<String>,
    pub plant_output_mw: Option<f64>,
    pub plant_source: Option<String>,
    pub source: Option<String>,
}

/// A point-mapped `power=plant`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlantPoint {
    pub id: String,
    pub coord: Coord,
    pub name: Option<String>,
    pub output_mw: Option<f64>,
    pub source_fuel: Option<String>,
    pub source: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestDiagnostics {
    pub input_features: usize,
    pub missing_geometry: usize,
    pub unsupported_geometry: usize,
    pub missing_id: usize,
    /// `power=line`/`cable` features whose geometry is not a linestring.
    pub non_line_geometry: usize,
    /// Features with a power type the pipeline does not use.
    pub unused_power_type: usize,
    pub dropped_voltage_tokens: usize,
    pub hvdc_tag_conflicts: usize,
}

/// Features partitioned by power type. Every input feature lands in exactly
/// one of the three lists or in `discarded`.
#[derive(Debug, Clone, Default)]
pub struct ParsedFeatures {
    pub line_sections: Vec<LineSection>,
    pub facilities: Vec<Facility>,
    pub plant_points: Vec<PlantPoint>,
    pub discarded: usize,
    pub diagnostics: IngestDiagnostics,
}

#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    pub hvdc_names: HvdcNameList,
}

/// Parses a GeoJSON FeatureCollection and partitions it by power type.
pub fn parse_feature_collection(bytes: &[u8]) -> Result<ParsedFeatures, IngestError> {
    let (raw, read) = read_feature_collection(bytes, None)?;
    Ok(partition_features(&raw, read, &IngestOptions::default()))
}

fn plant_capacity(tags: &std::collections::BTreeMap<String, String>) -> Option<f64> {
    ["plant:output:electricity", "generator:output:electricity"]
        .iter()
        .find_map(|k| tags.get(*k).and_then(|v| tags::parse_capacity_mw(v)))
}

fn plant_fuel(tags: &std::collections::BTreeMap<String, String>) -> Option<String> {
    ["plant:source", "generator:source"]
        .iter()
        .find_map(|k| tags.get(*k).cloned())
}

fn facility_footprint(g: &Geometry) -> Option<Footprint> {
    match g {
        Geometry::Point(c) => Some(Footprint::Point(*c)),
        Geometry::Polygon(p) if p.area_deg2() > 0.0 => Some(Footprint::Polygon(p.clone())),
        Geometry::Polygon(p) => Some(Footprint::Point(p.centroid())),
        Geometry::LineString(_) => None,
    }
}

/// Splits raw features by `power` tag into lines, facilities and plant points.
pub fn partition_features(
    raw: &[RawFeature],
    read: ReadDiagnostics,
    opts: &IngestOptions,
) -> ParsedFeatures {
    let mut out = ParsedFeatures::default();
    let d = &mut out.diagnostics;
    d.input_features = raw.len() + read.skipped();
    d.missing_geometry = read.missing_geometry;
    d.unsupported_geometry = read.unsupported_geometry;
    d.missing_id = read.missing_id;
    out.discarded = read.skipped();

    for f in raw {
        let power = f.tags.get("power").map(String::as_str).unwrap_or("");
        let voltage = f
            .tags
            .get("voltage")
            .map(|v| parse_voltage_tag(v))
            .unwrap_or_default();
        match power {
            "line" | "cable" => {
                let Geometry::LineString(path) = &f.geometry else {
                    out.diagnostics.non_line_geometry += 1;
                    out.discarded += 1;
                    continue;
                };
                out.diagnostics.dropped_voltage_tokens += voltage.dropped;
                let signals = detect_hvdc_tags(&f.tags, &opts.hvdc_names);
                if signals.conflict {
                    out.diagnostics.hvdc_tag_conflicts += 1;
                }
                let location = f.tags.get("location").map(String::as_str);
                out.line_sections.push(LineSection {
                    id: f.osm_id.clone(),
                    path: path.clone(),
                    voltages_kv: voltage.kv,
                    cables: f.tags.get("cables").and_then(|c| tags::parse_count_tag(c)),
                    circuits_declared: f
                        .tags
                        .get("circuits")
                        .and_then(|c| tags::parse_count_tag(c)),
                    is_hvdc: signals.any(),
                    is_underground: power == "cable"
                        || matches!(location, Some("underground" | "underwater")),
                    name: f.tags.get("name").cloned(),
                    voltage_inferred: false,
                    source: f.source.clone(),
                });
            }
            "substation" | "plant" | "converter" => {
                if power == "plant" {
                    if let Geometry::Point(c) = f.geometry {
                        out.plant_points.push(PlantPoint {
                            id: f.osm_id.clone(),
                            coord: c,
                            name: f.tags.get("name").cloned(),
                            output_mw: plant_capacity(&f.tags),
                            source_fuel: plant_fuel(&f.tags),
                            source: f.source.clone(),
                        });
                        continue;
                    }
                }
                let Some(footprint) = facility_footprint(&f.geometry) else {
                    out.diagnostics.unsupported_geometry += 1;
                    out.discarded += 1;
                    continue;
                };
                out.diagnostics.dropped_voltage_tokens += voltage.dropped;
                let kind = match power {
                    "substation" => FacilityKind::Substation,
                    "plant" => FacilityKind::Plant,
                    _ => FacilityKind::Converter,
                };
                out.facilities.push(Facility {
                    id: f.osm_id.clone(),
                    kind,
                    footprint,
                    voltages_kv: voltage.kv,
                    name: f.tags.get("name").cloned(),
                    plant_output_mw: plant_capacity(&f.tags),
                    plant_source: plant_fuel(&f.tags),
                    source: f.source.clone(),
                });
            }
            _ => {
                out.diagnostics.unused_power_type += 1;
                out.discarded += 1;
            }
        }
    }
    out
}
