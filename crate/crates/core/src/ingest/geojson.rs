//! Minimal GeoJSON (RFC 7946) reading on top of `serde_json`.

use std::collections::BTreeMap;

use serde_json::Value;

use super::IngestError;
use crate::geo::{Coord, Polygon};

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Point(Coord),
    LineString(Vec<Coord>),
    Polygon(Polygon),
}

impl Geometry {
    pub fn kind(&self) -> &'static str {
        match self {
            Geometry::Point(_) => "Point",
            Geometry::LineString(_) => "LineString",
            Geometry::Polygon(_) => "Polygon",
        }
    }
}

/// One feature as read from the file, before any power-tag interpretation.
#[derive(Debug, Clone, PartialEq)]
pub struct RawFeature {
    pub osm_id: String,
    pub geometry: Geometry,
    pub tags: BTreeMap<String, String>,
    /// Source extract (state) the feature was read from, when known.
    pub source: Option<String>,
}

/// Features that could not be turned into a `RawFeature`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReadDiagnostics {
    pub missing_geometry: usize,
    pub unsupported_geometry: usize,
    pub missing_id: usize,
}

impl ReadDiagnostics {
    pub fn skipped(&self) -> usize {
        self.missing_geometry + self.unsupported_geometry + self.missing_id
    }
}

fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    let mut offset = 0;
    for (i, l) in bytes.split(|b| *b == b'\n').enumerate() {
        if i + 1 == line {
            return offset + column.saturating_sub(1);
        }
        offset += l.len() + 1;
    }
    bytes.len()
}

/// Parses JSON, reporting failures with the byte offset of the error.
pub fn parse_json(bytes: &[u8]) -> Result<Value, IngestError> {
    serde_json::from_slice(bytes).map_err(|e| IngestError::Json {
        offset: byte_offset(bytes, e.line(), e.column()),
        message: e.to_string(),
    })
}

fn coord(v: &Value) -> Option<Coord> {
    let a = v.as_array()?;
    let lon = a.first()?.as_f64()?;
    let lat = a.get(1)?.as_f64()?;
    (lon.is_finite() && lat.is_finite()).then_some(Coord::new(lon, lat))
}

fn coord_list(v: &Value) -> Option<Vec<Coord>> {
    v.as_array()?.iter().map(coord).collect()
}

/// Reads a geometry object. Multi-part polygons keep their first part and
/// single-part multi-linestrings collapse to a linestring.
pub fn parse_geometry(v: &Value) -> Option<Geometry> {
    let coords = v.get("coordinates")?;
    match v.get("type")?.as_str()? {
        "Point" => coord(coords).map(Geometry::Point),
        "LineString" => {
            let path = coord_list(coords)?;
            (path.len() >= 2).then_some(Geometry::LineString(path))
        }
        "MultiLineString" => {
            let parts = coords.as_array()?;
            if parts.len() != 1 {
                return None;
            }
            let path = coord_list(&parts[0])?;
            (path.len() >= 2).then_some(Geometry::LineString(path))
        }
        "Polygon" => {
            let outer = coords.as_array()?.first()?;
            Polygon::new(coord_list(outer)?).map(Geometry::Polygon)
        }
        "MultiPolygon" => {
            let outer = coords.as_array()?.first()?.as_array()?.first()?;
            Polygon::new(coord_list(outer)?).map(Geometry::Polygon)
        }
        _ => None,
    }
}

fn value_to_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

/// Stringified properties of a feature.
pub fn properties(feature: &Value) -> BTreeMap<String, String> {
    feature
        .get("properties")
        .and_then(Value::as_object)
        .map(|p| {
            p.iter()
                .filter_map(|(k, v)| value_to_string(v).map(|s| (k.clone(), s)))
                .collect()
        })
        .unwrap_or_default()
}

/// Iterates the `features` array of a FeatureCollection.
pub fn features(doc: &Value) -> Result<&Vec<Value>, IngestError> {
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(IngestError::NotFeatureCollection);
    }
    doc.get("features")
        .and_then(Value::as_array)
        .ok_or(IngestError::NotFeatureCollection)
}

/// Reads a FeatureCollection into raw features, skipping (and counting)
/// features without usable geometry or identifier.
pub fn read_feature_collection(
    bytes: &[u8],
    source: Option<&str>,
) -> Result<(Vec<RawFeature>, ReadDiagnostics), IngestError> {
    let doc = parse_json(bytes)?;
    let mut diag = ReadDiagnostics::default();
    let mut out = Vec::new();
    for f in features(&doc)? {
        let tags = properties(f);
        let geometry = match f.get("geometry") {
            None | Some(Value::Null) => {
                diag.missing_geometry += 1;
                continue;
            }
            Some(g) => match parse_geometry(g) {
                Some(g) => g,
                None => {
                    diag.unsupported_geometry += 1;
                    continue;
                }
            },
        };
        let id = f
            .get("id")
            .and_then(value_to_string)
            .or_else(|| tags.get("@id").cloned())
            .or_else(|| tags.get("osm_id").cloned())
            .or_else(|| tags.get("id").cloned())
            .filter(|s| !s.is_empty());
        let Some(osm_id) = id else {
            diag.missing_id += 1;
            continue;
        };
        out.push(RawFeature {
            osm_id,
            geometry,
            tags,
            source: source.map(str::to_string),
        });
    }
    Ok((out, diag))
}
