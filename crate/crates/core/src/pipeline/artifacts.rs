//! Artifact writers.

use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::model::NetworkModel;
use crate::opf::OpfSolution;

/// Pretty JSON with a trailing newline. Map keys are sorted and floats use
/// the shortest round-trip form, so equal values give equal bytes.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let s = to_json_string(value).map_err(std::io::Error::other)?;
    std::fs::write(path, s)
}

/// Buses as points and branches and DC links as straight segments, with
/// AC flows attached when a solution is given.
pub fn topology_geojson(model: &NetworkModel, ac: Option<&OpfSolution>) -> Value {
    let mut features = Vec::new();
    let load: Vec<f64> = {
        let mut v = vec![0.0; model.buses.len()];
        for l in &model.loads {
            v[l.bus] += l.p_mw;
        }
        v
    };
    let mut cap = vec![0.0; model.buses.len()];
    for g in &model.generators {
        cap[g.bus] += g.p_max_mw;
    }
    for b in &model.buses {
        let mut props = json!({
            "element": "bus",
            "id": b.id,
            "base_kv": b.base_kv,
            "slack": b.is_slack,
            "ba": b.ba_code,
            "state": b.state,
            "facility": b.facility_id,
            "load_mw": load[b.id],
            "capacity_mw": cap[b.id],
        });
        if let Some(bus) = ac.and_then(|s| s.buses.get(b.id)) {
            props["vm"] = json!(bus.vm);
            props["va_deg"] = json!(bus.va.to_degrees());
        }
        features.push(json!({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [b.coord.lon, b.coord.lat]},
            "properties": props,
        }));
    }
    let s_base = model.base_mva;
    for br in &model.branches {
        let (a, b) = (model.buses[br.from_bus].coord, model.buses[br.to_bus].coord);
        let mut props = json!({
            "element": "branch",
            "id": br.id,
            "kind": br.kind,
            "from_bus": br.from_bus,
            "to_bus": br.to_bus,
            "voltage_kv": br.voltage_kv,
            "rate_mva": br.rate_mva,
            "length_km": br.length_km,
        });
        if let Some(f) = ac.and_then(|s| s.branches.get(br.id)) {
            props["p_from_mw"] = json!(f.p_from * s_base);
            props["loading"] = json!((f.p_from.hypot(f.q_from)).max(f.p_to.hypot(f.q_to)) * s_base / br.rate_mva);
        }
        features.push(json!({
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": [[a.lon, a.lat], [b.lon, b.lat]]},
            "properties": props,
        }));
    }
    for d in &model.dclinks {
        let (a, b) = (model.buses[d.from_bus].coord, model.buses[d.to_bus].coord);
        features.push(json!({
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": [[a.lon, a.lat], [b.lon, b.lat]]},
            "properties": {
                "element": "dclink",
                "id": d.id,
                "from_bus": d.from_bus,
                "to_bus": d.to_bus,
                "voltage_kv": d.voltage_kv,
                "p_max_mw": d.p_max_mw,
            },
        }));
    }
    json!({"type": "FeatureCollection", "features": features})
}
