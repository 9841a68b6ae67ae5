//! PowerModels-style JSON for the per-unit network.
//!
//! Components are dictionaries keyed by 1-based index strings. Buses carry
//! `bus_type` 1 (PQ), 2 (PV) or 3 (slack); angles are radians; generator
//! costs use polynomial model 2 with coefficients `[c2, c1, c0]`.

use serde_json::{json, Map, Value};
use thiserror::Error;

use super::network::{BusType, PuBranch, PuBus, PuDcLine, PuGen, PuNetwork};
use crate::parameters::fuel::DisplayFuel;

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing or malformed field {0}")]
    Field(String),
    #[error("component {kind} {index} references unknown bus {bus}")]
    UnknownBus { kind: &'static str, index: String, bus: i64 },
    #[error("expected exactly one slack bus, found {0}")]
    Slack(usize),
}

fn key(i: usize) -> String {
    (i + 1).to_string()
}

fn fuel_name(f: DisplayFuel) -> String {
    serde_json::to_value(f)
        .ok()
        .and_then(|v| v.as_str().map(str::to_lowercase))
        .unwrap_or_else(|| "unknown".into())
}

fn fuel_from(name: &str) -> DisplayFuel {
    let cap = |s: &str| {
        let mut c = s.chars();
        c.next()
            .map(|f| f.to_uppercase().collect::<String>() + c.as_str())
            .unwrap_or_default()
    };
    serde_json::from_value(Value::String(cap(name))).unwrap_or(DisplayFuel::Unknown)
}

/// Serializes the network. Keys come out sorted.
pub fn to_json(net: &PuNetwork) -> Value {
    let mut bus = Map::new();
    let mut load = Map::new();
    let mut shunt = Map::new();
    for (i, b) in net.buses.iter().enumerate() {
        let kind = match b.kind {
            BusType::Pq => 1,
            BusType::Pv => 2,
            BusType::Slack => 3,
        };
        bus.insert(
            key(i),
            json!({
                "index": i + 1,
                "bus_i": i + 1,
                "bus_type": kind,
                "base_kv": b.base_kv,
                "vmin": b.v_min,
                "vmax": b.v_max,
                "vm": 1.0,
                "va": 0.0,
                "area": 1,
                "zone": 1,
            }),
        );
        if b.pd != 0.0 || b.qd != 0.0 {
            let k = load.len();
            load.insert(
                key(k),
                json!({"index": k + 1, "load_bus": i + 1, "pd": b.pd, "qd": b.qd, "status": 1}),
            );
        }
        if b.gs != 0.0 || b.bs != 0.0 {
            let k = shunt.len();
            shunt.insert(
                key(k),
                json!({"index": k + 1, "shunt_bus": i + 1, "gs": b.gs, "bs": b.bs, "status": 1}),
            );
        }
    }
    let branch: Map<String, Value> = net
        .branches
        .iter()
        .enumerate()
        .map(|(i, br)| {
            (
                key(i),
                json!({
                    "index": i + 1,
                    "f_bus": br.from + 1,
                    "t_bus": br.to + 1,
                    "br_r": br.r,
                    "br_x": br.x,
                    "b_fr": br.b / 2.0,
                    "b_to": br.b / 2.0,
                    "g_fr": 0.0,
                    "g_to": 0.0,
                    "rate_a": br.rate_a,
                    "rate_b": br.rate_a,
                    "rate_c": br.rate_a,
                    "tap": 1.0,
                    "shift": 0.0,
                    "angmin": -br.angle_max,
                    "angmax": br.angle_max,
                    "transformer": br.transformer,
                    "br_status": 1,
                }),
            )
        })
        .collect();
    let mut gen = Map::new();
    let mut gencost = Map::new();
    for (i, g) in net.gens.iter().enumerate() {
        gen.insert(
            key(i),
            json!({
                "index": i + 1,
                "gen_bus": g.bus + 1,
                "pg": g.p_set,
                "qg": 0.0,
                "pmin": g.p_min,
                "pmax": g.p_max,
                "qmin": g.q_min,
                "qmax": g.q_max,
                "vg": 1.0,
                "mbase": net.s_base,
                "gen_status": 1,
                "fuel": fuel_name(g.fuel),
                "model": 2,
                "ncost": 3,
                "cost": [g.c2, g.c1, g.c0],
            }),
        );
        gencost.insert(
            key(i),
            json!({"index": i + 1, "model": 2, "ncost": 3, "cost": [g.c2, g.c1, g.c0], "startup": 0.0, "shutdown": 0.0}),
        );
    }
    let dcline: Map<String, Value> = net
        .dclines
        .iter()
        .enumerate()
        .map(|(i, d)| {
            (
                key(i),
                json!({
                    "index": i + 1,
                    "f_bus": d.from + 1,
                    "t_bus": d.to + 1,
                    "pf": 0.0,
                    "pt": 0.0,
                    "qf": 0.0,
                    "qt": 0.0,
                    "pminf": -d.p_max,
                    "pmaxf": d.p_max,
                    "pmint": -d.p_max,
                    "pmaxt": d.p_max,
                    "qminf": d.q_min,
                    "qmaxf": d.q_max,
                    "qmint": d.q_min,
                    "qmaxt": d.q_max,
                    "loss0": d.loss0,
                    "loss1": d.loss1,
                    "br_status": 1,
                }),
            )
        })
        .collect();
    json!({
        "baseMVA": net.s_base,
        "per_unit": true,
        "bus": bus,
        "load": load,
        "shunt": shunt,
        "branch": branch,
        "gen": gen,
        "gencost": gencost,
        "dcline": dcline,
    })
}

pub fn to_string(net: &PuNetwork) -> String {
    let mut s = serde_json::to_string_pretty(&to_json(net)).expect("network serializes");
    s.push('\n');
    s
}

fn num(v: &Value, field: &str) -> Result<f64, ModelFileError> {
    v.get(field)
        .and_then(Value::as_f64)
        .ok_or_else(|| ModelFileError::Field(field.into()))
}

fn int(v: &Value, field: &str) -> Result<i64, ModelFileError> {
    v.get(field)
        .and_then(Value::as_i64)
        .ok_or_else(|| ModelFileError::Field(field.into()))
}

/// Components ordered by numeric key.
fn table<'a>(root: &'a Value, name: &str) -> Result<Vec<(String, &'a Value)>, ModelFileError> {
    let Some(v) = root.get(name) else {
        return Ok(vec![]);
    };
    let map = v.as_object().ok_or_else(|| ModelFileError::Field(name.into()))?;
    let mut out: Vec<(String, &Value)> = map.iter().map(|(k, v)| (k.clone(), v)).collect();
    out.sort_by_key(|(k, _)| (k.parse::<u64>().unwrap_or(u64::MAX), k.clone()));
    Ok(out)
}

/// Parses a model file produced by [`to_json`] or any file with the same
/// fields. Bus numbers are remapped to dense indices in key order.
pub fn from_json(root: &Value) -> Result<PuNetwork, ModelFileError> {
    let s_base = root.get("baseMVA").and_then(Value::as_f64).unwrap_or(100.0);
    let buses_raw = table(root, "bus")?;
    let mut index = std::collections::BTreeMap::new();
    let mut buses = Vec::with_capacity(buses_raw.len());
    for (i, (_, b)) in buses_raw.iter().enumerate() {
        let id = b.get("bus_i").or_else(|| b.get("index")).and_then(Value::as_i64);
        let id = id.ok_or_else(|| ModelFileError::Field("bus_i".into()))?;
        index.insert(id, i);
        let kind = match int(b, "bus_type")? {
            3 => BusType::Slack,
            2 => BusType::Pv,
            _ => BusType::Pq,
        };
        buses.push(PuBus {
            id: i,
            kind,
            base_kv: num(b, "base_kv")?,
            v_min: num(b, "vmin")?,
            v_max: num(b, "vmax")?,
            pd: 0.0,
            qd: 0.0,
            gs: 0.0,
            bs: 0.0,
        });
    }
    let slacks = buses.iter().filter(|b| b.kind == BusType::Slack).count();
    if slacks != 1 {
        return Err(ModelFileError::Slack(slacks));
    }
    let lookup = |kind: &'static str, idx: &str, v: &Value, field: &str| -> Result<usize, ModelFileError> {
        let bus = int(v, field)?;
        index.get(&bus).copied().ok_or(ModelFileError::UnknownBus {
            kind,
            index: idx.to_string(),
            bus,
        })
    };
    let active = |v: &Value, field: &str| v.get(field).and_then(Value::as_i64).unwrap_or(1) != 0;
    for (k, l) in table(root, "load")? {
        if !active(l, "status") {
            continue;
        }
        let b = lookup("load", &k, l, "load_bus")?;
        buses[b].pd += num(l, "pd")?;
        buses[b].qd += num(l, "qd")?;
    }
    for (k, s) in table(root, "shunt")? {
        if !active(s, "status") {
            continue;
        }
        let b = lookup("shunt", &k, s, "shunt_bus")?;
        buses[b].gs += num(s, "gs")?;
        buses[b].bs += num(s, "bs")?;
    }
    let mut branches = Vec::new();
    for (k, br) in table(root, "branch")? {
        if !active(br, "br_status") {
            continue;
        }
        let b_fr = br.get("b_fr").and_then(Value::as_f64);
        let b_to = br.get("b_to").and_then(Value::as_f64);
        let b = match (b_fr, b_to) {
            (Some(f), Some(t)) => f + t,
            _ => br.get("br_b").and_then(Value::as_f64).unwrap_or(0.0),
        };
        let angmax = num(br, "angmax")?;
        let angmin = br.get("angmin").and_then(Value::as_f64).unwrap_or(-angmax);
        branches.push(PuBranch {
            id: branches.len(),
            from: lookup("branch", &k, br, "f_bus")?,
            to: lookup("branch", &k, br, "t_bus")?,
            r: num(br, "br_r")?,
            x: num(br, "br_x")?,
            b,
            rate_a: num(br, "rate_a")?,
            angle_max: angmax.min(-angmin),
            transformer: br.get("transformer").and_then(Value::as_bool).unwrap_or(false),
        });
    }
    let costs: std::collections::BTreeMap<String, &Value> = table(root, "gencost")?.into_iter().collect();
    let mut gens = Vec::new();
    for (k, g) in table(root, "gen")? {
        if !active(g, "gen_status") {
            continue;
        }
        let cost = costs
            .get(&k)
            .and_then(|c| c.get("cost"))
            .or_else(|| g.get("cost"))
            .and_then(Value::as_array)
            .ok_or_else(|| ModelFileError::Field(format!("cost of generator {k}")))?;
        let c: Vec<f64> = cost.iter().filter_map(Value::as_f64).collect();
        let (c2, c1, c0) = match c.as_slice() {
            [c2, c1, c0] => (*c2, *c1, *c0),
            [c1, c0] => (0.0, *c1, *c0),
            [c0] => (0.0, 0.0, *c0),
            _ => return Err(ModelFileError::Field(format!("cost of generator {k}"))),
        };
        gens.push(PuGen {
            id: gens.len(),
            bus: lookup("gen", &k, g, "gen_bus")?,
            p_min: num(g, "pmin")?,
            p_max: num(g, "pmax")?,
            q_min: num(g, "qmin")?,
            q_max: num(g, "qmax")?,
            c2,
            c1,
            c0,
            fuel: g.get("fuel").and_then(Value::as_str).map(fuel_from).unwrap_or(DisplayFuel::Unknown),
            p_set: g.get("pg").and_then(Value::as_f64).unwrap_or(0.0),
        });
    }
    let mut dclines = Vec::new();
    for (k, d) in table(root, "dcline")? {
        if !active(d, "br_status") {
            continue;
        }
        dclines.push(PuDcLine {
            id: dclines.len(),
            from: lookup("dcline", &k, d, "f_bus")?,
            to: lookup("dcline", &k, d, "t_bus")?,
            p_max: num(d, "pmaxf")?,
            loss0: num(d, "loss0")?,
            loss1: num(d, "loss1")?,
            q_min: num(d, "qminf")?,
            q_max: num(d, "qmaxf")?,
        });
    }
    Ok(PuNetwork {
        s_base,
        buses,
        branches,
        gens,
        dclines,
    })
}

pub fn from_str(text: &str) -> Result<PuNetwork, ModelFileError> {
    from_json(&serde_json::from_str(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PuNetwork {
        let bus = |id, kind, pd| PuBus {
            id,
            kind,
            base_kv: 230.0,
            v_min: 0.95,
            v_max: 1.05,
            pd,
            qd: pd * 0.4,
            gs: 0.0,
            bs: if id == 1 { 0.25 } else { 0.0 },
        };
        PuNetwork {
            s_base: 100.0,
            buses: vec![bus(0, BusType::Slack, 0.0), bus(1, BusType::Pq, 1.25), bus(2, BusType::Pv, 0.0)],
            branches: vec![PuBranch {
                id: 0,
                from: 0,
                to: 1,
                r: 0.01,
                x: 0.1,
                b: 0.02,
                rate_a: 2.5,
                angle_max: 0.5,
                transformer: false,
            }],
            gens: vec![PuGen {
                id: 0,
                bus: 2,
                p_min: 0.1,
                p_max: 3.0,
                q_min: -1.0,
                q_max: 1.5,
                c2: 0.0,
                c1: 2600.0,
                c0: 12.5,
                fuel: DisplayFuel::Nuclear,
                p_set: 1.0,
            }],
            dclines: vec![PuDcLine {
                id: 0,
                from: 1,
                to: 2,
                p_max: 5.0,
                loss0: 0.0,
                loss1: 0.02,
                q_min: -1.0,
                q_max: 1.0,
            }],
        }
    }

    #[test]
    fn round_trip() {
        let n = sample();
        let back = from_str(&to_string(&n)).unwrap();
        assert_eq!(back, n);
    }

    #[test]
    fn top_level_keys() {
        let v = to_json(&sample());
        for k in ["bus", "branch", "gen", "gencost", "dcline", "shunt", "load", "baseMVA"] {
            assert!(v.get(k).is_some(), "{k}");
        }
        assert_eq!(v["gencost"]["1"]["cost"][1], 2600.0);
    }
}
