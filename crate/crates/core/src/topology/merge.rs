//! Union-find merging of fragmented ways into continuous circuits.
//!
//! A merge unit is one voltage level of one section. Two units join at a
//! snapped point when they are the only two units of that voltage (and AC/DC
//! kind) touching it and the point lies outside every facility. Junctions of
//! three or more ways and facility terminals stay as group boundaries.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::circuits::ResolvedCircuits;
use super::footprint::EndpointIndex;
use crate::geo::{polyline_length_km, Coord, SnappedPoint};
use crate::ingest::LineSection;
use crate::union_find::UnionFind;

#[derive(Debug, Clone, PartialEq)]
struct Unit {
    section: usize,
    voltage_kv: f64,
    is_hvdc: bool,
    multiplicity: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MergedGroup {
    pub key: String,
    pub voltage_kv: f64,
    pub is_hvdc: bool,
    /// Member section ids in traversal order.
    pub section_ids: Vec<String>,
    /// Indices into the input section slice, in traversal order.
    pub sections: Vec<usize>,
    pub path: Vec<Coord>,
    pub endpoints: (SnappedPoint, SnappedPoint),
    /// The group closes on itself with no free end.
    pub is_cycle: bool,
    /// Parallel circuits carried by the group (max over members).
    pub multiplicity: u32,
    pub length_km: f64,
    pub underground: bool,
    pub voltage_inferred: bool,
    pub name: Option<String>,
    pub source: Option<String>,
}

fn kv_key(v: f64) -> i64 {
    (v * 1000.0).round() as i64
}

fn fmt_kv(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn unit_ends(sections: &[LineSection], u: &Unit) -> (SnappedPoint, SnappedPoint) {
    let (a, b) = sections[u.section].endpoints();
    (a.snap(), b.snap())
}

/// Merges sections into ordered groups. Output is sorted by group key and
/// does not depend on the order of `sections`.
pub fn merge_lines(
    sections: &[LineSection],
    resolved: &[ResolvedCircuits],
    index: &EndpointIndex,
) -> Vec<MergedGroup> {
    let mut units = Vec::new();
    for (i, r) in resolved.iter().enumerate() {
        let mut by_kv: BTreeMap<(i64, bool), (f64, u32)> = BTreeMap::new();
        for c in &r.circuits {
            by_kv.entry((kv_key(c.voltage_kv), c.is_hvdc)).or_insert((c.voltage_kv, 0)).1 += 1;
        }
        for ((_, hvdc), (kv, n)) in by_kv.into_iter().rev() {
            units.push(Unit {
                section: i,
                voltage_kv: kv,
                is_hvdc: hvdc,
                multiplicity: n,
            });
        }
    }
    let order_key = |u: &Unit| {
        let s = &sections[u.section];
        let (a, b) = unit_ends(sections, u);
        (s.id.clone(), -kv_key(u.voltage_kv), u.is_hvdc, a, b)
    };
    units.sort_by_cached_key(order_key);

    // unit ends per (point, voltage class)
    let mut at: HashMap<(SnappedPoint, i64, bool), Vec<(usize, bool)>> = HashMap::new();
    for (ui, u) in units.iter().enumerate() {
        let (a, b) = unit_ends(sections, u);
        let class = (kv_key(u.voltage_kv), u.is_hvdc);
        at.entry((a, class.0, class.1)).or_default().push((ui, false));
        at.entry((b, class.0, class.1)).or_default().push((ui, true));
    }
    let joins = |p: SnappedPoint, u: &Unit| -> Option<&Vec<(usize, bool)>> {
        let ends = at.get(&(p, kv_key(u.voltage_kv), u.is_hvdc))?;
        (ends.len() == 2 && index.facility_at(p).is_none()).then_some(ends)
    };

    let mut uf = UnionFind::new(units.len());
    for (ui, u) in units.iter().enumerate() {
        let (a, b) = unit_ends(sections, u);
        for p in [a, b] {
            if let Some(ends) = joins(p, u) {
                for &(other, _) in ends {
                    uf.union(ui, other);
                }
            }
        }
    }

    let mut groups = Vec::new();
    let mut used_keys: HashMap<String, usize> = HashMap::new();
    for members in uf.groups() {
        // start from a free end of the lowest unit, or close the cycle
        let start = members.iter().find_map(|&ui| {
            let (a, b) = unit_ends(sections, &units[ui]);
            if joins(a, &units[ui]).is_none() {
                Some((ui, false))
            } else if joins(b, &units[ui]).is_none() {
                Some((ui, true))
            } else {
                None
            }
        });
        let is_cycle = start.is_none();
        let (mut cur, mut entered_at_end) = start.unwrap_or((members[0], false));
        let mut order = Vec::with_capacity(members.len());
        let mut path: Vec<Coord> = Vec::new();
        loop {
            order.push(cur);
            let s = &sections[units[cur].section];
            let mut pts = s.path.clone();
            if entered_at_end {
                pts.reverse();
            }
            if path.is_empty() {
                path.extend(pts);
            } else {
                path.extend(pts.into_iter().skip(1));
            }
            let (a, b) = unit_ends(sections, &units[cur]);
            let exit = if entered_at_end { a } else { b };
            let exit_is_end = !entered_at_end;
            let Some(ends) = joins(exit, &units[cur]) else { break };
            let next = ends
                .iter()
                .copied()
                .find(|&(ui, e)| !(ui == cur && e == exit_is_end));
            match next {
                Some((ui, e)) if order.len() < members.len() && !order.contains(&ui) => {
                    cur = ui;
                    entered_at_end = e;
                }
                _ => break,
            }
        }
        let first = &units[order[0]];
        let mut key = format!(
            "{}-{}kV{}",
            sections[first.section].id,
            fmt_kv(first.voltage_kv),
            if first.is_hvdc { "-dc" } else { "" }
        );
        let n = used_keys.entry(key.clone()).or_insert(0);
        *n += 1;
        if *n > 1 {
            key = format!("{key}~{}", *n);
        }
        let mut total = 0.0;
        let mut under = 0.0;
        for &ui in &order {
            let s = &sections[units[ui].section];
            let l = polyline_length_km(&s.path);
            total += l;
            if s.is_underground {
                under += l;
            }
        }
        let section_idx: Vec<usize> = order.iter().map(|&ui| units[ui].section).collect();
        groups.push(MergedGroup {
            key,
            voltage_kv: first.voltage_kv,
            is_hvdc: first.is_hvdc,
            section_ids: section_idx.iter().map(|&i| sections[i].id.clone()).collect(),
            endpoints: (path[0].snap(), path[path.len() - 1].snap()),
            path,
            is_cycle,
            multiplicity: order.iter().map(|&ui| units[ui].multiplicity).max().unwrap_or(1),
            length_km: total,
            underground: under * 2.0 > total,
            voltage_inferred: section_idx.iter().any(|&i| sections[i].voltage_inferred),
            name: section_idx.iter().find_map(|&i| sections[i].name.clone()),
            source: sections[section_idx[0]].source.clone(),
            sections: section_idx,
        });
    }
    groups.sort_by(|a, b| a.key.cmp(&b.key));
    groups
}
