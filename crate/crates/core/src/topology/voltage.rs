//! Neighbour-consensus voltage inference and the transmission filter.

use std::collections::BTreeMap;

use serde::Serialize;

use super::footprint::{build_endpoint_index, FootprintIndex};
use crate::ingest::{Facility, FacilityKind, LineSection};

pub const MAX_INFERENCE_ITERATIONS: usize = 10;
pub const TRANSMISSION_MIN_KV: f64 = 69.0;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct InferenceStats {
    pub tagged: usize,
    pub inferred: usize,
    pub unresolved: usize,
    pub iterations: usize,
}

fn kv_key(v: f64) -> i64 {
    (v * 1000.0).round() as i64
}

/// Applies the consensus rules to a candidate pool: unanimity, or a
/// two-thirds majority among at least three candidates.
pub fn consensus(candidates: &[f64]) -> Option<f64> {
    if candidates.is_empty() {
        return None;
    }
    let mut counts: BTreeMap<i64, (usize, f64)> = BTreeMap::new();
    for &c in candidates {
        counts.entry(kv_key(c)).or_insert((0, c)).0 += 1;
    }
    if counts.len() == 1 {
        return Some(candidates[0]);
    }
    if candidates.len() < 3 {
        return None;
    }
    // highest voltage wins a tie on count
    let (n, v) = counts
        .values()
        .rev()
        .fold((0, 0.0), |best, &(n, v)| if n > best.0 { (n, v) } else { best });
    (3 * n >= 2 * candidates.len()).then_some(v)
}

/// Fills untagged sections from their neighbours for up to ten rounds.
///
/// Each round reads the state left by the previous one, so the result does
/// not depend on section order. Substations containing an endpoint add their
/// tagged voltages to the candidate pool.
pub fn infer_voltages(
    sections: &mut [LineSection],
    facilities: &[Facility],
    footprints: &FootprintIndex,
) -> InferenceStats {
    let index = build_endpoint_index(sections, footprints);
    let mut stats = InferenceStats {
        tagged: sections.iter().filter(|s| !s.voltages_kv.is_empty()).count(),
        ..Default::default()
    };

    let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); sections.len()];
    let mut substations: Vec<Vec<usize>> = vec![Vec::new(); sections.len()];
    for (i, s) in sections.iter().enumerate() {
        let (a, b) = s.endpoints();
        for p in [a.snap(), b.snap()] {
            neighbours[i].extend(index.at(p).iter().map(|r| r.section).filter(|&j| j != i));
            if let Some(f) = index.facility_at(p) {
                if facilities[f].kind == FacilityKind::Substation {
                    substations[i].push(f);
                }
            }
        }
        neighbours[i].sort_unstable();
        neighbours[i].dedup();
        substations[i].sort_unstable();
        substations[i].dedup();
    }

    for _ in 0..MAX_INFERENCE_ITERATIONS {
        let mut adopted = Vec::new();
        for (i, s) in sections.iter().enumerate() {
            if !s.voltages_kv.is_empty() {
                continue;
            }
            let mut pool: Vec<f64> = neighbours[i]
                .iter()
                .filter_map(|&j| sections[j].max_voltage_kv())
                .collect();
            for &f in &substations[i] {
                pool.extend(facilities[f].voltages_kv.iter().copied());
            }
            if let Some(v) = consensus(&pool) {
                adopted.push((i, v));
            }
        }
        if adopted.is_empty() {
            break;
        }
        stats.iterations += 1;
        stats.inferred += adopted.len();
        for (i, v) in adopted {
            sections[i].voltages_kv = vec![v];
            sections[i].voltage_inferred = true;
        }
    }
    stats.unresolved = sections.iter().filter(|s| s.voltages_kv.is_empty()).count();
    stats
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FilterStats {
    pub kept: usize,
    pub below_threshold: usize,
    pub unresolved: usize,
}

/// Keeps sections with a resolved voltage of at least 69 kV and drops the
/// sub-transmission entries of multi-voltage tags.
pub fn filter_transmission(sections: Vec<LineSection>) -> (Vec<LineSection>, FilterStats) {
    let mut stats = FilterStats::default();
    let mut out = Vec::with_capacity(sections.len());
    for mut s in sections {
        if s.voltages_kv.is_empty() {
            stats.unresolved += 1;
            continue;
        }
        s.voltages_kv.retain(|&v| v >= TRANSMISSION_MIN_KV);
        if s.voltages_kv.is_empty() {
            stats.below_threshold += 1;
            continue;
        }
        out.push(s);
    }
    stats.kept = out.len();
    (out, stats)
}
