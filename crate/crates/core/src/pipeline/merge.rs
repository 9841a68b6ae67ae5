//! Combining per-state extracts.

use std::collections::BTreeMap;

use log::warn;
use serde::Serialize;

use crate::ingest::{RawFeature, ReadDiagnostics};

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MergeReport {
    /// Features read per source, in input order.
    pub per_source: Vec<(String, usize)>,
    pub total_read: usize,
    pub duplicates_removed: usize,
    /// Ids seen again with different tags or geometry; the first copy is kept.
    pub conflicting_ids: Vec<String>,
    pub multi_state: bool,
}

/// Unions the extracts in order, keeping the first copy of each OSM id.
pub fn merge_states(inputs: Vec<(String, Vec<RawFeature>, ReadDiagnostics)>) -> (Vec<RawFeature>, ReadDiagnostics, MergeReport) {
    let mut report = MergeReport {
        multi_state: inputs.len() > 1,
        ..Default::default()
    };
    let mut diag = ReadDiagnostics::default();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut out: Vec<RawFeature> = Vec::new();
    for (source, features, d) in inputs {
        diag.missing_geometry += d.missing_geometry;
        diag.unsupported_geometry += d.unsupported_geometry;
        diag.missing_id += d.missing_id;
        report.per_source.push((source, features.len()));
        report.total_read += features.len();
        for f in features {
            match seen.get(&f.osm_id) {
                Some(&i) => {
                    report.duplicates_removed += 1;
                    let first = &out[i];
                    if first.tags != f.tags || first.geometry != f.geometry {
                        warn!("feature {} differs between extracts; keeping the first copy", f.osm_id);
                        report.conflicting_ids.push(f.osm_id.clone());
                    }
                }
                None => {
                    seen.insert(f.osm_id.clone(), out.len());
                    out.push(f);
                }
            }
        }
    }
    report.conflicting_ids.sort();
    report.conflicting_ids.dedup();
    (out, diag, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::Coord;
    use crate::ingest::Geometry;

    fn feat(id: &str, v: &str, src: &str) -> RawFeature {
        RawFeature {
            osm_id: id.into(),
            geometry: Geometry::LineString(vec![Coord::new(0.0, 0.0), Coord::new(1.0, 0.0)]),
            tags: [("power".to_string(), "line".to_string()), ("voltage".to_string(), v.to_string())]
                .into_iter()
                .collect(),
            source: Some(src.into()),
        }
    }

    #[test]
    fn border_way_kept_once() {
        let a = vec![feat("w1", "345000", "VA"), feat("w2", "230000", "VA")];
        let b = vec![feat("w1", "345000", "WV"), feat("w3", "500000", "WV")];
        let (out, _, r) = merge_states(vec![
            ("VA".into(), a, ReadDiagnostics::default()),
            ("WV".into(), b, ReadDiagnostics::default()),
        ]);
        assert_eq!(out.len(), 3);
        assert_eq!(r.duplicates_removed, 1);
        assert!(r.conflicting_ids.is_empty());
        assert_eq!(out[0].source.as_deref(), Some("VA"));
        assert!(r.multi_state);
    }

    #[test]
    fn disjoint_concatenates() {
        let (out, _, r) = merge_states(vec![
            ("A".into(), vec![feat("w1", "345000", "A")], ReadDiagnostics::default()),
            ("B".into(), vec![feat("w2", "345000", "B")], ReadDiagnostics::default()),
        ]);
        assert_eq!(out.iter().map(|f| f.osm_id.as_str()).collect::<Vec<_>>(), ["w1", "w2"]);
        assert_eq!(r.duplicates_removed, 0);
    }

    #[test]
    fn conflict_first_wins() {
        let (out, _, r) = merge_states(vec![
            ("A".into(), vec![feat("w1", "345000", "A")], ReadDiagnostics::default()),
            ("B".into(), vec![feat("w1", "230000", "B")], ReadDiagnostics::default()),
        ]);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].tags["voltage"], "345000");
        assert_eq!(r.conflicting_ids, vec!["w1".to_string()]);
    }
}
