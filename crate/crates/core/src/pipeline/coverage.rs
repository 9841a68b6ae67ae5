//! Mapped route length against published circuit length, per voltage class.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::geo::polyline_length_km;
use crate::ingest::LineSection;

pub const KM_PER_MILE: f64 = 1.609344;
pub const OVER_MAPPED: f64 = 2.0;
pub const UNDER_MAPPED: f64 = 0.7;
/// A section joins a class when within this ratio of its voltage.
const CLASS_MATCH_RATIO: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageFlag {
    UnderMapped,
    OverMapped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageRow {
    pub voltage_kv: f64,
    pub osm_route_km: f64,
    pub eia_circuit_km: f64,
    pub ratio: f64,
    pub flag: Option<CoverageFlag>,
}

/// One row per fixture voltage class with mileage on both sides. Section
/// length counts once per way regardless of circuits carried.
pub fn emit_coverage_diagnostics(sections: &[LineSection], eia_circuit_miles: &BTreeMap<String, f64>) -> Vec<CoverageRow> {
    let mut classes: Vec<(f64, f64)> = eia_circuit_miles
        .iter()
        .filter_map(|(k, mi)| k.trim().parse::<f64>().ok().map(|kv| (kv, *mi)))
        .filter(|(kv, _)| *kv > 0.0)
        .collect();
    classes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut route = vec![0.0; classes.len()];
    for s in sections {
        let Some(kv) = s.max_voltage_kv() else { continue };
        let best = classes
            .iter()
            .enumerate()
            .map(|(i, (c, _))| (i, (kv / c).ln().abs()))
            .filter(|(_, d)| *d <= CLASS_MATCH_RATIO.ln())
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((i, _)) = best {
            route[i] += polyline_length_km(&s.path);
        }
    }
    classes
        .iter()
        .zip(route)
        .filter(|((_, mi), km)| *mi > 0.0 && *km > 0.0)
        .map(|(&(kv, mi), km)| {
            let eia_km = mi * KM_PER_MILE;
            let ratio = km / eia_km;
            let flag = if ratio > OVER_MAPPED {
                Some(CoverageFlag::OverMapped)
            } else if ratio < UNDER_MAPPED {
                Some(CoverageFlag::UnderMapped)
            } else {
                None
            };
            CoverageRow {
                voltage_kv: kv,
                osm_route_km: km,
                eia_circuit_km: eia_km,
                ratio,
                flag,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::Coord;

    fn section(kv: f64, lon_span: f64) -> LineSection {
        LineSection {
            id: format!("w{kv}"),
            path: vec![Coord::new(0.0, 0.0), Coord::new(lon_span, 0.0)],
            voltages_kv: vec![kv],
            cables: None,
            circuits_declared: None,
            is_hvdc: false,
            is_underground: false,
            name: None,
            voltage_inferred: false,
            source: None,
        }
    }

    #[test]
    fn ratios_and_flags() {
        let s = vec![section(765.0, 1.0), section(345.0, 1.0)];
        let km = polyline_length_km(&s[0].path);
        let mi = km / KM_PER_MILE;
        let fixture: BTreeMap<String, f64> = [
            ("765".to_string(), 2.0 * mi),
            ("345".to_string(), mi),
            ("500".to_string(), 10.0),
        ]
        .into_iter()
        .collect();
        let rows = emit_coverage_diagnostics(&s, &fixture);
        assert_eq!(rows.len(), 2);
        let r345 = rows.iter().find(|r| r.voltage_kv == 345.0).unwrap();
        assert!((r345.ratio - 1.0).abs() < 1e-12);
        assert_eq!(r345.flag, None);
        let r765 = rows.iter().find(|r| r.voltage_kv == 765.0).unwrap();
        assert!((r765.ratio - 0.5).abs() < 1e-12);
        assert_eq!(r765.flag, Some(CoverageFlag::UnderMapped));
    }
}
