//! Random synthetic OSM-like feature collections.

use std::collections::BTreeMap;

use gridforge::geo::Coord;
use gridforge::ingest::{Geometry, RawFeature};
use gridforge::geo::Polygon;
use rand::seq::SliceRandom;
use rand::Rng;

use super::rng;

const KVS: [f64; 4] = [115.0, 230.0, 345.0, 500.0];

fn tags(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn volt_tag(kvs: &[f64]) -> String {
    kvs.iter()
        .map(|k| format!("{}", (k * 1000.0) as i64))
        .collect::<Vec<_>>()
        .join(";")
}

fn square(c: Coord, h: f64) -> Polygon {
    Polygon::new(vec![
        Coord::new(c.lon - h, c.lat - h),
        Coord::new(c.lon + h, c.lat - h),
        Coord::new(c.lon + h, c.lat + h),
        Coord::new(c.lon - h, c.lat + h),
    ])
    .unwrap()
}

/// Substations with one or two voltage levels, lines between them (some
/// split into two sections, some untagged, some dangling), plant points and
/// unused features.
pub fn feature_collection(seed: u64) -> Vec<RawFeature> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    let ns = r.gen_range(3..=8);
    let mut subs: Vec<(Coord, Vec<f64>)> = Vec::new();
    for i in 0..ns {
        let c = Coord::new(-80.0 + r.gen_range(0.0..2.0), 37.0 + r.gen_range(0.0..2.0));
        let mut kvs = vec![*KVS.choose(&mut r).unwrap()];
        if r.gen_bool(0.4) {
            let second = *KVS.choose(&mut r).unwrap();
            if second != kvs[0] {
                kvs.push(second);
            }
        }
        kvs.sort_by(|a, b| b.total_cmp(a));
        out.push(RawFeature {
            osm_id: format!("way/{}", 1000 + i),
            geometry: Geometry::Polygon(square(c, 0.002)),
            tags: tags(&[("power", "substation".into()), ("voltage", volt_tag(&kvs))]),
            source: None,
        });
        subs.push((c, kvs));
    }
    let nl = r.gen_range(ns..=2 * ns + 2);
    let mut id = 2000;
    for _ in 0..nl {
        let a = r.gen_range(0..ns);
        let mut b = r.gen_range(0..ns);
        if b == a {
            b = (a + 1) % ns;
        }
        let common: Vec<f64> = subs[a].1.iter().copied().filter(|k| subs[b].1.contains(k)).collect();
        let kv = *common.first().unwrap_or(&subs[a].1[0]);
        let start = subs[a].0;
        let end = if r.gen_bool(0.1) {
            Coord::new(start.lon + r.gen_range(-0.3..0.3), start.lat + r.gen_range(-0.3..0.3))
        } else {
            subs[b].0
        };
        let mid = Coord::new(
            0.5 * (start.lon + end.lon) + r.gen_range(-0.05..0.05),
            0.5 * (start.lat + end.lat) + r.gen_range(-0.05..0.05),
        );
        let mut line_tags = vec![("power", "line".to_string())];
        if !r.gen_bool(0.15) {
            line_tags.push(("voltage", volt_tag(&[kv])));
        }
        if r.gen_bool(0.3) {
            line_tags.push(("circuits", r.gen_range(1..=2).to_string()));
        }
        let paths = if r.gen_bool(0.35) {
            vec![vec![start, mid], vec![mid, end]]
        } else {
            vec![vec![start, mid, end]]
        };
        for p in paths {
            let p = if r.gen_bool(0.5) { p.into_iter().rev().collect() } else { p };
            out.push(RawFeature {
                osm_id: format!("way/{id}"),
                geometry: Geometry::LineString(p),
                tags: tags(&line_tags),
                source: None,
            });
            id += 1;
        }
    }
    for k in 0..r.gen_range(1..=3) {
        let s = r.gen_range(0..ns);
        let c = subs[s].0;
        out.push(RawFeature {
            osm_id: format!("node/{}", 3000 + k),
            geometry: Geometry::Point(Coord::new(c.lon + 0.001, c.lat)),
            tags: tags(&[
                ("power", "plant".into()),
                ("plant:source", ["gas", "coal", "wind"].choose(&mut r).unwrap().to_string()),
                ("plant:output:electricity", format!("{} MW", r.gen_range(100..1500))),
            ]),
            source: None,
        });
    }
    out.push(RawFeature {
        osm_id: "node/9000".into(),
        geometry: Geometry::Point(Coord::new(-79.0, 38.0)),
        tags: tags(&[("power", "tower".into())]),
        source: None,
    });
    out
}
