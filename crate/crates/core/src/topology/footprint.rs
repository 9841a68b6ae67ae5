//! Buffered facility footprints and the snapped endpoint index.

use std::collections::HashMap;

use crate::geo::{Coord, Polygon, SnappedPoint};
use crate::ingest::{Facility, FacilityKind, Footprint, LineSection};

/// Buffer added around mapped facility polygons (degrees, about 66 m).
pub const POLYGON_BUFFER_DEG: f64 = 0.0006;
/// Radius of point-mapped facilities in latitude degrees (about 100 m).
pub const POINT_RADIUS_DEG: f64 = 0.0009;

const CELL_DEG: f64 = 0.01;

#[derive(Debug, Clone)]
enum Shape {
    Polygon(Polygon),
    /// Ellipse that is round on the ground: the longitude semi-axis is
    /// stretched by `1/cos(lat)`.
    Ellipse { center: Coord, a_lon: f64, a_lat: f64 },
}

#[derive(Debug, Clone)]
struct Entry {
    facility: usize,
    shape: Shape,
}

impl Entry {
    /// `Some(rank)` when `p` is inside the buffered shape; lower is a better
    /// fit (strictly inside a polygon ranks first).
    fn rank(&self, p: Coord) -> Option<f64> {
        match &self.shape {
            Shape::Polygon(poly) => {
                if poly.contains(p) {
                    Some(-1.0)
                } else {
                    let d = poly.boundary_distance(p);
                    (d <= POLYGON_BUFFER_DEG).then_some(d / POLYGON_BUFFER_DEG)
                }
            }
            Shape::Ellipse { center, a_lon, a_lat } => {
                let u = (p.lon - center.lon) / a_lon;
                let v = (p.lat - center.lat) / a_lat;
                let r = (u * u + v * v).sqrt();
                (r <= 1.0).then_some(r)
            }
        }
    }

    fn bbox(&self) -> (Coord, Coord) {
        match &self.shape {
            Shape::Polygon(p) => {
                let (lo, hi) = p.bbox();
                (
                    Coord::new(lo.lon - POLYGON_BUFFER_DEG, lo.lat - POLYGON_BUFFER_DEG),
                    Coord::new(hi.lon + POLYGON_BUFFER_DEG, hi.lat + POLYGON_BUFFER_DEG),
                )
            }
            Shape::Ellipse { center, a_lon, a_lat } => (
                Coord::new(center.lon - a_lon, center.lat - a_lat),
                Coord::new(center.lon + a_lon, center.lat + a_lat),
            ),
        }
    }
}

fn cell(c: Coord) -> (i64, i64) {
    ((c.lon / CELL_DEG).floor() as i64, (c.lat / CELL_DEG).floor() as i64)
}

/// Grid-bucketed facility shapes answering "which facility contains this
/// point".
#[derive(Debug, Clone, Default)]
pub struct FootprintIndex {
    entries: Vec<Entry>,
    ids: Vec<String>,
    kinds: Vec<FacilityKind>,
    grid: HashMap<(i64, i64), Vec<usize>>,
}

/// Buffers every facility footprint and buckets it on a coarse grid.
pub fn build_facility_footprints(facilities: &[Facility]) -> FootprintIndex {
    let mut idx = FootprintIndex::default();
    for (i, f) in facilities.iter().enumerate() {
        let shape = match &f.footprint {
            Footprint::Polygon(p) => Shape::Polygon(p.clone()),
            Footprint::Point(c) => Shape::Ellipse {
                center: *c,
                a_lon: POINT_RADIUS_DEG / c.lat.to_radians().cos().max(1e-6),
                a_lat: POINT_RADIUS_DEG,
            },
        };
        let entry = Entry { facility: i, shape };
        let (lo, hi) = entry.bbox();
        let (c0, c1) = (cell(lo), cell(hi));
        for x in c0.0..=c1.0 {
            for y in c0.1..=c1.1 {
                idx.grid.entry((x, y)).or_default().push(idx.entries.len());
            }
        }
        idx.entries.push(entry);
        idx.ids.push(f.id.clone());
        idx.kinds.push(f.kind);
    }
    idx
}

impl FootprintIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Facility index containing `p`. When several contain it, the best fit
    /// wins, then the lower facility id.
    pub fn query(&self, p: Coord) -> Option<usize> {
        let bucket = self.grid.get(&cell(p))?;
        let mut best: Option<(f64, &str, usize)> = None;
        for &e in bucket {
            let entry = &self.entries[e];
            if let Some(r) = entry.rank(p) {
                let id = self.ids[entry.facility].as_str();
                let better = match best {
                    None => true,
                    Some((br, bid, _)) => r < br || (r == br && id < bid),
                };
                if better {
                    best = Some((r, id, entry.facility));
                }
            }
        }
        best.map(|(_, _, f)| f)
    }

    pub fn id(&self, facility: usize) -> &str {
        &self.ids[facility]
    }

    pub fn kind(&self, facility: usize) -> FacilityKind {
        self.kinds[facility]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum End {
    Start,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EndpointRef {
    pub section: usize,
    pub end: End,
}

/// Section endpoints keyed by snapped grid point.
#[derive(Debug, Clone, Default)]
pub struct EndpointIndex {
    points: HashMap<SnappedPoint, Vec<EndpointRef>>,
    facility: HashMap<SnappedPoint, Option<usize>>,
}

pub fn build_endpoint_index(sections: &[LineSection], footprints: &FootprintIndex) -> EndpointIndex {
    let mut idx = EndpointIndex::default();
    for (i, s) in sections.iter().enumerate() {
        let (a, b) = s.endpoints();
        for (c, end) in [(a, End::Start), (b, End::End)] {
            let key = c.snap();
            idx.points.entry(key).or_default().push(EndpointRef { section: i, end });
            idx.facility
                .entry(key)
                .or_insert_with(|| footprints.query(key.to_coord()));
        }
    }
    idx
}

impl EndpointIndex {
    pub fn at(&self, p: SnappedPoint) -> &[EndpointRef] {
        self.points.get(&p).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn facility_at(&self, p: SnappedPoint) -> Option<usize> {
        self.facility.get(&p).copied().flatten()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::haversine_m;

    fn facility(id: &str, footprint: Footprint) -> Facility {
        Facility {
            id: id.into(),
            kind: FacilityKind::Substation,
            footprint,
            voltages_kv: vec![138.0],
            name: None,
            plant_output_mw: None,
            plant_source: None,
            source: None,
        }
    }

    fn square(lon: f64, lat: f64, side: f64) -> Polygon {
        Polygon::new(vec![
            Coord::new(lon, lat),
            Coord::new(lon + side, lat),
            Coord::new(lon + side, lat + side),
            Coord::new(lon, lat + side),
        ])
        .unwrap()
    }

    #[test]
    fn polygon_buffer() {
        let idx = build_facility_footprints(&[facility("s", Footprint::Polygon(square(-77.0, 38.0, 0.002)))]);
        assert_eq!(idx.query(Coord::new(-76.999, 38.001)), Some(0));
        // 50 m north of the top edge
        let p = Coord::new(-76.999, 38.002 + 50.0 / 111_195.0);
        assert_eq!(idx.query(p), Some(0));
        let far = Coord::new(-76.999, 38.002 + 100.0 / 111_195.0);
        assert_eq!(idx.query(far), None);
    }

    #[test]
    fn point_substation_radius() {
        let c = Coord::new(-77.0, 38.0);
        let idx = build_facility_footprints(&[facility("p", Footprint::Point(c))]);
        let east_200m = Coord::new(-77.0 + 200.0 / (111_195.0 * 38f64.to_radians().cos()), 38.0);
        assert!(haversine_m(c, east_200m) > 199.0);
        assert_eq!(idx.query(east_200m), None);
        let east_80m = Coord::new(-77.0 + 80.0 / (111_195.0 * 38f64.to_radians().cos()), 38.0);
        assert_eq!(idx.query(east_80m), Some(0));
    }

    #[test]
    fn endpoint_snapping() {
        let a = Coord::new(-77.1234564, 38.9999996);
        // 5 cm east lands in the same cell only if it rounds the same way
        let near = Coord::new(-77.1234564 + 0.0000001, 38.9999996);
        assert_eq!(a.snap(), near.snap());
        let one_cell = Coord::new(-77.123455, 39.0);
        assert_ne!(a.snap(), one_cell.snap());
    }
}
