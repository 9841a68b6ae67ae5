//! Planar and geodesic helpers on WGS84 degree coordinates.

use serde::{Deserialize, Serialize};

/// WGS84 mean earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// Grid resolution used for endpoint snapping (degrees per grid unit).
pub const SNAP_RESOLUTION_DEG: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coord {
    pub lon: f64,
    pub lat: f64,
}

impl Coord {
    pub const fn new(lon: f64, lat: f64) -> Self {
        Coord { lon, lat }
    }

    pub fn snap(&self) -> SnappedPoint {
        SnappedPoint::from_coord(*self)
    }
}

/// A coordinate discretized onto the 1e-6 degree integer grid.
///
/// Rounding is half-away-from-zero so keys are identical on every platform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SnappedPoint {
    pub gx: i64,
    pub gy: i64,
}

impl SnappedPoint {
    pub fn from_degrees(lon: f64, lat: f64) -> Self {
        SnappedPoint {
            gx: (lon / SNAP_RESOLUTION_DEG).round() as i64,
            gy: (lat / SNAP_RESOLUTION_DEG).round() as i64,
        }
    }

    pub fn from_coord(c: Coord) -> Self {
        Self::from_degrees(c.lon, c.lat)
    }

    pub fn to_coord(self) -> Coord {
        Coord::new(
            self.gx as f64 * SNAP_RESOLUTION_DEG,
            self.gy as f64 * SNAP_RESOLUTION_DEG,
        )
    }
}

/// Great-circle distance in meters (haversine).
pub fn haversine_m(a: Coord, b: Coord) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let dphi = phi2 - phi1;
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

pub fn polyline_length_km(path: &[Coord]) -> f64 {
    path.windows(2).map(|w| haversine_m(w[0], w[1])).sum::<f64>() / 1000.0
}

/// Euclidean distance in degree space.
pub fn planar_distance(a: Coord, b: Coord) -> f64 {
    ((a.lon - b.lon).powi(2) + (a.lat - b.lat).powi(2)).sqrt()
}

/// Planar distance in degrees from `p` to segment `a`-`b`.
pub fn point_segment_distance(p: Coord, a: Coord, b: Coord) -> f64 {
    let (dx, dy) = (b.lon - a.lon, b.lat - a.lat);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return planar_distance(p, a);
    }
    let t = (((p.lon - a.lon) * dx + (p.lat - a.lat) * dy) / len2).clamp(0.0, 1.0);
    planar_distance(p, Coord::new(a.lon + t * dx, a.lat + t * dy))
}

/// A simple polygon given by its outer ring. The ring is stored closed
/// (first vertex repeated at the end).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    ring: Vec<Coord>,
}

impl Polygon {
    /// Builds a polygon from a ring, closing it if needed. Returns `None` for
    /// rings with fewer than three distinct vertices.
    pub fn new(mut ring: Vec<Coord>) -> Option<Self> {
        if ring.len() < 3 {
            return None;
        }
        if ring.first() != ring.last() {
            let first = ring[0];
            ring.push(first);
        }
        if ring.len() < 4 {
            return None;
        }
        Some(Polygon { ring })
    }

    pub fn ring(&self) -> &[Coord] {
        &self.ring
    }

    /// Signed-area magnitude in square degrees.
    pub fn area_deg2(&self) -> f64 {
        self.ring
            .windows(2)
            .map(|w| w[0].lon * w[1].lat - w[1].lon * w[0].lat)
            .sum::<f64>()
            .abs()
            / 2.0
    }

    /// Area centroid; falls back to the vertex mean for degenerate rings.
    pub fn centroid(&self) -> Coord {
        let mut a = 0.0;
        let (mut cx, mut cy) = (0.0, 0.0);
        for w in self.ring.windows(2) {
            let cross = w[0].lon * w[1].lat - w[1].lon * w[0].lat;
            a += cross;
            cx += (w[0].lon + w[1].lon) * cross;
            cy += (w[0].lat + w[1].lat) * cross;
        }
        if a.abs() < 1e-18 {
            let n = (self.ring.len() - 1) as f64;
            let (sx, sy) = self.ring[..self.ring.len() - 1]
                .iter()
                .fold((0.0, 0.0), |(x, y), c| (x + c.lon, y + c.lat));
            return Coord::new(sx / n, sy / n);
        }
        Coord::new(cx / (3.0 * a), cy / (3.0 * a))
    }

    /// Even-odd ray casting.
    pub fn contains(&self, p: Coord) -> bool {
        let mut inside = false;
        for w in self.ring.windows(2) {
            let (a, b) = (w[0], w[1]);
            if (a.lat > p.lat) != (b.lat > p.lat) {
                let x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
                if p.lon < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Planar distance (degrees) from `p` to the polygon boundary.
    pub fn boundary_distance(&self, p: Coord) -> f64 {
        self.ring
            .windows(2)
            .map(|w| point_segment_distance(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Zero inside the polygon, otherwise the boundary distance.
    pub fn distance(&self, p: Coord) -> f64 {
        if self.contains(p) {
            0.0
        } else {
            self.boundary_distance(p)
        }
    }

    /// Containment in the polygon expanded by `buffer_deg`.
    pub fn contains_buffered(&self, p: Coord, buffer_deg: f64) -> bool {
        self.contains(p) || self.boundary_distance(p) <= buffer_deg
    }

    pub fn bbox(&self) -> (Coord, Coord) {
        let mut lo = Coord::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Coord::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for c in &self.ring {
            lo.lon = lo.lon.min(c.lon);
            lo.lat = lo.lat.min(c.lat);
            hi.lon = hi.lon.max(c.lon);
            hi.lat = hi.lat.max(c.lat);
        }
        (lo, hi)
    }
}
