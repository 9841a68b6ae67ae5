//! Progressive relaxation ladder.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::network::{PuNetwork, RATE_UNLIMITED};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level {
    L0,
    L1,
    L2,
    L3,
    L4,
    L5,
}

impl Level {
    pub const ALL: [Level; 6] = [Level::L0, Level::L1, Level::L2, Level::L3, Level::L4, Level::L5];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn up_to(max: Level) -> impl Iterator<Item = Level> {
        Level::ALL.into_iter().filter(move |l| *l <= max)
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.index())
    }
}

impl FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().trim_start_matches(['L', 'l']);
        t.parse::<usize>()
            .ok()
            .and_then(|i| Level::ALL.get(i).copied())
            .ok_or_else(|| format!("unknown relaxation level {s:?} (expected L0..L5)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub level: Level,
    /// `None` keeps the per-branch default.
    pub angle_limit_deg: Option<f64>,
    /// Infinite removes thermal limits.
    pub thermal_mult: f64,
    pub v_bounds: Option<(f64, f64)>,
    pub q_mult: f64,
    /// Served load floor as a fraction of generating capacity.
    pub load_cap_frac: Option<f64>,
    pub p_min_mult: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ac1Spec {
    pub v_bounds: (f64, f64),
    pub q_mult: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationPlan {
    pub levels: [LevelSpec; 6],
    pub ac1: Ac1Spec,
}

impl Default for RelaxationPlan {
    fn default() -> Self {
        let spec = |level, angle, thermal, v, q, cap, pmin| LevelSpec {
            level,
            angle_limit_deg: angle,
            thermal_mult: thermal,
            v_bounds: v,
            q_mult: q,
            load_cap_frac: cap,
            p_min_mult: pmin,
        };
        RelaxationPlan {
            levels: [
                spec(Level::L0, None, 1.0, None, 1.0, None, 1.0),
                spec(Level::L1, Some(60.0), 1.0, None, 1.0, None, 1.0),
                spec(Level::L2, Some(60.0), 1.2, None, 1.0, None, 1.0),
                spec(Level::L3, Some(90.0), 1.5, None, 1.0, None, 0.5),
                spec(Level::L4, Some(90.0), 1.5, None, 1.0, Some(0.7), 0.0),
                spec(Level::L5, Some(90.0), f64::INFINITY, Some((0.85, 1.15)), 2.0, Some(0.7), 0.0),
            ],
            ac1: Ac1Spec {
                v_bounds: (0.90, 1.10),
                q_mult: 1.5,
            },
        }
    }
}

/// A network with one level's relaxations applied.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedNetwork {
    pub net: PuNetwork,
    pub level: Level,
    pub ac1: bool,
    /// Served load may be curtailed down to this (pu), when set.
    pub min_served: Option<f64>,
}

impl RelaxedNetwork {
    /// Largest total curtailment allowed (pu).
    pub fn max_shed(&self) -> f64 {
        match self.min_served {
            Some(m) => (self.net.total_pd() - m).max(0.0),
            None => 0.0,
        }
    }
}

impl RelaxationPlan {
    pub fn spec(&self, level: Level) -> &LevelSpec {
        &self.levels[level.index()]
    }

    /// Applies `level` (and the AC1 layer when `ac1`) to a copy of `net`.
    /// Voltage bounds take the widest of default, level and AC1; reactive
    /// multipliers take the largest.
    pub fn apply(&self, net: &PuNetwork, level: Level, ac1: bool) -> RelaxedNetwork {
        let spec = self.spec(level);
        let mut out = net.clone();
        let mut v = spec.v_bounds;
        let mut q = spec.q_mult;
        if ac1 {
            v = Some(match v {
                Some((lo, hi)) => (lo.min(self.ac1.v_bounds.0), hi.max(self.ac1.v_bounds.1)),
                None => self.ac1.v_bounds,
            });
            q = q.max(self.ac1.q_mult);
        }
        for b in &mut out.buses {
            if let Some((lo, hi)) = v {
                b.v_min = b.v_min.min(lo);
                b.v_max = b.v_max.max(hi);
            }
        }
        for br in &mut out.branches {
            if let Some(a) = spec.angle_limit_deg {
                br.angle_max = br.angle_max.max(a.to_radians());
            }
            if spec.thermal_mult.is_finite() {
                br.rate_a *= spec.thermal_mult;
            } else {
                br.rate_a = RATE_UNLIMITED;
            }
        }
        if level < Level::L5 {
            enforce_impedance_consistency(&mut out);
        }
        for g in &mut out.gens {
            g.p_min *= spec.p_min_mult;
            g.q_min *= q;
            g.q_max *= q;
        }
        for d in &mut out.dclines {
            d.q_min *= q;
            d.q_max *= q;
        }
        let min_served = spec
            .load_cap_frac
            .map(|f| out.total_pd().min(f * out.total_p_max()));
        RelaxedNetwork {
            net: out,
            level,
            ac1,
            min_served,
        }
    }
}

/// Caps `rate_a` at `(π/2)/x` so the thermal bound stays reachable within
/// the angle range. Returns the number of branches changed.
pub fn enforce_impedance_consistency(net: &mut PuNetwork) -> usize {
    let mut n = 0;
    for br in &mut net.branches {
        if !br.has_thermal_limit() || br.x <= 0.0 {
            continue;
        }
        if br.rate_a * br.x > FRAC_PI_2 {
            br.rate_a = FRAC_PI_2 / br.x;
            n += 1;
        }
    }
    n
}
