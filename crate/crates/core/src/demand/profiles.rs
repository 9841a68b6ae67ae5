//! Hourly capacity factors for intermittent generation.

use serde::{Deserialize, Serialize};

use crate::model::{Bus, Generator};
use crate::parameters::fuel::DisplayFuel;

const PROFILES: &str = include_str!("../../data/profiles.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Season {
    Summer,
    Winter,
    Shoulder,
}

impl Season {
    pub fn of_month(month: u32) -> Season {
        match month {
            6..=8 => Season::Summer,
            12 | 1 | 2 => Season::Winter,
            _ => Season::Shoulder,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SeasonalProfile {
    pub summer: Vec<f64>,
    pub winter: Vec<f64>,
    pub shoulder: Vec<f64>,
}

impl SeasonalProfile {
    pub fn at(&self, season: Season, hour: u8) -> f64 {
        let v = match season {
            Season::Summer => &self.summer,
            Season::Winter => &self.winter,
            Season::Shoulder => &self.shoulder,
        };
        v[hour as usize % 24]
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Profiles {
    pub solar: SeasonalProfile,
    pub wind: SeasonalProfile,
}

impl Default for Profiles {
    fn default() -> Self {
        Profiles::parse(PROFILES).expect("bundled profiles.toml is valid")
    }
}

impl Profiles {
    pub fn parse(text: &str) -> Result<Self, String> {
        let p: Profiles = toml::from_str(text).map_err(|e| e.to_string())?;
        for (name, s) in [("solar", &p.solar), ("wind", &p.wind)] {
            for v in [&s.summer, &s.winter, &s.shoulder] {
                if v.len() != 24 || v.iter().any(|x| !(0.0..=1.0).contains(x)) {
                    return Err(format!("{name} profile needs 24 factors in [0, 1]"));
                }
            }
        }
        Ok(p)
    }

    /// Capacity factor for a fuel at a local hour; 1 for dispatchable fuels.
    pub fn factor(&self, fuel: DisplayFuel, season: Season, local_hour: u8) -> f64 {
        match fuel {
            DisplayFuel::Solar => self.solar.at(season, local_hour),
            DisplayFuel::Wind => self.wind.at(season, local_hour),
            _ => 1.0,
        }
    }
}

/// Local solar hour from UTC by longitude (15° per hour).
pub fn local_hour(utc_hour: u8, lon: f64) -> u8 {
    let offset = (lon / 15.0).round() as i64;
    (utc_hour as i64 + offset).rem_euclid(24) as u8
}

/// Sets `p_avail_mw` of every generator for the given UTC hour and month.
/// Only solar and wind change.
pub fn derate_renewables(
    gens: &mut [Generator],
    buses: &[Bus],
    utc_hour: u8,
    month: u32,
    profiles: &Profiles,
) {
    let season = Season::of_month(month);
    for g in gens.iter_mut() {
        let h = local_hour(utc_hour, buses[g.bus].coord.lon);
        g.p_avail_mw = g.p_max_mw * profiles.factor(g.display, season, h);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchors() {
        let p = Profiles::default();
        assert_eq!(p.factor(DisplayFuel::Solar, Season::Summer, 16), 0.52);
        assert_eq!(p.factor(DisplayFuel::Solar, Season::Summer, 12), 0.95);
        assert_eq!(p.factor(DisplayFuel::Solar, Season::Winter, 12), 0.70);
        assert_eq!(p.factor(DisplayFuel::Solar, Season::Shoulder, 12), 0.85);
        for s in [Season::Summer, Season::Winter, Season::Shoulder] {
            assert_eq!(p.factor(DisplayFuel::Solar, s, 2), 0.0);
            assert_eq!(p.factor(DisplayFuel::Hydro, s, 2), 1.0);
        }
        assert!((885.0 * p.factor(DisplayFuel::Solar, Season::Summer, 16) - 460.2).abs() < 1e-9);
    }

    #[test]
    fn wind_ranges() {
        let p = Profiles::default();
        let s = &p.wind.summer;
        let min = s.iter().cloned().fold(f64::MAX, f64::min);
        let max = s.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!((min, max), (0.2, 0.6));
        let w = &p.wind.winter;
        assert!(w.iter().all(|x| (0.35..=0.58).contains(x)));
    }

    #[test]
    fn seasons_and_local_time() {
        assert_eq!(Season::of_month(7), Season::Summer);
        assert_eq!(Season::of_month(1), Season::Winter);
        assert_eq!(Season::of_month(4), Season::Shoulder);
        // Virginia, 20:00 UTC is 15:00 local solar time
        assert_eq!(local_hour(20, -77.0), 15);
        assert_eq!(local_hour(2, -77.0), 21);
    }
}
