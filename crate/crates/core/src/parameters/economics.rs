//! Generator cost curves and operating limits.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::fuel::{DisplayFuel, TechFuel};

/// One row of the fuel economics table.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TechRow {
    pub name: String,
    pub c1: f64,
    pub c0: f64,
    pub startup: f64,
    pub p_min_pct: f64,
    pub pf: f64,
    pub q_min_frac: f64,
    #[serde(default)]
    pub heat_rate: Option<f64>,
    #[serde(default)]
    pub fuel_price: Option<f64>,
    #[serde(default)]
    pub vom: Option<f64>,
    #[serde(default)]
    pub gas_priced: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct SizeAdjustment {
    pub pivot_mw: f64,
    pub slope: f64,
    pub min: f64,
    pub max: f64,
}

impl SizeAdjustment {
    /// `clamp(1 + slope·ln(pivot/P_max), min, max)`: smaller units get a
    /// higher effective heat rate.
    pub fn factor(&self, p_max_mw: f64) -> f64 {
        if !(p_max_mw > 0.0) {
            return self.max;
        }
        (1.0 + self.slope * (self.pivot_mw / p_max_mw).ln()).clamp(self.min, self.max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EconomicsTable {
    pub rows: BTreeMap<TechFuel, TechRow>,
    pub size: SizeAdjustment,
}

impl EconomicsTable {
    pub fn row(&self, tech: TechFuel) -> &TechRow {
        self.rows
            .get(&tech)
            .or_else(|| self.rows.get(&TechFuel::Unknown))
            .expect("economics table has an unknown row")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenEconomics {
    pub tech: TechFuel,
    pub display: DisplayFuel,
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
    pub startup: f64,
    pub p_min_frac: f64,
    pub power_factor: f64,
    pub q_min_frac: f64,
    pub heat_rate: Option<f64>,
    pub eia_matched: bool,
}

/// Marginal cost from a plant heat rate: `HR·size·price/1000 + VOM`.
pub fn heat_rate_cost(heat_rate: f64, size_factor: f64, fuel_price: f64, vom: f64) -> f64 {
    heat_rate * size_factor * fuel_price / 1000.0 + vom
}

/// Cost curve for a generator.
///
/// A plant matched to the inventory with a known heat rate is costed from
/// that heat rate and the fuel price (gas types use `gas_price`); every other
/// plant takes the table defaults for its fuel.
pub fn generator_costs(
    tech: TechFuel,
    p_max_mw: f64,
    eia_matched: bool,
    heat_rate: Option<f64>,
    gas_price: f64,
    table: &EconomicsTable,
) -> GenEconomics {
    let row = table.row(tech);
    let display = tech.display();
    let mut c1 = row.c1;
    let mut used_hr = None;
    if let (true, Some(hr), Some(price), Some(vom)) =
        (eia_matched, heat_rate, row.fuel_price, row.vom)
    {
        if hr > 0.0 {
            let price = if row.gas_priced { gas_price } else { price };
            c1 = heat_rate_cost(hr, table.size.factor(p_max_mw), price, vom);
            used_hr = Some(hr);
        }
    }
    c1 = c1.max(0.0);
    if display.is_zero_marginal() {
        c1 = c1.min(15.0);
    }
    GenEconomics {
        tech,
        display,
        c2: 0.0,
        c1,
        c0: row.c0,
        startup: row.startup,
        p_min_frac: (row.p_min_pct / 100.0).clamp(0.0, 1.0),
        power_factor: row.pf,
        q_min_frac: row.q_min_frac,
        heat_rate: used_hr,
        eia_matched,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GenLimits {
    pub p_min_mw: f64,
    pub q_min_mvar: f64,
    pub q_max_mvar: f64,
}

/// `Q_max = P_max·tan(acos PF)`, `Q_min = −q_min_frac·Q_max`, `P_min = frac·P_max`.
pub fn generator_limits(econ: &GenEconomics, p_max_mw: f64) -> GenLimits {
    let q_max = p_max_mw * econ.power_factor.acos().tan();
    GenLimits {
        p_min_mw: econ.p_min_frac * p_max_mw,
        q_min_mvar: -econ.q_min_frac * q_max,
        q_max_mvar: q_max,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parameters::default_tables;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn ccgt_heat_rate_cost() {
        assert!(rel(heat_rate_cost(6600.0, 1.0, 3.50, 3.0), 26.1) < 1e-12);
        let t = &default_tables().economics;
        // 400 MW sits on the size pivot
        let e = generator_costs(TechFuel::Gas, 400.0, true, Some(6600.0), 3.50, t);
        assert!(rel(e.c1, 26.1) < 1e-12);
        assert_eq!(e.heat_rate, Some(6600.0));
    }

    #[test]
    fn table_fallbacks() {
        let t = &default_tables().economics;
        let wind = generator_costs(TechFuel::Wind, 100.0, false, None, 3.5, t);
        assert_eq!((wind.c1, wind.c0, wind.startup, wind.power_factor), (0.0, 0.0, 0.0, 0.95));
        let nuc = generator_costs(TechFuel::Nuclear, 1000.0, false, None, 3.5, t);
        assert_eq!((nuc.c1, nuc.p_min_frac), (12.0, 0.5));
        let unk = generator_costs(TechFuel::Unknown, 10.0, false, None, 3.5, t);
        assert_eq!((unk.c1, unk.power_factor, unk.p_min_frac), (50.0, 0.85, 0.0));
    }

    #[test]
    fn size_factor_clamps() {
        let s = default_tables().economics.size;
        assert_eq!(s.factor(400.0), 1.0);
        assert_eq!(s.factor(0.001), 1.3);
        assert_eq!(s.factor(1e9), 0.9);
        assert!(s.factor(100.0) > 1.0);
    }

    #[test]
    fn gas_price_override_and_zero_marginal_cap() {
        let t = &default_tables().economics;
        let e = generator_costs(TechFuel::GasTurbine, 400.0, true, Some(10000.0), 2.0, t);
        assert!(rel(e.c1, 24.0) < 1e-12);
        // an implausible nuclear heat rate is capped
        let n = generator_costs(TechFuel::Nuclear, 10.0, true, Some(30000.0), 3.5, t);
        assert_eq!(n.c1, 15.0);
    }

    #[test]
    fn reactive_limits() {
        let t = &default_tables().economics;
        let gas = generator_costs(TechFuel::Gas, 100.0, false, None, 3.5, t);
        let l = generator_limits(&gas, 100.0);
        assert!(rel(l.q_max_mvar, 61.97) < 1e-4);
        assert!(rel(l.q_max_mvar / 100.0, 0.6197) < 1e-4);
        assert!(rel(l.q_min_mvar, -0.5 * l.q_max_mvar) < 1e-12);
        let solar = generator_costs(TechFuel::Solar, 100.0, false, None, 3.5, t);
        let l = generator_limits(&solar, 100.0);
        assert!(rel(l.q_max_mvar, 32.87) < 1e-3);
        assert_eq!(l.q_min_mvar, -l.q_max_mvar);
        let gt = generator_costs(TechFuel::GasTurbine, 100.0, false, None, 3.5, t);
        assert_eq!(generator_limits(&gt, 100.0).p_min_mw, 0.0);
    }
}
