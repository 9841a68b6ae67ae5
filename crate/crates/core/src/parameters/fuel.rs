//! Two-level fuel normalization: raw strings → technical type → display category.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TechFuel {
    Nuclear,
    Coal,
    Lignite,
    Gas,
    GasTurbine,
    GasEngine,
    Oil,
    Diesel,
    Biomass,
    Biogas,
    Waste,
    Geothermal,
    Hydro,
    PumpedStorage,
    Solar,
    Wind,
    Battery,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DisplayFuel {
    Solar,
    Wind,
    Hydro,
    Geothermal,
    Nuclear,
    Gas,
    Coal,
    Oil,
    Biomass,
    Waste,
    Battery,
    Unknown,
}

impl TechFuel {
    pub const ALL: [TechFuel; 18] = [
        TechFuel::Nuclear,
        TechFuel::Coal,
        TechFuel::Lignite,
        TechFuel::Gas,
        TechFuel::GasTurbine,
        TechFuel::GasEngine,
        TechFuel::Oil,
        TechFuel::Diesel,
        TechFuel::Biomass,
        TechFuel::Biogas,
        TechFuel::Waste,
        TechFuel::Geothermal,
        TechFuel::Hydro,
        TechFuel::PumpedStorage,
        TechFuel::Solar,
        TechFuel::Wind,
        TechFuel::Battery,
        TechFuel::Unknown,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TechFuel::Nuclear => "nuclear",
            TechFuel::Coal => "coal",
            TechFuel::Lignite => "lignite",
            TechFuel::Gas => "gas",
            TechFuel::GasTurbine => "gas_turbine",
            TechFuel::GasEngine => "gas_engine",
            TechFuel::Oil => "oil",
            TechFuel::Diesel => "diesel",
            TechFuel::Biomass => "biomass",
            TechFuel::Biogas => "biogas",
            TechFuel::Waste => "waste",
            TechFuel::Geothermal => "geothermal",
            TechFuel::Hydro => "hydro",
            TechFuel::PumpedStorage => "pumped_storage",
            TechFuel::Solar => "solar",
            TechFuel::Wind => "wind",
            TechFuel::Battery => "battery",
            TechFuel::Unknown => "unknown",
        }
    }

    pub fn from_name(name: &str) -> Option<TechFuel> {
        TechFuel::ALL.into_iter().find(|t| t.name() == name)
    }

    pub fn display(self) -> DisplayFuel {
        match self {
            TechFuel::Nuclear => DisplayFuel::Nuclear,
            TechFuel::Coal | TechFuel::Lignite => DisplayFuel::Coal,
            TechFuel::Gas | TechFuel::GasTurbine | TechFuel::GasEngine => DisplayFuel::Gas,
            TechFuel::Oil | TechFuel::Diesel => DisplayFuel::Oil,
            TechFuel::Biomass | TechFuel::Biogas => DisplayFuel::Biomass,
            TechFuel::Waste => DisplayFuel::Waste,
            TechFuel::Geothermal => DisplayFuel::Geothermal,
            TechFuel::Hydro | TechFuel::PumpedStorage => DisplayFuel::Hydro,
            TechFuel::Solar => DisplayFuel::Solar,
            TechFuel::Wind => DisplayFuel::Wind,
            TechFuel::Battery => DisplayFuel::Battery,
            TechFuel::Unknown => DisplayFuel::Unknown,
        }
    }
}

impl fmt::Display for TechFuel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl DisplayFuel {
    pub fn is_renewable(self) -> bool {
        matches!(
            self,
            DisplayFuel::Solar | DisplayFuel::Wind | DisplayFuel::Hydro | DisplayFuel::Geothermal
        )
    }

    pub fn is_zero_marginal(self) -> bool {
        self.is_renewable() || self == DisplayFuel::Nuclear
    }

    /// Solar and wind are the only fuels derated by hour and season.
    pub fn is_intermittent(self) -> bool {
        matches!(self, DisplayFuel::Solar | DisplayFuel::Wind)
    }
}

/// Raw-string lookup table. Keys are normalized with [`fuel_key`].
#[derive(Debug, Clone, Default)]
pub struct FuelAliases {
    map: BTreeMap<String, TechFuel>,
}

/// Lower-cases, trims, keeps the first `;`-separated token and folds
/// spaces and hyphens to underscores.
pub fn fuel_key(raw: &str) -> String {
    raw.split(';')
        .next()
        .unwrap_or("")
        .trim()
        .to_lowercase()
        .chars()
        .map(|c| if c == ' ' || c == '-' { '_' } else { c })
        .collect()
}

impl FuelAliases {
    pub fn from_map(raw: &BTreeMap<String, String>) -> Result<Self, String> {
        let mut map = BTreeMap::new();
        for (k, v) in raw {
            let tech = TechFuel::from_name(v).ok_or_else(|| format!("unknown fuel type `{v}`"))?;
            map.insert(fuel_key(k), tech);
        }
        Ok(FuelAliases { map })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn normalize(&self, raw: &str) -> (TechFuel, DisplayFuel) {
        let tech = self
            .map
            .get(&fuel_key(raw))
            .copied()
            .unwrap_or(TechFuel::Unknown);
        (tech, tech.display())
    }
}

/// Maps a raw fuel string to its technical and display category using the
/// bundled alias table.
pub fn normalize_fuel(raw: &str) -> (TechFuel, DisplayFuel) {
    super::default_tables().fuel_aliases.normalize(raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gas_variants_collapse() {
        for raw in ["ccgt", "natural_gas", "LNG", "combined cycle", "gas_cc", "NG"] {
            assert_eq!(normalize_fuel(raw), (TechFuel::Gas, DisplayFuel::Gas), "{raw}");
        }
    }

    #[test]
    fn simple_and_fallback() {
        assert_eq!(normalize_fuel("solar"), (TechFuel::Solar, DisplayFuel::Solar));
        assert_eq!(
            normalize_fuel("unknown_tag_xyz"),
            (TechFuel::Unknown, DisplayFuel::Unknown)
        );
        assert_eq!(normalize_fuel("gas;oil").0, TechFuel::Gas);
        assert_eq!(normalize_fuel("SUB").1, DisplayFuel::Coal);
    }

    #[test]
    fn eighteen_types_twelve_categories() {
        let displays: std::collections::BTreeSet<_> =
            TechFuel::ALL.iter().map(|t| t.display()).collect();
        assert_eq!(TechFuel::ALL.len(), 18);
        assert_eq!(displays.len(), 12);
    }

    #[test]
    fn sets() {
        assert!(DisplayFuel::Nuclear.is_zero_marginal());
        assert!(!DisplayFuel::Nuclear.is_renewable());
        assert!(DisplayFuel::Hydro.is_renewable());
        assert!(!DisplayFuel::Battery.is_zero_marginal());
    }
}
