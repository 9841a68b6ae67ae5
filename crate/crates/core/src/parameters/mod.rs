//! Electrical and economic parameters: line and transformer impedances,
//! scaling factors, generator costs, reactive and voltage limits.

pub mod economics;
pub mod fuel;
pub mod lut;
pub mod scaling;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use serde::Deserialize;
use thiserror::Error;

use crate::ingest::FixtureTables;
use crate::model::{Branch, BranchKind, Generator, NetworkModel};
pub use economics::{generator_costs, generator_limits, EconomicsTable, GenEconomics, GenLimits};
pub use fuel::{normalize_fuel, DisplayFuel, FuelAliases, TechFuel};
pub use lut::{
    auto_transformer_factor, line_parameters, transformer_parameters, BranchParams, LineLut,
    TransformerLut,
};
pub use scaling::{apply_scaling_factors, ScalingFactors};

#[derive(Debug, Error)]
pub enum ParameterError {
    #[error("branch has non-positive length {length_km} km")]
    ZeroLength { length_km: f64 },
    #[error("{file}: {message}")]
    Config { file: String, message: String },
}

const LINE_LUT: &str = include_str!("../../data/line_lut.toml");
const TRANSFORMER_LUT: &str = include_str!("../../data/transformer_lut.toml");
const SCALING: &str = include_str!("../../data/scaling.toml");
const GENERATORS: &str = include_str!("../../data/generators.toml");

#[derive(Deserialize)]
struct GeneratorsFile {
    size_adjustment: economics::SizeAdjustment,
    tech: Vec<economics::TechRow>,
    aliases: BTreeMap<String, String>,
}

/// All lookup tables, immutable after load.
#[derive(Debug, Clone)]
pub struct ParameterTables {
    pub line_lut: LineLut,
    pub transformer_lut: TransformerLut,
    pub scaling: ScalingFactors,
    pub economics: EconomicsTable,
    pub fuel_aliases: FuelAliases,
}

fn parse<T: serde::de::DeserializeOwned>(file: &str, text: &str) -> Result<T, ParameterError> {
    toml::from_str(text).map_err(|e| ParameterError::Config {
        file: file.to_string(),
        message: e.to_string(),
    })
}

fn config_err(file: &str) -> impl Fn(String) -> ParameterError + '_ {
    move |message| ParameterError::Config {
        file: file.to_string(),
        message,
    }
}

impl ParameterTables {
    pub fn from_texts(
        line: &str,
        transformer: &str,
        scaling: &str,
        generators: &str,
    ) -> Result<Self, ParameterError> {
        let line_lut: LineLut = parse("line_lut.toml", line)?;
        line_lut.validate().map_err(config_err("line_lut.toml"))?;
        let transformer_lut: TransformerLut = parse("transformer_lut.toml", transformer)?;
        transformer_lut
            .validate()
            .map_err(config_err("transformer_lut.toml"))?;
        let scaling: ScalingFactors = parse("scaling.toml", scaling)?;
        scaling.validate().map_err(config_err("scaling.toml"))?;
        let gens: GeneratorsFile = parse("generators.toml", generators)?;
        let mut rows = BTreeMap::new();
        for row in gens.tech {
            let tech = TechFuel::from_name(&row.name)
                .ok_or_else(|| config_err("generators.toml")(format!("unknown fuel `{}`", row.name)))?;
            rows.insert(tech, row);
        }
        if !rows.contains_key(&TechFuel::Unknown) {
            return Err(config_err("generators.toml")("missing `unknown` row".into()));
        }
        let fuel_aliases =
            FuelAliases::from_map(&gens.aliases).map_err(config_err("generators.toml"))?;
        Ok(ParameterTables {
            line_lut,
            transformer_lut,
            scaling,
            economics: EconomicsTable {
                rows,
                size: gens.size_adjustment,
            },
            fuel_aliases,
        })
    }

    /// Bundled tables, with any same-named file in `dir` taking precedence.
    pub fn load_dir(dir: &Path) -> Result<Self, ParameterError> {
        let read = |name: &str, default: &'static str| -> Result<String, ParameterError> {
            let p = dir.join(name);
            if p.exists() {
                std::fs::read_to_string(&p).map_err(|e| ParameterError::Config {
                    file: p.display().to_string(),
                    message: e.to_string(),
                })
            } else {
                Ok(default.to_string())
            }
        };
        Self::from_texts(
            &read("line_lut.toml", LINE_LUT)?,
            &read("transformer_lut.toml", TRANSFORMER_LUT)?,
            &read("scaling.toml", SCALING)?,
            &read("generators.toml", GENERATORS)?,
        )
    }
}

/// The bundled tables.
pub fn default_tables() -> &'static ParameterTables {
    static TABLES: OnceLock<ParameterTables> = OnceLock::new();
    TABLES.get_or_init(|| {
        ParameterTables::from_texts(LINE_LUT, TRANSFORMER_LUT, SCALING, GENERATORS)
            .expect("bundled parameter tables are valid")
    })
}

/// Voltage magnitude bounds: generator buses may run higher.
pub fn bus_limits(has_generator: bool) -> (f64, f64) {
    if has_generator {
        (0.95, 1.10)
    } else {
        (0.95, 1.05)
    }
}

/// Maximum angle difference across a branch in degrees.
pub fn branch_angle_limit(kind: BranchKind, voltage_kv: f64) -> f64 {
    if kind.is_transformer() {
        60.0
    } else if voltage_kv >= 100.0 {
        30.0
    } else {
        45.0
    }
}

/// Impedance, rating and angle limit for one branch, before scaling.
pub fn branch_base_parameters(
    branch: &Branch,
    tables: &ParameterTables,
) -> Result<BranchParams, ParameterError> {
    let margin = tables.scaling.thermal_margin;
    match branch.kind {
        BranchKind::AcLine => line_parameters(
            branch.voltage_kv,
            branch.length_km.unwrap_or(0.0),
            branch.underground,
            &tables.line_lut,
            margin,
        ),
        BranchKind::Transformer | BranchKind::Bridge => Ok(transformer_parameters(
            branch.voltage_kv,
            branch.lv_kv.unwrap_or(branch.voltage_kv),
            &tables.transformer_lut,
            margin,
        )),
    }
}

/// Fills branch parameters, applies scaling, and sets bus voltage bounds.
pub fn assign_network_parameters(
    model: &mut NetworkModel,
    tables: &ParameterTables,
) -> Result<(), ParameterError> {
    for br in &mut model.branches {
        let p = branch_base_parameters(br, tables)?;
        br.r_pu = p.r_pu;
        br.x_pu = p.x_pu;
        br.b_pu = p.b_pu;
        br.rate_mva = p.rate_mva;
        br.angle_limit_deg = branch_angle_limit(br.kind, br.voltage_kv);
        *br = apply_scaling_factors(br, &tables.scaling, model.multi_state);
    }
    refresh_bus_limits(model);
    Ok(())
}

pub fn refresh_bus_limits(model: &mut NetworkModel) {
    let has_gen = model.has_generator();
    for (b, g) in model.buses.iter_mut().zip(has_gen) {
        let (lo, hi) = bus_limits(g);
        b.v_min_pu = lo;
        b.v_max_pu = hi;
    }
}

/// Sets the cost curve and limits of one generator from its fuel, capacity
/// and inventory match.
pub fn assign_generator_economics(
    gen: &mut Generator,
    fixtures: Option<&FixtureTables>,
    tables: &ParameterTables,
) -> GenEconomics {
    let gas_price = fixtures
        .map(|f| f.gas_price_usd_per_mmbtu)
        .unwrap_or(crate::ingest::fixtures::DEFAULT_GAS_PRICE_USD_PER_MMBTU);
    let hr = match (&gen.eia_name, fixtures) {
        (Some(n), Some(f)) => f.heat_rate(n),
        _ => None,
    };
    let econ = generator_costs(gen.tech, gen.p_max_mw, gen.eia_matched, hr, gas_price, &tables.economics);
    let lim = generator_limits(&econ, gen.p_max_mw);
    gen.display = econ.display;
    gen.c2 = econ.c2;
    gen.c1 = econ.c1;
    gen.c0 = econ.c0;
    gen.startup_usd = econ.startup;
    gen.heat_rate = econ.heat_rate;
    gen.p_min_mw = lim.p_min_mw;
    gen.q_min_mvar = lim.q_min_mvar;
    gen.q_max_mvar = lim.q_max_mvar;
    econ
}

pub fn assign_generator_parameters(
    model: &mut NetworkModel,
    fixtures: Option<&FixtureTables>,
    tables: &ParameterTables,
) {
    for g in &mut model.generators {
        assign_generator_economics(g, fixtures, tables);
    }
    refresh_bus_limits(model);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_tables_load() {
        let t = default_tables();
        assert_eq!(t.line_lut.overhead.len(), 8);
        assert_eq!(t.line_lut.cable.len(), 4);
        assert_eq!(t.transformer_lut.pair.len(), 9);
        assert_eq!(t.scaling.class.len(), 8);
        assert_eq!(t.economics.rows.len(), 18);
        for p in &t.transformer_lut.pair {
            assert!((0.05..=0.16).contains(&p.x_pu));
        }
    }

    #[test]
    fn limits_by_role() {
        assert_eq!(bus_limits(false), (0.95, 1.05));
        assert_eq!(bus_limits(true), (0.95, 1.10));
        assert_eq!(branch_angle_limit(BranchKind::AcLine, 345.0), 30.0);
        assert_eq!(branch_angle_limit(BranchKind::AcLine, 69.0), 45.0);
        assert_eq!(branch_angle_limit(BranchKind::Transformer, 345.0), 60.0);
    }

    #[test]
    fn override_directory() {
        let dir = tempfile::tempdir().unwrap();
        let text = SCALING.replace("n_t = 3.00", "n_t = 4.00");
        std::fs::write(dir.path().join("scaling.toml"), text).unwrap();
        let t = ParameterTables::load_dir(dir.path()).unwrap();
        assert_eq!(t.scaling.factors_for(69.0, false).0, 4.0);
    }
}
