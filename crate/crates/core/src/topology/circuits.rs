//! Circuit-count resolution from `circuits`, `cables` and the voltage list.

use serde::{Deserialize, Serialize};

use crate::ingest::LineSection;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircuitMode {
    /// The voltage-list length overrides a smaller tagged count.
    #[default]
    TrustVoltage,
    /// The tagged count is authoritative.
    TrustCircuits,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitSpec {
    pub voltage_kv: f64,
    /// Index among circuits of the same voltage on this section.
    pub index: u32,
    pub is_hvdc: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedCircuits {
    pub circuits: Vec<CircuitSpec>,
    /// `cables` was not a multiple of three and was floored.
    pub cables_not_divisible: bool,
}

/// Tagged circuit count: `circuits`, else `cables / 3` (at least 1), else 1.
/// HVDC cables count poles rather than phases, so only `circuits` is used.
pub fn tagged_count(section: &LineSection) -> (u32, bool) {
    if let Some(c) = section.circuits_declared {
        return (c.max(1), false);
    }
    if section.is_hvdc {
        return (1, false);
    }
    match section.cables {
        Some(c) => ((c / 3).max(1), c % 3 != 0),
        None => (1, false),
    }
}

/// Expands a filtered section into one entry per circuit.
pub fn resolve_circuit_counts(section: &LineSection, mode: CircuitMode) -> ResolvedCircuits {
    let (c, flagged) = tagged_count(section);
    let voltages = &section.voltages_kv;
    let v = voltages.len() as u32;
    let n = match mode {
        CircuitMode::TrustVoltage => v.max(c),
        CircuitMode::TrustCircuits => c,
    };
    let mut per_voltage = vec![0u32; voltages.len()];
    let mut circuits = Vec::with_capacity(n as usize);
    if v > 0 {
        // voltages are sorted descending, so extras go to the highest first
        for k in 0..n {
            let i = (k % v) as usize;
            circuits.push(CircuitSpec {
                voltage_kv: voltages[i],
                index: per_voltage[i],
                is_hvdc: section.is_hvdc,
            });
            per_voltage[i] += 1;
        }
    }
    circuits.sort_by(|a, b| b.voltage_kv.total_cmp(&a.voltage_kv).then(a.index.cmp(&b.index)));
    ResolvedCircuits {
        circuits,
        cables_not_divisible: flagged,
    }
}
