//! Parsing of individual OSM power tags.

use std::collections::BTreeMap;

/// Result of parsing a `voltage` tag.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedVoltage {
    /// Voltages in kV, sorted descending.
    pub kv: Vec<f64>,
    /// A token carried a bipolar `±` prefix.
    pub hvdc_hint: bool,
    /// Tokens that could not be parsed.
    pub dropped: usize,
}

/// Parses a semicolon-delimited voltage tag given in volts.
///
/// Never fails: garbage tokens are dropped and counted, and an empty result
/// means the feature is untagged.
pub fn parse_voltage_tag(raw: &str) -> ParsedVoltage {
    let mut out = ParsedVoltage::default();
    for token in raw.split(';') {
        let mut t = token.trim();
        if t.is_empty() {
            continue;
        }
        for prefix in ["±", "+/-", "+-", "-/+"] {
            if let Some(rest) = t.strip_prefix(prefix) {
                out.hvdc_hint = true;
                t = rest.trim();
            }
        }
        let lower = t.to_ascii_lowercase();
        let (number, scale) = if let Some(n) = lower.strip_suffix("kv") {
            (n.trim().to_string(), 1.0)
        } else if let Some(n) = lower.strip_suffix('v') {
            (n.trim().to_string(), 1e-3)
        } else {
            (lower.clone(), 1e-3)
        };
        match number.replace('_', "").parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => out.kv.push(v * scale),
            _ => out.dropped += 1,
        }
    }
    out.kv.sort_by(|a, b| b.total_cmp(a));
    out
}

/// Renders voltages (kV) back into a volts tag, e.g. `345000;138000`.
pub fn render_voltage_tag(kv: &[f64]) -> String {
    kv.iter()
        .map(|v| {
            let volts = (v * 1000.0 * 1000.0).round() / 1000.0;
            format!("{volts}")
        })
        .collect::<Vec<_>>()
        .join(";")
}

/// Sums semicolon-separated integer counts (`cables=6;3` → 9).
pub fn parse_count_tag(raw: &str) -> Option<u32> {
    let mut total = 0u32;
    let mut any = false;
    for token in raw.split(';') {
        if let Ok(v) = token.trim().parse::<u32>() {
            total = total.saturating_add(v);
            any = true;
        }
    }
    (any && total > 0).then_some(total)
}

/// Parses a plant capacity tag into MW. Accepts `MW`, `kW`, `GW` suffixes;
/// bare numbers are MW. Non-numeric values such as `yes` return `None`.
pub fn parse_capacity_mw(raw: &str) -> Option<f64> {
    let t = raw.trim().to_ascii_lowercase().replace(' ', "");
    let (num, scale) = if let Some(n) = t.strip_suffix("gw") {
        (n, 1000.0)
    } else if let Some(n) = t.strip_suffix("mw") {
        (n, 1.0)
    } else if let Some(n) = t.strip_suffix("kw") {
        (n, 1e-3)
    } else {
        (t.as_str(), 1.0)
    };
    num.replace(',', ".")
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite() && *v > 0.0)
        .map(|v| v * scale)
}

/// Curated list of known HVDC project names, matched case-insensitively as
/// substrings of the feature name.
#[derive(Debug, Clone)]
pub struct HvdcNameList {
    names: Vec<String>,
}

const DEFAULT_HVDC_NAMES: &str = include_str!("../../data/hvdc_projects.txt");

impl HvdcNameList {
    pub fn parse(text: &str) -> Self {
        let names = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase())
            .filter(|l| !l.is_empty())
            .collect();
        HvdcNameList { names }
    }

    pub fn matches(&self, name: &str) -> bool {
        let n = name.to_lowercase();
        self.names.iter().any(|k| n.contains(k.as_str()))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

impl Default for HvdcNameList {
    fn default() -> Self {
        Self::parse(DEFAULT_HVDC_NAMES)
    }
}

/// The five independent HVDC signals; any one marks a line as HVDC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct HvdcSignals {
    pub frequency_dc: bool,
    pub bipolar_voltage: bool,
    pub type_dc: bool,
    pub dc_conductor_count: bool,
    pub name_match: bool,
    /// An explicit AC frequency contradicts one of the DC signals.
    pub conflict: bool,
}

impl HvdcSignals {
    pub fn any(&self) -> bool {
        self.frequency_dc
            || self.bipolar_voltage
            || self.type_dc
            || self.dc_conductor_count
            || self.name_match
    }
}

fn is_ac_frequency(tag: Option<&String>) -> bool {
    tag.map(|f| {
        f.split(';')
            .any(|t| t.trim().parse::<f64>().map(|v| v > 0.0).unwrap_or(false))
    })
    .unwrap_or(false)
}

/// Evaluates the HVDC signals on a line's tags.
pub fn detect_hvdc_tags(tags: &BTreeMap<String, String>, names: &HvdcNameList) -> HvdcSignals {
    let frequency = tags.get("frequency");
    let frequency_dc = frequency
        .map(|f| {
            f.split(';').any(|t| {
                let t = t.trim().to_ascii_lowercase();
                t == "dc" || t.parse::<f64>().map(|v| v == 0.0).unwrap_or(false)
            })
        })
        .unwrap_or(false);
    let voltage = tags.get("voltage").map(|v| parse_voltage_tag(v));
    let bipolar_voltage = voltage.as_ref().map(|v| v.hvdc_hint).unwrap_or(false);
    let type_dc = ["line:type", "cable:type"]
        .iter()
        .any(|k| tags.get(*k).map(|v| v.trim().eq_ignore_ascii_case("dc")).unwrap_or(false));
    let ac_frequency = is_ac_frequency(frequency);
    let max_kv = voltage
        .as_ref()
        .and_then(|v| v.kv.first().copied())
        .unwrap_or(0.0);
    let dc_conductor_count = !ac_frequency
        && max_kv > 100.0
        && tags
            .get("cables")
            .and_then(|c| parse_count_tag(c))
            .map(|c| c == 1 || c == 2)
            .unwrap_or(false);
    let name_match = tags.get("name").map(|n| names.matches(n)).unwrap_or(false);
    let mut s = HvdcSignals {
        frequency_dc,
        bipolar_voltage,
        type_dc,
        dc_conductor_count,
        name_match,
        conflict: false,
    };
    s.conflict = ac_frequency && s.any();
    s
}
