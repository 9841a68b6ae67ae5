//! Line, cable and transformer lookup tables and their per-unit conversion.

use serde::Deserialize;

use super::ParameterError;
use crate::model::S_BASE_MVA;

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct LineClass {
    pub kv: f64,
    pub r_ohm_per_km: f64,
    pub x_ohm_per_km: f64,
    pub b_us_per_km: f64,
    pub mva: f64,
    #[serde(default)]
    pub conductor: Option<String>,
    #[serde(default)]
    pub bundle: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct LineLut {
    pub overhead: Vec<LineClass>,
    pub cable: Vec<LineClass>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TransformerPair {
    pub hv_kv: f64,
    pub lv_kv: f64,
    pub x_pu: f64,
    pub r_pu: f64,
    pub mva: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TransformerLut {
    pub pair: Vec<TransformerPair>,
}

/// Index of the class nearest to `kv` in log-ratio distance. Earlier entries
/// win ties.
pub fn nearest_class(kv: f64, classes: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in classes.into_iter().enumerate() {
        let d = (kv / c).ln().abs();
        if best.map(|(_, bd)| d < bd).unwrap_or(true) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

impl LineLut {
    pub fn class_for(&self, kv: f64, underground: bool) -> &LineClass {
        let table = if underground && !self.cable.is_empty() {
            &self.cable
        } else {
            &self.overhead
        };
        let i = nearest_class(kv, table.iter().map(|c| c.kv)).unwrap_or(0);
        &table[i]
    }

    pub fn validate(&self) -> Result<(), String> {
        for c in self.overhead.iter().chain(&self.cable) {
            if !(c.kv > 0.0
                && c.r_ohm_per_km > 0.0
                && c.x_ohm_per_km > 0.0
                && c.b_us_per_km > 0.0
                && c.mva > 0.0)
            {
                return Err(format!("non-positive entry in line class {} kV", c.kv));
            }
        }
        if self.overhead.is_empty() {
            return Err("empty overhead table".into());
        }
        Ok(())
    }
}

impl TransformerLut {
    pub fn pair_for(&self, hv_kv: f64, lv_kv: f64) -> &TransformerPair {
        let mut best = (0, f64::INFINITY);
        for (i, p) in self.pair.iter().enumerate() {
            let d = (hv_kv / p.hv_kv).ln().abs() + (lv_kv / p.lv_kv).ln().abs();
            if d < best.1 {
                best = (i, d);
            }
        }
        &self.pair[best.0]
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.pair.is_empty() {
            return Err("empty transformer table".into());
        }
        for p in &self.pair {
            if !(p.x_pu > 0.0 && p.r_pu > 0.0 && p.mva > 0.0 && p.hv_kv > p.lv_kv) {
                return Err(format!("bad transformer pair {}/{}", p.hv_kv, p.lv_kv));
            }
        }
        Ok(())
    }
}

/// Series and shunt parameters on the system base plus the thermal rating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchParams {
    pub r_pu: f64,
    pub x_pu: f64,
    pub b_pu: f64,
    pub rate_mva: f64,
}

pub fn z_base_ohm(kv: f64) -> f64 {
    kv * kv / S_BASE_MVA
}

/// Per-unit line parameters from per-km LUT values.
///
/// `Z_pu = Z_Ω·L / Z_base` and `B_pu = B_S·L·Z_base` with `Z_base = V²/S_base`.
pub fn line_parameters(
    voltage_kv: f64,
    length_km: f64,
    underground: bool,
    lut: &LineLut,
    margin: f64,
) -> Result<BranchParams, ParameterError> {
    if !(length_km > 0.0) {
        return Err(ParameterError::ZeroLength { length_km });
    }
    let class = lut.class_for(voltage_kv, underground);
    let zb = z_base_ohm(voltage_kv);
    Ok(BranchParams {
        r_pu: class.r_ohm_per_km * length_km / zb,
        x_pu: class.x_ohm_per_km * length_km / zb,
        b_pu: class.b_us_per_km * 1e-6 * length_km * zb,
        rate_mva: class.mva * margin,
    })
}

/// Winding-sharing reduction for autotransformers: applies when the ratio is
/// below 3 and both windings are at 230 kV or above.
pub fn auto_transformer_factor(hv_kv: f64, lv_kv: f64) -> Option<f64> {
    let (hv, lv) = if hv_kv >= lv_kv { (hv_kv, lv_kv) } else { (lv_kv, hv_kv) };
    (hv / lv < 3.0 && lv >= 230.0).then(|| (1.0 - lv / hv).clamp(0.20, 0.65))
}

/// Transformer impedance on its own base (after any autotransformer
/// reduction) and the LUT rating.
pub fn transformer_own_base(hv_kv: f64, lv_kv: f64, lut: &TransformerLut) -> (f64, f64, f64) {
    let p = lut.pair_for(hv_kv, lv_kv);
    let k = auto_transformer_factor(hv_kv, lv_kv).unwrap_or(1.0);
    (p.r_pu * k, p.x_pu * k, p.mva)
}

/// Transformer parameters rebased to the 100 MVA system base.
pub fn transformer_parameters(
    hv_kv: f64,
    lv_kv: f64,
    lut: &TransformerLut,
    margin: f64,
) -> BranchParams {
    let (r_own, x_own, mva) = transformer_own_base(hv_kv, lv_kv, lut);
    let rebase = S_BASE_MVA / mva;
    BranchParams {
        r_pu: r_own * rebase,
        x_pu: x_own * rebase,
        b_pu: 0.0,
        rate_mva: mva * margin,
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
    fn ehv_line_reactance() {
        let t = default_tables();
        let p = line_parameters(345.0, 100.0, false, &t.line_lut, 1.10).unwrap();
        // 0.370 Ω/km · 100 km / (345² / 100)
        assert!(rel(p.x_pu, 37.0 / 1190.25) < 1e-12);
        assert!(rel(p.x_pu, 0.031086) < 1e-4);
        assert!(rel(p.rate_mva, 1100.0) < 1e-12);
    }

    #[test]
    fn subtransmission_rating_margin() {
        let t = default_tables();
        let p = line_parameters(69.0, 10.0, false, &t.line_lut, 1.10).unwrap();
        assert!(rel(p.rate_mva, 165.0) < 1e-12);
    }

    #[test]
    fn zero_length_is_error() {
        let t = default_tables();
        assert!(line_parameters(138.0, 0.0, false, &t.line_lut, 1.10).is_err());
    }

    #[test]
    fn nearest_class_by_ratio() {
        let t = default_tables();
        assert_eq!(t.line_lut.class_for(500.0, false).kv, 525.0);
        assert_eq!(t.line_lut.class_for(220.0, false).kv, 230.0);
        assert_eq!(t.line_lut.class_for(345.0, true).kv, 500.0);
    }

    #[test]
    fn per_unit_round_trip() {
        for kv in [69.0, 115.0, 138.0, 230.0, 345.0, 500.0, 765.0] {
            let ohms = 12.345_f64;
            let back = ohms / z_base_ohm(kv) * z_base_ohm(kv);
            assert!(rel(back, ohms) < 1e-12);
        }
    }

    #[test]
    fn x_over_r_ratios() {
        let t = default_tables();
        let c765 = t.line_lut.class_for(765.0, false);
        let c69 = t.line_lut.class_for(69.0, false);
        assert!(rel(c765.x_ohm_per_km / c765.r_ohm_per_km, 35.0) < 0.05);
        assert!(rel(c69.x_ohm_per_km / c69.r_ohm_per_km, 7.8) < 0.05);
    }

    #[test]
    fn autotransformer_factors() {
        assert!(rel(auto_transformer_factor(345.0, 230.0).unwrap(), 1.0 / 3.0) < 1e-12);
        assert!(rel(auto_transformer_factor(765.0, 500.0).unwrap(), 1.0 - 500.0 / 765.0) < 1e-12);
        assert_eq!(auto_transformer_factor(138.0, 69.0), None);
        // 765/230 has ratio above 3
        assert_eq!(auto_transformer_factor(765.0, 230.0), None);
        // 300/250 clamps up to the floor
        assert_eq!(auto_transformer_factor(300.0, 250.0), Some(0.20));
    }

    #[test]
    fn transformer_own_base_values() {
        let t = default_tables();
        let (_, x, _) = transformer_own_base(345.0, 230.0, &t.transformer_lut);
        assert!(rel(x, 0.026667) < 1e-4);
        let (_, x, _) = transformer_own_base(138.0, 69.0, &t.transformer_lut);
        assert_eq!(x, 0.08);
        let sys = transformer_parameters(138.0, 69.0, &t.transformer_lut, 1.10);
        assert!(rel(sys.x_pu, 0.08 * 100.0 / 150.0) < 1e-12);
        assert!(rel(sys.rate_mva, 165.0) < 1e-12);
    }
}
