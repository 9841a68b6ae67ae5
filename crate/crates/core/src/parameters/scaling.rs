//! Topology and capacity factors compensating for parallel circuits that the
//! map data does not show.
//!
//! Factors are applied in exact rational arithmetic on the binary values of
//! the inputs, then rounded once to `f64`. This keeps the product
//! `X·MVA/N_C` invariant under scaling exactly rather than to rounding error.

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Deserialize;

use super::lut::nearest_class;
use crate::model::Branch;

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct ScalingClass {
    pub kv: f64,
    pub n_t: f64,
    pub n_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct MultiStateBoost {
    pub t_mult: f64,
    pub c_mult: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ScalingFactors {
    pub thermal_margin: f64,
    pub multi_state: MultiStateBoost,
    pub class: Vec<ScalingClass>,
}

impl ScalingFactors {
    /// `(N_T, N_C)` for the class nearest `kv`, with the multi-state boost.
    pub fn factors_for(&self, kv: f64, multi_state: bool) -> (f64, f64) {
        let i = nearest_class(kv, self.class.iter().map(|c| c.kv)).unwrap_or(0);
        let c = self.class[i];
        if multi_state {
            (c.n_t * self.multi_state.t_mult, c.n_c * self.multi_state.c_mult)
        } else {
            (c.n_t, c.n_c)
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.class.is_empty() {
            return Err("no scaling classes".into());
        }
        for c in &self.class {
            if !(c.n_t >= 1.0 && c.n_c > 0.0) {
                return Err(format!("invalid factors at {} kV", c.kv));
            }
        }
        Ok(())
    }
}

/// Exact lift of a finite `f64`.
pub fn exact(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite value")
}

fn round(v: &BigRational) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Scaled branch quantities in exact arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactScaled {
    pub r: BigRational,
    pub x: BigRational,
    pub b: BigRational,
    pub mva: BigRational,
}

/// `R/N_T`, `X/N_T`, `B·N_T`, `MVA·N_T·N_C` in exact arithmetic.
pub fn scale_exact(r: f64, x: f64, b: f64, mva: f64, n_t: f64, n_c: f64) -> ExactScaled {
    let (nt, nc) = (exact(n_t), exact(n_c));
    ExactScaled {
        r: exact(r) / &nt,
        x: exact(x) / &nt,
        b: exact(b) * &nt,
        mva: exact(mva) * &nt * &nc,
    }
}

/// Applies the factors for the branch's voltage class (low side for
/// transformers) and returns the scaled branch.
pub fn apply_scaling_factors(branch: &Branch, factors: &ScalingFactors, multi_state: bool) -> Branch {
    let (n_t, n_c) = factors.factors_for(branch.scaling_kv(), multi_state);
    let s = scale_exact(branch.r_pu, branch.x_pu, branch.b_pu, branch.rate_mva, n_t, n_c);
    Branch {
        r_pu: round(&s.r),
        x_pu: round(&s.x),
        b_pu: round(&s.b),
        rate_mva: round(&s.mva),
        ..branch.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parameters::default_tables;

    #[test]
    fn table_rows() {
        let f = &default_tables().scaling;
        assert_eq!(f.factors_for(69.0, false), (3.0, 1.5));
        assert_eq!(f.factors_for(345.0, false), (1.0, 1.0));
        assert_eq!(f.factors_for(69.0, true), (9.0, 3.0));
        assert_eq!(f.factors_for(500.0, false), (1.25, 1.0));
    }

    #[test]
    fn identity_class_is_noop() {
        let s = scale_exact(0.01, 0.031086, 0.4, 1100.0, 1.0, 1.0);
        assert_eq!(round(&s.x), 0.031086);
        assert_eq!(round(&s.mva), 1100.0);
    }

    #[test]
    fn subtransmission_multipliers() {
        let s = scale_exact(0.03, 0.3, 0.01, 165.0, 3.0, 1.5);
        assert_eq!(s.mva, exact(165.0) * exact(4.5));
        assert_eq!(s.x * exact(3.0), exact(0.3));
    }
}
