// SPDX-License-Identifier: Apache-2.0

//! Analytic technology model: device parameters and row counts to cell PPA.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interloop::{CellContribution, DirectionWeights};
use crate::netlist::CellLibrary;

/// Device parameters of the process. Lengths in nm, work functions in eV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TechParams {
    pub phig_n: f64,
    pub phig_p: f64,
    pub hfin_nm: f64,
    pub tfin_nm: f64,
    pub lg_nm: f64,
    pub lext_nm: u32,
    pub lct_nm: f64,
}

impl Default for TechParams {
    fn default() -> Self {
        Self { phig_n: 4.307, phig_p: 4.8681, hfin_nm: 32.0, tfin_nm: 6.5, lg_nm: 20.0, lext_nm: 5, lct_nm: 24.0 }
    }
}

/// Closed ranges of the continuous parameters.
pub const PHIG_N: (f64, f64) = (4.302, 4.312);
pub const PHIG_P: (f64, f64) = (4.8631, 4.8731);
pub const HFIN: (f64, f64) = (28.0, 36.0);
pub const TFIN: (f64, f64) = (5.8, 7.2);
pub const LG: (f64, f64) = (17.0, 23.0);
pub const LCT: (f64, f64) = (19.0, 29.0);
pub const LEXT: [u32; 3] = [4, 5, 6];

/// Default contacted poly pitch in nm.
pub const CPP_NM: f64 = 54.0;

const CPP_TOL: f64 = 1e-9;

impl TechParams {
    /// Checks every field against its range.
    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: f64, (lo, hi): (f64, f64)| {
            if v.is_finite() && v >= lo - 1e-12 && v <= hi + 1e-12 {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("{name}={v} outside [{lo}, {hi}]")))
            }
        };
        check("phig_n", self.phig_n, PHIG_N)?;
        check("phig_p", self.phig_p, PHIG_P)?;
        check("hfin_nm", self.hfin_nm, HFIN)?;
        check("tfin_nm", self.tfin_nm, TFIN)?;
        check("lg_nm", self.lg_nm, LG)?;
        check("lct_nm", self.lct_nm, LCT)?;
        if !LEXT.contains(&self.lext_nm) {
            return Err(Error::InvalidInput(format!("lext_nm={} not in {{4,5,6}}", self.lext_nm)));
        }
        Ok(())
    }

    /// `lct` that closes the pitch for the given gate and extension lengths.
    pub fn derived_lct(lg_nm: f64, lext_nm: u32, cpp_nm: f64) -> f64 {
        cpp_nm - lg_nm - 2.0 * lext_nm as f64
    }
}

pub fn check_cpp(t: &TechParams, cpp_target: f64) -> bool {
    (t.lg_nm + 2.0 * t.lext_nm as f64 + t.lct_nm - cpp_target).abs() <= CPP_TOL
}

/// Constants of the delay and power factor functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TechFactors {
    pub alpha_n: f64,
    pub alpha_p: f64,
    pub beta_n: f64,
    pub beta_p: f64,
    pub gamma_l: f64,
    pub gamma_h: f64,
    pub gamma_t: f64,
    pub delta_h: f64,
    pub delta_t: f64,
    pub delta_c: f64,
    /// Delay, power and area multipliers for 1, 2 and 3 rows.
    pub rho_d: [f64; 3],
    pub rho_p: [f64; 3],
    pub rho_a: [f64; 3],
    pub cpp_nm: f64,
}

impl Default for TechFactors {
    fn default() -> Self {
        Self {
            alpha_n: 40.0,
            alpha_p: 40.0,
            beta_n: 60.0,
            beta_p: 60.0,
            gamma_l: 0.8,
            gamma_h: 1.0,
            gamma_t: 0.3,
            delta_h: 1.0,
            delta_t: 0.5,
            delta_c: 0.2,
            rho_d: [1.0, 0.93, 0.88],
            rho_p: [1.0, 1.03, 1.07],
            rho_a: [1.0, 32.0 / 31.0, 36.0 / 31.0],
            cpp_nm: CPP_NM,
        }
    }
}

impl TechFactors {
    pub fn delay_factor(&self, t: &TechParams) -> f64 {
        let d = TechParams::default();
        (self.alpha_n * (t.phig_n - d.phig_n) + self.alpha_p * (d.phig_p - t.phig_p)).exp()
            * (t.lg_nm / d.lg_nm).powf(self.gamma_l)
            * (d.hfin_nm / t.hfin_nm).powf(self.gamma_h)
            * (d.tfin_nm / t.tfin_nm).powf(self.gamma_t)
    }

    pub fn power_factor(&self, t: &TechParams) -> f64 {
        let d = TechParams::default();
        (-self.beta_n * (t.phig_n - d.phig_n) - self.beta_p * (d.phig_p - t.phig_p)).exp()
            * (t.hfin_nm / d.hfin_nm).powf(self.delta_h)
            * (t.tfin_nm / d.tfin_nm).powf(self.delta_t)
            * (t.lct_nm / d.lct_nm).powf(self.delta_c)
    }

    fn row_index(rows: u8) -> Result<usize> {
        match rows {
            1..=3 => Ok(rows as usize - 1),
            _ => Err(Error::InvalidInput(format!("num_rows {rows} not in {{1,2,3}}"))),
        }
    }
}

/// Row count chosen for each fused cell type.
pub type RowsAssignment = BTreeMap<String, u8>;

/// Recharacterizes `base` under device parameters `t` and fused-cell row
/// counts. Area depends only on the row count.
pub fn cell_simulate(t: &TechParams, rows: &RowsAssignment, base: &CellLibrary) -> Result<CellLibrary> {
    let f = &base.factors;
    if !check_cpp(t, f.cpp_nm) {
        return Err(Error::Constraint(format!(
            "lg + 2*lext + lct = {} differs from CPP {}",
            t.lg_nm + 2.0 * t.lext_nm as f64 + t.lct_nm,
            f.cpp_nm
        )));
    }
    t.validate()?;
    for name in rows.keys() {
        if !base.is_fused(name) {
            return Err(Error::InvalidInput(format!("num_rows given for non-fused cell '{name}'")));
        }
    }
    let fd = f.delay_factor(t);
    let fp = f.power_factor(t);
    let mut out = base.clone();
    for (name, rec) in out.cells.iter_mut() {
        let r = match rows.get(name) {
            Some(&r) => r,
            None => rec.num_rows,
        };
        let ri = TechFactors::row_index(r)?;
        let base_ri = TechFactors::row_index(rec.num_rows)?;
        // Row multipliers are relative to the record's own row count.
        let kd = fd * f.rho_d[ri] / f.rho_d[base_ri];
        let kp = fp * f.rho_p[ri] / f.rho_p[base_ri];
        let ka = f.rho_a[ri] / f.rho_a[base_ri];
        rec.delay *= kd;
        if let Some(m) = &mut rec.arcs {
            for d in m.iter_mut().flatten().flatten() {
                *d *= kd;
            }
        }
        rec.power *= kp;
        rec.area *= ka;
        rec.num_rows = r;
    }
    Ok(out)
}

/// Weighted, normalized PPA of a recharacterized library.
///
/// Each cell type's delay and power are divided by the base value and
/// weighted by its contribution; the two sums are combined with the
/// direction weights.
pub fn ppa_calculation(
    cells: &CellLibrary,
    contrib: &CellContribution,
    dir: &DirectionWeights,
    base: &CellLibrary,
) -> Result<f64> {
    let (delay, power) = weighted_terms(cells, contrib, base)?;
    Ok(dir.w_delay * delay + dir.w_power * power)
}

/// `(Delay(C), Power(C))` terms before the direction weighting.
pub fn weighted_terms(cells: &CellLibrary, contrib: &CellContribution, base: &CellLibrary) -> Result<(f64, f64)> {
    let mut delay = 0.0;
    let mut power = 0.0;
    for (name, w) in &contrib.weights {
        if w.delay == 0.0 && w.power == 0.0 {
            continue;
        }
        let now = cells.get(name)?;
        let b = base.get(name)?;
        if w.delay != 0.0 {
            if b.delay <= 0.0 {
                return Err(Error::InvalidNormalization(format!("base delay of '{name}' is zero")));
            }
            delay += w.delay * now.delay / b.delay;
        }
        if w.power != 0.0 {
            if b.power <= 0.0 {
                return Err(Error::InvalidNormalization(format!("base power of '{name}' is zero")));
            }
            power += w.power * now.power / b.power;
        }
    }
    Ok((delay, power))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factors_are_one_at_defaults() {
        let f = TechFactors::default();
        let t = TechParams::default();
        assert_eq!(f.delay_factor(&t), 1.0);
        assert_eq!(f.power_factor(&t), 1.0);
    }

    #[test]
    fn cpp_rows() {
        let mut t = TechParams::default();
        assert!(check_cpp(&t, 54.0));
        t.lg_nm = 17.0;
        t.lext_nm = 6;
        t.lct_nm = 25.0;
        assert!(check_cpp(&t, 54.0));
        t.lct_nm = 26.0;
        assert!(!check_cpp(&t, 54.0));
    }

    #[test]
    fn cpp_violation_is_constraint_error() {
        let t = TechParams { lct_nm: 25.0, ..TechParams::default() };
        let lib = CellLibrary::default();
        assert!(matches!(cell_simulate(&t, &RowsAssignment::new(), &lib), Err(Error::Constraint(_))));
    }
}
