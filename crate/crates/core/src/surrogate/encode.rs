// SPDX-License-Identifier: Apache-2.0

//! Numeric feature encodings of configurations.

use crate::error::{invalid, Result};
use crate::netlist::{CpaType, CtType};
use crate::sysloop::space::{
    CongEffort, Effort, OptEffort, ParameterConfig, TimingEffort, CLOCK_PERIOD_NS, PLACE_UTILIZATION,
};
use crate::tech::{TechParams, HFIN, LCT, LEXT, LG, PHIG_N, PHIG_P, TFIN};

/// Length of [`encode_config`] output.
pub const CONFIG_FEATURES: usize = 25;

/// Feature names of [`encode_config`], in order.
pub fn config_feature_names() -> Vec<String> {
    let mut v = Vec::with_capacity(CONFIG_FEATURES);
    let onehot = |v: &mut Vec<String>, field: &str, levels: Vec<String>| {
        v.extend(levels.into_iter().map(|l| format!("{field}={l}")));
    };
    onehot(&mut v, "ct_type", CtType::ALL.iter().map(|c| c.to_string()).collect());
    onehot(&mut v, "cpa_type", CpaType::ALL.iter().map(|c| c.to_string()).collect());
    v.push("clock_period_ns".into());
    onehot(&mut v, "syn_generic_effort", Effort::ALL.iter().map(|c| c.to_string()).collect());
    onehot(&mut v, "syn_map_effort", Effort::ALL.iter().map(|c| c.to_string()).collect());
    onehot(&mut v, "syn_opt_effort", OptEffort::ALL.iter().map(|c| c.to_string()).collect());
    v.push("place_utilization".into());
    onehot(&mut v, "place_glb_cong_effort", CongEffort::ALL.iter().map(|c| c.to_string()).collect());
    onehot(&mut v, "place_glb_timing_effort", TimingEffort::ALL.iter().map(|c| c.to_string()).collect());
    onehot(&mut v, "place_glb_clk_power_driven", vec!["true".into(), "false".into()]);
    v
}

fn scale(field: &str, v: f64, (lo, hi): (f64, f64)) -> Result<f64> {
    if !(v.is_finite() && v >= lo - 1e-12 && v <= hi + 1e-12) {
        return Err(invalid(format!("{field}={v} outside [{lo}, {hi}]")));
    }
    Ok(((v - lo) / (hi - lo)).clamp(0.0, 1.0))
}

fn push_onehot(out: &mut Vec<f64>, index: usize, len: usize) {
    out.extend((0..len).map(|i| if i == index { 1.0 } else { 0.0 }));
}

/// Ranges scaled to [0, 1], categories one-hot.
pub fn encode_config(p: &ParameterConfig) -> Result<Vec<f64>> {
    let mut x = Vec::with_capacity(CONFIG_FEATURES);
    let ct = CtType::ALL.iter().position(|&c| c == p.arch.ct_type).expect("listed");
    let cpa = CpaType::ALL.iter().position(|&c| c == p.arch.cpa_type).expect("listed");
    push_onehot(&mut x, ct, CtType::ALL.len());
    push_onehot(&mut x, cpa, CpaType::ALL.len());
    x.push(scale("clock_period_ns", p.ls.clock_period_ns, CLOCK_PERIOD_NS)?);
    push_onehot(&mut x, p.ls.syn_generic_effort.index(), Effort::ALL.len());
    push_onehot(&mut x, p.ls.syn_map_effort.index(), Effort::ALL.len());
    push_onehot(&mut x, p.ls.syn_opt_effort.index(), OptEffort::ALL.len());
    x.push(scale("place_utilization", p.pd.place_utilization, PLACE_UTILIZATION)?);
    push_onehot(&mut x, p.pd.place_glb_cong_effort.index(), CongEffort::ALL.len());
    push_onehot(&mut x, p.pd.place_glb_timing_effort.index(), TimingEffort::ALL.len());
    push_onehot(&mut x, usize::from(!p.pd.place_glb_clk_power_driven), 2);
    debug_assert_eq!(x.len(), CONFIG_FEATURES);
    Ok(x)
}

/// Technology parameters scaled to [0, 1]; `lext` maps 4, 5, 6 to 0, 0.5, 1.
pub fn encode_tech(t: &TechParams) -> Result<Vec<f64>> {
    let lext_range = (LEXT[0] as f64, LEXT[LEXT.len() - 1] as f64);
    Ok(vec![
        scale("phig_n", t.phig_n, PHIG_N)?,
        scale("phig_p", t.phig_p, PHIG_P)?,
        scale("hfin_nm", t.hfin_nm, HFIN)?,
        scale("tfin_nm", t.tfin_nm, TFIN)?,
        scale("lg_nm", t.lg_nm, LG)?,
        scale("lext_nm", t.lext_nm as f64, lext_range)?,
        scale("lct_nm", t.lct_nm, LCT)?,
    ])
}
