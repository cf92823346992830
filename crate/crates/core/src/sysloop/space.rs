// SPDX-License-Identifier: Apache-2.0

//! System-level design space: architecture, synthesis and placement knobs.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::netlist::{CpaType, CtType};

macro_rules! level_enum {
    ($(#[$m:meta])* $name:ident, $field:literal { $($var:ident => $s:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $s)] $var),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$var),+];

            pub fn index(self) -> usize {
                Self::ALL.iter().position(|&v| v == self).expect("listed")
            }

            pub fn as_str(self) -> &'static str {
                match self { $($name::$var => $s),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                let l = s.to_ascii_lowercase();
                Self::ALL.iter().copied().find(|v| v.as_str() == l).ok_or_else(|| {
                    let names: Vec<&str> = Self::ALL.iter().map(|v| v.as_str()).collect();
                    invalid(format!("{}: unsupported value '{s}' (expected one of {})", $field, names.join(", ")))
                })
            }
        }
    };
}

level_enum!(
    /// Generic and mapping synthesis effort.
    Effort, "syn_effort" { Low => "low", Medium => "medium", High => "high" }
);
level_enum!(
    /// Post-mapping optimization effort.
    OptEffort, "syn_opt_effort" { None => "none", Low => "low", Medium => "medium", High => "high" }
);
level_enum!(
    /// Global-placement congestion effort.
    CongEffort, "place_glb_cong_effort" { Auto => "auto", Low => "low", Medium => "medium", High => "high" }
);
level_enum!(
    /// Global-placement timing effort.
    TimingEffort, "place_glb_timing_effort" { Medium => "medium", High => "high" }
);

pub const CLOCK_PERIOD_NS: (f64, f64) = (0.4, 1.0);
pub const PLACE_UTILIZATION: (f64, f64) = (0.5, 0.9);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchParams {
    pub ct_type: CtType,
    pub cpa_type: CpaType,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub clock_period_ns: f64,
    pub syn_generic_effort: Effort,
    pub syn_map_effort: Effort,
    pub syn_opt_effort: OptEffort,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaceParams {
    pub place_utilization: f64,
    pub place_glb_cong_effort: CongEffort,
    pub place_glb_timing_effort: TimingEffort,
    pub place_glb_clk_power_driven: bool,
}

/// One point of the system-level space. Technology parameters are chosen
/// by the technology loop and carried in the cell library.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterConfig {
    pub arch: ArchParams,
    pub ls: SynthParams,
    pub pd: PlaceParams,
}

impl Default for ParameterConfig {
    fn default() -> Self {
        Self {
            arch: ArchParams { ct_type: CtType::Wt, cpa_type: CpaType::Sk },
            ls: SynthParams {
                clock_period_ns: 0.5,
                syn_generic_effort: Effort::Medium,
                syn_map_effort: Effort::High,
                syn_opt_effort: OptEffort::None,
            },
            pd: PlaceParams {
                place_utilization: 0.8,
                place_glb_cong_effort: CongEffort::Auto,
                place_glb_timing_effort: TimingEffort::Medium,
                place_glb_clk_power_driven: true,
            },
        }
    }
}

fn in_range(field: &str, v: f64, (lo, hi): (f64, f64)) -> Result<()> {
    if v.is_finite() && v >= lo && v <= hi {
        Ok(())
    } else {
        Err(invalid(format!("{field}={v} outside [{lo}, {hi}]")))
    }
}

impl ParameterConfig {
    pub fn validate(&self) -> Result<()> {
        in_range("clock_period_ns", self.ls.clock_period_ns, CLOCK_PERIOD_NS)?;
        in_range("place_utilization", self.pd.place_utilization, PLACE_UTILIZATION)
    }
}

/// `n` independent uniform draws from the space.
pub fn random_sample(n: usize, seed: u64) -> Vec<ParameterConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sample_one(&mut rng)).collect()
}

pub(crate) fn sample_one(rng: &mut impl Rng) -> ParameterConfig {
    fn pick<T: Copy>(rng: &mut impl Rng, all: &[T]) -> T {
        all[rng.random_range(0..all.len())]
    }
    ParameterConfig {
        arch: ArchParams { ct_type: pick(rng, &CtType::ALL), cpa_type: pick(rng, &CpaType::ALL) },
        ls: SynthParams {
            clock_period_ns: rng.random_range(CLOCK_PERIOD_NS.0..=CLOCK_PERIOD_NS.1),
            syn_generic_effort: pick(rng, Effort::ALL),
            syn_map_effort: pick(rng, Effort::ALL),
            syn_opt_effort: pick(rng, OptEffort::ALL),
        },
        pd: PlaceParams {
            place_utilization: rng.random_range(PLACE_UTILIZATION.0..=PLACE_UTILIZATION.1),
            place_glb_cong_effort: pick(rng, CongEffort::ALL),
            place_glb_timing_effort: pick(rng, TimingEffort::ALL),
            place_glb_clk_power_driven: rng.random_bool(0.5),
        },
    }
}
