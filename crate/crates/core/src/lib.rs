// SPDX-License-Identifier: Apache-2.0

//! Dual-loop system/technology co-optimization for MAC-array designs.

pub mod backend;
pub mod campaign;
pub mod error;
pub mod interloop;
pub mod netlist;
pub mod pareto;
pub mod surrogate;
pub mod sysloop;
pub mod tech;
pub mod techloop;

pub use campaign::{CampaignConfig, CampaignReport, Mode};
pub use error::{Error, Result};
pub use interloop::{CellContribution, DirectionWeights};
pub use netlist::{CellLibrary, NetGraph};
pub use pareto::{ObjectiveVector, ParetoArchive};
pub use sysloop::ParameterConfig;
pub use tech::{RowsAssignment, TechParams};
