// SPDX-License-Identifier: Apache-2.0

//! Analyses that turn system-level results into technology-level guidance.

pub mod canonical;
pub mod contribution;
pub mod direction;
pub mod fusion;
pub mod mining;

pub use canonical::{canonical_form, canonical_repr, Canonical};
pub use contribution::{power_contribution, timing_contribution, CellContribution, TypeWeight, DEFAULT_LAMBDA};
pub use direction::{knee_index, min_delay_index, ppa_direction, ppa_direction_with, DirectionWeights, FlipRule};
pub use fusion::{apply_fusion, find_matches, fused_cell_def, fused_library, fused_name};
pub use mining::{
    enumerate_subcircuits, mine_subcircuits, occurrences, select_fusion_candidates, MiningBounds, Occurrence,
    SubcircuitPattern,
};
