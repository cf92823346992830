// SPDX-License-Identifier: Apache-2.0

//! Gate-level netlists: construction, simulation, partitioning and timing.

pub mod cell;
pub mod generator;
pub mod graph;
pub mod json;
pub mod library;
pub mod partition;
pub mod sim;
pub mod sta;

pub use cell::{CellFunction, PinDirection};
pub use generator::{acc_width, generate_mac_array, CpaType, CtType};
pub use graph::{Cell, CellId, Net, NetGraph, NetGraphBuilder, NetId, NetKind, Pin, PinRef};
pub use json::{parse_netlist, write_netlist, NetlistDoc};
pub use library::{CellLibrary, CellRecord, FusedCellDef, DFF};
pub use partition::partition_combinational;
pub use sim::{simulate, Simulator};
pub use sta::{static_timing, StaResult, TimingPath};
