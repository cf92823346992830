// SPDX-License-Identifier: Apache-2.0

//! JSON netlist documents.
//!
//! ```json
//! {"format": "orthrus-netlist", "version": 1,
//!  "nets":  [{"id": 0, "name": "a", "kind": "input"}, ...],
//!  "cells": [{"id": "u0", "type": "INVx1", "pins": {"A": 0, "Y": 1}}, ...]}
//! ```

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::cell;
use super::graph::{NetGraph, NetGraphBuilder, NetId, NetKind};
use crate::error::{Error, Result};

pub const NETLIST_FORMAT: &str = "orthrus-netlist";
pub const NETLIST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetDoc {
    pub id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub kind: NetKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellDoc {
    pub id: String,
    #[serde(rename = "type")]
    pub cell_type: String,
    pub pins: BTreeMap<String, u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetlistDoc {
    pub format: String,
    pub version: u32,
    pub nets: Vec<NetDoc>,
    pub cells: Vec<CellDoc>,
}

impl From<&NetGraph> for NetlistDoc {
    fn from(g: &NetGraph) -> Self {
        let nets = g
            .nets()
            .iter()
            .enumerate()
            .map(|(i, n)| NetDoc { id: i as u32, name: Some(n.name.clone()), kind: n.kind })
            .collect();
        let cells = g
            .cells()
            .iter()
            .map(|c| CellDoc {
                id: c.name.clone(),
                cell_type: c.cell_type.clone(),
                pins: c.inputs.iter().chain(&c.outputs).map(|p| (p.name.clone(), p.net.0)).collect(),
            })
            .collect();
        NetlistDoc { format: NETLIST_FORMAT.into(), version: NETLIST_VERSION, nets, cells }
    }
}

impl TryFrom<NetlistDoc> for NetGraph {
    type Error = Error;

    fn try_from(doc: NetlistDoc) -> Result<Self> {
        if doc.format != NETLIST_FORMAT {
            return Err(Error::Parse(format!("unexpected format '{}'", doc.format)));
        }
        if doc.version != NETLIST_VERSION {
            return Err(Error::Parse(format!("unsupported netlist version {}", doc.version)));
        }
        let mut b = NetGraphBuilder::new();
        let mut ids: HashMap<u32, NetId> = HashMap::with_capacity(doc.nets.len());
        for (i, n) in doc.nets.iter().enumerate() {
            let name = n.name.clone().unwrap_or_else(|| format!("n{}", n.id));
            let id = b.add_net(name, n.kind);
            if ids.insert(n.id, id).is_some() {
                return Err(Error::Parse(format!("nets[{i}]: duplicate net id {}", n.id)));
            }
        }
        for (ci, c) in doc.cells.iter().enumerate() {
            let mut pins = Vec::with_capacity(c.pins.len());
            for (pin, raw) in &c.pins {
                let net = ids.get(raw).ok_or_else(|| {
                    Error::Parse(format!("cells[{ci}] '{}': pin '{pin}' references unknown net {raw}", c.id))
                })?;
                if cell::pin_direction(&c.cell_type, pin).is_none() {
                    return Err(Error::Parse(format!(
                        "cells[{ci}] '{}': pin '{pin}' does not exist on type '{}'",
                        c.id, c.cell_type
                    )));
                }
                pins.push((pin.as_str(), *net));
            }
            b.add_cell(c.id.clone(), c.cell_type.clone(), &pins)?;
        }
        b.build()
    }
}

pub fn write_netlist(g: &NetGraph) -> Result<String> {
    Ok(serde_json::to_string_pretty(&NetlistDoc::from(g))?)
}

pub fn parse_netlist(text: &str) -> Result<NetGraph> {
    let doc: NetlistDoc = serde_json::from_str(text).map_err(|e| Error::Parse(format!("netlist document: {e}")))?;
    NetGraph::try_from(doc)
}

impl Serialize for NetGraph {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        NetlistDoc::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for NetGraph {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = NetlistDoc::deserialize(d)?;
        NetGraph::try_from(doc).map_err(serde::de::Error::custom)
    }
}
