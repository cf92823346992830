// SPDX-License-Identifier: Apache-2.0

//! Logic functions and pin interfaces of the basic standard cells.
//!
//! Cell type names follow the ASAP7 convention `<FUNCTION>x<drive>` (for
//! example `NAND2x1` or `BUFx4`). The function, and with it the pin
//! interface, is recovered from the name. Types that are not basic cells are
//! fused cells whose pins are named `I<n>` (inputs) and `O<n>` (outputs).

/// Direction of a cell pin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PinDirection {
    Input,
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CellFunction {
    And2,
    And3,
    Nand2,
    Nand3,
    Or2,
    Or3,
    Nor2,
    Xor2,
    Xnor2,
    Inv,
    Buf,
    Maj,
    Aoi21,
    Ao21,
    Ao22,
    Oa21,
    Oa22,
    Dff,
}

const PINS_1: &[&str] = &["A"];
const PINS_2: &[&str] = &["A", "B"];
const PINS_3: &[&str] = &["A", "B", "C"];
const PINS_21: &[&str] = &["A1", "A2", "B"];
const PINS_22: &[&str] = &["A1", "A2", "B1", "B2"];
const PINS_DFF: &[&str] = &["D"];

impl CellFunction {
    /// Recovers the function from a cell type name such as `AND2x2`.
    pub fn from_type(cell_type: &str) -> Option<Self> {
        let base = strip_drive(cell_type)?;
        Some(match base {
            "AND2" => Self::And2,
            "AND3" => Self::And3,
            "NAND2" => Self::Nand2,
            "NAND3" => Self::Nand3,
            "OR2" => Self::Or2,
            "OR3" => Self::Or3,
            "NOR2" => Self::Nor2,
            "XOR2" => Self::Xor2,
            "XNOR2" => Self::Xnor2,
            "INV" => Self::Inv,
            "BUF" => Self::Buf,
            "MAJ" => Self::Maj,
            "AOI21" => Self::Aoi21,
            "AO21" => Self::Ao21,
            "AO22" => Self::Ao22,
            "OA21" => Self::Oa21,
            "OA22" => Self::Oa22,
            "DFF" => Self::Dff,
            _ => return None,
        })
    }

    pub fn input_pins(self) -> &'static [&'static str] {
        match self {
            Self::Inv | Self::Buf => PINS_1,
            Self::And2 | Self::Nand2 | Self::Or2 | Self::Nor2 | Self::Xor2 | Self::Xnor2 => PINS_2,
            Self::And3 | Self::Nand3 | Self::Or3 | Self::Maj => PINS_3,
            Self::Aoi21 | Self::Ao21 | Self::Oa21 => PINS_21,
            Self::Ao22 | Self::Oa22 => PINS_22,
            Self::Dff => PINS_DFF,
        }
    }

    pub fn output_pin(self) -> &'static str {
        if self == Self::Dff {
            "Q"
        } else {
            "Y"
        }
    }

    pub fn is_sequential(self) -> bool {
        self == Self::Dff
    }

    /// Symmetry class of an input pin: pins in the same class can be
    /// permuted without changing the function.
    pub fn pin_class(self, pin: &str) -> u8 {
        match self {
            Self::Aoi21 | Self::Ao21 | Self::Oa21 | Self::Ao22 | Self::Oa22 => {
                if pin.starts_with('A') {
                    0
                } else {
                    1
                }
            }
            _ => 0,
        }
    }

    /// Evaluates the function; `ins` follows [`Self::input_pins`] order.
    pub fn eval(self, ins: &[bool]) -> bool {
        match self {
            Self::And2 | Self::And3 => ins.iter().all(|&v| v),
            Self::Nand2 | Self::Nand3 => !ins.iter().all(|&v| v),
            Self::Or2 | Self::Or3 => ins.iter().any(|&v| v),
            Self::Nor2 => !(ins[0] || ins[1]),
            Self::Xor2 => ins[0] ^ ins[1],
            Self::Xnor2 => !(ins[0] ^ ins[1]),
            Self::Inv => !ins[0],
            Self::Buf | Self::Dff => ins[0],
            Self::Maj => (ins[0] & ins[1]) | (ins[0] & ins[2]) | (ins[1] & ins[2]),
            Self::Aoi21 => !((ins[0] & ins[1]) | ins[2]),
            Self::Ao21 => (ins[0] & ins[1]) | ins[2],
            Self::Ao22 => (ins[0] & ins[1]) | (ins[2] & ins[3]),
            Self::Oa21 => (ins[0] | ins[1]) & ins[2],
            Self::Oa22 => (ins[0] | ins[1]) & (ins[2] | ins[3]),
        }
    }
}

fn strip_drive(name: &str) -> Option<&str> {
    let pos = name.rfind('x')?;
    let suffix = &name[pos + 1..];
    let digits = suffix.strip_prefix('p').unwrap_or(suffix);
    if pos == 0 || digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some(&name[..pos])
}

/// Direction of `pin` on a cell of type `cell_type`, or `None` when the pin
/// does not exist on that type.
pub fn pin_direction(cell_type: &str, pin: &str) -> Option<PinDirection> {
    if let Some(func) = CellFunction::from_type(cell_type) {
        if func.output_pin() == pin {
            return Some(PinDirection::Output);
        }
        return func.input_pins().contains(&pin).then_some(PinDirection::Input);
    }
    let index_ok = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if let Some(rest) = pin.strip_prefix('I') {
        if index_ok(rest) {
            return Some(PinDirection::Input);
        }
    }
    if let Some(rest) = pin.strip_prefix('O') {
        if index_ok(rest) {
            return Some(PinDirection::Output);
        }
    }
    None
}

/// Position of `pin` in the canonical pin order of `cell_type`.
pub fn pin_order(cell_type: &str, pin: &str) -> usize {
    match CellFunction::from_type(cell_type) {
        Some(func) => func.input_pins().iter().position(|p| *p == pin).unwrap_or(usize::MAX),
        None => pin.get(1..).and_then(|s| s.parse::<usize>().ok()).unwrap_or(usize::MAX),
    }
}

/// Whether `cell_type` is a register.
pub fn is_sequential(cell_type: &str) -> bool {
    CellFunction::from_type(cell_type).is_some_and(CellFunction::is_sequential)
}

/// Symmetry class of `pin` on `cell_type`. Fused-cell pins are all distinct.
pub fn pin_class(cell_type: &str, pin: &str) -> u8 {
    match CellFunction::from_type(cell_type) {
        Some(func) => func.pin_class(pin),
        None => pin.get(1..).and_then(|s| s.parse::<u8>().ok()).unwrap_or(u8::MAX),
    }
}
