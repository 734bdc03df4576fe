//! SMILES tokenizer and graph construction.

use std::collections::BTreeMap;

use crate::element;
use crate::error::ChemError;
use crate::mol::{Atom, Bond, BondOrder, Chirality, CisTrans, Molecule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BondSym {
    Single,
    Double,
    Triple,
    Aromatic,
    Up,
    Down,
}

impl BondSym {
    /// Explicit order; directional marks between aromatic atoms stay aromatic.
    fn order(self, both_aromatic: bool) -> BondOrder {
        match self {
            BondSym::Up | BondSym::Down if both_aromatic => BondOrder::Aromatic,
            BondSym::Single | BondSym::Up | BondSym::Down => BondOrder::Single,
            BondSym::Double => BondOrder::Double,
            BondSym::Triple => BondOrder::Triple,
            BondSym::Aromatic => BondOrder::Aromatic,
        }
    }

    fn direction(self) -> Option<bool> {
        match self {
            BondSym::Up => Some(true),
            BondSym::Down => Some(false),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Slot {
    Atom(usize),
    Hydrogen,
    Pending(u32),
}

#[derive(Debug)]
pub(crate) struct RawAtom {
    pub element: u8,
    pub charge: i8,
    pub isotope: Option<u16>,
    pub hcount: u8,
    pub aromatic: bool,
    pub chirality: Chirality,
    pub bracket: bool,
    pub refs: Vec<Slot>,
}

#[derive(Debug)]
pub(crate) struct RawBond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    /// `(up, left atom)`: the bond symbol is read with `left` written first.
    pub direction: Option<(bool, usize)>,
}

struct RingOpen {
    atom: usize,
    sym: Option<BondSym>,
    slot: usize,
}

pub(crate) struct Parsed {
    pub atoms: Vec<RawAtom>,
    pub bonds: Vec<RawBond>,
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
    atoms: Vec<RawAtom>,
    bonds: Vec<RawBond>,
    prev: Option<usize>,
    pending: Option<BondSym>,
    branches: Vec<(usize, usize)>,
    rings: BTreeMap<u32, RingOpen>,
}

/// Tokenize and build the raw graph; chemistry checks happen afterwards.
pub(crate) fn parse_raw(text: &str) -> Result<Parsed, ChemError> {
    if text.is_empty() {
        return Err(ChemError::syntax(0, "empty SMILES"));
    }
    let mut p = Parser {
        text: text.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        bonds: Vec::new(),
        prev: None,
        pending: None,
        branches: Vec::new(),
        rings: BTreeMap::new(),
    };
    p.run()?;
    Ok(Parsed {
        atoms: p.atoms,
        bonds: p.bonds,
    })
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<u8> {
        self.text.get(self.pos + offset).copied()
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ChemError> {
        Err(ChemError::syntax(self.pos, msg))
    }

    fn run(&mut self) -> Result<(), ChemError> {
        let mut component_start = true;
        while let Some(c) = self.peek() {
            match c {
                b'B' | b'C' | b'N' | b'O' | b'P' | b'S' | b'F' | b'I' | b'b' | b'c' | b'n'
                | b'o' | b'p' | b's' => {
                    self.organic_atom()?;
                    component_start = false;
                }
                b'[' => {
                    self.bracket_atom()?;
                    component_start = false;
                }
                b'(' => {
                    let Some(prev) = self.prev else {
                        return self.err("branch without a preceding atom");
                    };
                    if self.pending.is_some() {
                        return self.err("bond symbol before branch");
                    }
                    if self.pos > 0 && self.text[self.pos - 1] == b'(' {
                        return self.err("branch opened directly inside a branch");
                    }
                    self.branches.push((prev, self.atoms.len()));
                    self.pos += 1;
                }
                b')' => {
                    let Some((atom, count)) = self.branches.pop() else {
                        return self.err("unmatched ')'");
                    };
                    if self.pending.is_some() {
                        return self.err("dangling bond at end of branch");
                    }
                    if count == self.atoms.len() {
                        return self.err("empty branch");
                    }
                    self.prev = Some(atom);
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => self.ring_closure()?,
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if self.prev.is_none() {
                        return self.err("bond without a preceding atom");
                    }
                    if self.pending.is_some() {
                        return self.err("two consecutive bond symbols");
                    }
                    self.pending = Some(match c {
                        b'-' => BondSym::Single,
                        b'=' => BondSym::Double,
                        b'#' => BondSym::Triple,
                        b':' => BondSym::Aromatic,
                        b'/' => BondSym::Up,
                        _ => BondSym::Down,
                    });
                    self.pos += 1;
                }
                b'$' => return self.err("unsupported feature: quadruple bond"),
                b'*' => return self.err("unsupported feature: wildcard atom"),
                b'.' => {
                    if self.prev.is_none() || component_start {
                        return self.err("empty component");
                    }
                    if self.pending.is_some() {
                        return self.err("bond symbol before '.'");
                    }
                    self.prev = None;
                    component_start = true;
                    self.pos += 1;
                }
                _ => return self.err(format!("unexpected character '{}'", c as char)),
            }
        }
        if self.pending.is_some() {
            return self.err("dangling bond at end of input");
        }
        if !self.branches.is_empty() {
            return self.err("unmatched '('");
        }
        if let Some((id, _)) = self.rings.iter().next() {
            return self.err(format!("unclosed ring closure {id}"));
        }
        if component_start {
            return self.err("empty component");
        }
        if self
            .bonds
            .iter()
            .any(|b| b.order == BondOrder::Triple && self.atoms[b.a].aromatic && self.atoms[b.b].aromatic)
        {
            return self.err("unsupported feature: triple bond between aromatic atoms");
        }
        Ok(())
    }

    fn organic_atom(&mut self) -> Result<(), ChemError> {
        let c = self.text[self.pos];
        let (element, aromatic, len) = match (c, self.peek_at(1)) {
            (b'C', Some(b'l')) => (17, false, 2),
            (b'B', Some(b'r')) => (35, false, 2),
            (b'B', _) => (5, false, 1),
            (b'C', _) => (6, false, 1),
            (b'N', _) => (7, false, 1),
            (b'O', _) => (8, false, 1),
            (b'P', _) => (15, false, 1),
            (b'S', _) => (16, false, 1),
            (b'F', _) => (9, false, 1),
            (b'I', _) => (53, false, 1),
            (b'b', _) => (5, true, 1),
            (b'c', _) => (6, true, 1),
            (b'n', _) => (7, true, 1),
            (b'o', _) => (8, true, 1),
            (b'p', _) => (15, true, 1),
            _ => (16, true, 1),
        };
        self.pos += len;
        self.add_atom(RawAtom {
            element,
            charge: 0,
            isotope: None,
            hcount: 0,
            aromatic,
            chirality: Chirality::None,
            bracket: false,
            refs: Vec::new(),
        });
        Ok(())
    }

    fn read_number(&mut self) -> Option<u32> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if start == self.pos {
            return None;
        }
        std::str::from_utf8(&self.text[start..self.pos])
            .ok()?
            .parse()
            .ok()
    }

    fn bracket_atom(&mut self) -> Result<(), ChemError> {
        self.pos += 1;
        let isotope = match self.read_number() {
            Some(0) | None => None,
            Some(n) if n > u32::from(u16::MAX) => return self.err("isotope out of range"),
            Some(n) => Some(n as u16),
        };
        let (element, aromatic) = self.bracket_symbol()?;
        let mut chirality = Chirality::None;
        if self.peek() == Some(b'@') {
            self.pos += 1;
            chirality = Chirality::CounterClockwise;
            if self.peek() == Some(b'@') {
                self.pos += 1;
                chirality = Chirality::Clockwise;
            } else if let (Some(a), Some(b)) = (self.peek(), self.peek_at(1)) {
                let tag = [a, b];
                if matches!(&tag, b"TH" | b"AL" | b"SP" | b"TB" | b"OH") {
                    return self.err("unsupported feature: extended chirality");
                }
            }
        }
        let mut hcount = 0u8;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            hcount = match self.read_number() {
                None => 1,
                Some(n) if n <= 9 => n as u8,
                Some(_) => return self.err("hydrogen count out of range"),
            };
        }
        let mut charge: i32 = 0;
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            let unit = if sign == b'+' { 1 } else { -1 };
            self.pos += 1;
            if let Some(n) = self.read_number() {
                if n > 15 {
                    return self.err("charge out of range");
                }
                charge = unit * n as i32;
            } else {
                charge = unit;
                while self.peek() == Some(sign) {
                    charge += unit;
                    self.pos += 1;
                }
            }
        }
        match self.peek() {
            Some(b']') => self.pos += 1,
            Some(b':') => return self.err("unsupported feature: atom class"),
            _ => return self.err("malformed bracket atom"),
        }
        self.add_atom(RawAtom {
            element,
            charge: charge as i8,
            isotope,
            hcount,
            aromatic,
            chirality,
            bracket: true,
            refs: Vec::new(),
        });
        Ok(())
    }

    fn bracket_symbol(&mut self) -> Result<(u8, bool), ChemError> {
        let Some(c) = self.peek() else {
            return self.err("unterminated bracket atom");
        };
        if c == b'*' {
            return self.err("unsupported feature: wildcard atom");
        }
        if c.is_ascii_uppercase() {
            if let Some(l) = self.peek_at(1).filter(u8::is_ascii_lowercase) {
                let two = [c, l];
                let sym = std::str::from_utf8(&two).unwrap_or("");
                if let Some(z) = element::atomic_number(sym) {
                    self.pos += 2;
                    return Ok((z, false));
                }
            }
            let one = [c];
            let sym = std::str::from_utf8(&one).unwrap_or("");
            if let Some(z) = element::atomic_number(sym) {
                self.pos += 1;
                return Ok((z, false));
            }
            return self.err("unknown element");
        }
        if c.is_ascii_lowercase() {
            if let Some(l) = self.peek_at(1) {
                let z = match [c, l] {
                    [b's', b'e'] => Some(34),
                    [b'a', b's'] => Some(33),
                    [b't', b'e'] => Some(52),
                    [b's', b'i'] => Some(14),
                    _ => None,
                };
                if let Some(z) = z {
                    self.pos += 2;
                    return Ok((z, true));
                }
            }
            let z = match c {
                b'b' => 5,
                b'c' => 6,
                b'n' => 7,
                b'o' => 8,
                b'p' => 15,
                b's' => 16,
                _ => return self.err("unknown aromatic element"),
            };
            self.pos += 1;
            return Ok((z, true));
        }
        self.err("malformed bracket atom")
    }

    fn add_atom(&mut self, mut atom: RawAtom) {
        let idx = self.atoms.len();
        let prev = self.prev;
        if let Some(prev) = prev {
            atom.refs.push(Slot::Atom(prev));
            self.atoms[prev].refs.push(Slot::Atom(idx));
        }
        if atom.hcount > 0 {
            atom.refs.push(Slot::Hydrogen);
        }
        self.atoms.push(atom);
        if let Some(prev) = prev {
            let sym = self.pending.take();
            self.push_bond(prev, idx, sym, prev);
        }
        self.prev = Some(idx);
    }

    fn push_bond(&mut self, a: usize, b: usize, sym: Option<BondSym>, left: usize) {
        let both_aromatic = self.atoms[a].aromatic && self.atoms[b].aromatic;
        let order = match sym {
            Some(s) => s.order(both_aromatic),
            None if both_aromatic => BondOrder::Aromatic,
            None => BondOrder::Single,
        };
        let direction = sym.and_then(BondSym::direction).map(|up| (up, left));
        self.bonds.push(RawBond {
            a,
            b,
            order,
            direction,
        });
    }

    fn ring_closure(&mut self) -> Result<(), ChemError> {
        let Some(cur) = self.prev else {
            return self.err("ring closure without a preceding atom");
        };
        let id = if self.peek() == Some(b'%') {
            let (Some(a @ b'0'..=b'9'), Some(b @ b'0'..=b'9')) = (self.peek_at(1), self.peek_at(2))
            else {
                return self.err("'%' must be followed by two digits");
            };
            self.pos += 3;
            u32::from(a - b'0') * 10 + u32::from(b - b'0')
        } else {
            let d = self.text[self.pos] - b'0';
            self.pos += 1;
            u32::from(d)
        };
        let sym = self.pending.take();
        if let Some(open) = self.rings.remove(&id) {
            if open.atom == cur {
                return self.err(format!("ring closure {id} bonds an atom to itself"));
            }
            if self
                .bonds
                .iter()
                .any(|b| (b.a == open.atom && b.b == cur) || (b.a == cur && b.b == open.atom))
            {
                return self.err(format!("ring closure {id} duplicates an existing bond"));
            }
            self.atoms[open.atom].refs[open.slot] = Slot::Atom(cur);
            self.atoms[cur].refs.push(Slot::Atom(open.atom));
            // The opening symbol wins when both digits carry one.
            let order_sym = open.sym.or(sym);
            let both_aromatic = self.atoms[open.atom].aromatic && self.atoms[cur].aromatic;
            let order = match order_sym {
                Some(s) => s.order(both_aromatic),
                None if both_aromatic => BondOrder::Aromatic,
                None => BondOrder::Single,
            };
            let direction = open
                .sym
                .and_then(BondSym::direction)
                .map(|up| (up, open.atom))
                .or_else(|| sym.and_then(BondSym::direction).map(|up| (up, cur)));
            self.bonds.push(RawBond {
                a: open.atom,
                b: cur,
                order,
                direction,
            });
        } else {
            let slot = self.atoms[cur].refs.len();
            self.atoms[cur].refs.push(Slot::Pending(id));
            self.rings.insert(
                id,
                RingOpen {
                    atom: cur,
                    sym,
                    slot,
                },
            );
        }
        Ok(())
    }
}

/// Convert the raw parse into atom/bond records (no chemistry yet).
pub(crate) fn into_graph(
    parsed: Parsed,
    text: &str,
) -> (Molecule, Vec<Option<(bool, usize)>>) {
    let atoms = parsed
        .atoms
        .into_iter()
        .enumerate()
        .map(|(index, a)| {
            let mut refs: Vec<Option<usize>> = a
                .refs
                .iter()
                .map(|s| match s {
                    Slot::Atom(i) => Some(*i),
                    _ => None,
                })
                .collect();
            if a.chirality != Chirality::None && a.hcount == 0 && refs.len() == 3 {
                // A lone pair is taken as the last neighbour.
                refs.push(None);
            }
            Atom {
                index,
                element: a.element,
                formal_charge: a.charge,
                isotope: a.isotope,
                explicit_h: a.hcount,
                implicit_h: 0,
                aromatic: a.aromatic,
                chirality: a.chirality,
                bracket: a.bracket,
                radicals: 0,
                stereo_refs: refs,
            }
        })
        .collect();
    let mut directions = Vec::with_capacity(parsed.bonds.len());
    let bonds = parsed
        .bonds
        .into_iter()
        .map(|b| {
            directions.push(b.direction);
            Bond {
                begin: b.a,
                end: b.b,
                order: b.order,
                cis_trans: CisTrans::None,
                ring_member: false,
                kekule: b.order,
                stereo_refs: None,
            }
        })
        .collect();
    (Molecule::new(atoms, bonds, text.to_string()), directions)
}
