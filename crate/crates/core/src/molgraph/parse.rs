//! SMILES reader.
//!
//! Supports the organic subset, bracket atoms (isotope, chirality, hydrogen
//! count, charge, atom class), branches, ring closures including `%nn`, and
//! `/` `\` bond markers. Chirality and bond direction are kept as
//! annotations only. Dummy atoms must be written `[n*]` with `n` in 1..=16.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{aromaticity, implicit_hydrogens, Atom, Bond, BondOrder, BondStereo, GraphError, Molecule};
use crate::elements::Element;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("SMILES syntax error at byte {offset}: {kind}")]
pub struct SmilesError {
    pub offset: usize,
    pub kind: SmilesErrorKind,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SmilesErrorKind {
    #[error("empty input")]
    Empty,
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("unknown element {0:?}")]
    UnknownElement(String),
    #[error("malformed bracket atom")]
    BadBracketAtom,
    #[error("unterminated bracket atom")]
    UnterminatedBracket,
    #[error("unmatched ring closure {0}")]
    UnmatchedRingClosure(u32),
    #[error("ring closure {0} bonds an atom to itself or duplicates an existing bond")]
    BadRingClosure(u32),
    #[error("conflicting bond orders on ring closure {0}")]
    ConflictingRingBond(u32),
    #[error("unbalanced parenthesis")]
    UnbalancedParen,
    #[error("bond or branch with no preceding atom")]
    DanglingBond,
    #[error("quadruple bonds are not supported")]
    UnsupportedBond,
    #[error("dummy atoms need a link label in 1..=16, written [n*]")]
    BadDummyLabel,
    #[error("element {0} cannot be aromatic")]
    BadAromatic(String),
    #[error("invalid graph: {0}")]
    Graph(#[from] GraphError),
}

#[derive(Clone, Copy)]
struct BondSpec {
    order: Option<BondOrder>,
    stereo: Option<BondStereo>,
}

impl BondSpec {
    const NONE: BondSpec = BondSpec {
        order: None,
        stereo: None,
    };

    fn is_set(&self) -> bool {
        self.order.is_some() || self.stereo.is_some()
    }
}

struct RawBond {
    bond: Bond,
    implicit: bool,
}

struct Parser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    bracket: Vec<bool>,
    bonds: Vec<RawBond>,
}

/// Parses a SMILES string into a [`Molecule`].
///
/// Valence problems are not syntax errors; use [`super::validate`].
pub fn parse_smiles(text: &str) -> Result<Molecule, SmilesError> {
    if text.is_empty() {
        return Err(SmilesError {
            offset: 0,
            kind: SmilesErrorKind::Empty,
        });
    }
    let mut p = Parser {
        text,
        bytes: text.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        bracket: Vec::new(),
        bonds: Vec::new(),
    };
    p.run()?;
    p.finish()
}

impl<'a> Parser<'a> {
    fn err<T>(&self, offset: usize, kind: SmilesErrorKind) -> Result<T, SmilesError> {
        Err(SmilesError { offset, kind })
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn run(&mut self) -> Result<(), SmilesError> {
        let mut prev: Option<usize> = None;
        let mut pending = BondSpec::NONE;
        let mut pending_at = 0;
        let mut branches: Vec<(usize, usize)> = Vec::new();
        // ring number -> (atom, bond spec, offset)
        let mut rings: BTreeMap<u32, (usize, BondSpec, usize)> = BTreeMap::new();

        while let Some(c) = self.peek() {
            let start = self.pos;
            match c {
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' | b'$' => {
                    if prev.is_none() || pending.is_set() {
                        return self.err(start, SmilesErrorKind::DanglingBond);
                    }
                    pending = match c {
                        b'-' => BondSpec {
                            order: Some(BondOrder::Single),
                            stereo: None,
                        },
                        b'=' => BondSpec {
                            order: Some(BondOrder::Double),
                            stereo: None,
                        },
                        b'#' => BondSpec {
                            order: Some(BondOrder::Triple),
                            stereo: None,
                        },
                        b':' => BondSpec {
                            order: Some(BondOrder::Aromatic),
                            stereo: None,
                        },
                        b'/' => BondSpec {
                            order: Some(BondOrder::Single),
                            stereo: Some(BondStereo::Up),
                        },
                        b'\\' => BondSpec {
                            order: Some(BondOrder::Single),
                            stereo: Some(BondStereo::Down),
                        },
                        _ => return self.err(start, SmilesErrorKind::UnsupportedBond),
                    };
                    pending_at = start;
                    self.pos += 1;
                }
                b'(' => {
                    let Some(p) = prev else {
                        return self.err(start, SmilesErrorKind::DanglingBond);
                    };
                    if pending.is_set() {
                        return self.err(pending_at, SmilesErrorKind::DanglingBond);
                    }
                    branches.push((p, start));
                    self.pos += 1;
                }
                b')' => {
                    if pending.is_set() {
                        return self.err(pending_at, SmilesErrorKind::DanglingBond);
                    }
                    let Some((p, _)) = branches.pop() else {
                        return self.err(start, SmilesErrorKind::UnbalancedParen);
                    };
                    prev = Some(p);
                    self.pos += 1;
                }
                b'.' => {
                    if pending.is_set() {
                        return self.err(pending_at, SmilesErrorKind::DanglingBond);
                    }
                    if !branches.is_empty() {
                        return self.err(start, SmilesErrorKind::UnbalancedParen);
                    }
                    prev = None;
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => {
                    let Some(atom) = prev else {
                        return self.err(start, SmilesErrorKind::DanglingBond);
                    };
                    let num = self.ring_number()?;
                    if let Some((open_atom, open_spec, _)) = rings.remove(&num) {
                        let spec = match (open_spec.order, pending.order) {
                            (Some(a), Some(b)) if a != b => {
                                return self.err(start, SmilesErrorKind::ConflictingRingBond(num))
                            }
                            (Some(_), _) => open_spec,
                            _ => pending,
                        };
                        if open_atom == atom
                            || self.bonds.iter().any(|rb| {
                                (rb.bond.begin == open_atom && rb.bond.end == atom)
                                    || (rb.bond.begin == atom && rb.bond.end == open_atom)
                            })
                        {
                            return self.err(start, SmilesErrorKind::BadRingClosure(num));
                        }
                        self.add_bond(open_atom, atom, spec);
                    } else {
                        rings.insert(num, (atom, pending, start));
                    }
                    pending = BondSpec::NONE;
                }
                _ => {
                    let atom = self.atom()?;
                    if let Some(p) = prev {
                        self.add_bond(p, atom, pending);
                    } else if pending.is_set() {
                        return self.err(pending_at, SmilesErrorKind::DanglingBond);
                    }
                    pending = BondSpec::NONE;
                    prev = Some(atom);
                }
            }
        }
        if pending.is_set() {
            return self.err(pending_at, SmilesErrorKind::DanglingBond);
        }
        if let Some(&(_, at)) = branches.first() {
            return self.err(at, SmilesErrorKind::UnbalancedParen);
        }
        if let Some((&num, &(_, _, at))) = rings.iter().min_by_key(|(_, v)| v.2) {
            return self.err(at, SmilesErrorKind::UnmatchedRingClosure(num));
        }
        Ok(())
    }

    fn ring_number(&mut self) -> Result<u32, SmilesError> {
        let start = self.pos;
        if self.peek() == Some(b'%') {
            let digits = self.bytes.get(self.pos + 1..self.pos + 3);
            match digits {
                Some(d) if d.iter().all(u8::is_ascii_digit) => {
                    self.pos += 3;
                    Ok(((d[0] - b'0') * 10 + (d[1] - b'0')) as u32)
                }
                _ => self.err(start, SmilesErrorKind::UnexpectedChar('%')),
            }
        } else {
            let d = self.bytes[self.pos] - b'0';
            self.pos += 1;
            Ok(d as u32)
        }
    }

    fn add_bond(&mut self, a: usize, b: usize, spec: BondSpec) {
        let implicit = spec.order.is_none();
        let order = spec
            .order
            .unwrap_or(if self.atoms[a].aromatic && self.atoms[b].aromatic {
                BondOrder::Aromatic
            } else {
                BondOrder::Single
            });
        self.bonds.push(RawBond {
            bond: Bond {
                begin: a,
                end: b,
                order,
                stereo: spec.stereo,
            },
            implicit,
        });
    }

    fn push_atom(&mut self, atom: Atom, bracket: bool) -> usize {
        self.atoms.push(atom);
        self.bracket.push(bracket);
        self.atoms.len() - 1
    }

    fn atom(&mut self) -> Result<usize, SmilesError> {
        let start = self.pos;
        let c = self.bytes[start];
        if c == b'[' {
            return self.bracket_atom();
        }
        if c == b'*' {
            return self.err(start, SmilesErrorKind::BadDummyLabel);
        }
        let two = self.text.get(start..start + 2);
        let (symbol, aromatic, len) = match (c, two) {
            (b'C', Some("Cl")) => ("Cl", false, 2),
            (b'B', Some("Br")) => ("Br", false, 2),
            (b'B' | b'C' | b'N' | b'O' | b'P' | b'S' | b'F' | b'I', _) => (&self.text[start..start + 1], false, 1),
            (b'b', _) => ("B", true, 1),
            (b'c', _) => ("C", true, 1),
            (b'n', _) => ("N", true, 1),
            (b'o', _) => ("O", true, 1),
            (b'p', _) => ("P", true, 1),
            (b's', _) => ("S", true, 1),
            _ => {
                let ch = self.text[start..].chars().next().unwrap_or('?');
                return self.err(start, SmilesErrorKind::UnexpectedChar(ch));
            }
        };
        self.pos += len;
        let element = Element::from_symbol(symbol).expect("organic subset");
        let mut atom = Atom::new(element);
        atom.aromatic = aromatic;
        Ok(self.push_atom(atom, false))
    }

    fn number(&mut self) -> Option<u32> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        (self.pos > start)
            .then(|| self.text[start..self.pos].parse().ok())
            .flatten()
    }

    fn bracket_atom(&mut self) -> Result<usize, SmilesError> {
        let open = self.pos;
        let Some(close) = self.text[open..].find(']').map(|i| open + i) else {
            return self.err(open, SmilesErrorKind::UnterminatedBracket);
        };
        self.pos += 1;
        let isotope = self.number();

        let sym_start = self.pos;
        let rest = &self.text[sym_start..close];
        let (element, aromatic, sym_len) = if rest.starts_with('*') {
            (Element::DUMMY, false, 1)
        } else if let Some((el, len)) = ["se", "as", "te"]
            .iter()
            .find(|s| rest.starts_with(*s))
            .map(|s| (Element::from_symbol(&capitalize(s)).unwrap(), s.len()))
        {
            (el, true, len)
        } else {
            let mut chars = rest.chars();
            match chars.next() {
                Some(c) if c.is_ascii_uppercase() => {
                    let two: String = rest.chars().take(2).collect();
                    match Element::from_symbol(&two) {
                        Some(el) if two.len() == 2 && two.as_bytes()[1].is_ascii_lowercase() => (el, false, 2),
                        _ => match Element::from_symbol(&c.to_string()) {
                            Some(el) => (el, false, 1),
                            None => return self.err(sym_start, SmilesErrorKind::UnknownElement(two)),
                        },
                    }
                }
                Some(c) if c.is_ascii_lowercase() => {
                    let el = Element::from_symbol(&c.to_ascii_uppercase().to_string())
                        .filter(|el| el.can_be_aromatic())
                        .ok_or(SmilesError {
                            offset: sym_start,
                            kind: SmilesErrorKind::BadAromatic(c.to_string()),
                        })?;
                    (el, true, 1)
                }
                _ => return self.err(sym_start, SmilesErrorKind::BadBracketAtom),
            }
        };
        self.pos += sym_len;

        let chirality = if self.peek() == Some(b'@') {
            let s = self.pos;
            while self.peek() == Some(b'@') {
                self.pos += 1;
            }
            let tail = &self.text[self.pos..close];
            if ["TH", "AL", "SP", "TB", "OH"].iter().any(|c| tail.starts_with(c)) {
                self.pos += 2;
                while self.pos < close && self.bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
            Some(self.text[s..self.pos].to_string())
        } else {
            None
        };

        let mut hydrogens = 0u8;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            hydrogens = match self.number() {
                Some(h) if h <= 9 => h as u8,
                Some(_) => return self.err(self.pos, SmilesErrorKind::BadBracketAtom),
                None => 1,
            };
        }

        let mut charge: i32 = 0;
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            let unit = if sign == b'+' { 1 } else { -1 };
            self.pos += 1;
            if let Some(n) = self.number() {
                charge = unit * n as i32;
            } else {
                charge = unit;
                while self.peek() == Some(sign) {
                    self.pos += 1;
                    charge += unit;
                }
            }
            if charge.abs() > 15 {
                return self.err(open, SmilesErrorKind::BadBracketAtom);
            }
        }

        let mut atom_class = None;
        if self.peek() == Some(b':') {
            self.pos += 1;
            match self.number() {
                Some(n) => atom_class = Some(n),
                None => return self.err(self.pos, SmilesErrorKind::BadBracketAtom),
            }
        }

        if self.pos != close {
            return self.err(self.pos, SmilesErrorKind::BadBracketAtom);
        }
        self.pos = close + 1;

        let mut atom = Atom::new(element);
        atom.aromatic = aromatic;
        atom.formal_charge = charge as i8;
        atom.chirality = chirality;
        atom.atom_class = atom_class;
        if element.is_dummy() {
            match isotope {
                Some(l) if (1..=super::MAX_LINK_LABEL as u32).contains(&l) => atom.link_label = Some(l as u8),
                _ => return self.err(open, SmilesErrorKind::BadDummyLabel),
            }
        } else {
            atom.hydrogens = hydrogens;
            atom.isotope = match isotope {
                Some(i) if i > u16::MAX as u32 => return self.err(open, SmilesErrorKind::BadBracketAtom),
                i => i.map(|i| i as u16),
            };
        }
        Ok(self.push_atom(atom, true))
    }

    fn finish(self) -> Result<Molecule, SmilesError> {
        let Parser {
            text,
            mut atoms,
            bracket,
            bonds,
            ..
        } = self;
        let implicit_flags: Vec<bool> = bonds.iter().map(|rb| rb.implicit).collect();
        let mut bonds: Vec<Bond> = bonds.into_iter().map(|rb| rb.bond).collect();

        // Implicit bonds between aromatic atoms outside rings are single
        // (biphenyl written without '-').
        let probe = Molecule::from_parts(atoms.clone(), bonds.clone(), text).map_err(|e| SmilesError {
            offset: 0,
            kind: e.into(),
        })?;
        for (i, b) in bonds.iter_mut().enumerate() {
            if implicit_flags[i] && b.order == BondOrder::Aromatic && !probe.is_ring_bond(i) {
                b.order = BondOrder::Single;
            }
        }

        let mut valence = vec![0u8; atoms.len()];
        for b in &bonds {
            valence[b.begin] += b.order.valence();
            valence[b.end] += b.order.valence();
        }
        for (i, atom) in atoms.iter_mut().enumerate() {
            if !bracket[i] {
                atom.hydrogens = implicit_hydrogens(atom.element, atom.aromatic, valence[i]);
            }
        }

        let mol = Molecule::from_parts(atoms, bonds, text).map_err(|e| SmilesError {
            offset: 0,
            kind: e.into(),
        })?;
        Ok(aromaticity::perceive(mol))
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_ascii_uppercase().to_string() + c.as_str(),
        None => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn morpholine_propanol() {
        let m = parse_smiles("OCCCN1CCOCC1").unwrap();
        assert_eq!(m.atom_count(), 10);
        assert_eq!(m.bond_count(), 10);
        assert_eq!(m.sssr().len(), 1);
        let ring = &m.sssr()[0];
        assert_eq!(ring.len(), 6);
        let elements: Vec<&str> = ring.iter().map(|&a| m.atom(a).element.symbol()).collect();
        assert!(elements.contains(&"N") && elements.contains(&"O"));
    }

    #[test]
    fn single_atom() {
        let m = parse_smiles("C").unwrap();
        assert_eq!(m.atom_count(), 1);
        assert_eq!(m.bond_count(), 0);
        assert_eq!(m.atom(0).hydrogens, 4);
    }

    #[test]
    fn unmatched_ring_closure() {
        let e = parse_smiles("C1CC").unwrap_err();
        assert_eq!(e.kind, SmilesErrorKind::UnmatchedRingClosure(1));
        assert_eq!(e.offset, 1);
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        assert_eq!(parse_smiles("CC[Xx]").unwrap_err().offset, 3);
        assert_eq!(
            parse_smiles("CC[C").unwrap_err().kind,
            SmilesErrorKind::UnterminatedBracket
        );
        assert_eq!(parse_smiles("C(C").unwrap_err().kind, SmilesErrorKind::UnbalancedParen);
        assert_eq!(parse_smiles("C)").unwrap_err().offset, 1);
        assert_eq!(parse_smiles("=C").unwrap_err().kind, SmilesErrorKind::DanglingBond);
        assert_eq!(parse_smiles("C=").unwrap_err().offset, 1);
        assert_eq!(
            parse_smiles("C11").unwrap_err().kind,
            SmilesErrorKind::BadRingClosure(1)
        );
        assert_eq!(parse_smiles("C1CC=1C").unwrap().bond_count(), 4);
        assert_eq!(
            parse_smiles("C=1CC#1").unwrap_err().kind,
            SmilesErrorKind::ConflictingRingBond(1)
        );
        assert_eq!(parse_smiles("*C").unwrap_err().kind, SmilesErrorKind::BadDummyLabel);
        assert_eq!(parse_smiles("[17*]C").unwrap_err().kind, SmilesErrorKind::BadDummyLabel);
        assert_eq!(parse_smiles("not-smiles").unwrap_err().offset, 2);
        assert_eq!(parse_smiles("").unwrap_err().kind, SmilesErrorKind::Empty);
    }

    #[test]
    fn bracket_atoms() {
        let m = parse_smiles("[13CH3:7][C@@H](N)[O-]").unwrap();
        let a = m.atom(0);
        assert_eq!(a.isotope, Some(13));
        assert_eq!(a.hydrogens, 3);
        assert_eq!(a.atom_class, Some(7));
        assert_eq!(m.atom(1).chirality.as_deref(), Some("@@"));
        assert_eq!(m.atom(1).hydrogens, 1);
        assert_eq!(m.atom(3).formal_charge, -1);
        let m = parse_smiles("[NH4+].[Cl-]").unwrap();
        assert_eq!(m.atom(0).hydrogens, 4);
        assert_eq!(m.components().len(), 2);
        let m = parse_smiles("[Fe+++]").unwrap();
        assert_eq!(m.atom(0).formal_charge, 3);
        let m = parse_smiles("[se]1cccc1").unwrap();
        assert!(m.atom(0).aromatic);
    }

    #[test]
    fn dummy_atoms() {
        let m = parse_smiles("[3*]O[3*]").unwrap();
        assert_eq!(m.atom(0).link_label, Some(3));
        assert!(m.atom(0).is_dummy());
        assert_eq!(m.atom(0).hydrogens, 0);
        assert_eq!(m.atom(1).hydrogens, 0);
    }

    #[test]
    fn percent_ring_closures() {
        let m = parse_smiles("C%12CCCCC%12").unwrap();
        assert_eq!(m.sssr().len(), 1);
    }

    #[test]
    fn stereo_bond_markers_are_kept() {
        let m = parse_smiles("F/C=C/F").unwrap();
        assert_eq!(m.bond(0).stereo, Some(BondStereo::Up));
        assert_eq!(m.bond(0).order, BondOrder::Single);
    }

    #[test]
    fn biphenyl_link_is_single() {
        let m = parse_smiles("c1ccccc1c1ccccc1").unwrap();
        let link = m.bond_between(5, 6).unwrap();
        assert_eq!(m.bond(link).order, BondOrder::Single);
    }
}
