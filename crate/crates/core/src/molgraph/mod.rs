//! Molecular graphs parsed from SMILES.
//!
//! A [`Molecule`] is immutable once built. Parsing, canonical serialization,
//! validity checking and mass calculation live in the submodules and are
//! re-exported here.

mod aromaticity;
mod canon;
mod parse;
pub mod rings;
mod validate;

use std::sync::OnceLock;

use thiserror::Error;

use crate::elements::Element;

pub use canon::{canonical_ranks, canonical_smiles, canonical_smiles_ordered, random_smiles};
pub use parse::{parse_smiles, SmilesError, SmilesErrorKind};
pub use validate::{validate, ValidityFailure, ValidityReport};

/// Highest BRICS link label carried by a dummy atom.
pub const MAX_LINK_LABEL: u8 = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub element: Element,
    pub aromatic: bool,
    pub formal_charge: i8,
    /// Hydrogens attached to this atom, whether written in brackets or
    /// implied by the valence model.
    pub hydrogens: u8,
    pub isotope: Option<u16>,
    /// BRICS link label, set only on dummy atoms.
    pub link_label: Option<u8>,
    /// Tetrahedral/extended chirality marker as written (`@`, `@@`, `@TH1`).
    /// Preserved but not interpreted.
    pub chirality: Option<String>,
    pub atom_class: Option<u32>,
}

impl Atom {
    pub fn new(element: Element) -> Self {
        Atom {
            element,
            aromatic: false,
            formal_charge: 0,
            hydrogens: 0,
            isotope: None,
            link_label: None,
            chirality: None,
            atom_class: None,
        }
    }

    /// A dummy atom `[n*]` carrying a link label.
    pub fn dummy(label: u8) -> Self {
        Atom {
            link_label: Some(label),
            ..Atom::new(Element::DUMMY)
        }
    }

    pub fn is_dummy(&self) -> bool {
        self.element.is_dummy()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to an atom's valence; aromatic bonds count as one, the
    /// extra pi electron is accounted for separately.
    pub fn valence(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }
}

/// Directional bond marker (`/` or `\`), kept as an annotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BondStereo {
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bond {
    pub begin: usize,
    pub end: usize,
    pub order: BondOrder,
    pub stereo: Option<BondStereo>,
}

impl Bond {
    pub fn new(begin: usize, end: usize, order: BondOrder) -> Self {
        Bond {
            begin,
            end,
            order,
            stereo: None,
        }
    }

    /// The endpoint opposite `atom`.
    pub fn other(&self, atom: usize) -> usize {
        if self.begin == atom {
            self.end
        } else {
            self.begin
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("bond {bond} references atom {atom} but the molecule has {count} atoms")]
    AtomOutOfRange { bond: usize, atom: usize, count: usize },
    #[error("bond {0} connects an atom to itself")]
    SelfLoop(usize),
    #[error("atoms {0} and {1} are joined by more than one bond")]
    ParallelBond(usize, usize),
    #[error("dummy atom {atom} has link label {label:?}; labels must be in 1..=16")]
    BadLinkLabel { atom: usize, label: Option<u8> },
    #[error("non-dummy atom {0} carries a link label")]
    StrayLinkLabel(usize),
}

/// An attributed molecular graph.
#[derive(Debug, Clone)]
pub struct Molecule {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    source_text: String,
    adjacency: Vec<Vec<(usize, usize)>>,
    ring_bond: Vec<bool>,
    ring_atom: Vec<bool>,
    sssr: OnceLock<Vec<Vec<usize>>>,
}

impl Molecule {
    /// Builds a molecule from raw parts, checking the structural invariants
    /// and computing adjacency and ring membership.
    pub fn from_parts(
        atoms: Vec<Atom>,
        bonds: Vec<Bond>,
        source_text: impl Into<String>,
    ) -> Result<Molecule, GraphError> {
        let n = atoms.len();
        let mut adjacency = vec![Vec::new(); n];
        for (i, b) in bonds.iter().enumerate() {
            for atom in [b.begin, b.end] {
                if atom >= n {
                    return Err(GraphError::AtomOutOfRange {
                        bond: i,
                        atom,
                        count: n,
                    });
                }
            }
            if b.begin == b.end {
                return Err(GraphError::SelfLoop(i));
            }
            if adjacency[b.begin].iter().any(|&(nb, _)| nb == b.end) {
                return Err(GraphError::ParallelBond(b.begin, b.end));
            }
            adjacency[b.begin].push((b.end, i));
            adjacency[b.end].push((b.begin, i));
        }
        for (i, a) in atoms.iter().enumerate() {
            if a.is_dummy() {
                match a.link_label {
                    Some(l) if (1..=MAX_LINK_LABEL).contains(&l) => {}
                    label => return Err(GraphError::BadLinkLabel { atom: i, label }),
                }
            } else if a.link_label.is_some() {
                return Err(GraphError::StrayLinkLabel(i));
            }
        }
        let ring_bond = rings::ring_bonds(n, &bonds, &adjacency);
        let mut ring_atom = vec![false; n];
        for (b, &in_ring) in bonds.iter().zip(&ring_bond) {
            if in_ring {
                ring_atom[b.begin] = true;
                ring_atom[b.end] = true;
            }
        }
        Ok(Molecule {
            atoms,
            bonds,
            source_text: source_text.into(),
            adjacency,
            ring_bond,
            ring_atom,
            sssr: OnceLock::new(),
        })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn bond(&self, i: usize) -> &Bond {
        &self.bonds[i]
    }

    pub fn source_text(&self) -> &str {
        &self.source_text
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    /// `(neighbor, bond index)` pairs for `atom`.
    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency[a].iter().find(|&&(nb, _)| nb == b).map(|&(_, bi)| bi)
    }

    pub fn is_ring_bond(&self, bond: usize) -> bool {
        self.ring_bond[bond]
    }

    pub fn is_ring_atom(&self, atom: usize) -> bool {
        self.ring_atom[atom]
    }

    /// Smallest set of smallest rings, each as an ordered atom cycle.
    pub fn sssr(&self) -> &[Vec<usize>] {
        self.sssr.get_or_init(|| rings::sssr(self))
    }

    /// Size of the smallest SSSR ring containing `atom`, if any.
    pub fn smallest_ring_size(&self, atom: usize) -> Option<usize> {
        self.sssr().iter().filter(|r| r.contains(&atom)).map(Vec::len).min()
    }

    /// Sum of bond valence contributions (aromatic bonds count one).
    pub fn bond_valence(&self, atom: usize) -> u8 {
        self.adjacency[atom]
            .iter()
            .map(|&(_, b)| self.bonds[b].order.valence())
            .sum()
    }

    pub fn has_double_bond(&self, atom: usize) -> bool {
        self.adjacency[atom]
            .iter()
            .any(|&(_, b)| self.bonds[b].order == BondOrder::Double)
    }

    pub fn has_dummy_atoms(&self) -> bool {
        self.atoms.iter().any(Atom::is_dummy)
    }

    /// Connected components as sorted atom index lists, ordered by their
    /// lowest atom index.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.atoms.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for &(v, _) in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                        stack.push(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// Molecular weight in g/mol, including attached hydrogens. Dummy atoms
    /// weigh nothing; isotope labels do not change the standard weight.
    pub fn molecular_weight(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.element.weight() + a.hydrogens as f64 * Element::H.weight())
            .sum()
    }

    /// Number of atoms that are not dummies.
    pub fn heavy_atom_count(&self) -> usize {
        self.atoms.iter().filter(|a| !a.is_dummy()).count()
    }

    /// Consumes the molecule, returning its parts for editing.
    /// Same graph with a different recorded source text.
    pub fn with_source_text(mut self, text: String) -> Self {
        self.source_text = text;
        self
    }

    pub fn into_parts(self) -> (Vec<Atom>, Vec<Bond>) {
        (self.atoms, self.bonds)
    }
}

/// Molecular weight of `m` in g/mol.
pub fn molecular_weight(m: &Molecule) -> f64 {
    m.molecular_weight()
}

/// Implicit hydrogen count the SMILES valence model assigns to a bare
/// organic-subset atom with the given bonds.
pub fn implicit_hydrogens(element: Element, aromatic: bool, bond_valence: u8) -> u8 {
    let valences = element.valences();
    if aromatic {
        let Some(&v) = valences.first() else { return 0 };
        let need = bond_valence + 1;
        return v.saturating_sub(need);
    }
    valences
        .iter()
        .find(|&&v| v >= bond_valence)
        .map(|&v| v - bond_valence)
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_by_hand() {
        let water = parse_smiles("O").unwrap();
        assert!((water.molecular_weight() - 18.02).abs() < 0.01);
        let benzene = parse_smiles("c1ccccc1").unwrap();
        assert!((benzene.molecular_weight() - 78.11).abs() < 0.01);
        // C2H5O: 2 * 12.011 + 5 * 1.008 + 15.999
        let tagged = parse_smiles("[1*]CCO").unwrap();
        assert!((tagged.molecular_weight() - 45.061).abs() < 1e-9);
    }

    #[test]
    fn implicit_h_model() {
        assert_eq!(implicit_hydrogens(Element::C, false, 1), 3);
        assert_eq!(implicit_hydrogens(Element::C, true, 2), 1);
        assert_eq!(implicit_hydrogens(Element::N, true, 2), 0);
        assert_eq!(implicit_hydrogens(Element::S, true, 2), 0);
        assert_eq!(implicit_hydrogens(Element::S, false, 3), 1);
        assert_eq!(implicit_hydrogens(Element::C, false, 5), 0);
    }

    #[test]
    fn rejects_parallel_bonds() {
        let atoms = vec![Atom::new(Element::C), Atom::new(Element::C)];
        let bonds = vec![Bond::new(0, 1, BondOrder::Single), Bond::new(1, 0, BondOrder::Single)];
        assert_eq!(
            Molecule::from_parts(atoms, bonds, "").unwrap_err(),
            GraphError::ParallelBond(1, 0)
        );
    }
}
