//! Periodic-table data: symbols, standard atomic weights and the valence
//! model used for implicit hydrogens and validity checks.
//!
//! Weights are the IUPAC 2021 abridged standard atomic weights. Elements
//! without a standard weight carry the mass number of their longest-lived
//! isotope.

use std::fmt;

/// An element identified by atomic number. Atomic number 0 is the dummy
/// atom `*` used to mark BRICS cleavage sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Element(u8);

struct ElementData {
    symbol: &'static str,
    weight: f64,
}

const fn e(symbol: &'static str, weight: f64) -> ElementData {
    ElementData { symbol, weight }
}

// Index == atomic number.
static TABLE: [ElementData; 87] = [
    e("*", 0.0),
    e("H", 1.008),
    e("He", 4.0026),
    e("Li", 6.94),
    e("Be", 9.0122),
    e("B", 10.81),
    e("C", 12.011),
    e("N", 14.007),
    e("O", 15.999),
    e("F", 18.998),
    e("Ne", 20.180),
    e("Na", 22.990),
    e("Mg", 24.305),
    e("Al", 26.982),
    e("Si", 28.085),
    e("P", 30.974),
    e("S", 32.06),
    e("Cl", 35.45),
    e("Ar", 39.95),
    e("K", 39.098),
    e("Ca", 40.078),
    e("Sc", 44.956),
    e("Ti", 47.867),
    e("V", 50.942),
    e("Cr", 51.996),
    e("Mn", 54.938),
    e("Fe", 55.845),
    e("Co", 58.933),
    e("Ni", 58.693),
    e("Cu", 63.546),
    e("Zn", 65.38),
    e("Ga", 69.723),
    e("Ge", 72.630),
    e("As", 74.922),
    e("Se", 78.971),
    e("Br", 79.904),
    e("Kr", 83.798),
    e("Rb", 85.468),
    e("Sr", 87.62),
    e("Y", 88.906),
    e("Zr", 91.222),
    e("Nb", 92.906),
    e("Mo", 95.95),
    e("Tc", 97.0),
    e("Ru", 101.07),
    e("Rh", 102.91),
    e("Pd", 106.42),
    e("Ag", 107.87),
    e("Cd", 112.41),
    e("In", 114.82),
    e("Sn", 118.71),
    e("Sb", 121.76),
    e("Te", 127.60),
    e("I", 126.90),
    e("Xe", 131.29),
    e("Cs", 132.91),
    e("Ba", 137.33),
    e("La", 138.91),
    e("Ce", 140.12),
    e("Pr", 140.91),
    e("Nd", 144.24),
    e("Pm", 145.0),
    e("Sm", 150.36),
    e("Eu", 151.96),
    e("Gd", 157.25),
    e("Tb", 158.93),
    e("Dy", 162.50),
    e("Ho", 164.93),
    e("Er", 167.26),
    e("Tm", 168.93),
    e("Yb", 173.05),
    e("Lu", 174.97),
    e("Hf", 178.49),
    e("Ta", 180.95),
    e("W", 183.84),
    e("Re", 186.21),
    e("Os", 190.23),
    e("Ir", 192.22),
    e("Pt", 195.08),
    e("Au", 196.97),
    e("Hg", 200.59),
    e("Tl", 204.38),
    e("Pb", 207.2),
    e("Bi", 208.98),
    e("Po", 209.0),
    e("At", 210.0),
    e("Rn", 222.0),
];

impl Element {
    pub const DUMMY: Element = Element(0);
    pub const H: Element = Element(1);
    pub const B: Element = Element(5);
    pub const C: Element = Element(6);
    pub const N: Element = Element(7);
    pub const O: Element = Element(8);
    pub const F: Element = Element(9);
    pub const P: Element = Element(15);
    pub const S: Element = Element(16);
    pub const CL: Element = Element(17);
    pub const BR: Element = Element(35);
    pub const I: Element = Element(53);

    pub fn from_atomic_number(z: u8) -> Option<Element> {
        ((z as usize) < TABLE.len()).then_some(Element(z))
    }

    /// Looks up a capitalized element symbol ("C", "Cl", "Na"). `*` maps to
    /// the dummy element.
    pub fn from_symbol(symbol: &str) -> Option<Element> {
        TABLE.iter().position(|d| d.symbol == symbol).map(|z| Element(z as u8))
    }

    pub fn atomic_number(self) -> u8 {
        self.0
    }

    pub fn symbol(self) -> &'static str {
        TABLE[self.0 as usize].symbol
    }

    pub fn is_dummy(self) -> bool {
        self.0 == 0
    }

    /// Standard atomic weight in g/mol; zero for the dummy atom.
    pub fn weight(self) -> f64 {
        TABLE[self.0 as usize].weight
    }

    /// Allowed valences of the neutral element, smallest first. Empty for
    /// elements the valence model does not cover (metals, noble gases).
    pub fn valences(self) -> &'static [u8] {
        match self.0 {
            1 => &[1],
            5 => &[3],
            6 => &[4],
            7 => &[3],
            8 => &[2],
            9 | 17 | 35 => &[1],
            14 => &[4],
            15 => &[3, 5],
            16 => &[2, 4, 6],
            33 => &[3, 5],
            34 => &[2, 4, 6],
            52 => &[2, 4, 6],
            53 => &[1, 3, 5],
            _ => &[],
        }
    }

    /// Maximum valence for an atom of this element carrying `charge`, using
    /// the isoelectronic element for charged main-group atoms (N+ behaves
    /// like C, O- like F). `None` means the atom is not valence-checked.
    pub fn max_valence(self, charge: i8) -> Option<u8> {
        if charge == 0 {
            return self.valences().last().copied();
        }
        let shifted = self.0 as i16 - charge as i16;
        if shifted < 1 || !self.is_main_group() {
            return None;
        }
        let iso = Element::from_atomic_number(shifted as u8)?;
        if !iso.is_main_group() {
            return None;
        }
        iso.valences().last().copied()
    }

    fn is_main_group(self) -> bool {
        matches!(self.0, 1 | 5..=9 | 13..=17 | 31..=35 | 49..=53)
    }

    /// Member of the SMILES organic subset (may be written without brackets).
    pub fn is_organic_subset(self) -> bool {
        matches!(self.0, 5 | 6 | 7 | 8 | 9 | 15 | 16 | 17 | 35 | 53)
    }

    /// Elements that may be written aromatic (lowercase).
    pub fn can_be_aromatic(self) -> bool {
        matches!(self.0, 5 | 6 | 7 | 8 | 15 | 16 | 33 | 34 | 52)
    }

    pub fn aromatic_symbol(self) -> Option<&'static str> {
        Some(match self.0 {
            5 => "b",
            6 => "c",
            7 => "n",
            8 => "o",
            15 => "p",
            16 => "s",
            33 => "as",
            34 => "se",
            52 => "te",
            _ => return None,
        })
    }

    pub fn all() -> impl Iterator<Item = Element> {
        (1..TABLE.len() as u8).map(Element)
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbols_round_trip() {
        for el in Element::all() {
            assert_eq!(Element::from_symbol(el.symbol()), Some(el));
        }
        assert_eq!(Element::from_symbol("Cl"), Some(Element::CL));
        assert_eq!(Element::from_symbol("Xx"), None);
    }

    #[test]
    fn charged_valences() {
        assert_eq!(Element::N.max_valence(0), Some(3));
        assert_eq!(Element::N.max_valence(1), Some(4));
        assert_eq!(Element::O.max_valence(-1), Some(1));
        assert_eq!(Element::O.max_valence(1), Some(3));
        assert_eq!(Element::C.max_valence(-1), Some(3));
        assert_eq!(Element::from_symbol("Na").unwrap().max_valence(1), None);
    }
}
