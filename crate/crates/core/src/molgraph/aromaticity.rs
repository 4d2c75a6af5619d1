//! Hückel aromaticity perception for rings written in Kekulé form, so that
//! `C1=CC=CC=C1` and `c1ccccc1` describe the same graph.
//!
//! Rings already written aromatic are left alone. A ring (or a pair of fused
//! rings) becomes aromatic when every member can donate pi electrons and the
//! total is 4n+2.

use super::{BondOrder, Molecule};
use crate::elements::Element;

/// Pi electrons `atom` donates to a ring, or `None` if it cannot take part.
fn pi_electrons(m: &Molecule, atom: usize) -> Option<u8> {
    let a = m.atom(atom);
    let el = a.element;
    let connections = m.degree(atom) + a.hydrogens as usize;
    let mut ring_double = false;
    let mut exo_double_hetero = false;
    let mut other_multiple = false;
    for &(nb, b) in m.neighbors(atom) {
        match m.bond(b).order {
            BondOrder::Double if m.is_ring_bond(b) => ring_double = true,
            BondOrder::Double => {
                let ne = m.atom(nb).element;
                if matches!(ne, Element::O | Element::N | Element::S) {
                    exo_double_hetero = true
                } else {
                    other_multiple = true
                }
            }
            BondOrder::Triple => other_multiple = true,
            _ => {}
        }
    }
    if other_multiple {
        return None;
    }

    if a.aromatic {
        return Some(match (el.atomic_number(), a.formal_charge) {
            (6, 0) if exo_double_hetero => 0,
            (6, -1) => 2,
            (6, 1) => 0,
            (6, _) => 1,
            (7 | 15 | 33, 0) if connections == 3 => 2,
            (7 | 15 | 33, -1) => 2,
            (7 | 15 | 33, _) => 1,
            (8 | 16 | 34 | 52, 0) => 2,
            (8 | 16 | 34 | 52, _) => 1,
            (5, 0) => 0,
            _ => return None,
        });
    }

    match (el.atomic_number(), a.formal_charge) {
        (6, 0) if ring_double => Some(1),
        (6, 0) if exo_double_hetero => Some(0),
        (6, -1) if !ring_double && connections == 3 => Some(2),
        (6, 1) if !ring_double && connections == 3 => Some(0),
        (7 | 15 | 33, 0 | 1) if ring_double => Some(1),
        (7 | 15 | 33, 0) if connections == 3 => Some(2),
        (7 | 15 | 33, -1) if connections == 2 => Some(2),
        (8 | 16 | 34 | 52, 1) if ring_double => Some(1),
        (8 | 16 | 34 | 52, 0) if connections == 2 && !ring_double && !exo_double_hetero => Some(2),
        _ => None,
    }
}

fn huckel(total: u32) -> bool {
    total >= 2 && (total - 2).is_multiple_of(4)
}

/// Returns `m` with Kekulé-form aromatic rings marked aromatic.
pub(crate) fn perceive(m: Molecule) -> Molecule {
    let rings = m.sssr().to_vec();
    if rings.is_empty() {
        return m;
    }
    let electrons: Vec<Option<u8>> = (0..m.atom_count()).map(|a| pi_electrons(&m, a)).collect();
    let candidate = |ring: &[usize]| ring.iter().all(|&a| electrons[a].is_some());
    let already = |ring: &[usize]| ring.iter().all(|&a| m.atom(a).aromatic);
    let sum = |atoms: &mut dyn Iterator<Item = usize>| -> u32 { atoms.map(|a| electrons[a].unwrap_or(0) as u32).sum() };

    let mut aromatic_ring = vec![false; rings.len()];
    for (i, ring) in rings.iter().enumerate() {
        if already(ring) {
            continue;
        }
        if candidate(ring) && huckel(sum(&mut ring.iter().copied())) {
            aromatic_ring[i] = true;
        }
    }
    // Fused pairs (azulene-type systems).
    for i in 0..rings.len() {
        for j in i + 1..rings.len() {
            if aromatic_ring[i] || aromatic_ring[j] || already(&rings[i]) || already(&rings[j]) {
                continue;
            }
            if !candidate(&rings[i]) || !candidate(&rings[j]) {
                continue;
            }
            let shared = rings[i].iter().filter(|a| rings[j].contains(a)).count();
            if shared < 2 {
                continue;
            }
            let mut union: Vec<usize> = rings[i].iter().chain(&rings[j]).copied().collect();
            union.sort_unstable();
            union.dedup();
            if huckel(sum(&mut union.into_iter())) {
                aromatic_ring[i] = true;
                aromatic_ring[j] = true;
            }
        }
    }
    if !aromatic_ring.iter().any(|&x| x) {
        return m;
    }

    let source = m.source_text().to_string();
    let ring_bonds: Vec<Vec<usize>> = rings
        .iter()
        .map(|r| {
            (0..r.len())
                .filter_map(|k| m.bond_between(r[k], r[(k + 1) % r.len()]))
                .collect()
        })
        .collect();
    let (mut atoms, mut bonds) = m.into_parts();
    for (i, ring) in rings.iter().enumerate() {
        if !aromatic_ring[i] {
            continue;
        }
        for &a in ring {
            atoms[a].aromatic = true;
        }
        for &b in &ring_bonds[i] {
            bonds[b].order = BondOrder::Aromatic;
        }
    }
    Molecule::from_parts(atoms, bonds, source).expect("perception keeps the graph valid")
}

#[cfg(test)]
mod tests {
    use crate::molgraph::{parse_smiles, BondOrder};

    fn aromatic_count(s: &str) -> usize {
        parse_smiles(s).unwrap().atoms().iter().filter(|a| a.aromatic).count()
    }

    #[test]
    fn kekule_rings() {
        assert_eq!(aromatic_count("C1=CC=CC=C1"), 6);
        assert_eq!(aromatic_count("C1=CC=C2C=CC=CC2=C1"), 10);
        assert_eq!(aromatic_count("C1=CNC=C1"), 5);
        assert_eq!(aromatic_count("C1=COC=C1"), 5);
        assert_eq!(aromatic_count("O=C1C=CC=CN1"), 6);
        assert_eq!(aromatic_count("C1=CC2=CC=CC=CC2=C1"), 10);
    }

    #[test]
    fn non_aromatic_rings() {
        assert_eq!(aromatic_count("C1=CCC=C1"), 0);
        assert_eq!(aromatic_count("O=C1C=CC(=O)C=C1"), 0);
        assert_eq!(aromatic_count("C1CCCCC1"), 0);
        assert_eq!(aromatic_count("C1=CC=CC=CC=C1"), 0);
    }

    #[test]
    fn exocyclic_carbonyl_stays_double() {
        let m = parse_smiles("O=C1C=CC=CN1").unwrap();
        assert_eq!(m.bond(0).order, BondOrder::Double);
        assert_eq!(m.atom(6).hydrogens, 1);
    }
}
