//! Validity checks: valence table, aromatic ring consistency and a Kekulé
//! assignment for every aromatic system. Dummy atoms are exempt from
//! valence checks.

use serde::Serialize;

use super::{BondOrder, Molecule};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidityFailure {
    pub atom: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidityReport {
    pub valid: bool,
    pub failures: Vec<ValidityFailure>,
}

impl ValidityReport {
    fn from_failures(failures: Vec<ValidityFailure>) -> Self {
        ValidityReport {
            valid: failures.is_empty(),
            failures,
        }
    }
}

/// Whether an aromatic atom needs a pi bond from the Kekulé assignment.
fn needs_pi_bond(m: &Molecule, i: usize) -> bool {
    let a = m.atom(i);
    if !a.aromatic || m.has_double_bond(i) {
        return false;
    }
    let connections = m.degree(i) + a.hydrogens as usize;
    match (a.element.atomic_number(), a.formal_charge) {
        (6, 0) => true,
        (6, _) => false,
        (5, 0) => false,
        (7 | 15 | 33, 0) => connections == 2,
        (7 | 15 | 33, 1) => connections == 3,
        (8 | 16 | 34 | 52, 1) => connections == 2,
        _ => false,
    }
}

pub fn validate(m: &Molecule) -> ValidityReport {
    let mut failures = Vec::new();
    let mut fail = |atom: usize, reason: String| failures.push(ValidityFailure { atom, reason });

    for (i, a) in m.atoms().iter().enumerate() {
        if a.is_dummy() {
            continue;
        }
        if a.aromatic && !a.element.can_be_aromatic() {
            fail(i, format!("{} cannot be aromatic", a.element));
        }
        if a.aromatic && !m.is_ring_atom(i) {
            fail(i, "aromatic atom outside a ring".into());
        }
        if let Some(max) = a.element.max_valence(a.formal_charge) {
            let pi = needs_pi_bond(m, i) as u8;
            let valence = m.bond_valence(i) + a.hydrogens + pi;
            if valence > max {
                fail(
                    i,
                    format!(
                        "{} valence {} exceeds {} (charge {})",
                        a.element, valence, max, a.formal_charge
                    ),
                );
            }
        }
    }
    for (bi, b) in m.bonds().iter().enumerate() {
        if b.order == BondOrder::Aromatic {
            let ends_aromatic = [b.begin, b.end]
                .iter()
                .all(|&x| m.atom(x).aromatic || m.atom(x).is_dummy());
            if !ends_aromatic {
                fail(b.begin, format!("aromatic bond {bi} joins a non-aromatic atom"));
            } else if !m.is_ring_bond(bi) {
                fail(b.begin, format!("aromatic bond {bi} outside a ring"));
            }
        }
    }
    if let Some(atom) = kekule_failure(m) {
        fail(atom, "aromatic system has no Kekulé structure".into());
    }
    ValidityReport::from_failures(failures)
}

/// Tries to pair every pi-needing aromatic atom with a neighbor over an
/// aromatic bond. Returns an atom that could not be paired, if any.
fn kekule_failure(m: &Molecule) -> Option<usize> {
    let n = m.atom_count();
    let needy: Vec<bool> = (0..n).map(|i| needs_pi_bond(m, i)).collect();
    if !needy.iter().any(|&x| x) {
        return None;
    }
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            if !needy[i] {
                return Vec::new();
            }
            m.neighbors(i)
                .iter()
                .filter(|&&(v, b)| needy[v] && m.bond(b).order == BondOrder::Aromatic)
                .map(|&(v, _)| v)
                .collect()
        })
        .collect();
    let mut mate = vec![usize::MAX; n];
    let mut budget = 200_000usize;
    // Process atoms with fewest options first to cut the search.
    let mut order: Vec<usize> = (0..n).filter(|&i| needy[i]).collect();
    order.sort_by_key(|&i| (adj[i].len(), i));
    if let Some(&lonely) = order.iter().find(|&&i| adj[i].is_empty()) {
        return Some(lonely);
    }
    if match_all(&order, 0, &adj, &mut mate, &mut budget) {
        None
    } else {
        order
            .iter()
            .copied()
            .find(|&i| mate[i] == usize::MAX)
            .or(order.first().copied())
    }
}

fn match_all(order: &[usize], k: usize, adj: &[Vec<usize>], mate: &mut [usize], budget: &mut usize) -> bool {
    let Some(pos) = (k..order.len()).find(|&p| mate[order[p]] == usize::MAX) else {
        return true;
    };
    if *budget == 0 {
        // Give up searching; treat very large systems as consistent.
        return true;
    }
    *budget -= 1;
    let u = order[pos];
    for &v in &adj[u] {
        if mate[v] == usize::MAX {
            mate[u] = v;
            mate[v] = u;
            if match_all(order, pos + 1, adj, mate, budget) {
                return true;
            }
            mate[u] = usize::MAX;
            mate[v] = usize::MAX;
        }
    }
    false
}
