//! Canonical atom ranking and SMILES writing.
//!
//! Ranks come from iterative neighborhood refinement of an atom invariant
//! tuple (Morgan-style), breaking remaining ties at the lowest tied rank by
//! input index and refining again. The writer walks the graph depth-first,
//! always taking the lowest-priority neighbor first. Feeding it a random
//! priority instead of the canonical ranks yields randomized equivalent
//! SMILES.
//!
//! Output is non-isomeric: chirality and bond-direction annotations are not
//! written.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{implicit_hydrogens, BondOrder, Molecule};

type Invariant = (u8, u16, u8, bool, i8, u8, usize, bool, u8);

fn initial_invariant(m: &Molecule, i: usize) -> Invariant {
    let a = m.atom(i);
    (
        a.element.atomic_number(),
        a.isotope.unwrap_or(0),
        a.link_label.unwrap_or(0),
        a.aromatic,
        a.formal_charge,
        a.hydrogens,
        m.degree(i),
        m.is_ring_atom(i),
        m.bond_valence(i),
    )
}

/// Replaces `keys` by dense ranks (0-based, ties share a rank). Returns the
/// number of distinct ranks.
fn dense_ranks<K: Ord + Clone>(keys: &[K]) -> (Vec<usize>, usize) {
    let mut sorted: Vec<K> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    let ranks = keys
        .iter()
        .map(|k| sorted.binary_search(k).expect("key present"))
        .collect();
    (ranks, sorted.len())
}

fn refine(m: &Molecule, mut ranks: Vec<usize>, mut classes: usize) -> (Vec<usize>, usize) {
    loop {
        let keys: Vec<(usize, Vec<(usize, u8)>)> = (0..m.atom_count())
            .map(|i| {
                let mut nbrs: Vec<(usize, u8)> = m
                    .neighbors(i)
                    .iter()
                    .map(|&(v, b)| (ranks[v], m.bond(b).order.code()))
                    .collect();
                nbrs.sort_unstable();
                (ranks[i], nbrs)
            })
            .collect();
        let (next, count) = dense_ranks(&keys);
        if count == classes {
            return (next, count);
        }
        ranks = next;
        classes = count;
    }
}

/// Canonical rank of every atom: a permutation of `0..atom_count`.
pub fn canonical_ranks(m: &Molecule) -> Vec<usize> {
    let n = m.atom_count();
    let inv: Vec<Invariant> = (0..n).map(|i| initial_invariant(m, i)).collect();
    let (ranks, classes) = dense_ranks(&inv);
    let (mut ranks, mut classes) = refine(m, ranks, classes);
    while classes < n {
        // Lowest rank shared by more than one atom.
        let mut counts = vec![0usize; classes];
        for &r in &ranks {
            counts[r] += 1;
        }
        let tied = counts.iter().position(|&c| c > 1).expect("a tied class exists");
        let chosen = ranks.iter().position(|&r| r == tied).expect("member");
        let keys: Vec<usize> = ranks
            .iter()
            .enumerate()
            .map(|(i, &r)| if r == tied && i != chosen { 2 * r + 1 } else { 2 * r })
            .collect();
        let (r, c) = dense_ranks(&keys);
        (ranks, classes) = refine(m, r, c);
    }
    ranks
}

/// Canonical SMILES for `m`: identical for any two inputs describing the
/// same attributed graph.
pub fn canonical_smiles(m: &Molecule) -> String {
    canonical_smiles_ordered(m).0
}

/// Canonical SMILES plus the atom emitted at each position, i.e. the atom
/// order a parser will assign when reading the text back.
pub fn canonical_smiles_ordered(m: &Molecule) -> (String, Vec<usize>) {
    // Low-degree atoms first: strings start at chain ends and keep the
    // longest path out of parentheses more often.
    let n = m.atom_count();
    let priority: Vec<usize> = canonical_ranks(m)
        .into_iter()
        .enumerate()
        .map(|(i, r)| m.degree(i) * n + r)
        .collect();
    write_smiles_ordered(m, &priority)
}

/// A randomly ordered but equivalent SMILES for `m`.
pub fn random_smiles<R: Rng + ?Sized>(m: &Molecule, rng: &mut R) -> String {
    let mut priority: Vec<usize> = (0..m.atom_count()).collect();
    priority.shuffle(rng);
    write_smiles(m, &priority)
}

struct Closure {
    opener: usize,
    closer: usize,
    bond: usize,
}

struct Writer<'a> {
    m: &'a Molecule,
    priority: &'a [usize],
    visited: Vec<bool>,
    dfs_index: Vec<usize>,
    children: Vec<Vec<(usize, usize)>>,
    closures: Vec<Closure>,
    closure_seen: Vec<bool>,
    counter: usize,
}

impl Writer<'_> {
    fn sorted_neighbors(&self, u: usize) -> Vec<(usize, usize)> {
        let mut nbrs = self.m.neighbors(u).to_vec();
        nbrs.sort_by_key(|&(v, _)| self.priority[v]);
        nbrs
    }

    fn dfs(&mut self, root: usize) {
        // (atom, parent bond, neighbor list, cursor)
        self.visit(root);
        let mut stack = vec![(root, usize::MAX, self.sorted_neighbors(root), 0usize)];
        while let Some((u, pb, nbrs, cursor)) = stack.last_mut() {
            let u = *u;
            if *cursor == nbrs.len() {
                stack.pop();
                continue;
            }
            let (v, b) = nbrs[*cursor];
            *cursor += 1;
            if b == *pb {
                continue;
            }
            if self.visited[v] {
                if !self.closure_seen[b] {
                    self.closure_seen[b] = true;
                    self.closures.push(Closure {
                        opener: v,
                        closer: u,
                        bond: b,
                    });
                }
            } else {
                self.closure_seen[b] = true;
                self.children[u].push((v, b));
                self.visit(v);
                let nb = self.sorted_neighbors(v);
                stack.push((v, b, nb, 0));
            }
        }
    }

    fn visit(&mut self, u: usize) {
        self.visited[u] = true;
        self.dfs_index[u] = self.counter;
        self.counter += 1;
    }
}

pub(crate) fn write_smiles(m: &Molecule, priority: &[usize]) -> String {
    write_smiles_ordered(m, priority).0
}

/// SMILES text plus the atoms in the order they appear in it.
pub(crate) fn write_smiles_ordered(m: &Molecule, priority: &[usize]) -> (String, Vec<usize>) {
    let n = m.atom_count();
    let mut order = Vec::with_capacity(n);
    let mut w = Writer {
        m,
        priority,
        visited: vec![false; n],
        dfs_index: vec![0; n],
        children: vec![Vec::new(); n],
        closures: Vec::new(),
        closure_seen: vec![false; m.bond_count()],
        counter: 0,
    };
    let mut roots = Vec::new();
    let mut by_priority: Vec<usize> = (0..n).collect();
    by_priority.sort_by_key(|&i| priority[i]);
    for &start in &by_priority {
        if !w.visited[start] {
            roots.push(start);
            w.dfs(start);
        }
    }

    // Per-atom closure lists: closes (sorted by opener order) then opens.
    let mut closes: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut opens: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (ci, c) in w.closures.iter().enumerate() {
        opens[c.opener].push(ci);
        closes[c.closer].push(ci);
    }
    for list in opens.iter_mut() {
        list.sort_by_key(|&ci| w.dfs_index[w.closures[ci].closer]);
    }
    for list in closes.iter_mut() {
        list.sort_by_key(|&ci| w.dfs_index[w.closures[ci].opener]);
    }

    let mut out = String::new();
    let mut digits: Vec<Option<u32>> = vec![None; w.closures.len()];
    let mut in_use = [false; 100];
    for (k, &root) in roots.iter().enumerate() {
        if k > 0 {
            out.push('.');
        }
        // Iterative pre-order emission: stack of pending text or atoms.
        enum Item {
            Atom(usize),
            Text(&'static str),
            Bond(usize),
        }
        let mut stack = vec![Item::Atom(root)];
        while let Some(item) = stack.pop() {
            match item {
                Item::Text(t) => out.push_str(t),
                Item::Bond(b) => out.push_str(bond_symbol(m, b)),
                Item::Atom(u) => {
                    order.push(u);
                    out.push_str(&atom_symbol(m, u));
                    let mut freed = Vec::new();
                    for &ci in &closes[u] {
                        let d = digits[ci].expect("closure opened before it closes");
                        push_digit(&mut out, d);
                        freed.push(d);
                    }
                    for &ci in &opens[u] {
                        let d = (1..100u32)
                            .find(|&d| !in_use[d as usize] && !freed.contains(&d))
                            .expect("fewer than 100 open ring closures");
                        in_use[d as usize] = true;
                        digits[ci] = Some(d);
                        out.push_str(bond_symbol(m, w.closures[ci].bond));
                        push_digit(&mut out, d);
                    }
                    for d in freed {
                        in_use[d as usize] = false;
                    }
                    let kids = &w.children[u];
                    // Push in reverse so the first child is emitted first.
                    for (idx, &(v, b)) in kids.iter().enumerate().rev() {
                        let last = idx + 1 == kids.len();
                        if !last {
                            stack.push(Item::Text(")"));
                        }
                        stack.push(Item::Atom(v));
                        stack.push(Item::Bond(b));
                        if !last {
                            stack.push(Item::Text("("));
                        }
                    }
                }
            }
        }
    }
    (out, order)
}

fn push_digit(out: &mut String, d: u32) {
    if d < 10 {
        let _ = write!(out, "{d}");
    } else {
        let _ = write!(out, "%{d}");
    }
}

fn bond_symbol(m: &Molecule, b: usize) -> &'static str {
    let bond = m.bond(b);
    let both_aromatic = m.atom(bond.begin).aromatic && m.atom(bond.end).aromatic;
    match bond.order {
        BondOrder::Single if both_aromatic => "-",
        BondOrder::Single => "",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
        BondOrder::Aromatic if both_aromatic => "",
        BondOrder::Aromatic => ":",
    }
}

fn atom_symbol(m: &Molecule, i: usize) -> String {
    let a = m.atom(i);
    if let Some(label) = a.link_label {
        return format!("[{label}*]");
    }
    let el = a.element;
    let symbol = if a.aromatic {
        el.aromatic_symbol().unwrap_or(el.symbol())
    } else {
        el.symbol()
    };
    let organic_aromatic_ok = !a.aromatic || matches!(symbol, "b" | "c" | "n" | "o" | "p" | "s");
    let bare = el.is_organic_subset()
        && organic_aromatic_ok
        && a.formal_charge == 0
        && a.isotope.is_none()
        && a.hydrogens == implicit_hydrogens(el, a.aromatic, m.bond_valence(i));
    if bare {
        return symbol.to_string();
    }
    let mut s = String::from("[");
    if let Some(iso) = a.isotope {
        let _ = write!(s, "{iso}");
    }
    s.push_str(symbol);
    match a.hydrogens {
        0 => {}
        1 => s.push('H'),
        h => {
            let _ = write!(s, "H{h}");
        }
    }
    match a.formal_charge {
        0 => {}
        1 => s.push('+'),
        -1 => s.push('-'),
        c if c > 0 => {
            let _ = write!(s, "+{c}");
        }
        c => {
            let _ = write!(s, "-{}", -c);
        }
    }
    s.push(']');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::parse_smiles;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn canon(s: &str) -> String {
        canonical_smiles(&parse_smiles(s).unwrap())
    }

    #[test]
    fn equivalent_inputs_agree() {
        assert_eq!(canon("c1ccccc1"), canon("C1=CC=CC=C1"));
        assert_eq!(canon("OCC"), canon("CCO"));
        assert_eq!(canon("C(C)(C)O"), canon("CC(O)C"));
        assert_eq!(canon("[CH4]"), "C");
    }

    #[test]
    fn idempotent() {
        for s in [
            "OCCCN1CCOCC1",
            "CC(=O)Oc1ccccc1C(=O)O",
            "c1ccc2[nH]ccc2c1",
            "C[N+](C)(C)C.[Cl-]",
            "[3*]O[3*]",
            "c1ccccc1-c1ccccc1",
            "C1CC2CCC1C2",
            "O=c1cccc[nH]1",
            "[13CH3]C#N",
        ] {
            let c = canon(s);
            assert_eq!(canon(&c), c, "{s}");
        }
    }

    #[test]
    fn random_serializations_canonicalize_identically() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for s in ["CC(=O)Nc1ccc(O)cc1", "C1CC2CCC1C2", "c1ccc2ccccc2c1", "[5*]N1CCOCC1"] {
            let m = parse_smiles(s).unwrap();
            let c = canonical_smiles(&m);
            for _ in 0..20 {
                let r = random_smiles(&m, &mut rng);
                assert_eq!(canon(&r), c, "{s} via {r}");
            }
        }
    }

    #[test]
    fn ranks_are_a_permutation() {
        let m = parse_smiles("CC(C)(C)C").unwrap();
        let mut r = canonical_ranks(&m);
        r.sort();
        assert_eq!(r, (0..5).collect::<Vec<_>>());
    }

    #[test]
    fn many_ring_closures_use_percent_digits() {
        let mut s = String::from("C");
        for d in 1..=12 {
            s.push_str(&format!("C%{:02}", d + 10));
        }
        for d in 1..=12 {
            s.push_str(&format!("C%{:02}", d + 10));
        }
        let m = parse_smiles(&s).unwrap();
        let c = canonical_smiles(&m);
        assert_eq!(canon(&c), c);
    }
}
