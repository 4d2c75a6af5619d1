//! Ring perception: ring-bond membership via bridge detection and a
//! minimum cycle basis (SSSR) from Horton candidate cycles.

use std::collections::{HashSet, VecDeque};

use super::{Bond, Molecule};

/// Marks every bond that lies on at least one cycle (i.e. is not a bridge).
pub(crate) fn ring_bonds(n: usize, bonds: &[Bond], adjacency: &[Vec<(usize, usize)>]) -> Vec<bool> {
    let mut in_ring = vec![true; bonds.len()];
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut timer = 0;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // (node, parent bond, next neighbor cursor)
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(&mut (u, pb, ref mut cursor)) = stack.last_mut() {
            if *cursor < adjacency[u].len() {
                let (v, b) = adjacency[u][*cursor];
                *cursor += 1;
                if b == pb {
                    continue;
                }
                if disc[v] == usize::MAX {
                    disc[v] = timer;
                    low[v] = timer;
                    timer += 1;
                    stack.push((v, b, 0));
                } else {
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[u]);
                    if low[u] > disc[p] {
                        in_ring[pb] = false;
                    }
                }
            }
        }
    }
    in_ring
}

fn bfs_tree(m: &Molecule, root: usize) -> (Vec<usize>, Vec<usize>) {
    let n = m.atom_count();
    let mut dist = vec![usize::MAX; n];
    let mut parent = vec![usize::MAX; n];
    dist[root] = 0;
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        for &(v, b) in m.neighbors(u) {
            if m.is_ring_bond(b) && dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                parent[v] = u;
                queue.push_back(v);
            }
        }
    }
    (dist, parent)
}

fn path_to_root(parent: &[usize], mut v: usize) -> Vec<usize> {
    let mut path = vec![v];
    while parent[v] != usize::MAX {
        v = parent[v];
        path.push(v);
    }
    path
}

/// Minimum cycle basis of the ring system, each ring as an atom cycle.
/// Rings are ordered by size, then by their sorted bond sets.
pub(crate) fn sssr(m: &Molecule) -> Vec<Vec<usize>> {
    let ring_bond_ids: Vec<usize> = (0..m.bond_count()).filter(|&b| m.is_ring_bond(b)).collect();
    if ring_bond_ids.is_empty() {
        return Vec::new();
    }
    let ring_atoms: Vec<usize> = (0..m.atom_count()).filter(|&a| m.is_ring_atom(a)).collect();
    let words = m.bond_count().div_ceil(64);

    // Cyclomatic number of the ring subgraph.
    let comps = {
        let mut seen = vec![false; m.atom_count()];
        let mut c = 0;
        for &a in &ring_atoms {
            if seen[a] {
                continue;
            }
            c += 1;
            let mut stack = vec![a];
            seen[a] = true;
            while let Some(u) = stack.pop() {
                for &(v, b) in m.neighbors(u) {
                    if m.is_ring_bond(b) && !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        c
    };
    let rank_needed = ring_bond_ids.len() + comps - ring_atoms.len();

    let mut seen_sets: HashSet<Vec<u64>> = HashSet::new();
    let mut candidates: Vec<(Vec<u64>, Vec<usize>)> = Vec::new();
    for &root in &ring_atoms {
        let (dist, parent) = bfs_tree(m, root);
        for &b in &ring_bond_ids {
            let (x, y) = (m.bond(b).begin, m.bond(b).end);
            if dist[x] == usize::MAX || dist[y] == usize::MAX {
                continue;
            }
            if parent[x] == y || parent[y] == x {
                continue;
            }
            let px = path_to_root(&parent, x);
            let py = path_to_root(&parent, y);
            // Paths must share only the root.
            let sx: HashSet<usize> = px[..px.len() - 1].iter().copied().collect();
            if py[..py.len() - 1].iter().any(|v| sx.contains(v)) {
                continue;
            }
            let mut cycle: Vec<usize> = px.iter().rev().copied().collect();
            cycle.extend(py[..py.len() - 1].iter());
            let mut bits = vec![0u64; words];
            let len = cycle.len();
            for i in 0..len {
                let bi = m.bond_between(cycle[i], cycle[(i + 1) % len]).expect("cycle edge");
                bits[bi / 64] |= 1 << (bi % 64);
            }
            if seen_sets.insert(bits.clone()) {
                candidates.push((bits, cycle));
            }
        }
    }
    candidates.sort_by(|a, b| a.1.len().cmp(&b.1.len()).then_with(|| a.0.cmp(&b.0)));

    // Gaussian elimination over GF(2), keeping independent cycles.
    let mut basis: Vec<(usize, Vec<u64>)> = Vec::new();
    let mut rings = Vec::new();
    for (bits, cycle) in candidates {
        if rings.len() == rank_needed {
            break;
        }
        let mut v = bits;
        for (pivot, row) in &basis {
            if v[pivot / 64] >> (pivot % 64) & 1 == 1 {
                for (w, r) in v.iter_mut().zip(row) {
                    *w ^= r;
                }
            }
        }
        if let Some(pivot) = first_bit(&v) {
            basis.push((pivot, v));
            rings.push(cycle);
        }
    }
    rings
}

fn first_bit(v: &[u64]) -> Option<usize> {
    v.iter()
        .enumerate()
        .find(|(_, &w)| w != 0)
        .map(|(i, &w)| i * 64 + w.trailing_zeros() as usize)
}

/// Length of the smallest cycle passing through `atom`; a graph invariant
/// independent of any basis choice.
pub fn smallest_cycle_through(m: &Molecule, atom: usize) -> Option<usize> {
    let mut best: Option<usize> = None;
    for &(start, excluded) in m.neighbors(atom) {
        if !m.is_ring_bond(excluded) {
            continue;
        }
        let n = m.atom_count();
        let mut dist = vec![usize::MAX; n];
        dist[start] = 0;
        let mut queue = VecDeque::from([start]);
        'bfs: while let Some(u) = queue.pop_front() {
            for &(v, b) in m.neighbors(u) {
                if b == excluded || dist[v] != usize::MAX {
                    continue;
                }
                dist[v] = dist[u] + 1;
                if v == atom {
                    break 'bfs;
                }
                queue.push_back(v);
            }
        }
        if dist[atom] != usize::MAX {
            let len = dist[atom] + 1;
            best = Some(best.map_or(len, |b| b.min(len)));
        }
    }
    best
}
