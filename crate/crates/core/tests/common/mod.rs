//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;

use dualsynth::molgraph::{BondOrder, Molecule};
use petgraph::algo::is_isomorphic_matching;
use petgraph::graph::UnGraph;

pub fn fixture(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn corpus() -> Vec<String> {
    fixture("corpus.smi")
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(str::to_string)
        .collect()
}

type NodeLabel = (u8, bool, i8, u8, Option<u16>, Option<u8>);

fn to_petgraph(m: &Molecule) -> UnGraph<NodeLabel, BondOrder> {
    let mut g = UnGraph::new_undirected();
    let nodes: Vec<_> = m
        .atoms()
        .iter()
        .map(|a| {
            g.add_node((
                a.element.atomic_number(),
                a.aromatic,
                a.formal_charge,
                a.hydrogens,
                a.isotope,
                a.link_label,
            ))
        })
        .collect();
    for b in m.bonds() {
        g.add_edge(nodes[b.begin], nodes[b.end], b.order);
    }
    g
}

/// Attributed graph isomorphism via VF2.
pub fn isomorphic(a: &Molecule, b: &Molecule) -> bool {
    is_isomorphic_matching(&to_petgraph(a), &to_petgraph(b), |x, y| x == y, |x, y| x == y)
}

/// Textbook full-matrix edit distance.
pub fn levenshtein_oracle(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = if a[i - 1] == b[j - 1] { 0 } else { 1 };
            d[i][j] = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
        }
    }
    d[a.len()][b.len()]
}

/// Character BLEU-4 written from the definition: clipped counts, add-one
/// smoothing per order, geometric mean, brevity penalty.
pub fn bleu_oracle(hyp: &str, reference: &str) -> f64 {
    let h: Vec<char> = hyp.chars().collect();
    let r: Vec<char> = reference.chars().collect();
    if h.is_empty() {
        return 0.0;
    }
    let grams = |s: &[char], n: usize| -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        if s.len() >= n {
            for i in 0..=s.len() - n {
                *m.entry(s[i..i + n].iter().collect::<String>()).or_insert(0) += 1;
            }
        }
        m
    };
    let mut product = 1.0f64;
    for n in 1..=4 {
        let hg = grams(&h, n);
        let rg = grams(&r, n);
        let total: usize = hg.values().sum();
        let mut clipped = 0;
        for (g, c) in &hg {
            clipped += (*c).min(*rg.get(g).unwrap_or(&0));
        }
        if n == 1 && clipped == 0 {
            return 0.0;
        }
        product *= (clipped as f64 + 1.0) / (total as f64 + 1.0);
    }
    let (c, rl) = (h.len() as f64, r.len() as f64);
    let bp = if c > rl { 1.0 } else { (1.0 - rl / c).exp() };
    bp * product.powf(0.25)
}

/// Straight-line restatement of the fragment cap: L below k passes through,
/// otherwise ceil(L / k) raised to alpha, rounded up, capped at L.
pub fn cap_oracle(l: usize, k: usize, alpha: f64) -> usize {
    if l < k {
        return l;
    }
    let ratio = ((l as f64) / (k as f64)).ceil();
    let powered = ratio.powf(alpha).ceil();
    if powered >= l as f64 {
        l
    } else {
        powered as usize
    }
}
