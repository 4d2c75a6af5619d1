//! Reassembling fragments: label-matched rejoining and carbon capping.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::brics::{BricsRules, FragmentSet};
use crate::elements::Element;
use crate::molgraph::{canonical_smiles, implicit_hydrogens, parse_smiles, Atom, Bond, Molecule, SmilesError};

/// Upper bound on pairings explored by [`rejoin_by_labels`].
const MAX_PAIRINGS: usize = 100_000;

#[derive(Debug, Error)]
pub enum RecombineError {
    #[error("link label {0} has no compatible partner")]
    UnpairedLabel(u8),
    #[error("fragments admit {0} different reassemblies")]
    Ambiguous(usize),
    #[error("too many candidate pairings to decide")]
    TooManyPairings,
    #[error("link {0}: {1}")]
    BadLink(usize, String),
    #[error("rejoined fragments do not form one connected molecule")]
    NotConnected,
    #[error("fragment {index}: {source}")]
    Parse { index: usize, source: SmilesError },
    #[error("no fragments")]
    Empty,
}

/// A dummy atom addressed as (fragment index, atom index).
pub type Site = (usize, usize);

/// Rejoins a fragment set using its recorded cut sites.
pub fn rejoin(fs: &FragmentSet) -> Result<Molecule, RecombineError> {
    let links: Vec<(Site, Site)> = fs.links.iter().map(|l| (l.first, l.second)).collect();
    rejoin_linked(&fs.fragments, &links)
}

/// Joins fragments across the given dummy-atom pairs. Each pair is removed
/// and its two anchor atoms are bonded with the order of the dummy bonds.
pub fn rejoin_linked(fragments: &[Molecule], links: &[(Site, Site)]) -> Result<Molecule, RecombineError> {
    if fragments.is_empty() {
        return Err(RecombineError::Empty);
    }
    let mut offsets = Vec::with_capacity(fragments.len());
    let mut atoms: Vec<Atom> = Vec::new();
    let mut bonds: Vec<Bond> = Vec::new();
    for f in fragments {
        let off = atoms.len();
        offsets.push(off);
        atoms.extend(f.atoms().iter().cloned());
        bonds.extend(f.bonds().iter().map(|b| Bond {
            begin: b.begin + off,
            end: b.end + off,
            ..b.clone()
        }));
    }
    let mut removed = vec![false; atoms.len()];
    for (li, &(s0, s1)) in links.iter().enumerate() {
        let bad = |msg: String| RecombineError::BadLink(li, msg);
        let mut ends = [(0usize, 0usize); 2];
        for (k, &(f, a)) in [s0, s1].iter().enumerate() {
            let frag = fragments.get(f).ok_or_else(|| bad(format!("no fragment {f}")))?;
            if a >= frag.atom_count() || !frag.atom(a).is_dummy() {
                return Err(bad(format!("atom {a} of fragment {f} is not a dummy atom")));
            }
            if frag.degree(a) != 1 {
                return Err(bad(format!(
                    "dummy atom {a} of fragment {f} has degree {}",
                    frag.degree(a)
                )));
            }
            let (nb, bi) = frag.neighbors(a)[0];
            let g = offsets[f] + a;
            if removed[g] {
                return Err(bad(format!("dummy atom {a} of fragment {f} used twice")));
            }
            removed[g] = true;
            ends[k] = (offsets[f] + nb, bi);
        }
        let (a0, b0) = ends[0];
        let (a1, _) = ends[1];
        if a0 == a1 || removed[a0] || removed[a1] {
            return Err(bad("link would join an atom to itself or a dummy".into()));
        }
        let order = fragments[s0.0].bond(b0).order;
        bonds.push(Bond::new(a0, a1, order));
    }
    let mut index = vec![usize::MAX; atoms.len()];
    let mut kept = Vec::new();
    for (i, a) in atoms.into_iter().enumerate() {
        if !removed[i] {
            index[i] = kept.len();
            kept.push(a);
        }
    }
    let bonds: Vec<Bond> = bonds
        .into_iter()
        .filter(|b| !removed[b.begin] && !removed[b.end])
        .map(|b| Bond {
            begin: index[b.begin],
            end: index[b.end],
            ..b
        })
        .collect();
    let m = Molecule::from_parts(kept, bonds, String::new()).map_err(|e| RecombineError::BadLink(0, e.to_string()))?;
    if !m.is_connected() {
        return Err(RecombineError::NotConnected);
    }
    let text = canonical_smiles(&m);
    Ok(m.with_source_text(text))
}

/// Rejoins fragments without provenance by pairing dummy atoms whose labels
/// form a permitted link pair in the shipped rule table.
pub fn rejoin_by_labels(fragments: &[Molecule]) -> Result<Molecule, RecombineError> {
    rejoin_by_labels_with(BricsRules::standard(), fragments)
}

/// Parses a dot-joined fragment string and rejoins it by labels.
pub fn rejoin_smiles(dotted: &str) -> Result<Molecule, RecombineError> {
    let fragments = dotted
        .split('.')
        .enumerate()
        .map(|(index, s)| parse_smiles(s).map_err(|source| RecombineError::Parse { index, source }))
        .collect::<Result<Vec<_>, _>>()?;
    rejoin_by_labels(&fragments)
}

pub fn rejoin_by_labels_with(rules: &BricsRules, fragments: &[Molecule]) -> Result<Molecule, RecombineError> {
    if fragments.is_empty() {
        return Err(RecombineError::Empty);
    }
    let mut sites: Vec<(Site, u8)> = Vec::new();
    for (f, m) in fragments.iter().enumerate() {
        for (a, atom) in m.atoms().iter().enumerate() {
            if atom.is_dummy() {
                sites.push(((f, a), atom.link_label.unwrap_or(0)));
            }
        }
    }
    if fragments.len() == 1 && sites.is_empty() {
        return rejoin_linked(fragments, &[]);
    }
    let compatible = |x: u8, y: u8| rules.pairs().iter().any(|&(a, b)| (a, b) == (x, y) || (a, b) == (y, x));
    for &(_, l) in &sites {
        if !sites.iter().any(|&(_, m)| compatible(l, m)) {
            return Err(RecombineError::UnpairedLabel(l));
        }
    }
    if sites.len() % 2 == 1 || sites.len() / 2 + 1 != fragments.len() {
        // A tree over n fragments needs exactly n - 1 links.
        let odd = sites.iter().map(|s| s.1).next().unwrap_or(0);
        return Err(RecombineError::UnpairedLabel(odd));
    }

    let mut search = PairSearch {
        sites: &sites,
        compatible: &compatible,
        used: vec![false; sites.len()],
        pairs: Vec::new(),
        parent: (0..fragments.len()).collect(),
        fragments,
        results: BTreeSet::new(),
        first: None,
        explored: 0,
    };
    search.run()?;
    match search.results.len() {
        0 => Err(RecombineError::UnpairedLabel(sites[0].1)),
        1 => Ok(search.first.expect("one result recorded")),
        n => Err(RecombineError::Ambiguous(n)),
    }
}

struct PairSearch<'a, F: Fn(u8, u8) -> bool> {
    sites: &'a [(Site, u8)],
    compatible: &'a F,
    used: Vec<bool>,
    pairs: Vec<(Site, Site)>,
    /// Union-find over fragments, to keep the link graph a tree.
    parent: Vec<usize>,
    fragments: &'a [Molecule],
    results: BTreeSet<String>,
    first: Option<Molecule>,
    explored: usize,
}

impl<F: Fn(u8, u8) -> bool> PairSearch<'_, F> {
    fn root(&self, mut x: usize) -> usize {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }

    fn run(&mut self) -> Result<(), RecombineError> {
        let Some(i) = self.used.iter().position(|&u| !u) else {
            self.explored += 1;
            if self.explored > MAX_PAIRINGS {
                return Err(RecombineError::TooManyPairings);
            }
            if let Ok(m) = rejoin_linked(self.fragments, &self.pairs) {
                let text = canonical_smiles(&m);
                if self.results.insert(text) && self.first.is_none() {
                    self.first = Some(m);
                }
            }
            return Ok(());
        };
        self.used[i] = true;
        let (si, li) = self.sites[i];
        for j in i + 1..self.sites.len() {
            if self.results.len() > 1 {
                break;
            }
            let (sj, lj) = self.sites[j];
            if self.used[j] || !(self.compatible)(li, lj) {
                continue;
            }
            let (ri, rj) = (self.root(si.0), self.root(sj.0));
            if ri == rj {
                continue;
            }
            self.used[j] = true;
            self.parent[ri] = rj;
            self.pairs.push((si, sj));
            let r = self.run();
            self.pairs.pop();
            self.parent[ri] = ri;
            self.used[j] = false;
            r?;
        }
        self.used[i] = false;
        Ok(())
    }
}

/// Replaces every dummy atom by a carbon, completing its valence with
/// hydrogens.
pub fn carbon_cap(f: &Molecule) -> Molecule {
    if !f.has_dummy_atoms() {
        return f.clone();
    }
    let atoms: Vec<Atom> = f
        .atoms()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            if a.is_dummy() {
                let mut c = Atom::new(Element::C);
                c.hydrogens = implicit_hydrogens(Element::C, false, f.bond_valence(i));
                c
            } else {
                a.clone()
            }
        })
        .collect();
    let m = Molecule::from_parts(atoms, f.bonds().to_vec(), String::new()).expect("same graph with new elements");
    let text = canonical_smiles(&m);
    m.with_source_text(text)
}
