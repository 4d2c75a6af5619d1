//! BRICS bond detection and capped fragmentation.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::molgraph::{
    canonical_smiles, canonical_smiles_ordered, validate, Atom, Bond, BondOrder, Molecule, MAX_LINK_LABEL,
};
use crate::smarts::{Smarts, SmartsError};

const DEFAULT_RULES: &str = include_str!("../data/brics_rules.txt");

pub const DEFAULT_ALPHA: f64 = 1.5;

#[derive(Debug, Error)]
pub enum BricsError {
    #[error("rule table line {line}: {message}")]
    RuleTable { line: usize, message: String },
    #[error("rule table line {line}: {source}")]
    Pattern { line: usize, source: SmartsError },
    #[error("molecule already contains dummy atoms")]
    HasDummies,
    #[error("molecule is not connected")]
    Disconnected,
    #[error("invalid molecule: {0}")]
    Invalid(String),
    #[error("bad fragment parameters: {0}")]
    Domain(String),
}

/// One link environment from the rule table.
#[derive(Debug, Clone)]
pub struct Environment {
    pub label: u8,
    pub pattern: Smarts,
    pub partners: Vec<u8>,
}

/// Compiled BRICS rule table.
#[derive(Debug, Clone)]
pub struct BricsRules {
    environments: Vec<Environment>,
    /// Permitted (A, B) pairs in priority order.
    pairs: Vec<(u8, u8)>,
}

impl BricsRules {
    /// Parses a rule table: `label pattern partners` per line, `#` comments,
    /// partners comma-separated or `-` for none.
    pub fn from_text(text: &str) -> Result<BricsRules, BricsError> {
        let mut environments: Vec<Environment> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            // '#' is also a SMARTS primitive, so comments only start lines.
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = content.split_whitespace().collect();
            if cols.len() != 3 {
                return Err(BricsError::RuleTable {
                    line,
                    message: format!("expected 3 columns, found {}", cols.len()),
                });
            }
            let label = parse_label(cols[0], line)?;
            if environments.iter().any(|e| e.label == label) {
                return Err(BricsError::RuleTable {
                    line,
                    message: format!("label {label} defined twice"),
                });
            }
            let pattern = Smarts::parse(cols[1]).map_err(|source| BricsError::Pattern { line, source })?;
            let partners = if cols[2] == "-" {
                Vec::new()
            } else {
                cols[2]
                    .split(',')
                    .map(|p| parse_label(p, line))
                    .collect::<Result<_, _>>()?
            };
            environments.push(Environment {
                label,
                pattern,
                partners,
            });
        }
        let mut pairs = Vec::new();
        for e in &environments {
            for &p in &e.partners {
                if !environments.iter().any(|x| x.label == p) {
                    return Err(BricsError::RuleTable {
                        line: 0,
                        message: format!("label {} lists unknown partner {p}", e.label),
                    });
                }
                pairs.push((e.label, p));
            }
        }
        Ok(BricsRules { environments, pairs })
    }

    /// The shipped rule table.
    pub fn standard() -> &'static BricsRules {
        static RULES: OnceLock<BricsRules> = OnceLock::new();
        RULES.get_or_init(|| BricsRules::from_text(DEFAULT_RULES).expect("shipped BRICS table parses"))
    }

    pub fn environments(&self) -> &[Environment] {
        &self.environments
    }

    pub fn pairs(&self) -> &[(u8, u8)] {
        &self.pairs
    }

    /// Every cleavable bond, ordered by bond index.
    pub fn find_bonds(&self, m: &Molecule) -> Result<Vec<BricsBond>, BricsError> {
        if m.has_dummy_atoms() {
            return Err(BricsError::HasDummies);
        }
        // Labels whose environment matches at each atom.
        let n = m.atom_count();
        let mut env: Vec<Vec<u8>> = vec![Vec::new(); n];
        let mut candidates = vec![false; n];
        for (bi, b) in m.bonds().iter().enumerate() {
            if b.order == BondOrder::Single && !m.is_ring_bond(bi) {
                candidates[b.begin] = true;
                candidates[b.end] = true;
            }
        }
        for (a, labels) in env.iter_mut().enumerate() {
            if !candidates[a] {
                continue;
            }
            for e in &self.environments {
                if e.pattern.matches_at(m, a) {
                    labels.push(e.label);
                }
            }
        }
        let mut out = Vec::new();
        for (bi, b) in m.bonds().iter().enumerate() {
            if b.order != BondOrder::Single || m.is_ring_bond(bi) {
                continue;
            }
            let (lo, hi) = (b.begin.min(b.end), b.begin.max(b.end));
            let hit = self.pairs.iter().find_map(|&(x, y)| {
                if env[lo].contains(&x) && env[hi].contains(&y) {
                    Some((x, y))
                } else if env[hi].contains(&x) && env[lo].contains(&y) {
                    Some((y, x))
                } else {
                    None
                }
            });
            if let Some((llo, lhi)) = hit {
                out.push(BricsBond {
                    bond_index: bi,
                    atoms: (lo, hi),
                    labels: (llo, lhi),
                });
            }
        }
        Ok(out)
    }
}

fn parse_label(s: &str, line: usize) -> Result<u8, BricsError> {
    match s.parse::<u8>() {
        Ok(l) if (1..=MAX_LINK_LABEL).contains(&l) => Ok(l),
        _ => Err(BricsError::RuleTable {
            line,
            message: format!("bad label {s:?}"),
        }),
    }
}

/// A cleavable bond. `labels.0` belongs to `atoms.0`, `labels.1` to `atoms.1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BricsBond {
    pub bond_index: usize,
    pub atoms: (usize, usize),
    pub labels: (u8, u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FragmentParams {
    /// Mean canonical SMILES length of the library.
    pub k: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl FragmentParams {
    pub fn new(k: usize, alpha: f64, seed: u64) -> Result<Self, BricsError> {
        let p = FragmentParams { k, alpha, seed };
        p.check()?;
        Ok(p)
    }

    fn check(&self) -> Result<(), BricsError> {
        if self.k < 1 {
            return Err(BricsError::Domain("k must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(BricsError::Domain(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Upper bound on the number of fragments for a molecule of length `l`.
///
/// `l` when `l < k`, else `min(l, ceil(ceil(l / k) ^ alpha))`.
pub fn max_fragments(l: usize, k: usize, alpha: f64) -> Result<usize, BricsError> {
    if l < 1 || k < 1 {
        return Err(BricsError::Domain(format!(
            "length and k must be positive (L={l}, k={k})"
        )));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(BricsError::Domain(format!("alpha must be positive, got {alpha}")));
    }
    if l < k {
        return Ok(l);
    }
    let ratio = l.div_ceil(k) as f64;
    let power = ratio.powf(alpha).ceil();
    if power >= l as f64 {
        Ok(l)
    } else {
        Ok((power as usize).max(1))
    }
}

/// Where a cut bond's two dummy atoms ended up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkSite {
    pub bond: BricsBond,
    /// (fragment index, dummy atom index) for `bond.atoms.0`'s side.
    pub first: (usize, usize),
    /// Same for `bond.atoms.1`'s side.
    pub second: (usize, usize),
}

#[derive(Debug, Clone)]
pub struct FragmentSet {
    /// Sorted by canonical SMILES.
    pub fragments: Vec<Molecule>,
    pub parent_canonical: String,
    pub cleaved: Vec<BricsBond>,
    pub links: Vec<LinkSite>,
    /// Cleavable bonds found before the cap was applied.
    pub eligible: usize,
    /// Fragment cap in force.
    pub cap: usize,
    /// Seed that drove bond selection when the cap was binding.
    pub selection_seed: u64,
}

impl FragmentSet {
    /// Canonical SMILES of each fragment, in order.
    pub fn fragment_smiles(&self) -> Vec<String> {
        self.fragments.iter().map(canonical_smiles).collect()
    }

    /// Fragments joined with '.'.
    pub fn to_smiles(&self) -> String {
        self.fragment_smiles().join(".")
    }
}

/// Mixes the configured seed with the parent's canonical text so each
/// molecule draws an independent, reproducible stream.
pub fn selection_seed(seed: u64, parent_canonical: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(parent_canonical.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

pub fn find_brics_bonds(m: &Molecule) -> Result<Vec<BricsBond>, BricsError> {
    BricsRules::standard().find_bonds(m)
}

pub fn fragment(m: &Molecule, p: &FragmentParams) -> Result<FragmentSet, BricsError> {
    fragment_with(BricsRules::standard(), m, p)
}

pub fn fragment_with(rules: &BricsRules, m: &Molecule, p: &FragmentParams) -> Result<FragmentSet, BricsError> {
    p.check()?;
    if !m.is_connected() {
        return Err(BricsError::Disconnected);
    }
    let report = validate(m);
    if !report.valid {
        let reasons: Vec<String> = report
            .failures
            .iter()
            .map(|f| format!("atom {}: {}", f.atom, f.reason))
            .collect();
        return Err(BricsError::Invalid(reasons.join("; ")));
    }
    let parent_canonical = canonical_smiles(m);
    let eligible = rules.find_bonds(m)?;
    let cap = max_fragments(parent_canonical.len(), p.k, p.alpha)?;
    let seed = selection_seed(p.seed, &parent_canonical);
    let max_cuts = cap - 1;
    let cleaved: Vec<BricsBond> = if eligible.len() <= max_cuts {
        eligible.clone()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked: Vec<usize> = sample(&mut rng, eligible.len(), max_cuts).into_vec();
        picked.sort_unstable();
        picked.into_iter().map(|i| eligible[i]).collect()
    };
    let (fragments, links) = cut(m, &cleaved);
    Ok(FragmentSet {
        fragments,
        parent_canonical,
        cleaved,
        links,
        eligible: eligible.len(),
        cap,
        selection_seed: seed,
    })
}

/// Cuts `bonds`, capping each side with a labeled dummy atom.
fn cut(m: &Molecule, bonds: &[BricsBond]) -> (Vec<Molecule>, Vec<LinkSite>) {
    if bonds.is_empty() {
        return (vec![m.clone()], Vec::new());
    }
    let cut_set: BTreeSet<usize> = bonds.iter().map(|b| b.bond_index).collect();
    let mut atoms: Vec<Atom> = m.atoms().to_vec();
    let mut new_bonds: Vec<Bond> = m
        .bonds()
        .iter()
        .enumerate()
        .filter(|(i, _)| !cut_set.contains(i))
        .map(|(_, b)| b.clone())
        .collect();
    // Dummy atom index for each side of each cut.
    let mut dummies = Vec::with_capacity(bonds.len());
    for b in bonds {
        let d0 = atoms.len();
        atoms.push(Atom::dummy(b.labels.0));
        new_bonds.push(Bond::new(b.atoms.0, d0, BondOrder::Single));
        let d1 = atoms.len();
        atoms.push(Atom::dummy(b.labels.1));
        new_bonds.push(Bond::new(b.atoms.1, d1, BondOrder::Single));
        dummies.push((d0, d1));
    }
    let whole = Molecule::from_parts(atoms, new_bonds, String::new()).expect("cutting keeps the graph valid");
    let mut pieces: Vec<(Molecule, String, Vec<usize>)> = whole
        .components()
        .into_iter()
        .map(|comp| induced(&whole, &comp))
        .collect();
    pieces.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.2.cmp(&b.2)));

    let mut locate = vec![(0usize, 0usize); whole.atom_count()];
    for (fi, (_, _, original)) in pieces.iter().enumerate() {
        for (local, &global) in original.iter().enumerate() {
            locate[global] = (fi, local);
        }
    }
    let links = bonds
        .iter()
        .zip(&dummies)
        .map(|(b, &(d0, d1))| LinkSite {
            bond: *b,
            first: locate[d0],
            second: locate[d1],
        })
        .collect();
    (pieces.into_iter().map(|p| p.0).collect(), links)
}

/// Subgraph on `atoms`, renumbered in canonical emission order so that
/// atom indices agree with a parse of its canonical text. Returns the
/// subgraph, its text and the original atom at each new index.
pub(crate) fn induced(m: &Molecule, atoms: &[usize]) -> (Molecule, String, Vec<usize>) {
    let sub = renumber(m, atoms);
    let (text, order) = canonical_smiles_ordered(&sub);
    let original: Vec<usize> = order.iter().map(|&i| atoms[i]).collect();
    (renumber(m, &original).with_source_text(text.clone()), text, original)
}

fn renumber(m: &Molecule, atoms: &[usize]) -> Molecule {
    let mut index = vec![usize::MAX; m.atom_count()];
    for (i, &a) in atoms.iter().enumerate() {
        index[a] = i;
    }
    let sub_atoms = atoms.iter().map(|&a| m.atom(a).clone()).collect();
    let sub_bonds = m
        .bonds()
        .iter()
        .filter(|b| index[b.begin] != usize::MAX && index[b.end] != usize::MAX)
        .map(|b| Bond {
            begin: index[b.begin],
            end: index[b.end],
            ..b.clone()
        })
        .collect();
    Molecule::from_parts(sub_atoms, sub_bonds, String::new()).expect("induced subgraph is valid")
}
