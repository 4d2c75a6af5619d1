//! Hashed circular and path fingerprints, structural keys, Tanimoto.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::elements::Element;
use crate::molgraph::{validate, Molecule};
use crate::smarts::Smarts;

pub const DEFAULT_WIDTH: usize = 2048;
pub const MORGAN_RADIUS: usize = 2;
pub const MAX_PATH_BONDS: usize = 7;

const DEFAULT_KEYS: &str = include_str!("../../data/structural_keys.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Morgan,
    Path,
    Keys,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Morgan, Scheme::Path, Scheme::Keys];
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Morgan => "morgan",
            Scheme::Path => "path",
            Scheme::Keys => "keys",
        })
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.to_string() == s)
            .ok_or_else(|| format!("unknown fingerprint scheme `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FingerprintBitset {
    scheme: Scheme,
    width: usize,
    words: Vec<u64>,
}

impl FingerprintBitset {
    pub fn new(scheme: Scheme, width: usize) -> Result<Self, MetricsError> {
        if width == 0 || !width.is_power_of_two() {
            return Err(MetricsError::Width(width));
        }
        Ok(FingerprintBitset {
            scheme,
            width,
            words: vec![0; width.div_ceil(64)],
        })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn set(&mut self, bit: usize) {
        assert!(bit < self.width, "bit {bit} out of range");
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn get(&self, bit: usize) -> bool {
        bit < self.width && self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.width).filter(|&b| self.get(b))
    }

    fn set_hashed(&mut self, h: u64) {
        self.set((h % self.width as u64) as usize);
    }
}

/// 64-bit mixing step (splitmix64 finalizer) folded over a word sequence.
fn mix(words: impl IntoIterator<Item = u64>) -> u64 {
    let mut h: u64 = 0x9e37_79b9_7f4a_7c15;
    for w in words {
        h ^= w;
        h = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = h;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h = z ^ (z >> 31);
    }
    h
}

fn atom_invariant(m: &Molecule, i: usize) -> u64 {
    let a = m.atom(i);
    mix([
        a.element.atomic_number() as u64,
        m.degree(i) as u64,
        a.hydrogens as u64,
        (a.formal_charge as i64) as u64,
        a.isotope.unwrap_or(0) as u64,
        m.is_ring_atom(i) as u64,
        a.aromatic as u64,
    ])
}

fn morgan(m: &Molecule, fp: &mut FingerprintBitset) {
    let mut ids: Vec<u64> = (0..m.atom_count()).map(|i| atom_invariant(m, i)).collect();
    for &id in &ids {
        fp.set_hashed(id);
    }
    for radius in 1..=MORGAN_RADIUS {
        let next: Vec<u64> = (0..m.atom_count())
            .map(|i| {
                let mut env: Vec<(u64, u64)> = m
                    .neighbors(i)
                    .iter()
                    .map(|&(nbr, bond)| (m.bond(bond).order.code() as u64, ids[nbr]))
                    .collect();
                env.sort_unstable();
                mix([radius as u64, ids[i]]
                    .into_iter()
                    .chain(env.into_iter().flat_map(|(b, a)| [b, a])))
            })
            .collect();
        for &id in &next {
            fp.set_hashed(id);
        }
        ids = next;
    }
}

fn path_label(m: &Molecule, i: usize) -> u64 {
    let a = m.atom(i);
    (a.element.atomic_number() as u64) << 1 | a.aromatic as u64
}

fn paths(m: &Molecule, fp: &mut FingerprintBitset) {
    let labels: Vec<u64> = (0..m.atom_count()).map(|i| path_label(m, i)).collect();
    let mut seq: Vec<u64> = Vec::with_capacity(2 * MAX_PATH_BONDS + 1);
    let mut on_path = vec![false; m.atom_count()];
    fn walk(
        m: &Molecule,
        at: usize,
        labels: &[u64],
        seq: &mut Vec<u64>,
        on_path: &mut [bool],
        fp: &mut FingerprintBitset,
    ) {
        for &(nbr, bond) in m.neighbors(at) {
            if on_path[nbr] {
                continue;
            }
            seq.push(m.bond(bond).order.code() as u64 + 1000);
            seq.push(labels[nbr]);
            let rev: Vec<u64> = seq.iter().rev().copied().collect();
            let canon = if rev < *seq { rev } else { seq.clone() };
            fp.set_hashed(mix(canon));
            if seq.len() / 2 < MAX_PATH_BONDS {
                on_path[nbr] = true;
                walk(m, nbr, labels, seq, on_path, fp);
                on_path[nbr] = false;
            }
            seq.truncate(seq.len() - 2);
        }
    }
    for start in 0..m.atom_count() {
        seq.clear();
        seq.push(labels[start]);
        on_path[start] = true;
        walk(m, start, &labels, &mut seq, &mut on_path, fp);
        on_path[start] = false;
    }
}

#[derive(Debug, Clone)]
enum KeyKind {
    Element(Element),
    Ring(usize),
    Rings,
    Pattern(Smarts),
}

#[derive(Debug, Clone)]
pub struct StructuralKey {
    kind: KeyKind,
    min: usize,
}

impl StructuralKey {
    fn count(&self, m: &Molecule) -> usize {
        match &self.kind {
            KeyKind::Element(e) => m.atoms().iter().filter(|a| a.element == *e).count(),
            KeyKind::Ring(size) => m.sssr().iter().filter(|r| r.len() == *size).count(),
            KeyKind::Rings => m.sssr().len(),
            KeyKind::Pattern(p) => p.count_unique(m),
        }
    }

    pub fn matches(&self, m: &Molecule) -> bool {
        self.count(m) >= self.min
    }
}

#[derive(Debug, Clone)]
pub struct KeyTable {
    keys: Vec<StructuralKey>,
}

impl KeyTable {
    /// Parses `kind<TAB>argument[<TAB>min]` lines; `#` starts a comment line.
    pub fn from_text(text: &str) -> Result<KeyTable, MetricsError> {
        let mut keys = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let bad = |reason: String| MetricsError::KeyTable { line: n + 1, reason };
            let cols: Vec<&str> = raw.split('\t').map(str::trim).collect();
            if cols.len() < 2 || cols.len() > 3 {
                return Err(bad(format!("expected 2 or 3 columns, found {}", cols.len())));
            }
            let min = match cols.get(2) {
                Some(v) => v.parse().map_err(|_| bad(format!("bad minimum count `{v}`")))?,
                None => 1,
            };
            let kind = match cols[0] {
                "element" => KeyKind::Element(
                    Element::from_symbol(cols[1]).ok_or_else(|| bad(format!("unknown element `{}`", cols[1])))?,
                ),
                "ring" => KeyKind::Ring(
                    cols[1]
                        .parse()
                        .map_err(|_| bad(format!("bad ring size `{}`", cols[1])))?,
                ),
                "rings" => KeyKind::Rings,
                "smarts" => KeyKind::Pattern(Smarts::parse(cols[1]).map_err(|e| bad(e.to_string()))?),
                other => return Err(bad(format!("unknown key kind `{other}`"))),
            };
            keys.push(StructuralKey { kind, min });
        }
        Ok(KeyTable { keys })
    }

    pub fn standard() -> &'static KeyTable {
        static TABLE: OnceLock<KeyTable> = OnceLock::new();
        TABLE.get_or_init(|| KeyTable::from_text(DEFAULT_KEYS).expect("bundled key table parses"))
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[StructuralKey] {
        &self.keys
    }
}

/// Fingerprint of a valid molecule. For `Keys` bit `i` is key `i` of the
/// standard table, so the width must cover the table.
pub fn fingerprint(m: &Molecule, scheme: Scheme, width: usize) -> Result<FingerprintBitset, MetricsError> {
    fingerprint_with(KeyTable::standard(), m, scheme, width)
}

pub fn fingerprint_with(
    keys: &KeyTable,
    m: &Molecule,
    scheme: Scheme,
    width: usize,
) -> Result<FingerprintBitset, MetricsError> {
    let mut fp = FingerprintBitset::new(scheme, width)?;
    let report = validate(m);
    if !report.valid {
        let reasons: Vec<String> = report
            .failures
            .iter()
            .map(|f| format!("atom {}: {}", f.atom, f.reason))
            .collect();
        return Err(MetricsError::InvalidMolecule(reasons.join("; ")));
    }
    match scheme {
        Scheme::Morgan => morgan(m, &mut fp),
        Scheme::Path => paths(m, &mut fp),
        Scheme::Keys => {
            if keys.len() > width {
                return Err(MetricsError::KeysWidth {
                    keys: keys.len(),
                    width,
                });
            }
            for (i, k) in keys.keys().iter().enumerate() {
                if k.matches(m) {
                    fp.set(i);
                }
            }
        }
    }
    Ok(fp)
}

/// |a and b| / |a or b|; two empty bitsets score 1.
pub fn tanimoto(a: &FingerprintBitset, b: &FingerprintBitset) -> Result<f64, MetricsError> {
    if a.scheme != b.scheme || a.width != b.width {
        return Err(MetricsError::Mismatch {
            left: (a.scheme, a.width),
            right: (b.scheme, b.width),
        });
    }
    let (mut both, mut either) = (0u32, 0u32);
    for (x, y) in a.words.iter().zip(&b.words) {
        both += (x & y).count_ones();
        either += (x | y).count_ones();
    }
    Ok(if either == 0 { 1.0 } else { both as f64 / either as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::parse_smiles;

    fn fp(s: &str, scheme: Scheme) -> FingerprintBitset {
        fingerprint(&parse_smiles(s).unwrap(), scheme, DEFAULT_WIDTH).unwrap()
    }

    #[test]
    fn methane_morgan() {
        let n = fp("C", Scheme::Morgan).count_ones();
        assert!((1..=3).contains(&n), "{n}");
        assert_eq!(fp("C", Scheme::Path).count_ones(), 0);
    }

    #[test]
    fn key_table_loads() {
        assert_eq!(KeyTable::standard().len(), 142);
        let benzene = fp("c1ccccc1", Scheme::Keys);
        let phenol = fp("Oc1ccccc1", Scheme::Keys);
        assert!(benzene.count_ones() > 3);
        assert!(phenol.count_ones() > benzene.count_ones());
        assert!(KeyTable::from_text("smarts\t[C").is_err());
        assert!(KeyTable::from_text("colour\tred").is_err());
    }

    #[test]
    fn tanimoto_basics() {
        let a = fp("CCO", Scheme::Morgan);
        let b = fp("CCN", Scheme::Morgan);
        assert_eq!(tanimoto(&a, &a).unwrap(), 1.0);
        let t = tanimoto(&a, &b).unwrap();
        assert!(t > 0.0 && t < 1.0);
        assert_eq!(t, tanimoto(&b, &a).unwrap());
        let empty = FingerprintBitset::new(Scheme::Path, 64).unwrap();
        assert_eq!(tanimoto(&empty, &empty).unwrap(), 1.0);
        assert!(tanimoto(&a, &fp("CCO", Scheme::Path)).is_err());
        let mut x = FingerprintBitset::new(Scheme::Path, 64).unwrap();
        let mut y = x.clone();
        x.set(1);
        y.set(2);
        assert_eq!(tanimoto(&x, &y).unwrap(), 0.0);
    }

    #[test]
    fn kekule_and_aromatic_benzene_agree() {
        for s in Scheme::ALL {
            assert_eq!(fp("c1ccccc1", s), fp("C1=CC=CC=C1", s), "{s}");
        }
    }

    #[test]
    fn rejects_bad_width_and_invalid() {
        assert!(FingerprintBitset::new(Scheme::Morgan, 1000).is_err());
        let m = parse_smiles("CC(C)(C)(C)C").unwrap();
        assert!(fingerprint(&m, Scheme::Morgan, 2048).is_err());
        assert!(fingerprint(&parse_smiles("C").unwrap(), Scheme::Keys, 64).is_err());
    }
}
