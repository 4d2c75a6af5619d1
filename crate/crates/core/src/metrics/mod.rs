//! Scoring generated SMILES against references.

mod fingerprint;

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::molgraph::{canonical_smiles, parse_smiles, validate, Molecule};

pub use fingerprint::{
    fingerprint, fingerprint_with, tanimoto, FingerprintBitset, KeyTable, Scheme, StructuralKey, DEFAULT_WIDTH,
    MAX_PATH_BONDS, MORGAN_RADIUS,
};

pub const BLEU_ORDER: usize = 4;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("fingerprint width {0} is not a positive power of two")]
    Width(usize),
    #[error("key table has {keys} keys but the width is only {width}")]
    KeysWidth { keys: usize, width: usize },
    #[error("cannot compare {left:?} with {right:?} fingerprints")]
    Mismatch {
        left: (Scheme, usize),
        right: (Scheme, usize),
    },
    #[error("invalid molecule: {0}")]
    InvalidMolecule(String),
    #[error("key table line {line}: {reason}")]
    KeyTable { line: usize, reason: String },
    #[error("{preds} predictions but {refs} references")]
    LengthMismatch { preds: usize, refs: usize },
    #[error("k must be at least 1")]
    TopK,
}

/// Parses and validates; `None` for anything that fails either step.
pub fn valid_molecule(smiles: &str) -> Option<Molecule> {
    let m = parse_smiles(smiles.trim()).ok()?;
    validate(&m).valid.then_some(m)
}

fn canonical(smiles: &str) -> Option<String> {
    parse_smiles(smiles.trim()).ok().map(|m| canonical_smiles(&m))
}

/// 1 when both sides parse to the same canonical SMILES, else 0.
pub fn exact_match(pred: &str, reference: &str) -> u8 {
    match (canonical(pred), canonical(reference)) {
        (Some(a), Some(b)) if a == b => 1,
        _ => 0,
    }
}

/// Unit-cost edit distance over chars.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = (diag + (ca != cb) as usize).min(above + 1).min(row[j] + 1);
            diag = above;
        }
    }
    row[b.len()]
}

fn ngram_counts(chars: &[char], n: usize) -> HashMap<&[char], usize> {
    let mut counts = HashMap::new();
    for g in chars.windows(n) {
        *counts.entry(g).or_insert(0) += 1;
    }
    counts
}

/// Character BLEU-4. Each order's clipped precision is add-one smoothed,
/// (matches + 1) / (total + 1), and an order with no hypothesis n-grams
/// contributes 1. No shared character, or an empty hypothesis, scores 0.
pub fn bleu(pred: &str, reference: &str) -> f64 {
    let h: Vec<char> = pred.chars().collect();
    let r: Vec<char> = reference.chars().collect();
    if h.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=BLEU_ORDER {
        let hyp = ngram_counts(&h, n);
        let refc = ngram_counts(&r, n);
        let total = h.len().saturating_sub(n - 1);
        let matches: usize = hyp.iter().map(|(g, &c)| c.min(refc.get(g).copied().unwrap_or(0))).sum();
        if n == 1 && matches == 0 {
            return 0.0;
        }
        log_sum += ((matches + 1) as f64 / (total + 1) as f64).ln();
    }
    let bp = if h.len() > r.len() {
        1.0
    } else {
        (1.0 - r.len() as f64 / h.len() as f64).exp()
    };
    bp * (log_sum / BLEU_ORDER as f64).exp()
}

/// Fraction of samples whose reference matches one of the first `k`
/// predictions.
pub fn topk_accuracy<S: AsRef<str> + Sync>(ranked: &[Vec<S>], refs: &[S], k: usize) -> Result<f64, MetricsError> {
    if k < 1 {
        return Err(MetricsError::TopK);
    }
    if ranked.len() != refs.len() {
        return Err(MetricsError::LengthMismatch {
            preds: ranked.len(),
            refs: refs.len(),
        });
    }
    if refs.is_empty() {
        return Ok(0.0);
    }
    let hits = ranked
        .par_iter()
        .zip(refs)
        .filter(|(preds, r)| {
            let Some(target) = canonical(r.as_ref()) else {
                return false;
            };
            preds
                .iter()
                .take(k)
                .any(|p| canonical(p.as_ref()).as_deref() == Some(target.as_str()))
        })
        .count();
    Ok(hits as f64 / refs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub width: usize,
    /// Score fingerprints of invalid pairs as 0 instead of skipping them.
    pub invalid_as_zero: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            width: DEFAULT_WIDTH,
            invalid_as_zero: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub exact: f64,
    pub bleu: f64,
    pub levenshtein: f64,
    /// `None` when no pair was scored.
    pub fts_path: Option<f64>,
    pub fts_keys: Option<f64>,
    pub fts_morgan: Option<f64>,
    pub validity: f64,
    pub fts_pairs: usize,
    pub fts_skipped: usize,
    pub invalid_as_zero: bool,
}

struct PairScore {
    exact: u8,
    bleu: f64,
    levenshtein: usize,
    valid_pred: bool,
    /// path, keys, morgan; `None` when either side is invalid.
    fts: Option<[f64; 3]>,
}

fn score_pair(pred: &str, reference: &str, width: usize) -> Result<PairScore, MetricsError> {
    let (pred, reference) = (pred.trim(), reference.trim());
    let p = valid_molecule(pred);
    let r = valid_molecule(reference);
    let fts = match (&p, &r) {
        (Some(p), Some(r)) => {
            let mut out = [0.0; 3];
            for (slot, scheme) in out.iter_mut().zip([Scheme::Path, Scheme::Keys, Scheme::Morgan]) {
                *slot = tanimoto(&fingerprint(p, scheme, width)?, &fingerprint(r, scheme, width)?)?;
            }
            Some(out)
        }
        _ => None,
    };
    Ok(PairScore {
        exact: exact_match(pred, reference),
        bleu: bleu(pred, reference),
        levenshtein: levenshtein(pred, reference),
        valid_pred: p.is_some(),
        fts,
    })
}

fn mean(sum: f64, n: usize) -> Option<f64> {
    (n > 0).then(|| sum / n as f64)
}

/// Scores predictions against references pair by pair. Pairs are scored
/// in parallel and summed in input order.
pub fn evaluate<S: AsRef<str> + Sync>(preds: &[S], refs: &[S], opts: &EvalOptions) -> Result<EvalReport, MetricsError> {
    if preds.len() != refs.len() {
        return Err(MetricsError::LengthMismatch {
            preds: preds.len(),
            refs: refs.len(),
        });
    }
    FingerprintBitset::new(Scheme::Morgan, opts.width)?;
    let scores: Vec<PairScore> = preds
        .par_iter()
        .zip(refs)
        .map(|(p, r)| score_pair(p.as_ref(), r.as_ref(), opts.width))
        .collect::<Result<_, _>>()?;
    let n = scores.len();
    let (mut exact, mut bleu_sum, mut lev, mut valid) = (0usize, 0.0, 0usize, 0usize);
    let mut fts = [0.0; 3];
    let (mut fts_pairs, mut fts_skipped) = (0, 0);
    for s in &scores {
        exact += s.exact as usize;
        bleu_sum += s.bleu;
        lev += s.levenshtein;
        valid += s.valid_pred as usize;
        match s.fts {
            Some(v) => {
                fts_pairs += 1;
                for (acc, x) in fts.iter_mut().zip(v) {
                    *acc += x;
                }
            }
            None if opts.invalid_as_zero => fts_pairs += 1,
            None => fts_skipped += 1,
        }
    }
    let frac = |x: usize| if n == 0 { 0.0 } else { x as f64 / n as f64 };
    Ok(EvalReport {
        n,
        exact: frac(exact),
        bleu: if n == 0 { 0.0 } else { bleu_sum / n as f64 },
        levenshtein: if n == 0 { 0.0 } else { lev as f64 / n as f64 },
        fts_path: mean(fts[0], fts_pairs),
        fts_keys: mean(fts[1], fts_pairs),
        fts_morgan: mean(fts[2], fts_pairs),
        validity: frac(valid),
        fts_pairs,
        fts_skipped,
        invalid_as_zero: opts.invalid_as_zero,
    })
}

impl EvalReport {
    /// Aligned two-line table with one column per metric.
    pub fn to_table(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"));
        let cols = [
            ("N", self.n.to_string()),
            ("EXACT", format!("{:.3}", self.exact)),
            ("BLEU", format!("{:.3}", self.bleu)),
            ("LEVENSHTEIN", format!("{:.2}", self.levenshtein)),
            ("PATH FTS", opt(self.fts_path)),
            ("KEYS FTS", opt(self.fts_keys)),
            ("MORGAN FTS", opt(self.fts_morgan)),
            ("VALIDITY", format!("{:.3}", self.validity)),
        ];
        let mut head = String::new();
        let mut row = String::new();
        for (i, (name, value)) in cols.iter().enumerate() {
            let w = name.len().max(value.len());
            let sep = if i == 0 { "" } else { "  " };
            let _ = write!(head, "{sep}{name:>w$}");
            let _ = write!(row, "{sep}{value:>w$}");
        }
        let mut out = format!("{head}\n{row}\n");
        if self.fts_skipped > 0 {
            let _ = writeln!(
                out,
                "fingerprint scores skip {} pair(s) with an invalid side",
                self.fts_skipped
            );
        }
        out
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_table())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_cases() {
        assert_eq!(exact_match("c1ccccc1", "C1=CC=CC=C1"), 1);
        assert_eq!(exact_match("OCC", "CCO"), 1);
        assert_eq!(exact_match("not-smiles", "CCO"), 0);
        assert_eq!(exact_match("CCO", "CCN"), 0);
    }

    #[test]
    fn levenshtein_cases() {
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("CCO", "CCO"), 0);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("abc", ""), 3);
    }

    #[test]
    fn bleu_against_nltk() {
        // sentence_bleu over character lists with an add-one smoothing
        // function, NLTK 3.10.
        let cases = [
            ("CCCCO", "CCCCN", 0.7598356856515925),
            ("c1ccccc1O", "Oc1ccccc1", 0.9036020036098448),
            ("CC(=O)Nc1ccc(O)cc1", "CC(=O)Nc1ccc(OC)cc1", 0.8580904324275119),
            ("CCCCCCCC", "CC", 0.21105340631872635),
            ("NCCO", "OCCN", 0.537284965911771),
            ("CN1CCOCC1", "OCCCN1CCOCC1", 0.7165313105737893),
            ("ABCD", "WXYZ", 0.0),
        ];
        for (h, r, want) in cases {
            assert!((bleu(h, r) - want).abs() < 1e-12, "{h} {r}: {} vs {want}", bleu(h, r));
        }
    }

    #[test]
    fn bleu_edges() {
        assert_eq!(bleu("CC", "CC"), 1.0);
        assert_eq!(bleu("CCOC(=O)c1ccccc1", "CCOC(=O)c1ccccc1"), 1.0);
        assert_eq!(bleu("", "CCO"), 0.0);
        let v = bleu("CCO", "CCN");
        assert!(v > 0.0 && v < 1.0);
    }

    #[test]
    fn topk() {
        let ranked = vec![vec!["CCN", "CCC", "OCC"], vec!["CC"]];
        let refs = vec!["CCO", "CC"];
        assert_eq!(topk_accuracy(&ranked, &refs, 1).unwrap(), 0.5);
        assert_eq!(topk_accuracy(&ranked, &refs, 2).unwrap(), 0.5);
        assert_eq!(topk_accuracy(&ranked, &refs, 3).unwrap(), 1.0);
        assert_eq!(topk_accuracy(&ranked, &refs, 10).unwrap(), 1.0);
        assert!(topk_accuracy(&ranked, &refs, 0).is_err());
        let empty: Vec<Vec<&str>> = vec![vec![], vec![]];
        assert_eq!(topk_accuracy(&empty, &refs, 5).unwrap(), 0.0);
    }

    #[test]
    fn identity_report() {
        let s = ["CCO", "c1ccccc1", "OCCCN1CCOCC1"];
        let r = evaluate(&s, &s, &EvalOptions::default()).unwrap();
        assert_eq!((r.exact, r.bleu, r.levenshtein, r.validity), (1.0, 1.0, 0.0, 1.0));
        assert_eq!(
            (r.fts_path, r.fts_keys, r.fts_morgan),
            (Some(1.0), Some(1.0), Some(1.0))
        );
        assert_eq!(r.n, 3);
    }

    #[test]
    fn all_invalid() {
        let p = ["xx", "C1CC"];
        let r = ["CCO", "CCN"];
        let rep = evaluate(&p, &r, &EvalOptions::default()).unwrap();
        assert_eq!((rep.validity, rep.exact), (0.0, 0.0));
        assert_eq!((rep.fts_morgan, rep.fts_pairs, rep.fts_skipped), (None, 0, 2));
        let zero = evaluate(
            &p,
            &r,
            &EvalOptions {
                invalid_as_zero: true,
                ..EvalOptions::default()
            },
        )
        .unwrap();
        assert_eq!(zero.fts_morgan, Some(0.0));
        assert!(evaluate(&p[..1], &r, &EvalOptions::default()).is_err());
    }

    #[test]
    fn table_layout() {
        let s = ["CCO"];
        let t = evaluate(&s, &s, &EvalOptions::default()).unwrap().to_table();
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].len(), lines[1].len());
        assert!(lines[0].contains("EXACT") && lines[1].contains("1.000"));
    }
}
