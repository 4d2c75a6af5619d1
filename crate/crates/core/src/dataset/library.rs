//! Corpus pre-processing into a deduplicated, filtered molecule library.

use std::collections::HashSet;
use std::io::{self, BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::molgraph::{canonical_smiles, parse_smiles, validate};
use crate::tokenizer::Vocab;

pub const MAX_WEIGHT: f64 = 1000.0;
pub const MAX_TOKENS: usize = 512;

/// Lines handed to the worker pool at a time.
const BATCH: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Filters {
    pub max_weight: f64,
    pub max_tokens: usize,
}

impl Default for Filters {
    fn default() -> Self {
        Filters {
            max_weight: MAX_WEIGHT,
            max_tokens: MAX_TOKENS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryRecord {
    pub smiles: String,
    pub weight: f64,
    pub token_length: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterStats {
    pub lines: usize,
    pub unreadable: usize,
    pub duplicates: usize,
    pub invalid: usize,
    pub weight_rejections: usize,
    pub token_rejections: usize,
    pub kept: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MoleculeLibrary {
    /// Sorted by canonical SMILES.
    pub records: Vec<LibraryRecord>,
    pub stats: FilterStats,
}

impl MoleculeLibrary {
    /// Mean canonical SMILES length, `None` for an empty library.
    pub fn mean_length(&self) -> Option<f64> {
        if self.records.is_empty() {
            return None;
        }
        let total: usize = self.records.iter().map(|r| r.smiles.len()).sum();
        Some(total as f64 / self.records.len() as f64)
    }

    /// The mean length rounded to the nearest integer, at least 1.
    pub fn k(&self) -> Option<usize> {
        self.mean_length().map(|m| (m.round() as usize).max(1))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Tab-separated `smiles weight token_length` with a header line.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "smiles\tweight\ttoken_length")?;
        for r in &self.records {
            writeln!(w, "{}\t{:.3}\t{}", r.smiles, r.weight, r.token_length)?;
        }
        Ok(())
    }

    /// Reads a library written by [`MoleculeLibrary::write_tsv`]. Stats are
    /// not stored in the file and come back zeroed apart from `kept`.
    pub fn read_tsv<R: BufRead>(r: R) -> io::Result<MoleculeLibrary> {
        let mut records = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            if n == 0 && line.starts_with("smiles\t") || line.trim().is_empty() {
                continue;
            }
            let bad =
                |what: &str| io::Error::new(io::ErrorKind::InvalidData, format!("library line {}: {what}", n + 1));
            let mut cols = line.split('\t');
            let smiles = cols.next().ok_or_else(|| bad("missing smiles"))?.to_string();
            let weight = cols
                .next()
                .and_then(|w| w.parse().ok())
                .ok_or_else(|| bad("bad weight"))?;
            let token_length = cols
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| bad("bad token length"))?;
            records.push(LibraryRecord {
                smiles,
                weight,
                token_length,
            });
        }
        let stats = FilterStats {
            kept: records.len(),
            ..FilterStats::default()
        };
        Ok(MoleculeLibrary { records, stats })
    }
}

enum Outcome {
    Unreadable,
    Invalid(String),
    Checked {
        smiles: String,
        weight: f64,
        tokens: Option<usize>,
    },
}

fn examine(line: &str, vocab: &Vocab) -> Outcome {
    let Ok(m) = parse_smiles(line) else {
        return Outcome::Unreadable;
    };
    let smiles = canonical_smiles(&m);
    if !validate(&m).valid {
        return Outcome::Invalid(smiles);
    }
    let tokens = vocab.token_length(&smiles).ok();
    Outcome::Checked {
        weight: m.molecular_weight(),
        smiles,
        tokens,
    }
}

/// First whitespace-separated field of a corpus line, if any.
fn smiles_field(line: &str) -> Option<&str> {
    line.split_whitespace().next()
}

/// Canonical dedup, validity, weight and token-length filters, in that
/// order. Unreadable lines are counted and skipped. Work is spread over the
/// rayon pool in batches; results do not depend on the worker count.
pub fn preprocess<I>(corpus: I, vocab: &Vocab, filters: &Filters) -> MoleculeLibrary
where
    I: IntoIterator,
    I::Item: AsRef<str>,
{
    let mut stats = FilterStats::default();
    let mut seen: HashSet<String> = HashSet::new();
    let mut records = Vec::new();
    let mut batch: Vec<String> = Vec::with_capacity(BATCH);
    let mut flush = |batch: &mut Vec<String>, stats: &mut FilterStats| {
        let outcomes: Vec<Outcome> = batch.par_iter().map(|l| examine(l, vocab)).collect();
        for o in outcomes {
            match o {
                Outcome::Unreadable => stats.unreadable += 1,
                Outcome::Invalid(smiles) => {
                    if seen.insert(smiles) {
                        stats.invalid += 1;
                    } else {
                        stats.duplicates += 1;
                    }
                }
                Outcome::Checked { smiles, weight, tokens } => {
                    if !seen.insert(smiles.clone()) {
                        stats.duplicates += 1;
                    } else if weight > filters.max_weight {
                        stats.weight_rejections += 1;
                    } else if tokens.is_none_or(|t| t > filters.max_tokens) {
                        stats.token_rejections += 1;
                    } else {
                        records.push(LibraryRecord {
                            smiles,
                            weight,
                            token_length: tokens.unwrap_or(0),
                        });
                    }
                }
            }
        }
        batch.clear();
    };
    for line in corpus {
        let line = line.as_ref();
        let Some(field) = smiles_field(line) else {
            continue;
        };
        stats.lines += 1;
        batch.push(field.to_string());
        if batch.len() == BATCH {
            flush(&mut batch, &mut stats);
        }
    }
    flush(&mut batch, &mut stats);
    records.sort_by(|a, b| a.smiles.cmp(&b.smiles));
    stats.kept = records.len();
    MoleculeLibrary { records, stats }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dedup_and_filters() {
        let v = Vocab::standard();
        // Phe nonamer, about 1340 g/mol.
        let peptide = format!("{}O", "NC(Cc1ccccc1)C(=O)".repeat(9));
        let corpus = [
            "CCO",
            "OCC",
            "CCO",
            "C1CC",
            "CC(C)(C)(C)C",
            "PEPTIDE",
            "",
            "c1ccccc1 benzene",
        ];
        let corpus = corpus.map(|s| if s == "PEPTIDE" { peptide.clone() } else { s.to_string() });
        let lib = preprocess(corpus, &v, &Filters::default());
        let smiles: Vec<&str> = lib.records.iter().map(|r| r.smiles.as_str()).collect();
        assert_eq!(smiles, vec!["CCO", "c1ccccc1"]);
        assert_eq!(lib.stats.lines, 7);
        assert_eq!(lib.stats.duplicates, 2);
        assert_eq!(lib.stats.unreadable, 1);
        assert_eq!(lib.stats.invalid, 1);
        assert_eq!(lib.stats.weight_rejections, 1);
        assert_eq!(lib.stats.kept, 2);
        assert_eq!(lib.mean_length(), Some(5.5));
    }

    #[test]
    fn empty_corpus() {
        let lib = preprocess(Vec::<String>::new(), &Vocab::standard(), &Filters::default());
        assert!(lib.is_empty());
        assert_eq!(lib.k(), None);
    }

    #[test]
    fn token_filter() {
        let v = Vocab::standard();
        let lib = preprocess(
            ["CCCCCCCCCC"],
            &v,
            &Filters {
                max_weight: 1000.0,
                max_tokens: 5,
            },
        );
        assert!(lib.is_empty());
        assert_eq!(lib.stats.token_rejections, 1);
    }

    #[test]
    fn tsv_round_trip() {
        let v = Vocab::standard();
        let lib = preprocess(["CCO", "c1ccccc1"], &v, &Filters::default());
        let mut buf = Vec::new();
        lib.write_tsv(&mut buf).unwrap();
        let back = MoleculeLibrary::read_tsv(&buf[..]).unwrap();
        assert_eq!(back.records.len(), 2);
        assert_eq!(back.records[1].smiles, "c1ccccc1");
        assert!((back.records[1].weight - lib.records[1].weight).abs() < 1e-3);
    }
}
