//! Instruction dataset construction: library pre-processing, dual-task
//! record pairs, template filling and sharded JSONL output.

mod emit;
mod library;
mod templates;

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::brics::{fragment, BricsError, FragmentParams, FragmentSet};
use crate::molgraph::{canonical_smiles, parse_smiles, validate, Molecule};
use crate::recombine::Site;
use crate::tokenizer::Vocab;

pub use emit::{emit_jsonl, read_jsonl, Manifest, ShardInfo};
pub use library::{preprocess, FilterStats, Filters, LibraryRecord, MoleculeLibrary, MAX_TOKENS, MAX_WEIGHT};
pub use templates::{fill_template, Template, Templates, SLOTS};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("template line {line}: {reason}")]
    Template { line: usize, reason: String },
    #[error("no template for task {0}")]
    MissingTemplate(Task),
    #[error("template for {task} needs slot {{{slot}}} but no value was given")]
    MissingSlot { task: Task, slot: String },
    #[error("shard size must be at least 1")]
    ShardSize,
    #[error("empty molecule library")]
    EmptyLibrary,
    #[error("reactions line {line}: {reason}")]
    ReactionFormat { line: usize, reason: String },
    #[error(transparent)]
    Brics(#[from] BricsError),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Fragmentation,
    Recombination,
    Retrosynthesis,
    Reaction,
}

impl Task {
    pub const ALL: [Task; 4] = [
        Task::Fragmentation,
        Task::Recombination,
        Task::Retrosynthesis,
        Task::Reaction,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Fragmentation => "fragmentation",
            Task::Recombination => "recombination",
            Task::Retrosynthesis => "retrosynthesis",
            Task::Reaction => "reaction",
        }
    }

    pub fn direction(self) -> Direction {
        match self {
            Task::Fragmentation | Task::Retrosynthesis => Direction::Forward,
            Task::Recombination | Task::Reaction => Direction::Backward,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown task `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

/// One instruction triple. Field order is the JSONL key order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionRecord {
    pub id: String,
    pub task: Task,
    pub direction: Direction,
    pub instruction: String,
    pub input: String,
    pub output: String,
    pub meta: BTreeMap<String, String>,
}

impl InstructionRecord {
    /// Id shared by both halves of a pair.
    pub fn pair_id(&self) -> &str {
        self.meta.get("pair").map(String::as_str).unwrap_or(&self.id)
    }
}

/// First 16 hex digits of sha256 over the pair's kind and forward input.
fn pair_id(kind: &str, key: &str) -> String {
    let mut h = Sha256::new();
    h.update(kind.as_bytes());
    h.update([0]);
    h.update(key.as_bytes());
    hex::encode(&h.finalize()[..8])
}

fn make_pair(
    templates: &Templates,
    forward: Task,
    backward: Task,
    (a, b): (&str, &str),
    mut meta: BTreeMap<String, String>,
) -> Result<[InstructionRecord; 2], DatasetError> {
    let id = pair_id(forward.as_str(), a);
    meta.insert("pair".into(), id.clone());
    let record = |task: Task, suffix: &str, input: &str, output: &str| -> Result<InstructionRecord, DatasetError> {
        Ok(InstructionRecord {
            id: format!("{id}-{suffix}"),
            task,
            direction: task.direction(),
            instruction: templates.fill(task, input, &meta)?,
            input: input.to_string(),
            output: output.to_string(),
            meta: meta.clone(),
        })
    };
    Ok([record(forward, "f", a, b)?, record(backward, "b", b, a)?])
}

/// Serializes cut sites as `f:a-f:a` joined by `;`.
pub fn format_links(links: &[(Site, Site)]) -> String {
    let site = |(f, a): Site| format!("{f}:{a}");
    links
        .iter()
        .map(|&(x, y)| format!("{}-{}", site(x), site(y)))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn parse_links(text: &str) -> Option<Vec<(Site, Site)>> {
    if text.is_empty() {
        return Some(Vec::new());
    }
    let site = |s: &str| -> Option<Site> {
        let (f, a) = s.split_once(':')?;
        Some((f.parse().ok()?, a.parse().ok()?))
    };
    text.split(';')
        .map(|l| {
            let (x, y) = l.split_once('-')?;
            Some((site(x)?, site(y)?))
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairStats {
    pub pairs: usize,
    /// Pretraining: molecules without a cleavable bond.
    pub no_brics_bond: usize,
    /// Unparseable or invalid inputs.
    pub unreadable: usize,
    /// Reactions with no reactants.
    pub no_reactants: usize,
    pub token_rejections: usize,
    pub weight_rejections: usize,
    /// Library molecules the fragmenter refused.
    pub fragment_errors: usize,
}

#[derive(Debug, Clone, Default)]
pub struct PairOutput {
    pub records: Vec<InstructionRecord>,
    pub stats: PairStats,
}

enum Outcome {
    Pair(Box<[InstructionRecord; 2]>),
    NoBond,
    Unreadable,
    TooLong,
    TooHeavy,
    Failed,
}

fn collect(outcomes: Vec<Result<Outcome, DatasetError>>) -> Result<PairOutput, DatasetError> {
    let mut out = PairOutput::default();
    for o in outcomes {
        match o? {
            Outcome::Pair(pair) => {
                out.records.extend(*pair);
                out.stats.pairs += 1;
            }
            Outcome::NoBond => out.stats.no_brics_bond += 1,
            Outcome::Unreadable => out.stats.unreadable += 1,
            Outcome::TooLong => out.stats.token_rejections += 1,
            Outcome::TooHeavy => out.stats.weight_rejections += 1,
            Outcome::Failed => out.stats.fragment_errors += 1,
        }
    }
    Ok(out)
}

/// Fragmentation/recombination pair for one library molecule.
pub fn pretrain_pair(
    smiles: &str,
    params: &FragmentParams,
    vocab: &Vocab,
    templates: &Templates,
    filters: &Filters,
) -> Result<Option<[InstructionRecord; 2]>, DatasetError> {
    match pretrain_outcome(smiles, params, vocab, templates, filters)? {
        Outcome::Pair(p) => Ok(Some(*p)),
        _ => Ok(None),
    }
}

fn pretrain_outcome(
    smiles: &str,
    params: &FragmentParams,
    vocab: &Vocab,
    templates: &Templates,
    filters: &Filters,
) -> Result<Outcome, DatasetError> {
    let Ok(m) = parse_smiles(smiles) else {
        return Ok(Outcome::Unreadable);
    };
    let fs = match fragment(&m, params) {
        Ok(fs) => fs,
        Err(BricsError::Domain(msg)) => return Err(BricsError::Domain(msg).into()),
        Err(_) => return Ok(Outcome::Failed),
    };
    if fs.eligible == 0 {
        return Ok(Outcome::NoBond);
    }
    let parent = fs.parent_canonical.clone();
    let fragments = fs.to_smiles();
    if exceeds_tokens(vocab, &parent, filters) || exceeds_tokens(vocab, &fragments, filters) {
        return Ok(Outcome::TooLong);
    }
    if m.molecular_weight() > filters.max_weight {
        return Ok(Outcome::TooHeavy);
    }
    let meta = BTreeMap::from([
        ("seed".to_string(), fs.selection_seed.to_string()),
        ("cap".to_string(), fs.cap.to_string()),
        ("links".to_string(), format_links(&site_pairs(&fs))),
    ]);
    let pair = make_pair(
        templates,
        Task::Fragmentation,
        Task::Recombination,
        (&parent, &fragments),
        meta,
    )?;
    Ok(Outcome::Pair(Box::new(pair)))
}

fn site_pairs(fs: &FragmentSet) -> Vec<(Site, Site)> {
    fs.links.iter().map(|l| (l.first, l.second)).collect()
}

fn exceeds_tokens(vocab: &Vocab, text: &str, filters: &Filters) -> bool {
    !vocab.token_length(text).is_ok_and(|n| n <= filters.max_tokens)
}

/// Two records per library molecule that has at least one BRICS bond, in
/// library order.
pub fn make_pretrain_pairs(
    lib: &MoleculeLibrary,
    params: &FragmentParams,
    vocab: &Vocab,
    templates: &Templates,
    filters: &Filters,
) -> Result<PairOutput, DatasetError> {
    if lib.is_empty() {
        return Err(DatasetError::EmptyLibrary);
    }
    let outcomes: Vec<_> = lib
        .records
        .par_iter()
        .map(|r| pretrain_outcome(&r.smiles, params, vocab, templates, filters))
        .collect();
    collect(outcomes)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reaction {
    pub reactants: Vec<String>,
    pub product: String,
    pub reaction_type: String,
}

impl Reaction {
    pub fn new(reactants: &[&str], product: &str, reaction_type: &str) -> Reaction {
        Reaction {
            reactants: reactants.iter().map(|s| s.to_string()).collect(),
            product: product.to_string(),
            reaction_type: reaction_type.to_string(),
        }
    }
}

/// Reads `reactants_dot_joined<TAB>product<TAB>reaction_type` lines. Blank
/// lines and `#` comments are skipped; the type column may be empty.
pub fn read_reactions<R: BufRead>(r: R) -> Result<Vec<Reaction>, DatasetError> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 2 || cols.len() > 3 {
            return Err(DatasetError::ReactionFormat {
                line: n + 1,
                reason: format!("expected 2 or 3 tab-separated columns, found {}", cols.len()),
            });
        }
        out.push(Reaction {
            reactants: cols[0]
                .split('.')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.trim().to_string())
                .collect(),
            product: cols[1].trim().to_string(),
            reaction_type: cols.get(2).map(|s| s.trim().to_string()).unwrap_or_default(),
        });
    }
    Ok(out)
}

fn checked(smiles: &str) -> Option<Molecule> {
    let m = parse_smiles(smiles).ok()?;
    validate(&m).valid.then_some(m)
}

fn finetune_outcome(
    rx: &Reaction,
    vocab: &Vocab,
    templates: &Templates,
    filters: &Filters,
) -> Result<Outcome, DatasetError> {
    if rx.reactants.is_empty() {
        return Ok(Outcome::NoBond);
    }
    let Some(product) = checked(&rx.product) else {
        return Ok(Outcome::Unreadable);
    };
    let Some(reactants) = checked(&rx.reactants.join(".")) else {
        return Ok(Outcome::Unreadable);
    };
    let p = canonical_smiles(&product);
    let r = canonical_smiles(&reactants);
    if exceeds_tokens(vocab, &p, filters) || exceeds_tokens(vocab, &r, filters) {
        return Ok(Outcome::TooLong);
    }
    if product.molecular_weight() > filters.max_weight || reactants.molecular_weight() > filters.max_weight {
        return Ok(Outcome::TooHeavy);
    }
    let meta = BTreeMap::from([("reaction_type".to_string(), rx.reaction_type.clone())]);
    let pair = make_pair(templates, Task::Retrosynthesis, Task::Reaction, (&p, &r), meta)?;
    Ok(Outcome::Pair(Box::new(pair)))
}

/// Retrosynthesis/reaction pair per reaction, in input order.
pub fn make_finetune_pairs(
    reactions: &[Reaction],
    vocab: &Vocab,
    templates: &Templates,
    filters: &Filters,
) -> Result<PairOutput, DatasetError> {
    let outcomes: Vec<_> = reactions
        .par_iter()
        .map(|rx| finetune_outcome(rx, vocab, templates, filters))
        .collect();
    let mut out = collect(outcomes)?;
    // Empty reactant lists land in the no-bond slot above.
    out.stats.no_reactants = std::mem::take(&mut out.stats.no_brics_bond);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::canonical_smiles;
    use crate::recombine::rejoin_linked;

    fn params() -> FragmentParams {
        FragmentParams::new(50, 1.5, 7).unwrap()
    }

    fn library(smiles: &[&str]) -> MoleculeLibrary {
        preprocess(smiles, &Vocab::standard(), &Filters::default())
    }

    #[test]
    fn morpholine_pair() {
        let lib = library(&["OCCCN1CCOCC1", "C"]);
        let out = make_pretrain_pairs(
            &lib,
            &params(),
            &Vocab::standard(),
            &Templates::standard(),
            &Filters::default(),
        )
        .unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.stats.no_brics_bond, 1);
        let [f, b] = [&out.records[0], &out.records[1]];
        assert_eq!(f.task, Task::Fragmentation);
        assert_eq!(f.direction, Direction::Forward);
        assert_eq!(f.input, "OCCCN1CCOCC1");
        assert_eq!(f.output, "[4*]CCCO.[5*]N1CCOCC1");
        assert_eq!(b.task, Task::Recombination);
        assert_eq!(b.direction, Direction::Backward);
        assert_eq!(
            (b.input.as_str(), b.output.as_str()),
            (f.output.as_str(), f.input.as_str())
        );
        assert_eq!(f.pair_id(), b.pair_id());
        assert!(f.instruction.contains(&f.input));
    }

    #[test]
    fn payload_rejoins_with_links() {
        let lib = library(&["CCCOCCC(=O)c1ccccc1", "CC(=O)Nc1ccc(OCC(=O)N2CCOCC2)cc1"]);
        let out = make_pretrain_pairs(
            &lib,
            &FragmentParams::new(5, 1.5, 3).unwrap(),
            &Vocab::standard(),
            &Templates::standard(),
            &Filters::default(),
        )
        .unwrap();
        for r in out.records.iter().filter(|r| r.task == Task::Fragmentation) {
            let frags: Vec<Molecule> = r.output.split('.').map(|s| parse_smiles(s).unwrap()).collect();
            let links = parse_links(&r.meta["links"]).unwrap();
            let m = rejoin_linked(&frags, &links).unwrap();
            assert_eq!(canonical_smiles(&m), r.input);
        }
    }

    #[test]
    fn esterification() {
        let rx = [
            Reaction::new(&["CCO", "CC(=O)O"], "CC(=O)OCC", "esterification"),
            Reaction::new(&[], "CCO", "none"),
            Reaction::new(&["C1CC"], "CCO", "broken"),
        ];
        let out = make_finetune_pairs(&rx, &Vocab::standard(), &Templates::standard(), &Filters::default()).unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.stats.no_reactants, 1);
        assert_eq!(out.stats.unreadable, 1);
        let [f, b] = [&out.records[0], &out.records[1]];
        assert_eq!(f.task, Task::Retrosynthesis);
        assert_eq!(b.task, Task::Reaction);
        assert_eq!(f.input, canonical_smiles(&parse_smiles("CC(=O)OCC").unwrap()));
        assert_eq!(f.output, b.input);
        assert_eq!(f.input, b.output);
        assert!(b.instruction.contains("esterification"));
        assert_eq!(f.meta["reaction_type"], "esterification");
        assert!(f.id.ends_with("-f") && b.id.ends_with("-b"));
        assert_eq!(f.id.trim_end_matches("-f"), b.id.trim_end_matches("-b"));
        for payload in [&f.input, &f.output] {
            assert!(parse_smiles(payload).is_ok());
        }
    }

    #[test]
    fn reactions_tsv() {
        let text = "# reactants\tproduct\ttype\nCCO.CC(=O)O\tCC(=O)OCC\testerification\n\nCCN\tCCN\n";
        let rx = read_reactions(text.as_bytes()).unwrap();
        assert_eq!(rx.len(), 2);
        assert_eq!(rx[0].reactants, vec!["CCO", "CC(=O)O"]);
        assert_eq!(rx[1].reaction_type, "");
        assert!(read_reactions("just-one-column\n".as_bytes()).is_err());
    }

    #[test]
    fn links_text() {
        let links = vec![((0, 1), (1, 0)), ((1, 4), (2, 0))];
        let s = format_links(&links);
        assert_eq!(s, "0:1-1:0;1:4-2:0");
        assert_eq!(parse_links(&s), Some(links));
        assert_eq!(parse_links(""), Some(vec![]));
        assert_eq!(parse_links("0:1"), None);
    }

    #[test]
    fn empty_library_is_an_error() {
        let lib = MoleculeLibrary::default();
        let err = make_pretrain_pairs(
            &lib,
            &params(),
            &Vocab::standard(),
            &Templates::standard(),
            &Filters::default(),
        );
        assert!(matches!(err, Err(DatasetError::EmptyLibrary)));
    }
}
