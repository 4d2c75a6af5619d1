//! Multi-scale SMILES tokenization: atom-level base tokens, the sixteen
//! dummy-atom tokens, functional-group tokens and framing specials.
//!
//! Text is first lexed into atom-level units. A bracket atom is one unit
//! when the vocabulary knows it and is otherwise spelled out piece by
//! piece. Units are then segmented into the fewest tokens, where a group
//! token covers a run of units; ties go to the longest token first.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::elements::Element;
use crate::molgraph::MAX_LINK_LABEL;

const DEFAULT_GROUPS: &str = include_str!("../data/functional_groups.txt");

pub const BOM: &str = "<BOM>";
pub const EOM: &str = "<EOM>";
pub const BOF: &str = "<BOF>";
pub const EOF: &str = "<EOF>";

/// Whole bracket atoms common enough to deserve their own token.
const COMMON_BRACKETS: &[&str] = &[
    "[nH]", "[NH+]", "[NH2+]", "[NH3+]", "[N+]", "[N-]", "[n+]", "[nH+]", "[n-]", "[O-]", "[O+]", "[OH+]", "[S+]",
    "[S-]", "[s+]", "[C-]", "[CH-]", "[C@H]", "[C@@H]", "[C@]", "[C@@]", "[Si]", "[Se]", "[se]", "[Na+]", "[K+]",
    "[Li+]", "[Cl-]", "[Br-]", "[I-]", "[B-]", "[P+]", "[PH]", "[2H]", "[13C]", "[18F]", "[SiH]", "[SiH2]", "[Sn]",
    "[Zn]", "[Mg]", "[Fe]", "[Pt]", "[Cu]", "[Ca+2]", "[As]", "[te]", "[OH-]", "[H]",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TokenizerError {
    #[error("duplicate token {0:?}")]
    DuplicateToken(String),
    #[error("group line {line} ({entry:?}): {reason}")]
    MalformedGroup { line: usize, entry: String, reason: String },
    #[error("cannot tokenize {ch:?} at offset {offset}")]
    Untokenizable { offset: usize, ch: char },
    #[error("unknown token id {0}")]
    UnknownId(u32),
    #[error("token stream framing broken at position {0}")]
    BadFraming(usize),
    #[error("vocab line {line}: {message}")]
    VocabFormat { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenClass {
    Special,
    Dummy,
    Base,
    Group,
}

impl fmt::Display for TokenClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TokenClass::Special => "special",
            TokenClass::Dummy => "dummy",
            TokenClass::Base => "base",
            TokenClass::Group => "group",
        })
    }
}

impl FromStr for TokenClass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "special" => Ok(TokenClass::Special),
            "dummy" => Ok(TokenClass::Dummy),
            "base" => Ok(TokenClass::Base),
            "group" => Ok(TokenClass::Group),
            other => Err(format!("unknown token class {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Molecule,
    FragmentSet,
}

/// Which special pair frames which kind of payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecialPairing {
    /// `<BOM>`/`<EOM>` around molecules, `<BOF>`/`<EOF>` around fragments.
    #[default]
    Mnemonic,
    /// The swapped assignment: `<BOF>`/`<EOF>` around molecules.
    Paper,
}

impl SpecialPairing {
    pub fn frames(self, kind: SourceKind) -> (&'static str, &'static str) {
        match (self, kind) {
            (SpecialPairing::Mnemonic, SourceKind::Molecule) | (SpecialPairing::Paper, SourceKind::FragmentSet) => {
                (BOM, EOM)
            }
            (SpecialPairing::Mnemonic, SourceKind::FragmentSet) | (SpecialPairing::Paper, SourceKind::Molecule) => {
                (BOF, EOF)
            }
        }
    }
}

impl FromStr for SpecialPairing {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mnemonic" => Ok(SpecialPairing::Mnemonic),
            "paper" => Ok(SpecialPairing::Paper),
            other => Err(format!("special pairing must be 'mnemonic' or 'paper', got {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenStream {
    pub tokens: Vec<u32>,
    pub source_kind: SourceKind,
}

impl TokenStream {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Vocab {
    entries: Vec<(String, TokenClass)>,
    ids: HashMap<String, u32>,
    /// Bracket atoms that lex as a single unit.
    bracket_units: HashSet<String>,
    /// Group token unit sequences keyed by their first unit.
    groups: HashMap<String, Vec<(Vec<String>, u32)>>,
    pairing: SpecialPairing,
}

/// Base token inventory in id order.
fn base_tokens() -> Vec<String> {
    let mut v: Vec<String> = Vec::new();
    let mut push = |s: &str| {
        if !v.iter().any(|x| x == s) {
            v.push(s.to_string());
        }
    };
    for s in [
        "B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I", "b", "c", "n", "o", "p", "s", "*",
    ] {
        push(s);
    }
    for s in ["-", "=", "#", ":", "/", "\\", "(", ")", "[", "]", "@", "+", "H"] {
        push(s);
    }
    for d in 0..10 {
        push(&d.to_string());
    }
    for d in 10..100 {
        push(&format!("%{d}"));
    }
    for e in Element::all().filter(|e| !e.is_dummy()) {
        push(e.symbol());
        if let Some(a) = e.aromatic_symbol() {
            push(a);
        }
    }
    for s in COMMON_BRACKETS {
        push(s);
    }
    v
}

fn dummy_token(label: u8) -> String {
    format!("[{label}*]")
}

impl Vocab {
    /// Builds a vocabulary from a group file (one SMILES substring per line,
    /// `#` comments). A group that coincides with a base token takes the
    /// group class.
    pub fn build(group_file: &str) -> Result<Vocab, TokenizerError> {
        let mut groups: Vec<String> = Vec::new();
        let mut group_lines: Vec<usize> = Vec::new();
        let mut seen = HashSet::new();
        for (n, raw) in group_file.lines().enumerate() {
            let entry = raw.trim();
            if entry.is_empty() || entry.starts_with('#') {
                continue;
            }
            let bad = |reason: &str| TokenizerError::MalformedGroup {
                line: n + 1,
                entry: entry.to_string(),
                reason: reason.to_string(),
            };
            if entry.contains(char::is_whitespace) {
                return Err(bad("contains whitespace"));
            }
            if entry.contains('.') {
                return Err(bad("contains '.'"));
            }
            if entry.starts_with('<') {
                return Err(bad("looks like a special token"));
            }
            if !seen.insert(entry.to_string()) {
                return Err(TokenizerError::DuplicateToken(entry.to_string()));
            }
            groups.push(entry.to_string());
            group_lines.push(n + 1);
        }
        let group_set: HashSet<&str> = groups.iter().map(String::as_str).collect();
        let groups_by_text: HashMap<String, usize> = groups.iter().cloned().zip(group_lines).collect();
        let mut entries: Vec<(String, TokenClass)> = Vec::new();
        for s in [BOF, EOF, BOM, EOM] {
            entries.push((s.to_string(), TokenClass::Special));
        }
        for l in 1..=MAX_LINK_LABEL {
            let t = dummy_token(l);
            if group_set.contains(t.as_str()) {
                return Err(TokenizerError::DuplicateToken(t));
            }
            entries.push((t, TokenClass::Dummy));
        }
        for b in base_tokens() {
            if !group_set.contains(b.as_str()) {
                entries.push((b, TokenClass::Base));
            }
        }
        for g in &groups {
            entries.push((g.clone(), TokenClass::Group));
        }
        // Report group problems against the group file's own line numbers.
        Vocab::from_entries(entries).map_err(|e| match e {
            TokenizerError::MalformedGroup { entry, reason, .. } => {
                let line = groups_by_text.get(entry.as_str()).copied().unwrap_or(0);
                TokenizerError::MalformedGroup { line, entry, reason }
            }
            other => other,
        })
    }

    /// The vocabulary built from the shipped group file.
    pub fn standard() -> Vocab {
        Vocab::build(DEFAULT_GROUPS).expect("shipped group file is well formed")
    }

    fn from_entries(entries: Vec<(String, TokenClass)>) -> Result<Vocab, TokenizerError> {
        let mut ids = HashMap::with_capacity(entries.len());
        for (i, (t, _)) in entries.iter().enumerate() {
            if ids.insert(t.clone(), i as u32).is_some() {
                return Err(TokenizerError::DuplicateToken(t.clone()));
            }
        }
        let bracket_units: HashSet<String> = entries
            .iter()
            .filter(|(t, c)| *c != TokenClass::Special && is_single_bracket(t))
            .map(|(t, _)| t.clone())
            .collect();
        let mut vocab = Vocab {
            entries,
            ids,
            bracket_units,
            groups: HashMap::new(),
            pairing: SpecialPairing::default(),
        };
        let mut groups: HashMap<String, Vec<(Vec<String>, u32)>> = HashMap::new();
        for (i, (t, c)) in vocab.entries.iter().enumerate() {
            if *c != TokenClass::Group {
                continue;
            }
            let units: Vec<String> = vocab
                .lex(t)
                .map_err(|e| TokenizerError::MalformedGroup {
                    line: i + 1,
                    entry: t.clone(),
                    reason: e.to_string(),
                })?
                .into_iter()
                .map(|(_, u)| u)
                .collect();
            if units.len() > 1 {
                groups.entry(units[0].clone()).or_default().push((units, i as u32));
            }
        }
        for list in groups.values_mut() {
            list.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.1.cmp(&b.1)));
        }
        vocab.groups = groups;
        vocab.check_counts()?;
        Ok(vocab)
    }

    fn check_counts(&self) -> Result<(), TokenizerError> {
        let count = |c: TokenClass| self.entries.iter().filter(|e| e.1 == c).count();
        let bad = |message: String| TokenizerError::VocabFormat { line: 0, message };
        if count(TokenClass::Special) != 4 {
            return Err(bad(format!(
                "expected 4 special tokens, found {}",
                count(TokenClass::Special)
            )));
        }
        for s in [BOF, EOF, BOM, EOM] {
            if self.class_of(s) != Some(TokenClass::Special) {
                return Err(bad(format!("missing special token {s}")));
            }
        }
        if count(TokenClass::Dummy) != MAX_LINK_LABEL as usize {
            return Err(bad(format!(
                "expected 16 dummy tokens, found {}",
                count(TokenClass::Dummy)
            )));
        }
        for l in 1..=MAX_LINK_LABEL {
            if self.class_of(&dummy_token(l)) != Some(TokenClass::Dummy) {
                return Err(bad(format!("missing dummy token {}", dummy_token(l))));
            }
        }
        Ok(())
    }

    pub fn with_pairing(mut self, pairing: SpecialPairing) -> Self {
        self.pairing = pairing;
        self
    }

    pub fn pairing(&self) -> SpecialPairing {
        self.pairing
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.entries.get(id as usize).map(|e| e.0.as_str())
    }

    pub fn class(&self, id: u32) -> Option<TokenClass> {
        self.entries.get(id as usize).map(|e| e.1)
    }

    fn class_of(&self, token: &str) -> Option<TokenClass> {
        self.id(token).and_then(|i| self.class(i))
    }

    pub fn count(&self, class: TokenClass) -> usize {
        self.entries.iter().filter(|e| e.1 == class).count()
    }

    pub fn entries(&self) -> impl Iterator<Item = (u32, &str, TokenClass)> {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, (t, c))| (i as u32, t.as_str(), *c))
    }

    /// `id<TAB>class<TAB>token` per line.
    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (id, tok, class) in self.entries() {
            writeln!(w, "{id}\t{class}\t{tok}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("tokens are UTF-8")
    }

    pub fn from_text(text: &str) -> Result<Vocab, TokenizerError> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| TokenizerError::VocabFormat { line: n + 1, message };
            let mut cols = line.splitn(3, '\t');
            let (Some(id), Some(class), Some(token)) = (cols.next(), cols.next(), cols.next()) else {
                return Err(bad("expected id, class and token".into()));
            };
            let id: usize = id.parse().map_err(|_| bad(format!("bad id {id:?}")))?;
            if id != entries.len() {
                return Err(bad(format!("ids must be dense, expected {} got {id}", entries.len())));
            }
            let class: TokenClass = class.parse().map_err(bad)?;
            entries.push((token.to_string(), class));
        }
        Vocab::from_entries(entries)
    }

    /// Splits text into atom-level units, each with its byte offset.
    fn lex(&self, text: &str) -> Result<Vec<(usize, String)>, TokenizerError> {
        let b = text.as_bytes();
        let mut out = Vec::new();
        let mut i = 0;
        let untok = |offset: usize| TokenizerError::Untokenizable {
            offset,
            ch: text[offset..].chars().next().unwrap_or('\0'),
        };
        while i < b.len() {
            let c = b[i];
            let start = i;
            match c {
                b'[' => {
                    let close = text[i..].find(']').map(|p| i + p).ok_or_else(|| untok(i))?;
                    let whole = &text[i..=close];
                    if self.bracket_units.contains(whole) {
                        out.push((start, whole.to_string()));
                    } else {
                        out.push((start, "[".into()));
                        self.lex_bracket_inside(text, i + 1, close, &mut out)?;
                        out.push((close, "]".into()));
                    }
                    i = close + 1;
                }
                b'%' => {
                    if b.get(i + 1).is_some_and(u8::is_ascii_digit) && b.get(i + 2).is_some_and(u8::is_ascii_digit) {
                        out.push((start, text[i..i + 3].to_string()));
                        i += 3;
                    } else {
                        return Err(untok(i));
                    }
                }
                b'C' if b.get(i + 1) == Some(&b'l') => {
                    out.push((start, "Cl".into()));
                    i += 2;
                }
                b'B' if b.get(i + 1) == Some(&b'r') => {
                    out.push((start, "Br".into()));
                    i += 2;
                }
                b'B'
                | b'C'
                | b'N'
                | b'O'
                | b'P'
                | b'S'
                | b'F'
                | b'I'
                | b'b'
                | b'c'
                | b'n'
                | b'o'
                | b'p'
                | b's'
                | b'*'
                | b'-'
                | b'='
                | b'#'
                | b':'
                | b'/'
                | b'\\'
                | b'('
                | b')'
                | b'0'..=b'9' => {
                    out.push((start, (c as char).to_string()));
                    i += 1;
                }
                _ => return Err(untok(i)),
            }
        }
        Ok(out)
    }

    /// Spells out the inside of an unknown bracket atom.
    fn lex_bracket_inside(
        &self,
        text: &str,
        start: usize,
        end: usize,
        out: &mut Vec<(usize, String)>,
    ) -> Result<(), TokenizerError> {
        let b = text.as_bytes();
        let known = |t: &str| self.class_of(t).is_some_and(|c| c != TokenClass::Special);
        let mut i = start;
        while i < end {
            let c = b[i];
            let len = if c.is_ascii_digit() || matches!(c, b'@' | b'+' | b'-' | b':' | b'*') {
                1
            } else if i + 1 < end
                && b[i + 1].is_ascii_lowercase()
                && is_element_symbol(&text[i..i + 2])
                && known(&text[i..i + 2])
            {
                2
            } else if c.is_ascii_alphabetic() && known(&text[i..i + 1]) {
                1
            } else {
                return Err(TokenizerError::Untokenizable {
                    offset: i,
                    ch: text[i..].chars().next().unwrap_or('\0'),
                });
            };
            out.push((i, text[i..i + len].to_string()));
            i += len;
        }
        Ok(())
    }

    /// Fewest-token segmentation of one dot-free component.
    fn segment(&self, text: &str) -> Result<Vec<u32>, TokenizerError> {
        let lexed = self.lex(text)?;
        let mut singles = Vec::with_capacity(lexed.len());
        for (offset, u) in &lexed {
            let id = self.id(u).ok_or_else(|| TokenizerError::Untokenizable {
                offset: *offset,
                ch: u.chars().next().unwrap_or('\0'),
            })?;
            singles.push(id);
        }
        let units: Vec<String> = lexed.into_iter().map(|(_, u)| u).collect();
        let n = units.len();
        let mut best = vec![0usize; n + 1];
        let mut choice: Vec<(usize, u32)> = vec![(0, 0); n + 1];
        for i in (0..n).rev() {
            let mut pick = (1 + best[i + 1], 1usize, singles[i]);
            if let Some(cands) = self.groups.get(&units[i]) {
                for (g, id) in cands {
                    let len = g.len();
                    if i + len <= n && units[i..i + len] == g[..] {
                        let cost = 1 + best[i + len];
                        if cost < pick.0 || (cost == pick.0 && len > pick.1) {
                            pick = (cost, len, *id);
                        }
                    }
                }
            }
            best[i] = pick.0;
            choice[i] = (pick.1, pick.2);
        }
        let mut out = Vec::with_capacity(best[0]);
        let mut i = 0;
        while i < n {
            out.push(choice[i].1);
            i += choice[i].0;
        }
        Ok(out)
    }

    /// Tokenizes a molecule or a dot-joined fragment set. Every dot
    /// component is wrapped in the kind's begin/end tokens.
    pub fn tokenize(&self, text: &str, kind: SourceKind) -> Result<TokenStream, TokenizerError> {
        let (begin, end) = self.pairing.frames(kind);
        let (b, e) = (self.id(begin).expect("special"), self.id(end).expect("special"));
        let mut tokens = Vec::new();
        let mut offset = 0;
        for comp in text.split('.') {
            tokens.push(b);
            let ids = self.segment(comp).map_err(|err| match err {
                TokenizerError::Untokenizable { offset: at, ch } => TokenizerError::Untokenizable {
                    offset: offset + at,
                    ch,
                },
                other => other,
            })?;
            tokens.extend(ids);
            tokens.push(e);
            offset += comp.len() + 1;
        }
        Ok(TokenStream {
            tokens,
            source_kind: kind,
        })
    }

    pub fn detokenize(&self, ts: &TokenStream) -> Result<String, TokenizerError> {
        let (begin, end) = self.pairing.frames(ts.source_kind);
        let mut out = String::new();
        let mut inside = false;
        let mut components = 0;
        for (pos, &id) in ts.tokens.iter().enumerate() {
            let tok = self.token(id).ok_or(TokenizerError::UnknownId(id))?;
            if self.class(id) == Some(TokenClass::Special) {
                if tok == begin && !inside {
                    if components > 0 {
                        out.push('.');
                    }
                    inside = true;
                } else if tok == end && inside {
                    inside = false;
                    components += 1;
                } else {
                    return Err(TokenizerError::BadFraming(pos));
                }
            } else if inside {
                out.push_str(tok);
            } else {
                return Err(TokenizerError::BadFraming(pos));
            }
        }
        if inside || components == 0 {
            return Err(TokenizerError::BadFraming(ts.tokens.len()));
        }
        Ok(out)
    }

    /// Token count excluding framing specials; the length used by filters.
    pub fn payload_len(&self, ts: &TokenStream) -> usize {
        ts.tokens
            .iter()
            .filter(|&&id| self.class(id) != Some(TokenClass::Special))
            .count()
    }

    /// Payload token count of `text`, without building a stream.
    pub fn token_length(&self, text: &str) -> Result<usize, TokenizerError> {
        text.split('.').map(|c| self.segment(c).map(|v| v.len())).sum()
    }
}

fn is_element_symbol(s: &str) -> bool {
    Element::from_symbol(s).is_some() || matches!(s, "se" | "as" | "te")
}

fn is_single_bracket(t: &str) -> bool {
    t.len() >= 3 && t.starts_with('[') && t.ends_with(']') && t[1..t.len() - 1].find(['[', ']']).is_none()
}
