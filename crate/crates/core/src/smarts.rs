//! A SMARTS subset sufficient for BRICS environments and structural keys.
//!
//! Supported atom primitives: `*`, `a`, `A`, `#n`, element symbols
//! (uppercase aliphatic, lowercase aromatic), `Dn`, `Hn`, `Xn`, `R`, `Rn`,
//! `rn`, charges and recursive `$(...)`. Logical operators `!`, `&`, `,`,
//! `;` follow the usual precedence. Bond primitives are `- = # : ~ @`; an
//! omitted bond means single or aromatic. Branches and ring closures are
//! allowed, disconnected patterns are not.

use std::fmt;

use thiserror::Error;

use crate::elements::Element;
use crate::molgraph::{BondOrder, Molecule};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad SMARTS {pattern:?} at offset {offset}: {message}")]
pub struct SmartsError {
    pub pattern: String,
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum AtomPrim {
    Any,
    Aromatic(bool),
    AtomicNumber(u8),
    Symbol { element: Element, aromatic: bool },
    Degree(u8),
    Hydrogens(u8),
    Connectivity(u8),
    InRing,
    RingCount(u8),
    RingSize(u8),
    Charge(i8),
    Recursive(Box<Smarts>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum BondPrim {
    Single,
    Double,
    Triple,
    Aromatic,
    Any,
    Ring,
}

#[derive(Debug, Clone, PartialEq)]
enum Expr<P> {
    Prim(P),
    Not(Box<Expr<P>>),
    And(Vec<Expr<P>>),
    Or(Vec<Expr<P>>),
}

impl<P> Expr<P> {
    fn eval(&self, f: &mut impl FnMut(&P) -> bool) -> bool {
        match self {
            Expr::Prim(p) => f(p),
            Expr::Not(e) => !e.eval(f),
            Expr::And(es) => es.iter().all(|e| e.eval(f)),
            Expr::Or(es) => es.iter().any(|e| e.eval(f)),
        }
    }
}

/// `None` is the implicit single-or-aromatic bond.
type BondExpr = Option<Expr<BondPrim>>;

#[derive(Clone, PartialEq)]
pub struct Smarts {
    text: String,
    atoms: Vec<Expr<AtomPrim>>,
    /// For atoms after the first: (parent atom, bond to parent).
    parents: Vec<Option<(usize, BondExpr)>>,
    /// Ring closures: (earlier atom, later atom, bond).
    closures: Vec<(usize, usize, BondExpr)>,
}

impl fmt::Debug for Smarts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Smarts({:?})", self.text)
    }
}

impl Smarts {
    pub fn parse(text: &str) -> Result<Smarts, SmartsError> {
        let mut p = Parser {
            text,
            bytes: text.as_bytes(),
            pos: 0,
        };
        let s = p.pattern()?;
        if p.pos != p.bytes.len() {
            return Err(p.err("trailing characters"));
        }
        Ok(s)
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    /// Whether the pattern matches with its first atom mapped onto `atom`.
    pub fn matches_at(&self, m: &Molecule, atom: usize) -> bool {
        let mut map = vec![usize::MAX; self.atoms.len()];
        let mut found = false;
        self.search(m, atom, &mut map, &mut |_| {
            found = true;
            false
        });
        found
    }

    pub fn has_match(&self, m: &Molecule) -> bool {
        (0..m.atom_count()).any(|a| self.matches_at(m, a))
    }

    /// All embeddings, each listing the molecule atom for every pattern atom.
    pub fn find_all(&self, m: &Molecule) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for a in 0..m.atom_count() {
            let mut map = vec![usize::MAX; self.atoms.len()];
            self.search(m, a, &mut map, &mut |mapping| {
                out.push(mapping.to_vec());
                true
            });
        }
        out
    }

    /// Number of distinct matched atom sets.
    pub fn count_unique(&self, m: &Molecule) -> usize {
        let mut sets: Vec<Vec<usize>> = self
            .find_all(m)
            .into_iter()
            .map(|mut v| {
                v.sort_unstable();
                v
            })
            .collect();
        sets.sort();
        sets.dedup();
        sets.len()
    }

    /// Depth-first embedding search anchored at `start`. `visit` returns
    /// whether to keep searching.
    fn search(&self, m: &Molecule, start: usize, map: &mut [usize], visit: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if !atom_matches(&self.atoms[0], m, start) {
            return true;
        }
        map[0] = start;
        let keep = self.extend(m, 1, map, visit);
        map[0] = usize::MAX;
        keep
    }

    fn extend(&self, m: &Molecule, i: usize, map: &mut [usize], visit: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if i == self.atoms.len() {
            return visit(map);
        }
        let (parent, bond) = self.parents[i].as_ref().expect("connected pattern");
        let anchor = map[*parent];
        for &(nb, b) in m.neighbors(anchor) {
            if map.contains(&nb) || !bond_matches(bond, m, b) || !atom_matches(&self.atoms[i], m, nb) {
                continue;
            }
            map[i] = nb;
            let closures_ok = self
                .closures
                .iter()
                .filter(|c| c.1 == i)
                .all(|(j, _, be)| m.bond_between(map[*j], nb).is_some_and(|cb| bond_matches(be, m, cb)));
            if closures_ok && !self.extend(m, i + 1, map, visit) {
                map[i] = usize::MAX;
                return false;
            }
            map[i] = usize::MAX;
        }
        true
    }
}

fn ring_count(m: &Molecule, atom: usize) -> usize {
    m.sssr().iter().filter(|r| r.contains(&atom)).count()
}

fn atom_matches(e: &Expr<AtomPrim>, m: &Molecule, i: usize) -> bool {
    let a = m.atom(i);
    e.eval(&mut |p| match p {
        AtomPrim::Any => true,
        AtomPrim::Aromatic(x) => a.aromatic == *x,
        AtomPrim::AtomicNumber(z) => a.element.atomic_number() == *z,
        AtomPrim::Symbol { element, aromatic } => a.element == *element && a.aromatic == *aromatic,
        AtomPrim::Degree(d) => m.degree(i) == *d as usize,
        AtomPrim::Hydrogens(h) => a.hydrogens == *h,
        AtomPrim::Connectivity(x) => m.degree(i) + a.hydrogens as usize == *x as usize,
        AtomPrim::InRing => m.is_ring_atom(i),
        AtomPrim::RingCount(n) => ring_count(m, i) == *n as usize,
        AtomPrim::RingSize(n) => m.smallest_ring_size(i) == Some(*n as usize),
        AtomPrim::Charge(c) => a.formal_charge == *c,
        AtomPrim::Recursive(s) => s.matches_at(m, i),
    })
}

fn bond_matches(e: &BondExpr, m: &Molecule, b: usize) -> bool {
    let order = m.bond(b).order;
    match e {
        None => matches!(order, BondOrder::Single | BondOrder::Aromatic),
        Some(e) => e.eval(&mut |p| match p {
            BondPrim::Single => order == BondOrder::Single,
            BondPrim::Double => order == BondOrder::Double,
            BondPrim::Triple => order == BondOrder::Triple,
            BondPrim::Aromatic => order == BondOrder::Aromatic,
            BondPrim::Any => true,
            BondPrim::Ring => m.is_ring_bond(b),
        }),
    }
}

struct Parser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, message: &str) -> SmartsError {
        SmartsError {
            pattern: self.text.to_string(),
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn number(&mut self) -> Option<u32> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        (self.pos > start).then(|| self.text[start..self.pos].parse().ok())?
    }

    fn pattern(&mut self) -> Result<Smarts, SmartsError> {
        let mut atoms = Vec::new();
        let mut parents: Vec<Option<(usize, BondExpr)>> = Vec::new();
        let mut closures = Vec::new();
        let mut open: Vec<Option<(usize, BondExpr)>> = vec![None; 100];
        let mut stack: Vec<usize> = Vec::new();
        let mut prev: Option<usize> = None;
        let mut pending: BondExpr = None;
        let mut have_bond = false;

        while let Some(c) = self.peek() {
            match c {
                b'(' => {
                    let p = prev.ok_or_else(|| self.err("branch without atom"))?;
                    stack.push(p);
                    self.pos += 1;
                }
                b')' => {
                    prev = Some(stack.pop().ok_or_else(|| self.err("unbalanced ')'"))?);
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'~' | b'@' | b'!' if !have_bond => {
                    pending = Some(self.bond_expr()?);
                    have_bond = true;
                }
                b'0'..=b'9' | b'%' => {
                    let p = prev.ok_or_else(|| self.err("ring closure without atom"))?;
                    let digit = if c == b'%' {
                        self.pos += 1;
                        let start = self.pos;
                        let n = self.number().ok_or_else(|| self.err("expected ring number"))?;
                        if self.pos - start != 2 {
                            return Err(self.err("expected two digits after %"));
                        }
                        n as usize
                    } else {
                        self.pos += 1;
                        (c - b'0') as usize
                    };
                    let bond = pending.take();
                    have_bond = false;
                    match open[digit].take() {
                        Some((q, qb)) => closures.push((q, p, bond.or(qb))),
                        None => open[digit] = Some((p, bond)),
                    }
                }
                _ => {
                    let expr = self.atom_expr()?;
                    let idx = atoms.len();
                    atoms.push(expr);
                    match prev {
                        Some(p) => parents.push(Some((p, pending.take()))),
                        None if idx == 0 => parents.push(None),
                        None => return Err(self.err("disconnected pattern")),
                    }
                    have_bond = false;
                    prev = Some(idx);
                }
            }
        }
        if atoms.is_empty() {
            return Err(self.err("empty pattern"));
        }
        if !stack.is_empty() {
            return Err(self.err("unbalanced '('"));
        }
        if have_bond {
            return Err(self.err("dangling bond"));
        }
        if open.iter().any(Option::is_some) {
            return Err(self.err("unclosed ring"));
        }
        // Closures are checked when their later atom is placed.
        for c in &mut closures {
            if c.0 > c.1 {
                std::mem::swap(&mut c.0, &mut c.1);
            }
        }
        Ok(Smarts {
            text: self.text.to_string(),
            atoms,
            parents,
            closures,
        })
    }

    fn atom_expr(&mut self) -> Result<Expr<AtomPrim>, SmartsError> {
        if self.peek() == Some(b'[') {
            self.pos += 1;
            let e = self.low_and(Self::atom_prim)?;
            if self.peek() != Some(b']') {
                return Err(self.err("expected ']'"));
            }
            self.pos += 1;
            return Ok(e);
        }
        if self.peek() == Some(b'*') {
            self.pos += 1;
            return Ok(Expr::Prim(AtomPrim::Any));
        }
        let rest = &self.text[self.pos..];
        for sym in ["Cl", "Br", "B", "C", "N", "O", "P", "S", "F", "I"] {
            if rest.starts_with(sym) {
                self.pos += sym.len();
                let element = Element::from_symbol(sym).expect("organic symbol");
                return Ok(Expr::Prim(AtomPrim::Symbol {
                    element,
                    aromatic: false,
                }));
            }
        }
        for sym in ["b", "c", "n", "o", "p", "s"] {
            if rest.starts_with(sym) {
                self.pos += 1;
                let element = Element::from_symbol(&sym.to_uppercase()).expect("aromatic symbol");
                return Ok(Expr::Prim(AtomPrim::Symbol {
                    element,
                    aromatic: true,
                }));
            }
        }
        Err(self.err("expected atom"))
    }

    fn bond_expr(&mut self) -> Result<Expr<BondPrim>, SmartsError> {
        self.low_and(Self::bond_prim)
    }

    fn low_and<P>(&mut self, prim: fn(&mut Self) -> Result<Option<P>, SmartsError>) -> Result<Expr<P>, SmartsError> {
        let mut parts = vec![self.or(prim)?];
        while self.peek() == Some(b';') {
            self.pos += 1;
            parts.push(self.or(prim)?);
        }
        Ok(collapse(parts, Expr::And))
    }

    fn or<P>(&mut self, prim: fn(&mut Self) -> Result<Option<P>, SmartsError>) -> Result<Expr<P>, SmartsError> {
        let mut parts = vec![self.high_and(prim)?];
        while self.peek() == Some(b',') {
            self.pos += 1;
            parts.push(self.high_and(prim)?);
        }
        Ok(collapse(parts, Expr::Or))
    }

    fn high_and<P>(&mut self, prim: fn(&mut Self) -> Result<Option<P>, SmartsError>) -> Result<Expr<P>, SmartsError> {
        let mut parts = vec![self.unary(prim)?.ok_or_else(|| self.err("expected primitive"))?];
        loop {
            if self.peek() == Some(b'&') {
                self.pos += 1;
                parts.push(self.unary(prim)?.ok_or_else(|| self.err("expected primitive"))?);
                continue;
            }
            let save = self.pos;
            match self.unary(prim)? {
                Some(e) => parts.push(e),
                None => {
                    self.pos = save;
                    break;
                }
            }
        }
        Ok(collapse(parts, Expr::And))
    }

    fn unary<P>(
        &mut self,
        prim: fn(&mut Self) -> Result<Option<P>, SmartsError>,
    ) -> Result<Option<Expr<P>>, SmartsError> {
        if self.peek() == Some(b'!') {
            self.pos += 1;
            let inner = self
                .unary(prim)?
                .ok_or_else(|| self.err("expected primitive after '!'"))?;
            return Ok(Some(Expr::Not(Box::new(inner))));
        }
        Ok(prim(self)?.map(Expr::Prim))
    }

    fn bond_prim(&mut self) -> Result<Option<BondPrim>, SmartsError> {
        let p = match self.peek() {
            Some(b'-') => BondPrim::Single,
            Some(b'=') => BondPrim::Double,
            Some(b'#') => BondPrim::Triple,
            Some(b':') => BondPrim::Aromatic,
            Some(b'~') => BondPrim::Any,
            Some(b'@') => BondPrim::Ring,
            _ => return Ok(None),
        };
        self.pos += 1;
        Ok(Some(p))
    }

    fn count_or(&mut self, default: u32) -> Result<u8, SmartsError> {
        let n = self.number().unwrap_or(default);
        u8::try_from(n).map_err(|_| self.err("count out of range"))
    }

    fn atom_prim(&mut self) -> Result<Option<AtomPrim>, SmartsError> {
        let Some(c) = self.peek() else {
            return Ok(None);
        };
        let rest = &self.text[self.pos..];
        let prim = match c {
            b'*' => {
                self.pos += 1;
                AtomPrim::Any
            }
            b'a' if !rest.starts_with("as") => {
                self.pos += 1;
                AtomPrim::Aromatic(true)
            }
            b'A' if !rest[1..].starts_with(|ch: char| ch.is_ascii_lowercase()) => {
                self.pos += 1;
                AtomPrim::Aromatic(false)
            }
            b'#' => {
                self.pos += 1;
                let z = self.number().ok_or_else(|| self.err("expected atomic number"))?;
                let z = u8::try_from(z).map_err(|_| self.err("atomic number out of range"))?;
                AtomPrim::AtomicNumber(z)
            }
            b'D' if !rest[1..].starts_with(|ch: char| ch.is_ascii_lowercase()) => {
                self.pos += 1;
                AtomPrim::Degree(self.count_or(1)?)
            }
            b'H' if !rest[1..].starts_with(|ch: char| ch.is_ascii_lowercase()) => {
                self.pos += 1;
                AtomPrim::Hydrogens(self.count_or(1)?)
            }
            b'X' => {
                self.pos += 1;
                AtomPrim::Connectivity(self.count_or(1)?)
            }
            b'R' if !rest[1..].starts_with(|ch: char| ch.is_ascii_lowercase()) => {
                self.pos += 1;
                match self.number() {
                    None => AtomPrim::InRing,
                    Some(n) => AtomPrim::RingCount(u8::try_from(n).map_err(|_| self.err("ring count out of range"))?),
                }
            }
            b'r' => {
                self.pos += 1;
                AtomPrim::RingSize(self.count_or(0)?)
            }
            b'+' | b'-' => {
                self.pos += 1;
                let mut n = 1i32;
                if let Some(d) = self.number() {
                    n = d as i32;
                } else {
                    while self.peek() == Some(c) {
                        self.pos += 1;
                        n += 1;
                    }
                }
                let n = if c == b'-' { -n } else { n };
                AtomPrim::Charge(i8::try_from(n).map_err(|_| self.err("charge out of range"))?)
            }
            b'$' => {
                self.pos += 1;
                if self.peek() != Some(b'(') {
                    return Err(self.err("expected '(' after '$'"));
                }
                let start = self.pos + 1;
                let mut depth = 0usize;
                loop {
                    match self.peek() {
                        None => return Err(self.err("unterminated recursive SMARTS")),
                        Some(b'(') => depth += 1,
                        Some(b')') => {
                            depth -= 1;
                            if depth == 0 {
                                break;
                            }
                        }
                        _ => {}
                    }
                    self.pos += 1;
                }
                let inner = &self.text[start..self.pos];
                self.pos += 1;
                AtomPrim::Recursive(Box::new(Smarts::parse(inner)?))
            }
            b'A'..=b'Z' => {
                let two = rest.get(..2).and_then(|s| {
                    let b = s.as_bytes();
                    b[1].is_ascii_lowercase().then(|| Element::from_symbol(s)).flatten()
                });
                if let Some(element) = two {
                    self.pos += 2;
                    AtomPrim::Symbol {
                        element,
                        aromatic: false,
                    }
                } else {
                    let element = Element::from_symbol(&rest[..1]).ok_or_else(|| self.err("unknown element"))?;
                    self.pos += 1;
                    AtomPrim::Symbol {
                        element,
                        aromatic: false,
                    }
                }
            }
            b'a'..=b'z' => {
                let sym = ["se", "as", "te", "b", "c", "n", "o", "p", "s"]
                    .into_iter()
                    .find(|s| rest.starts_with(s))
                    .ok_or_else(|| self.err("unknown aromatic element"))?;
                let mut upper = sym.to_string();
                upper[..1].make_ascii_uppercase();
                self.pos += sym.len();
                let element = Element::from_symbol(&upper).expect("aromatic element");
                AtomPrim::Symbol {
                    element,
                    aromatic: true,
                }
            }
            _ => return Ok(None),
        };
        Ok(Some(prim))
    }
}

fn collapse<P>(mut parts: Vec<Expr<P>>, wrap: fn(Vec<Expr<P>>) -> Expr<P>) -> Expr<P> {
    if parts.len() == 1 {
        parts.pop().expect("one part")
    } else {
        wrap(parts)
    }
}
