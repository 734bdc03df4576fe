//! SMARTS patterns and substructure matching.

use std::cell::RefCell;
use std::collections::{HashMap, HashSet};

use crate::element;
use crate::error::ChemError;
use crate::mol::{BondOrder, Molecule};

#[derive(Debug, Clone, PartialEq)]
enum AtomPrim {
    Any,
    Aromatic,
    Aliphatic,
    Element { z: u8, aromatic: Option<bool> },
    AtomicNumber(u8),
    Degree(u32),
    Connections(u32),
    TotalH(u32),
    ImplicitH(Option<u32>),
    RingCount(Option<u32>),
    RingSize(Option<u32>),
    RingBonds(Option<u32>),
    Valence(u32),
    Charge(i32),
    Isotope(u16),
    Recursive(Box<Pattern>),
}

#[derive(Debug, Clone, PartialEq)]
enum Expr<P> {
    Prim(P),
    Not(Box<Expr<P>>),
    And(Vec<Expr<P>>),
    Or(Vec<Expr<P>>),
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

type AtomExpr = Expr<AtomPrim>;
type BondExpr = Expr<BondPrim>;

#[derive(Debug, Clone, PartialEq)]
struct QueryBond {
    a: usize,
    b: usize,
    /// `None` is the implicit single-or-aromatic bond.
    expr: Option<BondExpr>,
}

/// A parsed SMARTS query.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    atoms: Vec<AtomExpr>,
    bonds: Vec<QueryBond>,
    source: String,
}

impl Pattern {
    pub fn source_text(&self) -> &str {
        &self.source
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }
}

struct SmartsParser<'a> {
    text: &'a [u8],
    pos: usize,
    base: usize,
}

/// Parse a SMARTS string.
pub fn parse_smarts(text: &str) -> Result<Pattern, ChemError> {
    let mut p = SmartsParser {
        text: text.as_bytes(),
        pos: 0,
        base: 0,
    };
    let pat = p.pattern(text)?;
    if p.pos != p.text.len() {
        return Err(ChemError::syntax(p.pos, "unexpected trailing input"));
    }
    Ok(pat)
}

impl SmartsParser<'_> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ChemError> {
        Err(ChemError::syntax(self.base + self.pos, msg))
    }

    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn number(&mut self) -> Option<u32> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if start == self.pos {
            None
        } else {
            std::str::from_utf8(&self.text[start..self.pos]).ok()?.parse().ok()
        }
    }

    fn pattern(&mut self, source: &str) -> Result<Pattern, ChemError> {
        let mut atoms: Vec<AtomExpr> = Vec::new();
        let mut bonds: Vec<QueryBond> = Vec::new();
        let mut prev: Option<usize> = None;
        let mut pending: Option<Option<BondExpr>> = None;
        let mut branches: Vec<usize> = Vec::new();
        let mut rings: HashMap<u32, (usize, Option<BondExpr>)> = HashMap::new();
        while let Some(c) = self.peek() {
            match c {
                b'(' => {
                    let Some(p) = prev else {
                        return self.err("branch without atom");
                    };
                    branches.push(p);
                    self.pos += 1;
                }
                b')' => {
                    let Some(p) = branches.pop() else {
                        return self.err("unmatched ')'");
                    };
                    prev = Some(p);
                    self.pos += 1;
                }
                b'.' => {
                    prev = None;
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => {
                    let Some(cur) = prev else {
                        return self.err("ring closure without atom");
                    };
                    let id = if c == b'%' {
                        self.pos += 1;
                        let start = self.pos;
                        let Some(n) = self.number() else {
                            return self.err("'%' without digits");
                        };
                        if self.pos - start != 2 {
                            return self.err("'%' needs two digits");
                        }
                        n
                    } else {
                        self.pos += 1;
                        u32::from(c - b'0')
                    };
                    let expr = pending.take().flatten();
                    if let Some((open, open_expr)) = rings.remove(&id) {
                        bonds.push(QueryBond {
                            a: open,
                            b: cur,
                            expr: open_expr.or(expr),
                        });
                    } else {
                        rings.insert(id, (cur, expr));
                    }
                }
                b'-' | b'=' | b'#' | b':' | b'~' | b'@' | b'!' | b'/' | b'\\' => {
                    if prev.is_none() {
                        return self.err("bond without atom");
                    }
                    pending = Some(Some(self.bond_expr()?));
                }
                _ => {
                    let atom = self.atom()?;
                    let idx = atoms.len();
                    atoms.push(atom);
                    if let Some(p) = prev {
                        bonds.push(QueryBond {
                            a: p,
                            b: idx,
                            expr: pending.take().flatten(),
                        });
                    }
                    prev = Some(idx);
                }
            }
        }
        if !branches.is_empty() {
            return self.err("unmatched '('");
        }
        if let Some(id) = rings.keys().next() {
            return self.err(format!("unclosed ring closure {id}"));
        }
        if atoms.is_empty() {
            return self.err("empty pattern");
        }
        Ok(Pattern {
            atoms,
            bonds,
            source: source.to_string(),
        })
    }

    fn bond_expr(&mut self) -> Result<BondExpr, ChemError> {
        // ; lowest, then , then & / implicit, ! binds tightest.
        let mut semis = vec![self.bond_or()?];
        while self.peek() == Some(b';') {
            self.pos += 1;
            semis.push(self.bond_or()?);
        }
        Ok(collapse(semis, Expr::And))
    }

    fn bond_or(&mut self) -> Result<BondExpr, ChemError> {
        let mut terms = vec![self.bond_and()?];
        while self.peek() == Some(b',') {
            self.pos += 1;
            terms.push(self.bond_and()?);
        }
        Ok(collapse(terms, Expr::Or))
    }

    fn bond_and(&mut self) -> Result<BondExpr, ChemError> {
        let mut terms = vec![self.bond_unary()?];
        loop {
            match self.peek() {
                Some(b'&') => {
                    self.pos += 1;
                    terms.push(self.bond_unary()?);
                }
                Some(b'-' | b'=' | b'#' | b':' | b'~' | b'@' | b'!' | b'/' | b'\\') => {
                    terms.push(self.bond_unary()?)
                }
                _ => break,
            }
        }
        Ok(collapse(terms, Expr::And))
    }

    fn bond_unary(&mut self) -> Result<BondExpr, ChemError> {
        let Some(c) = self.peek() else {
            return self.err("unterminated bond expression");
        };
        self.pos += 1;
        let prim = match c {
            b'!' => return Ok(Expr::Not(Box::new(self.bond_unary()?))),
            b'-' | b'/' | b'\\' => BondPrim::Single,
            b'=' => BondPrim::Double,
            b'#' => BondPrim::Triple,
            b':' => BondPrim::Aromatic,
            b'~' => BondPrim::Any,
            b'@' => BondPrim::Ring,
            _ => return self.err("bad bond primitive"),
        };
        Ok(Expr::Prim(prim))
    }

    fn atom(&mut self) -> Result<AtomExpr, ChemError> {
        let c = self.text[self.pos];
        if c == b'[' {
            self.pos += 1;
            let e = self.atom_semi(true)?;
            if self.peek() != Some(b']') {
                return self.err("expected ']'");
            }
            self.pos += 1;
            return Ok(e);
        }
        let two = self.text.get(self.pos..self.pos + 2);
        let (prim, len) = match (c, two) {
            (_, Some(b"Cl")) => (AtomPrim::Element { z: 17, aromatic: Some(false) }, 2),
            (_, Some(b"Br")) => (AtomPrim::Element { z: 35, aromatic: Some(false) }, 2),
            (b'*', _) => (AtomPrim::Any, 1),
            (b'a', _) => (AtomPrim::Aromatic, 1),
            (b'A', _) => (AtomPrim::Aliphatic, 1),
            (b'B' | b'C' | b'N' | b'O' | b'P' | b'S' | b'F' | b'I', _) => {
                let z = element::atomic_number(&(c as char).to_string()).unwrap_or(0);
                (AtomPrim::Element { z, aromatic: Some(false) }, 1)
            }
            (b'b' | b'c' | b'n' | b'o' | b'p' | b's', _) => {
                let z = element::atomic_number(&(c.to_ascii_uppercase() as char).to_string())
                    .unwrap_or(0);
                (AtomPrim::Element { z, aromatic: Some(true) }, 1)
            }
            _ => return self.err(format!("unexpected character '{}'", c as char)),
        };
        self.pos += len;
        Ok(Expr::Prim(prim))
    }

    fn atom_semi(&mut self, first: bool) -> Result<AtomExpr, ChemError> {
        let mut terms = vec![self.atom_or(first)?];
        while self.peek() == Some(b';') {
            self.pos += 1;
            terms.push(self.atom_or(false)?);
        }
        Ok(collapse(terms, Expr::And))
    }

    fn atom_or(&mut self, first: bool) -> Result<AtomExpr, ChemError> {
        let mut terms = vec![self.atom_and(first)?];
        while self.peek() == Some(b',') {
            self.pos += 1;
            terms.push(self.atom_and(false)?);
        }
        Ok(collapse(terms, Expr::Or))
    }

    fn atom_and(&mut self, first: bool) -> Result<AtomExpr, ChemError> {
        let mut terms = vec![self.atom_unary(first)?];
        loop {
            match self.peek() {
                Some(b'&') => {
                    self.pos += 1;
                    terms.push(self.atom_unary(false)?);
                }
                Some(b']' | b',' | b';' | b')') | None => break,
                Some(_) => terms.push(self.atom_unary(false)?),
            }
        }
        Ok(collapse(terms, Expr::And))
    }

    fn atom_unary(&mut self, first: bool) -> Result<AtomExpr, ChemError> {
        if self.peek() == Some(b'!') {
            self.pos += 1;
            return Ok(Expr::Not(Box::new(self.atom_unary(false)?)));
        }
        Ok(Expr::Prim(self.atom_prim(first)?))
    }

    fn atom_prim(&mut self, first: bool) -> Result<AtomPrim, ChemError> {
        let Some(c) = self.peek() else {
            return self.err("unterminated atom expression");
        };
        let next = self.text.get(self.pos + 1).copied();
        // Two-letter element symbols take precedence.
        if c.is_ascii_uppercase() {
            if let Some(l) = next.filter(u8::is_ascii_lowercase) {
                let sym = format!("{}{}", c as char, l as char);
                if let Some(z) = element::atomic_number(&sym) {
                    self.pos += 2;
                    return Ok(AtomPrim::Element { z, aromatic: Some(false) });
                }
            }
        }
        if c.is_ascii_lowercase() {
            if let Some(l) = next {
                let z = match [c, l] {
                    [b's', b'e'] => Some(34),
                    [b'a', b's'] => Some(33),
                    [b't', b'e'] => Some(52),
                    _ => None,
                };
                if let Some(z) = z {
                    self.pos += 2;
                    return Ok(AtomPrim::Element { z, aromatic: Some(true) });
                }
            }
        }
        self.pos += 1;
        let prim = match c {
            b'*' => AtomPrim::Any,
            b'a' => AtomPrim::Aromatic,
            b'A' => AtomPrim::Aliphatic,
            b'#' => match self.number() {
                Some(n) if n <= 118 => AtomPrim::AtomicNumber(n as u8),
                _ => return self.err("bad atomic number"),
            },
            b'0'..=b'9' => {
                self.pos -= 1;
                let n = self.number().unwrap_or(0);
                AtomPrim::Isotope(n as u16)
            }
            b'D' => AtomPrim::Degree(self.number().unwrap_or(1)),
            b'X' => AtomPrim::Connections(self.number().unwrap_or(1)),
            b'v' => AtomPrim::Valence(self.number().unwrap_or(1)),
            b'h' => AtomPrim::ImplicitH(self.number()),
            b'R' => AtomPrim::RingCount(self.number()),
            b'r' => AtomPrim::RingSize(self.number()),
            b'x' => AtomPrim::RingBonds(self.number()),
            b'H' => {
                let n = self.number();
                let bare = matches!(self.peek(), Some(b']' | b'+' | b'-'));
                if first && n.is_none() && bare {
                    AtomPrim::Element { z: 1, aromatic: Some(false) }
                } else {
                    AtomPrim::TotalH(n.unwrap_or(1))
                }
            }
            b'+' | b'-' => {
                let sign = if c == b'+' { 1 } else { -1 };
                if let Some(n) = self.number() {
                    AtomPrim::Charge(sign * n as i32)
                } else {
                    let mut n = 1;
                    while self.peek() == Some(c) {
                        self.pos += 1;
                        n += 1;
                    }
                    AtomPrim::Charge(sign * n)
                }
            }
            b'@' => {
                // Chirality is not matched.
                while self.peek() == Some(b'@') {
                    self.pos += 1;
                }
                AtomPrim::Any
            }
            b'$' => {
                if self.peek() != Some(b'(') {
                    return self.err("expected '(' after '$'");
                }
                let start = self.pos + 1;
                let mut depth = 0;
                let mut end = None;
                for (i, &ch) in self.text[self.pos..].iter().enumerate() {
                    match ch {
                        b'(' => depth += 1,
                        b')' => {
                            depth -= 1;
                            if depth == 0 {
                                end = Some(self.pos + i);
                                break;
                            }
                        }
                        _ => {}
                    }
                }
                let Some(end) = end else {
                    return self.err("unterminated recursive expression");
                };
                let inner = &self.text[start..end];
                let inner_text = std::str::from_utf8(inner).unwrap_or("");
                let mut sub = SmartsParser {
                    text: inner,
                    pos: 0,
                    base: self.base + start,
                };
                let pat = sub.pattern(inner_text)?;
                self.pos = end + 1;
                AtomPrim::Recursive(Box::new(pat))
            }
            b'B' | b'C' | b'N' | b'O' | b'P' | b'S' | b'F' | b'I' | b'K' | b'U' | b'V'
            | b'W' | b'Y' => {
                let z = element::atomic_number(&(c as char).to_string()).unwrap_or(0);
                AtomPrim::Element { z, aromatic: Some(false) }
            }
            b'b' | b'c' | b'n' | b'o' | b'p' | b's' => {
                let z = element::atomic_number(&(c.to_ascii_uppercase() as char).to_string())
                    .unwrap_or(0);
                AtomPrim::Element { z, aromatic: Some(true) }
            }
            _ => {
                self.pos -= 1;
                return self.err(format!("unsupported primitive '{}'", c as char));
            }
        };
        Ok(prim)
    }
}

fn collapse<P>(mut terms: Vec<Expr<P>>, f: fn(Vec<Expr<P>>) -> Expr<P>) -> Expr<P> {
    if terms.len() == 1 {
        terms.pop().expect("one term")
    } else {
        f(terms)
    }
}

struct Matcher<'m> {
    mol: &'m Molecule,
    h_neighbors: Vec<u32>,
    memo: RefCell<HashMap<(usize, usize), bool>>,
}

impl<'m> Matcher<'m> {
    fn new(mol: &'m Molecule) -> Self {
        let h_neighbors = (0..mol.atoms.len())
            .map(|a| {
                mol.adjacency[a]
                    .iter()
                    .filter(|&&(n, _)| mol.atoms[n].element == 1)
                    .count() as u32
            })
            .collect();
        Matcher {
            mol,
            h_neighbors,
            memo: RefCell::new(HashMap::new()),
        }
    }

    fn atom_prim(&self, p: &AtomPrim, a: usize) -> bool {
        let mol = self.mol;
        let atom = &mol.atoms[a];
        match p {
            AtomPrim::Any => true,
            AtomPrim::Aromatic => atom.aromatic,
            AtomPrim::Aliphatic => !atom.aromatic,
            AtomPrim::Element { z, aromatic } => {
                atom.element == *z && aromatic.is_none_or(|ar| ar == atom.aromatic)
            }
            AtomPrim::AtomicNumber(z) => atom.element == *z,
            AtomPrim::Degree(n) => mol.degree(a) as u32 == *n,
            AtomPrim::Connections(n) => mol.total_degree(a) as u32 == *n,
            AtomPrim::TotalH(n) => u32::from(atom.total_h()) + self.h_neighbors[a] == *n,
            AtomPrim::ImplicitH(n) => match n {
                Some(n) => u32::from(atom.implicit_h) == *n,
                None => atom.implicit_h > 0,
            },
            AtomPrim::RingCount(n) => match n {
                Some(n) => mol.ring_count(a) as u32 == *n,
                None => mol.is_ring_atom(a),
            },
            AtomPrim::RingSize(n) => match n {
                Some(n) => mol.smallest_ring_size(a) == Some(*n as usize),
                None => mol.is_ring_atom(a),
            },
            AtomPrim::RingBonds(n) => {
                let k = mol.adjacency[a]
                    .iter()
                    .filter(|&&(_, bi)| mol.bonds[bi].ring_member)
                    .count() as u32;
                match n {
                    Some(n) => k == *n,
                    None => k > 0,
                }
            }
            AtomPrim::Valence(n) => mol.valence(a) == *n,
            AtomPrim::Charge(c) => i32::from(atom.formal_charge) == *c,
            AtomPrim::Isotope(i) => atom.isotope == Some(*i),
            AtomPrim::Recursive(sub) => {
                let key = (sub.as_ref() as *const Pattern as usize, a);
                if let Some(&v) = self.memo.borrow().get(&key) {
                    return v;
                }
                let mut found = false;
                self.embed(sub, Some(a), &mut |_| {
                    found = true;
                    false
                });
                self.memo.borrow_mut().insert(key, found);
                found
            }
        }
    }

    fn atom_expr(&self, e: &AtomExpr, a: usize) -> bool {
        match e {
            Expr::Prim(p) => self.atom_prim(p, a),
            Expr::Not(x) => !self.atom_expr(x, a),
            Expr::And(xs) => xs.iter().all(|x| self.atom_expr(x, a)),
            Expr::Or(xs) => xs.iter().any(|x| self.atom_expr(x, a)),
        }
    }

    fn bond_expr(&self, e: &Option<BondExpr>, bi: usize) -> bool {
        let b = &self.mol.bonds[bi];
        match e {
            None => matches!(b.order, BondOrder::Single | BondOrder::Aromatic),
            Some(e) => self.bond_eval(e, bi),
        }
    }

    fn bond_eval(&self, e: &BondExpr, bi: usize) -> bool {
        let b = &self.mol.bonds[bi];
        match e {
            Expr::Prim(p) => match p {
                BondPrim::Single => b.order == BondOrder::Single,
                BondPrim::Double => b.order == BondOrder::Double,
                BondPrim::Triple => b.order == BondOrder::Triple,
                BondPrim::Aromatic => b.order == BondOrder::Aromatic,
                BondPrim::Any => true,
                BondPrim::Ring => b.ring_member,
            },
            Expr::Not(x) => !self.bond_eval(x, bi),
            Expr::And(xs) => xs.iter().all(|x| self.bond_eval(x, bi)),
            Expr::Or(xs) => xs.iter().any(|x| self.bond_eval(x, bi)),
        }
    }

    /// Enumerate embeddings; `visit` returns false to stop early.
    fn embed(&self, pat: &Pattern, anchor: Option<usize>, visit: &mut dyn FnMut(&[usize]) -> bool) {
        let n = pat.atoms.len();
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (k, b) in pat.bonds.iter().enumerate() {
            adj[b.a].push((b.b, k));
            adj[b.b].push((b.a, k));
        }
        // Visit order: DFS per pattern component, each atom after a neighbour.
        let mut order: Vec<(usize, Option<usize>)> = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            order.push((s, None));
            let mut stack = vec![s];
            while let Some(v) = stack.pop() {
                for &(w, _) in adj[v].iter().rev() {
                    if !seen[w] {
                        seen[w] = true;
                        order.push((w, Some(v)));
                        stack.push(w);
                    }
                }
            }
        }
        let mut map = vec![usize::MAX; n];
        let mut used = vec![false; self.mol.atoms.len()];
        self.extend(pat, &adj, &order, 0, anchor, &mut map, &mut used, visit);
    }

    #[allow(clippy::too_many_arguments)]
    fn extend(
        &self,
        pat: &Pattern,
        adj: &[Vec<(usize, usize)>],
        order: &[(usize, Option<usize>)],
        depth: usize,
        anchor: Option<usize>,
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
        visit: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        if depth == order.len() {
            return visit(map);
        }
        let (q, parent) = order[depth];
        let candidates: Vec<usize> = match parent {
            Some(p) => self.mol.adjacency[map[p]].iter().map(|&(n, _)| n).collect(),
            None if depth == 0 && anchor.is_some() => vec![anchor.unwrap_or(0)],
            None => (0..self.mol.atoms.len()).collect(),
        };
        for t in candidates {
            if used[t] || !self.atom_expr(&pat.atoms[q], t) {
                continue;
            }
            let bonds_ok = adj[q].iter().all(|&(other, k)| {
                if map[other] == usize::MAX {
                    return true;
                }
                match self.mol.bond_between(t, map[other]) {
                    Some(bi) => self.bond_expr(&pat.bonds[k].expr, bi),
                    None => false,
                }
            });
            if !bonds_ok {
                continue;
            }
            map[q] = t;
            used[t] = true;
            let go_on = self.extend(pat, adj, order, depth + 1, anchor, map, used, visit);
            map[q] = usize::MAX;
            used[t] = false;
            if !go_on {
                return false;
            }
        }
        true
    }
}

/// Matching state reused across many queries on one molecule.
pub struct MatchContext<'m> {
    inner: Matcher<'m>,
}

impl<'m> MatchContext<'m> {
    pub fn new(mol: &'m Molecule) -> Self {
        MatchContext {
            inner: Matcher::new(mol),
        }
    }

    /// Distinct matches, deduplicated by matched atom set. Each match lists
    /// target atoms in pattern-atom order.
    pub fn find_matches(&self, pat: &Pattern) -> Vec<Vec<usize>> {
        self.inner.memo.borrow_mut().clear();
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        let mut out = Vec::new();
        self.inner.embed(pat, None, &mut |map| {
            let mut key = map.to_vec();
            key.sort_unstable();
            if seen.insert(key) {
                out.push(map.to_vec());
            }
            true
        });
        out
    }

    pub fn count_matches(&self, pat: &Pattern) -> usize {
        self.find_matches(pat).len()
    }

    pub fn has_match(&self, pat: &Pattern) -> bool {
        self.first_match(pat, None)
    }

    /// Whether some embedding maps the first pattern atom onto `atom`.
    pub fn matches_at(&self, pat: &Pattern, atom: usize) -> bool {
        self.first_match(pat, Some(atom))
    }

    fn first_match(&self, pat: &Pattern, anchor: Option<usize>) -> bool {
        self.inner.memo.borrow_mut().clear();
        let mut found = false;
        self.inner.embed(pat, anchor, &mut |_| {
            found = true;
            false
        });
        found
    }
}

pub fn find_matches(mol: &Molecule, pat: &Pattern) -> Vec<Vec<usize>> {
    MatchContext::new(mol).find_matches(pat)
}

pub fn count_matches(mol: &Molecule, pat: &Pattern) -> usize {
    MatchContext::new(mol).count_matches(pat)
}

pub fn has_match(mol: &Molecule, pat: &Pattern) -> bool {
    MatchContext::new(mol).has_match(pat)
}

pub fn matches_at(mol: &Molecule, pat: &Pattern, atom: usize) -> bool {
    MatchContext::new(mol).matches_at(pat, atom)
}

/// Named patterns loaded from `name<TAB>smarts` lines (`#` starts a comment).
#[derive(Debug, Clone)]
pub struct Catalog {
    pub entries: Vec<(String, Pattern)>,
}

impl Catalog {
    pub fn parse(text: &str) -> Result<Self, ChemError> {
        let mut entries = Vec::new();
        for line in text.lines() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, smarts) = line.split_once('\t').ok_or_else(|| {
                ChemError::syntax(0, format!("catalog line without a tab: {line}"))
            })?;
            entries.push((name.to_string(), parse_smarts(smarts.trim())?));
        }
        Ok(Catalog { entries })
    }

    /// Names of entries with at least one match.
    pub fn hits(&self, mol: &Molecule) -> Vec<&str> {
        let ctx = MatchContext::new(mol);
        self.entries
            .iter()
            .filter(|(_, p)| ctx.has_match(p))
            .map(|(n, _)| n.as_str())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse_smiles;

    fn count(smiles: &str, smarts: &str) -> usize {
        count_matches(&parse_smiles(smiles).unwrap(), &parse_smarts(smarts).unwrap())
    }

    #[test]
    fn basic_counts() {
        assert_eq!(count("CCO", "[OX2H]"), 1);
        assert_eq!(count("c1ccccc1", "c"), 6);
        assert_eq!(count("c1ccc2ccccc2c1", "c1ccccc1"), 2);
        assert_eq!(count("CCO", "[#6]"), 2);
        assert_eq!(count("CC(=O)O", "C=O"), 1);
        assert_eq!(count("CC(=O)O", "[$(C=O)]"), 1);
        assert_eq!(count("FC(F)(F)F", "F.F.F.F"), 1);
        assert_eq!(count("C1CCCCC1", "[R1]"), 6);
        assert_eq!(count("C1CCCCC1C", "[!R]"), 1);
        assert_eq!(count("C1CC1CC", "C-!@C"), 2);
        assert_eq!(count("[NH4+]", "[N+]"), 1);
        assert_eq!(count("[13CH4]", "[13C]"), 1);
    }

    #[test]
    fn operator_precedence() {
        // , binds tighter than ;
        assert_eq!(count("CNO", "[C,N;!O]"), 2);
        assert_eq!(count("CNO", "[!C;N,O]"), 2);
        assert_eq!(count("c1ccncc1", "[c,n;H0]"), 1);
    }

    #[test]
    fn rejects_unknown_primitive() {
        assert!(parse_smarts("[Zz]").is_err());
        assert!(parse_smarts("C(").is_err());
        assert!(parse_smarts("C1CC").is_err());
    }

    #[test]
    fn catalog_lines() {
        let cat = Catalog::parse("# comment\nhydroxyl\t[OX2H]\ncarbonyl\tC=O\n").unwrap();
        assert_eq!(cat.entries.len(), 2);
        let mol = parse_smiles("OCC=O").unwrap();
        assert_eq!(cat.hits(&mol), vec!["hydroxyl", "carbonyl"]);
    }
}
