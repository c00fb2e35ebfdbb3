//! Functional soft constraints over a finite domain.
//!
//! A [`Constraint`] is stored as a dense table over its (sorted) support.
//! Every table operation enumerates tuples over the union of the supports
//! involved, never over the whole variable set, which is sound because a
//! constraint's value only depends on its support.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::semiring::{Semiring, SemiringError, Value};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstraintError {
    #[error(transparent)]
    Semiring(#[from] SemiringError),
    #[error("constraint over ({}) has no value for tuple ({}) and no default", join(.support), join(.tuple))]
    Incomplete { support: Vec<Var>, tuple: Vec<Atom> },
    #[error("tuple ({}) is listed twice", join(.0))]
    DuplicateRow(Vec<Atom>),
    #[error("tuple has {found} entries, expected {expected}")]
    Arity { expected: usize, found: usize },
    #[error("`{0}` is not in the domain")]
    UnknownAtom(Atom),
    #[error("variable `{0}` appears twice in a support")]
    DuplicateVar(Var),
    #[error("assignment does not bind `{0}`")]
    Unbound(Var),
    #[error("a domain needs at least one value")]
    EmptyDomain,
    #[error("domain value `{0}` is listed twice")]
    DuplicateAtom(Atom),
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
}

/// A variable name. Names containing `#` are reserved for fresh variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(Arc<str>);

impl Var {
    pub fn new(name: impl AsRef<str>) -> Var {
        Var(Arc::from(name.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The user-facing part of the name (before any `#k` suffix).
    pub fn base(&self) -> &str {
        self.0.split('#').next().unwrap_or(&self.0)
    }

    pub fn is_fresh(&self) -> bool {
        self.0.contains('#')
    }

    /// Whether `name` is a legal source-level identifier.
    pub fn is_identifier(name: &str) -> bool {
        let mut chars = name.chars();
        matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
            && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Var {
    fn from(s: &str) -> Var {
        Var::new(s)
    }
}

/// A domain element: an identifier or an integer literal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Int(i64),
    Name(Arc<str>),
}

impl Atom {
    pub fn name(s: &str) -> Atom {
        Atom::Name(Arc::from(s))
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Int(i) => write!(f, "{i}"),
            Atom::Name(s) => f.write_str(s),
        }
    }
}

impl From<i64> for Atom {
    fn from(i: i64) -> Atom {
        Atom::Int(i)
    }
}

impl From<&str> for Atom {
    fn from(s: &str) -> Atom {
        Atom::name(s)
    }
}

/// The finite domain `D`, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Domain {
    atoms: Vec<Atom>,
}

impl Domain {
    pub fn new(atoms: Vec<Atom>) -> Result<Domain, ConstraintError> {
        if atoms.is_empty() {
            return Err(ConstraintError::EmptyDomain);
        }
        let mut seen = BTreeSet::new();
        for a in &atoms {
            if !seen.insert(a) {
                return Err(ConstraintError::DuplicateAtom(a.clone()));
            }
        }
        Ok(Domain { atoms })
    }

    /// Integer domain `lo..=hi`.
    pub fn range(lo: i64, hi: i64) -> Domain {
        Domain::new((lo..=hi).map(Atom::Int).collect()).expect("nonempty range")
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom(&self, index: usize) -> &Atom {
        &self.atoms[index]
    }

    pub fn index_of(&self, atom: &Atom) -> Result<usize, ConstraintError> {
        self.atoms
            .iter()
            .position(|a| a == atom)
            .ok_or_else(|| ConstraintError::UnknownAtom(atom.clone()))
    }
}

/// A (partial) map from variables to domain values, written `eta` in the algebra.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Assignment(BTreeMap<Var, Atom>);

impl Assignment {
    pub fn new() -> Assignment {
        Assignment::default()
    }

    pub fn with(mut self, var: impl Into<Var>, atom: impl Into<Atom>) -> Assignment {
        self.0.insert(var.into(), atom.into());
        self
    }

    pub fn set(&mut self, var: Var, atom: Atom) {
        self.0.insert(var, atom);
    }

    pub fn get(&self, var: &Var) -> Option<&Atom> {
        self.0.get(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Atom)> {
        self.0.iter()
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(v, a)| format!("{v}={a}")).collect();
        f.write_str(&parts.join(", "))
    }
}

/// A soft constraint: a dense table indexed by tuples over `support`.
///
/// `support` is kept sorted; the table is row-major with the first support
/// variable most significant and domain values in declaration order. Derived
/// equality and hashing are structural (exact bits); use
/// [`ConstraintSystem::equiv`] for pointwise comparison.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Constraint {
    support: Vec<Var>,
    table: Arc<[Value]>,
}

impl Constraint {
    /// The declared support. May be larger than [`ConstraintSystem::support`].
    pub fn vars(&self) -> &[Var] {
        &self.support
    }

    pub fn table(&self) -> &[Value] {
        &self.table
    }

    /// The value of a constraint with empty declared support.
    pub fn as_constant(&self) -> Option<Value> {
        if self.support.is_empty() {
            Some(self.table[0])
        } else {
            None
        }
    }
}

/// Iterates all tuples over `arity` positions with `n` values each, last
/// position fastest.
struct Tuples {
    digits: Vec<usize>,
    n: usize,
    remaining: usize,
}

impl Tuples {
    fn new(n: usize, arity: usize) -> Tuples {
        Tuples { digits: vec![0; arity], n, remaining: n.pow(arity as u32) }
    }

    fn next(&mut self) -> Option<&[usize]> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        Some(&self.digits)
    }

    fn advance(&mut self) {
        for d in self.digits.iter_mut().rev() {
            *d += 1;
            if *d < self.n {
                return;
            }
            *d = 0;
        }
    }
}

/// Calls `f` on every tuple over `arity` positions.
fn for_each_tuple(n: usize, arity: usize, mut f: impl FnMut(&[usize])) {
    let mut tuples = Tuples::new(n, arity);
    while let Some(t) = tuples.next() {
        f(t);
        tuples.advance();
    }
}

/// For each variable of `sub`, its position inside `sup` (both sorted).
fn positions(sub: &[Var], sup: &[Var]) -> Vec<usize> {
    sub.iter()
        .map(|v| sup.binary_search(v).expect("sub-support must be contained in the super-support"))
        .collect()
}

fn index_of(digits: &[usize], positions: &[usize], n: usize) -> usize {
    positions.iter().fold(0, |acc, &p| acc * n + digits[p])
}

fn flat(digits: &[usize], n: usize) -> usize {
    digits.iter().fold(0, |acc, &d| acc * n + d)
}

fn union(a: &[Var], b: &[Var]) -> Vec<Var> {
    let set: BTreeSet<&Var> = a.iter().chain(b).collect();
    set.into_iter().cloned().collect()
}

/// A soft constraint system: a semiring together with the finite domain every
/// variable ranges over. All constraint algebra goes through it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConstraintSystem {
    semiring: Semiring,
    domain: Arc<Domain>,
}

impl ConstraintSystem {
    pub fn new(semiring: Semiring, domain: Domain) -> ConstraintSystem {
        ConstraintSystem { semiring, domain: Arc::new(domain) }
    }

    pub fn semiring(&self) -> &Semiring {
        &self.semiring
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    fn n(&self) -> usize {
        self.domain.len()
    }

    fn raw(&self, support: Vec<Var>, table: Vec<Value>) -> Constraint {
        debug_assert_eq!(table.len(), self.n().pow(support.len() as u32));
        Constraint { support, table: table.into() }
    }

    pub fn constant(&self, v: Value) -> Result<Constraint, ConstraintError> {
        let v = self.semiring.check(v)?;
        Ok(self.raw(Vec::new(), vec![v]))
    }

    /// The constant `1`, unit of `⊗` and top of `⊑`; also the initial store.
    pub fn one(&self) -> Constraint {
        self.raw(Vec::new(), vec![self.semiring.one()])
    }

    /// The constant `0`, unit of `⊕` and bottom of `⊑`.
    pub fn zero(&self) -> Constraint {
        self.raw(Vec::new(), vec![self.semiring.zero()])
    }

    /// Builds a constraint from explicit rows over `vars` (in the given order),
    /// filling unlisted tuples with `default`.
    pub fn table(
        &self,
        vars: &[Var],
        rows: &[(Vec<Atom>, Value)],
        default: Option<Value>,
    ) -> Result<Constraint, ConstraintError> {
        let mut sorted = vars.to_vec();
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(ConstraintError::DuplicateVar(w[0].clone()));
        }
        let default = default.map(|d| self.semiring.check(d)).transpose()?;
        let n = self.n();
        let pos = positions(vars, &sorted);
        let mut table: Vec<Option<Value>> = vec![default; n.pow(sorted.len() as u32)];
        let mut seen = BTreeSet::new();
        for (tuple, value) in rows {
            if tuple.len() != vars.len() {
                return Err(ConstraintError::Arity { expected: vars.len(), found: tuple.len() });
            }
            let mut digits = vec![0; sorted.len()];
            for (atom, &p) in tuple.iter().zip(&pos) {
                digits[p] = self.domain.index_of(atom)?;
            }
            let idx = flat(&digits, n);
            if !seen.insert(idx) {
                return Err(ConstraintError::DuplicateRow(tuple.clone()));
            }
            table[idx] = Some(self.semiring.check(*value)?);
        }
        let mut dense = Vec::with_capacity(table.len());
        let mut missing = None;
        for_each_tuple(n, sorted.len(), |digits| {
            let idx = dense.len();
            match table[idx] {
                Some(v) => dense.push(v),
                None => {
                    if missing.is_none() {
                        missing = Some(digits.to_vec());
                    }
                    dense.push(self.semiring.zero());
                }
            }
        });
        if let Some(digits) = missing {
            let tuple = vars
                .iter()
                .zip(&pos)
                .map(|(_, &p)| self.domain.atom(digits[p]).clone())
                .collect();
            return Err(ConstraintError::Incomplete { support: vars.to_vec(), tuple });
        }
        Ok(self.raw(sorted, dense))
    }

    /// Tabulates `f` over all tuples of `vars` (given in `vars` order).
    pub fn tabulate(
        &self,
        vars: &[Var],
        mut f: impl FnMut(&[&Atom]) -> Value,
    ) -> Result<Constraint, ConstraintError> {
        let mut rows = Vec::new();
        for_each_tuple(self.n(), vars.len(), |digits| {
            let atoms: Vec<&Atom> = digits.iter().map(|&d| self.domain.atom(d)).collect();
            let v = f(&atoms);
            rows.push((atoms.into_iter().cloned().collect(), v));
        });
        self.table(vars, &rows, None)
    }

    /// The diagonal element `d_xy`: `1` where `x = y`, `0` elsewhere.
    pub fn diagonal(&self, x: &Var, y: &Var) -> Constraint {
        if x == y {
            return self.one();
        }
        let (one, zero) = (self.semiring.one(), self.semiring.zero());
        let support = union(std::slice::from_ref(x), std::slice::from_ref(y));
        let mut table = Vec::with_capacity(self.n() * self.n());
        for_each_tuple(self.n(), 2, |d| table.push(if d[0] == d[1] { one } else { zero }));
        self.raw(support, table)
    }

    /// Value of `c` under `eta`. Only the support variables need to be bound.
    pub fn eval(&self, c: &Constraint, eta: &Assignment) -> Result<Value, ConstraintError> {
        let mut idx = 0;
        for v in &c.support {
            let atom = eta.get(v).ok_or_else(|| ConstraintError::Unbound(v.clone()))?;
            idx = idx * self.n() + self.domain.index_of(atom)?;
        }
        Ok(c.table[idx])
    }

    fn assignment(&self, vars: &[Var], digits: &[usize]) -> Assignment {
        let mut eta = Assignment::new();
        for (v, &d) in vars.iter().zip(digits) {
            eta.set(v.clone(), self.domain.atom(d).clone());
        }
        eta
    }

    /// Rows of `c` as (assignment of its declared support, value), in table order.
    pub fn rows(&self, c: &Constraint) -> Vec<(Vec<Atom>, Value)> {
        let mut out = Vec::with_capacity(c.table.len());
        let mut i = 0;
        for_each_tuple(self.n(), c.support.len(), |digits| {
            let tuple = digits.iter().map(|&d| self.domain.atom(d).clone()).collect();
            out.push((tuple, c.table[i]));
            i += 1;
        });
        out
    }

    /// Whether the value of `c` changes with the value of its `pos`-th variable.
    fn depends_on(&self, c: &Constraint, pos: usize) -> bool {
        let n = self.n();
        let k = c.support.len();
        let stride = n.pow((k - pos - 1) as u32);
        let mut i = 0;
        let mut depends = false;
        for_each_tuple(n, k, |digits| {
            if !depends && digits[pos] != 0 {
                let base = i - digits[pos] * stride;
                if !self.semiring.approx_eq(c.table[i], c.table[base]) {
                    depends = true;
                }
            }
            i += 1;
        });
        depends
    }

    /// The semantic support: declared variables the value actually depends on.
    pub fn support(&self, c: &Constraint) -> BTreeSet<Var> {
        (0..c.support.len())
            .filter(|&p| self.depends_on(c, p))
            .map(|p| c.support[p].clone())
            .collect()
    }

    /// Restricts the declared support to the semantic one.
    pub fn normalize(&self, c: &Constraint) -> Constraint {
        let keep = self.support(c);
        if keep.len() == c.support.len() {
            return c.clone();
        }
        let kept: Vec<Var> = keep.into_iter().collect();
        let pos = positions(&kept, &c.support);
        let n = self.n();
        let mut table = Vec::with_capacity(n.pow(kept.len() as u32));
        let mut full = vec![0; c.support.len()];
        for_each_tuple(n, kept.len(), |digits| {
            for (&p, &d) in pos.iter().zip(digits) {
                full[p] = d;
            }
            let idx = flat(&full, n);
            table.push(c.table[idx]);
        });
        self.raw(kept, table)
    }

    /// Pointwise combination of two constraints over the union of their supports.
    fn zip_with(&self, a: &Constraint, b: &Constraint, f: impl Fn(Value, Value) -> Value) -> Constraint {
        let support = union(&a.support, &b.support);
        let (pa, pb) = (positions(&a.support, &support), positions(&b.support, &support));
        let n = self.n();
        let mut table = Vec::with_capacity(n.pow(support.len() as u32));
        for_each_tuple(n, support.len(), |d| {
            table.push(f(a.table[index_of(d, &pa, n)], b.table[index_of(d, &pb, n)]));
        });
        self.raw(support, table)
    }

    /// Whether `pred` holds at every tuple over the union of both supports.
    fn all_pairs(&self, a: &Constraint, b: &Constraint, pred: impl Fn(Value, Value) -> bool) -> bool {
        self.first_violation(a, b, pred).is_none()
    }

    fn first_violation(
        &self,
        a: &Constraint,
        b: &Constraint,
        pred: impl Fn(Value, Value) -> bool,
    ) -> Option<(Vec<Var>, Vec<usize>)> {
        let support = union(&a.support, &b.support);
        let (pa, pb) = (positions(&a.support, &support), positions(&b.support, &support));
        let n = self.n();
        let mut tuples = Tuples::new(n, support.len());
        while let Some(d) = tuples.next() {
            if !pred(a.table[index_of(d, &pa, n)], b.table[index_of(d, &pb, n)]) {
                return Some((support, d.to_vec()));
            }
            tuples.advance();
        }
        None
    }

    /// `c1 ⊗ c2`.
    pub fn tensor(&self, a: &Constraint, b: &Constraint) -> Constraint {
        let s = self.semiring;
        self.zip_with(a, b, |x, y| s.times(x, y))
    }

    /// `⊗` over a collection; the empty fold is `1`.
    pub fn tensor_all<'a>(&self, cs: impl IntoIterator<Item = &'a Constraint>) -> Constraint {
        cs.into_iter().fold(self.one(), |acc, c| self.tensor(&acc, c))
    }

    /// `c1 ⊕ c2`.
    pub fn oplus(&self, a: &Constraint, b: &Constraint) -> Constraint {
        let s = self.semiring;
        self.zip_with(a, b, |x, y| s.plus(x, y))
    }

    /// `⊕` over a collection; the empty fold is `0`.
    pub fn oplus_all<'a>(&self, cs: impl IntoIterator<Item = &'a Constraint>) -> Constraint {
        cs.into_iter().fold(self.zero(), |acc, c| self.oplus(&acc, c))
    }

    /// Pointwise greatest lower bound. Valid as a lattice meet only because
    /// the built-in carriers are chains.
    pub fn meet(&self, a: &Constraint, b: &Constraint) -> Constraint {
        let s = self.semiring;
        self.zip_with(a, b, |x, y| s.meet(x, y))
    }

    /// `c ⇓ I`: sums out every support variable not in `keep`.
    pub fn project(&self, c: &Constraint, keep: &BTreeSet<Var>) -> Constraint {
        let kept: Vec<Var> = c.support.iter().filter(|v| keep.contains(v)).cloned().collect();
        if kept.len() == c.support.len() {
            return c.clone();
        }
        let pos = positions(&kept, &c.support);
        let n = self.n();
        let mut table = vec![self.semiring.zero(); n.pow(kept.len() as u32)];
        let mut i = 0;
        for_each_tuple(n, c.support.len(), |d| {
            let j = index_of(d, &pos, n);
            table[j] = self.semiring.plus(table[j], c.table[i]);
            i += 1;
        });
        self.raw(kept, table)
    }

    /// `∃x c`.
    pub fn hide(&self, c: &Constraint, x: &Var) -> Constraint {
        let keep: BTreeSet<Var> = c.support.iter().filter(|v| *v != x).cloned().collect();
        self.project(c, &keep)
    }

    /// `c ⇓ ∅`: the best level of `c`.
    pub fn blevel(&self, c: &Constraint) -> Value {
        self.project(c, &BTreeSet::new()).table[0]
    }

    /// `c1 ⊑ c2`.
    pub fn leqc(&self, a: &Constraint, b: &Constraint) -> bool {
        let s = self.semiring;
        self.all_pairs(a, b, |x, y| s.le(x, y))
    }

    /// Pointwise equality (up to the semiring tolerance).
    pub fn equiv(&self, a: &Constraint, b: &Constraint) -> bool {
        let s = self.semiring;
        self.all_pairs(a, b, |x, y| s.approx_eq(x, y))
    }

    /// `c1 ⊏ c2`. False both ways for incomparable constraints.
    pub fn strictly_below(&self, a: &Constraint, b: &Constraint) -> bool {
        self.leqc(a, b) && !self.equiv(a, b)
    }

    /// `C ⊢ c`, i.e. `⊗C ⊑ c`.
    pub fn entails<'a>(&self, store: impl IntoIterator<Item = &'a Constraint>, c: &Constraint) -> bool {
        self.leqc(&self.tensor_all(store), c)
    }

    /// Assignments (over the union of supports) where `store ⊑ c` fails,
    /// i.e. witnesses of `store ⊬ c`, with the two values found there.
    pub fn entailment_witnesses(&self, store: &Constraint, c: &Constraint) -> Vec<(Assignment, Value, Value)> {
        let support = union(&store.support, &c.support);
        let (ps, pc) = (positions(&store.support, &support), positions(&c.support, &support));
        let n = self.n();
        let mut out = Vec::new();
        for_each_tuple(n, support.len(), |d| {
            let (x, y) = (store.table[index_of(d, &ps, n)], c.table[index_of(d, &pc, n)]);
            if !self.semiring.le(x, y) {
                out.push((self.assignment(&support, d), x, y));
            }
        });
        out
    }

    /// First witness of `store ⊬ c` in enumeration order.
    pub fn entailment_witness(&self, store: &Constraint, c: &Constraint) -> Option<Assignment> {
        let s = self.semiring;
        self.first_violation(store, c, |x, y| s.le(x, y))
            .map(|(support, digits)| self.assignment(&support, &digits))
    }

    /// Renames support variables; several variables may be mapped to the same
    /// target, which restricts the table to the tuples where they agree.
    pub fn rename(&self, c: &Constraint, map: &BTreeMap<Var, Var>) -> Constraint {
        let target = |v: &Var| map.get(v).cloned().unwrap_or_else(|| v.clone());
        let renamed: Vec<Var> = c.support.iter().map(target).collect();
        let mut support = renamed.clone();
        support.sort();
        support.dedup();
        if support == renamed {
            return Constraint { support, table: c.table.clone() };
        }
        let pos = positions(&renamed, &support);
        let n = self.n();
        let mut table = Vec::with_capacity(n.pow(support.len() as u32));
        for_each_tuple(n, support.len(), |d| table.push(c.table[index_of(d, &pos, n)]));
        self.raw(support, table)
    }
}
