use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::semiring::Value;
use crate::softcon::{Constraint, Var};

/// A source position. Ignored by equality and hashing so that ASTs compare
/// structurally.
#[derive(Debug, Clone, Copy, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl PartialEq for Pos {
    fn eq(&self, _: &Pos) -> bool {
        true
    }
}

impl Eq for Pos {}

impl Hash for Pos {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// A constraint occurring in an ask or tell.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CExpr {
    /// A named constraint instantiated on `args`. `bare` records that the
    /// source wrote just the name (arguments are then the declared ones).
    Named { name: String, args: Vec<Var>, bare: bool, pos: Pos },
    Diag(Var, Var),
    Const(Value),
    /// An already-built constraint (no surface syntax).
    Literal(Constraint),
}

impl CExpr {
    pub fn vars(&self) -> Vec<Var> {
        match self {
            CExpr::Named { args, .. } => args.clone(),
            CExpr::Diag(x, y) => vec![x.clone(), y.clone()],
            CExpr::Const(_) => Vec::new(),
            CExpr::Literal(c) => c.vars().to_vec(),
        }
    }
}

/// A cut level `phi`, optionally carrying the name it was written with.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CutLevel {
    pub label: Option<String>,
    pub constraint: Constraint,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Threshold {
    /// `->`: never blocks on consistency. Same as `Level(0)` and `Cut(0)`.
    Eventual,
    /// `->^a`
    Level(Value),
    /// `->[phi]`
    Cut(CutLevel),
}

/// `tell(c) -> A` / `ask(c) -> A` with its threshold.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Action {
    pub constraint: CExpr,
    pub threshold: Threshold,
    pub next: Box<Agent>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Agent {
    Stop,
    Tell(Action),
    Ask(Action),
    /// Guarded choice; every branch is an ask.
    Sum(Vec<Action>),
    Par(Box<Agent>, Box<Agent>),
    Exists(Var, Box<Agent>),
    Call { name: String, args: Vec<Var>, pos: Pos },
}

/// `p(x1, ..., xn) :: A`
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Decl {
    pub name: String,
    pub params: Vec<Var>,
    pub body: Agent,
    pub pos: Pos,
}

/// A named constraint definition usable as `name` or `name(args)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Template {
    pub name: String,
    pub params: Vec<Var>,
    pub constraint: Constraint,
}

impl Agent {
    pub fn tell(constraint: CExpr, threshold: Threshold, next: Agent) -> Agent {
        Agent::Tell(Action { constraint, threshold, next: Box::new(next) })
    }

    pub fn ask(constraint: CExpr, threshold: Threshold, next: Agent) -> Agent {
        Agent::Ask(Action { constraint, threshold, next: Box::new(next) })
    }

    pub fn par(left: Agent, right: Agent) -> Agent {
        Agent::Par(Box::new(left), Box::new(right))
    }

    pub fn exists(var: impl Into<Var>, body: Agent) -> Agent {
        Agent::Exists(var.into(), Box::new(body))
    }

    /// Free variables. Cut levels are closed and do not contribute.
    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<Var>) {
        match self {
            Agent::Stop => {}
            Agent::Tell(a) | Agent::Ask(a) => {
                out.extend(a.constraint.vars());
                a.next.collect_free(out);
            }
            Agent::Sum(branches) => {
                for a in branches {
                    out.extend(a.constraint.vars());
                    a.next.collect_free(out);
                }
            }
            Agent::Par(l, r) => {
                l.collect_free(out);
                r.collect_free(out);
            }
            Agent::Exists(x, body) => {
                let mut inner = body.free_vars();
                inner.remove(x);
                out.extend(inner);
            }
            Agent::Call { args, .. } => out.extend(args.iter().cloned()),
        }
    }

    /// Every variable name occurring in the term, bound or free.
    pub fn all_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.walk(&mut |a| match a {
            Agent::Tell(act) | Agent::Ask(act) => out.extend(act.constraint.vars()),
            Agent::Sum(bs) => bs.iter().for_each(|b| out.extend(b.constraint.vars())),
            Agent::Exists(x, _) => {
                out.insert(x.clone());
            }
            Agent::Call { args, .. } => out.extend(args.iter().cloned()),
            Agent::Stop | Agent::Par(..) => {}
        });
        out
    }

    /// Pre-order traversal.
    pub fn walk(&self, f: &mut impl FnMut(&Agent)) {
        f(self);
        match self {
            Agent::Stop | Agent::Call { .. } => {}
            Agent::Tell(a) | Agent::Ask(a) => a.next.walk(f),
            Agent::Sum(bs) => bs.iter().for_each(|b| b.next.walk(f)),
            Agent::Par(l, r) => {
                l.walk(f);
                r.walk(f);
            }
            Agent::Exists(_, body) => body.walk(f),
        }
    }

    /// Rewrites every action threshold (tells, asks and sum guards).
    pub fn map_thresholds(&self, f: &impl Fn(&Threshold) -> Threshold) -> Agent {
        let act = |a: &Action| Action {
            constraint: a.constraint.clone(),
            threshold: f(&a.threshold),
            next: Box::new(a.next.map_thresholds(f)),
        };
        match self {
            Agent::Stop | Agent::Call { .. } => self.clone(),
            Agent::Tell(a) => Agent::Tell(act(a)),
            Agent::Ask(a) => Agent::Ask(act(a)),
            Agent::Sum(bs) => Agent::Sum(bs.iter().map(act).collect()),
            Agent::Par(l, r) => Agent::par(l.map_thresholds(f), r.map_thresholds(f)),
            Agent::Exists(x, body) => Agent::exists(x.clone(), body.map_thresholds(f)),
        }
    }

    pub fn thresholds(&self) -> Vec<&Threshold> {
        let mut out = Vec::new();
        self.collect_thresholds(&mut out);
        out
    }

    fn collect_thresholds<'a>(&'a self, out: &mut Vec<&'a Threshold>) {
        match self {
            Agent::Stop | Agent::Call { .. } => {}
            Agent::Tell(a) | Agent::Ask(a) => {
                out.push(&a.threshold);
                a.next.collect_thresholds(out);
            }
            Agent::Sum(bs) => {
                for b in bs {
                    out.push(&b.threshold);
                    b.next.collect_thresholds(out);
                }
            }
            Agent::Par(l, r) => {
                l.collect_thresholds(out);
                r.collect_thresholds(out);
            }
            Agent::Exists(_, body) => body.collect_thresholds(out),
        }
    }
}

/// `A[to/from]`, capture-avoiding.
pub fn substitute(agent: &Agent, from: &Var, to: &Var) -> Agent {
    let map = BTreeMap::from([(from.clone(), to.clone())]);
    substitute_all(agent, &map)
}

/// Simultaneous capture-avoiding substitution of free variables.
pub fn substitute_all(agent: &Agent, map: &BTreeMap<Var, Var>) -> Agent {
    if map.is_empty() {
        return agent.clone();
    }
    let rename = |v: &Var| map.get(v).cloned().unwrap_or_else(|| v.clone());
    let act = |a: &Action| Action {
        constraint: substitute_cexpr(&a.constraint, map),
        threshold: a.threshold.clone(),
        next: Box::new(substitute_all(&a.next, map)),
    };
    match agent {
        Agent::Stop => Agent::Stop,
        Agent::Tell(a) => Agent::Tell(act(a)),
        Agent::Ask(a) => Agent::Ask(act(a)),
        Agent::Sum(bs) => Agent::Sum(bs.iter().map(act).collect()),
        Agent::Par(l, r) => Agent::par(substitute_all(l, map), substitute_all(r, map)),
        Agent::Call { name, args, pos } => Agent::Call {
            name: name.clone(),
            args: args.iter().map(rename).collect(),
            pos: *pos,
        },
        Agent::Exists(x, body) => {
            let free = body.free_vars();
            let inner: BTreeMap<Var, Var> = map
                .iter()
                .filter(|(k, _)| *k != x && free.contains(*k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect();
            if inner.is_empty() {
                return agent.clone();
            }
            if inner.values().any(|v| v == x) {
                let mut avoid = body.all_vars();
                avoid.extend(inner.keys().cloned());
                avoid.extend(inner.values().cloned());
                let fresh = fresh_name(x, &avoid);
                let renamed = substitute(body, x, &fresh);
                Agent::exists(fresh, substitute_all(&renamed, &inner))
            } else {
                Agent::exists(x.clone(), substitute_all(body, &inner))
            }
        }
    }
}

fn substitute_cexpr(c: &CExpr, map: &BTreeMap<Var, Var>) -> CExpr {
    let rename = |v: &Var| map.get(v).cloned().unwrap_or_else(|| v.clone());
    match c {
        CExpr::Named { name, args, bare, pos } => {
            let new: Vec<Var> = args.iter().map(rename).collect();
            let bare = *bare && new == *args;
            CExpr::Named { name: name.clone(), args: new, bare, pos: *pos }
        }
        CExpr::Diag(x, y) => CExpr::Diag(rename(x), rename(y)),
        CExpr::Const(_) | CExpr::Literal(_) => c.clone(),
    }
}

/// `base#k` for the smallest `k` not in `avoid`.
pub fn fresh_name(x: &Var, avoid: &BTreeSet<Var>) -> Var {
    (0..)
        .map(|k| Var::new(format!("{}#{k}", x.base())))
        .find(|v| !avoid.contains(v))
        .expect("unbounded search")
}
