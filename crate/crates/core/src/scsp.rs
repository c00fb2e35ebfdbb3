//! Soft constraint satisfaction problems `<C, con>`: solutions, best level and
//! consistency cuts.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::semiring::Value;
use crate::softcon::{Constraint, ConstraintSystem, Var};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("variable of interest `{0}` is not declared")]
    UndeclaredInterest(Var),
    #[error("constraint mentions undeclared variable `{0}`")]
    UndeclaredSupport(Var),
}

/// A soft CSP: constraints over declared variables plus the variables of interest.
#[derive(Debug, Clone)]
pub struct Problem {
    constraints: Vec<Constraint>,
    interest: BTreeSet<Var>,
    vars: BTreeSet<Var>,
}

impl Problem {
    pub fn new(
        constraints: Vec<Constraint>,
        interest: BTreeSet<Var>,
        vars: BTreeSet<Var>,
    ) -> Result<Problem, ProblemError> {
        if let Some(v) = interest.iter().find(|v| !vars.contains(*v)) {
            return Err(ProblemError::UndeclaredInterest(v.clone()));
        }
        for c in &constraints {
            if let Some(v) = c.vars().iter().find(|v| !vars.contains(*v)) {
                return Err(ProblemError::UndeclaredSupport(v.clone()));
            }
        }
        Ok(Problem { constraints, interest, vars })
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn interest(&self) -> &BTreeSet<Var> {
        &self.interest
    }

    pub fn vars(&self) -> &BTreeSet<Var> {
        &self.vars
    }
}

/// How a best level is mapped onto classical consistency (the `alpha` map).
#[derive(Debug, Clone)]
pub enum ConsistencyCut {
    /// Consistent unless the level is strictly below `a`.
    Level(Value),
    /// Consistent unless the combined constraint is strictly below `phi`.
    Cut(Constraint),
}

impl ConsistencyCut {
    /// `alpha` for a `Level` cut: monotone in `<=_S`. `Cut` mode needs the whole
    /// constraint, see [`consistent`].
    pub fn alpha(&self, sys: &ConstraintSystem, level: Value) -> Option<bool> {
        match self {
            ConsistencyCut::Level(a) => Some(!sys.semiring().lt(level, *a)),
            ConsistencyCut::Cut(_) => None,
        }
    }
}

/// `Sol(P) = (⊗C) ⇓ con`.
pub fn solve(sys: &ConstraintSystem, p: &Problem) -> Constraint {
    sys.project(&sys.tensor_all(&p.constraints), &p.interest)
}

/// `blevel(P) = Sol(P) ⇓ ∅`.
pub fn blevel(sys: &ConstraintSystem, p: &Problem) -> Value {
    sys.blevel(&sys.tensor_all(&p.constraints))
}

pub fn consistent(sys: &ConstraintSystem, p: &Problem, cut: &ConsistencyCut) -> bool {
    match cut {
        ConsistencyCut::Level(a) => !sys.semiring().lt(blevel(sys, p), *a),
        ConsistencyCut::Cut(phi) => !sys.strictly_below(&sys.tensor_all(&p.constraints), phi),
    }
}

/// `P` is consistent when some level above `0` is reached.
pub fn is_consistent(sys: &ConstraintSystem, p: &Problem) -> bool {
    let s = sys.semiring();
    !s.approx_eq(blevel(sys, p), s.zero())
}
