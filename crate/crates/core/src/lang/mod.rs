//! The scc language: AST, parser, printer and static checks.

mod ast;
mod parse;
mod print;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

pub use ast::{
    fresh_name, substitute, substitute_all, Action, Agent, CExpr, CutLevel, Decl, Pos, Template, Threshold,
};
pub use parse::parse;

use crate::scsp::{Problem, ProblemError};
use crate::semiring::SemiringError;
use crate::softcon::{Constraint, ConstraintError, ConstraintSystem, Var};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LangError {
    #[error("{pos}: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: procedure defined twice: `{name}`")]
    DuplicateProcedure { pos: Pos, name: String },
    #[error("{pos}: constraint `{name}` defined twice")]
    DuplicateConstraint { pos: Pos, name: String },
    #[error("{pos}: unknown constraint `{name}`")]
    UnboundConstraint { pos: Pos, name: String },
    #[error("{pos}: unknown procedure `{name}`")]
    UnboundProcedure { pos: Pos, name: String },
    #[error("{pos}: `{name}` takes {expected} argument(s), found {found}")]
    Arity { pos: Pos, name: String, expected: usize, found: usize },
    #[error("{pos}: procedure `{name}` uses variables that are not parameters: {}", list(.vars))]
    FreeVars { pos: Pos, name: String, vars: Vec<Var> },
    #[error("{pos}: undeclared variable(s): {}", list(.vars))]
    Undeclared { pos: Pos, vars: Vec<Var> },
    #[error("{pos}: variable `{var}` listed twice")]
    DuplicateVar { pos: Pos, var: Var },
    #[error("{pos}: {source}")]
    Constraint { pos: Pos, source: ConstraintError },
    #[error("{pos}: {source}")]
    Semiring { pos: Pos, source: SemiringError },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("program has no `agent` clause")]
    NoAgent,
}

fn list(vars: &[Var]) -> String {
    vars.iter().map(|v| format!("`{v}`")).collect::<Vec<_>>().join(", ")
}

/// A parsed and validated program: header, constraint definitions,
/// procedures, and the optional main agent / interest clause.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    system: ConstraintSystem,
    vars: Vec<Var>,
    templates: Vec<Template>,
    procs: Vec<Decl>,
    main: Option<Agent>,
    interest: Option<Vec<Var>>,
}

impl Program {
    pub fn system(&self) -> &ConstraintSystem {
        &self.system
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    pub fn procs(&self) -> &[Decl] {
        &self.procs
    }

    pub fn main(&self) -> Option<&Agent> {
        self.main.as_ref()
    }

    pub fn interest(&self) -> Option<&[Var]> {
        self.interest.as_deref()
    }

    pub fn template(&self, name: &str) -> Option<&Template> {
        self.templates.iter().find(|t| t.name == name)
    }

    pub fn proc(&self, name: &str) -> Option<&Decl> {
        self.procs.iter().find(|d| d.name == name)
    }

    pub fn require_main(&self) -> Result<&Agent, LangError> {
        self.main.as_ref().ok_or(LangError::NoAgent)
    }

    /// Same program with a different main agent.
    pub fn with_main(&self, main: Agent) -> Program {
        Program { main: Some(main), ..self.clone() }
    }

    /// Applies `f` to the main agent and to every procedure body.
    pub fn map_agents(&self, f: impl Fn(&Agent) -> Agent) -> Program {
        Program {
            main: self.main.as_ref().map(&f),
            procs: self
                .procs
                .iter()
                .map(|d| Decl { body: f(&d.body), ..d.clone() })
                .collect(),
            ..self.clone()
        }
    }

    /// Every agent in the program: main first, then procedure bodies.
    pub fn agents(&self) -> impl Iterator<Item = &Agent> {
        self.main.iter().chain(self.procs.iter().map(|d| &d.body))
    }

    /// Builds the constraint a [`CExpr`] denotes.
    pub fn resolve(&self, c: &CExpr) -> Result<Constraint, LangError> {
        match c {
            CExpr::Named { name, args, pos, .. } => {
                let t = self
                    .template(name)
                    .ok_or_else(|| LangError::UnboundConstraint { pos: *pos, name: name.clone() })?;
                if t.params.len() != args.len() {
                    return Err(LangError::Arity {
                        pos: *pos,
                        name: name.clone(),
                        expected: t.params.len(),
                        found: args.len(),
                    });
                }
                let map: BTreeMap<Var, Var> = t.params.iter().cloned().zip(args.iter().cloned()).collect();
                Ok(self.system.rename(&t.constraint, &map))
            }
            CExpr::Diag(x, y) => Ok(self.system.diagonal(x, y)),
            CExpr::Const(v) => self
                .system
                .constant(*v)
                .map_err(|source| LangError::Constraint { pos: Pos::default(), source }),
            CExpr::Literal(c) => Ok(c.clone()),
        }
    }

    /// The soft CSP made of every named constraint, for `interest` files.
    pub fn problem(&self) -> Result<Problem, LangError> {
        let interest: BTreeSet<Var> = self.interest.iter().flatten().cloned().collect();
        let constraints = self.templates.iter().map(|t| t.constraint.clone()).collect();
        Ok(Problem::new(constraints, interest, self.vars.iter().cloned().collect())?)
    }
}
