//! Observables over all computations of a program, the cut transformation
//! and the iterative-cut ("branch and bound") don't-know solver.

use std::collections::HashSet;
use std::rc::Rc;
use std::str::FromStr;

use thiserror::Error;

use crate::engine::{Accumulator, Engine, EngineError, Leaf, RunLimits};
use crate::lang::{Agent, CutLevel, Program, Threshold};
use crate::softcon::{Constraint, ConstraintSystem};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObserveError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("branch and bound needs cut or eventual thresholds; found a level threshold `->^{0}`")]
    LevelThreshold(crate::semiring::Value),
}

/// Run statistics plus the projected success stores, deduplicated
/// structurally in discovery order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    pub successes: Vec<Constraint>,
    seen: HashSet<Constraint>,
    pub runs: u64,
    pub success_runs: u64,
    pub fail_runs: u64,
    pub hang_runs: u64,
    pub divergent_runs: u64,
    pub bound_runs: u64,
}

impl Accumulator for Summary {
    fn empty(&self) -> Self {
        Summary::default()
    }

    fn leaf(&mut self, _: &ConstraintSystem, leaf: Leaf<'_>) {
        self.runs += 1;
        match leaf {
            Leaf::Success(s) => {
                self.success_runs += 1;
                if self.seen.insert(s.clone()) {
                    self.successes.push(s.clone());
                }
            }
            Leaf::Fail => self.fail_runs += 1,
            Leaf::Hang => self.hang_runs += 1,
            Leaf::Divergent => self.divergent_runs += 1,
            Leaf::Bound => self.bound_runs += 1,
        }
    }

    fn merge(&mut self, other: &Self) {
        for s in &other.successes {
            if self.seen.insert(s.clone()) {
                self.successes.push(s.clone());
            }
        }
        self.runs = self.runs.saturating_add(other.runs);
        self.success_runs = self.success_runs.saturating_add(other.success_runs);
        self.fail_runs = self.fail_runs.saturating_add(other.fail_runs);
        self.hang_runs = self.hang_runs.saturating_add(other.hang_runs);
        self.divergent_runs = self.divergent_runs.saturating_add(other.divergent_runs);
        self.bound_runs = self.bound_runs.saturating_add(other.bound_runs);
    }
}

/// Explores every run of the main agent.
pub fn summarize(program: &Program, limits: RunLimits) -> Result<Summary, EngineError> {
    let engine = Engine::new(program, limits);
    engine.explore(engine.initial()?, &Summary::default())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observables {
    /// Final stores of successful runs projected onto the main agent's free
    /// variables, pointwise-distinct.
    pub success_set: Vec<Constraint>,
    /// `⊕` of `success_set`; `0` when it is empty.
    pub dk_solution: Constraint,
    pub fail: bool,
    /// Every run fails.
    pub fail_dk: bool,
    pub hang: bool,
    pub divergent: bool,
    pub bound_exceeded: bool,
    pub summary: Summary,
}

pub fn observe(program: &Program, limits: RunLimits) -> Result<Observables, EngineError> {
    let summary = summarize(program, limits)?;
    let sys = program.system();
    let success_set = dedup(sys, &summary.successes);
    Ok(Observables {
        dk_solution: sys.oplus_all(&success_set),
        success_set,
        fail: summary.fail_runs > 0,
        fail_dk: summary.runs > 0 && summary.fail_runs == summary.runs,
        hang: summary.hang_runs > 0,
        divergent: summary.divergent_runs > 0,
        bound_exceeded: summary.bound_runs > 0,
        summary,
    })
}

pub fn success_set(program: &Program, limits: RunLimits) -> Result<Vec<Constraint>, EngineError> {
    Ok(observe(program, limits)?.success_set)
}

pub fn dk_solution(program: &Program, limits: RunLimits) -> Result<Constraint, EngineError> {
    Ok(observe(program, limits)?.dk_solution)
}

/// Keeps the first of every group of pointwise-equal constraints.
pub fn dedup(sys: &ConstraintSystem, cs: &[Constraint]) -> Vec<Constraint> {
    let mut out: Vec<Constraint> = Vec::new();
    for c in cs {
        if !out.iter().any(|o| sys.equiv(o, c)) {
            out.push(c.clone());
        }
    }
    out
}

/// Post-filters on a success set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Filter {
    #[default]
    All,
    /// `⊑`-maximal elements.
    Best,
    /// `⊑`-minimal elements.
    Worst,
    /// Elements that are maximal or minimal.
    Frontier,
}

impl FromStr for Filter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(Filter::All),
            "best" => Ok(Filter::Best),
            "worst" => Ok(Filter::Worst),
            "frontier" => Ok(Filter::Frontier),
            _ => Err(format!("unknown filter `{s}` (expected all, best, worst or frontier)")),
        }
    }
}

impl Filter {
    pub fn apply(self, sys: &ConstraintSystem, set: &[Constraint]) -> Vec<Constraint> {
        let best = |c: &Constraint| !set.iter().any(|o| sys.strictly_below(c, o));
        let worst = |c: &Constraint| !set.iter().any(|o| sys.strictly_below(o, c));
        set.iter()
            .filter(|c| match self {
                Filter::All => true,
                Filter::Best => best(c),
                Filter::Worst => worst(c),
                Filter::Frontier => best(c) || worst(c),
            })
            .cloned()
            .collect()
    }
}

/// The `⊑`-maximal elements of `set`.
pub fn maximal(sys: &ConstraintSystem, set: &[Constraint]) -> Vec<Constraint> {
    Filter::Best.apply(sys, set)
}

/// Pointwise greatest lower bound; `1` for the empty set. Chains only.
pub fn glb(sys: &ConstraintSystem, set: &[Constraint]) -> Constraint {
    set.iter().fold(sys.one(), |acc, c| sys.meet(&acc, c))
}

/// `cut_ψ(A)`: raises every cut level `φ ⊏ ψ` to `ψ`. An eventual threshold
/// is a cut at `0` and is raised whenever `ψ ≠ 0`. Level thresholds are
/// left alone.
pub fn cut_agent(sys: &ConstraintSystem, agent: &Agent, psi: &Constraint) -> Agent {
    let raised = || Threshold::Cut(CutLevel { label: None, constraint: psi.clone() });
    let nonzero = !sys.equiv(psi, &sys.zero());
    agent.map_thresholds(&|t| match t {
        Threshold::Cut(phi) if sys.strictly_below(&phi.constraint, psi) => raised(),
        Threshold::Eventual if nonzero => raised(),
        other => other.clone(),
    })
}

/// Applies [`cut_agent`] to the main agent and every procedure body.
pub fn cut_program(program: &Program, psi: &Constraint) -> Program {
    let sys = program.system();
    program.map_agents(|a| cut_agent(sys, a, psi))
}

/// Leftmost search for the first success not below `psi`, counting the
/// maximal runs visited on the way.
#[derive(Debug, Clone)]
struct Search {
    psi: Rc<Constraint>,
    found: Option<Constraint>,
    leaves: u64,
}

impl Accumulator for Search {
    fn empty(&self) -> Self {
        Search { psi: self.psi.clone(), found: None, leaves: 0 }
    }

    fn leaf(&mut self, sys: &ConstraintSystem, leaf: Leaf<'_>) {
        self.leaves += 1;
        if let Leaf::Success(s) = leaf {
            if self.found.is_none() && !sys.leqc(s, &self.psi) {
                self.found = Some(s.clone());
            }
        }
    }

    fn merge(&mut self, other: &Self) {
        self.leaves = self.leaves.saturating_add(other.leaves);
        if self.found.is_none() {
            self.found.clone_from(&other.found);
        }
    }

    fn halted(&self) -> bool {
        self.found.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BbOutcome {
    pub solution: Constraint,
    /// Restarts, including the final one that finds nothing new.
    pub iterations: u64,
    /// Maximal runs visited over all restarts.
    pub runs_explored: u64,
    /// Maximal runs of the uncut program.
    pub naive_runs: u64,
    /// `naive_runs - runs_explored`, floored at zero.
    pub runs_pruned: u64,
}

/// Computes the don't-know solution by restarting with ever higher cut
/// levels: each round stops at the first success `σ` with `σ ⋢ ψ` and sets
/// `ψ := ψ ⊕ σ`; a round that finds none ends the search.
pub fn solve_bb(program: &Program, limits: RunLimits) -> Result<BbOutcome, ObserveError> {
    for agent in program.agents() {
        for t in agent.thresholds() {
            if let Threshold::Level(v) = t {
                return Err(ObserveError::LevelThreshold(*v));
            }
        }
    }
    let sys = program.system();
    let mut psi = sys.zero();
    let mut iterations = 0u64;
    let mut explored = 0u64;
    loop {
        iterations += 1;
        let cut = cut_program(program, &psi);
        let engine = Engine::new(&cut, limits);
        let proto = Search { psi: Rc::new(psi.clone()), found: None, leaves: 0 };
        let result = engine.explore(engine.initial()?, &proto)?;
        explored = explored.saturating_add(result.leaves);
        match result.found {
            Some(sigma) => psi = sys.oplus(&psi, &sigma),
            None => break,
        }
    }
    let naive_runs = summarize(program, limits)?.runs;
    Ok(BbOutcome {
        solution: psi,
        iterations,
        runs_explored: explored,
        naive_runs,
        runs_pruned: naive_runs.saturating_sub(explored),
    })
}
