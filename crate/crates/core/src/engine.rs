//! The scc transition system.
//!
//! Configurations are `(agent, store)` pairs. [`Engine::step`] yields every
//! successor under the transition, failure and hang rules; the explorers
//! below walk the resulting tree depth-first with an explicit stack, so
//! long runs cannot overflow the call stack.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::lang::{fresh_name, substitute, substitute_all, Action, Agent, CExpr, LangError, Program, Threshold};
use crate::softcon::{Constraint, ConstraintSystem, Var};

pub const DEFAULT_MAX_STEPS: usize = 100_000;
pub const DEFAULT_MAX_FRESH: usize = 1_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("call to undefined procedure `{0}`")]
    UnboundProcedure(String),
    #[error("`{name}` takes {expected} argument(s), found {found}")]
    Arity { name: String, expected: usize, found: usize },
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error("limits must be positive")]
    Limits,
}

/// Exploration limits. A run that would take more than `max_steps`
/// transitions or introduce more than `max_fresh` fresh variables is
/// reported as [`Terminal::BoundExceeded`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunLimits {
    pub max_steps: usize,
    pub max_fresh: usize,
}

impl Default for RunLimits {
    fn default() -> Self {
        RunLimits { max_steps: DEFAULT_MAX_STEPS, max_fresh: DEFAULT_MAX_FRESH }
    }
}

impl RunLimits {
    pub fn new(max_steps: usize, max_fresh: usize) -> Result<RunLimits, EngineError> {
        if max_steps == 0 || max_fresh == 0 {
            return Err(EngineError::Limits);
        }
        Ok(RunLimits { max_steps, max_fresh })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    Stop,
    ValuedTell,
    ValuedTellFail,
    Tell,
    TellFail,
    ValuedAsk,
    ValuedAskFail,
    ValuedAskHang,
    Ask,
    AskFail,
    AskHang,
    Nondeterminism,
    NondeterminismFail,
    NondeterminismHang,
    Parallelism,
    ParallelismFail,
    HiddenVariables,
    ProcedureCall,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Stop => "Stop",
            Rule::ValuedTell => "Valued-tell",
            Rule::ValuedTellFail => "Valued-tell_1",
            Rule::Tell => "Tell",
            Rule::TellFail => "Tell_1",
            Rule::ValuedAsk => "Valued-ask",
            Rule::ValuedAskFail => "Valued-ask_1",
            Rule::ValuedAskHang => "Valued-ask_2",
            Rule::Ask => "Ask",
            Rule::AskFail => "Ask_1",
            Rule::AskHang => "Ask_2",
            Rule::Nondeterminism => "Nondeterminism",
            Rule::NondeterminismFail => "Nondeterminism_1",
            Rule::NondeterminismHang => "Nondeterminism_2",
            Rule::Parallelism => "Parallelism",
            Rule::ParallelismFail => "Parallelism_1",
            Rule::HiddenVariables => "Hidden-variables",
            Rule::ProcedureCall => "Procedure-call",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum State {
    Running { agent: Agent, store: Constraint },
    Success(Constraint),
    Fail,
    Hang,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub state: State,
    /// Fresh variables introduced so far on this run.
    pub fresh: usize,
    /// Transitions taken so far on this run.
    pub steps: usize,
}

impl Configuration {
    pub fn running(&self) -> Option<(&Agent, &Constraint)> {
        match &self.state {
            State::Running { agent, store } => Some((agent, store)),
            _ => None,
        }
    }
}

/// How a maximal run ended.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Terminal {
    Success(Constraint),
    Fail,
    Hang,
    BoundExceeded,
    Divergent,
}

impl Terminal {
    pub fn name(&self) -> &'static str {
        match self {
            Terminal::Success(_) => "success",
            Terminal::Fail => "fail",
            Terminal::Hang => "hang",
            Terminal::BoundExceeded => "bound_exceeded",
            Terminal::Divergent => "divergent",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub initial: Configuration,
    /// Every transition taken, with the configuration it led to.
    pub trace: Vec<(Rule, Configuration)>,
    pub terminal: Terminal,
}

impl Run {
    pub fn steps(&self) -> usize {
        self.trace.len()
    }

    /// The last store seen on the run.
    pub fn final_store(&self) -> &Constraint {
        fn store_of(c: &Configuration) -> Option<&Constraint> {
            match &c.state {
                State::Running { store, .. } | State::Success(store) => Some(store),
                _ => None,
            }
        }
        self.trace
            .iter()
            .rev()
            .find_map(|(_, c)| store_of(c))
            .or_else(|| store_of(&self.initial))
            .expect("initial configuration is running")
    }

    pub fn rules(&self) -> Vec<Rule> {
        self.trace.iter().map(|(r, _)| *r).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    Leftmost,
    Random(u64),
}

/// Outcome of one redex.
enum Local {
    /// `next == None` means the redex terminated successfully.
    Go { rule: Rule, next: Option<Agent>, store: Constraint, fresh: usize },
    Fail(Rule),
    Stuck(Rule),
}

/// Result of reaching a configuration during exploration.
pub(crate) enum Leaf<'a> {
    Success(&'a Constraint),
    Fail,
    Hang,
    Divergent,
    Bound,
}

type Key = (Agent, Constraint);

pub struct Engine<'p> {
    program: &'p Program,
    limits: RunLimits,
    observed: BTreeSet<Var>,
    cache: RefCell<HashMap<CExpr, Constraint>>,
}

impl<'p> Engine<'p> {
    pub fn new(program: &'p Program, limits: RunLimits) -> Engine<'p> {
        let observed = program.main().map(Agent::free_vars).unwrap_or_default();
        Engine { program, limits, observed, cache: RefCell::default() }
    }

    pub fn program(&self) -> &Program {
        self.program
    }

    pub fn system(&self) -> &ConstraintSystem {
        self.program.system()
    }

    pub fn limits(&self) -> RunLimits {
        self.limits
    }

    /// Free variables of the main agent: what observables project onto.
    pub fn observed(&self) -> &BTreeSet<Var> {
        &self.observed
    }

    /// `<main, 1>`.
    pub fn initial(&self) -> Result<Configuration, EngineError> {
        let agent = self.program.require_main()?.clone();
        Ok(self.start(agent))
    }

    pub fn start(&self, agent: Agent) -> Configuration {
        Configuration { state: State::Running { agent, store: self.system().one() }, fresh: 0, steps: 0 }
    }

    pub fn resolve(&self, c: &CExpr) -> Result<Constraint, EngineError> {
        if let Some(hit) = self.cache.borrow().get(c) {
            return Ok(hit.clone());
        }
        let built = self.program.resolve(c)?;
        self.cache.borrow_mut().insert(c.clone(), built.clone());
        Ok(built)
    }

    /// All successors of a running configuration. A configuration where no
    /// rule applies anywhere has a single `Hang` successor. Terminal
    /// configurations have none.
    pub fn step(&self, cfg: &Configuration) -> Result<Vec<(Rule, Configuration)>, EngineError> {
        let Some((agent, store)) = cfg.running() else { return Ok(Vec::new()) };
        let mut avoid = agent.all_vars();
        avoid.extend(store.vars().iter().cloned());
        let locals = self.local(agent, store, &avoid)?;
        let mut out: Vec<(Rule, Configuration)> = Vec::new();
        let mut seen: HashSet<State> = HashSet::new();
        let mut stuck = None;
        let steps = cfg.steps + 1;
        for l in locals {
            let (rule, state, fresh) = match l {
                Local::Go { rule, next: Some(agent), store, fresh } => (rule, State::Running { agent, store }, fresh),
                Local::Go { rule, next: None, store, fresh } => (rule, State::Success(store), fresh),
                Local::Fail(rule) => (rule, State::Fail, 0),
                Local::Stuck(rule) => {
                    stuck.get_or_insert(rule);
                    continue;
                }
            };
            if seen.insert(state.clone()) {
                out.push((rule, Configuration { state, fresh: cfg.fresh + fresh, steps }));
            }
        }
        if out.is_empty() {
            let rule = stuck.expect("every agent form yields a move, a failure or a suspension");
            out.push((rule, Configuration { state: State::Hang, fresh: cfg.fresh, steps }));
        }
        Ok(out)
    }

    fn local(&self, agent: &Agent, store: &Constraint, avoid: &BTreeSet<Var>) -> Result<Vec<Local>, EngineError> {
        let sys = self.system();
        Ok(match agent {
            Agent::Stop => vec![Local::Go { rule: Rule::Stop, next: None, store: store.clone(), fresh: 0 }],
            Agent::Tell(act) => {
                let c = self.resolve(&act.constraint)?;
                let next = sys.normalize(&sys.tensor(store, &c));
                let (ok, fail) = match &act.threshold {
                    Threshold::Eventual => (true, Rule::TellFail),
                    Threshold::Level(a) => (!sys.semiring().lt(sys.blevel(&next), *a), Rule::ValuedTellFail),
                    Threshold::Cut(phi) => (!sys.strictly_below(&next, &phi.constraint), Rule::TellFail),
                };
                if ok {
                    let rule = if fail == Rule::ValuedTellFail { Rule::ValuedTell } else { Rule::Tell };
                    vec![Local::Go { rule, next: Some((*act.next).clone()), store: next, fresh: 0 }]
                } else {
                    vec![Local::Fail(fail)]
                }
            }
            Agent::Ask(act) => vec![self.ask(act, store)?],
            Agent::Sum(branches) => {
                let mut goes = Vec::new();
                let mut all_fail = true;
                for b in branches {
                    match self.ask(b, store)? {
                        Local::Go { next, store, .. } => {
                            goes.push(Local::Go { rule: Rule::Nondeterminism, next, store, fresh: 0 })
                        }
                        Local::Stuck(_) => all_fail = false,
                        Local::Fail(_) => {}
                    }
                }
                if !goes.is_empty() {
                    goes
                } else if all_fail {
                    vec![Local::Fail(Rule::NondeterminismFail)]
                } else {
                    vec![Local::Stuck(Rule::NondeterminismHang)]
                }
            }
            Agent::Par(l, r) => {
                let mut out = Vec::new();
                for (this, other, left) in [(l, r, true), (r, l, false)] {
                    for m in self.local(this, store, avoid)? {
                        out.push(match m {
                            Local::Go { rule, next: Some(a), store, fresh } => {
                                let agent = if left {
                                    Agent::par(a, (**other).clone())
                                } else {
                                    Agent::par((**other).clone(), a)
                                };
                                Local::Go { rule, next: Some(agent), store, fresh }
                            }
                            Local::Go { next: None, store, fresh, .. } => Local::Go {
                                rule: Rule::Parallelism,
                                next: Some((**other).clone()),
                                store,
                                fresh,
                            },
                            Local::Fail(_) => Local::Fail(Rule::ParallelismFail),
                            stuck @ Local::Stuck(_) => stuck,
                        });
                    }
                }
                out
            }
            Agent::Exists(x, body) => {
                let y = fresh_name(x, avoid);
                let next = substitute(body, x, &y);
                vec![Local::Go { rule: Rule::HiddenVariables, next: Some(next), store: store.clone(), fresh: 1 }]
            }
            Agent::Call { name, args, .. } => {
                let decl = self.program.proc(name).ok_or_else(|| EngineError::UnboundProcedure(name.clone()))?;
                if decl.params.len() != args.len() {
                    return Err(EngineError::Arity {
                        name: name.clone(),
                        expected: decl.params.len(),
                        found: args.len(),
                    });
                }
                let map: BTreeMap<Var, Var> = decl.params.iter().cloned().zip(args.iter().cloned()).collect();
                let next = substitute_all(&decl.body, &map);
                vec![Local::Go { rule: Rule::ProcedureCall, next: Some(next), store: store.clone(), fresh: 0 }]
            }
        })
    }

    fn ask(&self, act: &Action, store: &Constraint) -> Result<Local, EngineError> {
        let sys = self.system();
        let c = self.resolve(&act.constraint)?;
        let (below, valued) = match &act.threshold {
            Threshold::Eventual => (false, false),
            Threshold::Level(a) => (sys.semiring().lt(sys.blevel(store), *a), true),
            Threshold::Cut(phi) => (sys.strictly_below(store, &phi.constraint), false),
        };
        let pick = |valued_rule, rule| if valued { valued_rule } else { rule };
        Ok(if below {
            Local::Fail(pick(Rule::ValuedAskFail, Rule::AskFail))
        } else if sys.leqc(store, &c) {
            Local::Go { rule: pick(Rule::ValuedAsk, Rule::Ask), next: Some((*act.next).clone()), store: store.clone(), fresh: 0 }
        } else {
            Local::Stuck(pick(Rule::ValuedAskHang, Rule::AskHang))
        })
    }

    /// Whether a running configuration is past the limits.
    fn over_limits(&self, cfg: &Configuration) -> bool {
        cfg.steps >= self.limits.max_steps || cfg.fresh > self.limits.max_fresh
    }

    fn key(cfg: &Configuration) -> Option<Key> {
        cfg.running().map(|(a, s)| (a.clone(), s.clone()))
    }

    /// Every maximal run of the main agent, in leftmost depth-first order.
    pub fn run_all(&self) -> Result<Vec<Run>, EngineError> {
        self.run_all_from(self.initial()?)
    }

    pub fn run_all_from(&self, initial: Configuration) -> Result<Vec<Run>, EngineError> {
        struct Frame {
            children: std::vec::IntoIter<(Rule, Configuration)>,
        }
        let mut runs = Vec::new();
        let mut path: Vec<(Rule, Configuration)> = Vec::new();
        let mut on_path: HashSet<Key> = HashSet::new();
        let finish = |path: &[(Rule, Configuration)], terminal| Run {
            initial: initial.clone(),
            trace: path.to_vec(),
            terminal,
        };
        if self.over_limits(&initial) {
            runs.push(finish(&path, Terminal::BoundExceeded));
            return Ok(runs);
        }
        on_path.extend(Self::key(&initial));
        let mut stack = vec![Frame { children: self.step(&initial)?.into_iter() }];
        while let Some(frame) = stack.last_mut() {
            let Some((rule, cfg)) = frame.children.next() else {
                stack.pop();
                if let Some((_, cfg)) = path.pop() {
                    if let Some(k) = Self::key(&cfg) {
                        on_path.remove(&k);
                    }
                }
                continue;
            };
            path.push((rule, cfg));
            let cfg = &path.last().expect("just pushed").1;
            let terminal = match &cfg.state {
                State::Success(s) => Some(Terminal::Success(s.clone())),
                State::Fail => Some(Terminal::Fail),
                State::Hang => Some(Terminal::Hang),
                State::Running { .. } => {
                    let k = Self::key(cfg).expect("running");
                    if on_path.contains(&k) {
                        Some(Terminal::Divergent)
                    } else if self.over_limits(cfg) {
                        Some(Terminal::BoundExceeded)
                    } else {
                        on_path.insert(k);
                        None
                    }
                }
            };
            match terminal {
                Some(t) => {
                    runs.push(finish(&path, t));
                    path.pop();
                }
                None => {
                    let children = self.step(cfg)?.into_iter();
                    stack.push(Frame { children });
                }
            }
        }
        Ok(runs)
    }

    /// Follows a single run, choosing among successors by `policy`.
    pub fn run_one(&self, policy: Policy) -> Result<Run, EngineError> {
        let initial = self.initial()?;
        let mut rng = match policy {
            Policy::Leftmost => None,
            Policy::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        };
        let mut seen: HashSet<Key> = HashSet::new();
        let mut trace: Vec<(Rule, Configuration)> = Vec::new();
        let mut cur = initial.clone();
        let terminal = loop {
            let k = match &cur.state {
                State::Success(s) => break Terminal::Success(s.clone()),
                State::Fail => break Terminal::Fail,
                State::Hang => break Terminal::Hang,
                State::Running { .. } => Self::key(&cur).expect("running"),
            };
            if !seen.insert(k) {
                break Terminal::Divergent;
            }
            if self.over_limits(&cur) {
                break Terminal::BoundExceeded;
            }
            let mut succ = self.step(&cur)?;
            let i = match rng.as_mut() {
                Some(rng) => rng.gen_range(0..succ.len()),
                None => 0,
            };
            let (rule, next) = succ.swap_remove(i);
            trace.push((rule, next.clone()));
            cur = next;
        };
        Ok(Run { initial, trace, terminal })
    }

    /// Memoized depth-first walk from `initial`, feeding each maximal run's
    /// end to an accumulator built from `proto`. Success stores are projected
    /// onto [`Engine::observed`] first.
    pub(crate) fn explore<A: Accumulator>(&self, initial: Configuration, proto: &A) -> Result<A, EngineError> {
        struct Frame<A> {
            key: Option<Key>,
            children: std::vec::IntoIter<(Rule, Configuration)>,
            acc: A,
            tainted: bool,
        }
        let mut memo: HashMap<Key, Rc<A>> = HashMap::new();
        let mut on_path: HashSet<Key> = HashSet::new();
        let sys = self.system();

        let mut root = proto.empty();
        if self.over_limits(&initial) {
            root.leaf(sys, Leaf::Bound);
            return Ok(root);
        }
        let key = Self::key(&initial);
        on_path.extend(key.clone());
        let mut stack = vec![Frame { key, children: self.step(&initial)?.into_iter(), acc: root, tainted: false }];
        let mut halted = false;
        let result = loop {
            let frame = stack.last_mut().expect("stack is non-empty inside the loop");
            let next = if halted || frame.acc.halted() { None } else { frame.children.next() };
            let Some((_, cfg)) = next else {
                let done = stack.pop().expect("non-empty");
                halted |= done.acc.halted();
                if let Some(k) = &done.key {
                    on_path.remove(k);
                }
                if !done.tainted && !done.acc.halted() {
                    if let Some(k) = done.key.clone() {
                        memo.insert(k, Rc::new(done.acc.clone()));
                    }
                }
                match stack.last_mut() {
                    Some(parent) => {
                        parent.acc.merge(&done.acc);
                        parent.tainted |= done.tainted;
                    }
                    None => break done.acc,
                }
                continue;
            };
            match &cfg.state {
                State::Success(s) => {
                    let projected = sys.project(s, &self.observed);
                    frame.acc.leaf(sys, Leaf::Success(&projected));
                }
                State::Fail => frame.acc.leaf(sys, Leaf::Fail),
                State::Hang => frame.acc.leaf(sys, Leaf::Hang),
                State::Running { .. } => {
                    let k = Self::key(&cfg).expect("running");
                    if on_path.contains(&k) {
                        frame.acc.leaf(sys, Leaf::Divergent);
                        frame.tainted = true;
                    } else if let Some(hit) = memo.get(&k) {
                        frame.acc.merge(hit);
                    } else if self.over_limits(&cfg) {
                        frame.acc.leaf(sys, Leaf::Bound);
                        frame.tainted = true;
                    } else {
                        let children = self.step(&cfg)?.into_iter();
                        on_path.insert(k.clone());
                        stack.push(Frame { key: Some(k), children, acc: proto.empty(), tainted: false });
                    }
                }
            }
        };
        Ok(result)
    }
}

/// What [`Engine::explore`] collects. Merging must be associative so that
/// memoized subtrees can be replayed by value.
pub(crate) trait Accumulator: Clone {
    /// A fresh accumulator sharing any configuration of `self`.
    fn empty(&self) -> Self;
    fn leaf(&mut self, sys: &ConstraintSystem, leaf: Leaf<'_>);
    fn merge(&mut self, other: &Self);
    /// Stops the walk as soon as it becomes true.
    fn halted(&self) -> bool {
        false
    }
}
