//! Shared helpers for the integration suites: value and constraint samplers,
//! law checkers returning the first violated law, and a generator of small
//! terminating programs.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use proptest::prelude::*;
use rand::Rng;
use scc_core::engine::{Engine, Rule, RunLimits, State, Terminal};
use scc_core::lang::{parse, Agent, CExpr, Pos, Program};
use scc_core::observe::{cut_program, dk_solution, glb, maximal, observe, success_set};
use scc_core::semiring::{Semiring, SemiringKind, Value};
use scc_core::softcon::{Atom, Constraint, ConstraintSystem, Domain, Var};

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn load(name: &str) -> Program {
    let path = fixture(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// A template by name: bare when `args` is empty, instantiated otherwise.
pub fn named(program: &Program, name: &str, args: &[&str]) -> Constraint {
    if args.is_empty() {
        return program.template(name).unwrap_or_else(|| panic!("{name}")).constraint.clone();
    }
    let expr = CExpr::Named { name: name.into(), args: args.iter().map(|a| var(a)).collect(), bare: false, pos: Pos::default() };
    program.resolve(&expr).unwrap()
}

pub fn system(kind: SemiringKind, n: usize) -> ConstraintSystem {
    ConstraintSystem::new(Semiring::new(kind), Domain::range(0, n as i64 - 1))
}

pub fn var(name: &str) -> Var {
    Var::new(name)
}

pub const NAMES: [&str; 3] = ["x", "y", "z"];

// ---------------------------------------------------------------------------
// Sampling

/// A value drawn from a small grid half of the time, so that ties and the
/// semiring units show up often.
pub fn sample_value(rng: &mut impl Rng, kind: SemiringKind) -> Value {
    let grid = rng.gen_bool(0.5);
    match kind {
        SemiringKind::Boolean => Value::Bool(rng.gen_bool(0.5)),
        SemiringKind::Fuzzy | SemiringKind::Probabilistic if grid => {
            Value::real([0.0, 0.25, 0.5, 0.75, 1.0][rng.gen_range(0..5)])
        }
        SemiringKind::Fuzzy | SemiringKind::Probabilistic => Value::real(rng.gen_range(0.0..=1.0)),
        SemiringKind::Weighted if grid => Value::real([0.0, 1.0, 2.0, 5.0, f64::INFINITY][rng.gen_range(0..5)]),
        SemiringKind::Weighted => Value::real(rng.gen_range(0.0..10.0)),
    }
}

pub fn value_strategy(kind: SemiringKind) -> BoxedStrategy<Value> {
    match kind {
        SemiringKind::Boolean => any::<bool>().prop_map(Value::Bool).boxed(),
        SemiringKind::Fuzzy | SemiringKind::Probabilistic => prop_oneof![
            prop::sample::select(vec![0.0, 0.25, 0.5, 0.75, 1.0]),
            0.0..=1.0f64,
        ]
        .prop_map(Value::real)
        .boxed(),
        SemiringKind::Weighted => prop_oneof![
            prop::sample::select(vec![0.0, 1.0, 2.0, 5.0, f64::INFINITY]),
            0.0..10.0f64,
        ]
        .prop_map(Value::real)
        .boxed(),
    }
}

/// Builds a constraint over `vars` from a flat table in row-major order of
/// the integer domain `0..n`. Extra values are ignored.
pub fn from_values(sys: &ConstraintSystem, vars: &[Var], values: &[Value]) -> Constraint {
    let n = sys.domain().len();
    sys.tabulate(vars, |t| {
        let i = t.iter().fold(0, |acc, a| match a {
            Atom::Int(d) => acc * n + *d as usize,
            Atom::Name(_) => unreachable!("integer domain"),
        });
        values[i]
    })
    .expect("values are in the carrier")
}

/// Raw material for one random constraint: a support subset of `x, y, z`
/// (as a bitmask) and enough values for the largest table.
#[derive(Debug, Clone)]
pub struct RawConstraint {
    pub mask: u8,
    pub values: Vec<Value>,
}

impl RawConstraint {
    pub fn build(&self, sys: &ConstraintSystem) -> Constraint {
        let vars: Vec<Var> = (0..3).filter(|i| self.mask & (1 << i) != 0).map(|i| var(NAMES[i])).collect();
        from_values(sys, &vars, &self.values)
    }
}

pub fn raw_constraint_strategy(kind: SemiringKind) -> impl Strategy<Value = RawConstraint> {
    (0u8..8, prop::collection::vec(value_strategy(kind), 27)).prop_map(|(mask, values)| RawConstraint { mask, values })
}

pub fn sample_constraint(rng: &mut impl Rng, sys: &ConstraintSystem) -> Constraint {
    let kind = sys.semiring().kind();
    let raw = RawConstraint { mask: rng.gen_range(0..8), values: (0..27).map(|_| sample_value(rng, kind)).collect() };
    raw.build(sys)
}

/// A cut level over the program variables `x, y` only.
pub fn sample_psi(rng: &mut impl Rng, sys: &ConstraintSystem) -> Constraint {
    let kind = sys.semiring().kind();
    let raw = RawConstraint { mask: rng.gen_range(0..4), values: (0..27).map(|_| sample_value(rng, kind)).collect() };
    raw.build(sys)
}

// ---------------------------------------------------------------------------
// Semiring laws

pub fn semiring_laws(s: &Semiring, a: Value, b: Value, c: Value) -> Check {
    let eq = |p: Value, q: Value| s.approx_eq(p, q);
    let (zero, one) = (s.zero(), s.one());
    ensure!(eq(s.plus(a, b), s.plus(b, a)), "+ commutative: {a:?} {b:?}");
    ensure!(eq(s.times(a, b), s.times(b, a)), "x commutative: {a:?} {b:?}");
    ensure!(eq(s.plus(s.plus(a, b), c), s.plus(a, s.plus(b, c))), "+ associative: {a:?} {b:?} {c:?}");
    ensure!(eq(s.times(s.times(a, b), c), s.times(a, s.times(b, c))), "x associative: {a:?} {b:?} {c:?}");
    ensure!(
        eq(s.times(a, s.plus(b, c)), s.plus(s.times(a, b), s.times(a, c))),
        "x distributes over +: {a:?} {b:?} {c:?}"
    );
    ensure!(eq(s.plus(a, zero), a), "0 is the unit of +: {a:?}");
    ensure!(eq(s.times(a, one), a), "1 is the unit of x: {a:?}");
    ensure!(eq(s.times(a, zero), zero), "0 absorbs x: {a:?}");
    ensure!(eq(s.plus(a, one), one), "1 absorbs +: {a:?}");
    ensure!(eq(s.plus(a, a), a), "+ idempotent: {a:?}");

    ensure!(s.le(a, b) || s.le(b, a), "<= total: {a:?} {b:?}");
    ensure!(s.le(zero, a) && s.le(a, one), "0 <= a <= 1: {a:?}");
    ensure!(s.le(a, a), "<= reflexive: {a:?}");
    ensure!(!(s.le(a, b) && s.le(b, a)) || eq(a, b), "<= antisymmetric: {a:?} {b:?}");
    ensure!(!(s.le(a, b) && s.le(b, c)) || s.le(a, c), "<= transitive: {a:?} {b:?} {c:?}");
    let lub = s.plus(a, b);
    ensure!(s.le(a, lub) && s.le(b, lub), "+ is an upper bound: {a:?} {b:?}");
    ensure!(!(s.le(a, c) && s.le(b, c)) || s.le(lub, c), "+ is the least upper bound: {a:?} {b:?} {c:?}");
    ensure!(!s.le(a, b) || s.le(s.times(a, c), s.times(b, c)), "x monotone (left): {a:?} {b:?} {c:?}");
    ensure!(!s.le(a, b) || s.le(s.times(c, a), s.times(c, b)), "x monotone (right): {a:?} {b:?} {c:?}");
    ensure!(s.le(s.times(a, b), a), "x extensive: {a:?} {b:?}");
    Ok(())
}

// ---------------------------------------------------------------------------
// Constraint algebra

/// The lifted operations on constraints form a c-semiring.
pub fn higher_order_laws(sys: &ConstraintSystem, c1: &Constraint, c2: &Constraint, c3: &Constraint) -> Check {
    let eq = |a: &Constraint, b: &Constraint| sys.equiv(a, b);
    let (zero, one) = (sys.zero(), sys.one());
    let (t, p) = (|a: &Constraint, b: &Constraint| sys.tensor(a, b), |a: &Constraint, b: &Constraint| sys.oplus(a, b));
    ensure!(eq(&p(c1, c2), &p(c2, c1)), "oplus commutative");
    ensure!(eq(&t(c1, c2), &t(c2, c1)), "tensor commutative");
    ensure!(eq(&p(&p(c1, c2), c3), &p(c1, &p(c2, c3))), "oplus associative");
    ensure!(eq(&t(&t(c1, c2), c3), &t(c1, &t(c2, c3))), "tensor associative");
    ensure!(eq(&t(c1, &p(c2, c3)), &p(&t(c1, c2), &t(c1, c3))), "tensor distributes over oplus");
    ensure!(eq(&p(c1, &zero), c1), "constant zero is the unit of oplus");
    ensure!(eq(&t(c1, &one), c1), "constant one is the unit of tensor");
    ensure!(eq(&t(c1, &zero), &zero), "constant zero absorbs tensor");
    ensure!(eq(&p(c1, &one), &one), "constant one absorbs oplus");
    ensure!(eq(&p(c1, c1), c1), "oplus idempotent");
    ensure!(sys.leqc(&t(c1, c2), c1), "tensor extensive");
    ensure!(sys.leqc(c1, &p(c1, c2)) && sys.leqc(c2, &p(c1, c2)), "oplus is an upper bound");
    Ok(())
}

pub fn cylindric_laws(sys: &ConstraintSystem, c1: &Constraint, c2: &Constraint, c3: &Constraint) -> Check {
    let (x, y) = (var("x"), var("y"));
    for v in [&x, &y] {
        let h1 = sys.hide(c1, v);
        ensure!(sys.leqc(c1, &h1), "axiom 1: c entails hiding {v}");
        let above = sys.oplus(c1, c3);
        ensure!(sys.leqc(&h1, &sys.hide(&above, v)), "axiom 2: hiding {v} is monotone");
        if sys.semiring().idempotent_times() {
            let lhs = sys.hide(&sys.tensor(c1, &sys.hide(c2, v)), v);
            let rhs = sys.tensor(&h1, &sys.hide(c2, v));
            ensure!(sys.equiv(&lhs, &rhs), "axiom 3 on {v}");
        }
    }
    ensure!(
        sys.equiv(&sys.hide(&sys.hide(c1, &x), &y), &sys.hide(&sys.hide(c1, &y), &x)),
        "axiom 4: hides commute"
    );
    Ok(())
}

pub fn diagonal_laws(sys: &ConstraintSystem, c: &Constraint) -> Check {
    let (x, y, z) = (var("x"), var("y"), var("z"));
    ensure!(sys.equiv(&sys.diagonal(&x, &x), &sys.one()), "diagonal 1: d_xx = 1");
    for (a, b, m) in [(&x, &y, &z), (&y, &z, &x), (&x, &z, &y)] {
        let via = sys.hide(&sys.tensor(&sys.diagonal(a, m), &sys.diagonal(m, b)), m);
        ensure!(sys.equiv(&sys.diagonal(a, b), &via), "diagonal 2: d_{a}{b} = exists {m}. d_{a}{m} x d_{m}{b}");
    }
    for (a, b) in [(&x, &y), (&y, &x), (&x, &z), (&z, &y)] {
        let d = sys.diagonal(a, b);
        let lhs = sys.tensor(&d, &sys.hide(&sys.tensor(c, &d), a));
        ensure!(sys.entails([&lhs], c), "diagonal 3 for {a}, {b}");
    }
    Ok(())
}

pub fn projection_laws(sys: &ConstraintSystem, c: &Constraint, keep_mask: u8) -> Check {
    let all: BTreeSet<Var> = NAMES.iter().map(|n| var(n)).collect();
    for name in NAMES {
        let x = var(name);
        let mut rest = all.clone();
        rest.remove(&x);
        ensure!(sys.equiv(&sys.hide(c, &x), &sys.project(c, &rest)), "hiding {x} is projecting it away");
    }
    let keep: BTreeSet<Var> = (0..3).filter(|i| keep_mask & (1 << i) != 0).map(|i| var(NAMES[i])).collect();
    let p = sys.project(c, &keep);
    ensure!(sys.support(&p).is_subset(&keep), "support of a projection stays inside the kept set");
    ensure!(p.vars().iter().all(|v| keep.contains(v)), "projection table is over kept variables only");
    Ok(())
}

// ---------------------------------------------------------------------------
// Entailment

/// Set-reflexivity and transitivity of the extended entailment relation, and
/// the fact behind it: entailing every member of a set is entailing its
/// combination. The last one needs idempotent `x`.
pub fn entailment_laws(sys: &ConstraintSystem, cs: &[Constraint; 3], ds: &[Constraint; 3]) -> Check {
    let c1: Vec<&Constraint> = cs[..2].iter().collect();
    for c in &c1 {
        ensure!(sys.entails(c1.iter().copied(), c), "set reflexivity");
    }
    // C1 entails every member of C2 by construction, and C2 entails c.
    let c2: Vec<Constraint> = vec![sys.oplus(&cs[0], &ds[0]), sys.oplus(&cs[1], &ds[1])];
    for c in &c2 {
        ensure!(sys.entails(c1.iter().copied(), c), "C1 entails each member of C2");
    }
    let c = sys.oplus(&sys.tensor_all(&c2), &ds[2]);
    ensure!(sys.entails(&c2, &c), "C2 entails c");
    ensure!(sys.entails(c1.iter().copied(), &c), "transitivity: C1 entails c");
    // The member-wise and the combined readings of C1 |- C2 coincide.
    let others = [&cs[2], &ds[0], &ds[1]];
    let each = others.iter().all(|c| sys.entails(c1.iter().copied(), c));
    let combined = sys.entails(c1.iter().copied(), &sys.tensor_all(others));
    ensure!(each == combined, "C1 entails each member iff it entails the combination");
    Ok(())
}

// ---------------------------------------------------------------------------
// Random programs

/// Knobs for [`random_program`].
#[derive(Debug, Clone, Copy)]
pub struct Shape {
    /// Only eventual thresholds (plain `->`).
    pub eventual_only: bool,
}

/// Maps a quality in `[0, 1]` (1 = best) to a value of `kind`.
fn quality(kind: SemiringKind, u: f64) -> String {
    match kind {
        SemiringKind::Boolean => if u >= 0.5 { "true" } else { "false" }.to_string(),
        SemiringKind::Fuzzy | SemiringKind::Probabilistic => format!("{}", (u * 10.0).round() / 10.0),
        SemiringKind::Weighted if u <= 0.0 => "inf".to_string(),
        SemiringKind::Weighted => format!("{}", ((1.0 - u) * 8.0).round()),
    }
}

fn table(rng: &mut impl Rng, kind: SemiringKind, name: &str, lo: f64, hi: f64) -> String {
    let vars: &[&str] = match rng.gen_range(0..4) {
        0 => &["x"],
        1 => &["y"],
        _ => &["x", "y"],
    };
    let mut out = format!("constraint {name}({}) {{", vars.join(", "));
    let rows: Vec<Vec<i64>> =
        if vars.len() == 1 { (0..2).map(|a| vec![a]).collect() } else { (0..4).map(|i| vec![i / 2, i % 2]).collect() };
    for r in rows {
        let t: Vec<String> = r.iter().map(|a| a.to_string()).collect();
        out += &format!(" ({}) = {};", t.join(", "), quality(kind, rng.gen_range(lo..=hi)));
    }
    out + " }\n"
}

struct Gen<'r, R: Rng> {
    rng: &'r mut R,
    eventual_only: bool,
    budget: usize,
}

impl<R: Rng> Gen<'_, R> {
    fn arrow(&mut self) -> String {
        if self.eventual_only || self.rng.gen_bool(0.3) {
            "->".to_string()
        } else {
            format!("->[p{}]", self.rng.gen_range(1..=3))
        }
    }

    fn ask_guard(&mut self) -> String {
        // Mostly entailed guards, so that runs usually get somewhere.
        match self.rng.gen_range(0..10) {
            0..=6 => "top".to_string(),
            7..=8 => format!("g{}", self.rng.gen_range(1..=2)),
            _ => format!("k{}", self.rng.gen_range(1..=5)),
        }
    }

    /// A sequence of at most `len` actions, possibly ending in a choice.
    fn chain(&mut self, len: usize) -> String {
        if len == 0 || self.budget == 0 {
            return "stop".to_string();
        }
        if self.budget >= 2 && self.rng.gen_bool(0.25) {
            return self.choice();
        }
        self.budget -= 1;
        let rest_len = len - 1;
        if self.rng.gen_bool(0.75) {
            let c = format!("k{}", self.rng.gen_range(1..=5));
            let arrow = self.arrow();
            format!("tell({c}) {arrow} {}", self.chain(rest_len))
        } else {
            let g = self.ask_guard();
            let arrow = self.arrow();
            format!("ask({g}) {arrow} ({})", self.chain(rest_len))
        }
    }

    /// A choice between a good and a near-zero tell: the second branch is
    /// dominated, which is what branch and bound prunes.
    fn dominated_choice(&mut self) -> String {
        self.budget -= 4;
        let mut branches: Vec<String> = ["hi", "lo"]
            .iter()
            // Eventual thresholds: both branches succeed when nothing is cut.
            .map(|c| format!("ask(top) -> (tell({c}) -> stop)"))
            .collect();
        if self.rng.gen_bool(0.15) {
            branches.reverse();
        }
        format!("({})", branches.join(" + "))
    }

    fn choice(&mut self) -> String {
        self.budget -= 2;
        let mut branches = Vec::new();
        for _ in 0..2 {
            let g = self.ask_guard();
            let arrow = self.arrow();
            let len = self.rng.gen_range(0..=2);
            branches.push(format!("ask({g}) {arrow} ({})", self.chain(len)));
        }
        format!("({})", branches.join(" + "))
    }
}

/// Source text of a small random program with no procedures and no hiding:
/// at most 3 parallel components, at most 2 branches per choice and at most
/// 6 tells/asks in total. Every such program terminates.
pub fn random_program(rng: &mut impl Rng, shape: Shape) -> String {
    let kind = SemiringKind::ALL[rng.gen_range(0..4)];
    let mut src = format!("semiring {};\ndomain {{0, 1}};\nvar x, y;\n", kind.name());
    for i in 1..=5 {
        src += &table(rng, kind, &format!("k{i}"), 0.2, 1.0);
    }
    for i in 1..=3 {
        src += &table(rng, kind, &format!("p{i}"), 0.0, 0.7);
    }
    for i in 1..=2 {
        src += &table(rng, kind, &format!("g{i}"), 0.6, 1.0);
    }
    src += &table(rng, kind, "hi", 0.8, 1.0);
    src += &table(rng, kind, "lo", 0.0, 0.1);
    src += &format!("constraint top(x) {{ (0) = {one}; (1) = {one}; }}\n", one = quality(kind, 1.0));
    let mut g = Gen { rng, eventual_only: shape.eventual_only, budget: 6 };
    let parts = [1, 2, 2, 3, 3][g.rng.gen_range(0..5)];
    let mut comps: Vec<String> = Vec::new();
    if parts > 1 && g.rng.gen_bool(0.9) {
        comps.push(g.dominated_choice());
    }
    while comps.len() < parts {
        let len = g.rng.gen_range(1..=3);
        comps.push(g.chain(len));
    }
    let mut agent = comps.pop().expect("at least one component");
    while let Some(c) = comps.pop() {
        agent = format!("({c} || {agent})");
    }
    src + &format!("agent = {agent};\n")
}

pub fn random_programs(seed: u64, count: usize, shape: Shape) -> Vec<(String, Program)> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let src = random_program(&mut rng, shape);
            let p = parse(&src).unwrap_or_else(|e| panic!("generated program does not parse: {e}\n{src}"));
            (src, p)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Cut theorems

pub fn limits() -> RunLimits {
    RunLimits::default()
}

pub fn contains(sys: &ConstraintSystem, set: &[Constraint], c: &Constraint) -> bool {
    set.iter().any(|s| sys.equiv(s, c))
}

pub fn same_set(sys: &ConstraintSystem, a: &[Constraint], b: &[Constraint]) -> bool {
    a.iter().all(|c| contains(sys, b, c)) && b.iter().all(|c| contains(sys, a, c))
}

/// Containment, dominated elimination and the sandwich for one `psi`.
pub fn cut_laws(program: &Program, psi: &Constraint) -> Check {
    let sys = program.system();
    let cut = cut_program(program, psi);
    let all = success_set(program, limits()).map_err(|e| e.to_string())?;
    let kept = success_set(&cut, limits()).map_err(|e| e.to_string())?;
    for s in &kept {
        ensure!(contains(sys, &all, s), "containment: a cut run found a new solution");
    }
    for s in all.iter().filter(|s| !contains(sys, &kept, s)) {
        ensure!(sys.strictly_below(s, psi), "dominated elimination: a removed solution is not below psi");
    }
    let dk = dk_solution(program, limits()).map_err(|e| e.to_string())?;
    let dk_cut = dk_solution(&cut, limits()).map_err(|e| e.to_string())?;
    ensure!(sys.leqc(&dk_cut, &dk), "sandwich: dk of the cut program is below dk");
    ensure!(sys.leqc(&dk, &sys.oplus(psi, &dk_cut)), "sandwich: dk is below psi + dk of the cut program");
    Ok(())
}

/// Cutting at the glb of all solutions keeps every solution.
pub fn glb_law(program: &Program) -> Check {
    let sys = program.system();
    let all = success_set(program, limits()).map_err(|e| e.to_string())?;
    let psi = glb(sys, &all);
    let kept = success_set(&cut_program(program, &psi), limits()).map_err(|e| e.to_string())?;
    ensure!(same_set(sys, &all, &kept), "glb cut changed the success set");
    Ok(())
}

/// Cutting at the glb of the maximal solutions keeps the dk solution.
pub fn dk_law(program: &Program) -> Check {
    let sys = program.system();
    let all = success_set(program, limits()).map_err(|e| e.to_string())?;
    let psi = glb(sys, &maximal(sys, &all));
    let dk = dk_solution(program, limits()).map_err(|e| e.to_string())?;
    let dk_cut = dk_solution(&cut_program(program, &psi), limits()).map_err(|e| e.to_string())?;
    ensure!(sys.equiv(&dk, &dk_cut), "cut at the glb of the best solutions changed the dk solution");
    Ok(())
}

/// Every successful run replays step for step under the cut at its own final store.
pub fn replay_law(program: &Program) -> Check {
    let sys = program.system();
    let engine = Engine::new(program, limits());
    for run in engine.run_all().map_err(|e| e.to_string())? {
        let Terminal::Success(sigma) = &run.terminal else { continue };
        let cut = cut_program(program, sigma);
        let cut_engine = Engine::new(&cut, limits());
        let mut cur = cut_engine.initial().map_err(|e| e.to_string())?;
        for (i, (rule, cfg)) in run.trace.iter().enumerate() {
            let succ = cut_engine.step(&cur).map_err(|e| e.to_string())?;
            let next = succ.into_iter().find(|(r, c)| r == rule && matches_cut(sys, &cfg.state, &c.state, sigma));
            let Some((_, next)) = next else {
                return Err(format!("replay: step {i} ({rule}) is not reproduced under the cut"));
            };
            cur = next;
        }
        ensure!(matches!(cur.state, State::Success(_)), "replay does not end in success");
    }
    Ok(())
}

fn matches_cut(sys: &ConstraintSystem, orig: &State, cut: &State, sigma: &Constraint) -> bool {
    match (orig, cut) {
        (State::Running { agent: a, store: s }, State::Running { agent: b, store: t }) => {
            sys.equiv(s, t) && scc_core::observe::cut_agent(sys, a, sigma) == *b
        }
        (State::Success(s), State::Success(t)) => sys.equiv(s, t),
        (State::Fail, State::Fail) | (State::Hang, State::Hang) => true,
        _ => false,
    }
}

// ---------------------------------------------------------------------------
// Eventual mode

pub const FAIL_RULES: [Rule; 6] = [
    Rule::TellFail,
    Rule::ValuedTellFail,
    Rule::AskFail,
    Rule::ValuedAskFail,
    Rule::NondeterminismFail,
    Rule::ParallelismFail,
];

/// Whether a redex can move: stop and tells always can, asks when entailed.
fn enabled_redexes(engine: &Engine, agent: &Agent, store: &Constraint) -> usize {
    let sys = engine.system();
    let entailed = |c| sys.leqc(store, &engine.resolve(c).expect("resolvable"));
    match agent {
        Agent::Stop | Agent::Tell(_) | Agent::Exists(..) | Agent::Call { .. } => 1,
        Agent::Ask(a) => entailed(&a.constraint) as usize,
        Agent::Sum(bs) => bs.iter().filter(|b| entailed(&b.constraint)).count(),
        Agent::Par(l, r) => enabled_redexes(engine, l, store) + enabled_redexes(engine, r, store),
    }
}

/// With only eventual thresholds nothing fails, and a configuration is stuck
/// exactly when every active ask is not entailed by the store.
pub fn eventual_law(program: &Program) -> Check {
    let engine = Engine::new(program, limits());
    for run in engine.run_all().map_err(|e| e.to_string())? {
        ensure!(run.terminal != Terminal::Fail, "a run failed");
        let mut prev = &run.initial;
        for (rule, cfg) in &run.trace {
            ensure!(!FAIL_RULES.contains(rule), "failure rule {rule} used");
            let (agent, store) = prev.running().expect("only running configurations have successors");
            let enabled = enabled_redexes(&engine, agent, store);
            match cfg.state {
                State::Hang => ensure!(enabled == 0, "hang with an enabled redex"),
                _ => ensure!(enabled > 0, "moved ({rule}) with no enabled redex"),
            }
            if matches!(rule, Rule::Ask | Rule::Nondeterminism) {
                ensure!(cfg.running().map(|(_, s)| sys_eq(&engine, s, store)).unwrap_or(true), "an ask changed the store");
            }
            prev = cfg;
        }
    }
    Ok(())
}

fn sys_eq(engine: &Engine, a: &Constraint, b: &Constraint) -> bool {
    engine.system().equiv(a, b)
}

// ---------------------------------------------------------------------------
// Network fixture

/// Every site finishes, and the dk solution is nonzero only where each group
/// of copies of a shared variable agrees.
pub fn network_law(p: &Program) -> Check {
    let sys = p.system();
    let obs = observe(p, limits()).map_err(|e| e.to_string())?;
    ensure!(!obs.success_set.is_empty(), "no successful run");
    ensure!(!obs.fail && !obs.hang && !obs.divergent && !obs.bound_exceeded, "some run did not succeed");
    let dk = &obs.dk_solution;
    let names: Vec<&str> = dk.vars().iter().map(|v| v.as_str()).collect();
    let groups = [["x_a", "x_d", "x_c"], ["y_a", "y_d", "y_b"], ["z_b", "z_d", "z_c"]];
    let mut cols = Vec::new();
    for g in groups {
        let mut idx = Vec::new();
        for n in g {
            let i = names.iter().position(|m| *m == n).ok_or_else(|| format!("{n} missing from the dk solution"))?;
            idx.push(i);
        }
        cols.push((g, idx));
    }
    let zero = sys.semiring().zero();
    let mut nonzero = 0;
    for (tuple, v) in sys.rows(dk) {
        if sys.semiring().approx_eq(v, zero) {
            continue;
        }
        nonzero += 1;
        for (g, idx) in &cols {
            ensure!(idx.iter().all(|&i| tuple[i] == tuple[idx[0]]), "{g:?} differ on a nonzero tuple {tuple:?}");
        }
    }
    ensure!(nonzero > 0, "dk solution is constantly zero");
    for e in ["end_a", "end_b", "end_c", "end_d"] {
        let flag = named(p, "is_true", &[e]);
        for s in &obs.success_set {
            ensure!(sys.entails([s], &flag), "{e} is not entailed true at termination");
        }
    }
    Ok(())
}
