//! JSON encodings of constraints, runs and observables. Infinite values are
//! written as the string `"inf"`.

use serde_json::{json, Value as Json};

use crate::engine::Run;
use crate::observe::{BbOutcome, Observables};
use crate::semiring::Value;
use crate::softcon::{Atom, Constraint, ConstraintSystem};

pub fn value(v: Value) -> Json {
    match v {
        Value::Bool(b) => Json::Bool(b),
        Value::Real(x) if x.is_infinite() => Json::String("inf".into()),
        Value::Real(x) => json!(x),
    }
}

pub fn atom(a: &Atom) -> Json {
    match a {
        Atom::Int(i) => json!(i),
        Atom::Name(n) => json!(n.as_ref()),
    }
}

/// `{"support": [...], "rows": [{"tuple": [...], "value": v}, ...]}`
pub fn constraint(sys: &ConstraintSystem, c: &Constraint) -> Json {
    let rows: Vec<Json> = sys
        .rows(c)
        .into_iter()
        .map(|(tuple, v)| json!({ "tuple": tuple.iter().map(atom).collect::<Vec<_>>(), "value": value(v) }))
        .collect();
    json!({ "support": c.vars().iter().map(|v| v.as_str()).collect::<Vec<_>>(), "rows": rows })
}

/// One JSON-lines record per run.
pub fn run(sys: &ConstraintSystem, r: &Run) -> Json {
    json!({
        "terminal": r.terminal.name(),
        "final_store": constraint(sys, r.final_store()),
        "rule_trace": r.rules().iter().map(|x| x.name()).collect::<Vec<_>>(),
        "steps": r.steps(),
    })
}

pub fn bb(outcome: &BbOutcome) -> Json {
    json!({
        "iterations": outcome.iterations,
        "runs_explored": outcome.runs_explored,
        "naive_runs": outcome.naive_runs,
        "runs_pruned": outcome.runs_pruned,
    })
}

/// The observables document. `success_set` is passed separately so callers
/// can apply a filter first.
pub fn observables(
    sys: &ConstraintSystem,
    obs: &Observables,
    success_set: &[Constraint],
    outcome: Option<&BbOutcome>,
) -> Json {
    json!({
        "success_set": success_set.iter().map(|c| constraint(sys, c)).collect::<Vec<_>>(),
        "dk_solution": constraint(sys, &obs.dk_solution),
        "fail": obs.fail,
        "fail_dk": obs.fail_dk,
        "hang": obs.hang,
        "divergent": obs.divergent,
        "bound_exceeded": obs.bound_exceeded,
        "bb": outcome.map(bb),
    })
}
