//! Surface-syntax printing. Output parses back to the same AST.

use std::fmt::{self, Write};

use super::{Action, Agent, CExpr, Program, Threshold};
use crate::softcon::{Assignment, Var};

fn vars(vs: &[Var]) -> String {
    vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for CExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CExpr::Named { name, bare: true, .. } => f.write_str(name),
            CExpr::Named { name, args, .. } => write!(f, "{name}({})", vars(args)),
            CExpr::Diag(x, y) => write!(f, "diag({x}, {y})"),
            CExpr::Const(v) => write!(f, "const({v})"),
            CExpr::Literal(c) => write!(f, "<constraint over ({})>", vars(c.vars())),
        }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Eventual => f.write_str("->"),
            Threshold::Level(v) => write!(f, "->^{v}"),
            Threshold::Cut(cut) => match &cut.label {
                Some(name) => write!(f, "->[{name}]"),
                None => write!(f, "->[<constraint over ({})>]", vars(cut.constraint.vars())),
            },
        }
    }
}

/// Whether a `+` printed right after this agent would be swallowed by it.
fn absorbs_plus(a: &Agent) -> bool {
    match a {
        Agent::Ask(_) | Agent::Sum(_) => true,
        Agent::Tell(act) => absorbs_plus(&act.next),
        Agent::Exists(_, body) => absorbs_plus(body),
        _ => false,
    }
}

fn write_action(f: &mut fmt::Formatter<'_>, kw: &str, a: &Action, guard_tail: bool) -> fmt::Result {
    write!(f, "{kw}({}) {} ", a.constraint, a.threshold)?;
    if guard_tail && absorbs_plus(&a.next) {
        write!(f, "({})", a.next)
    } else {
        write!(f, "{}", a.next)
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Agent::Stop => f.write_str("stop"),
            Agent::Tell(a) => write_action(f, "tell", a, false),
            Agent::Ask(a) => write_action(f, "ask", a, false),
            Agent::Sum(branches) => {
                for (i, b) in branches.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    write_action(f, "ask", b, i + 1 < branches.len())?;
                }
                Ok(())
            }
            Agent::Par(l, r) => write!(f, "({l} || {r})"),
            Agent::Exists(x, body) => write!(f, "exists {x}. {body}"),
            Agent::Call { name, args, .. } => write!(f, "{name}({})", vars(args)),
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sys = self.system();
        let atoms: Vec<String> = sys.domain().atoms().iter().map(|a| a.to_string()).collect();
        writeln!(f, "semiring {};", sys.semiring())?;
        writeln!(f, "domain {{{}}};", atoms.join(", "))?;
        writeln!(f, "var {};", vars(self.vars()))?;
        for t in self.templates() {
            let mut body = String::new();
            let n = sys.domain().len();
            let k = t.params.len();
            for idx in 0..n.pow(k as u32) {
                let mut eta = Assignment::new();
                let mut tuple = Vec::with_capacity(k);
                let mut rest = idx;
                for p in t.params.iter().rev() {
                    let atom = sys.domain().atom(rest % n).clone();
                    rest /= n;
                    tuple.push(atom.to_string());
                    eta.set(p.clone(), atom);
                }
                tuple.reverse();
                let value = sys.eval(&t.constraint, &eta).map_err(|_| fmt::Error)?;
                let _ = write!(body, " ({}) = {value};", tuple.join(", "));
            }
            writeln!(f, "constraint {}({}) {{{body} }}", t.name, vars(&t.params))?;
        }
        for d in self.procs() {
            writeln!(f, "proc {}({}) :: {};", d.name, vars(&d.params), d.body)?;
        }
        if let Some(main) = self.main() {
            writeln!(f, "agent = {main};")?;
        }
        if let Some(interest) = self.interest() {
            writeln!(f, "interest {{{}}};", vars(interest))?;
        }
        Ok(())
    }
}
