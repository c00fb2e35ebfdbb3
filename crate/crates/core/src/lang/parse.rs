use std::collections::{BTreeMap, BTreeSet};

use super::{Action, Agent, CExpr, CutLevel, Decl, LangError, Pos, Program, Template, Threshold};
use crate::semiring::{Semiring, SemiringKind, Value};
use crate::softcon::{Atom, ConstraintSystem, Domain, Var};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Arrow,
    Caret,
    LBracket,
    RBracket,
    ColonColon,
    Bars,
    Semi,
    Comma,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Eq,
    Plus,
    Dot,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(s) => format!("number `{s}`"),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", punct(other)),
        }
    }
}

fn punct(t: &Tok) -> &'static str {
    match t {
        Tok::Arrow => "->",
        Tok::Caret => "^",
        Tok::LBracket => "[",
        Tok::RBracket => "]",
        Tok::ColonColon => "::",
        Tok::Bars => "||",
        Tok::Semi => ";",
        Tok::Comma => ",",
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::LBrace => "{",
        Tok::RBrace => "}",
        Tok::Eq => "=",
        Tok::Plus => "+",
        Tok::Dot => ".",
        _ => "?",
    }
}

fn syntax(pos: Pos, msg: impl Into<String>) -> LangError {
    LangError::Syntax { pos, msg: msg.into() }
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, LangError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        let start = i;
        let tok = match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
                continue;
            }
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                i += 2;
                Tok::Arrow
            }
            ':' if chars.get(i + 1) == Some(&':') => {
                i += 2;
                Tok::ColonColon
            }
            '|' if chars.get(i + 1) == Some(&'|') => {
                i += 2;
                Tok::Bars
            }
            c if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if chars.get(i) == Some(&'.') && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if matches!(chars.get(i), Some('e' | 'E')) {
                    let mut j = i + 1;
                    if matches!(chars.get(j), Some('+' | '-')) {
                        j += 1;
                    }
                    if chars.get(j).is_some_and(|d| d.is_ascii_digit()) {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                Tok::Number(chars[start..i].iter().collect())
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                    i += 1;
                }
                Tok::Ident(chars[start..i].iter().collect())
            }
            _ => {
                i += 1;
                match c {
                    '^' => Tok::Caret,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    ';' => Tok::Semi,
                    ',' => Tok::Comma,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '=' => Tok::Eq,
                    '+' => Tok::Plus,
                    '.' => Tok::Dot,
                    _ => return Err(syntax(pos, format!("unexpected character `{c}`"))),
                }
            }
        };
        col += i - start;
        out.push((tok, pos));
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

const KEYWORDS: &[&str] = &[
    "semiring", "domain", "var", "constraint", "default", "proc", "agent", "interest", "stop", "tell", "ask",
    "exists", "diag", "const",
];

struct Cursor<'t> {
    toks: &'t [(Tok, Pos)],
    at: usize,
}

impl<'t> Cursor<'t> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at.min(self.toks.len() - 1)].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.at + k).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at.min(self.toks.len() - 1)].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.peek().clone();
        if self.at < self.toks.len() - 1 {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok) -> Result<(), LangError> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(syntax(self.pos(), format!("expected `{}`, found {}", punct(t), self.peek().describe())))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), LangError> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            Err(syntax(self.pos(), format!("expected `{kw}`, found {}", self.peek().describe())))
        }
    }

    fn name(&mut self, what: &str) -> Result<(String, Pos), LangError> {
        let pos = self.pos();
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok((s, pos))
            }
            t => Err(syntax(pos, format!("expected {what}, found {}", t.describe()))),
        }
    }

    fn var(&mut self) -> Result<Var, LangError> {
        Ok(Var::new(self.name("a variable")?.0))
    }

    /// `VAR ("," VAR)*`, possibly empty when followed by `close`.
    fn var_list(&mut self, close: &Tok) -> Result<Vec<Var>, LangError> {
        let mut out = Vec::new();
        if self.peek() == close {
            return Ok(out);
        }
        loop {
            out.push(self.var()?);
            if !self.eat(&Tok::Comma) {
                return Ok(out);
            }
        }
    }

    fn atom(&mut self) -> Result<Atom, LangError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Number(s) => s
                .parse::<i64>()
                .map(Atom::Int)
                .map_err(|_| syntax(pos, format!("domain values must be integers or identifiers, found `{s}`"))),
            Tok::Ident(s) => Ok(Atom::name(&s)),
            t => Err(syntax(pos, format!("expected a domain value, found {}", t.describe()))),
        }
    }

    fn atom_list(&mut self, close: &Tok) -> Result<Vec<Atom>, LangError> {
        let mut out = Vec::new();
        if self.peek() == close {
            return Ok(out);
        }
        loop {
            out.push(self.atom()?);
            if !self.eat(&Tok::Comma) {
                return Ok(out);
            }
        }
    }

    fn value(&mut self, s: &Semiring) -> Result<Value, LangError> {
        let pos = self.pos();
        let text = match self.bump() {
            Tok::Number(n) => n,
            Tok::Ident(i) => i,
            t => return Err(syntax(pos, format!("expected a semiring value, found {}", t.describe()))),
        };
        s.parse_value(&text).map_err(|source| LangError::Semiring { pos, source })
    }
}

fn check_distinct(vars: &[Var], pos: Pos) -> Result<(), LangError> {
    let mut seen = BTreeSet::new();
    for v in vars {
        if !seen.insert(v) {
            return Err(LangError::DuplicateVar { pos, var: v.clone() });
        }
    }
    Ok(())
}

/// A procedure header whose body tokens are parsed once all names are known.
struct PendingProc {
    name: String,
    params: Vec<Var>,
    pos: Pos,
    body: (usize, usize),
}

/// Parses and validates a program.
pub fn parse(text: &str) -> Result<Program, LangError> {
    let toks = lex(text)?;
    let mut cur = Cursor { toks: &toks, at: 0 };

    cur.expect_kw("semiring")?;
    let kind_pos = cur.pos();
    let (kind, _) = cur.name("a semiring name")?;
    let kind: SemiringKind = kind.parse().map_err(|source| LangError::Semiring { pos: kind_pos, source })?;
    let semiring = Semiring::new(kind);
    cur.expect(&Tok::Semi)?;

    cur.expect_kw("domain")?;
    let dom_pos = cur.pos();
    cur.expect(&Tok::LBrace)?;
    let atoms = cur.atom_list(&Tok::RBrace)?;
    cur.expect(&Tok::RBrace)?;
    cur.expect(&Tok::Semi)?;
    let domain = Domain::new(atoms).map_err(|source| LangError::Constraint { pos: dom_pos, source })?;
    let system = ConstraintSystem::new(semiring, domain);

    cur.expect_kw("var")?;
    let var_pos = cur.pos();
    let vars = cur.var_list(&Tok::Semi)?;
    check_distinct(&vars, var_pos)?;
    cur.expect(&Tok::Semi)?;

    let mut templates: Vec<Template> = Vec::new();
    let mut pending: Vec<PendingProc> = Vec::new();
    loop {
        if cur.is_kw("constraint") {
            cur.bump();
            let (name, pos) = cur.name("a constraint name")?;
            if templates.iter().any(|t| t.name == name) {
                return Err(LangError::DuplicateConstraint { pos, name });
            }
            cur.expect(&Tok::LParen)?;
            let params = cur.var_list(&Tok::RParen)?;
            check_distinct(&params, pos)?;
            cur.expect(&Tok::RParen)?;
            cur.expect(&Tok::LBrace)?;
            let mut rows = Vec::new();
            let mut default = None;
            while !cur.eat(&Tok::RBrace) {
                if cur.is_kw("default") {
                    cur.bump();
                    cur.expect(&Tok::Eq)?;
                    default = Some(cur.value(&semiring)?);
                    cur.expect(&Tok::Semi)?;
                    continue;
                }
                let row_pos = cur.pos();
                cur.expect(&Tok::LParen)?;
                let tuple = cur.atom_list(&Tok::RParen)?;
                cur.expect(&Tok::RParen)?;
                cur.expect(&Tok::Eq)?;
                let value = cur.value(&semiring)?;
                cur.expect(&Tok::Semi)?;
                if tuple.len() != params.len() {
                    return Err(syntax(
                        row_pos,
                        format!("row has {} value(s) but `{name}` has {} variable(s)", tuple.len(), params.len()),
                    ));
                }
                rows.push((tuple, value));
            }
            let constraint = system
                .table(&params, &rows, default)
                .map_err(|source| LangError::Constraint { pos, source })?;
            templates.push(Template { name, params, constraint });
        } else if cur.is_kw("proc") {
            cur.bump();
            let (name, pos) = cur.name("a procedure name")?;
            if pending.iter().any(|p| p.name == name) {
                return Err(LangError::DuplicateProcedure { pos, name });
            }
            cur.expect(&Tok::LParen)?;
            let params = cur.var_list(&Tok::RParen)?;
            check_distinct(&params, pos)?;
            cur.expect(&Tok::RParen)?;
            cur.expect(&Tok::ColonColon)?;
            let body = skip_agent(&mut cur)?;
            pending.push(PendingProc { name, params, pos, body });
        } else {
            break;
        }
    }

    let mut main_range = None;
    if cur.is_kw("agent") {
        cur.bump();
        cur.expect(&Tok::Eq)?;
        main_range = Some(skip_agent(&mut cur)?);
    }
    let mut interest = None;
    if cur.is_kw("interest") {
        cur.bump();
        let pos = cur.pos();
        cur.expect(&Tok::LBrace)?;
        let list = cur.var_list(&Tok::RBrace)?;
        cur.expect(&Tok::RBrace)?;
        cur.expect(&Tok::Semi)?;
        check_distinct(&list, pos)?;
        let undeclared: Vec<Var> = list.iter().filter(|v| !vars.contains(v)).cloned().collect();
        if !undeclared.is_empty() {
            return Err(LangError::Undeclared { pos, vars: undeclared });
        }
        interest = Some(list);
    }
    if *cur.peek() != Tok::Eof {
        return Err(syntax(cur.pos(), format!("unexpected {}", cur.peek().describe())));
    }

    let signatures: BTreeMap<String, usize> = pending.iter().map(|p| (p.name.clone(), p.params.len())).collect();
    let body_parser = AgentParser { system: &system, templates: &templates, procs: &signatures };

    let mut procs = Vec::new();
    for p in pending {
        let body = body_parser.parse_range(&toks, p.body)?;
        let extra: Vec<Var> = body.free_vars().into_iter().filter(|v| !p.params.contains(v)).collect();
        if !extra.is_empty() {
            return Err(LangError::FreeVars { pos: p.pos, name: p.name, vars: extra });
        }
        procs.push(Decl { name: p.name, params: p.params, body, pos: p.pos });
    }
    let main = match main_range {
        Some(range) => {
            let agent = body_parser.parse_range(&toks, range)?;
            let undeclared: Vec<Var> = agent.free_vars().into_iter().filter(|v| !vars.contains(v)).collect();
            if !undeclared.is_empty() {
                return Err(LangError::Undeclared { pos: toks[range.0].1, vars: undeclared });
            }
            Some(agent)
        }
        None => None,
    };

    Ok(Program { system, vars, templates, procs, main, interest })
}

/// Skips an agent up to and including its terminating `;`, returning the
/// token range of the agent. Agents never contain `;`.
fn skip_agent(cur: &mut Cursor) -> Result<(usize, usize), LangError> {
    let start = cur.at;
    loop {
        match cur.peek() {
            Tok::Semi => break,
            Tok::Eof => return Err(syntax(cur.pos(), "expected `;` after agent")),
            _ => {
                cur.bump();
            }
        }
    }
    let end = cur.at;
    cur.bump();
    if start == end {
        return Err(syntax(cur.pos(), "expected an agent"));
    }
    Ok((start, end))
}

struct AgentParser<'a> {
    system: &'a ConstraintSystem,
    templates: &'a [Template],
    procs: &'a BTreeMap<String, usize>,
}

impl AgentParser<'_> {
    fn parse_range(&self, toks: &[(Tok, Pos)], (start, end): (usize, usize)) -> Result<Agent, LangError> {
        let mut slice: Vec<(Tok, Pos)> = toks[start..end].to_vec();
        slice.push((Tok::Eof, toks[end].1));
        let mut cur = Cursor { toks: &slice, at: 0 };
        let agent = self.agent(&mut cur)?;
        if *cur.peek() != Tok::Eof {
            return Err(syntax(cur.pos(), format!("unexpected {} after agent", cur.peek().describe())));
        }
        Ok(agent)
    }

    /// `primary ("+" primary)*`, where a sum needs every part to be an
    /// unparenthesized ask. A `+` after anything else is left for an
    /// enclosing sum, so `ask(c) -> stop + ask(d) -> stop` is a sum.
    fn agent(&self, cur: &mut Cursor) -> Result<Agent, LangError> {
        let (first, grouped) = self.primary(cur)?;
        if *cur.peek() != Tok::Plus || grouped || !matches!(first, Agent::Ask(_)) {
            return Ok(first);
        }
        let mut branches = Vec::new();
        let mut part = (first, grouped, cur.pos());
        loop {
            match part {
                (Agent::Ask(action), false, _) => branches.push(action),
                (_, _, pos) => return Err(syntax(pos, "every branch of a sum must be an ask")),
            }
            if !cur.eat(&Tok::Plus) {
                break;
            }
            let pos = cur.pos();
            let (next, grouped) = self.primary(cur)?;
            part = (next, grouped, pos);
        }
        Ok(Agent::Sum(branches))
    }

    fn primary(&self, cur: &mut Cursor) -> Result<(Agent, bool), LangError> {
        let pos = cur.pos();
        match cur.peek().clone() {
            Tok::Ident(kw) if kw == "stop" => {
                cur.bump();
                Ok((Agent::Stop, false))
            }
            Tok::Ident(kw) if kw == "tell" || kw == "ask" => {
                cur.bump();
                cur.expect(&Tok::LParen)?;
                let constraint = self.cexpr(cur)?;
                cur.expect(&Tok::RParen)?;
                let threshold = self.arrow(cur)?;
                let next = Box::new(self.agent(cur)?);
                let action = Action { constraint, threshold, next };
                Ok((if kw == "tell" { Agent::Tell(action) } else { Agent::Ask(action) }, false))
            }
            Tok::Ident(kw) if kw == "exists" => {
                cur.bump();
                let x = cur.var()?;
                cur.expect(&Tok::Dot)?;
                Ok((Agent::exists(x, self.agent(cur)?), false))
            }
            Tok::LParen => {
                cur.bump();
                let mut acc = self.agent(cur)?;
                let mut parallel = false;
                while cur.eat(&Tok::Bars) {
                    acc = Agent::par(acc, self.agent(cur)?);
                    parallel = true;
                }
                cur.expect(&Tok::RParen)?;
                Ok((acc, !parallel))
            }
            Tok::Ident(_) => {
                let (name, pos) = cur.name("a procedure name")?;
                let expected =
                    *self.procs.get(&name).ok_or_else(|| LangError::UnboundProcedure { pos, name: name.clone() })?;
                cur.expect(&Tok::LParen)?;
                let args = cur.var_list(&Tok::RParen)?;
                cur.expect(&Tok::RParen)?;
                if args.len() != expected {
                    return Err(LangError::Arity { pos, name, expected, found: args.len() });
                }
                Ok((Agent::Call { name, args, pos }, false))
            }
            t => Err(syntax(pos, format!("expected an agent, found {}", t.describe()))),
        }
    }

    fn template(&self, name: &str, pos: Pos) -> Result<&Template, LangError> {
        self.templates
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| LangError::UnboundConstraint { pos, name: name.to_string() })
    }

    fn cexpr(&self, cur: &mut Cursor) -> Result<CExpr, LangError> {
        if cur.is_kw("diag") {
            cur.bump();
            cur.expect(&Tok::LParen)?;
            let x = cur.var()?;
            cur.expect(&Tok::Comma)?;
            let y = cur.var()?;
            cur.expect(&Tok::RParen)?;
            return Ok(CExpr::Diag(x, y));
        }
        if cur.is_kw("const") {
            cur.bump();
            cur.expect(&Tok::LParen)?;
            let v = cur.value(self.system.semiring())?;
            cur.expect(&Tok::RParen)?;
            return Ok(CExpr::Const(v));
        }
        let (name, pos) = cur.name("a constraint")?;
        let template = self.template(&name, pos)?;
        if *cur.peek() != Tok::LParen {
            return Ok(CExpr::Named { name, args: template.params.clone(), bare: true, pos });
        }
        cur.bump();
        let args = cur.var_list(&Tok::RParen)?;
        cur.expect(&Tok::RParen)?;
        if args.len() != template.params.len() {
            return Err(LangError::Arity { pos, name, expected: template.params.len(), found: args.len() });
        }
        Ok(CExpr::Named { name, args, bare: false, pos })
    }

    fn arrow(&self, cur: &mut Cursor) -> Result<Threshold, LangError> {
        cur.expect(&Tok::Arrow)?;
        if cur.eat(&Tok::Caret) {
            return Ok(Threshold::Level(cur.value(self.system.semiring())?));
        }
        if *cur.peek() == Tok::LBracket && matches!(cur.peek_at(2), Tok::RBracket) {
            cur.bump();
            let (name, pos) = cur.name("a cut constraint")?;
            cur.expect(&Tok::RBracket)?;
            let constraint = self.template(&name, pos)?.constraint.clone();
            return Ok(Threshold::Cut(CutLevel { label: Some(name), constraint }));
        }
        if *cur.peek() == Tok::LBracket {
            return Err(syntax(cur.pos(), "expected `->[name]`"));
        }
        Ok(Threshold::Eventual)
    }
}
