//! c-semirings `<A, +, x, 0, 1>` and the order `a <= b iff a + b = b` they induce.
//!
//! Only the four chain instances are provided:
//!
//! | kind          | carrier    | +   | x   | 0   | 1 |
//! |---------------|------------|-----|-----|-----|---|
//! | boolean       | {F, T}     | or  | and | F   | T |
//! | fuzzy         | [0, 1]     | max | min | 0   | 1 |
//! | probabilistic | [0, 1]     | max | *   | 0   | 1 |
//! | weighted      | [0, +inf]  | min | +   | inf | 0 |

use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use thiserror::Error;

/// Tolerance used when comparing floating carrier values.
pub const EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SemiringError {
    #[error("value {value} is outside the carrier of the {kind} semiring")]
    Carrier { kind: SemiringKind, value: Value },
    #[error("cannot read `{text}` as a {kind} value")]
    Unparsable { kind: SemiringKind, text: String },
    #[error("unknown semiring `{0}` (expected boolean, fuzzy, probabilistic or weighted)")]
    UnknownKind(String),
}

/// A semiring element. Which variant is legal depends on the active [`Semiring`].
#[derive(Debug, Clone, Copy)]
pub enum Value {
    Bool(bool),
    Real(f64),
}

impl Value {
    /// Real value with `-0.0` folded into `0.0` so that equality and hashing agree.
    pub fn real(x: f64) -> Value {
        Value::Real(if x == 0.0 { 0.0 } else { x })
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Value::Bool(b) => {
                if b {
                    1.0
                } else {
                    0.0
                }
            }
            Value::Real(x) => x,
        }
    }
}

// Structural (bitwise) equality. Semiring-aware comparison lives in `Semiring::approx_eq`.
impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Real(a), Value::Real(b)) => a.to_bits() == b.to_bits(),
            _ => false,
        }
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Value::Bool(b) => {
                0u8.hash(state);
                b.hash(state);
            }
            Value::Real(x) => {
                1u8.hash(state);
                x.to_bits().hash(state);
            }
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Real(x) if x.is_infinite() => f.write_str("inf"),
            Value::Real(x) => write!(f, "{x}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SemiringKind {
    Boolean,
    Fuzzy,
    Probabilistic,
    Weighted,
}

impl SemiringKind {
    pub const ALL: [SemiringKind; 4] = [
        SemiringKind::Boolean,
        SemiringKind::Fuzzy,
        SemiringKind::Probabilistic,
        SemiringKind::Weighted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SemiringKind::Boolean => "boolean",
            SemiringKind::Fuzzy => "fuzzy",
            SemiringKind::Probabilistic => "probabilistic",
            SemiringKind::Weighted => "weighted",
        }
    }
}

impl fmt::Display for SemiringKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SemiringKind {
    type Err = SemiringError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SemiringKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| SemiringError::UnknownKind(s.to_string()))
    }
}

/// One of the built-in c-semirings.
///
/// The unchecked operations ([`plus`](Semiring::plus), [`times`](Semiring::times),
/// [`le`](Semiring::le), ...) assume their arguments already belong to the
/// carrier; the checked ones ([`sum`](Semiring::sum), [`combine`](Semiring::combine),
/// [`leq`](Semiring::leq)) validate first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Semiring {
    kind: SemiringKind,
}

impl Semiring {
    pub const fn new(kind: SemiringKind) -> Semiring {
        Semiring { kind }
    }

    pub const fn boolean() -> Semiring {
        Semiring::new(SemiringKind::Boolean)
    }

    pub const fn fuzzy() -> Semiring {
        Semiring::new(SemiringKind::Fuzzy)
    }

    pub const fn probabilistic() -> Semiring {
        Semiring::new(SemiringKind::Probabilistic)
    }

    pub const fn weighted() -> Semiring {
        Semiring::new(SemiringKind::Weighted)
    }

    pub fn kind(&self) -> SemiringKind {
        self.kind
    }

    pub fn zero(&self) -> Value {
        match self.kind {
            SemiringKind::Boolean => Value::Bool(false),
            SemiringKind::Fuzzy | SemiringKind::Probabilistic => Value::Real(0.0),
            SemiringKind::Weighted => Value::Real(f64::INFINITY),
        }
    }

    pub fn one(&self) -> Value {
        match self.kind {
            SemiringKind::Boolean => Value::Bool(true),
            _ => Value::Real(if self.kind == SemiringKind::Weighted { 0.0 } else { 1.0 }),
        }
    }

    /// True for the semirings whose `x` is idempotent (boolean and fuzzy).
    pub fn idempotent_times(&self) -> bool {
        matches!(self.kind, SemiringKind::Boolean | SemiringKind::Fuzzy)
    }

    pub fn contains(&self, v: Value) -> bool {
        match (self.kind, v) {
            (SemiringKind::Boolean, Value::Bool(_)) => true,
            (SemiringKind::Fuzzy | SemiringKind::Probabilistic, Value::Real(x)) => {
                (0.0..=1.0).contains(&x)
            }
            (SemiringKind::Weighted, Value::Real(x)) => x >= 0.0 && !x.is_nan(),
            _ => false,
        }
    }

    pub fn check(&self, v: Value) -> Result<Value, SemiringError> {
        if self.contains(v) {
            Ok(match v {
                Value::Real(x) => Value::real(x),
                b => b,
            })
        } else {
            Err(SemiringError::Carrier { kind: self.kind, value: v })
        }
    }

    /// Reads a value literal: `true`/`false` (or `1`/`0`) for boolean, decimals
    /// for the others, `inf` for the weighted zero.
    pub fn parse_value(&self, text: &str) -> Result<Value, SemiringError> {
        let unparsable = || SemiringError::Unparsable { kind: self.kind, text: text.to_string() };
        let v = match self.kind {
            SemiringKind::Boolean => match text {
                "true" | "1" => Value::Bool(true),
                "false" | "0" => Value::Bool(false),
                _ => return Err(unparsable()),
            },
            _ => {
                let x = match text {
                    "inf" | "+inf" => f64::INFINITY,
                    _ => text.parse::<f64>().map_err(|_| unparsable())?,
                };
                Value::real(x)
            }
        };
        self.check(v)
    }

    /// Builds a value from a float; booleans read `x > 0.5` as true.
    pub fn from_f64(&self, x: f64) -> Result<Value, SemiringError> {
        match self.kind {
            SemiringKind::Boolean => Ok(Value::Bool(x > 0.5)),
            _ => self.check(Value::real(x)),
        }
    }

    pub fn plus(&self, a: Value, b: Value) -> Value {
        match (self.kind, a, b) {
            (SemiringKind::Boolean, Value::Bool(a), Value::Bool(b)) => Value::Bool(a || b),
            (SemiringKind::Weighted, Value::Real(a), Value::Real(b)) => Value::real(a.min(b)),
            (_, Value::Real(a), Value::Real(b)) => Value::real(a.max(b)),
            _ => panic!("{} semiring: mixed value tags {a:?}, {b:?}", self.kind),
        }
    }

    pub fn times(&self, a: Value, b: Value) -> Value {
        match (self.kind, a, b) {
            (SemiringKind::Boolean, Value::Bool(a), Value::Bool(b)) => Value::Bool(a && b),
            (SemiringKind::Fuzzy, Value::Real(a), Value::Real(b)) => Value::real(a.min(b)),
            (SemiringKind::Probabilistic, Value::Real(a), Value::Real(b)) => Value::real(a * b),
            (SemiringKind::Weighted, Value::Real(a), Value::Real(b)) => Value::real(a + b),
            _ => panic!("{} semiring: mixed value tags {a:?}, {b:?}", self.kind),
        }
    }

    /// Equality up to [`EPSILON`] for reals; infinities only equal themselves.
    pub fn approx_eq(&self, a: Value, b: Value) -> bool {
        match (a, b) {
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Real(a), Value::Real(b)) => {
                if a.is_infinite() || b.is_infinite() {
                    a == b
                } else {
                    (a - b).abs() <= EPSILON
                }
            }
            _ => false,
        }
    }

    /// `a <=_S b`, i.e. `a + b = b`.
    pub fn le(&self, a: Value, b: Value) -> bool {
        self.approx_eq(self.plus(a, b), b)
    }

    /// `a <_S b`: below and not equal.
    pub fn lt(&self, a: Value, b: Value) -> bool {
        self.le(a, b) && !self.approx_eq(a, b)
    }

    /// Greatest lower bound. The built-in carriers are chains, so this is the
    /// smaller of the two in `<=_S`.
    pub fn meet(&self, a: Value, b: Value) -> Value {
        if self.le(a, b) {
            a
        } else {
            b
        }
    }

    pub fn sum(&self, a: Value, b: Value) -> Result<Value, SemiringError> {
        Ok(self.plus(self.check(a)?, self.check(b)?))
    }

    pub fn combine(&self, a: Value, b: Value) -> Result<Value, SemiringError> {
        Ok(self.times(self.check(a)?, self.check(b)?))
    }

    pub fn leq(&self, a: Value, b: Value) -> Result<bool, SemiringError> {
        Ok(self.le(self.check(a)?, self.check(b)?))
    }
}

impl fmt::Display for Semiring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.kind.fmt(f)
    }
}
