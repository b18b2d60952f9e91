use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::types::TypeExpr;

/// Token and data values. Pointers are opaque names into the global store.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Unit,
    Bool(bool),
    Int(i64),
    Str(String),
    Tuple(Vec<Value>),
    Set(BTreeSet<Value>),
    List(Vec<Value>),
    Record(BTreeMap<String, Value>),
    Pointer(String),
}

impl Value {
    pub fn str(s: impl Into<String>) -> Self {
        Value::Str(s.into())
    }

    pub fn pointer(name: impl Into<String>) -> Self {
        Value::Pointer(name.into())
    }

    pub fn int_set<I: IntoIterator<Item = i64>>(items: I) -> Self {
        Value::Set(items.into_iter().map(Value::Int).collect())
    }

    pub fn int_list<I: IntoIterator<Item = i64>>(items: I) -> Self {
        Value::List(items.into_iter().map(Value::Int).collect())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Value::Unit => "unit",
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Str(_) => "string",
            Value::Tuple(_) => "tuple",
            Value::Set(_) => "set",
            Value::List(_) => "list",
            Value::Record(_) => "record",
            Value::Pointer(_) => "pointer",
        }
    }

    /// Structural conformance to a resolved type. Pointers conform to any
    /// `Ref` type; the store decides what they point at.
    pub fn conforms(&self, ty: &TypeExpr) -> bool {
        match (self, ty) {
            (_, TypeExpr::Unknown) => true,
            (Value::Unit, TypeExpr::Unit)
            | (Value::Bool(_), TypeExpr::Bool)
            | (Value::Int(_), TypeExpr::Int)
            | (Value::Str(_), TypeExpr::Str)
            | (Value::Pointer(_), TypeExpr::Ref(_)) => true,
            (Value::Tuple(vs), TypeExpr::Tuple(ts)) => {
                vs.len() == ts.len() && vs.iter().zip(ts).all(|(v, t)| v.conforms(t))
            }
            (Value::Set(vs), TypeExpr::Set(t)) => vs.iter().all(|v| v.conforms(t)),
            (Value::List(vs), TypeExpr::List(t)) => vs.iter().all(|v| v.conforms(t)),
            (Value::Record(vs), TypeExpr::Record(ts)) => {
                vs.len() == ts.len() && vs.iter().all(|(k, v)| ts.get(k).is_some_and(|t| v.conforms(t)))
            }
            _ => false,
        }
    }

    /// Every pointer name occurring anywhere inside this value.
    pub fn pointers(&self, out: &mut BTreeSet<String>) {
        match self {
            Value::Pointer(p) => {
                out.insert(p.clone());
            }
            Value::Tuple(vs) | Value::List(vs) => vs.iter().for_each(|v| v.pointers(out)),
            Value::Set(vs) => vs.iter().for_each(|v| v.pointers(out)),
            Value::Record(fs) => fs.values().for_each(|v| v.pointers(out)),
            _ => {}
        }
    }
}

pub(crate) fn write_str_literal(f: &mut impl fmt::Write, s: &str) -> fmt::Result {
    f.write_char('"')?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            c => f.write_char(c)?,
        }
    }
    f.write_char('"')
}

fn write_seq(f: &mut fmt::Formatter<'_>, open: &str, items: impl Iterator<Item = impl fmt::Display>, close: &str) -> fmt::Result {
    f.write_str(open)?;
    for (i, v) in items.enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{v}")?;
    }
    f.write_str(close)
}

/// Compact literal syntax, e.g. `(1,[1,2])`, `{completed:{1,2}}`, `@pf1`.
/// The output parses back to the same value.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit => f.write_str("()"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(n) => write!(f, "{n}"),
            Value::Str(s) => write_str_literal(f, s),
            Value::Tuple(vs) if vs.len() == 1 => write!(f, "({},)", vs[0]),
            Value::Tuple(vs) => write_seq(f, "(", vs.iter(), ")"),
            Value::Set(vs) => write_seq(f, "{", vs.iter(), "}"),
            Value::List(vs) => write_seq(f, "[", vs.iter(), "]"),
            Value::Record(fs) => write_seq(f, "{", fs.iter().map(|(k, v)| format!("{k}:{v}")), "}"),
            Value::Pointer(p) => write!(f, "@{p}"),
        }
    }
}
