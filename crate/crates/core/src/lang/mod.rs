//! The model language: types, values, syntax, checking and evaluation.

pub mod ast;
pub mod eval;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod typecheck;
pub mod types;
pub mod value;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

pub use ast::{ModelAst, Pos};
pub use eval::{apply_operator, eval_expr, eval_guard, fresh_pointer, EvalError};
pub use parser::{parse_expr, parse_model, parse_type, parse_value};
pub use printer::{print_expr, print_model};
pub use typecheck::{typecheck, TExpr, TypeError, TypedModel};
pub use types::TypeExpr;
pub use value::Value;

/// Global data state: pointer name to value.
pub type GlobalStore = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: {message}")]
pub struct ParseError {
    pub pos: Pos,
    pub message: String,
}

impl ParseError {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        Self { pos, message: message.into() }
    }
}

/// Everything that can go wrong turning source text into a checked model.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("syntax error at {0}")]
    Parse(#[from] ParseError),
    #[error("{} type error(s); first: {}", .0.len(), .0[0])]
    Type(Vec<TypeError>),
}

impl ModelError {
    /// One line per problem, each starting with `line:col`.
    pub fn messages(&self) -> Vec<String> {
        match self {
            ModelError::Parse(e) => vec![e.to_string()],
            ModelError::Type(es) => es.iter().map(ToString::to_string).collect(),
        }
    }
}

/// Parses and type-checks a model file.
pub fn load_model(src: &str) -> Result<TypedModel, ModelError> {
    let ast = parse_model(src)?;
    typecheck(&ast).map_err(ModelError::Type)
}

/// Assignment of values to a transition's variables: one firing mode.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Binding(pub BTreeMap<String, Value>);

impl Binding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, var: &str) -> Option<&Value> {
        self.0.get(var)
    }

    pub fn insert(&mut self, var: impl Into<String>, value: Value) {
        self.0.insert(var.into(), value);
    }

    /// Variable name to compact literal.
    pub fn to_strings(&self) -> BTreeMap<String, String> {
        self.0.iter().map(|(k, v)| (k.clone(), v.to_string())).collect()
    }
}

impl FromIterator<(String, Value)> for Binding {
    fn from_iter<I: IntoIterator<Item = (String, Value)>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// `{id=34, r=[]}`
impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        f.write_str("}")
    }
}
