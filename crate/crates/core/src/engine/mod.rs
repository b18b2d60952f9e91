//! Token games for colored nets and nets with reference data.
//!
//! Both engines share one binding matcher: modes are found by matching
//! input-arc patterns against the tokens present, then filtered by the full
//! input demand and the guard.

mod binding;
pub mod cpn;
pub mod pnrd;
pub mod snapshot;

use std::fmt;

use thiserror::Error;

use crate::lang::{Binding, EvalError};
use crate::multiset::MultisetError;

pub use binding::marking_key;
pub use cpn::{ColoredMarking, ColoredNet};
pub use pnrd::{PnrdNet, PnrdState};
pub use snapshot::Snapshot;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("unknown transition `{0}`")]
    UnknownTransition(String),
    #[error("transition `{transition}` is not enabled in mode {binding}")]
    NotEnabled { transition: String, binding: String },
    #[error("binding for `{transition}` does not assign `{var}`")]
    IncompleteBinding { transition: String, var: String },
    #[error("transition `{transition}` produced a token holding dangling pointer @{pointer}")]
    DanglingToken { transition: String, pointer: String },
    #[error("not a colored net: {0}")]
    NotColored(String),
    #[error("bad snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Multiset(#[from] MultisetError),
}

/// A transition together with a binding of its variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mode {
    pub transition: usize,
    pub name: String,
    pub binding: Binding,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.name, self.binding)
    }
}
