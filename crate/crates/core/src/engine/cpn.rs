//! Colored Petri nets: typed tokens, guards and arc expressions, no store.

use std::collections::BTreeMap;
use std::fmt;

use super::binding::{self, marking_key};
use super::{EngineError, Mode};
use crate::graph::TokenGame;
use crate::lang::{Binding, GlobalStore, TypedModel, Value};
use crate::multiset::Multiset;

/// Tokens per place, indexed like the model's places.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColoredMarking(pub Vec<Multiset<Value>>);

impl ColoredMarking {
    pub fn place(&self, i: usize) -> &Multiset<Value> {
        &self.0[i]
    }
}

/// A checked model without pointers or operators, run under the colored
/// firing rule.
#[derive(Debug, Clone)]
pub struct ColoredNet {
    model: TypedModel,
    empty: GlobalStore,
}

impl ColoredNet {
    pub fn new(model: TypedModel) -> Result<Self, EngineError> {
        if !model.is_pointer_free() {
            return Err(EngineError::NotColored("the model declares pointers, reference types or operators".into()));
        }
        Ok(Self { model, empty: GlobalStore::new() })
    }

    pub fn model(&self) -> &TypedModel {
        &self.model
    }

    pub fn initial_marking(&self) -> ColoredMarking {
        ColoredMarking(self.model.initial_marking())
    }

    fn transition(&self, t: &str) -> Result<usize, EngineError> {
        self.model.transition_index(t).ok_or_else(|| EngineError::UnknownTransition(t.to_owned()))
    }

    pub fn enumerate_bindings(&self, m: &ColoredMarking, t: &str) -> Result<Vec<Binding>, EngineError> {
        binding::enumerate(&self.model.transitions[self.transition(t)?], &m.0, &self.empty)
    }

    pub fn is_enabled(&self, m: &ColoredMarking, t: &str, b: &Binding) -> Result<bool, EngineError> {
        binding::is_enabled(&self.model.transitions[self.transition(t)?], &m.0, &self.empty, b)
    }

    pub fn fire(&self, m: &ColoredMarking, t: &str, b: &Binding) -> Result<ColoredMarking, EngineError> {
        let mode = Mode { transition: self.transition(t)?, name: t.to_owned(), binding: b.clone() };
        self.fire_mode(m, &mode)
    }

    pub fn fire_mode(&self, m: &ColoredMarking, mode: &Mode) -> Result<ColoredMarking, EngineError> {
        Ok(ColoredMarking(binding::fire(&self.model, &m.0, &self.empty, mode)?.0))
    }

    pub fn enabled_modes(&self, m: &ColoredMarking) -> Result<Vec<Mode>, EngineError> {
        binding::enabled_modes(&self.model, &m.0, &self.empty)
    }

    pub fn key(&self, m: &ColoredMarking) -> String {
        marking_key(&self.model, &m.0)
    }

    /// Whether every token has its place's type.
    pub fn is_well_typed(&self, m: &ColoredMarking) -> bool {
        self.model.places.iter().zip(&m.0).all(|(p, ms)| ms.elements().all(|v| v.conforms(&p.ty)))
    }
}

impl TokenGame for ColoredNet {
    type State = ColoredMarking;
    type Mode = Mode;
    type Error = EngineError;

    fn enabled_modes(&self, state: &ColoredMarking) -> Result<Vec<Mode>, EngineError> {
        ColoredNet::enabled_modes(self, state)
    }

    fn fire(&self, state: &ColoredMarking, mode: &Mode) -> Result<ColoredMarking, EngineError> {
        self.fire_mode(state, mode)
    }

    fn state_key(&self, state: &ColoredMarking) -> String {
        self.key(state)
    }

    fn mode_transition<'a>(&'a self, mode: &'a Mode) -> &'a str {
        &mode.name
    }

    fn mode_label(&self, mode: &Mode) -> String {
        mode.to_string()
    }

    fn mode_binding(&self, mode: &Mode) -> BTreeMap<String, String> {
        mode.binding.to_strings()
    }
}

impl fmt::Display for ColoredMarking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join(" | "))
    }
}
