//! Nets with reference data: states pair a marking with a global store that
//! pointer tokens refer to; transitions may carry store operators.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::binding::{self, marking_key};
use super::{EngineError, Mode};
use crate::graph::TokenGame;
use crate::lang::{Binding, GlobalStore, TypedModel, Value};
use crate::multiset::Multiset;

/// `(m, s)`: tokens per place (indexed like the model's places) and the store.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PnrdState {
    pub marking: Vec<Multiset<Value>>,
    pub store: GlobalStore,
}

impl PnrdState {
    /// Pointers held by tokens that the store does not define.
    pub fn dangling_pointers(&self) -> BTreeSet<String> {
        let mut ptrs = BTreeSet::new();
        for ms in &self.marking {
            for v in ms.elements() {
                v.pointers(&mut ptrs);
            }
        }
        ptrs.retain(|p| !self.store.contains_key(p));
        ptrs
    }
}

#[derive(Debug, Clone)]
pub struct PnrdNet {
    model: TypedModel,
}

impl PnrdNet {
    pub fn new(model: TypedModel) -> Self {
        Self { model }
    }

    pub fn model(&self) -> &TypedModel {
        &self.model
    }

    pub fn initial_state(&self) -> PnrdState {
        PnrdState { marking: self.model.initial_marking(), store: self.model.initial_store() }
    }

    fn transition(&self, t: &str) -> Result<usize, EngineError> {
        self.model.transition_index(t).ok_or_else(|| EngineError::UnknownTransition(t.to_owned()))
    }

    /// Bindings of value and reference variables; guards read the store.
    pub fn enumerate_bindings(&self, s: &PnrdState, t: &str) -> Result<Vec<Binding>, EngineError> {
        binding::enumerate(&self.model.transitions[self.transition(t)?], &s.marking, &s.store)
    }

    pub fn is_enabled(&self, s: &PnrdState, t: &str, b: &Binding) -> Result<bool, EngineError> {
        binding::is_enabled(&self.model.transitions[self.transition(t)?], &s.marking, &s.store, b)
    }

    pub fn fire(&self, s: &PnrdState, t: &str, b: &Binding) -> Result<PnrdState, EngineError> {
        let mode = Mode { transition: self.transition(t)?, name: t.to_owned(), binding: b.clone() };
        self.fire_mode(s, &mode)
    }

    pub fn fire_mode(&self, s: &PnrdState, mode: &Mode) -> Result<PnrdState, EngineError> {
        let (marking, store) = binding::fire(&self.model, &s.marking, &s.store, mode)?;
        Ok(PnrdState { marking, store })
    }

    pub fn enabled_modes(&self, s: &PnrdState) -> Result<Vec<Mode>, EngineError> {
        binding::enabled_modes(&self.model, &s.marking, &s.store)
    }

    /// Canonical marking rendering, without the store.
    pub fn marking_key(&self, s: &PnrdState) -> String {
        marking_key(&self.model, &s.marking)
    }

    /// Canonical store rendering.
    pub fn store_key(store: &GlobalStore) -> String {
        let mut out = String::new();
        for (i, (p, v)) in store.iter().enumerate() {
            if i > 0 {
                out.push_str("; ");
            }
            let _ = write!(out, "@{p}={v}");
        }
        out
    }

    /// Tokens of a place by name.
    pub fn tokens<'a>(&self, s: &'a PnrdState, place: &str) -> Option<&'a Multiset<Value>> {
        self.model.place_index(place).map(|i| &s.marking[i])
    }
}

impl TokenGame for PnrdNet {
    type State = PnrdState;
    type Mode = Mode;
    type Error = EngineError;

    fn enabled_modes(&self, state: &PnrdState) -> Result<Vec<Mode>, EngineError> {
        PnrdNet::enabled_modes(self, state)
    }

    fn fire(&self, state: &PnrdState, mode: &Mode) -> Result<PnrdState, EngineError> {
        self.fire_mode(state, mode)
    }

    /// The store is part of the state, referenced or not.
    fn state_key(&self, state: &PnrdState) -> String {
        format!("{} || {}", self.marking_key(state), Self::store_key(&state.store))
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
