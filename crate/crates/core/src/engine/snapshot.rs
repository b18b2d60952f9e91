//! JSON state snapshots: tokens per place as `(literal, count)` pairs and
//! the store as pointer to literal. Maps are sorted, so output is stable.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EngineError, PnrdState};
use crate::lang::{parse_value, GlobalStore, TypedModel};
use crate::multiset::Multiset;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub marking: BTreeMap<String, Vec<(String, u64)>>,
    /// Keys are written `@name`; the `@` is optional on input.
    #[serde(default)]
    pub store: BTreeMap<String, String>,
}

impl Snapshot {
    pub fn of(model: &TypedModel, state: &PnrdState) -> Self {
        let marking = model
            .places
            .iter()
            .zip(&state.marking)
            .map(|(p, ms)| (p.name.clone(), ms.canonical_pairs()))
            .collect();
        let store = state.store.iter().map(|(k, v)| (format!("@{k}"), v.to_string())).collect();
        Self { marking, store }
    }

    pub fn from_json(text: &str) -> Result<Self, EngineError> {
        serde_json::from_str(text).map_err(|e| EngineError::Snapshot(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("snapshot maps have string keys")
    }

    /// Builds a state for `model`. Places not listed are empty; every token
    /// must fit its place's type and every pointer must be in the store.
    pub fn to_state(&self, model: &TypedModel) -> Result<PnrdState, EngineError> {
        let bad = |m: String| EngineError::Snapshot(m);
        let mut store = GlobalStore::new();
        for (k, lit) in &self.store {
            let name = k.strip_prefix('@').unwrap_or(k).to_owned();
            let v = parse_value(lit).map_err(|e| bad(format!("store entry {k}: {e}")))?;
            if let Some(decl) = model.pointers.iter().find(|p| p.name == name) {
                if !v.conforms(&decl.ty) {
                    return Err(bad(format!("store entry {k} does not have type {}", decl.ty)));
                }
            }
            store.insert(name, v);
        }
        let mut marking = vec![Multiset::new(); model.places.len()];
        for (place, tokens) in &self.marking {
            let i = model.place_index(place).ok_or_else(|| bad(format!("unknown place `{place}`")))?;
            for (lit, n) in tokens {
                let v = parse_value(lit).map_err(|e| bad(format!("token {lit} in `{place}`: {e}")))?;
                if !v.conforms(&model.places[i].ty) {
                    return Err(bad(format!("token {lit} does not have type {} of `{place}`", model.places[i].ty)));
                }
                marking[i].insert_n(v, *n)?;
            }
        }
        let state = PnrdState { marking, store };
        if let Some(p) = state.dangling_pointers().into_iter().next() {
            return Err(bad(format!("token refers to @{p}, which the store does not define")));
        }
        Ok(state)
    }
}
