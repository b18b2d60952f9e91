//! Token-game sessions: a model, the visited states and a cursor.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use pnrd_core::engine::{EngineError, Mode, PnrdNet, PnrdState};
use pnrd_core::Multiset;
use pnrd_core::lang::Value;

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("state version {given} is stale; the session is at version {current}")]
    Stale { given: u64, current: u64 },
    #[error("mode index {index} out of range ({count} enabled modes)")]
    BadIndex { index: usize, count: usize },
    #[error("already at the initial state")]
    AtInitial,
    #[error("no enabled modes")]
    Deadlock,
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// A state rendered for clients. Tokens are repeated by multiplicity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StateView {
    pub version: u64,
    pub places: BTreeMap<String, Vec<String>>,
    pub store: BTreeMap<String, String>,
    pub terminal: bool,
    pub cursor: usize,
    #[serde(rename = "historyLength")]
    pub history_length: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModeView {
    #[serde(rename = "modeIndex")]
    pub mode_index: usize,
    pub transition: String,
    pub binding: BTreeMap<String, String>,
    pub label: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PlaceDiff {
    pub added: Vec<String>,
    pub removed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StoreDiff {
    pub before: Option<String>,
    pub after: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Fired {
    pub fired: ModeView,
    pub state: StateView,
    /// Only places whose contents changed.
    pub places: BTreeMap<String, PlaceDiff>,
    /// Only pointers whose value changed.
    pub store: BTreeMap<String, StoreDiff>,
}

#[derive(Debug, Clone)]
pub struct Session {
    net: PnrdNet,
    /// `history[0]` is the initial state; `modes[k]` leads from
    /// `history[k]` to `history[k + 1]`.
    history: Vec<PnrdState>,
    modes: Vec<Mode>,
    cursor: usize,
    /// Bumped on every cursor move, so listings can be checked for staleness.
    version: u64,
    /// Enabled modes of the cursor state.
    enabled: Vec<Mode>,
}

fn tokens(ms: &Multiset<Value>) -> Vec<String> {
    ms.iter().flat_map(|(v, n)| std::iter::repeat_n(v.to_string(), *n as usize)).collect()
}

impl Session {
    pub fn new(net: PnrdNet, initial: PnrdState) -> Result<Self, SessionError> {
        let enabled = net.enabled_modes(&initial)?;
        Ok(Self { net, history: vec![initial], modes: Vec::new(), cursor: 0, version: 0, enabled })
    }

    pub fn net(&self) -> &PnrdNet {
        &self.net
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn current(&self) -> &PnrdState {
        &self.history[self.cursor]
    }

    pub fn history(&self) -> &[PnrdState] {
        &self.history
    }

    /// Modes fired along the history, in order.
    pub fn fired_modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn enabled(&self) -> &[Mode] {
        &self.enabled
    }

    pub fn view(&self) -> StateView {
        let s = self.current();
        let model = self.net.model();
        StateView {
            version: self.version,
            places: model.places.iter().zip(&s.marking).map(|(p, ms)| (p.name.clone(), tokens(ms))).collect(),
            store: s.store.iter().map(|(k, v)| (k.clone(), v.to_string())).collect(),
            terminal: self.enabled.is_empty(),
            cursor: self.cursor,
            history_length: self.history.len(),
        }
    }

    fn mode_view(&self, mode_index: usize, m: &Mode) -> ModeView {
        ModeView { mode_index, transition: m.name.clone(), binding: m.binding.to_strings(), label: m.to_string() }
    }

    pub fn mode_views(&self) -> Vec<ModeView> {
        self.enabled.iter().enumerate().map(|(i, m)| self.mode_view(i, m)).collect()
    }

    fn move_to(&mut self, cursor: usize) -> Result<(), SessionError> {
        self.enabled = self.net.enabled_modes(&self.history[cursor])?;
        self.cursor = cursor;
        self.version += 1;
        Ok(())
    }

    /// Fires the `index`-th mode of the listing made at `version`. Redo
    /// history beyond the cursor is discarded.
    pub fn fire(&mut self, index: usize, version: u64) -> Result<Fired, SessionError> {
        if version != self.version {
            return Err(SessionError::Stale { given: version, current: self.version });
        }
        self.fire_index(index)
    }

    fn fire_index(&mut self, index: usize) -> Result<Fired, SessionError> {
        let mode = self
            .enabled
            .get(index)
            .cloned()
            .ok_or(SessionError::BadIndex { index, count: self.enabled.len() })?;
        let before = self.current().clone();
        let after = self.net.fire_mode(&before, &mode)?;
        self.history.truncate(self.cursor + 1);
        self.modes.truncate(self.cursor);
        self.history.push(after.clone());
        self.modes.push(mode.clone());
        self.move_to(self.cursor + 1)?;

        let mut places = BTreeMap::new();
        for ((p, old), new) in self.net.model().places.iter().zip(&before.marking).zip(&after.marking) {
            if old != new {
                let diff = PlaceDiff { added: tokens(&new.subtract(old)), removed: tokens(&old.subtract(new)) };
                places.insert(p.name.clone(), diff);
            }
        }
        let mut store = BTreeMap::new();
        for k in before.store.keys().chain(after.store.keys()) {
            let (b, a) = (before.store.get(k), after.store.get(k));
            if b != a {
                store.insert(k.clone(), StoreDiff { before: b.map(Value::to_string), after: a.map(Value::to_string) });
            }
        }
        Ok(Fired { fired: self.mode_view(index, &mode), state: self.view(), places, store })
    }

    /// Fires a uniformly chosen enabled mode.
    pub fn random_step(&mut self, seed: u64) -> Result<Fired, SessionError> {
        if self.enabled.is_empty() {
            return Err(SessionError::Deadlock);
        }
        let index = ChaCha8Rng::seed_from_u64(seed).gen_range(0..self.enabled.len());
        self.fire_index(index)
    }

    pub fn undo(&mut self) -> Result<StateView, SessionError> {
        if self.cursor == 0 {
            return Err(SessionError::AtInitial);
        }
        self.move_to(self.cursor - 1)?;
        Ok(self.view())
    }

    pub fn reset(&mut self) -> Result<StateView, SessionError> {
        self.move_to(0)?;
        Ok(self.view())
    }
}
