//! The bundled learnflow models with their narrative scenarios.
//!
//! `fig1` is a classical workflow net, `fig2` a colored net, `fig3` and
//! `fig4` use portfolio pointers. Each comes with scripted scenarios whose
//! checks describe the expected marking, store and enabled modes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{EngineError, PnrdNet, PnrdState, Snapshot};
use crate::lang::{load_model, parse_value, ModelError, TypedModel, Value};
use crate::multiset::Multiset;
use crate::net::WorkflowNet;
use crate::simulate::{run, select_mode, Policy, ScriptStep, SimError};

struct Files {
    id: &'static str,
    source: &'static str,
    scenarios: &'static str,
}

const FILES: &[Files] = &[
    Files {
        id: "fig1",
        source: include_str!("../../../models/paper/fig1.pn"),
        scenarios: include_str!("../../../models/paper/fig1.scenarios.json"),
    },
    Files {
        id: "fig2",
        source: include_str!("../../../models/paper/fig2.pn"),
        scenarios: include_str!("../../../models/paper/fig2.scenarios.json"),
    },
    Files {
        id: "fig3",
        source: include_str!("../../../models/paper/fig3.pn"),
        scenarios: include_str!("../../../models/paper/fig3.scenarios.json"),
    },
    Files {
        id: "fig4",
        source: include_str!("../../../models/paper/fig4.pn"),
        scenarios: include_str!("../../../models/paper/fig4.scenarios.json"),
    },
];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("unknown corpus model `{0}` (expected one of fig1, fig2, fig3, fig4)")]
    Unknown(String),
    #[error("corpus model {id}: {source}")]
    Model { id: String, source: ModelError },
    #[error("corpus scenarios {id}: {message}")]
    Scenarios { id: String, message: String },
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("bad initial state: {0}")]
    Initial(#[from] EngineError),
    #[error(transparent)]
    Run(#[from] SimError),
    #[error("after {after} steps: {message}")]
    Check { after: usize, message: String },
}

/// Expectations on the state reached after `after` scripted steps.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub after: usize,
    /// Tokens (with repetition) that must be included in each place.
    #[serde(default)]
    pub present: BTreeMap<String, Vec<String>>,
    /// Tokens that must not occur in each place.
    #[serde(default)]
    pub absent: BTreeMap<String, Vec<String>>,
    /// Exact contents of each listed place.
    #[serde(default)]
    pub marking: BTreeMap<String, Vec<String>>,
    /// Exact value of each listed pointer.
    #[serde(default)]
    pub store: BTreeMap<String, String>,
    /// Number of enabled modes per transition.
    #[serde(default)]
    pub modes: BTreeMap<String, usize>,
    /// Each must match at least one enabled mode.
    #[serde(default)]
    pub enabled: Vec<ScriptStep>,
    /// Each must match no enabled mode.
    #[serde(default)]
    pub disabled: Vec<ScriptStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    /// Replaces the model's initial state.
    #[serde(default)]
    pub initial: Option<Snapshot>,
    pub steps: Vec<ScriptStep>,
    #[serde(default)]
    pub checks: Vec<Check>,
}

#[derive(Debug, Deserialize)]
struct ScenarioFile {
    #[serde(default)]
    explore_from: Option<Snapshot>,
    scenarios: Vec<Scenario>,
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub id: &'static str,
    pub source: &'static str,
    pub model: TypedModel,
    pub initial: PnrdState,
    /// Starting point for exhaustive exploration. Equal to `initial` unless
    /// the model's own marking is too large to explore.
    pub explore_from: PnrdState,
    pub scenarios: Vec<Scenario>,
}

impl CorpusEntry {
    pub fn net(&self) -> PnrdNet {
        PnrdNet::new(self.model.clone())
    }

    pub fn scenario(&self, name: &str) -> Option<&Scenario> {
        self.scenarios.iter().find(|s| s.name == name)
    }

    /// The workflow net of `fig1`; `None` for the others.
    pub fn workflow(&self) -> Option<WorkflowNet> {
        let (net, _) = self.model.classical().ok()?;
        let source = net.places().iter().find(|p| net.place_inputs(p).is_empty())?.clone();
        let sink = net.places().iter().find(|p| net.place_outputs(p).is_empty())?.clone();
        Some(WorkflowNet::new(net, source, sink))
    }
}

pub fn ids() -> impl Iterator<Item = &'static str> {
    FILES.iter().map(|f| f.id)
}

pub fn load_corpus(id: &str) -> Result<CorpusEntry, CorpusError> {
    let files = FILES.iter().find(|f| f.id == id).ok_or_else(|| CorpusError::Unknown(id.to_owned()))?;
    let model = load_model(files.source).map_err(|source| CorpusError::Model { id: id.to_owned(), source })?;
    let bad = |message: String| CorpusError::Scenarios { id: id.to_owned(), message };
    let file: ScenarioFile = serde_json::from_str(files.scenarios).map_err(|e| bad(e.to_string()))?;
    let net = PnrdNet::new(model);
    let initial = net.initial_state();
    let explore_from = match &file.explore_from {
        Some(snap) => snap.to_state(net.model()).map_err(|e| bad(e.to_string()))?,
        None => initial.clone(),
    };
    Ok(CorpusEntry {
        id: files.id,
        source: files.source,
        model: net.model().clone(),
        initial,
        explore_from,
        scenarios: file.scenarios,
    })
}

fn literal_set(lits: &[String]) -> Result<Multiset<Value>, String> {
    let mut ms = Multiset::new();
    for lit in lits {
        let v = parse_value(lit).map_err(|e| format!("bad literal {lit}: {e}"))?;
        ms.insert(v).map_err(|e| e.to_string())?;
    }
    Ok(ms)
}

fn check_state(net: &PnrdNet, state: &PnrdState, check: &Check) -> Result<(), String> {
    let place = |name: &str| net.tokens(state, name).ok_or_else(|| format!("unknown place `{name}`"));
    for (p, lits) in &check.present {
        let want = literal_set(lits)?;
        let have = place(p)?;
        if !want.is_subset(have) {
            return Err(format!("`{p}` holds {have}, which does not include {want}"));
        }
    }
    for (p, lits) in &check.absent {
        let have = place(p)?;
        if let Some(v) = literal_set(lits)?.elements().find(|v| have.contains(v)) {
            return Err(format!("`{p}` holds {v}"));
        }
    }
    for (p, lits) in &check.marking {
        let want = literal_set(lits)?;
        let have = place(p)?;
        if &want != have {
            return Err(format!("`{p}` holds {have}, expected {want}"));
        }
    }
    for (ptr, lit) in &check.store {
        let want = parse_value(lit).map_err(|e| format!("bad literal {lit}: {e}"))?;
        let name = ptr.strip_prefix('@').unwrap_or(ptr);
        match state.store.get(name) {
            Some(v) if *v == want => {}
            Some(v) => return Err(format!("@{name} is {v}, expected {want}")),
            None => return Err(format!("@{name} is not allocated")),
        }
    }
    let modes = net.enabled_modes(state).map_err(|e| e.to_string())?;
    for (t, n) in &check.modes {
        if net.model().transition_index(t).is_none() {
            return Err(format!("unknown transition `{t}`"));
        }
        let found = modes.iter().filter(|m| &m.name == t).count();
        if found != *n {
            return Err(format!("`{t}` has {found} enabled modes, expected {n}"));
        }
    }
    for step in &check.enabled {
        match select_mode(net, &modes, step, 0) {
            Ok(_) | Err(SimError::Ambiguous { .. }) => {}
            Err(_) => return Err(format!("no enabled mode of `{}` matches {:?}", step.transition, step.binding)),
        }
    }
    for step in &check.disabled {
        if !matches!(select_mode(net, &modes, step, 0), Err(SimError::NoMatch { .. })) {
            return Err(format!("`{}` is enabled in a mode matching {:?}", step.transition, step.binding));
        }
    }
    Ok(())
}

/// Replays a scenario on `net` and evaluates its checks; returns the state
/// after the last step.
pub fn run_scenario(net: &PnrdNet, scenario: &Scenario) -> Result<PnrdState, ScenarioError> {
    let initial = match &scenario.initial {
        Some(snap) => snap.to_state(net.model())?,
        None => net.initial_state(),
    };
    let r = run(net, initial, &Policy::Scripted(scenario.steps.clone()), usize::MAX)?;
    for check in &scenario.checks {
        let state = if check.after == 0 { &r.initial } else {
            match r.steps.get(check.after - 1) {
                Some((_, s)) => s,
                None => {
                    return Err(ScenarioError::Check { after: check.after, message: "the script is shorter".into() })
                }
            }
        };
        check_state(net, state, check).map_err(|message| ScenarioError::Check { after: check.after, message })?;
    }
    Ok(r.last().clone())
}
