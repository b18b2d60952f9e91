//! Seeded and scripted runs, trace recording, replay and event-log export.
//!
//! A run picks among the canonical enabled modes at each step. Seeded runs
//! choose uniformly with a ChaCha generator, so a `(model, seed, max_steps)`
//! triple always yields the same trace.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{state_hash, TokenGame};
use crate::lang::parse_value;

type BoxError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("engine error: {0}")]
    Engine(#[source] BoxError),
    #[error("step {index}: no enabled mode of `{transition}` matches {binding:?}")]
    NoMatch { index: usize, transition: String, binding: BTreeMap<String, String> },
    #[error("step {index}: {count} enabled modes of `{transition}` match {binding:?}; bind more variables")]
    Ambiguous { index: usize, transition: String, binding: BTreeMap<String, String>, count: usize },
    #[error("step {index}: state hash {found} does not match recorded {expected}")]
    HashMismatch { index: usize, expected: String, found: String },
    #[error("trace index {found} at position {expected}")]
    BadIndex { expected: usize, found: usize },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn engine<E: std::error::Error + Send + Sync + 'static>(e: E) -> SimError {
    SimError::Engine(Box::new(e))
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Terminal {
    Deadlock,
    StepLimit,
    ScriptedEnd,
}

/// A transition name plus a partial binding, values written as literals.
/// It selects the single enabled mode that agrees on every listed variable.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptStep {
    pub transition: String,
    #[serde(default)]
    pub binding: BTreeMap<String, String>,
}

impl ScriptStep {
    pub fn new(transition: impl Into<String>) -> Self {
        Self { transition: transition.into(), binding: BTreeMap::new() }
    }

    pub fn bind(mut self, var: impl Into<String>, literal: impl Into<String>) -> Self {
        self.binding.insert(var.into(), literal.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Policy {
    Seeded(u64),
    Scripted(Vec<ScriptStep>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub index: usize,
    pub transition: String,
    pub binding: BTreeMap<String, String>,
    pub pre: String,
    pub post: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    /// Digest of the model the trace was recorded on.
    pub model: String,
    pub seed: Option<u64>,
    pub steps: Vec<Step>,
    pub terminal: Terminal,
}

impl Trace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("traces serialize")
    }
}

/// Every state visited and the mode that led to it.
#[derive(Debug, Clone)]
pub struct Run<S, M> {
    pub initial: S,
    pub steps: Vec<(M, S)>,
    pub terminal: Terminal,
}

impl<S, M> Run<S, M> {
    pub fn last(&self) -> &S {
        self.steps.last().map_or(&self.initial, |(_, s)| s)
    }
}

/// Digest identifying a model by its canonical text.
pub fn model_hash(canonical_source: &str) -> String {
    state_hash(canonical_source)
}

fn canonical_literal(lit: &str) -> String {
    parse_value(lit).map_or_else(|_| lit.trim().to_owned(), |v| v.to_string())
}

/// The one enabled mode selected by `step`.
pub fn select_mode<G: TokenGame>(game: &G, modes: &[G::Mode], step: &ScriptStep, index: usize) -> Result<G::Mode, SimError> {
    let want: BTreeMap<&str, String> = step.binding.iter().map(|(k, v)| (k.as_str(), canonical_literal(v))).collect();
    let hits: Vec<&G::Mode> = modes
        .iter()
        .filter(|m| game.mode_transition(m) == step.transition)
        .filter(|m| {
            let b = game.mode_binding(m);
            want.iter().all(|(k, v)| b.get(*k) == Some(v))
        })
        .collect();
    match hits.as_slice() {
        [one] => Ok((*one).clone()),
        [] => Err(SimError::NoMatch { index, transition: step.transition.clone(), binding: step.binding.clone() }),
        many => Err(SimError::Ambiguous {
            index,
            transition: step.transition.clone(),
            binding: step.binding.clone(),
            count: many.len(),
        }),
    }
}

/// Fires up to `max_steps` modes chosen by `policy`.
///
/// The step limit is tested first, so `max_steps == 0` ends with
/// [`Terminal::StepLimit`] even in a dead state. A script that runs out
/// ends with [`Terminal::ScriptedEnd`].
pub fn run<G: TokenGame>(game: &G, initial: G::State, policy: &Policy, max_steps: usize) -> Result<Run<G::State, G::Mode>, SimError> {
    let mut rng = match policy {
        Policy::Seeded(seed) => Some(ChaCha8Rng::seed_from_u64(*seed)),
        Policy::Scripted(_) => None,
    };
    let mut steps: Vec<(G::Mode, G::State)> = Vec::new();
    let mut current = initial.clone();
    let terminal = loop {
        let k = steps.len();
        if k >= max_steps {
            break Terminal::StepLimit;
        }
        if let Policy::Scripted(script) = policy {
            if k >= script.len() {
                break Terminal::ScriptedEnd;
            }
        }
        let modes = game.enabled_modes(&current).map_err(engine)?;
        let mode = match (policy, rng.as_mut()) {
            (Policy::Scripted(script), _) => select_mode(game, &modes, &script[k], k)?,
            (Policy::Seeded(_), Some(rng)) => {
                if modes.is_empty() {
                    break Terminal::Deadlock;
                }
                modes[rng.gen_range(0..modes.len())].clone()
            }
            (Policy::Seeded(_), None) => unreachable!("seeded policies own a generator"),
        };
        let next = game.fire(&current, &mode).map_err(engine)?;
        current = next.clone();
        steps.push((mode, next));
    };
    Ok(Run { initial, steps, terminal })
}

/// Records a run as a trace of state hashes.
pub fn record<G: TokenGame>(game: &G, model: &str, seed: Option<u64>, run: &Run<G::State, G::Mode>) -> Trace {
    let mut pre = state_hash(&game.state_key(&run.initial));
    let steps = run
        .steps
        .iter()
        .enumerate()
        .map(|(index, (mode, state))| {
            let post = state_hash(&game.state_key(state));
            Step {
                index,
                transition: game.mode_transition(mode).to_owned(),
                binding: game.mode_binding(mode),
                pre: std::mem::replace(&mut pre, post.clone()),
                post,
            }
        })
        .collect();
    Trace { model: model.to_owned(), seed, steps, terminal: run.terminal }
}

/// One seeded run, recorded.
pub fn simulate<G: TokenGame>(game: &G, model: &str, initial: G::State, seed: u64, max_steps: usize) -> Result<Trace, SimError> {
    let r = run(game, initial, &Policy::Seeded(seed), max_steps)?;
    Ok(record(game, model, Some(seed), &r))
}

/// `count` runs with seeds `seed, seed + 1, ...`.
pub fn simulate_many<G: TokenGame>(
    game: &G,
    model: &str,
    initial: &G::State,
    seed: u64,
    max_steps: usize,
    count: usize,
) -> Result<Vec<Trace>, SimError> {
    (0..count as u64).map(|k| simulate(game, model, initial.clone(), seed.wrapping_add(k), max_steps)).collect()
}

/// Re-fires a trace's modes from `initial`, checking every recorded hash;
/// returns the final state.
pub fn replay<G: TokenGame>(game: &G, initial: G::State, trace: &Trace) -> Result<G::State, SimError> {
    let mut current = initial;
    for (k, step) in trace.steps.iter().enumerate() {
        if step.index != k {
            return Err(SimError::BadIndex { expected: k, found: step.index });
        }
        let found = state_hash(&game.state_key(&current));
        if found != step.pre {
            return Err(SimError::HashMismatch { index: k, expected: step.pre.clone(), found });
        }
        let modes = game.enabled_modes(&current).map_err(engine)?;
        // Recorded bindings are complete and canonical: require exact equality.
        let mode = modes
            .into_iter()
            .find(|m| game.mode_transition(m) == step.transition && game.mode_binding(m) == step.binding)
            .ok_or_else(|| SimError::NoMatch { index: k, transition: step.transition.clone(), binding: step.binding.clone() })?;
        current = game.fire(&current, &mode).map_err(engine)?;
        let found = state_hash(&game.state_key(&current));
        if found != step.post {
            return Err(SimError::HashMismatch { index: k, expected: step.post.clone(), found });
        }
    }
    Ok(current)
}

/// Writes one CSV row per step: trace number, step index, logical
/// timestamp (the step index), transition, then one column per binding
/// variable seen in any trace, in name order.
pub fn export_log<W: Write>(traces: &[Trace], out: W) -> Result<(), SimError> {
    let vars: BTreeSet<&str> = traces.iter().flat_map(|t| &t.steps).flat_map(|s| s.binding.keys().map(String::as_str)).collect();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["trace", "step", "timestamp", "transition"];
    header.extend(vars.iter().copied());
    w.write_record(&header)?;
    for (t, trace) in traces.iter().enumerate() {
        for step in &trace.steps {
            let mut row = vec![t.to_string(), step.index.to_string(), step.index.to_string(), step.transition.clone()];
            row.extend(vars.iter().map(|v| step.binding.get(*v).cloned().unwrap_or_default()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::PnrdNet;
    use crate::lang::load_model;
    use crate::Net;

    fn chain() -> (Net, crate::Marking) {
        let net = Net::builder().place("i").place("f").transition("t").arc("i", "t").arc("t", "f").build().unwrap();
        let m = net.marking([("i", 1)]).unwrap();
        (net, m)
    }

    #[test]
    fn zero_steps_is_a_step_limit() {
        let (net, m) = chain();
        let t = simulate(&net, "x", m, 1, 0).unwrap();
        assert!(t.steps.is_empty());
        assert_eq!(t.terminal, Terminal::StepLimit);
    }

    #[test]
    fn dead_initial_state_gives_empty_trace() {
        let (net, _) = chain();
        let t = simulate(&net, "x", net.marking([]).unwrap(), 1, 10).unwrap();
        assert!(t.steps.is_empty());
        assert_eq!(t.terminal, Terminal::Deadlock);
    }

    #[test]
    fn hashes_chain_and_replay() {
        let src = "vars x : Int; places a : Int = [1, 2, 3]; b : Int; transitions t; u; \
                   arcs a -> t : x; t -> b : x; b -> u : x; u -> a : x;";
        let n = PnrdNet::new(load_model(src).unwrap());
        let t = simulate(&n, "m", n.initial_state(), 9, 25).unwrap();
        assert_eq!(t.steps.len(), 25);
        for w in t.steps.windows(2) {
            assert_eq!(w[0].post, w[1].pre);
        }
        replay(&n, n.initial_state(), &t).unwrap();
        let mut bad = t.clone();
        bad.steps[3].post = "0000000000000000".into();
        assert!(matches!(replay(&n, n.initial_state(), &bad), Err(SimError::HashMismatch { index: 3, .. })));
    }

    #[test]
    fn scripts_need_exactly_one_match() {
        let src = "vars x : Int; places a : Int = [1, 2]; b : Int; transitions t; arcs a -> t : x; t -> b : x;";
        let n = PnrdNet::new(load_model(src).unwrap());
        let ok = run(&n, n.initial_state(), &Policy::Scripted(vec![ScriptStep::new("t").bind("x", "2")]), 10).unwrap();
        assert_eq!(ok.terminal, Terminal::ScriptedEnd);
        assert_eq!(n.tokens(ok.last(), "b").unwrap().to_string(), "[2]");
        let amb = run(&n, n.initial_state(), &Policy::Scripted(vec![ScriptStep::new("t")]), 10);
        assert!(matches!(amb, Err(SimError::Ambiguous { count: 2, .. })));
        let none = run(&n, n.initial_state(), &Policy::Scripted(vec![ScriptStep::new("t").bind("x", "7")]), 10);
        assert!(matches!(none, Err(SimError::NoMatch { .. })));
    }

    #[test]
    fn csv_has_one_row_per_step() {
        let (net, m) = chain();
        let empty: Vec<u8> = Vec::new();
        let mut buf = empty.clone();
        export_log(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "trace,step,timestamp,transition\n");
        let traces = simulate_many(&net, "x", &m, 0, 5, 3).unwrap();
        let mut buf = empty;
        export_log(&traces, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().nth(1).unwrap().starts_with("0,0,0,t"));
    }
}
