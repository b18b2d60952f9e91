//! Bounded analysis over reachable high-level states: exploration,
//! invariant checking with shortest counterexamples, deadlocks and
//! dangling-pointer detection.

use serde::Serialize;

use crate::engine::{EngineError, Mode, PnrdNet, PnrdState};
use crate::graph::{explore, Bounds, StateGraph};
use crate::lang::typecheck::{eval_invariant, TInvariant};
use crate::lang::EvalError;

pub type HlGraph = StateGraph<PnrdState, Mode>;

/// Breadth-first exploration of `(marking, store)` states. The store takes
/// part in state identity even where no token refers to it.
pub fn explore_hl(net: &PnrdNet, initial: PnrdState, bounds: Bounds) -> Result<HlGraph, EngineError> {
    explore(net, initial, bounds)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum InvariantOutcome {
    /// Holds on every explored state; `complete` is false when the graph
    /// was truncated, so only a prefix of the state space was covered.
    Holds { states: usize, complete: bool },
    /// A violating state and the labels of a shortest path reaching it.
    Violated { node: usize, path: Vec<String> },
}

impl InvariantOutcome {
    pub fn holds(&self) -> bool {
        matches!(self, InvariantOutcome::Holds { .. })
    }
}

/// Evaluates `inv` at every node in BFS order; the first violation is at
/// minimal depth, and its BFS-tree path is a shortest counterexample.
pub fn check_invariant(graph: &HlGraph, inv: &TInvariant) -> Result<InvariantOutcome, EvalError> {
    for (n, state) in graph.nodes.iter().enumerate() {
        if !eval_invariant(inv, &state.marking, &state.store)? {
            let path = graph.path_to(n).into_iter().map(|e| graph.edges[e].label.clone()).collect();
            return Ok(InvariantOutcome::Violated { node: n, path });
        }
    }
    Ok(InvariantOutcome::Holds { states: graph.len(), complete: !graph.truncated })
}

/// Explored states without enabled modes.
pub fn find_deadlocks<S, M>(graph: &StateGraph<S, M>) -> Vec<usize> {
    graph.sinks()
}

/// States holding a token whose pointer the store does not define.
pub fn dangling_states(graph: &HlGraph) -> Vec<usize> {
    (0..graph.len()).filter(|&n| !graph.nodes[n].dangling_pointers().is_empty()).collect()
}
