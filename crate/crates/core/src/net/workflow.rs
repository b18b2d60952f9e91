//! Workflow nets: structural validation and classical soundness.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::Serialize;

use super::{NetError, PetriNet, PlainMarking};
use crate::graph::{explore, Bounds};
use crate::multiset::{Count, Multiset};

/// A Petri net with designated source and sink places.
#[derive(Debug, Clone)]
pub struct WorkflowNet<C: Count = u64> {
    pub net: PetriNet<C>,
    pub source: String,
    pub sink: String,
}

impl<C: Count> WorkflowNet<C> {
    pub fn new(net: PetriNet<C>, source: impl Into<String>, sink: impl Into<String>) -> Self {
        Self { net, source: source.into(), sink: sink.into() }
    }

    /// The marking with a single token in the source place.
    pub fn initial_marking(&self) -> PlainMarking<C> {
        PlainMarking(Multiset::singleton(self.source.clone()))
    }

    pub fn final_marking(&self) -> PlainMarking<C> {
        PlainMarking(Multiset::singleton(self.sink.clone()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WfViolation {
    /// `•i` is not empty.
    SourceHasInputs { source: String, transitions: Vec<String> },
    /// `f•` is not empty.
    SinkHasOutputs { sink: String, transitions: Vec<String> },
    /// The node lies on no directed path from the source to the sink.
    OffPath { node: String, from_source: bool, to_sink: bool },
}

impl fmt::Display for WfViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WfViolation::SourceHasInputs { source, transitions } => {
                write!(f, "source place `{source}` has incoming arcs from {}", transitions.join(", "))
            }
            WfViolation::SinkHasOutputs { sink, transitions } => {
                write!(f, "sink place `{sink}` has outgoing arcs to {}", transitions.join(", "))
            }
            WfViolation::OffPath { node, from_source, to_sink } => {
                let why = match (from_source, to_sink) {
                    (false, false) => "unreachable from the source and cannot reach the sink",
                    (false, true) => "unreachable from the source",
                    _ => "cannot reach the sink",
                };
                write!(f, "node `{node}` is {why}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct WfReport {
    pub violations: Vec<WfViolation>,
}

impl WfReport {
    pub fn is_workflow_net(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the structural workflow-net conditions. The report is empty iff
/// the net is a WF-net with the given source and sink.
pub fn wf_validate<C: Count>(net: &PetriNet<C>, source: &str, sink: &str) -> Result<WfReport, NetError> {
    for p in [source, sink] {
        if !net.is_place(p) {
            return Err(NetError::UnknownPlace(p.to_owned()));
        }
    }
    let mut violations = Vec::new();
    let inputs = net.place_inputs(source);
    if !inputs.is_empty() {
        violations.push(WfViolation::SourceHasInputs {
            source: source.to_owned(),
            transitions: inputs.into_iter().map(str::to_owned).collect(),
        });
    }
    let outputs = net.place_outputs(sink);
    if !outputs.is_empty() {
        violations.push(WfViolation::SinkHasOutputs {
            sink: sink.to_owned(),
            transitions: outputs.into_iter().map(str::to_owned).collect(),
        });
    }
    let forward = reach(source, |n| net.successors(n));
    let backward = reach(sink, |n| net.predecessors(n));
    for node in net.places().iter().chain(net.transitions()) {
        let from_source = forward.contains(node.as_str());
        let to_sink = backward.contains(node.as_str());
        if !(from_source && to_sink) {
            violations.push(WfViolation::OffPath { node: node.clone(), from_source, to_sink });
        }
    }
    Ok(WfReport { violations })
}

fn reach<'a>(start: &'a str, next: impl Fn(&str) -> Vec<&'a str>) -> BTreeSet<&'a str> {
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(n) = queue.pop_front() {
        for m in next(n) {
            if seen.insert(m) {
                queue.push_back(m);
            }
        }
    }
    seen
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum UnsoundReason {
    Structural { violation: WfViolation },
    /// The final marking is unreachable from this state.
    CannotComplete { state: String },
    /// A reachable state marks the sink together with other tokens.
    ImproperCompletion { state: String },
    DeadTransition { transition: String },
}

impl fmt::Display for UnsoundReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnsoundReason::Structural { violation } => write!(f, "not a workflow net: {violation}"),
            UnsoundReason::CannotComplete { state } => write!(f, "cannot complete from {state}"),
            UnsoundReason::ImproperCompletion { state } => write!(f, "improper completion in {state}"),
            UnsoundReason::DeadTransition { transition } => write!(f, "transition `{transition}` is dead"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Soundness {
    Sound { states: usize },
    Unsound { reasons: Vec<UnsoundReason> },
    /// The state space exceeded the bounds.
    Inconclusive { states: usize },
}

/// Classical soundness: option to complete, proper completion and no dead
/// transitions, decided on the reachability graph from one source token.
pub fn wf_soundness<C: Count>(wf: &WorkflowNet<C>, bounds: Bounds) -> Result<Soundness, NetError> {
    let report = wf_validate(&wf.net, &wf.source, &wf.sink)?;
    if !report.is_workflow_net() {
        return Ok(Soundness::Unsound {
            reasons: report.violations.into_iter().map(|violation| UnsoundReason::Structural { violation }).collect(),
        });
    }
    let graph = explore(&wf.net, wf.initial_marking(), bounds)?;
    if graph.truncated {
        return Ok(Soundness::Inconclusive { states: graph.len() });
    }
    let final_marking = wf.final_marking();
    let can_finish = graph.backward_reachable(|n| graph.nodes[n] == final_marking);
    let mut reasons = Vec::new();
    for (n, state) in graph.nodes.iter().enumerate() {
        if !can_finish[n] {
            reasons.push(UnsoundReason::CannotComplete { state: state.to_string() });
        }
        if !state.get(&wf.sink).is_zero() && *state != final_marking {
            reasons.push(UnsoundReason::ImproperCompletion { state: state.to_string() });
        }
    }
    let fired: BTreeSet<&str> = graph.edges.iter().map(|e| e.transition.as_str()).collect();
    for t in wf.net.transitions() {
        if !fired.contains(t.as_str()) {
            reasons.push(UnsoundReason::DeadTransition { transition: t.clone() });
        }
    }
    Ok(if reasons.is_empty() { Soundness::Sound { states: graph.len() } } else { Soundness::Unsound { reasons } })
}
