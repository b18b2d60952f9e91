//! Classical place/transition nets over indistinguishable tokens.

mod json;
mod workflow;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::graph::TokenGame;
use crate::multiset::{Count, Multiset, MultisetError};

pub use json::NetFile;
pub use workflow::{wf_soundness, wf_validate, Soundness, UnsoundReason, WfReport, WfViolation, WorkflowNet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("unknown transition `{0}`")]
    UnknownTransition(String),
    #[error("unknown place `{0}`")]
    UnknownPlace(String),
    #[error("node `{0}` is declared twice")]
    DuplicateNode(String),
    #[error("node ids must be nonempty")]
    EmptyId,
    #[error("arc `{from}` -> `{to}` must connect a place and a transition")]
    BadArc { from: String, to: String },
    #[error("transition `{0}` is not enabled")]
    NotEnabled(String),
    #[error(transparent)]
    Multiset(#[from] MultisetError),
    #[error("invalid net file: {0}")]
    Format(String),
}

/// A Petri net `(P, T, F)` with natural arc weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PetriNet<C: Count = u64> {
    places: Vec<String>,
    transitions: Vec<String>,
    /// Display names, keyed by node id.
    labels: BTreeMap<String, String>,
    /// Preset `•t` of every transition, as a multiset over place ids.
    pre: Vec<Multiset<String, C>>,
    /// Postset `t•`.
    post: Vec<Multiset<String, C>>,
    place_index: HashMap<String, usize>,
    transition_index: HashMap<String, usize>,
}

impl<C: Count> PetriNet<C> {
    pub fn builder() -> NetBuilder<C> {
        NetBuilder::default()
    }

    pub fn places(&self) -> &[String] {
        &self.places
    }

    pub fn transitions(&self) -> &[String] {
        &self.transitions
    }

    pub fn label(&self, node: &str) -> Option<&str> {
        self.labels.get(node).map(String::as_str)
    }

    pub fn is_place(&self, id: &str) -> bool {
        self.place_index.contains_key(id)
    }

    pub fn is_transition(&self, id: &str) -> bool {
        self.transition_index.contains_key(id)
    }

    fn transition_idx(&self, t: &str) -> Result<usize, NetError> {
        self.transition_index
            .get(t)
            .copied()
            .ok_or_else(|| NetError::UnknownTransition(t.to_owned()))
    }

    pub fn preset(&self, t: &str) -> Result<&Multiset<String, C>, NetError> {
        Ok(&self.pre[self.transition_idx(t)?])
    }

    pub fn postset(&self, t: &str) -> Result<&Multiset<String, C>, NetError> {
        Ok(&self.post[self.transition_idx(t)?])
    }

    /// `F(x, y)`, zero for absent arcs.
    pub fn weight(&self, from: &str, to: &str) -> C {
        if let Some(&t) = self.transition_index.get(to) {
            self.pre[t].count(&from.to_owned())
        } else if let Some(&t) = self.transition_index.get(from) {
            self.post[t].count(&to.to_owned())
        } else {
            C::zero()
        }
    }

    /// Transitions with an arc into place `p` (`•p`).
    pub fn place_inputs(&self, p: &str) -> Vec<&str> {
        let p = p.to_owned();
        self.transitions
            .iter()
            .zip(&self.post)
            .filter(|(_, post)| post.contains(&p))
            .map(|(t, _)| t.as_str())
            .collect()
    }

    /// Transitions with an arc out of place `p` (`p•`).
    pub fn place_outputs(&self, p: &str) -> Vec<&str> {
        let p = p.to_owned();
        self.transitions
            .iter()
            .zip(&self.pre)
            .filter(|(_, pre)| pre.contains(&p))
            .map(|(t, _)| t.as_str())
            .collect()
    }

    /// Direct successors of a node in the flow graph.
    pub fn successors(&self, node: &str) -> Vec<&str> {
        if let Some(&t) = self.transition_index.get(node) {
            self.post[t].elements().map(String::as_str).collect()
        } else {
            self.place_outputs(node)
        }
    }

    /// Direct predecessors of a node in the flow graph.
    pub fn predecessors(&self, node: &str) -> Vec<&str> {
        if let Some(&t) = self.transition_index.get(node) {
            self.pre[t].elements().map(String::as_str).collect()
        } else {
            self.place_inputs(node)
        }
    }

    /// Same nodes with every arc reversed.
    pub fn reversed(&self) -> Self {
        let mut net = self.clone();
        std::mem::swap(&mut net.pre, &mut net.post);
        net
    }

    /// Builds a marking, rejecting places the net does not have.
    pub fn marking<'a, I>(&self, counts: I) -> Result<PlainMarking<C>, NetError>
    where
        I: IntoIterator<Item = (&'a str, C)>,
    {
        let mut m = Multiset::new();
        for (p, n) in counts {
            if !self.is_place(p) {
                return Err(NetError::UnknownPlace(p.to_owned()));
            }
            m.insert_n(p.to_owned(), n)?;
        }
        Ok(PlainMarking(m))
    }

    /// `t` is enabled in `m` iff `m(p) >= F(p, t)` for every place.
    pub fn is_enabled(&self, m: &PlainMarking<C>, t: &str) -> Result<bool, NetError> {
        Ok(self.pre[self.transition_idx(t)?].is_subset(&m.0))
    }

    /// Enabled transitions in lexicographic id order.
    pub fn enabled_set(&self, m: &PlainMarking<C>) -> Vec<&str> {
        let mut out: Vec<&str> = self
            .transitions
            .iter()
            .zip(&self.pre)
            .filter(|(_, pre)| pre.is_subset(&m.0))
            .map(|(t, _)| t.as_str())
            .collect();
        out.sort_unstable();
        out
    }

    /// `m'(p) = m(p) - F(p, t) + F(t, p)`.
    pub fn fire(&self, m: &PlainMarking<C>, t: &str) -> Result<PlainMarking<C>, NetError> {
        let idx = self.transition_idx(t)?;
        if !self.pre[idx].is_subset(&m.0) {
            return Err(NetError::NotEnabled(t.to_owned()));
        }
        Ok(PlainMarking(m.0.subtract(&self.pre[idx]).sum(&self.post[idx])?))
    }
}

impl<C: Count> TokenGame for PetriNet<C> {
    type State = PlainMarking<C>;
    type Mode = String;
    type Error = NetError;

    fn enabled_modes(&self, state: &PlainMarking<C>) -> Result<Vec<String>, NetError> {
        Ok(self.enabled_set(state).into_iter().map(str::to_owned).collect())
    }

    fn fire(&self, state: &PlainMarking<C>, mode: &String) -> Result<PlainMarking<C>, NetError> {
        PetriNet::fire(self, state, mode)
    }

    fn state_key(&self, state: &PlainMarking<C>) -> String {
        state.to_string()
    }

    fn mode_transition<'a>(&'a self, mode: &'a String) -> &'a str {
        mode
    }

    fn mode_label(&self, mode: &String) -> String {
        mode.clone()
    }
}

/// A marking of a classical net, viewed as a multiset over place ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct PlainMarking<C: Count = u64>(pub Multiset<String, C>);

impl<C: Count> PlainMarking<C> {
    pub fn get(&self, p: &str) -> C {
        self.0.count(&p.to_owned())
    }

    pub fn as_multiset(&self) -> &Multiset<String, C> {
        &self.0
    }

    pub fn total(&self) -> Result<C, MultisetError> {
        self.0.size()
    }
}

impl<C: Count> fmt::Display for PlainMarking<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.canonical_pairs().into_iter().map(|(p, n)| format!("{p}: {n}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Incremental construction of a [`PetriNet`].
#[derive(Debug, Clone)]
pub struct NetBuilder<C: Count = u64> {
    places: Vec<String>,
    transitions: Vec<String>,
    labels: BTreeMap<String, String>,
    arcs: Vec<(String, String, C)>,
}

impl<C: Count> Default for NetBuilder<C> {
    fn default() -> Self {
        Self { places: Vec::new(), transitions: Vec::new(), labels: BTreeMap::new(), arcs: Vec::new() }
    }
}

impl<C: Count> NetBuilder<C> {
    pub fn place(mut self, id: impl Into<String>) -> Self {
        self.places.push(id.into());
        self
    }

    pub fn transition(mut self, id: impl Into<String>) -> Self {
        self.transitions.push(id.into());
        self
    }

    pub fn label(mut self, id: impl Into<String>, label: impl Into<String>) -> Self {
        self.labels.insert(id.into(), label.into());
        self
    }

    /// Arc of weight one. Repeated arcs between the same nodes add up.
    pub fn arc(self, from: impl Into<String>, to: impl Into<String>) -> Self {
        self.weighted_arc(from, to, C::one())
    }

    pub fn weighted_arc(mut self, from: impl Into<String>, to: impl Into<String>, weight: C) -> Self {
        self.arcs.push((from.into(), to.into(), weight));
        self
    }

    pub fn build(self) -> Result<PetriNet<C>, NetError> {
        let mut place_index = HashMap::new();
        let mut transition_index = HashMap::new();
        for (i, p) in self.places.iter().enumerate() {
            if p.is_empty() {
                return Err(NetError::EmptyId);
            }
            if place_index.insert(p.clone(), i).is_some() {
                return Err(NetError::DuplicateNode(p.clone()));
            }
        }
        for (i, t) in self.transitions.iter().enumerate() {
            if t.is_empty() {
                return Err(NetError::EmptyId);
            }
            if place_index.contains_key(t) || transition_index.insert(t.clone(), i).is_some() {
                return Err(NetError::DuplicateNode(t.clone()));
            }
        }
        for node in self.labels.keys() {
            if !place_index.contains_key(node) && !transition_index.contains_key(node) {
                return Err(NetError::UnknownNode(node.clone()));
            }
        }
        let mut pre = vec![Multiset::new(); self.transitions.len()];
        let mut post = vec![Multiset::new(); self.transitions.len()];
        for (from, to, w) in self.arcs {
            match (place_index.contains_key(&from), transition_index.get(&to), transition_index.get(&from)) {
                (true, Some(&t), _) => pre[t].insert_n(from, w)?,
                (false, _, Some(&t)) if place_index.contains_key(&to) => post[t].insert_n(to, w)?,
                _ => {
                    for n in [&from, &to] {
                        if !place_index.contains_key(n) && !transition_index.contains_key(n) {
                            return Err(NetError::UnknownNode(n.clone()));
                        }
                    }
                    return Err(NetError::BadArc { from, to });
                }
            }
        }
        Ok(PetriNet {
            places: self.places,
            transitions: self.transitions,
            labels: self.labels,
            pre,
            post,
            place_index,
            transition_index,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{explore, Bounds};

    /// The subject-learning workflow, with the intermediate markings
    /// narrated alongside it.
    pub(crate) fn learning_net() -> PetriNet {
        let chain = [
            ("student pool", "select course", "course selected"),
            ("course selected", "register for a course", "enrolled student"),
            ("enrolled student", "start a course", "student on course"),
            ("student on course", "take exam", "student on exam"),
            ("student on exam", "pass exam", "portfolio record"),
            ("student on exam", "fail exam", "enrolled student"),
        ];
        let mut b = PetriNet::builder();
        for p in [
            "student pool",
            "course selected",
            "enrolled student",
            "student on course",
            "student on exam",
            "portfolio record",
        ] {
            b = b.place(p);
        }
        for (from, t, to) in chain {
            b = b.transition(t).arc(from, t).arc(t, to);
        }
        b.build().unwrap()
    }

    fn narrated_marking(net: &PetriNet) -> PlainMarking {
        net.marking([("student pool", 2), ("enrolled student", 1), ("student on course", 2), ("student on exam", 1)])
            .unwrap()
    }

    #[test]
    fn start_course_enabled_in_narrated_marking() {
        let net = learning_net();
        let m = narrated_marking(&net);
        assert!(net.is_enabled(&m, "start a course").unwrap());
        assert!(!net.is_enabled(&PlainMarking::default(), "start a course").unwrap());
        assert!(matches!(net.is_enabled(&m, "nope"), Err(NetError::UnknownTransition(_))));
    }

    #[test]
    fn fire_start_course() {
        let net = learning_net();
        let m = narrated_marking(&net);
        let m2 = net.fire(&m, "start a course").unwrap();
        assert_eq!(m2.get("student pool"), 2);
        assert_eq!(m2.get("enrolled student"), 0);
        assert_eq!(m2.get("student on course"), 3);
        assert_eq!(m2.get("student on exam"), 1);
        assert_eq!(m2.to_string(), "{student on course: 3, student on exam: 1, student pool: 2}");
    }

    #[test]
    fn enabled_set_in_narrated_marking() {
        let net = learning_net();
        let m = narrated_marking(&net);
        // every transition except register (course selected is empty)
        assert_eq!(
            net.enabled_set(&m),
            vec!["fail exam", "pass exam", "select course", "start a course", "take exam"]
        );
        assert!(net.enabled_set(&PlainMarking::default()).is_empty());
    }

    #[test]
    fn firing_disabled_transition_is_rejected() {
        let net = learning_net();
        assert_eq!(
            net.fire(&PlainMarking::default(), "pass exam"),
            Err(NetError::NotEnabled("pass exam".into()))
        );
    }

    #[test]
    fn self_loop_and_producer() {
        let net: PetriNet = PetriNet::builder()
            .place("p")
            .place("q")
            .transition("loop")
            .transition("make")
            .arc("p", "loop")
            .arc("loop", "p")
            .weighted_arc("make", "q", 3)
            .build()
            .unwrap();
        let m = net.marking([("p", 1)]).unwrap();
        assert_eq!(net.fire(&m, "loop").unwrap(), m);
        assert!(net.is_enabled(&PlainMarking::default(), "make").unwrap());
        assert_eq!(net.fire(&m, "make").unwrap().get("q"), 3);
        assert_eq!(net.enabled_set(&m), vec!["loop", "make"]);
    }

    #[test]
    fn weighted_arcs() {
        let net: PetriNet = PetriNet::builder()
            .place("a")
            .place("b")
            .transition("t")
            .weighted_arc("a", "t", 2)
            .arc("a", "t")
            .weighted_arc("t", "b", 5)
            .build()
            .unwrap();
        assert_eq!(net.weight("a", "t"), 3);
        let m = net.marking([("a", 2)]).unwrap();
        assert!(!net.is_enabled(&m, "t").unwrap());
        let m = net.marking([("a", 4)]).unwrap();
        let m2 = net.fire(&m, "t").unwrap();
        assert_eq!((m2.get("a"), m2.get("b")), (1, 5));
    }

    #[test]
    fn builder_rejects_bad_structure() {
        let dup = PetriNet::<u64>::builder().place("x").transition("x").build();
        assert_eq!(dup, Err(NetError::DuplicateNode("x".into())));
        let bad = PetriNet::<u64>::builder().place("a").place("b").arc("a", "b").build();
        assert!(matches!(bad, Err(NetError::BadArc { .. })));
        let unknown = PetriNet::<u64>::builder().place("a").arc("a", "zz").build();
        assert_eq!(unknown, Err(NetError::UnknownNode("zz".into())));
        assert_eq!(PetriNet::<u64>::builder().place("").build(), Err(NetError::EmptyId));
        let net = learning_net();
        assert_eq!(net.marking([("nowhere", 1)]), Err(NetError::UnknownPlace("nowhere".into())));
    }

    #[test]
    fn firing_overflow_is_reported() {
        let net: PetriNet<u8> =
            PetriNet::builder().place("q").transition("make").weighted_arc("make", "q", 200).build().unwrap();
        let m = net.marking([("q", 100)]).unwrap();
        assert!(matches!(net.fire(&m, "make"), Err(NetError::Multiset(_))));
    }

    #[test]
    fn smallest_workflow_explores_to_two_states() {
        let net: PetriNet =
            PetriNet::builder().place("i").place("f").transition("t").arc("i", "t").arc("t", "f").build().unwrap();
        let g = explore(&net, net.marking([("i", 1)]).unwrap(), Bounds::default()).unwrap();
        assert_eq!((g.len(), g.edges.len(), g.truncated), (2, 1, false));
    }

    #[test]
    fn unbounded_producer_is_truncated() {
        let net: PetriNet = PetriNet::builder().place("q").transition("make").arc("make", "q").build().unwrap();
        let g = explore(&net, PlainMarking::default(), Bounds::states(10)).unwrap();
        assert!(g.truncated);
        assert_eq!(g.len(), 10);
    }
}
