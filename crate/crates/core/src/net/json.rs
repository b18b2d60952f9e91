//! JSON structural format for classical nets.
//!
//! ```json
//! {
//!   "places": ["i", "f"],
//!   "transitions": ["t"],
//!   "arcs": [{"from": "i", "to": "t"}, {"from": "t", "to": "f", "weight": 1}],
//!   "marking": {"i": 1},
//!   "source": "i",
//!   "sink": "f"
//! }
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{NetError, PetriNet, PlainMarking};
use crate::multiset::Count;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArcJson {
    pub from: String,
    pub to: String,
    #[serde(default = "one")]
    pub weight: u64,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NetFile {
    pub places: Vec<String>,
    pub transitions: Vec<String>,
    #[serde(default)]
    pub arcs: Vec<ArcJson>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub labels: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub marking: BTreeMap<String, u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sink: Option<String>,
}

impl NetFile {
    pub fn parse(text: &str) -> Result<Self, NetError> {
        serde_json::from_str(text).map_err(|e| NetError::Format(e.to_string()))
    }

    pub fn to_net<C: Count>(&self) -> Result<PetriNet<C>, NetError> {
        let mut b = PetriNet::builder();
        for p in &self.places {
            b = b.place(p.clone());
        }
        for t in &self.transitions {
            b = b.transition(t.clone());
        }
        for (node, label) in &self.labels {
            b = b.label(node.clone(), label.clone());
        }
        for arc in &self.arcs {
            b = b.weighted_arc(arc.from.clone(), arc.to.clone(), count(arc.weight)?);
        }
        b.build()
    }

    pub fn initial_marking<C: Count>(&self, net: &PetriNet<C>) -> Result<PlainMarking<C>, NetError> {
        let counts = self
            .marking
            .iter()
            .map(|(p, &n)| Ok((p.as_str(), count(n)?)))
            .collect::<Result<Vec<_>, NetError>>()?;
        net.marking(counts)
    }

    pub fn from_net<C: Count>(net: &PetriNet<C>, marking: &PlainMarking<C>) -> Self {
        let mut arcs = Vec::new();
        for t in net.transitions() {
            for (p, w) in net.preset(t).expect("own transition").iter() {
                arcs.push(ArcJson { from: p.clone(), to: t.clone(), weight: w.to_u64().unwrap_or(u64::MAX) });
            }
            for (p, w) in net.postset(t).expect("own transition").iter() {
                arcs.push(ArcJson { from: t.clone(), to: p.clone(), weight: w.to_u64().unwrap_or(u64::MAX) });
            }
        }
        let labels = net
            .places()
            .iter()
            .chain(net.transitions())
            .filter_map(|n| net.label(n).map(|l| (n.clone(), l.to_owned())))
            .collect();
        Self {
            places: net.places().to_vec(),
            transitions: net.transitions().to_vec(),
            arcs,
            labels,
            marking: marking.0.iter().map(|(p, n)| (p.clone(), n.to_u64().unwrap_or(u64::MAX))).collect(),
            source: None,
            sink: None,
        }
    }
}

fn count<C: Count>(n: u64) -> Result<C, NetError> {
    C::from_u64(n).ok_or_else(|| NetError::Format(format!("weight {n} does not fit the count type")))
}
