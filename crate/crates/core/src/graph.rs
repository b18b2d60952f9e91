//! Reachability graphs over any token game.
//!
//! Every engine level (classical nets, colored nets, nets with reference
//! data) implements [`TokenGame`]; exploration, simulation and the
//! analysis passes are written once against that trait.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// A state machine whose steps are transition firings in some mode.
pub trait TokenGame {
    type State: Clone;
    type Mode: Clone;
    type Error: std::error::Error + Send + Sync + 'static;

    /// All enabled modes of `state`, in canonical order.
    fn enabled_modes(&self, state: &Self::State) -> Result<Vec<Self::Mode>, Self::Error>;

    fn fire(&self, state: &Self::State, mode: &Self::Mode) -> Result<Self::State, Self::Error>;

    /// Canonical serialization; two states are the same node iff their keys
    /// are equal.
    fn state_key(&self, state: &Self::State) -> String;

    /// Name of the transition a mode fires.
    fn mode_transition<'a>(&'a self, mode: &'a Self::Mode) -> &'a str;

    /// Canonical rendering of a mode (transition plus binding).
    fn mode_label(&self, mode: &Self::Mode) -> String;

    /// Variable name to rendered value; empty for classical nets.
    fn mode_binding(&self, _mode: &Self::Mode) -> BTreeMap<String, String> {
        BTreeMap::new()
    }
}

/// Short stable digest of a canonical state key.
pub fn state_hash(key: &str) -> String {
    let digest = Sha256::digest(key.as_bytes());
    digest[..8].iter().fold(String::with_capacity(16), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Bounds {
    pub max_states: usize,
    pub max_depth: usize,
}

impl Bounds {
    pub fn states(max_states: usize) -> Self {
        Self { max_states, max_depth: usize::MAX }
    }
}

impl Default for Bounds {
    fn default() -> Self {
        Self { max_states: 100_000, max_depth: usize::MAX }
    }
}

#[derive(Debug, Clone)]
pub struct Edge<M> {
    pub from: usize,
    pub to: usize,
    pub mode: M,
    pub label: String,
    pub transition: String,
}

/// Breadth-first reachability graph. Node 0 is the root.
#[derive(Debug, Clone)]
pub struct StateGraph<S, M> {
    pub nodes: Vec<S>,
    pub keys: Vec<String>,
    pub edges: Vec<Edge<M>>,
    /// Set when a bound stopped exploration before the frontier was empty.
    pub truncated: bool,
    depth: Vec<usize>,
    /// BFS tree: incoming edge index for every non-root node.
    parent: Vec<Option<usize>>,
    /// Whether the successors of a node were computed.
    expanded: Vec<bool>,
    index: HashMap<String, usize>,
}

impl<S, M> StateGraph<S, M> {
    pub fn root(&self) -> usize {
        0
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_of(&self, key: &str) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn depth(&self, node: usize) -> usize {
        self.depth[node]
    }

    pub fn is_expanded(&self, node: usize) -> bool {
        self.expanded[node]
    }

    pub fn out_edges(&self, node: usize) -> impl Iterator<Item = &Edge<M>> {
        self.edges.iter().filter(move |e| e.from == node)
    }

    /// Edge indices of the BFS-tree path from the root to `node`; this is a
    /// shortest path.
    pub fn path_to(&self, node: usize) -> Vec<usize> {
        let mut path = Vec::new();
        let mut cur = node;
        while let Some(e) = self.parent[cur] {
            path.push(e);
            cur = self.edges[e].from;
        }
        path.reverse();
        path
    }

    /// Expanded nodes without successors.
    pub fn sinks(&self) -> Vec<usize> {
        let mut has_out = vec![false; self.nodes.len()];
        for e in &self.edges {
            has_out[e.from] = true;
        }
        (0..self.nodes.len()).filter(|&n| self.expanded[n] && !has_out[n]).collect()
    }

    /// Nodes from which some node satisfying `target` is reachable.
    pub fn backward_reachable(&self, target: impl Fn(usize) -> bool) -> Vec<bool> {
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            preds[e.to].push(e.from);
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut queue: VecDeque<usize> = (0..self.nodes.len()).filter(|&n| target(n)).collect();
        for &n in &queue {
            seen[n] = true;
        }
        while let Some(n) = queue.pop_front() {
            for &p in &preds[n] {
                if !seen[p] {
                    seen[p] = true;
                    queue.push_back(p);
                }
            }
        }
        seen
    }

    /// Graphviz rendering. Node labels are the canonical state keys.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph states {\n  node [shape=box, fontname=\"monospace\"];\n");
        for (i, key) in self.keys.iter().enumerate() {
            let style = if i == 0 { ", penwidth=2" } else { "" };
            let _ = writeln!(out, "  s{i} [label=\"{}\"{style}];", dot_escape(key));
        }
        for e in &self.edges {
            let _ = writeln!(out, "  s{} -> s{} [label=\"{}\"];", e.from, e.to, dot_escape(&e.label));
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct NodeJson<'a> {
            id: usize,
            hash: String,
            state: &'a str,
            depth: usize,
        }
        #[derive(Serialize)]
        struct EdgeJson<'a> {
            from: usize,
            to: usize,
            transition: &'a str,
            mode: &'a str,
        }
        let nodes: Vec<NodeJson> = self
            .keys
            .iter()
            .enumerate()
            .map(|(id, k)| NodeJson { id, hash: state_hash(k), state: k, depth: self.depth[id] })
            .collect();
        let edges: Vec<EdgeJson> = self
            .edges
            .iter()
            .map(|e| EdgeJson { from: e.from, to: e.to, transition: &e.transition, mode: &e.label })
            .collect();
        serde_json::json!({
            "root": 0,
            "truncated": self.truncated,
            "nodes": nodes,
            "edges": edges,
        })
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n")
}

/// Breadth-first exploration from `initial`.
///
/// Successors are visited in canonical mode order, so the node numbering and
/// edge list are identical across runs. A state that would exceed
/// `max_states` is dropped together with its edge; nodes at `max_depth` are
/// not expanded. Either event sets `truncated`.
pub fn explore<G: TokenGame>(
    game: &G,
    initial: G::State,
    bounds: Bounds,
) -> Result<StateGraph<G::State, G::Mode>, G::Error> {
    let root_key = game.state_key(&initial);
    let mut graph = StateGraph {
        nodes: vec![initial],
        keys: vec![root_key.clone()],
        edges: Vec::new(),
        truncated: false,
        depth: vec![0],
        parent: vec![None],
        expanded: vec![false],
        index: HashMap::from([(root_key, 0)]),
    };
    if bounds.max_states == 0 {
        graph.truncated = true;
        return Ok(graph);
    }
    let mut queue = VecDeque::from([0usize]);
    while let Some(n) = queue.pop_front() {
        let modes = game.enabled_modes(&graph.nodes[n])?;
        if graph.depth[n] >= bounds.max_depth {
            if !modes.is_empty() {
                graph.truncated = true;
            }
            continue;
        }
        graph.expanded[n] = true;
        for mode in modes {
            let next = game.fire(&graph.nodes[n], &mode)?;
            let key = game.state_key(&next);
            let to = match graph.index.get(&key) {
                Some(&existing) => existing,
                None => {
                    if graph.nodes.len() >= bounds.max_states {
                        graph.truncated = true;
                        continue;
                    }
                    let id = graph.nodes.len();
                    graph.nodes.push(next);
                    graph.keys.push(key.clone());
                    graph.depth.push(graph.depth[n] + 1);
                    graph.parent.push(Some(graph.edges.len()));
                    graph.expanded.push(false);
                    graph.index.insert(key, id);
                    queue.push_back(id);
                    id
                }
            };
            graph.edges.push(Edge {
                from: n,
                to,
                label: game.mode_label(&mode),
                transition: game.mode_transition(&mode).to_owned(),
                mode,
            });
        }
    }
    Ok(graph)
}
