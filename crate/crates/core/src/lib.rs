//! Multisets, classical and workflow Petri nets, colored Petri nets, and
//! Petri nets with reference data (tokens that point into a shared global
//! store), together with a textual model language, a seeded simulator and
//! bounded state-space analysis.

pub mod analysis;
pub mod corpus;
pub mod engine;
pub mod graph;
pub mod lang;
pub mod multiset;
pub mod net;
pub mod simulate;

pub use graph::{explore, Bounds, StateGraph, TokenGame};
pub use multiset::{Count, Multiset, MultisetError};
pub use net::{NetError, PetriNet, PlainMarking, WorkflowNet};

/// Multiset with unbounded exact multiplicities.
pub type BigMultiset<T> = Multiset<T, num_bigint::BigUint>;
/// Classical net with machine-word arc weights and token counts.
pub type Net = PetriNet<u64>;
/// Classical net with unbounded exact token counts.
pub type BigNet = PetriNet<num_bigint::BigUint>;
/// Marking of a [`Net`].
pub type Marking = PlainMarking<u64>;
