//! Streaming influence analytics over reverse-reachable (RR) sketches.
//!
//! The engine keeps pools of RR sets consistent with a weighted directed
//! network as its edge weights change, sizes the pools from stopping-rule
//! targets read off an O(1) degree signal, and answers two kinds of query:
//! the top-k most influential vertices ([`topk`]) and k-seed influence
//! maximization ([`immax`]). [`oracle`] provides exact and Monte-Carlo
//! ground truth for small graphs.

pub mod error;
pub mod graph;
pub mod immax;
pub mod metrics;
pub mod oracle;
pub mod rank;
pub mod report;
pub mod sketch;
pub mod stats;
pub mod streamgen;
pub mod synth;
pub mod topk;

pub use error::{Error, Result};
pub use graph::{Graph, Model, Sign, UpdateEvent, VertexId};
pub use rank::{DegreeIndex, KthTracker};
pub use sketch::{RRCollection, RRSet};
pub use stats::{EpsDelta, SizeTargets, SizingMode};

/// Seedable generator used throughout; a fixed seed reproduces every run.
pub type EngineRng = rand_chacha::ChaCha8Rng;

/// Builds the engine generator from a 64-bit seed.
pub fn seeded_rng(seed: u64) -> EngineRng {
    use rand::SeedableRng;
    EngineRng::seed_from_u64(seed)
}
