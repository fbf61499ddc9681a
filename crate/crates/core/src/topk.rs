//! Top-k influential vertex tracking over an update stream.
//!
//! Two independent pools of equal size are kept. `R1` decides the pool size
//! through its k-th largest degree and fixes the query threshold; `R2` ranks
//! and estimates, so the reported values carry no selection bias.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, UpdateEvent, VertexId};
use crate::rank::KthTracker;
use crate::sketch::RRCollection;
use crate::stats::{topk_degree_target, EpsDelta};
use crate::{seeded_rng, EngineRng};

/// Work done while absorbing one event.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Maintenance {
    pub refreshed: usize,
    pub appended: usize,
    pub removed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopKAnswer {
    /// Sorted by estimate descending, ties by id.
    pub vertices: Vec<VertexId>,
    pub estimates: Vec<f64>,
    pub threshold: f64,
}

pub struct TopKTracker {
    graph: Graph,
    k: usize,
    cfg: EpsDelta,
    target: u64,
    r1: RRCollection,
    r2: RRCollection,
    kth: KthTracker,
    rng: EngineRng,
    assertions: bool,
}

impl TopKTracker {
    pub fn new(graph: Graph, k: usize, cfg: EpsDelta, seed: u64) -> Result<Self> {
        cfg.validate_tracker()?;
        let n = graph.n();
        if n == 0 {
            return Err(Error::domain("graph has no vertices"));
        }
        if k < 1 || k > n {
            return Err(Error::domain(format!("k must lie in 1..={n}, got {k}")));
        }
        let target = topk_degree_target(cfg.eps, cfg.delta, n)?;
        let mut r1 = RRCollection::new(n);
        let kth = r1.attach_tracker(k);
        let mut t = TopKTracker {
            graph,
            k,
            cfg,
            target,
            r1,
            r2: RRCollection::new(n),
            kth,
            rng: seeded_rng(seed),
            assertions: false,
        };
        t.rebalance();
        Ok(t)
    }

    /// Runs the full invariant check after every event.
    pub fn with_assertions(mut self, on: bool) -> Self {
        self.assertions = on;
        self
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn target(&self) -> u64 {
        self.target
    }

    /// `D₁ᵏ`, the k-th largest degree in `R1`.
    pub fn kth_degree(&self) -> u64 {
        self.r1.index().value(self.kth) as u64
    }

    pub fn pool_sizes(&self) -> (usize, usize) {
        (self.r1.len(), self.r2.len())
    }

    pub fn total_cost(&self) -> u64 {
        self.r1.total_cost() + self.r2.total_cost()
    }

    pub fn pools(&self) -> (&RRCollection, &RRCollection) {
        (&self.r1, &self.r2)
    }

    /// `(1−ε)/(1+ε)·D₁ᵏ`.
    pub fn threshold(&self) -> f64 {
        (1.0 - self.cfg.eps) / (1.0 + self.cfg.eps) * self.kth_degree() as f64
    }

    pub fn process(&mut self, e: &UpdateEvent) -> Result<Maintenance> {
        let v = self.graph.apply_update(e)?;
        let refreshed = self.r1.refresh_affected(&self.graph, v)
            + self.r2.refresh_affected(&self.graph, v);
        let (appended, removed) = self.rebalance();
        if self.assertions {
            self.check_invariants()?;
        }
        Ok(Maintenance { refreshed, appended, removed })
    }

    // grows or shrinks both pools in lockstep until D₁ᵏ meets the target
    fn rebalance(&mut self) -> (usize, usize) {
        let (mut added, mut removed) = (0, 0);
        while self.kth_degree() < self.target {
            self.r1.append(&self.graph, &mut self.rng);
            self.r2.append(&self.graph, &mut self.rng);
            added += 1;
        }
        while self.kth_degree() > self.target {
            self.r1.remove_last().expect("pool above target is nonempty");
            self.r2.remove_last().expect("pools have equal size");
            removed += 1;
        }
        (added, removed)
    }

    pub fn query(&self) -> TopKAnswer {
        let threshold = self.threshold();
        let mut hits: Vec<(VertexId, u32)> = self.r2.index().iterate_at_least(threshold).collect();
        hits.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let scale = self.graph.n() as f64 / self.r2.len() as f64;
        TopKAnswer {
            vertices: hits.iter().map(|h| h.0).collect(),
            estimates: hits.iter().map(|h| h.1 as f64 * scale).collect(),
            threshold,
        }
    }

    pub fn check_invariants(&self) -> Result<()> {
        self.graph.check_invariants()?;
        self.r1.check_invariants()?;
        self.r2.check_invariants()?;
        if self.r1.len() != self.r2.len() {
            return Err(Error::Invariant(format!(
                "pool sizes differ: {} vs {}",
                self.r1.len(),
                self.r2.len()
            )));
        }
        if self.kth_degree() != self.target {
            return Err(Error::Invariant(format!(
                "D1^k = {} but target is {}",
                self.kth_degree(),
                self.target
            )));
        }
        let mut degrees: Vec<u32> = (0..self.graph.n() as VertexId).map(|u| self.r1.degree(u)).collect();
        degrees.sort_unstable_by(|a, b| b.cmp(a));
        if degrees[self.k - 1] != self.r1.index().value(self.kth) {
            return Err(Error::Invariant("k-th degree tracker is stale".into()));
        }
        Ok(())
    }
}
