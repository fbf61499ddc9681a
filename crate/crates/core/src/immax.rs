//! Influence maximization over an update stream.
//!
//! The signal pool is sized so its maximum degree `D₁*` stays on target.
//! Queries run greedy max-coverage on the estimation pool (the signal pool
//! itself in practical mode). [`new_greedy`] copies only the vertices whose
//! degree clears a threshold and evaluates marginals lazily; when the
//! threshold turns out to be too aggressive it falls back to the full run.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, UpdateEvent, VertexId};
use crate::rank::KthTracker;
use crate::sketch::RRCollection;
use crate::stats::{im_targets, EpsDelta, SizeTargets, SizingMode};
use crate::topk::Maintenance;
use crate::{seeded_rng, EngineRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyResult {
    /// In selection order.
    pub seeds: Vec<VertexId>,
    /// Number of sets covered by `seeds`.
    pub coverage: usize,
    /// First step whose marginal gain did not exceed the threshold;
    /// `k + 1` when no step did.
    pub q: usize,
    pub used_threshold: f64,
}

/// Plain greedy max-coverage over a copy of the whole degree index. Ties go
/// to the smallest vertex id. Stops early once every set is covered.
pub fn greedy_full(pool: &RRCollection, k: usize) -> GreedyResult {
    let mut copy = pool.index().snapshot_above(-1.0);
    let mut covered = vec![false; pool.len()];
    let mut seeds = Vec::with_capacity(k);
    let mut coverage = 0;
    while seeds.len() < k {
        let Some((u, _)) = copy.top_vertex() else { break };
        seeds.push(u);
        for slot in pool.slots_containing(u) {
            if covered[slot as usize] {
                continue;
            }
            covered[slot as usize] = true;
            coverage += 1;
            for &w in &pool.set(slot as usize).members {
                copy.decrease(w);
            }
        }
        if copy.degree(u) > 0 {
            copy.remove(u);
        }
    }
    GreedyResult { seeds, coverage, q: k + 1, used_threshold: -1.0 }
}

/// Greedy restricted to vertices of degree above `t_d`, with lazy marginal
/// updates. Only the vertices actually inspected are touched, so the cost
/// tracks the filtered copy rather than the whole pool.
pub fn new_greedy(pool: &RRCollection, k: usize, t_d: f64) -> GreedyResult {
    let mut copy = pool.index().snapshot_above(t_d);
    let mut covered = vec![false; pool.len()];
    // absent means fresh as of step 1
    let mut stamp: HashMap<VertexId, usize> = HashMap::new();
    let mut seeds = Vec::with_capacity(k);
    let mut coverage = 0;
    let mut q = k + 1;
    'steps: for i in 1..=k {
        loop {
            let Some((u, d)) = copy.top_vertex() else {
                // a filtered copy ran dry while sets may remain uncovered
                if t_d >= 0.0 && q > k {
                    q = i;
                }
                break 'steps;
            };
            if stamp.get(&u).copied().unwrap_or(1) == i {
                let mut gain = 0;
                for slot in pool.slots_containing(u) {
                    if !covered[slot as usize] {
                        covered[slot as usize] = true;
                        gain += 1;
                    }
                }
                seeds.push(u);
                coverage += gain;
                copy.remove(u);
                if gain as f64 <= t_d && q > k {
                    q = i;
                }
                break;
            }
            let fresh = pool
                .slots_containing(u)
                .filter(|&s| !covered[s as usize])
                .count() as u32;
            for _ in fresh..d {
                copy.decrease(u);
            }
            stamp.insert(u, i);
        }
    }
    GreedyResult { seeds, coverage, q, used_threshold: t_d }
}

/// The copy threshold `min{D*/(k−1), D*−1}` (`D*−1` for `k = 1`), or −1
/// (no filtering) when `D* < 2`.
pub fn filter_threshold(d_star: u32, k: usize) -> f64 {
    if d_star < 2 {
        return -1.0;
    }
    let d = d_star as f64;
    if k <= 1 {
        d - 1.0
    } else {
        (d / (k - 1) as f64).min(d - 1.0)
    }
}

/// Filtered greedy with the fallback rule: if some step among the first k
/// gained no more than the threshold, rerun unfiltered.
pub fn query_greedy(pool: &RRCollection, k: usize) -> (GreedyResult, bool) {
    let t_d = filter_threshold(pool.index().max_degree(), k);
    let first = new_greedy(pool, k, t_d);
    if first.q <= k {
        (new_greedy(pool, k, -1.0), true)
    } else {
        (first, false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImAnswer {
    pub k: usize,
    pub seeds: Vec<VertexId>,
    pub coverage: usize,
    pub estimate: f64,
    pub q: usize,
    pub threshold: f64,
    pub fallback: bool,
}

pub struct ImTracker {
    graph: Graph,
    k_max: usize,
    mode: SizingMode,
    targets: SizeTargets,
    r1: RRCollection,
    // estimation pool, theoretical mode only
    r2: Option<RRCollection>,
    star: KthTracker,
    rng: EngineRng,
    assertions: bool,
}

impl ImTracker {
    pub fn new(graph: Graph, k_max: usize, cfg: EpsDelta, mode: SizingMode, seed: u64) -> Result<Self> {
        cfg.validate_tracker()?;
        let n = graph.n();
        let targets = im_targets(cfg.eps, cfg.delta, n, k_max, mode)?;
        let mut r1 = RRCollection::new(n);
        let star = r1.attach_tracker(1);
        let r2 = match mode {
            SizingMode::Theoretical => Some(RRCollection::new(n)),
            SizingMode::Practical => None,
        };
        let mut t = ImTracker {
            graph,
            k_max,
            mode,
            targets,
            r1,
            r2,
            star,
            rng: seeded_rng(seed),
            assertions: false,
        };
        t.rebalance();
        Ok(t)
    }

    pub fn with_assertions(mut self, on: bool) -> Self {
        self.assertions = on;
        self
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn mode(&self) -> SizingMode {
        self.mode
    }

    pub fn targets(&self) -> SizeTargets {
        self.targets
    }

    /// `D₁*`, the maximum degree in the signal pool.
    pub fn max_degree(&self) -> u64 {
        self.r1.index().value(self.star) as u64
    }

    pub fn pool_sizes(&self) -> (usize, usize) {
        (self.r1.len(), self.r2.as_ref().map_or(self.r1.len(), |r| r.len()))
    }

    pub fn total_cost(&self) -> u64 {
        self.r1.total_cost() + self.r2.as_ref().map_or(0, |r| r.total_cost())
    }

    /// The pool queries run on.
    pub fn query_pool(&self) -> &RRCollection {
        self.r2.as_ref().unwrap_or(&self.r1)
    }

    fn r2_target(&self) -> usize {
        let want = self.targets.m2_ratio * self.r1.len() as f64;
        crate::stats::ceil_guarded(want) as usize
    }

    pub fn process(&mut self, e: &UpdateEvent) -> Result<Maintenance> {
        let v = self.graph.apply_update(e)?;
        let mut refreshed = self.r1.refresh_affected(&self.graph, v);
        if let Some(r2) = self.r2.as_mut() {
            refreshed += r2.refresh_affected(&self.graph, v);
        }
        let (appended, removed) = self.rebalance();
        if self.assertions {
            self.check_invariants()?;
        }
        Ok(Maintenance { refreshed, appended, removed })
    }

    fn rebalance(&mut self) -> (usize, usize) {
        let (mut added, mut removed) = (0, 0);
        while self.max_degree() < self.targets.d1_target {
            self.r1.append(&self.graph, &mut self.rng);
            added += 1;
        }
        while self.max_degree() > self.targets.d1_target {
            self.r1.remove_last().expect("pool above target is nonempty");
            removed += 1;
        }
        let want = self.r2_target();
        if let Some(r2) = self.r2.as_mut() {
            while r2.len() < want {
                r2.append(&self.graph, &mut self.rng);
                added += 1;
            }
            while r2.len() > want {
                r2.remove_last().expect("nonempty");
                removed += 1;
            }
        }
        (added, removed)
    }

    pub fn query(&self, k: usize) -> Result<ImAnswer> {
        if k < 1 || k > self.k_max {
            return Err(Error::domain(format!("k must lie in 1..={}, got {k}", self.k_max)));
        }
        let pool = self.query_pool();
        let (res, fallback) = query_greedy(pool, k);
        Ok(ImAnswer {
            k,
            estimate: self.graph.n() as f64 * res.coverage as f64 / pool.len() as f64,
            seeds: res.seeds,
            coverage: res.coverage,
            q: res.q,
            threshold: res.used_threshold,
            fallback,
        })
    }

    /// A query with `k` drawn uniformly from `1..=k_max`.
    pub fn query_random<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ImAnswer> {
        let k = rng.gen_range(1..=self.k_max);
        self.query(k)
    }

    pub fn check_invariants(&self) -> Result<()> {
        self.graph.check_invariants()?;
        self.r1.check_invariants()?;
        if self.max_degree() != self.targets.d1_target {
            return Err(Error::Invariant(format!(
                "D1* = {} but target is {}",
                self.max_degree(),
                self.targets.d1_target
            )));
        }
        if self.max_degree() != self.r1.index().max_degree() as u64 {
            return Err(Error::Invariant("max-degree tracker is stale".into()));
        }
        if let Some(r2) = &self.r2 {
            r2.check_invariants()?;
            if r2.len() != self.r2_target() {
                return Err(Error::Invariant(format!(
                    "estimation pool holds {} sets, expected {}",
                    r2.len(),
                    self.r2_target()
                )));
            }
        }
        Ok(())
    }
}
