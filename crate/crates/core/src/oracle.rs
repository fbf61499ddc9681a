//! Ground truth for small graphs.
//!
//! Exact values come from enumerating live-edge configurations: under LT
//! every vertex keeps at most one in-edge (`u` with probability
//! `w_uv/W_v`, none with `w_v/W_v`); under IC every edge is kept
//! independently with probability `w_uv`. Monte-Carlo estimates use forward
//! diffusion instead (random thresholds for LT, one activation attempt per
//! edge for IC), so the two routes share no sampling code.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Graph, Model, VertexId};
use crate::EngineRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_configs: u64,
    pub mc_iterations: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget { max_configs: 1 << 22, mc_iterations: 100_000 }
    }
}

impl OracleBudget {
    pub fn validate(&self) -> Result<()> {
        if self.max_configs < 1 || self.mc_iterations < 1 {
            return Err(Error::domain("oracle budget fields must be >= 1"));
        }
        Ok(())
    }
}

/// Per-vertex outcome list for LT (`None` = keep no in-edge), or per-edge
/// keep/drop for IC; only outcomes with nonzero probability are listed.
enum Choices {
    Lt(Vec<Vec<(Option<VertexId>, f64)>>),
    Ic(Vec<(VertexId, VertexId, f64)>),
}

fn choices(g: &Graph) -> Choices {
    match g.model() {
        Model::Lt => Choices::Lt(
            (0..g.n() as VertexId)
                .map(|v| {
                    let d = g.lt_choice_distribution(v).expect("LT graph");
                    let mut out: Vec<(Option<VertexId>, f64)> = Vec::new();
                    if d.stop > 0.0 {
                        out.push((None, d.stop));
                    }
                    out.extend(d.choices.iter().filter(|c| c.1 > 0.0).map(|&(u, p)| (Some(u), p)));
                    out
                })
                .collect(),
        ),
        Model::Ic => Choices::Ic(g.edges().filter(|e| e.2 > 0.0).collect()),
    }
}

/// Number of live-edge configurations with nonzero probability.
pub fn config_count(g: &Graph) -> f64 {
    match choices(g) {
        Choices::Lt(c) => c.iter().map(|o| o.len() as f64).product(),
        Choices::Ic(edges) => 2f64.powi(edges.iter().filter(|e| e.2 < 1.0).count() as i32),
    }
}

fn check_budget(needed: f64, budget: &OracleBudget) -> Result<()> {
    budget.validate()?;
    if needed > budget.max_configs as f64 {
        return Err(Error::Budget { needed, limit: budget.max_configs });
    }
    Ok(())
}

/// Calls `visit(prob, live)` for every live-edge configuration, where
/// `live` lists the kept edges as `(u, v)`.
fn for_each_config<F>(g: &Graph, budget: &OracleBudget, mut visit: F) -> Result<()>
where
    F: FnMut(f64, &[(VertexId, VertexId)]),
{
    check_budget(config_count(g), budget)?;
    let mut live = Vec::new();
    let mut total = 0.0;
    match choices(g) {
        Choices::Lt(opts) => {
            let mut digit = vec![0usize; opts.len()];
            loop {
                live.clear();
                let mut p = 1.0;
                for (v, (&d, o)) in digit.iter().zip(&opts).enumerate() {
                    let (pick, q) = o[d];
                    p *= q;
                    if let Some(u) = pick {
                        live.push((u, v as VertexId));
                    }
                }
                total += p;
                visit(p, &live);
                // mixed-radix increment
                let mut i = 0;
                while i < digit.len() {
                    digit[i] += 1;
                    if digit[i] < opts[i].len() {
                        break;
                    }
                    digit[i] = 0;
                    i += 1;
                }
                if i == digit.len() {
                    break;
                }
            }
        }
        Choices::Ic(edges) => {
            let certain: Vec<(VertexId, VertexId)> =
                edges.iter().filter(|e| e.2 >= 1.0).map(|e| (e.0, e.1)).collect();
            let coins: Vec<_> = edges.iter().filter(|e| e.2 < 1.0).copied().collect();
            for mask in 0u64..(1u64 << coins.len()) {
                live.clear();
                live.extend_from_slice(&certain);
                let mut p = 1.0;
                for (i, &(u, v, w)) in coins.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        p *= w;
                        live.push((u, v));
                    } else {
                        p *= 1.0 - w;
                    }
                }
                total += p;
                visit(p, &live);
            }
        }
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Invariant(format!("configuration probabilities sum to {total}")));
    }
    Ok(())
}

/// Forward-reachable count from `seeds` over `adj`, by iterative BFS.
fn reach_count(adj: &[Vec<VertexId>], seeds: &[VertexId], seen: &mut Vec<bool>, queue: &mut Vec<VertexId>) -> usize {
    seen.clear();
    seen.resize(adj.len(), false);
    queue.clear();
    for &s in seeds {
        if !seen[s as usize] {
            seen[s as usize] = true;
            queue.push(s);
        }
    }
    let mut head = 0;
    while head < queue.len() {
        let x = queue[head];
        head += 1;
        for &y in &adj[x as usize] {
            if !seen[y as usize] {
                seen[y as usize] = true;
                queue.push(y);
            }
        }
    }
    queue.len()
}

fn check_seeds(g: &Graph, seeds: &[VertexId]) -> Result<()> {
    match seeds.iter().find(|&&s| s as usize >= g.n()) {
        Some(&s) => Err(Error::Vertex(s)),
        None => Ok(()),
    }
}

/// Exact influence of each seed set, sharing one enumeration pass.
pub fn exact_influence_many(g: &Graph, sets: &[Vec<VertexId>], budget: &OracleBudget) -> Result<Vec<f64>> {
    for s in sets {
        check_seeds(g, s)?;
    }
    let mut acc = vec![0.0; sets.len()];
    let mut adj: Vec<Vec<VertexId>> = vec![Vec::new(); g.n()];
    let (mut seen, mut queue) = (Vec::new(), Vec::new());
    for_each_config(g, budget, |p, live| {
        adj.iter_mut().for_each(Vec::clear);
        for &(u, v) in live {
            adj[u as usize].push(v);
        }
        for (a, s) in acc.iter_mut().zip(sets) {
            *a += p * reach_count(&adj, s, &mut seen, &mut queue) as f64;
        }
    })?;
    Ok(acc)
}

/// `I(S)`, exact to accumulation precision.
pub fn exact_influence(g: &Graph, seeds: &[VertexId], budget: &OracleBudget) -> Result<f64> {
    Ok(exact_influence_many(g, &[seeds.to_vec()], budget)?[0])
}

/// `P(u ∈ R)` for a random RR set `R`, i.e. `I({u})/n`.
pub fn rr_membership_prob(g: &Graph, u: VertexId, budget: &OracleBudget) -> Result<f64> {
    Ok(exact_influence(g, &[u], budget)? / g.n() as f64)
}

/// Exact distribution of a fresh RR set (uniform root), keyed by sorted
/// member list.
pub fn rr_set_distribution(g: &Graph, budget: &OracleBudget) -> Result<BTreeMap<Vec<VertexId>, f64>> {
    let n = g.n();
    let mut dist = BTreeMap::new();
    let mut radj: Vec<Vec<VertexId>> = vec![Vec::new(); n];
    let (mut seen, mut queue) = (Vec::new(), Vec::new());
    for_each_config(g, budget, |p, live| {
        radj.iter_mut().for_each(Vec::clear);
        for &(u, v) in live {
            radj[v as usize].push(u);
        }
        for root in 0..n as VertexId {
            reach_count(&radj, &[root], &mut seen, &mut queue);
            let mut key = queue.clone();
            key.sort_unstable();
            *dist.entry(key).or_insert(0.0) += p / n as f64;
        }
    })?;
    Ok(dist)
}

/// The best k-seed set by exhaustive search; ties go to the
/// lexicographically smallest set.
pub fn exhaustive_optimal_seed(g: &Graph, k: usize, budget: &OracleBudget) -> Result<(Vec<VertexId>, f64)> {
    let n = g.n();
    if k < 1 || k > n {
        return Err(Error::domain(format!("k must lie in 1..={n}, got {k}")));
    }
    let subsets = k_subsets(n, k);
    check_budget(subsets.len() as f64 * config_count(g), budget)?;
    let values = exact_influence_many(g, &subsets, &OracleBudget { max_configs: u64::MAX, ..*budget })?;
    let mut best = 0;
    for i in 1..values.len() {
        if values[i] > values[best] + 1e-9 * values[best].max(1.0) {
            best = i;
        }
    }
    Ok((subsets[best].clone(), values[best]))
}

/// All k-subsets of `0..n` in lexicographic order.
pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<VertexId>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut cur: Vec<VertexId> = (0..k as VertexId).collect();
    loop {
        out.push(cur.clone());
        let mut i = k;
        while i > 0 && cur[i - 1] as usize == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        cur[i - 1] += 1;
        for j in i..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Forward diffusion simulator with reusable scratch.
struct Simulator<'g> {
    g: &'g Graph,
    // forward edges with LT probability w_uv/W_v or IC probability w_uv
    out: Vec<Vec<(VertexId, f64)>>,
    active: Vec<u32>,
    acc: Vec<f64>,
    threshold: Vec<f64>,
    touched: Vec<u32>,
    epoch: u32,
    frontier: Vec<VertexId>,
}

impl<'g> Simulator<'g> {
    fn new(g: &'g Graph) -> Self {
        let mut out: Vec<Vec<(VertexId, f64)>> = vec![Vec::new(); g.n()];
        for (u, v, w) in g.edges() {
            let p = match g.model() {
                Model::Lt => {
                    let total = g.total_in(v);
                    if total > 0.0 {
                        w / total
                    } else {
                        0.0
                    }
                }
                Model::Ic => w,
            };
            out[u as usize].push((v, p));
        }
        let n = g.n();
        Simulator {
            g,
            out,
            active: vec![0; n],
            acc: vec![0.0; n],
            threshold: vec![0.0; n],
            touched: vec![0; n],
            epoch: 0,
            frontier: Vec::new(),
        }
    }

    fn run<R: Rng>(&mut self, seeds: &[VertexId], rng: &mut R) -> usize {
        self.epoch += 1;
        let ep = self.epoch;
        self.frontier.clear();
        for &s in seeds {
            if self.active[s as usize] != ep {
                self.active[s as usize] = ep;
                self.frontier.push(s);
            }
        }
        let mut count = self.frontier.len();
        let mut next = Vec::new();
        while !self.frontier.is_empty() {
            next.clear();
            for &u in &self.frontier {
                for &(v, p) in &self.out[u as usize] {
                    let vi = v as usize;
                    if self.active[vi] == ep {
                        continue;
                    }
                    let fire = match self.g.model() {
                        Model::Ic => rng.gen::<f64>() < p,
                        Model::Lt => {
                            if self.touched[vi] != ep {
                                self.touched[vi] = ep;
                                self.acc[vi] = 0.0;
                                // λ ∈ (0, 1]: a zero-weight path must not activate
                                self.threshold[vi] = 1.0 - rng.gen::<f64>();
                            }
                            self.acc[vi] += p;
                            self.acc[vi] >= self.threshold[vi]
                        }
                    };
                    if fire {
                        self.active[vi] = ep;
                        next.push(v);
                    }
                }
            }
            count += next.len();
            std::mem::swap(&mut self.frontier, &mut next);
        }
        count
    }
}

const MC_CHUNK: u64 = 4096;

/// Monte-Carlo `I(S)` over `budget.mc_iterations` forward simulations,
/// with the standard error of the mean. Chunks run in parallel, each from
/// a seed drawn off `rng`, so the result is reproducible.
pub fn mc_influence<R: Rng>(g: &Graph, seeds: &[VertexId], budget: &OracleBudget, rng: &mut R) -> Result<McEstimate> {
    budget.validate()?;
    check_seeds(g, seeds)?;
    if seeds.is_empty() {
        return Ok(McEstimate { mean: 0.0, std_error: 0.0 });
    }
    let iters = budget.mc_iterations;
    let chunks: Vec<(u64, u64)> = (0..iters.div_ceil(MC_CHUNK))
        .map(|c| (rng.gen(), MC_CHUNK.min(iters - c * MC_CHUNK)))
        .collect();
    let (sum, sum_sq) = chunks
        .par_iter()
        .map(|&(seed, len)| {
            let mut sim = Simulator::new(g);
            let mut r = EngineRng::seed_from_u64(seed);
            let mut s = 0.0;
            let mut s2 = 0.0;
            for _ in 0..len {
                let x = sim.run(seeds, &mut r) as f64;
                s += x;
                s2 += x * x;
            }
            (s, s2)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = iters as f64;
    let mean = sum / n;
    let var = if iters > 1 { ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    Ok(McEstimate { mean, std_error: (var / n).sqrt() })
}

/// Monte-Carlo influence of every singleton at once (LT only). Each sample
/// draws one live-edge configuration, a functional graph on in-edges, and
/// credits every vertex with the size of its forward-reachable set.
pub fn mc_singleton_influence_lt(g: &Graph, samples: u64, seed: u64) -> Result<Vec<f64>> {
    if g.model() != Model::Lt {
        return Err(Error::domain("singleton sweep needs an LT graph"));
    }
    let n = g.n();
    let mut seeder = EngineRng::seed_from_u64(seed);
    let chunks: Vec<(u64, u64)> = (0..samples.div_ceil(MC_CHUNK))
        .map(|c| (seeder.gen(), MC_CHUNK.min(samples - c * MC_CHUNK)))
        .collect();
    let totals = chunks
        .par_iter()
        .map(|&(seed, len)| {
            let mut rng = EngineRng::seed_from_u64(seed);
            let mut sweep = FunctionalSweep::new(n);
            let mut acc = vec![0u64; n];
            for _ in 0..len {
                sweep.sample(g, &mut rng);
                sweep.accumulate(&mut acc);
            }
            acc
        })
        .reduce(
            || vec![0u64; n],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(totals.into_iter().map(|t| t as f64 / samples as f64).collect())
}

struct FunctionalSweep {
    parent: Vec<u32>,
    children: Vec<u32>,
    size: Vec<u64>,
    order: Vec<u32>,
}

impl FunctionalSweep {
    const NONE: u32 = u32::MAX;

    fn new(n: usize) -> Self {
        FunctionalSweep { parent: vec![0; n], children: vec![0; n], size: vec![0; n], order: Vec::with_capacity(n) }
    }

    fn sample<R: Rng>(&mut self, g: &Graph, rng: &mut R) {
        for v in 0..g.n() as VertexId {
            let total = g.total_in(v);
            let mut pick = Self::NONE;
            if total > 0.0 {
                let mut r = rng.gen::<f64>() * total - g.self_weight(v);
                if r >= 0.0 {
                    for e in g.in_edges(v) {
                        if e.weight > 0.0 {
                            pick = e.src;
                        }
                        if r < e.weight {
                            break;
                        }
                        r -= e.weight;
                    }
                }
            }
            self.parent[v as usize] = pick;
        }
    }

    /// Adds each vertex's forward-reach size to `acc`. Tree vertices sum
    /// their children bottom-up; every vertex on a cycle reaches the whole
    /// cycle plus everything hanging off it.
    fn accumulate(&mut self, acc: &mut [u64]) {
        let n = self.parent.len();
        self.children.iter_mut().for_each(|c| *c = 0);
        for &p in &self.parent {
            if p != Self::NONE {
                self.children[p as usize] += 1;
            }
        }
        self.size.iter_mut().for_each(|s| *s = 1);
        self.order.clear();
        self.order.extend((0..n as u32).filter(|&v| self.children[v as usize] == 0));
        let mut head = 0;
        while head < self.order.len() {
            let v = self.order[head] as usize;
            head += 1;
            let p = self.parent[v];
            if p != Self::NONE {
                self.size[p as usize] += self.size[v];
                self.children[p as usize] -= 1;
                if self.children[p as usize] == 0 {
                    self.order.push(p);
                }
            }
        }
        // unprocessed vertices lie on cycles
        for v in 0..n {
            if self.children[v] == 0 {
                continue;
            }
            let mut cycle = vec![v as u32];
            let mut x = self.parent[v];
            while x as usize != v {
                cycle.push(x);
                x = self.parent[x as usize];
            }
            // size[c] already holds 1 + its tree children; the cycle edge
            // into c was never counted
            let total: u64 = cycle.iter().map(|&c| self.size[c as usize]).sum();
            for &c in &cycle {
                self.size[c as usize] = total;
                self.children[c as usize] = 0;
            }
        }
        for (a, &s) in acc.iter_mut().zip(&self.size) {
            *a += s;
        }
    }
}
