//! Update-stream synthesis from a static graph.
//!
//! Edges are shuffled and split into three groups: `E1` stays in the base
//! graph untouched, `E2` is in the base graph and receives one decrease and
//! one increase of the same random `Δ`, and `E3` is absent from the base
//! graph and arrives as a single increase. The shuffled events replay the
//! base graph onto the fully weighted input.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Model, Sign, UpdateEvent, VertexId};
use crate::synth::weighted_graph;
use crate::seeded_rng;

// Δ = j / 2^20 keeps every LT sum exact in binary floating point
const DELTA_GRID: u32 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    /// Shares of kept, churned and inserted edges.
    pub fractions: (f64, f64, f64),
    pub seed: u64,
}

impl Default for StreamSpec {
    fn default() -> Self {
        StreamSpec { fractions: (0.85, 0.05, 0.10), seed: 0 }
    }
}

impl StreamSpec {
    pub fn validate(&self) -> Result<()> {
        let (a, b, c) = self.fractions;
        if [a, b, c].iter().any(|f| !(*f >= 0.0 && f.is_finite())) {
            return Err(Error::domain("stream fractions must be non-negative"));
        }
        if ((a + b + c) - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!("stream fractions sum to {}, expected 1", a + b + c)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedStream {
    pub base: Graph,
    pub events: Vec<UpdateEvent>,
    /// The input graph with protocol weights: what replay must reproduce.
    pub full: Graph,
}

pub fn generate_stream(input: &Graph, model: Model, spec: &StreamSpec) -> Result<GeneratedStream> {
    spec.validate()?;
    if input.model() != model {
        return Err(Error::domain(format!(
            "graph file declares {} but {model} was requested",
            input.model()
        )));
    }
    let n = input.n();
    let mut rng = seeded_rng(spec.seed);
    let full_edges: Vec<(VertexId, VertexId)> = input.edges().map(|(u, v, _)| (u, v)).collect();
    let full = weighted_graph(n, &full_edges, model);

    let mut shuffled = full_edges.clone();
    shuffled.shuffle(&mut rng);
    let m = shuffled.len();
    let kept = (spec.fractions.0 * m as f64).round() as usize;
    let churn = ((spec.fractions.1 * m as f64).round() as usize).min(m - kept.min(m));
    let kept = kept.min(m);
    let (base_edges, inserted) = shuffled.split_at(kept + churn);
    let churned = &base_edges[kept..];

    let mut base = Graph::new(n, model);
    for &(u, v) in base_edges {
        base.add_edge(u, v, full.edge_weight(u, v).expect("edge of full graph"))?;
    }

    let mut events: Vec<UpdateEvent> = Vec::with_capacity(2 * churned.len() + inserted.len());
    for &(u, v) in churned {
        let frac = rng.gen_range(1..=DELTA_GRID) as f64 / DELTA_GRID as f64;
        let delta = match model {
            Model::Lt => frac,
            Model::Ic => frac * full.edge_weight(u, v).expect("edge of full graph"),
        };
        events.push(UpdateEvent::decrease(u, v, delta, 0));
        events.push(UpdateEvent::increase(u, v, delta, 0));
    }
    for &(u, v) in inserted {
        events.push(UpdateEvent::increase(u, v, full.edge_weight(u, v).expect("edge of full graph"), 0));
    }
    events.shuffle(&mut rng);

    if model == Model::Ic {
        order_ic_churn(&mut events, &full);
    }
    for (t, e) in events.iter_mut().enumerate() {
        e.t = t as u64;
    }

    let mut replay = base.clone();
    for e in &events {
        replay.apply_update(e).map_err(|err| {
            Error::domain(format!("generated stream does not replay at t={}: {err}", e.t))
        })?;
    }
    Ok(GeneratedStream { base, events, full })
}

/// Under IC an increase that precedes its decrease may push a probability
/// past 1; such pairs swap positions so the decrease comes first.
fn order_ic_churn(events: &mut [UpdateEvent], full: &Graph) {
    use std::collections::HashMap;
    let mut first_plus: HashMap<(VertexId, VertexId), usize> = HashMap::new();
    let mut pairs = Vec::new();
    for (i, e) in events.iter().enumerate() {
        let key = (e.u, e.v);
        match e.sign {
            Sign::Plus => {
                first_plus.entry(key).or_insert(i);
            }
            Sign::Minus => {
                if let Some(&p) = first_plus.get(&key) {
                    if p < i {
                        pairs.push((p, i, key));
                    }
                }
            }
        }
    }
    for (p, i, (u, v)) in pairs {
        let w = full.edge_weight(u, v).expect("edge of full graph");
        if w + events[p].delta > 1.0 {
            events.swap(p, i);
        }
    }
}

/// Compares edge weights of two graphs on the same vertex set.
pub fn max_weight_gap(a: &Graph, b: &Graph) -> Option<f64> {
    if a.n() != b.n() || a.m() != b.m() {
        return None;
    }
    let mut gap = 0.0f64;
    for (u, v, w) in a.edges() {
        gap = gap.max((b.edge_weight(u, v)? - w).abs());
    }
    for v in 0..a.n() as VertexId {
        gap = gap.max((a.self_weight(v) - b.self_weight(v)).abs());
    }
    Some(gap)
}
