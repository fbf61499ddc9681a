//! Synthetic graphs and RR pools for tests, benchmarks and the CLI.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::{Graph, Model, VertexId};
use crate::sketch::{RRCollection, RRSet};

/// Assigns the stream-protocol weights to an edge list: LT weight 1 with
/// self-weight 1, IC probability `1/in-degree(v)`.
pub fn weighted_graph(n: usize, edges: &[(VertexId, VertexId)], model: Model) -> Graph {
    let mut indeg = vec![0u32; n];
    for &(_, v) in edges {
        indeg[v as usize] += 1;
    }
    let mut g = Graph::new(n, model);
    for &(u, v) in edges {
        let w = match model {
            Model::Lt => 1.0,
            Model::Ic => 1.0 / indeg[v as usize] as f64,
        };
        g.add_edge(u, v, w).expect("generator emits distinct non-loop edges");
    }
    g
}

/// Vertex 0 points at `leaves` leaves. LT weights and self-weights are 1;
/// IC probabilities are 1/2.
pub fn star_graph(leaves: usize, model: Model) -> Graph {
    let mut g = Graph::new(leaves + 1, model);
    let w = match model {
        Model::Lt => 1.0,
        Model::Ic => 0.5,
    };
    for leaf in 1..=leaves as VertexId {
        g.add_edge(0, leaf, w).expect("fresh edge");
    }
    g
}

/// Directed G(n, p). LT weights are uniform in (0, 1], IC probabilities
/// uniform in (0, 1).
pub fn random_graph<R: Rng + ?Sized>(n: usize, p: f64, model: Model, rng: &mut R) -> Graph {
    let mut g = Graph::new(n, model);
    for u in 0..n as VertexId {
        for v in 0..n as VertexId {
            if u != v && rng.gen_bool(p) {
                let w = 1.0 - rng.gen::<f64>();
                let w = if model == Model::Ic { w.min(0.999) } else { w };
                g.add_edge(u, v, w).expect("fresh edge");
            }
        }
    }
    g
}

/// Directed preferential attachment: each new vertex links to
/// `per_vertex` earlier vertices picked proportionally to degree + 1; the
/// edge points away from the older vertex with probability `out_bias`.
/// Edge weights follow [`weighted_graph`].
pub fn power_law_graph<R: Rng + ?Sized>(n: usize, per_vertex: usize, out_bias: f64, model: Model, rng: &mut R) -> Graph {
    let mut edges = Vec::new();
    let mut seen = HashSet::new();
    // one entry per unit of (degree + 1)
    let mut urn: Vec<VertexId> = Vec::new();
    for t in 0..n as VertexId {
        if t > 0 {
            let picks = per_vertex.min(t as usize);
            let mut chosen = HashSet::new();
            while chosen.len() < picks {
                chosen.insert(*urn.choose(rng).expect("urn has earlier vertices"));
            }
            let mut chosen: Vec<_> = chosen.into_iter().collect();
            chosen.sort_unstable();
            for old in chosen {
                let e = if rng.gen_bool(out_bias) { (old, t) } else { (t, old) };
                if seen.insert(e) {
                    edges.push(e);
                    urn.push(old);
                    urn.push(t);
                }
            }
        }
        urn.push(t);
    }
    weighted_graph(n, &edges, model)
}

/// A pool of `sets` RR sets over `n` vertices with heavily skewed
/// membership: sizes are geometric with mean ~`mean_size`, members are
/// drawn as `⌊n·u^skew⌋` so low ids dominate.
pub fn skewed_pool<R: Rng + ?Sized>(n: usize, sets: usize, mean_size: f64, skew: f64, rng: &mut R) -> RRCollection {
    let mut pool = RRCollection::new(n);
    let stop = 1.0 / mean_size.max(1.0);
    for _ in 0..sets {
        let mut members: Vec<VertexId> = Vec::new();
        let root = rng.gen_range(0..n as VertexId);
        members.push(root);
        while !rng.gen_bool(stop) {
            let v = ((n as f64) * rng.gen::<f64>().powf(skew)) as VertexId;
            let v = v.min(n as VertexId - 1);
            if !members.contains(&v) {
                members.push(v);
            }
        }
        let cost = members.len() as u64;
        pool.push_set(RRSet { root, seed: 0, members, cost });
    }
    pool
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    #[test]
    fn star_shape() {
        let g = star_graph(50, Model::Lt);
        assert_eq!(g.n(), 51);
        assert_eq!(g.m(), 50);
        assert_eq!(g.total_in(7), 2.0);
    }

    #[test]
    fn power_law_is_simple_and_skewed() {
        let mut rng = seeded_rng(1);
        let g = power_law_graph(1000, 3, 0.8, Model::Lt, &mut rng);
        g.check_invariants().unwrap();
        let mut outdeg = vec![0usize; 1000];
        for (u, _, _) in g.edges() {
            outdeg[u as usize] += 1;
        }
        let max = *outdeg.iter().max().unwrap();
        let mean = g.m() as f64 / 1000.0;
        assert!(max as f64 > 10.0 * mean, "max {max}, mean {mean}");
    }

    #[test]
    fn ic_weights_are_inverse_indegree() {
        let g = weighted_graph(3, &[(0, 2), (1, 2), (0, 1)], Model::Ic);
        assert_eq!(g.edge_weight(0, 2), Some(0.5));
        assert_eq!(g.edge_weight(0, 1), Some(1.0));
    }

    #[test]
    fn skewed_pool_is_consistent() {
        let mut rng = seeded_rng(2);
        let pool = skewed_pool(10_000, 500, 4.0, 3.0, &mut rng);
        pool.check_invariants().unwrap();
        assert_eq!(pool.len(), 500);
        assert!(pool.index().max_degree() > 20);
    }
}
