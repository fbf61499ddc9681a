//! Weighted directed network with LT/IC semantics and the edge-update stream.
//!
//! Vertices are dense `0..n` ids and never change. In-edges are kept per
//! target in insertion order; an `(u, v) -> slot` map gives O(1) lookup for
//! updates. Under LT every vertex also carries a self-weight `w_v` and the
//! cached total `W_v = w_v + Σ w_uv`.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VertexId = u32;

const DEFAULT_SELF_WEIGHT: f64 = 1.0;
const WEIGHT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    #[serde(rename = "LT")]
    Lt,
    #[serde(rename = "IC")]
    Ic,
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "LT" | "lt" => Ok(Model::Lt),
            "IC" | "ic" => Ok(Model::Ic),
            other => Err(Error::domain(format!("unknown model {other:?} (expected LT or IC)"))),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Lt => "LT",
            Model::Ic => "IC",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InEdge {
    pub src: VertexId,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// One `(u, v, ±, Δ, t)` edge-weight update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateEvent {
    pub u: VertexId,
    pub v: VertexId,
    pub sign: Sign,
    pub delta: f64,
    pub t: u64,
}

impl UpdateEvent {
    pub fn increase(u: VertexId, v: VertexId, delta: f64, t: u64) -> Self {
        UpdateEvent { u, v, sign: Sign::Plus, delta, t }
    }

    pub fn decrease(u: VertexId, v: VertexId, delta: f64, t: u64) -> Self {
        UpdateEvent { u, v, sign: Sign::Minus, delta, t }
    }
}

impl fmt::Display for UpdateEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {} {}", self.u, self.v, self.sign, self.delta, self.t)
    }
}

/// LT in-distribution of a vertex: pick in-neighbour `u` with probability
/// `w_uv / W_v`, or stop with probability `w_v / W_v`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceDistribution {
    pub choices: Vec<(VertexId, f64)>,
    pub stop: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    model: Model,
    in_edges: Vec<Vec<InEdge>>,
    self_weight: Vec<f64>,
    total_in: Vec<f64>,
    edge_slot: HashMap<(VertexId, VertexId), u32>,
}

impl Graph {
    /// Empty graph on `n` vertices; LT self-weights default to 1.
    pub fn new(n: usize, model: Model) -> Self {
        let self_weight = match model {
            Model::Lt => vec![DEFAULT_SELF_WEIGHT; n],
            Model::Ic => vec![0.0; n],
        };
        Graph {
            model,
            in_edges: vec![Vec::new(); n],
            total_in: self_weight.clone(),
            self_weight,
            edge_slot: HashMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.in_edges.len()
    }

    pub fn m(&self) -> usize {
        self.edge_slot.len()
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn in_edges(&self, v: VertexId) -> &[InEdge] {
        &self.in_edges[v as usize]
    }

    pub fn self_weight(&self, v: VertexId) -> f64 {
        self.self_weight[v as usize]
    }

    /// Cached `W_v` (LT only; IC graphs report 0).
    pub fn total_in(&self, v: VertexId) -> f64 {
        self.total_in[v as usize]
    }

    pub fn edge_weight(&self, u: VertexId, v: VertexId) -> Option<f64> {
        self.edge_slot
            .get(&(u, v))
            .map(|&slot| self.in_edges[v as usize][slot as usize].weight)
    }

    /// All edges as `(u, v, w)` in per-target insertion order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId, f64)> + '_ {
        self.in_edges
            .iter()
            .enumerate()
            .flat_map(|(v, list)| list.iter().map(move |e| (e.src, v as VertexId, e.weight)))
    }

    /// Forward adjacency `u -> [(v, w_uv)]`, built on demand.
    pub fn out_adjacency(&self) -> Vec<Vec<(VertexId, f64)>> {
        let mut out = vec![Vec::new(); self.n()];
        for (u, v, w) in self.edges() {
            out[u as usize].push((v, w));
        }
        out
    }

    fn check_vertex(&self, v: VertexId) -> Result<()> {
        if (v as usize) < self.n() {
            Ok(())
        } else {
            Err(Error::Vertex(v))
        }
    }

    pub fn set_self_weight(&mut self, v: VertexId, w: f64) -> Result<()> {
        self.check_vertex(v)?;
        if self.model != Model::Lt {
            return Err(Error::domain("self-weights only exist under LT"));
        }
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::domain(format!("self-weight of {v} must be >= 0, got {w}")));
        }
        let vi = v as usize;
        self.total_in[vi] += w - self.self_weight[vi];
        self.self_weight[vi] = w;
        Ok(())
    }

    /// Inserts a new edge. Duplicates and self-loops are rejected.
    pub fn add_edge(&mut self, u: VertexId, v: VertexId, w: f64) -> Result<()> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if u == v {
            return Err(Error::Edge { u, v, msg: "self-loops are not allowed".into() });
        }
        if self.edge_slot.contains_key(&(u, v)) {
            return Err(Error::Edge { u, v, msg: "duplicate edge".into() });
        }
        self.check_weight(u, v, w)?;
        let list = &mut self.in_edges[v as usize];
        self.edge_slot.insert((u, v), list.len() as u32);
        list.push(InEdge { src: u, weight: w });
        if self.model == Model::Lt {
            self.total_in[v as usize] += w;
        }
        Ok(())
    }

    fn check_weight(&self, u: VertexId, v: VertexId, w: f64) -> Result<()> {
        let ok = match self.model {
            Model::Lt => w >= 0.0 && w.is_finite(),
            Model::Ic => (0.0..=1.0).contains(&w),
        };
        if ok {
            Ok(())
        } else {
            let msg = match self.model {
                Model::Lt => format!("LT weight must be >= 0, got {w}"),
                Model::Ic => format!("IC probability must lie in [0, 1], got {w}"),
            };
            Err(Error::Edge { u, v, msg })
        }
    }

    /// Applies one weight update and returns the vertex whose
    /// in-distribution changed (always `e.v`). On error the graph is left
    /// untouched.
    pub fn apply_update(&mut self, e: &UpdateEvent) -> Result<VertexId> {
        let (u, v) = (e.u, e.v);
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if u == v {
            return Err(Error::Edge { u, v, msg: "self-loops are not allowed".into() });
        }
        if !(e.delta > 0.0 && e.delta.is_finite()) {
            return Err(Error::Edge { u, v, msg: format!("delta must be > 0, got {}", e.delta) });
        }
        let current = self.edge_weight(u, v);
        let old = current.unwrap_or(0.0);
        let mut new = match e.sign {
            Sign::Plus => old + e.delta,
            Sign::Minus => old - e.delta,
        };
        if e.sign == Sign::Minus {
            if current.is_none() || new < -WEIGHT_SLACK * old.max(1.0) {
                return Err(Error::Edge {
                    u,
                    v,
                    msg: format!("decrease by {} underflows weight {old}", e.delta),
                });
            }
            new = new.max(0.0);
        }
        if self.model == Model::Ic && e.sign == Sign::Plus {
            if new > 1.0 + WEIGHT_SLACK {
                return Err(Error::Edge {
                    u,
                    v,
                    msg: format!("increase by {} pushes probability {old} above 1", e.delta),
                });
            }
            new = new.min(1.0);
        }

        match self.edge_slot.get(&(u, v)) {
            Some(&slot) => self.in_edges[v as usize][slot as usize].weight = new,
            None => {
                let list = &mut self.in_edges[v as usize];
                self.edge_slot.insert((u, v), list.len() as u32);
                list.push(InEdge { src: u, weight: new });
            }
        }
        if self.model == Model::Lt {
            let w = &mut self.total_in[v as usize];
            match e.sign {
                Sign::Plus => *w += e.delta,
                Sign::Minus => *w -= old - new,
            }
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        Ok(v)
    }

    pub fn lt_choice_distribution(&self, v: VertexId) -> Result<ChoiceDistribution> {
        self.check_vertex(v)?;
        if self.model != Model::Lt {
            return Err(Error::domain("choice distribution is defined for LT graphs"));
        }
        let total = self.total_in(v);
        if total <= 0.0 {
            return Ok(ChoiceDistribution {
                choices: self.in_edges(v).iter().map(|e| (e.src, 0.0)).collect(),
                stop: 1.0,
            });
        }
        Ok(ChoiceDistribution {
            choices: self.in_edges(v).iter().map(|e| (e.src, e.weight / total)).collect(),
            stop: self.self_weight(v) / total,
        })
    }

    /// `W_v` recomputed from scratch, for cache checks.
    pub fn recomputed_total_in(&self, v: VertexId) -> f64 {
        self.self_weight(v) + self.in_edges(v).iter().map(|e| e.weight).sum::<f64>()
    }

    pub fn check_invariants(&self) -> Result<()> {
        for v in 0..self.n() as VertexId {
            for e in self.in_edges(v) {
                if e.src == v {
                    return Err(Error::Invariant(format!("self-loop on {v}")));
                }
                self.check_weight(e.src, v, e.weight)
                    .map_err(|err| Error::Invariant(err.to_string()))?;
            }
            if self.model == Model::Lt {
                let fresh = self.recomputed_total_in(v);
                let cached = self.total_in(v);
                if (fresh - cached).abs() > 1e-9 * fresh.abs().max(1.0) {
                    return Err(Error::Invariant(format!(
                        "cached W_{v} = {cached} but recomputed {fresh}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Parses the text graph format:
    ///
    /// ```text
    /// # comment
    /// n m MODEL
    /// u v w        (m lines)
    /// v id w       (optional LT self-weight overrides)
    /// ```
    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut graph: Option<Graph> = None;
        let mut expected_edges = 0usize;
        let mut seen_edges = 0usize;
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            let perr = |msg: String| Error::Parse { line: lineno, msg };
            let Some(g) = graph.as_mut() else {
                if fields.len() != 3 {
                    return Err(perr("header must be `n m MODEL`".into()));
                }
                let n: usize = fields[0].parse().map_err(|_| perr(format!("bad vertex count {:?}", fields[0])))?;
                expected_edges = fields[1].parse().map_err(|_| perr(format!("bad edge count {:?}", fields[1])))?;
                let model: Model = fields[2].parse().map_err(|e: Error| perr(e.to_string()))?;
                if n > u32::MAX as usize {
                    return Err(perr("vertex count exceeds u32".into()));
                }
                graph = Some(Graph::new(n, model));
                continue;
            };
            if fields.len() != 3 {
                return Err(perr(format!("expected 3 fields, got {}", fields.len())));
            }
            let weight: f64 = fields[2].parse().map_err(|_| perr(format!("bad weight {:?}", fields[2])))?;
            if fields[0] == "v" {
                let id: VertexId = fields[1].parse().map_err(|_| perr(format!("bad vertex id {:?}", fields[1])))?;
                g.set_self_weight(id, weight).map_err(|e| perr(e.to_string()))?;
                continue;
            }
            let u: VertexId = fields[0].parse().map_err(|_| perr(format!("bad vertex id {:?}", fields[0])))?;
            let v: VertexId = fields[1].parse().map_err(|_| perr(format!("bad vertex id {:?}", fields[1])))?;
            g.add_edge(u, v, weight).map_err(|e| perr(e.to_string()))?;
            seen_edges += 1;
        }
        let graph = graph.ok_or(Error::Parse { line: 0, msg: "missing header".into() })?;
        if seen_edges != expected_edges {
            return Err(Error::Parse {
                line: 0,
                msg: format!("header announced {expected_edges} edges, found {seen_edges}"),
            });
        }
        Ok(graph)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::parse(text.as_bytes())
    }

    /// Serializes in the format [`Graph::parse`] reads. Self-weights are
    /// written only where they differ from the default.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} {}", self.n(), self.m(), self.model);
        for (u, v, w) in self.edges() {
            let _ = writeln!(out, "{u} {v} {w}");
        }
        if self.model == Model::Lt {
            for (v, &w) in self.self_weight.iter().enumerate() {
                if w != DEFAULT_SELF_WEIGHT {
                    let _ = writeln!(out, "v {v} {w}");
                }
            }
        }
        out
    }
}

/// Parses an update stream: one `u v S delta t` per line, `S` in `{+,-}`.
pub fn parse_stream<R: BufRead>(reader: R) -> Result<Vec<UpdateEvent>> {
    let mut events = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let perr = |msg: String| Error::Parse { line: lineno, msg };
        let f: Vec<&str> = trimmed.split_whitespace().collect();
        if f.len() != 5 {
            return Err(perr(format!("expected `u v S delta t`, got {} fields", f.len())));
        }
        let u = f[0].parse().map_err(|_| perr(format!("bad vertex id {:?}", f[0])))?;
        let v = f[1].parse().map_err(|_| perr(format!("bad vertex id {:?}", f[1])))?;
        let sign = match f[2] {
            "+" => Sign::Plus,
            "-" => Sign::Minus,
            s => return Err(perr(format!("bad sign {s:?}"))),
        };
        let delta: f64 = f[3].parse().map_err(|_| perr(format!("bad delta {:?}", f[3])))?;
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(perr(format!("delta must be > 0, got {delta}")));
        }
        let t = f[4].parse().map_err(|_| perr(format!("bad timestamp {:?}", f[4])))?;
        if u == v {
            return Err(perr("self-loop update".into()));
        }
        events.push(UpdateEvent { u, v, sign, delta, t });
    }
    Ok(events)
}

pub fn stream_to_text(events: &[UpdateEvent]) -> String {
    let mut out = String::new();
    for e in events {
        let _ = writeln!(out, "{e}");
    }
    out
}
