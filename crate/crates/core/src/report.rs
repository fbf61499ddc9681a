//! Stream drivers and their JSON-lines reports.
//!
//! Every line is one [`Record`], tagged by `"type"`: `init`, `event`,
//! `query` or `summary`. Wall-clock fields appear only when timings are
//! requested, so default reports are byte-identical across runs.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::{Graph, Model, Sign, UpdateEvent, VertexId};
use crate::immax::ImTracker;
use crate::seeded_rng;
use crate::stats::{EpsDelta, SizingMode};
use crate::topk::{Maintenance, TopKTracker};

// query-k draws use their own stream so tracker sampling is unaffected by tau
const QUERY_STREAM: u64 = 0x5175_6572_795f_6b73;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Topk,
    Im,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Record {
    Init {
        task: Task,
        model: Model,
        n: usize,
        m: usize,
        eps: f64,
        delta: f64,
        /// `k` for top-k, `k_max` for IM.
        k: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mode: Option<SizingMode>,
        target: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m2_ratio: Option<f64>,
        m1: usize,
        m2: usize,
        cost: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        wall_ns: Option<u64>,
    },
    Event {
        t: u64,
        u: VertexId,
        v: VertexId,
        sign: Sign,
        delta: f64,
        refreshed: usize,
        appended: usize,
        removed: usize,
        m1: usize,
        m2: usize,
        cost: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        wall_ns: Option<u64>,
    },
    Query {
        /// Events processed before the query.
        after: u64,
        k: usize,
        vertices: Vec<VertexId>,
        /// Per-vertex estimates (top-k) or the seed set's estimate (IM).
        estimates: Vec<f64>,
        threshold: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coverage: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fallback: Option<bool>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        wall_ns: Option<u64>,
    },
    Summary {
        events: u64,
        queries: u64,
        refreshed: u64,
        appended: u64,
        removed: u64,
        m1_min: usize,
        m1_max: usize,
        m1: usize,
        m2: usize,
        cost: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fallbacks: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        wall_ns: Option<u64>,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub records: Vec<Record>,
}

impl RunReport {
    /// Writes one JSON object per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    /// Parses a report back, rejecting any line that does not fit the schema.
    pub fn parse_jsonl(text: &str) -> Result<Self> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let r = serde_json::from_str(line).map_err(|e| crate::Error::Parse { line: i + 1, msg: e.to_string() })?;
            records.push(r);
        }
        Ok(RunReport { records })
    }

    pub fn queries(&self) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(|r| matches!(r, Record::Query { .. }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub seed: u64,
    pub summary: bool,
    pub timings: bool,
    pub assertions: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { seed: 0, summary: false, timings: false, assertions: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImRun {
    pub k_max: usize,
    pub mode: SizingMode,
    pub tau: usize,
}

#[derive(Default)]
struct Totals {
    events: u64,
    queries: u64,
    refreshed: u64,
    appended: u64,
    removed: u64,
    m1_min: usize,
    m1_max: usize,
    fallbacks: u64,
}

impl Totals {
    fn start(m1: usize) -> Self {
        Totals { m1_min: m1, m1_max: m1, ..Default::default() }
    }

    fn absorb(&mut self, s: Maintenance, m1: usize) {
        self.events += 1;
        self.refreshed += s.refreshed as u64;
        self.appended += s.appended as u64;
        self.removed += s.removed as u64;
        self.m1_min = self.m1_min.min(m1);
        self.m1_max = self.m1_max.max(m1);
    }
}

fn elapsed(on: bool, since: Instant) -> Option<u64> {
    on.then(|| since.elapsed().as_nanos() as u64)
}

fn event_record(e: &UpdateEvent, s: Maintenance, (m1, m2): (usize, usize), cost: u64, wall_ns: Option<u64>) -> Record {
    Record::Event {
        t: e.t,
        u: e.u,
        v: e.v,
        sign: e.sign,
        delta: e.delta,
        refreshed: s.refreshed,
        appended: s.appended,
        removed: s.removed,
        m1,
        m2,
        cost,
        wall_ns,
    }
}

/// Tracks the top-k vertices over `events` and answers one query at the end.
pub fn run_topk(graph: Graph, events: &[UpdateEvent], k: usize, cfg: EpsDelta, opts: RunOptions) -> Result<RunReport> {
    let run_start = Instant::now();
    let (model, n, m) = (graph.model(), graph.n(), graph.m());
    let mut tr = TopKTracker::new(graph, k, cfg, opts.seed)?.with_assertions(opts.assertions);
    if opts.assertions {
        tr.check_invariants()?;
    }
    let (m1, m2) = tr.pool_sizes();
    let mut records = vec![Record::Init {
        task: Task::Topk,
        model,
        n,
        m,
        eps: cfg.eps,
        delta: cfg.delta,
        k,
        mode: None,
        target: tr.target(),
        m2_ratio: None,
        m1,
        m2,
        cost: tr.total_cost(),
        wall_ns: elapsed(opts.timings, run_start),
    }];
    let mut totals = Totals::start(m1);
    for e in events {
        let t0 = Instant::now();
        let s = tr.process(e)?;
        let sizes = tr.pool_sizes();
        totals.absorb(s, sizes.0);
        records.push(event_record(e, s, sizes, tr.total_cost(), elapsed(opts.timings, t0)));
    }
    let t0 = Instant::now();
    let a = tr.query();
    totals.queries += 1;
    records.push(Record::Query {
        after: totals.events,
        k,
        vertices: a.vertices,
        estimates: a.estimates,
        threshold: a.threshold,
        coverage: None,
        q: None,
        fallback: None,
        wall_ns: elapsed(opts.timings, t0),
    });
    if opts.summary {
        let (m1, m2) = tr.pool_sizes();
        records.push(summary(&totals, m1, m2, tr.total_cost(), None, elapsed(opts.timings, run_start)));
    }
    Ok(RunReport { records })
}

/// Tracks an IM pool over `events`, querying every `tau` events with `k`
/// drawn uniformly from `1..=k_max`.
pub fn run_im(graph: Graph, events: &[UpdateEvent], run: ImRun, cfg: EpsDelta, opts: RunOptions) -> Result<RunReport> {
    if run.tau < 1 {
        return Err(crate::Error::Domain("tau must be >= 1".into()));
    }
    let run_start = Instant::now();
    let (model, n, m) = (graph.model(), graph.n(), graph.m());
    let mut tr = ImTracker::new(graph, run.k_max, cfg, run.mode, opts.seed)?.with_assertions(opts.assertions);
    if opts.assertions {
        tr.check_invariants()?;
    }
    let mut query_rng = seeded_rng(opts.seed ^ QUERY_STREAM);
    let (m1, m2) = tr.pool_sizes();
    let targets = tr.targets();
    let mut records = vec![Record::Init {
        task: Task::Im,
        model,
        n,
        m,
        eps: cfg.eps,
        delta: cfg.delta,
        k: run.k_max,
        mode: Some(run.mode),
        target: targets.d1_target,
        m2_ratio: Some(targets.m2_ratio),
        m1,
        m2,
        cost: tr.total_cost(),
        wall_ns: elapsed(opts.timings, run_start),
    }];
    let mut totals = Totals::start(m1);
    for e in events {
        let t0 = Instant::now();
        let s = tr.process(e)?;
        let sizes = tr.pool_sizes();
        totals.absorb(s, sizes.0);
        records.push(event_record(e, s, sizes, tr.total_cost(), elapsed(opts.timings, t0)));
        if totals.events % run.tau as u64 == 0 {
            let t0 = Instant::now();
            let a = tr.query_random(&mut query_rng)?;
            totals.queries += 1;
            totals.fallbacks += a.fallback as u64;
            records.push(Record::Query {
                after: totals.events,
                k: a.k,
                vertices: a.seeds,
                estimates: vec![a.estimate],
                threshold: a.threshold,
                coverage: Some(a.coverage),
                q: Some(a.q),
                fallback: Some(a.fallback),
                wall_ns: elapsed(opts.timings, t0),
            });
        }
    }
    if opts.summary {
        let (m1, m2) = tr.pool_sizes();
        records.push(summary(&totals, m1, m2, tr.total_cost(), Some(totals.fallbacks), elapsed(opts.timings, run_start)));
    }
    Ok(RunReport { records })
}

fn summary(t: &Totals, m1: usize, m2: usize, cost: u64, fallbacks: Option<u64>, wall_ns: Option<u64>) -> Record {
    Record::Summary {
        events: t.events,
        queries: t.queries,
        refreshed: t.refreshed,
        appended: t.appended,
        removed: t.removed,
        m1_min: t.m1_min,
        m1_max: t.m1_max,
        m1,
        m2,
        cost,
        fallbacks,
        wall_ns,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::g3_lt;
    use crate::synth::star_graph;

    fn g3_stream() -> Vec<UpdateEvent> {
        vec![
            UpdateEvent::increase(1, 0, 1.0, 0),
            UpdateEvent::increase(2, 0, 0.5, 1),
            UpdateEvent::decrease(1, 0, 0.5, 2),
            UpdateEvent::increase(0, 1, 1.0, 3),
            UpdateEvent::increase(2, 1, 2.0, 4),
        ]
    }

    fn tracker_cfg() -> EpsDelta {
        EpsDelta::new(1.0 / 3.0, 0.25).unwrap()
    }

    #[test]
    fn empty_stream_topk_has_init_and_query() {
        let r = run_topk(g3_lt(), &[], 1, tracker_cfg(), RunOptions::default()).unwrap();
        assert_eq!(r.records.len(), 2);
        assert!(matches!(r.records[0], Record::Init { .. }));
        assert!(matches!(r.records[1], Record::Query { .. }));
    }

    #[test]
    fn empty_stream_im_has_only_init() {
        let run = ImRun { k_max: 2, mode: SizingMode::Practical, tau: 1 };
        let r = run_im(star_graph(5, Model::Lt), &[], run, tracker_cfg(), RunOptions::default()).unwrap();
        assert_eq!(r.records.len(), 1);
    }

    #[test]
    fn g3_smoke_with_assertions_round_trips() {
        let opts = RunOptions { seed: 3, summary: true, timings: true, assertions: true };
        let r = run_topk(g3_lt(), &g3_stream(), 1, tracker_cfg(), opts).unwrap();
        assert_eq!(r.records.len(), 1 + 5 + 1 + 1);
        let text = r.to_jsonl();
        assert_eq!(RunReport::parse_jsonl(&text).unwrap(), r);
        assert!(text.lines().all(|l| l.contains("\"wall_ns\"")));
    }

    #[test]
    fn im_queries_every_tau() {
        let run = ImRun { k_max: 2, mode: SizingMode::Theoretical, tau: 2 };
        let g = star_graph(5, Model::Lt);
        let events: Vec<_> = (0..7u64).map(|t| UpdateEvent::increase(0, 1 + (t % 5) as u32, 0.5, t)).collect();
        let opts = RunOptions { summary: true, assertions: true, ..Default::default() };
        let r = run_im(g, &events, run, tracker_cfg(), opts).unwrap();
        assert_eq!(r.queries().count(), 3);
        assert!(matches!(r.records.last(), Some(Record::Summary { queries: 3, .. })));
    }

    #[test]
    fn reports_are_deterministic_without_timings() {
        let opts = RunOptions { seed: 9, summary: true, ..Default::default() };
        let a = run_topk(g3_lt(), &g3_stream(), 2, tracker_cfg(), opts).unwrap().to_jsonl();
        let b = run_topk(g3_lt(), &g3_stream(), 2, tracker_cfg(), opts).unwrap().to_jsonl();
        assert_eq!(a, b);
        assert!(!a.contains("wall_ns"));
    }
}
