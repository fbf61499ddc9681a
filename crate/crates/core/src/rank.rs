//! Bucketed doubly-linked degree index.
//!
//! Vertices sharing a degree hang off one bucket head; heads form a second
//! doubly-linked list ordered by strictly decreasing degree. A unit
//! increment or decrement moves one vertex to an adjacent bucket, so every
//! mutation is O(1). Attached [`KthTracker`]s follow the k-th largest degree
//! through the same mutations using a head pointer `H_k` and a bias `b`
//! (`k − b` vertices sit strictly above `H_k`).
//!
//! Degree-0 vertices are not stored. A sentinel bucket of degree 0 sits
//! below every real bucket and counts them, which lets a tracker over fewer
//! than `k` nonzero vertices rest on it and report 0.

use std::collections::HashMap;

use crate::graph::VertexId;

const NIL: u32 = u32::MAX;
const ZERO: u32 = 0;

#[derive(Debug, Clone, PartialEq)]
struct Bucket {
    degree: u32,
    num: u32,
    head: u32,
    tail: u32,
    up: u32,
    down: u32,
}

#[derive(Debug, Clone, PartialEq)]
struct Node {
    vertex: VertexId,
    prev: u32,
    next: u32,
    bucket: u32,
}

#[derive(Debug, Clone, PartialEq)]
enum Locator {
    Dense(Vec<u32>),
    Sparse(HashMap<VertexId, u32>),
}

impl Locator {
    fn get(&self, v: VertexId) -> u32 {
        match self {
            Locator::Dense(slots) => slots[v as usize],
            Locator::Sparse(map) => map.get(&v).copied().unwrap_or(NIL),
        }
    }

    fn set(&mut self, v: VertexId, node: u32) {
        match self {
            Locator::Dense(slots) => slots[v as usize] = node,
            Locator::Sparse(map) => {
                if node == NIL {
                    map.remove(&v);
                } else {
                    map.insert(v, node);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct TrackerState {
    k: u32,
    head: u32,
    bias: u32,
}

/// Handle to a k-th-largest tracker attached to a [`DegreeIndex`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KthTracker(usize);

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeIndex {
    n: usize,
    buckets: Vec<Bucket>,
    free_buckets: Vec<u32>,
    nodes: Vec<Node>,
    free_nodes: Vec<u32>,
    locator: Locator,
    top: u32,
    present: usize,
    trackers: Vec<TrackerState>,
    ops: u64,
}

impl DegreeIndex {
    /// Empty index over vertex ids `0..n` (all degrees 0).
    pub fn new(n: usize) -> Self {
        Self::with_locator(n, Locator::Dense(vec![NIL; n]))
    }

    fn with_locator(n: usize, locator: Locator) -> Self {
        let zero = Bucket { degree: 0, num: n as u32, head: NIL, tail: NIL, up: NIL, down: NIL };
        DegreeIndex {
            n,
            buckets: vec![zero],
            free_buckets: Vec::new(),
            nodes: Vec::new(),
            free_nodes: Vec::new(),
            locator,
            top: ZERO,
            present: 0,
            trackers: Vec::new(),
            ops: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of vertices with degree ≥ 1.
    pub fn len(&self) -> usize {
        self.present
    }

    pub fn is_empty(&self) -> bool {
        self.present == 0
    }

    /// Count of bucket/node pointer operations performed by mutations.
    pub fn op_count(&self) -> u64 {
        self.ops
    }

    pub fn degree(&self, v: VertexId) -> u32 {
        match self.locator.get(v) {
            NIL => 0,
            node => self.buckets[self.nodes[node as usize].bucket as usize].degree,
        }
    }

    pub fn max_degree(&self) -> u32 {
        self.buckets[self.top as usize].degree
    }

    /// Attaches a tracker for the k-th largest degree. Costs one pass over
    /// the buckets; afterwards the tracker is maintained in O(1).
    pub fn attach_tracker(&mut self, k: usize) -> KthTracker {
        assert!(k >= 1 && k <= self.n, "tracker rank {k} outside 1..={}", self.n);
        let mut above = 0u32;
        let mut b = self.top;
        loop {
            let bucket = &self.buckets[b as usize];
            if b == ZERO || above + bucket.num >= k as u32 {
                break;
            }
            above += bucket.num;
            b = bucket.down;
        }
        self.trackers.push(TrackerState { k: k as u32, head: b, bias: k as u32 - above });
        KthTracker(self.trackers.len() - 1)
    }

    /// The tracked k-th largest degree (0 while fewer than k vertices have
    /// nonzero degree).
    pub fn value(&self, t: KthTracker) -> u32 {
        self.buckets[self.trackers[t.0].head as usize].degree
    }

    pub fn tracker_rank(&self, t: KthTracker) -> usize {
        self.trackers[t.0].k as usize
    }

    fn alloc_bucket(&mut self, degree: u32, up: u32, down: u32) -> u32 {
        let b = Bucket { degree, num: 0, head: NIL, tail: NIL, up, down };
        let id = match self.free_buckets.pop() {
            Some(id) => {
                self.buckets[id as usize] = b;
                id
            }
            None => {
                self.buckets.push(b);
                (self.buckets.len() - 1) as u32
            }
        };
        if up != NIL {
            self.buckets[up as usize].down = id;
        } else {
            self.top = id;
        }
        if down != NIL {
            self.buckets[down as usize].up = id;
        }
        self.ops += 1;
        id
    }

    fn release_bucket(&mut self, id: u32) {
        debug_assert!(id != ZERO && self.buckets[id as usize].num == 0);
        let Bucket { up, down, .. } = self.buckets[id as usize];
        if up != NIL {
            self.buckets[up as usize].down = down;
        } else {
            self.top = down;
        }
        if down != NIL {
            self.buckets[down as usize].up = up;
        }
        self.free_buckets.push(id);
        self.ops += 1;
    }

    fn unlink_node(&mut self, node: u32) {
        let Node { prev, next, bucket, .. } = self.nodes[node as usize];
        if prev != NIL {
            self.nodes[prev as usize].next = next;
        } else {
            self.buckets[bucket as usize].head = next;
        }
        if next != NIL {
            self.nodes[next as usize].prev = prev;
        } else {
            self.buckets[bucket as usize].tail = prev;
        }
        self.buckets[bucket as usize].num -= 1;
        self.ops += 1;
    }

    fn link_node(&mut self, node: u32, bucket: u32) {
        let tail = self.buckets[bucket as usize].tail;
        {
            let nd = &mut self.nodes[node as usize];
            nd.prev = tail;
            nd.next = NIL;
            nd.bucket = bucket;
        }
        if tail != NIL {
            self.nodes[tail as usize].next = node;
        } else {
            self.buckets[bucket as usize].head = node;
        }
        let b = &mut self.buckets[bucket as usize];
        b.tail = node;
        b.num += 1;
        self.ops += 1;
    }

    fn alloc_node(&mut self, v: VertexId) -> u32 {
        let nd = Node { vertex: v, prev: NIL, next: NIL, bucket: NIL };
        let id = match self.free_nodes.pop() {
            Some(id) => {
                self.nodes[id as usize] = nd;
                id
            }
            None => {
                self.nodes.push(nd);
                (self.nodes.len() - 1) as u32
            }
        };
        self.locator.set(v, id);
        self.present += 1;
        id
    }

    fn free_node(&mut self, v: VertexId, node: u32) {
        self.locator.set(v, NIL);
        self.free_nodes.push(node);
        self.present -= 1;
    }

    /// Raises the degree of `v` by one.
    pub fn increase(&mut self, v: VertexId) {
        let node = self.locator.get(v);
        let old = if node == NIL { ZERO } else { self.nodes[node as usize].bucket };
        let d = self.buckets[old as usize].degree;
        let up = self.buckets[old as usize].up;
        let new = if up != NIL && self.buckets[up as usize].degree == d + 1 {
            up
        } else {
            self.alloc_bucket(d + 1, up, old)
        };

        let node = if node == NIL {
            self.buckets[ZERO as usize].num -= 1;
            self.alloc_node(v)
        } else {
            self.unlink_node(node);
            node
        };
        self.link_node(node, new);

        for t in &mut self.trackers {
            if t.head == old {
                if t.bias == 1 {
                    t.head = new;
                    t.bias = self.buckets[new as usize].num;
                } else {
                    t.bias -= 1;
                }
            }
        }

        if old != ZERO && self.buckets[old as usize].num == 0 {
            self.release_bucket(old);
        }
    }

    /// Lowers the degree of `v` by one; `v` leaves the index at degree 0.
    ///
    /// Panics if `v` already has degree 0.
    pub fn decrease(&mut self, v: VertexId) {
        let node = self.locator.get(v);
        assert!(node != NIL, "decrease of vertex {v} at degree 0");
        let old = self.nodes[node as usize].bucket;
        let old_num = self.buckets[old as usize].num;
        let d = self.buckets[old as usize].degree;
        let down = self.buckets[old as usize].down;
        let new = if d == 1 {
            ZERO
        } else if self.buckets[down as usize].degree == d - 1 {
            down
        } else {
            self.alloc_bucket(d - 1, old, down)
        };

        self.unlink_node(node);
        if new == ZERO {
            self.free_node(v, node);
            self.buckets[ZERO as usize].num += 1;
        } else {
            self.link_node(node, new);
        }

        for t in &mut self.trackers {
            if t.head == old {
                if t.bias == old_num {
                    t.head = new;
                    t.bias = 1;
                }
            } else if t.head == new {
                // old degree was exactly one above the tracked bucket
                t.bias += 1;
            }
        }

        if self.buckets[old as usize].num == 0 {
            self.release_bucket(old);
        }
    }

    /// Drops `v` from the index regardless of its degree. Only valid on
    /// indexes without trackers (query-local copies).
    pub fn remove(&mut self, v: VertexId) {
        debug_assert!(self.trackers.is_empty(), "remove on a tracked index");
        let node = self.locator.get(v);
        if node == NIL {
            return;
        }
        let bucket = self.nodes[node as usize].bucket;
        self.unlink_node(node);
        self.free_node(v, node);
        self.buckets[ZERO as usize].num += 1;
        if self.buckets[bucket as usize].num == 0 {
            self.release_bucket(bucket);
        }
    }

    /// Vertex with the largest degree, smallest id among ties.
    pub fn top_vertex(&self) -> Option<(VertexId, u32)> {
        if self.top == ZERO {
            return None;
        }
        let b = &self.buckets[self.top as usize];
        let mut node = b.head;
        let mut best = VertexId::MAX;
        while node != NIL {
            let nd = &self.nodes[node as usize];
            best = best.min(nd.vertex);
            node = nd.next;
        }
        Some((best, b.degree))
    }

    /// Vertices with degree ≥ `threshold`, highest degree first. Within a
    /// bucket the order is insertion order.
    pub fn iterate_at_least(&self, threshold: f64) -> AtLeast<'_> {
        AtLeast { idx: self, bucket: self.top, node: NIL, threshold, started: false }
    }

    /// Independent copy holding only vertices of degree strictly above
    /// `threshold`, with no trackers attached.
    pub fn snapshot_above(&self, threshold: f64) -> DegreeIndex {
        let mut count = 0usize;
        let mut b = self.top;
        while b != ZERO && self.buckets[b as usize].degree as f64 > threshold {
            count += self.buckets[b as usize].num as usize;
            b = self.buckets[b as usize].down;
        }
        let locator = if count.saturating_mul(8) >= self.n {
            Locator::Dense(vec![NIL; self.n])
        } else {
            Locator::Sparse(HashMap::with_capacity(count))
        };
        let mut copy = Self::with_locator(self.n, locator);
        copy.nodes.reserve(count);
        let mut last = NIL;
        let mut b = self.top;
        while b != ZERO && self.buckets[b as usize].degree as f64 > threshold {
            let src = &self.buckets[b as usize];
            let nb = copy.alloc_bucket(src.degree, last, ZERO);
            let mut node = src.head;
            while node != NIL {
                let v = self.nodes[node as usize].vertex;
                let id = copy.alloc_node(v);
                copy.link_node(id, nb);
                node = self.nodes[node as usize].next;
            }
            last = nb;
            b = src.down;
        }
        copy.buckets[ZERO as usize].num = (self.n - count) as u32;
        copy.ops = 0;
        copy
    }

    /// `(vertex, degree)` for every vertex of nonzero degree, in index order.
    pub fn entries(&self) -> Vec<(VertexId, u32)> {
        self.iterate_at_least(1.0).collect()
    }

    /// Full structural check against a sort-based recomputation. Test and
    /// assertion-mode use only: O(n log n).
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut seen = 0usize;
        let mut b = self.top;
        let mut prev_degree = u32::MAX;
        let mut degrees = Vec::with_capacity(self.present);
        if self.buckets[self.top as usize].up != NIL {
            return Err("top bucket has an upper neighbour".into());
        }
        while b != ZERO {
            let bucket = &self.buckets[b as usize];
            if bucket.degree >= prev_degree {
                return Err(format!("bucket degrees not strictly decreasing at {}", bucket.degree));
            }
            if bucket.num == 0 {
                return Err(format!("empty bucket at degree {}", bucket.degree));
            }
            prev_degree = bucket.degree;
            let mut len = 0;
            let mut node = bucket.head;
            let mut prev = NIL;
            while node != NIL {
                let nd = &self.nodes[node as usize];
                if nd.bucket != b || nd.prev != prev {
                    return Err(format!("broken node links for vertex {}", nd.vertex));
                }
                if self.locator.get(nd.vertex) != node {
                    return Err(format!("locator mismatch for vertex {}", nd.vertex));
                }
                degrees.push(bucket.degree);
                len += 1;
                prev = node;
                node = nd.next;
            }
            if len != bucket.num || bucket.tail != prev {
                return Err(format!("bucket {} count {} != list length {len}", bucket.degree, bucket.num));
            }
            seen += len as usize;
            let down = bucket.down;
            if self.buckets[down as usize].up != b {
                return Err("bucket up/down links disagree".into());
            }
            b = down;
        }
        if seen != self.present || self.buckets[ZERO as usize].num as usize != self.n - self.present {
            return Err(format!("present count {} but {seen} linked", self.present));
        }
        for t in &self.trackers {
            let truth = degrees.get(t.k as usize - 1).copied().unwrap_or(0);
            let got = self.buckets[t.head as usize].degree;
            if got != truth {
                return Err(format!("tracker k={} reports {got}, sorted degrees give {truth}", t.k));
            }
            let num = self.buckets[t.head as usize].num;
            if t.bias < 1 || t.bias > num {
                return Err(format!("tracker k={} bias {} outside 1..={num}", t.k, t.bias));
            }
            let above = degrees.iter().filter(|&&d| d > got).count() as u32;
            if above != t.k - t.bias {
                return Err(format!("tracker k={} bias {} but {above} vertices above", t.k, t.bias));
            }
        }
        Ok(())
    }
}

pub struct AtLeast<'a> {
    idx: &'a DegreeIndex,
    bucket: u32,
    node: u32,
    threshold: f64,
    started: bool,
}

impl Iterator for AtLeast<'_> {
    type Item = (VertexId, u32);

    fn next(&mut self) -> Option<Self::Item> {
        let idx = self.idx;
        loop {
            if self.bucket == ZERO {
                return None;
            }
            let bucket = &idx.buckets[self.bucket as usize];
            if (bucket.degree as f64) < self.threshold {
                self.bucket = ZERO;
                return None;
            }
            if !self.started {
                self.node = bucket.head;
                self.started = true;
            }
            if self.node != NIL {
                let nd = &idx.nodes[self.node as usize];
                self.node = nd.next;
                return Some((nd.vertex, bucket.degree));
            }
            self.bucket = bucket.down;
            self.started = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn with_degrees(degrees: &[u32]) -> DegreeIndex {
        let mut idx = DegreeIndex::new(degrees.len().max(1));
        for (v, &d) in degrees.iter().enumerate() {
            for _ in 0..d {
                idx.increase(v as VertexId);
            }
        }
        idx
    }

    fn kth_sorted(idx: &DegreeIndex, k: usize) -> u32 {
        let mut d: Vec<u32> = (0..idx.n() as VertexId).map(|v| idx.degree(v)).collect();
        d.sort_unstable_by(|a, b| b.cmp(a));
        d.get(k - 1).copied().unwrap_or(0)
    }

    #[test]
    fn increase_at_tracked_degree_tie() {
        let mut idx = with_degrees(&[5, 3, 3, 2]);
        let t = idx.attach_tracker(2);
        assert_eq!(idx.value(t), 3);
        idx.increase(3);
        assert_eq!(idx.value(t), 3);
        idx.check_invariants().unwrap();
    }

    #[test]
    fn decrease_top() {
        let mut idx = with_degrees(&[5, 3]);
        let t = idx.attach_tracker(1);
        assert_eq!(idx.value(t), 5);
        idx.decrease(0);
        assert_eq!(idx.value(t), 4);
        assert_eq!(idx.max_degree(), 4);
        idx.check_invariants().unwrap();
    }

    #[test]
    fn empty_and_single() {
        let mut idx = DegreeIndex::new(4);
        let t = idx.attach_tracker(1);
        let t3 = idx.attach_tracker(3);
        assert_eq!(idx.value(t), 0);
        assert_eq!(idx.max_degree(), 0);
        for _ in 0..7 {
            idx.increase(2);
        }
        assert_eq!(idx.value(t), 7);
        assert_eq!(idx.value(t3), 0);
        idx.check_invariants().unwrap();
    }

    #[test]
    fn trackers_attached_before_growth() {
        let mut idx = DegreeIndex::new(5);
        let ts: Vec<_> = (1..=5).map(|k| idx.attach_tracker(k)).collect();
        for (v, d) in [(0, 4), (1, 2), (2, 2), (3, 1)] {
            for _ in 0..d {
                idx.increase(v);
                idx.check_invariants().unwrap();
            }
        }
        let got: Vec<u32> = ts.iter().map(|&t| idx.value(t)).collect();
        assert_eq!(got, vec![4, 2, 2, 1, 0]);
    }

    #[test]
    fn iterate_thresholds() {
        let idx = with_degrees(&[5, 3, 3]);
        let all: Vec<_> = idx.iterate_at_least(0.5).collect();
        assert_eq!(all, vec![(0, 5), (1, 3), (2, 3)]);
        let top: Vec<_> = idx.iterate_at_least(idx.max_degree() as f64).collect();
        assert_eq!(top, vec![(0, 5)]);
        assert_eq!(idx.iterate_at_least(5.5).count(), 0);
        assert_eq!(idx.iterate_at_least(3.0).count(), 3);
        assert_eq!(idx.iterate_at_least(3.1).count(), 1);
    }

    #[test]
    fn snapshot_is_independent() {
        let mut idx = with_degrees(&[5, 3, 3, 2]);
        let t = idx.attach_tracker(2);
        let full = idx.snapshot_above(-1.0);
        assert_eq!(full.entries(), idx.entries());
        let above = idx.snapshot_above(3.0);
        assert_eq!(above.entries(), vec![(0, 5)]);
        let mut top = idx.snapshot_above(5.0);
        assert!(top.is_empty());
        top.increase(1);
        assert_eq!(idx.degree(1), 3);
        let before = idx.clone();
        let mut copy = idx.snapshot_above(-1.0);
        copy.decrease(0);
        copy.remove(1);
        copy.check_invariants().unwrap();
        assert_eq!(idx, before);
        assert_eq!(idx.value(t), 3);
    }

    #[test]
    fn sparse_snapshot_mutates() {
        let mut degrees = vec![0u32; 100];
        degrees[7] = 9;
        degrees[8] = 4;
        degrees[9] = 4;
        let idx = with_degrees(&degrees);
        let mut copy = idx.snapshot_above(3.0);
        assert!(matches!(copy.locator, Locator::Sparse(_)));
        copy.decrease(7);
        copy.remove(8);
        for _ in 0..4 {
            copy.decrease(9);
        }
        copy.check_invariants().unwrap();
        assert_eq!(copy.entries(), vec![(7, 8)]);
        assert_eq!(copy.top_vertex(), Some((7, 8)));
    }

    #[test]
    fn top_vertex_breaks_ties_by_id() {
        let mut idx = DegreeIndex::new(6);
        for v in [5, 2, 4] {
            idx.increase(v);
        }
        assert_eq!(idx.top_vertex(), Some((2, 1)));
        assert_eq!(DegreeIndex::new(3).top_vertex(), None);
    }

    #[test]
    fn fuzz_against_sort() {
        let n = 200u32;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut idx = DegreeIndex::new(n as usize);
        let ks = [1usize, 5, 20];
        let ts: Vec<_> = ks.iter().map(|&k| idx.attach_tracker(k)).collect();
        let mut max_ops = 0;
        for step in 0..20_000 {
            let v = rng.gen_range(0..n);
            let before = idx.op_count();
            if idx.degree(v) > 0 && rng.gen_bool(0.45) {
                idx.decrease(v);
            } else {
                idx.increase(v);
            }
            max_ops = max_ops.max(idx.op_count() - before);
            for (&t, &k) in ts.iter().zip(&ks) {
                assert_eq!(idx.value(t), kth_sorted(&idx, k), "step {step}");
            }
            if step % 500 == 0 {
                idx.check_invariants().unwrap();
            }
        }
        assert!(max_ops <= 4, "unit mutation took {max_ops} pointer ops");
    }

    #[test]
    #[should_panic]
    fn decrease_at_zero_panics() {
        DegreeIndex::new(2).decrease(0);
    }
}
