//! Quality metrics for tracker output.

use std::collections::HashSet;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};
use crate::sketch::RRCollection;

/// `|a ∩ b| / |a ∪ b|`, 1 when both are empty.
pub fn jaccard(a: &[VertexId], b: &[VertexId]) -> f64 {
    let a: HashSet<_> = a.iter().collect();
    let b: HashSet<_> = b.iter().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

/// Share of `truth` present in `found`.
pub fn recall(found: &[VertexId], truth: &[VertexId]) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::domain("recall needs a nonempty truth set"));
    }
    let found: HashSet<_> = found.iter().collect();
    let truth: HashSet<_> = truth.iter().collect();
    Ok(truth.iter().filter(|v| found.contains(*v)).count() as f64 / truth.len() as f64)
}

/// Largest `(I^k − I_u)/I^k` over returned vertices outside `truth`; 0 when
/// there are no false positives (or none below `I^k`).
pub fn max_error_rate(found: &[VertexId], truth: &[VertexId], influence: &[f64], kth: f64) -> Result<f64> {
    if !(kth > 0.0) {
        return Err(Error::domain("I^k must be positive"));
    }
    let truth: HashSet<_> = truth.iter().collect();
    Ok(found
        .iter()
        .filter(|u| !truth.contains(u))
        .map(|&u| ((kth - influence[u as usize]) / kth).max(0.0))
        .fold(0.0, f64::max))
}

/// The `k` most influential vertices of an influence table (ties by id)
/// together with `I^k`.
pub fn true_top_k(influence: &[f64], k: usize) -> (Vec<VertexId>, f64) {
    let mut order: Vec<VertexId> = (0..influence.len() as VertexId).collect();
    order.sort_by(|&a, &b| {
        influence[b as usize]
            .total_cmp(&influence[a as usize])
            .then(a.cmp(&b))
    });
    order.truncate(k);
    let kth = order.last().map_or(0.0, |&v| influence[v as usize]);
    (order, kth)
}

/// How the independent evaluation pool is sized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalPool {
    /// Exactly this many RR sets.
    Sets(usize),
    /// Sample until the pool's traversal cost reaches this value.
    Cost(u64),
}

/// Influence of `seeds` estimated on a freshly sampled pool, independent of
/// whatever pool produced them.
pub fn evaluate_seeds<R: Rng + ?Sized>(g: &Graph, seeds: &[VertexId], pool: EvalPool, rng: &mut R) -> Result<f64> {
    let mut c = RRCollection::new(g.n());
    match pool {
        EvalPool::Sets(m) => {
            for _ in 0..m {
                c.append(g, rng);
            }
        }
        EvalPool::Cost(budget) => {
            while c.total_cost() < budget {
                c.append(g, rng);
            }
        }
    }
    c.estimate_influence(seeds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::g3_lt;
    use crate::seeded_rng;

    #[test]
    fn jaccard_examples() {
        assert_eq!(jaccard(&[1, 2, 3], &[2, 3, 4]), 0.5);
        assert_eq!(jaccard(&[], &[]), 1.0);
        assert_eq!(jaccard(&[1], &[]), 0.0);
    }

    #[test]
    fn recall_examples() {
        assert_eq!(recall(&[1, 2, 3, 4], &[2, 3]).unwrap(), 1.0);
        assert_eq!(recall(&[1], &[1, 2]).unwrap(), 0.5);
        assert!(recall(&[1], &[]).is_err());
    }

    #[test]
    fn error_rate_examples() {
        let infl = [10.0, 8.0, 6.0, 3.0];
        assert_eq!(max_error_rate(&[0, 1], &[0, 1], &infl, 8.0).unwrap(), 0.0);
        assert_eq!(max_error_rate(&[0, 1, 2, 3], &[0, 1], &infl, 8.0).unwrap(), 5.0 / 8.0);
        assert!(max_error_rate(&[0], &[0], &infl, 0.0).is_err());
    }

    #[test]
    fn top_k_from_table() {
        let (top, kth) = true_top_k(&[1.0, 5.0, 5.0, 2.0], 2);
        assert_eq!(top, vec![1, 2]);
        assert_eq!(kth, 5.0);
    }

    #[test]
    fn evaluation_pool_estimates() {
        let g = g3_lt();
        let mut rng = seeded_rng(3);
        let est = evaluate_seeds(&g, &[1, 2], EvalPool::Sets(50_000), &mut rng).unwrap();
        assert!((est - 8.0 / 3.0).abs() < 0.05);
        let est = evaluate_seeds(&g, &[0, 1, 2], EvalPool::Cost(100), &mut rng).unwrap();
        assert_eq!(est, 3.0);
    }
}
