//! Sample-size targets and the stopping-rule estimator.
//!
//! Every tracker in the crate sizes its RR-set pools from the constants
//! `Υ(ε, δ) = 4(e−2)·ln(2/δ)/ε²` and `Υ₁(ε, δ) = 1 + (1+ε)·Υ(ε, δ)`.
//! Values are kept in `f64`; ceilings go through [`ceil_guarded`] so that
//! sub-ulp drift never bumps an integer target.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const CEIL_GUARD: f64 = 1e-9;

/// Relative error `eps` and failure probability `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsDelta {
    pub eps: f64,
    pub delta: f64,
}

impl EpsDelta {
    pub fn new(eps: f64, delta: f64) -> Result<Self> {
        let e = EpsDelta { eps, delta };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::domain(format!("eps must be > 0, got {}", self.eps)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::domain(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        Ok(())
    }

    /// The tighter preconditions the trackers' error analysis needs.
    pub fn validate_tracker(&self) -> Result<()> {
        self.validate()?;
        if self.eps > 1.0 / 3.0 + f64::EPSILON {
            return Err(Error::domain(format!("tracker needs eps <= 1/3, got {}", self.eps)));
        }
        if self.delta > 0.25 {
            return Err(Error::domain(format!(
                "tracker needs delta <= 1/4, got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

/// Pool sizing: the degree target for the signal pool and the size ratio of
/// the estimation pool to it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeTargets {
    pub d1_target: u64,
    pub m2_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizingMode {
    Practical,
    Theoretical,
}

impl std::str::FromStr for SizingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "practical" => Ok(SizingMode::Practical),
            "theoretical" => Ok(SizingMode::Theoretical),
            other => Err(Error::domain(format!("unknown sizing mode {other:?}"))),
        }
    }
}

/// Ceiling with a relative guard: values within `1e-9` (relative) above an
/// integer round down to it.
pub fn ceil_guarded(x: f64) -> f64 {
    let floor = x.floor();
    if x - floor <= CEIL_GUARD * x.abs().max(1.0) {
        floor
    } else {
        x.ceil()
    }
}

pub fn upsilon(e: EpsDelta) -> Result<f64> {
    e.validate()?;
    Ok(4.0 * (E - 2.0) * (2.0 / e.delta).ln() / (e.eps * e.eps))
}

pub fn upsilon1(e: EpsDelta) -> Result<f64> {
    Ok(1.0 + (1.0 + e.eps) * upsilon(e)?)
}

/// `⌈Υ₁(ε, δ/n)⌉`, the degree the k-th ranked vertex must reach in the
/// signal pool.
pub fn topk_degree_target(eps: f64, delta: f64, n: usize) -> Result<u64> {
    if n < 1 {
        return Err(Error::domain("vertex count must be >= 1"));
    }
    let u1 = upsilon1(EpsDelta::new(eps, delta / n as f64)?)?;
    Ok(ceil_guarded(u1) as u64)
}

/// `ln C(n, k)` as a sum of logarithms.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    assert!(k <= n, "ln_binomial needs k <= n");
    let k = k.min(n - k);
    (1..=k)
        .map(|i| ((n - i + 1) as f64).ln() - (i as f64).ln())
        .sum()
}

pub fn im_targets(eps: f64, delta: f64, n: usize, k_max: usize, mode: SizingMode) -> Result<SizeTargets> {
    if n < 1 {
        return Err(Error::domain("vertex count must be >= 1"));
    }
    if k_max < 1 || 2 * k_max > n {
        return Err(Error::domain(format!(
            "k_max must satisfy 1 <= k_max <= n/2 (k_max={k_max}, n={n})"
        )));
    }
    let nf = n as f64;
    match mode {
        SizingMode::Theoretical => {
            let cfg = EpsDelta::new(eps, delta)?;
            let d1 = upsilon1(EpsDelta::new(eps, 2.0 * delta / (3.0 * nf))?)?;
            let ln_n_choose = ln_binomial(n as u64, k_max as u64);
            let ratio = ((3.0 / (2.0 * cfg.delta)).ln() + ln_n_choose) / (2.0 * nf / cfg.delta).ln();
            Ok(SizeTargets {
                d1_target: ceil_guarded(d1) as u64,
                m2_ratio: ratio.max(1.0),
            })
        }
        SizingMode::Practical => {
            let scaled = eps / (2.0 - 1.0 / E);
            let inner = ceil_guarded(upsilon1(EpsDelta::new(scaled, 2.0 / (3.0 * nf * nf))?)?);
            Ok(SizeTargets {
                d1_target: (inner / 2.0).ceil() as u64,
                m2_ratio: 1.0,
            })
        }
    }
}

/// The approximation constant `1 − 1/e − (2 − 1/e)·ε` carried by IM queries.
pub fn im_approx_ratio(eps: f64) -> f64 {
    1.0 - 1.0 / E - (2.0 - 1.0 / E) * eps
}

/// The `ε` that makes [`im_approx_ratio`] exactly one half.
pub fn half_ratio_eps() -> f64 {
    (0.5 - 1.0 / E) / (2.0 - 1.0 / E)
}

/// Worst-case relative error of any vertex a top-k query returns.
pub fn topk_error_bound(eps: f64, delta: f64, n: usize) -> Result<f64> {
    EpsDelta::new(eps, delta)?.validate_tracker()?;
    if n < 1 {
        return Err(Error::domain("vertex count must be >= 1"));
    }
    let b = 4.0 * (E - 2.0) * (2.0 * n as f64 / delta).ln();
    let kept = (1.0 - eps * eps / b) * (1.0 - eps).powi(2) / (1.0 + eps) - eps;
    let bound = 1.0 - kept;
    debug_assert!(bound <= 61.0 / 15.0 * eps + 1e-12);
    Ok(bound)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingEstimate {
    pub mean: f64,
    pub draws: u64,
}

/// Draws from `sampler` until `⌈Υ₁(ε, δ)⌉` positives are seen and returns
/// `⌈Υ₁⌉ / draws`. `max_draws` caps the run; hitting it (or the sampler
/// returning `None`) is reported as [`Error::SamplerExhausted`].
pub fn stopping_rule_estimate<F>(mut sampler: F, e: EpsDelta, max_draws: u64) -> Result<StoppingEstimate>
where
    F: FnMut() -> Option<bool>,
{
    let needed = ceil_guarded(upsilon1(e)?) as u64;
    let mut positives = 0u64;
    let mut draws = 0u64;
    while positives < needed {
        if draws >= max_draws {
            return Err(Error::SamplerExhausted { draws, positives });
        }
        match sampler() {
            Some(hit) => {
                draws += 1;
                positives += hit as u64;
            }
            None => return Err(Error::SamplerExhausted { draws, positives }),
        }
    }
    Ok(StoppingEstimate {
        mean: needed as f64 / draws as f64,
        draws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ed(eps: f64, delta: f64) -> EpsDelta {
        EpsDelta::new(eps, delta).unwrap()
    }

    #[test]
    fn upsilon_anchor_at_unit_log() {
        let u = upsilon(ed(1.0, 2.0 / E)).unwrap();
        assert!((u - 4.0 * (E - 2.0)).abs() < 1e-12);
        assert!((u - 2.873127313836181).abs() < 1e-12);
        let u1 = upsilon1(ed(1.0, 2.0 / E)).unwrap();
        assert!((u1 - 6.746254627672362).abs() < 1e-12);
    }

    #[test]
    fn upsilon_matches_high_precision() {
        // reference values from a 40-digit evaluation
        let e = ed(0.1, 0.001 / 7115.0);
        assert!((upsilon(e).unwrap() - 4732.288628174965).abs() < 1e-8);
        assert!((upsilon1(e).unwrap() - 5206.517490992461).abs() < 1e-8);
        assert_eq!(ceil_guarded(upsilon1(e).unwrap()), 5207.0);
    }

    #[test]
    fn upsilon_rejects_bad_domain() {
        assert!(upsilon(EpsDelta { eps: 0.0, delta: 0.1 }).is_err());
        assert!(upsilon(EpsDelta { eps: 0.1, delta: 1.0 }).is_err());
        assert!(upsilon(EpsDelta { eps: 0.1, delta: 0.0 }).is_err());
        assert!(EpsDelta::new(-1.0, 0.5).is_err());
    }

    #[test]
    fn upsilon_strictly_decreasing() {
        let eps = [0.01, 0.05, 0.1, 0.2, 0.33, 0.5, 1.0];
        let deltas = [1e-6, 1e-3, 0.01, 0.1, 0.25, 0.5, 0.9];
        for &d in &deltas {
            for w in eps.windows(2) {
                assert!(upsilon(ed(w[1], d)).unwrap() < upsilon(ed(w[0], d)).unwrap());
                assert!(upsilon1(ed(w[1], d)).unwrap() < upsilon1(ed(w[0], d)).unwrap());
            }
        }
        for &e in &eps {
            for w in deltas.windows(2) {
                assert!(upsilon(ed(e, w[1])).unwrap() < upsilon(ed(e, w[0])).unwrap());
                assert!(upsilon1(ed(e, w[1])).unwrap() < upsilon1(ed(e, w[0])).unwrap());
            }
        }
    }

    #[test]
    fn ceil_guard_absorbs_drift() {
        assert_eq!(ceil_guarded(7.0 + 1e-12), 7.0);
        assert_eq!(ceil_guarded(7.000001), 8.0);
        assert_eq!(ceil_guarded(6.746), 7.0);
    }

    #[test]
    fn topk_target_examples() {
        assert_eq!(topk_degree_target(0.1, 0.001, 7115).unwrap(), 5207);
        // δ/n = 2/e with ε = 1
        assert_eq!(topk_degree_target(1.0, 2.0 / E * 3.0, 3).unwrap(), 7);
        assert!(topk_degree_target(0.2, 0.001, 7115).unwrap() <= topk_degree_target(0.1, 0.001, 7115).unwrap());
        assert_eq!(topk_degree_target(1.0 / 3.0, 0.25, 3).unwrap(), 111);
        assert!(topk_degree_target(0.1, 0.1, 0).is_err());
    }

    #[test]
    fn practical_im_target() {
        let t = im_targets(half_ratio_eps(), 0.001, 7115, 50, SizingMode::Practical).unwrap();
        assert_eq!(t.d1_target, 11548);
        assert_eq!(t.m2_ratio, 1.0);
        assert!((half_ratio_eps() - 0.08095024482957694).abs() < 1e-15);
    }

    #[test]
    fn theoretical_ratio_single_seed() {
        let (n, d) = (7115usize, 0.001);
        let t = im_targets(0.1, d, n, 1, SizingMode::Theoretical).unwrap();
        let nf = n as f64;
        let expect = (3.0 * nf / (2.0 * d)).ln() / (2.0 * nf / d).ln();
        // the ratio is clamped at 1 because M₂ never undercuts M₁
        assert!(expect < 1.0);
        assert_eq!(t.m2_ratio, 1.0);
        let t = im_targets(0.1, 0.2, 1000, 1, SizingMode::Theoretical).unwrap();
        let expect = (3.0 * 1000.0 / 0.4f64).ln() / (2000.0f64 / 0.2).ln();
        assert!((t.m2_ratio - expect.max(1.0)).abs() < 1e-12);
        assert_eq!(
            t.d1_target,
            ceil_guarded(upsilon1(ed(0.1, 0.4 / 3000.0)).unwrap()) as u64
        );
    }

    #[test]
    fn theoretical_ratio_grows_with_kmax() {
        let r = |k| im_targets(0.1, 0.001, 1_000_000, k, SizingMode::Theoretical).unwrap().m2_ratio;
        // 40-digit reference: 25.66301629801648 and 47.86608988283006
        assert!((r(50) - 25.66301629801648).abs() < 1e-9);
        assert!((r(100) - 47.86608988283006).abs() < 1e-9);
        let q = r(100) / r(50);
        assert!(q > 1.0 && q <= 2.0);
    }

    #[test]
    fn log_binomial_no_overflow() {
        assert!((ln_binomial(10, 3) - 120f64.ln()).abs() < 1e-12);
        assert_eq!(ln_binomial(5, 0), 0.0);
        let big = ln_binomial(10_000_000, 500);
        assert!(big.is_finite() && big > 0.0);
        assert!(im_targets(0.1, 0.1, 10, 6, SizingMode::Theoretical).is_err());
    }

    #[test]
    fn error_bound_examples() {
        let b = topk_error_bound(0.1, 0.001, 7115).unwrap();
        assert!((b - 0.3637919677624475).abs() < 1e-12);
        assert!(b <= 61.0 / 15.0 * 0.1);
        let tiny = topk_error_bound(1e-6, 0.001, 7115).unwrap();
        assert!(tiny < 1e-5);
        assert!(topk_error_bound(0.4, 0.1, 10).is_err());
        assert!(topk_error_bound(0.1, 0.3, 10).is_err());
    }

    #[test]
    fn error_bound_under_loose_bound_on_grid() {
        for i in 1..=33 {
            let eps = i as f64 / 100.0;
            for &d in &[1e-6, 1e-3, 0.1, 0.25] {
                for &n in &[1usize, 10, 1000, 1_000_000] {
                    assert!(topk_error_bound(eps, d, n).unwrap() <= 61.0 / 15.0 * eps);
                }
            }
        }
    }

    #[test]
    fn stopping_rule_constant_sampler() {
        let est = stopping_rule_estimate(|| Some(true), ed(1.0, 2.0 / E), 1000).unwrap();
        assert_eq!(est.draws, 7);
        assert_eq!(est.mean, 1.0);
    }

    #[test]
    fn stopping_rule_reports_exhaustion() {
        let err = stopping_rule_estimate(|| Some(false), ed(0.5, 0.1), 50).unwrap_err();
        assert!(matches!(err, Error::SamplerExhausted { draws: 50, positives: 0 }));
        let mut left = 3;
        let err = stopping_rule_estimate(
            || {
                left -= 1;
                (left >= 0).then_some(true)
            },
            ed(0.5, 0.1),
            1000,
        )
        .unwrap_err();
        assert!(matches!(err, Error::SamplerExhausted { draws: 3, positives: 3 }));
    }

    #[test]
    fn stopping_rule_fair_coin() {
        let e = ed(0.1, 0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let runs = 1000;
        let mut inside = 0;
        let mut draws = 0u64;
        for _ in 0..runs {
            let est = stopping_rule_estimate(|| Some(rng.gen_bool(0.5)), e, u64::MAX).unwrap();
            if (0.45..=0.55).contains(&est.mean) {
                inside += 1;
            }
            draws += est.draws;
        }
        assert!(inside as f64 >= 0.95 * runs as f64, "inside={inside}");
        let mean_draws = draws as f64 / runs as f64;
        let expect = upsilon1(e).unwrap() / 0.5;
        assert!((mean_draws - expect).abs() <= 0.1 * expect);
    }
}
