//! Block-size selection for the lacunary sums.

use crate::error::{invalid, Error, Result};
use std::fmt;
use std::sync::Arc;

/// Largest block size the greedy search will consider.
pub const K_LIMIT: f64 = 1e300;

/// A positive, non-increasing function with `γ(t) >= 1/t` for `t >= 1`.
///
/// The contract is checked on a geometric probe grid when the schedule is built.
#[derive(Clone)]
pub struct GammaSchedule {
    label: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for GammaSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GammaSchedule({})", self.label)
    }
}

impl GammaSchedule {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let s = GammaSchedule { label: label.into(), f: Arc::new(f) };
        s.validate()?;
        Ok(s)
    }

    /// `1 / log(2 + t)`.
    pub fn inverse_log() -> Self {
        GammaSchedule { label: "inv-log".into(), f: Arc::new(|t: f64| 1.0 / (2.0 + t).ln()) }
    }

    /// `min(1, t^{-e})` for `0 < e <= 1`.
    pub fn inverse_power(e: f64) -> Result<Self> {
        if !(e > 0.0 && e <= 1.0) {
            return Err(invalid("gamma", format!("power exponent must lie in (0, 1], got {e}")));
        }
        GammaSchedule::new(format!("inv-pow:{e}"), move |t: f64| if t <= 1.0 { 1.0 } else { t.powf(-e) })
    }

    /// Parses `inv-log` or `inv-pow:<e>`.
    pub fn by_name(name: &str) -> Result<Self> {
        if name == "inv-log" {
            return Ok(Self::inverse_log());
        }
        if let Some(e) = name.strip_prefix("inv-pow:") {
            let e: f64 = e.parse().map_err(|_| invalid("gamma", format!("bad exponent in `{name}`")))?;
            return Self::inverse_power(e);
        }
        Err(Error::UnknownName { kind: "gamma schedule", name: name.into(), known: "inv-log, inv-pow:<e>".into() })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    fn validate(&self) -> Result<()> {
        let mut prev = f64::INFINITY;
        for i in 0..=600 {
            let t = if i == 0 { 0.0 } else { 10f64.powf(-3.0 + 0.5 * (i - 1) as f64) };
            if t > K_LIMIT {
                break;
            }
            let g = self.eval(t);
            if !(g.is_finite() && g > 0.0) {
                return Err(invalid("gamma", format!("{} is not positive and finite at t = {t:e}", self.label)));
            }
            if g > prev * (1.0 + 1e-12) {
                return Err(invalid("gamma", format!("{} is not decreasing near t = {t:e}", self.label)));
            }
            if t >= 1.0 && g * t < 1.0 - 1e-12 {
                return Err(invalid("gamma", format!("{} drops below 1/t at t = {t:e}", self.label)));
            }
            prev = g;
        }
        Ok(())
    }
}

/// Lower limits on the block sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthRule {
    pub first: f64,
    /// `k_n >= ratio · k_{n-1}`.
    pub ratio: f64,
}

impl Default for GrowthRule {
    fn default() -> Self {
        GrowthRule { first: 3.0, ratio: 3.0 }
    }
}

impl GrowthRule {
    /// The shift-semigroup rule `k_n >= max(3, (2c₂/c₁)^p) k_{n-1}`.
    pub fn for_shift(c1: f64, c2: f64, p: f64) -> Result<Self> {
        if !(c1 > 0.0 && c2 >= 0.0 && p >= 1.0) {
            return Err(invalid("growth rule", format!("need c1 > 0, c2 >= 0, p >= 1; got {c1}, {c2}, {p}")));
        }
        Ok(GrowthRule { first: 3.0, ratio: (2.0 * c2 / c1).powf(p).max(3.0) })
    }
}

/// `2^n γ(k - √k)^{1/α}`.
pub fn schedule_value(gamma: &GammaSchedule, alpha: f64, n: usize, k: f64) -> f64 {
    2f64.powi(n as i32) * gamma.eval(k - k.sqrt()).powf(1.0 / alpha)
}

/// Window `[k - √k, k + √k]`.
pub fn window(k: f64) -> (f64, f64) {
    (k - k.sqrt(), k + k.sqrt())
}

/// Whether a new block `k` keeps every window clear of the earlier peaks and vice versa.
fn separated(prev: &[f64], k: f64) -> bool {
    prev.iter().all(|&m| k - k.sqrt() - m > 0.5 * m && k - (m + m.sqrt()) > 0.5 * k)
}

/// Smallest integer `k >= lower` with `ok(k)`, for a predicate that is monotone in `k`.
fn smallest_admissible(lower: f64, index: usize, ok: impl Fn(f64) -> bool) -> Result<f64> {
    let mut lo = lower.ceil() - 1.0;
    let mut hi = lower.ceil();
    while !ok(hi) {
        lo = hi;
        hi = (2.0 * hi).ceil();
        if hi > K_LIMIT {
            return Err(Error::NoAdmissibleBlock { index, limit: K_LIMIT });
        }
    }
    loop {
        let mid = (0.5 * (lo + hi)).floor();
        if mid <= lo || mid >= hi {
            return Ok(hi);
        }
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

/// Greedy block sizes: each `k_n` is the smallest integer meeting the growth rule,
/// the window separation and, with a schedule, `v_n <= v_{n-1}/2` for
/// `v_n = 2^n γ(k_n - √k_n)^{1/α}`. The first block has no schedule constraint.
pub fn select_k_sequence(schedule: Option<(&GammaSchedule, f64)>, n: usize, rule: GrowthRule) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(invalid("N", "need at least one block"));
    }
    if !(rule.first >= 3.0 && rule.ratio >= 3.0) {
        return Err(invalid("growth rule", format!("need k_1 >= 3 and ratio >= 3, got {rule:?}")));
    }
    if let Some((_, alpha)) = schedule {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid("alpha", format!("must be positive, got {alpha}")));
        }
    }
    let mut ks: Vec<f64> = Vec::with_capacity(n);
    let mut prev_value = f64::INFINITY;
    for idx in 1..=n {
        let lower = ks.last().map_or(rule.first, |k| rule.ratio * k);
        let k = smallest_admissible(lower, idx, |k| {
            separated(&ks, k) && schedule.is_none_or(|(g, a)| schedule_value(g, a, idx, k) <= 0.5 * prev_value)
        })?;
        if let Some((g, a)) = schedule {
            prev_value = schedule_value(g, a, idx, k);
        }
        ks.push(k);
    }
    Ok(ks)
}

/// Arithmetic check of the sequence invariants; returns the violations found.
pub fn sequence_violations(ks: &[f64], ratio: f64, schedule: Option<(&GammaSchedule, f64)>) -> Vec<String> {
    let mut out = vec![];
    if ks.first().is_some_and(|k| *k < 3.0) {
        out.push(format!("k_1 = {} < 3", ks[0]));
    }
    for (i, w) in ks.windows(2).enumerate() {
        if w[1] < ratio * w[0] {
            out.push(format!("k_{} / k_{} = {} < {ratio}", i + 2, i + 1, w[1] / w[0]));
        }
    }
    for (n, &k) in ks.iter().enumerate() {
        let (lo, hi) = window(k);
        for (m, &km) in ks.iter().enumerate() {
            if m != n && !(1.5 * km < lo || 0.5 * km > hi) {
                out.push(format!("window {} comes within k_{}/2 of k_{}", n + 1, m + 1, m + 1));
            }
        }
    }
    if let Some((g, a)) = schedule {
        let v: Vec<f64> = ks.iter().enumerate().map(|(i, &k)| schedule_value(g, a, i + 1, k)).collect();
        for i in 1..v.len() {
            if !(v[i] < v[i - 1]) {
                out.push(format!("schedule value does not decrease at block {}", i + 1));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_block_is_three() {
        let g = GammaSchedule::inverse_log();
        assert_eq!(select_k_sequence(Some((&g, 2.0)), 1, GrowthRule::default()).unwrap(), vec![3.0]);
        assert_eq!(select_k_sequence(None, 1, GrowthRule::default()).unwrap(), vec![3.0]);
    }

    #[test]
    fn greedy_picks_smallest_admissible() {
        let g = GammaSchedule::inverse_power(0.5).unwrap();
        let ks = select_k_sequence(Some((&g, 2.0)), 4, GrowthRule::default()).unwrap();
        assert!(sequence_violations(&ks, 3.0, Some((&g, 2.0))).is_empty(), "{ks:?}");
        // brute-force oracle on the second block
        let v1 = schedule_value(&g, 2.0, 1, ks[0]);
        let first = (9..).map(|k| k as f64).find(|&k| separated(&ks[..1], k) && schedule_value(&g, 2.0, 2, k) <= 0.5 * v1).unwrap();
        assert_eq!(first, ks[1]);
        for w in ks.windows(2) {
            assert!(w[1] >= 3.0 * w[0]);
        }
    }

    #[test]
    fn halving_under_inverse_log_runs_out_of_doubles() {
        // v_n halving forces log(2 + k_n) to grow sixteenfold per block when α = 2
        let g = GammaSchedule::inverse_log();
        let ks = select_k_sequence(Some((&g, 2.0)), 3, GrowthRule::default()).unwrap();
        assert!(ks[2] > 1e130);
        assert!(matches!(select_k_sequence(Some((&g, 2.0)), 4, GrowthRule::default()), Err(Error::NoAdmissibleBlock { index: 4, .. })));
    }

    #[test]
    fn separation_without_schedule() {
        let ks = select_k_sequence(None, 4, GrowthRule::default()).unwrap();
        assert_eq!(ks[..2], [3.0, 10.0]);
        assert!(sequence_violations(&ks, 3.0, None).is_empty());
    }

    #[test]
    fn increasing_gamma_rejected() {
        assert!(GammaSchedule::new("up", |t: f64| 1.0 + t).is_err());
        assert!(GammaSchedule::new("small", |t: f64| 1.0 / (1.0 + t * t)).is_err());
        assert!(GammaSchedule::by_name("inv-pow:2").is_err());
        assert!(GammaSchedule::by_name("nope").is_err());
    }

    proptest! {
        #[test]
        fn sequences_satisfy_invariants(first in 3u32..200, ratio in 3.0f64..10.0, n in 1usize..5, e in 0.2f64..1.0) {
            let g = GammaSchedule::inverse_power(e).unwrap();
            let rule = GrowthRule { first: first as f64, ratio };
            let ks = select_k_sequence(Some((&g, 2.0)), n, rule).unwrap();
            prop_assert_eq!(ks.len(), n);
            prop_assert!(ks.iter().all(|k| k.fract() == 0.0));
            prop_assert!(sequence_violations(&ks, ratio, Some((&g, 2.0))).is_empty());
        }
    }
}
