//! Rate functions `M`, the logarithmic weight `M_log`, its inverse and the
//! decay weight `R(t) = w(k t)` built from it.

use crate::error::{invalid, require_positive, Error, Result};
use crate::fit::{lower_slack, upper_slack, FitReport, HEADROOM};
use crate::numeric::quad::{integrate_with_breaks, QuadOptions};
use crate::numeric::roots::invert_increasing;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Every rate function is clamped from below at this value.
pub const RATE_FLOOR: f64 = 2.0;

/// Continuous nondecreasing `M: [0, ∞) → [2, ∞)`.
pub trait RateFn: Send + Sync {
    fn eval(&self, s: f64) -> f64;

    /// Derivative where it exists; the one-sided value from the right at kinks.
    fn derivative(&self, s: f64) -> f64 {
        let h = 1e-6 * (1.0 + s.abs());
        (self.eval(s + h) - self.eval(s)) / h
    }

    /// Points where `M` is not differentiable.
    fn kinks(&self) -> Vec<f64> {
        vec![]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum RateFunction {
    Constant { c0: f64 },
    /// `max(2, κ s^α)`
    Power { kappa: f64, alpha: f64 },
    /// `max(2, log(2 + s)^α)`
    Log { alpha: f64 },
    /// `max(2, c1, c2 s)`
    AffineLinear { c1: f64, c2: f64 },
}

impl RateFunction {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RateFunction::Constant { c0 } => {
                require_positive("c0", c0)?;
            }
            RateFunction::Power { kappa, alpha } => {
                require_positive("kappa", kappa)?;
                require_positive("alpha", alpha)?;
            }
            RateFunction::Log { alpha } => {
                require_positive("alpha", alpha)?;
            }
            RateFunction::AffineLinear { c1, c2 } => {
                if !(c1.is_finite() && c2.is_finite() && c2 >= 0.0) {
                    return Err(invalid("c2", format!("affine rate needs finite c1 and c2 >= 0, got ({c1}, {c2})")));
                }
            }
        }
        Ok(())
    }

    fn raw(&self, s: f64) -> f64 {
        match *self {
            RateFunction::Constant { c0 } => c0,
            RateFunction::Power { kappa, alpha } => kappa * s.powf(alpha),
            RateFunction::Log { alpha } => (2.0 + s).ln().powf(alpha),
            RateFunction::AffineLinear { c1, c2 } => c1.max(c2 * s),
        }
    }

    fn raw_derivative(&self, s: f64) -> f64 {
        match *self {
            RateFunction::Constant { .. } => 0.0,
            RateFunction::Power { kappa, alpha } => {
                if s == 0.0 {
                    if alpha < 1.0 {
                        f64::INFINITY
                    } else if alpha == 1.0 {
                        kappa
                    } else {
                        0.0
                    }
                } else {
                    kappa * alpha * s.powf(alpha - 1.0)
                }
            }
            RateFunction::Log { alpha } => alpha * (2.0 + s).ln().powf(alpha - 1.0) / (2.0 + s),
            RateFunction::AffineLinear { c1, c2 } => {
                if c2 * s > c1 {
                    c2
                } else {
                    0.0
                }
            }
        }
    }
}

impl RateFn for RateFunction {
    fn eval(&self, s: f64) -> f64 {
        self.raw(s).max(RATE_FLOOR)
    }

    fn derivative(&self, s: f64) -> f64 {
        if self.raw(s) > RATE_FLOOR {
            self.raw_derivative(s)
        } else {
            0.0
        }
    }

    fn kinks(&self) -> Vec<f64> {
        let mut k = match *self {
            RateFunction::Constant { .. } => vec![],
            RateFunction::Power { kappa, alpha } => vec![(RATE_FLOOR / kappa).powf(1.0 / alpha)],
            RateFunction::Log { alpha } => vec![RATE_FLOOR.powf(1.0 / alpha).exp() - 2.0],
            RateFunction::AffineLinear { c1, c2 } => {
                if c2 > 0.0 {
                    vec![c1 / c2, RATE_FLOOR / c2]
                } else {
                    vec![]
                }
            }
        };
        k.retain(|x| x.is_finite() && *x > 0.0);
        k.sort_by(f64::total_cmp);
        k.dedup();
        k
    }
}

/// `M_log(s) = M(s) [log(1 + M(s)) + log(1 + s)]`.
pub fn m_log_eval<M: RateFn + ?Sized>(m: &M, s: f64) -> Result<f64> {
    if !(s >= 0.0) || s.is_infinite() {
        return Err(Error::Domain { what: "M_log", value: s });
    }
    let ms = m.eval(s);
    Ok(ms * (ms.ln_1p() + s.ln_1p()))
}

/// Smallest `s >= 0` with `M_log(s) >= t`, to within `tol` in the value of `M_log`.
pub fn m_log_inverse<M: RateFn + ?Sized>(m: &M, t: f64, tol: f64) -> Result<f64> {
    if !t.is_finite() || t < m_log_eval(m, 0.0)? - tol {
        return Err(Error::Domain { what: "M_log inverse", value: t });
    }
    require_positive("tol", tol)?;
    invert_increasing(|s| m_log_eval(m, s).unwrap_or(f64::INFINITY), t, 0.0, tol, 1e300, "M_log inverse")
}

/// `w(t) = 1` for `t <= M_log(1)`, else `M_log^{-1}(t)`.
pub fn log_weight<M: RateFn + ?Sized>(m: &M, t: f64) -> Result<f64> {
    if t <= m_log_eval(m, 1.0)? {
        return Ok(1.0);
    }
    m_log_inverse(m, t, 1e-12 * t.abs().max(1.0))
}

/// `R(t) = w(k t)`.
pub fn weight_r<M: RateFn + ?Sized>(m: &M, k: f64, t: f64) -> Result<f64> {
    require_positive("k", k)?;
    if !(t >= 0.0) {
        return Err(Error::Domain { what: "weight R", value: t });
    }
    log_weight(m, k * t)
}

/// A rate function together with the dilation `k` of its weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightProfile {
    pub base: RateFunction,
    pub k: f64,
}

impl WeightProfile {
    pub fn new(base: RateFunction, k: f64) -> Result<Self> {
        base.validate()?;
        require_positive("k", k)?;
        Ok(WeightProfile { base, k })
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        weight_r(&self.base, self.k, t)
    }
}

/// Membership in `Ω_M = { Re λ > -1 / M(|Im λ|) }`.
pub fn omega_m_contains<M: RateFn + ?Sized>(m: &M, z: Complex64) -> bool {
    z.re > -1.0 / m.eval(z.im.abs())
}

/// Fits `c t / log t <= M(R(t)) <= C t / log t` over `t_grid`, with `R(t) = w(t)`.
///
/// The lower estimate is only attempted for the power family.
pub fn check_growth_bounds(m: &RateFunction, t_grid: &[f64]) -> Result<FitReport> {
    m.validate()?;
    let mut ratios = Vec::with_capacity(t_grid.len());
    if t_grid.is_empty() {
        return Err(invalid("t_grid", "empty grid"));
    }
    for &t in t_grid {
        if !(t >= 2.0) {
            return Err(Error::Domain { what: "growth grid (needs t >= 2)", value: t });
        }
        let r = log_weight(m, t)?;
        let scale = t / t.ln();
        ratios.push((m.eval(r), scale));
    }
    let upper = ratios.iter().map(|(v, s)| v / s).fold(0.0, f64::max) * (1.0 + HEADROOM);
    let mut residuals: Vec<f64> = ratios.iter().map(|(v, s)| upper_slack(upper * s, *v)).collect();
    let mut constants = vec![("C".to_string(), upper)];
    let lower_applies = matches!(m, RateFunction::Power { .. });
    if lower_applies {
        let lower = ratios.iter().map(|(v, s)| v / s).fold(f64::INFINITY, f64::min) * (1.0 - HEADROOM);
        residuals.extend(ratios.iter().map(|(v, s)| lower_slack(lower * s, *v)));
        constants.push(("c".to_string(), lower));
    }
    let (lo, hi) = (t_grid.first().copied().unwrap_or(0.0), t_grid.last().copied().unwrap_or(0.0));
    let mut rep = FitReport::new("growth", format!("{} points on [{lo:e}, {hi:e}]", t_grid.len()), constants, residuals);
    if !lower_applies {
        rep = rep.with_note("lower growth estimate is only asserted for the power family");
    } else if rep.constant("c").is_some_and(|c| c <= 0.0) {
        rep = rep.fail("lower constant is not positive");
    }
    Ok(rep)
}

#[derive(Debug, Clone, Serialize)]
pub struct TailReport {
    /// Endpoints `2^j` of the dyadic ladder.
    pub ladder: Vec<f64>,
    /// Integral over `[2^{j-1}, 2^j]`.
    pub increments: Vec<f64>,
    pub partial_sum: f64,
    /// Ratio bound used for the geometric tail estimate.
    pub tail_ratio: f64,
    pub tail_bound: f64,
    pub pass: bool,
}

/// Integrates `R(t)^{-α} M(R(t))^{-β}` from 2 over a dyadic ladder up to `t_max`.
///
/// Passes when each of the last five increments is smaller than the one
/// before, and the tail past `t_max` is then bounded by a geometric series.
pub fn weighted_tail_convergence(m: &RateFunction, alpha: f64, beta: f64, t_max: f64) -> Result<TailReport> {
    m.validate()?;
    require_positive("alpha", alpha)?;
    if !(beta > 1.0) {
        return Err(invalid("beta", format!("tail convergence needs beta > 1, got {beta}")));
    }
    if !(t_max >= 128.0) {
        return Err(invalid("t_max", "needs at least six dyadic steps (t_max >= 128)"));
    }
    let integrand = |t: f64| -> f64 {
        match log_weight(m, t) {
            Ok(r) => r.powf(-alpha) * m.eval(r).powf(-beta),
            Err(_) => f64::NAN,
        }
    };
    let knee = m_log_eval(m, 1.0)?;
    let mut ladder = vec![];
    let mut increments = vec![];
    let mut a = 2.0;
    while 2.0 * a <= t_max * (1.0 + 1e-12) {
        let b = 2.0 * a;
        let r = integrate_with_breaks(integrand, a, b, &[knee], QuadOptions::tol(1e-300, 1e-10));
        if !r.converged || !r.value.is_finite() {
            return Err(Error::Tolerance { what: "weighted tail increment", tol: 1e-10, estimate: r.error });
        }
        ladder.push(b);
        increments.push(r.value);
        a = b;
    }
    let partial_sum: f64 = increments.iter().sum();
    let n = increments.len();
    let last = &increments[n.saturating_sub(6)..];
    let tail_ratio = last.windows(2).map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 }).fold(0.0, f64::max);
    let pass = tail_ratio < 1.0;
    let tail_bound = if pass { increments[n - 1] * tail_ratio / (1.0 - tail_ratio) } else { f64::INFINITY };
    Ok(TailReport { ladder, increments, partial_sum, tail_ratio, tail_bound, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_rate_closed_form() {
        // M ≡ 2: M_log(s) = 2 (ln 3 + ln(1+s)), inverse e^{t/2}/3 - 1.
        let m = RateFunction::Constant { c0: 1.0 };
        let s = 4.5;
        let expected = 2.0 * (3f64.ln() + 5.5f64.ln());
        assert!((m_log_eval(&m, s).unwrap() - expected).abs() < 1e-14);
        let t = 30.0;
        let inv = m_log_inverse(&m, t, 1e-13).unwrap();
        assert!((inv - ((t / 2.0).exp() / 3.0 - 1.0)).abs() < 1e-9 * inv);
    }

    #[test]
    fn inverse_of_power_rate_meets_tolerance() {
        let m = RateFunction::Power { kappa: 1.0, alpha: 2.0 };
        for t in [10.0, 1e3, 1e6] {
            let s = m_log_inverse(&m, t, 1e-10).unwrap();
            assert!((m_log_eval(&m, s).unwrap() - t).abs() <= 1e-10 * t.max(1.0));
        }
    }

    #[test]
    fn domain_errors() {
        let m = RateFunction::Log { alpha: 1.0 };
        assert!(matches!(m_log_eval(&m, -1.0), Err(Error::Domain { .. })));
        assert!(RateFunction::Power { kappa: -1.0, alpha: 1.0 }.validate().is_err());
    }

    #[test]
    fn weight_is_one_below_knee() {
        let m = RateFunction::Power { kappa: 1.0, alpha: 1.0 };
        let knee = m_log_eval(&m, 1.0).unwrap();
        assert_eq!(weight_r(&m, 1.0, 0.5 * knee).unwrap(), 1.0);
        assert!(weight_r(&m, 1.0, 2.0 * knee).unwrap() > 1.0);
    }

    #[test]
    fn kinks_are_where_the_floor_stops_binding() {
        let m = RateFunction::Power { kappa: 0.5, alpha: 2.0 };
        let k = m.kinks();
        assert_eq!(k.len(), 1);
        assert!((m.raw(k[0]) - 2.0).abs() < 1e-12);
        let l = RateFunction::Log { alpha: 1.0 };
        assert!(((2.0 + l.kinks()[0]).ln() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn growth_bounds_for_quadratic_rate() {
        let m = RateFunction::Power { kappa: 1.0, alpha: 2.0 };
        let grid: Vec<f64> = (0..=50).map(|i| 10f64 * 1e5f64.powf(i as f64 / 50.0)).collect();
        let rep = check_growth_bounds(&m, &grid).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.worst_residual >= 0.0);
        assert!(rep.constant("c").unwrap() > 0.0);
    }

    #[test]
    fn tail_converges_for_beta_above_one() {
        let m = RateFunction::Power { kappa: 1.0, alpha: 1.0 };
        let rep = weighted_tail_convergence(&m, 1.0, 2.0, 4096.0).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.tail_bound.is_finite());
        let c = RateFunction::Constant { c0: 2.0 };
        let rep = weighted_tail_convergence(&c, 1.0, 2.0, 512.0).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn tail_rejects_beta_one() {
        let m = RateFunction::Power { kappa: 1.0, alpha: 1.0 };
        assert!(weighted_tail_convergence(&m, 1.0, 1.0, 1024.0).is_err());
    }

    #[test]
    fn m_log_examples() {
        let two = RateFunction::Constant { c0: 2.0 };
        assert!((m_log_eval(&two, 0.0).unwrap() - 2.0 * 3f64.ln()).abs() < 1e-15);
        assert!((m_log_eval(&two, 2.0).unwrap() - 4.0 * 3f64.ln()).abs() < 1e-14);
        let lin = RateFunction::Power { kappa: 1.0, alpha: 1.0 };
        assert!((m_log_eval(&lin, 10.0).unwrap() - 20.0 * 11f64.ln()).abs() < 1e-13);
        let at_zero = m_log_eval(&two, 0.0).unwrap();
        assert_eq!(m_log_inverse(&two, at_zero, 1e-12).unwrap(), 0.0);
        assert!(m_log_inverse(&two, 1.0, 1e-12).is_err());
    }

    #[test]
    fn inverse_against_tight_bisection() {
        // independent plain bisection at 1e-14 relative width
        let m = RateFunction::Power { kappa: 1.0, alpha: 2.0 };
        let t = 1e4;
        let f = |s: f64| s.max(2f64.sqrt()).powi(2).max(2.0) * ((s * s).max(2.0).ln_1p() + s.ln_1p());
        let (mut lo, mut hi) = (0.0f64, 1e4f64);
        while hi - lo > 1e-14 * hi {
            let mid = 0.5 * (lo + hi);
            if f(mid) < t { lo = mid } else { hi = mid }
        }
        let s = m_log_inverse(&m, t, 1e-10).unwrap();
        assert!((m_log_eval(&m, s).unwrap() - t).abs() <= 1e-10);
        assert!((s - hi).abs() <= 1e-10 * hi);
    }

    proptest! {
        #[test]
        fn m_log_is_increasing(s in 0.0f64..1e4, ds in 1e-6f64..10.0, kappa in 0.1f64..5.0, alpha in 0.2f64..3.0) {
            let m = RateFunction::Power { kappa, alpha };
            prop_assert!(m_log_eval(&m, s + ds).unwrap() > m_log_eval(&m, s).unwrap());
        }

        #[test]
        fn inverse_roundtrip(t in 8.0f64..5e3, alpha in 0.5f64..2.5) {
            // smaller alpha or larger t push the preimage past the f64 range
            let m = RateFunction::Log { alpha };
            let s = m_log_inverse(&m, t, 1e-10 * t).unwrap();
            prop_assert!((m_log_eval(&m, s).unwrap() - t).abs() <= 1e-10 * t);
        }

        #[test]
        fn omega_contains_right_half_plane(x in 0.0f64..5.0, y in -100.0f64..100.0) {
            let m = RateFunction::AffineLinear { c1: 3.0, c2: 0.5 };
            prop_assert!(omega_m_contains(&m, Complex64::new(x, y)));
            prop_assert!(!omega_m_contains(&m, Complex64::new(-1.0, y)));
        }
    }
}
