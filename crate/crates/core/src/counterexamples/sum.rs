//! The truncated sums `f = Σ c_n Lμ_n` and `g = -Σ c_n Nμ_n`.

use super::schedule::{select_k_sequence, sequence_violations, GammaSchedule, GrowthRule};
use crate::atoms::series::{self, GREEN_SERIES_MAX_K};
use crate::atoms::{AtomFamily, TimePoint};
use crate::error::{invalid, require_positive, Result};
use crate::numeric::quad::{integrate_with_breaks, QuadOptions};
use crate::numeric::{LogComplex, LogSum};
use num_complex::Complex64;

/// Block contributions below this fraction of the largest one are skipped.
pub const BLOCK_REL_CUTOFF: f64 = 1e-30;

#[derive(Debug, Clone)]
pub enum Construction {
    /// Power-law blocks; the divergent weight is `(t/(γ(t) log(t+2)))^{p/α}`.
    Power { alpha: f64, p: f64, beta: f64, gamma: GammaSchedule },
    /// Log-law blocks; the divergent weight is `e^{γ t^{1/(α+1)}}` with
    /// `weight_exponent = γ`, fitted when absent.
    Log { alpha: f64, p: f64, weight_exponent: Option<f64> },
}

/// Which theorem the coefficients are tuned for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// `c_n = 2^{-n} k_n^{-1/(2p)}`.
    Divergence,
    /// `c_n = 2^{-n} k_n^{-(1/p + 1/4)}`.
    Shift,
}

impl Construction {
    /// Power-law construction with `β` at the midpoint of the admissible range for `target`.
    pub fn power(alpha: f64, p: f64, gamma: GammaSchedule, target: Target) -> Result<Self> {
        require_positive("alpha", alpha)?;
        if !(p >= 1.0 && p.is_finite()) {
            return Err(invalid("p", format!("need 1 <= p < inf, got {p}")));
        }
        let width = match target {
            Target::Divergence => alpha / (2.0 * p),
            Target::Shift => alpha / p,
        };
        Ok(Construction::Power { alpha, p, beta: alpha / 2.0 + width / 2.0, gamma })
    }

    pub fn log(alpha: f64, p: f64, weight_exponent: Option<f64>) -> Result<Self> {
        require_positive("alpha", alpha)?;
        if !(p >= 1.0 && p.is_finite()) {
            return Err(invalid("p", format!("need 1 <= p < inf, got {p}")));
        }
        if let Some(g) = weight_exponent {
            require_positive("weight exponent", g)?;
        }
        Ok(Construction::Log { alpha, p, weight_exponent })
    }

    pub fn alpha(&self) -> f64 {
        match self {
            Construction::Power { alpha, .. } | Construction::Log { alpha, .. } => *alpha,
        }
    }

    pub fn p(&self) -> f64 {
        match self {
            Construction::Power { p, .. } | Construction::Log { p, .. } => *p,
        }
    }

    fn family(&self, k: f64) -> Result<AtomFamily> {
        match self {
            Construction::Power { alpha, beta, .. } => AtomFamily::power_law(*alpha, *beta, k, None),
            Construction::Log { alpha, .. } => AtomFamily::log_law(*alpha, k),
        }
    }

    fn schedule(&self) -> Option<(&GammaSchedule, f64)> {
        match self {
            Construction::Power { alpha, gamma, .. } => Some((gamma, *alpha)),
            Construction::Log { .. } => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CounterexampleSpec {
    pub construction: Construction,
    pub target: Target,
    pub k_seq: Vec<f64>,
    pub blocks: Vec<AtomFamily>,
    pub coefficients: Vec<f64>,
    /// Sequence invariants that fail; empty for greedy sequences.
    pub violations: Vec<String>,
}

impl CounterexampleSpec {
    /// Greedy block sizes for `n` blocks.
    pub fn build(construction: Construction, target: Target, n: usize, rule: GrowthRule) -> Result<Self> {
        let ks = select_k_sequence(construction.schedule(), n, rule)?;
        Self::with_blocks(construction, target, ks, rule.ratio)
    }

    /// Explicit block sizes; invariant violations are recorded, not rejected.
    pub fn with_blocks(construction: Construction, target: Target, k_seq: Vec<f64>, ratio: f64) -> Result<Self> {
        if k_seq.is_empty() {
            return Err(invalid("k_seq", "need at least one block"));
        }
        if k_seq.iter().any(|k| !(k.fract() == 0.0 && *k >= 3.0)) || k_seq.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("k_seq", format!("need increasing integers >= 3, got {k_seq:?}")));
        }
        let blocks = k_seq.iter().map(|&k| construction.family(k)).collect::<Result<Vec<_>>>()?;
        let p = construction.p();
        let e = match target {
            Target::Divergence => 1.0 / (2.0 * p),
            Target::Shift => 1.0 / p + 0.25,
        };
        let coefficients = k_seq.iter().enumerate().map(|(i, k)| 2f64.powi(-(i as i32 + 1)) * k.powf(-e)).collect();
        let violations = sequence_violations(&k_seq, ratio, construction.schedule());
        Ok(CounterexampleSpec { construction, target, k_seq, blocks, coefficients, violations })
    }

    /// Sum of `c_m |X_m|` terms at a time given relative to block `anchor`, if any.
    fn sum_at(&self, t: f64, anchor: Option<(usize, f64)>, kernel: impl Fn(&AtomFamily, TimePoint) -> LogComplex) -> LogComplex {
        let terms: Vec<LogComplex> = self
            .blocks
            .iter()
            .zip(&self.coefficients)
            .enumerate()
            .map(|(m, (fam, c))| {
                let tp = match anchor {
                    Some((n, delta)) if n == m => TimePoint::near_peak(fam, delta),
                    _ => TimePoint::at(fam, t),
                };
                kernel(fam, tp).scale_ln(c.ln())
            })
            .collect();
        let top = terms.iter().map(|z| z.ln_abs).fold(f64::NEG_INFINITY, f64::max);
        let floor = top + BLOCK_REL_CUTOFF.ln();
        let mut sum = LogSum::new();
        for z in terms.into_iter().filter(|z| z.ln_abs >= floor) {
            sum.push(z);
        }
        sum.value()
    }

    /// `g` at `t = k_n + δ`, resolving `δ` even where `k_n + δ` rounds.
    pub fn g_near_peak(&self, n: usize, delta: f64) -> LogComplex {
        let t = self.blocks[n].k + delta;
        self.sum_at(t, Some((n, delta)), series::primitive).neg()
    }

    /// `|N_m|` of every block at `t = k_n + δ`, unscaled.
    pub fn block_primitives_near(&self, n: usize, delta: f64) -> Vec<f64> {
        let t = self.blocks[n].k + delta;
        self.blocks
            .iter()
            .enumerate()
            .map(|(m, fam)| {
                let tp = if m == n { TimePoint::near_peak(fam, delta) } else { TimePoint::at(fam, t) };
                series::primitive(fam, tp).abs()
            })
            .collect()
    }
}

/// `f(t) = Σ c_n Lμ_n(t)`.
pub fn f_sum_eval(spec: &CounterexampleSpec, t: f64) -> Result<Complex64> {
    if !(t >= 0.0) {
        return Err(invalid("t", format!("must be >= 0, got {t}")));
    }
    Ok(spec.sum_at(t, None, series::laplace).to_complex())
}

/// `g(t) = f̂(0) - ∫₀ᵗ f = -Σ c_n Nμ_n(t)`, since every `f̂_n(0)` vanishes.
pub fn g_sum_eval(spec: &CounterexampleSpec, t: f64) -> Result<Complex64> {
    if !(t >= 0.0) {
        return Err(invalid("t", format!("must be >= 0, got {t}")));
    }
    Ok(spec.sum_at(t, None, series::primitive).neg().to_complex())
}

/// Gap between `g(t)` and `f̂(0) - ∫₀ᵗ f` at each `t`, where `f̂(0)` is taken
/// from the resolvent series at `z = 0` and the integral by adaptive quadrature.
pub fn quadrature_cross_check(spec: &CounterexampleSpec, ts: &[f64], tol: f64) -> Result<Vec<f64>> {
    if spec.blocks.iter().any(|b| b.k > GREEN_SERIES_MAX_K) {
        return Err(invalid("k_seq", "cross-check needs every block within reach of the resolvent series"));
    }
    let mut fhat0 = Complex64::new(0.0, 0.0);
    for (fam, c) in spec.blocks.iter().zip(&spec.coefficients) {
        fhat0 += series::green(fam, 0.0, Complex64::new(0.0, 0.0))?.to_complex() * *c;
    }
    let breaks: Vec<f64> = spec.k_seq.iter().flat_map(|&k| [k - k.sqrt(), k, k + k.sqrt()]).collect();
    let opts = QuadOptions { abs_tol: 1e-3 * tol, rel_tol: 1e-12, max_intervals: 20_000 };
    ts.iter()
        .map(|&t| {
            let q = integrate_with_breaks(|s| f_sum_eval(spec, s).unwrap_or(Complex64::new(f64::NAN, 0.0)), 0.0, t, &breaks, opts);
            Ok((fhat0 - q.value - g_sum_eval(spec, t)?).norm())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> CounterexampleSpec {
        let c = Construction::power(2.0, 2.0, GammaSchedule::inverse_power(0.5).unwrap(), Target::Divergence).unwrap();
        CounterexampleSpec::with_blocks(c, Target::Divergence, vec![3.0, 13.0, 45.0], 3.0).unwrap()
    }

    #[test]
    fn sums_vanish_at_zero() {
        let s = small_spec();
        assert_eq!(f_sum_eval(&s, 0.0).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(g_sum_eval(&s, 0.0).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn coefficients_follow_target() {
        let s = small_spec();
        assert!((s.coefficients[1] - 0.25 * 13f64.powf(-0.25)).abs() < 1e-15);
        let c = Construction::log(1.0, 2.0, None).unwrap();
        let s = CounterexampleSpec::with_blocks(c, Target::Shift, vec![3.0, 10.0], 3.0).unwrap();
        assert!((s.coefficients[0] - 0.5 * 3f64.powf(-0.75)).abs() < 1e-15);
    }

    #[test]
    fn g_matches_quadrature_of_f() {
        let s = small_spec();
        let ts: Vec<f64> = (1..=12).map(|i| 5.0 * i as f64).collect();
        let gaps = quadrature_cross_check(&s, &ts, 1e-6).unwrap();
        for (t, g) in ts.iter().zip(&gaps) {
            assert!(*g <= 1e-6, "t = {t}: {g}");
        }
    }

    #[test]
    fn log_blocks_match_quadrature() {
        let c = Construction::log(1.0, 2.0, None).unwrap();
        let s = CounterexampleSpec::build(c, Target::Divergence, 3, GrowthRule::default()).unwrap();
        let gaps = quadrature_cross_check(&s, &[2.0, 10.0, 31.0, 60.0], 1e-6).unwrap();
        assert!(gaps.iter().all(|g| *g <= 1e-6), "{gaps:?}");
    }

    #[test]
    fn anchored_g_agrees_with_plain_g() {
        let s = small_spec();
        for delta in [-3.0, 0.0, 2.5] {
            let a = s.g_near_peak(1, delta).to_complex();
            let b = g_sum_eval(&s, 13.0 + delta).unwrap();
            assert!((a - b).norm() <= 1e-12 * b.norm());
        }
    }

    #[test]
    fn explicit_sequences_report_violations() {
        let c = Construction::log(1.0, 2.0, None).unwrap();
        let s = CounterexampleSpec::with_blocks(c.clone(), Target::Shift, vec![20.0, 40.0], 3.0).unwrap();
        assert!(!s.violations.is_empty());
        assert!(CounterexampleSpec::with_blocks(c, Target::Shift, vec![2.0], 3.0).is_err());
    }
}
