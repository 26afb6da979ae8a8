//! The diagonal semigroup `T(t) = diag(e^{it - β_n t})` on a sup-normed sequence space.

use crate::error::{invalid, Result};
use crate::fit::{lower_slack, upper_slack, FitReport};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::E;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalSemigroup {
    pub betas: Vec<Complex64>,
}

impl DiagonalSemigroup {
    pub fn new(betas: Vec<Complex64>) -> Result<Self> {
        if betas.is_empty() || betas.iter().any(|b| !(b.re > 0.0)) {
            return Err(invalid("betas", "need a nonempty list with Re β > 0"));
        }
        Ok(DiagonalSemigroup { betas })
    }

    /// `β_n = 2^{-n}`, `n = 1..=count`.
    pub fn dyadic(count: u32) -> Result<Self> {
        Self::new((1..=count).map(|n| Complex64::new(2f64.powi(-(n as i32)), 0.0)).collect())
    }

    /// `n`-th coordinate of `g(t) = (β_n/(β_n - i)) e^{it - β_n t}`.
    pub fn g_coordinate(&self, n: usize, t: f64) -> Complex64 {
        let b = self.betas[n];
        b / (b - Complex64::i()) * (Complex64::new(-b.re * t, t - b.im * t)).exp()
    }

    pub fn g_norm(&self, t: f64) -> f64 {
        (0..self.betas.len()).map(|n| self.g_coordinate(n, t).norm()).fold(0.0, f64::max)
    }

    /// Largest `|e^{(i - β_n) t}|`; at most 1 for a contraction semigroup.
    pub fn orbit_bound(&self, t: f64) -> f64 {
        self.betas.iter().map(|b| (-b.re * t).exp()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagonalReport {
    /// `‖g(t)‖ <= 1/(e t)` for grid `t >= 1`.
    pub upper: FitReport,
    /// `‖g(1/β_n)‖ >= β_n / ((1 + β_n²)^{1/2} e)` for each real `β_n`.
    pub lower: FitReport,
    pub norms: Vec<(f64, f64)>,
}

/// Both estimates are exact inequalities, so nothing is fitted; the only slack is `1e-12` relative.
pub fn c0_example_suite(sg: &DiagonalSemigroup, t_grid: &[f64]) -> Result<DiagonalReport> {
    if sg.betas.iter().any(|b| b.im != 0.0) {
        return Err(invalid("betas", "the two-sided estimates are stated for real β"));
    }
    let norms: Vec<(f64, f64)> = t_grid.iter().map(|&t| (t, sg.g_norm(t))).collect();
    let upper_res = norms.iter().filter(|(t, _)| *t >= 1.0).map(|&(t, v)| upper_slack(1.0 / (E * t), v) + 1e-12);
    let upper = FitReport::new("example-upper", format!("{} points, t >= 1", t_grid.len()), vec![], upper_res);
    let lower_res = sg.betas.iter().map(|b| {
        let b = b.re;
        lower_slack(b / ((1.0 + b * b).sqrt() * E), sg.g_norm(1.0 / b)) + 1e-12
    });
    let lower = FitReport::new("example-lower", format!("t = 1/β_n for {} values", sg.betas.len()), vec![], lower_res);
    Ok(DiagonalReport { upper, lower, norms })
}

/// `t` points geometrically spaced on `[a, b]`.
pub fn log_grid(a: f64, b: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![a];
    }
    (0..count).map(|i| a * (b / a).powf(i as f64 / (count - 1) as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_beta_modulus() {
        let sg = DiagonalSemigroup::new(vec![Complex64::new(1.0, 0.0)]).unwrap();
        for t in [0.0, 0.3, 2.0, 7.0] {
            assert!((sg.g_norm(t) - (-t as f64).exp() / 2f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn dyadic_estimates_hold() {
        let sg = DiagonalSemigroup::dyadic(20).unwrap();
        let rep = c0_example_suite(&sg, &log_grid(1.0, 1e4, 200)).unwrap();
        assert!(rep.upper.pass && rep.lower.pass, "{rep:?}");
    }

    #[test]
    fn contraction() {
        let sg = DiagonalSemigroup::dyadic(8).unwrap();
        assert!((0..50).all(|i| sg.orbit_bound(i as f64 * 0.7) <= 1.0));
    }

    #[test]
    fn rejects_nonpositive_beta() {
        assert!(DiagonalSemigroup::new(vec![Complex64::new(0.0, 1.0)]).is_err());
    }
}
