//! The angular kernel estimate and the Poisson smoothing used to bound the arc pieces.

use crate::error::{invalid, Result};
use crate::numeric::quad::{integrate, PanelRule, QuadOptions};
use std::f64::consts::{FRAC_PI_2, PI};

/// `∫_{-π/2}^{π/2} e^{-t cos θ} cos θ dθ` and the bound `min(2, π²/(2t²))`.
pub fn lemma31_check(t: f64) -> Result<(f64, f64)> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid("t", format!("must be a finite nonnegative time, got {t}")));
    }
    // the integrand is even; near θ = ±π/2 it is O(cos θ), so the half range is smooth
    let r = integrate(|th: f64| (-t * th.cos()).exp() * th.cos(), 0.0, FRAC_PI_2, QuadOptions::tol(1e-14, 1e-12));
    let integral = 2.0 * r.value;
    let bound = if t == 0.0 { 2.0 } else { 2f64.min(PI * PI / (2.0 * t * t)) };
    Ok((integral, bound))
}

/// A step function: `values[i]` on `[breaks[i], breaks[i+1])`, zero outside.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    pub breaks: Vec<f64>,
    pub values: Vec<f64>,
}

impl StepFunction {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breaks.len() != values.len() + 1 || values.is_empty() {
            return Err(invalid("step function", "needs one more break than values".to_string()));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("step function", "breaks must increase strictly".to_string()));
        }
        Ok(StepFunction { breaks, values })
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < self.breaks[0] || x >= *self.breaks.last().unwrap() {
            return 0.0;
        }
        let i = self.breaks.partition_point(|&b| b <= x) - 1;
        self.values[i]
    }

    /// Exact `L^p` norm; `p = ∞` gives the sup norm.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.values.iter().fold(0.0, |m, v| m.max(v.abs()));
        }
        let s: f64 = self.values.iter().zip(self.breaks.windows(2)).map(|(v, w)| v.abs().powf(p) * (w[1] - w[0])).sum();
        s.powf(1.0 / p)
    }
}

/// `(1/π) ∫ y/(s²+y²) h(x+s) ds`, integrated exactly against the steps.
pub fn poisson_convolve(h: &StepFunction, y: f64, x: f64) -> Result<f64> {
    if !(y > 0.0) {
        return Err(invalid("y", format!("Poisson parameter must be positive, got {y}")));
    }
    let mut acc = 0.0;
    for (v, w) in h.values.iter().zip(h.breaks.windows(2)) {
        acc += v * (((w[1] - x) / y).atan() - ((w[0] - x) / y).atan());
    }
    Ok(acc / PI)
}

/// `‖P_y * h‖_p` by panel quadrature over the support widened by `spread · y` on
/// each side, with panels refined to width `y/4` next to every jump.
pub fn poisson_lp_norm(h: &StepFunction, y: f64, p: f64, spread: f64) -> Result<f64> {
    let lo = h.breaks[0] - spread * y;
    let hi = *h.breaks.last().unwrap() + spread * y;
    let mut cuts: Vec<f64> = vec![lo, hi];
    for &b in &h.breaks {
        cuts.extend([b - 4.0 * y, b, b + 4.0 * y]);
    }
    cuts.retain(|&c| c >= lo && c <= hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut sup = 0f64;
    let mut sum = 0.0;
    for w in cuts.windows(2) {
        let near_jump = h.breaks.iter().any(|&b| (b - w[0]).abs() < 4.5 * y || (b - w[1]).abs() < 4.5 * y);
        let width = if near_jump { 0.25 * y } else { (w[1] - w[0]).min(2.0 * y).max(1e-12) };
        let rule = PanelRule::new(w[0], w[1], width, 16);
        for (s, wt) in rule.nodes.iter().zip(&rule.weights) {
            let v = poisson_convolve(h, y, *s)?.abs();
            sup = sup.max(v);
            if p.is_finite() {
                sum += wt * v.powf(p);
            }
        }
    }
    Ok(if p.is_infinite() { sup } else { sum.powf(1.0 / p) })
}
