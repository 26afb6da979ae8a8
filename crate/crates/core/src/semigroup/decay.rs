//! Decay-rate fits for matrix semigroups in energy coordinates.

use super::scan::{spectral_norm, DecaySeries};
use super::wave::EnergyFrame;
use crate::error::{invalid, Error, Result};
use crate::fit::{lower_slack, upper_slack, FitReport, HEADROOM};
use crate::numeric::expm::expm;
use crate::weights::{log_weight, m_log_eval, weight_r, RateFn, RateFunction};
use nalgebra::DVector;
use serde::Serialize;

/// A nondecreasing rate function given by samples, linear in between and
/// constant past the last sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TabulatedRate {
    pub s: Vec<f64>,
    pub values: Vec<f64>,
}

impl TabulatedRate {
    /// Uses the nonnegative part of a running-supremum series.
    pub fn from_running_sup(sup: &DecaySeries) -> Result<Self> {
        let mut pts: Vec<(f64, f64)> = sup.t.iter().zip(&sup.values).filter(|(s, _)| **s >= 0.0).map(|(s, v)| (*s, *v)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts.dedup_by(|a, b| a.0 == b.0);
        if pts.is_empty() || pts[0].0 != 0.0 {
            return Err(invalid("rate samples", "need a sample at s = 0"));
        }
        let mut best = 0f64;
        let (s, values) = pts
            .into_iter()
            .map(|(s, v)| {
                best = best.max(v);
                (s, best)
            })
            .unzip();
        Ok(TabulatedRate { s, values })
    }

    /// `inf { s >= 0 : M(s) >= y }`, infinite when `y` exceeds every sample.
    pub fn inverse(&self, y: f64) -> f64 {
        if y <= self.values[0] {
            return 0.0;
        }
        for i in 1..self.s.len() {
            if self.values[i] >= y {
                let (v0, v1) = (self.values[i - 1], self.values[i]);
                return self.s[i - 1] + (self.s[i] - self.s[i - 1]) * (y - v0) / (v1 - v0);
            }
        }
        f64::INFINITY
    }

    pub fn sup(&self) -> f64 {
        *self.values.last().unwrap()
    }
}

impl RateFn for TabulatedRate {
    fn eval(&self, s: f64) -> f64 {
        let i = self.s.partition_point(|&x| x <= s);
        if i == 0 {
            return self.values[0];
        }
        if i == self.s.len() {
            return self.sup();
        }
        let (s0, s1) = (self.s[i - 1], self.s[i]);
        self.values[i - 1] + (self.values[i] - self.values[i - 1]) * (s - s0) / (s1 - s0)
    }

    fn kinks(&self) -> Vec<f64> {
        self.s.clone()
    }
}

/// `‖T(t) G^{-1}‖` on a uniform grid starting at 0.
pub fn orbit_norms(frame: &EnergyFrame, t_grid: &[f64]) -> Result<DecaySeries> {
    let dt = uniform_step(t_grid)?;
    if t_grid[0] != 0.0 {
        return Err(invalid("t_grid", "must start at 0"));
    }
    let step = expm(&(&frame.generator * dt))?;
    let mut m = frame.inverse_generator()?;
    let mut values = vec![spectral_norm(&m)];
    for _ in 1..t_grid.len() {
        m = &step * m;
        values.push(spectral_norm(&m));
    }
    DecaySeries::new("|T(t) A^-1|", t_grid.to_vec(), values)
}

fn uniform_step(t_grid: &[f64]) -> Result<f64> {
    if t_grid.len() < 3 {
        return Err(invalid("t_grid", "need at least 3 points"));
    }
    let dt = t_grid[1] - t_grid[0];
    if !(dt > 0.0) || t_grid.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt) {
        return Err(invalid("t_grid", "must be uniform and increasing"));
    }
    Ok(dt)
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub series: DecaySeries,
    pub report: FitReport,
    /// First grid time from which both estimates are asserted.
    pub t0: f64,
    /// Largest step-to-step increase of the orbit norm relative to its value.
    pub monotonicity_defect: f64,
    /// Least-squares slopes of `log‖T(t)A^{-1}‖` against `t` and against `log t` past `t0`.
    pub exponential_rate: f64,
    pub power_exponent: f64,
}

/// Fits `c'/M^{-1}(C' t) <= ‖T(t)A^{-1}‖ <= C / M_log^{-1}(c t)` on `t >= t_fit`.
///
/// `C = 2‖A^{-1}‖` and `C' = 1` are fixed; `c` and `c'` are the extremal values
/// on the grid. The upper weight is `w` (equal to 1 below `M_log(1)`).
pub fn rate_sandwich_check(frame: &EnergyFrame, t_grid: &[f64], rate: &TabulatedRate, t_fit: f64) -> Result<SandwichReport> {
    let series = orbit_norms(frame, t_grid)?;
    let v = &series.values;
    let big_c = 2.0 * v[0];
    let small_prime_c = 1.0;
    let m0 = rate.eval(0.0);
    // the lower estimate needs M^{-1}(C't) > 0
    let start = t_grid.iter().position(|&t| t >= t_fit && small_prime_c * t > m0).ok_or_else(|| invalid("t_fit", "no grid time past the fitting start"))?;
    let t0 = t_grid[start];
    let tail: Vec<usize> = (start..t_grid.len()).collect();

    let c = tail.iter().map(|&i| m_log_eval(rate, big_c / v[i]).map(|m| m / t_grid[i])).collect::<Result<Vec<_>>>()?.into_iter().fold(f64::INFINITY, f64::min) * (1.0 - HEADROOM);
    let mut residuals = vec![];
    for &i in &tail {
        let w = log_weight(rate, c * t_grid[i])?;
        residuals.push(upper_slack(big_c / w, v[i]));
    }
    let finite_lower: Vec<(usize, f64)> = tail.iter().map(|&i| (i, rate.inverse(small_prime_c * t_grid[i]))).filter(|(_, s)| s.is_finite()).collect();
    let mut notes = vec![];
    let c_prime = if finite_lower.is_empty() {
        notes.push(format!("lower estimate vacuous past t0: M is bounded by {:.6e} < C't", rate.sup()));
        1.0
    } else {
        finite_lower.iter().map(|(i, s)| v[*i] * s).fold(f64::INFINITY, f64::min) * (1.0 - HEADROOM)
    };
    for &(i, s) in &finite_lower {
        residuals.push(lower_slack(c_prime / s, v[i]));
    }
    let monotonicity_defect = v.windows(2).map(|w| (w[1] - w[0]) / w[0].max(f64::MIN_POSITIVE)).fold(f64::NEG_INFINITY, f64::max);

    let (xs, ls): (Vec<f64>, Vec<f64>) = tail.iter().filter(|&&i| v[i] > 0.0).map(|&i| (t_grid[i], v[i].ln())).unzip();
    let exponential_rate = -slope(&xs, &ls);
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let power_exponent = -slope(&lx, &ls);

    let grid = format!("{} points on [{}, {}]", t_grid.len(), t_grid[0], t_grid[t_grid.len() - 1]);
    let mut report = FitReport::new("rate-sandwich", grid, vec![("c'".into(), c_prime), ("C'".into(), small_prime_c), ("C".into(), big_c), ("c".into(), c)], residuals);
    if !(c > 0.0) {
        report = report.fail("no positive c makes the upper estimate hold");
    }
    if monotonicity_defect > 1e-12 {
        report = report.fail(format!("orbit norm increased by {monotonicity_defect:e}"));
    }
    for n in notes {
        report = report.with_note(n);
    }
    Ok(SandwichReport { series, report, t0, monotonicity_defect, exponential_rate, power_exponent })
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 2 {
        return f64::NAN;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightedDecayReport {
    /// `‖B² + (G + G*)‖`, entrywise max.
    pub root_residual: f64,
    pub ladder: Vec<f64>,
    /// `∫ ‖B T(t) A^{-1} x‖² w(t)² dt` over consecutive ladder intervals.
    pub dissipation_increments: Vec<f64>,
    /// `∫ |dE/dt| w(t)² dt` over the same intervals, with `dE/dt` by central differences.
    pub energy_increments: Vec<f64>,
    pub pass: bool,
}

/// Weighted square integrals of the dissipated orbit on the ladder `[0, t1, 2t1, 4t1, ...]`.
///
/// Passes when, over the second half of the ladder, every increment is smaller
/// than the one before (the ladder intervals double, so this is geometric decay
/// of the integrand against a growing window).
pub fn weighted_decay_suite(frame: &EnergyFrame, x: &DVector<f64>, rate: &RateFunction, k_scale: f64, t1: f64, levels: usize, dt: f64) -> Result<WeightedDecayReport> {
    if levels < 2 || !(t1 > 0.0) || !(dt > 0.0) {
        return Err(invalid("ladder", "need levels >= 2 and positive t1, dt"));
    }
    let b = frame.dissipator_sqrt();
    let root_residual = (&b * &b + &frame.generator + frame.generator.transpose()).amax();
    let y0 = frame.inverse_generator()? * (&frame.coords * x);
    let mut ladder = vec![0.0];
    for j in 0..levels {
        ladder.push(t1 * 2f64.powi(j as i32));
    }
    let t_end = *ladder.last().unwrap();
    let steps_per = (t1 / dt).ceil() as usize;
    let h = t1 / steps_per as f64;
    let total = (t_end / h).round() as usize;
    let step = expm(&(&frame.generator * h))?;
    let mut y = y0;
    let mut diss = Vec::with_capacity(total + 1);
    let mut energy = Vec::with_capacity(total + 1);
    for i in 0..=total {
        if i > 0 {
            y = &step * y;
        }
        diss.push((&b * &y).norm_squared());
        energy.push(0.5 * y.norm_squared());
    }
    let mut weights = Vec::with_capacity(total + 1);
    for i in 0..=total {
        weights.push(weight_r(rate, k_scale, i as f64 * h)?.powi(2));
    }
    // one-sided differences at the ends, fourth order inside
    let de = |i: usize| -> f64 {
        if i >= 2 && i + 2 <= total {
            (energy[i - 2] - 8.0 * energy[i - 1] + 8.0 * energy[i + 1] - energy[i + 2]) / (12.0 * h)
        } else if i + 2 <= total {
            (-3.0 * energy[i] + 4.0 * energy[i + 1] - energy[i + 2]) / (2.0 * h)
        } else {
            (3.0 * energy[i] - 4.0 * energy[i - 1] + energy[i - 2]) / (2.0 * h)
        }
    };
    let mut dissipation_increments = vec![];
    let mut energy_increments = vec![];
    for w in ladder.windows(2) {
        let (a, bnd) = ((w[0] / h).round() as usize, (w[1] / h).round() as usize);
        dissipation_increments.push(trapezoid(a, bnd, h, |i| diss[i] * weights[i]));
        energy_increments.push(trapezoid(a, bnd, h, |i| de(i).abs() * weights[i]));
    }
    let half = levels / 2;
    let decreasing = |inc: &[f64]| inc[half..].windows(2).all(|w| w[1] < w[0]);
    let pass = root_residual <= 1e-10 * frame.generator.amax().max(1.0) && decreasing(&dissipation_increments) && decreasing(&energy_increments);
    if dissipation_increments.iter().any(|v| !v.is_finite()) {
        return Err(Error::Tolerance { what: "weighted dissipation integral", tol: 0.0, estimate: f64::INFINITY });
    }
    Ok(WeightedDecayReport { root_residual, ladder, dissipation_increments, energy_increments, pass })
}

fn trapezoid(a: usize, b: usize, h: f64, f: impl Fn(usize) -> f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let inner: f64 = (a + 1..b).map(&f).sum();
    h * (inner + 0.5 * (f(a) + f(b)))
}
