//! Resolvent norms along the imaginary axis and their constant-damping closed form.

use super::wave::EnergyFrame;
use crate::error::{invalid, Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

/// A sampled norm curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecaySeries {
    pub label: String,
    pub t: Vec<f64>,
    pub values: Vec<f64>,
}

impl DecaySeries {
    pub fn new(label: impl Into<String>, t: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if t.len() != values.len() {
            return Err(invalid("series", format!("{} abscissae for {} values", t.len(), values.len())));
        }
        if let Some(i) = t.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(Error::StepUnderflow { index: i + 1 });
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(invalid("series", "norm values must be nonnegative"));
        }
        Ok(DecaySeries { label: label.into(), t, values })
    }

    /// Running supremum over `|s'| <= s`, assuming the grid is symmetric or nonnegative.
    pub fn running_sup(&self) -> DecaySeries {
        let mut order: Vec<usize> = (0..self.t.len()).collect();
        order.sort_by(|&i, &j| self.t[i].abs().total_cmp(&self.t[j].abs()));
        let mut best = 0f64;
        let mut out = vec![0.0; self.t.len()];
        for i in order {
            best = best.max(self.values[i]);
            out[i] = best;
        }
        DecaySeries { label: format!("sup {}", self.label), t: self.t.clone(), values: out }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolventScan {
    pub norms: DecaySeries,
    pub running_sup: DecaySeries,
    /// Largest frequency the grid resolves, `π/h`; scans beyond it are discretisation artefacts.
    pub resolvable: Option<f64>,
}

/// Largest singular value.
pub fn spectral_norm_c(m: &DMatrix<Complex64>) -> f64 {
    m.clone().singular_values().iter().fold(0.0, |a: f64, b| a.max(*b))
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().singular_values().iter().fold(0.0, |a: f64, b| a.max(*b))
}

/// `‖(is - G)^{-1}‖` in energy norm at each `s`, as `1/σ_min(is - G)`.
pub fn resolvent_norm_scan(frame: &EnergyFrame, s_grid: &[f64], resolvable: Option<f64>) -> Result<ResolventScan> {
    let g = frame.generator.map(|x| Complex64::new(x, 0.0));
    let dim = frame.dim();
    let values: Vec<Result<f64>> = s_grid
        .par_iter()
        .map(|&s| {
            let m = DMatrix::<Complex64>::identity(dim, dim) * Complex64::new(0.0, s) - &g;
            let sv = m.singular_values();
            let smin = sv.iter().fold(f64::INFINITY, |a, b| a.min(*b));
            let smax = sv.iter().fold(0.0f64, |a, b| a.max(*b));
            if !(smin > 1e-14 * smax) {
                return Err(Error::Spectrum(format!("is = {s}i lies in the spectrum to working precision")));
            }
            Ok(1.0 / smin)
        })
        .collect();
    let values = values.into_iter().collect::<Result<Vec<_>>>()?;
    let norms = DecaySeries::new("resolvent norm", s_grid.to_vec(), values)?;
    let running_sup = norms.running_sup();
    Ok(ResolventScan { norms, running_sup, resolvable })
}

/// `‖(is - B)^{-1}‖₂` for `B = [[0, ω], [-ω, -c]]`, from the 2×2 singular values.
pub fn mode_resolvent_norm(omega: f64, c: f64, s: f64) -> f64 {
    // is - B = [[is, -ω], [ω, is + c]]
    let det = Complex64::new(omega * omega - s * s, c * s);
    let frob = 2.0 * s * s + 2.0 * omega * omega + c * c;
    let disc = (frob * frob - 4.0 * det.norm_sqr()).max(0.0).sqrt();
    let smax = ((frob + disc) / 2.0).sqrt();
    smax / det.norm()
}

/// Energy-norm resolvent of the Dirichlet system with constant damping `c`, mode by mode.
pub fn constant_damping_resolvent_norm(n: usize, h: f64, c: f64, s: f64) -> f64 {
    super::wave::dirichlet_eigenvalues(n, h).iter().map(|l| mode_resolvent_norm((-l).sqrt(), c, s)).fold(0.0, f64::max)
}
