//! Left shift on `L²(ℝ₊)` applied to the atom blocks.
//!
//! `‖S(t)h‖² = ∫_t^∞ |h|²`, so every orbit norm is a tail integral of a block
//! transform. The resolvent extension is `G(λ)(t) = Σ c_n Gμ_n(t, λ)`.

use super::sum::{Construction, CounterexampleSpec, Target};
use crate::atoms::series::{self, TimePoint};
use crate::atoms::AtomFamily;
use crate::error::{invalid, Result};
use crate::fit::{lower_slack, upper_slack, FitReport, HEADROOM};
use crate::numeric::quad::{integrate_with_breaks, PanelRule, QuadOptions};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct ShiftSuiteConfig {
    /// Times at which orbit norms are taken; defaults to a grid over `[0, 1.2A]` of the largest block.
    pub t_grid: Option<Vec<f64>>,
    pub lambda_samples: usize,
    pub seed: u64,
    pub quad_tol: f64,
}

impl Default for ShiftSuiteConfig {
    fn default() -> Self {
        ShiftSuiteConfig { t_grid: None, lambda_samples: 40, seed: 7, quad_tol: 1e-8 }
    }
}

/// Orbit norms of one block on the grid.
#[derive(Debug, Clone, Serialize)]
pub struct BlockOrbit {
    pub k: f64,
    pub t: Vec<f64>,
    /// `‖S(t) Lμ‖`.
    pub orbit: Vec<f64>,
    /// `‖S(t) Nμ‖`, the orbit of `A⁻¹ Lμ`.
    pub orbit_inverse: Vec<f64>,
    /// Worst `|head + tail - total| / total` over the grid, for both transforms.
    pub tail_identity: f64,
    /// Squared norm left beyond the truncation horizon, relative to the total.
    pub truncation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeSample {
    pub lambda: Complex64,
    pub norm: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShiftReport {
    pub k_seq: Vec<f64>,
    pub beta: f64,
    pub blocks: Vec<BlockOrbit>,
    pub reports: Vec<FitReport>,
    pub envelope: Vec<EnvelopeSample>,
    /// `max ‖G(λ)‖ / (1 + |Im λ|)^{α/2}` over the samples.
    pub envelope_constant: f64,
    pub tail_identity: f64,
    pub pass: bool,
}

fn horizon(fam: &AtomFamily) -> f64 {
    1.2 * fam.a
}

fn breaks(fam: &AtomFamily) -> Vec<f64> {
    let s = fam.k.sqrt();
    vec![fam.k - 4.0 * s, fam.k - s, fam.k, fam.k + s, fam.k + 4.0 * s, 2.0 * fam.k]
}

fn sq_abs(fam: &AtomFamily, t: f64, kernel: fn(&AtomFamily, TimePoint) -> crate::numeric::LogComplex) -> f64 {
    kernel(fam, TimePoint::at(fam, t)).abs().powi(2)
}

fn block_orbit(fam: &AtomFamily, grid: &[f64], tol: f64) -> BlockOrbit {
    let t_end = horizon(fam);
    let brk = breaks(fam);
    let opts = QuadOptions { abs_tol: 0.0, rel_tol: 1e-3 * tol, max_intervals: 20_000 };
    let kernels: [fn(&AtomFamily, TimePoint) -> crate::numeric::LogComplex; 2] = [series::laplace, series::primitive];
    let mut norms = [vec![], vec![]];
    let mut identity = 0f64;
    let mut truncation = 0f64;
    for (j, kern) in kernels.iter().enumerate() {
        let f = |t: f64| sq_abs(fam, t, *kern);
        let total = integrate_with_breaks(f, 0.0, t_end, &brk, opts).value;
        // beyond the horizon the Poisson factor decays at least like e^{-(t-k)/2}
        truncation = truncation.max(2.0 * f(t_end) / total);
        for &t in grid {
            let t = t.min(t_end);
            let head = integrate_with_breaks(f, 0.0, t, &brk, opts).value;
            let tail = integrate_with_breaks(f, t, t_end, &brk, opts).value;
            identity = identity.max((head + tail - total).abs() / total);
            norms[j].push(tail.max(0.0).sqrt());
        }
    }
    let [orbit, orbit_inverse] = norms;
    BlockOrbit { k: fam.k, t: grid.to_vec(), orbit, orbit_inverse, tail_identity: identity, truncation }
}

/// `(log k / k)^{1/α}`.
fn scale(k: f64, alpha: f64) -> f64 {
    (k.ln() / k).powf(1.0 / alpha)
}

/// Fits `v <= c·amp(k)·1{t<=2k} + C e^{-ρt}` over all blocks.
///
/// `ρ` comes from the decay beyond `2k` anchored at the first such grid point,
/// `C` makes the tail part hold, and `c` covers what is left before `2k`.
fn fit_upper(id: &str, grid_desc: &str, rows: &[(f64, &[f64], &[f64])], amp: impl Fn(f64) -> f64) -> FitReport {
    let mut rho = f64::INFINITY;
    for (k, t, v) in rows {
        let after: Vec<(f64, f64)> = t.iter().zip(v.iter()).filter(|(t, _)| **t > 2.0 * k).map(|(a, b)| (*a, *b)).collect();
        if let Some(&(t0, v0)) = after.first() {
            for &(t, v) in &after[1..] {
                if v > 0.0 {
                    rho = rho.min((v0 / v).ln() / (t - t0));
                }
            }
        }
    }
    let rho = if rho.is_finite() { rho * (1.0 - HEADROOM) } else { f64::NAN };
    let big_c = rows
        .iter()
        .flat_map(|(k, t, v)| t.iter().zip(v.iter()).filter(move |(t, _)| **t > 2.0 * k).map(|(t, v)| v * (rho * t).exp()))
        .fold(0.0, f64::max)
        * (1.0 + HEADROOM);
    let small_c = rows
        .iter()
        .flat_map(|(k, t, v)| {
            let a = amp(*k);
            t.iter().zip(v.iter()).filter(move |(t, _)| **t <= 2.0 * k).map(move |(t, v)| (v - big_c * (-rho * t).exp()).max(0.0) / a)
        })
        .fold(0.0, f64::max)
        * (1.0 + HEADROOM);
    let residuals: Vec<f64> = rows
        .iter()
        .flat_map(|(k, t, v)| {
            let a = amp(*k);
            t.iter().zip(v.iter()).map(move |(t, v)| {
                let body = if *t <= 2.0 * k { small_c * a } else { 0.0 };
                upper_slack(body + big_c * (-rho * t).exp(), *v)
            })
        })
        .collect();
    let r = FitReport::new(id, grid_desc, vec![("c".into(), small_c), ("C".into(), big_c), ("rho".into(), rho)], residuals);
    if rho > 0.0 {
        r
    } else {
        r.fail("fitted rate is not positive")
    }
}

/// Samples of `λ` in `Ω = {Re λ > -(1+|Im λ|)^{-α}}` with `Re λ < 1`: half spread
/// log-uniformly in `|Im λ|` up to twice the largest atom height, half within 2 of some `w_n`.
fn sample_lambdas(blocks: &[AtomFamily], alpha: f64, count: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h_max = blocks.iter().map(|b| b.h).fold(1.0, f64::max);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let im = if i % 2 == 0 {
            let x: f64 = rng.gen_range(0.0..(2.0 * h_max + 1.0).ln());
            x.exp_m1() * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }
        } else {
            let b = &blocks[(i / 2) % blocks.len()];
            b.h + rng.gen_range(-1.5..1.5)
        };
        let edge = -(1.0 + im.abs()).powf(-alpha);
        let u: f64 = rng.gen_range(0.02..0.98);
        out.push(Complex64::new(edge + u * (1.0 - edge), im));
    }
    out
}

/// `‖Σ c_n Gμ_n(·, λ)‖_{L²}` on panels up to the largest horizon.
fn resolvent_norm(spec: &CounterexampleSpec, lambda: Complex64, rule: &PanelRule) -> Result<f64> {
    let mut acc = 0.0;
    for (t, w) in rule.nodes.iter().zip(&rule.weights) {
        let mut g = Complex64::new(0.0, 0.0);
        for (fam, c) in spec.blocks.iter().zip(&spec.coefficients) {
            g += series::green(fam, *t, lambda)?.to_complex() * *c;
        }
        acc += w * g.norm_sqr();
    }
    Ok(acc.sqrt())
}

/// Orbit bounds, the tail identity and the `(1+|Im λ|)^{α/2}` resolvent envelope for a shift-target spec.
pub fn shift_semigroup_suite(spec: &CounterexampleSpec, cfg: &ShiftSuiteConfig) -> Result<ShiftReport> {
    let (alpha, beta) = match spec.construction {
        Construction::Power { alpha, beta, .. } => (alpha, beta),
        Construction::Log { .. } => return Err(invalid("construction", "the shift suite uses power-law blocks")),
    };
    if spec.target != Target::Shift {
        return Err(invalid("target", "the shift suite needs shift coefficients"));
    }
    let t_max = spec.blocks.iter().map(horizon).fold(0.0, f64::max);
    let grid = match &cfg.t_grid {
        Some(g) => {
            if g.iter().any(|t| !(*t >= 0.0)) || g.windows(2).any(|w| w[1] <= w[0]) {
                return Err(invalid("t_grid", "need increasing nonnegative times"));
            }
            g.clone()
        }
        None => {
            let k_max = spec.blocks.iter().map(|b| b.k).fold(0.0, f64::max);
            let mut g: Vec<f64> = (0..60).map(|i| 3.0 * k_max * i as f64 / 59.0).collect();
            g.extend((1..=20).map(|i| 3.0 * k_max * (t_max / (3.0 * k_max)).powf(i as f64 / 20.0)));
            g
        }
    };
    let blocks: Vec<BlockOrbit> = spec.blocks.par_iter().map(|fam| block_orbit(fam, &grid, cfg.quad_tol)).collect();
    let tail_identity = blocks.iter().map(|b| b.tail_identity).fold(0.0, f64::max);
    let desc = format!("k in {:?}; {} times in [0, {:.1}]", spec.k_seq, grid.len(), grid.last().copied().unwrap_or(0.0));

    let rows_l: Vec<(f64, &[f64], &[f64])> = blocks.iter().map(|b| (b.k, b.t.as_slice(), b.orbit.as_slice())).collect();
    let rows_n: Vec<(f64, &[f64], &[f64])> = blocks.iter().map(|b| (b.k, b.t.as_slice(), b.orbit_inverse.as_slice())).collect();
    let mut reports = vec![fit_upper("T1", &desc, &rows_l, |k| k.powf(0.25))];

    let c5 = blocks
        .iter()
        .flat_map(|b| b.t.iter().zip(&b.orbit_inverse).filter(|(t, _)| **t <= b.k).map(|(_, v)| v / (b.k.powf(0.25) * scale(b.k, alpha))))
        .fold(f64::INFINITY, f64::min)
        * (1.0 - HEADROOM);
    let res5: Vec<f64> = blocks
        .iter()
        .flat_map(|b| {
            b.t.iter().zip(&b.orbit_inverse).filter(|(t, _)| **t <= b.k).map(|(_, v)| lower_slack(c5 * b.k.powf(0.25) * scale(b.k, alpha), *v))
        })
        .collect();
    let r5 = FitReport::new("T5", &desc, vec![("c".into(), c5)], res5);
    reports.push(if c5 > 0.0 { r5 } else { r5.fail("fitted lower constant is not positive") });
    reports.push(fit_upper("T6", &desc, &rows_n, |k| k.powf(0.25) * scale(k, alpha)));
    if tail_identity > cfg.quad_tol {
        reports.push(FitReport::new("tail-identity", &desc, vec![], [cfg.quad_tol - tail_identity]).with_note("head + tail against total"));
    }

    let lambdas = sample_lambdas(&spec.blocks, alpha, cfg.lambda_samples, cfg.seed);
    let rule = PanelRule::new(0.0, t_max, 0.5, 16);
    let envelope = lambdas
        .par_iter()
        .map(|&l| {
            let norm = resolvent_norm(spec, l, &rule)?;
            Ok(EnvelopeSample { lambda: l, norm, ratio: norm / (1.0 + l.im.abs()).powf(alpha / 2.0) })
        })
        .collect::<Result<Vec<_>>>()?;
    let envelope_constant = envelope.iter().map(|e| e.ratio).fold(0.0, f64::max);
    let env_ok = envelope.iter().all(|e| e.ratio.is_finite());
    let pass = reports.iter().all(|r| r.pass) && tail_identity <= cfg.quad_tol && env_ok && envelope_constant.is_finite();
    Ok(ShiftReport { k_seq: spec.k_seq.clone(), beta, blocks, reports, envelope, envelope_constant, tail_identity, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counterexamples::schedule::GammaSchedule;

    fn spec(ks: Vec<f64>) -> CounterexampleSpec {
        let c = Construction::power(2.0, 2.0, GammaSchedule::inverse_log(), Target::Shift).unwrap();
        CounterexampleSpec::with_blocks(c, Target::Shift, ks, 3.0).unwrap()
    }

    #[test]
    fn beta_is_midpoint() {
        match spec(vec![20.0]).construction {
            Construction::Power { beta, .. } => assert_eq!(beta, 1.5),
            _ => unreachable!(),
        }
    }

    #[test]
    fn orbit_norms_are_tails() {
        let s = spec(vec![12.0]);
        let fam = &s.blocks[0];
        let b = block_orbit(fam, &[0.0, 6.0, 12.0, 30.0], 1e-9);
        assert!(b.tail_identity <= 1e-9);
        assert!(b.orbit.windows(2).all(|w| w[1] <= w[0]));
        // plain trapezoid oracle on a fine grid
        let n = 200_000;
        let t_end = horizon(fam);
        let h = (t_end - 6.0) / n as f64;
        let f = |t: f64| series::laplace(fam, TimePoint::at(fam, t)).abs().powi(2);
        let trap: f64 = (0..=n).map(|i| f(6.0 + i as f64 * h) * if i == 0 || i == n { 0.5 } else { 1.0 }).sum::<f64>() * h;
        assert!((b.orbit[1].powi(2) - trap).abs() <= 1e-7 * trap);
    }

    #[test]
    fn lambda_samples_lie_in_region() {
        let s = spec(vec![20.0, 40.0]);
        for l in sample_lambdas(&s.blocks, 2.0, 40, 1) {
            assert!(l.re > -(1.0 + l.im.abs()).powf(-2.0) && l.re < 1.0);
        }
    }

    #[test]
    fn suite_passes_for_two_blocks() {
        let s = spec(vec![20.0, 40.0]);
        let rep = shift_semigroup_suite(&s, &ShiftSuiteConfig { lambda_samples: 8, ..Default::default() }).unwrap();
        assert!(rep.pass, "{:#?}", rep.reports);
        assert!(rep.tail_identity <= 1e-8);
    }
}
