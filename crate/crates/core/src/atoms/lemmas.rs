//! Elementary facts the block construction rests on, as executable checks.

use crate::error::{invalid, Error, Result};
use crate::fit::{lower_slack, upper_slack, FitReport, HEADROOM};
use crate::numeric::bigfloat::{to_log_complex, BigCtx};
use crate::numeric::special::ln_gamma;
use num_complex::Complex64;

/// Both sides of `Σ_{s=1..k} q^{js} / (z - q^s) = k z^{j-1} / (z^k - 1)`, `q = e^{2πi/k}`.
///
/// The left side is summed at 192 bits so that its rounding does not mask the comparison.
pub fn roots_identity(k: u32, j: u32, z: Complex64) -> Result<(Complex64, Complex64)> {
    if k == 0 || j == 0 || j > k {
        return Err(invalid("j", format!("need 1 <= j <= k, got j = {j}, k = {k}")));
    }
    let zk = z.powu(k);
    if (zk - 1.0).norm() <= 1e-12 * zk.norm().max(1.0) {
        return Err(Error::Pole { re: z.re, im: z.im });
    }
    let rhs = z.powu(j - 1) * k as f64 / (zk - 1.0);

    let bits = 192;
    let mut ctx = BigCtx::new(bits);
    let rm = astro_float::RoundingMode::ToEven;
    let pi = ctx.pi();
    let two_pi = pi.add(&pi, bits, rm);
    let kk = ctx.real(k as f64);
    let zb = ctx.complex(z);
    let mut acc = ctx.zero();
    for s in 1..=k {
        let theta = two_pi.mul(&ctx.real(s as f64), bits, rm).div(&kk, bits, rm);
        let q = ctx.cis(&theta);
        let js = ((j as u64 * s as u64) % k as u64) as f64;
        let theta_j = two_pi.mul(&ctx.real(js), bits, rm).div(&kk, bits, rm);
        let qj = ctx.cis(&theta_j);
        let term = ctx.div(&qj, &ctx.sub(&zb, &q));
        acc = ctx.add(&acc, &term);
    }
    let lhs = to_log_complex(&acc).to_complex();
    Ok((lhs, rhs))
}

/// `|e^z - Σ_{j<=n} z^j/j!|` and the bound `2|z|^{n+1}/(n+1)!`, for `|z| <= 1`.
pub fn taylor_remainder_check(n: u32, z: Complex64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    if !(z.norm() <= 1.0) {
        return Err(invalid("z", format!("|z| = {} exceeds 1", z.norm())));
    }
    // tail Σ_{j>n} z^j/j! summed directly avoids cancelling against e^z
    let mut term = Complex64::new(1.0, 0.0);
    for j in 1..=n {
        term *= z / j as f64;
    }
    let mut tail = Complex64::new(0.0, 0.0);
    let mut j = n + 1;
    loop {
        term *= z / j as f64;
        tail += term;
        if term.norm() <= 1e-18 * tail.norm() || term.norm() == 0.0 {
            break;
        }
        j += 1;
    }
    let bound = 2.0 * (z.norm().ln() * (n + 1) as f64 - ln_gamma((n + 2) as f64)).exp();
    Ok((tail.norm(), if z.norm() == 0.0 { 0.0 } else { bound }))
}

/// `ln[e^{k-t} (t/k)^k max(sqrt(t/k), 1)]`.
fn ln_scaled_poisson(k: f64, t: f64) -> f64 {
    k - t + k * (t / k).ln() + 0.5 * (t / k).ln().max(0.0)
}

/// `ln[e^{-t} t^k max(sqrt t, sqrt k) / k!]`.
fn ln_poisson_mass(k: f64, t: f64) -> f64 {
    -t + k * t.ln() + 0.5 * t.max(k).ln() - ln_gamma(k + 1.0)
}

/// Shared `(C, ρ)` for both Gaussian-envelope bounds and `c` for the window lower
/// bound, over log-spaced `t` in `[0, 10k]` plus the window `|t-k|^2 <= 2k`.
///
/// `ρ` is the largest rate for which the envelope with twice the sampled maximum
/// dominates every point; `C` is then the smallest admissible constant for that `ρ`.
pub fn stirling_bounds_check(ks: &[u32], points: usize) -> Result<Vec<FitReport>> {
    if ks.iter().any(|&k| k < 3) {
        return Err(invalid("k", "every block size must be at least 3"));
    }
    let grids: Vec<(f64, Vec<f64>)> = ks.iter().map(|&k| (k as f64, stirling_grid(k as f64, points))).collect();
    let spread = |k: f64, t: f64| (t - k).powi(2) / t.max(k);

    type LnF = fn(f64, f64) -> f64;
    let fits: [(&str, LnF); 2] = [("sub31", ln_scaled_poisson), ("sub33", ln_poisson_mass)];
    let mut reports = Vec::new();
    for (id, lnf) in fits {
        // envelope anchored at twice the sampled maximum, then C is refitted
        let ln_anchor = grids
            .iter()
            .flat_map(|(k, grid)| grid.iter().filter(|&&t| t > 0.0).map(move |&t| lnf(*k, t)))
            .fold(f64::NEG_INFINITY, f64::max)
            + 2f64.ln();
        let mut rho = f64::INFINITY;
        for (k, grid) in &grids {
            for &t in grid.iter().filter(|&&t| t > 0.0 && t != *k) {
                rho = rho.min((ln_anchor - lnf(*k, t)) / spread(*k, t));
            }
        }
        rho *= 1.0 - HEADROOM;
        let mut c_big = 0f64;
        for (k, grid) in &grids {
            for &t in grid.iter().filter(|&&t| t > 0.0) {
                c_big = c_big.max((lnf(*k, t) + rho * spread(*k, t)).exp());
            }
        }
        c_big *= 1.0 + HEADROOM;
        let residuals = grids.iter().flat_map(|(k, grid)| {
            grid.iter().map(move |&t| {
                let value = if t == 0.0 { 0.0 } else { lnf(*k, t).exp() };
                upper_slack(c_big * (-rho * spread(*k, t)).exp(), value)
            })
        });
        let mut r = FitReport::new(id, grid_label(ks, points), vec![("C".into(), c_big), ("rho".into(), rho)], residuals.collect::<Vec<_>>());
        if !(rho > 0.0) {
            r = r.fail("fitted rate is not positive");
        }
        reports.push(r);
    }

    let mut c_small = f64::INFINITY;
    let mut at_peak = Vec::new();
    for (k, grid) in &grids {
        for &t in grid.iter().filter(|&&t| (t - k).powi(2) <= 2.0 * k) {
            c_small = c_small.min((k - t + k * (t / k).ln()).exp());
        }
        at_peak.push((k - k + k * (k / k).ln()).exp());
    }
    c_small *= 1.0 - HEADROOM;
    let residuals: Vec<f64> = grids
        .iter()
        .flat_map(|(k, grid)| {
            grid.iter().filter(move |&&t| (t - k).powi(2) <= 2.0 * k).map(move |&t| lower_slack(c_small, (k - t + k * (t / k).ln()).exp()))
        })
        .collect();
    let mut r = FitReport::new("sub32", grid_label(ks, points), vec![("c".into(), c_small)], residuals);
    if at_peak.iter().any(|&v| v != 1.0) {
        r = r.fail("window quantity at t = k differs from 1");
    }
    if !(c_small > 0.0) {
        r = r.fail("fitted lower constant is not positive");
    }
    reports.push(r);
    Ok(reports)
}

fn grid_label(ks: &[u32], points: usize) -> String {
    format!("k in {ks:?}, {points} log-spaced t in [0, 10k] plus window")
}

fn stirling_grid(k: f64, points: usize) -> Vec<f64> {
    let mut grid = vec![0.0, k];
    let lo = (1e-3f64).ln();
    let hi = (10.0 * k).ln();
    for i in 0..points {
        grid.push((lo + (hi - lo) * i as f64 / (points.max(2) - 1) as f64).exp());
    }
    let half = (2.0 * k).sqrt();
    for i in 0..=40 {
        grid.push(k + half * (-1.0 + 2.0 * i as f64 / 40.0));
    }
    grid.retain(|&t| t >= 0.0);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    #[test]
    fn roots_identity_small_cases() {
        let (l, r) = roots_identity(1, 1, Complex64::new(3.0, 0.0)).unwrap();
        assert!((l - 0.5).norm() < 1e-15 && (r - 0.5).norm() < 1e-15);
        let (l, r) = roots_identity(4, 2, Complex64::new(2.0, 0.0)).unwrap();
        assert!((r - 8.0 / 15.0).norm() < 1e-15);
        // four roots i^s, written out
        let mut direct = Complex64::new(0.0, 0.0);
        for s in 1..=4 {
            let q = Complex64::from_polar(1.0, TAU * s as f64 / 4.0);
            direct += q * q / (Complex64::new(2.0, 0.0) - q);
        }
        assert!((direct - r).norm() < 1e-14);
        assert!((l - r).norm() < 1e-14);
    }

    #[test]
    fn roots_identity_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let z = Complex64::from_polar(2.0, rng.gen_range(0.0..TAU));
            let (l, r) = roots_identity(16, 5, z).unwrap();
            assert!((l - r).norm() <= 1e-12 * r.norm());
        }
    }

    #[test]
    fn roots_identity_pole() {
        assert!(matches!(roots_identity(3, 1, Complex64::new(1.0, 0.0)), Err(Error::Pole { .. })));
    }

    #[test]
    fn taylor_examples() {
        let (rem, bound) = taylor_remainder_check(3, Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!((rem, bound), (0.0, 0.0));
        let (rem, bound) = taylor_remainder_check(3, Complex64::new(1.0, 0.0)).unwrap();
        assert!((rem - (std::f64::consts::E - 8.0 / 3.0)).abs() < 1e-15);
        assert!((bound - 2.0 / 24.0).abs() < 1e-15);
        assert!(taylor_remainder_check(2, Complex64::new(1.5, 0.0)).is_err());
    }

    #[test]
    fn taylor_random_disc() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let z = Complex64::from_polar(rng.gen_range(0.0f64..1.0).sqrt(), rng.gen_range(0.0..TAU));
            let n = rng.gen_range(1..=10);
            let (rem, bound) = taylor_remainder_check(n, z).unwrap();
            assert!(rem <= bound, "n = {n}, z = {z}");
        }
    }

    #[test]
    fn stirling_fits_pass_jointly() {
        let reports = stirling_bounds_check(&[3, 10, 50], 200).unwrap();
        assert_eq!(reports.len(), 3);
        for r in &reports {
            assert!(r.pass, "{r:?}");
        }
        assert!(reports[0].constant("rho").unwrap() > 0.0);
    }
}
