//! Envelope fits for the block transforms.
//!
//! Transforms are sampled once per block on a fixed grid (log magnitudes, so
//! nothing underflows) and every inequality is then fitted from the samples.

use super::backend::TransformBackend;
use super::family::{AtomFamily, Variant};
use super::series::TimePoint;
use crate::error::{invalid, Result};
use crate::fit::{lower_slack, upper_slack, FitReport, HEADROOM};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Times used for a block: linear and logarithmic sweeps of `(0, 1.2A]` plus
/// interior points of the window `(t-k)^2 < k`, addressed by offset from `k`.
pub fn block_time_grid(fam: &AtomFamily, linear: usize, logarithmic: usize, window: usize) -> Vec<TimePoint> {
    let t_max = 1.2 * fam.a;
    let mut pts = Vec::with_capacity(linear + logarithmic + window + 1);
    for i in 1..=linear {
        pts.push(TimePoint::at(fam, t_max * i as f64 / linear as f64));
    }
    let lo = 1e-2f64.ln();
    for i in 0..logarithmic {
        let x = lo + (t_max.ln() - lo) * i as f64 / (logarithmic.max(2) - 1) as f64;
        pts.push(TimePoint::at(fam, x.exp()));
    }
    let half = fam.k.sqrt();
    for i in 1..=window {
        let u = -1.0 + 2.0 * i as f64 / (window + 1) as f64;
        pts.push(TimePoint::near_peak(fam, half * u));
    }
    pts.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.offset.total_cmp(&b.offset)));
    pts.dedup_by(|a, b| a.t == b.t && a.offset == b.offset);
    pts
}

/// Default grid: 200 linear, 200 logarithmic and 41 window points.
pub fn default_time_grid(fam: &AtomFamily) -> Vec<TimePoint> {
    block_time_grid(fam, 200, 200, 41)
}

/// Resolvent points in the family's region, drawn in three bands of `|z - w|`:
/// `[1, 2)`, `[2, 6)` and `[6, 60)`, `per_band` points each.
pub fn sample_resolvent_points(fam: &AtomFamily, per_band: usize, seed: u64) -> Result<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bands = [(1.0, 2.0), (2.0, 6.0), (6.0, 60.0)];
    let mut out = Vec::with_capacity(3 * per_band);
    for (lo, hi) in bands {
        let mut got = 0;
        let mut tries = 0usize;
        while got < per_band {
            tries += 1;
            if tries > 1000 * per_band.max(1) {
                return Err(invalid("z samples", format!("band [{lo}, {hi}) has too little overlap with the region")));
            }
            let r: f64 = rng.gen_range(lo..hi);
            // the region lies to the right of w; bias angles there
            let theta: f64 = rng.gen_range(-0.5 * PI..0.5 * PI);
            let z = fam.w + Complex64::from_polar(r, theta);
            if fam.region_contains(z) {
                out.push(z);
                got += 1;
            }
        }
    }
    Ok(out)
}

/// Log magnitudes of the three transforms at one time.
#[derive(Debug, Clone)]
pub struct SamplePoint {
    pub t: f64,
    /// `t - k`, exact even where `t` cannot resolve it.
    pub from_peak: f64,
    pub ln_laplace: f64,
    pub ln_primitive: f64,
    /// One entry per resolvent point.
    pub ln_green: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BlockSamples {
    pub family: AtomFamily,
    pub zs: Vec<Complex64>,
    pub points: Vec<SamplePoint>,
}

pub fn sample_block(fam: &AtomFamily, grid: &[TimePoint], zs: &[Complex64], backend: &dyn TransformBackend) -> Result<BlockSamples> {
    if let Some(z) = zs.iter().find(|z| !fam.region_contains(**z)) {
        return Err(invalid("z samples", format!("{z} lies outside the region")));
    }
    let points = grid
        .par_iter()
        .map(|&tp| {
            let l = backend.laplace(fam, tp)?;
            let n = backend.primitive(fam, tp)?;
            let g = if zs.is_empty() { vec![] } else { backend.green_many(fam, tp.t, zs)? };
            Ok(SamplePoint {
                t: tp.t,
                from_peak: tp.offset - 1.0,
                ln_laplace: l.ln_abs,
                ln_primitive: n.ln_abs,
                ln_green: g.iter().map(|v| v.ln_abs).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BlockSamples { family: *fam, zs: zs.to_vec(), points })
}

/// Power-law ladder fits with one rate shared by all blocks and inequalities.
#[derive(Debug, Clone)]
pub struct LadderFit {
    pub reports: Vec<FitReport>,
    /// Rate each block would allow on its own.
    pub block_rates: Vec<(f64, f64)>,
    pub common_rate: f64,
}

fn in_window(p: &SamplePoint, k: f64) -> bool {
    p.from_peak.abs() < 0.5 * k
}

/// `(log k / k)^{1/α}`.
fn primitive_scale(k: f64, alpha: f64) -> f64 {
    (k.ln() / k).powf(1.0 / alpha)
}

/// Largest `ρ` with `ln v <= -ρ t` on the given points; `+∞` when there are none.
fn decay_rate<'a>(pts: impl Iterator<Item = (f64, f64)> + 'a) -> f64 {
    pts.filter(|&(t, _)| t > 0.0).map(|(t, ln_v)| -ln_v / t).fold(f64::INFINITY, f64::min)
}

fn block_rate(b: &BlockSamples) -> f64 {
    let k = b.family.k;
    let outside = || b.points.iter().filter(move |p| !in_window(p, k));
    let rho_l = decay_rate(outside().map(|p| (p.t, p.ln_laplace)));
    let rho_n = decay_rate(outside().map(|p| (p.t, p.ln_primitive)));
    let rho_g = decay_rate(
        b.points.iter().filter(|p| p.t > 2.0 * k).flat_map(|p| p.ln_green.iter().map(move |&g| (p.t, g))),
    );
    rho_l.min(rho_n).min(rho_g)
}

/// Smallest tested `k` from which every larger tested block passes.
fn threshold(ks: &[f64], block_pass: &[bool]) -> Option<f64> {
    let mut th = None;
    for (k, ok) in ks.iter().zip(block_pass).rev() {
        if *ok {
            th = Some(*k);
        } else {
            break;
        }
    }
    th
}

/// Fits the four power-law inequalities over a ladder of blocks sharing `α, β`.
pub fn fit_power_ladder(blocks: &[BlockSamples]) -> Result<LadderFit> {
    if blocks.is_empty() {
        return Err(invalid("blocks", "need at least one block"));
    }
    let mut blocks: Vec<&BlockSamples> = blocks.iter().collect();
    blocks.sort_by(|a, b| a.family.k.total_cmp(&b.family.k));
    let (alpha, beta) = match blocks[0].family.variant {
        Variant::PowerLaw { alpha, beta } => (alpha, beta),
        Variant::LogLaw { .. } => return Err(invalid("variant", "ladder fits need the power-law variant")),
    };
    if blocks.iter().any(|b| b.family.variant != blocks[0].family.variant) {
        return Err(invalid("variant", "all blocks must share alpha and beta"));
    }
    let ks: Vec<f64> = blocks.iter().map(|b| b.family.k).collect();
    let block_rates: Vec<(f64, f64)> = blocks.iter().map(|b| (b.family.k, block_rate(b) * (1.0 - HEADROOM))).collect();
    // blocks that admit no positive rate cannot share one; they show up as failures
    let rho = block_rates.iter().map(|r| r.1).filter(|r| *r > 0.0).fold(f64::INFINITY, f64::min);
    let rho = if rho.is_finite() { rho } else { f64::NAN };
    let grid = format!("k in {ks:?}; 200 linear + 200 log t in (0, 1.2A] plus 41 window points");

    let mut reports = Vec::new();

    // |Lμ| <= C 1{|t-k|<k/2} e^{-ρ(t-k)^2/k} + e^{-ρt}
    let c3 = blocks
        .iter()
        .flat_map(|b| {
            let k = b.family.k;
            b.points.iter().filter(move |p| in_window(p, k)).map(move |p| {
                (p.ln_laplace.exp() - (-rho * p.t).exp()).max(0.0) * (rho * p.from_peak.powi(2) / k).exp()
            })
        })
        .fold(0.0, f64::max)
        * (1.0 + HEADROOM);
    let x3 = |b: &BlockSamples| -> Vec<f64> {
        let k = b.family.k;
        b.points
            .iter()
            .map(|p| {
                let gauss = if in_window(p, k) { c3 * (-rho * p.from_peak.powi(2) / k).exp() } else { 0.0 };
                upper_slack(gauss + (-rho * p.t).exp(), p.ln_laplace.exp())
            })
            .collect()
    };
    reports.push(ladder_report("X3", &grid, vec![("C".into(), c3), ("rho".into(), rho)], &blocks, &ks, x3));

    // |Gμ(t,z)| <= C 1{t<=2k} (|Im z|^β 1{|z-w|<2} + 1) + e^{-ρt}
    let weight = |b: &BlockSamples, z: Complex64| {
        let near = if (z - b.family.w).norm() < 2.0 { z.im.abs().powf(beta) } else { 0.0 };
        near + 1.0
    };
    let cq4 = blocks
        .iter()
        .flat_map(|b| {
            let k = b.family.k;
            b.points.iter().filter(move |p| p.t <= 2.0 * k).flat_map(move |p| {
                p.ln_green.iter().zip(&b.zs).map(move |(g, z)| (g.exp() - (-rho * p.t).exp()).max(0.0) / weight(b, *z))
            })
        })
        .fold(0.0, f64::max)
        * (1.0 + HEADROOM);
    let q4 = |b: &BlockSamples| -> Vec<f64> {
        let k = b.family.k;
        b.points
            .iter()
            .flat_map(|p| {
                p.ln_green.iter().zip(&b.zs).map(move |(g, z)| {
                    let body = if p.t <= 2.0 * k { cq4 * weight(b, *z) } else { 0.0 };
                    upper_slack(body + (-rho * p.t).exp(), g.exp())
                })
            })
            .collect()
    };
    reports.push(ladder_report("XQ4", &grid, vec![("C".into(), cq4), ("rho".into(), rho)], &blocks, &ks, q4));

    // |Nμ| >= c (log k / k)^{1/α} on (t-k)^2 < k
    let c5 = blocks
        .iter()
        .flat_map(|b| {
            let k = b.family.k;
            let scale = primitive_scale(k, alpha);
            b.points.iter().filter(move |p| p.from_peak.powi(2) < k).map(move |p| p.ln_primitive.exp() / scale)
        })
        .fold(f64::INFINITY, f64::min)
        * (1.0 - HEADROOM);
    let x5 = |b: &BlockSamples| -> Vec<f64> {
        let k = b.family.k;
        let scale = primitive_scale(k, alpha);
        b.points.iter().filter(|p| p.from_peak.powi(2) < k).map(|p| lower_slack(c5 * scale, p.ln_primitive.exp())).collect()
    };
    let mut r5 = ladder_report("X5", &grid, vec![("c".into(), c5)], &blocks, &ks, x5);
    if !(c5 > 0.0) {
        r5 = r5.fail("fitted lower constant is not positive");
    }
    reports.push(r5);

    // |Nμ| <= C (log k / k)^{1/α} e^{-ρ(t-k)^2/k} 1{|t-k|<k/2} + e^{-ρt}
    let c6 = blocks
        .iter()
        .flat_map(|b| {
            let k = b.family.k;
            let scale = primitive_scale(k, alpha);
            b.points.iter().filter(move |p| in_window(p, k)).map(move |p| {
                (p.ln_primitive.exp() - (-rho * p.t).exp()).max(0.0) * (rho * p.from_peak.powi(2) / k).exp() / scale
            })
        })
        .fold(0.0, f64::max)
        * (1.0 + HEADROOM);
    let x6 = |b: &BlockSamples| -> Vec<f64> {
        let k = b.family.k;
        let scale = primitive_scale(k, alpha);
        b.points
            .iter()
            .map(|p| {
                let gauss = if in_window(p, k) { c6 * scale * (-rho * p.from_peak.powi(2) / k).exp() } else { 0.0 };
                upper_slack(gauss + (-rho * p.t).exp(), p.ln_primitive.exp())
            })
            .collect()
    };
    reports.push(ladder_report("X6", &grid, vec![("C".into(), c6), ("rho".into(), rho)], &blocks, &ks, x6));

    for r in &mut reports {
        if !(rho > 0.0) {
            r.pass = false;
            r.notes.push("no positive rate is shared by the blocks".into());
        }
    }
    let common_rate = rho;
    Ok(LadderFit { reports, block_rates, common_rate })
}

fn ladder_report(
    id: &str,
    grid: &str,
    constants: Vec<(String, f64)>,
    blocks: &[&BlockSamples],
    ks: &[f64],
    residuals: impl Fn(&BlockSamples) -> Vec<f64>,
) -> FitReport {
    let per_block: Vec<Vec<f64>> = blocks.iter().map(|b| residuals(b)).collect();
    let pass: Vec<bool> = per_block.iter().map(|r| r.iter().all(|x| *x >= 0.0)).collect();
    let mut report = FitReport::new(id, grid, constants, per_block.into_iter().flatten());
    report.threshold_k = threshold(ks, &pass);
    report
}

/// Largest `ρ` with `v(x) <= v_max · 2 · e^{-ρ(x - x_peak)}` beyond the sampled peak,
/// followed by the smallest `C` with `v <= C e^{-ρx}` everywhere.
fn peak_anchored_envelope(pts: &[(f64, f64)]) -> (f64, f64) {
    let Some(&(x_pk, ln_pk)) = pts.iter().filter(|p| p.1.is_finite()).max_by(|a, b| a.1.total_cmp(&b.1)) else {
        return (f64::NAN, f64::NAN);
    };
    let anchor = ln_pk + 2f64.ln();
    let rho = pts.iter().filter(|p| p.0 > x_pk).map(|&(x, v)| (anchor - v) / (x - x_pk)).fold(f64::INFINITY, f64::min)
        * (1.0 - HEADROOM);
    let ln_c = pts.iter().map(|&(x, v)| v + rho * x).fold(f64::NEG_INFINITY, f64::max) + HEADROOM;
    (ln_c, rho)
}

/// Inequalities (i)-(iv) for one log-law block.
pub fn fit_log_block(b: &BlockSamples) -> Result<Vec<FitReport>> {
    let alpha = match b.family.variant {
        Variant::LogLaw { alpha } => alpha,
        Variant::PowerLaw { .. } => return Err(invalid("variant", "needs the log-law variant")),
    };
    let k = b.family.k;
    let p = 1.0 / (alpha + 1.0);
    let grid = format!("k = {k}; 200 linear + 200 log t in (0, 1.2A] plus 41 window points");
    let mut reports = Vec::new();

    // (i) |Lμ| <= C e^{-ρ t^p}
    let pts: Vec<(f64, f64)> = b.points.iter().filter(|q| q.t > 0.0).map(|q| (q.t.powf(p), q.ln_laplace)).collect();
    let (ln_c, rho) = peak_anchored_envelope(&pts);
    let res = pts.iter().map(|&(x, v)| upper_slack((ln_c - rho * x).exp(), v.exp()));
    let mut r = FitReport::new("log-i", &grid, vec![("C".into(), ln_c.exp()), ("rho".into(), rho)], res.collect::<Vec<_>>());
    if !(rho > 0.0) {
        r = r.fail("fitted rate is not positive");
    }
    reports.push(r);

    // (ii) |Gμ| <= C 1{t<=2k} + e^{-ρt}
    let rho = decay_rate(b.points.iter().filter(|q| q.t > 2.0 * k).flat_map(|q| q.ln_green.iter().map(move |&g| (q.t, g))))
        * (1.0 - HEADROOM);
    let c = b
        .points
        .iter()
        .filter(|q| q.t <= 2.0 * k)
        .flat_map(|q| q.ln_green.iter().map(move |g| (g.exp() - (-rho * q.t).exp()).max(0.0)))
        .fold(0.0, f64::max)
        * (1.0 + HEADROOM);
    let res: Vec<f64> = b
        .points
        .iter()
        .flat_map(|q| {
            q.ln_green.iter().map(move |g| upper_slack(if q.t <= 2.0 * k { c } else { 0.0 } + (-rho * q.t).exp(), g.exp()))
        })
        .collect();
    let mut r = FitReport::new("log-ii", &grid, vec![("C".into(), c), ("rho".into(), rho)], res);
    if !(rho > 0.0) {
        r = r.fail("fitted rate is not positive");
    }
    reports.push(r);

    // (iii) |Nμ| >= e^{-λ k^p} on (t-k)^2 < k; holds as stated when λ <= 4
    let kp = k.powf(p);
    let lambda = b.points.iter().filter(|q| q.from_peak.powi(2) < k).map(|q| -q.ln_primitive / kp).fold(f64::NEG_INFINITY, f64::max);
    let res: Vec<f64> = b.points.iter().filter(|q| q.from_peak.powi(2) < k).map(|q| lower_slack((-4.0 * kp).exp(), q.ln_primitive.exp())).collect();
    reports.push(
        FitReport::new("log-iii", &grid, vec![("c".into(), 1.0), ("lambda".into(), lambda)], res)
            .with_note(format!("fitted exponent factor {lambda:.4} against 4")),
    );

    // (iv) |Nμ| <= C e^{-ρt} for |t-k| > k/2
    let pts: Vec<(f64, f64)> = b.points.iter().filter(|q| q.t > 0.0 && q.from_peak.abs() > 0.5 * k).map(|q| (q.t, q.ln_primitive)).collect();
    let (ln_c, rho) = peak_anchored_envelope(&pts);
    let res = pts.iter().map(|&(x, v)| upper_slack((ln_c - rho * x).exp(), v.exp()));
    let mut r = FitReport::new("log-iv", &grid, vec![("C".into(), ln_c.exp()), ("rho".into(), rho)], res.collect::<Vec<_>>());
    if !(rho > 0.0) {
        r = r.fail("fitted rate is not positive");
    }
    reports.push(r);
    Ok(reports)
}

/// Samples one block and fits the inequalities matching its variant.
pub fn verify_block(fam: &AtomFamily, grid: &[TimePoint], zs: &[Complex64], backend: &dyn TransformBackend) -> Result<Vec<FitReport>> {
    let samples = sample_block(fam, grid, zs, backend)?;
    match fam.variant {
        Variant::PowerLaw { .. } => Ok(fit_power_ladder(std::slice::from_ref(&samples))?.reports),
        Variant::LogLaw { .. } => fit_log_block(&samples),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::backend::SeriesBackend;

    #[test]
    fn grid_covers_window_interior() {
        let fam = AtomFamily::power_law(2.0, 2.0, 20.0, None).unwrap();
        let g = default_time_grid(&fam);
        let inside = g.iter().filter(|p| (p.offset - 1.0).powi(2) < 20.0).count();
        assert!(inside >= 41);
        assert!(g.iter().all(|p| p.t > 0.0 && p.t <= 1.2 * fam.a * (1.0 + 1e-12)));
    }

    #[test]
    fn resolvent_samples_in_region_and_bands() {
        let fam = AtomFamily::power_law(2.0, 2.0, 20.0, None).unwrap();
        let zs = sample_resolvent_points(&fam, 20, 3).unwrap();
        assert_eq!(zs.len(), 60);
        assert!(zs.iter().all(|z| fam.region_contains(*z)));
        assert_eq!(zs.iter().filter(|z| (**z - fam.w).norm() < 2.0).count(), 20);
    }

    #[test]
    fn power_block_k20_passes_with_series() {
        let fam = AtomFamily::power_law(2.0, 2.0, 20.0, None).unwrap();
        let zs = sample_resolvent_points(&fam, 5, 1).unwrap();
        let reports = verify_block(&fam, &block_time_grid(&fam, 60, 60, 21), &zs, &SeriesBackend).unwrap();
        for r in &reports {
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn envelope_fit_on_exact_exponential() {
        let pts: Vec<(f64, f64)> = (0..50).map(|i| (i as f64, -0.3 * i as f64)).collect();
        let (ln_c, rho) = peak_anchored_envelope(&pts);
        assert!(rho > 0.3 && ln_c >= 0.0);
    }
}
