//! Reconstruction of `g(t) = f̂(0) - ∫_0^t f` from the regularised Cauchy integral
//! `g(t) = (1/2πi) ∮ (1 + z²/R²)^n (f̂(z) - f̂_t(z)) e^{zt} dz/z`.
//!
//! The entire part `f̂_t(z) = ∫_0^t e^{-zs} f(s) ds` is carried around the full
//! circle; `f̂` only along the right arc and the left closing path (the segment
//! `[iR, -iR]` for the fixed contour, stubs plus the boundary of `Ω_M` for the
//! adaptive one).

use super::pair::{oscillation_breaks, TransformPair};
use crate::error::{invalid, Error, Result};
use crate::fit::{upper_slack, FitReport, HEADROOM};
use crate::numeric::quad::{integrate_with_breaks, PanelRule, QuadOptions};
use crate::numeric::special::one_minus_exp_over;
use crate::weights::{weight_r, RateFn, RateFunction};
use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// How each contour piece is integrated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OuterRule {
    Adaptive { arc_tol: f64, curve_tol: f64 },
    /// Fixed Gauss-Legendre panels; used to observe convergence under refinement.
    Panels { width: f64, order: usize },
}

impl Default for OuterRule {
    fn default() -> Self {
        OuterRule::Adaptive { arc_tol: 1e-10, curve_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSpec {
    pub radius: f64,
    /// Exponent of the regulariser `(1 + z²/R²)^n`.
    pub power: u32,
    pub rule: OuterRule,
}

impl ContourSpec {
    pub fn new(radius: f64, power: u32) -> Self {
        ContourSpec { radius, power, rule: OuterRule::default() }
    }
}

/// One contour piece: its integral and the integral of the absolute integrand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PieceValue {
    pub value: Complex64,
    pub abs_integral: f64,
    pub converged: bool,
}

impl PieceValue {
    fn zero() -> Self {
        PieceValue { value: Complex64::new(0.0, 0.0), abs_integral: 0.0, converged: true }
    }
    fn plus(self, o: PieceValue) -> Self {
        PieceValue { value: self.value + o.value, abs_integral: self.abs_integral + o.abs_integral, converged: self.converged && o.converged }
    }
    fn scaled(self, s: f64) -> Self {
        PieceValue { value: self.value * s, abs_integral: self.abs_integral * s.abs(), converged: self.converged }
    }
    pub fn norm(&self) -> f64 {
        self.value.norm()
    }
}

/// `∫_a^b h(x) dx` together with `∫ |h|`.
fn piece<F: FnMut(f64) -> Result<Complex64>>(mut h: F, a: f64, b: f64, breaks: &[f64], rule: OuterRule, tol: f64) -> Result<PieceValue> {
    if a == b {
        return Ok(PieceValue::zero());
    }
    match rule {
        OuterRule::Adaptive { .. } => {
            let mut failure = None;
            let r = integrate_with_breaks(
                |x| {
                    let v = h(x).unwrap_or_else(|e| {
                        failure.get_or_insert(e);
                        Complex64::new(0.0, 0.0)
                    });
                    DVector::from_vec(vec![v, Complex64::new(v.norm(), 0.0)])
                },
                a,
                b,
                breaks,
                QuadOptions { abs_tol: tol * 1e-3, rel_tol: tol, max_intervals: 20_000 },
            );
            if let Some(e) = failure {
                return Err(e);
            }
            Ok(PieceValue { value: r.value[0], abs_integral: r.value[1].re, converged: r.converged })
        }
        OuterRule::Panels { width, order } => {
            let rule = PanelRule::new(a.min(b), a.max(b), width, order);
            let sign = if b >= a { 1.0 } else { -1.0 };
            let mut acc = Complex64::new(0.0, 0.0);
            let mut abs = 0.0;
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let v = h(*x)?;
                acc += v * *w;
                abs += v.norm() * w;
            }
            Ok(PieceValue { value: acc * sign, abs_integral: abs, converged: true })
        }
    }
}

/// Cached samples of `f` (less the shift `c·1_[0,1]`) on Gauss-Legendre panels
/// of `[0, t]` and `[t, end]`.
struct TimeSamples {
    t: f64,
    head: Vec<(f64, Complex64)>,
    tail: Vec<(f64, Complex64)>,
}

impl TimeSamples {
    fn new(pair: &TransformPair, t: f64, shift: Complex64, width: f64) -> Self {
        let f = |s: f64| pair.f(s) - if s < 1.0 { shift } else { Complex64::new(0.0, 0.0) };
        let sample = |a: f64, b: f64| -> Vec<(f64, Complex64)> {
            let mut out = Vec::new();
            let mut cuts = vec![a, b];
            if shift != Complex64::new(0.0, 0.0) && a < 1.0 && 1.0 < b {
                cuts.insert(1, 1.0);
            }
            for w in cuts.windows(2) {
                let rule = PanelRule::new(w[0], w[1], width, 20);
                out.extend(rule.nodes.iter().zip(&rule.weights).map(|(&s, &wt)| (s, f(s) * wt)));
            }
            out
        };
        let head = sample(0.0, t);
        let tail = match pair.horizon {
            Some(h) if h > t => sample(t, h),
            _ => vec![],
        };
        TimeSamples { t, head, tail }
    }

    /// `∫_0^t e^{z(t-s)} f(s) ds`, bounded for `Re z <= 0`.
    fn head(&self, z: Complex64) -> Complex64 {
        self.head.iter().map(|(s, wf)| (z * (self.t - s)).exp() * wf).sum()
    }

    /// `∫_t^∞ e^{-z(s-t)} f(s) ds`, bounded for `Re z >= 0`.
    fn tail(&self, z: Complex64) -> Complex64 {
        self.tail.iter().map(|(s, wf)| (-z * (s - self.t)).exp() * wf).sum()
    }
}

fn panel_width(pair: &TransformPair, radius: f64) -> f64 {
    (2.0 / (pair.bandwidth + radius)).min(1.0)
}

/// Right and left arcs of radius `R`.
fn arcs(pair: &TransformPair, samples: &TimeSamples, fhat: &dyn Fn(Complex64) -> Result<Complex64>, radius: f64, power: u32, rule: OuterRule) -> Result<(PieceValue, PieceValue)> {
    let tol = match rule {
        OuterRule::Adaptive { arc_tol, .. } => arc_tol,
        _ => 0.0,
    };
    let t = samples.t;
    let reg = |th: f64| (1.0 + Complex64::from_polar(1.0, 2.0 * th)).powu(power);
    let osc = oscillation_breaks(-FRAC_PI_2, FRAC_PI_2, radius * t.max(1.0));
    // dz/z = i dθ on the circle
    let right = piece(
        |th| {
            let z = Complex64::from_polar(radius, th);
            let rest = if pair.horizon.is_some() { samples.tail(z) } else { (z * t).exp() * fhat(z)? - samples.head(z) };
            Ok(reg(th) * rest * I)
        },
        -FRAC_PI_2,
        FRAC_PI_2,
        &osc,
        rule,
        tol,
    )?;
    let osc: Vec<f64> = osc.iter().map(|x| x + PI).collect();
    let left = piece(
        |th| {
            let z = Complex64::from_polar(radius, th);
            Ok(-reg(th) * samples.head(z) * I)
        },
        FRAC_PI_2,
        1.5 * PI,
        &osc,
        rule,
        tol,
    )?;
    Ok((right, left))
}

/// Fixed-contour reconstruction and its pieces.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FixedReconstruction {
    pub t: f64,
    pub g: Complex64,
    pub right_arc: PieceValue,
    pub left_arc: PieceValue,
    pub segment: PieceValue,
    /// `f̂(0)`, removed by subtracting `f̂(0)·1_[0,1]` and restored in `g`.
    pub shift: Complex64,
}

impl FixedReconstruction {
    /// `2π|g - shift part| <= J1 + J2 + J3` with `J`s taken as integrals of absolute values.
    pub fn piece_sum_slack(&self) -> f64 {
        let g_shifted = self.g - self.shift * (1.0 - self.t).max(0.0);
        let lhs = 2.0 * PI * g_shifted.norm();
        upper_slack(self.right_arc.abs_integral + self.left_arc.abs_integral + self.segment.abs_integral, lhs)
    }
}

/// `g(t)` from the circle of radius `R` closed by the segment `[iR, -iR]`.
pub fn reconstruct_g_fixed(pair: &TransformPair, spec: &ContourSpec, t: f64) -> Result<FixedReconstruction> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain { what: "reconstruction time", value: t });
    }
    if !(spec.radius > 0.0) || spec.power == 0 {
        return Err(invalid("contour", format!("needs R > 0 and n >= 1, got R = {}, n = {}", spec.radius, spec.power)));
    }
    for i in 0..=64 {
        let y = spec.radius * (-1.0 + i as f64 / 32.0);
        if !pair.region.contains(Complex64::new(0.0, y)) {
            return Err(Error::Domain { what: "segment leaves the analyticity region at Im z", value: y });
        }
    }
    let shift = pair.fhat0;
    let fhat = |z: Complex64| -> Result<Complex64> { Ok(pair.fhat(z)? - shift * one_minus_exp_over(z)) };
    let samples = TimeSamples::new(pair, t, shift, panel_width(pair, spec.radius));
    let (right, left) = arcs(pair, &samples, &fhat, spec.radius, spec.power, spec.rule)?;

    // segment z = iy from y = R down to -R: dz/z = dy/y
    let r = spec.radius;
    let n = spec.power;
    let seg_integrand = |y: f64| -> Result<Complex64> {
        let z = Complex64::new(0.0, y);
        Ok((1.0 - y * y / (r * r)).powi(n as i32) * fhat(z)? * Complex64::from_polar(1.0, y * t) / y)
    };
    let tol = match spec.rule {
        OuterRule::Adaptive { arc_tol, .. } => arc_tol,
        _ => 0.0,
    };
    let mut breaks = oscillation_breaks(-r, r, t);
    breaks.push(0.0);
    let segment = piece(seg_integrand, -r, r, &breaks, spec.rule, tol)?.scaled(-1.0);

    let converged = right.converged && left.converged && segment.converged;
    if !converged {
        return Err(Error::Tolerance { what: "fixed contour quadrature", tol, estimate: f64::NAN });
    }
    let total = right.value + left.value + segment.value;
    let g = total / (2.0 * PI * I) + shift * (1.0 - t).max(0.0);
    Ok(FixedReconstruction { t, g, right_arc: right, left_arc: left, segment, shift })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveConfig {
    pub rate: RateFunction,
    /// Dilation in `R(t) = w(k t)`.
    pub k_scale: f64,
    pub power: u32,
    /// Exponents in the assumed growth `|f̂(z)| <= K (1+|Im z|)^a M(|Im z|)^b`.
    pub growth: (f64, f64),
    pub rule: OuterRule,
    /// The boundary curve is drawn at `-(1 - offset)/M(|s|)`, strictly inside `Ω_M`.
    pub offset: f64,
}

impl AdaptiveConfig {
    pub fn new(rate: RateFunction, k_scale: f64, growth: (f64, f64), p: f64) -> Self {
        AdaptiveConfig { rate, k_scale, power: default_power(growth.0, growth.1, p), growth, rule: OuterRule::default(), offset: 1e-6 }
    }
}

/// Smallest integer `n >= 2` with `n > a` and `n > b - 1 + 1/p`.
pub fn default_power(a: f64, b: f64, p: f64) -> u32 {
    let need = a.max(b - 1.0 + 1.0 / p);
    ((need.floor() + 1.0).max(2.0)) as u32
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AdaptiveReconstruction {
    pub t: f64,
    pub g: Complex64,
    pub radius: f64,
    pub rate_at_radius: f64,
    pub right_arc: PieceValue,
    pub left_arc: PieceValue,
    /// Both horizontal stubs.
    pub stubs: PieceValue,
    pub boundary: PieceValue,
    /// Largest sampled `|f̂(z)| / ((1+|Im z|)^a M(|Im z|)^b)` on stubs and boundary.
    pub growth_constant: f64,
    /// `∫_{boundary} |1 + z²/R²|^n / |z| |dz|`, the geometric factor of the boundary bound.
    pub boundary_geometry: f64,
}

/// `g(t)` from the contour adapted to `Ω_M`: arcs of radius `R(t)`, stubs at
/// `±iR`, and the boundary curve of `Ω_M` between them.
pub fn reconstruct_g_adaptive(pair: &TransformPair, cfg: &AdaptiveConfig, t: f64) -> Result<AdaptiveReconstruction> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain { what: "reconstruction time", value: t });
    }
    if !(cfg.offset > 0.0 && cfg.offset < 1.0) {
        return Err(invalid("offset", format!("must lie in (0, 1), got {}", cfg.offset)));
    }
    let m = &cfg.rate;
    let r = weight_r(m, cfg.k_scale, t)?;
    let inward = 1.0 - cfg.offset;
    let curve = |s: f64| Complex64::new(-inward / m.eval(s.abs()), s);
    for i in 0..=200 {
        let s = r * (-1.0 + i as f64 / 100.0);
        if !pair.region.contains(curve(s)) {
            return Err(Error::Domain { what: "boundary curve leaves the analyticity region at Im z", value: s });
        }
    }
    let n = cfg.power;
    let reg = |z: Complex64| (1.0 + z * z / (r * r)).powu(n);
    let fhat = |z: Complex64| pair.fhat(z);
    let samples = TimeSamples::new(pair, t, Complex64::new(0.0, 0.0), panel_width(pair, r));
    let (right, left) = arcs(pair, &samples, &fhat, r, n, cfg.rule)?;
    let (arc_tol, curve_tol) = match cfg.rule {
        OuterRule::Adaptive { arc_tol, curve_tol } => (arc_tol, curve_tol),
        _ => (0.0, 0.0),
    };

    let (ga, gb) = cfg.growth;
    let growth_weight = |z: Complex64| (1.0 + z.im.abs()).powf(ga) * m.eval(z.im.abs()).powf(gb);
    let growth = std::cell::Cell::new(0f64);
    let integrand = |z: Complex64| -> Result<Complex64> {
        let fz = fhat(z)?;
        growth.set(growth.get().max(fz.norm() / growth_weight(z)));
        Ok(reg(z) * fz * (z * t).exp() / z)
    };

    // stubs: z = -s ± iR, s in [0, b]; the upper one is traversed leftwards
    let b = inward / m.eval(r);
    let upper = piece(|s| integrand(Complex64::new(-s, r)), 0.0, b, &[], cfg.rule, arc_tol)?.scaled(-1.0);
    let lower = piece(|s| integrand(Complex64::new(-s, -r)), 0.0, b, &[], cfg.rule, arc_tol)?;
    let stubs = upper.plus(lower);

    // boundary: z(s) = -(1-δ)/M(|s|) + is from s = R down to -R
    let mut breaks = oscillation_breaks(-r, r, t);
    breaks.push(0.0);
    for kink in m.kinks() {
        breaks.extend([kink, -kink]);
    }
    let dz = |s: f64| {
        let ms = m.eval(s.abs());
        Complex64::new(inward * m.derivative(s.abs()) * s.signum() / (ms * ms), 1.0)
    };
    let boundary = piece(|s| Ok(integrand(curve(s))? * dz(s)), -r, r, &breaks, cfg.rule, curve_tol)?.scaled(-1.0);
    let geometry = piece(|s| Ok(Complex64::new((reg(curve(s)) / curve(s)).norm() * dz(s).norm(), 0.0)), -r, r, &breaks, cfg.rule, curve_tol)?;

    if !(right.converged && left.converged && stubs.converged && boundary.converged) {
        return Err(Error::Tolerance { what: "adaptive contour quadrature", tol: curve_tol, estimate: f64::NAN });
    }
    let g = (right.value + left.value + stubs.value + boundary.value) / (2.0 * PI * I);
    Ok(AdaptiveReconstruction {
        t,
        g,
        radius: r,
        rate_at_radius: m.eval(r),
        right_arc: right,
        left_arc: left,
        stubs,
        boundary,
        growth_constant: growth.get(),
        boundary_geometry: geometry.value.re,
    })
}

/// Fits and explicit-constant checks for the stub and boundary pieces over several times.
///
/// Stub pieces: `I3 <= C / (R^{n+1-a} M(R)^{n+1-b})` with `C` fitted, and the explicit
/// bound `2K (1+R)^a M^b 3^n R^{-n-1} (1/M)^{n+1} / (n+1)` (valid for `R >= 1/2`).
/// Boundary piece: `I4 <= C R^{a+1} M(R)^b e^{-t/M(R)}` with `C` fitted, and the explicit
/// bound `K (1+R)^a M(R)^b e^{-(1-δ)t/M(R)} · geometry`.
pub fn adaptive_piece_bounds(runs: &[AdaptiveReconstruction], cfg: &AdaptiveConfig) -> Result<Vec<FitReport>> {
    if runs.is_empty() {
        return Err(invalid("runs", "need at least one reconstruction"));
    }
    let (a, b) = cfg.growth;
    let n = cfg.power as f64;
    let inward = 1.0 - cfg.offset;
    let k_growth = runs.iter().map(|r| r.growth_constant).fold(0.0, f64::max) * (1.0 + HEADROOM);
    let grid = format!("t in {:?}", runs.iter().map(|r| r.t).collect::<Vec<_>>());

    let shape3 = |r: &AdaptiveReconstruction| r.radius.powf(-(n + 1.0 - a)) * r.rate_at_radius.powf(-(n + 1.0 - b));
    let c3 = runs.iter().map(|r| r.stubs.norm() / shape3(r)).fold(0.0, f64::max) * (1.0 + HEADROOM);
    let explicit3 = |r: &AdaptiveReconstruction| {
        let m = r.rate_at_radius;
        2.0 * k_growth * (1.0 + r.radius).powf(a) * m.powf(b) * 3f64.powf(n) * r.radius.powf(-n - 1.0) * (inward / m).powf(n + 1.0) / (n + 1.0)
    };
    let mut res3: Vec<f64> = runs.iter().map(|r| upper_slack(c3 * shape3(r), r.stubs.norm())).collect();
    res3.extend(runs.iter().map(|r| upper_slack(explicit3(r), r.stubs.abs_integral)));
    let mut rep3 = FitReport::new("stub-pieces", &grid, vec![("C".into(), c3), ("K".into(), k_growth)], res3);
    if runs.iter().any(|r| r.radius < 0.5) {
        rep3 = rep3.fail("explicit stub bound needs R >= 1/2");
    }

    let shape4 = |r: &AdaptiveReconstruction| r.radius.powf(a + 1.0) * r.rate_at_radius.powf(b) * (-r.t / r.rate_at_radius).exp();
    let c4 = runs.iter().map(|r| r.boundary.norm() / shape4(r)).fold(0.0, f64::max) * (1.0 + HEADROOM);
    let explicit4 = |r: &AdaptiveReconstruction| {
        k_growth * (1.0 + r.radius).powf(a) * r.rate_at_radius.powf(b) * (-inward * r.t / r.rate_at_radius).exp() * r.boundary_geometry * (1.0 + 1e-8)
    };
    let mut res4: Vec<f64> = runs.iter().map(|r| upper_slack(c4 * shape4(r), r.boundary.norm())).collect();
    res4.extend(runs.iter().map(|r| upper_slack(explicit4(r), r.boundary.abs_integral)));
    let rep4 = FitReport::new("boundary-piece", &grid, vec![("C".into(), c4), ("4K".into(), 4.0 * k_growth)], res4)
        .with_note(format!("boundary drawn at -(1 - {:e})/M(|Im z|)", cfg.offset));
    Ok(vec![rep3, rep4])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::{AtomFamily, SeriesBackend, TimePoint};
    use std::sync::Arc;

    #[test]
    fn exponential_reconstructed_for_two_radii() {
        let pair = TransformPair::exp_decay(1.0).unwrap();
        for t in [0.5, 1.0, 5.0] {
            let exact = (-t as f64).exp();
            let a = reconstruct_g_fixed(&pair, &ContourSpec::new(0.5, 2), t).unwrap();
            let b = reconstruct_g_fixed(&pair, &ContourSpec::new(0.3, 2), t).unwrap();
            assert!((a.g.re - exact).abs() < 1e-8 && a.g.im.abs() < 1e-8, "t = {t}: {}", a.g);
            assert!((a.g - b.g).norm() < 1e-8);
            assert!(a.piece_sum_slack() >= 0.0);
        }
    }

    #[test]
    fn panel_refinement_converges() {
        let pair = TransformPair::exp_decay(1.0).unwrap();
        let t = 1.0;
        let exact = (-t as f64).exp();
        let err = |w: f64| {
            let spec = ContourSpec { radius: 0.5, power: 2, rule: OuterRule::Panels { width: w, order: 2 } };
            (reconstruct_g_fixed(&pair, &spec, t).unwrap().g.re - exact).abs()
        };
        let (e1, e2) = (err(0.4), err(0.2));
        assert!(e2 * 4.0 <= e1, "{e1} -> {e2}");
    }

    #[test]
    fn atom_block_matches_minus_primitive() {
        let fam = AtomFamily::power_law(2.0, 2.0, 10.0, None).unwrap();
        let pair = TransformPair::atom_block(fam, Arc::new(SeriesBackend));
        let t = 10.0;
        let rec = reconstruct_g_fixed(&pair, &ContourSpec::new(0.5, 2), t).unwrap();
        let n = crate::atoms::series::primitive(&fam, TimePoint::at(&fam, t)).to_complex();
        assert!((rec.g + n).norm() <= 1e-6, "{} vs {}", rec.g, -n);
    }

    #[test]
    fn adaptive_contour_with_pole_near_boundary() {
        let m = RateFunction::Power { kappa: 1.0, alpha: 1.0 };
        let im = 1.5;
        let p = Complex64::new(-1.05 / m.eval(im), im);
        let pair = TransformPair::simple_pole(p).unwrap();
        let cfg = AdaptiveConfig::new(m, 0.3, (0.0, 1.0), 2.0);
        for t in [2.0, 6.0, 15.0] {
            let rec = reconstruct_g_adaptive(&pair, &cfg, t).unwrap();
            let exact = -(p * t).exp() / p;
            assert!((rec.g - exact).norm() < 1e-7, "t = {t}: {} vs {exact}, R = {}", rec.g, rec.radius);
        }
    }

    #[test]
    fn adaptive_contour_for_atom_block() {
        let fam = AtomFamily::power_law(2.0, 2.0, 15.0, None).unwrap();
        let pair = TransformPair::atom_block(fam, Arc::new(SeriesBackend));
        let cfg = AdaptiveConfig::new(RateFunction::Power { kappa: 1.0, alpha: 2.0 }, 1.0, (0.0, 0.0), 2.0);
        let mut runs = vec![];
        for t in [7.5, 15.0, 30.0] {
            let rec = reconstruct_g_adaptive(&pair, &cfg, t).unwrap();
            let n = crate::atoms::series::primitive(&fam, TimePoint::at(&fam, t)).to_complex();
            assert!((rec.g + n).norm() <= 1e-5, "t = {t}: {} vs {}", rec.g, -n);
            runs.push(rec);
        }
        let reps = adaptive_piece_bounds(&runs, &cfg).unwrap();
        assert!(reps.iter().all(|r| r.pass), "{reps:?}");
    }

    #[test]
    fn default_power_rule() {
        assert_eq!(default_power(0.0, 0.0, 2.0), 2);
        assert_eq!(default_power(2.0, 0.0, 2.0), 3);
        assert_eq!(default_power(0.5, 3.0, 1.0), 4);
    }
}
