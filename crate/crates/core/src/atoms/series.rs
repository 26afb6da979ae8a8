//! Closed-form series for the three transforms, evaluated in log space.
//!
//! The roots-of-unity cancellation in the atom sums is carried out
//! analytically, so no digits are lost and block sizes far beyond the reach
//! of direct summation stay cheap.

use super::family::AtomFamily;
use crate::error::{Error, Result};
use crate::numeric::special::{ln_gamma, ln_poisson};
use crate::numeric::{LogComplex, LogSum};
use num_complex::Complex64;

/// Terms smaller than this fraction of the largest one end a series.
pub const SERIES_REL_CUTOFF: f64 = 1e-30;
/// Hard cap on the number of terms of the `m`-series.
pub const SERIES_MAX_TERMS: usize = 10_000;

const LN_CUTOFF: f64 = -69.077_552_789_821_37; // ln 1e-30

/// A time given together with its offset from `k - 1`.
///
/// The Poisson weight `e^{-t} t^{k-1} / (k-1)!` is sharply peaked at `t ≈ k`.
/// For block sizes beyond 2^53 the offset cannot be recovered from `t` in
/// double precision, so windows around the peak are addressed by offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimePoint {
    pub t: f64,
    /// `t - (k - 1)`.
    pub offset: f64,
}

impl TimePoint {
    pub fn at(fam: &AtomFamily, t: f64) -> Self {
        TimePoint { t, offset: t - (fam.k - 1.0) }
    }

    /// `t = k + δ`.
    pub fn near_peak(fam: &AtomFamily, delta: f64) -> Self {
        TimePoint { t: fam.k + delta, offset: 1.0 + delta }
    }
}

/// `sqrt(k) e^{t(w+1)} e^{-t} t^{k-1} / (k-1)!`, common to `Lμ` and `Nμ`.
fn prefactor(fam: &AtomFamily, tp: TimePoint) -> LogComplex {
    if tp.t <= 0.0 {
        return LogComplex::ZERO;
    }
    let x = fam.k - 1.0;
    let ln_abs = 0.5 * fam.k.ln() + ln_poisson(x, tp.t, -tp.offset) + tp.t * (fam.w.re + 1.0);
    LogComplex::new(ln_abs, (tp.t * fam.w.im) % std::f64::consts::TAU)
}

/// Visits `ln ρ_m = k(m-1) ln(t/A) + ln Γ(k) - ln Γ(km)` for `m = 1, 2, ...`
/// until terms drop below the relative cutoff.
fn for_each_ratio(fam: &AtomFamily, t: f64, mut visit: impl FnMut(f64, f64)) {
    let k = fam.k;
    let step = k * (t / fam.a).ln();
    let lg_k = ln_gamma(k);
    let mut best = f64::NEG_INFINITY;
    let mut prev = f64::NEG_INFINITY;
    for m in 1..=SERIES_MAX_TERMS {
        let mf = m as f64;
        let ln_rho = if m == 1 { 0.0 } else { (mf - 1.0) * step + lg_k - ln_gamma(k * mf) };
        if !ln_rho.is_finite() {
            break;
        }
        visit(mf, ln_rho);
        best = best.max(ln_rho);
        if m > 1 && ln_rho < prev && ln_rho < best + LN_CUTOFF {
            break;
        }
        prev = ln_rho;
    }
}

/// `Lμ(t)` in log-polar form.
pub fn laplace(fam: &AtomFamily, tp: TimePoint) -> LogComplex {
    let pre = prefactor(fam, tp);
    if pre.is_zero() {
        return pre;
    }
    let tw = fam.w * tp.t;
    let mut sum = LogSum::new();
    for_each_ratio(fam, tp.t, |m, ln_rho| {
        let factor = Complex64::new(1.0, 0.0) + (fam.k * m - 1.0) / tw;
        sum.push(LogComplex::from_complex(factor).scale_ln(ln_rho));
    });
    pre.mul(sum.value())
}

/// `Nμ(t)` in log-polar form.
pub fn primitive(fam: &AtomFamily, tp: TimePoint) -> LogComplex {
    let pre = prefactor(fam, tp);
    if pre.is_zero() {
        return pre;
    }
    let mut sum = LogSum::new();
    for_each_ratio(fam, tp.t, |_, ln_rho| sum.push(LogComplex::new(ln_rho, 0.0)));
    pre.mul(sum.value()).div(LogComplex::from_complex(fam.w))
}

/// Largest block size for which the resolvent series is evaluated.
pub const GREEN_SERIES_MAX_K: f64 = 1e6;

/// `Gμ(t, z)` from the expansion of `e^{t q^s / A}` and the roots-of-unity identity.
///
/// With `u = A(z - w)` the sum over atoms collapses to
/// `τ e^{tw} Σ_n (t/A)^n / n! · k [A u^{n mod k} + u^{(n+1) mod k} / w] / (u^k - 1)`.
pub fn green(fam: &AtomFamily, t: f64, z: Complex64) -> Result<LogComplex> {
    if fam.k > GREEN_SERIES_MAX_K {
        return Err(Error::TooManyAtoms { k: fam.k });
    }
    let k = fam.k;
    let u = (z - fam.w) * fam.a;
    let ln_u = Complex64::new(u.norm().ln(), u.arg());
    let lk = ln_u * k;
    // log(u^k - 1), stable on both sides of |u| = 1
    let ln_den = if lk.re > 0.0 {
        lk + (Complex64::new(1.0, 0.0) - (-lk).exp()).ln()
    } else {
        let v = Complex64::new(1.0, 0.0) - lk.exp();
        Complex64::new(0.0, std::f64::consts::PI) + v.ln()
    };
    if !(ln_den.re > -30.0) {
        return Err(Error::Pole { re: z.re, im: z.im });
    }
    let base = Complex64::new(fam.ln_tau + k.ln() + t * fam.w.re, t * fam.w.im) - ln_den;
    let ln_a = fam.a.ln();
    let inv_w = LogComplex::from_complex(fam.w.inv());
    let upow = |j: f64| LogComplex::new(j * ln_u.re, j * ln_u.im);
    // upper bound on |A u^j + u^{j'}/w| over a full cycle
    let cycle_max = ln_a.max(-fam.w.norm().ln()) + 2f64.ln() + (k - 1.0) * ln_u.re.max(0.0);
    let ln_ta = if t > 0.0 { (t / fam.a).ln() } else { f64::NEG_INFINITY };
    let mut sum = LogSum::new();
    let mut ln_coef = 0.0; // ln((t/A)^n / n!)
    let n_max = SERIES_MAX_TERMS + k as usize;
    for n in 0..n_max {
        if n > 0 {
            if t == 0.0 {
                break;
            }
            ln_coef += ln_ta - (n as f64).ln();
        }
        let j1 = (n as f64) % k;
        let j2 = ((n + 1) as f64) % k;
        let bracket = upow(j1).scale_ln(ln_a).add(upow(j2).mul(inv_w));
        sum.push(bracket.scale_ln(ln_coef + base.re).mul(LogComplex::new(0.0, base.im)));
        let nf = n as f64;
        if nf + 1.0 >= k && nf > 2.0 * t / fam.a {
            // remaining terms decay at least geometrically with ratio 1/2
            let tail = ln_coef + base.re + cycle_max + 2f64.ln();
            let cur = sum.value();
            if cur.is_zero() || tail < cur.ln_abs + LN_CUTOFF {
                break;
            }
        }
    }
    Ok(sum.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(fam: &AtomFamily, t: f64, kernel: impl Fn(Complex64) -> Complex64) -> Complex64 {
        // plain double-precision atom sum; only trustworthy for small k and moderate t
        let mut acc = Complex64::new(0.0, 0.0);
        for a in fam.atoms().unwrap() {
            acc += a.weight.to_complex() * (a.location * t).exp() * kernel(a.location);
        }
        acc
    }

    #[test]
    fn small_block_matches_plain_atom_sum() {
        let fam = AtomFamily::power_law(2.0, 2.0, 4.0, None).unwrap();
        for t in [0.7, 3.0, 6.5] {
            let tp = TimePoint::at(&fam, t);
            let l = laplace(&fam, tp).to_complex();
            let d = direct(&fam, t, |_| Complex64::new(1.0, 0.0));
            assert!((l - d).norm() <= 1e-9 * d.norm(), "L at {t}: {l} vs {d}");
            let n = primitive(&fam, tp).to_complex();
            let d = direct(&fam, t, |z| 1.0 / z);
            assert!((n - d).norm() <= 1e-9 * d.norm(), "N at {t}");
            let z = Complex64::new(0.5, 1.0);
            let g = green(&fam, t, z).unwrap().to_complex();
            let d = direct(&fam, t, |x| 1.0 / (z - x));
            assert!((g - d).norm() <= 1e-9 * d.norm(), "G at {t}");
        }
    }

    #[test]
    fn zero_time_values() {
        let fam = AtomFamily::power_law(2.0, 2.0, 7.0, None).unwrap();
        assert!(laplace(&fam, TimePoint::at(&fam, 0.0)).is_zero());
        assert!(primitive(&fam, TimePoint::at(&fam, 0.0)).is_zero());
    }

    #[test]
    fn anchored_time_agrees_with_plain_time() {
        let fam = AtomFamily::power_law(2.0, 1.25, 200.0, None).unwrap();
        for delta in [-7.5, 0.0, 3.25] {
            let a = primitive(&fam, TimePoint::near_peak(&fam, delta));
            let b = primitive(&fam, TimePoint::at(&fam, fam.k + delta));
            assert!((a.ln_abs - b.ln_abs).abs() < 1e-11);
        }
    }

    #[test]
    fn huge_block_window_is_finite() {
        let fam = AtomFamily::power_law(2.0, 1.25, 1e40, None).unwrap();
        let v = primitive(&fam, TimePoint::near_peak(&fam, 0.0));
        // sqrt(k) * Poisson peak ≈ 1/sqrt(2π), divided by |w| ≈ H
        let expected = -(std::f64::consts::TAU).sqrt().ln() - fam.h.ln();
        assert!((v.ln_abs - expected).abs() < 1e-6, "{} vs {}", v.ln_abs, expected);
    }
}
