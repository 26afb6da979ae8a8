//! Direct summation over the atoms in extended precision.
//!
//! Independent of the series backend: nothing here uses the roots-of-unity
//! identity, so the cancellation happens numerically and is paid for in bits.

use super::family::AtomFamily;
use crate::error::{Error, Result};
use crate::numeric::bigfloat::{to_log_complex, BigComplex, BigCtx};
use crate::numeric::special::ln_gamma;
use crate::numeric::LogComplex;
use num_complex::Complex64;
use std::f64::consts::LN_2;

/// Largest block size the oracle accepts.
pub const ORACLE_MAX_K: f64 = 4096.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    pub min_bits: usize,
    pub max_bits: usize,
    /// Two successive precisions must agree to this relative gap, measured after
    /// rounding to double, so it cannot be tighter than a few ulps ...
    pub rel_tol: f64,
    /// ... or to this absolute gap.
    pub abs_floor: f64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        OracleSettings { min_bits: 160, max_bits: 1 << 15, rel_tol: 2f64.powi(-48), abs_floor: 1e-100 }
    }
}

/// What multiplies `e^{tζ} dμ(ζ)` in the atom sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    /// `1`, giving `Lμ(t)`.
    Laplace,
    /// `1/ζ`, giving `Nμ(t)`.
    Primitive,
    /// `1/(z - ζ)`, giving `Gμ(t, z)`.
    Green(Complex64),
}

#[derive(Debug, Clone, Copy)]
pub struct OracleValue {
    pub value: LogComplex,
    /// Precision at which two successive evaluations agreed.
    pub bits: usize,
}

/// Evaluates `Σ_s e^{tζ_s} K(ζ_s) μ_s` for every kernel, sharing the exponentials.
pub fn direct_sum(fam: &AtomFamily, t: f64, kernels: &[Kernel], settings: &OracleSettings) -> Result<Vec<OracleValue>> {
    if fam.k > ORACLE_MAX_K {
        return Err(Error::TooManyAtoms { k: fam.k });
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain { what: "oracle time", value: t });
    }
    let mut bits = initial_bits(fam, t, settings);
    let scale = LogComplex::new(fam.ln_tau + t * fam.w.re, (t * fam.w.im) % std::f64::consts::TAU);
    let mut prev = raw_sum(fam, t, kernels, bits);
    loop {
        let next_bits = bits + 64;
        if next_bits > settings.max_bits {
            return Err(Error::Precision { what: "atom oracle", bits });
        }
        let next = raw_sum(fam, t, kernels, next_bits);
        let agreed = prev.iter().zip(&next).all(|(a, b)| {
            let gap = a.add(b.neg()).mul(scale);
            let reference = b.mul(scale);
            gap.is_zero()
                || gap.ln_abs <= reference.ln_abs + settings.rel_tol.ln()
                || gap.ln_abs <= settings.abs_floor.ln()
        });
        if agreed {
            return Ok(next.into_iter().map(|v| OracleValue { value: v.mul(scale), bits: next_bits }).collect());
        }
        bits = (2 * bits).min(settings.max_bits - 64).max(bits + 64);
        prev = raw_sum(fam, t, kernels, bits);
    }
}

/// Bits needed to resolve the cancellation, capped by the bits that already
/// push the absolute error below the floor.
fn initial_bits(fam: &AtomFamily, t: f64, settings: &OracleSettings) -> usize {
    let k = fam.k;
    // largest summand against the expected size of the sum, both relative to τ e^{tw}
    let ln_term = t / fam.a + fam.a.ln().max(0.0);
    let ln_expected = if t > 0.0 { (k - 1.0) * (t / fam.a).ln() - ln_gamma(k) } else { f64::NEG_INFINITY };
    let cancel_bits = ((ln_term - ln_expected).max(0.0) / LN_2).min(1e9);
    let scale_ln = fam.ln_tau + t * fam.w.re + ln_term;
    let abs_bits = ((scale_ln - settings.abs_floor.ln()) / LN_2).max(0.0) + 32.0;
    let want = (cancel_bits + 64.0).min(abs_bits).ceil() as usize;
    want.max(settings.min_bits).min(settings.max_bits / 2)
}

/// The sum without the common factor `τ e^{tw}`:
/// `Σ_s c_s e^{t q^s / A} K(w + q^s/A)` with `c_s = q^s + q^{2s}/(Aw)`.
fn raw_sum(fam: &AtomFamily, t: f64, kernels: &[Kernel], bits: usize) -> Vec<LogComplex> {
    let mut ctx = BigCtx::new(bits);
    let n = fam.k as usize;
    let two_pi = {
        let pi = ctx.pi();
        pi.add(&pi, bits, astro_float::RoundingMode::ToEven)
    };
    let rm = astro_float::RoundingMode::ToEven;
    let kk = ctx.real(fam.k);
    let a = ctx.real(fam.a);
    let w = ctx.complex(fam.w);
    let one = ctx.complex(Complex64::new(1.0, 0.0));
    let a_c = BigComplex { re: a.clone(), im: ctx.real(0.0) };
    let inv_aw = ctx.div(&one, &ctx.mul(&a_c, &w));
    let t_over_a = ctx.real(t).div(&a, bits, rm);
    let zs: Vec<BigComplex> = kernels
        .iter()
        .map(|k| match k {
            Kernel::Green(z) => ctx.complex(*z),
            _ => ctx.zero(),
        })
        .collect();
    let mut acc: Vec<BigComplex> = kernels.iter().map(|_| ctx.zero()).collect();
    for s in 0..n {
        let theta = two_pi.mul(&ctx.real(s as f64), bits, rm).div(&kk, bits, rm);
        let q = ctx.cis(&theta);
        let q2 = ctx.mul(&q, &q);
        let c = ctx.add(&q, &ctx.mul(&q2, &inv_aw));
        let e = ctx.exp(&ctx.scale(&q, &t_over_a));
        let ce = ctx.mul(&c, &e);
        let zeta = ctx.add(&w, &BigComplex { re: q.re.div(&a, bits, rm), im: q.im.div(&a, bits, rm) });
        for (i, kernel) in kernels.iter().enumerate() {
            let term = match kernel {
                Kernel::Laplace => ce.clone(),
                Kernel::Primitive => ctx.div(&ce, &zeta),
                Kernel::Green(_) => ctx.div(&ce, &ctx.sub(&zs[i], &zeta)),
            };
            acc[i] = ctx.add(&acc[i], &term);
        }
    }
    acc.iter().map(to_log_complex).collect()
}

/// Convenience wrapper for a single kernel.
pub fn direct_value(fam: &AtomFamily, t: f64, kernel: Kernel) -> Result<LogComplex> {
    Ok(direct_sum(fam, t, &[kernel], &OracleSettings::default())?[0].value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cancellation_at_zero_time() {
        for k in [5.0, 17.0, 30.0] {
            let fam = AtomFamily::power_law(2.0, 2.0, k, None).unwrap();
            let v = direct_sum(&fam, 0.0, &[Kernel::Laplace, Kernel::Primitive], &OracleSettings::default()).unwrap();
            for x in v {
                assert!(x.value.abs() <= 1e-25, "k = {k}: {}", x.value.abs());
                assert!(x.bits >= 160);
            }
        }
    }

    #[test]
    fn matches_double_precision_sum_when_no_cancellation() {
        // k = 3 at t comparable to A loses few digits; plain f64 summation is fine there
        let fam = AtomFamily::power_law(2.0, 2.0, 3.0, None).unwrap();
        let t = 4.0;
        let mut plain = Complex64::new(0.0, 0.0);
        for a in fam.atoms().unwrap() {
            plain += a.weight.to_complex() * (a.location * t).exp();
        }
        let v = direct_value(&fam, t, Kernel::Laplace).unwrap().to_complex();
        assert!((v - plain).norm() <= 1e-11 * plain.norm());
    }

    #[test]
    fn oversized_block_rejected() {
        let fam = AtomFamily::power_law(2.0, 2.0, 1e5, None).unwrap();
        assert!(matches!(direct_value(&fam, 1.0, Kernel::Laplace), Err(Error::TooManyAtoms { .. })));
    }
}
