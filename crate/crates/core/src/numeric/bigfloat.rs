//! Thin complex arithmetic over `astro_float::BigFloat`.
//!
//! Only what the direct atom summation needs: ring operations, division,
//! the complex exponential and conversion back to double precision without
//! losing the exponent range.

use super::logcomplex::LogComplex;
use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use num_complex::Complex64;

const RM: RoundingMode = RoundingMode::ToEven;

/// Working precision plus the constant cache astro-float needs for transcendental functions.
pub struct BigCtx {
    pub prec: usize,
    consts: Consts,
}

#[derive(Clone, Debug)]
pub struct BigComplex {
    pub re: BigFloat,
    pub im: BigFloat,
}

impl BigCtx {
    pub fn new(prec: usize) -> Self {
        BigCtx { prec, consts: Consts::new().expect("astro-float constant cache") }
    }

    pub fn real(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, self.prec.max(64))
    }

    pub fn complex(&self, z: Complex64) -> BigComplex {
        BigComplex { re: self.real(z.re), im: self.real(z.im) }
    }

    pub fn zero(&self) -> BigComplex {
        self.complex(Complex64::new(0.0, 0.0))
    }

    pub fn pi(&mut self) -> BigFloat {
        self.consts.pi(self.prec, RM)
    }

    pub fn add(&self, a: &BigComplex, b: &BigComplex) -> BigComplex {
        BigComplex { re: a.re.add(&b.re, self.prec, RM), im: a.im.add(&b.im, self.prec, RM) }
    }

    pub fn sub(&self, a: &BigComplex, b: &BigComplex) -> BigComplex {
        BigComplex { re: a.re.sub(&b.re, self.prec, RM), im: a.im.sub(&b.im, self.prec, RM) }
    }

    pub fn mul(&self, a: &BigComplex, b: &BigComplex) -> BigComplex {
        let p = self.prec;
        let rr = a.re.mul(&b.re, p, RM);
        let ii = a.im.mul(&b.im, p, RM);
        let ri = a.re.mul(&b.im, p, RM);
        let ir = a.im.mul(&b.re, p, RM);
        BigComplex { re: rr.sub(&ii, p, RM), im: ri.add(&ir, p, RM) }
    }

    pub fn div(&self, a: &BigComplex, b: &BigComplex) -> BigComplex {
        let p = self.prec;
        let den = b.re.mul(&b.re, p, RM).add(&b.im.mul(&b.im, p, RM), p, RM);
        let conj = BigComplex { re: b.re.clone(), im: b.im.neg() };
        let num = self.mul(a, &conj);
        BigComplex { re: num.re.div(&den, p, RM), im: num.im.div(&den, p, RM) }
    }

    pub fn scale(&self, a: &BigComplex, s: &BigFloat) -> BigComplex {
        BigComplex { re: a.re.mul(s, self.prec, RM), im: a.im.mul(s, self.prec, RM) }
    }

    /// `cos θ + i sin θ`.
    pub fn cis(&mut self, theta: &BigFloat) -> BigComplex {
        let p = self.prec;
        BigComplex { re: theta.cos(p, RM, &mut self.consts), im: theta.sin(p, RM, &mut self.consts) }
    }

    pub fn exp_real(&mut self, x: &BigFloat) -> BigFloat {
        x.exp(self.prec, RM, &mut self.consts)
    }

    /// `e^z` for complex `z`.
    pub fn exp(&mut self, z: &BigComplex) -> BigComplex {
        let m = self.exp_real(&z.re);
        let c = self.cis(&z.im);
        self.scale(&c, &m)
    }
}

/// Converts to `f64` after multiplying by `2^shift`, rounding the mantissa to 64 bits first.
fn to_f64_shifted(x: &BigFloat, shift: i64) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let mut y = x.clone();
    y.set_precision(64, RM).expect("precision change");
    let Some((m, _, s, e, _)) = y.as_raw_parts() else {
        return f64::NAN;
    };
    let top = *m.last().expect("nonzero mantissa") as f64 * 2f64.powi(-64);
    let exp = e as i64 + shift;
    let exp = exp.clamp(i32::MIN as i64 / 2, i32::MAX as i64 / 2) as i32;
    let v = libm::ldexp(top, exp);
    if s == Sign::Neg {
        -v
    } else {
        v
    }
}

pub fn to_f64(x: &BigFloat) -> f64 {
    to_f64_shifted(x, 0)
}

/// Converts to log-polar form, keeping values far outside the `f64` range.
pub fn to_log_complex(z: &BigComplex) -> LogComplex {
    let er = if z.re.is_zero() { None } else { z.re.exponent() };
    let ei = if z.im.is_zero() { None } else { z.im.exponent() };
    let e = match (er, ei) {
        (None, None) => return LogComplex::ZERO,
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (Some(a), Some(b)) => a.max(b),
    } as i64;
    let re = to_f64_shifted(&z.re, -e);
    let im = to_f64_shifted(&z.im, -e);
    let w = Complex64::new(re, im);
    LogComplex::new(e as f64 * std::f64::consts::LN_2 + w.norm().ln(), w.arg())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversion_keeps_extreme_exponents() {
        let ctx = BigCtx::new(128);
        for x in [1e-300, -3.25e-300, 7.0e300, 1.0, -0.1] {
            let b = ctx.real(x);
            assert_eq!(to_f64(&b), x);
        }
    }

    #[test]
    fn exp_of_i_pi_is_minus_one() {
        let mut ctx = BigCtx::new(256);
        let pi = ctx.pi();
        let z = BigComplex { re: ctx.real(0.0), im: pi };
        let e = ctx.exp(&z);
        let one = ctx.complex(Complex64::new(1.0, 0.0));
        let s = ctx.add(&e, &one);
        let l = to_log_complex(&s);
        assert!(l.ln_abs < -150.0, "residual {}", l.ln_abs);
    }

    #[test]
    fn log_form_far_below_f64_range() {
        let mut ctx = BigCtx::new(128);
        let x = ctx.real(-2000.0);
        let tiny = ctx.exp_real(&x);
        let z = BigComplex { re: tiny.clone(), im: tiny };
        let l = to_log_complex(&z);
        assert!((l.ln_abs - (-2000.0 + 0.5 * 2f64.ln())).abs() < 1e-12);
        assert!((l.arg - std::f64::consts::FRAC_PI_4).abs() < 1e-14);
    }

    #[test]
    fn division_roundtrip() {
        let ctx = BigCtx::new(200);
        let a = ctx.complex(Complex64::new(1.5, -2.0));
        let b = ctx.complex(Complex64::new(-0.25, 3.0));
        let q = ctx.div(&a, &b);
        let back = ctx.mul(&q, &b);
        let d = ctx.sub(&back, &a);
        assert!(to_log_complex(&d).ln_abs < -120.0);
    }
}
