//! Complex numbers stored as `(ln |z|, arg z)`.
//!
//! Transform values of high-order atomic blocks span hundreds of orders of
//! magnitude; keeping the logarithm of the modulus avoids overflow and
//! underflow until the caller asks for a plain `Complex64`.

use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogComplex {
    pub ln_abs: f64,
    pub arg: f64,
}

fn wrap(phase: f64) -> f64 {
    if (-PI..=PI).contains(&phase) {
        phase
    } else {
        let r = phase.rem_euclid(TAU);
        if r > PI {
            r - TAU
        } else {
            r
        }
    }
}

impl LogComplex {
    pub const ZERO: LogComplex = LogComplex { ln_abs: f64::NEG_INFINITY, arg: 0.0 };
    pub const ONE: LogComplex = LogComplex { ln_abs: 0.0, arg: 0.0 };

    pub fn new(ln_abs: f64, arg: f64) -> Self {
        LogComplex { ln_abs, arg: wrap(arg) }
    }

    pub fn from_real(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            LogComplex { ln_abs: x.abs().ln(), arg: if x < 0.0 { PI } else { 0.0 } }
        }
    }

    pub fn from_complex(z: Complex64) -> Self {
        if z.re == 0.0 && z.im == 0.0 {
            Self::ZERO
        } else {
            LogComplex { ln_abs: z.norm().ln(), arg: z.arg() }
        }
    }

    /// `e^z` for a complex exponent.
    pub fn exp(z: Complex64) -> Self {
        Self::new(z.re, z.im)
    }

    pub fn is_zero(&self) -> bool {
        self.ln_abs == f64::NEG_INFINITY
    }

    pub fn abs(&self) -> f64 {
        self.ln_abs.exp()
    }

    pub fn to_complex(&self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(self.ln_abs.exp(), self.arg)
    }

    pub fn mul(self, o: LogComplex) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::ZERO;
        }
        Self::new(self.ln_abs + o.ln_abs, self.arg + o.arg)
    }

    pub fn div(self, o: LogComplex) -> Self {
        if self.is_zero() {
            return Self::ZERO;
        }
        Self::new(self.ln_abs - o.ln_abs, self.arg - o.arg)
    }

    pub fn scale_ln(self, ln_factor: f64) -> Self {
        if self.is_zero() {
            return self;
        }
        LogComplex { ln_abs: self.ln_abs + ln_factor, arg: self.arg }
    }

    pub fn powf(self, p: f64) -> Self {
        if self.is_zero() {
            return self;
        }
        Self::new(self.ln_abs * p, self.arg * p)
    }

    /// Sum computed relative to the larger-modulus operand.
    pub fn add(self, o: LogComplex) -> Self {
        let (big, small) = if self.ln_abs >= o.ln_abs { (self, o) } else { (o, self) };
        if small.is_zero() {
            return big;
        }
        let r = Complex64::from_polar((small.ln_abs - big.ln_abs).exp(), small.arg - big.arg);
        // |1 + r|^2 = 1 + (2 Re r + |r|^2), kept accurate via ln_1p.
        let q = 2.0 * r.re + r.norm_sqr();
        if q <= -1.0 {
            // exact cancellation up to rounding
            let s = Complex64::new(1.0 + r.re, r.im);
            if s.norm() == 0.0 {
                return Self::ZERO;
            }
            return Self::new(big.ln_abs + s.norm().ln(), big.arg + s.arg());
        }
        let ln_mod = 0.5 * q.ln_1p();
        let phase = r.im.atan2(1.0 + r.re);
        Self::new(big.ln_abs + ln_mod, big.arg + phase)
    }

    pub fn neg(self) -> Self {
        Self::new(self.ln_abs, self.arg + PI)
    }
}

/// Accumulates many terms with a running scale so partial sums never overflow.
#[derive(Debug, Clone)]
pub struct LogSum {
    scale: f64,
    acc: Complex64,
    max_term: f64,
}

impl Default for LogSum {
    fn default() -> Self {
        LogSum { scale: f64::NEG_INFINITY, acc: Complex64::new(0.0, 0.0), max_term: f64::NEG_INFINITY }
    }
}

impl LogSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, term: LogComplex) {
        if term.is_zero() {
            return;
        }
        if term.ln_abs > self.max_term {
            self.max_term = term.ln_abs;
        }
        if term.ln_abs > self.scale {
            if self.scale.is_finite() {
                self.acc *= (self.scale - term.ln_abs).exp();
            }
            self.scale = term.ln_abs;
        }
        self.acc += Complex64::from_polar((term.ln_abs - self.scale).exp(), term.arg);
    }

    /// Largest `ln |term|` pushed so far.
    pub fn max_ln_term(&self) -> f64 {
        self.max_term
    }

    pub fn value(&self) -> LogComplex {
        if !self.scale.is_finite() {
            return LogComplex::ZERO;
        }
        LogComplex::from_complex(self.acc).scale_ln(self.scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn roundtrip_and_products() {
        let a = Complex64::new(3.0, -4.0);
        let b = Complex64::new(-0.5, 0.25);
        let la = LogComplex::from_complex(a);
        let lb = LogComplex::from_complex(b);
        assert!((la.to_complex() - a).norm() < 1e-14);
        assert!((la.mul(lb).to_complex() - a * b).norm() < 1e-14);
        assert!((la.div(lb).to_complex() - a / b).norm() < 1e-13);
    }

    #[test]
    fn sum_far_below_underflow() {
        let a = LogComplex::new(-2000.0, 0.3);
        let b = LogComplex::new(-2000.0 + 2f64.ln(), 0.3);
        let s = a.add(a);
        assert!((s.ln_abs - b.ln_abs).abs() < 1e-13);
        assert!((s.arg - 0.3).abs() < 1e-13);
    }

    #[test]
    fn cancellation_to_zero() {
        let a = LogComplex::from_real(2.5);
        assert!(a.add(a.neg()).is_zero() || a.add(a.neg()).ln_abs < -30.0);
    }

    proptest! {
        #[test]
        fn add_matches_complex(ar in -5.0f64..5.0, ai in -5.0f64..5.0, br in -5.0f64..5.0, bi in -5.0f64..5.0) {
            let a = Complex64::new(ar, ai);
            let b = Complex64::new(br, bi);
            let s = LogComplex::from_complex(a).add(LogComplex::from_complex(b)).to_complex();
            prop_assert!((s - (a + b)).norm() <= 1e-13 * (a.norm() + b.norm() + 1.0));
        }

        #[test]
        fn logsum_matches_plain_sum(xs in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..30)) {
            let mut acc = LogSum::new();
            let mut plain = Complex64::new(0.0, 0.0);
            for (r, i) in xs {
                let z = Complex64::new(r, i);
                plain += z;
                acc.push(LogComplex::from_complex(z));
            }
            prop_assert!((acc.value().to_complex() - plain).norm() <= 1e-12 * 100.0);
        }
    }
}
