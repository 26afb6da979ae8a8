//! Scalar special functions used by the series evaluators.

use num_complex::Complex64;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln(n!) - [(n + 1/2) ln n - n + ln sqrt(2π)]`, the error of Stirling's formula.
///
/// Uses the asymptotic series above 15 where it is accurate to full precision.
pub fn stirling_error(n: f64) -> f64 {
    if n <= 15.0 {
        return ln_gamma(n + 1.0) - (n + 0.5) * n.ln() + n - LN_SQRT_2PI;
    }
    let nn = n * n;
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
}

/// Deviance term `x ln(x/λ) + λ - x`, given `diff = x - λ` exactly.
///
/// Passing the difference separately keeps full relative accuracy when `x`
/// and `λ` are huge and close, which is where Poisson weights concentrate.
pub fn deviance(x: f64, lambda: f64, diff: f64) -> f64 {
    if diff.abs() < 0.1 * (x + lambda) {
        let v = diff / (x + lambda);
        let mut s = diff * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / lambda).ln() + lambda - x
    }
}

/// `ln( e^{-λ} λ^x / Γ(x + 1) )` for `x >= 1`, `λ > 0`, with `diff = x - λ`.
pub fn ln_poisson(x: f64, lambda: f64, diff: f64) -> f64 {
    if lambda <= 0.0 {
        return f64::NEG_INFINITY;
    }
    -stirling_error(x) - deviance(x, lambda, diff) - 0.5 * (std::f64::consts::TAU * x).ln()
}

/// `e^z - 1` without cancellation for small `|z|`.
pub fn expm1_c(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        // e^{x+iy} - 1 = (e^x - 1) cos y + (cos y - 1) + i e^x sin y
        let em1 = z.re.exp_m1();
        let cm1 = -2.0 * (0.5 * z.im).sin().powi(2);
        Complex64::new(em1 * z.im.cos() + cm1, z.re.exp() * z.im.sin())
    } else {
        z.exp() - 1.0
    }
}

/// `(1 - e^{-z}) / z`, continuous at zero.
pub fn one_minus_exp_over(z: Complex64) -> Complex64 {
    if z.norm() < 1e-8 {
        Complex64::new(1.0, 0.0) - z * 0.5
    } else {
        -expm1_c(-z) / z
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ln_factorial_direct(n: u32) -> f64 {
        (1..=n).map(|j| (j as f64).ln()).sum()
    }

    #[test]
    fn stirling_error_matches_direct_sum() {
        for n in [1u32, 5, 15, 16, 40, 300] {
            let x = n as f64;
            let direct = ln_factorial_direct(n) - (x + 0.5) * x.ln() + x - LN_SQRT_2PI;
            assert!((stirling_error(x) - direct).abs() < 1e-11, "n = {n}");
        }
    }

    #[test]
    fn poisson_log_matches_naive_for_moderate_arguments() {
        for &(x, lam) in &[(2.0, 3.0), (14.0, 14.5), (39.0, 100.0), (120.0, 118.25)] {
            let naive = -lam + x * f64::ln(lam) - ln_gamma(x + 1.0);
            let got = ln_poisson(x, lam, x - lam);
            assert!((got - naive).abs() < 1e-11 * (1.0 + naive.abs()), "{x} {lam}");
        }
    }

    #[test]
    fn poisson_log_is_stable_for_huge_anchored_arguments() {
        // At lambda = x + 1 the weight is about 1/sqrt(2 pi x) regardless of scale.
        let x = 1e30;
        let got = ln_poisson(x, x + 1.0, -1.0);
        let expected = -0.5 * (std::f64::consts::TAU * x).ln();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn expm1_small_argument() {
        let z = Complex64::new(1e-12, -2e-12);
        let e = expm1_c(z);
        assert!((e - z).norm() < 1e-23);
        let w = Complex64::new(0.3, 0.2);
        assert!((expm1_c(w) - (w.exp() - 1.0)).norm() < 1e-15);
    }
}
