use crate::error::{invalid, require_positive, Error, Result};
use crate::numeric::roots::invert_increasing;
use crate::numeric::LogComplex;
use crate::weights::{omega_m_contains, RateFunction};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Largest block size whose atoms are enumerated explicitly.
pub const MAX_ENUMERATED_ATOMS: f64 = (1u64 << 20) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum Variant {
    /// Atoms near `iH - 1` with `k = γ H^α log H`.
    PowerLaw { alpha: f64, beta: f64 },
    /// Atoms near `iH - 1 - 2 (log H)^{-α}` with `H = exp(k^{1/(α+1)})`.
    LogLaw { alpha: f64 },
}

impl Variant {
    pub fn alpha(&self) -> f64 {
        match *self {
            Variant::PowerLaw { alpha, .. } | Variant::LogLaw { alpha } => alpha,
        }
    }
}

/// One point mass: location and (log-polar) weight.
#[derive(Debug, Clone, Copy)]
pub struct Atom {
    pub location: Complex64,
    pub weight: LogComplex,
}

/// The `k`-atom measure concentrated on a circle of radius `1/A` around `w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AtomFamily {
    pub variant: Variant,
    /// Number of atoms. Always an integer value; above 2^53 every `f64` is one.
    pub k: f64,
    /// Only for the power-law variant.
    pub gamma: Option<f64>,
    /// Inverse radius `2 k log k` of the atom circle.
    pub a: f64,
    pub h: f64,
    /// Centre of the atom circle.
    pub w: Complex64,
    /// `log(A^{k-1} / sqrt k)`.
    pub ln_tau: f64,
}

impl AtomFamily {
    /// Power-law block; `gamma` defaults to `(β - α/2) / 2`.
    pub fn power_law(alpha: f64, beta: f64, k: f64, gamma: Option<f64>) -> Result<Self> {
        require_positive("alpha", alpha)?;
        if !(beta.is_finite() && beta > alpha / 2.0) {
            return Err(invalid("beta", format!("needs beta > alpha/2, got beta = {beta}, alpha = {alpha}")));
        }
        check_k(k)?;
        let gamma = gamma.unwrap_or((beta - alpha / 2.0) / 2.0);
        if !(gamma > 0.0 && gamma < beta - alpha / 2.0) {
            return Err(invalid("gamma", format!("must lie in (0, beta - alpha/2), got {gamma}")));
        }
        let lhs = |h: f64| gamma * h.powf(alpha) * h.ln();
        let h = invert_increasing(lhs, k, 1.0, 1e-12 * k.max(1.0), 1e300, "atom height")?;
        let w = Complex64::new(-1.0, h);
        Ok(Self::finish(Variant::PowerLaw { alpha, beta }, k, Some(gamma), h, w))
    }

    pub fn log_law(alpha: f64, k: f64) -> Result<Self> {
        require_positive("alpha", alpha)?;
        check_k(k)?;
        let ln_h = k.powf(1.0 / (alpha + 1.0));
        let h = ln_h.exp();
        if !h.is_finite() {
            return Err(invalid("k", format!("height exp(k^(1/(alpha+1))) overflows for k = {k}")));
        }
        let w = Complex64::new(-1.0 - 2.0 * ln_h.powf(-alpha), h);
        Ok(Self::finish(Variant::LogLaw { alpha }, k, None, h, w))
    }

    pub fn build(variant: Variant, k: f64) -> Result<Self> {
        match variant {
            Variant::PowerLaw { alpha, beta } => Self::power_law(alpha, beta, k, None),
            Variant::LogLaw { alpha } => Self::log_law(alpha, k),
        }
    }

    fn finish(variant: Variant, k: f64, gamma: Option<f64>, h: f64, w: Complex64) -> Self {
        let a = 2.0 * k * k.ln();
        let ln_tau = (k - 1.0) * a.ln() - 0.5 * k.ln();
        AtomFamily { variant, k, gamma, a, h, w, ln_tau }
    }

    pub fn alpha(&self) -> f64 {
        self.variant.alpha()
    }

    /// `q = e^{2πi/k}`.
    pub fn q(&self) -> Complex64 {
        Complex64::from_polar(1.0, TAU / self.k)
    }

    /// Residual of the defining equation for `H` (power law) or `log H` (log law).
    pub fn height_residual(&self) -> f64 {
        match self.variant {
            Variant::PowerLaw { alpha, .. } => self.gamma.unwrap_or(0.0) * self.h.powf(alpha) * self.h.ln() - self.k,
            Variant::LogLaw { alpha } => self.h.ln() - self.k.powf(1.0 / (alpha + 1.0)),
        }
    }

    pub fn atom_count(&self) -> Option<usize> {
        if self.k <= MAX_ENUMERATED_ATOMS {
            Some(self.k as usize)
        } else {
            None
        }
    }

    /// Atoms `w + q^s / A` with weights `τ q^s (1 + q^s / (A w))`, `s = 0..k`.
    pub fn atoms(&self) -> Result<Vec<Atom>> {
        let n = self.atom_count().ok_or(Error::TooManyAtoms { k: self.k })?;
        let aw = self.w * self.a;
        Ok((0..n)
            .map(|s| {
                let q = Complex64::from_polar(1.0, TAU * s as f64 / self.k);
                let factor = LogComplex::from_complex(Complex64::new(1.0, 0.0) + q / aw);
                let weight = LogComplex::new(self.ln_tau, TAU * s as f64 / self.k).mul(factor);
                Atom { location: self.w + q / self.a, weight }
            })
            .collect())
    }

    /// Rate function whose `Ω_M` contains the family's natural region; used for
    /// the atom exclusion test.
    pub fn exclusion_rate(&self) -> RateFunction {
        match self.variant {
            Variant::PowerLaw { alpha, .. } => RateFunction::Power { kappa: 1.0, alpha },
            Variant::LogLaw { alpha } => RateFunction::Log { alpha },
        }
    }

    /// The region where the transforms are analytic: `Re z > -1/(1+|Im z|)^α`
    /// (power law) or `Re z > -1/log(2+|Im z|)^α` (log law).
    pub fn region_contains(&self, z: Complex64) -> bool {
        let s = z.im.abs();
        let m = match self.variant {
            Variant::PowerLaw { alpha, .. } => (1.0 + s).powf(alpha),
            Variant::LogLaw { alpha } => (2.0 + s).ln().powf(alpha),
        };
        z.re > -1.0 / m
    }

    /// True when no atom lies in `Ω_M` for the exclusion rate.
    pub fn atoms_excluded(&self) -> Result<bool> {
        let m = self.exclusion_rate();
        Ok(self.atoms()?.iter().all(|a| !omega_m_contains(&m, a.location)))
    }
}

fn check_k(k: f64) -> Result<()> {
    if !(k.is_finite() && k >= 3.0 && k.fract() == 0.0) {
        return Err(invalid("k", format!("block size must be an integer >= 3, got {k}")));
    }
    Ok(())
}

/// Smallest `k` in `3..=k_max` from which every block up to `k_max` keeps its atoms outside `Ω_M`.
pub fn exclusion_threshold(variant: Variant, k_max: u32) -> Result<Option<u32>> {
    let mut threshold = None;
    for k in (3..=k_max).rev() {
        let fam = AtomFamily::build(variant, k as f64)?;
        if fam.atoms_excluded()? {
            threshold = Some(k);
        } else {
            break;
        }
    }
    Ok(threshold)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_turn_for_four_atoms() {
        let f = AtomFamily::power_law(2.0, 2.0, 4.0, None).unwrap();
        assert!((f.q() - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn radius_parameter() {
        let f = AtomFamily::power_law(2.0, 2.0, 10.0, None).unwrap();
        assert!((f.a - 20.0 * 10f64.ln()).abs() < 1e-12);
        assert!((f.a - 46.0517).abs() < 1e-4);
    }

    #[test]
    fn height_equation_solved() {
        let f = AtomFamily::power_law(2.0, 2.0, 10.0, None).unwrap();
        assert_eq!(f.gamma, Some(0.5));
        // independent bisection on 0.5 H^2 log H = 10
        let (mut lo, mut hi) = (1.0f64, 10.0f64);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if 0.5 * m * m * m.ln() < 10.0 { lo = m } else { hi = m }
        }
        assert!((0.5 * f.h * f.h * f.h.ln() - 10.0).abs() <= 1e-10);
        assert!((f.h - hi).abs() < 1e-10);
        assert!(f.height_residual().abs() <= 1e-10);
    }

    #[test]
    fn parameter_errors() {
        assert!(AtomFamily::power_law(2.0, 1.0, 10.0, None).is_err());
        assert!(AtomFamily::power_law(2.0, 2.0, 2.0, None).is_err());
        assert!(AtomFamily::power_law(2.0, 2.0, 5.5, None).is_err());
        assert!(AtomFamily::power_law(2.0, 2.0, 5.0, Some(1.5)).is_err());
    }

    #[test]
    fn log_law_centre() {
        let f = AtomFamily::log_law(1.0, 30.0).unwrap();
        let lh = 30f64.sqrt();
        assert!((f.w.re - (-1.0 - 2.0 / lh)).abs() < 1e-14);
        assert!((f.h.ln() - lh).abs() < 1e-12);
    }

    #[test]
    fn atoms_sit_on_circle_and_weights_sum_to_zero() {
        let f = AtomFamily::power_law(2.0, 2.0, 12.0, None).unwrap();
        let atoms = f.atoms().unwrap();
        assert_eq!(atoms.len(), 12);
        let mut total = Complex64::new(0.0, 0.0);
        for a in &atoms {
            assert!(((a.location - f.w).norm() - 1.0 / f.a).abs() < 1e-15);
            total += a.weight.scale_ln(-f.ln_tau).to_complex();
        }
        assert!(total.norm() < 1e-13);
    }

    #[test]
    fn atoms_are_excluded_for_moderate_k() {
        let v = Variant::PowerLaw { alpha: 2.0, beta: 2.0 };
        let th = exclusion_threshold(v, 40).unwrap();
        assert_eq!(th, Some(3));
        let l = Variant::LogLaw { alpha: 1.0 };
        assert!(exclusion_threshold(l, 30).unwrap().is_some());
    }
}
