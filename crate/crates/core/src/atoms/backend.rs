//! Interchangeable evaluators for `Lμ`, `Nμ` and `Gμ`.

use super::family::AtomFamily;
use super::oracle::{direct_sum, Kernel, OracleSettings};
use super::series::{self, TimePoint};
use crate::error::{Error, Result};
use crate::numeric::LogComplex;
use num_complex::Complex64;

pub trait TransformBackend: Send + Sync {
    fn name(&self) -> &'static str;
    fn laplace(&self, fam: &AtomFamily, tp: TimePoint) -> Result<LogComplex>;
    fn primitive(&self, fam: &AtomFamily, tp: TimePoint) -> Result<LogComplex>;
    fn green(&self, fam: &AtomFamily, t: f64, z: Complex64) -> Result<LogComplex>;

    /// `Gμ(t, z)` for several `z` at once; backends may share work across them.
    fn green_many(&self, fam: &AtomFamily, t: f64, zs: &[Complex64]) -> Result<Vec<LogComplex>> {
        zs.iter().map(|&z| self.green(fam, t, z)).collect()
    }
}

/// Log-space closed forms; the production path.
#[derive(Debug, Clone, Copy, Default)]
pub struct SeriesBackend;

impl TransformBackend for SeriesBackend {
    fn name(&self) -> &'static str {
        "series"
    }
    fn laplace(&self, fam: &AtomFamily, tp: TimePoint) -> Result<LogComplex> {
        Ok(series::laplace(fam, tp))
    }
    fn primitive(&self, fam: &AtomFamily, tp: TimePoint) -> Result<LogComplex> {
        Ok(series::primitive(fam, tp))
    }
    fn green(&self, fam: &AtomFamily, t: f64, z: Complex64) -> Result<LogComplex> {
        series::green(fam, t, z)
    }
}

/// Extended-precision atom sum; the arbiter for small blocks.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleBackend {
    pub settings: OracleSettings,
}

impl TransformBackend for OracleBackend {
    fn name(&self) -> &'static str {
        "oracle"
    }
    fn laplace(&self, fam: &AtomFamily, tp: TimePoint) -> Result<LogComplex> {
        Ok(direct_sum(fam, tp.t, &[Kernel::Laplace], &self.settings)?[0].value)
    }
    fn primitive(&self, fam: &AtomFamily, tp: TimePoint) -> Result<LogComplex> {
        Ok(direct_sum(fam, tp.t, &[Kernel::Primitive], &self.settings)?[0].value)
    }
    fn green(&self, fam: &AtomFamily, t: f64, z: Complex64) -> Result<LogComplex> {
        Ok(direct_sum(fam, t, &[Kernel::Green(z)], &self.settings)?[0].value)
    }
    fn green_many(&self, fam: &AtomFamily, t: f64, zs: &[Complex64]) -> Result<Vec<LogComplex>> {
        let kernels: Vec<Kernel> = zs.iter().map(|&z| Kernel::Green(z)).collect();
        Ok(direct_sum(fam, t, &kernels, &self.settings)?.into_iter().map(|v| v.value).collect())
    }
}

pub const BACKEND_NAMES: &[&str] = &["series", "oracle"];

pub fn backend_by_name(name: &str) -> Result<Box<dyn TransformBackend>> {
    match name {
        "series" => Ok(Box::new(SeriesBackend)),
        "oracle" => Ok(Box::new(OracleBackend::default())),
        _ => Err(Error::UnknownName { kind: "backend", name: name.to_string(), known: BACKEND_NAMES.join(", ") }),
    }
}

/// `Lμ(t)` as a plain complex number (underflows to zero far from the window).
pub fn laplace_l(fam: &AtomFamily, t: f64, backend: &dyn TransformBackend) -> Result<Complex64> {
    check_time(t)?;
    Ok(backend.laplace(fam, TimePoint::at(fam, t))?.to_complex())
}

pub fn primitive_n(fam: &AtomFamily, t: f64, backend: &dyn TransformBackend) -> Result<Complex64> {
    check_time(t)?;
    Ok(backend.primitive(fam, TimePoint::at(fam, t))?.to_complex())
}

/// `Gμ(t, z)`; `z` must lie in the family's analyticity region.
pub fn green_g(fam: &AtomFamily, t: f64, z: Complex64, backend: &dyn TransformBackend) -> Result<Complex64> {
    check_time(t)?;
    if !fam.region_contains(z) {
        return Err(Error::Domain { what: "resolvent point outside the region", value: z.re });
    }
    Ok(backend.green(fam, t, z)?.to_complex())
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain { what: "time", value: t });
    }
    Ok(())
}

/// Relative gap of two log-polar values, with `floor` guarding the scale.
pub fn relative_gap(a: LogComplex, b: LogComplex, floor: f64) -> f64 {
    let diff = a.add(b.neg());
    if diff.is_zero() {
        return 0.0;
    }
    let scale = a.ln_abs.max(b.ln_abs).max(floor.ln());
    (diff.ln_abs - scale).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_lookup() {
        assert_eq!(backend_by_name("series").unwrap().name(), "series");
        assert_eq!(backend_by_name("oracle").unwrap().name(), "oracle");
        assert!(matches!(backend_by_name("fft"), Err(Error::UnknownName { .. })));
    }

    #[test]
    fn series_agrees_with_oracle_small_k() {
        let fam = AtomFamily::power_law(2.0, 2.0, 5.0, None).unwrap();
        let (s, o) = (SeriesBackend, OracleBackend::default());
        for t in [1.0, 5.0, 10.0] {
            let tp = TimePoint::at(&fam, t);
            let gap = relative_gap(s.laplace(&fam, tp).unwrap(), o.laplace(&fam, tp).unwrap(), 1e-30);
            assert!(gap <= 1e-10, "L at t = {t}: {gap}");
            let gap = relative_gap(s.primitive(&fam, tp).unwrap(), o.primitive(&fam, tp).unwrap(), 1e-30);
            assert!(gap <= 1e-10, "N at t = {t}: {gap}");
        }
    }

    #[test]
    fn series_agrees_with_oracle_k30() {
        let fam = AtomFamily::power_law(2.0, 2.0, 30.0, None).unwrap();
        let (s, o) = (SeriesBackend, OracleBackend::default());
        let z = Complex64::new(0.5, fam.h + 3.0);
        for t in [0.5, 15.0, 30.0, 47.0, 90.0, 400.0] {
            let tp = TimePoint::at(&fam, t);
            for (a, b) in [
                (s.laplace(&fam, tp).unwrap(), o.laplace(&fam, tp).unwrap()),
                (s.primitive(&fam, tp).unwrap(), o.primitive(&fam, tp).unwrap()),
                (s.green(&fam, t, z).unwrap(), o.green(&fam, t, z).unwrap()),
            ] {
                let gap = relative_gap(a, b, 1e-300);
                assert!(gap <= 1e-10, "t = {t}: gap {gap}, {} vs {}", a.ln_abs, b.ln_abs);
            }
        }
    }

    #[test]
    fn region_check_on_green() {
        let fam = AtomFamily::power_law(2.0, 2.0, 10.0, None).unwrap();
        assert!(green_g(&fam, 1.0, fam.w, &SeriesBackend).is_err());
        assert!(green_g(&fam, 1.0, Complex64::new(3.0, 0.0), &SeriesBackend).is_ok());
    }
}
