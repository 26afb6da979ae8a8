use crate::atoms::{AtomFamily, TimePoint, TransformBackend};
use crate::error::{invalid, Result};
use crate::numeric::quad::{integrate_with_breaks, QuadOptions};
use crate::weights::{omega_m_contains, RateFunction};
use num_complex::Complex64;
use std::sync::Arc;

/// Where the transform is known to be analytic.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Entire,
    /// `Re z > bound`.
    RightOf(f64),
    Rate(RateFunction),
    /// The half-plane right of the atom circle, with a margin of one radius.
    Family(AtomFamily),
}

impl Region {
    pub fn contains(&self, z: Complex64) -> bool {
        match self {
            Region::Entire => true,
            Region::RightOf(x) => z.re > *x,
            Region::Rate(m) => omega_m_contains(m, z),
            Region::Family(fam) => z.re > fam.w.re + 2.0 / fam.a,
        }
    }
}

type TimeFn = dyn Fn(f64) -> Complex64 + Send + Sync;
type FreqFn = dyn Fn(Complex64) -> Result<Complex64> + Send + Sync;

/// A function on the half-line together with the analytic extension of its Laplace transform.
#[derive(Clone)]
pub struct TransformPair {
    pub label: String,
    f: Arc<TimeFn>,
    fhat: Arc<FreqFn>,
    /// `f̂(0)`.
    pub fhat0: Complex64,
    pub region: Region,
    /// Time beyond which `f` is negligible, if known. Lets the right arc use the
    /// tail integral instead of the cancelling difference `f̂ - f̂_t`.
    pub horizon: Option<f64>,
    /// Rough angular frequency of `f`, used to size quadrature panels.
    pub bandwidth: f64,
}

impl std::fmt::Debug for TransformPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TransformPair").field("label", &self.label).field("fhat0", &self.fhat0).field("region", &self.region).finish()
    }
}

impl TransformPair {
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
        fhat: impl Fn(Complex64) -> Result<Complex64> + Send + Sync + 'static,
        fhat0: Complex64,
        region: Region,
    ) -> Self {
        TransformPair { label: label.into(), f: Arc::new(f), fhat: Arc::new(fhat), fhat0, region, horizon: None, bandwidth: 1.0 }
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = Some(horizon);
        self
    }

    pub fn with_bandwidth(mut self, bandwidth: f64) -> Self {
        self.bandwidth = bandwidth;
        self
    }

    pub fn f(&self, t: f64) -> Complex64 {
        (self.f)(t)
    }

    pub fn fhat(&self, z: Complex64) -> Result<Complex64> {
        (self.fhat)(z)
    }

    /// `f(t) = e^{-a t}`, `f̂(z) = 1/(z + a)`.
    pub fn exp_decay(a: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(invalid("a", format!("decay rate must be positive, got {a}")));
        }
        let horizon = 45.0 / a;
        Ok(TransformPair::new(
            format!("exp(-{a} t)"),
            move |t| Complex64::new((-a * t).exp(), 0.0),
            move |z| Ok(1.0 / (z + a)),
            Complex64::new(1.0 / a, 0.0),
            Region::RightOf(-a),
        )
        .with_horizon(horizon))
    }

    /// `f(t) = e^{p t}` with `Re p < 0`; the pole of `f̂` is the only obstruction.
    pub fn simple_pole(p: Complex64) -> Result<Self> {
        if !(p.re < 0.0) {
            return Err(invalid("p", format!("pole must lie in the left half-plane, got {p}")));
        }
        let horizon = 45.0 / -p.re;
        Ok(TransformPair::new(
            format!("exp(({p}) t)"),
            move |t| (p * t).exp(),
            move |z| Ok(1.0 / (z - p)),
            -1.0 / p,
            Region::Entire,
        )
        .with_horizon(horizon)
        .with_bandwidth(p.im.abs() + 1.0))
    }

    /// `f = Lμ`, `f̂ = Gμ(0, ·)` for an atom block.
    pub fn atom_block(fam: AtomFamily, backend: Arc<dyn TransformBackend>) -> Self {
        let b2 = backend.clone();
        let horizon = 1.2 * fam.a + 80.0;
        let bandwidth = fam.h + 1.0;
        TransformPair::new(
            format!("atom block k = {}", fam.k),
            move |t| backend.laplace(&fam, TimePoint::at(&fam, t)).map(|v| v.to_complex()).unwrap_or(Complex64::new(f64::NAN, f64::NAN)),
            move |z| Ok(b2.green(&fam, 0.0, z)?.to_complex()),
            Complex64::new(0.0, 0.0),
            Region::Family(fam),
        )
        .with_horizon(horizon)
        .with_bandwidth(bandwidth)
    }

    /// `g(t) = f̂(0) - ∫_0^t f` by adaptive quadrature; the reference for smooth pairs.
    pub fn g_by_quadrature(&self, t: f64) -> Complex64 {
        let breaks = oscillation_breaks(0.0, t, self.bandwidth);
        let r = integrate_with_breaks(|s| self.f(s), 0.0, t, &breaks, QuadOptions { abs_tol: 1e-14, rel_tol: 1e-13, max_intervals: 20_000 });
        self.fhat0 - r.value
    }

    /// `|∫_0^T e^{-zt} f(t) dt - f̂(z)| / |f̂(z)|`.
    pub fn laplace_gap(&self, z: Complex64, t_end: f64) -> Result<f64> {
        let breaks = oscillation_breaks(0.0, t_end, self.bandwidth + z.im.abs());
        let r = integrate_with_breaks(|s| (-z * s).exp() * self.f(s), 0.0, t_end, &breaks, QuadOptions { abs_tol: 1e-16, rel_tol: 1e-12, max_intervals: 50_000 });
        let exact = self.fhat(z)?;
        Ok((r.value - exact).norm() / exact.norm().max(f64::MIN_POSITIVE))
    }
}

/// Break points roughly every half period of `e^{iωs}` on `[a, b]`, capped at 4000.
pub(crate) fn oscillation_breaks(a: f64, b: f64, omega: f64) -> Vec<f64> {
    let len = (b - a).abs();
    if omega <= 0.0 || len == 0.0 {
        return vec![];
    }
    let n = ((len * omega / std::f64::consts::PI).ceil() as usize).min(4000);
    (1..n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::SeriesBackend;

    #[test]
    fn exp_pair_is_consistent() {
        let p = TransformPair::exp_decay(1.0).unwrap();
        assert!(p.laplace_gap(Complex64::new(1.0, 2.0), 60.0).unwrap() < 1e-10);
        assert!((p.g_by_quadrature(2.0) - Complex64::new((-2f64).exp(), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn atom_pair_laplace_transform_spot_check() {
        let fam = AtomFamily::power_law(2.0, 2.0, 10.0, None).unwrap();
        let p = TransformPair::atom_block(fam, Arc::new(SeriesBackend));
        for z in [Complex64::new(1.0, 0.0), Complex64::new(3.0, 0.0), Complex64::new(1.5, 4.0)] {
            assert!(p.laplace_gap(z, p.horizon.unwrap()).unwrap() < 1e-6, "z = {z}");
        }
    }
}
