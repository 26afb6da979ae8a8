//! Semigroups sandwiched between bounded operators: the resolvent identity for
//! the Laplace transform of `T₁T(t)AR(ω,A)T₂x` and the `L^p` smoothing bound.

use super::scan::DecaySeries;
use crate::error::{invalid, Error, Result};
use crate::numeric::expm::expm;
use crate::numeric::quad::gauss_legendre;
use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct CutoffProblem {
    /// Generator in coordinates where the norm is Euclidean.
    pub generator: DMatrix<f64>,
    pub left: DMatrix<f64>,
    pub right: DMatrix<f64>,
    pub x: DVector<f64>,
    pub omega: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LpCheck {
    pub p: f64,
    /// `‖T₁T(·)R(ω,A)T₂x‖_p` on the quadrature grid.
    pub smoothed: f64,
    /// `ω^{-1}‖T₁T(·)T₂x‖_p` on the same grid.
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CutoffReport {
    pub spectral_abscissa: f64,
    pub lambdas: Vec<Complex64>,
    /// Relative gap between quadrature and the resolvent formula at each `λ`.
    pub identity_residuals: Vec<f64>,
    pub lp: Vec<LpCheck>,
    pub decay: DecaySeries,
    pub pass: bool,
}

/// Largest real part in the spectrum.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> Result<f64> {
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 10_000).ok_or_else(|| Error::Linalg("Schur decomposition did not converge".into()))?;
    Ok(schur.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

fn resolvent_apply(a: &DMatrix<f64>, lambda: Complex64, y: &DVector<f64>) -> Result<DVector<Complex64>> {
    let n = a.nrows();
    let m = DMatrix::<Complex64>::identity(n, n) * lambda - a.map(|v| Complex64::new(v, 0.0));
    m.lu().solve(&y.map(|v| Complex64::new(v, 0.0))).ok_or_else(|| Error::Spectrum(format!("λ = {lambda} is in the spectrum")))
}

fn c(v: &DVector<f64>) -> DVector<Complex64> {
    v.map(|x| Complex64::new(x, 0.0))
}

/// Runs both checks with Gauss-Legendre panels of width `panel` on `[0, t_end]`.
///
/// `t_end` must be long enough for the orbit to be negligible; the truncation
/// is not estimated.
pub fn cutoff_transform_check(prob: &CutoffProblem, lambdas: &[Complex64], ps: &[f64], t_end: f64, panel: f64, tol: f64) -> Result<CutoffReport> {
    let a = &prob.generator;
    let n = a.nrows();
    if !a.is_square() || prob.left.ncols() != n || prob.right.nrows() != n || prob.right.ncols() != prob.x.len() {
        return Err(invalid("cutoff problem", "dimension mismatch"));
    }
    let abscissa = spectral_abscissa(a)?;
    if !(prob.omega > abscissa.max(0.0)) {
        return Err(Error::Spectrum(format!("ω = {} must exceed max(ω₀, 0) = {}", prob.omega, abscissa.max(0.0))));
    }
    if let Some(l) = lambdas.iter().find(|l| !(l.re > abscissa)) {
        return Err(Error::Spectrum(format!("λ = {l} is not right of the spectrum (ω₀ = {abscissa})")));
    }
    if !(t_end > 0.0 && panel > 0.0) {
        return Err(invalid("t_end", "need positive horizon and panel width"));
    }

    let t2x = &prob.right * &prob.x;
    let r_omega = resolvent_apply(a, Complex64::new(prob.omega, 0.0), &t2x)?.map(|z| z.re);
    // A R(ω,A) = ω R(ω,A) - I
    let y = &r_omega * prob.omega - &t2x;

    let panels = (t_end / panel).ceil() as usize;
    let width = t_end / panels as f64;
    let order = 16;
    let (xs, ws) = gauss_legendre(order);
    let offsets: Vec<f64> = xs.iter().map(|x| 0.5 * width * (1.0 + x)).collect();
    let node_props: Vec<DMatrix<f64>> = offsets.iter().map(|o| expm(&(a * *o))).collect::<Result<_>>()?;
    let step = expm(&(a * width))?;

    let mut times = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    let mut f_vals = Vec::with_capacity(panels * order);
    let mut smooth_norms = Vec::with_capacity(panels * order);
    let mut plain_norms = Vec::with_capacity(panels * order);
    let (mut sy, mut sr, mut sx) = (y.clone(), r_omega.clone(), t2x.clone());
    for p in 0..panels {
        let start = p as f64 * width;
        for (k, prop) in node_props.iter().enumerate() {
            times.push(start + offsets[k]);
            weights.push(0.5 * width * ws[k]);
            f_vals.push(&prob.left * (prop * &sy));
            smooth_norms.push((&prob.left * (prop * &sr)).norm());
            plain_norms.push((&prob.left * (prop * &sx)).norm());
        }
        sy = &step * sy;
        sr = &step * sr;
        sx = &step * sx;
    }

    let mut identity_residuals = vec![];
    for &lam in lambdas {
        let mut acc = DVector::<Complex64>::zeros(prob.left.nrows());
        for i in 0..times.len() {
            acc += c(&f_vals[i]) * ((-lam * times[i]).exp() * weights[i]);
        }
        let r_lam = resolvent_apply(a, lam, &t2x)?;
        let w = Complex64::new(prob.omega, 0.0);
        let exact = prob.left.map(|v| Complex64::new(v, 0.0)) * (r_lam * (lam / (w - lam)) - c(&r_omega) * (w / (w - lam)));
        identity_residuals.push((&acc - &exact).norm() / exact.norm().max(f64::MIN_POSITIVE));
    }

    let lp_norm = |vals: &[f64], p: f64| -> f64 {
        if p.is_infinite() {
            vals.iter().fold(0.0, |m: f64, v| m.max(*v))
        } else {
            vals.iter().zip(&weights).map(|(v, w)| w * v.powf(p)).sum::<f64>().powf(1.0 / p)
        }
    };
    let lp: Vec<LpCheck> = ps
        .iter()
        .map(|&p| {
            let smoothed = lp_norm(&smooth_norms, p);
            let bound = lp_norm(&plain_norms, p) / prob.omega;
            LpCheck { p, smoothed, bound, pass: smoothed <= bound * (1.0 + 1e-6) }
        })
        .collect();

    let decay = DecaySeries::new("|T1 T(t) R(w,A) T2 x|", times, smooth_norms)?;
    let pass = identity_residuals.iter().all(|r| *r <= tol) && lp.iter().all(|c| c.pass);
    Ok(CutoffReport { spectral_abscissa: abscissa, lambdas: lambdas.to_vec(), identity_residuals, lp, decay, pass })
}

/// Projection onto the `u` and `u_t` values at nodes in `[from·L, to·L]`, in energy coordinates.
pub fn spatial_cutoff(sys: &super::wave::DampedWaveSystem, frame: &super::wave::EnergyFrame, from: f64, to: f64) -> DMatrix<f64> {
    let n = sys.n;
    let mut diag = DVector::<f64>::zeros(2 * n);
    for j in 0..n {
        let x = super::wave::node(j, n, sys.length, sys.bc) / sys.length;
        if x >= from && x <= to {
            diag[j] = 1.0;
            diag[n + j] = 1.0;
        }
    }
    &frame.coords * DMatrix::from_diagonal(&diag) * &frame.basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semigroup::wave::{BoundaryCondition, DampedWaveSystem, Damping};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn system() -> (DampedWaveSystem, crate::semigroup::wave::EnergyFrame) {
        let sys = DampedWaveSystem::with_profile(16, 1.0, Damping::Uniform { value: 1.0 }, BoundaryCondition::Dirichlet).unwrap();
        let fr = sys.frame().unwrap();
        (sys, fr)
    }

    fn sample_lambdas(rng: &mut ChaCha8Rng, count: usize) -> Vec<Complex64> {
        (0..count).map(|_| Complex64::new(rng.gen_range(0.5..3.0), rng.gen_range(-20.0..20.0))).collect()
    }

    #[test]
    fn identity_without_cutoffs() {
        let (_, fr) = system();
        let dim = fr.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
        let prob = CutoffProblem { generator: fr.generator.clone(), left: DMatrix::identity(dim, dim), right: DMatrix::identity(dim, dim), x, omega: 1.0 };
        let rep = cutoff_transform_check(&prob, &sample_lambdas(&mut rng, 4), &[1.0, 2.0, f64::INFINITY], 80.0, 0.25, 1e-6).unwrap();
        assert!(rep.pass, "{:?} {:?}", rep.identity_residuals, rep.lp);
        assert!(rep.spectral_abscissa < 0.0);
    }

    #[test]
    fn identity_with_spatial_cutoffs() {
        let (sys, fr) = system();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = DVector::from_fn(fr.dim(), |_, _| rng.gen_range(-1.0..1.0));
        let prob = CutoffProblem { generator: fr.generator.clone(), left: spatial_cutoff(&sys, &fr, 0.0, 0.5), right: spatial_cutoff(&sys, &fr, 0.3, 0.9), x, omega: 0.7 };
        let rep = cutoff_transform_check(&prob, &sample_lambdas(&mut rng, 10), &[1.0, 2.0, f64::INFINITY], 80.0, 0.25, 1e-6).unwrap();
        assert!(rep.pass, "{:?} {:?}", rep.identity_residuals, rep.lp);
    }

    #[test]
    fn omega_left_of_spectrum_rejected() {
        let (_, fr) = system();
        let dim = fr.dim();
        let prob = CutoffProblem { generator: fr.generator.clone(), left: DMatrix::identity(dim, dim), right: DMatrix::identity(dim, dim), x: DVector::zeros(dim), omega: 0.0 };
        assert!(cutoff_transform_check(&prob, &[], &[2.0], 10.0, 0.5, 1e-6).is_err());
    }
}
