//! Time stepping by matrix exponentials and the energy balance check.

use super::wave::DampedWaveSystem;
use crate::error::{invalid, Error, Result};
use crate::numeric::expm::expm;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    /// Largest local error estimate met while building the step propagators.
    pub local_error: f64,
}

struct Stepper {
    dt: f64,
    prop: DMatrix<f64>,
}

/// Propagator for one step of length `dt`, split into substeps until a step
/// and two half steps agree to `tol` on the probe vector.
fn propagator(gen: &DMatrix<f64>, dt: f64, probe: &DVector<f64>, tol: f64) -> Result<(DMatrix<f64>, f64)> {
    let scale = probe.norm().max(1.0);
    let mut parts = 1u32;
    loop {
        let sub = dt / parts as f64;
        if sub < 1e-14 * dt.max(1.0) {
            return Err(Error::StepUnderflow { index: 0 });
        }
        let full = expm(&(gen * sub))?;
        let half = expm(&(gen * (0.5 * sub)))?;
        let err = (&full * probe - &half * (&half * probe)).norm() / scale;
        if err <= tol {
            let mut p = full.clone();
            for _ in 1..parts {
                p = &full * p;
            }
            return Ok((p, err));
        }
        parts *= 2;
    }
}

/// Solves `x' = G x` on `t_grid` starting from `x0` at `t_grid[0]`.
pub fn evolve(gen: &DMatrix<f64>, x0: &DVector<f64>, t_grid: &[f64], tol: f64) -> Result<Trajectory> {
    if !(tol > 0.0) {
        return Err(invalid("tol", format!("must be positive, got {tol}")));
    }
    if t_grid.is_empty() || gen.nrows() != x0.len() || !gen.is_square() {
        return Err(invalid("evolve", "empty grid or dimension mismatch"));
    }
    let mut steppers: Vec<Stepper> = vec![];
    let mut states = vec![x0.clone()];
    let mut local_error = 0f64;
    for i in 1..t_grid.len() {
        let dt = t_grid[i] - t_grid[i - 1];
        if !(dt > 0.0) {
            return Err(Error::StepUnderflow { index: i });
        }
        let pos = steppers.iter().position(|s| (s.dt - dt).abs() <= 1e-12 * dt);
        let idx = match pos {
            Some(p) => p,
            None => {
                let (prop, err) = propagator(gen, dt, &states[i - 1], tol)?;
                local_error = local_error.max(err);
                steppers.push(Stepper { dt, prop });
                steppers.len() - 1
            }
        };
        let next = &steppers[idx].prop * &states[i - 1];
        states.push(next);
    }
    Ok(Trajectory { t: t_grid.to_vec(), states, local_error })
}

impl DampedWaveSystem {
    /// `evolve` for the physical system; errors if the energy grows by more than `tol·E(0)` in a step.
    pub fn evolve(&self, x0: &DVector<f64>, t_grid: &[f64], tol: f64) -> Result<Trajectory> {
        let traj = evolve(&self.generator, x0, t_grid, tol)?;
        let e0 = self.energy(x0).max(f64::MIN_POSITIVE);
        let mut prev = self.energy(x0);
        for i in 1..traj.states.len() {
            let e = self.energy(&traj.states[i]);
            if e - prev > tol * e0 {
                return Err(Error::EnergyIncrease { t0: traj.t[i - 1], t1: traj.t[i], growth: e - prev });
            }
            prev = e;
        }
        Ok(traj)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergyCheck {
    pub initial_energy: f64,
    /// `max |dE/dt + h Σ a_j |u_t,j|²| / E(0)` over interior grid times.
    pub max_residual: f64,
    /// Largest `dE/dt` estimate; the dissipation sign requires it to be `<= 0` up to the residual.
    pub max_derivative: f64,
    /// Largest growth `E(t_{i+1}) - E(t_i)` relative to `E(0)`.
    pub max_increase: f64,
}

/// Compares a fourth-order central difference of `E` with the dissipation functional.
pub fn energy_derivative_check(sys: &DampedWaveSystem, traj: &Trajectory) -> Result<EnergyCheck> {
    let m = traj.t.len();
    if m < 5 {
        return Err(invalid("trajectory", "need at least 5 time points"));
    }
    let dt = traj.t[1] - traj.t[0];
    if traj.t.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt) {
        return Err(invalid("trajectory", "central differences need a uniform time grid"));
    }
    let e: Vec<f64> = traj.states.iter().map(|x| sys.energy(x)).collect();
    let e0 = e[0];
    if !(e0 > 0.0) {
        return Err(invalid("trajectory", "initial energy is zero"));
    }
    let mut max_residual = 0f64;
    let mut max_derivative = f64::NEG_INFINITY;
    for i in 2..m - 2 {
        let de = (e[i - 2] - 8.0 * e[i - 1] + 8.0 * e[i + 1] - e[i + 2]) / (12.0 * dt);
        max_residual = max_residual.max((de + sys.dissipation(&traj.states[i])).abs() / e0);
        max_derivative = max_derivative.max(de);
    }
    let max_increase = e.windows(2).map(|w| (w[1] - w[0]) / e0).fold(f64::NEG_INFINITY, f64::max);
    Ok(EnergyCheck { initial_energy: e0, max_residual, max_derivative, max_increase })
}

/// A smooth bump `u = exp(-((x - centre)/width)²)`, `u_t = 0`, sampled on the grid.
pub fn bump_state(sys: &DampedWaveSystem, centre: f64, width: f64) -> DVector<f64> {
    let n = sys.n;
    DVector::from_fn(2 * n, |i, _| {
        if i < n {
            let x = super::wave::node(i, n, sys.length, sys.bc);
            (-((x - centre) / width).powi(2)).exp()
        } else {
            0.0
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semigroup::wave::{dirichlet_eigenvalues, BoundaryCondition, Damping};
    use num_complex::Complex64;

    fn grid(t_end: f64, steps: usize) -> Vec<f64> {
        (0..=steps).map(|i| t_end * i as f64 / steps as f64).collect()
    }

    #[test]
    fn undamped_energy_is_conserved() {
        let sys = DampedWaveSystem::with_profile(40, 1.0, Damping::Uniform { value: 0.0 }, BoundaryCondition::Dirichlet).unwrap();
        let x0 = bump_state(&sys, 0.4, 0.1);
        let tol = 1e-10;
        let traj = sys.evolve(&x0, &grid(100.0, 400), tol).unwrap();
        let e0 = sys.energy(&x0);
        for x in &traj.states {
            assert!((sys.energy(x) - e0).abs() <= 10.0 * tol * e0);
        }
    }

    #[test]
    fn evolution_is_linear() {
        let sys = DampedWaveSystem::with_profile(20, 1.0, Damping::Localized { value: 1.0, from: 0.5, to: 0.9 }, BoundaryCondition::Dirichlet).unwrap();
        let x = bump_state(&sys, 0.3, 0.1);
        let y = DVector::from_fn(40, |i, _| (i as f64).cos());
        let g = grid(3.0, 30);
        let a = sys.evolve(&x, &g, 1e-10).unwrap();
        let b = sys.evolve(&y, &g, 1e-10).unwrap();
        let c = sys.evolve(&(&x + &y), &g, 1e-10).unwrap();
        for i in 0..g.len() {
            assert!((&a.states[i] + &b.states[i] - &c.states[i]).norm() <= 1e-10 * c.states[i].norm().max(1.0));
        }
    }

    #[test]
    fn uniform_damping_matches_modes() {
        // per-mode oracle: sine transform, then exp(tB) for B = [[0, ω], [-ω, -1]] in (ω û, v̂)
        let n = 30;
        let sys = DampedWaveSystem::with_profile(n, 1.0, Damping::Uniform { value: 1.0 }, BoundaryCondition::Dirichlet).unwrap();
        let x0 = bump_state(&sys, 0.35, 0.1);
        let g = grid(6.0, 12);
        let traj = sys.evolve(&x0, &g, 1e-10).unwrap();
        let norm = (2.0 / (n + 1) as f64).sqrt();
        let sine = |i: usize, j: usize| norm * (((i + 1) * (j + 1)) as f64 * std::f64::consts::PI / (n + 1) as f64).sin();
        let lam = dirichlet_eigenvalues(n, sys.h);
        for (k, &t) in g.iter().enumerate() {
            let mut energy = 0.0;
            for j in 0..n {
                let w = (-lam[j]).sqrt();
                let uh: f64 = (0..n).map(|i| sine(i, j) * x0[i]).sum();
                let vh: f64 = (0..n).map(|i| sine(i, j) * x0[n + i]).sum();
                let mu = Complex64::new(-0.5, 0.0);
                let delta = Complex64::new(0.25 - w * w, 0.0).sqrt();
                let ch = (delta * t).cosh();
                let sh = if delta.norm() < 1e-12 { Complex64::new(t, 0.0) } else { (delta * t).sinh() / delta };
                let e = (mu * t).exp();
                // exp(tB) = e^{μt}[cosh(δt) I + sinh(δt)/δ (B - μ I)]
                let b = [[0.5, w], [-w, -0.5]];
                let p = w * uh;
                let q = vh;
                let p1 = e * (ch * p + sh * (b[0][0] * p + b[0][1] * q));
                let q1 = e * (ch * q + sh * (b[1][0] * p + b[1][1] * q));
                energy += 0.5 * sys.h * (p1.norm_sqr() + q1.norm_sqr());
            }
            let got = sys.energy(&traj.states[k]);
            assert!((got - energy).abs() <= 1e-6 * sys.energy(&x0), "t = {t}: {got} vs {energy}");
        }
    }

    #[test]
    fn energy_balance_small_system() {
        let sys = DampedWaveSystem::with_profile(60, 1.0, Damping::Localized { value: 2.0, from: 0.5, to: 0.8 }, BoundaryCondition::Dirichlet).unwrap();
        let x0 = bump_state(&sys, 0.3, 0.1);
        let traj = sys.evolve(&x0, &grid(1.0, 2000), 1e-10).unwrap();
        let chk = energy_derivative_check(&sys, &traj).unwrap();
        assert!(chk.max_residual <= 1e-6, "{chk:?}");
        assert!(chk.max_increase <= 1e-10);
        assert!(chk.max_derivative <= 1e-6 * chk.initial_energy);
    }

    #[test]
    fn undamped_residual_is_differencing_noise() {
        let sys = DampedWaveSystem::with_profile(20, 1.0, Damping::Uniform { value: 0.0 }, BoundaryCondition::Dirichlet).unwrap();
        let x0 = bump_state(&sys, 0.5, 0.15);
        let traj = sys.evolve(&x0, &grid(1.0, 200), 1e-12).unwrap();
        assert!(energy_derivative_check(&sys, &traj).unwrap().max_residual < 1e-9);
    }
}
