//! Finite-difference damped wave systems `u_tt = u_xx - a u_t` in first-order form.

use crate::error::{invalid, Error, Result};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    /// Interval with `u = 0` at both ends; `n` interior nodes.
    Dirichlet,
    /// Circle of circumference `L`; `n` nodes.
    Periodic,
}

/// Damping profiles on `[0, L]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case", deny_unknown_fields)]
pub enum Damping {
    Uniform { value: f64 },
    /// `value` on `[from·L, to·L]`, zero elsewhere.
    Localized { value: f64, from: f64, to: f64 },
}

impl Damping {
    pub fn sample(&self, n: usize, length: f64, bc: BoundaryCondition) -> Vec<f64> {
        (0..n)
            .map(|j| {
                let x = node(j, n, length, bc) / length;
                match *self {
                    Damping::Uniform { value } => value,
                    Damping::Localized { value, from, to } => {
                        if x >= from && x <= to {
                            value
                        } else {
                            0.0
                        }
                    }
                }
            })
            .collect()
    }
}

/// Position of node `j`.
pub fn node(j: usize, n: usize, length: f64, bc: BoundaryCondition) -> f64 {
    match bc {
        BoundaryCondition::Dirichlet => length * (j + 1) as f64 / (n + 1) as f64,
        BoundaryCondition::Periodic => length * j as f64 / n as f64,
    }
}

/// The assembled system. State vectors are `(u, u_t)` of length `2n`.
#[derive(Debug, Clone)]
pub struct DampedWaveSystem {
    pub n: usize,
    pub length: f64,
    pub damping: Vec<f64>,
    pub bc: BoundaryCondition,
    pub h: f64,
    /// The 3-point Laplacian.
    pub laplacian: DMatrix<f64>,
    /// `[[0, I], [Δ_h, -diag(a)]]`.
    pub generator: DMatrix<f64>,
    /// Gram matrix of the energy inner product, `E(x) = ½ xᵀ W x` on the damped part.
    pub energy_gram: DMatrix<f64>,
    /// Spectral projection onto the constant mode (periodic only).
    pub projector: Option<DMatrix<f64>>,
}

/// The semigroup written in coordinates orthonormal for the energy inner
/// product, restricted to `range(I - P₀)` when there is a constant mode.
///
/// `coords · x` maps a physical state to coordinates; `basis · y` maps back.
#[derive(Debug, Clone)]
pub struct EnergyFrame {
    pub generator: DMatrix<f64>,
    pub coords: DMatrix<f64>,
    pub basis: DMatrix<f64>,
}

pub fn assemble_damped_wave(n: usize, length: f64, damping: &[f64], bc: BoundaryCondition) -> Result<DampedWaveSystem> {
    if n < 3 {
        return Err(invalid("n", format!("need at least 3 grid points, got {n}")));
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(invalid("length", format!("must be positive, got {length}")));
    }
    if damping.len() != n {
        return Err(invalid("damping", format!("expected {n} nodal values, got {}", damping.len())));
    }
    if let Some((j, a)) = damping.iter().enumerate().find(|(_, a)| !(**a >= 0.0 && a.is_finite())) {
        return Err(invalid("damping", format!("negative or non-finite value {a} at node {j}")));
    }
    let h = match bc {
        BoundaryCondition::Dirichlet => length / (n + 1) as f64,
        BoundaryCondition::Periodic => length / n as f64,
    };
    let mut lap = DMatrix::<f64>::zeros(n, n);
    let inv_h2 = 1.0 / (h * h);
    for j in 0..n {
        lap[(j, j)] = -2.0 * inv_h2;
        if j + 1 < n {
            lap[(j, j + 1)] = inv_h2;
            lap[(j + 1, j)] = inv_h2;
        }
    }
    if bc == BoundaryCondition::Periodic {
        lap[(0, n - 1)] = inv_h2;
        lap[(n - 1, 0)] = inv_h2;
    }
    let mut gen = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for j in 0..n {
        gen[(j, n + j)] = 1.0;
        gen[(n + j, n + j)] = -damping[j];
    }
    gen.view_mut((n, 0), (n, n)).copy_from(&lap);

    let mut energy = DMatrix::<f64>::zeros(2 * n, 2 * n);
    energy.view_mut((0, 0), (n, n)).copy_from(&(-&lap * h));
    for j in 0..n {
        energy[(n + j, n + j)] = h;
    }

    let projector = if bc == BoundaryCondition::Periodic {
        let total: f64 = damping.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Spectrum("periodic system without damping has no spectral gap at 0".into()));
        }
        // kernel of G is spanned by (1, 0); the left kernel by (a, 1)
        let mut p = DMatrix::<f64>::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                p[(i, j)] = damping[j] / total;
                p[(i, n + j)] = 1.0 / total;
            }
        }
        // make range(P₀) orthogonal to range(I - P₀): W = QᵀW_EQ + h P₀ᵀP₀ with Q = I - P₀
        let q = DMatrix::<f64>::identity(2 * n, 2 * n) - &p;
        energy = q.transpose() * &energy * &q + p.transpose() * &p * h;
        Some(p)
    } else {
        None
    };

    Ok(DampedWaveSystem { n, length, damping: damping.to_vec(), bc, h, laplacian: lap, generator: gen, energy_gram: energy, projector })
}

impl DampedWaveSystem {
    pub fn with_profile(n: usize, length: f64, profile: Damping, bc: BoundaryCondition) -> Result<Self> {
        assemble_damped_wave(n, length, &profile.sample(n, length, bc), bc)
    }

    /// `E(x) = ½(‖∇u‖² + ‖u_t‖²)` in the discrete norms.
    pub fn energy(&self, x: &DVector<f64>) -> f64 {
        let n = self.n;
        let u = x.rows(0, n);
        let v = x.rows(n, n);
        let grad = -(u.transpose() * (&self.laplacian * u))[(0, 0)];
        0.5 * self.h * (grad + v.norm_squared())
    }

    /// `h Σ a_j |v_j|²`, the instantaneous energy loss.
    pub fn dissipation(&self, x: &DVector<f64>) -> f64 {
        let n = self.n;
        self.h * (0..n).map(|j| self.damping[j] * x[n + j] * x[n + j]).sum::<f64>()
    }

    pub fn energy_inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (x.transpose() * &self.energy_gram * y)[(0, 0)]
    }

    /// Orthonormal energy coordinates; reduced by `P₀` for periodic systems.
    pub fn frame(&self) -> Result<EnergyFrame> {
        let dim = 2 * self.n;
        let chol = self.energy_gram.clone().cholesky().ok_or_else(|| Error::Linalg("energy Gram matrix is not positive definite".into()))?;
        let l = chol.l();
        let lt = l.transpose();
        let lt_inv = lt.clone().try_inverse().ok_or_else(|| Error::Linalg("singular Cholesky factor".into()))?;
        let (coords, basis) = match &self.projector {
            None => (lt, lt_inv),
            Some(p) => {
                // in energy coordinates P₀ is an orthogonal projection; keep its complement
                let ph = &lt * p * &lt_inv;
                let comp = DMatrix::<f64>::identity(dim, dim) - ph;
                let sym = (&comp + comp.transpose()) * 0.5;
                let eig = SymmetricEigen::new(sym);
                let keep: Vec<usize> = (0..dim).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
                if keep.len() != dim - 1 {
                    return Err(Error::Linalg(format!("projector complement has rank {}, expected {}", keep.len(), dim - 1)));
                }
                let q = DMatrix::from_columns(&keep.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>());
                (q.transpose() * lt, lt_inv * q)
            }
        };
        let generator = &coords * &self.generator * &basis;
        Ok(EnergyFrame { generator, coords, basis })
    }
}

impl EnergyFrame {
    pub fn dim(&self) -> usize {
        self.generator.nrows()
    }

    /// Symmetric square root of `-(G + G*)`, with tiny negative eigenvalues clipped.
    pub fn dissipator_sqrt(&self) -> DMatrix<f64> {
        let d = -(&self.generator + self.generator.transpose());
        let eig = SymmetricEigen::new(d);
        let scale = eig.eigenvalues.amax().max(1.0);
        let roots = eig.eigenvalues.map(|l| if l > 1e-14 * scale { l.sqrt() } else { 0.0 });
        &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
    }

    pub fn inverse_generator(&self) -> Result<DMatrix<f64>> {
        self.generator.clone().try_inverse().ok_or_else(|| Error::Spectrum("generator is not invertible".into()))
    }
}

/// `-(4/h²) sin²(jπ/(2(n+1)))`, `j = 1..n`: the Dirichlet Laplacian spectrum.
pub fn dirichlet_eigenvalues(n: usize, h: f64) -> Vec<f64> {
    (1..=n).map(|j| -4.0 / (h * h) * (j as f64 * std::f64::consts::PI / (2.0 * (n + 1) as f64)).sin().powi(2)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
        DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn undamped_generator_conserves_energy() {
        let sys = assemble_damped_wave(30, 1.0, &vec![0.0; 30], BoundaryCondition::Dirichlet).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let x = random_state(&mut rng, 60);
            let gx = &sys.generator * &x;
            let re = sys.energy_inner(&gx, &x);
            assert!(re.abs() <= 1e-10 * sys.energy_inner(&x, &x).max(1.0), "{re}");
        }
    }

    #[test]
    fn damped_generator_is_dissipative() {
        for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Periodic] {
            let sys = DampedWaveSystem::with_profile(24, 2.0, Damping::Localized { value: 3.0, from: 0.2, to: 0.5 }, bc).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            for _ in 0..50 {
                let x = random_state(&mut rng, 48);
                let re = sys.energy_inner(&(&sys.generator * &x), &x);
                assert!(re <= 1e-10 * sys.energy_inner(&x, &x), "{bc:?}: {re}");
            }
        }
    }

    #[test]
    fn symmetric_part_is_the_damping_block() {
        let a: Vec<f64> = (0..20).map(|j| (j % 3) as f64 * 0.7).collect();
        let sys = assemble_damped_wave(20, 1.0, &a, BoundaryCondition::Dirichlet).unwrap();
        let fr = sys.frame().unwrap();
        // -(G + G*) in energy coordinates; G* is the energy adjoint
        let sym = -(&fr.generator + fr.generator.transpose());
        // physical form: W(G + G*) = WG + GᵀW = -diag(0, 2ha)
        let wg = &sys.energy_gram * &sys.generator;
        let phys = -(&wg + wg.transpose());
        for i in 0..40 {
            for j in 0..40 {
                let expect = if i == j && i >= 20 { 2.0 * sys.h * a[i - 20] } else { 0.0 };
                assert!((phys[(i, j)] - expect).abs() < 1e-9, "({i},{j})");
            }
        }
        let b = fr.dissipator_sqrt();
        assert!((&b * &b - &sym).amax() < 1e-10);
        // the frame is a congruence: y = Lᵀ x with diag(0, √(2a)) acting on the v block
        let x = DVector::from_fn(40, |i, _| (i as f64 * 0.37).sin());
        let bx = &b * (&fr.coords * &x);
        let direct = DVector::from_fn(40, |i, _| if i >= 20 { (2.0 * a[i - 20]).sqrt() * x[i] * sys.h.sqrt() } else { 0.0 });
        assert!((bx - direct).amax() < 1e-10);
    }

    #[test]
    fn dirichlet_laplacian_spectrum() {
        let sys = assemble_damped_wave(15, 1.0, &vec![0.0; 15], BoundaryCondition::Dirichlet).unwrap();
        let mut eig: Vec<f64> = SymmetricEigen::new(sys.laplacian.clone()).eigenvalues.iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        let mut exact = dirichlet_eigenvalues(15, sys.h);
        exact.sort_by(f64::total_cmp);
        for (a, b) in eig.iter().zip(&exact) {
            assert!((a - b).abs() <= 1e-10 * b.abs());
            assert!(*a < 0.0);
        }
    }

    #[test]
    fn periodic_projector_is_spectral() {
        let sys = DampedWaveSystem::with_profile(12, 1.0, Damping::Localized { value: 1.0, from: 0.0, to: 0.3 }, BoundaryCondition::Periodic).unwrap();
        let p = sys.projector.as_ref().unwrap();
        assert!((p * p - p).amax() < 1e-12);
        assert!((&sys.generator * p).amax() < 1e-10);
        assert!((p * &sys.generator).amax() < 1e-10);
        let fr = sys.frame().unwrap();
        assert_eq!(fr.dim(), 23);
        assert!(fr.inverse_generator().is_ok());
    }

    #[test]
    fn negative_damping_rejected() {
        let mut a = vec![0.0; 5];
        a[2] = -1.0;
        assert!(assemble_damped_wave(5, 1.0, &a, BoundaryCondition::Dirichlet).is_err());
        assert!(assemble_damped_wave(2, 1.0, &[0.0; 2], BoundaryCondition::Dirichlet).is_err());
    }
}
