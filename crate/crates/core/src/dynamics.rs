//! Linear stochastic model over the state `(z_1..z_N, p_1..p_N)`: drift,
//! noise intensity, stability and stationary covariance.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::binding::BindingMatrices;
use crate::c;
use crate::error::{Error, Result};
use crate::scenario::ArrayScenario;

/// Drift `A`, noise intensity `N` and constant forcing of the linear model
/// `dx = (A x + b) dt + dW`, `<dW dW^T> = N dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub drift: DMatrix<f64>,
    pub noise: DMatrix<f64>,
    /// Constant forces, entering the momentum rows.
    pub forces: DVector<f64>,
    pub mass: DVector<f64>,
    /// Bare trap frequencies, used for time-step bounds.
    pub omega: DVector<f64>,
}

impl LinearModel {
    /// Model from explicit ingredients.
    ///
    /// `d` is the complex diffusion matrix; only `2 Re D` enters the noise.
    /// `thermal` is `k_B T` of the gas, adding `2 m gamma k_B T` per particle.
    pub fn from_parts(
        mass: &DVector<f64>,
        omega: &DVector<f64>,
        coupling: &DMatrix<f64>,
        gamma: f64,
        d: &DMatrix<Complex64>,
        forces: &DVector<f64>,
        thermal: Option<f64>,
    ) -> Result<Self> {
        let n = mass.len();
        let square = |m: usize, r: usize| m == n && r == n;
        if omega.len() != n
            || !square(coupling.nrows(), coupling.ncols())
            || !square(d.nrows(), d.ncols())
            || forces.len() != n
        {
            return Err(Error::DimensionMismatch(format!(
                "model inputs for {n} particles have inconsistent shapes"
            )));
        }
        if !(gamma >= 0.0) {
            return Err(Error::invalid("gamma", "damping must be non-negative"));
        }
        let mut drift = DMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            drift[(j, n + j)] = 1.0 / mass[j];
            let k_j: f64 = (0..n).filter(|jp| *jp != j).map(|jp| coupling[(j, jp)]).sum();
            drift[(n + j, j)] = -(mass[j] * omega[j] * omega[j] + k_j);
            for jp in 0..n {
                if jp != j {
                    drift[(n + j, jp)] = coupling[(j, jp)];
                }
            }
            drift[(n + j, n + j)] = -gamma;
        }
        let mut noise = DMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            for jp in 0..n {
                noise[(n + j, n + jp)] = 2.0 * d[(j, jp)].re;
            }
            if let Some(kt) = thermal {
                noise[(n + j, n + j)] += 2.0 * mass[j] * gamma * kt;
            }
        }
        // Re of a Hermitian matrix is symmetric up to roundoff
        let noise = 0.5 * (&noise + noise.transpose());
        Ok(LinearModel {
            drift,
            noise,
            forces: forces.clone(),
            mass: mass.clone(),
            omega: omega.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn dim(&self) -> usize {
        2 * self.len()
    }

    /// Constant forcing vector `b = (0, F)`.
    pub fn forcing(&self) -> DVector<f64> {
        let n = self.len();
        DVector::from_fn(2 * n, |i, _| if i < n { 0.0 } else { self.forces[i - n] })
    }

    /// Diagonal state scaling `x = S y` with `z = y / sqrt(m w)` and
    /// `p = y sqrt(m w)`, `w` the largest bare trap frequency. In `y` the
    /// drift entries are all of order `w`; in SI they span ~25 decades.
    pub fn balancing(&self) -> DVector<f64> {
        let n = self.len();
        let w = self.omega.iter().copied().filter(|w| *w > 0.0).fold(0.0, f64::max);
        let w = if w > 0.0 { w } else { 1.0 };
        DVector::from_fn(2 * n, |i, _| {
            let s = (self.mass[i % n] * w).sqrt();
            if i < n {
                1.0 / s
            } else {
                s
            }
        })
    }

    /// Drift and noise in balanced coordinates: `S^-1 A S`, `S^-1 N S^-1`.
    pub fn balanced(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let s = self.balancing();
        let a = DMatrix::from_fn(self.dim(), self.dim(), |i, j| self.drift[(i, j)] * s[j] / s[i]);
        let q = DMatrix::from_fn(self.dim(), self.dim(), |i, j| self.noise[(i, j)] / (s[i] * s[j]));
        (a, q)
    }

    /// Equilibrium state `x = -A^{-1} b`.
    pub fn equilibrium(&self) -> Result<DVector<f64>> {
        let lu = self.drift.clone().lu();
        let b = -self.forcing();
        lu.solve(&b).ok_or(Error::Singular(f64::INFINITY))
    }
}

/// Linear model of a physical scenario.
pub fn build_linear_model(scenario: &ArrayScenario, matrices: &BindingMatrices) -> Result<LinearModel> {
    if matrices.len() != scenario.len() {
        return Err(Error::DimensionMismatch(format!(
            "matrices for {} particles, scenario has {}",
            matrices.len(),
            scenario.len()
        )));
    }
    let thermal = scenario
        .gas
        .thermal_noise
        .then_some(scenario.constants.k_b * scenario.gas.temperature);
    LinearModel::from_parts(
        &matrices.mass,
        &matrices.omega,
        &matrices.c,
        scenario.gas.damping,
        &matrices.d,
        &matrices.f,
        thermal,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Marginal,
    Unstable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// Eigenvalues sorted by decreasing real part.
    pub eigenvalues: Vec<Complex64>,
    pub max_real: f64,
    pub class: Stability,
}

impl StabilityReport {
    /// The eigenvalue with the largest real part.
    pub fn leading(&self) -> Complex64 {
        self.eigenvalues[0]
    }
}

/// Eigenvalues of the drift; marginal within `1e-12 |A|` of the imaginary axis.
pub fn stability_spectrum(model: &LinearModel) -> StabilityReport {
    let (a, _) = model.balanced();
    let mut eigenvalues: Vec<Complex64> = a.complex_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(|a, b| b.re.total_cmp(&a.re));
    let max_real = eigenvalues.first().map(|z| z.re).unwrap_or(f64::NEG_INFINITY);
    let eps = 1e-12 * a.norm();
    let class = if max_real.abs() <= eps {
        Stability::Marginal
    } else if max_real < 0.0 {
        Stability::Stable
    } else {
        Stability::Unstable
    };
    StabilityReport {
        eigenvalues,
        max_real,
        class,
    }
}

/// Stationary covariance with the relative residual of the Lyapunov equation.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub covariance: DMatrix<f64>,
    pub residual: f64,
    pub mean: DVector<f64>,
}

/// Solves `A S + S A^T + N = 0` for a Hurwitz-stable model.
pub fn steady_state_covariance(model: &LinearModel) -> Result<SteadyState> {
    let report = stability_spectrum(model);
    if report.class != Stability::Stable {
        let z = report.leading();
        return Err(Error::Unstable { re: z.re, im: z.im });
    }
    let (a, q) = model.balanced();
    let sb = model.balancing();
    let y = lyapunov(&a, &q)?;
    let covariance = DMatrix::from_fn(y.nrows(), y.ncols(), |i, j| y[(i, j)] * sb[i] * sb[j]);
    let residual = lyapunov_residual(&a, &y, &q);
    Ok(SteadyState {
        covariance,
        residual,
        mean: model.equilibrium()?,
    })
}

/// `|A S + S A^T + N| / |N|` (absolute when `N = 0`).
pub fn lyapunov_residual(a: &DMatrix<f64>, s: &DMatrix<f64>, n: &DMatrix<f64>) -> f64 {
    let r = a * s + s * a.transpose() + n;
    let scale = n.norm();
    if scale > 0.0 {
        r.norm() / scale
    } else {
        r.norm()
    }
}

/// Bartels–Stewart solve of `A X + X A^T + Q = 0` via the complex Schur form
/// `A = U T U^*`, followed by triangular back substitution.
pub fn lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || q.nrows() != n || q.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "Lyapunov operands {}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    let ac = a.map(|x| c(x, 0.0));
    let (u, t) = nalgebra::Schur::new(ac).unpack();
    let m = u.adjoint() * q.map(|x| c(x, 0.0)) * &u;
    let mut y = DMatrix::from_element(n, n, c(0.0, 0.0));
    let scale = a.norm().max(f64::MIN_POSITIVE);
    for j in (0..n).rev() {
        for i in (0..n).rev() {
            let mut rhs = -m[(i, j)];
            for k in (i + 1)..n {
                rhs -= t[(i, k)] * y[(k, j)];
            }
            for k in (j + 1)..n {
                rhs -= y[(i, k)] * t[(j, k)].conj();
            }
            let denom = t[(i, i)] + t[(j, j)].conj();
            if denom.norm() <= 1e-14 * scale {
                return Err(Error::Singular(scale / denom.norm().max(f64::MIN_POSITIVE)));
            }
            y[(i, j)] = rhs / denom;
        }
    }
    let x = &u * y * u.adjoint();
    let x = x.map(|z| z.re);
    Ok(0.5 * (&x + x.transpose()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(mass: f64, omega: f64, gamma: f64, d: f64) -> LinearModel {
        LinearModel::from_parts(
            &DVector::from_element(1, mass),
            &DVector::from_element(1, omega),
            &DMatrix::zeros(1, 1),
            gamma,
            &DMatrix::from_element(1, 1, c(d, 0.0)),
            &DVector::zeros(1),
            None,
        )
        .unwrap()
    }

    #[test]
    fn si_scaled_oscillator_is_resolved() {
        // levitated-particle scales: 1/m ~ 1e18 against m w^2 ~ 1e-8
        let (mass, w, g, d) = (1.15e-18, 9.5e4, 1e3, 3e-40);
        let m = single(mass, w, g, d);
        let r = stability_spectrum(&m);
        assert_eq!(r.class, Stability::Stable);
        assert!((r.max_real + g / 2.0).abs() < 1e-9 * g, "{}", r.max_real);
        let s = steady_state_covariance(&m).unwrap();
        let pp = 2.0 * d / (2.0 * g);
        assert!((s.covariance[(1, 1)] / pp - 1.0).abs() < 1e-10);
        assert!((s.covariance[(0, 0)] / (pp / (mass * w).powi(2)) - 1.0).abs() < 1e-10);
        assert!(s.residual < 1e-12);
    }

    fn kron_oracle(a: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
        // vec(AX + XA^T) = (I (x) A + A (x) I) vec(X)
        let n = a.nrows();
        let id = DMatrix::<f64>::identity(n, n);
        let big = id.kronecker(a) + a.kronecker(&id);
        let rhs = DVector::from_iterator(n * n, q.iter().map(|x| -x));
        let sol = big.lu().solve(&rhs).unwrap();
        DMatrix::from_column_slice(n, n, sol.as_slice())
    }

    #[test]
    fn harmonic_oscillator_spectrum() {
        let m = single(2.0, 3.0, 0.0, 1.0);
        let r = stability_spectrum(&m);
        assert_eq!(r.class, Stability::Marginal);
        for z in &r.eigenvalues {
            assert!(z.re.abs() < 1e-12 && (z.im.abs() - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn damped_oscillator_spectrum() {
        let (w, g) = (5.0, 0.4);
        let r = stability_spectrum(&single(1.0, w, g, 1.0));
        assert_eq!(r.class, Stability::Stable);
        let expected = (w * w - g * g / 4.0).sqrt();
        for z in &r.eigenvalues {
            assert!((z.re + g / 2.0).abs() < 1e-12);
            assert!((z.im.abs() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn single_particle_recoil_covariance() {
        let (mass, w, g, d) = (3.0, 10.0, 0.01, 2.0);
        let s = steady_state_covariance(&single(mass, w, g, d)).unwrap();
        assert!(s.residual < 1e-10);
        assert!((s.covariance[(1, 1)] / (d / g) - 1.0).abs() < 1e-12);
        assert!((s.covariance[(0, 0)] / (d / (g * mass * mass * w * w)) - 1.0).abs() < 1e-12);
        assert!(s.covariance[(0, 1)].abs() < 1e-12 * s.covariance[(1, 1)]);
    }

    #[test]
    fn zero_noise_gives_zero_covariance() {
        let s = steady_state_covariance(&single(1.0, 2.0, 0.5, 0.0)).unwrap();
        assert_eq!(s.covariance.norm(), 0.0);
    }

    #[test]
    fn unstable_model_rejected() {
        let mut m = single(1.0, 2.0, 0.5, 1.0);
        m.drift[(1, 1)] = 0.5;
        assert!(matches!(steady_state_covariance(&m), Err(Error::Unstable { .. })));
    }

    #[test]
    fn lyapunov_matches_kronecker_oracle() {
        let n = 6;
        let a = DMatrix::from_fn(n, n, |i, j| {
            let x = ((i * 7 + j * 3) % 11) as f64 / 11.0 - 0.5;
            if i == j {
                x - 3.0
            } else {
                x
            }
        });
        let b = DMatrix::from_fn(n, n, |i, j| ((i * 5 + j * 2) % 7) as f64 / 7.0);
        let q = &b * b.transpose();
        let x = lyapunov(&a, &q).unwrap();
        let oracle = kron_oracle(&a, &q);
        assert!((&x - &oracle).norm() <= 1e-10 * oracle.norm());
    }

    #[test]
    fn equilibrium_offset_of_single_particle() {
        let mut m = single(2.0, 3.0, 0.1, 1.0);
        m.forces[0] = 0.9;
        let x = m.equilibrium().unwrap();
        assert!((x[0] - 0.9 / (2.0 * 9.0)).abs() < 1e-15);
        assert!(x[1].abs() < 1e-15);
    }

    #[test]
    fn symmetric_coupling_gives_oscillatory_spectrum() {
        let mass = DVector::from_vec(alloc::vec![1.0, 1.0, 1.0]);
        let omega = DVector::from_vec(alloc::vec![10.0, 11.0, 12.0]);
        let cm = DMatrix::from_row_slice(3, 3, &[0.0, 3.0, -1.0, 3.0, 0.0, 2.0, -1.0, 2.0, 0.0]);
        let d = DMatrix::from_element(3, 3, c(0.0, 0.0));
        let f = DVector::zeros(3);
        let undamped = LinearModel::from_parts(&mass, &omega, &cm, 0.0, &d, &f, None).unwrap();
        for z in stability_spectrum(&undamped).eigenvalues {
            assert!(z.re.abs() < 1e-10);
        }
        let damped = LinearModel::from_parts(&mass, &omega, &cm, 0.6, &d, &f, None).unwrap();
        for z in stability_spectrum(&damped).eigenvalues {
            assert!((z.re + 0.3).abs() < 1e-10);
        }
    }
}
