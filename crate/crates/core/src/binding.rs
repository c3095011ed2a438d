//! Linearized optical binding: coupling, diffusion, spring and force terms
//! for spheres displaced along the beam axis.
//!
//! Fields enter through the complex focus amplitudes `E_j = |E_j| e^{i phi_j} e_j`.
//! Particles may carry different susceptibilities; the products `chi^2`
//! become `chi_j chi_j'` in the pair terms.

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::particle::{radiation_correction, ParticleSpec};
use crate::quadrature::{neville, GaussLegendre};
use crate::scenario::{ArrayScenario, GasSpec, MIN_SEPARATION_PHASE, MIN_SEPARATION_WAISTS};
use crate::tweezer::{trap_frequency, TweezerSpec};
use crate::{c, CVec3, PhysicalConstants, Vec3};

/// All matrices of the linearized model, SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct BindingMatrices {
    /// Coupling constants, N/m, zero diagonal.
    pub c: DMatrix<f64>,
    /// Momentum diffusion, kg^2 m^2 / s^3, Hermitian.
    pub d: DMatrix<Complex64>,
    /// Spring renormalizations (row sums of `c`), N/m.
    pub k: DVector<f64>,
    /// Constant axial forces, N.
    pub f: DVector<f64>,
    /// Bare trap frequencies, rad/s.
    pub omega: DVector<f64>,
    /// Particle masses, kg.
    pub mass: DVector<f64>,
    /// Indices of particles whose size parameter exceeds the small-particle
    /// limit of the radiation correction.
    pub size_warnings: Vec<usize>,
}

impl BindingMatrices {
    pub fn len(&self) -> usize {
        self.c.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.c.nrows() == 0
    }

    /// Renormalized frequencies `sqrt(omega_j^2 + K_j / m_j)`; NaN where the
    /// effective spring is negative.
    pub fn renormalized_frequencies(&self) -> DVector<f64> {
        DVector::from_fn(self.len(), |j, _| {
            (self.omega[j] * self.omega[j] + self.k[j] / self.mass[j]).sqrt()
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct SphereData {
    chi: f64,
    volume: f64,
}

fn sphere_data(scenario: &ArrayScenario) -> Result<Vec<SphereData>> {
    scenario.check()?;
    scenario
        .particles
        .iter()
        .map(|p| {
            if !p.is_sphere() {
                return Err(Error::invalid(
                    "particles",
                    "the binding model is implemented for spheres only",
                ));
            }
            Ok(SphereData {
                chi: p.susceptibility()?[(0, 0)],
                volume: p.volume(),
            })
        })
        .collect()
}

fn projector(n: &Vec3) -> Matrix3<Complex64> {
    let p = Matrix3::identity() - n * n.transpose();
    p.map(|x| c(x, 0.0))
}

/// `a^* . P b` for complex vectors.
fn projected_product(a: &CVec3, p: &Matrix3<Complex64>, b: &CVec3) -> Complex64 {
    a.conjugate().dot(&(p * b))
}

/// Pair factor `e^{ikd} E_j^* . P E_j'` and distance.
fn pair_term(scenario: &ArrayScenario, j: usize, jp: usize) -> (Complex64, f64) {
    let d = scenario.distance(j, jp);
    let k = scenario.wavenumber();
    let p = projector(&scenario.direction(j, jp));
    let ej = scenario.tweezers[j].focus_field();
    let ejp = scenario.tweezers[jp].focus_field();
    let phase = c((k * d).cos(), (k * d).sin());
    (phase * projected_product(&ej, &p, &ejp), d)
}

/// Coupling matrix `C_jj'`.
pub fn coupling_matrix(scenario: &ArrayScenario) -> Result<DMatrix<f64>> {
    let data = sphere_data(scenario)?;
    let n = scenario.len();
    let eps0 = scenario.constants.epsilon0;
    let k = scenario.wavenumber();
    let kappa = scenario.kappa();
    let mut cm = DMatrix::zeros(n, n);
    for j in 0..n {
        for jp in 0..n {
            if j == jp {
                continue;
            }
            let (term, d) = pair_term(scenario, j, jp);
            let pref = eps0 * data[j].chi * data[jp].chi * data[j].volume * data[jp].volume * k * k * kappa * kappa
                / (8.0 * PI * d);
            cm[(j, jp)] = pref * term.re;
        }
    }
    Ok(cm)
}

/// Momentum diffusion matrix `D_jj'`.
pub fn diffusion_matrix(scenario: &ArrayScenario) -> Result<DMatrix<Complex64>> {
    let data = sphere_data(scenario)?;
    let n = scenario.len();
    let PhysicalConstants { epsilon0, hbar, .. } = scenario.constants;
    let k = scenario.wavenumber();
    let kappa = scenario.kappa();
    let mut dm = DMatrix::from_element(n, n, c(0.0, 0.0));
    for j in 0..n {
        let e2 = scenario.tweezers[j].amplitude.norm_sqr();
        let s = &data[j];
        dm[(j, j)] = c(
            hbar * epsilon0
                * s.chi
                * s.chi
                * s.volume
                * s.volume
                * k.powi(3)
                * e2
                * (5.0 * kappa * kappa + 2.0 * k * k)
                / (120.0 * PI),
            0.0,
        );
        for jp in 0..n {
            if jp == j {
                continue;
            }
            let d = scenario.distance(j, jp);
            let p = projector(&scenario.direction(j, jp));
            let ej = scenario.tweezers[j].focus_field();
            let ejp = scenario.tweezers[jp].focus_field();
            let pref = hbar * epsilon0 * s.chi * data[jp].chi * s.volume * data[jp].volume * k * k * kappa * kappa
                / (16.0 * PI * d);
            dm[(j, jp)] = projected_product(&ejp, &p, &ej) * (pref * (k * d).sin());
        }
    }
    Ok(dm)
}

/// `K_j = sum_{j' != j} C_jj'`.
pub fn spring_renormalization(c: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_fn(c.nrows(), |j, _| {
        (0..c.ncols()).filter(|jp| *jp != j).map(|jp| c[(j, jp)]).sum()
    })
}

/// Constant axial forces: radiation pressure of the own tweezer plus the
/// binding contribution. Positive values push along +z.
pub fn static_forces(scenario: &ArrayScenario) -> Result<DVector<f64>> {
    let data = sphere_data(scenario)?;
    let n = scenario.len();
    let eps0 = scenario.constants.epsilon0;
    let k = scenario.wavenumber();
    let kappa = scenario.kappa();
    Ok(DVector::from_fn(n, |j, _| {
        let s = &data[j];
        let own = 2.0 / 3.0 * s.chi * s.chi * s.volume * s.volume * k * scenario.tweezers[j].amplitude.norm_sqr();
        let pairs: f64 = (0..n)
            .filter(|jp| *jp != j)
            .map(|jp| {
                let (term, d) = pair_term(scenario, j, jp);
                s.chi * data[jp].chi * s.volume * data[jp].volume / d * term.im
            })
            .sum();
        eps0 * k * k * kappa / (8.0 * PI) * (own + pairs)
    }))
}

/// Bare trap frequencies with the radiation-corrected susceptibility along
/// each tweezer's polarization. Also returns the indices of particles outside
/// the small-particle regime of that correction.
pub fn trap_frequencies(scenario: &ArrayScenario) -> Result<(DVector<f64>, Vec<usize>)> {
    scenario.check()?;
    let k = scenario.wavenumber();
    let mut omega = DVector::zeros(scenario.len());
    let mut flagged = Vec::new();
    for (j, (p, t)) in scenario.particles.iter().zip(&scenario.tweezers).enumerate() {
        let rc = radiation_correction(p, k)?;
        if rc.outside_small_particle_regime() {
            flagged.push(j);
        }
        let chi_tilde = p.susceptibility()? + rc.delta_chi;
        let e = t.polarization;
        omega[j] = trap_frequency(p, t, e.dot(&(chi_tilde * e)), &scenario.constants)?;
    }
    Ok((omega, flagged))
}

/// Assembles every matrix of the linear model.
pub fn binding_matrices(scenario: &ArrayScenario) -> Result<BindingMatrices> {
    let c = coupling_matrix(scenario)?;
    let d = diffusion_matrix(scenario)?;
    let k = spring_renormalization(&c);
    let f = static_forces(scenario)?;
    let (omega, size_warnings) = trap_frequencies(scenario)?;
    let mass = DVector::from_iterator(scenario.len(), scenario.particles.iter().map(|p| p.mass));
    Ok(BindingMatrices {
        c,
        d,
        k,
        f,
        omega,
        mass,
        size_warnings,
    })
}

/// Outcome of comparing `C - C^T` with `(4/hbar) Im D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport {
    pub max_deviation: f64,
    /// `max |C|`, the normalization of the deviation.
    pub scale: f64,
    pub tolerance: f64,
}

impl IdentityReport {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.max_deviation / self.scale
        } else {
            self.max_deviation
        }
    }

    pub fn passed(&self) -> bool {
        self.relative() <= self.tolerance
    }
}

/// Checks `C_jj' - C_j'j = (4/hbar) Im D_jj'` over all pairs.
pub fn structural_identity_check(c: &DMatrix<f64>, d: &DMatrix<Complex64>, hbar: f64) -> IdentityReport {
    let n = c.nrows();
    let mut max_deviation: f64 = 0.0;
    for j in 0..n {
        for jp in 0..n {
            let dev = (c[(j, jp)] - c[(jp, j)] - 4.0 / hbar * d[(j, jp)].im).abs();
            max_deviation = max_deviation.max(dev);
        }
    }
    IdentityReport {
        max_deviation,
        scale: c.amax(),
        tolerance: 1e-10,
    }
}

/// Diffusion matrix rebuilt from the angular distribution of scattered
/// photons, with the estimated quadrature error relative to
/// `sqrt(D_jj D_j'j')`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularDiffusion {
    pub d: DMatrix<Complex64>,
    pub error_estimate: f64,
}

/// Number of distance points used to isolate the `1/d` order.
const ORDER_POINTS: usize = 6;

/// Reconstructs `D` by integrating the recoil of photons scattered into the
/// direction `n` over the sphere:
///
/// `D_jj' = hbar eps0 k^3 chi_j chi_j' V_j V_j' / 64 pi^2
///          \int dOmega E_j'^* . (1 - n n) E_j (kappa - k n_z)^2 e^{-ik n.(d_j - d_j')}`.
///
/// For `j != j'` the integral is a finite sum of `e^{+-ikd}/(kd)^m` terms, so
/// `kd * I` evaluated at `kd + 2 pi m` (integer `m`) is a polynomial in
/// `1/kd` with fixed phase; its value at `1/kd = 0` is the leading far-field
/// order, extracted by polynomial extrapolation over roughly doubling
/// distances.
pub fn diffusion_from_angular_integral(scenario: &ArrayScenario) -> Result<AngularDiffusion> {
    let data = sphere_data(scenario)?;
    let n = scenario.len();
    let PhysicalConstants { epsilon0, hbar, .. } = scenario.constants;
    let k = scenario.wavenumber();
    let kappa = scenario.kappa();
    let mut dm = DMatrix::from_element(n, n, c(0.0, 0.0));
    let mut worst: f64 = 0.0;
    let mut rules = RuleCache::default();
    let pref = |j: usize, jp: usize| {
        hbar * epsilon0 * k.powi(3) * data[j].chi * data[jp].chi * data[j].volume * data[jp].volume / (64.0 * PI * PI)
    };
    let integrand = |j: usize, jp: usize| {
        let ej = scenario.tweezers[j].focus_field();
        let ejp = scenario.tweezers[jp].focus_field();
        move |nv: &Vec3| {
            let cn = nv.map(|x| c(x, 0.0));
            let proj = ejp.conjugate().dot(&ej) - ejp.conjugate().dot(&cn) * cn.dot(&ej);
            let w = kappa - k * nv.z;
            proj * (w * w)
        }
    };
    for j in 0..n {
        dm[(j, j)] = angular_integral(&Vec3::z(), 0.0, rules.get(8), &integrand(j, j)) * pref(j, j);
    }
    for j in 0..n {
        for jp in 0..n {
            if j == jp {
                continue;
            }
            let g = integrand(j, jp);
            // errors are measured against sqrt(D_jj D_j'j'), since sin(k d) nodes
            // make individual off-diagonal entries vanish
            let x0 = k * scenario.distance(j, jp);
            let to_d = pref(j, jp) / x0;
            let scale = (dm[(j, j)].re * dm[(jp, jp)].re).sqrt().max(f64::MIN_POSITIVE);
            let axis = scenario.direction(j, jp);
            let mut ts = [0.0; ORDER_POINTS];
            let mut re = [0.0; ORDER_POINTS];
            let mut im = [0.0; ORDER_POINTS];
            for m in 0..ORDER_POINTS {
                // same phase as x0, distances doubling
                let shift = (x0 * ((1u32 << m) as f64 - 1.0) / (2.0 * PI)).round();
                let x = x0 + 2.0 * PI * shift;
                let nodes = ((x + 40.0) / 64.0).ceil() as usize * 64;
                let v = angular_integral(&axis, x, rules.get(nodes), &g);
                let refined = angular_integral(&axis, x, rules.get(nodes + 64), &g);
                worst = worst.max(x * (v - refined).norm() * to_d / scale);
                ts[m] = 1.0 / x;
                re[m] = x * refined.re;
                im[m] = x * refined.im;
            }
            let lead = c(neville(&ts, &re, 0.0), neville(&ts, &im, 0.0));
            // one point fewer gives the extrapolation error
            let lower = c(
                neville(&ts[..ORDER_POINTS - 1], &re[..ORDER_POINTS - 1], 0.0),
                neville(&ts[..ORDER_POINTS - 1], &im[..ORDER_POINTS - 1], 0.0),
            );
            worst = worst.max((lead - lower).norm() * to_d / scale);
            dm[(j, jp)] = lead * to_d;
        }
    }
    if worst > 1e-6 {
        return Err(Error::QuadratureNotConverged {
            estimate: worst,
            tolerance: 1e-6,
        });
    }
    Ok(AngularDiffusion {
        d: dm,
        error_estimate: worst,
    })
}

/// `\int dOmega g(n) e^{-i x n.axis}` with the polar axis along `axis`:
/// Gauss–Legendre in `cos(theta)` resolves the oscillation, while `g` is a
/// trigonometric polynomial of low degree in the azimuth.
fn angular_integral(axis: &Vec3, x: f64, rule: &GaussLegendre, g: &impl Fn(&Vec3) -> Complex64) -> Complex64 {
    let u = axis.normalize();
    let helper = if u.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = (helper - u * u.dot(&helper)).normalize();
    let e2 = u.cross(&e1);
    const AZIMUTH: usize = 16;
    let dphi = 2.0 * PI / AZIMUTH as f64;
    let mut acc = c(0.0, 0.0);
    for (mu, w) in rule.mapped(-1.0, 1.0) {
        let s = (1.0 - mu * mu).sqrt();
        let phase = c((x * mu).cos(), -(x * mu).sin());
        let mut ring = c(0.0, 0.0);
        for m in 0..AZIMUTH {
            let phi = m as f64 * dphi;
            let nv = u * mu + (e1 * phi.cos() + e2 * phi.sin()) * s;
            ring += g(&nv);
        }
        acc += phase * ring * (w * dphi);
    }
    acc
}

#[derive(Default)]
struct RuleCache {
    rules: Vec<GaussLegendre>,
}

impl RuleCache {
    fn get(&mut self, nodes: usize) -> &GaussLegendre {
        match self.rules.iter().position(|r| r.len() == nodes) {
            Some(i) => &self.rules[i],
            None => {
                self.rules.push(GaussLegendre::new(nodes));
                self.rules.last().expect("just pushed")
            }
        }
    }
}

/// Input for the unidirectional two-particle configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairTemplate {
    pub particles: [ParticleSpec; 2],
    pub waist: f64,
    pub wavelength: f64,
    /// Focus field magnitudes, V/m.
    pub fields: [f64; 2],
    /// Polarization angles measured from the direction perpendicular to the
    /// connecting axis (in the focal plane).
    pub theta: [f64; 2],
    pub gas: GasSpec,
    pub constants: PhysicalConstants,
}

/// Smallest `n` for which `k d = pi/4 + 2 pi n` passes the far-field gates.
pub fn minimal_pair_order(waist: f64, wavelength: f64) -> u32 {
    crate::scenario::ChainGeometry::minimal_order(waist, wavelength)
}

/// Two tweezers along x with `k d = pi/4 + 2 pi n` and `phi_1 - phi_2 = pi/4`,
/// so that particle 2 drives particle 1 without back-action (`C_21 = 0`).
/// With `order = None` the smallest admissible `n` is used.
pub fn unidirectional_pair(template: &PairTemplate, order: Option<u32>) -> Result<ArrayScenario> {
    let minimal = minimal_pair_order(template.waist, template.wavelength);
    let n = order.unwrap_or(minimal);
    let kd = 0.25 * PI + 2.0 * PI * n as f64;
    let d = kd * template.wavelength / (2.0 * PI);
    if kd <= MIN_SEPARATION_PHASE || d <= MIN_SEPARATION_WAISTS * template.waist {
        return Err(Error::FarFieldOrder { requested: n, minimal });
    }
    let phases = [0.25 * PI, 0.0];
    let foci = [Vec3::zeros(), Vec3::new(d, 0.0, 0.0)];
    let tweezers = (0..2)
        .map(|j| {
            TweezerSpec::new(
                foci[j],
                template.waist,
                template.wavelength,
                template.fields[j],
                phases[j],
                0.5 * PI - template.theta[j],
            )
        })
        .collect::<Result<Vec<_>>>()?;
    ArrayScenario::new(template.particles.to_vec(), tweezers, template.gas, template.constants)
}

/// Closed-form coupling of the unidirectional pair,
/// `eps0 chi_1 chi_2 V_1 V_2 k^2 kappa^2 |E_1||E_2| cos(Theta_1) cos(Theta_2) / 8 pi d`.
pub fn unidirectional_coupling(scenario: &ArrayScenario, theta: [f64; 2]) -> Result<f64> {
    let data = sphere_data(scenario)?;
    if scenario.len() != 2 {
        return Err(Error::DimensionMismatch(alloc::format!(
            "expected 2 particles, got {}",
            scenario.len()
        )));
    }
    let k = scenario.wavenumber();
    let kappa = scenario.kappa();
    let d = scenario.distance(0, 1);
    Ok(scenario.constants.epsilon0
        * data[0].chi
        * data[1].chi
        * data[0].volume
        * data[1].volume
        * k
        * k
        * kappa
        * kappa
        * scenario.tweezers[0].field_magnitude()
        * scenario.tweezers[1].field_magnitude()
        * theta[0].cos()
        * theta[1].cos()
        / (8.0 * PI * d))
}

/// Real vector helper for tests and callers building polarizations.
pub fn in_plane(angle: f64) -> Vector3<f64> {
    Vec3::new(angle.cos(), angle.sin(), 0.0)
}
