//! Single-particle optical response of homogeneous dielectric ellipsoids.
//!
//! Ellipsoids are described by their full diameters along the principal
//! axes, which are taken to coincide with the laboratory x, y, z axes.

use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::quadrature::{adaptive_gauss_kronrod, GaussLegendre};
use crate::{RealTensor3, Vec3};

/// Size parameter `k * max(diameter)` above which the radiation correction
/// is flagged as outside its small-particle regime.
pub const SIZE_PARAMETER_WARNING: f64 = 0.5;

/// Homogeneous dielectric ellipsoid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleSpec {
    /// Full diameters along x, y, z in metres.
    pub diameters: [f64; 3],
    /// Relative permittivity (real, > 1).
    pub epsilon: f64,
    /// Mass in kg.
    pub mass: f64,
}

impl ParticleSpec {
    pub fn ellipsoid(diameters: [f64; 3], epsilon: f64, mass: f64) -> Result<Self> {
        let p = ParticleSpec {
            diameters,
            epsilon,
            mass,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn sphere(radius: f64, epsilon: f64, mass: f64) -> Result<Self> {
        Self::ellipsoid([2.0 * radius; 3], epsilon, mass)
    }

    /// Sphere whose mass follows from a material density in kg/m^3.
    pub fn sphere_with_density(radius: f64, epsilon: f64, density: f64) -> Result<Self> {
        if !(density > 0.0 && density.is_finite()) {
            return Err(Error::invalid("density", "must be positive"));
        }
        let volume = 4.0 / 3.0 * PI * radius.powi(3);
        Self::sphere(radius, epsilon, density * volume)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.diameters.iter().all(|l| *l > 0.0 && l.is_finite()) {
            return Err(Error::invalid("diameters", "all axes must be positive"));
        }
        if !(self.epsilon > 1.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid("epsilon", "relative permittivity must exceed 1"));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::invalid("mass", "must be positive"));
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        PI / 6.0 * self.diameters[0] * self.diameters[1] * self.diameters[2]
    }

    pub fn is_sphere(&self) -> bool {
        self.diameters[0] == self.diameters[1] && self.diameters[1] == self.diameters[2]
    }

    /// Radius of a sphere, `None` for other ellipsoids.
    pub fn radius(&self) -> Option<f64> {
        self.is_sphere().then(|| 0.5 * self.diameters[0])
    }

    pub fn max_diameter(&self) -> f64 {
        self.diameters.iter().copied().fold(0.0, f64::max)
    }

    /// Susceptibility tensor; exact Clausius–Mossotti value for spheres.
    pub fn susceptibility(&self) -> Result<RealTensor3> {
        if self.is_sphere() {
            return Ok(RealTensor3::identity() * sphere_susceptibility(self.epsilon));
        }
        susceptibility(self.epsilon, &depolarization_tensor(self.diameters)?)
    }
}

/// `3 (eps - 1) / (eps + 2)`.
pub fn sphere_susceptibility(epsilon: f64) -> f64 {
    3.0 * (epsilon - 1.0) / (epsilon + 2.0)
}

/// Depolarization tensor of an ellipsoid with the given full diameters.
pub fn depolarization_tensor(diameters: [f64; 3]) -> Result<RealTensor3> {
    if !diameters.iter().all(|l| *l > 0.0 && l.is_finite()) {
        return Err(Error::invalid("diameters", "all axes must be positive"));
    }
    if diameters[0] == diameters[1] && diameters[1] == diameters[2] {
        return Ok(RealTensor3::identity() / 3.0);
    }
    let mut n = Vec3::zeros();
    for i in 0..3 {
        let a = diameters[(i + 1) % 3] / diameters[i];
        let b = diameters[(i + 2) % 3] / diameters[i];
        n[i] = depolarization_factor(a, b)?;
    }
    Ok(RealTensor3::from_diagonal(&n))
}

/// Factor along an axis of unit length, the other two axes being `a` and `b`
/// (relative lengths). After `s = tan^2(theta)` the integrand is bounded on
/// `[0, pi/2]`.
fn depolarization_factor(a: f64, b: f64) -> Result<f64> {
    let (a2, b2) = (a * a, b * b);
    let f = |t: f64| {
        let (s, c) = t.sin_cos();
        let (s2, c2) = (s * s, c * c);
        s * c2 / ((s2 + a2 * c2) * (s2 + b2 * c2)).sqrt()
    };
    let r = adaptive_gauss_kronrod(f, 0.0, 0.5 * PI, 1e-12 / (a * b).max(1e-300), 20_000)?;
    Ok(a * b * r.value)
}

/// Susceptibility tensor in the principal frame from the permittivity and a
/// diagonal depolarization tensor.
pub fn susceptibility(epsilon: f64, depolarization: &RealTensor3) -> Result<RealTensor3> {
    if !(epsilon > 1.0 && epsilon.is_finite()) {
        return Err(Error::invalid("epsilon", "relative permittivity must exceed 1"));
    }
    let off: f64 = (0..3)
        .flat_map(|i| (0..3).filter(move |j| *j != i).map(move |j| (i, j)))
        .map(|(i, j)| depolarization[(i, j)].abs())
        .sum();
    let diag = depolarization.diagonal();
    if off > 0.0 || diag.iter().any(|n| !(0.0..=1.0).contains(n)) {
        return Err(Error::invalid(
            "depolarization",
            "expected a diagonal tensor with eigenvalues in [0, 1]",
        ));
    }
    let x = epsilon - 1.0;
    Ok(RealTensor3::from_diagonal(&diag.map(|n| x / (1.0 + n * x))))
}

/// Polarizability `eps0 V chi` in C m^2 / V.
pub fn polarizability(particle: &ParticleSpec, chi: &RealTensor3, epsilon0: f64) -> RealTensor3 {
    chi * (epsilon0 * particle.volume())
}

/// Radiation correction to the susceptibility and its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiationCorrection {
    pub delta_chi: RealTensor3,
    /// Estimated absolute quadrature error (Frobenius norm).
    pub error_estimate: f64,
    /// `k * max(diameter)`.
    pub size_parameter: f64,
}

impl RadiationCorrection {
    /// True when the particle is too large for the correction to be trusted.
    pub fn outside_small_particle_regime(&self) -> bool {
        self.size_parameter > SIZE_PARAMETER_WARNING
    }
}

/// Radiation correction `delta chi` for a particle at wavenumber `k`.
///
/// The double volume integral of `(|s|^2 1 + s s)/|s|^3` over pairs of points
/// in the ellipsoid depends only on the difference vector. Integrating out the
/// overlap volume of the ellipsoid with its translate reduces it to
/// `(det L)^2 (8 pi / 15) \int dOmega (|L w|^2 1 + L w L w) / |L w|^3` with
/// `L` the diagonal matrix of semi-axes, which is evaluated by product
/// Gauss–Legendre quadrature over the sphere of directions.
pub fn radiation_correction(particle: &ParticleSpec, k: f64) -> Result<RadiationCorrection> {
    particle.validate()?;
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::invalid("k_l", "wavenumber must be positive"));
    }
    let chi = particle.susceptibility()?;
    let semi = Vec3::from_iterator(particle.diameters.iter().map(|l| 0.5 * l));
    let det = semi.x * semi.y * semi.z;
    let (kernel, error) = pair_kernel(&semi)?;
    let scale = det * det * 8.0 * PI / 15.0;
    let pref = k * k / (8.0 * PI * particle.volume()) * scale;
    let delta_chi = chi * kernel * chi * pref;
    let delta_chi = 0.5 * (delta_chi + delta_chi.transpose());
    Ok(RadiationCorrection {
        delta_chi,
        error_estimate: error * pref * chi.norm() * chi.norm(),
        size_parameter: k * particle.max_diameter(),
    })
}

/// Angular integral for the semi-axes `semi`, with a refinement-based error
/// estimate. Rejected if the relative estimate stays above 1e-4.
fn pair_kernel(semi: &Vec3) -> Result<(RealTensor3, f64)> {
    let aspect = semi.max() / semi.min();
    let mut n = (24.0 * aspect.sqrt()).ceil() as usize;
    let mut previous = angular_integral(semi, n);
    let mut change = f64::INFINITY;
    for _ in 0..6 {
        n *= 2;
        let current = angular_integral(semi, n);
        change = (current - previous).norm();
        if change <= 1e-12 * current.norm() {
            return Ok((current, change));
        }
        previous = current;
    }
    if change <= 1e-4 * previous.norm() {
        Ok((previous, change))
    } else {
        Err(Error::QuadratureNotConverged {
            estimate: change / previous.norm(),
            tolerance: 1e-4,
        })
    }
}

fn angular_integral(semi: &Vec3, n: usize) -> RealTensor3 {
    let rule = GaussLegendre::new(n);
    let n_phi = 2 * n;
    let dphi = 2.0 * PI / n_phi as f64;
    let mut acc = RealTensor3::zeros();
    for (u, w) in rule.mapped(-1.0, 1.0) {
        let s = (1.0 - u * u).sqrt();
        for m in 0..n_phi {
            let phi = (m as f64 + 0.5) * dphi;
            let omega = Vec3::new(s * phi.cos(), s * phi.sin(), u);
            let v = semi.component_mul(&omega);
            let r2 = v.norm_squared();
            let r = r2.sqrt();
            acc += (RealTensor3::identity() * r2 + v * v.transpose()) * (w * dphi / (r2 * r));
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_depolarization_is_a_third() {
        let n = depolarization_tensor([1e-7; 3]).unwrap();
        assert_eq!(n, RealTensor3::identity() / 3.0);
    }

    #[test]
    fn quadrature_reproduces_sphere() {
        assert!((depolarization_factor(1.0, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn spheroid_matches_closed_form() {
        // prolate spheroid, eccentricity e: N_long = (1-e^2)/e^3 (atanh e - e)
        let ratio: f64 = 3.0;
        let n = depolarization_tensor([ratio, 1.0, 1.0]).unwrap();
        let e = (1.0 - 1.0 / (ratio * ratio)).sqrt();
        let exact = (1.0 - e * e) / (e * e * e) * (e.atanh() - e);
        assert!((n[(0, 0)] - exact).abs() < 1e-12);
        assert!((n[(1, 1)] - 0.5 * (1.0 - exact)).abs() < 1e-12);
    }

    #[test]
    fn needle_limit() {
        let n = depolarization_tensor([1000.0, 1.0, 1.0]).unwrap();
        assert!(n[(0, 0)] < 1e-2);
        assert!((n[(1, 1)] - 0.5).abs() < 1e-2);
        assert!((n[(2, 2)] - 0.5).abs() < 1e-2);
        assert!((n.trace() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_non_positive_axes() {
        assert!(depolarization_tensor([1.0, 0.0, 1.0]).is_err());
        assert!(ParticleSpec::sphere(-1.0, 2.0, 1.0).is_err());
        assert!(ParticleSpec::sphere(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn silica_susceptibility() {
        let chi = susceptibility(2.1, &(RealTensor3::identity() / 3.0)).unwrap();
        assert!((chi[(0, 0)] - 3.0 * 1.1 / 4.1).abs() < 1e-15);
        let p = ParticleSpec::sphere(1e-7, 2.1, 1e-17).unwrap();
        assert_eq!(p.susceptibility().unwrap()[(2, 2)], sphere_susceptibility(2.1));
    }

    #[test]
    fn susceptibility_limits() {
        let eps = 1.0 + 1e-9;
        let chi = susceptibility(eps, &RealTensor3::from_diagonal(&Vec3::new(0.2, 0.3, 0.5))).unwrap();
        assert!((chi[(1, 1)] / (eps - 1.0) - 1.0).abs() < 1e-8);
        let chi = susceptibility(3.0, &RealTensor3::from_diagonal(&Vec3::new(0.0, 0.5, 0.5))).unwrap();
        assert_eq!(chi[(0, 0)], 2.0);
    }

    #[test]
    fn clausius_mossotti_polarizability() {
        let eps0 = crate::PhysicalConstants::CODATA2018.epsilon0;
        let r = 1e-7;
        let p = ParticleSpec::sphere(r, 2.1, 1e-17).unwrap();
        let alpha = polarizability(&p, &p.susceptibility().unwrap(), eps0);
        let cm = 4.0 * PI * eps0 * r.powi(3) * 1.1 / 4.1;
        assert!((alpha[(0, 0)] - cm).abs() < 1e-14 * cm);
        assert_eq!(polarizability(&p, &RealTensor3::zeros(), eps0), RealTensor3::zeros());
    }

    #[test]
    fn sphere_radiation_correction_closed_form() {
        let k = 2.0 * PI / 1.064e-6;
        let r = 1e-7;
        let p = ParticleSpec::sphere(r, 2.1, 1e-17).unwrap();
        let rc = radiation_correction(&p, k).unwrap();
        let chi = sphere_susceptibility(2.1);
        let exact = 4.0 / 15.0 * chi * chi * (k * r).powi(2);
        for i in 0..3 {
            assert!(
                (rc.delta_chi[(i, i)] - exact).abs() < 1e-12 * exact,
                "{} {}",
                rc.delta_chi[(i, i)],
                exact
            );
        }
        // k d = 1.18 for this particle, so it is flagged
        assert!(rc.outside_small_particle_regime());
        let small = ParticleSpec::sphere(3e-8, 2.1, 1e-19).unwrap();
        assert!(!radiation_correction(&small, k).unwrap().outside_small_particle_regime());
    }

    #[test]
    fn radiation_correction_scales_with_radius_squared() {
        let k = 2.0 * PI / 1.064e-6;
        let a = radiation_correction(&ParticleSpec::sphere(5e-8, 2.1, 1.0).unwrap(), k).unwrap();
        let b = radiation_correction(&ParticleSpec::sphere(1e-7, 2.1, 1.0).unwrap(), k).unwrap();
        assert!((b.delta_chi[(0, 0)] / a.delta_chi[(0, 0)] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn ellipsoid_radiation_correction_is_symmetric_psd() {
        let p = ParticleSpec::ellipsoid([3e-7, 1e-7, 1.5e-7], 2.1, 1e-17).unwrap();
        let rc = radiation_correction(&p, 2.0 * PI / 1.064e-6).unwrap();
        let d = rc.delta_chi;
        assert_eq!(d, d.transpose());
        let eig = d.symmetric_eigenvalues();
        assert!(eig.iter().all(|e| *e > 0.0));
        // longer axis carries the larger correction
        assert!(d[(0, 0)] > d[(2, 2)] && d[(2, 2)] > d[(1, 1)]);
    }
}
