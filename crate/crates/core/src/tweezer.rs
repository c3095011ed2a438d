//! Gaussian tweezer beams propagating along +z with foci in the z = 0 plane.

use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::particle::ParticleSpec;
use crate::{c, CVec3, PhysicalConstants, Vec3};

/// A single linearly polarized tweezer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TweezerSpec {
    /// Focus position with zero z component, metres.
    pub focus: Vec3,
    /// Beam waist, metres.
    pub waist: f64,
    /// Vacuum wavelength, metres.
    pub wavelength: f64,
    /// Complex focus amplitude `|E| e^{i phi}`, V/m.
    pub amplitude: Complex64,
    /// Unit polarization vector in the x–y plane.
    pub polarization: Vec3,
}

impl TweezerSpec {
    /// Tweezer with field magnitude `field` (V/m), phase `phase` (rad) and
    /// polarization at angle `angle` from the x axis.
    pub fn new(focus: Vec3, waist: f64, wavelength: f64, field: f64, phase: f64, angle: f64) -> Result<Self> {
        let t = TweezerSpec {
            focus,
            waist,
            wavelength,
            amplitude: Complex64::from_polar(field, phase),
            polarization: Vec3::new(angle.cos(), angle.sin(), 0.0),
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.focus.z != 0.0 || !self.focus.iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("focus", "foci must lie in the z = 0 plane"));
        }
        if !(self.waist > 0.0 && self.waist.is_finite()) {
            return Err(Error::invalid("waist", "must be positive"));
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(Error::invalid("wavelength", "must be positive"));
        }
        if !(self.amplitude.re.is_finite() && self.amplitude.im.is_finite()) {
            return Err(Error::invalid("amplitude", "must be finite"));
        }
        let p = &self.polarization;
        if p.z != 0.0 || (p.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(
                "polarization",
                "must be a unit vector perpendicular to the beam axis",
            ));
        }
        Ok(())
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn rayleigh_range(&self) -> f64 {
        rayleigh_range(self.wavenumber(), self.waist)
    }

    /// Gouy-corrected wavenumber near the focus.
    pub fn local_wavenumber(&self) -> f64 {
        local_wavenumber(self.wavenumber(), self.rayleigh_range())
    }

    pub fn field_magnitude(&self) -> f64 {
        self.amplitude.norm()
    }

    pub fn phase(&self) -> f64 {
        self.amplitude.arg()
    }

    /// Complex focus field vector `E_j`.
    pub fn focus_field(&self) -> CVec3 {
        self.polarization.map(|x| self.amplitude * x)
    }
}

pub fn rayleigh_range(k: f64, waist: f64) -> f64 {
    0.5 * k * waist * waist
}

/// `k - 1/z_R`.
pub fn local_wavenumber(k: f64, z_r: f64) -> f64 {
    k - 1.0 / z_r
}

/// Paraxial envelope `exp(-(x^2+y^2)/w^2(1+iz/z_R)) / (1+iz/z_R)`.
pub fn tweezer_envelope(r: &Vec3, waist: f64, z_r: f64) -> Complex64 {
    let q = c(1.0, r.z / z_r);
    let rho2 = r.x * r.x + r.y * r.y;
    (-(rho2 / (waist * waist)) / q).exp() / q
}

/// Superposed laser field `sum_j E_j e^{ikz} f(r - d_j)`.
pub fn laser_field(r: &Vec3, tweezers: &[TweezerSpec]) -> CVec3 {
    tweezers.iter().fold(CVec3::zeros(), |acc, t| {
        let k = t.wavenumber();
        let f = tweezer_envelope(&(r - t.focus), t.waist, t.rayleigh_range());
        acc + t.focus_field() * (c((k * r.z).cos(), (k * r.z).sin()) * f)
    })
}

/// Field magnitude of a Gaussian beam of power `power` (W) and waist `waist`.
pub fn field_from_power(power: f64, waist: f64, constants: &PhysicalConstants) -> f64 {
    (4.0 * power / (PI * constants.epsilon0 * constants.c * waist * waist)).sqrt()
}

/// Inverse of [`field_from_power`].
pub fn power_from_field(field: f64, waist: f64, constants: &PhysicalConstants) -> f64 {
    field * field * PI * constants.epsilon0 * constants.c * waist * waist / 4.0
}

/// Axial trap frequency from `m w^2 = eps0 chi V |E|^2 / 2 z_R^2`, where
/// `chi_tilde` is the (radiation-corrected) susceptibility along the
/// polarization.
pub fn trap_frequency(
    particle: &ParticleSpec,
    tweezer: &TweezerSpec,
    chi_tilde: f64,
    constants: &PhysicalConstants,
) -> Result<f64> {
    if !(chi_tilde > 0.0) {
        return Err(Error::invalid("chi_tilde", "must be positive"));
    }
    let z_r = tweezer.rayleigh_range();
    let e2 = tweezer.amplitude.norm_sqr();
    Ok((constants.epsilon0 * chi_tilde * particle.volume() * e2 / (2.0 * particle.mass * z_r * z_r)).sqrt())
}

/// Field magnitude that produces the trap frequency `omega`.
pub fn field_for_trap_frequency(
    particle: &ParticleSpec,
    waist: f64,
    wavelength: f64,
    chi_tilde: f64,
    omega: f64,
    constants: &PhysicalConstants,
) -> Result<f64> {
    if !(chi_tilde > 0.0) {
        return Err(Error::invalid("chi_tilde", "must be positive"));
    }
    if !(omega >= 0.0) {
        return Err(Error::invalid("omega", "must be non-negative"));
    }
    let z_r = rayleigh_range(2.0 * PI / wavelength, waist);
    Ok(omega * z_r * (2.0 * particle.mass / (constants.epsilon0 * chi_tilde * particle.volume())).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAMBDA: f64 = 1.064e-6;
    const W: f64 = 1e-6;

    fn beam(x: f64, field: f64, phase: f64) -> TweezerSpec {
        TweezerSpec::new(Vec3::new(x, 0.0, 0.0), W, LAMBDA, field, phase, 0.3).unwrap()
    }

    #[test]
    fn envelope_reference_values() {
        let z_r = rayleigh_range(2.0 * PI / LAMBDA, W);
        assert_eq!(tweezer_envelope(&Vec3::zeros(), W, z_r), c(1.0, 0.0));
        let on_axis = tweezer_envelope(&Vec3::new(0.0, 0.0, z_r), W, z_r);
        assert!((on_axis.norm() - 0.5f64.sqrt()).abs() < 1e-15);
        let at_waist = tweezer_envelope(&Vec3::new(W, 0.0, 0.0), W, z_r);
        assert!((at_waist.norm() - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn field_at_own_focus() {
        let t = beam(0.0, 3e6, 0.7);
        let e = laser_field(&t.focus, &[t]);
        assert_eq!(e, t.focus_field());
    }

    #[test]
    fn distant_tweezer_contributes_nothing() {
        let t1 = beam(0.0, 1e6, 0.0);
        let t2 = beam(50.0 * W, 1e6, 0.0);
        let cross = laser_field(&t1.focus, &[t2]);
        assert!(cross.norm() <= (-2500.0f64).exp() * 1e6);
    }

    #[test]
    fn rejects_out_of_plane_input() {
        assert!(TweezerSpec::new(Vec3::new(0.0, 0.0, 1e-9), W, LAMBDA, 1.0, 0.0, 0.0).is_err());
        let mut t = beam(0.0, 1.0, 0.0);
        t.polarization = Vec3::new(0.0, 0.0, 1.0);
        assert!(t.validate().is_err());
    }

    #[test]
    fn gouy_corrected_phase_near_focus() {
        let t = beam(0.0, 1.0, 0.0);
        let z_r = t.rayleigh_range();
        let z = 1e-3 * z_r;
        let e = laser_field(&Vec3::new(0.0, 0.0, z), &[t]);
        let ratio = e.x / t.focus_field().x;
        let kz = t.local_wavenumber() * z;
        assert!((ratio - c(kz.cos(), kz.sin())).norm() <= (z / z_r).powi(2));
    }

    #[test]
    fn local_wavenumber_limits() {
        assert_eq!(local_wavenumber(5.0, f64::INFINITY), 5.0);
        assert_eq!(local_wavenumber(4.0, 0.25), 0.0);
        let k = 2.0 * PI / LAMBDA;
        let exact = k * (1.0 - 2.0 / (k * W).powi(2));
        assert!((local_wavenumber(k, rayleigh_range(k, W)) - exact).abs() < 1e-12 * k);
    }

    #[test]
    fn trap_frequency_round_trip() {
        let consts = PhysicalConstants::default();
        let p = ParticleSpec::sphere_with_density(1e-7, 2.1, 1850.0).unwrap();
        let chi = crate::particle::sphere_susceptibility(2.1);
        let omega = 2.0 * PI * 1e5;
        let field = field_for_trap_frequency(&p, W, LAMBDA, chi, omega, &consts).unwrap();
        let t = beam(0.0, field, 1.3);
        let back = trap_frequency(&p, &t, chi, &consts).unwrap();
        assert!((back / omega - 1.0).abs() < 1e-12);
        let t2 = beam(0.0, 2.0 * field, -0.4);
        assert!((trap_frequency(&p, &t2, chi, &consts).unwrap() / back - 2.0).abs() < 1e-14);
    }

    #[test]
    fn power_mapping_round_trip() {
        let consts = PhysicalConstants::default();
        let e = field_from_power(0.3, W, &consts);
        assert!((power_from_field(e, W, &consts) - 0.3).abs() < 1e-15);
    }
}
