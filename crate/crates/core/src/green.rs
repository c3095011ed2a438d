//! Free-space electric dipole Green tensors.
//!
//! All kernels are evaluated in units where the laser wavenumber is one
//! (`rho = k r`) and rescaled by `k^3` on the way out, which keeps the
//! arithmetic well inside the floating-point range for nanometre
//! geometries.

use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::{c, ComplexTensor3, RealTensor3, Vec3};

/// Below this value of `k r` the transverse tensor is taken from its
/// small-distance series instead of the difference `G - G0`.
pub const TRANSVERSE_CROSSOVER: f64 = 1e-3;

fn outer(n: &Vec3) -> RealTensor3 {
    n * n.transpose()
}

fn complexify(m: &RealTensor3, z: Complex64) -> ComplexTensor3 {
    m.map(|x| z * x)
}

fn unit_and_norm(r: &Vec3) -> Result<(Vec3, f64)> {
    let norm = r.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::SingularPoint);
    }
    Ok((r / norm, norm))
}

fn check_wavenumber(k: f64) -> Result<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("k_l", "wavenumber must be positive and finite"))
    }
}

/// Dimensionless full Green tensor at `rho = k r` (k = 1).
fn full_scaled(n: &Vec3, rho: f64) -> ComplexTensor3 {
    let nn = outer(n);
    let id = RealTensor3::identity();
    let phase = c(rho.cos(), rho.sin()) / (4.0 * PI);
    let near = complexify(&(3.0 * nn - id), phase * c(1.0, -rho) / (rho * rho * rho));
    let far = complexify(&(id - nn), phase / rho);
    near + far
}

/// Full dipole Green tensor of the vector Helmholtz equation, `r != 0`.
pub fn green_full(r: &Vec3, k: f64) -> Result<ComplexTensor3> {
    check_wavenumber(k)?;
    let (n, norm) = unit_and_norm(r)?;
    Ok(full_scaled(&n, k * norm) * c(k * k * k, 0.0))
}

/// Electrostatic dipole tensor `(3 r r - r^2 1) / 4 pi r^5`.
pub fn green_static(r: &Vec3) -> Result<RealTensor3> {
    let (n, norm) = unit_and_norm(r)?;
    Ok((3.0 * outer(&n) - RealTensor3::identity()) / (4.0 * PI * norm * norm * norm))
}

/// Transverse part `G - G0`, regular enough to be evaluated at the origin.
///
/// For `k r` below [`TRANSVERSE_CROSSOVER`] the small-distance series is
/// used; it carries two orders beyond the cubic term so the truncation error
/// at the crossover is of order `(k r)^4`. At `r = 0` the finite part
/// `i k^3 / 6 pi` is returned; the integrable `1/r` piece is accounted for by
/// the volume-averaged radiation correction of the susceptibility.
pub fn green_transverse(r: &Vec3, k: f64) -> Result<ComplexTensor3> {
    check_wavenumber(k)?;
    let norm = r.norm();
    let rho = k * norm;
    let k3 = c(k * k * k, 0.0);
    if rho >= TRANSVERSE_CROSSOVER {
        let n = r / norm;
        let g0 = (3.0 * outer(&n) - RealTensor3::identity()) / (4.0 * PI * rho * rho * rho);
        return Ok((full_scaled(&n, rho) - complexify(&g0, c(1.0, 0.0))) * k3);
    }
    let id = RealTensor3::identity();
    let regular = complexify(&id, c(0.0, 1.0 / (6.0 * PI)));
    if norm == 0.0 {
        return Ok(regular * k3);
    }
    Ok(transverse_series(&(r / norm), rho) * k3)
}

fn transverse_series(n: &Vec3, rho: f64) -> ComplexTensor3 {
    let nn = outer(n);
    let id = RealTensor3::identity();
    let leading = (id + nn) / (8.0 * PI * rho);
    let fourth = (nn - 3.0 * id) * (rho / (32.0 * PI));
    let fifth = (nn - 2.0 * id) * (rho * rho / (60.0 * PI));
    complexify(&(leading + fourth), c(1.0, 0.0))
        + complexify(&id, c(0.0, 1.0 / (6.0 * PI)))
        + complexify(&fifth, c(0.0, 1.0))
}

/// Radiative (`1/r`) part of the full Green tensor only.
pub fn far_field_green(r: &Vec3, k: f64) -> Result<ComplexTensor3> {
    check_wavenumber(k)?;
    let (n, norm) = unit_and_norm(r)?;
    let proj = RealTensor3::identity() - outer(&n);
    let rho = k * norm;
    let pref = c(rho.cos(), rho.sin()) * (k * k * k / (4.0 * PI * rho));
    Ok(complexify(&proj, pref))
}

/// Frobenius norm of a complex 3×3 tensor.
pub fn frobenius(m: &ComplexTensor3) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Residual of `curl curl G - k^2 G` from a fourth-order central stencil.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HelmholtzResidual {
    /// Frobenius norm of the residual tensor.
    pub residual: f64,
    /// `|laplacian G| + k^2 |G|`, the scale the residual is compared to.
    pub scale: f64,
}

impl HelmholtzResidual {
    pub fn relative(&self) -> f64 {
        self.residual / self.scale
    }
}

/// Default stencil step, as a fraction of `min(|r|, 1/k)`.
pub const HELMHOLTZ_STEP: f64 = 1e-3;

/// `HELMHOLTZ_STEP * min(|r|, 1/k)`.
pub fn default_helmholtz_step(r: &Vec3, k: f64) -> f64 {
    HELMHOLTZ_STEP * r.norm().min(1.0 / k)
}

/// Evaluates the vector Helmholtz residual of [`green_full`] at `r` using
/// finite differences with step `h` (metres).
pub fn helmholtz_residual(r: &Vec3, k: f64, h: f64) -> Result<HelmholtzResidual> {
    let g = |p: Vec3| green_full(&p, k);
    let axis = |a: usize| -> Vec3 {
        let mut e = Vec3::zeros();
        e[a] = h;
        e
    };
    let center = g(*r)?;
    // second derivatives d_a d_b of every tensor entry
    let mut hess = [[ComplexTensor3::zeros(); 3]; 3];
    let first = [
        (-2.0, 1.0 / 12.0),
        (-1.0, -8.0 / 12.0),
        (1.0, 8.0 / 12.0),
        (2.0, -1.0 / 12.0),
    ];
    for a in 0..3 {
        let ea = axis(a);
        let mut acc = center * c(-30.0, 0.0);
        for (s, w) in [(2.0, -1.0), (1.0, 16.0), (-1.0, 16.0), (-2.0, -1.0)] {
            acc += g(r + ea * s)? * c(w, 0.0);
        }
        hess[a][a] = acc / c(12.0 * h * h, 0.0);
        for b in (a + 1)..3 {
            let eb = axis(b);
            let mut mixed = ComplexTensor3::zeros();
            for &(p, wp) in &first {
                for &(q, wq) in &first {
                    mixed += g(r + ea * p + eb * q)? * c(wp * wq, 0.0);
                }
            }
            let mixed = mixed / c(h * h, 0.0);
            hess[a][b] = mixed;
            hess[b][a] = mixed;
        }
    }
    let mut residual = ComplexTensor3::zeros();
    let mut laplacian = ComplexTensor3::zeros();
    for col in 0..3 {
        for i in 0..3 {
            let grad_div: Complex64 = (0..3).map(|a| hess[i][a][(a, col)]).sum();
            let lap: Complex64 = (0..3).map(|a| hess[a][a][(i, col)]).sum();
            laplacian[(i, col)] = lap;
            residual[(i, col)] = grad_div - lap - center[(i, col)] * (k * k);
        }
    }
    Ok(HelmholtzResidual {
        residual: frobenius(&residual),
        scale: frobenius(&laplacian) + k * k * frobenius(&center),
    })
}

#[cfg(test)]
pub(crate) fn to_complex_tensor(m: &RealTensor3) -> ComplexTensor3 {
    nalgebra::Matrix3::from_fn(|i, j| c(m[(i, j)], 0.0))
}
