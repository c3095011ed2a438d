//! Classical dipole forces in the tweezer field, used as an independent
//! route to the linearized coupling constants.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::green::{far_field_green, green_full};
use crate::quadrature::richardson_derivative;
use crate::scenario::ArrayScenario;
use crate::tweezer::laser_field;
use crate::{c, CVec3, ComplexTensor3, Vec3};

/// Which part of the Green tensor mediates the pair interaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    Full,
    /// `Re G`, the conservative part.
    RealPart,
    FarField,
}

/// Positions and the forces acting on them.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceField {
    pub positions: Vec<Vec3>,
    pub forces: Vec<Vec3>,
}

fn scalar_polarizabilities(scenario: &ArrayScenario) -> Result<Vec<f64>> {
    scenario
        .particles
        .iter()
        .map(|p| {
            if !p.is_sphere() {
                return Err(Error::invalid("particles", "classical forces need spheres"));
            }
            Ok(scenario.constants.epsilon0 * p.volume() * p.susceptibility()?[(0, 0)])
        })
        .collect()
}

fn check_positions(scenario: &ArrayScenario, positions: &[Vec3]) -> Result<()> {
    scenario.check()?;
    if positions.len() != scenario.len() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "{} positions for {} particles",
            positions.len(),
            scenario.len()
        )));
    }
    for j in 0..positions.len() {
        for jp in (j + 1)..positions.len() {
            let reach = 0.5 * (scenario.particles[j].max_diameter() + scenario.particles[jp].max_diameter());
            if (positions[j] - positions[jp]).norm() <= reach {
                return Err(Error::Overlap(j, jp));
            }
        }
    }
    Ok(())
}

fn kernel(r: &Vec3, k: f64, which: Kernel) -> Result<ComplexTensor3> {
    match which {
        Kernel::Full => green_full(r, k),
        Kernel::RealPart => Ok(green_full(r, k)?.map(|z| c(z.re, 0.0))),
        Kernel::FarField => far_field_green(r, k),
    }
}

fn field_at(scenario: &ArrayScenario, r: &Vec3) -> CVec3 {
    laser_field(r, &scenario.tweezers)
}

/// Fourth-order central difference of `f` along each axis at `r`.
fn gradient(f: impl Fn(&Vec3) -> Result<f64>, r: &Vec3, h: f64) -> Result<Vec3> {
    let mut g = Vec3::zeros();
    for a in 0..3 {
        let mut e = Vec3::zeros();
        e[a] = h;
        let v = f(&(r - 2.0 * e))? - 8.0 * f(&(r - e))? + 8.0 * f(&(r + e))? - f(&(r + 2.0 * e))?;
        g[a] = v / (12.0 * h);
    }
    Ok(g)
}

/// Forces `grad_j (alpha/4)|E_L(r_j)|^2 + grad_j (alpha alpha'/2 eps0) Re sum E_L^*(r_j).G(r_j - r_j').E_L(r_j')`
/// from fourth-order central differences with step `1e-6/k`.
pub fn classical_binding_force(scenario: &ArrayScenario, positions: &[Vec3]) -> Result<ForceField> {
    binding_force_with(scenario, positions, Kernel::Full, true)
}

/// As [`classical_binding_force`], with a chosen kernel and optionally
/// without the gradient force of the particle's own intensity.
pub fn binding_force_with(
    scenario: &ArrayScenario,
    positions: &[Vec3],
    which: Kernel,
    include_gradient_force: bool,
) -> Result<ForceField> {
    check_positions(scenario, positions)?;
    let alpha = scalar_polarizabilities(scenario)?;
    let eps0 = scenario.constants.epsilon0;
    let k = scenario.wavenumber();
    let h = 1e-6 / k;
    let fields: Vec<CVec3> = positions.iter().map(|r| field_at(scenario, r)).collect();
    let mut forces = Vec::with_capacity(positions.len());
    for j in 0..positions.len() {
        let energy = |r: &Vec3| -> Result<f64> {
            let ej = field_at(scenario, r);
            let mut u = if include_gradient_force {
                alpha[j] / 4.0 * ej.norm_squared()
            } else {
                0.0
            };
            for jp in 0..positions.len() {
                if jp == j {
                    continue;
                }
                let g = kernel(&(r - positions[jp]), k, which)?;
                let pair = ej.conjugate().dot(&(g * fields[jp]));
                u += alpha[j] * alpha[jp] / (2.0 * eps0) * pair.re;
            }
            Ok(u)
        };
        forces.push(gradient(energy, &positions[j], h)?);
    }
    Ok(ForceField {
        positions: positions.to_vec(),
        forces,
    })
}

/// Conservative binding energy
/// `-(eps0/4) sum_{j != j'} V_j V_j' E_L^*(r_j').chi Re G(r_j - r_j') chi E_L(r_j)`.
pub fn conservative_potential(scenario: &ArrayScenario, positions: &[Vec3]) -> Result<f64> {
    check_positions(scenario, positions)?;
    let k = scenario.wavenumber();
    let eps0 = scenario.constants.epsilon0;
    let fields: Vec<CVec3> = positions.iter().map(|r| field_at(scenario, r)).collect();
    let mut total = c(0.0, 0.0);
    for j in 0..positions.len() {
        let pj = &scenario.particles[j];
        let chi_j = pj.susceptibility()?;
        for jp in 0..positions.len() {
            if jp == j {
                continue;
            }
            let pjp = &scenario.particles[jp];
            let chi_jp = pjp.susceptibility()?;
            let re_g = green_full(&(positions[j] - positions[jp]), k)?.map(|z| z.re);
            let t = chi_jp * re_g * chi_j;
            let t = t.map(|x| c(x, 0.0));
            total += fields[jp].conjugate().dot(&(t * fields[j])) * (pj.volume() * pjp.volume());
        }
    }
    Ok(-eps0 / 4.0 * total.re)
}

/// Coupling constants from the axial force gradient at the foci.
///
/// The pair energy `(alpha_j alpha_j'/2 eps0) Re E_j^*(z_j).G_ff(d_j - d_j').E_j'(z_j')`
/// uses local fields `E_j e^{i kappa z_j}` with the far-field tensor fixed at
/// the foci; `C_jj' = d^2 W_j / dz_j dz_j'` by nested Richardson differences.
pub fn coupling_from_force_gradient(scenario: &ArrayScenario) -> Result<DMatrix<f64>> {
    scenario.check()?;
    let alpha = scalar_polarizabilities(scenario)?;
    let eps0 = scenario.constants.epsilon0;
    let k = scenario.wavenumber();
    let kappa = scenario.kappa();
    let n = scenario.len();
    let foci: Vec<Vec3> = scenario.tweezers.iter().map(|t| t.focus).collect();
    let amplitudes: Vec<CVec3> = scenario.tweezers.iter().map(|t| t.focus_field()).collect();
    let mut kernels = Vec::with_capacity(n * n);
    for j in 0..n {
        for jp in 0..n {
            kernels.push(if j == jp {
                ComplexTensor3::zeros()
            } else {
                far_field_green(&(foci[j] - foci[jp]), k)?
            });
        }
    }
    let local = |j: usize, z: f64| -> CVec3 { amplitudes[j] * Complex64::from_polar(1.0, kappa * z) };
    // energy of particle j with displacements z_j and z_jp (others at rest)
    let energy = |j: usize, zj: f64, jp: usize, zjp: f64| -> f64 {
        let ej = local(j, zj);
        let mut u = 0.0;
        for other in 0..n {
            if other == j {
                continue;
            }
            let z = if other == jp { zjp } else { 0.0 };
            let pair = ej.conjugate().dot(&(kernels[j * n + other] * local(other, z)));
            u += alpha[j] * alpha[other] / (2.0 * eps0) * pair.re;
        }
        u
    };
    let h0 = 0.1 / kappa.abs();
    let tol = 1e-10;
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        for jp in 0..n {
            let force = |zjp: f64| -> Result<f64> {
                richardson_derivative(
                    |zj| {
                        if jp == j {
                            energy(j, zj, usize::MAX, 0.0)
                        } else {
                            energy(j, zj, jp, zjp)
                        }
                    },
                    if jp == j { zjp } else { 0.0 },
                    h0,
                    tol,
                    0.0,
                )
            };
            let scale = energy_scale(&alpha, eps0, &amplitudes, &kernels, n, j) * kappa * kappa;
            let mut failure = None;
            let value = richardson_derivative(
                |zjp| match force(zjp) {
                    Ok(v) => v,
                    Err(e) => {
                        failure = Some(e);
                        f64::NAN
                    }
                },
                0.0,
                h0,
                1e-8,
                1e-12 * scale,
            );
            if let Some(e) = failure {
                return Err(e);
            }
            out[(j, jp)] = value?;
        }
    }
    Ok(out)
}

fn energy_scale(alpha: &[f64], eps0: f64, amplitudes: &[CVec3], kernels: &[ComplexTensor3], n: usize, j: usize) -> f64 {
    (0..n)
        .filter(|o| *o != j)
        .map(|o| {
            alpha[j] * alpha[o] / (2.0 * eps0)
                * amplitudes[j].norm()
                * amplitudes[o].norm()
                * crate::green::frobenius(&kernels[j * n + o])
        })
        .sum()
}
