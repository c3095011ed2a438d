//! Linearized optical binding between optically levitated nanoparticles.
//!
//! The crate builds the coupling, diffusion, spring and force terms of an
//! array of dielectric spheres held in parallel optical tweezers, turns them
//! into a linear stochastic model, and analyses that model: stability,
//! stationary covariance, ensemble simulation, mechanical susceptibility and
//! directional gain along chains.
//!
//! Everything here is `no_std` + `alloc`. File formats, the command-line
//! front end and parallel ensemble drivers live in the `optobind` crate.

#![no_std]
// `!(x > 0.0)` is used deliberately so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod binding;
pub mod classical;
pub mod constants;
pub mod dynamics;
pub mod error;
pub mod green;
pub mod particle;
pub mod quadrature;
pub mod response;
pub mod scenario;
pub mod stochastic;
pub mod tweezer;

pub use constants::PhysicalConstants;
pub use error::{Error, Result};

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

/// Cartesian position or displacement.
pub type Vec3 = Vector3<f64>;

/// Complex field vector.
pub type CVec3 = Vector3<Complex64>;

/// 3×3 complex tensor (Green functions, susceptibilities).
pub type ComplexTensor3 = Matrix3<Complex64>;

/// 3×3 real tensor.
pub type RealTensor3 = Matrix3<f64>;

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[cfg(test)]
pub(crate) fn to_complex(v: &Vec3) -> CVec3 {
    v.map(|x| c(x, 0.0))
}
