#![allow(dead_code)]

use std::f64::consts::PI;

use optobind_core::particle::ParticleSpec;
use optobind_core::scenario::{ArrayScenario, GasSpec, MIN_SEPARATION_WAISTS};
use optobind_core::tweezer::TweezerSpec;
use optobind_core::{PhysicalConstants, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const WAVELENGTH: f64 = 1.064e-6;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_sphere(rng: &mut impl Rng) -> ParticleSpec {
    let radius = rng.random_range(40e-9..120e-9);
    let eps = rng.random_range(1.5..4.0);
    ParticleSpec::sphere_with_density(radius, eps, rng.random_range(1800.0..2600.0)).unwrap()
}

/// Random far-field array of `n` spheres: foci scattered in the focal plane
/// with at least `6 w` between any two, random field magnitudes, phases and
/// in-plane polarizations.
pub fn random_scenario(rng: &mut impl Rng, n: usize) -> ArrayScenario {
    let waist = rng.random_range(0.7e-6..1.2e-6);
    let min_sep = (MIN_SEPARATION_WAISTS + 1.0) * waist;
    let side = min_sep * (2.0 + 2.0 * n as f64);
    let mut foci: Vec<Vec3> = Vec::new();
    while foci.len() < n {
        let p = Vec3::new(rng.random_range(0.0..side), rng.random_range(0.0..side), 0.0);
        if foci.iter().all(|q| (p - q).norm() > min_sep) {
            foci.push(p);
        }
    }
    let tweezers = foci
        .iter()
        .map(|f| {
            TweezerSpec::new(
                *f,
                waist,
                WAVELENGTH,
                rng.random_range(0.5e7..3e7),
                rng.random_range(0.0..2.0 * PI),
                rng.random_range(0.0..PI),
            )
            .unwrap()
        })
        .collect();
    let particles = (0..n).map(|_| random_sphere(rng)).collect();
    ArrayScenario::new(particles, tweezers, GasSpec::damping(1e3), PhysicalConstants::default()).unwrap()
}
