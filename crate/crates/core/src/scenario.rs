//! Array scenarios: particles, their tweezers, gas damping and constants.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::particle::ParticleSpec;
use crate::tweezer::{local_wavenumber, rayleigh_range, TweezerSpec};
use crate::{PhysicalConstants, Vec3};

/// Minimum focus separation in units of the waist.
pub const MIN_SEPARATION_WAISTS: f64 = 5.0;
/// Minimum focus separation in units of `1/k`.
pub const MIN_SEPARATION_PHASE: f64 = 2.0 * PI;

/// Background gas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasSpec {
    /// Momentum damping rate, 1/s.
    pub damping: f64,
    /// Gas temperature, K.
    pub temperature: f64,
    /// Add the fluctuation–dissipation force `2 m gamma k_B T` to the noise.
    pub thermal_noise: bool,
}

impl GasSpec {
    pub fn damping(damping: f64) -> Self {
        GasSpec {
            damping,
            temperature: 0.0,
            thermal_noise: false,
        }
    }
}

impl Default for GasSpec {
    fn default() -> Self {
        Self::damping(0.0)
    }
}

/// Particles held one per tweezer. All tweezers share waist and wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayScenario {
    pub particles: Vec<ParticleSpec>,
    pub tweezers: Vec<TweezerSpec>,
    pub gas: GasSpec,
    pub constants: PhysicalConstants,
}

impl ArrayScenario {
    /// Builds a scenario and applies the far-field gates strictly.
    pub fn new(
        particles: Vec<ParticleSpec>,
        tweezers: Vec<TweezerSpec>,
        gas: GasSpec,
        constants: PhysicalConstants,
    ) -> Result<Self> {
        let s = ArrayScenario {
            particles,
            tweezers,
            gas,
            constants,
        };
        s.validate(false)?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Structural checks that no override can relax.
    pub fn check(&self) -> Result<()> {
        if self.particles.is_empty() {
            return Err(Error::invalid("particles", "at least one particle is required"));
        }
        if self.particles.len() != self.tweezers.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} particles but {} tweezers",
                self.particles.len(),
                self.tweezers.len()
            )));
        }
        for p in &self.particles {
            p.validate()?;
        }
        for t in &self.tweezers {
            t.validate()?;
        }
        let first = &self.tweezers[0];
        if self
            .tweezers
            .iter()
            .any(|t| t.waist != first.waist || t.wavelength != first.wavelength)
        {
            return Err(Error::invalid(
                "tweezers",
                "all tweezers must share waist and wavelength",
            ));
        }
        if !(self.gas.damping >= 0.0 && self.gas.damping.is_finite()) {
            return Err(Error::invalid("gas.damping", "must be non-negative"));
        }
        if !(self.gas.temperature >= 0.0 && self.gas.temperature.is_finite()) {
            return Err(Error::invalid("gas.temperature", "must be non-negative"));
        }
        for j in 0..self.len() {
            for jp in (j + 1)..self.len() {
                let d = self.distance(j, jp);
                if d == 0.0 {
                    return Err(Error::CoincidentFoci(j, jp));
                }
                let reach = 0.5 * (self.particles[j].max_diameter() + self.particles[jp].max_diameter());
                if d <= reach {
                    return Err(Error::Overlap(j, jp));
                }
            }
        }
        Ok(())
    }

    /// Far-field gates `d > 5 w` and `k d > 2 pi` for every pair.
    pub fn gate_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let w = self.waist();
        let k = self.wavenumber();
        for j in 0..self.len() {
            for jp in (j + 1)..self.len() {
                let d = self.distance(j, jp);
                if d <= MIN_SEPARATION_WAISTS * w {
                    out.push(format!(
                        "pair ({j}, {jp}): separation {d:.4e} m is not above {MIN_SEPARATION_WAISTS} waists"
                    ));
                }
                if k * d <= MIN_SEPARATION_PHASE {
                    out.push(format!("pair ({j}, {jp}): k d = {:.4} is not above 2 pi", k * d));
                }
            }
        }
        out
    }

    /// Runs [`check`](Self::check) and the gates. With `force` the gate
    /// violations are returned as warnings instead of an error.
    pub fn validate(&self, force: bool) -> Result<Vec<String>> {
        self.check()?;
        let violations = self.gate_violations();
        if !violations.is_empty() && !force {
            return Err(Error::Gate(violations.join("; ")));
        }
        Ok(violations)
    }

    pub fn wavelength(&self) -> f64 {
        self.tweezers[0].wavelength
    }

    pub fn waist(&self) -> f64 {
        self.tweezers[0].waist
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength()
    }

    pub fn rayleigh_range(&self) -> f64 {
        rayleigh_range(self.wavenumber(), self.waist())
    }

    /// Gouy-corrected wavenumber `k - 1/z_R`.
    pub fn kappa(&self) -> f64 {
        local_wavenumber(self.wavenumber(), self.rayleigh_range())
    }

    pub fn distance(&self, j: usize, jp: usize) -> f64 {
        (self.tweezers[j].focus - self.tweezers[jp].focus).norm()
    }

    /// Unit vector from focus `jp` to focus `j`.
    pub fn direction(&self, j: usize, jp: usize) -> Vec3 {
        (self.tweezers[j].focus - self.tweezers[jp].focus).normalize()
    }
}

/// Equidistant chain along x with next-neighbour distance
/// `(2 pi n + pi/4)/k` and phases increasing by `pi/4` per site, which makes
/// the coupling run from particle 1 towards particle N.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainGeometry {
    pub count: usize,
    pub order: u32,
    pub waist: f64,
    pub wavelength: f64,
    /// Common focus field magnitude, V/m.
    pub field: f64,
    /// Polarization angle from the x axis; `pi/2` is perpendicular to the chain.
    pub polarization_angle: f64,
}

impl ChainGeometry {
    pub fn next_distance(&self) -> f64 {
        (2.0 * PI * self.order as f64 + 0.25 * PI) * self.wavelength / (2.0 * PI)
    }

    /// Smallest chain order whose spacing passes both far-field gates.
    pub fn minimal_order(waist: f64, wavelength: f64) -> u32 {
        let mut n = 0u32;
        loop {
            let kd = 2.0 * PI * n as f64 + 0.25 * PI;
            let d = kd * wavelength / (2.0 * PI);
            if kd > MIN_SEPARATION_PHASE && d > MIN_SEPARATION_WAISTS * waist {
                return n;
            }
            n += 1;
        }
    }
}

/// Next-neighbour tweezer phase difference along the chain.
pub const CHAIN_PHASE_STEP: f64 = 0.25 * PI;

impl ArrayScenario {
    /// Identical particles on an equidistant chain. Gates are applied unless
    /// `force` is set; the returned warnings list any that were overridden.
    pub fn chain(
        particle: ParticleSpec,
        geometry: &ChainGeometry,
        gas: GasSpec,
        constants: PhysicalConstants,
        force: bool,
    ) -> Result<(Self, Vec<String>)> {
        if geometry.count == 0 {
            return Err(Error::invalid("chain.N", "at least one particle is required"));
        }
        let d = geometry.next_distance();
        let tweezers = (0..geometry.count)
            .map(|j| {
                TweezerSpec::new(
                    Vec3::new(j as f64 * d, 0.0, 0.0),
                    geometry.waist,
                    geometry.wavelength,
                    geometry.field,
                    CHAIN_PHASE_STEP * j as f64,
                    geometry.polarization_angle,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let s = ArrayScenario {
            particles: alloc::vec![particle; geometry.count],
            tweezers,
            gas,
            constants,
        };
        let warnings = s.validate(force)?;
        Ok((s, warnings))
    }
}
