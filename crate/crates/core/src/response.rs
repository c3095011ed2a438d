//! Frequency response of damped, coupled chains: mechanical susceptibility,
//! directional gain, signal-to-recoil-noise ratio and the partial sums of
//! the infinite-chain dispersion relation.

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::binding::BindingMatrices;
use crate::c;
use crate::error::{Error, Result};
use crate::quadrature::trapezoid;
use crate::scenario::{ArrayScenario, CHAIN_PHASE_STEP};

/// Abstract chain with all-to-all couplings
/// `C_jj' / m = (2 omega0 g / |j - j'|) cos(k d |j - j'| - phi (j - j'))`,
/// `k d = 2 pi n + pi/4`, `phi = pi/4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSpec {
    pub count: usize,
    /// Common renormalized frequency, rad/s.
    pub omega0: f64,
    /// Gas damping, 1/s.
    pub gamma: f64,
    /// Coupling rate, rad/s.
    pub g: f64,
    /// Distance order `n`.
    pub order: u32,
    /// `k / (k - 1/z_R)`; only enters the recoil diffusion.
    pub k_over_kappa: f64,
}

impl ChainSpec {
    /// Chain in units of the damping rate: `omega0 = 20`, `g = gamma = 1`,
    /// `n = 1`.
    pub fn reference(count: usize) -> Self {
        ChainSpec {
            count,
            omega0: 20.0,
            gamma: 1.0,
            g: 1.0,
            order: 1,
            k_over_kappa: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::invalid("chain.N", "at least one particle is required"));
        }
        if !(self.omega0 > 0.0 && self.gamma > 0.0 && self.g >= 0.0) {
            return Err(Error::invalid(
                "chain",
                "omega0 and gamma must be positive, g non-negative",
            ));
        }
        // kappa < 0 is legitimate for waists below ~lambda/3; only r^2 enters
        if !(self.k_over_kappa.is_finite() && self.k_over_kappa != 0.0) {
            return Err(Error::invalid("chain.k_over_kappa", "must be finite and nonzero"));
        }
        Ok(())
    }

    /// `k d_next`.
    pub fn phase_distance(&self) -> f64 {
        2.0 * PI * self.order as f64 + 0.25 * PI
    }

    /// `C / m`.
    pub fn coupling_over_mass(&self) -> DMatrix<f64> {
        let kd = self.phase_distance();
        DMatrix::from_fn(self.count, self.count, |j, jp| {
            if j == jp {
                return 0.0;
            }
            let delta = j as f64 - jp as f64;
            let a = delta.abs();
            2.0 * self.omega0 * self.g / a * (kd * a - CHAIN_PHASE_STEP * delta).cos()
        })
    }

    /// Recoil diffusion in units of `hbar m omega0 g`.
    pub fn diffusion(&self) -> DMatrix<Complex64> {
        let kd = self.phase_distance();
        let r = self.k_over_kappa;
        DMatrix::from_fn(self.count, self.count, |j, jp| {
            if j == jp {
                return c(2.0 / 15.0 * (5.0 + 2.0 * r * r) * kd, 0.0);
            }
            let delta = j as f64 - jp as f64;
            let a = delta.abs();
            Complex64::from_polar((kd * a).sin() / a, CHAIN_PHASE_STEP * delta)
        })
    }

    pub fn response_model(&self) -> ResponseModel {
        ResponseModel {
            omega_sq: DVector::from_element(self.count, self.omega0 * self.omega0),
            coupling_over_mass: self.coupling_over_mass(),
            gamma: self.gamma,
            omega_ref: self.omega0,
        }
    }

    /// Chain parameters of a physical scenario laid out as a chain: the
    /// reference frequency is the mean renormalized frequency and
    /// `g = eps0 chi^2 V^2 k^2 kappa^2 |E_0|^2 / 16 pi m omega0 d_next`.
    pub fn from_scenario(scenario: &ArrayScenario, matrices: &BindingMatrices) -> Result<Self> {
        let n = scenario.len();
        if n < 2 {
            return Err(Error::invalid("scenario", "a chain needs at least two particles"));
        }
        if !(scenario.gas.damping > 0.0) {
            return Err(Error::invalid(
                "gas.damping",
                "must be positive for a response analysis",
            ));
        }
        let p = &scenario.particles[0];
        let chi = p.susceptibility()?[(0, 0)];
        let v = p.volume();
        let k = scenario.wavenumber();
        let kappa = scenario.kappa();
        let d = scenario.distance(0, 1);
        let omega0 = matrices.renormalized_frequencies().mean();
        if !omega0.is_finite() {
            return Err(Error::Degenerate("negative effective spring constant".into()));
        }
        let e2 = scenario.tweezers[0].amplitude.norm_sqr();
        let g = scenario.constants.epsilon0 * chi * chi * v * v * k * k * kappa * kappa * e2
            / (16.0 * PI * p.mass * omega0 * d);
        let order = ((k * d - 0.25 * PI) / (2.0 * PI)).round().max(0.0) as u32;
        Ok(ChainSpec {
            count: n,
            omega0,
            gamma: scenario.gas.damping,
            g,
            order,
            k_over_kappa: k / kappa,
        })
    }
}

/// Ingredients of `chi^{-1}[w] = (i / w_ref gamma) [(w^2 - W_j^2 - i gamma w) delta - C/m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseModel {
    /// Renormalized squared frequencies `W_j^2`.
    pub omega_sq: DVector<f64>,
    /// Rows of `C` divided by the particle mass.
    pub coupling_over_mass: DMatrix<f64>,
    pub gamma: f64,
    /// Normalization frequency, chosen so that a lone particle has
    /// `chi = 1` at resonance.
    pub omega_ref: f64,
}

impl ResponseModel {
    /// Response of a physical scenario; the reference frequency is the mean
    /// renormalized frequency.
    pub fn from_matrices(matrices: &BindingMatrices, gamma: f64) -> Result<Self> {
        let n = matrices.len();
        let omega_sq = DVector::from_fn(n, |j, _| {
            matrices.omega[j] * matrices.omega[j] + matrices.k[j] / matrices.mass[j]
        });
        let mean = omega_sq.iter().map(|w| w.max(0.0).sqrt()).sum::<f64>() / n as f64;
        let coupling_over_mass = DMatrix::from_fn(n, n, |j, jp| matrices.c[(j, jp)] / matrices.mass[j]);
        Ok(ResponseModel {
            omega_sq,
            coupling_over_mass,
            gamma,
            omega_ref: mean,
        })
    }

    pub fn len(&self) -> usize {
        self.omega_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega_sq.is_empty()
    }

    pub fn inverse_susceptibility(&self, omega: f64) -> DMatrix<Complex64> {
        let n = self.len();
        let pref = c(0.0, 1.0 / (self.omega_ref * self.gamma));
        DMatrix::from_fn(n, n, |j, jp| {
            let mut v = c(-self.coupling_over_mass[(j, jp)], 0.0);
            if j == jp {
                v += c(omega * omega - self.omega_sq[j], -self.gamma * omega);
            }
            pref * v
        })
    }
}

/// Condition number above which the susceptibility is reported singular.
const SINGULAR_CONDITION: f64 = 1e14;

/// Mechanical susceptibility matrix at `omega`.
pub fn susceptibility_matrix(model: &ResponseModel, omega: f64) -> Result<DMatrix<Complex64>> {
    if !(model.gamma > 0.0) {
        return Err(Error::invalid("gamma", "a positive damping rate is required"));
    }
    let m = model.inverse_susceptibility(omega);
    let norm = m.norm();
    let inv = m.try_inverse().ok_or(Error::Singular(f64::INFINITY))?;
    let cond = norm * inv.norm();
    if !cond.is_finite() || cond > SINGULAR_CONDITION {
        return Err(Error::Singular(cond));
    }
    Ok(inv)
}

/// Default grid: 2001 points over `omega0 +- 10 gamma max(1, N g / gamma)`,
/// clipped at zero.
pub fn default_grid(chain: &ChainSpec) -> Vec<f64> {
    let half = 10.0 * chain.gamma * (chain.count as f64 * chain.g / chain.gamma).max(1.0);
    let lo = (chain.omega0 - half).max(0.0);
    let hi = chain.omega0 + half;
    let points = 2001;
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

/// Corner elements of the susceptibility over a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub omega: Vec<f64>,
    pub chi: Vec<DMatrix<Complex64>>,
    /// `|chi_N1|^2`.
    pub forward: Vec<f64>,
    /// `|chi_1N|^2`.
    pub backward: Vec<f64>,
    /// Lone particle `|chi_11|^2` at the same reference frequency.
    pub single: Vec<f64>,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("grid", "frequency grid must be strictly increasing"));
    }
    Ok(())
}

/// `|chi_11|^2` of an isolated oscillator normalized at `omega0`.
pub fn single_particle_gain(omega0: f64, gamma: f64, omega: f64) -> f64 {
    let den = c(omega * omega - omega0 * omega0, -gamma * omega);
    (omega0 * gamma) * (omega0 * gamma) / den.norm_sqr()
}

pub fn amplification_sweep(chain: &ChainSpec, grid: &[f64]) -> Result<SpectrumResult> {
    chain.validate()?;
    response_sweep(&chain.response_model(), grid)
}

/// Corner elements of any response model over `grid`; the lone-particle
/// curve uses the model's reference frequency.
pub fn response_sweep(model: &ResponseModel, grid: &[f64]) -> Result<SpectrumResult> {
    check_grid(grid)?;
    let n = model.len();
    if n == 0 {
        return Err(Error::invalid("model", "empty response model"));
    }
    let mut out = SpectrumResult {
        omega: grid.to_vec(),
        chi: Vec::with_capacity(grid.len()),
        forward: Vec::with_capacity(grid.len()),
        backward: Vec::with_capacity(grid.len()),
        single: Vec::with_capacity(grid.len()),
    };
    for &w in grid {
        let chi = susceptibility_matrix(model, w)?;
        out.forward.push(chi[(n - 1, 0)].norm_sqr());
        out.backward.push(chi[(0, n - 1)].norm_sqr());
        out.single.push(single_particle_gain(model.omega_ref, model.gamma, w));
        out.chi.push(chi);
    }
    Ok(out)
}

/// Peak gains, refined by golden-section search around the best grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakGains {
    pub forward: f64,
    pub forward_at: f64,
    pub backward: f64,
    pub backward_at: f64,
}

pub fn peak_gains(chain: &ChainSpec, grid: &[f64]) -> Result<PeakGains> {
    let s = amplification_sweep(chain, grid)?;
    let model = chain.response_model();
    let n = chain.count;
    let corner = |w: f64, forward: bool| -> f64 {
        match susceptibility_matrix(&model, w) {
            Ok(chi) if forward => chi[(n - 1, 0)].norm_sqr(),
            Ok(chi) => chi[(0, n - 1)].norm_sqr(),
            Err(_) => f64::NAN,
        }
    };
    let (fw, fw_at) = refine_max(grid, &s.forward, |w| corner(w, true));
    let (bw, bw_at) = refine_max(grid, &s.backward, |w| corner(w, false));
    Ok(PeakGains {
        forward: fw,
        forward_at: fw_at,
        backward: bw,
        backward_at: bw_at,
    })
}

fn refine_max(grid: &[f64], values: &[f64], f: impl Fn(f64) -> f64) -> (f64, f64) {
    let (i, _) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty grid");
    let mut a = grid[i.saturating_sub(1)];
    let mut b = grid[(i + 1).min(grid.len() - 1)];
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = f(x2);
        }
    }
    let (best, at) = if f1 >= f2 { (f1, x1) } else { (f2, x2) };
    if best.is_finite() && best > values[i] {
        (best, at)
    } else {
        (values[i], grid[i])
    }
}

/// Signal-to-recoil-noise entry for one chain length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrEntry {
    pub count: usize,
    /// `|F|^2 \int |chi_N1|^2 dw`.
    pub signal: f64,
    /// `\int sum chi_Nj 2 Re D_jj' chi_Nj'^* dw`.
    pub noise: f64,
    pub ratio: f64,
    /// Ratio divided by the first entry's ratio.
    pub normalized: f64,
    /// Largest real part of the time-domain drift spectrum; positive means
    /// the chain is unstable and the band integrals are formal.
    pub growth_rate: f64,
}

/// What [`snr_analysis`] does with a chain whose drift has a non-negative
/// eigenvalue real part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OnInstability {
    #[default]
    Reject,
    /// Evaluate anyway and report the growth rate in the entry.
    Report,
}

/// Band-integrated signal and recoil noise at the last particle of chains
/// of the given lengths, for a force of amplitude `signal` on particle 1.
/// Each chain is integrated over its own default grid.
pub fn snr_analysis(
    template: &ChainSpec,
    counts: &[usize],
    signal: f64,
    on_instability: OnInstability,
) -> Result<Vec<SnrEntry>> {
    let mut out: Vec<SnrEntry> = Vec::with_capacity(counts.len());
    for &count in counts {
        let chain = ChainSpec { count, ..*template };
        chain.validate()?;
        let growth = chain_growth_rate(&chain);
        if growth.0 >= 0.0 && on_instability == OnInstability::Reject {
            return Err(Error::Unstable {
                re: growth.0,
                im: growth.1,
            });
        }
        let spectrum = amplification_sweep(&chain, &default_grid(&chain))?;
        let d = chain.diffusion();
        let n = count;
        let mut s_curve = Vec::with_capacity(spectrum.omega.len());
        let mut n_curve = Vec::with_capacity(spectrum.omega.len());
        for chi in &spectrum.chi {
            s_curve.push(chi[(n - 1, 0)].norm_sqr() * signal * signal);
            let row = chi.row(n - 1);
            let mut acc = 0.0;
            for j in 0..n {
                for jp in 0..n {
                    acc += (row[j] * 2.0 * d[(j, jp)].re * row[jp].conj()).re;
                }
            }
            n_curve.push(acc);
        }
        let sig = trapezoid(&spectrum.omega, &s_curve);
        let noise = trapezoid(&spectrum.omega, &n_curve);
        if !(noise > 0.0) {
            return Err(Error::Degenerate("recoil noise vanishes; ratio is unbounded".into()));
        }
        let ratio = sig / noise;
        let normalized = out.first().map(|e| ratio / e.ratio).unwrap_or(1.0);
        out.push(SnrEntry {
            count,
            signal: sig,
            noise,
            ratio,
            normalized,
            growth_rate: growth.0,
        });
    }
    Ok(out)
}

/// Leading eigenvalue `(re, im)` of the time-domain drift
/// `z'' + gamma z' + omega0^2 z - (C/m) z = 0`.
pub fn chain_growth_rate(chain: &ChainSpec) -> (f64, f64) {
    let n = chain.count;
    let cm = chain.coupling_over_mass();
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        a[(j, n + j)] = 1.0;
        a[(n + j, j)] = -chain.omega0 * chain.omega0;
        a[(n + j, n + j)] = -chain.gamma;
        for jp in 0..n {
            if jp != j {
                a[(n + j, jp)] = cm[(j, jp)];
            }
        }
    }
    a.complex_eigenvalues()
        .iter()
        .map(|z| (z.re, z.im))
        .fold((f64::NEG_INFINITY, 0.0), |best, z| if z.0 > best.0 { z } else { best })
}

/// Partial sums of `-2 g omega0 sum_j [e^{-i kappa j}/j + (-1)^j e^{2i kappa j}/2j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BulkDispersion {
    /// `(J, S_J)` in natural order.
    pub natural: Vec<(usize, Complex64)>,
    /// `(J, sum of |term| over j <= J)`.
    pub absolute: Vec<(usize, f64)>,
    /// `(number of terms used, S)` under the rearrangement that takes two
    /// terms with non-negative real part, then one with negative real part,
    /// each group in natural order.
    pub reordered: Vec<(usize, Complex64)>,
    /// The natural-order series itself diverges at this `kappa`
    /// (`kappa = 0 mod 2 pi` or `kappa = pi/2 mod pi`).
    pub natural_divergent: bool,
}

fn bulk_term(kappa: f64, j: usize, scale: f64) -> Complex64 {
    let jf = j as f64;
    let sign = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
    let a = Complex64::from_polar(1.0 / jf, -kappa * jf);
    let b = Complex64::from_polar(sign / (2.0 * jf), 2.0 * kappa * jf);
    (a + b) * (-scale)
}

/// Partial sums at each of the (increasing) `checkpoints`.
pub fn bulk_dispersion_partial_sums(kappa: f64, omega0: f64, g: f64, checkpoints: &[usize]) -> Result<BulkDispersion> {
    if checkpoints.is_empty() || checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("checkpoints", "need increasing values >= 1"));
    }
    let scale = 2.0 * g * omega0;
    let j_max = *checkpoints.last().expect("non-empty");
    let mut natural = Vec::with_capacity(checkpoints.len());
    let mut absolute = Vec::with_capacity(checkpoints.len());
    let mut s = c(0.0, 0.0);
    let mut a = 0.0;
    let mut next = 0;
    for j in 1..=j_max {
        s += bulk_term(kappa, j, scale);
        a += 3.0 * g * omega0 / j as f64;
        if j == checkpoints[next] {
            natural.push((j, s));
            absolute.push((j, a));
            next += 1;
        }
    }
    // rearrangement: two from the non-negative queue, one from the negative
    let mut reordered = Vec::with_capacity(checkpoints.len());
    let (mut ip, mut ineg) = (1usize, 1usize);
    let mut next_pos = || loop {
        let t = bulk_term(kappa, ip, scale);
        ip += 1;
        if t.re >= 0.0 {
            return t;
        }
    };
    let mut next_neg = || loop {
        let t = bulk_term(kappa, ineg, scale);
        ineg += 1;
        if t.re < 0.0 || ineg > 64 * j_max + 64 {
            return if t.re < 0.0 { t } else { c(0.0, 0.0) };
        }
    };
    let mut r = c(0.0, 0.0);
    let mut used = 0usize;
    let mut next = 0;
    let has_negative = (1..=64).any(|j| bulk_term(kappa, j, scale).re < 0.0);
    let has_positive = (1..=64).any(|j| bulk_term(kappa, j, scale).re >= 0.0);
    if has_negative && has_positive {
        while next < checkpoints.len() {
            let t = match used % 3 {
                0 | 1 => next_pos(),
                _ => next_neg(),
            };
            r += t;
            used += 1;
            if used == checkpoints[next] {
                reordered.push((used, r));
                next += 1;
            }
        }
    }
    let two_pi = 2.0 * PI;
    let frac = |x: f64, p: f64| {
        let y = num_traits::Euclid::rem_euclid(&x, &p);
        y.min(p - y)
    };
    let natural_divergent = frac(kappa, two_pi) < 1e-12 || frac(kappa - 0.5 * PI, PI) < 1e-12;
    Ok(BulkDispersion {
        natural,
        absolute,
        reordered,
        natural_divergent,
    })
}
