//! Ensemble integration of the linear model with Gaussian momentum kicks.
//!
//! Each ensemble member draws from its own ChaCha8 stream, selected by
//! `(seed, member)`, so members can be integrated in any order or in
//! parallel and still reproduce bit for bit.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dynamics::LinearModel;
use crate::error::{Error, Result};

/// Largest admissible step as a fraction of the shortest trap period.
pub const MAX_STEP_FRACTION: f64 = 0.05;
/// Default step as a fraction of the shortest trap period.
pub const DEFAULT_STEP_FRACTION: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    /// Momentum update first, positions from the new momenta. Keeps the
    /// undamped oscillator bounded for `omega dt < 2`.
    #[default]
    SemiImplicit,
    /// Plain Euler–Maruyama; amplitudes grow unless `gamma > omega^2 dt`.
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Record {
    /// Ensemble sums of `x` and `x x^T` every `stride` steps.
    Moments { stride: usize },
    /// Full state of every member every `stride` steps.
    Paths { stride: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Start {
    /// Deterministic equilibrium `-A^{-1} b`.
    Equilibrium,
    Origin,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub dt: f64,
    pub steps: usize,
    pub ensemble: usize,
    pub seed: u64,
    pub integrator: Integrator,
    pub record: Record,
    pub start: Start,
}

impl SimulationConfig {
    /// Step of `0.02` shortest trap periods.
    pub fn default_dt(model: &LinearModel) -> f64 {
        DEFAULT_STEP_FRACTION * 2.0 * PI / max_frequency(model)
    }
}

fn max_frequency(model: &LinearModel) -> f64 {
    model.omega.iter().copied().fold(0.0, f64::max)
}

/// Precomputed integration data shared by all members.
#[derive(Debug, Clone)]
pub struct Stepper {
    drift: DMatrix<f64>,
    forcing: DVector<f64>,
    inv_mass: DVector<f64>,
    /// `B` with `B B^T = N_pp dt`.
    kick: DMatrix<f64>,
    start: DVector<f64>,
    config: SimulationConfig,
}

impl Stepper {
    pub fn new(model: &LinearModel, config: SimulationConfig) -> Result<Self> {
        let n = model.len();
        if n == 0 {
            return Err(Error::invalid("model", "empty model"));
        }
        if config.ensemble == 0 {
            return Err(Error::invalid("ensemble", "must be at least 1"));
        }
        let stride = match config.record {
            Record::Moments { stride } | Record::Paths { stride } => stride,
        };
        if stride == 0 {
            return Err(Error::invalid("stride", "must be at least 1"));
        }
        let bound = MAX_STEP_FRACTION * 2.0 * PI / max_frequency(model);
        if !(config.dt > 0.0) || config.dt > bound {
            return Err(Error::TimeStep { dt: config.dt, bound });
        }
        let npp = model.noise.view((n, n), (n, n)).into_owned();
        if model.noise.view((0, 0), (n, 2 * n)).iter().any(|x| *x != 0.0) {
            return Err(Error::invalid("noise", "position rows must be free of noise"));
        }
        let eig = SymmetricEigen::new(npp.clone());
        let trace = npp.trace().abs();
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -1e-12 * trace.max(f64::MIN_POSITIVE) {
            return Err(Error::NotPositiveSemidefinite(min));
        }
        let roots = eig.eigenvalues.map(|l| (l.max(0.0) * config.dt).sqrt());
        let kick = &eig.eigenvectors * DMatrix::from_diagonal(&roots);
        let start = match config.start {
            Start::Equilibrium => model.equilibrium()?,
            Start::Origin => DVector::zeros(2 * n),
        };
        Ok(Stepper {
            drift: model.drift.clone(),
            forcing: model.forcing(),
            inv_mass: model.mass.map(|m| 1.0 / m),
            kick,
            start,
            config,
        })
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    fn len(&self) -> usize {
        self.inv_mass.len()
    }

    /// Random stream of one ensemble member.
    pub fn rng(&self, member: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(member as u64);
        rng
    }

    /// Integrates one member, calling `visit(step, state)` at step 0 and at
    /// every multiple of `stride`.
    pub fn run_member(&self, member: usize, stride: usize, mut visit: impl FnMut(usize, &DVector<f64>)) {
        let n = self.len();
        let dt = self.config.dt;
        let mut rng = self.rng(member);
        let mut x = self.start.clone();
        let mut xi = DVector::zeros(n);
        let mut dp = DVector::zeros(n);
        visit(0, &x);
        for step in 1..=self.config.steps {
            for v in xi.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            // momentum increment from the drift rows, forcing and kicks
            dp.gemv(dt, &self.drift.rows(n, n), &x, 0.0);
            dp += self.forcing.rows(n, n) * dt;
            dp.gemv(1.0, &self.kick, &xi, 1.0);
            match self.config.integrator {
                Integrator::SemiImplicit => {
                    for j in 0..n {
                        x[n + j] += dp[j];
                        x[j] += dt * self.inv_mass[j] * x[n + j];
                    }
                }
                Integrator::Explicit => {
                    for j in 0..n {
                        x[j] += dt * self.inv_mass[j] * x[n + j];
                        x[n + j] += dp[j];
                    }
                }
            }
            if step % stride == 0 {
                visit(step, &x);
            }
        }
    }
}

/// Ensemble sums at each recorded step.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSeries {
    pub steps: Vec<usize>,
    pub sum: Vec<DVector<f64>>,
    pub sum_outer: Vec<DMatrix<f64>>,
    pub count: usize,
}

impl MomentSeries {
    pub fn new(recorded: usize, dim: usize) -> Self {
        MomentSeries {
            steps: Vec::with_capacity(recorded),
            sum: vec![DVector::zeros(dim); recorded],
            sum_outer: vec![DMatrix::zeros(dim, dim); recorded],
            count: 0,
        }
    }

    /// Adds another partial series over the same steps (members are summed
    /// in the order the partials are merged).
    pub fn merge(&mut self, other: &MomentSeries) {
        if self.steps.is_empty() {
            self.steps = other.steps.clone();
        }
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_outer.iter_mut().zip(&other.sum_outer) {
            *a += b;
        }
        self.count += other.count;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnsembleData {
    Moments(MomentSeries),
    /// `paths[member][record]` state vectors.
    Paths {
        steps: Vec<usize>,
        paths: Vec<Vec<DVector<f64>>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEnsemble {
    pub config: SimulationConfig,
    pub data: EnsembleData,
}

impl TrajectoryEnsemble {
    pub fn times(&self) -> Vec<f64> {
        let steps = match &self.data {
            EnsembleData::Moments(m) => &m.steps,
            EnsembleData::Paths { steps, .. } => steps,
        };
        steps.iter().map(|s| *s as f64 * self.config.dt).collect()
    }
}

fn recorded_steps(steps: usize, stride: usize) -> Vec<usize> {
    (0..=steps).filter(|s| s % stride == 0).collect()
}

/// Moment series of a contiguous range of members.
pub fn member_moments(stepper: &Stepper, members: core::ops::Range<usize>, stride: usize) -> MomentSeries {
    let dim = 2 * stepper.len();
    let steps = recorded_steps(stepper.config.steps, stride);
    let mut series = MomentSeries::new(steps.len(), dim);
    series.steps = steps;
    for member in members {
        let mut slot = 0;
        stepper.run_member(member, stride, |_, x| {
            series.sum[slot] += x;
            series.sum_outer[slot].ger(1.0, x, x, 1.0);
            slot += 1;
        });
        series.count += 1;
    }
    series
}

/// Recorded states of one member.
pub fn member_path(stepper: &Stepper, member: usize, stride: usize) -> Vec<DVector<f64>> {
    let mut out = Vec::new();
    stepper.run_member(member, stride, |_, x| out.push(x.clone()));
    out
}

/// Sequential ensemble integration.
pub fn simulate_trajectories(model: &LinearModel, config: SimulationConfig) -> Result<TrajectoryEnsemble> {
    let stepper = Stepper::new(model, config)?;
    let data = match config.record {
        Record::Moments { stride } => EnsembleData::Moments(member_moments(&stepper, 0..config.ensemble, stride)),
        Record::Paths { stride } => EnsembleData::Paths {
            steps: recorded_steps(config.steps, stride),
            paths: (0..config.ensemble).map(|m| member_path(&stepper, m, stride)).collect(),
        },
    };
    Ok(TrajectoryEnsemble { config, data })
}

/// Covariance about the mean over all members and all recorded times in
/// `[t0, t1]`.
pub fn ensemble_covariance(ensemble: &TrajectoryEnsemble, window: (f64, f64)) -> Result<DMatrix<f64>> {
    let times = ensemble.times();
    let inside: Vec<usize> = (0..times.len())
        .filter(|i| times[*i] >= window.0 && times[*i] <= window.1)
        .collect();
    if inside.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let (mut sum, mut outer, mut count) = match &ensemble.data {
        EnsembleData::Moments(m) => {
            let dim = m.sum[0].len();
            (DVector::zeros(dim), DMatrix::zeros(dim, dim), 0usize)
        }
        EnsembleData::Paths { paths, .. } => {
            let dim = paths[0][0].len();
            (DVector::zeros(dim), DMatrix::zeros(dim, dim), 0usize)
        }
    };
    match &ensemble.data {
        EnsembleData::Moments(m) => {
            for &i in &inside {
                sum += &m.sum[i];
                outer += &m.sum_outer[i];
                count += m.count;
            }
        }
        EnsembleData::Paths { paths, .. } => {
            for path in paths {
                for &i in &inside {
                    sum += &path[i];
                    outer.ger(1.0, &path[i], &path[i], 1.0);
                    count += 1;
                }
            }
        }
    }
    let n = count as f64;
    let mean = sum / n;
    let cov = outer / n - &mean * mean.transpose();
    Ok(0.5 * (&cov + cov.transpose()))
}
