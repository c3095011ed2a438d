//! Parallel ensemble integration with thread-count independent output.

use optobind_core::dynamics::LinearModel;
use optobind_core::stochastic::{
    member_moments, member_path, EnsembleData, MomentSeries, Record, SimulationConfig, Stepper, TrajectoryEnsemble,
};
use rayon::prelude::*;

use crate::error::{CliError, CliResult};

/// Members per work unit. Partial sums are merged in block order, so the
/// floating-point summation order is fixed by this constant alone.
pub const BLOCK: usize = 16;

pub fn run_ensemble(
    model: &LinearModel,
    config: SimulationConfig,
    threads: Option<usize>,
) -> CliResult<TrajectoryEnsemble> {
    let stepper = Stepper::new(model, config)?;
    let work = || match config.record {
        Record::Moments { stride } => {
            let starts: Vec<usize> = (0..config.ensemble).step_by(BLOCK).collect();
            let partials: Vec<MomentSeries> = starts
                .par_iter()
                .map(|&start| member_moments(&stepper, start..(start + BLOCK).min(config.ensemble), stride))
                .collect();
            let mut total = MomentSeries::new(partials[0].steps.len(), 2 * model.len());
            for p in &partials {
                total.merge(p);
            }
            EnsembleData::Moments(total)
        }
        Record::Paths { stride } => EnsembleData::Paths {
            steps: (0..=config.steps).filter(|s| s % stride == 0).collect(),
            paths: (0..config.ensemble)
                .into_par_iter()
                .map(|m| member_path(&stepper, m, stride))
                .collect(),
        },
    };
    let data = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {t} worker threads: {e}")))?
            .install(work),
        None => work(),
    };
    Ok(TrajectoryEnsemble { config, data })
}
