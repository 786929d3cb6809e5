//! Concrete RAID / MDS group models built from fitted disk clocks.

mod config;
mod disk;
mod loss;
mod sweep;

pub use config::{FitPlan, LossTrigger, ModelOptions, RebuildEntry, ScrubMode, SystemConfig};
pub use disk::{build_disk_model, disk_model_from_fits, fit_system, FittedSystem};
pub use loss::{mds_loss_predicate, LossPredicate};
pub use sweep::{shape_sensitivity_sweep, SweepPoint};

use std::time::Instant;

use serde::Serialize;

use crate::ctmc::{build_lumped_chain, loss_probability, LumpedChain};
use crate::error::Result;
use crate::series::DdfSeries;

/// Lumped chain of a configured group together with the fits behind it.
#[derive(Debug, Clone)]
pub struct SystemChain {
    pub fits: FittedSystem,
    pub local_states: usize,
    pub chain: LumpedChain,
}

pub fn build_system_chain(cfg: &SystemConfig, state_cap: usize) -> Result<SystemChain> {
    let fits = fit_system(cfg)?;
    let disk = disk_model_from_fits(&fits, &cfg.options);
    let chain = build_lumped_chain(&disk, cfg.n, &mds_loss_predicate(cfg), state_cap)?;
    Ok(SystemChain {
        fits,
        local_states: disk.len(),
        chain,
    })
}

/// Analytic DDF series of a group.
#[derive(Debug, Clone, Serialize)]
pub struct Analysis {
    pub series: DdfSeries,
    /// Lumped states including LOSS.
    pub states: usize,
    pub local_states: usize,
    pub epsilon: f64,
    pub fits: FittedSystem,
    pub seconds: f64,
}

/// Fit, build and solve: `multiplier * P(loss by t)` on `grid` (hours).
pub fn analyze(
    cfg: &SystemConfig,
    grid: &[f64],
    epsilon: f64,
    multiplier: f64,
    state_cap: usize,
) -> Result<Analysis> {
    let started = Instant::now();
    let sys = build_system_chain(cfg, state_cap)?;
    let series = loss_probability(&sys.chain, grid, epsilon, multiplier)?;
    Ok(Analysis {
        series,
        states: sys.chain.len(),
        local_states: sys.local_states,
        epsilon,
        fits: sys.fits,
        seconds: started.elapsed().as_secs_f64(),
    })
}
