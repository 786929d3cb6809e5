//! Lumped system chains and their transient solution.

mod chain;
mod model;
mod uniformization;

pub use chain::{build_lumped_chain, build_naive_chain, LumpedChain, DEFAULT_STATE_CAP};
pub use model::{
    ClassCounts, DiskLocalModel, LocalState, LocalTransition, LossRule, TransitionKind,
};
pub use uniformization::{
    poisson_window, propagate, transient, uniformize, PoissonWindow, TransientResult,
    DEFAULT_EPSILON, MAX_QT,
};

use crate::error::Result;
use crate::series::DdfSeries;

/// LOSS probability at each grid time, scaled by `multiplier` (e.g. 1000
/// for "per thousand groups").
pub fn loss_probability(
    chain: &LumpedChain,
    grid: &[f64],
    epsilon: f64,
    multiplier: f64,
) -> Result<DdfSeries> {
    let r = transient(chain, grid, epsilon, false)?;
    Ok(DdfSeries::analytic(&r.times, &r.loss, multiplier))
}
