use std::time::Instant;

use serde::Serialize;

use super::{analyze, SystemConfig};
use crate::error::{invalid, Result};
use crate::phfit::{FitErrorKind, FitMethod};

/// Result of one shape value of a sensitivity sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub shape: f64,
    /// TTOp scale after mean preservation.
    pub scale: f64,
    pub probability: f64,
    /// Lumped states including LOSS.
    pub states: usize,
    /// Some three-state fit of this point was repaired.
    pub repaired: bool,
    pub infeasibility: Option<FitErrorKind>,
    /// TTOp was exponential and represented exactly.
    pub exact: bool,
    pub seconds: f64,
}

/// Probability of data loss by `t` hours for each TTOp shape, holding the
/// TTOp mean fixed. Infeasible three-state fits are always repaired and
/// flagged; an exponential TTOp is represented exactly.
pub fn shape_sensitivity_sweep(
    cfg: &SystemConfig,
    shapes: &[f64],
    t: f64,
    epsilon: f64,
    state_cap: usize,
) -> Result<Vec<SweepPoint>> {
    shapes
        .iter()
        .map(|&shape| {
            let started = Instant::now();
            let mut point = cfg.clone();
            if !(shape.is_finite() && shape > 0.0) {
                return Err(invalid("shape", format!("must be positive, got {shape}")));
            }
            point.ttop = cfg.ttop.with_shape_same_mean(shape)?;
            point.fit_plan.allow_repair = true;
            let ttop_method = point.fit_plan.ttop;
            let a = analyze(&point, &[t], epsilon, 1.0, state_cap)?;
            let f = &a.fits;
            let infeasibility = [Some(&f.failure), Some(&f.rebuild), f.scrub.as_ref()]
                .into_iter()
                .flatten()
                .find_map(|r| r.infeasibility);
            Ok(SweepPoint {
                shape,
                scale: point.ttop.scale,
                probability: a.series.points[0].analytic.unwrap_or(0.0),
                states: a.states,
                repaired: f.any_repaired(),
                infeasibility,
                exact: f.failure.exact || ttop_method == FitMethod::ExactExponential,
                seconds: started.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctmc::DEFAULT_EPSILON;

    #[test]
    fn rejects_bad_shape() {
        let cfg = SystemConfig::elerath(6, 1, FitMethod::ThreeState);
        for bad in [0.0, -1.0, f64::NAN] {
            assert!(shape_sensitivity_sweep(&cfg, &[bad], 1000.0, DEFAULT_EPSILON, 1000).is_err());
        }
    }
}
