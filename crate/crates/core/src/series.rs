//! Time series of data-loss figures.

use serde::Serialize;

use crate::sim::SimEstimate;
use crate::HOURS_PER_YEAR;

/// One grid time with its analytic and/or simulated DDF value.
#[derive(Debug, Clone, Serialize)]
pub struct DdfPoint {
    /// Hours.
    pub time: f64,
    /// `multiplier * P(loss by time)` from the chain solver.
    pub analytic: Option<f64>,
    pub simulated: Option<SimEstimate>,
}

impl DdfPoint {
    pub fn years(&self) -> f64 {
        self.time / HOURS_PER_YEAR
    }

    /// `(analytic - simulated) / simulated * 100`, when both exist.
    pub fn deviation_percent(&self) -> Option<f64> {
        let a = self.analytic?;
        let s = self.simulated.as_ref()?.estimate;
        (s != 0.0).then(|| (a - s) / s * 100.0)
    }
}

/// DDF(t): expected data-loss events per `multiplier` groups.
#[derive(Debug, Clone, Serialize)]
pub struct DdfSeries {
    pub multiplier: f64,
    pub points: Vec<DdfPoint>,
}

impl DdfSeries {
    pub fn analytic(times: &[f64], probabilities: &[f64], multiplier: f64) -> Self {
        Self {
            multiplier,
            points: times
                .iter()
                .zip(probabilities)
                .map(|(&time, &p)| DdfPoint {
                    time,
                    analytic: Some(p * multiplier),
                    simulated: None,
                })
                .collect(),
        }
    }

    pub fn simulated(estimates: Vec<(f64, SimEstimate)>, multiplier: f64) -> Self {
        Self {
            multiplier,
            points: estimates
                .into_iter()
                .map(|(time, e)| DdfPoint {
                    time,
                    analytic: None,
                    simulated: Some(e),
                })
                .collect(),
        }
    }

    /// Join an analytic series with a simulated one on the same grid.
    pub fn merge(analytic: &DdfSeries, simulated: &DdfSeries) -> Self {
        let points = analytic
            .points
            .iter()
            .zip(&simulated.points)
            .map(|(a, s)| {
                debug_assert_eq!(a.time, s.time);
                DdfPoint {
                    time: a.time,
                    analytic: a.analytic,
                    simulated: s.simulated.clone(),
                }
            })
            .collect();
        Self {
            multiplier: analytic.multiplier,
            points,
        }
    }

    pub fn analytic_values(&self) -> Vec<f64> {
        self.points.iter().filter_map(|p| p.analytic).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.time).collect()
    }
}

/// Grid of whole years, in hours.
pub fn years_grid(years: &[f64]) -> Vec<f64> {
    years.iter().map(|y| y * HOURS_PER_YEAR).collect()
}
