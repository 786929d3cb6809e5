//! Phase-type approximations of Weibull laws and their quality measures.

mod four_state;
mod lm;
mod three_state;

pub use four_state::{fit_four_state, fit_four_state_with, FourStateParams, HazardFit, HazardFitOptions};
pub use three_state::{closed_form, fit_three_state, RawThreeState, ThreeStateParams};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{Erlang, Lifetime, MomentTriple, PhaseType, Weibull};
use crate::error::{invalid, Result};
use crate::HOURS_PER_YEAR;

/// Window over which approximation quality is judged: ten years.
pub const DEFAULT_HORIZON: f64 = 10.0 * HOURS_PER_YEAR;
/// Grid intervals for [`cdf_deviation`].
pub const DEVIATION_POINTS: usize = 10_000;
/// Grid intervals for the hazard fit.
pub const HAZARD_GRID: usize = 200;
/// Smallest rate a repaired fit may carry, per hour.
pub const REPAIR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitErrorKind {
    /// Negative discriminant: `sigma` and `beta` come out complex.
    ComplexDiscriminant,
    /// Real solution with a rate that is not strictly positive.
    NegativeRate,
    /// The moments sit on a singular point of the closed form
    /// (e.g. exactly exponential).
    Degenerate,
}

/// A three-moment fit with no valid burn-in model. Carries the raw
/// closed-form values so [`repair_infeasible_fit`] can use them.
#[derive(Debug, Clone, Copy, PartialEq, Error, Serialize, Deserialize)]
#[error(
    "three-state fit infeasible ({kind:?}) for moments mu1={:.6e}, mu2={:.6e}, mu3={:.6e}",
    .moments.mu1,
    .moments.mu2,
    .moments.mu3
)]
pub struct FitError {
    pub kind: FitErrorKind,
    pub raw: Option<RawThreeState>,
    pub moments: MomentTriple,
}

/// Mean-matching Erlang fit: `rate = stages / mu1`.
pub fn fit_erlang(stages: u32, target: &Weibull) -> Result<Erlang> {
    if stages == 0 {
        return Err(invalid("stages", "must be >= 1"));
    }
    Erlang::new(stages, stages as f64 / target.mean())
}

/// Turn an infeasible closed-form solution into a valid burn-in model:
/// keep real parts, clamp to [`REPAIR_FLOOR`], then scale all rates by one
/// factor so the mean equals `m.mu1`.
pub fn repair_infeasible_fit(err: &FitError, m: &MomentTriple) -> ThreeStateParams {
    let clamp = |c: Option<num_complex::Complex64>| {
        let v = c.map(|c| c.re).unwrap_or(f64::NAN);
        if v.is_finite() {
            v.max(REPAIR_FLOOR)
        } else {
            REPAIR_FLOOR
        }
    };
    let raw = err.raw;
    let p = ThreeStateParams {
        alpha: clamp(raw.map(|r| r.alpha)),
        sigma: clamp(raw.map(|r| r.sigma)),
        beta: clamp(raw.map(|r| r.beta)),
    };
    let mean = p.to_phase_type().mean();
    p.scaled(mean / m.mu1)
}

/// Extremes of `approx.cdf - target.cdf` on `points + 1` uniform points
/// over `[0, horizon]`. Returns `(max_excess, min_deficit)`, clamped so
/// `max_excess >= 0 >= min_deficit`.
pub fn cdf_deviation<A: Lifetime + ?Sized>(
    approx: &A,
    target: &Weibull,
    horizon: f64,
    points: usize,
) -> Result<(f64, f64)> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(invalid("horizon", format!("must be > 0, got {horizon}")));
    }
    let step = horizon / points.max(1) as f64;
    let mut hi = 0.0f64;
    let mut lo = 0.0f64;
    for i in 0..=points {
        let t = i as f64 * step;
        let d = approx.cdf(t) - target.cdf(t);
        hi = hi.max(d);
        lo = lo.min(d);
    }
    Ok((hi, lo))
}

/// How a distribution is turned into phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    ThreeState,
    FourState,
    Erlang(u32),
    ExactExponential,
}

impl std::fmt::Display for FitMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FitMethod::ThreeState => f.write_str("three-state"),
            FitMethod::FourState => f.write_str("four-state"),
            FitMethod::Erlang(k) => write!(f, "erlang-{k}"),
            FitMethod::ExactExponential => f.write_str("exact-exponential"),
        }
    }
}

/// A fitted phase-type clock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "model")]
pub enum FittedModel {
    Exponential { rate: f64 },
    ThreeState(ThreeStateParams),
    FourState(FourStateParams),
    Erlang(Erlang),
}

impl FittedModel {
    /// `(exit, advance)` per phase, entered at phase 0.
    pub fn coxian(&self) -> Vec<(f64, f64)> {
        match self {
            FittedModel::Exponential { rate } => vec![(*rate, 0.0)],
            FittedModel::ThreeState(p) => p.coxian(),
            FittedModel::FourState(p) => p.coxian(),
            FittedModel::Erlang(e) => {
                let k = e.stages as usize;
                (0..k)
                    .map(|i| if i + 1 == k { (e.rate, 0.0) } else { (0.0, e.rate) })
                    .collect()
            }
        }
    }

    pub fn to_phase_type(&self) -> PhaseType {
        PhaseType::coxian(&self.coxian()).expect("fitted rates are valid")
    }

    pub fn phases(&self) -> usize {
        self.coxian().len()
    }

    pub fn hazard_limit(&self) -> f64 {
        match self {
            FittedModel::ThreeState(p) => p.hazard_limit(),
            FittedModel::FourState(p) => p.hazard_limit(),
            _ => self
                .coxian()
                .iter()
                .map(|(e, a)| e + a)
                .fold(f64::INFINITY, f64::min),
        }
    }
}

/// Outcome of fitting one distribution.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub method: FitMethod,
    pub target: Weibull,
    pub params: FittedModel,
    /// Second closed-form branch of a three-state fit (same density).
    pub alternate: Option<ThreeStateParams>,
    /// CDF deviations are taken over `[0, deviation_horizon]` hours.
    pub deviation_horizon: f64,
    pub max_cdf_excess: f64,
    pub min_cdf_deficit: f64,
    pub hazard_limit: f64,
    /// `fitted mean / target mean - 1`.
    pub mean_error: f64,
    /// The closed form was infeasible and the repair rule was applied.
    pub repaired: bool,
    /// Set when the repair was applied; names the infeasibility.
    pub infeasibility: Option<FitErrorKind>,
    /// The target is itself exponential and was represented exactly.
    pub exact: bool,
}

/// Ten years, or less when the target has essentially no mass beyond
/// (survival below 1e-9).
pub fn deviation_horizon(target: &Weibull) -> f64 {
    DEFAULT_HORIZON.min(target.from_uniform(1e-9))
}

/// Fit `target` with `method`. Infeasible three-state fits are repaired
/// when `allow_repair` is set and returned as errors otherwise.
pub fn fit_distribution(
    target: &Weibull,
    method: FitMethod,
    allow_repair: bool,
) -> Result<FitReport> {
    target.validate()?;
    let mut alternate = None;
    let mut repaired = false;
    let mut infeasibility = None;
    let exact = target.is_exponential() && !matches!(method, FitMethod::Erlang(k) if k > 1);
    let params = if exact {
        FittedModel::Exponential {
            rate: 1.0 / target.scale,
        }
    } else {
        match method {
            FitMethod::ExactExponential => FittedModel::Exponential {
                rate: 1.0 / target.mean(),
            },
            FitMethod::Erlang(k) => FittedModel::Erlang(fit_erlang(k, target)?),
            FitMethod::ThreeState => {
                let m = target.moments()?;
                match fit_three_state(&m) {
                    Ok((first, second)) => {
                        alternate = Some(second);
                        FittedModel::ThreeState(first)
                    }
                    Err(err) if allow_repair => {
                        repaired = true;
                        infeasibility = Some(err.kind);
                        FittedModel::ThreeState(repair_infeasible_fit(&err, &m))
                    }
                    Err(err) => return Err(err.into()),
                }
            }
            FitMethod::FourState => {
                FittedModel::FourState(fit_four_state(target, DEFAULT_HORIZON, HAZARD_GRID)?)
            }
        }
    };
    let ph = params.to_phase_type();
    let horizon = deviation_horizon(target);
    let (max_cdf_excess, min_cdf_deficit) = match &params {
        FittedModel::ThreeState(p) => cdf_deviation(p, target, horizon, DEVIATION_POINTS)?,
        _ => {
            let step = horizon / DEVIATION_POINTS as f64;
            ph.grid(step, DEVIATION_POINTS + 1)
                .iter()
                .enumerate()
                .map(|(i, (s, _))| (1.0 - s) - target.cdf(i as f64 * step))
                .fold((0.0f64, 0.0f64), |(hi, lo), d| (hi.max(d), lo.min(d)))
        }
    };
    Ok(FitReport {
        method,
        target: *target,
        params,
        alternate,
        deviation_horizon: horizon,
        max_cdf_excess,
        min_cdf_deficit,
        hazard_limit: params.hazard_limit(),
        mean_error: ph.mean() / target.mean() - 1.0,
        repaired,
        infeasibility,
        exact,
    })
}
