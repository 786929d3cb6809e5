use nalgebra::{Matrix3, RowVector3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lm::{self, LmOptions};
use super::{fit_three_state, repair_infeasible_fit, ThreeStateParams};
use crate::dist::{Lifetime, PhaseType, Weibull};
use crate::error::{invalid, Error, Result};

/// Three transient phases in a feed-forward chain: phase `i` advances at
/// `advance[i]` (i < 2) and fails at `exit[i]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourStateParams {
    pub advance: [f64; 2],
    pub exit: [f64; 3],
}

impl FourStateParams {
    pub fn new(advance: [f64; 2], exit: [f64; 3]) -> Result<Self> {
        if advance.iter().chain(&exit).any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(invalid("four-state rates", "all five rates must be > 0"));
        }
        Ok(Self { advance, exit })
    }

    pub fn coxian(&self) -> Vec<(f64, f64)> {
        vec![
            (self.exit[0], self.advance[0]),
            (self.exit[1], self.advance[1]),
            (self.exit[2], 0.0),
        ]
    }

    pub fn to_phase_type(&self) -> PhaseType {
        PhaseType::coxian(&self.coxian()).expect("positive rates")
    }

    pub fn hazard_limit(&self) -> f64 {
        // Slowest-draining phase dominates the tail.
        let outflow = [
            self.exit[0] + self.advance[0],
            self.exit[1] + self.advance[1],
            self.exit[2],
        ];
        outflow.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn from_log(x: &[f64]) -> Self {
        Self {
            advance: [x[0].exp(), x[1].exp()],
            exit: [x[2].exp(), x[3].exp(), x[4].exp()],
        }
    }

    fn to_log(&self) -> [f64; 5] {
        [
            self.advance[0].ln(),
            self.advance[1].ln(),
            self.exit[0].ln(),
            self.exit[1].ln(),
            self.exit[2].ln(),
        ]
    }

    fn subgen(&self) -> Matrix3<f64> {
        let [a0, a1] = self.advance;
        let [f0, f1, f2] = self.exit;
        Matrix3::new(
            -(a0 + f0), a0, 0.0, //
            0.0, -(a1 + f1), a1, //
            0.0, 0.0, -f2,
        )
    }

    /// Hazard at `0, step, ..., (points-1) step`.
    pub fn hazard_grid(&self, step: f64, points: usize) -> Vec<f64> {
        let e = (self.subgen() * step).exp();
        let exit = Vector3::from(self.exit);
        let mut v = RowVector3::new(1.0, 0.0, 0.0);
        let mut out = Vec::with_capacity(points);
        for _ in 0..points {
            out.push((v * exit)[0] / v.sum());
            v *= e;
        }
        out
    }

    pub fn mean(&self) -> f64 {
        let [a0, a1] = self.advance;
        let [f0, f1, f2] = self.exit;
        let o0 = a0 + f0;
        let o1 = a1 + f1;
        1.0 / o0 + a0 / o0 * (1.0 / o1 + a1 / o1 / f2)
    }
}

impl Lifetime for FourStateParams {
    fn pdf(&self, t: f64) -> f64 {
        self.to_phase_type().pdf(t)
    }
    fn cdf(&self, t: f64) -> f64 {
        self.to_phase_type().cdf(t)
    }
    fn survival(&self, t: f64) -> f64 {
        self.to_phase_type().survival(t)
    }
    fn moment(&self, k: u32) -> Result<f64> {
        self.to_phase_type().moment(k)
    }
    fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.to_phase_type().sample(rng)
    }
}

/// Knobs for [`fit_four_state_with`].
#[derive(Debug, Clone, Copy)]
pub struct HazardFitOptions {
    pub starts: usize,
    pub seed: u64,
    /// Allowed relative error of the fitted mean; outside the band the
    /// objective gains a penalty term. The default 0 asks for an exact mean.
    pub mean_band: f64,
    pub step_tolerance: f64,
}

impl Default for HazardFitOptions {
    fn default() -> Self {
        Self {
            starts: 24,
            seed: 0x4f53_5441_5445,
            mean_band: 0.0,
            step_tolerance: 1e-10,
        }
    }
}

/// Result of the hazard-curve fit.
#[derive(Debug, Clone, Copy)]
pub struct HazardFit {
    pub params: FourStateParams,
    /// Root-mean-square relative hazard error over the grid.
    pub rms_relative: f64,
    pub starts_converged: usize,
}

pub fn fit_four_state(target: &Weibull, horizon: f64, grid: usize) -> Result<FourStateParams> {
    fit_four_state_with(target, horizon, grid, HazardFitOptions::default()).map(|f| f.params)
}

/// Least-squares match of the hazard curve on `grid + 1` uniform points
/// over `[0, horizon]`, from several perturbed starts around the
/// three-state moment fit.
pub fn fit_four_state_with(
    target: &Weibull,
    horizon: f64,
    grid: usize,
    opts: HazardFitOptions,
) -> Result<HazardFit> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(invalid("horizon", format!("must be > 0, got {horizon}")));
    }
    if grid < 4 {
        return Err(invalid("grid", "needs at least 4 intervals"));
    }
    let step = horizon / grid as f64;
    let points = grid + 1;
    let want: Vec<f64> = (0..points).map(|i| target.hazard(i as f64 * step)).collect();
    let mean = target.mean();

    let residual = |x: &[f64]| -> Vec<f64> {
        let p = FourStateParams::from_log(x);
        let mut r: Vec<f64> = p
            .hazard_grid(step, points)
            .into_iter()
            .zip(&want)
            .filter(|(_, w)| w.is_finite() && **w > 0.0)
            .map(|(h, w)| h / w - 1.0)
            .collect();
        let excess = ((p.mean() / mean - 1.0).abs() - opts.mean_band).max(0.0);
        r.push(100.0 * excess);
        r
    };

    let base = seed_params(target)?;
    let base_log = base.to_log();
    let lo_rate = 1e-6 / mean;
    let hi_rate = 1e6 / mean;
    let lower = [lo_rate.ln(); 5];
    let upper = [hi_rate.ln(); 5];

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let lm_opts = LmOptions {
        step_tolerance: opts.step_tolerance,
        ..LmOptions::default()
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut best_any = f64::INFINITY;
    let mut converged = 0;
    for start in 0..opts.starts.max(1) {
        let x0: Vec<f64> = base_log
            .iter()
            .map(|v| {
                if start == 0 {
                    *v
                } else {
                    v + 1.5 * (2.0 * rng.random::<f64>() - 1.0)
                }
            })
            .collect();
        let out = lm::minimize(&residual, &x0, &lower, &upper, lm_opts);
        best_any = best_any.min(out.cost);
        if !out.converged {
            continue;
        }
        converged += 1;
        if best.as_ref().is_none_or(|(c, _)| out.cost < *c) {
            best = Some((out.cost, out.x));
        }
    }
    let (cost, x) = best.ok_or(Error::HazardFitDiverged {
        best_residual: (2.0 * best_any).sqrt(),
    })?;
    Ok(HazardFit {
        params: FourStateParams::from_log(&x),
        rms_relative: (2.0 * cost / points as f64).sqrt(),
        starts_converged: converged,
    })
}

/// Starting point derived from the three-state fit (repaired if needed).
fn seed_params(target: &Weibull) -> Result<FourStateParams> {
    let m = target.moments()?;
    let three: ThreeStateParams = match fit_three_state(&m) {
        Ok((first, _)) => first,
        Err(err) => repair_infeasible_fit(&err, &m),
    };
    FourStateParams::new(
        [three.sigma, three.sigma],
        [three.alpha, three.beta, three.beta],
    )
}
