//! Discrete-event Monte Carlo simulation of one group.
//!
//! Each disk carries absolute event times; a clock is only drawn when its
//! process starts, never on another disk's transition. Replication `r`
//! uses the ChaCha8 stream `r` of the master seed, so estimates do not
//! depend on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF};

use crate::dist::{sample_exp, Lifetime, PhaseType, Weibull};
use crate::error::{invalid, Result};
use crate::raid::{
    fit_system, mds_loss_predicate, LossPredicate, LossTrigger, RebuildEntry, ScrubMode,
    SystemConfig,
};
use crate::ctmc::{ClassCounts, TransitionKind};
use crate::series::DdfSeries;

/// 95% two-sided normal quantile.
const Z95: f64 = 1.959_963_984_540_054;
/// Fewest replications an estimate is built from.
pub const MIN_REPS: u64 = 100;
/// Below this many events the exact binomial interval is reported.
const EXACT_CI_BELOW: u64 = 30;

/// Fraction of replications with a loss by one grid time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimEstimate {
    /// `multiplier * losses / reps`.
    pub estimate: f64,
    /// Half-width of the 95% interval, in the same units.
    pub half_width: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub reps: u64,
    pub losses: u64,
    pub seed: u64,
    /// The interval is Clopper-Pearson rather than the normal approximation.
    pub exact_ci: bool,
}

impl SimEstimate {
    pub fn from_counts(losses: u64, reps: u64, seed: u64, multiplier: f64) -> Self {
        assert!(reps >= 1 && losses <= reps);
        let n = reps as f64;
        let p = losses as f64 / n;
        let exact_ci = losses < EXACT_CI_BELOW;
        let (lo, hi) = if exact_ci {
            clopper_pearson(losses, reps)
        } else {
            let hw = Z95 * (p * (1.0 - p) / n).sqrt();
            ((p - hw).max(0.0), (p + hw).min(1.0))
        };
        let half_width = if exact_ci {
            (hi - lo) / 2.0
        } else {
            Z95 * (p * (1.0 - p) / n).sqrt()
        };
        Self {
            estimate: p * multiplier,
            half_width: half_width * multiplier,
            ci_low: lo * multiplier,
            ci_high: hi * multiplier,
            reps,
            losses,
            seed,
            exact_ci,
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }
}

/// Exact 95% binomial interval.
pub fn clopper_pearson(k: u64, n: u64) -> (f64, f64) {
    let (kf, nf) = (k as f64, n as f64);
    let lo = if k == 0 {
        0.0
    } else {
        Beta::new(kf, nf - kf + 1.0).expect("positive shapes").inverse_cdf(0.025)
    };
    let hi = if k == n {
        1.0
    } else {
        Beta::new(kf + 1.0, nf - kf).expect("positive shapes").inverse_cdf(0.975)
    };
    (lo, hi)
}

/// A disk clock: the true Weibull law or a fitted phase-type.
#[derive(Debug, Clone)]
pub enum Clock {
    Weibull(Weibull),
    PhaseType(PhaseType),
}

impl Clock {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Clock::Weibull(w) => w.sample(rng),
            Clock::PhaseType(p) => p.sample(rng),
        }
    }
}

/// Everything the event loop needs about one group.
#[derive(Debug, Clone)]
pub struct GroupModel {
    pub n: usize,
    pub loss: LossPredicate,
    pub scrub_mode: ScrubMode,
    pub rebuild_entry: RebuildEntry,
    pub failure: Clock,
    /// Phase-type failure clock entered after an in-place repair.
    pub restored_failure: Option<PhaseType>,
    pub rebuild: Clock,
    pub scrub: Option<Clock>,
    pub defect_rate: Option<f64>,
}

impl GroupModel {
    /// True Weibull clocks from the configuration.
    pub fn weibull(cfg: &SystemConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            n: cfg.n,
            loss: mds_loss_predicate(cfg),
            scrub_mode: cfg.options.scrub,
            rebuild_entry: cfg.options.rebuild,
            failure: Clock::Weibull(cfg.ttop),
            restored_failure: None,
            rebuild: Clock::Weibull(cfg.ttr),
            scrub: cfg.ttld.and(cfg.ttscr).map(Clock::Weibull),
            defect_rate: cfg.ttld.map(|d| 1.0 / d.mean()),
        })
    }

    /// The fitted phase-type clocks the chain is built from.
    pub fn phase_type(cfg: &SystemConfig) -> Result<Self> {
        let fits = fit_system(cfg)?;
        let failure = fits.failure.params.to_phase_type();
        let restored_failure = Some(failure.started_in(failure.size() - 1)?);
        Ok(Self {
            n: cfg.n,
            loss: mds_loss_predicate(cfg),
            scrub_mode: cfg.options.scrub,
            rebuild_entry: cfg.options.rebuild,
            failure: Clock::PhaseType(failure),
            restored_failure,
            rebuild: Clock::PhaseType(fits.rebuild.params.to_phase_type()),
            scrub: fits.scrub.map(|s| Clock::PhaseType(s.params.to_phase_type())),
            defect_rate: fits.defect_rate,
        })
    }

    fn defects(&self) -> Option<(f64, &Clock)> {
        Some((self.defect_rate?, self.scrub.as_ref()?))
    }
}

#[derive(Debug, Clone, Copy)]
struct Disk {
    /// Absolute time the current disk's life began.
    installed: f64,
    failed: bool,
    defect: bool,
    fail_at: f64,
    defect_at: f64,
    scrub_at: f64,
    rebuild_at: f64,
}

const NEVER: f64 = f64::INFINITY;

/// Remaining failure time of a disk that starts or resumes operating at
/// `now`, installed at `installed`.
fn draw_failure<R: Rng + ?Sized>(
    model: &GroupModel,
    installed: f64,
    now: f64,
    restored: bool,
    rng: &mut R,
) -> f64 {
    match (&model.failure, restored) {
        (Clock::Weibull(w), _) => w.sample_residual(now - installed, rng),
        (Clock::PhaseType(_), true) => model
            .restored_failure
            .as_ref()
            .expect("restored clock")
            .sample(rng),
        (clock, false) => clock.sample(rng),
    }
}

/// Start the clean-disk defect and scrub processes at `now`.
fn start_clean<R: Rng + ?Sized>(model: &GroupModel, d: &mut Disk, now: f64, rng: &mut R) {
    d.defect = false;
    d.defect_at = NEVER;
    d.scrub_at = NEVER;
    if let Some((rate, scrub)) = model.defects() {
        d.defect_at = now + sample_exp(rate, rng);
        if model.scrub_mode == ScrubMode::FreeRunning {
            d.scrub_at = now + scrub.sample(rng);
        }
    }
}

fn counts(disks: &[Disk]) -> ClassCounts {
    ClassCounts {
        failed: disks.iter().filter(|d| d.failed).count(),
        latent: disks.iter().filter(|d| !d.failed && d.defect).count(),
    }
}

/// Run one group up to `horizon` hours; returns the first loss time.
pub fn simulate_group<R: Rng + ?Sized>(model: &GroupModel, horizon: f64, rng: &mut R) -> Option<f64> {
    use crate::ctmc::LossRule;
    let mut disks: Vec<Disk> = (0..model.n)
        .map(|_| {
            let mut d = Disk {
                installed: 0.0,
                failed: false,
                defect: false,
                fail_at: 0.0,
                defect_at: NEVER,
                scrub_at: NEVER,
                rebuild_at: NEVER,
            };
            d.fail_at = draw_failure(model, 0.0, 0.0, false, rng);
            start_clean(model, &mut d, 0.0, rng);
            d
        })
        .collect();
    loop {
        let (i, now, kind) = disks
            .iter()
            .enumerate()
            .flat_map(|(i, d)| {
                [
                    (i, d.fail_at, TransitionKind::Failure),
                    (i, d.defect_at, TransitionKind::Defect),
                    (i, d.scrub_at, TransitionKind::Scrub),
                    (i, d.rebuild_at, TransitionKind::Rebuild),
                ]
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("at least one disk");
        if now > horizon {
            return None;
        }
        let d = &mut disks[i];
        match kind {
            TransitionKind::Failure => {
                *d = Disk {
                    failed: true,
                    defect: false,
                    fail_at: NEVER,
                    defect_at: NEVER,
                    scrub_at: NEVER,
                    rebuild_at: now + model.rebuild.sample(rng),
                    ..*d
                };
            }
            TransitionKind::Defect => {
                d.defect = true;
                d.defect_at = NEVER;
                if model.scrub_mode == ScrubMode::OnDefect {
                    let (_, scrub) = model.defects().expect("defects modeled");
                    d.scrub_at = now + scrub.sample(rng);
                }
            }
            TransitionKind::Scrub => {
                let scrub_at_next = match model.scrub_mode {
                    ScrubMode::FreeRunning => {
                        let (_, scrub) = model.defects().expect("defects modeled");
                        now + scrub.sample(rng)
                    }
                    ScrubMode::OnDefect => NEVER,
                };
                if d.defect {
                    d.defect = false;
                    d.defect_at = now + sample_exp(model.defect_rate.expect("defects modeled"), rng);
                }
                d.scrub_at = scrub_at_next;
            }
            TransitionKind::Rebuild => {
                let restored = model.rebuild_entry == RebuildEntry::Restore;
                if !restored {
                    d.installed = now;
                }
                d.failed = false;
                d.rebuild_at = NEVER;
                d.fail_at = now + draw_failure(model, d.installed, now, restored, rng);
                start_clean(model, d, now, rng);
            }
            TransitionKind::Advance => unreachable!("not a simulated event"),
        }
        let checked = match model.loss.trigger {
            LossTrigger::OnFailure => kind == TransitionKind::Failure,
            LossTrigger::AnyTransition => true,
        };
        if checked && model.loss.triggers(counts(&disks), kind) {
            return Some(now);
        }
    }
}

/// First-loss times of `reps` independent replications (`None` when the
/// group survives `horizon`).
pub fn loss_times(model: &GroupModel, horizon: f64, reps: u64, seed: u64) -> Vec<Option<f64>> {
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r);
            simulate_group(model, horizon, &mut rng)
        })
        .collect()
}

/// Cumulative loss counts on `grid`, as a series of estimates.
pub fn estimate_with(
    model: &GroupModel,
    grid: &[f64],
    reps: u64,
    seed: u64,
    multiplier: f64,
) -> Result<DdfSeries> {
    if reps < MIN_REPS {
        return Err(invalid("reps", format!("need at least {MIN_REPS} replications, got {reps}")));
    }
    if grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(invalid("grid", "times must be finite and >= 0"));
    }
    let horizon = grid.iter().copied().fold(0.0, f64::max);
    let times = loss_times(model, horizon, reps, seed);
    let estimates = grid
        .iter()
        .map(|&t| {
            let losses = times.iter().filter(|x| x.is_some_and(|x| x <= t)).count() as u64;
            (t, SimEstimate::from_counts(losses, reps, seed, multiplier))
        })
        .collect();
    Ok(DdfSeries::simulated(estimates, multiplier))
}

/// DDF estimated with true Weibull clocks.
pub fn estimate_ddf(
    cfg: &SystemConfig,
    grid: &[f64],
    reps: u64,
    seed: u64,
    multiplier: f64,
) -> Result<DdfSeries> {
    estimate_with(&GroupModel::weibull(cfg)?, grid, reps, seed, multiplier)
}

/// DDF estimated with the fitted phase-type clocks.
pub fn estimate_ddf_phasetype(
    cfg: &SystemConfig,
    grid: &[f64],
    reps: u64,
    seed: u64,
    multiplier: f64,
) -> Result<DdfSeries> {
    estimate_with(&GroupModel::phase_type(cfg)?, grid, reps, seed, multiplier)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phfit::FitMethod;
    use crate::raid::{FitPlan, ModelOptions};

    fn exp_cfg(n: usize, k: usize, mttf: f64, mttr: f64) -> SystemConfig {
        SystemConfig {
            n,
            k,
            ttop: Weibull::exponential(mttf).unwrap(),
            ttld: None,
            ttr: Weibull::exponential(mttr).unwrap(),
            ttscr: None,
            fit_plan: FitPlan {
                ttop: FitMethod::ExactExponential,
                ttr: FitMethod::ExactExponential,
                ttscr: FitMethod::ExactExponential,
                allow_repair: false,
            },
            options: ModelOptions::default(),
        }
    }

    #[test]
    fn normal_interval() {
        let e = SimEstimate::from_counts(500, 1000, 1, 1000.0);
        assert_eq!(e.estimate, 500.0);
        let hw = Z95 * (0.25f64 / 1000.0).sqrt() * 1000.0;
        assert!((e.half_width - hw).abs() < 1e-9);
        assert!(!e.exact_ci);
    }

    #[test]
    fn clopper_pearson_reference_values() {
        // Zero events: upper bound 1 - 0.025^(1/n).
        let (lo, hi) = clopper_pearson(0, 100);
        assert_eq!(lo, 0.0);
        assert!((hi - (1.0 - 0.025f64.powf(0.01))).abs() < 1e-10);
        // All events mirror it.
        let (lo, hi) = clopper_pearson(100, 100);
        assert!((lo - 0.025f64.powf(0.01)).abs() < 1e-10);
        assert_eq!(hi, 1.0);
        let e = SimEstimate::from_counts(3, 1000, 0, 1.0);
        assert!(e.exact_ci && e.half_width > 0.0 && e.contains(0.003));
    }

    #[test]
    fn long_lived_disks_survive() {
        let cfg = exp_cfg(6, 5, 1e12, 10.0);
        let s = estimate_ddf(&cfg, &[87_600.0], 1000, 7, 1.0).unwrap();
        assert!(s.points[0].simulated.as_ref().unwrap().estimate <= 0.001);
    }

    #[test]
    fn deterministic_by_seed() {
        let cfg = SystemConfig::elerath(6, 1, FitMethod::ThreeState);
        let grid = [8760.0, 87_600.0];
        let a = estimate_ddf(&cfg, &grid, 2000, 42, 1000.0).unwrap();
        let b = estimate_ddf(&cfg, &grid, 2000, 42, 1000.0).unwrap();
        let c = estimate_ddf(&cfg, &grid, 2000, 43, 1000.0).unwrap();
        let v = |s: &DdfSeries| -> Vec<u64> {
            s.points.iter().map(|p| p.simulated.as_ref().unwrap().losses).collect()
        };
        assert_eq!(v(&a), v(&b));
        assert_ne!(v(&a), v(&c));
    }

    #[test]
    fn cumulative_counts_are_monotone() {
        let cfg = SystemConfig::elerath(6, 1, FitMethod::ThreeState);
        let grid: Vec<f64> = (1..=10).map(|y| y as f64 * 8760.0).collect();
        let s = estimate_ddf(&cfg, &grid, 3000, 5, 1000.0).unwrap();
        let losses: Vec<u64> = s.points.iter().map(|p| p.simulated.as_ref().unwrap().losses).collect();
        assert!(losses.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn two_disk_mirror_matches_analytic() {
        // Two exponential disks without repair: loss by t is (1 - e^{-lt})^2.
        let cfg = exp_cfg(2, 1, 1000.0, 1e12);
        let t = 1000.0;
        let s = estimate_ddf(&cfg, &[t], 20_000, 11, 1.0).unwrap();
        let e = s.points[0].simulated.clone().unwrap();
        let exact = (1.0 - (-1.0f64).exp()).powi(2);
        assert!((e.estimate - exact).abs() < 3.0 * e.half_width, "{e:?} vs {exact}");
    }
}
