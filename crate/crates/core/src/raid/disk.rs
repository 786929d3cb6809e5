use serde::Serialize;

use super::{ModelOptions, RebuildEntry, ScrubMode, SystemConfig};
use crate::ctmc::{DiskLocalModel, LocalState, LocalTransition, TransitionKind};
use crate::dist::Lifetime;
use crate::error::Result;
use crate::phfit::{fit_distribution, FitReport};

/// Fitted phase-type clocks of one disk.
#[derive(Debug, Clone, Serialize)]
pub struct FittedSystem {
    pub failure: FitReport,
    pub rebuild: FitReport,
    pub scrub: Option<FitReport>,
    /// Latent defects per hour of operation, if modeled.
    pub defect_rate: Option<f64>,
}

impl FittedSystem {
    pub fn any_repaired(&self) -> bool {
        self.failure.repaired
            || self.rebuild.repaired
            || self.scrub.as_ref().is_some_and(|s| s.repaired)
    }
}

pub fn fit_system(cfg: &SystemConfig) -> Result<FittedSystem> {
    cfg.validate()?;
    let plan = &cfg.fit_plan;
    let failure = fit_distribution(&cfg.ttop, plan.ttop, plan.allow_repair)?;
    let rebuild = fit_distribution(&cfg.ttr, plan.ttr, plan.allow_repair)?;
    let scrub = match (&cfg.ttld, &cfg.ttscr) {
        (Some(_), Some(s)) => Some(fit_distribution(s, plan.ttscr, plan.allow_repair)?),
        _ => None,
    };
    let defect_rate = cfg.ttld.map(|ld| 1.0 / ld.mean());
    Ok(FittedSystem {
        failure,
        rebuild,
        scrub,
        defect_rate,
    })
}

/// Fit the configured clocks and build the per-disk chain.
pub fn build_disk_model(cfg: &SystemConfig) -> Result<DiskLocalModel> {
    let fitted = fit_system(cfg)?;
    Ok(disk_model_from_fits(&fitted, &cfg.options))
}

/// Operational states are (failure phase, defect, scrub stage); failed
/// states are the rebuild stages.
///
/// With [`ScrubMode::FreeRunning`] every operational state carries a scrub
/// stage and a defect flag (`P * 2 * S` states). With
/// [`ScrubMode::OnDefect`] a clean disk has no scrub stage and a defective
/// one sits in one of the `S` scrub stages (`P * (1 + S)` states).
pub fn disk_model_from_fits(fitted: &FittedSystem, options: &ModelOptions) -> DiskLocalModel {
    let failure = fitted.failure.params.coxian();
    let rebuild = fitted.rebuild.params.coxian();
    let scrub: Vec<(f64, f64)> = fitted
        .scrub
        .as_ref()
        .map(|s| s.params.coxian())
        .unwrap_or_default();
    let defects = fitted.defect_rate.filter(|_| !scrub.is_empty());
    Builder {
        failure,
        rebuild,
        scrub,
        defect_rate: defects,
        options: *options,
    }
    .build()
}

struct Builder {
    failure: Vec<(f64, f64)>,
    rebuild: Vec<(f64, f64)>,
    scrub: Vec<(f64, f64)>,
    defect_rate: Option<f64>,
    options: ModelOptions,
}

/// Key of an operational state.
#[derive(Clone, Copy, PartialEq, Eq)]
struct Op {
    phase: usize,
    defect: bool,
    scrub: Option<usize>,
}

impl Builder {
    fn op_states(&self) -> Vec<Op> {
        let mut v = Vec::new();
        for phase in 0..self.failure.len() {
            match (self.defect_rate, self.options.scrub) {
                (None, _) => v.push(Op { phase, defect: false, scrub: None }),
                (Some(_), ScrubMode::FreeRunning) => {
                    for defect in [false, true] {
                        for s in 0..self.scrub.len() {
                            v.push(Op { phase, defect, scrub: Some(s) });
                        }
                    }
                }
                (Some(_), ScrubMode::OnDefect) => {
                    v.push(Op { phase, defect: false, scrub: None });
                    for s in 0..self.scrub.len() {
                        v.push(Op { phase, defect: true, scrub: Some(s) });
                    }
                }
            }
        }
        v
    }

    /// State a clean disk starts in for the given phase.
    fn clean(&self, phase: usize) -> Op {
        match (self.defect_rate, self.options.scrub) {
            (Some(_), ScrubMode::FreeRunning) => Op { phase, defect: false, scrub: Some(0) },
            _ => Op { phase, defect: false, scrub: None },
        }
    }

    fn build(&self) -> DiskLocalModel {
        let ops = self.op_states();
        let n_ops = ops.len();
        let idx = |op: Op| ops.iter().position(|o| *o == op).expect("state exists");
        let mut states: Vec<LocalState> = ops
            .iter()
            .map(|o| LocalState {
                label: format!(
                    "op[p{}{}{}]",
                    o.phase,
                    if o.defect { ",defect" } else { "" },
                    o.scrub.map(|s| format!(",s{s}")).unwrap_or_default()
                ),
                failure_phase: Some(o.phase),
                latent_defect: o.defect,
                scrub_stage: o.scrub,
                rebuild_stage: None,
            })
            .collect();
        for r in 0..self.rebuild.len() {
            states.push(LocalState {
                label: format!("rebuild[{r}]"),
                failure_phase: None,
                latent_defect: false,
                scrub_stage: None,
                rebuild_stage: Some(r),
            });
        }

        let mut tr = Vec::new();
        let mut push = |from: usize, to: usize, rate: f64, kind| {
            if rate > 0.0 && from != to {
                tr.push(LocalTransition { from, to, rate, kind });
            }
        };
        for (i, o) in ops.iter().enumerate() {
            let (exit, advance) = self.failure[o.phase];
            push(i, n_ops, exit, TransitionKind::Failure);
            if advance > 0.0 {
                push(i, idx(Op { phase: o.phase + 1, ..*o }), advance, TransitionKind::Advance);
            }
            let Some(ld) = self.defect_rate else { continue };
            match self.options.scrub {
                ScrubMode::FreeRunning => {
                    let s = o.scrub.expect("free-running scrub stage");
                    if !o.defect {
                        push(i, idx(Op { defect: true, ..*o }), ld, TransitionKind::Defect);
                    }
                    let (done, next) = self.scrub[s];
                    push(i, idx(Op { phase: o.phase, defect: false, scrub: Some(0) }), done, TransitionKind::Scrub);
                    if next > 0.0 {
                        push(i, idx(Op { scrub: Some(s + 1), ..*o }), next, TransitionKind::Scrub);
                    }
                }
                ScrubMode::OnDefect => match o.scrub {
                    None => push(
                        i,
                        idx(Op { phase: o.phase, defect: true, scrub: Some(0) }),
                        ld,
                        TransitionKind::Defect,
                    ),
                    Some(s) => {
                        let (done, next) = self.scrub[s];
                        push(i, idx(self.clean(o.phase)), done, TransitionKind::Scrub);
                        if next > 0.0 {
                            push(i, idx(Op { scrub: Some(s + 1), ..*o }), next, TransitionKind::Scrub);
                        }
                    }
                },
            }
        }
        let entry_phase = match self.options.rebuild {
            RebuildEntry::Replace => 0,
            RebuildEntry::Restore => self.failure.len() - 1,
        };
        let back = idx(self.clean(entry_phase));
        for (r, &(done, next)) in self.rebuild.iter().enumerate() {
            push(n_ops + r, back, done, TransitionKind::Rebuild);
            if next > 0.0 {
                push(n_ops + r, n_ops + r + 1, next, TransitionKind::Rebuild);
            }
        }
        DiskLocalModel {
            initial: idx(self.clean(0)),
            states,
            transitions: tr,
        }
    }
}
