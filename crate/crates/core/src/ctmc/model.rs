use serde::Serialize;

use crate::error::{Error, Result};

/// What a local transition represents. Loss rules may react to the kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransitionKind {
    /// Operational disk fails and enters rebuild.
    Failure,
    /// Move to the next failure phase (e.g. burn-in completes).
    Advance,
    /// A latent sector defect appears.
    Defect,
    /// A scrub stage completes.
    Scrub,
    /// A rebuild stage completes.
    Rebuild,
}

/// One state of the per-disk chain.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct LocalState {
    pub label: String,
    /// Failure phase while operational; `None` while failed.
    pub failure_phase: Option<usize>,
    pub latent_defect: bool,
    pub scrub_stage: Option<usize>,
    /// Rebuild stage while failed.
    pub rebuild_stage: Option<usize>,
}

impl LocalState {
    pub fn operational(&self) -> bool {
        self.rebuild_stage.is_none()
    }

    pub fn failed(&self) -> bool {
        self.rebuild_stage.is_some()
    }

    pub fn burn_in(&self) -> bool {
        self.failure_phase == Some(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalTransition {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
    pub kind: TransitionKind,
}

/// Per-disk CTMC shared by every disk of a group.
#[derive(Debug, Clone, Serialize)]
pub struct DiskLocalModel {
    pub states: Vec<LocalState>,
    pub transitions: Vec<LocalTransition>,
    pub initial: usize,
}

impl DiskLocalModel {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Outgoing transitions, grouped by source state.
    pub fn outgoing(&self) -> Vec<Vec<LocalTransition>> {
        let mut out = vec![Vec::new(); self.states.len()];
        for t in &self.transitions {
            out[t.from].push(*t);
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.states.len();
        if n == 0 || self.initial >= n {
            return Err(Error::InvalidModel("no initial state".into()));
        }
        let init = &self.states[self.initial];
        if !(init.operational() && !init.latent_defect) {
            return Err(Error::InvalidModel(
                "initial state must be operational and defect-free".into(),
            ));
        }
        for t in &self.transitions {
            if t.from >= n || t.to >= n {
                return Err(Error::InvalidModel(format!("transition {t:?} out of range")));
            }
            if t.from == t.to {
                return Err(Error::InvalidModel(format!("self-loop on state {}", t.from)));
            }
            if !(t.rate.is_finite() && t.rate > 0.0) {
                return Err(Error::InvalidModel(format!("non-positive rate in {t:?}")));
            }
        }
        // Every failed state must lead back to service.
        let out = self.outgoing();
        for (i, s) in self.states.iter().enumerate().filter(|(_, s)| s.failed()) {
            let mut seen = vec![false; n];
            let mut stack = vec![i];
            let mut ok = false;
            while let Some(j) = stack.pop() {
                if self.states[j].operational() {
                    ok = true;
                    break;
                }
                for t in &out[j] {
                    if !seen[t.to] {
                        seen[t.to] = true;
                        stack.push(t.to);
                    }
                }
            }
            if !ok {
                return Err(Error::InvalidModel(format!(
                    "failed state `{}` never returns to service",
                    s.label
                )));
            }
        }
        Ok(())
    }
}

/// Disk counts per label class in an occupancy vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassCounts {
    pub failed: usize,
    /// Operational disks carrying a latent defect.
    pub latent: usize,
}

impl ClassCounts {
    pub fn of(model: &DiskLocalModel, occupancy: &[u16]) -> Self {
        let mut c = ClassCounts::default();
        for (s, &k) in model.states.iter().zip(occupancy) {
            if s.failed() {
                c.failed += k as usize;
            } else if s.latent_defect {
                c.latent += k as usize;
            }
        }
        c
    }
}

/// Decides whether a transition lands in the absorbing LOSS state.
/// Implementations must depend on counts only, never on disk identity.
pub trait LossRule {
    fn triggers(&self, counts: ClassCounts, event: TransitionKind) -> bool;
}

impl<F> LossRule for F
where
    F: Fn(ClassCounts, TransitionKind) -> bool,
{
    fn triggers(&self, counts: ClassCounts, event: TransitionKind) -> bool {
        self(counts, event)
    }
}
