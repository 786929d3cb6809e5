use serde::Serialize;

use super::{LossTrigger, SystemConfig};
use crate::ctmc::{ClassCounts, LossRule, TransitionKind};

/// Data loss for an MDS code tolerating `tolerance` failed disks: more
/// failures than that, or exactly that many with a latent defect on a
/// surviving disk (the defective sectors cannot be reconstructed).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LossPredicate {
    pub tolerance: usize,
    pub trigger: LossTrigger,
}

impl LossPredicate {
    pub fn is_lossy(&self, counts: ClassCounts) -> bool {
        counts.failed > self.tolerance || (counts.failed == self.tolerance && counts.latent >= 1)
    }
}

impl LossRule for LossPredicate {
    fn triggers(&self, counts: ClassCounts, event: TransitionKind) -> bool {
        match self.trigger {
            LossTrigger::AnyTransition => self.is_lossy(counts),
            LossTrigger::OnFailure => event == TransitionKind::Failure && self.is_lossy(counts),
        }
    }
}

pub fn mds_loss_predicate(cfg: &SystemConfig) -> LossPredicate {
    LossPredicate {
        tolerance: cfg.tolerance(),
        trigger: cfg.options.loss_trigger,
    }
}
