use serde::{Deserialize, Serialize};

use crate::dist::Weibull;
use crate::error::{invalid, Result};
use crate::phfit::FitMethod;

/// When a disk's scrub clock runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScrubMode {
    /// The scrub clock starts when a defect appears; completing it clears
    /// the defect. Time-to-scrub is the defect's exposure time.
    #[default]
    OnDefect,
    /// Every operational disk runs a periodic scrub clock; a completion
    /// clears whatever defect is present and restarts the clock.
    FreeRunning,
}

/// When the loss predicate is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossTrigger {
    /// Only on operational failures: data is lost when a disk fails while
    /// the group is already at its tolerance, or at the tolerance with a
    /// latent defect elsewhere.
    #[default]
    OnFailure,
    /// After every transition.
    AnyTransition,
}

/// Where a disk resumes after its rebuild completes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RebuildEntry {
    /// A new disk: first failure phase, age zero.
    #[default]
    Replace,
    /// The same disk: last failure phase (burnt in); the simulator keeps
    /// its age.
    Restore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelOptions {
    pub scrub: ScrubMode,
    pub loss_trigger: LossTrigger,
    pub rebuild: RebuildEntry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitPlan {
    pub ttop: FitMethod,
    pub ttr: FitMethod,
    pub ttscr: FitMethod,
    /// Repair infeasible three-state fits instead of failing.
    pub allow_repair: bool,
}

impl Default for FitPlan {
    fn default() -> Self {
        Self {
            ttop: FitMethod::ThreeState,
            ttr: FitMethod::Erlang(3),
            ttscr: FitMethod::Erlang(3),
            allow_repair: false,
        }
    }
}

/// An MDS(n, k) group: `n` disks, any `k` of which hold the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n: usize,
    pub k: usize,
    /// Time to operational failure.
    pub ttop: Weibull,
    /// Time to latent defect; exponential only. `None` disables defects.
    pub ttld: Option<Weibull>,
    /// Time to restore (rebuild).
    pub ttr: Weibull,
    /// Time to scrub.
    pub ttscr: Option<Weibull>,
    pub fit_plan: FitPlan,
    pub options: ModelOptions,
}

impl SystemConfig {
    /// Fault tolerance `m = n - k`.
    pub fn tolerance(&self) -> usize {
        self.n - self.k
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k >= 1 && self.k < self.n) {
            return Err(invalid("k", format!("need 1 <= k < n, got n={}, k={}", self.n, self.k)));
        }
        self.ttop.validate()?;
        self.ttr.validate()?;
        if let Some(ld) = &self.ttld {
            ld.validate()?;
            if !ld.is_exponential() {
                return Err(invalid("ttld", "latent defects must be exponential (shape 1, offset 0)"));
            }
            if self.ttscr.is_none() {
                return Err(invalid("ttscr", "required when latent defects are modeled"));
            }
        }
        if let Some(s) = &self.ttscr {
            s.validate()?;
        }
        Ok(())
    }

    /// Case Study 1 disk parameters for an `n`-disk group tolerating `m`
    /// failures: Weibull(1.12, 461386) failures, exponential defects with
    /// mean 9259 h, Weibull(2, 12, 6) rebuilds and Weibull(3, 168, 6) scrubs.
    pub fn elerath(n: usize, m: usize, ttop_plan: FitMethod) -> Self {
        Self {
            n,
            k: n - m,
            ttop: Weibull { shape: 1.12, scale: 461_386.0, offset: 0.0 },
            ttld: Some(Weibull { shape: 1.0, scale: 9259.0, offset: 0.0 }),
            ttr: Weibull { shape: 2.0, scale: 12.0, offset: 6.0 },
            ttscr: Some(Weibull { shape: 3.0, scale: 168.0, offset: 6.0 }),
            fit_plan: FitPlan {
                ttop: ttop_plan,
                ..FitPlan::default()
            },
            options: ModelOptions::default(),
        }
    }
}
