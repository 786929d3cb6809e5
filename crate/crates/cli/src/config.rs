//! The run configuration document.

use serde::{Deserialize, Serialize};

use raidrel_core::ctmc::{DEFAULT_EPSILON, DEFAULT_STATE_CAP};
use raidrel_core::dist::Weibull;
use raidrel_core::raid::{FitPlan, ModelOptions, SystemConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSection,
    pub distributions: Distributions,
    #[serde(default)]
    pub fit_plan: FitPlan,
    #[serde(default)]
    pub model: ModelOptions,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub n: usize,
    pub k: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Distributions {
    pub ttop: DistSpec,
    #[serde(default)]
    pub ttld: Option<DistSpec>,
    pub ttr: DistSpec,
    #[serde(default)]
    pub ttscr: Option<DistSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Weibull,
    Exponential,
}

/// `{family, shape, scale, offset}`; an exponential takes `mean` (or
/// `scale`) only.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistSpec {
    pub family: Family,
    #[serde(default)]
    pub shape: Option<f64>,
    #[serde(default)]
    pub scale: Option<f64>,
    #[serde(default)]
    pub offset: Option<f64>,
    #[serde(default)]
    pub mean: Option<f64>,
}

impl DistSpec {
    pub fn to_weibull(&self, key: &str) -> Result<Weibull, String> {
        let bad = |field: &str, why: &str| format!("distributions.{key}.{field}: {why}");
        let w = match self.family {
            Family::Weibull => {
                if self.mean.is_some() {
                    return Err(bad("mean", "not a Weibull parameter (use shape/scale/offset)"));
                }
                Weibull {
                    shape: self.shape.ok_or_else(|| bad("shape", "missing"))?,
                    scale: self.scale.ok_or_else(|| bad("scale", "missing"))?,
                    offset: self.offset.unwrap_or(0.0),
                }
            }
            Family::Exponential => {
                if self.shape.is_some_and(|s| s != 1.0) {
                    return Err(bad("shape", "an exponential has shape 1"));
                }
                if self.offset.is_some_and(|o| o != 0.0) {
                    return Err(bad("offset", "an exponential has no offset"));
                }
                let mean = match (self.mean, self.scale) {
                    (Some(m), None) | (None, Some(m)) => m,
                    (Some(_), Some(_)) => return Err(bad("mean", "give mean or scale, not both")),
                    (None, None) => return Err(bad("mean", "missing")),
                };
                Weibull { shape: 1.0, scale: mean, offset: 0.0 }
            }
        };
        w.validate().map_err(|e| format!("distributions.{key}: {e}"))?;
        Ok(w)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    pub grid_years: Vec<f64>,
    pub epsilon: f64,
    pub group_multiplier: f64,
    pub state_cap: usize,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            grid_years: (1..=10).map(f64::from).collect(),
            epsilon: DEFAULT_EPSILON,
            group_multiplier: 1000.0,
            state_cap: DEFAULT_STATE_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Clocks {
    /// True Weibull clocks.
    #[default]
    Weibull,
    /// The fitted phase-type clocks the chain uses.
    PhaseType,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub reps: u64,
    pub seed: u64,
    pub clocks: Clocks,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            reps: 100_000,
            seed: 1,
            clocks: Clocks::Weibull,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParameter {
    /// TTOp shape at fixed TTOp mean.
    TtopShape,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    #[serde(default = "ten_years")]
    pub t_years: f64,
    /// MDS configurations to sweep; defaults to `system`.
    #[serde(default)]
    pub systems: Vec<SystemSection>,
}

fn ten_years() -> f64 {
    10.0
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        if text.trim().is_empty() {
            return Err("config file is empty".into());
        }
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn system(&self) -> Result<SystemConfig, String> {
        self.system_with(self.system)
    }

    pub fn system_with(&self, sys: SystemSection) -> Result<SystemConfig, String> {
        let d = &self.distributions;
        let cfg = SystemConfig {
            n: sys.n,
            k: sys.k,
            ttop: d.ttop.to_weibull("ttop")?,
            ttld: d.ttld.map(|s| s.to_weibull("ttld")).transpose()?,
            ttr: d.ttr.to_weibull("ttr")?,
            ttscr: d.ttscr.map(|s| s.to_weibull("ttscr")).transpose()?,
            fit_plan: self.fit_plan,
            options: self.model,
        };
        cfg.validate().map_err(|e| match e {
            raidrel_core::Error::InvalidParameter { name: "k", reason } => {
                format!("system.k: {reason}")
            }
            raidrel_core::Error::InvalidParameter { name, reason } => {
                format!("distributions.{name}: {reason}")
            }
            other => other.to_string(),
        })?;
        Ok(cfg)
    }
}
