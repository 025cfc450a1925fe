use anovaemu::db_anova::ScreeningThresholds;
use anovaemu::df_emulator::PlanSampling;
use anovaemu::heat_pde::PdeConfig;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// Resolved configuration: file values overridden by command-line flags.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub thresholds: ScreeningThresholds,
    pub benchmark: BenchmarkSection,
    pub pde: PdeConfig,
    pub external: ExternalSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Sample size; the default depends on the command.
    pub n: Option<usize>,
    pub seed: u64,
    pub eps: f64,
    pub d0: Option<usize>,
    /// Mixture weight of the alternative base law.
    pub tau: Option<f64>,
    pub out: PathBuf,
    pub test_n: usize,
    /// Sample size of the screening run used when `d0` is not given.
    pub screen_n: usize,
    pub sampling: PlanSampling,
    /// Estimate total indices during screening (default: yes, except for the PDE).
    pub total: Option<bool>,
    pub workers: Option<usize>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            n: None,
            seed: 0,
            eps: 0.05,
            d0: None,
            tau: None,
            out: PathBuf::from("anovaemu-out"),
            test_n: 500,
            screen_n: 1 << 14,
            sampling: PlanSampling::JointQmc,
            total: None,
            workers: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkSection {
    pub replications: usize,
    pub ns: Vec<usize>,
}

impl Default for BenchmarkSection {
    fn default() -> Self {
        Self {
            replications: 50,
            ns: vec![250, 1000, 4000],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    pub kind: String,
    pub params: Vec<f64>,
}

/// Inputs of a model evaluated outside this program.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExternalSection {
    pub inputs: Vec<InputSpec>,
    /// 1-based influential inputs; restricts components to their subsets.
    pub influential: Option<Vec<usize>>,
    /// CSV of model outputs in plan-row order (column `y`).
    pub outputs: Option<PathBuf>,
    /// CSV of points to predict at (one column per input).
    pub predict_at: Option<PathBuf>,
}
