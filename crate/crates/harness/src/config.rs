use std::collections::HashSet;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use vrpca::{SolverConfig, SolverConstants, SpectrumSpec};

use crate::error::{HarnessError, Result};
use crate::io::DatasetFormat;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    File {
        path: PathBuf,
        /// Inferred from the extension when absent.
        #[serde(default)]
        format: Option<DatasetFormat>,
    },
    Synthetic(SyntheticSource),
}

/// Covariance spectrum `head` extended geometrically to `dim` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSource {
    pub head: Vec<f64>,
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default = "default_tail_ratio")]
    pub tail_ratio: f64,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_tail_ratio() -> f64 {
    0.5
}

impl SyntheticSource {
    pub fn spectrum(&self) -> SpectrumSpec {
        SpectrumSpec::geometric_tail(self.dim.unwrap_or(self.head.len()), &self.head, self.tail_ratio)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    Vector,
    Block,
    Deflation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum InitChoice {
    Gaussian,
    Power,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BurnInSettings {
    /// Lower bound on the initial alignment; `1/d` when absent.
    pub zeta: Option<f64>,
    pub eta: Option<f64>,
    pub plateau_tol: f64,
}

impl Default for BurnInSettings {
    fn default() -> Self {
        BurnInSettings {
            zeta: None,
            eta: None,
            plateau_tol: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: Option<DatasetSource>,
    pub solver: SolverChoice,
    pub k: usize,
    /// Step size; chosen from the eigengap when absent.
    pub eta: Option<f64>,
    /// Epoch length; chosen from the eigengap when absent.
    pub m: Option<usize>,
    pub epochs: usize,
    pub delta: f64,
    pub epsilon: f64,
    pub use_rotation: bool,
    pub early_exit: bool,
    pub record_wall_time: bool,
    /// Eigengap `s_k − s_{k+1}` in the units of the input data. Taken from
    /// the exact spectrum when absent and one is available.
    pub lambda: Option<f64>,
    pub constants: SolverConstants,
    pub init: InitChoice,
    pub burn_in: Option<BurnInSettings>,
    /// Divide every point by `√r` first, so that `max ‖x_i‖ = 1`.
    pub rescale: bool,
    /// Compare against the exact top-`k` subspace (the generating basis for
    /// synthetic data, the dense eigendecomposition otherwise).
    pub verify: bool,
    pub output_dir: Option<PathBuf>,
    pub seeds: Vec<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let s = SolverConfig::default();
        ExperimentConfig {
            dataset: None,
            solver: SolverChoice::Vector,
            k: 1,
            eta: None,
            m: None,
            epochs: s.epochs,
            delta: s.delta,
            epsilon: s.epsilon,
            use_rotation: s.use_rotation,
            early_exit: s.early_exit,
            record_wall_time: false,
            lambda: None,
            constants: SolverConstants::default(),
            init: InitChoice::Gaussian,
            burn_in: None,
            rescale: false,
            verify: true,
            output_dir: None,
            seeds: vec![1],
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.dataset.is_none() {
            return Err(HarnessError::Config(
                "no dataset: give a file or a synthetic spectrum".into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(HarnessError::Config("at least one seed is required".into()));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = self.seeds.iter().find(|s| !seen.insert(**s)) {
            return Err(HarnessError::Config(format!("seed {dup} is listed twice")));
        }
        if self.solver == SolverChoice::Vector && self.k != 1 {
            return Err(HarnessError::Config(format!(
                "the vector solver needs k = 1, got {}",
                self.k
            )));
        }
        if self.burn_in.is_some() && self.k != 1 {
            return Err(HarnessError::Config("burn-in is only defined for k = 1".into()));
        }
        if let Some(DatasetSource::Synthetic(s)) = &self.dataset {
            if s.head.is_empty() {
                return Err(HarnessError::Config("synthetic spectrum head is empty".into()));
            }
        }
        Ok(())
    }
}
