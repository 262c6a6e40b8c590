//! Experiment configuration documents.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use ncergo_core::io::{AlgebraBlockJson, KernelJson, OperatorJson};
use ncergo_core::kernel::DEFAULT_DIM_CAP;

use crate::error::CliError;

/// The nine experiment kinds, in listing order.
pub const EXPERIMENTS: [(&str, &str); 9] = [
    ("dp-region", "raster of the scalar convergence region against the empirical oracle"),
    ("cesaro", "multi-parameter Cesaro averages of commuting kernels on a grid"),
    ("mean-l1", "L1 convergence of averages of a random commuting CPTP pair"),
    ("vnwalker", "rectangle averages of a commuting normal pair on a Hilbert space"),
    ("freegroup", "free-group word averages built by the three-term recurrence"),
    ("dominance", "minimal constant dominating rectangle averages by power averages"),
    ("maximal", "projection certificate for the maximal inequality"),
    ("counterexample", "shift averages on l1 with unit norm and decaying entries"),
    ("brunel", "dominance of cube averages by the Brunel operator"),
];

pub fn is_experiment(name: &str) -> bool {
    EXPERIMENTS.iter().any(|(n, _)| *n == name)
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Verification tolerance for kernels, spectra and commutation.
    #[serde(default = "default_kernel_tol")]
    pub kernel: f64,
    /// Tail tolerance for convergence verdicts; the default depends on the experiment.
    pub convergence: Option<f64>,
}

fn default_kernel_tol() -> f64 {
    1e-9
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { kernel: default_kernel_tol(), convergence: None }
    }
}

/// Either a seeded draw or explicit documents.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum KernelSpec {
    Generate { generate: String },
    List(Vec<KernelJson>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum OperatorSpec {
    Generate {
        generate: String,
        #[serde(default = "one")]
        count: usize,
    },
    List(Vec<OperatorJson>),
}

fn one() -> usize {
    1
}

/// Generator images for the two free-group actions.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilySpec {
    /// Powers of the cyclic shift on the diagonal algebra of `Z_ring`.
    Rotations { ring: usize, steps1: Vec<usize>, steps2: Vec<usize> },
    /// Seeded commuting block unitaries on the configured algebra.
    RandomUnitaries { r1: usize, r2: usize },
}

impl Default for FamilySpec {
    fn default() -> Self {
        FamilySpec::Rotations { ring: 8, steps1: vec![1, 2], steps2: vec![3, 2] }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub experiment: Option<String>,
    #[serde(default)]
    pub seed: u64,
    pub horizon: Option<usize>,
    pub output: Option<PathBuf>,
    pub dim_cap: Option<usize>,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub algebra: Option<Vec<AlgebraBlockJson>>,
    pub kernels: Option<KernelSpec>,
    pub operators: Option<OperatorSpec>,
    pub family: Option<FamilySpec>,

    // dp-region
    pub p_fwd: Option<f64>,
    pub grid_points: Option<usize>,
    pub extent: Option<f64>,
    pub min_agreement: Option<f64>,

    // vnwalker
    pub dim: Option<usize>,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    pub x01: Option<OperatorJson>,
    pub x10: Option<OperatorJson>,

    // dominance
    pub m_max: Option<usize>,
    pub max_ratio: Option<f64>,

    // maximal, brunel
    pub eps: Option<Vec<f64>>,
    pub chi_mode: Option<String>,
    pub kadison: Option<bool>,
    pub brunel_order: Option<usize>,

    // counterexample
    pub n_dim: Option<usize>,
}

/// Command-line values that take precedence over the document.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub horizon: Option<usize>,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Applies overrides and checks the experiment name against `requested`.
    pub fn resolve(mut self, requested: &str, o: &Overrides) -> Result<Self, CliError> {
        if !is_experiment(requested) {
            return Err(CliError::Config(format!("unknown experiment {requested:?}")));
        }
        match &self.experiment {
            Some(e) if e != requested => {
                return Err(CliError::Config(format!("config is for {e:?}, command line asks for {requested:?}")));
            }
            _ => self.experiment = Some(requested.to_string()),
        }
        if let Some(p) = &o.out {
            self.output = Some(p.clone());
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(h) = o.horizon {
            self.horizon = Some(h);
        }
        if self.output.is_none() {
            return Err(CliError::Config("no output path (set \"output\" or pass --out)".into()));
        }
        if self.horizon == Some(0) {
            return Err(CliError::Config("horizon must be at least 1".into()));
        }
        if !(self.tolerances.kernel > 0.0) || self.tolerances.convergence.is_some_and(|t| !(t > 0.0)) {
            return Err(CliError::Config("tolerances must be positive".into()));
        }
        Ok(self)
    }

    pub fn experiment(&self) -> &str {
        self.experiment.as_deref().unwrap_or("")
    }

    pub fn dim_cap(&self) -> usize {
        self.dim_cap.unwrap_or(DEFAULT_DIM_CAP)
    }

    pub fn output_path(&self) -> &Path {
        self.output.as_deref().expect("resolved config has an output path")
    }
}

/// Seed for the `stream`-th independent draw; stream 0 is the config seed itself.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    seed.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}
