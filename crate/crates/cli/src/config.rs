//! Run configuration: a TOML file merged with command-line overrides.
//!
//! ```toml
//! model = "mix1"
//! alpha = 0.05
//!
//! [mc]
//! reps = 20000
//! seed = 7
//! threads = 4
//!
//! [grid]
//! n = 41
//! lo = [-1.0]
//! hi = [1.0]
//!
//! [params]
//! t_max = 1.0
//! prevalence = 0.1
//!
//! [alternative]
//! t0 = [0.5]
//! v = [[0.0], [1.0], [2.0]]
//! ```
//!
//! Unknown keys are rejected. The resolved configuration (minus thread count
//! and output path) is hashed into the `# config-hash:` line of every CSV.

use std::path::{Path, PathBuf};

use chibar::models::ModelConfig;
use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub model: Option<String>,
    pub cone: Option<String>,
    pub alpha: Option<f64>,
    pub n: Option<usize>,
    pub compare: Option<bool>,
    pub digits: Option<usize>,
    pub out: Option<PathBuf>,
    /// Index value at which `weights --model` evaluates the cone.
    pub at: Option<Vec<f64>>,
    #[serde(default)]
    pub mc: McSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub params: ParamsSection,
    pub alternative: Option<AlternativeSection>,
    #[serde(default)]
    pub finite_sample: FiniteSampleSection,
    #[serde(default)]
    pub refine: RefineSection,
    #[serde(default)]
    pub linkage: LinkageSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: Option<usize>,
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub t_max: Option<f64>,
    pub prevalence: Option<f64>,
    pub prevalence_margin: Option<f64>,
    pub mix2_variance: Option<[f64; 2]>,
    /// `[I11, I12, I22]`.
    pub polar_information: Option<[f64; 3]>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AlternativeSection {
    pub t0: Vec<f64>,
    pub v: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FiniteSampleSection {
    pub asymptotic_reps: Option<usize>,
    pub max_failure_rate: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RefineSection {
    pub sizes: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LinkageSection {
    /// `information`, `spectral`, `sib-cousin` or `all`.
    pub table: Option<String>,
    /// Number of points of the `beta` grid `k / betas` for `k = 1..=betas`.
    pub betas: Option<usize>,
}

pub fn load(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Fully resolved settings of one command.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct RunConfig {
    pub command: String,
    pub model: Option<String>,
    pub cone: Option<String>,
    pub seed: u64,
    pub reps: usize,
    pub alpha: f64,
    pub n: usize,
    pub compare: bool,
    pub digits: usize,
    pub at: Option<Vec<f64>>,
    pub grid: GridSection,
    pub params: ParamsSection,
    pub alternative: Option<AlternativeSection>,
    pub asymptotic_reps: usize,
    pub max_failure_rate: f64,
    pub refine_sizes: Vec<usize>,
    pub table: String,
    pub betas: usize,
    #[serde(skip)]
    pub threads: Option<usize>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.into()));
        if self.reps == 0 {
            return bad("reps must be at least 1");
        }
        if self.n == 0 {
            return bad("sample size n must be at least 1");
        }
        if self.grid.n == Some(0) {
            return bad("grid n must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1");
        }
        if self.digits > 17 {
            return bad("digits must be at most 17");
        }
        if self.refine_sizes.is_empty() || self.refine_sizes.contains(&0) {
            return bad("refine sizes must be positive");
        }
        if self.asymptotic_reps == 0 || self.betas == 0 {
            return bad("asymptotic_reps and betas must be positive");
        }
        match (&self.grid.lo, &self.grid.hi) {
            (Some(lo), Some(hi)) if lo.len() != hi.len() => {
                return bad("grid lo and hi differ in length")
            }
            (Some(_), None) | (None, Some(_)) => {
                return bad("grid lo and hi must be given together")
            }
            _ => {}
        }
        Ok(())
    }

    pub fn model_config(&self) -> ModelConfig {
        let mut m = ModelConfig::default();
        let p = &self.params;
        if let Some(x) = p.t_max {
            m.t_max = x;
        }
        if let Some(x) = p.prevalence {
            m.prevalence = x;
        }
        if let Some(x) = p.prevalence_margin {
            m.prevalence_margin = x;
        }
        if let Some([a, b]) = p.mix2_variance {
            m.mix2_variance = (a, b);
        }
        if let Some([a, b, c]) = p.polar_information {
            m.polar_information = Matrix2::new(a, b, b, c);
        }
        m
    }

    /// Explicit grid axes `(lo, hi, n)`, if configured.
    pub fn grid_axes(&self) -> Option<Vec<(f64, f64, usize)>> {
        let (lo, hi) = (self.grid.lo.as_ref()?, self.grid.hi.as_ref()?);
        let n = self.grid.n.unwrap_or(chibar::models::DEFAULT_GRID_N);
        Some(lo.iter().zip(hi).map(|(&a, &b)| (a, b, n)).collect())
    }

    pub fn hash(&self) -> String {
        let text = toml::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}
