use std::path::{Path, PathBuf};

use holodisk::boundary::ScanOptions;
use holodisk::io::{check_schema, DensityLiteral, LoopLiteral};
use holodisk::linalg::RankOptions;
use holodisk::moduli::{GridSpec, NewtonOptions, PerturbationSpec, SweepOptions};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::CliError;

pub fn read_toml<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    toml::from_str(&text).map_err(|e| CliError::Parse { path: path.to_path_buf(), message: e.to_string() })
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub truncation: Option<usize>,
    pub tau: Option<f64>,
    pub max_extension: Option<usize>,
}

impl ScanSection {
    pub fn options(&self) -> ScanOptions {
        let d = ScanOptions::default();
        ScanOptions {
            truncation: self.truncation.unwrap_or(d.truncation),
            rank: RankOptions { tau: self.tau.unwrap_or(d.rank.tau), ..d.rank },
            max_extension: self.max_extension.unwrap_or(d.max_extension),
        }
    }
}

/// `indices` and `double`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopConfig {
    pub schema: u32,
    #[serde(rename = "loop")]
    pub loop_: LoopLiteral,
    #[serde(default)]
    pub scan: ScanSection,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub radial: usize,
    pub angular: usize,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BvpSection {
    pub tau: Option<f64>,
    pub obstruction: Option<f64>,
    pub collocation: Option<usize>,
}

/// `solve`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub schema: u32,
    pub degree: usize,
    #[serde(rename = "loop")]
    pub loop_: LoopLiteral,
    pub grid: GridSection,
    #[serde(default)]
    pub density: DensityLiteral,
    #[serde(default)]
    pub tolerances: BvpSection,
}

/// `plane-curve`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneCurveConfig {
    pub schema: u32,
    pub d_min: u32,
    pub d_max: u32,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewtonSection {
    pub truncation: Option<usize>,
    pub collocation: Option<usize>,
    pub tol: Option<f64>,
    pub maxit: Option<usize>,
    pub tangent_tau: Option<f64>,
}

/// `sweep`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub schema: u32,
    pub perturbation: PerturbationSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub newton: NewtonSection,
    #[serde(default)]
    pub seed: usize,
    pub continuation_steps: Option<usize>,
    pub fallback_steps: Option<usize>,
}

impl SweepConfig {
    pub fn options(&self) -> SweepOptions {
        let d = SweepOptions::default();
        let n = NewtonOptions::default();
        SweepOptions {
            newton: NewtonOptions {
                truncation: self.newton.truncation.unwrap_or(n.truncation),
                collocation: self.newton.collocation.or(n.collocation),
                tol: self.newton.tol.unwrap_or(n.tol),
                maxit: self.newton.maxit.unwrap_or(n.maxit),
                rank: RankOptions { tau: self.newton.tangent_tau.unwrap_or(n.rank.tau), ..n.rank },
                check_tangent: true,
            },
            seed: self.seed,
            continuation_steps: self.continuation_steps.unwrap_or(d.continuation_steps),
            fallback_steps: self.fallback_steps.unwrap_or(d.fallback_steps),
        }
    }
}

/// `incidence`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncidenceConfig {
    pub schema: u32,
    /// Chart directory written by `sweep`; relative paths resolve against the config file.
    pub chart: PathBuf,
    /// Real representative `x` of the base point `[x + i eps u(x)]`.
    pub point: Vec<f64>,
    pub threshold: Option<f64>,
    pub tol: Option<f64>,
    pub maxit: Option<usize>,
    pub samples: Option<usize>,
}

pub fn schema(found: u32) -> Result<(), CliError> {
    check_schema(found).map_err(CliError::from)
}
