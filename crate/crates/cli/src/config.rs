//! Command-line arguments and the resolved configurations stored in manifests.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use shrinklasso::analysis::DEFAULT_SEED;

use crate::commands::CliError;
use crate::Common;

pub const FORMAT_TABLE: &str = "table";
pub const FORMAT_TABLE_SVG: &str = "table+svg";

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Delimited data file; the bundled prostate data when omitted.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value = "lpsa")]
    pub response: String,
    /// Penalty on the scale of `sum (y - x b)^2 + lambda * sum |b|`.
    #[arg(long, conflicts_with = "s")]
    pub lambda: Option<f64>,
    /// Standardized bound in [0, 1].
    #[arg(long)]
    pub s: Option<f64>,
    /// Comma-separated shrinkage variants (SL, PRSL, SL2, SL3_SQRT, SL3_LOG).
    #[arg(long, value_delimiter = ',', default_value = "SL,PRSL,SL2,SL3_SQRT,SL3_LOG")]
    pub variants: Vec<String>,
    /// Center the covariates without scaling them to unit variance.
    #[arg(long)]
    pub no_scale: bool,
    /// Keep the intercept at the response mean instead of shrinking it.
    #[arg(long)]
    pub keep_intercept: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub p: usize,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    pub r2_max: f64,
    #[arg(long, default_value_t = 20)]
    pub grid_points: usize,
    #[arg(long, default_value_t = 1000)]
    pub replications: usize,
    /// Comma-separated estimators; LASSO is always fitted as the reference.
    #[arg(long, value_delimiter = ',', default_value = "LASSO,SL,PRSL,SL2,SL3_SQRT,SL3_LOG")]
    pub estimators: Vec<String>,
    /// `cv-min`, `fixed:<lambda>` or `fraction:<share of lambda_max>`.
    #[arg(long, default_value = "cv-min")]
    pub lambda_rule: String,
    /// Folds used by the `cv-min` rule.
    #[arg(long, default_value_t = 10)]
    pub cv_folds: usize,
    /// Scale simulated covariates to unit variance before fitting.
    #[arg(long)]
    pub scale: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ProstateArgs {
    /// Prostate data file; the bundled copy when omitted.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Bootstrap replicates; 0 skips the bootstrap.
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// Points of the even grid of s values for the path and the CV curve.
    #[arg(long, default_value_t = 101)]
    pub s_grid: usize,
    #[arg(long, value_delimiter = ',', default_value = "SL,PRSL,SL2,SL3_SQRT,SL3_LOG")]
    pub variants: Vec<String>,
    /// Repeat the one-SE selection of s inside every bootstrap replicate.
    #[arg(long)]
    pub reselect: bool,
    #[arg(long)]
    pub no_scale: bool,
    #[arg(long)]
    pub keep_intercept: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub data: Option<PathBuf>,
    pub response: String,
    pub lambda: Option<f64>,
    pub s: Option<f64>,
    pub variants: Vec<String>,
    pub scale_columns: bool,
    pub shrink_intercept: bool,
    pub seed: u64,
    pub format: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub n: usize,
    pub p: usize,
    pub alpha: f64,
    pub r2_max: f64,
    pub grid_points: usize,
    pub replications: usize,
    pub estimators: Vec<String>,
    pub lambda_rule: String,
    pub cv_folds: usize,
    pub scale_columns: bool,
    pub seed: u64,
    pub format: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProstateConfig {
    pub data: Option<PathBuf>,
    pub bootstrap: usize,
    pub folds: usize,
    pub s_grid: usize,
    pub variants: Vec<String>,
    pub reselect: bool,
    pub scale_columns: bool,
    pub shrink_intercept: bool,
    pub seed: u64,
    pub format: String,
}

fn format_of(common: &Common) -> String {
    common.format.clone().unwrap_or_else(|| FORMAT_TABLE.to_string())
}

impl FitConfig {
    pub fn from_args(a: FitArgs, common: &Common) -> Self {
        Self {
            data: a.data,
            response: a.response,
            lambda: a.lambda,
            s: a.s,
            variants: a.variants,
            scale_columns: !a.no_scale,
            shrink_intercept: !a.keep_intercept,
            seed: common.seed.unwrap_or(DEFAULT_SEED),
            format: format_of(common),
        }
    }
}

impl SimulateConfig {
    pub fn from_args(a: SimulateArgs, common: &Common) -> Self {
        Self {
            n: a.n,
            p: a.p,
            alpha: a.alpha,
            r2_max: a.r2_max,
            grid_points: a.grid_points,
            replications: a.replications,
            estimators: a.estimators,
            lambda_rule: a.lambda_rule,
            cv_folds: a.cv_folds,
            scale_columns: a.scale,
            seed: common.seed.unwrap_or(DEFAULT_SEED),
            format: format_of(common),
        }
    }
}

impl ProstateConfig {
    pub fn from_args(a: ProstateArgs, common: &Common) -> Self {
        Self {
            data: a.data,
            bootstrap: a.bootstrap,
            folds: a.folds,
            s_grid: a.s_grid,
            variants: a.variants,
            reselect: a.reselect,
            scale_columns: !a.no_scale,
            shrink_intercept: !a.keep_intercept,
            seed: common.seed.unwrap_or(DEFAULT_SEED),
            format: format_of(common),
        }
    }
}

/// Configuration for `subcommand`: read from `--manifest` when given, otherwise
/// built from the command line.
pub fn resolve<C: DeserializeOwned>(subcommand: &str, common: &Common, from_args: impl FnOnce() -> C) -> Result<C, CliError> {
    let Some(path) = &common.manifest else {
        return Ok(from_args());
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read `{}`: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("manifest `{}` is not valid JSON: {e}", path.display())))?;
    let recorded = value.get("subcommand").and_then(|v| v.as_str()).unwrap_or_default();
    if recorded != subcommand {
        return Err(CliError::Usage(format!(
            "manifest `{}` records subcommand `{recorded}`, not `{subcommand}`",
            path.display()
        )));
    }
    let mut config = value
        .get("config")
        .cloned()
        .ok_or_else(|| CliError::Usage(format!("manifest `{}` has no `config`", path.display())))?;
    if let (Some(seed), Some(obj)) = (common.seed, config.as_object_mut()) {
        obj.insert("seed".into(), seed.into());
    }
    if let (Some(format), Some(obj)) = (&common.format, config.as_object_mut()) {
        obj.insert("format".into(), format.clone().into());
    }
    serde_json::from_value(config).map_err(|e| CliError::Usage(format!("manifest `{}`: {e}", path.display())))
}
