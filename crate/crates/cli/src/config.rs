//! Suite configuration: optional JSON file, overridden field by field by flags.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Tunable parameters shared by the suites. Unset fields take suite defaults.
#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SuiteParams {
    /// Euclidean dimension (metric-euclidean)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Matrix size, cyclic size N, or GNS box side depending on the suite
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Number of random samples (matrices, kernels, instances, points)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// `log:LO:HI:COUNT` or `list:T1,T2,...`
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<String>,
    /// Tolerance overriding the suite's primary bound
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Dilation factor of the smoothness probe
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<usize>,
    /// Twist angle of the plane quantum torus
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// Corona weight rule of the Ornstein-Uhlenbeck metric: balanced or symmetric
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    /// Comma-separated group names (transference-all)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub groups: Option<String>,
}

impl SuiteParams {
    /// Fields set in `self` win over `file`.
    pub fn over(self, file: SuiteParams) -> SuiteParams {
        SuiteParams {
            dim: self.dim.or(file.dim),
            n: self.n.or(file.n),
            samples: self.samples.or(file.samples),
            seed: self.seed.or(file.seed),
            t_grid: self.t_grid.or(file.t_grid),
            tol: self.tol.or(file.tol),
            lambda: self.lambda.or(file.lambda),
            theta: self.theta.or(file.theta),
            rule: self.rule.or(file.rule),
            groups: self.groups.or(file.groups),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(tol) = self.tol {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(CliError::Usage(format!("--tol must be positive, got {tol}")));
            }
        }
        if self.samples == Some(0) {
            return Err(CliError::Usage("--samples must be positive".into()));
        }
        if let Some(th) = self.theta {
            if !th.is_finite() {
                return Err(CliError::Usage("--theta must be finite".into()));
            }
        }
        Ok(())
    }
}

/// Contents of a `--config` file.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub params: SuiteParams,
}

pub fn load(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: ConfigFile =
            serde_json::from_str(r#"{"params": {"n": 4, "seed": 1, "t-grid": "log:1:2:3"}}"#).unwrap();
        let flags = SuiteParams { seed: Some(9), ..Default::default() };
        let p = flags.over(file.params);
        assert_eq!(p.n, Some(4));
        assert_eq!(p.seed, Some(9));
        assert_eq!(p.t_grid.as_deref(), Some("log:1:2:3"));
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        assert!(serde_json::from_str::<ConfigFile>(r#"{"params": {"bogus": 1}}"#).is_err());
    }
}
