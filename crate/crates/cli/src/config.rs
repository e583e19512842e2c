//! Training configuration: an optional JSON file, then command-line
//! overrides.

use std::path::{Path, PathBuf};

use clap::Args;
use eagle_core::model::{Mode, TrainConfig};
use eagle_core::propagate::{Combinator, Rank};

use crate::error::{CliError, Result};

/// Reads a JSON config. Missing fields take their defaults; a
/// `schema_version` field is accepted and ignored.
pub fn load_config(path: &Path) -> Result<TrainConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let json_err = |e| CliError::Json {
        path: path.to_path_buf(),
        source: e,
    };
    let mut value: serde_json::Value = serde_json::from_str(&text).map_err(json_err)?;
    if let Some(obj) = value.as_object_mut() {
        obj.remove("schema_version");
    }
    let config: TrainConfig = serde_json::from_value(value).map_err(json_err)?;
    config.validate()?;
    Ok(config)
}

#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// JSON file with training settings; flags below override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Truncation rank, or `inf` for exact propagation
    #[arg(long)]
    pub k: Option<Rank>,
    /// Hidden width
    #[arg(long)]
    pub z: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// sum, max or concat
    #[arg(long)]
    pub combinator: Option<Combinator>,
    /// ffp, dvffp or fc
    #[arg(long)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub svd_seed: Option<u64>,
    #[arg(long)]
    pub power_iters: Option<usize>,
    #[arg(long)]
    pub oversample: Option<usize>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<TrainConfig> {
        let mut c = match &self.config {
            Some(p) => load_config(p)?,
            None => TrainConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$flag { c.$($field).+ = v; })*
            };
        }
        set!(
            alpha => alpha,
            beta => beta,
            gamma => gamma,
            k => k,
            z => z,
            dropout => dropout_rate,
            lr => learning_rate,
            epochs => max_epochs,
            seed => seed,
            combinator => combinator,
            mode => mode,
            svd_seed => svd.seed,
            power_iters => svd.power_iters,
            oversample => svd.oversample,
        );
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"schema_version": 1, "alpha": 0.2, "k": "inf", "mode": "dvffp"}"#).unwrap();
        let args = ConfigArgs {
            config: Some(path),
            alpha: Some(0.7),
            epochs: Some(3),
            ..Default::default()
        };
        let c = args.resolve().unwrap();
        assert_eq!(c.alpha, 0.7);
        assert_eq!(c.k, Rank::Exact);
        assert_eq!(c.mode, Mode::Dvffp);
        assert_eq!(c.max_epochs, 3);
        assert_eq!(c.beta, 0.5);
    }

    #[test]
    fn rejects_unknown_fields_and_bad_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"alhpa": 0.2}"#).unwrap();
        assert!(matches!(load_config(&path), Err(CliError::Json { .. })));
        std::fs::write(&path, r#"{"alpha": 1.5}"#).unwrap();
        assert!(matches!(load_config(&path), Err(CliError::Core(_))));
    }
}
