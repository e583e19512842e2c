//! The work behind each subcommand, free of argument parsing and printing.

use std::fs;
use std::path::{Path, PathBuf};

use eagle_core::metrics::{make_split, DataSplit, MetricReport};
use eagle_core::model::{evaluate_rows, train_with, EpochRecord, Mode, ModelParams, Pipeline, Propagation, TrainConfig};
use eagle_core::propagate::{combine, FactorCache, Rank};
use eagle_core::spectra::{spectral_report, SpectralReport};
use eagle_core::Mat;
use serde::{Deserialize, Serialize};

use crate::bundle::Dataset;
use crate::error::{CliError, Result};
use crate::matrix_io::{load_matrix, save_matrix};
use crate::SCHEMA_VERSION;

/// Train / validation / test proportions.
pub const SPLIT_RATIOS: (f64, f64, f64) = (0.8, 0.1, 0.1);

pub fn labeled_split(ds: &Dataset, seed: u64) -> Result<DataSplit> {
    Ok(make_split(&ds.graph, SPLIT_RATIOS, seed)?)
}

/// Propagated raw attributes: no feature transform is applied.
pub fn embed(ds: &Dataset, config: &TrainConfig) -> Result<Mat> {
    let pipeline = Pipeline::new(&ds.graph, config, &mut FactorCache::new())?;
    let x = ds.graph.attrs();
    Ok(match &pipeline.propagation {
        Propagation::None => x.clone(),
        Propagation::Single(p) => p.apply(x)?,
        Propagation::Dual { u, v, gamma, combinator } => combine(&u.apply(x)?, &v.apply(x)?, *gamma, *combinator)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightEntry {
    pub name: String,
    pub file: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub config: TrainConfig,
    pub split_ratios: (f64, f64, f64),
    pub weights: Vec<WeightEntry>,
    pub best_epoch: usize,
    pub best_val_auc: Option<f64>,
    pub history: Vec<EpochRecord>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

fn theta_names(mode: Mode) -> &'static [&'static str] {
    match mode {
        Mode::Dvffp => &["theta_u", "theta_v"],
        _ => &["theta"],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub schema_version: u32,
    pub mode: Mode,
    pub best_epoch: usize,
    pub best_val_auc: Option<f64>,
    pub epochs: usize,
    pub test: MetricReport,
    pub checkpoint: PathBuf,
}

/// Trains, writes a checkpoint directory, then scores the selected weights
/// on the test partition.
pub fn train(ds: &Dataset, config: &TrainConfig, out_dir: &Path) -> Result<TrainSummary> {
    let split = labeled_split(ds, config.seed)?;
    let outcome = train_with(&ds.graph, &split, config, &mut FactorCache::new())?;
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut weights = Vec::new();
    let named = theta_names(config.mode)
        .iter()
        .zip(&outcome.params.thetas)
        .chain(std::iter::once((&"omega", &outcome.params.omega)));
    for (name, w) in named {
        let file = format!("{name}.eabgz");
        save_matrix(&out_dir.join(&file), w)?;
        weights.push(WeightEntry {
            name: name.to_string(),
            file,
            rows: w.nrows(),
            cols: w.ncols(),
        });
    }
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        config: *config,
        split_ratios: SPLIT_RATIOS,
        weights,
        best_epoch: outcome.best_epoch,
        best_val_auc: outcome.best_val_auc,
        history: outcome.history.clone(),
    };
    let path = out_dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Json {
        path: path.clone(),
        source: e,
    })?;
    fs::write(&path, json).map_err(|e| CliError::io(&path, e))?;

    let labels = ds.graph.labels().expect("split requires labels");
    let test = evaluate_rows(&outcome.pipeline, ds.graph.attrs(), &outcome.params, labels, &split.test_idx)?;
    Ok(TrainSummary {
        schema_version: SCHEMA_VERSION,
        mode: config.mode,
        best_epoch: outcome.best_epoch,
        best_val_auc: outcome.best_val_auc,
        epochs: config.max_epochs,
        test,
        checkpoint: out_dir.to_path_buf(),
    })
}

pub fn load_checkpoint(dir: &Path) -> Result<(Manifest, ModelParams)> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| CliError::Json {
        path: path.clone(),
        source: e,
    })?;
    if manifest.schema_version != SCHEMA_VERSION {
        return Err(CliError::Input(format!(
            "{}: unsupported schema version {}",
            path.display(),
            manifest.schema_version
        )));
    }
    let mut thetas = Vec::new();
    let mut omega = None;
    for entry in &manifest.weights {
        let m = load_matrix(&dir.join(&entry.file))?;
        if m.shape() != (entry.rows, entry.cols) {
            return Err(CliError::Input(format!(
                "{}: shape {:?} does not match the manifest {:?}",
                entry.file,
                m.shape(),
                (entry.rows, entry.cols)
            )));
        }
        if entry.name == "omega" {
            omega = Some(m);
        } else {
            thetas.push(m);
        }
    }
    let omega = omega.ok_or_else(|| CliError::Input(format!("{}: no omega weight", path.display())))?;
    if thetas.len() != manifest.config.num_thetas() {
        return Err(CliError::Input(format!("{}: wrong number of theta weights", path.display())));
    }
    Ok((manifest, ModelParams::from_weights(thetas, omega)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    #[serde(flatten)]
    pub report: MetricReport,
}

/// Rebuilds the propagation and the split from the checkpoint's config and
/// scores the stored weights on the test partition.
pub fn eval(ds: &Dataset, checkpoint: &Path) -> Result<EvalReport> {
    let (manifest, params) = load_checkpoint(checkpoint)?;
    let config = &manifest.config;
    let split = make_split(&ds.graph, manifest.split_ratios, config.seed)?;
    let pipeline = Pipeline::new(&ds.graph, config, &mut FactorCache::new())?;
    let labels = ds.graph.labels().expect("split requires labels");
    let report = evaluate_rows(&pipeline, ds.graph.attrs(), &params, labels, &split.test_idx)?;
    Ok(EvalReport {
        schema_version: SCHEMA_VERSION,
        report,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseReport {
    pub schema_version: u32,
    pub num_edges: usize,
    pub duplicate_pairs: usize,
    #[serde(flatten)]
    pub spectral: SpectralReport,
}

pub fn diagnose(ds: &Dataset, config: &TrainConfig) -> Result<DiagnoseReport> {
    let k = match config.k {
        Rank::Truncated(k) => k,
        Rank::Exact => return Err(CliError::Input("diagnose needs a finite k".into())),
    };
    let spectral = spectral_report(&ds.graph, config.alpha, config.beta, k, &config.svd)?;
    Ok(DiagnoseReport {
        schema_version: SCHEMA_VERSION,
        num_edges: ds.graph.num_edges(),
        duplicate_pairs: ds.graph.duplicate_pair_count(),
        spectral,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Alpha,
    Beta,
    Gamma,
    K,
}

impl std::str::FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "alpha" => Ok(SweepParam::Alpha),
            "beta" => Ok(SweepParam::Beta),
            "gamma" => Ok(SweepParam::Gamma),
            "k" => Ok(SweepParam::K),
            _ => Err(format!("unknown sweep parameter {s:?} (expected alpha, beta, gamma or k)")),
        }
    }
}

impl std::fmt::Display for SweepParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SweepParam::Alpha => "alpha",
            SweepParam::Beta => "beta",
            SweepParam::Gamma => "gamma",
            SweepParam::K => "k",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<String>,
    pub methods: Vec<Mode>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub method: Mode,
    pub param: String,
    pub value: String,
    pub ap: f64,
    pub auc: f64,
}

fn with_value(base: &TrainConfig, param: SweepParam, value: &str) -> Result<TrainConfig> {
    let real = || {
        value
            .trim()
            .parse::<f64>()
            .map_err(|_| CliError::Input(format!("sweep value {value:?} is not a number")))
    };
    let mut c = *base;
    match param {
        SweepParam::Alpha => c.alpha = real()?,
        SweepParam::Beta => c.beta = real()?,
        SweepParam::Gamma => c.gamma = real()?,
        SweepParam::K => c.k = value.parse()?,
    }
    c.validate()?;
    Ok(c)
}

/// Trains and tests one model per (method, value). Factorizations are
/// shared across points; `k = inf` trains with exact propagation.
pub fn sweep(ds: &Dataset, base: &TrainConfig, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let split = labeled_split(ds, base.seed)?;
    let labels = ds.graph.labels().expect("split requires labels");
    let mut cache = FactorCache::new();
    let mut rows = Vec::new();
    for &method in &spec.methods {
        for value in &spec.values {
            let config = TrainConfig {
                mode: method,
                ..with_value(base, spec.param, value)?
            };
            let outcome = train_with(&ds.graph, &split, &config, &mut cache)?;
            let r = evaluate_rows(&outcome.pipeline, ds.graph.attrs(), &outcome.params, labels, &split.test_idx)?;
            rows.push(SweepRow {
                method,
                param: spec.param.to_string(),
                value: value.trim().to_string(),
                ap: r.ap,
                auc: r.auc,
            });
        }
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: std::io::Write>(w: W, rows: &[SweepRow]) -> csv::Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(["method", "param", "value", "ap", "auc"])?;
    for r in rows {
        out.write_record([
            r.method.to_string(),
            r.param.clone(),
            r.value.clone(),
            r.ap.to_string(),
            r.auc.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
