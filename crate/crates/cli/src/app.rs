use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use eagle_core::model::Mode;
use serde::Serialize;

use crate::bundle::{load_bundle, save_bundle};
use crate::commands::{self, SweepParam, SweepSpec};
use crate::config::ConfigArgs;
use crate::error::{CliError, Result};
use crate::ingest::ingest;
use crate::matrix_io::save_matrix;

#[derive(Debug, Parser)]
#[command(name = "eagle", version, about = "Edge representation learning on edge-attributed bipartite graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate text inputs and pack them into a dataset bundle
    Ingest {
        /// TSV with one `u_id<TAB>v_id` edge per line
        #[arg(long)]
        edges: PathBuf,
        /// CSV of reals, one row per edge, or an EABGZ1 matrix
        #[arg(long)]
        attrs: PathBuf,
        /// One line per edge of `;`-separated class names
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Propagate the raw attributes and write them as an EABGZ1 matrix
    Embed {
        #[arg(long)]
        bundle: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model and write a checkpoint directory
    Train {
        #[arg(long)]
        bundle: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Checkpoint directory
        #[arg(long)]
        out: PathBuf,
        /// Where to write the metrics JSON (stdout if omitted)
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Score a checkpoint on the test partition
    Eval {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report spectral properties of the transition matrix
    Diagnose {
        #[arg(long)]
        bundle: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train over a list of values of one parameter and tabulate test scores
    Sweep {
        #[arg(long)]
        bundle: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// alpha, beta, gamma or k
        #[arg(long)]
        param: SweepParam,
        /// Comma-separated values; `inf` is allowed for k
        #[arg(long, default_value = "")]
        values: String,
        /// Comma-separated methods among ffp, dvffp, fc
        #[arg(long, default_value = "ffp")]
        methods: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|v| !v.is_empty()).map(str::to_string).collect()
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let path = out.unwrap_or(Path::new("<stdout>"));
    let json = serde_json::to_string_pretty(value).map_err(|e| CliError::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    match out {
        Some(p) => std::fs::write(p, json + "\n").map_err(|e| CliError::io(p, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{json}").map_err(|e| CliError::io(path, e))
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest {
            edges,
            attrs,
            labels,
            out,
        } => {
            let ds = ingest(&edges, &attrs, labels.as_deref())?;
            save_bundle(&out, &ds)
        }
        Command::Embed { bundle, config, out } => {
            let ds = load_bundle(&bundle)?;
            let z = commands::embed(&ds, &config.resolve()?)?;
            save_matrix(&out, &z)
        }
        Command::Train {
            bundle,
            config,
            out,
            metrics,
        } => {
            let ds = load_bundle(&bundle)?;
            let summary = commands::train(&ds, &config.resolve()?, &out)?;
            emit_json(&summary, metrics.as_deref())
        }
        Command::Eval { bundle, checkpoint, out } => {
            let ds = load_bundle(&bundle)?;
            emit_json(&commands::eval(&ds, &checkpoint)?, out.as_deref())
        }
        Command::Diagnose { bundle, config, out } => {
            let ds = load_bundle(&bundle)?;
            emit_json(&commands::diagnose(&ds, &config.resolve()?)?, out.as_deref())
        }
        Command::Sweep {
            bundle,
            config,
            param,
            values,
            methods,
            out,
        } => {
            let methods = split_list(&methods)
                .iter()
                .map(|m| m.parse::<Mode>())
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let spec = SweepSpec {
                param,
                values: split_list(&values),
                methods,
            };
            let ds = load_bundle(&bundle)?;
            let rows = commands::sweep(&ds, &config.resolve()?, &spec)?;
            let file = std::fs::File::create(&out).map_err(|e| CliError::io(&out, e))?;
            commands::write_sweep_csv(file, &rows).map_err(|e| CliError::Input(format!("{}: {e}", out.display())))
        }
    }
}
