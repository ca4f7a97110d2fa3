use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "impw", version, about = "Implied weights of regression estimators of causal effects")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute implied weights and write the weight table.
    Weights(DataArgs),
    /// Weights plus the Hájek estimate and, where available, the direct
    /// regression estimate.
    Estimate(DataArgs),
    /// Balance, dispersion, extrapolation, influence and plot data.
    Diagnose(DiagnoseArgs),
    /// Certify closed-form weights against a dense KKT solve.
    QpCheck(DataArgs),
    /// Run seeded Monte Carlo experiments.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub treatment_col: String,
    #[arg(long)]
    pub outcome_col: Option<String>,
    #[arg(long)]
    pub base_weight_col: Option<String>,
    /// Comma-separated covariate columns; defaults to every other column.
    #[arg(long, value_delimiter = ',')]
    pub covariates: Option<Vec<String>>,
    /// uri, mri, wuri, wmri, dr, multi-uri, multi-mri, no-intercept-uri,
    /// no-intercept-mri
    #[arg(long, default_value = "uri")]
    pub method: String,
    /// ate, att, atc or cate.
    #[arg(long)]
    pub estimand: Option<String>,
    /// full-mean, treated-mean, control-mean or custom.
    #[arg(long)]
    pub profile: Option<String>,
    /// Custom target profile, one value per covariate.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub target: Option<Vec<f64>>,
    /// Treatment level contrasted with level 1 (multi-valued methods).
    #[arg(long)]
    pub active_level: Option<i64>,
    /// Rescale base weights to sum to one within each group (for dr).
    #[arg(long)]
    pub normalize_base: bool,
    #[arg(long, default_value = ",")]
    pub delimiter: char,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Comma-separated output formats: json, csv.
    #[arg(long, value_delimiter = ',', default_value = "json,csv")]
    pub format: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Flag weights whose magnitude exceeds this multiple of 1/n_g.
    #[arg(long, default_value_t = 10.0)]
    pub extreme_multiple: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Comma-separated scenario or design names, or `all`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub scenario: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "1000,4000,16000")]
    pub n_grid: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "json,csv")]
    pub format: Vec<String>,
}
