use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "rtf", version, about = "Random tessellation processes and forests")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a prior tessellation of a rectangle as an SVG plus a vertex CSV.
    Draw(DrawArgs),
    /// Rotated-cube benchmark: percent correct versus cut budget.
    Cube(CubeArgs),
    /// Fit a forest on a training table (plus optional unlabeled test rows)
    /// and serialize it to a model directory.
    Fit(FitArgs),
    /// Predict labels for rows registered at fit time.
    Predict(PredictArgs),
    /// Split/fit/predict protocol over datasets with sign-test reporting.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct DrawArgs {
    /// Cut measure: urtp, wurtp, mrtp, or wmrtp.
    #[arg(long, default_value = "urtp")]
    pub measure: String,
    /// Domain rectangle as x0,y0,x1,y1.
    #[arg(long, default_value = "-1,-1,1,1", allow_hyphen_values = true)]
    pub domain: String,
    /// Axis weights for weighted measures: comma list.
    #[arg(long)]
    pub weights: Option<String>,
    /// Process time horizon (finite).
    #[arg(long, default_value = "1.5")]
    pub budget: String,
    /// Rate computation: ball or exact. Defaults per measure.
    #[arg(long)]
    pub rate_mode: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output SVG path; the vertex CSV lands beside it with a .csv extension.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CubeArgs {
    /// Total points in the rotated-cube sample.
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    /// Number of train/test splits.
    #[arg(long, default_value_t = 20)]
    pub splits: u32,
    /// Comma list drawn from urtp, mrtp, urtf, mrtf, urtf-i, mrtf-i
    /// (and weighted forms); *rtp names run a single tree.
    #[arg(long, default_value = "urtf,mrtf")]
    pub methods: String,
    /// Trees per forest method.
    #[arg(long, default_value_t = 10)]
    pub trees: usize,
    /// SMC particles per tree.
    #[arg(long, default_value_t = 20)]
    pub particles: usize,
    /// Cut-count grid for the accuracy curve.
    #[arg(long, default_value = "0,5,10,25,50,100,150")]
    pub cuts: String,
    /// Dirichlet prior: "empirical" or a comma list.
    #[arg(long, default_value = "empirical")]
    pub alpha: String,
    #[arg(long, default_value_t = 0.5)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON report path.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional long-format CSV of the curves for plotting.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Labeled training CSV.
    #[arg(long)]
    pub train: PathBuf,
    /// Optional test CSV; its rows are registered unlabeled so they can be
    /// predicted later.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long, default_value = "label")]
    pub label_column: String,
    /// urtf, wurtf, mrtf, wmrtf, urtf-i, or mrtf-i.
    #[arg(long, default_value = "urtf")]
    pub variant: String,
    #[arg(long, default_value_t = 100)]
    pub trees: usize,
    #[arg(long, default_value_t = 20)]
    pub particles: usize,
    /// Process time horizon: "inf" or a positive float.
    #[arg(long, default_value = "inf")]
    pub budget: String,
    /// Optional cap on accepted cuts per tree.
    #[arg(long)]
    pub cuts: Option<usize>,
    /// Dirichlet prior: "empirical" or a comma list.
    #[arg(long, default_value = "empirical")]
    pub alpha: String,
    /// Axis weights for weighted variants: "uniform", "variance", or a
    /// comma list.
    #[arg(long, default_value = "variance")]
    pub weights: String,
    /// Rate computation: ball or exact. Defaults per variant.
    #[arg(long)]
    pub rate_mode: Option<String>,
    /// Standardize columns by training statistics before fitting.
    #[arg(long, default_value_t = false)]
    pub standardize: bool,
    /// Majority vote: mode or average-prob.
    #[arg(long, default_value = "mode")]
    pub vote: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Model directory to create.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model directory written by fit.
    #[arg(long)]
    pub model: PathBuf,
    /// Rows to predict (indices into the stored table); defaults to the
    /// test rows registered at fit time.
    #[arg(long)]
    pub rows: Option<String>,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Experiment configuration JSON.
    #[arg(long)]
    pub config: PathBuf,
    /// JSON report path; per-split CSV and timing sidecars land beside it.
    #[arg(long)]
    pub out: PathBuf,
}
