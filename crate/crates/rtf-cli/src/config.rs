//! Flag-value and experiment-config parsing. All syntax errors map to
//! `InvalidConfig` so the binary exits with the usage code.

use serde::{Deserialize, Serialize};

use rtf_core::data::{synthetic_pc_scores, LabeledDataset};
use rtf_core::error::{Error, Result};
use rtf_core::forest::{budget_from_string, ForestVariant};
use rtf_core::measure::{MeasureKind, RateMode};
use rtf_core::rng::{substream, tag};

pub fn parse_budget(s: &str) -> Result<f64> {
    budget_from_string(s).map_err(|_| {
        Error::InvalidConfig(format!("budget must be \"inf\" or a positive number, got {s:?}"))
    })
}

pub fn parse_comma_floats(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("bad {what} entry {t:?}")))
        })
        .collect()
}

pub fn parse_rate_mode(s: Option<&str>, kind: MeasureKind) -> Result<RateMode> {
    match s {
        None => Ok(RateMode::default_for(kind)),
        Some("ball") => Ok(RateMode::Ball),
        Some("exact") => Ok(RateMode::Exact),
        Some(other) => {
            Err(Error::InvalidConfig(format!("rate mode must be ball or exact, got {other:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AlphaSpec {
    Empirical,
    Fixed(Vec<f64>),
}

pub fn parse_alpha(s: &str) -> Result<AlphaSpec> {
    if s == "empirical" {
        return Ok(AlphaSpec::Empirical);
    }
    Ok(AlphaSpec::Fixed(parse_comma_floats(s, "alpha")?))
}

impl AlphaSpec {
    /// Resolve against the labeled class counts of a dataset.
    pub fn resolve(&self, class_counts: &[u64]) -> Result<Vec<f64>> {
        match self {
            AlphaSpec::Empirical => Ok(rtf_core::likelihood::empirical_alpha(class_counts)),
            AlphaSpec::Fixed(v) => {
                if v.len() != class_counts.len() {
                    return Err(Error::InvalidConfig(format!(
                        "alpha has {} entries for {} classes",
                        v.len(),
                        class_counts.len()
                    )));
                }
                Ok(v.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightsSpec {
    Uniform,
    Variance,
    Fixed(Vec<f64>),
}

pub fn parse_weights(s: &str) -> Result<WeightsSpec> {
    match s {
        "uniform" => Ok(WeightsSpec::Uniform),
        "variance" => Ok(WeightsSpec::Variance),
        other => Ok(WeightsSpec::Fixed(parse_comma_floats(other, "weights")?)),
    }
}

impl WeightsSpec {
    /// Resolve against per-column training variances.
    pub fn resolve(&self, d: usize, train_variances: impl FnOnce() -> Result<Vec<f64>>) -> Result<Vec<f64>> {
        match self {
            WeightsSpec::Uniform => Ok(vec![1.0; d]),
            WeightsSpec::Variance => train_variances(),
            WeightsSpec::Fixed(v) => {
                if v.len() != d {
                    return Err(Error::InvalidConfig(format!(
                        "weights have {} entries for {} features",
                        v.len(),
                        d
                    )));
                }
                Ok(v.clone())
            }
        }
    }
}

pub fn parse_domain(s: &str) -> Result<(f64, f64, f64, f64)> {
    let v = parse_comma_floats(s, "domain")?;
    if v.len() != 4 {
        return Err(Error::InvalidConfig("domain needs x0,y0,x1,y1".into()));
    }
    if !(v[0] < v[2] && v[1] < v[3]) {
        return Err(Error::InvalidConfig("domain corners must be ordered".into()));
    }
    Ok((v[0], v[1], v[2], v[3]))
}

pub fn parse_cuts_grid(s: &str) -> Result<Vec<usize>> {
    let mut grid: Vec<usize> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidConfig(format!("bad cut count {t:?}")))
        })
        .collect::<Result<_>>()?;
    grid.sort_unstable();
    grid.dedup();
    if grid.is_empty() {
        return Err(Error::InvalidConfig("cut grid is empty".into()));
    }
    Ok(grid)
}

pub fn parse_rows(s: &str) -> Result<Vec<u32>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| Error::InvalidConfig(format!("bad row index {t:?}")))
        })
        .collect()
}

/// A dataset is either a CSV on disk or a deterministic synthetic sample
/// shaped like principal-component scores.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetSpec {
    Csv { name: String, path: String, label_column: String },
    SyntheticPcScores { name: String, synthetic_rows: usize, synthetic_cols: usize, seed: u64 },
}

impl DatasetSpec {
    pub fn name(&self) -> &str {
        match self {
            DatasetSpec::Csv { name, .. } | DatasetSpec::SyntheticPcScores { name, .. } => name,
        }
    }

    pub fn load(&self) -> Result<LabeledDataset> {
        match self {
            DatasetSpec::Csv { path, label_column, .. } => {
                rtf_core::data::load_csv(path, label_column)
            }
            DatasetSpec::SyntheticPcScores { synthetic_rows, synthetic_cols, seed, .. } => {
                let mut rng = substream(*seed, &[tag(b"synthetic-pc")]);
                Ok(synthetic_pc_scores(*synthetic_rows, *synthetic_cols, &mut rng))
            }
        }
    }
}

fn default_train_fraction() -> f64 {
    0.6
}

fn default_alpha() -> String {
    "empirical".to_owned()
}

fn default_weights() -> String {
    "variance".to_owned()
}

fn default_budget() -> String {
    "inf".to_owned()
}

fn default_particles() -> usize {
    20
}

fn default_standardize() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetSpec>,
    /// Forest variants plus the built-in "bl" mode baseline.
    pub methods: Vec<String>,
    pub splits: u32,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    pub trees: usize,
    #[serde(default = "default_particles")]
    pub particles: usize,
    #[serde(default = "default_budget")]
    pub budget: String,
    #[serde(default)]
    pub max_cuts: Option<usize>,
    #[serde(default = "default_alpha")]
    pub alpha: String,
    #[serde(default = "default_weights")]
    pub weights: String,
    #[serde(default = "default_standardize")]
    pub standardize: bool,
    pub seed: u64,
    /// Optional CSV of external per-split baselines to merge into the
    /// report: dataset,method,split,percent_correct.
    #[serde(default)]
    pub baselines: Option<String>,
}

pub fn parse_experiment_config(bytes: &[u8]) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = serde_json::from_slice(bytes)
        .map_err(|e| Error::InvalidConfig(format!("bad experiment config: {e}")))?;
    if config.datasets.is_empty() {
        return Err(Error::InvalidConfig("experiment config lists no datasets".into()));
    }
    if config.methods.is_empty() {
        return Err(Error::InvalidConfig("experiment config lists no methods".into()));
    }
    if config.splits == 0 {
        return Err(Error::InvalidConfig("experiment needs at least one split".into()));
    }
    let mut names: Vec<&str> = config.datasets.iter().map(|d| d.name()).collect();
    names.sort_unstable();
    names.dedup();
    if names.len() != config.datasets.len() {
        return Err(Error::InvalidConfig("dataset names must be unique".into()));
    }
    let mut methods = config.methods.clone();
    methods.sort_unstable();
    methods.dedup();
    if methods.len() != config.methods.len() {
        return Err(Error::InvalidConfig("method names must be unique".into()));
    }
    parse_budget(&config.budget)?;
    parse_alpha(&config.alpha)?;
    parse_weights(&config.weights)?;
    if !(config.train_fraction > 0.0 && config.train_fraction < 1.0) {
        return Err(Error::InvalidConfig("train fraction must be in (0, 1)".into()));
    }
    for m in &config.methods {
        parse_method(m)?;
    }
    Ok(config)
}

/// An experiment or cube method: a forest, a single SMC tree, or the
/// majority-class baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Forest(ForestVariant),
    /// Single-tree process run (the *rtp spellings).
    SingleTree(ForestVariant),
    /// Predict the most frequent training label everywhere.
    Baseline,
}

pub fn parse_method(s: &str) -> Result<Method> {
    if s == "bl" {
        return Ok(Method::Baseline);
    }
    if let Ok(v) = s.parse::<ForestVariant>() {
        return Ok(Method::Forest(v));
    }
    let single = match s {
        "urtp" => ForestVariant::Urtf,
        "wurtp" => ForestVariant::Wurtf,
        "mrtp" => ForestVariant::Mrtf,
        "wmrtp" => ForestVariant::Wmrtf,
        "urtp-i" => ForestVariant::UrtfI,
        "mrtp-i" => ForestVariant::MrtfI,
        other => return Err(Error::InvalidConfig(format!("unknown method {other:?}"))),
    };
    Ok(Method::SingleTree(single))
}

impl Method {
    pub fn trees(self, forest_trees: usize) -> usize {
        match self {
            Method::Forest(_) => forest_trees,
            Method::SingleTree(_) | Method::Baseline => 1,
        }
    }

    pub fn variant(self) -> Option<ForestVariant> {
        match self {
            Method::Forest(v) | Method::SingleTree(v) => Some(v),
            Method::Baseline => None,
        }
    }
}
