//! Random tessellation forests: independently fitted SMC trees voting on
//! labels, plus a directory serialization format that allows bit-exact
//! reconstruction (manifest + training data + one cut log per tree).

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{load_csv, write_csv, ColumnStats, LabeledDataset};
use crate::error::{Error, Result};
use crate::likelihood::{predictive_distribution, LabelCounts};
use crate::measure::{MeasureKind, RateMode, RtpMeasure};
use crate::rng::mix;
use crate::smc::{run_smc, SmcConfig};
use crate::tessellation::{cut_log_to_string, parse_cut_log, Tessellation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForestVariant {
    Urtf,
    Wurtf,
    Mrtf,
    Wmrtf,
    /// uRTF grown from the prior: likelihood weighting off.
    UrtfI,
    /// MRTF grown from the prior: likelihood weighting off.
    MrtfI,
}

impl ForestVariant {
    pub const ALL: [ForestVariant; 6] = [
        ForestVariant::Urtf,
        ForestVariant::Wurtf,
        ForestVariant::Mrtf,
        ForestVariant::Wmrtf,
        ForestVariant::UrtfI,
        ForestVariant::MrtfI,
    ];

    pub fn kind(self) -> MeasureKind {
        match self {
            ForestVariant::Urtf | ForestVariant::UrtfI => MeasureKind::Urtp,
            ForestVariant::Wurtf => MeasureKind::Wurtp,
            ForestVariant::Mrtf | ForestVariant::MrtfI => MeasureKind::Mrtp,
            ForestVariant::Wmrtf => MeasureKind::Wmrtp,
        }
    }

    pub fn likelihood_weighting(self) -> bool {
        !matches!(self, ForestVariant::UrtfI | ForestVariant::MrtfI)
    }

    pub fn is_weighted(self) -> bool {
        self.kind().is_weighted()
    }
}

impl fmt::Display for ForestVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ForestVariant::Urtf => "urtf",
            ForestVariant::Wurtf => "wurtf",
            ForestVariant::Mrtf => "mrtf",
            ForestVariant::Wmrtf => "wmrtf",
            ForestVariant::UrtfI => "urtf-i",
            ForestVariant::MrtfI => "mrtf-i",
        };
        f.write_str(s)
    }
}

impl FromStr for ForestVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "urtf" => Ok(ForestVariant::Urtf),
            "wurtf" => Ok(ForestVariant::Wurtf),
            "mrtf" => Ok(ForestVariant::Mrtf),
            "wmrtf" => Ok(ForestVariant::Wmrtf),
            "urtf-i" => Ok(ForestVariant::UrtfI),
            "mrtf-i" => Ok(ForestVariant::MrtfI),
            other => Err(Error::InvalidConfig(format!("unknown forest variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VoteMode {
    /// Majority over per-tree hard labels, ties to the smallest label code.
    #[default]
    Mode,
    /// Argmax of the across-tree mean predictive distribution.
    AverageProb,
}

impl FromStr for VoteMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mode" => Ok(VoteMode::Mode),
            "average-prob" => Ok(VoteMode::AverageProb),
            other => Err(Error::InvalidConfig(format!("unknown vote mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ForestConfig {
    pub trees: usize,
    pub variant: ForestVariant,
    pub particles: usize,
    pub budget: f64,
    pub alpha: Vec<f64>,
    /// Per-feature weights, required for weighted variants and rejected
    /// otherwise.
    pub weights: Option<Vec<f64>>,
    /// Defaults to the variant's natural mode when absent.
    pub rate_mode: Option<RateMode>,
    pub seed: u64,
    pub max_cuts: Option<usize>,
    pub vote_mode: VoteMode,
}

impl ForestConfig {
    pub fn new(variant: ForestVariant, alpha: Vec<f64>, seed: u64) -> Self {
        Self {
            trees: 100,
            variant,
            particles: 10,
            budget: f64::INFINITY,
            alpha,
            weights: None,
            rate_mode: None,
            seed,
            max_cuts: None,
            vote_mode: VoteMode::Mode,
        }
    }

    pub fn resolved_rate_mode(&self) -> RateMode {
        self.rate_mode.unwrap_or_else(|| RateMode::default_for(self.variant.kind()))
    }

    fn build_measure(&self, dim: usize) -> Result<RtpMeasure> {
        match (self.variant.is_weighted(), &self.weights) {
            (true, Some(w)) => match self.variant.kind() {
                MeasureKind::Wurtp => RtpMeasure::wurtp(w.clone()),
                MeasureKind::Wmrtp => RtpMeasure::wmrtp(w.clone()),
                _ => unreachable!("weighted kinds only"),
            },
            (true, None) => Err(Error::InvalidConfig(format!(
                "variant {} needs feature weights",
                self.variant
            ))),
            (false, Some(_)) => Err(Error::InvalidConfig(format!(
                "variant {} does not take feature weights",
                self.variant
            ))),
            (false, None) => match self.variant.kind() {
                MeasureKind::Urtp => RtpMeasure::urtp(dim),
                MeasureKind::Mrtp => RtpMeasure::mrtp(dim),
                _ => unreachable!("unweighted kinds only"),
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct FittedTree {
    pub tessellation: Tessellation,
    pub counts: LabelCounts,
}

#[derive(Debug, Clone)]
pub struct Forest {
    pub config: ForestConfig,
    pub trees: Vec<FittedTree>,
}

/// Fits `config.trees` independent SMC runs in parallel and keeps each run's
/// highest-weight particle. Tree t uses the derived seed `mix(seed, t)`, so
/// the forest is reproducible regardless of thread schedule.
pub fn fit_forest(data: &LabeledDataset, config: &ForestConfig) -> Result<Forest> {
    if config.trees == 0 {
        return Err(Error::InvalidConfig("forest needs at least one tree".into()));
    }
    let measure = config.build_measure(data.n_features())?;
    let rate_mode = config.resolved_rate_mode();
    let trees: Vec<FittedTree> = (0..config.trees as u64)
        .into_par_iter()
        .map(|t| {
            let smc = SmcConfig {
                particles: config.particles,
                budget: config.budget,
                measure: measure.clone(),
                alpha: config.alpha.clone(),
                likelihood_weighting: config.variant.likelihood_weighting(),
                rate_mode,
                seed: mix(config.seed, t),
                max_cuts: config.max_cuts,
            };
            let est = run_smc(data, &smc)?;
            let best = est.particles.into_iter().nth(est.selected).expect("selected in range");
            Ok(FittedTree { tessellation: best.tessellation, counts: best.counts })
        })
        .collect::<Result<_>>()?;
    Ok(Forest { config: config.clone(), trees })
}

#[derive(Debug, Clone)]
pub struct ForestPrediction {
    pub labels: Vec<u32>,
    /// Hard-vote tallies per row and class.
    pub tallies: Vec<Vec<u64>>,
    /// Across-tree mean predictive distribution per row.
    pub probabilities: Vec<Vec<f64>>,
}

fn argmax_smallest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn predict_forest(
    forest: &Forest,
    data: &LabeledDataset,
    rows: &[u32],
) -> Result<ForestPrediction> {
    let k = data.n_classes();
    let mut tallies = vec![vec![0u64; k]; rows.len()];
    let mut probabilities = vec![vec![0.0f64; k]; rows.len()];
    for tree in &forest.trees {
        for (j, &r) in rows.iter().enumerate() {
            if r as usize >= data.n_rows() {
                return Err(Error::UnregisteredRow(r as usize));
            }
            let leaf = tree.tessellation.locate(r)?;
            let m = tree
                .counts
                .leaf(leaf.0)
                .ok_or_else(|| Error::Model(format!("leaf {leaf} missing from counts")))?;
            let pred = predictive_distribution(m, tree.counts.alpha());
            tallies[j][argmax_smallest(&pred)] += 1;
            for (acc, q) in probabilities[j].iter_mut().zip(pred) {
                *acc += q;
            }
        }
    }
    let t = forest.trees.len() as f64;
    for p in probabilities.iter_mut() {
        for q in p.iter_mut() {
            *q /= t;
        }
    }
    let labels = match forest.config.vote_mode {
        VoteMode::Mode => tallies
            .iter()
            .map(|t| {
                let floats: Vec<f64> = t.iter().map(|&c| c as f64).collect();
                argmax_smallest(&floats) as u32
            })
            .collect(),
        VoteMode::AverageProb => {
            probabilities.iter().map(|p| argmax_smallest(p) as u32).collect()
        }
    };
    Ok(ForestPrediction { labels, tallies, probabilities })
}

pub const MANIFEST_FORMAT_VERSION: u32 = 1;

/// Everything needed to rebuild a forest from its directory, minus the cut
/// logs and training table stored beside it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestManifest {
    pub format_version: u32,
    pub variant: ForestVariant,
    pub trees: usize,
    pub particles: usize,
    /// "inf" or a decimal literal; JSON numbers cannot express infinity.
    pub budget: String,
    pub alpha: Vec<f64>,
    pub weights: Option<Vec<f64>>,
    pub rate_mode: RateMode,
    pub seed: u64,
    pub max_cuts: Option<usize>,
    pub vote_mode: VoteMode,
    pub n_rows: usize,
    pub n_features: usize,
    pub feature_names: Vec<String>,
    pub label_names: Vec<String>,
    pub label_column: String,
    /// Train-split standardization applied to the stored table, when any.
    pub standardization: Option<Vec<ColumnStats>>,
    /// Rows of the stored table that are held-out test points.
    pub test_rows: Option<Vec<u32>>,
}

pub fn budget_to_string(budget: f64) -> String {
    if budget.is_infinite() {
        "inf".to_owned()
    } else {
        budget.to_string()
    }
}

pub fn budget_from_string(s: &str) -> Result<f64> {
    if s == "inf" {
        return Ok(f64::INFINITY);
    }
    let v: f64 = s
        .parse()
        .map_err(|_| Error::Model(format!("bad budget {s:?} in manifest")))?;
    if !(v > 0.0) {
        return Err(Error::Model(format!("bad budget {s:?} in manifest")));
    }
    Ok(v)
}

/// Optional dataset provenance recorded in the manifest.
#[derive(Debug, Clone, Default)]
pub struct SaveExtras {
    pub standardization: Option<Vec<ColumnStats>>,
    pub test_rows: Option<Vec<u32>>,
}

fn tree_file_name(t: usize) -> String {
    format!("tree_{t:04}.log")
}

pub fn save_forest(
    dir: impl AsRef<Path>,
    forest: &Forest,
    data: &LabeledDataset,
    extras: &SaveExtras,
) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let manifest = ForestManifest {
        format_version: MANIFEST_FORMAT_VERSION,
        variant: forest.config.variant,
        trees: forest.trees.len(),
        particles: forest.config.particles,
        budget: budget_to_string(forest.config.budget),
        alpha: forest.config.alpha.clone(),
        weights: forest.config.weights.clone(),
        rate_mode: forest.config.resolved_rate_mode(),
        seed: forest.config.seed,
        max_cuts: forest.config.max_cuts,
        vote_mode: forest.config.vote_mode,
        n_rows: data.n_rows(),
        n_features: data.n_features(),
        feature_names: data.feature_names().to_vec(),
        label_names: data.label_names().to_vec(),
        label_column: data.label_column().to_owned(),
        standardization: extras.standardization.clone(),
        test_rows: extras.test_rows.clone(),
    };
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    fs::write(dir.join("manifest.json"), json)?;
    write_csv(data, dir.join("data.csv"))?;
    let trees_dir = dir.join("trees");
    fs::create_dir_all(&trees_dir)?;
    for (t, tree) in forest.trees.iter().enumerate() {
        fs::write(
            trees_dir.join(tree_file_name(t)),
            cut_log_to_string(tree.tessellation.cut_log()),
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct LoadedForest {
    pub manifest: ForestManifest,
    pub data: LabeledDataset,
    pub forest: Forest,
}

pub fn load_forest(dir: impl AsRef<Path>) -> Result<LoadedForest> {
    let dir = dir.as_ref();
    let manifest: ForestManifest =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
    if manifest.format_version != MANIFEST_FORMAT_VERSION {
        return Err(Error::Model(format!(
            "unsupported manifest format version {}",
            manifest.format_version
        )));
    }
    let data = load_csv(dir.join("data.csv"), &manifest.label_column)?;
    if data.n_rows() != manifest.n_rows
        || data.n_features() != manifest.n_features
        || data.feature_names() != manifest.feature_names.as_slice()
        || data.label_names() != manifest.label_names.as_slice()
    {
        return Err(Error::Model("stored table does not match its manifest".into()));
    }
    let budget = budget_from_string(&manifest.budget)?;
    let mut trees = Vec::with_capacity(manifest.trees);
    for t in 0..manifest.trees {
        let text = fs::read_to_string(dir.join("trees").join(tree_file_name(t)))?;
        let records = parse_cut_log(&text)?;
        let tessellation = Tessellation::replay(&data, &records, budget)?;
        let leaves = tessellation
            .leaves()
            .iter()
            .map(|l| (l.id.0, data.class_counts(&l.point_indices)));
        let counts = LabelCounts::from_leaves(manifest.alpha.clone(), leaves)?;
        trees.push(FittedTree { tessellation, counts });
    }
    let config = ForestConfig {
        trees: manifest.trees,
        variant: manifest.variant,
        particles: manifest.particles,
        budget,
        alpha: manifest.alpha.clone(),
        weights: manifest.weights.clone(),
        rate_mode: Some(manifest.rate_mode),
        seed: manifest.seed,
        max_cuts: manifest.max_cuts,
        vote_mode: manifest.vote_mode,
    };
    Ok(LoadedForest { manifest, data, forest: Forest { config, trees } })
}

impl LoadedForest {
    pub fn predict(&self, rows: &[u32]) -> Result<ForestPrediction> {
        predict_forest(&self.forest, &self.data, rows)
    }
}
