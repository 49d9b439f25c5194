//! Dataset ingestion, label encoding, splitting, standardization, and the
//! synthetic benchmark generators.
//!
//! Labels are factor-encoded in first-appearance order and stored as 0-based
//! codes internally; the original strings live in `label_names`. The marker
//! `?` in the label column loads a row as unlabeled, which is also how test
//! rows are registered for augmentation.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{substream, tag};

pub const MISSING_LABEL: &str = "?";

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    predictors: Vec<f64>, // row-major n x d
    n: usize,
    d: usize,
    labels: Vec<Option<u32>>,
    label_names: Vec<String>,
    feature_names: Vec<String>,
    label_column: String,
}

impl LabeledDataset {
    pub fn from_parts(
        predictors: Vec<f64>,
        d: usize,
        labels: Vec<Option<u32>>,
        label_names: Vec<String>,
        feature_names: Vec<String>,
        label_column: String,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::EmptyDataset("no predictor columns".into()));
        }
        if predictors.is_empty() {
            return Err(Error::EmptyDataset("no data rows".into()));
        }
        if predictors.len() % d != 0 {
            return Err(Error::DimensionMismatch { expected: d, got: predictors.len() % d });
        }
        let n = predictors.len() / d;
        if labels.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: labels.len() });
        }
        if feature_names.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: feature_names.len() });
        }
        for (i, v) in predictors.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteCell {
                    row: i / d,
                    column: feature_names[i % d].clone(),
                });
            }
        }
        let k = label_names.len() as u32;
        if labels.iter().flatten().any(|&c| c >= k) {
            return Err(Error::InvalidConfig("label code out of dictionary range".into()));
        }
        Ok(Self { predictors, n, d, labels, label_names, feature_names, label_column })
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_features(&self) -> usize {
        self.d
    }

    pub fn n_classes(&self) -> usize {
        self.label_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn label_column(&self) -> &str {
        &self.label_column
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.predictors[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self, idx: &[u32]) -> Vec<&[f64]> {
        idx.iter().map(|&i| self.row(i as usize)).collect()
    }

    #[inline]
    pub fn label(&self, i: usize) -> Option<u32> {
        self.labels[i]
    }

    pub fn labels(&self) -> &[Option<u32>] {
        &self.labels
    }

    /// True when at least one row carries a label. Pausing on label purity is
    /// only meaningful in this mode; fully unlabeled data is a prior study.
    pub fn has_labels(&self) -> bool {
        self.labels.iter().any(|l| l.is_some())
    }

    pub fn class_counts(&self, idx: &[u32]) -> Vec<u64> {
        let mut counts = vec![0u64; self.n_classes()];
        for &i in idx {
            if let Some(c) = self.labels[i as usize] {
                counts[c as usize] += 1;
            }
        }
        counts
    }

    pub fn class_counts_all(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.n_classes()];
        for c in self.labels.iter().flatten() {
            counts[*c as usize] += 1;
        }
        counts
    }

    /// Number of distinct label codes among the labeled rows of `idx`.
    pub fn distinct_labels(&self, idx: &[u32]) -> usize {
        let mut seen = vec![false; self.n_classes()];
        let mut count = 0;
        for &i in idx {
            if let Some(c) = self.labels[i as usize] {
                if !seen[c as usize] {
                    seen[c as usize] = true;
                    count += 1;
                }
            }
        }
        count
    }

    /// Do the rows of `idx` contain at least two distinct predictor vectors?
    pub fn has_two_distinct_rows(&self, idx: &[u32]) -> bool {
        if idx.len() < 2 {
            return false;
        }
        let first = self.row(idx[0] as usize);
        idx[1..].iter().any(|&i| self.row(i as usize) != first)
    }

    /// Clone with the labels of `rows` erased; row order and geometry are
    /// untouched, so indices remain valid.
    pub fn mask_labels(&self, rows: &[u32]) -> Self {
        let mut out = self.clone();
        for &i in rows {
            out.labels[i as usize] = None;
        }
        out
    }

    /// Append the rows of `test` as unlabeled points. Returns the combined
    /// dataset and the indices the appended rows received.
    pub fn augmented_with(&self, test: &LabeledDataset) -> Result<(Self, Vec<u32>)> {
        if test.feature_names != self.feature_names {
            return Err(Error::InvalidConfig(
                "test predictors must have the same columns in the same order as training".into(),
            ));
        }
        let mut out = self.clone();
        out.predictors.extend_from_slice(&test.predictors);
        out.labels.extend(std::iter::repeat(None).take(test.n));
        out.n += test.n;
        let added = (self.n as u32..out.n as u32).collect();
        Ok((out, added))
    }
}

pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<LabeledDataset> {
    let file = std::fs::File::open(path)?;
    from_csv_reader(file, label_column)
}

pub fn from_csv_reader(reader: impl Read, label_column: &str) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|_| Error::EmptyDataset("missing header row".into()))?
        .iter()
        .map(str::to_owned)
        .collect();
    if headers.is_empty() {
        return Err(Error::EmptyDataset("missing header row".into()));
    }
    {
        let mut seen = std::collections::HashSet::new();
        for h in &headers {
            if !seen.insert(h) {
                return Err(Error::InvalidConfig(format!("duplicate column name {h:?}")));
            }
        }
    }
    let label_pos = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingLabelColumn(label_column.to_owned()))?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_pos)
        .map(|(_, h)| h.clone())
        .collect();
    if feature_names.is_empty() {
        return Err(Error::EmptyDataset("no predictor columns".into()));
    }

    let mut predictors = Vec::new();
    let mut labels: Vec<Option<u32>> = Vec::new();
    let mut label_names: Vec<String> = Vec::new();
    let mut dict: HashMap<String, u32> = HashMap::new();
    for (row_idx, record) in rdr.records().enumerate() {
        // Ragged rows surface as csv::Error (UnequalLengths) here.
        let record = record?;
        for (col, field) in record.iter().enumerate() {
            if col == label_pos {
                if field == MISSING_LABEL {
                    labels.push(None);
                } else {
                    let next = label_names.len() as u32;
                    let code = *dict.entry(field.to_owned()).or_insert_with(|| {
                        label_names.push(field.to_owned());
                        next
                    });
                    labels.push(Some(code));
                }
            } else {
                let v: f64 = field.parse().map_err(|_| Error::NonNumericCell {
                    row: row_idx,
                    column: headers[col].clone(),
                    value: field.to_owned(),
                })?;
                if !v.is_finite() {
                    return Err(Error::NonFiniteCell { row: row_idx, column: headers[col].clone() });
                }
                predictors.push(v);
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset("no data rows".into()));
    }
    LabeledDataset::from_parts(
        predictors,
        feature_names.len(),
        labels,
        label_names,
        feature_names,
        label_column.to_owned(),
    )
}

/// Writes predictors with shortest round-trip formatting (17 significant
/// digits when needed), label column last, missing labels as `?`.
pub fn write_csv(dataset: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    to_csv_writer(dataset, file)
}

pub fn to_csv_writer(dataset: &LabeledDataset, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = dataset.feature_names.iter().map(String::as_str).collect();
    header.push(&dataset.label_column);
    w.write_record(&header)?;
    let mut record: Vec<String> = Vec::with_capacity(dataset.d + 1);
    for i in 0..dataset.n {
        record.clear();
        record.extend(dataset.row(i).iter().map(|v| v.to_string()));
        record.push(match dataset.labels[i] {
            Some(c) => dataset.label_names[c as usize].clone(),
            None => MISSING_LABEL.to_owned(),
        });
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Label rule of the cube benchmark, applied before centering and rotation:
/// class 0 ("1") inside [0,1/4]^3 or [1/4,1]^3, class 1 ("2") elsewhere.
fn cube_label(p: [f64; 3]) -> u32 {
    let in_small = p.iter().all(|&x| x <= 0.25);
    let in_large = p.iter().all(|&x| x >= 0.25);
    if in_small || in_large {
        0
    } else {
        1
    }
}

/// Center at the cube midpoint, then rotate by pi/4 about x and -pi/4 about y
/// (standard right-handed matrices, x applied first).
fn cube_rotate(p: [f64; 3]) -> [f64; 3] {
    let c = std::f64::consts::FRAC_PI_4;
    let (x, y, z) = (p[0] - 0.5, p[1] - 0.5, p[2] - 0.5);
    // R_x(pi/4)
    let (x1, y1, z1) = (x, c.cos() * y - c.sin() * z, c.sin() * y + c.cos() * z);
    // R_y(-pi/4): cos(-c) = cos c, sin(-c) = -sin c
    let (x2, y2, z2) = (c.cos() * x1 - c.sin() * z1, y1, c.sin() * x1 + c.cos() * z1);
    [x2, y2, z2]
}

/// The nested-cubes benchmark: n uniform points in the unit cube, two label
/// regions, rotated off-axis so axis-aligned cuts cannot follow the label
/// boundary.
pub fn mondrian_cube(n: usize, rng: &mut impl Rng) -> LabeledDataset {
    assert!(n >= 1);
    let mut predictors = Vec::with_capacity(3 * n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let p = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
        labels.push(Some(cube_label(p)));
        predictors.extend_from_slice(&cube_rotate(p));
    }
    LabeledDataset::from_parts(
        predictors,
        3,
        labels,
        vec!["1".into(), "2".into()],
        vec!["x".into(), "y".into(), "z".into()],
        "label".into(),
    )
    .expect("generated data is valid")
}

/// Synthetic stand-in for a principal-component score matrix: n x d, column
/// variances decaying as 1/(j+1), a two-class mean shift carried by the
/// leading columns. Used by the bundled experiment fixture.
pub fn synthetic_pc_scores(n: usize, d: usize, rng: &mut impl Rng) -> LabeledDataset {
    assert!(n >= 2 && d >= 1);
    let mut predictors = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        // Deterministic alternation keeps both classes present at any n.
        let z = (i % 2) as u32;
        labels.push(Some(z));
        let sign = if z == 0 { 1.0 } else { -1.0 };
        for j in 0..d {
            let sd = 1.0 / ((j + 1) as f64).sqrt();
            let shift = if j < 3 { 0.9 * sign * sd } else { 0.0 };
            let g: f64 = rng.sample(rand_distr::StandardNormal);
            predictors.push(shift + sd * g);
        }
    }
    let feature_names = (1..=d).map(|j| format!("pc{j}")).collect();
    LabeledDataset::from_parts(
        predictors,
        d,
        labels,
        vec!["1".into(), "2".into()],
        feature_names,
        "label".into(),
    )
    .expect("generated data is valid")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub replicates: u32,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, replicates: u32, seed: u64) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "train fraction must be in (0,1), got {train_fraction}"
            )));
        }
        if replicates == 0 {
            return Err(Error::InvalidConfig("need at least one replicate".into()));
        }
        Ok(Self { train_fraction, replicates, seed })
    }
}

/// Uniformly random train/test partition; train size rounds half up.
/// Deterministic in (spec.seed, replicate).
pub fn split(dataset: &LabeledDataset, spec: &SplitSpec, replicate: u32) -> (Vec<u32>, Vec<u32>) {
    let n = dataset.n_rows();
    let mut idx: Vec<u32> = (0..n as u32).collect();
    let mut rng = substream(spec.seed, &[tag(b"split"), replicate as u64]);
    idx.shuffle(&mut rng);
    let n_train = ((spec.train_fraction * n as f64) + 0.5).floor() as usize;
    let n_train = n_train.min(n);
    let test = idx.split_off(n_train);
    (idx, test)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: f64,
    pub sd: f64,
}

/// Training-row mean and sample standard deviation per column.
pub fn column_stats(dataset: &LabeledDataset, train: &[u32]) -> Result<Vec<ColumnStats>> {
    if train.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let d = dataset.n_features();
    let nt = train.len() as f64;
    let mut out = Vec::with_capacity(d);
    for j in 0..d {
        let mean = train.iter().map(|&i| dataset.row(i as usize)[j]).sum::<f64>() / nt;
        let ss: f64 =
            train.iter().map(|&i| (dataset.row(i as usize)[j] - mean).powi(2)).sum();
        let var = if train.len() > 1 { ss / (nt - 1.0) } else { 0.0 };
        out.push(ColumnStats { mean, sd: var.sqrt() });
    }
    Ok(out)
}

/// Standardize every row with training-set statistics. Constant training
/// columns have no scale and are rejected by name.
pub fn standardize(
    dataset: &LabeledDataset,
    train: &[u32],
) -> Result<(LabeledDataset, Vec<ColumnStats>)> {
    let stats = column_stats(dataset, train)?;
    for (j, s) in stats.iter().enumerate() {
        if s.sd <= 1e-12 * s.mean.abs().max(1.0) {
            return Err(Error::ConstantColumn(dataset.feature_names[j].clone()));
        }
    }
    let out = apply_standardization(dataset, &stats)?;
    Ok((out, stats))
}

pub fn apply_standardization(
    dataset: &LabeledDataset,
    stats: &[ColumnStats],
) -> Result<LabeledDataset> {
    if stats.len() != dataset.n_features() {
        return Err(Error::DimensionMismatch {
            expected: dataset.n_features(),
            got: stats.len(),
        });
    }
    let mut out = dataset.clone();
    let d = out.d;
    for (i, v) in out.predictors.iter_mut().enumerate() {
        let s = &stats[i % d];
        *v = (*v - s.mean) / s.sd;
    }
    Ok(out)
}

/// Per-column sample variance over the training rows, floored away from zero;
/// the weighted variants take these as their axis weights.
pub fn column_variances(dataset: &LabeledDataset, train: &[u32]) -> Result<Vec<f64>> {
    let stats = column_stats(dataset, train)?;
    Ok(stats.iter().map(|s| (s.sd * s.sd).max(1e-12)).collect())
}
