//! Experiment report assembly: per-split accuracies, means, and pairwise
//! one-sided sign tests with conservative tie handling.
//!
//! Runtimes are part of the in-memory report but serialize to a separate
//! sidecar file, keeping the main report byte-identical across reruns.

use std::collections::BTreeMap;

use serde::Serialize;

use rtf_core::error::{Error, Result};
use rtf_core::stats::sign_test_p;

#[derive(Debug, Clone, Serialize)]
pub struct MethodReport {
    pub per_split_percent_correct: Vec<f64>,
    pub mean_percent_correct: f64,
    /// Summed task seconds, excluded from the serialized report.
    #[serde(skip)]
    pub runtime_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SignTestEntry {
    pub better: String,
    pub worse: String,
    pub wins: u64,
    pub losses: u64,
    pub ties: u64,
    pub p: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetReport {
    pub splits: u32,
    pub methods: BTreeMap<String, MethodReport>,
    pub sign_tests: Vec<SignTestEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub datasets: BTreeMap<String, DatasetReport>,
}

/// One-sided sign test that `better` beats `worse`, ties counted as losses
/// for `better`: p = P(Bin(splits, 1/2) >= strict wins).
pub fn sign_test_entry(
    better: &str,
    worse: &str,
    better_acc: &[f64],
    worse_acc: &[f64],
) -> SignTestEntry {
    assert_eq!(better_acc.len(), worse_acc.len());
    let mut wins = 0u64;
    let mut losses = 0u64;
    let mut ties = 0u64;
    for (&a, &b) in better_acc.iter().zip(worse_acc) {
        if a > b {
            wins += 1;
        } else if a < b {
            losses += 1;
        } else {
            ties += 1;
        }
    }
    let n = better_acc.len() as u64;
    SignTestEntry {
        better: better.to_owned(),
        worse: worse.to_owned(),
        wins,
        losses,
        ties,
        p: sign_test_p(wins, n),
    }
}

pub fn build_dataset_report(
    splits: u32,
    per_method: BTreeMap<String, (Vec<f64>, f64)>,
) -> Result<DatasetReport> {
    let mut methods = BTreeMap::new();
    for (name, (per_split, runtime)) in per_method {
        if per_split.len() != splits as usize {
            return Err(Error::Model(format!(
                "method {name} reported {} splits of {splits}",
                per_split.len()
            )));
        }
        for &pc in &per_split {
            if !(0.0..=100.0).contains(&pc) {
                return Err(Error::Model(format!("method {name} percent correct {pc} out of range")));
            }
        }
        let mean = per_split.iter().sum::<f64>() / per_split.len() as f64;
        methods.insert(
            name,
            MethodReport {
                per_split_percent_correct: per_split,
                mean_percent_correct: mean,
                runtime_seconds: runtime,
            },
        );
    }
    let names: Vec<String> = methods.keys().cloned().collect();
    let mut sign_tests = Vec::new();
    for a in &names {
        for b in &names {
            if a == b {
                continue;
            }
            sign_tests.push(sign_test_entry(
                a,
                b,
                &methods[a].per_split_percent_correct,
                &methods[b].per_split_percent_correct,
            ));
        }
    }
    Ok(DatasetReport { splits, methods, sign_tests })
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Long-format per-split table: dataset,method,split,percent_correct.
    pub fn splits_csv(&self) -> String {
        let mut out = String::from("dataset,method,split,percent_correct\n");
        for (dataset, dr) in &self.datasets {
            for (method, mr) in &dr.methods {
                for (split, pc) in mr.per_split_percent_correct.iter().enumerate() {
                    out.push_str(&format!("{dataset},{method},{split},{pc}\n"));
                }
            }
        }
        out
    }

    /// Nondeterministic wall-clock sidecar.
    pub fn timings_json(&self) -> Result<String> {
        let map: BTreeMap<&String, BTreeMap<&String, f64>> = self
            .datasets
            .iter()
            .map(|(name, dr)| {
                (name, dr.methods.iter().map(|(m, r)| (m, r.runtime_seconds)).collect())
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&map)?;
        s.push('\n');
        Ok(s)
    }
}
