//! Command implementations. Each command has a pure core returning its
//! report structure (reused by integration tests) and a thin wrapper that
//! writes output files.

use std::collections::BTreeMap;
use std::fs;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use rtf_core::data::{
    column_variances, load_csv, mondrian_cube, split, standardize, LabeledDataset, SplitSpec,
};
use rtf_core::error::{Error, Result};
use rtf_core::forest::{
    fit_forest, load_forest, predict_forest, save_forest, ForestConfig, ForestVariant,
    SaveExtras, VoteMode,
};
use rtf_core::likelihood::predictive_distribution;
use rtf_core::measure::{MeasureKind, RateMode, RtpMeasure};
use rtf_core::rng::{mix, substream, tag};
use rtf_core::smc::{run_smc_with_snapshots, PosteriorEstimate, SmcConfig};
use rtf_core::tessellation::prior_draw_2d;

use crate::args::{CubeArgs, DrawArgs, ExperimentArgs, FitArgs, PredictArgs};
use crate::config::{
    parse_alpha, parse_budget, parse_comma_floats, parse_cuts_grid, parse_domain,
    parse_experiment_config, parse_method, parse_rate_mode, parse_rows, parse_weights,
    ExperimentConfig, Method,
};
use crate::report::{build_dataset_report, DatasetReport, ExperimentReport};
use crate::svg;

fn build_measure_2d(name: &str, weights: Option<&str>) -> Result<RtpMeasure> {
    let w = weights.map(|s| parse_comma_floats(s, "weights")).transpose()?;
    match (name, w) {
        ("urtp", None) => RtpMeasure::urtp(2),
        ("mrtp", None) => RtpMeasure::mrtp(2),
        ("wurtp", Some(w)) => RtpMeasure::wurtp(w),
        ("wmrtp", Some(w)) => RtpMeasure::wmrtp(w),
        ("wurtp" | "wmrtp", None) => {
            Err(Error::InvalidConfig(format!("measure {name} needs --weights")))
        }
        ("urtp" | "mrtp", Some(_)) => {
            Err(Error::InvalidConfig(format!("measure {name} does not take --weights")))
        }
        (other, _) => Err(Error::InvalidConfig(format!("unknown measure {other:?}"))),
    }
}

pub fn run_draw(args: &DrawArgs) -> Result<()> {
    let measure = build_measure_2d(&args.measure, args.weights.as_deref())?;
    let (x0, y0, x1, y1) = parse_domain(&args.domain)?;
    let domain = rtf_core::geometry::ConvexPolygon2D::rectangle(x0, y0, x1, y1)?;
    let budget = parse_budget(&args.budget)?;
    let rate_mode = parse_rate_mode(args.rate_mode.as_deref(), measure.kind())?;
    let mut rng = substream(args.seed, &[tag(b"draw")]);
    let draw = prior_draw_2d(&domain, &measure, rate_mode, budget, &mut rng)?;
    fs::write(&args.out, svg::render_svg(&draw, (x0, y0, x1, y1), args.seed))?;
    fs::write(args.out.with_extension("csv"), svg::vertices_csv(&draw))?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct CubeMethodCurve {
    /// percent correct, indexed by split then grid position
    pub per_split: Vec<Vec<f64>>,
    pub mean_curve: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CubeReport {
    pub n: usize,
    pub splits: u32,
    pub trees: usize,
    pub particles: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub cuts: Vec<usize>,
    pub methods: BTreeMap<String, CubeMethodCurve>,
}

/// Hard labels for `rows` from the highest-weight particle.
fn predict_selected(est: &PosteriorEstimate, rows: &[u32]) -> Result<Vec<u32>> {
    let p = &est.particles[est.selected];
    rows.iter()
        .map(|&r| {
            let leaf = p.tessellation.locate(r)?;
            let m = p
                .counts
                .leaf(leaf.0)
                .ok_or_else(|| Error::Model(format!("leaf {leaf} missing from counts")))?;
            let pred = predictive_distribution(m, p.counts.alpha());
            let mut best = 0;
            for (i, &q) in pred.iter().enumerate() {
                if q > pred[best] {
                    best = i;
                }
            }
            Ok(best as u32)
        })
        .collect()
}

fn mode_label(counts: &[u64]) -> u32 {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best as u32
}

fn percent_correct(truth: &LabeledDataset, rows: &[u32], labels: &[u32]) -> f64 {
    let correct = rows
        .iter()
        .zip(labels)
        .filter(|(&r, &l)| truth.label(r as usize) == Some(l))
        .count();
    100.0 * correct as f64 / rows.len() as f64
}

fn variant_measure(
    variant: ForestVariant,
    d: usize,
    weights: Option<Vec<f64>>,
) -> Result<RtpMeasure> {
    match variant.kind() {
        MeasureKind::Urtp => RtpMeasure::urtp(d),
        MeasureKind::Mrtp => RtpMeasure::mrtp(d),
        MeasureKind::Wurtp => RtpMeasure::wurtp(
            weights.ok_or_else(|| Error::InvalidConfig("weighted variant needs weights".into()))?,
        ),
        MeasureKind::Wmrtp => RtpMeasure::wmrtp(
            weights.ok_or_else(|| Error::InvalidConfig("weighted variant needs weights".into()))?,
        ),
    }
}

/// One SMC tree evaluated at every grid cut count: returns test-row labels
/// per grid position, carrying the final state into grid points the run
/// paused before reaching.
fn tree_curve(
    data: &LabeledDataset,
    smc: &SmcConfig,
    grid: &[usize],
    rows: &[u32],
) -> Result<Vec<Vec<u32>>> {
    let mut at: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
    let final_est = run_smc_with_snapshots(data, smc, grid, |cuts, est| {
        at.insert(cuts, predict_selected(est, rows)?);
        Ok(())
    })?;
    let final_labels = predict_selected(&final_est, rows)?;
    Ok(grid
        .iter()
        .map(|g| at.get(g).cloned().unwrap_or_else(|| final_labels.clone()))
        .collect())
}

fn vote_rows(per_tree: &[Vec<u32>], n_classes: usize) -> Vec<u32> {
    let rows = per_tree[0].len();
    (0..rows)
        .map(|j| {
            let mut tally = vec![0u64; n_classes];
            for tree in per_tree {
                tally[tree[j] as usize] += 1;
            }
            mode_label(&tally)
        })
        .collect()
}

pub fn run_cube_core(args: &CubeArgs) -> Result<CubeReport> {
    let grid = parse_cuts_grid(&args.cuts)?;
    let alpha_spec = parse_alpha(&args.alpha)?;
    let methods: Vec<(String, Method)> = args
        .methods
        .split(',')
        .map(|s| Ok((s.trim().to_owned(), parse_method(s.trim())?)))
        .collect::<Result<_>>()?;
    if args.n < 10 {
        return Err(Error::InvalidConfig("cube needs at least 10 points".into()));
    }
    let mut rng = substream(args.seed, &[tag(b"cube-data")]);
    let data = mondrian_cube(args.n, &mut rng);
    let spec = SplitSpec::new(args.train_fraction, args.splits, mix(args.seed, tag(b"cube-split")))?;
    let max_cuts = *grid.last().expect("nonempty grid");

    // (split, method) tasks; trees run inside so each task owns one curve.
    let tasks: Vec<(u32, usize)> = (0..args.splits)
        .flat_map(|s| (0..methods.len()).map(move |m| (s, m)))
        .collect();
    let curves: Vec<((u32, usize), Vec<f64>)> = tasks
        .into_par_iter()
        .map(|(s, mi)| {
            let (train, test) = split(&data, &spec, s);
            let masked = data.mask_labels(&test);
            let alpha = alpha_spec.resolve(&masked.class_counts_all())?;
            let (name, method) = &methods[mi];
            let curve: Vec<f64> = match method {
                Method::Baseline => {
                    let label = mode_label(&masked.class_counts_all());
                    let acc = percent_correct(&data, &test, &vec![label; test.len()]);
                    vec![acc; grid.len()]
                }
                Method::Forest(v) | Method::SingleTree(v) => {
                    let trees = method.trees(args.trees);
                    let weights = if v.is_weighted() {
                        Some(column_variances(&masked, &train)?)
                    } else {
                        None
                    };
                    let measure = variant_measure(*v, 3, weights)?;
                    let per_tree: Vec<Vec<Vec<u32>>> = (0..trees as u64)
                        .map(|t| {
                            let smc = SmcConfig {
                                particles: args.particles,
                                budget: f64::INFINITY,
                                measure: measure.clone(),
                                alpha: alpha.clone(),
                                likelihood_weighting: v.likelihood_weighting(),
                                rate_mode: RateMode::default_for(v.kind()),
                                seed: mix(mix(mix(args.seed, s as u64), mi as u64), t),
                                max_cuts: Some(max_cuts),
                            };
                            tree_curve(&masked, &smc, &grid, &test)
                        })
                        .collect::<Result<_>>()?;
                    (0..grid.len())
                        .map(|gi| {
                            let at_g: Vec<Vec<u32>> =
                                per_tree.iter().map(|t| t[gi].clone()).collect();
                            let labels = vote_rows(&at_g, data.n_classes());
                            percent_correct(&data, &test, &labels)
                        })
                        .collect()
                }
            };
            let _ = name;
            Ok(((s, mi), curve))
        })
        .collect::<Result<_>>()?;

    let mut per_method: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
    for (name, _) in &methods {
        per_method.insert(name.clone(), vec![Vec::new(); args.splits as usize]);
    }
    for ((s, mi), curve) in curves {
        per_method.get_mut(&methods[mi].0).expect("method registered")[s as usize] = curve;
    }
    let methods_out = per_method
        .into_iter()
        .map(|(name, per_split)| {
            let mean_curve = (0..grid.len())
                .map(|gi| {
                    per_split.iter().map(|c| c[gi]).sum::<f64>() / per_split.len() as f64
                })
                .collect();
            (name, CubeMethodCurve { per_split, mean_curve })
        })
        .collect();
    Ok(CubeReport {
        n: args.n,
        splits: args.splits,
        trees: args.trees,
        particles: args.particles,
        train_fraction: args.train_fraction,
        seed: args.seed,
        cuts: grid,
        methods: methods_out,
    })
}

pub fn run_cube(args: &CubeArgs) -> Result<()> {
    let report = run_cube_core(args)?;
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    fs::write(&args.out, json)?;
    if let Some(csv_path) = &args.csv {
        let mut csv = String::from("method,split,cuts,percent_correct\n");
        for (name, curve) in &report.methods {
            for (s, per_grid) in curve.per_split.iter().enumerate() {
                for (gi, pc) in per_grid.iter().enumerate() {
                    csv.push_str(&format!("{name},{s},{},{pc}\n", report.cuts[gi]));
                }
            }
        }
        fs::write(csv_path, csv)?;
    }
    Ok(())
}

pub fn run_fit(args: &FitArgs) -> Result<()> {
    let train = load_csv(&args.train, &args.label_column)?;
    let (mut data, test_rows) = match &args.test {
        Some(path) => {
            let test = load_csv(path, &args.label_column)?;
            train.augmented_with(&test)?
        }
        None => (train, Vec::new()),
    };
    let train_rows: Vec<u32> = (0..data.n_rows() as u32)
        .filter(|r| !test_rows.contains(r))
        .collect();
    let variant: ForestVariant = args.variant.parse()?;
    let mut standardization = None;
    // Variance weights come from the raw columns even when fitting runs on
    // standardized ones, where every training variance would be 1.
    let weights_spec = parse_weights(&args.weights)?;
    let weights = if variant.is_weighted() {
        Some(weights_spec.resolve(data.n_features(), || column_variances(&data, &train_rows))?)
    } else {
        None
    };
    if args.standardize {
        let (standardized, stats) = standardize(&data, &train_rows)?;
        data = standardized;
        standardization = Some(stats);
    }
    let alpha = parse_alpha(&args.alpha)?.resolve(&data.class_counts_all())?;
    let config = ForestConfig {
        trees: args.trees,
        variant,
        particles: args.particles,
        budget: parse_budget(&args.budget)?,
        alpha,
        weights,
        rate_mode: Some(parse_rate_mode(args.rate_mode.as_deref(), variant.kind())?),
        seed: args.seed,
        max_cuts: args.cuts,
        vote_mode: args.vote.parse::<VoteMode>()?,
    };
    let forest = fit_forest(&data, &config)?;
    let extras = SaveExtras {
        standardization,
        test_rows: Some(test_rows),
    };
    save_forest(&args.out, &forest, &data, &extras)?;
    Ok(())
}

pub fn run_predict(args: &PredictArgs) -> Result<()> {
    let loaded = load_forest(&args.model)?;
    let rows = match &args.rows {
        Some(s) => parse_rows(s)?,
        None => loaded.manifest.test_rows.clone().unwrap_or_default(),
    };
    if rows.is_empty() {
        return Err(Error::InvalidConfig(
            "no rows to predict: pass --rows or fit with a test table".into(),
        ));
    }
    let pred = loaded.predict(&rows)?;
    let names = loaded.data.label_names();
    let mut out = String::from("row,predicted");
    for n in names {
        out.push_str(&format!(",frac_{n}"));
    }
    out.push('\n');
    let trees = loaded.forest.trees.len() as f64;
    for (i, &r) in rows.iter().enumerate() {
        out.push_str(&format!("{r},{}", names[pred.labels[i] as usize]));
        for &t in &pred.tallies[i] {
            out.push_str(&format!(",{}", t as f64 / trees));
        }
        out.push('\n');
    }
    fs::write(&args.out, out)?;
    Ok(())
}

fn baseline_rows(path: &str, dataset: &str, splits: u32) -> Result<BTreeMap<String, Vec<f64>>> {
    let text = fs::read_to_string(path)?;
    let mut per_method: BTreeMap<String, Vec<Option<f64>>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line.trim() != "dataset,method,split,percent_correct" {
                return Err(Error::InvalidConfig(format!("bad baselines header {line:?}")));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::InvalidConfig(format!("bad baselines line {}", i + 1)));
        }
        if fields[0] != dataset {
            continue;
        }
        let split: usize = fields[2]
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad split on line {}", i + 1)))?;
        let pc: f64 = fields[3]
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad percent on line {}", i + 1)))?;
        let slot = per_method
            .entry(fields[1].to_owned())
            .or_insert_with(|| vec![None; splits as usize]);
        if split >= splits as usize || slot[split].is_some() {
            return Err(Error::InvalidConfig(format!("duplicate or out-of-range split {split}")));
        }
        slot[split] = Some(pc);
    }
    per_method
        .into_iter()
        .map(|(m, v)| {
            let filled: Option<Vec<f64>> = v.into_iter().collect();
            filled
                .map(|f| (m.clone(), f))
                .ok_or_else(|| Error::InvalidConfig(format!("baseline {m} is missing splits")))
        })
        .collect()
}

pub fn run_experiment_config(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let budget = parse_budget(&config.budget)?;
    let alpha_spec = parse_alpha(&config.alpha)?;
    let weights_spec = parse_weights(&config.weights)?;
    let methods: Vec<(String, Method)> = config
        .methods
        .iter()
        .map(|s| Ok((s.clone(), parse_method(s)?)))
        .collect::<Result<_>>()?;

    let mut datasets = BTreeMap::new();
    for (di, ds) in config.datasets.iter().enumerate() {
        let data = ds.load()?;
        let spec = SplitSpec::new(
            config.train_fraction,
            config.splits,
            mix(mix(config.seed, tag(b"exp-split")), di as u64),
        )?;
        let tasks: Vec<(u32, usize)> = (0..config.splits)
            .flat_map(|s| (0..methods.len()).map(move |m| (s, m)))
            .collect();
        let results: Vec<((u32, usize), f64, f64)> = tasks
            .into_par_iter()
            .map(|(s, mi)| {
                let started = Instant::now();
                let (train, test) = split(&data, &spec, s);
                let masked = data.mask_labels(&test);
                let (name, method) = &methods[mi];
                let _ = name;
                let pc = match method {
                    Method::Baseline => {
                        let label = mode_label(&masked.class_counts_all());
                        percent_correct(&data, &test, &vec![label; test.len()])
                    }
                    Method::Forest(v) | Method::SingleTree(v) => {
                        let weights = if v.is_weighted() {
                            Some(weights_spec.resolve(data.n_features(), || {
                                column_variances(&masked, &train)
                            })?)
                        } else {
                            None
                        };
                        let fit_data = if config.standardize {
                            standardize(&masked, &train)?.0
                        } else {
                            masked.clone()
                        };
                        let alpha = alpha_spec.resolve(&fit_data.class_counts_all())?;
                        let fc = ForestConfig {
                            trees: method.trees(config.trees),
                            variant: *v,
                            particles: config.particles,
                            budget,
                            alpha,
                            weights,
                            rate_mode: None,
                            seed: mix(mix(mix(config.seed, di as u64), s as u64), mi as u64),
                            max_cuts: config.max_cuts,
                            vote_mode: VoteMode::Mode,
                        };
                        let forest = fit_forest(&fit_data, &fc)?;
                        let pred = predict_forest(&forest, &fit_data, &test)?;
                        percent_correct(&data, &test, &pred.labels)
                    }
                };
                Ok(((s, mi), pc, started.elapsed().as_secs_f64()))
            })
            .collect::<Result<_>>()?;

        let mut per_method: BTreeMap<String, (Vec<f64>, f64)> = methods
            .iter()
            .map(|(n, _)| (n.clone(), (vec![0.0; config.splits as usize], 0.0)))
            .collect();
        for ((s, mi), pc, secs) in results {
            let entry = per_method.get_mut(&methods[mi].0).expect("registered");
            entry.0[s as usize] = pc;
            entry.1 += secs;
        }
        if let Some(path) = &config.baselines {
            for (name, per_split) in baseline_rows(path, ds.name(), config.splits)? {
                if per_method.contains_key(&name) {
                    return Err(Error::InvalidConfig(format!(
                        "baseline method {name} collides with a configured method"
                    )));
                }
                per_method.insert(name, (per_split, 0.0));
            }
        }
        let report: DatasetReport = build_dataset_report(config.splits, per_method)?;
        datasets.insert(ds.name().to_owned(), report);
    }
    Ok(ExperimentReport { datasets })
}

pub fn run_experiment(args: &ExperimentArgs) -> Result<()> {
    let bytes = fs::read(&args.config)?;
    let config = parse_experiment_config(&bytes)?;
    let report = run_experiment_config(&config)?;
    fs::write(&args.out, report.to_json()?)?;
    fs::write(args.out.with_extension("splits.csv"), report.splits_csv())?;
    fs::write(args.out.with_extension("timings.json"), report.timings_json()?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::args::CubeArgs;
    use std::path::Path;

    fn tiny_cube_args(out: &Path) -> CubeArgs {
        CubeArgs {
            n: 60,
            splits: 2,
            methods: "mrtf,bl".into(),
            trees: 2,
            particles: 2,
            cuts: "0,3".into(),
            alpha: "empirical".into(),
            train_fraction: 0.5,
            seed: 5,
            out: out.to_path_buf(),
            csv: None,
        }
    }

    #[test]
    fn cube_zero_cuts_equals_train_mode_frequency() {
        let dir = tempfile::tempdir().unwrap();
        let args = tiny_cube_args(&dir.path().join("cube.json"));
        let report = run_cube_core(&args).unwrap();
        // At zero cuts every tree predicts the training mode, so the curve
        // starts exactly at the baseline.
        let mrtf = &report.methods["mrtf"];
        let bl = &report.methods["bl"];
        for s in 0..2 {
            assert_eq!(mrtf.per_split[s][0], bl.per_split[s][0]);
        }
        assert_eq!(report.cuts, vec![0, 3]);
        for curve in report.methods.values() {
            for per_split in &curve.per_split {
                for &pc in per_split {
                    assert!((0.0..=100.0).contains(&pc));
                }
            }
        }
    }

    #[test]
    fn cube_rejects_bad_method() {
        let dir = tempfile::tempdir().unwrap();
        let mut args = tiny_cube_args(&dir.path().join("cube.json"));
        args.methods = "mrtf,quadtree".into();
        assert!(matches!(run_cube_core(&args), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn experiment_runs_and_report_is_consistent() {
        let json = r#"{
            "datasets": [{"name": "pc", "synthetic_rows": 40, "synthetic_cols": 4, "seed": 9}],
            "methods": ["mrtf", "mrtf-i", "bl"],
            "splits": 4,
            "trees": 2,
            "particles": 2,
            "max_cuts": 8,
            "seed": 13
        }"#;
        let config = parse_experiment_config(json.as_bytes()).unwrap();
        let report = run_experiment_config(&config).unwrap();
        let ds = &report.datasets["pc"];
        assert_eq!(ds.methods.len(), 3);
        assert_eq!(ds.sign_tests.len(), 6);
        for mr in ds.methods.values() {
            let mean =
                mr.per_split_percent_correct.iter().sum::<f64>() / ds.splits as f64;
            assert!((mean - mr.mean_percent_correct).abs() < 1e-12);
        }
        for st in &ds.sign_tests {
            assert!(st.p >= 0.0 && st.p <= 1.0);
            assert_eq!(st.wins + st.losses + st.ties, ds.splits as u64);
        }
        // Determinism of the serialized report.
        let again = run_experiment_config(&config).unwrap();
        assert_eq!(report.to_json().unwrap(), again.to_json().unwrap());
    }

    #[test]
    fn experiment_merges_external_baselines() {
        let dir = tempfile::tempdir().unwrap();
        let bl_path = dir.path().join("bl.csv");
        fs::write(
            &bl_path,
            "dataset,method,split,percent_correct\npc,svm,0,80\npc,svm,1,90\n",
        )
        .unwrap();
        let json = format!(
            r#"{{
            "datasets": [{{"name": "pc", "synthetic_rows": 30, "synthetic_cols": 3, "seed": 9}}],
            "methods": ["bl"],
            "splits": 2,
            "trees": 1,
            "particles": 1,
            "max_cuts": 2,
            "seed": 13,
            "baselines": {:?}
        }}"#,
            bl_path.to_str().unwrap()
        );
        let config = parse_experiment_config(json.as_bytes()).unwrap();
        let report = run_experiment_config(&config).unwrap();
        let ds = &report.datasets["pc"];
        assert_eq!(ds.methods["svm"].mean_percent_correct, 85.0);
        assert_eq!(ds.sign_tests.len(), 2);
    }
}
