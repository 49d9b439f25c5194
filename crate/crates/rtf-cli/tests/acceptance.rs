//! Release gate. Each test prints one `ACCEPTANCE <n>: PASS|FAIL ...` line
//! with its measured values (shown under `cargo test -- --nocapture`, or in
//! the captured output when a bar is missed) and then asserts that bar.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use rtf_cli::args::CubeArgs;
use rtf_cli::config::parse_experiment_config;
use rtf_cli::runner::{run_cube_core, run_experiment_config, CubeReport};
use rtf_core::data::LabeledDataset;
use rtf_core::geometry::{dot, ConvexPolygon2D};
use rtf_core::likelihood::{likelihood_ratio_on_cut, log_multivariate_beta, LabelCounts};
use rtf_core::measure::{RateMode, RtpMeasure};
use rtf_core::rng::{substream, tag};
use rtf_core::smc::{run_smc, SmcConfig};
use rtf_core::stats::{
    chi_square_gof_p, chi_square_homogeneity_p, ks_uniform_p, sign_test_p, two_proportion_p,
};
use rtf_core::tessellation::{prior_draw_2d, AdvanceEvent, Tessellation};

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Criteria 1 and 2 read the same benchmark: the rotated-cube task at its
/// published scale (2000 points, 20 splits, 10 trees, cuts up to 150).
static CUBE: OnceLock<(CubeReport, f64)> = OnceLock::new();

fn cube_benchmark() -> &'static (CubeReport, f64) {
    CUBE.get_or_init(|| {
        let args = CubeArgs {
            n: 2000,
            splits: 20,
            methods: "urtf,mrtf".into(),
            trees: 10,
            particles: 20,
            cuts: "0,25,150".into(),
            alpha: "empirical".into(),
            train_fraction: 0.5,
            seed: 0,
            out: PathBuf::from("unused.json"),
            csv: None,
        };
        let start = Instant::now();
        let report = run_cube_core(&args).expect("cube benchmark");
        (report, start.elapsed().as_secs_f64())
    })
}

#[test]
fn criterion_1_rotated_cube_ordering() {
    let (report, secs) = cube_benchmark();
    let at_150 = report.cuts.iter().position(|&c| c == 150).unwrap();
    let urtf = &report.methods["urtf"];
    let mrtf = &report.methods["mrtf"];
    let wins = urtf
        .per_split
        .iter()
        .zip(&mrtf.per_split)
        .filter(|(u, m)| u[at_150] > m[at_150])
        .count() as u64;
    let p = sign_test_p(wins, report.splits as u64);
    let u_mean = urtf.mean_curve[at_150];
    let m_mean = mrtf.mean_curve[at_150];
    let pass = u_mean > m_mean && p < 0.05 && *secs < 600.0;
    println!(
        "ACCEPTANCE 1: {} urtf {u_mean:.2}% vs mrtf {m_mean:.2}% at 150 cuts; \
         wins {wins}/{}; sign p {p:.2e} (< 0.05); wall {secs:.0}s (< 600s)",
        verdict(pass),
        report.splits,
    );
    assert!(pass, "cube ordering: urtf {u_mean} mrtf {m_mean} p {p} secs {secs}");
}

#[test]
fn criterion_2_accuracy_plateaus_after_25_cuts() {
    let (report, _) = cube_benchmark();
    let at_25 = report.cuts.iter().position(|&c| c == 25).unwrap();
    let at_150 = report.cuts.iter().position(|&c| c == 150).unwrap();
    let curve = &report.methods["urtf"].mean_curve;
    let gap = (curve[at_25] - curve[at_150]).abs();
    let pass = gap <= 3.0;
    println!(
        "ACCEPTANCE 2: {} urtf mean accuracy {:.2}% at 25 cuts vs {:.2}% at 150; \
         gap {gap:.2}pp (<= 3pp)",
        verdict(pass),
        curve[at_25],
        curve[at_150],
    );
    assert!(pass, "plateau gap {gap}pp exceeds 3pp");
}

#[test]
fn criterion_3_restriction_self_consistency() {
    // Drawing on W = [-1,1]^2 and restricting to W' = [-0.5,0.5]^2 must look
    // like drawing on W' directly. Restriction preserves cell co-membership
    // for points inside W', so the co-cell rate of fixed pairs is a
    // distribution-free probe. Exact rates are essential here; the
    // enclosing-ball approximation is not self-consistent.
    let start = Instant::now();
    let big = ConvexPolygon2D::rectangle(-1.0, -1.0, 1.0, 1.0).unwrap();
    let small = ConvexPolygon2D::rectangle(-0.5, -0.5, 0.5, 0.5).unwrap();
    let pairs: [([f64; 2], [f64; 2]); 3] = [
        ([-0.3, -0.3], [0.3, 0.3]),
        ([-0.45, 0.0], [0.45, 0.0]),
        ([0.1, -0.2], [0.15, 0.25]),
    ];
    let draws = 2000u64;
    let mut min_p = 1.0f64;
    let mut detail = String::new();
    for (mi, measure) in
        [RtpMeasure::urtp(2).unwrap(), RtpMeasure::mrtp(2).unwrap()].iter().enumerate()
    {
        let mut co = [[0u64; 3]; 2];
        for (ai, domain) in [&big, &small].into_iter().enumerate() {
            for t in 0..draws {
                let mut rng =
                    substream(300, &[tag(b"consistency"), mi as u64, ai as u64, t]);
                let draw =
                    prior_draw_2d(domain, measure, RateMode::Exact, 1.5, &mut rng).unwrap();
                for (pi, (a, b)) in pairs.iter().enumerate() {
                    if draw.cell_containing(*a) == draw.cell_containing(*b) {
                        co[ai][pi] += 1;
                    }
                }
            }
        }
        let name = ["urtp", "mrtp"][mi];
        for pi in 0..pairs.len() {
            let p = two_proportion_p(co[0][pi], draws, co[1][pi], draws);
            min_p = min_p.min(p);
            detail.push_str(&format!(
                " {name}/pair{pi}: {}vs{} p={p:.3};",
                co[0][pi], co[1][pi]
            ));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = min_p > 0.001 && secs < 120.0;
    println!(
        "ACCEPTANCE 3: {} co-cell rates over {draws} draws per arm; min p {min_p:.4} \
         (> 0.001); wall {secs:.0}s (< 120s);{detail}",
        verdict(pass),
    );
    assert!(pass, "self-consistency: min p {min_p}, secs {secs},{detail}");
}

#[test]
fn criterion_4_likelihood_oracle() {
    // Part one: the incremental cut ratio equals recomputing the full
    // per-leaf product from scratch, for 200 random tables and splits.
    let mut rng = substream(400, &[tag(b"oracle")]);
    let mut max_err = 0.0f64;
    for _ in 0..200 {
        let k = rng.gen_range(1..=4usize);
        let alpha: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..3.0)).collect();
        let parent: Vec<u64> = (0..k).map(|_| rng.gen_range(0..=12)).collect();
        let minus: Vec<u64> = parent
            .iter()
            .map(|&c| (0..c).filter(|_| rng.gen::<bool>()).count() as u64)
            .collect();
        let plus: Vec<u64> = parent.iter().zip(&minus).map(|(&p, &m)| p - m).collect();
        let ratio = likelihood_ratio_on_cut(&parent, &minus, &plus, &alpha).unwrap();
        let mut counts = LabelCounts::single_leaf(alpha.clone(), 0, parent.clone()).unwrap();
        let before = counts.log_marginal();
        counts.apply_cut(0, (1, minus.clone()), (2, plus.clone())).unwrap();
        let full = counts.log_marginal() - before;
        max_err = max_err.max((ratio - full).abs());
    }
    let part_a = max_err <= 1e-10;

    // Part two: single-leaf marginals against brute-force Dirichlet
    // integration, E[prod_k p_k^{m_k}] over a million draws per table.
    let tables: [(&[u64], &[f64]); 10] = [
        (&[2, 1], &[1.0, 1.0]),
        (&[0, 0], &[1.0, 1.0]),
        (&[3, 3], &[1.0, 1.0]),
        (&[5, 0], &[1.0, 1.0]),
        (&[2, 2, 2], &[1.0, 1.0, 1.0]),
        (&[1, 0, 4], &[2.0, 1.0, 1.0]),
        (&[1, 1, 1, 1], &[1.0, 1.0, 1.0, 1.0]),
        (&[6, 0], &[2.0, 2.0]),
        (&[2, 4], &[0.5, 1.5]),
        (&[3, 2], &[1.0, 2.0]),
    ];
    let mut max_rel = 0.0f64;
    for (ti, (m, alpha)) in tables.iter().enumerate() {
        let shifted: Vec<f64> = alpha.iter().zip(*m).map(|(a, &c)| a + c as f64).collect();
        let exact = (log_multivariate_beta(&shifted) - log_multivariate_beta(alpha)).exp();
        let gammas: Vec<Gamma<f64>> =
            alpha.iter().map(|&a| Gamma::new(a, 1.0).unwrap()).collect();
        let mut rng = substream(401, &[tag(b"dirichlet-mc"), ti as u64]);
        let n = 1_000_000u32;
        let mut sum = 0.0f64;
        for _ in 0..n {
            let g: Vec<f64> = gammas.iter().map(|d| d.sample(&mut rng)).collect();
            let total: f64 = g.iter().sum();
            let mut prod = 1.0f64;
            for (gi, &mi) in g.iter().zip(*m) {
                prod *= (gi / total).powi(mi as i32);
            }
            sum += prod;
        }
        let mc = sum / n as f64;
        max_rel = max_rel.max((exact - mc).abs() / exact);
    }
    let part_b = max_rel <= 0.01;
    let pass = part_a && part_b;
    println!(
        "ACCEPTANCE 4: {} max |ratio - full recompute| {max_err:.2e} (<= 1e-10) over \
         200 tables; max Monte Carlo relative error {max_rel:.4} (<= 0.01) over 10 tables",
        verdict(pass),
    );
    assert!(pass, "likelihood oracle: ratio err {max_err}, mc rel err {max_rel}");
}

#[test]
fn criterion_5_mondrian_cut_statistics() {
    // Accepted cuts on a fixed box: positions uniform over each extent,
    // axis choice proportional to extents, and the omega = (14, 1) weighted
    // variant picks axis 0 at 14/15 when extents are equal.
    let lo = [0.0, 0.0, 0.0];
    let hi = [2.0, 1.0, 0.5];
    let corners: Vec<Vec<f64>> = (0..8u32)
        .map(|i| (0..3).map(|a| if i >> a & 1 == 1 { hi[a] } else { lo[a] }).collect())
        .collect();
    let views: Vec<&[f64]> = corners.iter().map(|c| c.as_slice()).collect();
    let measure = RtpMeasure::mrtp(3).unwrap();
    let mut rng = substream(500, &[tag(b"mondrian-cuts")]);
    let n = 10_000usize;
    let mut per_axis: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for _ in 0..n {
        let h = measure.sample_cut(&views, &mut rng).unwrap();
        let axis = h.normal().iter().position(|v| v.abs() > 0.5).unwrap();
        // The cut plane is x_axis = level / n_axis with n_axis = +-1.
        let level = dot(h.normal(), h.anchor()) + h.offset();
        let pos = level / h.normal()[axis];
        per_axis[axis].push((pos - lo[axis]) / (hi[axis] - lo[axis]));
    }
    let counts: Vec<u64> = per_axis.iter().map(|v| v.len() as u64).collect();
    let ks: Vec<f64> = per_axis.iter().map(|v| ks_uniform_p(v)).collect();
    let axis_p = chi_square_gof_p(&counts, &[2.0 / 3.5, 1.0 / 3.5, 0.5 / 3.5]);

    let square: Vec<Vec<f64>> =
        (0..4u32).map(|i| vec![(i & 1) as f64, (i >> 1) as f64]).collect();
    let sq_views: Vec<&[f64]> = square.iter().map(|c| c.as_slice()).collect();
    let weighted = RtpMeasure::wmrtp(vec![14.0, 1.0]).unwrap();
    let mut axis0 = 0u64;
    for _ in 0..n {
        let h = weighted.sample_cut(&sq_views, &mut rng).unwrap();
        if h.normal()[0].abs() > 0.5 {
            axis0 += 1;
        }
    }
    let freq = axis0 as f64 / n as f64;
    let freq_err = (freq - 14.0 / 15.0).abs();

    let pass =
        ks.iter().all(|&p| p > 0.001) && axis_p > 0.001 && freq_err <= 0.01;
    println!(
        "ACCEPTANCE 5: {} {n} cuts on a (2,1,0.5) box: position KS p {:?} (> 0.001), \
         axis counts {counts:?} chi2 p {axis_p:.3} (> 0.001); weighted axis-0 rate \
         {freq:.4} vs 14/15 (err {freq_err:.4} <= 0.01)",
        verdict(pass),
        ks.iter().map(|p| (p * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
    );
    assert!(pass, "cut statistics: ks {ks:?} axis_p {axis_p} freq {freq}");
}

#[test]
fn criterion_6_smc_prior_recovery() {
    // With likelihood weighting off, the particle the sampler selects is
    // marginally a prior draw; its leaf-count law must match direct
    // jump-process simulation. All rows unlabeled, so nothing pauses early.
    let points = [
        [0.12, 0.84],
        [0.91, 0.23],
        [0.37, 0.55],
        [0.68, 0.91],
        [0.05, 0.33],
        [0.77, 0.62],
        [0.49, 0.18],
        [0.26, 0.71],
    ];
    let data = LabeledDataset::from_parts(
        points.iter().flatten().copied().collect(),
        2,
        vec![None; points.len()],
        vec!["a".into()],
        vec!["x".into(), "y".into()],
        "label".into(),
    )
    .unwrap();
    let measure = RtpMeasure::urtp(2).unwrap();
    let budget = 4.0;
    let runs = 500u64;
    let mut direct = Vec::new();
    for trial in 0..runs {
        let mut rng = substream(600, &[tag(b"direct-prior"), trial]);
        let mut tess = Tessellation::init(&data, &measure, RateMode::Ball, budget).unwrap();
        while let AdvanceEvent::CutApplied { .. } =
            tess.advance(&data, &measure, RateMode::Ball, &mut rng).unwrap()
        {}
        direct.push(tess.n_leaves());
    }
    let mut smc = Vec::new();
    for trial in 0..runs {
        let config = SmcConfig {
            particles: 4,
            budget,
            measure: measure.clone(),
            alpha: vec![1.0],
            likelihood_weighting: false,
            rate_mode: RateMode::Ball,
            seed: 601 ^ trial,
            max_cuts: None,
        };
        let est = run_smc(&data, &config).unwrap();
        smc.push(est.particles[est.selected].tessellation.n_leaves());
    }
    let max = *direct.iter().chain(&smc).max().unwrap();
    let mut h1 = vec![0u64; max + 1];
    let mut h2 = vec![0u64; max + 1];
    for &v in &direct {
        h1[v] += 1;
    }
    for &v in &smc {
        h2[v] += 1;
    }
    let p = chi_square_homogeneity_p(&h1, &h2);
    let mean = |v: &[usize]| v.iter().sum::<usize>() as f64 / v.len() as f64;
    let pass = p > 0.001;
    println!(
        "ACCEPTANCE 6: {} leaf counts over {runs}+{runs} runs: direct mean {:.2}, \
         smc mean {:.2}, two-sample chi2 p {p:.3} (> 0.001)",
        verdict(pass),
        mean(&direct),
        mean(&smc),
    );
    assert!(pass, "prior recovery: p {p}, histograms {h1:?} vs {h2:?}");
}

fn run_rtf(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_rtf")).args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "rtf {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn same_bytes(a: &Path, b: &Path) -> bool {
    fs::read(a).unwrap() == fs::read(b).unwrap()
}

#[test]
fn criterion_7_byte_identical_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name);
    let s = |p: &Path| p.to_str().unwrap().to_owned();

    // Prior draw: SVG and vertex CSV.
    for stem in ["d1", "d2"] {
        run_rtf(&["draw", "--budget", "1.5", "--seed", "7", "--out", &s(&path(stem))]);
    }
    let draw_ok = same_bytes(&path("d1"), &path("d2"))
        && same_bytes(&path("d1").with_extension("csv"), &path("d2").with_extension("csv"));

    // Forest fit: manifest, dataset, and every cut log.
    let train = path("train.csv");
    fs::write(&train, "x,y,label\n0,0,a\n1,1,a\n1,0,b\n0,1,b\n").unwrap();
    let test = path("test.csv");
    fs::write(&test, "x,y,label\n0.2,0.1,?\n0.8,0.9,?\n").unwrap();
    for stem in ["m1", "m2"] {
        run_rtf(&[
            "fit",
            "--train",
            &s(&train),
            "--test",
            &s(&test),
            "--variant",
            "wurtf",
            "--trees",
            "3",
            "--particles",
            "3",
            "--seed",
            "5",
            "--out",
            &s(&path(stem)),
        ]);
    }
    let mut fit_ok = same_bytes(&path("m1/manifest.json"), &path("m2/manifest.json"))
        && same_bytes(&path("m1/data.csv"), &path("m2/data.csv"));
    for t in 0..3 {
        let log = format!("trees/tree_{t:04}.log");
        fit_ok &= same_bytes(&path("m1").join(&log), &path("m2").join(&log));
    }

    // Experiment: report JSON and per-split CSV sidecar.
    let config = path("config.json");
    fs::write(
        &config,
        r#"{"datasets": [{"name": "pc", "synthetic_rows": 24, "synthetic_cols": 3, "seed": 2}],
            "methods": ["mrtf", "bl"], "splits": 2, "trees": 2, "particles": 2,
            "max_cuts": 4, "seed": 13}"#,
    )
    .unwrap();
    for stem in ["r1.json", "r2.json"] {
        run_rtf(&["experiment", "--config", &s(&config), "--out", &s(&path(stem))]);
    }
    let exp_ok = same_bytes(&path("r1.json"), &path("r2.json"))
        && same_bytes(
            &path("r1.json").with_extension("splits.csv"),
            &path("r2.json").with_extension("splits.csv"),
        );

    let pass = draw_ok && fit_ok && exp_ok;
    println!(
        "ACCEPTANCE 7: {} byte-identical reruns: draw svg+csv {draw_ok}, \
         fit manifest+data+3 cut logs {fit_ok}, experiment report+splits {exp_ok}",
        verdict(pass),
    );
    assert!(pass, "determinism: draw {draw_ok} fit {fit_ok} experiment {exp_ok}");
}

#[test]
fn criterion_8_experiment_harness_end_to_end() {
    let json = r#"{
        "datasets": [{"name": "pc-synthetic", "synthetic_rows": 85, "synthetic_cols": 85,
                      "seed": 5}],
        "methods": ["urtf", "wurtf", "mrtf", "wmrtf", "urtf-i", "mrtf-i", "bl"],
        "splits": 8, "trees": 5, "particles": 5, "max_cuts": 40, "seed": 17
    }"#;
    let config = parse_experiment_config(json.as_bytes()).unwrap();
    let start = Instant::now();
    let report = run_experiment_config(&config).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let ds = &report.datasets["pc-synthetic"];

    let expected: Vec<&str> = vec!["bl", "mrtf", "mrtf-i", "urtf", "urtf-i", "wmrtf", "wurtf"];
    let keys: Vec<&str> = ds.methods.keys().map(|k| k.as_str()).collect();
    let mut ok = keys == expected && ds.splits == 8;
    for method in ds.methods.values() {
        ok &= method.per_split_percent_correct.len() == 8;
        ok &= method.per_split_percent_correct.iter().all(|&v| (0.0..=100.0).contains(&v));
        let mean = method.per_split_percent_correct.iter().sum::<f64>() / 8.0;
        ok &= (mean - method.mean_percent_correct).abs() < 1e-9;
    }
    ok &= ds.sign_tests.len() == 7 * 6;
    for entry in &ds.sign_tests {
        ok &= entry.wins + entry.losses + entry.ties == 8;
        ok &= entry.p > 0.0 && entry.p <= 1.0;
        ok &= ds.methods.contains_key(&entry.better) && ds.methods.contains_key(&entry.worse);
    }
    // The serialized report parses back.
    let text = report.to_json().unwrap();
    ok &= serde_json::from_str::<serde_json::Value>(&text).is_ok();

    let means: Vec<String> = ds
        .methods
        .iter()
        .map(|(k, v)| format!("{k} {:.1}%", v.mean_percent_correct))
        .collect();
    println!(
        "ACCEPTANCE 8: {} 85x85 synthetic PC-score run, 8 splits x 7 methods x 5 trees: \
         {}; 42 sign tests; wall {secs:.0}s",
        verdict(ok),
        means.join(", "),
    );
    assert!(ok, "experiment harness report malformed");
}
