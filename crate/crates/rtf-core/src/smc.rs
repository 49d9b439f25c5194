//! Sequential Monte Carlo over tessellation histories.
//!
//! Each particle carries a tessellation, its per-leaf label counts, and a log
//! weight. One round propagates every unfinished particle by a single jump
//! event, multiplies its weight by the marginal likelihood ratio of the cut
//! (when likelihood weighting is on), normalizes, and multinomially resamples
//! all slots. Particles finish when their budget is exhausted, everything is
//! paused, or the optional cut cap is reached; a final round never resamples,
//! so finished weights survive to the estimate.
//!
//! Particle clocks advance asynchronously: each holding time is drawn from
//! that particle's own total rate, so particles at the same round may sit at
//! different process times.

use rand::Rng;

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::likelihood::{check_alpha, predictive_distribution, LabelCounts};
use crate::measure::{RateMode, RtpMeasure};
use crate::rng::{substream, tag};
use crate::tessellation::{AdvanceEvent, Tessellation};

#[derive(Debug, Clone)]
pub struct Particle {
    pub tessellation: Tessellation,
    pub counts: LabelCounts,
    pub log_weight: f64,
    pub finished: bool,
}

#[derive(Debug, Clone)]
pub struct SmcConfig {
    pub particles: usize,
    pub budget: f64,
    pub measure: RtpMeasure,
    pub alpha: Vec<f64>,
    pub likelihood_weighting: bool,
    pub rate_mode: RateMode,
    pub seed: u64,
    /// Stop propagating a particle once it holds this many cuts.
    pub max_cuts: Option<usize>,
}

impl SmcConfig {
    fn validate(&self, data: &LabeledDataset) -> Result<()> {
        if self.particles == 0 {
            return Err(Error::InvalidConfig("particle count must be at least 1".into()));
        }
        if !(self.budget > 0.0) {
            return Err(Error::InvalidConfig("budget must be positive".into()));
        }
        check_alpha(&self.alpha)?;
        if self.alpha.len() != data.n_classes() {
            return Err(Error::InvalidConfig(format!(
                "alpha has {} entries for {} classes",
                self.alpha.len(),
                data.n_classes()
            )));
        }
        if self.likelihood_weighting && !data.has_labels() {
            return Err(Error::InvalidConfig(
                "likelihood weighting needs at least one labeled row".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PosteriorEstimate {
    pub particles: Vec<Particle>,
    /// Normalized linear weights, aligned with `particles`.
    pub weights: Vec<f64>,
    /// Highest-weight particle; ties resolve to the lowest index.
    pub selected: usize,
}

fn log_normalize(particles: &mut [Particle]) {
    let max = particles.iter().map(|p| p.log_weight).fold(f64::NEG_INFINITY, f64::max);
    let lse = max
        + particles.iter().map(|p| (p.log_weight - max).exp()).sum::<f64>().ln();
    for p in particles.iter_mut() {
        p.log_weight -= lse;
    }
}

fn linear_weights(particles: &[Particle]) -> Vec<f64> {
    particles.iter().map(|p| p.log_weight.exp()).collect()
}

fn select_best(weights: &[f64]) -> usize {
    let mut best = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > weights[best] {
            best = i;
        }
    }
    best
}

/// Slot i covers the half-open interval [cumulative[i-1], cumulative[i]).
fn multinomial_draw(cumulative: &[f64], u: f64) -> usize {
    cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1)
}

fn resample(particles: &mut Vec<Particle>, rng: &mut impl Rng) {
    let weights = linear_weights(particles);
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in &weights {
        acc += w;
        cumulative.push(acc);
    }
    let m = particles.len();
    let uniform_log = -(m as f64).ln();
    let mut next = Vec::with_capacity(m);
    for _ in 0..m {
        let mut p = particles[multinomial_draw(&cumulative, rng.gen::<f64>())].clone();
        p.log_weight = uniform_log;
        next.push(p);
    }
    *particles = next;
}

fn estimate(particles: Vec<Particle>) -> PosteriorEstimate {
    let weights = linear_weights(&particles);
    let selected = select_best(&weights);
    PosteriorEstimate { particles, weights, selected }
}

pub fn run_smc(data: &LabeledDataset, config: &SmcConfig) -> Result<PosteriorEstimate> {
    run_smc_with_snapshots(data, config, &[], |_, _| Ok(()))
}

/// Like [`run_smc`], additionally invoking `snapshot` at every cut count in
/// `grid` (0 means the initial uncut state) with the normalized in-progress
/// estimate. Snapshots fire after weight normalization, before resampling,
/// so the reported weights match what the final round would return.
pub fn run_smc_with_snapshots(
    data: &LabeledDataset,
    config: &SmcConfig,
    grid: &[usize],
    mut snapshot: impl FnMut(usize, &PosteriorEstimate) -> Result<()>,
) -> Result<PosteriorEstimate> {
    config.validate(data)?;
    let m = config.particles;
    let all_indices: Vec<u32> = (0..data.n_rows() as u32).collect();
    let root_counts = data.class_counts(&all_indices);
    let template = Particle {
        tessellation: Tessellation::init(data, &config.measure, config.rate_mode, config.budget)?,
        counts: LabelCounts::single_leaf(config.alpha.clone(), 0, root_counts)?,
        log_weight: -(m as f64).ln(),
        finished: false,
    };
    let mut particles = vec![template; m];
    let max_cuts = config.max_cuts.unwrap_or(usize::MAX);

    let mut fired = vec![false; grid.len()];
    macro_rules! fire {
        ($cuts:expr, $particles:expr) => {
            if let Some(i) = grid.iter().position(|&g| g == $cuts) {
                if !fired[i] {
                    fired[i] = true;
                    snapshot($cuts, &estimate($particles.clone()))?;
                }
            }
        };
    }
    fire!(0, particles);

    let mut round = 0u64;
    loop {
        for p in particles.iter_mut() {
            if p.tessellation.n_cuts() >= max_cuts {
                p.finished = true;
            }
        }
        if particles.iter().all(|p| p.finished) {
            break;
        }
        for (slot, p) in particles.iter_mut().enumerate() {
            if p.finished {
                continue;
            }
            let mut rng = substream(config.seed, &[tag(b"propagate"), round, slot as u64]);
            match p.tessellation.advance(data, &config.measure, config.rate_mode, &mut rng)? {
                AdvanceEvent::CutApplied { parent, child_minus, child_plus } => {
                    let cm = p.tessellation.leaf(child_minus).expect("fresh child");
                    let cp = p.tessellation.leaf(child_plus).expect("fresh child");
                    let counts_minus = data.class_counts(&cm.point_indices);
                    let counts_plus = data.class_counts(&cp.point_indices);
                    let ratio = p.counts.apply_cut(
                        parent.0,
                        (child_minus.0, counts_minus),
                        (child_plus.0, counts_plus),
                    )?;
                    if config.likelihood_weighting {
                        p.log_weight += ratio;
                    }
                    if p.tessellation.n_cuts() >= max_cuts {
                        p.finished = true;
                    }
                }
                AdvanceEvent::BudgetExhausted | AdvanceEvent::AllPaused => {
                    p.finished = true;
                }
            }
        }
        log_normalize(&mut particles);
        let cuts_now = particles.iter().map(|p| p.tessellation.n_cuts()).max().unwrap_or(0);
        fire!(cuts_now, particles);
        if particles.iter().all(|p| p.finished) {
            break;
        }
        let mut rng = substream(config.seed, &[tag(b"resample"), round]);
        resample(&mut particles, &mut rng);
        round += 1;
    }
    log_normalize(&mut particles);
    Ok(estimate(particles))
}

/// Posterior predictive class probabilities and hard labels for dataset rows.
/// Probabilities mix each particle's leaf predictive by particle weight; hard
/// labels take the argmax, ties to the smallest label code.
pub fn predict(
    est: &PosteriorEstimate,
    data: &LabeledDataset,
    rows: &[u32],
) -> Result<(Vec<Vec<f64>>, Vec<u32>)> {
    let k = data.n_classes();
    let mut probs = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for &r in rows {
        if r as usize >= data.n_rows() {
            return Err(Error::UnregisteredRow(r as usize));
        }
        let mut mix = vec![0.0f64; k];
        for (p, &w) in est.particles.iter().zip(&est.weights) {
            let leaf = p.tessellation.locate(r)?;
            let m = p
                .counts
                .leaf(leaf.0)
                .ok_or_else(|| Error::Model(format!("leaf {leaf} missing from counts")))?;
            let pred = predictive_distribution(m, p.counts.alpha());
            for (acc, q) in mix.iter_mut().zip(pred) {
                *acc += w * q;
            }
        }
        let mut best = 0;
        for (i, &q) in mix.iter().enumerate() {
            if q > mix[best] {
                best = i;
            }
        }
        probs.push(mix);
        labels.push(best as u32);
    }
    Ok((probs, labels))
}
