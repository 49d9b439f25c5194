//! The four cutting measures: direction laws, polytope lifetime rates, and
//! the rejection sampler for cut hyperplanes.
//!
//! All four measures factor as (direction law) x (Lebesgue on offsets). The
//! u-variants draw directions from normalized Gaussians (axis-scaled for the
//! weighted form); the M-variants concentrate on the 2d signed basis vectors,
//! recovering (weighted) Mondrian processes.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{bounding_box, enclosing_ball, hyperplane_cuts_hull, Hyperplane};

/// Rejection iterations allowed per cut before declaring the polytope
/// numerically degenerate.
pub const REJECTION_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureKind {
    Urtp,
    Wurtp,
    Mrtp,
    Wmrtp,
}

impl MeasureKind {
    pub fn is_weighted(self) -> bool {
        matches!(self, MeasureKind::Wurtp | MeasureKind::Wmrtp)
    }

    pub fn is_mondrian(self) -> bool {
        matches!(self, MeasureKind::Mrtp | MeasureKind::Wmrtp)
    }
}

/// How polytope lifetime rates are computed.
///
/// `Ball` is the spherical approximation: the rate is the radius of the
/// enclosing ball, for every measure. `Exact` uses the closed-form rate where
/// one exists: the (weighted) bounding-box extent sum for the M-variants.
/// Exact rates for the u-variants in general dimension are out of scope, so
/// `Exact` falls back to the ball radius there; the 2-d polygon engine in
/// `tessellation` additionally supports the exact uRTP rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateMode {
    Ball,
    Exact,
}

impl RateMode {
    /// The default the CLI applies when no flag is given: ball for the
    /// u-variants (their only option), exact for the M-variants.
    pub fn default_for(kind: MeasureKind) -> Self {
        if kind.is_mondrian() {
            RateMode::Exact
        } else {
            RateMode::Ball
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RtpMeasure {
    kind: MeasureKind,
    /// Always length d; all-ones for the unweighted kinds.
    weights: Vec<f64>,
}

impl RtpMeasure {
    pub fn urtp(dim: usize) -> Result<Self> {
        Self::new(MeasureKind::Urtp, vec![1.0; dim])
    }

    pub fn wurtp(weights: Vec<f64>) -> Result<Self> {
        Self::new(MeasureKind::Wurtp, weights)
    }

    pub fn mrtp(dim: usize) -> Result<Self> {
        Self::new(MeasureKind::Mrtp, vec![1.0; dim])
    }

    pub fn wmrtp(weights: Vec<f64>) -> Result<Self> {
        Self::new(MeasureKind::Wmrtp, weights)
    }

    pub fn new(kind: MeasureKind, weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidConfig("measure needs dimension >= 1".into()));
        }
        if !weights.iter().all(|w| w.is_finite() && *w > 0.0) {
            return Err(Error::InvalidConfig("measure weights must be strictly positive".into()));
        }
        if !kind.is_weighted() && weights.iter().any(|w| *w != 1.0) {
            return Err(Error::InvalidConfig(
                "unweighted measures take all-ones weights".into(),
            ));
        }
        Ok(Self { kind, weights })
    }

    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Draw a unit direction from the measure's directional law.
    pub fn sample_direction(&self, rng: &mut impl Rng) -> Vec<f64> {
        let d = self.dim();
        match self.kind {
            MeasureKind::Urtp | MeasureKind::Wurtp => loop {
                let mut v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                if self.kind == MeasureKind::Wurtp {
                    for (x, w) in v.iter_mut().zip(&self.weights) {
                        *x *= w;
                    }
                }
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    for x in &mut v {
                        *x /= norm;
                    }
                    return v;
                }
            },
            MeasureKind::Mrtp | MeasureKind::Wmrtp => {
                let axis = if self.kind == MeasureKind::Mrtp {
                    rng.gen_range(0..d)
                } else {
                    let total: f64 = self.weights.iter().sum();
                    let mut u = rng.gen::<f64>() * total;
                    let mut axis = d - 1;
                    for (i, w) in self.weights.iter().enumerate() {
                        if u < *w {
                            axis = i;
                            break;
                        }
                        u -= w;
                    }
                    axis
                };
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                let mut v = vec![0.0; d];
                v[axis] = sign;
                v
            }
        }
    }

    /// Lifetime rate of the polytope spanned by `points`.
    ///
    /// Ball mode: enclosing-ball radius (the spherical approximation; for the
    /// u-variants this equals the measure of planes hitting the ball).
    /// Exact mode, MRTP: sum of bounding-box extents. Exact mode, wMRTP:
    /// extents weighted by w_i / mean(w), so all-ones weights reproduce the
    /// MRTP rate. Exact mode for u-variants falls back to the ball radius.
    pub fn polytope_rate(&self, points: &[&[f64]], mode: RateMode) -> Result<f64> {
        if points.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        match (self.kind, mode) {
            (MeasureKind::Mrtp | MeasureKind::Wmrtp, RateMode::Exact) => {
                let (lo, hi) = bounding_box(points)?;
                let mean_w: f64 = self.weights.iter().sum::<f64>() / self.dim() as f64;
                Ok(self
                    .weights
                    .iter()
                    .zip(lo.iter().zip(&hi))
                    .map(|(w, (l, h))| (w / mean_w) * (h - l))
                    .sum())
            }
            _ => Ok(enclosing_ball(points)?.radius),
        }
    }

    /// Rejection sampler for a cut of the hull of `points`: draw a direction
    /// from the measure, an offset uniform on [0, r] anchored at the
    /// enclosing-ball center, and accept the first plane that strictly
    /// separates the points. The accepted law is the measure conditioned on
    /// hitting the hull.
    pub fn sample_cut(&self, points: &[&[f64]], rng: &mut impl Rng) -> Result<Hyperplane> {
        let ball = enclosing_ball(points)?;
        if !(ball.radius > 0.0) {
            return Err(Error::InvalidConfig(
                "cannot cut a polytope with fewer than 2 distinct points".into(),
            ));
        }
        for _ in 0..REJECTION_CAP {
            let normal = self.sample_direction(rng);
            let offset = rng.gen_range(0.0..ball.radius);
            let h = Hyperplane::new(normal, offset, ball.center.clone())?;
            if hyperplane_cuts_hull(points.iter().copied(), &h)? {
                return Ok(h);
            }
        }
        Err(Error::RejectionCapExceeded(REJECTION_CAP))
    }
}
