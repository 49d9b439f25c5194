//! The tessellation-valued Markov jump process over a dataset, with polytopes
//! stored as point-index sets (convex hull replacement), plus the exact 2-d
//! polygon engine used for prior visualization and self-consistency checks.
//!
//! Process semantics: each unpaused leaf carries an event rate; the next cut
//! arrives after an Exponential(total rate) holding time, lands on a leaf
//! chosen proportionally to its rate, and replaces it by the two sign-split
//! child index sets. A leaf pauses permanently when its labeled points share
//! one label or it has fewer than two distinct points.

use std::fmt;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::geometry::{ConvexPolygon2D, Hyperplane, Side, CUT_EPS};
use crate::measure::{MeasureKind, RateMode, RtpMeasure, REJECTION_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PolytopeId(pub u32);

impl fmt::Display for PolytopeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone)]
pub struct Polytope {
    pub id: PolytopeId,
    pub point_indices: Vec<u32>,
    pub paused: bool,
    /// Geometric event rate; a paused leaf keeps its value but contributes
    /// nothing to the process total. Not populated on replayed tessellations.
    pub rate: f64,
    pub birth_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutRecord {
    pub time: f64,
    pub parent: PolytopeId,
    pub child_minus: PolytopeId,
    pub child_plus: PolytopeId,
    pub hyperplane: Hyperplane,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdvanceEvent {
    CutApplied {
        parent: PolytopeId,
        child_minus: PolytopeId,
        child_plus: PolytopeId,
    },
    BudgetExhausted,
    AllPaused,
}

#[derive(Debug, Clone)]
pub struct Tessellation {
    leaves: Vec<Polytope>,
    leaf_of_point: Vec<PolytopeId>,
    cut_log: Vec<CutRecord>,
    clock: f64,
    budget: f64,
    next_id: u32,
}

fn is_paused(data: &LabeledDataset, idx: &[u32]) -> bool {
    if !data.has_two_distinct_rows(idx) {
        return true;
    }
    // With labels anywhere in the dataset, a leaf whose labeled points agree
    // (including zero labeled points) never needs another cut.
    data.has_labels() && data.distinct_labels(idx) <= 1
}

impl Tessellation {
    pub fn init(
        data: &LabeledDataset,
        measure: &RtpMeasure,
        rate_mode: RateMode,
        budget: f64,
    ) -> Result<Self> {
        if measure.dim() != data.n_features() {
            return Err(Error::DimensionMismatch {
                expected: data.n_features(),
                got: measure.dim(),
            });
        }
        if !(budget >= 0.0) {
            return Err(Error::InvalidConfig("budget must be nonnegative".into()));
        }
        let n = data.n_rows();
        let indices: Vec<u32> = (0..n as u32).collect();
        let paused = is_paused(data, &indices);
        let rate = measure.polytope_rate(&data.rows(&indices), rate_mode)?;
        let root = Polytope {
            id: PolytopeId(0),
            point_indices: indices,
            paused,
            rate,
            birth_time: 0.0,
        };
        Ok(Self {
            leaves: vec![root],
            leaf_of_point: vec![PolytopeId(0); n],
            cut_log: Vec::new(),
            clock: 0.0,
            budget,
            next_id: 1,
        })
    }

    pub fn leaves(&self) -> &[Polytope] {
        &self.leaves
    }

    pub fn leaf(&self, id: PolytopeId) -> Option<&Polytope> {
        self.leaves.iter().find(|l| l.id == id)
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn n_cuts(&self) -> usize {
        self.cut_log.len()
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn cut_log(&self) -> &[CutRecord] {
        &self.cut_log
    }

    pub fn total_rate(&self) -> f64 {
        self.leaves.iter().filter(|l| !l.paused).map(|l| l.rate).sum()
    }

    pub fn locate(&self, point: u32) -> Result<PolytopeId> {
        self.leaf_of_point
            .get(point as usize)
            .copied()
            .ok_or(Error::UnknownIndex(point as usize))
    }

    /// One MJP event: exponential holding time, rate-proportional leaf
    /// choice, rejection-sampled cut, sign split.
    pub fn advance(
        &mut self,
        data: &LabeledDataset,
        measure: &RtpMeasure,
        rate_mode: RateMode,
        rng: &mut impl Rng,
    ) -> Result<AdvanceEvent> {
        let total = self.total_rate();
        if !(total > 0.0) {
            return Ok(AllPaused);
        }
        let wait = Exp::new(total).expect("total > 0").sample(rng);
        if self.clock + wait > self.budget {
            self.clock = self.budget;
            return Ok(BudgetExhausted);
        }
        self.clock += wait;

        let mut pick = rng.gen::<f64>() * total;
        let mut pos = usize::MAX;
        for (i, leaf) in self.leaves.iter().enumerate() {
            if leaf.paused {
                continue;
            }
            pos = i;
            if pick < leaf.rate {
                break;
            }
            pick -= leaf.rate;
        }
        // pos falls back to the last unpaused leaf if rounding exhausts pick.
        let parent_id = self.leaves[pos].id;
        let parent_indices = std::mem::take(&mut self.leaves[pos].point_indices);
        let rows = data.rows(&parent_indices);
        let h = match measure.sample_cut(&rows, rng) {
            Ok(h) => h,
            Err(e) => {
                self.leaves[pos].point_indices = parent_indices;
                return Err(e);
            }
        };

        let mut minus = Vec::new();
        let mut plus = Vec::new();
        for &i in &parent_indices {
            if h.signed_distance(data.row(i as usize)) < 0.0 {
                minus.push(i);
            } else {
                plus.push(i);
            }
        }
        debug_assert!(!minus.is_empty() && !plus.is_empty(), "strict cut test violated");

        let id_minus = PolytopeId(self.next_id);
        let id_plus = PolytopeId(self.next_id + 1);
        self.next_id += 2;
        for &i in &minus {
            self.leaf_of_point[i as usize] = id_minus;
        }
        for &i in &plus {
            self.leaf_of_point[i as usize] = id_plus;
        }
        let make = |id: PolytopeId, idx: Vec<u32>, clock: f64| -> Result<Polytope> {
            let paused = is_paused(data, &idx);
            let rate = measure.polytope_rate(&data.rows(&idx), rate_mode)?;
            Ok(Polytope { id, point_indices: idx, paused, rate, birth_time: clock })
        };
        let leaf_minus = make(id_minus, minus, self.clock)?;
        let leaf_plus = make(id_plus, plus, self.clock)?;
        self.leaves[pos] = leaf_minus;
        self.leaves.push(leaf_plus);
        self.cut_log.push(CutRecord {
            time: self.clock,
            parent: parent_id,
            child_minus: id_minus,
            child_plus: id_plus,
            hyperplane: h,
        });
        Ok(CutApplied { parent: parent_id, child_minus: id_minus, child_plus: id_plus })
    }

    /// Rebuild leaf membership by applying a recorded cut sequence to `data`.
    /// Rates are not populated (replayed tessellations are for lookup, not
    /// further propagation).
    pub fn replay(data: &LabeledDataset, records: &[CutRecord], budget: f64) -> Result<Self> {
        let n = data.n_rows();
        let indices: Vec<u32> = (0..n as u32).collect();
        let root_paused = is_paused(data, &indices);
        let mut tess = Self {
            leaves: vec![Polytope {
                id: PolytopeId(0),
                point_indices: indices,
                paused: root_paused,
                rate: 0.0,
                birth_time: 0.0,
            }],
            leaf_of_point: vec![PolytopeId(0); n],
            cut_log: Vec::new(),
            clock: 0.0,
            budget,
            next_id: 1,
        };
        let mut last_time = 0.0f64;
        for rec in records {
            if !(rec.time > last_time) {
                return Err(Error::Model(format!(
                    "cut log times not strictly increasing at t = {}",
                    rec.time
                )));
            }
            last_time = rec.time;
            let pos = tess
                .leaves
                .iter()
                .position(|l| l.id == rec.parent)
                .ok_or_else(|| Error::Model(format!("cut log parent {} is not a leaf", rec.parent)))?;
            let parent_indices = std::mem::take(&mut tess.leaves[pos].point_indices);
            let mut minus = Vec::new();
            let mut plus = Vec::new();
            for &i in &parent_indices {
                if rec.hyperplane.signed_distance(data.row(i as usize)) < 0.0 {
                    minus.push(i);
                } else {
                    plus.push(i);
                }
            }
            if minus.is_empty() || plus.is_empty() {
                return Err(Error::Model(format!(
                    "cut at t = {} does not split leaf {}; log does not match data",
                    rec.time, rec.parent
                )));
            }
            for &i in &minus {
                tess.leaf_of_point[i as usize] = rec.child_minus;
            }
            for &i in &plus {
                tess.leaf_of_point[i as usize] = rec.child_plus;
            }
            let paused_minus = is_paused(data, &minus);
            let paused_plus = is_paused(data, &plus);
            tess.leaves[pos] = Polytope {
                id: rec.child_minus,
                point_indices: minus,
                paused: paused_minus,
                rate: 0.0,
                birth_time: rec.time,
            };
            tess.leaves.push(Polytope {
                id: rec.child_plus,
                point_indices: plus,
                paused: paused_plus,
                rate: 0.0,
                birth_time: rec.time,
            });
            tess.next_id = tess.next_id.max(rec.child_minus.0 + 1).max(rec.child_plus.0 + 1);
            tess.cut_log.push(rec.clone());
            tess.clock = rec.time;
        }
        Ok(tess)
    }
}

use AdvanceEvent::{AllPaused, BudgetExhausted, CutApplied};

/// Line format: `time,parent,child_minus,child_plus,u,anchor...,normal...`
/// with floats at 17 fractional digits of scientific notation, enough for an
/// exact f64 round trip.
pub fn write_cut_log(records: &[CutRecord], mut w: impl Write) -> std::io::Result<()> {
    for r in records {
        write!(
            w,
            "{:.17e},{},{},{},{:.17e}",
            r.time, r.parent, r.child_minus, r.child_plus, r.hyperplane.offset()
        )?;
        for x in r.hyperplane.anchor() {
            write!(w, ",{x:.17e}")?;
        }
        for x in r.hyperplane.normal() {
            write!(w, ",{x:.17e}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn cut_log_to_string(records: &[CutRecord]) -> String {
    let mut buf = Vec::new();
    write_cut_log(records, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

pub fn parse_cut_log(text: &str) -> Result<Vec<CutRecord>> {
    let mut out = Vec::new();
    let mut dim: Option<usize> = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = |reason: &str| Error::MalformedCutLog {
            line: lineno + 1,
            reason: reason.to_owned(),
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 7 || (fields.len() - 5) % 2 != 0 {
            return Err(bad(&format!("expected 5 + 2d fields, got {}", fields.len())));
        }
        let d = (fields.len() - 5) / 2;
        if *dim.get_or_insert(d) != d {
            return Err(bad("inconsistent dimension across lines"));
        }
        let float = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| bad(&format!("bad {what} {s:?}")))
        };
        let id = |s: &str, what: &str| -> Result<PolytopeId> {
            s.parse::<u32>().map(PolytopeId).map_err(|_| bad(&format!("bad {what} {s:?}")))
        };
        let time = float(fields[0], "time")?;
        if !time.is_finite() {
            return Err(bad("non-finite time"));
        }
        let parent = id(fields[1], "parent id")?;
        let child_minus = id(fields[2], "child id")?;
        let child_plus = id(fields[3], "child id")?;
        let offset = float(fields[4], "offset")?;
        let anchor = fields[5..5 + d]
            .iter()
            .map(|s| float(s, "anchor coordinate"))
            .collect::<Result<Vec<f64>>>()?;
        let normal = fields[5 + d..]
            .iter()
            .map(|s| float(s, "normal coordinate"))
            .collect::<Result<Vec<f64>>>()?;
        let hyperplane = Hyperplane::new(normal, offset, anchor)
            .map_err(|e| bad(&format!("invalid hyperplane: {e}")))?;
        out.push(CutRecord { time, parent, child_minus, child_plus, hyperplane });
    }
    Ok(out)
}

/// A prior draw on an exact 2-d polygonal domain.
#[derive(Debug, Clone)]
pub struct Draw2D {
    pub leaves: Vec<ConvexPolygon2D>,
    pub cuts: Vec<(f64, Hyperplane)>,
}

impl Draw2D {
    /// Index of the first leaf containing `p` (boundary points resolve to the
    /// lowest-indexed cell; callers comparing cell identity use the same
    /// deterministic rule on both sides).
    pub fn cell_containing(&self, p: [f64; 2]) -> Option<usize> {
        self.leaves.iter().position(|poly| poly.contains(p, 1e-12))
    }
}

fn polygon_rate(measure: &RtpMeasure, mode: RateMode, poly: &ConvexPolygon2D) -> f64 {
    match (measure.kind(), mode) {
        (MeasureKind::Mrtp | MeasureKind::Wmrtp, RateMode::Exact) => {
            let ([x0, y0], [x1, y1]) = poly.bbox();
            let w = measure.weights();
            let mean_w = (w[0] + w[1]) / 2.0;
            (w[0] / mean_w) * (x1 - x0) + (w[1] / mean_w) * (y1 - y0)
        }
        // Cauchy's formula: mean width of a convex body is perimeter / pi,
        // and the hitting measure of the unit-mass direction law is half the
        // mean width.
        (MeasureKind::Urtp, RateMode::Exact) => poly.perimeter() / (2.0 * std::f64::consts::PI),
        _ => poly.min_ball().radius,
    }
}

fn sample_polygon_cut(
    measure: &RtpMeasure,
    poly: &ConvexPolygon2D,
    rng: &mut impl Rng,
) -> Result<Hyperplane> {
    let ball = poly.min_ball();
    if !(ball.radius > 0.0) {
        return Err(Error::InvalidConfig("degenerate polygon".into()));
    }
    for _ in 0..REJECTION_CAP {
        let normal = measure.sample_direction(rng);
        let offset = rng.gen_range(0.0..ball.radius);
        let h = Hyperplane::new(normal, offset, ball.center.clone())?;
        let mut below = false;
        let mut above = false;
        for v in poly.vertices() {
            let s = h.signed_distance(v);
            below |= s < -CUT_EPS;
            above |= s > CUT_EPS;
        }
        if below && above {
            return Ok(h);
        }
    }
    Err(Error::RejectionCapExceeded(REJECTION_CAP))
}

/// Algorithm-1 prior draw with exact polygon geometry (no hull replacement,
/// no pausing). Requires a finite budget since nothing else stops the
/// process.
pub fn prior_draw_2d(
    domain: &ConvexPolygon2D,
    measure: &RtpMeasure,
    rate_mode: RateMode,
    budget: f64,
    rng: &mut impl Rng,
) -> Result<Draw2D> {
    if measure.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: measure.dim() });
    }
    if !budget.is_finite() || budget < 0.0 {
        return Err(Error::InvalidConfig("prior draws need a finite nonnegative budget".into()));
    }
    let mut leaves = vec![(domain.clone(), polygon_rate(measure, rate_mode, domain))];
    let mut cuts = Vec::new();
    let mut clock = 0.0f64;
    loop {
        let total: f64 = leaves.iter().map(|(_, r)| r).sum();
        if !(total > 0.0) {
            break;
        }
        clock += Exp::new(total).expect("total > 0").sample(rng);
        if clock > budget {
            break;
        }
        let mut pick = rng.gen::<f64>() * total;
        let mut pos = leaves.len() - 1;
        for (i, (_, r)) in leaves.iter().enumerate() {
            if pick < *r {
                pos = i;
                break;
            }
            pick -= r;
        }
        let h = sample_polygon_cut(measure, &leaves[pos].0, rng)?;
        let minus = leaves[pos].0.clip(&h, Side::Minus);
        let plus = leaves[pos].0.clip(&h, Side::Plus);
        let (Some(minus), Some(plus)) = (minus, plus) else {
            // The clipper collapsed a sliver thinner than its tolerance;
            // treat the plane as a non-cut and redraw.
            continue;
        };
        let rate_minus = polygon_rate(measure, rate_mode, &minus);
        let rate_plus = polygon_rate(measure, rate_mode, &plus);
        leaves[pos] = (minus, rate_minus);
        leaves.push((plus, rate_plus));
        cuts.push((clock, h));
    }
    Ok(Draw2D { leaves: leaves.into_iter().map(|(p, _)| p).collect(), cuts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{from_csv_reader, LabeledDataset};
    use crate::rng::{substream, tag};
    use rand::Rng;

    fn two_labeled_points() -> LabeledDataset {
        from_csv_reader("x,y,label\n0,0,a\n1,0,b\n".as_bytes(), "label").unwrap()
    }

    fn random_dataset(n: usize, seed: u64, labeled: bool) -> LabeledDataset {
        let mut rng = substream(seed, &[tag(b"test-data")]);
        let mut predictors = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            predictors.push(rng.gen_range(-1.0..1.0));
            predictors.push(rng.gen_range(-1.0..1.0));
            labels.push(if labeled { Some((i % 2) as u32) } else { None });
        }
        LabeledDataset::from_parts(
            predictors,
            2,
            labels,
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into()],
            "label".into(),
        )
        .unwrap()
    }

    fn check_invariants(tess: &Tessellation, n: usize) {
        let mut seen = vec![0u32; n];
        for leaf in tess.leaves() {
            assert!(!leaf.point_indices.is_empty());
            for &i in &leaf.point_indices {
                seen[i as usize] += 1;
                assert_eq!(tess.locate(i).unwrap(), leaf.id);
            }
        }
        assert!(seen.iter().all(|&c| c == 1), "leaves must partition the indices");
        assert_eq!(tess.n_leaves(), 1 + tess.n_cuts());
        let mut last = 0.0;
        for rec in tess.cut_log() {
            assert!(rec.time > last && rec.time <= tess.clock());
            last = rec.time;
        }
    }

    #[test]
    fn init_single_leaf() {
        let data = random_dataset(5, 50, true);
        let m = RtpMeasure::urtp(2).unwrap();
        let tess = Tessellation::init(&data, &m, RateMode::Ball, f64::INFINITY).unwrap();
        assert_eq!(tess.n_leaves(), 1);
        assert_eq!(tess.leaves()[0].point_indices, vec![0, 1, 2, 3, 4]);
        assert_eq!(tess.clock(), 0.0);
        check_invariants(&tess, 5);
    }

    #[test]
    fn init_degenerate_single_point() {
        let data = from_csv_reader("x,y,label\n1,2,a\n".as_bytes(), "label").unwrap();
        let m = RtpMeasure::urtp(2).unwrap();
        let tess = Tessellation::init(&data, &m, RateMode::Ball, f64::INFINITY).unwrap();
        assert!(tess.leaves()[0].paused);
        assert_eq!(tess.leaves()[0].rate, 0.0);
    }

    #[test]
    fn two_labeled_points_cut_once_then_pause() {
        let data = two_labeled_points();
        let m = RtpMeasure::mrtp(2).unwrap();
        let mut tess = Tessellation::init(&data, &m, RateMode::Exact, f64::INFINITY).unwrap();
        let mut rng = substream(51, &[tag(b"test-two")]);
        match tess.advance(&data, &m, RateMode::Exact, &mut rng).unwrap() {
            CutApplied { .. } => {}
            other => panic!("expected a cut, got {other:?}"),
        }
        assert_eq!(tess.n_leaves(), 2);
        assert!(tess.leaves().iter().all(|l| l.paused && l.point_indices.len() == 1));
        let clock = tess.clock();
        assert_eq!(tess.advance(&data, &m, RateMode::Exact, &mut rng).unwrap(), AllPaused);
        assert_eq!(tess.clock(), clock);
        assert_eq!(tess.n_leaves(), 2);
        check_invariants(&tess, 2);
    }

    #[test]
    fn zero_budget_exhausts_immediately() {
        let data = two_labeled_points();
        let m = RtpMeasure::urtp(2).unwrap();
        let mut tess = Tessellation::init(&data, &m, RateMode::Ball, 0.0).unwrap();
        let mut rng = substream(52, &[tag(b"test-zero")]);
        assert_eq!(tess.advance(&data, &m, RateMode::Ball, &mut rng).unwrap(), BudgetExhausted);
        assert_eq!(tess.clock(), 0.0);
        assert_eq!(tess.n_cuts(), 0);
    }

    #[test]
    fn finite_budget_clock_lands_on_budget() {
        let data = random_dataset(30, 53, false);
        let m = RtpMeasure::urtp(2).unwrap();
        let mut tess = Tessellation::init(&data, &m, RateMode::Ball, 1.5).unwrap();
        let mut rng = substream(53, &[tag(b"test-budget")]);
        loop {
            match tess.advance(&data, &m, RateMode::Ball, &mut rng).unwrap() {
                CutApplied { .. } => continue,
                BudgetExhausted => break,
                AllPaused => panic!("unlabeled data with distinct points cannot fully pause"),
            }
        }
        assert_eq!(tess.clock(), 1.5);
        check_invariants(&tess, 30);
    }

    #[test]
    fn invariants_hold_across_labeled_run_to_pause() {
        let data = random_dataset(40, 54, true);
        let m = RtpMeasure::urtp(2).unwrap();
        let mut tess = Tessellation::init(&data, &m, RateMode::Ball, f64::INFINITY).unwrap();
        let mut rng = substream(54, &[tag(b"test-run")]);
        let mut cuts = 0;
        loop {
            match tess.advance(&data, &m, RateMode::Ball, &mut rng).unwrap() {
                CutApplied { child_minus, child_plus, .. } => {
                    cuts += 1;
                    assert!(cuts < 10_000, "runaway");
                    let lm = tess.leaf(child_minus).unwrap();
                    let lp = tess.leaf(child_plus).unwrap();
                    assert!(!lm.point_indices.is_empty() && !lp.point_indices.is_empty());
                    check_invariants(&tess, 40);
                }
                AllPaused => break,
                BudgetExhausted => panic!("infinite budget"),
            }
        }
        // Pausing with two labels stops at label-pure leaves.
        for leaf in tess.leaves() {
            assert!(data.distinct_labels(&leaf.point_indices) <= 1);
        }
    }

    #[test]
    fn locate_agrees_with_replay() {
        let data = random_dataset(25, 55, true);
        let m = RtpMeasure::mrtp(2).unwrap();
        let mut tess = Tessellation::init(&data, &m, RateMode::Exact, f64::INFINITY).unwrap();
        let mut rng = substream(55, &[tag(b"test-replay")]);
        while let CutApplied { .. } = tess.advance(&data, &m, RateMode::Exact, &mut rng).unwrap() {}
        let replayed = Tessellation::replay(&data, tess.cut_log(), tess.budget()).unwrap();
        assert_eq!(replayed.n_leaves(), tess.n_leaves());
        for i in 0..25u32 {
            assert_eq!(replayed.locate(i).unwrap(), tess.locate(i).unwrap());
        }
        for leaf in tess.leaves() {
            let r = replayed.leaf(leaf.id).unwrap();
            assert_eq!(r.point_indices, leaf.point_indices);
            assert_eq!(r.paused, leaf.paused);
        }
        assert!(matches!(tess.locate(99), Err(Error::UnknownIndex(99))));
    }

    #[test]
    fn cut_log_text_round_trip_is_exact() {
        let data = random_dataset(20, 56, true);
        let m = RtpMeasure::urtp(2).unwrap();
        let mut tess = Tessellation::init(&data, &m, RateMode::Ball, f64::INFINITY).unwrap();
        let mut rng = substream(56, &[tag(b"test-log")]);
        while let CutApplied { .. } = tess.advance(&data, &m, RateMode::Ball, &mut rng).unwrap() {}
        assert!(tess.n_cuts() > 0);
        let text = cut_log_to_string(tess.cut_log());
        let parsed = parse_cut_log(&text).unwrap();
        assert_eq!(parsed, tess.cut_log());
        // And the round trip is textually stable.
        assert_eq!(cut_log_to_string(&parsed), text);
    }

    #[test]
    fn malformed_cut_logs_are_rejected_with_line_numbers() {
        let cases = [
            ("1.0,0,1,2,0.5,0.0,0.0,1.0", "wrong field count"),
            ("1.0,0,1,2,0.5,0.0,0.0,3.0,4.0", "non-unit normal"),
            ("1.0,zero,1,2,0.5,0.0,0.0,0.0,1.0", "bad id"),
            ("x,0,1,2,0.5,0.0,0.0,0.0,1.0", "bad time"),
            ("1.0,0,1,2,-0.5,0.0,0.0,0.0,1.0", "negative offset"),
        ];
        for (line, what) in cases {
            let text = format!("0.5,0,1,2,0.1,0.0,0.0,0.0,1.0\n{line}\n");
            match parse_cut_log(&text) {
                Err(Error::MalformedCutLog { line, .. }) => assert_eq!(line, 2, "{what}"),
                other => panic!("{what}: expected malformed error, got {other:?}"),
            }
        }
        // Dimension mismatch across lines.
        let text = "0.5,0,1,2,0.1,0.0,0.0,0.0,1.0\n0.7,1,3,4,0.1,0.0,0.0,0.0,0.0,0.0,1.0\n";
        assert!(matches!(parse_cut_log(text), Err(Error::MalformedCutLog { line: 2, .. })));
    }

    #[test]
    fn replay_validates_times_and_parents() {
        let data = two_labeled_points();
        let h = Hyperplane::new(vec![1.0, 0.0], 0.2, vec![0.5, 0.0]).unwrap();
        let rec = |time: f64, parent: u32| CutRecord {
            time,
            parent: PolytopeId(parent),
            child_minus: PolytopeId(1),
            child_plus: PolytopeId(2),
            hyperplane: h.clone(),
        };
        assert!(Tessellation::replay(&data, &[rec(1.0, 7)], f64::INFINITY).is_err());
        assert!(Tessellation::replay(&data, &[rec(0.0, 0)], f64::INFINITY).is_err());
        assert!(Tessellation::replay(&data, &[rec(1.0, 0)], f64::INFINITY).is_ok());
    }

    #[test]
    fn prior_draw_zero_budget_returns_domain() {
        let domain = ConvexPolygon2D::rectangle(-1.0, -1.0, 1.0, 1.0).unwrap();
        let m = RtpMeasure::urtp(2).unwrap();
        let mut rng = substream(57, &[tag(b"test-draw0")]);
        let draw = prior_draw_2d(&domain, &m, RateMode::Ball, 0.0, &mut rng).unwrap();
        assert_eq!(draw.leaves.len(), 1);
        assert!(draw.cuts.is_empty());
        assert!(prior_draw_2d(&domain, &m, RateMode::Ball, f64::INFINITY, &mut rng).is_err());
    }

    #[test]
    fn prior_draw_leaf_count_grows_with_budget() {
        let domain = ConvexPolygon2D::rectangle(0.0, 0.0, 1.0, 1.0).unwrap();
        let m = RtpMeasure::urtp(2).unwrap();
        let r = domain.min_ball().radius;
        let mut rng = substream(58, &[tag(b"test-grow")]);
        let mean_leaves = |budget: f64, rng: &mut rand_chacha::ChaCha20Rng| {
            (0..200)
                .map(|_| {
                    prior_draw_2d(&domain, &m, RateMode::Ball, budget, rng).unwrap().leaves.len()
                })
                .sum::<usize>() as f64
                / 200.0
        };
        let small = mean_leaves(r, &mut rng);
        let large = mean_leaves(2.0 * r, &mut rng);
        assert!(large > small, "mean leaves {large} at 2r vs {small} at r");
    }

    #[test]
    fn prior_draw_preserves_area_and_mrtp_stays_axis_aligned() {
        let domain = ConvexPolygon2D::rectangle(0.0, 0.0, 1.0, 1.0).unwrap();
        let m = RtpMeasure::mrtp(2).unwrap();
        let mut rng = substream(59, &[tag(b"test-area")]);
        for _ in 0..20 {
            let draw = prior_draw_2d(&domain, &m, RateMode::Exact, 3.0, &mut rng).unwrap();
            let total: f64 = draw.leaves.iter().map(|p| p.area()).sum();
            assert!((total - 1.0).abs() < 1e-9);
            for poly in &draw.leaves {
                let vs = poly.vertices();
                for i in 0..vs.len() {
                    let a = vs[i];
                    let b = vs[(i + 1) % vs.len()];
                    let axis_aligned =
                        (a[0] - b[0]).abs() < 1e-9 || (a[1] - b[1]).abs() < 1e-9;
                    assert!(axis_aligned, "non-axis-parallel edge in MRTP draw");
                }
            }
            // Every cut normal is a signed basis vector.
            for (_, h) in &draw.cuts {
                assert!(h.normal().iter().any(|&x| x == 1.0 || x == -1.0));
            }
        }
    }

    #[test]
    fn prior_draw_cells_cover_interior_points() {
        let domain = ConvexPolygon2D::rectangle(-1.0, -1.0, 1.0, 1.0).unwrap();
        let m = RtpMeasure::urtp(2).unwrap();
        let mut rng = substream(60, &[tag(b"test-cover")]);
        let draw = prior_draw_2d(&domain, &m, RateMode::Ball, 2.0, &mut rng).unwrap();
        let mut probe = substream(60, &[tag(b"test-cover-probe")]);
        for _ in 0..500 {
            let p = [probe.gen_range(-0.999..0.999), probe.gen_range(-0.999..0.999)];
            assert!(draw.cell_containing(p).is_some(), "uncovered point {p:?}");
        }
    }
}
