//! Hyperplanes, enclosing balls, and exact 2-d convex polygon operations.
//!
//! A hyperplane is stored as a unit normal `n`, a nonnegative offset `u`, and
//! an anchor point `x`; it is the point set `{P : <n, P - (x + u n)> = 0}`.
//! The signed distance of `P` is `<n, P - x> - u`, positive on the side the
//! normal points to. Two parameterisations describing the same point set give
//! identical signed distances, which is what every consumer relies on.

use crate::error::{Error, Result};

/// Strict-side tolerance. A hyperplane cuts a point set only when at least
/// one point lies further than this on each side, so grazing planes are never
/// accepted and both children of an accepted cut are nonempty.
pub const CUT_EPS: f64 = 1e-12;

const UNIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane {
    normal: Vec<f64>,
    offset: f64,
    anchor: Vec<f64>,
    /// Cached plane level `<n, x> + u`, so signed distance is one dot product.
    level: f64,
}

impl Hyperplane {
    pub fn new(normal: Vec<f64>, offset: f64, anchor: Vec<f64>) -> Result<Self> {
        if normal.is_empty() {
            return Err(Error::InvalidConfig("hyperplane in dimension 0".into()));
        }
        if normal.len() != anchor.len() {
            return Err(Error::DimensionMismatch {
                expected: normal.len(),
                got: anchor.len(),
            });
        }
        if !normal.iter().chain(anchor.iter()).all(|v| v.is_finite()) || !offset.is_finite() {
            return Err(Error::InvalidConfig("hyperplane parameters must be finite".into()));
        }
        let norm = dot(&normal, &normal).sqrt();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidConfig(format!(
                "hyperplane normal must be unit length, got |n| = {norm}"
            )));
        }
        if offset < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "hyperplane offset must be nonnegative, got {offset}"
            )));
        }
        let level = dot(&normal, &anchor) + offset;
        Ok(Self { normal, offset, anchor, level })
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    /// Signed distance of `p`; callers must pass a point of matching dimension.
    #[inline]
    pub fn signed_distance(&self, p: &[f64]) -> f64 {
        debug_assert_eq!(p.len(), self.normal.len());
        dot(&self.normal, p) - self.level
    }
}

pub fn signed_distances<'a, I>(points: I, h: &Hyperplane) -> Result<Vec<f64>>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut out = Vec::new();
    for p in points {
        if p.len() != h.dim() {
            return Err(Error::DimensionMismatch { expected: h.dim(), got: p.len() });
        }
        out.push(h.signed_distance(p));
    }
    Ok(out)
}

/// Does `h` separate the convex hull of `points` into two nonempty open
/// halves? Equivalent to testing the points themselves: a hyperplane misses
/// the hull interior exactly when every vertex is on one closed side.
pub fn hyperplane_cuts_hull<'a, I>(points: I, h: &Hyperplane) -> Result<bool>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut below = false;
    let mut above = false;
    for p in points {
        if p.len() != h.dim() {
            return Err(Error::DimensionMismatch { expected: h.dim(), got: p.len() });
        }
        let s = h.signed_distance(p);
        below |= s < -CUT_EPS;
        above |= s > CUT_EPS;
        if below && above {
            return Ok(true);
        }
    }
    Ok(false)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        debug_assert_eq!(p.len(), self.center.len());
        let d2: f64 = p
            .iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        d2.sqrt() <= self.radius + tol
    }
}

/// Enclosing ball by the farthest-pair construction: find the most distant
/// pair of points, center the ball at their midpoint, then grow the radius
/// until every point is covered. Not the minimal ball, but deterministic,
/// dimension-free, and within a constant factor of optimal, which is all the
/// spherical rate approximation needs.
pub fn enclosing_ball(points: &[&[f64]]) -> Result<Ball> {
    let n = points.len();
    if n == 0 {
        return Err(Error::EmptyPointSet);
    }
    let d = points[0].len();
    for p in points {
        if p.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: p.len() });
        }
    }
    if n == 1 {
        return Ok(Ball { center: points[0].to_vec(), radius: 0.0 });
    }
    let (mut bi, mut bj, mut best) = (0, 1, 0.0f64);
    for i in 0..n {
        for j in (i + 1)..n {
            let d2 = dist2(points[i], points[j]);
            if d2 > best {
                best = d2;
                bi = i;
                bj = j;
            }
        }
    }
    let center: Vec<f64> = points[bi]
        .iter()
        .zip(points[bj])
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    let radius = points
        .iter()
        .map(|p| dist2(p, &center))
        .fold(0.0f64, f64::max)
        .sqrt();
    Ok(Ball { center, radius })
}

/// Componentwise bounding box, returned as (mins, maxs).
pub fn bounding_box(points: &[&[f64]]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = points.len();
    if n == 0 {
        return Err(Error::EmptyPointSet);
    }
    let d = points[0].len();
    let mut lo = points[0].to_vec();
    let mut hi = points[0].to_vec();
    for p in &points[1..] {
        if p.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: p.len() });
        }
        for k in 0..d {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    Ok((lo, hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Minus,
    Plus,
}

/// Convex polygon with counter-clockwise vertices and strictly positive area.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon2D {
    vertices: Vec<[f64; 2]>,
}

impl ConvexPolygon2D {
    pub fn new(vertices: Vec<[f64; 2]>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidConfig("polygon needs at least 3 vertices".into()));
        }
        if vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("polygon vertices must be finite".into()));
        }
        let area = shoelace(&vertices);
        if area <= 0.0 {
            return Err(Error::InvalidConfig(
                "polygon vertices must be in counter-clockwise order with positive area".into(),
            ));
        }
        let scale = vertices
            .iter()
            .flatten()
            .fold(1.0f64, |m, v| m.max(v.abs()));
        let n = vertices.len();
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            let cr = cross2(sub2(b, a), sub2(c, b));
            if cr < -1e-9 * scale * scale {
                return Err(Error::InvalidConfig("polygon is not convex".into()));
            }
        }
        Ok(Self { vertices })
    }

    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Self::new(vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        shoelace(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                dist2(&a, &b).sqrt()
            })
            .sum()
    }

    pub fn bbox(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for v in &self.vertices[1..] {
            lo[0] = lo[0].min(v[0]);
            lo[1] = lo[1].min(v[1]);
            hi[0] = hi[0].max(v[0]);
            hi[1] = hi[1].max(v[1]);
        }
        (lo, hi)
    }

    /// Closed-side membership: `p` is inside when it lies within `tol` of
    /// every edge half-plane.
    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let e = sub2(b, a);
            let len = (e[0] * e[0] + e[1] * e[1]).sqrt();
            if len == 0.0 {
                return true;
            }
            cross2(e, sub2(p, a)) >= -tol * len
        })
    }

    /// Exact minimum enclosing ball of the vertices (Welzl).
    pub fn min_ball(&self) -> Ball {
        min_ball_2d_points(&self.vertices).expect("polygon has vertices")
    }

    /// Intersection with one closed half of `h`. Returns `None` when the kept
    /// side has no interior. The crossing parameter is computed identically
    /// for both sides, so the two children tile the parent up to floating
    /// point roundoff.
    pub fn clip(&self, h: &Hyperplane, side: Side) -> Option<ConvexPolygon2D> {
        assert_eq!(h.dim(), 2, "2-d polygon clipped by non-2-d hyperplane");
        let n = self.vertices.len();
        let sign = match side {
            Side::Minus => -1.0,
            Side::Plus => 1.0,
        };
        let s: Vec<f64> = self
            .vertices
            .iter()
            .map(|v| sign * h.signed_distance(v))
            .collect();
        let mut out: Vec<[f64; 2]> = Vec::with_capacity(n + 1);
        for i in 0..n {
            let j = (i + 1) % n;
            if s[i] >= 0.0 {
                out.push(self.vertices[i]);
            }
            if (s[i] > 0.0 && s[j] < 0.0) || (s[i] < 0.0 && s[j] > 0.0) {
                // sign cancels in the ratio: both children use the same t.
                let t = s[i] / (s[i] - s[j]);
                let a = self.vertices[i];
                let b = self.vertices[j];
                out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            }
        }
        polygon_from_clip(out)
    }
}

/// Clip output can carry coincident vertices and slivers; collapse them and
/// reject anything without real interior.
fn polygon_from_clip(mut vs: Vec<[f64; 2]>) -> Option<ConvexPolygon2D> {
    if vs.len() < 3 {
        return None;
    }
    let mut lo = vs[0];
    let mut hi = vs[0];
    for v in &vs {
        lo[0] = lo[0].min(v[0]);
        lo[1] = lo[1].min(v[1]);
        hi[0] = hi[0].max(v[0]);
        hi[1] = hi[1].max(v[1]);
    }
    let diam = dist2(&lo, &hi).sqrt();
    if diam == 0.0 {
        return None;
    }
    let tol2 = (1e-12 * diam) * (1e-12 * diam);
    let mut dedup: Vec<[f64; 2]> = Vec::with_capacity(vs.len());
    for v in vs.drain(..) {
        if dedup.last().map_or(true, |p| dist2(p, &v) > tol2) {
            dedup.push(v);
        }
    }
    while dedup.len() > 1 && dist2(&dedup[0], dedup.last().unwrap()) <= tol2 {
        dedup.pop();
    }
    if dedup.len() < 3 {
        return None;
    }
    let area = shoelace(&dedup);
    if area <= 1e-20 * diam * diam {
        return None;
    }
    Some(ConvexPolygon2D { vertices: dedup })
}

/// Exact minimum enclosing ball in the plane (Welzl, incremental form).
pub fn min_ball_2d_points(points: &[[f64; 2]]) -> Result<Ball> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let mut c = Ball { center: points[0].to_vec(), radius: 0.0 };
    for (i, &p) in points.iter().enumerate().skip(1) {
        if !ball_covers(&c, p) {
            c = ball_one_boundary(&points[..=i], p);
        }
    }
    Ok(c)
}

fn ball_covers(b: &Ball, p: [f64; 2]) -> bool {
    let dx = p[0] - b.center[0];
    let dy = p[1] - b.center[1];
    (dx * dx + dy * dy).sqrt() <= b.radius * (1.0 + 1e-12) + 1e-14
}

fn ball_one_boundary(points: &[[f64; 2]], p: [f64; 2]) -> Ball {
    let mut c = Ball { center: p.to_vec(), radius: 0.0 };
    for (j, &q) in points.iter().enumerate() {
        if ball_covers(&c, q) {
            continue;
        }
        c = if c.radius == 0.0 {
            diameter_ball(p, q)
        } else {
            ball_two_boundary(&points[..=j], p, q)
        };
    }
    c
}

fn ball_two_boundary(points: &[[f64; 2]], p: [f64; 2], q: [f64; 2]) -> Ball {
    let circ = diameter_ball(p, q);
    let pq = sub2(q, p);
    let mut left: Option<(Ball, f64)> = None;
    let mut right: Option<(Ball, f64)> = None;
    for &r in points {
        if ball_covers(&circ, r) {
            continue;
        }
        let side = cross2(pq, sub2(r, p));
        let Some(cc) = circumcircle(p, q, r) else { continue };
        let ccx = [cc.center[0], cc.center[1]];
        let d = cross2(pq, sub2(ccx, p));
        if side > 0.0 && left.as_ref().map_or(true, |&(_, ld)| d > ld) {
            left = Some((cc, d));
        } else if side < 0.0 && right.as_ref().map_or(true, |&(_, rd)| d < rd) {
            right = Some((cc, d));
        }
    }
    match (left, right) {
        (None, None) => circ,
        (Some((l, _)), None) => l,
        (None, Some((r, _))) => r,
        (Some((l, _)), Some((r, _))) => {
            if l.radius <= r.radius {
                l
            } else {
                r
            }
        }
    }
}

fn diameter_ball(p: [f64; 2], q: [f64; 2]) -> Ball {
    let center = vec![0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
    let radius = dist2(&p, &q).sqrt() * 0.5;
    Ball { center, radius }
}

fn circumcircle(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Option<Ball> {
    // Relative to a midpoint for stability away from the origin.
    let ox = (a[0].min(b[0]).min(c[0]) + a[0].max(b[0]).max(c[0])) * 0.5;
    let oy = (a[1].min(b[1]).min(c[1]) + a[1].max(b[1]).max(c[1])) * 0.5;
    let (ax, ay) = (a[0] - ox, a[1] - oy);
    let (bx, by) = (b[0] - ox, b[1] - oy);
    let (cx, cy) = (c[0] - ox, c[1] - oy);
    let d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
    if d == 0.0 {
        return None;
    }
    let x = ((ax * ax + ay * ay) * (by - cy)
        + (bx * bx + by * by) * (cy - ay)
        + (cx * cx + cy * cy) * (ay - by))
        / d;
    let y = ((ax * ax + ay * ay) * (cx - bx)
        + (bx * bx + by * by) * (ax - cx)
        + (cx * cx + cy * cy) * (bx - ax))
        / d;
    let center = vec![x + ox, y + oy];
    let radius = [a, b, c]
        .iter()
        .map(|p| dist2(p, &center).sqrt())
        .fold(0.0f64, f64::max);
    Some(Ball { center, radius })
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
fn sub2(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
fn cross2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn shoelace(vs: &[[f64; 2]]) -> f64 {
    let n = vs.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = vs[i];
        let b = vs[(i + 1) % n];
        acc += cross2(a, b);
    }
    0.5 * acc
}
