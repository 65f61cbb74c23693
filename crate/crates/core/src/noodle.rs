//! Crossing numbers of polylines and Monte Carlo checks of the kinematic
//! formulas of Poincaré and Buffon.

use crate::geom::vec2::{Aabb, Vec2};
use crate::stats::{EstimateReport, DEFAULT_THRESHOLD};
use rand::Rng;
use std::f64::consts::PI;

/// Vertex-on-segment and collinearity tolerance.
pub const TOUCH_EPS: f64 = 1e-12;
/// Smooth curves are sampled with this many segments.
pub const SMOOTH_SEGMENTS: usize = 256;
pub const MIN_SAMPLES: usize = 1000;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum NoodleError {
    #[error("a polyline needs at least two vertices")]
    TooFewVertices,
    #[error("polyline has non-finite coordinates or zero length")]
    Degenerate,
    #[error("need at least {MIN_SAMPLES} samples, got {0}")]
    TooFewSamples(usize),
    #[error("line spacing must be positive and finite")]
    BadSpacing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    vertices: Vec<Vec2>,
    closed: bool,
    length: f64,
}

impl Polyline {
    pub fn new(vertices: Vec<Vec2>, closed: bool) -> Result<Self, NoodleError> {
        if vertices.len() < 2 {
            return Err(NoodleError::TooFewVertices);
        }
        if vertices
            .iter()
            .any(|v| !(v.x.is_finite() && v.y.is_finite()))
        {
            return Err(NoodleError::Degenerate);
        }
        let mut p = Self {
            vertices,
            closed,
            length: 0.0,
        };
        p.length = p.segments().map(|(a, b)| a.dist(b)).sum();
        if !(p.length > 0.0) {
            return Err(NoodleError::Degenerate);
        }
        Ok(p)
    }

    /// Segment from the origin along the x axis.
    pub fn segment(len: f64) -> Result<Self, NoodleError> {
        Self::new(vec![Vec2::new(0.0, 0.0), Vec2::new(len, 0.0)], false)
    }

    /// Closed square boundary with the given perimeter.
    pub fn square(perimeter: f64) -> Result<Self, NoodleError> {
        let s = perimeter / 4.0;
        let v = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(s, 0.0),
            Vec2::new(s, s),
            Vec2::new(0.0, s),
        ];
        Self::new(v, true)
    }

    /// Circular arc of the given length and opening angle, sampled with
    /// [`SMOOTH_SEGMENTS`] segments and rescaled to the exact arc length.
    pub fn arc(length: f64, angle: f64) -> Result<Self, NoodleError> {
        if !(length > 0.0 && angle > 0.0 && angle <= 2.0 * PI) {
            return Err(NoodleError::Degenerate);
        }
        let r = length / angle;
        let closed = angle >= 2.0 * PI;
        let n = SMOOTH_SEGMENTS;
        let count = if closed { n } else { n + 1 };
        let v = (0..count)
            .map(|k| Vec2::from_angle(angle * k as f64 / n as f64) * r)
            .collect();
        Ok(Self::new(v, closed)?.with_length(length))
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn closed(&self) -> bool {
        self.closed
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn segments(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        let m = if self.closed { n } else { n - 1 };
        (0..m).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn bbox(&self) -> Aabb {
        let mut lo = self.vertices[0];
        let mut hi = lo;
        for v in &self.vertices {
            lo = Vec2::new(lo.x.min(v.x), lo.y.min(v.y));
            hi = Vec2::new(hi.x.max(v.x), hi.y.max(v.y));
        }
        Aabb::new(lo, hi)
    }

    /// Largest distance from the bounding-box centre to a vertex.
    pub fn circumradius(&self) -> f64 {
        let c = self.bbox().center();
        self.vertices.iter().map(|v| v.dist(c)).fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            vertices: self.vertices.iter().map(|&v| v * s).collect(),
            closed: self.closed,
            length: self.length * s,
        }
    }

    fn with_length(self, len: f64) -> Self {
        let s = len / self.length;
        let mut out = self.scaled(s);
        out.length = len;
        out
    }

    /// Rotation by `theta` about the origin followed by a shift.
    pub fn moved(&self, theta: f64, shift: Vec2) -> Self {
        Self {
            vertices: self
                .vertices
                .iter()
                .map(|&v| v.rotated(theta) + shift)
                .collect(),
            closed: self.closed,
            length: self.length,
        }
    }

    /// Copy with the bounding-box centre at the origin.
    pub fn centered(&self) -> Self {
        let c = self.bbox().center();
        self.moved(0.0, Vec2::new(-c.x, -c.y))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Crossings {
    pub crossings: u64,
    pub touches: u64,
}

enum Contact {
    None,
    Cross,
    Touch,
}

fn on_segment(p: Vec2, a: Vec2, b: Vec2) -> bool {
    let d = b - a;
    let l2 = d.norm_sq();
    let t = (p - a).dot(d) / l2;
    let dist = (p - a).cross(d).abs() / l2.sqrt();
    dist <= TOUCH_EPS && (-TOUCH_EPS..=1.0 + TOUCH_EPS).contains(&t)
}

fn contact(p: Vec2, q: Vec2, r: Vec2, s: Vec2) -> Contact {
    let (lo1, hi1) = (
        Vec2::new(p.x.min(q.x), p.y.min(q.y)),
        Vec2::new(p.x.max(q.x), p.y.max(q.y)),
    );
    let (lo2, hi2) = (
        Vec2::new(r.x.min(s.x), r.y.min(s.y)),
        Vec2::new(r.x.max(s.x), r.y.max(s.y)),
    );
    if lo1.x > hi2.x + TOUCH_EPS
        || lo2.x > hi1.x + TOUCH_EPS
        || lo1.y > hi2.y + TOUCH_EPS
        || lo2.y > hi1.y + TOUCH_EPS
    {
        return Contact::None;
    }
    if on_segment(r, p, q) || on_segment(s, p, q) || on_segment(p, r, s) || on_segment(q, r, s) {
        return Contact::Touch;
    }
    let d1 = (q - p).cross(r - p);
    let d2 = (q - p).cross(s - p);
    let d3 = (s - r).cross(p - r);
    let d4 = (s - r).cross(q - r);
    if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
        Contact::Cross
    } else {
        Contact::None
    }
}

/// Transversal crossings between the segment chains; degenerate contacts
/// are counted separately as touches.
pub fn crossings(a: &Polyline, b: &Polyline) -> Crossings {
    let mut out = Crossings::default();
    if !a.bbox().expanded(TOUCH_EPS).intersects(&b.bbox()) {
        return out;
    }
    for (p, q) in a.segments() {
        for (r, s) in b.segments() {
            match contact(p, q, r, s) {
                Contact::None => {}
                Contact::Cross => out.crossings += 1,
                Contact::Touch => out.touches += 1,
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoodleEstimate {
    pub report: EstimateReport,
    /// Samples with at least one touch.
    pub touches: u64,
}

fn finish(
    sum: f64,
    sum_sq: f64,
    n: usize,
    scale: f64,
    target: f64,
    touches: u64,
) -> NoodleEstimate {
    let nf = n as f64;
    let mean = sum / nf;
    let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    let report = EstimateReport::new(scale * mean, scale * (var / nf).sqrt(), n)
        .with_target(target, DEFAULT_THRESHOLD);
    NoodleEstimate { report, touches }
}

/// Estimates `∫∫ #(a ∩ (ρ_θ b + x)) dθ dx`, whose exact value is
/// `4 · len(a) · len(b)`.
pub fn poincare_mc<R: Rng + ?Sized>(
    a: &Polyline,
    b: &Polyline,
    samples: usize,
    rng: &mut R,
) -> Result<NoodleEstimate, NoodleError> {
    if samples < MIN_SAMPLES {
        return Err(NoodleError::TooFewSamples(samples));
    }
    let b0 = b.centered();
    let region = a.bbox().expanded(b0.circumradius() + 1e-6);
    let (mut sum, mut sum_sq, mut touches) = (0.0, 0.0, 0);
    for _ in 0..samples {
        let theta = rng.random_range(-PI..PI);
        let x = Vec2::new(
            rng.random_range(region.min.x..region.max.x),
            rng.random_range(region.min.y..region.max.y),
        );
        let c = crossings(a, &b0.moved(theta, x));
        let v = c.crossings as f64;
        sum += v;
        sum_sq += v * v;
        touches += u64::from(c.touches > 0);
    }
    let scale = 2.0 * PI * region.area();
    Ok(finish(
        sum,
        sum_sq,
        samples,
        scale,
        4.0 * a.length() * b.length(),
        touches,
    ))
}

/// Crossings with the horizontal lines `y = k · spacing`.
pub fn line_crossings(a: &Polyline, spacing: f64) -> u64 {
    a.segments()
        .map(|(p, q)| {
            let (lo, hi) = (p.y.min(q.y) / spacing, p.y.max(q.y) / spacing);
            (hi.floor() - lo.floor()).max(0.0) as u64
        })
        .sum()
}

/// Estimates the mean number of crossings of a randomly placed copy of `a`
/// with a grid of parallel lines, whose exact value is
/// `2 · len(a) / (π · spacing)`.
pub fn buffon_noodle_mc<R: Rng + ?Sized>(
    a: &Polyline,
    spacing: f64,
    samples: usize,
    rng: &mut R,
) -> Result<NoodleEstimate, NoodleError> {
    if samples < MIN_SAMPLES {
        return Err(NoodleError::TooFewSamples(samples));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(NoodleError::BadSpacing);
    }
    let a0 = a.centered();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let y = rng.random_range(0.0..spacing);
        let theta = rng.random_range(-PI..PI);
        let v = line_crossings(&a0.moved(theta, Vec2::new(0.0, y)), spacing) as f64;
        sum += v;
        sum_sq += v * v;
    }
    Ok(finish(
        sum,
        sum_sq,
        samples,
        1.0,
        2.0 * a.length() / (PI * spacing),
        0,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Purpose, StreamKey};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn rng(r: u64) -> crate::rng::SimRng {
        StreamKey::new(5, r, Purpose::Noodle).rng()
    }

    fn seg(a: (f64, f64), b: (f64, f64)) -> Polyline {
        Polyline::new(vec![Vec2::new(a.0, a.1), Vec2::new(b.0, b.1)], false).unwrap()
    }

    #[test]
    fn plus_sign_and_disjoint() {
        let h = seg((-0.5, 0.0), (0.5, 0.0));
        let v = seg((0.0, -0.5), (0.0, 0.5));
        assert_eq!(crossings(&h, &v).crossings, 1);
        assert_eq!(
            crossings(&h, &seg((2.0, 2.0), (3.0, 3.0))),
            Crossings::default()
        );
        let t = seg((0.0, 0.0), (0.0, 1.0));
        let c = crossings(&h, &t);
        assert_eq!((c.crossings, c.touches), (0, 1));
    }

    #[test]
    fn square_crossed_twice() {
        let sq = Polyline::square(4.0).unwrap();
        assert_eq!(crossings(&sq, &seg((-1.0, 0.5), (2.0, 0.5))).crossings, 2);
        assert_eq!(sq.length(), 4.0);
    }

    #[test]
    fn arc_length_is_exact() {
        let a = Polyline::arc(1.0, PI).unwrap();
        assert_abs_diff_eq!(a.length(), 1.0, epsilon = 1e-12);
        assert_eq!(a.segments().count(), SMOOTH_SEGMENTS);
    }

    #[test]
    fn errors() {
        assert_eq!(
            Polyline::new(vec![Vec2::new(0.0, 0.0)], false),
            Err(NoodleError::TooFewVertices)
        );
        assert_eq!(Polyline::segment(0.0), Err(NoodleError::Degenerate));
        let s = Polyline::segment(1.0).unwrap();
        assert!(matches!(
            poincare_mc(&s, &s, 10, &mut rng(0)),
            Err(NoodleError::TooFewSamples(10))
        ));
        assert!(matches!(
            buffon_noodle_mc(&s, -1.0, 1000, &mut rng(0)),
            Err(NoodleError::BadSpacing)
        ));
    }

    #[test]
    fn poincare_segments_and_square() {
        let s = Polyline::segment(1.0).unwrap();
        let e = poincare_mc(&s, &s, 100_000, &mut rng(1)).unwrap();
        assert!(e.report.passed(), "{:?}", e.report);
        let sq = Polyline::square(1.0).unwrap();
        let e = poincare_mc(&s, &sq, 100_000, &mut rng(2)).unwrap();
        assert!(e.report.passed(), "{:?}", e.report);
    }

    #[test]
    fn scaling_doubles() {
        let s = Polyline::segment(1.0).unwrap();
        let one = poincare_mc(&s, &s, 50_000, &mut rng(3)).unwrap().report;
        let two = poincare_mc(&s, &s.scaled(2.0), 50_000, &mut rng(3))
            .unwrap()
            .report;
        let z =
            (two.value - 2.0 * one.value) / (two.stderr.powi(2) + 4.0 * one.stderr.powi(2)).sqrt();
        assert!(z.abs() < 4.0, "{one:?} {two:?}");
        assert_abs_diff_eq!(two.target.unwrap(), 8.0);
    }

    #[test]
    fn buffon_needle_and_semicircle() {
        let s = Polyline::segment(1.0).unwrap();
        let e = buffon_noodle_mc(&s, 1.0, 200_000, &mut rng(4)).unwrap();
        assert!(e.report.passed(), "{:?}", e.report);
        let a = Polyline::arc(1.0, PI).unwrap();
        let e = buffon_noodle_mc(&a, 1.0, 200_000, &mut rng(5)).unwrap();
        assert!(e.report.passed(), "{:?}", e.report);
        let e = buffon_noodle_mc(&s, 2.0, 1000, &mut rng(6)).unwrap();
        assert_abs_diff_eq!(e.report.target.unwrap(), 1.0 / PI, epsilon = 1e-15);
    }

    fn arb_line() -> impl Strategy<Value = Polyline> {
        prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 2..6)
            .prop_filter_map("degenerate", |v| {
                Polyline::new(v.into_iter().map(|(x, y)| Vec2::new(x, y)).collect(), false).ok()
            })
    }

    proptest! {
        #[test]
        fn symmetric(a in arb_line(), b in arb_line()) {
            prop_assert_eq!(crossings(&a, &b), crossings(&b, &a));
        }

        #[test]
        fn rigid_motion_invariant(a in arb_line(), b in arb_line(), theta in -PI..PI, dx in -5.0..5.0f64, dy in -5.0..5.0f64) {
            let m = |p: &Polyline| p.moved(theta, Vec2::new(dx, dy));
            prop_assert_eq!(crossings(&a, &b).crossings, crossings(&m(&a), &m(&b)).crossings);
        }
    }
}
