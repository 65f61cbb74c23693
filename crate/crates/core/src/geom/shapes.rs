//! Disks and convex polygons with a unit-periodic boundary parameter.
//!
//! Every boundary is traversed counter-clockwise by a parameter `u ∈ [0, 1)`
//! proportional to arc length. For a disk `u = θ / 2π`; for a polygon
//! `u = s / perimeter` with `s` measured from the first vertex.

use super::vec2::{Aabb, Vec2};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Tolerance used for intersection parameters on segments.
const SEG_EPS: f64 = 1e-12;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon is not strictly convex and counter-clockwise at vertex {0}")]
    NotConvex(usize),
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("disk radius must be positive and finite, got {0}")]
    BadRadius(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: Vec2,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Vec2, radius: f64) -> Result<Self, GeomError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GeomError::BadRadius(radius));
        }
        if !(center.x.is_finite() && center.y.is_finite()) {
            return Err(GeomError::NonFinite);
        }
        Ok(Self { center, radius })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec2>", into = "Vec<Vec2>")]
pub struct ConvexPolygon {
    verts: Vec<Vec2>,
    /// cum[i] = arc length from vertex 0 to vertex i; cum[n] = perimeter.
    cum: Vec<f64>,
}

impl TryFrom<Vec<Vec2>> for ConvexPolygon {
    type Error = GeomError;
    fn try_from(v: Vec<Vec2>) -> Result<Self, GeomError> {
        ConvexPolygon::new(v)
    }
}

impl From<ConvexPolygon> for Vec<Vec2> {
    fn from(p: ConvexPolygon) -> Self {
        p.verts
    }
}

impl ConvexPolygon {
    /// Validates a strictly convex counter-clockwise vertex list.
    pub fn new(verts: Vec<Vec2>) -> Result<Self, GeomError> {
        let n = verts.len();
        if n < 3 {
            return Err(GeomError::TooFewVertices(n));
        }
        if verts.iter().any(|v| !(v.x.is_finite() && v.y.is_finite())) {
            return Err(GeomError::NonFinite);
        }
        let scale = verts
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
            .max(1e-300);
        let mut turn = 0.0;
        for i in 0..n {
            let a = verts[i];
            let b = verts[(i + 1) % n];
            let c = verts[(i + 2) % n];
            let cr = (b - a).cross(c - b);
            if cr <= 1e-12 * scale * scale {
                return Err(GeomError::NotConvex((i + 1) % n));
            }
            let e1 = b - a;
            let e2 = c - b;
            turn += e1.cross(e2).atan2(e1.dot(e2));
        }
        // a star polygon turns by a multiple of 2π greater than one
        if (turn - TAU).abs() > 1e-6 {
            return Err(GeomError::NotConvex(0));
        }
        Ok(Self::from_valid(verts))
    }

    fn from_valid(verts: Vec<Vec2>) -> Self {
        let n = verts.len();
        let mut cum = Vec::with_capacity(n + 1);
        let mut s = 0.0;
        cum.push(0.0);
        for i in 0..n {
            s += verts[i].dist(verts[(i + 1) % n]);
            cum.push(s);
        }
        Self { verts, cum }
    }

    /// Regular polygon with `n` vertices and circumradius `r`, centred at the origin.
    pub fn regular(n: usize, r: f64) -> Result<Self, GeomError> {
        let verts = (0..n)
            .map(|k| Vec2::from_angle(TAU * k as f64 / n as f64) * r)
            .collect();
        Self::new(verts)
    }

    /// Axis-aligned square of the given side centred at the origin.
    pub fn centered_square(side: f64) -> Self {
        let h = 0.5 * side;
        Self::from_valid(vec![
            Vec2::new(-h, -h),
            Vec2::new(h, -h),
            Vec2::new(h, h),
            Vec2::new(-h, h),
        ])
    }

    pub fn from_aabb(b: &Aabb) -> Self {
        Self::from_valid(b.corners().to_vec())
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.verts
    }

    pub fn len(&self) -> usize {
        self.verts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verts.is_empty()
    }

    pub fn perimeter(&self) -> f64 {
        self.cum[self.verts.len()]
    }

    pub fn area(&self) -> f64 {
        shoelace(&self.verts)
    }

    pub fn centroid(&self) -> Vec2 {
        let n = self.verts.len();
        let mut c = Vec2::ZERO;
        let mut a2 = 0.0;
        for i in 0..n {
            let p = self.verts[i];
            let q = self.verts[(i + 1) % n];
            let cr = p.cross(q);
            a2 += cr;
            c += (p + q) * cr;
        }
        c * (1.0 / (3.0 * a2))
    }

    pub fn translated(&self, d: Vec2) -> Self {
        Self {
            verts: self.verts.iter().map(|&v| v + d).collect(),
            cum: self.cum.clone(),
        }
    }

    /// Rotation about the origin; rotation preserves convexity and edge lengths.
    pub fn rotated(&self, theta: f64) -> Self {
        Self {
            verts: self.verts.iter().map(|&v| v.rotated(theta)).collect(),
            cum: self.cum.clone(),
        }
    }

    pub fn edge(&self, i: usize) -> (Vec2, Vec2) {
        (self.verts[i], self.verts[(i + 1) % self.verts.len()])
    }

    /// Vertex parameters along the boundary loop.
    pub fn vertex_params(&self) -> impl Iterator<Item = f64> + '_ {
        let p = self.perimeter();
        self.cum[..self.verts.len()].iter().map(move |&s| s / p)
    }

    fn edge_at(&self, s: f64) -> usize {
        let n = self.verts.len();
        match self.cum[..n].binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        }
        .min(n - 1)
    }

    pub fn max_norm(&self) -> f64 {
        self.verts.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest radius of a disk about `c` contained in the polygon.
    pub fn inradius_about(&self, c: Vec2) -> f64 {
        Shape2D::Polygon(self.clone()).depth(c)
    }
}

/// Signed area, positive for counter-clockwise vertex order.
pub fn shoelace(v: &[Vec2]) -> f64 {
    let n = v.len();
    let mut a = 0.0;
    for i in 0..n {
        a += v[i].cross(v[(i + 1) % n]);
    }
    0.5 * a
}

/// Intersection of segment `[p, q]` with the circle; returns segment parameters in `[0,1]`.
fn segment_circle(p: Vec2, q: Vec2, c: Vec2, r: f64) -> ([f64; 2], usize) {
    let d = q - p;
    let f = p - c;
    let a = d.norm_sq();
    let b = 2.0 * f.dot(d);
    let cc = f.norm_sq() - r * r;
    let disc = b * b - 4.0 * a * cc;
    let mut out = [0.0; 2];
    let mut k = 0;
    if disc <= 0.0 || a == 0.0 {
        return (out, 0);
    }
    let sq = disc.sqrt();
    // numerically stable roots
    let qq = -0.5 * (b + b.signum() * sq);
    let mut roots = [qq / a, if qq != 0.0 { cc / qq } else { -b / (2.0 * a) }];
    if roots[0] > roots[1] {
        roots.swap(0, 1);
    }
    for t in roots {
        if (-SEG_EPS..=1.0 + SEG_EPS).contains(&t) {
            out[k] = t.clamp(0.0, 1.0);
            k += 1;
        }
    }
    (out, k)
}

/// Proper or touching intersection of two segments; returns the parameter on the first.
fn segment_segment(p: Vec2, q: Vec2, a: Vec2, b: Vec2) -> Option<f64> {
    let r = q - p;
    let s = b - a;
    let den = r.cross(s);
    if den == 0.0 {
        return None;
    }
    let w = a - p;
    let t = w.cross(s) / den;
    let u = w.cross(r) / den;
    if (-SEG_EPS..=1.0 + SEG_EPS).contains(&t) && (-SEG_EPS..=1.0 + SEG_EPS).contains(&u) {
        Some(t.clamp(0.0, 1.0))
    } else {
        None
    }
}

/// A leaf shape placed in the plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape2D {
    Disk(Disk),
    Polygon(ConvexPolygon),
}

impl Shape2D {
    pub fn disk(center: Vec2, radius: f64) -> Self {
        Shape2D::Disk(Disk { center, radius })
    }

    pub fn translated(&self, d: Vec2) -> Self {
        match self {
            Shape2D::Disk(k) => Shape2D::disk(k.center + d, k.radius),
            Shape2D::Polygon(p) => Shape2D::Polygon(p.translated(d)),
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Shape2D::Disk(k) => PI * k.radius * k.radius,
            Shape2D::Polygon(p) => p.area(),
        }
    }

    pub fn perimeter(&self) -> f64 {
        match self {
            Shape2D::Disk(k) => TAU * k.radius,
            Shape2D::Polygon(p) => p.perimeter(),
        }
    }

    pub fn bbox(&self) -> Aabb {
        match self {
            Shape2D::Disk(k) => {
                let r = Vec2::new(k.radius, k.radius);
                Aabb::new(k.center - r, k.center + r)
            }
            Shape2D::Polygon(p) => {
                let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
                let mut hi = -lo;
                for v in p.vertices() {
                    lo = Vec2::new(lo.x.min(v.x), lo.y.min(v.y));
                    hi = Vec2::new(hi.x.max(v.x), hi.y.max(v.y));
                }
                Aabb::new(lo, hi)
            }
        }
    }

    /// Positive inside, negative outside. For disks the exact signed distance;
    /// for polygons the minimum signed distance to the edge lines, which equals
    /// the distance to the boundary for interior points.
    #[inline]
    pub fn depth(&self, p: Vec2) -> f64 {
        match self {
            Shape2D::Disk(k) => k.radius - (p - k.center).norm(),
            Shape2D::Polygon(poly) => {
                let v = poly.vertices();
                let n = v.len();
                let mut m = f64::INFINITY;
                for i in 0..n {
                    let a = v[i];
                    let b = v[(i + 1) % n];
                    let e = b - a;
                    let d = e.cross(p - a) / e.norm();
                    if d < m {
                        m = d;
                    }
                }
                m
            }
        }
    }

    #[inline]
    pub fn contains(&self, p: Vec2) -> bool {
        self.depth(p) >= 0.0
    }

    /// Interior membership with a safety margin.
    #[inline]
    pub fn contains_strict(&self, p: Vec2, eps: f64) -> bool {
        self.depth(p) > eps
    }

    pub fn point_at(&self, u: f64) -> Vec2 {
        match self {
            Shape2D::Disk(k) => k.center + Vec2::from_angle(TAU * u) * k.radius,
            Shape2D::Polygon(p) => {
                let s = u.rem_euclid(1.0) * p.perimeter();
                let i = p.edge_at(s);
                let (a, b) = p.edge(i);
                let len = p.cum[i + 1] - p.cum[i];
                let t = ((s - p.cum[i]) / len).clamp(0.0, 1.0);
                a + (b - a) * t
            }
        }
    }

    /// Unit tangent in the counter-clockwise direction.
    pub fn tangent_at(&self, u: f64) -> Vec2 {
        match self {
            Shape2D::Disk(_) => Vec2::from_angle(TAU * u).perp(),
            Shape2D::Polygon(p) => {
                let s = u.rem_euclid(1.0) * p.perimeter();
                let (a, b) = p.edge(p.edge_at(s));
                (b - a).normalized()
            }
        }
    }

    /// Parameter of the boundary point nearest to `q`.
    pub fn param_of(&self, q: Vec2) -> f64 {
        match self {
            Shape2D::Disk(k) => ((q - k.center).angle() / TAU).rem_euclid(1.0),
            Shape2D::Polygon(p) => {
                let mut best = (f64::INFINITY, 0.0);
                for i in 0..p.len() {
                    let (a, b) = p.edge(i);
                    let e = b - a;
                    let t = ((q - a).dot(e) / e.norm_sq()).clamp(0.0, 1.0);
                    let d = (a + e * t - q).norm_sq();
                    if d < best.0 {
                        best = (d, (p.cum[i] + t * e.norm()) / p.perimeter());
                    }
                }
                best.1.rem_euclid(1.0)
            }
        }
    }

    /// Parameter of the boundary point minimising `dir · p`.
    pub fn support_param(&self, dir: Vec2) -> f64 {
        match self {
            Shape2D::Disk(_) => ((-dir).angle() / TAU).rem_euclid(1.0),
            Shape2D::Polygon(p) => {
                let (i, _) = p
                    .vertices()
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (i, v.dot(dir)))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .expect("non-empty polygon");
                p.cum[i] / p.perimeter()
            }
        }
    }

    /// Boundary parameters (on `self`) where the two boundaries meet, sorted.
    pub fn crossing_params(&self, other: &Shape2D) -> Vec<f64> {
        let mut out = Vec::new();
        match (self, other) {
            (Shape2D::Disk(a), Shape2D::Disk(b)) => {
                let d = b.center - a.center;
                let dist = d.norm();
                if dist == 0.0 || dist >= a.radius + b.radius || dist <= (a.radius - b.radius).abs()
                {
                    return out;
                }
                let x = (a.radius * a.radius - b.radius * b.radius + dist * dist)
                    / (2.0 * dist * a.radius);
                let alpha = x.clamp(-1.0, 1.0).acos();
                let phi = d.angle();
                out.push(((phi - alpha) / TAU).rem_euclid(1.0));
                out.push(((phi + alpha) / TAU).rem_euclid(1.0));
            }
            (Shape2D::Disk(a), Shape2D::Polygon(p)) => {
                for i in 0..p.len() {
                    let (s, e) = p.edge(i);
                    let (ts, k) = segment_circle(s, e, a.center, a.radius);
                    for &t in &ts[..k] {
                        let q = s + (e - s) * t;
                        out.push(((q - a.center).angle() / TAU).rem_euclid(1.0));
                    }
                }
            }
            (Shape2D::Polygon(p), Shape2D::Disk(b)) => {
                let per = p.perimeter();
                for i in 0..p.len() {
                    let (s, e) = p.edge(i);
                    let len = p.cum[i + 1] - p.cum[i];
                    let (ts, k) = segment_circle(s, e, b.center, b.radius);
                    for &t in &ts[..k] {
                        out.push(((p.cum[i] + t * len) / per).rem_euclid(1.0));
                    }
                }
            }
            (Shape2D::Polygon(p), Shape2D::Polygon(q)) => {
                let per = p.perimeter();
                for i in 0..p.len() {
                    let (s, e) = p.edge(i);
                    let len = p.cum[i + 1] - p.cum[i];
                    for j in 0..q.len() {
                        let (a, b) = q.edge(j);
                        if let Some(t) = segment_segment(s, e, a, b) {
                            out.push(((p.cum[i] + t * len) / per).rem_euclid(1.0));
                        }
                    }
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
        out
    }

    /// Parameter arcs of `∂self` lying strictly inside `other`.
    ///
    /// Arcs are returned as `(start, end)` with `end > start`; an arc that
    /// crosses the seam has `end > 1`.
    pub fn arcs_inside(&self, other: &Shape2D) -> Vec<(f64, f64)> {
        let params = self.crossing_params(other);
        let mut out = Vec::new();
        if params.is_empty() {
            if other.depth(self.point_at(0.0)) > 0.0 {
                out.push((0.0, 1.0));
            }
            return out;
        }
        let k = params.len();
        for i in 0..k {
            let a = params[i];
            let b = if i + 1 < k {
                params[i + 1]
            } else {
                params[0] + 1.0
            };
            if b - a <= 0.0 {
                continue;
            }
            let mid = self.point_at(0.5 * (a + b));
            if other.depth(mid) > 0.0 {
                out.push((a, b));
            }
        }
        out
    }

    /// `∫ x dy` along the boundary from `a` to `b` (`a ≤ b ≤ a + 1`), counter-clockwise.
    pub fn x_dy(&self, a: f64, b: f64) -> f64 {
        match self {
            Shape2D::Disk(k) => {
                let (t0, t1) = (TAU * a, TAU * b);
                let r = k.radius;
                let prim =
                    |t: f64| k.center.x * r * t.sin() + 0.5 * r * r * (t + t.sin() * t.cos());
                prim(t1) - prim(t0)
            }
            Shape2D::Polygon(p) => {
                let per = p.perimeter();
                let mut total = 0.0;
                let mut s = a * per;
                let end = b * per;
                while s < end - 1e-15 {
                    let wrapped = s.rem_euclid(per);
                    let i = p.edge_at(wrapped);
                    let edge_end = s - wrapped + p.cum[i + 1];
                    let stop = end.min(edge_end);
                    let q0 = self.point_at(s / per);
                    let q1 = if stop == edge_end {
                        p.edge(i).1
                    } else {
                        self.point_at(stop / per)
                    };
                    total += 0.5 * (q0.x + q1.x) * (q1.y - q0.y);
                    if stop <= s {
                        break;
                    }
                    s = stop;
                }
                total
            }
        }
    }

    /// Distance from `x` along direction `dir` (unit) to the exit point of the shape.
    /// Zero if the ray does not enter the interior.
    pub fn ray_exit(&self, x: Vec2, dir: Vec2) -> f64 {
        match self {
            Shape2D::Disk(k) => {
                let f = x - k.center;
                let b = f.dot(dir);
                let c = f.norm_sq() - k.radius * k.radius;
                let disc = b * b - c;
                if disc <= 0.0 {
                    return 0.0;
                }
                (-b + disc.sqrt()).max(0.0)
            }
            Shape2D::Polygon(p) => {
                // Cyrus–Beck
                let mut t_in: f64 = 0.0;
                let mut t_out = f64::INFINITY;
                for i in 0..p.len() {
                    let (a, b) = p.edge(i);
                    let e = b - a;
                    let n_in = e.perp();
                    let num = n_in.dot(x - a);
                    let den = n_in.dot(dir);
                    if den == 0.0 {
                        if num < 0.0 {
                            return 0.0;
                        }
                        continue;
                    }
                    let t = -num / den;
                    if den > 0.0 {
                        t_in = t_in.max(t);
                    } else {
                        t_out = t_out.min(t);
                    }
                }
                if t_out > t_in {
                    t_out.max(0.0)
                } else {
                    0.0
                }
            }
        }
    }

    /// Points along the boundary from `a` to `b`, including corners.
    pub fn polyline(&self, a: f64, b: f64, segments_per_turn: usize) -> Vec<Vec2> {
        match self {
            Shape2D::Disk(_) => {
                let n = (((b - a) * segments_per_turn as f64).ceil() as usize).max(1);
                (0..=n)
                    .map(|i| self.point_at(a + (b - a) * i as f64 / n as f64))
                    .collect()
            }
            Shape2D::Polygon(p) => {
                let mut pts = vec![self.point_at(a)];
                for k in 0..2 {
                    for u in p.vertex_params() {
                        let uu = u + k as f64;
                        if uu > a && uu < b {
                            pts.push(self.point_at(uu));
                        }
                    }
                }
                pts.push(self.point_at(b));
                pts
            }
        }
    }

    pub fn as_polygon(&self) -> Option<&ConvexPolygon> {
        match self {
            Shape2D::Polygon(p) => Some(p),
            Shape2D::Disk(_) => None,
        }
    }
}

/// Area of the intersection of two convex polygons (Sutherland–Hodgman).
pub fn convex_intersection_area(a: &[Vec2], b: &[Vec2]) -> f64 {
    let mut poly: Vec<Vec2> = a.to_vec();
    let m = b.len();
    for j in 0..m {
        if poly.is_empty() {
            return 0.0;
        }
        let c0 = b[j];
        let c1 = b[(j + 1) % m];
        let e = c1 - c0;
        let inside = |p: Vec2| e.cross(p - c0) >= 0.0;
        let mut next = Vec::with_capacity(poly.len() + 2);
        let n = poly.len();
        for i in 0..n {
            let p = poly[i];
            let q = poly[(i + 1) % n];
            let ip = inside(p);
            let iq = inside(q);
            if ip {
                next.push(p);
            }
            if ip != iq {
                let d = q - p;
                let den = e.cross(d);
                if den != 0.0 {
                    let t = -e.cross(p - c0) / den;
                    next.push(p + d * t);
                }
            }
        }
        poly = next;
    }
    if poly.len() < 3 {
        0.0
    } else {
        shoelace(&poly).abs()
    }
}

/// Area of the lens `B(0,r) ∩ B(x,r)` with `‖x‖ = d`.
pub fn lens_area(d: f64, r: f64) -> f64 {
    let d = d.abs();
    if d >= 2.0 * r {
        return 0.0;
    }
    2.0 * r * r * (d / (2.0 * r)).acos() - 0.5 * d * (4.0 * r * r - d * d).max(0.0).sqrt()
}

/// Convex hull (counter-clockwise, no collinear points).
pub fn convex_hull(mut pts: Vec<Vec2>) -> Vec<Vec2> {
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Vec2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2
            && (lower[lower.len() - 1] - lower[lower.len() - 2]).cross(p - lower[lower.len() - 1])
                <= 0.0
        {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Vec2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2
            && (upper[upper.len() - 1] - upper[upper.len() - 2]).cross(p - upper[upper.len() - 1])
                <= 0.0
        {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Area of the difference body `P ⊕ (−P)`.
pub fn difference_body_area(p: &ConvexPolygon) -> f64 {
    let v = p.vertices();
    let mut pts = Vec::with_capacity(v.len() * v.len());
    for &a in v {
        for &b in v {
            pts.push(a - b);
        }
    }
    shoelace(&convex_hull(pts)).abs()
}
