//! Leaf-shape distributions and the grain quantities every formula consumes:
//! mean leaf measure `λ`, union measure `λ_x`, covariogram, mean boundary
//! mass and the radius bound `R`.

use crate::geom::{convex_intersection_area, lens_area, ConvexPolygon, GeomError, Shape2D, Vec2};
use crate::quad;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Upper tail mass removed when an unbounded law is truncated for simulation.
pub const TRUNCATION_TAIL: f64 = 1e-9;

/// Maximum number of components of a 1D leaf.
pub const MAX_COMPONENTS: usize = 8;

/// Number of rotations averaged for rotated-polygon `λ_x`.
pub const ROTATION_GRID: usize = 256;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum GrainError {
    #[error("invalid length law: {0}")]
    BadLength(String),
    #[error("multi-component leaf: {0}")]
    BadComponents(String),
    #[error(transparent)]
    Geometry(#[from] GeomError),
}

/// Law of a nonnegative length (1D leaf length or disk radius).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LengthLaw {
    Fixed { value: f64 },
    Uniform { lo: f64, hi: f64 },
    Exponential { mean: f64 },
}

impl LengthLaw {
    pub fn validate(&self) -> Result<(), GrainError> {
        let ok = match *self {
            LengthLaw::Fixed { value } => value >= 0.0 && value.is_finite(),
            LengthLaw::Uniform { lo, hi } => lo >= 0.0 && hi > lo && hi.is_finite(),
            LengthLaw::Exponential { mean } => mean > 0.0 && mean.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(GrainError::BadLength(format!("{self:?}")))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            LengthLaw::Fixed { value } => value,
            LengthLaw::Uniform { lo, hi } => 0.5 * (lo + hi),
            LengthLaw::Exponential { mean } => mean,
        }
    }

    pub fn second_moment(&self) -> f64 {
        match *self {
            LengthLaw::Fixed { value } => value * value,
            LengthLaw::Uniform { lo, hi } => (lo * lo + lo * hi + hi * hi) / 3.0,
            LengthLaw::Exponential { mean } => 2.0 * mean * mean,
        }
    }

    /// `F(x) = P[H ≤ x]`.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            LengthLaw::Fixed { value } => f64::from(u8::from(x >= value)),
            LengthLaw::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            LengthLaw::Exponential { mean } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x / mean).exp_m1()
                }
            }
        }
    }

    /// `F̄(x) = 1 − F(x)`.
    pub fn sf(&self, x: f64) -> f64 {
        match *self {
            LengthLaw::Exponential { mean } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-x / mean).exp()
                }
            }
            _ => 1.0 - self.cdf(x),
        }
    }

    /// Density, if the law has one.
    pub fn density(&self, x: f64) -> Option<f64> {
        match *self {
            LengthLaw::Fixed { .. } => None,
            LengthLaw::Uniform { lo, hi } => Some(if x > lo && x < hi {
                1.0 / (hi - lo)
            } else {
                0.0
            }),
            LengthLaw::Exponential { mean } => Some(if x >= 0.0 {
                (-x / mean).exp() / mean
            } else {
                0.0
            }),
        }
    }

    /// Atoms `(location, mass)`.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match *self {
            LengthLaw::Fixed { value } => vec![(value, 1.0)],
            _ => Vec::new(),
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        match *self {
            LengthLaw::Fixed { value } => value,
            LengthLaw::Uniform { lo, hi } => lo + p.clamp(0.0, 1.0) * (hi - lo),
            LengthLaw::Exponential { mean } => -mean * (-p.clamp(0.0, 1.0)).ln_1p(),
        }
    }

    /// Supremum of the support (possibly infinite).
    pub fn sup(&self) -> f64 {
        match *self {
            LengthLaw::Fixed { value } => value,
            LengthLaw::Uniform { hi, .. } => hi,
            LengthLaw::Exponential { .. } => f64::INFINITY,
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.sup().is_finite()
    }

    /// Largest value the sampler can return.
    pub fn sampling_sup(&self) -> f64 {
        if self.is_bounded() {
            self.sup()
        } else {
            self.quantile(1.0 - TRUNCATION_TAIL)
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            LengthLaw::Fixed { value } => value,
            LengthLaw::Uniform { lo, hi } => rng.random_range(lo..hi),
            LengthLaw::Exponential { .. } => {
                let u: f64 = rng.random();
                self.quantile(u * (1.0 - TRUNCATION_TAIL))
            }
        }
    }

    /// `K(h) = E[(H − h)⁺] = ∫_h^∞ F̄`.
    pub fn excess(&self, h: f64) -> f64 {
        match *self {
            LengthLaw::Fixed { value } => (value - h).max(0.0),
            LengthLaw::Uniform { lo, hi } => {
                if h <= lo {
                    (lo - h) + 0.5 * (hi - lo)
                } else if h < hi {
                    (hi - h) * (hi - h) / (2.0 * (hi - lo))
                } else {
                    0.0
                }
            }
            LengthLaw::Exponential { mean } => {
                if h <= 0.0 {
                    mean - h
                } else {
                    mean * (-h / mean).exp()
                }
            }
        }
    }

    /// `E[min(u, H)] = ∫_0^u F̄` for `u ≥ 0`.
    pub fn mean_min(&self, u: f64) -> f64 {
        self.mean() - self.excess(u.max(0.0))
    }

    /// `E[g(H)]` by exact evaluation (atoms) or adaptive quadrature.
    pub fn expect<G: FnMut(f64) -> f64>(&self, mut g: G) -> f64 {
        match *self {
            LengthLaw::Fixed { value } => g(value),
            LengthLaw::Uniform { lo, hi } => quad::integrate(&mut g, lo, hi, 1e-13) / (hi - lo),
            LengthLaw::Exponential { mean } => {
                quad::integrate_to_infinity(|h| g(h) * (-h / mean).exp() / mean, 0.0, 1e-13)
            }
        }
    }

    /// Points where expectations over this law have kinks.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            LengthLaw::Fixed { value } => vec![value],
            LengthLaw::Uniform { lo, hi } => vec![lo, hi],
            LengthLaw::Exponential { .. } => Vec::new(),
        }
    }

    pub fn is_degenerate_zero(&self) -> bool {
        matches!(*self, LengthLaw::Fixed { value } if value == 0.0)
    }
}

// ---------------------------------------------------------------------------
// One dimension

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component1D {
    pub offset: f64,
    pub length: LengthLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GrainLaw1D {
    FixedLength { length: f64 },
    LengthLaw { length: LengthLaw },
    MultiComponent { components: Vec<Component1D> },
}

/// A sampled 1D leaf anchored at the origin: up to eight `(start, length)` components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shape1D {
    n: u8,
    comps: [(f64, f64); MAX_COMPONENTS],
}

impl Shape1D {
    pub fn interval(len: f64) -> Self {
        let mut comps = [(0.0, 0.0); MAX_COMPONENTS];
        comps[0] = (0.0, len);
        Self { n: 1, comps }
    }

    pub fn from_components(c: &[(f64, f64)]) -> Self {
        assert!(c.len() <= MAX_COMPONENTS && !c.is_empty());
        let mut comps = [(0.0, 0.0); MAX_COMPONENTS];
        comps[..c.len()].copy_from_slice(c);
        Self {
            n: c.len() as u8,
            comps,
        }
    }

    pub fn components(&self) -> &[(f64, f64)] {
        &self.comps[..self.n as usize]
    }

    pub fn total_length(&self) -> f64 {
        self.components().iter().map(|c| c.1).sum()
    }

    pub fn extent(&self) -> (f64, f64) {
        let c = self.components();
        (c[0].0, c[c.len() - 1].0 + c[c.len() - 1].1)
    }
}

impl GrainLaw1D {
    pub fn fixed_length(length: f64) -> Self {
        GrainLaw1D::FixedLength { length }
    }

    /// Component list in canonical form.
    pub fn components(&self) -> Vec<Component1D> {
        match self {
            GrainLaw1D::FixedLength { length } => vec![Component1D {
                offset: 0.0,
                length: LengthLaw::Fixed { value: *length },
            }],
            GrainLaw1D::LengthLaw { length } => vec![Component1D {
                offset: 0.0,
                length: length.clone(),
            }],
            GrainLaw1D::MultiComponent { components } => components.clone(),
        }
    }

    /// The length law when the leaf is a single interval.
    pub fn single_length(&self) -> Option<LengthLaw> {
        match self {
            GrainLaw1D::FixedLength { length } => Some(LengthLaw::Fixed { value: *length }),
            GrainLaw1D::LengthLaw { length } => Some(length.clone()),
            GrainLaw1D::MultiComponent { components }
                if components.len() == 1 && components[0].offset == 0.0 =>
            {
                Some(components[0].length.clone())
            }
            GrainLaw1D::MultiComponent { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<(), GrainError> {
        let comps = self.components();
        if comps.is_empty() || comps.len() > MAX_COMPONENTS {
            return Err(GrainError::BadComponents(format!(
                "need 1..={MAX_COMPONENTS} components, got {}",
                comps.len()
            )));
        }
        for c in &comps {
            c.length.validate()?;
            if !c.offset.is_finite() {
                return Err(GrainError::BadComponents("non-finite offset".into()));
            }
        }
        if comps[0].offset != 0.0 {
            return Err(GrainError::BadComponents(
                "first component must start at 0".into(),
            ));
        }
        for w in comps.windows(2) {
            let end = w[0].offset + w[0].length.sup();
            if !(w[1].offset > end) {
                return Err(GrainError::BadComponents(
                    "components must be ordered and disjoint".into(),
                ));
            }
        }
        if self.single_length().is_some() && comps[0].length.is_degenerate_zero() {
            return Err(GrainError::BadLength(
                "single-interval leaves need positive length".into(),
            ));
        }
        if !(self.lambda() > 0.0) {
            return Err(GrainError::BadComponents(
                "mean leaf length must be positive".into(),
            ));
        }
        Ok(())
    }

    /// `λ = E[H₁(S)]`.
    pub fn lambda(&self) -> f64 {
        self.components().iter().map(|c| c.length.mean()).sum()
    }

    /// `E[H₀(∂S)]`: two endpoints per component, one for zero-length components.
    pub fn boundary_mass_mean(&self) -> f64 {
        self.components()
            .iter()
            .map(|c| {
                if c.length.is_degenerate_zero() {
                    1.0
                } else {
                    2.0
                }
            })
            .sum()
    }

    /// `R = sup{|x| : x ∈ S}` of the law as sampled.
    pub fn radius_bound(&self) -> f64 {
        let comps = self.components();
        let last = &comps[comps.len() - 1];
        let r = last.offset + last.length.sampling_sup();
        if !last.length.is_bounded() {
            log::warn!("unbounded leaf length truncated at its (1 - {TRUNCATION_TAIL:e}) quantile: R = {r}");
        }
        r
    }

    pub fn is_bounded(&self) -> bool {
        self.components().iter().all(|c| c.length.is_bounded())
    }

    /// True when every leaf is a single interval of positive length a.s.
    pub fn is_positive_interval(&self) -> bool {
        match self.single_length() {
            Some(l) => l.cdf(0.0) == 0.0,
            None => false,
        }
    }

    pub fn all_components_zero(&self) -> bool {
        self.components()
            .iter()
            .all(|c| c.length.is_degenerate_zero())
    }

    pub fn sample_shape<R: Rng + ?Sized>(&self, rng: &mut R) -> Shape1D {
        match self {
            GrainLaw1D::FixedLength { length } => Shape1D::interval(*length),
            GrainLaw1D::LengthLaw { length } => Shape1D::interval(length.sample(rng)),
            GrainLaw1D::MultiComponent { components } => {
                let mut buf = [(0.0, 0.0); MAX_COMPONENTS];
                for (slot, c) in buf.iter_mut().zip(components) {
                    *slot = (c.offset, c.length.sample(rng));
                }
                Shape1D::from_components(&buf[..components.len()])
            }
        }
    }

    /// Expected overlap `E|S ∩ (S + x)|`.
    pub fn covariogram(&self, x: f64) -> f64 {
        let x = x.abs();
        let comps = self.components();
        let mut total = 0.0;
        for (i, ci) in comps.iter().enumerate() {
            for (j, cj) in comps.iter().enumerate() {
                if i == j {
                    total += ci.length.excess(x);
                    continue;
                }
                // overlap of [o_i, o_i + H_i] with [o_j + x, o_j + x + H_j]
                let shift = cj.offset + x - ci.offset;
                total += ci.length.expect(|hi| {
                    cj.length.expect(|hj| {
                        let lo = shift.max(0.0);
                        let up = (shift + hj).min(hi);
                        (up - lo).max(0.0)
                    })
                });
            }
        }
        total
    }

    /// `λ_x = E|S ∪ (S + x)|`.
    pub fn lambda_x(&self, x: f64) -> f64 {
        match self.single_length() {
            Some(l) => l.mean() + l.mean_min(x.abs()),
            None => 2.0 * self.lambda() - self.covariogram(x),
        }
    }
}

// ---------------------------------------------------------------------------
// Two dimensions

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GrainLaw2D {
    Disk {
        radius: LengthLaw,
    },
    ConvexPolygon {
        vertices: Vec<Vec2>,
        #[serde(default)]
        random_rotation: bool,
    },
}

/// Validated 2D law with its polygon recentred at the centroid.
#[derive(Debug, Clone, PartialEq)]
pub struct Law2D {
    spec: GrainLaw2D,
    polygon: Option<ConvexPolygon>,
}

impl GrainLaw2D {
    pub fn unit_disk() -> Self {
        GrainLaw2D::Disk {
            radius: LengthLaw::Fixed { value: 1.0 },
        }
    }

    pub fn square(side: f64, random_rotation: bool) -> Self {
        GrainLaw2D::ConvexPolygon {
            vertices: ConvexPolygon::centered_square(side).vertices().to_vec(),
            random_rotation,
        }
    }

    pub fn build(&self) -> Result<Law2D, GrainError> {
        match self {
            GrainLaw2D::Disk { radius } => {
                radius.validate()?;
                if radius.mean() <= 0.0 {
                    return Err(GrainError::BadLength("disk radius must be positive".into()));
                }
                Ok(Law2D {
                    spec: self.clone(),
                    polygon: None,
                })
            }
            GrainLaw2D::ConvexPolygon { vertices, .. } => {
                let p = ConvexPolygon::new(vertices.clone())?;
                let c = p.centroid();
                Ok(Law2D {
                    spec: self.clone(),
                    polygon: Some(p.translated(-c)),
                })
            }
        }
    }
}

impl Law2D {
    pub fn spec(&self) -> &GrainLaw2D {
        &self.spec
    }

    /// Polygon about its centroid, for polygon laws.
    pub fn polygon(&self) -> Option<&ConvexPolygon> {
        self.polygon.as_ref()
    }

    pub fn radius_law(&self) -> Option<&LengthLaw> {
        match &self.spec {
            GrainLaw2D::Disk { radius } => Some(radius),
            GrainLaw2D::ConvexPolygon { .. } => None,
        }
    }

    pub fn is_disk(&self) -> bool {
        self.polygon.is_none()
    }

    pub fn random_rotation(&self) -> bool {
        matches!(
            self.spec,
            GrainLaw2D::ConvexPolygon {
                random_rotation: true,
                ..
            }
        )
    }

    pub fn rotation_invariant(&self) -> bool {
        self.is_disk() || self.random_rotation()
    }

    /// Every leaf has the same area, which implies non-containment.
    pub fn non_containment(&self) -> bool {
        match self.radius_law() {
            Some(LengthLaw::Fixed { .. }) => true,
            Some(_) => false,
            None => true,
        }
    }

    /// Convex disks and polygons have Jordan, piecewise C¹ boundaries.
    pub fn jordan(&self) -> bool {
        true
    }

    pub fn is_deterministic(&self) -> bool {
        match &self.spec {
            GrainLaw2D::Disk { radius } => matches!(radius, LengthLaw::Fixed { .. }),
            GrainLaw2D::ConvexPolygon {
                random_rotation, ..
            } => !random_rotation,
        }
    }

    pub fn lambda(&self) -> f64 {
        match (&self.polygon, self.radius_law()) {
            (Some(p), _) => p.area(),
            (None, Some(r)) => PI * r.second_moment(),
            _ => unreachable!(),
        }
    }

    /// `E[H₁(∂S)]`.
    pub fn boundary_mass_mean(&self) -> f64 {
        match (&self.polygon, self.radius_law()) {
            (Some(p), _) => p.perimeter(),
            (None, Some(r)) => TAU * r.mean(),
            _ => unreachable!(),
        }
    }

    /// `E[H₁(∂S)²]`.
    pub fn boundary_mass_second_moment(&self) -> f64 {
        match (&self.polygon, self.radius_law()) {
            (Some(p), _) => p.perimeter().powi(2),
            (None, Some(r)) => TAU * TAU * r.second_moment(),
            _ => unreachable!(),
        }
    }

    pub fn radius_bound(&self) -> f64 {
        match (&self.polygon, self.radius_law()) {
            (Some(p), _) => p.max_norm(),
            (None, Some(r)) => {
                if !r.is_bounded() {
                    log::warn!(
                        "unbounded radius law truncated at its (1 - {TRUNCATION_TAIL:e}) quantile"
                    );
                }
                r.sampling_sup()
            }
            _ => unreachable!(),
        }
    }

    /// Smallest inradius any sampled leaf can have.
    pub fn min_inradius(&self) -> f64 {
        match (&self.polygon, self.radius_law()) {
            (Some(p), _) => p.inradius_about(Vec2::ZERO),
            (None, Some(r)) => match r {
                LengthLaw::Fixed { value } => *value,
                LengthLaw::Uniform { lo, .. } => *lo,
                LengthLaw::Exponential { .. } => 0.0,
            },
            _ => unreachable!(),
        }
    }

    pub fn sample_shape<R: Rng + ?Sized>(&self, rng: &mut R) -> Shape2D {
        match (&self.polygon, self.radius_law()) {
            (Some(p), _) => {
                if self.random_rotation() {
                    // θ ~ U(−π, π]
                    let theta = PI - TAU * rng.random::<f64>();
                    Shape2D::Polygon(p.rotated(theta))
                } else {
                    Shape2D::Polygon(p.clone())
                }
            }
            (None, Some(r)) => Shape2D::disk(Vec2::ZERO, r.sample(rng)),
            _ => unreachable!(),
        }
    }

    /// `E|S ∩ (S + x)|`.
    pub fn covariogram(&self, x: Vec2) -> f64 {
        match (&self.polygon, self.radius_law()) {
            (None, Some(r)) => {
                let d = x.norm();
                r.expect(|rad| lens_area(d, rad))
            }
            (Some(p), _) => {
                if self.random_rotation() {
                    let n = ROTATION_GRID;
                    let mut acc = 0.0;
                    for k in 0..n {
                        let theta = -PI + TAU * (k as f64 + 0.5) / n as f64;
                        // |ρS ∩ (ρS + x)| = |S ∩ (S + ρ⁻¹x)|
                        let y = x.rotated(-theta);
                        acc += convex_intersection_area(p.vertices(), p.translated(y).vertices());
                    }
                    acc / n as f64
                } else {
                    convex_intersection_area(p.vertices(), p.translated(x).vertices())
                }
            }
            _ => unreachable!(),
        }
    }

    /// `λ_x = E|S ∪ (S + x)|`.
    pub fn lambda_x(&self, x: Vec2) -> f64 {
        match (&self.polygon, self.radius_law()) {
            (None, Some(r)) => {
                let d = x.norm();
                r.expect(|rad| 2.0 * PI * rad * rad - lens_area(d, rad))
            }
            _ => 2.0 * self.lambda() - self.covariogram(x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Purpose};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn one_d_examples() {
        let law = GrainLaw1D::fixed_length(1.0);
        law.validate().unwrap();
        assert_abs_diff_eq!(law.lambda_x(0.5), 1.5);
        assert_abs_diff_eq!(law.boundary_mass_mean(), 2.0);
        let mut rng = substream(1, 0, Purpose::Shapes);
        assert_eq!(law.sample_shape(&mut rng).components(), &[(0.0, 1.0)]);
    }

    #[test]
    fn two_component_leaf() {
        let law = GrainLaw1D::MultiComponent {
            components: vec![
                Component1D {
                    offset: 0.0,
                    length: LengthLaw::Fixed { value: 0.5 },
                },
                Component1D {
                    offset: 1.0,
                    length: LengthLaw::Fixed { value: 1.5 },
                },
            ],
        };
        law.validate().unwrap();
        assert_abs_diff_eq!(law.boundary_mass_mean(), 4.0);
        assert_abs_diff_eq!(law.lambda(), 2.0);
        assert_abs_diff_eq!(law.radius_bound(), 2.5);
        // shift by 1: [0,.5]∪[1,2.5] against [1,1.5]∪[2,3.5]
        assert_abs_diff_eq!(law.covariogram(1.0), 0.5 + 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(law.lambda_x(1.0), 4.0 - 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(law.lambda_x(10.0), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_length_component_counts_once() {
        let law = GrainLaw1D::MultiComponent {
            components: vec![
                Component1D {
                    offset: 0.0,
                    length: LengthLaw::Fixed { value: 1.0 },
                },
                Component1D {
                    offset: 2.0,
                    length: LengthLaw::Fixed { value: 0.0 },
                },
            ],
        };
        law.validate().unwrap();
        assert_abs_diff_eq!(law.boundary_mass_mean(), 3.0);
    }

    #[test]
    fn rejects_overlapping_components() {
        let law = GrainLaw1D::MultiComponent {
            components: vec![
                Component1D {
                    offset: 0.0,
                    length: LengthLaw::Fixed { value: 1.0 },
                },
                Component1D {
                    offset: 0.5,
                    length: LengthLaw::Fixed { value: 1.0 },
                },
            ],
        };
        assert!(law.validate().is_err());
        assert!(GrainLaw1D::fixed_length(0.0).validate().is_err());
        assert!(GrainLaw1D::fixed_length(-1.0).validate().is_err());
    }

    #[test]
    fn two_d_examples() {
        let disk = GrainLaw2D::unit_disk().build().unwrap();
        assert_abs_diff_eq!(disk.lambda_x(Vec2::ZERO), PI, epsilon = 1e-12);
        let expected = 2.0 * PI - (2.0 * PI / 3.0 - 3f64.sqrt() / 2.0);
        assert_abs_diff_eq!(
            disk.lambda_x(Vec2::new(0.0, 1.0)),
            expected,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(disk.boundary_mass_mean(), TAU, epsilon = 1e-12);
        let mut rng = substream(1, 0, Purpose::Shapes);
        assert_eq!(disk.sample_shape(&mut rng), Shape2D::disk(Vec2::ZERO, 1.0));
    }

    #[test]
    fn union_area_matches_grid_count() {
        // independent check of the lens formula by counting grid points in the union
        let disk = GrainLaw2D::unit_disk().build().unwrap();
        let shift = Vec2::new(1.0, 0.0);
        let n = 1200;
        let (x0, x1, y0, y1) = (-1.0, 2.0, -1.0, 1.0);
        let hx = (x1 - x0) / n as f64;
        let hy = (y1 - y0) / n as f64;
        let mut count = 0usize;
        for i in 0..n {
            for j in 0..n {
                let p = Vec2::new(x0 + (i as f64 + 0.5) * hx, y0 + (j as f64 + 0.5) * hy);
                if p.norm() <= 1.0 || (p - shift).norm() <= 1.0 {
                    count += 1;
                }
            }
        }
        let area = count as f64 * hx * hy;
        assert_abs_diff_eq!(disk.lambda_x(shift), area, epsilon = 5e-3);
    }

    #[test]
    fn rotated_square_sampling_is_reproducible() {
        let law = GrainLaw2D::square(1.0, true).build().unwrap();
        assert!(law.rotation_invariant());
        let a = law.sample_shape(&mut substream(9, 2, Purpose::Shapes));
        let b = law.sample_shape(&mut substream(9, 2, Purpose::Shapes));
        assert_eq!(a, b);
        assert_abs_diff_eq!(a.area(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a.perimeter(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn polygon_recentred_at_centroid() {
        let law = GrainLaw2D::ConvexPolygon {
            vertices: vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(3.0, 0.0),
                Vec2::new(0.0, 3.0),
            ],
            random_rotation: false,
        }
        .build()
        .unwrap();
        let c = law.polygon().unwrap().centroid();
        assert_abs_diff_eq!(c.norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn exponential_truncation() {
        let l = LengthLaw::Exponential { mean: 1.0 };
        assert_abs_diff_eq!(l.sampling_sup(), -(1e-9f64).ln(), epsilon = 1e-6);
        assert_abs_diff_eq!(l.excess(0.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l.expect(|h| h * h), 2.0, epsilon = 1e-9);
    }

    proptest! {
        #[test]
        fn lambda_x_bounds_1d(x in -5.0..5.0f64, lo in 0.1..1.0f64, w in 0.1..2.0f64) {
            for law in [
                GrainLaw1D::fixed_length(lo),
                GrainLaw1D::LengthLaw { length: LengthLaw::Uniform { lo, hi: lo + w } },
                GrainLaw1D::LengthLaw { length: LengthLaw::Exponential { mean: lo } },
            ] {
                let lam = law.lambda();
                let lx = law.lambda_x(x);
                prop_assert!(lx >= lam - 1e-12 && lx <= 2.0 * lam + 1e-12);
                prop_assert!((lx - law.lambda_x(-x)).abs() < 1e-12);
                prop_assert!((lx + law.covariogram(x) - 2.0 * lam).abs() < 1e-9);
                prop_assert!(law.lambda_x(x.abs() + 0.1) >= lx - 1e-12);
            }
        }

        #[test]
        fn lambda_x_bounds_2d(x in -3.0..3.0f64, y in -3.0..3.0f64) {
            let v = Vec2::new(x, y);
            for spec in [GrainLaw2D::unit_disk(), GrainLaw2D::square(1.0, false),
                         GrainLaw2D::Disk { radius: LengthLaw::Uniform { lo: 0.5, hi: 1.0 } }] {
                let law = spec.build().unwrap();
                let lam = law.lambda();
                let lx = law.lambda_x(v);
                prop_assert!(lx >= lam - 1e-9 && lx <= 2.0 * lam + 1e-9);
                prop_assert!((lx - law.lambda_x(-v)).abs() < 1e-9);
                prop_assert!((lx + law.covariogram(v) - 2.0 * lam).abs() < 1e-9);
                if v.norm() > 2.0 * law.radius_bound() {
                    prop_assert!((lx - 2.0 * lam).abs() < 1e-12);
                }
            }
        }
    }
}
