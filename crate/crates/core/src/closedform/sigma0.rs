use super::d2::Lambda2;
use super::{ClosedFormError, NESTED_TOL};
use crate::dlrm::MarkKind;
use crate::geom::{Shape2D, Vec2};
use crate::grains::{GrainLaw1D, Law2D};
use crate::quad;
use std::f64::consts::{PI, TAU};

/// Leaf law in either dimension.
#[derive(Debug, Clone, Copy)]
pub enum Leaf<'a> {
    D1(&'a GrainLaw1D),
    D2(&'a Law2D),
}

impl Leaf<'_> {
    pub fn dim(&self) -> usize {
        match self {
            Leaf::D1(_) => 1,
            Leaf::D2(_) => 2,
        }
    }

    fn lambda(&self) -> f64 {
        match self {
            Leaf::D1(l) => l.lambda(),
            Leaf::D2(l) => l.lambda(),
        }
    }
}

/// `σ₀² = v₄ + v₅ − v₆` for a dead leaves random measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sigma0 {
    pub v4: f64,
    pub v5: f64,
    pub v6: f64,
    pub value: f64,
}

fn check(leaf: Leaf<'_>, mark: &MarkKind) -> Result<(), ClosedFormError> {
    mark.validate(leaf.dim())
        .map_err(|e| ClosedFormError::Incompatible(e.to_string()))?;
    if let (MarkKind::CornerCounting, Leaf::D2(l)) = (mark, leaf) {
        if l.polygon().is_none() {
            return Err(ClosedFormError::Incompatible(
                "corner marks need polygon leaves".into(),
            ));
        }
    }
    Ok(())
}

/// `E|M|`.
fn mean_mass(leaf: Leaf<'_>, mark: &MarkKind) -> f64 {
    match mark {
        MarkKind::BoundarySurface => match leaf {
            Leaf::D1(l) => l.boundary_mass_mean(),
            Leaf::D2(l) => l.boundary_mass_mean(),
        },
        MarkKind::CornerCounting => match leaf {
            Leaf::D2(l) => l.polygon().map_or(0.0, |p| p.len() as f64),
            Leaf::D1(_) => 0.0,
        },
        MarkKind::Colour { .. } | MarkKind::Density { .. } => {
            let levels = mark.levels().expect("lebesgue mark");
            levels.iter().map(|(c, p)| c * p).sum::<f64>() * leaf.lambda()
        }
        MarkKind::Seeds { q, offsets } => q * offsets.len() as f64,
    }
}

/// Intensity `α = E|M|/λ` of the stationary random measure, where `λ` is the
/// mean leaf measure of the arrival law (seed sets count as empty leaves).
pub fn mark_intensity(leaf: Leaf<'_>, mark: &MarkKind) -> Result<f64, ClosedFormError> {
    check(leaf, mark)?;
    Ok(mean_mass(leaf, mark) / (mark.leaf_probability() * leaf.lambda()))
}

/// `V = ∫ (2λ/λ_x − 1) dx`. Invariant under thinning the leaves.
pub fn plane_deficit_integral(leaf: Leaf<'_>) -> f64 {
    match leaf {
        Leaf::D1(l) => {
            let lam = l.lambda();
            line_integral(l, |z| 2.0 * lam / l.lambda_x(z) - 1.0)
        }
        Leaf::D2(l) => Lambda2::new(l).deficit_integral(),
    }
}

/// `∫_ℝ h` for an even integrand vanishing beyond the leaf extent.
fn line_integral<F: Fn(f64) -> f64>(l: &GrainLaw1D, h: F) -> f64 {
    let breaks = kinks_1d(l);
    if l.is_bounded() {
        let top = breaks.iter().copied().fold(0.0, f64::max);
        2.0 * quad::integrate_with_breaks(h, 0.0, top, &breaks, 1e-12)
    } else {
        2.0 * quad::integrate_to_infinity(h, 0.0, 1e-12)
    }
}

/// Displacements at which `x ↦ λ_x` may have kinks.
fn kinks_1d(l: &GrainLaw1D) -> Vec<f64> {
    let mut out = vec![0.0];
    match l.single_length() {
        Some(len) => out.extend(len.breakpoints()),
        None => {
            let mut ends = Vec::new();
            for c in l.components() {
                ends.push(c.offset);
                ends.extend(c.length.breakpoints().iter().map(|b| c.offset + b));
            }
            for a in &ends {
                for b in &ends {
                    out.push((a - b).abs());
                }
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Averages `f` over the random leaf. Multi-component laws need fixed lengths.
fn expect_shape_1d<F: FnMut(&[(f64, f64)]) -> f64>(
    l: &GrainLaw1D,
    mut f: F,
) -> Result<f64, ClosedFormError> {
    if let Some(len) = l.single_length() {
        return Ok(len.expect(|h| f(&[(0.0, h)])));
    }
    let comps = l.components();
    let mut fixed = Vec::with_capacity(comps.len());
    for c in comps {
        match c.length {
            crate::grains::LengthLaw::Fixed { value } => fixed.push((c.offset, value)),
            _ => {
                return Err(ClosedFormError::Incompatible(
                    "variance formulas for multi-component leaves need fixed component lengths"
                        .into(),
                ))
            }
        }
    }
    Ok(f(&fixed))
}

fn endpoints_1d(comps: &[(f64, f64)]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * comps.len());
    for &(s, len) in comps {
        out.push(s);
        if len > 0.0 {
            out.push(s + len);
        }
    }
    out
}

fn expect_shape_2d<F: FnMut(&Shape2D) -> f64>(l: &Law2D, mut f: F) -> f64 {
    match (l.polygon(), l.radius_law()) {
        // a rotated polygon contributes the same as its base shape because λ_x is isotropic
        (Some(p), _) => f(&Shape2D::Polygon(p.clone())),
        (None, Some(r)) => r.expect(|rho| f(&Shape2D::disk(Vec2::ZERO, rho))),
        _ => unreachable!(),
    }
}

fn vertex_params(s: &Shape2D) -> Vec<f64> {
    s.as_polygon()
        .map(|p| p.vertex_params().collect())
        .unwrap_or_default()
}

/// `∫_{∂S}∫_{∂S} 1/λ_{y−x}`.
fn boundary_pair_2d(lx: &Lambda2, s: &Shape2D) -> f64 {
    let per = s.perimeter();
    let vp = vertex_params(s);
    let mut breaks_v = vp.clone();
    let outer = |u: f64| {
        let x = s.point_at(u);
        breaks_v.clear();
        breaks_v.extend(vp.iter().copied());
        breaks_v.push(u);
        quad::integrate_with_breaks(
            |v| 1.0 / lx.at(s.point_at(v) - x),
            0.0,
            1.0,
            &breaks_v,
            NESTED_TOL,
        )
    };
    let mut outer = outer;
    per * per * quad::integrate_with_breaks(&mut outer, 0.0, 1.0, &vp, 1e-10)
}

/// `∫_S 2/λ_{y−x} dy` for `x ∈ S`, over directions in `[a, b]`.
fn area_weight_2d(lx: &Lambda2, s: &Shape2D, x: Vec2, a: f64, b: f64) -> f64 {
    let mut breaks = Vec::new();
    if let Some(p) = s.as_polygon() {
        for v in p.vertices() {
            let d = *v - x;
            if d.norm() > 1e-12 {
                let th = a + (d.angle() - a).rem_euclid(TAU);
                breaks.push(th);
            }
        }
    }
    quad::integrate_with_breaks(
        |th| {
            let dir = Vec2::from_angle(th);
            lx.ray_weight(dir, s.ray_exit(x, dir))
        },
        a,
        b,
        &breaks,
        NESTED_TOL,
    )
}

/// `∫_{∂S} (∫_S 2/λ_{y−x} dy) H₁(dx)`.
fn boundary_weight_2d(lx: &Lambda2, s: &Shape2D) -> f64 {
    let vp = vertex_params(s);
    s.perimeter()
        * quad::integrate_with_breaks(
            |u| {
                let x = s.point_at(u);
                let a = s.tangent_at(u).angle();
                area_weight_2d(lx, s, x, a, a + PI)
            },
            0.0,
            1.0,
            &vp,
            1e-10,
        )
}

pub fn sigma0_sq(leaf: Leaf<'_>, mark: &MarkKind) -> Result<Sigma0, ClosedFormError> {
    check(leaf, mark)?;
    let lam_leaf = leaf.lambda();
    let lam = mark.leaf_probability() * lam_leaf;
    let mass = mean_mass(leaf, mark);
    let v_def = plane_deficit_integral(leaf);
    let v5 = mass * mass / (lam * lam) * v_def;

    let (v4, v6) = match mark {
        MarkKind::Colour { .. } | MarkKind::Density { .. } => {
            let levels = mark.levels().expect("lebesgue mark");
            let m1: f64 = levels.iter().map(|(c, p)| c * p).sum();
            let m2: f64 = levels.iter().map(|(c, p)| c * c * p).sum();
            // E∫_S∫_S h(y−x) dy dx = ∫ h(z) E|S ∩ (S+z)| dz
            let pair = match leaf {
                Leaf::D1(l) => line_integral(l, |z| l.covariogram(z) / l.lambda_x(z)),
                Leaf::D2(l) => {
                    let lx = Lambda2::new(l);
                    if lx.is_isotropic() {
                        TAU * quad::integrate(
                            |r| r * l.covariogram(Vec2::new(r, 0.0)) / lx.radial(r),
                            0.0,
                            lx.cutoff(),
                            1e-11,
                        )
                    } else {
                        quad::integrate(
                            |th| {
                                let d = Vec2::from_angle(th);
                                quad::integrate(
                                    |r| r * l.covariogram(d * r) / lx.at(d * r),
                                    0.0,
                                    lx.cutoff(),
                                    NESTED_TOL,
                                )
                            },
                            0.0,
                            TAU,
                            1e-10,
                        )
                    }
                }
            };
            (m2 * pair, m1 * m1 * 2.0 * pair)
        }
        MarkKind::Seeds { q, offsets } => {
            let thin = 1.0 - q;
            let mut sum = 0.0;
            match leaf {
                Leaf::D1(l) => {
                    for a in offsets {
                        for b in offsets {
                            sum += 1.0 / (thin * l.lambda_x(b[0] - a[0]));
                        }
                    }
                }
                Leaf::D2(l) => {
                    let lx = Lambda2::new(l);
                    for a in offsets {
                        for b in offsets {
                            sum += 1.0 / (thin * lx.at(Vec2::new(b[0] - a[0], b[1] - a[1])));
                        }
                    }
                }
            }
            // a seed set carries no leaf, so the cross term vanishes
            (q * sum, 0.0)
        }
        MarkKind::BoundarySurface | MarkKind::CornerCounting => match leaf {
            Leaf::D1(l) => {
                let kinks = kinks_1d(l);
                let v4 = expect_shape_1d(l, |c| {
                    let e = endpoints_1d(c);
                    e.iter()
                        .flat_map(|a| e.iter().map(move |b| b - a))
                        .map(|d| 1.0 / l.lambda_x(d))
                        .sum()
                })?;
                let w = expect_shape_1d(l, |c| {
                    let e = endpoints_1d(c);
                    let mut total = 0.0;
                    for &x in &e {
                        let br: Vec<f64> = kinks.iter().flat_map(|k| [x - k, x + k]).collect();
                        for &(s, len) in c {
                            if len > 0.0 {
                                total += quad::integrate_with_breaks(
                                    |y| 2.0 / l.lambda_x(y - x),
                                    s,
                                    s + len,
                                    &br,
                                    NESTED_TOL,
                                );
                            }
                        }
                    }
                    total
                })?;
                (v4, mass / lam * w)
            }
            Leaf::D2(l) => {
                let lx = Lambda2::new(l);
                if matches!(mark, MarkKind::BoundarySurface) {
                    let v4 = expect_shape_2d(l, |s| boundary_pair_2d(&lx, s));
                    let w = expect_shape_2d(l, |s| boundary_weight_2d(&lx, s));
                    (v4, mass / lam * w)
                } else {
                    let poly = l.polygon().expect("checked");
                    let vs = poly.vertices();
                    let n = vs.len();
                    let mut v4 = 0.0;
                    for a in vs {
                        for b in vs {
                            v4 += 1.0 / lx.at(*b - *a);
                        }
                    }
                    let shape = Shape2D::Polygon(poly.clone());
                    let mut w = 0.0;
                    for i in 0..n {
                        let x = vs[i];
                        let a = (vs[(i + 1) % n] - x).angle();
                        let b = a + ((vs[(i + n - 1) % n] - x).angle() - a).rem_euclid(TAU);
                        w += area_weight_2d(&lx, &shape, x, a, b);
                    }
                    (v4, mass / lam * w)
                }
            }
        },
    };
    Ok(Sigma0 {
        v4,
        v5,
        v6,
        value: v4 + v5 - v6,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closedform::{sigma1_sq, sigma2_sq};
    use crate::grains::{Component1D, GrainLaw2D, LengthLaw};
    use approx::assert_abs_diff_eq;

    #[test]
    fn one_d_boundary_matches_sigma1() {
        let l1 = GrainLaw1D::fixed_length(1.0);
        let s = sigma0_sq(Leaf::D1(&l1), &MarkKind::BoundarySurface).unwrap();
        // fixed length 1: v4 = 3, v5 = 16 ln 2 − 8, v6 = 8 ln 2
        assert_abs_diff_eq!(s.v4, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.v5, 16.0 * 2f64.ln() - 8.0, epsilon = 1e-10);
        assert_abs_diff_eq!(s.v6, 8.0 * 2f64.ln(), epsilon = 1e-10);
        for law in [
            l1,
            GrainLaw1D::fixed_length(2.5),
            GrainLaw1D::LengthLaw {
                length: LengthLaw::Uniform { lo: 0.5, hi: 1.5 },
            },
            GrainLaw1D::LengthLaw {
                length: LengthLaw::Exponential { mean: 1.0 },
            },
        ] {
            let a = sigma0_sq(Leaf::D1(&law), &MarkKind::BoundarySurface)
                .unwrap()
                .value;
            let b = sigma1_sq(&law).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
    }

    #[test]
    fn colour_variance_is_binomial_times_deficit() {
        let l1 = GrainLaw1D::fixed_length(1.0);
        let v = plane_deficit_integral(Leaf::D1(&l1));
        assert_abs_diff_eq!(v, 2.0 * (2.0 * 2f64.ln() - 1.0), epsilon = 1e-11);
        let s = sigma0_sq(Leaf::D1(&l1), &MarkKind::Colour { p: 0.3 }).unwrap();
        assert_abs_diff_eq!(s.value, 0.21 * v, epsilon = 1e-9);
        // the pair term agrees with a direct double integral over the leaf
        let direct = quad::integrate(
            |x| quad::integrate_with_breaks(|y| 1.0 / l1.lambda_x(y - x), 0.0, 1.0, &[x], 1e-13),
            0.0,
            1.0,
            1e-12,
        );
        assert_abs_diff_eq!(s.v4, 0.3 * direct, epsilon = 1e-9);
        let d = MarkKind::Density {
            levels: vec![1.0, 3.0],
            probs: vec![0.5, 0.5],
        };
        assert_abs_diff_eq!(
            sigma0_sq(Leaf::D1(&l1), &d).unwrap().value,
            1.0 * v,
            epsilon = 1e-9
        );
    }

    #[test]
    fn seeds_terms() {
        let l1 = GrainLaw1D::fixed_length(1.0);
        let m = MarkKind::Seeds {
            q: 0.5,
            offsets: vec![vec![0.0], vec![0.5]],
        };
        assert_abs_diff_eq!(
            mark_intensity(Leaf::D1(&l1), &m).unwrap(),
            2.0,
            epsilon = 1e-15
        );
        let s = sigma0_sq(Leaf::D1(&l1), &m).unwrap();
        // λ_0 = 0.5, λ_{±0.5} = 0.75 after thinning
        assert_abs_diff_eq!(s.v4, 0.5 * (2.0 / 0.5 + 2.0 / 0.75), epsilon = 1e-12);
        assert_eq!(s.v6, 0.0);
    }

    #[test]
    fn multi_component_needs_fixed_lengths() {
        let law = GrainLaw1D::MultiComponent {
            components: vec![
                Component1D {
                    offset: 0.0,
                    length: LengthLaw::Fixed { value: 1.0 },
                },
                Component1D {
                    offset: 2.0,
                    length: LengthLaw::Uniform { lo: 0.5, hi: 1.0 },
                },
            ],
        };
        assert!(sigma0_sq(Leaf::D1(&law), &MarkKind::BoundarySurface).is_err());
        let fixed = GrainLaw1D::MultiComponent {
            components: vec![
                Component1D {
                    offset: 0.0,
                    length: LengthLaw::Fixed { value: 1.0 },
                },
                Component1D {
                    offset: 2.0,
                    length: LengthLaw::Fixed { value: 0.5 },
                },
            ],
        };
        let s = sigma0_sq(Leaf::D1(&fixed), &MarkKind::BoundarySurface).unwrap();
        assert!(s.v4 > 0.0 && s.v5 > 0.0 && s.v6 > 0.0);
    }

    #[test]
    fn two_d_boundary_matches_sigma2_for_disks() {
        let disk = GrainLaw2D::unit_disk().build().unwrap();
        let a = sigma2_sq(&disk).unwrap();
        let b = sigma0_sq(Leaf::D2(&disk), &MarkKind::BoundarySurface).unwrap();
        assert_abs_diff_eq!(a.v1, b.v4, epsilon = 1e-8);
        assert_abs_diff_eq!(a.v2, b.v5, epsilon = 1e-8);
        assert_abs_diff_eq!(a.v3, b.v6, epsilon = 1e-8);
        assert_abs_diff_eq!(a.value, b.value, epsilon = 1e-8);
    }

    #[test]
    fn corners_and_colour_in_two_d() {
        let sq = GrainLaw2D::square(1.0, true).build().unwrap();
        assert_abs_diff_eq!(
            mark_intensity(Leaf::D2(&sq), &MarkKind::CornerCounting).unwrap(),
            4.0
        );
        let c = sigma0_sq(Leaf::D2(&sq), &MarkKind::CornerCounting).unwrap();
        assert!(c.v4 > 0.0 && c.v6 > 0.0);
        let disk = GrainLaw2D::unit_disk().build().unwrap();
        assert!(sigma0_sq(Leaf::D2(&disk), &MarkKind::CornerCounting).is_err());
        let v = plane_deficit_integral(Leaf::D2(&disk));
        let s = sigma0_sq(Leaf::D2(&disk), &MarkKind::Colour { p: 0.5 }).unwrap();
        assert_abs_diff_eq!(s.value, 0.25 * v, epsilon = 1e-8);
    }
}
