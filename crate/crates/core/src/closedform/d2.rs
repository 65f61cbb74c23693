use super::{sigma0, ClosedFormError, NESTED_TOL};
use crate::dlrm::MarkKind;
use crate::geom::{difference_body_area, lens_area, Vec2};
use crate::grains::{Law2D, LengthLaw};
use crate::quad;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

const TABLE_CELLS: usize = 4096;

/// Fast evaluator of `x ↦ λ_x` and of the ray weights
/// `∫_0^s 2r/λ_{r·dir} dr` for a planar grain law.
#[derive(Debug, Clone)]
pub struct Lambda2 {
    lambda: f64,
    cutoff: f64,
    kind: LambdaKind,
    /// Cumulative ray weight at table nodes (isotropic laws only).
    cum: Vec<f64>,
}

#[derive(Debug, Clone)]
enum LambdaKind {
    FixedDisk(f64),
    Table(Vec<f64>),
    Anisotropic(Law2D),
}

impl Lambda2 {
    pub fn new(law: &Law2D) -> Self {
        let lambda = law.lambda();
        let cutoff = 2.0 * law.radius_bound();
        let kind = match (law.radius_law(), law.rotation_invariant()) {
            (Some(LengthLaw::Fixed { value }), _) => LambdaKind::FixedDisk(*value),
            (_, true) => {
                let h = cutoff / TABLE_CELLS as f64;
                LambdaKind::Table(
                    (0..=TABLE_CELLS + 2)
                        .map(|i| law.lambda_x(Vec2::new((i as f64 * h).min(cutoff), 0.0)))
                        .collect(),
                )
            }
            (_, false) => LambdaKind::Anisotropic(law.clone()),
        };
        let mut me = Self {
            lambda,
            cutoff,
            kind,
            cum: Vec::new(),
        };
        if me.is_isotropic() {
            let h = cutoff / TABLE_CELLS as f64;
            let mut cum = Vec::with_capacity(TABLE_CELLS + 1);
            cum.push(0.0);
            for i in 0..TABLE_CELLS {
                let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
                let w = quad::integrate(|r| 2.0 * r / me.radial(r), a, b, 1e-15);
                cum.push(cum[i] + w);
            }
            me.cum = cum;
        }
        me
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Distance beyond which `λ_x = 2λ`.
    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn is_isotropic(&self) -> bool {
        !matches!(self.kind, LambdaKind::Anisotropic(_))
    }

    /// `λ_x` as a function of `|x|` for isotropic laws.
    pub fn radial(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= self.cutoff {
            return 2.0 * self.lambda;
        }
        match &self.kind {
            LambdaKind::FixedDisk(rho) => 2.0 * PI * rho * rho - lens_area(r, *rho),
            LambdaKind::Table(t) => {
                // Catmull–Rom on the uniform grid
                let h = self.cutoff / TABLE_CELLS as f64;
                let s = r / h;
                let i = (s.floor() as usize).min(TABLE_CELLS - 1);
                let f = s - i as f64;
                let p0 = if i == 0 { t[1] } else { t[i - 1] };
                let (p1, p2, p3) = (t[i], t[i + 1], t[i + 2]);
                let a = -0.5 * p0 + 1.5 * p1 - 1.5 * p2 + 0.5 * p3;
                let b = p0 - 2.5 * p1 + 2.0 * p2 - 0.5 * p3;
                let c = -0.5 * p0 + 0.5 * p2;
                ((a * f + b) * f + c) * f + p1
            }
            LambdaKind::Anisotropic(_) => unreachable!("radial profile of an anisotropic law"),
        }
    }

    pub fn at(&self, z: Vec2) -> f64 {
        match &self.kind {
            LambdaKind::Anisotropic(law) => {
                if z.norm() >= self.cutoff {
                    2.0 * self.lambda
                } else {
                    law.lambda_x(z)
                }
            }
            _ => self.radial(z.norm()),
        }
    }

    /// `∫_0^s 2r / λ_{r·dir} dr` for a unit vector `dir`.
    pub fn ray_weight(&self, dir: Vec2, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        if !self.is_isotropic() {
            let top = s.min(self.cutoff);
            let mut w = quad::integrate(|r| 2.0 * r / self.at(dir * r), 0.0, top, NESTED_TOL);
            if s > self.cutoff {
                w += (s * s - self.cutoff * self.cutoff) / (2.0 * self.lambda);
            }
            return w;
        }
        if s >= self.cutoff {
            return self.cum[TABLE_CELLS]
                + (s * s - self.cutoff * self.cutoff) / (2.0 * self.lambda);
        }
        let h = self.cutoff / TABLE_CELLS as f64;
        let i = ((s / h).floor() as usize).min(TABLE_CELLS - 1);
        let a = i as f64 * h;
        let mut w = self.cum[i];
        if s > a {
            let (x, wt) = gl8();
            let (c, hw) = (0.5 * (a + s), 0.5 * (s - a));
            for k in 0..8 {
                let r = c + hw * x[k];
                w += hw * wt[k] * 2.0 * r / self.radial(r);
            }
        }
        w
    }

    /// `V = ∫ (2λ/λ_x − 1) dx` over the plane.
    pub fn deficit_integral(&self) -> f64 {
        let lam = self.lambda;
        if self.is_isotropic() {
            TAU * quad::integrate(
                |r| r * (2.0 * lam / self.radial(r) - 1.0),
                0.0,
                self.cutoff,
                1e-12,
            )
        } else {
            quad::integrate(
                |th| {
                    let d = Vec2::from_angle(th);
                    quad::integrate(
                        |r| r * (2.0 * lam / self.at(d * r) - 1.0),
                        0.0,
                        self.cutoff,
                        NESTED_TOL,
                    )
                },
                0.0,
                TAU,
                1e-10,
            )
        }
    }
}

fn gl8() -> &'static ([f64; 8], [f64; 8]) {
    static RULE: std::sync::OnceLock<([f64; 8], [f64; 8])> = std::sync::OnceLock::new();
    RULE.get_or_init(|| {
        let (x, w) = quad::gauss_legendre(8);
        let mut a = [0.0; 8];
        let mut b = [0.0; 8];
        a.copy_from_slice(&x);
        b.copy_from_slice(&w);
        (a, b)
    })
}

/// Intensity of the boundary length measure `φ`: `E[H₁(∂S)]/λ`.
pub fn boundary_intensity_2d(law: &Law2D) -> f64 {
    law.boundary_mass_mean() / law.lambda()
}

/// Branch-point intensity.
pub fn beta3(law: &Law2D) -> Result<f64, ClosedFormError> {
    let lam = law.lambda();
    if law.rotation_invariant() {
        let p = law.boundary_mass_mean();
        return Ok(2.0 / (PI * lam * lam) * p * p);
    }
    let poly = law
        .polygon()
        .ok_or_else(|| ClosedFormError::MissingFlag("fixed convex set".into()))?;
    Ok(2.0 * difference_body_area(poly) / (lam * lam))
}

/// Cell intensity, valid for Jordan leaves with the non-containment property.
pub fn beta1(law: &Law2D) -> Result<f64, ClosedFormError> {
    if !law.jordan() {
        return Err(ClosedFormError::MissingFlag("Jordan boundary".into()));
    }
    if !law.non_containment() {
        return Err(ClosedFormError::MissingFlag("non-containment".into()));
    }
    Ok(beta3(law)? / 2.0)
}

/// `σ₂² = v₁ + v₂ − v₃` for the boundary length measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sigma2 {
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
    pub value: f64,
}

/// Asymptotic variance of boundary length. Disk laws use the chord
/// parametrisation; polygon laws use the general mark-measure quadrature.
pub fn sigma2_sq(law: &Law2D) -> Result<Sigma2, ClosedFormError> {
    let Some(radius) = law.radius_law() else {
        let s = sigma0::sigma0_sq(sigma0::Leaf::D2(law), &MarkKind::BoundarySurface)?;
        return Ok(Sigma2 {
            v1: s.v4,
            v2: s.v5,
            v3: s.v6,
            value: s.value,
        });
    };
    let lx = Lambda2::new(law);
    let lam = law.lambda();
    let per = law.boundary_mass_mean();
    // ∫∫ over a circle of radius ρ: 2πρ · ρ ∫_0^{2π} dφ / λ(2ρ sin(φ/2))
    let v1 = radius.expect(|rho| {
        TAU * rho
            * rho
            * 2.0
            * quad::integrate(
                |p| 1.0 / lx.radial(2.0 * rho * (0.5 * p).sin()),
                0.0,
                PI,
                NESTED_TOL,
            )
    });
    let v2 = per * per / (lam * lam) * lx.deficit_integral();
    // chord from a boundary point at angle φ to the inward normal has length 2ρ cos φ
    let inner = radius.expect(|rho| {
        TAU * rho
            * quad::integrate(
                |p| lx.ray_weight(Vec2::new(1.0, 0.0), 2.0 * rho * p.cos()),
                -FRAC_PI_2,
                FRAC_PI_2,
                NESTED_TOL,
            )
    });
    let v3 = per / lam * inner;
    Ok(Sigma2 {
        v1,
        v2,
        v3,
        value: v1 + v2 - v3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grains::GrainLaw2D;
    use approx::assert_abs_diff_eq;

    #[test]
    fn beta_examples() {
        let disk = GrainLaw2D::unit_disk().build().unwrap();
        assert_abs_diff_eq!(beta3(&disk).unwrap(), 8.0 / PI, epsilon = 1e-12);
        assert_abs_diff_eq!(beta1(&disk).unwrap(), 4.0 / PI, epsilon = 1e-12);
        let rot = GrainLaw2D::square(1.0, true).build().unwrap();
        assert_abs_diff_eq!(beta1(&rot).unwrap(), 16.0 / PI, epsilon = 1e-12);
        let sq = GrainLaw2D::square(1.0, false).build().unwrap();
        assert_abs_diff_eq!(beta1(&sq).unwrap(), 4.0, epsilon = 1e-12);
        let mixed = GrainLaw2D::Disk {
            radius: LengthLaw::Uniform { lo: 0.5, hi: 1.0 },
        }
        .build()
        .unwrap();
        assert!(beta3(&mixed).is_ok());
        assert!(matches!(
            beta1(&mixed),
            Err(ClosedFormError::MissingFlag(_))
        ));
        assert_abs_diff_eq!(boundary_intensity_2d(&disk), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn symmetric_fixed_sets_have_beta1_area_four() {
        // for centrally symmetric S₀, S₀ ⊕ Š₀ = 2S₀
        for v in [
            vec![
                Vec2::new(-1.0, -0.5),
                Vec2::new(1.0, -0.5),
                Vec2::new(1.0, 0.5),
                Vec2::new(-1.0, 0.5),
            ],
            crate::geom::ConvexPolygon::regular(6, 0.7)
                .unwrap()
                .vertices()
                .to_vec(),
        ] {
            let law = GrainLaw2D::ConvexPolygon {
                vertices: v,
                random_rotation: false,
            }
            .build()
            .unwrap();
            assert_abs_diff_eq!(beta1(&law).unwrap() * law.lambda(), 4.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let law = GrainLaw2D::square(1.0, true).build().unwrap();
        let lx = Lambda2::new(&law);
        for r in [0.0, 0.1, 0.37, 0.9, 1.2, 1.41] {
            assert_abs_diff_eq!(
                lx.radial(r),
                law.lambda_x(Vec2::new(r, 0.0)),
                epsilon = 1e-6
            );
        }
        let disk = GrainLaw2D::unit_disk().build().unwrap();
        let ld = Lambda2::new(&disk);
        for s in [0.05, 0.5, 1.3, 1.999, 2.5] {
            let direct = quad::integrate(|r| 2.0 * r / ld.radial(r), 0.0, s, 1e-13);
            assert_abs_diff_eq!(
                ld.ray_weight(Vec2::new(0.0, 1.0), s),
                direct,
                epsilon = 1e-11
            );
        }
    }

    #[test]
    fn deficit_integral_vanishes_for_huge_leaves_only_in_support() {
        let disk = GrainLaw2D::unit_disk().build().unwrap();
        let lx = Lambda2::new(&disk);
        // integrand is zero beyond 2R: truncation at the cutoff is exact
        assert_eq!(lx.radial(2.0 + 1e-12), 2.0 * PI);
        let v = lx.deficit_integral();
        assert!(v > 0.0 && v < PI * 4.0);
    }

    #[test]
    fn sigma2_unit_disk_components_positive() {
        let disk = GrainLaw2D::unit_disk().build().unwrap();
        let s = sigma2_sq(&disk).unwrap();
        assert!(s.v1 > 0.0 && s.v2 > 0.0 && s.v3 > 0.0);
        assert!(s.value > 0.0);
        assert_abs_diff_eq!(s.value, s.v1 + s.v2 - s.v3, epsilon = 1e-15);
    }
}
