use super::ClosedFormError;
use crate::grains::{GrainLaw1D, LengthLaw};
use crate::quad;

/// Intensity of the boundary point process `η`: `E[H₀(∂S)]/λ`.
pub fn intensity_1d(law: &GrainLaw1D) -> f64 {
    law.boundary_mass_mean() / law.lambda()
}

fn interval_law(law: &GrainLaw1D) -> Result<LengthLaw, ClosedFormError> {
    let l = law.single_length().ok_or(ClosedFormError::NotInterval)?;
    if l.cdf(0.0) > 0.0 {
        return Err(ClosedFormError::ZeroLengthMass);
    }
    Ok(l)
}

fn lambda_u(l: &LengthLaw, u: f64) -> f64 {
    l.mean() + l.mean_min(u)
}

/// Continuous part of the pair correlation function at `z > 0`.
pub fn pcf_1d(law: &GrainLaw1D, z: f64) -> Result<f64, ClosedFormError> {
    let l = interval_law(law)?;
    let lam = l.mean();
    let lz = lambda_u(&l, z);
    let mut v = lam * (1.0 + l.cdf(z)) / lz;
    if let Some(f) = l.density(z) {
        v += lam * lam * f / (4.0 * lz);
    }
    Ok(v)
}

/// Pairs of `η` points at an exact distance, from atoms of the length law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairAtom {
    pub distance: f64,
    /// Expected number of such pairs per unit length.
    pub rate: f64,
}

pub fn pair_atoms_1d(law: &GrainLaw1D) -> Result<Vec<PairAtom>, ClosedFormError> {
    let l = interval_law(law)?;
    Ok(l.atoms()
        .into_iter()
        .map(|(h, m)| PairAtom {
            distance: h,
            rate: m / lambda_u(&l, h),
        })
        .collect())
}

/// `σ₁² = lim Var η([0,n]) / n` for interval leaves.
pub fn sigma1_sq(law: &GrainLaw1D) -> Result<f64, ClosedFormError> {
    let l = interval_law(law)?;
    let lam = l.mean();
    let t1 = 2.0 / lam;
    let t2 = 2.0 * l.expect(|h| 1.0 / lambda_u(&l, h));
    // raw integrand below the 0.99 quantile, cancellation-free form above
    let raw = |u: f64| (1.0 + l.cdf(u)) / (lam * lambda_u(&l, u)) - 1.0 / (lam * lam);
    let tail = |u: f64| {
        let k = l.excess(u);
        (k - lam * l.sf(u)) / (lam * lam * (2.0 * lam - k))
    };
    let q = l.quantile(0.99);
    let breaks = l.breakpoints();
    let mut t3 = quad::integrate_with_breaks(raw, 0.0, q, &breaks, 1e-12);
    t3 += if l.is_bounded() {
        quad::integrate_with_breaks(tail, q, l.sup(), &breaks, 1e-12)
    } else {
        quad::integrate_to_infinity(tail, q, 1e-12)
    };
    Ok(t1 + t2 + 8.0 * t3)
}

/// Vacancy probability `P[η([0,h]) = 0] = K(h)/(λ + h)`.
pub fn vacancy(law: &GrainLaw1D, h: f64) -> Result<f64, ClosedFormError> {
    let l = law.single_length().ok_or(ClosedFormError::NotInterval)?;
    Ok(l.excess(h) / (l.mean() + h))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalLawKind {
    /// The cell covering a fixed point.
    Exposed,
    /// A typical cell.
    Typical,
}

/// Mixed law (density plus atoms) of a visible interval length.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalLaw {
    kind: IntervalLawKind,
    length: LengthLaw,
    lambda: f64,
}

pub fn exposed_interval_law(law: &GrainLaw1D) -> Result<IntervalLaw, ClosedFormError> {
    let length = interval_law(law)?;
    Ok(IntervalLaw {
        kind: IntervalLawKind::Exposed,
        lambda: length.mean(),
        length,
    })
}

pub fn typical_interval_law(law: &GrainLaw1D) -> Result<IntervalLaw, ClosedFormError> {
    let length = interval_law(law)?;
    Ok(IntervalLaw {
        kind: IntervalLawKind::Typical,
        lambda: length.mean(),
        length,
    })
}

impl IntervalLaw {
    pub fn kind(&self) -> IntervalLawKind {
        self.kind
    }

    pub fn density(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let l = &self.length;
        let lam = self.lambda;
        // ∫_(x,∞) (λ + u) ν(du)
        let sf = l.sf(x);
        let tail = lam * sf + l.excess(x) + x * sf;
        let d = (lam + x).powi(3);
        // absolutely continuous part of the ν(dx) term
        let f = l.density(x).unwrap_or(0.0);
        match self.kind {
            IntervalLawKind::Exposed => 2.0 * x * tail / d + x * f / (x + lam),
            IntervalLawKind::Typical => lam * tail / d + lam * f / (2.0 * (x + lam)),
        }
    }

    pub fn atoms(&self) -> Vec<(f64, f64)> {
        let lam = self.lambda;
        self.length
            .atoms()
            .into_iter()
            .map(|(h, m)| {
                let w = match self.kind {
                    IntervalLawKind::Exposed => h * m / (h + lam),
                    IntervalLawKind::Typical => lam * m / (2.0 * (h + lam)),
                };
                (h, w)
            })
            .collect()
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms().iter().map(|a| a.1).sum()
    }

    fn upper(&self) -> Option<f64> {
        self.length.is_bounded().then(|| self.length.sup())
    }

    /// `∫_0^x` of the density.
    pub fn continuous_mass_below(&self, x: f64) -> f64 {
        let x = match self.upper() {
            Some(s) => x.min(s),
            None => x,
        };
        if x <= 0.0 {
            return 0.0;
        }
        quad::integrate_with_breaks(
            |t| self.density(t),
            0.0,
            x,
            &self.length.breakpoints(),
            1e-13,
        )
    }

    pub fn continuous_mass(&self) -> f64 {
        match self.upper() {
            Some(s) => self.continuous_mass_below(s),
            None => quad::integrate_to_infinity(|t| self.density(t), 0.0, 1e-13),
        }
    }

    /// Distribution function of the continuous part, normalised to mass one.
    pub fn continuous_cdf(&self, x: f64) -> f64 {
        (self.continuous_mass_below(x) / self.continuous_mass()).clamp(0.0, 1.0)
    }

    pub fn mean(&self) -> f64 {
        let atoms: f64 = self.atoms().iter().map(|(h, w)| h * w).sum();
        let cont = match self.upper() {
            Some(s) => quad::integrate_with_breaks(
                |t| t * self.density(t),
                0.0,
                s,
                &self.length.breakpoints(),
                1e-13,
            ),
            None => quad::integrate_to_infinity(|t| t * self.density(t), 0.0, 1e-13),
        };
        atoms + cont
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn dirac(l: f64) -> GrainLaw1D {
        GrainLaw1D::fixed_length(l)
    }

    #[test]
    fn intensities() {
        assert_abs_diff_eq!(intensity_1d(&dirac(1.0)), 2.0);
        assert_abs_diff_eq!(intensity_1d(&dirac(2.0)), 1.0);
    }

    #[test]
    fn pcf_values() {
        assert_abs_diff_eq!(
            pcf_1d(&dirac(1.0), 0.5).unwrap(),
            1.0 / 1.5,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(pcf_1d(&dirac(1.0), 2.0).unwrap(), 1.0, epsilon = 1e-15);
        let atoms = pair_atoms_1d(&dirac(1.0)).unwrap();
        assert_eq!(atoms.len(), 1);
        assert_abs_diff_eq!(atoms[0].rate, 0.5, epsilon = 1e-15);
        // exponential lengths: F = 1 − e^{−z}, λ_z = 2 − e^{−z}, f = e^{−z}
        let exp = GrainLaw1D::LengthLaw {
            length: LengthLaw::Exponential { mean: 1.0 },
        };
        for z in [0.3f64, 1.0, 4.0] {
            let e = (-z).exp();
            let oracle = (2.0 - e) / (2.0 - e) + e / (4.0 * (2.0 - e));
            assert_abs_diff_eq!(pcf_1d(&exp, z).unwrap(), oracle, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(pcf_1d(&exp, 40.0).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pcf_rejects_multi_component() {
        let law = GrainLaw1D::MultiComponent {
            components: vec![
                crate::grains::Component1D {
                    offset: 0.0,
                    length: LengthLaw::Fixed { value: 1.0 },
                },
                crate::grains::Component1D {
                    offset: 2.0,
                    length: LengthLaw::Fixed { value: 1.0 },
                },
            ],
        };
        assert_eq!(pcf_1d(&law, 0.5), Err(ClosedFormError::NotInterval));
        assert!(sigma1_sq(&law).is_err());
    }

    #[test]
    fn sigma1_dirac() {
        let target = 8.0 * 2f64.ln() - 5.0;
        assert_abs_diff_eq!(sigma1_sq(&dirac(1.0)).unwrap(), target, epsilon = 1e-10);
        assert_abs_diff_eq!(
            sigma1_sq(&dirac(2.0)).unwrap(),
            target / 2.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn sigma1_scaling_for_random_lengths() {
        let a = GrainLaw1D::LengthLaw {
            length: LengthLaw::Uniform { lo: 0.5, hi: 1.5 },
        };
        let b = GrainLaw1D::LengthLaw {
            length: LengthLaw::Uniform { lo: 1.0, hi: 3.0 },
        };
        let sa = sigma1_sq(&a).unwrap();
        assert!(sa > 0.0);
        assert_abs_diff_eq!(sigma1_sq(&b).unwrap(), sa / 2.0, epsilon = 1e-9);
        let e1 = GrainLaw1D::LengthLaw {
            length: LengthLaw::Exponential { mean: 1.0 },
        };
        let e3 = GrainLaw1D::LengthLaw {
            length: LengthLaw::Exponential { mean: 3.0 },
        };
        assert_abs_diff_eq!(
            sigma1_sq(&e3).unwrap(),
            sigma1_sq(&e1).unwrap() / 3.0,
            epsilon = 1e-8
        );
    }

    #[test]
    fn vacancy_values() {
        assert_abs_diff_eq!(vacancy(&dirac(1.0), 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(
            vacancy(&dirac(1.0), 0.5).unwrap(),
            1.0 / 3.0,
            epsilon = 1e-15
        );
        assert_eq!(vacancy(&dirac(1.0), 1.5).unwrap(), 0.0);
    }

    #[test]
    fn exposed_law_dirac() {
        let x = exposed_interval_law(&dirac(1.0)).unwrap();
        assert_abs_diff_eq!(x.density(0.5), 4.0 * 0.5 / 1.5f64.powi(3), epsilon = 1e-15);
        assert_eq!(x.atoms(), vec![(1.0, 0.5)]);
        // E X = ∫_0^1 4x²/(1+x)³ dx + 1/2 = 4 ln 2 − 5/2 + 1/2
        assert_abs_diff_eq!(x.mean(), 4.0 * 2f64.ln() - 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(x.continuous_mass() + x.atom_mass(), 1.0, epsilon = 1e-10);
        let y = typical_interval_law(&dirac(1.0)).unwrap();
        assert_eq!(y.atoms(), vec![(1.0, 0.25)]);
        assert_abs_diff_eq!(y.density(0.5), 2.0 / 1.5f64.powi(3), epsilon = 1e-15);
    }

    #[test]
    fn inverse_size_bias() {
        // E[1/X] = 2/λ
        for law in [
            dirac(1.5),
            GrainLaw1D::LengthLaw {
                length: LengthLaw::Uniform { lo: 0.2, hi: 2.0 },
            },
            GrainLaw1D::LengthLaw {
                length: LengthLaw::Exponential { mean: 0.7 },
            },
        ] {
            let x = exposed_interval_law(&law).unwrap();
            let lam = law.lambda();
            let atoms: f64 = x.atoms().iter().map(|(h, w)| w / h).sum();
            let cont = quad::integrate_to_infinity(|t| x.density(t) / t, 0.0, 1e-12);
            assert_abs_diff_eq!(atoms + cont, 2.0 / lam, epsilon = 1e-8);
        }
    }

    proptest! {
        #[test]
        fn laws_normalised(lo in 0.05..2.0f64, w in 0.0..3.0f64, mean in 0.1..3.0f64) {
            let laws = [
                dirac(lo),
                GrainLaw1D::LengthLaw { length: LengthLaw::Uniform { lo, hi: lo + w + 0.01 } },
                GrainLaw1D::LengthLaw { length: LengthLaw::Exponential { mean } },
            ];
            for law in laws {
                for m in [exposed_interval_law(&law).unwrap(), typical_interval_law(&law).unwrap()] {
                    prop_assert!((m.continuous_mass() + m.atom_mass() - 1.0).abs() < 1e-8);
                }
                prop_assert!((pcf_1d(&law, 1e3 * law.radius_bound() + 50.0).unwrap() - 1.0).abs() < 1e-9);
            }
        }
    }
}
