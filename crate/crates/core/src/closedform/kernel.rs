use super::sigma0::{sigma0_sq, Leaf};
use super::{sigma1_sq, sigma2_sq, ClosedFormError};
use crate::dlrm::MarkKind;
use crate::grains::{GrainLaw1D, Law2D};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// General random measure.
    K0,
    /// 1D boundary counts.
    K1,
    /// 2D boundary length.
    K2,
}

/// Limiting space-time covariance `σ² · ⟨spatial⟩ · e^{−λ|u−t|}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    pub kind: KernelKind,
    pub sigma_sq: f64,
    pub lambda: f64,
}

impl Kernel {
    pub fn time_factor(&self, t: f64, u: f64) -> f64 {
        (-self.lambda * (u - t).abs()).exp()
    }

    /// `κ₁((r,t),(s,u)) = σ² min(r,s) e^{−λ|u−t|}` for `r, s ≥ 0`.
    pub fn eval_interval(&self, (r, t): (f64, f64), (s, u): (f64, f64)) -> f64 {
        self.sigma_sq * r.min(s) * self.time_factor(t, u)
    }

    /// `κ((f,t),(g,u)) = σ² ⟨f,g⟩ e^{−λ|u−t|}` given the inner product.
    pub fn eval_inner(&self, inner: f64, t: f64, u: f64) -> f64 {
        self.sigma_sq * inner * self.time_factor(t, u)
    }
}

/// Assembles the kernel for boundary counts (`K1`, needs `law1`), boundary
/// length (`K2`, needs `law2`) or a general mark (`K0`).
pub fn kernel(
    kind: KernelKind,
    law1: Option<&GrainLaw1D>,
    law2: Option<&Law2D>,
    mark: Option<&MarkKind>,
) -> Result<Kernel, ClosedFormError> {
    let missing = |w: &str| ClosedFormError::Incompatible(format!("kernel needs {w}"));
    match kind {
        KernelKind::K1 => {
            let l = law1.ok_or_else(|| missing("a 1D law"))?;
            Ok(Kernel {
                kind,
                sigma_sq: sigma1_sq(l)?,
                lambda: l.lambda(),
            })
        }
        KernelKind::K2 => {
            let l = law2.ok_or_else(|| missing("a 2D law"))?;
            Ok(Kernel {
                kind,
                sigma_sq: sigma2_sq(l)?.value,
                lambda: l.lambda(),
            })
        }
        KernelKind::K0 => {
            let m = mark.ok_or_else(|| missing("a mark kind"))?;
            let (leaf, lam) = match (law1, law2) {
                (Some(l), _) => (Leaf::D1(l), l.lambda()),
                (None, Some(l)) => (Leaf::D2(l), l.lambda()),
                _ => return Err(missing("a leaf law")),
            };
            Ok(Kernel {
                kind,
                sigma_sq: sigma0_sq(leaf, m)?.value,
                lambda: m.leaf_probability() * lam,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Purpose};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use rand::Rng;

    #[test]
    fn k1_values() {
        let law = GrainLaw1D::fixed_length(1.0);
        let k = kernel(KernelKind::K1, Some(&law), None, None).unwrap();
        let s = 8.0 * 2f64.ln() - 5.0;
        assert_abs_diff_eq!(k.eval_interval((1.0, 0.0), (1.0, 0.0)), s, epsilon = 1e-10);
        assert_abs_diff_eq!(
            k.eval_interval((1.0, 0.0), (1.0, 2f64.ln())),
            s / 2.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn k2_unit_box() {
        let law = crate::grains::GrainLaw2D::unit_disk().build().unwrap();
        let k = kernel(KernelKind::K2, None, Some(&law), None).unwrap();
        assert_abs_diff_eq!(
            k.eval_inner(1.0, 0.3, 0.3),
            sigma2_sq(&law).unwrap().value,
            epsilon = 1e-15
        );
    }

    #[test]
    fn k1_is_positive_semidefinite() {
        let law = GrainLaw1D::fixed_length(1.0);
        let k = kernel(KernelKind::K1, Some(&law), None, None).unwrap();
        let mut rng = substream(11, 0, Purpose::Custom(1));
        for _ in 0..50 {
            let pts: Vec<(f64, f64)> = (0..8)
                .map(|_| (rng.random_range(0.0..3.0), rng.random_range(-2.0..2.0)))
                .collect();
            let m = DMatrix::from_fn(8, 8, |i, j| k.eval_interval(pts[i], pts[j]));
            assert!((m.clone() - m.transpose()).abs().max() < 1e-15);
            let eig = m.symmetric_eigenvalues();
            assert!(eig.iter().all(|&e| e >= -1e-9), "{eig:?}");
        }
    }
}
