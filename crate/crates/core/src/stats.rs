//! Monte Carlo estimators and the checks that compare them with closed-form
//! targets.

use crate::dlm1d::Tessellation1D;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use std::collections::HashSet;

/// Default pass threshold in standard errors.
pub const DEFAULT_THRESHOLD: f64 = 3.0;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("need at least {need} samples, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("bin ({0}, {1}] is invalid or extends beyond the maximum lag")]
    BadBin(f64, f64),
    #[error("fewer than two positive covariances; cannot fit a decay rate")]
    NoPositiveCovariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NoTarget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub value: f64,
    pub stderr: f64,
    pub replicates: usize,
    pub target: Option<f64>,
    pub z_score: Option<f64>,
    pub verdict: Verdict,
}

impl EstimateReport {
    pub fn new(value: f64, stderr: f64, replicates: usize) -> Self {
        Self {
            value,
            stderr: stderr.max(0.0),
            replicates,
            target: None,
            z_score: None,
            verdict: Verdict::NoTarget,
        }
    }

    /// Attaches a target and decides the verdict at `threshold` standard errors.
    pub fn with_target(mut self, target: f64, threshold: f64) -> Self {
        let diff = self.value - target;
        let z = if self.stderr > 0.0 {
            diff / self.stderr
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        };
        self.target = Some(target);
        self.z_score = Some(z);
        self.verdict = if z.abs() <= threshold {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }
}

/// Sample mean and its standard error.
pub fn mean_report(xs: &[f64]) -> EstimateReport {
    let n = xs.len();
    if n == 0 {
        return EstimateReport::new(f64::NAN, f64::NAN, 0);
    }
    let m = xs.iter().sum::<f64>() / n as f64;
    let se = if n > 1 {
        (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64 / n as f64).sqrt()
    } else {
        f64::NAN
    };
    EstimateReport::new(m, se, n)
}

/// Runs `f(r)` for replicates `0..n` on the rayon pool, preserving order.
pub fn replicate_map<T: Send, F: Fn(u64) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    (0..n as u64).into_par_iter().map(f).collect()
}

/// Mean of per-replicate `mass / measure` ratios.
pub fn estimate_intensity(per_replicate: &[(f64, f64)]) -> Result<EstimateReport, StatsError> {
    if per_replicate.len() < 30 {
        return Err(StatsError::TooFew {
            need: 30,
            got: per_replicate.len(),
        });
    }
    let ratios: Vec<f64> = per_replicate.iter().map(|(m, v)| m / v).collect();
    Ok(mean_report(&ratios))
}

fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
}

/// `Var(total)/measure` with a delete-one jackknife standard error.
pub fn estimate_variance(totals: &[f64], measure: f64) -> Result<EstimateReport, StatsError> {
    let n = totals.len();
    if n < 100 {
        return Err(StatsError::TooFew { need: 100, got: n });
    }
    let value = sample_variance(totals) / measure;
    let nf = n as f64;
    let s1: f64 = totals.iter().sum();
    let s2: f64 = totals.iter().map(|x| x * x).sum();
    let leave_out: Vec<f64> = totals
        .iter()
        .map(|x| {
            let (a, b) = (s1 - x, s2 - x * x);
            let m = nf - 1.0;
            (b - a * a / m) / (m - 1.0) / measure
        })
        .collect();
    let mean_lo = leave_out.iter().sum::<f64>() / nf;
    let se =
        ((nf - 1.0) / nf * leave_out.iter().map(|v| (v - mean_lo).powi(2)).sum::<f64>()).sqrt();
    Ok(EstimateReport::new(value, se, n))
}

/// `Cov(inner, whole)/measure` with a delete-one jackknife standard error.
///
/// When `inner` is the total over a box whose dependence neighbourhood lies
/// inside the window of `whole`, and `measure` is the box measure, this is
/// unbiased for the asymptotic variance, with no edge term.
pub fn estimate_cross_covariance(
    inner: &[f64],
    whole: &[f64],
    measure: f64,
) -> Result<EstimateReport, StatsError> {
    let n = inner.len().min(whole.len());
    if n < 100 {
        return Err(StatsError::TooFew { need: 100, got: n });
    }
    let nf = n as f64;
    let (sx, sy) = (
        inner[..n].iter().sum::<f64>(),
        whole[..n].iter().sum::<f64>(),
    );
    let sxy: f64 = inner.iter().zip(whole).map(|(x, y)| x * y).sum();
    let cov = |sx: f64, sy: f64, sxy: f64, m: f64| (sxy - sx * sy / m) / (m - 1.0) / measure;
    let value = cov(sx, sy, sxy, nf);
    let leave_out: Vec<f64> = inner
        .iter()
        .zip(whole)
        .map(|(x, y)| cov(sx - x, sy - y, sxy - x * y, nf - 1.0))
        .collect();
    let mean_lo = leave_out.iter().sum::<f64>() / nf;
    let se =
        ((nf - 1.0) / nf * leave_out.iter().map(|v| (v - mean_lo).powi(2)).sum::<f64>()).sqrt();
    Ok(EstimateReport::new(value, se, n))
}

/// Binned pair correlation estimates plus the exact-distance pair rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcfEstimate {
    pub bins: Vec<(f64, f64, EstimateReport)>,
    /// Pairs per unit length at the distance of full leaf cells.
    pub atom_rate: EstimateReport,
}

/// Pair correlation of `η` over bins `(a, b]`, using points inside the window
/// eroded by `erosion` on both sides with translation correction. Pairs
/// bounding a full leaf cell are removed from the bins and counted as atoms.
pub fn estimate_pcf(
    tess: &[Tessellation1D],
    bins: &[(f64, f64)],
    max_lag: f64,
    erosion: f64,
) -> Result<PcfEstimate, StatsError> {
    if tess.len() < 30 {
        return Err(StatsError::TooFew {
            need: 30,
            got: tess.len(),
        });
    }
    for &(a, b) in bins {
        if !(a >= 0.0 && b > a && b <= max_lag) {
            return Err(StatsError::BadBin(a, b));
        }
    }
    let per: Vec<(Vec<f64>, f64)> = tess
        .par_iter()
        .map(|t| {
            let (lo, hi) = (erosion, t.length - erosion);
            let len = hi - lo;
            let pts: Vec<f64> = t
                .eta
                .iter()
                .copied()
                .filter(|&x| x >= lo && x <= hi)
                .collect();
            let rho = pts.len() as f64 / len;
            let atoms: HashSet<(u64, u64)> = t
                .proper_cells()
                .filter(|c| c.full && c.start >= lo && c.end <= hi)
                .map(|c| (c.start.to_bits(), c.end.to_bits()))
                .collect();
            let mut counts = vec![0usize; bins.len()];
            for (i, &x) in pts.iter().enumerate() {
                for &y in &pts[i + 1..] {
                    let d = y - x;
                    if d > max_lag {
                        break;
                    }
                    if atoms.contains(&(x.to_bits(), y.to_bits())) {
                        continue;
                    }
                    for (k, &(a, b)) in bins.iter().enumerate() {
                        if d > a && d <= b {
                            counts[k] += 1;
                        }
                    }
                }
            }
            let g: Vec<f64> = bins
                .iter()
                .zip(&counts)
                .map(|(&(a, b), &c)| {
                    let mid = 0.5 * (a + b);
                    c as f64 / ((b - a) * (len - mid) * rho * rho)
                })
                .collect();
            let atom_len = t
                .proper_cells()
                .filter(|c| c.full)
                .map(|c| c.len())
                .fold(0.0, f64::max);
            (g, atoms.len() as f64 / (len - atom_len))
        })
        .collect();
    let bins_out = bins
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| {
            let xs: Vec<f64> = per.iter().map(|p| p.0[k]).collect();
            (a, b, mean_report(&xs))
        })
        .collect();
    let atoms: Vec<f64> = per.iter().map(|p| p.1).collect();
    Ok(PcfEstimate {
        bins: bins_out,
        atom_rate: mean_report(&atoms),
    })
}

/// Exponential decay fit of a space-time covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceFit {
    /// Per-lag `Cov/measure`.
    pub lags: Vec<(f64, EstimateReport)>,
    pub rate: f64,
    /// Delete-one jackknife over replicates.
    pub rate_stderr: f64,
    pub intercept: f64,
    pub intercept_stderr: f64,
}

/// Covariance per unit measure at lag `lags[k] = k_steps[k]·dt`, using all
/// pairs of grid times within each replicate. `series[r][i]` is the total
/// of replicate `r` at grid time `i·dt`.
fn lag_covariances(
    series: &[Vec<f64>],
    steps: &[usize],
    measure: f64,
    skip: Option<usize>,
) -> Vec<(f64, f64)> {
    let (mut sum, mut cnt) = (0.0, 0usize);
    for (r, s) in series.iter().enumerate() {
        if Some(r) == skip {
            continue;
        }
        sum += s.iter().sum::<f64>();
        cnt += s.len();
    }
    let mean = sum / cnt as f64;
    let reps: Vec<Vec<f64>> = series
        .iter()
        .enumerate()
        .filter(|(r, _)| Some(*r) != skip)
        .map(|(_, s)| {
            steps
                .iter()
                .map(|&k| {
                    let m = s.len() - k;
                    (0..m)
                        .map(|i| (s[i] - mean) * (s[i + k] - mean))
                        .sum::<f64>()
                        / m as f64
                        / measure
                })
                .collect()
        })
        .collect();
    let n = reps.len() as f64;
    (0..steps.len())
        .map(|j| {
            let xs: Vec<f64> = reps.iter().map(|r| r[j]).collect();
            let m = xs.iter().sum::<f64>() / n;
            let se = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
            (m, se)
        })
        .collect()
}

/// Weighted least squares of `log c` on the lag; returns (rate, intercept).
fn wls_fit(lags: &[f64], covs: &[(f64, f64)]) -> Option<(f64, f64)> {
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut used = 0;
    for (&l, &(c, se)) in lags.iter().zip(covs) {
        if !(c > 0.0) || !(se > 0.0) {
            continue;
        }
        let w = (c / se).powi(2);
        let y = c.ln();
        sw += w;
        sx += w * l;
        sy += w * y;
        sxx += w * l * l;
        sxy += w * l * y;
        used += 1;
    }
    if used < 2 {
        return None;
    }
    let det = sw * sxx - sx * sx;
    let slope = (sw * sxy - sx * sy) / det;
    let icpt = (sxx * sy - sx * sxy) / det;
    Some((-slope, icpt))
}

/// Fits `Cov(X_t, X_{t+ℓ})/measure ≈ e^{a − rate·ℓ}` over lags `step·dt`.
pub fn estimate_time_covariance(
    series: &[Vec<f64>],
    dt: f64,
    steps: &[usize],
    measure: f64,
) -> Result<CovarianceFit, StatsError> {
    let n = series.len();
    if n < 100 {
        return Err(StatsError::TooFew { need: 100, got: n });
    }
    let lags: Vec<f64> = steps.iter().map(|&k| k as f64 * dt).collect();
    let full = lag_covariances(series, steps, measure, None);
    let (rate, icpt) = wls_fit(&lags, &full).ok_or(StatsError::NoPositiveCovariance)?;
    let jack: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|r| {
            wls_fit(&lags, &lag_covariances(series, steps, measure, Some(r)))
                .unwrap_or((rate, icpt))
        })
        .collect();
    let nf = n as f64;
    let jm = jack
        .iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0 / nf, a.1 + b.1 / nf));
    let rate_se = ((nf - 1.0) / nf * jack.iter().map(|j| (j.0 - jm.0).powi(2)).sum::<f64>()).sqrt();
    let icpt_se = ((nf - 1.0) / nf * jack.iter().map(|j| (j.1 - jm.1).powi(2)).sum::<f64>()).sqrt();
    Ok(CovarianceFit {
        lags: lags
            .iter()
            .zip(&full)
            .map(|(&l, &(c, se))| (l, EstimateReport::new(c, se, n)))
            .collect(),
        rate,
        rate_stderr: rate_se,
        intercept: icpt,
        intercept_stderr: icpt_se,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub samples: usize,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub ks_distance: f64,
    pub skew_limit: f64,
    pub kurtosis_limit: f64,
    pub ks_limit: f64,
    pub pass: bool,
}

/// Moment and Kolmogorov–Smirnov checks against the fitted normal.
pub fn normality_check(samples: &[f64]) -> Result<NormalityReport, StatsError> {
    let n = samples.len();
    if n < 1000 {
        return Err(StatsError::TooFew { need: 1000, got: n });
    }
    let nf = n as f64;
    let m = samples.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in samples {
        let d = x - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    let skew = m3 / m2.powf(1.5);
    let kurt = m4 / (m2 * m2) - 3.0;
    let sd = (m2 * nf / (nf - 1.0)).sqrt();
    let normal = Normal::new(m, sd).expect("positive spread");
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut ks: f64 = 0.0;
    for (i, x) in sorted.iter().enumerate() {
        let f = normal.cdf(*x);
        ks = ks
            .max((f - i as f64 / nf).abs())
            .max(((i + 1) as f64 / nf - f).abs());
    }
    let (sl, kl, kd) = (
        4.0 * (6.0 / nf).sqrt(),
        4.0 * (24.0 / nf).sqrt(),
        ks_limit(n),
    );
    Ok(NormalityReport {
        samples: n,
        skewness: skew,
        excess_kurtosis: kurt,
        ks_distance: ks,
        skew_limit: sl,
        kurtosis_limit: kl,
        ks_limit: kd,
        pass: skew.abs() < sl && kurt.abs() < kl && ks < kd,
    })
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_limit(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

/// KS distance between a sample and a continuous distribution function.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let nf = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |acc: f64, (i, &x)| {
        let f = cdf(x);
        acc.max((f - i as f64 / nf).abs())
            .max(((i + 1) as f64 / nf - f).abs())
    })
}

/// Mean, binomial standard error and target check for an indicator sample.
pub fn proportion_report(hits: usize, n: usize) -> EstimateReport {
    let p = hits as f64 / n as f64;
    EstimateReport::new(p, (p * (1.0 - p) / n as f64).sqrt(), n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Purpose};
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn verdicts() {
        let r = EstimateReport::new(2.01, 0.005, 100).with_target(2.0, 3.0);
        assert_eq!(r.verdict, Verdict::Pass);
        assert_abs_diff_eq!(r.z_score.unwrap(), 2.0, epsilon = 1e-9);
        let r = EstimateReport::new(2.02, 0.005, 100).with_target(2.0, 3.0);
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(EstimateReport::new(1.0, 0.1, 3).verdict, Verdict::NoTarget);
    }

    #[test]
    fn cross_covariance_of_identical_totals_is_variance() {
        let mut rng = substream(3, 0, Purpose::Custom(0));
        let xs: Vec<f64> = (0..500).map(|_| rng.random::<f64>()).collect();
        let a = estimate_variance(&xs, 2.0).unwrap();
        let b = estimate_cross_covariance(&xs, &xs, 2.0).unwrap();
        assert_abs_diff_eq!(a.value, b.value, epsilon = 1e-12);
        assert_abs_diff_eq!(a.stderr, b.stderr, epsilon = 1e-9);
    }

    #[test]
    fn constant_totals_have_zero_variance() {
        let r = estimate_variance(&[5.0; 200], 10.0).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.stderr, 0.0);
    }

    #[test]
    fn jackknife_matches_normal_theory() {
        // for normal data se(s²) ≈ s² √(2/(n−1))
        let mut rng = substream(1, 0, Purpose::Custom(7));
        let xs: Vec<f64> = (0..4000)
            .map(|_| 3.0 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        let r = estimate_variance(&xs, 1.0).unwrap();
        assert!((r.value - 9.0).abs() < 4.0 * r.stderr);
        assert_abs_diff_eq!(r.stderr, 9.0 * (2.0f64 / 3999.0).sqrt(), epsilon = 0.03);
    }

    #[test]
    fn normal_self_test() {
        let mut rng = substream(2, 0, Purpose::Custom(7));
        let xs: Vec<f64> = (0..10_000)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        assert!(normality_check(&xs).unwrap().pass);
        let ex: Vec<f64> = (0..10_000).map(|_| -(rng.random::<f64>()).ln()).collect();
        assert!(!normality_check(&ex).unwrap().pass);
        assert!(normality_check(&xs[..10]).is_err());
    }

    #[test]
    fn ou_fit_recovers_rate() {
        // exact AR(1) sampling of an OU process with rate 1.5 and unit variance
        let dt = 0.25;
        let phi = (-1.5f64 * dt).exp();
        let series: Vec<Vec<f64>> = (0..400)
            .map(|r| {
                let mut rng = substream(3, r, Purpose::Custom(7));
                let mut x: f64 = StandardNormal.sample(&mut rng);
                (0..33)
                    .map(|_| {
                        let v = x;
                        let e: f64 = StandardNormal.sample(&mut rng);
                        x = phi * x + (1.0 - phi * phi).sqrt() * e;
                        v
                    })
                    .collect()
            })
            .collect();
        let steps: Vec<usize> = (0..=8).collect();
        let fit = estimate_time_covariance(&series, dt, &steps, 1.0).unwrap();
        assert!((fit.rate - 1.5).abs() < 4.0 * fit.rate_stderr, "{fit:?}");
        assert!(fit.intercept.abs() < 4.0 * fit.intercept_stderr + 0.05);
    }

    #[test]
    fn stderr_shrinks_like_root_n() {
        let mut rng = substream(4, 0, Purpose::Custom(7));
        let xs: Vec<f64> = (0..8000).map(|_| rng.random::<f64>()).collect();
        let a = mean_report(&xs[..2000]).stderr;
        let b = mean_report(&xs[..8000]).stderr;
        assert!((a / b / 2.0 - 1.0).abs() < 0.2);
    }
}
