//! Statistics behind the `estimate` and `verify` tasks.

use crate::config::{Experiment, Law, ModelKind, Statistic};
use anyhow::{anyhow, bail, Context, Result};
use deadleaves::closedform::{self, Leaf};
use deadleaves::dlm1d::{self, EvolvingState1D};
use deadleaves::dlm2d::{self, EvolvingState2D};
use deadleaves::dlrm::{evolve_xi, DlrmEvolution, MarkKind, Realization, TestFunction};
use deadleaves::rng::{Purpose, StreamKey};
use deadleaves::stats::{self, EstimateReport, Verdict};
use serde::Serialize;

/// One comparison of an estimate with its target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub check: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub target: Option<f64>,
    pub z_score: Option<f64>,
    pub rule: String,
    pub verdict: Verdict,
}

impl Check {
    fn z(name: impl Into<String>, r: &EstimateReport, target: f64, threshold: f64) -> Self {
        let r = r.clone().with_target(target, threshold);
        Self {
            check: name.into(),
            value: r.value,
            stderr: Some(r.stderr),
            target: Some(target),
            z_score: r.z_score,
            rule: format!("|z| <= {threshold}"),
            verdict: r.verdict,
        }
    }

    fn relative(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        let ok = ((value - target) / target).abs() <= tol;
        Self {
            check: name.into(),
            value,
            stderr: None,
            target: Some(target),
            z_score: None,
            rule: format!("relative error <= {tol}"),
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        }
    }

    fn below(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            check: name.into(),
            value,
            stderr: None,
            target: Some(limit),
            z_score: None,
            rule: format!("< {limit}"),
            verdict: if value < limit {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
        }
    }

    fn info(name: impl Into<String>, r: &EstimateReport) -> Self {
        Self {
            check: name.into(),
            value: r.value,
            stderr: Some(r.stderr),
            target: None,
            z_score: None,
            rule: "none".into(),
            verdict: Verdict::NoTarget,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }
}

pub fn key(seed: u64, replicate: u64) -> StreamKey {
    StreamKey::new(seed, replicate, Purpose::Arrivals)
}

fn log_rep(name: &str, r: u64) {
    log::debug!("{name}: replicate {r} done");
}

/// Per-replicate totals over the window and over the window shrunk by the
/// dependence range of the leaves.
struct Totals {
    whole: Vec<f64>,
    inner: Option<(Vec<f64>, f64)>,
}

fn whole_indicator(exp: &Experiment) -> TestFunction {
    let w = &exp.config.window;
    TestFunction::indicator(&vec![0.0; w.len()], w)
}

fn range(exp: &Experiment) -> f64 {
    let r = match &exp.law {
        Some(Law::D1(l)) => l.radius_bound(),
        Some(Law::D2(l)) => l.radius_bound(),
        None => 0.0,
    };
    2.0 * r
}

fn inner_box(exp: &Experiment) -> Option<(Vec<f64>, Vec<f64>)> {
    let r = range(exp);
    let w = &exp.config.window;
    if w.iter().all(|&s| s > 2.0 * r + 1e-9) {
        Some((vec![r; w.len()], w.iter().map(|s| s - r).collect()))
    } else {
        None
    }
}

fn totals(exp: &Experiment, seed: u64) -> Result<Totals> {
    let n = exp.config.replicates;
    let name = &exp.config.name;
    let inner = inner_box(exp);
    let inner_measure = inner
        .as_ref()
        .map(|(lo, hi)| lo.iter().zip(hi).map(|(a, b)| b - a).product::<f64>());
    let rows: Vec<Result<(f64, Option<f64>)>> = match exp.config.model {
        ModelKind::Dlm1d => {
            let law = exp.law_1d().expect("validated");
            let len = exp.config.window[0];
            stats::replicate_map(n, |r| {
                let t = dlm1d::simulate(len, law, key(seed, r))?;
                log_rep(name, r);
                let i = inner
                    .as_ref()
                    .map(|(lo, hi)| t.eta_count(lo[0], hi[0]) as f64);
                Ok((t.eta.len() as f64, i))
            })
        }
        ModelKind::Dlm2d => {
            let law = exp.law_2d().expect("validated");
            let w = exp.window_2d();
            stats::replicate_map(n, |r| {
                let t = dlm2d::simulate2d(w, law, key(seed, r))?;
                log_rep(name, r);
                let i = inner
                    .as_ref()
                    .map(|_| t.boundary_length_in(&t.eroded(range(exp))));
                Ok((t.total_boundary_length, i))
            })
        }
        ModelKind::Dlrm => {
            let model = exp.dlrm.as_ref().expect("validated");
            let mut f = whole_indicator(exp);
            if let Some((lo, hi)) = &inner {
                f = f.plus(&TestFunction::indicator(lo, hi));
            }
            let w = &exp.config.window;
            let zero = vec![0.0; w.len()];
            stats::replicate_map(n, |r| {
                let real = Realization::sample(model, &zero, w, key(seed, r))?;
                let v = real.xi_boxes(&f)?;
                log_rep(name, r);
                Ok((v[0], v.get(1).copied()))
            })
        }
        ModelKind::Noodle => bail!("no totals for the noodle model"),
    };
    let rows: Vec<(f64, Option<f64>)> = rows.into_iter().collect::<Result<_>>()?;
    let whole = rows.iter().map(|r| r.0).collect();
    let inner = inner_measure.map(|m| (rows.iter().map(|r| r.1.unwrap_or(f64::NAN)).collect(), m));
    Ok(Totals { whole, inner })
}

fn asymptotic_target(exp: &Experiment) -> Result<f64> {
    Ok(match (&exp.law, &exp.dlrm) {
        (_, Some(m)) => closedform::sigma0_sq(m.leaf.as_leaf(), &m.mark)?.value,
        (Some(Law::D1(l)), None) => closedform::sigma1_sq(l)?,
        (Some(Law::D2(l)), None) => closedform::sigma2_sq(l)?.value,
        _ => bail!("no variance target"),
    })
}

fn cover_rate(exp: &Experiment) -> f64 {
    match (&exp.law, &exp.dlrm) {
        (_, Some(m)) => m.cover_rate(),
        (Some(Law::D1(l)), None) => l.lambda(),
        (Some(Law::D2(l)), None) => l.lambda(),
        _ => f64::NAN,
    }
}

/// Series of the window total at times `0, dt, …, horizon·dt`.
fn series(exp: &Experiment, seed: u64, dt: f64, horizon: usize) -> Result<Vec<Vec<f64>>> {
    let grid: Vec<f64> = (0..=horizon).map(|k| k as f64 * dt).collect();
    let until = horizon as f64 * dt;
    let name = &exp.config.name;
    let rows: Vec<Result<Vec<f64>>> = match exp.config.model {
        ModelKind::Dlm1d => {
            let law = exp.law_1d().expect("validated");
            let len = exp.config.window[0];
            stats::replicate_map(exp.config.replicates, |r| {
                let t = dlm1d::simulate(len, law, key(seed, r))?;
                let mut s = EvolvingState1D::new(&t, law, 0.0);
                let mut rng = key(seed, r).with_purpose(Purpose::ForwardArrivals).rng();
                let v = s.evolve(until, &grid, &mut rng)?;
                log_rep(name, r);
                Ok(v.into_iter().map(|c| c as f64).collect())
            })
        }
        ModelKind::Dlm2d => {
            let law = exp.law_2d().expect("validated");
            let w = exp.window_2d();
            stats::replicate_map(exp.config.replicates, |r| {
                let t = dlm2d::simulate2d(w, law, key(seed, r))?;
                let mut s = EvolvingState2D::new(&t, law, 0.0);
                let mut rng = key(seed, r).with_purpose(Purpose::ForwardArrivals).rng();
                let v = s.evolve(until, &grid, &mut rng)?;
                log_rep(name, r);
                Ok(v)
            })
        }
        ModelKind::Dlrm => {
            let model = exp.dlrm.as_ref().expect("validated");
            let f = whole_indicator(exp);
            let w = &exp.config.window;
            let zero = vec![0.0; w.len()];
            stats::replicate_map(exp.config.replicates, |r| {
                let real = Realization::sample(model, &zero, w, key(seed, r))?;
                let mut ev = DlrmEvolution::from_realization(&real);
                let mut rng = key(seed, r).with_purpose(Purpose::ForwardArrivals).rng();
                let v = evolve_xi(&mut ev, &f, &grid, &mut rng)?;
                log_rep(name, r);
                Ok(v)
            })
        }
        ModelKind::Noodle => bail!("no series for the noodle model"),
    };
    rows.into_iter().collect()
}

/// Ordinary least squares slope of `y` on `x` with its standard error.
fn ols_slope(x: &[f64], y: &[f64]) -> EstimateReport {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let rss: f64 = x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
    EstimateReport::new(b, (rss / (n - 2.0) / sxx).sqrt(), x.len())
}

/// Runs one statistic with the given seed.
pub fn compute(exp: &Experiment, stat: &Statistic, seed: u64) -> Result<Vec<Check>> {
    let th = exp.config.threshold;
    let n = exp.config.replicates;
    let name = &exp.config.name;
    let measure = exp.window_measure();
    let mut out = Vec::new();
    match stat {
        Statistic::BoundaryIntensity => {
            let t = totals(exp, seed)?;
            let per: Vec<(f64, f64)> = t.whole.iter().map(|&x| (x, measure)).collect();
            let r = stats::estimate_intensity(&per)?;
            let target = match &exp.law {
                Some(Law::D1(l)) => closedform::intensity_1d(l),
                Some(Law::D2(l)) => closedform::boundary_intensity_2d(l),
                None => unreachable!(),
            };
            out.push(Check::z("boundary_intensity", &r, target, th));
        }
        Statistic::PairCorrelation { bin_width, max_lag } => {
            let law = exp.law_1d().expect("validated");
            let len = exp.config.window[0];
            let tess: Vec<_> = stats::replicate_map(n, |r| dlm1d::simulate(len, law, key(seed, r)))
                .into_iter()
                .collect::<Result<_, _>>()?;
            let k = (max_lag / bin_width).round() as usize;
            let bins: Vec<(f64, f64)> = (0..k)
                .map(|i| {
                    (
                        i as f64 * bin_width,
                        ((i + 1) as f64 * bin_width).min(*max_lag),
                    )
                })
                .collect();
            let est = stats::estimate_pcf(&tess, &bins, *max_lag, 0.0)?;
            for (a, b, r) in &est.bins {
                let mut err = None;
                let mean = deadleaves::quad::integrate(
                    |z| {
                        closedform::pcf_1d(law, z).unwrap_or_else(|e| {
                            err = Some(e);
                            f64::NAN
                        })
                    },
                    *a,
                    *b,
                    1e-10,
                ) / (b - a);
                if let Some(e) = err {
                    return Err(e.into());
                }
                out.push(Check::z(format!("pcf({a:.3},{b:.3}]"), r, mean, th));
            }
            let atoms: f64 = closedform::pair_atoms_1d(law)?
                .iter()
                .filter(|a| a.distance <= *max_lag)
                .map(|a| a.rate)
                .sum();
            out.push(Check::z("pair_atom_rate", &est.atom_rate, atoms, th));
        }
        Statistic::AsymptoticVariance => {
            let t = totals(exp, seed)?;
            let target = asymptotic_target(exp)?;
            let r = stats::estimate_variance(&t.whole, measure)?;
            out.push(Check::z("window_variance", &r, target, th));
            if let Some((inner, m)) = &t.inner {
                let c = stats::estimate_cross_covariance(inner, &t.whole, *m)?;
                out.push(Check::z("edge_corrected_variance", &c, target, th));
            }
            if let (Some(Law::D2(l)), None) = (&exp.law, &exp.dlrm) {
                let general = closedform::sigma0_sq(Leaf::D2(l), &MarkKind::BoundarySurface)?.value;
                out.push(Check::relative(
                    "sigma_identity",
                    closedform::sigma2_sq(l)?.value,
                    general,
                    1e-8,
                ));
            }
        }
        Statistic::IntervalLaws => {
            let law = exp.law_1d().expect("validated");
            let len = exp.config.window[0];
            let rows: Vec<Result<(f64, f64)>> = stats::replicate_map(n, |r| {
                let t = dlm1d::simulate(len, law, key(seed, r))?;
                let mut rng = key(seed, r).with_purpose(Purpose::Selection).rng();
                Ok((
                    dlm1d::cell_length_at_origin(&t)?,
                    dlm1d::typical_interval_sample(&t, &mut rng)?,
                ))
            });
            let rows: Vec<(f64, f64)> = rows.into_iter().collect::<Result<_>>()?;
            let laws = [
                (
                    "exposed",
                    rows.iter().map(|r| r.0).collect::<Vec<_>>(),
                    closedform::exposed_interval_law(law)?,
                ),
                (
                    "typical",
                    rows.iter().map(|r| r.1).collect(),
                    closedform::typical_interval_law(law)?,
                ),
            ];
            for (label, xs, il) in laws {
                let atoms = il.atoms();
                let is_atom = |x: f64| {
                    atoms
                        .iter()
                        .any(|&(h, _)| (x - h).abs() <= 1e-9 * h.max(1.0))
                };
                for &(h, mass) in &atoms {
                    let hits = xs
                        .iter()
                        .filter(|&&x| (x - h).abs() <= 1e-9 * h.max(1.0))
                        .count();
                    out.push(Check::z(
                        format!("{label}_atom_at_{h}"),
                        &stats::proportion_report(hits, xs.len()),
                        mass,
                        th,
                    ));
                }
                let cont: Vec<f64> = xs.iter().copied().filter(|&x| !is_atom(x)).collect();
                if il.continuous_mass() > 0.0 && !cont.is_empty() {
                    let d = stats::ks_distance(&cont, |x| il.continuous_cdf(x));
                    out.push(Check::below(
                        format!("{label}_continuous_ks"),
                        d,
                        stats::ks_limit(cont.len()),
                    ));
                }
            }
        }
        Statistic::Vacancy { h } => {
            let law = exp.law_1d().expect("validated");
            let len = exp.config.window[0];
            let origin = 0.5 * (len - h);
            let hits: Vec<Result<bool>> = stats::replicate_map(n, |r| {
                let t = dlm1d::simulate(len, law, key(seed, r))?;
                Ok(dlm1d::vacancy_indicator(&t, *h, origin)?)
            });
            let hits = hits.into_iter().collect::<Result<Vec<_>>>()?;
            let r = stats::proportion_report(hits.iter().filter(|&&b| b).count(), n);
            out.push(Check::z(
                format!("vacancy({h})"),
                &r,
                closedform::vacancy(law, *h)?,
                th,
            ));
        }
        Statistic::TimeCovariance { dt, lags, horizon } => {
            let s = series(exp, seed, *dt, *horizon)?;
            let steps: Vec<usize> = (0..=*lags).collect();
            let fit = stats::estimate_time_covariance(&s, *dt, &steps, measure)?;
            let rate = EstimateReport::new(fit.rate, fit.rate_stderr, n);
            out.push(Check::z("decay_rate", &rate, cover_rate(exp), th));
            out.push(Check::z(
                "lag0_covariance",
                &fit.lags[0].1,
                asymptotic_target(exp)?,
                th,
            ));
            for (l, r) in &fit.lags[1..] {
                out.push(Check::info(format!("covariance_lag_{l}"), r));
            }
        }
        Statistic::BranchPoints { cell_tolerance } => {
            let law = exp.law_2d().expect("validated");
            let w = exp.window_2d();
            let rows: Vec<Result<(f64, f64)>> = stats::replicate_map(n, |r| {
                let t = dlm2d::simulate2d(w, law, key(seed, r))?;
                log_rep(name, r);
                Ok((t.branch_points.len() as f64, t.cells_in(&w) as f64))
            });
            let rows: Vec<(f64, f64)> = rows.into_iter().collect::<Result<_>>()?;
            let bp = stats::estimate_intensity(
                &rows.iter().map(|r| (r.0, measure)).collect::<Vec<_>>(),
            )?;
            let cells = stats::estimate_intensity(
                &rows.iter().map(|r| (r.1, measure)).collect::<Vec<_>>(),
            )?;
            let b3 = closedform::beta3(law)?;
            out.push(Check::z("branch_point_intensity", &bp, b3, th));
            out.push(Check::relative(
                "cell_intensity_vs_half_branch",
                cells.value,
                b3 / 2.0,
                *cell_tolerance,
            ));
            match closedform::beta1(law) {
                Ok(b1) => out.push(Check::z("cell_intensity", &cells, b1, th)),
                Err(_) => out.push(Check::info("cell_intensity", &cells)),
            }
        }
        Statistic::MarkIntensity => {
            let t = totals(exp, seed)?;
            let per: Vec<(f64, f64)> = t.whole.iter().map(|&x| (x, measure)).collect();
            let r = stats::estimate_intensity(&per)?;
            let model = exp.dlrm.as_ref().expect("validated");
            out.push(Check::z(
                format!("{}_intensity", model.mark.name()),
                &r,
                model.intensity()?,
                th,
            ));
        }
        Statistic::Normality => {
            let t = totals(exp, seed)?;
            let rep = stats::normality_check(&t.whole)?;
            out.push(Check::below(
                "abs_skewness",
                rep.skewness.abs(),
                rep.skew_limit,
            ));
            out.push(Check::below(
                "abs_excess_kurtosis",
                rep.excess_kurtosis.abs(),
                rep.kurtosis_limit,
            ));
            out.push(Check::below("ks_distance", rep.ks_distance, rep.ks_limit));
        }
        Statistic::Connectivity { max_fraction } => {
            let law = exp.law_2d().expect("validated");
            let w = exp.window_2d();
            let rows: Vec<Result<usize>> = stats::replicate_map(n, |r| {
                let t = dlm2d::simulate2d(w, law, key(seed, r))?;
                log_rep(name, r);
                Ok(t.connectivity().isolated)
            });
            let rows: Vec<usize> = rows.into_iter().collect::<Result<_>>()?;
            let hit = rows.iter().filter(|&&k| k > 0).count();
            let r = stats::proportion_report(hit, n);
            out.push(Check::below(
                "isolated_component_fraction",
                r.value,
                *max_fraction,
            ));
        }
        Statistic::ConditionalMean { lag } => {
            let model = exp.dlrm.as_ref().expect("validated");
            let f = whole_indicator(exp);
            let w = &exp.config.window;
            let zero = vec![0.0; w.len()];
            let rows: Vec<Result<(f64, f64)>> = stats::replicate_map(n, |r| {
                let real = Realization::sample(model, &zero, w, key(seed, r))?;
                let mut ev = DlrmEvolution::from_realization(&real);
                let mut rng = key(seed, r).with_purpose(Purpose::ForwardArrivals).rng();
                let v = evolve_xi(&mut ev, &f, &[0.0, *lag], &mut rng)?;
                Ok((v[0], v[1]))
            });
            let rows: Vec<(f64, f64)> = rows.into_iter().collect::<Result<_>>()?;
            let x: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let y: Vec<f64> = rows.iter().map(|r| r.1).collect();
            let slope = ols_slope(&x, &y);
            out.push(Check::z(
                "regression_slope",
                &slope,
                (-model.cover_rate() * lag).exp(),
                th,
            ));
        }
        Statistic::Poincare { a, b, samples } => {
            let mut rng = StreamKey::new(seed, 0, Purpose::Noodle).rng();
            let e = deadleaves::noodle::poincare_mc(&a.build()?, &b.build()?, *samples, &mut rng)?;
            out.push(Check::z(
                "kinematic_crossings",
                &e.report,
                e.report.target.unwrap_or(f64::NAN),
                th,
            ));
            out.push(Check::info(
                "touch_fraction",
                &stats::proportion_report(e.touches as usize, *samples),
            ));
        }
        Statistic::Buffon {
            curve,
            spacing,
            samples,
        } => {
            let mut rng = StreamKey::new(seed, 0, Purpose::Noodle).rng();
            let e = deadleaves::noodle::buffon_noodle_mc(
                &curve.build()?,
                *spacing,
                *samples,
                &mut rng,
            )?;
            out.push(Check::z(
                "mean_line_crossings",
                &e.report,
                e.report.target.unwrap_or(f64::NAN),
                th,
            ));
        }
    }
    if out.iter().any(|c| !c.value.is_finite()) {
        return Err(anyhow!("non-finite estimate")).context(stat.name());
    }
    Ok(out)
}
