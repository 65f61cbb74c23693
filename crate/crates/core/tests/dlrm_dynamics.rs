use deadleaves::dlrm::{
    evolve_xi, Dlrm, DlrmEvolution, LeafLaw, MarkKind, Realization, TestFunction,
};
use deadleaves::grains::GrainLaw1D;
use deadleaves::rng::{Purpose, StreamKey};
use deadleaves::stats::{mean_report, replicate_map};

fn model(mark: MarkKind) -> Dlrm {
    Dlrm::new(LeafLaw::D1(GrainLaw1D::fixed_length(1.0)), mark).unwrap()
}

/// Slope of the least-squares line through `(x, y)` and its standard error.
fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, c)| (c - my - b * (a - mx)).powi(2))
        .sum();
    (b, (rss / (n - 2.0) / sxx).sqrt())
}

#[test]
fn seeds_fill_up_from_an_empty_start() {
    let m = model(MarkKind::Seeds {
        q: 0.5,
        offsets: vec![vec![0.0]],
    });
    let (n, reps) = (200.0, 300);
    let grid = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0];
    let f = TestFunction::indicator(&[0.0], &[n]);
    let series: Vec<Vec<f64>> = replicate_map(reps, |r| {
        let key = StreamKey::new(31, r, Purpose::Arrivals);
        let mut ev = DlrmEvolution::empty(&m, &[0.0], &[n], key).unwrap();
        let mut rng = key.with_purpose(Purpose::ForwardArrivals).rng();
        evolve_xi(&mut ev, &f, &grid, &mut rng).unwrap()
    });
    let alpha = m.intensity().unwrap();
    let rate = m.cover_rate();
    for (k, &t) in grid.iter().enumerate() {
        let xs: Vec<f64> = series.iter().map(|s| s[k] / n).collect();
        let r = mean_report(&xs);
        let expect = alpha * (1.0 - (-rate * t).exp());
        if t == 0.0 {
            assert_eq!(r.value, 0.0);
        } else {
            assert!(
                (r.value - expect).abs() < 4.0 * r.stderr,
                "t = {t}: {} ± {} vs {expect}",
                r.value,
                r.stderr
            );
        }
    }
}

#[test]
fn conditional_mean_relaxes_at_the_cover_rate() {
    let m = model(MarkKind::Colour { p: 0.5 });
    let (n, reps, lag) = (50.0, 600, 0.5);
    let f = TestFunction::indicator(&[0.0], &[n]);
    let pairs: Vec<(f64, f64)> = replicate_map(reps, |r| {
        let key = StreamKey::new(32, r, Purpose::Arrivals);
        let real = Realization::sample(&m, &[0.0], &[n], key).unwrap();
        let mut ev = DlrmEvolution::from_realization(&real);
        let mut rng = key.with_purpose(Purpose::ForwardArrivals).rng();
        let v = evolve_xi(&mut ev, &f, &[0.0, lag], &mut rng).unwrap();
        (v[0], v[1])
    });
    let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (slope, se) = ols(&x, &y);
    let expect = (-m.cover_rate() * lag).exp();
    assert!(
        (slope - expect).abs() < 4.0 * se,
        "{slope} ± {se} vs {expect}"
    );
    // the intercept pulls towards the stationary mean
    let mean_y = mean_report(&y).value;
    let mean_x = mean_report(&x).value;
    let intercept = mean_y - slope * mean_x;
    let stationary = m.intensity().unwrap() * n;
    assert!((intercept - (1.0 - slope) * stationary).abs() < 0.2 * stationary);
}
