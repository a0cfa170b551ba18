mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use common::{convolve_by_quadrature, rel_err};
use linkdelay::empirical::LinkConfig;
use linkdelay::service::TimingConstants;
use linkdelay::snc::{self, optimize_delay_ccdf, ThetaGrid, TrafficModel};
use linkdelay::{Error, ServiceDistribution};

/// Effective bandwidth `ln E[exp(theta A(t))] / (theta t)` of a stationary
/// two-state fluid source, estimated from independent windows.
fn simulated_effective_bandwidth(to_on: f64, to_off: f64, peak: f64, theta: f64, window: f64, n: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let leave_on = Exp::new(to_off).unwrap();
    let leave_off = Exp::new(to_on).unwrap();
    let p_on = to_on / (to_on + to_off);
    let mut exps = Vec::with_capacity(n);
    for _ in 0..n {
        let mut on = rng.random::<f64>() < p_on;
        let (mut t, mut on_time) = (0.0, 0.0);
        while t < window {
            let stay = if on { leave_on.sample(&mut rng) } else { leave_off.sample(&mut rng) };
            let end = (t + stay).min(window);
            if on {
                on_time += end - t;
            }
            t = end;
            on = !on;
        }
        exps.push(theta * peak * on_time);
    }
    let m = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = exps.iter().map(|e| (e - m).exp()).sum::<f64>() / n as f64;
    (m + mean.ln()) / (theta * window)
}

#[test]
fn onoff_effective_bandwidth_matches_monte_carlo() {
    // the formula's `lam` behaves as the Off->On rate
    let (lam, mu, peak, theta) = (0.03, 0.02, 160.0, 0.01);
    let formula = snc::onoff_effective_bandwidth(lam, mu, peak, theta).unwrap();
    let mc = simulated_effective_bandwidth(lam, mu, peak, theta, 200.0, 200_000);
    assert!(rel_err(mc, formula) < 0.05, "monte carlo {mc} vs formula {formula}");
}

#[test]
fn convolve_matches_quadrature_examples() {
    assert!(rel_err(snc::convolve_bounds(1.0, 1.0, 1.0), convolve_by_quadrature(1.0, 1.0, 1.0)) < 1e-6);
    assert!(rel_err(snc::convolve_bounds(2.0, 1.0, 3.0), convolve_by_quadrature(2.0, 1.0, 3.0)) < 1e-6);
}

#[test]
fn deterministic_periodic_bound_matches_closed_form() {
    // atom service tau: P{D > d} <= exp(-theta (d - tau)), minimised at the largest theta
    let cfg = LinkConfig::default();
    let dist = ServiceDistribution::new(&cfg, &TimingConstants::default(), 0.0).unwrap();
    let tau = dist.mean();
    let grid = ThetaGrid::default();
    let delays: Vec<f64> = (0..40).map(|i| tau + 0.25 * f64::from(i)).collect();
    let b = optimize_delay_ccdf(&TrafficModel::Periodic { period_ms: 50.0 }, &dist, 400.0, &delays, &grid).unwrap();
    for p in &b.points {
        let want = (-grid.max * (p.delay_ms - tau)).exp();
        assert!(rel_err(p.prob, want) < 0.01, "{} vs {want} at {}", p.prob, p.delay_ms);
    }
    assert!(b.points.windows(2).all(|w| w[1].prob <= w[0].prob));
}

#[test]
fn overload_is_reported() {
    let dist = ServiceDistribution::new(&LinkConfig::default(), &TimingConstants::default(), 0.1).unwrap();
    let r = optimize_delay_ccdf(
        &TrafficModel::Poisson { lambda_per_ms: 1.0 },
        &dist,
        400.0,
        &[10.0, 20.0],
        &ThetaGrid::default(),
    );
    assert_eq!(r, Err(Error::Overload));
}
