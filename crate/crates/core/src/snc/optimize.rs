use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::service::ServiceDistribution;

use super::bound::delay_bound_at;
use super::curves::{onoff_sac, periodic_sac, poisson_sac, service_curve, ArrivalCurve, ArrivalKind};

/// A traffic source whose arrival curve is parameterised by the same free
/// parameter `theta` as the service curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrafficModel {
    Periodic { period_ms: f64 },
    Poisson { lambda_per_ms: f64 },
    /// `lam` and `mu` enter the effective-bandwidth formula as written; `peak`
    /// is the On-state rate in packets/ms.
    OnOff { lam: f64, mu: f64, peak_per_ms: f64 },
}

impl TrafficModel {
    pub fn kind(&self) -> ArrivalKind {
        match self {
            TrafficModel::Periodic { .. } => ArrivalKind::Periodic,
            TrafficModel::Poisson { .. } => ArrivalKind::Poisson,
            TrafficModel::OnOff { .. } => ArrivalKind::OnOff,
        }
    }

    pub fn curve(&self, packet_bits: f64, theta: f64) -> Result<ArrivalCurve> {
        match *self {
            TrafficModel::Periodic { period_ms } => periodic_sac(packet_bits, period_ms),
            TrafficModel::Poisson { lambda_per_ms } => poisson_sac(lambda_per_ms, packet_bits, theta),
            TrafficModel::OnOff { lam, mu, peak_per_ms } => {
                onoff_sac(lam, mu, peak_per_ms * packet_bits, theta, packet_bits)
            }
        }
    }
}

/// Log-spaced search grid for `theta`, 1/ms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThetaGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    /// Golden-section refinement around the best grid point.
    pub refine: bool,
}

impl Default for ThetaGrid {
    fn default() -> Self {
        Self {
            min: 1e-5,
            max: 1.0,
            points: 60,
            refine: true,
        }
    }
}

impl ThetaGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.min > 0.0 && self.max >= self.min && self.max.is_finite()) {
            return Err(invalid("theta_grid", "need 0 < min <= max < inf"));
        }
        if self.points == 0 {
            return Err(invalid("theta_grid.points", "must be >= 1"));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let (lo, hi) = (self.min.ln(), self.max.ln());
        let n = self.points - 1;
        (0..=n)
            .map(|i| (lo + (hi - lo) * i as f64 / n as f64).exp())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundPoint {
    pub delay_ms: f64,
    /// Upper bound on `P{D > delay_ms}`.
    pub prob: f64,
    /// Minimising theta; `None` if no feasible theta places this delay past the
    /// curves' minimum horizontal distance (the bound is the vacuous 1).
    pub theta: Option<f64>,
}

impl BoundPoint {
    pub fn attainable(&self) -> bool {
        self.theta.is_some()
    }
}

/// Tabulated delay CCDF bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayCcdf {
    pub kind: ArrivalKind,
    pub packet_bits: f64,
    pub points: Vec<BoundPoint>,
}

/// Bound on `P{D > delay}` at one `theta`. `Ok(None)` when `theta` violates
/// stability; `Ok(Some(1.0))` when the delay lies below the horizontal
/// distance at zero shift.
pub fn bound_for_delay(
    traffic: &TrafficModel,
    dist: &ServiceDistribution,
    packet_bits: f64,
    theta: f64,
    delay_ms: f64,
) -> Result<Option<f64>> {
    let Some((ac, sc)) = feasible_curves(traffic, dist, packet_bits, theta)? else {
        return Ok(None);
    };
    let x = sc.rate * delay_ms - ac.burst;
    if x <= 0.0 {
        return Ok(Some(1.0));
    }
    let (_, prob) = delay_bound_at(&ac, &sc, x)?;
    Ok(Some(prob))
}

fn feasible_curves(
    traffic: &TrafficModel,
    dist: &ServiceDistribution,
    packet_bits: f64,
    theta: f64,
) -> Result<Option<(ArrivalCurve, super::ServiceCurve)>> {
    let ac = traffic.curve(packet_bits, theta)?;
    let sc = service_curve(dist, packet_bits, theta)?;
    if ac.rate <= sc.rate {
        Ok(Some((ac, sc)))
    } else {
        Ok(None)
    }
}

const GOLDEN_ITERS: usize = 60;

/// Minimise `f` over `[lo, hi]` in log-theta by golden-section search.
fn golden_section<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c.exp()), f(d.exp()));
    for _ in 0..GOLDEN_ITERS {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c.exp());
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d.exp());
        }
    }
    if fc <= fd {
        (c.exp(), fc)
    } else {
        (d.exp(), fd)
    }
}

/// Optimise the delay bound over `theta` for every target delay.
///
/// `delays_ms` must be non-decreasing. The returned probabilities are
/// non-increasing in delay: a bound at a smaller delay also bounds every larger
/// one, so each point carries the running minimum.
pub fn optimize_delay_ccdf(
    traffic: &TrafficModel,
    dist: &ServiceDistribution,
    packet_bits: f64,
    delays_ms: &[f64],
    grid: &ThetaGrid,
) -> Result<DelayCcdf> {
    grid.validate()?;
    if delays_ms.is_empty() {
        return Err(invalid("delay_grid", "must not be empty"));
    }
    if delays_ms.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(invalid("delay_grid", "must be non-decreasing"));
    }

    let thetas = grid.values();
    let mut feasible = Vec::with_capacity(thetas.len());
    for &theta in &thetas {
        if feasible_curves(traffic, dist, packet_bits, theta)?.is_some() {
            feasible.push(theta);
        }
    }
    if feasible.is_empty() {
        return Err(Error::Overload);
    }

    let eval = |theta: f64, delay: f64| -> f64 {
        match bound_for_delay(traffic, dist, packet_bits, theta, delay) {
            Ok(Some(p)) => p,
            _ => f64::INFINITY,
        }
    };

    let raw: Vec<BoundPoint> = delays_ms
        .par_iter()
        .map(|&delay| {
            let values: Vec<f64> = thetas.iter().map(|&t| eval(t, delay)).collect();
            let (best_idx, &best) = values
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .expect("grid is non-empty");
            let (mut theta, mut prob) = (thetas[best_idx], best);
            if grid.refine && thetas.len() > 1 && best.is_finite() && best < 1.0 {
                let lo = thetas[best_idx.saturating_sub(1)];
                let hi = thetas[(best_idx + 1).min(thetas.len() - 1)];
                let (t, p) = golden_section(|t| eval(t, delay), lo, hi);
                if p < prob {
                    theta = t;
                    prob = p;
                }
            }
            BoundPoint {
                delay_ms: delay,
                prob: prob.min(1.0),
                theta: (prob < 1.0).then_some(theta),
            }
        })
        .collect();

    let mut points = Vec::with_capacity(raw.len());
    let mut carry: Option<BoundPoint> = None;
    for p in raw {
        let next = match carry {
            Some(prev) if prev.prob < p.prob => BoundPoint {
                delay_ms: p.delay_ms,
                ..prev
            },
            _ => p,
        };
        points.push(next);
        carry = Some(next);
    }

    Ok(DelayCcdf {
        kind: traffic.kind(),
        packet_bits,
        points,
    })
}
