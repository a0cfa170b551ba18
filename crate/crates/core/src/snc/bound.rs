use crate::error::{Error, Result};

use super::curves::{ArrivalCurve, Bounding, ServiceCurve};

/// Maximum horizontal distance between `alpha + x` and `beta` for affine
/// curves: `(burst + x) / R`, attained at `t = 0` under stability.
pub fn horizontal_distance(ac: &ArrivalCurve, x: f64, sc: &ServiceCurve) -> Result<f64> {
    if !(ac.rate <= sc.rate) {
        return Err(Error::StabilityViolation {
            arrival_rate: ac.rate,
            service_rate: sc.rate,
        });
    }
    Ok((ac.burst + x) / sc.rate)
}

/// Horizontal distance for arbitrary non-decreasing curves, scanning `t` over
/// `[0, horizon]` in steps of `step` and solving `beta(t + d) >= alpha(t) + x`
/// for the smallest `d` by bisection. Returns `None` when `beta` never catches
/// up within `horizon` past the scan.
pub fn horizontal_distance_numeric<A, B>(alpha: A, beta: B, x: f64, horizon: f64, step: f64) -> Option<f64>
where
    A: Fn(f64) -> f64,
    B: Fn(f64) -> f64,
{
    let mut worst = 0.0f64;
    let mut t = 0.0;
    while t <= horizon {
        let target = alpha(t) + x;
        if beta(t) < target {
            let mut hi = step.max(f64::EPSILON);
            while beta(t + hi) < target {
                hi *= 2.0;
                if hi > 2.0 * horizon + 1.0 {
                    return None;
                }
            }
            let mut lo = 0.0;
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if beta(t + mid) >= target {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            worst = worst.max(hi);
        }
        t += step;
    }
    Some(worst)
}

/// `1 - (1 - f) * (1 - g)(x)` (Stieltjes convolution) for `f = e^{-a x}`,
/// `g = e^{-b x}`:
///
/// ```text
/// (a e^{-bx} - b e^{-ax}) / (a - b)   a != b
/// (1 + a x) e^{-ax}                   a == b
/// ```
///
/// Evaluated as `e^{-bx} (1 + b x phi((a - b) x))` with `a >= b` and
/// `phi(z) = (1 - e^{-z}) / z`, which is continuous through `a == b`.
pub fn convolve_bounds(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let (a, b) = if a >= b { (a, b) } else { (b, a) };
    let z = (a - b) * x;
    let phi = if z == 0.0 { 1.0 } else { -(-z).exp_m1() / z };
    ((-b * x).exp() * (1.0 + b * x * phi)).clamp(0.0, 1.0)
}

/// Delay bound for a shift of `x` bits: the horizontal distance and the
/// probability that the delay exceeds it.
pub fn delay_bound_at(ac: &ArrivalCurve, sc: &ServiceCurve, x: f64) -> Result<(f64, f64)> {
    let delay = horizontal_distance(ac, x, sc)?;
    let prob = match ac.bounding {
        Bounding::Deterministic => sc.shortfall_probability(x),
        Bounding::Exponential { decay } => convolve_bounds(decay, sc.decay(), x),
    };
    Ok((delay, prob.clamp(0.0, 1.0)))
}
