use serde::Serialize;
use statrs::function::beta::beta_reg;

use crate::error::{invalid, Result};
use crate::snc::DelayCcdf;

pub const DEFAULT_CONFIDENCE: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CcdfPoint {
    pub delay_ms: f64,
    /// Fraction of samples strictly greater than `delay_ms`.
    pub fraction: f64,
    /// One-sided Clopper-Pearson upper confidence limit on the fraction.
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalCcdf {
    pub samples: usize,
    pub confidence: f64,
    pub points: Vec<CcdfPoint>,
}

/// One-sided upper limit for a binomial proportion with `k` successes out of
/// `n`: the `confidence` quantile of Beta(k + 1, n - k), or 1 when `k == n`.
pub fn clopper_pearson_upper(k: u64, n: u64, confidence: f64) -> f64 {
    if n == 0 || k >= n {
        return 1.0;
    }
    let (a, b) = ((k + 1) as f64, (n - k) as f64);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if beta_reg(a, b, mid) < confidence {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    hi
}

pub fn empirical_ccdf(delays: &[f64], grid: &[f64]) -> EmpiricalCcdf {
    empirical_ccdf_with_confidence(delays, grid, DEFAULT_CONFIDENCE)
}

pub fn empirical_ccdf_with_confidence(delays: &[f64], grid: &[f64], confidence: f64) -> EmpiricalCcdf {
    let mut sorted = delays.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let points = grid
        .iter()
        .map(|&x| {
            let k = n - sorted.partition_point(|&d| d <= x);
            let fraction = if n == 0 { 0.0 } else { k as f64 / n as f64 };
            CcdfPoint {
                delay_ms: x,
                fraction,
                upper: clopper_pearson_upper(k as u64, n as u64, confidence).max(fraction),
            }
        })
        .collect();
    EmpiricalCcdf {
        samples: n,
        confidence,
        points,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub delay_ms: f64,
    pub bound: f64,
    pub fraction: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceReport {
    /// Grid points compared (bound at or above the floor).
    pub checked: usize,
    pub violations: Vec<Violation>,
}

impl DominanceReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Grid points where the empirical upper confidence limit exceeds the
/// analytic bound. Points whose bound is below `min_bound` are skipped.
/// Both tables must share the same delay grid.
pub fn dominance_report(emp: &EmpiricalCcdf, bound: &DelayCcdf, min_bound: f64) -> Result<DominanceReport> {
    if emp.points.len() != bound.points.len() {
        return Err(invalid("delay_grid", "empirical and bound tables differ in length"));
    }
    let mut checked = 0;
    let mut violations = Vec::new();
    for (e, b) in emp.points.iter().zip(&bound.points) {
        if e.delay_ms != b.delay_ms {
            return Err(invalid("delay_grid", format!("grid mismatch at {} vs {}", e.delay_ms, b.delay_ms)));
        }
        if b.prob < min_bound {
            continue;
        }
        checked += 1;
        if e.upper > b.prob {
            violations.push(Violation {
                delay_ms: e.delay_ms,
                bound: b.prob,
                fraction: e.fraction,
                upper: e.upper,
            });
        }
    }
    Ok(DominanceReport { checked, violations })
}
