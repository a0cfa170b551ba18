//! Per-packet service time of the retransmitting link.
//!
//! A packet is transmitted until it is acknowledged or `N_maxTries` attempts
//! have failed. With i.i.d. attempt errors of probability `p_e`, the attempt
//! count is truncated-geometric and each outcome maps to one fixed duration:
//!
//! ```text
//! delivered at attempt k:  t_spi + t_succ + (k - 1) * t_retry
//! dropped after N:         t_spi + t_fail + (N - 1) * t_retry
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::empirical::LinkConfig;
use crate::error::{invalid, Error, Result};

/// Largest `theta * duration` accepted by [`ServiceDistribution::mgf`].
pub const MGF_EXPONENT_LIMIT: f64 = 700.0;

/// Radio and MAC timing constants, ms unless noted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingConstants {
    /// One-time SPI bus load of a frame.
    pub t_spi_ms: f64,
    /// Rx/Tx turnaround.
    pub t_tr_ms: f64,
    /// Mean initial backoff.
    pub t_bo_ms: f64,
    pub t_ack_ms: f64,
    /// Maximum software ACK wait.
    pub t_wait_ack_ms: f64,
    /// PHY + MAC framing added to the payload, bytes.
    pub frame_overhead_bytes: f64,
    pub phy_rate_kbps: f64,
    /// Overrides the frame airtime computed from payload, overhead and rate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_frame_ms: Option<f64>,
}

impl Default for TimingConstants {
    fn default() -> Self {
        Self {
            t_spi_ms: 0.5,
            t_tr_ms: 0.224,
            t_bo_ms: 5.28,
            t_ack_ms: 1.96,
            t_wait_ack_ms: 8.192,
            frame_overhead_bytes: 17.0,
            phy_rate_kbps: 250.0,
            t_frame_ms: None,
        }
    }
}

impl TimingConstants {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("timing.t_spi_ms", self.t_spi_ms),
            ("timing.t_tr_ms", self.t_tr_ms),
            ("timing.t_bo_ms", self.t_bo_ms),
            ("timing.t_ack_ms", self.t_ack_ms),
            ("timing.t_wait_ack_ms", self.t_wait_ack_ms),
            ("timing.frame_overhead_bytes", self.frame_overhead_bytes),
        ];
        for (name, v) in fields {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid(name, "must be finite and >= 0"));
            }
        }
        if !(self.phy_rate_kbps > 0.0) {
            return Err(invalid("timing.phy_rate_kbps", "must be > 0"));
        }
        if let Some(t) = self.t_frame_ms {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(invalid("timing.t_frame_ms", "must be finite and >= 0"));
            }
        }
        Ok(())
    }

    /// A set with every constant zero, for degenerate checks.
    pub fn zero() -> Self {
        Self {
            t_spi_ms: 0.0,
            t_tr_ms: 0.0,
            t_bo_ms: 0.0,
            t_ack_ms: 0.0,
            t_wait_ack_ms: 0.0,
            frame_overhead_bytes: 0.0,
            phy_rate_kbps: 250.0,
            t_frame_ms: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceComponents {
    pub t_mac_ms: f64,
    pub t_frame_ms: f64,
    pub t_succ_ms: f64,
    pub t_fail_ms: f64,
    pub t_retry_ms: f64,
}

pub fn components(cfg: &LinkConfig, tc: &TimingConstants) -> ServiceComponents {
    // kbps == bits per ms
    let t_frame = tc
        .t_frame_ms
        .unwrap_or_else(|| (tc.frame_overhead_bytes + cfg.payload()) * 8.0 / tc.phy_rate_kbps);
    let t_mac = tc.t_tr_ms + tc.t_bo_ms;
    let t_fail = t_mac + t_frame + tc.t_wait_ack_ms;
    ServiceComponents {
        t_mac_ms: t_mac,
        t_frame_ms: t_frame,
        t_succ_ms: t_mac + t_frame + tc.t_ack_ms,
        t_fail_ms: t_fail,
        t_retry_ms: cfg.retry_delay_ms + t_fail,
    }
}

/// Service time of a packet acknowledged on attempt `attempt` (1-based).
pub fn t_ack_total(attempt: u32, sc: &ServiceComponents, t_spi_ms: f64) -> f64 {
    debug_assert!(attempt >= 1);
    t_spi_ms + sc.t_succ_ms + f64::from(attempt - 1) * sc.t_retry_ms
}

/// Service time of a packet dropped after `max_tries` unacknowledged attempts.
pub fn t_nonack_total(sc: &ServiceComponents, t_spi_ms: f64, max_tries: u32) -> f64 {
    t_spi_ms + sc.t_fail_ms + f64::from(max_tries - 1) * sc.t_retry_ms
}

/// Truncated-geometric attempt distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct AttemptPmf {
    /// `delivered[k - 1]` = P(acknowledged on attempt k).
    pub delivered: Vec<f64>,
    pub dropped: f64,
}

pub fn attempt_pmf(p_e: f64, max_tries: u32) -> Result<AttemptPmf> {
    if !(0.0..=1.0).contains(&p_e) {
        return Err(invalid("p_e", "must lie in [0, 1]"));
    }
    if max_tries < 1 {
        return Err(invalid("max_tries", "must be >= 1"));
    }
    let delivered = (0..max_tries)
        .map(|k| (1.0 - p_e) * p_e.powi(k as i32))
        .collect();
    Ok(AttemptPmf {
        delivered,
        dropped: p_e.powi(max_tries as i32),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutcomeKind {
    Delivered { attempt: u32 },
    Dropped,
}

impl OutcomeKind {
    pub fn attempts(&self, max_tries: u32) -> u32 {
        match *self {
            OutcomeKind::Delivered { attempt } => attempt,
            OutcomeKind::Dropped => max_tries,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub kind: OutcomeKind,
    pub duration_ms: f64,
    pub probability: f64,
}

/// Exact distribution of the per-packet service time: `max_tries` delivered
/// outcomes in attempt order followed by the single dropped outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceDistribution {
    outcomes: Vec<Outcome>,
    cumulative: Vec<f64>,
    p_e: f64,
    max_tries: u32,
}

impl ServiceDistribution {
    pub fn new(cfg: &LinkConfig, tc: &TimingConstants, p_e: f64) -> Result<Self> {
        let pmf = attempt_pmf(p_e, cfg.max_tries)?;
        let sc = components(cfg, tc);
        let mut outcomes: Vec<Outcome> = pmf
            .delivered
            .iter()
            .zip(1..)
            .map(|(&probability, attempt)| Outcome {
                kind: OutcomeKind::Delivered { attempt },
                duration_ms: t_ack_total(attempt, &sc, tc.t_spi_ms),
                probability,
            })
            .collect();
        outcomes.push(Outcome {
            kind: OutcomeKind::Dropped,
            duration_ms: t_nonack_total(&sc, tc.t_spi_ms, cfg.max_tries),
            probability: pmf.dropped,
        });

        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = outcomes
            .iter()
            .map(|o| {
                acc += o.probability;
                acc
            })
            .collect();
        // absorb rounding so a uniform in [0, 1) always lands on an outcome
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Ok(Self {
            outcomes,
            cumulative,
            p_e,
            max_tries: cfg.max_tries,
        })
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn p_e(&self) -> f64 {
        self.p_e
    }

    pub fn max_tries(&self) -> u32 {
        self.max_tries
    }

    pub fn drop_probability(&self) -> f64 {
        self.outcomes.last().map_or(0.0, |o| o.probability)
    }

    fn support(&self) -> impl Iterator<Item = &Outcome> {
        self.outcomes.iter().filter(|o| o.probability > 0.0)
    }

    /// Longest duration carrying positive probability.
    pub fn max_duration(&self) -> f64 {
        self.support().map(|o| o.duration_ms).fold(0.0, f64::max)
    }

    /// Shortest duration carrying positive probability.
    pub fn min_duration(&self) -> f64 {
        self.support().map(|o| o.duration_ms).fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.outcomes.iter().map(|o| o.duration_ms * o.probability).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.outcomes
            .iter()
            .map(|o| (o.duration_ms - m).powi(2) * o.probability)
            .sum()
    }

    /// `E[exp(theta * T)]` including the dropped outcome.
    pub fn mgf(&self, theta: f64) -> Result<f64> {
        if !(theta >= 0.0) {
            return Err(invalid("theta", "must be >= 0"));
        }
        let exponent = theta * self.max_duration();
        if exponent > MGF_EXPONENT_LIMIT {
            return Err(Error::MgfOverflow {
                exponent,
                limit: MGF_EXPONENT_LIMIT,
            });
        }
        Ok(self
            .support()
            .map(|o| (theta * o.duration_ms).exp() * o.probability)
            .sum())
    }

    /// `ln E[exp(theta * T)]`, finite for any finite `theta >= 0`.
    pub fn log_mgf(&self, theta: f64) -> Result<f64> {
        if !(theta >= 0.0) || !theta.is_finite() {
            return Err(invalid("theta", "must be finite and >= 0"));
        }
        if theta * self.max_duration() <= 1.0 {
            // near zero: ln(1 + sum p (e^{theta d} - 1)) keeps the first-order term exact
            let s: f64 = self
                .support()
                .map(|o| o.probability * (theta * o.duration_ms).exp_m1())
                .sum();
            return Ok(s.ln_1p());
        }
        let peak = self
            .support()
            .map(|o| theta * o.duration_ms + o.probability.ln())
            .fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = self
            .support()
            .map(|o| (theta * o.duration_ms + o.probability.ln() - peak).exp())
            .sum();
        Ok(peak + s.ln())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (OutcomeKind, f64) {
        let u: f64 = rng.random();
        let idx = self
            .cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.outcomes.len() - 1);
        let o = &self.outcomes[idx];
        (o.kind, o.duration_ms)
    }
}

/// Convenience wrapper matching [`ServiceDistribution::new`].
pub fn distribution(cfg: &LinkConfig, tc: &TimingConstants, p_e: f64) -> Result<ServiceDistribution> {
    ServiceDistribution::new(cfg, tc, p_e)
}
