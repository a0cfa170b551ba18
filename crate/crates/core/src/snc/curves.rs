use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::service::ServiceDistribution;

/// Bits in a packet carrying `payload_bytes` plus `framing_bytes` of headers.
pub fn packet_bits(payload_bytes: f64, framing_bytes: f64) -> f64 {
    8.0 * (payload_bytes + framing_bytes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalKind {
    Periodic,
    Poisson,
    OnOff,
}

/// Bounding function on the probability that traffic exceeds the envelope by
/// more than `x` bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bounding {
    /// `f(x) = 0`: the envelope is never violated.
    Deterministic,
    /// `f(x) = exp(-decay * x)`, decay in 1/bit.
    Exponential { decay: f64 },
}

impl Bounding {
    pub fn violation_probability(&self, x: f64) -> f64 {
        match *self {
            Bounding::Deterministic => 0.0,
            Bounding::Exponential { decay } => (-decay * x.max(0.0)).exp().min(1.0),
        }
    }
}

/// Affine stochastic arrival curve `alpha(t) = rate * t + burst`, evaluated at
/// one value of the free parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalCurve {
    pub kind: ArrivalKind,
    /// bits/ms
    pub rate: f64,
    /// bits
    pub burst: f64,
    pub bounding: Bounding,
    pub packet_bits: f64,
}

impl ArrivalCurve {
    pub fn at(&self, t_ms: f64) -> f64 {
        self.rate * t_ms + self.burst
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(invalid(name, "must be finite and > 0"));
    }
    Ok(())
}

/// Periodic source: one `packet_bits` packet every `period_ms`.
pub fn periodic_sac(packet_bits: f64, period_ms: f64) -> Result<ArrivalCurve> {
    check_positive("packet_bits", packet_bits)?;
    check_positive("period_ms", period_ms)?;
    Ok(ArrivalCurve {
        kind: ArrivalKind::Periodic,
        rate: packet_bits / period_ms,
        burst: packet_bits,
        bounding: Bounding::Deterministic,
        packet_bits,
    })
}

/// Poisson packet source with effective bandwidth `lambda (e^{theta L} - 1) / theta`.
///
/// The burst of one packet accounts for the arriving packet's own bits, so the
/// horizontal distance is a per-packet delay.
pub fn poisson_sac(lambda: f64, packet_bits: f64, theta: f64) -> Result<ArrivalCurve> {
    check_positive("lambda", lambda)?;
    check_positive("packet_bits", packet_bits)?;
    check_positive("theta", theta)?;
    Ok(ArrivalCurve {
        kind: ArrivalKind::Poisson,
        rate: lambda * (theta * packet_bits).exp_m1() / theta,
        burst: packet_bits,
        bounding: Bounding::Exponential { decay: theta },
        packet_bits,
    })
}

/// Effective bandwidth of the two-state Markov fluid source with peak `peak`
/// (bits/ms) and transition rates `lam`, `mu` (1/ms), in the closed form
///
/// ```text
/// rho(theta) = (theta r - lam - mu + sqrt((theta r + lam - mu)^2 + 4 lam mu)) / (2 theta)
/// ```
///
/// Its small-`theta` limit is `r lam / (lam + mu)`.
pub fn onoff_effective_bandwidth(lam: f64, mu: f64, peak: f64, theta: f64) -> Result<f64> {
    if !(lam >= 0.0 && mu >= 0.0) {
        return Err(invalid("lam/mu", "transition rates must be >= 0"));
    }
    if lam + mu == 0.0 {
        return Err(invalid("lam/mu", "lam + mu must be > 0"));
    }
    check_positive("peak", peak)?;
    check_positive("theta", theta)?;
    // discriminant rewritten as a^2 + 4 lam theta r with a = theta r - lam - mu;
    // for a < 0 the numerator a + s is rationalised to avoid cancellation
    let tr = theta * peak;
    let a = tr - lam - mu;
    let s = (a * a + 4.0 * lam * tr).sqrt();
    let rho = if a >= 0.0 {
        (a + s) / (2.0 * theta)
    } else {
        2.0 * lam * peak / (s - a)
    };
    Ok(rho.min(peak))
}

pub fn onoff_sac(lam: f64, mu: f64, peak: f64, theta: f64, packet_bits: f64) -> Result<ArrivalCurve> {
    check_positive("packet_bits", packet_bits)?;
    Ok(ArrivalCurve {
        kind: ArrivalKind::OnOff,
        rate: onoff_effective_bandwidth(lam, mu, peak, theta)?,
        burst: packet_bits,
        bounding: Bounding::Exponential { decay: theta },
        packet_bits,
    })
}

/// Stochastic service curve `beta(t) = rate * t` with bounding function
/// `g(x) = exp(-theta x / rate)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceCurve {
    /// bits/ms
    pub rate: f64,
    /// 1/ms
    pub theta: f64,
}

impl ServiceCurve {
    /// Decay of `g` per bit of shortfall.
    pub fn decay(&self) -> f64 {
        self.theta / self.rate
    }

    pub fn shortfall_probability(&self, x: f64) -> f64 {
        (-self.decay() * x.max(0.0)).exp().min(1.0)
    }

    pub fn at(&self, t_ms: f64) -> f64 {
        self.rate * t_ms
    }
}

/// Service curve of i.i.d. per-packet service times: `R = L theta / ln M(theta)`.
pub fn service_curve(dist: &ServiceDistribution, packet_bits: f64, theta: f64) -> Result<ServiceCurve> {
    check_positive("theta", theta)?;
    check_positive("packet_bits", packet_bits)?;
    let log_m = dist.log_mgf(theta)?;
    if !(log_m > 0.0) {
        return Err(invalid("dist", "service times must be positive for theta > 0"));
    }
    Ok(ServiceCurve {
        rate: packet_bits * theta / log_m,
        theta,
    })
}
