use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrafficPattern {
    /// One packet every `t_pit_ms`, first at time 0.
    Periodic { t_pit_ms: f64 },
    /// Exponential gaps with rate `rate_per_ms`.
    Poisson { rate_per_ms: f64 },
    /// Two-state Markov chain starting Off. Leaves On at `lam_on_off`, leaves
    /// Off at `mu_off_on` (both 1/ms) and emits `r_per_ms` packets/ms while On.
    OnOff {
        lam_on_off: f64,
        mu_off_on: f64,
        r_per_ms: f64,
    },
}

impl TrafficPattern {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, "must be finite and > 0"))
            }
        };
        match *self {
            TrafficPattern::Periodic { t_pit_ms } => check("traffic.pattern.t_pit_ms", t_pit_ms),
            TrafficPattern::Poisson { rate_per_ms } => check("traffic.pattern.rate_per_ms", rate_per_ms),
            TrafficPattern::OnOff {
                lam_on_off,
                mu_off_on,
                r_per_ms,
            } => {
                check("traffic.pattern.lam_on_off", lam_on_off)?;
                check("traffic.pattern.mu_off_on", mu_off_on)?;
                check("traffic.pattern.r_per_ms", r_per_ms)
            }
        }
    }

    /// Long-run packets per ms.
    pub fn mean_rate(&self) -> f64 {
        match *self {
            TrafficPattern::Periodic { t_pit_ms } => 1.0 / t_pit_ms,
            TrafficPattern::Poisson { rate_per_ms } => rate_per_ms,
            TrafficPattern::OnOff {
                lam_on_off,
                mu_off_on,
                r_per_ms,
            } => r_per_ms * mu_off_on / (lam_on_off + mu_off_on),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficSpec {
    pub pattern: TrafficPattern,
    /// Number of packets to generate.
    pub packets: usize,
}

impl TrafficSpec {
    pub fn validate(&self) -> Result<()> {
        self.pattern.validate()?;
        if self.packets == 0 {
            return Err(invalid("traffic.packets", "must be >= 1"));
        }
        Ok(())
    }
}

/// Arrival times in ms, ascending.
pub fn gen_arrivals<R: Rng + ?Sized>(spec: &TrafficSpec, rng: &mut R) -> Result<Vec<f64>> {
    spec.validate()?;
    let n = spec.packets;
    let mut out = Vec::with_capacity(n);
    match spec.pattern {
        TrafficPattern::Periodic { t_pit_ms } => {
            out.extend((0..n).map(|k| k as f64 * t_pit_ms));
        }
        TrafficPattern::Poisson { rate_per_ms } => {
            let gap = Exp::new(rate_per_ms).map_err(|e| invalid("traffic.pattern.rate_per_ms", e.to_string()))?;
            let mut t = 0.0;
            for _ in 0..n {
                t += gap.sample(rng);
                out.push(t);
            }
        }
        TrafficPattern::OnOff {
            lam_on_off,
            mu_off_on,
            r_per_ms,
        } => {
            let leave_on = Exp::new(lam_on_off).map_err(|e| invalid("traffic.pattern.lam_on_off", e.to_string()))?;
            let leave_off = Exp::new(mu_off_on).map_err(|e| invalid("traffic.pattern.mu_off_on", e.to_string()))?;
            // Emissions happen whenever accumulated On-time crosses a multiple
            // of 1 / r, so the emission phase carries over between On periods.
            let mut t = 0.0;
            let mut credit = 0.0f64;
            let mut on = false;
            while out.len() < n {
                if on {
                    let sojourn = leave_on.sample(rng);
                    let end_credit = credit + sojourn * r_per_ms;
                    let mut next = credit.floor() + 1.0;
                    while next <= end_credit && out.len() < n {
                        out.push(t + (next - credit) / r_per_ms);
                        next += 1.0;
                    }
                    credit = end_credit;
                    t += sojourn;
                } else {
                    t += leave_off.sample(rng);
                }
                on = !on;
            }
        }
    }
    Ok(out)
}
