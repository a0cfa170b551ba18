//! Closed-form empirical models fitted on a measured 802.15.4 link.
//!
//! Every coefficient lives in a record with the fitted value as its default,
//! since the fits only hold for the environment they were measured in. Units
//! throughout: milliseconds, bytes, dB, packets.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Coefficients of the packet error rate model `P_e = alpha * l_D * exp(beta * snr)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerCoefficients {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for PerCoefficients {
    fn default() -> Self {
        Self {
            alpha: 0.0128,
            beta: -0.15,
        }
    }
}

impl PerCoefficients {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(invalid("per_coeffs.alpha", "must be > 0"));
        }
        if !(self.beta < 0.0) {
            return Err(invalid("per_coeffs.beta", "must be < 0"));
        }
        Ok(())
    }
}

/// Coefficients of the fitted service-time and packet-loss-rate moment models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentCoefficients {
    pub mean_scale: f64,
    pub mean_offset_ms: f64,
    pub mean_exponent: f64,
    pub var_scale: f64,
    pub var_exponent: f64,
    pub plr_mean_scale: f64,
    pub plr_mean_exponent: f64,
    pub plr_var_scale: f64,
    pub plr_var_exponent: f64,
}

impl Default for MomentCoefficients {
    fn default() -> Self {
        Self {
            mean_scale: 0.06,
            mean_offset_ms: 15.0,
            mean_exponent: -0.12,
            var_scale: 30.0,
            var_exponent: -0.15,
            plr_mean_scale: 1.0 / 100.0,
            plr_mean_exponent: -0.14,
            plr_var_scale: 1.0 / 500.0,
            plr_var_exponent: -0.1,
        }
    }
}

impl MomentCoefficients {
    pub fn validate(&self) -> Result<()> {
        let scales = [
            ("moment_coeffs.mean_scale", self.mean_scale),
            ("moment_coeffs.var_scale", self.var_scale),
            ("moment_coeffs.plr_mean_scale", self.plr_mean_scale),
            ("moment_coeffs.plr_var_scale", self.plr_var_scale),
        ];
        for (name, v) in scales {
            if !(v > 0.0) {
                return Err(invalid(name, "scale must be > 0"));
            }
        }
        let exponents = [
            ("moment_coeffs.mean_exponent", self.mean_exponent),
            ("moment_coeffs.var_exponent", self.var_exponent),
            ("moment_coeffs.plr_mean_exponent", self.plr_mean_exponent),
            ("moment_coeffs.plr_var_exponent", self.plr_var_exponent),
        ];
        for (name, v) in exponents {
            if !(v < 0.0) {
                return Err(invalid(name, "exponent must be < 0"));
            }
        }
        if !(self.mean_offset_ms >= 0.0) {
            return Err(invalid("moment_coeffs.mean_offset_ms", "must be >= 0"));
        }
        Ok(())
    }
}

/// Stack parameters of the link. Shared by every model and the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    /// Application payload `l_D`, bytes.
    pub payload_bytes: u32,
    pub snr_db: f64,
    /// Maximum number of transmissions per packet (`N_maxTries`).
    pub max_tries: u32,
    /// Delay between two consecutive transmissions (`D_retry`), ms.
    pub retry_delay_ms: f64,
    /// Waiting-room size (`Q_max`), packets. Excludes the packet in service.
    pub queue_capacity: u32,
    /// Nominal packet inter-arrival time (`T_pit`), ms.
    pub t_pit_ms: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            payload_bytes: 50,
            snr_db: 20.0,
            max_tries: 3,
            retry_delay_ms: 30.0,
            queue_capacity: 60,
            t_pit_ms: 50.0,
        }
    }
}

/// Largest payload the radio stack accepts.
pub const MAX_PAYLOAD_BYTES: u32 = 114;

impl LinkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.payload_bytes > MAX_PAYLOAD_BYTES {
            return Err(invalid(
                "link.payload_bytes",
                format!("{} exceeds {MAX_PAYLOAD_BYTES}", self.payload_bytes),
            ));
        }
        if !self.snr_db.is_finite() {
            return Err(invalid("link.snr_db", "must be finite"));
        }
        if self.max_tries < 1 {
            return Err(invalid("link.max_tries", "must be >= 1"));
        }
        if !(self.retry_delay_ms >= 0.0) || !self.retry_delay_ms.is_finite() {
            return Err(invalid("link.retry_delay_ms", "must be finite and >= 0"));
        }
        if self.queue_capacity < 1 {
            return Err(invalid("link.queue_capacity", "must be >= 1"));
        }
        if !(self.t_pit_ms > 0.0) || !self.t_pit_ms.is_finite() {
            return Err(invalid("link.t_pit_ms", "must be finite and > 0"));
        }
        Ok(())
    }

    pub fn payload(&self) -> f64 {
        f64::from(self.payload_bytes)
    }
}

/// Rate and variance of the loss-thinned arrival process feeding the equivalent queue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalentArrival {
    /// Packets per ms.
    pub lambda: f64,
    /// Squared-rate units, (packets/ms)^2.
    pub var_a: f64,
}

/// Packet error rate of a single transmission attempt, clamped to `[0, 1]`.
pub fn per(payload_bytes: f64, snr_db: f64, c: &PerCoefficients) -> f64 {
    (c.alpha * payload_bytes * (c.beta * snr_db).exp()).clamp(0.0, 1.0)
}

/// Fitted mean packet service time, ms.
pub fn service_time_mean(cfg: &LinkConfig, c: &MomentCoefficients) -> f64 {
    c.mean_scale / f64::from(cfg.max_tries)
        * cfg.retry_delay_ms
        * cfg.payload()
        * (c.mean_exponent * cfg.snr_db).exp()
        + c.mean_offset_ms
}

/// Fitted packet service time variance, ms^2.
pub fn service_time_var(cfg: &LinkConfig, c: &MomentCoefficients) -> f64 {
    c.var_scale * f64::from(cfg.max_tries) * cfg.retry_delay_ms * (c.var_exponent * cfg.snr_db).exp()
}

/// Fitted mean packet loss rate, clamped to `[0, 1]`. The `1 / q_max` term is the
/// buffer-overflow share.
pub fn plr_mean(payload_bytes: f64, snr_db: f64, queue_capacity: f64, c: &MomentCoefficients) -> f64 {
    (c.plr_mean_scale * payload_bytes * (c.plr_mean_exponent * snr_db).exp() + 1.0 / queue_capacity)
        .clamp(0.0, 1.0)
}

pub fn plr_var(payload_bytes: f64, snr_db: f64, c: &MomentCoefficients) -> f64 {
    c.plr_var_scale * payload_bytes * (c.plr_var_exponent * snr_db).exp()
}

/// Thin the nominal arrival stream by the loss rate.
///
/// `var_a` is `(1/t_int)^2 * plr_var` exactly; it is carried in squared-rate
/// units and handed unchanged to the waiting-time approximation.
pub fn equivalent_arrival(t_int_ms: f64, plr_mean: f64, plr_var: f64) -> Result<EquivalentArrival> {
    if !(t_int_ms > 0.0) {
        return Err(invalid("t_int_ms", "must be > 0"));
    }
    if !(0.0..=1.0).contains(&plr_mean) {
        return Err(invalid("plr_mean", "must lie in [0, 1]"));
    }
    let rate = 1.0 / t_int_ms;
    Ok(EquivalentArrival {
        lambda: rate * (1.0 - plr_mean),
        var_a: rate * rate * plr_var,
    })
}

/// One row of every empirical model evaluated for a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelRow {
    pub per: f64,
    pub mean_t_ms: f64,
    pub var_t_ms2: f64,
    pub plr_mean: f64,
    pub plr_var: f64,
    pub lambda_per_ms: f64,
    pub var_a: f64,
}

pub fn evaluate_all(cfg: &LinkConfig, pc: &PerCoefficients, mc: &MomentCoefficients) -> Result<ModelRow> {
    let l = cfg.payload();
    let plr_m = plr_mean(l, cfg.snr_db, f64::from(cfg.queue_capacity), mc);
    let plr_v = plr_var(l, cfg.snr_db, mc);
    let eq = equivalent_arrival(cfg.t_pit_ms, plr_m, plr_v)?;
    Ok(ModelRow {
        per: per(l, cfg.snr_db, pc),
        mean_t_ms: service_time_mean(cfg, mc),
        var_t_ms2: service_time_var(cfg, mc),
        plr_mean: plr_m,
        plr_var: plr_v,
        lambda_per_ms: eq.lambda,
        var_a: eq.var_a,
    })
}
