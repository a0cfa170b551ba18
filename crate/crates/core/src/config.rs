//! JSON run configuration shared by every subcommand.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::empirical::{self, LinkConfig, MomentCoefficients, PerCoefficients};
use crate::error::{invalid, Error};
use crate::service::{ServiceDistribution, TimingConstants};
use crate::sim::{TrafficPattern, TrafficSpec};
use crate::snc::{packet_bits, ThetaGrid, TrafficModel};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(#[from] Error),
}

/// Which On-Off transition rate plays the role of `lam` in the
/// effective-bandwidth formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OnOffAssignment {
    /// `lam` = On->Off rate, `mu` = Off->On rate.
    #[default]
    Verbatim,
    /// `lam` = Off->On rate, `mu` = On->Off rate. Makes the small-theta limit
    /// equal the source's mean rate.
    Swapped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationSettings {
    /// Allowed relative gap between simulated and analytic mean delay.
    pub mean_delay_tolerance: f64,
    /// Bound probabilities below this are not checked for dominance.
    pub min_bound_prob: f64,
    /// Independent simulation replications (seed, seed + 1, ...).
    pub replications: u32,
}

impl Default for ValidationSettings {
    fn default() -> Self {
        Self {
            mean_delay_tolerance: 0.25,
            min_bound_prob: 1e-3,
            replications: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub link: LinkConfig,
    pub timing: TimingConstants,
    pub per_coeffs: PerCoefficients,
    pub moment_coeffs: MomentCoefficients,
    pub traffic: TrafficSpec,
    pub seed: u64,
    /// Delays at which the CCDFs are tabulated, ms, non-decreasing.
    pub delay_grid: Vec<f64>,
    pub theta_grid: ThetaGrid,
    /// Header bytes added to the payload when converting packets to bits.
    pub framing_bytes: f64,
    pub onoff_assignment: OnOffAssignment,
    pub validation: ValidationSettings,
    pub output: OutputSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        let link = LinkConfig::default();
        Self {
            link,
            timing: TimingConstants::default(),
            per_coeffs: PerCoefficients::default(),
            moment_coeffs: MomentCoefficients::default(),
            traffic: TrafficSpec {
                pattern: TrafficPattern::Periodic {
                    t_pit_ms: link.t_pit_ms,
                },
                packets: 100_000,
            },
            seed: 1,
            delay_grid: (0..=200).map(|i| f64::from(i) * 2.0).collect(),
            theta_grid: ThetaGrid::default(),
            framing_bytes: 0.0,
            onoff_assignment: OnOffAssignment::default(),
            validation: ValidationSettings::default(),
            output: OutputSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is always serialisable")
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.link.validate()?;
        self.timing.validate()?;
        self.per_coeffs.validate()?;
        self.moment_coeffs.validate()?;
        self.traffic.validate()?;
        self.theta_grid.validate()?;
        if self.delay_grid.is_empty() {
            return Err(invalid("delay_grid", "must not be empty"));
        }
        if self.delay_grid.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(invalid("delay_grid", "entries must be finite and >= 0"));
        }
        if self.delay_grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("delay_grid", "must be non-decreasing"));
        }
        if !(self.framing_bytes >= 0.0 && self.framing_bytes.is_finite()) {
            return Err(invalid("framing_bytes", "must be finite and >= 0"));
        }
        let v = &self.validation;
        if !(v.mean_delay_tolerance >= 0.0 && v.mean_delay_tolerance.is_finite()) {
            return Err(invalid("validation.mean_delay_tolerance", "must be finite and >= 0"));
        }
        if !(0.0..=1.0).contains(&v.min_bound_prob) {
            return Err(invalid("validation.min_bound_prob", "must lie in [0, 1]"));
        }
        if v.replications == 0 {
            return Err(invalid("validation.replications", "must be >= 1"));
        }
        Ok(())
    }

    pub fn p_e(&self) -> f64 {
        empirical::per(self.link.payload(), self.link.snr_db, &self.per_coeffs)
    }

    pub fn distribution(&self) -> Result<ServiceDistribution, Error> {
        ServiceDistribution::new(&self.link, &self.timing, self.p_e())
    }

    pub fn packet_bits(&self) -> f64 {
        packet_bits(self.link.payload(), self.framing_bytes)
    }

    /// Arrival model for the bound. Source rates in packets/ms.
    pub fn traffic_model(&self) -> TrafficModel {
        traffic_model(&self.traffic.pattern, self.onoff_assignment)
    }
}

pub fn traffic_model(pattern: &TrafficPattern, assignment: OnOffAssignment) -> TrafficModel {
    match *pattern {
        TrafficPattern::Periodic { t_pit_ms } => TrafficModel::Periodic { period_ms: t_pit_ms },
        TrafficPattern::Poisson { rate_per_ms } => TrafficModel::Poisson {
            lambda_per_ms: rate_per_ms,
        },
        TrafficPattern::OnOff {
            lam_on_off,
            mu_off_on,
            r_per_ms,
        } => {
            let (lam, mu) = match assignment {
                OnOffAssignment::Verbatim => (lam_on_off, mu_off_on),
                OnOffAssignment::Swapped => (mu_off_on, lam_on_off),
            };
            TrafficModel::OnOff {
                lam,
                mu,
                peak_per_ms: r_per_ms,
            }
        }
    }
}
