//! Mean delay of the equivalent loss-free G/G/1 queue.
//!
//! Lost packets are removed from the arrival stream and the remaining traffic
//! is fed to an infinite-buffer single server; the waiting time follows the
//! two-moment approximation `W_q = lambda (var_a + var_t) / (2 (1 - rho))`.

use serde::{Deserialize, Serialize};

use crate::empirical::{self, LinkConfig, MomentCoefficients};
use crate::error::{invalid, Error, Result};
use crate::service::{OutcomeKind, ServiceDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gg1Inputs {
    /// Equivalent arrival rate, packets/ms.
    pub lambda: f64,
    /// Arrival variance term, (packets/ms)^2.
    pub var_a: f64,
    /// Mean service time, ms.
    pub mean_t: f64,
    /// Service time variance, ms^2.
    pub var_t: f64,
}

impl Gg1Inputs {
    pub fn new(lambda: f64, var_a: f64, mean_t: f64, var_t: f64) -> Result<Self> {
        for (name, v) in [("lambda", lambda), ("var_a", var_a), ("mean_t", mean_t), ("var_t", var_t)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid(name, "must be finite and >= 0"));
            }
        }
        Ok(Self {
            lambda,
            var_a,
            mean_t,
            var_t,
        })
    }

    /// Inputs from the fitted moment models, with `t_pit` as the nominal
    /// inter-arrival time.
    pub fn from_empirical(cfg: &LinkConfig, mc: &MomentCoefficients) -> Result<Self> {
        let l = cfg.payload();
        let plr_m = empirical::plr_mean(l, cfg.snr_db, f64::from(cfg.queue_capacity), mc);
        let plr_v = empirical::plr_var(l, cfg.snr_db, mc);
        let eq = empirical::equivalent_arrival(cfg.t_pit_ms, plr_m, plr_v)?;
        Self::new(
            eq.lambda,
            eq.var_a,
            empirical::service_time_mean(cfg, mc),
            empirical::service_time_var(cfg, mc),
        )
    }

    /// Inputs from an exact service distribution: the received-packet stream
    /// thinned by the retry-drop probability, served with the delivered-packet
    /// service time moments.
    pub fn from_distribution(dist: &ServiceDistribution, t_int_ms: f64) -> Result<Self> {
        let p_drop = dist.drop_probability();
        let eq = empirical::equivalent_arrival(t_int_ms, p_drop, p_drop * (1.0 - p_drop))?;
        let delivered: Vec<_> = dist
            .outcomes()
            .iter()
            .filter(|o| matches!(o.kind, OutcomeKind::Delivered { .. }))
            .collect();
        let p_ok: f64 = delivered.iter().map(|o| o.probability).sum();
        if p_ok <= 0.0 {
            // nothing is ever delivered; the equivalent queue is empty
            return Self::new(0.0, 0.0, 0.0, 0.0);
        }
        let mean: f64 = delivered.iter().map(|o| o.duration_ms * o.probability).sum::<f64>() / p_ok;
        let var: f64 = delivered
            .iter()
            .map(|o| (o.duration_ms - mean).powi(2) * o.probability)
            .sum::<f64>()
            / p_ok;
        Self::new(eq.lambda, eq.var_a, mean, var)
    }
}

pub fn traffic_intensity(inp: &Gg1Inputs) -> f64 {
    inp.lambda * inp.mean_t
}

pub fn waiting_time(inp: &Gg1Inputs) -> Result<f64> {
    let rho = traffic_intensity(inp);
    if rho >= 1.0 {
        return Err(Error::Overloaded { rho });
    }
    Ok(inp.lambda * (inp.var_a + inp.var_t) / (2.0 * (1.0 - rho)))
}

pub fn mean_delay(inp: &Gg1Inputs) -> Result<f64> {
    Ok(waiting_time(inp)? + inp.mean_t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanDelayReport {
    pub inputs: Gg1Inputs,
    pub rho: f64,
    pub waiting_ms: f64,
    pub mean_delay_ms: f64,
}

pub fn report(inp: &Gg1Inputs) -> Result<MeanDelayReport> {
    let waiting_ms = waiting_time(inp)?;
    Ok(MeanDelayReport {
        inputs: *inp,
        rho: traffic_intensity(inp),
        waiting_ms,
        mean_delay_ms: waiting_ms + inp.mean_t,
    })
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::service::{distribution, TimingConstants};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // lambda, var_a from the equivalent-arrival example; mean/var from the fitted
    // service-time models at (N=3, D_retry=30, l_D=50, SNR=20). mpmath values.
    fn worked() -> Gg1Inputs {
        Gg1Inputs::new(0.019058566040414487, 5.4134113294645077e-6, 17.721538598682375, 134.42508459323265)
            .unwrap()
    }

    #[test]
    fn traffic_intensity_examples() {
        assert!(rel(traffic_intensity(&worked()), 0.33774711372074245) < 1e-12);
        let idle = Gg1Inputs { lambda: 0.0, ..worked() };
        assert_eq!(traffic_intensity(&idle), 0.0);
        let sat = Gg1Inputs { lambda: 1.0 / 17.721538598682375, ..worked() };
        assert!((traffic_intensity(&sat) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn waiting_and_delay_examples() {
        assert!(rel(waiting_time(&worked()).unwrap(), 1.9342682443968751) < 1e-12);
        assert!(rel(mean_delay(&worked()).unwrap(), 19.655806843079250) < 1e-12);

        let det = Gg1Inputs { var_a: 0.0, var_t: 0.0, ..worked() };
        assert_eq!(waiting_time(&det).unwrap(), 0.0);
        assert_eq!(mean_delay(&det).unwrap(), det.mean_t);
    }

    #[test]
    fn from_empirical_matches_worked_example() {
        let cfg = LinkConfig::default();
        let inp = Gg1Inputs::from_empirical(&cfg, &MomentCoefficients::default()).unwrap();
        let w = worked();
        assert!(rel(inp.lambda, w.lambda) < 1e-12);
        assert!(rel(inp.var_a, w.var_a) < 1e-12);
        assert!(rel(mean_delay(&inp).unwrap(), 19.655806843079250) < 1e-12);
    }

    #[test]
    fn overload_is_an_error() {
        let inp = Gg1Inputs { lambda: 0.06, ..worked() };
        match waiting_time(&inp) {
            Err(Error::Overloaded { rho }) => assert!(rho > 1.0),
            other => panic!("expected Overloaded, got {other:?}"),
        }
        let inp = Gg1Inputs { lambda: 1.0 / 17.721538598682375 * (1.0 + 1e-12), ..worked() };
        assert!(mean_delay(&inp).is_err());
    }

    #[test]
    fn waiting_time_grows_without_bound_near_saturation() {
        let cap = 1.0 / worked().mean_t;
        let ws: Vec<f64> = (1..=999)
            .map(|i| waiting_time(&Gg1Inputs { lambda: cap * i as f64 / 1000.0, ..worked() }).unwrap())
            .collect();
        assert!(ws.windows(2).all(|w| w[1] > w[0]));
        assert!(*ws.last().unwrap() > 1000.0 * ws[0]);
    }

    #[test]
    fn distribution_route_uses_delivered_moments() {
        let cfg = LinkConfig::default();
        let tc = TimingConstants { t_spi_ms: 0.0, t_frame_ms: Some(4.0), ..Default::default() };
        let dist = distribution(&cfg, &tc, 0.1).unwrap();
        let inp = Gg1Inputs::from_distribution(&dist, 50.0).unwrap();
        // delivered outcomes 11.464/59.160/106.856 with weights 0.9/0.09/0.009 over 0.999
        let mean = (11.464 * 0.9 + 59.160 * 0.09 + 106.856 * 0.009) / 0.999;
        assert!(rel(inp.mean_t, mean) < 1e-12);
        assert!(rel(inp.lambda, 0.02 * 0.999) < 1e-12);
        assert!(rel(inp.var_a, 4e-4 * 0.001 * 0.999) < 1e-12);

        let lossless = distribution(&cfg, &tc, 0.0).unwrap();
        let inp = Gg1Inputs::from_distribution(&lossless, 50.0).unwrap();
        assert_eq!(inp.var_t, 0.0);
        assert!(rel(mean_delay(&inp).unwrap(), 11.464) < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn delay_dominates_service_and_grows(
                mean_t in 1.0f64..100.0, rho in 0.01f64..0.95, var_a in 0.0f64..1.0, var_t in 0.0f64..1000.0, bump in 0.001f64..1.0
            ) {
                let inp = Gg1Inputs::new(rho / mean_t, var_a, mean_t, var_t).unwrap();
                let w = waiting_time(&inp).unwrap();
                prop_assert!(w >= 0.0);
                prop_assert!(mean_delay(&inp).unwrap() >= mean_t);
                let more_a = Gg1Inputs { var_a: var_a + bump, ..inp };
                let more_t = Gg1Inputs { var_t: var_t + bump, ..inp };
                prop_assert!(waiting_time(&more_a).unwrap() > w);
                prop_assert!(waiting_time(&more_t).unwrap() > w);
                let faster = Gg1Inputs { lambda: inp.lambda * (1.0 + 0.04 * bump), ..inp };
                if traffic_intensity(&faster) < 1.0 {
                    prop_assert!(waiting_time(&faster).unwrap() > w);
                }
            }
        }
    }
}
