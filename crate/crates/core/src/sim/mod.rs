//! Discrete-event model of the link: traffic source, finite FIFO queue and a
//! single server whose per-packet service time is drawn from the exact
//! retransmission distribution.

mod ccdf;
mod traffic;

use std::collections::VecDeque;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::empirical::LinkConfig;
use crate::error::{invalid, Result};
use crate::service::{OutcomeKind, ServiceDistribution, TimingConstants};

pub use ccdf::{
    clopper_pearson_upper, dominance_report, empirical_ccdf, empirical_ccdf_with_confidence, CcdfPoint,
    DominanceReport, EmpiricalCcdf, Violation, DEFAULT_CONFIDENCE,
};
pub use traffic::{gen_arrivals, TrafficPattern, TrafficSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    /// Waiting plus service time of each delivered packet, in arrival order.
    pub delivered_delays: Vec<f64>,
    pub n_arrivals: u64,
    pub n_queue_drops: u64,
    pub n_retry_drops: u64,
    pub n_delivered: u64,
    /// Seed of the run, when produced by [`run`].
    pub seed: Option<u64>,
}

impl SimResult {
    /// Every arrival is delivered or dropped once the queue drains.
    pub fn is_conserved(&self) -> bool {
        self.n_arrivals == self.n_delivered + self.n_queue_drops + self.n_retry_drops
            && self.delivered_delays.len() as u64 == self.n_delivered
    }

    pub fn mean_delay(&self) -> Option<f64> {
        (!self.delivered_delays.is_empty())
            .then(|| self.delivered_delays.iter().sum::<f64>() / self.delivered_delays.len() as f64)
    }

    pub fn loss_fraction(&self) -> f64 {
        if self.n_arrivals == 0 {
            return 0.0;
        }
        (self.n_queue_drops + self.n_retry_drops) as f64 / self.n_arrivals as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceOutcome {
    Delivered,
    RetryDrop,
    QueueDrop,
}

impl TraceOutcome {
    fn as_str(&self) -> &'static str {
        match self {
            TraceOutcome::Delivered => "delivered",
            TraceOutcome::RetryDrop => "retry_drop",
            TraceOutcome::QueueDrop => "queue_drop",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub arrival_ms: f64,
    /// `None` for queue drops.
    pub start_ms: Option<f64>,
    /// Transmission attempts made; 0 for queue drops.
    pub attempts: u32,
    pub outcome: TraceOutcome,
    /// `None` unless delivered.
    pub delay_ms: Option<f64>,
}

/// Runs the queue over `arrivals` (ascending, ms) until it drains.
///
/// A packet arriving while `queue_capacity` packets are already waiting behind
/// the one in service is dropped. Dropped service outcomes hold the server for
/// their full duration and are counted as retry drops.
pub fn simulate<R: Rng + ?Sized>(
    arrivals: &[f64],
    cfg: &LinkConfig,
    tc: &TimingConstants,
    p_e: f64,
    rng: &mut R,
) -> Result<SimResult> {
    let dist = ServiceDistribution::new(cfg, tc, p_e)?;
    simulate_with(arrivals, cfg.queue_capacity, &dist, rng, |_| {})
}

/// Like [`simulate`] but with a prebuilt distribution, passing every packet's
/// record to `trace`.
pub fn simulate_with<R, F>(
    arrivals: &[f64],
    queue_capacity: u32,
    dist: &ServiceDistribution,
    rng: &mut R,
    mut trace: F,
) -> Result<SimResult>
where
    R: Rng + ?Sized,
    F: FnMut(&TraceRecord),
{
    if arrivals.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(invalid("arrivals", "must be sorted ascending"));
    }
    let cap = queue_capacity as usize;
    let max_tries = dist.max_tries();
    // departure times of packets still in the system, oldest first
    let mut in_system: VecDeque<f64> = VecDeque::with_capacity(cap + 1);
    let mut last_departure = f64::NEG_INFINITY;
    let mut res = SimResult {
        delivered_delays: Vec::new(),
        n_arrivals: arrivals.len() as u64,
        n_queue_drops: 0,
        n_retry_drops: 0,
        n_delivered: 0,
        seed: None,
    };

    for &a in arrivals {
        while in_system.front().is_some_and(|&d| d <= a) {
            in_system.pop_front();
        }
        if in_system.len() > cap {
            res.n_queue_drops += 1;
            trace(&TraceRecord {
                arrival_ms: a,
                start_ms: None,
                attempts: 0,
                outcome: TraceOutcome::QueueDrop,
                delay_ms: None,
            });
            continue;
        }
        let start = a.max(last_departure);
        let (kind, duration) = dist.sample(rng);
        let departure = start + duration;
        last_departure = departure;
        in_system.push_back(departure);
        let (outcome, delay) = match kind {
            OutcomeKind::Delivered { .. } => {
                // wait first, so an unqueued packet's delay is exactly its service time
                let delay = (start - a) + duration;
                res.n_delivered += 1;
                res.delivered_delays.push(delay);
                (TraceOutcome::Delivered, Some(delay))
            }
            OutcomeKind::Dropped => {
                res.n_retry_drops += 1;
                (TraceOutcome::RetryDrop, None)
            }
        };
        trace(&TraceRecord {
            arrival_ms: a,
            start_ms: Some(start),
            attempts: kind.attempts(max_tries),
            outcome,
            delay_ms: delay,
        });
    }
    Ok(res)
}

/// Generator pair for a seeded run: arrivals and service draws use separate
/// streams so changing one does not perturb the other.
pub fn seeded_rngs(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut arrivals = ChaCha8Rng::seed_from_u64(seed);
    arrivals.set_stream(1);
    let mut service = ChaCha8Rng::seed_from_u64(seed);
    service.set_stream(2);
    (arrivals, service)
}

/// Generates traffic and simulates it from a single seed.
pub fn run<F: FnMut(&TraceRecord)>(
    spec: &TrafficSpec,
    cfg: &LinkConfig,
    dist: &ServiceDistribution,
    seed: u64,
    trace: F,
) -> Result<SimResult> {
    let (mut arr_rng, mut svc_rng) = seeded_rngs(seed);
    let arrivals = gen_arrivals(spec, &mut arr_rng)?;
    let mut res = simulate_with(&arrivals, cfg.queue_capacity, dist, &mut svc_rng, trace)?;
    res.seed = Some(seed);
    Ok(res)
}

pub const TRACE_HEADER: &str = "arrival_ms,start_ms,attempts,outcome,delay_ms";

pub fn write_trace_row<W: Write + ?Sized>(w: &mut W, r: &TraceRecord) -> io::Result<()> {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    writeln!(
        w,
        "{},{},{},{},{}",
        r.arrival_ms,
        opt(r.start_ms),
        r.attempts,
        r.outcome.as_str(),
        opt(r.delay_ms)
    )
}

/// Delivered packets leave in arrival order.
pub fn is_fifo(records: &[TraceRecord]) -> bool {
    let departures: Vec<f64> = records
        .iter()
        .filter_map(|r| r.delay_ms.map(|d| r.arrival_ms + d))
        .collect();
    departures.windows(2).all(|w| w[1] >= w[0])
}
