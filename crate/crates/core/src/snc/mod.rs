//! Stochastic network calculus delay bounds for the link.
//!
//! Arrival and service curves are affine in time and parameterised by a free
//! `theta`. For a shift `x` the delay bound reads
//!
//! ```text
//! P{ D > h(alpha + x, beta) } <= 1 - (1 - f) * (1 - g)(x)
//! ```
//!
//! where `*` is the Stieltjes convolution of the two bounding functions.
//! Traffic and service are measured in bits, time in ms, `theta` in 1/ms.

mod bound;
mod curves;
mod optimize;

pub use bound::{convolve_bounds, delay_bound_at, horizontal_distance, horizontal_distance_numeric};
pub use curves::{
    onoff_effective_bandwidth, onoff_sac, packet_bits, periodic_sac, poisson_sac, service_curve, ArrivalCurve,
    ArrivalKind, Bounding, ServiceCurve,
};
pub use optimize::{bound_for_delay, optimize_delay_ccdf, BoundPoint, DelayCcdf, ThetaGrid, TrafficModel};
