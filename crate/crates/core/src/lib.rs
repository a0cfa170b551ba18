//! Delay analysis of packet delivery over a lossy, retransmitting wireless link.
//!
//! * [`empirical`]: fitted closed-form models (PER, service-time and loss moments).
//! * [`service`]: exact per-packet service-time distribution and its MGF.
//! * [`gg1`]: mean delay through the equivalent loss-free G/G/1 queue.
//! * [`snc`]: stochastic network calculus delay CCDF bounds.
//! * [`sim`]: discrete-event simulation of the link.
//!
//! Time is in ms, payload in bytes, SNR in dB. The network calculus layer
//! works in bits.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod empirical;
pub mod error;
pub mod gg1;
pub mod service;
pub mod sim;
pub mod snc;

pub use config::RunConfig;
pub use empirical::{LinkConfig, MomentCoefficients, PerCoefficients};
pub use error::{Error, Result};
pub use service::{ServiceDistribution, TimingConstants};
