//! Full-duplex MIMO self-interference cancellation laboratory.
//!
//! Two full-duplex nodes, each with `N` transmit and `M` receive antennas,
//! exchange one stream per direction. Each node owns a digital precoder
//! `v_k`, a unit-norm digital combiner `u_k` and a sparse multi-tap analog
//! canceller `C_k`. The crate provides
//!
//! - [`channel`]: Rician self-interference and Rayleigh communication
//!   channels with Gauss-Markov estimation error,
//! - [`canceller`]: the sparse analog canceller with tap imperfections,
//! - [`metrics`]: closed-form SINR / MSE / residual-SI covariance and a
//!   Monte Carlo sampler of the received signal,
//! - [`combiner`]: effective interfering channels and MMSE combiners,
//! - [`optimizer`]: the alternating non-monotone gradient-projection
//!   precoder design (ALTnmGAP),
//! - [`experiment`]: the Monte Carlo sweep harness and its CSV/JSON output.
//!
//! All powers are linear milliwatts internally; dB/dBm only appear in
//! [`config::SystemConfig`] and in emitted results.

pub mod canceller;
pub mod channel;
pub mod combiner;
pub mod config;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod metrics;
pub mod optimizer;
pub mod oracle;
pub mod scenario;
pub mod selfcheck;
pub mod units;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec, C64};
pub use scenario::{Node, NodeDesign, Scenario};
