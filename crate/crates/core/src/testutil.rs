//! Shared fixtures for unit tests.

use crate::canceller::{build_canceller, CancellerSpec};
use crate::channel::{sample_channel_set, ChannelParams};
use crate::metrics::HardwareProfile;
use crate::scenario::Scenario;
use crate::units::tau_from_db;

/// 4x4 scenario with the default link budget. `perfect_cancel` uses a full,
/// error-free canceller (`H̃ = 0`).
pub(crate) fn scenario(tau_db: f64, beta: f64, perfect_cancel: bool, seed: u64) -> Scenario {
    let tau = tau_from_db(tau_db);
    let p = ChannelParams {
        n_tx: 4,
        m_rx: 4,
        spacing: 0.5,
        q_comm: 1e-11,
        q_si: 1e-4,
        kappa: 10f64.powf(3.5),
        tau_comm: tau,
        tau_si: tau,
    };
    let set = sample_channel_set(&p, seed).unwrap();
    let spec = if perfect_cancel {
        CancellerSpec::ideal(16)
    } else {
        CancellerSpec { n_tap: 8, amp_imperf_db: 0.01, phase_imperf_deg: 0.065 }
    };
    let c1 = build_canceller(&set.h_hat_si_1, &spec, seed + 1).unwrap();
    let c2 = build_canceller(&set.h_hat_si_2, &spec, seed + 2).unwrap();
    Scenario::new(set, [c1, c2], HardwareProfile::new(beta, 1e-9).unwrap()).unwrap()
}
