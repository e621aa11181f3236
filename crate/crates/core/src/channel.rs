//! Communication and self-interference channels.
//!
//! Communication channels are i.i.d. Rayleigh with path gain `q_comm`. The
//! self-interference (SI) channel is Rician: a rank-one line-of-sight part
//! built from two ULA responses plus a scattered part. Imperfect CSI follows
//! the Gauss-Markov model, where the true channel is
//!
//! ```text
//! H_comm = sqrt(1 - τ²) Ĥ_comm + τ E_comm,      E_comm ~ CN(0, q_comm)
//! H_si   = Ĥ_si + τ' E_si,                       E_si   ~ CN(0, 1)
//! τ'²    = q_si τ² / (1 + κ)
//! ```
//!
//! with the line-of-sight part of the SI channel assumed perfectly known.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cn_matrix, CMat, CVec, C64};
use crate::scenario::Node;

/// Uniform linear array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UlaGeometry {
    pub element_count: usize,
    /// Element spacing in wavelengths.
    pub spacing: f64,
}

impl UlaGeometry {
    pub fn new(element_count: usize, spacing: f64) -> Result<Self> {
        if element_count == 0 {
            return Err(Error::InvalidConfig {
                field: "element_count",
                expected: ">= 1",
                got: element_count.to_string(),
            });
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidConfig {
                field: "spacing",
                expected: "> 0",
                got: spacing.to_string(),
            });
        }
        Ok(Self { element_count, spacing })
    }

    pub fn half_wavelength(element_count: usize) -> Result<Self> {
        Self::new(element_count, 0.5)
    }
}

/// Line-of-sight parameters of one SI channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LosParams {
    /// Unit-magnitude complex gain.
    pub complex_gain: C64,
    pub aod_rad: f64,
    pub aoa_rad: f64,
}

impl LosParams {
    fn draw<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let phase = rng.random_range(0.0..2.0 * PI);
        let aod_rad = rng.random_range(0.0..2.0 * PI);
        let aoa_rad = rng.random_range(0.0..2.0 * PI);
        Self {
            complex_gain: C64::from_polar(1.0, phase),
            aod_rad,
            aoa_rad,
        }
    }
}

/// Array response as a row vector: element `i` is `exp(j 2π d i cos θ)`.
pub fn ula_steering(geometry: UlaGeometry, angle_rad: f64) -> CVec {
    let phase_step = 2.0 * PI * geometry.spacing * angle_rad.cos();
    CVec::from_fn(geometry.element_count, |i, _| {
        if i == 0 {
            C64::new(1.0, 0.0)
        } else {
            C64::from_polar(1.0, phase_step * i as f64)
        }
    })
}

/// Rank-one LoS SI matrix `α a_RX(θ_R)ᴴ a_TX(θ_T)` of shape `M x N`.
pub fn make_los_si(tx: UlaGeometry, rx: UlaGeometry, los: LosParams) -> CMat {
    let a_tx = ula_steering(tx, los.aod_rad);
    let a_rx = ula_steering(rx, los.aoa_rad);
    CMat::from_fn(rx.element_count, tx.element_count, |m, n| {
        los.complex_gain * a_rx[m].conj() * a_tx[n]
    })
}

/// Scalar parameters needed to draw one [`ChannelSet`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub n_tx: usize,
    pub m_rx: usize,
    pub spacing: f64,
    /// Linear path gain of the communication channels.
    pub q_comm: f64,
    /// Linear path gain of the SI channels.
    pub q_si: f64,
    /// Linear Rician K-factor.
    pub kappa: f64,
    pub tau_comm: f64,
    pub tau_si: f64,
}

/// Identifies one of the four channels of a two-node link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelId {
    /// Node 1 to node 2.
    Comm12,
    /// Node 2 to node 1.
    Comm21,
    Si1,
    Si2,
}

impl FromStr for ChannelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "comm_12" => Ok(ChannelId::Comm12),
            "comm_21" => Ok(ChannelId::Comm21),
            "si_1" => Ok(ChannelId::Si1),
            "si_2" => Ok(ChannelId::Si2),
            other => Err(Error::UnknownChannel(other.to_string())),
        }
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelId::Comm12 => "comm_12",
            ChannelId::Comm21 => "comm_21",
            ChannelId::Si1 => "si_1",
            ChannelId::Si2 => "si_2",
        })
    }
}

/// Estimated channels, estimation errors and the derived scalars for one
/// block-fading trial. All matrices are `M x N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub h_hat_comm_12: CMat,
    pub h_hat_comm_21: CMat,
    pub h_hat_si_1: CMat,
    pub h_hat_si_2: CMat,
    pub e_comm_12: CMat,
    pub e_comm_21: CMat,
    pub e_si_1: CMat,
    pub e_si_2: CMat,
    pub q_comm: f64,
    pub q_si: f64,
    pub tau_comm: f64,
    pub tau_si: f64,
    pub tau_si_scaled: f64,
    pub kappa: f64,
    pub los: [LosParams; 2],
}

/// `τ' = sqrt(q τ² / (1 + κ))`.
pub fn scaled_si_accuracy(q_si: f64, tau_si: f64, kappa: f64) -> f64 {
    (q_si * tau_si * tau_si / (1.0 + kappa)).sqrt()
}

/// Estimated SI channel `sqrt(qκ/(1+κ)) H_LoS + sqrt(q(1-τ²)/(1+κ)) Ĥ_NLoS`.
fn estimated_si(los: &CMat, nlos: &CMat, q_si: f64, kappa: f64, tau_si: f64) -> CMat {
    let los_scale = (q_si * kappa / (1.0 + kappa)).sqrt();
    let nlos_scale = (q_si * (1.0 - tau_si * tau_si) / (1.0 + kappa)).sqrt();
    los * C64::from(los_scale) + nlos * C64::from(nlos_scale)
}

/// Draws the channel set of one trial. Deterministic in `seed`.
///
/// Draw order is fixed: LoS parameters for node 1 then node 2, then the
/// estimated communication channels, the scattered SI parts and finally the
/// four error matrices.
pub fn sample_channel_set(params: &ChannelParams, seed: u64) -> Result<ChannelSet> {
    let tx = UlaGeometry::new(params.n_tx, params.spacing)?;
    let rx = UlaGeometry::new(params.m_rx, params.spacing)?;
    if !(params.q_comm > 0.0 && params.q_si > 0.0) {
        return Err(Error::InvalidConfig {
            field: "path gains",
            expected: "> 0",
            got: format!("q_comm={}, q_si={}", params.q_comm, params.q_si),
        });
    }
    for (field, tau) in [("tau_comm", params.tau_comm), ("tau_si", params.tau_si)] {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::InvalidConfig {
                field,
                expected: "in [0, 1]",
                got: tau.to_string(),
            });
        }
    }

    let (m, n) = (params.m_rx, params.n_tx);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let los = [LosParams::draw(&mut rng), LosParams::draw(&mut rng)];

    let h_hat_comm_12 = cn_matrix(&mut rng, m, n, params.q_comm);
    let h_hat_comm_21 = cn_matrix(&mut rng, m, n, params.q_comm);
    let nlos_1 = cn_matrix(&mut rng, m, n, 1.0);
    let nlos_2 = cn_matrix(&mut rng, m, n, 1.0);
    let e_comm_12 = cn_matrix(&mut rng, m, n, params.q_comm);
    let e_comm_21 = cn_matrix(&mut rng, m, n, params.q_comm);
    let e_si_1 = cn_matrix(&mut rng, m, n, 1.0);
    let e_si_2 = cn_matrix(&mut rng, m, n, 1.0);

    let los_1 = make_los_si(tx, rx, los[0]);
    let los_2 = make_los_si(tx, rx, los[1]);

    Ok(ChannelSet {
        h_hat_si_1: estimated_si(&los_1, &nlos_1, params.q_si, params.kappa, params.tau_si),
        h_hat_si_2: estimated_si(&los_2, &nlos_2, params.q_si, params.kappa, params.tau_si),
        h_hat_comm_12,
        h_hat_comm_21,
        e_comm_12,
        e_comm_21,
        e_si_1,
        e_si_2,
        q_comm: params.q_comm,
        q_si: params.q_si,
        tau_comm: params.tau_comm,
        tau_si: params.tau_si,
        tau_si_scaled: scaled_si_accuracy(params.q_si, params.tau_si, params.kappa),
        kappa: params.kappa,
        los,
    })
}

impl ChannelSet {
    pub fn shape(&self) -> (usize, usize) {
        self.h_hat_comm_12.shape()
    }

    /// Estimated channel from the partner of `node` into `node` (`Ĥ_ℓk`).
    pub fn comm_into(&self, node: Node) -> &CMat {
        match node {
            Node::One => &self.h_hat_comm_21,
            Node::Two => &self.h_hat_comm_12,
        }
    }

    /// Estimated SI channel of `node` (`Ĥ_kk`).
    pub fn si(&self, node: Node) -> &CMat {
        match node {
            Node::One => &self.h_hat_si_1,
            Node::Two => &self.h_hat_si_2,
        }
    }

    pub fn estimate(&self, which: ChannelId) -> &CMat {
        match which {
            ChannelId::Comm12 => &self.h_hat_comm_12,
            ChannelId::Comm21 => &self.h_hat_comm_21,
            ChannelId::Si1 => &self.h_hat_si_1,
            ChannelId::Si2 => &self.h_hat_si_2,
        }
    }

    pub fn error(&self, which: ChannelId) -> &CMat {
        match which {
            ChannelId::Comm12 => &self.e_comm_12,
            ChannelId::Comm21 => &self.e_comm_21,
            ChannelId::Si1 => &self.e_si_1,
            ChannelId::Si2 => &self.e_si_2,
        }
    }

    /// The channel actually experienced, reconstructed from estimate and error.
    pub fn true_channel(&self, which: ChannelId) -> CMat {
        match which {
            ChannelId::Comm12 | ChannelId::Comm21 => {
                let t = self.tau_comm;
                self.estimate(which) * C64::from((1.0 - t * t).sqrt())
                    + self.error(which) * C64::from(t)
            }
            ChannelId::Si1 | ChannelId::Si2 => {
                self.estimate(which) + self.error(which) * C64::from(self.tau_si_scaled)
            }
        }
    }

    /// [`true_channel`](Self::true_channel) by textual id.
    pub fn true_channel_by_name(&self, which: &str) -> Result<CMat> {
        Ok(self.true_channel(which.parse()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{db_to_linear, pathloss_to_gain, tau_from_db};
    use proptest::prelude::*;

    fn params(tau: f64) -> ChannelParams {
        ChannelParams {
            n_tx: 4,
            m_rx: 4,
            spacing: 0.5,
            q_comm: pathloss_to_gain(110.0),
            q_si: pathloss_to_gain(40.0),
            kappa: db_to_linear(35.0),
            tau_comm: tau,
            tau_si: tau,
        }
    }

    fn approx(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn steering_single_element() {
        let g = UlaGeometry::half_wavelength(1).unwrap();
        let a = ula_steering(g, 1.234);
        assert_eq!(a.len(), 1);
        assert_eq!(a[0], C64::new(1.0, 0.0));
    }

    #[test]
    fn steering_broadside_is_all_ones() {
        let g = UlaGeometry::half_wavelength(2).unwrap();
        let a = ula_steering(g, PI / 2.0);
        assert_eq!(a[0], C64::new(1.0, 0.0));
        assert!(approx(a[1], C64::new(1.0, 0.0), 1e-15));
    }

    #[test]
    fn steering_endfire_alternates() {
        let g = UlaGeometry::half_wavelength(4).unwrap();
        let a = ula_steering(g, 0.0);
        for (i, want) in [1.0, -1.0, 1.0, -1.0].iter().enumerate() {
            assert!(approx(a[i], C64::new(*want, 0.0), 1e-14), "{i}: {}", a[i]);
        }
    }

    #[test]
    fn invalid_geometry_rejected() {
        assert!(UlaGeometry::new(0, 0.5).is_err());
        assert!(UlaGeometry::new(4, 0.0).is_err());
    }

    #[test]
    fn los_scalar_and_broadside() {
        let one = UlaGeometry::half_wavelength(1).unwrap();
        let los = LosParams { complex_gain: C64::new(1.0, 0.0), aod_rad: 0.3, aoa_rad: 2.0 };
        assert_eq!(make_los_si(one, one, los)[(0, 0)], C64::new(1.0, 0.0));

        let two = UlaGeometry::half_wavelength(2).unwrap();
        let los = LosParams { complex_gain: C64::new(1.0, 0.0), aod_rad: PI / 2.0, aoa_rad: PI / 2.0 };
        let h = make_los_si(two, two, los);
        for e in h.iter() {
            assert!(approx(*e, C64::new(1.0, 0.0), 1e-15));
        }
    }

    #[test]
    fn los_is_rank_one_with_unit_entries() {
        let g = UlaGeometry::half_wavelength(4).unwrap();
        let los = LosParams {
            complex_gain: C64::from_polar(1.0, 0.7),
            aod_rad: 1.1,
            aoa_rad: 4.2,
        };
        let h = make_los_si(g, g, los);
        for e in h.iter() {
            assert!((e.norm() - 1.0).abs() < 1e-14);
        }
        let sv = h.singular_values();
        let mut s: Vec<f64> = sv.iter().copied().collect();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!((s[0] - 4.0).abs() < 1e-12);
        assert!(s[1] < 1e-12 * s[0]);
    }

    #[test]
    fn paper_path_gains() {
        let p = params(0.0);
        assert!((p.q_comm - 1e-11).abs() < 1e-24);
        assert!((p.q_si - 1e-4).abs() < 1e-17);
        assert!((p.kappa - 10f64.powf(3.5)).abs() < 1e-9);
    }

    #[test]
    fn deterministic_in_seed() {
        let p = params(tau_from_db(-30.0));
        let a = sample_channel_set(&p, 42).unwrap();
        let b = sample_channel_set(&p, 42).unwrap();
        let c = sample_channel_set(&p, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn scaled_accuracy_identity() {
        let p = params(tau_from_db(-20.0));
        let set = sample_channel_set(&p, 1).unwrap();
        let lhs = set.tau_si_scaled.powi(2) * (1.0 + set.kappa) / set.q_si;
        assert!((lhs - set.tau_si.powi(2)).abs() <= 1e-15 * set.tau_si.powi(2));
    }

    #[test]
    fn true_channel_limits() {
        let set = sample_channel_set(&params(0.0), 3).unwrap();
        assert_eq!(set.true_channel(ChannelId::Comm12), set.h_hat_comm_12);
        let set = sample_channel_set(&params(1.0), 3).unwrap();
        assert_eq!(set.true_channel(ChannelId::Comm21), set.e_comm_21);
    }

    #[test]
    fn unknown_channel_name_rejected() {
        let set = sample_channel_set(&params(0.0), 3).unwrap();
        assert!(matches!(
            set.true_channel_by_name("si_3"),
            Err(Error::UnknownChannel(_))
        ));
        assert!(set.true_channel_by_name("si_1").is_ok());
    }

    #[test]
    fn invalid_tau_rejected() {
        assert!(sample_channel_set(&params(1.5), 1).is_err());
    }

    /// Per-entry moments over many independent draws.
    fn entry_moments(draws: usize, tau: f64, f: impl Fn(&ChannelSet) -> C64) -> f64 {
        let p = params(tau);
        (0..draws)
            .map(|s| f(&sample_channel_set(&p, s as u64).unwrap()).norm_sqr())
            .sum::<f64>()
            / draws as f64
    }

    #[test]
    fn comm_estimate_variance_matches_path_gain() {
        let draws = 100_000;
        let v = entry_moments(draws, 0.0, |s| s.h_hat_comm_12[(1, 2)]);
        assert!((v / 1e-11 - 1.0).abs() < 0.02, "ratio {}", v / 1e-11);
    }

    #[test]
    fn comm_error_power_follows_tau() {
        let draws = 100_000;
        let tau = tau_from_db(-40.0);
        let v = entry_moments(draws, tau, |s| {
            s.true_channel(ChannelId::Comm21)[(0, 3)]
                - s.h_hat_comm_21[(0, 3)] * C64::from((1.0 - tau * tau).sqrt())
        });
        let want = tau * tau * 1e-11;
        assert!((v / want - 1.0).abs() < 0.02, "ratio {}", v / want);
    }

    #[test]
    fn comm_mixing_preserves_variance() {
        let draws = 50_000;
        for tau in [0.2, 0.7] {
            let v = entry_moments(draws, tau, |s| s.true_channel(ChannelId::Comm12)[(2, 2)]);
            assert!((v / 1e-11 - 1.0).abs() < 0.03, "tau {tau}: ratio {}", v / 1e-11);
        }
    }

    proptest! {
        #[test]
        fn steering_entries_unit_modulus(n in 1usize..16, d in 0.05f64..2.0, ang in 0.0f64..(2.0 * PI)) {
            let a = ula_steering(UlaGeometry::new(n, d).unwrap(), ang);
            prop_assert_eq!(a[0], C64::new(1.0, 0.0));
            for e in a.iter() {
                prop_assert!((e.norm() - 1.0).abs() < 1e-12);
            }
        }
    }
}
