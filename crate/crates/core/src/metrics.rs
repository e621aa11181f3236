//! Closed-form link metrics and a Monte Carlo sampler of the received signal.
//!
//! With unit-norm combiner `u_k`, the intended-signal power and the
//! interference-plus-noise power at node `k` are
//!
//! ```text
//! P_com,k = (1-τ²) |u Ĥ_ℓk v_ℓ|²
//! Σ_k     = |u H̃_kk v_k|² + τ'²‖v_k‖²(1+β) + β u Ĥ_kk diag(v_k v_kᴴ) Ĥ_kkᴴ uᴴ
//!         + q τ²‖v_ℓ‖²(1+β) + β(1-τ²) u Ĥ_ℓk diag(v_ℓ v_ℓᴴ) Ĥ_ℓkᴴ uᴴ + σ²
//! ```
//!
//! where the CSI-error terms use `𝔼[G A Gᴴ] = σ_g² tr(A) I` for i.i.d.
//! `CN(0, σ_g²)` matrices `G`. The residual-SI covariance before the receive
//! chain is
//!
//! ```text
//! Φ_k = H̃ v vᴴ H̃ᴴ + τ'²‖v‖²(1+β) I + β Ĥ_kk diag(v vᴴ) Ĥ_kkᴴ
//! ```
//!
//! and its diagonal is what the per-antenna SI constraints bound.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cn, cn_matrix, cn_vector, hermitian_part, CMat, CVec, C64};
use crate::scenario::{Node, NodeDesign, Scenario};
use crate::units::mw_to_dbm;

/// Tolerance on `‖u‖ = 1` accepted by the closed-form metrics.
pub const COMBINER_NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardwareProfile {
    /// Transmit distortion power ratio β (linear).
    pub beta: f64,
    /// Receiver noise power σ², mW.
    pub noise_power: f64,
}

impl HardwareProfile {
    pub fn new(beta: f64, noise_power: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidConfig { field: "beta", expected: ">= 0", got: beta.to_string() });
        }
        if !(noise_power > 0.0 && noise_power.is_finite()) {
            return Err(Error::InvalidConfig {
                field: "noise_power",
                expected: "> 0",
                got: noise_power.to_string(),
            });
        }
        Ok(Self { beta, noise_power })
    }
}

/// Receive combiner, a `1 x M` row vector stored by its entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Combiner(CVec);

impl Combiner {
    /// Wraps a row as-is; metrics reject it later if it is not unit-norm.
    pub fn from_row(row: CVec) -> Self {
        Self(row)
    }

    /// Scales `row` to unit norm. `None` for a (numerically) zero row.
    pub fn normalized(row: CVec) -> Option<Self> {
        let n = row.norm();
        if n > 0.0 && n.is_finite() {
            Some(Self(row / C64::from(n)))
        } else {
            None
        }
    }

    pub fn row(&self) -> &CVec {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// `u x`.
    #[inline]
    pub fn apply(&self, x: &CVec) -> C64 {
        self.0.dot(x)
    }

    /// The row `u H`, returned as a length-`N` vector.
    pub fn times(&self, h: &CMat) -> CVec {
        h.transpose() * &self.0
    }

    /// `uᴴ`, the combiner as a column (conjugated entries).
    pub fn adjoint_column(&self) -> CVec {
        self.0.conjugate()
    }

    pub(crate) fn check(&self, m: usize) -> Result<()> {
        if self.0.len() != m {
            return Err(Error::shape("combiner", (1, m), (1, self.0.len())));
        }
        let norm = self.norm();
        if (norm - 1.0).abs() > COMBINER_NORM_TOL {
            return Err(Error::NonNormalizedCombiner { norm });
        }
        Ok(())
    }
}

/// Per-node closed-form link quality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkMetrics {
    pub sinr: f64,
    pub mse: f64,
    pub p_com: f64,
    pub sigma_ipn: f64,
    /// Diagonal of the residual-SI covariance, mW.
    pub phi_diag: Vec<f64>,
}

/// `Σ_i |[uH]_i|² |x_i|²`, i.e. `u H diag(x xᴴ) Hᴴ uᴴ`.
fn diag_loaded_power(uh: &CVec, x: &CVec) -> f64 {
    uh.iter().zip(x.iter()).map(|(a, b)| a.norm_sqr() * b.norm_sqr()).sum()
}

/// `(1-τ²)|u Ĥ v|²`.
pub fn signal_power(u: &Combiner, h_hat_comm: &CMat, v_partner: &CVec, tau_comm: f64) -> Result<f64> {
    u.check(h_hat_comm.nrows())?;
    if v_partner.len() != h_hat_comm.ncols() {
        return Err(Error::shape("precoder", (h_hat_comm.ncols(), 1), (v_partner.len(), 1)));
    }
    Ok((1.0 - tau_comm * tau_comm) * u.apply(&(h_hat_comm * v_partner)).norm_sqr())
}

/// Interference-plus-noise power `Σ_k` at `node`, given both precoders and
/// the node's combiner.
pub fn interference_plus_noise_raw(
    scn: &Scenario,
    v_own: &CVec,
    v_partner: &CVec,
    u: &Combiner,
    node: Node,
) -> Result<f64> {
    scn.check_precoder(v_own)?;
    scn.check_precoder(v_partner)?;
    u.check(scn.rx_antennas())?;

    let set = &scn.channels;
    let beta = scn.hw.beta;
    let tau = set.tau_comm;
    let tau_p2 = set.tau_si_scaled * set.tau_si_scaled;

    let residual = u.apply(&(scn.residual_si(node) * v_own)).norm_sqr();
    let si_csi = tau_p2 * v_own.norm_squared() * (1.0 + beta);
    let si_dist = beta * diag_loaded_power(&u.times(set.si(node)), v_own);
    let comm_csi = set.q_comm * tau * tau * v_partner.norm_squared() * (1.0 + beta);
    let comm_dist = beta * (1.0 - tau * tau) * diag_loaded_power(&u.times(set.comm_into(node)), v_partner);
    Ok(residual + si_csi + si_dist + comm_csi + comm_dist + scn.hw.noise_power)
}

pub fn interference_plus_noise(scn: &Scenario, designs: &[NodeDesign; 2], node: Node) -> Result<f64> {
    let own = &designs[node.index()];
    let partner = &designs[node.partner().index()];
    interference_plus_noise_raw(scn, &own.precoder, &partner.precoder, &own.combiner, node)
}

#[inline]
pub fn mse(sinr: f64) -> f64 {
    1.0 / sinr
}

/// SINR `γ_k = P_com,k / Σ_k` from raw vectors.
pub fn sinr_raw(scn: &Scenario, v_own: &CVec, v_partner: &CVec, u: &Combiner, node: Node) -> Result<f64> {
    let p = signal_power(u, scn.channels.comm_into(node), v_partner, scn.channels.tau_comm)?;
    let s = interference_plus_noise_raw(scn, v_own, v_partner, u, node)?;
    Ok(p / s)
}

/// All closed-form metrics of `node`.
pub fn link_metrics(scn: &Scenario, designs: &[NodeDesign; 2], node: Node) -> Result<LinkMetrics> {
    let own = &designs[node.index()];
    let partner = &designs[node.partner().index()];
    let p_com = signal_power(&own.combiner, scn.channels.comm_into(node), &partner.precoder, scn.channels.tau_comm)?;
    let sigma_ipn = interference_plus_noise(scn, designs, node)?;
    let sinr = p_com / sigma_ipn;
    let phi = residual_si_covariance(scn, &own.precoder, node)?;
    Ok(LinkMetrics {
        sinr,
        mse: mse(sinr),
        p_com,
        sigma_ipn,
        phi_diag: phi.diagonal().iter().map(|d| d.re.max(0.0)).collect(),
    })
}

/// Residual distorted SI covariance `Φ_k` (Hermitian, PSD).
pub fn residual_si_covariance(scn: &Scenario, v: &CVec, node: Node) -> Result<CMat> {
    scn.check_precoder(v)?;
    let set = &scn.channels;
    let beta = scn.hw.beta;
    let m = scn.rx_antennas();

    let hv = scn.residual_si(node) * v;
    let mut phi = &hv * hv.adjoint();
    let iso = set.tau_si_scaled.powi(2) * v.norm_squared() * (1.0 + beta);
    for i in 0..m {
        phi[(i, i)] += C64::from(iso);
    }
    if beta > 0.0 {
        let h = set.si(node);
        let dv = CMat::from_diagonal(&CVec::from_iterator(
            v.len(),
            v.iter().map(|x| C64::from(x.norm_sqr())),
        ));
        phi += h * dv * h.adjoint() * C64::from(beta);
    }
    Ok(hermitian_part(&phi))
}

/// Diagonal of `Φ` in dBm; zero power maps to `-inf`.
pub fn residual_si_dbm(phi: &CMat) -> Vec<f64> {
    phi.diagonal().iter().map(|d| mw_to_dbm(d.re)).collect()
}

/// One realisation of the received signal at a node, split by origin.
#[derive(Debug, Clone)]
pub struct ReceivedSample {
    /// Partner's symbol `s_ℓ`.
    pub symbol: C64,
    /// `sqrt(1-τ²) Ĥ_ℓk v_ℓ s_ℓ`.
    pub intended: CVec,
    /// Distortion and CSI-error part of the communication link.
    pub comm_interference: CVec,
    /// `H̃ v s + τ' E (v s + w) + Ĥ w`.
    pub residual_si: CVec,
    pub noise: CVec,
}

impl ReceivedSample {
    /// `y_k`.
    pub fn total(&self) -> CVec {
        &self.intended + &self.comm_interference + &self.residual_si + &self.noise
    }

    pub fn interference_plus_noise(&self) -> CVec {
        &self.comm_interference + &self.residual_si + &self.noise
    }
}

/// Draws `w ~ CN(0, β diag(v vᴴ))`.
fn distortion<R: Rng + ?Sized>(rng: &mut R, v: &CVec, beta: f64) -> CVec {
    CVec::from_iterator(v.len(), v.iter().map(|x| cn(rng, beta * x.norm_sqr())))
}

/// One draw of the received signal at `node` for fixed precoders.
///
/// Symbols are unit-power circular Gaussian; the estimation errors of both
/// the communication and the SI channel are redrawn on every call, so sample
/// averages converge to the closed-form expressions (which average over the
/// CSI error). Only used as a verification oracle.
pub fn sample_received_signal<R: Rng + ?Sized>(
    scn: &Scenario,
    v_own: &CVec,
    v_partner: &CVec,
    node: Node,
    rng: &mut R,
) -> ReceivedSample {
    let set = &scn.channels;
    let (m, n) = scn.shape();
    let beta = scn.hw.beta;
    let tau = set.tau_comm;
    let a = (1.0 - tau * tau).sqrt();

    let s_own = cn(rng, 1.0);
    let s_partner = cn(rng, 1.0);
    let w_own = distortion(rng, v_own, beta);
    let w_partner = distortion(rng, v_partner, beta);
    let e_comm = cn_matrix(rng, m, n, set.q_comm);
    let e_si = cn_matrix(rng, m, n, 1.0);
    let noise = cn_vector(rng, m, scn.hw.noise_power);

    let h_comm = set.comm_into(node);
    let tx_partner = v_partner * s_partner + &w_partner;
    let tx_own = v_own * s_own + &w_own;

    let intended = (h_comm * v_partner) * (s_partner * a);
    let comm_interference = (h_comm * &w_partner) * C64::from(a) + (e_comm * tx_partner) * C64::from(tau);
    let residual_si = (scn.residual_si(node) * v_own) * s_own
        + (e_si * tx_own) * C64::from(set.tau_si_scaled)
        + set.si(node) * &w_own;

    ReceivedSample { symbol: s_partner, intended, comm_interference, residual_si, noise }
}
