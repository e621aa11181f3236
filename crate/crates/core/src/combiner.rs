//! Effective interfering channels and normalized MMSE receive filters.
//!
//! The interference-plus-noise power seen by a unit-norm combiner is the
//! quadratic form `u (H_u H_uᴴ + σ'² I) uᴴ`, where the columns of `H_u` are
//!
//! ```text
//! [ H̃_kk v_k,  √β Ĥ_kk Γ_1 v_k,  √(β(1-τ²)) Ĥ_ℓk Γ_1 v_ℓ,  …,  √β Ĥ_kk Γ_N v_k,  √(β(1-τ²)) Ĥ_ℓk Γ_N v_ℓ ]
//! ```
//!
//! and `σ'²` gathers the isotropic terms
//! `τ'²‖v_k‖²(1+β) + q τ²‖v_ℓ‖²(1+β) + σ²`. The distortion columns carry
//! `√β` so that `H_u H_uᴴ` has the β-linear distortion power.

use crate::error::Result;
use crate::linalg::{hermitian_condition, solve_hpd, CMat, CVec, C64};
use crate::metrics::Combiner;
use crate::scenario::{Node, Scenario};

/// Condition number above which the MMSE system is regularised.
pub const ILL_CONDITIONED: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveInterference {
    /// `M x (2N+1)`.
    pub h_u: CMat,
    pub sigma_prime_sq: f64,
}

impl EffectiveInterference {
    /// `H_u H_uᴴ + σ'² I`.
    pub fn covariance(&self) -> CMat {
        let m = self.h_u.nrows();
        &self.h_u * self.h_u.adjoint() + CMat::identity(m, m) * C64::from(self.sigma_prime_sq)
    }
}

pub fn effective_interference(scn: &Scenario, v_own: &CVec, v_partner: &CVec, node: Node) -> Result<EffectiveInterference> {
    scn.check_precoder(v_own)?;
    scn.check_precoder(v_partner)?;
    let set = &scn.channels;
    let (m, n) = scn.shape();
    let beta = scn.hw.beta;
    let tau2 = set.tau_comm * set.tau_comm;
    let h_si = set.si(node);
    let h_comm = set.comm_into(node);

    let mut h_u = CMat::zeros(m, 2 * n + 1);
    h_u.set_column(0, &(scn.residual_si(node) * v_own));
    let own_scale = C64::from(beta.sqrt());
    let partner_scale = C64::from((beta * (1.0 - tau2)).sqrt());
    for i in 0..n {
        h_u.set_column(1 + 2 * i, &(h_si.column(i) * (v_own[i] * own_scale)));
        h_u.set_column(2 + 2 * i, &(h_comm.column(i) * (v_partner[i] * partner_scale)));
    }

    let sigma_prime_sq = set.tau_si_scaled.powi(2) * v_own.norm_squared() * (1.0 + beta)
        + set.q_comm * tau2 * v_partner.norm_squared() * (1.0 + beta)
        + scn.hw.noise_power;
    Ok(EffectiveInterference { h_u, sigma_prime_sq })
}

/// Normalized MMSE combiner `u ∝ vᴴĤᴴ (H_u H_uᴴ + σ'² I + (1-τ²) Ĥ v vᴴ Ĥᴴ)⁻¹`.
///
/// The inverse is never formed: the Hermitian system is solved with `Ĥ v` as
/// right-hand side, which gives `uᴴ` up to scale. A zero intended channel
/// (`Ĥ v = 0`) has no preferred direction; the first unit vector is returned.
pub fn mmse_filter(v_intended: &CVec, h_hat_comm: &CMat, eff: &EffectiveInterference, tau_comm: f64) -> Result<Combiner> {
    let m = h_hat_comm.nrows();
    let a = h_hat_comm * v_intended;
    if a.norm() == 0.0 {
        let mut e1 = CVec::zeros(m);
        e1[0] = C64::new(1.0, 0.0);
        return Ok(Combiner::from_row(e1));
    }
    let mut r = eff.covariance() + &a * a.adjoint() * C64::from(1.0 - tau_comm * tau_comm);

    let cond = hermitian_condition(&r);
    if cond > ILL_CONDITIONED {
        let ridge = r.diagonal().iter().map(|d| d.re).fold(0.0, f64::max) / ILL_CONDITIONED;
        log::warn!("MMSE system ill-conditioned (cond={cond:.3e}), adding ridge {ridge:.3e}");
        for i in 0..m {
            r[(i, i)] += C64::from(ridge);
        }
    }
    let x = solve_hpd(&r, &a).ok_or_else(|| crate::Error::Numerical("MMSE solve failed".into()))?;
    Combiner::normalized(x.conjugate())
        .ok_or_else(|| crate::Error::Numerical("MMSE filter vanished".into()))
}

/// MMSE combiners of both nodes for the given precoders `[v_1, v_2]`.
pub fn mmse_combiners(scn: &Scenario, v: &[CVec; 2]) -> Result<[Combiner; 2]> {
    let one = node_mmse(scn, v, Node::One)?;
    let two = node_mmse(scn, v, Node::Two)?;
    Ok([one, two])
}

fn node_mmse(scn: &Scenario, v: &[CVec; 2], node: Node) -> Result<Combiner> {
    let own = &v[node.index()];
    let partner = &v[node.partner().index()];
    let eff = effective_interference(scn, own, partner, node)?;
    mmse_filter(partner, scn.channels.comm_into(node), &eff, scn.channels.tau_comm)
}
