use crate::error::Result;
use crate::linalg::{CVec, C64};
use crate::metrics::{interference_plus_noise_raw, signal_power, sinr_raw, Combiner};
use crate::scenario::{Node, Scenario};

/// `g = γ_1 + γ_2` for precoders `v` and combiners `u`.
pub fn sum_sinr(scn: &Scenario, v: &[CVec; 2], u: &[Combiner; 2]) -> Result<f64> {
    let g1 = sinr_raw(scn, &v[0], &v[1], &u[0], Node::One)?;
    let g2 = sinr_raw(scn, &v[1], &v[0], &u[1], Node::Two)?;
    Ok(g1 + g2)
}

/// Sum SINR as a function of `node`'s precoder `x`, partner precoder and both
/// combiners held fixed.
pub fn node_objective(scn: &Scenario, x: &CVec, v_partner: &CVec, u: &[Combiner; 2], node: Node) -> Result<f64> {
    let partner = node.partner();
    let own = sinr_raw(scn, x, v_partner, &u[node.index()], node)?;
    let other = sinr_raw(scn, v_partner, x, &u[partner.index()], partner)?;
    Ok(own + other)
}

/// `Σ_i |[uH]_i|² x_i`, the Wirtinger derivative of `u H diag(x xᴴ) Hᴴ uᴴ`.
fn diag_weighted(uh: &CVec, x: &CVec) -> CVec {
    CVec::from_iterator(x.len(), uh.iter().zip(x.iter()).map(|(a, b)| b * a.norm_sqr()))
}

/// Wirtinger gradient `∂(γ_k + γ_ℓ)/∂v_k*` by the quotient rule. `node` is
/// `k`; `γ_k` depends on `v_k` only through `Σ_k`, `γ_ℓ` through both its
/// numerator and `Σ_ℓ`.
pub fn sum_sinr_gradient(scn: &Scenario, v: &[CVec; 2], u: &[Combiner; 2], node: Node) -> Result<CVec> {
    let partner = node.partner();
    let v_k = &v[node.index()];
    let v_l = &v[partner.index()];
    let u_k = &u[node.index()];
    let u_l = &u[partner.index()];
    let set = &scn.channels;
    let beta = scn.hw.beta;
    let tau2 = set.tau_comm * set.tau_comm;

    let p_k = signal_power(u_k, set.comm_into(node), v_l, set.tau_comm)?;
    let s_k = interference_plus_noise_raw(scn, v_k, v_l, u_k, node)?;
    let p_l = signal_power(u_l, set.comm_into(partner), v_k, set.tau_comm)?;
    let s_l = interference_plus_noise_raw(scn, v_l, v_k, u_l, partner)?;

    // ∂Σ_k/∂v_k*
    let r = u_k.times(scn.residual_si(node));
    let mut d_sigma_k = r.conjugate() * r.dot(v_k);
    d_sigma_k += v_k * C64::from(set.tau_si_scaled.powi(2) * (1.0 + beta));
    d_sigma_k += diag_weighted(&u_k.times(set.si(node)), v_k) * C64::from(beta);

    // ∂P_com,ℓ/∂v_k* and ∂Σ_ℓ/∂v_k*
    let c = u_l.times(set.comm_into(partner));
    let d_p_l = c.conjugate() * (c.dot(v_k) * (1.0 - tau2));
    let d_sigma_l = diag_weighted(&c, v_k) * C64::from(beta * (1.0 - tau2))
        + v_k * C64::from(set.q_comm * tau2 * (1.0 + beta));

    let own = d_sigma_k * C64::from(-p_k / (s_k * s_k));
    let other = (d_p_l * C64::from(s_l) - d_sigma_l * C64::from(p_l)) / C64::from(s_l * s_l);
    Ok(own + other)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combiner::mmse_combiners;
    use crate::linalg::cn_vector;
    use crate::metrics::link_metrics;
    use crate::scenario::NodeDesign;
    use crate::oracle::central_difference_wirtinger;
    use crate::testutil::scenario;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rel_err(a: &CVec, b: &CVec) -> f64 {
        let scale = b.iter().fold(0.0f64, |m, x| m.max(x.norm()));
        a.iter().zip(b.iter()).fold(0.0f64, |m, (x, y)| m.max((x - y).norm())) / scale
    }

    #[test]
    fn own_signal_power_has_no_own_gradient() {
        let scn = scenario(-30.0, 1e-5, false, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = [cn_vector(&mut rng, 4, 1.0), cn_vector(&mut rng, 4, 1.0)];
        let u = mmse_combiners(&scn, &v).unwrap();
        let p_com_1 = |x: &CVec| {
            let designs = [
                NodeDesign { precoder: x.clone(), combiner: u[0].clone() },
                NodeDesign { precoder: v[1].clone(), combiner: u[1].clone() },
            ];
            link_metrics(&scn, &designs, Node::One).unwrap().p_com
        };
        let fd = central_difference_wirtinger(&v[0], 1e-6, p_com_1);
        assert!(fd.iter().all(|d| *d == C64::new(0.0, 0.0)));
    }

    #[test]
    fn silent_node_gradient_matches_fd() {
        let scn = scenario(-30.0, 0.0, false, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = [CVec::zeros(4), cn_vector(&mut rng, 4, 5.0)];
        let u = mmse_combiners(&scn, &v).unwrap();
        let g = sum_sinr_gradient(&scn, &v, &u, Node::One).unwrap();
        let f = |x: &CVec| node_objective(&scn, x, &v[1], &u, Node::One).unwrap();
        let fd = central_difference_wirtinger(&v[0], 1e-6, f);
        // every term is at least quadratic in v_1, so both vanish at 0
        assert!(g.iter().all(|x| *x == C64::new(0.0, 0.0)));
        let fd_scale = fd.iter().fold(0.0f64, |m, x| m.max(x.norm()));
        let unit = central_difference_wirtinger(&v[1], 1e-6, |x| node_objective(&scn, &v[0], x, &u, Node::Two).unwrap());
        assert!(fd_scale <= 1e-9 * unit.iter().fold(0.0f64, |m, x| m.max(x.norm())));

        // just off zero only the partner's numerator term is first order
        let small = [cn_vector(&mut rng, 4, 1e-6), v[1].clone()];
        let g = sum_sinr_gradient(&scn, &small, &u, Node::One).unwrap();
        let fd = central_difference_wirtinger(&small[0], 1e-6, |x| node_objective(&scn, x, &v[1], &u, Node::One).unwrap());
        assert!(rel_err(&g, &fd) < 1e-5, "{}", rel_err(&g, &fd));
    }

    #[test]
    fn full_gradient_matches_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for seed in 0..10 {
            let scn = scenario(-25.0, 1e-5, false, 40 + seed);
            let v = [cn_vector(&mut rng, 4, 2.0), cn_vector(&mut rng, 4, 2.0)];
            let u = mmse_combiners(&scn, &v).unwrap();
            for node in Node::BOTH {
                let g = sum_sinr_gradient(&scn, &v, &u, node).unwrap();
                let own = &v[node.index()];
                let other = &v[node.partner().index()];
                let fd = central_difference_wirtinger(own, 1e-6, |x| node_objective(&scn, x, other, &u, node).unwrap());
                assert!(rel_err(&g, &fd) < 1e-5, "seed {seed}: {}", rel_err(&g, &fd));
            }
        }
    }
}
