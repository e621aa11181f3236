//! Independent reference computations used to verify the closed-form and
//! iterative routines: central finite differences, a primal log-barrier
//! interior-point solver for the projection, and Monte Carlo moment
//! estimators built on the received-signal sampler.
//!
//! Nothing in the design path depends on this module.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::linalg::{cn_matrix, CMat, CVec, C64};
use crate::metrics::{sample_received_signal, Combiner};
use crate::optimizer::ConstraintSet;
use crate::scenario::{Node, Scenario};

/// Central-difference estimate of the Wirtinger derivative `∂f/∂v*`
/// `= ½(∂f/∂x + j ∂f/∂y)` of a real function of a complex vector.
pub fn central_difference_wirtinger(v: &CVec, h: f64, f: impl Fn(&CVec) -> f64) -> CVec {
    let mut out = CVec::zeros(v.len());
    for i in 0..v.len() {
        let mut plus = v.clone();
        let mut minus = v.clone();
        plus[i] += C64::new(h, 0.0);
        minus[i] -= C64::new(h, 0.0);
        let dx = (f(&plus) - f(&minus)) / (2.0 * h);

        let mut plus = v.clone();
        let mut minus = v.clone();
        plus[i] += C64::new(0.0, h);
        minus[i] -= C64::new(0.0, h);
        let dy = (f(&plus) - f(&minus)) / (2.0 * h);

        out[i] = C64::new(0.5 * dx, 0.5 * dy);
    }
    out
}

/// Max element-wise deviation relative to the largest reference magnitude.
pub fn max_relative_error(got: &CVec, reference: &CVec) -> f64 {
    let scale = reference.iter().fold(0.0f64, |m, x| m.max(x.norm()));
    let err = got.iter().zip(reference.iter()).fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
    if scale == 0.0 {
        err
    } else {
        err / scale
    }
}

#[derive(Debug, Clone)]
pub struct BarrierSolution {
    pub point: CVec,
    /// `‖v̄ - z‖²` at `point`.
    pub objective: f64,
    /// Certified bound `m/t` on the duality gap, original units.
    pub duality_gap: f64,
    pub newton_steps: usize,
}

/// `[[Re B, -Im B], [Im B, Re B]]`, so that `zᴴ B z = xᵀ Q x` for
/// `x = [Re z; Im z]`.
fn realify(b: &CMat) -> DMatrix<f64> {
    let n = b.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let e = b[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => e.re,
            (true, false) => -e.im,
            (false, true) => e.im,
        }
    })
}

/// Solves `min ‖v̄ - z‖²` over the constraint set with a primal log-barrier
/// interior-point method in real coordinates, until the certified duality
/// gap drops below `gap` (original units).
pub fn barrier_projection(v_bar: &CVec, cons: &ConstraintSet, gap: f64) -> BarrierSolution {
    let n = v_bar.len();
    let p = cons.power_budget;
    let scale = p.sqrt();

    // normalised: y = z/√P, constraints yᵀQ_i y ≤ 1
    let mut quads = vec![DMatrix::<f64>::identity(2 * n, 2 * n)];
    for (a, e) in cons.quad_mats.iter().zip(&cons.si_targets) {
        quads.push(realify(a) * (p / e));
    }
    let target = DVector::from_fn(2 * n, |i, _| {
        let c = v_bar[i % n] / scale;
        if i < n {
            c.re
        } else {
            c.im
        }
    });
    let m = quads.len() as f64;
    let slack = |x: &DVector<f64>| -> Vec<f64> { quads.iter().map(|q| 1.0 - x.dot(&(q * x))).collect() };
    let barrier = |x: &DVector<f64>, t: f64| -> f64 {
        let s = slack(x);
        if s.iter().any(|v| *v <= 0.0) {
            return f64::INFINITY;
        }
        t * (x - &target).norm_squared() - s.iter().map(|v| v.ln()).sum::<f64>()
    };

    let mut x = DVector::<f64>::zeros(2 * n);
    let mut t = 1.0;
    let mut newton_steps = 0;
    let gap_normalised = gap / p;
    loop {
        for _ in 0..200 {
            let s = slack(&x);
            let mut grad = (&x - &target) * (2.0 * t);
            let mut hess = DMatrix::<f64>::identity(2 * n, 2 * n) * (2.0 * t);
            for (q, si) in quads.iter().zip(&s) {
                let qx = q * &x * 2.0;
                grad += &qx / *si;
                hess += q * (2.0 / si) + &qx * qx.transpose() / (si * si);
            }
            let Some(chol) = hess.cholesky() else { break };
            let dx = -chol.solve(&grad);
            let decrement = -grad.dot(&dx);
            if decrement / 2.0 <= 1e-13 {
                break;
            }
            newton_steps += 1;
            let f0 = barrier(&x, t);
            let mut alpha = 1.0;
            while alpha > 1e-16 {
                let cand = &x + &dx * alpha;
                if barrier(&cand, t) <= f0 - 0.01 * alpha * decrement {
                    break;
                }
                alpha *= 0.5;
            }
            x += dx * alpha;
        }
        if m / t <= gap_normalised {
            break;
        }
        t *= 8.0;
    }

    let point = CVec::from_fn(n, |i, _| C64::new(x[i], x[i + n]) * scale);
    BarrierSolution {
        objective: (v_bar - &point).norm_squared(),
        point,
        duality_gap: m / t * p,
        newton_steps,
    }
}

/// Sample moments of the received signal at one node.
#[derive(Debug, Clone)]
pub struct ReceivedMoments {
    /// `|𝔼[u y s_ℓ*]|²`, the coherent intended power.
    pub p_com: f64,
    /// `𝔼|u (y - intended)|²`.
    pub sigma: f64,
    /// `𝔼|u y|² - p_com`, using only `y` and the known symbol.
    pub sigma_from_total: f64,
    /// Diagonal of the sample covariance of the residual-SI terms.
    pub phi_diag: Vec<f64>,
    pub draws: usize,
}

impl ReceivedMoments {
    /// SINR estimated from `y` and the symbol alone.
    pub fn sinr(&self) -> f64 {
        self.p_com / self.sigma_from_total
    }
}

pub fn received_moments<R: Rng + ?Sized>(
    scn: &Scenario,
    v_own: &CVec,
    v_partner: &CVec,
    u: &Combiner,
    node: Node,
    draws: usize,
    rng: &mut R,
) -> ReceivedMoments {
    let m = scn.rx_antennas();
    let mut corr = C64::new(0.0, 0.0);
    let mut total = 0.0;
    let mut ipn = 0.0;
    let mut phi = vec![0.0; m];
    for _ in 0..draws {
        let s = sample_received_signal(scn, v_own, v_partner, node, rng);
        let uy = u.apply(&s.total());
        corr += uy * s.symbol.conj();
        total += uy.norm_sqr();
        ipn += u.apply(&s.interference_plus_noise()).norm_sqr();
        for (acc, r) in phi.iter_mut().zip(s.residual_si.iter()) {
            *acc += r.norm_sqr();
        }
    }
    let k = draws as f64;
    let p_com = (corr / k).norm_sqr();
    ReceivedMoments {
        p_com,
        sigma: ipn / k,
        sigma_from_total: total / k - p_com,
        phi_diag: phi.into_iter().map(|x| x / k).collect(),
        draws,
    }
}

/// Sample mean of `G A Gᴴ` for `G` with i.i.d. `CN(0, variance)` entries.
pub fn gaussian_quadratic_mean<R: Rng + ?Sized>(a: &CMat, rows: usize, variance: f64, draws: usize, rng: &mut R) -> CMat {
    let n = a.nrows();
    let mut acc = CMat::zeros(rows, rows);
    for _ in 0..draws {
        let g = cn_matrix(rng, rows, n, variance);
        acc += &g * a * g.adjoint();
    }
    acc / C64::from(draws as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fd_of_quadratic_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = cn_matrix(&mut rng, 3, 3, 1.0);
        let a = &g * g.adjoint();
        let v = crate::linalg::cn_vector(&mut rng, 3, 1.0);
        let fd = central_difference_wirtinger(&v, 1e-6, |x| x.dotc(&(&a * x)).re);
        assert!(max_relative_error(&fd, &(&a * &v)) < 1e-8);
    }

    #[test]
    fn realify_preserves_quadratic_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = cn_matrix(&mut rng, 3, 3, 1.0);
        let a = &g * g.adjoint();
        let z = crate::linalg::cn_vector(&mut rng, 3, 1.0);
        let x = DVector::from_fn(6, |i, _| if i < 3 { z[i].re } else { z[i - 3].im });
        let q = realify(&a);
        assert!((x.dot(&(q * &x)) - z.dotc(&(&a * &z)).re).abs() < 1e-12);
    }

    #[test]
    fn barrier_ball_projection() {
        let cons = ConstraintSet::new(4.0, vec![CMat::zeros(2, 2)], vec![1.0]).unwrap();
        let v = CVec::from_vec(vec![C64::new(3.0, 0.0), C64::new(0.0, 4.0)]);
        let sol = barrier_projection(&v, &cons, 1e-10);
        // ‖v‖ = 5, projection onto radius 2 ball leaves distance 3
        assert!((sol.objective - 9.0).abs() < 1e-8, "{}", sol.objective);
        assert!(sol.duality_gap <= 1e-10);
    }

    #[test]
    fn gaussian_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = cn_matrix(&mut rng, 3, 3, 1.0);
        let a = &g * g.adjoint();
        let mean = gaussian_quadratic_mean(&a, 4, 2.0, 100_000, &mut rng);
        let want = CMat::identity(4, 4) * (a.trace() * 2.0);
        assert!((&mean - &want).norm() / want.norm() < 0.02);
    }
}
