//! Euclidean projection onto `{z : ‖z‖² ≤ P, zᴴ A_m z ≤ ε_m}` by dual ascent.
//!
//! Working in the normalised variable `y = z / √P` with constraints
//! `yᴴ B_i y ≤ 1` (`B_0 = I`, `B_m = P A_m / ε_m`), the Lagrangian minimiser
//! for multipliers `λ ≥ 0` is `y(λ) = (I + Σ_i λ_i B_i)⁻¹ y₀`. The dual
//! function is concave and differentiable with gradient
//! `∂d/∂λ_i = y(λ)ᴴ B_i y(λ) - 1`, i.e. the constraint values. Multipliers
//! are updated by projected gradient ascent with a per-coordinate scale
//! given by the dual curvature `2 Re(wᴴ K⁻¹ w)`, `w = B_i y`, and a global
//! step that doubles on success and halves whenever the dual objective
//! would decrease.

use nalgebra::Cholesky;

use crate::linalg::{CMat, CVec, C64};
use crate::optimizer::constraints::{quad, ConstraintSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionOptions {
    /// KKT tolerance: primal violation and complementary slackness of the
    /// normalised constraints.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iters: 20_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// Feasible point (best dual iterate rescaled into the feasible set).
    pub point: CVec,
    /// Multipliers of the normalised constraints, power first.
    pub multipliers: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// KKT residual at the returned multipliers.
    pub kkt_residual: f64,
}

impl Projection {
    /// `‖v̄ - z‖²`.
    pub fn objective(&self, v_bar: &CVec) -> f64 {
        (v_bar - &self.point).norm_squared()
    }
}

struct DualPoint {
    lambda: Vec<f64>,
    y: CVec,
    value: f64,
    grad: Vec<f64>,
    chol: Cholesky<C64, nalgebra::Dyn>,
}

struct Dual<'a> {
    y0: CVec,
    mats: Vec<CMat>,
    cons: &'a ConstraintSet,
}

impl<'a> Dual<'a> {
    fn new(v_bar: &CVec, cons: &'a ConstraintSet) -> Self {
        let p = cons.power_budget;
        let y0 = v_bar / C64::from(p.sqrt());
        let mats = cons
            .quad_mats
            .iter()
            .zip(&cons.si_targets)
            .map(|(a, e)| a * C64::from(p / e))
            .collect();
        Self { y0, mats, cons }
    }

    fn eval(&self, lambda: Vec<f64>) -> Option<DualPoint> {
        let n = self.y0.len();
        let mut k = CMat::identity(n, n) * C64::from(1.0 + lambda[0]);
        for (l, b) in lambda[1..].iter().zip(&self.mats) {
            if *l > 0.0 {
                k += b * C64::from(*l);
            }
        }
        let chol = k.cholesky()?;
        let y = chol.solve(&self.y0);
        let mut grad = Vec::with_capacity(lambda.len());
        grad.push(y.norm_squared() - 1.0);
        for b in &self.mats {
            grad.push(quad(b, &y) - 1.0);
        }
        let value = (&self.y0 - &y).norm_squared() + lambda.iter().zip(&grad).map(|(l, g)| l * g).sum::<f64>();
        Some(DualPoint { lambda, y, value, grad, chol })
    }

    fn curvature(&self, pt: &DualPoint) -> Vec<f64> {
        let mut h = Vec::with_capacity(pt.lambda.len());
        let w0 = pt.y.clone();
        h.push(2.0 * w0.dotc(&pt.chol.solve(&w0)).re);
        for b in &self.mats {
            let w = b * &pt.y;
            h.push(2.0 * w.dotc(&pt.chol.solve(&w)).re);
        }
        h
    }

    fn kkt_residual(pt: &DualPoint) -> f64 {
        pt.lambda
            .iter()
            .zip(&pt.grad)
            .map(|(l, g)| g.max(0.0).max((l * g).abs()))
            .fold(0.0, f64::max)
    }

    /// Back to original units, scaled onto the feasible set.
    fn finish(&self, pt: &DualPoint, iterations: usize, converged: bool) -> Projection {
        let z = &pt.y * C64::from(self.cons.power_budget.sqrt());
        let t = self.cons.feasible_scale(&z);
        Projection {
            point: z * C64::from(t),
            multipliers: pt.lambda.clone(),
            iterations,
            converged,
            kkt_residual: Self::kkt_residual(pt),
        }
    }
}

pub fn project_feasible(v_bar: &CVec, cons: &ConstraintSet, opts: &ProjectionOptions) -> Projection {
    project_feasible_warm(v_bar, cons, opts, None)
}

/// [`project_feasible`] with optional starting multipliers (e.g. from the
/// previous projection onto the same set).
pub fn project_feasible_warm(
    v_bar: &CVec,
    cons: &ConstraintSet,
    opts: &ProjectionOptions,
    warm: Option<&[f64]>,
) -> Projection {
    let n_cons = cons.quad_mats.len() + 1;
    if cons.is_feasible(v_bar) {
        return Projection {
            point: v_bar.clone(),
            multipliers: vec![0.0; n_cons],
            iterations: 0,
            converged: true,
            kkt_residual: 0.0,
        };
    }

    let dual = Dual::new(v_bar, cons);
    let start = match warm {
        Some(w) if w.len() == n_cons => w.iter().map(|l| l.max(0.0)).collect(),
        _ => vec![0.0; n_cons],
    };
    let mut pt = dual
        .eval(start)
        .or_else(|| dual.eval(vec![0.0; n_cons]))
        .expect("identity-shifted PSD system is positive definite");

    let mut step = 1.0f64;
    for it in 0..opts.max_iters {
        if Dual::kkt_residual(&pt) <= opts.tol {
            return dual.finish(&pt, it, true);
        }
        let h = dual.curvature(&pt);
        let mut accepted = false;
        while step > 1e-14 {
            let next: Vec<f64> = pt
                .lambda
                .iter()
                .zip(&pt.grad)
                .zip(&h)
                .map(|((l, g), c)| (l + step * g / c.max(1e-300)).max(0.0))
                .collect();
            match dual.eval(next) {
                Some(cand) if cand.value >= pt.value - 1e-15 * pt.value.abs() => {
                    pt = cand;
                    step = (step * 2.0).min(1.0);
                    accepted = true;
                    break;
                }
                _ => step *= 0.5,
            }
        }
        if !accepted {
            log::debug!("projection dual ascent stalled after {it} iterations");
            return dual.finish(&pt, it, Dual::kkt_residual(&pt) <= opts.tol);
        }
    }
    let converged = Dual::kkt_residual(&pt) <= opts.tol;
    dual.finish(&pt, opts.max_iters, converged)
}
