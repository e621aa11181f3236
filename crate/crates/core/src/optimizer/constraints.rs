use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};
use crate::scenario::{Node, Scenario};

/// Feasible set of one node's precoder: `‖z‖² ≤ P` and `zᴴ A_m z ≤ ε_m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintSet {
    /// `P_k`, mW.
    pub power_budget: f64,
    /// Hermitian PSD `N x N` matrices with `[Φ_k]_mm = vᴴ A_m v`.
    #[serde(skip)]
    pub quad_mats: Vec<CMat>,
    /// `ε_{k,m}`, mW.
    pub si_targets: Vec<f64>,
}

impl ConstraintSet {
    pub fn new(power_budget: f64, quad_mats: Vec<CMat>, si_targets: Vec<f64>) -> Result<Self> {
        if !(power_budget > 0.0 && power_budget.is_finite()) {
            return Err(Error::Infeasible(format!("power budget must be > 0, got {power_budget}")));
        }
        if quad_mats.len() != si_targets.len() {
            return Err(Error::ShapeMismatch {
                context: "SI constraints",
                expected: format!("{} targets", quad_mats.len()),
                got: si_targets.len().to_string(),
            });
        }
        if let Some(e) = si_targets.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(Error::Infeasible(format!("SI target must be > 0 mW, got {e}")));
        }
        Ok(Self { power_budget, quad_mats, si_targets })
    }

    pub fn dim(&self) -> usize {
        self.quad_mats.first().map(|a| a.nrows()).unwrap_or(0)
    }

    /// `zᴴ A_m z` for every m.
    pub fn si_powers(&self, z: &CVec) -> Vec<f64> {
        self.quad_mats.iter().map(|a| quad(a, z)).collect()
    }

    /// Largest relative violation `max(‖z‖²/P, zᴴA_m z/ε_m) - 1`, clipped at 0.
    pub fn max_relative_violation(&self, z: &CVec) -> f64 {
        let mut worst = z.norm_squared() / self.power_budget - 1.0;
        for (a, e) in self.quad_mats.iter().zip(&self.si_targets) {
            worst = worst.max(quad(a, z) / e - 1.0);
        }
        worst.max(0.0)
    }

    pub fn is_feasible(&self, z: &CVec) -> bool {
        z.norm_squared() <= self.power_budget
            && self.quad_mats.iter().zip(&self.si_targets).all(|(a, e)| quad(a, z) <= *e)
    }

    /// Largest `t ∈ (0, 1]` with `t z` feasible. Constraints are homogeneous
    /// quadratics, so this is a closed-form minimum over the constraints.
    pub fn feasible_scale(&self, z: &CVec) -> f64 {
        let mut t = 1.0f64;
        let p = z.norm_squared();
        if p > self.power_budget {
            t = t.min((self.power_budget / p).sqrt());
        }
        for (a, e) in self.quad_mats.iter().zip(&self.si_targets) {
            let q = quad(a, z);
            if q > *e {
                t = t.min((e / q).sqrt());
            }
        }
        // rounding in the square root can leave t z a few ulps outside
        while t > 0.0 && !self.is_feasible(&(z * C64::from(t))) {
            t *= 1.0 - 4.0 * f64::EPSILON;
        }
        t
    }
}

/// `zᴴ A z` for Hermitian `A`.
#[inline]
pub(crate) fn quad(a: &CMat, z: &CVec) -> f64 {
    z.dotc(&(a * z)).re
}

/// Per-antenna constraint matrices of `node`:
/// `A_m = H̃ᴴ e_m e_mᴴ H̃ + τ'²(1+β) I + β diag(|Ĥ_{m,1}|², …, |Ĥ_{m,N}|²)`.
pub fn build_constraint_mats(scn: &Scenario, node: Node, power_budget: f64, si_targets: &[f64]) -> Result<ConstraintSet> {
    let (m, n) = scn.shape();
    if si_targets.len() != m {
        return Err(Error::ShapeMismatch {
            context: "SI targets",
            expected: format!("{m} targets"),
            got: si_targets.len().to_string(),
        });
    }
    let beta = scn.hw.beta;
    let iso = scn.channels.tau_si_scaled.powi(2) * (1.0 + beta);
    let h_res = scn.residual_si(node);
    let h_si = scn.channels.si(node);

    let mats = (0..m)
        .map(|row| {
            let r = h_res.row(row);
            let mut a = r.adjoint() * r;
            for i in 0..n {
                a[(i, i)] += C64::from(iso + beta * h_si[(row, i)].norm_sqr());
            }
            a
        })
        .collect();
    ConstraintSet::new(power_budget, mats, si_targets.to_vec())
}
