use crate::linalg::{CVec, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct ArmijoOutcome {
    pub v_next: CVec,
    /// `ν^m`, or 0 when no admissible `m` was found.
    pub rho: f64,
    /// Exponent used; 0 when rejected.
    pub m: u32,
}

/// Backtracking on the segment `v + ν^m (v̆ - v)`, `m = 1, 2, …, max_m`.
///
/// Accepts the first `m` with `f(v + ν^m d) - f(v) ≥ ι ν^m Re(∇ᴴ d)`,
/// `d = v̆ - v`. If none qualifies, `v` is returned unchanged with `ρ = 0`.
pub fn armijo_step<F>(v: &CVec, v_proj: &CVec, grad: &CVec, mut f: F, nu: f64, iota: f64, max_m: u32) -> ArmijoOutcome
where
    F: FnMut(&CVec) -> f64,
{
    let d = v_proj - v;
    if d.iter().all(|x| *x == C64::new(0.0, 0.0)) {
        return ArmijoOutcome { v_next: v.clone(), rho: nu, m: 1 };
    }
    let slope = grad.dotc(&d).re;
    let f0 = f(v);
    let mut rho = 1.0;
    for m in 1..=max_m {
        rho *= nu;
        let cand = v + &d * C64::from(rho);
        let gain = f(&cand) - f0;
        if gain >= iota * rho * slope {
            return ArmijoOutcome { v_next: cand, rho, m };
        }
    }
    ArmijoOutcome { v_next: v.clone(), rho: 0.0, m: 0 }
}
