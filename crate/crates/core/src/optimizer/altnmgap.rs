use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::combiner::mmse_combiners;
use crate::error::{Error, Result};
use crate::linalg::{cn_vector, CVec, C64};
use crate::metrics::Combiner;
use crate::optimizer::armijo::armijo_step;
use crate::optimizer::constraints::ConstraintSet;
use crate::optimizer::gradient::{node_objective, sum_sinr, sum_sinr_gradient};
use crate::optimizer::projection::{project_feasible_warm, ProjectionOptions};
use crate::scenario::{Node, NodeDesign, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    /// Window length `c`.
    pub memory_len: usize,
    /// `t_max`.
    pub max_iters: usize,
    /// Stop once `|g^t - g^{t-1}|` falls below this.
    pub conv_tol: f64,
    pub armijo_nu: f64,
    pub armijo_iota: f64,
    pub armijo_max_m: u32,
    /// Gradient step `δ` in the power-normalised variable `v/√P`, i.e.
    /// `v̄ = v + δ P ∇f`.
    pub step_delta: f64,
    pub proj_tol: f64,
    pub proj_max_iters: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            memory_len: 8,
            max_iters: 50,
            conv_tol: 1e-6,
            armijo_nu: 0.5,
            armijo_iota: 0.1,
            armijo_max_m: 30,
            step_delta: 1.0,
            proj_tol: 1e-8,
            proj_max_iters: 20_000,
        }
    }
}

fn invalid(field: &'static str, expected: &'static str, got: impl ToString) -> Error {
    Error::InvalidConfig { field, expected, got: got.to_string() }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| x > 0.0 && x < 1.0;
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if self.memory_len == 0 {
            return Err(invalid("optimizer.memory_len", "integer >= 1", self.memory_len));
        }
        if self.max_iters == 0 {
            return Err(invalid("optimizer.max_iters", "integer >= 1", self.max_iters));
        }
        if !pos(self.conv_tol) {
            return Err(invalid("optimizer.conv_tol", "positive real", self.conv_tol));
        }
        if !unit(self.armijo_nu) {
            return Err(invalid("optimizer.armijo_nu", "real in (0, 1)", self.armijo_nu));
        }
        if !unit(self.armijo_iota) {
            return Err(invalid("optimizer.armijo_iota", "real in (0, 1)", self.armijo_iota));
        }
        if self.armijo_max_m == 0 {
            return Err(invalid("optimizer.armijo_max_m", "integer >= 1", self.armijo_max_m));
        }
        if !pos(self.step_delta) {
            return Err(invalid("optimizer.step_delta", "positive real", self.step_delta));
        }
        if !pos(self.proj_tol) {
            return Err(invalid("optimizer.proj_tol", "positive real", self.proj_tol));
        }
        if self.proj_max_iters == 0 {
            return Err(invalid("optimizer.proj_max_iters", "integer >= 1", self.proj_max_iters));
        }
        Ok(())
    }

    fn projection(&self) -> ProjectionOptions {
        ProjectionOptions { tol: self.proj_tol, max_iters: self.proj_max_iters }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptTrace {
    /// `g` of the feasible start with its MMSE combiners.
    pub initial_objective: f64,
    /// `g^1, …, g^t`.
    pub objective_history: Vec<f64>,
    /// Armijo `ρ` per iteration, one per node.
    pub step_sizes: Vec<[f64; 2]>,
    /// 1-based iteration the returned design comes from.
    pub best_window_index: usize,
    pub iterations: usize,
    /// Stopped on the gap test or the window rule before `t_max`.
    pub converged: bool,
    /// The returned design is older than the last iterate.
    pub rollback_applied: bool,
    pub projection_failures: usize,
}

#[derive(Debug, Clone)]
pub struct OptimizerOutput {
    pub designs: [NodeDesign; 2],
    /// Sum SINR of `designs`.
    pub objective: f64,
    pub trace: OptTrace,
}

/// Circularly-symmetric Gaussian draw with per-entry variance `P/N`, shrunk
/// by the largest `t ∈ (0, 1]` that makes it feasible.
pub fn initial_precoder(cons: &ConstraintSet, n: usize, rng: &mut ChaCha8Rng) -> CVec {
    let v = cn_vector(rng, n, cons.power_budget / n as f64);
    let t = cons.feasible_scale(&v);
    v * C64::from(t)
}

/// Latest index in `from..=to` (1-based, into `history[i-1]`) with the largest value.
fn window_argmax(history: &[f64], from: usize, to: usize) -> usize {
    let mut best = from;
    for t in from..=to {
        if history[t - 1] >= history[best - 1] {
            best = t;
        }
    }
    best
}

/// Alternating non-monotone gradient projection for both nodes' precoders.
///
/// Each iteration takes one projected-gradient step with Armijo correction
/// per node, with both combiners at the MMSE solution for the previous
/// precoders and the partner precoder held at its previous value, then
/// updates both combiners and evaluates `g` on the new pair. The loop stops on a small
/// objective change, on the window rule (the best of the last `c + 1`
/// iterates is the oldest), or at `t_max`; the best iterate of the final
/// window is returned.
pub fn altnmgap(scn: &Scenario, cons: &[ConstraintSet; 2], cfg: &OptimizerConfig, seed: u64) -> Result<OptimizerOutput> {
    cfg.validate()?;
    let (_, n) = scn.shape();
    for c in cons {
        if c.dim() != 0 && c.dim() != n {
            return Err(Error::shape("constraint matrices", (n, n), (c.dim(), c.dim())));
        }
    }
    let proj = cfg.projection();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = [initial_precoder(&cons[0], n, &mut rng), initial_precoder(&cons[1], n, &mut rng)];
    let mut u = mmse_combiners(scn, &v)?;
    let initial_objective = sum_sinr(scn, &v, &u)?;

    let mut history: Vec<f64> = Vec::with_capacity(cfg.max_iters);
    let mut iterates: Vec<([CVec; 2], [Combiner; 2])> = Vec::with_capacity(cfg.max_iters);
    let mut step_sizes = Vec::with_capacity(cfg.max_iters);
    let mut multipliers: [Option<Vec<f64>>; 2] = [None, None];
    let mut projection_failures = 0;
    let mut previous = initial_objective;
    let mut stopped = false;
    let mut best = 0;

    for t in 1..=cfg.max_iters {
        let mut next = v.clone();
        let mut rho = [0.0; 2];
        for node in Node::BOTH {
            let k = node.index();
            let partner = &v[node.partner().index()];
            let grad = sum_sinr_gradient(scn, &v, &u, node)?;
            let v_bar = &v[k] + &grad * C64::from(cfg.step_delta * cons[k].power_budget);
            let p = project_feasible_warm(&v_bar, &cons[k], &proj, multipliers[k].as_deref());
            if !p.converged {
                projection_failures += 1;
                log::debug!("projection at t={t}, node {} stopped at KKT residual {:.3e}", node.label(), p.kkt_residual);
            }
            multipliers[k] = Some(p.multipliers);
            let f = |x: &CVec| node_objective(scn, x, partner, &u, node).unwrap_or(f64::NEG_INFINITY);
            let step = armijo_step(&v[k], &p.point, &grad, f, cfg.armijo_nu, cfg.armijo_iota, cfg.armijo_max_m);
            rho[k] = step.rho;
            next[k] = step.v_next;
        }
        v = next;
        u = mmse_combiners(scn, &v)?;
        let g = sum_sinr(scn, &v, &u)?;
        if !g.is_finite() {
            return Err(Error::Numerical(format!("sum SINR not finite at iteration {t}")));
        }
        history.push(g);
        iterates.push((v.clone(), u.clone()));
        step_sizes.push(rho);

        let from = if t > cfg.memory_len { t - cfg.memory_len } else { 1 };
        best = window_argmax(&history, from, t);
        let gap = (g - previous).abs();
        previous = g;
        if gap < cfg.conv_tol || (t > cfg.memory_len && best == t - cfg.memory_len) {
            stopped = true;
            break;
        }
    }

    let iterations = history.len();
    let (v_best, u_best) = iterates.swap_remove(best - 1);
    let objective = history[best - 1];
    let [v1, v2] = v_best;
    let [u1, u2] = u_best;
    Ok(OptimizerOutput {
        designs: [NodeDesign { precoder: v1, combiner: u1 }, NodeDesign { precoder: v2, combiner: u2 }],
        objective,
        trace: OptTrace {
            initial_objective,
            objective_history: history,
            step_sizes,
            best_window_index: best,
            iterations,
            converged: stopped,
            rollback_applied: best != iterations,
            projection_failures,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{link_metrics, residual_si_covariance};
    use crate::optimizer::build_constraint_mats;
    use crate::testutil::scenario;

    const EPS_MW: f64 = 1.995_262_314_968_879_6e-5; // -47 dBm

    fn constraints(scn: &Scenario) -> [ConstraintSet; 2] {
        let m = scn.rx_antennas();
        [
            build_constraint_mats(scn, Node::One, 100.0, &vec![EPS_MW; m]).unwrap(),
            build_constraint_mats(scn, Node::Two, 100.0, &vec![EPS_MW; m]).unwrap(),
        ]
    }

    #[test]
    fn defaults() {
        let c = OptimizerConfig::default();
        assert_eq!((c.memory_len, c.max_iters), (8, 50));
        assert_eq!((c.armijo_nu, c.armijo_iota), (0.5, 0.1));
        assert_eq!(c.conv_tol, 1e-6);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn rejects_bad_armijo_parameter() {
        let c = OptimizerConfig { armijo_nu: 1.0, ..Default::default() };
        match c.validate() {
            Err(Error::InvalidConfig { field, .. }) => assert_eq!(field, "optimizer.armijo_nu"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn window_argmax_prefers_latest() {
        let h = [1.0, 3.0, 2.0, 3.0, 0.5];
        assert_eq!(window_argmax(&h, 1, 5), 4);
        assert_eq!(window_argmax(&h, 1, 3), 2);
        assert_eq!(window_argmax(&h, 5, 5), 5);
    }

    #[test]
    fn initial_precoder_is_feasible() {
        let scn = scenario(-30.0, 1e-5, false, 3);
        let cons = constraints(&scn);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let v = initial_precoder(&cons[0], 4, &mut rng);
            assert!(cons[0].is_feasible(&v));
        }
    }

    #[test]
    fn returned_designs_are_feasible() {
        for seed in 0..4 {
            let scn = scenario(-30.0, 1e-5, false, 100 + seed);
            let cons = constraints(&scn);
            let out = altnmgap(&scn, &cons, &OptimizerConfig::default(), seed).unwrap();
            for node in Node::BOTH {
                let v = &out.designs[node.index()].precoder;
                assert!(v.norm_squared() <= 100.0 * (1.0 + 1e-9));
                let phi = residual_si_covariance(&scn, v, node).unwrap();
                for m in 0..4 {
                    assert!(phi[(m, m)].re <= EPS_MW * (1.0 + 1e-6));
                }
            }
        }
    }

    #[test]
    fn window_maximum_never_decreases() {
        for seed in 0..4 {
            let scn = scenario(-20.0, 1e-5, false, 200 + seed);
            let cfg = OptimizerConfig::default();
            let out = altnmgap(&scn, &constraints(&scn), &cfg, seed).unwrap();
            let h = &out.trace.objective_history;
            assert!(h.len() <= cfg.max_iters);
            let window_max = |t: usize| {
                let from = t.saturating_sub(cfg.memory_len).max(1);
                h[from - 1..t].iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            };
            for t in 2..=h.len() {
                assert!(window_max(t) >= window_max(t - 1), "seed {seed} t {t}");
            }
        }
    }

    #[test]
    fn returned_objective_reproduces() {
        let scn = scenario(-25.0, 1e-5, false, 7);
        let out = altnmgap(&scn, &constraints(&scn), &OptimizerConfig::default(), 7).unwrap();
        let h = &out.trace.objective_history;
        let t = out.trace.iterations;
        let from = t.saturating_sub(8).max(1);
        let window_best = h[from - 1..t].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(out.objective, window_best);
        let g: f64 = Node::BOTH.iter().map(|n| link_metrics(&scn, &out.designs, *n).unwrap().sinr).sum();
        assert!((g - out.objective).abs() <= 1e-12 * out.objective);
    }

    #[test]
    fn rollback_applied_when_window_rule_fires() {
        // a tiny step keeps the objective creeping, a huge one oscillates;
        // either way the flag must agree with the index.
        for delta in [1e-3, 1.0, 1e6] {
            let scn = scenario(-25.0, 1e-5, false, 11);
            let cfg = OptimizerConfig { step_delta: delta, ..Default::default() };
            let out = altnmgap(&scn, &constraints(&scn), &cfg, 11).unwrap();
            let tr = &out.trace;
            assert_eq!(tr.rollback_applied, tr.best_window_index != tr.iterations);
            assert!(tr.best_window_index + cfg.memory_len >= tr.iterations);
        }
    }

    #[test]
    fn deterministic() {
        let scn = scenario(-30.0, 1e-5, false, 5);
        let cons = constraints(&scn);
        let a = altnmgap(&scn, &cons, &OptimizerConfig::default(), 42).unwrap();
        let b = altnmgap(&scn, &cons, &OptimizerConfig::default(), 42).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.designs, b.designs);
    }

    #[test]
    fn matches_matched_filter_without_impairments() {
        use crate::experiment::{matched_filter_designs, sum_throughput};
        for seed in 0..5 {
            let scn = scenario(f64::NEG_INFINITY, 0.0, true, 300 + seed);
            let cons = constraints(&scn);
            let out = altnmgap(&scn, &cons, &OptimizerConfig::default(), seed).unwrap();
            let rate = |d: &[NodeDesign; 2]| {
                let g: Vec<f64> = Node::BOTH.iter().map(|n| link_metrics(&scn, d, *n).unwrap().sinr).collect();
                sum_throughput(&g)
            };
            let mf = rate(&matched_filter_designs(&scn, 100.0));
            let got = rate(&out.designs);
            assert!(got >= mf - 1e-3, "seed {seed}: {got} < {mf} ({} iterations)", out.trace.iterations);
        }
    }

    #[test]
    fn infeasible_targets_rejected() {
        let scn = scenario(-30.0, 1e-5, false, 5);
        assert!(matches!(build_constraint_mats(&scn, Node::One, 100.0, &[1e-5, 0.0, 1e-5, 1e-5]), Err(Error::Infeasible(_))));
    }
}
