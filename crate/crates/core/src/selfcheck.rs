//! Oracle suites runnable outside the test harness: analytic gradients vs.
//! finite differences, projection vs. the interior-point solver, closed-form
//! covariances vs. Monte Carlo, and MMSE optimality.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::combiner::mmse_combiners;
use crate::config::SystemConfig;
use crate::error::Result;
use crate::experiment::{build_scenario, constraint_sets, matched_filter_designs};
use crate::linalg::{cn_vector, random_unit_vector, CVec, C64};
use crate::metrics::{interference_plus_noise_raw, residual_si_covariance, sinr_raw, Combiner};
use crate::optimizer::{node_objective, project_feasible, sum_sinr_gradient, ConstraintSet, ProjectionOptions};
use crate::oracle::{barrier_projection, central_difference_wirtinger, max_relative_error, received_moments};
use crate::scenario::{Node, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfCheckOptions {
    pub instances: usize,
    pub mc_draws: usize,
    pub mc_instances: usize,
    pub random_combiners: usize,
    pub seed: u64,
}

impl Default for SelfCheckOptions {
    fn default() -> Self {
        Self { instances: 20, mc_draws: 200_000, mc_instances: 3, random_combiners: 1000, seed: 0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub worst: f64,
    pub threshold: f64,
    pub instances: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelfCheckReport {
    pub checks: Vec<CheckResult>,
}

impl SelfCheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(name: &'static str, worst: f64, threshold: f64, instances: usize) -> CheckResult {
    CheckResult { name, passed: worst <= threshold, worst, threshold, instances }
}

/// A scenario of `cfg` at a random grid point with random feasible-scale
/// precoders.
fn instance(cfg: &SystemConfig, i: usize, rng: &mut ChaCha8Rng, seed: u64) -> Result<(Scenario, [CVec; 2])> {
    let tau = cfg.tau_grid[i % cfg.tau_grid.len()];
    let scn = build_scenario(cfg, tau, seed.wrapping_add(i as u64))?;
    let var = cfg.power_budget_mw() / cfg.n_tx as f64;
    let v = [cn_vector(rng, cfg.n_tx, var), cn_vector(rng, cfg.n_tx, var)];
    Ok((scn, v))
}

pub fn gradient_check(cfg: &SystemConfig, opts: &SelfCheckOptions) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst = 0.0f64;
    for i in 0..opts.instances {
        let (scn, v) = instance(cfg, i, &mut rng, opts.seed ^ 0x11)?;
        let u = mmse_combiners(&scn, &v)?;
        for node in Node::BOTH {
            let g = sum_sinr_gradient(&scn, &v, &u, node)?;
            let other = &v[node.partner().index()];
            let fd = central_difference_wirtinger(&v[node.index()], 1e-6, |x| {
                node_objective(&scn, x, other, &u, node).unwrap_or(f64::NAN)
            });
            worst = worst.max(max_relative_error(&g, &fd));
        }
    }
    Ok(check("gradient_vs_finite_difference", worst, 1e-5, opts.instances))
}

/// Projects a random point scaled well outside the feasible set of a random
/// trial and compares the objective with the interior-point oracle.
pub fn projection_check(cfg: &SystemConfig, opts: &SelfCheckOptions) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x22);
    let mut worst = 0.0f64;
    let popts = ProjectionOptions { tol: 1e-12, max_iters: 100_000 };
    for i in 0..opts.instances {
        let (scn, v) = instance(cfg, i, &mut rng, opts.seed ^ 0x23)?;
        let cons = constraint_sets(&scn, cfg)?;
        let (err, _) = projection_gap(&v[0] * C64::from(4.0), &cons[0], &popts);
        worst = worst.max(err);
    }
    Ok(check("projection_vs_interior_point", worst, 1e-6, opts.instances))
}

/// `(|objective difference|, oracle duality gap)`, relative to `P`.
pub fn projection_gap(v_bar: CVec, cons: &ConstraintSet, popts: &ProjectionOptions) -> (f64, f64) {
    let p = project_feasible(&v_bar, cons, popts);
    let o = barrier_projection(&v_bar, cons, 1e-9 * cons.power_budget);
    let err = (p.objective(&v_bar) - o.objective).abs() / cons.power_budget;
    let err = if cons.max_relative_violation(&p.point) > 1e-6 { f64::INFINITY } else { err };
    (err, o.duality_gap / cons.power_budget)
}

/// Closed-form `Σ_k` and `[Φ_k]_mm` against sample moments of the
/// received-signal sampler.
pub fn covariance_check(cfg: &SystemConfig, opts: &SelfCheckOptions) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x33);
    let mut worst = 0.0f64;
    for i in 0..opts.mc_instances {
        let (scn, v) = instance(cfg, i, &mut rng, opts.seed ^ 0x34)?;
        let u = Combiner::normalized(random_unit_vector(&mut rng, cfg.m_rx)).expect("unit vector");
        let node = Node::One;
        let sigma = interference_plus_noise_raw(&scn, &v[0], &v[1], &u, node)?;
        let phi = residual_si_covariance(&scn, &v[0], node)?;
        let mc = received_moments(&scn, &v[0], &v[1], &u, node, opts.mc_draws, &mut rng);
        worst = worst.max((mc.sigma - sigma).abs() / sigma);
        for (m, est) in mc.phi_diag.iter().enumerate() {
            let want = phi[(m, m)].re;
            worst = worst.max((est - want).abs() / want);
        }
    }
    Ok(check("covariance_vs_monte_carlo", worst, 0.01, opts.mc_instances))
}

/// Largest relative SINR shortfall of the MMSE combiner against random and
/// matched-filter combiners (0 when it is never beaten).
pub fn mmse_check(cfg: &SystemConfig, opts: &SelfCheckOptions) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x44);
    let mut worst = 0.0f64;
    for i in 0..opts.instances {
        let (scn, v) = instance(cfg, i, &mut rng, opts.seed ^ 0x45)?;
        let u = mmse_combiners(&scn, &v)?;
        let mf = matched_filter_designs(&scn, cfg.power_budget_mw());
        for node in Node::BOTH {
            let own = &v[node.index()];
            let partner = &v[node.partner().index()];
            let best = sinr_raw(&scn, own, partner, &u[node.index()], node)?;
            let matched = Combiner::normalized((scn.channels.comm_into(node) * partner).conjugate())
                .unwrap_or_else(|| mf[node.index()].combiner.clone());
            let mut rival = sinr_raw(&scn, own, partner, &matched, node)?;
            for _ in 0..opts.random_combiners {
                let r = Combiner::normalized(random_unit_vector(&mut rng, cfg.m_rx)).expect("unit vector");
                rival = rival.max(sinr_raw(&scn, own, partner, &r, node)?);
            }
            worst = worst.max((rival - best) / best);
        }
    }
    Ok(check("mmse_optimality", worst, 1e-12, opts.instances))
}

pub fn run_selfcheck(cfg: &SystemConfig, opts: &SelfCheckOptions) -> Result<SelfCheckReport> {
    Ok(SelfCheckReport {
        checks: vec![
            gradient_check(cfg, opts)?,
            projection_check(cfg, opts)?,
            covariance_check(cfg, opts)?,
            mmse_check(cfg, opts)?,
        ],
    })
}
