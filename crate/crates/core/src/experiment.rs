//! Monte Carlo sweep over the CSI accuracy `τ`.
//!
//! Every trial draws its own channels and cancellers, runs the precoder
//! optimizer and evaluates the closed-form metrics of the returned design.
//! Trial seeds depend only on `(master_seed, grid_index, trial_index)`, so
//! results do not depend on scheduling.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::canceller::{build_canceller, Canceller};
use crate::channel::{sample_channel_set, ChannelSet};
use crate::config::{HdBaseline, SystemConfig};
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};
use crate::metrics::{link_metrics, sinr_raw, Combiner, LinkMetrics};
use crate::optimizer::{altnmgap, build_constraint_mats, ConstraintSet, OptTrace};
use crate::scenario::{Node, NodeDesign, Scenario};
use crate::units::{linear_to_db, mw_to_dbm};

/// `Σ_k log2(1 + γ_k)`.
pub fn sum_throughput(sinrs: &[f64]) -> f64 {
    sinrs.iter().map(|g| (1.0 + g).log2()).sum()
}

/// Seed of trial `trial` at grid point `grid`.
pub fn trial_seed(master_seed: u64, grid: usize, trial: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((grid as u64) << 32) | trial as u64);
    rng.next_u64()
}

/// Channels, cancellers and hardware of one trial.
pub fn build_scenario(cfg: &SystemConfig, tau_db: f64, seed: u64) -> Result<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let channel_seed = rng.next_u64();
    let cancel_seeds = [rng.next_u64(), rng.next_u64()];
    let set = sample_channel_set(&cfg.channel_params(tau_db), channel_seed)?;
    let spec = cfg.canceller_spec();
    let c1 = build_canceller(&set.h_hat_si_1, &spec, cancel_seeds[0])?;
    let c2 = build_canceller(&set.h_hat_si_2, &spec, cancel_seeds[1])?;
    Scenario::new(set, [c1, c2], cfg.hardware()?)
}

pub fn constraint_sets(scn: &Scenario, cfg: &SystemConfig) -> Result<[ConstraintSet; 2]> {
    let targets = vec![cfg.si_target_mw(); scn.rx_antennas()];
    let p = cfg.power_budget_mw();
    Ok([
        build_constraint_mats(scn, Node::One, p, &targets)?,
        build_constraint_mats(scn, Node::Two, p, &targets)?,
    ])
}

/// Dominant right singular vector of `h`.
fn dominant_right_singular(h: &CMat) -> CVec {
    let svd = h.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let (best, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, s)| if *s > acc.1 { (i, *s) } else { acc });
    v_t.row(best).adjoint()
}

/// Full-power matched-filter design for both directions, ignoring SI.
pub fn matched_filter_designs(scn: &Scenario, power_budget: f64) -> [NodeDesign; 2] {
    let design = |node: Node| {
        // node transmits over the channel into its partner
        let h = scn.channels.comm_into(node.partner());
        let v = dominant_right_singular(h) * C64::from(power_budget.sqrt());
        let into_me = scn.channels.comm_into(node);
        let partner_v = dominant_right_singular(into_me) * C64::from(power_budget.sqrt());
        let u = Combiner::normalized((into_me * partner_v).conjugate()).expect("non-zero channel");
        NodeDesign { precoder: v, combiner: u }
    };
    [design(Node::One), design(Node::Two)]
}

/// SI-free copy of the scenario: SI channels, their errors and the
/// cancellers are zero.
fn without_si(scn: &Scenario) -> Result<Scenario> {
    let mut set: ChannelSet = scn.channels.clone();
    let (m, n) = set.shape();
    for h in [&mut set.h_hat_si_1, &mut set.h_hat_si_2, &mut set.e_si_1, &mut set.e_si_2] {
        *h = CMat::zeros(m, n);
    }
    set.tau_si_scaled = 0.0;
    Scenario::new(set, [Canceller::none(m, n), Canceller::none(m, n)], scn.hw)
}

/// Time-shared reference: `0.5 Σ_k log2(1 + γ_k^HD)` where each direction
/// is used alone (no SI), keeping CSI-error and transmit-distortion terms.
pub fn half_duplex_baseline(scn: &Scenario, cfg: &SystemConfig, mode: HdBaseline, seed: u64) -> Result<f64> {
    let p = cfg.power_budget_mw();
    let designs = match mode {
        HdBaseline::MatchedFilter => matched_filter_designs(scn, p),
        HdBaseline::Optimized => {
            let free = without_si(scn)?;
            let cons = constraint_sets(&free, cfg)?;
            return Ok(0.5 * optimized_throughput(&free, &cons, cfg, seed)?);
        }
    };
    let silent = CVec::zeros(scn.tx_antennas());
    let mut sinrs = [0.0; 2];
    for node in Node::BOTH {
        let partner = &designs[node.partner().index()].precoder;
        sinrs[node.index()] = sinr_raw(scn, &silent, partner, &designs[node.index()].combiner, node)?;
    }
    Ok(0.5 * sum_throughput(&sinrs))
}

fn optimized_throughput(scn: &Scenario, cons: &[ConstraintSet; 2], cfg: &SystemConfig, seed: u64) -> Result<f64> {
    let out = altnmgap(scn, cons, &cfg.optimizer, seed)?;
    let sinrs: Vec<f64> = Node::BOTH
        .iter()
        .map(|n| link_metrics(scn, &out.designs, *n).map(|m| m.sinr))
        .collect::<Result<_>>()?;
    Ok(sum_throughput(&sinrs))
}

#[derive(Debug, Clone, Serialize)]
pub struct NodeResult {
    pub sinr: f64,
    pub sinr_db: f64,
    /// `log2(1 + γ_k)`.
    pub throughput_bps_hz: f64,
    /// Closed-form `[Φ_k]_mm`, dBm.
    pub resid_si_dbm: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialOutcome {
    pub tau_db: f64,
    pub trial: usize,
    pub seed: u64,
    pub nodes: [NodeResult; 2],
    pub fd_throughput: f64,
    pub hd_throughput: f64,
    pub trace: OptTrace,
    #[serde(skip)]
    pub designs: [NodeDesign; 2],
    #[serde(skip)]
    pub metrics: [LinkMetrics; 2],
}

impl TrialOutcome {
    /// Largest per-antenna residual SI over both nodes, dBm.
    pub fn max_resid_si_dbm(&self) -> f64 {
        self.nodes
            .iter()
            .flat_map(|n| n.resid_si_dbm.iter().cloned())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn run_trial(cfg: &SystemConfig, tau_db: f64, trial: usize, seed: u64) -> Result<TrialOutcome> {
    let scn = build_scenario(cfg, tau_db, seed)?;
    let cons = constraint_sets(&scn, cfg)?;
    let opt_seed = seed ^ 0x9e37_79b9_7f4a_7c15;
    let out = altnmgap(&scn, &cons, &cfg.optimizer, opt_seed)?;
    let m1 = link_metrics(&scn, &out.designs, Node::One)?;
    let m2 = link_metrics(&scn, &out.designs, Node::Two)?;
    let node = |m: &LinkMetrics| NodeResult {
        sinr: m.sinr,
        sinr_db: linear_to_db(m.sinr),
        throughput_bps_hz: (1.0 + m.sinr).log2(),
        resid_si_dbm: m.phi_diag.iter().map(|p| mw_to_dbm(*p)).collect(),
    };
    let hd_throughput = half_duplex_baseline(&scn, cfg, cfg.hd_baseline, opt_seed)?;
    Ok(TrialOutcome {
        tau_db,
        trial,
        seed,
        nodes: [node(&m1), node(&m2)],
        fd_throughput: sum_throughput(&[m1.sinr, m2.sinr]),
        hd_throughput,
        trace: out.trace,
        designs: out.designs,
        metrics: [m1, m2],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub tau_db_grid: Vec<f64>,
    pub trials_per_point: usize,
    pub base_config: SystemConfig,
    pub master_seed: u64,
}

impl SweepSpec {
    pub fn from_config(cfg: &SystemConfig) -> Self {
        Self {
            tau_db_grid: cfg.tau_grid.clone(),
            trials_per_point: cfg.trials,
            base_config: cfg.clone(),
            master_seed: cfg.master_seed,
        }
    }

    /// The base config with grid, trial count and seed written back, as
    /// echoed in the summary.
    pub fn effective_config(&self) -> SystemConfig {
        SystemConfig {
            tau_grid: self.tau_db_grid.clone(),
            trials: self.trials_per_point,
            master_seed: self.master_seed,
            ..self.base_config.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.effective_config().validate()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialFailure {
    pub tau_db: f64,
    pub trial: usize,
    pub error: String,
}

/// Mean and 95% normal-approximation half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanCi {
    pub mean: f64,
    pub ci95: f64,
}

impl MeanCi {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: f64::NAN, ci95: f64::NAN };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Self { mean, ci95: 0.0 };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Self { mean, ci95: 1.96 * (var / n as f64).sqrt() }
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.ci95
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.ci95
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PointSummary {
    pub tau_db: f64,
    pub trials_ok: usize,
    pub trials_failed: usize,
    pub fd_throughput: MeanCi,
    pub hd_throughput: MeanCi,
    /// Mean over trials of the paired difference FD - HD.
    pub fd_gain: MeanCi,
    pub sinr_db: MeanCi,
    /// Per-trial maximum residual SI over antennas and nodes, dBm.
    pub max_resid_si_dbm: MeanCi,
    pub converged_fraction: f64,
    pub rollback_fraction: f64,
    pub mean_iterations: f64,
    /// Among converged trials, share with every `[Φ_k]_mm` at most 0.1 dB
    /// above the target.
    pub within_target_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub spec: SweepSpec,
    /// Sorted by `(grid index, trial)`.
    pub trials: Vec<TrialOutcome>,
    pub failures: Vec<TrialFailure>,
    pub points: Vec<PointSummary>,
}

impl SweepResult {
    pub fn row_count(&self) -> usize {
        self.trials.len() * 2
    }
}

/// Runs every `(τ, trial)` pair, in parallel on `threads` workers (all
/// cores when `None`). Failed trials are logged and recorded; the sweep
/// continues.
pub fn run_sweep(spec: &SweepSpec, threads: Option<usize>) -> Result<SweepResult> {
    spec.validate()?;
    let cfg = spec.effective_config();
    let jobs: Vec<(usize, usize)> = (0..spec.tau_db_grid.len())
        .flat_map(|g| (0..spec.trials_per_point).map(move |t| (g, t)))
        .collect();

    let work = || -> Vec<(usize, usize, Result<TrialOutcome>)> {
        jobs.par_iter()
            .map(|&(g, t)| {
                let tau = spec.tau_db_grid[g];
                let seed = trial_seed(spec.master_seed, g, t);
                let res = run_trial(&cfg, tau, t, seed)
                    .map_err(|e| Error::Trial { tau_db: tau, trial: t, source: Box::new(e) });
                (g, t, res)
            })
            .collect()
    };
    let mut results = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    results.sort_by_key(|(g, t, _)| (*g, *t));

    let mut trials = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    let mut by_point: Vec<Vec<usize>> = vec![Vec::new(); spec.tau_db_grid.len()];
    let mut failed_per_point = vec![0usize; spec.tau_db_grid.len()];
    for (g, t, res) in results {
        match res {
            Ok(o) => {
                by_point[g].push(trials.len());
                trials.push(o);
            }
            Err(e) => {
                log::warn!("{e}");
                failed_per_point[g] += 1;
                failures.push(TrialFailure { tau_db: spec.tau_db_grid[g], trial: t, error: e.to_string() });
            }
        }
    }

    let limit = cfg.epsilon_dbm + 0.1;
    let points = spec
        .tau_db_grid
        .iter()
        .enumerate()
        .map(|(g, tau)| {
            let ts: Vec<&TrialOutcome> = by_point[g].iter().map(|i| &trials[*i]).collect();
            let col = |f: &dyn Fn(&TrialOutcome) -> f64| MeanCi::of(&ts.iter().map(|t| f(t)).collect::<Vec<_>>());
            let n = ts.len().max(1) as f64;
            let converged: Vec<&&TrialOutcome> = ts.iter().filter(|t| t.trace.converged).collect();
            let within = converged.iter().filter(|t| t.max_resid_si_dbm() <= limit).count();
            PointSummary {
                tau_db: *tau,
                trials_ok: ts.len(),
                trials_failed: failed_per_point[g],
                fd_throughput: col(&|t| t.fd_throughput),
                hd_throughput: col(&|t| t.hd_throughput),
                fd_gain: col(&|t| t.fd_throughput - t.hd_throughput),
                sinr_db: MeanCi::of(&ts.iter().flat_map(|t| t.nodes.iter().map(|n| n.sinr_db)).collect::<Vec<_>>()),
                max_resid_si_dbm: col(&|t| t.max_resid_si_dbm()),
                converged_fraction: converged.len() as f64 / n,
                rollback_fraction: ts.iter().filter(|t| t.trace.rollback_applied).count() as f64 / n,
                mean_iterations: ts.iter().map(|t| t.trace.iterations as f64).sum::<f64>() / n,
                within_target_fraction: if converged.is_empty() {
                    f64::NAN
                } else {
                    within as f64 / converged.len() as f64
                },
            }
        })
        .collect();

    Ok(SweepResult { spec: spec.clone(), trials, failures, points })
}

/// CSV header for `m` receive antennas.
pub fn csv_header(m: usize) -> Vec<String> {
    let mut h: Vec<String> = ["tau_db", "trial", "node", "sinr_db", "throughput_bps_hz"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((1..=m).map(|i| format!("resid_si_dbm_{i}")));
    h.extend(["iters", "converged", "rollback"].iter().map(|s| s.to_string()));
    h
}

pub fn write_csv<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let m = result.spec.base_config.m_rx;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(m))?;
    for t in &result.trials {
        for node in Node::BOTH {
            let n = &t.nodes[node.index()];
            let mut rec = vec![
                t.tau_db.to_string(),
                t.trial.to_string(),
                node.label().to_string(),
                n.sinr_db.to_string(),
                n.throughput_bps_hz.to_string(),
            ];
            rec.extend(n.resid_si_dbm.iter().map(|x| x.to_string()));
            rec.push(t.trace.iterations.to_string());
            rec.push(t.trace.converged.to_string());
            rec.push(t.trace.rollback_applied.to_string());
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Hex SHA-256 of the canonical JSON form of `cfg`.
pub fn run_id(cfg: &SystemConfig) -> String {
    let text = serde_json::to_string(cfg).expect("config serialises");
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary<'a> {
    pub run_id: String,
    pub crate_version: &'static str,
    pub config: SystemConfig,
    pub rows: usize,
    pub points: &'a [PointSummary],
    pub failures: &'a [TrialFailure],
}

pub fn summary(result: &SweepResult) -> Summary<'_> {
    let config = result.spec.effective_config();
    Summary {
        run_id: run_id(&config),
        crate_version: env!("CARGO_PKG_VERSION"),
        config,
        rows: result.row_count(),
        points: &result.points,
        failures: &result.failures,
    }
}

pub fn write_summary<W: Write>(result: &SweepResult, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, &summary(result))?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Writes `sweep.csv` and `summary.json` under `dir` and returns both paths.
pub fn write_outputs(result: &SweepResult, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join("sweep.csv");
    let json_path = dir.join("summary.json");
    write_csv(result, std::io::BufWriter::new(std::fs::File::create(&csv_path)?))?;
    write_summary(result, std::io::BufWriter::new(std::fs::File::create(&json_path)?))?;
    Ok((csv_path, json_path))
}
