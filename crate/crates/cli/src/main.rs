//! `fdsic`: run single designs, τ sweeps and the oracle self-check.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fdsic::config::{parse_config, SystemConfig};
use fdsic::error::{Error, ErrorKind};
use fdsic::experiment::{run_sweep, run_trial, write_outputs, SweepSpec, TrialOutcome};
use fdsic::selfcheck::{run_selfcheck, SelfCheckOptions};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "fdsic", version, about = "Full-duplex MIMO SI-cancellation lab")]
struct Cli {
    /// JSON config file; missing fields take their defaults.
    #[arg(long, global = true, env = "FDSIC_CONFIG")]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, env = "FDSIC_OUT")]
    out: Option<PathBuf>,

    /// Master seed.
    #[arg(long, global = true, env = "FDSIC_SEED")]
    seed: Option<u64>,

    /// Trials per grid point.
    #[arg(long, global = true, env = "FDSIC_TRIALS")]
    trials: Option<usize>,

    /// Comma-separated CSI accuracy grid in dB.
    #[arg(long = "tau-db", global = true, env = "FDSIC_TAU_DB", value_delimiter = ',', allow_hyphen_values = true)]
    tau_db: Option<Vec<f64>>,

    /// Worker threads for trials (default: all cores).
    #[arg(long, global = true, env = "FDSIC_PARALLEL")]
    parallel: Option<usize>,

    /// Format of what is printed on stdout.
    #[arg(long, global = true, env = "FDSIC_FORMAT", value_enum, default_value = "json")]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Design and evaluate one trial at the first τ of the grid.
    Solve,
    /// Monte Carlo sweep over the τ grid; writes sweep.csv and summary.json.
    Sweep,
    /// Run the oracle suites; nonzero exit on any failure.
    Selfcheck,
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    error: &'a str,
    message: String,
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Config => 2,
        ErrorKind::Numerical => 3,
        ErrorKind::Io => 4,
    }
}

fn load_config(cli: &Cli) -> fdsic::Result<SystemConfig> {
    let mut cfg = match &cli.config {
        Some(p) => parse_config(p).map_err(|e| match e {
            Error::Io(io) => Error::ConfigParse(format!("{}: {io}", p.display())),
            other => other,
        })?,
        None => SystemConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    if let Some(t) = cli.trials {
        cfg.trials = t;
    }
    if let Some(grid) = &cli.tau_db {
        cfg.tau_grid = grid.clone();
        if let Some(first) = grid.first() {
            cfg.tau_db = *first;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    config: &'a SystemConfig,
    #[serde(flatten)]
    trial: &'a TrialOutcome,
}

fn solve_csv(t: &TrialOutcome, m: usize) -> fdsic::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(fdsic::experiment::csv_header(m))?;
    for (i, n) in t.nodes.iter().enumerate() {
        let mut rec = vec![
            t.tau_db.to_string(),
            t.trial.to_string(),
            (i + 1).to_string(),
            n.sinr_db.to_string(),
            n.throughput_bps_hz.to_string(),
        ];
        rec.extend(n.resid_si_dbm.iter().map(|x| x.to_string()));
        rec.push(t.trace.iterations.to_string());
        rec.push(t.trace.converged.to_string());
        rec.push(t.trace.rollback_applied.to_string());
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> fdsic::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), bytes)?;
    Ok(())
}

fn cmd_solve(cli: &Cli, cfg: &SystemConfig) -> fdsic::Result<bool> {
    let t = run_trial(cfg, cfg.tau_db, 0, cfg.master_seed)?;
    let (bytes, name) = match cli.format {
        Format::Json => {
            let mut b = serde_json::to_vec_pretty(&SolveOutput { config: cfg, trial: &t })?;
            b.push(b'\n');
            (b, "solve.json")
        }
        Format::Csv => (solve_csv(&t, cfg.m_rx)?, "solve.csv"),
    };
    std::io::stdout().write_all(&bytes)?;
    if let Some(dir) = &cli.out {
        write_file(dir, name, &bytes)?;
    }
    Ok(true)
}

fn cmd_sweep(cli: &Cli, cfg: &SystemConfig) -> fdsic::Result<bool> {
    let spec = SweepSpec::from_config(cfg);
    let result = run_sweep(&spec, cli.parallel)?;
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("fdsic-out"));
    let (csv_path, json_path) = write_outputs(&result, &dir)?;
    let mut stdout = std::io::stdout();
    match cli.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut stdout, &fdsic::experiment::summary(&result))?;
            writeln!(stdout)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut stdout);
            w.write_record(["tau_db", "fd_mean", "fd_ci95", "hd_mean", "hd_ci95", "max_resid_si_dbm", "within_target"])?;
            for p in &result.points {
                w.write_record([
                    p.tau_db.to_string(),
                    p.fd_throughput.mean.to_string(),
                    p.fd_throughput.ci95.to_string(),
                    p.hd_throughput.mean.to_string(),
                    p.hd_throughput.ci95.to_string(),
                    p.max_resid_si_dbm.mean.to_string(),
                    p.within_target_fraction.to_string(),
                ])?;
            }
            w.flush()?;
        }
    }
    log::info!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(true)
}

fn cmd_selfcheck(cli: &Cli, cfg: &SystemConfig) -> fdsic::Result<bool> {
    let opts = SelfCheckOptions { seed: cfg.master_seed, ..Default::default() };
    let report = run_selfcheck(cfg, &opts)?;
    let mut bytes = serde_json::to_vec_pretty(&report)?;
    bytes.push(b'\n');
    std::io::stdout().write_all(&bytes)?;
    if let Some(dir) = &cli.out {
        write_file(dir, "selfcheck.json", &bytes)?;
    }
    Ok(report.passed())
}

fn run(cli: &Cli) -> fdsic::Result<bool> {
    let cfg = load_config(cli)?;
    match cli.command {
        Command::Solve => cmd_solve(cli, &cfg),
        Command::Sweep => cmd_sweep(cli, &cfg),
        Command::Selfcheck => cmd_selfcheck(cli, &cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            let rec = ErrorRecord { error: "selfcheck", message: "one or more oracle checks failed".into() };
            eprintln!("{}", serde_json::to_string(&rec).expect("record serialises"));
            ExitCode::from(exit_code(ErrorKind::Numerical))
        }
        Err(e) => {
            let rec = ErrorRecord { error: e.kind().as_str(), message: e.to_string() };
            eprintln!("{}", serde_json::to_string(&rec).expect("record serialises"));
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
