//! `lfg-sim`: single runs, Monte Carlo batches and the canned arrival tables.
//!
//! Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 a batch
//! produced a safety violation or collision.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lfg_core::sim::{self, AvPolicy, SimConfig, SweepSummary};
use lfg_core::{Error, Role};
use serde_json::json;

const EXIT_CONFIG: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_UNSAFE: u8 = 3;

/// Delimiter of every table printed on stdout.
const DELIM: char = ',';

/// Rows of the second table: (initial role, p_a, p_a_hat).
const TABLE2_ROWS: [(Role, f64, f64); 14] = [
    (Role::Leader, 1.00, 1.00),
    (Role::Follower, 1.00, 1.00),
    (Role::Leader, 0.70, 1.00),
    (Role::Leader, 0.50, 1.00),
    (Role::Leader, 0.30, 1.00),
    (Role::Follower, 0.50, 1.00),
    (Role::Follower, 0.70, 1.00),
    (Role::Follower, 0.30, 1.00),
    (Role::Leader, 1.00, 0.98),
    (Role::Leader, 1.00, 0.95),
    (Role::Leader, 1.00, 0.70),
    (Role::Follower, 1.00, 0.98),
    (Role::Follower, 1.00, 0.95),
    (Role::Follower, 1.00, 0.70),
];

#[derive(Parser, Debug)]
#[command(name = "lfg-sim", version, about = "Leader-follower intersection simulations")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML configuration file; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set scenario.p_a=0.7`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[arg(long, env = "LFG_SIM_OUTPUT_DIR", default_value = "lfg-out", global = true)]
    output_dir: PathBuf,
    /// Master seed; replaces `scenario.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for batches; all cores when omitted.
    #[arg(long, global = true)]
    parallelism: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One episode: CSV log and JSON outcome.
    Run,
    /// A Monte Carlo batch of the configured scenario.
    Batch {
        #[arg(long, default_value_t = 1000)]
        n_runs: usize,
    },
    /// Arrival table for two adaptive LFG agents, HV starting as leader and follower.
    ReproduceTable1 {
        #[arg(long, default_value_t = 1000)]
        n_runs: usize,
    },
    /// Arrival table for the branch MPC against an adaptive HV over the p_a / p_a_hat grid.
    ReproduceTable2 {
        #[arg(long, default_value_t = 1000)]
        n_runs: usize,
        /// Restrict the grid to these `role:p_a:p_a_hat` rows.
        #[arg(long = "row", value_name = "ROLE:P_A:P_A_HAT")]
        rows: Vec<String>,
    },
    /// Batch over a list of values of one config key.
    Sweep {
        #[arg(long, default_value_t = 1000)]
        n_runs: usize,
        /// Dotted key to vary.
        #[arg(long)]
        key: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Io(String),
    Unsafe(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("i/o error: {msg}");
            ExitCode::from(EXIT_IO)
        }
        Err(Failure::Unsafe(n)) => {
            eprintln!("{n} episode(s) left the safe set");
            ExitCode::from(EXIT_UNSAFE)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    let c = &cli.common;
    let mut cfg = match &c.config {
        Some(path) => SimConfig::load(path)?,
        None => SimConfig::default(),
    };
    cfg = cfg.with_overrides(&c.overrides)?;
    if let Some(seed) = c.seed {
        cfg.scenario.seed = seed;
    }
    std::fs::create_dir_all(&c.output_dir).map_err(|e| io_err(&c.output_dir, e))?;
    let out = c.output_dir.as_path();

    match &cli.cmd {
        Command::Run => cmd_run(&cfg, out),
        Command::Batch { n_runs } => {
            let summary = sim::run_batch(&cfg, *n_runs, c.parallelism)?;
            sim::write_summary(&summary, &out.join("batch_summary.json"))?;
            println!("{}", ["av_pct", "hv_pct", "violations", "collisions", "timeouts"].join(&DELIM.to_string()));
            println!("{}", stats_cells(&summary).join(&DELIM.to_string()));
            check_safe(&[summary])
        }
        Command::ReproduceTable1 { n_runs } => {
            let mut summaries = Vec::new();
            for role in Role::ALL {
                let mut run = cfg;
                run.scenario.av_policy = AvPolicy::Lfg;
                run.scenario.hv_initial_role = role;
                run.scenario.av_initial_role = Some(role.complement());
                run.scenario.p_a = 1.0;
                run.scenario.av_p_a = 1.0;
                summaries.push(sim::run_batch(&run, *n_runs, c.parallelism)?);
            }
            println!("initial_role{DELIM}av_pct{DELIM}hv_pct");
            for s in &summaries {
                println!("{}{DELIM}{:.1}{DELIM}{:.1}", s.config.scenario.hv_initial_role, s.av_first_pct, s.hv_first_pct);
            }
            write_table_json(&summaries, &out.join("table1_summary.json"))?;
            check_safe(&summaries)
        }
        Command::ReproduceTable2 { n_runs, rows } => {
            let grid = if rows.is_empty() { TABLE2_ROWS.to_vec() } else { parse_rows(rows)? };
            let mut summaries = Vec::new();
            for (role, p_a, p_a_hat) in grid {
                let mut run = cfg;
                run.scenario.av_policy = AvPolicy::BranchMpc;
                run.scenario.hv_initial_role = role;
                run.scenario.p_a = p_a;
                run.mpc.p_a_hat = p_a_hat;
                let summary = sim::run_batch(&run, *n_runs, c.parallelism)?;
                log::info!("{role} {p_a}/{p_a_hat}: av {:.1}%", summary.av_first_pct);
                summaries.push(summary);
            }
            println!("initial_role{DELIM}p_a{DELIM}p_a_hat{DELIM}av_pct{DELIM}hv_pct");
            for s in &summaries {
                println!(
                    "{}{DELIM}{:.2}{DELIM}{:.2}{DELIM}{:.1}{DELIM}{:.1}",
                    s.config.scenario.hv_initial_role, s.config.scenario.p_a, s.config.mpc.p_a_hat, s.av_first_pct, s.hv_first_pct
                );
            }
            write_table_json(&summaries, &out.join("table2_summary.json"))?;
            check_safe(&summaries)
        }
        Command::Sweep { n_runs, key, values } => {
            let mut summaries = Vec::new();
            for v in values {
                let run = cfg.with_overrides([format!("{key}={v}")])?;
                summaries.push((v, sim::run_batch(&run, *n_runs, c.parallelism)?));
            }
            println!("{key}{DELIM}av_pct{DELIM}hv_pct{DELIM}violations{DELIM}collisions{DELIM}timeouts");
            for (v, s) in &summaries {
                println!("{v}{DELIM}{}", stats_cells(s).join(&DELIM.to_string()));
            }
            let all: Vec<SweepSummary> = summaries.into_iter().map(|(_, s)| s).collect();
            write_table_json(&all, &out.join("sweep_summary.json"))?;
            check_safe(&all)
        }
    }
}

fn cmd_run(cfg: &SimConfig, out: &Path) -> Result<(), Failure> {
    let record = sim::run_episode(cfg)?;
    let stem = format!("run_seed{}", cfg.scenario.seed);
    sim::write_run_log(&record, &out.join(format!("{stem}.csv")))?;
    let doc = json!({ "config": cfg, "seed": record.seed, "outcome": record.outcome });
    sim::write_json(&doc, &out.join(format!("{stem}.json")))?;
    let o = &record.outcome;
    let fmt_t = |t: Option<f64>| t.map_or_else(|| "none".to_owned(), |t| format!("{t:.3}"));
    println!(
        "seed={} first={} t_av={} t_hv={} violation={} collision={} timeout={}",
        record.seed,
        serde_json::to_value(o.first_arrival).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default(),
        fmt_t(o.t_av),
        fmt_t(o.t_hv),
        o.safety_violation,
        o.collision,
        o.timeout
    );
    if o.safety_violation || o.collision {
        return Err(Failure::Unsafe(1));
    }
    Ok(())
}

fn stats_cells(s: &SweepSummary) -> Vec<String> {
    vec![
        format!("{:.1}", s.av_first_pct),
        format!("{:.1}", s.hv_first_pct),
        s.violations.to_string(),
        s.collisions.to_string(),
        s.timeouts.to_string(),
    ]
}

fn parse_rows(rows: &[String]) -> Result<Vec<(Role, f64, f64)>, Failure> {
    rows.iter()
        .map(|r| {
            let bad = || Failure::Config(format!("row `{r}` is not role:p_a:p_a_hat"));
            let mut it = r.split(':');
            let role: Role = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let p_a: f64 = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let p_a_hat: f64 = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if it.next().is_some() {
                return Err(bad());
            }
            Ok((role, p_a, p_a_hat))
        })
        .collect()
}

fn write_table_json(summaries: &[SweepSummary], path: &Path) -> Result<(), Failure> {
    sim::write_json(&summaries, path)?;
    Ok(())
}

fn check_safe(summaries: &[SweepSummary]) -> Result<(), Failure> {
    let bad: usize = summaries.iter().map(|s| s.violations.max(s.collisions)).sum();
    if bad > 0 {
        Err(Failure::Unsafe(bad))
    } else {
        Ok(())
    }
}
