use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fhpmip_core::analytics::{
    avg_ho_lat, avg_ho_pl, ho_lat, ho_pl, signaling_cost, AnalyticParams,
};
use fhpmip_core::protocol::{ProtocolMode, SignalingMode};
use fhpmip_core::scenario::ScenarioError;
use fhpmip_core::sim_core::SimTime;
use fhpmip_sim::config::{parse_config, parse_duration, set_seed, ConfigError};
use fhpmip_sim::output::{report_csv, write_all_atomic};
use fhpmip_sim::runner::{parse_grid, run_scenario, sweep, RunError};

#[derive(Parser)]
#[command(
    name = "fhpmip",
    version,
    about = "Sensor-group fast handover simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Protocol {
    Pmipv6,
    Fhpmipv6,
}

impl From<Protocol> for ProtocolMode {
    fn from(p: Protocol) -> Self {
        match p {
            Protocol::Pmipv6 => ProtocolMode::Pmipv6,
            Protocol::Fhpmipv6 => ProtocolMode::Fhpmipv6,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Aggregated,
    PerSensor,
}

#[derive(Clone, Copy, ValueEnum)]
enum Aaa {
    Colocated,
    External,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write metrics.csv, trace.jsonl and report.csv.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Exit with status 3 if any handover disagrees with the oracle.
        #[arg(long)]
        check: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        protocol: Option<Protocol>,
    },
    /// Print the closed-form handover costs for one parameter set.
    Analytic {
        #[arg(long, default_value_t = 1)]
        n: u32,
        #[arg(long, value_parser = parse_duration, default_value = "0")]
        d_smag_ap: SimTime,
        #[arg(long, value_parser = parse_duration, default_value = "0")]
        d_mag_mag: SimTime,
        #[arg(long, value_parser = parse_duration, default_value = "0")]
        t_u_pred: SimTime,
        #[arg(long, value_parser = parse_duration, default_value = "0")]
        d_s_pbu: SimTime,
        #[arg(long, value_parser = parse_duration, default_value = "0")]
        d_s_pback: SimTime,
        #[arg(long, value_parser = parse_duration, default_value = "0")]
        d_s_aaareq: SimTime,
        #[arg(long, value_parser = parse_duration, default_value = "0")]
        d_s_aaareply: SimTime,
        #[arg(long, value_parser = parse_duration, default_value = "0")]
        d_l2: SimTime,
        #[arg(long, value_parser = parse_duration, default_value = "0")]
        d_dhcp: SimTime,
        #[arg(long, value_enum, default_value = "colocated")]
        aaa: Aaa,
        #[arg(long, value_enum, default_value = "fhpmipv6")]
        protocol: Protocol,
        #[arg(long, value_enum, default_value = "aggregated")]
        mode: Mode,
    },
    /// Run every cell of a grid and write one report row per cell.
    Sweep {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Io(String),
    Config(String),
    Runtime(String),
    Check(usize),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) | Failure::Runtime(_) => 1,
            Failure::Config(_) => 2,
            Failure::Check(_) => 3,
        }
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Config(_) | RunError::Scenario(ScenarioError::Invalid(_)) => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn config_failure(path: &Path, e: ConfigError) -> Failure {
    Failure::Config(format!("{}: {e}", path.display()))
}

fn simulate(
    config: &Path,
    out: &Path,
    check: bool,
    seed: Option<u64>,
    protocol: Option<Protocol>,
) -> Result<(), Failure> {
    let mut cfg = parse_config(&read(config)?).map_err(|e| config_failure(config, e))?;
    if let Some(seed) = seed {
        set_seed(&mut cfg, seed);
    }
    if let Some(p) = protocol {
        cfg.protocol = p.into();
    }
    let art = run_scenario(&cfg)?;
    write_all_atomic(
        out,
        &[
            ("metrics.csv", &art.metrics_csv),
            ("trace.jsonl", &art.trace_jsonl),
            ("report.csv", &art.report_csv),
        ],
    )
    .map_err(|e| Failure::Io(format!("{}: {e}", out.display())))?;
    let o = &art.outcome;
    println!(
        "{}: {} handovers, {} emitted, {} delivered, {} dropped",
        cfg.name,
        o.records.len(),
        o.emissions.len(),
        o.delivered(),
        o.dropped
    );
    let failed = art.rows.iter().filter(|r| !r.pass).count();
    if check && failed > 0 {
        for r in art.rows.iter().filter(|r| !r.pass) {
            eprintln!("oracle mismatch: {}", r.to_csv());
        }
        return Err(Failure::Check(failed));
    }
    Ok(())
}

fn run_sweep(grid_path: &Path, out: &Path) -> Result<(), Failure> {
    let grid = parse_grid(&read(grid_path)?).map_err(|e| config_failure(grid_path, e))?;
    let base_path = grid_path.parent().unwrap_or(Path::new("")).join(&grid.base);
    let base = parse_config(&read(&base_path)?).map_err(|e| config_failure(&base_path, e))?;
    let rows = sweep(&grid, &base).map_err(|e| match Failure::from(e.source.clone()) {
        Failure::Config(_) => Failure::Config(e.to_string()),
        _ => Failure::Runtime(e.to_string()),
    })?;
    write_all_atomic(out, &[("report.csv", &report_csv(&rows))])
        .map_err(|e| Failure::Io(format!("{}: {e}", out.display())))?;
    println!("{} cells", rows.len());
    Ok(())
}

fn us(t: SimTime) -> u64 {
    t.as_micros()
}

/// A reduced fraction, with a decimal rendering when it is not whole.
fn exact(numer: u64, denom: u64) -> String {
    if denom == 1 {
        numer.to_string()
    } else {
        format!("{numer}/{denom} ({:.3})", numer as f64 / denom as f64)
    }
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Simulate {
            config,
            out,
            check,
            seed,
            protocol,
        } => simulate(&config, &out, check, seed, protocol),
        Command::Sweep { grid, out } => run_sweep(&grid, &out),
        Command::Analytic {
            n,
            d_smag_ap,
            d_mag_mag,
            t_u_pred,
            d_s_pbu,
            d_s_pback,
            d_s_aaareq,
            d_s_aaareply,
            d_l2,
            d_dhcp,
            aaa,
            protocol,
            mode,
        } => {
            if n == 0 {
                Err(Failure::Config("n must be at least 1".into()))
            } else {
                let p = AnalyticParams {
                    n,
                    d_smag_ap,
                    d_mag_mag,
                    t_u_pred,
                    d_s_pbu,
                    d_s_pback,
                    d_s_aaareq,
                    d_s_aaareply,
                    d_l2,
                    d_dhcp,
                };
                let colocated = matches!(aaa, Aaa::Colocated);
                let mode = match mode {
                    Mode::Aggregated => SignalingMode::Aggregated,
                    Mode::PerSensor => SignalingMode::PerSensor,
                };
                let (pl, lat) = (avg_ho_pl(&p), avg_ho_lat(&p, colocated));
                println!("ho_pl_us = {}", us(ho_pl(&p)));
                println!("avg_ho_pl_us = {}", exact(*pl.numer(), *pl.denom()));
                println!("ho_lat_us = {}", us(ho_lat(&p, colocated)));
                println!("avg_ho_lat_us = {}", exact(*lat.numer(), *lat.denom()));
                let cost = signaling_cost(protocol.into(), n, mode, colocated);
                for (tag, count) in &cost {
                    println!("signaling.{} = {count}", tag.name());
                }
                println!("signaling_total = {}", cost.values().sum::<u32>());
                Ok(())
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Io(m) | Failure::Config(m) | Failure::Runtime(m) => {
                    eprintln!("error: {m}")
                }
                Failure::Check(k) => eprintln!("{k} handover(s) failed the oracle check"),
            }
            ExitCode::from(f.code())
        }
    }
}
