mod report;

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use duckgrid_core::economics::{run_case_study, EconomicsError};
use duckgrid_core::scenario::{
    net_load_curve, parse_config, simulate_horizon_with, ConfigError, ScenarioConfig, SimulationOptions,
};

#[derive(Parser)]
#[command(
    name = "duckgrid",
    version,
    about = "Neighbourhood DC-grid transactive energy simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario over its whole horizon.
    Simulate {
        scenario: PathBuf,
        /// Directory for summary.json and timeseries.csv (created if absent).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write convergence.csv.
        #[arg(long)]
        verbose: bool,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Cost-benefit report for case 1, 2 or 3.
    CaseStudy {
        case: u8,
        /// Override a case parameter, e.g. --set sunny_days=200.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Directory for table1.csv and the JSON report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a scenario file and print OK.
    Validate { scenario: PathBuf },
    /// Net load at the utility for one day as `hour,kw` CSV.
    DuckCurve {
        scenario: PathBuf,
        #[arg(long)]
        day: u32,
        /// Remove every battery before simulating.
        #[arg(long)]
        without_bess: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
}

enum Failure {
    Usage(String),
    Io(String),
    Schema(ConfigError),
    Economics(EconomicsError),
    /// Artifacts were written but the run hit problems.
    Simulation(String),
}

impl Failure {
    fn code(&self) -> &'static str {
        match self {
            Self::Usage(_) => "E_USAGE",
            Self::Io(_) => "E_IO",
            Self::Schema(_) => "E_SCHEMA",
            Self::Economics(EconomicsError::NoPayback(_)) => "E_NO_PAYBACK",
            Self::Economics(_) => "E_USAGE",
            Self::Simulation(_) => "E_SIMULATION",
        }
    }

    fn exit(&self) -> u8 {
        match self {
            Self::Simulation(_) | Self::Economics(EconomicsError::NoPayback(_)) => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) | Self::Io(m) | Self::Simulation(m) => f.write_str(m),
            Self::Schema(e) => write!(f, "{e}"),
            Self::Economics(e) => write!(f, "{e}"),
        }
    }
}

fn color() -> bool {
    std::env::var_os("NO_COLOR").is_none() && io::stderr().is_terminal()
}

fn report_error(failure: &Failure) {
    let label = if color() { "\x1b[1;31merror\x1b[0m" } else { "error" };
    // one line per error so scripts can grep the code
    let text = failure.to_string().replace('\n', " ");
    eprintln!("{label}[{}]: {text}", failure.code());
}

fn load(path: &Path) -> Result<ScenarioConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(Failure::Schema)
}

fn overrides(pairs: &[String]) -> Result<BTreeMap<String, String>, Failure> {
    pairs
        .iter()
        .map(|p| match p.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
            _ => Err(Failure::Usage(format!("--set expects KEY=VALUE, got `{p}`"))),
        })
        .collect()
}

fn io_err(e: io::Error) -> Failure {
    Failure::Io(e.to_string())
}

fn simulate(
    scenario: &Path,
    out: Option<&Path>,
    verbose: bool,
    seed: Option<u64>,
    workers: Option<usize>,
) -> Result<(), Failure> {
    if workers == Some(0) {
        return Err(Failure::Usage("--workers must be >= 1".into()));
    }
    let mut config = load(scenario)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let result = simulate_horizon_with(&config, SimulationOptions { workers })
        .map_err(|e| Failure::Simulation(e.to_string()))?;
    if let Some(dir) = out {
        report::write_simulation(dir, &config, &result, verbose).map_err(io_err)?;
    }
    let mut stdout = io::stdout().lock();
    let w = |e: io::Error| io_err(e);
    writeln!(
        stdout,
        "scenario {} seed {} days {}",
        config.name, result.seed, config.horizon_days
    )
    .map_err(w)?;
    for t in &result.totals {
        writeln!(
            stdout,
            "  {:<12} cost {:>12.6}  no-DER {:>12.6}  benefit {:>12.6}",
            t.home_id, t.settled_cost, t.no_der_cost, t.benefit
        )
        .map_err(w)?;
    }
    let troubled: Vec<String> = result
        .days
        .iter()
        .flat_map(|d| d.reports().into_iter().map(move |r| format!("day {}: {r}", d.day)))
        .collect();
    if troubled.is_empty() {
        Ok(())
    } else {
        Err(Failure::Simulation(format!(
            "{} report(s), first: {}",
            troubled.len(),
            troubled[0]
        )))
    }
}

fn case_study(case: u8, set: &[String], out: Option<&Path>) -> Result<(), Failure> {
    let report = run_case_study(case, &overrides(set)?).map_err(Failure::Economics)?;
    if let Some(dir) = out {
        report::write_case_study(dir, &report).map_err(io_err)?;
    }
    io::stdout()
        .write_all(report::table1_csv(&report).as_bytes())
        .map_err(io_err)
}

fn duck_curve(scenario: &Path, day: u32, without_bess: bool, seed: Option<u64>) -> Result<(), Failure> {
    let mut config = load(scenario)?;
    if day >= config.horizon_days {
        return Err(Failure::Usage(format!(
            "--day {day} is outside the {}-day horizon",
            config.horizon_days
        )));
    }
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if without_bess {
        for h in &mut config.homes {
            h.bess = None;
        }
    }
    // draws are sequential per day, so a shorter horizon leaves this day unchanged
    config.horizon_days = day + 1;
    let result =
        simulate_horizon_with(&config, SimulationOptions::default()).map_err(|e| Failure::Simulation(e.to_string()))?;
    let curve = net_load_curve(&result, day).map_err(|e| Failure::Simulation(e.to_string()))?;
    report::curve_csv(&mut io::stdout().lock(), &curve).map_err(io_err)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate {
            scenario,
            out,
            verbose,
            seed,
            workers,
        } => simulate(&scenario, out.as_deref(), verbose, seed, workers),
        Command::CaseStudy { case, set, out } => case_study(case, &set, out.as_deref()),
        Command::Validate { scenario } => {
            load(&scenario)?;
            println!("OK");
            Ok(())
        }
        Command::DuckCurve {
            scenario,
            day,
            without_bess,
            seed,
        } => duck_curve(&scenario, day, without_bess, seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            // clap's message up to its usage block, folded onto one line
            let message: Vec<&str> = text
                .lines()
                .take_while(|l| !l.starts_with("Usage:") && !l.starts_with("For more information"))
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .collect();
            let message = message.join(" ");
            let message = message.trim_start_matches("error: ");
            report_error(&Failure::Usage(if message.is_empty() {
                "invalid arguments".to_string()
            } else {
                message.to_string()
            }));
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            report_error(&f);
            ExitCode::from(f.exit())
        }
    }
}
