//! Command-line front end.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::thread;

use clap::{Parser, ValueEnum};

use crate::engine::{simulate, RunConfig, ScenarioKind};
use crate::error::{Error, Result};
use crate::metrics::{export, MetricsLog};
use crate::topology::{generate_topology, DeploymentConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioSelector {
    /// MIX, no attackers
    Mix,
    /// MIX under sinkhole attack
    MixAttack,
    /// Trust-gated MIX under sinkhole attack
    Trustmix,
    /// All three on the same topology and events
    All,
}

impl ScenarioSelector {
    pub fn scenarios(self) -> Vec<ScenarioKind> {
        match self {
            ScenarioSelector::Mix => vec![ScenarioKind::MixNoAttack],
            ScenarioSelector::MixAttack => vec![ScenarioKind::MixUnderAttack],
            ScenarioSelector::Trustmix => vec![ScenarioKind::TrustMixUnderAttack],
            ScenarioSelector::All => ScenarioKind::ALL.to_vec(),
        }
    }
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        Ok(v) => Err(format!("must be positive, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

fn percentage(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if (0.0..=100.0).contains(&v) => Ok(v),
        Ok(v) => Err(format!("must lie in [0, 100], got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

/// Simulate MIX and trust-gated MIX data gathering under sinkhole attack.
#[derive(Debug, Clone, PartialEq, Parser)]
#[command(name = "trustmix", version)]
pub struct CliConfig {
    /// Deployment radius in radio-range units
    #[arg(long, default_value_t = 8.0, value_parser = positive)]
    pub radius: f64,

    /// Sensors per unit area
    #[arg(long, default_value_t = 4.0, value_parser = positive)]
    pub density: f64,

    /// Percentage of sensors acting as sinkholes
    #[arg(long, default_value_t = 10.0, value_parser = percentage)]
    pub attacker_pct: f64,

    /// Number of rounds to simulate
    #[arg(long, default_value_t = 5000, value_parser = clap::value_parser!(u64).range(1..))]
    pub rounds: u64,

    /// Smoothing window in rounds
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub window: u64,

    /// Master seed
    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    #[arg(long, value_enum, default_value_t = ScenarioSelector::All)]
    pub scenario: ScenarioSelector,

    /// Output directory
    #[arg(long, default_value = "./out")]
    pub out: PathBuf,

    /// Redeploy at most this many times looking for a connected network
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
    pub max_resample_attempts: u32,

    /// Also write topology.csv and ledger.csv next to each scenario's outputs
    #[arg(long)]
    pub debug_dumps: bool,

    /// Print progress to standard error (repeat for more)
    #[arg(short, long, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

impl CliConfig {
    pub fn deployment(&self) -> DeploymentConfig {
        DeploymentConfig {
            radius: self.radius,
            density: self.density,
            attacker_pct: self.attacker_pct,
            seed: self.seed,
            max_resample_attempts: self.max_resample_attempts,
        }
    }

    pub fn run_config(&self, scenario: ScenarioKind) -> RunConfig {
        let mut config = RunConfig::new(self.deployment(), scenario, self.rounds);
        config.smoothing_window = self.window as usize;
        config
    }
}

pub fn parse_args<I, T>(argv: I) -> std::result::Result<CliConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    CliConfig::try_parse_from(argv)
}

fn write_debug_dumps(dir: &std::path::Path, sim: &crate::engine::Simulation) -> Result<()> {
    let open = |name: &str| -> Result<(PathBuf, BufWriter<File>)> {
        let path = dir.join(name);
        let file = File::create(&path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        Ok((path, BufWriter::new(file)))
    };
    let (path, w) = open("topology.csv")?;
    sim.topology()
        .write_csv(w)
        .map_err(|source| Error::Csv { path, source })?;
    let (path, w) = open("ledger.csv")?;
    sim.ledger()
        .write_csv(w)
        .map_err(|source| Error::Csv { path, source })?;
    Ok(())
}

/// Runs the selected scenarios on one shared topology, writes
/// `<out>/<scenario>/{timeseries.csv,sensors.csv,summary.json}` and prints
/// a comparison table to `stdout`.
pub fn execute<W: Write>(config: &CliConfig, stdout: &mut W) -> Result<Vec<MetricsLog>> {
    let deployment = config.deployment();
    let topology = generate_topology(&deployment)?;
    if config.verbose > 0 {
        eprintln!(
            "topology: {} sensors, {} attackers, max hop {}, {} deployment attempt(s)",
            topology.sensor_count(),
            topology.attackers().len(),
            topology.max_hop(),
            topology.attempts()
        );
    }

    let scenarios = config.scenario.scenarios();
    let results: Vec<Result<MetricsLog>> = thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .iter()
            .map(|&scenario| {
                let topology = topology.clone();
                scope.spawn(move || -> Result<MetricsLog> {
                    let run = config.run_config(scenario);
                    let (log, sim) = simulate(topology, scenario, &run)?;
                    let dir = config.out.join(scenario.name());
                    export(&log, &dir)?;
                    if config.debug_dumps {
                        write_debug_dumps(&dir, &sim)?;
                    }
                    if config.verbose > 0 {
                        eprintln!("{scenario}: wrote {}", dir.display());
                    }
                    Ok(log)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario thread panicked"))
            .collect()
    });
    let logs = results.into_iter().collect::<Result<Vec<_>>>()?;

    print_table(&logs, stdout).map_err(|source| Error::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })?;
    Ok(logs)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

pub fn print_table<W: Write>(logs: &[MetricsLog], out: &mut W) -> io::Result<()> {
    writeln!(
        out,
        "{:<12} {:>8} {:>12} {:>12} {:>16} {:>16}",
        "scenario", "round", "delivered%", "captured%", "avg E/delivered", "max E/delivered"
    )?;
    for log in logs {
        let summary = log.summary();
        match summary.final_rates {
            Some(f) => writeln!(
                out,
                "{:<12} {:>8} {:>12.2} {:>12.2} {:>16} {:>16}",
                summary.scenario.name(),
                f.round,
                f.delivered_pct,
                f.captured_pct,
                fmt_opt(f.avg_energy_per_delivered),
                fmt_opt(f.max_energy_per_delivered),
            )?,
            None => writeln!(
                out,
                "{:<12} {:>8} {:>12} {:>12} {:>16} {:>16}",
                summary.scenario.name(),
                "-",
                "n/a",
                "n/a",
                "n/a",
                "n/a"
            )?,
        }
    }
    Ok(())
}

/// Entry point used by the binary.
pub fn main_with_args<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let config = match parse_args(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match execute(&config, &mut lock) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
