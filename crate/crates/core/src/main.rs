use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use scfde_gas::experiment::{self, ExperimentConfig, Scenario};
use scfde_gas::gas::TRACE_CSV_HEADER;
use scfde_gas::{Error, Result};

/// ML detection for RIS-assisted SC-FDE links with Grover adaptive search.
#[derive(Parser)]
#[command(name = "scfde-gas", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// BER versus SNR sweep (ris-gain, taps or tap-compensation).
    Sweep {
        /// Sweep to run; a config file may also set it.
        #[arg(long, value_parser = ["ris-gain", "taps", "tap-compensation"])]
        scenario: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// BER per search iteration for MMSE and random initialization.
    Converge {
        #[command(flatten)]
        common: Common,
    },
    /// GAS under ideal, depolarizing and readout-noise simulation.
    Noise {
        #[command(flatten)]
        common: Common,
    },
    /// Gate budgets, walked gate counts and query counts.
    Resources {
        #[command(flatten)]
        common: Common,
    },
    /// Writes the QUBO of one received block.
    DumpQubo {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// GAS trace CSV of the first sweep point and SNR (BER scenarios).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Override any configuration key, e.g. `--set gas.patience=20`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    blocks: Option<String>,
    /// Comma-separated SNR values in dB.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<String>,
    #[arg(long)]
    n: Option<String>,
    /// Cascaded channel length.
    #[arg(long)]
    taps: Option<String>,
    /// Number of RIS elements.
    #[arg(long)]
    elements: Option<String>,
    /// first, central or max.
    #[arg(long)]
    strategy: Option<String>,
    /// Comma-separated list of mmse, mld, gas.
    #[arg(long)]
    detectors: Option<String>,
}

impl Common {
    fn config(&self, scenario: Scenario) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                ExperimentConfig::parse(&text, scenario)?
            }
            None => ExperimentConfig::defaults(scenario),
        };
        let named = [
            ("seed", &self.seed),
            ("blocks", &self.blocks),
            ("snr_db", &self.snr_db),
            ("n", &self.n),
            ("taps", &self.taps),
            ("elements", &self.elements),
            ("strategy", &self.strategy),
            ("detectors", &self.detectors),
        ];
        for (key, value) in named {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            if k.trim() == "scenario" {
                return Err(Error::Config(
                    "the scenario is chosen by the subcommand, not --set".into(),
                ));
            }
            cfg.set(k.trim(), v)?;
        }
        Ok(cfg)
    }
}

fn write_out(path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => Ok(std::fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Configuration for a subcommand bound to one scenario.
fn fixed(common: &Common, scenario: Scenario) -> Result<ExperimentConfig> {
    let cfg = common.config(scenario)?;
    if cfg.scenario != scenario {
        return Err(Error::Config(format!(
            "configuration names scenario {}, but this subcommand runs {}",
            cfg.scenario.name(),
            scenario.name()
        )));
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let (common, cfg) = match &cli.command {
        Command::Sweep { scenario, common } => {
            let fallback = match scenario {
                Some(s) => s.parse()?,
                None => Scenario::RisGain,
            };
            let mut cfg = common.config(fallback)?;
            if let Some(s) = scenario {
                cfg.scenario = s.parse()?;
            }
            if !matches!(
                cfg.scenario,
                Scenario::RisGain | Scenario::Taps | Scenario::TapCompensation
            ) {
                return Err(Error::Config(format!(
                    "sweep runs ris-gain, taps or tap-compensation, not {}",
                    cfg.scenario.name()
                )));
            }
            (common, cfg)
        }
        Command::Converge { common } => (common, fixed(common, Scenario::Convergence)?),
        Command::Noise { common } => (common, fixed(common, Scenario::Noise)?),
        Command::Resources { common } => (common, fixed(common, Scenario::Resources)?),
        Command::DumpQubo { common } => (common, fixed(common, Scenario::DumpQubo)?),
    };
    cfg.validate()?;
    let text = match (&common.trace, cfg.scenario) {
        (
            Some(path),
            Scenario::RisGain | Scenario::Taps | Scenario::TapCompensation | Scenario::Noise,
        ) => {
            let mut trace = Vec::new();
            let rows = experiment::run_scenario_traced(&cfg, Some(&mut trace))?;
            let mut t = String::from(TRACE_CSV_HEADER);
            t.push('\n');
            for r in trace {
                t.push_str(&r);
                t.push('\n');
            }
            write_out(Some(path), &t)?;
            let mut s = String::from(experiment::BER_CSV_HEADER);
            s.push('\n');
            for r in rows {
                s.push_str(&r.csv());
                s.push('\n');
            }
            s
        }
        (Some(_), _) => {
            return Err(Error::Config(
                "--trace is only available for BER scenarios".into(),
            ))
        }
        (None, _) => experiment::render(&cfg)?,
    };
    write_out(common.out.as_ref(), &text)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
