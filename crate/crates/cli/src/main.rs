use std::collections::HashSet;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spikevsa::compiler::CompileError;
use spikevsa::engine::{EngineError, Mode, SimConfig};
use spikevsa::experiments::{run_experiment, ExperimentError, ExperimentResult, ExperimentSpec};
use spikevsa::fhrr::FhrrError;
use spikevsa::readout::ReadoutError;

const EXIT_OK: u8 = 0;
const EXIT_OTHER: u8 = 1;
const EXIT_ANOMALY: u8 = 2;
const EXIT_INVALID: u8 = 3;

/// Run vector-symbolic computations on a network of spiking phasor neurons.
#[derive(Debug, Parser)]
#[command(name = "spikevsa", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Query the stopwatch state machine for every transition.
    Stopwatch(Common),
    /// Query a spatial memory of two objects on a 1-D axis.
    Spatial(Common),
    /// Compile and simulate one expression, e.g. `A * B / B`.
    Eval {
        expr: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Fixed,
    Event,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Fixed => Mode::FixedStep,
            ModeArg::Event => Mode::EventDriven,
        }
    }
}

#[derive(Debug, Args)]
struct Common {
    /// Vector dimension (default 100, 200 for spatial).
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Base oscillation frequency in Hz.
    #[arg(long = "freq-hz")]
    freq_hz: Option<f64>,
    /// Fixed-step time step in seconds (default T/1000).
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Simulated cycles (default: settle time plus one readout cycle).
    #[arg(long)]
    cycles: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Vocabulary JSON file.
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Simulation config file (`key = value` lines); flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INVALID } else { EXIT_OK });
        }
    };
    let (spec, out) = match build_spec(cli.command) {
        Ok(v) => v,
        Err(e) => return fail(&e),
    };
    let result = match run_experiment(&spec) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    if let Err(e) = result.write(&out) {
        return fail(&e);
    }
    summarize(&result, &out);
    if result.has_anomalies() {
        eprintln!("anomalies detected after settling; see {}", out.join("manifest.json").display());
        return ExitCode::from(EXIT_ANOMALY);
    }
    ExitCode::from(EXIT_OK)
}

fn build_spec(command: Command) -> Result<(ExperimentSpec, PathBuf), ExperimentError> {
    let (mut spec, common) = match command {
        Command::Stopwatch(c) => (ExperimentSpec::stopwatch(), c),
        Command::Spatial(c) => (ExperimentSpec::spatial(), c),
        Command::Eval { expr, common } => (ExperimentSpec::expression(&expr), common),
    };
    if let Some(path) = &common.config {
        let text = fs::read_to_string(path)?;
        let cfg = SimConfig::parse(&text)?;
        let given = config_keys(&text);
        spec.base_frequency_hz = cfg.base_frequency_hz;
        spec.mode = cfg.mode;
        spec.seed = cfg.seed;
        if given.contains("dt_s") {
            spec.dt_s = Some(cfg.dt_s);
        }
        if given.contains("duration_cycles") {
            spec.cycles = Some(cfg.duration_cycles);
        }
    }
    if let Some(dim) = common.dim {
        spec.dim = dim;
    }
    if let Some(seed) = common.seed {
        spec.seed = seed;
    }
    if let Some(f) = common.freq_hz {
        spec.base_frequency_hz = f;
    }
    if let Some(dt) = common.dt {
        spec.dt_s = Some(dt);
    }
    if let Some(m) = common.mode {
        spec.mode = m.into();
    }
    if let Some(c) = common.cycles {
        spec.cycles = Some(c);
    }
    spec.vocab = common.vocab;
    Ok((spec, common.out))
}

fn config_keys(text: &str) -> HashSet<String> {
    text.lines()
        .filter_map(|l| l.split('#').next()?.split_once('='))
        .map(|(k, _)| k.trim().to_string())
        .collect()
}

fn summarize(result: &ExperimentResult, out: &std::path::Path) {
    for report in &result.reports {
        println!("{}: winner {} ({:.4})", report.query, report.winner, report.winner_score);
    }
    for sweep in &result.sweeps {
        let (x, sim) = sweep.peak();
        println!("{}: sweep peak at x = {x:.2} ({sim:.4})", sweep.query);
    }
    println!("neurons: {}", result.neuron_count());
    println!("wrote {}", out.display());
}

fn fail(e: &ExperimentError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(exit_code(e))
}

fn exit_code(e: &ExperimentError) -> u8 {
    match e {
        ExperimentError::Io(_)
        | ExperimentError::Fhrr(FhrrError::Io(_))
        | ExperimentError::Compile(CompileError::Fhrr(FhrrError::Io(_)))
        | ExperimentError::Engine(EngineError::Io(_)) => EXIT_OTHER,
        ExperimentError::Readout(ReadoutError::Silent { .. }) | ExperimentError::Engine(EngineError::NonFinite { .. }) => {
            EXIT_ANOMALY
        }
        _ => EXIT_INVALID,
    }
}
