//! End-to-end experiments: the stopwatch state machine, the spatial memory
//! queries, and ad-hoc expressions.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::compiler::{CleanupParams, CompileError, CompileOptions, Compiler, NetworkDescription, VsaExpr};
use crate::engine::{run, Anomaly, EngineError, Mode, SimConfig, SpikeRecord};
use crate::fhrr::{self, FhrrError, PhasorVector, Vocabulary};
use crate::readout::{self, ReadoutError, SimilarityReport, SspSweep};

pub const STOPWATCH_STATES: [&str; 3] = ["C", "T", "P"];
pub const STOPWATCH_ACTIONS: [&str; 2] = ["R", "S"];

/// (state, action, next state) for every transition of the stopwatch.
pub const STOPWATCH_TRANSITIONS: [(&str, &str, &str); 6] = [
    ("C", "R", "C"),
    ("C", "S", "T"),
    ("T", "R", "T"),
    ("T", "S", "P"),
    ("P", "R", "C"),
    ("P", "S", "T"),
];

pub const SPATIAL_SYMBOLS: [&str; 6] = ["Square", "Circle", "Red", "Blue", "X", "Y"];
pub const SPATIAL_PAIRS: [(&str, &str); 4] =
    [("Red", "Square"), ("Blue", "Circle"), ("Red", "Circle"), ("Blue", "Square")];
pub const SPATIAL_MEMORY: &str = "(Red * Square * X^1.85) + (Blue * Circle * X^-0.65)";
pub const SSP_GRID: (f64, f64, usize) = (-3.0, 3.0, 601);

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Readout(#[from] ReadoutError),
    #[error(transparent)]
    Fhrr(#[from] FhrrError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("invalid experiment: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentKind {
    Stopwatch,
    Spatial,
    Expression { text: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub dim: usize,
    pub seed: u64,
    pub base_frequency_hz: f64,
    /// Defaults to `T/1000`.
    pub dt_s: Option<f64>,
    pub mode: Mode,
    /// Defaults to the settle time of the compiled expressions plus one
    /// readout cycle.
    pub cycles: Option<u64>,
    pub vocab: Option<PathBuf>,
    pub cleanup: CleanupParams,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind) -> Self {
        let dim = match kind {
            ExperimentKind::Spatial => 200,
            _ => 100,
        };
        Self {
            kind,
            dim,
            seed: 0,
            base_frequency_hz: 10.0,
            dt_s: None,
            mode: Mode::FixedStep,
            cycles: None,
            vocab: None,
            cleanup: CleanupParams::default(),
        }
    }

    pub fn stopwatch() -> Self {
        Self::new(ExperimentKind::Stopwatch)
    }

    pub fn spatial() -> Self {
        Self::new(ExperimentKind::Spatial)
    }

    pub fn expression(text: &str) -> Self {
        Self::new(ExperimentKind::Expression { text: text.to_string() })
    }

    pub fn period_s(&self) -> f64 {
        1.0 / self.base_frequency_hz
    }

    pub fn sim_config(&self, default_cycles: u64) -> Result<SimConfig, EngineError> {
        let mut cfg = SimConfig::new(self.base_frequency_hz, self.cycles.unwrap_or(default_cycles), self.mode)?;
        cfg.seed = self.seed;
        match self.dt_s {
            Some(dt) => cfg.with_dt(dt),
            None => Ok(cfg),
        }
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        if self.dim == 0 {
            return Err(ExperimentError::Invalid("dim must be at least 1".into()));
        }
        if self.cycles == Some(0) {
            return Err(ExperimentError::Invalid("cycles must be at least 1".into()));
        }
        Ok(())
    }
}

/// One simulated network.
#[derive(Debug, Clone)]
pub struct NetworkRun {
    pub label: String,
    pub description: NetworkDescription,
    pub record: SpikeRecord,
    /// Cycles before this one are warm-up.
    pub settle_cycles: u64,
    pub readout_cycle: u64,
}

impl NetworkRun {
    /// Anomalies at or after the settle time.
    pub fn anomalies(&self) -> impl Iterator<Item = &Anomaly> {
        let settle = self.settle_cycles;
        self.record.anomalies.iter().filter(move |a| a.cycle >= settle)
    }

    pub fn transient_anomalies(&self) -> usize {
        self.record.anomalies.iter().filter(|a| a.cycle < self.settle_cycles).count()
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub runs: Vec<NetworkRun>,
    pub reports: Vec<SimilarityReport>,
    pub sweeps: Vec<SspSweep>,
    /// Experiment-specific details for `result.json`.
    pub details: serde_json::Value,
}

impl ExperimentResult {
    pub fn neuron_count(&self) -> usize {
        self.runs.iter().map(|r| r.description.neuron_count()).sum()
    }

    pub fn has_anomalies(&self) -> bool {
        self.runs.iter().any(|r| r.anomalies().next().is_some())
    }

    pub fn manifest(&self) -> serde_json::Value {
        let networks: Vec<_> = self
            .runs
            .iter()
            .map(|r| {
                json!({
                    "label": r.label,
                    "hash": r.description.content_hash(),
                    "neuron_count": r.description.neuron_count(),
                    "cycles": r.record.duration_cycles,
                    "readout_cycle": r.readout_cycle,
                    "transient_anomalies": r.transient_anomalies(),
                })
            })
            .collect();
        let anomalies: Vec<_> = self
            .runs
            .iter()
            .flat_map(|r| r.anomalies().map(move |a| json!({ "network": r.label, "anomaly": a })))
            .collect();
        json!({
            "spec": self.spec,
            "neuron_count": self.neuron_count(),
            "networks": networks,
            "anomalies": anomalies,
        })
    }

    /// Write every artifact into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<(), ExperimentError> {
        fs::create_dir_all(dir)?;
        let file = |name: &str| -> io::Result<BufWriter<fs::File>> { Ok(BufWriter::new(fs::File::create(dir.join(name))?)) };
        if !self.reports.is_empty() {
            let mut out = file("similarity.csv")?;
            readout::write_reports_csv(&self.reports, &mut out)?;
            out.flush()?;
        }
        if !self.sweeps.is_empty() {
            let mut out = file("ssp_sweep.csv")?;
            readout::write_sweeps_csv(&self.sweeps, &mut out)?;
            out.flush()?;
        }
        for r in &self.runs {
            let mut out = file(&format!("spikes_{}.csv", r.label))?;
            r.record.write_csv(&mut out)?;
            out.flush()?;
            fs::write(dir.join(format!("network_{}.json", r.label)), r.description.to_json())?;
        }
        fs::write(dir.join("result.json"), pretty(&self.details))?;
        fs::write(dir.join("manifest.json"), pretty(&self.manifest()))?;
        Ok(())
    }
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("json values always serialize")
}

fn simulate(
    spec: &ExperimentSpec,
    label: &str,
    description: NetworkDescription,
    settle_cycles: u64,
) -> Result<NetworkRun, ExperimentError> {
    let cfg = spec.sim_config(settle_cycles + 1)?;
    let network = description.to_network()?;
    let record = run(&network, &cfg)?;
    Ok(NetworkRun {
        label: label.to_string(),
        description,
        readout_cycle: cfg.duration_cycles - 1,
        settle_cycles: settle_cycles.min(cfg.duration_cycles - 1),
        record,
    })
}

fn compile_options(spec: &ExperimentSpec) -> CompileOptions {
    CompileOptions {
        period_s: spec.period_s(),
        cleanup: spec.cleanup,
    }
}

/// The bundle of all six transitions `s ⊗ a ⊗ ρ(next)`.
pub fn stopwatch_transitions(vocab: &Vocabulary) -> Result<PhasorVector, FhrrError> {
    let terms = STOPWATCH_TRANSITIONS
        .iter()
        .map(|&(s, a, next)| {
            let sa = fhrr::bind(vocab.require(s)?, vocab.require(a)?)?;
            fhrr::bind(&sa, &fhrr::permute(vocab.require(next)?, 1))
        })
        .collect::<Result<Vec<_>, _>>()?;
    fhrr::bundle(&terms)
}

pub fn stopwatch_vocabulary(dim: usize, seed: u64) -> Result<Vocabulary, FhrrError> {
    Vocabulary::random(&stopwatch_names(), dim, seed)
}

fn stopwatch_names() -> Vec<&'static str> {
    STOPWATCH_STATES.iter().chain(&STOPWATCH_ACTIONS).copied().collect()
}

/// `names` from the spec's vocabulary file, or random ones.
fn base_vocabulary(spec: &ExperimentSpec, names: &[&str]) -> Result<Vocabulary, FhrrError> {
    match &spec.vocab {
        Some(path) => Vocabulary::load(path)?.subset(names),
        None => Vocabulary::random(names, spec.dim, spec.seed),
    }
}

pub fn stopwatch_query(state: &str, action: &str) -> VsaExpr {
    VsaExpr::cleanup(VsaExpr::permute(
        VsaExpr::unbind(
            VsaExpr::unbind(VsaExpr::symbol("f"), VsaExpr::symbol(state)),
            VsaExpr::symbol(action),
        ),
        -1,
    ))
}

/// One network per transition query, simulated in parallel.
pub fn run_stopwatch(spec: &ExperimentSpec) -> Result<ExperimentResult, ExperimentError> {
    spec.validate()?;
    let vocab = base_vocabulary(spec, &stopwatch_names())?;
    let f = stopwatch_transitions(&vocab)?;
    let mut symbols = vocab.clone();
    symbols.insert("f", f)?;
    let opts = compile_options(spec);

    let runs = STOPWATCH_TRANSITIONS
        .par_iter()
        .map(|&(s, a, _)| {
            let expr = stopwatch_query(s, a);
            let mut c = Compiler::new(&symbols, &vocab, opts.clone())?;
            c.add_output("out", &expr)?;
            simulate(spec, &format!("{s}_{a}"), c.finish(), expr.settle_cycles(spec.cleanup.settle_cycles))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut reports = Vec::new();
    let mut queries = Vec::new();
    for (run, &(s, a, next)) in runs.iter().zip(&STOPWATCH_TRANSITIONS) {
        let tap = run.description.readout("out").expect("compiled output");
        let g = readout::tap_to_vector(&run.record, tap, run.readout_cycle)?;
        let report = SimilarityReport::new(&format!("{s}+{a}"), &g.vector, &vocab)?;
        let winners = run
            .description
            .readout("out.winner")
            .map(|t| readout::active_names(&run.record, t, run.readout_cycle))
            .unwrap_or_default();
        queries.push(json!({
            "query": report.query,
            "expected": next,
            "winner": report.winner,
            "score": report.winner_score,
            "correct": report.winner == next,
            "h_active": winners,
        }));
        reports.push(report);
    }
    Ok(ExperimentResult {
        spec: spec.clone(),
        details: json!({ "queries": queries }),
        runs,
        reports,
        sweeps: Vec::new(),
    })
}

pub fn spatial_vocabularies(dim: usize, seed: u64) -> Result<(Vocabulary, Vocabulary), FhrrError> {
    with_spatial_pairs(Vocabulary::random(&SPATIAL_SYMBOLS, dim, seed)?)
}

fn with_spatial_pairs(symbols: Vocabulary) -> Result<(Vocabulary, Vocabulary), FhrrError> {
    let mut cleanup = symbols.clone();
    for (a, b) in SPATIAL_PAIRS {
        cleanup.insert(format!("{a}*{b}"), fhrr::bind(symbols.require(a)?, symbols.require(b)?)?)?;
    }
    Ok((symbols, cleanup))
}

/// The spatial memory and its three queries as one network.
pub fn run_spatial(spec: &ExperimentSpec) -> Result<ExperimentResult, ExperimentError> {
    spec.validate()?;
    let (symbols, cleanup) = with_spatial_pairs(base_vocabulary(spec, &SPATIAL_SYMBOLS)?)?;
    let memory = VsaExpr::parse(SPATIAL_MEMORY).expect("constant expression");
    let queries = [
        ("q0", "cleanup(v / X^1.85)"),
        ("q1", "v / (Red * Square)"),
        ("q2", "v / (Blue * Circle)"),
    ];
    let mut c = Compiler::new(&symbols, &cleanup, compile_options(spec))?;
    c.define("v", &memory)?;
    let mut settle = 0;
    for (label, text) in queries {
        let expr = VsaExpr::parse(text).expect("constant expression");
        settle = settle.max(expr.substitute("v", &memory).settle_cycles(spec.cleanup.settle_cycles));
        c.add_output(label, &expr)?;
    }
    let run = simulate(spec, "spatial", c.finish(), settle)?;

    let read = |label: &str| -> Result<PhasorVector, ExperimentError> {
        let tap = run.description.readout(label).expect("compiled output");
        Ok(readout::tap_to_vector(&run.record, tap, run.readout_cycle)?.vector)
    };
    let report = SimilarityReport::new("location 1.85", &read("q0")?, &cleanup)?;
    let axis = symbols.require("X")?;
    let (lo, hi, steps) = SSP_GRID;
    let sweeps = vec![
        readout::ssp_sweep("Red*Square", &read("q1")?, axis, lo, hi, steps)?,
        readout::ssp_sweep("Blue*Circle", &read("q2")?, axis, lo, hi, steps)?,
    ];
    let details = json!({
        "location_query": { "winner": report.winner, "score": report.winner_score },
        "sweep_peaks": sweeps.iter().map(|s| json!({ "query": s.query, "x": s.peak().0, "similarity": s.peak().1 })).collect::<Vec<_>>(),
        "neuron_count": run.description.neuron_count(),
    });
    Ok(ExperimentResult {
        spec: spec.clone(),
        runs: vec![run],
        reports: vec![report],
        sweeps,
        details,
    })
}

/// Compile, simulate and decode one expression; compare with the oracle.
pub fn run_expression(spec: &ExperimentSpec) -> Result<ExperimentResult, ExperimentError> {
    spec.validate()?;
    let ExperimentKind::Expression { text } = &spec.kind else {
        return Err(ExperimentError::Invalid("not an expression experiment".into()));
    };
    let expr = VsaExpr::parse(text).map_err(CompileError::from)?;
    let vocab = match &spec.vocab {
        Some(path) => Vocabulary::load(path)?,
        None => Vocabulary::random(&expr.symbols(), spec.dim, spec.seed)?,
    };
    for name in expr.symbols() {
        if vocab.get(name).is_none() {
            return Err(CompileError::UnknownSymbol(name.to_string()).into());
        }
    }
    let oracle = expr.eval(&vocab, &vocab)?;
    let mut c = Compiler::new(&vocab, &vocab, compile_options(spec))?;
    c.add_output("out", &expr)?;
    let run = simulate(spec, "expression", c.finish(), expr.settle_cycles(spec.cleanup.settle_cycles))?;
    let tap = run.description.readout("out").expect("compiled output");
    let decoded = readout::tap_to_vector(&run.record, tap, run.readout_cycle)?;
    let report = SimilarityReport::new(text, &decoded.vector, &vocab)?;
    let deviation = decoded.vector.max_phase_deviation(&oracle)?;
    let details = json!({
        "expression": text,
        "decoded": decoded.vector.phases(),
        "oracle": oracle.phases(),
        "similarity_to_oracle": fhrr::similarity(&decoded.vector, &oracle)?,
        "max_phase_deviation_rad": deviation,
        "multi_spike_neurons": decoded.multi_spike,
        "winner": report.winner,
        "score": report.winner_score,
    });
    Ok(ExperimentResult {
        spec: spec.clone(),
        runs: vec![run],
        reports: vec![report],
        sweeps: Vec::new(),
        details,
    })
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult, ExperimentError> {
    match spec.kind {
        ExperimentKind::Stopwatch => run_stopwatch(spec),
        ExperimentKind::Spatial => run_spatial(spec),
        ExperimentKind::Expression { .. } => run_expression(spec),
    }
}
