use std::collections::HashMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::description::{NetworkDescription, PopulationModel, ReadoutTap, TapKind};
use super::expr::VsaExpr;
use super::CompileError;
use crate::engine::{NeuronId, Port};
use crate::fhrr::{PhasorVector, Vocabulary};
use crate::neurons::{RfParams, RfTiming};
use crate::phase::wrap;

/// Clean-up memory constants. Thresholds are in units of input weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CleanupParams {
    /// Cycles for the oscillator amplitude to halve.
    pub half_life_cycles: f64,
    /// G threshold relative to one unit-weight input.
    pub g_threshold: f64,
    /// H threshold as a fraction of the coherent full-population drive `N`.
    pub h_threshold_fraction: f64,
    /// H→H inhibition as a multiple of the H threshold.
    pub inhibition: f64,
    /// Amplitude cap as a multiple of the threshold.
    pub saturation: f64,
    /// Weight of the H→G feedback connections.
    pub feedback_gain: f64,
    /// Longest H spike latency after the cycle boundary, in cycles.
    pub onset_window: f64,
    /// G refractory period in cycles.
    pub refractory: f64,
    /// How far (in cycles) a G peak may lie behind the clock when an input
    /// arrives and still fire at once.
    pub catch_up: f64,
    /// Cycles allowed for convergence when sizing a run.
    pub settle_cycles: u64,
}

impl Default for CleanupParams {
    fn default() -> Self {
        Self {
            half_life_cycles: 3.0,
            g_threshold: 0.5,
            h_threshold_fraction: 0.5,
            inhibition: 1.5,
            saturation: 10.0,
            feedback_gain: 10.0,
            onset_window: 0.02,
            refractory: 0.0,
            catch_up: 0.125,
            settle_cycles: 5,
        }
    }
}

impl CleanupParams {
    pub fn g_params(&self, period_s: f64) -> RfParams {
        RfParams {
            decay_per_s: RfParams::half_life_decay(period_s, self.half_life_cycles),
            threshold: self.g_threshold,
            saturation: self.saturation,
            refractory: self.refractory,
            timing: RfTiming::PhasePeak,
            catch_up: self.catch_up,
            gate_on_feedback: true,
        }
    }

    pub fn h_params(&self, period_s: f64, dim: usize) -> RfParams {
        RfParams {
            decay_per_s: RfParams::half_life_decay(period_s, self.half_life_cycles),
            threshold: self.h_threshold_fraction * dim as f64,
            saturation: self.saturation,
            refractory: self.refractory,
            timing: RfTiming::CycleOnset {
                window: self.onset_window,
            },
            catch_up: 0.0,
            gate_on_feedback: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompileOptions {
    pub period_s: f64,
    pub cleanup: CleanupParams,
}

impl CompileOptions {
    pub fn new(period_s: f64) -> Self {
        Self {
            period_s,
            cleanup: CleanupParams::default(),
        }
    }
}

/// Unit-weight delays encoding a vector: component `k` becomes a delay of
/// `T·φ_k/2π`, or `T·(2π − φ_k)/2π` for the conjugate. Every delay is in
/// `[0, T)`.
pub fn phases_to_delays(v: &PhasorVector, period_s: f64, conjugate: bool) -> Vec<(f64, f64)> {
    v.phases()
        .iter()
        .map(|&p| (1.0, phase_delay(if conjugate { -p } else { p }, period_s)))
        .collect()
}

fn phase_delay(phase: f64, period_s: f64) -> f64 {
    let d = period_s * wrap(phase) / TAU;
    // rounding can land exactly on T
    if d >= period_s {
        0.0
    } else {
        d
    }
}

/// A compiled subexpression: the neurons carrying its components.
#[derive(Debug, Clone)]
struct Signal {
    population: String,
    neurons: Vec<NeuronId>,
}

/// Names and ids of one compiled clean-up assembly.
#[derive(Debug, Clone)]
pub struct CleanupAssembly {
    pub g: String,
    pub h: String,
}

/// Lowers expressions into one shared [`NetworkDescription`].
///
/// Symbol populations are shared by name across all outputs; every other
/// node gets its own population.
pub struct Compiler<'v> {
    dim: usize,
    symbols: &'v Vocabulary,
    cleanup_vocab: &'v Vocabulary,
    opts: CompileOptions,
    desc: NetworkDescription,
    sources: HashMap<String, Signal>,
    counter: usize,
    cleanups: Vec<CleanupAssembly>,
}

impl<'v> Compiler<'v> {
    pub fn new(symbols: &'v Vocabulary, cleanup_vocab: &'v Vocabulary, opts: CompileOptions) -> Result<Self, CompileError> {
        let dim = symbols
            .dim()
            .ok_or_else(|| CompileError::Invalid("symbol vocabulary is empty".into()))?;
        if let Some(other) = cleanup_vocab.dim().filter(|&d| d != dim) {
            return Err(CompileError::Invalid(format!(
                "clean-up vocabulary has dim {other}, symbols have dim {dim}"
            )));
        }
        if !(opts.period_s.is_finite() && opts.period_s > 0.0) {
            return Err(CompileError::Invalid(format!("period must be positive, got {}", opts.period_s)));
        }
        Ok(Self {
            dim,
            symbols,
            cleanup_vocab,
            desc: NetworkDescription::new(opts.period_s),
            opts,
            sources: HashMap::new(),
            counter: 0,
            cleanups: Vec::new(),
        })
    }

    fn dim(&self) -> usize {
        self.dim
    }

    /// Add an encoded constant vector as a source population.
    pub fn encode(&mut self, name: &str, v: &PhasorVector) -> Result<(), CompileError> {
        if v.dim() != self.dim() {
            return Err(CompileError::Invalid(format!(
                "vector `{name}` has dim {}, expected {}",
                v.dim(),
                self.dim()
            )));
        }
        if self.sources.contains_key(name) || self.desc.population(name).is_some() {
            return Err(CompileError::Invalid(format!("population `{name}` already exists")));
        }
        self.add_source(name, v);
        Ok(())
    }

    fn add_source(&mut self, name: &str, v: &PhasorVector) -> Signal {
        let neurons = self.desc.add_population(
            name,
            v.dim(),
            PopulationModel::PhasorSource {
                phases: v.phases().to_vec(),
            },
        );
        let sig = Signal {
            population: name.to_string(),
            neurons,
        };
        self.sources.insert(name.to_string(), sig.clone());
        sig
    }

    fn fresh(&mut self, kind: &str) -> String {
        loop {
            self.counter += 1;
            let name = format!("{kind}{}", self.counter);
            if self.desc.population(&name).is_none() && self.symbols.get(&name).is_none() {
                return name;
            }
        }
    }

    fn pointwise(&mut self, kind: &str, model: PopulationModel, inputs: &[(&Signal, Port)]) -> Signal {
        let name = self.fresh(kind);
        let neurons = self.desc.add_population(name.clone(), self.dim(), model);
        for (sig, port) in inputs {
            for (k, &target) in neurons.iter().enumerate() {
                self.desc.connect(sig.neurons[k], target, 1.0, 0.0, *port);
            }
        }
        Signal {
            population: name,
            neurons,
        }
    }

    fn lower(&mut self, expr: &VsaExpr) -> Result<Signal, CompileError> {
        Ok(match expr {
            VsaExpr::Symbol(name) => match self.sources.get(name) {
                Some(sig) => sig.clone(),
                None => {
                    let v = self
                        .symbols
                        .get(name)
                        .ok_or_else(|| CompileError::UnknownSymbol(name.clone()))?
                        .clone();
                    self.add_source(name, &v)
                }
            },
            VsaExpr::Bind(l, r) => {
                let (l, r) = (self.lower(l)?, self.lower(r)?);
                let inputs = [(&l, Port::Unlabeled), (&r, Port::Unlabeled)];
                self.pointwise("bind", PopulationModel::PhaseSum, &inputs)
            }
            VsaExpr::Unbind(l, r) => {
                let (l, r) = (self.lower(l)?, self.lower(r)?);
                self.pointwise("unbind", PopulationModel::PhaseSub, &[(&l, Port::A), (&r, Port::B)])
            }
            VsaExpr::Bundle(l, r) => {
                let (l, r) = (self.lower(l)?, self.lower(r)?);
                let inputs = [(&l, Port::Unlabeled), (&r, Port::Unlabeled)];
                self.pointwise("bundle", PopulationModel::PhaseAvg, &inputs)
            }
            VsaExpr::Power(e, alpha) => {
                if !alpha.is_finite() {
                    return Err(CompileError::Invalid(format!("non-finite exponent {alpha}")));
                }
                let e = self.lower(e)?;
                self.pointwise("power", PopulationModel::PhaseMult { alpha: *alpha }, &[(&e, Port::Unlabeled)])
            }
            VsaExpr::Permute(e, shift) => {
                let e = self.lower(e)?;
                let n = e.neurons.len() as i64;
                Signal {
                    population: e.population.clone(),
                    neurons: (0..n).map(|k| e.neurons[(k + shift).rem_euclid(n) as usize]).collect(),
                }
            }
            VsaExpr::Cleanup(e) => {
                let e = self.lower(e)?;
                self.cleanup(&e)?
            }
        })
    }

    /// G (N resonators) driven by the query; H (M resonators) reading
    /// `Wᴴg` through conjugate delays; all-pairs inhibition in H; feedback
    /// `W h` into G through the plain delays.
    fn cleanup(&mut self, query: &Signal) -> Result<Signal, CompileError> {
        let vocab = self.cleanup_vocab;
        if vocab.is_empty() {
            return Err(CompileError::Invalid("clean-up needs a non-empty vocabulary".into()));
        }
        let n = self.dim();
        let m = vocab.len();
        let period = self.opts.period_s;
        let params = self.opts.cleanup;
        let base = self.fresh("cleanup");
        let g_name = format!("{base}.g");
        let h_name = format!("{base}.h");
        let g = self.desc.add_population(
            g_name.clone(),
            n,
            PopulationModel::Resonator {
                params: params.g_params(period),
            },
        );
        let h_params = params.h_params(period, n);
        let inhibition = -params.inhibition * h_params.threshold;
        let h = self.desc.add_population(h_name.clone(), m, PopulationModel::Resonator { params: h_params });
        for (j, &gj) in g.iter().enumerate() {
            self.desc.connect(query.neurons[j], gj, 1.0, 0.0, Port::Unlabeled);
        }
        for (mi, (_, w)) in vocab.iter().enumerate() {
            for (&gj, &phase) in g.iter().zip(w.phases()) {
                self.desc.connect(gj, h[mi], 1.0, phase_delay(-phase, period), Port::Unlabeled);
            }
        }
        for &a in &h {
            for &b in &h {
                if a != b {
                    self.desc.connect(a, b, inhibition, 0.0, Port::Unlabeled);
                }
            }
        }
        for (mi, (_, w)) in vocab.iter().enumerate() {
            for (&gj, &phase) in g.iter().zip(w.phases()) {
                self.desc
                    .connect(h[mi], gj, params.feedback_gain, phase_delay(phase, period), Port::Feedback);
            }
        }
        self.cleanups.push(CleanupAssembly {
            g: g_name.clone(),
            h: h_name,
        });
        Ok(Signal {
            population: g_name,
            neurons: g,
        })
    }

    /// Compile `expr` once and make later references to the symbol `name`
    /// reuse its neurons.
    pub fn define(&mut self, name: &str, expr: &VsaExpr) -> Result<(), CompileError> {
        if self.sources.contains_key(name) {
            return Err(CompileError::Invalid(format!("`{name}` is already defined")));
        }
        let sig = self.lower(expr)?;
        self.sources.insert(name.to_string(), sig);
        Ok(())
    }

    /// Compile `expr` and expose it as readout `label`. A top-level clean-up
    /// also gets a one-hot readout `<label>.winner` over its H population.
    pub fn add_output(&mut self, label: &str, expr: &VsaExpr) -> Result<(), CompileError> {
        if self.desc.readout(label).is_some() {
            return Err(CompileError::Invalid(format!("duplicate readout `{label}`")));
        }
        let before = self.cleanups.len();
        let sig = self.lower(expr)?;
        self.desc.readouts.push(ReadoutTap {
            label: label.to_string(),
            population: sig.population.clone(),
            kind: TapKind::Vector,
            neurons: sig.neurons,
            names: Vec::new(),
        });
        if matches!(expr, VsaExpr::Cleanup(_)) && self.cleanups.len() > before {
            let h = self.cleanups.last().expect("just added").h.clone();
            let start = self.desc.population_start(&h).expect("population exists");
            self.desc.readouts.push(ReadoutTap {
                label: format!("{label}.winner"),
                population: h,
                kind: TapKind::OneHot,
                neurons: (start..start + self.cleanup_vocab.len()).collect(),
                names: self.cleanup_vocab.names().map(str::to_string).collect(),
            });
        }
        Ok(())
    }

    pub fn cleanups(&self) -> &[CleanupAssembly] {
        &self.cleanups
    }

    pub fn finish(self) -> NetworkDescription {
        self.desc
    }
}

/// Compile a single expression with readout label `out`.
pub fn compile(
    expr: &VsaExpr,
    symbols: &Vocabulary,
    cleanup_vocab: &Vocabulary,
    opts: &CompileOptions,
) -> Result<NetworkDescription, CompileError> {
    let mut c = Compiler::new(symbols, cleanup_vocab, opts.clone())?;
    c.add_output("out", expr)?;
    Ok(c.finish())
}

/// Sum of population sizes.
pub fn neuron_count(desc: &NetworkDescription) -> usize {
    desc.neuron_count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::description::PopulationModel;
    use std::f64::consts::FRAC_PI_2;

    fn vocab(names: &[&str], dim: usize) -> Vocabulary {
        Vocabulary::random(names, dim, 3).unwrap()
    }

    #[test]
    fn delays_follow_phases() {
        let v = PhasorVector::from_phases(vec![0.0, FRAC_PI_2, TAU - 1e-17]).unwrap();
        let d = phases_to_delays(&v, 1.0, false);
        assert_eq!(d[0], (1.0, 0.0));
        assert!((d[1].1 - 0.25).abs() < 1e-15);
        assert!(d[2].1 < 1.0);
        let c = phases_to_delays(&v, 1.0, true);
        assert_eq!(c[0].1, 0.0);
        assert!((c[1].1 - 0.75).abs() < 1e-15);
    }

    #[test]
    fn conjugate_delays_peak_on_the_matching_pattern() {
        use num_complex::Complex64;
        let w = PhasorVector::random(100, 8).unwrap();
        let delays = phases_to_delays(&w, 1.0, true);
        // a G pattern spiking at phase g_k arrives at g_k + delay_k
        let amplitude = |g: &PhasorVector| {
            g.phases()
                .iter()
                .zip(&delays)
                .map(|(&p, &(wt, d))| Complex64::from_polar(wt, p + TAU * d))
                .sum::<Complex64>()
                .norm()
        };
        let matched = amplitude(&w);
        assert!((matched - 100.0).abs() < 1e-9);
        for s in 0..1000 {
            assert!(amplitude(&PhasorVector::random(100, 10_000 + s).unwrap()) < matched);
        }
    }

    #[test]
    fn symbol_is_one_source_population() {
        let v = vocab(&["A"], 12);
        let desc = compile(&VsaExpr::symbol("A"), &v, &v, &CompileOptions::new(0.1)).unwrap();
        assert_eq!(neuron_count(&desc), 12);
        assert!(matches!(desc.populations[0].model, PopulationModel::PhasorSource { .. }));
        assert_eq!(desc.readout("out").unwrap().neurons, (0..12).collect::<Vec<_>>());
    }

    #[test]
    fn operators_map_to_models() {
        let v = vocab(&["A", "B"], 4);
        let e = VsaExpr::parse("(A * B) / B + rho(A^0.5, 1)").unwrap();
        let desc = compile(&e, &v, &v, &CompileOptions::new(0.1)).unwrap();
        let kinds: Vec<_> = desc.populations.iter().map(|p| (p.name.as_str(), &p.model)).collect();
        assert_eq!(desc.neuron_count(), 6 * 4);
        assert!(matches!(kinds[2], ("bind1", PopulationModel::PhaseSum)));
        assert!(matches!(kinds[3], ("unbind2", PopulationModel::PhaseSub)));
        assert!(matches!(kinds[4], ("power3", PopulationModel::PhaseMult { alpha }) if *alpha == 0.5));
        assert!(matches!(kinds[5], ("bundle4", PopulationModel::PhaseAvg)));
        // left operand of unbind on port A
        let a_sources: Vec<_> = desc.connections.iter().filter(|c| c.port == Port::A).map(|c| c.source).collect();
        assert_eq!(a_sources, (8..12).collect::<Vec<_>>());
    }

    #[test]
    fn permutation_rewires_without_neurons() {
        let v = vocab(&["A"], 5);
        let desc = compile(&VsaExpr::permute(VsaExpr::symbol("A"), 2), &v, &v, &CompileOptions::new(0.1)).unwrap();
        assert_eq!(desc.neuron_count(), 5);
        assert_eq!(desc.readout("out").unwrap().neurons, vec![2, 3, 4, 0, 1]);
    }

    #[test]
    fn cleanup_assembly_layout() {
        let v = vocab(&["A", "B", "C", "D", "E"], 100);
        let q = VsaExpr::cleanup(VsaExpr::symbol("A"));
        let mut c = Compiler::new(&v, &v, CompileOptions::new(0.1)).unwrap();
        c.add_output("out", &q).unwrap();
        let asm = c.cleanups()[0].clone();
        let desc = c.finish();
        let g = desc.population(&asm.g).unwrap();
        let h = desc.population(&asm.h).unwrap();
        assert_eq!(g.size + h.size, 105);
        assert_eq!(desc.readout("out.winner").unwrap().names, vec!["A", "B", "C", "D", "E"]);
        let h0 = desc.population_start(&asm.h).unwrap();
        let inhibit = desc.connections.iter().filter(|c| c.weight < 0.0).count();
        assert_eq!(inhibit, 5 * 4);
        let feedback = desc.connections.iter().filter(|c| c.port == Port::Feedback).count();
        assert_eq!(feedback, 5 * 100);
        assert!(desc.connections.iter().filter(|c| c.target >= h0).all(|c| c.delay_s < 0.1));
    }

    #[test]
    fn define_shares_populations() {
        let v = vocab(&["A", "B"], 3);
        let mut c = Compiler::new(&v, &v, CompileOptions::new(0.1)).unwrap();
        c.define("m", &VsaExpr::parse("A * B").unwrap()).unwrap();
        c.add_output("x", &VsaExpr::parse("m / A").unwrap()).unwrap();
        c.add_output("y", &VsaExpr::parse("m / B").unwrap()).unwrap();
        assert!(c.define("m", &VsaExpr::symbol("A")).is_err());
        assert!(c.add_output("x", &VsaExpr::symbol("A")).is_err());
        assert_eq!(c.finish().neuron_count(), 5 * 3);
    }

    #[test]
    fn rejects_bad_inputs() {
        let v = vocab(&["A"], 3);
        let other = vocab(&["Z"], 4);
        let opts = CompileOptions::new(0.1);
        assert!(matches!(
            compile(&VsaExpr::symbol("B"), &v, &v, &opts),
            Err(CompileError::UnknownSymbol(s)) if s == "B"
        ));
        assert!(Compiler::new(&v, &other, opts.clone()).is_err());
        assert!(Compiler::new(&Vocabulary::new(), &v, opts.clone()).is_err());
        let empty = Vocabulary::new();
        assert!(compile(&VsaExpr::cleanup(VsaExpr::symbol("A")), &v, &empty, &opts).is_err());
        let mut c = Compiler::new(&v, &v, opts).unwrap();
        assert!(c.encode("wide", &PhasorVector::identity(4).unwrap()).is_err());
        assert!(c.encode("A2", &PhasorVector::identity(3).unwrap()).is_ok());
        assert!(c.encode("A2", &PhasorVector::identity(3).unwrap()).is_err());
    }
}
