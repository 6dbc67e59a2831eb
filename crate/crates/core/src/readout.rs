//! Spike records back to vectors, similarity reports and SSP sweeps.

use std::io::{self, Write};

use thiserror::Error;

use crate::compiler::ReadoutTap;
use crate::engine::{NeuronId, SpikeRecord};
use crate::fhrr::{fractional_power, similarity, FhrrError, PhasorVector, Vocabulary};

#[derive(Debug, Error)]
pub enum ReadoutError {
    #[error("{} silent neuron(s) in cycle {cycle}: {neurons:?}", neurons.len())]
    Silent { cycle: u64, neurons: Vec<NeuronId> },
    #[error("unknown population `{0}`")]
    UnknownPopulation(String),
    #[error("sweep needs at least 2 steps over an increasing range")]
    BadGrid,
    #[error(transparent)]
    Fhrr(#[from] FhrrError),
}

/// A vector read from spikes, plus the neurons that spiked more than once
/// in the cycle (their first spike is used).
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub vector: PhasorVector,
    pub multi_spike: Vec<NeuronId>,
}

/// Read component `k` from `neurons[k]` in global cycle `cycle`.
pub fn neurons_to_vector(record: &SpikeRecord, neurons: &[NeuronId], cycle: u64) -> Result<Decoded, ReadoutError> {
    let mut phases = Vec::with_capacity(neurons.len());
    let mut silent = Vec::new();
    let mut multi_spike = Vec::new();
    for &n in neurons {
        match record.decode_phase(n, cycle) {
            Some(d) => {
                if d.multiple {
                    multi_spike.push(n);
                }
                phases.push(d.phase);
            }
            None => silent.push(n),
        }
    }
    if !silent.is_empty() {
        return Err(ReadoutError::Silent { cycle, neurons: silent });
    }
    Ok(Decoded {
        vector: PhasorVector::from_phases(phases)?,
        multi_spike,
    })
}

/// Read a whole population in neuron order.
pub fn record_to_vector(record: &SpikeRecord, population: &str, cycle: u64) -> Result<Decoded, ReadoutError> {
    let pop = record
        .populations
        .iter()
        .find(|p| p.name == population)
        .ok_or_else(|| ReadoutError::UnknownPopulation(population.to_string()))?;
    neurons_to_vector(record, &pop.range().collect::<Vec<_>>(), cycle)
}

pub fn tap_to_vector(record: &SpikeRecord, tap: &ReadoutTap, cycle: u64) -> Result<Decoded, ReadoutError> {
    neurons_to_vector(record, &tap.neurons, cycle)
}

/// Names of the one-hot tap's neurons that spiked in `cycle`.
pub fn active_names<'t>(record: &SpikeRecord, tap: &'t ReadoutTap, cycle: u64) -> Vec<&'t str> {
    tap.neurons
        .iter()
        .zip(&tap.names)
        .filter(|(&n, _)| record.decode_phase(n, cycle).is_some())
        .map(|(_, name)| name.as_str())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityReport {
    pub query: String,
    /// Vocabulary order.
    pub entries: Vec<(String, f64)>,
    pub winner: String,
    pub winner_score: f64,
}

impl SimilarityReport {
    /// Similarity of `v` to every entry; ties go to the earliest entry.
    pub fn new(query: &str, v: &PhasorVector, vocab: &Vocabulary) -> Result<Self, ReadoutError> {
        if vocab.is_empty() {
            return Err(FhrrError::EmptyVocabulary.into());
        }
        let mut entries = Vec::with_capacity(vocab.len());
        for (name, w) in vocab.iter() {
            entries.push((name.to_string(), similarity(v, w)?));
        }
        let (mut best, mut best_score) = (0, f64::NEG_INFINITY);
        for (i, (_, s)) in entries.iter().enumerate() {
            if *s > best_score {
                best = i;
                best_score = *s;
            }
        }
        Ok(Self {
            query: query.to_string(),
            winner: entries[best].0.clone(),
            winner_score: best_score,
            entries,
        })
    }

    pub fn write_csv_header<W: Write>(mut out: W) -> io::Result<()> {
        writeln!(out, "query,vocab_name,similarity,winner_flag")
    }

    pub fn write_csv_rows<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (name, s) in &self.entries {
            let flag = u8::from(*name == self.winner);
            writeln!(out, "{},{},{:.9},{}", csv_field(&self.query), csv_field(name), s, flag)?;
        }
        Ok(())
    }
}

/// Write several reports into one CSV document.
pub fn write_reports_csv<W: Write>(reports: &[SimilarityReport], mut out: W) -> io::Result<()> {
    SimilarityReport::write_csv_header(&mut out)?;
    for r in reports {
        r.write_csv_rows(&mut out)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SspSweep {
    pub query: String,
    pub xs: Vec<f64>,
    pub similarities: Vec<f64>,
}

impl SspSweep {
    /// Grid point with the highest similarity (earliest on ties).
    pub fn peak(&self) -> (f64, f64) {
        let mut best = 0;
        for (i, s) in self.similarities.iter().enumerate() {
            if *s > self.similarities[best] {
                best = i;
            }
        }
        (self.xs[best], self.similarities[best])
    }

    pub fn write_csv_rows<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (x, s) in self.xs.iter().zip(&self.similarities) {
            writeln!(out, "{},{:.6},{:.9}", csv_field(&self.query), x, s)?;
        }
        Ok(())
    }
}

pub fn write_sweeps_csv<W: Write>(sweeps: &[SspSweep], mut out: W) -> io::Result<()> {
    writeln!(out, "query,x,similarity")?;
    for s in sweeps {
        s.write_csv_rows(&mut out)?;
    }
    Ok(())
}

/// `similarity(q, axis^x)` on `steps` evenly spaced points over
/// `[x_min, x_max]`.
pub fn ssp_sweep(
    query: &str,
    q: &PhasorVector,
    axis: &PhasorVector,
    x_min: f64,
    x_max: f64,
    steps: usize,
) -> Result<SspSweep, ReadoutError> {
    if steps < 2 || !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
        return Err(ReadoutError::BadGrid);
    }
    let h = (x_max - x_min) / (steps - 1) as f64;
    let xs: Vec<f64> = (0..steps).map(|i| x_min + i as f64 * h).collect();
    let similarities = xs
        .iter()
        .map(|&x| similarity(q, &fractional_power(axis, x)))
        .collect::<Result<_, _>>()?;
    Ok(SspSweep {
        query: query.to_string(),
        xs,
        similarities,
    })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
