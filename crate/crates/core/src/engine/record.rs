use std::io::{self, Write};

use serde::Serialize;

use super::{NeuronId, Population};
use crate::neurons::AnomalyKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpikeEvent {
    pub neuron: NeuronId,
    pub time_s: f64,
    pub cycle: u64,
    /// Phase within `cycle`, radians in `[0, 2π)`.
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Anomaly {
    pub neuron: NeuronId,
    pub time_s: f64,
    pub cycle: u64,
    pub kind: AnomalyKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodedPhase {
    pub phase: f64,
    /// The neuron spiked more than once in the cycle; `phase` is the first.
    pub multiple: bool,
}

/// All spikes of a run, grouped by neuron in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeRecord {
    pub period_s: f64,
    pub duration_cycles: u64,
    pub populations: Vec<Population>,
    pub spikes: Vec<Vec<SpikeEvent>>,
    pub anomalies: Vec<Anomaly>,
}

impl SpikeRecord {
    pub fn neuron_count(&self) -> usize {
        self.spikes.len()
    }

    pub fn spikes_of(&self, neuron: NeuronId) -> &[SpikeEvent] {
        self.spikes.get(neuron).map_or(&[], Vec::as_slice)
    }

    pub fn total_spikes(&self) -> usize {
        self.spikes.iter().map(Vec::len).sum()
    }

    /// Phase of the neuron's spike in global cycle `cycle`, or `None` if it
    /// was silent (or the cycle lies outside the run).
    pub fn decode_phase(&self, neuron: NeuronId, cycle: u64) -> Option<DecodedPhase> {
        if cycle >= self.duration_cycles {
            return None;
        }
        let spikes = self.spikes_of(neuron);
        let start = spikes.partition_point(|s| s.cycle < cycle);
        let first = spikes.get(start).filter(|s| s.cycle == cycle)?;
        let multiple = spikes.get(start + 1).is_some_and(|s| s.cycle == cycle);
        Some(DecodedPhase {
            phase: first.phase,
            multiple,
        })
    }

    fn population_name(&self, neuron: NeuronId) -> &str {
        self.populations
            .iter()
            .find(|p| p.range().contains(&neuron))
            .map_or("", |p| p.name.as_str())
    }

    /// `neuron_id,population,time_s,cycle,phase_rad`, neurons in id order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "neuron_id,population,time_s,cycle,phase_rad")?;
        for (neuron, spikes) in self.spikes.iter().enumerate() {
            let pop = self.population_name(neuron);
            for s in spikes {
                writeln!(out, "{},{},{:.12},{},{:.12}", neuron, pop, s.time_s, s.cycle, s.phase)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> SpikeRecord {
        let ev = |cycle: u64, phase: f64| SpikeEvent {
            neuron: 0,
            time_s: cycle as f64 + phase,
            cycle,
            phase,
        };
        SpikeRecord {
            period_s: 1.0,
            duration_cycles: 4,
            populations: vec![Population {
                name: "p".into(),
                start: 0,
                len: 2,
            }],
            spikes: vec![vec![ev(0, 0.1), ev(2, 0.5), ev(2, 0.7)], vec![]],
            anomalies: vec![],
        }
    }

    #[test]
    fn decode_absent_and_multiple() {
        let r = record();
        assert_eq!(r.decode_phase(0, 0).unwrap().phase, 0.1);
        assert!(r.decode_phase(0, 1).is_none());
        let d = r.decode_phase(0, 2).unwrap();
        assert_eq!(d.phase, 0.5);
        assert!(d.multiple);
        assert!(r.decode_phase(1, 0).is_none());
        assert!(r.decode_phase(0, 9).is_none());
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        record().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "neuron_id,population,time_s,cycle,phase_rad");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,p,0.1000"));
    }
}
