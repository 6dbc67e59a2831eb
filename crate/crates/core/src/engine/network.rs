use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{EngineError, NeuronId};
use crate::neurons::NeuronModel;

/// Input port of a synapse. Phase-subtraction neurons need to know which
/// operand a spike belongs to; resonators distinguish feedback from
/// feedforward drive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Port {
    A,
    B,
    #[default]
    Unlabeled,
    Feedback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Connection {
    pub source: NeuronId,
    pub target: NeuronId,
    pub weight: f64,
    pub delay_s: f64,
    #[serde(default)]
    pub port: Port,
}

impl Connection {
    pub fn new(source: NeuronId, target: NeuronId, weight: f64, delay_s: f64, port: Port) -> Self {
        Self {
            source,
            target,
            weight,
            delay_s,
            port,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub name: String,
    pub start: NeuronId,
    pub len: usize,
}

impl Population {
    pub fn range(&self) -> Range<NeuronId> {
        self.start..self.start + self.len
    }
}

/// Outgoing synapse as stored by the runtime.
#[derive(Debug, Clone, Copy)]
pub struct Synapse {
    /// Global synapse index, in connection order.
    pub id: usize,
    pub target: NeuronId,
    pub weight: f64,
    /// Delay in cycles, in `[0, 1)`.
    pub delay: f64,
    pub port: Port,
}

/// A validated, executable network.
#[derive(Debug, Clone)]
pub struct Network {
    period_s: f64,
    populations: Vec<Population>,
    models: Vec<NeuronModel>,
    outgoing: Vec<Vec<Synapse>>,
    synapse_count: usize,
}

impl Network {
    pub fn period_s(&self) -> f64 {
        self.period_s
    }

    pub fn neuron_count(&self) -> usize {
        self.models.len()
    }

    pub fn synapse_count(&self) -> usize {
        self.synapse_count
    }

    pub fn populations(&self) -> &[Population] {
        &self.populations
    }

    pub fn population(&self, name: &str) -> Option<&Population> {
        self.populations.iter().find(|p| p.name == name)
    }

    pub fn models(&self) -> &[NeuronModel] {
        &self.models
    }

    pub fn outgoing(&self, neuron: NeuronId) -> &[Synapse] {
        &self.outgoing[neuron]
    }

    /// Name of the population owning `neuron`.
    pub fn population_of(&self, neuron: NeuronId) -> Option<&str> {
        // populations are contiguous and sorted by start
        let idx = self.populations.partition_point(|p| p.start + p.len <= neuron);
        self.populations
            .get(idx)
            .filter(|p| p.range().contains(&neuron))
            .map(|p| p.name.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct NetworkBuilder {
    period_s: f64,
    populations: Vec<Population>,
    models: Vec<NeuronModel>,
    connections: Vec<Connection>,
}

impl NetworkBuilder {
    pub fn new(period_s: f64) -> Self {
        Self {
            period_s,
            populations: Vec::new(),
            models: Vec::new(),
            connections: Vec::new(),
        }
    }

    pub fn add_population(&mut self, name: impl Into<String>, models: Vec<NeuronModel>) -> Range<NeuronId> {
        let start = self.models.len();
        let len = models.len();
        self.populations.push(Population {
            name: name.into(),
            start,
            len,
        });
        self.models.extend(models);
        start..start + len
    }

    pub fn connect(&mut self, connection: Connection) -> &mut Self {
        self.connections.push(connection);
        self
    }

    pub fn build(self) -> Result<Network, EngineError> {
        let invalid = |m: String| Err(EngineError::Validation(m));
        if !(self.period_s.is_finite() && self.period_s > 0.0) {
            return invalid(format!("period must be positive, got {}", self.period_s));
        }
        for (i, p) in self.populations.iter().enumerate() {
            if self.populations[..i].iter().any(|q| q.name == p.name) {
                return invalid(format!("duplicate population name `{}`", p.name));
            }
        }
        let n = self.models.len();
        let mut inbound = vec![[0usize; 4]; n];
        let mut outgoing = vec![Vec::new(); n];
        for (id, c) in self.connections.iter().enumerate() {
            if c.source >= n || c.target >= n {
                return invalid(format!("connection {id} references a missing neuron ({} -> {})", c.source, c.target));
            }
            if !c.weight.is_finite() {
                return invalid(format!("connection {id} has non-finite weight"));
            }
            if !(c.delay_s.is_finite() && c.delay_s >= 0.0) {
                return invalid(format!("connection {id} has invalid delay {} s", c.delay_s));
            }
            if c.delay_s >= self.period_s {
                return invalid(format!(
                    "connection {id} has delay {} s, not below the period {} s",
                    c.delay_s, self.period_s
                ));
            }
            let target = &self.models[c.target];
            let port_ok = match c.port {
                Port::A | Port::B => matches!(target, NeuronModel::PhaseSub),
                Port::Feedback => matches!(target, NeuronModel::Resonator(_)),
                Port::Unlabeled => !matches!(target, NeuronModel::PhaseSub),
            };
            if !port_ok {
                return invalid(format!(
                    "connection {id}: port {:?} cannot target a {} neuron",
                    c.port,
                    target.label()
                ));
            }
            inbound[c.target][c.port as usize] += 1;
            outgoing[c.source].push(Synapse {
                id,
                target: c.target,
                weight: c.weight,
                delay: c.delay_s / self.period_s,
                port: c.port,
            });
        }
        for (neuron, (model, counts)) in self.models.iter().zip(&inbound).enumerate() {
            let total: usize = counts.iter().sum();
            let problem = match model {
                NeuronModel::PhasorSource { phase } if !phase.is_finite() => Some("non-finite phase".to_string()),
                NeuronModel::PhasorSource { .. } if total > 0 => Some("sources take no input".into()),
                NeuronModel::PhaseSum | NeuronModel::PhaseAvg if total != 2 => {
                    Some(format!("needs exactly two inputs, has {total}"))
                }
                NeuronModel::PhaseMult { alpha } if !alpha.is_finite() => Some("non-finite alpha".into()),
                NeuronModel::PhaseMult { .. } if total != 1 => Some(format!("needs exactly one input, has {total}")),
                NeuronModel::PhaseSub if counts[Port::A as usize] != 1 || counts[Port::B as usize] != 1 => Some(format!(
                    "needs one `a` and one `b` input, has {} and {}",
                    counts[Port::A as usize],
                    counts[Port::B as usize]
                )),
                NeuronModel::Resonator(p) if !(p.threshold > 0.0 && p.decay_per_s >= 0.0 && p.saturation >= 1.0) => {
                    Some("invalid resonator parameters".into())
                }
                _ => None,
            };
            if let Some(problem) = problem {
                return invalid(format!("neuron {neuron} ({}): {problem}", model.label()));
            }
        }
        Ok(Network {
            period_s: self.period_s,
            populations: self.populations,
            models: self.models,
            outgoing,
            synapse_count: self.connections.len(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn source(phase: f64) -> NeuronModel {
        NeuronModel::PhasorSource { phase }
    }

    #[test]
    fn rejects_long_delay() {
        let mut b = NetworkBuilder::new(1.0);
        b.add_population("s", vec![source(0.0)]);
        b.add_population("r", vec![NeuronModel::Relay]);
        b.connect(Connection::new(0, 1, 1.0, 1.0, Port::Unlabeled));
        assert!(matches!(b.build(), Err(EngineError::Validation(_))));
    }

    #[test]
    fn rejects_port_misuse() {
        let mut b = NetworkBuilder::new(1.0);
        b.add_population("s", vec![source(0.0), source(1.0)]);
        b.add_population("d", vec![NeuronModel::PhaseSub]);
        b.connect(Connection::new(0, 2, 1.0, 0.0, Port::A));
        b.connect(Connection::new(1, 2, 1.0, 0.0, Port::A));
        assert!(b.build().is_err());

        let mut b = NetworkBuilder::new(1.0);
        b.add_population("s", vec![source(0.0)]);
        b.add_population("r", vec![NeuronModel::Relay]);
        b.connect(Connection::new(0, 1, 1.0, 0.0, Port::B));
        assert!(b.build().is_err());
    }

    #[test]
    fn population_lookup() {
        let mut b = NetworkBuilder::new(1.0);
        b.add_population("x", vec![source(0.0); 3]);
        b.add_population("empty", vec![]);
        b.add_population("y", vec![source(0.0); 2]);
        let net = b.build().unwrap();
        assert_eq!(net.population_of(0), Some("x"));
        assert_eq!(net.population_of(3), Some("y"));
        assert_eq!(net.population_of(5), None);
        assert_eq!(net.population("y").unwrap().range(), 3..5);
    }
}
