use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::engine::{Connection, EngineError, Network, NetworkBuilder, NeuronId, Port};
use crate::neurons::{NeuronModel, RfParams};

/// Model shared by a whole population; per-neuron parameters are listed
/// where they differ between neurons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PopulationModel {
    /// One phase (radians) per neuron.
    PhasorSource { phases: Vec<f64> },
    Relay,
    PhaseSum,
    PhaseSub,
    PhaseMult { alpha: f64 },
    PhaseAvg,
    Resonator { params: RfParams },
}

impl PopulationModel {
    fn neuron(&self, k: usize) -> NeuronModel {
        match self {
            Self::PhasorSource { phases } => NeuronModel::PhasorSource { phase: phases[k] },
            Self::Relay => NeuronModel::Relay,
            Self::PhaseSum => NeuronModel::PhaseSum,
            Self::PhaseSub => NeuronModel::PhaseSub,
            Self::PhaseMult { alpha } => NeuronModel::PhaseMult { alpha: *alpha },
            Self::PhaseAvg => NeuronModel::PhaseAvg,
            Self::Resonator { params } => NeuronModel::Resonator(*params),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationDesc {
    pub name: String,
    pub size: usize,
    pub model: PopulationModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TapKind {
    /// One vector component per neuron.
    Vector,
    /// One vocabulary entry per neuron; the active neuron names the winner.
    OneHot,
}

/// A named output. `neurons` lists global neuron ids in component order,
/// which lets a permuted view be read without extra neurons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutTap {
    pub label: String,
    pub population: String,
    pub kind: TapKind,
    pub neurons: Vec<NeuronId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub names: Vec<String>,
}

/// Serializable network. Neuron ids are global: populations are laid out
/// back to back in list order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDescription {
    pub period_s: f64,
    pub populations: Vec<PopulationDesc>,
    pub connections: Vec<Connection>,
    pub readouts: Vec<ReadoutTap>,
}

impl NetworkDescription {
    pub fn new(period_s: f64) -> Self {
        Self {
            period_s,
            populations: Vec::new(),
            connections: Vec::new(),
            readouts: Vec::new(),
        }
    }

    pub fn neuron_count(&self) -> usize {
        self.populations.iter().map(|p| p.size).sum()
    }

    pub fn population_start(&self, name: &str) -> Option<NeuronId> {
        let mut start = 0;
        for p in &self.populations {
            if p.name == name {
                return Some(start);
            }
            start += p.size;
        }
        None
    }

    pub fn population(&self, name: &str) -> Option<&PopulationDesc> {
        self.populations.iter().find(|p| p.name == name)
    }

    pub fn readout(&self, label: &str) -> Option<&ReadoutTap> {
        self.readouts.iter().find(|r| r.label == label)
    }

    /// Append a population and return the ids of its neurons.
    pub fn add_population(&mut self, name: impl Into<String>, size: usize, model: PopulationModel) -> Vec<NeuronId> {
        let start = self.neuron_count();
        self.populations.push(PopulationDesc {
            name: name.into(),
            size,
            model,
        });
        (start..start + size).collect()
    }

    pub fn connect(&mut self, source: NeuronId, target: NeuronId, weight: f64, delay_s: f64, port: Port) {
        self.connections.push(Connection::new(source, target, weight, delay_s, port));
    }

    /// Check structure and produce an executable network.
    pub fn to_network(&self) -> Result<Network, EngineError> {
        let mut b = NetworkBuilder::new(self.period_s);
        for p in &self.populations {
            if let PopulationModel::PhasorSource { phases } = &p.model {
                if phases.len() != p.size {
                    return Err(EngineError::Validation(format!(
                        "population `{}` has {} phases for {} neurons",
                        p.name,
                        phases.len(),
                        p.size
                    )));
                }
            }
            b.add_population(p.name.clone(), (0..p.size).map(|k| p.model.neuron(k)).collect());
        }
        for c in &self.connections {
            b.connect(c.clone());
        }
        let net = b.build()?;
        for tap in &self.readouts {
            let Some(pop) = net.population(&tap.population) else {
                return Err(EngineError::Validation(format!(
                    "readout `{}` names missing population `{}`",
                    tap.label, tap.population
                )));
            };
            if let Some(&bad) = tap.neurons.iter().find(|n| !pop.range().contains(n)) {
                return Err(EngineError::Validation(format!(
                    "readout `{}` lists neuron {bad} outside population `{}`",
                    tap.label, tap.population
                )));
            }
        }
        Ok(net)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network descriptions always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Git-style content hash (`sha256` over `blob <len>\0<json>`).
    pub fn content_hash(&self) -> String {
        blob_hash(self.to_json().as_bytes())
    }
}

pub fn blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
