//! Exact FHRR algebra over unit-modulus complex vectors stored as phases.
//!
//! Every spiking computation in this crate is checked against the functions
//! here. Phases are always stored in `[0, 2π)`; operations that need the
//! centered representative `(−π, π]` convert on the fly.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use rand::distributions::Uniform;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::phase::{center, wrap};

/// Moduli below this are treated as an exact antipodal cancellation.
pub const DEGENERATE_BUNDLE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FhrrError {
    #[error("dimension must be at least 1")]
    ZeroDim,
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("cannot bundle an empty list of vectors")]
    EmptyBundle,
    #[error("degenerate bundle: component {index} sums to modulus {modulus:e}")]
    DegenerateBundle { index: usize, modulus: f64 },
    #[error("vocabulary is empty")]
    EmptyVocabulary,
    #[error("duplicate vocabulary entry `{0}`")]
    DuplicateName(String),
    #[error("unknown vocabulary entry `{0}`")]
    UnknownName(String),
    #[error("phase {value} at component {index} is not finite")]
    NonFinite { index: usize, value: f64 },
    #[error("vocabulary I/O: {0}")]
    Io(String),
}

/// A unitary complex vector, stored as one phase per component.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasorVector {
    phases: Vec<f64>,
}

impl PhasorVector {
    /// Build from arbitrary angles; each is wrapped into `[0, 2π)`.
    pub fn from_phases(phases: Vec<f64>) -> Result<Self, FhrrError> {
        if phases.is_empty() {
            return Err(FhrrError::ZeroDim);
        }
        if let Some((index, &value)) = phases.iter().enumerate().find(|(_, p)| !p.is_finite()) {
            return Err(FhrrError::NonFinite { index, value });
        }
        Ok(Self {
            phases: phases.into_iter().map(wrap).collect(),
        })
    }

    /// The identity element for binding: every phase zero.
    pub fn identity(dim: usize) -> Result<Self, FhrrError> {
        Self::constant(dim, 0.0)
    }

    pub fn constant(dim: usize, phase: f64) -> Result<Self, FhrrError> {
        if dim == 0 {
            return Err(FhrrError::ZeroDim);
        }
        Self::from_phases(vec![phase; dim])
    }

    /// Uniform i.i.d. phases from a seeded ChaCha stream.
    pub fn random(dim: usize, seed: u64) -> Result<Self, FhrrError> {
        if dim == 0 {
            return Err(FhrrError::ZeroDim);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self::random_with(dim, &mut rng))
    }

    /// Draw from a caller-owned generator. `dim` must be nonzero.
    pub fn random_with<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        assert!(dim > 0, "dimension must be at least 1");
        let dist = Uniform::new(0.0, std::f64::consts::TAU);
        Self {
            phases: (0..dim).map(|_| wrap(rng.sample(dist))).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn phase(&self, k: usize) -> f64 {
        self.phases[k]
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect()
    }

    pub fn bind(&self, other: &Self) -> Result<Self, FhrrError> {
        bind(self, other)
    }

    pub fn unbind(&self, other: &Self) -> Result<Self, FhrrError> {
        unbind(self, other)
    }

    pub fn permute(&self, shift: i64) -> Self {
        permute(self, shift)
    }

    pub fn power(&self, alpha: f64) -> Self {
        fractional_power(self, alpha)
    }

    pub fn conjugate(&self) -> Self {
        Self {
            phases: self.phases.iter().map(|&p| wrap(-p)).collect(),
        }
    }

    /// Largest per-component circular phase distance to `other`.
    pub fn max_phase_deviation(&self, other: &Self) -> Result<f64, FhrrError> {
        check_dims(self, other)?;
        Ok(self
            .phases
            .iter()
            .zip(&other.phases)
            .map(|(&a, &b)| crate::phase::circular_distance(a, b))
            .fold(0.0, f64::max))
    }
}

impl fmt::Display for PhasorVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PhasorVector(dim={})", self.dim())
    }
}

fn check_dims(u: &PhasorVector, v: &PhasorVector) -> Result<(), FhrrError> {
    if u.dim() != v.dim() {
        return Err(FhrrError::DimMismatch {
            left: u.dim(),
            right: v.dim(),
        });
    }
    Ok(())
}

pub fn random_vector(dim: usize, seed: u64) -> Result<PhasorVector, FhrrError> {
    PhasorVector::random(dim, seed)
}

/// Hadamard product: phases add.
pub fn bind(u: &PhasorVector, v: &PhasorVector) -> Result<PhasorVector, FhrrError> {
    check_dims(u, v)?;
    Ok(PhasorVector {
        phases: u.phases.iter().zip(&v.phases).map(|(a, b)| wrap(a + b)).collect(),
    })
}

/// Multiplication by the conjugate: phases subtract.
pub fn unbind(w: &PhasorVector, v: &PhasorVector) -> Result<PhasorVector, FhrrError> {
    check_dims(w, v)?;
    Ok(PhasorVector {
        phases: w.phases.iter().zip(&v.phases).map(|(a, b)| wrap(a - b)).collect(),
    })
}

/// Complex sum with the modulus discarded.
pub fn bundle(vs: &[PhasorVector]) -> Result<PhasorVector, FhrrError> {
    let first = vs.first().ok_or(FhrrError::EmptyBundle)?;
    for v in &vs[1..] {
        check_dims(first, v)?;
    }
    if vs.len() == 1 {
        return Ok(first.clone());
    }
    let mut phases = Vec::with_capacity(first.dim());
    for k in 0..first.dim() {
        let sum: Complex64 = vs.iter().map(|v| Complex64::from_polar(1.0, v.phases[k])).sum();
        let modulus = sum.norm();
        if modulus < DEGENERATE_BUNDLE_TOL {
            return Err(FhrrError::DegenerateBundle { index: k, modulus });
        }
        phases.push(wrap(sum.arg()));
    }
    Ok(PhasorVector { phases })
}

/// Circular shift: `result[k] = v[(k + shift) mod N]`.
pub fn permute(v: &PhasorVector, shift: i64) -> PhasorVector {
    let n = v.dim() as i64;
    PhasorVector {
        phases: (0..n)
            .map(|k| v.phases[(k + shift).rem_euclid(n) as usize])
            .collect(),
    }
}

/// Scales each centered phase by `alpha`.
pub fn fractional_power(v: &PhasorVector, alpha: f64) -> PhasorVector {
    PhasorVector {
        phases: v.phases.iter().map(|&p| wrap(center(p) * alpha)).collect(),
    }
}

/// `Re((1/N) Σ e^{i(u_k − v_k)})`.
pub fn similarity(u: &PhasorVector, v: &PhasorVector) -> Result<f64, FhrrError> {
    check_dims(u, v)?;
    let n = u.dim() as f64;
    Ok(u.phases.iter().zip(&v.phases).map(|(a, b)| (a - b).cos()).sum::<f64>() / n)
}

/// Named vectors sharing one dimension, in insertion order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vocabulary {
    entries: Vec<(String, PhasorVector)>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, vector: PhasorVector) -> Result<(), FhrrError> {
        let name = name.into();
        if self.get(&name).is_some() {
            return Err(FhrrError::DuplicateName(name));
        }
        if let Some(dim) = self.dim() {
            if dim != vector.dim() {
                return Err(FhrrError::DimMismatch {
                    left: dim,
                    right: vector.dim(),
                });
            }
        }
        self.entries.push((name, vector));
        Ok(())
    }

    /// Generate `names` with consecutive seeds drawn from one master stream.
    pub fn random(names: &[&str], dim: usize, seed: u64) -> Result<Self, FhrrError> {
        if dim == 0 {
            return Err(FhrrError::ZeroDim);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vocab = Self::new();
        for name in names {
            vocab.insert(*name, PhasorVector::random_with(dim, &mut rng))?;
        }
        Ok(vocab)
    }

    pub fn dim(&self) -> Option<usize> {
        self.entries.first().map(|(_, v)| v.dim())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&PhasorVector> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn require(&self, name: &str) -> Result<&PhasorVector, FhrrError> {
        self.get(name).ok_or_else(|| FhrrError::UnknownName(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &PhasorVector)> {
        self.entries.iter().map(|(n, v)| (n.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    /// Keep only the listed entries, in the listed order.
    pub fn subset(&self, names: &[&str]) -> Result<Self, FhrrError> {
        let mut out = Self::new();
        for name in names {
            out.insert(*name, self.require(name)?.clone())?;
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String, FhrrError> {
        let doc = VocabularyDoc {
            dim: self.dim().unwrap_or(0),
            entries: self
                .entries
                .iter()
                .map(|(name, v)| EntryDoc {
                    name: name.clone(),
                    phases: v.phases.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).map_err(|e| FhrrError::Io(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, FhrrError> {
        let doc: VocabularyDoc = serde_json::from_str(text).map_err(|e| FhrrError::Io(e.to_string()))?;
        let mut seen = HashSet::new();
        let mut vocab = Self::new();
        for entry in doc.entries {
            if !seen.insert(entry.name.clone()) {
                return Err(FhrrError::DuplicateName(entry.name));
            }
            if entry.phases.len() != doc.dim {
                return Err(FhrrError::DimMismatch {
                    left: doc.dim,
                    right: entry.phases.len(),
                });
            }
            vocab.insert(entry.name, PhasorVector::from_phases(entry.phases)?)?;
        }
        Ok(vocab)
    }

    pub fn load(path: &Path) -> Result<Self, FhrrError> {
        let text = std::fs::read_to_string(path).map_err(|e| FhrrError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), FhrrError> {
        std::fs::write(path, self.to_json()?).map_err(|e| FhrrError::Io(format!("{}: {e}", path.display())))
    }
}

#[derive(Serialize, Deserialize)]
struct VocabularyDoc {
    dim: usize,
    entries: Vec<EntryDoc>,
}

#[derive(Serialize, Deserialize)]
struct EntryDoc {
    name: String,
    phases: Vec<f64>,
}

/// Nearest vocabulary entry by similarity; ties go to the lowest index.
pub fn cleanup_oracle<'a>(v: &PhasorVector, vocab: &'a Vocabulary) -> Result<(&'a str, f64), FhrrError> {
    let mut best: Option<(&str, f64)> = None;
    for (name, entry) in vocab.iter() {
        let s = similarity(v, entry)?;
        if best.map_or(true, |(_, b)| s > b) {
            best = Some((name, s));
        }
    }
    best.ok_or(FhrrError::EmptyVocabulary)
}
