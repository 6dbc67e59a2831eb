#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use spikevsa::engine::{run, Connection, Mode, NetworkBuilder, NeuronId, Port, SimConfig, SpikeRecord};
use spikevsa::neurons::NeuronModel;

pub const FREQ_HZ: f64 = 10.0;
pub const PERIOD_S: f64 = 0.1;
/// One engine step at dt = T/1000, in radians.
pub const STEP_RAD: f64 = TAU / 1000.0;

/// Independent single-component oracle.
pub mod oracle {
    use super::*;

    pub fn wrap(a: f64) -> f64 {
        let r = a.rem_euclid(TAU);
        if r >= TAU {
            0.0
        } else {
            r
        }
    }

    pub fn center(a: f64) -> f64 {
        let w = wrap(a);
        if w > PI {
            w - TAU
        } else {
            w
        }
    }

    pub fn sum(a: f64, b: f64) -> f64 {
        wrap(a + b)
    }

    pub fn sub(a: f64, b: f64) -> f64 {
        wrap(a - b)
    }

    pub fn mult(a: f64, alpha: f64) -> f64 {
        wrap(center(a) * alpha)
    }

    pub fn avg(a: f64, b: f64) -> f64 {
        wrap((a.sin() + b.sin()).atan2(a.cos() + b.cos()))
    }
}

/// Shortest distance between two angles.
pub fn circ(a: f64, b: f64) -> f64 {
    oracle::center(a - b).abs()
}

/// Distance of the pair's separation from π.
pub fn antipodal_gap(a: f64, b: f64) -> f64 {
    (circ(a, b) - PI).abs()
}

/// A single-operation model under test.
#[derive(Debug, Clone, Copy)]
pub enum Op {
    Sum,
    Sub,
    Mult(f64),
    Avg,
    Relay,
}

impl Op {
    pub fn model(self) -> NeuronModel {
        match self {
            Op::Sum => NeuronModel::PhaseSum,
            Op::Sub => NeuronModel::PhaseSub,
            Op::Mult(alpha) => NeuronModel::PhaseMult { alpha },
            Op::Avg => NeuronModel::PhaseAvg,
            Op::Relay => NeuronModel::Relay,
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Op::Sum | Op::Sub | Op::Avg => 2,
            Op::Mult(_) | Op::Relay => 1,
        }
    }

    pub fn oracle(self, x: &[f64]) -> f64 {
        match self {
            Op::Sum => oracle::sum(x[0], x[1]),
            Op::Sub => oracle::sub(x[0], x[1]),
            Op::Mult(alpha) => oracle::mult(x[0], alpha),
            Op::Avg => oracle::avg(x[0], x[1]),
            Op::Relay => oracle::wrap(x[0]),
        }
    }

    /// Inputs whose output jumps under a perturbation of `margin` radians.
    pub fn ill_conditioned(self, x: &[f64], margin: f64) -> bool {
        match self {
            Op::Avg => antipodal_gap(x[0], x[1]) < margin,
            Op::Mult(_) => PI - oracle::center(x[0]).abs() < margin,
            _ => false,
        }
    }
}

/// Sources at `inputs` feeding one `op` neuron; returns the record and the
/// op neuron's id.
pub fn run_single_op(op: Op, inputs: &[f64], mode: Mode, cycles: u64) -> (SpikeRecord, NeuronId) {
    let mut b = NetworkBuilder::new(PERIOD_S);
    let src = b.add_population("in", inputs.iter().map(|&phase| NeuronModel::PhasorSource { phase }).collect());
    let out = b.add_population("out", vec![op.model()]).start;
    for (i, s) in src.enumerate() {
        let port = match (op, i) {
            (Op::Sub, 0) => Port::A,
            (Op::Sub, _) => Port::B,
            _ => Port::Unlabeled,
        };
        b.connect(Connection::new(s, out, 1.0, 0.0, port));
    }
    let net = b.build().expect("valid single-op network");
    let cfg = SimConfig::new(FREQ_HZ, cycles, mode).expect("valid config");
    (run(&net, &cfg).expect("run succeeds"), out)
}

/// Output phase of a single-op network on `cycle`.
pub fn single_op_phase(op: Op, inputs: &[f64], mode: Mode, cycle: u64) -> Option<f64> {
    let (rec, out) = run_single_op(op, inputs, mode, cycle + 1);
    rec.decode_phase(out, cycle).map(|d| d.phase)
}

/// Deterministic quantile of a sample.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v[((v.len() - 1) as f64 * q).round() as usize]
}
