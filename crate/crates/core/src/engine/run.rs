use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use super::{Anomaly, EngineError, Mode, Network, NeuronId, SimConfig, SpikeEvent, SpikeRecord, Synapse};
use crate::neurons::{AnomalyKind, Ctx, Input, NeuronState};
use crate::phase::{to_radians, wrap};

/// Event times this close to a cycle boundary (in cycles) are moved onto it.
const BOUNDARY_SNAP: f64 = 1e-9;

/// Simulate `network` for `config.duration_cycles` global cycles.
pub fn run(network: &Network, config: &SimConfig) -> Result<SpikeRecord, EngineError> {
    config.validate()?;
    let period = config.period();
    if (network.period_s() - period).abs() > 1e-12 * period {
        return Err(EngineError::PeriodMismatch {
            network: network.period_s(),
            config: period,
        });
    }
    let mut core = Core::new(network, config);
    match config.mode {
        Mode::FixedStep => run_fixed(&mut core, config)?,
        Mode::EventDriven => run_event(&mut core, config)?,
    }
    Ok(core.finish(network, config))
}

/// State shared by both modes.
struct Core<'a> {
    net: &'a Network,
    period: f64,
    states: Vec<NeuronState>,
    spikes: Vec<Vec<SpikeEvent>>,
    anomalies: Vec<Anomaly>,
    scratch: Vec<AnomalyKind>,
}

impl<'a> Core<'a> {
    fn new(net: &'a Network, config: &SimConfig) -> Self {
        let period = config.period();
        Self {
            net,
            period,
            states: net.models().iter().map(|m| NeuronState::new(m, period)).collect(),
            spikes: vec![Vec::new(); net.neuron_count()],
            anomalies: Vec::new(),
            scratch: Vec::new(),
        }
    }

    fn record_spike(&mut self, neuron: NeuronId, ctx: &Ctx) {
        if self.spikes[neuron].last().is_some_and(|s| s.cycle == ctx.cycle) {
            self.anomalies.push(Anomaly {
                neuron,
                time_s: ctx.time * self.period,
                cycle: ctx.cycle,
                kind: AnomalyKind::ExtraSpike,
            });
        }
        self.spikes[neuron].push(SpikeEvent {
            neuron,
            time_s: ctx.time * self.period,
            cycle: ctx.cycle,
            phase: wrap(to_radians(ctx.phase)),
        });
    }

    fn input(&mut self, target: NeuronId, ctx: &Ctx, syn: &Synapse) -> Result<(), EngineError> {
        let input = Input {
            synapse: syn.id,
            weight: syn.weight,
            port: syn.port,
        };
        self.states[target].on_input(ctx, &input, &mut self.scratch);
        for kind in self.scratch.drain(..) {
            self.anomalies.push(Anomaly {
                neuron: target,
                time_s: ctx.time * self.period,
                cycle: ctx.cycle,
                kind,
            });
        }
        self.check_finite(target, ctx)
    }

    fn check_finite(&self, neuron: NeuronId, ctx: &Ctx) -> Result<(), EngineError> {
        if self.states[neuron].is_finite() {
            Ok(())
        } else {
            Err(EngineError::NonFinite {
                neuron,
                time_s: ctx.time * self.period,
            })
        }
    }

    fn finish(self, net: &Network, config: &SimConfig) -> SpikeRecord {
        SpikeRecord {
            period_s: self.period,
            duration_cycles: config.duration_cycles,
            populations: net.populations().to_vec(),
            spikes: self.spikes,
            anomalies: self.anomalies,
        }
    }
}

/// Reference semantics. Each step: integrate, cycle-start handlers on
/// boundaries, threshold tests, then deliveries due this step. A neuron is
/// tested again right after each input it receives, so zero-delay chains
/// resolve within the step.
fn run_fixed(core: &mut Core, config: &SimConfig) -> Result<(), EngineError> {
    let spc = config.steps_per_cycle();
    let dt = 1.0 / spc as f64;
    let tol = config.tolerance();
    let total = config.duration_cycles * spc;
    let ring_len = spc + 1;
    let mut ring: Vec<Vec<(NeuronId, Synapse)>> = vec![Vec::new(); ring_len as usize];
    let n = core.states.len();

    let fire = |core: &mut Core, ring: &mut Vec<Vec<(NeuronId, Synapse)>>, neuron: NeuronId, ctx: &Ctx, k: u64| {
        core.states[neuron].fire(ctx);
        core.record_spike(neuron, ctx);
        for syn in core.net.outgoing(neuron) {
            let due = k + (syn.delay * spc as f64).round() as u64;
            if due < total {
                ring[(due % ring_len) as usize].push((neuron, *syn));
            }
        }
    };

    for k in 0..total {
        let cycle = k / spc;
        let j = k % spc;
        let phase = j as f64 / spc as f64;
        let ctx = Ctx {
            time: cycle as f64 + phase,
            cycle,
            phase,
            tol,
        };
        if k > 0 {
            for s in core.states.iter_mut() {
                s.integrate(dt);
            }
        }
        if j == 0 {
            for neuron in 0..n {
                core.states[neuron].on_cycle_start(&ctx);
                core.check_finite(neuron, &ctx)?;
            }
        }
        for neuron in 0..n {
            if core.states[neuron].ready(&ctx) {
                fire(core, &mut ring, neuron, &ctx, k);
            }
        }
        let slot = (k % ring_len) as usize;
        loop {
            let mut batch = std::mem::take(&mut ring[slot]);
            if batch.is_empty() {
                break;
            }
            batch.sort_by_key(|(src, syn)| (*src, syn.target, syn.id));
            for (_, syn) in &batch {
                core.input(syn.target, &ctx, syn)?;
                if core.states[syn.target].ready(&ctx) {
                    fire(core, &mut ring, syn.target, &ctx, k);
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Fire { version: u64 },
    Deliver { syn: Synapse },
}

/// Heap entry. At equal times spikes precede deliveries; within a class
/// entries are ordered by (source, target, synapse).
#[derive(Debug, Clone, Copy)]
struct Event {
    t: f64,
    class: u8,
    source: NeuronId,
    target: NeuronId,
    tie: u64,
    kind: Kind,
}

impl Event {
    fn key(&self) -> (u8, NeuronId, NeuronId, u64) {
        (self.class, self.source, self.target, self.tie)
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.t.total_cmp(&other.t).then_with(|| self.key().cmp(&other.key()))
    }
}

fn snap(t: f64) -> f64 {
    let r = t.round();
    if (t - r).abs() < BOUNDARY_SNAP {
        r
    } else {
        t
    }
}

fn ctx_at(t: f64, tol: f64) -> Ctx {
    let cycle = t.floor();
    Ctx {
        time: t,
        cycle: cycle as u64,
        phase: t - cycle,
        tol,
    }
}

struct EventEngine<'c, 'a> {
    core: &'c mut Core<'a>,
    heap: BinaryHeap<Reverse<Event>>,
    last: Vec<f64>,
    version: Vec<u64>,
    end: f64,
    tol: f64,
}

impl EventEngine<'_, '_> {
    fn advance(&mut self, neuron: NeuronId, t: f64) {
        self.core.states[neuron].integrate(t - self.last[neuron]);
        self.last[neuron] = t;
    }

    fn predict(&mut self, neuron: NeuronId, ctx: &Ctx) {
        self.version[neuron] += 1;
        if let Some(wait) = self.core.states[neuron].time_to_fire(ctx) {
            let t = snap(ctx.time + wait);
            if t < self.end {
                self.heap.push(Reverse(Event {
                    t,
                    class: 0,
                    source: neuron,
                    target: 0,
                    tie: self.version[neuron],
                    kind: Kind::Fire {
                        version: self.version[neuron],
                    },
                }));
            }
        }
    }

    fn fire(&mut self, neuron: NeuronId, ctx: &Ctx) {
        self.core.states[neuron].fire(ctx);
        self.core.record_spike(neuron, ctx);
        for syn in self.core.net.outgoing(neuron) {
            let t = snap(ctx.time + syn.delay);
            if t < self.end {
                self.heap.push(Reverse(Event {
                    t,
                    class: 1,
                    source: neuron,
                    target: syn.target,
                    tie: syn.id as u64,
                    kind: Kind::Deliver { syn: *syn },
                }));
            }
        }
        self.predict(neuron, ctx);
    }

    fn settle(&mut self, neuron: NeuronId, ctx: &Ctx) {
        if self.core.states[neuron].ready(ctx) {
            self.fire(neuron, ctx);
        } else {
            self.predict(neuron, ctx);
        }
    }
}

/// Exact semantics: analytic crossing times, version-invalidated spike
/// predictions, cycle boundaries processed before anything else at the same
/// instant.
fn run_event(core: &mut Core, config: &SimConfig) -> Result<(), EngineError> {
    let n = core.states.len();
    let mut eng = EventEngine {
        core,
        heap: BinaryHeap::new(),
        last: vec![0.0; n],
        version: vec![0; n],
        end: config.duration_cycles as f64,
        tol: config.tolerance(),
    };
    let mut next_cycle = 0u64;
    loop {
        let next_t = eng.heap.peek().map(|Reverse(e)| e.t);
        if next_cycle < config.duration_cycles && next_t.map_or(true, |t| next_cycle as f64 <= t) {
            let ctx = ctx_at(next_cycle as f64, eng.tol);
            for neuron in 0..n {
                eng.advance(neuron, ctx.time);
                eng.core.states[neuron].on_cycle_start(&ctx);
                eng.core.check_finite(neuron, &ctx)?;
                eng.settle(neuron, &ctx);
            }
            next_cycle += 1;
            continue;
        }
        let Some(Reverse(ev)) = eng.heap.pop() else { break };
        let ctx = ctx_at(ev.t, eng.tol);
        match ev.kind {
            Kind::Fire { version } => {
                if eng.version[ev.source] != version {
                    continue;
                }
                eng.advance(ev.source, ev.t);
                eng.core.check_finite(ev.source, &ctx)?;
                eng.fire(ev.source, &ctx);
            }
            Kind::Deliver { syn } => {
                eng.advance(syn.target, ev.t);
                eng.core.input(syn.target, &ctx, &syn)?;
                eng.settle(syn.target, &ctx);
            }
        }
    }
    Ok(())
}
