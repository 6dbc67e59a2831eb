//! Computational neuron models.
//!
//! All integrators run in units of cycles: one global period `T` advances a
//! unit-slope integrator by exactly 1. Handlers are shared by both engine
//! modes. The fixed-step engine tests [`NeuronState::ready`] after every step
//! with a half-step tolerance, so a spike lands on the step nearest its exact
//! time; the event-driven engine asks [`NeuronState::time_to_fire`] for the
//! analytic crossing time.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::Port;
use crate::phase::{center_unit, to_cycles, wrap_unit};

/// Slack on every threshold comparison, in cycles.
pub const EPS: f64 = 1e-9;

/// Two phase-averaging inputs this close to antipodal (in radians) have no
/// well-defined midpoint.
pub const ANTIPODAL_TOL_RAD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalyKind {
    /// More than one output spike within a single global cycle.
    ExtraSpike,
    /// More inputs than the model consumes within one computation window.
    ExtraInput,
    /// A new computation started before the previous one emitted its spike.
    Overrun,
    /// Phase-averaging inputs half a cycle apart.
    AntipodalInputs,
}

/// How a resonate-and-fire neuron times its spike.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RfTiming {
    /// Spike at the oscillator's peak, so the spike phase is the phase of
    /// the accumulated input.
    PhasePeak,
    /// Spike shortly after the cycle boundary, with a latency of
    /// `window · threshold / amplitude` cycles: stronger neurons fire first.
    CycleOnset { window: f64 },
}

/// Resonate-and-fire parameters. Amplitudes are in units of input weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfParams {
    /// Amplitude decay rate in 1/s.
    pub decay_per_s: f64,
    pub threshold: f64,
    /// Amplitude is clamped to `saturation · threshold` after each input.
    pub saturation: f64,
    /// Refractory period in cycles after a phase-peak spike. Phase-peak
    /// neurons also spike at most once per global cycle.
    pub refractory: f64,
    pub timing: RfTiming,
    /// At the instant of an input, a peak up to this many cycles behind
    /// the clock still fires (immediately).
    #[serde(default)]
    pub catch_up: f64,
    /// Once a `feedback` input has arrived, ignore further unlabeled inputs.
    #[serde(default)]
    pub gate_on_feedback: bool,
}

impl RfParams {
    /// Decay rate that halves the amplitude every `cycles` periods.
    pub fn half_life_decay(period_s: f64, cycles: f64) -> f64 {
        std::f64::consts::LN_2 / (cycles * period_s)
    }
}

/// Static description of one neuron.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NeuronModel {
    /// Spikes once per cycle at a fixed phase (radians).
    PhasorSource { phase: f64 },
    /// Re-emits every input spike immediately.
    Relay,
    PhaseSum,
    PhaseSub,
    PhaseMult { alpha: f64 },
    PhaseAvg,
    Resonator(RfParams),
}

impl NeuronModel {
    pub fn label(&self) -> &'static str {
        match self {
            Self::PhasorSource { .. } => "phasor_source",
            Self::Relay => "relay",
            Self::PhaseSum => "phase_sum",
            Self::PhaseSub => "phase_sub",
            Self::PhaseMult { .. } => "phase_mult",
            Self::PhaseAvg => "phase_avg",
            Self::Resonator(_) => "resonator",
        }
    }
}

/// Global-clock view handed to every handler.
#[derive(Debug, Clone, Copy)]
pub struct Ctx {
    /// Simulation time in cycles.
    pub time: f64,
    pub cycle: u64,
    /// Phase of the global cycle in `[0, 1)`.
    pub phase: f64,
    /// Threshold slack in cycles: half a step in fixed-step mode, [`EPS`]
    /// in event-driven mode.
    pub tol: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Input {
    /// Global index of the synapse the spike travelled along.
    pub synapse: usize,
    pub weight: f64,
    pub port: Port,
}

#[derive(Debug, Clone)]
pub enum NeuronState {
    Source(Source),
    Relay(Relay),
    Sum(PhaseSum),
    Sub(PhaseSub),
    Mult(PhaseMult),
    Avg(PhaseAvg),
    Rf(Resonator),
}

impl NeuronState {
    pub fn new(model: &NeuronModel, period_s: f64) -> Self {
        match *model {
            NeuronModel::PhasorSource { phase } => Self::Source(Source::new(phase)),
            NeuronModel::Relay => Self::Relay(Relay::default()),
            NeuronModel::PhaseSum => Self::Sum(PhaseSum::default()),
            NeuronModel::PhaseSub => Self::Sub(PhaseSub::default()),
            NeuronModel::PhaseMult { alpha } => Self::Mult(PhaseMult::new(alpha)),
            NeuronModel::PhaseAvg => Self::Avg(PhaseAvg::default()),
            NeuronModel::Resonator(params) => Self::Rf(Resonator::new(params, period_s)),
        }
    }

    /// Advance every integrator by `dt` cycles along its current slope.
    pub fn integrate(&mut self, dt: f64) {
        if dt <= 0.0 {
            return;
        }
        match self {
            Self::Source(_) | Self::Relay(_) => {}
            Self::Sum(s) => s.integrate(dt),
            Self::Sub(s) => s.integrate(dt),
            Self::Mult(s) => s.integrate(dt),
            Self::Avg(s) => s.integrate(dt),
            Self::Rf(s) => s.integrate(dt),
        }
    }

    pub fn on_cycle_start(&mut self, ctx: &Ctx) {
        match self {
            Self::Sum(s) => s.on_cycle_start(),
            Self::Sub(s) => s.on_cycle_start(),
            Self::Rf(s) => s.on_cycle_start(ctx),
            _ => {}
        }
    }

    pub fn on_input(&mut self, ctx: &Ctx, input: &Input, anomalies: &mut Vec<AnomalyKind>) {
        match self {
            Self::Source(_) => {}
            Self::Relay(s) => s.pending = true,
            Self::Sum(s) => s.on_input(anomalies),
            Self::Sub(s) => s.on_input(ctx, input.port),
            Self::Mult(s) => s.on_input(ctx, anomalies),
            Self::Avg(s) => s.on_input(ctx, input.synapse, anomalies),
            Self::Rf(s) => s.on_input(ctx, input),
        }
    }

    /// Whether the spike condition holds now.
    pub fn ready(&self, ctx: &Ctx) -> bool {
        match self {
            Self::Source(s) => s.ready(ctx),
            Self::Relay(s) => s.pending,
            Self::Sum(s) => s.ready(ctx),
            Self::Sub(s) => s.ready(ctx),
            Self::Mult(s) => s.ready(ctx),
            Self::Avg(s) => s.ready(ctx),
            Self::Rf(s) => s.ready(ctx),
        }
    }

    /// Apply the post-spike update.
    pub fn fire(&mut self, ctx: &Ctx) {
        match self {
            Self::Source(s) => s.fired_cycle = Some(ctx.cycle),
            Self::Relay(s) => s.pending = false,
            Self::Sum(s) => s.fire(),
            Self::Sub(s) => s.fire(ctx),
            Self::Mult(s) => s.target = None,
            Self::Avg(s) => s.fired = true,
            Self::Rf(s) => s.fire(ctx),
        }
    }

    /// Cycles until the spike condition next holds, assuming no further
    /// inputs and no cycle boundary resets in between.
    pub fn time_to_fire(&self, ctx: &Ctx) -> Option<f64> {
        match self {
            Self::Source(s) => Some(s.time_to_fire(ctx)),
            Self::Relay(s) => s.pending.then_some(0.0),
            Self::Sum(s) => s.time_to_fire(),
            Self::Sub(s) => s.time_to_fire(ctx),
            Self::Mult(s) => s.time_to_fire(),
            Self::Avg(s) => s.time_to_fire(),
            Self::Rf(s) => s.time_to_fire(ctx),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Self::Source(_) | Self::Relay(_) => true,
            Self::Sum(s) => s.p.is_finite() && s.q.is_finite(),
            Self::Sub(s) => s.q.is_finite() && s.p.map_or(true, f64::is_finite),
            Self::Mult(s) => s.p_hat.is_finite(),
            Self::Avg(s) => s.slots.iter().flatten().all(|(_, e)| e.is_finite()),
            Self::Rf(s) => s.acc.re.is_finite() && s.acc.im.is_finite(),
        }
    }
}

/// Fires each cycle at a fixed phase.
#[derive(Debug, Clone)]
pub struct Source {
    phase: f64,
    fired_cycle: Option<u64>,
}

impl Source {
    fn new(phase_rad: f64) -> Self {
        Self {
            phase: wrap_unit(to_cycles(phase_rad)),
            fired_cycle: None,
        }
    }

    /// Phases within tolerance of the next boundary fire at the boundary.
    fn effective_phase(&self, tol: f64) -> f64 {
        if self.phase > 1.0 - tol {
            0.0
        } else {
            self.phase
        }
    }

    fn ready(&self, ctx: &Ctx) -> bool {
        self.fired_cycle != Some(ctx.cycle) && ctx.phase + ctx.tol >= self.effective_phase(ctx.tol)
    }

    fn time_to_fire(&self, ctx: &Ctx) -> f64 {
        let target = self.effective_phase(ctx.tol);
        if self.fired_cycle == Some(ctx.cycle) || ctx.phase > target + ctx.tol {
            1.0 - ctx.phase + target
        } else {
            (target - ctx.phase).max(0.0)
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Relay {
    pending: bool,
}

/// Phase addition with two timers.
///
/// `p` counts up from each cycle start. The first arrival copies it into
/// `q`; the second arrival starts `q` counting down, and the neuron spikes
/// when `q` reaches zero. Simultaneous arrivals are handled as first then
/// second, which gives an immediate spike when `q` is already zero.
#[derive(Debug, Clone, Default)]
pub struct PhaseSum {
    p: f64,
    q: f64,
    q_slope: f64,
    arrivals: u8,
}

impl PhaseSum {
    fn integrate(&mut self, dt: f64) {
        self.p += dt;
        self.q += self.q_slope * dt;
    }

    fn on_cycle_start(&mut self) {
        self.p = 0.0;
        self.arrivals = 0;
    }

    fn counting(&self) -> bool {
        self.q_slope < 0.0
    }

    fn on_input(&mut self, anomalies: &mut Vec<AnomalyKind>) {
        self.arrivals = self.arrivals.saturating_add(1);
        match self.arrivals {
            1 => {
                if self.counting() {
                    anomalies.push(AnomalyKind::Overrun);
                }
                self.q = self.p;
                self.q_slope = 0.0;
            }
            2 => self.q_slope = -1.0,
            _ => anomalies.push(AnomalyKind::ExtraInput),
        }
    }

    fn ready(&self, ctx: &Ctx) -> bool {
        self.counting() && self.q <= ctx.tol
    }

    fn fire(&mut self) {
        self.q = 0.0;
        self.q_slope = 0.0;
    }

    fn time_to_fire(&self) -> Option<f64> {
        self.counting().then(|| self.q.max(0.0))
    }
}

/// Phase subtraction `φ_a − φ_b`.
///
/// `p` times the interval from the last `b` spike; an `a` spike latches it
/// into the threshold `θ`. `q` restarts at every cycle boundary and the
/// neuron spikes when `q` reaches `θ`, once per cycle.
#[derive(Debug, Clone, Default)]
pub struct PhaseSub {
    p: Option<f64>,
    q: f64,
    theta: Option<f64>,
    armed: bool,
    fired_cycle: Option<u64>,
}

impl PhaseSub {
    fn integrate(&mut self, dt: f64) {
        if let Some(p) = self.p.as_mut() {
            *p += dt;
        }
        self.q += dt;
    }

    fn on_cycle_start(&mut self) {
        self.q = 0.0;
        self.armed = self.theta.is_some();
    }

    fn on_input(&mut self, ctx: &Ctx, port: Port) {
        match port {
            Port::B => self.p = Some(0.0),
            Port::A => {
                // without a b spike in history there is nothing to subtract
                let Some(p) = self.p else { return };
                let mut theta = wrap_unit(p);
                if theta > 1.0 - ctx.tol {
                    theta = 0.0;
                }
                self.theta = Some(theta);
                self.armed = self.fired_cycle != Some(ctx.cycle) && theta + ctx.tol >= self.q;
            }
            Port::Unlabeled | Port::Feedback => {}
        }
    }

    fn ready(&self, ctx: &Ctx) -> bool {
        match self.theta {
            Some(theta) => self.armed && self.fired_cycle != Some(ctx.cycle) && self.q + ctx.tol >= theta,
            None => false,
        }
    }

    fn fire(&mut self, ctx: &Ctx) {
        self.armed = false;
        self.fired_cycle = Some(ctx.cycle);
    }

    fn time_to_fire(&self, ctx: &Ctx) -> Option<f64> {
        if !self.armed || self.fired_cycle == Some(ctx.cycle) {
            return None;
        }
        self.theta.map(|theta| (theta - self.q).max(0.0))
    }
}

/// Phase multiplication by `alpha` on the centered input phase.
///
/// The centered cycle integrator `x̂` is read from the global clock (it runs
/// over `(−½, ½]` and is zero at every cycle boundary). On arrival the
/// threshold becomes `α·x̂`; `p̂` starts from `x̂` and the neuron spikes when
/// it reaches the first value congruent to the threshold, at most one cycle
/// later.
#[derive(Debug, Clone)]
pub struct PhaseMult {
    alpha: f64,
    p_hat: f64,
    target: Option<f64>,
}

impl PhaseMult {
    fn new(alpha: f64) -> Self {
        Self {
            alpha,
            p_hat: 0.0,
            target: None,
        }
    }

    fn integrate(&mut self, dt: f64) {
        self.p_hat += dt;
    }

    fn on_input(&mut self, ctx: &Ctx, anomalies: &mut Vec<AnomalyKind>) {
        if self.target.is_some() {
            anomalies.push(AnomalyKind::Overrun);
        }
        let x_hat = center_unit(ctx.phase);
        let theta = self.alpha * x_hat;
        let mut wait = wrap_unit(theta - x_hat);
        if wait > 1.0 - ctx.tol {
            wait = 0.0;
        }
        self.p_hat = x_hat;
        self.target = Some(x_hat + wait);
    }

    fn ready(&self, ctx: &Ctx) -> bool {
        self.target.is_some_and(|t| self.p_hat + ctx.tol >= t)
    }

    fn time_to_fire(&self) -> Option<f64> {
        self.target.map(|t| (t - self.p_hat).max(0.0))
    }
}

/// Circular midpoint of two inputs.
///
/// Each input restarts its own timer (`p` or `q`) on arrival. The spike
/// condition is `p + q ≥ 1` with the more recent timer at most ¼ cycle,
/// which selects the midpoint on the short arc between the inputs.
#[derive(Debug, Clone, Default)]
pub struct PhaseAvg {
    /// (synapse id, cycles since its last spike)
    slots: [Option<(usize, f64)>; 2],
    valid: bool,
    fired: bool,
}

impl PhaseAvg {
    fn integrate(&mut self, dt: f64) {
        for (_, elapsed) in self.slots.iter_mut().flatten() {
            *elapsed += dt;
        }
    }

    fn on_input(&mut self, ctx: &Ctx, synapse: usize, anomalies: &mut Vec<AnomalyKind>) {
        let idx = match self.slots.iter().position(|s| s.is_some_and(|(id, _)| id == synapse)) {
            Some(i) => i,
            None => match self.slots.iter().position(Option::is_none) {
                Some(i) => i,
                None => {
                    anomalies.push(AnomalyKind::ExtraInput);
                    return;
                }
            },
        };
        self.slots[idx] = Some((synapse, 0.0));
        self.fired = false;
        self.valid = false;
        let Some((other_id, other)) = self.slots[1 - idx] else { return };
        if other > 1.0 + ctx.tol {
            // the other input went silent for a cycle
            return;
        }
        let sep = wrap_unit(other);
        let short_arc = sep.min(1.0 - sep);
        // a stepped clock cannot resolve the antipode; its exact-half ties
        // fall through to the ¼-cycle midpoint
        let resolvable = ctx.tol < to_cycles(ANTIPODAL_TOL_RAD);
        if resolvable && (short_arc - 0.5).abs() < to_cycles(ANTIPODAL_TOL_RAD) {
            anomalies.push(AnomalyKind::AntipodalInputs);
            return;
        }
        // p + q reaches 1 after (1 − other) / 2 more cycles, when the newer
        // timer equals that same wait
        let wait = ((1.0 - other) / 2.0).max(0.0);
        self.valid = if (wait - 0.25).abs() <= EPS {
            // both midpoints qualify; keep one per cycle
            synapse > other_id
        } else {
            wait < 0.25
        };
    }

    fn sum(&self) -> Option<f64> {
        match self.slots {
            [Some((_, p)), Some((_, q))] => Some(p + q),
            _ => None,
        }
    }

    fn ready(&self, ctx: &Ctx) -> bool {
        // the sum grows at two cycles per cycle, so half a step is `2·tol`
        self.valid && !self.fired && self.sum().is_some_and(|s| s + 2.0 * ctx.tol >= 1.0)
    }

    fn time_to_fire(&self) -> Option<f64> {
        if !self.valid || self.fired {
            return None;
        }
        self.sum().map(|s| ((1.0 - s) / 2.0).max(0.0))
    }
}

/// Damped oscillator at the base frequency, kept in a frame rotating with
/// the global clock.
///
/// `acc` is the complex amplitude `Σ wₖ e^{iφₖ}` of all inputs, each decayed
/// since arrival; the physical oscillator is `acc · e^{−i2πt/T}`, whose
/// real part peaks when the clock phase equals `arg(acc)`.
#[derive(Debug, Clone)]
pub struct Resonator {
    params: RfParams,
    /// decay exponent per cycle, `γ·T`
    decay: f64,
    acc: Complex64,
    refractory_until: f64,
    fired_cycle: Option<u64>,
    onset_wait: Option<f64>,
    gated: bool,
    last_input: f64,
}

impl Resonator {
    fn new(params: RfParams, period_s: f64) -> Self {
        Self {
            params,
            decay: params.decay_per_s * period_s,
            acc: Complex64::new(0.0, 0.0),
            refractory_until: f64::NEG_INFINITY,
            fired_cycle: None,
            onset_wait: None,
            gated: false,
            last_input: f64::NEG_INFINITY,
        }
    }

    pub fn amplitude(&self) -> f64 {
        self.acc.norm()
    }

    /// Physical oscillator state at global phase `phase`.
    pub fn oscillator(&self, phase: f64) -> Complex64 {
        self.acc * Complex64::from_polar(1.0, -TAU * phase)
    }

    fn integrate(&mut self, dt: f64) {
        self.acc *= (-self.decay * dt).exp();
        if let Some(w) = self.onset_wait.as_mut() {
            *w -= dt;
        }
    }

    fn on_cycle_start(&mut self, _ctx: &Ctx) {
        if let RfTiming::CycleOnset { window } = self.params.timing {
            let amp = self.amplitude();
            self.onset_wait = (amp >= self.params.threshold && amp > 0.0)
                .then(|| window * self.params.threshold / amp);
        }
    }

    fn on_input(&mut self, ctx: &Ctx, input: &Input) {
        if input.weight < 0.0 {
            let amp = self.amplitude();
            if amp > 0.0 {
                let reduced = (amp + input.weight).max(0.0);
                self.acc *= reduced / amp;
            }
            return;
        }
        if self.params.gate_on_feedback {
            match input.port {
                Port::Feedback if !self.gated => {
                    // first feedback kick replaces the feedforward content
                    self.gated = true;
                    self.acc = Complex64::new(0.0, 0.0);
                }
                Port::Feedback => {}
                _ if self.gated => return,
                _ => {}
            }
        }
        self.last_input = ctx.time;
        self.acc += Complex64::from_polar(input.weight, TAU * ctx.phase);
        let cap = self.params.saturation * self.params.threshold;
        let amp = self.amplitude();
        if amp > cap {
            self.acc *= cap / amp;
        }
    }

    fn peak_phase(&self) -> f64 {
        wrap_unit(to_cycles(self.acc.arg()))
    }

    fn above_threshold(&self, amplitude: f64) -> bool {
        amplitude > 0.0 && amplitude >= self.params.threshold * (1.0 - 1e-12)
    }

    /// Phase-peak condition: the clock is at the peak, or just past it at
    /// the instant of an input.
    fn at_peak(&self, ctx: &Ctx) -> bool {
        let behind = center_unit(ctx.phase - self.peak_phase());
        let window = if self.last_input == ctx.time {
            self.params.catch_up.max(ctx.tol)
        } else {
            ctx.tol
        };
        -ctx.tol <= behind && behind <= window
    }

    fn ready(&self, ctx: &Ctx) -> bool {
        if !self.above_threshold(self.amplitude()) {
            return false;
        }
        match self.params.timing {
            RfTiming::PhasePeak => {
                self.fired_cycle != Some(ctx.cycle) && ctx.time + EPS >= self.refractory_until && self.at_peak(ctx)
            }
            RfTiming::CycleOnset { .. } => {
                self.fired_cycle != Some(ctx.cycle) && self.onset_wait.is_some_and(|w| w <= ctx.tol)
            }
        }
    }

    fn fire(&mut self, ctx: &Ctx) {
        match self.params.timing {
            RfTiming::PhasePeak => {
                self.fired_cycle = Some(ctx.cycle);
                self.refractory_until = ctx.time + self.params.refractory;
            }
            RfTiming::CycleOnset { .. } => {
                self.fired_cycle = Some(ctx.cycle);
                self.onset_wait = None;
            }
        }
    }

    fn time_to_fire(&self, ctx: &Ctx) -> Option<f64> {
        let amp = self.amplitude();
        if !self.above_threshold(amp) {
            return None;
        }
        let wait = match self.params.timing {
            RfTiming::PhasePeak if self.ready(ctx) => 0.0,
            RfTiming::PhasePeak => {
                let mut start = ctx.time.max(self.refractory_until);
                if self.fired_cycle == Some(ctx.cycle) {
                    start = start.max(ctx.cycle as f64 + 1.0);
                }
                let mut delta = wrap_unit(self.peak_phase() - wrap_unit(start));
                if delta > 1.0 - EPS {
                    delta = 0.0;
                }
                start + delta - ctx.time
            }
            RfTiming::CycleOnset { .. } => {
                if self.fired_cycle == Some(ctx.cycle) {
                    return None;
                }
                self.onset_wait?.max(0.0)
            }
        };
        self.above_threshold(amp * (-self.decay * wait).exp()).then_some(wait)
    }
}
