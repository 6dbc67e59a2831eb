mod common;

use std::f64::consts::{PI, TAU};

use common::*;
use proptest::prelude::*;
use spikevsa::compiler::{compile, CompileOptions, NetworkDescription, VsaExpr};
use spikevsa::engine::{run, Connection, Mode, NetworkBuilder, Port, SimConfig};
use spikevsa::fhrr::{self, PhasorVector, Vocabulary};
use spikevsa::neurons::NeuronModel;
use spikevsa::readout;

fn dims() -> impl Strategy<Value = usize> {
    prop_oneof![Just(4usize), Just(100), Just(200)]
}

fn phase() -> impl Strategy<Value = f64> {
    0.0..TAU
}

fn max_dev(a: &PhasorVector, b: &PhasorVector) -> f64 {
    a.phases().iter().zip(b.phases()).map(|(&x, &y)| circ(x, y)).fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn unbind_inverts_bind(n in dims(), s1: u64, s2: u64) {
        let u = PhasorVector::random(n, s1).unwrap();
        let v = PhasorVector::random(n, s2).unwrap();
        let back = fhrr::unbind(&fhrr::bind(&u, &v).unwrap(), &v).unwrap();
        prop_assert!(max_dev(&back, &u) < 1e-12);
    }

    #[test]
    fn powers_add_exponents(n in dims(), s: u64, a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let v = PhasorVector::random(n, s).unwrap();
        let lhs = fhrr::bind(&fhrr::fractional_power(&v, a), &fhrr::fractional_power(&v, b)).unwrap();
        let rhs = fhrr::fractional_power(&v, a + b);
        prop_assert!(max_dev(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn permute_round_trips_exactly(n in dims(), s: u64, shift in -300i64..300) {
        let v = PhasorVector::random(n, s).unwrap();
        prop_assert_eq!(fhrr::permute(&fhrr::permute(&v, shift), -shift), v);
    }

    #[test]
    fn similarity_is_symmetric_and_shift_invariant(n in dims(), s1: u64, s2: u64, s3: u64) {
        let u = PhasorVector::random(n, s1).unwrap();
        let v = PhasorVector::random(n, s2).unwrap();
        let t = PhasorVector::random(n, s3).unwrap();
        let base = fhrr::similarity(&u, &v).unwrap();
        prop_assert!((base - fhrr::similarity(&v, &u).unwrap()).abs() < 1e-12);
        let shifted = fhrr::similarity(&fhrr::bind(&u, &t).unwrap(), &fhrr::bind(&v, &t).unwrap()).unwrap();
        prop_assert!((base - shifted).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&base));
    }

    #[test]
    fn two_way_bundle_matches_scalar_oracle(n in dims(), s1: u64, s2: u64) {
        let u = PhasorVector::random(n, s1).unwrap();
        let v = PhasorVector::random(n, s2).unwrap();
        let w = fhrr::bundle(&[u.clone(), v.clone()]).unwrap();
        for k in 0..n {
            prop_assert!(circ(w.phase(k), oracle::avg(u.phase(k), v.phase(k))) < 1e-12);
        }
    }

    #[test]
    fn vocabulary_json_round_trips(n in 1usize..20, s: u64) {
        let vocab = Vocabulary::random(&["a", "b", "c"], n, s).unwrap();
        prop_assert_eq!(Vocabulary::from_json(&vocab.to_json().unwrap()).unwrap(), vocab);
    }
}

fn two_inputs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(phase(), 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn modes_agree_on_sum_sub_avg(x in two_inputs(), which in 0usize..3) {
        let op = [Op::Sum, Op::Sub, Op::Avg][which];
        prop_assume!(!op.ill_conditioned(&x, 2.0 * STEP_RAD));
        let fixed = single_op_phase(op, &x, Mode::FixedStep, 4).unwrap();
        let event = single_op_phase(op, &x, Mode::EventDriven, 4).unwrap();
        prop_assert!(circ(fixed, event) < STEP_RAD, "{op:?} {x:?}: {fixed} vs {event}");
    }

    #[test]
    fn modes_agree_on_mult(a in phase(), alpha in -1.0..1.0f64) {
        let op = Op::Mult(alpha);
        prop_assume!(!op.ill_conditioned(&[a], 2.0 * STEP_RAD));
        let fixed = single_op_phase(op, &[a], Mode::FixedStep, 4).unwrap();
        let event = single_op_phase(op, &[a], Mode::EventDriven, 4).unwrap();
        prop_assert!(circ(fixed, event) < STEP_RAD);
    }

    #[test]
    fn event_mode_matches_oracle(x in two_inputs(), which in 0usize..5, alpha in -2.5..2.5f64) {
        let op = [Op::Sum, Op::Sub, Op::Avg, Op::Mult(alpha), Op::Relay][which];
        let x = &x[..op.arity()];
        let got = single_op_phase(op, x, Mode::EventDriven, 4).unwrap();
        prop_assert!(circ(got, op.oracle(x)) < 1e-6);
    }

    #[test]
    fn phase_avg_stays_within_quarter_cycle(x in two_inputs()) {
        prop_assume!(antipodal_gap(x[0], x[1]) > 1e-6);
        let out = single_op_phase(Op::Avg, &x, Mode::EventDriven, 3).unwrap();
        prop_assert!(circ(out, x[0]) <= PI / 2.0 + 1e-9);
        prop_assert!(circ(out, x[1]) <= PI / 2.0 + 1e-9);
    }

    #[test]
    fn outputs_are_steady_from_cycle_three(x in two_inputs(), which in 0usize..5, alpha in -2.5..2.5f64, event: bool) {
        let op = [Op::Sum, Op::Sub, Op::Avg, Op::Mult(alpha), Op::Relay][which];
        let mode = if event { Mode::EventDriven } else { Mode::FixedStep };
        let (rec, out) = run_single_op(op, &x[..op.arity()], mode, 6);
        let phases: Vec<f64> = (3..6).map(|c| rec.decode_phase(out, c).expect("spikes every cycle").phase).collect();
        prop_assert!(circ(phases[0], phases[1]) <= STEP_RAD && circ(phases[1], phases[2]) <= STEP_RAD, "{phases:?}");
        prop_assert!(rec.anomalies.is_empty());
    }

    #[test]
    fn relay_delays_compose(a in phase(), delays in prop::collection::vec(0.0..PERIOD_S, 1..=5), event: bool) {
        let mode = if event { Mode::EventDriven } else { Mode::FixedStep };
        let mut delays = delays;
        if !event {
            // the fixed-step reference resolves delays to whole steps
            for d in &mut delays {
                *d = (*d / (PERIOD_S / 1000.0)).round().min(999.0) * (PERIOD_S / 1000.0);
            }
        }
        let mut b = NetworkBuilder::new(PERIOD_S);
        let src = b.add_population("src", vec![NeuronModel::PhasorSource { phase: a }]).start;
        let relays = b.add_population("chain", vec![NeuronModel::Relay; delays.len()]);
        let mut prev = src;
        for (r, &d) in relays.clone().zip(&delays) {
            b.connect(Connection::new(prev, r, 1.0, d, Port::Unlabeled));
            prev = r;
        }
        let net = b.build().unwrap();
        let rec = run(&net, &SimConfig::new(FREQ_HZ, 8, mode).unwrap()).unwrap();
        let shift: f64 = delays.iter().sum::<f64>() * TAU / PERIOD_S;
        let input = rec.decode_phase(src, 6).unwrap().phase;
        let output = rec.decode_phase(prev, 6).unwrap().phase;
        let tol = if event { 1e-7 } else { STEP_RAD };
        prop_assert!(circ(output, oracle::wrap(input + shift)) < tol);
    }

    #[test]
    fn spike_phase_is_clock_phase(x in two_inputs(), which in 0usize..4, event: bool) {
        let op = [Op::Sum, Op::Sub, Op::Avg, Op::Mult(1.5)][which];
        let mode = if event { Mode::EventDriven } else { Mode::FixedStep };
        let (rec, _) = run_single_op(op, &x[..op.arity()], mode, 4);
        for s in rec.spikes.iter().flatten() {
            let cycles = s.time_s / PERIOD_S;
            prop_assert_eq!(s.cycle, cycles.floor() as u64);
            prop_assert!(circ(s.phase, TAU * cycles.fract()) < 1e-9);
        }
    }
}

#[test]
fn pipelines_accumulate_at_most_one_step_per_stage() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let m = rng.gen_range(1..=5);
        let phases: Vec<f64> = (0..=m).map(|_| rng.gen_range(0.0..TAU)).collect();
        let subs: Vec<bool> = (0..m).map(|_| rng.gen()).collect();
        let mut b = NetworkBuilder::new(PERIOD_S);
        let src = b.add_population("src", phases.iter().map(|&phase| NeuronModel::PhasorSource { phase }).collect());
        let mut prev = src.start;
        let mut expected = phases[0];
        for i in 0..m {
            let model = if subs[i] { NeuronModel::PhaseSub } else { NeuronModel::PhaseSum };
            let n = b.add_population(format!("s{i}"), vec![model]).start;
            let (pa, pb) = if subs[i] { (Port::A, Port::B) } else { (Port::Unlabeled, Port::Unlabeled) };
            b.connect(Connection::new(prev, n, 1.0, 0.0, pa));
            b.connect(Connection::new(src.start + i + 1, n, 1.0, 0.0, pb));
            expected = if subs[i] { oracle::sub(expected, phases[i + 1]) } else { oracle::sum(expected, phases[i + 1]) };
            prev = n;
        }
        let cycles = 2 * m as u64 + 4;
        let rec = run(&b.build().unwrap(), &SimConfig::new(FREQ_HZ, cycles, Mode::FixedStep).unwrap()).unwrap();
        let got = rec.decode_phase(prev, cycles - 1).unwrap().phase;
        assert!(circ(got, expected) <= m as f64 * STEP_RAD, "m={m}: {got} vs {expected}");
    }
}

#[test]
fn identical_runs_are_bit_identical() {
    let vocab = Vocabulary::random(&["A", "B", "C"], 32, 5).unwrap();
    let expr = VsaExpr::parse("cleanup((A * B) / C + A^0.5)").unwrap();
    let desc = compile(&expr, &vocab, &vocab, &CompileOptions::new(PERIOD_S)).unwrap();
    for mode in [Mode::FixedStep, Mode::EventDriven] {
        let cfg = SimConfig::new(FREQ_HZ, 6, mode).unwrap();
        let csv = |_: ()| {
            let mut buf = Vec::new();
            run(&desc.to_network().unwrap(), &cfg).unwrap().write_csv(&mut buf).unwrap();
            buf
        };
        assert_eq!(csv(()), csv(()));
    }
}

fn expr_strategy() -> impl Strategy<Value = VsaExpr> {
    let leaf = prop_oneof![Just("A"), Just("B"), Just("C")].prop_map(VsaExpr::symbol);
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(l, r)| VsaExpr::bind(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| VsaExpr::unbind(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| VsaExpr::bundle(l, r)),
            (inner.clone(), -3i64..3).prop_map(|(e, k)| VsaExpr::permute(e, k)),
            (inner.clone(), -20i32..20).prop_map(|(e, a)| VsaExpr::power(e, a as f64 / 8.0)),
            inner.prop_map(VsaExpr::cleanup),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printed_expressions_parse_back(e in expr_strategy()) {
        prop_assert_eq!(VsaExpr::parse(&e.to_string()).unwrap(), e);
    }

    #[test]
    fn descriptions_round_trip_through_json(e in expr_strategy()) {
        let vocab = Vocabulary::random(&["A", "B", "C"], 6, 1).unwrap();
        let desc = compile(&e, &vocab, &vocab, &CompileOptions::new(PERIOD_S)).unwrap();
        let back = NetworkDescription::from_json(&desc.to_json()).unwrap();
        prop_assert_eq!(back.content_hash(), desc.content_hash());
        prop_assert_eq!(&back, &desc);
    }

    #[test]
    fn every_sub_neuron_has_one_a_and_one_b(e in expr_strategy()) {
        let vocab = Vocabulary::random(&["A", "B", "C"], 6, 2).unwrap();
        let desc = compile(&e, &vocab, &vocab, &CompileOptions::new(PERIOD_S)).unwrap();
        let net = desc.to_network().unwrap();
        let mut ports = vec![(0, 0); net.neuron_count()];
        for src in 0..net.neuron_count() {
            for syn in net.outgoing(src) {
                match syn.port {
                    Port::A => ports[syn.target].0 += 1,
                    Port::B => ports[syn.target].1 += 1,
                    _ => {}
                }
            }
        }
        for (i, m) in net.models().iter().enumerate() {
            if matches!(m, NeuronModel::PhaseSub) {
                prop_assert_eq!(ports[i], (1, 1));
            }
        }
    }

    #[test]
    fn permutation_costs_no_neurons(s: u64, k in -50i64..50, event: bool) {
        let vocab = Vocabulary::random(&["A"], 16, s).unwrap();
        let desc = compile(&VsaExpr::permute(VsaExpr::symbol("A"), k), &vocab, &vocab, &CompileOptions::new(PERIOD_S)).unwrap();
        prop_assert_eq!(desc.neuron_count(), 16);
        let mode = if event { Mode::EventDriven } else { Mode::FixedStep };
        let rec = run(&desc.to_network().unwrap(), &SimConfig::new(FREQ_HZ, 3, mode).unwrap()).unwrap();
        let got = readout::tap_to_vector(&rec, desc.readout("out").unwrap(), 2).unwrap().vector;
        let direct = readout::record_to_vector(&rec, "A", 2).unwrap().vector;
        prop_assert_eq!(got, fhrr::permute(&direct, k));
    }

    #[test]
    fn sweep_peaks_within_one_grid_step(s: u64, x0 in -2.5..2.5f64) {
        let axis = PhasorVector::random(200, s).unwrap();
        let q = fhrr::fractional_power(&axis, x0);
        let sweep = readout::ssp_sweep("q", &q, &axis, -3.0, 3.0, 601).unwrap();
        prop_assert!((sweep.peak().0 - x0).abs() <= 0.01 + 1e-9);
    }
}

#[test]
fn sweep_sidelobes_stay_low() {
    let mut quiet = 0;
    for s in 0..100u64 {
        let axis = PhasorVector::random(200, s).unwrap();
        let x0 = -2.5 + 5.0 * (s as f64 + 0.5) / 100.0;
        let q = fhrr::fractional_power(&axis, x0);
        let sweep = readout::ssp_sweep("q", &q, &axis, -3.0, 3.0, 601).unwrap();
        let side = sweep
            .xs
            .iter()
            .zip(&sweep.similarities)
            .filter(|(x, _)| (*x - x0).abs() > 1.0)
            .map(|(_, &y)| y)
            .fold(f64::NEG_INFINITY, f64::max);
        if side < 0.3 {
            quiet += 1;
        }
    }
    assert!(quiet >= 95, "{quiet}/100");
}
