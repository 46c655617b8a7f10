//! Property tests across the engine, compiler and fitter.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use iontrap::analysis::{fit_decay, fit_gaussian, fit_linear, Dataset, DecayForm};
use iontrap::compiler::{compile, validate, Bus, CircuitIR, Detection, Instruction, MachineConfig, Predicate, QubitKind, Targets};
use iontrap::engine::RegisterState;

#[derive(Debug, Clone)]
enum Gate {
    R(usize, f64, f64),
    Rz(usize, f64),
    Ms(f64),
}

fn gate(n: usize) -> impl Strategy<Value = Gate> {
    prop_oneof![
        (0..n, -PI..PI, -PI..PI).prop_map(|(q, t, p)| Gate::R(q, t, p)),
        (0..n, -PI..PI).prop_map(|(q, t)| Gate::Rz(q, t)),
        (-PI..PI).prop_map(Gate::Ms),
    ]
}

fn register_and_gates(max_n: usize) -> impl Strategy<Value = (usize, Vec<Gate>)> {
    (2..=max_n).prop_flat_map(|n| (Just(n), prop::collection::vec(gate(n), 1..12)))
}

fn apply(st: &mut RegisterState, g: &Gate) {
    let all: Vec<usize> = (0..st.n_qubits).collect();
    match *g {
        Gate::R(q, t, p) => st.apply_rotation(&[q], t, p, None).unwrap(),
        Gate::Rz(q, t) => st.apply_rz(&[q], t).unwrap(),
        Gate::Ms(chi) => st.apply_ms_ideal(&all, chi).unwrap(),
    }
}

/// Random product state from per-qubit angles.
fn product_state(angles: &[(f64, f64)]) -> RegisterState {
    let mut st = RegisterState::new(angles.len());
    for (q, &(t, p)) in angles.iter().enumerate() {
        st.apply_rotation(&[q], t, p, None).unwrap();
    }
    st
}

fn instruction(n: usize) -> impl Strategy<Value = Instruction> {
    let targets = prop_oneof![
        Just(Targets::All),
        prop::collection::btree_set(0..n, 1..=n).prop_map(|s| Targets::List(s.into_iter().collect())),
    ];
    let pair = prop::collection::btree_set(0..n, 2..=n).prop_map(|s| Targets::List(s.into_iter().collect()));
    prop_oneof![
        (-PI..PI, -PI..PI, targets.clone()).prop_map(|(theta, phi, targets)| Instruction::R { theta, phi, targets }),
        (-PI..PI, targets).prop_map(|(theta, targets)| Instruction::Rz { theta, targets }),
        (0.05..PI / 2.0, prop_oneof![Just(Targets::All), pair], prop_oneof![Just(Bus::Axial), Just(Bus::Radial)])
            .prop_map(|(chi, targets, bus)| Instruction::Ms { chi, targets, bus }),
        (0.0..500.0, prop_oneof![Just(QubitKind::Optical), Just(QubitKind::Ground)]).prop_map(|(duration_us, kind)| Instruction::Wait { duration_us, kind }),
    ]
}

fn circuit() -> impl Strategy<Value = (usize, CircuitIR)> {
    (2usize..=5).prop_flat_map(|n| {
        let body = || prop::collection::vec(instruction(n), 0..6);
        let branch = (0..n, any::<bool>(), (-PI..PI)).prop_map(move |(q, bright, theta)| {
            vec![
                Instruction::MeasureAll { label: "mid".into() },
                Instruction::Branch {
                    label: "mid".into(),
                    predicate: Predicate::qubit(q, Detection::from_bright(bright)),
                    body: vec![Instruction::R { theta, phi: 0.0, targets: Targets::List(vec![q]) }, Instruction::Rz { theta, targets: Targets::All }],
                },
            ]
        });
        (Just(n), body(), prop::option::of(branch), body()).prop_map(|(n, a, b, c)| {
            let mut instructions = vec![Instruction::PrepareAll];
            instructions.extend(a);
            instructions.extend(b.unwrap_or_default());
            instructions.extend(c);
            instructions.push(Instruction::MeasureAll { label: "end".into() });
            (n, CircuitIR { instructions })
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gates_preserve_the_norm((n, gates) in register_and_gates(12)) {
        let mut st = RegisterState::new(n);
        for g in &gates {
            apply(&mut st, g);
        }
        prop_assert!((st.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn ms_commutes_with_global_x_rotation(
        angles in prop::collection::vec((0.0..PI, -PI..PI), 2..=6),
        chi in -PI..PI,
        theta in -PI..PI,
    ) {
        let n = angles.len();
        let all: Vec<usize> = (0..n).collect();
        let mut a = product_state(&angles);
        a.apply_ms_ideal(&all, chi).unwrap();
        a.apply_rotation(&all, theta, 0.0, None).unwrap();
        let mut b = product_state(&angles);
        b.apply_rotation(&all, theta, 0.0, None).unwrap();
        b.apply_ms_ideal(&all, chi).unwrap();
        let diff = a.amplitudes.iter().zip(&b.amplitudes).map(|(x, y)| (x - y).norm()).fold(0.0f64, f64::max);
        prop_assert!(diff < 1e-10, "difference {}", diff);
    }

    #[test]
    fn compiled_circuits_satisfy_the_constraints((n, c) in circuit()) {
        let machine = MachineConfig::new(n);
        let s = compile(&c, &machine).unwrap();
        let violations = validate(&s, &machine);
        prop_assert!(violations.is_empty(), "{:?}", violations);
        // Same input, byte-identical schedule.
        prop_assert_eq!(s.to_json(), compile(&c, &machine).unwrap().to_json());
    }

    #[test]
    fn circuit_text_round_trips((_n, c) in circuit()) {
        let text = c.to_string();
        prop_assert_eq!(CircuitIR::parse(&text).unwrap(), c);
    }

    #[test]
    fn fits_follow_an_affine_rescaling_of_x(
        amp in 0.3..1.0f64,
        tau in 0.5..5.0f64,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..12).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = x.iter().map(|&t| {
            let z: f64 = StandardNormal.sample(&mut rng);
            amp * (-t / tau).exp() + 0.01 * z
        }).collect();
        let e = vec![0.01; x.len()];
        let a = fit_decay(&Dataset::new(x.clone(), y.clone(), e.clone()).unwrap(), DecayForm::Exponential).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| v * 1000.0).collect();
        let b = fit_decay(&Dataset::new(scaled, y, e).unwrap(), DecayForm::Exponential).unwrap();
        let rel = |p: f64, q: f64| ((p - q) / q).abs();
        prop_assert!(rel(b.value("decay"), 1000.0 * a.value("decay")) < 1e-6);
        prop_assert!(rel(b.error("decay"), 1000.0 * a.error("decay")) < 1e-5);
        prop_assert!(rel(b.value("amplitude"), a.value("amplitude")) < 1e-6);
    }

    #[test]
    fn linear_fit_commutes_with_shifts(slope in -5.0..5.0f64, icpt in -5.0..5.0f64, shift in -100.0..100.0f64) {
        let x: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| slope * v + icpt + 0.01 * ((i * 7 % 5) as f64 - 2.0)).collect();
        let e = vec![0.02; 8];
        let a = fit_linear(&Dataset::new(x.clone(), y.clone(), e.clone()).unwrap()).unwrap();
        let b = fit_linear(&Dataset::new(x.iter().map(|v| v + shift).collect(), y, e).unwrap()).unwrap();
        prop_assert!((a.value("slope") - b.value("slope")).abs() < 1e-9);
        prop_assert!((a.error("slope") - b.error("slope")).abs() < 1e-9);
    }
}

/// One-sigma intervals from the covariance cover the truth about 68% of the time.
#[test]
fn one_sigma_coverage() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let trials = 500;
    let (mut hit_decay, mut hit_waist) = (0, 0);
    for _ in 0..trials {
        let x: Vec<f64> = (0..15).map(|i| i as f64 * 0.4).collect();
        let mut noisy = |f: &dyn Fn(f64) -> f64, sigma: f64| -> Vec<f64> {
            x.iter()
                .map(|&v| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    f(v) + sigma * z
                })
                .collect()
        };
        let y = noisy(&|t| 0.9 * (-t / 2.0).exp(), 0.02);
        let fit = fit_decay(&Dataset::new(x.clone(), y, vec![0.02; x.len()]).unwrap(), DecayForm::Exponential).unwrap();
        hit_decay += usize::from((fit.value("decay") - 2.0).abs() <= fit.error("decay"));

        let xs: Vec<f64> = x.iter().map(|v| v - 3.0).collect();
        let mut rng2 = ChaCha8Rng::seed_from_u64(rng_u64(&mut rng));
        let yg: Vec<f64> = xs
            .iter()
            .map(|&v| {
                let z: f64 = StandardNormal.sample(&mut rng2);
                (-2.0 * v * v / (1.1f64 * 1.1)).exp() + 0.02 * z
            })
            .collect();
        let g = fit_gaussian(&Dataset::new(xs, yg, vec![0.02; x.len()]).unwrap()).unwrap();
        hit_waist += usize::from((g.value("waist") - 1.1).abs() <= g.error("waist"));
    }
    for (name, hits) in [("decay", hit_decay), ("waist", hit_waist)] {
        let frac = hits as f64 / trials as f64;
        assert!((0.60..=0.76).contains(&frac), "{name} coverage {frac}");
    }
}

fn rng_u64(rng: &mut ChaCha8Rng) -> u64 {
    use rand::Rng;
    rng.random()
}

#[test]
fn norm_check_catches_a_broken_state() {
    // Guards the norm property against a vacuous norm().
    let st = RegisterState::from_amplitudes(1, vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]);
    assert!((st.norm() - 1.0).abs() > 0.1);
}
