use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, SQRT_2};

use num_complex::Complex64;
use proptest::prelude::*;
use qcf::quantum::{
    encode_outcome, helstrom_measurement, helstrom_success, reduced_rho_q, BasisBit, PairKind,
    PairState, QuantumError, QubitBasis, QubitOutcome, Role,
};
use qcf::rng::RandomStream;

// ---- hand-written oracles over real amplitudes ----

/// Beta vector for `|p, q⟩`.
fn beta_vec(p: bool, q: bool) -> [f64; 2] {
    match (p, q) {
        (false, false) => [1.0, 0.0],
        (false, true) => [0.0, 1.0],
        (true, false) => [FRAC_1_SQRT_2, FRAC_1_SQRT_2],
        (true, true) => [FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
    }
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// `P[q′ = k]` when beta of `cos θ |x⟩|0,q⟩ + sin θ |y⟩|1,q̃⟩` is measured in
/// basis `p`. The alpha branches are orthogonal, so branch weights add.
fn oracle_beta_probability(q: bool, second_q: bool, theta: f64, p: bool, k: bool) -> f64 {
    let v = beta_vec(p, k);
    theta.cos().powi(2) * dot(v, beta_vec(false, q)).powi(2)
        + theta.sin().powi(2) * dot(v, beta_vec(true, second_q)).powi(2)
}

#[test]
fn helstrom_success_for_protocol_pairs() {
    let oracle = 0.5 + SQRT_2 / 4.0;
    let p = helstrom_success(&reduced_rho_q(false), &reduced_rho_q(true)).unwrap();
    assert!((p - oracle).abs() < 1e-12);
    assert!((p - (std::f64::consts::PI / 8.0).cos().powi(2)).abs() < 1e-12);
}

#[test]
fn helstrom_measurement_attains_the_bound() {
    let oracle = 0.5 + SQRT_2 / 4.0;
    let basis = helstrom_measurement(&reduced_rho_q(false), &reduced_rho_q(true), Role::Beta);
    let p0 = PairState::prepare(PairKind::Protocol { q: false })
        .unwrap()
        .beta_probabilities(&basis)
        .unwrap();
    let p1 = PairState::prepare(PairKind::Protocol { q: true })
        .unwrap()
        .beta_probabilities(&basis)
        .unwrap();
    assert!((0.5 * (p0[0] + p1[1]) - oracle).abs() < 1e-12);
}

#[test]
fn beta_marginals_match_the_oracle_for_every_angle() {
    for theta in [FRAC_PI_6, FRAC_PI_4, FRAC_PI_3] {
        for q in [false, true] {
            for (kind, second) in [
                (PairKind::AlgIII { q, theta }, q),
                (PairKind::AlgIV { q, theta }, !q),
            ] {
                let pair = PairState::prepare(kind).unwrap();
                for p in [false, true] {
                    let probs = pair
                        .beta_probabilities(&QubitBasis::conjugate(BasisBit::from_bit(p)))
                        .unwrap();
                    for k in [false, true] {
                        let oracle = oracle_beta_probability(q, second, theta, p, k);
                        assert!(
                            (probs[usize::from(k)] - oracle).abs() < 1e-12,
                            "{kind:?} p={p} k={k}"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn born_rule_sampling_matches_the_oracle() {
    let mut rng = RandomStream::new(7);
    let trials = 20_000;
    for (q, p) in [(false, false), (false, true), (true, false), (true, true)] {
        let oracle = oracle_beta_probability(q, q, FRAC_PI_4, p, false);
        let mut zeros = 0;
        for _ in 0..trials {
            let mut pair = PairState::prepare(PairKind::Protocol { q }).unwrap();
            let out = pair.measure_beta(BasisBit::from_bit(p), &mut rng).unwrap();
            zeros += usize::from(!out.q);
        }
        let rate = zeros as f64 / trials as f64;
        let sigma = (oracle * (1.0 - oracle) / trials as f64).sqrt();
        assert!(
            (rate - oracle).abs() <= 4.0 * sigma,
            "q={q} p={p}: {rate} vs {oracle}"
        );
    }
}

#[test]
fn beta_outcome_collapses_alpha_onto_the_matching_branch() {
    // finding |0,q⟩ on beta leaves alpha in x with weight cos², y with sin²/2
    let mut rng = RandomStream::new(8);
    for _ in 0..200 {
        let mut pair = PairState::prepare(PairKind::Protocol { q: false }).unwrap();
        let out = pair
            .measure_beta(BasisBit::Computational, &mut rng)
            .unwrap();
        let alpha = pair.alpha_residual().expect("alpha collapsed").amplitudes();
        let (x, y) = (alpha[0].norm_sqr(), alpha[1].norm_sqr());
        if out.q {
            // only the y branch has support on |0,1⟩
            assert!(x < 1e-12 && (y - 1.0).abs() < 1e-12);
        } else {
            assert!((x - 2.0 / 3.0).abs() < 1e-12 && (y - 1.0 / 3.0).abs() < 1e-12);
        }
    }
}

#[test]
fn repeated_measurement_in_the_same_basis_is_stable() {
    let mut rng = RandomStream::new(9);
    for i in 0..200 {
        let mut pair = PairState::prepare(PairKind::Protocol { q: i % 2 == 0 }).unwrap();
        let basis = QubitBasis::conjugate(BasisBit::from_bit(i % 3 == 0));
        let first = pair.measure_beta_in(&basis, &mut rng).unwrap();
        assert_eq!(pair.remeasure_beta(&basis, &mut rng).unwrap(), first);
        assert!(matches!(
            pair.measure_beta_in(&basis, &mut rng),
            Err(QuantumError::AlreadyMeasured(Role::Beta))
        ));
    }
}

#[test]
fn encoding_matches_the_fixed_table() {
    for (p, q) in [(false, false), (false, true), (true, false), (true, true)] {
        let a = encode_outcome(QubitOutcome::from_bits(p, q)).amplitudes();
        let v = beta_vec(p, q);
        assert!((a[0].re - v[0]).abs() < 1e-15 && (a[1].re - v[1]).abs() < 1e-15);
        assert!(a[0].im == 0.0 && a[1].im == 0.0);
    }
}

#[test]
fn invalid_angles_and_null_states_are_rejected() {
    for theta in [0.0, -0.1, std::f64::consts::FRAC_PI_2, 2.0] {
        assert!(matches!(
            PairState::prepare(PairKind::AlgIII { q: false, theta }),
            Err(QuantumError::ThetaOutOfRange(_))
        ));
    }
    let zero = [Complex64::new(0.0, 0.0); 4];
    assert!(matches!(
        PairState::from_amplitudes(zero),
        Err(QuantumError::NotNormalizable(_))
    ));
}

fn amplitudes() -> impl Strategy<Value = [Complex64; 4]> {
    prop::array::uniform4((-1.0f64..1.0, -1.0f64..1.0))
        .prop_map(|a| a.map(|(re, im)| Complex64::new(re, im)))
        .prop_filter("not null", |a| {
            a.iter().map(|c| c.norm_sqr()).sum::<f64>() > 1e-3
        })
}

fn basis() -> impl Strategy<Value = QubitBasis> {
    (0.0f64..std::f64::consts::PI, 0.0f64..std::f64::consts::TAU).prop_map(|(t, phi)| {
        let v = qcf::quantum::SingleQubitState::new(
            [
                Complex64::new(t.cos(), 0.0),
                Complex64::from_polar(t.sin(), phi),
            ],
            Role::Beta,
        )
        .unwrap();
        QubitBasis::from_state(v)
    })
}

proptest! {
    #[test]
    fn general_states_are_normalized(amps in amplitudes()) {
        let pair = PairState::from_amplitudes(amps).unwrap();
        prop_assert!((pair.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn joint_distribution_sums_to_one(amps in amplitudes(), a in basis(), b in basis()) {
        let pair = PairState::from_amplitudes(amps).unwrap();
        let j = pair.joint_probabilities(&a, &b).unwrap();
        let total: f64 = j.iter().flatten().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_basis_choice_never_signals_to_beta(amps in amplitudes(), a1 in basis(), a2 in basis(), b in basis()) {
        let pair = PairState::from_amplitudes(amps).unwrap();
        let (j1, j2) = (pair.joint_probabilities(&a1, &b).unwrap(), pair.joint_probabilities(&a2, &b).unwrap());
        let direct = pair.beta_probabilities(&b).unwrap();
        for k in 0..2 {
            prop_assert!((j1[0][k] + j1[1][k] - direct[k]).abs() < 1e-12);
            prop_assert!((j2[0][k] + j2[1][k] - direct[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn measurement_outcomes_leave_normalized_residuals(amps in amplitudes(), b in basis(), seed in any::<u64>()) {
        let mut pair = PairState::from_amplitudes(amps).unwrap();
        let mut rng = RandomStream::new(seed);
        pair.measure_beta_in(&b, &mut rng).unwrap();
        let alpha = pair.alpha_residual().unwrap();
        prop_assert!((alpha.norm_sqr() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn helstrom_success_is_a_probability(q in any::<bool>(), t in 0.0f64..1.0) {
        let a = reduced_rho_q(q);
        let b = reduced_rho_q(false).mix(&reduced_rho_q(true));
        let p = helstrom_success(&a, &if t < 0.5 { a } else { b }).unwrap();
        prop_assert!((0.5..=1.0).contains(&p));
    }
}
