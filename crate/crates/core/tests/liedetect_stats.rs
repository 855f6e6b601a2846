use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};

use qcf::liedetect::{
    apply_lie, assign_lie_types, classify_lie, expected_detected, expected_m_prime, expected_sizes,
    run_algorithm, size_tolerance_check, Algorithm, AlgorithmRun, AssignMode, ExperimentConfig,
    LieFrequencies, LieType, MeasurementMode,
};
use qcf::protocol::effective_frequencies;
use qcf::quantum::QubitOutcome;
use qcf::rng::{derive_seed, RandomStream};

// ---- oracle: per-type landing probabilities of the entangled partition ----
//
// Rows are honest, A, B, C; columns are U, L, N. Derived by hand from the
// four beta outcomes of a protocol pair and Alice's alpha measurement.
const LANDING: [[f64; 3]; 4] = [
    [0.75, 0.0, 0.25],
    [0.25, 0.5, 0.25],
    [0.75, 0.25, 0.0],
    [0.25, 0.25, 0.5],
];

/// Mean `(|U|, |L|, |N|, |M|)` from the landing table.
fn oracle_sizes(f: &LieFrequencies, s: usize) -> [f64; 4] {
    let w = [f.fh(), f.fa(), f.fb(), f.fc()];
    let mut out = [0.0; 4];
    for (t, row) in LANDING.iter().enumerate() {
        for (k, p) in row.iter().enumerate() {
            out[k] += w[t] * p * s as f64;
        }
    }
    out[3] = out[1] + out[2];
    out
}

/// Product-state detection: a lie is caught when Bob used Alice's basis and
/// flipped `q`, which type A does in half the cases and types B, C in a quarter.
fn oracle_detected(f: &LieFrequencies, s: usize) -> f64 {
    (f.fa() / 2.0 + f.fb() / 4.0 + f.fc() / 4.0) * s as f64
}

fn sigma(expected: f64, s: usize) -> f64 {
    let p = expected / s as f64;
    (s as f64 * p * (1.0 - p)).sqrt()
}

fn freqs(a: f64, b: f64, c: f64) -> LieFrequencies {
    LieFrequencies::new(a, b, c).unwrap()
}

fn grid() -> [LieFrequencies; 3] {
    [
        freqs(0.2, 0.2, 0.1),
        freqs(0.1, 0.3, 0.05),
        freqs(0.3, 0.1, 0.2),
    ]
}

fn run(alg: Algorithm, s: usize, f: LieFrequencies, theta: f64, seed: u64) -> AlgorithmRun {
    run_algorithm(alg, &ExperimentConfig::new(s, f).with_theta(theta), seed).unwrap()
}

#[test]
fn lie_map_round_trips_on_all_sixteen_cases() {
    for actual in QubitOutcome::all() {
        for kind in LieType::ALL {
            assert_eq!(classify_lie(actual, apply_lie(actual, kind)), kind);
        }
    }
    let o = QubitOutcome::from_bits;
    assert_eq!(classify_lie(o(false, false), o(false, true)), LieType::A);
    assert_eq!(
        classify_lie(o(true, false), o(true, false)),
        LieType::Honest
    );
    assert_eq!(classify_lie(o(true, false), o(false, true)), LieType::C);
    assert_eq!(apply_lie(o(false, false), LieType::B), o(true, false));
    assert_eq!(apply_lie(o(true, true), LieType::C), o(false, false));
}

#[test]
fn exact_and_iid_assignment_counts() {
    let count = |types: &[LieType], k: LieType| types.iter().filter(|&&t| t == k).count();
    let f = freqs(0.2, 0.2, 0.1);
    let exact = assign_lie_types(100, &f, AssignMode::Exact, &mut RandomStream::new(1));
    assert_eq!(
        [LieType::A, LieType::B, LieType::C, LieType::Honest].map(|k| count(&exact, k)),
        [20, 20, 10, 50]
    );
    let honest = assign_lie_types(
        77,
        &LieFrequencies::honest(),
        AssignMode::Exact,
        &mut RandomStream::new(2),
    );
    assert!(honest.iter().all(|&t| t == LieType::Honest));
    let s = 100_000;
    let iid = assign_lie_types(s, &f, AssignMode::Iid, &mut RandomStream::new(3));
    for (k, p) in [(LieType::A, 0.2), (LieType::B, 0.2), (LieType::C, 0.1)] {
        let e = p * s as f64;
        assert!((count(&iid, k) as f64 - e).abs() <= 4.0 * sigma(e, s));
    }
}

#[test]
fn closed_forms_agree_with_the_landing_table() {
    let e = expected_sizes(&freqs(0.2, 0.2, 0.1), 1000);
    assert_eq!(
        [e.u, e.l, e.n, e.m].map(|x| (x * 1e9).round() / 1e9),
        [600.0, 175.0, 225.0, 400.0]
    );
    let h = expected_sizes(&LieFrequencies::honest(), 400);
    assert_eq!([h.u, h.l, h.n, h.m], [300.0, 0.0, 100.0, 100.0]);
    let mut rng = RandomStream::new(4);
    for _ in 0..100 {
        let (a, b, c) = (
            rng.uniform() / 3.0,
            rng.uniform() / 3.0,
            rng.uniform() / 3.0,
        );
        let f = freqs(a, b, c);
        let e = expected_sizes(&f, 1000);
        let o = oracle_sizes(&f, 1000);
        for (got, want) in [e.u, e.l, e.n, e.m].into_iter().zip(o) {
            assert!((got - want).abs() < 1e-9);
        }
        // |M| computed as |L| + |N| equals its direct closed form
        assert!(((e.l + e.n) - e.m).abs() < 1e-9);
        assert!((expected_detected(&f, 1000) - oracle_detected(&f, 1000)).abs() < 1e-9);
    }
}

#[test]
fn tolerance_check_examples() {
    assert!(size_tolerance_check(600.0, 600.0, 1000, 4.0).unwrap().pass);
    let fail = size_tolerance_check(700.0, 600.0, 1000, 4.0).unwrap();
    assert!(!fail.pass);
    assert!((fail.allowance - 4.0 * (240.0f64).sqrt()).abs() < 1e-9);
    assert!(size_tolerance_check(640.0, 600.0, 1000, 4.0).unwrap().pass);
    assert!(size_tolerance_check(1.0, 0.5, 1000, 0.0).is_err());
}

#[test]
fn product_and_entangled_detection_counts() {
    let s = 10_000;
    let mut cases = grid().to_vec();
    cases.push(freqs(0.4, 0.0, 0.0));
    for (i, f) in cases.iter().enumerate() {
        let one = oracle_detected(f, s);
        let d1 = run(Algorithm::I, s, *f, FRAC_PI_4, 10 + i as u64)
            .detected
            .len() as f64;
        let d2 = run(Algorithm::II, s, *f, FRAC_PI_4, 20 + i as u64)
            .detected
            .len() as f64;
        assert!(
            (d1 - one).abs() <= 4.0 * sigma(one, s),
            "{f:?}: {d1} vs {one}"
        );
        assert!(
            (d2 - 2.0 * one).abs() <= 4.0 * sigma(2.0 * one, s),
            "{f:?}: {d2} vs {}",
            2.0 * one
        );
        let combined = (4.0 * sigma(one, s).powi(2) + sigma(2.0 * one, s).powi(2)).sqrt();
        assert!((d2 - 2.0 * d1).abs() <= 4.0 * combined);
    }
    assert!((oracle_detected(&freqs(0.4, 0.0, 0.0), s) - 2000.0).abs() < 1e-9);
    assert!((oracle_detected(&freqs(0.2, 0.2, 0.1), s) - 1750.0).abs() < 1e-9);
}

#[test]
fn honest_bob_is_never_accused() {
    for alg in Algorithm::ALL {
        let r = run(alg, 5000, LieFrequencies::honest(), FRAC_PI_4, 30);
        assert!(r.flagged().is_empty(), "{alg:?}");
    }
    let m = run(
        Algorithm::III,
        10_000,
        LieFrequencies::honest(),
        FRAC_PI_4,
        31,
    )
    .partition
    .unwrap()
    .m()
    .len() as f64;
    assert!((m - 2500.0).abs() <= 4.0 * sigma(2500.0, 10_000));
    let mp = run(
        Algorithm::IV,
        10_000,
        LieFrequencies::honest(),
        FRAC_PI_4,
        32,
    )
    .partition
    .unwrap()
    .m()
    .len() as f64;
    assert!((mp - 2500.0).abs() <= 4.0 * sigma(2500.0, 10_000));
}

#[test]
fn partition_sizes_over_grid_and_angles() {
    let s = 10_000;
    let mut seed = 40;
    for f in grid() {
        let o = oracle_sizes(&f, s);
        let mp = (0.25 + (f.fa() + f.fb()) / 2.0) * s as f64;
        assert!((expected_m_prime(&f, s) - mp).abs() < 1e-9);
        for theta in [FRAC_PI_6, FRAC_PI_4, FRAC_PI_3] {
            seed += 1;
            let p = run(Algorithm::III, s, f, theta, seed).partition.unwrap();
            assert!(p.is_exact(s));
            let got = [p.u.len(), p.l.len(), p.n.len(), p.l.len() + p.n.len()];
            for (g, e) in got.into_iter().zip(o) {
                assert!(
                    (g as f64 - e).abs() <= 4.0 * sigma(e, s),
                    "{f:?} θ={theta}: {got:?} vs {o:?}"
                );
            }
            let q = run(Algorithm::IV, s, f, theta, seed + 1000)
                .partition
                .unwrap();
            assert!(q.is_exact(s));
            let m = q.m().len() as f64;
            assert!(
                (m - mp).abs() <= 4.0 * sigma(mp, s),
                "{f:?} θ={theta}: |M'| {m} vs {mp}"
            );
        }
    }
}

#[test]
fn forbidden_types_never_reach_the_undecided_set() {
    let mut rng = RandomStream::new(50);
    for t in 0..2000u64 {
        let (a, b, c) = (
            rng.uniform() / 3.0,
            rng.uniform() / 3.0,
            rng.uniform() / 3.0,
        );
        let theta = 0.05 + rng.uniform() * 1.45;
        let f = freqs(a, b, c);
        let mode = if t % 2 == 0 {
            MeasurementMode::MeasureFirst
        } else {
            MeasurementMode::Delayed
        };
        let cfg = ExperimentConfig::new(64, f)
            .with_theta(theta)
            .with_mode(mode);
        let three = run_algorithm(Algorithm::III, &cfg, derive_seed(51, t)).unwrap();
        assert_eq!(three.kind_in_n(LieType::B), 0);
        let four = run_algorithm(Algorithm::IV, &cfg, derive_seed(52, t)).unwrap();
        assert_eq!(four.kind_in_n(LieType::C), 0);
    }
}

#[test]
fn per_type_landing_rates() {
    let s = 20_000;
    let f = freqs(0.2, 0.2, 0.2);
    let r = run(Algorithm::III, s, f, FRAC_PI_4, 60);
    let p = r.partition.as_ref().unwrap();
    let totals = r.ledger.total_counts();
    let in_l = r.ledger.type_counts(&p.l);
    for kind in LieType::ALL {
        let n = totals[kind.index()];
        let rate = LANDING[kind.index()][1];
        let e = rate * n as f64;
        let sd = (n as f64 * rate * (1.0 - rate)).sqrt();
        assert!(
            (in_l[kind.index()] as f64 - e).abs() <= 4.0 * sd.max(1e-9),
            "{kind:?}: {} vs {e}",
            in_l[kind.index()]
        );
    }
    // type-B lies outside U all sit in L, a quarter of them
    let b_l = in_l[LieType::B.index()] as f64;
    let e = f.fb() * s as f64 / 4.0;
    assert!((b_l - e).abs() <= 4.0 * (e * 0.75).sqrt());
}

/// Two-sample comparison of mean set sizes over `reps` runs per mode.
fn mode_gap(f: LieFrequencies, g: LieFrequencies, reps: u64) {
    let s = 400;
    let mut stats = [[0.0f64; 3]; 2];
    let mut sq = [[0.0f64; 3]; 2];
    for (k, (mode, freq)) in [
        (MeasurementMode::MeasureFirst, g),
        (MeasurementMode::Delayed, f),
    ]
    .into_iter()
    .enumerate()
    {
        for t in 0..reps {
            let cfg = ExperimentConfig::new(s, freq).with_mode(mode);
            let p = run_algorithm(Algorithm::III, &cfg, derive_seed(70 + k as u64, t))
                .unwrap()
                .partition
                .unwrap();
            for (j, v) in [p.u.len(), p.l.len(), p.n.len()].into_iter().enumerate() {
                stats[k][j] += v as f64;
                sq[k][j] += (v * v) as f64;
            }
        }
    }
    let n = reps as f64;
    for j in 0..3 {
        let m = [stats[0][j] / n, stats[1][j] / n];
        let v = [sq[0][j] / n - m[0] * m[0], sq[1][j] / n - m[1] * m[1]];
        let se = ((v[0] + v[1]) / n).sqrt();
        assert!((m[0] - m[1]).abs() <= 4.0 * se, "set {j}: {m:?} ± {se}");
    }
}

#[test]
fn delayed_measurement_is_indistinguishable_from_measuring_first() {
    // balanced frequencies are a fixed point of the delayed rule
    let balanced = freqs(0.25, 0.25, 0.25);
    assert_eq!(effective_frequencies(&balanced, 1.0), balanced);
    mode_gap(balanced, balanced, 1500);
    // otherwise the delayed Bob matches a measuring Bob at the mixed rates
    let f = freqs(0.2, 0.2, 0.1);
    mode_gap(f, effective_frequencies(&f, 1.0), 1500);
}

#[test]
fn standalone_runs_are_reproducible() {
    let cfg = ExperimentConfig::new(500, freqs(0.2, 0.2, 0.1)).with_mode(MeasurementMode::Delayed);
    for alg in Algorithm::ALL {
        let a = run_algorithm(alg, &cfg, 80).unwrap();
        let b = run_algorithm(alg, &cfg, 80).unwrap();
        assert_eq!(
            (a.detected, a.partition, a.ledger),
            (b.detected, b.partition, b.ledger)
        );
    }
}
