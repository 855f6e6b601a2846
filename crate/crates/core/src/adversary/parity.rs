//! How well Bob can guess a parity from per-bit guesses.

use crate::quantum::{helstrom_measurement, reduced_rho_q, PairBank, PairKind, PairState, Role};
use crate::rng::RandomStream;

/// Probability that the xor of `m` independent guesses, each right with
/// probability `p`, equals the true parity: `1/2 + (2p − 1)^m / 2`.
pub fn parity_guess_accuracy(p: f64, m: usize) -> f64 {
    0.5 + 0.5 * (2.0 * p - 1.0).powi(m as i32)
}

/// Prepares `m` protocol pairs with random `q`, guesses each bit with the
/// optimal beta measurement and counts how often the guessed parity is right.
pub fn parity_guess_experiment(m: usize, trials: usize, seed: u64) -> usize {
    let basis = helstrom_measurement(&reduced_rho_q(false), &reduced_rho_q(true), Role::Beta);
    let root = RandomStream::new(seed);
    (0..trials)
        .filter(|&t| {
            let mut rng = root.child(2 * t as u64);
            let mut bank = PairBank::new(root.child(2 * t as u64 + 1));
            let mut truth = false;
            let mut guess = false;
            for i in 0..m {
                let q = rng.bit();
                truth ^= q;
                bank.push(
                    PairState::prepare(PairKind::Protocol { q }).expect("protocol pairs are valid"),
                );
                guess ^= bank.measure_beta_in(i, &basis).expect("fresh pair");
            }
            truth == guess
        })
        .count()
}
