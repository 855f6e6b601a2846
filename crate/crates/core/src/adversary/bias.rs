//! Monte Carlo estimates of the bias a strategy pair achieves.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::registry::{AliceFactory, BobFactory};
use crate::protocol::{run_protocol, Outcome, ProtocolConfig, ProtocolError, RunResult};
use crate::rng::derive_seed;

/// What one trial contributes to a [`BiasReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub outcome: Outcome,
    pub coins_agree: bool,
    pub alice_cheated: bool,
    pub bob_cheated: bool,
    pub unknown_in_n: Option<usize>,
    pub parity_guess_correct: Option<bool>,
}

impl From<&RunResult> for TrialSummary {
    fn from(r: &RunResult) -> Self {
        Self {
            outcome: r.outcome,
            coins_agree: r.coins_agree(),
            alice_cheated: r.alice_cheated,
            bob_cheated: r.bob_cheated,
            unknown_in_n: r.audit.bob.unknown_in_n,
            parity_guess_correct: r.audit.bob.parity_guess_correct,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub trials: usize,
    pub completed: usize,
    pub c0: usize,
    pub c1: usize,
    /// Frequencies over all trials; `p0 + p1 + p_abort = 1`.
    pub p0: f64,
    pub p1: f64,
    pub p_abort: f64,
    /// `max(p0, p1)/(p0 + p1) − 1/2`, i.e. conditioned on completed runs.
    pub epsilon_hat: f64,
    pub epsilon_hat_convention: String,
    /// Four standard errors of `epsilon_hat`.
    pub ci_halfwidth: f64,
    pub desired: Option<bool>,
    /// `P(c = desired) − 1/2` with aborts counted as losses for the cheater.
    pub epsilon_hat_abort_loss: Option<f64>,
    pub abort_histogram: BTreeMap<String, usize>,
    pub cheat_activated: usize,
    /// Runs where a cheat was executed and the run aborted.
    pub cheat_caught: usize,
    pub coins_disagree: usize,
    pub parity_guesses: usize,
    pub parity_guess_hits: usize,
    pub mean_unknown_in_n: Option<f64>,
}

impl BiasReport {
    pub fn from_trials(trials: &[TrialSummary], desired: Option<bool>) -> Self {
        let n = trials.len();
        let mut c = [0usize; 2];
        let mut hist = BTreeMap::new();
        let (mut cheat, mut caught, mut disagree) = (0, 0, 0);
        let (mut guesses, mut hits) = (0, 0);
        let mut unknown = Vec::new();
        for t in trials {
            let cheated = t.alice_cheated || t.bob_cheated;
            cheat += usize::from(cheated);
            match t.outcome {
                Outcome::Completed { c: coin } => {
                    c[usize::from(coin)] += 1;
                    disagree += usize::from(!t.coins_agree);
                }
                Outcome::Aborted { check, .. } => {
                    *hist.entry(check.to_string()).or_insert(0) += 1;
                    caught += usize::from(cheated);
                }
            }
            if let Some(ok) = t.parity_guess_correct {
                guesses += 1;
                hits += usize::from(ok);
            }
            unknown.extend(t.unknown_in_n);
        }
        let completed = c[0] + c[1];
        let frac = |k: usize, of: usize| if of == 0 { 0.0 } else { k as f64 / of as f64 };
        let (p0, p1) = (frac(c[0], n), frac(c[1], n));
        let top = frac(c[0].max(c[1]), completed);
        let ci = if completed == 0 {
            0.5
        } else {
            4.0 * (top * (1.0 - top) / completed as f64)
                .sqrt()
                .max(0.5 / completed as f64)
        };
        Self {
            trials: n,
            completed,
            c0: c[0],
            c1: c[1],
            p0,
            p1,
            p_abort: frac(n - completed, n),
            epsilon_hat: if completed == 0 { 0.0 } else { top - 0.5 },
            epsilon_hat_convention: "completed-runs".into(),
            ci_halfwidth: ci,
            desired,
            epsilon_hat_abort_loss: desired.map(|d| frac(c[usize::from(d)], n) - 0.5),
            abort_histogram: hist,
            cheat_activated: cheat,
            cheat_caught: caught,
            coins_disagree: disagree,
            parity_guesses: guesses,
            parity_guess_hits: hits,
            mean_unknown_in_n: (!unknown.is_empty())
                .then(|| unknown.iter().sum::<usize>() as f64 / unknown.len() as f64),
        }
    }

    /// Fraction of executed cheats that ended in an abort.
    pub fn detection_rate(&self) -> Option<f64> {
        (self.cheat_activated > 0).then(|| self.cheat_caught as f64 / self.cheat_activated as f64)
    }
}

/// Runs `trials` independent protocol runs in parallel; trial `t` uses seed
/// `derive_seed(seed, t)`, so results do not depend on the thread count.
pub fn run_trials(
    alice: &AliceFactory,
    bob: &BobFactory,
    config: &ProtocolConfig,
    trials: usize,
    seed: u64,
    mut keep: impl FnMut(usize, &RunResult),
) -> Result<Vec<TrialSummary>, ProtocolError> {
    let results: Vec<Result<RunResult, ProtocolError>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut a = alice();
            let mut b = bob();
            run_protocol(a.as_mut(), b.as_mut(), config, derive_seed(seed, t as u64))
        })
        .collect();
    let mut out = Vec::with_capacity(trials);
    for (t, r) in results.into_iter().enumerate() {
        let r = r?;
        keep(t, &r);
        out.push(TrialSummary::from(&r));
    }
    Ok(out)
}

pub fn estimate_bias(
    alice: &AliceFactory,
    bob: &BobFactory,
    config: &ProtocolConfig,
    trials: usize,
    seed: u64,
    desired: Option<bool>,
) -> Result<BiasReport, ProtocolError> {
    let summaries = run_trials(alice, bob, config, trials, seed, |_, _| {})?;
    Ok(BiasReport::from_trials(&summaries, desired))
}
