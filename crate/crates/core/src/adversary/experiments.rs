//! Focused experiments on single mechanisms of the final checks.

use std::collections::HashSet;

use crate::bits::BitString;
use crate::liedetect::{apply_lie, expected_sizes, LieFrequencies, LieType};
use crate::protocol::{
    alpha_check_basis, deduce_q, detection_probability_b94, CheckId, CheckRecord, Message,
    ProtocolConfig, ProtocolError, RunResult, Transcript, TranscriptEntry,
};
use crate::quantum::{
    BasisBit, PairBank, PairKind, PairState, QuantumError, QubitBasis, QubitOutcome,
    SingleQubitState,
};
use crate::rng::RandomStream;

/// Which alpha Alice hands over for an index she claims is in `U`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClaimScenario {
    /// An honest pair whose index belongs in `N`: alpha already measured in
    /// the `x/y` basis, so it sits in `|x⟩` or `|y⟩`.
    MeasuredAlpha,
    /// Beta sent as the product `|p,q⟩` with alpha left in `|x⟩`.
    ProductState,
}

/// Exact probability that the alpha test catches the claim, averaged over
/// every random choice and conditioned on the scenario's premise.
pub fn b94_claim_detection_probability(scenario: ClaimScenario) -> Result<f64, QuantumError> {
    let xy = QubitBasis::xy();
    let (mut weight, mut caught) = (0.0, 0.0);
    for q in [false, true] {
        for pb in [false, true] {
            let bob = QubitBasis::conjugate(BasisBit::from_bit(pb));
            match scenario {
                ClaimScenario::MeasuredAlpha => {
                    let joint = PairState::prepare(PairKind::Protocol { q })?
                        .joint_probabilities(&xy, &bob)?;
                    for (a, row) in joint.iter().enumerate() {
                        for (j, &pr) in row.iter().enumerate() {
                            let (a, j) = (a == 1, j == 1);
                            if j == q || a == pb || pr == 0.0 {
                                continue;
                            }
                            let o = QubitOutcome::from_bits(pb, j);
                            weight += pr;
                            caught +=
                                pr * detection_probability_b94(j, o, xy.vector(usize::from(a)))?;
                        }
                    }
                }
                ClaimScenario::ProductState => {
                    for pa in [false, true] {
                        let beta = QubitOutcome::from_bits(pa, q);
                        let probs = PairState::prepare(PairKind::Product { beta })?
                            .beta_probabilities(&bob)?;
                        for (k, &pr) in probs.iter().enumerate() {
                            let o = QubitOutcome::from_bits(pb, k == 1);
                            weight += pr;
                            caught +=
                                pr * detection_probability_b94(o.q, o, &SingleQubitState::x())?;
                        }
                    }
                }
            }
        }
    }
    Ok(caught / weight)
}

/// One simulated claim. `None` when the sample misses the premise.
pub fn b94_claim_trial(
    scenario: ClaimScenario,
    rng: &mut RandomStream,
) -> Result<Option<bool>, QuantumError> {
    let mut bank = PairBank::new(rng.child(0));
    let q = rng.bit();
    let pb = BasisBit::from_bit(rng.bit());
    let kind = match scenario {
        ClaimScenario::MeasuredAlpha => PairKind::Protocol { q },
        ClaimScenario::ProductState => PairKind::Product {
            beta: QubitOutcome::from_bits(rng.bit(), q),
        },
    };
    bank.push(PairState::prepare(kind)?);
    let o = bank.measure_beta(0, pb)?;
    if scenario == ClaimScenario::MeasuredAlpha {
        let a = bank.measure_alpha(0, &QubitBasis::xy())?;
        if o.q == q || a == pb.bit() {
            return Ok(None);
        }
    }
    Ok(Some(
        bank.measure_alpha_any(0, &alpha_check_basis(o.q, o)?)?,
    ))
}

/// Runs `trials` claims; returns `(caught, accepted samples)`.
pub fn b94_claim_rate(
    scenario: ClaimScenario,
    trials: usize,
    seed: u64,
) -> Result<(usize, usize), QuantumError> {
    let root = RandomStream::new(seed);
    let (mut caught, mut used) = (0, 0);
    for t in 0..trials {
        if let Some(fail) = b94_claim_trial(scenario, &mut root.child(t as u64))? {
            used += 1;
            caught += usize::from(fail);
        }
    }
    Ok((caught, used))
}

/// Probability that an index of `M` is a real lie when Alice sent product
/// betas and Bob lies with `freqs`. A product-state Alice who names lies by a
/// coin flip is right about each named index with exactly this probability.
pub fn product_claimed_lie_probability(freqs: &LieFrequencies) -> Result<f64, QuantumError> {
    let (mut in_m, mut lie_in_m) = (0.0, 0.0);
    for pa in [false, true] {
        for q in [false, true] {
            let pair = PairState::prepare(PairKind::Product {
                beta: QubitOutcome::from_bits(pa, q),
            })?;
            for pb in [false, true] {
                let probs =
                    pair.beta_probabilities(&QubitBasis::conjugate(BasisBit::from_bit(pb)))?;
                for (k, &pr) in probs.iter().enumerate() {
                    let actual = QubitOutcome::from_bits(pb, k == 1);
                    for kind in LieType::ALL {
                        let w = pr * freqs.of(kind);
                        if apply_lie(actual, kind).q != q {
                            in_m += w;
                            if kind.is_lie() {
                                lie_in_m += w;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(lie_in_m / in_m)
}

/// Bob's step-3 announcements as recorded in a transcript.
pub fn announced_results(t: &Transcript) -> Option<Vec<QubitOutcome>> {
    t.entries().iter().find_map(|e| match e {
        TranscriptEntry::Message {
            message: Message::AnnounceResults { results },
            ..
        } => Some(results.clone()),
        _ => None,
    })
}

/// Whether any step-9 check failed.
pub fn final_check_failed(t: &Transcript) -> bool {
    t.entries()
        .iter()
        .any(|e| matches!(e, TranscriptEntry::Check { step: 9, record } if !record.pass))
}

/// Predicted probability that the final checks catch a relabeling, from the
/// audit of a run against an honest Bob who measured everything up front.
///
/// The codeword and size checks and the type-B check are deterministic given
/// the run; only the alpha test is random, independently per moved index.
pub fn relabel_detection_prediction(
    run: &RunResult,
    config: &ProtocolConfig,
) -> Result<Option<f64>, ProtocolError> {
    let moved = &run.audit.alice.moved;
    let (Some(partition), Some(ledger), Some(announced)) = (
        run.audit.alice.partition.as_ref(),
        run.audit.bob.ledger.as_ref(),
        announced_results(&run.transcript),
    ) else {
        return Ok(None);
    };
    if moved.is_empty() {
        return Ok(None);
    }
    let s = config.s();
    let q: BitString = deduce_q(&announced, partition);
    if !config.code.is_codeword(&q)? {
        return Ok(Some(1.0));
    }
    let exp = expected_sizes(&config.bob_freqs, s);
    let n_ok =
        CheckRecord::statistical(CheckId::B92Sizes, partition.n.len(), exp.n, s, config.z)?.pass;
    let u_ok =
        CheckRecord::statistical(CheckId::B92Sizes, partition.u.len(), exp.u, s, config.z)?.pass;
    if !(n_ok && u_ok) {
        return Ok(Some(1.0));
    }
    if partition.n.iter().any(|&i| ledger.kind(i) == LieType::B) {
        return Ok(Some(1.0));
    }
    let in_u: HashSet<usize> = partition.u.iter().copied().collect();
    let mut survive = 1.0;
    for &i in moved.iter().filter(|i| in_u.contains(i)) {
        // it was in N, so Alice found alpha in the basis state opposite to p″
        let alpha = if announced[i].p.bit() {
            SingleQubitState::x()
        } else {
            SingleQubitState::y()
        };
        survive *= 1.0 - detection_probability_b94(announced[i].q, ledger.entry(i).actual, &alpha)?;
    }
    Ok(Some(1.0 - survive))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_claim_probabilities() {
        let measured = b94_claim_detection_probability(ClaimScenario::MeasuredAlpha).unwrap();
        let product = b94_claim_detection_probability(ClaimScenario::ProductState).unwrap();
        assert!((measured - 2.0 / 3.0).abs() < 1e-12, "{measured}");
        assert!((product - 0.5).abs() < 1e-12, "{product}");
    }
}
