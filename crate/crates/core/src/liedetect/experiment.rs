//! Standalone runs of the lie-detecting algorithms against a simulated liar.

use serde::{Deserialize, Serialize};

use super::{
    algorithm_i, algorithm_ii, algorithm_iii, algorithm_iv, apply_lie, assign_lie_types,
    AssignMode, LedgerEntry, LieDetectError, LieFrequencies, LieLedger, LieType, Partition,
};
use crate::bits::BitString;
use crate::quantum::{BasisBit, PairBank, PairKind, PairState, QubitOutcome, PROTOCOL_THETA};
use crate::rng::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    I,
    II,
    III,
    IV,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::I, Algorithm::II, Algorithm::III, Algorithm::IV];
}

/// When Bob measures relative to his announcement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasurementMode {
    /// Measure every beta in a random basis, then announce with the assigned lie.
    MeasureFirst,
    /// Announce a uniformly random result first and measure afterwards: in the
    /// announced basis for planned honest/type-A indices, in the other basis
    /// for planned type-B/C indices.
    Delayed,
}

impl MeasurementMode {
    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "measure-first" => Some(Self::MeasureFirst),
            "delayed" => Some(Self::Delayed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    pub s: usize,
    pub freqs: LieFrequencies,
    pub theta: f64,
    pub assign: AssignMode,
    pub mode: MeasurementMode,
}

impl ExperimentConfig {
    pub fn new(s: usize, freqs: LieFrequencies) -> Self {
        Self {
            s,
            freqs,
            theta: PROTOCOL_THETA,
            assign: AssignMode::Exact,
            mode: MeasurementMode::MeasureFirst,
        }
    }

    pub fn with_theta(self, theta: f64) -> Self {
        Self { theta, ..self }
    }

    pub fn with_mode(self, mode: MeasurementMode) -> Self {
        Self { mode, ..self }
    }

    pub fn with_assign(self, assign: AssignMode) -> Self {
        Self { assign, ..self }
    }
}

/// Everything one standalone run produced.
#[derive(Debug, Clone)]
pub struct AlgorithmRun {
    pub algorithm: Algorithm,
    pub ledger: LieLedger,
    /// Detected lies for algorithms I and II.
    pub detected: Vec<usize>,
    /// Partition for algorithms III and IV.
    pub partition: Option<Partition>,
}

impl AlgorithmRun {
    /// Indices Alice flags as lies: the detected set or `L`.
    pub fn flagged(&self) -> &[usize] {
        match &self.partition {
            Some(p) => &p.l,
            None => &self.detected,
        }
    }

    /// Count of `kind` among the undecidable set `N` (zero for I and II).
    pub fn kind_in_n(&self, kind: LieType) -> usize {
        self.partition
            .as_ref()
            .map_or(0, |p| self.ledger.type_counts(&p.n)[kind.index()])
    }
}

/// Labels for the sub-streams of one run.
const PAIRS: u64 = 0;
const BOB: u64 = 1;
const ALICE: u64 = 2;

/// Runs one algorithm end to end: Alice prepares, Bob measures and lies, Alice detects.
pub fn run_algorithm(
    algorithm: Algorithm,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<AlgorithmRun, LieDetectError> {
    let root = RandomStream::new(seed);
    let mut alice_rng = root.child(ALICE);
    let mut bob_rng = root.child(BOB);
    let mut bank = PairBank::new(root.child(PAIRS));
    let s = cfg.s;

    let mut prepared = Vec::new();
    let q = BitString::from_bools(&(0..s).map(|_| alice_rng.bit()).collect::<Vec<_>>());
    for i in 0..s {
        let kind = match algorithm {
            Algorithm::I => {
                let b = QubitOutcome::from_bits(alice_rng.bit(), alice_rng.bit());
                prepared.push(b);
                PairKind::Product { beta: b }
            }
            Algorithm::II => PairKind::MaxEntangled,
            Algorithm::III => PairKind::AlgIII {
                q: q.get(i),
                theta: cfg.theta,
            },
            Algorithm::IV => PairKind::AlgIV {
                q: q.get(i),
                theta: cfg.theta,
            },
        };
        bank.push(PairState::prepare(kind)?);
    }

    let planned = assign_lie_types(s, &cfg.freqs, cfg.assign, &mut bob_rng);
    match cfg.mode {
        MeasurementMode::MeasureFirst => {
            let mut announced = Vec::with_capacity(s);
            let mut entries = Vec::with_capacity(s);
            for (i, &kind) in planned.iter().enumerate() {
                let actual = bank.measure_beta(i, BasisBit::from_bit(bob_rng.bit()))?;
                let a = apply_lie(actual, kind);
                announced.push(a);
                entries.push(LedgerEntry::new(actual, a));
            }
            finish(
                algorithm,
                bank,
                &q,
                &prepared,
                announced,
                Bob::Measured(LieLedger::new(entries)),
            )
        }
        MeasurementMode::Delayed => {
            let announced: Vec<QubitOutcome> = (0..s)
                .map(|_| QubitOutcome::from_bits(bob_rng.bit(), bob_rng.bit()))
                .collect();
            let bases = planned
                .iter()
                .zip(&announced)
                .map(|(k, a)| match k {
                    LieType::Honest | LieType::A => a.p,
                    LieType::B | LieType::C => a.p.flip(),
                })
                .collect();
            finish(
                algorithm,
                bank,
                &q,
                &prepared,
                announced,
                Bob::Pending(bases),
            )
        }
    }
}

enum Bob {
    Measured(LieLedger),
    Pending(Vec<BasisBit>),
}

fn finish(
    algorithm: Algorithm,
    mut bank: PairBank,
    q: &BitString,
    prepared: &[QubitOutcome],
    announced: Vec<QubitOutcome>,
    bob: Bob,
) -> Result<AlgorithmRun, LieDetectError> {
    let (detected, partition) = match algorithm {
        Algorithm::I => (algorithm_i(prepared, &announced)?, None),
        Algorithm::II => (algorithm_ii(&mut bank, &announced)?, None),
        Algorithm::III => (Vec::new(), Some(algorithm_iii(&mut bank, q, &announced)?)),
        Algorithm::IV => (Vec::new(), Some(algorithm_iv(&mut bank, q, &announced)?)),
    };
    let ledger = match bob {
        Bob::Measured(l) => l,
        Bob::Pending(bases) => {
            // delayed Bob measures only now, after Alice has acted on alpha
            let mut entries = Vec::with_capacity(bases.len());
            for (i, basis) in bases.into_iter().enumerate() {
                let actual = bank.measure_beta(i, basis)?;
                entries.push(LedgerEntry::new(actual, announced[i]));
            }
            LieLedger::new(entries)
        }
    };
    Ok(AlgorithmRun {
        algorithm,
        ledger,
        detected,
        partition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn honest_bob_is_never_flagged() {
        let cfg = ExperimentConfig::new(2000, LieFrequencies::honest());
        for alg in Algorithm::ALL {
            let run = run_algorithm(alg, &cfg, 4).unwrap();
            assert!(run.flagged().is_empty(), "{alg:?}");
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let cfg = ExperimentConfig::new(500, LieFrequencies::new(0.2, 0.2, 0.1).unwrap());
        let a = run_algorithm(Algorithm::III, &cfg, 77).unwrap();
        let b = run_algorithm(Algorithm::III, &cfg, 77).unwrap();
        assert_eq!(a.partition, b.partition);
        assert_eq!(a.ledger, b.ledger);
    }

    #[test]
    fn flagged_indices_are_always_lies() {
        let cfg = ExperimentConfig::new(3000, LieFrequencies::new(0.2, 0.2, 0.1).unwrap());
        for mode in [MeasurementMode::MeasureFirst, MeasurementMode::Delayed] {
            for alg in Algorithm::ALL {
                let run = run_algorithm(alg, &cfg.with_mode(mode), 9).unwrap();
                assert!(
                    run.flagged().iter().all(|&i| run.ledger.kind(i).is_lie()),
                    "{alg:?} {mode:?}"
                );
            }
        }
    }

    #[test]
    fn partitions_are_exact() {
        let cfg = ExperimentConfig::new(1000, LieFrequencies::new(0.3, 0.1, 0.2).unwrap());
        for alg in [Algorithm::III, Algorithm::IV] {
            let run = run_algorithm(alg, &cfg, 12).unwrap();
            assert!(run.partition.unwrap().is_exact(1000));
        }
    }
}
