//! Lie detection: Bob announces possibly false measurement results, Alice
//! exposes some of the lies through entanglement with his qubits.
//!
//! A lie is classified by comparing Bob's actual result `|p′,q′⟩` with his
//! announcement `|p″,q″⟩`: type A flips `q`, type B flips `p`, type C flips
//! both.

mod algorithms;
mod experiment;

pub use algorithms::{
    algorithm_i, algorithm_ii, algorithm_iii, algorithm_iv, classify_measured, MembershipSet,
};
pub use experiment::{run_algorithm, Algorithm, AlgorithmRun, ExperimentConfig, MeasurementMode};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quantum::{QuantumError, QubitOutcome};
use crate::rng::RandomStream;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LieDetectError {
    #[error(
        "invalid lie frequencies ({fa}, {fb}, {fc}): each must lie in [0,1] and sum to at most 1"
    )]
    InvalidFrequencies { fa: f64, fb: f64, fc: f64 },
    #[error("expected count {expected} outside [0, {s}]")]
    ExpectedOutOfRange { expected: f64, s: usize },
    #[error("tolerance multiplier z must be positive, got {0}")]
    NonPositiveZ(f64),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LieType {
    Honest,
    A,
    B,
    C,
}

impl LieType {
    pub const ALL: [LieType; 4] = [LieType::Honest, LieType::A, LieType::B, LieType::C];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_lie(self) -> bool {
        self != LieType::Honest
    }
}

impl fmt::Display for LieType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LieType::Honest => "honest",
            LieType::A => "a",
            LieType::B => "b",
            LieType::C => "c",
        })
    }
}

pub fn classify_lie(actual: QubitOutcome, announced: QubitOutcome) -> LieType {
    match (actual.p == announced.p, actual.q == announced.q) {
        (true, true) => LieType::Honest,
        (true, false) => LieType::A,
        (false, true) => LieType::B,
        (false, false) => LieType::C,
    }
}

/// The announcement that turns `actual` into a lie of the given type.
pub fn apply_lie(actual: QubitOutcome, kind: LieType) -> QubitOutcome {
    let (flip_p, flip_q) = match kind {
        LieType::Honest => (false, false),
        LieType::A => (false, true),
        LieType::B => (true, false),
        LieType::C => (true, true),
    };
    QubitOutcome::from_bits(actual.p.bit() ^ flip_p, actual.q ^ flip_q)
}

/// Target lie frequencies. The honest fraction is always derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFrequencies", into = "RawFrequencies")]
pub struct LieFrequencies {
    fa: f64,
    fb: f64,
    fc: f64,
}

#[derive(Serialize, Deserialize)]
struct RawFrequencies {
    fa: f64,
    fb: f64,
    fc: f64,
}

impl TryFrom<RawFrequencies> for LieFrequencies {
    type Error = LieDetectError;
    fn try_from(r: RawFrequencies) -> Result<Self, Self::Error> {
        LieFrequencies::new(r.fa, r.fb, r.fc)
    }
}

impl From<LieFrequencies> for RawFrequencies {
    fn from(f: LieFrequencies) -> Self {
        RawFrequencies {
            fa: f.fa,
            fb: f.fb,
            fc: f.fc,
        }
    }
}

impl LieFrequencies {
    pub fn new(fa: f64, fb: f64, fc: f64) -> Result<Self, LieDetectError> {
        let ok = |f: f64| (0.0..=1.0).contains(&f);
        if !(ok(fa) && ok(fb) && ok(fc)) || fa + fb + fc > 1.0 + 1e-12 {
            return Err(LieDetectError::InvalidFrequencies { fa, fb, fc });
        }
        Ok(Self { fa, fb, fc })
    }

    pub fn honest() -> Self {
        Self {
            fa: 0.0,
            fb: 0.0,
            fc: 0.0,
        }
    }

    pub fn fa(&self) -> f64 {
        self.fa
    }

    pub fn fb(&self) -> f64 {
        self.fb
    }

    pub fn fc(&self) -> f64 {
        self.fc
    }

    pub fn fh(&self) -> f64 {
        (1.0 - self.fa - self.fb - self.fc).max(0.0)
    }

    /// Frequency of `kind`, indexed like [`LieType::ALL`].
    pub fn of(&self, kind: LieType) -> f64 {
        match kind {
            LieType::Honest => self.fh(),
            LieType::A => self.fa,
            LieType::B => self.fb,
            LieType::C => self.fc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssignMode {
    /// `⌊f·s⌋` indices of each lie type, the rest honest, in shuffled positions.
    Exact,
    /// Each index independently.
    Iid,
}

pub fn assign_lie_types(
    s: usize,
    freqs: &LieFrequencies,
    mode: AssignMode,
    rng: &mut RandomStream,
) -> Vec<LieType> {
    match mode {
        AssignMode::Exact => {
            let count = |f: f64| ((f * s as f64) + 1e-9).floor() as usize;
            let mut types = Vec::with_capacity(s);
            for (kind, f) in [
                (LieType::A, freqs.fa),
                (LieType::B, freqs.fb),
                (LieType::C, freqs.fc),
            ] {
                types.extend(std::iter::repeat_n(kind, count(f)));
            }
            types.truncate(s);
            types.resize(s, LieType::Honest);
            rand::seq::SliceRandom::shuffle(types.as_mut_slice(), rng);
            types
        }
        AssignMode::Iid => (0..s)
            .map(|_| {
                let u = rng.uniform();
                if u < freqs.fa {
                    LieType::A
                } else if u < freqs.fa + freqs.fb {
                    LieType::B
                } else if u < freqs.fa + freqs.fb + freqs.fc {
                    LieType::C
                } else {
                    LieType::Honest
                }
            })
            .collect(),
    }
}

/// One index of Bob's private record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub actual: QubitOutcome,
    pub announced: QubitOutcome,
    pub kind: LieType,
}

impl LedgerEntry {
    pub fn new(actual: QubitOutcome, announced: QubitOutcome) -> Self {
        Self {
            actual,
            announced,
            kind: classify_lie(actual, announced),
        }
    }
}

/// Bob's ground truth: what he measured and what he said.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LieLedger {
    entries: Vec<LedgerEntry>,
}

impl LieLedger {
    pub fn new(entries: Vec<LedgerEntry>) -> Self {
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, i: usize) -> &LedgerEntry {
        &self.entries[i]
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn kind(&self, i: usize) -> LieType {
        self.entries[i].kind
    }

    /// Per-type counts over `indices`, indexed like [`LieType::ALL`].
    pub fn type_counts<'a>(&self, indices: impl IntoIterator<Item = &'a usize>) -> [usize; 4] {
        let mut out = [0; 4];
        for &i in indices {
            out[self.entries[i].kind.index()] += 1;
        }
        out
    }

    pub fn total_counts(&self) -> [usize; 4] {
        let mut out = [0; 4];
        for e in &self.entries {
            out[e.kind.index()] += 1;
        }
        out
    }

    /// Frequencies actually realized by this ledger.
    pub fn realized_frequencies(&self) -> LieFrequencies {
        let n = self.entries.len().max(1) as f64;
        let c = self.total_counts();
        LieFrequencies {
            fa: c[1] as f64 / n,
            fb: c[2] as f64 / n,
            fc: c[3] as f64 / n,
        }
    }
}

/// Alice's three-way split of `0..s`. Each set is sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub u: Vec<usize>,
    pub l: Vec<usize>,
    pub n: Vec<usize>,
}

impl Partition {
    /// Sorted union `L ∪ N`.
    pub fn m(&self) -> Vec<usize> {
        let mut m: Vec<usize> = self.l.iter().chain(&self.n).copied().collect();
        m.sort_unstable();
        m
    }

    pub fn sizes(&self) -> SetSizes {
        SetSizes {
            u: self.u.len(),
            l: self.l.len(),
            n: self.n.len(),
            m: self.l.len() + self.n.len(),
        }
    }

    /// Disjoint and covering `0..s`.
    pub fn is_exact(&self, s: usize) -> bool {
        let mut seen = vec![false; s];
        for &i in self.u.iter().chain(&self.l).chain(&self.n) {
            if i >= s || seen[i] {
                return false;
            }
            seen[i] = true;
        }
        seen.into_iter().all(|b| b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SetSizes {
    pub u: usize,
    pub l: usize,
    pub n: usize,
    pub m: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedSizes {
    pub u: f64,
    pub l: f64,
    pub n: f64,
    pub m: f64,
}

/// Closed-form mean set sizes under the entangled partition algorithm.
pub fn expected_sizes(freqs: &LieFrequencies, s: usize) -> ExpectedSizes {
    let s = s as f64;
    let (fa, fb, fc, fh) = (freqs.fa, freqs.fb, freqs.fc, freqs.fh());
    let u = (0.75 * fh + 0.25 * fa + 0.75 * fb + 0.25 * fc) * s;
    let l = (0.5 * fa + 0.25 * fb + 0.25 * fc) * s;
    let n = (0.25 * fh + 0.25 * fa + 0.5 * fc) * s;
    let m = (0.25 + (fa + fc) / 2.0) * s;
    ExpectedSizes { u, l, n, m }
}

/// Mean detected count `l` of the product-state algorithm; the entangled
/// variant detects `2l`.
pub fn expected_detected(freqs: &LieFrequencies, s: usize) -> f64 {
    (0.5 * freqs.fa + 0.25 * freqs.fb + 0.25 * freqs.fc) * s as f64
}

/// Mean `|M′|` for the variant that routes type C lies out of `N′`.
pub fn expected_m_prime(freqs: &LieFrequencies, s: usize) -> f64 {
    (0.25 + (freqs.fa + freqs.fb) / 2.0) * s as f64
}

/// Outcome of a binomial tolerance comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceReport {
    pub observed: f64,
    pub expected: f64,
    pub allowance: f64,
    pub pass: bool,
}

/// Passes iff `|observed − expected| ≤ z·√(s·p̂(1−p̂))` with `p̂ = expected/s`,
/// the allowance never dropping below `z`.
pub fn size_tolerance_check(
    observed: f64,
    expected: f64,
    s: usize,
    z: f64,
) -> Result<ToleranceReport, LieDetectError> {
    if z.is_nan() || z <= 0.0 {
        return Err(LieDetectError::NonPositiveZ(z));
    }
    let sf = s as f64;
    if !(0.0..=sf).contains(&expected) {
        return Err(LieDetectError::ExpectedOutOfRange { expected, s });
    }
    let p = if s == 0 { 0.0 } else { expected / sf };
    let allowance = z * (sf * p * (1.0 - p)).sqrt().max(1.0);
    Ok(ToleranceReport {
        observed,
        expected,
        allowance,
        pass: (observed - expected).abs() <= allowance,
    })
}
