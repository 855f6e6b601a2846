//! The quantum environment owns every pair. Parties hold handles that grant
//! measurement rights on one half; handles cannot be copied or forged.

use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::quantum::{BasisBit, PairBank, PairState, QuantumError, QubitBasis, QubitOutcome};
use crate::rng::RandomStream;

static NEXT_ENV: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("handle for pair {index} belongs to another environment")]
    ForeignHandle { index: usize },
    #[error("alpha and beta handles name different pairs ({alpha} vs {beta})")]
    MismatchedPair { alpha: usize, beta: usize },
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

/// Right to measure the alpha half of one pair.
#[derive(Debug, PartialEq, Eq)]
pub struct AlphaHandle {
    env: u64,
    index: usize,
}

/// Right to measure the beta half of one pair.
#[derive(Debug, PartialEq, Eq)]
pub struct BetaHandle {
    env: u64,
    index: usize,
}

impl AlphaHandle {
    pub fn index(&self) -> usize {
        self.index
    }
}

impl BetaHandle {
    pub fn index(&self) -> usize {
        self.index
    }
}

#[derive(Debug)]
pub struct QuantumEnv {
    id: u64,
    bank: PairBank,
}

impl QuantumEnv {
    /// Pair `i` draws its outcomes from `root.child(i)`.
    pub fn new(root: RandomStream) -> Self {
        Self {
            id: NEXT_ENV.fetch_add(1, Ordering::Relaxed),
            bank: PairBank::new(root),
        }
    }

    pub fn len(&self) -> usize {
        self.bank.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bank.is_empty()
    }

    /// Registers a freshly prepared pair.
    pub fn prepare(&mut self, state: PairState) -> (AlphaHandle, BetaHandle) {
        let index = self.bank.push(state);
        (
            AlphaHandle {
                env: self.id,
                index,
            },
            BetaHandle {
                env: self.id,
                index,
            },
        )
    }

    fn own(&self, env: u64, index: usize) -> Result<usize, EnvError> {
        if env == self.id {
            Ok(index)
        } else {
            Err(EnvError::ForeignHandle { index })
        }
    }

    /// Measures alpha (or its collapsed remainder) in `basis`.
    pub fn measure_alpha(&mut self, h: &AlphaHandle, basis: &QubitBasis) -> Result<bool, EnvError> {
        let i = self.own(h.env, h.index)?;
        Ok(self.bank.measure_alpha_any(i, basis)?)
    }

    /// Measures beta in the conjugate basis `p`.
    pub fn measure_beta(&mut self, h: &BetaHandle, p: BasisBit) -> Result<QubitOutcome, EnvError> {
        let i = self.own(h.env, h.index)?;
        let k = self.bank.measure_beta_any(i, &QubitBasis::conjugate(p))?;
        Ok(QubitOutcome::new(p, k))
    }

    /// Measures beta in an arbitrary basis.
    pub fn measure_beta_in(
        &mut self,
        h: &BetaHandle,
        basis: &QubitBasis,
    ) -> Result<bool, EnvError> {
        let i = self.own(h.env, h.index)?;
        Ok(self.bank.measure_beta_any(i, basis)?)
    }

    /// Projects the whole pair onto `target`; needs both halves.
    pub fn measure_collective(
        &mut self,
        a: &AlphaHandle,
        b: &BetaHandle,
        target: &PairState,
    ) -> Result<bool, EnvError> {
        let ia = self.own(a.env, a.index)?;
        let ib = self.own(b.env, b.index)?;
        if ia != ib {
            return Err(EnvError::MismatchedPair {
                alpha: ia,
                beta: ib,
            });
        }
        Ok(self.bank.measure_collective(ia, target)?)
    }
}
