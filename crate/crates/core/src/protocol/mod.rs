//! The coin-flipping protocol as two parties exchanging messages through a
//! shared quantum environment.
//!
//! Steps, in order: Alice commits to a codeword `q` through `s` entangled
//! pairs and ships the beta halves (2); Bob announces results with lies at
//! rates he keeps private (3); Alice checks the announcements and partitions
//! the indices (4) and names the lies she caught (5); Bob verifies that list
//! (6) and announces a random bit `f` (7); Alice reveals `N`, `U` and the
//! alpha halves of `U` (8); Bob verifies everything (9); both output
//! `c = parity(Σ_{i∈N} q_i) ⊕ f` (10).

mod checks;
mod config;
mod env;
mod honest;
mod run;
mod transcript;

pub use checks::{
    alpha_check_basis, check_bit_counts, check_m_size, coin_from_public, deduce_q,
    detection_probability_b94, expected_alpha, CheckId, CheckRecord,
};
pub use config::{
    effective_frequencies, feasibility, feasibility_warnings, AlphaCheck, ConfigError, GatePolicy,
    ProtocolConfig, PublicParams, HONEST_MARGIN,
};
pub use env::{AlphaHandle, BetaHandle, EnvError, QuantumEnv};
pub use honest::{HonestAlice, HonestBob};
pub use run::{run_protocol, Audit, RunResult};
pub use transcript::{Message, Outcome, Party, Transcript, TranscriptEntry, TranscriptRow};

use thiserror::Error;

use crate::bits::BitString;
use crate::codes::CodeError;
use crate::liedetect::{LieDetectError, LieLedger, Partition};
use crate::quantum::{QuantumError, QubitOutcome};
use crate::rng::RandomStream;

/// Failures of the simulation itself, as opposed to protocol aborts.
#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    LieDetect(#[from] LieDetectError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("malformed message: {0}")]
    Malformed(String),
}

/// Alice's step-4 verdicts and, if they pass, the lies she reports.
#[derive(Debug, Clone)]
pub struct AliceReport {
    pub checks: Vec<CheckRecord>,
    pub l: Vec<usize>,
}

/// Alice's step-8 message.
#[derive(Debug)]
pub struct Reveal {
    pub n: Vec<usize>,
    pub u: Vec<usize>,
    pub alphas: Vec<AlphaHandle>,
}

/// Private information a strategy may expose to the harness after a run.
/// Never shown to the other party.
#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    pub q: Option<BitString>,
    pub ledger: Option<LieLedger>,
    pub partition: Option<Partition>,
    /// Indices Alice moved between `N` and `U` after learning `f`.
    pub moved: Vec<usize>,
    /// Bits of `q` Bob knows with certainty after step 5.
    pub known_bits: Option<usize>,
    /// Bob's guess of `q`, where he made one.
    pub guess: Option<BitString>,
    /// Unknown bits of `q` inside `N` when Bob chose `f`.
    pub unknown_in_n: Option<usize>,
    /// Whether Bob's predicted parity over `N` was right.
    pub parity_guess_correct: Option<bool>,
}

/// Alice's decision points.
pub trait AliceStrategy {
    fn name(&self) -> String;

    /// Step 2: prepare `s` pairs, keep the alphas, return the beta handles for Bob.
    fn prepare(
        &mut self,
        params: &PublicParams,
        env: &mut QuantumEnv,
        rng: &mut RandomStream,
    ) -> Result<Vec<BetaHandle>, ProtocolError>;

    /// Steps 4-5: check Bob's announcements and report the detected lies.
    fn partition(
        &mut self,
        params: &PublicParams,
        env: &mut QuantumEnv,
        announced: &[QubitOutcome],
        rng: &mut RandomStream,
    ) -> Result<AliceReport, ProtocolError>;

    /// Step 8: reveal `N` and `U` and hand over the alphas of `U`.
    fn reveal(
        &mut self,
        params: &PublicParams,
        env: &mut QuantumEnv,
        f: bool,
        rng: &mut RandomStream,
    ) -> Result<Reveal, ProtocolError>;

    /// Step 10: Alice's coin.
    fn coin(&self, f: bool, n: &[usize]) -> bool;

    /// Whether a cheating deviation was executed in this run.
    fn cheat_activated(&self) -> bool {
        false
    }

    fn diagnostics(&self) -> Diagnostics {
        Diagnostics::default()
    }
}

/// Bob's decision points.
pub trait BobStrategy {
    fn name(&self) -> String;

    /// Step 3: announce a result for every beta received.
    fn announce(
        &mut self,
        params: &PublicParams,
        env: &mut QuantumEnv,
        betas: Vec<BetaHandle>,
        rng: &mut RandomStream,
    ) -> Result<Vec<QubitOutcome>, ProtocolError>;

    /// Step 6: verify Alice's list of lies.
    fn check_l(
        &mut self,
        params: &PublicParams,
        env: &mut QuantumEnv,
        l: &[usize],
        rng: &mut RandomStream,
    ) -> Result<Vec<CheckRecord>, ProtocolError>;

    /// Step 7.
    fn choose_f(&mut self, params: &PublicParams, rng: &mut RandomStream) -> bool;

    /// Step 9: verify `N`, `U` and the alphas. Records stop at the first failure.
    fn final_checks(
        &mut self,
        params: &PublicParams,
        env: &mut QuantumEnv,
        reveal: Reveal,
        rng: &mut RandomStream,
    ) -> Result<Vec<CheckRecord>, ProtocolError>;

    /// Step 10: Bob's coin, from his deduced `q`.
    fn coin(&self, f: bool, n: &[usize]) -> bool;

    fn cheat_activated(&self) -> bool {
        false
    }

    fn diagnostics(&self) -> Diagnostics {
        Diagnostics::default()
    }
}
