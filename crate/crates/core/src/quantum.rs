//! Exact simulation of the qubit pairs `alpha ⊗ beta`.
//!
//! A single qubit is written `|p,q⟩`: `p` selects the basis (0 = computational,
//! 1 = diagonal) and `q` the eigenstate inside it. `|1,0⟩ = (|0,0⟩+|0,1⟩)/√2`,
//! `|1,1⟩ = (|0,0⟩−|0,1⟩)/√2`. Alice's ancilla `alpha` lives in the span of two
//! orthonormal states `|x⟩`, `|y⟩`.
//!
//! A [`PairState`] is a dense 4-vector over `{x, y} ⊗ {|0,0⟩, |0,1⟩}` with index
//! `2·a + j` (`a`: 0 = x, 1 = y; `j`: computational index of beta). Diagonal
//! basis kets are expanded when a state is built. Each half can be measured
//! exactly once; the other half is then left in its exact conditional state.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::RandomStream;

pub type C64 = Complex64;

/// Normalization tolerance for states and density matrices.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// The angle fixed by the protocol for every prepared pair.
pub const PROTOCOL_THETA: f64 = FRAC_PI_4;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("state is not normalizable (squared norm {0})")]
    NotNormalizable(f64),
    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),
    #[error("theta {0} outside the open interval (0, pi/2)")]
    ThetaOutOfRange(f64),
    #[error("the {0} half of this pair was already measured")]
    AlreadyMeasured(Role),
    #[error("operation requires an intact pair")]
    NotIntact,
    #[error("branch has zero amplitude")]
    ImpossibleBranch,
    #[error("basis vectors are not orthonormal")]
    NotOrthonormal,
    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(&'static str),
}

/// Which half of a pair a single-qubit state belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Alpha,
    Beta,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Alpha => f.write_str("alpha"),
            Role::Beta => f.write_str("beta"),
        }
    }
}

/// Measurement basis of a beta qubit: computational (0) or diagonal (1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BasisBit {
    Computational,
    Diagonal,
}

impl BasisBit {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            BasisBit::Diagonal
        } else {
            BasisBit::Computational
        }
    }

    pub fn bit(self) -> bool {
        matches!(self, BasisBit::Diagonal)
    }

    pub fn flip(self) -> Self {
        Self::from_bit(!self.bit())
    }
}

/// A qubit outcome `|p,q⟩`, used both for Bob's actual results and his announcements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QubitOutcome {
    pub p: BasisBit,
    pub q: bool,
}

impl QubitOutcome {
    pub fn new(p: BasisBit, q: bool) -> Self {
        Self { p, q }
    }

    /// From two bits `(p, q)`.
    pub fn from_bits(p: bool, q: bool) -> Self {
        Self::new(BasisBit::from_bit(p), q)
    }

    /// All four outcomes in the order `|0,0⟩, |0,1⟩, |1,0⟩, |1,1⟩`.
    pub fn all() -> [QubitOutcome; 4] {
        [
            Self::from_bits(false, false),
            Self::from_bits(false, true),
            Self::from_bits(true, false),
            Self::from_bits(true, true),
        ]
    }
}

impl fmt::Display for QubitOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", u8::from(self.p.bit()), u8::from(self.q))
    }
}

// Serialized compactly as "pq", e.g. "10" for |1,0⟩.
impl Serialize for QubitOutcome {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for QubitOutcome {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        match text.as_str() {
            "00" => Ok(Self::from_bits(false, false)),
            "01" => Ok(Self::from_bits(false, true)),
            "10" => Ok(Self::from_bits(true, false)),
            "11" => Ok(Self::from_bits(true, true)),
            other => Err(serde::de::Error::custom(format!(
                "bad qubit outcome {other:?}"
            ))),
        }
    }
}

/// A normalized single-qubit state. For beta the components are over
/// `{|0,0⟩, |0,1⟩}`, for alpha over `{|x⟩, |y⟩}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleQubitState {
    amps: [C64; 2],
    role: Role,
}

impl SingleQubitState {
    /// Normalizes `amps`; fails only when the vector is (numerically) zero.
    pub fn new(amps: [C64; 2], role: Role) -> Result<Self, QuantumError> {
        let norm = amps[0].norm_sqr() + amps[1].norm_sqr();
        if norm <= NORM_TOLERANCE {
            return Err(QuantumError::NotNormalizable(norm));
        }
        let k = 1.0 / norm.sqrt();
        Ok(Self {
            amps: [amps[0] * k, amps[1] * k],
            role,
        })
    }

    pub fn real(a0: f64, a1: f64, role: Role) -> Result<Self, QuantumError> {
        Self::new([re(a0), re(a1)], role)
    }

    pub fn x() -> Self {
        Self {
            amps: [re(1.0), ZERO],
            role: Role::Alpha,
        }
    }

    pub fn y() -> Self {
        Self {
            amps: [ZERO, re(1.0)],
            role: Role::Alpha,
        }
    }

    pub fn amplitudes(&self) -> [C64; 2] {
        self.amps
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps[0].norm_sqr() + self.amps[1].norm_sqr()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &SingleQubitState) -> C64 {
        self.amps[0].conj() * other.amps[0] + self.amps[1].conj() * other.amps[1]
    }

    /// `|⟨self|other⟩|²`.
    pub fn overlap(&self, other: &SingleQubitState) -> f64 {
        self.inner(other).norm_sqr().clamp(0.0, 1.0)
    }

    /// The state orthogonal to `self` (unique up to phase).
    pub fn orthogonal(&self) -> SingleQubitState {
        SingleQubitState {
            amps: [-self.amps[1].conj(), self.amps[0].conj()],
            role: self.role,
        }
    }

    /// Same amplitudes, tagged for the other half of a pair.
    pub fn with_role(self, role: Role) -> Self {
        Self { role, ..self }
    }

    /// Componentwise comparison up to a global phase.
    pub fn approx_eq_up_to_phase(&self, other: &SingleQubitState, tol: f64) -> bool {
        (1.0 - self.overlap(other)).abs() <= tol
    }
}

/// `|p,q⟩` as beta amplitudes over `{|0,0⟩, |0,1⟩}`.
pub fn encode_outcome(outcome: QubitOutcome) -> SingleQubitState {
    let amps = match (outcome.p, outcome.q) {
        (BasisBit::Computational, false) => [re(1.0), ZERO],
        (BasisBit::Computational, true) => [ZERO, re(1.0)],
        (BasisBit::Diagonal, false) => [re(FRAC_1_SQRT_2), re(FRAC_1_SQRT_2)],
        (BasisBit::Diagonal, true) => [re(FRAC_1_SQRT_2), re(-FRAC_1_SQRT_2)],
    };
    SingleQubitState {
        amps,
        role: Role::Beta,
    }
}

/// An orthonormal measurement basis of one qubit; outcome `k` projects onto `vectors[k]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitBasis {
    vectors: [SingleQubitState; 2],
}

impl QubitBasis {
    pub fn new(v0: SingleQubitState, v1: SingleQubitState) -> Result<Self, QuantumError> {
        if v0.inner(&v1).norm() > 1e-9 {
            return Err(QuantumError::NotOrthonormal);
        }
        Ok(Self { vectors: [v0, v1] })
    }

    /// The basis `{v, v⊥}`: outcome 0 confirms `v`.
    pub fn from_state(v: SingleQubitState) -> Self {
        Self {
            vectors: [v, v.orthogonal()],
        }
    }

    /// `{|x⟩, |y⟩}` for alpha.
    pub fn xy() -> Self {
        Self {
            vectors: [SingleQubitState::x(), SingleQubitState::y()],
        }
    }

    /// `{(|x⟩+|y⟩)/√2, (|x⟩−|y⟩)/√2}` for alpha.
    pub fn xy_diagonal() -> Self {
        let plus = SingleQubitState {
            amps: [re(FRAC_1_SQRT_2), re(FRAC_1_SQRT_2)],
            role: Role::Alpha,
        };
        let minus = SingleQubitState {
            amps: [re(FRAC_1_SQRT_2), re(-FRAC_1_SQRT_2)],
            role: Role::Alpha,
        };
        Self {
            vectors: [plus, minus],
        }
    }

    /// `{|p,0⟩, |p,1⟩}` for beta.
    pub fn conjugate(p: BasisBit) -> Self {
        Self {
            vectors: [
                encode_outcome(QubitOutcome::new(p, false)),
                encode_outcome(QubitOutcome::new(p, true)),
            ],
        }
    }

    pub fn vector(&self, k: usize) -> &SingleQubitState {
        &self.vectors[k]
    }
}

/// Which preparation from the lie-detecting algorithms a pair follows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairKind {
    /// `(|x⟩|0,0⟩ + |y⟩|0,1⟩)/√2`.
    MaxEntangled,
    /// `cos θ |x⟩|0,q⟩ + sin θ |y⟩|1,q⟩`.
    AlgIII { q: bool, theta: f64 },
    /// `cos θ |x⟩|0,q⟩ + sin θ |y⟩|1,¬q⟩`.
    AlgIV { q: bool, theta: f64 },
    /// `AlgIII` with θ = π/4, as prepared in the coin-flipping protocol.
    Protocol { q: bool },
    /// Unentangled `|x⟩ ⊗ |p,q⟩`.
    Product { beta: QubitOutcome },
    /// Caller-supplied amplitudes over `{x0, x1, y0, y1}`; normalized on construction.
    General([C64; 4]),
}

/// Measurement status of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairStatus {
    Intact,
    AlphaMeasured,
    BetaMeasured,
    BothMeasured,
}

/// The joint state of one `alpha ⊗ beta` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairState {
    amps: [C64; 4],
    status: PairStatus,
    alpha_residual: Option<SingleQubitState>,
    beta_residual: Option<SingleQubitState>,
}

fn check_theta(theta: f64) -> Result<(), QuantumError> {
    if theta > 0.0 && theta < FRAC_PI_2 {
        Ok(())
    } else {
        Err(QuantumError::ThetaOutOfRange(theta))
    }
}

impl PairState {
    /// Builds a normalized intact pair from raw amplitudes over `{x0, x1, y0, y1}`.
    pub fn from_amplitudes(amps: [C64; 4]) -> Result<Self, QuantumError> {
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if norm <= NORM_TOLERANCE {
            return Err(QuantumError::NotNormalizable(norm));
        }
        let k = 1.0 / norm.sqrt();
        Ok(Self {
            amps: amps.map(|a| a * k),
            status: PairStatus::Intact,
            alpha_residual: None,
            beta_residual: None,
        })
    }

    /// `Σ_k c_k |α_k⟩ ⊗ |β_k⟩` with arbitrary single-qubit branches, expanded and normalized.
    pub fn from_branches(
        branches: &[(C64, SingleQubitState, SingleQubitState)],
    ) -> Result<Self, QuantumError> {
        let mut amps = [ZERO; 4];
        for (c, alpha, beta) in branches {
            let a = alpha.amplitudes();
            let b = beta.amplitudes();
            for (ai, av) in a.iter().enumerate() {
                for (bj, bv) in b.iter().enumerate() {
                    amps[2 * ai + bj] += c * av * bv;
                }
            }
        }
        Self::from_amplitudes(amps)
    }

    /// The general form `c_x|x⟩|0,0⟩ + c_y|y⟩|1,0⟩ + c_x'|x'⟩|0,1⟩ + c_y'|y'⟩|1,1⟩`.
    pub fn general(
        coefficients: [C64; 4],
        alphas: [SingleQubitState; 4],
    ) -> Result<Self, QuantumError> {
        let kets = [
            QubitOutcome::from_bits(false, false),
            QubitOutcome::from_bits(true, false),
            QubitOutcome::from_bits(false, true),
            QubitOutcome::from_bits(true, true),
        ];
        let branches: Vec<_> = (0..4)
            .map(|k| (coefficients[k], alphas[k], encode_outcome(kets[k])))
            .collect();
        Self::from_branches(&branches)
    }

    pub fn prepare(kind: PairKind) -> Result<Self, QuantumError> {
        let x = SingleQubitState::x();
        let y = SingleQubitState::y();
        let ket = |p: bool, q: bool| encode_outcome(QubitOutcome::from_bits(p, q));
        match kind {
            PairKind::MaxEntangled => Self::from_branches(&[
                (re(FRAC_1_SQRT_2), x, ket(false, false)),
                (re(FRAC_1_SQRT_2), y, ket(false, true)),
            ]),
            PairKind::AlgIII { q, theta } => {
                check_theta(theta)?;
                Self::from_branches(&[
                    (re(theta.cos()), x, ket(false, q)),
                    (re(theta.sin()), y, ket(true, q)),
                ])
            }
            PairKind::AlgIV { q, theta } => {
                check_theta(theta)?;
                Self::from_branches(&[
                    (re(theta.cos()), x, ket(false, q)),
                    (re(theta.sin()), y, ket(true, !q)),
                ])
            }
            PairKind::Protocol { q } => Self::prepare(PairKind::AlgIII {
                q,
                theta: PROTOCOL_THETA,
            }),
            PairKind::Product { beta } => {
                Self::from_branches(&[(re(1.0), x, encode_outcome(beta))])
            }
            PairKind::General(amps) => Self::from_amplitudes(amps),
        }
    }

    pub fn amplitudes(&self) -> [C64; 4] {
        self.amps
    }

    pub fn status(&self) -> PairStatus {
        self.status
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn alpha_residual(&self) -> Option<&SingleQubitState> {
        self.alpha_residual.as_ref()
    }

    pub fn beta_residual(&self) -> Option<&SingleQubitState> {
        self.beta_residual.as_ref()
    }

    fn alpha_measured(&self) -> bool {
        matches!(
            self.status,
            PairStatus::AlphaMeasured | PairStatus::BothMeasured
        )
    }

    fn beta_measured(&self) -> bool {
        matches!(
            self.status,
            PairStatus::BetaMeasured | PairStatus::BothMeasured
        )
    }

    /// Unnormalized alpha state left when beta is projected on `b`.
    fn alpha_branch(&self, b: &SingleQubitState) -> [C64; 2] {
        let bv = b.amplitudes();
        let mut out = [ZERO; 2];
        for (a, slot) in out.iter_mut().enumerate() {
            *slot = bv[0].conj() * self.amps[2 * a] + bv[1].conj() * self.amps[2 * a + 1];
        }
        out
    }

    /// Unnormalized beta state left when alpha is projected on `v`.
    fn beta_branch(&self, v: &SingleQubitState) -> [C64; 2] {
        let av = v.amplitudes();
        let mut out = [ZERO; 2];
        for (j, slot) in out.iter_mut().enumerate() {
            *slot = av[0].conj() * self.amps[j] + av[1].conj() * self.amps[2 + j];
        }
        out
    }

    /// Born probabilities of the two outcomes of a beta measurement on an intact pair.
    pub fn beta_probabilities(&self, basis: &QubitBasis) -> Result<[f64; 2], QuantumError> {
        if self.status != PairStatus::Intact {
            return Err(QuantumError::NotIntact);
        }
        Ok([0, 1].map(|k| {
            let b = self.alpha_branch(basis.vector(k));
            (b[0].norm_sqr() + b[1].norm_sqr()).clamp(0.0, 1.0)
        }))
    }

    /// Born probabilities of the two outcomes of an alpha measurement on an intact pair.
    pub fn alpha_probabilities(&self, basis: &QubitBasis) -> Result<[f64; 2], QuantumError> {
        if self.status != PairStatus::Intact {
            return Err(QuantumError::NotIntact);
        }
        Ok([0, 1].map(|k| {
            let b = self.beta_branch(basis.vector(k));
            (b[0].norm_sqr() + b[1].norm_sqr()).clamp(0.0, 1.0)
        }))
    }

    /// Exact joint distribution `P[alpha = i, beta = j]` on an intact pair.
    pub fn joint_probabilities(
        &self,
        alpha_basis: &QubitBasis,
        beta_basis: &QubitBasis,
    ) -> Result<[[f64; 2]; 2], QuantumError> {
        if self.status != PairStatus::Intact {
            return Err(QuantumError::NotIntact);
        }
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            let av = alpha_basis.vector(i).amplitudes();
            for (j, cell) in row.iter_mut().enumerate() {
                let bv = beta_basis.vector(j).amplitudes();
                let mut amp = ZERO;
                for (a, va) in av.iter().enumerate() {
                    for (b, vb) in bv.iter().enumerate() {
                        amp += va.conj() * vb.conj() * self.amps[2 * a + b];
                    }
                }
                *cell = amp.norm_sqr().clamp(0.0, 1.0);
            }
        }
        Ok(out)
    }

    /// Normalized alpha state conditional on beta being found in `b`.
    pub fn conditional_alpha_on(
        &self,
        b: &SingleQubitState,
    ) -> Result<SingleQubitState, QuantumError> {
        if self.status != PairStatus::Intact {
            return Err(QuantumError::NotIntact);
        }
        SingleQubitState::new(self.alpha_branch(b), Role::Alpha)
            .map_err(|_| QuantumError::ImpossibleBranch)
    }

    /// Measures beta in the conjugate basis `p`; returns `|p, q'⟩`.
    pub fn measure_beta(
        &mut self,
        basis: BasisBit,
        rng: &mut RandomStream,
    ) -> Result<QubitOutcome, QuantumError> {
        let k = self.measure_beta_in(&QubitBasis::conjugate(basis), rng)?;
        Ok(QubitOutcome::new(basis, k))
    }

    /// Measures beta in an arbitrary basis; returns the outcome index (`true` = vector 1).
    pub fn measure_beta_in(
        &mut self,
        basis: &QubitBasis,
        rng: &mut RandomStream,
    ) -> Result<bool, QuantumError> {
        if self.beta_measured() {
            return Err(QuantumError::AlreadyMeasured(Role::Beta));
        }
        if let Some(residual) = self.beta_residual {
            // alpha already measured: beta is a pure residual state
            let p1 = basis.vector(1).overlap(&residual);
            let k = rng.bernoulli(p1);
            self.beta_residual = Some(*basis.vector(usize::from(k)));
            self.status = PairStatus::BothMeasured;
            return Ok(k);
        }
        let p = self.beta_probabilities(basis)?;
        let k = rng.bernoulli(p[1] / (p[0] + p[1]));
        let branch = self.alpha_branch(basis.vector(usize::from(k)));
        self.alpha_residual = Some(SingleQubitState::new(branch, Role::Alpha)?);
        self.beta_residual = Some(*basis.vector(usize::from(k)));
        self.status = PairStatus::BetaMeasured;
        Ok(k)
    }

    /// Measures alpha in `basis`; returns the outcome index (`true` = vector 1).
    pub fn measure_alpha(
        &mut self,
        basis: &QubitBasis,
        rng: &mut RandomStream,
    ) -> Result<bool, QuantumError> {
        if self.alpha_measured() {
            return Err(QuantumError::AlreadyMeasured(Role::Alpha));
        }
        if let Some(residual) = self.alpha_residual {
            let p1 = basis.vector(1).overlap(&residual);
            let k = rng.bernoulli(p1);
            self.alpha_residual = Some(*basis.vector(usize::from(k)));
            self.status = PairStatus::BothMeasured;
            return Ok(k);
        }
        let p = self.alpha_probabilities(basis)?;
        let k = rng.bernoulli(p[1] / (p[0] + p[1]));
        let branch = self.beta_branch(basis.vector(usize::from(k)));
        self.beta_residual = Some(SingleQubitState::new(branch, Role::Beta)?);
        self.alpha_residual = Some(*basis.vector(usize::from(k)));
        self.status = PairStatus::AlphaMeasured;
        Ok(k)
    }

    /// `|⟨target|self⟩|²` for two intact pairs.
    pub fn project(&self, target: &PairState) -> Result<f64, QuantumError> {
        if self.status != PairStatus::Intact {
            return Err(QuantumError::NotIntact);
        }
        let n = target.norm_sqr();
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(QuantumError::NotNormalized(n));
        }
        let amp: C64 = target
            .amps
            .iter()
            .zip(&self.amps)
            .map(|(t, s)| t.conj() * s)
            .sum();
        Ok(amp.norm_sqr().clamp(0.0, 1.0))
    }

    /// The joint state as it stands: the original amplitudes while intact, the
    /// product of the two residuals once both halves have collapsed.
    pub fn current_vector(&self) -> [C64; 4] {
        match (self.status, self.alpha_residual, self.beta_residual) {
            (PairStatus::Intact, _, _) => self.amps,
            (_, Some(a), Some(b)) => {
                let (a, b) = (a.amplitudes(), b.amplitudes());
                [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
            }
            _ => unreachable!("a measured pair always stores both residuals"),
        }
    }

    /// Collective projective test of the pair, in whatever state it is now,
    /// against `target`; afterwards both halves count as measured.
    pub fn measure_collective(
        &mut self,
        target: &PairState,
        rng: &mut RandomStream,
    ) -> Result<bool, QuantumError> {
        let n = target.norm_sqr();
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(QuantumError::NotNormalized(n));
        }
        let current = self.current_vector();
        let amp: C64 = target
            .amps
            .iter()
            .zip(&current)
            .map(|(t, s)| t.conj() * s)
            .sum();
        let pass = rng.bernoulli(amp.norm_sqr());
        self.status = PairStatus::BothMeasured;
        self.alpha_residual = None;
        self.beta_residual = None;
        self.amps = current;
        Ok(pass)
    }

    /// Measures alpha again after it has collapsed; it is now an unentangled
    /// pure state, so only its residual is affected.
    pub fn remeasure_alpha(
        &mut self,
        basis: &QubitBasis,
        rng: &mut RandomStream,
    ) -> Result<bool, QuantumError> {
        let residual = self
            .alpha_residual
            .filter(|_| self.alpha_measured())
            .ok_or(QuantumError::NotIntact)?;
        let k = rng.bernoulli(basis.vector(1).overlap(&residual));
        self.alpha_residual = Some(*basis.vector(usize::from(k)));
        Ok(k)
    }

    /// Beta counterpart of [`PairState::remeasure_alpha`].
    pub fn remeasure_beta(
        &mut self,
        basis: &QubitBasis,
        rng: &mut RandomStream,
    ) -> Result<bool, QuantumError> {
        let residual = self
            .beta_residual
            .filter(|_| self.beta_measured())
            .ok_or(QuantumError::NotIntact)?;
        let k = rng.bernoulli(basis.vector(1).overlap(&residual));
        self.beta_residual = Some(*basis.vector(usize::from(k)));
        Ok(k)
    }

    /// Whether alpha has been measured.
    pub fn is_alpha_measured(&self) -> bool {
        self.alpha_measured()
    }

    /// Whether beta has been measured.
    pub fn is_beta_measured(&self) -> bool {
        self.beta_measured()
    }

    /// Reduced density matrix of beta (partial trace over alpha) of an intact pair.
    pub fn reduced_beta(&self) -> Result<DensityMatrix2, QuantumError> {
        if self.status != PairStatus::Intact {
            return Err(QuantumError::NotIntact);
        }
        let mut m = [[ZERO; 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                for a in 0..2 {
                    *cell += self.amps[2 * a + i] * self.amps[2 * a + j].conj();
                }
            }
        }
        DensityMatrix2::new(m)
    }
}

/// A numbered collection of pairs, each with its own random stream for
/// measurement outcomes.
#[derive(Debug, Clone)]
pub struct PairBank {
    pairs: Vec<PairState>,
    streams: Vec<RandomStream>,
    root: RandomStream,
}

impl PairBank {
    /// An empty bank; pair `i` draws outcomes from `root.child(i)`.
    pub fn new(root: RandomStream) -> Self {
        Self {
            pairs: Vec::new(),
            streams: Vec::new(),
            root,
        }
    }

    /// Appends a pair and returns its index.
    pub fn push(&mut self, pair: PairState) -> usize {
        let i = self.pairs.len();
        self.streams.push(self.root.child(i as u64));
        self.pairs.push(pair);
        i
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pair(&self, i: usize) -> &PairState {
        &self.pairs[i]
    }

    pub fn measure_beta(
        &mut self,
        i: usize,
        basis: BasisBit,
    ) -> Result<QubitOutcome, QuantumError> {
        self.pairs[i].measure_beta(basis, &mut self.streams[i])
    }

    pub fn measure_beta_in(&mut self, i: usize, basis: &QubitBasis) -> Result<bool, QuantumError> {
        self.pairs[i].measure_beta_in(basis, &mut self.streams[i])
    }

    pub fn measure_alpha(&mut self, i: usize, basis: &QubitBasis) -> Result<bool, QuantumError> {
        self.pairs[i].measure_alpha(basis, &mut self.streams[i])
    }

    pub fn measure_collective(
        &mut self,
        i: usize,
        target: &PairState,
    ) -> Result<bool, QuantumError> {
        self.pairs[i].measure_collective(target, &mut self.streams[i])
    }

    /// Measures alpha, or its collapsed residual if it was measured before.
    pub fn measure_alpha_any(
        &mut self,
        i: usize,
        basis: &QubitBasis,
    ) -> Result<bool, QuantumError> {
        if self.pairs[i].is_alpha_measured() {
            self.pairs[i].remeasure_alpha(basis, &mut self.streams[i])
        } else {
            self.pairs[i].measure_alpha(basis, &mut self.streams[i])
        }
    }

    /// Measures beta, or its collapsed residual if it was measured before.
    pub fn measure_beta_any(&mut self, i: usize, basis: &QubitBasis) -> Result<bool, QuantumError> {
        if self.pairs[i].is_beta_measured() {
            self.pairs[i].remeasure_beta(basis, &mut self.streams[i])
        } else {
            self.pairs[i].measure_beta_in(basis, &mut self.streams[i])
        }
    }
}

/// Prepares a pair for one of the named kinds.
pub fn prepare_pair(kind: PairKind) -> Result<PairState, QuantumError> {
    PairState::prepare(kind)
}

/// The alpha state expected by Bob after he found `beta_outcome` on an
/// `AlgIII`-style pair with bit `q` and angle `theta`.
pub fn conditional_alpha(
    q: bool,
    beta_outcome: QubitOutcome,
    theta: f64,
) -> Result<SingleQubitState, QuantumError> {
    let pair = PairState::prepare(PairKind::AlgIII { q, theta })?;
    pair.conditional_alpha_on(&encode_outcome(beta_outcome))
}

/// A 2×2 Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix2 {
    m: [[C64; 2]; 2],
}

/// Eigenvalues of a 2×2 Hermitian matrix, ascending.
fn hermitian_eigenvalues(m: &[[C64; 2]; 2]) -> [f64; 2] {
    let a = m[0][0].re;
    let d = m[1][1].re;
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d) * (a - d) + m[0][1].norm_sqr()).sqrt();
    [mean - radius, mean + radius]
}

impl DensityMatrix2 {
    pub fn new(m: [[C64; 2]; 2]) -> Result<Self, QuantumError> {
        if (m[0][1] - m[1][0].conj()).norm() > NORM_TOLERANCE
            || m[0][0].im.abs() > NORM_TOLERANCE
            || m[1][1].im.abs() > NORM_TOLERANCE
        {
            return Err(QuantumError::InvalidDensityMatrix("not Hermitian"));
        }
        if (m[0][0].re + m[1][1].re - 1.0).abs() > NORM_TOLERANCE {
            return Err(QuantumError::InvalidDensityMatrix("trace is not 1"));
        }
        if hermitian_eigenvalues(&m)[0] < -NORM_TOLERANCE {
            return Err(QuantumError::InvalidDensityMatrix(
                "not positive semidefinite",
            ));
        }
        Ok(Self { m })
    }

    pub fn pure(state: &SingleQubitState) -> Self {
        let v = state.amplitudes();
        let mut m = [[ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = v[i] * v[j].conj();
            }
        }
        Self { m }
    }

    /// Equal-weight mixture `(ρ1 + ρ2) / 2`.
    pub fn mix(&self, other: &DensityMatrix2) -> Self {
        let m =
            std::array::from_fn(|i| std::array::from_fn(|j| (self.m[i][j] + other.m[i][j]) * 0.5));
        Self { m }
    }

    pub fn entries(&self) -> [[C64; 2]; 2] {
        self.m
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0].re + self.m[1][1].re
    }

    fn difference(&self, other: &DensityMatrix2) -> [[C64; 2]; 2] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.m[i][j] - other.m[i][j]))
    }

    /// `‖self − other‖₁` from the closed-form eigenvalues of the difference.
    pub fn trace_distance_norm(&self, other: &DensityMatrix2) -> f64 {
        let ev = hermitian_eigenvalues(&self.difference(other));
        ev[0].abs() + ev[1].abs()
    }
}

/// `ρ_q = (|0,q⟩⟨0,q| + |1,q⟩⟨1,q|) / 2`, beta's view of a protocol pair.
pub fn reduced_rho_q(q: bool) -> DensityMatrix2 {
    let a = DensityMatrix2::pure(&encode_outcome(QubitOutcome::from_bits(false, q)));
    let b = DensityMatrix2::pure(&encode_outcome(QubitOutcome::from_bits(true, q)));
    a.mix(&b)
}

/// Optimal equal-prior success probability of telling `rho0` from `rho1`.
pub fn helstrom_success(rho0: &DensityMatrix2, rho1: &DensityMatrix2) -> Result<f64, QuantumError> {
    let rho0 = DensityMatrix2::new(rho0.m)?;
    let rho1 = DensityMatrix2::new(rho1.m)?;
    Ok((0.5 + 0.25 * rho0.trace_distance_norm(&rho1)).clamp(0.5, 1.0))
}

/// The projective measurement achieving [`helstrom_success`]: outcome 0 guesses `rho0`.
///
/// Vector 0 is the eigenvector of `rho0 − rho1` with the larger eigenvalue.
pub fn helstrom_measurement(
    rho0: &DensityMatrix2,
    rho1: &DensityMatrix2,
    role: Role,
) -> QubitBasis {
    let d = rho0.difference(rho1);
    let [_, top] = hermitian_eigenvalues(&d);
    let b = d[0][1];
    // (D - λ) v = 0 with v = (b, λ - a), or (λ - d, b*) when b vanishes
    let v = if b.norm() > 1e-12 {
        [b, re(top - d[0][0].re)]
    } else if d[0][0].re >= d[1][1].re {
        [re(1.0), ZERO]
    } else {
        [ZERO, re(1.0)]
    };
    let v0 = SingleQubitState::new(v, role).expect("eigenvector is nonzero");
    QubitBasis::from_state(v0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_6, FRAC_PI_8};

    fn reals(s: &PairState) -> [f64; 4] {
        s.amplitudes().map(|a| {
            assert!(a.im.abs() < 1e-12);
            a.re
        })
    }

    #[test]
    fn encode_outcome_matches_definitions() {
        let h = FRAC_1_SQRT_2;
        let cases = [
            ((false, false), [1.0, 0.0]),
            ((true, false), [h, h]),
            ((true, true), [h, -h]),
            ((false, true), [0.0, 1.0]),
        ];
        for ((p, q), want) in cases {
            let got = encode_outcome(QubitOutcome::from_bits(p, q)).amplitudes();
            assert_abs_diff_eq!(got[0].re, want[0], epsilon = 1e-15);
            assert_abs_diff_eq!(got[1].re, want[1], epsilon = 1e-15);
        }
    }

    #[test]
    fn alg3_state_expands_to_basis_zero_rewriting() {
        let s = prepare_pair(PairKind::AlgIII {
            q: false,
            theta: FRAC_PI_4,
        })
        .unwrap();
        let a = reals(&s);
        for (got, want) in a.iter().zip([FRAC_1_SQRT_2, 0.0, 0.5, 0.5]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn max_entangled_amplitudes() {
        let a = reals(&prepare_pair(PairKind::MaxEntangled).unwrap());
        for (got, want) in a.iter().zip([FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn alg4_q1_third_pi_expansion() {
        // cos(π/3)|x⟩|0,1⟩ + sin(π/3)|y⟩|1,0⟩, with |1,0⟩ = (|0,0⟩+|0,1⟩)/√2
        let (c, s) = (FRAC_PI_3.cos(), FRAC_PI_3.sin());
        let want = [0.0, c, s * FRAC_1_SQRT_2, s * FRAC_1_SQRT_2];
        let got = prepare_pair(PairKind::AlgIV {
            q: true,
            theta: FRAC_PI_3,
        })
        .unwrap();
        assert_abs_diff_eq!(got.norm_sqr(), 1.0, epsilon = 1e-12);
        for (g, w) in reals(&got).iter().zip(want) {
            assert_abs_diff_eq!(*g, w, epsilon = 1e-12);
        }
    }

    #[test]
    fn prepare_rejects_bad_theta_and_zero_vector() {
        assert!(matches!(
            prepare_pair(PairKind::AlgIII {
                q: false,
                theta: 0.0
            }),
            Err(QuantumError::ThetaOutOfRange(_))
        ));
        assert!(matches!(
            prepare_pair(PairKind::AlgIV {
                q: false,
                theta: FRAC_PI_2
            }),
            Err(QuantumError::ThetaOutOfRange(_))
        ));
        assert!(matches!(
            prepare_pair(PairKind::General([ZERO; 4])),
            Err(QuantumError::NotNormalizable(_))
        ));
    }

    #[test]
    fn general_form_places_kets_in_both_bases() {
        // c_x = 1 only: |x⟩|0,0⟩
        let s = PairState::general(
            [re(1.0), ZERO, ZERO, ZERO],
            [
                SingleQubitState::x(),
                SingleQubitState::y(),
                SingleQubitState::x(),
                SingleQubitState::y(),
            ],
        )
        .unwrap();
        assert_eq!(reals(&s), [1.0, 0.0, 0.0, 0.0]);
        // c_y = 1 only: |y⟩|1,0⟩
        let s = PairState::general(
            [ZERO, re(1.0), ZERO, ZERO],
            [
                SingleQubitState::x(),
                SingleQubitState::y(),
                SingleQubitState::x(),
                SingleQubitState::y(),
            ],
        )
        .unwrap();
        let a = reals(&s);
        assert_abs_diff_eq!(a[2], FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(a[3], FRAC_1_SQRT_2, epsilon = 1e-12);
    }

    #[test]
    fn beta_branch_probabilities_alg3() {
        for theta in [FRAC_PI_6, FRAC_PI_4, FRAC_PI_3] {
            let s = prepare_pair(PairKind::AlgIII { q: false, theta }).unwrap();
            let p0 = s
                .beta_probabilities(&QubitBasis::conjugate(BasisBit::Computational))
                .unwrap();
            let p1 = s
                .beta_probabilities(&QubitBasis::conjugate(BasisBit::Diagonal))
                .unwrap();
            assert_abs_diff_eq!(p0[1], theta.sin().powi(2) / 2.0, epsilon = 1e-12);
            assert_abs_diff_eq!(p1[1], theta.cos().powi(2) / 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn product_state_eigen_measurement_is_certain() {
        let mut s = prepare_pair(PairKind::Product {
            beta: QubitOutcome::from_bits(false, true),
        })
        .unwrap();
        let mut rng = RandomStream::new(3);
        let out = s.measure_beta(BasisBit::Computational, &mut rng).unwrap();
        assert_eq!(out, QubitOutcome::from_bits(false, true));
        assert_eq!(s.status(), PairStatus::BetaMeasured);
    }

    #[test]
    fn max_entangled_alpha_follows_beta() {
        let mut rng = RandomStream::new(9);
        for _ in 0..200 {
            let mut s = prepare_pair(PairKind::MaxEntangled).unwrap();
            let out = s.measure_beta(BasisBit::Computational, &mut rng).unwrap();
            let a = s.measure_alpha(&QubitBasis::xy(), &mut rng).unwrap();
            // |0,0⟩ pairs with |x⟩, |0,1⟩ with |y⟩
            assert_eq!(a, out.q);
            assert_eq!(s.status(), PairStatus::BothMeasured);
        }
    }

    #[test]
    fn alg3_alpha_marginal_and_certain_branch() {
        let s = prepare_pair(PairKind::AlgIII {
            q: false,
            theta: FRAC_PI_4,
        })
        .unwrap();
        let p = s.alpha_probabilities(&QubitBasis::xy()).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-12);
        let mut rng = RandomStream::new(1);
        for _ in 0..200 {
            let mut s = prepare_pair(PairKind::AlgIII {
                q: false,
                theta: FRAC_PI_4,
            })
            .unwrap();
            let out = s.measure_beta(BasisBit::Diagonal, &mut rng).unwrap();
            if out.q {
                assert!(
                    !s.measure_alpha(&QubitBasis::xy(), &mut rng).unwrap(),
                    "|1,1⟩ only pairs with |x⟩"
                );
            }
        }
    }

    #[test]
    fn double_measurement_is_rejected() {
        let mut rng = RandomStream::new(2);
        let mut s = prepare_pair(PairKind::MaxEntangled).unwrap();
        s.measure_beta(BasisBit::Diagonal, &mut rng).unwrap();
        assert_eq!(
            s.measure_beta(BasisBit::Diagonal, &mut rng),
            Err(QuantumError::AlreadyMeasured(Role::Beta))
        );
        s.measure_alpha(&QubitBasis::xy(), &mut rng).unwrap();
        assert_eq!(
            s.measure_alpha(&QubitBasis::xy(), &mut rng),
            Err(QuantumError::AlreadyMeasured(Role::Alpha))
        );
    }

    #[test]
    fn conditional_alpha_examples() {
        let ys = conditional_alpha(false, QubitOutcome::from_bits(false, true), FRAC_PI_4).unwrap();
        assert!(ys.approx_eq_up_to_phase(&SingleQubitState::y(), 1e-12));
        let xs = conditional_alpha(false, QubitOutcome::from_bits(true, true), FRAC_PI_4).unwrap();
        assert!(xs.approx_eq_up_to_phase(&SingleQubitState::x(), 1e-12));
        // normalize (cos π/4, sin π/4 / √2)
        let mixed =
            conditional_alpha(false, QubitOutcome::from_bits(false, false), FRAC_PI_4).unwrap();
        let want =
            SingleQubitState::real((2.0f64 / 3.0).sqrt(), (1.0f64 / 3.0).sqrt(), Role::Alpha)
                .unwrap();
        assert!(mixed.approx_eq_up_to_phase(&want, 1e-12));
    }

    #[test]
    fn conditional_alpha_reports_impossible_branch() {
        let s = prepare_pair(PairKind::Product {
            beta: QubitOutcome::from_bits(false, false),
        })
        .unwrap();
        assert_eq!(
            s.conditional_alpha_on(&encode_outcome(QubitOutcome::from_bits(false, true))),
            Err(QuantumError::ImpossibleBranch)
        );
    }

    #[test]
    fn reduced_rho_entries() {
        let r0 = reduced_rho_q(false).entries();
        let r1 = reduced_rho_q(true).entries();
        let want0 = [[0.75, 0.25], [0.25, 0.25]];
        let want1 = [[0.25, -0.25], [-0.25, 0.75]];
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(r0[i][j].re, want0[i][j], epsilon = 1e-15);
                assert_abs_diff_eq!(r1[i][j].re, want1[i][j], epsilon = 1e-15);
            }
        }
        assert_abs_diff_eq!(reduced_rho_q(false).trace(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(reduced_rho_q(true).trace(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn reduced_rho_equals_partial_trace_of_protocol_pair() {
        for q in [false, true] {
            let via_trace = prepare_pair(PairKind::Protocol { q })
                .unwrap()
                .reduced_beta()
                .unwrap()
                .entries();
            let direct = reduced_rho_q(q).entries();
            for i in 0..2 {
                for j in 0..2 {
                    assert_abs_diff_eq!(
                        (via_trace[i][j] - direct[i][j]).norm(),
                        0.0,
                        epsilon = 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn helstrom_examples() {
        let p = helstrom_success(&reduced_rho_q(false), &reduced_rho_q(true)).unwrap();
        assert_abs_diff_eq!(p, 0.5 + 2f64.sqrt() / 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p, FRAC_PI_8.cos().powi(2), epsilon = 1e-12);
        let r = reduced_rho_q(false);
        assert_abs_diff_eq!(helstrom_success(&r, &r).unwrap(), 0.5, epsilon = 1e-15);
        let e0 = DensityMatrix2::pure(&encode_outcome(QubitOutcome::from_bits(false, false)));
        let e1 = DensityMatrix2::pure(&encode_outcome(QubitOutcome::from_bits(false, true)));
        assert_abs_diff_eq!(helstrom_success(&e0, &e1).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn helstrom_rejects_invalid_matrices() {
        let bad_trace = [[re(0.5), ZERO], [ZERO, re(0.2)]];
        assert!(DensityMatrix2::new(bad_trace).is_err());
        let non_herm = [[re(0.5), re(0.3)], [re(0.1), re(0.5)]];
        assert!(DensityMatrix2::new(non_herm).is_err());
        let negative = [[re(1.2), ZERO], [ZERO, re(-0.2)]];
        assert!(DensityMatrix2::new(negative).is_err());
    }

    #[test]
    fn helstrom_measurement_attains_bound() {
        let (r0, r1) = (reduced_rho_q(false), reduced_rho_q(true));
        let basis = helstrom_measurement(&r0, &r1, Role::Beta);
        let v0 = DensityMatrix2::pure(basis.vector(0));
        let v1 = DensityMatrix2::pure(basis.vector(1));
        // P(correct) = ½ tr(Π0 ρ0) + ½ tr(Π1 ρ1)
        let tr = |a: &DensityMatrix2, b: &DensityMatrix2| {
            let (a, b) = (a.entries(), b.entries());
            let mut t = ZERO;
            for i in 0..2 {
                for k in 0..2 {
                    t += a[i][k] * b[k][i];
                }
            }
            t.re
        };
        let success = 0.5 * tr(&v0, &r0) + 0.5 * tr(&v1, &r1);
        assert_abs_diff_eq!(
            success,
            helstrom_success(&r0, &r1).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn projection_examples() {
        let e15_0 = prepare_pair(PairKind::Protocol { q: false }).unwrap();
        let e15_1 = prepare_pair(PairKind::Protocol { q: true }).unwrap();
        assert_abs_diff_eq!(e15_0.project(&e15_0).unwrap(), 1.0, epsilon = 1e-12);
        // 4-vector inner product: (1/√2,0,½,½)·(0,1/√2,½,−½) = 0
        assert_abs_diff_eq!(e15_0.project(&e15_1).unwrap(), 0.0, epsilon = 1e-12);
        let prod = prepare_pair(PairKind::Product {
            beta: QubitOutcome::from_bits(false, false),
        })
        .unwrap();
        assert_abs_diff_eq!(prod.project(&e15_0).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn projection_rejects_unnormalized_target() {
        let s = prepare_pair(PairKind::MaxEntangled).unwrap();
        let mut t = s.clone();
        t.amps[0] *= 2.0;
        assert!(matches!(s.project(&t), Err(QuantumError::NotNormalized(_))));
    }
}
