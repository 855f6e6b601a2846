//! The honest parties. Cheating strategies reuse these and override single steps.

use std::collections::HashSet;

use super::checks::{
    alpha_check_basis, check_bit_counts, check_m_size, coin_from_public, deduce_q, CheckId,
    CheckRecord,
};
use super::config::{effective_frequencies, AlphaCheck, GatePolicy, ProtocolConfig, PublicParams};
use super::env::{AlphaHandle, BetaHandle, QuantumEnv};
use super::{AliceReport, AliceStrategy, BobStrategy, Diagnostics, ProtocolError, Reveal};
use crate::bits::BitString;
use crate::liedetect::{
    apply_lie, assign_lie_types, classify_measured, expected_sizes, AssignMode, LedgerEntry,
    LieFrequencies, LieLedger, LieType, MeasurementMode, MembershipSet, Partition,
};
use crate::quantum::{BasisBit, PairKind, PairState, QubitBasis, QubitOutcome};
use crate::rng::RandomStream;

/// Alice following the protocol.
#[derive(Debug, Default)]
pub struct HonestAlice {
    q: Option<BitString>,
    alphas: Vec<Option<AlphaHandle>>,
    announced: Vec<QubitOutcome>,
    partition: Partition,
}

impl HonestAlice {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn q(&self) -> Option<&BitString> {
        self.q.as_ref()
    }

    pub fn announced(&self) -> &[QubitOutcome] {
        &self.announced
    }

    pub fn partition_ref(&self) -> &Partition {
        &self.partition
    }

    /// Replaces `N` and `U`, e.g. after a relabeling. `L` is fixed once announced.
    pub fn set_n_u(&mut self, mut n: Vec<usize>, mut u: Vec<usize>) {
        n.sort_unstable();
        u.sort_unstable();
        self.partition.n = n;
        self.partition.u = u;
    }

    /// Prepares honest pairs for a given string.
    pub fn prepare_with(
        &mut self,
        q: BitString,
        env: &mut QuantumEnv,
    ) -> Result<Vec<BetaHandle>, ProtocolError> {
        let mut betas = Vec::with_capacity(q.len());
        self.alphas.clear();
        for qi in q.iter() {
            let (a, b) = env.prepare(PairState::prepare(PairKind::Protocol { q: qi })?);
            self.alphas.push(Some(a));
            betas.push(b);
        }
        self.q = Some(q);
        Ok(betas)
    }

    /// Step 4 checks on the announcements; returns the records and `M`.
    pub fn step4_checks(
        &self,
        params: &PublicParams,
        announced: &[QubitOutcome],
    ) -> (Vec<CheckRecord>, Vec<usize>) {
        let q = self.q.as_ref().expect("prepared before partition");
        let m: Vec<usize> = (0..announced.len())
            .filter(|&i| announced[i].q != q.get(i))
            .collect();
        let counts = check_bit_counts(announced, params.bit_threshold);
        let mut records = vec![counts.clone()];
        if counts.pass || params.gates == GatePolicy::RecordOnly {
            records.push(check_m_size(m.len(), params.code.d(), params.s()));
        }
        (records, m)
    }

    /// Moves alpha handles out for the given indices.
    pub fn take_alphas(&mut self, indices: &[usize]) -> Result<Vec<AlphaHandle>, ProtocolError> {
        indices
            .iter()
            .map(|&i| {
                self.alphas
                    .get_mut(i)
                    .and_then(Option::take)
                    .ok_or_else(|| ProtocolError::Malformed(format!("alpha {i} unavailable")))
            })
            .collect()
    }

    pub fn alpha(&self, i: usize) -> Option<&AlphaHandle> {
        self.alphas.get(i).and_then(Option::as_ref)
    }
}

impl AliceStrategy for HonestAlice {
    fn name(&self) -> String {
        "honest".into()
    }

    fn prepare(
        &mut self,
        params: &PublicParams,
        env: &mut QuantumEnv,
        rng: &mut RandomStream,
    ) -> Result<Vec<BetaHandle>, ProtocolError> {
        let q = params.code.sample_codeword(rng);
        self.prepare_with(q, env)
    }

    fn partition(
        &mut self,
        params: &PublicParams,
        env: &mut QuantumEnv,
        announced: &[QubitOutcome],
        _rng: &mut RandomStream,
    ) -> Result<AliceReport, ProtocolError> {
        self.announced = announced.to_vec();
        let (checks, m) = self.step4_checks(params, announced);
        if checks.iter().any(|c| !c.pass) && params.gates == GatePolicy::Enforce {
            return Ok(AliceReport {
                checks,
                l: Vec::new(),
            });
        }
        let in_m: HashSet<usize> = m.iter().copied().collect();
        let mut part = Partition::default();
        for (i, a) in announced.iter().enumerate() {
            if !in_m.contains(&i) {
                part.u.push(i);
                continue;
            }
            let handle = self.alphas[i].as_ref().expect("alpha kept until step 8");
            let p = BasisBit::from_bit(env.measure_alpha(handle, &QubitBasis::xy())?);
            match classify_measured(p, *a) {
                MembershipSet::L => part.l.push(i),
                _ => part.n.push(i),
            }
        }
        let l = part.l.clone();
        self.partition = part;
        Ok(AliceReport { checks, l })
    }

    fn reveal(
        &mut self,
        _params: &PublicParams,
        _env: &mut QuantumEnv,
        _f: bool,
        _rng: &mut RandomStream,
    ) -> Result<Reveal, ProtocolError> {
        let n = self.partition.n.clone();
        let u = self.partition.u.clone();
        let alphas = self.take_alphas(&u)?;
        Ok(Reveal { n, u, alphas })
    }

    fn coin(&self, f: bool, n: &[usize]) -> bool {
        let q = self.q.as_ref().expect("prepared");
        n.iter().fold(f, |acc, &i| acc ^ q.get(i))
    }

    fn diagnostics(&self) -> Diagnostics {
        Diagnostics {
            q: self.q.clone(),
            partition: Some(self.partition.clone()),
            ..Default::default()
        }
    }
}

/// How honest Bob treats one index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Measured,
    /// Announced first; measure later in this basis.
    Pending(BasisBit),
}

/// Bob following the protocol with his private lie frequencies.
#[derive(Debug)]
pub struct HonestBob {
    freqs: LieFrequencies,
    assign: AssignMode,
    mode: MeasurementMode,
    alpha_check: AlphaCheck,
    betas: Vec<Option<BetaHandle>>,
    announced: Vec<QubitOutcome>,
    actual: Vec<Option<QubitOutcome>>,
    slots: Vec<Slot>,
    withheld: Vec<bool>,
    effective: LieFrequencies,
    l: Vec<usize>,
}

impl HonestBob {
    pub fn new(
        freqs: LieFrequencies,
        assign: AssignMode,
        mode: MeasurementMode,
        alpha_check: AlphaCheck,
    ) -> Self {
        Self {
            freqs,
            assign,
            mode,
            alpha_check,
            betas: Vec::new(),
            announced: Vec::new(),
            actual: Vec::new(),
            slots: Vec::new(),
            withheld: Vec::new(),
            effective: freqs,
            l: Vec::new(),
        }
    }

    pub fn from_config(cfg: &ProtocolConfig) -> Self {
        Self::new(cfg.bob_freqs, cfg.assign, cfg.mode, cfg.alpha_check)
    }

    fn withheld_fraction(&self) -> f64 {
        match (self.mode, self.alpha_check) {
            (MeasurementMode::Delayed, _) => 1.0,
            (_, AlphaCheck::Collective { withheld_fraction }) => withheld_fraction,
            _ => 0.0,
        }
    }

    pub fn announced(&self) -> &[QubitOutcome] {
        &self.announced
    }

    pub fn l(&self) -> &[usize] {
        &self.l
    }

    /// Actual outcome of `i`, measuring now if it was deferred.
    pub fn actual_now(
        &mut self,
        env: &mut QuantumEnv,
        i: usize,
    ) -> Result<QubitOutcome, ProtocolError> {
        if let Some(a) = self.actual[i] {
            return Ok(a);
        }
        let Slot::Pending(basis) = self.slots[i] else {
            unreachable!("measured slots always have an outcome")
        };
        let handle = self.betas[i].as_ref().expect("pending beta is kept");
        let a = env.measure_beta(handle, basis)?;
        self.actual[i] = Some(a);
        Ok(a)
    }

    fn kind_now(&mut self, env: &mut QuantumEnv, i: usize) -> Result<LieType, ProtocolError> {
        let actual = self.actual_now(env, i)?;
        Ok(LedgerEntry::new(actual, self.announced[i]).kind)
    }

    /// The ledger if every index has been measured.
    pub fn ledger(&self) -> Option<LieLedger> {
        let entries: Option<Vec<LedgerEntry>> = self
            .actual
            .iter()
            .zip(&self.announced)
            .map(|(a, ann)| a.map(|a| LedgerEntry::new(a, *ann)))
            .collect();
        entries.map(LieLedger::new)
    }

    /// Measured entries only.
    pub fn partial_ledger(&self) -> Vec<Option<LedgerEntry>> {
        self.actual
            .iter()
            .zip(&self.announced)
            .map(|(a, ann)| a.map(|a| LedgerEntry::new(a, *ann)))
            .collect()
    }

    /// Frequencies Bob uses for his size expectations.
    pub fn effective_frequencies(&self) -> LieFrequencies {
        self.effective
    }

    fn validate_indices(&self, set: &[usize], what: &str) -> Result<(), ProtocolError> {
        let s = self.announced.len();
        let mut seen = HashSet::new();
        for &i in set {
            if i >= s || !seen.insert(i) {
                return Err(ProtocolError::Malformed(format!(
                    "{what} has a bad or repeated index {i}"
                )));
            }
        }
        Ok(())
    }

    /// The step-9 alpha test for one `U` index; `true` means it failed.
    fn alpha_test_fails(
        &mut self,
        env: &mut QuantumEnv,
        i: usize,
        q_i: bool,
        alpha: &AlphaHandle,
    ) -> Result<bool, ProtocolError> {
        if self.withheld[i]
            && matches!(self.alpha_check, AlphaCheck::Collective { .. })
            && self.actual[i].is_none()
        {
            let beta = self.betas[i].as_ref().expect("withheld beta is kept");
            let target = PairState::prepare(PairKind::Protocol { q: q_i })?;
            return Ok(!env.measure_collective(alpha, beta, &target)?);
        }
        let actual = self.actual_now(env, i)?;
        Ok(env.measure_alpha(alpha, &alpha_check_basis(q_i, actual)?)?)
    }
}

impl BobStrategy for HonestBob {
    fn name(&self) -> String {
        "honest".into()
    }

    fn announce(
        &mut self,
        _params: &PublicParams,
        env: &mut QuantumEnv,
        betas: Vec<BetaHandle>,
        rng: &mut RandomStream,
    ) -> Result<Vec<QubitOutcome>, ProtocolError> {
        let s = betas.len();
        let planned = assign_lie_types(s, &self.freqs, self.assign, rng);
        let w = self.withheld_fraction();
        let n_withheld = ((w * s as f64) + 1e-9).floor() as usize;
        let mut order: Vec<usize> = (0..s).collect();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), rng);
        self.withheld = vec![false; s];
        for &i in &order[..n_withheld] {
            self.withheld[i] = true;
        }
        self.effective = effective_frequencies(
            &self.freqs,
            if s == 0 {
                0.0
            } else {
                n_withheld as f64 / s as f64
            },
        );

        self.announced = Vec::with_capacity(s);
        self.actual = vec![None; s];
        self.slots = Vec::with_capacity(s);
        for (i, beta) in betas.iter().enumerate() {
            if self.withheld[i] {
                let ann = QubitOutcome::from_bits(rng.bit(), rng.bit());
                let basis = match planned[i] {
                    LieType::Honest | LieType::A => ann.p,
                    LieType::B | LieType::C => ann.p.flip(),
                };
                self.announced.push(ann);
                self.slots.push(Slot::Pending(basis));
            } else {
                let actual = env.measure_beta(beta, BasisBit::from_bit(rng.bit()))?;
                self.actual[i] = Some(actual);
                self.announced.push(apply_lie(actual, planned[i]));
                self.slots.push(Slot::Measured);
            }
        }
        self.betas = betas.into_iter().map(Some).collect();
        Ok(self.announced.clone())
    }

    fn check_l(
        &mut self,
        params: &PublicParams,
        env: &mut QuantumEnv,
        l: &[usize],
        _rng: &mut RandomStream,
    ) -> Result<Vec<CheckRecord>, ProtocolError> {
        self.validate_indices(l, "L")?;
        self.l = l.to_vec();
        let s = params.s();
        let expected = expected_sizes(&self.effective, s);
        let size = CheckRecord::statistical(CheckId::B6LSize, l.len(), expected.l, s, params.z)?;
        let mut records = vec![size.clone()];
        if !size.pass && params.gates == GatePolicy::Enforce {
            return Ok(records);
        }
        let mut honest = 0;
        for &i in l {
            if self.kind_now(env, i)? == LieType::Honest {
                honest += 1;
            }
        }
        records.push(CheckRecord::exact(
            CheckId::B6LAllLies,
            honest as f64,
            0.0,
            honest == 0,
        ));
        Ok(records)
    }

    fn choose_f(&mut self, _params: &PublicParams, rng: &mut RandomStream) -> bool {
        rng.bit()
    }

    fn final_checks(
        &mut self,
        params: &PublicParams,
        env: &mut QuantumEnv,
        reveal: Reveal,
        _rng: &mut RandomStream,
    ) -> Result<Vec<CheckRecord>, ProtocolError> {
        let s = params.s();
        let Reveal { n, u, alphas } = reveal;
        let partition = Partition {
            u,
            l: self.l.clone(),
            n,
        };
        if !partition.is_exact(s) {
            return Err(ProtocolError::Malformed(
                "L, N and U do not partition the indices".into(),
            ));
        }
        if alphas.len() != partition.u.len()
            || alphas
                .iter()
                .zip(&partition.u)
                .any(|(a, &i)| a.index() != i)
        {
            return Err(ProtocolError::Malformed(
                "alpha transfer does not match U".into(),
            ));
        }
        let mut records = Vec::new();

        let q = deduce_q(&self.announced, &partition);
        let is_cw = params.code.is_codeword(&q)?;
        records.push(CheckRecord::exact(
            CheckId::B91Codeword,
            f64::from(u8::from(is_cw)),
            1.0,
            is_cw,
        ));
        if !is_cw {
            return Ok(records);
        }

        let expected = expected_sizes(&self.effective, s);
        let n_rec = CheckRecord::statistical(
            CheckId::B92Sizes,
            partition.n.len(),
            expected.n,
            s,
            params.z,
        )?
        .with_subject("N");
        let u_rec = CheckRecord::statistical(
            CheckId::B92Sizes,
            partition.u.len(),
            expected.u,
            s,
            params.z,
        )?
        .with_subject("U");
        let sizes_ok = n_rec.pass && u_rec.pass;
        records.push(n_rec);
        records.push(u_rec);
        if !sizes_ok {
            return Ok(records);
        }

        let mut type_b = 0;
        for &i in &partition.n {
            if self.kind_now(env, i)? == LieType::B {
                type_b += 1;
            }
        }
        records.push(CheckRecord::exact(
            CheckId::B93NoTypeB,
            type_b as f64,
            0.0,
            type_b == 0,
        ));
        if type_b > 0 {
            return Ok(records);
        }

        let mut failures = 0;
        for (alpha, &i) in alphas.iter().zip(&partition.u) {
            if self.alpha_test_fails(env, i, q.get(i), alpha)? {
                failures += 1;
            }
        }
        records.push(CheckRecord::exact(
            CheckId::B94AlphaStates,
            failures as f64,
            0.0,
            failures == 0,
        ));
        Ok(records)
    }

    fn coin(&self, f: bool, n: &[usize]) -> bool {
        coin_from_public(&self.announced, n, f)
    }

    fn diagnostics(&self) -> Diagnostics {
        Diagnostics {
            ledger: self.ledger(),
            ..Default::default()
        }
    }
}
