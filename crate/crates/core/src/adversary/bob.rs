//! Cheating Bobs. Both skip their own checks and pick `f` to steer the coin.

use std::collections::HashSet;

use crate::bits::BitString;
use crate::liedetect::{AssignMode, LieFrequencies, LieType, MeasurementMode};
use crate::protocol::{
    coin_from_public, AlphaCheck, BetaHandle, BobStrategy, CheckRecord, Diagnostics, HonestBob,
    ProtocolError, PublicParams, QuantumEnv, Reveal,
};
use crate::quantum::{helstrom_measurement, helstrom_success, reduced_rho_q, QubitOutcome, Role};
use crate::rng::RandomStream;

/// Rate of `q″ ≠ q` the Helstrom Bob aims for: enough to clear Alice's `|M|`
/// bound with room, capped well below total contradiction.
pub fn helstrom_target_mismatch(d: usize, s: usize) -> f64 {
    (0.25 + d as f64 / s as f64 + 0.15).min(0.8)
}

/// Parity Bob predicts over his guessed `N`: indices outside `L` whose
/// announcement contradicts the guess, counted where the deduced bit is 1.
fn predicted_parity(
    announced: &[QubitOutcome],
    guess: impl Fn(usize) -> Option<bool>,
    l: &HashSet<usize>,
) -> (bool, usize) {
    let mut parity = false;
    let mut unknown = 0;
    for (i, a) in announced.iter().enumerate() {
        if l.contains(&i) || a.q {
            continue;
        }
        // q″ = 0 here, so the deduced bit is 1 whenever i lands in N
        let Some(g) = guess(i) else { continue };
        unknown += 1;
        if g {
            parity ^= true;
        }
    }
    (parity, unknown)
}

/// Guesses each `q_i` with the optimal measurement on beta, then announces
/// so that the mismatch rate stays plausible.
#[derive(Debug)]
pub struct HelstromBob {
    desired: bool,
    guess: Option<BitString>,
    announced: Vec<QubitOutcome>,
    l: HashSet<usize>,
    predicted: Option<bool>,
    unknown: usize,
    correct: Option<bool>,
}

impl HelstromBob {
    pub fn new(desired: bool) -> Self {
        Self {
            desired,
            guess: None,
            announced: Vec::new(),
            l: HashSet::new(),
            predicted: None,
            unknown: 0,
            correct: None,
        }
    }
}

impl BobStrategy for HelstromBob {
    fn name(&self) -> String {
        "helstrom-guess".into()
    }

    fn announce(
        &mut self,
        params: &PublicParams,
        env: &mut QuantumEnv,
        betas: Vec<BetaHandle>,
        rng: &mut RandomStream,
    ) -> Result<Vec<QubitOutcome>, ProtocolError> {
        let (rho0, rho1) = (reduced_rho_q(false), reduced_rho_q(true));
        let basis = helstrom_measurement(&rho0, &rho1, Role::Beta);
        let acc = helstrom_success(&rho0, &rho1)?;
        let mu = helstrom_target_mismatch(params.code.d(), params.s());
        let flip = ((mu - (1.0 - acc)) / (2.0 * acc - 1.0)).clamp(0.0, 1.0);
        let mut guess = Vec::with_capacity(betas.len());
        self.announced = Vec::with_capacity(betas.len());
        for b in &betas {
            let g = env.measure_beta_in(b, &basis)?;
            guess.push(g);
            let q = g ^ rng.bernoulli(flip);
            self.announced.push(QubitOutcome::from_bits(rng.bit(), q));
        }
        self.guess = Some(BitString::from_bools(&guess));
        Ok(self.announced.clone())
    }

    fn check_l(
        &mut self,
        _params: &PublicParams,
        _env: &mut QuantumEnv,
        l: &[usize],
        _rng: &mut RandomStream,
    ) -> Result<Vec<CheckRecord>, ProtocolError> {
        self.l = l.iter().copied().collect();
        Ok(Vec::new())
    }

    fn choose_f(&mut self, _params: &PublicParams, _rng: &mut RandomStream) -> bool {
        let guess = self.guess.as_ref().expect("announced first");
        let (parity, unknown) = predicted_parity(&self.announced, |i| Some(guess.get(i)), &self.l);
        self.predicted = Some(parity);
        self.unknown = unknown;
        parity ^ self.desired
    }

    fn final_checks(
        &mut self,
        _params: &PublicParams,
        _env: &mut QuantumEnv,
        reveal: Reveal,
        _rng: &mut RandomStream,
    ) -> Result<Vec<CheckRecord>, ProtocolError> {
        let actual = coin_from_public(&self.announced, &reveal.n, false);
        self.correct = self.predicted.map(|p| p == actual);
        Ok(Vec::new())
    }

    fn coin(&self, f: bool, n: &[usize]) -> bool {
        coin_from_public(&self.announced, n, f)
    }

    fn cheat_activated(&self) -> bool {
        true
    }

    fn diagnostics(&self) -> Diagnostics {
        Diagnostics {
            guess: self.guess.clone(),
            unknown_in_n: Some(self.unknown),
            parity_guess_correct: self.correct,
            ..Default::default()
        }
    }
}

/// Standard deviations of slack the flooding Bob keeps below `s − d` known bits.
pub const FLOOD_Z: f64 = 4.0;

/// Mean and standard deviation of the bits a flooding Bob knows after
/// step 5. Every type-B index is known, since it lands in `U` or `L` and never
/// in `N`. Each type-A lie adds one with probability 1/2 and each type-C lie
/// with probability 1/4, through `L`.
pub fn flood_known_bits(fa: f64, fb: f64, fc: f64, s: usize, assign: AssignMode) -> (f64, f64) {
    let s = s as f64;
    let mean = (fb + fa / 2.0 + fc / 4.0) * s;
    let mut var = (fa / 4.0 + fc * 3.0 / 16.0) * s;
    if assign == AssignMode::Iid {
        // counts per type are then random too; bound by the type-B term
        var += fb * (1.0 - fb) * s + fa * (1.0 - fa) * s / 4.0;
    }
    (mean, var.sqrt())
}

/// Whether the known-bit count sits [`FLOOD_Z`] deviations below `s − d`.
pub fn known_bits_within_bound(
    fa: f64,
    fb: f64,
    fc: f64,
    d: usize,
    s: usize,
    assign: AssignMode,
) -> bool {
    let (mean, sd) = flood_known_bits(fa, fb, fc, s, assign);
    mean + FLOOD_Z * sd < (s - d) as f64
}

/// Lies mostly with type B so that Alice's detected lies plus his own type-B
/// indices (always in `U`) pin down as many bits of `q` as possible.
#[derive(Debug)]
pub struct TypeBFloodBob {
    inner: HonestBob,
    freqs: LieFrequencies,
    desired: bool,
    l: HashSet<usize>,
    known: Option<usize>,
    predicted: Option<bool>,
    unknown: usize,
    correct: Option<bool>,
}

impl TypeBFloodBob {
    pub fn new(freqs: LieFrequencies, assign: AssignMode, desired: bool) -> Self {
        Self {
            inner: HonestBob::new(
                freqs,
                assign,
                MeasurementMode::MeasureFirst,
                AlphaCheck::Conditional,
            ),
            freqs,
            desired,
            l: HashSet::new(),
            known: None,
            predicted: None,
            unknown: 0,
            correct: None,
        }
    }

    /// Largest type-B rate, in steps of `1/s`, whose known-bit count stays
    /// below `s − d` with [`FLOOD_Z`] standard deviations to spare. Type-A lies
    /// sit at the smallest feasible rate and type C is unused.
    pub fn max_flood(
        d: usize,
        s: usize,
        assign: AssignMode,
    ) -> Result<LieFrequencies, crate::liedetect::LieDetectError> {
        let fa = 2.0 * d as f64 / s as f64 + crate::protocol::HONEST_MARGIN;
        let fb = (0..=s)
            .rev()
            .map(|k| k as f64 / s as f64)
            .find(|&fb| fb <= 1.0 - fa && known_bits_within_bound(fa, fb, 0.0, d, s, assign))
            .unwrap_or(0.0);
        LieFrequencies::new(fa, fb, 0.0)
    }

    pub fn frequencies(&self) -> LieFrequencies {
        self.freqs
    }
}

impl BobStrategy for TypeBFloodBob {
    fn name(&self) -> String {
        format!("typeb-flood-{:.2}", self.freqs.fb())
    }

    fn announce(
        &mut self,
        params: &PublicParams,
        env: &mut QuantumEnv,
        betas: Vec<BetaHandle>,
        rng: &mut RandomStream,
    ) -> Result<Vec<QubitOutcome>, ProtocolError> {
        self.inner.announce(params, env, betas, rng)
    }

    fn check_l(
        &mut self,
        _params: &PublicParams,
        _env: &mut QuantumEnv,
        l: &[usize],
        _rng: &mut RandomStream,
    ) -> Result<Vec<CheckRecord>, ProtocolError> {
        self.l = l.iter().copied().collect();
        let ledger = self.inner.ledger().expect("every beta measured up front");
        let type_b_outside = (0..ledger.len())
            .filter(|i| !self.l.contains(i) && ledger.kind(*i) == LieType::B)
            .count();
        self.known = Some(l.len() + type_b_outside);
        Ok(Vec::new())
    }

    fn choose_f(&mut self, _params: &PublicParams, _rng: &mut RandomStream) -> bool {
        let ledger = self.inner.ledger().expect("every beta measured up front");
        let announced = self.inner.announced();
        // type B never sits in N; elsewhere guess q_i from the actual outcome
        let guess = |i: usize| {
            let e = ledger.entry(i);
            (e.kind != LieType::B).then_some(e.actual.q != announced[i].q)
        };
        let (parity, unknown) = predicted_parity(announced, guess, &self.l);
        self.predicted = Some(parity);
        self.unknown = unknown;
        parity ^ self.desired
    }

    fn final_checks(
        &mut self,
        _params: &PublicParams,
        _env: &mut QuantumEnv,
        reveal: Reveal,
        _rng: &mut RandomStream,
    ) -> Result<Vec<CheckRecord>, ProtocolError> {
        let actual = coin_from_public(self.inner.announced(), &reveal.n, false);
        self.correct = self.predicted.map(|p| p == actual);
        Ok(Vec::new())
    }

    fn coin(&self, f: bool, n: &[usize]) -> bool {
        coin_from_public(self.inner.announced(), n, f)
    }

    fn cheat_activated(&self) -> bool {
        true
    }

    fn diagnostics(&self) -> Diagnostics {
        Diagnostics {
            ledger: self.inner.ledger(),
            known_bits: self.known,
            unknown_in_n: Some(self.unknown),
            parity_guess_correct: self.correct,
            ..Default::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_mismatch_clears_m_bound() {
        for (d, s) in [(3, 15), (3, 31), (3, 63), (5, 20)] {
            let mu = helstrom_target_mismatch(d, s);
            assert!(mu * s as f64 > d as f64 + s as f64 / 4.0);
            assert!(mu <= 0.8);
        }
    }

    #[test]
    fn predicted_parity_skips_l_and_ones() {
        let ann = vec![
            QubitOutcome::from_bits(false, false),
            QubitOutcome::from_bits(false, true),
            QubitOutcome::from_bits(true, false),
            QubitOutcome::from_bits(true, false),
        ];
        let l: HashSet<usize> = [3].into_iter().collect();
        let (parity, unknown) = predicted_parity(&ann, |_| Some(true), &l);
        assert_eq!(unknown, 2);
        assert!(!parity);
    }

    #[test]
    fn max_flood_is_feasible() {
        let f = TypeBFloodBob::max_flood(3, 63, AssignMode::Exact).unwrap();
        assert!(f.fa() + f.fc() > 6.0 / 63.0);
        assert!(f.fb() > f.fc());
        assert!(known_bits_within_bound(
            f.fa(),
            f.fb(),
            f.fc(),
            3,
            63,
            AssignMode::Exact
        ));
        let step = 1.0 / 63.0;
        assert!(!known_bits_within_bound(
            f.fa(),
            f.fb() + step,
            0.0,
            3,
            63,
            AssignMode::Exact
        ));
    }
}
