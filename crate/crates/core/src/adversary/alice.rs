//! Cheating Alices. All of them want the coin to come out as `desired`.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use crate::bits::BitString;
use crate::codes::LinearCode;
use crate::liedetect::Partition;
use crate::protocol::{
    check_bit_counts, check_m_size, coin_from_public, AliceReport, AliceStrategy, BetaHandle,
    Diagnostics, GatePolicy, HonestAlice, ProtocolError, PublicParams, QuantumEnv, Reveal,
};
use crate::quantum::{PairKind, PairState, QubitOutcome};
use crate::rng::RandomStream;

/// Enumeration budget per weight class when searching low-weight codewords.
const SEARCH_BUDGET: u128 = 5_000_000;

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}

/// Nonzero codewords of weight `d..=d+2`, found by matching parity-check syndromes.
#[derive(Debug, Clone)]
pub struct RelabelSearch {
    candidates: Vec<BitString>,
}

impl RelabelSearch {
    pub fn new(code: &LinearCode) -> Self {
        let s = code.s();
        let weights = code.d()..=(code.d() + 2).min(s);
        // syndrome of each column under the parity checks
        let h = parity_rows(code);
        let columns: Vec<BitString> = (0..s)
            .map(|j| BitString::from_bools(&h.iter().map(|r| r.get(j)).collect::<Vec<_>>()))
            .collect();
        let mut by_syndrome: HashMap<BitString, Vec<usize>> = HashMap::new();
        for (j, c) in columns.iter().enumerate() {
            by_syndrome.entry(c.clone()).or_default().push(j);
        }
        let mut candidates = Vec::new();
        for w in weights {
            if w == 0 || binomial(s, w - 1) > SEARCH_BUDGET {
                continue;
            }
            let mut chosen = Vec::with_capacity(w);
            let zero = BitString::zeros(h.len());
            extend(
                &columns,
                &by_syndrome,
                w,
                0,
                &zero,
                &mut chosen,
                &mut candidates,
                s,
            );
        }
        Self { candidates }
    }

    pub fn candidates(&self) -> &[BitString] {
        &self.candidates
    }

    /// First candidate (from a random starting point) that avoids `L` and
    /// satisfies `accept`. Returns the indices to move.
    pub fn find(
        &self,
        l: &[usize],
        rng: &mut RandomStream,
        mut accept: impl FnMut(&[usize]) -> bool,
    ) -> Option<Vec<usize>> {
        if self.candidates.is_empty() {
            return None;
        }
        let in_l: HashSet<usize> = l.iter().copied().collect();
        let start = rng.below(self.candidates.len());
        (0..self.candidates.len())
            .map(|k| &self.candidates[(start + k) % self.candidates.len()])
            .map(BitString::ones_positions)
            .filter(|supp| supp.iter().all(|i| !in_l.contains(i)))
            .find(|supp| accept(supp))
    }
}

/// A basis of the dual code, one row per non-pivot column of the generator.
fn parity_rows(code: &LinearCode) -> Vec<BitString> {
    let s = code.s();
    let mut rows: Vec<BitString> = code.generator().to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..s {
        if r == rows.len() {
            break;
        }
        if let Some(found) = (r..rows.len()).find(|&i| rows[i].get(col)) {
            rows.swap(r, found);
            let p = rows[r].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != r && row.get(col) {
                    row.xor_assign(&p);
                }
            }
            pivots.push(col);
            r += 1;
        }
    }
    (0..s)
        .filter(|c| !pivots.contains(c))
        .map(|f| {
            let mut row = BitString::zeros(s);
            row.set(f, true);
            for (ri, &p) in pivots.iter().enumerate() {
                if rows[ri].get(f) {
                    row.set(p, true);
                }
            }
            row
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn extend(
    columns: &[BitString],
    by_syndrome: &HashMap<BitString, Vec<usize>>,
    w: usize,
    from: usize,
    acc: &BitString,
    chosen: &mut Vec<usize>,
    out: &mut Vec<BitString>,
    s: usize,
) {
    if chosen.len() == w - 1 {
        // the last column must cancel the running syndrome
        if let Some(js) = by_syndrome.get(acc) {
            for &j in js {
                if j >= from {
                    let mut word = BitString::zeros(s);
                    for &i in chosen.iter().chain(std::iter::once(&j)) {
                        word.set(i, true);
                    }
                    out.push(word);
                }
            }
        }
        return;
    }
    for i in from..s {
        chosen.push(i);
        let next = acc.xor(&columns[i]);
        extend(columns, by_syndrome, w, i + 1, &next, chosen, out, s);
        chosen.pop();
    }
}

/// Swaps the membership of `moved` between `N` and `U`.
pub fn relabel(partition: &Partition, moved: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mv: HashSet<usize> = moved.iter().copied().collect();
    let mut n: Vec<usize> = partition
        .n
        .iter()
        .copied()
        .filter(|i| !mv.contains(i))
        .collect();
    let mut u: Vec<usize> = partition
        .u
        .iter()
        .copied()
        .filter(|i| !mv.contains(i))
        .collect();
    for &i in moved {
        if partition.n.contains(&i) {
            u.push(i);
        } else if partition.u.contains(&i) {
            n.push(i);
        }
    }
    n.sort_unstable();
    u.sort_unstable();
    (n, u)
}

/// Honest until `f` is known; then, if the coin would miss `desired`, moves
/// `flips` random indices between `N` and `U`.
#[derive(Debug)]
pub struct BitflipAlice {
    inner: HonestAlice,
    flips: usize,
    desired: bool,
    moved: Vec<usize>,
}

impl BitflipAlice {
    pub fn new(flips: usize, desired: bool) -> Self {
        Self {
            inner: HonestAlice::new(),
            flips: flips.max(1),
            desired,
            moved: Vec::new(),
        }
    }
}

impl AliceStrategy for BitflipAlice {
    fn name(&self) -> String {
        format!("bitflip-{}", self.flips)
    }

    fn prepare(
        &mut self,
        p: &PublicParams,
        env: &mut QuantumEnv,
        rng: &mut RandomStream,
    ) -> Result<Vec<BetaHandle>, ProtocolError> {
        self.inner.prepare(p, env, rng)
    }

    fn partition(
        &mut self,
        p: &PublicParams,
        env: &mut QuantumEnv,
        announced: &[QubitOutcome],
        rng: &mut RandomStream,
    ) -> Result<AliceReport, ProtocolError> {
        self.inner.partition(p, env, announced, rng)
    }

    fn reveal(
        &mut self,
        p: &PublicParams,
        env: &mut QuantumEnv,
        f: bool,
        rng: &mut RandomStream,
    ) -> Result<Reveal, ProtocolError> {
        let part = self.inner.partition_ref().clone();
        if self.inner.coin(f, &part.n) != self.desired {
            let mut pool: Vec<usize> = part.n.iter().chain(&part.u).copied().collect();
            rand::seq::SliceRandom::shuffle(pool.as_mut_slice(), rng);
            pool.truncate(self.flips);
            let (n, u) = relabel(&part, &pool);
            self.moved = pool;
            self.inner.set_n_u(n, u);
        }
        self.inner.reveal(p, env, f, rng)
    }

    fn coin(&self, f: bool, n: &[usize]) -> bool {
        coin_from_public(self.inner.announced(), n, f)
    }

    fn cheat_activated(&self) -> bool {
        !self.moved.is_empty()
    }

    fn diagnostics(&self) -> Diagnostics {
        Diagnostics {
            moved: self.moved.clone(),
            ..self.inner.diagnostics()
        }
    }
}

/// Honest until `f` is known; then relabels along a low-weight codeword so
/// that Bob still deduces a codeword but the coin flips. With `force`, it
/// relabels in every run regardless of the coin.
#[derive(Debug)]
pub struct BitflipCodewordAlice {
    inner: HonestAlice,
    search: Arc<RelabelSearch>,
    desired: bool,
    force: bool,
    moved: Vec<usize>,
}

impl BitflipCodewordAlice {
    pub fn new(search: Arc<RelabelSearch>, desired: bool) -> Self {
        Self {
            inner: HonestAlice::new(),
            search,
            desired,
            force: false,
            moved: Vec::new(),
        }
    }

    pub fn forced(search: Arc<RelabelSearch>) -> Self {
        Self {
            force: true,
            ..Self::new(search, false)
        }
    }
}

impl AliceStrategy for BitflipCodewordAlice {
    fn name(&self) -> String {
        if self.force {
            "bitflip-codeword-forced"
        } else {
            "bitflip-codeword"
        }
        .into()
    }

    fn prepare(
        &mut self,
        p: &PublicParams,
        env: &mut QuantumEnv,
        rng: &mut RandomStream,
    ) -> Result<Vec<BetaHandle>, ProtocolError> {
        self.inner.prepare(p, env, rng)
    }

    fn partition(
        &mut self,
        p: &PublicParams,
        env: &mut QuantumEnv,
        announced: &[QubitOutcome],
        rng: &mut RandomStream,
    ) -> Result<AliceReport, ProtocolError> {
        self.inner.partition(p, env, announced, rng)
    }

    fn reveal(
        &mut self,
        p: &PublicParams,
        env: &mut QuantumEnv,
        f: bool,
        rng: &mut RandomStream,
    ) -> Result<Reveal, ProtocolError> {
        let part = self.inner.partition_ref().clone();
        let announced = self.inner.announced().to_vec();
        let wants_change = coin_from_public(&announced, &part.n, f) != self.desired;
        if self.force || wants_change {
            let desired = self.desired;
            let force = self.force;
            let found = self.search.find(&part.l, rng, |supp| {
                force || coin_from_public(&announced, &relabel(&part, supp).0, f) == desired
            });
            if let Some(moved) = found {
                let (n, u) = relabel(&part, &moved);
                self.moved = moved;
                self.inner.set_n_u(n, u);
            }
        }
        self.inner.reveal(p, env, f, rng)
    }

    fn coin(&self, f: bool, n: &[usize]) -> bool {
        coin_from_public(self.inner.announced(), n, f)
    }

    fn cheat_activated(&self) -> bool {
        !self.moved.is_empty()
    }

    fn diagnostics(&self) -> Diagnostics {
        Diagnostics {
            moved: self.moved.clone(),
            ..self.inner.diagnostics()
        }
    }
}

/// How the product-state Alice picks her list of lies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LieGuess {
    /// Each index of `M` goes to `L` with probability 1/2.
    Coin,
    /// Flag exactly the announcements that contradict a known eigenstate
    /// (`p″ = p_i`, `q″ ≠ q_i`): these are always lies.
    Semiclassical,
}

/// Sends unentangled betas `|p_i,q_i⟩` with alpha left in `|x⟩`, so she knows
/// every would-be outcome and may choose `N` and `U` freely.
#[derive(Debug)]
pub struct ProductStateAlice {
    guess: LieGuess,
    search: Arc<RelabelSearch>,
    desired: bool,
    q: Option<BitString>,
    bases: Vec<bool>,
    alphas: Vec<Option<crate::protocol::AlphaHandle>>,
    announced: Vec<QubitOutcome>,
    partition: Partition,
    moved: Vec<usize>,
}

impl ProductStateAlice {
    pub fn new(guess: LieGuess, search: Arc<RelabelSearch>, desired: bool) -> Self {
        Self {
            guess,
            search,
            desired,
            q: None,
            bases: Vec::new(),
            alphas: Vec::new(),
            announced: Vec::new(),
            partition: Partition::default(),
            moved: Vec::new(),
        }
    }
}

impl AliceStrategy for ProductStateAlice {
    fn name(&self) -> String {
        match self.guess {
            LieGuess::Coin => "product-state".into(),
            LieGuess::Semiclassical => "product-state-semiclassical".into(),
        }
    }

    fn prepare(
        &mut self,
        p: &PublicParams,
        env: &mut QuantumEnv,
        rng: &mut RandomStream,
    ) -> Result<Vec<BetaHandle>, ProtocolError> {
        let q = p.code.sample_codeword(rng);
        let mut betas = Vec::with_capacity(q.len());
        for qi in q.iter() {
            let basis = rng.bit();
            self.bases.push(basis);
            let (a, b) = env.prepare(PairState::prepare(PairKind::Product {
                beta: QubitOutcome::from_bits(basis, qi),
            })?);
            self.alphas.push(Some(a));
            betas.push(b);
        }
        self.q = Some(q);
        Ok(betas)
    }

    fn partition(
        &mut self,
        p: &PublicParams,
        _env: &mut QuantumEnv,
        announced: &[QubitOutcome],
        rng: &mut RandomStream,
    ) -> Result<AliceReport, ProtocolError> {
        self.announced = announced.to_vec();
        let q = self.q.as_ref().expect("prepared");
        let m: Vec<usize> = (0..announced.len())
            .filter(|&i| announced[i].q != q.get(i))
            .collect();
        let mut checks = vec![check_bit_counts(announced, p.bit_threshold)];
        if checks[0].pass || p.gates == GatePolicy::RecordOnly {
            checks.push(check_m_size(m.len(), p.code.d(), p.s()));
        }
        if checks.iter().any(|c| !c.pass) && p.gates == GatePolicy::Enforce {
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
            let flag = match self.guess {
                LieGuess::Coin => rng.bit(),
                LieGuess::Semiclassical => a.p.bit() == self.bases[i],
            };
            if flag {
                part.l.push(i);
            } else {
                part.n.push(i);
            }
        }
        let l = part.l.clone();
        self.partition = part;
        Ok(AliceReport { checks, l })
    }

    fn reveal(
        &mut self,
        _p: &PublicParams,
        _env: &mut QuantumEnv,
        f: bool,
        rng: &mut RandomStream,
    ) -> Result<Reveal, ProtocolError> {
        let part = self.partition.clone();
        let announced = self.announced.clone();
        if coin_from_public(&announced, &part.n, f) != self.desired {
            let desired = self.desired;
            if let Some(moved) = self.search.find(&part.l, rng, |supp| {
                coin_from_public(&announced, &relabel(&part, supp).0, f) == desired
            }) {
                let (n, u) = relabel(&part, &moved);
                self.partition.n = n;
                self.partition.u = u;
                self.moved = moved;
            }
        }
        let n = self.partition.n.clone();
        let u = self.partition.u.clone();
        let alphas = u
            .iter()
            .map(|&i| {
                self.alphas[i]
                    .take()
                    .ok_or_else(|| ProtocolError::Malformed(format!("alpha {i} unavailable")))
            })
            .collect::<Result<_, _>>()?;
        Ok(Reveal { n, u, alphas })
    }

    fn coin(&self, f: bool, n: &[usize]) -> bool {
        coin_from_public(&self.announced, n, f)
    }

    fn cheat_activated(&self) -> bool {
        true
    }

    fn diagnostics(&self) -> Diagnostics {
        Diagnostics {
            q: self.q.clone(),
            partition: Some(self.partition.clone()),
            moved: self.moved.clone(),
            ..Default::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hamming7_weight3_codewords() {
        let code = LinearCode::hamming(3).unwrap();
        let search = RelabelSearch::new(&code);
        let w3 = search
            .candidates()
            .iter()
            .filter(|c| c.weight() == 3)
            .count();
        let w4 = search
            .candidates()
            .iter()
            .filter(|c| c.weight() == 4)
            .count();
        // weight enumerator of Hamming(7,4): 1 + 7x^3 + 7x^4 + x^7
        assert_eq!((w3, w4), (7, 7));
        assert!(search
            .candidates()
            .iter()
            .all(|c| code.is_codeword(c).unwrap()));
    }

    #[test]
    fn repetition_search_finds_all_ones() {
        let code = LinearCode::repetition(5).unwrap();
        let search = RelabelSearch::new(&code);
        assert_eq!(search.candidates().len(), 1);
        assert!(search.candidates()[0].is_all_ones());
    }

    #[test]
    fn relabel_swaps_membership() {
        let p = Partition {
            u: vec![0, 1],
            l: vec![2],
            n: vec![3, 4],
        };
        let (n, u) = relabel(&p, &[1, 3]);
        assert_eq!(n, vec![1, 4]);
        assert_eq!(u, vec![0, 3]);
    }

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(63, 4), 595_665);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(9, 8), 9);
    }
}
