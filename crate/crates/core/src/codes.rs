//! Binary linear `(s, k, d)` codes for Alice's secret string.
//!
//! A usable code needs both parities among its codewords and a minimum
//! distance of at least `d`. Hamming presets carry their known distance; every
//! other code has its distance brute-forced when it is built.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;
use crate::rng::RandomStream;

/// Largest dimension for which codewords are enumerated.
pub const MAX_ENUMERATION_K: usize = 24;
/// Largest dimension accepted for random codes.
pub const MAX_RANDOM_K: usize = 12;
/// Default minimum number of codewords in each parity class.
pub const DEFAULT_PARITY_THRESHOLD: u128 = 2;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeError {
    #[error("expected {expected} bits, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("minimum distance of a k={0} code cannot be enumerated and is not known")]
    DistanceUnknown(usize),
    #[error("infeasible code request: {0}")]
    Infeasible(String),
    #[error("generator rows are linearly dependent")]
    RankDeficient,
    #[error("unknown code preset {0:?}")]
    UnknownPreset(String),
    #[error("code file: {0}")]
    Parse(String),
    #[error("claimed distance {claimed} but the code has distance {actual}")]
    DistanceMismatch { claimed: usize, actual: usize },
}

/// Where a code's parameters came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Preset,
    RandomVerified,
    File,
}

/// A named construction accepted by [`build_code`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CodeSpec {
    /// Hamming code with `r` parity bits: `(2^r − 1, 2^r − 1 − r, 3)`.
    Hamming {
        r: u32,
    },
    Repetition {
        s: usize,
    },
    Random {
        s: usize,
        k: usize,
        seed: u64,
    },
}

impl FromStr for CodeSpec {
    type Err = CodeError;

    /// Accepts `hamming-7-4`, `hamming-15-11`, `hamming-31-26`, `hamming-63-57`,
    /// `repetition-<s>` and `random-<s>-<k>-<seed>`.
    fn from_str(name: &str) -> Result<Self, Self::Err> {
        let unknown = || CodeError::UnknownPreset(name.to_string());
        let parts: Vec<&str> = name.split('-').collect();
        let num = |t: &str| t.parse::<usize>().map_err(|_| unknown());
        match parts.as_slice() {
            ["hamming", n, k] => {
                let (n, k) = (num(n)?, num(k)?);
                let r = (n + 1).trailing_zeros();
                if r >= 2 && n + 1 == 1 << r && n - k == r as usize && r <= 6 {
                    Ok(CodeSpec::Hamming { r })
                } else {
                    Err(unknown())
                }
            }
            ["repetition", s] => Ok(CodeSpec::Repetition { s: num(s)? }),
            ["random", s, k, seed] => Ok(CodeSpec::Random {
                s: num(s)?,
                k: num(k)?,
                seed: seed.parse().map_err(|_| unknown())?,
            }),
            _ => Err(unknown()),
        }
    }
}

impl fmt::Display for CodeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodeSpec::Hamming { r } => {
                let n = (1usize << r) - 1;
                write!(f, "hamming-{}-{}", n, n - *r as usize)
            }
            CodeSpec::Repetition { s } => write!(f, "repetition-{s}"),
            CodeSpec::Random { s, k, seed } => write!(f, "random-{s}-{k}-{seed}"),
        }
    }
}

/// A binary linear code given by a generator matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearCode {
    name: String,
    s: usize,
    k: usize,
    d: usize,
    generator: Vec<BitString>,
    provenance: Provenance,
    #[serde(skip)]
    parity_check: Vec<BitString>,
}

/// Row-reduces `rows` in place over GF(2); returns the pivot column of each nonzero row.
fn row_reduce(rows: &mut Vec<BitString>, s: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..s {
        if r == rows.len() {
            break;
        }
        let Some(found) = (r..rows.len()).find(|&i| rows[i].get(col)) else {
            continue;
        };
        rows.swap(r, found);
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && row.get(col) {
                row.xor_assign(&pivot_row);
            }
        }
        pivots.push(col);
        r += 1;
    }
    rows.truncate(r);
    pivots
}

/// Parity-check rows from a generator: one row per non-pivot column of the RREF.
fn parity_check_from(generator: &[BitString], s: usize) -> Result<Vec<BitString>, CodeError> {
    let mut rref = generator.to_vec();
    let pivots = row_reduce(&mut rref, s);
    if pivots.len() != generator.len() {
        return Err(CodeError::RankDeficient);
    }
    let mut h = Vec::with_capacity(s - pivots.len());
    for f in (0..s).filter(|c| !pivots.contains(c)) {
        let mut row = BitString::zeros(s);
        row.set(f, true);
        for (r, &p) in pivots.iter().enumerate() {
            if rref[r].get(f) {
                row.set(p, true);
            }
        }
        h.push(row);
    }
    Ok(h)
}

fn hamming_generator(r: u32) -> Vec<BitString> {
    let n = (1usize << r) - 1;
    // positions are 1-based; parity bits sit at powers of two
    (1..=n)
        .filter(|pos| !pos.is_power_of_two())
        .map(|pos| {
            let mut row = BitString::zeros(n);
            row.set(pos - 1, true);
            for t in 0..r {
                if pos >> t & 1 == 1 {
                    row.set((1 << t) - 1, true);
                }
            }
            row
        })
        .collect()
}

/// Minimum nonzero weight over the row space, visiting codewords in Gray-code order.
fn enumerate_min_distance(generator: &[BitString], s: usize) -> usize {
    let k = generator.len();
    let mut word = BitString::zeros(s);
    let mut best = usize::MAX;
    for step in 1u64..(1u64 << k) {
        word.xor_assign(&generator[step.trailing_zeros() as usize]);
        best = best.min(word.weight());
    }
    best
}

impl LinearCode {
    /// Builds a code from generator rows and verifies `d` when enumeration is possible.
    pub fn from_generator(
        name: impl Into<String>,
        generator: Vec<BitString>,
        claimed_d: Option<usize>,
        provenance: Provenance,
    ) -> Result<Self, CodeError> {
        let k = generator.len();
        let Some(s) = generator.first().map(BitString::len) else {
            return Err(CodeError::Infeasible(
                "code needs at least one generator row".into(),
            ));
        };
        if let Some(bad) = generator.iter().find(|r| r.len() != s) {
            return Err(CodeError::WrongLength {
                expected: s,
                got: bad.len(),
            });
        }
        let parity_check = parity_check_from(&generator, s)?;
        let d = if k <= MAX_ENUMERATION_K {
            let actual = enumerate_min_distance(&generator, s);
            if let Some(claimed) = claimed_d {
                if claimed != actual {
                    return Err(CodeError::DistanceMismatch { claimed, actual });
                }
            }
            actual
        } else {
            claimed_d.ok_or(CodeError::DistanceUnknown(k))?
        };
        Ok(Self {
            name: name.into(),
            s,
            k,
            d,
            generator,
            provenance,
            parity_check,
        })
    }

    pub fn hamming(r: u32) -> Result<Self, CodeError> {
        if !(2..=6).contains(&r) {
            return Err(CodeError::Infeasible(format!(
                "Hamming presets need 2 <= r <= 6, got {r}"
            )));
        }
        let name = CodeSpec::Hamming { r }.to_string();
        Self::from_generator(name, hamming_generator(r), Some(3), Provenance::Preset)
    }

    pub fn repetition(s: usize) -> Result<Self, CodeError> {
        if s < 2 {
            return Err(CodeError::Infeasible("repetition code needs s >= 2".into()));
        }
        Self::from_generator(
            format!("repetition-{s}"),
            vec![BitString::ones(s)],
            Some(s),
            Provenance::Preset,
        )
    }

    /// A random code, resampled until it has full rank, an odd-weight row and `d >= 2`.
    pub fn random(s: usize, k: usize, seed: u64) -> Result<Self, CodeError> {
        if k == 0 || k > MAX_RANDOM_K || k >= s {
            return Err(CodeError::Infeasible(format!(
                "random codes need 1 <= k <= {MAX_RANDOM_K} and k < s (got s={s}, k={k})"
            )));
        }
        let mut rng = RandomStream::new(seed);
        for _ in 0..10_000 {
            let rows: Vec<BitString> = (0..k)
                .map(|_| BitString::from_bools(&(0..s).map(|_| rng.bit()).collect::<Vec<_>>()))
                .collect();
            if !rows.iter().any(BitString::parity) {
                continue;
            }
            let mut rref = rows.clone();
            if row_reduce(&mut rref, s).len() != k {
                continue;
            }
            if enumerate_min_distance(&rows, s) < 2 {
                continue;
            }
            return Self::from_generator(
                CodeSpec::Random { s, k, seed }.to_string(),
                rows,
                None,
                Provenance::RandomVerified,
            );
        }
        Err(CodeError::Infeasible(format!(
            "no random ({s},{k}) code with d >= 2 found"
        )))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn generator(&self) -> &[BitString] {
        &self.generator
    }

    /// GF(2) product `message · G`.
    pub fn encode(&self, message: &BitString) -> Result<BitString, CodeError> {
        if message.len() != self.k {
            return Err(CodeError::WrongLength {
                expected: self.k,
                got: message.len(),
            });
        }
        let mut word = BitString::zeros(self.s);
        for (i, row) in self.generator.iter().enumerate() {
            if message.get(i) {
                word.xor_assign(row);
            }
        }
        Ok(word)
    }

    /// Zero syndrome against the parity-check matrix.
    pub fn is_codeword(&self, word: &BitString) -> Result<bool, CodeError> {
        if word.len() != self.s {
            return Err(CodeError::WrongLength {
                expected: self.s,
                got: word.len(),
            });
        }
        Ok(self.parity_check.iter().all(|h| !h.dot(word)))
    }

    /// Minimum Hamming weight of a nonzero codeword.
    pub fn min_distance(&self) -> Result<usize, CodeError> {
        if self.k <= MAX_ENUMERATION_K {
            Ok(enumerate_min_distance(&self.generator, self.s))
        } else if self.provenance == Provenance::Preset {
            Ok(self.d)
        } else {
            Err(CodeError::DistanceUnknown(self.k))
        }
    }

    /// `(even, odd)` codeword counts. If any generator row is odd, the odd
    /// codewords are a coset of the even subcode and both classes have `2^(k−1)`.
    pub fn parity_census(&self) -> (u128, u128) {
        let total = 1u128 << self.k;
        if self.generator.iter().any(BitString::parity) {
            (total / 2, total / 2)
        } else {
            (total, 0)
        }
    }

    /// Both parity classes hold at least `min(threshold, 2^(k−1))` codewords.
    pub fn parity_requirement_holds(&self, threshold: u128) -> bool {
        let (even, odd) = self.parity_census();
        let need = threshold.min(1u128 << (self.k - 1)).max(1);
        even >= need && odd >= need
    }

    /// Uniform codeword, avoiding the all-zero and all-one words whenever the
    /// code has any other codeword.
    pub fn sample_codeword(&self, rng: &mut RandomStream) -> BitString {
        let trivial_only =
            self.k == 1 && (self.generator[0].is_all_ones() || self.generator[0].is_zero());
        loop {
            let msg = BitString::from_bools(&(0..self.k).map(|_| rng.bit()).collect::<Vec<_>>());
            let word = self.encode(&msg).expect("message length equals k");
            if trivial_only || !(word.is_zero() || word.is_all_ones()) {
                return word;
            }
        }
    }

    /// All codewords, for `k <= MAX_ENUMERATION_K`.
    pub fn codewords(&self) -> Result<Vec<BitString>, CodeError> {
        if self.k > MAX_ENUMERATION_K {
            return Err(CodeError::DistanceUnknown(self.k));
        }
        let mut word = BitString::zeros(self.s);
        let mut out = Vec::with_capacity(1 << self.k);
        out.push(word.clone());
        for step in 1u64..(1u64 << self.k) {
            word.xor_assign(&self.generator[step.trailing_zeros() as usize]);
            out.push(word.clone());
        }
        Ok(out)
    }

    /// Parses the text descriptor: a `s k d` header, then `k` rows of `0`/`1`.
    pub fn parse_descriptor(name: impl Into<String>, text: &str) -> Result<Self, CodeError> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| CodeError::Parse("empty file".into()))?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| CodeError::Parse(format!("bad header {header:?}")))
            })
            .collect::<Result<_, _>>()?;
        let [s, k, d] = nums[..] else {
            return Err(CodeError::Parse(format!(
                "header must be `s k d`, got {header:?}"
            )));
        };
        let rows: Vec<BitString> = lines
            .map(|l| {
                l.parse::<BitString>()
                    .map_err(|e| CodeError::Parse(e.to_string()))
            })
            .collect::<Result<_, _>>()?;
        if rows.len() != k {
            return Err(CodeError::Parse(format!(
                "header says k={k} but found {} rows",
                rows.len()
            )));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != s) {
            return Err(CodeError::WrongLength {
                expected: s,
                got: bad.len(),
            });
        }
        Self::from_generator(name, rows, Some(d), Provenance::File)
    }

    pub fn to_descriptor(&self) -> String {
        let mut out = format!("{} {} {}\n", self.s, self.k, self.d);
        for row in &self.generator {
            out.push_str(&row.to_string());
            out.push('\n');
        }
        out
    }
}

/// Builds one of the named constructions.
pub fn build_code(spec: &CodeSpec) -> Result<LinearCode, CodeError> {
    match *spec {
        CodeSpec::Hamming { r } => LinearCode::hamming(r),
        CodeSpec::Repetition { s } => LinearCode::repetition(s),
        CodeSpec::Random { s, k, seed } => LinearCode::random(s, k, seed),
    }
}

/// Lower end of the admissible `f_a + f_c` window, `2d/s`.
pub fn feasibility_lower_bound(code: &LinearCode) -> f64 {
    2.0 * code.d() as f64 / code.s() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h74() -> LinearCode {
        LinearCode::hamming(3).unwrap()
    }

    #[test]
    fn hamming_parameters() {
        for (r, s, k) in [(3, 7, 4), (4, 15, 11), (5, 31, 26), (6, 63, 57)] {
            let c = LinearCode::hamming(r).unwrap();
            assert_eq!((c.s(), c.k(), c.d()), (s, k, 3));
        }
        assert_eq!(LinearCode::hamming(4).unwrap().min_distance().unwrap(), 3);
    }

    #[test]
    fn unit_message_gives_first_row() {
        let c = h74();
        let msg: BitString = "1000".parse().unwrap();
        assert_eq!(c.encode(&msg).unwrap(), c.generator()[0]);
        assert!(c.encode(&BitString::zeros(4)).unwrap().is_zero());
        assert!(matches!(
            c.encode(&BitString::zeros(3)),
            Err(CodeError::WrongLength { .. })
        ));
    }

    #[test]
    fn hamming74_has_parity_bits_at_powers_of_two() {
        // data bit at position 3 (1-based) is covered by parity positions 1 and 2
        assert_eq!(h74().generator()[0].to_string(), "1110000");
    }

    #[test]
    fn single_flip_leaves_code() {
        let c = h74();
        let mut rng = RandomStream::new(5);
        for _ in 0..50 {
            let mut w = c.sample_codeword(&mut rng);
            assert!(c.is_codeword(&w).unwrap());
            w.flip(rng.below(7));
            assert!(!c.is_codeword(&w).unwrap());
        }
    }

    #[test]
    fn repetition_parameters_and_census() {
        let c = LinearCode::repetition(5).unwrap();
        assert_eq!((c.s(), c.k(), c.d()), (5, 1, 5));
        assert_eq!(c.parity_census(), (1, 1));
        assert!(c.parity_requirement_holds(DEFAULT_PARITY_THRESHOLD));
        assert_eq!(
            LinearCode::repetition(7).unwrap().min_distance().unwrap(),
            7
        );
    }

    #[test]
    fn census_examples() {
        assert_eq!(h74().parity_census(), (8, 8));
        assert_eq!(
            LinearCode::hamming(4).unwrap().parity_census(),
            (1024, 1024)
        );
        let even_only = LinearCode::from_generator(
            "even",
            vec!["1100".parse().unwrap()],
            None,
            Provenance::File,
        )
        .unwrap();
        assert_eq!(even_only.parity_census(), (2, 0));
        assert!(!even_only.parity_requirement_holds(DEFAULT_PARITY_THRESHOLD));
    }

    #[test]
    fn random_code_is_deterministic_and_verified() {
        let a = LinearCode::random(20, 8, 99).unwrap();
        let b = LinearCode::random(20, 8, 99).unwrap();
        assert_eq!(a, b);
        assert!(a.d() >= 2);
        assert_eq!(a.min_distance().unwrap(), a.d());
        assert!(a.generator().iter().any(BitString::parity));
        assert_eq!(a.provenance(), Provenance::RandomVerified);
        assert!(LinearCode::random(20, 13, 1).is_err());
    }

    #[test]
    fn spec_names_round_trip() {
        for name in [
            "hamming-7-4",
            "hamming-63-57",
            "repetition-9",
            "random-20-8-3",
        ] {
            assert_eq!(name.parse::<CodeSpec>().unwrap().to_string(), name);
        }
        assert!("hamming-8-4".parse::<CodeSpec>().is_err());
        assert!("golay-23".parse::<CodeSpec>().is_err());
    }

    #[test]
    fn descriptor_round_trip_and_distance_check() {
        let c = h74();
        let back = LinearCode::parse_descriptor("file", &c.to_descriptor()).unwrap();
        assert_eq!(back.generator(), c.generator());
        assert_eq!(back.d(), 3);
        let lying = c.to_descriptor().replacen("7 4 3", "7 4 4", 1);
        assert_eq!(
            LinearCode::parse_descriptor("file", &lying),
            Err(CodeError::DistanceMismatch {
                claimed: 4,
                actual: 3
            })
        );
        assert!(LinearCode::parse_descriptor("file", "3 2 1\n110\n110\n").is_err());
    }

    #[test]
    fn feasibility_bound_for_largest_hamming() {
        let c = LinearCode::hamming(6).unwrap();
        assert!((feasibility_lower_bound(&c) - 6.0 / 63.0).abs() < 1e-15);
    }
}
