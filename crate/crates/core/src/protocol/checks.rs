use std::fmt;

use serde::{Deserialize, Serialize};

use super::transcript::Party;
use crate::bits::BitString;
use crate::liedetect::{size_tolerance_check, LieDetectError, Partition};
use crate::quantum::{
    conditional_alpha, QuantumError, QubitBasis, QubitOutcome, SingleQubitState, PROTOCOL_THETA,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CheckId {
    #[serde(rename = "A4-counts")]
    A4Counts,
    #[serde(rename = "A4-Msize")]
    A4MSize,
    #[serde(rename = "B6-Lsize")]
    B6LSize,
    #[serde(rename = "B6-LallLies")]
    B6LAllLies,
    #[serde(rename = "B9.1-codeword")]
    B91Codeword,
    #[serde(rename = "B9.2-sizes")]
    B92Sizes,
    #[serde(rename = "B9.3-noTypeB")]
    B93NoTypeB,
    #[serde(rename = "B9.4-alphaStates")]
    B94AlphaStates,
}

impl CheckId {
    pub const ALL: [CheckId; 8] = [
        CheckId::A4Counts,
        CheckId::A4MSize,
        CheckId::B6LSize,
        CheckId::B6LAllLies,
        CheckId::B91Codeword,
        CheckId::B92Sizes,
        CheckId::B93NoTypeB,
        CheckId::B94AlphaStates,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckId::A4Counts => "A4-counts",
            CheckId::A4MSize => "A4-Msize",
            CheckId::B6LSize => "B6-Lsize",
            CheckId::B6LAllLies => "B6-LallLies",
            CheckId::B91Codeword => "B9.1-codeword",
            CheckId::B92Sizes => "B9.2-sizes",
            CheckId::B93NoTypeB => "B9.3-noTypeB",
            CheckId::B94AlphaStates => "B9.4-alphaStates",
        }
    }

    /// Checks that compare against a `z`-scaled allowance.
    pub fn is_statistical(self) -> bool {
        matches!(self, CheckId::B6LSize | CheckId::B92Sizes)
    }

    pub fn checker(self) -> Party {
        match self {
            CheckId::A4Counts | CheckId::A4MSize => Party::Alice,
            _ => Party::Bob,
        }
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One evaluated check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: CheckId,
    pub by: Party,
    /// Which quantity, for checks covering several.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subject: Option<String>,
    pub observed: f64,
    pub expected: f64,
    /// Allowed deviation for statistical checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub pass: bool,
}

impl CheckRecord {
    pub fn exact(id: CheckId, observed: f64, expected: f64, pass: bool) -> Self {
        Self {
            id,
            by: id.checker(),
            subject: None,
            observed,
            expected,
            tolerance: None,
            pass,
        }
    }

    pub fn with_subject(self, subject: &str) -> Self {
        Self {
            subject: Some(subject.to_string()),
            ..self
        }
    }

    /// A binomial tolerance comparison.
    pub fn statistical(
        id: CheckId,
        observed: usize,
        expected: f64,
        s: usize,
        z: f64,
    ) -> Result<Self, LieDetectError> {
        let r = size_tolerance_check(observed as f64, expected.clamp(0.0, s as f64), s, z)?;
        Ok(Self {
            id,
            by: id.checker(),
            subject: None,
            observed: r.observed,
            expected: r.expected,
            tolerance: Some(r.allowance),
            pass: r.pass,
        })
    }
}

/// `A4-counts`: both bit values appear at least `threshold` times among `q″`.
pub fn check_bit_counts(announced: &[QubitOutcome], threshold: usize) -> CheckRecord {
    let ones = announced.iter().filter(|a| a.q).count();
    let fewer = ones.min(announced.len() - ones);
    CheckRecord::exact(
        CheckId::A4Counts,
        fewer as f64,
        threshold as f64,
        fewer >= threshold,
    )
}

/// `A4-Msize`: `|M| > d + s/4`, exactly.
pub fn check_m_size(m: usize, d: usize, s: usize) -> CheckRecord {
    let bound = d as f64 + s as f64 / 4.0;
    CheckRecord::exact(CheckId::A4MSize, m as f64, bound, m as f64 > bound)
}

/// Bob's reconstruction of `q`: `q″` on `U`, its complement on `L ∪ N`.
pub fn deduce_q(announced: &[QubitOutcome], partition: &Partition) -> BitString {
    let mut q = BitString::from_bools(&announced.iter().map(|a| !a.q).collect::<Vec<_>>());
    for &i in &partition.u {
        q.set(i, announced[i].q);
    }
    q
}

/// The coin computed from public data: parity of the deduced `q` over `N`, xor `f`.
pub fn coin_from_public(announced: &[QubitOutcome], n: &[usize], f: bool) -> bool {
    n.iter().fold(f, |acc, &i| acc ^ !announced[i].q)
}

/// The alpha Bob expects for a `U` index with deduced bit `q` and his actual outcome.
pub fn expected_alpha(q: bool, actual: QubitOutcome) -> Result<SingleQubitState, QuantumError> {
    conditional_alpha(q, actual, PROTOCOL_THETA)
}

/// The step-9 alpha test basis: outcome 1 (the complement) means failure.
pub fn alpha_check_basis(q: bool, actual: QubitOutcome) -> Result<QubitBasis, QuantumError> {
    Ok(QubitBasis::from_state(expected_alpha(q, actual)?))
}

/// Exact probability that the alpha test rejects an alpha in state `alpha`.
pub fn detection_probability_b94(
    claimed_q: bool,
    actual: QubitOutcome,
    alpha: &SingleQubitState,
) -> Result<f64, QuantumError> {
    Ok(1.0 - expected_alpha(claimed_q, actual)?.overlap(alpha))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(p: bool, q: bool) -> QubitOutcome {
        QubitOutcome::from_bits(p, q)
    }

    #[test]
    fn check_ids_serialize_to_their_names() {
        for id in CheckId::ALL {
            assert_eq!(serde_json::to_string(&id).unwrap(), format!("\"{id}\""));
        }
    }

    #[test]
    fn m_size_is_strict() {
        assert!(!check_m_size(18, 3, 63).pass);
        assert!(check_m_size(19, 3, 63).pass);
        // d + s/4 = 7 exactly: equality is not enough
        assert!(!check_m_size(7, 3, 16).pass);
        assert!(check_m_size(8, 3, 16).pass);
    }

    #[test]
    fn bit_counts() {
        let zeros = vec![o(false, false); 10];
        assert!(!check_bit_counts(&zeros, 2).pass);
        let mut mixed = zeros.clone();
        mixed[0].q = true;
        mixed[1].q = true;
        assert!(check_bit_counts(&mixed, 2).pass);
    }

    #[test]
    fn deduce_with_all_u_is_identity() {
        let ann = vec![o(false, true), o(true, false), o(true, true)];
        let p = Partition {
            u: vec![0, 1, 2],
            ..Default::default()
        };
        assert_eq!(deduce_q(&ann, &p).to_string(), "101");
        let moved = Partition {
            u: vec![0, 2],
            n: vec![1],
            ..Default::default()
        };
        assert_eq!(deduce_q(&ann, &moved).to_string(), "111");
    }

    #[test]
    fn honest_alpha_never_fails_its_test() {
        for q in [false, true] {
            for actual in QubitOutcome::all() {
                let a = expected_alpha(q, actual).unwrap();
                assert!(detection_probability_b94(q, actual, &a).unwrap().abs() < 1e-12);
            }
        }
    }
}
