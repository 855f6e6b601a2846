//! Alice's side of the four lie-detecting algorithms.

use serde::{Deserialize, Serialize};

use super::{LieDetectError, Partition};
use crate::bits::BitString;
use crate::quantum::{BasisBit, PairBank, QubitBasis, QubitOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MembershipSet {
    U,
    L,
    N,
}

/// For a measured index: `L` when the announced basis matches the basis `p`
/// revealed by alpha, `N` otherwise.
pub fn classify_measured(p_alpha: BasisBit, announced: QubitOutcome) -> MembershipSet {
    if announced.p == p_alpha {
        MembershipSet::L
    } else {
        MembershipSet::N
    }
}

fn check_len(a: usize, b: usize) -> Result<(), LieDetectError> {
    if a == b {
        Ok(())
    } else {
        Err(LieDetectError::LengthMismatch(a, b))
    }
}

/// Product-state detection: Alice knows each `|p_i,q_i⟩` she sent and flags
/// announcements in her basis with the other bit.
pub fn algorithm_i(
    prepared: &[QubitOutcome],
    announced: &[QubitOutcome],
) -> Result<Vec<usize>, LieDetectError> {
    check_len(prepared.len(), announced.len())?;
    Ok((0..prepared.len())
        .filter(|&i| prepared[i].p == announced[i].p && prepared[i].q != announced[i].q)
        .collect())
}

/// Maximally entangled detection: alpha is measured in the basis that steers
/// beta into the announced basis, so every announced basis is "right".
pub fn algorithm_ii(
    bank: &mut PairBank,
    announced: &[QubitOutcome],
) -> Result<Vec<usize>, LieDetectError> {
    check_len(bank.len(), announced.len())?;
    let mut detected = Vec::new();
    for (i, a) in announced.iter().enumerate() {
        let basis = match a.p {
            BasisBit::Computational => QubitBasis::xy(),
            BasisBit::Diagonal => QubitBasis::xy_diagonal(),
        };
        // outcome k steers beta to |p″, k⟩
        let q = bank.measure_alpha(i, &basis)?;
        if q != a.q {
            detected.push(i);
        }
    }
    Ok(detected)
}

fn partition_by(
    bank: &mut PairBank,
    announced: &[QubitOutcome],
    in_m: impl Fn(usize, &QubitOutcome) -> bool,
) -> Result<Partition, LieDetectError> {
    check_len(bank.len(), announced.len())?;
    let mut part = Partition::default();
    for (i, a) in announced.iter().enumerate() {
        if !in_m(i, a) {
            part.u.push(i);
            continue;
        }
        // |x⟩ accompanies the computational branch, |y⟩ the diagonal one
        let p = BasisBit::from_bit(bank.measure_alpha(i, &QubitBasis::xy())?);
        match classify_measured(p, *a) {
            MembershipSet::L => part.l.push(i),
            _ => part.n.push(i),
        }
    }
    Ok(part)
}

/// Partition for pairs `cos θ|x⟩|0,q_i⟩ + sin θ|y⟩|1,q_i⟩`. Indices announcing
/// `q″ = q_i` go to `U` untouched; the rest are measured and split into `L`/`N`.
pub fn algorithm_iii(
    bank: &mut PairBank,
    q: &BitString,
    announced: &[QubitOutcome],
) -> Result<Partition, LieDetectError> {
    check_len(q.len(), announced.len())?;
    partition_by(bank, announced, |i, a| a.q != q.get(i))
}

/// Partition for pairs `cos θ|x⟩|0,q_i⟩ + sin θ|y⟩|1,¬q_i⟩`. `M′` holds the
/// announcements `|0,¬q_i⟩` and `|1,q_i⟩`.
pub fn algorithm_iv(
    bank: &mut PairBank,
    q: &BitString,
    announced: &[QubitOutcome],
) -> Result<Partition, LieDetectError> {
    check_len(q.len(), announced.len())?;
    partition_by(bank, announced, |i, a| a.q != (q.get(i) ^ a.p.bit()))
}
