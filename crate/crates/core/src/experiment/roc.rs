//! ROC AUC and TPR-FPR advantage estimation.

use crate::error::{Error, Result};

/// Area under the ROC curve via the Mann-Whitney statistic: the fraction of
/// (member, non-member) score pairs where the member scores higher, ties
/// counted half.
///
/// Computed from exact integer win/tie counts, so it agrees bit for bit
/// with brute-force pair enumeration and `auc(a, b) + auc(b, a) == 1.0`.
pub fn auc(member_scores: &[f64], nonmember_scores: &[f64]) -> Result<f64> {
    if member_scores.is_empty() || nonmember_scores.is_empty() {
        return Err(Error::EmptySet);
    }
    if member_scores
        .iter()
        .chain(nonmember_scores)
        .any(|s| s.is_nan())
    {
        return Err(Error::NonFiniteScore);
    }
    let mut sorted = nonmember_scores.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let mut wins: u128 = 0;
    let mut ties: u128 = 0;
    for &s in member_scores {
        let below = sorted.partition_point(|&v| v < s);
        let below_or_equal = sorted.partition_point(|&v| v <= s);
        wins += below as u128;
        ties += (below_or_equal - below) as u128;
    }
    let total = member_scores.len() as u128 * nonmember_scores.len() as u128;
    Ok((2 * wins + ties) as f64 / (2 * total) as f64)
}

/// Empirical advantage TPR - FPR of hard membership decisions.
pub fn advantage_from_decisions(
    member_decisions: &[bool],
    nonmember_decisions: &[bool],
) -> Result<f64> {
    if member_decisions.is_empty() || nonmember_decisions.is_empty() {
        return Err(Error::EmptySet);
    }
    let tpr = member_decisions.iter().filter(|&&d| d).count() as f64
        / member_decisions.len() as f64;
    let fpr = nonmember_decisions.iter().filter(|&&d| d).count() as f64
        / nonmember_decisions.len() as f64;
    Ok(tpr - fpr)
}

#[cfg(test)]
pub(crate) fn brute_force_auc(member_scores: &[f64], nonmember_scores: &[f64]) -> f64 {
    let mut wins: u128 = 0;
    let mut ties: u128 = 0;
    for &m in member_scores {
        for &n in nonmember_scores {
            if m > n {
                wins += 1;
            } else if m == n {
                ties += 1;
            }
        }
    }
    let total = member_scores.len() as u128 * nonmember_scores.len() as u128;
    (2 * wins + ties) as f64 / (2 * total) as f64
}
