//! Largest-remainder (Hamilton) apportionment in exact integer arithmetic.
//!
//! Each share is `total * w_i / sum(w)`. Every item receives the floor of its
//! share and the leftover units go to the largest fractional parts. Fractional
//! parts are compared as integer remainders, so there is no floating point
//! anywhere and the result always sums to `total`.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::Zero;

/// Which item wins when two fractional parts are exactly equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieBreak {
    LowestIndex,
    HighestIndex,
}

/// Splits `total` across `weights`. Returns `None` when every weight is zero
/// and `total > 0`.
pub fn largest_remainder(total: u64, weights: &[BigUint], tie: TieBreak) -> Option<Vec<u64>> {
    let sum: BigUint = weights.iter().sum();
    if total == 0 {
        return Some(vec![0; weights.len()]);
    }
    if sum.is_zero() {
        return None;
    }
    let total_big = BigUint::from(total);
    let mut alloc = Vec::with_capacity(weights.len());
    let mut rems = Vec::with_capacity(weights.len());
    for w in weights {
        let (q, r) = (&total_big * w).div_rem(&sum);
        // q <= total, so it fits
        alloc.push(u64::try_from(q).expect("share bounded by total"));
        rems.push(r);
    }
    let assigned: u64 = alloc.iter().sum();
    let leftover = (total - assigned) as usize;

    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        rems[b].cmp(&rems[a]).then_with(|| match tie {
            TieBreak::LowestIndex => a.cmp(&b),
            TieBreak::HighestIndex => b.cmp(&a),
        })
    });
    for &i in order.iter().take(leftover) {
        alloc[i] += 1;
    }
    Some(alloc)
}

pub fn largest_remainder_u64(total: u64, weights: &[u64], tie: TieBreak) -> Option<Vec<u64>> {
    let w: Vec<BigUint> = weights.iter().map(|&v| BigUint::from(v)).collect();
    largest_remainder(total, &w, tie)
}

/// Apportionment over rational weights `num / den`. Denominators must be
/// non-zero.
pub fn largest_remainder_ratios(
    total: u64,
    weights: &[(u128, u128)],
    tie: TieBreak,
) -> Option<Vec<u64>> {
    assert!(weights.iter().all(|&(_, d)| d > 0), "zero denominator");
    let lcm = weights.iter().fold(BigUint::from(1u8), |acc, &(_, d)| {
        acc.lcm(&BigUint::from(d))
    });
    let scaled: Vec<BigUint> = weights
        .iter()
        .map(|&(n, d)| BigUint::from(n) * (&lcm / BigUint::from(d)))
        .collect();
    largest_remainder(total, &scaled, tie)
}
