//! Noise budgeting: how many samples to flip per class and per
//! concentration interval.
//!
//! - `Num_all  = round(rho0 * N)`
//! - `R_j      = Nc_j * rho_j / sum_j Nc_j * rho_j`
//! - `Num_j    = Num_all * R_j`
//! - `r_{j-i}  = num_{j-i} / sum_i num_{j-i}` (noisy counts of the subset)
//! - `Num_{j-i} = Num_j * r_{j-i}`
//!
//! Fractional products are apportioned by largest remainder. Classes and
//! cells asked for more samples than they hold are capped and the surplus is
//! spread over the others in proportion to their spare capacity.

use num_bigint::BigUint;
use serde::Serialize;

use crate::apportion::{largest_remainder_ratios, largest_remainder_u64, TieBreak};
use crate::concentration::{ConcentrationProfile, NUM_INTERVALS};
use crate::error::{Error, Result};
use crate::transition::ClassNoiseProfile;

/// Noise statistics extracted from the annotated subset.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetNoiseStats {
    pub noise: ClassNoiseProfile,
    /// `num_{j-i}`: noisy subset samples per clean class and interval.
    pub interval_noisy: Vec<[u64; NUM_INTERVALS]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Adjustment {
    ClassCapped {
        class: usize,
        requested: u64,
        capacity: u64,
    },
    ClassTopUp {
        class: usize,
        added: u64,
    },
    RateFallback {
        class: usize,
    },
    IntervalCapped {
        class: usize,
        interval: usize,
        requested: u64,
        capacity: u64,
    },
    IntervalTopUp {
        class: usize,
        interval: usize,
        added: u64,
    },
}

impl Adjustment {
    /// Class whose interval counts no longer follow the subset rates exactly.
    pub fn distorted_class(&self) -> Option<usize> {
        match *self {
            Adjustment::IntervalCapped { class, .. } | Adjustment::IntervalTopUp { class, .. } => {
                Some(class)
            }
            Adjustment::RateFallback { class } => Some(class),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseBudget {
    pub n_samples: u64,
    pub num_all: u64,
    /// `R_j`
    pub class_share: Vec<f64>,
    /// `Num_j`, after class capping.
    pub per_class: Vec<u64>,
    /// `r_{j-i}` as used for allocation (fallback weights where logged).
    pub interval_rates: Vec<[f64; NUM_INTERVALS]>,
    /// `Num_{j-i}`
    pub per_interval: Vec<[u64; NUM_INTERVALS]>,
    /// `|S_{j-i}|`
    pub capacities: Vec<[u64; NUM_INTERVALS]>,
    pub adjustments: Vec<Adjustment>,
}

impl NoiseBudget {
    pub fn n_classes(&self) -> usize {
        self.per_class.len()
    }

    pub fn is_class_distorted(&self, class: usize) -> bool {
        self.adjustments
            .iter()
            .any(|a| a.distorted_class() == Some(class))
    }
}

/// `round(rho0 * n)` with halves rounded up, evaluated exactly on the
/// shortest decimal representation of `rho0` (so `0.35 * 10` gives 4).
pub fn total_flips(rho0: f64, n: u64) -> Result<u64> {
    if !(0.0..=1.0).contains(&rho0) {
        return Err(Error::Config(format!(
            "rho0 must lie in [0, 1], got {rho0}"
        )));
    }
    let text = format!("{rho0}");
    let (int_part, frac_part) = text.split_once('.').unwrap_or((&text, ""));
    let digits: BigUint = format!("{int_part}{frac_part}")
        .parse()
        .map_err(|_| Error::Config(format!("cannot read rho0 `{text}`")))?;
    let den = BigUint::from(10u8).pow(frac_part.len() as u32);
    let two = BigUint::from(2u8);
    let num = digits * BigUint::from(n) * &two + &den;
    let q = num / (den * two);
    Ok(u64::try_from(q).expect("bounded by n"))
}

/// Spreads `surplus` over the residual capacities, preferring `eligible`
/// entries and falling back to all entries. Returns the per-entry additions.
fn spread(surplus: u64, residual: &[u64], eligible: &[bool], tie: TieBreak) -> Vec<u64> {
    let mut added = vec![0u64; residual.len()];
    let mut left = surplus;
    for pass in [true, false] {
        if left == 0 {
            break;
        }
        let room: Vec<u64> = residual
            .iter()
            .zip(&added)
            .zip(eligible)
            .map(|((&r, &a), &e)| if pass && !e { 0 } else { r - a })
            .collect();
        let total_room: u64 = room.iter().sum();
        if total_room == 0 {
            continue;
        }
        let give = if total_room <= left {
            room.clone()
        } else {
            largest_remainder_u64(left, &room, tie).expect("room is non-zero")
        };
        for (a, g) in added.iter_mut().zip(&give) {
            *a += g;
        }
        left -= give.iter().sum::<u64>();
    }
    assert_eq!(left, 0, "surplus exceeds total capacity");
    added
}

pub fn compute_budget(
    profile_c: &ConcentrationProfile,
    subset: &SubsetNoiseStats,
    rho0: f64,
) -> Result<NoiseBudget> {
    let c = profile_c.n_classes();
    if subset.noise.n_classes() != c || subset.interval_noisy.len() != c {
        return Err(Error::Config(format!(
            "dataset has {c} classes but the subset statistics cover {}",
            subset.noise.n_classes()
        )));
    }
    let n = profile_c.n_samples() as u64;
    let num_all = total_flips(rho0, n)?;
    let capacities: Vec<[u64; NUM_INTERVALS]> = profile_c
        .classes
        .iter()
        .map(|ci| ci.sizes().map(|s| s as u64))
        .collect();
    let class_size: Vec<u64> = capacities.iter().map(|c| c.iter().sum()).collect();
    let mut adjustments = Vec::new();

    // R_j and Num_j
    let weights: Vec<(u128, u128)> = (0..c)
        .map(|j| {
            let (flips, support) = subset.noise.rho_ratio(j);
            (class_size[j] as u128 * flips as u128, support as u128)
        })
        .collect();
    let weight_sum: f64 = weights.iter().map(|&(a, b)| a as f64 / b as f64).sum();
    let class_share: Vec<f64> = weights
        .iter()
        .map(|&(a, b)| {
            if weight_sum > 0.0 {
                (a as f64 / b as f64) / weight_sum
            } else {
                0.0
            }
        })
        .collect();
    let mut per_class = match largest_remainder_ratios(num_all, &weights, TieBreak::LowestIndex) {
        Some(v) => v,
        None => return Err(Error::NoNoisePattern),
    };

    let mut surplus = 0;
    for j in 0..c {
        if per_class[j] > class_size[j] {
            adjustments.push(Adjustment::ClassCapped {
                class: j,
                requested: per_class[j],
                capacity: class_size[j],
            });
            surplus += per_class[j] - class_size[j];
            per_class[j] = class_size[j];
        }
    }
    if surplus > 0 {
        let residual: Vec<u64> = (0..c).map(|j| class_size[j] - per_class[j]).collect();
        let eligible: Vec<bool> = weights.iter().map(|&(a, _)| a > 0).collect();
        let added = spread(surplus, &residual, &eligible, TieBreak::LowestIndex);
        for (j, &a) in added.iter().enumerate().filter(|(_, &a)| a > 0) {
            per_class[j] += a;
            adjustments.push(Adjustment::ClassTopUp { class: j, added: a });
        }
    }

    // r_{j-i} and Num_{j-i}
    let fallback = profile_c.weights.0;
    let mut interval_rates = Vec::with_capacity(c);
    let mut per_interval = Vec::with_capacity(c);
    for j in 0..c {
        let noisy = subset.interval_noisy[j];
        let mut basis = noisy;
        if noisy.iter().sum::<u64>() == 0 {
            basis = fallback;
            if per_class[j] > 0 {
                log::info!("class {j}: subset has no noisy samples, using fallback interval rates");
                adjustments.push(Adjustment::RateFallback { class: j });
            }
        }
        let basis_sum: u64 = basis.iter().sum();
        interval_rates.push(basis.map(|v| v as f64 / basis_sum as f64));

        // wider, higher-concentration intervals win remainder ties so that
        // non-decreasing rates give non-decreasing counts
        let alloc = largest_remainder_u64(per_class[j], &basis, TieBreak::HighestIndex)
            .expect("basis is non-zero");
        let mut cells = [0u64; NUM_INTERVALS];
        let mut cell_surplus = 0;
        for i in 0..NUM_INTERVALS {
            cells[i] = alloc[i];
            if cells[i] > capacities[j][i] {
                adjustments.push(Adjustment::IntervalCapped {
                    class: j,
                    interval: i,
                    requested: cells[i],
                    capacity: capacities[j][i],
                });
                cell_surplus += cells[i] - capacities[j][i];
                cells[i] = capacities[j][i];
            }
        }
        if cell_surplus > 0 {
            let residual: Vec<u64> = (0..NUM_INTERVALS)
                .map(|i| capacities[j][i] - cells[i])
                .collect();
            let added = spread(
                cell_surplus,
                &residual,
                &[true; NUM_INTERVALS],
                TieBreak::HighestIndex,
            );
            for (i, &a) in added.iter().enumerate().filter(|(_, &a)| a > 0) {
                cells[i] += a;
                adjustments.push(Adjustment::IntervalTopUp {
                    class: j,
                    interval: i,
                    added: a,
                });
            }
        }
        per_interval.push(cells);
    }

    for a in &adjustments {
        if !matches!(a, Adjustment::RateFallback { .. }) {
            log::info!("budget adjustment: {a:?}");
        }
    }

    Ok(NoiseBudget {
        n_samples: n,
        num_all,
        class_share,
        per_class,
        interval_rates,
        per_interval,
        capacities,
        adjustments,
    })
}
