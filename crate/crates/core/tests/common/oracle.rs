//! Reference computations that share no code path with the library.
//!
//! - concentration sums by explicit O(N^2 d) pairwise loops
//! - noise budgets in exact rational arithmetic

#![allow(dead_code, clippy::needless_range_loop)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use noiseforge_core::LabeledDataset;

pub struct BruteConcentration {
    pub intra: Vec<f64>,
    pub inter: Vec<f64>,
    /// `inter_by_class[k][j]`: squared-distance sum from `k` to class `j`
    /// (includes the own class, where it equals `intra`).
    pub inter_by_class: Vec<Vec<f64>>,
}

impl BruteConcentration {
    pub fn con(&self, k: usize) -> f64 {
        self.intra[k] / self.inter[k]
    }

    pub fn con_j(&self, k: usize, j: usize) -> f64 {
        self.intra[k] / self.inter_by_class[k][j]
    }
}

pub fn brute_concentration(ds: &LabeledDataset) -> BruteConcentration {
    let n = ds.n_samples();
    let c = ds.n_classes();
    let f = ds.features();
    let mut by_class = vec![vec![0.0f64; c]; n];
    for k in 0..n {
        let xk = f.row(k);
        for i in 0..n {
            if i == k {
                continue;
            }
            let d: f64 = xk
                .iter()
                .zip(f.row(i))
                .map(|(&a, &b)| {
                    let t = a as f64 - b as f64;
                    t * t
                })
                .sum();
            by_class[k][ds.label(i)] += d;
        }
    }
    let intra = (0..n).map(|k| by_class[k][ds.label(k)]).collect();
    let inter = (0..n)
        .map(|k| {
            (0..c)
                .filter(|&j| j != ds.label(k))
                .map(|j| by_class[k][j])
                .sum()
        })
        .collect();
    BruteConcentration {
        intra,
        inter,
        inter_by_class: by_class,
    }
}

pub fn rel_close(a: f64, b: f64, rel: f64, abs_floor: f64) -> bool {
    (a - b).abs() <= abs_floor.max(rel * a.abs().max(b.abs()))
}

fn ratio(n: u64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Hamilton apportionment over exact rational shares. `prefer_high` decides
/// ties among equal fractional parts.
pub fn hamilton(total: u64, weights: &[BigRational], prefer_high: bool) -> Option<Vec<u64>> {
    let sum: BigRational = weights
        .iter()
        .cloned()
        .fold(BigRational::zero(), |a, b| a + b);
    if total == 0 {
        return Some(vec![0; weights.len()]);
    }
    if sum.is_zero() {
        return None;
    }
    let t = BigRational::from_integer(BigInt::from(total));
    let quotas: Vec<BigRational> = weights.iter().map(|w| &t * w / &sum).collect();
    let mut seats: Vec<u64> = quotas
        .iter()
        .map(|q| q.floor().to_integer().to_u64().unwrap())
        .collect();
    let mut fracs: Vec<BigRational> = quotas.iter().map(|q| q - q.floor()).collect();
    let mut left = total - seats.iter().sum::<u64>();
    // hand out one seat at a time to the largest remaining fraction
    while left > 0 {
        let mut best: Option<usize> = None;
        for i in 0..fracs.len() {
            if fracs[i].is_negative() {
                continue;
            }
            best = match best {
                None => Some(i),
                Some(b) if fracs[i] > fracs[b] => Some(i),
                Some(b) if fracs[i] == fracs[b] && prefer_high => Some(i),
                keep => keep,
            };
        }
        let b = best.unwrap();
        seats[b] += 1;
        fracs[b] = -BigRational::one();
        left -= 1;
    }
    Some(seats)
}

fn spread(surplus: u64, residual: &[u64], eligible: &[bool], prefer_high: bool) -> Vec<u64> {
    let mut added = vec![0u64; residual.len()];
    let mut left = surplus;
    for restrict in [true, false] {
        if left == 0 {
            break;
        }
        let room: Vec<u64> = (0..residual.len())
            .map(|i| {
                if restrict && !eligible[i] {
                    0
                } else {
                    residual[i] - added[i]
                }
            })
            .collect();
        let total: u64 = room.iter().sum();
        if total == 0 {
            continue;
        }
        let give = if total <= left {
            room
        } else {
            let w: Vec<BigRational> = room.iter().map(|&r| ratio(r, 1)).collect();
            hamilton(left, &w, prefer_high).unwrap()
        };
        for i in 0..added.len() {
            added[i] += give[i];
        }
        left -= give.iter().sum::<u64>();
    }
    added
}

#[derive(Debug, PartialEq)]
pub struct OracleBudget {
    pub num_all: u64,
    pub per_class: Vec<u64>,
    pub per_interval: Vec<[u64; 5]>,
}

pub struct BudgetInput<'a> {
    pub capacities: &'a [[u64; 5]],
    pub flips: &'a [u64],
    pub support: &'a [u64],
    pub interval_noisy: &'a [[u64; 5]],
    /// `rho0 = rho0_num / rho0_den`
    pub rho0_num: u64,
    pub rho0_den: u64,
    pub fallback: [u64; 5],
}

/// Class and interval flip counts by the same rules as the library, in
/// exact rationals: round-half-up total, Hamilton apportionment (classes:
/// low index wins ties, intervals: high index wins), capacity capping with
/// surplus spread proportionally to spare capacity.
pub fn oracle_budget(inp: &BudgetInput) -> Option<OracleBudget> {
    let c = inp.capacities.len();
    let sizes: Vec<u64> = inp.capacities.iter().map(|r| r.iter().sum()).collect();
    let n: u64 = sizes.iter().sum();
    let exact_total = ratio(inp.rho0_num, inp.rho0_den) * ratio(n, 1);
    let half = ratio(1, 2);
    let num_all = (exact_total + half).floor().to_integer().to_u64().unwrap();

    let weights: Vec<BigRational> = (0..c)
        .map(|j| {
            if inp.support[j] == 0 {
                BigRational::zero()
            } else {
                ratio(sizes[j], 1) * ratio(inp.flips[j], inp.support[j])
            }
        })
        .collect();
    let mut per_class = hamilton(num_all, &weights, false)?;
    let mut surplus = 0;
    for j in 0..c {
        if per_class[j] > sizes[j] {
            surplus += per_class[j] - sizes[j];
            per_class[j] = sizes[j];
        }
    }
    if surplus > 0 {
        let residual: Vec<u64> = (0..c).map(|j| sizes[j] - per_class[j]).collect();
        let eligible: Vec<bool> = weights.iter().map(|w| !w.is_zero()).collect();
        let add = spread(surplus, &residual, &eligible, false);
        for j in 0..c {
            per_class[j] += add[j];
        }
    }

    let mut per_interval = Vec::with_capacity(c);
    for j in 0..c {
        let mut basis = inp.interval_noisy[j];
        if basis.iter().sum::<u64>() == 0 {
            basis = inp.fallback;
        }
        let total_basis: u64 = basis.iter().sum();
        let rates: Vec<BigRational> = basis.iter().map(|&b| ratio(b, total_basis)).collect();
        let alloc = hamilton(per_class[j], &rates, true).unwrap();
        let mut cells = [0u64; 5];
        let mut extra = 0;
        for i in 0..5 {
            cells[i] = alloc[i].min(inp.capacities[j][i]);
            extra += alloc[i] - cells[i];
        }
        if extra > 0 {
            let residual: Vec<u64> = (0..5).map(|i| inp.capacities[j][i] - cells[i]).collect();
            let add = spread(extra, &residual, &[true; 5], true);
            for i in 0..5 {
                cells[i] += add[i];
            }
        }
        per_interval.push(cells);
    }
    Some(OracleBudget {
        num_all,
        per_class,
        per_interval,
    })
}
