//! Feature-concentration indicators and rank-based interval partitioning.
//!
//! For a sample `k` of class `c`:
//!
//! - `L_intra(k)`   = sum of squared distances to the other members of `c`
//! - `L_inter_j(k)` = sum of squared distances to the members of class `j`
//! - `L_inter(k)`   = sum of `L_inter_j(k)` over every `j != c`
//! - `Con_k`        = `L_intra(k) / L_inter(k)`
//! - `Con_{k-j}`    = `L_intra(k) / L_inter_j(k)`
//!
//! Every group sum is evaluated in O(d) from per-class aggregates using
//! `sum_i |x - x_i|^2 = m |x - mean|^2 + sum_i |x_i - mean|^2`. This is the
//! expansion `m|x|^2 - 2 x.sum + sum|x_i|^2` regrouped around the class mean,
//! which keeps both terms non-negative and avoids cancellation when the
//! features sit far from the origin.

use rayon::prelude::*;
use serde::Serialize;

use crate::apportion::{largest_remainder_u64, TieBreak};
use crate::dataset::{LabelVector, LabeledDataset};
use crate::error::{Error, Result};

pub const NUM_INTERVALS: usize = 5;

/// Rows per reduction chunk. Fixed so that floating-point summation order
/// does not depend on the worker count.
const CHUNK_ROWS: usize = 2048;

/// Relative widths of the five concentration intervals, narrowest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IntervalWeights(pub [u64; NUM_INTERVALS]);

impl Default for IntervalWeights {
    fn default() -> Self {
        Self([1, 2, 4, 8, 16])
    }
}

impl IntervalWeights {
    pub fn new(w: [u64; NUM_INTERVALS]) -> Result<Self> {
        if w.contains(&0) {
            return Err(Error::Config(format!(
                "interval weights must be positive, got {w:?}"
            )));
        }
        Ok(Self(w))
    }

    pub fn from_slice(w: &[u64]) -> Result<Self> {
        let arr: [u64; NUM_INTERVALS] = w.try_into().map_err(|_| {
            Error::Config(format!(
                "expected {NUM_INTERVALS} interval weights, got {}",
                w.len()
            ))
        })?;
        Self::new(arr)
    }

    /// Interval sizes for a class of `n` samples.
    pub fn sizes(&self, n: usize) -> [usize; NUM_INTERVALS] {
        let alloc = largest_remainder_u64(n as u64, &self.0, TieBreak::HighestIndex)
            .expect("weights are positive");
        let mut out = [0usize; NUM_INTERVALS];
        for (o, a) in out.iter_mut().zip(alloc) {
            *o = a as usize;
        }
        out
    }
}

/// Per-class sufficient statistics, accumulated in f64.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassAggregates {
    dim: usize,
    counts: Vec<usize>,
    sums: Vec<Vec<f64>>,
    sq_norm_sums: Vec<f64>,
    means: Vec<Vec<f64>>,
    scatter: Vec<f64>,
}

impl ClassAggregates {
    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, j: usize) -> usize {
        self.counts[j]
    }

    pub fn sum(&self, j: usize) -> &[f64] {
        &self.sums[j]
    }

    pub fn sq_norm_sum(&self, j: usize) -> f64 {
        self.sq_norm_sums[j]
    }

    pub fn mean(&self, j: usize) -> &[f64] {
        &self.means[j]
    }

    /// `sum_i |x_i - mean_j|^2` over the members of class `j`.
    pub fn scatter(&self, j: usize) -> f64 {
        self.scatter[j]
    }

    /// Sum of squared distances from `x` to every member of class `j`.
    #[inline]
    pub fn group_distance(&self, x: &[f32], j: usize) -> f64 {
        let m = self.counts[j];
        if m == 0 {
            return 0.0;
        }
        m as f64 * sq_dist_to(x, &self.means[j]) + self.scatter[j]
    }
}

#[inline]
fn sq_dist_to(x: &[f32], mean: &[f64]) -> f64 {
    x.iter()
        .zip(mean)
        .map(|(&a, &b)| {
            let d = a as f64 - b;
            d * d
        })
        .sum()
}

struct Partial {
    counts: Vec<usize>,
    sums: Vec<Vec<f64>>,
    sq: Vec<f64>,
}

pub fn class_aggregates(ds: &LabeledDataset) -> ClassAggregates {
    let c = ds.n_classes();
    let dim = ds.features().dim();
    let labels = ds.clean_labels().labels();
    let data = ds.features().data();

    let partials: Vec<Partial> = data
        .par_chunks(CHUNK_ROWS * dim)
        .zip(labels.par_chunks(CHUNK_ROWS))
        .map(|(rows, labs)| {
            let mut p = Partial {
                counts: vec![0; c],
                sums: vec![vec![0.0; dim]; c],
                sq: vec![0.0; c],
            };
            for (x, &l) in rows.chunks_exact(dim).zip(labs) {
                let l = l as usize;
                p.counts[l] += 1;
                let mut norm = 0.0;
                for (s, &v) in p.sums[l].iter_mut().zip(x) {
                    let v = v as f64;
                    *s += v;
                    norm += v * v;
                }
                p.sq[l] += norm;
            }
            p
        })
        .collect();

    let mut counts = vec![0usize; c];
    let mut sums = vec![vec![0.0; dim]; c];
    let mut sq_norm_sums = vec![0.0; c];
    for p in partials {
        for j in 0..c {
            counts[j] += p.counts[j];
            sq_norm_sums[j] += p.sq[j];
            for (a, b) in sums[j].iter_mut().zip(&p.sums[j]) {
                *a += b;
            }
        }
    }
    let means: Vec<Vec<f64>> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &m)| {
            if m == 0 {
                vec![0.0; dim]
            } else {
                s.iter().map(|v| v / m as f64).collect()
            }
        })
        .collect();

    let scatter_parts: Vec<Vec<f64>> = data
        .par_chunks(CHUNK_ROWS * dim)
        .zip(labels.par_chunks(CHUNK_ROWS))
        .map(|(rows, labs)| {
            let mut w = vec![0.0; c];
            for (x, &l) in rows.chunks_exact(dim).zip(labs) {
                w[l as usize] += sq_dist_to(x, &means[l as usize]);
            }
            w
        })
        .collect();
    let mut scatter = vec![0.0; c];
    for part in scatter_parts {
        scatter.iter_mut().zip(part).for_each(|(a, b)| *a += b);
    }

    ClassAggregates {
        dim,
        counts,
        sums,
        sq_norm_sums,
        means,
        scatter,
    }
}

fn check_shape(agg: &ClassAggregates, ds: &LabeledDataset) {
    debug_assert_eq!(agg.dim, ds.features().dim());
    debug_assert_eq!(agg.n_classes(), ds.n_classes());
}

pub fn l_intra(k: usize, agg: &ClassAggregates, ds: &LabeledDataset) -> f64 {
    check_shape(agg, ds);
    agg.group_distance(ds.features().row(k), ds.label(k))
}

pub fn l_inter_j(k: usize, j: usize, agg: &ClassAggregates, ds: &LabeledDataset) -> f64 {
    check_shape(agg, ds);
    agg.group_distance(ds.features().row(k), j)
}

pub fn l_inter(k: usize, agg: &ClassAggregates, ds: &LabeledDataset) -> Result<f64> {
    check_shape(agg, ds);
    if ds.classes_present() < 2 {
        return Err(Error::Invalid(
            "inter-class distance needs at least two populated classes".into(),
        ));
    }
    let own = ds.label(k);
    let x = ds.features().row(k);
    Ok((0..agg.n_classes())
        .filter(|&j| j != own)
        .map(|j| agg.group_distance(x, j))
        .sum())
}

pub fn con_k(k: usize, agg: &ClassAggregates, ds: &LabeledDataset) -> Result<f64> {
    let inter = l_inter(k, agg, ds)?;
    if inter == 0.0 {
        return Err(Error::Degenerate {
            sample: k,
            what: "L_inter",
        });
    }
    Ok(l_intra(k, agg, ds) / inter)
}

pub fn con_k_j(k: usize, j: usize, agg: &ClassAggregates, ds: &LabeledDataset) -> Result<f64> {
    if j == ds.label(k) {
        return Err(Error::Invalid(format!(
            "class {j} is the own class of sample {k}"
        )));
    }
    if agg.count(j) == 0 {
        return Err(Error::EmptyClass { class: j });
    }
    let inter = l_inter_j(k, j, agg, ds);
    if inter == 0.0 {
        return Err(Error::Degenerate {
            sample: k,
            what: "L_inter_j",
        });
    }
    Ok(l_intra(k, agg, ds) / inter)
}

/// `Con_{k-j}` for every class: `None` at the sample's own class and at
/// classes with no members.
pub fn con_row(k: usize, agg: &ClassAggregates, ds: &LabeledDataset) -> Result<Vec<Option<f64>>> {
    let own = ds.label(k);
    (0..agg.n_classes())
        .map(|j| {
            if j == own || agg.count(j) == 0 {
                Ok(None)
            } else {
                con_k_j(k, j, agg, ds).map(Some)
            }
        })
        .collect()
}

/// `Con_k` for every sample, data-parallel.
pub fn con_all(agg: &ClassAggregates, ds: &LabeledDataset) -> Result<Vec<f64>> {
    if ds.classes_present() < 2 {
        return Err(Error::Invalid(
            "concentration needs at least two populated classes".into(),
        ));
    }
    let results: Vec<Result<f64>> = (0..ds.n_samples())
        .into_par_iter()
        .map(|k| con_k(k, agg, ds))
        .collect();
    results.into_iter().collect()
}

/// One class's samples split into rank intervals of increasing width.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassIntervals {
    /// Sample indices per interval, in ascending `Con_k` order.
    pub members: [Vec<usize>; NUM_INTERVALS],
    /// Smallest and largest `Con_k` in each interval; `None` when empty.
    pub bounds: [Option<(f64, f64)>; NUM_INTERVALS],
    /// The class has fewer samples than intervals, so some stay empty.
    pub collapsed: bool,
}

impl ClassIntervals {
    pub fn sizes(&self) -> [usize; NUM_INTERVALS] {
        std::array::from_fn(|i| self.members[i].len())
    }

    pub fn len(&self) -> usize {
        self.members.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationProfile {
    pub con: Vec<f64>,
    pub interval_of: Vec<u8>,
    pub classes: Vec<ClassIntervals>,
    pub weights: IntervalWeights,
}

impl ConcentrationProfile {
    pub fn n_samples(&self) -> usize {
        self.con.len()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn collapsed_classes(&self) -> Vec<usize> {
        (0..self.classes.len())
            .filter(|&j| self.classes[j].collapsed)
            .collect()
    }
}

/// Sorts each class by `Con_k` (ties by sample index) and cuts it into
/// contiguous intervals sized by largest-remainder apportionment of the
/// weights, with remainder ties going to the wider interval.
pub fn partition_intervals(
    con: &[f64],
    labels: &LabelVector,
    weights: IntervalWeights,
) -> Result<ConcentrationProfile> {
    if con.len() != labels.len() {
        return Err(Error::Length(format!(
            "{} concentration values for {} labels",
            con.len(),
            labels.len()
        )));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); labels.n_classes()];
    for (k, &l) in labels.labels().iter().enumerate() {
        by_class[l as usize].push(k);
    }
    let mut interval_of = vec![0u8; con.len()];
    let classes = by_class
        .into_iter()
        .enumerate()
        .map(|(j, mut members)| {
            members.sort_by(|&a, &b| con[a].total_cmp(&con[b]).then(a.cmp(&b)));
            let sizes = weights.sizes(members.len());
            let collapsed = members.len() < NUM_INTERVALS;
            if collapsed && !members.is_empty() {
                log::warn!(
                    "class {j} has {} samples, fewer than {NUM_INTERVALS} intervals; sizes {sizes:?}",
                    members.len()
                );
            }
            let mut rest = members.as_slice();
            let mut cells: [Vec<usize>; NUM_INTERVALS] = Default::default();
            let mut bounds = [None; NUM_INTERVALS];
            for (i, &size) in sizes.iter().enumerate() {
                let (head, tail) = rest.split_at(size);
                rest = tail;
                for &k in head {
                    interval_of[k] = i as u8;
                }
                if let (Some(&lo), Some(&hi)) = (head.first(), head.last()) {
                    bounds[i] = Some((con[lo], con[hi]));
                }
                cells[i] = head.to_vec();
            }
            ClassIntervals {
                members: cells,
                bounds,
                collapsed,
            }
        })
        .collect();
    Ok(ConcentrationProfile {
        con: con.to_vec(),
        interval_of,
        classes,
        weights,
    })
}

/// Aggregates, `Con_k` for every sample, and the interval partition.
pub fn concentration_profile(
    ds: &LabeledDataset,
    weights: IntervalWeights,
) -> Result<(ClassAggregates, ConcentrationProfile)> {
    let agg = class_aggregates(ds);
    let con = con_all(&agg, ds)?;
    let profile = partition_intervals(&con, ds.clean_labels(), weights)?;
    Ok((agg, profile))
}
