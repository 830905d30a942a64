//! Noise transition matrix estimation from an annotated subset.
//!
//! `t[i][j] = Pr(noisy = j | clean = i)`, estimated by row-normalized
//! confusion counts. Rows with no clean support are flagged, never smoothed.

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{LabelVector, NoisySubset};
use crate::error::{Error, Result};
use crate::report::round9;

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n_classes: usize,
    counts: Vec<u64>,
    support: Vec<u64>,
    t: Vec<f64>,
}

impl TransitionMatrix {
    /// Builds the matrix from a row-major `C x C` confusion count table.
    pub fn from_counts(n_classes: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != n_classes * n_classes {
            return Err(Error::Length(format!(
                "{} counts for a {n_classes}x{n_classes} matrix",
                counts.len()
            )));
        }
        let support: Vec<u64> = counts.chunks(n_classes).map(|r| r.iter().sum()).collect();
        if support.iter().all(|&s| s == 0) {
            return Err(Error::Length(
                "transition estimate needs at least one sample".into(),
            ));
        }
        let t = counts
            .chunks(n_classes)
            .zip(&support)
            .flat_map(|(row, &s)| {
                row.iter()
                    .map(move |&c| if s == 0 { 0.0 } else { c as f64 / s as f64 })
            })
            .collect();
        Ok(Self {
            n_classes,
            counts,
            support,
            t,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn get(&self, clean: usize, noisy: usize) -> f64 {
        self.t[clean * self.n_classes + noisy]
    }

    /// The probability row for `clean`, or `None` when that class has no support.
    pub fn row(&self, clean: usize) -> Option<&[f64]> {
        self.is_row_defined(clean)
            .then(|| &self.t[clean * self.n_classes..(clean + 1) * self.n_classes])
    }

    pub fn is_row_defined(&self, clean: usize) -> bool {
        self.support[clean] > 0
    }

    pub fn count(&self, clean: usize, noisy: usize) -> u64 {
        self.counts[clean * self.n_classes + noisy]
    }

    pub fn support(&self) -> &[u64] {
        &self.support
    }

    /// Off-diagonal count of row `clean`: how many of its samples were mislabeled.
    pub fn flips(&self, clean: usize) -> u64 {
        self.support[clean] - self.count(clean, clean)
    }
}

/// Per-class noise ratios and flip distributions derived from a transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassNoiseProfile {
    /// `rho[j] = 1 - t[j][j]`; zero for rows without support.
    pub rho: Vec<f64>,
    pub rho_overall: f64,
    /// Off-diagonal row renormalized to sum to one; `None` when `rho[j] == 0`
    /// or the row has no support.
    pub flip_rows: Vec<Option<Vec<f64>>>,
    pub flips: Vec<u64>,
    pub support: Vec<u64>,
}

impl ClassNoiseProfile {
    pub fn n_classes(&self) -> usize {
        self.rho.len()
    }

    /// `rho[j]` as an exact fraction `(flips, support)`; `(0, 1)` for unsupported rows.
    pub fn rho_ratio(&self, j: usize) -> (u64, u64) {
        if self.support[j] == 0 {
            (0, 1)
        } else {
            (self.flips[j], self.support[j])
        }
    }

    pub fn is_defined(&self, j: usize) -> bool {
        self.support[j] > 0
    }
}

pub fn estimate_transition(subset: &NoisySubset) -> Result<TransitionMatrix> {
    estimate_transition_from_labels(subset.clean_labels(), subset.noisy_labels())
}

pub fn estimate_transition_from_labels(
    clean: &LabelVector,
    noisy: &LabelVector,
) -> Result<TransitionMatrix> {
    if clean.len() != noisy.len() {
        return Err(Error::Length(format!(
            "{} clean labels but {} noisy labels",
            clean.len(),
            noisy.len()
        )));
    }
    if clean.n_classes() != noisy.n_classes() {
        return Err(Error::Config(
            "clean and noisy labels disagree on class count".into(),
        ));
    }
    if clean.is_empty() {
        return Err(Error::Length(
            "cannot estimate a transition matrix from an empty subset".into(),
        ));
    }
    let c = clean.n_classes();
    let counts = clean
        .labels()
        .par_chunks(8192)
        .zip(noisy.labels().par_chunks(8192))
        .map(|(cl, no)| {
            let mut local = vec![0u64; c * c];
            for (&a, &b) in cl.iter().zip(no) {
                local[a as usize * c + b as usize] += 1;
            }
            local
        })
        .reduce(
            || vec![0u64; c * c],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let m = TransitionMatrix::from_counts(c, counts)?;
    for j in 0..c {
        if !m.is_row_defined(j) {
            log::warn!("class {j} has no support in the subset; its transition row is undefined");
        }
    }
    Ok(m)
}

pub fn class_noise_profile(t: &TransitionMatrix) -> ClassNoiseProfile {
    let c = t.n_classes();
    let support = t.support().to_vec();
    let flips: Vec<u64> = (0..c).map(|j| t.flips(j)).collect();
    let rho = (0..c)
        .map(|j| {
            if support[j] == 0 {
                0.0
            } else {
                flips[j] as f64 / support[j] as f64
            }
        })
        .collect();
    let flip_rows = (0..c)
        .map(|j| {
            (flips[j] > 0).then(|| {
                (0..c)
                    .map(|k| {
                        if k == j {
                            0.0
                        } else {
                            t.count(j, k) as f64 / flips[j] as f64
                        }
                    })
                    .collect()
            })
        })
        .collect();
    let total_support: u64 = support.iter().sum();
    let total_flips: u64 = flips.iter().sum();
    ClassNoiseProfile {
        rho,
        rho_overall: total_flips as f64 / total_support as f64,
        flip_rows,
        flips,
        support,
    }
}

/// Serializable transition summary. Field order is the JSON key order.
#[derive(Debug, Clone, Serialize)]
pub struct TransitionReport {
    pub n_classes: usize,
    pub n_samples: u64,
    pub matrix: Vec<Option<Vec<f64>>>,
    pub support: Vec<u64>,
    pub rho: Vec<Option<f64>>,
    pub rho_overall: f64,
    pub flip_rows: Vec<Option<Vec<f64>>>,
}

impl TransitionReport {
    pub fn new(t: &TransitionMatrix, profile: &ClassNoiseProfile) -> Self {
        let c = t.n_classes();
        Self {
            n_classes: c,
            n_samples: t.support().iter().sum(),
            matrix: (0..c)
                .map(|i| t.row(i).map(|r| r.iter().copied().map(round9).collect()))
                .collect(),
            support: t.support().to_vec(),
            rho: (0..c)
                .map(|j| profile.is_defined(j).then(|| round9(profile.rho[j])))
                .collect(),
            rho_overall: round9(profile.rho_overall),
            flip_rows: profile
                .flip_rows
                .iter()
                .map(|r| r.as_ref().map(|r| r.iter().copied().map(round9).collect()))
                .collect(),
        }
    }
}
