//! Real-data-guided noise.
//!
//! 1. Estimate the subset's transition matrix, per-class noise ratios and
//!    flip distributions `p_{j-1}`.
//! 2. Partition the subset (grouped by clean label) into concentration
//!    intervals and count its noisy samples per interval, `num_{j-i}`.
//! 3. Partition the clean dataset the same way and budget the flips.
//! 4. Draw the budgeted samples from each interval.
//! 5. For each drawn sample, normalize `Con_{k-j}` over the foreign classes
//!    into `p_{j-2}`, blend `p_j = mu1 * p_{j-1} + mu2 * p_{j-2}` and take the
//!    argmax as the noisy label.

use rayon::prelude::*;
use serde::Serialize;

use super::budget::{compute_budget, NoiseBudget, SubsetNoiseStats};
use super::select::select_noisy_samples;
use super::{FlipRecord, NoiseAssignment, NoiseSpec, Pattern};
use crate::concentration::{
    con_row, concentration_profile, ConcentrationProfile, IntervalWeights, NUM_INTERVALS,
};
use crate::dataset::{LabeledDataset, NoisySubset};
use crate::error::{Error, Result};
use crate::transition::{
    class_noise_profile, estimate_transition, ClassNoiseProfile, TransitionMatrix,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlipFallback {
    /// Every foreign `Con_{k-j}` is zero; `p_j = p_{j-1}`.
    ConcentrationUndefined,
    /// The class has no flip distribution in the subset; uniform over the
    /// foreign classes stands in for `p_{j-1}`.
    TransitionUndefined,
    /// Both are missing; `p_j` is uniform over the foreign classes.
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlipChoice {
    pub label: usize,
    pub p_transition: Vec<f64>,
    pub p_concentration: Option<Vec<f64>>,
    pub p_final: Vec<f64>,
    pub fallback: Option<FlipFallback>,
}

/// Picks the noisy label for a sample of class `own`.
///
/// `con_row[j]` holds `Con_{k-j}` for each foreign, populated class and
/// `None` elsewhere; only those classes are candidates. Ties in the final
/// probability go to the lowest class index.
pub fn choose_flip_label(
    own: usize,
    con_row: &[Option<f64>],
    flip_row: Option<&[f64]>,
    mu1: f64,
    mu2: f64,
) -> Result<FlipChoice> {
    let c = con_row.len();
    if let Some(r) = flip_row {
        if r.len() != c {
            return Err(Error::Length(format!(
                "flip row has {} entries for {c} classes",
                r.len()
            )));
        }
    }
    let candidates: Vec<usize> = (0..c)
        .filter(|&j| j != own && con_row[j].is_some())
        .collect();
    if candidates.is_empty() {
        return Err(Error::Invalid(format!(
            "no foreign class is available to flip class {own} into"
        )));
    }
    let uniform = {
        let mut u = vec![0.0; c];
        for &j in &candidates {
            u[j] = 1.0 / candidates.len() as f64;
        }
        u
    };

    let con_total: f64 = candidates.iter().map(|&j| con_row[j].unwrap()).sum();
    let p_concentration = (con_total > 0.0).then(|| {
        let mut p = vec![0.0; c];
        for &j in &candidates {
            p[j] = con_row[j].unwrap() / con_total;
        }
        p
    });

    let (p_transition, transition_missing) = match flip_row {
        Some(r) => (r.to_vec(), false),
        None => (uniform.clone(), true),
    };

    let (p_final, fallback) = match (&p_concentration, transition_missing) {
        (Some(p2), missing) => (
            p_transition
                .iter()
                .zip(p2)
                .map(|(a, b)| mu1 * a + mu2 * b)
                .collect(),
            missing.then_some(FlipFallback::TransitionUndefined),
        ),
        (None, false) => (
            p_transition.clone(),
            Some(FlipFallback::ConcentrationUndefined),
        ),
        (None, true) => (uniform, Some(FlipFallback::Uniform)),
    };

    let mut label = candidates[0];
    for &j in &candidates[1..] {
        if p_final[j] > p_final[label] {
            label = j;
        }
    }
    Ok(FlipChoice {
        label,
        p_transition,
        p_concentration,
        p_final,
        fallback,
    })
}

/// Interval statistics of the annotated subset, grouped by clean label.
pub fn subset_noise_stats(
    subset: &NoisySubset,
    weights: IntervalWeights,
) -> Result<(TransitionMatrix, SubsetNoiseStats, ConcentrationProfile)> {
    let t = estimate_transition(subset)?;
    let noise = class_noise_profile(&t);
    let (_, profile_s) = concentration_profile(subset.as_dataset(), weights)?;
    let interval_noisy = profile_s
        .classes
        .iter()
        .map(|ci| {
            std::array::from_fn::<u64, NUM_INTERVALS, _>(|i| {
                ci.members[i]
                    .iter()
                    .filter(|&&k| subset.is_noisy(k))
                    .count() as u64
            })
        })
        .collect();
    Ok((
        t,
        SubsetNoiseStats {
            noise,
            interval_noisy,
        },
        profile_s,
    ))
}

#[derive(Debug, Clone)]
pub struct RgnOutcome {
    pub assignment: NoiseAssignment,
    pub budget: NoiseBudget,
    pub transition: TransitionMatrix,
    pub noise_profile: ClassNoiseProfile,
    pub subset_interval_noisy: Vec<[u64; NUM_INTERVALS]>,
    pub dataset_profile: ConcentrationProfile,
}

pub fn gen_rgn(ds: &LabeledDataset, subset: &NoisySubset, spec: &NoiseSpec) -> Result<RgnOutcome> {
    if spec.pattern != Pattern::Rgn {
        return Err(Error::Config(format!(
            "gen_rgn called with pattern {}",
            spec.pattern.as_str()
        )));
    }
    spec.validate(ds.n_classes())?;
    if subset.n_classes() != ds.n_classes() {
        return Err(Error::Config(format!(
            "subset uses {} classes, dataset {}",
            subset.n_classes(),
            ds.n_classes()
        )));
    }
    if subset.features().dim() != ds.features().dim() {
        return Err(Error::Config(format!(
            "subset features have dimension {}, dataset {}",
            subset.features().dim(),
            ds.features().dim()
        )));
    }
    let rho0 = spec.rho0.expect("validated");
    let weights = spec.interval_weights;

    let (transition, stats, _) = subset_noise_stats(subset, weights)?;
    let (agg, profile_c) = concentration_profile(ds, weights)?;
    let budget = compute_budget(&profile_c, &stats, rho0)?;
    let selected = select_noisy_samples(&budget, &profile_c, spec.seed)?;

    let choices: Vec<Result<FlipRecord>> = selected
        .par_iter()
        .map(|&k| {
            let own = ds.label(k);
            let row = con_row(k, &agg, ds)?;
            let flip_row = stats.noise.flip_rows[own].as_deref();
            let choice = choose_flip_label(own, &row, flip_row, spec.mu1, spec.mu2)?;
            Ok(FlipRecord {
                index: k,
                clean: own as u32,
                interval: profile_c.interval_of[k],
                chosen: choice.label as u32,
                p_transition: choice.p_transition,
                p_concentration: choice.p_concentration,
                p_final: choice.p_final,
                fallback: choice.fallback,
            })
        })
        .collect();
    let flips = choices.into_iter().collect::<Result<Vec<_>>>()?;

    let fallbacks = flips.iter().filter(|f| f.fallback.is_some()).count();
    if fallbacks > 0 {
        log::warn!("{fallbacks} flips used a fallback label distribution");
    }

    let mut assignment = NoiseAssignment::identity(ds.clean_labels());
    for f in &flips {
        assignment.labels[f.index] = f.chosen;
        assignment.flipped[f.index] = true;
    }
    assignment.flips = flips;

    Ok(RgnOutcome {
        assignment,
        budget,
        noise_profile: stats.noise,
        subset_interval_noisy: stats.interval_noisy,
        transition,
        dataset_profile: profile_c,
    })
}
