use rand::seq::index;
use rayon::prelude::*;

use super::budget::NoiseBudget;
use super::substream;
use crate::concentration::{ConcentrationProfile, NUM_INTERVALS};
use crate::error::{Error, Result};

/// Draws exactly `Num_{j-i}` samples uniformly without replacement from each
/// interval `S_{j-i}`. Cell `(j, i)` uses its own substream, so the result is
/// independent of scheduling. Returned indices are sorted.
pub fn select_noisy_samples(
    budget: &NoiseBudget,
    profile_c: &ConcentrationProfile,
    seed: u64,
) -> Result<Vec<usize>> {
    if budget.n_classes() != profile_c.n_classes() {
        return Err(Error::Config(
            "budget and profile disagree on class count".into(),
        ));
    }
    let cells: Vec<(usize, usize)> = (0..budget.n_classes())
        .flat_map(|j| (0..NUM_INTERVALS).map(move |i| (j, i)))
        .collect();
    for &(j, i) in &cells {
        let want = budget.per_interval[j][i] as usize;
        let have = profile_c.classes[j].members[i].len();
        if want > have {
            return Err(Error::Invalid(format!(
                "budget asks for {want} samples from interval {i} of class {j}, which holds {have}"
            )));
        }
    }
    let picked: Vec<Vec<usize>> = cells
        .par_iter()
        .map(|&(j, i)| {
            let pool = &profile_c.classes[j].members[i];
            let want = budget.per_interval[j][i] as usize;
            if want == 0 {
                return Vec::new();
            }
            if want == pool.len() {
                return pool.clone();
            }
            let mut rng = substream(seed, j as u64, i as u64);
            index::sample(&mut rng, pool.len(), want)
                .into_iter()
                .map(|p| pool[p])
                .collect()
        })
        .collect();
    let mut out: Vec<usize> = picked.into_iter().flatten().collect();
    out.sort_unstable();
    Ok(out)
}
