use rand::Rng;
use rayon::prelude::*;

use super::{substream, NoiseAssignment, NoiseSpec, Pattern};
use crate::dataset::LabelVector;
use crate::error::{Error, Result};

/// Samples per RNG substream.
const SAMPLE_CHUNK: usize = 4096;

const STREAM_SYMMETRIC: u64 = 0x5359_4d4d;
const STREAM_ASYMMETRIC: u64 = 0x4153_594d;

fn chunked<F>(clean: &LabelVector, seed: u64, stream: u64, redraw: F) -> NoiseAssignment
where
    F: Fn(u32, &mut rand_chacha::ChaCha8Rng) -> u32 + Sync,
{
    let labels: Vec<u32> = clean
        .labels()
        .par_chunks(SAMPLE_CHUNK)
        .enumerate()
        .flat_map_iter(|(chunk, labels)| {
            let mut rng = substream(seed, stream, chunk as u64);
            labels
                .iter()
                .map(|&l| redraw(l, &mut rng))
                .collect::<Vec<_>>()
        })
        .collect();
    let flipped = clean
        .labels()
        .iter()
        .zip(&labels)
        .map(|(a, b)| a != b)
        .collect();
    NoiseAssignment {
        clean: clean.labels().to_vec(),
        labels,
        flipped,
        n_classes: clean.n_classes(),
        flips: Vec::new(),
    }
}

/// Symmetric noise: each sample is independently redrawn with probability
/// `tau`. `symm-exc` redraws uniformly over the other `C - 1` classes;
/// `symm-inc` redraws over all `C` classes, so a redraw can return the true
/// class and the realized noise ratio is `tau * (C - 1) / C`.
pub fn gen_symmetric(clean: &LabelVector, spec: &NoiseSpec) -> Result<NoiseAssignment> {
    let inclusive = match spec.pattern {
        Pattern::SymmInc => true,
        Pattern::SymmExc => false,
        other => {
            return Err(Error::Config(format!(
                "gen_symmetric called with pattern {}",
                other.as_str()
            )))
        }
    };
    spec.validate(clean.n_classes())?;
    let tau = spec.tau.expect("validated");
    let c = clean.n_classes() as u32;
    Ok(chunked(clean, spec.seed, STREAM_SYMMETRIC, |l, rng| {
        if rng.random::<f64>() >= tau {
            return l;
        }
        if inclusive {
            rng.random_range(0..c)
        } else {
            let r = rng.random_range(0..c - 1);
            if r >= l {
                r + 1
            } else {
                r
            }
        }
    }))
}

/// Asymmetric noise: a sample whose class is in the map's domain moves to the
/// mapped class with probability `tau`.
pub fn gen_asymmetric(clean: &LabelVector, spec: &NoiseSpec) -> Result<NoiseAssignment> {
    if spec.pattern != Pattern::Asym {
        return Err(Error::Config(format!(
            "gen_asymmetric called with pattern {}",
            spec.pattern.as_str()
        )));
    }
    spec.validate(clean.n_classes())?;
    let tau = spec.tau.expect("validated");
    let mut table: Vec<Option<u32>> = vec![None; clean.n_classes()];
    for (&from, &to) in &spec.asym_map {
        table[from as usize] = Some(to);
    }
    Ok(chunked(clean, spec.seed, STREAM_ASYMMETRIC, |l, rng| {
        match table[l as usize] {
            // draw only for mapped classes so unmapped samples consume nothing
            Some(to) if rng.random::<f64>() < tau => to,
            _ => l,
        }
    }))
}
