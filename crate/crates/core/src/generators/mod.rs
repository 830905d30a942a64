//! Noisy-label generators.
//!
//! Three class-conditional synthetic patterns (`symm_inc`, `symm_exc`,
//! `asym`) and the real-data-guided pattern (`rgn`), which transfers the
//! class noise ratios, flip distributions and concentration-interval noise
//! rates of an annotated subset onto a clean dataset.
//!
//! All randomness is drawn from ChaCha8 substreams keyed by the user seed and
//! a fixed cell/chunk id, so results do not depend on the worker count.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::concentration::IntervalWeights;
use crate::dataset::LabelVector;
use crate::error::{Error, Result};
use crate::io::{write_lines, ASSIGNMENT_HEADER};

pub mod budget;
pub mod rgn;
pub mod select;
pub mod symmetric;

pub use budget::{compute_budget, Adjustment, NoiseBudget, SubsetNoiseStats};
pub use rgn::{choose_flip_label, gen_rgn, FlipChoice, FlipFallback, RgnOutcome};
pub use select::select_noisy_samples;
pub use symmetric::{gen_asymmetric, gen_symmetric};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pattern {
    SymmInc,
    SymmExc,
    Asym,
    Rgn,
}

impl Pattern {
    pub fn as_str(self) -> &'static str {
        match self {
            Pattern::SymmInc => "symm-inc",
            Pattern::SymmExc => "symm-exc",
            Pattern::Asym => "asym",
            Pattern::Rgn => "rgn",
        }
    }
}

impl std::str::FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('_', "-").as_str() {
            "symm-inc" => Ok(Pattern::SymmInc),
            "symm-exc" => Ok(Pattern::SymmExc),
            "asym" => Ok(Pattern::Asym),
            "rgn" => Ok(Pattern::Rgn),
            other => Err(Error::Config(format!("unknown noise pattern `{other}`"))),
        }
    }
}

pub const DEFAULT_MU1: f64 = 0.1;
pub const DEFAULT_MU2: f64 = 0.9;

/// Parameters for one generation run. Only the fields relevant to `pattern`
/// are consulted; [`NoiseSpec::validate`] checks that they are present.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub pattern: Pattern,
    pub rho0: Option<f64>,
    pub tau: Option<f64>,
    pub asym_map: BTreeMap<u32, u32>,
    pub mu1: f64,
    pub mu2: f64,
    pub interval_weights: IntervalWeights,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn symmetric(inclusive: bool, tau: f64, seed: u64) -> Self {
        Self {
            pattern: if inclusive {
                Pattern::SymmInc
            } else {
                Pattern::SymmExc
            },
            tau: Some(tau),
            ..Self::base(seed)
        }
    }

    pub fn asymmetric(map: BTreeMap<u32, u32>, tau: f64, seed: u64) -> Self {
        Self {
            pattern: Pattern::Asym,
            tau: Some(tau),
            asym_map: map,
            ..Self::base(seed)
        }
    }

    pub fn rgn(rho0: f64, seed: u64) -> Self {
        Self {
            pattern: Pattern::Rgn,
            rho0: Some(rho0),
            ..Self::base(seed)
        }
    }

    fn base(seed: u64) -> Self {
        Self {
            pattern: Pattern::Rgn,
            rho0: None,
            tau: None,
            asym_map: BTreeMap::new(),
            mu1: DEFAULT_MU1,
            mu2: DEFAULT_MU2,
            interval_weights: IntervalWeights::default(),
            seed,
        }
    }

    pub fn validate(&self, n_classes: usize) -> Result<()> {
        let unit = |name: &str, v: Option<f64>| match v {
            None => Err(Error::Config(format!(
                "pattern {} requires {name}",
                self.pattern.as_str()
            ))),
            Some(x) if !(0.0..=1.0).contains(&x) => {
                Err(Error::Config(format!("{name} must lie in [0, 1], got {x}")))
            }
            Some(_) => Ok(()),
        };
        match self.pattern {
            Pattern::SymmInc | Pattern::SymmExc => {
                unit("tau", self.tau)?;
                if n_classes < 2 {
                    return Err(Error::Config(
                        "symmetric noise needs at least 2 classes".into(),
                    ));
                }
            }
            Pattern::Asym => {
                unit("tau", self.tau)?;
                if self.asym_map.is_empty() {
                    return Err(Error::Config(
                        "asymmetric noise needs a non-empty class map".into(),
                    ));
                }
                for (&from, &to) in &self.asym_map {
                    if from == to {
                        return Err(Error::Config(format!(
                            "asymmetric map has self-loop {from} -> {to}"
                        )));
                    }
                    if from as usize >= n_classes || to as usize >= n_classes {
                        return Err(Error::Config(format!(
                            "asymmetric map entry {from} -> {to} out of range for {n_classes} classes"
                        )));
                    }
                }
            }
            Pattern::Rgn => {
                unit("rho0", self.rho0)?;
                if self.mu1 < 0.0 || self.mu2 < 0.0 || (self.mu1 + self.mu2 - 1.0).abs() > 1e-12 {
                    return Err(Error::Config(format!(
                        "mu1 and mu2 must be non-negative and sum to 1, got {} + {}",
                        self.mu1, self.mu2
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Audit entry for one flipped sample of an RGN run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlipRecord {
    pub index: usize,
    pub clean: u32,
    pub interval: u8,
    pub chosen: u32,
    pub p_transition: Vec<f64>,
    pub p_concentration: Option<Vec<f64>>,
    pub p_final: Vec<f64>,
    pub fallback: Option<FlipFallback>,
}

/// Per-sample output of a generator.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseAssignment {
    pub clean: Vec<u32>,
    pub labels: Vec<u32>,
    pub flipped: Vec<bool>,
    pub n_classes: usize,
    /// Populated by the RGN generator only, ordered by sample index.
    pub flips: Vec<FlipRecord>,
}

impl NoiseAssignment {
    pub fn identity(clean: &LabelVector) -> Self {
        Self {
            clean: clean.labels().to_vec(),
            labels: clean.labels().to_vec(),
            flipped: vec![false; clean.len()],
            n_classes: clean.n_classes(),
            flips: Vec::new(),
        }
    }

    /// Builds an assignment from observed noisy labels; a sample counts as
    /// flipped when its noisy label differs from the clean one.
    pub fn from_labels(clean: &LabelVector, noisy: &LabelVector) -> Result<Self> {
        if clean.len() != noisy.len() {
            return Err(Error::Length(format!(
                "{} clean labels but {} noisy labels",
                clean.len(),
                noisy.len()
            )));
        }
        let flipped = clean
            .labels()
            .iter()
            .zip(noisy.labels())
            .map(|(a, b)| a != b)
            .collect();
        Ok(Self {
            clean: clean.labels().to_vec(),
            labels: noisy.labels().to_vec(),
            flipped,
            n_classes: clean.n_classes(),
            flips: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn flip_count(&self) -> usize {
        self.flipped.iter().filter(|&&f| f).count()
    }

    pub fn noise_ratio(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.flip_count() as f64 / self.len() as f64
        }
    }

    pub fn noisy_labels(&self) -> Result<LabelVector> {
        LabelVector::new(self.labels.clone(), self.n_classes)
    }

    /// `flips[clean][noisy]` counts over flipped samples.
    pub fn flip_matrix(&self) -> Vec<Vec<u64>> {
        let mut m = vec![vec![0u64; self.n_classes]; self.n_classes];
        for k in (0..self.len()).filter(|&k| self.flipped[k]) {
            m[self.clean[k] as usize][self.labels[k] as usize] += 1;
        }
        m
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_lines(path.as_ref(), |w| {
            writeln!(w, "{}", ASSIGNMENT_HEADER.join(","))?;
            for k in 0..self.len() {
                writeln!(
                    w,
                    "{k},{},{},{}",
                    self.clean[k],
                    self.labels[k],
                    u8::from(self.flipped[k])
                )?;
            }
            Ok(())
        })
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit hash of a pair of ids.
pub fn cell_hash(a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(a) ^ b.rotate_left(32))
}

/// Independent generator for cell `(a, b)`, seeded with `seed ^ cell_hash(a, b)`.
pub fn substream(seed: u64, a: u64, b: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ cell_hash(a, b))
}
