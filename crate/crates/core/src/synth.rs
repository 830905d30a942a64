//! Seeded synthetic datasets: Gaussian class blobs and annotated subsets
//! whose label noise grows with feature concentration.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::concentration::{concentration_profile, IntervalWeights, NUM_INTERVALS};
use crate::dataset::{FeatureMatrix, LabelVector, LabeledDataset, NoisySubset};
use crate::error::Result;

/// Isotropic unit-variance blobs around random class centers.
#[derive(Debug, Clone)]
pub struct BlobModel {
    pub dim: usize,
    pub centers: Vec<Vec<f32>>,
}

impl BlobModel {
    /// Centers are standard normal vectors scaled by `separation`.
    pub fn new(n_classes: usize, dim: usize, separation: f32, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers = (0..n_classes)
            .map(|_| {
                (0..dim)
                    .map(|_| separation * rng.sample::<f32, _>(StandardNormal))
                    .collect()
            })
            .collect();
        Self { dim, centers }
    }

    pub fn n_classes(&self) -> usize {
        self.centers.len()
    }

    /// `n` samples with labels cycling `0, 1, .., C-1`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<LabeledDataset> {
        let c = self.n_classes();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Vec::with_capacity(n * self.dim);
        let mut labels = Vec::with_capacity(n);
        for k in 0..n {
            let j = k % c;
            labels.push(j as u32);
            for &m in &self.centers[j] {
                data.push(m + rng.sample::<f32, _>(StandardNormal));
            }
        }
        LabeledDataset::new(
            FeatureMatrix::new(n, self.dim, data)?,
            LabelVector::new(labels, c)?,
        )
    }
}

/// Annotates `ds` with noisy labels: a sample in concentration interval `i`
/// of its class is mislabeled with probability `interval_noise[i]`, into the
/// foreign class whose mean is nearest.
pub fn annotate(
    ds: &LabeledDataset,
    interval_noise: [f64; NUM_INTERVALS],
    seed: u64,
) -> Result<NoisySubset> {
    let (agg, profile) = concentration_profile(ds, IntervalWeights::default())?;
    let c = ds.n_classes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noisy = ds.clean_labels().labels().to_vec();
    for k in 0..ds.n_samples() {
        let p = interval_noise[profile.interval_of[k] as usize];
        if rng.random::<f64>() < p {
            let own = ds.label(k);
            let x = ds.features().row(k);
            let target = (0..c)
                .filter(|&j| j != own && agg.count(j) > 0)
                .min_by(|&a, &b| {
                    let da = agg.group_distance(x, a) / agg.count(a) as f64;
                    let db = agg.group_distance(x, b) / agg.count(b) as f64;
                    da.total_cmp(&db)
                });
            if let Some(t) = target {
                noisy[k] = t as u32;
            }
        }
    }
    NoisySubset::new(
        ds.features().clone(),
        ds.clean_labels().clone(),
        LabelVector::new(noisy, c)?,
        None,
    )
}
