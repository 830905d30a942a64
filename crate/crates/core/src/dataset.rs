//! In-memory data model shared by every stage of the pipeline.
//!
//! Indices are 0-based throughout. Structures are immutable once built and
//! can be shared freely across worker threads.

use crate::error::{Error, Result};

/// Dense row-major `n_samples x dim` matrix of finite `f32` embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n_samples: usize,
    dim: usize,
    data: Vec<f32>,
}

impl FeatureMatrix {
    pub fn new(n_samples: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if n_samples == 0 || dim == 0 {
            return Err(Error::Length(format!(
                "feature matrix must be non-empty, got {n_samples}x{dim}"
            )));
        }
        let expected = n_samples.checked_mul(dim).ok_or_else(|| {
            Error::Length(format!("{n_samples}x{dim} overflows the address space"))
        })?;
        if data.len() != expected {
            return Err(Error::Length(format!(
                "expected {expected} values for {n_samples}x{dim}, got {}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(Self {
            n_samples,
            dim,
            data,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn row(&self, k: usize) -> &[f32] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    /// Gathers the given rows into a new matrix, in the order given.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * self.dim);
        for &r in rows {
            if r >= self.n_samples {
                return Err(Error::Length(format!(
                    "row {r} out of range for {} samples",
                    self.n_samples
                )));
            }
            data.extend_from_slice(self.row(r));
        }
        Self::new(rows.len(), self.dim, data)
    }
}

/// Class labels in `[0, n_classes)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    labels: Vec<u32>,
    n_classes: usize,
}

impl LabelVector {
    pub fn new(labels: Vec<u32>, n_classes: usize) -> Result<Self> {
        if n_classes == 0 {
            return Err(Error::Config("class count must be at least 1".into()));
        }
        if let Some((index, &label)) = labels
            .iter()
            .enumerate()
            .find(|(_, &l)| l as usize >= n_classes)
        {
            return Err(Error::LabelRange {
                index,
                label: label as u64,
                n_classes,
            });
        }
        Ok(Self { labels, n_classes })
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn get(&self, k: usize) -> usize {
        self.labels[k] as usize
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }
}

/// Features paired with their clean labels.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    features: FeatureMatrix,
    clean_labels: LabelVector,
    per_class_counts: Vec<usize>,
}

impl LabeledDataset {
    pub fn new(features: FeatureMatrix, clean_labels: LabelVector) -> Result<Self> {
        if features.n_samples() != clean_labels.len() {
            return Err(Error::Length(format!(
                "{} feature rows but {} labels",
                features.n_samples(),
                clean_labels.len()
            )));
        }
        let per_class_counts = clean_labels.class_counts();
        Ok(Self {
            features,
            clean_labels,
            per_class_counts,
        })
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn clean_labels(&self) -> &LabelVector {
        &self.clean_labels
    }

    pub fn per_class_counts(&self) -> &[usize] {
        &self.per_class_counts
    }

    pub fn n_samples(&self) -> usize {
        self.features.n_samples()
    }

    pub fn n_classes(&self) -> usize {
        self.clean_labels.n_classes()
    }

    #[inline]
    pub fn label(&self, k: usize) -> usize {
        self.clean_labels.get(k)
    }

    /// Number of classes with at least one member.
    pub fn classes_present(&self) -> usize {
        self.per_class_counts.iter().filter(|&&c| c > 0).count()
    }

    /// Sample indices grouped by clean class, ascending within each class.
    pub fn class_members(&self) -> Vec<Vec<usize>> {
        let mut members: Vec<Vec<usize>> = self
            .per_class_counts
            .iter()
            .map(|&c| Vec::with_capacity(c))
            .collect();
        for (k, &l) in self.clean_labels.labels().iter().enumerate() {
            members[l as usize].push(k);
        }
        members
    }
}

/// Label rows of an annotated subset, as loaded from disk and sorted by index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetRows {
    pub index: Vec<usize>,
    pub clean: LabelVector,
    pub noisy: LabelVector,
}

/// A human-annotated subset: features, clean labels and observed noisy labels.
#[derive(Debug, Clone)]
pub struct NoisySubset {
    sample_indices: Option<Vec<usize>>,
    dataset: LabeledDataset,
    noisy_labels: LabelVector,
}

impl NoisySubset {
    pub fn new(
        features: FeatureMatrix,
        clean_labels: LabelVector,
        noisy_labels: LabelVector,
        sample_indices: Option<Vec<usize>>,
    ) -> Result<Self> {
        if clean_labels.len() != noisy_labels.len() {
            return Err(Error::Length(format!(
                "{} clean labels but {} noisy labels",
                clean_labels.len(),
                noisy_labels.len()
            )));
        }
        if clean_labels.n_classes() != noisy_labels.n_classes() {
            return Err(Error::Config(format!(
                "clean labels use {} classes, noisy labels {}",
                clean_labels.n_classes(),
                noisy_labels.n_classes()
            )));
        }
        if let Some(idx) = &sample_indices {
            if idx.len() != clean_labels.len() {
                return Err(Error::Length(format!(
                    "{} sample indices for {} rows",
                    idx.len(),
                    clean_labels.len()
                )));
            }
            let mut sorted = idx.clone();
            sorted.sort_unstable();
            if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::Format(format!("duplicate sample index {}", w[0])));
            }
        }
        let dataset = LabeledDataset::new(features, clean_labels)?;
        Ok(Self {
            sample_indices,
            dataset,
            noisy_labels,
        })
    }

    /// Builds a subset whose rows point into `parent`, gathering their features.
    ///
    /// Rows whose clean label disagrees with the parent's label are kept as
    /// annotated but reported through the log.
    pub fn from_parent(rows: SubsetRows, parent: &LabeledDataset) -> Result<Self> {
        if rows.clean.n_classes() != parent.n_classes() {
            return Err(Error::Config(format!(
                "subset uses {} classes, dataset {}",
                rows.clean.n_classes(),
                parent.n_classes()
            )));
        }
        if let Some(&bad) = rows.index.iter().find(|&&i| i >= parent.n_samples()) {
            return Err(Error::Length(format!(
                "subset index {bad} out of range for a dataset of {} samples",
                parent.n_samples()
            )));
        }
        let mismatched = rows
            .index
            .iter()
            .zip(rows.clean.labels())
            .filter(|(&i, &l)| parent.label(i) != l as usize)
            .count();
        if mismatched > 0 {
            log::warn!(
                "{mismatched} subset rows carry a clean label that differs from the dataset"
            );
        }
        let features = parent.features().select_rows(&rows.index)?;
        Self::new(features, rows.clean, rows.noisy, Some(rows.index))
    }

    pub fn sample_indices(&self) -> Option<&[usize]> {
        self.sample_indices.as_deref()
    }

    pub fn features(&self) -> &FeatureMatrix {
        self.dataset.features()
    }

    pub fn clean_labels(&self) -> &LabelVector {
        self.dataset.clean_labels()
    }

    pub fn noisy_labels(&self) -> &LabelVector {
        &self.noisy_labels
    }

    /// Features with clean labels, the grouping used for concentration statistics.
    pub fn as_dataset(&self) -> &LabeledDataset {
        &self.dataset
    }

    pub fn len(&self) -> usize {
        self.noisy_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.noisy_labels.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.dataset.n_classes()
    }

    pub fn clean_class_counts(&self) -> &[usize] {
        self.dataset.per_class_counts()
    }

    pub fn is_noisy(&self, k: usize) -> bool {
        self.dataset.label(k) != self.noisy_labels.get(k)
    }

    pub fn disagreement_count(&self) -> usize {
        (0..self.len()).filter(|&k| self.is_noisy(k)).count()
    }
}
