//! Deterministic label-noise synthesis for classification datasets.
//!
//! The crate covers three classical synthetic patterns (symmetric inclusive,
//! symmetric exclusive, asymmetric) and real-data-guided noise, which copies
//! the class and feature-concentration structure of a small human-annotated
//! subset onto a large clean dataset.
//!
//! Pipeline for real-data-guided noise:
//!
//! ```text
//! subset ──► transition::estimate_transition ──► class_noise_profile ─┐
//!        └─► concentration::concentration_profile ─► interval counts ─┤
//! dataset ─► concentration::concentration_profile ────────────────────┼─► generators::compute_budget
//!                                                                      │      ─► select_noisy_samples
//!                                                                      └─────► choose_flip_label
//! ```

pub mod analysis;
pub mod apportion;
pub mod concentration;
pub mod dataset;
pub mod error;
pub mod generators;
pub mod io;
pub mod report;
pub mod synth;
pub mod transition;

pub use dataset::{FeatureMatrix, LabelVector, LabeledDataset, NoisySubset, SubsetRows};
pub use error::{Error, ErrorKind, Result};
