#![allow(dead_code)]

#[path = "../../../core/tests/common/oracle.rs"]
pub mod oracle;

use std::ffi::OsStr;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use noiseforge_core::io::{write_features, write_labels, write_subset};
use noiseforge_core::synth::{annotate, BlobModel};
use noiseforge_core::LabeledDataset;

pub const RISING: [f64; 5] = [0.0, 0.03, 0.06, 0.15, 0.35];

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub ds: LabeledDataset,
    pub features: PathBuf,
    pub labels: PathBuf,
    /// Subset CSV whose index column refers to rows of `features`.
    pub subset: PathBuf,
    /// Self-contained subset: its own features and a CSV indexed `0..m`.
    pub subset_features: PathBuf,
    pub subset_own: PathBuf,
}

impl Fixture {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

/// Blob dataset of `n` samples plus an annotated subset made of every fifth
/// row, with noise rising across concentration intervals.
pub fn fixture(n: usize, classes: usize, dim: usize, seed: u64) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let model = BlobModel::new(classes, dim, 1.5, seed);
    let ds = model.sample(n, seed + 1).unwrap();
    let rows: Vec<usize> = (0..n).step_by(5).collect();
    let sub_ds = LabeledDataset::new(
        ds.features().select_rows(&rows).unwrap(),
        noiseforge_core::LabelVector::new(
            rows.iter().map(|&k| ds.label(k) as u32).collect(),
            classes,
        )
        .unwrap(),
    )
    .unwrap();
    let sub = annotate(&sub_ds, RISING, seed + 2).unwrap();

    let features = dir.path().join("features.rgnf");
    let labels = dir.path().join("labels.csv");
    let subset = dir.path().join("subset.csv");
    let subset_features = dir.path().join("subset.rgnf");
    let subset_own = dir.path().join("subset_own.csv");
    write_features(ds.features(), &features).unwrap();
    write_labels(ds.clean_labels(), &labels).unwrap();
    write_subset(sub.clean_labels(), sub.noisy_labels(), Some(&rows), &subset).unwrap();
    write_features(sub.features(), &subset_features).unwrap();
    write_subset(sub.clean_labels(), sub.noisy_labels(), None, &subset_own).unwrap();
    Fixture {
        dir,
        ds,
        features,
        labels,
        subset,
        subset_features,
        subset_own,
    }
}

pub fn noiseforge<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_noiseforge"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

pub fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}
