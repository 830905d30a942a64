//! Per-interval noise statistics, closure checks and the accuracy metric.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::concentration::{ConcentrationProfile, NUM_INTERVALS};
use crate::dataset::{LabelVector, LabeledDataset};
use crate::error::{Error, Result};
use crate::generators::{NoiseAssignment, NoiseBudget};
use crate::io::write_lines;
use crate::report::round_to;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalCell {
    pub interval: usize,
    pub con_min: Option<f64>,
    pub con_max: Option<f64>,
    pub total: u64,
    pub noisy: u64,
    pub ratio: f64,
    /// The interval holds no samples; `ratio` is reported as 0.
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassIntervalReport {
    pub class: usize,
    pub size: u64,
    pub noisy: u64,
    pub cells: Vec<IntervalCell>,
    /// Share of the class's noisy samples falling in each interval; `None`
    /// when the class has no noisy samples.
    pub noisy_share: Option<Vec<f64>>,
}

impl ClassIntervalReport {
    pub fn ratios(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.ratio).collect()
    }

    pub fn noisy_counts(&self) -> [u64; NUM_INTERVALS] {
        std::array::from_fn(|i| self.cells[i].noisy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalNoiseReport {
    pub n_samples: u64,
    pub flip_count: u64,
    pub overall_ratio: f64,
    pub classes: Vec<ClassIntervalReport>,
}

pub fn interval_noise_report(
    ds: &LabeledDataset,
    assignment: &NoiseAssignment,
    profile: &ConcentrationProfile,
) -> Result<IntervalNoiseReport> {
    let n = ds.n_samples();
    if assignment.len() != n || profile.n_samples() != n {
        return Err(Error::Length(format!(
            "dataset has {n} samples, assignment {}, profile {}",
            assignment.len(),
            profile.n_samples()
        )));
    }
    if profile.n_classes() != ds.n_classes() {
        return Err(Error::Config(
            "profile and dataset disagree on class count".into(),
        ));
    }
    if assignment.clean.as_slice() != ds.clean_labels().labels() {
        return Err(Error::Invalid(
            "assignment was produced for different clean labels".into(),
        ));
    }
    let classes = profile
        .classes
        .iter()
        .enumerate()
        .map(|(j, ci)| {
            let cells: Vec<IntervalCell> = (0..NUM_INTERVALS)
                .map(|i| {
                    let members = &ci.members[i];
                    let total = members.len() as u64;
                    let noisy = members.iter().filter(|&&k| assignment.flipped[k]).count() as u64;
                    IntervalCell {
                        interval: i,
                        con_min: ci.bounds[i].map(|b| b.0),
                        con_max: ci.bounds[i].map(|b| b.1),
                        total,
                        noisy,
                        ratio: if total == 0 {
                            0.0
                        } else {
                            noisy as f64 / total as f64
                        },
                        empty: total == 0,
                    }
                })
                .collect();
            let noisy: u64 = cells.iter().map(|c| c.noisy).sum();
            let noisy_share = (noisy > 0).then(|| {
                cells
                    .iter()
                    .map(|c| c.noisy as f64 / noisy as f64)
                    .collect()
            });
            ClassIntervalReport {
                class: j,
                size: ci.len() as u64,
                noisy,
                cells,
                noisy_share,
            }
        })
        .collect();
    let flip_count = assignment.flip_count() as u64;
    Ok(IntervalNoiseReport {
        n_samples: n as u64,
        flip_count,
        overall_ratio: flip_count as f64 / n as f64,
        classes,
    })
}

impl IntervalNoiseReport {
    /// Copy with every real number rounded to `digits` decimals.
    pub fn rounded(&self, digits: i32) -> Self {
        let r = |x: f64| round_to(x, digits);
        let mut out = self.clone();
        out.overall_ratio = r(out.overall_ratio);
        for c in &mut out.classes {
            for cell in &mut c.cells {
                cell.ratio = r(cell.ratio);
                cell.con_min = cell.con_min.map(r);
                cell.con_max = cell.con_max.map(r);
            }
            if let Some(s) = &mut c.noisy_share {
                s.iter_mut().for_each(|v| *v = r(*v));
            }
        }
        out
    }

    /// One row per (class, interval) for external plotting.
    pub fn write_plot_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let fmt = |v: Option<f64>| v.map(|x| format!("{:.6}", x)).unwrap_or_default();
        write_lines(path.as_ref(), |w| {
            writeln!(w, "class,interval,con_min,con_max,total,noisy,ratio")?;
            for c in &self.classes {
                for cell in &c.cells {
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{:.6}",
                        c.class,
                        cell.interval,
                        fmt(cell.con_min),
                        fmt(cell.con_max),
                        cell.total,
                        cell.noisy,
                        cell.ratio
                    )?;
                }
            }
            Ok(())
        })
    }

    pub fn trend(&self) -> TrendSummary {
        let populated: Vec<&ClassIntervalReport> =
            self.classes.iter().filter(|c| c.size > 0).collect();
        let non_decreasing = populated
            .iter()
            .filter(|c| {
                let r: Vec<f64> = c
                    .cells
                    .iter()
                    .filter(|x| !x.empty)
                    .map(|x| x.ratio)
                    .collect();
                r.windows(2).all(|w| w[0] <= w[1])
            })
            .count();
        let max_top_ratio = populated
            .iter()
            .filter_map(|c| c.cells.last().filter(|x| !x.empty).map(|x| x.ratio))
            .fold(0.0, f64::max);
        TrendSummary {
            classes: populated.len(),
            non_decreasing_classes: non_decreasing,
            max_top_ratio,
        }
    }
}

/// How strongly noise tracks concentration across classes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendSummary {
    pub classes: usize,
    pub non_decreasing_classes: usize,
    pub max_top_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassClosure {
    pub class: usize,
    pub budget: [u64; NUM_INTERVALS],
    pub realized: [u64; NUM_INTERVALS],
    pub input_rates: [f64; NUM_INTERVALS],
    pub max_rate_error: f64,
    /// Largest deviation rounding alone can explain, `1 / Num_j`.
    pub rounding_bound: f64,
    /// Capping or a fallback changed this class's interval counts.
    pub adjusted: bool,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureReport {
    pub num_all: u64,
    pub realized_flips: u64,
    pub classes: Vec<ClassClosure>,
    pub ok: bool,
}

/// Checks a generated assignment against the budget that produced it: every
/// cell's noisy count equals `Num_{j-i}`, the total equals `Num_all`, and for
/// classes without logged adjustments the realized interval shares are within
/// rounding of the subset rates `r_{j-i}`.
pub fn check_closure(report: &IntervalNoiseReport, budget: &NoiseBudget) -> Result<ClosureReport> {
    if report.classes.len() != budget.n_classes() {
        return Err(Error::Config(
            "report and budget disagree on class count".into(),
        ));
    }
    let classes: Vec<ClassClosure> = report
        .classes
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let realized = c.noisy_counts();
            let want = budget.per_interval[j];
            let num_j = budget.per_class[j];
            let adjusted = budget.is_class_distorted(j);
            let max_rate_error = if num_j == 0 {
                0.0
            } else {
                (0..NUM_INTERVALS)
                    .map(|i| {
                        (realized[i] as f64 / num_j as f64 - budget.interval_rates[j][i]).abs()
                    })
                    .fold(0.0, f64::max)
            };
            let rounding_bound = if num_j == 0 { 0.0 } else { 1.0 / num_j as f64 };
            let ok = realized == want
                && c.noisy == num_j
                && (adjusted || num_j == 0 || max_rate_error < rounding_bound);
            ClassClosure {
                class: j,
                budget: want,
                realized,
                input_rates: budget.interval_rates[j],
                max_rate_error,
                rounding_bound,
                adjusted,
                ok,
            }
        })
        .collect();
    let ok = report.flip_count == budget.num_all && classes.iter().all(|c| c.ok);
    Ok(ClosureReport {
        num_all: budget.num_all,
        realized_flips: report.flip_count,
        classes,
        ok,
    })
}

/// Fraction of positions where `pred` equals `truth`.
pub fn overall_accuracy(pred: &LabelVector, truth: &LabelVector) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::Length(format!(
            "{} predictions for {} labels",
            pred.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::Length(
            "accuracy of an empty label set is undefined".into(),
        ));
    }
    let hits = pred
        .labels()
        .iter()
        .zip(truth.labels())
        .filter(|(a, b)| a == b)
        .count();
    Ok(hits as f64 / truth.len() as f64)
}
