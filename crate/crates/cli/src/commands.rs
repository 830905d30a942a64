use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use noiseforge_core::analysis::{
    check_closure, interval_noise_report, ClosureReport, TrendSummary,
};
use noiseforge_core::concentration::{concentration_profile, IntervalWeights, NUM_INTERVALS};
use noiseforge_core::generators::{
    gen_asymmetric, gen_rgn, gen_symmetric, FlipRecord, NoiseAssignment, NoiseBudget, NoiseSpec,
    Pattern, RgnOutcome, DEFAULT_MU1, DEFAULT_MU2,
};
use noiseforge_core::io::{
    read_features, read_labels, read_noisy_labels, read_noisy_subset, read_subset_rows,
    FEATURE_FORMAT_VERSION,
};
use noiseforge_core::report::{round6, round9};
use noiseforge_core::transition::{
    class_noise_profile, estimate_transition_from_labels, TransitionReport,
};
use noiseforge_core::{LabelVector, LabeledDataset, NoisySubset};
use serde::Serialize;

use crate::args::{AnalyzeArgs, ConcentrationArgs, GenerateArgs, TableFormat, TransitionArgs};
use crate::config::{parse_asym_map, RunConfig};
use crate::error::{config_err, CliError, CliResult};

/// Upper bound on class ids accepted when `--classes` is not given.
const MAX_INFERRED_CLASSES: usize = 1 << 16;

fn required<T>(v: Option<T>, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| config_err(format!("missing required --{flag}")))
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(|source| CliError::Output {
        path: path.to_path_buf(),
        source,
    })
}

fn relabel(l: LabelVector, classes: usize) -> CliResult<LabelVector> {
    Ok(LabelVector::new(l.labels().to_vec(), classes)?)
}

fn max_class(labels: &[&LabelVector]) -> usize {
    labels
        .iter()
        .flat_map(|l| l.labels().iter())
        .max()
        .map_or(1, |&m| m as usize + 1)
}

fn settle_classes(given: Option<usize>, seen: &[&LabelVector]) -> CliResult<usize> {
    match given {
        Some(0) => Err(config_err("--classes must be at least 1")),
        Some(c) => Ok(c),
        None => {
            let c = max_class(seen);
            log::info!("inferred {c} classes from the label files");
            Ok(c)
        }
    }
}

fn load_labels(path: &Path, classes: Option<usize>) -> CliResult<LabelVector> {
    Ok(read_labels(path, classes.unwrap_or(MAX_INFERRED_CLASSES))?)
}

fn load_dataset(
    features: &Path,
    labels: &Path,
    classes: Option<usize>,
) -> CliResult<LabeledDataset> {
    let l = load_labels(labels, classes)?;
    let c = settle_classes(classes, &[&l])?;
    let f = read_features(features)?;
    Ok(LabeledDataset::new(f, relabel(l, c)?)?)
}

fn interval_weights(cfg: &RunConfig) -> CliResult<IntervalWeights> {
    match &cfg.interval_weights {
        None => Ok(IntervalWeights::default()),
        Some(w) => Ok(IntervalWeights::from_slice(w)?),
    }
}

// transition

pub fn transition(args: TransitionArgs, file: RunConfig) -> CliResult<()> {
    let cfg = RunConfig {
        subset: args.subset,
        classes: args.classes,
        ..Default::default()
    }
    .over(file);
    let path = required(cfg.subset, "subset")?;
    let rows = read_subset_rows(&path, cfg.classes.unwrap_or(MAX_INFERRED_CLASSES))?;
    let c = settle_classes(cfg.classes, &[&rows.clean, &rows.noisy])?;
    let t = estimate_transition_from_labels(&relabel(rows.clean, c)?, &relabel(rows.noisy, c)?)?;
    let profile = class_noise_profile(&t);
    log::info!("overall subset noise ratio {:.4}", profile.rho_overall);
    write_json(&args.out, &TransitionReport::new(&t, &profile))
}

// concentration

#[derive(Serialize)]
struct IntervalBounds {
    interval: usize,
    size: usize,
    con_min: Option<f64>,
    con_max: Option<f64>,
}

#[derive(Serialize)]
struct ClassBounds {
    class: usize,
    size: usize,
    collapsed: bool,
    intervals: Vec<IntervalBounds>,
}

#[derive(Serialize)]
struct SampleCon {
    index: usize,
    class: usize,
    con: f64,
    interval: u8,
}

#[derive(Serialize)]
struct ConcentrationOutput {
    n_samples: usize,
    n_classes: usize,
    interval_weights: [u64; NUM_INTERVALS],
    classes: Vec<ClassBounds>,
    samples: Vec<SampleCon>,
}

pub fn concentration(args: ConcentrationArgs, file: RunConfig) -> CliResult<()> {
    let cfg = RunConfig {
        features: args.features,
        labels: args.labels,
        classes: args.classes,
        ..Default::default()
    }
    .over(file);
    let ds = load_dataset(
        &required(cfg.features.clone(), "features")?,
        &required(cfg.labels.clone(), "labels")?,
        cfg.classes,
    )?;
    let weights = interval_weights(&cfg)?;
    let (_, profile) = concentration_profile(&ds, weights)?;

    let format =
        args.format
            .unwrap_or_else(|| match args.out.extension().and_then(|e| e.to_str()) {
                Some(e) if e.eq_ignore_ascii_case("csv") => TableFormat::Csv,
                _ => TableFormat::Json,
            });
    match format {
        TableFormat::Csv => {
            let out = &args.out;
            let wrap = |source| CliError::Output {
                path: out.clone(),
                source,
            };
            let mut w = BufWriter::new(std::fs::File::create(out).map_err(wrap)?);
            writeln!(w, "index,class,con,interval").map_err(wrap)?;
            for k in 0..ds.n_samples() {
                writeln!(
                    w,
                    "{k},{},{},{}",
                    ds.label(k),
                    profile.con[k],
                    profile.interval_of[k]
                )
                .map_err(wrap)?;
            }
            w.flush().map_err(wrap)
        }
        TableFormat::Json => {
            let classes = profile
                .classes
                .iter()
                .enumerate()
                .map(|(j, ci)| ClassBounds {
                    class: j,
                    size: ci.len(),
                    collapsed: ci.collapsed,
                    intervals: (0..NUM_INTERVALS)
                        .map(|i| IntervalBounds {
                            interval: i,
                            size: ci.members[i].len(),
                            con_min: ci.bounds[i].map(|b| b.0),
                            con_max: ci.bounds[i].map(|b| b.1),
                        })
                        .collect(),
                })
                .collect();
            let samples = (0..ds.n_samples())
                .map(|k| SampleCon {
                    index: k,
                    class: ds.label(k),
                    con: profile.con[k],
                    interval: profile.interval_of[k],
                })
                .collect();
            write_json(
                &args.out,
                &ConcentrationOutput {
                    n_samples: ds.n_samples(),
                    n_classes: ds.n_classes(),
                    interval_weights: weights.0,
                    classes,
                    samples,
                },
            )
        }
    }
}

// generate / validate

fn generate_flags(args: GenerateArgs) -> CliResult<RunConfig> {
    Ok(RunConfig {
        pattern: args.pattern,
        seed: args.seed,
        rho0: args.rho0,
        tau: args.tau,
        asym_map: args.asym_map.as_deref().map(parse_asym_map).transpose()?,
        mu1: args.mu1,
        mu2: args.mu2,
        interval_weights: args.interval_weights,
        classes: args.classes,
        features: args.features,
        labels: args.labels,
        subset: args.subset,
        subset_features: args.subset_features,
        noisy: None,
        out: args.out,
        audit: args.audit,
    })
}

/// Checks the merged config against the pattern, fills defaults, and drops
/// settings the pattern does not use so that the echoed stanza is exact.
fn resolve_generate(mut cfg: RunConfig) -> CliResult<(RunConfig, NoiseSpec)> {
    let pattern: Pattern = required(cfg.pattern.as_deref(), "pattern")?.parse()?;
    cfg.pattern = Some(pattern.as_str().to_string());
    let seed = required(cfg.seed, "seed")?;
    required(cfg.labels.as_ref(), "labels")?;

    let ignore = |name: &str, present: bool| {
        if present {
            log::warn!(
                "{name} is not used by pattern {}; ignoring it",
                pattern.as_str()
            );
        }
    };
    let spec = match pattern {
        Pattern::SymmInc | Pattern::SymmExc | Pattern::Asym => {
            ignore("rho0", cfg.rho0.take().is_some());
            ignore("mu1", cfg.mu1.take().is_some());
            ignore("mu2", cfg.mu2.take().is_some());
            ignore("interval_weights", cfg.interval_weights.take().is_some());
            ignore("subset", cfg.subset.take().is_some());
            ignore("subset_features", cfg.subset_features.take().is_some());
            let tau = required(cfg.tau, "tau")?;
            if pattern == Pattern::Asym {
                let map = required(cfg.asym_map.clone(), "asym-map")?;
                NoiseSpec::asymmetric(map, tau, seed)
            } else {
                ignore("asym_map", cfg.asym_map.take().is_some());
                NoiseSpec::symmetric(pattern == Pattern::SymmInc, tau, seed)
            }
        }
        Pattern::Rgn => {
            ignore("tau", cfg.tau.take().is_some());
            ignore("asym_map", cfg.asym_map.take().is_some());
            let rho0 = required(cfg.rho0, "rho0")?;
            required(cfg.features.as_ref(), "features")?;
            if cfg.subset.is_none() {
                return Err(config_err("pattern rgn requires --subset"));
            }
            let (mu1, mu2) = match (cfg.mu1, cfg.mu2) {
                (None, None) => (DEFAULT_MU1, DEFAULT_MU2),
                (Some(a), None) => (a, 1.0 - a),
                (None, Some(b)) => (1.0 - b, b),
                (Some(a), Some(b)) => (a, b),
            };
            cfg.mu1 = Some(mu1);
            cfg.mu2 = Some(mu2);
            let weights = interval_weights(&cfg)?;
            cfg.interval_weights = Some(weights.0.to_vec());
            NoiseSpec {
                mu1,
                mu2,
                interval_weights: weights,
                ..NoiseSpec::rgn(rho0, seed)
            }
        }
    };
    Ok((cfg, spec))
}

struct Generated {
    run: RunConfig,
    assignment: NoiseAssignment,
    rgn: Option<(LabeledDataset, RgnOutcome)>,
}

fn load_subset(cfg: &RunConfig, ds: &LabeledDataset) -> CliResult<NoisySubset> {
    let path = cfg.subset.as_ref().expect("resolved");
    let c = ds.n_classes();
    Ok(match &cfg.subset_features {
        Some(sf) => read_noisy_subset(path, c, read_features(sf)?)?,
        None => NoisySubset::from_parent(read_subset_rows(path, c)?, ds)?,
    })
}

fn run_generation(cfg: RunConfig) -> CliResult<Generated> {
    let (mut run, spec) = resolve_generate(cfg)?;
    let labels_path = run.labels.clone().expect("resolved");
    let labels = load_labels(&labels_path, run.classes)?;

    if spec.pattern != Pattern::Rgn {
        // map entries may name classes absent from the label file
        let map_top = spec.asym_map.iter().flat_map(|(a, b)| [*a, *b]).max();
        let c = match run.classes {
            Some(c) => settle_classes(Some(c), &[])?,
            None => {
                let c = max_class(&[&labels]).max(map_top.map_or(0, |m| m as usize + 1));
                log::info!("inferred {c} classes from the labels and class map");
                c
            }
        };
        run.classes = Some(c);
        let labels = relabel(labels, c)?;
        if let Some(fp) = &run.features {
            let f = read_features(fp)?;
            if f.n_samples() != labels.len() {
                return Err(noiseforge_core::Error::Length(format!(
                    "{} feature rows but {} labels",
                    f.n_samples(),
                    labels.len()
                ))
                .into());
            }
        }
        let assignment = match spec.pattern {
            Pattern::Asym => gen_asymmetric(&labels, &spec)?,
            _ => gen_symmetric(&labels, &spec)?,
        };
        return Ok(Generated {
            run,
            assignment,
            rgn: None,
        });
    }

    let subset_rows_max = if run.classes.is_none() {
        let rows = read_subset_rows(run.subset.as_ref().expect("resolved"), MAX_INFERRED_CLASSES)?;
        Some(max_class(&[&rows.clean, &rows.noisy]))
    } else {
        None
    };
    let c = match run.classes {
        Some(c) => settle_classes(Some(c), &[])?,
        None => {
            let c = max_class(&[&labels]).max(subset_rows_max.unwrap_or(1));
            log::info!("inferred {c} classes from the label files");
            c
        }
    };
    run.classes = Some(c);
    let features = read_features(run.features.as_ref().expect("resolved"))?;
    let ds = LabeledDataset::new(features, relabel(labels, c)?)?;
    let subset = load_subset(&run, &ds)?;
    let outcome = gen_rgn(&ds, &subset, &spec)?;
    let assignment = outcome.assignment.clone();
    Ok(Generated {
        run,
        assignment,
        rgn: Some((ds, outcome)),
    })
}

#[derive(Serialize)]
struct Summary {
    n_samples: usize,
    n_classes: usize,
    flip_count: usize,
    noise_ratio: f64,
    flip_matrix: Vec<Vec<u64>>,
}

#[derive(Serialize)]
struct SubsetAudit {
    transition: TransitionReport,
    /// Noisy subset samples per clean class and concentration interval.
    interval_noisy: Vec<[u64; NUM_INTERVALS]>,
}

#[derive(Serialize)]
struct PlainFlip {
    index: usize,
    clean: u32,
    chosen: u32,
}

#[derive(Serialize)]
#[serde(untagged)]
enum Flips<'a> {
    Guided(&'a [FlipRecord]),
    Plain(Vec<PlainFlip>),
}

#[derive(Serialize)]
struct Audit<'a> {
    tool: &'static str,
    version: &'static str,
    format_version: u32,
    run: RunConfig,
    summary: Summary,
    #[serde(skip_serializing_if = "Option::is_none")]
    subset: Option<SubsetAudit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    budget: Option<&'a NoiseBudget>,
    flips: Flips<'a>,
}

fn write_audit(path: &Path, g: &Generated) -> CliResult<()> {
    let a = &g.assignment;
    let flips = match &g.rgn {
        Some((_, o)) => Flips::Guided(&o.assignment.flips),
        None => Flips::Plain(
            (0..a.len())
                .filter(|&k| a.flipped[k])
                .map(|k| PlainFlip {
                    index: k,
                    clean: a.clean[k],
                    chosen: a.labels[k],
                })
                .collect(),
        ),
    };
    let audit = Audit {
        tool: "noiseforge",
        version: env!("CARGO_PKG_VERSION"),
        format_version: FEATURE_FORMAT_VERSION,
        run: g.run.echo(),
        summary: Summary {
            n_samples: a.len(),
            n_classes: a.n_classes,
            flip_count: a.flip_count(),
            noise_ratio: round9(a.noise_ratio()),
            flip_matrix: a.flip_matrix(),
        },
        subset: g.rgn.as_ref().map(|(_, o)| SubsetAudit {
            transition: TransitionReport::new(&o.transition, &o.noise_profile),
            interval_noisy: o.subset_interval_noisy.clone(),
        }),
        budget: g.rgn.as_ref().map(|(_, o)| &o.budget),
        flips,
    };
    write_json(path, &audit)
}

fn finish_outputs(g: &Generated, out: Option<&PathBuf>) -> CliResult<()> {
    if let Some(out) = out {
        g.assignment.write_csv(out)?;
    }
    if let Some(path) = &g.run.audit {
        write_audit(path, g)?;
    }
    Ok(())
}

pub fn generate(args: GenerateArgs, file: RunConfig) -> CliResult<()> {
    let cfg = generate_flags(args)?.over(file);
    let out = required(cfg.out.clone(), "out")?;
    let g = run_generation(cfg)?;
    log::info!(
        "{} of {} labels flipped ({:.4})",
        g.assignment.flip_count(),
        g.assignment.len(),
        g.assignment.noise_ratio()
    );
    finish_outputs(&g, Some(&out))
}

pub fn validate(args: GenerateArgs, file: RunConfig) -> CliResult<()> {
    let mut cfg = generate_flags(args)?.over(file);
    cfg.pattern.get_or_insert_with(|| "rgn".into());
    let report_path = cfg.out.take();
    let g = run_generation(cfg)?;
    let Some((ds, outcome)) = &g.rgn else {
        return Err(config_err("validate checks rgn output; use --pattern rgn"));
    };
    let report = interval_noise_report(ds, &g.assignment, &outcome.dataset_profile)?;
    let closure: ClosureReport = check_closure(&report, &outcome.budget)?;
    if let Some(p) = &report_path {
        write_json(p, &closure)?;
    }
    finish_outputs(&g, None)?;
    if closure.ok {
        log::info!(
            "closure holds: {} flips match the budget",
            closure.realized_flips
        );
        Ok(())
    } else {
        let bad: Vec<usize> = closure
            .classes
            .iter()
            .filter(|c| !c.ok)
            .map(|c| c.class)
            .collect();
        Err(CliError::Validation(format!(
            "realized {} flips against a budget of {}; classes out of closure: {bad:?}",
            closure.realized_flips, closure.num_all
        )))
    }
}

// analyze

#[derive(Serialize)]
struct AnalyzeOutput {
    n_samples: u64,
    n_classes: usize,
    flip_count: u64,
    overall_ratio: f64,
    interval_weights: [u64; NUM_INTERVALS],
    trend: TrendSummary,
    classes: Vec<noiseforge_core::analysis::ClassIntervalReport>,
}

pub fn analyze(args: AnalyzeArgs, file: RunConfig) -> CliResult<()> {
    let cfg = RunConfig {
        features: args.features,
        labels: args.labels,
        noisy: args.noisy,
        classes: args.classes,
        ..Default::default()
    }
    .over(file);
    let labels_path = required(cfg.labels.clone(), "labels")?;
    let noisy_path = required(cfg.noisy.clone(), "noisy")?;
    let features_path = required(cfg.features.clone(), "features")?;

    let clean = load_labels(&labels_path, cfg.classes)?;
    let noisy = read_noisy_labels(&noisy_path, cfg.classes.unwrap_or(MAX_INFERRED_CLASSES))?;
    let c = settle_classes(cfg.classes, &[&clean, &noisy])?;
    let ds = LabeledDataset::new(read_features(&features_path)?, relabel(clean, c)?)?;
    let noisy = relabel(noisy, c)?;

    let weights = interval_weights(&cfg)?;
    let (_, profile) = concentration_profile(&ds, weights)?;
    let assignment = NoiseAssignment::from_labels(ds.clean_labels(), &noisy)?;
    let report = interval_noise_report(&ds, &assignment, &profile)?.rounded(6);
    if let Some(p) = &args.plot {
        report.write_plot_csv(p)?;
    }
    let mut trend = report.trend();
    trend.max_top_ratio = round6(trend.max_top_ratio);
    log::info!(
        "{} of {} classes show non-decreasing interval noise ratios",
        trend.non_decreasing_classes,
        trend.classes
    );
    write_json(
        &args.out,
        &AnalyzeOutput {
            n_samples: report.n_samples,
            n_classes: c,
            flip_count: report.flip_count,
            overall_ratio: report.overall_ratio,
            interval_weights: weights.0,
            trend,
            classes: report.classes,
        },
    )
}
