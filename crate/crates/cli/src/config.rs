//! Run configuration: an optional JSON file merged under command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{config_err, CliResult};

/// Every setting a run can take from a config file. Output paths may be set
/// here but are never echoed into audit files, so replaying an audit stanza
/// does not overwrite the original outputs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pattern: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub asym_map: Option<BTreeMap<u32, u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval_weights: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub features: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subset: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subset_features: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noisy: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audit: Option<PathBuf>,
}

macro_rules! overlay {
    ($hi:expr, $lo:expr, $($f:ident),+) => {
        RunConfig { $($f: $hi.$f.or($lo.$f),)+ }
    };
}

impl RunConfig {
    /// Values from `self` win over `base`.
    pub fn over(self, base: RunConfig) -> RunConfig {
        overlay!(
            self,
            base,
            pattern,
            seed,
            rho0,
            tau,
            asym_map,
            mu1,
            mu2,
            interval_weights,
            classes,
            features,
            labels,
            subset,
            subset_features,
            noisy,
            out,
            audit
        )
    }

    /// The stanza written to audit files.
    pub fn echo(&self) -> RunConfig {
        RunConfig {
            out: None,
            audit: None,
            ..self.clone()
        }
    }
}

/// Loads a config file. An audit file produced by `generate` is accepted
/// too; its `run` stanza is used.
pub fn load(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    if value.get("tool").is_some() {
        value = value
            .get_mut("run")
            .map(serde_json::Value::take)
            .ok_or_else(|| {
                config_err(format!(
                    "{}: audit file has no `run` stanza",
                    path.display()
                ))
            })?;
    }
    serde_json::from_value(value).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MapSyntax {
    Object(BTreeMap<String, u32>),
    Pairs(Vec<(u32, u32)>),
}

/// Parses `--asym-map`: inline JSON, or a path to a JSON file.
pub fn parse_asym_map(arg: &str) -> CliResult<BTreeMap<u32, u32>> {
    let text = if arg.trim_start().starts_with(['{', '[']) {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| config_err(format!("--asym-map {arg}: {e}")))?
    };
    let parsed: MapSyntax = serde_json::from_str(&text).map_err(|e| {
        config_err(format!(
            "--asym-map: expected {{\"from\": to}} or [[from, to]]: {e}"
        ))
    })?;
    Ok(match parsed {
        MapSyntax::Object(m) => m
            .into_iter()
            .map(|(k, v)| {
                k.trim()
                    .parse::<u32>()
                    .map(|k| (k, v))
                    .map_err(|_| config_err(format!("--asym-map: `{k}` is not a class id")))
            })
            .collect::<CliResult<_>>()?,
        MapSyntax::Pairs(p) => {
            let mut m = BTreeMap::new();
            for (from, to) in p {
                if m.insert(from, to).is_some() {
                    return Err(config_err(format!("--asym-map: class {from} mapped twice")));
                }
            }
            m
        }
    })
}
