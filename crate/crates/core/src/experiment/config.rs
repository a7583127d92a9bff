//! TOML config files for the CLI.
//!
//! A sweep file has `[dataset]`, `[network]` and `[sweep]` sections; a
//! train file replaces `[sweep]` with `[train]`. Optional keys fall back
//! to profile defaults: the `desk` profile subsamples MNIST to 1000
//! train / 200 test samples per class and trains 10 epochs, the `paper`
//! profile uses the full dataset and 50 epochs. Explicit keys always
//! win over the profile.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::topology::ConstructionKind;

use super::{DatasetSpec, DegreeList, DegreeMode, Hyper, SingleTrainSpec, SweepSpec};

/// Scale profile selected with `--profile`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Profile {
    #[default]
    Desk,
    Paper,
}

impl Profile {
    pub fn default_epochs(self) -> usize {
        match self {
            Profile::Desk => 10,
            Profile::Paper => 50,
        }
    }

    /// (train, test) per-class MNIST subsample; `None` = full set.
    pub fn default_mnist_per_class(self) -> (Option<usize>, Option<usize>) {
        match self {
            Profile::Desk => (Some(1000), Some(200)),
            Profile::Paper => (None, None),
        }
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            other => Err(Error::Parse(format!(
                "unknown profile `{other}` (expected desk|paper)"
            ))),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetSection {
    kind: String,
    // mnist
    dir: Option<PathBuf>,
    // synthetic
    classes: Option<usize>,
    dim: Option<usize>,
    separation: Option<f64>,
    // both
    train_per_class: Option<usize>,
    test_per_class: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkSection {
    layer_sizes: Vec<usize>,
    learning_rate: Option<f64>,
    momentum: Option<f64>,
    batch_size: Option<usize>,
    epochs: Option<usize>,
    dropout: Option<Vec<f64>>,
    degree_scaled_init: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    constructions: Vec<String>,
    degrees: Option<Vec<usize>>,
    densities: Option<Vec<f64>>,
    repeats: Option<usize>,
    last_layer_fully_connected: Option<bool>,
    degree_mode: Option<String>,
    cell_limit: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainSection {
    constructions: Vec<String>,
    degrees: Vec<usize>,
    seed: Option<u64>,
    checkpoint: Option<PathBuf>,
    record: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    dataset: DatasetSection,
    network: NetworkSection,
    sweep: SweepSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainFile {
    dataset: DatasetSection,
    network: NetworkSection,
    train: TrainSection,
}

fn parse_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn resolve_dataset(section: DatasetSection, profile: Profile) -> Result<DatasetSpec> {
    match section.kind.as_str() {
        "mnist" => {
            let dir = section
                .dir
                .ok_or_else(|| Error::InvalidConfig("[dataset] mnist needs `dir`".into()))?;
            let (train_default, test_default) = profile.default_mnist_per_class();
            Ok(DatasetSpec::Mnist {
                dir,
                train_per_class: section.train_per_class.or(train_default),
                test_per_class: section.test_per_class.or(test_default),
            })
        }
        "synthetic" => {
            let need = |v: Option<usize>, key: &str| {
                v.ok_or_else(|| Error::InvalidConfig(format!("[dataset] synthetic needs `{key}`")))
            };
            Ok(DatasetSpec::Synthetic {
                classes: need(section.classes, "classes")?,
                dim: need(section.dim, "dim")?,
                train_per_class: need(section.train_per_class, "train_per_class")?,
                test_per_class: need(section.test_per_class, "test_per_class")?,
                separation: section.separation.unwrap_or(0.5),
            })
        }
        other => Err(Error::InvalidConfig(format!(
            "unknown dataset kind `{other}` (expected mnist|synthetic)"
        ))),
    }
}

fn resolve_hyper(section: &NetworkSection, profile: Profile) -> Hyper {
    Hyper {
        learning_rate: section.learning_rate.unwrap_or(0.01),
        momentum: section.momentum.unwrap_or(0.9),
        batch_size: section.batch_size.unwrap_or(32),
        epochs: section.epochs.unwrap_or_else(|| profile.default_epochs()),
    }
}

fn parse_constructions(tags: &[String]) -> Result<Vec<ConstructionKind>> {
    tags.iter().map(|t| t.parse()).collect()
}

/// Parse and resolve a sweep config file.
pub fn load_sweep_spec(
    path: &Path,
    profile: Profile,
    base_seed: u64,
    workers: usize,
) -> Result<SweepSpec> {
    let file: SweepFile = parse_toml(path)?;
    let degrees = match (file.sweep.degrees, file.sweep.densities) {
        (Some(ks), None) => DegreeList::Ks(ks),
        (None, Some(ds)) => DegreeList::Densities(ds),
        (Some(_), Some(_)) => {
            return Err(Error::InvalidConfig(
                "[sweep] give either `degrees` or `densities`, not both".into(),
            ))
        }
        (None, None) => {
            return Err(Error::InvalidConfig(
                "[sweep] needs `degrees` or `densities`".into(),
            ))
        }
    };
    let degree_mode = match file.sweep.degree_mode.as_deref() {
        None | Some("tied") => DegreeMode::Tied,
        Some("grid") => DegreeMode::Grid,
        Some(other) => {
            return Err(Error::InvalidConfig(format!(
                "unknown degree_mode `{other}` (expected tied|grid)"
            )))
        }
    };
    let spec = SweepSpec {
        dataset: resolve_dataset(file.dataset, profile)?,
        layer_sizes: file.network.layer_sizes.clone(),
        constructions: parse_constructions(&file.sweep.constructions)?,
        degrees,
        repeats: file.sweep.repeats.unwrap_or(1),
        last_layer_fully_connected: file.sweep.last_layer_fully_connected.unwrap_or(true),
        degree_mode,
        hyper: resolve_hyper(&file.network, profile),
        dropout: file.network.dropout,
        degree_scaled_init: file.network.degree_scaled_init.unwrap_or(false),
        base_seed,
        workers,
        cell_limit: file.sweep.cell_limit.filter(|&v| v > 0),
    };
    spec.validate()?;
    Ok(spec)
}

/// Parse and resolve a single-training config file.
pub fn load_train_spec(path: &Path, profile: Profile, base_seed: u64) -> Result<SingleTrainSpec> {
    let file: TrainFile = parse_toml(path)?;
    let spec = SingleTrainSpec {
        dataset: resolve_dataset(file.dataset, profile)?,
        layer_sizes: file.network.layer_sizes.clone(),
        constructions: parse_constructions(&file.train.constructions)?,
        degrees: file.train.degrees,
        hyper: resolve_hyper(&file.network, profile),
        dropout: file.network.dropout,
        degree_scaled_init: file.network.degree_scaled_init.unwrap_or(false),
        seed: file.train.seed.unwrap_or(base_seed),
        checkpoint: file.train.checkpoint,
        record: file.train.record,
    };
    spec.validate()?;
    Ok(spec)
}
