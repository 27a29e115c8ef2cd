//! Loading benchmarks, splits, and architectures for a run.

use std::path::Path;

use hdpan_core::models::{CnnSpec, MlpSpec};
use hdpan_core::pudata::{default_positive_count, load_benchmark, PuIndices};
use hdpan_core::{Architecture, Binarize, BinaryImageSet, PuSplit};

use crate::config::{ArchChoice, RunConfig};
use crate::error::CliError;

pub const POSITIVES_FILE: &str = "positives.txt";
pub const UNLABELED_FILE: &str = "unlabeled.txt";

/// The three binarized splits of one benchmark.
pub struct Binarized {
    pub name: String,
    pub rule: Binarize,
    pub train: BinaryImageSet,
    pub val: BinaryImageSet,
    pub test: BinaryImageSet,
}

/// Loads `root` and binarizes every split with the rule resolved on the
/// training labels.
pub fn load_binarized(root: &Path, rule: Binarize) -> Result<Binarized, CliError> {
    let b = load_benchmark(root)?;
    let rule = rule.resolve(&b.train.labels);
    Ok(Binarized {
        name: b.train.name.clone(),
        rule,
        train: b.train.binarize(rule),
        val: b.val.binarize(rule),
        test: b.test.binarize(rule),
    })
}

pub fn rule_name(rule: Binarize) -> &'static str {
    match rule {
        Binarize::Auto => "auto",
        Binarize::Direct => "direct",
        Binarize::Parity => "parity",
    }
}

/// The requested count, else the dataset's default.
pub fn positive_count(requested: Option<usize>, dataset: &str) -> Result<usize, CliError> {
    requested.or_else(|| default_positive_count(dataset)).ok_or_else(|| {
        CliError::Config(format!("no default positive count for dataset `{dataset}`; set n_positive"))
    })
}

pub fn read_indices(dir: &Path) -> Result<PuIndices, CliError> {
    let read = |file: &str| -> Result<Vec<usize>, CliError> {
        let path = dir.join(file);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(path.display(), e))?;
        PuIndices::parse_list(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    };
    Ok(PuIndices {
        positives: read(POSITIVES_FILE)?,
        unlabeled: read(UNLABELED_FILE)?,
    })
}

pub fn write_indices(dir: &Path, indices: &PuIndices) -> Result<(), CliError> {
    for (file, list) in [(POSITIVES_FILE, &indices.positives), (UNLABELED_FILE, &indices.unlabeled)] {
        let path = dir.join(file);
        std::fs::write(&path, PuIndices::format_list(list)).map_err(|e| CliError::io(path.display(), e))?;
    }
    Ok(())
}

/// Builds the PU split a run config describes.
pub fn load_split(cfg: &RunConfig) -> Result<(Binarized, PuSplit), CliError> {
    let data = load_binarized(&cfg.dataset, cfg.binarize)?;
    let seed = cfg.train.seed;
    let indices = match &cfg.split {
        Some(dir) => read_indices(dir)?,
        None => PuIndices::draw(&data.train, positive_count(cfg.n_positive, &data.name)?, seed)?,
    };
    let split = PuSplit::assemble(&data.train, indices, &data.val, &data.test, seed)?;
    Ok((data, split))
}

pub fn architecture(choice: ArchChoice, set: &BinaryImageSet) -> Result<Architecture, CliError> {
    match choice {
        ArchChoice::Mlp { hidden } => Ok(Architecture::Mlp(MlpSpec::new(set.h * set.w * set.c, hidden))),
        ArchChoice::Cnn if [set.h, set.w, set.c] == CnnSpec::INPUT => Ok(Architecture::Cnn(CnnSpec)),
        ArchChoice::Cnn => Err(CliError::Config(format!(
            "arch = \"cnn\" needs 28x28x3 images, dataset has {}x{}x{}",
            set.h, set.w, set.c
        ))),
    }
}
