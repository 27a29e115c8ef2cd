use std::path::Path;

use hdpan_core::pudata::PuIndices;
use hdpan_core::Binarize;

use super::{create_dir, write_toml};
use crate::data::{load_binarized, positive_count, rule_name, write_indices};
use crate::error::CliError;

pub fn make_pu(dataset: &Path, n_positive: Option<usize>, seed: u64, rule: Binarize, out: &Path) -> Result<(), CliError> {
    let data = load_binarized(dataset, rule)?;
    let n = positive_count(n_positive, &data.name)?;
    let indices = PuIndices::draw(&data.train, n, seed)?;
    create_dir(out)?;
    write_indices(out, &indices)?;
    let mut manifest = toml::Table::new();
    manifest.insert("dataset".into(), data.name.clone().into());
    manifest.insert("binarize".into(), rule_name(data.rule).into());
    manifest.insert("seed".into(), (seed as i64).into());
    manifest.insert("n_train".into(), (data.train.len() as i64).into());
    manifest.insert("n_positive".into(), (indices.positives.len() as i64).into());
    manifest.insert("n_unlabeled".into(), (indices.unlabeled.len() as i64).into());
    write_toml(&out.join("manifest.toml"), &manifest)?;
    println!(
        "{}: {} labeled positives, {} unlabeled -> {}",
        data.name,
        indices.positives.len(),
        indices.unlabeled.len(),
        out.display()
    );
    Ok(())
}
