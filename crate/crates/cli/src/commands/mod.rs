//! Subcommand implementations.

mod eval;
mod grid;
mod make_pu;
mod synth;
mod train;

use std::path::Path;

use hdpan_core::metrics::ConfusionMatrix;
use hdpan_core::Metrics;

use crate::error::CliError;

pub use eval::{eval, saliency};
pub use grid::grid;
pub use make_pu::make_pu;
pub use synth::synth;
pub use train::train;

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path.display(), e))
}

fn write_toml(path: &Path, table: &toml::Table) -> Result<(), CliError> {
    write_file(path, toml::to_string(table).expect("plain table serializes"))
}

fn metrics_table(m: &Metrics) -> toml::Table {
    let mut t = toml::Table::new();
    t.insert("accuracy".into(), m.accuracy.into());
    t.insert("precision".into(), m.precision.into());
    t.insert("recall".into(), m.recall.into());
    t.insert("f1".into(), m.f1.into());
    t.insert("degenerate".into(), m.degenerate.into());
    let cm = &m.confusion;
    for (k, v) in [("tp", cm.tp), ("fp", cm.fp), ("fn", cm.fn_), ("tn", cm.tn)] {
        t.insert(k.into(), (v as i64).into());
    }
    t
}

/// Rebuilds metrics from the confusion counts of [`metrics_table`].
fn metrics_from_table(t: &toml::Table) -> Option<Metrics> {
    let get = |k: &str| t.get(k)?.as_integer().and_then(|v| u64::try_from(v).ok());
    Some(Metrics::from_confusion(ConfusionMatrix {
        tp: get("tp")?,
        fp: get("fp")?,
        fn_: get("fn")?,
        tn: get("tn")?,
    }))
}

fn metrics_line(m: &Metrics) -> String {
    format!(
        "accuracy {:.4}  precision {:.4}  recall {:.4}  f1 {:.4}{}",
        m.accuracy,
        m.precision,
        m.recall,
        m.f1,
        if m.degenerate { "  (degenerate)" } else { "" }
    )
}
