use std::path::Path;

use hdpan_core::trainer::{grid_map, train, CellSummary, GridResult};
use hdpan_core::TrainConfig;

use super::{create_dir, metrics_from_table, metrics_line, metrics_table, write_toml};
use crate::config::RunConfig;
use crate::data::{architecture, load_split};
use crate::error::CliError;

pub const GRID_HEADER: [&str; 15] = [
    "alpha",
    "lr",
    "status",
    "best_epoch",
    "epochs_run",
    "val_accuracy",
    "val_precision",
    "val_recall",
    "val_f1",
    "test_accuracy",
    "test_precision",
    "test_recall",
    "test_f1",
    "best_for_alpha",
    "error",
];

fn cell_file(cells: &Path, alpha: f64, lr: f64) -> std::path::PathBuf {
    cells.join(format!("alpha{alpha}_lr{lr}.toml"))
}

fn cell_table(hash: &str, alpha: f64, lr: f64, result: &Result<CellSummary, String>) -> toml::Table {
    let mut t = toml::Table::new();
    t.insert("config_hash".into(), hash.into());
    t.insert("alpha".into(), alpha.into());
    t.insert("lr".into(), lr.into());
    match result {
        Ok(s) => {
            t.insert("status".into(), "ok".into());
            t.insert("best_epoch".into(), (s.best_epoch as i64).into());
            t.insert("epochs_run".into(), (s.epochs_run as i64).into());
            t.insert("val".into(), metrics_table(&s.val).into());
            t.insert("test".into(), metrics_table(&s.test).into());
        }
        Err(msg) => {
            t.insert("status".into(), "failed".into());
            t.insert("error".into(), msg.as_str().into());
        }
    }
    t
}

/// A finished cell from an earlier run with the same config, if any.
fn cached_cell(path: &Path, hash: &str) -> Option<Result<CellSummary, String>> {
    let t: toml::Table = std::fs::read_to_string(path).ok()?.parse().ok()?;
    if t.get("config_hash")?.as_str()? != hash {
        return None;
    }
    match t.get("status")?.as_str()? {
        "ok" => Some(Ok(CellSummary {
            best_epoch: usize::try_from(t.get("best_epoch")?.as_integer()?).ok()?,
            epochs_run: usize::try_from(t.get("epochs_run")?.as_integer()?).ok()?,
            val: metrics_from_table(t.get("val")?.as_table()?)?,
            test: metrics_from_table(t.get("test")?.as_table()?)?,
        })),
        "failed" => Some(Err(t.get("error")?.as_str()?.to_string())),
        _ => None,
    }
}

fn write_grid_csv(path: &Path, grid: &GridResult) -> Result<(), CliError> {
    let io_err = |e: csv::Error| CliError::Data(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io_err)?;
    w.write_record(GRID_HEADER).map_err(io_err)?;
    for (i, cell) in grid.cells.iter().enumerate() {
        let mut row = vec![cell.alpha.to_string(), cell.lr.to_string()];
        match &cell.result {
            Ok(s) => {
                row.push("ok".into());
                row.push(s.best_epoch.to_string());
                row.push(s.epochs_run.to_string());
                for m in [&s.val, &s.test] {
                    row.extend([m.accuracy, m.precision, m.recall, m.f1].map(|v| v.to_string()));
                }
                row.push(grid.is_best_for_alpha(i).to_string());
                row.push(String::new());
            }
            Err(msg) => {
                row.push("failed".into());
                row.extend(std::iter::repeat_n(String::new(), 10));
                row.push("false".into());
                row.push(msg.clone());
            }
        }
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush().map_err(|e| CliError::io(path.display(), e))
}

pub fn grid(config: &Path, alphas: &[f64], lrs: &[f64], fresh: bool) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    if alphas.is_empty() || lrs.is_empty() {
        return Err(CliError::Config("--alphas and --lrs must not be empty".into()));
    }
    let mut problems = Vec::new();
    for &alpha in alphas {
        for &lr in lrs {
            if let Err(e) = (TrainConfig { alpha, lr, ..cfg.train.clone() }).validate() {
                problems.push(format!("alpha {alpha}, lr {lr}: {e}"));
            }
        }
    }
    if !problems.is_empty() {
        return Err(CliError::Config(problems.join("\n")));
    }
    let hash = cfg.hash();
    let (data, split) = load_split(&cfg)?;
    let arch = architecture(cfg.arch, &data.train)?;
    let cells_dir = cfg.out_dir.join("cells");
    create_dir(&cells_dir)?;

    let result = grid_map(alphas, lrs, |alpha, lr| {
        let path = cell_file(&cells_dir, alpha, lr);
        if !fresh {
            if let Some(cached) = cached_cell(&path, &hash) {
                log::info!("alpha {alpha}, lr {lr}: reusing {}", path.display());
                return cached;
            }
        }
        let run_cfg = TrainConfig { alpha, lr, ..cfg.train.clone() };
        let result = train(&run_cfg, &split, arch)
            .map(|out| CellSummary {
                best_epoch: out.best_epoch,
                epochs_run: out.history.len(),
                val: out.val,
                test: out.test,
            })
            .map_err(|e| e.to_string());
        if let Err(e) = write_toml(&path, &cell_table(&hash, alpha, lr, &result)) {
            log::warn!("alpha {alpha}, lr {lr}: cannot record cell: {e}");
        }
        log::info!("alpha {alpha}, lr {lr}: done");
        result
    });

    let csv_path = cfg.out_dir.join("grid.csv");
    write_grid_csv(&csv_path, &result)?;
    for (alpha, best) in result.best_per_alpha() {
        match best.map(|i| &result.cells[i]) {
            Some(cell) => {
                let s = cell.result.as_ref().expect("best cell succeeded");
                println!("alpha {alpha}: best lr {} (epoch {})", cell.lr, s.best_epoch);
                println!("  val   {}", metrics_line(&s.val));
                println!("  test  {}", metrics_line(&s.test));
            }
            None => println!("alpha {alpha}: every cell failed"),
        }
    }
    let failed = result.cells.iter().filter(|c| c.result.is_err()).count();
    println!("{} cells ({failed} failed) -> {}", result.cells.len(), csv_path.display());
    Ok(())
}
