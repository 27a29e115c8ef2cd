use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use hdpan_core::models::save_checkpoint;
use hdpan_core::trainer::{train_observed, write_history_csv, TrainObserver};
use hdpan_core::EpochRecord;

use super::{create_dir, metrics_line, metrics_table, write_toml};
use crate::config::RunConfig;
use crate::data::{architecture, load_split, rule_name, write_indices};
use crate::error::CliError;

struct EpochLog;

impl TrainObserver for EpochLog {
    fn on_epoch(&mut self, r: &EpochRecord) {
        log::info!("epoch {:>4}  V {:+.5}  val acc {:.4}  val f1 {:.4}", r.epoch, r.value, r.val.accuracy, r.val.f1);
    }
}

pub fn train(config: &Path) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let hash = cfg.hash();
    let (data, split) = load_split(&cfg)?;
    let arch = architecture(cfg.arch, &data.train)?;
    let out_dir = &cfg.out_dir;
    create_dir(out_dir)?;
    log::info!(
        "{}: {} positives, {} unlabeled, {} parameters per network",
        data.name,
        split.indices.positives.len(),
        split.indices.unlabeled.len(),
        arch.param_count()
    );
    let start = Instant::now();
    let outcome = train_observed(&cfg.train, &split, arch, &mut EpochLog)?;
    let wall = start.elapsed().as_secs_f64();

    write_indices(out_dir, &split.indices)?;
    let meta = BTreeMap::from([
        ("config_hash".to_string(), hash.clone()),
        ("dataset".to_string(), data.name.clone()),
        ("binarize".to_string(), rule_name(data.rule).to_string()),
        ("best_epoch".to_string(), outcome.best_epoch.to_string()),
        ("seed".to_string(), cfg.train.seed.to_string()),
    ]);
    save_checkpoint(&out_dir.join("checkpoint.bin"), &outcome.classifier, &meta)?;
    let history_path = out_dir.join("history.csv");
    let file = File::create(&history_path).map_err(|e| CliError::io(history_path.display(), e))?;
    write_history_csv(&outcome.history, BufWriter::new(file))
        .map_err(|e| CliError::Data(format!("{}: {e}", history_path.display())))?;

    let mut run = toml::Table::new();
    run.insert("config_hash".into(), hash.into());
    run.insert("dataset".into(), data.name.clone().into());
    run.insert("binarize".into(), rule_name(data.rule).into());
    run.insert("best_epoch".into(), (outcome.best_epoch as i64).into());
    run.insert("epochs_run".into(), (outcome.history.len() as i64).into());
    run.insert("wall_time_secs".into(), wall.into());
    let mut summary = toml::Table::new();
    summary.insert("run".into(), run.into());
    summary.insert("config".into(), cfg.effective().into());
    summary.insert("val".into(), metrics_table(&outcome.val).into());
    summary.insert("test".into(), metrics_table(&outcome.test).into());
    write_toml(&out_dir.join("summary.toml"), &summary)?;

    println!(
        "best epoch {} of {} ({:.1}s)",
        outcome.best_epoch,
        outcome.history.len(),
        wall
    );
    println!("val   {}", metrics_line(&outcome.val));
    println!("test  {}", metrics_line(&outcome.test));
    println!("outputs in {}", out_dir.display());
    Ok(())
}
