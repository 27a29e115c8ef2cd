use std::path::Path;

use hdpan_core::pudata::{save_dataset, synth_gaussians};
use hdpan_core::seed;

use crate::error::CliError;

pub fn synth(
    out: &Path,
    train_per_class: usize,
    eval_per_class: usize,
    dim: usize,
    separation: f64,
    seed: u64,
) -> Result<(), CliError> {
    if dim == 0 || train_per_class == 0 || eval_per_class == 0 {
        return Err(CliError::Config("dim and per-class counts must be positive".into()));
    }
    if !(separation.is_finite() && separation >= 0.0) {
        return Err(CliError::Config(format!("separation must be finite and non-negative, got {separation}")));
    }
    for (split, n) in [("train", train_per_class), ("val", eval_per_class), ("test", eval_per_class)] {
        let ds = synth_gaussians(n, dim, separation, seed::derive(seed, split));
        save_dataset(&ds, &out.join(split))?;
    }
    println!(
        "wrote {} / {} / {} samples to {}",
        2 * train_per_class,
        2 * eval_per_class,
        2 * eval_per_class,
        out.display()
    );
    Ok(())
}
