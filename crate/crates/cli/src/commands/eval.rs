use std::path::Path;

use hdpan_core::models::{load_checkpoint, saliency as saliency_map};
use hdpan_core::pudata::{load_benchmark, LabeledSet};
use hdpan_core::trainer::evaluate;
use hdpan_core::{Binarize, Checkpoint};

use super::{metrics_line, write_file};
use crate::data::{load_binarized, rule_name};
use crate::error::CliError;

fn stored_rule(ckpt: &Checkpoint) -> Result<Binarize, CliError> {
    match ckpt.meta.get("binarize") {
        Some(s) => s.parse().map_err(CliError::Data),
        None => Ok(Binarize::Auto),
    }
}

fn split_name(test: bool) -> &'static str {
    if test {
        "test"
    } else {
        "val"
    }
}

pub fn eval(checkpoint: &Path, dataset: &Path, test: bool, rule: Option<Binarize>) -> Result<(), CliError> {
    let ckpt = load_checkpoint(checkpoint)?;
    let rule = match rule {
        Some(r) => r,
        None => stored_rule(&ckpt)?,
    };
    let data = load_binarized(dataset, rule)?;
    let set = LabeledSet::from_images(if test { &data.test } else { &data.val });
    let m = evaluate(&ckpt.model, &set.features, &set.truth)?;
    let hash = ckpt.meta.get("config_hash").map_or("unknown", String::as_str);
    println!("config_hash {hash}");
    println!("dataset {} ({} split, {} samples, binarize {})", data.name, split_name(test), set.len(), rule_name(data.rule));
    println!("{}", metrics_line(&m));
    let cm = m.confusion;
    println!("tp {}  fp {}  fn {}  tn {}", cm.tp, cm.fp, cm.fn_, cm.tn);
    Ok(())
}

/// Binary PGM (`P5`) with one byte per pixel.
fn pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

pub fn saliency(checkpoint: &Path, dataset: &Path, test: bool, index: usize, out: &Path) -> Result<(), CliError> {
    let mut ckpt = load_checkpoint(checkpoint)?;
    let bench = load_benchmark(dataset)?;
    let set = if test { &bench.test } else { &bench.val };
    if index >= set.len() {
        return Err(CliError::Data(format!(
            "index {index} is out of range for the {} split of {} samples",
            split_name(test),
            set.len()
        )));
    }
    let size = set.h * set.w * set.c;
    let image = hdpan_core::pudata::normalize(&set.images[index * size..(index + 1) * size], &[set.h, set.w, set.c]);
    let prob = ckpt.model.infer(&image.clone().reshape(&[1, set.h, set.w, set.c])?)?[0];
    let heat = saliency_map(&mut ckpt.model, &image)?;
    let pixels: Vec<u8> = heat.data().iter().map(|v| (v * 255.0).round() as u8).collect();
    write_file(out, pgm(set.w, set.h, &pixels))?;
    println!("{} image {index}: p(positive) = {prob:.4}; saliency -> {}", split_name(test), out.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_layout() {
        let bytes = pgm(3, 2, &[0, 1, 2, 3, 4, 255]);
        assert_eq!(&bytes[..11], b"P5\n3 2\n255\n");
        assert_eq!(&bytes[11..], &[0, 1, 2, 3, 4, 255]);
    }
}
