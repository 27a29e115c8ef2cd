//! Fixtures shared by the core-kernel and training benchmarks.

use hdpan_core::pudata::{make_pu_split, synth_gaussians};
use hdpan_core::{Binarize, PuSplit, Tensor};

/// A tensor filled with a fixed pattern in `[-0.5, 0.5)`.
pub fn pattern_tensor(shape: &[usize], salt: usize) -> Tensor<f32> {
    let n: usize = shape.iter().product();
    let data = (0..n).map(|i| ((i * 7919 + salt * 104_729) % 1000) as f32 / 1000.0 - 0.5).collect();
    Tensor::new(shape.to_vec(), data).expect("pattern matches shape")
}

/// Probabilities spread over `(0, 1)`.
pub fn pattern_probs(n: usize, salt: usize) -> Vec<f64> {
    (0..n).map(|i| ((i * 613 + salt * 389) % 997 + 1) as f64 / 999.0).collect()
}

/// A synthetic PU split of `dim`-dimensional points with 1000 training rows.
pub fn synthetic_split(dim: usize) -> PuSplit {
    let b = |n, s| synth_gaussians(n, dim, 6.0, s).binarize(Binarize::Auto);
    make_pu_split(&b(500, 1), &b(125, 2), &b(125, 3), 200, 0).expect("enough positives")
}
