//! Two-Gaussian synthetic data stored in the image container.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::LabeledImageSet;

/// Headroom, in standard deviations, between each class mean and the edge
/// of the quantization range.
pub const SYNTH_MARGIN: f64 = 1.0;

/// Maps a coordinate in `[-range, range]` to a byte.
fn quantize(x: f64, range: f64) -> u8 {
    ((x + range) / (2.0 * range) * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Unit-variance isotropic Gaussians centred at `±(separation/2)·e₁`,
/// `n_per_class` each, as `1 × dim` single-channel images in shuffled order.
/// The `+` class has label 1, the `−` class label 0. Coordinates are mapped
/// linearly from `±(separation/2 + SYNTH_MARGIN)` to `0..=255` and saturate
/// outside that range.
pub fn synth_gaussians(n_per_class: usize, dim: usize, separation: f64, seed: u64) -> LabeledImageSet {
    assert!(dim >= 1, "dim must be at least 1");
    assert!(separation >= 0.0 && separation.is_finite(), "separation must be finite and non-negative");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = separation / 2.0;
    let range = half + SYNTH_MARGIN;
    let mut rows: Vec<(Vec<u8>, u8)> = Vec::with_capacity(2 * n_per_class);
    for label in [1u8, 0] {
        let centre = if label == 1 { half } else { -half };
        for _ in 0..n_per_class {
            let row = (0..dim)
                .map(|j| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    quantize(if j == 0 { centre + z } else { z }, range)
                })
                .collect();
            rows.push((row, label));
        }
    }
    rows.shuffle(&mut rng);
    let (images, labels): (Vec<Vec<u8>>, Vec<u8>) = rows.into_iter().unzip();
    LabeledImageSet::new("synthetic", (1, dim, 1), 0, images.concat(), labels).expect("consistent synthetic shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn sign_rule_accuracy(ds: &LabeledImageSet) -> f64 {
        let dim = ds.w;
        let correct = (0..ds.len())
            .filter(|&i| (ds.images[i * dim] >= 128) == (ds.labels[i] == 1))
            .count();
        correct as f64 / ds.len() as f64
    }

    #[test]
    fn bayes_accuracy_matches_closed_form() {
        let ds = synth_gaussians(20_000, 2, 6.0, 5);
        let phi3 = Normal::new(0.0, 1.0).unwrap().cdf(3.0);
        assert!((phi3 - 0.998_650_101_968_37).abs() < 1e-12);
        let acc = sign_rule_accuracy(&ds);
        assert!((acc - phi3).abs() < 2e-3, "{acc} vs {phi3}");
    }

    #[test]
    fn zero_separation_is_chance() {
        let ds = synth_gaussians(10_000, 2, 0.0, 1);
        assert!((sign_rule_accuracy(&ds) - 0.5).abs() < 0.02);
    }

    #[test]
    fn layout_and_determinism() {
        let a = synth_gaussians(50, 3, 6.0, 9);
        assert_eq!((a.h, a.w, a.c, a.len()), (1, 3, 1, 100));
        assert_eq!(a.labels.iter().filter(|&&l| l == 1).count(), 50);
        assert_eq!(a, synth_gaussians(50, 3, 6.0, 9));
        assert_ne!(a, synth_gaussians(50, 3, 6.0, 10));
    }

    #[test]
    fn quantize_endpoints() {
        assert_eq!(quantize(-7.0, 7.0), 0);
        assert_eq!(quantize(7.0, 7.0), 255);
        assert_eq!(quantize(100.0, 7.0), 255);
        assert_eq!(quantize(0.0, 7.0), 128);
    }
}
