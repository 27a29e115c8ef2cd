//! Image datasets, binarization, positive-unlabeled splits and synthetic
//! data.

mod format;
mod split;
mod synth;

use std::path::PathBuf;

use thiserror::Error;

use crate::compute::Tensor;

pub use format::{load_benchmark, load_dataset, save_dataset, Benchmark, DatasetMeta};
pub use split::{make_pu_split, HiddenTruth, LabeledSet, PuIndices, PuSplit, TrainView};
pub use synth::{synth_gaussians, SYNTH_MARGIN};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid meta: {msg}")]
    Meta { path: PathBuf, msg: String },
    #[error("{path}: expected {expected} bytes, found {actual}")]
    SizeMismatch {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },
    #[error("channel count must be 1 or 3, got {0}")]
    Channels(usize),
    #[error("dataset shape: {0}")]
    Shape(String),
    #[error("requested {requested} positives but only {available} are available")]
    InsufficientPositives { requested: usize, available: usize },
    #[error("invalid split indices: {0}")]
    BadIndices(String),
}

/// Images with integer class labels, as stored on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledImageSet {
    pub name: String,
    pub h: usize,
    pub w: usize,
    pub c: usize,
    /// Added to stored labels to obtain 1-based class numbers.
    pub label_offset: u8,
    /// `N·H·W·C` intensities, row-major NHWC.
    pub images: Vec<u8>,
    pub labels: Vec<u8>,
}

impl LabeledImageSet {
    pub fn new(
        name: impl Into<String>,
        (h, w, c): (usize, usize, usize),
        label_offset: u8,
        images: Vec<u8>,
        labels: Vec<u8>,
    ) -> Result<Self, DataError> {
        if c != 1 && c != 3 {
            return Err(DataError::Channels(c));
        }
        if h == 0 || w == 0 {
            return Err(DataError::Shape(format!("zero image side {h}x{w}")));
        }
        if images.len() != labels.len() * h * w * c {
            return Err(DataError::Shape(format!(
                "{} image bytes for {} labels of {h}x{w}x{c}",
                images.len(),
                labels.len()
            )));
        }
        Ok(Self {
            name: name.into(),
            h,
            w,
            c,
            label_offset,
            images,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Converts class labels to positive/negative.
    pub fn binarize(&self, rule: Binarize) -> BinaryImageSet {
        let truth = match rule.resolve(&self.labels) {
            Binarize::Parity => binarize_by_parity(&self.labels, self.label_offset),
            _ => binarize_direct(&self.labels),
        };
        BinaryImageSet {
            name: self.name.clone(),
            h: self.h,
            w: self.w,
            c: self.c,
            images: self.images.clone(),
            truth,
        }
    }
}

/// How class labels map to positive/negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Binarize {
    /// `Direct` if every label is 0 or 1, otherwise `Parity`.
    #[default]
    Auto,
    /// Label 1 (any non-zero label) is positive.
    Direct,
    /// Even class numbers are positive.
    Parity,
}

impl Binarize {
    pub fn resolve(self, labels: &[u8]) -> Binarize {
        match self {
            Binarize::Auto if labels.iter().all(|&l| l <= 1) => Binarize::Direct,
            Binarize::Auto => Binarize::Parity,
            other => other,
        }
    }
}

impl std::str::FromStr for Binarize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(Binarize::Auto),
            "direct" => Ok(Binarize::Direct),
            "parity" => Ok(Binarize::Parity),
            other => Err(format!("unknown binarize rule `{other}` (auto|direct|parity)")),
        }
    }
}

/// `true` (positive) when `label + offset` is even.
///
/// Binary `{0, 1}` labels flip under this rule, which is why binary
/// datasets go through [`binarize_direct`] instead.
pub fn binarize_by_parity(labels: &[u8], offset: u8) -> Vec<bool> {
    labels.iter().map(|&l| (l as u16 + offset as u16).is_multiple_of(2)).collect()
}

pub fn binarize_direct(labels: &[u8]) -> Vec<bool> {
    labels.iter().map(|&l| l != 0).collect()
}

/// Images with positive/negative ground truth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImageSet {
    pub name: String,
    pub h: usize,
    pub w: usize,
    pub c: usize,
    pub images: Vec<u8>,
    pub truth: Vec<bool>,
}

impl BinaryImageSet {
    pub fn len(&self) -> usize {
        self.truth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.truth.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.truth.iter().filter(|&&t| t).count()
    }

    /// Normalized `[N, H, W, C]` features.
    pub fn features(&self) -> Tensor<f32> {
        normalize(&self.images, &[self.len(), self.h, self.w, self.c])
    }
}

/// Maps 8-bit intensities to `x / 255`.
pub fn normalize(images: &[u8], shape: &[usize]) -> Tensor<f32> {
    let data = images.iter().map(|&v| v as f32 / 255.0).collect();
    Tensor::new(shape.to_vec(), data).expect("shape matches image bytes")
}

/// Labeled-positive counts used for the benchmark datasets.
pub fn default_positive_count(dataset: &str) -> Option<usize> {
    match dataset.to_ascii_lowercase().as_str() {
        "breastmnist" => Some(100),
        "pneumoniamnist" => Some(100),
        "octmnist" => Some(2000),
        "bloodmnist" => Some(500),
        "amd" => Some(50),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parity_examples() {
        assert_eq!(binarize_by_parity(&[1, 2, 3, 4], 0), vec![false, true, false, true]);
        assert!(binarize_by_parity(&[2, 4, 6, 0], 0).iter().all(|&t| t));
        // 0-based storage of 1-based classes.
        assert_eq!(binarize_by_parity(&[0, 1, 2, 3], 1), vec![false, true, false, true]);
        // The hazard: parity inverts binary labels.
        assert_eq!(binarize_by_parity(&[0, 1], 0), vec![true, false]);
        assert_eq!(binarize_direct(&[0, 1]), vec![false, true]);
    }

    #[test]
    fn auto_rule_bypasses_parity_for_binary_sets() {
        assert_eq!(Binarize::Auto.resolve(&[0, 1, 1, 0]), Binarize::Direct);
        assert_eq!(Binarize::Auto.resolve(&[0, 5, 7]), Binarize::Parity);
        let ds = LabeledImageSet::new("b", (1, 1, 1), 1, vec![0, 0, 0], vec![0, 1, 1]).unwrap();
        assert_eq!(ds.binarize(Binarize::Auto).truth, vec![false, true, true]);
        let ds = LabeledImageSet::new("m", (1, 1, 1), 1, vec![0; 4], vec![0, 1, 2, 7]).unwrap();
        assert_eq!(ds.binarize(Binarize::Auto).truth, vec![false, true, false, true]);
    }

    #[test]
    fn normalize_examples() {
        let t = normalize(&[0, 255, 51], &[3]);
        assert_eq!(t.data(), &[0.0, 1.0, 0.2]);
        for v in 0..=255u8 {
            let x = normalize(&[v], &[1]).data()[0];
            assert!((0.0..=1.0).contains(&x));
            let back = x * 255.0;
            assert!((back - v as f32).abs() <= f32::EPSILON * (v as f32).max(1.0), "{v}");
            assert_eq!(back.round() as u8, v);
        }
    }

    #[test]
    fn rejects_bad_channel_count() {
        assert!(matches!(
            LabeledImageSet::new("x", (2, 2, 2), 0, vec![0; 8], vec![0]),
            Err(DataError::Channels(2))
        ));
        assert!(LabeledImageSet::new("x", (2, 2, 1), 0, vec![0; 5], vec![0]).is_err());
    }

    #[test]
    fn default_counts() {
        assert_eq!(default_positive_count("BreastMNIST"), Some(100));
        assert_eq!(default_positive_count("pneumoniamnist"), Some(100));
        assert_eq!(default_positive_count("octmnist"), Some(2000));
        assert_eq!(default_positive_count("bloodmnist"), Some(500));
        assert_eq!(default_positive_count("amd"), Some(50));
        assert_eq!(default_positive_count("other"), None);
    }
}
