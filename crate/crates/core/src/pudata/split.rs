//! Positive-unlabeled partition of a training split.

use crate::compute::Tensor;
use crate::metrics::{LengthMismatch, Metrics};
use crate::seed;

use super::{BinaryImageSet, DataError};

/// Which training rows are labeled positives and which are unlabeled.
/// Both lists are sorted and together cover every training row once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PuIndices {
    pub positives: Vec<usize>,
    pub unlabeled: Vec<usize>,
}

impl PuIndices {
    /// Draws `n_positive` of the true positives uniformly without
    /// replacement; everything else is unlabeled.
    pub fn draw(train: &BinaryImageSet, n_positive: usize, seed: u64) -> Result<Self, DataError> {
        let pool: Vec<usize> = (0..train.len()).filter(|&i| train.truth[i]).collect();
        if n_positive > pool.len() {
            return Err(DataError::InsufficientPositives {
                requested: n_positive,
                available: pool.len(),
            });
        }
        let mut rng = seed::stream(seed, seed::SPLIT);
        let mut positives: Vec<usize> = rand::seq::index::sample(&mut rng, pool.len(), n_positive)
            .into_iter()
            .map(|k| pool[k])
            .collect();
        positives.sort_unstable();
        let mut chosen = vec![false; train.len()];
        for &i in &positives {
            chosen[i] = true;
        }
        let unlabeled = (0..train.len()).filter(|&i| !chosen[i]).collect();
        Ok(Self { positives, unlabeled })
    }

    /// Checks the partition against a training set of `n` rows with
    /// ground truth `truth`.
    pub fn validate(&self, truth: &[bool]) -> Result<(), DataError> {
        let n = truth.len();
        let mut seen = vec![false; n];
        for (list, name) in [(&self.positives, "positive"), (&self.unlabeled, "unlabeled")] {
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(DataError::BadIndices(format!("{name} indices are not strictly increasing")));
            }
            for &i in list.iter() {
                if i >= n {
                    return Err(DataError::BadIndices(format!("{name} index {i} out of range for {n} rows")));
                }
                if seen[i] {
                    return Err(DataError::BadIndices(format!("index {i} is both positive and unlabeled")));
                }
                seen[i] = true;
            }
        }
        if let Some(i) = seen.iter().position(|&s| !s) {
            return Err(DataError::BadIndices(format!("training row {i} is in neither list")));
        }
        if let Some(&i) = self.positives.iter().find(|&&i| !truth[i]) {
            return Err(DataError::BadIndices(format!("labeled positive {i} is a negative")));
        }
        Ok(())
    }

    /// One index per line.
    pub fn format_list(list: &[usize]) -> String {
        list.iter().map(|i| format!("{i}\n")).collect()
    }

    pub fn parse_list(text: &str) -> Result<Vec<usize>, DataError> {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| l.parse().map_err(|_| DataError::BadIndices(format!("`{l}` is not an index"))))
            .collect()
    }
}

/// Ground truth of the unlabeled rows. Only metrics can be read from it.
#[derive(Debug, Clone)]
pub struct HiddenTruth(Vec<bool>);

impl HiddenTruth {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn metrics(&self, probs: &[f64], threshold: f64) -> Result<Metrics, LengthMismatch> {
        Metrics::evaluate(probs, &self.0, threshold)
    }
}

/// Normalized features with full labels, for validation and test.
#[derive(Debug, Clone)]
pub struct LabeledSet {
    pub features: Tensor<f32>,
    pub truth: Vec<bool>,
}

impl LabeledSet {
    pub fn from_images(ds: &BinaryImageSet) -> Self {
        Self {
            features: ds.features(),
            truth: ds.truth.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.truth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.truth.is_empty()
    }

    pub fn metrics(&self, probs: &[f64], threshold: f64) -> Result<Metrics, LengthMismatch> {
        Metrics::evaluate(probs, &self.truth, threshold)
    }
}

/// What the trainer sees of the training split: no unlabeled truth.
#[derive(Debug, Clone, Copy)]
pub struct TrainView<'a> {
    pub positives: &'a Tensor<f32>,
    pub unlabeled: &'a Tensor<f32>,
}

#[derive(Debug, Clone)]
pub struct PuSplit {
    pub seed: u64,
    pub indices: PuIndices,
    positives: Tensor<f32>,
    unlabeled: Tensor<f32>,
    pub unlabeled_truth: HiddenTruth,
    pub val: LabeledSet,
    pub test: LabeledSet,
}

impl PuSplit {
    pub fn assemble(
        train: &BinaryImageSet,
        indices: PuIndices,
        val: &BinaryImageSet,
        test: &BinaryImageSet,
        seed: u64,
    ) -> Result<Self, DataError> {
        indices.validate(&train.truth)?;
        for (name, ds) in [("val", val), ("test", test)] {
            if (ds.h, ds.w, ds.c) != (train.h, train.w, train.c) {
                return Err(DataError::Shape(format!(
                    "{name} images are {}x{}x{}, train images are {}x{}x{}",
                    ds.h, ds.w, ds.c, train.h, train.w, train.c
                )));
            }
        }
        let features = train.features();
        Ok(Self {
            seed,
            positives: features.gather_rows(&indices.positives),
            unlabeled: features.gather_rows(&indices.unlabeled),
            unlabeled_truth: HiddenTruth(indices.unlabeled.iter().map(|&i| train.truth[i]).collect()),
            val: LabeledSet::from_images(val),
            test: LabeledSet::from_images(test),
            indices,
        })
    }

    pub fn train_view(&self) -> TrainView<'_> {
        TrainView {
            positives: &self.positives,
            unlabeled: &self.unlabeled,
        }
    }

    /// Feature shape of one sample, `[H, W, C]`.
    pub fn sample_shape(&self) -> &[usize] {
        &self.val.features.shape()[1..]
    }
}

/// Draws the labeled positives and assembles the full split.
pub fn make_pu_split(
    train: &BinaryImageSet,
    val: &BinaryImageSet,
    test: &BinaryImageSet,
    n_positive: usize,
    seed: u64,
) -> Result<PuSplit, DataError> {
    let indices = PuIndices::draw(train, n_positive, seed)?;
    PuSplit::assemble(train, indices, val, test, seed)
}
