//! Confusion-matrix metrics.
//!
//! A prediction is positive when `prob ≥ threshold`. A metric whose
//! denominator is zero is reported as `0` and flagged degenerate.

use thiserror::Error;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{probs} predictions for {truths} labels")]
pub struct LengthMismatch {
    pub probs: usize,
    pub truths: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn record(&mut self, predicted: bool, truth: bool) {
        match (predicted, truth) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }
}

pub fn confusion(probs: &[f64], truths: &[bool], threshold: f64) -> Result<ConfusionMatrix, LengthMismatch> {
    if probs.len() != truths.len() {
        return Err(LengthMismatch {
            probs: probs.len(),
            truths: truths.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in probs.iter().zip(truths) {
        cm.record(p >= threshold, t);
    }
    Ok(cm)
}

/// A metric value; `degenerate` marks a zero denominator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub value: f64,
    pub degenerate: bool,
}

fn ratio(num: u64, den: u64) -> Score {
    if den == 0 {
        Score { value: 0.0, degenerate: true }
    } else {
        Score {
            value: num as f64 / den as f64,
            degenerate: false,
        }
    }
}

pub fn accuracy(cm: &ConfusionMatrix) -> Score {
    ratio(cm.tp + cm.tn, cm.total())
}

pub fn precision(cm: &ConfusionMatrix) -> Score {
    ratio(cm.tp, cm.tp + cm.fp)
}

pub fn recall(cm: &ConfusionMatrix) -> Score {
    ratio(cm.tp, cm.tp + cm.fn_)
}

/// `2PR / (P + R)`.
pub fn f1(cm: &ConfusionMatrix) -> Score {
    let (p, r) = (precision(cm), recall(cm));
    let sum = p.value + r.value;
    if sum == 0.0 {
        return Score {
            value: 0.0,
            degenerate: true,
        };
    }
    Score {
        value: 2.0 * p.value * r.value / sum,
        degenerate: p.degenerate || r.degenerate,
    }
}

/// All four metrics for one evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// True if any metric hit a zero denominator.
    pub degenerate: bool,
    pub confusion: ConfusionMatrix,
}

impl Metrics {
    pub fn from_confusion(cm: ConfusionMatrix) -> Self {
        let scores = [accuracy(&cm), precision(&cm), recall(&cm), f1(&cm)];
        Self {
            accuracy: scores[0].value,
            precision: scores[1].value,
            recall: scores[2].value,
            f1: scores[3].value,
            degenerate: scores.iter().any(|s| s.degenerate),
            confusion: cm,
        }
    }

    pub fn evaluate(probs: &[f64], truths: &[bool], threshold: f64) -> Result<Self, LengthMismatch> {
        Ok(Self::from_confusion(confusion(probs, truths, threshold)?))
    }
}
