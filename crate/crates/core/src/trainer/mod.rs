//! Alternating discriminator/classifier training.
//!
//! One step runs `k` discriminator updates, each on a batch of labeled
//! positives plus a batch of unlabeled samples, then one classifier update
//! on a fresh unlabeled batch. An epoch is `⌈|unlabeled| / batch⌉` steps.
//! Each sample stream walks a shuffled permutation in disjoint batches and
//! reshuffles when exhausted or at the start of an epoch. The classifier
//! is scored on the validation split after every epoch and the best-F1
//! snapshot is returned.

mod early_stop;
mod grid;
mod history;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::compute::{sgd_step, ShapeError, Tensor};
use crate::divergence::{DivergenceError, HolderExponents};
use crate::metrics::{Metrics, DEFAULT_THRESHOLD};
use crate::models::{build, Architecture, Model};
use crate::objective::{BatchView, ObjectiveKind, Reduction};
use crate::pudata::PuSplit;
use crate::seed;

pub use early_stop::early_stop;
pub use grid::{grid_map, grid_search, CellSummary, GridCell, GridResult};
pub use history::{history_csv_string, write_history_csv, HISTORY_HEADER};

/// Rows per inference chunk when scoring evaluation sets.
const EVAL_CHUNK: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub objective: ObjectiveKind,
    /// Hölder exponent; ignored by the KL objective.
    pub alpha: f64,
    pub lambda: f64,
    pub lr: f64,
    pub batch: usize,
    /// Discriminator updates per classifier update.
    pub k: usize,
    pub max_epochs: usize,
    pub early_stop: bool,
    pub patience_window: usize,
    pub min_delta: f64,
    pub seed: u64,
    pub reduction: Reduction,
    /// Whether the discriminator's gradient includes the λ terms.
    pub d_lambda_terms: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            objective: ObjectiveKind::Holder,
            alpha: 2.0,
            lambda: 0.1,
            lr: 0.5,
            batch: 64,
            k: 1,
            max_epochs: 200,
            early_stop: true,
            patience_window: 15,
            min_delta: 0.01,
            seed: 0,
            reduction: Reduction::Mean,
            d_lambda_terms: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let mut problems = Vec::new();
        if self.objective == ObjectiveKind::Holder {
            if let Err(e) = HolderExponents::new(self.alpha) {
                problems.push(format!("alpha: {e}"));
            }
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            problems.push(format!("lambda must be finite and >= 0, got {}", self.lambda));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            problems.push(format!("lr must be finite and > 0, got {}", self.lr));
        }
        if self.batch == 0 {
            problems.push("batch must be >= 1".into());
        }
        if self.k == 0 {
            problems.push("k must be >= 1".into());
        }
        if self.max_epochs == 0 {
            problems.push("max_epochs must be >= 1".into());
        }
        if self.patience_window == 0 {
            problems.push("patience_window must be >= 1".into());
        }
        if !self.min_delta.is_finite() {
            problems.push("min_delta must be finite".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(TrainError::Config(problems.join("; ")))
        }
    }

    fn exponents(&self) -> HolderExponents {
        match self.objective {
            ObjectiveKind::Holder => HolderExponents::new(self.alpha).expect("validated"),
            ObjectiveKind::Kl => HolderExponents::cauchy_schwarz(),
        }
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("training data: {0}")]
    Data(String),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    /// `epoch` and `step` are 1-based.
    #[error("non-finite {what} at epoch {epoch}, step {step}")]
    NonFinite { epoch: usize, step: usize, what: String },
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
}

/// Validation scores of the classifier after one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean value `V` over the epoch's discriminator updates.
    pub value: f64,
    pub val: Metrics,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Classifier snapshot from `best_epoch`.
    pub classifier: Model<f32>,
    pub discriminator: Model<f32>,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub val: Metrics,
    pub test: Metrics,
}

/// Instrumentation hooks, all no-ops by default.
pub trait TrainObserver {
    fn on_d_update(&mut self, _epoch: usize) {}
    fn on_c_update(&mut self, _epoch: usize) {}
    fn on_epoch(&mut self, _record: &EpochRecord) {}
}

impl TrainObserver for () {}

/// Disjoint batches over a reshuffled permutation of `0..n`.
struct BatchCursor {
    order: Vec<usize>,
    pos: usize,
}

impl BatchCursor {
    fn new(n: usize) -> Self {
        Self {
            order: (0..n).collect(),
            pos: n,
        }
    }

    fn reshuffle(&mut self, rng: &mut ChaCha8Rng) {
        self.order.shuffle(rng);
        self.pos = 0;
    }

    fn next(&mut self, batch: usize, rng: &mut ChaCha8Rng) -> &[usize] {
        if self.pos >= self.order.len() {
            self.reshuffle(rng);
        }
        let start = self.pos;
        self.pos = (start + batch).min(self.order.len());
        &self.order[start..self.pos]
    }
}

fn batch_view<'a>(
    cfg: &TrainConfig,
    exps: HolderExponents,
    d_pos: &'a [f64],
    d_unl: &'a [f64],
    c_unl: &'a [f64],
) -> BatchView<'a> {
    BatchView::new(d_pos, d_unl, c_unl, cfg.lambda, exps)
        .with_reduction(cfg.reduction)
        .with_d_lambda_terms(cfg.d_lambda_terms)
}

pub fn train(cfg: &TrainConfig, data: &PuSplit, arch: Architecture) -> Result<TrainOutcome, TrainError> {
    train_observed(cfg, data, arch, &mut ())
}

pub fn train_observed(
    cfg: &TrainConfig,
    data: &PuSplit,
    arch: Architecture,
    observer: &mut dyn TrainObserver,
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    let view = data.train_view();
    let (pos, unl) = (view.positives, view.unlabeled);
    if pos.rows() == 0 || unl.rows() == 0 || data.val.is_empty() {
        return Err(TrainError::Data(format!(
            "need non-empty positives, unlabeled and validation sets, got {}, {}, {}",
            pos.rows(),
            unl.rows(),
            data.val.len()
        )));
    }
    let exps = cfg.exponents();
    let mut d: Model<f32> = build(arch, seed::derive(cfg.seed, seed::INIT_D));
    let mut c: Model<f32> = build(arch, seed::derive(cfg.seed, seed::INIT_C));
    let mut rng = seed::stream(cfg.seed, seed::SHUFFLE);
    let mut pos_cursor = BatchCursor::new(pos.rows());
    let mut d_cursor = BatchCursor::new(unl.rows());
    let mut c_cursor = BatchCursor::new(unl.rows());
    let steps = unl.rows().div_ceil(cfg.batch);

    let mut history: Vec<EpochRecord> = Vec::new();
    let mut best: Option<(f64, usize, Model<f32>)> = None;
    for epoch in 1..=cfg.max_epochs {
        pos_cursor.reshuffle(&mut rng);
        d_cursor.reshuffle(&mut rng);
        c_cursor.reshuffle(&mut rng);
        let mut value_sum = 0.0;
        for step in 0..steps {
            for _ in 0..cfg.k {
                let xp = pos.gather_rows(pos_cursor.next(cfg.batch, &mut rng));
                let unl_idx = d_cursor.next(cfg.batch, &mut rng).to_vec();
                let xu = unl.gather_rows(&unl_idx);
                let d_out = d.forward(&Tensor::concat_rows(&xp, &xu)?)?;
                let c_out = c.infer(&xu)?;
                let b = batch_view(cfg, exps, &d_out[..xp.rows()], &d_out[xp.rows()..], &c_out);
                let v = cfg.objective.value(&b);
                if !v.is_finite() {
                    log::error!("unlabeled rows in the failing batch: {unl_idx:?}");
                    return Err(TrainError::NonFinite {
                        epoch,
                        step: step + 1,
                        what: format!("objective value ({v})"),
                    });
                }
                value_sum += v;
                d.backward(&cfg.objective.d_grads(&b))?;
                sgd_step(d.params_mut(), cfg.lr);
                observer.on_d_update(epoch);
            }
            let xu = unl.gather_rows(c_cursor.next(cfg.batch, &mut rng));
            let d_out = d.infer(&xu)?;
            let c_out = c.forward(&xu)?;
            let b = batch_view(cfg, exps, &[], &d_out, &c_out);
            c.backward(&cfg.objective.c_grads(&b))?;
            sgd_step(c.params_mut(), cfg.lr);
            observer.on_c_update(epoch);
            if !d.all_finite() || !c.all_finite() {
                return Err(TrainError::NonFinite {
                    epoch,
                    step: step + 1,
                    what: "network parameters".into(),
                });
            }
        }
        let val = data.val.metrics(&c.infer_chunked(&data.val.features, EVAL_CHUNK)?, DEFAULT_THRESHOLD).expect("aligned");
        let record = EpochRecord {
            epoch,
            value: value_sum / (steps * cfg.k) as f64,
            val,
        };
        log::debug!("epoch {epoch}: V={:.6} val_f1={:.4}", record.value, val.f1);
        observer.on_epoch(&record);
        history.push(record);
        if best.as_ref().is_none_or(|(f1, _, _)| val.f1 > *f1) {
            best = Some((val.f1, epoch, c.clone()));
        }
        let f1s: Vec<f64> = history.iter().map(|r| r.val.f1).collect();
        if cfg.early_stop && early_stop(&f1s, cfg.patience_window, cfg.min_delta) {
            log::info!("early stop after epoch {epoch}");
            break;
        }
    }
    let (_, best_epoch, classifier) = best.expect("at least one epoch");
    let val = history[best_epoch - 1].val;
    let test = evaluate(&classifier, &data.test.features, &data.test.truth)?;
    Ok(TrainOutcome {
        classifier,
        discriminator: d,
        history,
        best_epoch,
        val,
        test,
    })
}

/// Metrics of `model` on a labeled feature set at the default threshold.
pub fn evaluate(model: &Model<f32>, features: &Tensor<f32>, truth: &[bool]) -> Result<Metrics, TrainError> {
    let probs = model.infer_chunked(features, EVAL_CHUNK)?;
    Metrics::evaluate(&probs, truth, DEFAULT_THRESHOLD).map_err(|e| TrainError::Data(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::MlpSpec;
    use crate::pudata::{make_pu_split, synth_gaussians, Binarize};

    fn small_split(seed: u64) -> (PuSplit, Architecture) {
        let b = |n, s| synth_gaussians(n, 2, 6.0, s).binarize(Binarize::Auto);
        let split = make_pu_split(&b(150, seed), &b(40, seed + 1), &b(40, seed + 2), 30, seed).unwrap();
        (split, Architecture::Mlp(MlpSpec::new(2, [8, 8])))
    }

    fn quick_cfg() -> TrainConfig {
        TrainConfig {
            max_epochs: 3,
            batch: 32,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn seeded_runs_repeat_exactly() {
        let (data, arch) = small_split(1);
        let a = train(&quick_cfg(), &data, arch).unwrap();
        let b = train(&quick_cfg(), &data, arch).unwrap();
        assert_eq!(history_csv_string(&a.history), history_csv_string(&b.history));
        assert_eq!(a.history.len(), 3);
    }

    #[test]
    fn zero_lambda_leaves_classifier_untouched() {
        let (data, arch) = small_split(2);
        let cfg = TrainConfig { lambda: 0.0, ..quick_cfg() };
        let out = train(&cfg, &data, arch).unwrap();
        let init: Model<f32> = build(arch, seed::derive(cfg.seed, seed::INIT_C));
        for (p, q) in out.classifier.params().iter().zip(init.params()) {
            assert_eq!(p.value, q.value);
        }
        let trained_d = out.discriminator.params()[0].value.clone();
        let init_d: Model<f32> = build(arch, seed::derive(cfg.seed, seed::INIT_D));
        assert_ne!(trained_d, init_d.params()[0].value);
    }

    #[derive(Default)]
    struct Counter {
        d: usize,
        c: usize,
        epochs: usize,
    }

    impl TrainObserver for Counter {
        fn on_d_update(&mut self, _: usize) {
            self.d += 1;
        }
        fn on_c_update(&mut self, _: usize) {
            assert_eq!(self.d, 3 * (self.c + 1));
            self.c += 1;
        }
        fn on_epoch(&mut self, _: &EpochRecord) {
            self.epochs += 1;
        }
    }

    #[test]
    fn k_discriminator_updates_per_classifier_update() {
        let (data, arch) = small_split(3);
        let cfg = TrainConfig { k: 3, ..quick_cfg() };
        let mut counter = Counter::default();
        train_observed(&cfg, &data, arch, &mut counter).unwrap();
        // 270 unlabeled rows / batch 32 → 9 steps per epoch.
        assert_eq!((counter.c, counter.d, counter.epochs), (27, 81, 3));
    }

    #[test]
    fn returned_classifier_has_best_history_f1() {
        let (data, arch) = small_split(4);
        let out = train(&TrainConfig { max_epochs: 6, ..quick_cfg() }, &data, arch).unwrap();
        let max = out.history.iter().map(|r| r.val.f1).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(out.val.f1, max);
        let again = evaluate(&out.classifier, &data.val.features, &data.val.truth).unwrap();
        assert_eq!(again, out.val);
    }

    #[test]
    fn divergence_is_an_error_not_a_panic() {
        let (data, arch) = small_split(5);
        let err = train(&TrainConfig { lr: 1e38, ..quick_cfg() }, &data, arch).unwrap_err();
        assert!(matches!(err, TrainError::NonFinite { .. }), "{err}");
    }

    #[test]
    fn config_validation_lists_every_problem() {
        let cfg = TrainConfig { alpha: 1.0, batch: 0, lr: -1.0, ..TrainConfig::default() };
        let TrainError::Config(msg) = cfg.validate().unwrap_err() else { panic!() };
        assert_eq!(msg.split("; ").count(), 3, "{msg}");
        let kl = TrainConfig { objective: ObjectiveKind::Kl, alpha: 0.5, ..TrainConfig::default() };
        assert!(kl.validate().is_ok());
    }

    #[test]
    fn cursor_partitions_then_reshuffles() {
        let mut rng = seed::stream(0, seed::SHUFFLE);
        let mut cur = BatchCursor::new(5);
        cur.reshuffle(&mut rng);
        let mut seen: Vec<usize> = Vec::new();
        seen.extend(cur.next(2, &mut rng));
        seen.extend(cur.next(2, &mut rng));
        let last = cur.next(2, &mut rng).to_vec();
        assert_eq!(last.len(), 1);
        seen.extend(last);
        seen.sort();
        assert_eq!(seen, [0, 1, 2, 3, 4]);
        assert_eq!(cur.next(2, &mut rng).len(), 2);
    }
}
