//! Positive-unlabeled learning with an adversarial classifier/discriminator
//! pair trained under a Hölder-divergence objective, plus the KL-based
//! baseline.
//!
//! The crate is organised bottom-up:
//!
//! - [`divergence`]: Hölder and KL divergences between Bernoulli and discrete
//!   distributions, with analytic gradients.
//! - [`compute`]: tensors, dense and convolutional layers, SGD.
//! - [`models`]: the MLP and CNN networks, checkpoints and saliency maps.
//! - [`objective`]: the adversarial value function and its gradients.
//! - [`metrics`]: confusion-matrix metrics.
//! - [`pudata`]: dataset directories, positive-unlabeled splits, synthetic data.
//! - [`trainer`]: the alternating training loop, early stopping, grid search.

pub mod compute;
pub mod divergence;
pub mod metrics;
pub mod models;
pub mod objective;
pub mod pudata;
pub mod seed;
pub mod trainer;

pub use compute::{Param, Scalar, ShapeError, Tensor};
pub use divergence::{BernoulliDist, Divergence, DivergenceError, HolderExponents};
pub use metrics::{ConfusionMatrix, Metrics};
pub use models::{Architecture, Checkpoint, CnnSpec, MlpSpec, Model};
pub use objective::{BatchView, ObjectiveKind, Reduction};
pub use pudata::{Binarize, BinaryImageSet, DataError, LabeledImageSet, PuSplit};
pub use trainer::{train, EpochRecord, GridResult, TrainConfig, TrainError, TrainOutcome};
