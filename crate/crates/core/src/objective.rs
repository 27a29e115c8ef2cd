//! Adversarial value function and per-player output gradients.
//!
//! With discriminator outputs `d` and classifier outputs `c`, the HD-PAN
//! value is
//!
//! ```text
//! V = −Σᵢ D(Pᵢ ‖ dᵢ) + λ·( Σⱼ D(dⱼ ‖ cⱼ) − Σⱼ D(dⱼ ‖ 1 − cⱼ) )
//! ```
//!
//! where `Pᵢ` is the δ-target (1 for labeled positives, 0 for unlabeled),
//! `D` the Hölder pseudo-divergence and `j` runs over unlabeled samples.
//! The discriminator ascends `V` and the classifier descends it; both are
//! written here as descent on `loss_D = −V` and `loss_C = +V`.
//!
//! The KL baseline uses the log form
//!
//! ```text
//! V = E_pos[log d] + E_unl[log(1 − d)] + λ·E_unl[(log(1 − c) − log c)(2d − 1)]
//! ```
//!
//! which is what the HD-PAN value becomes when every divergence is KL.

use crate::divergence::{BernoulliDist, Divergence, HolderExponents};

/// How per-sample terms are combined within each set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    /// Mean over positives and mean over unlabeled samples.
    #[default]
    Mean,
    /// Plain sums.
    Sum,
}

impl Reduction {
    fn weight(self, n: usize) -> f64 {
        match self {
            Reduction::Mean if n == 0 => 0.0,
            Reduction::Mean => 1.0 / n as f64,
            Reduction::Sum => 1.0,
        }
    }
}

/// Network outputs for one mini-batch plus the objective's constants.
///
/// `d_unl` and `c_unl` are aligned over the same unlabeled samples.
/// Probabilities are clamped on use.
#[derive(Debug, Clone, Copy)]
pub struct BatchView<'a> {
    pub d_pos: &'a [f64],
    pub d_unl: &'a [f64],
    pub c_unl: &'a [f64],
    pub lambda: f64,
    pub exps: HolderExponents,
    pub reduction: Reduction,
    /// Whether the discriminator's gradient includes the λ terms.
    pub d_lambda_terms: bool,
}

impl<'a> BatchView<'a> {
    pub fn new(d_pos: &'a [f64], d_unl: &'a [f64], c_unl: &'a [f64], lambda: f64, exps: HolderExponents) -> Self {
        assert_eq!(d_unl.len(), c_unl.len(), "d_unl and c_unl must be aligned");
        assert!(lambda.is_finite() && lambda >= 0.0, "lambda must be finite and non-negative");
        Self {
            d_pos,
            d_unl,
            c_unl,
            lambda,
            exps,
            reduction: Reduction::Mean,
            d_lambda_terms: true,
        }
    }

    pub fn with_reduction(mut self, reduction: Reduction) -> Self {
        self.reduction = reduction;
        self
    }

    pub fn with_d_lambda_terms(mut self, on: bool) -> Self {
        self.d_lambda_terms = on;
        self
    }

    fn weights(&self) -> (f64, f64) {
        (self.reduction.weight(self.d_pos.len()), self.reduction.weight(self.d_unl.len()))
    }
}

fn positive_target() -> BernoulliDist {
    BernoulliDist::clamped(1.0)
}

fn unlabeled_target() -> BernoulliDist {
    BernoulliDist::clamped(0.0)
}

/// The HD-PAN value with an arbitrary Bernoulli divergence.
pub fn divergence_value(b: &BatchView, div: Divergence) -> f64 {
    let (wp, wu) = b.weights();
    let b1 = BernoulliDist::clamped;
    let fit_pos: f64 = b.d_pos.iter().map(|&d| div.eval(positive_target(), b1(d))).sum();
    let fit_unl: f64 = b.d_unl.iter().map(|&d| div.eval(unlabeled_target(), b1(d))).sum();
    let adversarial: f64 = b
        .d_unl
        .iter()
        .zip(b.c_unl)
        .map(|(&d, &c)| {
            let (d, c) = (b1(d), b1(c));
            div.eval(d, c) - div.eval(d, c.inverse())
        })
        .sum();
    -(wp * fit_pos + wu * fit_unl) + b.lambda * wu * adversarial
}

/// `∂(−V)/∂d` for `d_pos ++ d_unl`, classifier outputs held constant.
pub fn divergence_d_grads(b: &BatchView, div: Divergence) -> Vec<f64> {
    let (wp, wu) = b.weights();
    let b1 = BernoulliDist::clamped;
    let mut out = Vec::with_capacity(b.d_pos.len() + b.d_unl.len());
    out.extend(b.d_pos.iter().map(|&d| wp * div.grad(positive_target(), b1(d)).1));
    out.extend(b.d_unl.iter().zip(b.c_unl).map(|(&d, &c)| {
        let (d, c) = (b1(d), b1(c));
        let mut g = wu * div.grad(unlabeled_target(), d).1;
        if b.d_lambda_terms {
            g -= b.lambda * wu * (div.grad(d, c).0 - div.grad(d, c.inverse()).0);
        }
        g
    }));
    out
}

/// `∂V/∂c` for `c_unl`, discriminator outputs held constant.
pub fn divergence_c_grads(b: &BatchView, div: Divergence) -> Vec<f64> {
    let (_, wu) = b.weights();
    let b1 = BernoulliDist::clamped;
    b.d_unl
        .iter()
        .zip(b.c_unl)
        .map(|(&d, &c)| {
            let (d, c) = (b1(d), b1(c));
            // d/dc of D(d ‖ 1 − c) is −∂₂D evaluated at 1 − c.
            b.lambda * wu * (div.grad(d, c).1 + div.grad(d, c.inverse()).1)
        })
        .collect()
}

/// HD-PAN value with the Hölder divergence of `b.exps`.
pub fn hdpan_value(b: &BatchView) -> f64 {
    divergence_value(b, Divergence::Holder(b.exps))
}

pub fn d_output_grads(b: &BatchView) -> Vec<f64> {
    divergence_d_grads(b, Divergence::Holder(b.exps))
}

pub fn c_output_grads(b: &BatchView) -> Vec<f64> {
    divergence_c_grads(b, Divergence::Holder(b.exps))
}

/// Log-form KL baseline value. `b.exps` is ignored.
pub fn pan_kl_value(b: &BatchView) -> f64 {
    let (wp, wu) = b.weights();
    let c1 = |p: f64| BernoulliDist::clamped(p).p();
    let pos: f64 = b.d_pos.iter().map(|&d| c1(d).ln()).sum();
    let unl: f64 = b.d_unl.iter().map(|&d| (1.0 - c1(d)).ln()).sum();
    let adv: f64 = b
        .d_unl
        .iter()
        .zip(b.c_unl)
        .map(|(&d, &c)| {
            let (d, c) = (c1(d), c1(c));
            ((1.0 - c).ln() - c.ln()) * (2.0 * d - 1.0)
        })
        .sum();
    wp * pos + wu * unl + b.lambda * wu * adv
}

pub fn pan_kl_d_grads(b: &BatchView) -> Vec<f64> {
    let (wp, wu) = b.weights();
    let c1 = |p: f64| BernoulliDist::clamped(p).p();
    let mut out = Vec::with_capacity(b.d_pos.len() + b.d_unl.len());
    out.extend(b.d_pos.iter().map(|&d| -wp / c1(d)));
    out.extend(b.d_unl.iter().zip(b.c_unl).map(|(&d, &c)| {
        let (d, c) = (c1(d), c1(c));
        let mut g = wu / (1.0 - d);
        if b.d_lambda_terms {
            g -= b.lambda * wu * 2.0 * ((1.0 - c).ln() - c.ln());
        }
        g
    }));
    out
}

pub fn pan_kl_c_grads(b: &BatchView) -> Vec<f64> {
    let (_, wu) = b.weights();
    let c1 = |p: f64| BernoulliDist::clamped(p).p();
    b.d_unl
        .iter()
        .zip(b.c_unl)
        .map(|(&d, &c)| {
            let (d, c) = (c1(d), c1(c));
            b.lambda * wu * (2.0 * d - 1.0) * (-1.0 / (1.0 - c) - 1.0 / c)
        })
        .collect()
}

/// Which value function drives training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObjectiveKind {
    /// Hölder-divergence objective.
    Holder,
    /// Log-form KL baseline.
    Kl,
}

impl ObjectiveKind {
    pub fn value(self, b: &BatchView) -> f64 {
        match self {
            ObjectiveKind::Holder => hdpan_value(b),
            ObjectiveKind::Kl => pan_kl_value(b),
        }
    }

    pub fn d_grads(self, b: &BatchView) -> Vec<f64> {
        match self {
            ObjectiveKind::Holder => d_output_grads(b),
            ObjectiveKind::Kl => pan_kl_d_grads(b),
        }
    }

    pub fn c_grads(self, b: &BatchView) -> Vec<f64> {
        match self {
            ObjectiveKind::Holder => c_output_grads(b),
            ObjectiveKind::Kl => pan_kl_c_grads(b),
        }
    }
}
