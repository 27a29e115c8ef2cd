//! Hölder pseudo-divergences and KL divergence over discrete and Bernoulli
//! distributions.
//!
//! The Hölder pseudo-divergence measures how loose the Hölder inequality
//!
//! ```text
//! Σ pᵢ qᵢ ≤ (Σ pᵢ^α)^{1/α} (Σ qᵢ^β)^{1/β},    1/α + 1/β = 1
//! ```
//!
//! is for a given pair of distributions:
//!
//! ```text
//! D_α(p : q) = −log( Σ pᵢqᵢ / ((Σ pᵢ^α)^{1/α} (Σ qᵢ^β)^{1/β}) ) ≥ 0
//! ```
//!
//! It vanishes exactly when `p^α ∝ q^β`; at `α = β = 2` this is the
//! Cauchy–Schwarz divergence, which is zero iff `p = q`. Outside that point
//! the divergence is asymmetric.
//!
//! All evaluation happens in `f64`. Bernoulli arguments are clamped to
//! `[PROB_EPS, 1 − PROB_EPS]` so that the degenerate 0/1 targets used by
//! the adversarial objective produce finite logs.

use thiserror::Error;

/// Clamp applied to every Bernoulli probability before a divergence is
/// evaluated.
pub const PROB_EPS: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DivergenceError {
    #[error("Hölder exponent must be > 1, got {0}")]
    ExponentDomain(f64),
    #[error("distribution length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid distribution weights: {0}")]
    InvalidWeights(&'static str),
    /// `Σ pᵢqᵢ = 0`: the supports are disjoint and the divergence is infinite.
    #[error("divergence is infinite (disjoint supports)")]
    Infinite,
}

/// Returns the Hölder conjugate `β = α / (α − 1)` of `alpha`.
///
/// Only the `α > 1` branch is supported; `α < 1` would give a negative
/// conjugate.
pub fn conjugate(alpha: f64) -> Result<f64, DivergenceError> {
    if !(alpha.is_finite() && alpha > 1.0) {
        return Err(DivergenceError::ExponentDomain(alpha));
    }
    Ok(alpha / (alpha - 1.0))
}

/// A conjugate exponent pair `(α, β)` with `1/α + 1/β = 1` and both `> 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderExponents {
    alpha: f64,
    beta: f64,
}

impl HolderExponents {
    pub fn new(alpha: f64) -> Result<Self, DivergenceError> {
        let beta = conjugate(alpha)?;
        Ok(Self { alpha, beta })
    }

    /// The Cauchy–Schwarz pair `α = β = 2`.
    pub fn cauchy_schwarz() -> Self {
        Self {
            alpha: 2.0,
            beta: 2.0,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Probability of the positive outcome of a 0-1 variable, stored clamped.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BernoulliDist(f64);

impl BernoulliDist {
    /// Clamps `p` into `[PROB_EPS, 1 − PROB_EPS]`. NaN maps to the lower
    /// bound so downstream code never sees a non-finite probability.
    pub fn clamped(p: f64) -> Self {
        if p.is_nan() {
            return Self(PROB_EPS);
        }
        Self(p.clamp(PROB_EPS, 1.0 - PROB_EPS))
    }

    pub fn p(self) -> f64 {
        self.0
    }

    /// The inverse distribution, success probability `1 − p`.
    pub fn inverse(self) -> Self {
        Self(1.0 - self.0)
    }
}

/// Non-negative weights over a finite outcome set. Need not be normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDist(Vec<f64>);

impl DiscreteDist {
    pub fn new(weights: Vec<f64>) -> Result<Self, DivergenceError> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(DivergenceError::InvalidWeights(
                "entries must be finite and non-negative",
            ));
        }
        if !weights.iter().any(|w| *w > 0.0) {
            return Err(DivergenceError::InvalidWeights(
                "at least one entry must be positive",
            ));
        }
        Ok(Self(weights))
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }
}

fn power_norm(values: &[f64], exponent: f64) -> f64 {
    values.iter().map(|v| v.powf(exponent)).sum::<f64>().powf(1.0 / exponent)
}

/// Hölder pseudo-divergence between two discrete distributions.
pub fn holder_div_discrete(
    p: &DiscreteDist,
    q: &DiscreteDist,
    exps: HolderExponents,
) -> Result<f64, DivergenceError> {
    let (pw, qw) = (p.weights(), q.weights());
    if pw.len() != qw.len() {
        return Err(DivergenceError::LengthMismatch(pw.len(), qw.len()));
    }
    let inner: f64 = pw.iter().zip(qw).map(|(a, b)| a * b).sum();
    if inner <= 0.0 {
        return Err(DivergenceError::Infinite);
    }
    let rhs = power_norm(pw, exps.alpha) * power_norm(qw, exps.beta);
    Ok(-(inner / rhs).ln())
}

/// Hölder pseudo-divergence between `Bernoulli(p)` and `Bernoulli(q)`:
///
/// ```text
/// −ln(pq + (1−p)(1−q)) + (1/α)·ln(p^α + (1−p)^α) + (1/β)·ln(q^β + (1−q)^β)
/// ```
pub fn holder_div_bernoulli(p: BernoulliDist, q: BernoulliDist, exps: HolderExponents) -> f64 {
    let (p, q) = (p.p(), q.p());
    let (a, b) = (exps.alpha, exps.beta);
    let inner = p * q + (1.0 - p) * (1.0 - q);
    -inner.ln() + (p.powf(a) + (1.0 - p).powf(a)).ln() / a + (q.powf(b) + (1.0 - q).powf(b)).ln() / b
}

/// `(∂D/∂p, ∂D/∂q)` of [`holder_div_bernoulli`], taken at the clamped point.
pub fn holder_div_bernoulli_grad(
    p: BernoulliDist,
    q: BernoulliDist,
    exps: HolderExponents,
) -> (f64, f64) {
    let (p, q) = (p.p(), q.p());
    let (a, b) = (exps.alpha, exps.beta);
    let inner = p * q + (1.0 - p) * (1.0 - q);
    let norm_p = p.powf(a) + (1.0 - p).powf(a);
    let norm_q = q.powf(b) + (1.0 - q).powf(b);
    let dp = -(2.0 * q - 1.0) / inner + (p.powf(a - 1.0) - (1.0 - p).powf(a - 1.0)) / norm_p;
    let dq = -(2.0 * p - 1.0) / inner + (q.powf(b - 1.0) - (1.0 - q).powf(b - 1.0)) / norm_q;
    (dp, dq)
}

/// KL divergence `KL(Bernoulli(p) ‖ Bernoulli(q))` in nats.
pub fn kl_bernoulli(p: BernoulliDist, q: BernoulliDist) -> f64 {
    let (p, q) = (p.p(), q.p());
    p * (p / q).ln() + (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln()
}

/// `(∂KL/∂p, ∂KL/∂q)` of [`kl_bernoulli`].
pub fn kl_bernoulli_grad(p: BernoulliDist, q: BernoulliDist) -> (f64, f64) {
    let (p, q) = (p.p(), q.p());
    let dp = (p / q).ln() - ((1.0 - p) / (1.0 - q)).ln();
    let dq = -p / q + (1.0 - p) / (1.0 - q);
    (dp, dq)
}

/// Both sides of the Hölder inequality for non-negative vectors `f`, `g`:
/// `(Σ fᵢgᵢ, ‖f‖_α ‖g‖_β)`. The first never exceeds the second.
pub fn holder_inequality_sides(
    f: &[f64],
    g: &[f64],
    exps: HolderExponents,
) -> Result<(f64, f64), DivergenceError> {
    if f.len() != g.len() {
        return Err(DivergenceError::LengthMismatch(f.len(), g.len()));
    }
    let lhs = f.iter().zip(g).map(|(a, b)| a * b).sum();
    let rhs = power_norm(f, exps.alpha) * power_norm(g, exps.beta);
    Ok((lhs, rhs))
}

/// Divergence used inside the adversarial objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Divergence {
    Holder(HolderExponents),
    Kl,
}

impl Divergence {
    pub fn eval(self, p: BernoulliDist, q: BernoulliDist) -> f64 {
        match self {
            Divergence::Holder(e) => holder_div_bernoulli(p, q, e),
            Divergence::Kl => kl_bernoulli(p, q),
        }
    }

    pub fn grad(self, p: BernoulliDist, q: BernoulliDist) -> (f64, f64) {
        match self {
            Divergence::Holder(e) => holder_div_bernoulli_grad(p, q, e),
            Divergence::Kl => kl_bernoulli_grad(p, q),
        }
    }
}
