//! Classifier and discriminator networks.
//!
//! Both players share one of two fixed architectures and output the
//! probability that a sample is positive. The final logit is squashed in
//! `f64` and the probability clamped to `[PROB_EPS, 1 − PROB_EPS]`.

mod checkpoint;

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::compute::{flatten, relu, relu_backward, sigmoid_scalar, Affine, Conv2d, Param, Scalar, ShapeError, Tensor};
use crate::divergence::BernoulliDist;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint, CheckpointError};

/// Three-layer perceptron: two hidden layers and a single output unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden: [usize; 2],
}

impl MlpSpec {
    pub const DEFAULT_HIDDEN: [usize; 2] = [300, 300];

    pub fn new(input_dim: usize, hidden: [usize; 2]) -> Self {
        Self { input_dim, hidden }
    }

    pub fn param_count(&self) -> usize {
        let [h1, h2] = self.hidden;
        self.input_dim * h1 + h1 + h1 * h2 + h2 + h2 + 1
    }
}

/// Convolutional stack for 28×28 RGB input:
///
/// ```text
/// conv 3×3×84 → conv 3×3×84 /2 → conv 1×1×168 → conv 1×1×8 → 1000 → 1000 → 1
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CnnSpec;

/// `(kernel side, filters, stride, pad)` per conv layer.
const CNN_CONVS: [(usize, usize, usize, usize); 4] = [(3, 84, 1, 1), (3, 84, 2, 1), (1, 168, 1, 0), (1, 8, 1, 0)];
const CNN_DENSE: [usize; 3] = [1000, 1000, 1];

impl CnnSpec {
    pub const INPUT: [usize; 3] = [28, 28, 3];
    /// 14 × 14 × 8 features entering the first dense layer.
    pub const FLAT_DIM: usize = 1568;

    pub fn param_count(&self) -> usize {
        let mut c = Self::INPUT[2];
        let mut total = 0;
        for (k, f, _, _) in CNN_CONVS {
            total += k * k * c * f + f;
            c = f;
        }
        let mut width = Self::FLAT_DIM;
        for d in CNN_DENSE {
            total += width * d + d;
            width = d;
        }
        total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    Mlp(MlpSpec),
    Cnn(CnnSpec),
}

impl Architecture {
    pub fn param_count(&self) -> usize {
        match self {
            Architecture::Mlp(s) => s.param_count(),
            Architecture::Cnn(s) => s.param_count(),
        }
    }
}

#[derive(Debug, Clone)]
enum Layer<T: Scalar> {
    Flatten { input_shape: Option<Vec<usize>> },
    Affine(Affine<T>),
    Conv(Conv2d<T>),
    Relu { input: Option<Tensor<T>> },
}

impl<T: Scalar> Layer<T> {
    fn relu() -> Self {
        Layer::Relu { input: None }
    }

    fn flatten() -> Self {
        Layer::Flatten { input_shape: None }
    }

    fn infer(&self, x: Tensor<T>) -> Result<Tensor<T>, ShapeError> {
        match self {
            Layer::Flatten { .. } => Ok(flatten(x)),
            Layer::Affine(a) => a.infer(&x),
            Layer::Conv(c) => c.infer(&x),
            Layer::Relu { .. } => Ok(relu(&x)),
        }
    }

    fn forward(&mut self, x: Tensor<T>) -> Result<Tensor<T>, ShapeError> {
        match self {
            Layer::Flatten { input_shape } => {
                *input_shape = Some(x.shape().to_vec());
                Ok(flatten(x))
            }
            Layer::Affine(a) => a.forward(x),
            Layer::Conv(c) => c.forward(x),
            Layer::Relu { input } => {
                let y = relu(&x);
                *input = Some(x);
                Ok(y)
            }
        }
    }

    fn backward(&mut self, upstream: Tensor<T>) -> Result<Tensor<T>, ShapeError> {
        match self {
            Layer::Flatten { input_shape } => {
                let shape = input_shape.as_ref().ok_or(ShapeError::NoCache { op: "flatten" })?;
                upstream.reshape(shape)
            }
            Layer::Affine(a) => a.backward(&upstream),
            Layer::Conv(c) => c.backward(&upstream),
            Layer::Relu { input } => {
                let x = input.as_ref().ok_or(ShapeError::NoCache { op: "relu" })?;
                relu_backward(x, &upstream)
            }
        }
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        match self {
            Layer::Affine(a) => vec![&mut a.weight, &mut a.bias],
            Layer::Conv(c) => vec![&mut c.kernel, &mut c.bias],
            _ => vec![],
        }
    }

    fn params(&self) -> Vec<&Param<T>> {
        match self {
            Layer::Affine(a) => vec![&a.weight, &a.bias],
            Layer::Conv(c) => vec![&c.kernel, &c.bias],
            _ => vec![],
        }
    }
}

/// A network with a Bernoulli output head.
#[derive(Debug, Clone)]
pub struct Model<T: Scalar = f32> {
    arch: Architecture,
    layers: Vec<Layer<T>>,
    probs: Option<Vec<f64>>,
}

fn glorot<T: Scalar>(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Param<T> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let dist = Uniform::new_inclusive(-limit, limit).expect("finite init bound");
    Param::new(Tensor::from_fn(shape, |_| T::of(dist.sample(rng))))
}

fn dense<T: Scalar>(i: usize, o: usize, rng: &mut ChaCha8Rng) -> Layer<T> {
    Layer::Affine(Affine::new(glorot(&[i, o], i, o, rng), Param::new(Tensor::zeros(&[o]))))
}

/// Builds an MLP with uniform Glorot weights and zero biases.
pub fn build_mlp<T: Scalar>(spec: MlpSpec, seed: u64) -> Model<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [h1, h2] = spec.hidden;
    let layers = vec![
        Layer::flatten(),
        dense(spec.input_dim, h1, &mut rng),
        Layer::relu(),
        dense(h1, h2, &mut rng),
        Layer::relu(),
        dense(h2, 1, &mut rng),
    ];
    Model {
        arch: Architecture::Mlp(spec),
        layers,
        probs: None,
    }
}

pub fn build_cnn<T: Scalar>(seed: u64) -> Model<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::new();
    let mut c = CnnSpec::INPUT[2];
    for (k, f, stride, pad) in CNN_CONVS {
        let kernel = glorot(&[k, k, c, f], k * k * c, k * k * f, &mut rng);
        layers.push(Layer::Conv(Conv2d::new(kernel, Param::new(Tensor::zeros(&[f])), stride, pad)));
        layers.push(Layer::relu());
        c = f;
    }
    layers.push(Layer::flatten());
    let mut width = CnnSpec::FLAT_DIM;
    for (i, d) in CNN_DENSE.into_iter().enumerate() {
        layers.push(dense(width, d, &mut rng));
        if i + 1 < CNN_DENSE.len() {
            layers.push(Layer::relu());
        }
        width = d;
    }
    Model {
        arch: Architecture::Cnn(CnnSpec),
        layers,
        probs: None,
    }
}

pub fn build<T: Scalar>(arch: Architecture, seed: u64) -> Model<T> {
    match arch {
        Architecture::Mlp(spec) => build_mlp(spec, seed),
        Architecture::Cnn(_) => build_cnn(seed),
    }
}

fn head(logits: &Tensor<impl Scalar>) -> Result<Vec<f64>, ShapeError> {
    if logits.shape().len() != 2 || logits.shape()[1] != 1 {
        return Err(ShapeError::Mismatch {
            op: "output head",
            expected: "[N, 1]".into(),
            actual: logits.shape().to_vec(),
        });
    }
    Ok(logits.data().iter().map(|z| sigmoid_scalar(z.as_f64())).collect())
}

impl<T: Scalar> Model<T> {
    pub fn architecture(&self) -> Architecture {
        self.arch
    }

    /// Clamped probabilities, without caching anything for backward.
    pub fn infer(&self, batch: &Tensor<T>) -> Result<Vec<f64>, ShapeError> {
        let mut x = batch.clone();
        for layer in &self.layers {
            x = layer.infer(x)?;
        }
        Ok(head(&x)?.into_iter().map(|p| BernoulliDist::clamped(p).p()).collect())
    }

    /// [`Model::infer`] over fixed-size chunks, bounding activation memory.
    pub fn infer_chunked(&self, data: &Tensor<T>, chunk: usize) -> Result<Vec<f64>, ShapeError> {
        let n = data.rows();
        let mut out = Vec::with_capacity(n);
        let mut start = 0;
        while start < n {
            let end = (start + chunk.max(1)).min(n);
            let idx: Vec<usize> = (start..end).collect();
            out.extend(self.infer(&data.gather_rows(&idx))?);
            start = end;
        }
        Ok(out)
    }

    /// Clamped probabilities; caches activations for [`Model::backward`].
    pub fn forward(&mut self, batch: &Tensor<T>) -> Result<Vec<f64>, ShapeError> {
        let mut x = batch.clone();
        for layer in &mut self.layers {
            x = layer.forward(x)?;
        }
        let raw = head(&x)?;
        let clamped = raw.iter().map(|&p| BernoulliDist::clamped(p).p()).collect();
        self.probs = Some(raw);
        Ok(clamped)
    }

    /// Backpropagates `∂L/∂pᵢ` for each output probability of the last
    /// forward pass, accumulating parameter gradients. The clamp is passed
    /// through as identity. Returns the gradient with respect to the input.
    pub fn backward(&mut self, prob_grads: &[f64]) -> Result<Tensor<T>, ShapeError> {
        let probs = self.probs.as_ref().ok_or(ShapeError::NoCache { op: "model" })?;
        if probs.len() != prob_grads.len() {
            return Err(ShapeError::Mismatch {
                op: "model backward",
                expected: format!("{} output gradients", probs.len()),
                actual: vec![prob_grads.len()],
            });
        }
        let dz = probs.iter().zip(prob_grads).map(|(p, g)| T::of(g * p * (1.0 - p))).collect();
        let mut up = Tensor::new(vec![probs.len(), 1], dz)?;
        for layer in self.layers.iter_mut().rev() {
            up = layer.backward(up)?;
        }
        Ok(up)
    }

    pub fn params(&self) -> Vec<&Param<T>> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.value.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        self.params_mut().into_iter().for_each(|p| p.zero_grad());
    }

    pub fn all_finite(&self) -> bool {
        self.params().iter().all(|p| p.value.all_finite())
    }

    /// Same architecture with parameters converted to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Model<U> {
        let layers = self
            .layers
            .iter()
            .map(|l| match l {
                Layer::Flatten { .. } => Layer::flatten(),
                Layer::Relu { .. } => Layer::relu(),
                Layer::Affine(a) => Layer::Affine(Affine::new(a.weight.cast(), a.bias.cast())),
                Layer::Conv(c) => Layer::Conv(Conv2d::new(c.kernel.cast(), c.bias.cast(), c.stride, c.pad)),
            })
            .collect();
        Model {
            arch: self.arch,
            layers,
            probs: None,
        }
    }
}

/// Gradient saliency of the output probability with respect to one image.
///
/// `image` is `[H, W, C]` or `[1, H, W, C]`. The result is `|∂p/∂x|`, maxed
/// over channels and min-max scaled to `[0, 1]`; a constant map is all zero.
pub fn saliency<T: Scalar>(model: &mut Model<T>, image: &Tensor<T>) -> Result<Tensor<f64>, ShapeError> {
    let (h, w, c) = match image.shape() {
        [h, w, c] | [1, h, w, c] => (*h, *w, *c),
        other => {
            return Err(ShapeError::Mismatch {
                op: "saliency",
                expected: "[H, W, C] or [1, H, W, C]".into(),
                actual: other.to_vec(),
            })
        }
    };
    let batch = image.clone().reshape(&[1, h, w, c])?;
    model.forward(&batch)?;
    let dx = model.backward(&[1.0]);
    model.zero_grad();
    let dx = dx?;
    let mut heat: Vec<f64> = dx
        .data()
        .chunks(c)
        .map(|px| px.iter().map(|v| v.as_f64().abs()).fold(0.0, f64::max))
        .collect();
    let lo = heat.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = heat.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    heat.iter_mut().for_each(|v| *v = if span > 0.0 { (*v - lo) / span } else { 0.0 });
    Tensor::new(vec![h, w], heat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn rel_err(a: f64, n: f64) -> f64 {
        (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
    }

    fn same_params<T: Scalar>(a: &Model<T>, b: &Model<T>) -> bool {
        a.params().iter().zip(b.params()).all(|(x, y)| x.value == y.value)
    }

    #[test]
    fn mlp_param_count_and_determinism() {
        let spec = MlpSpec::new(784, [300, 300]);
        assert_eq!(spec.param_count(), 326_101);
        let a: Model = build_mlp(spec, 11);
        let b: Model = build_mlp(spec, 11);
        let c: Model = build_mlp(spec, 12);
        assert_eq!(a.param_count(), 326_101);
        assert!(same_params(&a, &b));
        assert!(!same_params(&a, &c));
    }

    #[test]
    fn zero_image_gives_half() {
        let m: Model = build_mlp(MlpSpec::new(784, [300, 300]), 3);
        let x = Tensor::zeros(&[2, 28, 28, 1]);
        assert_eq!(m.infer(&x).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn init_within_glorot_bounds() {
        let m: Model = build_mlp(MlpSpec::new(20, [10, 5]), 0);
        let limit = (6.0f64 / 30.0).sqrt() as f32;
        let w = &m.params()[0].value;
        assert!(w.data().iter().all(|v| v.abs() <= limit));
        assert!(m.params()[1].value.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn cnn_shape_chain_and_count() {
        assert_eq!(CnnSpec.param_count(), 2_652_573);
        let m: Model = build_cnn(5);
        assert_eq!(m.param_count(), 2_652_573);
        let mut x = Tensor::<f32>::from_fn(&[1, 28, 28, 3], |i| (i % 17) as f32 / 17.0);
        let mut shapes = Vec::new();
        for layer in &m.layers {
            x = layer.infer(x).unwrap();
            if !matches!(layer, Layer::Relu { .. }) {
                shapes.push(x.shape().to_vec());
            }
        }
        assert_eq!(
            shapes,
            vec![
                vec![1, 28, 28, 84],
                vec![1, 14, 14, 84],
                vec![1, 14, 14, 168],
                vec![1, 14, 14, 8],
                vec![1, 1568],
                vec![1, 1000],
                vec![1, 1000],
                vec![1, 1],
            ]
        );
        let p = m.infer(&Tensor::from_fn(&[1, 28, 28, 3], |i| (i % 5) as f32 / 5.0)).unwrap();
        assert!(p[0] > 0.0 && p[0] < 1.0);
        let again: Model = build_cnn(5);
        assert!(same_params(&m, &again));
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut m: Model = build_mlp(MlpSpec::new(10, [4, 4]), 0);
        assert!(m.forward(&Tensor::zeros(&[3, 9])).is_err());
        assert!(m.backward(&[1.0]).is_err());
        m.forward(&Tensor::zeros(&[3, 10])).unwrap();
        assert!(m.backward(&[1.0]).is_err());
    }

    #[test]
    fn forward_matches_infer_and_batches() {
        let mut m: Model = build_mlp(MlpSpec::new(6, [5, 4]), 9);
        let x = Tensor::from_fn(&[64, 6], |i| ((i * 31) % 13) as f32 / 13.0 - 0.5);
        let a = m.forward(&x).unwrap();
        assert_eq!(a.len(), 64);
        assert_eq!(a, m.infer(&x).unwrap());
        assert_eq!(a, m.infer_chunked(&x, 10).unwrap());
    }

    #[test]
    fn end_to_end_mlp_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut m: Model<f64> = build_mlp(MlpSpec::new(6, [5, 4]), 1);
        let x = Tensor::from_fn(&[3, 6], |_| rng.random_range(-1.0..1.0));
        let r: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let loss = |m: &Model<f64>| -> f64 { m.infer(&x).unwrap().iter().zip(&r).map(|(p, w)| p * w).sum() };
        m.forward(&x).unwrap();
        m.backward(&r).unwrap();
        let h = 1e-6;
        for pi in 0..m.params().len() {
            let n = m.params()[pi].value.len();
            for ei in [0, n / 2, n - 1] {
                let analytic = m.params()[pi].grad.data()[ei];
                let mut plus = m.clone();
                plus.params_mut()[pi].value.data_mut()[ei] += h;
                let mut minus = m.clone();
                minus.params_mut()[pi].value.data_mut()[ei] -= h;
                let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
                assert!(rel_err(analytic, numeric) < 1e-4, "param {pi}[{ei}]: {analytic} vs {numeric}");
            }
        }
    }

    #[test]
    fn saliency_bounds_and_flat_case() {
        let mut m: Model<f64> = build_mlp(MlpSpec::new(12, [4, 4]), 2);
        let img = Tensor::from_fn(&[2, 3, 2], |i| i as f64 / 12.0);
        let s = saliency(&mut m, &img).unwrap();
        assert_eq!(s.shape(), &[2, 3]);
        assert!(s.data().iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(m.params().iter().all(|p| p.grad.data().iter().all(|g| *g == 0.0)));

        for p in m.params_mut() {
            p.value.fill_zero();
        }
        let s = saliency(&mut m, &img).unwrap();
        assert!(s.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn saliency_of_linear_model_tracks_weights() {
        let w: Vec<f64> = vec![0.5, -2.0, 1.0, 0.25, -0.75, 1.5];
        let mut m: Model<f64> = Model {
            arch: Architecture::Mlp(MlpSpec::new(6, [1, 1])),
            layers: vec![
                Layer::flatten(),
                Layer::Affine(Affine::new(
                    Param::new(Tensor::new(vec![6, 1], w.clone()).unwrap()),
                    Param::new(Tensor::zeros(&[1])),
                )),
            ],
            probs: None,
        };
        let img = Tensor::from_fn(&[2, 3, 1], |i| i as f64 * 0.1);
        let s = saliency(&mut m, &img).unwrap();
        let abs: Vec<f64> = w.iter().map(|v| v.abs()).collect();
        let (lo, hi) = (0.25, 2.0);
        for (got, a) in s.data().iter().zip(abs) {
            assert!((got - (a - lo) / (hi - lo)).abs() < 1e-12);
        }
    }
}
