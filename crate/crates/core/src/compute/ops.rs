//! Forward/backward kernels for the layer set used by the networks.
//!
//! Backward functions return the gradient with respect to the layer input
//! and *accumulate* parameter gradients into the supplied [`Param`]s.

use super::kernels::{col_sums, matmul, matmul_nt, matmul_tn};
use super::{Param, Scalar, ShapeError, Tensor};

fn expect_rank<T: Scalar>(op: &'static str, t: &Tensor<T>, rank: usize) -> Result<(), ShapeError> {
    if t.shape().len() != rank {
        return Err(ShapeError::Mismatch {
            op,
            expected: format!("rank {rank}"),
            actual: t.shape().to_vec(),
        });
    }
    Ok(())
}

fn affine_dims<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>) -> Result<(usize, usize, usize), ShapeError> {
    expect_rank("affine", x, 2)?;
    expect_rank("affine weight", w, 2)?;
    let (n, i) = (x.shape()[0], x.shape()[1]);
    let (wi, o) = (w.shape()[0], w.shape()[1]);
    if wi != i {
        return Err(ShapeError::Mismatch {
            op: "affine",
            expected: format!("input width {wi}"),
            actual: x.shape().to_vec(),
        });
    }
    if b.shape() != [o] {
        return Err(ShapeError::Mismatch {
            op: "affine bias",
            expected: format!("[{o}]"),
            actual: b.shape().to_vec(),
        });
    }
    Ok((n, i, o))
}

/// `y = x·w + b` for `x[N×I]`, `w[I×O]`, `b[O]`.
pub fn affine_forward<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>, ShapeError> {
    let (n, i, o) = affine_dims(x, w, b)?;
    let mut y = matmul(x.data(), w.data(), n, i, o);
    for row in y.chunks_mut(o) {
        for (v, bias) in row.iter_mut().zip(b.data()) {
            *v += *bias;
        }
    }
    Tensor::new(vec![n, o], y)
}

pub fn affine_backward<T: Scalar>(
    x: &Tensor<T>,
    w: &mut Param<T>,
    b: &mut Param<T>,
    upstream: &Tensor<T>,
) -> Result<Tensor<T>, ShapeError> {
    let (n, i, o) = affine_dims(x, &w.value, &b.value)?;
    if upstream.shape() != [n, o] {
        return Err(ShapeError::Mismatch {
            op: "affine backward",
            expected: format!("[{n}, {o}]"),
            actual: upstream.shape().to_vec(),
        });
    }
    let dw = matmul_tn(x.data(), upstream.data(), n, i, o);
    for (g, d) in w.grad.data_mut().iter_mut().zip(dw) {
        *g += d;
    }
    for (g, d) in b.grad.data_mut().iter_mut().zip(col_sums(upstream.data(), n, o)) {
        *g += d;
    }
    Tensor::new(vec![n, i], matmul_nt(upstream.data(), w.value.data(), n, i, o))
}

/// Geometry of a 2-D convolution over NHWC input with a `[kh, kw, C, F]`
/// kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeometry {
    pub n: usize,
    pub h: usize,
    pub w: usize,
    pub c: usize,
    pub kh: usize,
    pub kw: usize,
    pub f: usize,
    pub stride: usize,
    pub pad: usize,
    pub oh: usize,
    pub ow: usize,
}

/// `floor((len + 2·pad − k) / stride) + 1`, or `None` if not positive.
pub fn conv_output_len(len: usize, k: usize, stride: usize, pad: usize) -> Option<usize> {
    let span = (len + 2 * pad) as isize - k as isize;
    if stride == 0 || span < 0 {
        return None;
    }
    Some(span as usize / stride + 1)
}

impl ConvGeometry {
    pub fn new<T: Scalar>(x: &Tensor<T>, k: &Tensor<T>, stride: usize, pad: usize) -> Result<Self, ShapeError> {
        expect_rank("conv2d", x, 4)?;
        expect_rank("conv2d kernel", k, 4)?;
        let (n, h, w, c) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
        let (kh, kw, kc, f) = (k.shape()[0], k.shape()[1], k.shape()[2], k.shape()[3]);
        if kc != c {
            return Err(ShapeError::Mismatch {
                op: "conv2d",
                expected: format!("{kc} input channels"),
                actual: x.shape().to_vec(),
            });
        }
        if stride == 0 {
            return Err(ShapeError::Geometry("stride must be >= 1".into()));
        }
        let (oh, ow) = match (conv_output_len(h, kh, stride, pad), conv_output_len(w, kw, stride, pad)) {
            (Some(oh), Some(ow)) => (oh, ow),
            _ => {
                let dim = |l: usize, k: usize| ((l + 2 * pad) as isize - k as isize) / stride as isize + 1;
                return Err(ShapeError::EmptyOutput(dim(h, kh), dim(w, kw)));
            }
        };
        Ok(Self { n, h, w, c, kh, kw, f, stride, pad, oh, ow })
    }

    fn patch_len(&self) -> usize {
        self.kh * self.kw * self.c
    }

    fn out_pixels(&self) -> usize {
        self.n * self.oh * self.ow
    }

    /// Input coordinate for output `o` and kernel offset `k`, if in bounds.
    #[inline]
    fn src(&self, o: usize, k: usize, len: usize) -> Option<usize> {
        let v = (o * self.stride + k) as isize - self.pad as isize;
        (v >= 0 && (v as usize) < len).then_some(v as usize)
    }
}

/// Unrolls NHWC input into a `[N·OH·OW × kh·kw·C]` patch matrix.
fn im2col<T: Scalar>(x: &[T], g: &ConvGeometry) -> Vec<T> {
    let pl = g.patch_len();
    let mut cols = vec![T::zero(); g.out_pixels() * pl];
    let mut row = 0;
    for n in 0..g.n {
        for oy in 0..g.oh {
            for ox in 0..g.ow {
                let dst = &mut cols[row * pl..(row + 1) * pl];
                for ky in 0..g.kh {
                    let Some(iy) = g.src(oy, ky, g.h) else { continue };
                    for kx in 0..g.kw {
                        let Some(ix) = g.src(ox, kx, g.w) else { continue };
                        let s = ((n * g.h + iy) * g.w + ix) * g.c;
                        let d = (ky * g.kw + kx) * g.c;
                        dst[d..d + g.c].copy_from_slice(&x[s..s + g.c]);
                    }
                }
                row += 1;
            }
        }
    }
    cols
}

/// Scatter-adds a patch-matrix gradient back onto NHWC input positions.
fn col2im<T: Scalar>(cols: &[T], g: &ConvGeometry) -> Vec<T> {
    let pl = g.patch_len();
    let mut dx = vec![T::zero(); g.n * g.h * g.w * g.c];
    let mut row = 0;
    for n in 0..g.n {
        for oy in 0..g.oh {
            for ox in 0..g.ow {
                let src = &cols[row * pl..(row + 1) * pl];
                for ky in 0..g.kh {
                    let Some(iy) = g.src(oy, ky, g.h) else { continue };
                    for kx in 0..g.kw {
                        let Some(ix) = g.src(ox, kx, g.w) else { continue };
                        let d = ((n * g.h + iy) * g.w + ix) * g.c;
                        let s = (ky * g.kw + kx) * g.c;
                        for ch in 0..g.c {
                            dx[d + ch] += src[s + ch];
                        }
                    }
                }
                row += 1;
            }
        }
    }
    dx
}

fn check_conv_bias<T: Scalar>(b: &Tensor<T>, f: usize) -> Result<(), ShapeError> {
    if b.shape() != [f] {
        return Err(ShapeError::Mismatch {
            op: "conv2d bias",
            expected: format!("[{f}]"),
            actual: b.shape().to_vec(),
        });
    }
    Ok(())
}

/// Cross-correlation of `x[N×H×W×C]` with `k[kh×kw×C×F]` plus a per-filter
/// bias. Output is `[N×OH×OW×F]`.
pub fn conv2d_forward<T: Scalar>(
    x: &Tensor<T>,
    k: &Tensor<T>,
    b: &Tensor<T>,
    stride: usize,
    pad: usize,
) -> Result<Tensor<T>, ShapeError> {
    let g = ConvGeometry::new(x, k, stride, pad)?;
    check_conv_bias(b, g.f)?;
    let cols = im2col(x.data(), &g);
    conv_from_cols(&cols, k, b, &g)
}

fn conv_from_cols<T: Scalar>(cols: &[T], k: &Tensor<T>, b: &Tensor<T>, g: &ConvGeometry) -> Result<Tensor<T>, ShapeError> {
    let mut y = matmul(cols, k.data(), g.out_pixels(), g.patch_len(), g.f);
    for row in y.chunks_mut(g.f) {
        for (v, bias) in row.iter_mut().zip(b.data()) {
            *v += *bias;
        }
    }
    Tensor::new(vec![g.n, g.oh, g.ow, g.f], y)
}

fn conv_backward_from_cols<T: Scalar>(
    cols: &[T],
    g: &ConvGeometry,
    k: &mut Param<T>,
    b: &mut Param<T>,
    upstream: &Tensor<T>,
) -> Result<Tensor<T>, ShapeError> {
    if upstream.shape() != [g.n, g.oh, g.ow, g.f] {
        return Err(ShapeError::Mismatch {
            op: "conv2d backward",
            expected: format!("[{}, {}, {}, {}]", g.n, g.oh, g.ow, g.f),
            actual: upstream.shape().to_vec(),
        });
    }
    let (rows, pl) = (g.out_pixels(), g.patch_len());
    let dk = matmul_tn(cols, upstream.data(), rows, pl, g.f);
    for (acc, d) in k.grad.data_mut().iter_mut().zip(dk) {
        *acc += d;
    }
    for (acc, d) in b.grad.data_mut().iter_mut().zip(col_sums(upstream.data(), rows, g.f)) {
        *acc += d;
    }
    let dcols = matmul_nt(upstream.data(), k.value.data(), rows, pl, g.f);
    Tensor::new(vec![g.n, g.h, g.w, g.c], col2im(&dcols, g))
}

pub fn conv2d_backward<T: Scalar>(
    x: &Tensor<T>,
    k: &mut Param<T>,
    b: &mut Param<T>,
    stride: usize,
    pad: usize,
    upstream: &Tensor<T>,
) -> Result<Tensor<T>, ShapeError> {
    let g = ConvGeometry::new(x, &k.value, stride, pad)?;
    check_conv_bias(&b.value, g.f)?;
    let cols = im2col(x.data(), &g);
    conv_backward_from_cols(&cols, &g, k, b, upstream)
}

pub fn relu<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let mut y = x.clone();
    y.data_mut().iter_mut().for_each(|v| *v = v.max(T::zero()));
    y
}

/// Passes gradient where the forward input was strictly positive.
pub fn relu_backward<T: Scalar>(x: &Tensor<T>, upstream: &Tensor<T>) -> Result<Tensor<T>, ShapeError> {
    same_shape("relu backward", x, upstream)?;
    let mut dx = upstream.clone();
    for (d, v) in dx.data_mut().iter_mut().zip(x.data()) {
        if *v <= T::zero() {
            *d = T::zero();
        }
    }
    Ok(dx)
}

/// Logistic function in `f64`.
#[inline]
pub fn sigmoid_scalar(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let mut y = x.clone();
    y.data_mut().iter_mut().for_each(|v| *v = T::of(sigmoid_scalar(v.as_f64())));
    y
}

/// Takes the sigmoid *output* `y`, using `σ' = y(1 − y)`.
pub fn sigmoid_backward<T: Scalar>(y: &Tensor<T>, upstream: &Tensor<T>) -> Result<Tensor<T>, ShapeError> {
    same_shape("sigmoid backward", y, upstream)?;
    let mut dx = upstream.clone();
    for (d, s) in dx.data_mut().iter_mut().zip(y.data()) {
        let s = s.as_f64();
        *d = T::of(d.as_f64() * s * (1.0 - s));
    }
    Ok(dx)
}

/// Collapses all trailing dimensions: `[N, ...] → [N, prod(...)]`.
pub fn flatten<T: Scalar>(x: Tensor<T>) -> Tensor<T> {
    let (n, w) = (x.rows(), x.row_len());
    x.reshape(&[n, w]).expect("flatten preserves element count")
}

fn same_shape<T: Scalar>(op: &'static str, a: &Tensor<T>, b: &Tensor<T>) -> Result<(), ShapeError> {
    if a.shape() != b.shape() {
        return Err(ShapeError::Mismatch {
            op,
            expected: format!("{:?}", a.shape()),
            actual: b.shape().to_vec(),
        });
    }
    Ok(())
}

/// Dense layer with cached input.
#[derive(Debug, Clone)]
pub struct Affine<T: Scalar = f32> {
    pub weight: Param<T>,
    pub bias: Param<T>,
    input: Option<Tensor<T>>,
}

impl<T: Scalar> Affine<T> {
    pub fn new(weight: Param<T>, bias: Param<T>) -> Self {
        Self { weight, bias, input: None }
    }

    pub fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>, ShapeError> {
        affine_forward(x, &self.weight.value, &self.bias.value)
    }

    pub fn forward(&mut self, x: Tensor<T>) -> Result<Tensor<T>, ShapeError> {
        let y = self.infer(&x)?;
        self.input = Some(x);
        Ok(y)
    }

    pub fn backward(&mut self, upstream: &Tensor<T>) -> Result<Tensor<T>, ShapeError> {
        let x = self.input.as_ref().ok_or(ShapeError::NoCache { op: "affine" })?;
        affine_backward(x, &mut self.weight, &mut self.bias, upstream)
    }
}

/// Convolution layer; caches the unrolled patch matrix of the last input.
#[derive(Debug, Clone)]
pub struct Conv2d<T: Scalar = f32> {
    pub kernel: Param<T>,
    pub bias: Param<T>,
    pub stride: usize,
    pub pad: usize,
    cache: Option<(ConvGeometry, Vec<T>)>,
}

impl<T: Scalar> Conv2d<T> {
    pub fn new(kernel: Param<T>, bias: Param<T>, stride: usize, pad: usize) -> Self {
        Self { kernel, bias, stride, pad, cache: None }
    }

    pub fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>, ShapeError> {
        conv2d_forward(x, &self.kernel.value, &self.bias.value, self.stride, self.pad)
    }

    pub fn forward(&mut self, x: Tensor<T>) -> Result<Tensor<T>, ShapeError> {
        let g = ConvGeometry::new(&x, &self.kernel.value, self.stride, self.pad)?;
        check_conv_bias(&self.bias.value, g.f)?;
        let cols = im2col(x.data(), &g);
        let y = conv_from_cols(&cols, &self.kernel.value, &self.bias.value, &g)?;
        self.cache = Some((g, cols));
        Ok(y)
    }

    pub fn backward(&mut self, upstream: &Tensor<T>) -> Result<Tensor<T>, ShapeError> {
        let (g, cols) = self.cache.as_ref().ok_or(ShapeError::NoCache { op: "conv2d" })?;
        conv_backward_from_cols(cols, g, &mut self.kernel, &mut self.bias, upstream)
    }
}
