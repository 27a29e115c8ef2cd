//! Dense tensors, the layer kernels the networks need, and plain SGD.
//!
//! There is no computation graph: a model runs its layers forward in order
//! and calls their `backward` in reverse.

mod kernels;
mod ops;
mod tensor;

pub use kernels::{matmul, matmul_nt, matmul_tn};
pub use ops::{
    affine_backward, affine_forward, conv2d_backward, conv2d_forward, conv_output_len, flatten, relu,
    relu_backward, sigmoid, sigmoid_backward, sigmoid_scalar, Affine, Conv2d, ConvGeometry,
};
pub use tensor::{Param, Scalar, ShapeError, Tensor};

/// Descent update `value ← value − lr·grad`, then zeroes the gradients.
pub fn sgd_step<'a, T: Scalar>(params: impl IntoIterator<Item = &'a mut Param<T>>, lr: f64) {
    let lr = T::of(lr);
    for p in params {
        for (v, g) in p.value.data_mut().iter_mut().zip(p.grad.data()) {
            *v -= lr * *g;
        }
        p.zero_grad();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_param(v: f64, g: f64) -> Param<f64> {
        let mut p = Param::new(Tensor::new(vec![1], vec![v]).unwrap());
        p.grad.data_mut()[0] = g;
        p
    }

    #[test]
    fn sgd_examples() {
        let mut p = scalar_param(1.0, 0.0);
        sgd_step([&mut p], 0.4);
        assert_eq!(p.value.data()[0], 1.0);

        let mut p = scalar_param(1.0, 0.5);
        sgd_step([&mut p], 0.4);
        assert!((p.value.data()[0] - 0.8).abs() < 1e-15);
        assert_eq!(p.grad.data()[0], 0.0);

        let mut a = scalar_param(1.0, 0.5);
        let mut b = scalar_param(1.0, 0.5);
        sgd_step([&mut a], 0.1);
        a.grad.data_mut()[0] = 0.5;
        sgd_step([&mut a], 0.1);
        sgd_step([&mut b], 0.2);
        assert!((a.value.data()[0] - b.value.data()[0]).abs() < 1e-15);
    }
}
