//! Row-major matrix products with `f64` accumulation.
//!
//! Work is split by output row, and each output element is reduced in a
//! fixed order, so results do not depend on the thread count.

use rayon::prelude::*;

use super::Scalar;

const PAR_THRESHOLD: usize = 1 << 15;

fn for_each_row<T: Scalar>(out: &mut [T], width: usize, work: usize, f: impl Fn(usize, &mut [T]) + Sync) {
    if work < PAR_THRESHOLD {
        out.chunks_mut(width).enumerate().for_each(|(r, row)| f(r, row));
    } else {
        out.par_chunks_mut(width).enumerate().for_each(|(r, row)| f(r, row));
    }
}

/// `a[n×k] · b[k×m]`.
pub fn matmul<T: Scalar>(a: &[T], b: &[T], n: usize, k: usize, m: usize) -> Vec<T> {
    debug_assert_eq!(a.len(), n * k);
    debug_assert_eq!(b.len(), k * m);
    let mut out = vec![T::zero(); n * m];
    for_each_row(&mut out, m, n * k * m, |r, row| {
        let mut acc = vec![0.0f64; m];
        for (kk, &av) in a[r * k..(r + 1) * k].iter().enumerate() {
            let av = av.as_f64();
            if av == 0.0 {
                continue;
            }
            for (acc_j, bv) in acc.iter_mut().zip(&b[kk * m..(kk + 1) * m]) {
                *acc_j += av * bv.as_f64();
            }
        }
        for (o, v) in row.iter_mut().zip(acc) {
            *o = T::of(v);
        }
    });
    out
}

/// `aᵀ · g` for `a[n×k]`, `g[n×m]`, giving `[k×m]`.
pub fn matmul_tn<T: Scalar>(a: &[T], g: &[T], n: usize, k: usize, m: usize) -> Vec<T> {
    debug_assert_eq!(a.len(), n * k);
    debug_assert_eq!(g.len(), n * m);
    let mut out = vec![T::zero(); k * m];
    for_each_row(&mut out, m, n * k * m, |kk, row| {
        let mut acc = vec![0.0f64; m];
        for r in 0..n {
            let av = a[r * k + kk].as_f64();
            if av == 0.0 {
                continue;
            }
            for (acc_j, gv) in acc.iter_mut().zip(&g[r * m..(r + 1) * m]) {
                *acc_j += av * gv.as_f64();
            }
        }
        for (o, v) in row.iter_mut().zip(acc) {
            *o = T::of(v);
        }
    });
    out
}

/// `g · wᵀ` for `g[n×m]`, `w[k×m]`, giving `[n×k]`.
pub fn matmul_nt<T: Scalar>(g: &[T], w: &[T], n: usize, k: usize, m: usize) -> Vec<T> {
    debug_assert_eq!(g.len(), n * m);
    debug_assert_eq!(w.len(), k * m);
    let mut out = vec![T::zero(); n * k];
    for_each_row(&mut out, k, n * k * m, |r, row| {
        let grow = &g[r * m..(r + 1) * m];
        for (kk, o) in row.iter_mut().enumerate() {
            let dot: f64 = grow
                .iter()
                .zip(&w[kk * m..(kk + 1) * m])
                .map(|(x, y)| x.as_f64() * y.as_f64())
                .sum();
            *o = T::of(dot);
        }
    });
    out
}

/// Column sums of `g[n×m]`.
pub fn col_sums<T: Scalar>(g: &[T], n: usize, m: usize) -> Vec<T> {
    let mut acc = vec![0.0f64; m];
    for r in 0..n {
        for (a, v) in acc.iter_mut().zip(&g[r * m..(r + 1) * m]) {
            *a += v.as_f64();
        }
    }
    acc.into_iter().map(T::of).collect()
}
