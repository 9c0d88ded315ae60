use super::{Element, Tensor};
use crate::error::{Error, Result};

/// Walks a same-padded `k x k` convolution over an `h x w x c` input. For
/// every output pixel `p` and kernel row, `f(p, src, j, len)` receives the
/// contiguous run of `len` input values starting at `src` that meet kernel
/// entries `j..j + len` (index `(ky*k + kx)*c + ch`).
#[inline]
fn for_each_run(h: usize, w: usize, c: usize, k: usize, mut f: impl FnMut(usize, usize, usize, usize)) {
    let pad = k / 2;
    for y in 0..h {
        let ky0 = pad.saturating_sub(y);
        let ky1 = k.min(h + pad - y);
        for x in 0..w {
            let kx0 = pad.saturating_sub(x);
            let kx1 = k.min(w + pad - x);
            let len = (kx1 - kx0) * c;
            let p = y * w + x;
            for ky in ky0..ky1 {
                let src = ((y + ky - pad) * w + x + kx0 - pad) * c;
                f(p, src, (ky * k + kx0) * c, len);
            }
        }
    }
}

/// Same-padded convolution plus bias, without activation.
fn conv_linear<T: Element>(x: &[T], shape: [usize; 3], kernel: &[T], bias: &[T], k: usize, f: usize) -> Vec<T> {
    match f {
        8 => conv_linear_n::<T, 8>(x, shape, kernel, bias, k),
        16 => conv_linear_n::<T, 16>(x, shape, kernel, bias, k),
        _ => conv_linear_dyn(x, shape, kernel, bias, k, f),
    }
}

fn conv_linear_n<T: Element, const F: usize>(x: &[T], [h, w, c]: [usize; 3], kernel: &[T], bias: &[T], k: usize) -> Vec<T> {
    let bias: [T; F] = bias.try_into().expect("bias length");
    let mut out = vec![bias; h * w];
    let (rows, _) = kernel.as_chunks::<F>();
    for_each_run(h, w, c, k, |p, src, j, len| {
        let acc = &mut out[p];
        for (&v, row) in x[src..src + len].iter().zip(&rows[j..j + len]) {
            for i in 0..F {
                acc[i] = acc[i] + v * row[i];
            }
        }
    });
    out.into_iter().flatten().collect()
}

fn conv_linear_dyn<T: Element>(x: &[T], [h, w, c]: [usize; 3], kernel: &[T], bias: &[T], k: usize, f: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(h * w * f);
    for _ in 0..h * w {
        out.extend_from_slice(bias);
    }
    for_each_run(h, w, c, k, |p, src, j, len| {
        let acc = &mut out[p * f..(p + 1) * f];
        let rows = kernel[j * f..(j + len) * f].chunks_exact(f);
        for (&v, row) in x[src..src + len].iter().zip(rows) {
            for (a, &kv) in acc.iter_mut().zip(row) {
                *a = *a + v * kv;
            }
        }
    });
    out
}

/// Same-padded convolution plus bias and ReLU.
pub(super) fn conv_forward_raw<T: Element>(
    x: &[T],
    shape: [usize; 3],
    kernel: &Tensor<T>,
    bias: &Tensor<T>,
    k: usize,
    f: usize,
) -> Vec<T> {
    let mut out = conv_linear(x, shape, kernel.data(), bias.data(), k, f);
    for v in &mut out {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
    out
}

/// Kernel, bias and (optionally) input gradients of a conv layer from the
/// gradient `g` of its pre-activation.
pub(super) fn conv_backward_raw<T: Element>(
    g: &[T],
    x: &[T],
    shape: [usize; 3],
    kernel: &Tensor<T>,
    k: usize,
    f: usize,
    need_input: bool,
) -> (Vec<T>, Vec<T>, Vec<T>) {
    let [h, w, c] = shape;
    let mut dk = vec![T::zero(); k * k * c * f];
    let mut dx = if need_input { vec![T::zero(); h * w * c] } else { Vec::new() };
    match f {
        8 => conv_grads_n::<T, 8>(g, x, shape, kernel.data(), k, &mut dk, &mut dx),
        16 => conv_grads_n::<T, 16>(g, x, shape, kernel.data(), k, &mut dk, &mut dx),
        _ => conv_grads_dyn(g, x, shape, kernel.data(), k, f, &mut dk, &mut dx),
    }
    let mut db = vec![T::zero(); f];
    for row in g.chunks_exact(f) {
        for (b, v) in db.iter_mut().zip(row) {
            *b = *b + *v;
        }
    }
    (dk, db, dx)
}

/// Accumulates `dk` and, when `dx` is non-empty, `dx`.
fn conv_grads_n<T: Element, const F: usize>(
    g: &[T],
    x: &[T],
    [h, w, c]: [usize; 3],
    kernel: &[T],
    k: usize,
    dk: &mut [T],
    dx: &mut [T],
) {
    let (gs, _) = g.as_chunks::<F>();
    let (dks, _) = dk.as_chunks_mut::<F>();
    for_each_run(h, w, c, k, |p, src, j, len| {
        let gp = &gs[p];
        for (&v, row) in x[src..src + len].iter().zip(&mut dks[j..j + len]) {
            for i in 0..F {
                row[i] = row[i] + v * gp[i];
            }
        }
    });
    if dx.is_empty() {
        return;
    }
    let (ks, _) = kernel.as_chunks::<F>();
    for_each_run(h, w, c, k, |p, src, j, len| {
        let gp = &gs[p];
        for (d, row) in dx[src..src + len].iter_mut().zip(&ks[j..j + len]) {
            let mut s = T::zero();
            for i in 0..F {
                s = s + row[i] * gp[i];
            }
            *d = *d + s;
        }
    });
}

#[allow(clippy::too_many_arguments)]
fn conv_grads_dyn<T: Element>(
    g: &[T],
    x: &[T],
    [h, w, c]: [usize; 3],
    kernel: &[T],
    k: usize,
    f: usize,
    dk: &mut [T],
    dx: &mut [T],
) {
    for_each_run(h, w, c, k, |p, src, j, len| {
        let gp = &g[p * f..(p + 1) * f];
        let rows = dk[j * f..(j + len) * f].chunks_exact_mut(f);
        for (&v, row) in x[src..src + len].iter().zip(rows) {
            for (d, &gv) in row.iter_mut().zip(gp) {
                *d = *d + v * gv;
            }
        }
    });
    if dx.is_empty() {
        return;
    }
    for_each_run(h, w, c, k, |p, src, j, len| {
        let gp = &g[p * f..(p + 1) * f];
        let rows = kernel[j * f..(j + len) * f].chunks_exact(f);
        for (d, row) in dx[src..src + len].iter_mut().zip(rows) {
            let mut s = T::zero();
            for (&kv, &gv) in row.iter().zip(gp) {
                s = s + kv * gv;
            }
            *d = *d + s;
        }
    });
}

/// 2x2/2 max pooling; the second value holds, per output, the flat input
/// index of the winner (first in row-major window order on ties).
pub(super) fn maxpool_raw<T: Element>(x: &[T], [h, w, c]: [usize; 3]) -> (Vec<T>, Vec<u32>) {
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(oh * ow * c);
    let mut arg = Vec::with_capacity(oh * ow * c);
    for oy in 0..oh {
        for ox in 0..ow {
            for ch in 0..c {
                let mut best_i = ((2 * oy) * w + 2 * ox) * c + ch;
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let i = ((2 * oy + dy) * w + 2 * ox + dx) * c + ch;
                    if x[i] > x[best_i] {
                        best_i = i;
                    }
                }
                out.push(x[best_i]);
                arg.push(best_i as u32);
            }
        }
    }
    (out, arg)
}

pub(super) fn softmax_generic<T: Element>(z: &[T]) -> Vec<T> {
    let m = z.iter().copied().fold(T::neg_infinity(), T::max);
    let e: Vec<T> = z.iter().map(|v| (*v - m).exp()).collect();
    let s: T = e.iter().copied().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub(super) fn cross_entropy_generic<T: Element>(p: &[T], label: usize) -> f64 {
    -(p[label].to_f64().unwrap_or(0.0).max(PROB_FLOOR)).ln()
}

const PROB_FLOOR: f64 = 1e-12;

/// Cross-correlation of an `H x W x C` input with `k x k x C x F` kernels,
/// zero padded to keep the spatial size, plus a per-filter bias. No
/// activation is applied.
pub fn conv2d_forward<T: Element>(input: &Tensor<T>, kernels: &Tensor<T>, bias: &Tensor<T>) -> Result<Tensor<T>> {
    let (is, ks) = (input.shape(), kernels.shape());
    if is.len() != 3 || ks.len() != 4 || ks[0] != ks[1] || ks[0] % 2 == 0 || ks[2] != is[2] || bias.shape() != [ks[3]] {
        return Err(Error::ShapeMismatch(format!("conv input {is:?}, kernels {ks:?}, bias {:?}", bias.shape())));
    }
    let out = conv_linear(input.data(), [is[0], is[1], is[2]], kernels.data(), bias.data(), ks[0], ks[3]);
    Tensor::from_vec(&[is[0], is[1], ks[3]], out)
}

pub fn maxpool2x2<T: Element>(input: &Tensor<T>) -> Result<Tensor<T>> {
    let s = input.shape();
    if s.len() != 3 || s[0] < 2 || s[1] < 2 {
        return Err(Error::ShapeMismatch(format!("max-pool input {s:?}")));
    }
    let (out, _) = maxpool_raw(input.data(), [s[0], s[1], s[2]]);
    Tensor::from_vec(&[s[0] / 2, s[1] / 2, s[2]], out)
}

/// Max-shifted softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    softmax_generic(logits)
}

/// `-sum y_i ln p_i` with probabilities floored at 1e-12.
pub fn cross_entropy(p: &[f64], y: &[f64]) -> Result<f64> {
    if p.len() != y.len() {
        return Err(Error::ShapeMismatch(format!("{} probabilities, {} targets", p.len(), y.len())));
    }
    Ok(p.iter().zip(y).map(|(pi, yi)| -yi * pi.max(PROB_FLOOR).ln()).sum())
}
