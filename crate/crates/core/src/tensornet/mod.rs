//! A small sequential network engine: convolution with ReLU, 2x2 max
//! pooling, a dense softmax head, cross-entropy loss and Adam.
//!
//! Activations use height x width x channel layout, row-major. The engine is
//! generic over `f32` (training and inference) and `f64` (gradient checks).

mod adam;
mod io;
mod ops;

pub use adam::AdamState;
pub use io::{load_weights, save_weights};
pub use ops::{conv2d_forward, cross_entropy, maxpool2x2, softmax};

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Exec};

/// Floating point element with a matrix-multiply kernel.
pub trait Element: Float + Default + Send + Sync + std::fmt::Debug + std::iter::Sum + 'static {
    /// `c = a * b + beta * c` over strided row/column layouts.
    #[allow(clippy::too_many_arguments)]
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        a: &[Self],
        rsa: isize,
        csa: isize,
        b: &[Self],
        rsb: isize,
        csb: isize,
        beta: Self,
        c: &mut [Self],
        rsc: isize,
        csc: isize,
    );
}

fn span(rows: usize, cols: usize, rs: isize, cs: isize) -> usize {
    if rows == 0 || cols == 0 {
        0
    } else {
        (rows as isize - 1) as usize * rs as usize + (cols as isize - 1) as usize * cs as usize + 1
    }
}

macro_rules! impl_element {
    ($t:ty, $f:path) => {
        impl Element for $t {
            fn gemm(
                m: usize,
                k: usize,
                n: usize,
                a: &[Self],
                rsa: isize,
                csa: isize,
                b: &[Self],
                rsb: isize,
                csb: isize,
                beta: Self,
                c: &mut [Self],
                rsc: isize,
                csc: isize,
            ) {
                assert!(rsa >= 0 && csa >= 0 && rsb >= 0 && csb >= 0 && rsc >= 0 && csc >= 0);
                assert!(a.len() >= span(m, k, rsa, csa));
                assert!(b.len() >= span(k, n, rsb, csb));
                assert!(c.len() >= span(m, n, rsc, csc));
                // SAFETY: the asserts above bound every strided access inside
                // the slices, and `c` does not alias `a` or `b`.
                unsafe {
                    $f(
                        m,
                        k,
                        n,
                        1.0,
                        a.as_ptr(),
                        rsa,
                        csa,
                        b.as_ptr(),
                        rsb,
                        csb,
                        beta,
                        c.as_mut_ptr(),
                        rsc,
                        csc,
                    )
                }
            }
        }
    };
}

impl_element!(f32, matrixmultiply::sgemm);
impl_element!(f64, matrixmultiply::dgemm);

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Element> Tensor<T> {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![T::zero(); shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Result<Self> {
        if shape.iter().product::<usize>() != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for shape {shape:?}",
                data.len()
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn cast<U: Element>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| U::from(*v).expect("finite")).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerSpec {
    /// Same-padded convolution followed by ReLU.
    Conv { kernel: usize, filters: usize },
    /// 2x2 window, stride 2.
    MaxPool,
    Flatten,
    Dense { units: usize },
    Softmax,
}

/// The classifier topology: `blocks` x (conv + max-pool), flatten, one dense
/// layer with `classes` units, softmax.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub blocks: usize,
    pub filters: usize,
    pub kernel: usize,
    /// Height, width, channels.
    pub input: [usize; 3],
    pub classes: usize,
}

impl Architecture {
    pub fn new(blocks: usize, filters: usize) -> Self {
        Architecture {
            blocks,
            filters,
            kernel: 5,
            input: [200, 200, 3],
            classes: 9,
        }
    }

    pub fn layers(&self) -> Vec<LayerSpec> {
        let mut layers = Vec::new();
        for _ in 0..self.blocks {
            layers.push(LayerSpec::Conv {
                kernel: self.kernel,
                filters: self.filters,
            });
            layers.push(LayerSpec::MaxPool);
        }
        layers.push(LayerSpec::Flatten);
        layers.push(LayerSpec::Dense { units: self.classes });
        layers.push(LayerSpec::Softmax);
        layers
    }

    /// Ordered parameter tensor names and shapes.
    pub fn param_shapes(&self) -> Result<Vec<(String, Vec<usize>)>> {
        if self.kernel % 2 == 0 || self.filters == 0 || self.classes == 0 || self.input.contains(&0) {
            return Err(Error::UnsupportedConfig(format!("{self:?}")));
        }
        let [mut h, mut w, mut c] = self.input;
        let mut out = Vec::new();
        for i in 0..self.blocks {
            out.push((format!("conv{i}.kernel"), vec![self.kernel, self.kernel, c, self.filters]));
            out.push((format!("conv{i}.bias"), vec![self.filters]));
            c = self.filters;
            if h < 2 || w < 2 {
                return Err(Error::UnsupportedConfig(format!("{self:?}: pooling below 2x2")));
            }
            h /= 2;
            w /= 2;
        }
        out.push(("dense.weights".into(), vec![h * w * c, self.classes]));
        out.push(("dense.bias".into(), vec![self.classes]));
        Ok(out)
    }
}

/// Closed-form trainable parameter count of the classifier topology for a
/// square `side x side x channels` input.
///
/// Fails if the side does not halve evenly through every pooling stage.
pub fn param_count(blocks: usize, filters: usize, side: usize, channels: usize, classes: usize, kernel: usize) -> Result<usize> {
    let div = 1usize << blocks;
    if side % div != 0 {
        return Err(Error::UnsupportedConfig(format!(
            "input side {side} is not divisible by 2^{blocks}"
        )));
    }
    let mut total = 0;
    let mut c_in = channels;
    for _ in 0..blocks {
        total += kernel * kernel * c_in * filters + filters;
        c_in = filters;
    }
    let s = side / div;
    Ok(total + s * s * c_in * classes + classes)
}

/// Two-significant-figure rendering used for parameter budgets: `0.72M`,
/// `1.4M`, `49k`.
pub fn format_param_count(n: usize) -> String {
    let v = n as f64;
    let digits = v.log10().floor() as i32;
    let q = 10f64.powi(digits - 1);
    let r = (v / q).round() * q;
    if r >= 1e6 {
        format!("{:.1}M", r / 1e6)
    } else if r >= 1e5 {
        format!("{:.2}M", r / 1e6)
    } else if r >= 1e3 {
        format!("{:.0}k", r / 1e3)
    } else {
        format!("{r:.0}")
    }
}

/// Cached intermediate values of one forward pass.
#[derive(Debug, Clone)]
enum Cache<T> {
    Conv {
        in_shape: [usize; 3],
        input: Vec<T>,
        out: Vec<T>,
    },
    Pool {
        in_len: usize,
        argmax: Vec<u32>,
    },
    Flatten,
    Dense {
        input: Vec<T>,
    },
    Softmax,
}

#[derive(Debug, Clone)]
pub struct Forward<T> {
    pub probs: Vec<T>,
    caches: Vec<Cache<T>>,
}

impl<T: Element> Forward<T> {
    /// ReLU on/off states and pooling winners; finite differences are only
    /// meaningful between inputs that share this pattern.
    pub fn activation_pattern(&self) -> Vec<u32> {
        let mut out = Vec::new();
        for c in &self.caches {
            match c {
                Cache::Conv { out: o, .. } => out.extend(o.iter().map(|v| (*v > T::zero()) as u32)),
                Cache::Pool { argmax, .. } => out.extend_from_slice(argmax),
                _ => {}
            }
        }
        out
    }
}

/// Per-batch training statistics.
#[derive(Debug, Clone)]
pub struct BatchResult<T> {
    /// Mean gradient over the batch.
    pub grads: Vec<Tensor<T>>,
    /// Sum of per-sample cross-entropy.
    pub loss_sum: f64,
    pub correct: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    arch: Architecture,
    layers: Vec<LayerSpec>,
    params: Vec<Tensor<T>>,
}

impl<T: Element> Network<T> {
    /// He-uniform weights, zero biases.
    pub fn new(arch: Architecture, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shapes = arch.param_shapes()?;
        let params = shapes
            .iter()
            .map(|(name, shape)| {
                if name.ends_with("bias") {
                    return Tensor::zeros(shape);
                }
                let fan_in: usize = shape[..shape.len() - 1].iter().product();
                let limit = (6.0 / fan_in as f64).sqrt();
                let data = (0..shape.iter().product::<usize>())
                    .map(|_| T::from(rng.random_range(-limit..limit)).expect("finite"))
                    .collect();
                Tensor { shape: shape.clone(), data }
            })
            .collect();
        Ok(Network {
            arch,
            layers: arch.layers(),
            params,
        })
    }

    pub fn zeros(arch: Architecture) -> Result<Self> {
        let params = arch.param_shapes()?.iter().map(|(_, s)| Tensor::zeros(s)).collect();
        Ok(Network {
            arch,
            layers: arch.layers(),
            params,
        })
    }

    pub fn from_params(arch: Architecture, params: Vec<Tensor<T>>) -> Result<Self> {
        let shapes = arch.param_shapes()?;
        if shapes.len() != params.len() || shapes.iter().zip(&params).any(|((_, s), p)| s != p.shape()) {
            return Err(Error::ShapeMismatch("parameters do not match the architecture".into()));
        }
        Ok(Network {
            arch,
            layers: arch.layers(),
            params,
        })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn params(&self) -> &[Tensor<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    pub fn cast<U: Element>(&self) -> Network<U> {
        Network {
            arch: self.arch,
            layers: self.layers.clone(),
            params: self.params.iter().map(Tensor::cast).collect(),
        }
    }

    fn check_input(&self, input: &Tensor<T>) -> Result<()> {
        if input.shape() != self.arch.input {
            return Err(Error::ShapeMismatch(format!(
                "input {:?}, network expects {:?}",
                input.shape(),
                self.arch.input
            )));
        }
        Ok(())
    }

    fn run(&self, input: &Tensor<T>, keep: bool) -> Result<Forward<T>> {
        self.check_input(input)?;
        let [mut h, mut w, mut c] = self.arch.input;
        let mut x = input.data.clone();
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut p = 0;
        for layer in &self.layers {
            match *layer {
                LayerSpec::Conv { kernel, filters } => {
                    let out = ops::conv_forward_raw(&x, [h, w, c], &self.params[p], &self.params[p + 1], kernel, filters);
                    p += 2;
                    caches.push(Cache::Conv {
                        in_shape: [h, w, c],
                        input: if keep { std::mem::take(&mut x) } else { Vec::new() },
                        out: if keep { out.clone() } else { Vec::new() },
                    });
                    x = out;
                    c = filters;
                }
                LayerSpec::MaxPool => {
                    let (out, argmax) = ops::maxpool_raw(&x, [h, w, c]);
                    caches.push(Cache::Pool {
                        in_len: x.len(),
                        argmax: if keep { argmax } else { Vec::new() },
                    });
                    x = out;
                    h /= 2;
                    w /= 2;
                }
                LayerSpec::Flatten => caches.push(Cache::Flatten),
                LayerSpec::Dense { units } => {
                    let wts = &self.params[p];
                    let bias = &self.params[p + 1];
                    p += 2;
                    let mut out = bias.data.clone();
                    T::gemm(1, x.len(), units, &x, x.len() as isize, 1, &wts.data, units as isize, 1, T::one(), &mut out, units as isize, 1);
                    caches.push(Cache::Dense {
                        input: if keep { std::mem::take(&mut x) } else { Vec::new() },
                    });
                    x = out;
                }
                LayerSpec::Softmax => {
                    x = ops::softmax_generic(&x);
                    caches.push(Cache::Softmax);
                }
            }
        }
        Ok(Forward { probs: x, caches })
    }

    /// Forward pass keeping every activation needed by [`Network::backward`].
    pub fn forward(&self, input: &Tensor<T>) -> Result<Forward<T>> {
        self.run(input, true)
    }

    /// Class probabilities only.
    pub fn predict(&self, input: &Tensor<T>) -> Result<Vec<T>> {
        Ok(self.run(input, false)?.probs)
    }

    /// Gradient of `cross_entropy(forward(input), onehot(label))` with
    /// respect to every parameter tensor.
    pub fn backward(&self, fwd: &Forward<T>, label: usize) -> Result<Vec<Tensor<T>>> {
        if label >= self.arch.classes || fwd.probs.len() != self.arch.classes {
            return Err(Error::ShapeMismatch(format!("label {label} for {} classes", self.arch.classes)));
        }
        let mut grads: Vec<Tensor<T>> = self.params.iter().map(|p| Tensor::zeros(p.shape())).collect();
        let mut p = self.params.len();
        // softmax + cross-entropy: d loss / d logits = p - y
        let mut g: Vec<T> = fwd.probs.clone();
        g[label] = g[label] - T::one();
        for (idx, (layer, cache)) in self.layers.iter().zip(&fwd.caches).enumerate().rev() {
            match (layer, cache) {
                (LayerSpec::Softmax, Cache::Softmax) | (LayerSpec::Flatten, Cache::Flatten) => {}
                (LayerSpec::Dense { units }, Cache::Dense { input }) => {
                    p -= 2;
                    let units = *units;
                    let d = input.len();
                    // dW = x^T g (outer product), db = g
                    let gw = &mut grads[p].data;
                    T::gemm(d, 1, units, input, 1, 1, &g, units as isize, 1, T::zero(), gw, units as isize, 1);
                    grads[p + 1].data.copy_from_slice(&g);
                    let mut dx = vec![T::zero(); d];
                    T::gemm(1, units, d, &g, units as isize, 1, &self.params[p].data, 1, units as isize, T::zero(), &mut dx, d as isize, 1);
                    g = dx;
                }
                (LayerSpec::MaxPool, Cache::Pool { in_len, argmax }) => {
                    let mut dx = vec![T::zero(); *in_len];
                    for (o, &src) in argmax.iter().enumerate() {
                        dx[src as usize] = dx[src as usize] + g[o];
                    }
                    g = dx;
                }
                (LayerSpec::Conv { kernel, filters }, Cache::Conv { in_shape, input, out }) => {
                    p -= 2;
                    for (gi, oi) in g.iter_mut().zip(out) {
                        if *oi <= T::zero() {
                            *gi = T::zero();
                        }
                    }
                    let need_input = idx > 0;
                    let (dk, db, dx) = ops::conv_backward_raw(&g, input, *in_shape, &self.params[p], *kernel, *filters, need_input);
                    grads[p].data = dk;
                    grads[p + 1].data = db;
                    g = dx;
                }
                _ => unreachable!("cache does not match layer"),
            }
        }
        Ok(grads)
    }

    /// Mean gradient, summed loss and correct count over a batch. Samples
    /// may run in parallel; the reduction is always in index order.
    pub fn batch_gradients(&self, exec: Exec, batch: &[(&Tensor<T>, usize)]) -> Result<BatchResult<T>> {
        let per_sample = exec::map_slice(exec, batch, |(x, y)| -> Result<(Vec<Tensor<T>>, f64, bool)> {
            let fwd = self.forward(x)?;
            let loss = ops::cross_entropy_generic(&fwd.probs, *y);
            let hit = argmax(&fwd.probs) == *y;
            Ok((self.backward(&fwd, *y)?, loss, hit))
        });
        let mut grads: Vec<Tensor<T>> = self.params.iter().map(|p| Tensor::zeros(p.shape())).collect();
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for r in per_sample {
            let (g, loss, hit) = r?;
            for (acc, gi) in grads.iter_mut().zip(g) {
                for (a, b) in acc.data.iter_mut().zip(gi.data) {
                    *a = *a + b;
                }
            }
            loss_sum += loss;
            correct += hit as usize;
        }
        let scale = T::from(1.0 / batch.len().max(1) as f64).expect("finite");
        for t in &mut grads {
            for v in &mut t.data {
                *v = *v * scale;
            }
        }
        Ok(BatchResult { grads, loss_sum, correct })
    }
}

/// Index of the largest value; ties resolve to the lowest index.
pub fn argmax<T: PartialOrd>(v: &[T]) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] > v[best] {
            best = i;
        }
    }
    best
}
