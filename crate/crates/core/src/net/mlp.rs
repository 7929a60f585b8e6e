//! Tanh multilayer perceptron with exact input jets and parameter gradients.
//!
//! Forward propagation carries, for every neuron and every point, the value
//! plus first and (selected) second derivatives with respect to the input
//! coordinates. A linear layer acts on every channel alike; the tanh layer
//! applies the second-order chain rule. Parameter gradients come from a
//! reverse sweep over that same jet computation, so mixed derivatives such as
//! `d/dθ (d²φ/dx²)` are exact.
//!
//! Points are processed in blocks: a block's channels form the columns of a
//! `neurons × (points · channels)` matrix, which turns every layer into one
//! matrix product.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayView2, ArrayViewMut2};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

use super::jet::{Jet2, JetShape};
use crate::error::{Error, Result};

const BLOCK: usize = 32;

/// Weights and biases of the network. Layer `l` maps `layer_sizes[l]` inputs
/// to `layer_sizes[l + 1]` outputs; weights are row-major `(out, in)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub seed: u64,
}

/// Parameter-shaped container for gradients and optimizer moments.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamGrad {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Uniform double in [0, 1) from the top 53 bits of one PRNG draw.
fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn validate_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(Error::Config(format!(
            "layer_sizes needs at least an input and an output entry, got {layer_sizes:?}"
        )));
    }
    if layer_sizes.contains(&0) {
        return Err(Error::Config(format!("layer_sizes entries must be positive, got {layer_sizes:?}")));
    }
    if *layer_sizes.last().unwrap() != 1 {
        return Err(Error::Config(format!("network output must be scalar, got {layer_sizes:?}")));
    }
    Ok(())
}

/// Glorot-uniform weights, zero biases.
///
/// The generator is ChaCha8 seeded through `seed_from_u64(seed)` on stream 0;
/// each weight is `limit * (2u - 1)` with `u` built from the top 53 bits of
/// one `next_u64` draw, filled layer by layer in row-major order.
pub fn init_params(layer_sizes: &[usize], seed: u64) -> Result<MlpParams> {
    validate_sizes(layer_sizes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for pair in layer_sizes.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        weights.push((0..fan_in * fan_out).map(|_| limit * (2.0 * unit_f64(&mut rng) - 1.0)).collect());
        biases.push(vec![0.0; fan_out]);
    }
    Ok(MlpParams {
        layer_sizes: layer_sizes.to_vec(),
        weights,
        biases,
        seed,
    })
}

impl MlpParams {
    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn num_params(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>() + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    /// Checks that every weight and bias array matches `layer_sizes`.
    pub fn validate(&self) -> Result<()> {
        validate_sizes(&self.layer_sizes)?;
        let layers = self.layer_sizes.len() - 1;
        if self.weights.len() != layers || self.biases.len() != layers {
            return Err(Error::Config(format!(
                "expected {layers} layers, found {} weight and {} bias arrays",
                self.weights.len(),
                self.biases.len()
            )));
        }
        for (l, pair) in self.layer_sizes.windows(2).enumerate() {
            if self.weights[l].len() != pair[0] * pair[1] || self.biases[l].len() != pair[1] {
                return Err(Error::Config(format!("layer {l} does not have shape {}x{}", pair[1], pair[0])));
            }
        }
        Ok(())
    }

    fn weight_view(&self, layer: usize) -> ArrayView2<'_, f64> {
        let shape = (self.layer_sizes[layer + 1], self.layer_sizes[layer]);
        ArrayView2::from_shape(shape, &self.weights[layer]).expect("validated shape")
    }

    /// Plain forward pass, value only.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x.len())?;
        let mut a = x.to_vec();
        for l in 0..self.num_layers() {
            let n_out = self.layer_sizes[l + 1];
            let w = &self.weights[l];
            let mut z: Vec<f64> = self.biases[l].clone();
            for (r, zr) in z.iter_mut().enumerate() {
                *zr += w[r * a.len()..(r + 1) * a.len()].iter().zip(&a).map(|(w, a)| w * a).sum::<f64>();
            }
            if l + 1 < self.num_layers() {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            debug_assert_eq!(z.len(), n_out);
            a = z;
        }
        Ok(a[0])
    }

    fn check_input(&self, len: usize) -> Result<()> {
        if len != self.input_dim() {
            return Err(Error::Input(format!(
                "network expects {} inputs, got {len}",
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Value, gradient and full Hessian with respect to the raw inputs.
    pub fn forward_jet(&self, x: &[f64]) -> Result<Jet2> {
        self.check_input(x.len())?;
        let d = x.len();
        let seeds: Vec<Jet2> = x.iter().enumerate().map(|(i, &v)| Jet2::variable(d, i, v)).collect();
        self.forward_jet_seeded(&seeds)
    }

    /// Jet of the network output when each input is itself a function of
    /// some coordinates, given by its jet in those coordinates.
    pub fn forward_jet_seeded(&self, inputs: &[Jet2]) -> Result<Jet2> {
        self.check_input(inputs.len())?;
        let dim = inputs.first().map_or(0, Jet2::dim);
        let shape = JetShape::full(dim);
        let mut out = self.forward_jets(&shape, 1, |_, slot| slot.clone_from_slice(inputs))?;
        Ok(out.pop().unwrap())
    }

    /// Batched jets. `seed(i, inputs)` writes the input jets of point `i`.
    /// Hessian entries outside `shape` are returned as zero.
    pub fn forward_jets<S>(&self, shape: &JetShape, count: usize, seed: S) -> Result<Vec<Jet2>>
    where
        S: Fn(usize, &mut [Jet2]) + Sync,
    {
        let blocks: Vec<_> = (0..count).step_by(BLOCK).collect();
        let per_block: Vec<Vec<Jet2>> = blocks
            .par_iter()
            .map(|&start| {
                let len = BLOCK.min(count - start);
                let pass = ForwardPass::run(self, shape, start, len, &seed);
                let c = shape.channels();
                let out = pass.output();
                (0..len)
                    .map(|b| {
                        let mut jet = Jet2::zero(shape.dim());
                        shape.read_channels(&out[b * c..(b + 1) * c], &mut jet);
                        jet
                    })
                    .collect()
            })
            .collect();
        Ok(per_block.into_iter().flatten().collect())
    }
}

/// A scalar objective that is a sum of per-point terms, each a function of
/// the network output jet at that point.
pub trait JetLoss: Sync {
    /// Coordinate dimension of the jets.
    fn dim(&self) -> usize;

    /// Number of points.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes the network input jets for point `index`.
    fn seed(&self, index: usize, inputs: &mut [Jet2]);

    /// Returns the loss term of point `index` and writes its derivative with
    /// respect to every entry of `output` into `adjoint`. Hessian entries are
    /// independent here: `adjoint.hess[i*d + j]` is the derivative with
    /// respect to `output.hess[i*d + j]` alone.
    fn eval(&self, index: usize, output: &Jet2, adjoint: &mut Jet2) -> f64;
}

impl ParamGrad {
    pub fn zeros_like(params: &MlpParams) -> Self {
        Self {
            weights: params.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: params.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &ParamGrad) {
        for (a, b) in self.iter_mut().zip(other.iter()) {
            *a += b;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().zip(&self.biases).flat_map(|(w, b)| w.iter().chain(b.iter()))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().zip(self.biases.iter_mut()).flat_map(|(w, b)| w.iter_mut().chain(b.iter_mut()))
    }
}

impl MlpParams {
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().zip(&self.biases).flat_map(|(w, b)| w.iter().chain(b.iter()))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().zip(self.biases.iter_mut()).flat_map(|(w, b)| w.iter_mut().chain(b.iter_mut()))
    }
}

/// Pairwise reduction in a fixed order, so the sum does not depend on how
/// blocks were scheduled.
fn tree_sum(mut parts: Vec<(f64, ParamGrad)>) -> Option<(f64, ParamGrad)> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some((la, mut ga)) = it.next() {
            match it.next() {
                Some((lb, gb)) => {
                    ga.add_assign(&gb);
                    next.push((la + lb, ga));
                }
                None => next.push((la, ga)),
            }
        }
        parts = next;
    }
    parts.pop()
}

/// Total loss and its exact gradient with respect to every parameter.
///
/// `shape` selects which Hessian entries are propagated; the loss must only
/// read those (others are zero in the jets it sees).
pub fn loss_gradient(params: &MlpParams, shape: &JetShape, loss: &dyn JetLoss) -> Result<(f64, ParamGrad)> {
    if shape.dim() != loss.dim() {
        return Err(Error::Input(format!(
            "jet shape has dimension {}, loss expects {}",
            shape.dim(),
            loss.dim()
        )));
    }
    params.validate()?;
    let count = loss.len();
    let starts: Vec<_> = (0..count).step_by(BLOCK).collect();
    let parts: Vec<(f64, ParamGrad)> = starts
        .par_iter()
        .map(|&start| {
            let len = BLOCK.min(count - start);
            let seed = |i: usize, slot: &mut [Jet2]| loss.seed(i, slot);
            let pass = ForwardPass::run(params, shape, start, len, &seed);
            pass.backward(params, shape, start, loss)
        })
        .collect();
    Ok(tree_sum(parts).unwrap_or_else(|| (0.0, ParamGrad::zeros_like(params))))
}

/// Identity-seeded convenience wrapper over [`JetLoss`] for raw input points.
pub struct PointLoss<'a, F> {
    pub points: &'a [Vec<f64>],
    pub term: F,
}

impl<F> JetLoss for PointLoss<'_, F>
where
    F: Fn(usize, &Jet2, &mut Jet2) -> f64 + Sync,
{
    fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    fn len(&self) -> usize {
        self.points.len()
    }

    fn seed(&self, index: usize, inputs: &mut [Jet2]) {
        let x = &self.points[index];
        for (i, slot) in inputs.iter_mut().enumerate() {
            *slot = Jet2::variable(x.len(), i, x[i]);
        }
    }

    fn eval(&self, index: usize, output: &Jet2, adjoint: &mut Jet2) -> f64 {
        (self.term)(index, output, adjoint)
    }
}

/// Stored activations of one block.
struct ForwardPass {
    /// `inputs[l]` feeds layer `l`; `inputs[0]` holds the seeds.
    inputs: Vec<Array2<f64>>,
    /// Pre-activation channels of every layer.
    pre: Vec<Array2<f64>>,
    len: usize,
}

impl ForwardPass {
    fn run<S>(params: &MlpParams, shape: &JetShape, start: usize, len: usize, seed: &S) -> Self
    where
        S: Fn(usize, &mut [Jet2]) + Sync + ?Sized,
    {
        let c = shape.channels();
        let n_in = params.input_dim();
        let mut a0 = Array2::<f64>::zeros((n_in, len * c));
        let mut seeds = vec![Jet2::zero(shape.dim()); n_in];
        let mut buf = vec![0.0; c];
        for b in 0..len {
            seed(start + b, &mut seeds);
            for (r, jet) in seeds.iter().enumerate() {
                shape.write_channels(jet, &mut buf);
                for (ch, v) in buf.iter().enumerate() {
                    a0[(r, b * c + ch)] = *v;
                }
            }
        }
        let mut inputs = vec![a0];
        let mut pre = Vec::with_capacity(params.num_layers());
        for l in 0..params.num_layers() {
            let n_out = params.layer_sizes[l + 1];
            let mut z = Array2::<f64>::zeros((n_out, len * c));
            general_mat_mul(1.0, &params.weight_view(l), &inputs[l], 0.0, &mut z);
            for (r, &bias) in params.biases[l].iter().enumerate() {
                for b in 0..len {
                    z[(r, b * c)] += bias;
                }
            }
            if l + 1 < params.num_layers() {
                inputs.push(tanh_forward(&z, shape, len));
            }
            pre.push(z);
        }
        Self { inputs, pre, len }
    }

    fn output(&self) -> &[f64] {
        let z = self.pre.last().unwrap();
        z.as_slice().expect("standard layout")
    }

    fn backward(&self, params: &MlpParams, shape: &JetShape, start: usize, loss: &dyn JetLoss) -> (f64, ParamGrad) {
        let c = shape.channels();
        let len = self.len;
        let mut grad = ParamGrad::zeros_like(params);

        let out = self.output();
        let mut jet = Jet2::zero(shape.dim());
        let mut adj = Jet2::zero(shape.dim());
        let mut total = 0.0;
        let mut zbar = Array2::<f64>::zeros((1, len * c));
        {
            let row = zbar.as_slice_mut().unwrap();
            for b in 0..len {
                shape.read_channels(&out[b * c..(b + 1) * c], &mut jet);
                adj.value = 0.0;
                adj.grad.iter_mut().for_each(|g| *g = 0.0);
                adj.hess.iter_mut().for_each(|h| *h = 0.0);
                total += loss.eval(start + b, &jet, &mut adj);
                shape.read_adjoint(&adj, &mut row[b * c..(b + 1) * c]);
            }
        }

        for l in (0..params.num_layers()).rev() {
            let (n_out, n_in) = (params.layer_sizes[l + 1], params.layer_sizes[l]);
            let mut gw = ArrayViewMut2::from_shape((n_out, n_in), &mut grad.weights[l]).unwrap();
            general_mat_mul(1.0, &zbar, &self.inputs[l].t(), 1.0, &mut gw);
            for (r, gb) in grad.biases[l].iter_mut().enumerate() {
                *gb += (0..len).map(|b| zbar[(r, b * c)]).sum::<f64>();
            }
            if l > 0 {
                let mut abar = Array2::<f64>::zeros((n_in, len * c));
                general_mat_mul(1.0, &params.weight_view(l).t(), &zbar, 0.0, &mut abar);
                zbar = tanh_backward(&abar, &self.pre[l - 1], &self.inputs[l], shape, len);
            }
        }
        (total, grad)
    }
}

fn tanh_forward(z: &Array2<f64>, shape: &JetShape, len: usize) -> Array2<f64> {
    let c = shape.channels();
    let d = shape.dim();
    let pairs = shape.pairs();
    let mut h = Array2::<f64>::zeros(z.dim());
    let zs = z.as_slice().unwrap();
    let hs = h.as_slice_mut().unwrap();
    for (zc, hc) in zs.chunks_exact(c).zip(hs.chunks_exact_mut(c)) {
        let t = zc[0].tanh();
        let s1 = 1.0 - t * t;
        let s2 = -2.0 * t * s1;
        hc[0] = t;
        for i in 1..=d {
            hc[i] = s1 * zc[i];
        }
        for (p, &(i, j)) in pairs.iter().enumerate() {
            hc[1 + d + p] = s2 * zc[1 + i] * zc[1 + j] + s1 * zc[1 + d + p];
        }
    }
    debug_assert_eq!(zs.len(), len * c * z.nrows());
    h
}

fn tanh_backward(hbar: &Array2<f64>, z: &Array2<f64>, h: &Array2<f64>, shape: &JetShape, len: usize) -> Array2<f64> {
    let c = shape.channels();
    let d = shape.dim();
    let pairs = shape.pairs();
    let mut zbar = Array2::<f64>::zeros(z.dim());
    let (zs, hs, hb) = (z.as_slice().unwrap(), h.as_slice().unwrap(), hbar.as_slice().unwrap());
    let zb = zbar.as_slice_mut().unwrap();
    for (((zc, hc), hbc), zbc) in zs
        .chunks_exact(c)
        .zip(hs.chunks_exact(c))
        .zip(hb.chunks_exact(c))
        .zip(zb.chunks_exact_mut(c))
    {
        let t = hc[0];
        let s1 = 1.0 - t * t;
        let s2 = -2.0 * t * s1;
        let s3 = -2.0 * s1 * s1 + 4.0 * t * t * s1;
        let mut v = hbc[0] * s1;
        for i in 1..=d {
            zbc[i] = hbc[i] * s1;
            v += hbc[i] * s2 * zc[i];
        }
        for (p, &(i, j)) in pairs.iter().enumerate() {
            let q = 1 + d + p;
            let w = hbc[q];
            zbc[q] = w * s1;
            zbc[1 + i] += w * s2 * zc[1 + j];
            zbc[1 + j] += w * s2 * zc[1 + i];
            v += w * (s3 * zc[1 + i] * zc[1 + j] + s2 * zc[q]);
        }
        zbc[0] = v;
    }
    debug_assert_eq!(zs.len(), len * c * z.nrows());
    zbar
}
