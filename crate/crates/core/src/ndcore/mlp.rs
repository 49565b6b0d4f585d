//! Fully connected network with tanh hidden layers and a linear output layer.
//!
//! Weights of a layer are stored as an `n_in × n_out` matrix so a batch is
//! propagated as `A · W + b`. The flat parameter layout used by optimizers is
//! layer by layer: the weight matrix row-major, then the bias vector.

use rand::Rng as _;

use super::matrix::{axpy, Matrix};
use crate::error::{invalid, Result};
use crate::seed::rng_from_seed;

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    layer_sizes: Vec<usize>,
    layers: Vec<Layer>,
}

/// Activations of every layer for one batch, kept for backpropagation.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    activations: Vec<Matrix>,
}

impl ForwardCache {
    pub fn output(&self) -> &Matrix {
        self.activations.last().expect("cache always holds the input")
    }

    pub fn into_output(mut self) -> Matrix {
        self.activations.pop().expect("cache always holds the input")
    }
}

/// Gradients returned by [`Mlp::backward`].
#[derive(Clone, Debug)]
pub struct MlpGradients {
    pub params: Vec<f64>,
    pub inputs: Matrix,
}

pub fn parameter_count(layer_sizes: &[usize]) -> usize {
    layer_sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn new(layer_sizes: &[usize], seed: u64) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(invalid("an MLP needs at least an input and an output layer"));
        }
        if layer_sizes.contains(&0) {
            return Err(invalid(format!("layer sizes must be positive: {layer_sizes:?}")));
        }
        let mut rng = rng_from_seed(seed);
        let layers = layer_sizes
            .windows(2)
            .map(|w| {
                let (n_in, n_out) = (w[0], w[1]);
                let limit = (6.0 / (n_in + n_out) as f64).sqrt();
                let data = (0..n_in * n_out).map(|_| rng.gen_range(-limit..=limit)).collect();
                Layer { weights: Matrix::from_vec(n_in, n_out, data).expect("sized above"), bias: vec![0.0; n_out] }
            })
            .collect();
        Ok(Self { layer_sizes: layer_sizes.to_vec(), layers })
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        let first = layers.first().ok_or_else(|| invalid("no layers"))?;
        let mut sizes = vec![first.weights.rows()];
        for l in &layers {
            if l.weights.rows() != *sizes.last().unwrap() || l.bias.len() != l.weights.cols() {
                return Err(invalid("layer shapes do not chain"));
            }
            sizes.push(l.weights.cols());
        }
        Ok(Self { layer_sizes: sizes, layers })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        parameter_count(&self.layer_sizes)
    }

    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(l.weights.as_slice());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_flat_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(invalid(format!("expected {} parameters, got {}", self.param_count(), params.len())));
        }
        let mut offset = 0;
        for l in &mut self.layers {
            let nw = l.weights.as_slice().len();
            l.weights.as_mut_slice().copy_from_slice(&params[offset..offset + nw]);
            offset += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&params[offset..offset + nb]);
            offset += nb;
        }
        Ok(())
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.input_dim() {
            return Err(invalid(format!("input has {} columns, network expects {}", x.cols(), self.input_dim())));
        }
        Ok(())
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        Ok(self.forward_cached(x)?.into_output())
    }

    pub fn forward_cached(&self, x: &Matrix) -> Result<ForwardCache> {
        self.check_input(x)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.clone());
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let mut z = activations[li].matmul(&layer.weights)?;
            for r in 0..z.rows() {
                for (v, b) in z.row_mut(r).iter_mut().zip(&layer.bias) {
                    *v += b;
                    if li != last {
                        *v = v.tanh();
                    }
                }
            }
            activations.push(z);
        }
        Ok(ForwardCache { activations })
    }

    pub fn backward(&self, x: &Matrix, output_grad: &Matrix) -> Result<MlpGradients> {
        let cache = self.forward_cached(x)?;
        self.backward_cached(&cache, output_grad)
    }

    pub fn backward_cached(&self, cache: &ForwardCache, output_grad: &Matrix) -> Result<MlpGradients> {
        if output_grad.shape() != cache.output().shape() {
            return Err(invalid(format!(
                "output gradient shape {:?} does not match output {:?}",
                output_grad.shape(),
                cache.output().shape()
            )));
        }
        let mut grads = vec![0.0; self.param_count()];
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut offset = 0;
        for l in &self.layers {
            offsets.push(offset);
            offset += l.weights.as_slice().len() + l.bias.len();
        }

        let last = self.layers.len() - 1;
        let mut upstream = output_grad.clone();
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            if li != last {
                // tanh'(z) = 1 - a²
                let act = &cache.activations[li + 1];
                for (g, a) in upstream.as_mut_slice().iter_mut().zip(act.as_slice()) {
                    *g *= 1.0 - a * a;
                }
            }
            let input = &cache.activations[li];
            let dw = input.t_matmul(&upstream)?;
            let nw = dw.as_slice().len();
            let base = offsets[li];
            grads[base..base + nw].copy_from_slice(dw.as_slice());
            let db = &mut grads[base + nw..base + nw + layer.bias.len()];
            for r in 0..upstream.rows() {
                axpy(1.0, upstream.row(r), db);
            }
            upstream = upstream.matmul_t(&layer.weights)?;
        }
        Ok(MlpGradients { params: grads, inputs: upstream })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndcore::gradcheck::grad_check;

    fn random_batch(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = rng_from_seed(seed);
        let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    }

    #[test]
    fn init_has_zero_biases_and_counts_parameters() {
        let net = Mlp::new(&[4, 2], 3).unwrap();
        assert!(net.layers()[0].bias.iter().all(|&b| b == 0.0));
        assert_eq!(Mlp::new(&[3, 5, 2], 0).unwrap().param_count(), 32);
        let limit = (6.0f64 / 6.0).sqrt();
        assert!(net.layers()[0].weights.as_slice().iter().all(|w| w.abs() <= limit));
    }

    #[test]
    fn init_is_deterministic() {
        assert_eq!(Mlp::new(&[5, 7, 2], 11).unwrap(), Mlp::new(&[5, 7, 2], 11).unwrap());
        assert_ne!(Mlp::new(&[5, 7, 2], 11).unwrap(), Mlp::new(&[5, 7, 2], 12).unwrap());
    }

    #[test]
    fn init_rejects_degenerate_sizes() {
        assert!(Mlp::new(&[], 0).is_err());
        assert!(Mlp::new(&[4], 0).is_err());
        assert!(Mlp::new(&[4, 0, 2], 0).is_err());
    }

    #[test]
    fn zero_network_maps_to_zero() {
        let mut net = Mlp::new(&[3, 4, 2], 0).unwrap();
        net.set_flat_params(&vec![0.0; net.param_count()]).unwrap();
        let out = net.forward(&random_batch(5, 3, 1)).unwrap();
        assert!(out.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_linear_layer_passes_input_through() {
        let net = Mlp::from_layers(vec![Layer { weights: Matrix::identity(3), bias: vec![0.0; 3] }]).unwrap();
        let x = random_batch(4, 3, 2);
        assert_eq!(net.forward(&x).unwrap(), x);
    }

    #[test]
    fn forward_matches_straight_line_evaluation() {
        let net = Mlp::new(&[3, 4, 2], 5).unwrap();
        let x = random_batch(6, 3, 6);
        let out = net.forward(&x).unwrap();
        let (l0, l1) = (&net.layers()[0], &net.layers()[1]);
        for r in 0..6 {
            let hidden: Vec<f64> = (0..4)
                .map(|j| {
                    let mut z = l0.bias[j];
                    for k in 0..3 {
                        z += x[(r, k)] * l0.weights[(k, j)];
                    }
                    z.tanh()
                })
                .collect();
            for j in 0..2 {
                let mut z = l1.bias[j];
                for k in 0..4 {
                    z += hidden[k] * l1.weights[(k, j)];
                }
                assert!((z - out[(r, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let net = Mlp::new(&[3, 2], 0).unwrap();
        assert!(net.forward(&Matrix::zeros(2, 4)).is_err());
        assert!(net.backward(&Matrix::zeros(2, 3), &Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let net = Mlp::new(&[3, 4, 2], 1).unwrap();
        let g = net.backward(&random_batch(5, 3, 2), &Matrix::zeros(5, 2)).unwrap();
        assert!(g.params.iter().all(|&v| v == 0.0));
        assert!(g.inputs.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sum_loss_weight_gradient_is_input_column_sums() {
        let net = Mlp::new(&[3, 2], 4).unwrap();
        let x = random_batch(5, 3, 9);
        let ones = Matrix::from_vec(5, 2, vec![1.0; 10]).unwrap();
        let g = net.backward(&x, &ones).unwrap();
        for k in 0..3 {
            let col_sum: f64 = (0..5).map(|r| x[(r, k)]).sum();
            for j in 0..2 {
                assert!((g.params[k * 2 + j] - col_sum).abs() < 1e-12);
            }
        }
        // bias gradient = batch size
        assert_eq!(&g.params[6..8], &[5.0, 5.0]);
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        for seed in 0..20 {
            let net = Mlp::new(&[3, 5, 4, 2], seed).unwrap();
            let x = random_batch(4, 3, 100 + seed);
            let target = random_batch(4, 2, 200 + seed);
            let loss = |p: &[f64]| {
                let mut n = net.clone();
                n.set_flat_params(p)?;
                let cache = n.forward_cached(&x)?;
                let out = cache.output();
                let mut diff = out.clone();
                for (d, t) in diff.as_mut_slice().iter_mut().zip(target.as_slice()) {
                    *d -= t;
                }
                let value = 0.5 * diff.as_slice().iter().map(|d| d * d).sum::<f64>();
                Ok((value, n.backward_cached(&cache, &diff)?.params))
            };
            let err = grad_check(loss, &net.flat_params()).unwrap();
            assert!(err < 1e-5, "seed {seed}: {err}");
        }
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let net = Mlp::new(&[3, 6, 2], 8).unwrap();
        let x = random_batch(3, 3, 10);
        let loss = |flat: &[f64]| {
            let xb = Matrix::from_vec(3, 3, flat.to_vec())?;
            let cache = net.forward_cached(&xb)?;
            let out = cache.output().clone();
            let value = 0.5 * out.as_slice().iter().map(|v| v * v).sum::<f64>();
            Ok((value, net.backward_cached(&cache, &out)?.inputs.into_vec()))
        };
        assert!(grad_check(loss, x.as_slice()).unwrap() < 1e-6);
    }
}
