//! Deep kernel learning: an MLP encoder into a 2-D latent space composed
//! with the RBF base kernel, `K_DKL(X) = K_base(g(X|ω)|γ)`.
//!
//! Encoder weights ω and kernel hyperparameters γ are trained jointly by
//! ascending the MAP objective (log marginal likelihood of the encoded
//! inputs plus the hyperparameter priors) with Adam. Targets are
//! standardized internally and predictions are mapped back.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::checkpoint::Checkpoint;
use crate::error::{invalid, numeric, Error, Result};
use crate::gp::{self, GpFit, KernelHyper, MapPrior, PosteriorPrediction};
use crate::latent::points_from_matrix;
pub use crate::latent::LatentPoint;
use crate::ndcore::{AdamState, Matrix, Mlp};
use crate::seed::{component_rng, derive_seed};

pub const LATENT_DIM: usize = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DklConfig {
    pub hidden_sizes: Vec<usize>,
    pub steps: usize,
    pub lr: f64,
    /// Rows per Adam step; `None` trains full-batch.
    pub batch_size: Option<usize>,
    /// Z-score every input column using training-set statistics.
    pub standardize_inputs: bool,
    pub learn_noise: bool,
    pub init_hyper: KernelHyper,
    pub prior: MapPrior,
}

impl Default for DklConfig {
    fn default() -> Self {
        Self {
            hidden_sizes: vec![64, 64],
            steps: 200,
            lr: 0.01,
            batch_size: None,
            standardize_inputs: false,
            learn_noise: true,
            init_hyper: KernelHyper::default(),
            prior: MapPrior::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub objective_trace: Vec<f64>,
    pub seed: u64,
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DklModel {
    pub encoder: Mlp,
    pub hyper: KernelHyper,
    /// GP over the encoded (and standardized-target) training set.
    pub fit: GpFit,
    pub target_mean: f64,
    pub target_std: f64,
    pub input_shift: Vec<f64>,
    pub input_scale: Vec<f64>,
    pub meta: TrainingMeta,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count().max(1) as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    (mean, if std > 1e-12 { std } else { 1.0 })
}

fn column_stats(x: &Matrix) -> (Vec<f64>, Vec<f64>) {
    (0..x.cols()).map(|j| mean_std((0..x.rows()).map(move |i| x[(i, j)]))).unzip()
}

fn apply_scaling(x: &Matrix, shift: &[f64], scale: &[f64]) -> Matrix {
    let mut out = x.clone();
    for i in 0..out.rows() {
        for ((v, s), c) in out.row_mut(i).iter_mut().zip(shift).zip(scale) {
            *v = (*v - s) / c;
        }
    }
    out
}

/// MAP objective of the deep-kernel GP and its gradient with respect to the
/// flat parameter vector `[encoder params…, log α, log l, log σ_noise]`.
pub fn dkl_objective_grad(
    encoder: &Mlp,
    hyper: &KernelHyper,
    x: &Matrix,
    y: &[f64],
    prior: &MapPrior,
) -> Result<(f64, Vec<f64>)> {
    let cache = encoder.forward_cached(x)?;
    let g = gp::map_objective_grad(cache.output(), y, hyper, prior, true)?;
    let d_latent = g.d_inputs.expect("requested input gradient");
    let mut grads = encoder.backward_cached(&cache, &d_latent)?.params;
    grads.extend_from_slice(&g.d_hyper);
    Ok((g.value, grads))
}

/// Trains a deep-kernel GP from a fresh, seed-determined initialization.
pub fn dkl_train(x: &Matrix, y: &[f64], config: &DklConfig, seed: u64) -> Result<DklModel> {
    let n = x.rows();
    if n < 2 {
        return Err(invalid("deep kernel training needs at least two points"));
    }
    if y.len() != n {
        return Err(invalid(format!("{n} inputs but {} targets", y.len())));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(invalid("targets must be finite"));
    }
    if config.steps == 0 {
        return Err(invalid("deep kernel training needs at least one step"));
    }
    let (input_shift, input_scale) =
        if config.standardize_inputs { column_stats(x) } else { (vec![0.0; x.cols()], vec![1.0; x.cols()]) };
    let xs = apply_scaling(x, &input_shift, &input_scale);
    let (target_mean, target_std) = mean_std(y.iter().copied());
    let ys: Vec<f64> = y.iter().map(|v| (v - target_mean) / target_std).collect();

    let mut sizes = Vec::with_capacity(config.hidden_sizes.len() + 2);
    sizes.push(x.cols());
    sizes.extend_from_slice(&config.hidden_sizes);
    sizes.push(LATENT_DIM);
    let mut encoder = Mlp::new(&sizes, derive_seed(seed, "dkl-encoder", 0))?;
    let n_enc = encoder.param_count();

    let mut params = encoder.flat_params();
    params.extend_from_slice(&config.init_hyper.to_array());
    let mut adam = AdamState::new(params.len(), config.lr);
    let mut batch_rng = component_rng(seed, "dkl-batch", 0);
    let batch = config.batch_size.filter(|&b| b >= 2 && b < n);
    let mut trace = Vec::with_capacity(config.steps);

    for step in 0..config.steps {
        encoder.set_flat_params(&params[..n_enc])?;
        let hyper = KernelHyper::from_array([params[n_enc], params[n_enc + 1], params[n_enc + 2]]);
        let result = match batch {
            Some(b) => {
                let mut idx = sample(&mut batch_rng, n, b).into_vec();
                idx.sort_unstable();
                let yb: Vec<f64> = idx.iter().map(|&i| ys[i]).collect();
                dkl_objective_grad(&encoder, &hyper, &xs.select_rows(&idx), &yb, &config.prior)
            }
            None => dkl_objective_grad(&encoder, &hyper, &xs, &ys, &config.prior),
        };
        let (value, mut grads) = result.map_err(|e| match e {
            Error::NumericFailure(m) => numeric(format!("deep kernel training step {step}: {m}")),
            other => other,
        })?;
        if !value.is_finite() {
            return Err(numeric(format!("deep kernel training step {step}: objective is {value}")));
        }
        trace.push(value);
        if !config.learn_noise {
            grads[n_enc + 2] = 0.0;
        }
        grads.iter_mut().for_each(|g| *g = -*g);
        adam.step(&mut params, &grads)?;
    }

    encoder.set_flat_params(&params[..n_enc])?;
    let hyper = KernelHyper::from_array([params[n_enc], params[n_enc + 1], params[n_enc + 2]]);
    let latent = encoder.forward(&xs)?;
    let fit = gp::gp_fit(&latent, &ys, hyper).map_err(|e| numeric(format!("deep kernel final fit: {e}")))?;
    Ok(DklModel {
        encoder,
        hyper,
        fit,
        target_mean,
        target_std,
        input_shift,
        input_scale,
        meta: TrainingMeta { objective_trace: trace, seed, steps: config.steps },
    })
}

impl DklModel {
    pub fn input_dim(&self) -> usize {
        self.encoder.input_dim()
    }

    fn check_dims(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.input_dim() {
            return Err(invalid(format!("inputs have {} columns, encoder expects {}", x.cols(), self.input_dim())));
        }
        Ok(())
    }

    /// Encoder outputs as an `n × 2` matrix.
    pub fn encode(&self, x: &Matrix) -> Result<Matrix> {
        self.check_dims(x)?;
        self.encoder.forward(&apply_scaling(x, &self.input_shift, &self.input_scale))
    }

    pub fn embed(&self, x: &Matrix) -> Result<Vec<LatentPoint>> {
        Ok(points_from_matrix(&self.encode(x)?))
    }

    /// Deep kernel between two input sets.
    pub fn kernel(&self, a: &Matrix, b: &Matrix, include_noise: bool) -> Result<Matrix> {
        let za = self.encode(a)?;
        let zb = if std::ptr::eq(a, b) { za.clone() } else { self.encode(b)? };
        gp::rbf_kernel(&za, &zb, &self.hyper, include_noise)
    }

    /// Posterior prediction in original target units.
    pub fn predict(&self, queries: &Matrix) -> Result<PosteriorPrediction> {
        let z = self.encode(queries)?;
        let mut p = gp::gp_predict(&self.fit, &z)?;
        let s2 = self.target_std * self.target_std;
        p.mean.iter_mut().for_each(|m| *m = *m * self.target_std + self.target_mean);
        p.variance.iter_mut().for_each(|v| *v *= s2);
        Ok(p)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let meta = json!({
            "layer_sizes": self.encoder.layer_sizes(),
            "hyper": self.hyper,
            "target_mean": self.target_mean,
            "target_std": self.target_std,
            "seed": self.meta.seed,
            "steps": self.meta.steps,
            "n_train": self.fit.len(),
        });
        let mut c = Checkpoint::new("dkl", meta);
        c.push("encoder", self.encoder.flat_params());
        c.push("input_shift", self.input_shift.clone());
        c.push("input_scale", self.input_scale.clone());
        c.push("train_latent", self.fit.train_inputs.as_slice().to_vec());
        c.push("train_targets", self.fit.train_targets.clone());
        c.push("objective_trace", self.meta.objective_trace.clone());
        c
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        let field = |name: &str| {
            c.meta.get(name).cloned().ok_or_else(|| Error::Load {
                field: name.to_string(),
                message: "missing from checkpoint header".into(),
            })
        };
        let parse = |name: &str, e: serde_json::Error| Error::Load { field: name.into(), message: e.to_string() };
        if c.kind != "dkl" {
            return Err(Error::Load { field: "kind".into(), message: format!("expected dkl, got {}", c.kind) });
        }
        let sizes: Vec<usize> = serde_json::from_value(field("layer_sizes")?).map_err(|e| parse("layer_sizes", e))?;
        let hyper: KernelHyper = serde_json::from_value(field("hyper")?).map_err(|e| parse("hyper", e))?;
        let target_mean: f64 = serde_json::from_value(field("target_mean")?).map_err(|e| parse("target_mean", e))?;
        let target_std: f64 = serde_json::from_value(field("target_std")?).map_err(|e| parse("target_std", e))?;
        let seed: u64 = serde_json::from_value(field("seed")?).map_err(|e| parse("seed", e))?;
        let steps: usize = serde_json::from_value(field("steps")?).map_err(|e| parse("steps", e))?;
        let mut encoder = Mlp::new(&sizes, 0)?;
        encoder.set_flat_params(c.block("encoder")?)?;
        let targets = c.block("train_targets")?.to_vec();
        let latent = Matrix::from_vec(targets.len(), LATENT_DIM, c.block("train_latent")?.to_vec())?;
        let fit = gp::gp_fit(&latent, &targets, hyper)?;
        Ok(Self {
            encoder,
            hyper,
            fit,
            target_mean,
            target_std,
            input_shift: c.block("input_shift")?.to_vec(),
            input_scale: c.block("input_scale")?.to_vec(),
            meta: TrainingMeta { objective_trace: c.block("objective_trace")?.to_vec(), seed, steps },
        })
    }
}

/// Deep kernel `K_base(g(a)|γ, g(b)|γ)`.
pub fn deep_kernel(model: &DklModel, a: &Matrix, b: &Matrix, include_noise: bool) -> Result<Matrix> {
    model.kernel(a, b, include_noise)
}

pub fn dkl_predict(model: &DklModel, queries: &Matrix) -> Result<PosteriorPrediction> {
    model.predict(queries)
}

pub fn dkl_embed(model: &DklModel, inputs: &Matrix) -> Result<Vec<LatentPoint>> {
    model.embed(inputs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::rbf_kernel;
    use crate::ndcore::grad_check;
    use crate::ndcore::matrix::dot;
    use crate::ndcore::mlp::Layer;
    use crate::testutil::{dense_inverse, random_matrix, random_vec};

    fn identity_model(x: &Matrix, y: &[f64], hyper: KernelHyper) -> DklModel {
        let encoder = Mlp::from_layers(vec![Layer { weights: Matrix::identity(2), bias: vec![0.0; 2] }]).unwrap();
        DklModel {
            fit: gp::gp_fit(x, y, hyper).unwrap(),
            encoder,
            hyper,
            target_mean: 0.0,
            target_std: 1.0,
            input_shift: vec![0.0; 2],
            input_scale: vec![1.0; 2],
            meta: TrainingMeta { objective_trace: vec![], seed: 0, steps: 0 },
        }
    }

    fn small_config() -> DklConfig {
        DklConfig { hidden_sizes: vec![8], steps: 60, lr: 0.02, ..DklConfig::default() }
    }

    #[test]
    fn identity_encoder_reduces_to_base_kernel() {
        let x = random_matrix(5, 2, 1, 1.0);
        let h = KernelHyper::new(1.4, 0.6, 0.03);
        let m = identity_model(&x, &random_vec(5, 2, 1.0), h);
        let b = random_matrix(3, 2, 3, 1.0);
        let dk = deep_kernel(&m, &x, &b, false).unwrap();
        assert!(dk.max_abs_diff(&rbf_kernel(&x, &b, &h, false).unwrap()) < 1e-15);
        let dkk = deep_kernel(&m, &x, &x, true).unwrap();
        for i in 0..5 {
            assert!((dkk[(i, i)] - (1.4 + 0.03)).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_is_composition_of_embedding_and_rbf() {
        let x = random_matrix(12, 3, 4, 1.0);
        let y = random_vec(12, 5, 1.0);
        let m = dkl_train(&x, &y, &small_config(), 1).unwrap();
        let a = random_matrix(4, 3, 6, 1.0);
        let dk = deep_kernel(&m, &a, &x, false).unwrap();
        let direct = rbf_kernel(&m.encode(&a).unwrap(), &m.encode(&x).unwrap(), &m.hyper, false).unwrap();
        assert!(dk.max_abs_diff(&direct) < 1e-12);
        let dkk = deep_kernel(&m, &a, &a, true).unwrap();
        for i in 0..4 {
            assert!((dkk[(i, i)] - (m.hyper.amplitude() + m.hyper.noise())).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicate_rows_give_identical_kernel_rows() {
        let mut x = random_matrix(4, 3, 7, 1.0);
        let r0 = x.row(0).to_vec();
        x.row_mut(2).copy_from_slice(&r0);
        let m = dkl_train(&x, &[0.1, 0.5, 0.1, -0.3], &small_config(), 2).unwrap();
        let k = deep_kernel(&m, &x, &x, false).unwrap();
        assert_eq!(k.row(0), k.row(2));
        let p = m.predict(&x).unwrap();
        assert_eq!(p.mean[0], p.mean[2]);
        assert_eq!(p.variance[0], p.variance[2]);
    }

    #[test]
    fn joint_gradient_matches_finite_differences() {
        for seed in 0..10 {
            let x = random_matrix(8, 3, 100 + seed, 1.0);
            let y = random_vec(8, 200 + seed, 1.0);
            let encoder = Mlp::new(&[3, 4, 2], seed).unwrap();
            let n_enc = encoder.param_count();
            let prior = MapPrior::default();
            let mut p0 = encoder.flat_params();
            p0.extend_from_slice(&[0.1, -0.2, -2.5]);
            let f = |p: &[f64]| {
                let mut enc = encoder.clone();
                enc.set_flat_params(&p[..n_enc])?;
                let h = KernelHyper::from_array([p[n_enc], p[n_enc + 1], p[n_enc + 2]]);
                dkl_objective_grad(&enc, &h, &x, &y, &prior)
            };
            let err = grad_check(f, &p0).unwrap();
            assert!(err < 1e-4, "seed {seed}: {err}");
        }
    }

    #[test]
    fn learns_a_linear_target() {
        let x = random_matrix(40, 4, 11, 1.0);
        let y: Vec<f64> = (0..40).map(|i| 3.0 * x[(i, 1)] + 0.5).collect();
        let cfg = DklConfig { hidden_sizes: vec![16], steps: 500, lr: 0.01, ..DklConfig::default() };
        let m = dkl_train(&x, &y, &cfg, 3).unwrap();
        let p = m.predict(&x).unwrap();
        let rmse = (p.mean.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / 40.0).sqrt();
        assert!(rmse < 0.1 * m.target_std, "rmse {rmse} vs std {}", m.target_std);
    }

    #[test]
    fn training_is_deterministic() {
        let x = random_matrix(10, 3, 12, 1.0);
        let y = random_vec(10, 13, 1.0);
        let a = dkl_train(&x, &y, &small_config(), 5).unwrap();
        let b = dkl_train(&x, &y, &small_config(), 5).unwrap();
        assert_eq!(a.meta.objective_trace, b.meta.objective_trace);
        assert_eq!(a, b);
    }

    #[test]
    fn minibatch_training_runs_and_is_deterministic() {
        let x = random_matrix(30, 3, 14, 1.0);
        let y: Vec<f64> = (0..30).map(|i| x[(i, 0)].sin()).collect();
        let cfg = DklConfig { batch_size: Some(10), ..small_config() };
        let a = dkl_train(&x, &y, &cfg, 6).unwrap();
        assert_eq!(a, dkl_train(&x, &y, &cfg, 6).unwrap());
        assert_eq!(a.fit.len(), 30);
    }

    #[test]
    fn near_noiseless_model_interpolates_training_targets() {
        let x = random_matrix(12, 3, 15, 1.0);
        let y = random_vec(12, 16, 2.0);
        let cfg = DklConfig { learn_noise: false, init_hyper: KernelHyper::new(1.0, 1.0, 1e-10), ..small_config() };
        let m = dkl_train(&x, &y, &cfg, 7).unwrap();
        let p = m.predict(&x).unwrap();
        for (a, b) in p.mean.iter().zip(&y) {
            assert!((a - b).abs() < 1e-3, "{a} vs {b}");
        }
    }

    #[test]
    fn prediction_matches_composed_oracle() {
        let x = random_matrix(5, 3, 17, 1.0);
        let y = random_vec(5, 18, 1.0);
        let m = dkl_train(&x, &y, &small_config(), 8).unwrap();
        let q = random_matrix(3, 3, 19, 1.0);
        let p = m.predict(&q).unwrap();

        // encoder by hand, then textbook GP formulas with an explicit inverse
        let z = m.encoder.forward(&x).unwrap();
        let zq = m.encoder.forward(&q).unwrap();
        let (a, l2, s2) = (m.hyper.amplitude(), m.hyper.lengthscale().powi(2), m.hyper.noise());
        let k = |u: &[f64], v: &[f64]| a * (-0.5 * crate::ndcore::matrix::squared_distance(u, v) / l2).exp();
        let mut kxx = Matrix::zeros(5, 5);
        for i in 0..5 {
            for j in 0..5 {
                kxx[(i, j)] = k(z.row(i), z.row(j)) + if i == j { s2 + m.fit.jitter } else { 0.0 };
            }
        }
        let kinv = dense_inverse(&kxx);
        let ys: Vec<f64> = y.iter().map(|v| (v - m.target_mean) / m.target_std).collect();
        for r in 0..3 {
            let ks: Vec<f64> = (0..5).map(|i| k(zq.row(r), z.row(i))).collect();
            let w: Vec<f64> = (0..5).map(|i| dot(kinv.row(i), &ks)).collect();
            let mean = dot(&ks, &(0..5).map(|i| dot(kinv.row(i), &ys)).collect::<Vec<_>>());
            let var = a - dot(&ks, &w);
            assert!((p.mean[r] - (mean * m.target_std + m.target_mean)).abs() < 1e-8);
            assert!((p.variance[r] - var * m.target_std.powi(2)).abs() < 1e-8);
        }
    }

    #[test]
    fn embedding_contract() {
        let x = random_matrix(9, 3, 20, 1.0);
        let m = dkl_train(&x, &random_vec(9, 21, 1.0), &small_config(), 9).unwrap();
        let e = m.embed(&x).unwrap();
        assert_eq!(e.len(), 9);
        for (i, p) in e.iter().enumerate() {
            assert_eq!(p.d1, m.fit.train_inputs[(i, 0)]);
            assert_eq!(p.d2, m.fit.train_inputs[(i, 1)]);
        }
        let same = Matrix::from_rows(&[x.row(3).to_vec(), x.row(3).to_vec()]).unwrap();
        let s = m.embed(&same).unwrap();
        assert_eq!(s[0], s[1]);
        assert!(m.embed(&Matrix::zeros(1, 4)).is_err());
        assert!(m.predict(&Matrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn rejects_bad_training_input() {
        let x = random_matrix(1, 3, 0, 1.0);
        assert!(dkl_train(&x, &[1.0], &small_config(), 0).is_err());
        let x = random_matrix(3, 3, 0, 1.0);
        assert!(dkl_train(&x, &[1.0, f64::NAN, 0.0], &small_config(), 0).is_err());
        assert!(dkl_train(&x, &[1.0, 0.0], &small_config(), 0).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let x = random_matrix(10, 3, 22, 1.0);
        let cfg = DklConfig { standardize_inputs: true, ..small_config() };
        let m = dkl_train(&x, &random_vec(10, 23, 1.0), &cfg, 10).unwrap();
        let bytes = m.to_checkpoint().to_bytes().unwrap();
        let back = DklModel::from_checkpoint(&Checkpoint::from_bytes(&bytes).unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_checkpoint().to_bytes().unwrap(), bytes);
    }
}
