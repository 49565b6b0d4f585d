//! Variational autoencoder with a 2-D Gaussian latent and a Bernoulli decoder,
//! trained on the ELBO with the reparameterization trick.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::checkpoint::Checkpoint;
use crate::error::{invalid, numeric, Error, Result};
use crate::latent::{points_from_matrix, LatentPoint};
use crate::ndcore::{AdamState, Matrix, Mlp};
use crate::seed::{component_rng, derive_seed};

pub const LATENT_DIM: usize = 2;
pub const GRID_LIMIT: f64 = 1.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VaeConfig {
    pub hidden_sizes: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta: f64,
}

impl Default for VaeConfig {
    fn default() -> Self {
        Self { hidden_sizes: vec![128, 64], epochs: 50, batch_size: 64, lr: 1e-3, beta: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VaeModel {
    /// input → hidden… → (μ₁, μ₂, log σ²₁, log σ²₂)
    pub encoder: Mlp,
    /// 2 → …hidden → input logits
    pub decoder: Mlp,
    pub beta: f64,
    pub seed: u64,
    /// Mean total loss per epoch.
    pub loss_trace: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VaeLoss {
    pub total: f64,
    pub reconstruction: f64,
    pub kl: f64,
}

/// KL divergence of `N(μ, diag exp(logvar))` from the unit normal.
pub fn kl_divergence(mu: &[f64], logvar: &[f64]) -> f64 {
    0.5 * mu.iter().zip(logvar).map(|(m, lv)| m * m + lv.exp() - 1.0 - lv).sum::<f64>()
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Bernoulli cross-entropy of targets `x` under `sigmoid(logit)`.
pub fn bce_with_logits(x: f64, logit: f64) -> f64 {
    softplus(logit) - x * logit
}

fn check_pixels(x: &Matrix) -> Result<()> {
    if x.as_slice().iter().all(|v| (0.0..=1.0).contains(v)) {
        Ok(())
    } else {
        Err(invalid("VAE inputs must lie in [0, 1]"))
    }
}

impl VaeModel {
    pub fn new(input_dim: usize, hidden_sizes: &[usize], beta: f64, seed: u64) -> Result<Self> {
        let mut enc = vec![input_dim];
        enc.extend_from_slice(hidden_sizes);
        enc.push(2 * LATENT_DIM);
        let mut dec = vec![LATENT_DIM];
        dec.extend(hidden_sizes.iter().rev());
        dec.push(input_dim);
        Ok(Self {
            encoder: Mlp::new(&enc, derive_seed(seed, "vae-encoder", 0))?,
            decoder: Mlp::new(&dec, derive_seed(seed, "vae-decoder", 0))?,
            beta,
            seed,
            loss_trace: Vec::new(),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.encoder.input_dim()
    }

    pub fn param_count(&self) -> usize {
        self.encoder.param_count() + self.decoder.param_count()
    }

    /// Encoder then decoder parameters.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut p = self.encoder.flat_params();
        p.extend(self.decoder.flat_params());
        p
    }

    pub fn set_flat_params(&mut self, p: &[f64]) -> Result<()> {
        let n = self.encoder.param_count();
        if p.len() != self.param_count() {
            return Err(invalid(format!("expected {} parameters, got {}", self.param_count(), p.len())));
        }
        self.encoder.set_flat_params(&p[..n])?;
        self.decoder.set_flat_params(&p[n..])
    }

    fn check_dims(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.input_dim() {
            return Err(invalid(format!("inputs have {} columns, VAE expects {}", x.cols(), self.input_dim())));
        }
        Ok(())
    }

    /// Batch-mean loss and its gradient for a fixed standard-normal draw `eps`
    /// (`n × 2`), with the flat layout of [`VaeModel::flat_params`].
    pub fn loss_and_grad(&self, x: &Matrix, eps: &Matrix) -> Result<(VaeLoss, Vec<f64>)> {
        self.check_dims(x)?;
        let n = x.rows();
        if eps.shape() != (n, LATENT_DIM) {
            return Err(invalid(format!("noise shape {:?}, expected ({n}, {LATENT_DIM})", eps.shape())));
        }
        let inv_n = 1.0 / n as f64;
        let enc = self.encoder.forward_cached(x)?;
        let stats = enc.output();
        let mut z = Matrix::zeros(n, LATENT_DIM);
        let mut kl = 0.0;
        for i in 0..n {
            let r = stats.row(i);
            kl += kl_divergence(&r[..LATENT_DIM], &r[LATENT_DIM..]);
            for k in 0..LATENT_DIM {
                z[(i, k)] = r[k] + (0.5 * r[LATENT_DIM + k]).exp() * eps[(i, k)];
            }
        }
        let dec = self.decoder.forward_cached(&z)?;
        let logits = dec.output();
        let mut recon = 0.0;
        let mut d_logits = Matrix::zeros(n, x.cols());
        for ((g, &l), &t) in d_logits.as_mut_slice().iter_mut().zip(logits.as_slice()).zip(x.as_slice()) {
            recon += bce_with_logits(t, l);
            *g = (sigmoid(l) - t) * inv_n;
        }
        let dg = self.decoder.backward_cached(&dec, &d_logits)?;
        let mut d_stats = Matrix::zeros(n, 2 * LATENT_DIM);
        for i in 0..n {
            let r = stats.row(i);
            for k in 0..LATENT_DIM {
                let dz = dg.inputs[(i, k)];
                let lv = r[LATENT_DIM + k];
                let sd = (0.5 * lv).exp();
                d_stats[(i, k)] = dz + self.beta * r[k] * inv_n;
                d_stats[(i, LATENT_DIM + k)] = dz * eps[(i, k)] * 0.5 * sd + self.beta * 0.5 * (lv.exp() - 1.0) * inv_n;
            }
        }
        let mut grads = self.encoder.backward_cached(&enc, &d_stats)?.params;
        grads.extend(dg.params);
        let (recon, kl) = (recon * inv_n, kl * inv_n);
        Ok((VaeLoss { total: recon + self.beta * kl, reconstruction: recon, kl }, grads))
    }

    /// Latent means, no sampling.
    pub fn embed(&self, x: &Matrix) -> Result<Vec<LatentPoint>> {
        self.check_dims(x)?;
        let stats = self.encoder.forward(x)?;
        let mut mu = Matrix::zeros(x.rows(), LATENT_DIM);
        for i in 0..x.rows() {
            mu.row_mut(i).copy_from_slice(&stats.row(i)[..LATENT_DIM]);
        }
        Ok(points_from_matrix(&mu))
    }

    /// Decoder means for each latent row, strictly inside (0, 1).
    pub fn decode(&self, z: &Matrix) -> Result<Matrix> {
        Ok(self.decoder.forward(z)?.map(|l| sigmoid(l).clamp(1e-15, 1.0 - 1e-15)))
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let meta = json!({
            "encoder_sizes": self.encoder.layer_sizes(),
            "decoder_sizes": self.decoder.layer_sizes(),
            "beta": self.beta,
            "seed": self.seed,
        });
        let mut c = Checkpoint::new("vae", meta);
        c.push("encoder", self.encoder.flat_params());
        c.push("decoder", self.decoder.flat_params());
        c.push("loss_trace", self.loss_trace.clone());
        c
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        if c.kind != "vae" {
            return Err(Error::Load { field: "kind".into(), message: format!("expected vae, got {}", c.kind) });
        }
        fn get<T: serde::de::DeserializeOwned>(c: &Checkpoint, name: &str) -> Result<T> {
            let v = c
                .meta
                .get(name)
                .cloned()
                .ok_or_else(|| Error::Load { field: name.into(), message: "missing from checkpoint header".into() })?;
            serde_json::from_value(v).map_err(|e| Error::Load { field: name.into(), message: e.to_string() })
        }
        let mut encoder = Mlp::new(&get::<Vec<usize>>(c, "encoder_sizes")?, 0)?;
        encoder.set_flat_params(c.block("encoder")?)?;
        let mut decoder = Mlp::new(&get::<Vec<usize>>(c, "decoder_sizes")?, 0)?;
        decoder.set_flat_params(c.block("decoder")?)?;
        Ok(Self {
            encoder,
            decoder,
            beta: get(c, "beta")?,
            seed: get(c, "seed")?,
            loss_trace: c.block("loss_trace")?.to_vec(),
        })
    }
}

fn standard_normal(rows: usize, rng: &mut impl Rng) -> Matrix {
    let data = (0..rows * LATENT_DIM).map(|_| rng.sample(StandardNormal)).collect();
    Matrix::from_vec(rows, LATENT_DIM, data).expect("sized above")
}

/// Loss for one reparameterized draw from `rng`.
pub fn vae_loss(model: &VaeModel, batch: &Matrix, rng: &mut impl Rng) -> Result<VaeLoss> {
    let eps = standard_normal(batch.rows(), rng);
    Ok(model.loss_and_grad(batch, &eps)?.0)
}

/// Adam over shuffled mini-batches; every random draw comes from `seed`.
pub fn vae_train(inputs: &Matrix, cfg: &VaeConfig, seed: u64) -> Result<VaeModel> {
    if inputs.rows() == 0 {
        return Err(invalid("VAE training needs at least one row"));
    }
    if cfg.batch_size == 0 {
        return Err(invalid("batch size must be positive"));
    }
    check_pixels(inputs)?;
    let mut model = VaeModel::new(inputs.cols(), &cfg.hidden_sizes, cfg.beta, seed)?;
    let mut params = model.flat_params();
    let mut adam = AdamState::new(params.len(), cfg.lr);
    let mut noise = component_rng(seed, "vae-noise", 0);
    let mut order: Vec<usize> = (0..inputs.rows()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut component_rng(seed, "vae-shuffle", epoch as u64));
        let mut sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = inputs.select_rows(chunk);
            let eps = standard_normal(chunk.len(), &mut noise);
            let (loss, grads) = model.loss_and_grad(&batch, &eps)?;
            if !loss.total.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(numeric(format!("VAE training epoch {epoch}: loss is {}", loss.total)));
            }
            sum += loss.total * chunk.len() as f64;
            adam.step(&mut params, &grads)?;
            model.set_flat_params(&params)?;
        }
        model.loss_trace.push(sum / inputs.rows() as f64);
    }
    Ok(model)
}

pub fn vae_embed(model: &VaeModel, inputs: &Matrix) -> Result<Vec<LatentPoint>> {
    model.embed(inputs)
}

/// Latent coordinates of a `grid_n × grid_n` lattice over `[-1.5, 1.5]²`,
/// row-major with `z₂` descending and `z₁` ascending.
pub fn latent_grid(grid_n: usize) -> Result<Matrix> {
    if grid_n < 2 {
        return Err(invalid("latent grid needs at least 2 points per side"));
    }
    let at = |k: usize| -GRID_LIMIT + 2.0 * GRID_LIMIT * k as f64 / (grid_n - 1) as f64;
    let mut z = Matrix::zeros(grid_n * grid_n, LATENT_DIM);
    for r in 0..grid_n {
        for c in 0..grid_n {
            z[(r * grid_n + c, 0)] = at(c);
            z[(r * grid_n + c, 1)] = at(grid_n - 1 - r);
        }
    }
    Ok(z)
}

/// Decoded images for [`latent_grid`], one row per cell.
pub fn vae_decode_grid(model: &VaeModel, grid_n: usize) -> Result<Matrix> {
    model.decode(&latent_grid(grid_n)?)
}
