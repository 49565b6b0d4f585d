//! Exact Gaussian-process regression with an RBF kernel.
//!
//! The kernel is `K_ij = α·exp(−½‖x_i − x_j‖²/l²) + δ_ij·σ_noise`, where the
//! noise term is an additive variance on the diagonal of a training
//! covariance only. The prior mean is the zero function. Hyperparameters are
//! stored in log space and fitted as MAP estimates: the log marginal
//! likelihood plus log-normal priors on α and l (and optionally σ_noise).

use serde::{Deserialize, Serialize};

use crate::error::{invalid, numeric, Result};
use crate::linalg::Cholesky;
use crate::ndcore::matrix::{dot, squared_distance, Matrix};
use crate::ndcore::AdamState;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// First jitter level relative to α; escalates ×10 per failed factorization.
pub const JITTER_START: f64 = 1e-6;
pub const JITTER_MAX: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelHyper {
    pub log_amplitude: f64,
    pub log_lengthscale: f64,
    pub log_noise: f64,
}

impl Default for KernelHyper {
    fn default() -> Self {
        Self::new(1.0, 1.0, 0.01)
    }
}

impl KernelHyper {
    pub fn new(amplitude: f64, lengthscale: f64, noise: f64) -> Self {
        Self { log_amplitude: amplitude.ln(), log_lengthscale: lengthscale.ln(), log_noise: noise.ln() }
    }

    pub fn amplitude(&self) -> f64 {
        self.log_amplitude.exp()
    }

    pub fn lengthscale(&self) -> f64 {
        self.log_lengthscale.exp()
    }

    /// Noise variance; `exp(-inf) = 0` gives a noiseless kernel.
    pub fn noise(&self) -> f64 {
        self.log_noise.exp()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.log_amplitude, self.log_lengthscale, self.log_noise]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self { log_amplitude: a[0], log_lengthscale: a[1], log_noise: a[2] }
    }

    fn is_valid(&self) -> bool {
        self.log_amplitude.is_finite()
            && self.log_lengthscale.is_finite()
            && !self.log_noise.is_nan()
            && self.log_noise != f64::INFINITY
    }
}

/// Parameters of a log-normal prior `logNormal(mean, stdev)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub mean: f64,
    pub stdev: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self { mean: 0.0, stdev: 1.0 }
    }
}

impl PriorSpec {
    /// Log density of the log-normal at `x = exp(log_x)` and its derivative
    /// with respect to `log_x`.
    pub fn log_density_at_log(&self, log_x: f64) -> (f64, f64) {
        let z = (log_x - self.mean) / self.stdev;
        let value = -log_x - self.stdev.ln() - 0.5 * LN_2PI - 0.5 * z * z;
        (value, -1.0 - z / self.stdev)
    }
}

/// Priors used by the MAP objective. `noise: None` leaves σ_noise unregularized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapPrior {
    pub kernel: PriorSpec,
    pub noise: Option<PriorSpec>,
}

impl Default for MapPrior {
    fn default() -> Self {
        Self { kernel: PriorSpec::default(), noise: Some(PriorSpec::default()) }
    }
}

impl From<PriorSpec> for MapPrior {
    fn from(p: PriorSpec) -> Self {
        Self { kernel: p, noise: Some(p) }
    }
}

impl MapPrior {
    /// Log prior density and its gradient with respect to the log hyperparameters.
    pub fn log_density(&self, hyper: &KernelHyper) -> (f64, [f64; 3]) {
        let (va, ga) = self.kernel.log_density_at_log(hyper.log_amplitude);
        let (vl, gl) = self.kernel.log_density_at_log(hyper.log_lengthscale);
        let (vn, gn) = match &self.noise {
            Some(p) => p.log_density_at_log(hyper.log_noise),
            None => (0.0, 0.0),
        };
        (va + vl + vn, [ga, gl, gn])
    }
}

/// Sum of the log-normal log densities of α and l.
pub fn log_prior(hyper: &KernelHyper, prior: &PriorSpec) -> f64 {
    prior.log_density_at_log(hyper.log_amplitude).0 + prior.log_density_at_log(hyper.log_lengthscale).0
}

/// Gradient of [`log_prior`] with respect to `(log α, log l, log σ_noise)`.
pub fn log_prior_grad(hyper: &KernelHyper, prior: &PriorSpec) -> [f64; 3] {
    [prior.log_density_at_log(hyper.log_amplitude).1, prior.log_density_at_log(hyper.log_lengthscale).1, 0.0]
}

fn rbf_cross(a: &Matrix, b: &Matrix, hyper: &KernelHyper) -> Matrix {
    let alpha = hyper.amplitude();
    let inv_l2 = (-2.0 * hyper.log_lengthscale).exp();
    let mut k = Matrix::zeros(a.rows(), b.rows());
    for i in 0..a.rows() {
        let ai = a.row(i);
        for (j, kij) in k.row_mut(i).iter_mut().enumerate() {
            *kij = alpha * (-0.5 * squared_distance(ai, b.row(j)) * inv_l2).exp();
        }
    }
    k
}

fn rbf_self(a: &Matrix, hyper: &KernelHyper) -> Matrix {
    let n = a.rows();
    let alpha = hyper.amplitude();
    let inv_l2 = (-2.0 * hyper.log_lengthscale).exp();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = alpha;
        for j in 0..i {
            let v = alpha * (-0.5 * squared_distance(a.row(i), a.row(j)) * inv_l2).exp();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// RBF kernel between the rows of `a` and `b`. The noise variance is added to
/// the diagonal only when `include_noise` is set and `a` and `b` are the same
/// set of points.
pub fn rbf_kernel(a: &Matrix, b: &Matrix, hyper: &KernelHyper, include_noise: bool) -> Result<Matrix> {
    if a.cols() != b.cols() {
        return Err(invalid(format!("kernel inputs have {} and {} columns", a.cols(), b.cols())));
    }
    let same = std::ptr::eq(a, b) || a == b;
    if same {
        let mut k = rbf_self(a, hyper);
        if include_noise {
            let noise = hyper.noise();
            for i in 0..a.rows() {
                k[(i, i)] += noise;
            }
        }
        Ok(k)
    } else {
        Ok(rbf_cross(a, b, hyper))
    }
}

/// Cholesky of `K + jitter·I`, escalating the jitter from `1e-6·α` by ×10
/// up to `1e-2·α`. Returns the factor and the jitter that succeeded.
pub(crate) fn factor_with_jitter(k: &Matrix, alpha: f64) -> Result<(Cholesky, f64)> {
    let mut rel = JITTER_START;
    loop {
        let jitter = rel * alpha;
        let mut kj = k.clone();
        for i in 0..k.rows() {
            kj[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(&kj) {
            return Ok((c, jitter));
        }
        rel *= 10.0;
        if rel > JITTER_MAX * (1.0 + 1e-9) {
            return Err(numeric(format!(
                "kernel matrix ({n}x{n}, α={alpha:.3e}) is not positive definite even with jitter {:.1e}·α",
                JITTER_MAX,
                n = k.rows()
            )));
        }
    }
}

/// A GP conditioned on training data with cached factorization.
#[derive(Clone, Debug, PartialEq)]
pub struct GpFit {
    pub train_inputs: Matrix,
    pub train_targets: Vec<f64>,
    pub hyper: KernelHyper,
    pub cholesky_factor: Matrix,
    /// `K⁻¹ y`
    pub alpha_vector: Vec<f64>,
    pub jitter: f64,
}

pub fn gp_fit(x: &Matrix, y: &[f64], hyper: KernelHyper) -> Result<GpFit> {
    if x.rows() == 0 {
        return Err(invalid("GP needs at least one training point"));
    }
    if x.rows() != y.len() {
        return Err(invalid(format!("{} inputs but {} targets", x.rows(), y.len())));
    }
    if !hyper.is_valid() {
        return Err(numeric(format!("non-finite hyperparameters {hyper:?}")));
    }
    let k = rbf_kernel(x, x, &hyper, true)?;
    let (chol, jitter) = factor_with_jitter(&k, hyper.amplitude())?;
    let alpha_vector = chol.solve(y);
    Ok(GpFit {
        train_inputs: x.clone(),
        train_targets: y.to_vec(),
        hyper,
        cholesky_factor: chol.into_factor(),
        alpha_vector,
        jitter,
    })
}

impl GpFit {
    fn chol(&self) -> Cholesky {
        Cholesky::from_factor(self.cholesky_factor.clone())
    }

    pub fn len(&self) -> usize {
        self.train_targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train_targets.is_empty()
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.len() as f64;
        let log_det: f64 = (0..self.len()).map(|i| self.cholesky_factor[(i, i)].ln()).sum();
        -0.5 * dot(&self.train_targets, &self.alpha_vector) - log_det - 0.5 * n * LN_2PI
    }
}

/// `−½ yᵀK⁻¹y − ½ log|K| − (n/2) log 2π` with `K = K(X|γ) + jitter·I`.
pub fn log_marginal_likelihood(x: &Matrix, y: &[f64], hyper: KernelHyper) -> Result<f64> {
    Ok(gp_fit(x, y, hyper)?.log_marginal_likelihood())
}

/// Posterior predictive mean and variance (and optionally covariance).
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorPrediction {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub covariance: Option<Matrix>,
}

impl PosteriorPrediction {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn std(&self) -> Vec<f64> {
        self.variance.iter().map(|v| v.sqrt()).collect()
    }
}

pub fn gp_predict(fit: &GpFit, queries: &Matrix) -> Result<PosteriorPrediction> {
    predict_impl(fit, queries, false)
}

/// Like [`gp_predict`] but also returns the full predictive covariance.
pub fn gp_predict_full(fit: &GpFit, queries: &Matrix) -> Result<PosteriorPrediction> {
    predict_impl(fit, queries, true)
}

fn predict_impl(fit: &GpFit, queries: &Matrix, full: bool) -> Result<PosteriorPrediction> {
    if queries.cols() != fit.train_inputs.cols() {
        return Err(invalid(format!(
            "queries have {} columns, model was trained on {}",
            queries.cols(),
            fit.train_inputs.cols()
        )));
    }
    let chol = fit.chol();
    let alpha = fit.hyper.amplitude();
    let k_star = rbf_cross(queries, &fit.train_inputs, &fit.hyper);
    let m = queries.rows();
    let mut mean = Vec::with_capacity(m);
    let mut variance = Vec::with_capacity(m);
    let mut solved = if full { Some(Matrix::zeros(m, fit.len())) } else { None };
    for i in 0..m {
        let k = k_star.row(i);
        mean.push(dot(k, &fit.alpha_vector));
        let v = chol.solve_lower(k);
        variance.push((alpha - dot(&v, &v)).max(0.0));
        if let Some(s) = solved.as_mut() {
            s.row_mut(i).copy_from_slice(&v);
        }
    }
    let covariance = match solved {
        Some(v) => {
            let mut cov = rbf_self(queries, &fit.hyper);
            let vvt = v.matmul_t(&v)?;
            for (c, w) in cov.as_mut_slice().iter_mut().zip(vvt.as_slice()) {
                *c -= w;
            }
            for i in 0..m {
                cov[(i, i)] = variance[i];
            }
            Some(cov)
        }
        None => None,
    };
    Ok(PosteriorPrediction { mean, variance, covariance })
}

/// Log marginal likelihood with its gradient with respect to the log
/// hyperparameters and, optionally, the training inputs.
#[derive(Clone, Debug)]
pub struct MllGradient {
    pub value: f64,
    pub d_hyper: [f64; 3],
    pub d_inputs: Option<Matrix>,
}

pub fn log_marginal_likelihood_grad(
    x: &Matrix,
    y: &[f64],
    hyper: &KernelHyper,
    with_input_grad: bool,
) -> Result<MllGradient> {
    let n = x.rows();
    if n == 0 || n != y.len() {
        return Err(invalid(format!("{n} inputs but {} targets", y.len())));
    }
    if !hyper.is_valid() {
        return Err(numeric(format!("non-finite hyperparameters {hyper:?}")));
    }
    let r = rbf_self(x, hyper);
    let noise = hyper.noise();
    let mut k = r.clone();
    for i in 0..n {
        k[(i, i)] += noise;
    }
    let (chol, jitter) = factor_with_jitter(&k, hyper.amplitude())?;
    let a = chol.solve(y);
    let value = -0.5 * dot(y, &a) - 0.5 * chol.log_det() - 0.5 * n as f64 * LN_2PI;

    // dL/dθ = ½ tr(W ∂K/∂θ) with W = a aᵀ − K⁻¹.
    let mut w = chol.inverse();
    for i in 0..n {
        for (j, wij) in w.row_mut(i).iter_mut().enumerate() {
            *wij = a[i] * a[j] - *wij;
        }
    }
    let inv_l2 = (-2.0 * hyper.log_lengthscale).exp();
    let trace_w: f64 = (0..n).map(|i| w[(i, i)]).sum();
    let mut s_amp = 0.0;
    let mut s_len = 0.0;
    let mut d_inputs = with_input_grad.then(|| Matrix::zeros(n, x.cols()));
    for i in 0..n {
        let (wi, ri, xi) = (w.row(i), r.row(i), x.row(i));
        for j in 0..n {
            let wr = wi[j] * ri[j];
            s_amp += wr;
            if i != j {
                let d2 = squared_distance(xi, x.row(j));
                s_len += wr * d2;
            }
        }
        if let Some(g) = d_inputs.as_mut() {
            let gi = g.row_mut(i);
            for j in 0..n {
                if i == j {
                    continue;
                }
                let c = wi[j] * ri[j] * inv_l2;
                for (gd, (xj, xi_d)) in gi.iter_mut().zip(x.row(j).iter().zip(xi)) {
                    *gd += c * (xj - xi_d);
                }
            }
        }
    }
    // jitter scales with α, so it contributes to ∂K/∂log α.
    let d_amp = 0.5 * s_amp + 0.5 * jitter * trace_w;
    let d_len = 0.5 * s_len * inv_l2;
    let d_noise = 0.5 * noise * trace_w;
    Ok(MllGradient { value, d_hyper: [d_amp, d_len, d_noise], d_inputs })
}

/// MAP objective `log p(y|X,γ) + log p(γ)` with gradients.
pub fn map_objective_grad(
    x: &Matrix,
    y: &[f64],
    hyper: &KernelHyper,
    prior: &MapPrior,
    with_input_grad: bool,
) -> Result<MllGradient> {
    let mut g = log_marginal_likelihood_grad(x, y, hyper, with_input_grad)?;
    let (lp, dlp) = prior.log_density(hyper);
    g.value += lp;
    for (d, p) in g.d_hyper.iter_mut().zip(dlp) {
        *d += p;
    }
    Ok(g)
}

/// Result of [`gp_fit_hyperparams`].
#[derive(Clone, Debug)]
pub struct HyperFit {
    pub hyper: KernelHyper,
    /// MAP objective before each update.
    pub objective_trace: Vec<f64>,
}

/// Gradient ascent with Adam on the MAP objective in log-hyperparameter space.
pub fn gp_fit_hyperparams(
    x: &Matrix,
    y: &[f64],
    init: KernelHyper,
    prior: &MapPrior,
    steps: usize,
    lr: f64,
) -> Result<HyperFit> {
    if steps == 0 {
        return Err(invalid("hyperparameter fitting needs at least one step"));
    }
    let mut params = init.to_array();
    let mut adam = AdamState::new(3, lr);
    let mut trace = Vec::with_capacity(steps);
    for step in 0..steps {
        let hyper = KernelHyper::from_array(params);
        let g = map_objective_grad(x, y, &hyper, prior, false)
            .map_err(|e| numeric(format!("hyperparameter step {step}: {e}")))?;
        trace.push(g.value);
        let neg: Vec<f64> = g.d_hyper.iter().map(|d| -d).collect();
        adam.step(&mut params, &neg)?;
    }
    Ok(HyperFit { hyper: KernelHyper::from_array(params), objective_trace: trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndcore::grad_check;
    use crate::seed::rng_from_seed;
    use rand::Rng;
    use std::f64::consts::PI;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = rng_from_seed(seed);
        Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.5..1.5)).collect()).unwrap()
    }

    fn random_vec(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()
    }

    #[test]
    fn ln_2pi_constant() {
        assert!((LN_2PI - (2.0 * PI).ln()).abs() < 1e-15);
    }

    #[test]
    fn kernel_diagonal_and_unit_distance() {
        let h = KernelHyper::new(1.0, 1.0, 0.1);
        let a = Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let k = rbf_kernel(&a, &a, &h, true).unwrap();
        assert!((k[(0, 0)] - 1.1).abs() < 1e-15);
        assert!((k[(0, 1)] - (-0.5f64).exp()).abs() < 1e-12);
        assert!((k[(0, 1)] - 0.606_531).abs() < 1e-6);
        // cross-set kernel carries no noise
        let b = Matrix::from_rows(&[vec![0.0, 0.0]]).unwrap();
        assert_eq!(rbf_kernel(&a, &b, &h, true).unwrap()[(0, 0)], 1.0);
    }

    #[test]
    fn huge_lengthscale_flattens_kernel() {
        let h = KernelHyper::new(1.0, 1e6, 0.0);
        let a = random_matrix(4, 2, 1);
        let k = rbf_kernel(&a, &a, &h, false).unwrap();
        assert!(k.as_slice().iter().all(|v| (v - 1.0).abs() < 1e-9));
    }

    #[test]
    fn kernel_dimension_mismatch() {
        let h = KernelHyper::default();
        assert!(rbf_kernel(&Matrix::zeros(2, 2), &Matrix::zeros(2, 3), &h, false).is_err());
    }

    #[test]
    fn one_point_marginal_likelihood() {
        let x = Matrix::zeros(1, 1);
        let h = KernelHyper { log_noise: f64::NEG_INFINITY, ..KernelHyper::new(1.0, 1.0, 1.0) };
        let l0 = log_marginal_likelihood(&x, &[0.0], h).unwrap();
        let l1 = log_marginal_likelihood(&x, &[1.0], h).unwrap();
        assert!((l0 + 0.918_939).abs() < 1e-6);
        assert!((l1 + 1.418_939).abs() < 1e-6);
    }

    #[test]
    fn log_prior_values() {
        let p = PriorSpec::default();
        let one = KernelHyper::new(1.0, 1.0, 0.01);
        assert!((log_prior(&one, &p) + 1.837_877).abs() < 1e-6);
        let e = KernelHyper::new(std::f64::consts::E, 1.0, 0.01);
        assert!((log_prior(&e, &p) + 3.337_877).abs() < 1e-6);
    }

    #[test]
    fn log_prior_gradient() {
        let p = PriorSpec { mean: 0.3, stdev: 0.7 };
        let f = |v: &[f64]| {
            let h = KernelHyper::from_array([v[0], v[1], v[2]]);
            Ok((log_prior(&h, &p), log_prior_grad(&h, &p).to_vec()))
        };
        assert!(grad_check(f, &[0.4, -1.1, -3.0]).unwrap() < 1e-6);
    }

    #[test]
    fn single_point_factor() {
        let h = KernelHyper::new(2.0, 1.0, 0.5);
        let fit = gp_fit(&Matrix::zeros(1, 3), &[1.0], h).unwrap();
        assert!((fit.cholesky_factor[(0, 0)] - (2.5 + fit.jitter).sqrt()).abs() < 1e-15);
        assert_eq!(fit.jitter, 2e-6);
    }

    #[test]
    fn factor_reconstructs_kernel_and_alpha_solves() {
        let x = random_matrix(5, 2, 3);
        let y = random_vec(5, 4);
        let h = KernelHyper::new(1.3, 0.8, 0.05);
        let fit = gp_fit(&x, &y, h).unwrap();
        let mut k = rbf_kernel(&x, &x, &h, true).unwrap();
        for i in 0..5 {
            k[(i, i)] += fit.jitter;
        }
        let llt = fit.cholesky_factor.matmul_t(&fit.cholesky_factor).unwrap();
        assert!(llt.max_abs_diff(&k) < 1e-10);
        for i in 0..5 {
            assert!((dot(k.row(i), &fit.alpha_vector) - y[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn noiseless_gp_interpolates() {
        // jitter-only residual at a training point is jitter·(K⁻¹y)_i
        let x = Matrix::column(&[-1.0, -0.2, 0.5, 1.3]);
        let y = [0.4, -0.5, 0.2, 0.35];
        let h = KernelHyper { log_noise: f64::NEG_INFINITY, ..KernelHyper::new(1.0, 0.3, 1.0) };
        let fit = gp_fit(&x, &y, h).unwrap();
        let p = gp_predict(&fit, &x).unwrap();
        for i in 0..4 {
            assert!((p.mean[i] - y[i]).abs() < 1e-6);
            assert!(p.variance[i] < 1e-6);
        }
    }

    #[test]
    fn far_queries_revert_to_prior() {
        let x = random_matrix(5, 2, 7);
        let h = KernelHyper::new(1.7, 0.3, 0.01);
        let fit = gp_fit(&x, &random_vec(5, 8), h).unwrap();
        let q = Matrix::from_rows(&[vec![10.0, 10.0]]).unwrap();
        let p = gp_predict(&fit, &q).unwrap();
        assert!(p.mean[0].abs() <= 1.7 * (-50.0f64).exp());
        assert!((p.variance[0] - 1.7).abs() < 1e-9);
    }

    #[test]
    fn predict_dimension_mismatch() {
        let fit = gp_fit(&Matrix::zeros(2, 2), &[0.0, 1.0], KernelHyper::default()).unwrap();
        assert!(gp_predict(&fit, &Matrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn full_covariance_diagonal_matches_variance() {
        let x = random_matrix(6, 2, 9);
        let fit = gp_fit(&x, &random_vec(6, 10), KernelHyper::new(1.0, 0.7, 0.02)).unwrap();
        let q = random_matrix(4, 2, 11);
        let p = gp_predict_full(&fit, &q).unwrap();
        let cov = p.covariance.unwrap();
        for i in 0..4 {
            assert_eq!(cov[(i, i)], p.variance[i]);
            for j in 0..4 {
                assert!((cov[(i, j)] - cov[(j, i)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mll_gradient_matches_finite_differences() {
        for seed in 0..10 {
            let x = random_matrix(6, 2, 20 + seed);
            let y = random_vec(6, 40 + seed);
            let prior = MapPrior::default();
            let f = |v: &[f64]| {
                let h = KernelHyper::from_array([v[0], v[1], v[2]]);
                let g = map_objective_grad(&x, &y, &h, &prior, false)?;
                Ok((g.value, g.d_hyper.to_vec()))
            };
            let err = grad_check(f, &[0.2, -0.3, -2.0]).unwrap();
            assert!(err < 1e-4, "seed {seed}: {err}");
        }
    }

    #[test]
    fn mll_input_gradient_matches_finite_differences() {
        let x = random_matrix(5, 2, 3);
        let y = random_vec(5, 4);
        let h = KernelHyper::new(1.2, 0.9, 0.05);
        let f = |v: &[f64]| {
            let xm = Matrix::from_vec(5, 2, v.to_vec())?;
            let g = log_marginal_likelihood_grad(&xm, &y, &h, true)?;
            Ok((g.value, g.d_inputs.unwrap().into_vec()))
        };
        assert!(grad_check(f, x.as_slice()).unwrap() < 1e-6);
    }

    #[test]
    fn fitting_requires_steps_and_moves() {
        let x = random_matrix(6, 1, 1);
        let y = random_vec(6, 2);
        let prior = MapPrior::default();
        assert!(gp_fit_hyperparams(&x, &y, KernelHyper::default(), &prior, 0, 0.1).is_err());
        let f = gp_fit_hyperparams(&x, &y, KernelHyper::default(), &prior, 1, 0.1).unwrap();
        assert_ne!(f.hyper, KernelHyper::default());
        assert_eq!(f.objective_trace.len(), 1);
    }
}
