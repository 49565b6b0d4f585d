//! Pool-based Bayesian optimization: retrain a surrogate from scratch on the
//! measured set, score the unmeasured pool with UCB, measure the argmax.

use std::io::Write;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dkl::{dkl_train, DklConfig, DklModel};
use crate::error::{invalid, Error, Result};
use crate::gp::PosteriorPrediction;
use crate::ndcore::Matrix;
use crate::seed::{component_rng, derive_seed};

/// Upper confidence bound `μ + λ·varianceᵖ`; `p = ½` is the standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcquisitionSpec {
    pub lambda: f64,
    pub variance_exponent: f64,
}

impl Default for AcquisitionSpec {
    fn default() -> Self {
        Self { lambda: 10.0, variance_exponent: 0.5 }
    }
}

pub fn acquisition_ucb(pred: &PosteriorPrediction, spec: &AcquisitionSpec) -> Result<Vec<f64>> {
    if spec.lambda.is_nan() || spec.lambda < 0.0 {
        return Err(invalid(format!("lambda must be non-negative, got {}", spec.lambda)));
    }
    pred.mean
        .iter()
        .zip(&pred.variance)
        .map(|(&m, &v)| {
            if v < 0.0 {
                Err(Error::Internal(format!("negative predictive variance {v}")))
            } else if !(m.is_finite() && v.is_finite()) {
                Err(invalid("prediction is not finite"))
            } else {
                Ok(m + spec.lambda * v.powf(spec.variance_exponent))
            }
        })
        .collect()
}

/// Index of the largest score; the lowest index wins ties.
pub fn argmax_lowest(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|b| s > scores[b]) {
            best = Some(i);
        }
    }
    best
}

/// A model that can be refit from scratch and queried for posterior moments.
pub trait Surrogate {
    type Model;
    fn fit(&self, x: &Matrix, y: &[f64], seed: u64) -> Result<Self::Model>;
    fn predict(&self, model: &Self::Model, queries: &Matrix) -> Result<PosteriorPrediction>;
}

/// Deep-kernel surrogate retrained with the seed of each step.
#[derive(Clone, Debug, Default)]
pub struct DklSurrogate {
    pub config: DklConfig,
}

impl Surrogate for DklSurrogate {
    type Model = DklModel;

    fn fit(&self, x: &Matrix, y: &[f64], seed: u64) -> Result<DklModel> {
        dkl_train(x, y, &self.config, seed)
    }

    fn predict(&self, model: &DklModel, queries: &Matrix) -> Result<PosteriorPrediction> {
        model.predict(queries)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub chosen_index: usize,
    pub acq_value: f64,
    pub pred_mean: f64,
    pub pred_std: f64,
    pub true_target: f64,
    pub cumulative_best: f64,
}

/// Posterior moments over the pool as it was before a step, aligned with
/// the ascending list of unmeasured indices at that time.
#[derive(Clone, Debug, PartialEq)]
pub struct StepPrediction {
    pub pool_indices: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoState {
    pub seed: u64,
    /// Measured master indices in acquisition order; the first `n_init` are the random seed set.
    pub measured_indices: Vec<usize>,
    /// Unmeasured master indices, ascending.
    pub pool_indices: Vec<usize>,
    pub targets: Vec<f64>,
    pub trace: Vec<TraceRecord>,
    pub n_init: usize,
    pub predictions: Option<Vec<StepPrediction>>,
}

impl BoState {
    /// Seeds the measured set with `n_init` uniform draws from `0..pool_size`.
    pub fn initialize(
        pool_size: usize,
        n_init: usize,
        seed: u64,
        oracle: &mut dyn FnMut(usize) -> Result<f64>,
    ) -> Result<Self> {
        if n_init >= pool_size {
            return Err(invalid(format!("n_init {n_init} must be smaller than the pool ({pool_size})")));
        }
        if n_init < 2 {
            return Err(invalid("n_init must be at least 2 to fit a surrogate"));
        }
        let measured = sample(&mut component_rng(seed, "bo-init", 0), pool_size, n_init).into_vec();
        let targets = measured.iter().map(|&i| call_oracle(oracle, i)).collect::<Result<Vec<_>>>()?;
        let mut is_measured = vec![false; pool_size];
        measured.iter().for_each(|&i| is_measured[i] = true);
        let pool_indices = (0..pool_size).filter(|&i| !is_measured[i]).collect();
        Ok(Self {
            seed,
            measured_indices: measured,
            pool_indices,
            targets,
            trace: Vec::new(),
            n_init,
            predictions: None,
        })
    }

    pub fn best(&self) -> f64 {
        self.targets.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn steps_done(&self) -> usize {
        self.trace.len()
    }

    pub fn acquired_indices(&self) -> &[usize] {
        &self.measured_indices[self.n_init..]
    }

    /// Measured set and pool partition `0..pool_size` without repeats.
    pub fn check_partition(&self, pool_size: usize) -> Result<()> {
        let mut seen = vec![false; pool_size];
        for &i in self.measured_indices.iter().chain(&self.pool_indices) {
            if i >= pool_size || seen[i] {
                return Err(Error::InvalidState(format!("index {i} repeated or out of range")));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) || self.targets.len() != self.measured_indices.len() {
            return Err(Error::InvalidState("measured and pool sets do not cover the pool".into()));
        }
        Ok(())
    }

    fn commit(&mut self, pos: usize, y: f64, mut record: TraceRecord) {
        let chosen = self.pool_indices.remove(pos);
        self.measured_indices.push(chosen);
        self.targets.push(y);
        record.cumulative_best = self.best();
        self.trace.push(record);
    }
}

fn call_oracle(oracle: &mut dyn FnMut(usize) -> Result<f64>, index: usize) -> Result<f64> {
    match oracle(index) {
        Ok(y) if y.is_finite() => Ok(y),
        Ok(y) => Err(Error::Oracle { index, message: format!("returned {y}") }),
        Err(e @ Error::Oracle { .. }) => Err(e),
        Err(e) => Err(Error::Oracle { index, message: e.to_string() }),
    }
}

/// Seed for the surrogate retrained before step `step`.
pub fn step_seed(master: u64, step: usize) -> u64 {
    derive_seed(master, "bo-step", step as u64)
}

/// One acquisition. On any failure the state is left untouched.
pub fn bo_step<S: Surrogate>(
    state: &mut BoState,
    pool_inputs: &Matrix,
    oracle: &mut dyn FnMut(usize) -> Result<f64>,
    surrogate: &S,
    spec: &AcquisitionSpec,
) -> Result<()> {
    if state.pool_indices.is_empty() {
        return Err(Error::InvalidState("the candidate pool is empty".into()));
    }
    let step = state.steps_done();
    let model = surrogate.fit(
        &pool_inputs.select_rows(&state.measured_indices),
        &state.targets,
        step_seed(state.seed, step),
    )?;
    let pred = surrogate.predict(&model, &pool_inputs.select_rows(&state.pool_indices))?;
    let scores = acquisition_ucb(&pred, spec)?;
    let pos = argmax_lowest(&scores).expect("pool is non-empty");
    let chosen = state.pool_indices[pos];
    let y = call_oracle(oracle, chosen)?;
    if let Some(p) = state.predictions.as_mut() {
        p.push(StepPrediction { pool_indices: state.pool_indices.clone(), mean: pred.mean.clone(), std: pred.std() });
    }
    let record = TraceRecord {
        step,
        chosen_index: chosen,
        acq_value: scores[pos],
        pred_mean: pred.mean[pos],
        pred_std: pred.variance[pos].sqrt(),
        true_target: y,
        cumulative_best: f64::NAN,
    };
    state.commit(pos, y, record);
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoConfig {
    pub n_init: usize,
    pub n_steps: usize,
    pub acquisition: AcquisitionSpec,
    /// Keep every step's pool prediction for replay checks.
    pub record_predictions: bool,
}

impl Default for BoConfig {
    fn default() -> Self {
        Self { n_init: 100, n_steps: 500, acquisition: AcquisitionSpec::default(), record_predictions: false }
    }
}

pub struct BoRun<M> {
    pub state: BoState,
    /// Surrogate trained on the full final measured set.
    pub final_model: M,
}

pub fn bo_run<S: Surrogate>(
    pool_inputs: &Matrix,
    oracle: &mut dyn FnMut(usize) -> Result<f64>,
    surrogate: &S,
    cfg: &BoConfig,
    seed: u64,
) -> Result<BoRun<S::Model>> {
    let mut state = BoState::initialize(pool_inputs.rows(), cfg.n_init, seed, oracle)?;
    if cfg.record_predictions {
        state.predictions = Some(Vec::with_capacity(cfg.n_steps));
    }
    for _ in 0..cfg.n_steps.min(pool_inputs.rows() - cfg.n_init) {
        bo_step(&mut state, pool_inputs, oracle, surrogate, &cfg.acquisition)?;
    }
    let final_model = surrogate.fit(
        &pool_inputs.select_rows(&state.measured_indices),
        &state.targets,
        derive_seed(seed, "bo-final", 0),
    )?;
    Ok(BoRun { state, final_model })
}

/// Same protocol and seed set as [`bo_run`], acquiring uniformly at random.
pub fn random_baseline(
    pool_size: usize,
    oracle: &mut dyn FnMut(usize) -> Result<f64>,
    cfg: &BoConfig,
    seed: u64,
) -> Result<BoState> {
    let mut state = BoState::initialize(pool_size, cfg.n_init, seed, oracle)?;
    let mut rng = component_rng(seed, "bo-random", 0);
    for step in 0..cfg.n_steps.min(pool_size - cfg.n_init) {
        let pos = rng.gen_range(0..state.pool_indices.len());
        let chosen = state.pool_indices[pos];
        let y = call_oracle(oracle, chosen)?;
        let record = TraceRecord {
            step,
            chosen_index: chosen,
            acq_value: f64::NAN,
            pred_mean: f64::NAN,
            pred_std: f64::NAN,
            true_target: y,
            cumulative_best: f64::NAN,
        };
        state.commit(pos, y, record);
    }
    Ok(state)
}

/// Checks every recorded step: the chosen index is the lowest-index argmax of
/// the acquisition recomputed from the stored moments, and the stored pool is
/// the complement of the measured prefix.
pub fn verify_recorded_trace(state: &BoState, spec: &AcquisitionSpec) -> Result<()> {
    let preds =
        state.predictions.as_ref().ok_or_else(|| Error::InvalidState("run did not record predictions".into()))?;
    if preds.len() != state.trace.len() {
        return Err(Error::InvalidState("prediction and trace lengths differ".into()));
    }
    for (rec, p) in state.trace.iter().zip(preds) {
        let prefix = &state.measured_indices[..state.n_init + rec.step];
        if p.pool_indices.iter().any(|i| prefix.contains(i))
            || p.pool_indices.len() + prefix.len() != state.measured_indices.len() + state.pool_indices.len()
        {
            return Err(Error::InvalidState(format!("step {}: pool is not the unmeasured complement", rec.step)));
        }
        let variance = p.std.iter().map(|s| s * s).collect();
        let pred = PosteriorPrediction { mean: p.mean.clone(), variance, covariance: None };
        let scores = acquisition_ucb(&pred, spec)?;
        let pos = argmax_lowest(&scores).expect("non-empty pool");
        if p.pool_indices[pos] != rec.chosen_index {
            return Err(Error::InvalidState(format!(
                "step {}: acquired {} but the acquisition maximum is at {}",
                rec.step, rec.chosen_index, p.pool_indices[pos]
            )));
        }
    }
    Ok(())
}

/// Re-fits the surrogate for the listed steps from the measured prefix and
/// confirms the same point is acquired.
pub fn replay_steps<S: Surrogate>(
    state: &BoState,
    pool_inputs: &Matrix,
    surrogate: &S,
    spec: &AcquisitionSpec,
    steps: &[usize],
) -> Result<()> {
    for &step in steps {
        let rec = state.trace.get(step).ok_or_else(|| invalid(format!("step {step} is beyond the trace")))?;
        let prefix = &state.measured_indices[..state.n_init + step];
        let mut measured = vec![false; pool_inputs.rows()];
        prefix.iter().for_each(|&i| measured[i] = true);
        let pool: Vec<usize> = (0..pool_inputs.rows()).filter(|&i| !measured[i]).collect();
        let model = surrogate.fit(
            &pool_inputs.select_rows(prefix),
            &state.targets[..prefix.len()],
            step_seed(state.seed, step),
        )?;
        let scores = acquisition_ucb(&surrogate.predict(&model, &pool_inputs.select_rows(&pool))?, spec)?;
        let pos = argmax_lowest(&scores).expect("non-empty pool");
        if pool[pos] != rec.chosen_index || scores[pos].to_bits() != rec.acq_value.to_bits() {
            return Err(Error::InvalidState(format!(
                "replay of step {step} acquired {} (score {}) instead of {} (score {})",
                pool[pos], scores[pos], rec.chosen_index, rec.acq_value
            )));
        }
    }
    Ok(())
}

/// Trace CSV with columns step, chosen_index, acq_value, pred_mean, pred_std,
/// true_target, cumulative_best.
pub fn write_trace_csv<W: Write>(trace: &[TraceRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in trace {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Ignores training data and returns fixed scores per master index.
    struct Stub {
        mean: Vec<f64>,
        variance: Vec<f64>,
    }

    impl Surrogate for Stub {
        type Model = ();
        fn fit(&self, _: &Matrix, _: &[f64], _: u64) -> Result<()> {
            Ok(())
        }
        fn predict(&self, _: &(), q: &Matrix) -> Result<PosteriorPrediction> {
            let idx: Vec<usize> = (0..q.rows()).map(|i| q[(i, 0)] as usize).collect();
            Ok(PosteriorPrediction {
                mean: idx.iter().map(|&i| self.mean[i]).collect(),
                variance: idx.iter().map(|&i| self.variance[i]).collect(),
                covariance: None,
            })
        }
    }

    fn index_pool(n: usize) -> Matrix {
        Matrix::column(&(0..n).map(|i| i as f64).collect::<Vec<_>>())
    }

    #[test]
    fn ucb_arithmetic() {
        let pred = PosteriorPrediction { mean: vec![0.5, 0.2], variance: vec![0.01, 0.0], covariance: None };
        let s = acquisition_ucb(&pred, &AcquisitionSpec::default()).unwrap();
        assert!((s[0] - 1.5).abs() < 1e-15);
        let exploit = acquisition_ucb(&pred, &AcquisitionSpec { lambda: 0.0, ..Default::default() }).unwrap();
        assert_eq!(exploit, pred.mean);
        let bad = PosteriorPrediction { mean: vec![0.0], variance: vec![-1e-3], covariance: None };
        assert!(matches!(acquisition_ucb(&bad, &AcquisitionSpec::default()), Err(Error::Internal(_))));
        let var = acquisition_ucb(&pred, &AcquisitionSpec { lambda: 10.0, variance_exponent: 1.0 }).unwrap();
        assert!((var[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax_lowest(&[0.1, 9.9, 3.0]), Some(1));
        assert_eq!(argmax_lowest(&[2.0, 5.0, 5.0]), Some(1));
        assert_eq!(argmax_lowest(&[]), None);
    }

    #[test]
    fn step_bookkeeping_with_stub() {
        let stub = Stub { mean: vec![0.0, 0.1, 9.9, 3.0, 0.0], variance: vec![0.0; 5] };
        let pool = index_pool(5);
        let mut oracle = |i: usize| Ok(i as f64);
        let mut s = BoState::initialize(5, 2, 1, &mut oracle).unwrap();
        let before = s.clone();
        bo_step(&mut s, &pool, &mut oracle, &stub, &AcquisitionSpec::default()).unwrap();
        assert_eq!(s.measured_indices.len(), 3);
        assert_eq!(s.pool_indices.len(), 2);
        s.check_partition(5).unwrap();
        let best_free = before.pool_indices.iter().copied().max_by(|&a, &b| stub.mean[a].total_cmp(&stub.mean[b]));
        assert_eq!(s.trace[0].chosen_index, best_free.unwrap());
        assert_eq!(s.trace[0].cumulative_best, s.best());
    }

    #[test]
    fn failing_oracle_leaves_state_unchanged() {
        let stub = Stub { mean: vec![1.0; 6], variance: vec![1.0; 6] };
        let mut ok = |i: usize| Ok(i as f64);
        let mut s = BoState::initialize(6, 2, 3, &mut ok).unwrap();
        let before = s.clone();
        let mut failing = |_: usize| -> Result<f64> { Err(invalid("instrument offline")) };
        let err = bo_step(&mut s, &index_pool(6), &mut failing, &stub, &AcquisitionSpec::default()).unwrap_err();
        assert!(matches!(err, Error::Oracle { .. }));
        assert_eq!(s, before);
    }

    #[test]
    fn single_candidate_is_acquired_and_empty_pool_errors() {
        let stub = Stub { mean: vec![5.0, 5.0, -100.0], variance: vec![0.0; 3] };
        let mut oracle = |i: usize| Ok(-(i as f64));
        let cfg = BoConfig { n_init: 2, n_steps: 5, ..Default::default() };
        let run = bo_run(&index_pool(3), &mut oracle, &stub, &cfg, 0).unwrap();
        assert_eq!(run.state.trace.len(), 1);
        assert!(run.state.pool_indices.is_empty());
        let mut s = run.state;
        let err = bo_step(&mut s, &index_pool(3), &mut oracle, &stub, &AcquisitionSpec::default());
        assert!(matches!(err, Err(Error::InvalidState(_))));
    }

    #[test]
    fn zero_steps_and_invalid_init() {
        let stub = Stub { mean: vec![0.0; 10], variance: vec![0.0; 10] };
        let mut oracle = |i: usize| Ok(i as f64);
        let cfg = BoConfig { n_init: 4, n_steps: 0, ..Default::default() };
        let run = bo_run(&index_pool(10), &mut oracle, &stub, &cfg, 0).unwrap();
        assert_eq!(run.state.measured_indices.len(), 4);
        assert!(run.state.trace.is_empty());
        let bad = BoConfig { n_init: 10, ..cfg };
        assert!(matches!(bo_run(&index_pool(10), &mut oracle, &stub, &bad, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn recorded_trace_verifies_and_detects_tampering() {
        let n = 30;
        let stub = Stub {
            mean: (0..n).map(|i| ((i * 7) % 11) as f64).collect(),
            variance: (0..n).map(|i| ((i * 3) % 5) as f64 * 0.01).collect(),
        };
        let mut oracle = |i: usize| Ok(i as f64);
        let cfg = BoConfig { n_init: 5, n_steps: 10, record_predictions: true, ..Default::default() };
        let run = bo_run(&index_pool(n), &mut oracle, &stub, &cfg, 0).unwrap();
        verify_recorded_trace(&run.state, &cfg.acquisition).unwrap();
        replay_steps(&run.state, &index_pool(n), &stub, &cfg.acquisition, &[0, 4, 9]).unwrap();
        let mut tampered = run.state.clone();
        tampered.trace[3].chosen_index = tampered.predictions.as_ref().unwrap()[3].pool_indices[0];
        assert!(verify_recorded_trace(&tampered, &cfg.acquisition).is_err());
    }

    #[test]
    fn random_baseline_shares_seed_set_and_never_repeats() {
        let mut oracle = |i: usize| Ok((i as f64).sin());
        let cfg = BoConfig { n_init: 5, n_steps: 40, ..Default::default() };
        let a = random_baseline(50, &mut oracle, &cfg, 2).unwrap();
        a.check_partition(50).unwrap();
        assert_eq!(a.measured_indices, random_baseline(50, &mut oracle, &cfg, 2).unwrap().measured_indices);
        let stub = Stub { mean: vec![0.0; 50], variance: vec![0.0; 50] };
        let bo = bo_run(&index_pool(50), &mut oracle, &stub, &BoConfig { n_steps: 0, ..cfg.clone() }, 2).unwrap();
        assert_eq!(&a.measured_indices[..5], &bo.state.measured_indices[..]);
        assert!(a.trace.windows(2).all(|w| w[1].cumulative_best >= w[0].cumulative_best));
    }

    #[test]
    fn random_baseline_matches_order_statistic() {
        // targets are a permutation of 0..n, so P(best ≤ m) is hypergeometric
        let n = 40;
        let (n_init, steps) = (3, 7);
        let k = n_init + steps;
        let expected: f64 = (0..n)
            .map(|m| {
                // P(max ≥ m) = 1 − C(m, k) / C(n, k)
                let ratio: f64 = (0..k).map(|j| (m as f64 - j as f64).max(0.0) / (n - j) as f64).product();
                1.0 - ratio
            })
            .skip(1)
            .sum();
        let mut total = 0.0;
        let seeds = 200;
        for seed in 0..seeds {
            let mut oracle = |i: usize| Ok(((i * 17) % n) as f64);
            let cfg = BoConfig { n_init, n_steps: steps, ..Default::default() };
            total += random_baseline(n, &mut oracle, &cfg, seed).unwrap().best();
        }
        let mean = total / seeds as f64;
        // order-statistic sd is below 4, so 4σ/√200 ≈ 1.1
        assert!((mean - expected).abs() < 1.1, "{mean} vs {expected}");
    }

    #[test]
    fn trace_csv_columns() {
        let rec = TraceRecord {
            step: 0,
            chosen_index: 4,
            acq_value: 1.5,
            pred_mean: 0.5,
            pred_std: 0.1,
            true_target: 0.7,
            cumulative_best: 0.9,
        };
        let mut buf = Vec::new();
        write_trace_csv(&[rec], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "step,chosen_index,acq_value,pred_mean,pred_std,true_target,cumulative_best"
        );
        assert_eq!(text.lines().nth(1).unwrap(), "0,4,1.5,0.5,0.1,0.7,0.9");
    }
}
