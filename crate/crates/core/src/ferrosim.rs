//! Kinetic lattice model of a ferroelectric: a continuous two-component
//! polarization per site on a periodic square lattice, a double-well
//! Ginzburg-Landau-Devonshire free energy with nearest-neighbour gradient
//! coupling, and explicit-Euler relaxational dynamics under a field applied
//! along x.
//!
//! ```text
//! F = Σ_sites [a2·|P|² + a4·|P|⁴ − E_x·P_x] + (k/2)·Σ_<ij> |P_i − P_j|²
//! P ← P − Γ·dt·∂F/∂P
//! ```
//!
//! Lattice index `(i, j)` maps to x = i, y = j; storage is `i * N + j`.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, numeric, Result};
use crate::ndcore::Matrix;
use crate::seed::{component_rng, derive_seed, rng_from_seed};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub size: usize,
    pub a2: f64,
    pub a4: f64,
    pub k_grad: f64,
    pub mobility: f64,
    pub dt: f64,
    /// Relaxation steps per field sample.
    pub substeps: usize,
    pub init_amplitude: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { size: 20, a2: -1.0, a4: 1.0, k_grad: 0.5, mobility: 1.0, dt: 0.02, substeps: 1, init_amplitude: 0.01 }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.size < 4 {
            return Err(invalid(format!("lattice size must be at least 4, got {}", self.size)));
        }
        if self.dt.is_nan() || self.dt <= 0.0 || self.a4.is_nan() || self.a4 <= 0.0 || self.substeps == 0 {
            return Err(invalid("simulation needs dt > 0, a4 > 0 and at least one substep"));
        }
        Ok(())
    }

    /// Spontaneous polarization `√(−a2 / 2a4)` of the uniform state.
    pub fn saturation(&self) -> f64 {
        if self.a2 < 0.0 {
            (-self.a2 / (2.0 * self.a4)).sqrt()
        } else {
            1.0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeState {
    pub size: usize,
    pub px: Vec<f64>,
    pub py: Vec<f64>,
}

impl LatticeState {
    pub fn uniform(size: usize, px: f64, py: f64) -> Self {
        Self { size, px: vec![px; size * size], py: vec![py; size * size] }
    }

    pub fn random(size: usize, amplitude: f64, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let n = size * size;
        let mut draw = || {
            if amplitude > 0.0 {
                rng.gen_range(-amplitude..=amplitude)
            } else {
                0.0
            }
        };
        let px = (0..n).map(|_| draw()).collect();
        let py = (0..n).map(|_| draw()).collect();
        Self { size, px, py }
    }

    pub fn from_fn(size: usize, f: impl Fn(usize, usize) -> (f64, f64)) -> Self {
        let mut s = Self::uniform(size, 0.0, 0.0);
        for i in 0..size {
            for j in 0..size {
                let (x, y) = f(i, j);
                s.px[i * size + j] = x;
                s.py[i * size + j] = y;
            }
        }
        s
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.size + j
    }

    pub fn sites(&self) -> usize {
        self.size * self.size
    }

    pub fn mean_px(&self) -> f64 {
        self.px.iter().sum::<f64>() / self.sites() as f64
    }

    pub fn mean_py(&self) -> f64 {
        self.py.iter().sum::<f64>() / self.sites() as f64
    }

    pub fn mean_magnitude(&self) -> f64 {
        self.px.iter().zip(&self.py).map(|(x, y)| x.hypot(*y)).sum::<f64>() / self.sites() as f64
    }

    pub fn max_magnitude(&self) -> f64 {
        self.px.iter().zip(&self.py).map(|(x, y)| x.hypot(*y)).fold(0.0, f64::max)
    }

    fn is_finite(&self) -> bool {
        self.px.iter().chain(&self.py).all(|v| v.is_finite())
    }

    fn check(&self) -> Result<()> {
        if self.px.len() != self.sites() || self.py.len() != self.sites() || self.size < 2 {
            return Err(invalid("lattice arrays do not match the lattice size"));
        }
        Ok(())
    }

    /// Neighbour indices (i+1, i−1, j+1, j−1) with periodic wrap.
    #[inline]
    fn neighbours(&self, i: usize, j: usize) -> [usize; 4] {
        let n = self.size;
        [self.idx((i + 1) % n, j), self.idx((i + n - 1) % n, j), self.idx(i, (j + 1) % n), self.idx(i, (j + n - 1) % n)]
    }
}

pub fn free_energy(state: &LatticeState, e_x: f64, cfg: &SimConfig) -> Result<f64> {
    state.check()?;
    let n = state.size;
    let mut local = 0.0;
    let mut gradient = 0.0;
    for i in 0..n {
        for j in 0..n {
            let s = state.idx(i, j);
            let (x, y) = (state.px[s], state.py[s]);
            let p2 = x * x + y * y;
            local += cfg.a2 * p2 + cfg.a4 * p2 * p2 - e_x * x;
            // each bond once: towards +x and +y
            for t in [state.idx((i + 1) % n, j), state.idx(i, (j + 1) % n)] {
                let (dx, dy) = (x - state.px[t], y - state.py[t]);
                gradient += dx * dx + dy * dy;
            }
        }
    }
    let f = local + 0.5 * cfg.k_grad * gradient;
    if !f.is_finite() {
        return Err(numeric("free energy is not finite"));
    }
    Ok(f)
}

/// `(∂F/∂P_x, ∂F/∂P_y)` per site.
pub fn force(state: &LatticeState, e_x: f64, cfg: &SimConfig) -> (Vec<f64>, Vec<f64>) {
    let n = state.size;
    let mut fx = vec![0.0; state.sites()];
    let mut fy = vec![0.0; state.sites()];
    for i in 0..n {
        for j in 0..n {
            let s = state.idx(i, j);
            let (x, y) = (state.px[s], state.py[s]);
            let p2 = x * x + y * y;
            let local = 2.0 * cfg.a2 + 4.0 * cfg.a4 * p2;
            let mut lx = 0.0;
            let mut ly = 0.0;
            for t in state.neighbours(i, j) {
                lx += x - state.px[t];
                ly += y - state.py[t];
            }
            fx[s] = local * x + cfg.k_grad * lx - e_x;
            fy[s] = local * y + cfg.k_grad * ly;
        }
    }
    (fx, fy)
}

/// One explicit-Euler relaxation step in place.
pub fn step(state: &mut LatticeState, e_x: f64, cfg: &SimConfig) -> Result<()> {
    let (fx, fy) = force(state, e_x, cfg);
    let rate = cfg.mobility * cfg.dt;
    for (p, f) in state.px.iter_mut().zip(&fx) {
        *p -= rate * f;
    }
    for (p, f) in state.py.iter_mut().zip(&fy) {
        *p -= rate * f;
    }
    let limit = 10.0 * cfg.saturation();
    if !state.is_finite() || state.max_magnitude() > limit {
        return Err(numeric(format!("polarization diverged (|P| > {limit:.3}); reduce dt (currently {})", cfg.dt)));
    }
    Ok(())
}

/// Signed discrete curl per site, central differences with periodic wrap:
/// `c = (P_y(i+1,j) − P_y(i−1,j))/2 − (P_x(i,j+1) − P_x(i,j−1))/2`.
pub fn curl_field(state: &LatticeState) -> Vec<f64> {
    let n = state.size;
    let mut out = vec![0.0; state.sites()];
    for i in 0..n {
        for j in 0..n {
            let [ip, im, jp, jm] = state.neighbours(i, j);
            out[state.idx(i, j)] = 0.5 * (state.py[ip] - state.py[im]) - 0.5 * (state.px[jp] - state.px[jm]);
        }
    }
    out
}

/// Sum of absolute per-site curls.
pub fn target_curl(state: &LatticeState) -> f64 {
    curl_field(state).iter().map(|c| c.abs()).sum()
}

/// Curl of the unit-vector field; sites with |P| < 1e-9 become zero vectors.
pub fn target_normalized_curl(state: &LatticeState) -> f64 {
    let mut unit = state.clone();
    for (x, y) in unit.px.iter_mut().zip(unit.py.iter_mut()) {
        let m = x.hypot(*y);
        if m < 1e-9 {
            *x = 0.0;
            *y = 0.0;
        } else {
            *x /= m;
            *y /= m;
        }
    }
    target_curl(&unit)
}

/// Magnitude of the lattice-summed polarization vector.
pub fn target_total_polarization(state: &LatticeState) -> f64 {
    let sx: f64 = state.px.iter().sum();
    let sy: f64 = state.py.iter().sum();
    sx.hypot(sy)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Targets {
    pub curl: f64,
    pub normalized_curl: f64,
    pub total_polarization: f64,
}

impl Targets {
    pub const NAMES: [&'static str; 3] = ["curl", "normalized_curl", "total_polarization"];

    pub fn of(state: &LatticeState) -> Self {
        Self {
            curl: target_curl(state),
            normalized_curl: target_normalized_curl(state),
            total_polarization: target_total_polarization(state),
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "curl" => Some(self.curl),
            "normalized_curl" => Some(self.normalized_curl),
            "total_polarization" => Some(self.total_polarization),
            _ => None,
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.curl, self.normalized_curl, self.total_polarization]
    }
}

/// Parameters of a drive `E_x(t) = A·exp(α_f t)·sin(ω_f t) + B`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldParams {
    pub amplitude: f64,
    pub alpha: f64,
    pub omega: f64,
    pub offset: f64,
}

impl FieldParams {
    pub fn eval(&self, t: f64) -> f64 {
        self.amplitude * (self.alpha * t).exp() * (self.omega * t).sin() + self.offset
    }

    /// Samples at `t_k = k / n` for `k = 0..n`.
    pub fn sample(&self, n: usize) -> Vec<f64> {
        (0..n).map(|k| self.eval(k as f64 / n as f64)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldCurve {
    pub params: Option<FieldParams>,
    pub samples: Vec<f64>,
}

impl FieldCurve {
    pub fn from_params(params: FieldParams, t_samples: usize) -> Self {
        Self { params: Some(params), samples: params.sample(t_samples) }
    }

    pub fn from_samples(samples: Vec<f64>) -> Self {
        Self { params: None, samples }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    pub final_state: LatticeState,
    pub mean_px: Vec<f64>,
    pub mean_py: Vec<f64>,
    pub curl: Vec<f64>,
    pub targets: Targets,
}

/// Runs the lattice from a seeded small random state through every field sample.
pub fn run_simulation(curve: &FieldCurve, cfg: &SimConfig, seed: u64) -> Result<SimResult> {
    cfg.validate()?;
    if curve.samples.iter().any(|e| !e.is_finite()) {
        return Err(invalid("field curve has non-finite samples"));
    }
    let mut state = LatticeState::random(cfg.size, cfg.init_amplitude, seed);
    let steps = curve.samples.len();
    let mut mean_px = Vec::with_capacity(steps + 1);
    let mut mean_py = Vec::with_capacity(steps + 1);
    let mut curl = Vec::with_capacity(steps + 1);
    let mut record = |s: &LatticeState| {
        mean_px.push(s.mean_px());
        mean_py.push(s.mean_py());
        curl.push(target_curl(s));
    };
    record(&state);
    for (k, &e) in curve.samples.iter().enumerate() {
        for _ in 0..cfg.substeps {
            step(&mut state, e, cfg).map_err(|err| numeric(format!("field sample {k}: {err}")))?;
        }
        record(&state);
    }
    let targets = Targets::of(&state);
    Ok(SimResult { final_state: state, mean_px, mean_py, curl, targets })
}

/// Mean polarization response to a sinusoidal drive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HysteresisLoop {
    pub steps_per_period: usize,
    /// `(E_x, ⟨P_x⟩)` after every relaxation step, warm-up cycle excluded.
    pub points: Vec<(f64, f64)>,
}

impl HysteresisLoop {
    fn periods(&self) -> impl Iterator<Item = &[(f64, f64)]> {
        self.points.chunks_exact(self.steps_per_period)
    }

    /// Mean enclosed area `|∮ P dE|` per period (shoelace formula).
    pub fn area(&self) -> f64 {
        let areas: Vec<f64> = self
            .periods()
            .map(|c| {
                let mut s = 0.0;
                for k in 0..c.len() {
                    let (e0, p0) = c[k];
                    let (e1, p1) = c[(k + 1) % c.len()];
                    s += e0 * p1 - e1 * p0;
                }
                0.5 * s.abs()
            })
            .collect();
        if areas.is_empty() {
            0.0
        } else {
            areas.iter().sum::<f64>() / areas.len() as f64
        }
    }

    fn crossings(&self, key: impl Fn((f64, f64)) -> f64, value: impl Fn((f64, f64)) -> f64) -> Vec<f64> {
        let mut out = Vec::new();
        for w in self.points.windows(2) {
            let (k0, k1) = (key(w[0]), key(w[1]));
            if k0 == 0.0 {
                out.push(value(w[0]));
            } else if k0 * k1 < 0.0 {
                let t = k0 / (k0 - k1);
                out.push(value(w[0]) + t * (value(w[1]) - value(w[0])));
            }
        }
        out
    }

    /// Mean |⟨P_x⟩| where the field crosses zero.
    pub fn remnant_polarization(&self) -> f64 {
        let c = self.crossings(|p| p.0, |p| p.1.abs());
        if c.is_empty() {
            0.0
        } else {
            c.iter().sum::<f64>() / c.len() as f64
        }
    }

    /// Mean |E_x| where the polarization crosses zero.
    pub fn coercive_field(&self) -> f64 {
        let c = self.crossings(|p| p.1, |p| p.0.abs());
        if c.is_empty() {
            0.0
        } else {
            c.iter().sum::<f64>() / c.len() as f64
        }
    }

    /// Mean of `|P(t) + P(t + T/2)|` relative to the largest |P| on the loop.
    pub fn odd_symmetry_error(&self) -> f64 {
        let half = self.steps_per_period / 2;
        let pmax = self.points.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
        if pmax == 0.0 || self.points.len() <= half {
            return 0.0;
        }
        let n = self.points.len() - half;
        (0..n).map(|k| (self.points[k].1 + self.points[k + half].1).abs()).sum::<f64>() / (n as f64 * pmax)
    }
}

/// Drives `E_x = amplitude·sin(2πt/T)` for one warm-up cycle followed by
/// `periods` recorded cycles.
pub fn hysteresis_loop(
    amplitude: f64,
    periods: usize,
    steps_per_period: usize,
    cfg: &SimConfig,
    seed: u64,
) -> Result<HysteresisLoop> {
    cfg.validate()?;
    if amplitude.is_nan() || amplitude < 0.0 || steps_per_period < 2 {
        return Err(invalid("hysteresis drive needs amplitude ≥ 0 and at least two steps per period"));
    }
    let mut state = LatticeState::random(cfg.size, cfg.init_amplitude, seed);
    let mut points = Vec::with_capacity(periods * steps_per_period);
    for cycle in 0..=periods {
        for k in 0..steps_per_period {
            let e = amplitude * (2.0 * PI * k as f64 / steps_per_period as f64).sin();
            for _ in 0..cfg.substeps {
                step(&mut state, e, cfg)?;
            }
            if cycle > 0 {
                points.push((e, state.mean_px()));
            }
        }
    }
    Ok(HysteresisLoop { steps_per_period, points })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldFamilyConfig {
    pub n_curves: usize,
    pub t_samples: usize,
    pub amplitude_range: [f64; 2],
    pub alpha_range: [f64; 2],
    pub omega_range: [f64; 2],
    pub offset_range: [f64; 2],
}

impl Default for FieldFamilyConfig {
    fn default() -> Self {
        Self {
            n_curves: 7500,
            t_samples: 100,
            amplitude_range: [0.5, 3.0],
            alpha_range: [-2.0, 2.0],
            omega_range: [2.0 * PI, 8.0 * PI],
            offset_range: [-0.5, 0.5],
        }
    }
}

fn draw(rng: &mut impl Rng, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.gen_range(r[0]..r[1])
    }
}

/// Seeded family of drive curves plus the `n_curves × t_samples` input matrix.
pub fn generate_field_family(cfg: &FieldFamilyConfig, seed: u64) -> Result<(Vec<FieldCurve>, Matrix)> {
    if cfg.n_curves == 0 || cfg.t_samples == 0 {
        return Err(invalid("field family needs at least one curve and one sample"));
    }
    for (name, r) in [
        ("amplitude_range", cfg.amplitude_range),
        ("alpha_range", cfg.alpha_range),
        ("omega_range", cfg.omega_range),
        ("offset_range", cfg.offset_range),
    ] {
        if !(r[0].is_finite() && r[1].is_finite()) || r[0] > r[1] {
            return Err(invalid(format!("{name} {r:?} is empty or not finite")));
        }
    }
    let curves: Vec<FieldCurve> = (0..cfg.n_curves)
        .map(|i| {
            let mut rng = component_rng(seed, "field-curve", i as u64);
            let params = FieldParams {
                amplitude: draw(&mut rng, cfg.amplitude_range),
                alpha: draw(&mut rng, cfg.alpha_range),
                omega: draw(&mut rng, cfg.omega_range),
                offset: draw(&mut rng, cfg.offset_range),
            };
            FieldCurve::from_params(params, cfg.t_samples)
        })
        .collect();
    let data = curves.iter().flat_map(|c| c.samples.iter().copied()).collect();
    let inputs = Matrix::from_vec(cfg.n_curves, cfg.t_samples, data)?;
    Ok((curves, inputs))
}

/// Seed of the initial lattice shared by every curve of a sweep, so each
/// target is a deterministic function of its drive curve.
pub fn sweep_seed(master_seed: u64) -> u64 {
    derive_seed(master_seed, "ferrosim-init", 0)
}

/// Final targets for every curve; scheduling-independent.
pub fn simulate_sweep(curves: &[FieldCurve], cfg: &SimConfig, master_seed: u64) -> Result<Vec<Targets>> {
    let seed = sweep_seed(master_seed);
    curves
        .par_iter()
        .enumerate()
        .map(|(i, c)| run_simulation(c, cfg, seed).map(|r| r.targets).map_err(|e| numeric(format!("curve {i}: {e}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndcore::grad_check;

    fn cfg(size: usize) -> SimConfig {
        SimConfig { size, ..SimConfig::default() }
    }

    fn flat(s: &LatticeState) -> Vec<f64> {
        s.px.iter().chain(&s.py).copied().collect()
    }

    fn unflat(size: usize, v: &[f64]) -> LatticeState {
        let n = size * size;
        LatticeState { size, px: v[..n].to_vec(), py: v[n..].to_vec() }
    }

    #[test]
    fn zero_state_has_zero_energy() {
        assert_eq!(free_energy(&LatticeState::uniform(6, 0.0, 0.0), 0.0, &cfg(6)).unwrap(), 0.0);
    }

    #[test]
    fn uniform_energy_and_field_coupling() {
        let c = cfg(5);
        let p = 0.37;
        let s = LatticeState::uniform(5, p, 0.0);
        let f0 = free_energy(&s, 0.0, &c).unwrap();
        assert!((f0 - 25.0 * (c.a2 * p * p + c.a4 * p.powi(4))).abs() < 1e-12);
        let f1 = free_energy(&s, 0.8, &c).unwrap();
        assert!((f0 - f1 - 25.0 * 0.8 * p).abs() < 1e-12);
    }

    #[test]
    fn saturated_uniform_states_are_stationary() {
        let c = cfg(6);
        let ps = c.saturation();
        assert!((ps - 0.5f64.sqrt()).abs() < 1e-15);
        for sign in [1.0, -1.0] {
            let s = LatticeState::uniform(6, sign * ps, 0.0);
            let (fx, fy) = force(&s, 0.0, &c);
            assert!(fx.iter().chain(&fy).all(|f| f.abs() < 1e-12));
            let mut t = s.clone();
            step(&mut t, 0.0, &c).unwrap();
            assert!(t.px.iter().zip(&s.px).all(|(a, b)| (a - b).abs() < 1e-12));
        }
    }

    #[test]
    fn field_only_force_on_zero_state() {
        let (fx, fy) = force(&LatticeState::uniform(4, 0.0, 0.0), 0.3, &cfg(4));
        assert!(fx.iter().all(|&f| f == -0.3));
        assert!(fy.iter().all(|&f| f == 0.0));
    }

    #[test]
    fn force_is_energy_gradient() {
        for seed in 0..5 {
            let c = cfg(5);
            let s = LatticeState::random(5, 0.9, seed);
            let e = 0.4;
            let f = |v: &[f64]| {
                let st = unflat(5, v);
                let (fx, fy) = force(&st, e, &c);
                Ok((free_energy(&st, e, &c)?, fx.into_iter().chain(fy).collect()))
            };
            assert!(grad_check(f, &flat(&s)).unwrap() < 1e-6);
        }
    }

    #[test]
    fn stepping_descends_energy() {
        let c = cfg(8);
        for seed in 0..3 {
            let mut s = LatticeState::random(8, 0.05, seed);
            let mut f = free_energy(&s, 0.0, &c).unwrap();
            for _ in 0..200 {
                step(&mut s, 0.0, &c).unwrap();
                let g = free_energy(&s, 0.0, &c).unwrap();
                assert!(g <= f + 1e-12);
                f = g;
            }
        }
    }

    #[test]
    fn unpolarized_state_is_unstable() {
        let c = SimConfig { k_grad: 0.0, ..cfg(4) };
        let mut s = LatticeState::uniform(4, 1e-3, 0.0);
        let mut last = 1e-3;
        for _ in 0..600 {
            step(&mut s, 0.0, &c).unwrap();
            assert!(s.px[0] >= last);
            last = s.px[0];
        }
        assert!((last - c.saturation()).abs() < 1e-3);
    }

    #[test]
    fn divergence_is_reported_with_dt() {
        let c = SimConfig { dt: 5.0, ..cfg(4) };
        let mut s = LatticeState::uniform(4, 0.7, 0.0);
        let mut r = Ok(());
        for _ in 0..10 {
            r = step(&mut s, 2.0, &c);
            if r.is_err() {
                break;
            }
        }
        let msg = r.unwrap_err().to_string();
        assert!(msg.contains("dt"), "{msg}");
    }

    fn loop_curl(s: &LatticeState) -> f64 {
        let n = s.size as isize;
        let at = |v: &Vec<f64>, i: isize, j: isize| v[(i.rem_euclid(n) * n + j.rem_euclid(n)) as usize];
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let dpy = at(&s.py, i + 1, j) - at(&s.py, i - 1, j);
                let dpx = at(&s.px, i, j + 1) - at(&s.px, i, j - 1);
                total += (dpy / 2.0 - dpx / 2.0).abs();
            }
        }
        total
    }

    fn vortex(n: usize) -> LatticeState {
        let c = (n as f64 - 1.0) / 2.0;
        LatticeState::from_fn(n, |i, j| (-(j as f64 - c) / n as f64, (i as f64 - c) / n as f64))
    }

    #[test]
    fn curl_edge_cases_and_oracle() {
        assert_eq!(target_curl(&LatticeState::uniform(6, 0.3, -0.2)), 0.0);
        let xonly = LatticeState::from_fn(6, |i, _| ((i as f64).sin(), 0.0));
        assert_eq!(target_curl(&xonly), 0.0);
        let v = vortex(8);
        assert!((target_curl(&v) - loop_curl(&v)).abs() < 1e-12);
        assert!(target_curl(&v) > 0.0);
    }

    #[test]
    fn normalized_curl_properties() {
        assert_eq!(target_normalized_curl(&LatticeState::uniform(5, 0.4, 0.1)), 0.0);
        let v = vortex(8);
        let mut scaled = v.clone();
        scaled.px.iter_mut().chain(scaled.py.iter_mut()).for_each(|x| *x *= 5.0);
        assert!((target_normalized_curl(&v) - target_normalized_curl(&scaled)).abs() < 1e-12);
        let unit = LatticeState::from_fn(8, |i, j| {
            let (x, y) = (v.px[i * 8 + j], v.py[i * 8 + j]);
            let m = x.hypot(y);
            if m < 1e-9 {
                (0.0, 0.0)
            } else {
                (x / m, y / m)
            }
        });
        assert!((target_normalized_curl(&v) - loop_curl(&unit)).abs() < 1e-12);
    }

    #[test]
    fn total_polarization_cases() {
        assert!((target_total_polarization(&LatticeState::uniform(5, 0.3, 0.0)) - 7.5).abs() < 1e-12);
        let domains = LatticeState::from_fn(6, |i, _| (if i < 3 { 0.5 } else { -0.5 }, 0.0));
        assert_eq!(target_total_polarization(&domains), 0.0);
        let s = LatticeState::random(7, 1.0, 3);
        let (mut sx, mut sy) = (0.0, 0.0);
        for k in 0..49 {
            sx += s.px[k];
            sy += s.py[k];
        }
        assert!((target_total_polarization(&s) - (sx * sx + sy * sy).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn field_formula() {
        let sine = FieldParams { amplitude: 1.0, alpha: 0.0, omega: 2.0 * PI, offset: 0.0 };
        assert!((sine.sample(100)[25] - 1.0).abs() < 1e-15);
        let flat = FieldParams { amplitude: 0.0, alpha: 1.3, omega: 9.0, offset: 0.25 };
        assert!(flat.sample(50).iter().all(|&e| e == 0.25));
    }

    #[test]
    fn field_family_shape_and_validation() {
        let cfg = FieldFamilyConfig { n_curves: 30, ..FieldFamilyConfig::default() };
        let (curves, x) = generate_field_family(&cfg, 0).unwrap();
        assert_eq!(x.shape(), (30, 100));
        assert_eq!(curves.len(), 30);
        for c in &curves {
            let p = c.params.unwrap();
            assert!((0.5..3.0).contains(&p.amplitude) && (-0.5..0.5).contains(&p.offset));
        }
        assert_eq!(generate_field_family(&cfg, 0).unwrap().1, x);
        let bad = FieldFamilyConfig { alpha_range: [1.0, -1.0], ..cfg.clone() };
        assert!(generate_field_family(&bad, 0).is_err());
    }

    #[test]
    fn simulation_is_deterministic_and_series_have_expected_length() {
        let curve = FieldCurve::from_params(FieldParams { amplitude: 1.5, alpha: 0.5, omega: 12.0, offset: 0.1 }, 40);
        let a = run_simulation(&curve, &cfg(8), 9).unwrap();
        assert_eq!(a, run_simulation(&curve, &cfg(8), 9).unwrap());
        assert_eq!(a.mean_px.len(), 41);
        assert_eq!(a.curl.len(), 41);
    }

    #[test]
    fn zero_amplitude_loop_is_degenerate() {
        let l = hysteresis_loop(0.0, 1, 20, &cfg(6), 0).unwrap();
        assert!(l.points.iter().all(|p| p.0 == 0.0));
        assert!(hysteresis_loop(-1.0, 1, 20, &cfg(6), 0).is_err());
    }
}
