//! Generates a family of drive curves, runs the simulator on each, and uses
//! DKL-BO with the simulator as a live oracle to find curves that maximize curl.

use latent_forge::bo::{bo_run, BoConfig, DklSurrogate};
use latent_forge::dkl::DklConfig;
use latent_forge::ferrosim::{
    generate_field_family, run_simulation, simulate_sweep, sweep_seed, FieldFamilyConfig, SimConfig,
};

fn main() -> latent_forge::Result<()> {
    let master = 7;
    let (curves, x) =
        generate_field_family(&FieldFamilyConfig { n_curves: 300, ..FieldFamilyConfig::default() }, master)?;
    let sim = SimConfig { size: 12, ..SimConfig::default() };

    let truth = simulate_sweep(&curves, &sim, master)?;
    let best_possible = truth.iter().map(|t| t.curl).fold(f64::NEG_INFINITY, f64::max);

    let init = sweep_seed(master);
    let mut calls = 0;
    let mut oracle = |i: usize| {
        calls += 1;
        Ok(run_simulation(&curves[i], &sim, init)?.targets.curl)
    };
    let cfg = BoConfig { n_init: 20, n_steps: 30, ..BoConfig::default() };
    let surrogate =
        DklSurrogate { config: DklConfig { hidden_sizes: vec![32, 32], steps: 100, ..DklConfig::default() } };
    let run = bo_run(&x, &mut oracle, &surrogate, &cfg, master)?;

    println!("{calls} simulator calls out of a pool of {}", curves.len());
    println!("best curl found {:.4}, pool maximum {:.4}", run.state.best(), best_possible);
    let best_idx = run.state.measured_indices
        [run.state.targets.iter().enumerate().fold(0, |b, (i, v)| if *v > run.state.targets[b] { i } else { b })];
    if let Some(p) = curves[best_idx].params {
        println!("best drive: A {:.3}, alpha {:.3}, omega {:.3}, B {:.3}", p.amplitude, p.alpha, p.omega, p.offset);
    }
    Ok(())
}
