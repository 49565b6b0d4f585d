//! Polarization hysteresis of the lattice ferroelectric under a sinusoidal field,
//! plus relaxation in zero field towards the ordered state.

use latent_forge::ferrosim::{free_energy, hysteresis_loop, step, LatticeState, SimConfig};

fn main() -> latent_forge::Result<()> {
    let cfg = SimConfig::default();
    println!("equilibrium |P| = {:.4}", cfg.saturation());

    let mut state = LatticeState::random(cfg.size, cfg.init_amplitude, 9);
    for k in 0..=1000 {
        if k % 200 == 0 {
            println!(
                "step {k:4}: mean |P| {:.4}, free energy {:.4}",
                state.mean_magnitude(),
                free_energy(&state, 0.0, &cfg)?
            );
        }
        step(&mut state, 0.0, &cfg)?;
    }

    for amplitude in [0.5, 1.0, 2.0] {
        let lp = hysteresis_loop(amplitude, 2, 200, &cfg, 9)?;
        println!(
            "E0 = {amplitude:.1}: loop area {:.3}, remnant P {:.3}, coercive field {:.3}",
            lp.area(),
            lp.remnant_polarization(),
            lp.coercive_field()
        );
    }
    Ok(())
}
