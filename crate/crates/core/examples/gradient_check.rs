//! Finite-difference verification of every hand-written gradient.

use latent_forge::runner::commands::gradient_suite;

fn main() -> latent_forge::Result<()> {
    let results = gradient_suite(5, 2024)?;
    for (component, seed, err) in &results {
        println!("{component:10} seed {seed}: relative error {err:.2e}");
    }
    let worst = results.iter().map(|r| r.2).fold(0.0, f64::max);
    println!("worst {worst:.2e} ({})", if worst < 1e-4 { "ok" } else { "too large" });
    Ok(())
}
