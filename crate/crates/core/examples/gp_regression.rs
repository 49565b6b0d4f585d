//! Exact GP regression on a noisy sine: MAP hyperparameter fitting, then
//! posterior mean and a 2σ band on a test grid.

use latent_forge::gp::{gp_fit, gp_fit_hyperparams, gp_predict, KernelHyper, MapPrior};
use latent_forge::ndcore::Matrix;
use latent_forge::seed::rng_from_seed;
use rand::Rng;

fn main() -> latent_forge::Result<()> {
    let mut rng = rng_from_seed(3);
    let xs: Vec<f64> = (0..25).map(|i| i as f64 * 0.25).collect();
    let ys: Vec<f64> = xs.iter().map(|x| x.sin() + rng.gen_range(-0.05..0.05)).collect();
    let x = Matrix::column(&xs);

    let fitted = gp_fit_hyperparams(&x, &ys, KernelHyper::default(), &MapPrior::default(), 300, 0.05)?;
    let h = fitted.hyper;
    println!(
        "MAP hyperparameters: amplitude {:.3}, lengthscale {:.3}, noise {:.2e}",
        h.amplitude(),
        h.lengthscale(),
        h.noise()
    );
    println!("objective {:.3} -> {:.3}", fitted.objective_trace[0], fitted.objective_trace.last().unwrap());

    let fit = gp_fit(&x, &ys, h)?;
    println!("log marginal likelihood {:.3}", fit.log_marginal_likelihood());
    let grid: Vec<f64> = (0..13).map(|i| i as f64 * 0.5).collect();
    let pred = gp_predict(&fit, &Matrix::column(&grid))?;
    println!("{:>6} {:>9} {:>9} {:>9}", "x", "sin(x)", "mean", "2σ");
    for ((x, m), s) in grid.iter().zip(&pred.mean).zip(pred.std()) {
        println!("{x:6.2} {:9.4} {m:9.4} {:9.4}", x.sin(), 2.0 * s);
    }
    Ok(())
}
