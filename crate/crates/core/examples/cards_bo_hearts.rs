//! Active learning over the card pool: DKL-BO searches for hearts
//! (one-vs-rest target) and is compared with random acquisition.

use latent_forge::bo::{bo_run, random_baseline, BoConfig, DklSurrogate};
use latent_forge::cards::{encode_target, generate_cards_dataset, CardsConfig, Suit, TargetKind};
use latent_forge::dkl::DklConfig;

fn main() -> latent_forge::Result<()> {
    let data = generate_cards_dataset(&CardsConfig { per_suit: 250, size: 16 }, 1)?;
    let x = data.inputs();
    let y = encode_target(&data, TargetKind::OneVsRest(Suit::Hearts));
    let mut oracle = |i: usize| Ok(y[i]);

    let cfg = BoConfig { n_init: 20, n_steps: 60, ..BoConfig::default() };
    let surrogate =
        DklSurrogate { config: DklConfig { hidden_sizes: vec![32, 32], steps: 100, ..DklConfig::default() } };
    let run = bo_run(&x, &mut oracle, &surrogate, &cfg, 42)?;
    let random = random_baseline(x.rows(), &mut oracle, &cfg, 42)?;

    let hits = |idx: &[usize]| idx.iter().filter(|&&i| y[i] == 1.0).count();
    let acquired = run.state.acquired_indices();
    println!("pool base rate of hearts: 0.25");
    println!("DKL-BO: {} of {} acquisitions are hearts", hits(acquired), acquired.len());
    println!(
        "random: {} of {} acquisitions are hearts",
        hits(random.acquired_indices()),
        random.acquired_indices().len()
    );
    for r in run.state.trace.iter().step_by(10) {
        println!(
            "step {:3}: chose {:4} acq {:8.3} mean {:6.3} std {:6.3} truth {}",
            r.step, r.chosen_index, r.acq_value, r.pred_mean, r.pred_std, r.true_target
        );
    }
    Ok(())
}
