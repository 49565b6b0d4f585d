//! Trains a deep-kernel GP on every card image with its suit as the target and
//! reports how well the 2-D latent separates the suits.

use latent_forge::cards::{encode_target, generate_cards_dataset, CardsConfig, TargetKind};
use latent_forge::dkl::{dkl_train, DklConfig};
use latent_forge::latent::{accuracy, knn_classify};
use latent_forge::runner::commands::holdout_split;

fn main() -> latent_forge::Result<()> {
    let data = generate_cards_dataset(&CardsConfig { per_suit: 200, size: 16 }, 11)?;
    let x = data.inputs();
    let y = encode_target(&data, TargetKind::OrdinalSuit);
    let (train, hold) = holdout_split(data.len(), 0.2, 11)?;

    let cfg = DklConfig { hidden_sizes: vec![32, 32], steps: 150, batch_size: Some(256), ..DklConfig::default() };
    let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
    let model = dkl_train(&x.select_rows(&train), &yt, &cfg, 5)?;
    let trace = &model.meta.objective_trace;
    println!("{} training images, objective {:.1} -> {:.1}", train.len(), trace[0], trace.last().unwrap());

    let z = model.embed(&x)?;
    let labels: Vec<usize> = y.iter().map(|&v| v as usize).collect();
    let pick = |idx: &[usize]| idx.iter().map(|&i| z[i]).collect::<Vec<_>>();
    let lab = |idx: &[usize]| idx.iter().map(|&i| labels[i]).collect::<Vec<_>>();
    let predicted = knn_classify(&pick(&train), &lab(&train), &pick(&hold), 5)?;
    println!(
        "5-NN suit accuracy in the latent on {} held-out images: {:.3}",
        hold.len(),
        accuracy(&predicted, &lab(&hold))
    );
    Ok(())
}
