//! Plain VAE on card images: training loss, latent suit structure, and a
//! decoded sweep across the latent plane.

use latent_forge::cards::{generate_cards_dataset, CardsConfig};
use latent_forge::latent::{accuracy, knn_classify};
use latent_forge::vae::{vae_decode_grid, vae_train, VaeConfig};

fn main() -> latent_forge::Result<()> {
    let data = generate_cards_dataset(&CardsConfig { per_suit: 200, size: 16 }, 3)?;
    let x = data.inputs();
    let model = vae_train(&x, &VaeConfig { hidden_sizes: vec![64, 32], epochs: 30, ..VaeConfig::default() }, 3)?;
    println!("loss per epoch: first {:.2}, last {:.2}", model.loss_trace[0], model.loss_trace.last().unwrap());

    let z = model.embed(&x)?;
    let labels: Vec<usize> = data.images.iter().map(|c| c.suit.label()).collect();
    let even: Vec<usize> = (0..z.len()).step_by(2).collect();
    let odd: Vec<usize> = (1..z.len()).step_by(2).collect();
    let pts = |idx: &[usize]| idx.iter().map(|&i| z[i]).collect::<Vec<_>>();
    let lab = |idx: &[usize]| idx.iter().map(|&i| labels[i]).collect::<Vec<_>>();
    let pred = knn_classify(&pts(&even), &lab(&even), &pts(&odd), 5)?;
    println!("5-NN suit accuracy in the VAE latent: {:.3}", accuracy(&pred, &lab(&odd)));

    let grid = vae_decode_grid(&model, 5)?;
    let side = data.size;
    println!("decoded 5x5 latent grid, mean intensity per tile:");
    for r in 0..5 {
        let row: Vec<String> = (0..5)
            .map(|c| {
                let tile = grid.row(r * 5 + c);
                format!("{:.3}", tile.iter().sum::<f64>() / (side * side) as f64)
            })
            .collect();
        println!("  {}", row.join(" "));
    }
    Ok(())
}
