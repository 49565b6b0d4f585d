//! The runner as a library: a desk-scale preset with overrides, several
//! commands chained through run directories, and bitwise replay of a manifest.

use latent_forge::runner::commands::RunManifest;
use latent_forge::runner::{run_command, Command, RunConfig, MANIFEST_FILE};

fn main() -> latent_forge::Result<()> {
    let root = std::env::temp_dir().join("latent-forge-pipeline");
    let cfg = RunConfig::preset("desk-cards")?
        .with_override("cards.per_suit=100")?
        .with_override("bo.n_steps=20")?
        .with_override("run_bo.baseline=true")?;

    let bo_dir = root.join("run-bo");
    let m = run_command(Command::RunBo, &cfg, &bo_dir)?;
    println!("run-bo: {:.1}s, artifacts {:?}", m.wall_clock_seconds, m.artifacts);
    println!("{}", std::fs::read_to_string(bo_dir.join("summary.json"))?);

    let plots = cfg.with_override(&format!("data.run_dir={:?}", bo_dir.display().to_string()))?;
    let m = run_command(Command::ExportPlots, &plots, &root.join("plots"))?;
    println!("export-plots: {:?}", m.artifacts);

    let manifest: RunManifest = serde_json::from_str(&std::fs::read_to_string(bo_dir.join(MANIFEST_FILE))?)?;
    let replay_dir = root.join("replay");
    run_command(manifest.command, &manifest.config, &replay_dir)?;
    for a in manifest.artifacts {
        let same = std::fs::read(bo_dir.join(&a))? == std::fs::read(replay_dir.join(&a))?;
        println!("replay {a}: {}", if same { "identical" } else { "differs" });
    }
    Ok(())
}
