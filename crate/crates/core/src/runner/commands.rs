use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{PoolSource, RunConfig};
use super::container::{DatasetContainer, MetaTable};
use super::plots::{read_bin_rows, render_heatmap, render_scatter, surface_rows, write_bin_rows};
use crate::bo::{bo_run, random_baseline, replay_steps, verify_recorded_trace, write_trace_csv, DklSurrogate};
use crate::cards::{generate_cards_dataset, Suit, TargetKind};
use crate::dkl::{dkl_objective_grad, dkl_train, DklModel};
use crate::error::{Error, Result};
use crate::ferrosim::{
    generate_field_family, hysteresis_loop, run_simulation, simulate_sweep, sweep_seed, FieldCurve, Targets,
};
use crate::gp::{map_objective_grad, KernelHyper, MapPrior};
use crate::latent::{accuracy, binned_mean_surface, knn_classify, LatentPoint};
use crate::ndcore::{grad_check, Matrix, Mlp};
use crate::seed::{component_rng, derive_seed};
use crate::vae::{vae_decode_grid, vae_train, VaeModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    GenCards,
    GenFields,
    SimulateSweep,
    TrainVae,
    TrainDklStatic,
    RunBo,
    ExportPlots,
    GradCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::GenCards => "gen-cards",
            Command::GenFields => "gen-fields",
            Command::SimulateSweep => "simulate-sweep",
            Command::TrainVae => "train-vae",
            Command::TrainDklStatic => "train-dkl-static",
            Command::RunBo => "run-bo",
            Command::ExportPlots => "export-plots",
            Command::GradCheck => "grad-check",
        }
    }
}

/// Written as `run.json` next to the artifacts of every command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Command,
    pub config: RunConfig,
    pub seed: u64,
    /// Paths relative to the output directory.
    pub artifacts: Vec<String>,
    pub wall_clock_seconds: f64,
    pub version: String,
}

pub const MANIFEST_FILE: &str = "run.json";

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn container(&mut self, sub: &str, c: &DatasetContainer) -> Result<()> {
        let dir = if sub.is_empty() { self.dir.clone() } else { self.dir.join(sub) };
        for f in c.save(&dir)? {
            self.files.push(if sub.is_empty() { f } else { format!("{sub}/{f}") });
        }
        Ok(())
    }

    fn json(&mut self, name: &str, v: &impl Serialize) -> Result<()> {
        let p = self.path(name);
        fs::write(p, serde_json::to_string_pretty(v)?)?;
        Ok(())
    }
}

/// Runs one command into `out`, writing its artifacts and `run.json`.
pub fn run_command(cmd: Command, cfg: &RunConfig, out: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    fs::create_dir_all(out)?;
    let mut o = Outputs { dir: out.to_path_buf(), files: Vec::new() };
    match cmd {
        Command::GenCards => o.container("", &cards_container(cfg)?)?,
        Command::GenFields => o.container("", &fields_container(cfg)?)?,
        Command::SimulateSweep => simulate_sweep_cmd(cfg, &mut o)?,
        Command::TrainVae => train_vae_cmd(cfg, &mut o)?,
        Command::TrainDklStatic => train_dkl_cmd(cfg, &mut o)?,
        Command::RunBo => run_bo_cmd(cfg, &mut o)?,
        Command::ExportPlots => export_plots_cmd(cfg, &mut o)?,
        Command::GradCheck => grad_check_cmd(cfg, &mut o)?,
    }
    let manifest = RunManifest {
        command: cmd,
        config: cfg.clone(),
        seed: cfg.seed,
        artifacts: o.files,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    fs::write(out.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

pub fn cards_container(cfg: &RunConfig) -> Result<DatasetContainer> {
    let d = generate_cards_dataset(&cfg.cards, derive_seed(cfg.seed, "cards", 0))?;
    let mut t = Vec::with_capacity(3 * d.len());
    for c in &d.images {
        t.extend([c.suit.label() as f64, c.rotation, c.shear]);
    }
    let meta = MetaTable {
        columns: vec!["index".into(), "suit_name".into()],
        rows: d.images.iter().enumerate().map(|(i, c)| vec![i.to_string(), c.suit.name().into()]).collect(),
    };
    Ok(DatasetContainer {
        inputs: d.inputs(),
        targets: Some(Matrix::from_vec(d.len(), 3, t)?),
        target_names: vec!["suit".into(), "rotation".into(), "shear".into()],
        meta,
        seed: cfg.seed,
        source: "cards".into(),
    })
}

pub fn fields_container(cfg: &RunConfig) -> Result<DatasetContainer> {
    let (curves, inputs) = generate_field_family(&cfg.fields, derive_seed(cfg.seed, "fields", 0))?;
    let rows = curves
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let p = c.params.expect("generated curves carry parameters");
            vec![i.to_string(), p.amplitude.to_string(), p.alpha.to_string(), p.omega.to_string(), p.offset.to_string()]
        })
        .collect();
    let columns = ["index", "amplitude", "alpha", "omega", "offset"].map(String::from).to_vec();
    Ok(DatasetContainer {
        inputs,
        targets: None,
        target_names: Vec::new(),
        meta: MetaTable { columns, rows },
        seed: cfg.seed,
        source: "fields".into(),
    })
}

fn curves_of(c: &DatasetContainer) -> Vec<FieldCurve> {
    (0..c.n_rows()).map(|i| FieldCurve::from_samples(c.inputs.row(i).to_vec())).collect()
}

/// Adds the three FerroSIM targets to a field-curve container.
pub fn sweep_container(mut c: DatasetContainer, cfg: &RunConfig) -> Result<DatasetContainer> {
    let targets = simulate_sweep(&curves_of(&c), &cfg.ferrosim, c.seed)?;
    let data = targets.iter().flat_map(|t| t.to_array()).collect();
    c.targets = Some(Matrix::from_vec(targets.len(), 3, data)?);
    c.target_names = Targets::NAMES.map(String::from).to_vec();
    c.source = "ferrosim-sweep".into();
    Ok(c)
}

/// The dataset named in the config, or one generated from `data.source`.
pub fn load_pool(cfg: &RunConfig) -> Result<DatasetContainer> {
    match (&cfg.data.dataset, cfg.data.source) {
        (Some(p), _) => DatasetContainer::load(p),
        (None, PoolSource::Cards) => cards_container(cfg),
        (None, PoolSource::Fields) => sweep_container(fields_container(cfg)?, cfg),
    }
}

/// Target column by name, or one-vs-rest on the `suit` column for a suit name.
pub fn resolve_target(c: &DatasetContainer, spec: &str) -> Result<Vec<f64>> {
    if c.targets.is_none() {
        return Err(Error::Config(format!("dataset ({}) has no target columns", c.source)));
    }
    if let Some(col) = c.target_column(spec) {
        return Ok(col);
    }
    if let (Ok(TargetKind::OneVsRest(suit)), Some(labels)) = (spec.parse::<TargetKind>(), c.target_column("suit")) {
        return Ok(labels.iter().map(|&l| f64::from(u8::from(l == suit.label() as f64))).collect());
    }
    Err(Error::Config(format!(
        "unknown target `{spec}`; available: {:?} or a suit name ({})",
        c.target_names,
        Suit::ALL.map(|s| s.name()).join(", ")
    )))
}

/// Maps inputs into [0, 1] for the Bernoulli decoder: unchanged when already
/// there, otherwise `0.5 + 0.5·tanh(x / rms)`.
pub fn vae_inputs(x: &Matrix) -> Matrix {
    if x.as_slice().iter().all(|v| (0.0..=1.0).contains(v)) {
        return x.clone();
    }
    let n = x.as_slice().len().max(1) as f64;
    let rms = (x.as_slice().iter().map(|v| v * v).sum::<f64>() / n).sqrt().max(1e-12);
    x.map(|v| 0.5 + 0.5 * (v / rms).tanh())
}

/// Rows of a latent export: index, two coordinates, extra columns, then ground truth.
fn write_latent_csv(
    path: &Path,
    coord_names: [&str; 2],
    rows: &[usize],
    points: &[LatentPoint],
    extra: &[(&str, Vec<String>)],
    pool: &DatasetContainer,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let meta_cols: Vec<usize> = (0..pool.meta.columns.len()).filter(|&j| pool.meta.columns[j] != "index").collect();
    let mut header = vec!["index".to_string(), coord_names[0].into(), coord_names[1].into()];
    header.extend(extra.iter().map(|(n, _)| n.to_string()));
    header.extend(meta_cols.iter().map(|&j| pool.meta.columns[j].clone()));
    header.extend(pool.target_names.iter().cloned());
    w.write_record(&header)?;
    for (k, (&i, p)) in rows.iter().zip(points).enumerate() {
        let mut rec = vec![i.to_string(), p.d1.to_string(), p.d2.to_string()];
        rec.extend(extra.iter().map(|(_, v)| v[k].clone()));
        rec.extend(meta_cols.iter().map(|&j| pool.meta.rows[i][j].clone()));
        if let Some(t) = &pool.targets {
            rec.extend(t.row(i).iter().map(f64::to_string));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn strings(v: &[f64]) -> Vec<String> {
    v.iter().map(f64::to_string).collect()
}

fn write_series(path: &Path, names: [&str; 2], values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(names)?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([i.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn simulate_sweep_cmd(cfg: &RunConfig, o: &mut Outputs) -> Result<()> {
    let fields = match &cfg.data.dataset {
        Some(p) => DatasetContainer::load(p)?,
        None => fields_container(cfg)?,
    };
    let swept = sweep_container(fields, cfg)?;
    let mut w = csv::Writer::from_path(o.path("sweep.csv"))?;
    w.write_record(["index", "curl", "normalized_curl", "total_polarization"])?;
    let t = swept.targets.as_ref().expect("sweep sets targets");
    for i in 0..t.rows() {
        let mut rec = vec![i.to_string()];
        rec.extend(t.row(i).iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    o.container("dataset", &swept)
}

fn train_vae_cmd(cfg: &RunConfig, o: &mut Outputs) -> Result<()> {
    let pool = load_pool(cfg)?;
    let x = vae_inputs(&pool.inputs);
    let model = vae_train(&x, &cfg.vae, derive_seed(cfg.seed, "vae", 0))?;
    model.to_checkpoint().save(&o.path("vae.ckpt"))?;
    let z = model.embed(&x)?;
    let rows: Vec<usize> = (0..pool.n_rows()).collect();
    write_latent_csv(&o.path("latent.csv"), ["z1", "z2"], &rows, &z, &[], &pool)?;
    write_series(&o.path("loss_trace.csv"), ["epoch", "loss"], &model.loss_trace)?;
    let grid = vae_decode_grid(&model, cfg.export.grid_n)?;
    let n = grid.rows();
    let meta = MetaTable {
        columns: vec!["index".into(), "z1".into(), "z2".into()],
        rows: {
            let z = crate::vae::latent_grid(cfg.export.grid_n)?;
            (0..n).map(|i| vec![i.to_string(), z[(i, 0)].to_string(), z[(i, 1)].to_string()]).collect()
        },
    };
    let grid_container = DatasetContainer {
        inputs: grid,
        targets: None,
        target_names: vec![],
        meta,
        seed: cfg.seed,
        source: "vae-decode-grid".into(),
    };
    o.container("decoded_grid", &grid_container)
}

/// Seeded split of `0..n` into (train, holdout), each ascending.
pub fn holdout_split(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::Config(format!("holdout_fraction must be in [0, 1), got {fraction}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut component_rng(seed, "holdout", 0));
    let n_hold = (fraction * n as f64).round() as usize;
    let mut hold = order[..n_hold].to_vec();
    let mut train = order[n_hold..].to_vec();
    hold.sort_unstable();
    train.sort_unstable();
    Ok((train, hold))
}

fn rmse(pred: &[f64], truth: &[f64]) -> f64 {
    (pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / truth.len().max(1) as f64).sqrt()
}

/// Result summary written as `metrics.json` by train-dkl-static.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaticMetrics {
    pub n_train: usize,
    pub n_holdout: usize,
    pub target_std: f64,
    pub train_rmse: f64,
    pub holdout_rmse: Option<f64>,
    /// 5-NN accuracy of held-out latent points against training points, for integer targets.
    pub knn_accuracy: Option<f64>,
}

fn train_dkl_cmd(cfg: &RunConfig, o: &mut Outputs) -> Result<()> {
    let pool = load_pool(cfg)?;
    let y = resolve_target(&pool, &cfg.data.target)?;
    let (train, hold) = holdout_split(pool.n_rows(), cfg.data.holdout_fraction, cfg.seed)?;
    let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
    let model = dkl_train(&pool.inputs.select_rows(&train), &yt, &cfg.dkl, derive_seed(cfg.seed, "dkl-static", 0))?;
    model.to_checkpoint().save(&o.path("dkl.ckpt"))?;
    let pred = model.predict(&pool.inputs)?;
    let z = model.embed(&pool.inputs)?;
    let rows: Vec<usize> = (0..pool.n_rows()).collect();
    let mut split = vec!["train".to_string(); pool.n_rows()];
    hold.iter().for_each(|&i| split[i] = "holdout".into());
    let extra = [("pred_mean", strings(&pred.mean)), ("pred_std", strings(&pred.std())), ("split", split)];
    write_latent_csv(&o.path("latent.csv"), ["d1", "d2"], &rows, &z, &extra, &pool)?;
    write_series(&o.path("objective_trace.csv"), ["step", "objective"], &model.meta.objective_trace)?;

    let pick = |idx: &[usize], v: &[f64]| idx.iter().map(|&i| v[i]).collect::<Vec<f64>>();
    let integer = y.iter().all(|v| v.fract() == 0.0 && *v >= 0.0);
    let knn_accuracy = if integer && !hold.is_empty() {
        let label = |idx: &[usize]| idx.iter().map(|&i| y[i] as usize).collect::<Vec<usize>>();
        let zt: Vec<LatentPoint> = train.iter().map(|&i| z[i]).collect();
        let zh: Vec<LatentPoint> = hold.iter().map(|&i| z[i]).collect();
        Some(accuracy(&knn_classify(&zt, &label(&train), &zh, 5)?, &label(&hold)))
    } else {
        None
    };
    let metrics = StaticMetrics {
        n_train: train.len(),
        n_holdout: hold.len(),
        target_std: model.target_std,
        train_rmse: rmse(&pick(&train, &pred.mean), &yt),
        holdout_rmse: (!hold.is_empty()).then(|| rmse(&pick(&hold, &pred.mean), &pick(&hold, &y))),
        knn_accuracy,
    };
    o.json("metrics.json", &metrics)
}

/// Result summary written as `summary.json` by run-bo.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoSummary {
    pub n_init: usize,
    pub n_steps: usize,
    pub measured: usize,
    pub best: f64,
    pub baseline_best: Option<f64>,
    /// Largest target in the pool, when every target is known up front.
    pub pool_best: Option<f64>,
    pub recorded_trace_verified: bool,
    pub replayed_steps: Vec<usize>,
}

fn run_bo_cmd(cfg: &RunConfig, o: &mut Outputs) -> Result<()> {
    let pool = load_pool(cfg)?;
    let n = pool.n_rows();
    let known: Option<Vec<f64>> =
        if cfg.run_bo.live_oracle { None } else { Some(resolve_target(&pool, &cfg.data.target)?) };
    let curves = curves_of(&pool);
    let init_seed = sweep_seed(pool.seed);
    let target = cfg.data.target.clone();
    if known.is_none() && !Targets::NAMES.contains(&target.as_str()) {
        return Err(Error::Config(format!("live oracle target must be one of {:?}", Targets::NAMES)));
    }
    let mut oracle = |i: usize| -> Result<f64> {
        match &known {
            Some(y) => Ok(y[i]),
            None => Ok(run_simulation(&curves[i], &cfg.ferrosim, init_seed)?.targets.get(&target).expect("checked")),
        }
    };
    let surrogate = DklSurrogate { config: cfg.dkl.clone() };
    let bo_seed = derive_seed(cfg.seed, "bo", 0);
    let run = bo_run(&pool.inputs, &mut oracle, &surrogate, &cfg.bo, bo_seed)?;
    let recorded_trace_verified = if cfg.bo.record_predictions {
        verify_recorded_trace(&run.state, &cfg.bo.acquisition)?;
        true
    } else {
        false
    };
    replay_steps(&run.state, &pool.inputs, &surrogate, &cfg.bo.acquisition, &cfg.run_bo.replay_steps)?;
    write_trace_csv(&run.state.trace, fs::File::create(o.path("trace.csv"))?)?;
    run.final_model.to_checkpoint().save(&o.path("dkl.ckpt"))?;

    let baseline_best = if cfg.run_bo.baseline {
        let b = random_baseline(n, &mut oracle, &cfg.bo, bo_seed)?;
        write_trace_csv(&b.trace, fs::File::create(o.path("baseline_trace.csv"))?)?;
        Some(b.best())
    } else {
        None
    };
    write_pool_latents(o, &pool, &run.final_model, &run.state.measured_indices, run.state.n_init)?;
    let summary = BoSummary {
        n_init: run.state.n_init,
        n_steps: run.state.steps_done(),
        measured: run.state.measured_indices.len(),
        best: run.state.best(),
        baseline_best,
        pool_best: known.as_ref().map(|y| y.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        recorded_trace_verified,
        replayed_steps: cfg.run_bo.replay_steps.clone(),
    };
    o.json("summary.json", &summary)
}

fn write_pool_latents(
    o: &mut Outputs,
    pool: &DatasetContainer,
    model: &DklModel,
    measured: &[usize],
    n_init: usize,
) -> Result<()> {
    let pred = model.predict(&pool.inputs)?;
    let std = pred.std();
    let z = model.embed(&pool.inputs)?;
    let n = pool.n_rows();
    let mut status = vec!["unexplored".to_string(); n];
    let mut order = vec![String::new(); n];
    for (k, &i) in measured.iter().enumerate() {
        status[i] = if k < n_init { "init".into() } else { "acquired".into() };
        order[i] = k.to_string();
    }
    let write = |path: PathBuf, rows: Vec<usize>| {
        let pts: Vec<LatentPoint> = rows.iter().map(|&i| z[i]).collect();
        let col = |v: &[String]| rows.iter().map(|&i| v[i].clone()).collect::<Vec<_>>();
        let extra = [
            ("pred_mean", col(&strings(&pred.mean))),
            ("pred_std", col(&strings(&std))),
            ("status", col(&status)),
            ("order", col(&order)),
        ];
        write_latent_csv(&path, ["d1", "d2"], &rows, &pts, &extra, pool)
    };
    write(o.path("pool_latent.csv"), (0..n).collect())?;
    let mut explored = measured.to_vec();
    explored.sort_unstable();
    write(o.path("explored.csv"), explored)?;
    write(o.path("unexplored.csv"), (0..n).filter(|&i| status[i] == "unexplored").collect())
}

/// Columns of a latent CSV: coordinates and one numeric color column.
fn read_latent_columns(path: &Path, preferred: &[&str]) -> Result<(Vec<LatentPoint>, Vec<f64>, String)> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    let key = preferred
        .iter()
        .find(|k| header.iter().any(|h| h == *k))
        .ok_or_else(|| Error::Config(format!("{} has none of the columns {preferred:?}", path.display())))?
        .to_string();
    let kj = header.iter().position(|h| *h == key).unwrap();
    let num = |s: &str, col: &str| {
        s.parse::<f64>()
            .map_err(|_| Error::Config(format!("{}: column `{col}` value `{s}` is not numeric", path.display())))
    };
    let (mut pts, mut vals) = (Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec?;
        pts.push(LatentPoint { d1: num(&rec[1], &header[1])?, d2: num(&rec[2], &header[2])? });
        vals.push(num(&rec[kj], &key)?);
    }
    Ok((pts, vals, key))
}

fn export_plots_cmd(cfg: &RunConfig, o: &mut Outputs) -> Result<()> {
    let run_dir = cfg.data.run_dir.as_ref().ok_or_else(|| Error::Config("export-plots needs data.run_dir".into()))?;
    if !run_dir.is_dir() {
        return Err(Error::Config(format!("run directory {} does not exist", run_dir.display())));
    }
    let target = cfg.data.target.as_str();
    let preferred = [target, "curl", "suit", "pred_mean"];
    let mut found = 0;
    for stem in ["latent", "pool_latent"] {
        let src = run_dir.join(format!("{stem}.csv"));
        if !src.exists() {
            continue;
        }
        found += 1;
        let (pts, vals, key) = read_latent_columns(&src, &preferred)?;
        let mut w = csv::Writer::from_path(o.path(&format!("scatter_{stem}.csv")))?;
        w.write_record(["x", "y", "color_value", "color_key"])?;
        for (p, v) in pts.iter().zip(&vals) {
            w.write_record([p.d1.to_string(), p.d2.to_string(), v.to_string(), key.clone()])?;
        }
        w.flush()?;
        render_scatter(&pts, &vals, cfg.export.image_size)?.save_png(&o.path(&format!("scatter_{stem}.png")))?;
        let surface = binned_mean_surface(&pts, &vals, cfg.export.bins)?;
        let binned = o.path(&format!("binned_{stem}.csv"));
        write_bin_rows(&surface_rows(&surface), fs::File::create(&binned)?)?;
        render_heatmap(&read_bin_rows(&binned)?, cfg.export.image_size)?
            .save_png(&o.path(&format!("heatmap_{stem}.png")))?;
    }
    if found == 0 {
        return Err(Error::Config(format!("no latent.csv or pool_latent.csv in {}", run_dir.display())));
    }
    let e = &cfg.export;
    let lp = hysteresis_loop(
        e.hysteresis_amplitude,
        e.hysteresis_periods,
        e.hysteresis_steps_per_period,
        &cfg.ferrosim,
        derive_seed(cfg.seed, "hysteresis", 0),
    )?;
    let mut w = csv::Writer::from_path(o.path("hysteresis.csv"))?;
    w.write_record(["field", "mean_px"])?;
    for (f, p) in &lp.points {
        w.write_record([f.to_string(), p.to_string()])?;
    }
    w.flush()?;
    o.json(
        "hysteresis_summary.json",
        &json!({
            "area": lp.area(),
            "remnant_polarization": lp.remnant_polarization(),
            "coercive_field": lp.coercive_field(),
            "saturation": cfg.ferrosim.saturation(),
        }),
    )
}

fn random_values(n: usize, rng: &mut impl Rng, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

/// Relative finite-difference errors of every analytic gradient, per seed.
pub fn gradient_suite(seeds: u64, master: u64) -> Result<Vec<(&'static str, u64, f64)>> {
    let mut out = Vec::new();
    for s in 0..seeds {
        let mut rng = component_rng(master, "grad-check", s);
        let x = Matrix::from_vec(6, 3, random_values(18, &mut rng, 1.0))?;
        let y = random_values(6, &mut rng, 1.0);

        let net = Mlp::new(&[3, 5, 2], derive_seed(master, "grad-mlp", s))?;
        let up = Matrix::from_vec(6, 2, random_values(12, &mut rng, 1.0))?;
        let e = grad_check(
            |p| {
                let mut m = net.clone();
                m.set_flat_params(p)?;
                let out = m.forward(&x)?;
                let v = out.as_slice().iter().zip(up.as_slice()).map(|(a, b)| a * b).sum();
                Ok((v, m.backward(&x, &up)?.params))
            },
            &net.flat_params(),
        )?;
        out.push(("mlp", s, e));

        let h0 = random_values(3, &mut rng, 0.5);
        let prior = MapPrior::default();
        let e = grad_check(
            |h| {
                let g = map_objective_grad(&x, &y, &KernelHyper::from_array([h[0], h[1], h[2] - 1.0]), &prior, false)?;
                Ok((g.value, g.d_hyper.to_vec()))
            },
            &h0,
        )?;
        out.push(("gp_map", s, e));

        let enc = Mlp::new(&[3, 4, 2], derive_seed(master, "grad-dkl", s))?;
        let n_enc = enc.param_count();
        let mut p0 = enc.flat_params();
        p0.extend([0.1, 0.2, -2.0]);
        let e = grad_check(
            |p| {
                let mut m = enc.clone();
                m.set_flat_params(&p[..n_enc])?;
                let h = KernelHyper::from_array([p[n_enc], p[n_enc + 1], p[n_enc + 2]]);
                dkl_objective_grad(&m, &h, &x, &y, &prior)
            },
            &p0,
        )?;
        out.push(("dkl_joint", s, e));

        let vae = VaeModel::new(5, &[4], 1.0, derive_seed(master, "grad-vae", s))?;
        let xv = Matrix::from_vec(4, 5, random_values(20, &mut rng, 1.0).iter().map(|v| v.abs()).collect())?;
        let eps = Matrix::from_vec(4, 2, random_values(8, &mut rng, 1.5))?;
        let e = grad_check(
            |p| {
                let mut m = vae.clone();
                m.set_flat_params(p)?;
                let (l, g) = m.loss_and_grad(&xv, &eps)?;
                Ok((l.total, g))
            },
            &vae.flat_params(),
        )?;
        out.push(("vae", s, e));
    }
    Ok(out)
}

fn grad_check_cmd(cfg: &RunConfig, o: &mut Outputs) -> Result<()> {
    let results = gradient_suite(cfg.grad_check.seeds, cfg.seed)?;
    let mut w = csv::Writer::from_path(o.path("grad_check.csv"))?;
    w.write_record(["component", "seed", "relative_error"])?;
    for (c, s, e) in &results {
        w.write_record([c.to_string(), s.to_string(), e.to_string()])?;
    }
    w.flush()?;
    let worst = results.iter().map(|r| r.2).fold(0.0, f64::max);
    if worst > cfg.grad_check.tolerance {
        let (c, s, e) = results.iter().find(|r| r.2 == worst).unwrap();
        return Err(crate::error::numeric(format!("{c} gradient (seed {s}) has relative error {e}")));
    }
    Ok(())
}
