//! `gaitscope`: synthesize, extract, evaluate and explain gait recordings.

mod config;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use gaitscope::evaluation::{run_nested, write_predictions_csv, FoldOutcome, ReportFile};
use gaitscope::explain::{
    aggregate_keypoints, fold_importance, heatmap_matrix, write_heatmap_csv, write_importance_csv, write_keypoint_csv,
};
use gaitscope::features::{read_matrix_csv, write_matrix_csv, FeatureMatrix};
use gaitscope::pipeline::extract_manifest;
use gaitscope::synth::{generate, SynthConfig};
use gaitscope::{Error, View};
use serde::{Deserialize, Serialize};

use config::{RunConfig, ViewSelection};

#[derive(Parser)]
#[command(name = "gaitscope", version, about = "Gait impairment classification from pose keypoints")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic pose dataset and its manifest.
    Synth(SynthArgs),
    /// Clean, window and featurize every video of a manifest.
    Extract(CommonArgs),
    /// Nested leave-one-subject-out evaluation.
    Evaluate(CommonArgs),
    /// Permutation importance of a finished evaluation run.
    Explain(CommonArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    subjects: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    fps: Option<f64>,
    /// Seconds per recording.
    #[arg(long)]
    duration: Option<f64>,
    /// Keypoint noise in pixels.
    #[arg(long)]
    noise: Option<f64>,
}

#[derive(Args, Default)]
pub struct CommonArgs {
    /// Flat `key = value` file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Directory holding `features_<view>.csv` and `rows_<view>.csv`.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Output directory; for explain, the evaluation run directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// frontal, sagittal or combined.
    #[arg(long)]
    pub view: Option<String>,
    /// forest or gbt.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub fdr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Feature-grid override, e.g. `--grid quantiles=0.1,0.9`.
    #[arg(long, value_name = "KEY=VALUE")]
    pub grid: Vec<String>,
    /// Search-space override, e.g. `--search max_depth=2..4`.
    #[arg(long, value_name = "KEY=VALUE")]
    pub search: Vec<String>,
}

/// Written next to the report so explain can find the models and matrices.
#[derive(Serialize, Deserialize)]
struct RunManifest {
    seed: u64,
    features: PathBuf,
    views: Vec<View>,
    folds: Vec<PathBuf>,
}

fn matrix_paths(dir: &Path, view: View) -> (PathBuf, PathBuf) {
    (dir.join(format!("features_{view}.csv")), dir.join(format!("rows_{view}.csv")))
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn synth(args: SynthArgs) -> anyhow::Result<()> {
    let out = args.out.ok_or_else(|| Error::Usage("synth needs --out".into()))?;
    let defaults = SynthConfig::default();
    let cfg = SynthConfig {
        n_subjects: args.subjects.unwrap_or(defaults.n_subjects),
        seed: args.seed.unwrap_or(defaults.seed),
        fps: args.fps.unwrap_or(defaults.fps),
        duration_s: args.duration.unwrap_or(defaults.duration_s),
        noise_std: args.noise.unwrap_or(defaults.noise_std),
        ..defaults
    };
    let manifest = generate(&cfg, &out)?;
    println!("{}", manifest.display());
    Ok(())
}

fn extract(cfg: &RunConfig) -> anyhow::Result<BTreeMap<View, FeatureMatrix>> {
    let manifest = cfg.require_manifest()?;
    let out = cfg.require_out()?;
    create_dir(out)?;
    let matrices = extract_manifest(manifest, &cfg.view.views(), &cfg.grid)?;
    for (view, fm) in &matrices {
        let (values, meta) = matrix_paths(out, *view);
        write_matrix_csv(fm, &values, &meta)?;
        for (family, n) in &fm.degenerate {
            log::info!("{view}: {n} degenerate {family} cells set to 0");
        }
        println!("{}", values.display());
    }
    Ok(matrices)
}

fn load_matrices(dir: &Path, views: &[View]) -> anyhow::Result<BTreeMap<View, FeatureMatrix>> {
    views
        .iter()
        .map(|&v| {
            let (values, meta) = matrix_paths(dir, v);
            Ok((v, read_matrix_csv(&values, &meta)?))
        })
        .collect()
}

fn evaluate(cfg: &RunConfig) -> anyhow::Result<()> {
    let out = cfg.require_out()?.to_path_buf();
    let eval = cfg.eval_config()?;
    let (features, matrices) = match &cfg.features {
        Some(dir) => (dir.clone(), load_matrices(dir, &cfg.view.views())?),
        None => (out.clone(), extract(cfg)?),
    };
    create_dir(&out)?;
    let run = run_nested(&matrices, &eval, cfg.view == ViewSelection::Combined)?;

    let fold_dir = out.join("folds");
    create_dir(&fold_dir)?;
    let mut fold_files = Vec::new();
    for f in &run.folds {
        let name = PathBuf::from("folds").join(format!("{}_r{}_f{}.json", f.view, f.repeat, f.fold));
        let path = out.join(&name);
        fs::write(&path, serde_json::to_string(f)?).with_context(|| format!("cannot write {}", path.display()))?;
        fold_files.push(name);
    }
    let manifest = RunManifest {
        seed: eval.seed,
        features: fs::canonicalize(&features).unwrap_or(features),
        views: matrices.keys().copied().collect(),
        folds: fold_files,
    };
    fs::write(out.join("run.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    write_predictions_csv(&run.predictions, &out.join("predictions.csv"))?;
    ReportFile::new(&eval, run.reports.clone()).save(&out.join("report.json"))?;
    for (name, report) in &run.reports {
        println!("[{name}]\n{}", report.table());
    }
    Ok(())
}

fn explain(cfg: &RunConfig) -> anyhow::Result<()> {
    let run_dir = cfg.require_out()?;
    let manifest_path = run_dir.join("run.json");
    let text = fs::read_to_string(&manifest_path)
        .with_context(|| format!("{} is not an evaluation run directory", run_dir.display()))?;
    let run: RunManifest = serde_json::from_str(&text).context("run.json is not a run manifest")?;
    let folds: Vec<FoldOutcome> = run
        .folds
        .iter()
        .map(|p| -> anyhow::Result<FoldOutcome> {
            let path = run_dir.join(p);
            let text = fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
            Ok(serde_json::from_str(&text)?)
        })
        .collect::<anyhow::Result<_>>()?;
    let features = cfg.features.clone().unwrap_or(run.features);
    for view in run.views {
        let fm = load_matrices(&features, &[view])?.remove(&view).expect("loaded view");
        let mine: Vec<&FoldOutcome> = folds.iter().filter(|f| f.view == view).collect();
        let scores = fold_importance(&fm, &mine, cfg.importance_repeats, run.seed)?;
        write_importance_csv(&scores, &run_dir.join(format!("importance_{view}.csv")))?;
        write_keypoint_csv(&aggregate_keypoints(&scores), &run_dir.join(format!("keypoints_{view}.csv")))?;
        let heatmap = heatmap_matrix(&scores, cfg.top_k)?;
        write_heatmap_csv(&heatmap, &run_dir.join(format!("heatmap_{view}.csv")))?;
        println!("{view}: {} columns scored", scores.len());
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Usage("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    match cli.command {
        Command::Synth(args) => synth(args),
        Command::Extract(args) => extract(&RunConfig::resolve(&args)?).map(|_| ()),
        Command::Evaluate(args) => evaluate(&RunConfig::resolve(&args)?),
        Command::Explain(args) => explain(&RunConfig::resolve(&args)?),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Usage(_) | Error::Config(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
