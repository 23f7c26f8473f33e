//! `vofc` command implementations.
//!
//! Settings resolve as command-line flag, then config file, then built-in
//! default. Without `--config` the built-in synthetic benchmark is used.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use vofc_core::data::{self, provider_names, select_days, SeriesLayout};
use vofc_core::eval::{self, Baselines};
use vofc_core::ph::{self, build_ph_subproblem, save_trace_csv, TraceRow};
use vofc_core::single_level::{self, build_stm};
use vofc_core::solver::{export_lp_file, ExternalSolver};
use vofc_core::synth::{self, SynthParams};
use vofc_core::{Grid, RunConfig, ScenarioDay, Trainer, UcVariant, Weights};

/// Exit status of a successful run that did not converge.
pub const EXIT_NOT_CONVERGED: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "vofc", version, about = "Value-oriented forecast combination for unit commitment")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Penalty parameter of the consensus trainers.
    #[arg(long, global = true)]
    pub rho: Option<f64>,
    /// Consensus gap tolerance.
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// Days re-solved per push-forward iteration.
    #[arg(long, global = true)]
    pub dprime: Option<usize>,
    /// Day-ahead model used in training.
    #[arg(long, global = true)]
    pub variant: Option<UcVariant>,
    /// ph, pfph, stm, rmse or fixed.
    #[arg(long, global = true)]
    pub trainer: Option<Trainer>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for synthetic data.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for per-day solves.
    #[arg(long, global = true)]
    pub parallelism: Option<usize>,
    /// Suppress the resolved-config banner.
    #[arg(long, short, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train weights on the training days.
    Train,
    /// Score weight vectors on the test days.
    Evaluate(EvaluateArgs),
    /// Score the RMSE weights and the single-provider and average baselines.
    Baseline,
    /// Write LP files of the training models.
    Export(ExportArgs),
    /// Generate a synthetic grid, series and config.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct EvaluateArgs {
    /// Weight file written by `train`; repeatable.
    #[arg(long = "lambda")]
    pub lambda_files: Vec<PathBuf>,
    /// Inline weights such as `0.5,0.5`; repeatable.
    #[arg(long = "weights", value_delimiter = ';')]
    pub weights: Vec<String>,
    /// Train and score these trainers, e.g. `ph,stm,rmse`.
    #[arg(long, value_delimiter = ',')]
    pub trainers: Vec<Trainer>,
    /// Day-ahead model used when scoring.
    #[arg(long, default_value = "binary")]
    pub eval_variant: UcVariant,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ExportArgs {
    /// Consensus weights for the proximal term; defaults to uniform.
    #[arg(long, value_delimiter = ',')]
    pub lambda_bar: Vec<f64>,
    /// Multipliers shared by every day; defaults to zero.
    #[arg(long, value_delimiter = ',')]
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub days: Option<usize>,
}

/// Contents of `lambda.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaFile {
    pub trainer: Trainer,
    pub lambda: Weights,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subproblem_solves: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
}

impl LambdaFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// A trained weight vector with its diagnostics.
#[derive(Debug, Clone)]
pub struct Trained {
    pub file: LambdaFile,
    pub seconds: f64,
    pub trace: Option<Vec<TraceRow>>,
}

/// Run configuration after applying flags.
pub fn resolve_config(g: &GlobalArgs) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => data::load_config(p)?,
        None => {
            let mut c = RunConfig::new(Trainer::Ph);
            c.synth = Some(SynthParams::default());
            c
        }
    };
    if let Some(v) = g.rho {
        cfg.ph.rho = v;
    }
    if let Some(v) = g.eps {
        cfg.ph.eps = v;
    }
    if let Some(v) = g.dprime {
        cfg.ph.active_days = Some(v);
    }
    if let Some(v) = g.variant {
        cfg.ph.variant = v;
    }
    if let Some(v) = g.trainer {
        cfg.trainer = v;
    }
    if let Some(v) = &g.out {
        cfg.out = v.clone();
    }
    if let Some(v) = g.seed {
        cfg.seed = v;
        if let Some(s) = cfg.synth.as_mut() {
            s.seed = v;
        }
    }
    if let Some(v) = g.parallelism {
        cfg.ph.parallelism = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Grid, all days and provider names described by `cfg`.
pub fn load_data(cfg: &RunConfig) -> Result<(Grid, Vec<ScenarioDay>, Vec<String>)> {
    if let Some(p) = &cfg.synth {
        let d = synth::generate(p)?;
        let names = if cfg.providers.is_empty() { provider_names(p.providers()) } else { cfg.providers.clone() };
        return Ok((d.grid, d.days, names));
    }
    let (Some(g), Some(s), Some(a)) = (&cfg.grid, &cfg.series, &cfg.actuals) else {
        bail!("config names no data source");
    };
    let grid = data::load_grid(g)?;
    let mut layout = SeriesLayout::for_grid(&grid);
    layout.providers = cfg.providers.clone();
    let days = data::load_timeseries(s, a, &layout)?;
    let k = days.first().map_or(0, ScenarioDay::providers);
    let names = if cfg.providers.is_empty() { provider_names(k) } else { cfg.providers.clone() };
    Ok((grid, days, names))
}

fn split(cfg: &RunConfig, days: &[ScenarioDay]) -> Result<(Vec<ScenarioDay>, Vec<ScenarioDay>)> {
    let train = select_days(days, &cfg.train_days)?;
    let test = if cfg.test_days.is_empty() { train.clone() } else { select_days(days, &cfg.test_days)? };
    if train.is_empty() {
        bail!("no training days");
    }
    Ok((train, test))
}

/// Trains weights with `trainer` on `days`.
pub fn train(cfg: &RunConfig, trainer: Trainer, grid: &Grid, days: &[ScenarioDay]) -> Result<Trained> {
    let start = Instant::now();
    let (file, trace) = match trainer {
        Trainer::Ph | Trainer::Pfph => {
            let alg = if trainer == Trainer::Ph { ph::Algorithm::Ph } else { ph::Algorithm::Pfph };
            let out = ph::run(grid, days, &cfg.ph, alg)?;
            let file = LambdaFile {
                trainer,
                lambda: out.weights,
                converged: out.converged,
                iterations: Some(out.state.iteration),
                subproblem_solves: Some(out.total_solves),
                objective: None,
            };
            (file, Some(out.trace))
        }
        Trainer::Stm => {
            let out = match &cfg.external_solver {
                Some(cmd) => {
                    let ext = ExternalSolver::new(cmd.clone(), cfg.out.join("external"));
                    single_level::solve_stm_external(grid, days, &cfg.stm, &ext)?
                }
                None => single_level::solve_stm(grid, days, &cfg.stm)?,
            };
            if !out.bigm.is_clean() {
                log::warn!("big-M audit flagged {} values; consider a larger stm.big_m", out.bigm.flagged.len());
            }
            let file = LambdaFile {
                trainer,
                lambda: out.weights,
                converged: true,
                iterations: None,
                subproblem_solves: None,
                objective: Some(out.objective),
            };
            (file, None)
        }
        Trainer::Rmse => {
            let rmse = eval::rmse_all(days)?;
            let file = LambdaFile {
                trainer,
                lambda: eval::rmse_weights(&rmse)?,
                converged: true,
                iterations: None,
                subproblem_solves: None,
                objective: None,
            };
            (file, None)
        }
        Trainer::Fixed => {
            let w = cfg.fixed_lambda.clone().context("trainer \"fixed\" needs fixed_lambda")?;
            let file =
                LambdaFile { trainer, lambda: w, converged: true, iterations: None, subproblem_solves: None, objective: None };
            (file, None)
        }
    };
    Ok(Trained { file, seconds: start.elapsed().as_secs_f64(), trace })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn create_out(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))
}

fn pool(cfg: &RunConfig) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(cfg.ph.parallelism).build()?)
}

fn banner(cfg: &RunConfig, quiet: bool) {
    if !quiet {
        eprintln!("# resolved configuration\n{}", cfg.to_toml());
    }
}

/// Writes `lambda.json`, `trace.csv` (consensus trainers) and
/// `timing.json`. Returns whether training converged.
pub fn cmd_train(cfg: &RunConfig) -> Result<bool> {
    let (grid, days, _) = load_data(cfg)?;
    let (train_days, _) = split(cfg, &days)?;
    create_out(cfg)?;
    let t = train(cfg, cfg.trainer, &grid, &train_days)?;
    write_json(&cfg.out.join("lambda.json"), &t.file)?;
    if let Some(trace) = &t.trace {
        save_trace_csv(trace, cfg.out.join("trace.csv"))?;
    }
    write_json(&cfg.out.join("timing.json"), &serde_json::json!({ "train_seconds": t.seconds }))?;
    if !t.file.converged {
        log::warn!("{} stopped at the iteration limit before reaching the gap tolerance", cfg.trainer);
    }
    Ok(t.file.converged)
}

fn parse_weights(s: &str) -> Result<Weights> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().with_context(|| format!("weight {x:?} is not a number")))
        .collect::<Result<_>>()?;
    Ok(Weights::new(v)?)
}

/// Scores every requested weight vector and writes `report.csv`,
/// `report.md` and `breakdown.csv`. Returns whether every trainer run
/// converged.
pub fn cmd_evaluate(cfg: &RunConfig, args: &EvaluateArgs) -> Result<bool> {
    let (grid, days, _) = load_data(cfg)?;
    let (train_days, test_days) = split(cfg, &days)?;
    create_out(cfg)?;
    let mut methods: Vec<(String, Weights, f64)> = Vec::new();
    let mut converged = true;
    for p in &args.lambda_files {
        let f = LambdaFile::load(p)?;
        methods.push((f.trainer.label().to_string(), f.lambda, 0.0));
    }
    for s in &args.weights {
        methods.push((format!("Fixed ({s})"), parse_weights(s)?, 0.0));
    }
    let trainers = if methods.is_empty() && args.trainers.is_empty() { vec![cfg.trainer] } else { args.trainers.clone() };
    for tr in trainers {
        let t = train(cfg, tr, &grid, &train_days)?;
        converged &= t.file.converged;
        methods.push((tr.label().to_string(), t.file.lambda, t.seconds));
    }
    let k = test_days[0].providers();
    let pool = pool(cfg)?;
    let reports = pool.install(|| -> Result<Vec<eval::EvalReport>> {
        let base = Baselines::compute(&grid, &test_days, args.eval_variant)?;
        methods
            .iter()
            .map(|(name, w, secs)| Ok(eval::evaluate_with(&grid, name, w, &test_days, args.eval_variant, &base, *secs)?))
            .collect()
    })?;
    let rows: Vec<_> = reports.iter().map(eval::EvalReport::row).collect();
    eval::write_report(&rows, k, &cfg.out)?;
    let path = cfg.out.join("breakdown.csv");
    let f = fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?;
    eval::write_breakdown_csv(&reports, std::io::BufWriter::new(f))?;
    Ok(converged)
}

/// Scores RMSE weights next to every baseline weight vector.
pub fn cmd_baseline(cfg: &RunConfig) -> Result<()> {
    let (grid, days, names) = load_data(cfg)?;
    let (train_days, test_days) = split(cfg, &days)?;
    create_out(cfg)?;
    let start = Instant::now();
    let rmse = eval::rmse_all(&train_days)?;
    let w = eval::rmse_weights(&rmse)?;
    let secs = start.elapsed().as_secs_f64();
    let k = w.len();
    let mut methods = vec![("RMSE".to_string(), w.clone(), secs)];
    for (i, b) in eval::baseline_weights(k).into_iter().enumerate() {
        let name = if i < k { format!("Single ({})", names[i]) } else { "Average".into() };
        methods.push((name, b, 0.0));
    }
    let variant = UcVariant::Binary;
    let reports = pool(cfg)?.install(|| -> Result<Vec<eval::EvalReport>> {
        let base = Baselines::compute(&grid, &test_days, variant)?;
        methods.iter().map(|(n, w, s)| Ok(eval::evaluate_with(&grid, n, w, &test_days, variant, &base, *s)?)).collect()
    })?;
    let rows: Vec<_> = reports.iter().map(eval::EvalReport::row).collect();
    eval::write_report(&rows, k, &cfg.out)?;
    let file = LambdaFile {
        trainer: Trainer::Rmse,
        lambda: w,
        converged: true,
        iterations: None,
        subproblem_solves: None,
        objective: None,
    };
    write_json(&cfg.out.join("lambda.json"), &file)?;
    write_json(&cfg.out.join("rmse.json"), &serde_json::json!({ "providers": names, "rmse": rmse }))
}

/// Writes one LP file per training day's consensus subproblem and, when the
/// grid allows it, the single-level model. Returns the written paths.
pub fn cmd_export(cfg: &RunConfig, args: &ExportArgs) -> Result<Vec<PathBuf>> {
    let (grid, days, _) = load_data(cfg)?;
    let (train_days, _) = split(cfg, &days)?;
    let k = train_days[0].providers();
    let lambda_bar = if args.lambda_bar.is_empty() { vec![1.0 / k as f64; k] } else { args.lambda_bar.clone() };
    let mu = if args.mu.is_empty() { vec![0.0; k] } else { args.mu.clone() };
    let dir = cfg.out.join("lp");
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();
    for d in &train_days {
        let sub = build_ph_subproblem(&grid, d, &mu, cfg.ph.rho, &lambda_bar, cfg.ph.variant, cfg.ph.segments)?;
        let path = dir.join(format!("ph_day{}.lp", d.day));
        export_lp_file(&sub.model, &path)?;
        written.push(path);
    }
    match build_stm(&grid, &train_days, &cfg.stm) {
        Ok(stm) => {
            let path = dir.join("stm.lp");
            export_lp_file(&stm.model, &path)?;
            written.push(path);
        }
        Err(e) => log::warn!("single-level model not exported: {e}"),
    }
    Ok(written)
}

/// Writes `grid.json`, `series.csv`, `actuals.csv` and a `config.toml`
/// that reads them.
pub fn cmd_synth(cfg: &RunConfig, args: &SynthArgs) -> Result<()> {
    let mut p = cfg.synth.clone().unwrap_or_default();
    p.seed = cfg.synth.as_ref().map_or(cfg.seed, |s| s.seed);
    if let Some(v) = args.nodes {
        p.nodes = v;
    }
    if let Some(v) = args.horizon {
        p.horizon = v;
    }
    if let Some(v) = args.days {
        p.days = v;
    }
    let d = synth::generate(&p)?;
    create_out(cfg)?;
    data::save_grid(&d.grid, cfg.out.join("grid.json"))?;
    let nodes: Vec<u32> = d.grid.nodes.iter().map(|n| n.id).collect();
    let names = provider_names(p.providers());
    data::save_timeseries(&d.days, &nodes, &names, cfg.out.join("series.csv"), cfg.out.join("actuals.csv"))?;
    let mut out_cfg = RunConfig::new(cfg.trainer);
    out_cfg.grid = Some("grid.json".into());
    out_cfg.series = Some("series.csv".into());
    out_cfg.actuals = Some("actuals.csv".into());
    out_cfg.providers = names;
    out_cfg.seed = p.seed;
    out_cfg.ph = cfg.ph.clone();
    out_cfg.stm = cfg.stm.clone();
    out_cfg.fixed_lambda = cfg.fixed_lambda.clone();
    fs::write(cfg.out.join("config.toml"), out_cfg.to_toml()).context("writing config.toml")?;
    Ok(())
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> Result<u8> {
    let cfg = resolve_config(&cli.global)?;
    banner(&cfg, cli.global.quiet);
    let converged = match &cli.command {
        Command::Train => cmd_train(&cfg)?,
        Command::Evaluate(a) => cmd_evaluate(&cfg, a)?,
        Command::Baseline => {
            cmd_baseline(&cfg)?;
            true
        }
        Command::Export(a) => {
            for p in cmd_export(&cfg, a)? {
                println!("{}", p.display());
            }
            true
        }
        Command::Synth(a) => {
            cmd_synth(&cfg, a)?;
            true
        }
    };
    Ok(if converged { 0 } else { EXIT_NOT_CONVERGED })
}
