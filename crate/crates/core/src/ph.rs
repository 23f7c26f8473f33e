//! Progressive hedging over training days, and its push-forward variant that
//! re-solves only the days furthest from consensus.
//!
//! Each day owns a copy `lambda_d` of the combination weights. A subproblem
//! minimizes that day's UC + RT cost plus `mu_d . lambda_d` and a
//! piecewise-linear stand-in for `rho/2 |lambda_d - lambda_bar|^2`. The
//! orchestrator averages, updates multipliers and stops once the summed
//! distance to the average drops below `eps`.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{ModelInstance, VarId};
use crate::scenario::{ScenarioDay, Weights};
use crate::solver::{self, add_pwl_quadratic};
use crate::uc::{add_rt_block, add_uc_block, add_weight_vars, Forecast, RtVars, Schedule, UcBlock, UcVariant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhConfig {
    pub rho: f64,
    pub eps: f64,
    pub variant: UcVariant,
    pub segments: usize,
    pub max_iter: usize,
    /// Days re-solved per push-forward iteration; `None` means `ceil(D / 3)`.
    pub active_days: Option<usize>,
    pub parallelism: usize,
    /// Keep every iterate's per-day weights and multipliers.
    pub record_iterates: bool,
    /// Write measured wall time into the trace. When off the column is zero,
    /// which makes traces byte-identical across runs.
    pub record_timing: bool,
}

impl Default for PhConfig {
    fn default() -> Self {
        Self {
            rho: 25_000.0,
            eps: 1e-5,
            variant: UcVariant::Binary,
            segments: 32,
            max_iter: 500,
            active_days: None,
            parallelism: 1,
            record_iterates: false,
            record_timing: false,
        }
    }
}

impl PhConfig {
    pub fn validate(&self, days: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return bad(format!("rho must be positive, got {}", self.rho));
        }
        if !(self.eps > 0.0) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if self.segments == 0 {
            return bad("segments must be at least 1".into());
        }
        if self.parallelism == 0 {
            return bad("parallelism must be at least 1".into());
        }
        if let Some(dp) = self.active_days {
            if dp == 0 || dp > days {
                return bad(format!("active_days must lie in [1, {days}], got {dp}"));
            }
        }
        Ok(())
    }

    pub fn resolved_active_days(&self, days: usize) -> usize {
        self.active_days.unwrap_or_else(|| default_active_days(days))
    }
}

/// `ceil(D / 3)`, at least one.
pub fn default_active_days(days: usize) -> usize {
    days.div_ceil(3).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ph,
    Pfph,
}

/// Trainer state after one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhState {
    pub iteration: usize,
    pub lambdas: Vec<Vec<f64>>,
    pub mu: Vec<Vec<f64>>,
    pub lambda_bar: Vec<f64>,
    pub rho: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub lambda_bar: Vec<f64>,
    pub gap: f64,
    pub active_days: usize,
    pub cumulative_solves: usize,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct PhOutcome {
    pub weights: Weights,
    pub converged: bool,
    /// Final state (the best-gap state when not converged).
    pub state: PhState,
    pub trace: Vec<TraceRow>,
    /// Every state including initialization, when requested.
    pub iterates: Vec<PhState>,
    pub total_solves: usize,
    pub wall_seconds: f64,
}

/// One day's subproblem with handles to its parts.
#[derive(Debug, Clone)]
pub struct PhSubproblem {
    pub model: ModelInstance,
    pub lambda: Vec<VarId>,
    pub uc: UcBlock,
    pub rt: RtVars,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemResult {
    pub lambda: Vec<f64>,
    pub objective: f64,
}

/// Builds the per-day model: weight simplex, UC block on the weighted
/// forecast, RT block on realized data linked to the UC decisions, linear
/// multiplier term and the PWL proximal penalty (omitted when `rho == 0`).
pub fn build_ph_subproblem(
    grid: &Grid,
    day: &ScenarioDay,
    mu: &[f64],
    rho: f64,
    lambda_bar: &[f64],
    variant: UcVariant,
    segments: usize,
) -> Result<PhSubproblem> {
    let k = day.providers();
    if mu.len() != k || lambda_bar.len() != k {
        return Err(Error::Dimension(format!(
            "day {} has {k} providers but mu has {} and lambda_bar {} entries",
            day.day,
            mu.len(),
            lambda_bar.len()
        )));
    }
    if !(rho >= 0.0 && rho.is_finite()) || mu.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("rho and mu must be finite, rho nonnegative".into()));
    }
    grid.validate()?;
    day.validate()?;
    day.check_shape(grid.num_nodes(), day.horizon())?;
    let topo = grid.topology();
    let mut model = ModelInstance::new(format!("ph_day{}", day.day));
    let lambda = add_weight_vars(&mut model, k, "");
    let fc = Forecast::Combined { lambda: &lambda, day };
    let uc = add_uc_block(&mut model, grid, &topo, fc, day.horizon(), variant, "", 1.0);
    let sched = Schedule::Linked(&uc.vars);
    let rt = add_rt_block(&mut model, grid, &topo, sched, &day.realized_load, &day.realized_wind, "", 1.0);
    for (&v, &m) in lambda.iter().zip(mu) {
        model.add_objective(v, m);
    }
    if rho > 0.0 {
        add_pwl_quadratic(&mut model, &lambda, lambda_bar, rho / 2.0, segments)?;
    }
    Ok(PhSubproblem { model, lambda, uc, rt })
}

impl PhSubproblem {
    pub fn solve(&self) -> Result<SubproblemResult> {
        let sol = solver::solve(&self.model).require_optimal(format!("subproblem {}", self.model.name))?;
        Ok(SubproblemResult { lambda: self.lambda.iter().map(|v| sol.x[v.0]).collect(), objective: sol.objective })
    }
}

/// `mu_d + rho (lambda_d - lambda_bar)` for every day.
pub fn update_multipliers(mu: &[Vec<f64>], rho: f64, lambdas: &[Vec<f64>], lambda_bar: &[f64]) -> Vec<Vec<f64>> {
    mu.iter()
        .zip(lambdas)
        .map(|(m, l)| m.iter().zip(l).zip(lambda_bar).map(|((&m, &l), &b)| m + rho * (l - b)).collect())
        .collect()
}

/// `sum_d |lambda_d - lambda_bar|_2`.
pub fn consensus_gap(lambdas: &[Vec<f64>], lambda_bar: &[f64]) -> f64 {
    lambdas.iter().map(|l| distance(l, lambda_bar)).sum()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Componentwise mean, summed in day order.
pub fn average(lambdas: &[Vec<f64>]) -> Vec<f64> {
    let k = lambdas.first().map_or(0, Vec::len);
    let d = lambdas.len() as f64;
    (0..k).map(|j| lambdas.iter().map(|l| l[j]).sum::<f64>() / d).collect()
}

/// Splits days into the `d_prime` with the largest deviation from
/// `lambda_bar` (ties to the lower index) and the rest. Both lists ascend.
pub fn select_active_set(lambdas: &[Vec<f64>], lambda_bar: &[f64], d_prime: usize) -> (Vec<usize>, Vec<usize>) {
    let scores: Vec<f64> = lambdas.iter().map(|l| distance(l, lambda_bar)).collect();
    let mut order: Vec<usize> = (0..lambdas.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut active: Vec<usize> = order[..d_prime.min(order.len())].to_vec();
    let mut idle: Vec<usize> = order[d_prime.min(order.len())..].to_vec();
    active.sort_unstable();
    idle.sort_unstable();
    (active, idle)
}

fn solve_days(
    pool: &rayon::ThreadPool,
    grid: &Grid,
    days: &[ScenarioDay],
    which: &[usize],
    mu: &[Vec<f64>],
    rho: f64,
    lambda_bar: &[f64],
    cfg: &PhConfig,
) -> Result<Vec<SubproblemResult>> {
    let results: Vec<Result<SubproblemResult>> = pool.install(|| {
        which
            .par_iter()
            .map(|&d| {
                let sub = build_ph_subproblem(grid, &days[d], &mu[d], rho, lambda_bar, cfg.variant, cfg.segments)?;
                sub.solve()
            })
            .collect()
    });
    results.into_iter().zip(which).map(|(r, &d)| r.map_err(|e| e.on_day(days[d].day))).collect()
}

/// Progressive hedging: every day is re-solved each iteration.
pub fn run_ph(grid: &Grid, days: &[ScenarioDay], config: &PhConfig) -> Result<PhOutcome> {
    run(grid, days, config, Algorithm::Ph)
}

/// Push-forward variant: only the most deviating days are re-solved.
pub fn run_pfph(grid: &Grid, days: &[ScenarioDay], config: &PhConfig) -> Result<PhOutcome> {
    run(grid, days, config, Algorithm::Pfph)
}

pub fn run(grid: &Grid, days: &[ScenarioDay], cfg: &PhConfig, algorithm: Algorithm) -> Result<PhOutcome> {
    if days.is_empty() {
        return Err(Error::InvalidInput("at least one training day is required".into()));
    }
    cfg.validate(days.len())?;
    let k = days[0].providers();
    if let Some(d) = days.iter().find(|d| d.providers() != k) {
        return Err(Error::Dimension(format!("day {} has {} providers, expected {k}", d.day, d.providers())));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let elapsed = || if cfg.record_timing { start.elapsed().as_secs_f64() } else { 0.0 };
    let n_days = days.len();
    let all: Vec<usize> = (0..n_days).collect();
    let rho = cfg.rho;

    let zero_mu = vec![vec![0.0; k]; n_days];
    let uniform = vec![1.0 / k as f64; k];
    let init = solve_days(&pool, grid, days, &all, &zero_mu, 0.0, &uniform, cfg)?;
    let lambdas: Vec<Vec<f64>> = init.into_iter().map(|r| r.lambda).collect();
    let lambda_bar = average(&lambdas);
    let mu = update_multipliers(&zero_mu, rho, &lambdas, &lambda_bar);
    let gap = consensus_gap(&lambdas, &lambda_bar);
    let mut state = PhState { iteration: 0, lambdas, mu, lambda_bar, rho, gap };
    let mut solves = n_days;
    let mut trace = vec![TraceRow {
        iteration: 0,
        lambda_bar: state.lambda_bar.clone(),
        gap,
        active_days: n_days,
        cumulative_solves: solves,
        wall_seconds: elapsed(),
    }];
    let mut iterates = Vec::new();
    if cfg.record_iterates {
        iterates.push(state.clone());
    }
    log::info!("init: lambda_bar={:?} gap={gap:.3e}", state.lambda_bar);

    let d_prime = match algorithm {
        Algorithm::Ph => n_days,
        Algorithm::Pfph => cfg.resolved_active_days(n_days),
    };
    let mut best: Option<PhState> = None;
    let mut converged = false;
    for tau in 1..=cfg.max_iter {
        let active = if d_prime == n_days {
            all.clone()
        } else {
            select_active_set(&state.lambdas, &state.lambda_bar, d_prime).0
        };
        let results = solve_days(&pool, grid, days, &active, &state.mu, rho, &state.lambda_bar, cfg)?;
        solves += active.len();
        let mut lambdas = state.lambdas.clone();
        for (r, &d) in results.into_iter().zip(&active) {
            lambdas[d] = r.lambda;
        }
        let lambda_bar = average(&lambdas);
        let mu = update_multipliers(&state.mu, rho, &lambdas, &lambda_bar);
        let gap = consensus_gap(&lambdas, &lambda_bar);
        state = PhState { iteration: tau, lambdas, mu, lambda_bar, rho, gap };
        trace.push(TraceRow {
            iteration: tau,
            lambda_bar: state.lambda_bar.clone(),
            gap,
            active_days: active.len(),
            cumulative_solves: solves,
            wall_seconds: elapsed(),
        });
        if cfg.record_iterates {
            iterates.push(state.clone());
        }
        log::debug!("iter {tau}: lambda_bar={:?} gap={gap:.3e}", state.lambda_bar);
        if gap < cfg.eps {
            converged = true;
            break;
        }
        if best.as_ref().is_none_or(|b| gap < b.gap) {
            best = Some(state.clone());
        }
    }
    if !converged {
        log::warn!("no convergence after {} iterations; returning best-gap iterate", cfg.max_iter);
        if let Some(b) = best {
            state = b;
        }
    }
    let weights = finalize_weights(&state.lambda_bar)?;
    Ok(PhOutcome { weights, converged, state, trace, iterates, total_solves: solves, wall_seconds: elapsed() })
}

/// Clamps to `[0, 1]` and renormalizes, warning on drift above 1e-7.
pub fn finalize_weights(lambda_bar: &[f64]) -> Result<Weights> {
    let drift = (lambda_bar.iter().sum::<f64>() - 1.0).abs()
        + lambda_bar.iter().map(|v| (-v).max(v - 1.0).max(0.0)).sum::<f64>();
    if drift > 1e-7 {
        log::warn!("lambda_bar {lambda_bar:?} is {drift:.2e} off the simplex before renormalization");
    }
    Weights::normalized(lambda_bar)
}

/// Trace as CSV: iteration, one column per weight, gap, active days,
/// cumulative solves, wall seconds.
pub fn write_trace_csv(trace: &[TraceRow], out: impl Write) -> Result<()> {
    let k = trace.first().map_or(0, |r| r.lambda_bar.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["iteration".to_string()];
    header.extend((1..=k).map(|j| format!("lambda_bar_{j}")));
    header.extend(["gap", "active_days", "cumulative_solves", "wall_seconds"].map(String::from));
    let csv_err = |e: csv::Error| Error::InvalidInput(format!("trace csv: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    for r in trace {
        let mut rec = vec![r.iteration.to_string()];
        rec.extend(r.lambda_bar.iter().map(|v| v.to_string()));
        rec.push(r.gap.to_string());
        rec.push(r.active_days.to_string());
        rec.push(r.cumulative_solves.to_string());
        rec.push(r.wall_seconds.to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::InvalidInput(format!("trace csv: {e}")))?;
    Ok(())
}

pub fn save_trace_csv(trace: &[TraceRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_trace_csv(trace, std::io::BufWriter::new(f))
}
