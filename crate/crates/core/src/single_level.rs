//! Single-level reformulation of the weight-training bilevel problem.
//!
//! Each day's relaxed UC (UC-R) lower level is replaced by its KKT conditions
//! and complementarity is linearized with binaries and a Big-M constant
//! (`psi <= M z`, `slack <= M (1 - z)`). The result is one MILP over the shared
//! weights, every day's UC-R primal and dual variables and an RT block.
//!
//! The KKT system is derived mechanically from the built UC-R rows, so every
//! boundary case (first hour, last hour) follows from which variables appear
//! in which rows. Only unit minimum up/down times are accepted.
//!
//! The regularized nonlinear variant, which replaces each complementarity
//! pair by `sum psi * slack <= eps` per element, needs an NLP solver and is
//! not built here.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{ModelInstance, RowId, Sense, VarId};
use crate::scenario::{ScenarioDay, Weights};
use crate::solver::{self, MilpOptions, Solution};
use crate::uc::{
    add_rt_block, add_uc_block, add_weight_vars, block_cost, Forecast, RtVars, Schedule, Scope, UcBlock, UcVariant,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DualKind {
    Equality,
    Inequality,
}

/// Constraint a multiplier belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Row(RowId),
    Lower(VarId),
    Upper(VarId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualInfo {
    pub name: String,
    pub kind: DualKind,
    pub scope: Scope,
    pub source: Source,
}

/// KKT structure of one UC-R block.
#[derive(Debug, Clone)]
pub struct KktSystem {
    /// Lower-level primal variables in id order.
    pub primal: Vec<(VarId, Scope)>,
    /// Lower-level objective coefficient of each primal variable.
    pub cost: Vec<f64>,
    pub duals: Vec<DualInfo>,
    /// Stationarity row of each primal variable as `(dual index, coefficient)`.
    pub columns: Vec<Vec<(usize, f64)>>,
}

fn check_min_times(grid: &Grid) -> Result<()> {
    match grid.generators.iter().find(|g| g.min_up != 1 || g.min_down != 1) {
        Some(g) => Err(Error::UnsupportedMinTimes { generator: g.name.clone(), min_up: g.min_up, min_down: g.min_down }),
        None => Ok(()),
    }
}

/// Derives stationarity and complementarity structure for the UC-R `block`
/// inside `model`. Weight variables appearing in the block's rows are treated
/// as parameters.
pub fn assemble_kkt(model: &ModelInstance, grid: &Grid, block: &UcBlock) -> Result<KktSystem> {
    check_min_times(grid)?;
    let primal = block.vars.scoped();
    let index: HashMap<VarId, usize> = primal.iter().enumerate().map(|(j, &(v, _))| (v, j)).collect();
    let mut cost = vec![0.0; primal.len()];
    for &(v, c) in &block.cost {
        cost[index[&v]] += c;
    }
    let mut duals = Vec::new();
    let mut columns = vec![Vec::new(); primal.len()];
    for &(r, scope) in &block.rows {
        let row = &model.rows[r.0];
        let (kind, sign, tag) = match row.sense {
            Sense::Eq => (DualKind::Equality, 1.0, "nu"),
            Sense::Le => (DualKind::Inequality, 1.0, "psi"),
            Sense::Ge => (DualKind::Inequality, -1.0, "psi"),
        };
        let k = duals.len();
        duals.push(DualInfo { name: format!("{tag}_{}", row.name), kind, scope, source: Source::Row(r) });
        for &(v, a) in &row.terms {
            if let Some(&j) = index.get(&v) {
                columns[j].push((k, sign * a));
            }
        }
    }
    for (j, &(v, scope)) in primal.iter().enumerate() {
        let var = &model.vars[v.0];
        if var.lower.is_finite() {
            columns[j].push((duals.len(), -1.0));
            let name = format!("psi_lo_{}", var.name);
            duals.push(DualInfo { name, kind: DualKind::Inequality, scope, source: Source::Lower(v) });
        }
        if var.upper.is_finite() {
            columns[j].push((duals.len(), 1.0));
            let name = format!("psi_up_{}", var.name);
            duals.push(DualInfo { name, kind: DualKind::Inequality, scope, source: Source::Upper(v) });
        }
    }
    Ok(KktSystem { primal, cost, duals, columns })
}

/// `slack = terms . x + constant`, nonnegative when primal feasible.
fn slack_expr(model: &ModelInstance, s: Source) -> (Vec<(VarId, f64)>, f64) {
    match s {
        Source::Row(r) => {
            let row = &model.rows[r.0];
            match row.sense {
                Sense::Le => (row.terms.iter().map(|&(v, a)| (v, -a)).collect(), row.rhs),
                Sense::Ge => (row.terms.clone(), -row.rhs),
                Sense::Eq => (Vec::new(), 0.0),
            }
        }
        Source::Lower(v) => (vec![(v, 1.0)], -model.vars[v.0].lower),
        Source::Upper(v) => (vec![(v, -1.0)], model.vars[v.0].upper),
    }
}

/// Handles to the dual variables and switches embedded in a model.
#[derive(Debug, Clone)]
pub struct KktEmbedding {
    pub duals: Vec<VarId>,
    /// Complementarity switch per dual (`None` for equalities).
    pub switches: Vec<Option<VarId>>,
    pub stationarity: Vec<RowId>,
}

impl KktSystem {
    pub fn num_equalities(&self) -> usize {
        self.duals.iter().filter(|d| d.kind == DualKind::Equality).count()
    }

    pub fn num_inequalities(&self) -> usize {
        self.duals.len() - self.num_equalities()
    }

    /// `c_j + sum_k coef * dual_k` for every primal variable.
    pub fn stationarity_residuals(&self, duals: &[f64]) -> Vec<f64> {
        self.columns
            .iter()
            .zip(&self.cost)
            .map(|(col, &c)| c + col.iter().map(|&(k, a)| a * duals[k]).sum::<f64>())
            .collect()
    }

    pub fn slack(&self, model: &ModelInstance, x: &[f64], k: usize) -> Option<f64> {
        let d = &self.duals[k];
        (d.kind == DualKind::Inequality).then(|| {
            let (terms, c) = slack_expr(model, d.source);
            c + terms.iter().map(|&(v, a)| a * x[v.0]).sum::<f64>()
        })
    }

    /// `|psi_k * slack_k|` for every inequality multiplier.
    pub fn complementarity(&self, model: &ModelInstance, x: &[f64], duals: &[f64]) -> Vec<f64> {
        (0..self.duals.len()).filter_map(|k| self.slack(model, x, k).map(|s| (duals[k] * s).abs())).collect()
    }

    /// Multipliers implied by an optimal LP solution of the model the system
    /// was assembled from.
    pub fn duals_from_lp(&self, sol: &Solution) -> Vec<f64> {
        self.duals
            .iter()
            .map(|d| match (d.kind, d.source) {
                (DualKind::Equality, Source::Row(r)) => -sol.duals[r.0],
                (_, Source::Row(r)) => sol.duals[r.0].abs(),
                (_, Source::Lower(v)) => sol.reduced_costs[v.0].max(0.0),
                (_, Source::Upper(v)) => (-sol.reduced_costs[v.0]).max(0.0),
            })
            .collect()
    }

    /// Adds the multipliers, stationarity rows and Big-M complementarity
    /// rows to `model`.
    pub fn embed(&self, model: &mut ModelInstance, big_m: f64, prefix: &str) -> KktEmbedding {
        let mut duals = Vec::with_capacity(self.duals.len());
        let mut switches = Vec::with_capacity(self.duals.len());
        for d in &self.duals {
            let name = format!("{prefix}{}", d.name);
            match d.kind {
                DualKind::Equality => {
                    duals.push(model.add_var(name, f64::NEG_INFINITY, f64::INFINITY, 0.0));
                    switches.push(None);
                }
                DualKind::Inequality => {
                    let psi = model.add_var(name.clone(), 0.0, f64::INFINITY, 0.0);
                    let z = model.add_binary(format!("{prefix}z_{}", d.name), 0.0);
                    model.add_row(format!("{prefix}mdual_{}", d.name), [(psi, 1.0), (z, -big_m)], Sense::Le, 0.0);
                    let (mut terms, c) = slack_expr(model, d.source);
                    terms.push((z, big_m));
                    model.add_row(format!("{prefix}mslack_{}", d.name), terms, Sense::Le, big_m - c);
                    duals.push(psi);
                    switches.push(Some(z));
                }
            }
        }
        let mut stationarity = Vec::with_capacity(self.primal.len());
        for (j, &(v, _)) in self.primal.iter().enumerate() {
            let terms: Vec<(VarId, f64)> = self.columns[j].iter().map(|&(k, a)| (duals[k], a)).collect();
            let name = format!("{prefix}stat_{}", model.vars[v.0].name);
            stationarity.push(model.add_row(name, terms, Sense::Eq, -self.cost[j]));
        }
        KktEmbedding { duals, switches, stationarity }
    }
}

/// Settings for the single-level trainer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StmConfig {
    /// Big-M constant; `None` uses `10 * max cost * max capacity`.
    pub big_m: Option<f64>,
    pub lambda_lower: f64,
    pub lambda_upper: f64,
    /// Refuse to build models with more variables than this.
    pub max_vars: usize,
    pub max_nodes: usize,
}

impl Default for StmConfig {
    fn default() -> Self {
        Self { big_m: None, lambda_lower: 0.0, lambda_upper: 1.0, max_vars: 50_000, max_nodes: 200_000 }
    }
}

impl StmConfig {
    pub fn resolved_big_m(&self, grid: &Grid) -> f64 {
        self.big_m.unwrap_or_else(|| 10.0 * grid.max_cost() * grid.max_capacity())
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(m) = self.big_m {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::Config(format!("big_m must be positive and finite, got {m}")));
            }
        }
        let (lo, hi) = (self.lambda_lower, self.lambda_upper);
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(Error::Config(format!("lambda bounds [{lo}, {hi}] must satisfy 0 <= lower <= upper <= 1")));
        }
        Ok(())
    }
}

/// Per-day handles inside an assembled single-level model.
#[derive(Debug, Clone)]
pub struct StmDay {
    pub day: u32,
    pub uc: UcBlock,
    pub rt: RtVars,
    pub kkt: KktSystem,
    pub embedding: KktEmbedding,
}

#[derive(Debug, Clone)]
pub struct StmModel {
    pub model: ModelInstance,
    pub lambda: Vec<VarId>,
    pub days: Vec<StmDay>,
    pub big_m: f64,
}

fn check_days(grid: &Grid, days: &[ScenarioDay]) -> Result<usize> {
    let first = days.first().ok_or_else(|| Error::InvalidInput("at least one training day is required".into()))?;
    let k = first.providers();
    for d in days {
        d.validate()?;
        d.check_shape(grid.num_nodes(), first.horizon())?;
        if d.providers() != k {
            return Err(Error::Dimension(format!("day {} has {} providers, expected {k}", d.day, d.providers())));
        }
    }
    Ok(k)
}

/// Lower level of one day on its own: UC-R on the weighted forecast with
/// `lambda` fixed. Returns the model, the block and its KKT structure.
fn lower_level(grid: &Grid, day: &ScenarioDay, lambda: &[f64]) -> Result<(ModelInstance, UcBlock, KktSystem)> {
    let topo = grid.topology();
    let mut m = ModelInstance::new(format!("ucr_day{}", day.day));
    let lam = add_weight_vars(&mut m, lambda.len(), "");
    for (&v, &x) in lam.iter().zip(lambda) {
        m.set_bounds(v, x, x);
    }
    let fc = Forecast::Combined { lambda: &lam, day };
    let block = add_uc_block(&mut m, grid, &topo, fc, day.horizon(), UcVariant::Relaxed, "", 1.0);
    let kkt = assemble_kkt(&m, grid, &block)?;
    Ok((m, block, kkt))
}

/// Assembles the single-level MILP over all `days`. The objective is the
/// average two-stage cost; each day's UC-R block is constrained to be
/// optimal for the shared weights through its KKT conditions.
pub fn build_stm(grid: &Grid, days: &[ScenarioDay], config: &StmConfig) -> Result<StmModel> {
    config.validate()?;
    grid.validate()?;
    check_min_times(grid)?;
    let k = check_days(grid, days)?;
    let big_m = config.resolved_big_m(grid);
    let topo = grid.topology();
    let scale = 1.0 / days.len() as f64;
    let mut model = ModelInstance::new("stm");
    let lambda = add_weight_vars(&mut model, k, "");
    for &v in &lambda {
        model.set_bounds(v, config.lambda_lower, config.lambda_upper);
    }
    let mut out = Vec::with_capacity(days.len());
    for day in days {
        let prefix = format!("d{}_", day.day);
        let fc = Forecast::Combined { lambda: &lambda, day };
        let uc = add_uc_block(&mut model, grid, &topo, fc, day.horizon(), UcVariant::Relaxed, &prefix, scale);
        let sched = Schedule::Linked(&uc.vars);
        let rt = add_rt_block(&mut model, grid, &topo, sched, &day.realized_load, &day.realized_wind, &prefix, scale);
        let kkt = assemble_kkt(&model, grid, &uc)?;
        let embedding = kkt.embed(&mut model, big_m, &prefix);
        if model.vars.len() > config.max_vars {
            return Err(Error::TooLarge { vars: model.vars.len(), cap: config.max_vars });
        }
        out.push(StmDay { day: day.day, uc, rt, kkt, embedding });
    }
    Ok(StmModel { model, lambda, days: out, big_m })
}

/// Certificate checks of a single-level solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StmChecks {
    pub max_stationarity: f64,
    /// Largest `|psi * slack|`.
    pub max_complementarity: f64,
    /// Smallest inequality multiplier.
    pub min_psi: f64,
}

#[derive(Debug, Clone)]
pub struct StmOutcome {
    pub weights: Weights,
    /// Raw weight values from the solver.
    pub lambda: Vec<f64>,
    /// Average two-stage cost at the optimum.
    pub objective: f64,
    /// Lower-level (UC-R) cost of every day.
    pub lower_level_costs: Vec<f64>,
    pub checks: StmChecks,
    pub bigm: BigMReport,
    pub nodes: usize,
    pub x: Vec<f64>,
}

impl StmModel {
    fn values(&self, x: &[f64], day: &StmDay) -> Vec<f64> {
        day.embedding.duals.iter().map(|v| x[v.0]).collect()
    }

    /// Lower-level cost of every day at the primal point `x`.
    pub fn lower_level_costs(&self, x: &[f64]) -> Vec<f64> {
        self.days.iter().map(|d| block_cost(&d.uc.cost, x)).collect()
    }

    pub fn checks(&self, x: &[f64]) -> StmChecks {
        let mut c = StmChecks { max_stationarity: 0.0, max_complementarity: 0.0, min_psi: f64::INFINITY };
        for d in &self.days {
            let duals = self.values(x, d);
            for r in d.kkt.stationarity_residuals(&duals) {
                c.max_stationarity = c.max_stationarity.max(r.abs());
            }
            for p in d.kkt.complementarity(&self.model, x, &duals) {
                c.max_complementarity = c.max_complementarity.max(p);
            }
            for (k, info) in d.kkt.duals.iter().enumerate() {
                if info.kind == DualKind::Inequality {
                    c.min_psi = c.min_psi.min(duals[k]);
                }
            }
        }
        c
    }

    /// Complementarity pattern of the lower-level LP optimum at `lambda`,
    /// usable as a branch-and-bound start.
    pub fn switch_start(&self, grid: &Grid, days: &[ScenarioDay], lambda: &[f64]) -> Result<Vec<(VarId, f64)>> {
        let mut start = Vec::new();
        for (d, day) in self.days.iter().zip(days) {
            let (m, _, kkt) = lower_level(grid, day, lambda)?;
            let sol = solver::solve_lp(&m).require_optimal(format!("lower level of day {}", day.day))?;
            let duals = kkt.duals_from_lp(&sol);
            for (k, z) in d.embedding.switches.iter().enumerate() {
                if let Some(z) = z {
                    start.push((*z, if duals[k] > 1e-9 { 1.0 } else { 0.0 }));
                }
            }
        }
        Ok(start)
    }

    /// Solves with `lambda` fixed and returns each day's lower-level cost.
    pub fn solve_at(&self, lambda: &[f64], opts: &MilpOptions) -> Result<(Solution, Vec<f64>)> {
        let mut m = self.model.clone();
        for (&v, &x) in self.lambda.iter().zip(lambda) {
            m.set_bounds(v, x, x);
        }
        let sol = solver::solve_milp_with(&m, opts).require_optimal("single-level model at fixed weights")?;
        let costs = self.lower_level_costs(&sol.x);
        Ok((sol, costs))
    }
}

/// Weights minimizing the joint two-stage cost with the lower level only
/// required to be feasible; used to seed the single-level search.
fn joint_relaxation(grid: &Grid, days: &[ScenarioDay], config: &StmConfig) -> Result<Vec<f64>> {
    let topo = grid.topology();
    let k = days[0].providers();
    let scale = 1.0 / days.len() as f64;
    let mut m = ModelInstance::new("stm_joint");
    let lambda = add_weight_vars(&mut m, k, "");
    for &v in &lambda {
        m.set_bounds(v, config.lambda_lower, config.lambda_upper);
    }
    for day in days {
        let prefix = format!("d{}_", day.day);
        let fc = Forecast::Combined { lambda: &lambda, day };
        let uc = add_uc_block(&mut m, grid, &topo, fc, day.horizon(), UcVariant::Relaxed, &prefix, scale);
        add_rt_block(&mut m, grid, &topo, Schedule::Linked(&uc.vars), &day.realized_load, &day.realized_wind, &prefix, scale);
    }
    let sol = solver::solve_lp(&m).require_optimal("joint relaxation")?;
    Ok(lambda.iter().map(|v| sol.x[v.0]).collect())
}

/// Builds and solves the single-level model. Branch-and-bound starts from
/// the complementarity pattern of the lower-level optimum at the weights of
/// the joint relaxation.
pub fn solve_stm(grid: &Grid, days: &[ScenarioDay], config: &StmConfig) -> Result<StmOutcome> {
    let stm = build_stm(grid, days, config)?;
    let seed = joint_relaxation(grid, days, config)?;
    let start = stm.switch_start(grid, days, &seed)?;
    let opts = MilpOptions { max_nodes: config.max_nodes, ..MilpOptions::default() };
    let sol = solver::solve_milp_with_start(&stm.model, &opts, &start).require_optimal("single-level model")?;
    stm.outcome(sol)
}

/// Builds the single-level model and hands it to an external MILP solver.
pub fn solve_stm_external(
    grid: &Grid,
    days: &[ScenarioDay],
    config: &StmConfig,
    external: &solver::ExternalSolver,
) -> Result<StmOutcome> {
    let stm = build_stm(grid, days, config)?;
    let sol = external.solve(&stm.model)?;
    stm.outcome(sol)
}

impl StmModel {
    fn outcome(&self, sol: Solution) -> Result<StmOutcome> {
        let lambda: Vec<f64> = self.lambda.iter().map(|v| sol.x[v.0]).collect();
        Ok(StmOutcome {
            weights: Weights::normalized(&lambda)?,
            objective: sol.objective,
            lower_level_costs: self.lower_level_costs(&sol.x),
            checks: self.checks(&sol.x),
            bigm: validate_bigm(self, &sol.x),
            nodes: sol.stats.nodes,
            lambda,
            x: sol.x,
        })
    }
}

/// Multipliers or slacks that came close to the Big-M constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BigMReport {
    pub big_m: f64,
    pub max_dual: f64,
    pub max_slack: f64,
    /// `(name, value)` of every dual or slack at or above `0.99 * M`.
    pub flagged: Vec<(String, f64)>,
}

impl BigMReport {
    pub fn is_clean(&self) -> bool {
        self.flagged.is_empty()
    }
}

/// Audits a solution of [`build_stm`] for values near the Big-M constant.
pub fn validate_bigm(stm: &StmModel, x: &[f64]) -> BigMReport {
    let limit = 0.99 * stm.big_m;
    let mut r = BigMReport { big_m: stm.big_m, max_dual: 0.0, max_slack: 0.0, flagged: Vec::new() };
    for d in &stm.days {
        for (k, info) in d.kkt.duals.iter().enumerate() {
            let v = x[d.embedding.duals[k].0];
            r.max_dual = r.max_dual.max(v.abs());
            if v.abs() >= limit {
                r.flagged.push((info.name.clone(), v));
            }
            if let Some(s) = d.kkt.slack(&stm.model, x, k) {
                r.max_slack = r.max_slack.max(s);
                if s >= limit {
                    r.flagged.push((format!("slack_{}", info.name), s));
                }
            }
        }
    }
    r
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    pub lambda: Vec<f64>,
    pub lambda_big: Vec<f64>,
    /// Largest weight change after multiplying M by ten.
    pub change: f64,
    pub m_sensitive: bool,
}

/// Re-solves with `10 * M` and compares the weights.
pub fn bigm_sensitivity(grid: &Grid, days: &[ScenarioDay], config: &StmConfig) -> Result<Sensitivity> {
    let base = solve_stm(grid, days, config)?;
    let big = StmConfig { big_m: Some(10.0 * config.resolved_big_m(grid)), ..config.clone() };
    let other = solve_stm(grid, days, &big)?;
    let change = base.lambda.iter().zip(&other.lambda).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(Sensitivity { lambda: base.lambda, lambda_big: other.lambda, change, m_sensitive: change > 1e-3 })
}
