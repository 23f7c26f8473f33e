//! Day-ahead unit commitment (UC), its convex-hull relaxation (UC-R) and the
//! real-time redispatch LP (RT), plus the two-stage cost they compose into.
//!
//! The block builders are shared with the trainers: the same UC block is
//! built either on fixed forecast data or with the forecast expressed as a
//! linear function of combination-weight variables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, Topology};
use crate::model::{ModelInstance, RowId, Sense, VarId};
use crate::scenario::{combine_forecasts, NodeSeries, ScenarioDay, Weights};
use crate::solver;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UcVariant {
    /// Binary commitment.
    #[default]
    Binary,
    /// Commitment relaxed to `[0, 1]` with the convex-hull ramp inequalities.
    Relaxed,
}

impl std::str::FromStr for UcVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(UcVariant::Binary),
            "relaxed" => Ok(UcVariant::Relaxed),
            _ => Err(Error::InvalidInput(format!("unknown UC variant `{s}` (expected binary or relaxed)"))),
        }
    }
}

impl std::fmt::Display for UcVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            UcVariant::Binary => "binary",
            UcVariant::Relaxed => "relaxed",
        })
    }
}

/// Which network element a row or variable belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scope {
    Node(usize),
    Generator(usize),
    Line(usize),
    /// Reference-angle rows.
    System,
}

/// Forecast entering the UC balance.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Forecast<'a> {
    Fixed { load: &'a NodeSeries, wind: &'a NodeSeries },
    /// `sum_k lambda_k * provider_k`, with `lambda` as model variables.
    Combined { lambda: &'a [VarId], day: &'a ScenarioDay },
}

/// Variable handles of one UC block, indexed `[element][hour]`.
#[derive(Debug, Clone, Default)]
pub struct UcVars {
    pub p: Vec<Vec<VarId>>,
    pub u: Vec<Vec<VarId>>,
    /// Startup indicators; `None` in the first hour.
    pub y: Vec<Vec<Option<VarId>>>,
    pub flow: Vec<Vec<VarId>>,
    pub theta: Vec<Vec<VarId>>,
    pub shed: Vec<Vec<VarId>>,
    pub curtail: Vec<Vec<VarId>>,
}

impl UcVars {
    /// Every variable of the block with its owning element.
    pub fn scoped(&self) -> Vec<(VarId, Scope)> {
        let mut out = Vec::new();
        let mut push = |vs: &Vec<Vec<VarId>>, f: fn(usize) -> Scope| {
            for (e, row) in vs.iter().enumerate() {
                out.extend(row.iter().map(|&v| (v, f(e))));
            }
        };
        push(&self.p, Scope::Generator);
        push(&self.u, Scope::Generator);
        push(&self.flow, Scope::Line);
        push(&self.theta, Scope::Node);
        push(&self.shed, Scope::Node);
        push(&self.curtail, Scope::Node);
        for (g, row) in self.y.iter().enumerate() {
            out.extend(row.iter().flatten().map(|&v| (v, Scope::Generator(g))));
        }
        out.sort_by_key(|(v, _)| *v);
        out
    }
}

#[derive(Debug, Clone, Default)]
pub struct UcBlock {
    pub vars: UcVars,
    pub rows: Vec<(RowId, Scope)>,
    /// Unscaled UC objective coefficients, one entry per variable.
    pub cost: Vec<(VarId, f64)>,
}

#[derive(Debug, Clone, Default)]
pub struct RtVars {
    pub up: Vec<Vec<VarId>>,
    pub down: Vec<Vec<VarId>>,
    pub flow: Vec<Vec<VarId>>,
    pub theta: Vec<Vec<VarId>>,
    pub shed: Vec<Vec<VarId>>,
    pub curtail: Vec<Vec<VarId>>,
}

/// How the RT block sees the day-ahead schedule.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Schedule<'a> {
    Fixed(&'a UcSolution),
    Linked(&'a UcVars),
}

/// Built UC or UC-R model with its variable handles.
#[derive(Debug, Clone)]
pub struct UcModel {
    pub model: ModelInstance,
    pub vars: UcVars,
    pub variant: UcVariant,
}

#[derive(Debug, Clone)]
pub struct RtModel {
    pub model: ModelInstance,
    pub vars: RtVars,
}

/// Day-ahead decisions, indexed `[element][hour]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcSolution {
    pub p: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    /// Zero in the first hour.
    pub y: Vec<Vec<f64>>,
    pub flow: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
    pub shed: Vec<Vec<f64>>,
    pub curtail: Vec<Vec<f64>>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RtSolution {
    pub up: Vec<Vec<f64>>,
    pub down: Vec<Vec<f64>>,
    pub flow: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
    pub shed: Vec<Vec<f64>>,
    pub curtail: Vec<Vec<f64>>,
    pub objective: f64,
}

/// Itemized two-stage operating cost in $.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub production: f64,
    pub startup: f64,
    pub shutdown: f64,
    pub uc_shed: f64,
    pub uc_curtail: f64,
    pub up_redispatch: f64,
    pub down_redispatch: f64,
    pub rt_shed: f64,
    pub rt_curtail: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub const COMPONENTS: [&'static str; 9] = [
        "production",
        "startup",
        "shutdown",
        "uc_shed",
        "uc_curtail",
        "up_redispatch",
        "down_redispatch",
        "rt_shed",
        "rt_curtail",
    ];

    pub fn components(&self) -> [f64; 9] {
        [
            self.production,
            self.startup,
            self.shutdown,
            self.uc_shed,
            self.uc_curtail,
            self.up_redispatch,
            self.down_redispatch,
            self.rt_shed,
            self.rt_curtail,
        ]
    }

    pub fn uc_total(&self) -> f64 {
        self.production + self.startup + self.shutdown + self.uc_shed + self.uc_curtail
    }

    pub fn rt_total(&self) -> f64 {
        self.up_redispatch + self.down_redispatch + self.rt_shed + self.rt_curtail
    }

    fn with_total(mut self) -> Self {
        self.total = self.components().iter().sum();
        self
    }
}

fn values(x: &[f64], ids: &[Vec<VarId>]) -> Vec<Vec<f64>> {
    ids.iter().map(|r| r.iter().map(|v| x[v.0]).collect()).collect()
}

impl UcSolution {
    pub(crate) fn extract(vars: &UcVars, x: &[f64], objective: f64) -> Self {
        UcSolution {
            p: values(x, &vars.p),
            u: values(x, &vars.u),
            y: vars.y.iter().map(|r| r.iter().map(|v| v.map_or(0.0, |v| x[v.0])).collect()).collect(),
            flow: values(x, &vars.flow),
            theta: values(x, &vars.theta),
            shed: values(x, &vars.shed),
            curtail: values(x, &vars.curtail),
            objective,
        }
    }

    pub fn horizon(&self) -> usize {
        self.p.first().or(self.shed.first()).map_or(0, Vec::len)
    }

    /// UC-stage cost items (RT items zero).
    pub fn costs(&self, grid: &Grid) -> CostBreakdown {
        let mut c = CostBreakdown::default();
        for (g, gen) in grid.generators.iter().enumerate() {
            for t in 0..self.p[g].len() {
                c.production += gen.cost * self.p[g][t];
                if t > 0 {
                    c.startup += gen.startup_cost * self.y[g][t];
                    c.shutdown += gen.shutdown_cost * (self.u[g][t - 1] - self.u[g][t] + self.y[g][t]);
                }
            }
        }
        for (i, node) in grid.nodes.iter().enumerate() {
            c.uc_shed += node.shed_cost * self.shed[i].iter().sum::<f64>();
            c.uc_curtail += node.curtail_cost * self.curtail[i].iter().sum::<f64>();
        }
        c.with_total()
    }
}

impl RtSolution {
    pub(crate) fn extract(vars: &RtVars, x: &[f64], objective: f64) -> Self {
        RtSolution {
            up: values(x, &vars.up),
            down: values(x, &vars.down),
            flow: values(x, &vars.flow),
            theta: values(x, &vars.theta),
            shed: values(x, &vars.shed),
            curtail: values(x, &vars.curtail),
            objective,
        }
    }

    /// RT-stage cost items (UC items zero).
    pub fn costs(&self, grid: &Grid) -> CostBreakdown {
        let mut c = CostBreakdown::default();
        for (g, gen) in grid.generators.iter().enumerate() {
            c.up_redispatch += gen.up_cost * self.up[g].iter().sum::<f64>();
            c.down_redispatch += gen.down_cost * self.down[g].iter().sum::<f64>();
        }
        for (i, node) in grid.nodes.iter().enumerate() {
            c.rt_shed += node.shed_cost * self.shed[i].iter().sum::<f64>();
            c.rt_curtail += node.curtail_cost * self.curtail[i].iter().sum::<f64>();
        }
        c.with_total()
    }
}

/// Linear expression `sum terms + constant`.
#[derive(Debug, Clone, Default)]
struct Lin {
    terms: Vec<(VarId, f64)>,
    constant: f64,
}

impl Lin {
    fn var(v: VarId) -> Self {
        Lin { terms: vec![(v, 1.0)], constant: 0.0 }
    }

    fn constant(c: f64) -> Self {
        Lin { terms: Vec::new(), constant: c }
    }

    fn add(&mut self, other: &Lin, scale: f64) {
        self.terms.extend(other.terms.iter().map(|&(v, a)| (v, a * scale)));
        self.constant += other.constant * scale;
    }

    fn push(&mut self, v: VarId, a: f64) {
        self.terms.push((v, a));
    }
}

fn add_lin_row(m: &mut ModelInstance, name: String, lhs: Lin, sense: Sense, rhs: f64) -> RowId {
    m.add_row(name, lhs.terms, sense, rhs - lhs.constant)
}

/// Adds the simplex-constrained weight variables `lambda_k in [0, 1]`,
/// `sum_k lambda_k = 1`.
pub(crate) fn add_weight_vars(m: &mut ModelInstance, k: usize, prefix: &str) -> Vec<VarId> {
    let lam: Vec<VarId> = (0..k).map(|j| m.add_var(format!("{prefix}lambda_{}", j + 1), 0.0, 1.0, 0.0)).collect();
    m.add_row(format!("{prefix}simplex"), lam.iter().map(|&v| (v, 1.0)), Sense::Eq, 1.0);
    lam
}

fn check_inputs(grid: &Grid, nodes: usize, horizon: usize) -> Result<()> {
    grid.validate()?;
    if horizon == 0 {
        return Err(Error::InvalidInput("horizon must be at least one hour".into()));
    }
    if nodes != grid.num_nodes() {
        return Err(Error::Dimension(format!("series have {nodes} nodes, grid has {}", grid.num_nodes())));
    }
    Ok(())
}

/// Appends one UC (or UC-R) block to `m`. Objective coefficients are
/// multiplied by `scale`.
pub(crate) fn add_uc_block(
    m: &mut ModelInstance,
    grid: &Grid,
    topo: &Topology,
    forecast: Forecast<'_>,
    horizon: usize,
    variant: UcVariant,
    prefix: &str,
    scale: f64,
) -> UcBlock {
    let t_n = horizon;
    let mut b = UcBlock::default();
    let mut cost: Vec<(VarId, f64)> = Vec::new();

    for gen in &grid.generators {
        let name = &gen.name;
        let p: Vec<VarId> = (0..t_n)
            .map(|t| m.add_var(format!("{prefix}p_{name}_{}", t + 1), f64::NEG_INFINITY, f64::INFINITY, 0.0))
            .collect();
        let u: Vec<VarId> = (0..t_n)
            .map(|t| {
                let n = format!("{prefix}u_{name}_{}", t + 1);
                match variant {
                    UcVariant::Binary => m.add_binary(n, 0.0),
                    UcVariant::Relaxed => m.add_var(n, 0.0, 1.0, 0.0),
                }
            })
            .collect();
        if let Some(s) = gen.initial_status {
            m.set_bounds(u[0], s as f64, s as f64);
        }
        let y: Vec<Option<VarId>> = (0..t_n)
            .map(|t| (t > 0).then(|| m.add_var(format!("{prefix}y_{name}_{}", t + 1), 0.0, f64::INFINITY, 0.0)))
            .collect();
        for t in 0..t_n {
            cost.push((p[t], gen.cost));
            if let Some(yt) = y[t] {
                cost.push((yt, gen.startup_cost + gen.shutdown_cost));
                cost.push((u[t - 1], gen.shutdown_cost));
                cost.push((u[t], -gen.shutdown_cost));
            }
        }
        b.vars.p.push(p);
        b.vars.u.push(u);
        b.vars.y.push(y);
    }
    for (l, line) in grid.lines.iter().enumerate() {
        b.vars.flow.push(
            (0..t_n)
                .map(|t| m.add_var(format!("{prefix}f_l{}_{}", l + 1, t + 1), -line.capacity, line.capacity, 0.0))
                .collect(),
        );
    }
    for node in &grid.nodes {
        let id = node.id;
        b.vars.theta.push(
            (0..t_n)
                .map(|t| m.add_var(format!("{prefix}theta_n{id}_{}", t + 1), f64::NEG_INFINITY, f64::INFINITY, 0.0))
                .collect(),
        );
    }
    for (i, node) in grid.nodes.iter().enumerate() {
        let id = node.id;
        let mut shed = Vec::with_capacity(t_n);
        let mut curt = Vec::with_capacity(t_n);
        for t in 0..t_n {
            let (shed_hi, curt_hi) = match forecast {
                Forecast::Fixed { load, wind } => ((load.get(i, t) - wind.get(i, t)).max(0.0), wind.get(i, t)),
                Forecast::Combined { .. } => (f64::INFINITY, f64::INFINITY),
            };
            shed.push(m.add_var(format!("{prefix}shed_n{id}_{}", t + 1), 0.0, shed_hi, 0.0));
            curt.push(m.add_var(format!("{prefix}curt_n{id}_{}", t + 1), 0.0, curt_hi, 0.0));
            cost.push((shed[t], node.shed_cost));
            cost.push((curt[t], node.curtail_cost));
        }
        b.vars.shed.push(shed);
        b.vars.curtail.push(curt);
    }

    let v = &b.vars;
    let mut rows = Vec::new();
    for (i, node) in grid.nodes.iter().enumerate() {
        let id = node.id;
        for t in 0..t_n {
            let mut terms: Vec<(VarId, f64)> = topo.gens_at[i].iter().map(|&g| (v.p[g][t], 1.0)).collect();
            for (l, &(o, r, _)) in topo.lines.iter().enumerate() {
                if r == i {
                    terms.push((v.flow[l][t], 1.0));
                }
                if o == i {
                    terms.push((v.flow[l][t], -1.0));
                }
            }
            terms.push((v.shed[i][t], 1.0));
            terms.push((v.curtail[i][t], -1.0));
            let rhs = match forecast {
                Forecast::Fixed { load, .. } => load.get(i, t),
                Forecast::Combined { lambda, day } => {
                    for (k, f) in day.forecasts.iter().enumerate() {
                        terms.push((lambda[k], -f.net_load.get(i, t)));
                    }
                    0.0
                }
            };
            rows.push((m.add_row(format!("{prefix}bal_n{id}_{}", t + 1), terms, Sense::Eq, rhs), Scope::Node(i)));
            if let Forecast::Combined { lambda, day } = forecast {
                let mut shed = vec![(v.shed[i][t], 1.0)];
                let mut curt = vec![(v.curtail[i][t], 1.0)];
                for (k, f) in day.forecasts.iter().enumerate() {
                    shed.push((lambda[k], -(f.net_load.get(i, t) - f.wind.get(i, t)).max(0.0)));
                    curt.push((lambda[k], -f.wind.get(i, t)));
                }
                rows.push((m.add_row(format!("{prefix}shedcap_n{id}_{}", t + 1), shed, Sense::Le, 0.0), Scope::Node(i)));
                rows.push((m.add_row(format!("{prefix}curtcap_n{id}_{}", t + 1), curt, Sense::Le, 0.0), Scope::Node(i)));
            }
        }
    }
    for (l, &(o, r, bl)) in topo.lines.iter().enumerate() {
        for t in 0..t_n {
            let terms = [(v.flow[l][t], 1.0), (v.theta[o][t], -bl), (v.theta[r][t], bl)];
            rows.push((m.add_row(format!("{prefix}flow_l{}_{}", l + 1, t + 1), terms, Sense::Eq, 0.0), Scope::Line(l)));
        }
    }
    for t in 0..t_n {
        let terms = [(v.theta[topo.reference][t], 1.0)];
        rows.push((m.add_row(format!("{prefix}ref_{}", t + 1), terms, Sense::Eq, 0.0), Scope::System));
    }

    for (g, gen) in grid.generators.iter().enumerate() {
        let sc = Scope::Generator(g);
        let name = &gen.name;
        let (p, u, y) = (&v.p[g], &v.u[g], &v.y[g]);
        let (pmin, pmax, ramp, su) = (gen.p_min, gen.p_max, gen.ramp, gen.startup_ramp);
        let mut row = |m: &mut ModelInstance, tag: &str, t: usize, terms: Vec<(VarId, f64)>, sense, rhs| {
            rows.push((m.add_row(format!("{prefix}{tag}_{name}_{}", t + 1), terms, sense, rhs), sc));
        };
        let up = gen.min_up as usize;
        let down = gen.min_down as usize;
        for t in up..t_n {
            let mut terms: Vec<(VarId, f64)> = (t + 1 - up..=t).filter_map(|s| y[s]).map(|v| (v, 1.0)).collect();
            terms.push((u[t], -1.0));
            row(m, "minup", t, terms, Sense::Le, 0.0);
        }
        for t in down..t_n {
            let mut terms: Vec<(VarId, f64)> = (t + 1 - down..=t).filter_map(|s| y[s]).map(|v| (v, 1.0)).collect();
            terms.push((u[t - down], 1.0));
            row(m, "mindown", t, terms, Sense::Le, 1.0);
        }
        for t in 1..t_n {
            let yt = y[t].expect("startup variable exists after the first hour");
            row(m, "startup", t, vec![(u[t], 1.0), (u[t - 1], -1.0), (yt, -1.0)], Sense::Le, 0.0);
        }
        for t in 0..t_n {
            row(m, "pmin", t, vec![(p[t], 1.0), (u[t], -pmin)], Sense::Ge, 0.0);
            row(m, "pmax", t, vec![(p[t], 1.0), (u[t], -pmax)], Sense::Le, 0.0);
        }
        for t in 1..t_n {
            row(m, "rampup", t, vec![(p[t], 1.0), (p[t - 1], -1.0), (u[t - 1], su - ramp)], Sense::Le, su);
            row(m, "rampdn", t, vec![(p[t - 1], 1.0), (p[t], -1.0), (u[t], su - ramp)], Sense::Le, su);
        }
        if variant == UcVariant::Relaxed {
            for t in 1..t_n {
                let yt = y[t].expect("startup variable exists after the first hour");
                let terms = vec![(p[t - 1], 1.0), (u[t - 1], -su), (u[t], -(pmax - su)), (yt, pmax - su)];
                row(m, "hull1", t, terms, Sense::Le, 0.0);
                row(m, "hull2", t, vec![(p[t], 1.0), (u[t], -pmax), (yt, pmax - su)], Sense::Le, 0.0);
                let k = pmin + ramp - su;
                let terms = vec![(p[t], 1.0), (p[t - 1], -1.0), (u[t], -(pmin + ramp)), (u[t - 1], pmin), (yt, k)];
                row(m, "hull3", t, terms, Sense::Le, 0.0);
                let terms = vec![(p[t - 1], 1.0), (p[t], -1.0), (u[t - 1], -su), (u[t], su - ramp), (yt, k)];
                row(m, "hull4", t, terms, Sense::Le, 0.0);
            }
        }
    }

    // Merge repeated cost entries so every variable appears once.
    let mut merged: Vec<(VarId, f64)> = Vec::new();
    cost.sort_by_key(|(v, _)| *v);
    for (v, c) in cost {
        match merged.last_mut() {
            Some((w, a)) if *w == v => *a += c,
            _ => merged.push((v, c)),
        }
    }
    for &(v, c) in &merged {
        m.add_objective(v, scale * c);
    }
    b.rows = rows;
    b.cost = merged;
    b
}

/// Appends one RT block to `m` on realized data.
pub(crate) fn add_rt_block(
    m: &mut ModelInstance,
    grid: &Grid,
    topo: &Topology,
    schedule: Schedule<'_>,
    load: &NodeSeries,
    wind: &NodeSeries,
    prefix: &str,
    scale: f64,
) -> RtVars {
    let t_n = load.hours();
    let mut v = RtVars::default();
    for gen in &grid.generators {
        let name = &gen.name;
        v.up.push(
            (0..t_n)
                .map(|t| m.add_var(format!("{prefix}rup_{name}_{}", t + 1), 0.0, gen.ramp, scale * gen.up_cost))
                .collect(),
        );
        v.down.push(
            (0..t_n)
                .map(|t| m.add_var(format!("{prefix}rdn_{name}_{}", t + 1), 0.0, gen.ramp, scale * gen.down_cost))
                .collect(),
        );
    }
    for (l, line) in grid.lines.iter().enumerate() {
        v.flow.push(
            (0..t_n)
                .map(|t| m.add_var(format!("{prefix}rtf_l{}_{}", l + 1, t + 1), -line.capacity, line.capacity, 0.0))
                .collect(),
        );
    }
    for node in &grid.nodes {
        let id = node.id;
        v.theta.push(
            (0..t_n)
                .map(|t| m.add_var(format!("{prefix}rttheta_n{id}_{}", t + 1), f64::NEG_INFINITY, f64::INFINITY, 0.0))
                .collect(),
        );
    }
    for (i, node) in grid.nodes.iter().enumerate() {
        let id = node.id;
        let shed_hi = |t: usize| (load.get(i, t) - wind.get(i, t)).max(0.0);
        v.shed.push(
            (0..t_n)
                .map(|t| m.add_var(format!("{prefix}rtshed_n{id}_{}", t + 1), 0.0, shed_hi(t), scale * node.shed_cost))
                .collect(),
        );
        v.curtail.push(
            (0..t_n)
                .map(|t| {
                    m.add_var(format!("{prefix}rtcurt_n{id}_{}", t + 1), 0.0, wind.get(i, t), scale * node.curtail_cost)
                })
                .collect(),
        );
    }

    let sched_p = |g: usize, t: usize| match schedule {
        Schedule::Fixed(s) => Lin::constant(s.p[g][t]),
        Schedule::Linked(uv) => Lin::var(uv.p[g][t]),
    };
    let sched_u = |g: usize, t: usize| match schedule {
        Schedule::Fixed(s) => Lin::constant(s.u[g][t]),
        Schedule::Linked(uv) => Lin::var(uv.u[g][t]),
    };
    let q = |g: usize, t: usize| {
        let mut e = sched_p(g, t);
        e.push(v.up[g][t], 1.0);
        e.push(v.down[g][t], -1.0);
        e
    };

    for (i, node) in grid.nodes.iter().enumerate() {
        let id = node.id;
        for t in 0..t_n {
            let mut e = Lin::default();
            for &g in &topo.gens_at[i] {
                e.add(&q(g, t), 1.0);
            }
            for (l, &(o, r, _)) in topo.lines.iter().enumerate() {
                if r == i {
                    e.push(v.flow[l][t], 1.0);
                }
                if o == i {
                    e.push(v.flow[l][t], -1.0);
                }
            }
            e.push(v.shed[i][t], 1.0);
            e.push(v.curtail[i][t], -1.0);
            add_lin_row(m, format!("{prefix}rtbal_n{id}_{}", t + 1), e, Sense::Eq, load.get(i, t));
        }
    }
    for (l, &(o, r, bl)) in topo.lines.iter().enumerate() {
        for t in 0..t_n {
            let terms = [(v.flow[l][t], 1.0), (v.theta[o][t], -bl), (v.theta[r][t], bl)];
            m.add_row(format!("{prefix}rtflow_l{}_{}", l + 1, t + 1), terms, Sense::Eq, 0.0);
        }
    }
    for t in 0..t_n {
        m.add_row(format!("{prefix}rtref_{}", t + 1), [(v.theta[topo.reference][t], 1.0)], Sense::Eq, 0.0);
    }
    for (g, gen) in grid.generators.iter().enumerate() {
        let name = &gen.name;
        for t in 0..t_n {
            let mut lo = q(g, t);
            lo.add(&sched_u(g, t), -gen.p_min);
            add_lin_row(m, format!("{prefix}rtpmin_{name}_{}", t + 1), lo, Sense::Ge, 0.0);
            let mut hi = q(g, t);
            hi.add(&sched_u(g, t), -gen.p_max);
            add_lin_row(m, format!("{prefix}rtpmax_{name}_{}", t + 1), hi, Sense::Le, 0.0);
        }
        let slack = gen.startup_ramp - gen.ramp;
        for t in 1..t_n {
            let mut e = q(g, t);
            e.add(&q(g, t - 1), -1.0);
            e.add(&sched_u(g, t - 1), slack);
            add_lin_row(m, format!("{prefix}rtrampup_{name}_{}", t + 1), e, Sense::Le, gen.startup_ramp);
            let mut e = q(g, t - 1);
            e.add(&q(g, t), -1.0);
            e.add(&sched_u(g, t), slack);
            add_lin_row(m, format!("{prefix}rtrampdn_{name}_{}", t + 1), e, Sense::Le, gen.startup_ramp);
        }
    }
    v
}

fn build(grid: &Grid, load: &NodeSeries, wind: &NodeSeries, variant: UcVariant) -> Result<UcModel> {
    check_inputs(grid, load.nodes(), load.hours())?;
    if wind.shape() != load.shape() {
        return Err(Error::Dimension("wind and net-load forecasts differ in shape".into()));
    }
    let topo = grid.topology();
    let name = match variant {
        UcVariant::Binary => "uc",
        UcVariant::Relaxed => "ucr",
    };
    let mut model = ModelInstance::new(name);
    let block =
        add_uc_block(&mut model, grid, &topo, Forecast::Fixed { load, wind }, load.hours(), variant, "", 1.0);
    Ok(UcModel { model, vars: block.vars, variant })
}

/// Day-ahead UC MILP on fixed forecasts.
pub fn build_uc(grid: &Grid, load: &NodeSeries, wind: &NodeSeries) -> Result<UcModel> {
    build(grid, load, wind, UcVariant::Binary)
}

/// Convex-hull LP relaxation of [`build_uc`].
pub fn build_ucr(grid: &Grid, load: &NodeSeries, wind: &NodeSeries) -> Result<UcModel> {
    build(grid, load, wind, UcVariant::Relaxed)
}

pub fn build_uc_variant(grid: &Grid, load: &NodeSeries, wind: &NodeSeries, variant: UcVariant) -> Result<UcModel> {
    build(grid, load, wind, variant)
}

/// Real-time redispatch LP with the day-ahead schedule held fixed.
pub fn build_rt(grid: &Grid, schedule: &UcSolution, load: &NodeSeries, wind: &NodeSeries) -> Result<RtModel> {
    check_inputs(grid, load.nodes(), load.hours())?;
    let t_n = load.hours();
    let g_n = grid.num_generators();
    let ok = wind.shape() == load.shape()
        && schedule.p.len() == g_n
        && schedule.u.len() == g_n
        && schedule.p.iter().chain(&schedule.u).all(|r| r.len() == t_n);
    if !ok {
        return Err(Error::Dimension(format!(
            "schedule or realized series do not match {g_n} generators over {t_n} hours"
        )));
    }
    let topo = grid.topology();
    let mut model = ModelInstance::new("rt");
    let vars = add_rt_block(&mut model, grid, &topo, Schedule::Fixed(schedule), load, wind, "", 1.0);
    Ok(RtModel { model, vars })
}

impl UcModel {
    pub fn solve(&self) -> Result<UcSolution> {
        let sol = solver::solve(&self.model).require_optimal(format!("{} model", self.model.name))?;
        Ok(UcSolution::extract(&self.vars, &sol.x, sol.objective))
    }
}

impl RtModel {
    pub fn solve(&self) -> Result<RtSolution> {
        let sol = solver::solve_lp(&self.model).require_optimal("rt model")?;
        Ok(RtSolution::extract(&self.vars, &sol.x, sol.objective))
    }
}

/// Solves UC (or UC-R) on fixed forecasts.
pub fn solve_uc(grid: &Grid, load: &NodeSeries, wind: &NodeSeries, variant: UcVariant) -> Result<UcSolution> {
    build(grid, load, wind, variant)?.solve()
}

/// Full result of running one day through both stages.
#[derive(Debug, Clone)]
pub struct TwoStageOutcome {
    pub costs: CostBreakdown,
    pub uc: UcSolution,
    pub rt: RtSolution,
}

/// Schedules on the weighted forecast, then redispatches against realized
/// data, returning every stage's decisions.
pub fn two_stage(grid: &Grid, weights: &Weights, day: &ScenarioDay, variant: UcVariant) -> Result<TwoStageOutcome> {
    let run = || -> Result<TwoStageOutcome> {
        day.validate()?;
        let (load, wind) = combine_forecasts(weights, day)?;
        let uc = solve_uc(grid, &load, &wind, variant)?;
        let rt = build_rt(grid, &uc, &day.realized_load, &day.realized_wind)?.solve()?;
        let a = uc.costs(grid);
        let b = rt.costs(grid);
        let costs = CostBreakdown {
            up_redispatch: b.up_redispatch,
            down_redispatch: b.down_redispatch,
            rt_shed: b.rt_shed,
            rt_curtail: b.rt_curtail,
            ..a
        }
        .with_total();
        Ok(TwoStageOutcome { costs, uc, rt })
    };
    run().map_err(|e| e.on_day(day.day))
}

/// Two-stage operating cost of one day under `weights`.
pub fn two_stage_cost(grid: &Grid, weights: &Weights, day: &ScenarioDay, variant: UcVariant) -> Result<CostBreakdown> {
    two_stage(grid, weights, day, variant).map(|o| o.costs)
}

/// Sum of the UC objective terms for a given block solution (used by
/// trainers to split joint objectives back into stages).
pub(crate) fn block_cost(cost: &[(VarId, f64)], x: &[f64]) -> f64 {
    cost.iter().map(|&(v, c)| c * x[v.0]).sum()
}

/// Largest balance/flow/reference residual of a solved UC model.
pub fn uc_residuals(grid: &Grid, sol: &UcSolution, load: &NodeSeries) -> (f64, f64) {
    let topo = grid.topology();
    let mut bal: f64 = 0.0;
    let mut flow: f64 = 0.0;
    for (i, _) in grid.nodes.iter().enumerate() {
        for t in 0..load.hours() {
            let mut lhs: f64 = topo.gens_at[i].iter().map(|&g| sol.p[g][t]).sum();
            for (l, &(o, r, _)) in topo.lines.iter().enumerate() {
                if r == i {
                    lhs += sol.flow[l][t];
                }
                if o == i {
                    lhs -= sol.flow[l][t];
                }
            }
            lhs += sol.shed[i][t] - sol.curtail[i][t];
            bal = bal.max((lhs - load.get(i, t)).abs());
        }
    }
    for (l, &(o, r, b)) in topo.lines.iter().enumerate() {
        for t in 0..load.hours() {
            flow = flow.max((sol.flow[l][t] - b * (sol.theta[o][t] - sol.theta[r][t])).abs());
        }
    }
    for t in 0..load.hours() {
        flow = flow.max(sol.theta[topo.reference][t].abs());
    }
    (bal, flow)
}
