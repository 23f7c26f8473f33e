//! Reference exact solver for [`ModelInstance`]s.
//!
//! LPs go through a bounded-variable primal simplex; MILPs through best-bound
//! branch-and-bound on top of it. Both are single-threaded and fully
//! deterministic: the same model always yields the same [`Solution`].

mod external;
mod lp_format;
mod milp;
mod pwl;
mod simplex;

pub use external::{parse_solution_file, ExternalSolver};
pub use lp_format::{export_lp_file, write_lp_string};
pub use pwl::{add_pwl_quadratic, pwl_error_bound};

use crate::error::{Error, Result};
use crate::model::{ModelInstance, Sense, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    NodeLimit,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub iterations: usize,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    /// Row duals as objective sensitivities `d obj / d rhs`. For MILPs these
    /// come from the final LP with integers fixed at the incumbent.
    pub duals: Vec<f64>,
    /// `c_j - sum_r dual_r a_rj`.
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    pub stats: SolveStats,
}

impl Solution {
    pub(crate) fn with_status(status: SolveStatus, n: usize, m: usize) -> Self {
        Solution {
            status,
            x: vec![0.0; n],
            duals: vec![0.0; m],
            reduced_costs: vec![0.0; n],
            objective: f64::NAN,
            stats: SolveStats::default(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// Converts a non-optimal status into an error carrying `context`.
    pub fn require_optimal(self, context: impl Into<String>) -> Result<Self> {
        match self.status {
            SolveStatus::Optimal => Ok(self),
            SolveStatus::Infeasible => Err(Error::Infeasible { context: context.into() }),
            status => Err(Error::Solver { context: context.into(), status }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LpOptions {
    pub max_iterations: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self { max_iterations: 1_000_000, bland_after: 200 }
    }
}

#[derive(Debug, Clone)]
pub struct MilpOptions {
    pub lp: LpOptions,
    pub max_nodes: usize,
    pub absolute_gap: f64,
    /// Relative gap used alongside the absolute one; keeps large objectives
    /// from chasing floating-point noise.
    pub relative_gap: f64,
    pub integrality_tol: f64,
    /// Run the rounding heuristic at the root and every this many nodes.
    pub heuristic_every: usize,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self {
            lp: LpOptions::default(),
            max_nodes: 1_000_000,
            absolute_gap: 1e-6,
            relative_gap: 1e-9,
            integrality_tol: 1e-6,
            heuristic_every: 20,
        }
    }
}

/// Solves an LP. Integer flags are ignored, so this also yields the LP
/// relaxation of a MILP.
pub fn solve_lp(model: &ModelInstance) -> Solution {
    solve_lp_with(model, &LpOptions::default())
}

pub fn solve_lp_with(model: &ModelInstance, opts: &LpOptions) -> Solution {
    let lo: Vec<f64> = model.vars.iter().map(|v| v.lower).collect();
    let hi: Vec<f64> = model.vars.iter().map(|v| v.upper).collect();
    simplex::solve_bounded(model, &lo, &hi, opts)
}

/// Solves the LP with variable bounds replaced by `lower`/`upper`.
pub fn solve_lp_bounded(model: &ModelInstance, lower: &[f64], upper: &[f64], opts: &LpOptions) -> Solution {
    simplex::solve_bounded(model, lower, upper, opts)
}

pub fn solve_milp(model: &ModelInstance) -> Solution {
    solve_milp_with(model, &MilpOptions::default())
}

pub fn solve_milp_with(model: &ModelInstance, opts: &MilpOptions) -> Solution {
    milp::branch_and_bound(model, opts, &[])
}

/// Branch-and-bound seeded with a partial assignment of integer variables.
/// The LP with those variables fixed supplies the first incumbent when it is
/// feasible and integral; otherwise the start is ignored.
pub fn solve_milp_with_start(model: &ModelInstance, opts: &MilpOptions, start: &[(VarId, f64)]) -> Solution {
    milp::branch_and_bound(model, opts, start)
}

/// Dispatches to [`solve_milp`] or [`solve_lp`] depending on integrality.
pub fn solve(model: &ModelInstance) -> Solution {
    if model.has_integers() {
        solve_milp(model)
    } else {
        solve_lp(model)
    }
}

/// Optimality certificate residuals of an LP solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityReport {
    /// `|primal objective - dual objective|`.
    pub gap: f64,
    /// Largest wrong-signed row dual or reduced cost.
    pub dual_infeasibility: f64,
    /// Largest `|dual_r * slack_r|` or `|d_j * distance to bound|`.
    pub complementarity: f64,
}

/// Checks weak/strong duality of an optimal LP solution using its row duals
/// and reduced costs. The dual objective is `b^T y + sum_j d_j x_j` with every
/// nonzero `d_j` paired with the bound it certifies.
pub fn duality_report(model: &ModelInstance, sol: &Solution) -> DualityReport {
    let x = &sol.x;
    let y = &sol.duals;
    let mut dual_obj = model.objective_constant;
    let mut dual_inf: f64 = 0.0;
    let mut comp: f64 = 0.0;
    for (r, row) in model.rows.iter().enumerate() {
        dual_obj += y[r] * row.rhs;
        let slack = row.rhs - row.activity(x);
        let wrong = match row.sense {
            Sense::Le => y[r].max(0.0),
            Sense::Ge => (-y[r]).max(0.0),
            Sense::Eq => 0.0,
        };
        dual_inf = dual_inf.max(wrong);
        if row.sense != Sense::Eq {
            comp = comp.max((y[r] * slack).abs());
        }
    }
    for (j, v) in model.vars.iter().enumerate() {
        let d = sol.reduced_costs[j];
        // A positive reduced cost is certified by the lower bound, a negative
        // one by the upper bound.
        let bound = if d > 0.0 { v.lower } else { v.upper };
        if d != 0.0 {
            if bound.is_finite() {
                dual_obj += d * bound;
                comp = comp.max((d * (x[j] - bound)).abs());
            } else {
                dual_inf = dual_inf.max(d.abs());
            }
        }
    }
    DualityReport { gap: (sol.objective - dual_obj).abs(), dual_infeasibility: dual_inf, complementarity: comp }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Sense;

    #[test]
    fn bound_row_dual_is_one() {
        let mut m = ModelInstance::new("t");
        let x = m.add_var("x", 0.0, 10.0, 1.0);
        m.add_row("c", [(x, 1.0)], Sense::Ge, 3.0);
        let s = solve_lp(&m);
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.x[0] - 3.0).abs() < 1e-12);
        assert!((s.duals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_region_is_infeasible() {
        let mut m = ModelInstance::new("t");
        let x = m.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 0.0);
        m.objective[x.0] = 0.0;
        m.add_row("lo", [(x, 1.0)], Sense::Ge, 1.0);
        m.add_row("hi", [(x, 1.0)], Sense::Le, 0.0);
        assert_eq!(solve_lp(&m).status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_direction_detected() {
        let mut m = ModelInstance::new("t");
        let x = m.add_var("x", 0.0, f64::INFINITY, -1.0);
        let y = m.add_var("y", 0.0, f64::INFINITY, 0.0);
        m.add_row("r", [(x, 1.0), (y, -1.0)], Sense::Le, 2.0);
        assert_eq!(solve_lp(&m).status, SolveStatus::Unbounded);
    }

    #[test]
    fn no_rows_picks_best_bounds() {
        let mut m = ModelInstance::new("t");
        m.add_var("a", -1.0, 2.0, 3.0);
        m.add_var("b", -1.0, 2.0, -3.0);
        let s = solve_lp(&m);
        assert_eq!(s.x, vec![-1.0, 2.0]);
        assert_eq!(s.objective, -9.0);
    }

    #[test]
    fn binary_minimization() {
        let mut m = ModelInstance::new("t");
        m.add_binary("x", -1.0);
        let s = solve_milp(&m);
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_eq!(s.x[0], 1.0);
        assert_eq!(s.objective, -1.0);
    }

    #[test]
    fn integral_relaxation_needs_one_node() {
        let mut m = ModelInstance::new("t");
        let x = m.add_int_var("x", 0.0, 5.0, 1.0);
        let y = m.add_var("y", 0.0, 5.0, 2.0);
        m.add_row("r", [(x, 1.0), (y, 1.0)], Sense::Ge, 3.0);
        let s = solve_milp(&m);
        let lp = solve_lp(&m);
        assert_eq!(s.stats.nodes, 1);
        assert!((s.objective - lp.objective).abs() < 1e-9);
    }

    #[test]
    fn knapsack_needs_branching() {
        let mut m = ModelInstance::new("t");
        let a = m.add_binary("a", -5.0);
        let b = m.add_binary("b", -4.0);
        let c = m.add_binary("c", -3.0);
        m.add_row("w", [(a, 2.0), (b, 3.0), (c, 1.0)], Sense::Le, 4.0);
        let s = solve_milp(&m);
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective + 8.0).abs() < 1e-9);
        assert_eq!(s.x, vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn duality_holds_on_small_lp() {
        let mut m = ModelInstance::new("t");
        let x = m.add_var("x", 0.0, 4.0, -3.0);
        let y = m.add_var("y", 0.0, f64::INFINITY, -2.0);
        m.add_row("a", [(x, 1.0), (y, 1.0)], Sense::Le, 5.0);
        m.add_row("b", [(x, 1.0), (y, 3.0)], Sense::Le, 9.0);
        let s = solve_lp(&m);
        assert!((s.objective + 14.0).abs() < 1e-9);
        let d = duality_report(&m, &s);
        assert!(d.gap < 1e-9 && d.dual_infeasibility < 1e-9 && d.complementarity < 1e-9, "{d:?}");
    }
}
