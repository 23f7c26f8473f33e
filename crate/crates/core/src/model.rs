//! Abstract LP/MILP container shared by every model builder and the solver.
//!
//! A [`ModelInstance`] is an explicit list of bounded variables, linear rows and
//! a linear objective. Builders append to it; once handed to a solver it is only
//! read, so an instance can be shared freely between threads.

use std::fmt;

use crate::error::{Error, Result};

/// Index of a variable inside its [`ModelInstance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

/// Index of a constraint row inside its [`ModelInstance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub integer: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    /// Left-hand side value at `x`.
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, a)| a * x[v.0]).sum()
    }

    /// Amount by which `x` violates this row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Epigraph block produced by [`crate::solver::add_pwl_quadratic`]:
/// `epigraph >= coefficient * (var - center)^2`, approximated by secants
/// through `knots`.
#[derive(Debug, Clone, PartialEq)]
pub struct PwlBlock {
    pub var: VarId,
    pub epigraph: VarId,
    pub center: f64,
    pub coefficient: f64,
    pub knots: Vec<f64>,
    pub rows: Vec<RowId>,
}

impl PwlBlock {
    /// Value of the secant interpolant at `x` (within the knot range).
    pub fn interpolant(&self, x: f64) -> f64 {
        let q = |v: f64| self.coefficient * (v - self.center).powi(2);
        let k = &self.knots;
        let j = match k.iter().position(|&kn| kn >= x) {
            Some(0) => return q(k[0]),
            Some(j) => j,
            None => return q(*k.last().unwrap()),
        };
        let (a, b) = (k[j - 1], k[j]);
        let w = (x - a) / (b - a);
        (1.0 - w) * q(a) + w * q(b)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelInstance {
    pub name: String,
    pub vars: Vec<Variable>,
    pub rows: Vec<Constraint>,
    /// Dense objective coefficients, one per variable (minimization).
    pub objective: Vec<f64>,
    pub objective_constant: f64,
    pub pwl_blocks: Vec<PwlBlock>,
}

impl ModelInstance {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), ..Self::default() }
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> VarId {
        self.push_var(name.into(), lower, upper, cost, false)
    }

    pub fn add_int_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> VarId {
        self.push_var(name.into(), lower, upper, cost, true)
    }

    pub fn add_binary(&mut self, name: impl Into<String>, cost: f64) -> VarId {
        self.push_var(name.into(), 0.0, 1.0, cost, true)
    }

    fn push_var(&mut self, name: String, lower: f64, upper: f64, cost: f64, integer: bool) -> VarId {
        let id = VarId(self.vars.len());
        self.vars.push(Variable { name, lower, upper, integer });
        self.objective.push(cost);
        id
    }

    /// Appends a row. Zero coefficients are dropped and repeated variables merged.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> RowId {
        let mut merged: Vec<(VarId, f64)> = Vec::new();
        for (v, a) in terms {
            if let Some(slot) = merged.iter_mut().find(|(w, _)| *w == v) {
                slot.1 += a;
            } else {
                merged.push((v, a));
            }
        }
        merged.retain(|&(_, a)| a != 0.0);
        let id = RowId(self.rows.len());
        self.rows.push(Constraint { name: name.into(), terms: merged, sense, rhs });
        id
    }

    pub fn add_objective(&mut self, var: VarId, cost: f64) {
        self.objective[var.0] += cost;
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) {
        self.vars[var.0].lower = lower;
        self.vars[var.0].upper = upper;
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn find_var(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name).map(VarId)
    }

    pub fn has_integers(&self) -> bool {
        self.vars.iter().any(|v| v.integer)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_constant + self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    /// Largest bound or row violation at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let bounds = self
            .vars
            .iter()
            .zip(x)
            .map(|(v, &xv)| (v.lower - xv).max(xv - v.upper).max(0.0))
            .fold(0.0, f64::max);
        self.rows.iter().map(|r| r.violation(x)).fold(bounds, f64::max)
    }

    /// Structural checks: bounds ordered, integer bounds finite, row
    /// references valid, PWL variables bounded.
    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.vars.len() {
            return Err(Error::InvalidModel("objective length differs from variable count".into()));
        }
        for v in &self.vars {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(Error::InvalidModel(format!("variable {} has bounds [{}, {}]", v.name, v.lower, v.upper)));
            }
            if v.integer && !(v.lower.is_finite() && v.upper.is_finite()) {
                return Err(Error::InvalidModel(format!("integer variable {} must have finite bounds", v.name)));
            }
        }
        for r in &self.rows {
            if !r.rhs.is_finite() {
                return Err(Error::InvalidModel(format!("row {} has non-finite rhs", r.name)));
            }
            for &(v, a) in &r.terms {
                if v.0 >= self.vars.len() || !a.is_finite() {
                    return Err(Error::InvalidModel(format!("row {} references an invalid term", r.name)));
                }
            }
        }
        for b in &self.pwl_blocks {
            let v = &self.vars[b.var.0];
            if !(v.lower.is_finite() && v.upper.is_finite()) {
                return Err(Error::InvalidModel(format!("PWL block on unbounded variable {}", v.name)));
            }
        }
        Ok(())
    }
}
