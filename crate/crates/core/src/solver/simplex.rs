//! Bounded-variable primal simplex.
//!
//! Every row `a x (<=|=|>=) b` gets a logical column `s` so that the working
//! system is `A x + s = b` with `s` in `[0, inf)`, `(-inf, 0]` or `{0}`.
//! Rows whose logical cannot absorb the initial residual receive an artificial
//! column; phase one drives those to zero. The basis inverse is kept dense in
//! column-major order, updated by elementary row operations and rebuilt from
//! scratch every `REFACTOR_EVERY` pivots.

use super::{LpOptions, SolveStats, SolveStatus, Solution};
use crate::model::{ModelInstance, Sense};

const REFACTOR_EVERY: usize = 100;
const PIVOT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic,
    AtLower,
    AtUpper,
    /// Free nonbasic column parked at zero.
    Zero,
}

struct Tableau {
    m: usize,
    /// Sparse columns: structurals, then logicals, then artificials.
    cols: Vec<Vec<(usize, f64)>>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    state: Vec<State>,
    /// `head[i]` is the column basic in position `i`.
    head: Vec<usize>,
    /// Column-major dense basis inverse: entry (i, k) at `binv[k * m + i]`.
    binv: Vec<f64>,
    rhs: Vec<f64>,
    feas_tol: f64,
    iterations: usize,
    max_iterations: usize,
    bland_after: usize,
}

enum Phase {
    Optimal,
    Unbounded,
    IterationLimit,
    Singular,
}

pub(crate) fn solve_bounded(model: &ModelInstance, lower: &[f64], upper: &[f64], opts: &LpOptions) -> Solution {
    let n = model.num_vars();
    let m = model.num_rows();

    if lower.iter().zip(upper).any(|(l, u)| l > u) {
        return Solution::with_status(SolveStatus::Infeasible, n, m);
    }

    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (r, row) in model.rows.iter().enumerate() {
        for &(v, a) in &row.terms {
            cols[v.0].push((r, a));
        }
    }
    let mut lo = lower.to_vec();
    let mut hi = upper.to_vec();
    for (r, row) in model.rows.iter().enumerate() {
        cols.push(vec![(r, 1.0)]);
        let (l, u) = match row.sense {
            Sense::Le => (0.0, f64::INFINITY),
            Sense::Ge => (f64::NEG_INFINITY, 0.0),
            Sense::Eq => (0.0, 0.0),
        };
        lo.push(l);
        hi.push(u);
    }
    let rhs: Vec<f64> = model.rows.iter().map(|r| r.rhs).collect();
    let scale = rhs.iter().chain(lower.iter()).chain(upper.iter()).filter(|v| v.is_finite()).fold(1.0f64, |a, &b| a.max(b.abs()));

    // Nonbasic structurals start at a finite bound, preferring the one the
    // objective favours.
    let mut x = vec![0.0; n + m];
    let mut state = vec![State::Zero; n + m];
    for j in 0..n {
        let c = model.objective[j];
        let (l, u) = (lo[j], hi[j]);
        let (val, st) = match (l.is_finite(), u.is_finite()) {
            (true, true) if c < 0.0 => (u, State::AtUpper),
            (true, _) => (l, State::AtLower),
            (false, true) => (u, State::AtUpper),
            (false, false) => (0.0, State::Zero),
        };
        x[j] = val;
        state[j] = st;
    }
    let mut resid = rhs.clone();
    for j in 0..n {
        if x[j] != 0.0 {
            for &(r, a) in &cols[j] {
                resid[r] -= a * x[j];
            }
        }
    }

    let mut head = Vec::with_capacity(m);
    let mut diag = Vec::with_capacity(m);
    let mut artificials = Vec::new();
    for r in 0..m {
        let s = n + r;
        let v = resid[r];
        if v >= lo[s] - 1e-12 && v <= hi[s] + 1e-12 {
            x[s] = v.clamp(lo[s], hi[s]);
            state[s] = State::Basic;
            head.push(s);
            diag.push(1.0);
        } else {
            // Logical sits at its violated bound; an artificial carries the rest.
            let (bound, st) = if v < lo[s] { (lo[s], State::AtLower) } else { (hi[s], State::AtUpper) };
            x[s] = bound;
            state[s] = st;
            let sign = if v - bound >= 0.0 { 1.0 } else { -1.0 };
            let a = cols.len();
            cols.push(vec![(r, sign)]);
            lo.push(0.0);
            hi.push(f64::INFINITY);
            x.push((v - bound).abs());
            state.push(State::Basic);
            head.push(a);
            diag.push(sign);
            artificials.push(a);
        }
    }

    let mut binv = vec![0.0; m * m];
    for i in 0..m {
        binv[i * m + i] = 1.0 / diag[i];
    }

    let mut tab = Tableau {
        m,
        cols,
        lo,
        hi,
        x,
        state,
        head,
        binv,
        rhs,
        feas_tol: 1e-9 * scale.max(1.0).sqrt(),
        iterations: 0,
        max_iterations: opts.max_iterations,
        bland_after: opts.bland_after,
    };

    let total = tab.cols.len();
    if !artificials.is_empty() {
        let mut c1 = vec![0.0; total];
        for &a in &artificials {
            c1[a] = 1.0;
        }
        match tab.run(&c1) {
            Phase::Optimal => {}
            Phase::IterationLimit => return tab.finish(model, SolveStatus::IterationLimit, &c1),
            Phase::Singular | Phase::Unbounded => {
                return tab.finish(model, SolveStatus::NumericalFailure, &c1);
            }
        }
        let infeas: f64 = artificials.iter().map(|&a| tab.x[a]).sum();
        if infeas > 1e-7 * scale.max(1.0) {
            return tab.finish(model, SolveStatus::Infeasible, &c1);
        }
        for &a in &artificials {
            tab.hi[a] = 0.0;
            tab.x[a] = 0.0;
            if tab.state[a] != State::Basic {
                tab.state[a] = State::AtLower;
            }
        }
        tab.refactor();
    }

    let mut c2 = vec![0.0; total];
    c2[..n].copy_from_slice(&model.objective);
    let status = match tab.run(&c2) {
        Phase::Optimal => SolveStatus::Optimal,
        Phase::Unbounded => SolveStatus::Unbounded,
        Phase::IterationLimit => SolveStatus::IterationLimit,
        Phase::Singular => SolveStatus::NumericalFailure,
    };
    tab.finish(model, status, &c2)
}

impl Tableau {
    fn binv_col(&self, k: usize) -> &[f64] {
        &self.binv[k * self.m..(k + 1) * self.m]
    }

    /// `B^-1 a_j`.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for &(r, a) in &self.cols[j] {
            for (o, b) in out.iter_mut().zip(self.binv_col(r)) {
                *o += a * b;
            }
        }
        out
    }

    /// `y = c_B^T B^-1`.
    fn duals(&self, c: &[f64]) -> Vec<f64> {
        let cb: Vec<f64> = self.head.iter().map(|&j| c[j]).collect();
        (0..self.m).map(|k| cb.iter().zip(self.binv_col(k)).map(|(a, b)| a * b).sum()).collect()
    }

    fn reduced_cost(&self, c: &[f64], y: &[f64], j: usize) -> f64 {
        c[j] - self.cols[j].iter().map(|&(r, a)| y[r] * a).sum::<f64>()
    }

    /// Rebuilds the basis inverse by Gauss-Jordan elimination with partial
    /// pivoting and recomputes basic values. Returns false if singular.
    fn refactor(&mut self) -> bool {
        let m = self.m;
        if m == 0 {
            return true;
        }
        // Row-major copy of B and an identity that becomes B^-1.
        let mut a = vec![0.0; m * m];
        for (pos, &j) in self.head.iter().enumerate() {
            for &(r, v) in &self.cols[j] {
                a[r * m + pos] = v;
            }
        }
        let mut e = vec![0.0; m * m];
        for i in 0..m {
            e[i * m + i] = 1.0;
        }
        let mut nz = Vec::with_capacity(m);
        for col in 0..m {
            let mut piv = col;
            let mut best = a[col * m + col].abs();
            for r in col + 1..m {
                let v = a[r * m + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best < 1e-13 {
                return false;
            }
            if piv != col {
                for k in col..m {
                    a.swap(col * m + k, piv * m + k);
                }
                for k in 0..m {
                    e.swap(col * m + k, piv * m + k);
                }
            }
            let d = a[col * m + col];
            for k in col..m {
                a[col * m + k] /= d;
            }
            nz.clear();
            for k in 0..m {
                if e[col * m + k] != 0.0 {
                    e[col * m + k] /= d;
                    nz.push(k);
                }
            }
            let prow_a = a[col * m..(col + 1) * m].to_vec();
            let prow_e = e[col * m..(col + 1) * m].to_vec();
            for r in 0..m {
                if r == col {
                    continue;
                }
                let f = a[r * m + col];
                if f != 0.0 {
                    for k in col..m {
                        a[r * m + k] -= f * prow_a[k];
                    }
                    for &k in &nz {
                        e[r * m + k] -= f * prow_e[k];
                    }
                }
            }
        }
        // `e` holds B^-1 row-major (row = basis position); the column-major
        // layout is its transpose.
        let mut inv = vec![0.0; m * m];
        for pos in 0..m {
            for r in 0..m {
                inv[r * m + pos] = e[pos * m + r];
            }
        }
        self.binv = inv;
        self.recompute_basics();
        true
    }

    fn recompute_basics(&mut self) {
        let mut r = self.rhs.clone();
        for (j, col) in self.cols.iter().enumerate() {
            if self.state[j] != State::Basic && self.x[j] != 0.0 {
                for &(row, a) in col {
                    r[row] -= a * self.x[j];
                }
            }
        }
        let mut xb = vec![0.0; self.m];
        for (k, rk) in r.iter().enumerate() {
            if *rk != 0.0 {
                for (o, b) in xb.iter_mut().zip(self.binv_col(k)) {
                    *o += rk * b;
                }
            }
        }
        for (pos, &j) in self.head.iter().enumerate() {
            self.x[j] = xb[pos];
        }
    }

    fn run(&mut self, c: &[f64]) -> Phase {
        let m = self.m;
        let total = self.cols.len();
        let cmax = c.iter().fold(1.0f64, |a, &b| a.max(b.abs()));
        let opt_tol = 1e-9 * cmax;
        let mut y = self.duals(c);
        let mut degenerate_run = 0usize;
        let mut since_refactor = 0usize;

        loop {
            if self.iterations >= self.max_iterations {
                return Phase::IterationLimit;
            }
            let bland = degenerate_run >= self.bland_after;

            // Pricing.
            let mut enter: Option<(usize, f64, f64)> = None; // (col, d, dir)
            for j in 0..total {
                let st = self.state[j];
                if st == State::Basic || self.lo[j] == self.hi[j] {
                    continue;
                }
                let d = self.reduced_cost(c, &y, j);
                let dir = match st {
                    State::AtLower if d < -opt_tol => 1.0,
                    State::AtUpper if d > opt_tol => -1.0,
                    State::Zero if d.abs() > opt_tol => -d.signum(),
                    _ => continue,
                };
                if bland {
                    enter = Some((j, d, dir));
                    break;
                }
                if enter.is_none_or(|(_, bd, _)| d.abs() > bd.abs()) {
                    enter = Some((j, d, dir));
                }
            }
            let Some((q, dq, dir)) = enter else {
                return Phase::Optimal;
            };

            let alpha = self.ftran(q);

            // Harris two-pass ratio test over basic variables, plus the
            // entering column's own bound flip.
            let tol = self.feas_tol;
            let mut theta_max = f64::INFINITY;
            for i in 0..m {
                let delta = -dir * alpha[i];
                if delta.abs() <= PIVOT_TOL {
                    continue;
                }
                let j = self.head[i];
                let lim = if delta < 0.0 {
                    if self.lo[j].is_finite() { (self.x[j] - self.lo[j] + tol) / -delta } else { continue }
                } else if self.hi[j].is_finite() {
                    (self.hi[j] - self.x[j] + tol) / delta
                } else {
                    continue;
                };
                theta_max = theta_max.min(lim);
            }
            let flip = self.hi[q] - self.lo[q];
            let mut leave: Option<usize> = None;
            let mut theta = f64::INFINITY;
            if theta_max.is_finite() {
                let mut best_pivot = 0.0;
                for i in 0..m {
                    let delta = -dir * alpha[i];
                    if delta.abs() <= PIVOT_TOL {
                        continue;
                    }
                    let j = self.head[i];
                    let ratio = if delta < 0.0 {
                        if self.lo[j].is_finite() { (self.x[j] - self.lo[j]) / -delta } else { continue }
                    } else if self.hi[j].is_finite() {
                        (self.hi[j] - self.x[j]) / delta
                    } else {
                        continue;
                    };
                    if ratio <= theta_max {
                        let better = if bland {
                            leave.is_none_or(|l: usize| self.head[l] > j)
                        } else {
                            alpha[i].abs() > best_pivot
                        };
                        if better {
                            best_pivot = alpha[i].abs();
                            leave = Some(i);
                            theta = ratio.max(0.0);
                        }
                    }
                }
            }
            if flip.is_finite() && flip <= theta {
                // Bound flip, no basis change.
                let step = dir * flip;
                self.x[q] += step;
                for i in 0..m {
                    if alpha[i] != 0.0 {
                        let j = self.head[i];
                        self.x[j] -= step * alpha[i];
                    }
                }
                self.state[q] = if dir > 0.0 { State::AtUpper } else { State::AtLower };
                self.iterations += 1;
                degenerate_run = if flip <= 1e-12 { degenerate_run + 1 } else { 0 };
                continue;
            }
            let Some(p) = leave else {
                return Phase::Unbounded;
            };

            let step = dir * theta;
            self.x[q] += step;
            for i in 0..m {
                if alpha[i] != 0.0 {
                    let j = self.head[i];
                    self.x[j] -= step * alpha[i];
                }
            }
            let out = self.head[p];
            let delta_p = -dir * alpha[p];
            if delta_p < 0.0 {
                self.x[out] = self.lo[out];
                self.state[out] = State::AtLower;
            } else {
                self.x[out] = self.hi[out];
                self.state[out] = State::AtUpper;
            }
            self.state[q] = State::Basic;
            self.head[p] = q;

            // Eta update of the column-major inverse.
            let ap = alpha[p];
            for k in 0..m {
                let col = &mut self.binv[k * m..(k + 1) * m];
                let v = col[p] / ap;
                if v != 0.0 {
                    for i in 0..m {
                        if alpha[i] != 0.0 {
                            col[i] -= alpha[i] * v;
                        }
                    }
                }
                col[p] = v;
            }
            // y_new = y + d_q * (row p of new B^-1).
            for k in 0..m {
                y[k] += dq * self.binv[k * m + p];
            }

            self.iterations += 1;
            degenerate_run = if theta <= 1e-12 { degenerate_run + 1 } else { 0 };
            since_refactor += 1;
            if since_refactor >= REFACTOR_EVERY {
                since_refactor = 0;
                if !self.refactor() {
                    return Phase::Singular;
                }
                y = self.duals(c);
            }
        }
    }

    fn finish(mut self, model: &ModelInstance, status: SolveStatus, c: &[f64]) -> Solution {
        let n = model.num_vars();
        let m = self.m;
        if status == SolveStatus::Optimal {
            self.refactor();
            // Snap values that sit within tolerance of a bound.
            for j in 0..n {
                let (l, u) = (self.lo[j], self.hi[j]);
                if self.x[j] < l {
                    self.x[j] = l;
                } else if self.x[j] > u {
                    self.x[j] = u;
                }
            }
        }
        let y = if m > 0 { self.duals(c) } else { Vec::new() };
        let reduced: Vec<f64> = (0..n).map(|j| self.reduced_cost(c, &y, j)).collect();
        let x: Vec<f64> = self.x[..n].to_vec();
        let objective = if status == SolveStatus::Optimal { model.objective_value(&x) } else { f64::NAN };
        Solution {
            status,
            x,
            duals: y,
            reduced_costs: reduced,
            objective,
            stats: SolveStats { iterations: self.iterations, nodes: 0 },
        }
    }
}
