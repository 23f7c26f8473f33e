//! Best-bound branch-and-bound.
//!
//! Branching picks the most fractional integer variable (lowest id on ties);
//! the open-node queue is ordered by parent bound with FIFO tie-break. Every
//! integral node solution is polished by re-solving the LP with integers
//! fixed at their rounded values, so incumbents satisfy integrality exactly.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{simplex, MilpOptions, SolveStats, SolveStatus, Solution};
use crate::model::{ModelInstance, VarId};

struct Node {
    bound: f64,
    seq: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap: invert so the smallest bound, then the oldest
    // node, comes out first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then_with(|| other.seq.cmp(&self.seq))
    }
}

pub(crate) fn branch_and_bound(model: &ModelInstance, opts: &MilpOptions, start: &[(VarId, f64)]) -> Solution {
    let n = model.num_vars();
    let m = model.num_rows();
    let ints: Vec<usize> = (0..n).filter(|&j| model.vars[j].integer).collect();
    let lo0: Vec<f64> = model
        .vars
        .iter()
        .map(|v| if v.integer { v.lower.ceil() } else { v.lower })
        .collect();
    let hi0: Vec<f64> = model
        .vars
        .iter()
        .map(|v| if v.integer { v.upper.floor() } else { v.upper })
        .collect();

    let mut incumbent: Option<Solution> = None;
    let mut iterations = 0usize;
    if !start.is_empty() {
        let mut lo = lo0.clone();
        let mut hi = hi0.clone();
        for &(v, val) in start {
            lo[v.0] = val;
            hi[v.0] = val;
        }
        let s = simplex::solve_bounded(model, &lo, &hi, &opts.lp);
        iterations += s.stats.iterations;
        if s.status == SolveStatus::Optimal {
            let integral = ints.iter().all(|&j| (s.x[j] - s.x[j].round()).abs() <= opts.integrality_tol);
            if integral {
                incumbent = polish(model, &lo, &hi, &s.x, &ints, opts, &mut iterations);
            }
        }
        log::debug!("start incumbent: {:?}", incumbent.as_ref().map(|s| s.objective));
    }
    let mut nodes = 0usize;
    let mut seq = 0usize;
    let mut heap = BinaryHeap::new();
    heap.push(Node { bound: f64::NEG_INFINITY, seq, lower: lo0, upper: hi0 });

    let cutoff = |inc: &Option<Solution>| -> f64 {
        match inc {
            Some(s) => s.objective - opts.absolute_gap.max(opts.relative_gap * s.objective.abs()),
            None => f64::INFINITY,
        }
    };

    while let Some(node) = heap.pop() {
        if node.bound >= cutoff(&incumbent) {
            continue;
        }
        if nodes >= opts.max_nodes {
            heap.push(node);
            break;
        }
        nodes += 1;
        let sol = simplex::solve_bounded(model, &node.lower, &node.upper, &opts.lp);
        iterations += sol.stats.iterations;
        match sol.status {
            SolveStatus::Optimal => {}
            SolveStatus::Infeasible => continue,
            SolveStatus::Unbounded if nodes == 1 => {
                let mut out = sol;
                out.stats = SolveStats { iterations, nodes };
                return out;
            }
            // Unbounded below a bounded-integer root cannot happen; treat any
            // other failure as fatal for the whole search.
            status => {
                let mut out = Solution::with_status(status, n, m);
                out.stats = SolveStats { iterations, nodes };
                return out;
            }
        }
        if sol.objective >= cutoff(&incumbent) {
            continue;
        }

        let run_heuristic = opts.heuristic_every > 0 && (nodes == 1 || nodes % opts.heuristic_every == 0);

        let mut branch: Option<(usize, f64)> = None;
        let mut best_frac = opts.integrality_tol;
        for &j in &ints {
            let v = sol.x[j];
            let f = (v - v.floor()).min(v.ceil() - v);
            if f > best_frac {
                best_frac = f;
                branch = Some((j, v));
            }
        }

        let Some((j, v)) = branch else {
            if let Some(p) = polish(model, &node.lower, &node.upper, &sol.x, &ints, opts, &mut iterations) {
                if p.objective < incumbent.as_ref().map_or(f64::INFINITY, |s| s.objective) {
                    incumbent = Some(p);
                }
            }
            continue;
        };

        if run_heuristic {
            if let Some(p) = polish(model, &node.lower, &node.upper, &sol.x, &ints, opts, &mut iterations) {
                if p.objective < incumbent.as_ref().map_or(f64::INFINITY, |s| s.objective) {
                    incumbent = Some(p);
                }
            }
            if sol.objective >= cutoff(&incumbent) {
                continue;
            }
        }

        let mut down_hi = node.upper.clone();
        down_hi[j] = v.floor();
        seq += 1;
        heap.push(Node { bound: sol.objective, seq, lower: node.lower.clone(), upper: down_hi });
        let mut up_lo = node.lower;
        up_lo[j] = v.ceil();
        seq += 1;
        heap.push(Node { bound: sol.objective, seq, lower: up_lo, upper: node.upper });
    }

    let limit_hit = !heap.is_empty();
    let stats = SolveStats { iterations, nodes };
    match incumbent {
        Some(mut s) => {
            if limit_hit {
                s.status = SolveStatus::NodeLimit;
            }
            s.stats = stats;
            s
        }
        None => {
            let status = if limit_hit { SolveStatus::NodeLimit } else { SolveStatus::Infeasible };
            let mut s = Solution::with_status(status, n, m);
            s.stats = stats;
            s
        }
    }
}

/// Fixes every integer at `x` rounded and re-solves the LP. Returns the result
/// when it is feasible within the node's bounds.
fn polish(
    model: &ModelInstance,
    lower: &[f64],
    upper: &[f64],
    x: &[f64],
    ints: &[usize],
    opts: &MilpOptions,
    iterations: &mut usize,
) -> Option<Solution> {
    let mut lo = lower.to_vec();
    let mut hi = upper.to_vec();
    for &j in ints {
        let r = x[j].round().clamp(lower[j], upper[j]);
        lo[j] = r;
        hi[j] = r;
    }
    let s = simplex::solve_bounded(model, &lo, &hi, &opts.lp);
    *iterations += s.stats.iterations;
    if s.status != SolveStatus::Optimal {
        return None;
    }
    let mut s = s;
    for &j in ints {
        s.x[j] = lo[j];
    }
    s.objective = model.objective_value(&s.x);
    Some(s)
}
