//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vofc_core::grid::{GeneratorParams, Grid, Line, Node};
use vofc_core::model::{ModelInstance, Sense};
use vofc_core::scenario::{NodeSeries, ScenarioDay, Weights};
use vofc_core::solver;
use vofc_core::uc::{two_stage_cost, UcVariant};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `min c x  s.t.  A x <= b, x >= 0`.
#[derive(Debug, Clone)]
pub struct DenseLp {
    pub c: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl DenseLp {
    /// Random bounded, feasible LP: `b >= 0` keeps the origin feasible and
    /// the last row caps `sum x`.
    pub fn random(r: &mut impl Rng, n: usize, m: usize) -> Self {
        let c = (0..n).map(|_| r.random_range(-10.0..10.0)).collect();
        let mut a: Vec<Vec<f64>> = (0..m - 1).map(|_| (0..n).map(|_| r.random_range(-5.0..5.0)).collect()).collect();
        a.push(vec![1.0; n]);
        let b = (0..m).map(|_| r.random_range(0.0..20.0)).collect();
        Self { c, a, b }
    }

    pub fn to_model(&self) -> ModelInstance {
        let mut m = ModelInstance::new("dense");
        let x: Vec<_> = self.c.iter().enumerate().map(|(j, &c)| m.add_var(format!("x{j}"), 0.0, f64::INFINITY, c)).collect();
        for (i, row) in self.a.iter().enumerate() {
            m.add_row(format!("r{i}"), x.iter().zip(row).map(|(&v, &a)| (v, a)), Sense::Le, self.b[i]);
        }
        m
    }
}

/// Calls `f` with every `k`-subset of `0..n` in lexicographic order.
pub fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        if idx[i] == i + n - k {
            return;
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Optimal value of a bounded LP by enumerating every basic solution.
/// Returns `None` when no vertex is feasible.
pub fn vertex_enumeration(lp: &DenseLp) -> Option<(f64, Vec<f64>)> {
    let n = lp.c.len();
    let m = lp.a.len();
    // Constraints g x <= h: the rows, then -x_j <= 0.
    let mut g: Vec<Vec<f64>> = lp.a.clone();
    let mut h = lp.b.clone();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = -1.0;
        g.push(e);
        h.push(0.0);
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for_each_subset(m + n, n, |set| {
        let a = DMatrix::from_fn(n, n, |i, j| g[set[i]][j]);
        let rhs = DVector::from_iterator(n, set.iter().map(|&i| h[i]));
        let Some(x) = a.lu().solve(&rhs) else { return };
        if x.iter().any(|v| !v.is_finite()) {
            return;
        }
        let feasible = g.iter().zip(&h).all(|(row, &hi)| row.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>() <= hi + 1e-9);
        if !feasible {
            return;
        }
        let obj: f64 = lp.c.iter().zip(x.iter()).map(|(c, v)| c * v).sum();
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, x.iter().copied().collect()));
        }
    });
    best
}

/// `min cz z + cx x  s.t.  Az z + Ax x <= b, z binary, x >= 0`.
#[derive(Debug, Clone)]
pub struct SmallMilp {
    pub cz: Vec<f64>,
    pub cx: Vec<f64>,
    pub az: Vec<Vec<f64>>,
    pub ax: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl SmallMilp {
    pub fn random(r: &mut impl Rng, nz: usize, nx: usize, m: usize) -> Self {
        let cz = (0..nz).map(|_| r.random_range(-10.0..10.0)).collect();
        let cx = (0..nx).map(|_| r.random_range(-10.0..10.0)).collect();
        let mut az: Vec<Vec<f64>> = (0..m - 1).map(|_| (0..nz).map(|_| r.random_range(-6.0..6.0)).collect()).collect();
        let mut ax: Vec<Vec<f64>> = (0..m - 1).map(|_| (0..nx).map(|_| r.random_range(-5.0..5.0)).collect()).collect();
        az.push(vec![0.0; nz]);
        ax.push(vec![1.0; nx]);
        let b = (0..m).map(|_| r.random_range(-2.0..15.0)).collect();
        let mut out = Self { cz, cx, az, ax, b };
        let last = out.b.len() - 1;
        out.b[last] = out.b[last].abs() + 1.0;
        out
    }

    pub fn to_model(&self) -> ModelInstance {
        let mut m = ModelInstance::new("small_milp");
        let z: Vec<_> = self.cz.iter().enumerate().map(|(j, &c)| m.add_binary(format!("z{j}"), c)).collect();
        let x: Vec<_> = self.cx.iter().enumerate().map(|(j, &c)| m.add_var(format!("x{j}"), 0.0, f64::INFINITY, c)).collect();
        for i in 0..self.b.len() {
            let terms = z.iter().zip(&self.az[i]).chain(x.iter().zip(&self.ax[i])).map(|(&v, &a)| (v, a));
            m.add_row(format!("r{i}"), terms, Sense::Le, self.b[i]);
        }
        m
    }

    /// Exhaustive optimum over binary patterns, continuous part by vertex
    /// enumeration.
    pub fn enumerate(&self) -> Option<f64> {
        let nz = self.cz.len();
        let mut best: Option<f64> = None;
        for mask in 0..(1u32 << nz) {
            let z: Vec<f64> = (0..nz).map(|j| ((mask >> j) & 1) as f64).collect();
            let b: Vec<f64> = self
                .b
                .iter()
                .zip(&self.az)
                .map(|(&bi, row)| bi - row.iter().zip(&z).map(|(a, v)| a * v).sum::<f64>())
                .collect();
            let lp = DenseLp { c: self.cx.clone(), a: self.ax.clone(), b };
            if let Some((v, _)) = vertex_enumeration(&lp) {
                let obj = v + self.cz.iter().zip(&z).map(|(c, v)| c * v).sum::<f64>();
                best = Some(best.map_or(obj, |b: f64| b.min(obj)));
            }
        }
        best
    }
}

/// Optimum of a MILP whose integer variables are all binary, by fixing
/// every pattern and solving the remaining LP.
pub fn enumerate_binaries(model: &ModelInstance) -> Option<f64> {
    let ints: Vec<usize> = (0..model.num_vars()).filter(|&j| model.vars[j].integer).collect();
    assert!(ints.len() <= 16, "too many binaries for enumeration");
    let mut best: Option<f64> = None;
    for mask in 0..(1u32 << ints.len()) {
        let mut lo: Vec<f64> = model.vars.iter().map(|v| v.lower).collect();
        let mut hi: Vec<f64> = model.vars.iter().map(|v| v.upper).collect();
        let mut ok = true;
        for (b, &j) in ints.iter().enumerate() {
            let v = ((mask >> b) & 1) as f64;
            if v < lo[j] || v > hi[j] {
                ok = false;
                break;
            }
            lo[j] = v;
            hi[j] = v;
        }
        if !ok {
            continue;
        }
        let sol = solver::solve_lp_bounded(model, &lo, &hi, &Default::default());
        if sol.is_optimal() {
            best = Some(best.map_or(sol.objective, |b: f64| b.min(sol.objective)));
        }
    }
    best
}

/// Random small grid whose units have minimum outputs and start-up costs,
/// so the relaxed commitment is often fractional.
pub fn random_uc_grid(r: &mut impl Rng, nodes: usize, gens: usize) -> Grid {
    let nodes_v: Vec<Node> = (0..nodes)
        .map(|i| Node {
            id: i as u32 + 1,
            shed_cost: r.random_range(500.0..1500.0),
            curtail_cost: r.random_range(20.0..100.0),
            wind_capacity: None,
        })
        .collect();
    let lines: Vec<Line> = (0..nodes.saturating_sub(1))
        .map(|k| Line {
            from: k as u32 + 1,
            to: k as u32 + 2,
            susceptance: r.random_range(5.0..15.0),
            capacity: r.random_range(40.0..120.0),
        })
        .collect();
    let generators = (0..gens)
        .map(|g| {
            let p_max = r.random_range(60.0..150.0);
            let p_min = p_max * r.random_range(0.2..0.6);
            let ramp = r.random_range(30.0..p_max);
            GeneratorParams {
                name: format!("g{}", g + 1),
                node: r.random_range(1..=nodes as u32),
                cost: r.random_range(10.0..60.0),
                startup_cost: r.random_range(100.0..2000.0),
                shutdown_cost: r.random_range(0.0..200.0),
                up_cost: r.random_range(60.0..120.0),
                down_cost: r.random_range(1.0..10.0),
                p_min,
                p_max,
                ramp,
                startup_ramp: r.random_range(p_min..=p_max),
                min_up: 1,
                min_down: 1,
                initial_status: if r.random_bool(0.5) { Some(r.random_range(0..=1)) } else { None },
            }
        })
        .collect();
    Grid { base_mva: 100.0, reference_node: 1, nodes: nodes_v, lines, generators }
}

/// Random net-load series between `lo` and `hi` per node and hour.
pub fn random_series(r: &mut impl Rng, nodes: usize, hours: usize, lo: f64, hi: f64) -> NodeSeries {
    NodeSeries::from_fn(nodes, hours, |_, _| if hi > lo { r.random_range(lo..hi) } else { lo })
}

/// Average two-stage cost over `days`.
pub fn tst(grid: &Grid, w: &Weights, days: &[ScenarioDay], variant: UcVariant) -> f64 {
    days.iter().map(|d| two_stage_cost(grid, w, d, variant).unwrap().total).sum::<f64>() / days.len() as f64
}

/// `(best lambda_1, best tst)` over `lambda_1 in {0, step, ..., 1}`.
pub fn sweep(grid: &Grid, days: &[ScenarioDay], step: f64, variant: UcVariant) -> (f64, f64) {
    let n = (1.0 / step).round() as usize;
    let mut best = (f64::NAN, f64::INFINITY);
    for s in 0..=n {
        let x = s as f64 / n as f64;
        let t = tst(grid, &Weights::normalized(&[x, 1.0 - x]).unwrap(), days, variant);
        if t < best.1 {
            best = (x, t);
        }
    }
    best
}
