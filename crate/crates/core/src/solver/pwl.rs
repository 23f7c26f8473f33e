//! Piecewise-linear epigraph of a separable quadratic penalty.

use crate::error::{Error, Result};
use crate::model::{ModelInstance, PwlBlock, Sense, VarId};

/// Worst-case overestimation of `coefficient * (x - c)^2` by secants on a
/// uniform grid of `segments` pieces over `[0, 1]`.
pub fn pwl_error_bound(coefficient: f64, segments: usize) -> f64 {
    let h = 1.0 / segments as f64;
    coefficient * h * h / 4.0
}

/// Adds `t_k >= coefficient * (x_k - center_k)^2` for each `x_k` in `vars`,
/// linearized by secants through a uniform grid of `segments` pieces over the
/// variable's bounds, with the center inserted as an extra knot so the
/// penalty is exactly zero there. The objective gains `sum_k t_k`.
///
/// Returns the epigraph variables.
pub fn add_pwl_quadratic(
    model: &mut ModelInstance,
    vars: &[VarId],
    centers: &[f64],
    coefficient: f64,
    segments: usize,
) -> Result<Vec<VarId>> {
    if vars.len() != centers.len() {
        return Err(Error::Dimension(format!("{} PWL variables but {} centers", vars.len(), centers.len())));
    }
    if segments == 0 {
        return Err(Error::InvalidInput("PWL segment count must be at least 1".into()));
    }
    if !(coefficient >= 0.0 && coefficient.is_finite()) {
        return Err(Error::InvalidInput(format!("PWL coefficient {coefficient} must be finite and nonnegative")));
    }
    let mut out = Vec::with_capacity(vars.len());
    for (&v, &c) in vars.iter().zip(centers) {
        let (lo, hi) = (model.vars[v.0].lower, model.vars[v.0].upper);
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidModel(format!("PWL penalty on unbounded variable {}", model.vars[v.0].name)));
        }
        let mut knots: Vec<f64> = (0..=segments).map(|s| lo + (hi - lo) * s as f64 / segments as f64).collect();
        if c > lo && c < hi && !knots.iter().any(|&k| (k - c).abs() < 1e-12) {
            knots.push(c);
            knots.sort_by(f64::total_cmp);
        }
        knots.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

        let name = format!("pen_{}", model.vars[v.0].name);
        let t = model.add_var(name.clone(), 0.0, f64::INFINITY, 1.0);
        let q = |x: f64| coefficient * (x - c) * (x - c);
        let mut rows = Vec::new();
        if knots.len() == 1 {
            rows.push(model.add_row(format!("{name}_s0"), [(t, 1.0)], Sense::Ge, q(knots[0])));
        }
        for (s, w) in knots.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            let slope = (q(b) - q(a)) / (b - a);
            // t >= q(a) + slope (x - a)
            rows.push(model.add_row(format!("{name}_s{s}"), [(t, 1.0), (v, -slope)], Sense::Ge, q(a) - slope * a));
        }
        model.pwl_blocks.push(PwlBlock { var: v, epigraph: t, center: c, coefficient, knots, rows });
        out.push(t);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::solve_lp;

    fn penalty_at(x: f64, center: f64, coefficient: f64, segments: usize) -> f64 {
        let mut m = ModelInstance::new("pwl");
        let v = m.add_var("x", 0.0, 1.0, 0.0);
        add_pwl_quadratic(&mut m, &[v], &[center], coefficient, segments).unwrap();
        m.set_bounds(v, x, x);
        solve_lp(&m).objective
    }

    #[test]
    fn zero_at_center() {
        assert!(penalty_at(0.37, 0.37, 1000.0, 32).abs() < 1e-9);
        assert!(penalty_at(0.5, 0.5, 1000.0, 7).abs() < 1e-9);
    }

    #[test]
    fn endpoint_knot_is_exact() {
        // rho = 2 -> coefficient 1, center 0.5, x = 1 -> 0.25
        assert!((penalty_at(1.0, 0.5, 1.0, 4) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn overestimates_within_bound() {
        let coef = 25_000.0 / 2.0;
        let bound = pwl_error_bound(coef, 32);
        assert!((bound - 25_000.0 / (8.0 * 1024.0)).abs() < 1e-12);
        for i in 0..=40 {
            let x = i as f64 / 40.0;
            let p = penalty_at(x, 0.3, coef, 32);
            let q = coef * (x - 0.3) * (x - 0.3);
            assert!(p >= q - 1e-7 && p - q <= bound + 1e-7, "x={x} p={p} q={q}");
        }
    }

    #[test]
    fn rejects_unbounded_variable() {
        let mut m = ModelInstance::new("pwl");
        let v = m.add_var("x", 0.0, f64::INFINITY, 0.0);
        assert!(add_pwl_quadratic(&mut m, &[v], &[0.0], 1.0, 4).is_err());
    }
}
