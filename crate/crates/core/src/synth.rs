//! Seeded synthetic grids and forecast days.
//!
//! The grid is a ring of `nodes` buses with two thermal units always kept
//! online, uncongested lines and one wind farm on the last bus. Provider
//! errors are drawn as `bias + noise * N(0, 1)`, both relative to the node's
//! realized load, so one provider can be made accurate-but-biased and
//! another unbiased-but-noisy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GeneratorParams, Grid, Line, Node};
use crate::scenario::{NodeSeries, ProviderForecast, ScenarioDay};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub seed: u64,
    pub nodes: usize,
    pub horizon: usize,
    pub days: usize,
    /// Relative bias per provider.
    pub bias: Vec<f64>,
    /// Relative noise standard deviation per provider.
    pub noise: Vec<f64>,
    /// Mean realized load per bus, MW.
    pub base_load: f64,
    pub wind_capacity: f64,
    pub shed_cost: f64,
    pub curtail_cost: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            seed: 7,
            nodes: 3,
            horizon: 6,
            days: 10,
            bias: vec![0.0, 0.08],
            noise: vec![0.08, 0.015],
            base_load: 100.0,
            wind_capacity: 60.0,
            shed_cost: 1000.0,
            curtail_cost: 200.0,
        }
    }
}

impl SynthParams {
    pub fn providers(&self) -> usize {
        self.bias.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(format!("synthetic parameters: {m}")));
        if self.nodes == 0 || self.horizon == 0 || self.days == 0 {
            return bad("nodes, horizon and days must be positive");
        }
        if self.bias.is_empty() || self.bias.len() != self.noise.len() {
            return bad("bias and noise need one entry per provider");
        }
        if self.noise.iter().any(|&s| !(s >= 0.0 && s.is_finite())) || self.bias.iter().any(|b| !b.is_finite()) {
            return bad("noise must be finite and nonnegative, bias finite");
        }
        if !(self.base_load > 0.0) || !(self.wind_capacity >= 0.0) {
            return bad("base_load must be positive and wind_capacity nonnegative");
        }
        if !(self.shed_cost >= 0.0) || !(self.curtail_cost >= 0.0) {
            return bad("costs must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub grid: Grid,
    pub days: Vec<ScenarioDay>,
}

pub fn synth_grid(p: &SynthParams) -> Grid {
    let n = p.nodes;
    let nodes = (0..n)
        .map(|i| Node {
            id: i as u32 + 1,
            shed_cost: p.shed_cost,
            curtail_cost: p.curtail_cost,
            wind_capacity: (i == n - 1 && p.wind_capacity > 0.0).then_some(p.wind_capacity),
        })
        .collect();
    let ring = match n {
        1 => 0,
        2 => 1,
        _ => n,
    };
    let big = 20.0 * p.base_load * n as f64;
    let lines =
        (0..ring).map(|k| Line { from: k as u32 + 1, to: ((k + 1) % n) as u32 + 1, susceptance: 10.0, capacity: big }).collect();
    let cap = 4.0 * p.base_load * n as f64;
    let unit = |name: &str, node: u32, cost, up, down| GeneratorParams {
        name: name.into(),
        node,
        cost,
        startup_cost: 200.0,
        shutdown_cost: 100.0,
        up_cost: up,
        down_cost: down,
        p_min: 0.0,
        p_max: cap,
        ramp: cap,
        startup_ramp: cap,
        min_up: 1,
        min_down: 1,
        initial_status: Some(1),
    };
    let second = if n >= 2 { 2 } else { 1 };
    Grid {
        base_mva: 100.0,
        reference_node: 1,
        nodes,
        lines,
        generators: vec![unit("g1", 1, 20.0, 100.0, 5.0), unit("g2", second, 45.0, 110.0, 8.0)],
    }
}

pub fn generate(p: &SynthParams) -> Result<SynthData> {
    p.validate()?;
    let grid = synth_grid(p);
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let std = Normal::new(0.0, 1.0).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let (n, t_n) = (p.nodes, p.horizon);
    let mut days = Vec::with_capacity(p.days);
    for d in 0..p.days {
        let level = 1.0 + 0.05 * std.sample(&mut rng);
        let weight: Vec<f64> = (0..n).map(|i| 1.0 + 0.2 * ((i % 3) as f64 - 1.0)).collect();
        let mut demand = NodeSeries::zeros(n, t_n);
        for i in 0..n {
            for t in 0..t_n {
                let shape = 1.0 + 0.2 * (std::f64::consts::TAU * (t as f64 + 8.0) / 24.0).sin();
                let v = p.base_load * weight[i] * level * shape * (1.0 + 0.02 * std.sample(&mut rng));
                demand.set(i, t, v.max(0.0));
            }
        }
        let mut wind = NodeSeries::zeros(n, t_n);
        if p.wind_capacity > 0.0 {
            let mut frac: f64 = rng.random_range(0.2..0.8);
            for t in 0..t_n {
                frac = (frac + 0.1 * std.sample(&mut rng)).clamp(0.0, 1.0);
                wind.set(n - 1, t, p.wind_capacity * frac);
            }
        }
        let net = NodeSeries::from_fn(n, t_n, |i, t| demand.get(i, t) - wind.get(i, t));
        let forecasts = p
            .bias
            .iter()
            .zip(&p.noise)
            .map(|(&b, &s)| {
                let mut load = NodeSeries::zeros(n, t_n);
                let mut wf = NodeSeries::zeros(n, t_n);
                for i in 0..n {
                    for t in 0..t_n {
                        let scale = demand.get(i, t);
                        load.set(i, t, net.get(i, t) + scale * (b + s * std.sample(&mut rng)));
                        let w = wind.get(i, t);
                        if w > 0.0 {
                            let err = 0.05 * p.wind_capacity * std.sample(&mut rng);
                            wf.set(i, t, (w + err).clamp(0.0, p.wind_capacity));
                        }
                    }
                }
                ProviderForecast { net_load: load, wind: wf }
            })
            .collect();
        days.push(ScenarioDay::new(d as u32 + 1, forecasts, net, wind)?);
    }
    Ok(SynthData { grid, days })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_data() {
        let p = SynthParams::default();
        assert_eq!(generate(&p).unwrap(), generate(&p).unwrap());
        let other = generate(&SynthParams { seed: 8, ..p.clone() }).unwrap();
        assert_ne!(other.days, generate(&p).unwrap().days);
    }

    #[test]
    fn shapes_and_grid_are_valid() {
        let data = generate(&SynthParams::default()).unwrap();
        data.grid.validate().unwrap();
        assert_eq!(data.days.len(), 10);
        assert_eq!(data.days[0].realized_load.shape(), (3, 6));
        assert_eq!(data.grid.num_lines(), 3);
    }

    #[test]
    fn rejects_mismatched_provider_params() {
        let p = SynthParams { noise: vec![0.1], ..Default::default() };
        assert!(generate(&p).is_err());
    }
}
