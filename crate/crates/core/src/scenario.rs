//! Per-day forecast/realization data and combination weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `sum(lambda) == 1` accepted by [`Weights::new`].
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Dense node-by-hour matrix, row-major by node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSeries {
    nodes: usize,
    hours: usize,
    data: Vec<f64>,
}

impl NodeSeries {
    pub fn zeros(nodes: usize, hours: usize) -> Self {
        Self { nodes, hours, data: vec![0.0; nodes * hours] }
    }

    pub fn from_fn(nodes: usize, hours: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(nodes * hours);
        for i in 0..nodes {
            for t in 0..hours {
                data.push(f(i, t));
            }
        }
        Self { nodes, hours, data }
    }

    /// Builds from one row per node.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let hours = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != hours) {
            return Err(Error::Dimension("node rows have different lengths".into()));
        }
        let nodes = rows.len();
        Ok(Self { nodes, hours, data: rows.into_iter().flatten().collect() })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn hours(&self) -> usize {
        self.hours
    }

    pub fn get(&self, node: usize, hour: usize) -> f64 {
        self.data[node * self.hours + hour]
    }

    pub fn set(&mut self, node: usize, hour: usize, value: f64) {
        self.data[node * self.hours + hour] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nodes, self.hours)
    }
}

/// One provider's day-ahead forecast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderForecast {
    pub net_load: NodeSeries,
    pub wind: NodeSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDay {
    pub day: u32,
    pub forecasts: Vec<ProviderForecast>,
    pub realized_load: NodeSeries,
    pub realized_wind: NodeSeries,
}

impl ScenarioDay {
    pub fn new(
        day: u32,
        forecasts: Vec<ProviderForecast>,
        realized_load: NodeSeries,
        realized_wind: NodeSeries,
    ) -> Result<Self> {
        let d = Self { day, forecasts, realized_load, realized_wind };
        d.validate()?;
        Ok(d)
    }

    pub fn providers(&self) -> usize {
        self.forecasts.len()
    }

    pub fn horizon(&self) -> usize {
        self.realized_load.hours()
    }

    pub fn nodes(&self) -> usize {
        self.realized_load.nodes()
    }

    pub fn validate(&self) -> Result<()> {
        let shape = self.realized_load.shape();
        let ctx = |m: &str| Error::InvalidInput(format!("day {}: {m}", self.day));
        if self.forecasts.is_empty() {
            return Err(ctx("at least one provider is required"));
        }
        if shape.1 == 0 {
            return Err(ctx("horizon must be at least one hour"));
        }
        let mut all = vec![&self.realized_wind];
        for f in &self.forecasts {
            all.push(&f.net_load);
            all.push(&f.wind);
        }
        if all.iter().any(|s| s.shape() != shape) {
            return Err(ctx("all series must share the same node-by-hour shape"));
        }
        let winds = std::iter::once(&self.realized_wind).chain(self.forecasts.iter().map(|f| &f.wind));
        for w in winds {
            if w.values().iter().any(|&v| !(v >= 0.0)) {
                return Err(ctx("wind series must be nonnegative"));
            }
        }
        if all.iter().chain(std::iter::once(&&self.realized_load)).any(|s| s.values().iter().any(|v| !v.is_finite())) {
            return Err(ctx("series contain non-finite values"));
        }
        Ok(())
    }

    /// Checks that the day's shape matches `nodes` and `horizon`.
    pub fn check_shape(&self, nodes: usize, horizon: usize) -> Result<()> {
        if self.realized_load.shape() != (nodes, horizon) {
            return Err(Error::Dimension(format!(
                "day {} has {}x{} series, expected {nodes}x{horizon}",
                self.day,
                self.nodes(),
                self.horizon()
            )));
        }
        Ok(())
    }
}

/// Convex combination weights, one per provider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Weights(Vec<f64>);

impl Weights {
    /// Accepts `values` only when they already lie on the simplex.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidWeights("empty weight vector".into()));
        }
        if let Some((k, v)) = values.iter().enumerate().find(|(_, v)| !(**v >= 0.0 && **v <= 1.0)) {
            return Err(Error::InvalidWeights(format!("lambda[{k}] = {v} outside [0, 1]")));
        }
        let s: f64 = values.iter().sum();
        if (s - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidWeights(format!("weights sum to {s}, not 1")));
        }
        Ok(Self(values))
    }

    /// Clamps to `[0, 1]` and rescales to sum to one.
    pub fn normalized(values: &[f64]) -> Result<Self> {
        let clamped: Vec<f64> = values.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        let s: f64 = clamped.iter().sum();
        if !(s > 0.0) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidWeights(format!("cannot normalize {values:?}")));
        }
        Ok(Self(clamped.into_iter().map(|v| v / s).collect()))
    }

    pub fn uniform(k: usize) -> Self {
        Self(vec![1.0 / k as f64; k])
    }

    pub fn unit(k: usize, i: usize) -> Self {
        let mut v = vec![0.0; k];
        v[i] = 1.0;
        Self(v)
    }

    /// `(x, 1 - x)` for two providers.
    pub fn pair(x: f64) -> Result<Self> {
        Self::new(vec![x, 1.0 - x])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Weights {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Weights> for Vec<f64> {
    fn from(w: Weights) -> Self {
        w.0
    }
}

impl std::ops::Index<usize> for Weights {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Weighted net-load and wind forecasts: `sum_k lambda_k * series_k`.
pub fn combine_forecasts(weights: &Weights, day: &ScenarioDay) -> Result<(NodeSeries, NodeSeries)> {
    if weights.len() != day.providers() {
        return Err(Error::Dimension(format!(
            "{} weights for {} providers on day {}",
            weights.len(),
            day.providers(),
            day.day
        )));
    }
    let (n, t) = day.realized_load.shape();
    let mut load = NodeSeries::zeros(n, t);
    let mut wind = NodeSeries::zeros(n, t);
    for (f, &lam) in day.forecasts.iter().zip(weights.as_slice()) {
        for (dst, &src) in load.data.iter_mut().zip(&f.net_load.data) {
            *dst += lam * src;
        }
        for (dst, &src) in wind.data.iter_mut().zip(&f.wind.data) {
            *dst += lam * src;
        }
    }
    Ok((load, wind))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day2(l1: f64, l2: f64) -> ScenarioDay {
        let s = |v: f64| NodeSeries::from_rows(vec![vec![v]]).unwrap();
        ScenarioDay::new(
            1,
            vec![
                ProviderForecast { net_load: s(l1), wind: s(0.0) },
                ProviderForecast { net_load: s(l2), wind: s(4.0) },
            ],
            s(80.0),
            s(0.0),
        )
        .unwrap()
    }

    #[test]
    fn unit_weight_reproduces_provider() {
        let (l, w) = combine_forecasts(&Weights::unit(2, 0), &day2(100.0, 50.0)).unwrap();
        assert_eq!(l.get(0, 0), 100.0);
        assert_eq!(w.get(0, 0), 0.0);
    }

    #[test]
    fn even_split_averages() {
        let (l, w) = combine_forecasts(&Weights::uniform(2), &day2(100.0, 50.0)).unwrap();
        assert_eq!(l.get(0, 0), 75.0);
        assert_eq!(w.get(0, 0), 2.0);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        assert!(combine_forecasts(&Weights::uniform(3), &day2(1.0, 2.0)).is_err());
    }

    #[test]
    fn weights_validation() {
        assert!(Weights::new(vec![0.6, 0.5]).is_err());
        assert!(Weights::new(vec![1.2, -0.2]).is_err());
        let w = Weights::normalized(&[0.471, 0.528]).unwrap();
        assert!((w.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let json = serde_json::to_string(&w).unwrap();
        let back: Weights = serde_json::from_str(&json).unwrap();
        assert_eq!(back, w);
        assert!(serde_json::from_str::<Weights>("[0.3, 0.3]").is_err());
    }

    #[test]
    fn negative_wind_rejected() {
        let s = |v: f64| NodeSeries::from_rows(vec![vec![v]]).unwrap();
        let bad = ScenarioDay::new(1, vec![ProviderForecast { net_load: s(1.0), wind: s(-1.0) }], s(1.0), s(0.0));
        assert!(bad.is_err());
    }
}
