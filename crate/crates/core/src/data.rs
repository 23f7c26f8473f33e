//! File formats: grid JSON, forecast/actual series CSV, wind power curves
//! and the TOML run configuration.
//!
//! Series files are long format. Forecasts have one row per
//! `(day, hour, node, provider)` with columns
//! `day,hour,node,provider,forecast_net_load,forecast_wind`; actuals have one
//! row per `(day, hour, node)` with `day,hour,node,net_load,wind`. Hours are
//! 1-based. The `wind` column of the actuals file may be omitted, in which
//! case realized wind is zero.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::ph::PhConfig;
use crate::scenario::{NodeSeries, ProviderForecast, ScenarioDay, Weights};
use crate::single_level::StmConfig;
use crate::synth::SynthParams;

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Parses and validates a grid document.
pub fn parse_grid(text: &str, origin: impl Into<PathBuf>) -> Result<Grid> {
    let grid: Grid = serde_json::from_str(text).map_err(|e| Error::parse(origin, e.to_string()))?;
    grid.validate()?;
    Ok(grid)
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<Grid> {
    let path = path.as_ref();
    parse_grid(&read_to_string(path)?, path)
}

pub fn grid_to_json(grid: &Grid) -> String {
    serde_json::to_string_pretty(grid).expect("grid serializes")
}

pub fn save_grid(grid: &Grid, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), grid_to_json(grid).as_bytes())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ForecastRow {
    day: u32,
    hour: usize,
    node: u32,
    provider: String,
    forecast_net_load: f64,
    forecast_wind: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ActualRow {
    day: u32,
    hour: usize,
    node: u32,
    net_load: f64,
    #[serde(default)]
    wind: Option<f64>,
}

/// Layout shared by every day of a series file.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesLayout {
    /// Grid node ids in grid order.
    pub nodes: Vec<u32>,
    /// Provider names in weight order. Empty means "in order of first
    /// appearance".
    pub providers: Vec<String>,
    /// Hours per day; `None` infers it from the first day.
    pub horizon: Option<usize>,
}

impl SeriesLayout {
    pub fn for_grid(grid: &Grid) -> Self {
        Self { nodes: grid.nodes.iter().map(|n| n.id).collect(), providers: Vec::new(), horizon: None }
    }
}

type Cells<T> = BTreeMap<u32, HashMap<(usize, u32), T>>;
/// Keyed by day, then `(hour, node, provider)`.
type ForecastCells = BTreeMap<u32, HashMap<(usize, u32, usize), (f64, f64)>>;

fn check_cell(day: u32, hour: usize, node: u32, nodes: &HashMap<u32, usize>, origin: &Path) -> Result<()> {
    if hour == 0 {
        return Err(Error::parse(origin, format!("day {day}: hours are numbered from 1")));
    }
    if !nodes.contains_key(&node) {
        return Err(Error::parse(origin, format!("day {day} hour {hour}: unknown node {node}")));
    }
    Ok(())
}

fn csv_rows<T: for<'de> Deserialize<'de>>(input: impl Read, origin: &Path) -> Result<Vec<T>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec.map_err(|e| Error::parse(origin, e.to_string()))?);
    }
    Ok(out)
}

/// Builds dense days from forecast and actual rows read from `forecasts`
/// and `actuals`. `origin` labels parse errors.
pub fn read_timeseries(
    forecasts: impl Read,
    actuals: impl Read,
    layout: &SeriesLayout,
    origin: &Path,
) -> Result<Vec<ScenarioDay>> {
    let frows: Vec<ForecastRow> = csv_rows(forecasts, origin)?;
    let arows: Vec<ActualRow> = csv_rows(actuals, origin)?;
    let node_index: HashMap<u32, usize> = layout.nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let mut providers = layout.providers.clone();
    if providers.is_empty() {
        for r in &frows {
            if !providers.contains(&r.provider) {
                providers.push(r.provider.clone());
            }
        }
    }
    if providers.is_empty() {
        return Err(Error::parse(origin, "no providers found"));
    }
    let prov_index: HashMap<&str, usize> = providers.iter().enumerate().map(|(k, p)| (p.as_str(), k)).collect();

    let mut fc_cells: ForecastCells = BTreeMap::new();
    for r in &frows {
        check_cell(r.day, r.hour, r.node, &node_index, origin)?;
        let Some(&k) = prov_index.get(r.provider.as_str()) else {
            return Err(Error::parse(origin, format!("unknown provider {:?}", r.provider)));
        };
        let cell = fc_cells.entry(r.day).or_default();
        if cell.insert((r.hour, r.node, k), (r.forecast_net_load, r.forecast_wind)).is_some() {
            return Err(Error::parse(
                origin,
                format!("duplicate forecast for day {}, hour {}, node {}, provider {}", r.day, r.hour, r.node, r.provider),
            ));
        }
    }
    let mut act: Cells<(f64, Option<f64>)> = BTreeMap::new();
    for r in &arows {
        check_cell(r.day, r.hour, r.node, &node_index, origin)?;
        if act.entry(r.day).or_default().insert((r.hour, r.node), (r.net_load, r.wind)).is_some() {
            return Err(Error::parse(
                origin,
                format!("duplicate actual for day {}, hour {}, node {}", r.day, r.hour, r.node),
            ));
        }
    }

    let mut days = Vec::new();
    let mut horizon = layout.horizon;
    let mut warned = false;
    let day_ids: BTreeSet<u32> = fc_cells.keys().chain(act.keys()).copied().collect();
    for day in day_ids {
        let f = fc_cells.get(&day);
        let a = act.get(&day);
        let max_hour = f
            .into_iter()
            .flat_map(|m| m.keys().map(|k| k.0))
            .chain(a.into_iter().flat_map(|m| m.keys().map(|k| k.0)))
            .max()
            .unwrap_or(0);
        let t_n = *horizon.get_or_insert(max_hour);
        if max_hour > t_n || t_n == 0 {
            return Err(Error::Dimension(format!("day {day} spans {max_hour} hours, expected {t_n}")));
        }
        let n = layout.nodes.len();
        let mut forecasts = Vec::with_capacity(providers.len());
        for (k, name) in providers.iter().enumerate() {
            let mut load = NodeSeries::zeros(n, t_n);
            let mut wind = NodeSeries::zeros(n, t_n);
            for (i, &node) in layout.nodes.iter().enumerate() {
                for t in 0..t_n {
                    let cell = f.and_then(|m| m.get(&(t + 1, node, k)));
                    let &(l, w) = cell.ok_or_else(|| Error::MissingCell { day, hour: t + 1, node, provider: name.clone() })?;
                    load.set(i, t, l);
                    wind.set(i, t, w);
                }
            }
            forecasts.push(ProviderForecast { net_load: load, wind });
        }
        let mut load = NodeSeries::zeros(n, t_n);
        let mut wind = NodeSeries::zeros(n, t_n);
        for (i, &node) in layout.nodes.iter().enumerate() {
            for t in 0..t_n {
                let cell = a.and_then(|m| m.get(&(t + 1, node)));
                let &(l, w) =
                    cell.ok_or_else(|| Error::MissingCell { day, hour: t + 1, node, provider: "actual".into() })?;
                load.set(i, t, l);
                match w {
                    Some(w) => wind.set(i, t, w),
                    None if !warned => {
                        log::warn!("actual wind missing (first at day {day}, hour {}, node {node}); using 0", t + 1);
                        warned = true;
                    }
                    None => {}
                }
            }
        }
        days.push(ScenarioDay::new(day, forecasts, load, wind)?);
    }
    Ok(days)
}

/// Reads forecast and actual files for the nodes of `layout`.
pub fn load_timeseries(
    forecasts: impl AsRef<Path>,
    actuals: impl AsRef<Path>,
    layout: &SeriesLayout,
) -> Result<Vec<ScenarioDay>> {
    let (fp, ap) = (forecasts.as_ref(), actuals.as_ref());
    let f = std::fs::File::open(fp).map_err(|e| Error::io(fp, e))?;
    let a = std::fs::File::open(ap).map_err(|e| Error::io(ap, e))?;
    read_timeseries(f, a, layout, fp)
}

/// Writes `days` in the long forecast and actual formats.
pub fn write_timeseries(
    days: &[ScenarioDay],
    nodes: &[u32],
    providers: &[String],
    forecasts: impl Write,
    actuals: impl Write,
) -> Result<()> {
    let err = |e: csv::Error| Error::InvalidInput(format!("series csv: {e}"));
    let mut fw = csv::Writer::from_writer(forecasts);
    let mut aw = csv::Writer::from_writer(actuals);
    for d in days {
        if d.providers() != providers.len() || d.nodes() != nodes.len() {
            return Err(Error::Dimension(format!("day {} does not match the provider/node lists", d.day)));
        }
        for t in 0..d.horizon() {
            for (i, &node) in nodes.iter().enumerate() {
                for (f, name) in d.forecasts.iter().zip(providers) {
                    let row = ForecastRow {
                        day: d.day,
                        hour: t + 1,
                        node,
                        provider: name.clone(),
                        forecast_net_load: f.net_load.get(i, t),
                        forecast_wind: f.wind.get(i, t),
                    };
                    fw.serialize(row).map_err(err)?;
                }
                let row = ActualRow {
                    day: d.day,
                    hour: t + 1,
                    node,
                    net_load: d.realized_load.get(i, t),
                    wind: Some(d.realized_wind.get(i, t)),
                };
                aw.serialize(row).map_err(err)?;
            }
        }
    }
    fw.flush().map_err(|e| Error::InvalidInput(e.to_string()))?;
    aw.flush().map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(())
}

pub fn save_timeseries(
    days: &[ScenarioDay],
    nodes: &[u32],
    providers: &[String],
    forecasts: impl AsRef<Path>,
    actuals: impl AsRef<Path>,
) -> Result<()> {
    let mut f = Vec::new();
    let mut a = Vec::new();
    write_timeseries(days, nodes, providers, &mut f, &mut a)?;
    write_file(forecasts.as_ref(), &f)?;
    write_file(actuals.as_ref(), &a)
}

/// Default provider names `p1`, `p2`, ...
pub fn provider_names(k: usize) -> Vec<String> {
    (1..=k).map(|j| format!("p{j}")).collect()
}

/// Turbine power curve as `(speed m/s, fraction of capacity)` knots. Output
/// is zero below the first knot and above the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct PowerCurve {
    knots: Vec<(f64, f64)>,
}

impl PowerCurve {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidInput("power curve needs at least two knots".into()));
        }
        if knots.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(Error::InvalidInput("power curve speeds must be strictly increasing".into()));
        }
        if knots.iter().any(|&(s, f)| !(s >= 0.0 && s.is_finite()) || !(0.0..=1.0).contains(&f)) {
            return Err(Error::InvalidInput("power curve needs finite speeds >= 0 and fractions in [0, 1]".into()));
        }
        Ok(Self { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn cut_in(&self) -> f64 {
        self.knots[0].0
    }

    pub fn cut_out(&self) -> f64 {
        self.knots[self.knots.len() - 1].0
    }

    /// Fraction of capacity produced at `speed`.
    pub fn fraction(&self, speed: f64) -> f64 {
        if speed < self.cut_in() || speed > self.cut_out() {
            return 0.0;
        }
        let j = self.knots.partition_point(|&(s, _)| s <= speed).clamp(1, self.knots.len() - 1);
        let ((s0, f0), (s1, f1)) = (self.knots[j - 1], self.knots[j]);
        (f0 + (f1 - f0) * (speed - s0) / (s1 - s0)).clamp(0.0, 1.0)
    }
}

impl TryFrom<Vec<(f64, f64)>> for PowerCurve {
    type Error = Error;
    fn try_from(v: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PowerCurve> for Vec<(f64, f64)> {
    fn from(c: PowerCurve) -> Self {
        c.knots
    }
}

/// Converts wind speeds to MW through `curve`.
pub fn wind_speed_to_power(speeds: &[f64], curve: &PowerCurve, capacity: f64) -> Result<Vec<f64>> {
    if let Some(s) = speeds.iter().find(|s| !(**s >= 0.0)) {
        return Err(Error::InvalidInput(format!("wind speed must be nonnegative, got {s}")));
    }
    if !(capacity >= 0.0) {
        return Err(Error::InvalidInput(format!("capacity must be nonnegative, got {capacity}")));
    }
    Ok(speeds.iter().map(|&s| capacity * curve.fraction(s)).collect())
}

/// Weight-training method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Trainer {
    Ph,
    Pfph,
    Stm,
    Rmse,
    Fixed,
}

impl Trainer {
    pub const ALL: [Trainer; 5] = [Trainer::Ph, Trainer::Pfph, Trainer::Stm, Trainer::Rmse, Trainer::Fixed];

    pub fn name(self) -> &'static str {
        match self {
            Trainer::Ph => "ph",
            Trainer::Pfph => "pfph",
            Trainer::Stm => "stm",
            Trainer::Rmse => "rmse",
            Trainer::Fixed => "fixed",
        }
    }

    /// Row label in reports.
    pub fn label(self) -> &'static str {
        match self {
            Trainer::Ph => "PH",
            Trainer::Pfph => "PFPH",
            Trainer::Stm => "ST-M",
            Trainer::Rmse => "RMSE",
            Trainer::Fixed => "Fixed",
        }
    }
}

impl FromStr for Trainer {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Trainer::ALL.into_iter().find(|t| t.name() == s.trim().to_ascii_lowercase()).ok_or_else(|| {
            let valid: Vec<&str> = Trainer::ALL.iter().map(|t| t.name()).collect();
            Error::Config(format!("unknown trainer {s:?}; valid trainers are {}", valid.join(", ")))
        })
    }
}

impl TryFrom<String> for Trainer {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Trainer> for String {
    fn from(t: Trainer) -> Self {
        t.name().into()
    }
}

impl std::fmt::Display for Trainer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Run configuration. Relative paths are resolved against the directory of
/// the config file by [`load_config`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actuals: Option<PathBuf>,
    /// Generate data in memory instead of reading files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthParams>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub providers: Vec<String>,
    pub trainer: Trainer,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_lambda: Option<Weights>,
    /// Training day ids; empty means every day.
    #[serde(default)]
    pub train_days: Vec<u32>,
    /// Test day ids; empty means the training days.
    #[serde(default)]
    pub test_days: Vec<u32>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Command line of an external LP/MILP solver used for subproblems.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_solver: Option<String>,
    #[serde(default)]
    pub ph: PhConfig,
    #[serde(default)]
    pub stm: StmConfig,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn new(trainer: Trainer) -> Self {
        Self {
            grid: None,
            series: None,
            actuals: None,
            synth: None,
            providers: Vec::new(),
            trainer,
            fixed_lambda: None,
            train_days: Vec::new(),
            test_days: Vec::new(),
            out: default_out(),
            seed: 0,
            external_solver: None,
            ph: PhConfig::default(),
            stm: StmConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let files = [&self.grid, &self.series, &self.actuals].iter().filter(|p| p.is_some()).count();
        match (files, &self.synth) {
            (0, Some(s)) => s.validate()?,
            (3, None) => {}
            (_, Some(_)) => return bad("give either [synth] or grid/series/actuals paths, not both".into()),
            _ => return bad("grid, series and actuals paths are all required without [synth]".into()),
        }
        if self.trainer == Trainer::Fixed && self.fixed_lambda.is_none() {
            return bad("trainer \"fixed\" needs fixed_lambda".into());
        }
        if let Some(d) = self.train_days.iter().find(|d| self.test_days.contains(d)) {
            return bad(format!("day {d} is in both train_days and test_days"));
        }
        for (name, list) in [("train_days", &self.train_days), ("test_days", &self.test_days)] {
            let mut sorted = list.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return bad(format!("{name} contains duplicates"));
            }
        }
        if let Some(p) = self.ph.active_days {
            if p == 0 {
                return bad("ph.active_days must be at least 1".into());
            }
        }
        if !(self.ph.rho > 0.0) || !(self.ph.eps > 0.0) || self.ph.segments == 0 || self.ph.parallelism == 0 {
            return bad("ph: rho, eps, segments and parallelism must be positive".into());
        }
        self.stm.validate()
    }

    /// Makes relative paths relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.grid, &mut self.series, &mut self.actuals].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if self.out.is_relative() {
            self.out = base.join(&self.out);
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

pub fn parse_config(text: &str, origin: impl Into<PathBuf>) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::parse(origin, e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Parses, validates and resolves paths of a TOML run configuration.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let mut cfg = parse_config(&read_to_string(path)?, path)?;
    cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    Ok(cfg)
}

/// Selects days by id, keeping the order of `ids`. Empty `ids` selects all.
pub fn select_days(days: &[ScenarioDay], ids: &[u32]) -> Result<Vec<ScenarioDay>> {
    if ids.is_empty() {
        return Ok(days.to_vec());
    }
    ids.iter()
        .map(|id| {
            days.iter().find(|d| d.day == *id).cloned().ok_or_else(|| Error::Config(format!("day {id} is not in the data")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const FC: &str = "day,hour,node,provider,forecast_net_load,forecast_wind
1,1,1,a,10,0
1,1,1,b,12,1
1,2,1,a,11,0
1,2,1,b,13,1
";
    const ACT: &str = "day,hour,node,net_load,wind
1,1,1,10.5,0.5
1,2,1,11.5,0.5
";

    fn layout() -> SeriesLayout {
        SeriesLayout { nodes: vec![1], providers: Vec::new(), horizon: None }
    }

    #[test]
    fn minimal_grid() {
        let g = parse_grid(r#"{"reference_node":1,"nodes":[{"id":1,"shed_cost":1000,"curtail_cost":50}],"lines":[],"generators":[]}"#, "g.json")
            .unwrap();
        assert_eq!(g.num_lines(), 0);
        assert_eq!(g.base_mva, 100.0);
    }

    #[test]
    fn duplicate_node_is_named() {
        let doc = r#"{"reference_node":1,"nodes":[{"id":4,"shed_cost":1,"curtail_cost":1},{"id":4,"shed_cost":1,"curtail_cost":1}],"lines":[],"generators":[]}"#;
        let e = parse_grid(doc, "g.json").unwrap_err().to_string();
        assert!(e.contains("duplicate node id 4"), "{e}");
    }

    #[test]
    fn malformed_grid_reports_position() {
        let e = parse_grid("{\"nodes\": [", "g.json").unwrap_err().to_string();
        assert!(e.contains("g.json") && e.contains("line"), "{e}");
    }

    #[test]
    fn complete_day_loads() {
        let days = read_timeseries(FC.as_bytes(), ACT.as_bytes(), &layout(), Path::new("s.csv")).unwrap();
        assert_eq!(days.len(), 1);
        assert_eq!(days[0].providers(), 2);
        assert_eq!(days[0].horizon(), 2);
        assert_eq!(days[0].forecasts[1].net_load.get(0, 1), 13.0);
        assert_eq!(days[0].realized_wind.get(0, 0), 0.5);
    }

    #[test]
    fn missing_cell_is_reported() {
        let fc: String = FC.lines().filter(|l| !l.starts_with("1,2,1,b")).map(|l| format!("{l}\n")).collect();
        match read_timeseries(fc.as_bytes(), ACT.as_bytes(), &layout(), Path::new("s.csv")) {
            Err(Error::MissingCell { day: 1, hour: 2, node: 1, provider }) => assert_eq!(provider, "b"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_actual_wind_defaults_to_zero() {
        let act = "day,hour,node,net_load\n1,1,1,10\n1,2,1,11\n";
        let days = read_timeseries(FC.as_bytes(), act.as_bytes(), &layout(), Path::new("s.csv")).unwrap();
        assert_eq!(days[0].realized_wind.values(), &[0.0, 0.0]);
    }

    #[test]
    fn inconsistent_horizon_rejected() {
        let fc = format!("{FC}2,1,1,a,1,0\n2,1,1,b,1,0\n2,2,1,a,1,0\n2,2,1,b,1,0\n2,3,1,a,1,0\n2,3,1,b,1,0\n");
        let act = format!("{ACT}2,1,1,1,0\n2,2,1,1,0\n2,3,1,1,0\n");
        let r = read_timeseries(fc.as_bytes(), act.as_bytes(), &layout(), Path::new("s.csv"));
        assert!(matches!(r, Err(Error::Dimension(_))), "{r:?}");
    }

    #[test]
    fn power_curve_interpolates() {
        let c = PowerCurve::new(vec![(3.0, 0.0), (5.0, 0.2), (7.0, 0.6), (11.0, 1.0), (25.0, 1.0)]).unwrap();
        let p = wind_speed_to_power(&[2.0, 6.0, 11.0, 26.0], &c, 400.0).unwrap();
        assert_eq!(p, vec![0.0, 0.4 * 400.0, 400.0, 0.0]);
        assert!(wind_speed_to_power(&[-1.0], &c, 1.0).is_err());
        assert!(PowerCurve::new(vec![(5.0, 0.1), (5.0, 0.2)]).is_err());
    }

    #[test]
    fn trainer_errors_list_choices() {
        let e = parse_config("trainer = \"\"\n[synth]\n", "c.toml").unwrap_err().to_string();
        assert!(e.contains("ph, pfph, stm, rmse, fixed"), "{e}");
    }

    #[test]
    fn defaults_are_applied() {
        let cfg = parse_config("trainer = \"ph\"\n[synth]\n", "c.toml").unwrap();
        assert_eq!(cfg.ph.rho, 25_000.0);
        assert_eq!(cfg.ph.eps, 1e-5);
        assert_eq!(cfg.ph.resolved_active_days(10), 4);
        let back = parse_config(&cfg.to_toml(), "c.toml").unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn overlapping_days_rejected() {
        let e = parse_config("trainer = \"rmse\"\ntrain_days = [1, 2]\ntest_days = [2, 3]\n[synth]\n", "c.toml");
        assert!(e.unwrap_err().to_string().contains("day 2"));
    }
}
