//! RMSE combination baseline and realized-cost scoring of weight vectors.
//!
//! TST is the average two-stage (UC + RT) cost per test day. Every method is
//! compared against each single-provider weight vector and the uniform
//! average; for two providers these are the `a`, `b` and `c` baselines.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scenario::{ScenarioDay, Weights};
use crate::uc::{two_stage_cost, CostBreakdown, UcVariant};

/// Root-mean-square net-load error of provider `k`: squared errors are
/// averaged over nodes and hours per day, then over days, then rooted.
pub fn rmse_per_provider(days: &[ScenarioDay], k: usize) -> Result<f64> {
    if days.is_empty() {
        return Err(Error::InvalidInput("RMSE needs at least one day".into()));
    }
    let mut total = 0.0;
    for d in days {
        let f = d.forecasts.get(k).ok_or_else(|| {
            Error::Dimension(format!("day {} has {} providers, provider {k} requested", d.day, d.providers()))
        })?;
        let (fc, real) = (f.net_load.values(), d.realized_load.values());
        total += fc.iter().zip(real).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / fc.len() as f64;
    }
    Ok((total / days.len() as f64).sqrt())
}

/// RMSE of every provider.
pub fn rmse_all(days: &[ScenarioDay]) -> Result<Vec<f64>> {
    let k = days.first().map_or(0, ScenarioDay::providers);
    (0..k).map(|j| rmse_per_provider(days, j)).collect()
}

/// Inverse-RMSE weights. Providers with zero error share all the weight.
pub fn rmse_weights(rmse: &[f64]) -> Result<Weights> {
    if rmse.is_empty() || rmse.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::InvalidInput(format!("RMSE values must be finite and nonnegative: {rmse:?}")));
    }
    let perfect = rmse.iter().filter(|&&r| r == 0.0).count();
    let raw: Vec<f64> = if perfect > 0 {
        rmse.iter().map(|&r| if r == 0.0 { 1.0 / perfect as f64 } else { 0.0 }).collect()
    } else {
        let inv: f64 = rmse.iter().map(|r| 1.0 / r).sum();
        rmse.iter().map(|r| (1.0 / r) / inv).collect()
    };
    Weights::normalized(&raw)
}

/// RMSE of the combined forecast under `weights`.
pub fn combined_rmse(days: &[ScenarioDay], weights: &Weights) -> Result<f64> {
    if days.is_empty() {
        return Err(Error::InvalidInput("RMSE needs at least one day".into()));
    }
    let mut total = 0.0;
    for d in days {
        let (load, _) = crate::scenario::combine_forecasts(weights, d)?;
        let (fc, real) = (load.values(), d.realized_load.values());
        total += fc.iter().zip(real).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / fc.len() as f64;
    }
    Ok((total / days.len() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayCost {
    pub day: u32,
    pub costs: CostBreakdown,
}

/// Per-day costs and their average for one weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TstResult {
    pub weights: Weights,
    pub tst: f64,
    pub per_day: Vec<DayCost>,
}

/// Scores `weights` on `days`. Days are solved in parallel on the current
/// rayon pool and averaged in input order.
pub fn tst(grid: &Grid, weights: &Weights, days: &[ScenarioDay], variant: UcVariant) -> Result<TstResult> {
    if days.is_empty() {
        return Err(Error::InvalidInput("evaluation needs at least one test day".into()));
    }
    let costs: Vec<CostBreakdown> =
        days.par_iter().map(|d| two_stage_cost(grid, weights, d, variant)).collect::<Result<_>>()?;
    let per_day: Vec<DayCost> = days.iter().zip(costs).map(|(d, costs)| DayCost { day: d.day, costs }).collect();
    let tst = per_day.iter().map(|d| d.costs.total).sum::<f64>() / per_day.len() as f64;
    Ok(TstResult { weights: weights.clone(), tst, per_day })
}

/// Reference weight vectors: every unit vector, then the uniform average.
pub fn baseline_weights(k: usize) -> Vec<Weights> {
    let mut out: Vec<Weights> = (0..k).map(|i| Weights::unit(k, i)).collect();
    out.push(Weights::uniform(k));
    out
}

/// Column label of baseline `i`: `a`, `b`, ... for two providers, unit
/// vectors then uniform in general.
pub fn baseline_label(i: usize) -> String {
    let mut s = String::new();
    let mut n = i;
    loop {
        s.insert(0, (b'a' + (n % 26) as u8) as char);
        if n < 26 {
            break;
        }
        n = n / 26 - 1;
    }
    s
}

/// Scores of the reference weight vectors, shared across methods.
#[derive(Debug, Clone, PartialEq)]
pub struct Baselines {
    pub results: Vec<TstResult>,
}

impl Baselines {
    pub fn compute(grid: &Grid, days: &[ScenarioDay], variant: UcVariant) -> Result<Self> {
        let k = days.first().map_or(0, ScenarioDay::providers);
        if k == 0 {
            return Err(Error::InvalidInput("evaluation needs at least one test day".into()));
        }
        let results = baseline_weights(k).iter().map(|w| tst(grid, w, days, variant)).collect::<Result<_>>()?;
        Ok(Self { results })
    }

    pub fn tst(&self) -> Vec<f64> {
        self.results.iter().map(|r| r.tst).collect()
    }
}

/// Result of scoring one trained weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub method: String,
    pub weights: Weights,
    pub tst: f64,
    /// `tst - baseline tst`, one per baseline.
    pub deltas: Vec<f64>,
    pub per_day: Vec<DayCost>,
    pub train_seconds: f64,
}

impl EvalReport {
    pub fn row(&self) -> ReportRow {
        ReportRow {
            method: self.method.clone(),
            lambda: self.weights.as_slice().to_vec(),
            seconds: self.train_seconds,
            tst: self.tst,
            deltas: self.deltas.clone(),
        }
    }
}

/// Scores `weights` and subtracts precomputed baselines.
pub fn evaluate_with(
    grid: &Grid,
    method: &str,
    weights: &Weights,
    days: &[ScenarioDay],
    variant: UcVariant,
    baselines: &Baselines,
    train_seconds: f64,
) -> Result<EvalReport> {
    let r = tst(grid, weights, days, variant)?;
    let deltas = baselines.results.iter().map(|b| r.tst - b.tst).collect();
    Ok(EvalReport { method: method.into(), weights: r.weights, tst: r.tst, deltas, per_day: r.per_day, train_seconds })
}

/// Scores `weights` on `days` against freshly computed baselines.
pub fn evaluate_tst(grid: &Grid, weights: &Weights, days: &[ScenarioDay], variant: UcVariant) -> Result<EvalReport> {
    let b = Baselines::compute(grid, days, variant)?;
    evaluate_with(grid, "weights", weights, days, variant, &b, 0.0)
}

/// One line of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub lambda: Vec<f64>,
    pub seconds: f64,
    pub tst: f64,
    pub deltas: Vec<f64>,
}

const SUBSCRIPTS: [char; 10] = ['₀', '₁', '₂', '₃', '₄', '₅', '₆', '₇', '₈', '₉'];

fn subscript(n: usize) -> String {
    n.to_string().chars().map(|c| SUBSCRIPTS[c.to_digit(10).unwrap_or(0) as usize]).collect()
}

/// Report header for `k` providers.
pub fn report_header(k: usize) -> Vec<String> {
    let mut h = vec!["Method".to_string()];
    h.extend((1..=k).map(|j| format!("λ*{}", subscript(j))));
    h.push("Time(s)".into());
    h.push("TST*".into());
    h.extend((0..=k).map(|i| format!("Δ_{}", baseline_label(i))));
    h
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidInput(format!("report csv: {e}"))
}

/// Full-precision CSV table.
pub fn write_report_csv(rows: &[ReportRow], k: usize, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(report_header(k)).map_err(csv_err)?;
    for r in rows {
        if r.lambda.len() != k || r.deltas.len() != k + 1 {
            return Err(Error::Dimension(format!("row {} does not have {k} weights and {} deltas", r.method, k + 1)));
        }
        let mut rec = vec![r.method.clone()];
        rec.extend(r.lambda.iter().map(f64::to_string));
        rec.push(r.seconds.to_string());
        rec.push(r.tst.to_string());
        rec.extend(r.deltas.iter().map(f64::to_string));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::InvalidInput(format!("report csv: {e}")))
}

/// Markdown table with weights rounded to three decimals and costs to two.
pub fn write_report_md(rows: &[ReportRow], k: usize, mut out: impl Write) -> Result<()> {
    let io = |e| Error::io("report.md", e);
    let header = report_header(k);
    writeln!(out, "| {} |", header.join(" | ")).map_err(io)?;
    writeln!(out, "|{}", "---|".repeat(header.len())).map_err(io)?;
    for r in rows {
        let mut cells = vec![r.method.clone()];
        cells.extend(r.lambda.iter().map(|v| format!("{v:.3}")));
        cells.push(format!("{:.2}", r.seconds));
        cells.push(format!("{:.2}", r.tst));
        cells.extend(r.deltas.iter().map(|v| format!("{v:.2}")));
        writeln!(out, "| {} |", cells.join(" | ")).map_err(io)?;
    }
    Ok(())
}

/// Writes `report.csv` and `report.md` into `dir`.
pub fn write_report(rows: &[ReportRow], k: usize, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv_path = dir.join("report.csv");
    let f = std::fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    write_report_csv(rows, k, std::io::BufWriter::new(f))?;
    let md_path = dir.join("report.md");
    let f = std::fs::File::create(&md_path).map_err(|e| Error::io(&md_path, e))?;
    write_report_md(rows, k, std::io::BufWriter::new(f))
}

/// Parses a table written by [`write_report_csv`]; returns the provider
/// count and rows.
pub fn read_report_csv(input: impl Read) -> Result<(usize, Vec<ReportRow>)> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
    let k = header.iter().filter(|h| h.starts_with("λ*")).count();
    if header != report_header(k) {
        return Err(Error::InvalidInput(format!("unexpected report header {header:?}")));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| Error::InvalidInput(format!("report value {s:?}: {e}")));
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let f: Vec<&str> = rec.iter().collect();
        rows.push(ReportRow {
            method: f[0].to_string(),
            lambda: f[1..=k].iter().map(|s| num(s)).collect::<Result<_>>()?,
            seconds: num(f[k + 1])?,
            tst: num(f[k + 2])?,
            deltas: f[k + 3..].iter().map(|s| num(s)).collect::<Result<_>>()?,
        });
    }
    Ok((k, rows))
}

/// Long-format per-day costs: `method,day,component,cost`.
pub fn write_breakdown_csv(reports: &[EvalReport], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "day", "component", "cost"]).map_err(csv_err)?;
    for rep in reports {
        for d in &rep.per_day {
            let values = d.costs.components().into_iter().chain([d.costs.total]);
            let names = CostBreakdown::COMPONENTS.iter().copied().chain(["total"]);
            for (name, v) in names.zip(values) {
                w.write_record([rep.method.as_str(), &d.day.to_string(), name, &v.to_string()]).map_err(csv_err)?;
            }
        }
    }
    w.flush().map_err(|e| Error::InvalidInput(format!("breakdown csv: {e}")))
}
