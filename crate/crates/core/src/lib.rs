//! Value-oriented training of forecast combination weights.
//!
//! Weights `lambda` on the probability simplex combine several providers'
//! net-load and wind forecasts. A weight vector is scored by the realized cost
//! of scheduling units on the combined forecast (day-ahead UC) and then
//! redispatching against actual data (real-time RT). Trainers:
//!
//! * [`ph::run_ph`] / [`ph::run_pfph`]: consensus decomposition over days.
//! * [`single_level::solve_stm`]: one MILP with each day's relaxed UC
//!   replaced by its KKT conditions.
//! * [`eval::rmse_weights`]: inverse-RMSE statistical baseline.
//!
//! ```
//! use vofc_core::{run_ph, evaluate_tst, PhConfig, UcVariant};
//! use vofc_core::synth::{generate, SynthParams};
//!
//! let data = generate(&SynthParams { nodes: 2, horizon: 3, days: 3, ..SynthParams::default() })?;
//! let cfg = PhConfig { rho: 5000.0, variant: UcVariant::Relaxed, ..PhConfig::default() };
//! let out = run_ph(&data.grid, &data.days, &cfg)?;
//! let report = evaluate_tst(&data.grid, &out.weights, &data.days, UcVariant::Binary)?;
//! assert!(out.converged && report.tst > 0.0);
//! # Ok::<(), vofc_core::Error>(())
//! ```

// Dense numeric kernels index several arrays per loop, and `!(x >= 0.0)`
// is the intended NaN-rejecting form in validators.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod data;
pub mod error;
pub mod eval;
pub mod grid;
pub mod model;
pub mod ph;
pub mod scenario;
pub mod single_level;
pub mod solver;
pub mod synth;
pub mod uc;

pub use data::{load_config, load_grid, load_timeseries, PowerCurve, RunConfig, SeriesLayout, Trainer};
pub use error::{Error, Result};
pub use eval::{evaluate_tst, rmse_per_provider, rmse_weights, Baselines, EvalReport, ReportRow};
pub use grid::{GeneratorParams, Grid, Line, Node};
pub use model::{ModelInstance, Sense, VarId};
pub use ph::{run_pfph, run_ph, Algorithm, PhConfig, PhOutcome, PhState, TraceRow};
pub use scenario::{combine_forecasts, NodeSeries, ProviderForecast, ScenarioDay, Weights};
pub use single_level::{build_stm, solve_stm, validate_bigm, BigMReport, StmConfig, StmOutcome};
pub use solver::{Solution, SolveStatus};
pub use synth::{SynthData, SynthParams};
pub use uc::{two_stage_cost, CostBreakdown, UcSolution, UcVariant};
