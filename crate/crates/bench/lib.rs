//! Shared fixtures for the benchmarks.

use vofc_core::synth::{generate, SynthData, SynthParams};

/// The default synthetic benchmark.
pub fn benchmark() -> SynthData {
    generate(&SynthParams::default()).expect("default parameters are valid")
}

/// Two buses, three hours, two days.
pub fn tiny() -> SynthData {
    generate(&SynthParams { nodes: 2, horizon: 3, days: 2, ..Default::default() }).expect("valid parameters")
}
