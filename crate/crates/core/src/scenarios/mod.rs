//! Canned experiments: a JSON config in, a report of named assertions, metrics
//! and CSV/JSON artifacts out. Every run is deterministic given its config.

mod branching;
pub mod config;
mod dirac;
mod epr;
mod measurement;
pub mod report;
mod retro;
mod worldline;

use std::path::Path;

pub use config::{apply_override, canonical_hash, BasisSpec, GridSpec, OutputSpec, ScenarioConfig, Side, StateSpec, Term, WindowSpec};
pub use report::{Assertion, Relation, ReportBuilder, ScenarioReport};

use crate::error::{Error, Result};
use crate::field::{amplitude, inner_product, Amplitude, WavefunctionField};
use crate::propagate::{evolve_window, EvolutionRecord};
use crate::trajectory::{Termination, WorldLine};

/// Registry entry for one scenario.
pub struct Scenario {
    pub id: &'static str,
    pub summary: &'static str,
    /// Assertion names; each appears exactly once in a report.
    pub contract: &'static [&'static str],
    /// Tolerance names and defaults.
    pub tolerances: &'static [(&'static str, f64)],
    /// Parameter names and defaults.
    pub params: &'static [(&'static str, f64)],
    default: fn() -> serde_json::Value,
    run: fn(&ScenarioConfig, &mut ReportBuilder) -> Result<()>,
}

impl Scenario {
    pub fn default_config(&self) -> ScenarioConfig {
        serde_json::from_value((self.default)()).expect("bundled configs parse")
    }

    pub fn default_json(&self) -> serde_json::Value {
        serde_json::to_value(self.default_config()).expect("configs serialize")
    }
}

pub static SCENARIOS: &[Scenario] = &[
    measurement::SCENARIO,
    retro::SCENARIO,
    branching::SCENARIO,
    epr::SCENARIO,
    worldline::SCENARIO,
    dirac::SCENARIO,
];

pub fn ids() -> Vec<&'static str> {
    SCENARIOS.iter().map(|s| s.id).collect()
}

pub fn find(id: &str) -> Result<&'static Scenario> {
    SCENARIOS
        .iter()
        .find(|s| s.id == id)
        .ok_or_else(|| Error::Config(format!("unknown scenario '{id}' (known: {})", ids().join(", "))))
}

pub fn default_config(id: &str) -> Result<ScenarioConfig> {
    Ok(find(id)?.default_config())
}

/// Validates `config` against its scenario and runs it. Artifacts, including
/// `report.json`, go to `out` when given.
pub fn run(config: &ScenarioConfig, out: Option<&Path>) -> Result<ScenarioReport> {
    let scenario = find(&config.scenario)?;
    config.validate_common()?;
    let tol: Vec<&str> = scenario.tolerances.iter().map(|t| t.0).collect();
    let par: Vec<&str> = scenario.params.iter().map(|p| p.0).collect();
    config.check_names(&tol, &par)?;
    let mut builder = ReportBuilder::new(scenario.contract, out)?;
    builder.artifact("config.json", &(serde_json::to_string_pretty(config)? + "\n"))?;
    (scenario.run)(config, &mut builder)?;
    builder.finish(scenario.id, config.seed, config.hash())
}

/// Tolerance lookup against the registry defaults.
fn tol(config: &ScenarioConfig, scenario: &Scenario, name: &str) -> f64 {
    let default = scenario
        .tolerances
        .iter()
        .find(|t| t.0 == name)
        .unwrap_or_else(|| panic!("tolerance {name} is not registered"))
        .1;
    config.tol(name, default)
}

fn param(config: &ScenarioConfig, scenario: &Scenario, name: &str) -> f64 {
    let default = scenario
        .params
        .iter()
        .find(|p| p.0 == name)
        .unwrap_or_else(|| panic!("parameter {name} is not registered"))
        .1;
    config.param(name, default)
}

/// Forward record of psi_i and backward record of psi_f over the config window.
pub(crate) struct Pair {
    pub forward: EvolutionRecord,
    pub backward: EvolutionRecord,
    pub amplitude: Amplitude,
}

pub(crate) fn evolve_pair(config: &ScenarioConfig, psi_i: &WavefunctionField, psi_f: &WavefunctionField) -> Result<Pair> {
    let w = &config.window;
    let forward = evolve_window(psi_i, &config.potential, w.t1, w.t2, w.dt, w.stride)?;
    let backward = evolve_window(psi_f, &config.potential, w.t2, w.t1, w.dt, w.stride)?;
    let amplitude = amplitude(backward.last(), forward.first())?;
    Ok(Pair {
        forward,
        backward,
        amplitude,
    })
}

impl Pair {
    /// Largest relative change of <psi_f|psi_i> across the stored slices.
    pub fn amplitude_drift(&self) -> Result<f64> {
        let a0 = self.amplitude.value();
        let mut worst: f64 = 0.0;
        for (fi, ff) in crate::guidance::paired_snapshots(&self.forward, &self.backward)? {
            worst = worst.max((inner_product(ff, fi)? - a0).norm() / a0.norm());
        }
        Ok(worst)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &String> {
        self.forward.warnings.iter().chain(&self.backward.warnings)
    }
}

/// Where a traced curve meets the late edge of the window, if it does.
pub(crate) fn arrival(line: &WorldLine) -> Option<(f64, f64)> {
    if line.termination == Some(Termination::WindowEnd) {
        line.last()
    } else if line.start_termination == Some(Termination::WindowEnd) {
        line.first()
    } else {
        None
    }
}

/// Index of the stored slice closest to `t`.
pub(crate) fn nearest_slice(times: &[f64], t: f64) -> usize {
    let mut best = 0;
    for (k, s) in times.iter().enumerate() {
        if (s - t).abs() < (times[best] - t).abs() {
            best = k;
        }
    }
    best
}
