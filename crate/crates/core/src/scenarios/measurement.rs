//! A narrow final position packet pins the symmetric density to the measured
//! point as the measurement time is approached.

use serde_json::json;

use super::report::csv;
use super::{evolve_pair, param, tol, ReportBuilder, Relation, Scenario, ScenarioConfig, StateSpec};
use crate::error::{Error, Result};
use crate::guidance::{paired_snapshots, symmetric_fields};

pub const SCENARIO: Scenario = Scenario {
    id: "measurement-limit",
    summary: "narrow final position packet: |rho| concentrates at the outcome and negativity dies out at T",
    contract: &[
        "concentration_at_final_time",
        "negativity_at_final_time",
        "negativity_decreases_near_final_time",
        "amplitude_conserved",
    ],
    tolerances: &[
        ("concentration", 0.99),
        ("negativity", 1e-6),
        ("jitter", 1e-3),
        ("amplitude_drift", 1e-8),
    ],
    params: &[("radius_widths", 5.0), ("approach_fraction", 0.1)],
    default: default_config,
    run,
};

fn default_config() -> serde_json::Value {
    json!({
        "scenario": "measurement-limit",
        "seed": 1,
        "grid": {"points": 2048, "length": 160.0},
        "window": {"t1": 0.0, "t2": 4.0, "dt": 0.005, "stride": 8},
        "initial": {"kind": "gaussian", "center": 0.0, "momentum": 0.5, "width": 2.0},
        "final": {"kind": "gaussian", "center": 2.0, "momentum": 0.0, "width": 0.3125},
        "potential": {"kind": "free"}
    })
}

fn run(config: &ScenarioConfig, report: &mut ReportBuilder) -> Result<()> {
    let s = &SCENARIO;
    let grid = config.grid.build()?;
    let (center, width) = match config.final_spec()? {
        StateSpec::Gaussian { center, width, .. } => (*center, *width),
        other => {
            return Err(Error::Config(format!(
                "measurement-limit needs a gaussian final packet, got {}",
                other.kind()
            )))
        }
    };
    let w = &config.window;
    let psi_i = config.initial.single(&grid, w.t1)?;
    let psi_f = config.final_spec()?.single(&grid, w.t2)?;
    let pair = evolve_pair(config, &psi_i, &psi_f)?;
    report.warn_all(pair.warnings());

    let radius = param(config, s, "radius_widths") * width;
    let mut times = Vec::new();
    let mut negativity = Vec::new();
    let mut concentration = Vec::new();
    let mut fields = Vec::new();
    for (fi, ff) in paired_snapshots(&pair.forward, &pair.backward)? {
        let g = symmetric_fields(fi, ff, &pair.amplitude)?;
        times.push(g.time);
        negativity.push(g.negativity_fraction());
        concentration.push(g.concentration(center, radius));
        fields.push(g);
    }
    let last = times.len() - 1;
    let mid = last / 2;

    report.check(
        "concentration_at_final_time",
        concentration[last],
        Relation::AtLeast,
        tol(config, s, "concentration"),
    );
    report.check(
        "negativity_at_final_time",
        negativity[last],
        Relation::Below,
        tol(config, s, "negativity"),
    );
    let start = w.t2 - param(config, s, "approach_fraction") * (w.t2 - w.t1);
    let rise = (0..last)
        .filter(|&k| times[k] >= start - 1e-12)
        .map(|k| negativity[k + 1] - negativity[k])
        .fold(0.0f64, f64::max);
    report.check_with(
        "negativity_decreases_near_final_time",
        rise,
        Relation::AtMost,
        tol(config, s, "jitter"),
        format!("largest step-to-step rise of the negativity fraction after t = {start}"),
    );
    let drift = pair.amplitude_drift()?;
    report.check(
        "amplitude_conserved",
        drift,
        Relation::Below,
        tol(config, s, "amplitude_drift"),
    );

    report.metric("amplitude_re", pair.amplitude.value().re);
    report.metric("amplitude_im", pair.amplitude.value().im);
    report.metric("outcome_weight", pair.amplitude.weight());
    report.metric("negativity_mid", negativity[mid]);
    report.metric("negativity_max", negativity.iter().copied().fold(0.0, f64::max));
    report.metric("concentration_mid", concentration[mid]);
    report.metric("radius", radius);

    if config.outputs.fields {
        let rows = (0..times.len()).map(|k| vec![times[k], negativity[k], concentration[k]]);
        report.artifact("series.csv", &csv(&["t", "negativity_fraction", "concentration"], rows))?;
        report.artifact("field_mid.csv", &fields[mid].to_csv())?;
        report.artifact("field_final.csv", &fields[last].to_csv())?;
    }
    Ok(())
}
