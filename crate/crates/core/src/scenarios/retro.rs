//! Two different final choices for the same initial state give different
//! velocity fields at an intermediate time.

use serde_json::json;

use super::{evolve_pair, nearest_slice, param, tol, ReportBuilder, Relation, Scenario, ScenarioConfig, StateSpec};
use crate::error::Result;
use crate::field::{amplitude, WavefunctionField};
use crate::grid::Grid1D;
use crate::guidance::{symmetric_fields, GuidanceField};
use crate::propagate::{evolve_window, Potential};
use crate::C64;

pub const SCENARIO: Scenario = Scenario {
    id: "retrocausal-velocity",
    summary: "one initial state, two final choices: the mid-window symmetric velocity fields differ",
    contract: &["final_choices_differ", "identical_choices_agree", "difference_matches_oracle"],
    tolerances: &[("difference", 1e-3), ("identical", 1e-12), ("oracle", 1e-6)],
    params: &[("mid_fraction", 0.5), ("density_floor", 1e-3)],
    default: default_config,
    run,
};

fn default_config() -> serde_json::Value {
    json!({
        "scenario": "retrocausal-velocity",
        "seed": 1,
        "grid": {"points": 2048, "length": 160.0},
        "window": {"t1": 0.0, "t2": 4.0, "dt": 0.01, "stride": 10},
        "initial": {"kind": "gaussian", "center": -2.0, "momentum": 1.0, "width": 1.5},
        "final": {"kind": "gaussian", "center": 2.0, "momentum": 0.0, "width": 0.5},
        "alternative": {"kind": "gaussian", "center": 2.0, "momentum": 1.0, "width": 4.0},
        "potential": {"kind": "free"}
    })
}

/// Free Gaussian evolved in closed form by `dt` (either sign), up to a
/// global phase, which the symmetric fields do not see.
fn free_gaussian(grid: &Grid1D, center: f64, momentum: f64, width: f64, dt: f64, tag: f64) -> Result<WavefunctionField> {
    let s2 = width * width;
    let spread = C64::new(1.0, dt / (2.0 * s2));
    WavefunctionField::from_fn(*grid, tag, |x| {
        let d = x - center - momentum * dt;
        let arg = -C64::new(d * d, 0.0) / (4.0 * s2 * spread) + C64::new(0.0, momentum * x);
        arg.exp()
    })?
    .normalized()
}

fn mid_field(config: &ScenarioConfig, psi_i: &WavefunctionField, psi_f: &WavefunctionField, t_mid: f64) -> Result<(GuidanceField, f64, Vec<String>)> {
    let pair = evolve_pair(config, psi_i, psi_f)?;
    let k = nearest_slice(&pair.forward.times(), t_mid);
    let fi = pair.forward.ascending()[k];
    let ff = pair.backward.ascending()[k];
    let g = symmetric_fields(fi, ff, &pair.amplitude)?;
    Ok((g, pair.amplitude.weight(), pair.warnings().cloned().collect()))
}

/// The same mid-window fields from an independent propagation: closed form
/// for free Gaussians, otherwise a run with a quarter of the step.
fn oracle_field(config: &ScenarioConfig, grid: &Grid1D, fin: &StateSpec, t_mid: f64) -> Result<(GuidanceField, bool)> {
    let w = &config.window;
    if let (Potential::Free, StateSpec::Gaussian { center, momentum, width }, StateSpec::Gaussian { center: cf, momentum: pf, width: wf }) =
        (&config.potential, &config.initial, fin)
    {
        let fi = free_gaussian(grid, *center, *momentum, *width, t_mid - w.t1, t_mid)?;
        let ff = free_gaussian(grid, *cf, *pf, *wf, t_mid - w.t2, t_mid)?;
        let a = amplitude(&ff, &fi)?;
        return Ok((symmetric_fields(&fi, &ff, &a)?, true));
    }
    let dt = w.dt / 4.0;
    let psi_i = config.initial.single(grid, w.t1)?;
    let psi_f = fin.single(grid, w.t2)?;
    let fwd = evolve_window(&psi_i, &config.potential, w.t1, t_mid, dt, 1)?;
    let bwd = evolve_window(&psi_f, &config.potential, w.t2, t_mid, dt, 1)?;
    let (fi, ff) = (fwd.last(), bwd.last());
    let a = amplitude(ff, fi)?;
    Ok((symmetric_fields(fi, ff, &a)?, false))
}

fn run(config: &ScenarioConfig, report: &mut ReportBuilder) -> Result<()> {
    let s = &SCENARIO;
    let grid = config.grid.build()?;
    let w = &config.window;
    let fin = config.final_spec()?;
    let alt = config.alternative.as_ref().unwrap_or(fin);
    let floor = param(config, s, "density_floor");
    let requested = w.t1 + param(config, s, "mid_fraction") * (w.t2 - w.t1);

    let psi_i = config.initial.single(&grid, w.t1)?;
    let (g_fin, weight_fin, warn_fin) = mid_field(config, &psi_i, &fin.single(&grid, w.t2)?, requested)?;
    let (g_alt, weight_alt, warn_alt) = mid_field(config, &psi_i, &alt.single(&grid, w.t2)?, requested)?;
    // a second, independent build of the first choice
    let (g_again, _, _) = mid_field(config, &psi_i, &fin.single(&grid, w.t2)?, requested)?;
    report.warn_all(warn_fin.iter().chain(&warn_alt));
    let t_mid = g_fin.time;

    let diff = g_fin.max_velocity_difference(&g_alt, floor)?;
    report.check("final_choices_differ", diff, Relation::Above, tol(config, s, "difference"));
    let same = g_fin.max_velocity_difference(&g_again, floor)?;
    report.check("identical_choices_agree", same, Relation::Below, tol(config, s, "identical"));

    let (o_fin, closed) = oracle_field(config, &grid, fin, t_mid)?;
    let (o_alt, _) = oracle_field(config, &grid, alt, t_mid)?;
    let diff_oracle = o_fin.max_velocity_difference(&o_alt, floor)?;
    let rel = (diff - diff_oracle).abs() / diff_oracle.max(f64::MIN_POSITIVE);
    report.check_with(
        "difference_matches_oracle",
        rel,
        Relation::Below,
        tol(config, s, "oracle"),
        if closed {
            "closed-form free Gaussian propagation".into()
        } else {
            "propagation with a quarter of the step".into()
        },
    );

    report.metric("mid_time", t_mid);
    report.metric("max_velocity_difference", diff);
    report.metric("oracle_velocity_difference", diff_oracle);
    report.metric("outcome_weight_final", weight_fin);
    report.metric("outcome_weight_alternative", weight_alt);
    if config.outputs.fields {
        report.artifact("field_final_mid.csv", &g_fin.to_csv())?;
        report.artifact("field_alternative_mid.csv", &g_alt.to_csv())?;
    }
    Ok(())
}
