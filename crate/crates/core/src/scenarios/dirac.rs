//! Spinor pair in 1+1 dimensions: four-velocity normalization, conservation
//! of the amplitude and of the current, and a proper-time world line.

use serde_json::json;

use super::report::csv;
use super::{param, tol, ReportBuilder, Relation, Scenario, ScenarioConfig};
use crate::error::Result;
use crate::field::dirac_amplitude;
use crate::grid::Grid1D;
use crate::guidance::{dirac_continuity_residual, dirac_guidance, paired_snapshots};
use crate::propagate::{dirac_rest_state, evolve_dirac_window};
use crate::trajectory::{dirac_trajectory, CausalCharacter, FieldInterpolator, TraceOptions};

pub const SCENARIO: Scenario = Scenario {
    id: "dirac-demo",
    summary: "spinor pair: |u.u| = 1, conserved amplitude and current, proper-time world lines",
    contract: &[
        "four_velocity_norm",
        "amplitude_conserved",
        "continuity_second_order",
        "worldline_tau_increasing",
        "rest_pair_static",
    ],
    tolerances: &[("norm", 1e-9), ("amplitude_drift", 1e-8), ("order_ratio", 3.5), ("static", 1e-8)],
    params: &[("mass", 1.0), ("rest_floor", 1e-6), ("order_window", 1.0)],
    default: default_config,
    run,
};

fn default_config() -> serde_json::Value {
    json!({
        "scenario": "dirac-demo",
        "seed": 1,
        "grid": {"points": 1024, "length": 80.0},
        "window": {"t1": 0.0, "t2": 8.0, "dt": 0.005, "stride": 4},
        "initial": {"kind": "dirac-packet", "center": -5.0, "momentum": 1.0, "width": 2.0},
        "final": {"kind": "dirac-packet", "center": 0.0, "momentum": 0.5, "width": 2.0},
        "potential": {"kind": "free"}
    })
}

fn run(config: &ScenarioConfig, report: &mut ReportBuilder) -> Result<()> {
    let s = &SCENARIO;
    let w = &config.window;
    let grid = config.grid.build()?;
    let mass = param(config, s, "mass");
    if !config.potential.is_free() {
        report.warn("the spinor propagator is free; the configured potential is ignored");
    }
    let psi_i = config.initial.spinor(&grid, mass, w.t1)?;
    let psi_f = config.final_spec()?.spinor(&grid, mass, w.t2)?;
    let fwd = evolve_dirac_window(&psi_i, mass, w.t1, w.t2, w.dt, w.stride)?;
    let bwd = evolve_dirac_window(&psi_f, mass, w.t2, w.t1, w.dt, w.stride)?;
    report.warn_all(fwd.warnings.iter().chain(&bwd.warnings));
    let a = dirac_amplitude(bwd.last(), fwd.first())?;

    let floor_rel = param(config, s, "rest_floor");
    let mut norm_defect: f64 = 0.0;
    let mut drift: f64 = 0.0;
    let mut spacelike = 0usize;
    let mut points = 0usize;
    let mut series = Vec::new();
    for (fi, ff) in paired_snapshots(&fwd, &bwd)? {
        let g = dirac_guidance(fi, ff, &a)?;
        let scale = g.rho0.iter().copied().fold(0.0, f64::max);
        let d = g.norm_defect(floor_rel * scale);
        norm_defect = norm_defect.max(d);
        let at = dirac_amplitude(ff, fi)?.value();
        let rel = (at - a.value()).norm() / a.magnitude();
        drift = drift.max(rel);
        spacelike += g.count(CausalCharacter::Spacelike);
        points += g.rho0.len();
        series.push(vec![g.time, d, rel, g.count(CausalCharacter::Spacelike) as f64]);
    }
    report.check("four_velocity_norm", norm_defect, Relation::Below, tol(config, s, "norm"));
    report.check("amplitude_conserved", drift, Relation::Below, tol(config, s, "amplitude_drift"));

    // residual of the current's divergence on a short window at dt and dt / 2
    let span = param(config, s, "order_window").min(w.t2 - w.t1);
    let residual = |dt: f64| -> Result<f64> {
        let t_end = w.t1 + span;
        let f0 = evolve_dirac_window(&psi_i, mass, w.t1, t_end, dt, 1)?;
        let end = evolve_dirac_window(&psi_f, mass, w.t2, t_end, w.dt, 1)?;
        let b0 = evolve_dirac_window(end.last(), mass, t_end, w.t1, dt, 1)?;
        let a0 = dirac_amplitude(b0.last(), f0.first())?;
        Ok(dirac_continuity_residual(&f0, &b0, &a0)?.overall())
    };
    let (coarse, fine) = (residual(w.dt * 4.0)?, residual(w.dt * 2.0)?);
    report.check_with(
        "continuity_second_order",
        coarse / fine,
        Relation::AtLeast,
        tol(config, s, "order_ratio"),
        format!("residual {coarse:e} at dt = {}, {fine:e} at dt = {}", w.dt * 4.0, w.dt * 2.0),
    );

    let interp = FieldInterpolator::dirac(&fwd, &bwd, &a)?;
    let first = interp.slice_density(0);
    let peak = (0..grid.len()).fold(0, |b, i| if first[i] > first[b] { i } else { b });
    let opts = TraceOptions::default();
    let (tau_step, line) = match dirac_trajectory(&interp, (w.t1, grid.x(peak)), &opts) {
        Ok(line) => {
            let step = line.tau.windows(2).map(|p| p[1] - p[0]).fold(f64::INFINITY, f64::min);
            (step, Some(line))
        }
        Err(e) => {
            report.warn(format!("world line from the density peak failed: {e}"));
            (f64::NAN, None)
        }
    };
    report.check_with(
        "worldline_tau_increasing",
        tau_step,
        Relation::Above,
        0.0,
        "smallest proper-time increment along the line".into(),
    );

    // rest pair on a small grid: the line stays put and tau equals t
    let rg = Grid1D::centered(64, 20.0, 0.0)?;
    let rest_i = dirac_rest_state(&rg, mass, 0.0)?;
    let rest_f = dirac_rest_state(&rg, mass, 1.0)?;
    let ri = evolve_dirac_window(&rest_i, mass, 0.0, 1.0, 0.01, 5)?;
    let rf = evolve_dirac_window(&rest_f, mass, 1.0, 0.0, 0.01, 5)?;
    let ra = dirac_amplitude(rf.last(), ri.first())?;
    let rest_interp = FieldInterpolator::dirac(&ri, &rf, &ra)?;
    let x0 = 1.3;
    let rest = dirac_trajectory(&rest_interp, (0.0, x0), &opts)?;
    let wander = rest
        .points
        .iter()
        .zip(&rest.tau)
        .map(|(&(t, x), &tau)| (x - x0).abs().max((tau - t).abs()))
        .fold(0.0, f64::max);
    report.check_with(
        "rest_pair_static",
        wander,
        Relation::Below,
        tol(config, s, "static"),
        "largest |x - x0| or |tau - t| along the rest-pair line".into(),
    );

    report.metric("amplitude_re", a.value().re);
    report.metric("amplitude_im", a.value().im);
    report.metric("spacelike_fraction", spacelike as f64 / points as f64);
    report.metric("continuity_ratio", coarse / fine);
    if let Some(l) = &line {
        report.metric("worldline_points", l.len() as f64);
        report.metric("worldline_proper_time", l.tau.last().copied().unwrap_or(0.0));
        report.metric(
            "worldline_spacelike_segments",
            l.segment_character.iter().filter(|c| **c == CausalCharacter::Spacelike).count() as f64,
        );
    }
    if config.outputs.fields {
        report.artifact("series.csv", &csv(&["t", "norm_defect", "amplitude_drift", "spacelike_points"], series))?;
    }
    if config.outputs.worldlines {
        if let Some(l) = &line {
            report.artifact("worldline.csv", &l.to_csv())?;
        }
        report.artifact("rest_worldline.csv", &rest.to_csv())?;
    }
    Ok(())
}
