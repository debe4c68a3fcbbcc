//! A world line through a region of negative density: the curve runs
//! backward in time there, so some time slices cut it three times.

use serde_json::json;

use super::report::csv;
use super::{evolve_pair, param, tol, ReportBuilder, Relation, Scenario, ScenarioConfig};
use crate::error::Result;
use crate::trajectory::{ensemble, integrate_lambda_param, stratified_seeds, FieldInterpolator, Mode, Termination, TraceOptions, WorldLine};

pub const SCENARIO: Scenario = Scenario {
    id: "negative-density-worldline",
    summary: "a lambda-traced line through certified negative density reverses in time and straightens out before T",
    contract: &[
        "negative_region_certified",
        "curve_spans_window",
        "curve_continuous",
        "turning_points_even_nonzero",
        "slice_crossed_three_times",
        "outside_fold_crossings_odd",
        "tau_nondecreasing",
        "no_turning_near_final_time",
        "identical_pair_has_no_turning",
    ],
    tolerances: &[("certify", 1e-3), ("tail_fraction", 0.05)],
    params: &[("candidates", 64.0), ("slices", 400.0), ("seed_band", 0.3)],
    default: default_config,
    run,
};

fn default_config() -> serde_json::Value {
    json!({
        "scenario": "negative-density-worldline",
        "seed": 1,
        "grid": {"points": 2048, "length": 160.0},
        "window": {"t1": 0.0, "t2": 4.0, "dt": 0.002, "stride": 1},
        "initial": {"kind": "superposition", "terms": [
            {"re": 1.0, "state": {"kind": "gaussian", "center": -4.0, "momentum": 2.0, "width": 1.0}},
            {"re": 1.0, "state": {"kind": "gaussian", "center": 4.0, "momentum": -2.0, "width": 1.0}}
        ]},
        "final": {"kind": "gaussian", "center": 0.0, "momentum": 0.0, "width": 0.3},
        "potential": {"kind": "free"}
    })
}

/// Geometry of one traced curve.
struct Shape {
    spans: bool,
    turning_times: Vec<f64>,
    max_crossings: usize,
    outside_odd: bool,
    tau_drop: f64,
}

fn shape(line: &WorldLine, t1: f64, t2: f64, slices: usize) -> Shape {
    let ends = [line.start_termination, line.termination];
    let spans = ends.contains(&Some(Termination::WindowStart)) && ends.contains(&Some(Termination::WindowEnd));
    let turning_times: Vec<f64> = line.turning_points.iter().map(|&i| line.points[i].0).collect();
    let (fold_lo, fold_hi) = turning_times
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| (a.min(t), b.max(t)));
    let mut max_crossings = 0;
    let mut outside_odd = true;
    for k in 0..slices {
        // slice times strictly inside the window, offset from the stored grid
        let t = t1 + (k as f64 + 0.5) / slices as f64 * (t2 - t1);
        let n = line.slice_crossings(t);
        max_crossings = max_crossings.max(n);
        if (t < fold_lo || t > fold_hi) && n % 2 == 0 {
            outside_odd = false;
        }
    }
    let tau_drop = line
        .tau
        .windows(2)
        .map(|w| if w[1].is_finite() && w[0].is_finite() { w[0] - w[1] } else { f64::INFINITY })
        .fold(0.0, f64::max);
    Shape {
        spans,
        turning_times,
        max_crossings,
        outside_odd,
        tau_drop,
    }
}

fn run(config: &ScenarioConfig, report: &mut ReportBuilder) -> Result<()> {
    let s = &SCENARIO;
    let w = &config.window;
    let grid = config.grid.build()?;
    let psi_i = config.initial.single(&grid, w.t1)?;
    let psi_f = config.final_spec()?.single(&grid, w.t2)?;
    let pair = evolve_pair(config, &psi_i, &psi_f)?;
    report.warn_all(pair.warnings());
    let interp = FieldInterpolator::symmetric(&pair.forward, &pair.backward, &pair.amplitude)?;
    report.warn_all(&interp.warnings);
    let a_inv = 1.0 / pair.amplitude.value();
    let fwd = pair.forward.ascending();
    let bwd = pair.backward.ascending();

    // signed density straight from the two wavefunctions, relative to the
    // slice maximum, and its running integral; the lambda curves are level
    // sets of that integral
    let certify = tol(config, s, "certify");
    let band = param(config, s, "seed_band").clamp(0.0, 0.5);
    let times = interp.times().to_vec();
    let dx = grid.spacing();
    let direct = |k: usize| -> Vec<f64> {
        (0..grid.len()).map(|i| (fwd[k].values()[i] * bwd[k].values()[i].conj() * a_inv).re).collect()
    };
    let running = |rho: &[f64]| -> Vec<f64> {
        rho.iter()
            .scan(0.0, |acc, r| {
                *acc += r * dx;
                Some(*acc)
            })
            .collect()
    };
    let mut deepest = (0.0, 0usize, 0usize);
    let mut below = 0usize;
    for (k, &t) in times.iter().enumerate() {
        if (t - w.t1) < band * (w.t2 - w.t1) || (w.t2 - t) < band * (w.t2 - w.t1) {
            continue;
        }
        let scale = interp.density_scale(t);
        for (i, r) in direct(k).into_iter().enumerate() {
            let rel = r / scale;
            below += usize::from(rel < -certify);
            if rel < deepest.0 {
                deepest = (rel, k, i);
            }
        }
    }
    report.check_with(
        "negative_region_certified",
        deepest.0,
        Relation::Below,
        -certify,
        format!("most negative density relative to its slice maximum, {below} grid points below the bound"),
    );

    // the primary line is the level through the deepest point, entered at T
    // where the running integral is monotone
    let last = times.len() - 1;
    let level = running(&direct(deepest.1))[deepest.2];
    let at_end = running(&direct(last));
    let primary_x = at_end
        .windows(2)
        .position(|p| (p[0] - level) * (p[1] - level) <= 0.0 && p[0] != p[1])
        .map(|i| grid.x(i) + dx * (level - at_end[i]) / (at_end[i + 1] - at_end[i]));
    let slices = param(config, s, "slices") as usize;
    let tail_start = w.t2 - tol(config, s, "tail_fraction") * (w.t2 - w.t1);
    let opts = TraceOptions::default();
    let primary = match primary_x {
        Some(x) => match integrate_lambda_param(&interp, (w.t2, x), &opts) {
            Ok(line) => Some(line),
            Err(e) => {
                report.warn(format!("primary line from ({}, {x}) failed: {e}", w.t2));
                None
            }
        },
        None => {
            report.warn(format!("level {level} of the deepest point is not reached at t = {}", w.t2));
            None
        }
    };

    // further lines entered at T, spread over the final density
    let budget = param(config, s, "candidates") as usize;
    let mut tried = Vec::new();
    let mut latest_turn = f64::NEG_INFINITY;
    let mut folded = 0usize;
    let mut spanning = 0usize;
    let end_density = interp.slice_density(last).to_vec();
    let seeds = stratified_seeds(&grid, &end_density, budget, w.t2);
    let lines = ensemble(&interp, &seeds, Mode::Lambda, &opts);
    for (seed, line) in seeds.iter().zip(&lines) {
        let Ok(line) = line else {
            tried.push(vec![seed.x, f64::NAN, 0.0]);
            continue;
        };
        let sh = shape(line, w.t1, w.t2, slices);
        latest_turn = sh.turning_times.iter().copied().fold(latest_turn, f64::max);
        spanning += usize::from(sh.spans);
        folded += usize::from(!sh.turning_times.is_empty());
        tried.push(vec![seed.x, sh.turning_times.len() as f64, f64::from(u8::from(sh.spans))]);
    }
    let found = primary.is_some();
    let line = primary.unwrap_or_default();
    let sh = shape(&line, w.t1, w.t2, if found { slices } else { 0 });
    if let Some(&t) = sh.turning_times.iter().max_by(|a, b| a.total_cmp(b)) {
        latest_turn = latest_turn.max(t);
    }

    report.check_flag(
        "curve_spans_window",
        found && sh.spans,
        format!("primary line entered at level {level:.6} of the running density integral"),
    );
    report.check_with(
        "curve_continuous",
        if found { line.max_step() } else { f64::INFINITY },
        Relation::AtMost,
        dx,
        "largest gap between consecutive points".into(),
    );
    let turns = sh.turning_times.len();
    report.check_flag(
        "turning_points_even_nonzero",
        turns > 0 && turns % 2 == 0,
        format!("{turns} turning points"),
    );
    report.check("slice_crossed_three_times", sh.max_crossings as f64, Relation::AtLeast, 3.0);
    report.check_flag(
        "outside_fold_crossings_odd",
        found && sh.outside_odd,
        "every sampled slice outside the fold crosses the curve an odd number of times".into(),
    );
    report.check_with(
        "tau_nondecreasing",
        if found { sh.tau_drop } else { f64::INFINITY },
        Relation::AtMost,
        0.0,
        "largest decrease of proper time between consecutive points".into(),
    );
    let latest = if latest_turn.is_finite() { latest_turn } else { w.t1 };
    report.check_with(
        "no_turning_near_final_time",
        latest,
        Relation::Below,
        tail_start,
        format!("latest turning time over the primary line and {} lines entered at T", seeds.len()),
    );

    // control: the same entry point under an identical pair has no reversals
    let control_f = pair.forward.last().clone();
    let control = evolve_pair(config, &psi_i, &control_f)?;
    let control_interp = FieldInterpolator::symmetric(&control.forward, &control.backward, &control.amplitude)?;
    let seed = (w.t2, primary_x.unwrap_or(config.grid.center));
    let control_line = integrate_lambda_param(&control_interp, seed, &opts)?;
    report.check(
        "identical_pair_has_no_turning",
        control_line.turning_points.len() as f64,
        Relation::AtMost,
        0.0,
    );

    report.metric("turning_points", sh.turning_times.len() as f64);
    report.metric("max_slice_crossings", sh.max_crossings as f64);
    report.metric("deepest_relative_density", deepest.0);
    report.metric("deepest_time", times[deepest.1]);
    report.metric("deepest_x", grid.x(deepest.2));
    report.metric("level", level);
    report.metric("latest_turning_time", latest);
    report.metric("ensemble_lines", tried.len() as f64);
    report.metric("ensemble_spanning", spanning as f64);
    report.metric("ensemble_with_turning", folded as f64);
    report.metric("outcome_weight", pair.amplitude.weight());
    if let Some(&last_tau) = line.tau.last() {
        report.metric("total_proper_time", last_tau);
    }
    if config.outputs.worldlines {
        report.artifact("worldline.csv", &line.to_csv())?;
        report.artifact("control_worldline.csv", &control_line.to_csv())?;
        report.artifact(
            "ensemble.csv",
            &csv(&["x_seed", "turning_points", "spans"], tried),
        )?;
    }
    Ok(())
}
