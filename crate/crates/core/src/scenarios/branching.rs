//! A separating interaction splits the initial state into two packets; the
//! final state overlapping one of them steers every symmetric-model line
//! into that packet, while standard-model lines follow their seed.

use serde_json::json;

use super::report::csv;
use super::{arrival, param, tol, ReportBuilder, Relation, Scenario, ScenarioConfig, Side, StateSpec};
use crate::error::{Error, Result};
use crate::field::{amplitude, inner_product, WavefunctionField};
use crate::grid::Grid1D;
use crate::propagate::{evolve_window, EvolutionRecord};
use crate::trajectory::{ensemble, stratified_seeds, FieldInterpolator, Mode, TraceOptions, WorldLine};
use crate::C64;

pub const SCENARIO: Scenario = Scenario {
    id: "measurement-branching",
    summary: "separating kick splits psi_i; every symmetric line ends in the branch psi_f overlaps",
    contract: &[
        "branches_disjoint",
        "final_state_single_branch",
        "lines_end_in_selected_branch",
        "mirror_selects_other_branch",
        "standard_control_follows_seed",
        "standard_control_splits",
    ],
    tolerances: &[
        ("overlap", 1e-8),
        ("branch_fraction", 1.0),
        ("seed_agreement", 0.99),
        ("split_fraction", 0.1),
    ],
    params: &[("lobe_floor", 1e-4)],
    default: default_config,
    run,
};

fn default_config() -> serde_json::Value {
    json!({
        "scenario": "measurement-branching",
        "seed": 1,
        "grid": {"points": 2048, "length": 160.0},
        "window": {"t1": 0.0, "t2": 4.0, "dt": 0.0025, "stride": 1},
        "initial": {"kind": "superposition", "terms": [
            {"re": 1.0, "state": {"kind": "gaussian", "center": -5.0, "momentum": -3.0, "width": 1.0}},
            {"re": 1.0, "state": {"kind": "gaussian", "center": 5.0, "momentum": 3.0, "width": 1.0}}
        ]},
        "final": {"kind": "evolved", "side": "right", "smoothing": 1.0},
        "potential": {"kind": "separating-kick", "strength": 4.0, "t_on": 0.5, "t_off": 1.5, "smoothing": 0.3},
        "ensemble": 500
    })
}

/// psi(T) kept on one side of `center` by a smooth step, normalized.
fn windowed(psi: &WavefunctionField, side: Side, smoothing: f64, center: f64) -> Result<WavefunctionField> {
    let values: Vec<C64> = psi
        .grid()
        .points()
        .zip(psi.values())
        .map(|(x, v)| v * (0.5 * (1.0 + (side.sign() * (x - center) / smoothing).tanh())))
        .collect();
    WavefunctionField::new(*psi.grid(), values, psi.time())?.normalized()
}

/// Number of separated regions where |psi|^2 exceeds `floor` times its maximum.
fn lobe_count(psi: &WavefunctionField, floor: f64) -> usize {
    let d = psi.density();
    let cut = floor * d.iter().copied().fold(0.0, f64::max);
    let mut count = 0;
    let mut inside = false;
    for r in &d {
        if *r > cut && !inside {
            count += 1;
        }
        inside = *r > cut;
    }
    count
}

fn side_of(x: f64, center: f64) -> Side {
    if x >= center {
        Side::Right
    } else {
        Side::Left
    }
}

struct Traced {
    lines: Vec<Result<WorldLine>>,
    landed: Vec<Option<Side>>,
}

fn symmetric_run(
    config: &ScenarioConfig,
    forward: &EvolutionRecord,
    side: Side,
    smoothing: f64,
    center: f64,
    report: &mut ReportBuilder,
) -> Result<(Traced, EvolutionRecord, Vec<f64>)> {
    let w = &config.window;
    let psi_f = windowed(forward.last(), side, smoothing, center)?;
    let backward = evolve_window(&psi_f, &config.potential, w.t2, w.t1, w.dt, w.stride)?;
    report.warn_all(&backward.warnings);
    let a = amplitude(backward.last(), forward.first())?;
    let interp = FieldInterpolator::symmetric(forward, &backward, &a)?;
    report.warn_all(&interp.warnings);
    let rho0 = interp.slice_density(0).to_vec();
    let seeds = stratified_seeds(interp.grid(), &rho0, config.ensemble, w.t1);
    let lines = ensemble(&interp, &seeds, Mode::Lambda, &TraceOptions::default());
    let landed = lines
        .iter()
        .map(|l| l.as_ref().ok().and_then(arrival).map(|(_, x)| side_of(x, center)))
        .collect();
    Ok((Traced { lines, landed }, backward, rho0))
}

fn fraction(landed: &[Option<Side>], side: Side) -> f64 {
    landed.iter().filter(|l| **l == Some(side)).count() as f64 / landed.len() as f64
}

fn arrivals_csv(lines: &[Result<WorldLine>]) -> String {
    let rows = lines.iter().enumerate().map(|(k, l)| {
        let (t0, x0, t, x) = match l {
            Ok(line) => {
                let s = line.first().unwrap_or((f64::NAN, f64::NAN));
                let e = arrival(line).unwrap_or((f64::NAN, f64::NAN));
                (s.0, s.1, e.0, e.1)
            }
            Err(_) => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
        };
        vec![k as f64, t0, x0, t, x]
    });
    csv(&["line", "t_start", "x_start", "t_arrival", "x_arrival"], rows)
}

fn run(config: &ScenarioConfig, report: &mut ReportBuilder) -> Result<()> {
    let s = &SCENARIO;
    let grid: Grid1D = config.grid.build()?;
    let w = &config.window;
    let center = config.grid.center;
    let (side, smoothing) = match config.final_spec()? {
        StateSpec::Evolved { side: Some(side), smoothing } => (*side, *smoothing),
        other => {
            return Err(Error::Config(format!(
                "measurement-branching needs an 'evolved' final state with a side, got {}",
                other.kind()
            )))
        }
    };
    if !(smoothing > 0.0) {
        return Err(Error::Config("smoothing must be positive".into()));
    }
    let parts = config.initial.components(&grid, w.t1)?;
    if parts.len() != 2 {
        return Err(Error::Config("measurement-branching needs a two-term initial superposition".into()));
    }

    // each branch evolved on its own
    let ends = parts
        .iter()
        .map(|(c, f)| Ok(evolve_window(&f.scaled(*c), &config.potential, w.t1, w.t2, w.dt, w.stride)?.last().clone()))
        .collect::<Result<Vec<_>>>()?;
    let overlap = inner_product(&ends[0], &ends[1])?.norm() / (ends[0].norm_sq() * ends[1].norm_sq()).sqrt();
    report.check("branches_disjoint", overlap, Relation::Below, tol(config, s, "overlap"));

    let psi_i = config.initial.single(&grid, w.t1)?;
    let forward = evolve_window(&psi_i, &config.potential, w.t1, w.t2, w.dt, w.stride)?;
    report.warn_all(&forward.warnings);

    let (chosen, backward, rho0) = symmetric_run(config, &forward, side, smoothing, center, report)?;
    let floor = param(config, s, "lobe_floor");
    let lobes = backward.snapshots.iter().map(|f| lobe_count(f, floor)).max().unwrap_or(0);
    report.check_with(
        "final_state_single_branch",
        lobes as f64,
        Relation::AtMost,
        1.0,
        "largest number of separated lobes of the backward-evolved final state".into(),
    );
    let hit = fraction(&chosen.landed, side);
    report.check("lines_end_in_selected_branch", hit, Relation::AtLeast, tol(config, s, "branch_fraction"));

    let other = match side {
        Side::Left => Side::Right,
        Side::Right => Side::Left,
    };
    let (mirror, _, _) = symmetric_run(config, &forward, other, smoothing, center, report)?;
    let hit_mirror = fraction(&mirror.landed, other);
    report.check(
        "mirror_selects_other_branch",
        hit_mirror,
        Relation::AtLeast,
        tol(config, s, "branch_fraction"),
    );

    // standard model: seeds over both lobes, each line keeps to its own side
    let standard = FieldInterpolator::standard(&forward)?;
    let seeds = stratified_seeds(&grid, &psi_i.density(), config.ensemble, w.t1);
    let lines = ensemble(&standard, &seeds, Mode::Time { t_end: w.t2 }, &TraceOptions::default());
    let mut agree = 0usize;
    let mut right = 0usize;
    let mut ok = 0usize;
    for (seed, line) in seeds.iter().zip(&lines) {
        if let Ok(line) = line {
            if let Some((_, x)) = line.last() {
                ok += 1;
                let end = side_of(x, center);
                if end == Side::Right {
                    right += 1;
                }
                if end == side_of(seed.x, center) {
                    agree += 1;
                }
            }
        }
    }
    let n = seeds.len() as f64;
    report.check(
        "standard_control_follows_seed",
        agree as f64 / n,
        Relation::AtLeast,
        tol(config, s, "seed_agreement"),
    );
    let split = (right as f64 / n).min((ok - right) as f64 / n);
    report.check_with(
        "standard_control_splits",
        split,
        Relation::AtLeast,
        tol(config, s, "split_fraction"),
        "smaller of the two branch fractions for standard-model lines".into(),
    );

    let dx = grid.spacing();
    let total: f64 = rho0.iter().map(|r| r.abs()).sum::<f64>() * dx;
    let off: f64 = grid
        .points()
        .zip(&rho0)
        .filter(|(x, _)| side_of(*x, center) != side)
        .map(|(_, r)| r.abs())
        .sum::<f64>()
        * dx;
    report.metric("branch_overlap", overlap);
    report.metric("selected_fraction", hit);
    report.metric("mirror_fraction", hit_mirror);
    report.metric("symmetric_failures", chosen.lines.iter().filter(|l| l.is_err()).count() as f64);
    report.metric("unselected_side_rho_mass", off / total);
    report.metric("standard_right_fraction", right as f64 / n);
    report.metric("final_state_lobes", lobes as f64);
    report.metric("outcome_weight", amplitude(backward.last(), forward.first())?.weight());

    if config.outputs.worldlines {
        report.artifact("symmetric_arrivals.csv", &arrivals_csv(&chosen.lines))?;
        report.artifact("mirror_arrivals.csv", &arrivals_csv(&mirror.lines))?;
        report.artifact("standard_arrivals.csv", &arrivals_csv(&lines))?;
        if let Some(Ok(line)) = chosen.lines.get(chosen.lines.len() / 2) {
            report.artifact("worldline_sample.csv", &line.to_csv())?;
        }
    }
    Ok(())
}
