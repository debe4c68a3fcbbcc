//! Invariant suites: exact identities of the two-wavefunction model checked
//! numerically on small reference runs, plus the canned scenarios.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{
    amplitude, amplitude_2d, gaussian_packet_at, hermite_function, inner_product, superpose, Particle, TwoParticleField,
    WavefunctionField,
};
use crate::grid::Grid1D;
use crate::guidance::{
    bohm_velocity, continuity_residual, many_body_density, many_body_velocity, paired_snapshots, reduce_final_on,
    symmetric_fields,
};
use crate::propagate::{evolve_pair_window, evolve_window, PairPotential, Potential};
use crate::scenarios::{self, canonical_hash, Assertion, Relation, ScenarioReport, StateSpec};
use crate::statistics::{appendix_marginal_recovery, appendix_product_density, marginal_position, FinalBasis};
use crate::trajectory::{integrate_time_param, stratified_seeds, FieldInterpolator, TraceOptions};
use crate::C64;

pub const SUITES: &[&str] = &[
    "conservation",
    "continuity",
    "reduction",
    "marginal",
    "appendix",
    "many-body",
    "scenarios",
    "full",
];

/// Suites that `full` runs, in order.
const PARTS: &[&str] = &["conservation", "continuity", "reduction", "marginal", "appendix", "many-body", "scenarios"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConservationSpec {
    pub points: usize,
    pub length: f64,
    pub steps: usize,
    pub dt: f64,
    pub stride: usize,
    pub omega: f64,
    pub tolerance: f64,
}

impl Default for ConservationSpec {
    fn default() -> Self {
        Self {
            points: 2048,
            length: 160.0,
            steps: 2000,
            dt: 0.005,
            stride: 50,
            omega: 0.5,
            tolerance: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuitySpec {
    pub points: usize,
    pub length: f64,
    pub span: f64,
    /// Coarse step; the comparison run uses half of it.
    pub dt: f64,
    pub pairs: usize,
    pub min_ratio: f64,
}

impl Default for ContinuitySpec {
    fn default() -> Self {
        Self {
            points: 512,
            length: 40.0,
            span: 2.0,
            dt: 0.02,
            pairs: 3,
            min_ratio: 3.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReductionSpec {
    pub points: usize,
    pub length: f64,
    pub t2: f64,
    pub dt: f64,
    pub stride: usize,
    pub omega: f64,
    pub seeds: usize,
    pub density_tol: f64,
    pub velocity_tol: f64,
    pub trajectory_tol: f64,
    /// Relative density below which the propagated round trip is not compared.
    pub round_trip_floor: f64,
}

impl Default for ReductionSpec {
    fn default() -> Self {
        Self {
            points: 512,
            length: 40.0,
            t2: 2.0,
            dt: 0.005,
            stride: 2,
            omega: 0.3,
            seeds: 16,
            density_tol: 1e-12,
            velocity_tol: 1e-10,
            trajectory_tol: 1e-8,
            round_trip_floor: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarginalSpec {
    pub points: usize,
    pub length: f64,
    pub states: usize,
    pub omega: f64,
    pub position_tol: f64,
    pub truncated_tol: f64,
}

impl Default for MarginalSpec {
    fn default() -> Self {
        Self {
            points: 256,
            length: 30.0,
            states: 32,
            omega: 1.0,
            position_tol: 1e-10,
            truncated_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppendixSpec {
    pub points: usize,
    pub length: f64,
    pub t2: f64,
    pub dt: f64,
    pub outcome: [f64; 2],
    pub width: f64,
    pub concentration: f64,
    pub recovery_tol: f64,
    pub correlation_tol: f64,
}

impl Default for AppendixSpec {
    fn default() -> Self {
        Self {
            points: 64,
            length: 25.6,
            t2: 1.0,
            dt: 0.01,
            outcome: [1.0, -1.0],
            width: 0.9,
            concentration: 0.99,
            recovery_tol: 1e-8,
            correlation_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManyBodySpec {
    pub points: usize,
    pub length: f64,
    pub density_floor: f64,
    pub tolerance: f64,
}

impl Default for ManyBodySpec {
    fn default() -> Self {
        Self {
            points: 128,
            length: 24.0,
            density_floor: 1e-3,
            tolerance: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSuiteSpec {
    /// Ids to run; empty means every registered scenario.
    pub only: Vec<String>,
    /// Run each scenario twice and compare the report bytes.
    pub repeat: bool,
}

impl Default for ScenarioSuiteSpec {
    fn default() -> Self {
        Self {
            only: Vec::new(),
            repeat: true,
        }
    }
}

/// Parameters of every suite; overridable by dotted path.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub seed: u64,
    pub conservation: ConservationSpec,
    pub continuity: ContinuitySpec,
    pub reduction: ReductionSpec,
    pub marginal: MarginalSpec,
    pub appendix: AppendixSpec,
    pub many_body: ManyBodySpec,
    pub scenarios: ScenarioSuiteSpec,
}

impl VerifyConfig {
    pub fn hash(&self) -> String {
        canonical_hash(&serde_json::to_value(self).expect("config serializes"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub config_hash: String,
    pub passed: bool,
    pub checks: Vec<Assertion>,
    pub scenarios: Vec<ScenarioReport>,
    pub warnings: Vec<String>,
}

impl SuiteReport {
    pub fn failures(&self) -> Vec<&Assertion> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn check(&self, name: &str) -> Option<&Assertion> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

struct Checks {
    suite: &'static str,
    list: Vec<Assertion>,
    warnings: Vec<String>,
}

impl Checks {
    fn add(&mut self, name: &str, value: f64, relation: Relation, threshold: f64, detail: impl Into<String>) {
        let passed = !value.is_nan() && relation.holds(value, threshold);
        self.list.push(Assertion {
            name: format!("{}/{name}", self.suite),
            passed,
            value,
            relation,
            threshold,
            detail: detail.into(),
        });
    }

    fn warn_all<'a>(&mut self, w: impl IntoIterator<Item = &'a String>) {
        for m in w {
            if !self.warnings.contains(m) {
                self.warnings.push(m.clone());
            }
        }
    }
}

/// Runs one suite (or `full`). Artifacts and `verify_report.json` go to `out` when given.
pub fn run_suite(suite: &str, config: &VerifyConfig, out: Option<&Path>) -> Result<SuiteReport> {
    let parts: Vec<&'static str> = match suite {
        "full" => PARTS.to_vec(),
        s => match SUITES.iter().find(|k| **k == s && **k != "full") {
            Some(k) => vec![*k],
            None => return Err(Error::Config(format!("unknown suite '{suite}' (known: {})", SUITES.join(", ")))),
        },
    };
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
    }
    let mut checks = Vec::new();
    let mut warnings = Vec::new();
    let mut reports = Vec::new();
    for part in parts {
        let mut c = Checks {
            suite: part,
            list: Vec::new(),
            warnings: Vec::new(),
        };
        match part {
            "conservation" => conservation(&config.conservation, &mut c)?,
            "continuity" => continuity(&config.continuity, config.seed, &mut c)?,
            "reduction" => reduction(&config.reduction, &mut c)?,
            "marginal" => marginal(&config.marginal, &mut c)?,
            "appendix" => appendix(&config.appendix, &mut c)?,
            "many-body" => many_body(&config.many_body, &mut c)?,
            "scenarios" => reports = scenario_suite(&config.scenarios, out, &mut c)?,
            _ => unreachable!("suite list is closed"),
        }
        log::info!("suite {part}: {} checks", c.list.len());
        checks.append(&mut c.list);
        warnings.append(&mut c.warnings);
    }
    let report = SuiteReport {
        suite: suite.to_string(),
        seed: config.seed,
        config_hash: config.hash(),
        passed: checks.iter().all(|c| c.passed),
        checks,
        scenarios: reports,
        warnings,
    };
    if let Some(dir) = out {
        fs::write(dir.join("verify_report.json"), report.to_json())?;
    }
    Ok(report)
}

fn relative_drift(fwd: &crate::propagate::EvolutionRecord, bwd: &crate::propagate::EvolutionRecord) -> Result<f64> {
    let pairs = paired_snapshots(fwd, bwd)?;
    let a0 = inner_product(pairs[0].1, pairs[0].0)?;
    let mut worst: f64 = 0.0;
    for (fi, ff) in pairs {
        worst = worst.max((inner_product(ff, fi)? - a0).norm() / a0.norm());
    }
    Ok(worst)
}

fn conservation(s: &ConservationSpec, c: &mut Checks) -> Result<()> {
    let grid = Grid1D::centered(s.points, s.length, 0.0)?;
    let t2 = s.steps as f64 * s.dt;
    let cases = [
        ("free", Potential::Free, (-3.0, 1.0, 1.2), (2.0, -0.5, 1.5)),
        ("harmonic", Potential::Harmonic { omega: s.omega, center: 0.0 }, (-2.0, 0.5, 1.0), (1.0, 0.0, 0.8)),
    ];
    for (name, pot, (ci, pi, wi), (cf, pf, wf)) in cases {
        let psi_i = gaussian_packet_at(&grid, ci, pi, wi, 0.0)?;
        let psi_f = gaussian_packet_at(&grid, cf, pf, wf, t2)?;
        let fwd = evolve_window(&psi_i, &pot, 0.0, t2, s.dt, s.stride)?;
        let bwd = evolve_window(&psi_f, &pot, t2, 0.0, s.dt, s.stride)?;
        c.warn_all(fwd.warnings.iter().chain(&bwd.warnings));
        let drift = relative_drift(&fwd, &bwd)?;
        c.add(
            &format!("{name}_amplitude_drift"),
            drift,
            Relation::Below,
            s.tolerance,
            format!("{} steps of {} over {} slices", s.steps, s.dt, fwd.len()),
        );
    }
    Ok(())
}

fn continuity(s: &ContinuitySpec, seed: u64, c: &mut Checks) -> Result<()> {
    let grid = Grid1D::centered(s.points, s.length, 0.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let residual = |psi_i: &WavefunctionField, psi_f: &WavefunctionField, pot: &Potential, dt: f64| -> Result<f64> {
        let fwd = evolve_window(psi_i, pot, 0.0, s.span, dt, 1)?;
        let bwd = evolve_window(psi_f, pot, s.span, 0.0, dt, 1)?;
        let a = amplitude(bwd.last(), fwd.first())?;
        Ok(continuity_residual(&fwd, &bwd, &a)?.overall())
    };
    for k in 0..s.pairs {
        let pot = Potential::Harmonic {
            omega: rng.gen_range(0.3..0.7),
            center: 0.0,
        };
        let mut draw = |t: f64| {
            let (x, p, w) = (rng.gen_range(-3.0..3.0), rng.gen_range(-1.5..1.5), rng.gen_range(0.8..1.5));
            gaussian_packet_at(&grid, x, p, w, t)
        };
        let psi_i = draw(0.0)?;
        let psi_f = draw(s.span)?;
        let coarse = residual(&psi_i, &psi_f, &pot, s.dt)?;
        let fine = residual(&psi_i, &psi_f, &pot, s.dt / 2.0)?;
        c.add(
            &format!("pair_{k}_order_ratio"),
            coarse / fine,
            Relation::AtLeast,
            s.min_ratio,
            format!("residual {coarse:e} at dt = {}, {fine:e} at dt = {}", s.dt, s.dt / 2.0),
        );
    }
    Ok(())
}

fn reduction(s: &ReductionSpec, c: &mut Checks) -> Result<()> {
    let grid = Grid1D::centered(s.points, s.length, 0.0)?;
    let pot = Potential::Harmonic { omega: s.omega, center: 0.0 };
    let a = gaussian_packet_at(&grid, -2.0, 1.0, 1.0, 0.0)?;
    let b = gaussian_packet_at(&grid, 2.5, -0.5, 1.2, 0.0)?;
    let psi_i = superpose(&[(C64::new(1.0, 0.0), &a), (C64::new(0.0, 0.6), &b)])?.normalized()?;
    let fwd = evolve_window(&psi_i, &pot, 0.0, s.t2, s.dt, s.stride)?;
    let bwd = evolve_window(fwd.last(), &pot, s.t2, 0.0, s.dt, s.stride)?;
    c.warn_all(fwd.warnings.iter().chain(&bwd.warnings));
    let amp = amplitude(bwd.last(), fwd.first())?;
    let mut density_gap: f64 = 0.0;
    let mut velocity_gap: f64 = 0.0;
    let mut round_trip_gap: f64 = 0.0;
    for (fi, ff) in paired_snapshots(&fwd, &bwd)? {
        let std = bohm_velocity(fi);
        // the same wavefunction in both slots
        let same = symmetric_fields(fi, fi, &amplitude(fi, fi)?)?;
        velocity_gap = velocity_gap.max(same.max_velocity_difference(&std, 0.0)?);
        // psi_i(T) carried back to this slice
        let sym = symmetric_fields(fi, ff, &amp)?;
        for (x, y) in sym.density.iter().zip(&std.density) {
            density_gap = density_gap.max((x - y).abs());
        }
        round_trip_gap = round_trip_gap.max(sym.max_velocity_difference(&std, s.round_trip_floor)?);
    }
    c.add(
        "density_matches",
        density_gap,
        Relation::Below,
        s.density_tol,
        "largest |rho_sym - |psi_i|^2| over all slices, psi_f carried back from T",
    );
    c.add(
        "velocity_matches",
        velocity_gap,
        Relation::Below,
        s.velocity_tol,
        "psi_f identical to psi_i on every slice; every point where both velocities are defined",
    );
    c.add(
        "round_trip_velocity_matches",
        round_trip_gap,
        Relation::Below,
        s.velocity_tol,
        format!("psi_f carried back from T; points above {} of the peak density", s.round_trip_floor),
    );

    let sym = FieldInterpolator::symmetric(&fwd, &bwd, &amp)?;
    let std = FieldInterpolator::standard(&fwd)?;
    let seeds = stratified_seeds(&grid, &psi_i.density(), s.seeds, 0.0);
    let opts = TraceOptions::default();
    let mut gap: f64 = 0.0;
    for seed in &seeds {
        let l1 = integrate_time_param(&sym, seed.x, 0.0, s.t2, &opts)?;
        let l2 = integrate_time_param(&std, seed.x, 0.0, s.t2, &opts)?;
        let (e1, e2) = (l1.last().unwrap_or_default(), l2.last().unwrap_or_default());
        gap = gap.max((e1.1 - e2.1).abs());
        if l1.len() == l2.len() {
            for (p, q) in l1.points.iter().zip(&l2.points) {
                gap = gap.max((p.1 - q.1).abs());
            }
        }
    }
    c.add(
        "trajectories_coincide",
        gap,
        Relation::Below,
        s.trajectory_tol,
        format!("largest position difference over {} seeds", seeds.len()),
    );
    Ok(())
}

fn marginal(s: &MarginalSpec, c: &mut Checks) -> Result<()> {
    let grid = Grid1D::centered(s.points, s.length, 0.0)?;
    let a = gaussian_packet_at(&grid, -2.0, 1.5, 0.9, 0.0)?;
    let b = gaussian_packet_at(&grid, 3.0, -1.0, 1.4, 0.0)?;
    let psi = superpose(&[(C64::new(0.8, 0.0), &a), (C64::new(0.3, -0.5), &b)])?.normalized()?;
    let m = marginal_position(&psi, &FinalBasis::Position(grid))?;
    c.add("position_basis_l1", m.l1_error, Relation::Below, s.position_tol, "");
    let scale = psi.density().iter().copied().fold(0.0, f64::max);
    c.add(
        "position_basis_nonnegative",
        m.min_value / scale,
        Relation::AtLeast,
        -1e-12,
        "smallest recovered value relative to the peak",
    );

    // psi_i inside the span of the first five oscillator states
    let coeffs = [C64::new(0.6, 0.0), C64::new(0.2, 0.4), C64::new(-0.3, 0.1), C64::new(0.0, 0.25), C64::new(0.15, -0.2)];
    let states: Vec<WavefunctionField> =
        (0..coeffs.len()).map(|n| hermite_function(&grid, n, s.omega, 0.0)).collect::<Result<_>>()?;
    let terms: Vec<(C64, &WavefunctionField)> = coeffs.iter().copied().zip(&states).collect();
    let psi = superpose(&terms)?.normalized()?;
    let basis = FinalBasis::harmonic(&grid, s.states, s.omega, 0.0)?;
    let m = marginal_position(&psi, &basis)?;
    c.warn_all(&m.warnings);
    c.add(
        "truncated_basis_l1",
        m.l1_error,
        Relation::Below,
        s.truncated_tol,
        format!("{} oscillator states", s.states),
    );
    Ok(())
}

fn appendix(s: &AppendixSpec, c: &mut Checks) -> Result<()> {
    let grid = Grid1D::centered(s.points, s.length, 0.0)?;
    let spec = StateSpec::EntangledGaussian {
        sigma_u: 0.7,
        sigma_w: 1.2,
        momentum: 0.5,
    };
    let psi0 = spec.pair(&grid, 0.0)?;
    let pot = PairPotential::free();
    let fwd = evolve_pair_window(&psi0, &pot, 0.0, s.t2, s.dt, 1)?;
    c.warn_all(&fwd.warnings);
    let [x1, x2] = s.outcome;
    let f1 = gaussian_packet_at(&grid, x1, 0.0, s.width, s.t2)?;
    let f2 = gaussian_packet_at(&grid, x2, 0.0, s.width, s.t2)?;
    let psi_f = TwoParticleField::product(&f1, &f2)?;
    let psi_t = fwd.last();
    let a = amplitude_2d(&psi_f, psi_t)?;
    let rho = appendix_product_density(psi_t, &psi_f, &a)?;
    let radius = 5.0 * s.width;
    let n = grid.len();
    let (mut inside, mut total) = (0.0, 0.0);
    for (k, r) in rho.iter().enumerate() {
        let (y1, y2) = (grid.x(k / n), grid.x(k % n));
        total += r.abs();
        if (y1 - x1).abs() <= radius && (y2 - x2).abs() <= radius {
            inside += r.abs();
        }
    }
    c.add(
        "product_density_concentrates",
        inside / total,
        Relation::AtLeast,
        s.concentration,
        format!("share of the |rho_1 rho_2| mass within {radius} of ({x1}, {x2}) at T"),
    );

    let rec = appendix_marginal_recovery(&psi0)?;
    c.add("outcome_sum_recovers_density", rec.l1_error, Relation::Below, s.recovery_tol, format!("{} position outcomes", rec.outcomes));
    c.add(
        "correlation_matches",
        (rec.correlation - rec.direct_correlation).abs(),
        Relation::Below,
        s.correlation_tol,
        format!("recovered {:.9}, direct {:.9}", rec.correlation, rec.direct_correlation),
    );
    Ok(())
}

fn many_body(s: &ManyBodySpec, c: &mut Checks) -> Result<()> {
    let grid = Grid1D::centered(s.points, s.length, 0.0)?;
    let psi = StateSpec::EntangledGaussian {
        sigma_u: 0.7,
        sigma_w: 2.0,
        momentum: 1.0,
    }
    .pair(&grid, 0.0)?;
    let phi1 = gaussian_packet_at(&grid, 1.0, -0.5, 1.0, 0.0)?;
    let phi2 = gaussian_packet_at(&grid, -0.5, 0.8, 1.3, 0.0)?;
    let psi_f = TwoParticleField::product(&phi1, &phi2)?;
    let a = amplitude_2d(&psi_f, &psi)?;

    // particle 2 with a factorized final state: the full expression against
    // reduce-then-guide
    let full = many_body_velocity(&psi, &psi_f, &a, Particle::Second)?;
    let reduced = reduce_final_on(&psi, Particle::First, &phi1)?;
    let single = symmetric_fields(&reduced, &phi2, &amplitude(&phi2, &reduced)?)?;
    let scale = single.density.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let gap = full.density.iter().zip(&single.density).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale;
    let vgap = full.max_velocity_difference(&single, s.density_floor)?;
    c.add("factorized_density_matches", gap, Relation::Below, s.tolerance, "relative to the peak density");
    c.add(
        "factorized_velocity_matches",
        vgap,
        Relation::Below,
        s.tolerance,
        format!("where |rho| exceeds {} of its peak", s.density_floor),
    );

    // particle 1 with its own final wavefunction: the marginal density against
    // Re[phi1^* psi_i^(1) / a1] built from the partner's contraction
    let marginal = many_body_density(&psi, &psi_f, &a, Particle::First)?;
    let own = reduce_final_on(&psi, Particle::Second, &phi2)?;
    let a1 = amplitude(&phi1, &own)?;
    let direct = symmetric_fields(&own, &phi1, &a1)?.density;
    let scale = direct.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let gap = marginal.iter().zip(&direct).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale;
    c.add("separable_final_density_matches", gap, Relation::Below, s.tolerance, "relative to the peak density");
    Ok(())
}

fn scenario_suite(s: &ScenarioSuiteSpec, out: Option<&Path>, c: &mut Checks) -> Result<Vec<ScenarioReport>> {
    let ids: Vec<String> = if s.only.is_empty() {
        scenarios::ids().iter().map(|s| s.to_string()).collect()
    } else {
        s.only.clone()
    };
    let mut reports = Vec::new();
    for id in ids {
        let config = scenarios::default_config(&id)?;
        let dir = out.map(|o| o.join("scenarios").join(&id));
        let report = scenarios::run(&config, dir.as_deref())?;
        for a in &report.assertions {
            c.list.push(Assertion {
                name: format!("{}/{id}/{}", c.suite, a.name),
                ..a.clone()
            });
        }
        c.warn_all(&report.warnings);
        if s.repeat {
            let (same, what) = repeat_matches(&config, &report, dir.as_deref())?;
            c.add(
                &format!("{id}/report_reproducible"),
                f64::from(u8::from(same)),
                Relation::AtLeast,
                1.0,
                what,
            );
        }
        reports.push(report);
    }
    Ok(reports)
}

/// Reruns a scenario and compares the report, plus every artifact when the
/// first run wrote any.
fn repeat_matches(config: &scenarios::ScenarioConfig, first: &ScenarioReport, dir: Option<&Path>) -> Result<(bool, String)> {
    let Some(dir) = dir else {
        let again = scenarios::run(config, None)?;
        return Ok((again.to_json() == first.to_json(), "second run gives a byte-identical report".into()));
    };
    let scratch = std::env::temp_dir().join(format!("symbohm-repeat-{}-{}", std::process::id(), first.scenario));
    let again = scenarios::run(config, Some(&scratch));
    let outcome = again.and_then(|again| {
        let mut same = again.to_json() == first.to_json();
        for name in first.artifacts.iter().map(String::as_str).chain(["report.json"]) {
            same &= fs::read(dir.join(name))? == fs::read(scratch.join(name))?;
        }
        Ok(same)
    });
    let _ = fs::remove_dir_all(&scratch);
    Ok((outcome?, format!("second run reproduces report.json and {} artifacts byte for byte", first.artifacts.len())))
}
