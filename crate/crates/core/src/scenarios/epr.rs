//! Correlated pair emitted at t1; particle 1 is measured at an intermediate
//! time, particle 2 at t2. Particle 2 is guided by its own reduced state and
//! final wavefunction, so its field before the first measurement depends on
//! which observable is measured on particle 1.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::report::csv;
use super::{param, tol, BasisSpec, ReportBuilder, Relation, Scenario, ScenarioConfig};
use crate::error::{Error, Result};
use crate::field::{amplitude, amplitude_2d, gaussian_packet_at, Particle, TwoParticleField, WavefunctionField};
use crate::grid::Grid1D;
use crate::guidance::{configuration_velocity, many_body_velocity, reduce_final_on, reduce_unnormalized, symmetric_fields, GuidanceField};
use crate::propagate::{evolve_pair_window, evolve_window, EvolutionRecord, PairPotential};
use crate::statistics::{bin_density, joint_density, signed_histogram, total_variation, FinalBasis, SignedSample};

pub const SCENARIO: Scenario = Scenario {
    id: "epr-zigzag",
    summary: "entangled pair: conditional outcome statistics, and particle-2 fields before M1 that depend on the M1 observable",
    contract: &[
        "conditional_distribution_matches",
        "pre_measurement_fields_differ",
        "product_state_choice_independent",
        "control_depends_on_partner",
        "symmetric_arm_partner_independent",
    ],
    tolerances: &[
        ("total_variation", 0.02),
        ("difference", 1e-3),
        ("product", 1e-10),
        ("partner", 1e-3),
        ("factorization", 1e-10),
    ],
    params: &[
        ("m1_time", 1.0),
        ("pre_time", 0.5),
        ("samples", 1e5),
        ("bins", 16.0),
        ("outcomes", 3.0),
        ("m2_center", 2.0),
        ("m2_width", 0.8),
        ("density_floor", 1e-3),
    ],
    default: default_config,
    run,
};

fn default_config() -> serde_json::Value {
    json!({
        "scenario": "epr-zigzag",
        "seed": 7,
        "grid": {"points": 128, "length": 48.0},
        "window": {"t1": 0.0, "t2": 2.0, "dt": 0.01, "stride": 10},
        "initial": {"kind": "entangled-gaussian", "sigma_u": 0.5, "sigma_w": 2.0, "momentum": 1.0},
        "alternative": {"kind": "product",
            "first": {"kind": "gaussian", "center": 0.0, "momentum": -1.0, "width": 1.0},
            "second": {"kind": "gaussian", "center": 0.0, "momentum": 1.0, "width": 1.0}},
        "basis": {"kind": "position"},
        "alternative_basis": {"kind": "momentum"},
        "potential": {"kind": "free"}
    })
}

struct Setup<'a> {
    config: &'a ScenarioConfig,
    grid: Grid1D,
    t_m1: f64,
    t_pre: f64,
    floor: f64,
}

impl Setup<'_> {
    fn evolve(&self, psi: &WavefunctionField, to: f64) -> Result<WavefunctionField> {
        let w = &self.config.window;
        if crate::grid::same_time(psi.time(), to) {
            return Ok(psi.clone());
        }
        Ok(evolve_window(psi, &self.config.potential, psi.time(), to, w.dt, 1)?.last().clone())
    }

    fn slice<'r>(&self, rec: &'r EvolutionRecord<TwoParticleField>, t: f64) -> Result<&'r TwoParticleField> {
        rec.at_time(t)
            .ok_or_else(|| Error::Config(format!("t = {t} is not a stored snapshot time; adjust dt or stride")))
    }

    /// Particle-2 final state: a packet at the M2 outcome, carried back to `t`.
    fn final_two(&self, t: f64) -> Result<WavefunctionField> {
        let s = &SCENARIO;
        let w = &self.config.window;
        let f = gaussian_packet_at(
            &self.grid,
            param(self.config, s, "m2_center"),
            0.0,
            param(self.config, s, "m2_width"),
            w.t2,
        )?;
        self.evolve(&f, t)
    }

    /// Most probable M1 outcome of `basis` and its member at t_M1.
    fn likely_outcome(&self, basis: &FinalBasis, psi_m1: &TwoParticleField) -> Result<WavefunctionField> {
        let weights = outcome_weights(basis, psi_m1, self.t_m1)?;
        let k = (0..weights.len()).fold(0, |b, k| if weights[k] > weights[b] { k } else { b });
        Ok(basis.member(k, self.t_m1))
    }

    /// Particle-2 symmetric field at the pre-measurement time for one M1 outcome.
    fn pre_field(&self, rec: &EvolutionRecord<TwoParticleField>, outcome: &WavefunctionField) -> Result<GuidanceField> {
        let reduced = reduce_final_on(self.slice(rec, self.t_m1)?, Particle::First, outcome)?;
        let psi2 = self.evolve(&reduced, self.t_pre)?;
        let f2 = self.final_two(self.t_pre)?;
        let a = amplitude(&f2, &psi2)?;
        symmetric_fields(&psi2, &f2, &a)
    }
}

/// Probability of each M1 outcome: the squared norm of the contracted state.
fn outcome_weights(basis: &FinalBasis, psi: &TwoParticleField, t: f64) -> Result<Vec<f64>> {
    (0..basis.len())
        .map(|k| Ok(reduce_unnormalized(psi, Particle::First, &basis.member(k, t))?.norm_sq()))
        .collect()
}

fn draw(weights: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (k, w) in weights.iter().enumerate() {
        if u < *w {
            return k;
        }
        u -= w;
    }
    weights.len() - 1
}

/// Signed draws of (x, X) from the joint density of particle 2 at t_M1 over
/// its position outcomes X at t2; each sample carries the outcome X.
fn sample_outcomes(
    setup: &Setup,
    psi2: &WavefunctionField,
    n: usize,
    rng: &mut impl Rng,
) -> Result<(Vec<SignedSample>, f64)> {
    let g = setup.grid;
    let basis = FinalBasis::Position(g);
    let t2 = setup.config.window.t2;
    let mut cells = Vec::with_capacity(g.len() * g.len());
    for k in 0..g.len() {
        let kernel = setup.evolve(&basis.member(k, t2), setup.t_m1)?;
        cells.extend(joint_density(psi2, &kernel)?.into_iter().map(|r| (k, r)));
    }
    let dx = g.spacing();
    let mut cdf = Vec::with_capacity(cells.len());
    let mut acc = 0.0;
    for (_, r) in &cells {
        acc += r.abs();
        cdf.push(acc);
    }
    let magnitude = acc * dx;
    let samples = (0..n)
        .map(|_| {
            let u = rng.gen::<f64>() * acc;
            let c = cdf.partition_point(|&v| v <= u).min(cells.len() - 1);
            let (k, r) = cells[c];
            SignedSample {
                value: g.x(k),
                weight: r.signum() * magnitude / n as f64,
            }
        })
        .collect();
    Ok((samples, magnitude))
}

/// Largest spread of particle 2's configuration-space velocity across particle-1 positions.
fn partner_dependence(psi: &TwoParticleField, floor: f64) -> f64 {
    let v = configuration_velocity(psi, Particle::Second);
    let d = psi.density();
    let cut = floor * d.iter().copied().fold(0.0, f64::max);
    let (g1, g2) = psi.grids();
    let (n1, n2) = (g1.len(), g2.len());
    let mut worst: f64 = 0.0;
    for c in 0..n2 {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for r in 0..n1 {
            let k = r * n2 + c;
            if let (true, Some(val)) = (d[k] > cut, v[k]) {
                lo = lo.min(val);
                hi = hi.max(val);
            }
        }
        if hi >= lo {
            worst = worst.max(hi - lo);
        }
    }
    worst
}

fn run(config: &ScenarioConfig, report: &mut ReportBuilder) -> Result<()> {
    let s = &SCENARIO;
    let w = &config.window;
    let grid = config.grid.build()?;
    let setup = Setup {
        config,
        grid,
        t_m1: param(config, s, "m1_time"),
        t_pre: param(config, s, "pre_time"),
        floor: param(config, s, "density_floor"),
    };
    if !(w.t1 <= setup.t_pre && setup.t_pre < setup.t_m1 && setup.t_m1 < w.t2) {
        return Err(Error::Config("epr-zigzag needs t1 <= pre_time < m1_time < t2".into()));
    }
    let bins = param(config, s, "bins") as usize;
    let n_samples = param(config, s, "samples") as usize;
    let n_outcomes = param(config, s, "outcomes") as usize;
    if bins == 0 || grid.len() % bins != 0 || n_samples == 0 || n_outcomes == 0 {
        return Err(Error::Config("bins must divide the grid size; samples and outcomes must be positive".into()));
    }
    let basis_a = config.basis.clone().unwrap_or(BasisSpec::Position).build(&grid)?;
    let basis_b = config.alternative_basis.clone().unwrap_or(BasisSpec::Momentum).build(&grid)?;
    let pot = PairPotential {
        first: config.potential.clone(),
        second: config.potential.clone(),
    };

    let psi0 = config.initial.pair(&grid, w.t1)?;
    let rec = evolve_pair_window(&psi0, &pot, w.t1, w.t2, w.dt, w.stride)?;
    report.warn_all(&rec.warnings);
    let psi_m1 = setup.slice(&rec, setup.t_m1)?;
    let psi_m2 = setup.slice(&rec, w.t2)?;

    // (a) conditional outcome statistics of particle 2 for sampled M1 outcomes
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let weights = outcome_weights(&basis_a, psi_m1, setup.t_m1)?;
    let lo = grid.origin() - 0.5 * grid.spacing();
    let hi = lo + grid.period();
    let mut worst_tv: f64 = 0.0;
    let mut rows = Vec::new();
    let mut magnitudes = Vec::new();
    for _ in 0..n_outcomes {
        let k = draw(&weights, &mut rng);
        let outcome = basis_a.member(k, setup.t_m1);
        let psi2 = reduce_final_on(psi_m1, Particle::First, &outcome)?;
        let (samples, magnitude) = sample_outcomes(&setup, &psi2, n_samples, &mut rng)?;
        let hist = signed_histogram(&samples, lo, hi, bins);
        // oracle: the full pair evolved to t2, contracted with the M1 outcome carried to t2
        let carried = setup.evolve(&outcome, w.t2)?;
        let direct = reduce_final_on(psi_m2, Particle::First, &carried)?;
        let exact = bin_density(&grid, &direct.density(), lo, hi, bins);
        let tv = total_variation(&hist, &exact);
        worst_tv = worst_tv.max(tv);
        magnitudes.push(magnitude);
        for b in 0..bins {
            rows.push(vec![k as f64, lo + (b as f64 + 0.5) * (hi - lo) / bins as f64, hist[b], exact[b]]);
        }
    }
    report.check_with(
        "conditional_distribution_matches",
        worst_tv,
        Relation::Below,
        tol(config, s, "total_variation"),
        format!("worst total variation over {n_outcomes} sampled M1 outcomes, {n_samples} signed samples each"),
    );

    // (b) particle-2 fields before M1 under the two M1 observables
    let out_a = setup.likely_outcome(&basis_a, psi_m1)?;
    let out_b = setup.likely_outcome(&basis_b, psi_m1)?;
    let field_a = setup.pre_field(&rec, &out_a)?;
    let field_b = setup.pre_field(&rec, &out_b)?;
    let diff = field_a.max_velocity_difference(&field_b, setup.floor)?;
    report.check("pre_measurement_fields_differ", diff, Relation::Above, tol(config, s, "difference"));

    // (c) an uncorrelated pair carries no such dependence
    let product_spec = config
        .alternative
        .as_ref()
        .ok_or_else(|| Error::Config("epr-zigzag needs an 'alternative' product state".into()))?;
    let prod0 = product_spec.pair(&grid, w.t1)?;
    let prod = evolve_pair_window(&prod0, &pot, w.t1, w.t2, w.dt, w.stride)?;
    let prod_m1 = setup.slice(&prod, setup.t_m1)?;
    let pa = setup.pre_field(&prod, &setup.likely_outcome(&basis_a, prod_m1)?)?;
    let pb = setup.pre_field(&prod, &setup.likely_outcome(&basis_b, prod_m1)?)?;
    let prod_diff = pa.max_velocity_difference(&pb, setup.floor)?;
    report.check("product_state_choice_independent", prod_diff, Relation::Below, tol(config, s, "product"));

    // (d) standard control: particle 2's velocity depends on where particle 1 is
    let psi_pre = setup.slice(&rec, setup.t_pre)?;
    let spread = partner_dependence(psi_pre, setup.floor);
    report.check("control_depends_on_partner", spread, Relation::Above, tol(config, s, "partner"));

    // (e) symmetric arm: the two-particle field with a factorized final state
    // equals the reduced single-particle field, so it has no x1 argument at all
    let out_a_pre = setup.evolve(&out_a, setup.t_pre)?;
    let f2_pre = setup.final_two(setup.t_pre)?;
    let big_f = TwoParticleField::product(&out_a_pre, &f2_pre)?;
    let a2 = amplitude_2d(&big_f, psi_pre)?;
    let many = many_body_velocity(psi_pre, &big_f, &a2, Particle::Second)?;
    let fact = many.max_velocity_difference(&field_a, setup.floor)?;
    report.check(
        "symmetric_arm_partner_independent",
        fact,
        Relation::Below,
        tol(config, s, "factorization"),
    );

    report.metric("worst_total_variation", worst_tv);
    report.metric("joint_magnitude_max", magnitudes.iter().copied().fold(0.0, f64::max));
    report.metric("pre_velocity_difference", diff);
    report.metric("product_velocity_difference", prod_diff);
    report.metric("control_partner_spread", spread);
    report.metric("factorization_difference", fact);
    if config.outputs.fields {
        report.artifact(
            "conditional.csv",
            &csv(&["m1_outcome_index", "bin_center", "signed_histogram", "direct"], rows),
        )?;
        report.artifact("pre_field_basis.csv", &field_a.to_csv())?;
        report.artifact("pre_field_alternative_basis.csv", &field_b.to_csv())?;
    }
    Ok(())
}
