//! Property tests for the type invariants.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use symbohm::field::{amplitude, gaussian_packet_at, WavefunctionField};
use symbohm::grid::Grid1D;
use symbohm::guidance::{bohm_velocity, symmetric_fields, GuidanceField, Model};
use symbohm::propagate::{evolve_window, Potential};
use symbohm::scenarios::{self, canonical_hash};
use symbohm::statistics::{draw_signed_samples, FinalBasis};
use symbohm::trajectory::{integrate_lambda_param, integrate_time_param, FieldInterpolator, TraceOptions};

fn grid() -> Grid1D {
    Grid1D::centered(256, 40.0, 0.0).unwrap()
}

/// A packet comfortably inside the 40-wide grid at every time of a unit window.
fn packet() -> impl Strategy<Value = (f64, f64, f64)> {
    (-3.0..3.0f64, -1.5..1.5f64, 0.8..2.0f64)
}

fn potential() -> impl Strategy<Value = Potential> {
    prop_oneof![Just(Potential::Free), (0.2..0.8f64).prop_map(|omega| Potential::Harmonic { omega, center: 0.0 })]
}

fn gaussian(g: &Grid1D, (c, p, w): (f64, f64, f64), t: f64) -> WavefunctionField {
    gaussian_packet_at(g, c, p, w, t).unwrap()
}

fn check_current_relation(f: &GuidanceField) -> Result<(), TestCaseError> {
    let scale = f.current.iter().fold(0.0f64, |m, j| m.max(j.abs())).max(1e-300);
    for k in 0..f.density.len() {
        match f.velocity[k] {
            Some(v) => {
                prop_assert!(f.density[k].abs() >= f.threshold);
                prop_assert!((f.current[k] - f.density[k] * v).abs() <= 1e-10 * scale.max(1.0));
            }
            None => prop_assert!(f.density[k].abs() < f.threshold),
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn grid_covers_its_span(k in 2u32..13, length in 1.0..500.0f64, center in -50.0..50.0f64) {
        let n = 1usize << k;
        let g = Grid1D::centered(n, length, center).unwrap();
        prop_assert_eq!(g.len(), n);
        prop_assert!(g.spacing() > 0.0);
        prop_assert!((g.end() - (g.origin() + (n - 1) as f64 * g.spacing())).abs() < 1e-9 * length);
        prop_assert!((g.x(n - 1) - g.end()).abs() < 1e-9 * length);
    }

    #[test]
    fn grid_rejects_non_powers_of_two(n in 3usize..5000) {
        prop_assume!(!n.is_power_of_two());
        prop_assert!(Grid1D::centered(n, 10.0, 0.0).is_err());
    }

    #[test]
    fn packets_are_normalized_and_finite(p in packet()) {
        let psi = gaussian(&grid(), p, 0.0);
        prop_assert!((psi.norm_sq() - 1.0).abs() < 1e-10);
        prop_assert!(psi.values().iter().all(|z| z.re.is_finite() && z.im.is_finite()));
    }

    #[test]
    fn amplitude_is_bounded_by_one(a in packet(), b in packet()) {
        let g = grid();
        let (pa, pb) = (gaussian(&g, a, 0.0), gaussian(&g, b, 0.0));
        if let Ok(amp) = amplitude(&pa, &pb) {
            prop_assert!(amp.magnitude() <= 1.0 + 1e-12);
        }
        let own = amplitude(&pa, &pa).unwrap();
        prop_assert!((own.magnitude() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn potentials_are_real_and_finite(v in potential(), x in -100.0..100.0f64, t in -10.0..10.0f64) {
        prop_assert!(v.value(x, t).is_finite());
    }

    #[test]
    fn records_are_uniform_and_span_the_window(
        p in packet(), v in potential(), t1 in -1.0..1.0f64, snaps in 4usize..20, stride in 1usize..8, backward in any::<bool>(),
    ) {
        let g = grid();
        let span = (snaps * stride) as f64 * 0.01;
        let (start, end) = if backward { (t1 + span, t1) } else { (t1, t1 + span) };
        let rec = evolve_window(&gaussian(&g, p, start), &v, start, end, 0.01, stride).unwrap();
        let times = rec.times();
        prop_assert!((times[0] - start).abs() < 1e-12);
        prop_assert!((times[times.len() - 1] - end).abs() < 1e-12);
        let h = times[1] - times[0];
        for w in times.windows(2) {
            prop_assert!(((w[1] - w[0]) - h).abs() < 1e-9);
        }
        for s in &rec.snapshots {
            prop_assert!((s.norm_sq() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn amplitude_is_conserved_under_joint_evolution(a in packet(), b in packet(), v in potential()) {
        let g = grid();
        let fwd = evolve_window(&gaussian(&g, a, 0.0), &v, 0.0, 1.0, 0.01, 10).unwrap();
        let bwd = evolve_window(&gaussian(&g, b, 1.0), &v, 1.0, 0.0, 0.01, 10).unwrap();
        let n = fwd.len();
        let first = symbohm::field::inner_product(&bwd.snapshots[n - 1], &fwd.snapshots[0]).unwrap();
        prop_assume!(first.norm() > 1e-6);
        for k in 0..n {
            let z = symbohm::field::inner_product(&bwd.snapshots[n - 1 - k], &fwd.snapshots[k]).unwrap();
            prop_assert!((z - first).norm() <= 1e-10 * first.norm().max(1e-3));
        }
    }

    #[test]
    fn standard_fields_are_nonnegative_and_consistent(p in packet()) {
        let f = bohm_velocity(&gaussian(&grid(), p, 0.0));
        prop_assert_eq!(f.model, Model::Standard);
        prop_assert!(f.density.iter().all(|&r| r >= 0.0));
        check_current_relation(&f)?;
    }

    #[test]
    fn symmetric_fields_are_consistent_and_integrate_to_one(a in packet(), b in packet()) {
        let g = grid();
        let (pi, pf) = (gaussian(&g, a, 0.0), gaussian(&g, b, 0.0));
        let Ok(amp) = amplitude(&pf, &pi) else { return Ok(()) };
        let f = symmetric_fields(&pi, &pf, &amp).unwrap();
        prop_assert_eq!(f.model, Model::Symmetric);
        prop_assert!((f.total() - 1.0).abs() < 1e-10);
        check_current_relation(&f)?;
    }

    #[test]
    fn identical_pair_reduces_to_standard(p in packet()) {
        let psi = gaussian(&grid(), p, 0.0);
        let amp = amplitude(&psi, &psi).unwrap();
        let sym = symmetric_fields(&psi, &psi, &amp).unwrap();
        let std = bohm_velocity(&psi);
        for k in 0..sym.density.len() {
            prop_assert!((sym.density[k] - std.density[k]).abs() < 1e-12);
            if let (Some(a), Some(b)) = (sym.velocity[k], std.velocity[k]) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn oscillator_bases_are_orthonormal(n in 1usize..24, omega in 0.5..2.0f64) {
        let basis = FinalBasis::harmonic(&grid(), n, omega, 0.0).unwrap();
        prop_assert!(basis.gram_defect().unwrap() < 1e-8);
    }

    #[test]
    fn positive_density_sample_weights_sum_to_one(p in packet(), seed in any::<u64>(), n in 10usize..2000) {
        let g = grid();
        let rho = gaussian(&g, p, 0.0).density();
        let samples = draw_signed_samples(&g, &rho, n, &mut ChaCha8Rng::seed_from_u64(seed));
        let total: f64 = samples.iter().map(|s| s.weight).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn signed_sample_weights_sum_to_integral(a in packet(), b in packet(), seed in any::<u64>()) {
        let g = grid();
        let (pi, pf) = (gaussian(&g, a, 0.0), gaussian(&g, b, 0.0));
        let Ok(amp) = amplitude(&pf, &pi) else { return Ok(()) };
        let f = symmetric_fields(&pi, &pf, &amp).unwrap();
        let n = 20_000;
        let samples = draw_signed_samples(&g, &f.density, n, &mut ChaCha8Rng::seed_from_u64(seed));
        let abs_mass: f64 = f.density.iter().map(|r| r.abs()).sum::<f64>() * g.spacing();
        let total: f64 = samples.iter().map(|s| s.weight).sum();
        // Each weight is +-abs_mass/n, so the sum has standard deviation at most abs_mass/sqrt(n).
        prop_assert!((total - 1.0).abs() < 6.0 * abs_mass / (n as f64).sqrt());
    }

    #[test]
    fn config_hash_ignores_key_order(keys in proptest::collection::btree_map("[a-z]{1,6}", -1e6..1e6f64, 1..8)) {
        let pairs: Vec<String> = keys.iter().map(|(k, v)| format!("\"{k}\": {v:e}")).collect();
        let forward = format!("{{{}}}", pairs.join(", "));
        let reversed = format!("{{{}}}", pairs.iter().rev().cloned().collect::<Vec<_>>().join(", "));
        let a: serde_json::Value = serde_json::from_str(&forward).unwrap();
        let b: serde_json::Value = serde_json::from_str(&reversed).unwrap();
        prop_assert_eq!(canonical_hash(&a), canonical_hash(&b));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn standard_world_lines_advance_in_time_and_never_cross(p in packet(), v in potential(), u in 0.05..0.45f64, gap in 0.1..1.0f64) {
        let g = grid();
        let (c, _, w) = p;
        let rec = evolve_window(&gaussian(&g, p, 0.0), &v, 0.0, 1.0, 0.01, 5).unwrap();
        let interp = FieldInterpolator::standard(&rec).unwrap();
        let opts = TraceOptions::default();
        let x0 = c - w + 2.0 * w * u;
        let lo = integrate_time_param(&interp, x0, 0.0, 1.0, &opts).unwrap();
        let hi = integrate_time_param(&interp, x0 + gap * w, 0.0, 1.0, &opts).unwrap();
        for line in [&lo, &hi] {
            prop_assert!(line.turning_points.is_empty());
            prop_assert!(line.points.windows(2).all(|s| s[1].0 > s[0].0));
            prop_assert!(line.lambda.windows(2).all(|s| s[1] > s[0]));
            prop_assert!(line.tau.windows(2).all(|s| s[1] >= s[0]));
        }
        for &(t, x) in &lo.points {
            if let Some(&upper) = hi.slice_positions(t).first() {
                prop_assert!(upper > x, "crossed at t = {t}");
            }
        }
    }

    #[test]
    fn lambda_curves_are_regular(a in packet(), b in packet(), s in 0.2..0.8f64) {
        let g = grid();
        let fwd = evolve_window(&gaussian(&g, a, 0.0), &Potential::Free, 0.0, 1.0, 0.01, 2).unwrap();
        let bwd = evolve_window(&gaussian(&g, b, 1.0), &Potential::Free, 1.0, 0.0, 0.01, 2).unwrap();
        let Ok(amp) = amplitude(&bwd.snapshots[0], &fwd.snapshots[fwd.len() - 1]) else { return Ok(()) };
        let interp = FieldInterpolator::symmetric(&fwd, &bwd, &amp).unwrap();
        let x0 = a.0 - a.2 + 2.0 * a.2 * s;
        let Ok(line) = integrate_lambda_param(&interp, (0.5, x0), &TraceOptions::default()) else { return Ok(()) };
        prop_assert!(line.lambda.windows(2).all(|s| s[1] > s[0]));
        prop_assert!(line.tau.iter().all(|t| t.is_finite()));
        prop_assert!(line.tau.windows(2).all(|s| s[1] >= s[0]));
        let step = g.spacing();
        for seg in line.points.windows(2) {
            prop_assert!((seg[1].0 - seg[0].0).hypot(seg[1].1 - seg[0].1) <= step + 1e-12);
        }
        for &i in &line.turning_points {
            let before = line.points[i].0 - line.points[i.saturating_sub(1)].0;
            let after = line.points[(i + 2).min(line.points.len() - 1)].0 - line.points[i + 1].0;
            prop_assert!(before * after <= 0.0, "no reversal of t at turning index {i}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn reports_list_each_contract_assertion_once(seed in any::<u64>()) {
        let mut config = scenarios::default_config("measurement-limit").unwrap();
        config.seed = seed;
        let report = scenarios::run(&config, None).unwrap();
        let contract = scenarios::find("measurement-limit").unwrap().contract;
        prop_assert_eq!(report.assertions.len(), contract.len());
        for name in contract {
            prop_assert_eq!(report.assertions.iter().filter(|a| a.name == *name).count(), 1);
        }
    }
}
