//! Outcome weights, signed joint densities and their marginals, and
//! estimators over signed samples.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{inner_product, Amplitude, Particle, TwoParticleField, WavefunctionField};
use crate::grid::Grid1D;
use crate::guidance::many_body_density;
use crate::C64;

/// Gram-matrix tolerance for explicit bases.
pub const ORTHONORMAL_TOL: f64 = 1e-8;
/// Missing-projection norm above which a marginal carries an incomplete-basis warning.
pub const COMPLETENESS_TOL: f64 = 1e-6;
/// Below this effective sample size an estimate is refused.
pub const MIN_ESS: f64 = 10.0;

/// Orthonormal set of possible outcomes of the next measurement.
#[derive(Clone, Debug)]
pub enum FinalBasis {
    /// Normalized grid deltas, one per grid point.
    Position(Grid1D),
    /// Discrete plane waves exp(i k x)/sqrt(L), one per grid wavenumber.
    Momentum(Grid1D),
    Explicit {
        members: Vec<WavefunctionField>,
        labels: Vec<String>,
    },
}

impl FinalBasis {
    /// Checks the Gram matrix of an explicit basis.
    pub fn explicit(members: Vec<WavefunctionField>, labels: Vec<String>) -> Result<Self> {
        if members.is_empty() || labels.len() != members.len() {
            return Err(Error::Config("a basis needs one label per member and at least one member".into()));
        }
        for m in &members[1..] {
            m.grid().ensure_same(members[0].grid())?;
        }
        let basis = FinalBasis::Explicit { members, labels };
        let defect = basis.gram_defect()?;
        if defect > ORTHONORMAL_TOL {
            return Err(Error::Config(format!("basis is not orthonormal: Gram defect {defect:e}")));
        }
        Ok(basis)
    }

    /// The first `n` oscillator eigenstates.
    pub fn harmonic(grid: &Grid1D, n: usize, omega: f64, center: f64) -> Result<Self> {
        let members = (0..n)
            .map(|k| crate::field::hermite_function(grid, k, omega, center))
            .collect::<Result<Vec<_>>>()?;
        Self::explicit(members, (0..n).map(|k| format!("n={k}")).collect())
    }

    pub fn grid(&self) -> &Grid1D {
        match self {
            FinalBasis::Position(g) | FinalBasis::Momentum(g) => g,
            FinalBasis::Explicit { members, .. } => members[0].grid(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            FinalBasis::Position(g) | FinalBasis::Momentum(g) => g.len(),
            FinalBasis::Explicit { members, .. } => members.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn label(&self, k: usize) -> String {
        match self {
            FinalBasis::Position(g) => format!("x={}", g.x(k)),
            FinalBasis::Momentum(g) => format!("p={}", g.wavenumbers()[k]),
            FinalBasis::Explicit { labels, .. } => labels[k].clone(),
        }
    }

    /// Member `k` as a field at time `t`.
    pub fn member(&self, k: usize, t: f64) -> WavefunctionField {
        match self {
            FinalBasis::Position(g) => {
                let mut v = vec![C64::new(0.0, 0.0); g.len()];
                v[k] = C64::new(1.0 / g.spacing().sqrt(), 0.0);
                WavefunctionField::from_parts_unchecked(*g, v, t, true)
            }
            FinalBasis::Momentum(g) => {
                let p = g.wavenumbers()[k];
                let s = 1.0 / g.period().sqrt();
                let v = g.points().map(|x| C64::from_polar(s, p * (x - g.origin()))).collect();
                WavefunctionField::from_parts_unchecked(*g, v, t, true)
            }
            FinalBasis::Explicit { members, .. } => members[k].clone().with_time(t),
        }
    }

    /// Largest entry of |G - I| for the Gram matrix G.
    pub fn gram_defect(&self) -> Result<f64> {
        let members = match self {
            // exact on the grid by construction
            FinalBasis::Position(_) | FinalBasis::Momentum(_) => return Ok(0.0),
            FinalBasis::Explicit { members, .. } => members,
        };
        let mut worst = 0.0f64;
        for (i, a) in members.iter().enumerate() {
            for (j, b) in members.iter().enumerate().skip(i) {
                let g = inner_product(a, b)?;
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).norm());
            }
        }
        Ok(worst)
    }

    /// Largest entry of |sum_k phi_k(x) phi_k^*(y) dx - delta_xy| over the grid.
    pub fn completeness_defect(&self) -> f64 {
        let members = match self {
            FinalBasis::Position(_) | FinalBasis::Momentum(_) => return 0.0,
            FinalBasis::Explicit { members, .. } => members,
        };
        let n = members[0].grid().len();
        let dx = members[0].grid().spacing();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let s: C64 = members.iter().map(|m| m.values()[i] * m.values()[j].conj()).sum::<C64>() * dx;
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((s - target).norm());
            }
        }
        worst
    }

    /// Projection of `psi` onto the span of the basis.
    pub fn project(&self, psi: &WavefunctionField) -> Result<Vec<C64>> {
        let mut acc = vec![C64::new(0.0, 0.0); psi.grid().len()];
        for k in 0..self.len() {
            let m = self.member(k, psi.time());
            let c = inner_product(&m, psi)?;
            for (a, v) in acc.iter_mut().zip(m.values()) {
                *a += c * v;
            }
        }
        Ok(acc)
    }
}

/// |<psi_f|psi_i>|^2.
pub fn final_state_weight(psi_f: &WavefunctionField, psi_i: &WavefunctionField) -> Result<f64> {
    Ok(inner_product(psi_f, psi_i)?.norm_sqr())
}

/// Outcome weights over a basis, in member order.
pub fn outcome_weights(basis: &FinalBasis, psi_i: &WavefunctionField) -> Result<Vec<f64>> {
    psi_i.grid().ensure_same(basis.grid())?;
    (0..basis.len())
        .map(|k| final_state_weight(&basis.member(k, psi_i.time()), psi_i))
        .collect()
}

/// Re[<psi_i|psi_f> psi_f^*(x) psi_i(x)] at every grid point.
pub fn joint_density(psi_i: &WavefunctionField, psi_f: &WavefunctionField) -> Result<Vec<f64>> {
    let c = inner_product(psi_i, psi_f)?;
    Ok(psi_f
        .values()
        .iter()
        .zip(psi_i.values())
        .map(|(f, i)| (c * f.conj() * i).re)
        .collect())
}

/// The joint density at one position, by trigonometric interpolation of the grid values.
pub fn joint_density_at(psi_i: &WavefunctionField, psi_f: &WavefunctionField, x: f64) -> Result<f64> {
    let d = joint_density(psi_i, psi_f)?;
    Ok(crate::spectral::TrigInterpolant::new(&d, psi_i.grid()).eval(x))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Marginal {
    pub density: Vec<f64>,
    /// L1 distance to |psi_i|^2.
    pub l1_error: f64,
    pub max_deviation: f64,
    /// Norm of the part of psi_i outside the span of the basis.
    pub missing_norm: f64,
    pub min_value: f64,
    pub warnings: Vec<String>,
}

/// Sum over the basis of the joint density; recovers |psi_i|^2 when the basis spans psi_i.
pub fn marginal_position(psi_i: &WavefunctionField, basis: &FinalBasis) -> Result<Marginal> {
    psi_i.grid().ensure_same(basis.grid())?;
    let n = psi_i.grid().len();
    let dx = psi_i.grid().spacing();
    let mut density = vec![0.0; n];
    let mut proj = vec![C64::new(0.0, 0.0); n];
    for k in 0..basis.len() {
        let m = basis.member(k, psi_i.time());
        let c = inner_product(&m, psi_i)?;
        // joint density of this outcome: Re[<psi_i|k> k^*(x) psi_i(x)]
        for (((d, p), v), y) in density.iter_mut().zip(proj.iter_mut()).zip(m.values()).zip(psi_i.values()) {
            *d += (c.conj() * v.conj() * y).re;
            *p += c * v;
        }
    }
    let exact = psi_i.density();
    let l1_error = density.iter().zip(&exact).map(|(a, b)| (a - b).abs()).sum::<f64>() * dx;
    let max_deviation = density.iter().zip(&exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let missing_norm = (proj
        .iter()
        .zip(psi_i.values())
        .map(|(p, v)| (v - p).norm_sqr())
        .sum::<f64>()
        * dx)
        .sqrt();
    let min_value = density.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = exact.iter().copied().fold(0.0, f64::max);
    let mut warnings = Vec::new();
    if missing_norm > COMPLETENESS_TOL {
        warnings.push(format!("incomplete basis: missing projection norm {missing_norm:.3e}"));
    }
    if min_value < -1e-12 * scale {
        warnings.push(format!("marginal is negative down to {min_value:.3e}"));
    }
    Ok(Marginal {
        density,
        l1_error,
        max_deviation,
        missing_norm,
        min_value,
        warnings,
    })
}

/// Product of the two one-particle signed densities, row-major over (x1, x2).
pub fn appendix_product_density(psi_i: &TwoParticleField, psi_f: &TwoParticleField, a: &Amplitude) -> Result<Vec<f64>> {
    let r1 = many_body_density(psi_i, psi_f, a, Particle::First)?;
    let r2 = many_body_density(psi_i, psi_f, a, Particle::Second)?;
    Ok(outer(&r1, &r2))
}

fn outer(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Recovery {
    pub density: Vec<f64>,
    pub l1_error: f64,
    pub correlation: f64,
    pub direct_correlation: f64,
    pub outcomes: usize,
}

/// Sums the uncorrelated product density over every product outcome of two
/// single-particle bases, weighted by |a|^2.
pub fn appendix_marginal_recovery_with(psi_i: &TwoParticleField, b1: &FinalBasis, b2: &FinalBasis) -> Result<Recovery> {
    let (g1, g2) = psi_i.grids();
    g1.ensure_same(b1.grid())?;
    g2.ensure_same(b2.grid())?;
    let (n1, n2) = (g1.len(), g2.len());
    let t = psi_i.time();
    let f: Vec<WavefunctionField> = (0..b1.len()).map(|k| b1.member(k, t)).collect();
    let g: Vec<WavefunctionField> = (0..b2.len()).map(|k| b2.member(k, t)).collect();
    // c[b](x1) = int g_b^* Psi dx2 and d[a](x2) = int f_a^* Psi dx1
    let c: Vec<Vec<C64>> = g.iter().map(|gb| psi_i.contract(Particle::Second, gb)).collect::<Result<_>>()?;
    let d: Vec<Vec<C64>> = f.iter().map(|fa| psi_i.contract(Particle::First, fa)).collect::<Result<_>>()?;
    let mut acc = vec![0.0; n1 * n2];
    let (dx1, dx2) = (g1.spacing(), g2.spacing());
    let mut outcomes = 0;
    let mut u = vec![0.0; n1];
    let mut v = vec![0.0; n2];
    for (fa, da) in f.iter().zip(&d) {
        for (gb, cb) in g.iter().zip(&c) {
            let amp: C64 = fa.values().iter().zip(cb).map(|(x, y)| x.conj() * y).sum::<C64>() * dx1;
            let w = amp.norm_sqr();
            if w == 0.0 {
                continue;
            }
            outcomes += 1;
            // |a|^2 Re(u/a) Re(v/a) = Re(u conj a) Re(v conj a) / |a|^2
            let ac = amp.conj();
            for (ui, (x, y)) in u.iter_mut().zip(fa.values().iter().zip(cb)) {
                *ui = (x.conj() * y * ac).re;
            }
            for (vi, (x, y)) in v.iter_mut().zip(gb.values().iter().zip(da)) {
                *vi = (x.conj() * y * ac).re / w;
            }
            for (row, ui) in acc.chunks_exact_mut(n2).zip(&u) {
                if *ui == 0.0 {
                    continue;
                }
                for (cell, vi) in row.iter_mut().zip(&v) {
                    *cell += ui * vi;
                }
            }
        }
    }
    let exact = psi_i.density();
    let l1_error = acc.iter().zip(&exact).map(|(a, b)| (a - b).abs()).sum::<f64>() * dx1 * dx2;
    Ok(Recovery {
        correlation: correlation(g1, g2, &acc),
        direct_correlation: correlation(g1, g2, &exact),
        density: acc,
        l1_error,
        outcomes,
    })
}

/// Outcome-summed product densities for the grid-position product basis at the field's time.
pub fn appendix_marginal_recovery(psi_i: &TwoParticleField) -> Result<Recovery> {
    let (g1, g2) = psi_i.grids();
    appendix_marginal_recovery_with(psi_i, &FinalBasis::Position(*g1), &FinalBasis::Position(*g2))
}

/// Pearson correlation of x1 and x2 under a density on the product grid.
pub fn correlation(g1: &Grid1D, g2: &Grid1D, density: &[f64]) -> f64 {
    let n2 = g2.len();
    let (mut m, mut s1, mut s2, mut s11, mut s22, mut s12) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, row) in density.chunks_exact(n2).enumerate() {
        let x1 = g1.x(i);
        for (j, &p) in row.iter().enumerate() {
            let x2 = g2.x(j);
            m += p;
            s1 += p * x1;
            s2 += p * x2;
            s11 += p * x1 * x1;
            s22 += p * x2 * x2;
            s12 += p * x1 * x2;
        }
    }
    let (e1, e2) = (s1 / m, s2 / m);
    let cov = s12 / m - e1 * e2;
    cov / ((s11 / m - e1 * e1) * (s22 / m - e2 * e2)).sqrt()
}

/// A position or outcome carrying a signed weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignedSample {
    pub value: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub stderr: f64,
    /// (sum |w|)^2 / sum w^2.
    pub effective_sample_size: f64,
    /// (sum w)^2 / sum w^2; small when signed weights cancel.
    pub signed_effective_sample_size: f64,
    pub negativity_fraction: f64,
    pub samples: usize,
}

/// Self-normalized weighted mean of `statistic` with effective-sample-size diagnostics.
pub fn signed_estimator(samples: &[SignedSample], statistic: impl Fn(f64) -> f64) -> Result<Estimate> {
    let (mut sw, mut sa, mut s2, mut neg) = (0.0, 0.0, 0.0, 0.0);
    for s in samples {
        if !s.weight.is_finite() {
            return Err(Error::Config(format!("non-finite weight {}", s.weight)));
        }
        sw += s.weight;
        sa += s.weight.abs();
        s2 += s.weight * s.weight;
        if s.weight < 0.0 {
            neg -= s.weight;
        }
    }
    let ess = if s2 > 0.0 { sa * sa / s2 } else { 0.0 };
    let signed_ess = if s2 > 0.0 { sw * sw / s2 } else { 0.0 };
    let worst = ess.min(signed_ess);
    if !(worst >= MIN_ESS) {
        return Err(Error::UnreliableEstimate {
            ess: worst,
            minimum: MIN_ESS,
        });
    }
    let mean = samples.iter().map(|s| s.weight * statistic(s.value)).sum::<f64>() / sw;
    let var = samples
        .iter()
        .map(|s| (s.weight * (statistic(s.value) - mean)).powi(2))
        .sum::<f64>();
    Ok(Estimate {
        estimate: mean,
        stderr: var.sqrt() / sw.abs(),
        effective_sample_size: ess,
        signed_effective_sample_size: signed_ess,
        negativity_fraction: neg / sa,
        samples: samples.len(),
    })
}

/// Draws `n` positions from |rho| (uniform within cells) with weights sign(rho) * int|rho| / n,
/// so the weights sum to int rho in expectation.
pub fn draw_signed_samples(grid: &Grid1D, density: &[f64], n: usize, rng: &mut impl Rng) -> Vec<SignedSample> {
    let dx = grid.spacing();
    let mut cdf = Vec::with_capacity(density.len());
    let mut acc = 0.0;
    for r in density {
        acc += r.abs();
        cdf.push(acc);
    }
    let total = acc * dx;
    (0..n)
        .map(|_| {
            let u = rng.gen::<f64>() * acc;
            let k = cdf.partition_point(|&c| c <= u).min(density.len() - 1);
            let x = grid.x(k) + (rng.gen::<f64>() - 0.5) * dx;
            SignedSample {
                value: x,
                weight: density[k].signum() * total / n as f64,
            }
        })
        .collect()
}

/// Signed histogram on uniform bins over [lo, hi); out-of-range samples are dropped.
pub fn signed_histogram(samples: &[SignedSample], lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let mut h = vec![0.0; bins];
    let w = (hi - lo) / bins as f64;
    for s in samples {
        let b = ((s.value - lo) / w).floor();
        if b >= 0.0 && (b as usize) < bins {
            h[b as usize] += s.weight;
        }
    }
    h
}

/// Integrates a grid density into the same uniform bins, splitting cells at bin edges.
pub fn bin_density(grid: &Grid1D, density: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let mut h = vec![0.0; bins];
    let w = (hi - lo) / bins as f64;
    let dx = grid.spacing();
    for (k, &r) in density.iter().enumerate() {
        let (a, b) = (grid.x(k) - 0.5 * dx, grid.x(k) + 0.5 * dx);
        let first = (((a - lo) / w).floor().max(0.0)) as usize;
        let last = ((((b - lo) / w).floor()).max(0.0) as usize).min(bins.saturating_sub(1));
        for (bin, slot) in h.iter_mut().enumerate().take(last + 1).skip(first) {
            let (e0, e1) = (lo + bin as f64 * w, lo + (bin + 1) as f64 * w);
            let overlap = b.min(e1) - a.max(e0);
            if overlap > 0.0 {
                *slot += r * overlap;
            }
        }
    }
    h
}

/// Half the L1 distance between two binned distributions.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{gaussian_packet, hermite_function, superpose};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Grid1D {
        Grid1D::centered(256, 24.0, 0.0).unwrap()
    }

    #[test]
    fn born_weights_of_explicit_superposition() {
        let g = grid();
        let one = C64::new(1.0, 0.0);
        let p0 = hermite_function(&g, 0, 1.0, 0.0).unwrap();
        let p1 = hermite_function(&g, 1, 1.0, 0.0).unwrap();
        let psi = superpose(&[(one, &p0), (one, &p1)]).unwrap();
        let b = FinalBasis::harmonic(&g, 3, 1.0, 0.0).unwrap();
        let w = outcome_weights(&b, &psi).unwrap();
        assert!((w[0] - 0.5).abs() < 1e-12 && (w[1] - 0.5).abs() < 1e-12 && w[2] < 1e-20);
        assert!((final_state_weight(&psi, &psi).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn joint_density_chain_rule() {
        let g = grid();
        let pi = gaussian_packet(&g, -0.5, 0.7, 1.3).unwrap();
        let pf = gaussian_packet(&g, 0.8, -0.2, 0.9).unwrap();
        let a = crate::field::amplitude(&pf, &pi).unwrap();
        let sym = crate::guidance::symmetric_fields(&pi, &pf, &a).unwrap();
        let w = final_state_weight(&pf, &pi).unwrap();
        let j = joint_density(&pi, &pf).unwrap();
        for k in 0..g.len() {
            assert!((j[k] - sym.density[k] * w).abs() < 1e-12);
        }
        // pointwise oracle straight from the definitions
        let k = 100;
        let x = g.x(k);
        let exact = (inner_product(&pi, &pf).unwrap() * pf.values()[k].conj() * pi.values()[k]).re;
        assert!((joint_density_at(&pi, &pf, x).unwrap() - exact).abs() < 1e-12);
    }

    #[test]
    fn position_basis_recovers_density_exactly() {
        let g = Grid1D::centered(128, 24.0, 0.0).unwrap();
        let psi = gaussian_packet(&g, 0.3, 1.2, 1.5).unwrap();
        let m = marginal_position(&psi, &FinalBasis::Position(g)).unwrap();
        assert!(m.l1_error < 1e-10, "{}", m.l1_error);
        assert!(m.warnings.is_empty());
        let m = marginal_position(&psi, &FinalBasis::Momentum(g)).unwrap();
        assert!(m.l1_error < 1e-10, "{}", m.l1_error);
    }

    #[test]
    fn missing_component_shows_up_as_projection_density() {
        let g = grid();
        let one = C64::new(1.0, 0.0);
        let p0 = hermite_function(&g, 0, 1.0, 0.0).unwrap();
        let p3 = hermite_function(&g, 3, 1.0, 0.0).unwrap();
        let psi = superpose(&[(one, &p0), (C64::new(0.0, 1.0), &p3)]).unwrap();
        let b = FinalBasis::harmonic(&g, 3, 1.0, 0.0).unwrap();
        let m = marginal_position(&psi, &b).unwrap();
        // projector algebra: deviation is Re[psi^* (1-P) psi] = |c3|^2 phi3^2 + Re[c0^* c3] phi0 phi3
        for k in 0..g.len() {
            let missing = 0.5 * p3.values()[k].re.powi(2);
            let dev = psi.density()[k] - m.density[k];
            assert!((dev - missing).abs() < 1e-10);
        }
        assert!(!m.warnings.is_empty());
    }

    #[test]
    fn signed_estimator_contract() {
        let s: Vec<SignedSample> = (0..100).map(|k| SignedSample { value: k as f64, weight: 0.01 }).collect();
        let e = signed_estimator(&s, |x| x).unwrap();
        assert!((e.estimate - 49.5).abs() < 1e-12);
        assert!((e.effective_sample_size - 100.0).abs() < 1e-9);
        let cancel: Vec<SignedSample> = (0..100)
            .map(|k| SignedSample {
                value: k as f64,
                weight: if k % 2 == 0 { 1.0 } else { -1.0 } + if k == 0 { 1e-3 } else { 0.0 },
            })
            .collect();
        assert!(matches!(signed_estimator(&cancel, |x| x), Err(Error::UnreliableEstimate { .. })));
    }

    #[test]
    fn signed_samples_reproduce_exact_expectation() {
        // discrete signed distribution on 3 points, summing to one
        let g = Grid1D::new(4, 1.0, 0.0).unwrap();
        let rho = [0.7, -0.2, 0.5, 0.0];
        let exact: f64 = rho.iter().enumerate().map(|(k, r)| r * g.x(k)).sum();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = draw_signed_samples(&g, &rho, 20000, &mut rng);
        let snapped: Vec<SignedSample> = s.iter().map(|q| SignedSample { value: g.x(g.nearest(q.value)), weight: q.weight }).collect();
        let e = signed_estimator(&snapped, |x| x).unwrap();
        assert!((e.estimate - exact).abs() < 3.0 * e.stderr, "{} vs {exact} ± {}", e.estimate, e.stderr);
        assert!((e.negativity_fraction - 0.2 / 1.4).abs() < 0.02);
    }

    #[test]
    fn binned_density_matches_sampled_histogram() {
        let g = Grid1D::centered(256, 20.0, 0.0).unwrap();
        let d = gaussian_packet(&g, 0.0, 0.0, 1.0).unwrap().density();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = draw_signed_samples(&g, &d, 100_000, &mut rng);
        let h = signed_histogram(&s, -5.0, 5.0, 25);
        let b = bin_density(&g, &d, -5.0, 5.0, 25);
        assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-5);
        assert!(total_variation(&h, &b) < 0.01);
    }

    #[test]
    fn product_basis_recovery_restores_correlation() {
        let g = Grid1D::centered(32, 16.0, 0.0).unwrap();
        let psi = TwoParticleField::from_fn(g, g, 0.0, |x1, x2| {
            let u = (x1 + x2) / 2f64.sqrt();
            let w = (x1 - x2) / 2f64.sqrt();
            C64::from_polar((-u * u / 4.0 - w * w).exp(), 0.3 * x1)
        })
        .unwrap()
        .normalized()
        .unwrap();
        let r = appendix_marginal_recovery(&psi).unwrap();
        assert!(r.l1_error < 1e-10);
        assert!((r.correlation - r.direct_correlation).abs() < 1e-10);
        assert!(r.correlation > 0.3);
        // the identity is specific to position outcomes at the time of measurement
        let r = appendix_marginal_recovery_with(&psi, &FinalBasis::Momentum(g), &FinalBasis::Momentum(g)).unwrap();
        assert!(r.l1_error > 1e-3, "{}", r.l1_error);
    }
}
