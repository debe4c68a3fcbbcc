//! Unitary split-step evolution for the Schrödinger (one and two particle) and
//! free 1+1D Dirac equations, forward or backward in time.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{SpinorField, TwoParticleField, WavefunctionField, BOUNDARY_LEAK_TOL};
use crate::grid::Grid1D;
use crate::spectral;

/// Real external potential, evaluable anywhere in space and time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Potential {
    Free,
    Harmonic {
        omega: f64,
        #[serde(default)]
        center: f64,
    },
    /// Rectangular barrier of the given full width.
    Barrier { height: f64, width: f64, center: f64 },
    /// Pushes the two half-lines apart with force `strength * tanh(x / smoothing)`
    /// while `t_on <= t < t_off`; stands in for a Stern-Gerlach separator.
    SeparatingKick {
        strength: f64,
        t_on: f64,
        t_off: f64,
        #[serde(default = "default_smoothing")]
        smoothing: f64,
    },
}

fn default_smoothing() -> f64 {
    1.0
}

impl Default for Potential {
    fn default() -> Self {
        Potential::Free
    }
}

impl Potential {
    pub fn value(&self, x: f64, t: f64) -> f64 {
        match *self {
            Potential::Free => 0.0,
            Potential::Harmonic { omega, center } => 0.5 * omega * omega * (x - center) * (x - center),
            Potential::Barrier { height, width, center } => {
                if (x - center).abs() < 0.5 * width {
                    height
                } else {
                    0.0
                }
            }
            Potential::SeparatingKick {
                strength,
                t_on,
                t_off,
                smoothing,
            } => {
                if t >= t_on && t < t_off {
                    let u = (x / smoothing).abs();
                    // w ln cosh(x/w), written to avoid overflow
                    let lncosh = u + (-2.0 * u).exp().ln_1p() - std::f64::consts::LN_2;
                    -strength * smoothing * lncosh
                } else {
                    0.0
                }
            }
        }
    }

    pub fn is_static(&self) -> bool {
        !matches!(self, Potential::SeparatingKick { .. })
    }

    pub fn is_free(&self) -> bool {
        matches!(self, Potential::Free)
    }
}

/// Separable pair potential V1(x1) + V2(x2).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PairPotential {
    #[serde(default)]
    pub first: Potential,
    #[serde(default)]
    pub second: Potential,
}

impl PairPotential {
    pub fn free() -> Self {
        Self::default()
    }

    pub fn value(&self, x1: f64, x2: f64, t: f64) -> f64 {
        self.first.value(x1, t) + self.second.value(x2, t)
    }

    fn is_static(&self) -> bool {
        self.first.is_static() && self.second.is_static()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

/// Strang splitting exp(-iV dt/2) exp(-i k^2 dt/2) exp(-iV dt/2) with a fixed signed step.
pub struct SchrodingerPropagator {
    grid: Grid1D,
    potential: Potential,
    dt: f64,
    drift: Vec<C64>,
    kick: Option<Vec<C64>>,
}

impl SchrodingerPropagator {
    pub fn new(grid: Grid1D, potential: Potential, dt: f64) -> Self {
        let drift = grid
            .wavenumbers()
            .into_iter()
            .map(|k| C64::from_polar(1.0, -0.5 * k * k * dt))
            .collect();
        let kick = if potential.is_static() && !potential.is_free() {
            Some(half_kick(&grid, &potential, 0.0, dt))
        } else {
            None
        };
        Self {
            grid,
            potential,
            dt,
            drift,
            kick,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `values` from time `t` to `t + dt` in place.
    pub fn apply(&self, values: &mut [C64], t: f64) {
        let dynamic;
        let kick = match (&self.kick, self.potential.is_free()) {
            (_, true) => None,
            (Some(k), false) => Some(k),
            (None, false) => {
                // time-dependent potential sampled at the step midpoint
                dynamic = half_kick(&self.grid, &self.potential, t + 0.5 * self.dt, self.dt);
                Some(&dynamic)
            }
        };
        if let Some(k) = kick {
            values.iter_mut().zip(k).for_each(|(v, k)| *v *= k);
        }
        spectral::forward(values);
        values.iter_mut().zip(&self.drift).for_each(|(v, d)| *v *= d);
        spectral::inverse(values);
        if let Some(k) = kick {
            values.iter_mut().zip(k).for_each(|(v, k)| *v *= k);
        }
    }

    pub fn step(&self, psi: &WavefunctionField) -> Result<WavefunctionField> {
        self.grid.ensure_same(psi.grid())?;
        let mut v = psi.values().to_vec();
        self.apply(&mut v, psi.time());
        Ok(WavefunctionField::from_parts_unchecked(
            self.grid,
            v,
            psi.time() + self.dt,
            psi.is_normalized(),
        ))
    }
}

fn half_kick(grid: &Grid1D, potential: &Potential, t: f64, dt: f64) -> Vec<C64> {
    grid.points()
        .map(|x| C64::from_polar(1.0, -0.5 * potential.value(x, t) * dt))
        .collect()
}

/// One Strang step; negative `dt` integrates toward the past.
pub fn schrodinger_step(psi: &WavefunctionField, potential: &Potential, dt: f64) -> Result<WavefunctionField> {
    if !(dt != 0.0 && dt.is_finite()) {
        return Err(Error::InvalidWindow(format!("step dt = {dt} must be non-zero")));
    }
    SchrodingerPropagator::new(*psi.grid(), potential.clone(), dt).step(psi)
}

/// Anything that can be stored in an [`EvolutionRecord`].
pub trait Snapshot: Clone {
    fn time(&self) -> f64;
    fn boundary_leak(&self) -> f64;
}

impl Snapshot for WavefunctionField {
    fn time(&self) -> f64 {
        WavefunctionField::time(self)
    }
    fn boundary_leak(&self) -> f64 {
        WavefunctionField::boundary_leak(self)
    }
}

impl Snapshot for TwoParticleField {
    fn time(&self) -> f64 {
        TwoParticleField::time(self)
    }
    fn boundary_leak(&self) -> f64 {
        TwoParticleField::boundary_leak(self)
    }
}

impl Snapshot for SpinorField {
    fn time(&self) -> f64 {
        SpinorField::time(self)
    }
    fn boundary_leak(&self) -> f64 {
        SpinorField::boundary_leak(self)
    }
}

/// Time-ordered snapshots of one evolution run, in the order they were produced.
#[derive(Clone, Debug)]
pub struct EvolutionRecord<F = WavefunctionField> {
    pub snapshots: Vec<F>,
    /// Signed step size.
    pub dt: f64,
    pub stride: usize,
    pub direction: Direction,
    pub warnings: Vec<String>,
}

impl<F: Snapshot> EvolutionRecord<F> {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(Snapshot::time).collect()
    }

    pub fn first(&self) -> &F {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &F {
        self.snapshots.last().expect("records hold at least one snapshot")
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// Snapshots sorted by increasing time.
    pub fn ascending(&self) -> Vec<&F> {
        let mut v: Vec<&F> = self.snapshots.iter().collect();
        if self.direction == Direction::Backward {
            v.reverse();
        }
        v
    }

    pub fn at_time(&self, t: f64) -> Option<&F> {
        self.snapshots.iter().find(|s| crate::grid::same_time(s.time(), t))
    }

    /// Spacing between stored snapshots (positive).
    pub fn snapshot_interval(&self) -> f64 {
        (self.dt * self.stride as f64).abs()
    }
}

/// Step count and signed step for a window; `dt` is the step magnitude.
pub fn plan_window(t_start: f64, t_end: f64, dt: f64, stride: usize) -> Result<(usize, f64)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidWindow(format!("dt = {dt} must be positive")));
    }
    if stride == 0 {
        return Err(Error::InvalidWindow("stride must be positive".into()));
    }
    let span = t_end - t_start;
    let steps_f = span.abs() / dt;
    let steps = steps_f.round() as usize;
    if (steps_f - steps as f64).abs() > 1e-6 {
        return Err(Error::InvalidWindow(format!(
            "window length {} is not an integral number of steps of {dt}",
            span.abs()
        )));
    }
    if steps % stride != 0 {
        return Err(Error::InvalidWindow(format!("stride {stride} does not divide {steps} steps")));
    }
    let h = if steps == 0 { dt } else { span / steps as f64 };
    Ok((steps, h))
}

fn run_window<F: Snapshot>(
    psi0: F,
    t_start: f64,
    t_end: f64,
    dt: f64,
    stride: usize,
    mut advance: impl FnMut(&F, f64) -> F,
) -> Result<EvolutionRecord<F>> {
    if !crate::grid::same_time(psi0.time(), t_start) {
        return Err(Error::TimeMismatch {
            left: psi0.time(),
            right: t_start,
        });
    }
    let (steps, h) = plan_window(t_start, t_end, dt, stride)?;
    let mut snapshots = Vec::with_capacity(steps / stride + 1);
    let mut cur = psi0;
    snapshots.push(cur.clone());
    for k in 1..=steps {
        // time tags from the step count, so forward and backward runs line up
        let t = t_start + (t_end - t_start) * (k as f64 / steps as f64);
        cur = advance(&cur, t);
        if k % stride == 0 {
            snapshots.push(cur.clone());
        }
    }
    let mut warnings = Vec::new();
    let leak = snapshots.iter().map(Snapshot::boundary_leak).fold(0.0, f64::max);
    if leak > BOUNDARY_LEAK_TOL {
        let msg = format!("boundary leak: |psi| reaches {leak:.3e} at the grid margin (limit {BOUNDARY_LEAK_TOL:e})");
        log::debug!("{msg}");
        warnings.push(msg);
    }
    Ok(EvolutionRecord {
        snapshots,
        dt: h,
        stride,
        direction: if t_end < t_start {
            Direction::Backward
        } else {
            Direction::Forward
        },
        warnings,
    })
}

/// Evolves `psi0` from `t_start` to `t_end` (either order) in steps of
/// magnitude `dt`, storing every `stride`-th state including both ends.
pub fn evolve_window(
    psi0: &WavefunctionField,
    potential: &Potential,
    t_start: f64,
    t_end: f64,
    dt: f64,
    stride: usize,
) -> Result<EvolutionRecord> {
    let (_, h) = plan_window(t_start, t_end, dt, stride)?;
    let prop = SchrodingerPropagator::new(*psi0.grid(), potential.clone(), h);
    let grid = *psi0.grid();
    let normalized = psi0.is_normalized();
    run_window(psi0.clone(), t_start, t_end, dt, stride, |cur, t_next| {
        let mut v = cur.values().to_vec();
        prop.apply(&mut v, cur.time());
        WavefunctionField::from_parts_unchecked(grid, v, t_next, normalized)
    })
}

/// Two-particle split-step propagator on the product grid.
pub struct PairPropagator {
    grid1: Grid1D,
    grid2: Grid1D,
    potential: PairPotential,
    dt: f64,
    drift1: Vec<C64>,
    drift2: Vec<C64>,
    kick: Option<Vec<C64>>,
}

impl PairPropagator {
    pub fn new(grid1: Grid1D, grid2: Grid1D, potential: PairPotential, dt: f64) -> Self {
        let drift = |g: &Grid1D| -> Vec<C64> {
            g.wavenumbers()
                .into_iter()
                .map(|k| C64::from_polar(1.0, -0.5 * k * k * dt))
                .collect()
        };
        let kick = if potential.is_static() {
            Some(pair_half_kick(&grid1, &grid2, &potential, 0.0, dt))
        } else {
            None
        };
        Self {
            drift1: drift(&grid1),
            drift2: drift(&grid2),
            grid1,
            grid2,
            potential,
            dt,
            kick,
        }
    }

    pub fn apply(&self, values: &mut [C64], t: f64) {
        let free = self.potential.first.is_free() && self.potential.second.is_free();
        let dynamic;
        let kick = if free {
            None
        } else if let Some(k) = &self.kick {
            Some(k)
        } else {
            dynamic = pair_half_kick(&self.grid1, &self.grid2, &self.potential, t + 0.5 * self.dt, self.dt);
            Some(&dynamic)
        };
        if let Some(k) = kick {
            values.iter_mut().zip(k).for_each(|(v, k)| *v *= k);
        }
        let (n1, n2) = (self.grid1.len(), self.grid2.len());
        spectral::forward_rows(values, n2);
        spectral::forward_cols(values, n1, n2);
        for (i, row) in values.chunks_exact_mut(n2).enumerate() {
            let d1 = self.drift1[i];
            row.iter_mut().zip(&self.drift2).for_each(|(v, d2)| *v *= d1 * d2);
        }
        spectral::inverse_cols(values, n1, n2);
        spectral::inverse_rows(values, n2);
        if let Some(k) = kick {
            values.iter_mut().zip(k).for_each(|(v, k)| *v *= k);
        }
    }

    pub fn step(&self, psi: &TwoParticleField) -> Result<TwoParticleField> {
        self.grid1.ensure_same(psi.grid(crate::field::Particle::First))?;
        self.grid2.ensure_same(psi.grid(crate::field::Particle::Second))?;
        let mut v = psi.values().to_vec();
        self.apply(&mut v, psi.time());
        Ok(TwoParticleField::from_parts_unchecked(self.grid1, self.grid2, v, psi.time() + self.dt))
    }
}

fn pair_half_kick(g1: &Grid1D, g2: &Grid1D, potential: &PairPotential, t: f64, dt: f64) -> Vec<C64> {
    let mut out = Vec::with_capacity(g1.len() * g2.len());
    for x1 in g1.points() {
        for x2 in g2.points() {
            out.push(C64::from_polar(1.0, -0.5 * potential.value(x1, x2, t) * dt));
        }
    }
    out
}

pub fn two_particle_step(psi: &TwoParticleField, potential: &PairPotential, dt: f64) -> Result<TwoParticleField> {
    let (g1, g2) = psi.grids();
    PairPropagator::new(*g1, *g2, potential.clone(), dt).step(psi)
}

pub fn evolve_pair_window(
    psi0: &TwoParticleField,
    potential: &PairPotential,
    t_start: f64,
    t_end: f64,
    dt: f64,
    stride: usize,
) -> Result<EvolutionRecord<TwoParticleField>> {
    let (_, h) = plan_window(t_start, t_end, dt, stride)?;
    let (g1, g2) = psi0.grids();
    let (g1, g2) = (*g1, *g2);
    let prop = PairPropagator::new(g1, g2, potential.clone(), h);
    run_window(psi0.clone(), t_start, t_end, dt, stride, |cur, t_next| {
        let mut v = cur.values().to_vec();
        prop.apply(&mut v, cur.time());
        TwoParticleField::from_parts_unchecked(g1, g2, v, t_next)
    })
}

type Mat2 = [[C64; 2]; 2];

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// A 1+1D representation of the Clifford algebra {gamma^mu, gamma^nu} = 2 eta^{mu nu}
/// with eta = diag(1, -1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiracRep {
    pub gamma0: Mat2,
    pub gamma1: Mat2,
}

impl DiracRep {
    /// gamma^0 = sigma_3, gamma^1 = i sigma_1.
    pub fn standard() -> Self {
        let z = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        Self {
            gamma0: [[one, z], [z, -one]],
            gamma1: [[z, i], [i, z]],
        }
    }

    /// gamma^0 gamma^nu, the matrix whose sandwich gives the current j^nu.
    pub fn current_matrix(&self, nu: usize) -> Mat2 {
        match nu {
            0 => mat_mul(&self.gamma0, &self.gamma0),
            _ => mat_mul(&self.gamma0, &self.gamma1),
        }
    }

    /// H(k) = alpha k + beta m with alpha = gamma^0 gamma^1, beta = gamma^0.
    pub fn hamiltonian(&self, k: f64, mass: f64) -> Mat2 {
        let alpha = self.current_matrix(1);
        let mut h = [[C64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                h[i][j] = alpha[i][j] * k + self.gamma0[i][j] * mass;
            }
        }
        h
    }

    /// Normalized eigenvector of H(k) with energy sign `sign`.
    pub fn energy_eigenvector(&self, k: f64, mass: f64, sign: f64) -> [C64; 2] {
        let h = self.hamiltonian(k, mass);
        let e = sign.signum() * (k * k + mass * mass).sqrt();
        // (H - e) v = 0; pick the better-conditioned row
        let (a, b) = if (h[0][0] - e).norm() + h[0][1].norm() >= (h[1][1] - e).norm() + h[1][0].norm() {
            (h[0][0] - e, h[0][1])
        } else {
            (h[1][0], h[1][1] - e)
        };
        let v = if a.norm() + b.norm() < 1e-300 {
            [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
        } else {
            [-b, a]
        };
        let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        [v[0] / n, v[1] / n]
    }
}

/// Exact per-wavenumber propagator exp(-i H(k) dt) for the free Dirac equation.
pub struct DiracPropagator {
    grid: Grid1D,
    dt: f64,
    blocks: Vec<Mat2>,
}

impl DiracPropagator {
    pub fn new(grid: Grid1D, mass: f64, dt: f64, rep: &DiracRep) -> Self {
        let blocks = grid
            .wavenumbers()
            .into_iter()
            .map(|k| {
                let h = rep.hamiltonian(k, mass);
                let e = (k * k + mass * mass).sqrt();
                let (c, s) = ((e * dt).cos(), (e * dt).sin());
                let mut u = [[C64::new(0.0, 0.0); 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        let id = if i == j { c } else { 0.0 };
                        let hs = if e > 0.0 { h[i][j] * (s / e) } else { h[i][j] * dt };
                        u[i][j] = C64::new(id, 0.0) - C64::i() * hs;
                    }
                }
                u
            })
            .collect();
        Self { grid, dt, blocks }
    }

    pub fn apply(&self, upper: &mut [C64], lower: &mut [C64]) {
        spectral::forward(upper);
        spectral::forward(lower);
        for ((u, l), m) in upper.iter_mut().zip(lower.iter_mut()).zip(&self.blocks) {
            let (a, b) = (*u, *l);
            *u = m[0][0] * a + m[0][1] * b;
            *l = m[1][0] * a + m[1][1] * b;
        }
        spectral::inverse(upper);
        spectral::inverse(lower);
    }

    pub fn step(&self, psi: &SpinorField) -> Result<SpinorField> {
        self.grid.ensure_same(psi.grid())?;
        let (mut u, mut l) = (psi.upper().to_vec(), psi.lower().to_vec());
        self.apply(&mut u, &mut l);
        Ok(SpinorField::from_parts_unchecked(self.grid, u, l, psi.time() + self.dt))
    }
}

pub fn dirac_step(psi: &SpinorField, mass: f64, dt: f64) -> Result<SpinorField> {
    DiracPropagator::new(*psi.grid(), mass, dt, &DiracRep::standard()).step(psi)
}

pub fn evolve_dirac_window(
    psi0: &SpinorField,
    mass: f64,
    t_start: f64,
    t_end: f64,
    dt: f64,
    stride: usize,
) -> Result<EvolutionRecord<SpinorField>> {
    let (_, h) = plan_window(t_start, t_end, dt, stride)?;
    let grid = *psi0.grid();
    let prop = DiracPropagator::new(grid, mass, h, &DiracRep::standard());
    run_window(psi0.clone(), t_start, t_end, dt, stride, |cur, t_next| {
        let (mut u, mut l) = (cur.upper().to_vec(), cur.lower().to_vec());
        prop.apply(&mut u, &mut l);
        SpinorField::from_parts_unchecked(grid, u, l, t_next)
    })
}

/// Spinor packet built in momentum space from energy eigenvectors of one sign.
pub fn dirac_packet(
    grid: &Grid1D,
    center: f64,
    momentum: f64,
    width: f64,
    mass: f64,
    energy_sign: f64,
    time: f64,
) -> Result<SpinorField> {
    let rep = DiracRep::standard();
    let envelope = crate::field::gaussian_packet_at(grid, center, momentum, width, time)?;
    let mut spec = envelope.values().to_vec();
    spectral::forward(&mut spec);
    let ks = grid.wavenumbers();
    let mut up = vec![C64::new(0.0, 0.0); grid.len()];
    let mut lo = vec![C64::new(0.0, 0.0); grid.len()];
    for (i, (&k, s)) in ks.iter().zip(&spec).enumerate() {
        let v = rep.energy_eigenvector(k, mass, energy_sign);
        up[i] = s * v[0];
        lo[i] = s * v[1];
    }
    spectral::inverse(&mut up);
    spectral::inverse(&mut lo);
    SpinorField::new(*grid, up, lo, time)?.normalized()
}

/// Uniform spinor at rest in the positive-energy eigenvector.
pub fn dirac_rest_state(grid: &Grid1D, mass: f64, time: f64) -> Result<SpinorField> {
    let v = DiracRep::standard().energy_eigenvector(0.0, mass, 1.0);
    let n = grid.len();
    SpinorField::new(*grid, vec![v[0]; n], vec![v[1]; n], time)?.normalized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{gaussian_packet, hermite_function, inner_product};

    fn max_diff(a: &[C64], b: &[C64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn plane_wave_picks_up_global_phase() {
        let g = Grid1D::centered(128, 20.0, 0.0).unwrap();
        let p = 2.0 * std::f64::consts::PI / g.period() * 5.0;
        let psi = WavefunctionField::from_fn(g, 0.0, |x| C64::from_polar(1.0, p * x)).unwrap();
        let dt = 0.01;
        let next = schrodinger_step(&psi, &Potential::Free, dt).unwrap();
        let phase = C64::from_polar(1.0, -0.5 * p * p * dt);
        for (a, b) in next.values().iter().zip(psi.values()) {
            assert!((a - b * phase).norm() < 1e-13);
        }
        assert!((next.time() - dt).abs() < 1e-15);
    }

    #[test]
    fn free_gaussian_disperses_analytically() {
        let g = Grid1D::centered(1024, 80.0, 0.0).unwrap();
        let psi = gaussian_packet(&g, 0.0, 0.0, 1.0).unwrap();
        let rec = evolve_window(&psi, &Potential::Free, 0.0, 3.0, 0.01, 100).unwrap();
        for snap in &rec.snapshots {
            let t = snap.time();
            let analytic = 1.0 + t * t / 4.0;
            assert!((snap.position_variance() - analytic).abs() < 1e-6, "t = {t}");
        }
    }

    #[test]
    fn forward_then_backward_is_identity() {
        let g = Grid1D::centered(256, 40.0, 0.0).unwrap();
        let psi = gaussian_packet(&g, 1.0, 1.0, 1.0).unwrap();
        let v = Potential::Harmonic { omega: 0.5, center: 0.0 };
        let a = schrodinger_step(&psi, &v, 0.05).unwrap();
        let b = schrodinger_step(&a, &v, -0.05).unwrap();
        assert!(max_diff(b.values(), psi.values()) < 1e-12);
        assert!(b.time().abs() < 1e-15);
    }

    #[test]
    fn coherent_state_returns_after_one_period() {
        let g = Grid1D::centered(256, 24.0, 0.0).unwrap();
        // displaced ground state is a coherent state of the omega = 1 oscillator
        let psi = WavefunctionField::from_fn(g, 0.0, |x| C64::new(crate::field::hermite_value(0, x - 2.0), 0.0))
            .unwrap()
            .normalized()
            .unwrap();
        let period = 2.0 * std::f64::consts::PI;
        let rec = evolve_window(&psi, &Potential::Harmonic { omega: 1.0, center: 0.0 }, 0.0, period, period / 8000.0, 8000).unwrap();
        let fin = rec.last();
        let overlap = inner_product(&psi, fin).unwrap();
        let phase = overlap / overlap.norm();
        let aligned: Vec<C64> = fin.values().iter().map(|v| v / phase).collect();
        assert!(max_diff(&aligned, psi.values()) < 1e-6, "{}", max_diff(&aligned, psi.values()));
    }

    #[test]
    fn zero_length_window_is_single_snapshot() {
        let g = Grid1D::centered(64, 20.0, 0.0).unwrap();
        let psi = gaussian_packet(&g, 0.0, 0.0, 1.0).unwrap();
        let rec = evolve_window(&psi, &Potential::Free, 0.0, 0.0, 0.1, 1).unwrap();
        assert_eq!(rec.len(), 1);
        assert_eq!(rec.first(), &psi);
    }

    #[test]
    fn backward_window_has_decreasing_tags() {
        let g = Grid1D::centered(64, 20.0, 0.0).unwrap();
        let psi = gaussian_packet(&g, 0.0, 0.0, 1.0).unwrap().with_time(2.0);
        let rec = evolve_window(&psi, &Potential::Free, 2.0, 0.0, 0.1, 2).unwrap();
        assert_eq!(rec.direction, Direction::Backward);
        let t = rec.times();
        assert_eq!(t.len(), 11);
        assert!(t.windows(2).all(|w| w[1] < w[0]));
        assert!(t.last().unwrap().abs() < 1e-14);
    }

    #[test]
    fn window_must_divide_into_steps() {
        assert!(plan_window(0.0, 1.0, 0.3, 1).is_err());
        assert!(plan_window(0.0, 1.0, 0.1, 3).is_err());
        assert_eq!(plan_window(0.0, 1.0, 0.1, 5).unwrap().0, 10);
    }

    #[test]
    fn boundary_leak_is_flagged() {
        let g = Grid1D::centered(128, 20.0, 0.0).unwrap();
        let psi = gaussian_packet(&g, 0.0, 3.0, 1.0).unwrap();
        let rec = evolve_window(&psi, &Potential::Free, 0.0, 2.0, 0.01, 10).unwrap();
        assert!(!rec.warnings.is_empty());
    }

    #[test]
    fn norm_conserved_over_many_steps() {
        let g = Grid1D::centered(256, 40.0, 0.0).unwrap();
        let psi = gaussian_packet(&g, 0.0, 1.0, 1.0).unwrap();
        let v = Potential::Harmonic { omega: 0.7, center: 0.5 };
        let rec = evolve_window(&psi, &v, 0.0, 10.0, 0.01, 100).unwrap();
        for s in &rec.snapshots {
            assert!((s.norm_sq().sqrt() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn strang_is_second_order() {
        let g = Grid1D::centered(256, 30.0, 0.0).unwrap();
        let p0 = hermite_function(&g, 0, 1.0, 0.0).unwrap();
        let p1 = hermite_function(&g, 1, 1.0, 0.0).unwrap();
        let psi = crate::field::superpose(&[(C64::new(1.0, 0.0), &p0), (C64::new(0.3, 0.8), &gaussian_packet(&g, 1.0, 0.5, 1.0).unwrap()), (C64::new(1.0, 0.0), &p1)]).unwrap();
        let v = Potential::Harmonic { omega: 1.3, center: 0.2 };
        let run = |dt: f64| evolve_window(&psi, &v, 0.0, 1.0, dt, (1.0 / dt).round() as usize).unwrap().last().clone();
        let reference = run(0.1 / 4.0);
        let e1 = max_diff(run(0.1).values(), reference.values());
        let e2 = max_diff(run(0.05).values(), reference.values());
        assert!(e1 / e2 >= 3.5, "ratio {}", e1 / e2);
    }

    #[test]
    fn separable_pair_matches_product_of_single_evolutions() {
        let g = Grid1D::centered(64, 24.0, 0.0).unwrap();
        let a = gaussian_packet(&g, -1.0, 0.5, 1.0).unwrap();
        let b = gaussian_packet(&g, 1.5, -0.3, 1.2).unwrap();
        let va = Potential::Harmonic { omega: 0.8, center: 0.0 };
        let vb = Potential::Barrier { height: 0.5, width: 1.0, center: 3.0 };
        let pair = PairPotential { first: va.clone(), second: vb.clone() };
        let psi = TwoParticleField::product(&a, &b).unwrap();
        let rec = evolve_pair_window(&psi, &pair, 0.0, 1.0, 0.01, 100).unwrap();
        let ra = evolve_window(&a, &va, 0.0, 1.0, 0.01, 100).unwrap();
        let rb = evolve_window(&b, &vb, 0.0, 1.0, 0.01, 100).unwrap();
        let expect = TwoParticleField::product(ra.last(), rb.last()).unwrap();
        assert!(max_diff(rec.last().values(), expect.values()) < 1e-10);
    }

    #[test]
    fn pair_norm_conserved_over_thousand_steps() {
        let g = Grid1D::centered(64, 24.0, 0.0).unwrap();
        let psi = TwoParticleField::from_fn(g, g, 0.0, |x1, x2| {
            let u = (x1 + x2) / 2f64.sqrt();
            let w = (x1 - x2) / 2f64.sqrt();
            C64::from_polar((-u * u / 8.0 - w * w / 0.5).exp(), 0.3 * x1)
        })
        .unwrap()
        .normalized()
        .unwrap();
        let pot = PairPotential {
            first: Potential::Harmonic { omega: 0.5, center: 0.0 },
            second: Potential::Free,
        };
        let rec = evolve_pair_window(&psi, &pair_or(pot), 0.0, 10.0, 0.01, 1000).unwrap();
        assert!((rec.last().norm_sq() - 1.0).abs() < 1e-12);
    }

    fn pair_or(p: PairPotential) -> PairPotential {
        p
    }

    #[test]
    fn entangled_pair_spreads_along_normal_modes() {
        // Free kinetic energy separates in u = (x1+x2)/sqrt2, w = (x1-x2)/sqrt2,
        // so each mode's variance follows the 1D law s^2 + t^2 / (4 s^2).
        let g = Grid1D::centered(128, 40.0, 0.0).unwrap();
        let (su, sw) = (2.0f64, 0.6f64);
        let psi = TwoParticleField::from_fn(g, g, 0.0, |x1, x2| {
            let u = (x1 + x2) / 2f64.sqrt();
            let w = (x1 - x2) / 2f64.sqrt();
            C64::new((-u * u / (4.0 * su * su) - w * w / (4.0 * sw * sw)).exp(), 0.0)
        })
        .unwrap()
        .normalized()
        .unwrap();
        let rec = evolve_pair_window(&psi, &PairPotential::free(), 0.0, 2.0, 0.01, 200).unwrap();
        let fin = rec.last();
        let (mut mu, mut mw, mut tot) = (0.0, 0.0, 0.0);
        for (i, x1) in g.points().enumerate() {
            for (j, x2) in g.points().enumerate() {
                let d = fin.at(i, j).norm_sqr();
                let u = (x1 + x2) / 2f64.sqrt();
                let w = (x1 - x2) / 2f64.sqrt();
                mu += d * u * u;
                mw += d * w * w;
                tot += d;
            }
        }
        let t = 2.0;
        assert!((mu / tot - (su * su + t * t / (4.0 * su * su))).abs() < 1e-6);
        assert!((mw / tot - (sw * sw + t * t / (4.0 * sw * sw))).abs() < 1e-6);
    }

    #[test]
    fn clifford_relations_hold() {
        let r = DiracRep::standard();
        let g00 = mat_mul(&r.gamma0, &r.gamma0);
        let g11 = mat_mul(&r.gamma1, &r.gamma1);
        let a = mat_mul(&r.gamma0, &r.gamma1);
        let b = mat_mul(&r.gamma1, &r.gamma0);
        for i in 0..2 {
            for j in 0..2 {
                let id = if i == j { 1.0 } else { 0.0 };
                assert!((g00[i][j] - id).norm() < 1e-15);
                assert!((g11[i][j] + id).norm() < 1e-15);
                assert!((a[i][j] + b[i][j]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn rest_spinor_rotates_phase_only() {
        let g = Grid1D::centered(64, 20.0, 0.0).unwrap();
        let m = 1.3;
        let psi = dirac_rest_state(&g, m, 0.0).unwrap();
        let dt = 0.37;
        let next = dirac_step(&psi, m, dt).unwrap();
        let phase = C64::from_polar(1.0, -m * dt);
        for i in 0..g.len() {
            assert!((next.upper()[i] - psi.upper()[i] * phase).norm() < 1e-13);
            assert!((next.lower()[i] - psi.lower()[i] * phase).norm() < 1e-13);
        }
    }

    #[test]
    fn dirac_norm_conserved_and_reversible() {
        let g = Grid1D::centered(256, 60.0, 0.0).unwrap();
        let psi = dirac_packet(&g, 0.0, 1.0, 2.0, 1.0, 1.0, 0.0).unwrap();
        let rec = evolve_dirac_window(&psi, 1.0, 0.0, 10.0, 0.01, 1000).unwrap();
        assert!((rec.last().norm_sq() - 1.0).abs() < 1e-12);
        let back = evolve_dirac_window(rec.last(), 1.0, 10.0, 0.0, 0.01, 1000).unwrap();
        assert!(max_diff(back.last().upper(), psi.upper()) < 1e-10);
        assert!(max_diff(back.last().lower(), psi.lower()) < 1e-10);
    }

    #[test]
    fn dirac_packet_moves_at_group_velocity() {
        // Centroid oracle: a positive-energy packet's centroid moves uniformly at
        // the |g(k)|^2-weighted mean of k / E(k), which for this narrow spectrum
        // lies within 4e-5 of p / E(p).
        let g = Grid1D::centered(2048, 409.6, 0.0).unwrap();
        let (p, m, w) = (3.0, 1.0, 10.0);
        let psi = dirac_packet(&g, -40.0, p, w, m, 1.0, 0.0).unwrap();
        let rec = evolve_dirac_window(&psi, m, 0.0, 60.0, 0.5, 120).unwrap();
        let v = (rec.last().mean_position() - psi.mean_position()) / 60.0;
        let e = (p * p + m * m).sqrt();
        assert!((v - p / e).abs() < 1e-4, "{v} vs {}", p / e);
    }
}
