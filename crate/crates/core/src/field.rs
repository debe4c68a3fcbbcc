//! Wavefunction storage on uniform grids, quadrature and the conserved overlap.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{same_time, Grid1D};
use crate::spectral;

/// Default cutoff below which |a| cannot seed a run.
pub const DEGENERATE_EPS: f64 = 1e-8;

/// Threshold on |psi| at the grid margins for the vanishing-boundary assumption.
pub const BOUNDARY_LEAK_TOL: f64 = 1e-12;

const NORM_TOL: f64 = 1e-10;

fn check_finite(values: &[C64]) -> Result<()> {
    match values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

fn margin_width(n: usize) -> usize {
    (n / 32).max(2)
}

/// Complex amplitudes of one particle on a [`Grid1D`] at a tagged time.
#[derive(Clone, Debug, PartialEq)]
pub struct WavefunctionField {
    grid: Grid1D,
    values: Vec<C64>,
    time: f64,
    normalized: bool,
}

impl WavefunctionField {
    pub fn new(grid: Grid1D, values: Vec<C64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        check_finite(&values)?;
        Ok(Self {
            grid,
            values,
            time,
            normalized: false,
        })
    }

    pub fn from_fn(grid: Grid1D, time: f64, f: impl Fn(f64) -> C64) -> Result<Self> {
        let values = grid.points().map(f).collect();
        Self::new(grid, values, time)
    }

    pub(crate) fn from_parts_unchecked(grid: Grid1D, values: Vec<C64>, time: f64, normalized: bool) -> Self {
        Self {
            grid,
            values,
            time,
            normalized,
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    /// Scales to unit norm and sets the `normalized` flag.
    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm_sq().sqrt();
        if !(n > 0.0) {
            return Err(Error::ZeroNorm);
        }
        self.values.iter_mut().for_each(|v| *v /= n);
        self.normalized = true;
        Ok(self)
    }

    /// Clears or re-asserts the flag after checking the discrete norm.
    pub fn check_normalized(&self) -> bool {
        (self.norm_sq() - 1.0).abs() < NORM_TOL
    }

    pub fn scaled(&self, c: C64) -> Self {
        let values = self.values.iter().map(|v| v * c).collect();
        Self::from_parts_unchecked(self.grid, values, self.time, self.normalized && (c.norm() - 1.0).abs() < 1e-15)
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn derivative(&self) -> Vec<C64> {
        spectral::derivative(&self.values, &self.grid)
    }

    /// Largest |psi| within the outer 1/32 of the grid on either side.
    pub fn boundary_leak(&self) -> f64 {
        boundary_max(&self.values, self.grid.len())
    }

    pub fn mean_position(&self) -> f64 {
        let d = self.density();
        let w: f64 = d.iter().sum();
        d.iter().zip(self.grid.points()).map(|(p, x)| p * x).sum::<f64>() / w
    }

    pub fn position_variance(&self) -> f64 {
        let d = self.density();
        let w: f64 = d.iter().sum();
        let m = self.mean_position();
        d.iter()
            .zip(self.grid.points())
            .map(|(p, x)| p * (x - m) * (x - m))
            .sum::<f64>()
            / w
    }
}

fn boundary_max(values: &[C64], n: usize) -> f64 {
    let m = margin_width(n);
    values[..m]
        .iter()
        .chain(&values[n - m..])
        .map(|v| v.norm())
        .fold(0.0, f64::max)
}

/// Discrete <bra|ket> = sum conj(bra) ket dx on the shared grid.
pub fn inner_product(bra: &WavefunctionField, ket: &WavefunctionField) -> Result<C64> {
    bra.grid.ensure_same(&ket.grid)?;
    Ok(dot(&bra.values, &ket.values) * bra.grid.spacing())
}

pub(crate) fn dot(bra: &[C64], ket: &[C64]) -> C64 {
    bra.iter().zip(ket).map(|(b, k)| b.conj() * k).sum()
}

/// The overlap a = <psi_f|psi_i>, constant under joint unitary evolution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Amplitude {
    value: C64,
}

impl Amplitude {
    /// Wraps a value, refusing |a| <= `eps`.
    pub fn new(value: C64, eps: f64) -> Result<Self> {
        let magnitude = value.norm();
        if !(magnitude > eps) {
            return Err(Error::DegenerateOverlap {
                magnitude,
                threshold: eps,
            });
        }
        Ok(Self { value })
    }

    pub fn value(&self) -> C64 {
        self.value
    }

    pub fn magnitude(&self) -> f64 {
        self.value.norm()
    }

    /// Probability of the final state given the initial one, |a|^2.
    pub fn weight(&self) -> f64 {
        self.value.norm_sqr()
    }
}

pub fn amplitude(psi_f: &WavefunctionField, psi_i: &WavefunctionField) -> Result<Amplitude> {
    amplitude_with_eps(psi_f, psi_i, DEGENERATE_EPS)
}

pub fn amplitude_with_eps(psi_f: &WavefunctionField, psi_i: &WavefunctionField, eps: f64) -> Result<Amplitude> {
    if !same_time(psi_f.time, psi_i.time) {
        return Err(Error::TimeMismatch {
            left: psi_f.time,
            right: psi_i.time,
        });
    }
    Amplitude::new(inner_product(psi_f, psi_i)?, eps)
}

/// Normalized Gaussian with carrier momentum: (2 pi w^2)^(-1/4) exp(-(x-c)^2 / 4w^2 + i p x).
pub fn gaussian_packet(grid: &Grid1D, center: f64, momentum: f64, width: f64) -> Result<WavefunctionField> {
    gaussian_packet_at(grid, center, momentum, width, 0.0)
}

pub fn gaussian_packet_at(grid: &Grid1D, center: f64, momentum: f64, width: f64, time: f64) -> Result<WavefunctionField> {
    if !(width > 2.0 * grid.spacing()) {
        return Err(Error::PacketTooNarrow {
            width,
            spacing: grid.spacing(),
        });
    }
    let (lo, hi) = (center - 6.0 * width, center + 6.0 * width);
    if lo < grid.origin() || hi > grid.end() {
        return Err(Error::PacketTooWide {
            lo,
            hi,
            grid_lo: grid.origin(),
            grid_hi: grid.end(),
        });
    }
    WavefunctionField::from_fn(*grid, time, |x| {
        let d = x - center;
        C64::from_polar((-d * d / (4.0 * width * width)).exp(), momentum * x)
    })?
    .normalized()
}

/// Harmonic-oscillator eigenfunction `n` with frequency `omega`, from the
/// normalized three-term recurrence (stable for large n).
pub fn hermite_function(grid: &Grid1D, n: usize, omega: f64, center: f64) -> Result<WavefunctionField> {
    let s = omega.sqrt();
    let values = grid
        .points()
        .map(|x| C64::new(hermite_value(n, s * (x - center)) * s.sqrt(), 0.0))
        .collect();
    let mut f = WavefunctionField::new(*grid, values, 0.0)?;
    f.normalized = f.check_normalized();
    Ok(f)
}

/// phi_n(xi) for unit frequency.
pub fn hermite_value(n: usize, xi: f64) -> f64 {
    let p0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * xi * xi).exp();
    if n == 0 {
        return p0;
    }
    let mut prev = p0;
    let mut cur = std::f64::consts::SQRT_2 * xi * p0;
    for k in 1..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * xi * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Linear combination of fields on one grid; the result is normalized.
pub fn superpose(terms: &[(C64, &WavefunctionField)]) -> Result<WavefunctionField> {
    let first = terms
        .first()
        .ok_or_else(|| Error::Config("empty superposition".into()))?
        .1;
    let mut acc = vec![C64::new(0.0, 0.0); first.grid.len()];
    for (c, f) in terms {
        first.grid.ensure_same(&f.grid)?;
        for (a, v) in acc.iter_mut().zip(&f.values) {
            *a += c * v;
        }
    }
    WavefunctionField::new(first.grid, acc, first.time)?.normalized()
}

/// Two-particle amplitudes on the product grid, row-major with x1 as the slow index.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoParticleField {
    grid1: Grid1D,
    grid2: Grid1D,
    values: Vec<C64>,
    time: f64,
}

/// Which particle of a pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Particle {
    First,
    Second,
}

impl Particle {
    pub fn other(self) -> Self {
        match self {
            Particle::First => Particle::Second,
            Particle::Second => Particle::First,
        }
    }
}

impl TwoParticleField {
    pub fn new(grid1: Grid1D, grid2: Grid1D, values: Vec<C64>, time: f64) -> Result<Self> {
        if values.len() != grid1.len() * grid2.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a {}x{} product grid",
                values.len(),
                grid1.len(),
                grid2.len()
            )));
        }
        check_finite(&values)?;
        Ok(Self {
            grid1,
            grid2,
            values,
            time,
        })
    }

    pub fn from_fn(grid1: Grid1D, grid2: Grid1D, time: f64, f: impl Fn(f64, f64) -> C64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid1.len() * grid2.len());
        for x1 in grid1.points() {
            for x2 in grid2.points() {
                values.push(f(x1, x2));
            }
        }
        Self::new(grid1, grid2, values, time)
    }

    pub fn product(first: &WavefunctionField, second: &WavefunctionField) -> Result<Self> {
        if !same_time(first.time, second.time) {
            return Err(Error::TimeMismatch {
                left: first.time,
                right: second.time,
            });
        }
        let mut values = Vec::with_capacity(first.values.len() * second.values.len());
        for a in &first.values {
            for b in &second.values {
                values.push(a * b);
            }
        }
        Self::new(first.grid, second.grid, values, first.time)
    }

    pub(crate) fn from_parts_unchecked(grid1: Grid1D, grid2: Grid1D, values: Vec<C64>, time: f64) -> Self {
        Self {
            grid1,
            grid2,
            values,
            time,
        }
    }

    pub fn grid(&self, which: Particle) -> &Grid1D {
        match which {
            Particle::First => &self.grid1,
            Particle::Second => &self.grid2,
        }
    }

    pub fn grids(&self) -> (&Grid1D, &Grid1D) {
        (&self.grid1, &self.grid2)
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn at(&self, i1: usize, i2: usize) -> C64 {
        self.values[i1 * self.grid2.len() + i2]
    }

    pub fn cell(&self) -> f64 {
        self.grid1.spacing() * self.grid2.spacing()
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.cell()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm_sq().sqrt();
        if !(n > 0.0) {
            return Err(Error::ZeroNorm);
        }
        self.values.iter_mut().for_each(|v| *v /= n);
        Ok(self)
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn ensure_same_grids(&self, other: &TwoParticleField) -> Result<()> {
        self.grid1.ensure_same(&other.grid1)?;
        self.grid2.ensure_same(&other.grid2)
    }

    /// Partial derivative with respect to the coordinate of `which`.
    pub fn derivative(&self, which: Particle) -> Vec<C64> {
        match which {
            Particle::First => spectral::derivative_cols(&self.values, &self.grid1, self.grid2.len()),
            Particle::Second => spectral::derivative_rows(&self.values, &self.grid2),
        }
    }

    /// Integrates `f*` against the coordinate of `which`, leaving a function of the other one.
    pub fn contract(&self, which: Particle, f: &WavefunctionField) -> Result<Vec<C64>> {
        self.grid(which).ensure_same(f.grid())?;
        Ok(contract_raw(&self.values, self.grid1.len(), self.grid2.len(), which, f.values(), f.grid().spacing()))
    }

    /// Largest |Psi| on the outer frame of the product grid.
    pub fn boundary_leak(&self) -> f64 {
        let (n1, n2) = (self.grid1.len(), self.grid2.len());
        let (m1, m2) = (margin_width(n1), margin_width(n2));
        let mut worst: f64 = 0.0;
        for i in 0..n1 {
            for j in 0..n2 {
                if i < m1 || i >= n1 - m1 || j < m2 || j >= n2 - m2 {
                    worst = worst.max(self.values[i * n2 + j].norm());
                }
            }
        }
        worst
    }

    /// Position marginal of |Psi|^2 for one particle.
    pub fn marginal_density(&self, which: Particle) -> Vec<f64> {
        let (n1, n2) = (self.grid1.len(), self.grid2.len());
        match which {
            Particle::First => (0..n1)
                .map(|i| self.values[i * n2..(i + 1) * n2].iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid2.spacing())
                .collect(),
            Particle::Second => (0..n2)
                .map(|j| (0..n1).map(|i| self.values[i * n2 + j].norm_sqr()).sum::<f64>() * self.grid1.spacing())
                .collect(),
        }
    }
}

pub(crate) fn contract_raw(values: &[C64], n1: usize, n2: usize, which: Particle, f: &[C64], dx: f64) -> Vec<C64> {
    match which {
        Particle::First => {
            let mut out = vec![C64::new(0.0, 0.0); n2];
            for i in 0..n1 {
                let c = f[i].conj() * dx;
                for (o, v) in out.iter_mut().zip(&values[i * n2..(i + 1) * n2]) {
                    *o += c * v;
                }
            }
            out
        }
        Particle::Second => (0..n1)
            .map(|i| dot(f, &values[i * n2..(i + 1) * n2]) * dx)
            .collect(),
    }
}

pub fn inner_product_2d(bra: &TwoParticleField, ket: &TwoParticleField) -> Result<C64> {
    bra.ensure_same_grids(ket)?;
    Ok(dot(&bra.values, &ket.values) * bra.cell())
}

pub fn amplitude_2d(psi_f: &TwoParticleField, psi_i: &TwoParticleField) -> Result<Amplitude> {
    if !same_time(psi_f.time, psi_i.time) {
        return Err(Error::TimeMismatch {
            left: psi_f.time,
            right: psi_i.time,
        });
    }
    Amplitude::new(inner_product_2d(psi_f, psi_i)?, DEGENERATE_EPS)
}

/// Two-component Dirac spinor on a line.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinorField {
    grid: Grid1D,
    upper: Vec<C64>,
    lower: Vec<C64>,
    time: f64,
}

impl SpinorField {
    pub fn new(grid: Grid1D, upper: Vec<C64>, lower: Vec<C64>, time: f64) -> Result<Self> {
        if upper.len() != grid.len() || lower.len() != grid.len() {
            return Err(Error::GridMismatch("spinor component length differs from grid".into()));
        }
        check_finite(&upper)?;
        check_finite(&lower)?;
        Ok(Self {
            grid,
            upper,
            lower,
            time,
        })
    }

    pub(crate) fn from_parts_unchecked(grid: Grid1D, upper: Vec<C64>, lower: Vec<C64>, time: f64) -> Self {
        Self {
            grid,
            upper,
            lower,
            time,
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn upper(&self) -> &[C64] {
        &self.upper
    }

    pub fn lower(&self) -> &[C64] {
        &self.lower
    }

    pub fn component(&self, i: usize) -> [C64; 2] {
        [self.upper[i], self.lower[i]]
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    /// Integral of psi^dagger psi.
    pub fn norm_sq(&self) -> f64 {
        self.upper
            .iter()
            .chain(&self.lower)
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            * self.grid.spacing()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm_sq().sqrt();
        if !(n > 0.0) {
            return Err(Error::ZeroNorm);
        }
        self.upper.iter_mut().chain(self.lower.iter_mut()).for_each(|v| *v /= n);
        Ok(self)
    }

    pub fn boundary_leak(&self) -> f64 {
        let n = self.grid.len();
        boundary_max(&self.upper, n).max(boundary_max(&self.lower, n))
    }

    /// Centroid of psi^dagger psi.
    pub fn mean_position(&self) -> f64 {
        let (mut w, mut m) = (0.0, 0.0);
        for (i, x) in self.grid.points().enumerate() {
            let d = self.upper[i].norm_sqr() + self.lower[i].norm_sqr();
            w += d;
            m += d * x;
        }
        m / w
    }
}

/// The Dirac overlap a = integral of psi_f-bar gamma^0 psi_i = integral of psi_f^dagger psi_i.
pub fn dirac_amplitude(psi_f: &SpinorField, psi_i: &SpinorField) -> Result<Amplitude> {
    psi_f.grid.ensure_same(&psi_i.grid)?;
    if !same_time(psi_f.time, psi_i.time) {
        return Err(Error::TimeMismatch {
            left: psi_f.time,
            right: psi_i.time,
        });
    }
    let v = (dot(&psi_f.upper, &psi_i.upper) + dot(&psi_f.lower, &psi_i.lower)) * psi_f.grid.spacing();
    Amplitude::new(v, DEGENERATE_EPS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> Grid1D {
        Grid1D::centered(512, 40.0, 0.0).unwrap()
    }

    #[test]
    fn normalized_self_overlap_is_one() {
        let g = grid();
        let psi = gaussian_packet(&g, 0.5, 1.3, 1.0).unwrap();
        let ip = inner_product(&psi, &psi).unwrap();
        assert!((ip - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(psi.is_normalized());
    }

    #[test]
    fn oscillator_ground_and_first_are_orthogonal() {
        let g = grid();
        let p0 = hermite_function(&g, 0, 1.0, 0.0).unwrap();
        let p1 = hermite_function(&g, 1, 1.0, 0.0).unwrap();
        assert!(inner_product(&p0, &p1).unwrap().norm() < 1e-14);
        assert!(p0.check_normalized() && p1.check_normalized());
    }

    // High-resolution quadrature oracle: 8x the points on the same interval.
    fn refined_overlap(center_a: f64, p_a: f64, center_b: f64, p_b: f64, width: f64) -> C64 {
        let n = 512 * 8;
        let dx = 40.0 / n as f64;
        let g = |x: f64, c: f64, p: f64| {
            C64::from_polar(
                (2.0 * std::f64::consts::PI * width * width).powf(-0.25) * (-(x - c) * (x - c) / (4.0 * width * width)).exp(),
                p * x,
            )
        };
        (0..n)
            .map(|i| -20.0 + i as f64 * dx)
            .map(|x| g(x, center_a, p_a).conj() * g(x, center_b, p_b) * dx)
            .sum()
    }

    #[test]
    fn displaced_gaussian_overlap_matches_refined_quadrature() {
        let g = grid();
        let a = gaussian_packet(&g, 0.0, 0.0, 1.0).unwrap();
        let b = gaussian_packet(&g, 2.0, 0.0, 1.0).unwrap();
        let ip = inner_product(&a, &b).unwrap();
        let oracle = refined_overlap(0.0, 0.0, 2.0, 0.0, 1.0);
        assert!((ip - oracle).norm() < 1e-12, "{ip} vs {oracle}");
        // closed form exp(-d^2 / 8 sigma^2)
        assert_relative_eq!(ip.re, (-0.5f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn amplitude_of_shifted_moving_packets() {
        let g = grid();
        let psi_i = gaussian_packet(&g, 0.0, 1.0, 1.0).unwrap();
        let psi_f = gaussian_packet(&g, 1.0, 1.0, 1.0).unwrap();
        let a = amplitude(&psi_f, &psi_i).unwrap();
        let oracle = refined_overlap(1.0, 1.0, 0.0, 1.0, 1.0);
        assert!((a.value() - oracle).norm() < 1e-12);
    }

    #[test]
    fn identical_states_give_unit_amplitude() {
        let g = grid();
        let psi = gaussian_packet(&g, -1.0, 0.4, 1.5).unwrap();
        let a = amplitude(&psi, &psi).unwrap();
        assert!((a.value() - 1.0).norm() < 1e-14);
    }

    #[test]
    fn orthogonal_states_are_degenerate() {
        let g = grid();
        let p0 = hermite_function(&g, 0, 1.0, 0.0).unwrap();
        let p1 = hermite_function(&g, 1, 1.0, 0.0).unwrap();
        assert!(matches!(amplitude(&p1, &p0), Err(Error::DegenerateOverlap { .. })));
    }

    #[test]
    fn amplitude_requires_equal_time_tags() {
        let g = grid();
        let a = gaussian_packet(&g, 0.0, 0.0, 1.0).unwrap();
        let b = a.clone().with_time(0.5);
        assert!(matches!(amplitude(&a, &b), Err(Error::TimeMismatch { .. })));
    }

    #[test]
    fn grid_mismatch_is_structural() {
        let a = gaussian_packet(&grid(), 0.0, 0.0, 1.0).unwrap();
        let g2 = Grid1D::centered(256, 40.0, 0.0).unwrap();
        let b = gaussian_packet(&g2, 0.0, 0.0, 1.0).unwrap();
        assert!(matches!(inner_product(&a, &b), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn packet_at_rest_is_real_symmetric() {
        let g = grid();
        let psi = gaussian_packet(&g, 0.0, 0.0, 1.0).unwrap();
        let n = g.len();
        for i in 1..n {
            assert!(psi.values()[i].im.abs() < 1e-15 && psi.values()[i].re > 0.0);
            // grid is symmetric about 0 around index n/2
            assert!((psi.values()[i] - psi.values()[n - i]).norm() < 1e-15);
        }
    }

    #[test]
    fn packet_moments_match_requested_center_and_width() {
        let g = Grid1D::centered(1024, 40.0, 0.0).unwrap();
        let psi = gaussian_packet(&g, 1.25, 2.0, 1.3).unwrap();
        assert!((psi.mean_position() - 1.25).abs() < 1e-8);
        assert!((psi.position_variance() - 1.3 * 1.3).abs() < 1e-8);
    }

    #[test]
    fn momentum_packet_peaks_at_carrier_wavenumber() {
        let g = Grid1D::centered(512, 40.0, 0.0).unwrap();
        let p = 2.0 * std::f64::consts::PI / g.period() * 19.0;
        let psi = gaussian_packet(&g, 0.0, p, 2.0).unwrap();
        let mut spec = psi.values().to_vec();
        spectral::forward(&mut spec);
        let peak = spec
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap()
            .0;
        assert_eq!(peak, 19);
    }

    #[test]
    fn packet_support_checks() {
        let g = grid();
        assert!(matches!(gaussian_packet(&g, 0.0, 0.0, 0.1), Err(Error::PacketTooNarrow { .. })));
        assert!(matches!(gaussian_packet(&g, 15.0, 0.0, 1.0), Err(Error::PacketTooWide { .. })));
    }

    #[test]
    fn product_contraction_recovers_factor() {
        let g = Grid1D::centered(64, 20.0, 0.0).unwrap();
        let a = gaussian_packet(&g, -1.0, 0.5, 1.0).unwrap();
        let b = gaussian_packet(&g, 1.0, -0.5, 1.2).unwrap();
        let psi = TwoParticleField::product(&a, &b).unwrap();
        assert!((psi.norm_sq() - 1.0).abs() < 1e-13);
        let red = psi.contract(Particle::First, &a).unwrap();
        for (r, v) in red.iter().zip(b.values()) {
            assert!((r - v).norm() < 1e-13);
        }
        let red = psi.contract(Particle::Second, &b).unwrap();
        for (r, v) in red.iter().zip(a.values()) {
            assert!((r - v).norm() < 1e-13);
        }
    }
}
