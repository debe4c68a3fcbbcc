//! Density, current and velocity fields: the standard single-wavefunction
//! model, the two-wavefunction (initial/final) model, its two-particle
//! reductions, and the 1+1D Dirac current.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{
    contract_raw, Amplitude, Particle, SpinorField, TwoParticleField, WavefunctionField, DEGENERATE_EPS,
};
use crate::grid::{same_time, Grid1D};
use crate::propagate::{DiracRep, EvolutionRecord, Snapshot};
use crate::spectral;
use crate::trajectory::CausalCharacter;

/// Velocity is undefined where |density| falls below this fraction of max |density|.
pub const TURN_EPS_REL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Standard,
    Symmetric,
}

/// Which normalization divides the product psi_f^* psi_i.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Divide by the complex amplitude a, then take the real part.
    #[default]
    Complex,
    /// Take the real part, then divide by Re a.
    RealPart,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuidanceField {
    pub grid: Grid1D,
    pub time: f64,
    pub model: Model,
    pub density: Vec<f64>,
    pub current: Vec<f64>,
    /// `None` where the density is too small for j / rho to mean anything.
    pub velocity: Vec<Option<f64>>,
    /// Absolute density cutoff used for `velocity`.
    pub threshold: f64,
}

impl GuidanceField {
    pub fn from_parts(grid: Grid1D, time: f64, model: Model, density: Vec<f64>, current: Vec<f64>) -> Self {
        let scale = density.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        let threshold = TURN_EPS_REL * scale;
        let velocity = density
            .iter()
            .zip(&current)
            .map(|(&r, &j)| if r.abs() >= threshold && r != 0.0 { Some(j / r) } else { None })
            .collect();
        Self {
            grid,
            time,
            model,
            density,
            current,
            velocity,
            threshold,
        }
    }

    /// Discrete integral of the density.
    pub fn total(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.grid.spacing()
    }

    pub fn negativity_fraction(&self) -> f64 {
        negativity_fraction(&self.density)
    }

    /// Length of the region where the density is negative.
    pub fn negative_measure(&self) -> f64 {
        self.density.iter().filter(|r| **r < 0.0).count() as f64 * self.grid.spacing()
    }

    /// Fraction of the integral of |rho| within `radius` of `center`.
    pub fn concentration(&self, center: f64, radius: f64) -> f64 {
        let (mut inside, mut total) = (0.0, 0.0);
        for (x, r) in self.grid.points().zip(&self.density) {
            total += r.abs();
            if (x - center).abs() <= radius {
                inside += r.abs();
            }
        }
        if total > 0.0 {
            inside / total
        } else {
            0.0
        }
    }

    /// Largest |v_a - v_b| over points where both are defined and both
    /// densities exceed `rel_floor * max |rho|`.
    pub fn max_velocity_difference(&self, other: &GuidanceField, rel_floor: f64) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        let fa = rel_floor * self.density.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        let fb = rel_floor * other.density.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        let mut worst: f64 = 0.0;
        for i in 0..self.density.len() {
            if self.density[i].abs() < fa || other.density[i].abs() < fb {
                continue;
            }
            if let (Some(a), Some(b)) = (self.velocity[i], other.velocity[i]) {
                worst = worst.max((a - b).abs());
            }
        }
        Ok(worst)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,density,current,velocity,defined\n");
        for (i, x) in self.grid.points().enumerate() {
            let (v, d) = match self.velocity[i] {
                Some(v) => (v, 1),
                None => (f64::NAN, 0),
            };
            s.push_str(&format!("{x},{},{},{v},{d}\n", self.density[i], self.current[i]));
        }
        s
    }
}

/// Integral of the negative part over the integral of the magnitude.
pub fn negativity_fraction(density: &[f64]) -> f64 {
    let (mut neg, mut abs) = (0.0, 0.0);
    for &r in density {
        abs += r.abs();
        if r < 0.0 {
            neg -= r;
        }
    }
    if abs > 0.0 {
        neg / abs
    } else {
        0.0
    }
}

/// Standard model: rho = |psi|^2, j = Im(psi^* psi'), v = j / rho.
pub fn bohm_velocity(psi: &WavefunctionField) -> GuidanceField {
    let d = psi.derivative();
    let density = psi.values().iter().map(|v| v.norm_sqr()).collect();
    let current = psi.values().iter().zip(&d).map(|(v, dv)| (v.conj() * dv).im).collect();
    GuidanceField::from_parts(*psi.grid(), psi.time(), Model::Standard, density, current)
}

pub fn symmetric_fields(psi_i: &WavefunctionField, psi_f: &WavefunctionField, a: &Amplitude) -> Result<GuidanceField> {
    symmetric_fields_with(psi_i, psi_f, a, Normalization::Complex)
}

/// Two-wavefunction fields rho = Re[psi_f^* psi_i / a] and
/// j = Re[(psi_f^* psi_i' - psi_f'^* psi_i) / (2 i a)].
pub fn symmetric_fields_with(
    psi_i: &WavefunctionField,
    psi_f: &WavefunctionField,
    a: &Amplitude,
    normalization: Normalization,
) -> Result<GuidanceField> {
    psi_i.grid().ensure_same(psi_f.grid())?;
    if !same_time(psi_i.time(), psi_f.time()) {
        return Err(Error::TimeMismatch {
            left: psi_i.time(),
            right: psi_f.time(),
        });
    }
    let (density, current) = symmetric_density_current(
        psi_i.values(),
        psi_f.values(),
        &psi_i.derivative(),
        &psi_f.derivative(),
        a.value(),
        normalization,
    )?;
    Ok(GuidanceField::from_parts(*psi_i.grid(), psi_i.time(), Model::Symmetric, density, current))
}

fn symmetric_density_current(
    psi_i: &[C64],
    psi_f: &[C64],
    d_i: &[C64],
    d_f: &[C64],
    a: C64,
    normalization: Normalization,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let two_i = C64::new(0.0, 2.0);
    let n = psi_i.len();
    let mut density = Vec::with_capacity(n);
    let mut current = Vec::with_capacity(n);
    match normalization {
        Normalization::Complex => {
            let inv = 1.0 / a;
            for k in 0..n {
                let prod = psi_f[k].conj() * psi_i[k];
                let flux = psi_f[k].conj() * d_i[k] - d_f[k].conj() * psi_i[k];
                density.push((prod * inv).re);
                current.push((flux * inv / two_i).re);
            }
        }
        Normalization::RealPart => {
            if !(a.re.abs() > DEGENERATE_EPS) {
                return Err(Error::DegenerateOverlap {
                    magnitude: a.re.abs(),
                    threshold: DEGENERATE_EPS,
                });
            }
            for k in 0..n {
                let prod = psi_f[k].conj() * psi_i[k];
                let flux = psi_f[k].conj() * d_i[k] - d_f[k].conj() * psi_i[k];
                density.push(prod.re / a.re);
                current.push((flux / two_i).re / a.re);
            }
        }
    }
    Ok((density, current))
}

/// Pairs the snapshots of a forward and a backward record by time, ascending.
pub fn paired_snapshots<'a, F: Snapshot>(
    record_i: &'a EvolutionRecord<F>,
    record_f: &'a EvolutionRecord<F>,
) -> Result<Vec<(&'a F, &'a F)>> {
    let a = record_i.ascending();
    let b = record_f.ascending();
    if a.len() != b.len() {
        return Err(Error::InvalidWindow(format!(
            "records hold {} and {} snapshots",
            a.len(),
            b.len()
        )));
    }
    a.into_iter()
        .zip(b)
        .map(|(x, y)| {
            if same_time(x.time(), y.time()) {
                Ok((x, y))
            } else {
                Err(Error::TimeMismatch {
                    left: x.time(),
                    right: y.time(),
                })
            }
        })
        .collect()
}

/// RMS of the discrete continuity residual at each interior snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityResidual {
    pub times: Vec<f64>,
    pub rms: Vec<f64>,
}

impl ContinuityResidual {
    /// RMS over all interior slices and points.
    pub fn overall(&self) -> f64 {
        (self.rms.iter().map(|r| r * r).sum::<f64>() / self.rms.len() as f64).sqrt()
    }

    pub fn max(&self) -> f64 {
        self.rms.iter().fold(0.0, |m: f64, r| m.max(*r))
    }
}

/// Centered residual (rho[k+1] - rho[k-1]) / (t[k+1] - t[k-1]) + d_x j[k].
fn residual_from_slices(grid: &Grid1D, times: &[f64], rho: &[Vec<f64>], cur: &[Vec<f64>]) -> Result<ContinuityResidual> {
    if times.len() < 3 {
        return Err(Error::WindowTooShort { snapshots: times.len() });
    }
    let mut out = ContinuityResidual {
        times: Vec::new(),
        rms: Vec::new(),
    };
    for k in 1..times.len() - 1 {
        let span = times[k + 1] - times[k - 1];
        let djx = spectral::derivative_real(&cur[k], grid);
        let sum_sq: f64 = (0..grid.len())
            .map(|p| {
                let r = (rho[k + 1][p] - rho[k - 1][p]) / span + djx[p];
                r * r
            })
            .sum();
        out.times.push(times[k]);
        out.rms.push((sum_sq / grid.len() as f64).sqrt());
    }
    Ok(out)
}

/// Residual of d_t rho + d_x j = 0 for the two-wavefunction density, built
/// from a forward record of psi_i and a backward record of psi_f.
pub fn continuity_residual(
    record_i: &EvolutionRecord,
    record_f: &EvolutionRecord,
    a: &Amplitude,
) -> Result<ContinuityResidual> {
    let pairs = paired_snapshots(record_i, record_f)?;
    if pairs.len() < 3 {
        return Err(Error::WindowTooShort { snapshots: pairs.len() });
    }
    let grid = *pairs[0].0.grid();
    let mut times = Vec::new();
    let mut rho = Vec::new();
    let mut cur = Vec::new();
    for (pi, pf) in pairs {
        let g = symmetric_fields(pi, pf, a)?;
        times.push(g.time);
        rho.push(g.density);
        cur.push(g.current);
    }
    residual_from_slices(&grid, &times, &rho, &cur)
}

/// Residual for |psi|^2 and Im(psi^* psi') from a single record.
pub fn standard_continuity_residual(record: &EvolutionRecord) -> Result<ContinuityResidual> {
    let snaps = record.ascending();
    if snaps.len() < 3 {
        return Err(Error::WindowTooShort { snapshots: snaps.len() });
    }
    let grid = *snaps[0].grid();
    let fields: Vec<GuidanceField> = snaps.iter().map(|s| bohm_velocity(s)).collect();
    let times: Vec<f64> = fields.iter().map(|f| f.time).collect();
    let rho: Vec<Vec<f64>> = fields.iter().map(|f| f.density.clone()).collect();
    let cur: Vec<Vec<f64>> = fields.iter().map(|f| f.current.clone()).collect();
    residual_from_slices(&grid, &times, &rho, &cur)
}

/// Contracts a two-particle state with one particle's final wavefunction,
/// (1/N) integral psi_f^*(x_m) Psi(x_1, x_2) dx_m, normalized on the other particle's grid.
pub fn reduce_final_on(psi: &TwoParticleField, measured: Particle, psi_f: &WavefunctionField) -> Result<WavefunctionField> {
    if !same_time(psi.time(), psi_f.time()) {
        return Err(Error::TimeMismatch {
            left: psi.time(),
            right: psi_f.time(),
        });
    }
    let c = psi.contract(measured, psi_f)?;
    let grid = *psi.grid(measured.other());
    let norm = (c.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.spacing()).sqrt();
    if !(norm > DEGENERATE_EPS) {
        return Err(Error::DegenerateReduction {
            norm,
            threshold: DEGENERATE_EPS,
        });
    }
    let values = c.into_iter().map(|v| v / norm).collect();
    Ok(WavefunctionField::from_parts_unchecked(grid, values, psi.time(), true))
}

/// Particle 2's initial wavefunction given particle 1's final one.
pub fn reduce_final(psi_i: &TwoParticleField, psi_f1: &WavefunctionField) -> Result<WavefunctionField> {
    reduce_final_on(psi_i, Particle::First, psi_f1)
}

/// The unnormalized reduction: integral psi_f^*(x_m) Psi(x_1, x_2) dx_m.
pub fn reduce_unnormalized(psi: &TwoParticleField, measured: Particle, psi_f: &WavefunctionField) -> Result<WavefunctionField> {
    let c = psi.contract(measured, psi_f)?;
    Ok(WavefunctionField::from_parts_unchecked(
        *psi.grid(measured.other()),
        c,
        psi.time(),
        false,
    ))
}

/// Integrates `f(Psi_f^*, Psi_i, dPsi_f^*, dPsi_i)` over the other coordinate.
fn integrate_out(
    psi_i: &TwoParticleField,
    psi_f: &TwoParticleField,
    which: Particle,
    with_current: bool,
) -> (Vec<C64>, Vec<C64>) {
    let (g1, g2) = psi_i.grids();
    let (n1, n2) = (g1.len(), g2.len());
    let (di, df) = if with_current {
        (psi_i.derivative(which), psi_f.derivative(which))
    } else {
        (Vec::new(), Vec::new())
    };
    let n_out = if which == Particle::First { n1 } else { n2 };
    let d_other = if which == Particle::First { g2.spacing() } else { g1.spacing() };
    let mut prod = vec![C64::new(0.0, 0.0); n_out];
    let mut flux = vec![C64::new(0.0, 0.0); n_out];
    let (vi, vf) = (psi_i.values(), psi_f.values());
    for r in 0..n1 {
        for c in 0..n2 {
            let k = r * n2 + c;
            let o = if which == Particle::First { r } else { c };
            prod[o] += vf[k].conj() * vi[k];
            if with_current {
                flux[o] += vf[k].conj() * di[k] - df[k].conj() * vi[k];
            }
        }
    }
    prod.iter_mut().for_each(|v| *v *= d_other);
    flux.iter_mut().for_each(|v| *v *= d_other);
    (prod, flux)
}

fn check_pair(psi_i: &TwoParticleField, psi_f: &TwoParticleField) -> Result<()> {
    psi_i.ensure_same_grids(psi_f)?;
    if !same_time(psi_i.time(), psi_f.time()) {
        return Err(Error::TimeMismatch {
            left: psi_i.time(),
            right: psi_f.time(),
        });
    }
    Ok(())
}

/// One particle's velocity field with every other coordinate integrated out
/// of numerator and denominator separately.
pub fn many_body_velocity(
    psi_i: &TwoParticleField,
    psi_f: &TwoParticleField,
    a: &Amplitude,
    which: Particle,
) -> Result<GuidanceField> {
    check_pair(psi_i, psi_f)?;
    let (prod, flux) = integrate_out(psi_i, psi_f, which, true);
    let inv = 1.0 / a.value();
    let two_i = C64::new(0.0, 2.0);
    let density = prod.iter().map(|p| (p * inv).re).collect();
    let current = flux.iter().map(|f| (f * inv / two_i).re).collect();
    Ok(GuidanceField::from_parts(
        *psi_i.grid(which),
        psi_i.time(),
        Model::Symmetric,
        density,
        current,
    ))
}

/// The single-particle signed density Re[(1/a) integral Psi_f^* Psi_i d(other)].
pub fn many_body_density(
    psi_i: &TwoParticleField,
    psi_f: &TwoParticleField,
    a: &Amplitude,
    which: Particle,
) -> Result<Vec<f64>> {
    check_pair(psi_i, psi_f)?;
    let (prod, _) = integrate_out(psi_i, psi_f, which, false);
    let inv = 1.0 / a.value();
    Ok(prod.iter().map(|p| (p * inv).re).collect())
}

/// Standard-model velocity of particle `which` on the configuration grid,
/// Im(Psi^* d_which Psi) / |Psi|^2, row-major like the field itself.
pub fn configuration_velocity(psi: &TwoParticleField, which: Particle) -> Vec<Option<f64>> {
    let d = psi.derivative(which);
    let scale = psi.values().iter().fold(0.0f64, |m, v| m.max(v.norm_sqr()));
    let eps = TURN_EPS_REL * scale;
    psi.values()
        .iter()
        .zip(&d)
        .map(|(v, dv)| {
            let r = v.norm_sqr();
            if r >= eps && r > 0.0 {
                Some((v.conj() * dv).im / r)
            } else {
                None
            }
        })
        .collect()
}

/// Row of integral psi_f^*(x_m) Psi dx_m for raw arrays; exposed for oracles.
pub fn contract_values(psi: &TwoParticleField, measured: Particle, f: &[C64]) -> Vec<C64> {
    let (g1, g2) = psi.grids();
    let dx = psi.grid(measured).spacing();
    contract_raw(psi.values(), g1.len(), g2.len(), measured, f, dx)
}

/// Dirac two-spinor currents and the derived four-velocity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiracGuidance {
    pub grid: Grid1D,
    pub time: f64,
    pub j0: Vec<f64>,
    pub j1: Vec<f64>,
    pub rho0: Vec<f64>,
    pub u0: Vec<Option<f64>>,
    pub u1: Vec<Option<f64>>,
    pub character: Vec<CausalCharacter>,
    pub threshold: f64,
}

impl DiracGuidance {
    /// Invariant u_nu u^nu = u0^2 - u1^2, evaluated in factored form.
    pub fn invariant(&self, i: usize) -> Option<f64> {
        match (self.u0[i], self.u1[i]) {
            (Some(a), Some(b)) => Some((a - b) * (a + b)),
            _ => None,
        }
    }

    /// Largest | |u.u| - 1 | over defined points with rho0 above `floor`.
    pub fn norm_defect(&self, floor: f64) -> f64 {
        (0..self.rho0.len())
            .filter(|&i| self.rho0[i] > floor)
            .filter_map(|i| self.invariant(i))
            .map(|s| (s.abs() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn count(&self, c: CausalCharacter) -> usize {
        self.character.iter().filter(|x| **x == c).count()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,j0,j1,rho0,u0,u1,character\n");
        for (i, x) in self.grid.points().enumerate() {
            s.push_str(&format!(
                "{x},{},{},{},{},{},{}\n",
                self.j0[i],
                self.j1[i],
                self.rho0[i],
                self.u0[i].unwrap_or(f64::NAN),
                self.u1[i].unwrap_or(f64::NAN),
                self.character[i].as_str()
            ));
        }
        s
    }
}

/// j^nu = Re[(1/a) psi_f^dagger gamma^0 gamma^nu psi_i], rho0 = |j_nu j^nu|^(1/2).
pub fn dirac_guidance(psi_i: &SpinorField, psi_f: &SpinorField, a: &Amplitude) -> Result<DiracGuidance> {
    dirac_guidance_with(psi_i, psi_f, a, &DiracRep::standard())
}

pub fn dirac_guidance_with(
    psi_i: &SpinorField,
    psi_f: &SpinorField,
    a: &Amplitude,
    rep: &DiracRep,
) -> Result<DiracGuidance> {
    psi_i.grid().ensure_same(psi_f.grid())?;
    if !same_time(psi_i.time(), psi_f.time()) {
        return Err(Error::TimeMismatch {
            left: psi_i.time(),
            right: psi_f.time(),
        });
    }
    let m0 = rep.current_matrix(0);
    let m1 = rep.current_matrix(1);
    let inv = 1.0 / a.value();
    let n = psi_i.grid().len();
    let sandwich = |m: &[[C64; 2]; 2], f: [C64; 2], i: [C64; 2]| -> C64 {
        let mi = [m[0][0] * i[0] + m[0][1] * i[1], m[1][0] * i[0] + m[1][1] * i[1]];
        f[0].conj() * mi[0] + f[1].conj() * mi[1]
    };
    let mut j0 = Vec::with_capacity(n);
    let mut j1 = Vec::with_capacity(n);
    for k in 0..n {
        let (fi, ff) = (psi_i.component(k), psi_f.component(k));
        j0.push((sandwich(&m0, ff, fi) * inv).re);
        j1.push((sandwich(&m1, ff, fi) * inv).re);
    }
    Ok(dirac_from_currents(*psi_i.grid(), psi_i.time(), j0, j1))
}

pub fn dirac_from_currents(grid: Grid1D, time: f64, j0: Vec<f64>, j1: Vec<f64>) -> DiracGuidance {
    let n = j0.len();
    // (j0 - j1)(j0 + j1) keeps the invariant accurate near the light cone
    let s: Vec<f64> = (0..n).map(|k| (j0[k] - j1[k]) * (j0[k] + j1[k])).collect();
    let rho0: Vec<f64> = s.iter().map(|v| v.abs().sqrt()).collect();
    let scale = rho0.iter().fold(0.0f64, |m, r| m.max(*r));
    let threshold = TURN_EPS_REL * scale;
    let mut u0 = Vec::with_capacity(n);
    let mut u1 = Vec::with_capacity(n);
    let mut character = Vec::with_capacity(n);
    for k in 0..n {
        if rho0[k] >= threshold && rho0[k] > 0.0 {
            u0.push(Some(j0[k] / rho0[k]));
            u1.push(Some(j1[k] / rho0[k]));
        } else {
            u0.push(None);
            u1.push(None);
        }
        character.push(CausalCharacter::of_interval(j0[k], j1[k], 1e-12));
    }
    DiracGuidance {
        grid,
        time,
        j0,
        j1,
        rho0,
        u0,
        u1,
        character,
        threshold,
    }
}

/// Residual of d_t j^0 + d_x j^1 = 0 over paired spinor records.
pub fn dirac_continuity_residual(
    record_i: &EvolutionRecord<SpinorField>,
    record_f: &EvolutionRecord<SpinorField>,
    a: &Amplitude,
) -> Result<ContinuityResidual> {
    let pairs = paired_snapshots(record_i, record_f)?;
    if pairs.len() < 3 {
        return Err(Error::WindowTooShort { snapshots: pairs.len() });
    }
    let grid = *pairs[0].0.grid();
    let mut times = Vec::new();
    let mut rho = Vec::new();
    let mut cur = Vec::new();
    for (pi, pf) in pairs {
        let g = dirac_guidance(pi, pf, a)?;
        times.push(g.time);
        rho.push(g.j0);
        cur.push(g.j1);
    }
    residual_from_slices(&grid, &times, &rho, &cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{amplitude, amplitude_2d, gaussian_packet, hermite_function, superpose};
    use crate::propagate::{dirac_packet, dirac_rest_state, evolve_window, Potential};

    fn grid() -> Grid1D {
        Grid1D::centered(256, 40.0, 0.0).unwrap()
    }

    #[test]
    fn plane_wave_velocity_is_momentum() {
        let g = Grid1D::centered(128, 20.0, 0.0).unwrap();
        let p = 2.0 * std::f64::consts::PI / g.period() * 7.0;
        let psi = WavefunctionField::from_fn(g, 0.0, |x| C64::from_polar(1.0, p * x)).unwrap();
        let f = bohm_velocity(&psi);
        assert!(f.velocity.iter().all(|v| (v.unwrap() - p).abs() < 1e-10));
    }

    #[test]
    fn real_gaussian_has_zero_velocity() {
        let psi = gaussian_packet(&grid(), 0.0, 0.0, 1.0).unwrap();
        let f = bohm_velocity(&psi);
        assert!(f.velocity.iter().flatten().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn spreading_gaussian_follows_analytic_phase_gradient() {
        // For a free packet starting real with width s, v(x, t) = x t / (4 s^4 + t^2).
        let g = Grid1D::centered(512, 60.0, 0.0).unwrap();
        let psi = gaussian_packet(&g, 0.0, 0.0, 1.0).unwrap();
        let rec = evolve_window(&psi, &Potential::Free, 0.0, 1.0, 0.01, 100).unwrap();
        let f = bohm_velocity(rec.last());
        for (i, x) in g.points().enumerate() {
            if x.abs() < 5.0 {
                let exact = x * 1.0 / (4.0 + 1.0);
                assert!((f.velocity[i].unwrap() - exact).abs() < 1e-6, "x = {x}");
            }
        }
    }

    #[test]
    fn identical_pair_reduces_to_standard_fields() {
        let psi = gaussian_packet(&grid(), 0.5, 1.2, 1.3).unwrap();
        let a = amplitude(&psi, &psi).unwrap();
        let sym = symmetric_fields(&psi, &psi, &a).unwrap();
        let std = bohm_velocity(&psi);
        for i in 0..psi.values().len() {
            assert!((sym.density[i] - std.density[i]).abs() < 1e-12);
            if let (Some(a), Some(b)) = (sym.velocity[i], std.velocity[i]) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn oscillator_pair_density_matches_pointwise_evaluation() {
        let g = grid();
        let p0 = hermite_function(&g, 0, 1.0, 0.0).unwrap();
        let p1 = hermite_function(&g, 1, 1.0, 0.0).unwrap();
        let one = C64::new(1.0, 0.0);
        let psi_i = superpose(&[(one, &p0), (one, &p1)]).unwrap();
        let a = amplitude(&p0, &psi_i).unwrap();
        let f = symmetric_fields(&psi_i, &p0, &a).unwrap();
        // phi0^2 + phi0 phi1 written with explicit closed forms
        for (i, x) in g.points().enumerate() {
            let phi0 = (-x * x / 2.0).exp() / std::f64::consts::PI.powf(0.25);
            let phi1 = 2f64.sqrt() * x * phi0;
            assert!((f.density[i] - (phi0 * phi0 + phi0 * phi1)).abs() < 1e-12);
        }
        assert!(f.density.iter().any(|r| *r < -1e-3));
        assert!((f.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn real_part_normalization_still_integrates_to_one() {
        let g = grid();
        let psi_i = gaussian_packet(&g, 0.0, 1.0, 1.0).unwrap();
        let psi_f = gaussian_packet(&g, 0.7, 0.2, 1.4).unwrap();
        let a = amplitude(&psi_f, &psi_i).unwrap();
        let c = symmetric_fields_with(&psi_i, &psi_f, &a, Normalization::Complex).unwrap();
        let r = symmetric_fields_with(&psi_i, &psi_f, &a, Normalization::RealPart).unwrap();
        assert!((c.total() - 1.0).abs() < 1e-12);
        assert!((r.total() - 1.0).abs() < 1e-12);
        assert!(c.density.iter().zip(&r.density).any(|(x, y)| (x - y).abs() > 1e-4));
    }

    #[test]
    fn current_equals_density_times_velocity() {
        let g = grid();
        let psi_i = gaussian_packet(&g, -0.5, 1.0, 1.0).unwrap();
        let psi_f = gaussian_packet(&g, 0.5, -0.4, 1.2).unwrap();
        let a = amplitude(&psi_f, &psi_i).unwrap();
        let f = symmetric_fields(&psi_i, &psi_f, &a).unwrap();
        for i in 0..f.density.len() {
            if let Some(v) = f.velocity[i] {
                assert!((f.current[i] - f.density[i] * v).abs() <= 1e-10 * (1.0 + f.current[i].abs()));
            }
        }
    }

    #[test]
    fn time_mismatch_rejected() {
        let g = grid();
        let psi_i = gaussian_packet(&g, 0.0, 0.0, 1.0).unwrap();
        let psi_f = psi_i.clone().with_time(1.0);
        let a = Amplitude::new(C64::new(1.0, 0.0), 1e-8).unwrap();
        assert!(matches!(symmetric_fields(&psi_i, &psi_f, &a), Err(Error::TimeMismatch { .. })));
    }

    fn pair_records(dt: f64) -> (EvolutionRecord, EvolutionRecord, Amplitude) {
        let g = Grid1D::centered(256, 40.0, 0.0).unwrap();
        let psi_i = gaussian_packet(&g, -1.0, 1.0, 1.0).unwrap();
        let psi_f = gaussian_packet(&g, 1.0, 0.5, 1.3).unwrap().with_time(1.0);
        let v = Potential::Harmonic { omega: 0.5, center: 0.0 };
        let ri = evolve_window(&psi_i, &v, 0.0, 1.0, dt, 1).unwrap();
        let rf = evolve_window(&psi_f, &v, 1.0, 0.0, dt, 1).unwrap();
        let a = amplitude(rf.last(), ri.first()).unwrap();
        (ri, rf, a)
    }

    #[test]
    fn continuity_residual_is_second_order() {
        let (ri, rf, a) = pair_records(0.02);
        let coarse = continuity_residual(&ri, &rf, &a).unwrap().overall();
        let (ri, rf, a) = pair_records(0.01);
        let fine = continuity_residual(&ri, &rf, &a).unwrap().overall();
        assert!(coarse / fine >= 3.5, "{coarse} / {fine}");
    }

    #[test]
    fn identical_pair_reproduces_standard_residual() {
        let g = Grid1D::centered(256, 40.0, 0.0).unwrap();
        let psi = gaussian_packet(&g, -1.0, 1.0, 1.0).unwrap();
        let ri = evolve_window(&psi, &Potential::Free, 0.0, 0.5, 0.01, 1).unwrap();
        let rf = evolve_window(ri.last(), &Potential::Free, 0.5, 0.0, 0.01, 1).unwrap();
        let a = amplitude(rf.last(), ri.first()).unwrap();
        let sym = continuity_residual(&ri, &rf, &a).unwrap();
        let std = standard_continuity_residual(&ri).unwrap();
        for (x, y) in sym.rms.iter().zip(&std.rms) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn short_window_rejected() {
        let g = grid();
        let psi = gaussian_packet(&g, 0.0, 0.0, 1.0).unwrap();
        let r = evolve_window(&psi, &Potential::Free, 0.0, 0.1, 0.1, 1).unwrap();
        let a = amplitude(&psi, &psi).unwrap();
        assert!(matches!(continuity_residual(&r, &r, &a), Err(Error::WindowTooShort { .. })));
    }

    fn small() -> Grid1D {
        Grid1D::centered(64, 24.0, 0.0).unwrap()
    }

    #[test]
    fn product_state_reduces_to_second_factor() {
        let g = small();
        let fa = gaussian_packet(&g, -1.0, 0.3, 1.0).unwrap();
        let fb = gaussian_packet(&g, 2.0, -0.5, 1.5).unwrap();
        let psi = TwoParticleField::product(&fa, &fb).unwrap();
        let r = reduce_final(&psi, &fa).unwrap();
        for (x, y) in r.values().iter().zip(fb.values()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn entangled_state_reduces_to_partner() {
        let g = small();
        let pa = hermite_function(&g, 0, 1.0, 0.0).unwrap();
        let pc = hermite_function(&g, 1, 1.0, 0.0).unwrap();
        let pb = gaussian_packet(&g, 2.0, 0.5, 1.0).unwrap();
        let pd = gaussian_packet(&g, -2.0, -0.5, 1.0).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = TwoParticleField::from_fn(g, g, 0.0, |_, _| C64::new(0.0, 0.0)).unwrap();
        let mut vals = psi.values().to_vec();
        let n = g.len();
        for i in 0..n {
            for j in 0..n {
                vals[i * n + j] = (pa.values()[i] * pb.values()[j] + pc.values()[i] * pd.values()[j]) * s;
            }
        }
        let psi = TwoParticleField::new(g, g, vals, 0.0).unwrap();
        let r = reduce_final(&psi, &pa).unwrap();
        let overlap = crate::field::inner_product(&pb, &r).unwrap();
        let phase = overlap / overlap.norm();
        for (x, y) in r.values().iter().zip(pb.values()) {
            assert!((x / phase - y).norm() < 1e-10);
        }
        let orth = hermite_function(&g, 2, 1.0, 0.0).unwrap();
        assert!(matches!(reduce_final(&psi, &orth), Err(Error::DegenerateReduction { .. })));
    }

    fn entangled(g: Grid1D, t: f64, p: f64) -> TwoParticleField {
        TwoParticleField::from_fn(g, g, t, |x1, x2| {
            let u = (x1 + x2) / 2f64.sqrt();
            let w = (x1 - x2) / 2f64.sqrt();
            C64::from_polar((-u * u / 8.0 - w * w / 1.0).exp(), p * (x2 - x1) + 0.2 * x1 * x1)
        })
        .unwrap()
        .normalized()
        .unwrap()
    }

    #[test]
    fn factorized_final_matches_reduced_composition() {
        let g = small();
        let psi_i = entangled(g, 0.0, 0.7);
        let f1 = gaussian_packet(&g, 0.5, 0.2, 1.5).unwrap();
        let f2 = gaussian_packet(&g, -0.3, 0.4, 1.2).unwrap();
        let psi_f = TwoParticleField::product(&f1, &f2).unwrap();
        let a = amplitude_2d(&psi_f, &psi_i).unwrap();
        let many = many_body_velocity(&psi_i, &psi_f, &a, Particle::Second).unwrap();
        let reduced = reduce_final(&psi_i, &f1).unwrap();
        let a2 = amplitude(&f2, &reduced).unwrap();
        let single = symmetric_fields(&reduced, &f2, &a2).unwrap();
        for i in 0..g.len() {
            assert!((many.density[i] - single.density[i]).abs() < 1e-10);
            assert!((many.current[i] - single.current[i]).abs() < 1e-10);
        }
        // unnormalized reduction gives the same density with its own amplitude
        let raw = reduce_unnormalized(&psi_i, Particle::First, &f1).unwrap();
        let dens = many_body_density(&psi_i, &psi_f, &a, Particle::Second).unwrap();
        let a_raw = crate::field::inner_product(&f2, &raw).unwrap();
        for (i, d) in dens.iter().enumerate() {
            let expect = (f2.values()[i].conj() * raw.values()[i] / a_raw).re;
            assert!((d - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn entangled_many_body_fields_match_direct_quadrature() {
        let g = small();
        let psi_i = entangled(g, 0.0, 0.5);
        let psi_f = TwoParticleField::from_fn(g, g, 0.0, |x1, x2| {
            C64::from_polar((-(x1 - 0.5).powi(2) / 3.0 - (x2 + 0.2).powi(2) / 2.0 - 0.3 * x1 * x2).exp(), 0.1 * x2)
        })
        .unwrap()
        .normalized()
        .unwrap();
        let a = amplitude_2d(&psi_f, &psi_i).unwrap();
        let dens = many_body_density(&psi_i, &psi_f, &a, Particle::First).unwrap();
        let n = g.len();
        let dx = g.spacing();
        for i in (0..n).step_by(5) {
            let mut s = C64::new(0.0, 0.0);
            for j in 0..n {
                s += psi_f.at(i, j).conj() * psi_i.at(i, j) * dx;
            }
            assert!((dens[i] - (s / a.value()).re).abs() < 1e-12);
        }
        let total: f64 = dens.iter().sum::<f64>() * dx;
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn standard_two_particle_velocity_depends_on_partner() {
        let g = small();
        let psi = TwoParticleField::from_fn(g, g, 0.0, |x1, x2| {
            C64::from_polar((-(x1 * x1 + x2 * x2) / 4.0).exp(), 0.3 * x1 * x2)
        })
        .unwrap();
        let v = configuration_velocity(&psi, Particle::Second);
        let n = g.len();
        let j = n / 2;
        let a = v[(n / 2 - 3) * n + j].unwrap();
        let b = v[(n / 2 + 3) * n + j].unwrap();
        assert!((a - b).abs() > 1e-3);
    }

    #[test]
    fn rest_spinor_current_is_static_timelike() {
        let g = Grid1D::centered(64, 20.0, 0.0).unwrap();
        let psi = dirac_rest_state(&g, 1.0, 0.0).unwrap();
        let a = crate::field::dirac_amplitude(&psi, &psi).unwrap();
        let d = dirac_guidance(&psi, &psi, &a).unwrap();
        for k in 0..g.len() {
            assert!(d.j1[k].abs() < 1e-15);
            assert!((d.u0[k].unwrap() - 1.0).abs() < 1e-12);
            assert_eq!(d.character[k], CausalCharacter::Timelike);
        }
    }

    #[test]
    fn distinct_boosted_spinors_have_spacelike_points() {
        let g = Grid1D::centered(512, 80.0, 0.0).unwrap();
        let psi_i = dirac_packet(&g, 0.0, 1.0, 2.0, 1.0, 1.0, 0.0).unwrap();
        let psi_f = dirac_packet(&g, 0.0, -1.0, 2.0, 1.0, 1.0, 0.0).unwrap();
        let a = crate::field::dirac_amplitude(&psi_f, &psi_i).unwrap();
        let d = dirac_guidance(&psi_i, &psi_f, &a).unwrap();
        assert!(d.count(CausalCharacter::Spacelike) > 0);
        assert!(d.count(CausalCharacter::Timelike) > 0);
        assert!(d.norm_defect(0.0) < 1e-9);
        // pointwise oracle with explicit matrices
        let inv = 1.0 / a.value();
        for k in (0..g.len()).step_by(7) {
            let (u, l) = (psi_i.upper()[k], psi_i.lower()[k]);
            let (fu, fl) = (psi_f.upper()[k], psi_f.lower()[k]);
            let j0 = ((fu.conj() * u + fl.conj() * l) * inv).re;
            // gamma^0 gamma^1 = [[0, i], [-i, 0]]
            let j1 = ((fu.conj() * (C64::i() * l) + fl.conj() * (-C64::i() * u)) * inv).re;
            assert!((d.j0[k] - j0).abs() < 1e-14);
            assert!((d.j1[k] - j1).abs() < 1e-14);
            let spacelike = j1 * j1 > j0 * j0;
            assert_eq!(spacelike, d.character[k] == CausalCharacter::Spacelike);
        }
    }
}
