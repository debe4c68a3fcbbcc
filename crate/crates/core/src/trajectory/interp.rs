use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Amplitude, SpinorField};
use crate::grid::Grid1D;
use crate::guidance::{
    bohm_velocity, dirac_guidance, paired_snapshots, symmetric_fields_with, Model, Normalization, TURN_EPS_REL,
};
use crate::propagate::EvolutionRecord;
use crate::spectral::TrigInterpolant;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpatialInterp {
    #[default]
    Cubic,
    Spectral,
}

/// Density and current on a stack of equally spaced time slices, evaluable
/// at any (t, x) in the covered window: linear in time, cubic or
/// trigonometric in space.
#[derive(Clone, Debug)]
pub struct FieldInterpolator {
    grid: Grid1D,
    times: Vec<f64>,
    model: Model,
    density: Vec<Vec<f64>>,
    current: Vec<Vec<f64>>,
    scale: Vec<f64>,
    mode: SpatialInterp,
    spectral: Vec<(TrigInterpolant, TrigInterpolant)>,
    pub warnings: Vec<String>,
}

impl FieldInterpolator {
    /// `times` ascending and uniformly spaced; one density/current slice per time.
    pub fn from_slices(
        grid: Grid1D,
        times: Vec<f64>,
        model: Model,
        density: Vec<Vec<f64>>,
        current: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if times.is_empty() || density.len() != times.len() || current.len() != times.len() {
            return Err(Error::InvalidWindow("interpolator needs one slice per time".into()));
        }
        if density.iter().chain(&current).any(|s| s.len() != grid.len()) {
            return Err(Error::GridMismatch("slice length differs from grid".into()));
        }
        if times.len() > 1 {
            let dt = times[1] - times[0];
            let uniform = times.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.abs().max(1.0));
            if !(dt > 0.0) || !uniform {
                return Err(Error::InvalidWindow("slice times must be ascending and uniform".into()));
            }
        }
        let scale = density.iter().map(|d| d.iter().fold(0.0f64, |m, r| m.max(r.abs()))).collect();
        let mut out = Self {
            grid,
            times,
            model,
            density,
            current,
            scale,
            mode: SpatialInterp::Cubic,
            spectral: Vec::new(),
            warnings: Vec::new(),
        };
        out.check_stride();
        Ok(out)
    }

    /// Standard-model fields from a single record.
    pub fn standard(record: &EvolutionRecord) -> Result<Self> {
        let snaps = record.ascending();
        let fields: Vec<_> = snaps.iter().map(|s| bohm_velocity(s)).collect();
        Self::from_slices(
            *snaps[0].grid(),
            fields.iter().map(|f| f.time).collect(),
            Model::Standard,
            fields.iter().map(|f| f.density.clone()).collect(),
            fields.iter().map(|f| f.current.clone()).collect(),
        )
    }

    pub fn symmetric(record_i: &EvolutionRecord, record_f: &EvolutionRecord, a: &Amplitude) -> Result<Self> {
        Self::symmetric_with(record_i, record_f, a, Normalization::Complex)
    }

    pub fn symmetric_with(
        record_i: &EvolutionRecord,
        record_f: &EvolutionRecord,
        a: &Amplitude,
        normalization: Normalization,
    ) -> Result<Self> {
        let pairs = paired_snapshots(record_i, record_f)?;
        let mut times = Vec::new();
        let mut density = Vec::new();
        let mut current = Vec::new();
        for (pi, pf) in &pairs {
            let g = symmetric_fields_with(pi, pf, a, normalization)?;
            times.push(g.time);
            density.push(g.density);
            current.push(g.current);
        }
        Self::from_slices(*pairs[0].0.grid(), times, Model::Symmetric, density, current)
    }

    /// Dirac currents: `density` holds j^0 and `current` holds j^1.
    pub fn dirac(
        record_i: &EvolutionRecord<SpinorField>,
        record_f: &EvolutionRecord<SpinorField>,
        a: &Amplitude,
    ) -> Result<Self> {
        let pairs = paired_snapshots(record_i, record_f)?;
        let mut times = Vec::new();
        let mut j0 = Vec::new();
        let mut j1 = Vec::new();
        for (pi, pf) in &pairs {
            let g = dirac_guidance(pi, pf, a)?;
            times.push(g.time);
            j0.push(g.j0);
            j1.push(g.j1);
        }
        Self::from_slices(*pairs[0].0.grid(), times, Model::Symmetric, j0, j1)
    }

    pub fn with_spatial(mut self, mode: SpatialInterp) -> Self {
        self.mode = mode;
        if mode == SpatialInterp::Spectral && self.spectral.is_empty() {
            self.spectral = self
                .density
                .iter()
                .zip(&self.current)
                .map(|(d, c)| (TrigInterpolant::new(d, &self.grid), TrigInterpolant::new(c, &self.grid)))
                .collect();
        }
        self
    }

    /// Snapshots too far apart for the fastest significant flow get a warning.
    fn check_stride(&mut self) {
        if self.times.len() < 2 {
            return;
        }
        let dt = self.times[1] - self.times[0];
        let mut vmax: f64 = 0.0;
        for (k, (d, c)) in self.density.iter().zip(&self.current).enumerate() {
            let floor = 1e-3 * self.scale[k];
            for (r, j) in d.iter().zip(c) {
                if r.abs() > floor && floor > 0.0 {
                    vmax = vmax.max((j / r).abs());
                }
            }
        }
        if vmax * dt >= 0.5 * self.grid.spacing() {
            let msg = format!(
                "snapshot interval {dt} lets the flow (|v| up to {vmax:.3}) cross more than half a cell"
            );
            log::debug!("{msg}");
            self.warnings.push(msg);
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }

    pub fn snapshot_interval(&self) -> f64 {
        if self.times.len() > 1 {
            self.times[1] - self.times[0]
        } else {
            0.0
        }
    }

    pub fn slice_density(&self, k: usize) -> &[f64] {
        &self.density[k]
    }

    pub fn slice_current(&self, k: usize) -> &[f64] {
        &self.current[k]
    }

    fn locate_time(&self, t: f64) -> Result<(usize, f64)> {
        self.locate_time_within(t, 1e-9 * (1.0 + self.times[0].abs().max(self.times.last().unwrap().abs())))
    }

    /// Fractional slice index; `slack` beyond either end extrapolates linearly.
    fn locate_time_within(&self, t: f64, slack: f64) -> Result<(usize, f64)> {
        let (t0, t1) = self.t_range();
        if t < t0 - slack || t > t1 + slack {
            return Err(Error::LeftTimeWindow { t, start: t0, end: t1 });
        }
        if self.times.len() == 1 {
            return Ok((0, 0.0));
        }
        let dt = self.times[1] - self.times[0];
        let pos = (t - t0) / dt;
        let k = (pos.max(0.0).floor() as usize).min(self.times.len() - 2);
        Ok((k, pos - k as f64))
    }

    fn spatial(&self, slice: &[f64], x: f64) -> f64 {
        let n = self.grid.len() as isize;
        let p = self.grid.position(x);
        let i = p.floor() as isize;
        let s = p - i as f64;
        let at = |j: isize| slice[j.rem_euclid(n) as usize];
        let (fm, f0, f1, f2) = (at(i - 1), at(i), at(i + 1), at(i + 2));
        // four-point Lagrange cubic on nodes -1, 0, 1, 2
        -s * (s - 1.0) * (s - 2.0) / 6.0 * fm + (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0 * f0
            - (s + 1.0) * s * (s - 2.0) / 2.0 * f1
            + (s + 1.0) * s * (s - 1.0) / 6.0 * f2
    }

    fn eval_slice(&self, k: usize, x: f64) -> (f64, f64) {
        match self.mode {
            SpatialInterp::Cubic => (self.spatial(&self.density[k], x), self.spatial(&self.current[k], x)),
            SpatialInterp::Spectral => (self.spectral[k].0.eval(x), self.spectral[k].1.eval(x)),
        }
    }

    /// (density, current) at (t, x).
    pub fn eval(&self, t: f64, x: f64) -> Result<(f64, f64)> {
        let loc = self.locate_time(t);
        self.eval_at(t, x, loc)
    }

    /// Like `eval`, but accepts times up to one snapshot interval outside the
    /// window so integrator stages can straddle its edges.
    pub(crate) fn eval_extended(&self, t: f64, x: f64) -> Result<(f64, f64)> {
        let loc = self.locate_time_within(t, self.snapshot_interval().max(1e-9));
        self.eval_at(t, x, loc)
    }

    fn eval_at(&self, t: f64, x: f64, loc: Result<(usize, f64)>) -> Result<(f64, f64)> {
        if !self.grid.contains(x) || !x.is_finite() {
            return Err(Error::LeftGrid { t, x });
        }
        let (k, w) = loc?;
        let (r0, j0) = self.eval_slice(k, x);
        if w == 0.0 || self.times.len() == 1 {
            return Ok((r0, j0));
        }
        let (r1, j1) = self.eval_slice(k + 1, x);
        Ok(((1.0 - w) * r0 + w * r1, (1.0 - w) * j0 + w * j1))
    }

    /// Time-interpolated max |density|.
    pub fn density_scale(&self, t: f64) -> f64 {
        match self.locate_time_within(t, self.snapshot_interval().max(1e-9)) {
            Ok((k, w)) if self.times.len() > 1 => ((1.0 - w) * self.scale[k] + w * self.scale[k + 1]).max(0.0),
            _ => self.scale[0],
        }
    }

    /// Absolute cutoff below which the density counts as zero at time t.
    pub fn threshold(&self, t: f64) -> f64 {
        TURN_EPS_REL * self.density_scale(t)
    }

    pub fn velocity(&self, t: f64, x: f64) -> Result<Option<f64>> {
        let (r, j) = self.eval(t, x)?;
        Ok(if r.abs() >= self.threshold(t) && r != 0.0 {
            Some(j / r)
        } else {
            None
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(mode: SpatialInterp) -> FieldInterpolator {
        let g = Grid1D::centered(64, 2.0 * std::f64::consts::PI, 0.0).unwrap();
        let times = vec![0.0, 0.5, 1.0];
        let dens = times.iter().map(|t| g.points().map(|x| 2.0 + (x).cos() * (1.0 + t)).collect()).collect();
        let cur = times.iter().map(|t| g.points().map(|x| (2.0 * x).sin() * t).collect()).collect();
        FieldInterpolator::from_slices(g, times, Model::Symmetric, dens, cur)
            .unwrap()
            .with_spatial(mode)
    }

    #[test]
    fn interpolates_linear_in_time_and_smooth_in_space() {
        for mode in [SpatialInterp::Cubic, SpatialInterp::Spectral] {
            let f = toy(mode);
            let (r, j) = f.eval(0.25, 0.3).unwrap();
            let tol = if mode == SpatialInterp::Cubic { 1e-4 } else { 1e-12 };
            assert!((r - (2.0 + 0.3f64.cos() * 1.25)).abs() < tol);
            assert!((j - 0.6f64.sin() * 0.25).abs() < tol);
        }
    }

    #[test]
    fn rejects_points_outside_domain() {
        let f = toy(SpatialInterp::Cubic);
        assert!(matches!(f.eval(1.5, 0.0), Err(Error::LeftTimeWindow { .. })));
        assert!(matches!(f.eval(0.5, 10.0), Err(Error::LeftGrid { .. })));
    }

    #[test]
    fn rejects_nonuniform_times() {
        let g = Grid1D::centered(8, 1.0, 0.0).unwrap();
        let s = vec![vec![1.0; 8]; 3];
        assert!(FieldInterpolator::from_slices(g, vec![0.0, 0.1, 0.3], Model::Standard, s.clone(), s).is_err());
    }

    #[test]
    fn coarse_snapshots_trigger_stride_warning() {
        let g = Grid1D::centered(64, 10.0, 0.0).unwrap();
        let d = vec![vec![1.0; 64]; 2];
        let c = vec![vec![5.0; 64]; 2];
        let f = FieldInterpolator::from_slices(g, vec![0.0, 1.0], Model::Standard, d, c).unwrap();
        assert_eq!(f.warnings.len(), 1);
    }
}
