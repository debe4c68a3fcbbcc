use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic grid on a line. Units have hbar = m = 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    n_points: usize,
    spacing: f64,
    origin: f64,
}

impl Grid1D {
    pub fn new(n_points: usize, spacing: f64, origin: f64) -> Result<Self> {
        if n_points < 4 || !n_points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_points = {n_points} must be a power of two >= 4"
            )));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing = {spacing} must be positive")));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidGrid(format!("origin = {origin} is not finite")));
        }
        Ok(Self {
            n_points,
            spacing,
            origin,
        })
    }

    /// Grid of `n_points` covering a period of `length` centred on `center`.
    pub fn centered(n_points: usize, length: f64, center: f64) -> Result<Self> {
        let spacing = length / n_points as f64;
        Self::new(n_points, spacing, center - 0.5 * length)
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    /// Coordinate of the last grid point.
    pub fn end(&self) -> f64 {
        self.origin + (self.n_points - 1) as f64 * self.spacing
    }

    /// Period of the spectral representation.
    pub fn period(&self) -> f64 {
        self.n_points as f64 * self.spacing
    }

    pub fn x(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.spacing
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.x(i))
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.origin && x <= self.end()
    }

    /// Fractional index of `x`.
    pub fn position(&self, x: f64) -> f64 {
        (x - self.origin) / self.spacing
    }

    /// Index of the grid point nearest to `x`, clamped to the grid.
    pub fn nearest(&self, x: f64) -> usize {
        let i = self.position(x).round();
        i.clamp(0.0, (self.n_points - 1) as f64) as usize
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_points as isize;
        let dk = 2.0 * PI / self.period();
        (0..n)
            .map(|i| if i < n / 2 { i } else { i - n })
            .map(|m| m as f64 * dk)
            .collect()
    }

    pub fn ensure_same(&self, other: &Grid1D) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

/// Time tags produced by separate forward and backward runs agree only to rounding.
pub fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}
