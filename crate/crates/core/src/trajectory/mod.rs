//! World-line integration: time-parametrized flow for the standard model,
//! integral curves of the spacetime current (which may run backward in t),
//! proper time, and the Dirac four-velocity flow.

mod interp;
pub mod rk;
mod worldline;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::guidance::Model;

pub use interp::{FieldInterpolator, SpatialInterp};
pub use worldline::{proper_time, CausalCharacter, Termination, WorldLine};

/// What time-parametrized integration does when the density changes sign.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TurningPolicy {
    #[default]
    Error,
    /// Continue along the current's integral curve.
    SwitchToLambda,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TraceOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Largest step; defaults to the snapshot interval (time mode) or half
    /// the smaller of snapshot interval and grid spacing (curve modes).
    pub max_step: Option<f64>,
    pub max_steps: usize,
    /// Stop once |lambda| reaches this on either side of the seed.
    pub lambda_span: f64,
    /// Stop once tau reaches this (Dirac flow).
    pub tau_span: f64,
    pub both_directions: bool,
    pub on_turning: TurningPolicy,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            max_step: None,
            max_steps: 200_000,
            lambda_span: f64::INFINITY,
            tau_span: f64::INFINITY,
            both_directions: true,
            on_turning: TurningPolicy::Error,
        }
    }
}

const H_MIN: f64 = 1e-14;
const EVENT_TOL: f64 = 1e-10;

/// Time-parametrized integration of dx/dt = j / rho from (t_start, x0) to t_end.
pub fn integrate_time_param(
    interp: &FieldInterpolator,
    x0: f64,
    t_start: f64,
    t_end: f64,
    opts: &TraceOptions,
) -> Result<WorldLine> {
    let (lo, hi) = interp.t_range();
    for t in [t_start, t_end] {
        if t < lo - 1e-12 || t > hi + 1e-12 {
            return Err(Error::LeftTimeWindow { t, start: lo, end: hi });
        }
    }
    let sigma = if t_end >= t_start { 1.0 } else { -1.0 };
    let span = (t_end - t_start).abs();
    let h_max = opts.max_step.unwrap_or_else(|| interp.snapshot_interval().max(1e-3));
    let model = interp.model();

    let mut line = WorldLine::new(1.0);
    let mut y = [t_start, x0];
    let mut s = 0.0;
    line.push(0.0, y[0], y[1]);

    // sign of rho on the current branch; a stage landing across the zero is a turning point
    let branch = std::cell::Cell::new(0.0f64);
    let turning = |t: f64, x: f64| match model {
        Model::Symmetric => Error::TurningPointEncountered {
            t,
            x,
            partial: Box::default(),
        },
        Model::Standard => Error::StagnationPoint { t, x },
    };
    let mut rhs = |y: &[f64; 2]| -> Result<[f64; 2]> {
        let (r, j) = interp.eval(y[0], y[1])?;
        if r.abs() <= interp.threshold(y[0]) || r * branch.get() < 0.0 {
            return Err(turning(y[0], y[1]));
        }
        Ok([sigma, sigma * j / r])
    };
    let (r0, _) = interp.eval(y[0], y[1])?;
    if model == Model::Standard && r0 <= 0.0 || r0.abs() <= interp.threshold(y[0]) {
        return Err(attach_partial(turning(y[0], y[1]), &line));
    }
    branch.set(r0.signum());

    let mut h = h_max.min(span).max(H_MIN);
    let mut steps = 0;
    while s < span * (1.0 - 1e-15) && span > 0.0 {
        steps += 1;
        if steps > opts.max_steps {
            line.termination = Some(Termination::StepLimit);
            return Ok(line);
        }
        h = h.min(span - s).min(h_max);
        let outcome = if h < 1e-9 && model == Model::Symmetric {
            // the flow line has gone vertical in (t, x)
            Err(turning(y[0], y[1]))
        } else {
            rk::dp45_step(&mut rhs, &y, h)
        };
        match outcome {
            Ok((y1, err)) => {
                let e = rk::error_norm(&y, &y1, &err, 2, opts.rtol, opts.atol);
                if e <= 1.0 {
                    s += h;
                    y = y1;
                    if (span - s).abs() < 1e-12 * span.max(1.0) {
                        y[0] = t_end;
                        s = span;
                    }
                    line.push(s, y[0], y[1]);
                }
                h = rk::next_step(h, e);
            }
            Err(Error::TurningPointEncountered { .. }) | Err(Error::StagnationPoint { .. }) if h >= 1e-9 => {
                h *= 0.25;
                continue;
            }
            Err(Error::TurningPointEncountered { .. }) if opts.on_turning == TurningPolicy::SwitchToLambda => {
                return continue_in_lambda(interp, line, sigma, opts);
            }
            Err(e) => return Err(attach_partial(e, &line)),
        }
        if h < H_MIN {
            return Err(Error::StepUnderflow { t: y[0], x: y[1] });
        }
    }
    line.termination = Some(Termination::SpanExhausted);
    Ok(proper_time_keep(line))
}

fn attach_partial(e: Error, line: &WorldLine) -> Error {
    match e {
        Error::TurningPointEncountered { t, x, .. } => Error::TurningPointEncountered {
            t,
            x,
            partial: Box::new(proper_time_keep(line.clone())),
        },
        other => other,
    }
}

fn proper_time_keep(line: WorldLine) -> WorldLine {
    let mut l = proper_time(line);
    l.detect_turning_points();
    l
}

fn continue_in_lambda(interp: &FieldInterpolator, mut line: WorldLine, sigma: f64, opts: &TraceOptions) -> Result<WorldLine> {
    let (t, x) = line.last().expect("line has its seed");
    let (r, _) = interp.eval(t, x)?;
    // follow the current in the direction that was moving along sigma
    let dir = if r * sigma >= 0.0 { 1.0 } else { -1.0 };
    let tracer = Tracer {
        interp,
        opts,
        dirac: false,
    };
    let half = tracer.half(t, x, dir)?;
    let l0 = *line.lambda.last().unwrap();
    for p in half.points.iter().skip(1) {
        line.push(l0 + p[2].abs(), p[0], p[1]);
    }
    line.termination = Some(half.termination);
    Ok(proper_time_keep(line))
}

struct Half {
    /// (t, x, lambda, tau)
    points: Vec<[f64; 4]>,
    turning: Vec<usize>,
    termination: Termination,
}

struct Tracer<'a> {
    interp: &'a FieldInterpolator,
    opts: &'a TraceOptions,
    /// Whether the slices hold Dirac (j0, j1) and tau accrues rho0.
    dirac: bool,
}

impl Tracer<'_> {
    fn rates(&self, t: f64, x: f64, dir: f64) -> Result<[f64; 4]> {
        let (r, j) = self.interp.eval_extended(t, x)?;
        let n = r.hypot(j);
        if !(n > self.interp.threshold(t)) {
            return Err(Error::StagnationPoint { t, x });
        }
        let rest = if self.dirac { ((r - j) * (r + j)).abs().sqrt() } else { 0.0 };
        Ok([dir * r / n, dir * j / n, dir / n, dir * rest / n])
    }

    fn h_max(&self) -> f64 {
        self.opts.max_step.unwrap_or_else(|| {
            let dt = self.interp.snapshot_interval();
            let dx = self.interp.grid().spacing();
            0.5 * if dt > 0.0 { dt.min(dx) } else { dx }
        })
    }

    /// Step of size h from y, or the failure of any stage.
    fn step(&self, y: &[f64; 4], h: f64, dir: f64) -> Result<([f64; 4], [f64; 4])> {
        let mut f = |p: &[f64; 4]| self.rates(p[0], p[1], dir);
        rk::dp45_step(&mut f, y, h)
    }

    fn density(&self, y: &[f64; 4]) -> Result<f64> {
        Ok(self.interp.eval(y[0], y[1])?.0)
    }

    /// Bisects the step size on [0, h] until `g` changes sign within EVENT_TOL in lambda.
    fn bisect(
        &self,
        y: &[f64; 4],
        h: f64,
        dir: f64,
        mut g: impl FnMut(&[f64; 4]) -> Result<f64>,
    ) -> Result<[f64; 4]> {
        let g0 = g(y)?;
        let (mut a, mut b) = (0.0, h);
        let mut yb = self.step(y, h, dir)?.0;
        let mut ya = *y;
        for _ in 0..200 {
            if (yb[2] - ya[2]).abs() < EVENT_TOL || b - a < H_MIN {
                break;
            }
            let m = 0.5 * (a + b);
            let ym = self.step(y, m, dir)?.0;
            if g(&ym)?.signum() == g0.signum() {
                a = m;
                ya = ym;
            } else {
                b = m;
                yb = ym;
            }
        }
        Ok(yb)
    }

    fn half(&self, t: f64, x: f64, dir: f64) -> Result<Half> {
        let (lo, hi) = self.interp.t_range();
        let h_max = self.h_max();
        let mut y = [t, x, 0.0, 0.0];
        self.rates(t, x, dir)?;
        let mut out = Half {
            points: vec![y],
            turning: Vec::new(),
            termination: Termination::SpanExhausted,
        };
        if t <= lo + 1e-12 && self.rates(t, x, dir)?[0] < 0.0 {
            out.termination = Termination::WindowStart;
            return Ok(out);
        }
        if t >= hi - 1e-12 && self.rates(t, x, dir)?[0] > 0.0 {
            out.termination = Termination::WindowEnd;
            return Ok(out);
        }
        let mut sign = self.density(&y)?.signum();
        let mut h = h_max;
        let mut steps = 0;
        loop {
            steps += 1;
            if steps > self.opts.max_steps {
                out.termination = Termination::StepLimit;
                return Ok(out);
            }
            h = h.min(h_max);
            if h < H_MIN {
                return Err(Error::StepUnderflow { t: y[0], x: y[1] });
            }
            let (y1, err) = match self.step(&y, h, dir) {
                Ok(v) => v,
                Err(Error::LeftTimeWindow { .. }) => {
                    // a stage poked past the window edge; approach it more slowly
                    let gap = (y[0] - lo).min(hi - y[0]).max(0.0);
                    h = (0.5 * h).min(0.1 * gap.max(1e-6));
                    if gap < 1e-9 {
                        out.termination = if y[0] - lo < hi - y[0] {
                            Termination::WindowStart
                        } else {
                            Termination::WindowEnd
                        };
                        return Ok(out);
                    }
                    continue;
                }
                Err(e) => return Err(e),
            };
            let e = rk::error_norm(&y, &y1, &err, 2, self.opts.rtol, self.opts.atol);
            if e > 1.0 {
                h = rk::next_step(h, e);
                continue;
            }
            // window edges
            if y1[0] < lo || y1[0] > hi {
                let edge = if y1[0] < lo { lo } else { hi };
                let mut landed = self.bisect(&y, h, dir, |p| Ok(p[0] - edge))?;
                landed[0] = edge;
                out.points.push(landed);
                out.termination = if edge == lo {
                    Termination::WindowStart
                } else {
                    Termination::WindowEnd
                };
                return Ok(out);
            }
            let r1 = self.density(&y1)?;
            if sign != 0.0 && r1 != 0.0 && r1.signum() == -sign {
                // stop exactly on the sign change of rho and restart from there
                y = self.bisect(&y, h, dir, |p| self.density(p))?;
                out.points.push(y);
                out.turning.push(out.points.len() - 1);
            } else {
                y = y1;
                out.points.push(y);
            }
            if r1 != 0.0 {
                sign = r1.signum();
            }
            if y[2].abs() >= self.opts.lambda_span || y[3].abs() >= self.opts.tau_span {
                out.termination = Termination::SpanExhausted;
                return Ok(out);
            }
            h = rk::next_step(h, e);
        }
    }

    fn full(&self, t: f64, x: f64, weight: f64) -> Result<WorldLine> {
        let (lo, hi) = self.interp.t_range();
        if t < lo - 1e-12 || t > hi + 1e-12 {
            return Err(Error::LeftTimeWindow { t, start: lo, end: hi });
        }
        if !self.interp.grid().contains(x) {
            return Err(Error::LeftGrid { t, x });
        }
        let fwd = self.half(t, x, 1.0)?;
        let mut line = WorldLine::new(weight);
        let mut turning = Vec::new();
        let mut offset = 0;
        let mut tau_shift = 0.0;
        if self.opts.both_directions {
            let back = self.half(t, x, -1.0)?;
            line.start_termination = Some(back.termination);
            let m = back.points.len();
            tau_shift = back.points.last().map_or(0.0, |p| -p[3]);
            for p in back.points.iter().rev() {
                line.push(p[2], p[0], p[1]);
                line.tau.push(p[3] + tau_shift);
            }
            turning.extend(back.turning.iter().map(|&i| m - 1 - i));
            offset = m - 1;
            // the seed appears in both halves
            line.points.pop();
            line.lambda.pop();
            line.tau.pop();
        }
        for p in &fwd.points {
            line.push(p[2], p[0], p[1]);
            line.tau.push(p[3] + tau_shift);
        }
        turning.extend(fwd.turning.iter().map(|&i| i + offset));
        turning.sort_unstable();
        line.turning_points = turning;
        line.termination = Some(fwd.termination);
        line.segment_character = line
            .points
            .windows(2)
            .map(|w| CausalCharacter::of_interval(w[1].0 - w[0].0, w[1].1 - w[0].1, 1e-12))
            .collect();
        if !self.dirac {
            let turning = std::mem::take(&mut line.turning_points);
            line = proper_time(line);
            line.turning_points = turning;
        }
        Ok(line)
    }
}

/// Integral curve of the spacetime current through `seed`: dt/dlambda = rho,
/// dx/dlambda = j. Runs both ways from the seed (unless disabled) until the
/// curve leaves the stored time window or the span runs out. The curve is
/// traced in arclength of the (t, x) plane with lambda carried along, so
/// regions of tiny current cost no extra steps.
pub fn integrate_lambda_param(interp: &FieldInterpolator, seed: (f64, f64), opts: &TraceOptions) -> Result<WorldLine> {
    integrate_lambda_weighted(interp, seed, 1.0, opts)
}

fn integrate_lambda_weighted(interp: &FieldInterpolator, seed: (f64, f64), weight: f64, opts: &TraceOptions) -> Result<WorldLine> {
    Tracer {
        interp,
        opts,
        dirac: false,
    }
    .full(seed.0, seed.1, weight)
}

/// Dirac world line through `seed` following u^nu = j^nu / rho0, with proper
/// time accumulated from rho0 so the curve passes smoothly through points
/// where the current turns null. `interp` holds j^0 as density and j^1 as current.
pub fn dirac_trajectory(interp: &FieldInterpolator, seed: (f64, f64), opts: &TraceOptions) -> Result<WorldLine> {
    let (r, j) = interp.eval(seed.0, seed.1)?;
    let rho0 = ((r - j) * (r + j)).abs().sqrt();
    let scale = interp.density_scale(seed.0);
    if !(rho0 >= crate::guidance::TURN_EPS_REL * scale && rho0 > 0.0) {
        return Err(Error::RestDensityVanishes { t: seed.0, x: seed.1 });
    }
    Tracer {
        interp,
        opts,
        dirac: true,
    }
    .full(seed.0, seed.1, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    pub t: f64,
    pub x: f64,
    /// Sign weight (+1 or -1) inherited from the density at the seed.
    pub weight: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Mode {
    Time { t_end: f64 },
    Lambda,
}

/// Integrates every seed independently in parallel; results keep seed order.
pub fn ensemble(interp: &FieldInterpolator, seeds: &[Seed], mode: Mode, opts: &TraceOptions) -> Vec<Result<WorldLine>> {
    seeds
        .par_iter()
        .map(|s| match mode {
            Mode::Time { t_end } => integrate_time_param(interp, s.x, s.t, t_end, opts).map(|mut l| {
                l.weight = s.weight;
                l
            }),
            Mode::Lambda => integrate_lambda_weighted(interp, (s.t, s.x), s.weight, opts),
        })
        .collect()
}

/// Per-seed summary for batch manifests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineOutcome {
    pub index: usize,
    pub seed: Seed,
    pub ok: bool,
    pub error: Option<String>,
    pub termination: Option<Termination>,
    pub final_point: Option<(f64, f64)>,
    pub turning_points: usize,
}

pub fn summarize(seeds: &[Seed], lines: &[Result<WorldLine>]) -> Vec<LineOutcome> {
    seeds
        .iter()
        .zip(lines)
        .enumerate()
        .map(|(index, (seed, r))| match r {
            Ok(l) => LineOutcome {
                index,
                seed: *seed,
                ok: true,
                error: None,
                termination: l.termination,
                final_point: l.last(),
                turning_points: l.turning_points.len(),
            },
            Err(e) => LineOutcome {
                index,
                seed: *seed,
                ok: false,
                error: Some(e.to_string()),
                termination: None,
                final_point: None,
                turning_points: 0,
            },
        })
        .collect()
}

/// Cell-wise cumulative distribution of |density|; cell i is centred on grid point i.
fn magnitude_cdf(density: &[f64]) -> (Vec<f64>, f64) {
    let mut cdf = Vec::with_capacity(density.len() + 1);
    let mut acc = 0.0;
    cdf.push(0.0);
    for r in density {
        acc += r.abs();
        cdf.push(acc);
    }
    (cdf, acc)
}

fn invert_cdf(grid: &Grid1D, density: &[f64], cdf: &[f64], u: f64) -> (f64, f64) {
    let i = match cdf.binary_search_by(|c| c.total_cmp(&u)) {
        Ok(i) => i.min(density.len() - 1),
        Err(i) => i.saturating_sub(1).min(density.len() - 1),
    };
    let width = cdf[i + 1] - cdf[i];
    let frac = if width > 0.0 { ((u - cdf[i]) / width).clamp(0.0, 1.0) } else { 0.5 };
    let x = grid.x(i) + (frac - 0.5) * grid.spacing();
    (x, density[i].signum())
}

/// `n` seeds at the quantiles (k + 1/2) / n of |density|, each weighted by
/// the sign of the density where it lands.
pub fn stratified_seeds(grid: &Grid1D, density: &[f64], n: usize, t: f64) -> Vec<Seed> {
    let (cdf, total) = magnitude_cdf(density);
    (0..n)
        .map(|k| {
            let u = (k as f64 + 0.5) / n as f64 * total;
            let (x, w) = invert_cdf(grid, density, &cdf, u);
            Seed { t, x, weight: w }
        })
        .collect()
}

/// `n` independent draws from |density| with sign weights.
pub fn sample_seeds(grid: &Grid1D, density: &[f64], n: usize, t: f64, rng: &mut impl Rng) -> Vec<Seed> {
    let (cdf, total) = magnitude_cdf(density);
    (0..n)
        .map(|_| {
            let u = rng.gen::<f64>() * total;
            let (x, w) = invert_cdf(grid, density, &cdf, u);
            Seed { t, x, weight: w }
        })
        .collect()
}
