use serde::{Deserialize, Serialize};

/// Sign structure of a spacetime interval (c = 1, metric signature +,-).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CausalCharacter {
    Timelike,
    Spacelike,
    Null,
}

impl CausalCharacter {
    /// Classifies an interval from dt and dx; `rel_tol` absorbs rounding.
    pub fn of_interval(dt: f64, dx: f64, rel_tol: f64) -> Self {
        let s = dt * dt - dx * dx;
        let scale = dt * dt + dx * dx;
        if s.abs() <= rel_tol * scale {
            CausalCharacter::Null
        } else if s > 0.0 {
            CausalCharacter::Timelike
        } else {
            CausalCharacter::Spacelike
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CausalCharacter::Timelike => "timelike",
            CausalCharacter::Spacelike => "spacelike",
            CausalCharacter::Null => "null",
        }
    }
}

/// How an integration ended when it did not fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// Reached the requested parameter span.
    SpanExhausted,
    /// Reached the earliest snapshot time.
    WindowStart,
    /// Reached the latest snapshot time.
    WindowEnd,
    /// Hit the configured step budget.
    StepLimit,
}

/// Ordered spacetime points along one particle history.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WorldLine {
    /// (t, x) pairs.
    pub points: Vec<(f64, f64)>,
    /// Curve parameter, strictly increasing.
    pub lambda: Vec<f64>,
    /// Accumulated proper time, nondecreasing.
    pub tau: Vec<f64>,
    /// Indices `i` such that dt/dlambda changes sign between points i and i + 1.
    pub turning_points: Vec<usize>,
    /// One entry per segment.
    pub segment_character: Vec<CausalCharacter>,
    /// Sign weight carried by the seed (+1 or -1).
    pub weight: f64,
    /// How the forward (increasing-parameter) end stopped.
    pub termination: Option<Termination>,
    /// How the backward end stopped, for curves traced both ways from the seed.
    #[serde(default)]
    pub start_termination: Option<Termination>,
}

impl WorldLine {
    pub fn new(weight: f64) -> Self {
        Self {
            weight,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn push(&mut self, lambda: f64, t: f64, x: f64) {
        self.lambda.push(lambda);
        self.points.push((t, x));
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.0)
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.1)
    }

    pub fn first(&self) -> Option<(f64, f64)> {
        self.points.first().copied()
    }

    pub fn last(&self) -> Option<(f64, f64)> {
        self.points.last().copied()
    }

    /// Point with the largest time coordinate.
    pub fn latest(&self) -> Option<(f64, f64)> {
        self.points.iter().copied().max_by(|a, b| a.0.total_cmp(&b.0))
    }

    /// Number of times the curve crosses the slice t = `t`.
    pub fn slice_crossings(&self, t: f64) -> usize {
        self.points
            .windows(2)
            .filter(|w| {
                let (a, b) = (w[0].0 - t, w[1].0 - t);
                (a < 0.0 && b >= 0.0) || (a >= 0.0 && b < 0.0)
            })
            .count()
    }

    /// Positions where the curve meets the slice t = `t`, by linear interpolation.
    pub fn slice_positions(&self, t: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for w in self.points.windows(2) {
            let (a, b) = (w[0].0 - t, w[1].0 - t);
            if (a < 0.0 && b >= 0.0) || (a >= 0.0 && b < 0.0) {
                let s = a / (a - b);
                out.push(w[0].1 + s * (w[1].1 - w[0].1));
            }
        }
        out
    }

    /// Recomputes turning-point indices from the sign of successive time differences.
    pub fn detect_turning_points(&mut self) {
        self.turning_points.clear();
        let mut last_sign = 0.0;
        for i in 1..self.points.len() {
            let dt = self.points[i].0 - self.points[i - 1].0;
            if dt == 0.0 {
                continue;
            }
            let s = dt.signum();
            if last_sign != 0.0 && s != last_sign {
                self.turning_points.push(i - 1);
            }
            last_sign = s;
        }
    }

    /// Largest gap between consecutive points, a continuity diagnostic.
    pub fn max_step(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt())
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,t,x,tau,character,turning_flag\n");
        for i in 0..self.points.len() {
            let ch = if i == 0 {
                ""
            } else {
                self.segment_character.get(i - 1).map_or("", |c| c.as_str())
            };
            let tau = self.tau.get(i).copied().unwrap_or(f64::NAN);
            let flag = u8::from(self.turning_points.contains(&i));
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.lambda[i], self.points[i].0, self.points[i].1, tau, ch, flag
            ));
        }
        s
    }
}

/// Fills `tau` and `segment_character` with the two-part interval rule:
/// dtau = |dt^2 - dx^2|^(1/2), real on either side of the light cone.
pub fn proper_time(mut line: WorldLine) -> WorldLine {
    line.tau.clear();
    line.segment_character.clear();
    let mut tau = 0.0;
    if !line.points.is_empty() {
        line.tau.push(0.0);
    }
    for w in line.points.windows(2) {
        let (dt, dx) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
        tau += (dt * dt - dx * dx).abs().sqrt();
        line.tau.push(tau);
        line.segment_character.push(CausalCharacter::of_interval(dt, dx, 1e-12));
    }
    line
}
