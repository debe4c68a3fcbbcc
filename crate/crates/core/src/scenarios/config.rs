use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::{gaussian_packet_at, hermite_function, superpose, TwoParticleField, WavefunctionField};
use crate::grid::Grid1D;
use crate::propagate::{dirac_packet, dirac_rest_state, Potential};
use crate::statistics::FinalBasis;
use crate::field::SpinorField;
use crate::C64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub points: usize,
    pub length: f64,
    #[serde(default)]
    pub center: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid1D> {
        Grid1D::centered(self.points, self.length, self.center)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub t1: f64,
    pub t2: f64,
    pub dt: f64,
    #[serde(default = "one")]
    pub stride: usize,
}

fn one() -> usize {
    1
}

fn one_f() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
    pub state: StateSpec,
}

/// Declarative wavefunction; which kinds make sense depends on the scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StateSpec {
    Gaussian {
        center: f64,
        #[serde(default)]
        momentum: f64,
        width: f64,
    },
    Hermite {
        n: usize,
        omega: f64,
        #[serde(default)]
        center: f64,
    },
    Superposition { terms: Vec<Term> },
    /// The initial state carried to the final time, optionally kept on one
    /// half-line through a smooth step of the given width.
    Evolved {
        #[serde(default)]
        side: Option<Side>,
        #[serde(default = "one_f")]
        smoothing: f64,
    },
    /// exp(-u^2/4su^2 - w^2/4sw^2 + i p (x2 - x1)) with u, w the rotated
    /// centre-of-mass and relative coordinates.
    EntangledGaussian {
        sigma_u: f64,
        sigma_w: f64,
        #[serde(default)]
        momentum: f64,
    },
    Product {
        first: Box<StateSpec>,
        second: Box<StateSpec>,
    },
    DiracPacket {
        center: f64,
        #[serde(default)]
        momentum: f64,
        width: f64,
        #[serde(default = "one_f")]
        energy_sign: f64,
    },
    DiracRest,
}

impl StateSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            StateSpec::Gaussian { .. } => "gaussian",
            StateSpec::Hermite { .. } => "hermite",
            StateSpec::Superposition { .. } => "superposition",
            StateSpec::Evolved { .. } => "evolved",
            StateSpec::EntangledGaussian { .. } => "entangled-gaussian",
            StateSpec::Product { .. } => "product",
            StateSpec::DiracPacket { .. } => "dirac-packet",
            StateSpec::DiracRest => "dirac-rest",
        }
    }

    /// Single-particle state tagged with time `t`. `Evolved` must be resolved by the caller.
    pub fn single(&self, grid: &Grid1D, t: f64) -> Result<WavefunctionField> {
        match self {
            StateSpec::Gaussian { center, momentum, width } => gaussian_packet_at(grid, *center, *momentum, *width, t),
            StateSpec::Hermite { n, omega, center } => Ok(hermite_function(grid, *n, *omega, *center)?.with_time(t)),
            StateSpec::Superposition { terms } => {
                if terms.is_empty() {
                    return Err(Error::Config("superposition needs at least one term".into()));
                }
                let parts = terms
                    .iter()
                    .map(|term| Ok((C64::new(term.re, term.im), term.state.single(grid, t)?)))
                    .collect::<Result<Vec<_>>>()?;
                let refs: Vec<(C64, &WavefunctionField)> = parts.iter().map(|(c, f)| (*c, f)).collect();
                superpose(&refs)?.normalized()
            }
            other => Err(Error::Config(format!("a {} state is not a single-particle state here", other.kind()))),
        }
    }

    /// Components of a superposition, each normalized, with their coefficients.
    pub fn components(&self, grid: &Grid1D, t: f64) -> Result<Vec<(C64, WavefunctionField)>> {
        match self {
            StateSpec::Superposition { terms } => terms
                .iter()
                .map(|term| Ok((C64::new(term.re, term.im), term.state.single(grid, t)?)))
                .collect(),
            other => Ok(vec![(C64::new(1.0, 0.0), other.single(grid, t)?)]),
        }
    }

    pub fn pair(&self, grid: &Grid1D, t: f64) -> Result<TwoParticleField> {
        match self {
            StateSpec::EntangledGaussian {
                sigma_u,
                sigma_w,
                momentum,
            } => {
                if !(*sigma_u > 0.0 && *sigma_w > 0.0) {
                    return Err(Error::Config("entangled widths must be positive".into()));
                }
                let r = std::f64::consts::FRAC_1_SQRT_2;
                TwoParticleField::from_fn(*grid, *grid, t, |x1, x2| {
                    let u = (x1 + x2) * r;
                    let w = (x1 - x2) * r;
                    let env = (-u * u / (4.0 * sigma_u * sigma_u) - w * w / (4.0 * sigma_w * sigma_w)).exp();
                    C64::from_polar(env, momentum * (x2 - x1))
                })?
                .normalized()
            }
            StateSpec::Product { first, second } => {
                TwoParticleField::product(&first.single(grid, t)?, &second.single(grid, t)?)?.normalized()
            }
            other => Err(Error::Config(format!("a {} state is not a two-particle state", other.kind()))),
        }
    }

    pub fn spinor(&self, grid: &Grid1D, mass: f64, t: f64) -> Result<SpinorField> {
        match self {
            StateSpec::DiracPacket {
                center,
                momentum,
                width,
                energy_sign,
            } => dirac_packet(grid, *center, *momentum, *width, mass, *energy_sign, t),
            StateSpec::DiracRest => dirac_rest_state(grid, mass, t),
            other => Err(Error::Config(format!("a {} state is not a spinor state", other.kind()))),
        }
    }
}

/// Outcome basis of the measurement closing the window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BasisSpec {
    Position,
    Momentum,
    Harmonic {
        n: usize,
        omega: f64,
        #[serde(default)]
        center: f64,
    },
}

impl BasisSpec {
    pub fn build(&self, grid: &Grid1D) -> Result<FinalBasis> {
        match self {
            BasisSpec::Position => Ok(FinalBasis::Position(*grid)),
            BasisSpec::Momentum => Ok(FinalBasis::Momentum(*grid)),
            BasisSpec::Harmonic { n, omega, center } => FinalBasis::harmonic(grid, *n, *omega, *center),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "yes")]
    pub fields: bool,
    #[serde(default = "yes")]
    pub worldlines: bool,
}

fn yes() -> bool {
    true
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            fields: true,
            worldlines: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: String,
    #[serde(default)]
    pub seed: u64,
    pub grid: GridSpec,
    pub window: WindowSpec,
    pub initial: StateSpec,
    #[serde(rename = "final", default, skip_serializing_if = "Option::is_none")]
    pub final_state: Option<StateSpec>,
    /// A second final choice, for scenarios that compare two.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alternative: Option<StateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<BasisSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alternative_basis: Option<BasisSpec>,
    #[serde(default)]
    pub potential: Potential,
    #[serde(default = "one")]
    pub ensemble: usize,
    #[serde(default)]
    pub outputs: OutputSpec,
    /// Overrides for the scenario's named tolerances.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    /// Scenario-specific scalar settings.
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Checks the parts every scenario shares.
    pub fn validate_common(&self) -> Result<()> {
        let w = &self.window;
        if !(w.t1 < w.t2) {
            return Err(Error::Config(format!("window needs t1 < t2, got {} and {}", w.t1, w.t2)));
        }
        if !(w.dt > 0.0 && w.dt.is_finite()) {
            return Err(Error::Config(format!("dt = {} must be positive", w.dt)));
        }
        if w.stride == 0 {
            return Err(Error::Config("stride must be positive".into()));
        }
        if self.ensemble == 0 {
            return Err(Error::Config("ensemble must be at least 1".into()));
        }
        self.grid.build()?;
        Ok(())
    }

    /// Looks up a tolerance, falling back to the scenario default.
    pub fn tol(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }

    pub fn param(&self, name: &str, default: f64) -> f64 {
        self.params.get(name).copied().unwrap_or(default)
    }

    pub fn final_spec(&self) -> Result<&StateSpec> {
        self.final_state
            .as_ref()
            .ok_or_else(|| Error::Config(format!("scenario {} needs a final state", self.scenario)))
    }

    /// Rejects tolerance and parameter names the scenario does not know.
    pub fn check_names(&self, tolerances: &[&str], params: &[&str]) -> Result<()> {
        for k in self.tolerances.keys() {
            if !tolerances.contains(&k.as_str()) {
                return Err(Error::Config(format!("unknown tolerance '{k}' (known: {})", tolerances.join(", "))));
            }
        }
        for k in self.params.keys() {
            if !params.contains(&k.as_str()) {
                return Err(Error::Config(format!("unknown parameter '{k}' (known: {})", params.join(", "))));
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form: object keys sorted, defaults filled in.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("configs serialize");
        canonical_hash(&value)
    }
}

/// Hex SHA-256 of a JSON value with keys in sorted order.
pub fn canonical_hash(value: &serde_json::Value) -> String {
    let text = serde_json::to_string(value).expect("values serialize");
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Applies `a.b.c=value` to a JSON document. The value is parsed as JSON when
/// it can be, and taken as a string otherwise.
pub fn apply_override(doc: &mut serde_json::Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{assignment}' is not key=value")))?;
    let path = path.trim();
    if path.is_empty() || path.split('.').any(str::is_empty) {
        return Err(Error::Config(format!("override path '{path}' is malformed")));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| serde_json::Value::String(raw.trim().to_string()));
    let mut cur = doc;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        let last = i + 1 == keys.len();
        match cur {
            serde_json::Value::Object(map) => {
                if last {
                    map.insert(key.to_string(), value);
                    return Ok(());
                }
                cur = map
                    .entry(key.to_string())
                    .or_insert_with(|| serde_json::Value::Object(Default::default()));
            }
            serde_json::Value::Array(items) => {
                let idx: usize = key
                    .parse()
                    .map_err(|_| Error::Config(format!("'{key}' in '{path}' indexes an array")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| Error::Config(format!("index {idx} out of range ({len} items) in '{path}'")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                cur = slot;
            }
            _ => return Err(Error::Config(format!("'{path}' descends into a scalar"))),
        }
    }
    unreachable!("loop returns on the last key")
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn hash_ignores_key_order() {
        let a: serde_json::Value = serde_json::from_str(r#"{"b": 1, "a": {"y": 2, "x": 3}}"#).unwrap();
        let b: serde_json::Value = serde_json::from_str(r#"{"a": {"x": 3, "y": 2}, "b": 1}"#).unwrap();
        assert_eq!(canonical_hash(&a), canonical_hash(&b));
        assert_ne!(canonical_hash(&a), canonical_hash(&json!({"b": 2})));
    }

    #[test]
    fn overrides_follow_dotted_paths() {
        let mut doc = json!({"grid": {"points": 64}, "terms": [{"re": 1.0}]});
        apply_override(&mut doc, "grid.points=128").unwrap();
        apply_override(&mut doc, "terms.0.re=0.5").unwrap();
        apply_override(&mut doc, "params.mid=2").unwrap();
        apply_override(&mut doc, "scenario=epr-zigzag").unwrap();
        assert_eq!(doc["grid"]["points"], 128);
        assert_eq!(doc["terms"][0]["re"], 0.5);
        assert_eq!(doc["params"]["mid"], 2);
        assert_eq!(doc["scenario"], "epr-zigzag");
        assert!(apply_override(&mut doc, "grid.points.deep=1").is_err());
        assert!(apply_override(&mut doc, "novalue").is_err());
        assert!(apply_override(&mut doc, "terms.5.re=1").is_err());
    }

    #[test]
    fn states_build_and_reject_wrong_kinds() {
        let g = Grid1D::centered(128, 40.0, 0.0).unwrap();
        let s: StateSpec = serde_json::from_value(json!({"kind": "superposition", "terms": [
            {"re": 1.0, "state": {"kind": "hermite", "n": 0, "omega": 1.0}},
            {"re": 1.0, "state": {"kind": "hermite", "n": 1, "omega": 1.0}}
        ]}))
        .unwrap();
        let f = s.single(&g, 0.5).unwrap();
        assert!((f.norm_sq() - 1.0).abs() < 1e-12);
        assert_eq!(f.time(), 0.5);
        assert_eq!(s.components(&g, 0.0).unwrap().len(), 2);
        assert!(s.pair(&g, 0.0).is_err());
        assert!(StateSpec::DiracRest.single(&g, 0.0).is_err());
    }
}
