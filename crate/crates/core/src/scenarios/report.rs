use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Below,
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">")]
    Above,
    #[serde(rename = ">=")]
    AtLeast,
}

impl Relation {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Relation::Below => value < threshold,
            Relation::AtMost => value <= threshold,
            Relation::Above => value > threshold,
            Relation::AtLeast => value >= threshold,
        }
    }
}

/// One checked claim: `value relation threshold`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub seed: u64,
    pub config_hash: String,
    pub passed: bool,
    pub assertions: Vec<Assertion>,
    pub metrics: BTreeMap<String, f64>,
    /// Paths relative to the output directory.
    pub artifacts: Vec<String>,
    pub warnings: Vec<String>,
}

impl ScenarioReport {
    pub fn assertion(&self, name: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.name == name)
    }

    pub fn failures(&self) -> Vec<&Assertion> {
        self.assertions.iter().filter(|a| !a.passed).collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

/// Collects assertions, metrics and artifacts while a scenario runs.
pub struct ReportBuilder {
    contract: &'static [&'static str],
    assertions: Vec<Assertion>,
    metrics: BTreeMap<String, f64>,
    artifacts: Vec<String>,
    warnings: Vec<String>,
    out: Option<PathBuf>,
}

impl ReportBuilder {
    pub fn new(contract: &'static [&'static str], out: Option<&Path>) -> Result<Self> {
        if let Some(dir) = out {
            fs::create_dir_all(dir)?;
        }
        Ok(Self {
            contract,
            assertions: Vec::new(),
            metrics: BTreeMap::new(),
            artifacts: Vec::new(),
            warnings: Vec::new(),
            out: out.map(Path::to_path_buf),
        })
    }

    pub fn check(&mut self, name: &str, value: f64, relation: Relation, threshold: f64) -> bool {
        self.check_with(name, value, relation, threshold, String::new())
    }

    pub fn check_with(&mut self, name: &str, value: f64, relation: Relation, threshold: f64, detail: String) -> bool {
        let passed = value.is_finite() && relation.holds(value, threshold);
        self.assertions.push(Assertion {
            name: name.to_string(),
            passed,
            value,
            relation,
            threshold,
            detail,
        });
        passed
    }

    /// A yes/no claim recorded as 1 or 0 against a threshold of 1.
    pub fn check_flag(&mut self, name: &str, ok: bool, detail: String) -> bool {
        self.check_with(name, if ok { 1.0 } else { 0.0 }, Relation::AtLeast, 1.0, detail)
    }

    pub fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        if !self.warnings.contains(&msg) {
            self.warnings.push(msg);
        }
    }

    pub fn warn_all<'a>(&mut self, msgs: impl IntoIterator<Item = &'a String>) {
        for m in msgs {
            self.warn(m.clone());
        }
    }

    pub fn wants_output(&self) -> bool {
        self.out.is_some()
    }

    /// Writes `contents` under the output directory, if there is one.
    pub fn artifact(&mut self, name: &str, contents: &str) -> Result<()> {
        if let Some(dir) = &self.out {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, contents)?;
            self.artifacts.push(name.to_string());
        }
        Ok(())
    }

    /// Finalizes the report, checking the contract and writing `report.json`.
    pub fn finish(mut self, scenario: &str, seed: u64, config_hash: String) -> Result<ScenarioReport> {
        for name in self.contract {
            let n = self.assertions.iter().filter(|a| a.name == *name).count();
            if n != 1 {
                return Err(Error::Config(format!("assertion '{name}' recorded {n} times in {scenario}")));
            }
        }
        if let Some(extra) = self.assertions.iter().find(|a| !self.contract.contains(&a.name.as_str())) {
            return Err(Error::Config(format!("assertion '{}' is not in the {scenario} contract", extra.name)));
        }
        if self.out.is_some() {
            self.artifacts.push("report.json".into());
        }
        let report = ScenarioReport {
            scenario: scenario.to_string(),
            seed,
            config_hash,
            passed: self.assertions.iter().all(|a| a.passed),
            assertions: self.assertions,
            metrics: self.metrics,
            artifacts: self.artifacts,
            warnings: self.warnings,
        };
        if let Some(dir) = &self.out {
            fs::write(dir.join("report.json"), report.to_json())?;
        }
        Ok(report)
    }
}

/// CSV with a header row; floats in shortest round-trip form.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}
