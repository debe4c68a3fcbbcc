//! Command-line driver: config loading with dotted overrides, the
//! subcommands, run manifests and exit codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::propagate::{evolve_window, Potential};
use crate::scenarios::{self, apply_override, canonical_hash, Assertion, GridSpec, ScenarioConfig, StateSpec, WindowSpec};
use crate::snapshot::write_record;
use crate::trajectory::{ensemble, stratified_seeds, FieldInterpolator, Mode, TraceOptions};
use crate::verify::{self, VerifyConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "symbohm", version, about = "Two-wavefunction pilot-wave simulations")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (default: $SYMBOHM_OUT, then ./symbohm-out/<command>).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Replaces the config's RNG seed.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Dotted-path override, e.g. --set grid.points=512 (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Worker threads (default: $SYMBOHM_THREADS, then all cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve one wavefunction over a window and store the record.
    Evolve,
    /// Trace an ensemble of world lines.
    Trajectories,
    /// Run the EPR scenario.
    Epr,
    /// Run the Dirac scenario.
    Dirac,
    /// List or run canned scenarios.
    Scenario {
        #[command(subcommand)]
        action: ScenarioAction,
    },
    /// Run invariant suites.
    Verify {
        /// One of the suite names, or `full`.
        #[arg(default_value = "full")]
        suite: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum ScenarioAction {
    List,
    Run { id: String },
}

/// Beside every command's outputs; the only place wall-clock data appears.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub command: String,
    pub tool_version: String,
    pub config_hash: String,
    pub started_unix: f64,
    pub wall_clock_seconds: f64,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub passed: bool,
    pub checks: usize,
    pub failures: Vec<String>,
    pub warnings: Vec<String>,
}

/// What a command produced, before the manifest is written.
struct Outcome {
    config_hash: String,
    outputs: Vec<String>,
    checks: Vec<Assertion>,
    warnings: Vec<String>,
}

/// Evolution of a single wavefunction.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    #[serde(default)]
    pub seed: u64,
    pub grid: GridSpec,
    pub window: WindowSpec,
    /// Given at t1 when evolving forward, at t2 when evolving backward.
    pub state: StateSpec,
    #[serde(default)]
    pub potential: Potential,
    #[serde(default)]
    pub backward: bool,
}

/// A batch of world lines for the standard model (no final state) or the
/// symmetric one.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    #[serde(default)]
    pub seed: u64,
    pub grid: GridSpec,
    pub window: WindowSpec,
    pub initial: StateSpec,
    #[serde(rename = "final", default)]
    pub final_state: Option<StateSpec>,
    #[serde(default)]
    pub potential: Potential,
    pub seeds: usize,
    /// Trace in lambda rather than in time.
    #[serde(default)]
    pub lambda: bool,
    #[serde(default)]
    pub options: TraceOptions,
}

#[derive(Serialize)]
struct LineEntry {
    index: usize,
    t: f64,
    x: f64,
    weight: f64,
    ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    points: usize,
    turning_points: usize,
}

/// Parses the command line, runs it and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(passed) => {
            if passed {
                EXIT_OK
            } else {
                EXIT_ASSERTION
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                EXIT_CONFIG
            } else {
                EXIT_NUMERIC
            }
        }
    }
}

fn execute(cli: &Cli) -> Result<bool> {
    set_threads(cli.common.threads)?;
    let started = SystemTime::now();
    let clock = Instant::now();
    let (name, outcome, out) = match &cli.command {
        Command::Scenario {
            action: ScenarioAction::List,
        } => {
            for s in scenarios::SCENARIOS {
                println!("{:<28} {}", s.id, s.summary);
            }
            return Ok(true);
        }
        Command::Scenario {
            action: ScenarioAction::Run { id },
        } => {
            let out = out_dir(&cli.common, id);
            ("scenario", run_scenario(&cli.common, id, &out)?, out)
        }
        Command::Epr => {
            let out = out_dir(&cli.common, "epr");
            ("epr", run_scenario(&cli.common, "epr-zigzag", &out)?, out)
        }
        Command::Dirac => {
            let out = out_dir(&cli.common, "dirac");
            ("dirac", run_scenario(&cli.common, "dirac-demo", &out)?, out)
        }
        Command::Evolve => {
            let out = out_dir(&cli.common, "evolve");
            ("evolve", cmd_evolve(&cli.common, &out)?, out)
        }
        Command::Trajectories => {
            let out = out_dir(&cli.common, "trajectories");
            ("trajectories", cmd_trajectories(&cli.common, &out)?, out)
        }
        Command::Verify { suite } => {
            let out = out_dir(&cli.common, "verify");
            ("verify", cmd_verify(&cli.common, suite, &out)?, out)
        }
    };
    for c in &outcome.checks {
        println!(
            "{} {} = {:e} ({} {:e}){}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            serde_json::to_value(c.relation).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default(),
            c.threshold,
            if c.detail.is_empty() { String::new() } else { format!(": {}", c.detail) }
        );
    }
    for w in &outcome.warnings {
        log::warn!("{w}");
    }
    let failures: Vec<String> = outcome.checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
    let passed = failures.is_empty();
    let started_unix = started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let manifest = RunManifest {
        run_id: format!("{}-{}", &outcome.config_hash[..12], (started_unix * 1e3) as u64),
        command: name.to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: outcome.config_hash,
        started_unix,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
        inputs: cli.common.config.iter().map(|p| p.display().to_string()).collect(),
        outputs: outcome.outputs,
        passed,
        checks: outcome.checks.len(),
        failures,
        warnings: outcome.warnings,
    };
    fs::create_dir_all(&out)?;
    fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    println!(
        "{}: {} checks, {} failed; outputs in {}",
        name,
        manifest.checks,
        manifest.failures.len(),
        out.display()
    );
    Ok(passed)
}

fn set_threads(flag: Option<usize>) -> Result<()> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("SYMBOHM_THREADS") {
            Ok(v) => Some(
                v.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("SYMBOHM_THREADS = '{v}' is not a count")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(Error::Config("thread count must be positive".into()));
        }
        // a second initialization in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn out_dir(common: &Common, tag: &str) -> PathBuf {
    if let Some(o) = &common.out {
        return o.clone();
    }
    match std::env::var_os("SYMBOHM_OUT") {
        Some(o) => PathBuf::from(o),
        None => Path::new("symbohm-out").join(tag),
    }
}

/// Reads the config file (or takes `default`), then applies `--set` and `--seed`.
pub fn load_document(path: Option<&Path>, default: impl FnOnce() -> Result<Value>, common: &Common) -> Result<Value> {
    let mut doc = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => default()?,
    };
    for o in &common.overrides {
        apply_override(&mut doc, o)?;
    }
    if let Some(seed) = common.seed {
        apply_override(&mut doc, &format!("seed={seed}"))?;
    }
    Ok(doc)
}

fn typed<T: for<'de> Deserialize<'de>>(doc: Value, what: &str) -> Result<T> {
    serde_json::from_value(doc).map_err(|e| Error::Config(format!("{what} config: {e}")))
}

fn run_scenario(common: &Common, id: &str, out: &Path) -> Result<Outcome> {
    let scenario = scenarios::find(id)?;
    let doc = load_document(common.config.as_deref(), || Ok(scenario.default_json()), common)?;
    if let Some(named) = doc.get("scenario").and_then(Value::as_str) {
        if named != id {
            return Err(Error::Config(format!("config is for scenario '{named}', not '{id}'")));
        }
    }
    let config: ScenarioConfig = typed(doc, id)?;
    let report = scenarios::run(&config, Some(out))?;
    let mut outputs = report.artifacts.clone();
    outputs.push("report.json".into());
    Ok(Outcome {
        config_hash: report.config_hash.clone(),
        outputs,
        checks: report.assertions.clone(),
        warnings: report.warnings.clone(),
    })
}

fn cmd_evolve(common: &Common, out: &Path) -> Result<Outcome> {
    let path = common
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("evolve needs --config".into()))?;
    let doc = load_document(Some(path), || unreachable!(), common)?;
    let hash = canonical_hash(&doc);
    let config: EvolveConfig = typed(doc, "evolve")?;
    let grid = config.grid.build()?;
    let w = &config.window;
    let (from, to) = if config.backward { (w.t2, w.t1) } else { (w.t1, w.t2) };
    let psi = config.state.single(&grid, from)?;
    let record = evolve_window(&psi, &config.potential, from, to, w.dt, w.stride)?;
    write_record(&record, &out.join("record"))?;
    let mut outputs = vec!["record/record.json".to_string()];
    outputs.extend((0..record.len()).flat_map(|k| [format!("record/snap_{k:05}.json"), format!("record/snap_{k:05}.csv")]));
    Ok(Outcome {
        config_hash: hash,
        outputs,
        checks: Vec::new(),
        warnings: record.warnings,
    })
}

fn cmd_trajectories(common: &Common, out: &Path) -> Result<Outcome> {
    let path = common
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("trajectories needs --config".into()))?;
    let doc = load_document(Some(path), || unreachable!(), common)?;
    let hash = canonical_hash(&doc);
    let config: TrajectoryConfig = typed(doc, "trajectories")?;
    if config.seeds == 0 {
        return Err(Error::Config("seeds must be positive".into()));
    }
    let grid = config.grid.build()?;
    let w = &config.window;
    let psi_i = config.initial.single(&grid, w.t1)?;
    let forward = evolve_window(&psi_i, &config.potential, w.t1, w.t2, w.dt, w.stride)?;
    let mut warnings = forward.warnings.clone();
    let interp = match &config.final_state {
        Some(spec) => {
            let psi_f = spec.single(&grid, w.t2)?;
            let backward = evolve_window(&psi_f, &config.potential, w.t2, w.t1, w.dt, w.stride)?;
            warnings.extend(backward.warnings.iter().cloned());
            let a = crate::field::amplitude(backward.last(), forward.first())?;
            FieldInterpolator::symmetric(&forward, &backward, &a)?
        }
        None => FieldInterpolator::standard(&forward)?,
    };
    warnings.extend(interp.warnings.iter().cloned());
    let seeds = stratified_seeds(&grid, interp.slice_density(0), config.seeds, w.t1);
    let mode = if config.lambda { Mode::Lambda } else { Mode::Time { t_end: w.t2 } };
    let lines = ensemble(&interp, &seeds, mode, &config.options);
    let dir = out.join("lines");
    fs::create_dir_all(&dir)?;
    let mut outputs = Vec::new();
    let mut entries = Vec::new();
    for (k, (seed, line)) in seeds.iter().zip(&lines).enumerate() {
        let mut e = LineEntry {
            index: k,
            t: seed.t,
            x: seed.x,
            weight: seed.weight,
            ok: line.is_ok(),
            file: None,
            error: None,
            points: 0,
            turning_points: 0,
        };
        match line {
            Ok(l) => {
                let name = format!("lines/line_{k:05}.csv");
                fs::write(out.join(&name), l.to_csv())?;
                e.points = l.len();
                e.turning_points = l.turning_points.len();
                outputs.push(name.clone());
                e.file = Some(name);
            }
            Err(err) => e.error = Some(err.to_string()),
        }
        entries.push(e);
    }
    let failed = entries.iter().filter(|e| !e.ok).count();
    if failed > 0 {
        warnings.push(format!("{failed} of {} lines failed; see batch.json", entries.len()));
    }
    let batch = serde_json::json!({ "config_hash": hash, "lines": entries });
    fs::write(out.join("batch.json"), serde_json::to_string_pretty(&batch)? + "\n")?;
    outputs.push("batch.json".into());
    Ok(Outcome {
        config_hash: hash,
        outputs,
        checks: Vec::new(),
        warnings,
    })
}

fn cmd_verify(common: &Common, suite: &str, out: &Path) -> Result<Outcome> {
    if !verify::SUITES.contains(&suite) {
        return Err(Error::Config(format!("unknown suite '{suite}' (known: {})", verify::SUITES.join(", "))));
    }
    let doc = load_document(
        common.config.as_deref(),
        || Ok(serde_json::to_value(VerifyConfig::default())?),
        common,
    )?;
    let config: VerifyConfig = typed(doc, "verify")?;
    let report = verify::run_suite(suite, &config, Some(out))?;
    let mut outputs = vec!["verify_report.json".to_string()];
    for r in &report.scenarios {
        outputs.extend(r.artifacts.iter().map(|a| format!("scenarios/{}/{a}", r.scenario)));
        outputs.push(format!("scenarios/{}/report.json", r.scenario));
    }
    Ok(Outcome {
        config_hash: report.config_hash.clone(),
        outputs,
        checks: report.checks,
        warnings: report.warnings,
    })
}
