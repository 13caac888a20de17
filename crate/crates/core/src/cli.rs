//! Command-line front end. Every output directory receives a
//! `manifest.json` with the config hash, grid, versions and file digests.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::classify::{self, Classification, Outcome};
use crate::config::{ConfigError, InitialData, RawConfig, RunConfig};
use crate::evolve::{evolve_model, EvolutionTrace, Event};
use crate::functionals::Model;
use crate::grid::{RadialField, RadialGrid};
use crate::groundstate::{petviashvili_solve, GroundState, Thresholds};
use crate::params::Criticality;
use crate::potential::{check_assumptions, default_radii};
use crate::verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_MODULE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "inls-lab", version, about = "Radial numerical laboratory for the inhomogeneous NLS with variable dispersion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for sweeps and the verification suite.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
enum Command {
    /// Solve for the ground state; writes profile.csv and groundstate.json.
    Groundstate,
    /// Check the potential assumptions; writes assumptions.json.
    CheckPotential,
    /// Classify the initial data; writes classification.json.
    Classify,
    /// Evolve the initial data; writes trace.csv and events.json.
    Evolve,
    /// One subdirectory per value of `sweep.key`, plus summary.csv.
    Sweep,
    /// Run the acceptance suite.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Groundstate => "groundstate",
            Command::CheckPotential => "check-potential",
            Command::Classify => "classify",
            Command::Evolve => "evolve",
            Command::Sweep => "sweep",
            Command::Verify => "verify",
        }
    }
}

/// Failures that map to exit codes.
#[derive(Debug)]
enum Failure {
    Parse(String),
    Module(String),
    Verify(usize),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Parse(e.to_string())
    }
}

fn module<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Module(e.to_string())
}

/// Entry point; returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.jobs {
        Some(jobs) => match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => Err(module(e)),
        },
        None => dispatch(&cli),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Parse(msg)) => {
            eprintln!("config error: {msg}");
            EXIT_PARSE
        }
        Err(Failure::Module(msg)) => {
            eprintln!("error: {msg}");
            EXIT_MODULE
        }
        Err(Failure::Verify(failed)) => {
            eprintln!("verification failed: {failed} criteria");
            EXIT_VERIFY
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    if cli.command == Command::Verify {
        let raw = cli.config.as_deref().map(RawConfig::load).transpose()?;
        return run_verify(raw.as_ref(), cli.out.as_deref());
    }
    let path = cli.config.as_ref().ok_or_else(|| Failure::Parse("--config <path> is required".into()))?;
    let raw = RawConfig::load(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let cfg = raw.build(&base)?;
    let out = cli.out.clone().unwrap_or_else(|| cfg.output.clone());
    match cli.command {
        Command::Sweep => run_sweep(&raw, &base, &out),
        cmd => {
            let files = run_single(cmd, &cfg, &out)?;
            write_manifest(&out, cmd.name(), &raw, &cfg, &files)
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<String, Failure> {
    fs::create_dir_all(dir).map_err(|e| module(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| module(format!("cannot write {}: {e}", path.display())))?;
    Ok(name.to_string())
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Result<String, Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(module)?;
    text.push('\n');
    write_file(dir, name, text.as_bytes())
}

fn write_manifest(dir: &Path, command: &str, raw: &RawConfig, cfg: &RunConfig, files: &[String]) -> Result<(), Failure> {
    let grid = serde_json::json!({
        "n": cfg.params.n,
        "b": cfg.params.b,
        "r_max": cfg.grid.r_max,
        "cells": cfg.grid.cells,
        "grading": cfg.grid.grading,
    });
    manifest(dir, command, &raw.canonical(), grid, files)
}

fn manifest(dir: &Path, command: &str, config: &str, grid: serde_json::Value, files: &[String]) -> Result<(), Failure> {
    let mut digests = serde_json::Map::new();
    for name in files {
        let bytes = fs::read(dir.join(name)).map_err(module)?;
        digests.insert(name.clone(), hex(&Sha256::digest(&bytes)).into());
    }
    let version = env!("CARGO_PKG_VERSION");
    let modules: serde_json::Map<String, serde_json::Value> =
        ["params", "potential", "grid", "functionals", "groundstate", "evolve", "classify", "cli"]
            .iter()
            .map(|m| (m.to_string(), version.into()))
            .collect();
    let manifest = serde_json::json!({
        "command": command,
        "config_sha256": hex(&Sha256::digest(config.as_bytes())),
        "config": config,
        "grid": grid,
        "version": version,
        "modules": modules,
        "files": digests,
    });
    write_json(dir, "manifest.json", &manifest).map(|_| ())
}

/// Everything a subcommand needs, built once from the config.
struct Setup {
    grid: Arc<RadialGrid>,
    model: Model,
    /// `Q_ω` at the configured frequency, when it had to be solved for.
    ground_state: Option<GroundState>,
    thresholds: Option<Thresholds>,
}

fn needs_ground_state(cfg: &RunConfig, cmd: Command) -> bool {
    matches!(cmd, Command::Groundstate | Command::Classify) || matches!(cfg.initial, InitialData::GroundStateMultiple { .. })
}

fn setup(cfg: &RunConfig, cmd: Command) -> Result<Setup, Failure> {
    let p = cfg.params;
    let grid = RadialGrid::build(p.n, p.b, cfg.grid.r_max, cfg.grid.cells, cfg.grid.grading).map_err(module)?;
    let model = Model::new(p, cfg.potential, grid.clone()).map_err(module)?;
    let ground_state = if needs_ground_state(cfg, cmd) { Some(petviashvili_solve(&p, &grid, None).map_err(module)?) } else { None };
    let thresholds = match (&ground_state, cmd) {
        (Some(gs), _) if gs.thresholds.is_some() => gs.thresholds,
        (_, Command::Groundstate | Command::Classify | Command::Sweep) => {
            petviashvili_solve(&p.with_omega(1.0), &grid, None).map_err(module)?.thresholds
        }
        _ => None,
    };
    Ok(Setup { grid, model, ground_state, thresholds })
}

fn initial_data(cfg: &RunConfig, s: &Setup) -> Result<RadialField, Failure> {
    Ok(match &cfg.initial {
        InitialData::GroundStateMultiple { alpha } => s.ground_state.as_ref().expect("solved in setup").profile.scaled_real(*alpha),
        InitialData::Gaussian { amplitude, width } => {
            RadialField::from_real_fn(s.grid.clone(), |r| amplitude * (-(r * r) / (2.0 * width * width)).exp())
        }
        InitialData::FromFile { path } => RadialField::load_csv(path, s.grid.clone()).map_err(module)?,
    })
}

fn groundstate_json(gs: &GroundState, thresholds: &Option<Thresholds>) -> serde_json::Value {
    serde_json::json!({
        "omega": gs.omega,
        "residual": gs.residual,
        "pohozaev_res": [gs.pohozaev_res.0, gs.pohozaev_res.1],
        "c_gn": gs.c_gn,
        "m_omega": gs.m_omega,
        "stabilizer": gs.stabilizer,
        "iterations": gs.iterations,
        "center_value": gs.profile.values[0].re,
        "report": gs.report,
        "thresholds": thresholds,
    })
}

fn classification(cfg: &RunConfig, s: &Setup, u0: &RadialField) -> Result<Classification, Failure> {
    let th = s.thresholds.as_ref().ok_or_else(|| module("thresholds need mass-critical or intercritical parameters"))?;
    let report = check_assumptions(&cfg.potential, &cfg.params, &default_radii());
    classify::classify_all(u0, &s.model, &report, th, cfg.classify_omega).map_err(module)
}

fn classification_json(s: &Setup, u0: &RadialField, cls: &Classification) -> Result<serde_json::Value, Failure> {
    let mut value = serde_json::json!({ "entries": cls.entries, "summary": summary_verdict(cls).0 });
    if s.model.exponents.criticality == Criticality::Intercritical {
        let th = s.thresholds.as_ref().expect("checked by classification");
        value["frequency"] = serde_json::to_value(classify::optimal_frequency(u0, &s.model, th).map_err(module)?).map_err(module)?;
    }
    value["criticality"] = serde_json::to_value(s.model.exponents.criticality).map_err(module)?;
    Ok(value)
}

/// Combined verdict over the decided entries: `Conflict` if they disagree.
pub fn summary_verdict(cls: &Classification) -> (&'static str, Option<Outcome>) {
    let mut decided = cls.entries.iter().map(|e| e.verdict).filter(|v| matches!(v, Outcome::GlobalCandidate | Outcome::BlowupCandidate));
    match decided.next() {
        None if cls.entries.iter().any(|e| e.verdict == Outcome::Undetermined) => ("Undetermined", Some(Outcome::Undetermined)),
        None => ("NotApplicable", Some(Outcome::NotApplicable)),
        Some(first) if decided.all(|v| v == first) => (outcome_name(first), Some(first)),
        Some(_) => ("Conflict", None),
    }
}

pub fn outcome_name(o: Outcome) -> &'static str {
    match o {
        Outcome::GlobalCandidate => "GlobalCandidate",
        Outcome::BlowupCandidate => "BlowupCandidate",
        Outcome::NotApplicable => "NotApplicable",
        Outcome::Undetermined => "Undetermined",
    }
}

fn trace_files(dir: &Path, tr: &EvolutionTrace) -> Result<Vec<String>, Failure> {
    let mut csv = Vec::new();
    tr.write_csv(&mut csv).map_err(module)?;
    Ok(vec![write_file(dir, "trace.csv", &csv)?, write_json(dir, "events.json", &tr.sidecar())?])
}

fn run_single(cmd: Command, cfg: &RunConfig, out: &Path) -> Result<Vec<String>, Failure> {
    if cmd == Command::CheckPotential {
        let report = check_assumptions(&cfg.potential, &cfg.params, &default_radii());
        return Ok(vec![write_json(out, "assumptions.json", &serde_json::to_value(&report).map_err(module)?)?]);
    }
    let s = setup(cfg, cmd)?;
    match cmd {
        Command::Groundstate => {
            let gs = s.ground_state.as_ref().expect("solved in setup");
            let mut csv = Vec::new();
            gs.profile.write_csv(&mut csv).map_err(module)?;
            Ok(vec![write_file(out, "profile.csv", &csv)?, write_json(out, "groundstate.json", &groundstate_json(gs, &s.thresholds))?])
        }
        Command::Classify => {
            let u0 = initial_data(cfg, &s)?;
            let cls = classification(cfg, &s, &u0)?;
            Ok(vec![write_json(out, "classification.json", &classification_json(&s, &u0, &cls)?)?])
        }
        Command::Evolve => {
            let u0 = initial_data(cfg, &s)?;
            let tr = evolve_model(&u0, &cfg.evolution, &s.model, |_, _| {}).map_err(module)?;
            trace_files(out, &tr)
        }
        Command::CheckPotential | Command::Sweep | Command::Verify => unreachable!("handled by dispatch"),
    }
}

/// One sweep point: classification plus evolution.
struct PointResult {
    value: String,
    verdicts: Vec<&'static str>,
    summary: &'static str,
    outcome: &'static str,
    trigger: Option<f64>,
    grad_growth: f64,
    steps: usize,
}

const ROUTES: [&str; 4] = ["mass_critical_threshold", "intercritical_threshold", "action_sets", "frequency_optimized"];

fn sweep_point(raw: &RawConfig, base: &Path, dir: &Path, value: &str) -> Result<PointResult, Failure> {
    let cfg = raw.build(base)?;
    let s = setup(&cfg, Command::Sweep)?;
    let u0 = initial_data(&cfg, &s)?;
    let mut files = Vec::new();
    let (verdicts, summary) = if s.thresholds.is_some() {
        let cls = classification(&cfg, &s, &u0)?;
        files.push(write_json(dir, "classification.json", &classification_json(&s, &u0, &cls)?)?);
        let verdicts = ROUTES.iter().map(|id| cls.get(id).map(|e| outcome_name(e.verdict)).unwrap_or("NotApplicable")).collect();
        (verdicts, summary_verdict(&cls).0)
    } else {
        (vec!["NotApplicable"; ROUTES.len()], "NotApplicable")
    };
    let tr = evolve_model(&u0, &cfg.evolution, &s.model, |_, _| {}).map_err(module)?;
    files.extend(trace_files(dir, &tr)?);
    write_manifest(dir, "sweep", raw, &cfg, &files)?;
    let outcome = match tr.events.last() {
        Some(Event::BlowupTriggered { .. }) => "blowup_triggered",
        Some(Event::StepFloorHit { .. }) => "step_floor",
        _ => "completed",
    };
    Ok(PointResult {
        value: value.to_string(),
        verdicts,
        summary,
        outcome,
        trigger: tr.blowup_time(),
        grad_growth: tr.grad_growth(),
        steps: tr.steps,
    })
}

fn run_sweep(raw: &RawConfig, base: &Path, out: &Path) -> Result<(), Failure> {
    let cfg = raw.build(base)?;
    let axis = cfg.sweep.clone().ok_or_else(|| Failure::Parse("sweep needs sweep.key and sweep.values".into()))?;
    // parse every point before running any of them
    let points: Vec<RawConfig> = axis.values.iter().map(|v| raw.with_override(&axis.key, v)).collect::<Result<_, _>>()?;
    for p in &points {
        p.build(base)?;
    }
    let results: Vec<PointResult> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| sweep_point(p, base, &out.join(format!("point_{i:03}")), &axis.values[i]))
        .collect::<Result<_, _>>()?;

    let mut csv = format!("point,{},{},verdict,outcome,t_trigger,grad_growth,steps\n", axis.key, ROUTES.join(","));
    for (i, r) in results.iter().enumerate() {
        let trigger = r.trigger.map(|t| format!("{t:e}")).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{i},{},{},{},{},{trigger},{:e},{}",
            r.value,
            r.verdicts.join(","),
            r.summary,
            r.outcome,
            r.grad_growth,
            r.steps
        );
    }
    let files = vec![write_file(out, "summary.csv", csv.as_bytes())?];
    write_manifest(out, "sweep", raw, &cfg, &files)
}

fn run_verify(raw: Option<&RawConfig>, out: Option<&Path>) -> Result<(), Failure> {
    let reports = verify::run_all();
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    for r in &reports {
        let _ = writeln!(lock, "{}", r.summary_line());
        for c in &r.checks {
            let _ = writeln!(lock, "    {c}");
        }
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    let _ = writeln!(lock, "{} of {} criteria passed", reports.len() - failed, reports.len());
    if let Some(dir) = out {
        let files = vec![write_json(dir, "verify.json", &serde_json::to_value(&reports).map_err(module)?)?];
        let grid = serde_json::json!({ "r_max": verify::R_MAX, "cells": verify::CELLS, "grading": verify::GRADING });
        manifest(dir, "verify", &raw.map(RawConfig::canonical).unwrap_or_default(), grid, &files)?;
    }
    if failed > 0 {
        Err(Failure::Verify(failed))
    } else {
        Ok(())
    }
}
