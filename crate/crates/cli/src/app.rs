//! `run` and `validate` as library calls; `main.rs` only parses flags.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use eulerlab_core::mollify::min_epsilon;
use eulerlab_core::solver::DEFAULT_CFL;
use eulerlab_core::synthesize;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::experiments::{run_experiment, Status};
use crate::output::Artifacts;

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "EULERLAB_OUTPUT_ROOT";
pub const EXIT_ERROR: i32 = 1;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub output_dir: Option<PathBuf>,
    pub output_root: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub seed_override: Option<u64>,
}

#[derive(Debug)]
pub struct RunSummary {
    pub status: Status,
    pub output_dir: PathBuf,
    pub verdict_line: String,
    pub artifacts: Vec<String>,
}

#[derive(Serialize)]
struct Metadata {
    started_unix: f64,
    finished_unix: f64,
    tool_version: &'static str,
    jobs: Option<usize>,
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

pub fn load(path: &Path, seed_override: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed_override {
        cfg.seed = s;
    }
    Ok(cfg)
}

/// Output directory precedence: flag, then `output_dir` in the config
/// (relative paths resolve under the output root when one is set), then
/// `<root or ./runs>/<config file stem>`.
pub fn resolve_output_dir(cfg: &ExperimentConfig, config_path: &Path, opts: &RunOptions) -> PathBuf {
    if let Some(d) = &opts.output_dir {
        return d.clone();
    }
    let root = opts.output_root.clone();
    match (&cfg.output_dir, root) {
        (Some(d), Some(r)) if d.is_relative() => r.join(d),
        (Some(d), _) => d.clone(),
        (None, r) => {
            let stem = config_path
                .file_stem()
                .map_or_else(|| cfg.experiment.name().to_string(), |s| s.to_string_lossy().into_owned());
            r.unwrap_or_else(|| PathBuf::from("runs")).join(stem)
        }
    }
}

fn reject(errs: Vec<CliError>) -> Result<(), CliError> {
    match errs.len() {
        0 => Ok(()),
        1 => Err(errs.into_iter().next().unwrap()),
        _ => Err(CliError::Config {
            key: "config".into(),
            message: errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "),
        }),
    }
}

pub fn run(config_path: &Path, opts: &RunOptions) -> Result<RunSummary, CliError> {
    let started = now();
    let cfg = load(config_path, opts.seed_override)?;
    reject(cfg.check())?;
    if let Some(j) = opts.jobs {
        if j == 0 {
            return Err(CliError::Config {
                key: "--jobs".into(),
                message: "must be at least 1".into(),
            });
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    let dir = resolve_output_dir(&cfg, config_path, opts);
    let hash = cfg.hash();
    let mut out = Artifacts::create(&dir)?;
    out.json("config.json", &cfg)?;
    let outcome = run_experiment(&cfg, &hash, &mut out)?;
    let artifacts = out.finish(cfg.experiment.name(), &hash)?;
    let meta = Metadata {
        started_unix: started,
        finished_unix: now(),
        tool_version: env!("CARGO_PKG_VERSION"),
        jobs: opts.jobs,
    };
    let meta_path = dir.join("metadata.json");
    std::fs::write(&meta_path, serde_json::to_string_pretty(&meta)? + "\n").map_err(|e| CliError::Io {
        path: meta_path,
        source: e,
    })?;
    let label = match outcome.status {
        Status::Pass => "PASS",
        Status::CertificateFailed => "CERTIFICATE FAILED",
        Status::HypothesisNotMet => "HYPOTHESIS NOT MET",
    };
    Ok(RunSummary {
        status: outcome.status,
        output_dir: dir,
        verdict_line: format!("{}: {label} ({})", cfg.experiment.name(), outcome.summary),
        artifacts,
    })
}

/// Diagnostics and derived quantities of a config, without side effects.
#[derive(Debug, Default)]
pub struct Validation {
    pub diagnostics: Vec<String>,
    pub derived: Vec<(String, String)>,
}

pub fn validate(config_path: &Path, seed_override: Option<u64>) -> Validation {
    let cfg = match load(config_path, seed_override) {
        Ok(c) => c,
        Err(e) => {
            return Validation {
                diagnostics: vec![e.to_string()],
                derived: Vec::new(),
            }
        }
    };
    let diagnostics: Vec<String> = cfg.check().iter().map(|e| e.to_string()).collect();
    let mut derived = Vec::new();
    let mut row = |k: &str, v: String| derived.push((k.to_string(), v));
    row("experiment", cfg.experiment.name().into());
    row("seed", cfg.seed.to_string());
    row("config_sha256", cfg.hash());
    let runs: Vec<(&str, &eulerlab_core::SolverConfig)> = [("run", cfg.run.as_ref()), ("run_b", cfg.run_b.as_ref())]
        .into_iter()
        .filter_map(|(n, r)| r.map(|r| (n, r)))
        .collect();
    if runs.is_empty() {
        if let Ok(g) = cfg.static_grid() {
            row("grid_n", g.n_per_axis().to_string());
            row("spacing", format!("{:e}", g.spacing()));
            row("epsilon_range", format!("[{:e}, 0.5]", min_epsilon(&g)));
            if diagnostics.is_empty() {
                row("sweep_epsilons", format!("{:?}", cfg.sweep_epsilons(&g)));
            }
        }
    }
    for (name, r) in runs {
        let Ok(g) = r.grid() else { continue };
        row(&format!("{name}.spacing"), format!("{:e}", g.spacing()));
        row(&format!("{name}.epsilon_range"), format!("[{:e}, 0.5]", min_epsilon(&g)));
        if let Ok(steps) = r.steps() {
            row(&format!("{name}.steps"), steps.to_string());
        }
        if let Ok(s) = r.snapshot_steps() {
            row(&format!("{name}.snapshots"), s.len().to_string());
        }
        if diagnostics.is_empty() {
            if let Ok(u) = synthesize(&cfg.synth_spec(), g) {
                let speed = u.magnitudes().into_iter().fold(0.0f64, f64::max);
                let bound = if speed > 0.0 {
                    r.cfl * g.spacing() / speed
                } else {
                    f64::INFINITY
                };
                row(&format!("{name}.initial_max_speed"), format!("{speed:e}"));
                row(&format!("{name}.cfl_dt_bound"), format!("{bound:e} (cfl {})", r.cfl));
                if r.cfl != DEFAULT_CFL {
                    row(&format!("{name}.cfl_note"), format!("default cfl is {DEFAULT_CFL}"));
                }
            }
        }
    }
    Validation { diagnostics, derived }
}
