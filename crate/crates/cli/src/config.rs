//! Experiment configuration files (TOML).

use std::path::{Path, PathBuf};

use eulerlab_core::mollify::{check_epsilon, min_epsilon};
use eulerlab_core::synth::ScalarSpec;
use eulerlab_core::uniqueness::{BudgetPath, UniquenessConfig};
use eulerlab_core::{PeriodicGrid, SolverConfig, SynthSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    BesovFit,
    CommutatorScaling,
    CetScaling,
    EnergyConservation,
    Uniqueness,
    InhomUniqueness,
    BoussinesqUniqueness,
    WeakResidual,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::BesovFit => "besov_fit",
            Experiment::CommutatorScaling => "commutator_scaling",
            Experiment::CetScaling => "cet_scaling",
            Experiment::EnergyConservation => "energy_conservation",
            Experiment::Uniqueness => "uniqueness",
            Experiment::InhomUniqueness => "inhom_uniqueness",
            Experiment::BoussinesqUniqueness => "boussinesq_uniqueness",
            Experiment::WeakResidual => "weak_residual",
        }
    }

    /// Experiments that integrate in time and need a `[run]` table.
    pub fn needs_run(self) -> bool {
        !matches!(self, Experiment::BesovFit | Experiment::CommutatorScaling | Experiment::CetScaling)
    }

    pub fn pairs_runs(self) -> bool {
        matches!(
            self,
            Experiment::Uniqueness | Experiment::InhomUniqueness | Experiment::BoussinesqUniqueness
        )
    }
}

/// Analysis parameters; each experiment reads the keys it needs and ignores
/// the rest.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Analysis {
    /// Grid for experiments without a `[run]` table.
    pub grid_n: Option<usize>,
    pub p: Option<f64>,
    pub alpha: Option<f64>,
    pub epsilons: Option<Vec<f64>>,
    pub path: Option<BudgetPath>,
    pub reg_epsilon: Option<f64>,
    pub certify_tolerance: Option<f64>,
    pub slope_tolerance: Option<f64>,
    /// Pass threshold of the headline quantity (drift, exponent error,
    /// scalar contraction slack).
    pub tolerance: Option<f64>,
    pub admissibility_tolerance: Option<f64>,
    pub momentum_tolerance: Option<f64>,
    pub scalar_tolerance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Buoyancy {
    pub g: [f64; 2],
    pub theta: ScalarSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<SolverConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_b: Option<SolverConfig>,
    pub initial_condition: SynthSpec,
    #[serde(default)]
    pub analysis: Analysis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<ScalarSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub buoyancy: Option<Buoyancy>,
}

pub const DEFAULT_P: f64 = 3.0;
pub const DEFAULT_EXPONENT_TOLERANCE: f64 = 0.05;
pub const DEFAULT_DRIFT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_ADMISSIBILITY_TOLERANCE: f64 = 1e-7;
pub const DEFAULT_MOMENTUM_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_SCALAR_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_CONTRACTION_TOLERANCE: f64 = 1e-5;
/// Offset between the seeds of the two fields of a CET sweep.
pub const CET_SECOND_FIELD_SEED_OFFSET: u64 = 1000;

fn key(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config {
        key: key.to_string(),
        message: msg.to_string(),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_toml(&text)
    }

    /// SHA-256 of the canonical JSON form, so formatting and key order in
    /// the file do not matter.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn p(&self) -> f64 {
        self.analysis.p.unwrap_or(DEFAULT_P)
    }

    pub fn run(&self) -> Result<&SolverConfig, CliError> {
        self.run
            .as_ref()
            .ok_or_else(|| key("run", format!("{} needs a [run] table", self.experiment.name())))
    }

    pub fn run_b(&self) -> Result<&SolverConfig, CliError> {
        match &self.run_b {
            Some(r) => Ok(r),
            None => self.run(),
        }
    }

    /// Grid of the static experiments: `analysis.grid_n`, else `run.grid_n`.
    pub fn static_grid(&self) -> Result<PeriodicGrid, CliError> {
        let (name, n) = match (self.analysis.grid_n, &self.run) {
            (Some(n), _) => ("analysis.grid_n", n),
            (None, Some(r)) => ("run.grid_n", r.grid_n),
            (None, None) => return Err(key("analysis.grid_n", "required when there is no [run] table")),
        };
        PeriodicGrid::new(2, n).map_err(|e| key(name, e))
    }

    pub fn synth_spec(&self) -> SynthSpec {
        SynthSpec {
            seed: self.seed,
            ..self.initial_condition.clone()
        }
    }

    pub fn density_spec(&self) -> Result<ScalarSpec, CliError> {
        let d = self
            .density
            .as_ref()
            .ok_or_else(|| key("density", "inhom_uniqueness needs a [density] table"))?;
        Ok(ScalarSpec {
            seed: self.seed.wrapping_add(1),
            ..d.clone()
        })
    }

    pub fn buoyancy(&self) -> Result<([f64; 2], ScalarSpec), CliError> {
        let b = self
            .buoyancy
            .as_ref()
            .ok_or_else(|| key("buoyancy", "boussinesq_uniqueness needs a [buoyancy] table"))?;
        Ok((
            b.g,
            ScalarSpec {
                seed: self.seed.wrapping_add(2),
                ..b.theta.clone()
            },
        ))
    }

    /// Sweep radii: `analysis.epsilons`, else the dyadic sequence from 1/8
    /// down to the smallest admissible radius of `grid`.
    pub fn sweep_epsilons(&self, grid: &PeriodicGrid) -> Vec<f64> {
        if let Some(e) = &self.analysis.epsilons {
            return e.clone();
        }
        let floor = min_epsilon(grid);
        let mut out = Vec::new();
        let mut e = 0.125;
        while e >= floor * (1.0 - 1e-12) {
            out.push(e);
            e *= 0.5;
        }
        out
    }

    pub fn uniqueness_config(&self) -> UniquenessConfig {
        let a = &self.analysis;
        let path = a.path.unwrap_or(BudgetPath::Trilinear);
        UniquenessConfig {
            alpha: a.alpha.unwrap_or(0.9),
            p: self.p(),
            epsilons: a.epsilons.clone().unwrap_or_default(),
            path,
            reg_epsilon: a.reg_epsilon,
            certify_tolerance: a.certify_tolerance,
        }
    }

    /// Range checks without running anything. Every message names the key
    /// it concerns.
    pub fn check(&self) -> Vec<CliError> {
        let mut errs = Vec::new();
        if self.initial_condition.seed != 0 {
            errs.push(key("initial_condition.seed", "use the top-level `seed` key"));
        }
        for (name, spec) in [
            ("density.seed", self.density.as_ref()),
            ("buoyancy.theta.seed", self.buoyancy.as_ref().map(|b| &b.theta)),
        ] {
            if spec.is_some_and(|s| s.seed != 0) {
                errs.push(key(name, "use the top-level `seed` key"));
            }
        }
        if let Err(e) = self.initial_condition.validate() {
            errs.push(key("initial_condition", e));
        }
        if self.p() < 1.0 || !self.p().is_finite() {
            errs.push(key("analysis.p", format!("must be >= 1 (got {})", self.p())));
        }
        if self.experiment.needs_run() {
            match &self.run {
                None => errs.push(key("run", format!("{} needs a [run] table", self.experiment.name()))),
                Some(r) => check_run("run", r, &mut errs),
            }
            if let Some(r) = &self.run_b {
                check_run("run_b", r, &mut errs);
                if let Some(a) = &self.run {
                    if a.t_final != r.t_final {
                        errs.push(key("run_b.T", "both runs must share the final time"));
                    }
                }
            }
        } else if let Err(e) = self.static_grid() {
            errs.push(e);
        }
        if let Some(j) = self.initial_condition.j_max {
            if let Some(g) = self.primary_grid() {
                if (1usize << j.min(62)) > g.dealias_cutoff() {
                    errs.push(key(
                        "initial_condition.j_max",
                        format!("2^{j} exceeds the dealiased band n/3 of a {}-point grid", g.n_per_axis()),
                    ));
                }
            }
        }
        if self.experiment.pairs_runs() {
            let u = self.uniqueness_config();
            if let Err(e) = u.validate() {
                errs.push(key("analysis", e));
            }
            if let Some(g) = self.comparison_grid() {
                for (i, &e) in u.epsilons.iter().enumerate() {
                    if let Err(err) = check_epsilon(&g, e) {
                        errs.push(key(&format!("analysis.epsilons[{i}]"), err));
                    }
                }
                if let Some(e) = u.reg_epsilon {
                    if let Err(err) = check_epsilon(&g, e) {
                        errs.push(key("analysis.reg_epsilon", err));
                    }
                }
            }
        }
        match self.experiment {
            Experiment::CommutatorScaling | Experiment::CetScaling => {
                if let Ok(g) = self.static_grid() {
                    let eps = self.sweep_epsilons(&g);
                    if eps.len() < 4 {
                        errs.push(key("analysis.epsilons", format!("a sweep needs at least 4 radii (got {})", eps.len())));
                    }
                    for (i, &e) in eps.iter().enumerate() {
                        if let Err(err) = check_epsilon(&g, e) {
                            errs.push(key(&format!("analysis.epsilons[{i}]"), err));
                        }
                    }
                }
            }
            Experiment::InhomUniqueness => {
                if let Err(e) = self.density_spec() {
                    errs.push(e);
                }
            }
            Experiment::BoussinesqUniqueness => {
                if let Err(e) = self.buoyancy() {
                    errs.push(e);
                }
            }
            _ => {}
        }
        errs
    }

    fn primary_grid(&self) -> Option<PeriodicGrid> {
        if self.experiment.needs_run() {
            self.run.as_ref().and_then(|r| r.grid().ok())
        } else {
            self.static_grid().ok()
        }
    }

    /// The coarser grid of a paired experiment.
    pub fn comparison_grid(&self) -> Option<PeriodicGrid> {
        let a = self.run.as_ref()?.grid().ok()?;
        let b = self.run_b.as_ref().map_or(Some(a), |r| r.grid().ok())?;
        Some(if a.n_per_axis() <= b.n_per_axis() { a } else { b })
    }
}

fn check_run(name: &str, r: &SolverConfig, errs: &mut Vec<CliError>) {
    if let Err(e) = r.grid() {
        errs.push(key(&format!("{name}.grid_n"), e));
        return;
    }
    if let Err(e) = r.validate() {
        errs.push(key(name, e));
    }
}
