//! The eight experiments. Each one computes its result, writes artifacts and
//! returns the status that decides the exit code.

use std::collections::BTreeMap;

use eulerlab_core::besov::{besov_seminorm, ShiftPolicy};
use eulerlab_core::commutator::{scaling_experiment, ScalingFields, ScalingReport, DEFAULT_SLOPE_TOLERANCE};
use eulerlab_core::extensions::{boussinesq_uniqueness_experiment, inhom_uniqueness_experiment, ContractionReport};
use eulerlab_core::solver::{
    admissibility_check, low_mode_scalar_tests, low_mode_vector_tests, weak_residual, AdmissibilityReport,
    TemporalProfile,
};
use eulerlab_core::synth::synthesize_scalar;
use eulerlab_core::uniqueness::{uniqueness_experiment, UniquenessReport, Verdict};
use eulerlab_core::{
    fit_regularity_exponent, solve, synthesize, PeriodicGrid, ScalarField, SolverState, VelocityField,
};
use serde::Serialize;

use crate::config::*;
use crate::error::CliError;
use crate::output::Artifacts;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    CertificateFailed,
    HypothesisNotMet,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::CertificateFailed => 2,
            Status::HypothesisNotMet => 3,
        }
    }

    fn from_pass(pass: bool) -> Self {
        if pass {
            Status::Pass
        } else {
            Status::CertificateFailed
        }
    }

    fn from_verdict(v: Verdict) -> Self {
        match v {
            Verdict::Certified => Status::Pass,
            Verdict::CertificateFailed => Status::CertificateFailed,
            Verdict::HypothesisNotMet => Status::HypothesisNotMet,
        }
    }
}

pub struct Outcome {
    pub status: Status,
    /// One-line human summary.
    pub summary: String,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    experiment: &'a str,
    seed: u64,
    config_sha256: &'a str,
    status: Status,
    result: &'a T,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    hash: &'a str,
    out: &'a mut Artifacts,
}

impl Ctx<'_> {
    fn report<T: Serialize>(&mut self, status: Status, result: &T) -> Result<(), CliError> {
        let env = Envelope {
            experiment: self.cfg.experiment.name(),
            seed: self.cfg.seed,
            config_sha256: self.hash,
            status,
            result,
        };
        self.out.json("report.json", &env)
    }

    fn velocity_frames(&mut self, dir: &str, states: &[SolverState], ledgers: BTreeMap<String, Vec<f64>>) -> Result<(), CliError> {
        let frames: Vec<(f64, Vec<&ScalarField>)> = states
            .iter()
            .map(|s| {
                (
                    s.time,
                    vec![s.velocity.component(0), s.velocity.component(1), &s.vorticity, &s.pressure],
                )
            })
            .collect();
        self.out.frames(dir, self.hash, &["u1", "u2", "omega", "p"], &frames, ledgers)
    }
}

pub fn run_experiment(cfg: &ExperimentConfig, hash: &str, out: &mut Artifacts) -> Result<Outcome, CliError> {
    let mut ctx = Ctx { cfg, hash, out };
    match cfg.experiment {
        Experiment::BesovFit => besov_fit(&mut ctx),
        Experiment::CommutatorScaling => commutator_scaling(&mut ctx),
        Experiment::CetScaling => cet_scaling(&mut ctx),
        Experiment::EnergyConservation => energy_conservation(&mut ctx),
        Experiment::WeakResidual => weak(&mut ctx),
        Experiment::Uniqueness => uniqueness(&mut ctx),
        Experiment::InhomUniqueness => inhom(&mut ctx),
        Experiment::BoussinesqUniqueness => boussinesq(&mut ctx),
    }
}

fn initial_frame(ctx: &mut Ctx<'_>, u: &VelocityField) -> Result<(), CliError> {
    let frames = vec![(0.0, vec![u.component(0), u.component(1)])];
    ctx.out.frames("fields", ctx.hash, &["u1", "u2"], &frames, BTreeMap::new())
}

#[derive(Serialize)]
struct BesovResult {
    grid_n: usize,
    target_alpha: Option<f64>,
    fitted_alpha: f64,
    error: Option<f64>,
    tolerance: f64,
    seminorm: f64,
    p: f64,
}

fn besov_fit(ctx: &mut Ctx<'_>) -> Result<Outcome, CliError> {
    let cfg = ctx.cfg;
    let grid = cfg.static_grid()?;
    let u = synthesize(&cfg.synth_spec(), grid)?;
    let p = cfg.p();
    let fitted = fit_regularity_exponent(&u, p)?;
    let target = cfg.analysis.alpha.or(cfg.initial_condition.alpha);
    let est = besov_seminorm(&u, target.unwrap_or(fitted), p, &ShiftPolicy::Dyadic);
    let tolerance = cfg.analysis.tolerance.unwrap_or(DEFAULT_EXPONENT_TOLERANCE);
    let error = target.map(|t| fitted - t);
    let status = Status::from_pass(error.map_or(true, |e| e.abs() <= tolerance));
    ctx.out.text("shift_table.csv", &est.to_csv())?;
    initial_frame(ctx, &u)?;
    ctx.report(
        status,
        &BesovResult {
            grid_n: grid.n_per_axis(),
            target_alpha: target,
            fitted_alpha: fitted,
            error,
            tolerance,
            seminorm: est.seminorm,
            p,
        },
    )?;
    let summary = match target {
        Some(t) => format!("fitted alpha {fitted:.4} (target {t}, tolerance {tolerance})"),
        None => format!("fitted alpha {fitted:.4}"),
    };
    Ok(Outcome { status, summary })
}

fn sweep_csv(ctx: &mut Ctx<'_>, r: &ScalingReport) -> Result<(), CliError> {
    ctx.out.csv(
        "sweep.csv",
        &[("epsilon", &r.epsilons), ("magnitude", &r.magnitudes), ("rate_constant", &r.rate_constants)],
    )
}

fn sweep_summary(r: &ScalingReport) -> String {
    format!(
        "fitted slope {:.4} vs theory {:.4} - {} (fitted alpha {:.4})",
        r.fitted_slope, r.theory_slope, r.slope_tolerance, r.alpha
    )
}

fn commutator_scaling(ctx: &mut Ctx<'_>) -> Result<Outcome, CliError> {
    let cfg = ctx.cfg;
    let grid = cfg.static_grid()?;
    let v = synthesize(&cfg.synth_spec(), grid)?;
    let eps = cfg.sweep_epsilons(&grid);
    let tol = cfg.analysis.slope_tolerance.unwrap_or(DEFAULT_SLOPE_TOLERANCE);
    let r = scaling_experiment(ScalingFields::Convective(&v), cfg.p(), &eps, tol)?;
    let status = Status::from_pass(r.pass);
    sweep_csv(ctx, &r)?;
    initial_frame(ctx, &v)?;
    ctx.report(status, &r)?;
    Ok(Outcome {
        status,
        summary: sweep_summary(&r),
    })
}

#[derive(Serialize)]
struct CetResult<'a> {
    #[serde(flatten)]
    sweep: &'a ScalingReport,
    /// `3 alpha - 1` at the synthesis exponent, when there is one.
    nominal_theory_slope: Option<f64>,
    nominal_pass: bool,
    second_field_seed: u64,
}

fn cet_scaling(ctx: &mut Ctx<'_>) -> Result<Outcome, CliError> {
    let cfg = ctx.cfg;
    let grid = cfg.static_grid()?;
    let spec = cfg.synth_spec();
    let u = synthesize(&spec, grid)?;
    let second_seed = spec.seed.wrapping_add(CET_SECOND_FIELD_SEED_OFFSET);
    let v = synthesize(&eulerlab_core::SynthSpec { seed: second_seed, ..spec.clone() }, grid)?;
    let eps = cfg.sweep_epsilons(&grid);
    let tol = cfg.analysis.slope_tolerance.unwrap_or(DEFAULT_SLOPE_TOLERANCE);
    let r = scaling_experiment(ScalingFields::Cet(&u, &v), cfg.p(), &eps, tol)?;
    let nominal = cfg.initial_condition.alpha.map(|a| 3.0 * a - 1.0);
    let nominal_pass = r.vacuous || nominal.map_or(true, |s| r.fitted_slope >= s - tol);
    let status = Status::from_pass(r.pass && nominal_pass);
    sweep_csv(ctx, &r)?;
    initial_frame(ctx, &u)?;
    ctx.report(
        status,
        &CetResult {
            sweep: &r,
            nominal_theory_slope: nominal,
            nominal_pass,
            second_field_seed: second_seed,
        },
    )?;
    Ok(Outcome {
        status,
        summary: sweep_summary(&r),
    })
}

fn initial_velocity(cfg: &ExperimentConfig, grid: PeriodicGrid) -> Result<VelocityField, CliError> {
    Ok(synthesize(&cfg.synth_spec(), grid)?)
}

fn finer_grid(cfg: &ExperimentConfig) -> Result<PeriodicGrid, CliError> {
    let a = cfg.run()?.grid()?;
    let b = cfg.run_b()?.grid()?;
    Ok(if a.n_per_axis() >= b.n_per_axis() { a } else { b })
}

#[derive(Serialize)]
struct EnergyResult {
    relative_energy_drift: f64,
    absolute_energy_drift: f64,
    relative_enstrophy_drift: f64,
    tolerance: f64,
    admissibility: AdmissibilityReport,
    snapshots: usize,
}

fn energy_conservation(ctx: &mut Ctx<'_>) -> Result<Outcome, CliError> {
    let cfg = ctx.cfg;
    let run = cfg.run()?;
    let u0 = initial_velocity(cfg, run.grid()?)?;
    let t = solve(&u0, run)?;
    let tolerance = cfg.analysis.tolerance.unwrap_or(DEFAULT_DRIFT_TOLERANCE);
    let adm = admissibility_check(
        &t.energy_ledger,
        cfg.analysis.admissibility_tolerance.unwrap_or(DEFAULT_ADMISSIBILITY_TOLERANCE),
    );
    let drift = t.relative_energy_drift();
    let status = Status::from_pass(drift <= tolerance && adm.pass);
    let times = t.times();
    ctx.out.csv(
        "series.csv",
        &[("t", &times), ("energy", &t.energy_ledger), ("enstrophy", &t.enstrophy_ledger)],
    )?;
    let ledgers = BTreeMap::from([
        ("energy".to_string(), t.energy_ledger.clone()),
        ("enstrophy".to_string(), t.enstrophy_ledger.clone()),
    ]);
    ctx.velocity_frames("snapshots", &t.states, ledgers)?;
    ctx.report(
        status,
        &EnergyResult {
            relative_energy_drift: drift,
            absolute_energy_drift: t.absolute_energy_drift(),
            relative_enstrophy_drift: t.relative_enstrophy_drift(),
            tolerance,
            admissibility: adm,
            snapshots: t.states.len(),
        },
    )?;
    Ok(Outcome {
        status,
        summary: format!("relative energy drift {drift:.3e} (tolerance {tolerance:e})"),
    })
}

#[derive(Serialize)]
struct WeakResult {
    /// Momentum identity, `chi = 1` over the whole run.
    momentum_unit: Vec<f64>,
    /// Momentum identity, bump in time over the whole run.
    momentum_bump: Vec<f64>,
    /// Incompressibility identity, `chi = 1`.
    divergence: Vec<f64>,
    momentum_tolerance: f64,
    scalar_tolerance: f64,
    max_momentum: f64,
    max_divergence: f64,
}

fn weak(ctx: &mut Ctx<'_>) -> Result<Outcome, CliError> {
    let cfg = ctx.cfg;
    let run = cfg.run()?;
    let grid = run.grid()?;
    let t = solve(&initial_velocity(cfg, grid)?, run)?;
    let end = run.t_final;
    let eval = |tests: Vec<eulerlab_core::WeakTestFunction>| -> Result<Vec<f64>, CliError> {
        tests.iter().map(|f| Ok(weak_residual(&t, f)?)).collect()
    };
    let unit = eval(low_mode_vector_tests(grid, TemporalProfile::Unit)?)?;
    let bump = eval(low_mode_vector_tests(grid, TemporalProfile::Bump { t0: 0.0, t1: end })?)?;
    let div = eval(low_mode_scalar_tests(grid, TemporalProfile::Unit)?)?;
    let mtol = cfg.analysis.momentum_tolerance.unwrap_or(DEFAULT_MOMENTUM_TOLERANCE);
    let stol = cfg.analysis.scalar_tolerance.unwrap_or(DEFAULT_SCALAR_TOLERANCE);
    let max = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(*x));
    let max_m = max(&unit).max(max(&bump));
    let max_d = max(&div);
    let status = Status::from_pass(max_m <= mtol && max_d <= stol);
    let idx: Vec<f64> = (0..unit.len()).map(|i| i as f64).collect();
    ctx.out.csv(
        "residuals.csv",
        &[("test", &idx), ("momentum_unit", &unit), ("momentum_bump", &bump), ("divergence", &div)],
    )?;
    ctx.report(
        status,
        &WeakResult {
            momentum_unit: unit,
            momentum_bump: bump,
            divergence: div,
            momentum_tolerance: mtol,
            scalar_tolerance: stol,
            max_momentum: max_m,
            max_divergence: max_d,
        },
    )?;
    Ok(Outcome {
        status,
        summary: format!("max momentum residual {max_m:.3e}, max divergence residual {max_d:.3e}"),
    })
}

fn uniqueness_csv(ctx: &mut Ctx<'_>, r: &UniquenessReport) -> Result<(), CliError> {
    ctx.out.csv("series.csv", &[("t", &r.series.t), ("E", &r.series.e), ("C", &r.series.c)])?;
    ctx.out.csv("budgets.csv", &[("epsilon", &r.budgets.epsilon), ("budget", &r.budgets.value)])
}

fn contraction_csv(ctx: &mut Ctx<'_>, name: &str, r: &ContractionReport) -> Result<(), CliError> {
    let s = &r.series;
    ctx.out.csv(
        name,
        &[
            ("t", &s.t),
            ("difference", &s.difference),
            ("raw_difference", &s.raw_difference),
            ("commutator", &s.commutator),
            ("coupling", &s.coupling),
        ],
    )
}

fn verdict_summary(v: Verdict, r: &UniquenessReport) -> String {
    let max_e = r.series.e.iter().fold(0.0f64, |m, x| m.max(*x));
    format!("{v:?}: max E {max_e:.3e}, certificate slack {:.3e}", r.certificate.slack)
}

fn uniqueness(ctx: &mut Ctx<'_>) -> Result<Outcome, CliError> {
    let cfg = ctx.cfg;
    let u0 = initial_velocity(cfg, finer_grid(cfg)?)?;
    let (r, ta, tb) = uniqueness_experiment(&u0, cfg.run()?, cfg.run_b()?, &cfg.uniqueness_config())?;
    let status = Status::from_verdict(r.verdict);
    uniqueness_csv(ctx, &r)?;
    for (dir, t) in [("run_a", &ta), ("run_b", &tb)] {
        let ledgers = BTreeMap::from([("energy".to_string(), t.energy_ledger.clone())]);
        ctx.velocity_frames(dir, &t.states, ledgers)?;
    }
    ctx.report(status, &r)?;
    Ok(Outcome {
        status,
        summary: verdict_summary(r.verdict, &r),
    })
}

fn inhom(ctx: &mut Ctx<'_>) -> Result<Outcome, CliError> {
    let cfg = ctx.cfg;
    let grid = finer_grid(cfg)?;
    let u0 = initial_velocity(cfg, grid)?;
    let rho0 = synthesize_scalar(&cfg.density_spec()?, grid)?;
    let tol = cfg.analysis.tolerance.unwrap_or(DEFAULT_CONTRACTION_TOLERANCE);
    let (r, ta, tb) = inhom_uniqueness_experiment(&rho0, &u0, cfg.run()?, cfg.run_b()?, &cfg.uniqueness_config(), tol)?;
    let status = Status::from_verdict(r.verdict);
    uniqueness_csv(ctx, &r.velocity)?;
    contraction_csv(ctx, "density.csv", &r.density)?;
    for (dir, t) in [("run_a", &ta), ("run_b", &tb)] {
        let frames: Vec<(f64, Vec<&ScalarField>)> = t
            .states
            .iter()
            .map(|s| {
                (
                    s.time,
                    vec![s.velocity.component(0), s.velocity.component(1), &s.density, &s.pressure],
                )
            })
            .collect();
        let ledgers = BTreeMap::from([
            ("energy".to_string(), t.energy_ledger.clone()),
            ("mass".to_string(), t.mass_ledger.clone()),
        ]);
        ctx.out.frames(dir, ctx.hash, &["u1", "u2", "rho", "p"], &frames, ledgers)?;
    }
    ctx.report(status, &r)?;
    Ok(Outcome {
        status,
        summary: format!(
            "{}; density slack {:.3e}",
            verdict_summary(r.verdict, &r.velocity),
            r.density.slack
        ),
    })
}

fn boussinesq(ctx: &mut Ctx<'_>) -> Result<Outcome, CliError> {
    let cfg = ctx.cfg;
    let grid = finer_grid(cfg)?;
    let u0 = initial_velocity(cfg, grid)?;
    let (g, theta_spec) = cfg.buoyancy()?;
    let theta0 = synthesize_scalar(&theta_spec, grid)?;
    let tol = cfg.analysis.tolerance.unwrap_or(DEFAULT_CONTRACTION_TOLERANCE);
    let (r, ta, tb) = boussinesq_uniqueness_experiment(
        &theta0,
        &u0,
        g,
        cfg.run()?,
        cfg.run_b()?,
        &cfg.uniqueness_config(),
        tol,
    )?;
    let status = Status::from_verdict(r.verdict);
    uniqueness_csv(ctx, &r.velocity)?;
    contraction_csv(ctx, "theta.csv", &r.theta)?;
    for (dir, t) in [("run_a", &ta), ("run_b", &tb)] {
        let frames: Vec<(f64, Vec<&ScalarField>)> = t
            .states
            .iter()
            .map(|s| (s.time, vec![s.velocity.component(0), s.velocity.component(1), &s.theta]))
            .collect();
        let ledgers = BTreeMap::from([
            ("energy".to_string(), t.energy_ledger.clone()),
            ("theta".to_string(), t.theta_ledger.clone()),
        ]);
        ctx.out.frames(dir, ctx.hash, &["u1", "u2", "theta"], &frames, ledgers)?;
    }
    ctx.report(status, &r)?;
    Ok(Outcome {
        status,
        summary: format!(
            "{}; theta slack {:.3e}",
            verdict_summary(r.verdict, &r.velocity),
            r.theta.slack
        ),
    })
}
