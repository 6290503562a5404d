use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{resample_scalar, resample_velocity, ScalarField, VelocityField};
use crate::solver::integrator::{all_finite, rk4, Core, Spectrum};
use crate::solver::{SolverConfig, SolverState, VorticityState};
use crate::uniqueness::{analyze_pair, RunView, UniquenessConfig, UniquenessReport, Verdict};

use super::contraction::{density_contraction_check, ContractionReport, ScalarRunView};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Debug)]
pub struct BoussinesqState {
    pub time: f64,
    pub theta: ScalarField,
    pub velocity: VelocityField,
    pub g: [f64; 2],
}

#[derive(Clone, Debug)]
pub struct BoussinesqTrajectory {
    pub states: Vec<BoussinesqState>,
    pub dt: f64,
    /// `½ ∫ |u|^2` per state.
    pub energy_ledger: Vec<f64>,
    /// `∫ theta` per state.
    pub theta_ledger: Vec<f64>,
    pub config: SolverConfig,
    pub g: [f64; 2],
}

impl BoussinesqTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.time).collect()
    }

    pub fn absolute_energy_drift(&self) -> f64 {
        crate::solver::absolute_drift(&self.energy_ledger)
    }

    /// Drift of `∫ theta` relative to `max(|∫ theta|, ∫ |theta|)`, so a
    /// mean-free temperature does not divide by zero.
    pub fn relative_theta_drift(&self) -> f64 {
        let scale = self
            .states
            .iter()
            .map(|s| s.theta.map(f64::abs).integral())
            .fold(0.0f64, f64::max);
        let d = crate::solver::absolute_drift(&self.theta_ledger);
        if scale > 0.0 {
            d / scale
        } else {
            d
        }
    }

    /// The velocity snapshots as homogeneous solver states.
    pub fn velocity_states(&self) -> Result<Vec<SolverState>> {
        self.states
            .iter()
            .map(|s| SolverState::new(s.time, s.velocity.clone()))
            .collect()
    }
}

/// Integrates vorticity, temperature and the mean velocity together. The
/// vorticity picks up the torque `curl(theta g)` and the mean velocity is
/// accelerated by `g mean(theta)`. When `g = 0` or `theta0 = 0` no buoyancy
/// term is formed and the velocity is bitwise that of [`crate::solve`].
pub fn boussinesq_solve(
    theta0: &ScalarField,
    u0: &VelocityField,
    g: [f64; 2],
    config: &SolverConfig,
) -> Result<BoussinesqTrajectory> {
    config.validate()?;
    if !g.iter().all(|v| v.is_finite()) {
        return Err(Error::config("gravity vector must be finite"));
    }
    let grid = config.grid()?;
    let core = Core::new(grid)?;
    let u0 = resample_velocity(u0, grid)?;
    let theta0 = resample_scalar(theta0, grid)?;
    let vs = VorticityState::from_velocity(&core, &u0)?;
    let mut th = theta0.spectrum().to_vec();
    core.mask(&mut th);
    let forced = g != [0.0, 0.0] && th.iter().any(|c| c.norm_sqr() > 0.0);
    let mut y: Vec<Spectrum> = vec![
        vs.omega,
        th,
        vec![Complex64::new(vs.mean[0], 0.0), Complex64::new(vs.mean[1], 0.0)],
    ];
    let len = grid.len() as f64;
    let t = core.t.clone();
    let steps = config.steps()?;
    let snaps = config.snapshot_steps()?;
    let mut next = 0;
    let mut states = Vec::with_capacity(snaps.len());
    for n in 0..=steps {
        let time = n as f64 * config.dt;
        if snaps.get(next) == Some(&n) {
            let s = VorticityState {
                omega: y[0].clone(),
                mean: [y[2][0].re, y[2][1].re],
            };
            states.push(BoussinesqState {
                time,
                theta: ScalarField::from_spectrum(grid, y[1].clone()),
                velocity: s.velocity_field(&core),
                g,
            });
            next += 1;
        }
        if n == steps {
            break;
        }
        y = rk4(&y, config.dt, |s, stage| {
            let mean = [s[2][0].re, s[2][1].re];
            let u = core.velocity(&s[0], mean);
            if stage == 0 {
                core.check_cfl(config.dt, config.cfl, &u)?;
            }
            let mut dw = core.transport_tendency(&s[0], &u);
            let dth = core.transport_tendency(&s[1], &u);
            let mut dm = vec![Complex64::new(0.0, 0.0); 2];
            if forced {
                for (i, w) in dw.iter_mut().enumerate() {
                    if t.dealias[i] {
                        *w += (I * t.k[i][0] * g[1] - I * t.k[i][1] * g[0]) * s[1][i];
                    }
                }
                let m = s[1][0].re / len;
                dm = vec![Complex64::new(g[0] * m, 0.0), Complex64::new(g[1] * m, 0.0)];
            }
            Ok(vec![dw, dth, dm])
        })?;
        if !all_finite(&y) {
            return Err(Error::NonFinite { time: time + config.dt });
        }
    }
    let energy_ledger = states.iter().map(|s| s.velocity.kinetic_energy()).collect();
    let theta_ledger = states.iter().map(|s| s.theta.integral()).collect();
    Ok(BoussinesqTrajectory {
        states,
        dt: config.dt,
        energy_ledger,
        theta_ledger,
        config: config.clone(),
        g,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoussinesqReport {
    pub velocity: UniquenessReport,
    pub theta: ContractionReport,
    pub verdict: Verdict,
}

/// Runs both configurations, certifies the velocities with the homogeneous
/// relative-energy pipeline and the temperatures with the scalar
/// contraction check.
pub fn boussinesq_uniqueness_experiment(
    theta0: &ScalarField,
    u0: &VelocityField,
    g: [f64; 2],
    cfg_a: &SolverConfig,
    cfg_b: &SolverConfig,
    ucfg: &UniquenessConfig,
    theta_tolerance: f64,
) -> Result<(BoussinesqReport, BoussinesqTrajectory, BoussinesqTrajectory)> {
    ucfg.validate()?;
    let (ta, tb) = rayon::join(
        || boussinesq_solve(theta0, u0, g, cfg_a),
        || boussinesq_solve(theta0, u0, g, cfg_b),
    );
    let (ta, tb) = (ta?, tb?);
    fn run(t: &BoussinesqTrajectory) -> (RunView<'_>, ScalarRunView<'_>) {
        (
            RunView {
                times: t.times(),
                velocities: t.states.iter().map(|s| &s.velocity).collect(),
                energy_drift: t.absolute_energy_drift(),
                weights: None,
            },
            ScalarRunView {
                times: t.times(),
                scalars: t.states.iter().map(|s| &s.theta).collect(),
                velocities: t.states.iter().map(|s| &s.velocity).collect(),
            },
        )
    }
    let (va, sa) = run(&ta);
    let (vb, sb) = run(&tb);
    let velocity = analyze_pair(&va, &vb, ucfg)?;
    let theta = density_contraction_check(&sa, &sb, None, theta_tolerance)?;
    let verdict = match velocity.verdict {
        Verdict::HypothesisNotMet => Verdict::HypothesisNotMet,
        Verdict::Certified if theta.pass => Verdict::Certified,
        _ => Verdict::CertificateFailed,
    };
    Ok((BoussinesqReport { velocity, theta, verdict }, ta, tb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;
    use crate::solver::solve;
    use crate::synth::taylor_green;
    use std::f64::consts::PI;

    #[test]
    fn zero_temperature_matches_homogeneous_bitwise() {
        let g = PeriodicGrid::new(2, 32).unwrap();
        let u0 = crate::synth::random_divfree(g, 3.0, 5);
        let cfg = SolverConfig::new(32, 0.01, 0.2).with_stride(5);
        let b = boussinesq_solve(&ScalarField::zeros(g), &u0, [0.0, -1.0], &cfg).unwrap();
        let h = solve(&u0, &cfg).unwrap();
        assert_eq!(b.states.len(), h.states.len());
        for (x, y) in b.states.iter().zip(&h.states) {
            assert_eq!(x.velocity.component(0).values(), y.velocity.component(0).values());
            assert_eq!(x.velocity.component(1).values(), y.velocity.component(1).values());
        }
    }

    #[test]
    fn buoyancy_conserves_theta_mass_and_spins_up() {
        let g = PeriodicGrid::new(2, 32).unwrap();
        let th = ScalarField::from_fn(g, |x| 1.0 + (PI * x[0]).sin());
        let cfg = SolverConfig::new(32, 0.01, 0.2);
        let b = boussinesq_solve(&th, &taylor_green(g, 0.5).unwrap(), [0.0, -1.0], &cfg).unwrap();
        assert!(b.relative_theta_drift() < 1e-12);
        let last = b.states.last().unwrap();
        // mean(theta) = 1 so the mean vertical velocity is -t.
        let m = last.velocity.mean();
        assert!((m[1] + last.time).abs() < 1e-12, "{m:?}");
        assert!(crate::calculus::divergence(&last.velocity).max_abs() < 1e-10);
    }
}
