//! Pseudo-spectral solver for the planar incompressible Euler equations in
//! vorticity-streamfunction form, with diagnostic pressure recovery, an
//! energy ledger and weak-formulation checks.

mod admissibility;
pub(crate) mod integrator;
mod pressure;
mod weak;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calculus::curl2d;
use crate::error::{Error, Result};
use crate::field::{ScalarField, VelocityField};
use crate::grid::PeriodicGrid;
use integrator::{all_finite, rk4, Core, Spectrum};

pub use admissibility::{admissibility_check, AdmissibilityReport};
pub use pressure::recover_pressure;
pub use weak::{
    low_mode_scalar_tests, low_mode_vector_tests, weak_residual, SpatialTest, TemporalProfile,
    WeakTestFunction, LOW_MODES,
};

pub const DEFAULT_CFL: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub grid_n: usize,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
}

fn default_stride() -> usize {
    10
}

fn default_cfl() -> f64 {
    DEFAULT_CFL
}

impl SolverConfig {
    pub fn new(grid_n: usize, dt: f64, t_final: f64) -> Self {
        Self {
            grid_n,
            dt,
            t_final,
            snapshot_stride: default_stride(),
            cfl: DEFAULT_CFL,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn grid(&self) -> Result<PeriodicGrid> {
        PeriodicGrid::new(2, self.grid_n)
    }

    /// Number of steps; `T` must be a whole multiple of `dt`.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config(format!("dt must be positive (got {})", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::config(format!("T must be non-negative (got {})", self.t_final)));
        }
        let steps = (self.t_final / self.dt).round();
        if (steps * self.dt - self.t_final).abs() > 1e-9 * self.t_final.max(self.dt) {
            return Err(Error::config(format!(
                "T = {} is not a whole multiple of dt = {}",
                self.t_final, self.dt
            )));
        }
        Ok(steps as usize)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.steps()?;
        if self.snapshot_stride == 0 {
            return Err(Error::config("snapshot_stride must be at least 1"));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::config(format!("cfl must lie in (0, 1] (got {})", self.cfl)));
        }
        Ok(())
    }

    /// Snapshot times: every `snapshot_stride` steps plus the final step.
    pub fn snapshot_steps(&self) -> Result<Vec<usize>> {
        let steps = self.steps()?;
        let mut out: Vec<usize> = (0..=steps).step_by(self.snapshot_stride.max(1)).collect();
        if *out.last().unwrap() != steps {
            out.push(steps);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug)]
pub struct SolverState {
    pub time: f64,
    pub velocity: VelocityField,
    pub vorticity: ScalarField,
    pub pressure: ScalarField,
}

impl SolverState {
    /// State at `time` with vorticity and pressure derived from `velocity`.
    pub fn new(time: f64, velocity: VelocityField) -> Result<Self> {
        let vorticity = curl2d(&velocity)?;
        let pressure = recover_pressure(&velocity);
        Ok(Self {
            time,
            velocity,
            vorticity,
            pressure,
        })
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub states: Vec<SolverState>,
    pub dt: f64,
    /// `½ ∫ |u|^2` per state.
    pub energy_ledger: Vec<f64>,
    /// `∫ omega^2` per state.
    pub enstrophy_ledger: Vec<f64>,
    pub config: SolverConfig,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.time).collect()
    }

    pub fn grid(&self) -> PeriodicGrid {
        *self.states[0].velocity.grid()
    }

    /// `max_t |E(t) - E(0)| / E(0)`, or the absolute drift when `E(0) = 0`.
    pub fn relative_energy_drift(&self) -> f64 {
        relative_drift(&self.energy_ledger)
    }

    pub fn absolute_energy_drift(&self) -> f64 {
        absolute_drift(&self.energy_ledger)
    }

    pub fn relative_enstrophy_drift(&self) -> f64 {
        relative_drift(&self.enstrophy_ledger)
    }
}

pub(crate) fn absolute_drift(ledger: &[f64]) -> f64 {
    let e0 = ledger.first().copied().unwrap_or(0.0);
    ledger.iter().fold(0.0, |m: f64, e| m.max((e - e0).abs()))
}

pub(crate) fn relative_drift(ledger: &[f64]) -> f64 {
    let e0 = ledger.first().copied().unwrap_or(0.0);
    let d = absolute_drift(ledger);
    if e0 > 0.0 {
        d / e0
    } else {
        d
    }
}

/// Prognostic variables of the vorticity formulation.
#[derive(Clone)]
pub(crate) struct VorticityState {
    pub omega: Spectrum,
    /// Spatial mean of the velocity, conserved exactly.
    pub mean: [f64; 2],
}

impl VorticityState {
    pub fn from_velocity(core: &Core, u: &VelocityField) -> Result<Self> {
        core.grid.ensure_same(u.grid())?;
        let mut omega = curl2d(u)?.spectrum().to_vec();
        core.mask(&mut omega);
        let m = u.mean();
        Ok(Self {
            omega,
            mean: [m[0], m[1]],
        })
    }

    pub fn velocity_field(&self, core: &Core) -> VelocityField {
        let [a, b] = core.velocity(&self.omega, self.mean);
        VelocityField::from_parts(
            core.grid,
            vec![ScalarField::from_raw(core.grid, a), ScalarField::from_raw(core.grid, b)],
            true,
        )
    }
}

/// Vorticity tendency `-mask(div(u omega))` and the stage velocity.
pub(crate) fn vorticity_tendency(
    core: &Core,
    omega: &[Complex64],
    mean: [f64; 2],
) -> (Spectrum, [Vec<f64>; 2]) {
    let u = core.velocity(omega, mean);
    (core.transport_tendency(omega, &u), u)
}

pub(crate) fn step_vorticity(
    core: &Core,
    s: &VorticityState,
    dt: f64,
    cfl: f64,
    t_new: f64,
) -> Result<VorticityState> {
    let mean = s.mean;
    let out = rk4(std::slice::from_ref(&s.omega), dt, |y, stage| {
        let (k, u) = vorticity_tendency(core, &y[0], mean);
        if stage == 0 {
            core.check_cfl(dt, cfl, &u)?;
        }
        Ok(vec![k])
    })?;
    if !all_finite(&out) {
        return Err(Error::NonFinite { time: t_new });
    }
    Ok(VorticityState {
        omega: out.into_iter().next().unwrap(),
        mean,
    })
}

/// Advances `state` by one step of size `dt` at the default CFL number.
pub fn step(state: &SolverState, dt: f64) -> Result<SolverState> {
    if !(dt > 0.0) {
        return Err(Error::config(format!("dt must be positive (got {dt})")));
    }
    let core = Core::new(*state.velocity.grid())?;
    let s = VorticityState::from_velocity(&core, &state.velocity)?;
    let t_new = state.time + dt;
    let next = step_vorticity(&core, &s, dt, DEFAULT_CFL, t_new)?;
    SolverState::new(t_new, next.velocity_field(&core))
}

/// Integrates from `u0` (resampled onto the configured grid if needed)
/// to `config.t_final`, storing snapshots every `snapshot_stride` steps.
///
/// The initial vorticity is truncated to the dealiased band, so the first
/// snapshot is the band-limited part of `u0`.
pub fn solve(u0: &VelocityField, config: &SolverConfig) -> Result<Trajectory> {
    config.validate()?;
    let grid = config.grid()?;
    let u0 = crate::field::resample_velocity(u0, grid)?;
    let core = Core::new(grid)?;
    let snaps = config.snapshot_steps()?;
    let steps = config.steps()?;
    let mut s = VorticityState::from_velocity(&core, &u0)?;
    let mut states = Vec::with_capacity(snaps.len());
    let mut next_snap = 0;
    for n in 0..=steps {
        if snaps.get(next_snap) == Some(&n) {
            states.push(SolverState::new(n as f64 * config.dt, s.velocity_field(&core))?);
            next_snap += 1;
        }
        if n < steps {
            s = step_vorticity(&core, &s, config.dt, config.cfl, (n + 1) as f64 * config.dt)?;
        }
    }
    let energy_ledger = states.iter().map(|s| s.velocity.kinetic_energy()).collect();
    let enstrophy_ledger = states
        .iter()
        .map(|s| s.vorticity.inner(&s.vorticity).expect("same grid"))
        .collect();
    Ok(Trajectory {
        states,
        dt: config.dt,
        energy_ledger,
        enstrophy_ledger,
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::taylor_green;

    #[test]
    fn config_checks() {
        assert!(SolverConfig::new(64, 0.1, 0.25).steps().is_err());
        assert_eq!(SolverConfig::new(64, 0.1, 1.0).steps().unwrap(), 10);
        let c = SolverConfig::new(64, 0.1, 1.0).with_stride(4);
        assert_eq!(c.snapshot_steps().unwrap(), vec![0, 4, 8, 10]);
        assert!(SolverConfig::new(7, 0.1, 1.0).validate().is_err());
    }

    #[test]
    fn cfl_violation_names_bound() {
        let g = PeriodicGrid::new(2, 32).unwrap();
        let s = SolverState::new(0.0, taylor_green(g, 1.0).unwrap()).unwrap();
        match step(&s, 0.1) {
            Err(Error::StepSize { max_dt, .. }) => assert!((max_dt - 0.5 / 16.0).abs() < 1e-3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_field_stays_zero() {
        let g = PeriodicGrid::new(2, 32).unwrap();
        let tr = solve(&VelocityField::zeros(g), &SolverConfig::new(32, 0.01, 0.1)).unwrap();
        assert!(tr.states.iter().all(|s| s.velocity.max_abs() == 0.0));
    }
}
