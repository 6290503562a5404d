use std::cell::RefCell;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::besov::fit_regularity_exponent;
use crate::error::{Error, Result};
use crate::fft;
use crate::field::{resample_scalar, resample_velocity, ScalarField, VelocityField};
use crate::solver::integrator::{all_finite, rk4, Core, Spectrum};
use crate::solver::SolverConfig;
use crate::uniqueness::{analyze_pair, BudgetPath, Hypothesis, RunView, UniquenessConfig, UniquenessReport, Verdict};

use super::contraction::{density_contraction_check, ContractionReport, ScalarRunView};

/// Relative residual at which the variable-density pressure solve stops.
pub const PCG_TOLERANCE: f64 = 1e-10;
pub const PCG_MAX_ITERATIONS: usize = 1000;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Debug)]
pub struct InhomState {
    pub time: f64,
    pub density: ScalarField,
    pub velocity: VelocityField,
    pub pressure: ScalarField,
}

#[derive(Clone, Debug)]
pub struct InhomTrajectory {
    pub states: Vec<InhomState>,
    pub dt: f64,
    /// `½ ∫ rho |u|^2` per state.
    pub energy_ledger: Vec<f64>,
    /// `∫ rho` per state.
    pub mass_ledger: Vec<f64>,
    pub config: SolverConfig,
    /// Largest number of pressure iterations used by any stage.
    pub max_pressure_iterations: usize,
}

impl InhomTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.time).collect()
    }

    pub fn relative_mass_drift(&self) -> f64 {
        crate::solver::relative_drift(&self.mass_ledger)
    }

    pub fn absolute_energy_drift(&self) -> f64 {
        crate::solver::absolute_drift(&self.energy_ledger)
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

struct VariableDensity<'a> {
    core: &'a Core,
}

impl VariableDensity<'_> {
    /// `mask(FFT(sigma * grad p))` per axis.
    fn weighted_gradient(&self, sigma: &[f64], p: &[Complex64]) -> [Spectrum; 2] {
        let t = &self.core.t;
        let g = &self.core.grid;
        let mut out: [Spectrum; 2] = [Vec::new(), Vec::new()];
        for (d, o) in out.iter_mut().enumerate() {
            let dp: Spectrum = p.par_iter().enumerate().map(|(i, c)| c * I * t.k[i][d]).collect();
            let phys = fft::inverse_real(g, dp);
            let w: Vec<f64> = phys.par_iter().zip(sigma.par_iter()).map(|(a, s)| a * s).collect();
            let mut s = fft::forward_real(g, &w);
            self.core.mask(&mut s);
            *o = s;
        }
        out
    }

    /// `B p = -div(mask(sigma grad p))`, symmetric positive semi-definite on
    /// the dealiased band.
    fn apply(&self, sigma: &[f64], p: &[Complex64]) -> Spectrum {
        let t = &self.core.t;
        let f = self.weighted_gradient(sigma, p);
        (0..p.len())
            .into_par_iter()
            .map(|i| -I * (f[0][i] * t.k[i][0] + f[1][i] * t.k[i][1]))
            .collect()
    }

    /// Solves `div(mask(sigma grad p)) = div(a)` by preconditioned conjugate
    /// gradients; the preconditioner is the constant-coefficient inverse
    /// `1 / (mean(sigma) |k|^2)`.
    fn solve(&self, sigma: &[f64], a: &[Spectrum; 2], warm: &[Complex64]) -> Result<(Spectrum, usize)> {
        let t = &self.core.t;
        let len = warm.len();
        let band = |i: usize| t.dealias[i] && t.k2[i] > 0.0;
        let b: Spectrum = (0..len)
            .map(|i| if band(i) { -I * (a[0][i] * t.k[i][0] + a[1][i] * t.k[i][1]) } else { Complex64::new(0.0, 0.0) })
            .collect();
        let bnorm = dot(&b, &b).sqrt();
        if bnorm == 0.0 {
            return Ok((vec![Complex64::new(0.0, 0.0); len], 0));
        }
        let sbar = sigma.iter().sum::<f64>() / sigma.len() as f64;
        let precond = |r: &[Complex64]| -> Spectrum {
            (0..len)
                .map(|i| if band(i) { r[i] / (sbar * t.k2[i]) } else { Complex64::new(0.0, 0.0) })
                .collect()
        };
        let mut x: Spectrum = (0..len).map(|i| if band(i) { warm[i] } else { Complex64::new(0.0, 0.0) }).collect();
        let bx = self.apply(sigma, &x);
        let mut r: Spectrum = b.iter().zip(&bx).map(|(b, a)| b - a).collect();
        let mut rnorm = dot(&r, &r).sqrt();
        if rnorm <= PCG_TOLERANCE * bnorm {
            return Ok((x, 0));
        }
        let mut z = precond(&r);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        for it in 1..=PCG_MAX_ITERATIONS {
            let bp = self.apply(sigma, &p);
            let alpha = rz / dot(&p, &bp);
            x.iter_mut().zip(&p).for_each(|(x, p)| *x += p * alpha);
            r.iter_mut().zip(&bp).for_each(|(r, q)| *r -= q * alpha);
            rnorm = dot(&r, &r).sqrt();
            if rnorm <= PCG_TOLERANCE * bnorm {
                return Ok((x, it));
            }
            z = precond(&r);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            p.iter_mut().zip(&z).for_each(|(p, z)| *p = z + *p * beta);
        }
        Err(Error::PoissonNotConverged {
            iterations: PCG_MAX_ITERATIONS,
            residual: rnorm / bnorm,
        })
    }
}

struct Tendency {
    rates: Vec<Spectrum>,
    pressure: Spectrum,
    iterations: usize,
    velocity: [Vec<f64>; 2],
}

/// Velocity form `rho (u_t + u . grad u) + grad p = 0`, which coincides with
/// the momentum form for solutions of the transport equation.
fn tendency(core: &Core, y: &[Spectrum], warm: &[Complex64], time: f64) -> Result<Tendency> {
    let g = &core.grid;
    let t = &core.t;
    let rho = fft::inverse_real(g, y[0].clone());
    let u = [fft::inverse_real(g, y[1].clone()), fft::inverse_real(g, y[2].clone())];
    let min = rho.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::DensityNonPositive { time, min });
    }
    let rho_rate = core.transport_tendency_physical(&rho, &u);
    let prod = |a: &[f64], b: &[f64]| -> Spectrum {
        let p: Vec<f64> = a.par_iter().zip(b.par_iter()).map(|(x, y)| x * y).collect();
        fft::forward_real(g, &p)
    };
    let f00 = prod(&u[0], &u[0]);
    let f01 = prod(&u[0], &u[1]);
    let f11 = prod(&u[1], &u[1]);
    let adv = |i: usize, fa: &Spectrum, fb: &Spectrum| -> Complex64 {
        if t.dealias[i] {
            -I * (fa[i] * t.k[i][0] + fb[i] * t.k[i][1])
        } else {
            Complex64::new(0.0, 0.0)
        }
    };
    let a: [Spectrum; 2] = [
        (0..rho.len()).into_par_iter().map(|i| adv(i, &f00, &f01)).collect(),
        (0..rho.len()).into_par_iter().map(|i| adv(i, &f01, &f11)).collect(),
    ];
    let sigma: Vec<f64> = rho.iter().map(|r| 1.0 / r).collect();
    let vd = VariableDensity { core };
    let (p, iterations) = vd.solve(&sigma, &a, warm)?;
    let gp = vd.weighted_gradient(&sigma, &p);
    let du: Vec<Spectrum> = (0..2)
        .map(|d| a[d].iter().zip(&gp[d]).map(|(a, g)| a - g).collect())
        .collect();
    let mut rates = vec![rho_rate];
    rates.extend(du);
    Ok(Tendency {
        rates,
        pressure: p,
        iterations,
        velocity: u,
    })
}

fn state_from(core: &Core, y: &[Spectrum], p: &Spectrum, time: f64) -> InhomState {
    let g = core.grid;
    let field = |s: &Spectrum| ScalarField::from_spectrum(g, s.clone());
    InhomState {
        time,
        density: field(&y[0]),
        velocity: VelocityField::from_parts(g, vec![field(&y[1]), field(&y[2])], true),
        pressure: field(p),
    }
}

/// Integrates the inhomogeneous system from `(rho0, u0)`; both are
/// resampled onto the configured grid and truncated to the dealiased band.
pub fn inhom_solve(rho0: &ScalarField, u0: &VelocityField, config: &SolverConfig) -> Result<InhomTrajectory> {
    config.validate()?;
    let grid = config.grid()?;
    let core = Core::new(grid)?;
    let rho0 = resample_scalar(rho0, grid)?;
    if !(rho0.min() > 0.0) {
        return Err(Error::DensityNonPositive { time: 0.0, min: rho0.min() });
    }
    let u0 = resample_velocity(u0, grid)?;
    let mut y: Vec<Spectrum> = vec![
        rho0.spectrum().to_vec(),
        u0.component(0).spectrum().to_vec(),
        u0.component(1).spectrum().to_vec(),
    ];
    y.iter_mut().for_each(|s| core.mask(s));
    let steps = config.steps()?;
    let snaps = config.snapshot_steps()?;
    let mut next = 0;
    let mut states = Vec::with_capacity(snaps.len());
    let warm = RefCell::new(vec![Complex64::new(0.0, 0.0); grid.len()]);
    let mut max_iters = 0;
    for n in 0..=steps {
        let time = n as f64 * config.dt;
        if snaps.get(next) == Some(&n) {
            let tend = tendency(&core, &y, &warm.borrow(), time)?;
            max_iters = max_iters.max(tend.iterations);
            *warm.borrow_mut() = tend.pressure.clone();
            states.push(state_from(&core, &y, &tend.pressure, time));
            next += 1;
        }
        if n == steps {
            break;
        }
        y = rk4(&y, config.dt, |s, stage| {
            let tend = tendency(&core, s, &warm.borrow(), time)?;
            if stage == 0 {
                core.check_cfl(config.dt, config.cfl, &tend.velocity)?;
            }
            max_iters = max_iters.max(tend.iterations);
            *warm.borrow_mut() = tend.pressure;
            Ok(tend.rates)
        })?;
        if !all_finite(&y) {
            return Err(Error::NonFinite { time: time + config.dt });
        }
    }
    let energy_ledger = states
        .iter()
        .map(|s| {
            let m: Vec<f64> = s.velocity.magnitudes().iter().map(|v| v * v).collect();
            0.5 * s.density.cell_weighted_sum(&m)
        })
        .collect();
    let mass_ledger = states.iter().map(|s| s.density.integral()).collect();
    Ok(InhomTrajectory {
        states,
        dt: config.dt,
        energy_ledger,
        mass_ledger,
        config: config.clone(),
        max_pressure_iterations: max_iters,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InhomReport {
    /// Density-weighted relative-energy certificate for the velocities.
    pub velocity: UniquenessReport,
    pub density: ContractionReport,
    /// Minimum fitted exponent over density, momentum and velocity of both runs.
    pub hypothesis: Hypothesis,
    pub verdict: Verdict,
}

fn min_fit(acc: &mut Option<f64>, f: Option<f64>) {
    if let Some(f) = f {
        *acc = Some(acc.map_or(f, |a: f64| a.min(f)));
    }
}

/// Runs both configurations and certifies the pair: weighted relative energy
/// for the velocities and the mollified contraction check for the densities.
pub fn inhom_uniqueness_experiment(
    rho0: &ScalarField,
    u0: &VelocityField,
    cfg_a: &SolverConfig,
    cfg_b: &SolverConfig,
    ucfg: &UniquenessConfig,
    density_tolerance: f64,
) -> Result<(InhomReport, InhomTrajectory, InhomTrajectory)> {
    ucfg.validate()?;
    let (ta, tb) = rayon::join(|| inhom_solve(rho0, u0, cfg_a), || inhom_solve(rho0, u0, cfg_b));
    let (ta, tb) = (ta?, tb?);
    fn view(t: &InhomTrajectory) -> (RunView<'_>, ScalarRunView<'_>) {
        (
            RunView {
                times: t.times(),
                velocities: t.states.iter().map(|s| &s.velocity).collect(),
                energy_drift: t.absolute_energy_drift(),
                weights: Some(t.states.iter().map(|s| &s.density).collect()),
            },
            ScalarRunView {
                times: t.times(),
                scalars: t.states.iter().map(|s| &s.density).collect(),
                velocities: t.states.iter().map(|s| &s.velocity).collect(),
            },
        )
    }
    let (va, sa) = view(&ta);
    let (vb, sb) = view(&tb);
    let velocity = analyze_pair(&va, &vb, ucfg)?;
    let density = density_contraction_check(&sa, &sb, None, density_tolerance)?;
    let mut worst = None;
    for t in [&ta, &tb] {
        for s in &t.states {
            min_fit(&mut worst, fit_regularity_exponent(&s.density, ucfg.p).ok());
            min_fit(&mut worst, fit_regularity_exponent(&s.velocity, ucfg.p).ok());
            let mom = VelocityField::from_parts(
                *s.velocity.grid(),
                s.velocity
                    .components()
                    .iter()
                    .map(|c| c.mul(&s.density))
                    .collect::<Result<Vec<_>>>()?,
                false,
            );
            min_fit(&mut worst, fit_regularity_exponent(&mom, ucfg.p).ok());
        }
    }
    let required = BudgetPath::Trilinear.required_alpha();
    let met = worst.map_or(true, |a| a > required);
    let verdict = if !met {
        Verdict::HypothesisNotMet
    } else if velocity.certificate.pass && density.pass {
        Verdict::Certified
    } else {
        Verdict::CertificateFailed
    };
    Ok((
        InhomReport {
            velocity,
            density,
            hypothesis: Hypothesis {
                fitted_alpha: worst,
                required_alpha: required,
                met,
            },
            verdict,
        },
        ta,
        tb,
    ))
}
