//! Shared pseudo-spectral kernels for the planar solvers.
//!
//! All prognostic variables are stored as Fourier coefficients restricted to
//! the 2/3-rule band. Nonlinear terms are formed in physical space and
//! differentiated in conservative form, so the zero mode of every tendency is
//! exactly zero.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::calculus::{modes, ModeTable};
use crate::error::{Error, Result};
use crate::fft;
use crate::grid::PeriodicGrid;

pub(crate) type Spectrum = Vec<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

pub(crate) struct Core {
    pub grid: PeriodicGrid,
    pub t: Arc<ModeTable>,
}

impl Core {
    pub fn new(grid: PeriodicGrid) -> Result<Self> {
        if grid.dims() != 2 {
            return Err(Error::config("the solver supports 2-d grids only"));
        }
        Ok(Self {
            grid,
            t: modes(&grid),
        })
    }

    pub fn mask(&self, s: &mut [Complex64]) {
        s.par_iter_mut()
            .zip(self.t.dealias.par_iter())
            .for_each(|(c, keep)| {
                if !keep {
                    *c = Complex64::new(0.0, 0.0);
                }
            });
    }

    /// Physical velocity `U + (d2 psi, -d1 psi)` with `-lap psi = omega`.
    pub fn velocity(&self, omega: &[Complex64], mean: [f64; 2]) -> [Vec<f64>; 2] {
        let t = &self.t;
        let psi = |i: usize| {
            if t.k2[i] > 0.0 {
                omega[i] / t.k2[i]
            } else {
                Complex64::new(0.0, 0.0)
            }
        };
        let u1: Spectrum = (0..omega.len()).into_par_iter().map(|i| I * t.k[i][1] * psi(i)).collect();
        let u2: Spectrum = (0..omega.len()).into_par_iter().map(|i| -I * t.k[i][0] * psi(i)).collect();
        let mut a = fft::inverse_real(&self.grid, u1);
        let mut b = fft::inverse_real(&self.grid, u2);
        if mean[0] != 0.0 {
            a.iter_mut().for_each(|v| *v += mean[0]);
        }
        if mean[1] != 0.0 {
            b.iter_mut().for_each(|v| *v += mean[1]);
        }
        [a, b]
    }

    pub fn max_speed(&self, u: &[Vec<f64>; 2]) -> f64 {
        u[0].iter()
            .zip(&u[1])
            .fold(0.0f64, |m, (a, b)| m.max((a * a + b * b).sqrt()))
    }

    /// `-mask(i k . FFT(q u))` for a scalar `q` given by its coefficients.
    pub fn transport_tendency(&self, q: &[Complex64], u: &[Vec<f64>; 2]) -> Spectrum {
        let qp = fft::inverse_real(&self.grid, q.to_vec());
        self.transport_tendency_physical(&qp, u)
    }

    pub fn transport_tendency_physical(&self, q: &[f64], u: &[Vec<f64>; 2]) -> Spectrum {
        let f1: Vec<f64> = q.par_iter().zip(u[0].par_iter()).map(|(a, b)| a * b).collect();
        let f2: Vec<f64> = q.par_iter().zip(u[1].par_iter()).map(|(a, b)| a * b).collect();
        let s1 = fft::forward_real(&self.grid, &f1);
        let s2 = fft::forward_real(&self.grid, &f2);
        let t = &self.t;
        let mut out: Spectrum = (0..q.len())
            .into_par_iter()
            .map(|i| {
                if t.dealias[i] {
                    -I * (s1[i] * t.k[i][0] + s2[i] * t.k[i][1])
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        out[0] = Complex64::new(0.0, 0.0);
        out
    }

    /// Admissible step for the CFL number `cfl` at speed `speed`.
    pub fn max_dt(&self, cfl: f64, speed: f64) -> f64 {
        if speed > 0.0 {
            cfl * self.grid.spacing() / speed
        } else {
            f64::INFINITY
        }
    }

    pub fn check_cfl(&self, dt: f64, cfl: f64, u: &[Vec<f64>; 2]) -> Result<()> {
        let max_dt = self.max_dt(cfl, self.max_speed(u));
        if dt > max_dt {
            return Err(Error::StepSize { dt, max_dt });
        }
        Ok(())
    }
}

pub(crate) fn all_finite(s: &[Spectrum]) -> bool {
    s.iter()
        .all(|a| a.par_iter().all(|c| c.re.is_finite() && c.im.is_finite()))
}

fn axpy(y: &[Spectrum], a: f64, k: &[Spectrum]) -> Vec<Spectrum> {
    y.iter()
        .zip(k)
        .map(|(y, k)| y.par_iter().zip(k.par_iter()).map(|(y, k)| y + k * a).collect())
        .collect()
}

/// One classical fourth-order Runge-Kutta step. `f` receives the stage
/// state and the stage number (0..4).
pub(crate) fn rk4(
    y: &[Spectrum],
    dt: f64,
    mut f: impl FnMut(&[Spectrum], usize) -> Result<Vec<Spectrum>>,
) -> Result<Vec<Spectrum>> {
    let k1 = f(y, 0)?;
    let k2 = f(&axpy(y, 0.5 * dt, &k1), 1)?;
    let k3 = f(&axpy(y, 0.5 * dt, &k2), 2)?;
    let k4 = f(&axpy(y, dt, &k3), 3)?;
    let w = dt / 6.0;
    Ok((0..y.len())
        .map(|v| {
            (0..y[v].len())
                .into_par_iter()
                .map(|i| y[v][i] + (k1[v][i] + k2[v][i] * 2.0 + k3[v][i] * 2.0 + k4[v][i]) * w)
                .collect()
        })
        .collect())
}
