//! Commutator quantities of the mollified quadratic nonlinearity and their
//! scaling in the mollification radius.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::besov::fit_regularity_exponent;
use crate::calculus::modes;
use crate::error::{Error, Result};
use crate::fft;
use crate::field::{lp_norm, ScalarField, VelocityField};
use crate::fit::line_fit;
use crate::mollify::{check_epsilon, make_kernel, MollifierKernel, Mollify};

/// Magnitudes below this are treated as exact zeros by the scaling fit.
pub const VACUOUS_THRESHOLD: f64 = 1e-14;

pub const DEFAULT_SLOPE_TOLERANCE: f64 = 0.15;

fn product(a: &ScalarField, b: &ScalarField) -> Vec<f64> {
    a.values()
        .par_iter()
        .zip(b.values().par_iter())
        .map(|(x, y)| x * y)
        .collect()
}

/// `div(v_eps (x) v_eps) - (div(v (x) v))_eps`.
pub fn convective_commutator(v: &VelocityField, kernel: &MollifierKernel) -> Result<VelocityField> {
    let g = *v.grid();
    kernel.grid().ensure_same(&g)?;
    let dims = g.dims();
    let t = modes(&g);
    let ve = v.mollify(kernel)?;
    let m = kernel.multiplier();
    // D_ab = FFT(ve_a ve_b) - m * FFT(v_a v_b), symmetric in (a, b).
    let mut d: Vec<Vec<Complex64>> = Vec::new();
    let mut slot = vec![vec![0usize; dims]; dims];
    for a in 0..dims {
        for b in a..dims {
            let q = fft::forward_real(&g, &product(ve.component(a), ve.component(b)));
            let p = fft::forward_real(&g, &product(v.component(a), v.component(b)));
            let diff: Vec<Complex64> = q
                .par_iter()
                .zip(p.par_iter())
                .zip(m.par_iter())
                .map(|((q, p), m)| q - p * m)
                .collect();
            slot[a][b] = d.len();
            slot[b][a] = d.len();
            d.push(diff);
        }
    }
    let comps = (0..dims)
        .map(|a| {
            let spec: Vec<Complex64> = (0..g.len())
                .into_par_iter()
                .map(|i| {
                    let mut s = Complex64::new(0.0, 0.0);
                    for b in 0..dims {
                        s += d[slot[a][b]][i] * t.k[i][b];
                    }
                    Complex64::new(0.0, 1.0) * s
                })
                .collect();
            ScalarField::from_spectrum(g, spec)
        })
        .collect();
    Ok(VelocityField::from_parts(g, comps, false))
}

/// `∫ [(u (x) u)_eps - u_eps (x) u_eps] : grad(v_eps - u_eps) dx`.
pub fn cet_trilinear(u: &VelocityField, v: &VelocityField, kernel: &MollifierKernel) -> Result<f64> {
    let g = *u.grid();
    g.ensure_same(v.grid())?;
    kernel.grid().ensure_same(&g)?;
    let dims = g.dims();
    let t = modes(&g);
    let m = kernel.multiplier();
    let ue = u.mollify(kernel)?;
    let ve = v.mollify(kernel)?;
    let w: Vec<&[Complex64]> = (0..dims)
        .map(|a| ve.component(a).spectrum())
        .collect();
    let we: Vec<Vec<Complex64>> = (0..dims)
        .map(|a| {
            w[a].iter()
                .zip(ue.component(a).spectrum())
                .map(|(x, y)| x - y)
                .collect()
        })
        .collect();
    let mut total = 0.0;
    for a in 0..dims {
        for b in 0..dims {
            // R_ab = (u_a u_b)_eps - ue_a ue_b
            let mut s = fft::forward_real(&g, &product(u.component(a), u.component(b)));
            s.iter_mut().zip(m).for_each(|(c, m)| *c *= *m);
            let smooth = fft::inverse_real(&g, s);
            let pe = product(ue.component(a), ue.component(b));
            // d_b (ve - ue)_a
            let dspec: Vec<Complex64> = we[a]
                .par_iter()
                .enumerate()
                .map(|(i, c)| c * Complex64::new(0.0, t.k[i][b]))
                .collect();
            let dw = fft::inverse_real(&g, dspec);
            total += smooth
                .iter()
                .zip(&pe)
                .zip(&dw)
                .map(|((s, p), d)| (s - p) * d)
                .sum::<f64>();
        }
    }
    Ok(total * g.cell_volume())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    ConvectiveCommutatorLp,
    CetTrilinear,
}

/// Inputs of one scaling sweep.
#[derive(Clone, Copy, Debug)]
pub enum ScalingFields<'a> {
    /// `‖convective_commutator(v)‖_{L^{p/2}}`.
    Convective(&'a VelocityField),
    /// `|cet_trilinear(u, v)|`.
    Cet(&'a VelocityField, &'a VelocityField),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub quantity: Quantity,
    /// Regularity exponent used for the theory slope (fitted from the data).
    pub alpha: f64,
    pub p: f64,
    pub epsilons: Vec<f64>,
    pub magnitudes: Vec<f64>,
    pub fitted_slope: f64,
    pub theory_slope: f64,
    pub slope_tolerance: f64,
    /// `magnitude / eps^theory_slope`, the implied constant per radius.
    pub rate_constants: Vec<f64>,
    /// Every magnitude was below the zero threshold; the fit is meaningless.
    pub vacuous: bool,
    pub pass: bool,
}

fn check_epsilons(grid: &crate::grid::PeriodicGrid, eps: &[f64]) -> Result<()> {
    if eps.len() < 4 {
        return Err(Error::config(format!(
            "a scaling sweep needs at least 4 epsilons (got {})",
            eps.len()
        )));
    }
    for w in eps.windows(2) {
        if (w[0] / w[1] - 2.0).abs() > 1e-9 {
            return Err(Error::config(format!(
                "epsilons must form a decreasing dyadic sequence ({} then {})",
                w[0], w[1]
            )));
        }
    }
    for &e in eps {
        check_epsilon(grid, e)?;
    }
    Ok(())
}

/// Evaluates the quantity per radius and fits `log magnitude` against
/// `log eps`.
pub fn scaling_experiment(
    fields: ScalingFields<'_>,
    p: f64,
    epsilons: &[f64],
    slope_tolerance: f64,
) -> Result<ScalingReport> {
    let (quantity, grid) = match fields {
        ScalingFields::Convective(v) => (Quantity::ConvectiveCommutatorLp, *v.grid()),
        ScalingFields::Cet(u, v) => {
            u.grid().ensure_same(v.grid())?;
            (Quantity::CetTrilinear, *u.grid())
        }
    };
    if p < 2.0 {
        return Err(Error::config(format!("scaling sweeps need p >= 2 (got {p})")));
    }
    check_epsilons(&grid, epsilons)?;
    let mut magnitudes = Vec::with_capacity(epsilons.len());
    for &e in epsilons {
        let k = make_kernel(grid, e)?;
        let m = match fields {
            ScalingFields::Convective(v) => lp_norm(&convective_commutator(v, &k)?, p / 2.0),
            ScalingFields::Cet(u, v) => cet_trilinear(u, v, &k)?.abs(),
        };
        magnitudes.push(m);
    }
    let (alpha, theory_slope) = match fields {
        ScalingFields::Convective(v) => {
            let a = fit_regularity_exponent(v, p)?;
            (a, 2.0 * a - 1.0)
        }
        ScalingFields::Cet(u, v) => {
            let a = fit_regularity_exponent(u, p)?.min(fit_regularity_exponent(v, p)?);
            (a, 3.0 * a - 1.0)
        }
    };
    let vacuous = magnitudes.iter().all(|m| *m < VACUOUS_THRESHOLD);
    let (x, y): (Vec<f64>, Vec<f64>) = epsilons
        .iter()
        .zip(&magnitudes)
        .filter(|(_, m)| **m >= VACUOUS_THRESHOLD)
        .map(|(e, m)| (e.ln(), m.ln()))
        .unzip();
    let fitted_slope = if vacuous {
        0.0
    } else {
        line_fit(&x, &y).map(|(s, _)| s).unwrap_or(0.0)
    };
    let rate_constants = epsilons
        .iter()
        .zip(&magnitudes)
        .map(|(e, m)| m / e.powf(theory_slope))
        .collect();
    let pass = vacuous || fitted_slope >= theory_slope - slope_tolerance;
    Ok(ScalingReport {
        quantity,
        alpha,
        p,
        epsilons: epsilons.to_vec(),
        magnitudes,
        fitted_slope,
        theory_slope,
        slope_tolerance,
        rate_constants,
        vacuous,
        pass,
    })
}
