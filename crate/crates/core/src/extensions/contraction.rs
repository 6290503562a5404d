use serde::{Deserialize, Serialize};

use crate::calculus::gradient;
use crate::error::{Error, Result};
use crate::field::{resample_scalar, resample_velocity, ScalarField, VelocityField};
use crate::fit::cumulative_trapezoid;
use crate::mollify::{make_kernel, min_epsilon, MollifierKernel, Mollify};
use crate::uniqueness::common_times;

/// Snapshots of a transported scalar and its advecting velocity.
pub struct ScalarRunView<'a> {
    pub times: Vec<f64>,
    pub scalars: Vec<&'a ScalarField>,
    pub velocities: Vec<&'a VelocityField>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionSeries {
    pub t: Vec<f64>,
    /// `½ ∫ |rho_eps - r_eps|^2`.
    pub difference: Vec<f64>,
    /// `½ ∫ |rho - r|^2` without mollification.
    pub raw_difference: Vec<f64>,
    /// `|∫ [((rho u)_eps - rho_eps u_eps) - ((r v)_eps - r_eps v_eps)] . grad(rho_eps - r_eps)|`.
    pub commutator: Vec<f64>,
    /// `|∫ r_eps (u_eps - v_eps) . grad(rho_eps - r_eps)|`.
    pub coupling: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub epsilon: f64,
    pub tolerance: f64,
    pub comparison_grid: usize,
    pub series: ContractionSeries,
    pub tau1: f64,
    pub tau2: f64,
    pub lhs: f64,
    pub bound: f64,
    pub slack: f64,
    /// Earliest `tau2` (with its worst `tau1`) whose slack is below `-tolerance`.
    pub first_violation: Option<(f64, f64)>,
    pub pass: bool,
}

fn flux_defect(k: &MollifierKernel, rho: &ScalarField, rho_e: &ScalarField, u: &VelocityField, u_e: &VelocityField) -> Result<Vec<ScalarField>> {
    u.components()
        .iter()
        .zip(u_e.components())
        .map(|(c, ce)| rho.mul(c)?.mollify(k)?.sub(&rho_e.mul(ce)?))
        .collect()
}

/// Verifies that the mollified scalar difference can only grow by the
/// accumulated commutator and coupling terms:
/// `D(tau2) <= D(tau1) + ∫_{tau1}^{tau2} (commutator + coupling) dt + tolerance`
/// for every ordered pair of common times.
///
/// Both runs are compared on the coarser grid; `epsilon` defaults to four
/// spacings of that grid.
pub fn density_contraction_check(
    a: &ScalarRunView<'_>,
    b: &ScalarRunView<'_>,
    epsilon: Option<f64>,
    tolerance: f64,
) -> Result<ContractionReport> {
    let ga = *a.scalars.first().ok_or_else(|| Error::AxisMismatch("empty run".into()))?.grid();
    let gb = *b.scalars.first().ok_or_else(|| Error::AxisMismatch("empty run".into()))?.grid();
    let grid = if ga.n_per_axis() <= gb.n_per_axis() { ga } else { gb };
    let eps = epsilon.unwrap_or_else(|| min_epsilon(&grid));
    let k = make_kernel(grid, eps)?;
    let pairs = common_times(&a.times, &b.times);
    if pairs.is_empty() {
        return Err(Error::AxisMismatch("the two runs share no snapshot times".into()));
    }
    let mut s = ContractionSeries {
        t: Vec::new(),
        difference: Vec::new(),
        raw_difference: Vec::new(),
        commutator: Vec::new(),
        coupling: Vec::new(),
    };
    for &(i, j) in &pairs {
        let rho = resample_scalar(a.scalars[i], grid)?;
        let r = resample_scalar(b.scalars[j], grid)?;
        let u = resample_velocity(a.velocities[i], grid)?;
        let v = resample_velocity(b.velocities[j], grid)?;
        let rho_e = rho.mollify(&k)?;
        let r_e = r.mollify(&k)?;
        let u_e = u.mollify(&k)?;
        let v_e = v.mollify(&k)?;
        let delta = rho_e.sub(&r_e)?;
        let grad = gradient(&delta);
        let fa = flux_defect(&k, &rho, &rho_e, &u, &u_e)?;
        let fb = flux_defect(&k, &r, &r_e, &v, &v_e)?;
        let mut comm = 0.0;
        let mut coup = 0.0;
        for d in 0..grid.dims() {
            comm += fa[d].sub(&fb[d])?.inner(grad.component(d))?;
            let du = u_e.component(d).sub(v_e.component(d))?;
            coup += r_e.mul(&du)?.inner(grad.component(d))?;
        }
        s.t.push(a.times[i]);
        s.difference.push(0.5 * delta.inner(&delta)?);
        let raw = rho.sub(&r)?;
        s.raw_difference.push(0.5 * raw.inner(&raw)?);
        s.commutator.push(comm.abs());
        s.coupling.push(coup.abs());
    }
    let budget: Vec<f64> = s.commutator.iter().zip(&s.coupling).map(|(a, b)| a + b).collect();
    let cum = cumulative_trapezoid(&s.t, &budget);
    let n = s.t.len();
    let mut worst = (0, 0, s.difference[0], 0.0f64);
    worst.3 = worst.2 - s.difference[0];
    let mut first_violation = None;
    for j in 1..n {
        let mut col: Option<(usize, f64, f64)> = None;
        for i in 0..j {
            let bound = s.difference[i] + (cum[j] - cum[i]);
            let slack = bound - s.difference[j];
            if col.map_or(true, |c| slack < c.2) {
                col = Some((i, bound, slack));
            }
        }
        let (i, bound, slack) = col.unwrap();
        if first_violation.is_none() && slack < -tolerance {
            first_violation = Some((s.t[i], s.t[j]));
        }
        if (worst.0, worst.1) == (0, 0) || slack < worst.3 {
            worst = (i, j, bound, slack);
        }
    }
    Ok(ContractionReport {
        epsilon: eps,
        tolerance,
        comparison_grid: grid.n_per_axis(),
        tau1: s.t[worst.0],
        tau2: s.t[worst.1],
        lhs: s.difference[worst.1],
        bound: worst.2,
        slack: worst.3,
        first_violation,
        pass: first_violation.is_none(),
        series: s,
    })
}
