use crate::error::{Error, Result};
use crate::field::{ScalarField, VelocityField};
use crate::solver::integrator::{all_finite, rk4, Core};
use crate::solver::DEFAULT_CFL;

/// One fourth-order step of `d_t rho + div(rho u) = 0` with `u` frozen.
///
/// The flux divergence is dealiased by the 2/3 rule and its zero mode is
/// exactly zero, so `∫ rho` is preserved bit for bit up to the final
/// inverse transform. Content outside the dealiased band is not advected.
pub fn transport_step(rho: &ScalarField, u: &VelocityField, dt: f64) -> Result<ScalarField> {
    let g = *rho.grid();
    g.ensure_same(u.grid())?;
    if !(dt > 0.0) {
        return Err(Error::config(format!("dt must be positive (got {dt})")));
    }
    let core = Core::new(g)?;
    let uv = [u.component(0).values().to_vec(), u.component(1).values().to_vec()];
    core.check_cfl(dt, DEFAULT_CFL, &uv)?;
    let out = rk4(&[rho.spectrum().to_vec()], dt, |y, _| {
        Ok(vec![core.transport_tendency(&y[0], &uv)])
    })?;
    if !all_finite(&out) {
        return Err(Error::NonFinite { time: dt });
    }
    Ok(ScalarField::from_spectrum(g, out.into_iter().next().unwrap()))
}
