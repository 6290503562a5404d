//! Discrete standard mollifier and spectral convolution.

use rustfft::num_complex::Complex64;

use crate::calculus::apply_multiplier;
use crate::error::{Error, Result};
use crate::field::{ScalarField, TensorField, VelocityField};
use crate::grid::PeriodicGrid;

/// Sampled bump `c * exp(-1 / (1 - |z/eps|^2))` supported in `|z| < eps`.
///
/// Samples are stored with the origin at flat index 0 (offsets wrap
/// periodically) and `c` makes the discrete mass `sum * spacing^N` exactly one.
#[derive(Clone, Debug)]
pub struct MollifierKernel {
    grid: PeriodicGrid,
    epsilon: f64,
    values: ScalarField,
    multiplier: Vec<f64>,
}

/// Smallest admissible support radius on `grid`.
pub fn min_epsilon(grid: &PeriodicGrid) -> f64 {
    4.0 * grid.spacing()
}

/// Smallest power-of-two resolution on which `epsilon` is admissible.
pub fn min_grid_for(epsilon: f64) -> usize {
    let mut n = PeriodicGrid::MIN_POINTS;
    while 8.0 / (n as f64) > epsilon * (1.0 + 1e-12) && n < 1 << 24 {
        n *= 2;
    }
    n
}

pub fn check_epsilon(grid: &PeriodicGrid, epsilon: f64) -> Result<()> {
    if !epsilon.is_finite() || epsilon > 0.5 {
        return Err(Error::config(format!(
            "mollifier epsilon must lie in [4*spacing, 1/2] (got {epsilon})"
        )));
    }
    if epsilon < min_epsilon(grid) * (1.0 - 1e-12) {
        return Err(Error::config(format!(
            "mollifier epsilon {epsilon} is below 4*spacing = {} on a {grid} grid; \
             needs grid_n >= {}",
            min_epsilon(grid),
            min_grid_for(epsilon)
        )));
    }
    Ok(())
}

pub fn make_kernel(grid: PeriodicGrid, epsilon: f64) -> Result<MollifierKernel> {
    check_epsilon(&grid, epsilon)?;
    let dims = grid.dims();
    let h = grid.spacing();
    let n = grid.n_per_axis();
    let mut raw = vec![0.0; grid.len()];
    for (flat, v) in raw.iter_mut().enumerate() {
        let idx = grid.unravel(flat);
        let mut r2 = 0.0;
        for &i in &idx[..dims] {
            let off = i.min(n - i) as f64 * h;
            r2 += off * off;
        }
        let s = r2 / (epsilon * epsilon);
        if s < 1.0 {
            *v = (-1.0 / (1.0 - s)).exp();
        }
    }
    let mass: f64 = raw.iter().sum::<f64>() * grid.cell_volume();
    raw.iter_mut().for_each(|v| *v /= mass);
    let values = ScalarField::from_raw(grid, raw);
    // The kernel is even on the grid, so its transform is real.
    let multiplier = values
        .spectrum()
        .iter()
        .map(|c| c.re * grid.cell_volume())
        .collect();
    Ok(MollifierKernel {
        grid,
        epsilon,
        values,
        multiplier,
    })
}

impl MollifierKernel {
    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn values(&self) -> &ScalarField {
        &self.values
    }

    /// Fourier multiplier of the convolution, one real entry per mode.
    pub fn multiplier(&self) -> &[f64] {
        &self.multiplier
    }

    pub fn mass(&self) -> f64 {
        self.values.values().iter().sum::<f64>() * self.grid.cell_volume()
    }

    fn apply(&self, f: &ScalarField) -> Result<ScalarField> {
        self.grid.ensure_same(f.grid())?;
        Ok(apply_multiplier(f, |i| Complex64::new(self.multiplier[i], 0.0)))
    }
}

/// Periodic convolution with the kernel.
pub trait Mollify: Sized {
    fn mollify(&self, kernel: &MollifierKernel) -> Result<Self>;
}

impl Mollify for ScalarField {
    fn mollify(&self, kernel: &MollifierKernel) -> Result<Self> {
        kernel.apply(self)
    }
}

impl Mollify for VelocityField {
    fn mollify(&self, kernel: &MollifierKernel) -> Result<Self> {
        let comps = self
            .components()
            .iter()
            .map(|c| kernel.apply(c))
            .collect::<Result<Vec<_>>>()?;
        Ok(VelocityField::from_parts(
            *self.grid(),
            comps,
            self.is_divergence_free(),
        ))
    }
}

impl Mollify for TensorField {
    fn mollify(&self, kernel: &MollifierKernel) -> Result<Self> {
        kernel.grid.ensure_same(self.grid())?;
        Ok(self.map_entries(|e| kernel.apply(e).expect("grid checked")))
    }
}

pub fn mollify<F: Mollify>(f: &F, kernel: &MollifierKernel) -> Result<F> {
    f.mollify(kernel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{derivative, leray_project};
    use std::f64::consts::PI;

    fn g2(n: usize) -> PeriodicGrid {
        PeriodicGrid::new(2, n).unwrap()
    }

    #[test]
    fn unit_mass_and_support() {
        let g = g2(256);
        let k = make_kernel(g, 0.1).unwrap();
        assert!((k.mass() - 1.0).abs() < 1e-12);
        let n = g.n_per_axis();
        for (flat, &v) in k.values().values().iter().enumerate() {
            let idx = g.unravel(flat);
            let dx = idx[0].min(n - idx[0]) as f64 * g.spacing();
            let dy = idx[1].min(n - idx[1]) as f64 * g.spacing();
            assert!(v >= 0.0);
            if (dx * dx + dy * dy).sqrt() >= 0.1 {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn rejects_unresolved_epsilon() {
        let err = make_kernel(g2(64), 0.01).unwrap_err().to_string();
        assert!(err.contains("grid_n >= 1024"), "{err}");
        assert!(make_kernel(g2(64), 0.6).is_err());
        assert!(make_kernel(g2(64), 0.125).is_ok());
    }

    #[test]
    fn constants_are_fixed() {
        let g = g2(32);
        let k = make_kernel(g, 0.25).unwrap();
        let f = ScalarField::constant(g, 3.0).mollify(&k).unwrap();
        assert!(f.values().iter().all(|v| (v - 3.0).abs() < 1e-13));
    }

    #[test]
    fn matches_direct_convolution() {
        let g = g2(64);
        let k = make_kernel(g, 0.2).unwrap();
        let f = ScalarField::from_fn(g, |x| (PI * x[0]).sin());
        let m = f.mollify(&k).unwrap();
        let n = g.n_per_axis();
        let w = g.cell_volume();
        for &(i0, i1) in &[(0usize, 0usize), (5, 17), (40, 63), (31, 2)] {
            let mut s = 0.0;
            for (flat, &kv) in k.values().values().iter().enumerate() {
                if kv == 0.0 {
                    continue;
                }
                let o = g.unravel(flat);
                let src = [(i0 + n - o[0]) % n, (i1 + n - o[1]) % n];
                s += kv * f.values()[g.ravel(&src)] * w;
            }
            assert!((s - m.values()[g.ravel(&[i0, i1])]).abs() < 1e-8);
        }
    }

    #[test]
    fn commutes_with_derivative_and_projection() {
        let g = g2(32);
        let k = make_kernel(g, 0.25).unwrap();
        let f = ScalarField::from_fn(g, |x| (PI * x[0]).sin() * (3.0 * PI * x[1]).cos() + x[1].cos());
        let a = derivative(&f.mollify(&k).unwrap(), 1);
        let b = derivative(&f, 1).mollify(&k).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-12);
        }
        let u = VelocityField::from_fn(g, |x| vec![(PI * x[0]).sin() * x[1].cos(), (2.0 * PI * x[1]).cos()]);
        let p1 = leray_project(&u).mollify(&k).unwrap();
        let p2 = leray_project(&u.mollify(&k).unwrap());
        for (c1, c2) in p1.components().iter().zip(p2.components()) {
            for (x, y) in c1.values().iter().zip(c2.values()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
