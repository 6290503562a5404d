use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::calculus::{divergence, gradient, velocity_gradient};
use crate::error::{Error, Result};
use crate::field::{ScalarField, VelocityField};
use crate::fit::trapezoid;
use crate::grid::PeriodicGrid;

use super::Trajectory;

/// Low wavevectors used for the standard family of test functions.
pub const LOW_MODES: [[i64; 2]; 10] = [
    [1, 0],
    [0, 1],
    [1, 1],
    [1, -1],
    [2, 0],
    [0, 2],
    [2, 1],
    [1, 2],
    [2, -1],
    [3, 1],
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum TemporalProfile {
    /// `chi = 1`; the boundary terms carry the whole time dependence.
    Unit,
    /// `exp(-1 / (s (1 - s)))` with `s = (t - t0) / (t1 - t0)`, zero outside
    /// `(t0, t1)`, scaled to peak value 1.
    Bump { t0: f64, t1: f64 },
}

impl TemporalProfile {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            TemporalProfile::Unit => 1.0,
            TemporalProfile::Bump { t0, t1 } => {
                let s = (t - t0) / (t1 - t0);
                if s <= 0.0 || s >= 1.0 {
                    0.0
                } else {
                    (4.0 - 1.0 / (s * (1.0 - s))).exp()
                }
            }
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            TemporalProfile::Unit => 0.0,
            TemporalProfile::Bump { t0, t1 } => {
                let l = t1 - t0;
                let s = (t - t0) / l;
                if s <= 0.0 || s >= 1.0 {
                    0.0
                } else {
                    let q = s * (1.0 - s);
                    self.value(t) * (1.0 - 2.0 * s) / (q * q) / l
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub enum SpatialTest {
    /// Divergence-free vector test function for the momentum identity.
    Vector(VelocityField),
    /// Scalar test function for the incompressibility identity.
    Scalar(ScalarField),
}

#[derive(Clone, Debug)]
pub struct WeakTestFunction {
    spatial: SpatialTest,
    temporal: TemporalProfile,
}

impl WeakTestFunction {
    pub fn new(spatial: SpatialTest, temporal: TemporalProfile) -> Result<Self> {
        if let SpatialTest::Vector(psi) = &spatial {
            let d = divergence(psi).max_abs();
            if d > 1e-12 * psi.max_abs().max(1.0) {
                return Err(Error::config(format!(
                    "vector test function has divergence {d:e}"
                )));
            }
        }
        Ok(Self { spatial, temporal })
    }

    pub fn spatial(&self) -> &SpatialTest {
        &self.spatial
    }

    pub fn temporal(&self) -> TemporalProfile {
        self.temporal
    }

    /// `psi = (d2 s, -d1 s)` with `s = cos(pi k.x + phase) / pi`.
    pub fn low_mode_vector(grid: PeriodicGrid, k: [i64; 2], phase: f64, temporal: TemporalProfile) -> Result<Self> {
        let (k0, k1) = (k[0] as f64, k[1] as f64);
        let psi = VelocityField::from_fn(grid, |x| {
            let s = -(PI * (k0 * x[0] + k1 * x[1]) + phase).sin();
            vec![k1 * s, -k0 * s]
        });
        Self::new(SpatialTest::Vector(psi), temporal)
    }

    pub fn low_mode_scalar(grid: PeriodicGrid, k: [i64; 2], phase: f64, temporal: TemporalProfile) -> Result<Self> {
        let (k0, k1) = (k[0] as f64, k[1] as f64);
        let phi = ScalarField::from_fn(grid, |x| (PI * (k0 * x[0] + k1 * x[1]) + phase).cos());
        Self::new(SpatialTest::Scalar(phi), temporal)
    }
}

/// One divergence-free test function per entry of [`LOW_MODES`]; phases
/// cycle through multiples of 0.7 so that no family member is symmetric.
pub fn low_mode_vector_tests(grid: PeriodicGrid, temporal: TemporalProfile) -> Result<Vec<WeakTestFunction>> {
    LOW_MODES
        .iter()
        .enumerate()
        .map(|(i, k)| WeakTestFunction::low_mode_vector(grid, *k, 0.7 * i as f64, temporal))
        .collect()
}

pub fn low_mode_scalar_tests(grid: PeriodicGrid, temporal: TemporalProfile) -> Result<Vec<WeakTestFunction>> {
    LOW_MODES
        .iter()
        .enumerate()
        .map(|(i, k)| WeakTestFunction::low_mode_scalar(grid, *k, 0.7 * i as f64, temporal))
        .collect()
}

/// Absolute residual of the weak formulation between the first and last
/// snapshot, with trapezoid quadrature in time.
///
/// Vector tests evaluate
/// `∫∫ u.d_t psi + (u (x) u) : grad psi - [∫ u.psi]_{tau1}^{tau2}`;
/// scalar tests evaluate `∫∫ u . grad phi`.
pub fn weak_residual(traj: &Trajectory, test: &WeakTestFunction) -> Result<f64> {
    let times = traj.times();
    let chi = test.temporal;
    match &test.spatial {
        SpatialTest::Vector(psi) => {
            traj.grid().ensure_same(psi.grid())?;
            let gpsi = velocity_gradient(psi);
            let d = psi.grid().dims();
            let mut integrand = Vec::with_capacity(times.len());
            for s in &traj.states {
                let u = &s.velocity;
                let lin = u.inner(psi)?;
                let mut quad = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        quad += u.component(i).mul(u.component(j))?.inner(gpsi.entry(i, j))?;
                    }
                }
                integrand.push(lin * chi.derivative(s.time) + quad * chi.value(s.time));
            }
            let first = traj.states.first().expect("non-empty trajectory");
            let last = traj.states.last().expect("non-empty trajectory");
            let boundary = last.velocity.inner(psi)? * chi.value(last.time)
                - first.velocity.inner(psi)? * chi.value(first.time);
            Ok((trapezoid(&times, &integrand) - boundary).abs())
        }
        SpatialTest::Scalar(phi) => {
            traj.grid().ensure_same(phi.grid())?;
            let gphi = gradient(phi);
            let integrand = traj
                .states
                .iter()
                .map(|s| Ok(s.velocity.inner(&gphi)? * chi.value(s.time)))
                .collect::<Result<Vec<f64>>>()?;
            Ok(trapezoid(&times, &integrand).abs())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_derivative_matches_difference_quotient() {
        let b = TemporalProfile::Bump { t0: 0.0, t1: 1.0 };
        for &t in &[0.2, 0.5, 0.77] {
            let h = 1e-6;
            let fd = (b.value(t + h) - b.value(t - h)) / (2.0 * h);
            assert!((fd - b.derivative(t)).abs() < 1e-6);
        }
        assert_eq!(b.value(1.0), 0.0);
        assert!((b.value(0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn low_mode_tests_are_divergence_free() {
        let g = PeriodicGrid::new(2, 32).unwrap();
        let tests = low_mode_vector_tests(g, TemporalProfile::Unit).unwrap();
        assert_eq!(tests.len(), 10);
    }
}
