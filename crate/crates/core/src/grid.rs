use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform sampling of the flat torus `[-1, 1)^dims`.
///
/// Samples sit at `x_i = -1 + i * spacing` along every axis and are stored
/// row-major with the last axis fastest. Mode `i` along an axis carries the
/// integer index `i` for `i < n/2` and `i - n` otherwise, so the symmetric
/// range is `-n/2 ..= n/2 - 1`; its physical wavenumber is `pi * index`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PeriodicGrid {
    dims: usize,
    n: usize,
}

impl PeriodicGrid {
    pub const MIN_POINTS: usize = 8;

    pub fn new(dims: usize, n_per_axis: usize) -> Result<Self> {
        if !(2..=3).contains(&dims) {
            return Err(Error::config(format!(
                "grid dimension must be 2 or 3 (got {dims})"
            )));
        }
        if n_per_axis < Self::MIN_POINTS || !n_per_axis.is_power_of_two() {
            return Err(Error::config(format!(
                "grid_n must be a power of two >= {} (got {n_per_axis})",
                Self::MIN_POINTS
            )));
        }
        Ok(Self { dims, n: n_per_axis })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn n_per_axis(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dims as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 / self.n as f64
    }

    /// Quadrature weight of one sample, `spacing^dims`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dims as i32)
    }

    /// `|Omega| = 2^dims`.
    pub fn volume(&self) -> f64 {
        2f64.powi(self.dims as i32)
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -1.0 + i as f64 * self.spacing()
    }

    /// Signed mode index in the symmetric range; the Nyquist entry is `-n/2`.
    pub fn mode_index(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.n / 2
    }

    pub fn wavenumber(&self, i: usize) -> f64 {
        PI * self.mode_index(i) as f64
    }

    /// Wavenumber used by spectral derivatives: identical to [`wavenumber`]
    /// except that the Nyquist entry is zero.
    ///
    /// [`wavenumber`]: Self::wavenumber
    pub fn derivative_wavenumber(&self, i: usize) -> f64 {
        if self.is_nyquist(i) {
            0.0
        } else {
            self.wavenumber(i)
        }
    }

    /// Largest mode index retained by the 2/3 rule.
    pub fn dealias_cutoff(&self) -> usize {
        self.n / 3
    }

    /// Whether a multi-index lies inside the dealiased band on every axis.
    pub fn in_dealiased_band(&self, idx: &[usize]) -> bool {
        let cut = self.dealias_cutoff() as i64;
        idx.iter().all(|&i| self.mode_index(i).abs() <= cut)
    }

    /// Axis indices of a flat position (unused trailing entries are zero).
    pub fn unravel(&self, flat: usize) -> [usize; 3] {
        let mut out = [0; 3];
        let mut rem = flat;
        for axis in (0..self.dims).rev() {
            out[axis] = rem % self.n;
            rem /= self.n;
        }
        out
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter()
            .take(self.dims)
            .fold(0, |acc, &i| acc * self.n + i)
    }

    /// Distance between consecutive flat entries along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dims - 1 - axis) as u32)
    }

    pub fn point(&self, flat: usize) -> [f64; 3] {
        let idx = self.unravel(flat);
        let mut x = [0.0; 3];
        for axis in 0..self.dims {
            x[axis] = self.coordinate(idx[axis]);
        }
        x
    }

    pub(crate) fn ensure_same(&self, other: &PeriodicGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left: self.to_string(),
                right: other.to_string(),
            })
        }
    }
}

impl fmt::Display for PeriodicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dims: Vec<String> = (0..self.dims).map(|_| self.n.to_string()).collect();
        write!(f, "{}", dims.join("x"))
    }
}

/// Convenience constructor mirroring [`PeriodicGrid::new`].
pub fn make_grid(dims: usize, n_per_axis: usize) -> Result<PeriodicGrid> {
    PeriodicGrid::new(dims, n_per_axis)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_size() {
        let g = make_grid(2, 64).unwrap();
        assert_eq!(g.spacing(), 1.0 / 32.0);
        assert_eq!(g.spacing() * 64.0, 2.0);
        assert_eq!(make_grid(3, 8).unwrap().len(), 512);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(make_grid(2, 7), Err(Error::Config(_))));
        assert!(matches!(make_grid(1, 64), Err(Error::Config(_))));
        assert!(matches!(make_grid(2, 4), Err(Error::Config(_))));
        assert!(matches!(make_grid(4, 8), Err(Error::Config(_))));
        let msg = make_grid(2, 7).unwrap_err().to_string();
        assert!(msg.contains("power of two"), "{msg}");
    }

    #[test]
    fn symmetric_wavenumbers() {
        let g = make_grid(2, 8).unwrap();
        let idx: Vec<i64> = (0..8).map(|i| g.mode_index(i)).collect();
        assert_eq!(idx, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert_eq!(g.wavenumber(3), 3.0 * PI);
        assert_eq!(g.derivative_wavenumber(4), 0.0);
        assert_eq!(g.wavenumber(4), -4.0 * PI);
    }

    #[test]
    fn ravel_roundtrip() {
        let g = make_grid(3, 8).unwrap();
        for flat in [0, 1, 9, 77, 511] {
            let idx = g.unravel(flat);
            assert_eq!(g.ravel(&idx), flat);
        }
        assert_eq!(g.stride(0), 64);
        assert_eq!(g.stride(2), 1);
    }
}
