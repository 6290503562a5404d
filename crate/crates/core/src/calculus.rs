//! Spectral differential operators.
//!
//! Derivatives multiply mode `k` by `i * k_tilde`, where `k_tilde` is the
//! physical wavenumber with the Nyquist entry zeroed. The Leray projector is
//! built from the same `k_tilde`, so the discrete divergence of a projected
//! field vanishes to rounding.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ScalarField, TensorField, VelocityField};
use crate::grid::PeriodicGrid;

/// Per-mode lookup tables for one grid, shared across calls.
pub(crate) struct ModeTable {
    /// Derivative wavenumbers per flat mode (unused axes are zero).
    pub k: Vec<[f64; 3]>,
    /// `|k_tilde|^2`.
    pub k2: Vec<f64>,
    /// Inside the 2/3-rule band on every axis.
    pub dealias: Vec<bool>,
}

pub(crate) fn modes(grid: &PeriodicGrid) -> Arc<ModeTable> {
    static CACHE: OnceLock<Mutex<HashMap<PeriodicGrid, Arc<ModeTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("mode cache poisoned");
    map.entry(*grid)
        .or_insert_with(|| {
            let dims = grid.dims();
            let mut k = Vec::with_capacity(grid.len());
            let mut k2 = Vec::with_capacity(grid.len());
            let mut dealias = Vec::with_capacity(grid.len());
            for flat in 0..grid.len() {
                let idx = grid.unravel(flat);
                let mut kv = [0.0; 3];
                for a in 0..dims {
                    kv[a] = grid.derivative_wavenumber(idx[a]);
                }
                k2.push(kv.iter().map(|v| v * v).sum());
                k.push(kv);
                dealias.push(grid.in_dealiased_band(&idx[..dims]));
            }
            Arc::new(ModeTable { k, k2, dealias })
        })
        .clone()
}

/// Multiplies every mode of `f` by `m(flat)`.
pub(crate) fn apply_multiplier(
    f: &ScalarField,
    m: impl Fn(usize) -> Complex64 + Sync,
) -> ScalarField {
    let spec: Vec<Complex64> = f
        .spectrum()
        .par_iter()
        .enumerate()
        .map(|(i, c)| c * m(i))
        .collect();
    ScalarField::from_spectrum(*f.grid(), spec)
}

pub fn derivative(f: &ScalarField, axis: usize) -> ScalarField {
    assert!(axis < f.grid().dims(), "axis {axis} out of range");
    let t = modes(f.grid());
    apply_multiplier(f, |i| Complex64::new(0.0, t.k[i][axis]))
}

pub fn gradient(f: &ScalarField) -> VelocityField {
    let g = *f.grid();
    let comps = (0..g.dims()).map(|a| derivative(f, a)).collect();
    VelocityField::from_parts(g, comps, false)
}

pub fn divergence(u: &VelocityField) -> ScalarField {
    let g = *u.grid();
    let t = modes(&g);
    let mut acc = vec![Complex64::new(0.0, 0.0); g.len()];
    for (a, c) in u.components().iter().enumerate() {
        acc.par_iter_mut()
            .zip(c.spectrum().par_iter())
            .enumerate()
            .for_each(|(i, (o, s))| *o += s * Complex64::new(0.0, t.k[i][a]));
    }
    ScalarField::from_spectrum(g, acc)
}

/// Orthogonal projection onto divergence-free fields:
/// `u_hat - k (k . u_hat) / |k|^2` for `k != 0`, identity otherwise.
pub fn leray_project(u: &VelocityField) -> VelocityField {
    let g = *u.grid();
    let dims = g.dims();
    let t = modes(&g);
    let specs: Vec<&[Complex64]> = u.components().iter().map(|c| c.spectrum()).collect();
    let mut out: Vec<Vec<Complex64>> = specs.iter().map(|s| s.to_vec()).collect();
    let mut kdot = vec![Complex64::new(0.0, 0.0); g.len()];
    kdot.par_iter_mut().enumerate().for_each(|(i, kd)| {
        if t.k2[i] > 0.0 {
            let mut s = Complex64::new(0.0, 0.0);
            for a in 0..dims {
                s += specs[a][i] * t.k[i][a];
            }
            *kd = s / t.k2[i];
        }
    });
    for (a, o) in out.iter_mut().enumerate() {
        o.par_iter_mut()
            .zip(kdot.par_iter())
            .enumerate()
            .for_each(|(i, (v, kd))| *v -= kd * t.k[i][a]);
    }
    let comps = out
        .into_iter()
        .map(|s| ScalarField::from_spectrum(g, s))
        .collect();
    VelocityField::from_parts(g, comps, true)
}

/// Scalar vorticity `d1 u2 - d2 u1` of a planar field.
pub fn curl2d(u: &VelocityField) -> Result<ScalarField> {
    let g = *u.grid();
    if g.dims() != 2 {
        return Err(Error::config("scalar curl needs a 2-d field"));
    }
    let t = modes(&g);
    let s1 = u.component(0).spectrum();
    let s2 = u.component(1).spectrum();
    let spec = (0..g.len())
        .into_par_iter()
        .map(|i| Complex64::new(0.0, 1.0) * (s2[i] * t.k[i][0] - s1[i] * t.k[i][1]))
        .collect();
    Ok(ScalarField::from_spectrum(g, spec))
}

/// `entry(i, j) = d_j u_i`.
pub fn velocity_gradient(u: &VelocityField) -> TensorField {
    let g = *u.grid();
    let mut entries = Vec::with_capacity(g.dims() * g.dims());
    for c in u.components() {
        for j in 0..g.dims() {
            entries.push(derivative(c, j));
        }
    }
    TensorField::new(g, entries).expect("entries share the grid")
}
