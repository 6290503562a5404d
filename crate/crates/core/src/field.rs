//! Sampled scalar, vector and tensor fields on a [`PeriodicGrid`].
//!
//! Fields are immutable after construction. The Fourier coefficients of a
//! scalar field are computed on first use and cached alongside the samples.

use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::PeriodicGrid;

#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: PeriodicGrid,
    values: Vec<f64>,
    spectrum: OnceLock<Arc<Vec<Complex64>>>,
}

impl ScalarField {
    pub fn new(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::config(format!(
                "expected {} samples for a {grid} grid, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::config(format!("non-finite sample at index {pos}")));
        }
        Ok(Self::from_raw(grid, values))
    }

    pub(crate) fn from_raw(grid: PeriodicGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            grid,
            values,
            spectrum: OnceLock::new(),
        }
    }

    /// Samples `f` at every grid point; `f` receives the point coordinates.
    ///
    /// Panics if `f` returns a non-finite value.
    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let dims = grid.dims();
        let values: Vec<f64> = (0..grid.len())
            .map(|flat| {
                let x = grid.point(flat);
                let v = f(&x[..dims]);
                assert!(v.is_finite(), "non-finite sample at {:?}", &x[..dims]);
                v
            })
            .collect();
        Self::from_raw(grid, values)
    }

    /// Real part of the inverse transform of `spectrum`.
    pub fn from_spectrum(grid: PeriodicGrid, spectrum: Vec<Complex64>) -> Self {
        Self::from_raw(grid, fft::inverse_real(&grid, spectrum))
    }

    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: PeriodicGrid, value: f64) -> Self {
        Self::from_raw(grid, vec![value; grid.len()])
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Discrete Fourier coefficients (unnormalised forward transform).
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum
            .get_or_init(|| Arc::new(fft::forward_real(&self.grid, &self.values)))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    /// `∫_Ω f dx` by the periodic Riemann sum.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `∫_Ω f w dx` for raw samples `w` on the same grid.
    pub fn cell_weighted_sum(&self, w: &[f64]) -> f64 {
        self.values.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() * self.grid.cell_volume()
    }

    /// `∫_Ω f g dx`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.cell_volume())
    }

    /// Circular translation: the result at `x` is the sample at `x + steps * spacing`.
    pub fn translated(&self, steps: &[i64]) -> Self {
        let g = self.grid;
        let n = g.n_per_axis() as i64;
        let dims = g.dims();
        let mut out = vec![0.0; g.len()];
        for (flat, o) in out.iter_mut().enumerate() {
            let idx = g.unravel(flat);
            let mut src = [0usize; 3];
            for a in 0..dims {
                src[a] = (idx[a] as i64 + steps.get(a).copied().unwrap_or(0)).rem_euclid(n) as usize;
            }
            *o = self.values[g.ravel(&src[..dims])];
        }
        Self::from_raw(g, out)
    }
}

/// A vector field with one [`ScalarField`] per spatial axis.
#[derive(Clone, Debug)]
pub struct VelocityField {
    grid: PeriodicGrid,
    components: Vec<ScalarField>,
    divergence_free: bool,
}

impl VelocityField {
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        let grid = *components
            .first()
            .ok_or_else(|| Error::config("velocity field needs at least one component"))?
            .grid();
        if components.len() != grid.dims() {
            return Err(Error::config(format!(
                "velocity field on a {}-d grid needs {} components, got {}",
                grid.dims(),
                grid.dims(),
                components.len()
            )));
        }
        for c in &components {
            grid.ensure_same(c.grid())?;
        }
        Ok(Self {
            grid,
            components,
            divergence_free: false,
        })
    }

    pub(crate) fn from_parts(grid: PeriodicGrid, components: Vec<ScalarField>, divergence_free: bool) -> Self {
        debug_assert_eq!(components.len(), grid.dims());
        Self {
            grid,
            components,
            divergence_free,
        }
    }

    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        let dims = grid.dims();
        let mut comps = vec![Vec::with_capacity(grid.len()); dims];
        for flat in 0..grid.len() {
            let x = grid.point(flat);
            let v = f(&x[..dims]);
            assert_eq!(v.len(), dims, "vector function returned wrong length");
            for (c, val) in comps.iter_mut().zip(v) {
                assert!(val.is_finite(), "non-finite sample at {:?}", &x[..dims]);
                c.push(val);
            }
        }
        Self::from_parts(
            grid,
            comps.into_iter().map(|c| ScalarField::from_raw(grid, c)).collect(),
            false,
        )
    }

    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self::constant(grid, &vec![0.0; grid.dims()])
    }

    /// Spatially constant field; constants are divergence-free.
    pub fn constant(grid: PeriodicGrid, value: &[f64]) -> Self {
        assert_eq!(value.len(), grid.dims());
        Self::from_parts(
            grid,
            value.iter().map(|&v| ScalarField::constant(grid, v)).collect(),
            true,
        )
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn component(&self, axis: usize) -> &ScalarField {
        &self.components[axis]
    }

    pub fn into_components(self) -> Vec<ScalarField> {
        self.components
    }

    /// Set by Leray projection and preserved by linear operations that commute with it.
    pub fn is_divergence_free(&self) -> bool {
        self.divergence_free
    }

    pub(crate) fn with_divergence_free(mut self, flag: bool) -> Self {
        self.divergence_free = flag;
        self
    }

    fn zip_components(&self, other: &Self, f: impl Fn(f64, f64) -> f64 + Copy) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let comps = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.zip_with(b, f))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_parts(
            self.grid,
            comps,
            self.divergence_free && other.divergence_free,
        ))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_components(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_components(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_parts(
            self.grid,
            self.components.iter().map(|c| c.scale(s)).collect(),
            self.divergence_free,
        )
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.pointwise_magnitude()
    }

    pub fn max_abs(&self) -> f64 {
        self.magnitudes().into_iter().fold(0.0, f64::max)
    }

    /// `∫_Ω u·v dx`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.inner(b))
            .sum()
    }

    /// `½ ∫_Ω |u|² dx`.
    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self
            .components
            .iter()
            .map(|c| c.values().iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            * self.grid.cell_volume()
    }

    pub fn mean(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.mean()).collect()
    }

    pub fn translated(&self, steps: &[i64]) -> Self {
        Self::from_parts(
            self.grid,
            self.components.iter().map(|c| c.translated(steps)).collect(),
            self.divergence_free,
        )
    }
}

/// Rank-two tensor field stored row-major: `entry(i, j)`.
#[derive(Clone, Debug)]
pub struct TensorField {
    grid: PeriodicGrid,
    entries: Vec<ScalarField>,
}

impl TensorField {
    pub fn new(grid: PeriodicGrid, entries: Vec<ScalarField>) -> Result<Self> {
        let d = grid.dims();
        if entries.len() != d * d {
            return Err(Error::config(format!(
                "tensor field on a {d}-d grid needs {} entries, got {}",
                d * d,
                entries.len()
            )));
        }
        for e in &entries {
            grid.ensure_same(e.grid())?;
        }
        Ok(Self { grid, entries })
    }

    /// Spatially constant tensor from a row-major matrix.
    pub fn constant(grid: PeriodicGrid, matrix: &[f64]) -> Result<Self> {
        Self::new(
            grid,
            matrix.iter().map(|&v| ScalarField::constant(grid, v)).collect(),
        )
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn entry(&self, i: usize, j: usize) -> &ScalarField {
        &self.entries[i * self.grid.dims() + j]
    }

    pub fn entries(&self) -> &[ScalarField] {
        &self.entries
    }

    pub(crate) fn map_entries(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self {
            grid: self.grid,
            entries: self.entries.iter().map(f).collect(),
        }
    }
}

/// Read access shared by scalar and vector fields.
pub trait Field {
    fn grid(&self) -> &PeriodicGrid;
    /// Sample arrays, one per component.
    fn component_values(&self) -> Vec<&[f64]>;

    /// `|f(x)|` per sample (Euclidean norm for vector fields).
    fn pointwise_magnitude(&self) -> Vec<f64> {
        let comps = self.component_values();
        let mut out = vec![0.0; self.grid().len()];
        for c in comps {
            for (o, v) in out.iter_mut().zip(c) {
                *o += v * v;
            }
        }
        out.iter_mut().for_each(|v| *v = v.sqrt());
        out
    }
}

impl Field for ScalarField {
    fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }
    fn component_values(&self) -> Vec<&[f64]> {
        vec![&self.values]
    }
    fn pointwise_magnitude(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.abs()).collect()
    }
}

impl Field for VelocityField {
    fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }
    fn component_values(&self) -> Vec<&[f64]> {
        self.components.iter().map(|c| c.values()).collect()
    }
}

/// `(Σ |f|^p · spacing^N)^{1/p}`.
///
/// Panics if `p < 1`.
pub fn lp_norm<F: Field>(f: &F, p: f64) -> f64 {
    assert!(p >= 1.0, "L^p norm needs p >= 1 (got {p})");
    let w = f.grid().cell_volume();
    let mags = f.pointwise_magnitude();
    if p == 1.0 {
        return mags.iter().sum::<f64>() * w;
    }
    if p == 2.0 {
        return (mags.iter().map(|m| m * m).sum::<f64>() * w).sqrt();
    }
    // Scale by the max to keep |f|^p in range.
    let top = mags.iter().fold(0.0f64, |a, &b| a.max(b));
    if top == 0.0 {
        return 0.0;
    }
    let s: f64 = mags.iter().map(|m| (m / top).powf(p)).sum();
    top * (s * w).powf(1.0 / p)
}

/// Band-limited resampling onto another resolution by spectral truncation or
/// zero padding. Modes at either grid's Nyquist index are dropped.
pub fn resample_scalar(f: &ScalarField, target: PeriodicGrid) -> Result<ScalarField> {
    let src = *f.grid();
    if src.dims() != target.dims() {
        return Err(Error::config(format!(
            "cannot resample a {}-d field onto a {}-d grid",
            src.dims(),
            target.dims()
        )));
    }
    if src == target {
        return Ok(f.clone());
    }
    let keep = (src.n_per_axis().min(target.n_per_axis()) / 2) as i64;
    let m = target.n_per_axis() as i64;
    let dims = src.dims();
    let scale = target.len() as f64 / src.len() as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); target.len()];
    for (flat, c) in f.spectrum().iter().enumerate() {
        let idx = src.unravel(flat);
        let mut tgt = [0usize; 3];
        let mut inside = true;
        for a in 0..dims {
            let k = src.mode_index(idx[a]);
            if k.abs() >= keep {
                inside = false;
                break;
            }
            tgt[a] = k.rem_euclid(m) as usize;
        }
        if inside {
            out[target.ravel(&tgt[..dims])] = c * scale;
        }
    }
    Ok(ScalarField::from_spectrum(target, out))
}

pub fn resample_velocity(u: &VelocityField, target: PeriodicGrid) -> Result<VelocityField> {
    let comps = u
        .components()
        .iter()
        .map(|c| resample_scalar(c, target))
        .collect::<Result<Vec<_>>>()?;
    Ok(VelocityField::from_parts(target, comps, u.is_divergence_free()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn g2(n: usize) -> PeriodicGrid {
        PeriodicGrid::new(2, n).unwrap()
    }

    #[test]
    fn lp_norm_of_constant_and_sine() {
        let g = g2(32);
        let one = ScalarField::constant(g, 1.0);
        assert!((lp_norm(&one, 2.0) - 2.0).abs() < 1e-14);
        let s = ScalarField::from_fn(g, |x| (PI * x[0]).sin());
        assert!((lp_norm(&s, 2.0) - 2f64.sqrt()).abs() < 1e-13);
        assert!((lp_norm(&s.scale(-3.0), 3.0) - 3.0 * lp_norm(&s, 3.0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_finite_samples() {
        let g = g2(8);
        let mut v = vec![0.0; g.len()];
        v[5] = f64::NAN;
        assert!(ScalarField::new(g, v).is_err());
        assert!(ScalarField::new(g, vec![0.0; 3]).is_err());
    }

    #[test]
    fn spectral_cache_reproduces_values() {
        let g = g2(16);
        let f = ScalarField::from_fn(g, |x| (x[0] * 3.0).sin() + x[1] * x[1]);
        let back = ScalarField::from_spectrum(g, f.spectrum().to_vec());
        let scale = f.max_abs();
        for (a, b) in f.values().iter().zip(back.values()) {
            assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn translation_is_circular() {
        let g = g2(8);
        let f = ScalarField::from_fn(g, |x| x[0] * 10.0 + x[1]);
        let t = f.translated(&[1, -1]);
        // value at index (0,0) comes from (1, 7)
        assert_eq!(t.values()[0], f.values()[g.ravel(&[1, 7])]);
    }

    #[test]
    fn resample_preserves_band_limited_field() {
        let fine = g2(64);
        let coarse = g2(16);
        let f = ScalarField::from_fn(fine, |x| (PI * x[0]).cos() * (2.0 * PI * x[1]).sin() + 0.3);
        let c = resample_scalar(&f, coarse).unwrap();
        let expect = ScalarField::from_fn(coarse, |x| (PI * x[0]).cos() * (2.0 * PI * x[1]).sin() + 0.3);
        for (a, b) in c.values().iter().zip(expect.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        let back = resample_scalar(&c, fine).unwrap();
        for (a, b) in back.values().iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn kinetic_energy_of_unit_field() {
        let g = g2(16);
        let u = VelocityField::constant(g, &[1.0, 0.0]);
        assert!((u.kinetic_energy() - 2.0).abs() < 1e-14);
    }
}
