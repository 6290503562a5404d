//! Deterministic velocity and scalar generators with known structure.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calculus::{leray_project, modes};
use crate::error::{Error, Result};
use crate::field::{ScalarField, VelocityField};
use crate::grid::PeriodicGrid;
use crate::rng::{Stream, STREAM_LACUNARY, STREAM_RANDOM_DIVFREE, STREAM_RANDOM_SCALAR};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    Lacunary,
    TaylorGreen,
    Shear,
    RandomDivfree,
    Constant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub kind: SynthKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_max: Option<u32>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Spectral slope for `random_divfree`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl SynthSpec {
    pub fn new(kind: SynthKind) -> Self {
        Self {
            kind,
            alpha: None,
            j_max: None,
            seed: 0,
            amplitude: 1.0,
            slope: None,
        }
    }

    pub fn lacunary(alpha: f64, seed: u64) -> Self {
        Self {
            alpha: Some(alpha),
            seed,
            ..Self::new(SynthKind::Lacunary)
        }
    }

    pub fn with_j_max(mut self, j_max: u32) -> Self {
        self.j_max = Some(j_max);
        self
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    /// Range checks that do not need a grid.
    pub fn validate(&self) -> Result<()> {
        if !self.amplitude.is_finite() {
            return Err(Error::config("initial_condition.amplitude must be finite"));
        }
        if self.kind == SynthKind::Lacunary {
            match self.alpha {
                Some(a) if a > 0.0 && a < 1.0 => {}
                Some(a) => {
                    return Err(Error::config(format!(
                        "initial_condition.alpha must lie in (0, 1) for lacunary fields (got {a})"
                    )))
                }
                None => return Err(Error::config("initial_condition.alpha is required for lacunary fields")),
            }
        }
        Ok(())
    }
}

/// Builds the velocity field described by `spec`.
pub fn synthesize(spec: &SynthSpec, grid: PeriodicGrid) -> Result<VelocityField> {
    spec.validate()?;
    match spec.kind {
        SynthKind::Lacunary => lacunary_field(spec, grid),
        SynthKind::TaylorGreen => taylor_green(grid, spec.amplitude),
        SynthKind::Shear => {
            let a = spec.amplitude;
            let profile = ScalarField::from_fn(grid, |x| a * (PI * x[1]).sin());
            shear_flow(grid, &profile)
        }
        SynthKind::RandomDivfree => Ok(random_divfree(grid, spec.slope.unwrap_or(3.0), spec.seed)
            .scale(spec.amplitude)),
        SynthKind::Constant => {
            let mut v = vec![0.0; grid.dims()];
            v[0] = spec.amplitude;
            Ok(VelocityField::constant(grid, &v))
        }
    }
}

/// Default finest octave: the largest `j` with `2^j <= n/3`.
pub fn default_j_max(grid: &PeriodicGrid) -> u32 {
    let cut = grid.dealias_cutoff();
    let mut j = 0;
    while (1usize << (j + 1)) <= cut {
        j += 1;
    }
    j
}

/// Integer wavevectors and phases of one lacunary octave.
///
/// Four directions `theta0 + pi m / 4`, `theta0` uniform in `[0, pi)`, are
/// rounded to the lattice at radius `2^j`, sign-normalised (first nonzero
/// entry positive), and rotated by `pi / (16 * 2^j)` until distinct within the
/// octave. One phase per direction is drawn after the direction is settled.
pub fn lacunary_octave(seed: u64, j: u32) -> Vec<([i64; 2], f64)> {
    let mut rng = Stream::new(seed, STREAM_LACUNARY + j as u64);
    let r = (1u64 << j) as f64;
    let theta0 = PI * rng.uniform();
    let mut out: Vec<([i64; 2], f64)> = Vec::with_capacity(4);
    for m in 0..4 {
        let mut th = theta0 + PI * m as f64 / 4.0;
        let mut k = [0i64; 2];
        for _ in 0..64 {
            k = [(r * th.cos()).round() as i64, (r * th.sin()).round() as i64];
            if k[0] < 0 || (k[0] == 0 && k[1] < 0) {
                k = [-k[0], -k[1]];
            }
            if k != [0, 0] && out.iter().all(|(q, _)| *q != k) {
                break;
            }
            th += PI / (16.0 * r);
        }
        let phase = 2.0 * PI * rng.uniform();
        out.push((k, phase));
    }
    out
}

/// Octave weights `2^{-alpha j} sqrt(w_j)`; the end octaves absorb the
/// geometric tails of the infinite series they truncate.
fn octave_amplitude(alpha: f64, j: u32, j_max: u32) -> f64 {
    let lo = 2f64.powf(-2.0 * (1.0 - alpha));
    let hi = 2f64.powf(-2.0 * alpha);
    let mut w = 1.0;
    if j == 0 {
        w += lo / (1.0 - lo);
    }
    if j == j_max {
        w += hi / (1.0 - hi);
    }
    2f64.powf(-alpha * j as f64) * w.sqrt()
}

/// Lacunary divergence-free field with translation differences scaling as
/// `|xi|^alpha`:
/// `sum_j sum_m 2^{-alpha j} sqrt(w_j) cos(pi k_m . x + phi_m) k_m^perp / |k_m|`,
/// octaves `j = 0..=j_max`, then Leray-projected. Planar only.
pub fn lacunary_field(spec: &SynthSpec, grid: PeriodicGrid) -> Result<VelocityField> {
    if grid.dims() != 2 {
        return Err(Error::config("lacunary fields are only generated in 2-d"));
    }
    let alpha = spec
        .alpha
        .filter(|a| *a > 0.0 && *a < 1.0)
        .ok_or_else(|| Error::config("lacunary alpha must lie in (0, 1)"))?;
    let j_max = spec.j_max.unwrap_or_else(|| default_j_max(&grid));
    if (1usize << j_max) > grid.dealias_cutoff() {
        return Err(Error::config(format!(
            "finest lacunary octave 2^{j_max} exceeds the dealiased band |k| <= {} of a {grid} grid",
            grid.dealias_cutoff()
        )));
    }
    let n = grid.n_per_axis();
    let mut u1 = vec![0.0; grid.len()];
    let mut u2 = vec![0.0; grid.len()];
    for j in 0..=j_max {
        let amp = spec.amplitude * octave_amplitude(alpha, j, j_max);
        for (k, phase) in lacunary_octave(spec.seed, j) {
            let norm = ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
            let e = [-(k[1] as f64) / norm, k[0] as f64 / norm];
            for i0 in 0..n {
                let x0 = grid.coordinate(i0);
                for i1 in 0..n {
                    let x1 = grid.coordinate(i1);
                    let c = amp * (PI * (k[0] as f64 * x0 + k[1] as f64 * x1) + phase).cos();
                    let f = i0 * n + i1;
                    u1[f] += e[0] * c;
                    u2[f] += e[1] * c;
                }
            }
        }
    }
    let raw = VelocityField::from_parts(
        grid,
        vec![ScalarField::from_raw(grid, u1), ScalarField::from_raw(grid, u2)],
        false,
    );
    Ok(leray_project(&raw))
}

pub fn taylor_green(grid: PeriodicGrid, amplitude: f64) -> Result<VelocityField> {
    if grid.dims() != 2 {
        return Err(Error::config("Taylor-Green flow is defined in 2-d only"));
    }
    let a = amplitude;
    let u = VelocityField::from_fn(grid, |x| {
        vec![
            a * (PI * x[0]).sin() * (PI * x[1]).cos(),
            -a * (PI * x[0]).cos() * (PI * x[1]).sin(),
        ]
    });
    Ok(u.with_divergence_free(true))
}

/// `u = (profile(x2), 0)`.
pub fn shear_flow(grid: PeriodicGrid, profile: &ScalarField) -> Result<VelocityField> {
    if grid.dims() != 2 {
        return Err(Error::config("shear flow is defined in 2-d only"));
    }
    grid.ensure_same(profile.grid())?;
    let n = grid.n_per_axis();
    let v = profile.values();
    let tol = 1e-14 * profile.max_abs().max(1.0);
    for row in 1..n {
        for i in 0..n {
            if (v[row * n + i] - v[i]).abs() > tol {
                return Err(Error::config("shear profile must depend on x2 only"));
            }
        }
    }
    Ok(VelocityField::from_parts(
        grid,
        vec![profile.clone(), ScalarField::zeros(grid)],
        true,
    ))
}

/// Gaussian divergence-free field with `|u_hat(k)| ~ |k|^{-slope}` on the
/// dealiased band, normalised to unit root-mean-square speed.
///
/// Per component, in flat mode order, every nonzero in-band mode receives a
/// complex coefficient `(normal + i normal) * |k|^{-slope}`; the field is the
/// real part of the inverse transform.
pub fn random_divfree(grid: PeriodicGrid, slope: f64, seed: u64) -> VelocityField {
    let t = modes(&grid);
    let mut rng = Stream::new(seed, STREAM_RANDOM_DIVFREE);
    let mut comps = Vec::with_capacity(grid.dims());
    for _ in 0..grid.dims() {
        let mut spec = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (i, c) in spec.iter_mut().enumerate() {
            if t.dealias[i] && t.k2[i] > 0.0 {
                let w = t.k2[i].sqrt().powf(-slope);
                let re = rng.normal();
                let im = rng.normal();
                *c = Complex64::new(re * w, im * w);
            }
        }
        comps.push(ScalarField::from_spectrum(grid, spec));
    }
    let u = leray_project(&VelocityField::from_parts(grid, comps, false));
    let rms = (2.0 * u.kinetic_energy() / grid.volume()).sqrt();
    if rms > 0.0 {
        u.scale(1.0 / rms)
    } else {
        u
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarKind {
    Constant,
    /// `mean + amplitude * sin(pi k . x)`.
    Sine,
    /// `mean` plus a Gaussian band-limited field with max modulus `amplitude`.
    RandomSmooth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarSpec {
    pub kind: ScalarKind,
    #[serde(default)]
    pub mean: f64,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavevector: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl ScalarSpec {
    pub fn constant(value: f64) -> Self {
        Self {
            kind: ScalarKind::Constant,
            mean: value,
            amplitude: 0.0,
            wavevector: None,
            slope: None,
            seed: 0,
        }
    }

    pub fn sine(mean: f64, amplitude: f64, wavevector: Vec<i64>) -> Self {
        Self {
            kind: ScalarKind::Sine,
            mean,
            amplitude,
            wavevector: Some(wavevector),
            slope: None,
            seed: 0,
        }
    }
}

pub fn synthesize_scalar(spec: &ScalarSpec, grid: PeriodicGrid) -> Result<ScalarField> {
    match spec.kind {
        ScalarKind::Constant => Ok(ScalarField::constant(grid, spec.mean)),
        ScalarKind::Sine => {
            let k = spec.wavevector.clone().unwrap_or_else(|| {
                let mut k = vec![0; grid.dims()];
                k[0] = 1;
                k
            });
            if k.len() != grid.dims() {
                return Err(Error::config(format!(
                    "wavevector has {} entries on a {}-d grid",
                    k.len(),
                    grid.dims()
                )));
            }
            if k.iter().any(|v| v.unsigned_abs() as usize > grid.dealias_cutoff()) {
                return Err(Error::config("wavevector lies outside the dealiased band"));
            }
            Ok(ScalarField::from_fn(grid, |x| {
                let ph: f64 = k.iter().zip(x).map(|(a, b)| *a as f64 * b).sum();
                spec.mean + spec.amplitude * (PI * ph).sin()
            }))
        }
        ScalarKind::RandomSmooth => {
            let t = modes(&grid);
            let slope = spec.slope.unwrap_or(3.0);
            let mut rng = Stream::new(spec.seed, STREAM_RANDOM_SCALAR);
            let mut s = vec![Complex64::new(0.0, 0.0); grid.len()];
            for (i, c) in s.iter_mut().enumerate() {
                if t.dealias[i] && t.k2[i] > 0.0 {
                    let w = t.k2[i].sqrt().powf(-slope);
                    let re = rng.normal();
                    let im = rng.normal();
                    *c = Complex64::new(re * w, im * w);
                }
            }
            let f = ScalarField::from_spectrum(grid, s);
            let m = f.max_abs();
            let scale = if m > 0.0 { spec.amplitude / m } else { 0.0 };
            Ok(f.map(|v| spec.mean + scale * v))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::divergence;

    fn g2(n: usize) -> PeriodicGrid {
        PeriodicGrid::new(2, n).unwrap()
    }

    #[test]
    fn default_octaves() {
        assert_eq!(default_j_max(&g2(256)), 6);
        assert_eq!(default_j_max(&g2(512)), 7);
        assert_eq!(default_j_max(&g2(1024)), 8);
    }

    #[test]
    fn octave_directions_are_distinct() {
        for j in 0..8 {
            let oct = lacunary_octave(42, j);
            for a in 0..4 {
                for b in a + 1..4 {
                    assert_ne!(oct[a].0, oct[b].0, "octave {j}");
                }
            }
        }
    }

    #[test]
    fn lacunary_rejects_octave_above_band() {
        let spec = SynthSpec::lacunary(0.5, 1).with_j_max(5);
        assert!(lacunary_field(&spec, g2(64)).is_err());
        assert!(lacunary_field(&spec.with_j_max(4), g2(64)).is_ok());
    }

    #[test]
    fn taylor_green_energy_and_divergence() {
        let g = g2(64);
        let u = taylor_green(g, 1.0).unwrap();
        assert!((u.kinetic_energy() - 1.0).abs() < 1e-12);
        assert!(divergence(&u).max_abs() < 1e-12);
        assert_eq!(taylor_green(g, 0.0).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn shear_rejects_x1_dependence() {
        let g = g2(16);
        let bad = ScalarField::from_fn(g, |x| x[0].sin());
        assert!(shear_flow(g, &bad).is_err());
    }

    #[test]
    fn random_divfree_is_normalised() {
        let g = g2(32);
        let u = random_divfree(g, 3.0, 9);
        assert!((u.kinetic_energy() * 2.0 / 4.0 - 1.0).abs() < 1e-12);
        assert!(divergence(&u).max_abs() <= 1e-10 * u.max_abs());
    }
}
