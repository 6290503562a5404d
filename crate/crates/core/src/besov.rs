//! Besov seminorm estimates from exact grid translations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::fit::log_log_slope;
use crate::grid::PeriodicGrid;

/// Which translations probe the seminorm.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub enum ShiftPolicy {
    /// Steps `2^j` grid cells along every axis and along the diagonals
    /// `e_a +- e_b`, for every magnitude up to 1/2.
    #[default]
    Dyadic,
    /// Explicit shift vectors in grid steps.
    Steps(Vec<Vec<i64>>),
}

impl ShiftPolicy {
    pub fn shifts(&self, grid: &PeriodicGrid) -> Vec<Vec<i64>> {
        match self {
            ShiftPolicy::Steps(s) => s.clone(),
            ShiftPolicy::Dyadic => {
                let dims = grid.dims();
                let mut dirs: Vec<Vec<i64>> = Vec::new();
                for a in 0..dims {
                    let mut e = vec![0; dims];
                    e[a] = 1;
                    dirs.push(e);
                }
                for a in 0..dims {
                    for b in a + 1..dims {
                        for sign in [1, -1] {
                            let mut e = vec![0; dims];
                            e[a] = 1;
                            e[b] = sign;
                            dirs.push(e);
                        }
                    }
                }
                let h = grid.spacing();
                let mut out = Vec::new();
                for d in dirs {
                    let len = (d.iter().map(|v| (v * v) as f64).sum::<f64>()).sqrt();
                    let mut s = 1i64;
                    while len * s as f64 * h <= 0.5 + 1e-12 {
                        out.push(d.iter().map(|v| v * s).collect());
                        s *= 2;
                    }
                }
                out
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftEntry {
    pub xi_magnitude: f64,
    pub lp_diff_norm: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovEstimate {
    pub alpha: f64,
    pub p: f64,
    pub seminorm: f64,
    /// One row per distinct magnitude (largest difference over directions),
    /// sorted by increasing magnitude.
    pub shift_table: Vec<ShiftEntry>,
    /// Log-log slope over magnitudes at least four grid spacings; `None`
    /// when fewer than three such magnitudes carry a nonzero difference.
    pub fitted_alpha: Option<f64>,
}

impl BesovEstimate {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("xi_magnitude,lp_diff_norm,ratio\n");
        for e in &self.shift_table {
            s.push_str(&format!("{:e},{:e},{:e}\n", e.xi_magnitude, e.lp_diff_norm, e.ratio));
        }
        s
    }
}

fn diff_norm_steps<F: Field>(h: &F, steps: &[i64], p: f64) -> f64 {
    let g = h.grid();
    let dims = g.dims();
    let n = g.n_per_axis();
    let comps = h.component_values();
    // Translating by `steps` along all axes is a flat offset within each
    // row block; handle wrap-around per axis.
    let shift: Vec<usize> = (0..3)
        .map(|a| {
            if a < dims {
                steps.get(a).copied().unwrap_or(0).rem_euclid(n as i64) as usize
            } else {
                0
            }
        })
        .collect();
    let mut total = 0.0;
    let mut idx = [0usize; 3];
    let rows = g.len() / n;
    for row in 0..rows {
        let r = g.unravel(row * n);
        let mut src_row = 0;
        for a in 0..dims - 1 {
            idx[a] = (r[a] + shift[a]) % n;
            src_row = src_row * n + idx[a];
        }
        let base = row * n;
        let sbase = src_row * n;
        let sl = shift[dims - 1];
        for i in 0..n {
            let j = sbase + (i + sl) % n;
            let mut m2 = 0.0;
            for c in &comps {
                let d = c[j] - c[base + i];
                m2 += d * d;
            }
            total += if p == 2.0 { m2 } else { m2.sqrt().powf(p) };
        }
    }
    (total * g.cell_volume()).powf(1.0 / p)
}

/// `‖h(. + xi) - h‖_{L^p}` for a grid-aligned shift `xi` in domain units.
pub fn translation_difference_norm<F: Field>(h: &F, xi: &[f64], p: f64) -> Result<f64> {
    let g = h.grid();
    if xi.len() != g.dims() {
        return Err(Error::config(format!(
            "shift has {} components on a {}-d grid",
            xi.len(),
            g.dims()
        )));
    }
    let sp = g.spacing();
    let mut steps = Vec::with_capacity(xi.len());
    for &x in xi {
        let s = x / sp;
        if (s - s.round()).abs() > 1e-9 * s.abs().max(1.0) {
            return Err(Error::config(format!(
                "shift component {x} is not a multiple of the grid spacing {sp}"
            )));
        }
        steps.push(s.round() as i64);
    }
    Ok(translation_difference_norm_steps(h, &steps, p))
}

/// As [`translation_difference_norm`] with the shift given in grid steps.
pub fn translation_difference_norm_steps<F: Field>(h: &F, steps: &[i64], p: f64) -> f64 {
    assert!(p >= 1.0, "L^p norm needs p >= 1 (got {p})");
    diff_norm_steps(h, steps, p)
}

pub fn besov_seminorm<F: Field + Sync>(
    h: &F,
    alpha: f64,
    p: f64,
    policy: &ShiftPolicy,
) -> BesovEstimate {
    let g = *h.grid();
    let sp = g.spacing();
    let shifts = policy.shifts(&g);
    let rows: Vec<(f64, f64)> = shifts
        .par_iter()
        .map(|s| {
            let mag = s.iter().map(|v| (v * v) as f64).sum::<f64>().sqrt() * sp;
            (mag, translation_difference_norm_steps(h, s, p))
        })
        .collect();
    let mut table: Vec<ShiftEntry> = Vec::new();
    let mut sorted = rows;
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (mag, norm) in sorted {
        if mag == 0.0 {
            continue;
        }
        match table.last_mut() {
            Some(last) if (last.xi_magnitude - mag).abs() <= 1e-12 * mag => {
                last.lp_diff_norm = last.lp_diff_norm.max(norm);
            }
            _ => table.push(ShiftEntry {
                xi_magnitude: mag,
                lp_diff_norm: norm,
                ratio: 0.0,
            }),
        }
    }
    for e in &mut table {
        e.ratio = e.lp_diff_norm / e.xi_magnitude.powf(alpha);
    }
    let seminorm = table.iter().fold(0.0f64, |m, e| m.max(e.ratio));
    let usable: Vec<&ShiftEntry> = table
        .iter()
        .filter(|e| e.xi_magnitude >= 4.0 * sp * (1.0 - 1e-12) && e.lp_diff_norm > 0.0)
        .collect();
    let fitted_alpha = if usable.len() >= 3 {
        let x: Vec<f64> = usable.iter().map(|e| e.xi_magnitude).collect();
        let y: Vec<f64> = usable.iter().map(|e| e.lp_diff_norm).collect();
        log_log_slope(&x, &y)
    } else {
        None
    };
    BesovEstimate {
        alpha,
        p,
        seminorm,
        shift_table: table,
        fitted_alpha,
    }
}

/// Fitted regularity exponent under the default dyadic policy.
pub fn fit_regularity_exponent<F: Field + Sync>(h: &F, p: f64) -> Result<f64> {
    besov_seminorm(h, 0.5, p, &ShiftPolicy::Dyadic)
        .fitted_alpha
        .ok_or_else(|| {
            Error::config("fewer than 3 usable shift magnitudes for a regularity fit")
        })
}
