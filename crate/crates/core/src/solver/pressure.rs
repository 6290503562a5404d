use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::calculus::modes;
use crate::fft;
use crate::field::{ScalarField, VelocityField};

/// Zero-mean solution of `-lap p = div div (u (x) u)`.
pub fn recover_pressure(u: &VelocityField) -> ScalarField {
    let g = *u.grid();
    let dims = g.dims();
    let t = modes(&g);
    let mut acc = vec![Complex64::new(0.0, 0.0); g.len()];
    for a in 0..dims {
        for b in a..dims {
            let prod: Vec<f64> = u
                .component(a)
                .values()
                .iter()
                .zip(u.component(b).values())
                .map(|(x, y)| x * y)
                .collect();
            let s = fft::forward_real(&g, &prod);
            let w = if a == b { 1.0 } else { 2.0 };
            acc.par_iter_mut().enumerate().for_each(|(i, o)| {
                if t.k2[i] > 0.0 {
                    *o -= s[i] * (w * t.k[i][a] * t.k[i][b] / t.k2[i]);
                }
            });
        }
    }
    acc[0] = Complex64::new(0.0, 0.0);
    ScalarField::from_spectrum(g, acc)
}
