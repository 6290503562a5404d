//! Multi-dimensional complex FFTs over row-major grid data.
//!
//! Forward transforms are unnormalised; [`inverse`] divides by the number of
//! samples so that `inverse(forward(x)) == x`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::PeriodicGrid;

type Plan = Arc<dyn Fft<f64>>;

fn plan(n: usize, inverse: bool) -> Plan {
    static PLANS: OnceLock<Mutex<HashMap<(usize, bool), Plan>>> = OnceLock::new();
    let cache = PLANS.get_or_init(Default::default);
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry((n, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

// Lines handed to one rayon task.
const LINES_PER_TASK: usize = 16;

fn transform_axis(grid: &PeriodicGrid, data: &mut [Complex64], axis: usize, fft: &Plan) {
    let n = grid.n_per_axis();
    let stride = grid.stride(axis);
    if stride == 1 {
        data.par_chunks_mut(n * LINES_PER_TASK)
            .for_each(|chunk| fft.process(chunk));
        return;
    }
    // Gather strided lines into contiguous storage, transform, scatter back.
    let block = n * stride;
    let mut lines = vec![Complex64::new(0.0, 0.0); data.len()];
    {
        let src: &[Complex64] = data;
        lines
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(line, out)| {
                let b = line / stride;
                let j = line % stride;
                let base = b * block + j;
                for (i, o) in out.iter_mut().enumerate() {
                    *o = src[base + i * stride];
                }
            });
    }
    lines
        .par_chunks_mut(n * LINES_PER_TASK)
        .for_each(|chunk| fft.process(chunk));
    data.par_chunks_mut(stride)
        .enumerate()
        .for_each(|(row, out)| {
            let b = row / n;
            let i = row % n;
            for (j, o) in out.iter_mut().enumerate() {
                *o = lines[(b * stride + j) * n + i];
            }
        });
}

pub fn forward(grid: &PeriodicGrid, data: &mut [Complex64]) {
    debug_assert_eq!(data.len(), grid.len());
    let fft = plan(grid.n_per_axis(), false);
    for axis in (0..grid.dims()).rev() {
        transform_axis(grid, data, axis, &fft);
    }
}

pub fn inverse(grid: &PeriodicGrid, data: &mut [Complex64]) {
    debug_assert_eq!(data.len(), grid.len());
    let fft = plan(grid.n_per_axis(), true);
    for axis in (0..grid.dims()).rev() {
        transform_axis(grid, data, axis, &fft);
    }
    let scale = 1.0 / data.len() as f64;
    data.par_iter_mut().for_each(|c| *c *= scale);
}

pub fn forward_real(grid: &PeriodicGrid, values: &[f64]) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward(grid, &mut data);
    data
}

/// Inverse transform keeping the real part.
pub fn inverse_real(grid: &PeriodicGrid, mut spectrum: Vec<Complex64>) -> Vec<f64> {
    inverse(grid, &mut spectrum);
    spectrum.into_iter().map(|c| c.re).collect()
}
