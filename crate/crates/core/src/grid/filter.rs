use super::{GridSpec, ScalarField};
use crate::{Error, Result};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Zeroes every discrete Fourier mode whose wavenumber on any axis exceeds
/// `cutoff_fraction · N/2`. A cutoff of 1 returns the input unchanged.
pub fn spectral_filter(field: &ScalarField, cutoff_fraction: f64) -> Result<ScalarField> {
    if !(cutoff_fraction > 0.0 && cutoff_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "cutoff fraction {cutoff_fraction} outside (0, 1]"
        )));
    }
    if cutoff_fraction == 1.0 {
        return Ok(field.clone());
    }
    let grid = field.grid();
    let mut data: Vec<Complex64> = field
        .values()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    for axis in 0..grid.dim() {
        let fft = planner.plan_fft_forward(grid.points()[axis]);
        transform_axis(grid, axis, &mut data, &fft);
    }
    for (node, c) in data.iter_mut().enumerate() {
        let keep = (0..grid.dim()).all(|a| {
            let n = grid.points()[a];
            let j = grid.coord(node, a);
            let k = if j <= n / 2 { j } else { n - j };
            (k as f64) <= cutoff_fraction * n as f64 / 2.0
        });
        if !keep {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    for axis in 0..grid.dim() {
        let fft = planner.plan_fft_inverse(grid.points()[axis]);
        transform_axis(grid, axis, &mut data, &fft);
    }
    let scale = 1.0 / grid.len() as f64;
    let values = data.into_iter().map(|c| c.re * scale).collect();
    Ok(ScalarField::from_raw(grid.clone(), values))
}

fn transform_axis(grid: &GridSpec, axis: usize, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
    let n = grid.points()[axis];
    let stride = grid.stride(axis);
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for start in 0..grid.len() {
        if grid.coord(start, axis) != 0 {
            continue;
        }
        for (i, slot) in line.iter_mut().enumerate() {
            *slot = data[start + i * stride];
        }
        fft.process(&mut line);
        for (i, v) in line.iter().enumerate() {
            data[start + i * stride] = *v;
        }
    }
}
