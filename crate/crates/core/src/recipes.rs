//! Analytic initial-data families.
//!
//! Every field used by the command-line experiments comes from one of these
//! recipes, so a run is fully described by its parameters and seed.

use crate::grid::{sym_len, GridSpec, ScalarField, SymTensorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

/// Conformal exponent `u(x) = a Σ_i sin(2π k x_i / L_i + i)`.
pub fn bump_exponent(grid: &GridSpec, amplitude: f64, mode: u32) -> ScalarField {
    let periods = grid.periods().to_vec();
    ScalarField::from_fn(grid, move |x| {
        amplitude
            * x.iter()
                .zip(&periods)
                .enumerate()
                .map(|(i, (xi, l))| (TAU * mode as f64 * xi / l + i as f64).sin())
                .sum::<f64>()
    })
}

/// `e^{2u} δ_ij`.
pub fn conformal_metric(u: &ScalarField) -> SymTensorField {
    SymTensorField::conformal(&u.map(|v| (2.0 * v).exp()))
}

/// Conformally flat metric `e^{2u} δ` with `u` from [`bump_exponent`].
pub fn conformal_bump(grid: &GridSpec, amplitude: f64, mode: u32) -> SymTensorField {
    conformal_metric(&bump_exponent(grid, amplitude, mode))
}

/// Plane wave `a sin(2π k Σ_i x_i / L_i)`; depends on every coordinate.
pub fn sine_scalar(grid: &GridSpec, amplitude: f64, mode: u32) -> ScalarField {
    let periods = grid.periods().to_vec();
    ScalarField::from_fn(grid, move |x| {
        let phase: f64 = x.iter().zip(&periods).map(|(xi, l)| xi / l).sum();
        amplitude * (TAU * mode as f64 * phase).sin()
    })
}

/// Random trigonometric polynomial with wavenumbers up to `max_mode` per axis,
/// scaled so that `max |s| ≤ amplitude`.
pub fn random_smooth_scalar(grid: &GridSpec, amplitude: f64, max_mode: u32, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_smooth_with(grid, amplitude, max_mode, &mut rng)
}

fn random_smooth_with(grid: &GridSpec, amplitude: f64, max_mode: u32, rng: &mut ChaCha8Rng) -> ScalarField {
    let d = grid.dim();
    let k = max_mode as i64;
    let mut terms: Vec<(Vec<f64>, f64, f64)> = Vec::new();
    let mut wave = vec![-k; d];
    loop {
        if wave.iter().any(|&w| w != 0) {
            let coef = rng.random_range(-1.0..1.0);
            let phase = rng.random_range(0.0..TAU);
            let kvec = wave
                .iter()
                .zip(grid.periods())
                .map(|(&w, l)| TAU * w as f64 / l)
                .collect();
            terms.push((kvec, coef, phase));
        }
        // odometer over [-k, k]^d
        let mut a = 0;
        while a < d {
            wave[a] += 1;
            if wave[a] <= k {
                break;
            }
            wave[a] = -k;
            a += 1;
        }
        if a == d {
            break;
        }
    }
    let norm: f64 = terms.iter().map(|t| t.1.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
    let scale = amplitude / norm;
    ScalarField::from_fn(grid, move |x| {
        scale
            * terms
                .iter()
                .map(|(kv, c, ph)| {
                    let arg: f64 = kv.iter().zip(x).map(|(k, xi)| k * xi).sum();
                    c * (arg + ph).cos()
                })
                .sum::<f64>()
    })
}

/// Symmetric tensor whose packed components are independent random smooth
/// scalars of size at most `amplitude`.
pub fn random_sym_tensor(grid: &GridSpec, amplitude: f64, max_mode: u32, seed: u64) -> SymTensorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps: Vec<ScalarField> = (0..sym_len(grid.dim()))
        .map(|_| random_smooth_with(grid, amplitude, max_mode, &mut rng))
        .collect();
    SymTensorField::from_components(&comps).expect("components share one grid")
}

/// `δ + a P(x)` with `P` random smooth symmetric and `|P_ij| ≤ 1/d`, hence
/// positive definite for `a < 1` by Gershgorin.
pub fn random_spd(grid: &GridSpec, amplitude: f64, seed: u64) -> SymTensorField {
    let d = grid.dim();
    let p = random_sym_tensor(grid, amplitude / d as f64, 1, seed);
    let mut g = SymTensorField::identity(grid);
    for (v, q) in g.values_mut().iter_mut().zip(p.values()) {
        *v += q;
    }
    g
}
