//! Generic tensor calculus against analytic oracles.

use dilaton_core::geometry::{
    christoffel, curvature, curvature_at, grad_norm_sq, hessian, hessian_trace, laplace_beltrami,
    ricci, scalar_curvature, volume_density,
};
use dilaton_core::grid::{integrate, partial_derivative, second_derivative};
use dilaton_core::recipes::{conformal_metric, random_smooth_scalar, random_spd};
use dilaton_core::{GridSpec, ScalarField, StencilOrder, SymTensorField};
use std::f64::consts::TAU;

const L: f64 = TAU;

fn conformal_u(grid: &GridSpec) -> ScalarField {
    ScalarField::from_fn(grid, |x| 0.1 * (TAU * x[0] / L).sin())
}

/// Analytic Γ for g = e^{2u}δ: δ^k_i ∂_j u + δ^k_j ∂_i u − δ_ij ∂_k u.
fn conformal_christoffel_error(n: usize) -> f64 {
    let grid = GridSpec::cube(2, n, L).unwrap();
    let u = conformal_u(&grid);
    let g = conformal_metric(&u);
    let gamma = christoffel(&g, StencilOrder::Second).unwrap();
    let du = |x: &[f64], k: usize| {
        if k == 0 {
            0.1 * (TAU / L) * (TAU * x[0] / L).cos()
        } else {
            0.0
        }
    };
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut err: f64 = 0.0;
    for node in 0..grid.len() {
        let x = grid.position(node);
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let exact = delta(k, i) * du(&x, j) + delta(k, j) * du(&x, i)
                        - delta(i, j) * du(&x, k);
                    err = err.max((gamma.get(node, k, i, j) - exact).abs());
                }
            }
        }
    }
    err
}

/// R = −2 e^{−2u} Δ₀u for g = e^{2u}δ in two dimensions.
fn conformal_scalar_error(n: usize, order: StencilOrder) -> f64 {
    let grid = GridSpec::cube(2, n, L).unwrap();
    let u = ScalarField::from_fn(&grid, |x| 0.1 * (TAU * x[0] / L).sin() + 0.05 * (TAU * x[1] / L).cos());
    let g = conformal_metric(&u);
    let r = scalar_curvature(&g, order).unwrap();
    let k = TAU / L;
    let exact = ScalarField::from_fn(&grid, |x| {
        let uu = 0.1 * (k * x[0]).sin() + 0.05 * (k * x[1]).cos();
        let lap = -k * k * (0.1 * (k * x[0]).sin() + 0.05 * (k * x[1]).cos());
        -2.0 * (-2.0 * uu).exp() * lap
    });
    r.max_abs_diff(&exact).unwrap()
}

#[test]
fn flat_metric_has_no_curvature() {
    let grid = GridSpec::new(vec![8, 10, 12], vec![1.0, 2.0, 3.0]).unwrap();
    let g = SymTensorField::identity(&grid);
    let b = curvature(&g, StencilOrder::Second).unwrap();
    assert_eq!(b.christoffel.values().iter().fold(0.0f64, |m, v| m.max(v.abs())), 0.0);
    assert!(b.ricci.max_abs() < 1e-12);
    assert!(b.scalar.max_abs() < 1e-12);
}

#[test]
fn conformal_christoffel_converges_at_second_order() {
    let e32 = conformal_christoffel_error(32);
    let e64 = conformal_christoffel_error(64);
    let h = L / 64.0;
    assert!(e64 <= 0.1 * h * h, "error {e64}");
    let p = (e32 / e64).log2();
    assert!(p >= 1.8, "order {p}");
}

#[test]
fn christoffel_symmetric_for_random_metric() {
    let grid = GridSpec::cube(3, 8, 1.0).unwrap();
    let g = random_spd(&grid, 0.6, 5);
    let gamma = christoffel(&g, StencilOrder::Second).unwrap();
    assert_eq!(gamma.max_asymmetry(), 0.0);
}

#[test]
fn conformal_scalar_curvature_sign_and_order() {
    let e = [16, 32, 64].map(|n| conformal_scalar_error(n, StencilOrder::Second));
    for w in e.windows(2) {
        let p = (w[0] / w[1]).log2();
        assert!(p >= 1.8, "order {p} from {e:?}");
    }
    let e4 = [16, 32, 64].map(|n| conformal_scalar_error(n, StencilOrder::Fourth));
    let p4 = (e4[1] / e4[2]).log2();
    assert!(p4 >= 3.8, "fourth-order {p4} from {e4:?}");
}

#[test]
fn scalar_curvature_scales_inversely_with_metric() {
    let grid = GridSpec::cube(2, 32, L).unwrap();
    let g = random_spd(&grid, 0.4, 1);
    let r = scalar_curvature(&g, StencilOrder::Second).unwrap();
    let c = 3.5;
    let rc = scalar_curvature(&g.scaled(c), StencilOrder::Second).unwrap();
    let expected = r.map(|v| v / c);
    assert!(rc.max_abs_diff(&expected).unwrap() < 1e-12 * r.max_abs().max(1.0));
}

#[test]
fn block_metric_has_block_ricci() {
    // conformal T² ⊕ conformal T², u depending only on the first block
    let grid = GridSpec::cube(4, 12, L).unwrap();
    let g = SymTensorField::from_fn(&grid, |x, s| {
        let e = (0.2 * (x[0]).sin() + 0.1 * (x[1]).cos()).exp();
        let w = (0.15 * (x[2] + x[3]).sin()).exp();
        let d = 4;
        let idx = |i, j| dilaton_core::grid::sym_index(d, i, j);
        s[idx(0, 0)] = e;
        s[idx(1, 1)] = e;
        s[idx(2, 2)] = w;
        s[idx(3, 3)] = w;
    });
    let r = ricci(&g, StencilOrder::Second).unwrap();
    let mut mixed: f64 = 0.0;
    for n in 0..grid.len() {
        for i in 0..2 {
            for a in 2..4 {
                mixed = mixed.max(r.get(n, i, a).abs());
            }
        }
    }
    assert!(mixed < 1e-12, "mixed {mixed}");
    assert!(r.max_abs() > 1e-2);
}

#[test]
fn pointwise_curvature_is_bit_identical_to_field() {
    let grid = GridSpec::new(vec![8, 9, 10], vec![1.0, 1.5, 2.0]).unwrap();
    let g = random_spd(&grid, 0.5, 21);
    for order in [StencilOrder::Second, StencilOrder::Fourth] {
        let b = curvature(&g, order).unwrap();
        for node in [0, 17, 311, grid.len() - 1] {
            let p = curvature_at(&g, node, order).unwrap();
            assert_eq!(p.christoffel.as_slice(), b.christoffel.node(node));
            assert_eq!(p.ricci.as_slice(), b.ricci.node(node));
            assert_eq!(p.scalar.to_bits(), b.scalar.at(node).to_bits());
        }
    }
}

#[test]
fn ricci_asymmetry_is_truncation_sized() {
    let grid = GridSpec::cube(2, 32, L).unwrap();
    let g = random_spd(&grid, 0.5, 8);
    let b = curvature(&g, StencilOrder::Second).unwrap();
    assert!(b.max_asymmetry > 0.0);
    assert!(!b.asymmetry_flagged(), "{} vs {}", b.max_asymmetry, b.asymmetry_threshold());
}

#[test]
fn hessian_of_constant_vanishes() {
    let grid = GridSpec::cube(2, 16, L).unwrap();
    let g = random_spd(&grid, 0.5, 2);
    let gamma = christoffel(&g, StencilOrder::Second).unwrap();
    let c = ScalarField::constant(&grid, 2.0);
    assert_eq!(hessian(&c, &gamma, StencilOrder::Second).unwrap().max_abs(), 0.0);
    assert_eq!(laplace_beltrami(&c, &g, StencilOrder::Second).unwrap().max_abs(), 0.0);
    assert_eq!(grad_norm_sq(&c, &g, StencilOrder::Second).unwrap().max_abs(), 0.0);
}

#[test]
fn flat_hessian_is_plain_second_difference() {
    let grid = GridSpec::cube(2, 16, L).unwrap();
    let g = SymTensorField::identity(&grid);
    let gamma = christoffel(&g, StencilOrder::Second).unwrap();
    let f = random_smooth_scalar(&grid, 0.5, 2, 4);
    let h = hessian(&f, &gamma, StencilOrder::Second).unwrap();
    for (i, j) in [(0, 0), (0, 1), (1, 1)] {
        let dd = second_derivative(&f, i, j, StencilOrder::Second).unwrap();
        assert!(h.component(i, j).max_abs_diff(&dd).unwrap() < 1e-14);
    }
}

#[test]
fn hessian_trace_matches_divergence_form() {
    let mut errs = Vec::new();
    for n in [16, 32, 64] {
        let grid = GridSpec::cube(2, n, L).unwrap();
        let g = random_spd(&grid, 0.5, 12);
        let f = random_smooth_scalar(&grid, 0.5, 2, 13);
        let a = hessian_trace(&f, &g, StencilOrder::Second).unwrap();
        let b = laplace_beltrami(&f, &g, StencilOrder::Second).unwrap();
        errs.push(a.max_abs_diff(&b).unwrap());
    }
    let p = (errs[1] / errs[2]).log2();
    assert!(p >= 1.8, "{errs:?}");
}

#[test]
fn flat_laplacian_eigenfunction() {
    let mut errs = Vec::new();
    for n in [32, 64] {
        let grid = GridSpec::cube(1, n, L).unwrap();
        let g = SymTensorField::identity(&grid);
        let k = TAU / L;
        let f = ScalarField::from_fn(&grid, |x| (k * x[0]).sin());
        let lap = laplace_beltrami(&f, &g, StencilOrder::Second).unwrap();
        errs.push(lap.max_abs_diff(&f.map(|v| -k * k * v)).unwrap());
    }
    let h = L / 64.0;
    assert!(errs[1] <= 0.4 * h * h, "{errs:?}");
    assert!((errs[0] / errs[1]).log2() >= 1.8);
}

#[test]
fn summation_by_parts_is_exact() {
    let grid = GridSpec::cube(2, 16, L).unwrap();
    let g = random_spd(&grid, 0.6, 30);
    let u = random_smooth_scalar(&grid, 1.0, 3, 31);
    let v = random_smooth_scalar(&grid, 1.0, 3, 32);
    let vol = volume_density(&g).unwrap();
    for order in [StencilOrder::Second, StencilOrder::Fourth] {
        let lap = laplace_beltrami(&u, &g, order).unwrap();
        let lhs = integrate(&lap.zip_with(&v, |a, b| a * b).unwrap(), &vol).unwrap();
        let du: Vec<_> = (0..2).map(|a| partial_derivative(&u, a, order).unwrap()).collect();
        let dv: Vec<_> = (0..2).map(|a| partial_derivative(&v, a, order).unwrap()).collect();
        let ginv = dilaton_core::geometry::inverse_metric(&g).unwrap();
        let pairing = ScalarField::new(
            grid.clone(),
            (0..grid.len())
                .map(|n| {
                    let mut s = 0.0;
                    for (i, dui) in du.iter().enumerate() {
                        for (j, dvj) in dv.iter().enumerate() {
                            s += ginv.get(n, i, j) * dui.at(n) * dvj.at(n);
                        }
                    }
                    s
                })
                .collect(),
        )
        .unwrap();
        let rhs = -integrate(&pairing, &vol).unwrap();
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
    }
}

#[test]
fn weighted_integration_by_parts_converges() {
    // ∫ Δf e^{-f} dμ = ∫ |∇f|² e^{-f} dμ holds up to the discrete chain rule defect
    let mut defects = Vec::new();
    for n in [16, 32, 64] {
        let grid = GridSpec::cube(2, n, L).unwrap();
        let g = random_spd(&grid, 0.4, 40);
        let f = random_smooth_scalar(&grid, 0.6, 2, 41);
        let vol = volume_density(&g).unwrap();
        let w = f.map(|v| (-v).exp());
        let lap = laplace_beltrami(&f, &g, StencilOrder::Second).unwrap();
        let grad = grad_norm_sq(&f, &g, StencilOrder::Second).unwrap();
        let a = integrate(&lap.zip_with(&w, |x, y| x * y).unwrap(), &vol).unwrap();
        let b = integrate(&grad.zip_with(&w, |x, y| x * y).unwrap(), &vol).unwrap();
        defects.push((a - b).abs());
    }
    assert!((defects[1] / defects[2]).log2() >= 1.8, "{defects:?}");
}

#[test]
fn conformal_volume_density_is_exponential() {
    let grid = GridSpec::cube(3, 8, L).unwrap();
    let u = random_smooth_scalar(&grid, 0.5, 2, 3);
    let g = conformal_metric(&u);
    let vol = volume_density(&g).unwrap();
    let expected = u.map(|v| (3.0 * v).exp());
    assert!(vol.max_abs_diff(&expected).unwrap() < 1e-13);
    let flat = volume_density(&SymTensorField::identity(&grid)).unwrap();
    assert!(flat.values().iter().all(|&v| v == 1.0));
}

#[test]
fn grad_norm_scales_inversely_with_metric() {
    let grid = GridSpec::cube(2, 16, L).unwrap();
    let g = random_spd(&grid, 0.5, 50);
    let f = random_smooth_scalar(&grid, 1.0, 2, 51);
    let a = grad_norm_sq(&f, &g, StencilOrder::Second).unwrap();
    let b = grad_norm_sq(&f, &g.scaled(4.0), StencilOrder::Second).unwrap();
    assert!(b.max_abs_diff(&a.map(|v| v / 4.0)).unwrap() < 1e-14);
}
