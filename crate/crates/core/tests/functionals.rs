//! Functionals against scalar quadrature oracles and the product identity.

use dilaton_core::convergence::observed_orders;
use dilaton_core::functionals::*;
use dilaton_core::geometry::{contract, df_outer_df, volume_density};
use dilaton_core::grid::integrate;
use dilaton_core::recipes::{conformal_bump, conformal_metric, random_smooth_scalar, random_spd, random_sym_tensor, sine_scalar};
use dilaton_core::warped::*;
use dilaton_core::{Error, GridSpec, ScalarField, StencilOrder, SymTensorField};
use proptest::prelude::*;
use std::f64::consts::TAU;

/// Composite Simpson rule on [0, 2π] with many panels.
fn simpson<F: Fn(f64) -> f64>(f: F) -> f64 {
    let n = 20_000;
    let h = TAU / n as f64;
    let mut s = f(0.0) + f(TAU);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    s * h / 3.0
}

fn circle(n: usize) -> GridSpec {
    GridSpec::cube(1, n, TAU).unwrap()
}

/// The second-order difference of `sin` is `sin(h)/h` times its derivative.
fn sigma(n: usize) -> f64 {
    let h = TAU / n as f64;
    h.sin() / h
}

#[test]
fn perelman_f_on_flat_circle_matches_quadrature() {
    let n = 128;
    let grid = circle(n);
    let g = SymTensorField::identity(&grid);
    let f = ScalarField::from_fn(&grid, |x| 0.3 * x[0].sin());
    let oracle = simpson(|x| 0.09 * x.cos().powi(2) * (-0.3 * x.sin()).exp());
    let got = perelman_f(&g, &f, StencilOrder::Second).unwrap();
    // discrete gradient of a single mode is σ times the exact one
    assert!((got - sigma(n).powi(2) * oracle).abs() <= 1e-12 * oracle);
    assert!((got - oracle).abs() <= 1e-3 * oracle);
    let got4 = perelman_f(&g, &f, StencilOrder::Fourth).unwrap();
    assert!((got4 - oracle).abs() <= 1e-6 * oracle);
}

#[test]
fn f_lambda_reduces_and_scales() {
    let n = 128;
    let grid = circle(n);
    let g = SymTensorField::identity(&grid);
    let f = ScalarField::from_fn(&grid, |x| 0.3 * x[0].sin());
    let o = StencilOrder::Second;
    assert_eq!(f_lambda(&g, &f, 0.0, o).unwrap(), perelman_f(&g, &f, o).unwrap());
    assert!(f_lambda(&g, &f, -1.0, o).unwrap().abs() <= 1e-15);
    let oracle = simpson(|x| 0.09 * x.cos().powi(2) * (-0.3 * x.sin()).exp());
    let got = f_lambda(&g, &f, 2.0, o).unwrap();
    assert!((got - 3.0 * sigma(n).powi(2) * oracle).abs() <= 1e-12 * oracle);
}

#[test]
fn f_lambda_is_affine_in_lambda() {
    let grid = GridSpec::cube(2, 16, TAU).unwrap();
    let g = random_spd(&grid, 0.4, 1);
    let f = random_smooth_scalar(&grid, 0.4, 2, 2);
    let o = StencilOrder::Second;
    let vals: Vec<f64> = [-1.0, 0.0, 0.7].iter().map(|&l| f_lambda(&g, &f, l, o).unwrap()).collect();
    let slope = (vals[1] - vals[0]) / 1.0;
    assert!((vals[2] - (vals[1] + 0.7 * slope)).abs() <= 1e-12 * vals[1].abs().max(1.0));
}

#[test]
fn flat_zero_data_has_zero_functionals() {
    let grid = GridSpec::cube(2, 8, TAU).unwrap();
    let g = SymTensorField::identity(&grid);
    let f = ScalarField::zeros(&grid);
    assert!(perelman_f(&g, &f, StencilOrder::Second).unwrap().abs() <= 1e-12);
    assert_eq!(dissipation_integral(&g, &f, 0.0, StencilOrder::Second).unwrap(), 0.0);
    let c = solve_perelman_constants(2, 1, Branch::Plus).unwrap();
    let pg = ProductGeometry::new(g, SymTensorField::identity(&circle(8)), f, c).unwrap();
    assert_eq!(einstein_hilbert_s(&pg, StencilOrder::Second, ScalarSource::ClosedForm).unwrap(), 0.0);
}

#[test]
fn perelman_f_is_translation_invariant() {
    let grid = GridSpec::cube(2, 16, TAU).unwrap();
    let g = random_spd(&grid, 0.4, 5);
    let f = random_smooth_scalar(&grid, 0.4, 2, 6);
    let roll = |node: usize| grid.shift(grid.shift(node, 0, 3), 1, -5);
    let mut gs = g.clone();
    let mut fs = f.clone();
    for n in 0..grid.len() {
        gs.values_mut()[n * 3..n * 3 + 3].copy_from_slice(g.node(roll(n)));
        fs.values_mut()[n] = f.at(roll(n));
    }
    let a = perelman_f(&g, &f, StencilOrder::Second).unwrap();
    let b = perelman_f(&gs, &fs, StencilOrder::Second).unwrap();
    assert!((a - b).abs() <= 1e-13 * a.abs().max(1.0));
}

#[test]
fn dissipation_on_flat_circle_matches_quadrature() {
    let n = 128;
    let grid = circle(n);
    let g = SymTensorField::identity(&grid);
    let f = ScalarField::from_fn(&grid, |x| 0.2 * x[0].sin());
    let oracle = 2.0 * simpson(|x| 0.04 * x.sin().powi(2) * (-0.2 * x.sin()).exp());
    let got = dissipation_integral(&g, &f, 0.0, StencilOrder::Second).unwrap();
    assert!((got - sigma(n).powi(4) * oracle).abs() <= 1e-12 * oracle);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn dissipation_is_nonnegative(seed in 0u64..1000, lambda in -2.0f64..1.0) {
        let grid = GridSpec::cube(2, 8, TAU).unwrap();
        let g = random_spd(&grid, 0.5, seed);
        let f = random_smooth_scalar(&grid, 0.5, 2, seed + 1);
        prop_assert!(dissipation_integral(&g, &f, lambda, StencilOrder::Second).unwrap() >= 0.0);
    }
}

#[test]
fn unit_volume_rescales_volume_and_curvature() {
    let grid = GridSpec::cube(3, 16, TAU).unwrap();
    let h = conformal_bump(&grid, 0.1, 1);
    let (h1, c) = unit_volume(&h).unwrap();
    let one = ScalarField::constant(&grid, 1.0);
    assert!((integrate(&one, &volume_density(&h1).unwrap()).unwrap() - 1.0).abs() <= 1e-13);
    let r = dilaton_core::geometry::scalar_curvature(&h, StencilOrder::Second).unwrap();
    let r1 = dilaton_core::geometry::scalar_curvature(&h1, StencilOrder::Second).unwrap();
    for n in 0..grid.len() {
        assert!((r1.at(n) - r.at(n) / c).abs() <= 1e-10 * (1.0 + r.at(n).abs() / c));
    }
}

#[test]
fn total_scalar_curvature_of_conformal_torus_converges() {
    // R = −e^{−2v}(4Δ₀v + 2|∇₀v|²) for e^{2v}δ in three dimensions
    let v_of = |x: &[f64]| 0.1 * (x[0].sin() + (x[1] + 1.0).sin() + (x[2] + 2.0).sin());
    let mut errors = Vec::new();
    for n in [16, 32] {
        let grid = GridSpec::cube(3, n, TAU).unwrap();
        let v = ScalarField::from_fn(&grid, v_of);
        let h = conformal_metric(&v);
        let r = dilaton_core::geometry::scalar_curvature(&h, StencilOrder::Second).unwrap();
        let exact = ScalarField::from_fn(&grid, |x| {
            let lap = -0.1 * (x[0].sin() + (x[1] + 1.0).sin() + (x[2] + 2.0).sin());
            let grad2 = 0.01 * (x[0].cos().powi(2) + (x[1] + 1.0).cos().powi(2) + (x[2] + 2.0).cos().powi(2));
            -(-2.0 * v_of(x)).exp() * (4.0 * lap + 2.0 * grad2)
        });
        let vol = volume_density(&h).unwrap();
        errors.push((integrate(&r, &vol).unwrap() - integrate(&exact, &vol).unwrap()).abs());
    }
    assert!(observed_orders(&errors, 2.0)[0] >= 1.8, "{errors:?}");
}

fn flat_unit_n(n: usize) -> SymTensorField {
    unit_volume(&SymTensorField::identity(&circle(n))).unwrap().0
}

#[test]
fn product_action_equals_perelman_f_for_flat_unit_n() {
    for branch in [Branch::Plus, Branch::Minus] {
        let c = solve_perelman_constants(3, 1, branch).unwrap();
        let mut res = Vec::new();
        for r in [8, 16] {
            let gm = GridSpec::cube(3, r, TAU).unwrap();
            let pg = ProductGeometry::new(random_spd(&gm, 0.3, 5), flat_unit_n(r), random_smooth_scalar(&gm, 0.3, 2, 7), c)
                .unwrap();
            let rep = identity_residual(&pg, StencilOrder::Second).unwrap();
            assert!((rep.vol_n - 1.0).abs() < 1e-14);
            assert_eq!(rep.total_scalar_n, 0.0);
            assert_eq!(rep.correction, 0.0);
            assert!((rep.s_tilde - rep.f).abs() <= 1e-2 * rep.f.abs());
            res.push(rep.residual.abs());
        }
        assert!(res[1] < res[0] / 3.0, "{res:?}");
    }
}

#[test]
fn identity_residual_converges_with_nonflat_fiber() {
    for branch in [Branch::Plus, Branch::Minus] {
        let c = solve_perelman_constants(1, 3, branch).unwrap();
        let mut res = Vec::new();
        for r in [16, 32] {
            let gm = circle(r);
            let gn = GridSpec::cube(3, r, TAU).unwrap();
            let (h, _) = unit_volume(&conformal_bump(&gn, 0.1, 1)).unwrap();
            let pg = ProductGeometry::new(conformal_bump(&gm, 0.2, 1), h, random_smooth_scalar(&gm, 0.3, 3, 7), c)
                .unwrap();
            let rep = identity_residual(&pg, StencilOrder::Second).unwrap();
            assert!(rep.total_scalar_n.abs() > 0.1);
            res.push(rep.residual.abs());
        }
        assert!(observed_orders(&res, 2.0)[0] >= 1.8, "{res:?}");
    }
}

#[test]
fn product_action_realizes_lambda_family() {
    for lambda in [-1.0, 0.0, 1.0] {
        for c in lambda_to_constants(3, 1, lambda).unwrap() {
            let gm = GridSpec::cube(3, 16, TAU).unwrap();
            let pg = ProductGeometry::new(conformal_bump(&gm, 0.1, 1), flat_unit_n(8), random_smooth_scalar(&gm, 0.3, 2, 7), c)
                .unwrap();
            let rep = identity_residual(&pg, StencilOrder::Fourth).unwrap();
            assert_eq!(rep.lambda, c.lambda());
            assert!((rep.s_tilde - rep.f_lambda).abs() <= 1e-5 * rep.f_lambda.abs(), "{rep:?}");
        }
    }
}

#[test]
fn identity_requires_normalisation_line() {
    let gm = GridSpec::cube(2, 8, TAU).unwrap();
    let c = WarpedConstants::unconstrained(2, 1, 0.7, -0.3).unwrap();
    let pg = ProductGeometry::new(SymTensorField::identity(&gm), flat_unit_n(8), ScalarField::zeros(&gm), c).unwrap();
    assert!(matches!(identity_residual(&pg, StencilOrder::Second), Err(Error::Constants(_))));
}

#[test]
fn closed_form_and_oracle_actions_converge_together() {
    let c = solve_perelman_constants(2, 1, Branch::Plus).unwrap();
    let mut diffs = Vec::new();
    for r in [8, 16, 32] {
        let gm = GridSpec::cube(2, r, TAU).unwrap();
        let gn = circle(r);
        let pg = ProductGeometry::new(conformal_bump(&gm, 0.1, 1), conformal_bump(&gn, 0.1, 1), sine_scalar(&gm, 0.2, 1), c)
            .unwrap();
        let a = einstein_hilbert_s(&pg, StencilOrder::Second, ScalarSource::ClosedForm).unwrap();
        let b = einstein_hilbert_s(&pg, StencilOrder::Second, ScalarSource::Oracle).unwrap();
        diffs.push((a - b).abs());
    }
    assert!(*observed_orders(&diffs, 2.0).last().unwrap() >= 1.8, "{diffs:?}");
}

fn variation_geometry(lambda: f64, r: usize) -> ProductGeometry {
    let c = lambda_to_constants(2, 1, lambda).unwrap()[0];
    let gm = GridSpec::cube(2, r, TAU).unwrap();
    ProductGeometry::new(conformal_bump(&gm, 0.1, 1), flat_unit_n(8), random_smooth_scalar(&gm, 0.2, 2, 3), c).unwrap()
}

#[test]
fn zero_direction_has_zero_variation() {
    let pg = variation_geometry(0.0, 16);
    let dg = SymTensorField::zeros(pg.grid_m());
    let v = first_variation_check(&pg, &dg, 0.0, StencilOrder::Second).unwrap();
    assert_eq!(v.numeric, 0.0);
    assert_eq!(v.closed_form, 0.0);
}

#[test]
fn conformal_direction_variation_on_flat_metric() {
    let c = solve_perelman_constants(2, 1, Branch::Plus).unwrap();
    let gm = GridSpec::cube(2, 64, TAU).unwrap();
    let g = SymTensorField::identity(&gm);
    let pg = ProductGeometry::new(g.clone(), flat_unit_n(8), sine_scalar(&gm, 0.2, 1), c).unwrap();
    let v = first_variation_check(&pg, &g, 0.0, StencilOrder::Second).unwrap();
    let h = gm.max_spacing();
    assert!(
        (v.numeric - v.closed_form).abs() <= 1e-6f64.max(h * h * v.closed_form.abs()),
        "{v:?}"
    );
}

#[test]
fn variation_matches_for_random_directions() {
    let pg = variation_geometry(0.0, 64);
    for seed in 0..4 {
        let dg = random_sym_tensor(pg.grid_m(), 1.0, 2, 1000 + seed);
        let v = first_variation_check(&pg, &dg, 0.0, StencilOrder::Fourth).unwrap();
        assert_eq!(v.trace_term, 0.0);
        assert!(v.relative_mismatch() <= 1e-3, "{v:?}");
        // Richardson step check: the two central differences agree closely
        assert!((v.central[0] - v.central[1]).abs() <= 1e-4 * v.numeric.abs().max(1e-3));
    }
}

#[test]
fn closed_form_is_affine_in_lambda() {
    let a = variation_geometry(0.0, 16);
    let b = variation_geometry(0.5, 16);
    let dg = random_sym_tensor(a.grid_m(), 1.0, 2, 42);
    let o = StencilOrder::Second;
    let va = first_variation_check(&a, &dg, 0.0, o).unwrap();
    let vb = first_variation_check(&b, &dg, 0.5, o).unwrap();
    let (g, f) = (a.g(), a.f());
    let pair = contract(&df_outer_df(f, o).unwrap(), &dg, g).unwrap().zip_with(f, |q, fv| q * (-fv).exp()).unwrap();
    let expected = -2.0 * 0.5 * integrate_density(g, &pair).unwrap();
    assert!((vb.closed_form - va.closed_form - expected).abs() <= 1e-12 * va.closed_form.abs().max(1.0));
}

#[test]
fn nonzero_lambda_needs_trace_term() {
    let pg = variation_geometry(0.5, 64);
    let dg = random_sym_tensor(pg.grid_m(), 1.0, 2, 1000);
    let v = first_variation_check(&pg, &dg, 0.5, StencilOrder::Fourth).unwrap();
    assert!(v.relative_mismatch() > 0.1, "{v:?}");
    assert!(v.corrected_mismatch() <= 1e-3, "{v:?}");
}

#[test]
fn variation_rejects_mismatched_input() {
    let pg = variation_geometry(0.0, 16);
    let dg = SymTensorField::zeros(pg.grid_m());
    assert!(matches!(
        first_variation_check(&pg, &dg, 0.5, StencilOrder::Second),
        Err(Error::Constants(_))
    ));
    let c = solve_perelman_constants(2, 3, Branch::Plus).unwrap();
    let gn = GridSpec::cube(3, 8, TAU).unwrap();
    let curved = ProductGeometry::new(pg.g().clone(), conformal_bump(&gn, 0.3, 1), pg.f().clone(), c).unwrap();
    assert!(matches!(
        first_variation_check(&curved, &dg, 0.0, StencilOrder::Second),
        Err(Error::InvalidArgument(_))
    ));
}
