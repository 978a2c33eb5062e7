//! Constants algebra and closed-form curvature of the warped product.

use dilaton_core::geometry::{curvature, volume_density, MetricSource};
use dilaton_core::recipes::{conformal_bump, random_smooth_scalar, random_spd, sine_scalar};
use dilaton_core::warped::*;
use dilaton_core::{Error, GridSpec, ScalarField, StencilOrder, SymTensorField};
use proptest::prelude::*;
use std::f64::consts::TAU;

const DIMS: [(usize, usize); 5] = [(2, 1), (2, 3), (3, 1), (3, 2), (4, 1)];

fn geometry(
    m: usize,
    n: usize,
    r: usize,
    constants: WarpedConstants,
    conformal_h: bool,
) -> dilaton_core::Result<ProductGeometry> {
    let gm = GridSpec::cube(m, r, TAU)?;
    let gn = GridSpec::cube(n, r, TAU)?;
    let h = if conformal_h {
        conformal_bump(&gn, 0.1, 1)
    } else {
        SymTensorField::identity(&gn)
    };
    ProductGeometry::new(conformal_bump(&gm, 0.1, 1), h, sine_scalar(&gm, 0.2, 1), constants)
}

#[test]
fn both_branches_satisfy_constraints() {
    for (m, n) in DIMS {
        for branch in [Branch::Plus, Branch::Minus] {
            let c = solve_perelman_constants(m, n, branch).unwrap();
            assert!(c.c1_residual().abs() <= 1e-12, "{m},{n}");
            assert!(c.c2_residual().abs() <= 1e-12, "{m},{n}");
            assert!(c.lambda().abs() <= 1e-12);
            assert!(c.a() != 0.0 && c.b() != 0.0);
            assert_eq!(c.level(), ConstraintLevel::Perelman);
        }
        for theta in solve_theta(m, n).unwrap() {
            let (mf, nf) = (m as f64, n as f64);
            assert!(((mf - 2.0) * theta * theta + 2.0 * nf * theta - nf).abs() <= 1e-12);
        }
    }
}

#[test]
fn theta_roots_have_opposite_signs_above_two() {
    for m in 3..8 {
        for n in 1..5 {
            let r = solve_theta(m, n).unwrap();
            assert!(r[0] > 0.0 && r[1] < 0.0, "{m},{n}: {r:?}");
        }
    }
    // m = 1: the product of the roots is n > 0, so the signs agree
    for n in 2..6 {
        let r = solve_theta(1, n).unwrap();
        assert!(r[0] > 0.0 && r[1] > 0.0, "1,{n}: {r:?}");
    }
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    while hi - lo > 1e-9 {
        let a = hi - phi * (hi - lo);
        let b = lo + phi * (hi - lo);
        if f(a) < f(b) {
            lo = a;
        } else {
            hi = b;
        }
    }
    f(0.5 * (lo + hi))
}

#[test]
fn lambda_max_matches_search_along_constraint_line() {
    for m in [3, 4, 5] {
        for n in [1, 2, 3] {
            let (mf, nf) = (m as f64, n as f64);
            let z = |a: f64| z_value(m, n, a, (2.0 - a * (mf - 2.0)) / nf);
            // coarse grid search to bracket, then golden section
            let grid: Vec<f64> = (0..=4000).map(|i| -20.0 + i as f64 * 0.01).collect();
            let best = grid.iter().copied().max_by(|p, q| z(*p).total_cmp(&z(*q))).unwrap();
            let zmax = golden_max(z, best - 0.02, best + 0.02);
            assert!((zmax - lambda_max(m).unwrap()).abs() <= 1e-10, "{m},{n}: {zmax}");
            let (a_star, z_star) = max_z_on_line(m, n).unwrap();
            assert!((z_star - zmax).abs() <= 1e-10);
            assert!((z_star - z(a_star)).abs() <= 1e-15);
        }
    }
    assert_eq!(lambda_max(2), None);
    assert_eq!(max_z_on_line(2, 3), None);
    assert_eq!(max_z_on_line(1, 2), None);
}

#[test]
fn lambda_family_is_two_valued_below_maximum() {
    for (m, n) in [(3, 1), (3, 2), (4, 1)] {
        let lmax = lambda_max(m).unwrap();
        for lambda in [-2.0, 0.0, 0.5 * lmax] {
            let cs = lambda_to_constants(m, n, lambda).unwrap();
            assert_eq!(cs.len(), 2);
            assert!(cs[0].a() > cs[1].a());
        }
        assert_eq!(lambda_to_constants(m, n, lmax).unwrap().len(), 1);
        assert!(matches!(
            lambda_to_constants(m, n, lmax + 0.01),
            Err(Error::LambdaOutOfRange { .. })
        ));
    }
    for lambda in [-3.0, 0.0, 10.0] {
        assert_eq!(lambda_to_constants(2, 3, lambda).unwrap().len(), 1);
    }
}

proptest! {
    #[test]
    fn lambda_round_trip(m in 2usize..6, n in 1usize..5, t in 0.0f64..1.0) {
        let lambda = match lambda_max(m) {
            Some(l) => l - 10.0 * t,
            None => 20.0 * t - 10.0,
        };
        for c in lambda_to_constants(m, n, lambda).unwrap() {
            prop_assert!(c.c2_residual().abs() <= 1e-12);
            prop_assert!((c.lambda() - lambda).abs() <= 1e-12 * lambda.abs().max(1.0));
        }
    }

    #[test]
    fn z_value_is_quadratic_form(m in 1usize..6, n in 1usize..5, a in -3.0f64..3.0, b in -3.0f64..3.0, s in -2.0f64..2.0) {
        let z = z_value(m, n, s * a, s * b);
        prop_assert!((z - s * s * z_value(m, n, a, b)).abs() <= 1e-12 * (1.0 + z.abs()));
    }
}

#[test]
fn zero_dilaton_gives_plain_product() {
    let gm = GridSpec::cube(2, 8, TAU).unwrap();
    let gn = GridSpec::cube(1, 8, TAU).unwrap();
    let g = random_spd(&gm, 0.4, 1);
    let h = random_spd(&gn, 0.4, 2);
    let c = solve_perelman_constants(2, 1, Branch::Plus).unwrap();
    let pg = ProductGeometry::new(g.clone(), h.clone(), ScalarField::zeros(&gm), c).unwrap();
    let gt = assemble_product_metric(&pg).unwrap();
    for p in 0..pg.grid().len() {
        let (x, y) = pg.split(p);
        assert_eq!(gt.get(p, 0, 0), g.get(x, 0, 0));
        assert_eq!(gt.get(p, 0, 1), g.get(x, 0, 1));
        assert_eq!(gt.get(p, 1, 1), g.get(x, 1, 1));
        assert_eq!(gt.get(p, 2, 2), h.get(y, 0, 0));
        assert_eq!(gt.get(p, 0, 2), 0.0);
        assert_eq!(gt.get(p, 1, 2), 0.0);
    }
}

#[test]
fn product_volume_density_factorizes() {
    let gm = GridSpec::cube(2, 8, TAU).unwrap();
    let gn = GridSpec::cube(2, 8, TAU).unwrap();
    for branch in [Branch::Plus, Branch::Minus] {
        let c = solve_perelman_constants(2, 2, branch).unwrap();
        let pg = ProductGeometry::new(
            random_spd(&gm, 0.5, 3),
            random_spd(&gn, 0.5, 4),
            random_smooth_scalar(&gm, 0.5, 2, 5),
            c,
        )
        .unwrap();
        let vg = volume_density(pg.g()).unwrap();
        let vh = volume_density(pg.h()).unwrap();
        let vt = volume_density(&assemble_product_metric(&pg).unwrap()).unwrap();
        for p in 0..pg.grid().len() {
            let closed = pg.volume_density_closed_at(&vg, &vh, p);
            assert!((vt.at(p) - closed).abs() <= 1e-13 * closed, "{p}");
        }
    }
}

#[test]
fn random_product_stays_positive_definite() {
    let gm = GridSpec::cube(2, 8, TAU).unwrap();
    let gn = GridSpec::cube(1, 8, TAU).unwrap();
    let c = WarpedConstants::unconstrained(2, 1, 0.7, -0.3).unwrap();
    for seed in 0..5 {
        let pg = ProductGeometry::new(
            random_spd(&gm, 0.8, seed),
            random_spd(&gn, 0.8, seed + 100),
            random_smooth_scalar(&gm, 2.0, 2, seed + 200),
            c,
        )
        .unwrap();
        pg.metric().validate().unwrap();
        dilaton_core::geometry::validate_metric(&assemble_product_metric(&pg).unwrap()).unwrap();
    }
}

#[test]
fn constant_dilaton_leaves_block_connections() {
    let gm = GridSpec::cube(2, 16, TAU).unwrap();
    let gn = GridSpec::cube(1, 8, TAU).unwrap();
    let c = solve_perelman_constants(2, 1, Branch::Plus).unwrap();
    let g = conformal_bump(&gm, 0.2, 1);
    let pg = ProductGeometry::new(g.clone(), conformal_bump(&gn, 0.2, 1), ScalarField::constant(&gm, 0.7), c)
        .unwrap();
    let gamma = christoffel_closed_form(&pg, StencilOrder::Second).unwrap();
    let gm_gamma = dilaton_core::geometry::christoffel(&g, StencilOrder::Second).unwrap();
    for p in 0..pg.grid().len() {
        let (x, _) = pg.split(p);
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let v = gamma.get(p, k, i, j);
                    if k < 2 && i < 2 && j < 2 {
                        assert_eq!(v, gm_gamma.get(x, k, i, j));
                    } else if !(k == 2 && i == 2 && j == 2) {
                        assert_eq!(v, 0.0);
                    }
                }
            }
        }
    }
}

#[test]
fn zero_dilaton_ricci_is_blockwise() {
    let gm = GridSpec::cube(2, 16, TAU).unwrap();
    let gn = GridSpec::cube(2, 16, TAU).unwrap();
    let c = WarpedConstants::unconstrained(2, 2, 0.7, -0.3).unwrap();
    let (g, h) = (conformal_bump(&gm, 0.2, 1), conformal_bump(&gn, 0.1, 1));
    let pg = ProductGeometry::new(g.clone(), h.clone(), ScalarField::zeros(&gm), c).unwrap();
    let b = ricci_closed_general(&pg, StencilOrder::Second).unwrap();
    let (rm, rn) = (curvature(&g, StencilOrder::Second).unwrap(), curvature(&h, StencilOrder::Second).unwrap());
    for p in 0..pg.grid().len() {
        let (x, y) = pg.split(p);
        for (i, j) in [(0, 0), (0, 1), (1, 1)] {
            assert_eq!(b.ricci.get(p, i, j), rm.ricci.get(x, i, j));
            assert_eq!(b.ricci.get(p, 2 + i, 2 + j), rn.ricci.get(y, i, j));
        }
        assert_eq!(b.ricci.get(p, 0, 3), 0.0);
        assert!((b.scalar.at(p) - rm.scalar.at(x) - rn.scalar.at(y)).abs() < 1e-13);
    }
}

#[test]
fn flat_data_has_zero_curvature() {
    let gm = GridSpec::cube(2, 8, TAU).unwrap();
    let gn = GridSpec::cube(1, 8, TAU).unwrap();
    let c = solve_perelman_constants(2, 1, Branch::Plus).unwrap();
    let pg = ProductGeometry::new(
        SymTensorField::identity(&gm),
        SymTensorField::identity(&gn),
        ScalarField::zeros(&gm),
        c,
    )
    .unwrap();
    let b = ricci_closed_ansatz(&pg, StencilOrder::Second).unwrap();
    assert_eq!(b.ricci.max_abs(), 0.0);
    assert_eq!(b.scalar.max_abs(), 0.0);
    assert_eq!(b.christoffel.values().iter().fold(0.0f64, |a, v| a.max(v.abs())), 0.0);
}

#[test]
fn simplified_formulas_refuse_unconstrained_constants() {
    let gm = GridSpec::cube(2, 8, TAU).unwrap();
    let gn = GridSpec::cube(1, 8, TAU).unwrap();
    for c in [
        WarpedConstants::unconstrained(2, 1, 0.7, -0.3).unwrap(),
        lambda_to_constants(2, 1, 0.5).unwrap()[0],
    ] {
        let pg = ProductGeometry::new(
            SymTensorField::identity(&gm),
            SymTensorField::identity(&gn),
            ScalarField::zeros(&gm),
            c,
        )
        .unwrap();
        assert!(matches!(ricci_closed_ansatz(&pg, StencilOrder::Second), Err(Error::Constants(_))));
        assert!(ricci_closed_general(&pg, StencilOrder::Second).is_ok());
    }
}

#[test]
fn general_formulas_reduce_to_simplified_ones() {
    for (m, n) in [(2, 1), (3, 1)] {
        for branch in [Branch::Plus, Branch::Minus] {
            let c = solve_perelman_constants(m, n, branch).unwrap();
            let pg = geometry(m, n, 8, c, true).unwrap();
            let gen = ricci_closed_general(&pg, StencilOrder::Second).unwrap();
            let ans = ricci_closed_ansatz(&pg, StencilOrder::Second).unwrap();
            let scale = gen.ricci.max_abs().max(gen.scalar.max_abs());
            assert!(gen.ricci.max_abs_diff(&ans.ricci).unwrap() <= 1e-12 * scale);
            assert!(gen.scalar.max_abs_diff(&ans.scalar).unwrap() <= 1e-12 * scale);
        }
    }
}

fn assert_study(study: &CurvatureStudy, min_order: f64) {
    for f in &study.families {
        assert!(
            f.verdict.passes(min_order),
            "{}: errors {:?} verdict {:?}",
            f.family.name(),
            f.errors,
            f.verdict
        );
    }
}

#[test]
fn closed_form_matches_oracle_for_random_data() {
    let c = solve_perelman_constants(2, 1, Branch::Plus).unwrap();
    let study = curvature_study(&[16, 32, 64], StencilOrder::Second, |r| {
        let gm = GridSpec::cube(2, r, TAU)?;
        let gn = GridSpec::cube(1, r, TAU)?;
        ProductGeometry::new(
            random_spd(&gm, 0.3, 11),
            random_spd(&gn, 0.3, 12),
            random_smooth_scalar(&gm, 0.2, 1, 13),
            c,
        )
    })
    .unwrap();
    assert_study(&study, 1.8);
    let mixed = study
        .families
        .iter()
        .find(|f| f.family == Family::ChristoffelMixedZero)
        .unwrap();
    assert!(mixed.errors.iter().all(|&e| e <= EXACT_FLOOR));
}

#[test]
fn off_constraint_pairs_match_oracle() {
    for (a, b) in [(0.7, -0.3), (-1.2, 0.9)] {
        let c = WarpedConstants::unconstrained(2, 1, a, b).unwrap();
        let study = curvature_study(&[16, 32], StencilOrder::Second, |r| geometry(2, 1, r, c, true)).unwrap();
        assert!(study.families.iter().all(|f| !f.family.needs_ansatz()));
        assert_study(&study, 1.8);
    }
}

#[test]
fn flat_four_dimensional_case_matches_oracle() {
    let c = WarpedConstants::new(3, 1, 2.0 - 2f64.sqrt(), 2f64.sqrt()).unwrap();
    assert_eq!(c.level(), ConstraintLevel::Perelman);
    let study = curvature_study(&[16, 32], StencilOrder::Second, |r| {
        let gm = GridSpec::cube(3, r, TAU)?;
        let gn = GridSpec::cube(1, r, TAU)?;
        let f = ScalarField::from_fn(&gm, |x| 0.2 * x[0].sin());
        ProductGeometry::new(SymTensorField::identity(&gm), SymTensorField::identity(&gn), f, c)
    })
    .unwrap();
    assert_study(&study, 1.8);
}

#[test]
fn fourth_order_stencils_converge_faster() {
    let c = solve_perelman_constants(2, 2, Branch::Minus).unwrap();
    let study = curvature_study(&[16, 32], StencilOrder::Fourth, |r| geometry(2, 2, r, c, true)).unwrap();
    assert_study(&study, 3.5);
}

#[test]
fn materialization_is_size_guarded() {
    let c = solve_perelman_constants(3, 1, Branch::Plus).unwrap();
    let pg = geometry(3, 1, 64, c, false).unwrap();
    assert!(matches!(assemble_product_metric(&pg), Err(Error::TooLarge { .. })));
    assert!(matches!(
        christoffel_closed_form(&pg, StencilOrder::Second),
        Err(Error::TooLarge { .. })
    ));
}

#[test]
fn sampling_requires_dividing_stride() {
    let c = solve_perelman_constants(2, 1, Branch::Plus).unwrap();
    let pg = geometry(2, 1, 16, c, false).unwrap();
    assert_eq!(sample_nodes(&pg, 4).unwrap().len(), 64);
    assert!(sample_nodes(&pg, 3).is_err());
    assert!(curvature_study(&[16, 24], StencilOrder::Second, |r| geometry(2, 1, r, c, false)).is_err());
}
