use std::f64::consts::PI;
use std::sync::Arc;

use extlab_core::fit::observed_order;
use extlab_core::grid::{
    annulus_integral, build_grid, circle_flux_integral, gradient, hessian, laplacian, read_snapshot, write_scalar,
    AnnularGrid, GridSpec, PlanarMapping, ScalarField, Snapshot, Spacing, StencilOrder,
};
use proptest::prelude::*;

fn smooth(x: [f64; 2]) -> f64 {
    (0.7 * x[0]).sin() * (0.4 * x[1]).cos() + 0.1 * x[0] * x[1] * x[1]
}

fn smooth_hessian(x: [f64; 2]) -> [f64; 3] {
    let (s, c) = ((0.7 * x[0]).sin(), (0.4 * x[1]).cos());
    let (cs, sn) = ((0.7 * x[0]).cos(), (0.4 * x[1]).sin());
    [-0.49 * s * c, -0.28 * cs * sn + 0.2 * x[1], -0.16 * s * c + 0.2 * x[0]]
}

fn hessian_error(order: StencilOrder, n: usize) -> (f64, f64) {
    let g = AnnularGrid::new(GridSpec {
        r_inner: 1.0,
        r_outer: 3.0,
        n_r: n,
        n_theta: 2 * n,
        spacing: Spacing::UniformRadial,
        order,
    })
    .unwrap();
    let u = ScalarField::from_fn(g.clone(), smooth).unwrap();
    let h = hessian(&u);
    let mut err: f64 = 0.0;
    for k in 0..g.len() {
        let (i, j) = g.ring_angle(k);
        let e = smooth_hessian(g.point(i, j));
        let m = h.values()[k];
        err = err.max((m.m11 - e[0]).abs()).max((m.m12 - e[1]).abs()).max((m.m22 - e[2]).abs());
    }
    (g.mesh_size(), err)
}

#[test]
fn hessian_stencils_converge_at_their_formal_order() {
    let fourth: Vec<_> = [16, 32, 64].iter().map(|&n| hessian_error(StencilOrder::Fourth, n)).collect();
    let second: Vec<_> = [16, 32, 64].iter().map(|&n| hessian_error(StencilOrder::Second, n)).collect();
    assert!(observed_order(&fourth) > 3.5, "{fourth:?}");
    assert!(observed_order(&second) > 1.8, "{second:?}");
}

#[test]
fn radial_stencils_are_exact_on_radial_quadratics() {
    for spacing in [Spacing::LogRadial, Spacing::UniformRadial, Spacing::InverseUniformRadial] {
        let g = build_grid(1.0, 10.0, 64, 64, spacing).unwrap();
        let u = ScalarField::from_polar_fn(g.clone(), |r, _| 1.5 * r * r - 2.0).unwrap();
        let h = hessian(&u);
        let w = gradient(&u);
        for k in 0..g.len() {
            let (i, j) = g.ring_angle(k);
            let x = g.point(i, j);
            let [p, q] = w.at(i, j);
            let m = h.values()[k];
            let e = (p - 3.0 * x[0]).abs().max((q - 3.0 * x[1]).abs());
            let eh = (m.m11 - 3.0).abs().max(m.m12.abs()).max((m.m22 - 3.0).abs());
            assert!(e < 1e-11 * x[0].hypot(x[1]) && eh < 1e-9, "{spacing:?} {e:e} {eh:e}");
        }
    }
}

#[test]
fn annulus_area_converges() {
    let errs: Vec<(f64, f64)> = [33usize, 65, 129]
        .iter()
        .map(|&n| {
            let g = build_grid(1.0, 4.0, n, 64, Spacing::LogRadial).unwrap();
            let one = ScalarField::from_fn(g.clone(), |_| 1.0).unwrap();
            (g.radial_step(), (annulus_integral(&one, 1.0, 4.0).unwrap() - PI * 15.0).abs())
        })
        .collect();
    assert!(errs[2].1 < 1e-8 * PI * 15.0, "{errs:?}");
    assert!(observed_order(&errs) > 3.0, "{errs:?}");
}

#[test]
fn snapshot_round_trip_is_bit_exact() {
    let g = build_grid(1.0, 4.0, 65, 64, Spacing::LogRadial).unwrap();
    let u = ScalarField::from_fn(g.clone(), smooth).unwrap();
    let mut buf = Vec::new();
    write_scalar(&mut buf, &u).unwrap();
    match read_snapshot(&buf[..], StencilOrder::Fourth).unwrap() {
        Snapshot::Scalar(v) => {
            assert_eq!(v.values(), u.values());
            assert_eq!(**v.grid(), *g);
        }
        other => panic!("expected a scalar snapshot, got {other:?}"),
    }
}

fn grid() -> Arc<AnnularGrid> {
    build_grid(1.0, 8.0, 96, 64, Spacing::LogRadial).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn trace_of_hessian_equals_laplacian(c in prop::array::uniform6(-2.0f64..2.0)) {
        let g = grid();
        let u = ScalarField::from_fn(g.clone(), |x| {
            c[0] * x[0] * x[0] * x[1] + c[1] * x[1].powi(3) + c[2] * (x[0] * x[0] + x[1] * x[1]).ln()
                + c[3] * x[0] / (x[0] * x[0] + x[1] * x[1]) + c[4] * x[0] * x[1] + c[5]
        }).unwrap();
        let tr = hessian(&u).trace();
        let lap = laplacian(&u);
        let scale = lap.max_abs().max(1.0);
        for (a, b) in tr.values().iter().zip(lap.values()) {
            prop_assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn flux_of_log_gradient_is_radius_independent(c in -5.0f64..5.0, b in -3.0f64..3.0, i in 0usize..96) {
        let g = grid();
        // ∇(c log|x| + b x₁) has flux 2πc through every circle.
        let w = PlanarMapping::from_fn(g.clone(), |x| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            [c * x[0] / r2 + b, c * x[1] / r2]
        }).unwrap();
        let flux = circle_flux_integral(&w, g.radius(i)).unwrap();
        prop_assert!((flux - 2.0 * PI * c).abs() < 1e-10 * (1.0 + c.abs()));
    }
}
