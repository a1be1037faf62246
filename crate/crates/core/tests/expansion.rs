use std::sync::{Arc, OnceLock};

use extlab_core::expansion::{
    bootstrap_schedule, d_from_divergence, derivative_decay, fit_expansion, hessian_limit, laurent_coefficients,
    ExpansionError,
};
use extlab_core::grid::{build_grid, AnnularGrid, ScalarField, Spacing};
use extlab_core::linalg::Sym2;
use proptest::prelude::*;

const WINDOWS: [(f64, f64); 3] = [(8.0, 16.0), (16.0, 32.0), (32.0, 64.0)];

fn grid() -> Arc<AnnularGrid> {
    static G: OnceLock<Arc<AnnularGrid>> = OnceLock::new();
    G.get_or_init(|| build_grid(1.0, 64.0, 193, 64, Spacing::LogRadial).unwrap()).clone()
}

#[derive(Clone, Copy, Debug)]
struct Coeffs {
    a: Sym2,
    b: [f64; 2],
    d: f64,
    c: f64,
    e: [f64; 2],
}

fn model(k: Coeffs) -> impl Fn([f64; 2]) -> f64 {
    move |x| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        0.5 * k.a.quad_form(x)
            + k.b[0] * x[0]
            + k.b[1] * x[1]
            + 0.5 * k.d * r2.ln()
            + k.c
            + (k.e[0] * x[0] + k.e[1] * x[1]) / r2
    }
}

fn coeffs() -> impl Strategy<Value = Coeffs> {
    (
        (0.5f64..2.0, -0.4f64..0.4, 0.5f64..2.0),
        prop::array::uniform2(-1.0f64..1.0),
        -2.0f64..2.0,
        -3.0f64..3.0,
        prop::array::uniform2(-1.0f64..1.0),
    )
        .prop_map(|((a11, a12, a22), b, d, c, e)| Coeffs { a: Sym2::new(a11, a12, a22), b, d, c, e })
}

#[test]
fn too_few_windows_are_rejected() {
    let u = ScalarField::from_fn(grid(), |x| x[0]).unwrap();
    assert!(matches!(fit_expansion(&u, &WINDOWS[..2]), Err(ExpansionError::InsufficientWindows { .. })));
}

#[test]
fn hessian_decay_rate_of_fractional_power() {
    let g = build_grid(1.0, 1024.0, 256, 64, Spacing::LogRadial).unwrap();
    let radii = [8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0];
    let windows: Vec<(f64, f64)> = radii.windows(2).map(|w| (w[0], w[1])).collect();
    let u = ScalarField::from_polar_fn(g, |r, _| 0.5 * r * r + r.powf(1.6)).unwrap();
    let (a, fit) = hessian_limit(&u, &windows).unwrap();
    assert!((a.m11 - 1.0).abs() < 0.1 && a.m12.abs() < 1e-6);
    assert!((fit.exponent / 0.4 - 1.0).abs() < 0.05, "{}", fit.exponent);
}

#[test]
fn dipole_remainder_derivatives_decay_one_order_per_derivative() {
    let g = build_grid(1.0, 256.0, 256, 64, Spacing::LogRadial).unwrap();
    let windows = [(8.0, 16.0), (16.0, 32.0), (32.0, 64.0), (64.0, 128.0)];
    let phi = ScalarField::from_fn(g, |x| x[0] / (x[0] * x[0] + x[1] * x[1])).unwrap();
    let dd = derivative_decay(&phi, &windows).unwrap();
    for (fit, p) in [(&dd.first, 2.0), (&dd.second, 3.0), (&dd.third, 4.0)] {
        assert!((fit.exponent - p).abs() < 0.1, "{} vs {p}", fit.exponent);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn fit_recovers_exact_expansions(k in coeffs()) {
        let u = ScalarField::from_fn(grid(), model(k)).unwrap();
        let f = fit_expansion(&u, &WINDOWS).unwrap();
        let tol = 1e-7;
        prop_assert!((f.a.m11 - k.a.m11).abs() < tol && (f.a.m12 - k.a.m12).abs() < tol && (f.a.m22 - k.a.m22).abs() < tol);
        prop_assert!((f.b[0] - k.b[0]).abs() < tol && (f.b[1] - k.b[1]).abs() < tol);
        prop_assert!((f.d - k.d).abs() < tol, "d {} vs {}", f.d, k.d);
        prop_assert!((f.c - k.c).abs() < 1e-6, "c {} vs {}", f.c, k.c);
        prop_assert!((f.e[0] - k.e[0]).abs() < 1e-5 && (f.e[1] - k.e[1]).abs() < 1e-5, "e {:?} vs {:?}", f.e, k.e);
    }

    #[test]
    fn divergence_estimate_is_radius_independent(k in coeffs()) {
        // Error floor is the angular stencil error of the quadratic's second mode on 64 angles.
        let u = ScalarField::from_fn(grid(), model(k)).unwrap();
        for r in [16.0, 32.0, 64.0] {
            let est = d_from_divergence(&u, k.a, r).unwrap();
            prop_assert!((est.d - k.d).abs() < 1e-5, "R = {}: {} vs {}", r, est.d, k.d);
        }
    }

    #[test]
    fn laurent_coefficients_of_real_harmonic_fields(
        d in -2.0f64..2.0, b in prop::array::uniform2(-1.0f64..1.0), e in prop::array::uniform2(-1.0f64..1.0),
    ) {
        let k = Coeffs { a: Sym2::ZERO, b, d, c: 0.0, e };
        let u = ScalarField::from_fn(grid(), model(k)).unwrap();
        let l = laurent_coefficients(&u, 16.0, 3).unwrap();
        prop_assert!((l.d() - d).abs() < 1e-9);
        prop_assert!((l.b()[0] - b[0]).abs() < 1e-9 && (l.b()[1] - b[1]).abs() < 1e-9);
        prop_assert!(l.a(1).im.abs() < 1e-9);
    }

    #[test]
    fn bootstrap_schedules_are_admissible_and_minimal(alpha in 0.001f64..0.999) {
        let s = bootstrap_schedule(alpha).unwrap();
        prop_assert!(s.is_valid(), "{:?}", s);
        let p = 2f64.powi(s.n as i32);
        prop_assert!((s.delta - (1.0 - p * alpha + (p - 1.0) * s.epsilon)).abs() < 1e-14);
        if alpha <= 0.875 {
            prop_assert!(p * alpha > 0.9375 && p / 2.0 * alpha <= 0.9375);
            prop_assert!((s.delta - 0.0625).abs() < 1e-14);
        } else {
            prop_assert_eq!(s.n, 0);
        }
    }
}

#[test]
fn bootstrap_rejects_out_of_range_alpha() {
    for a in [0.0, 1.0, -0.5, f64::NAN] {
        assert!(matches!(bootstrap_schedule(a), Err(ExpansionError::InvalidAlpha(_))));
    }
}
