use std::sync::Arc;

use extlab_core::grid::{build_grid, AnnularGrid, PlanarMapping, Spacing};
use extlab_core::qcmap::{
    dilatation_field, gradient_map_bound, holder_exponent, kelvin_conjugate, kelvin_conjugate_derivatives,
    verify_kelvin_identities, Derivatives, QcError,
};
use proptest::prelude::*;

fn grid() -> Arc<AnnularGrid> {
    build_grid(1.0, 4.0, 32, 32, Spacing::LogRadial).unwrap()
}

/// `(s₁² + s₂²) / (2 s₁ s₂)` from the singular values of `[[a, b], [c, d]]`.
fn linear_dilatation(m: [f64; 4]) -> f64 {
    let [a, b, c, d] = m;
    let fro = a * a + b * b + c * c + d * d;
    let det = (a * d - b * c).abs();
    let disc = (fro * fro - 4.0 * det * det).max(0.0).sqrt();
    let s1 = ((fro + disc) / 2.0).sqrt();
    let s2 = det / s1;
    (s1 * s1 + s2 * s2) / (2.0 * s1 * s2)
}

fn linear_map(g: &Arc<AnnularGrid>, m: [f64; 4]) -> PlanarMapping {
    PlanarMapping::from_fn(g.clone(), |x| [m[0] * x[0] + m[1] * x[1], m[2] * x[0] + m[3] * x[1]]).unwrap()
}

fn linear_k(g: &Arc<AnnularGrid>, m: [f64; 4]) -> f64 {
    let d = move |_: [f64; 2]| m;
    dilatation_field(&linear_map(g, m), Derivatives::Exact(&d)).unwrap().k_min
}

#[test]
fn identity_is_conformal_and_holder_one() {
    let g = build_grid(1.0, 4.0, 32, 128, Spacing::LogRadial).unwrap();
    let rep = dilatation_field(&linear_map(&g, [1.0, 0.0, 0.0, 1.0]), Derivatives::Stencil).unwrap();
    assert!((rep.k_min - 1.0).abs() < 1e-9, "{}", rep.k_min);
    assert_eq!(linear_k(&g, [2.0, 0.0, 0.0, 2.0]), 1.0);
    assert_eq!(holder_exponent(1.25).unwrap(), 0.5);
    assert!(matches!(holder_exponent(0.5), Err(QcError::DomainError(_))));
    assert_eq!(gradient_map_bound(3.0), 2.0);
}

#[test]
fn orientation_reversing_map_is_reported() {
    let w = linear_map(&grid(), [1.0, 0.0, 0.0, -1.0]);
    assert!(matches!(dilatation_field(&w, Derivatives::Stencil), Err(QcError::OrientationFailure(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn holder_exponent_solves_its_quadratic(k in 1.0f64..1e4) {
        let a = holder_exponent(k).unwrap();
        prop_assert!(a > 0.0 && a <= 1.0);
        prop_assert!((a * a - 2.0 * k * a + 1.0).abs() <= 1e-12 * k);
    }

    #[test]
    fn linear_dilatation_matches_singular_values(
        m in prop::array::uniform4(-2.0f64..2.0),
        scale in 0.1f64..10.0,
        phi in 0.0f64..std::f64::consts::TAU,
    ) {
        prop_assume!(m[0] * m[3] - m[1] * m[2] > 0.1);
        let g = grid();
        let expected = linear_dilatation(m);
        let k = linear_k(&g, m);
        prop_assert!((k - expected).abs() <= 1e-8 * expected);
        // Invariant under positive scaling and under post-composition with a rotation.
        let (s, c) = phi.sin_cos();
        let rm = [
            scale * (c * m[0] - s * m[2]), scale * (c * m[1] - s * m[3]),
            scale * (s * m[0] + c * m[2]), scale * (s * m[1] + c * m[3]),
        ];
        let kr = linear_k(&g, rm);
        prop_assert!((kr - k).abs() <= 1e-8 * k);
    }

    #[test]
    fn kelvin_conjugate_is_an_involution(c in prop::array::uniform4(-2.0f64..2.0)) {
        let g = grid();
        let w = PlanarMapping::from_fn(g.clone(), |x| {
            [c[0] * x[0] + c[1] * x[1] * x[1], c[2] * x[0] * x[1] + c[3]]
        }).unwrap();
        let back = kelvin_conjugate(&kelvin_conjugate(&w).unwrap()).unwrap();
        prop_assert_eq!(back.p(), w.p());
        prop_assert_eq!(back.q(), w.q());
        for (a, b) in back.grid().radii().iter().zip(g.radii()) {
            prop_assert!((a - b).abs() <= 1e-14 * b);
        }
    }

    #[test]
    fn kelvin_identities_hold_for_holomorphic_maps(re in -2.0f64..2.0, im in -2.0f64..2.0) {
        // w = conj of (re + i im) z³ written as (p, q) = (Re, −Im), exact derivatives supplied.
        let g = grid();
        let f = move |x: [f64; 2]| {
            let (a, b) = (x[0], x[1]);
            let z3 = (a * a * a - 3.0 * a * b * b, 3.0 * a * a * b - b * b * b);
            [re * z3.0 - im * z3.1, -(re * z3.1 + im * z3.0)]
        };
        let df = move |x: [f64; 2]| {
            let (a, b) = (x[0], x[1]);
            let d = (3.0 * (a * a - b * b), 6.0 * a * b);
            let (u1, v1) = (re * d.0 - im * d.1, re * d.1 + im * d.0);
            [u1, -v1, -v1, -u1]
        };
        let w = PlanarMapping::from_fn(g.clone(), f).unwrap();
        let res = verify_kelvin_identities(&w, Derivatives::Exact(&df)).unwrap();
        // Sup of |∇p|² + |∇q|² on the annulus sets the roundoff scale.
        let scale = 1.0 + 2.0 * (48.0 * re.hypot(im)).powi(2);
        prop_assert!(res.gradient_norm <= 1e-12 * scale, "{:?}", res);
        prop_assert!(res.jacobian <= 1e-12 * scale, "{:?}", res);
        let _ = kelvin_conjugate_derivatives(df);
    }
}
