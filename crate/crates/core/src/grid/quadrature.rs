use std::f64::consts::PI;

use super::{AnnularGrid, GridError, PlanarMapping, ScalarField, Spacing};
use crate::linalg::gregory_weights;

/// Weights `w_i` with `Σ w_i g(r_i) ≈ ∫ g(r) r dr` over rings `lo..=hi`.
pub fn radial_weights(grid: &AnnularGrid, lo: usize, hi: usize) -> Vec<f64> {
    let h = grid.radial_step();
    let base = gregory_weights(hi - lo + 1);
    (lo..=hi)
        .zip(base)
        .map(|(i, b)| {
            let r = grid.radius(i);
            let jac = match grid.spacing() {
                Spacing::LogRadial => r * r,
                Spacing::UniformRadial => r,
                Spacing::InverseUniformRadial => r * r * r,
            };
            b * h * jac
        })
        .collect()
}

/// `∮ w·ν ds` over the ring of radius `radius`, trapezoidal in θ.
pub fn circle_flux_integral(w: &PlanarMapping, radius: f64) -> Result<f64, GridError> {
    let g = w.grid();
    let i = g.ring_index(radius)?;
    let r = g.radius(i);
    let mut acc = 0.0;
    for j in 0..g.n_theta() {
        let (c, s) = g.cos_sin(j);
        let [p, q] = w.at(i, j);
        acc += p * c + q * s;
    }
    Ok(acc * r * 2.0 * PI / g.n_theta() as f64)
}

/// `∬ f dx` over `r_lo ≤ |x| ≤ r_hi`; the ends are snapped to the nearest rings.
pub fn annulus_integral(f: &ScalarField, r_lo: f64, r_hi: f64) -> Result<f64, GridError> {
    let g = f.grid();
    let (lo, hi) = g.window_rings(r_lo, r_hi)?;
    let wr = radial_weights(g, lo, hi);
    let ht = 2.0 * PI / g.n_theta() as f64;
    let mut acc = 0.0;
    for (i, w) in (lo..=hi).zip(&wr) {
        let ring: f64 = f.ring(i).iter().sum();
        acc += w * ring;
    }
    Ok(acc * ht)
}

#[cfg(test)]
mod tests {
    use super::super::build_grid;
    use super::*;

    #[test]
    fn flux_of_point_source_is_two_pi() {
        let g = build_grid(1.0, 8.0, 16, 32, Spacing::LogRadial).unwrap();
        let w = PlanarMapping::from_fn(g.clone(), |x| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            [x[0] / r2, x[1] / r2]
        })
        .unwrap();
        for i in 0..g.n_r() {
            assert!((circle_flux_integral(&w, g.radius(i)).unwrap() - 2.0 * PI).abs() < 1e-12);
        }
        assert!(circle_flux_integral(&w, 1.5).is_err());
    }

    #[test]
    fn flux_of_identity_and_constant() {
        let g = build_grid(1.0, 8.0, 16, 32, Spacing::LogRadial).unwrap();
        let id = PlanarMapping::from_fn(g.clone(), |x| x).unwrap();
        let c = PlanarMapping::from_fn(g.clone(), |_| [2.5, -1.0]).unwrap();
        assert!((circle_flux_integral(&id, 8.0).unwrap() - 2.0 * PI * 64.0).abs() < 1e-10);
        assert!(circle_flux_integral(&c, 8.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn area_and_radial_integrals() {
        for spacing in [Spacing::LogRadial, Spacing::UniformRadial, Spacing::InverseUniformRadial] {
            let g = build_grid(1.0, 2.0, 33, 16, spacing).unwrap();
            let one = ScalarField::from_fn(g.clone(), |_| 1.0).unwrap();
            let e = (annulus_integral(&one, 1.0, 2.0).unwrap() - 3.0 * PI).abs();
            assert!(e < 1e-4, "{spacing} {e}");
            let zero = ScalarField::zeros(g.clone());
            assert_eq!(annulus_integral(&zero, 1.0, 2.0).unwrap(), 0.0);
        }
        let g = build_grid(1.0, 10.0, 129, 16, Spacing::LogRadial).unwrap();
        let f = ScalarField::from_polar_fn(g.clone(), |r, _| r.powi(-4)).unwrap();
        let exact = PI * (1.0 - 1e-2);
        assert!((annulus_integral(&f, 1.0, 10.0).unwrap() - exact).abs() < 1e-6);
        assert!(annulus_integral(&f, 1.0, 11.0).is_err());
    }
}
