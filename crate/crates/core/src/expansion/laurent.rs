use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ExpansionError;
use crate::grid::{hessian, laplacian, AnnularGrid, PlanarMapping, ScalarField, Spacing};

/// Largest admissible `max|Δu| / max|D²u|` on the contour rings.
pub const HARMONIC_TOLERANCE: f64 = 1e-2;

/// `R² max|Δu|` at or below this is indistinguishable from roundoff.
pub const HARMONIC_NOISE_FLOOR: f64 = 1e-8;

/// Partner ring sits about this factor inside the contour radius.
const PARTNER_RATIO: f64 = 1.25;

/// Laurent coefficients of `ξ = u₁ − i u₂` on `|z| = radius_used`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LaurentCoefficients {
    /// `a₀, a₋₁, …, a₋max_order`.
    pub coefficients: Vec<Complex64>,
    pub radius_used: f64,
    /// `max|Δu| / max|D²u|` near the contour; zero for gradient input.
    pub harmonic_ratio: f64,
}

impl LaurentCoefficients {
    /// `a_{−k}`.
    pub fn a(&self, k: usize) -> Complex64 {
        self.coefficients[k]
    }
    /// `(Re a₀, −Im a₀)`.
    pub fn b(&self) -> [f64; 2] {
        [self.coefficients[0].re, -self.coefficients[0].im]
    }
    /// `Re a₋₁`.
    pub fn d(&self) -> f64 {
        self.coefficients.get(1).map_or(0.0, |c| c.re)
    }
}

/// `a_{−k} = (1/2πi) ∮ ξ(z) z^{k−1} dz` by the trapezoid rule on `|z| = radius`.
fn contour(xi: &[Complex64], radius: f64, max_order: usize) -> Vec<Complex64> {
    let n = xi.len();
    (0..=max_order)
        .map(|k| {
            let sum: Complex64 = xi
                .iter()
                .enumerate()
                .map(|(j, x)| x * Complex64::from_polar(1.0, k as f64 * 2.0 * PI * j as f64 / n as f64))
                .sum();
            sum * radius.powi(k as i32) / n as f64
        })
        .collect()
}

fn dft(v: &[f64]) -> Vec<Complex64> {
    let n = v.len();
    (0..=n / 2)
        .map(|m| {
            let s: Complex64 = v
                .iter()
                .enumerate()
                .map(|(j, x)| x * Complex64::from_polar(1.0, -2.0 * PI * (m * j) as f64 / n as f64))
                .sum();
            s / n as f64
        })
        .collect()
}

fn partner_ring(g: &AnnularGrid, i: usize) -> usize {
    let target = g.radius(i) / PARTNER_RATIO;
    let k = match g.spacing() {
        Spacing::LogRadial => {
            let step = (g.radius(1) / g.radius(0)).ln();
            (PARTNER_RATIO.ln() / step).round().max(1.0) as usize
        }
        _ => i.saturating_sub(g.nearest_ring(target)).max(1),
    };
    if i >= k {
        i - k
    } else {
        (i + k).min(g.n_r() - 1)
    }
}

/// Polar derivatives `(u_r, u_θ)` on ring `i` of a harmonic field from its
/// values on rings `i` and `i2`, mode by mode.
fn harmonic_ring_derivatives(u: &ScalarField, i: usize, i2: usize) -> (Vec<f64>, Vec<f64>) {
    let g = u.grid();
    let n = g.n_theta();
    let (r, r2) = (g.radius(i), g.radius(i2));
    let rho = r2 / r;
    let c1 = dft(u.ring(i));
    let c2 = dft(u.ring(i2));
    let mut dr = vec![Complex64::new(0.0, 0.0); n / 2 + 1];
    dr[0] = (c1[0] - c2[0]) / (r / r2).ln() / r;
    for m in 1..=n / 2 {
        // û_m(s) = P (s/r)^m + Q (s/r)^{-m}.
        let mf = m as f64;
        let up = rho.powf(mf);
        let dn = rho.powf(-mf);
        let q = (c2[m] - c1[m] * up) / (dn - up);
        let p = c1[m] - q;
        dr[m] = (p - q) * (mf / r);
    }
    let synth = |coef: &dyn Fn(usize) -> Complex64| -> Vec<f64> {
        (0..n)
            .map(|j| {
                let th = 2.0 * PI * j as f64 / n as f64;
                let mut s = coef(0).re;
                for m in 1..=n / 2 {
                    let w = if 2 * m == n { 1.0 } else { 2.0 };
                    s += w * (coef(m) * Complex64::from_polar(1.0, m as f64 * th)).re;
                }
                s
            })
            .collect()
    };
    let ur = synth(&|m| dr[m]);
    let ut = synth(&|m| if 2 * m == n { Complex64::new(0.0, 0.0) } else { c1[m] * Complex64::new(0.0, m as f64) });
    (ur, ut)
}

/// Contour-integral Laurent coefficients of `ξ = u₁ − i u₂` for harmonic `u`.
///
/// `ξ` on the circle is reconstructed from the values on the contour ring and
/// a partner ring about 1.25× inside, using the harmonic radial profiles
/// `r^{±m}` and `log r` mode by mode.
pub fn laurent_coefficients(
    u: &ScalarField,
    radius: f64,
    max_order: usize,
) -> Result<LaurentCoefficients, ExpansionError> {
    let g = u.grid();
    let i = g.ring_index(radius)?;
    let i2 = partner_ring(g, i);
    let lap = laplacian(u);
    let h = hessian(u);
    let ring_max = |f: &dyn Fn(usize) -> f64| {
        [i, i2].iter().flat_map(|&ii| (0..g.n_theta()).map(move |j| g.index(ii, j))).map(f).fold(0.0, f64::max)
    };
    let lap_max = ring_max(&|k| lap.values()[k].abs());
    let scale =
        ring_max(&|k| h.values()[k].spectral_norm()).max(ring_max(&|k| u.values()[k].abs()) / (radius * radius));
    let harmonic_ratio = if scale > 0.0 { lap_max / scale } else { 0.0 };
    if harmonic_ratio > HARMONIC_TOLERANCE && lap_max * radius * radius > HARMONIC_NOISE_FLOOR {
        return Err(ExpansionError::NotHarmonic { ratio: harmonic_ratio, tolerance: HARMONIC_TOLERANCE });
    }
    let (ur, ut) = harmonic_ring_derivatives(u, i, i2);
    let r = g.radius(i);
    let xi: Vec<Complex64> = (0..g.n_theta())
        .map(|j| {
            // ξ = e^{−iθ}(u_r − i u_θ / r).
            Complex64::from_polar(1.0, -g.theta(j)) * Complex64::new(ur[j], -ut[j] / r)
        })
        .collect();
    Ok(LaurentCoefficients { coefficients: contour(&xi, r, max_order), radius_used: r, harmonic_ratio })
}

/// Laurent coefficients of `ξ = p − i q` from a sampled gradient field.
pub fn laurent_coefficients_from_gradient(
    w: &PlanarMapping,
    radius: f64,
    max_order: usize,
) -> Result<LaurentCoefficients, ExpansionError> {
    let g = w.grid();
    let i = g.ring_index(radius)?;
    let xi: Vec<Complex64> = (0..g.n_theta())
        .map(|j| {
            let [p, q] = w.at(i, j);
            Complex64::new(p, -q)
        })
        .collect();
    Ok(LaurentCoefficients {
        coefficients: contour(&xi, g.radius(i), max_order),
        radius_used: g.radius(i),
        harmonic_ratio: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    fn grid() -> std::sync::Arc<AnnularGrid> {
        build_grid(1.0, 64.0, 256, 128, Spacing::LogRadial).unwrap()
    }

    fn check(l: &LaurentCoefficients, expected: &[(f64, f64)]) {
        for (k, c) in l.coefficients.iter().enumerate() {
            let e = expected.get(k).copied().unwrap_or((0.0, 0.0));
            assert!((c.re - e.0).abs() < 1e-10 && (c.im - e.1).abs() < 1e-10, "a_-{k} = {c}");
        }
    }

    #[test]
    fn fundamental_solution() {
        let u = ScalarField::from_polar_fn(grid(), |r, _| r.ln()).unwrap();
        let l = laurent_coefficients(&u, 16.0, 4).unwrap();
        check(&l, &[(0.0, 0.0), (1.0, 0.0)]);
        assert!((l.d() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn linear_function() {
        let u = ScalarField::from_fn(grid(), |x| x[0]).unwrap();
        let l = laurent_coefficients(&u, 16.0, 4).unwrap();
        check(&l, &[(1.0, 0.0)]);
        assert!((l.b()[0] - 1.0).abs() < 1e-10 && l.b()[1].abs() < 1e-10);
    }

    #[test]
    fn dipole() {
        let u = ScalarField::from_fn(grid(), |x| x[0] / (x[0] * x[0] + x[1] * x[1])).unwrap();
        let l = laurent_coefficients(&u, 16.0, 4).unwrap();
        check(&l, &[(0.0, 0.0), (0.0, 0.0), (-1.0, 0.0)]);
    }

    #[test]
    fn roundoff_field_counts_as_harmonic() {
        let u = ScalarField::from_fn(grid(), |x| 0.5 * (x[0] * x[0] + x[1] * x[1])).unwrap();
        let v = u.minus_fn(|x| 0.5 * x[0] * x[0] + 0.5 * x[1] * x[1]).unwrap();
        let l = laurent_coefficients(&v, 64.0, 2).unwrap();
        assert!(l.d().abs() < 1e-10);
    }

    #[test]
    fn non_harmonic_input_is_rejected() {
        let u = ScalarField::from_fn(grid(), |x| x[0] * x[0]).unwrap();
        assert!(matches!(laurent_coefficients(&u, 16.0, 2), Err(ExpansionError::NotHarmonic { .. })));
    }

    #[test]
    fn gradient_input() {
        let g = grid();
        let w = PlanarMapping::from_fn(g, |x| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            [x[0] / r2 + 2.0, x[1] / r2 - 1.0]
        })
        .unwrap();
        let l = laurent_coefficients_from_gradient(&w, 16.0, 3).unwrap();
        check(&l, &[(2.0, 1.0), (1.0, 0.0)]);
    }
}
