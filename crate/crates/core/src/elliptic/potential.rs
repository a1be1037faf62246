use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EllipticError;
use crate::fit::log_log_fit;
use crate::grid::{radial_weights, AnnularGrid, ScalarField};

/// Values of `u(x) = (1/2π) ∬ (log|x − y| − log|y|) f(y) dy` at the targets.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Potential {
    pub values: Vec<f64>,
    /// `(1/2π) ∬ f`: the coefficient of `log|x|` at infinity.
    pub log_mass: f64,
}

const BOUNDARY_RTOL: f64 = 1e-12;

/// `∫ ρ log ρ dρ`.
fn rho_log_rho(rho: f64) -> f64 {
    0.5 * rho * rho * rho.ln() - 0.25 * rho * rho
}

/// `(1/2π) ∬_{a ≤ |y| ≤ b} log|x − y| dy = ∫_a^b ρ log max(|x|, ρ) dρ`.
fn log_integral_over_annulus(s: f64, a: f64, b: f64) -> f64 {
    let inner_end = s.clamp(a, b);
    let below = 0.5 * (inner_end * inner_end - a * a) * if s > 0.0 { s.ln() } else { 0.0 };
    let above = rho_log_rho(b) - rho_log_rho(inner_end);
    below + above
}

/// Lagrange weights at `t` for nodes `xs`.
fn lagrange(t: f64, xs: &[f64]) -> Vec<f64> {
    (0..xs.len())
        .map(|i| xs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, xj)| (t - xj) / (xs[i] - xj)).product())
        .collect()
}

/// `f(x)` by 4×4 Lagrange interpolation in `(r, θ)`; exact at nodes.
fn interpolate(f: &ScalarField, x: [f64; 2]) -> f64 {
    let g = f.grid();
    let r = x[0].hypot(x[1]);
    let nt = g.n_theta();
    let ht = 2.0 * PI / nt as f64;
    let theta = x[1].atan2(x[0]).rem_euclid(2.0 * PI);
    let ti = theta / ht;
    let i_near = g.nearest_ring(r);
    let j_near = ti.round() as usize % nt;
    if (g.radius(i_near) - r).abs() <= 1e-12 * r && (ti - ti.round()).abs() <= 1e-9 {
        return f.at(i_near, j_near);
    }
    let pos = g.radii().partition_point(|&ri| ri < r);
    let i0 = (pos as isize - 2).clamp(0, g.n_r() as isize - 4) as usize;
    let rw = lagrange(r, &g.radii()[i0..i0 + 4]);
    let j0 = ti.floor() as isize - 1;
    let tnodes: Vec<f64> = (0..4).map(|b| (j0 + b) as f64).collect();
    let tw = lagrange(ti, &tnodes);
    let mut acc = 0.0;
    for (a, wr) in rw.iter().enumerate() {
        for (b, wt) in tw.iter().enumerate() {
            let jj = (j0 + b as isize).rem_euclid(nt as isize) as usize;
            acc += wr * wt * f.at(i0 + a, jj);
        }
    }
    acc
}

struct Sources {
    pts: Vec<[f64; 2]>,
    wf: Vec<f64>,
    f: Vec<f64>,
    w: Vec<f64>,
    log_sum: f64,
}

fn sources(f: &ScalarField) -> Sources {
    let g: &AnnularGrid = f.grid();
    let nt = g.n_theta();
    let wr = radial_weights(g, 0, g.n_r() - 1);
    let ht = 2.0 * PI / nt as f64;
    let mut s =
        Sources { pts: Vec::with_capacity(g.len()), wf: Vec::new(), f: Vec::new(), w: Vec::new(), log_sum: 0.0 };
    for (i, wi) in wr.iter().enumerate() {
        for j in 0..nt {
            let w = wi * ht;
            let fv = f.at(i, j);
            s.pts.push(g.point(i, j));
            s.w.push(w);
            s.f.push(fv);
            s.wf.push(w * fv);
            s.log_sum += w * fv * g.radius(i).ln();
        }
    }
    s
}

/// Log-kernel potential of `f` (extended by zero outside its annulus).
///
/// The kernel singularity is removed by subtracting `f(x)` under the integral
/// and adding back `f(x) ∬ log|x − y| dy` in closed form. Targets inside the
/// annulus use `f(x)` from the nodal value or 4×4 interpolation.
pub fn newtonian_potential(f: &ScalarField, targets: &[[f64; 2]]) -> Result<Potential, EllipticError> {
    let g = f.grid();
    let (a, b) = (g.r_inner(), g.r_outer());
    let h_in = g.radius(1) - a;
    let h_out = b - g.radius(g.n_r() - 2);
    // Targets within roundoff of a boundary circle count as on it.
    let snap = |s: f64| {
        if (s - a).abs() <= BOUNDARY_RTOL * a {
            a
        } else if (s - b).abs() <= BOUNDARY_RTOL * b {
            b
        } else {
            s
        }
    };
    for x in targets {
        let s = snap(x[0].hypot(x[1]));
        if (s < a && s > a - h_in) || (s > b && s < b + h_out) {
            return Err(EllipticError::TargetUnresolved { x: x[0], y: x[1] });
        }
    }
    let src = sources(f);
    let mass: f64 = src.wf.iter().sum();
    let values = targets
        .par_iter()
        .map(|&x| {
            let s = snap(x[0].hypot(x[1]));
            let inside = s >= a && s <= b;
            let fx = if inside { interpolate(f, x) } else { 0.0 };
            let mut acc = 0.0;
            for (k, y) in src.pts.iter().enumerate() {
                let d2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
                if d2 > 0.0 {
                    acc += src.w[k] * (src.f[k] - fx) * 0.5 * d2.ln();
                }
            }
            let closed = if inside { fx * log_integral_over_annulus(s, a, b) } else { 0.0 };
            (acc / (2.0 * PI) + closed) - src.log_sum / (2.0 * PI)
        })
        .collect();
    Ok(Potential { values, log_mass: mass / (2.0 * PI) })
}

/// Growth of the potential measured by dyadic increments `sup_θ |u(2R) − u(R)|`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrowthFit {
    pub exponent: f64,
    pub log_constant: f64,
    pub r_squared: f64,
    /// `(R, sup_θ |u(2R) − u(R)|)`.
    pub increments: Vec<(f64, f64)>,
}

/// Fits `sup_θ |u(2R) − u(R)| ≈ C R^p` over the given radii (`2R ≤ r_outer`).
pub fn potential_growth(f: &ScalarField, radii: &[f64], n_angles: usize) -> Result<GrowthFit, EllipticError> {
    let mut targets = Vec::with_capacity(2 * radii.len() * n_angles);
    for &r in radii {
        for k in 0..n_angles {
            let (s, c) = (2.0 * PI * (k as f64 + 0.25) / n_angles as f64).sin_cos();
            targets.push([r * c, r * s]);
            targets.push([2.0 * r * c, 2.0 * r * s]);
        }
    }
    let pot = newtonian_potential(f, &targets)?;
    let increments: Vec<(f64, f64)> = radii
        .iter()
        .enumerate()
        .map(|(m, &r)| {
            let base = 2 * m * n_angles;
            let sup = (0..n_angles)
                .map(|k| (pot.values[base + 2 * k + 1] - pot.values[base + 2 * k]).abs())
                .fold(0.0, f64::max);
            (r, sup)
        })
        .collect();
    let (neg, log_constant, r_squared) = log_log_fit(&increments);
    Ok(GrowthFit { exponent: -neg, log_constant, r_squared, increments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, Spacing};

    #[test]
    fn closed_form_log_integral() {
        // Direct quadrature of ∫ ρ log max(s, ρ) dρ.
        for &(s, a, b) in &[(1.5f64, 1.0, 3.0), (0.5, 1.0, 3.0), (4.0, 1.0, 3.0)] {
            let n = 20000;
            let h = (b - a) / n as f64;
            let quad: f64 = (0..n)
                .map(|k| {
                    let rho: f64 = a + (k as f64 + 0.5) * h;
                    rho * s.max(rho).ln() * h
                })
                .sum();
            assert!((log_integral_over_annulus(s, a, b) - quad).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_density_gives_zero() {
        let g = build_grid(1.0, 4.0, 16, 16, Spacing::LogRadial).unwrap();
        let p = newtonian_potential(&ScalarField::zeros(g), &[[2.0, 0.0], [10.0, 3.0]]).unwrap();
        assert_eq!(p.values, vec![0.0, 0.0]);
        assert_eq!(p.log_mass, 0.0);
    }

    #[test]
    fn interpolation_reproduces_smooth_field() {
        let g = build_grid(1.0, 4.0, 64, 64, Spacing::LogRadial).unwrap();
        let f = ScalarField::from_fn(g, |x| x[0] * x[1] + x[0]).unwrap();
        let v = interpolate(&f, [1.7, 0.9]);
        assert!((v - (1.7 * 0.9 + 1.7)).abs() < 1e-4, "{v}");
    }

    #[test]
    fn unresolved_targets_are_reported() {
        let g = build_grid(1.0, 4.0, 16, 16, Spacing::LogRadial).unwrap();
        let f = ScalarField::from_fn(g, |_| 1.0).unwrap();
        assert!(matches!(newtonian_potential(&f, &[[4.01, 0.0]]), Err(EllipticError::TargetUnresolved { .. })));
    }
}
