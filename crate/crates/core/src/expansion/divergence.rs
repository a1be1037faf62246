use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::ExpansionError;
use crate::grid::{annulus_integral, circle_flux_integral, gradient, laplacian, GridError, ScalarField};
use crate::linalg::Sym2;

/// Differences below this multiple of the value scale are treated as noise.
const EXTRAPOLATION_NOISE_RTOL: f64 = 1e-11;
const EXPONENT_RANGE: (f64, f64) = (0.25, 8.0);

/// `d` from the divergence identity on `r_inner ≤ |x| ≤ R`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DivergenceEstimate {
    /// Tail-extrapolated value; equals `d_raw` when extrapolation is not possible.
    pub d: f64,
    /// Value of the identity truncated at `R`.
    pub d_raw: f64,
    /// `|d − d_raw|` when extrapolated, else `|d(R) − d(R/2)|`.
    pub truncation_estimate: f64,
    /// Fitted tail exponent `p` in `d(R) = d + C R^{−p}`.
    pub exponent: Option<f64>,
    pub radius: f64,
    /// `(R', d(R'))` at the rings nearest `R/4`, `R/2` and `R`.
    pub samples: Vec<(f64, f64)>,
}

/// `(1/2π)[∮_{r_inner} u_ν ds + ∬ (Δu − tr A) dx − tr A · π r_inner²]`.
fn truncated(
    u: &ScalarField,
    flux: f64,
    lap_minus_tr: &ScalarField,
    tr: f64,
    radius: f64,
) -> Result<f64, ExpansionError> {
    let r_in = u.grid().r_inner();
    let area = annulus_integral(lap_minus_tr, r_in, radius)?;
    Ok((flux + area - tr * PI * r_in * r_in) / (2.0 * PI))
}

/// `p` with `(r₁^{−p} − r₂^{−p}) / (r₂^{−p} − r₃^{−p}) = ρ`, by bisection.
fn tail_exponent(r: [f64; 3], rho: f64) -> Option<f64> {
    let g = |p: f64| (r[0].powf(-p) - r[1].powf(-p)) / (r[1].powf(-p) - r[2].powf(-p)) - rho;
    let (mut lo, mut hi) = EXPONENT_RANGE;
    if g(lo) * g(hi) > 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(lo) * g(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// `d` via the divergence theorem with the hole `|x| < r_inner` as the body.
///
/// The identity converges like a power of `1/R`; the tail is removed by fitting
/// `d + C R^{−p}` through the values at three rings up to `R`.
pub fn d_from_divergence(u: &ScalarField, a: Sym2, radius: f64) -> Result<DivergenceEstimate, ExpansionError> {
    let g = u.grid();
    if !(radius > g.r_inner()) || radius > g.r_outer() * (1.0 + 1e-9) {
        return Err(GridError::WindowOutsideGrid {
            r_lo: g.r_inner(),
            r_hi: radius,
            r_inner: g.r_inner(),
            r_outer: g.r_outer(),
        }
        .into());
    }
    let i_r = g.ring_index(radius)?;
    let tr = a.trace();
    let flux = circle_flux_integral(&gradient(u), g.r_inner())?;
    let lap = laplacian(u);
    let lap_minus_tr = lap.minus_fn(|_| tr)?;
    let rings = [g.nearest_ring(radius / 4.0), g.nearest_ring(radius / 2.0), i_r];
    let mut samples = Vec::with_capacity(3);
    for &i in &rings {
        if i > 0 {
            samples.push((g.radius(i), truncated(u, flux, &lap_minus_tr, tr, g.radius(i))?));
        }
    }
    let d_raw = samples.last().map(|s| s.1).expect("R ring is past the inner ring");
    let distinct = samples.windows(2).all(|w| w[0].0 < w[1].0);
    let mut estimate = DivergenceEstimate {
        d: d_raw,
        d_raw,
        truncation_estimate: if samples.len() >= 2 { (d_raw - samples[samples.len() - 2].1).abs() } else { 0.0 },
        exponent: None,
        radius: g.radius(i_r),
        samples,
    };
    if estimate.samples.len() == 3 && distinct {
        let [(r1, d1), (r2, d2), (r3, d3)] = [estimate.samples[0], estimate.samples[1], estimate.samples[2]];
        let noise = EXTRAPOLATION_NOISE_RTOL * (1.0 + d3.abs());
        let (e12, e23) = (d1 - d2, d2 - d3);
        if e12.abs() > noise && e23.abs() > noise {
            let rho = e12 / e23;
            if rho > 1.0 {
                if let Some(p) = tail_exponent([r1, r2, r3], rho) {
                    let c = e23 / (r2.powf(-p) - r3.powf(-p));
                    estimate.d = d3 - c * r3.powf(-p);
                    estimate.exponent = Some(p);
                    estimate.truncation_estimate = (estimate.d - d_raw).abs();
                }
            }
        }
    }
    Ok(estimate)
}
