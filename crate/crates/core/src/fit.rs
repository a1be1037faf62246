//! Power-law decay fits `deviation ≈ C·R^{-exponent}`.

use serde::{Deserialize, Serialize};

/// One observation of a decaying quantity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecaySample {
    pub radius: f64,
    pub deviation: f64,
}

/// Fitted `|w − w∞| ≈ C·R^{-exponent}`.
///
/// `exponent` is `+∞` and `degenerate` is set when every deviation is at
/// roundoff level relative to the limit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub log_constant: f64,
    pub limit: Vec<f64>,
    pub windows: Vec<DecaySample>,
    pub r_squared: f64,
    pub degenerate: bool,
}

impl DecayFit {
    /// Fits samples (strictly increasing radii) against a known limit.
    ///
    /// Deviations at or below `floor` count as underflow; if all do, the fit is degenerate.
    pub fn from_samples(limit: Vec<f64>, windows: Vec<DecaySample>, floor: f64) -> DecayFit {
        let usable: Vec<(f64, f64)> =
            windows.iter().filter(|s| s.deviation > floor).map(|s| (s.radius, s.deviation)).collect();
        if usable.len() < 2 {
            return DecayFit {
                exponent: f64::INFINITY,
                log_constant: f64::NEG_INFINITY,
                limit,
                windows,
                r_squared: 1.0,
                degenerate: true,
            };
        }
        let (exponent, log_constant, r_squared) = log_log_fit(&usable);
        DecayFit { exponent, log_constant, limit, windows, r_squared, degenerate: false }
    }
}

/// Least squares of `ln v` against `ln r`; returns `(−slope, intercept, R²)`.
pub fn log_log_fit(samples: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r2 = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    (-slope, intercept, r2)
}

/// Observed convergence order from `(h, error)` pairs: slope of `ln e` against `ln h`.
pub fn observed_order(samples: &[(f64, f64)]) -> f64 {
    -log_log_fit(samples).0
}

const P_MIN: f64 = 0.05;
const P_MAX: f64 = 8.0;

/// Extrapolates vector means `m_k ≈ A + C·R_k^{-p}` (shared `p`) to `R → ∞`.
///
/// Returns `(A, p)`, or `None` when there are fewer than three samples, the
/// means show no trend above roundoff, or the best `p` sits on the search
/// boundary.
pub fn extrapolate_limit(radii: &[f64], means: &[Vec<f64>]) -> Option<(Vec<f64>, f64)> {
    let k = radii.len();
    if k < 3 || means.len() != k {
        return None;
    }
    let dim = means[0].len();
    let last = &means[k - 1];
    let trend = (0..dim).any(|c| means.iter().any(|m| (m[c] - last[c]).abs() > 1e-10 * (1.0 + last[c].abs())));
    if !trend {
        return None;
    }
    let sse = |p: f64| -> (f64, Vec<f64>) {
        let xs: Vec<f64> = radii.iter().map(|r| r.powf(-p)).collect();
        let mx = xs.iter().sum::<f64>() / k as f64;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let mut total = 0.0;
        let mut limit = Vec::with_capacity(dim);
        for c in 0..dim {
            let my = means.iter().map(|m| m[c]).sum::<f64>() / k as f64;
            let sxy: f64 = xs.iter().zip(means).map(|(x, m)| (x - mx) * (m[c] - my)).sum();
            let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
            let a = my - slope * mx;
            total += xs.iter().zip(means).map(|(x, m)| (m[c] - a - slope * x).powi(2)).sum::<f64>();
            limit.push(a);
        }
        (total, limit)
    };
    let grid: Vec<f64> = (0..=200).map(|i| P_MIN * (P_MAX / P_MIN).powf(i as f64 / 200.0)).collect();
    let (best, _) = grid.iter().enumerate().map(|(i, &p)| (i, sse(p).0)).fold((0, f64::INFINITY), |acc, (i, s)| {
        if s < acc.1 {
            (i, s)
        } else {
            acc
        }
    });
    if best == 0 || best == grid.len() - 1 {
        return None;
    }
    let (mut a, mut b) = (grid[best - 1], grid[best + 1]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if sse(c).0 < sse(d).0 {
            b = d;
        } else {
            a = c;
        }
    }
    let p = 0.5 * (a + b);
    let (_, limit) = sse(p);
    Some((limit, p))
}
