//! Small dense helpers: symmetric 2×2 matrices and finite-difference weights.

use serde::{Deserialize, Serialize};

/// Symmetric 2×2 matrix `[[m11, m12], [m12, m22]]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Sym2 {
    pub m11: f64,
    pub m12: f64,
    pub m22: f64,
}

impl Sym2 {
    pub const IDENTITY: Sym2 = Sym2 { m11: 1.0, m12: 0.0, m22: 1.0 };
    pub const ZERO: Sym2 = Sym2 { m11: 0.0, m12: 0.0, m22: 0.0 };

    pub const fn new(m11: f64, m12: f64, m22: f64) -> Self {
        Sym2 { m11, m12, m22 }
    }

    pub const fn diag(a: f64, b: f64) -> Self {
        Sym2 { m11: a, m12: 0.0, m22: b }
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m12
    }

    /// Eigenvalues `(min, max)` in closed form.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.m11 + self.m22);
        let rad = (0.5 * (self.m11 - self.m22)).hypot(self.m12);
        (mean - rad, mean + rad)
    }

    /// Operator 2-norm.
    pub fn spectral_norm(&self) -> f64 {
        let (lo, hi) = self.eigenvalues();
        lo.abs().max(hi.abs())
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.m11 * self.m11 + 2.0 * self.m12 * self.m12 + self.m22 * self.m22
    }

    /// `[[m22, -m12], [-m12, m11]]`; equals `det(M)·M⁻¹`.
    pub fn cofactor(&self) -> Sym2 {
        Sym2::new(self.m22, -self.m12, self.m11)
    }

    pub fn inverse(&self) -> Option<Sym2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(self.cofactor().scale(1.0 / det))
    }

    pub fn square(&self) -> Sym2 {
        Sym2::new(
            self.m11 * self.m11 + self.m12 * self.m12,
            self.m12 * (self.m11 + self.m22),
            self.m12 * self.m12 + self.m22 * self.m22,
        )
    }

    pub fn scale(&self, s: f64) -> Sym2 {
        Sym2::new(self.m11 * s, self.m12 * s, self.m22 * s)
    }

    pub fn add(&self, o: &Sym2) -> Sym2 {
        Sym2::new(self.m11 + o.m11, self.m12 + o.m12, self.m22 + o.m22)
    }

    pub fn sub(&self, o: &Sym2) -> Sym2 {
        Sym2::new(self.m11 - o.m11, self.m12 - o.m12, self.m22 - o.m22)
    }

    /// `xᵀ M x`.
    pub fn quad_form(&self, x: [f64; 2]) -> f64 {
        self.m11 * x[0] * x[0] + 2.0 * self.m12 * x[0] * x[1] + self.m22 * x[1] * x[1]
    }

    /// `R M Rᵀ` for the rotation by `phi`.
    pub fn rotated(&self, phi: f64) -> Sym2 {
        let (s, c) = phi.sin_cos();
        Sym2::new(
            c * c * self.m11 - 2.0 * c * s * self.m12 + s * s * self.m22,
            c * s * (self.m11 - self.m22) + (c * c - s * s) * self.m12,
            s * s * self.m11 + 2.0 * c * s * self.m12 + c * c * self.m22,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.m11.is_finite() && self.m12.is_finite() && self.m22.is_finite()
    }
}

/// Finite-difference weights at `z` for nodes `x`, derivative orders `0..=m`.
///
/// `w[k][j]` multiplies `f(x[j])` in the approximation of `f⁽ᵏ⁾(z)`.
pub fn fornberg_weights(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Composite weights on `m` equally spaced nodes with unit spacing.
///
/// Gregory end corrections (fourth order) for `m ≥ 6`, trapezoid below.
pub fn gregory_weights(m: usize) -> Vec<f64> {
    match m {
        0 | 1 => vec![0.0; m],
        2..=5 => {
            let mut w = vec![1.0; m];
            w[0] = 0.5;
            w[m - 1] = 0.5;
            w
        }
        _ => {
            let mut w = vec![1.0; m];
            let ends = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];
            for (k, e) in ends.iter().enumerate() {
                w[k] = *e;
                w[m - 1 - k] = *e;
            }
            w
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_centered_three_point() {
        let w = fornberg_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert!((w[1][0] + 0.5).abs() < 1e-15 && (w[1][2] - 0.5).abs() < 1e-15);
        assert!((w[2][0] - 1.0).abs() < 1e-15 && (w[2][1] + 2.0).abs() < 1e-15);
    }

    #[test]
    fn fornberg_exact_on_polynomials() {
        let x = [1.0, 1.3, 1.7, 2.2, 2.8, 3.5];
        let w = fornberg_weights(1.3, &x, 2);
        let f = |t: f64| t.powi(5) - 2.0 * t.powi(3) + t;
        let d2 = |t: f64| 20.0 * t.powi(3) - 12.0 * t;
        let approx: f64 = x.iter().zip(&w[2]).map(|(xi, wi)| wi * f(*xi)).sum();
        assert!((approx - d2(1.3)).abs() < 1e-9);
    }

    #[test]
    fn gregory_integrates_cubics() {
        let m = 11;
        let h = 0.1;
        let w = gregory_weights(m);
        let s: f64 = (0..m).map(|i| w[i] * h * (i as f64 * h).powi(3)).sum();
        assert!((s - 0.25).abs() < 1e-13);
    }

    #[test]
    fn sym2_eigen_and_cofactor() {
        let m = Sym2::new(2.0, 1.0, 2.0);
        let (lo, hi) = m.eigenvalues();
        assert!((lo - 1.0).abs() < 1e-15 && (hi - 3.0).abs() < 1e-15);
        assert_eq!(Sym2::diag(2.0, 0.5).cofactor(), Sym2::diag(0.5, 2.0));
        let r = m.rotated(0.7);
        assert!((r.trace() - m.trace()).abs() < 1e-14 && (r.det() - m.det()).abs() < 1e-14);
    }
}
