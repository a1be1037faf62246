use serde::{Deserialize, Serialize};

use super::ExpansionError;

/// Number of dyadic steps `n` and slack `ε` that raise a decay exponent `α`
/// to `1 − δ` with `δ = 1 − 2ⁿα + (2ⁿ − 1)ε`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSchedule {
    pub alpha: f64,
    pub epsilon: f64,
    pub n: u32,
    pub delta: f64,
}

impl BootstrapSchedule {
    fn from_parts(alpha: f64, epsilon: f64, n: u32) -> Self {
        let p = 2f64.powi(n as i32);
        BootstrapSchedule { alpha, epsilon, n, delta: 1.0 - p * alpha + (p - 1.0) * epsilon }
    }

    /// `0 < ε < α` and `0 < δ < 1/8`.
    pub fn is_valid(&self) -> bool {
        self.epsilon > 0.0 && self.epsilon < self.alpha && self.delta > 0.0 && self.delta < 0.125
    }
}

fn check_alpha(alpha: f64) -> Result<(), ExpansionError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(ExpansionError::InvalidAlpha(alpha))
    }
}

/// Admissible schedule for `α ∈ (0, 1)`.
///
/// `α > 7/8` needs no step. Otherwise `n` is the least integer with
/// `2ⁿα > 15/16` and `ε` is chosen so that `δ = 1/16`.
pub fn bootstrap_schedule(alpha: f64) -> Result<BootstrapSchedule, ExpansionError> {
    check_alpha(alpha)?;
    if alpha > 0.875 {
        return Ok(BootstrapSchedule::from_parts(alpha, alpha * 1e-3, 0));
    }
    let mut n = 1u32;
    while 2f64.powi(n as i32) * alpha <= 0.9375 {
        n += 1;
    }
    let p = 2f64.powi(n as i32);
    let epsilon = (p * alpha - 0.9375) / (p - 1.0);
    Ok(BootstrapSchedule::from_parts(alpha, epsilon, n))
}

/// `n = ⌊log₂((7/8 − ε)/(α − ε))⌋ + 1` with the given `ε`; `δ` is not checked.
pub fn literal_step_schedule(alpha: f64, epsilon: f64) -> Result<BootstrapSchedule, ExpansionError> {
    check_alpha(alpha)?;
    if !(epsilon > 0.0 && epsilon < alpha) {
        return Err(ExpansionError::InvalidAlpha(alpha));
    }
    let n = ((0.875 - epsilon) / (alpha - epsilon)).log2().floor().max(-1.0) + 1.0;
    Ok(BootstrapSchedule::from_parts(alpha, epsilon, n as u32))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half() {
        let s = bootstrap_schedule(0.5).unwrap();
        assert_eq!(s.n, 1);
        assert!(s.is_valid());
        let l = literal_step_schedule(0.5, 0.1).unwrap();
        assert_eq!(l.n, 1);
        assert!((l.delta - 0.1).abs() < 1e-15);
    }

    #[test]
    fn large_alpha_needs_no_step() {
        let s = bootstrap_schedule(0.9).unwrap();
        assert_eq!(s.n, 0);
        assert!((s.delta - 0.1).abs() < 1e-15);
        assert!(s.is_valid());
    }

    #[test]
    fn literal_formula_counterexample() {
        let alpha = 2.0 - 3f64.sqrt();
        let l = literal_step_schedule(alpha, 0.02).unwrap();
        assert_eq!(l.n, 2);
        assert!(l.delta < 0.0);
        let s = bootstrap_schedule(alpha).unwrap();
        assert_eq!(s.n, 2);
        assert!((s.epsilon - (4.0 * alpha - 0.9375) / 3.0).abs() < 1e-15);
        assert!((s.delta - 0.0625).abs() < 1e-12);
    }

    #[test]
    fn invalid_alpha() {
        for a in [0.0, 1.0, -0.5, f64::NAN] {
            assert!(matches!(bootstrap_schedule(a), Err(ExpansionError::InvalidAlpha(_))));
        }
    }
}
