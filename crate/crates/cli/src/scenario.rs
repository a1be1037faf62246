//! Scenario configuration: operator, grid, boundary data, windows and assertions.

use std::path::{Path, PathBuf};

use extlab_core::grid::{AnnularGrid, GridSpec};
use extlab_core::nonlinear::{
    linear_custom_spec, linear_trace_spec, monge_ampere_spec, special_lagrangian_spec, FullyNonlinearSpec,
    NewtonOptions,
};
use extlab_core::{Spacing, StencilOrder, Sym2};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::CliError;

/// Operator of `F(D²u) = 0`; absent for analysis-only scenarios.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorConfig {
    MongeAmpere,
    SpecialLagrangian {
        theta: f64,
    },
    LinearTrace {
        #[serde(default)]
        rhs: f64,
    },
    LinearCustom {
        /// `[a11, a12, a22]`.
        a: [f64; 3],
        #[serde(default)]
        rhs: f64,
    },
    None,
}

impl OperatorConfig {
    pub fn spec(&self) -> Option<FullyNonlinearSpec> {
        match *self {
            OperatorConfig::MongeAmpere => Some(monge_ampere_spec()),
            OperatorConfig::SpecialLagrangian { theta } => Some(special_lagrangian_spec(theta)),
            OperatorConfig::LinearTrace { rhs } => Some(linear_trace_spec(rhs)),
            OperatorConfig::LinearCustom { a, rhs } => Some(linear_custom_spec(Sym2::new(a[0], a[1], a[2]), rhs)),
            OperatorConfig::None => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub r_inner: f64,
    pub r_outer: f64,
    pub n_r: usize,
    pub n_theta: usize,
    #[serde(default = "default_spacing")]
    pub spacing: Spacing,
    #[serde(default)]
    pub order: StencilOrder,
}

fn default_spacing() -> Spacing {
    Spacing::LogRadial
}

impl GridConfig {
    pub fn build(&self) -> Result<Arc<AnnularGrid>, CliError> {
        let spec = GridSpec {
            r_inner: self.r_inner,
            r_outer: self.r_outer,
            n_r: self.n_r,
            n_theta: self.n_theta,
            spacing: self.spacing,
            order: self.order,
        };
        AnnularGrid::new(spec).map_err(|e| CliError::Config(format!("grid: {e}")))
    }

    /// `r_in,r_out,n_r,n_theta[,spacing]`.
    pub fn parse_override(&self, s: &str) -> Result<GridConfig, CliError> {
        let bad = || CliError::Usage(format!("--grid expects r_in,r_out,n_r,n_theta[,spacing], got {s:?}"));
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if !(4..=5).contains(&parts.len()) {
            return Err(bad());
        }
        let mut g = self.clone();
        g.r_inner = parts[0].parse().map_err(|_| bad())?;
        g.r_outer = parts[1].parse().map_err(|_| bad())?;
        g.n_r = parts[2].parse().map_err(|_| bad())?;
        g.n_theta = parts[3].parse().map_err(|_| bad())?;
        if let Some(sp) = parts.get(4) {
            g.spacing = sp.parse().map_err(|_| bad())?;
        }
        Ok(g)
    }
}

/// Source of the Dirichlet data, or of the whole field when no operator is set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryConfig {
    /// Radial Monge–Ampère profile with `u′ = √(r² + a)`.
    RadialReference { a: f64 },
    /// `½xᵀAx + b·x + d log|x| + c + e·x/|x|²` with `A = [a11, a12, a22]`.
    ExplicitPolynomial {
        a: [f64; 3],
        #[serde(default)]
        b: [f64; 2],
        #[serde(default)]
        d: f64,
        #[serde(default)]
        c: f64,
        #[serde(default)]
        e: [f64; 2],
    },
    /// Scalar snapshot on the scenario grid; relative paths resolve against the config file.
    File { path: PathBuf },
}

/// Expected value with an absolute tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    pub value: f64,
    pub tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectVec<const N: usize> {
    #[serde(with = "serde_arrays")]
    pub value: [f64; N],
    pub tol: f64,
}

mod serde_arrays {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer, const N: usize>(v: &[f64; N], s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, const N: usize>(d: D) -> Result<[f64; N], D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        let n = v.len();
        v.try_into().map_err(|_| serde::de::Error::invalid_length(n, &"a fixed-length array"))
    }
}

/// Checks that decide the exit status of a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assertions {
    pub a: Option<ExpectVec<3>>,
    pub b: Option<ExpectVec<2>>,
    pub d: Option<Expect>,
    pub c: Option<Expect>,
    pub e: Option<ExpectVec<2>>,
    /// Largest admissible spread of the available `d` estimates.
    pub d_consistency: Option<f64>,
    /// Largest admissible `K` of the gradient map.
    pub dilatation_max: Option<f64>,
    /// Smallest admissible decay exponent of `|D²u − A|`.
    pub hessian_decay_min: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_newton_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

fn default_newton_tol() -> f64 {
    NewtonOptions::default().tol
}
fn default_max_iters() -> usize {
    NewtonOptions::default().max_iters
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol: default_newton_tol(), max_iters: default_max_iters() }
    }
}

impl SolverConfig {
    pub fn options(&self) -> NewtonOptions {
        NewtonOptions { tol: self.tol, max_iters: self.max_iters, ..NewtonOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub operator: OperatorConfig,
    pub grid: GridConfig,
    pub boundary: BoundaryConfig,
    pub windows: Vec<(f64, f64)>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub assertions: Assertions,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario, CliError> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    /// Reads a config file, or a built-in scenario when `source` names one and no such file exists.
    pub fn load(source: &str) -> Result<Scenario, CliError> {
        let path = Path::new(source);
        if !path.exists() {
            if let Some(s) = builtin(source) {
                return Ok(s);
            }
        }
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{source}: {e}")))?;
        let mut s = Scenario::from_json(&text)?;
        if let BoundaryConfig::File { path: p } = &mut s.boundary {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(s)
    }

    /// Windows inside the grid, increasing, and the operator well defined.
    pub fn validate(&self) -> Result<(), CliError> {
        let g = &self.grid;
        if !(g.r_inner > 0.0 && g.r_outer > g.r_inner) {
            return Err(CliError::Config(format!(
                "grid radii must satisfy 0 < r_inner < r_outer, got {} and {}",
                g.r_inner, g.r_outer
            )));
        }
        self.grid.build()?;
        if self.windows.len() < extlab_core::expansion::MIN_WINDOWS {
            return Err(CliError::Config(format!(
                "need at least {} windows, got {}",
                extlab_core::expansion::MIN_WINDOWS,
                self.windows.len()
            )));
        }
        let tol = 1e-9;
        for &(lo, hi) in &self.windows {
            if !(lo < hi) || lo < g.r_inner * (1.0 - tol) || hi > g.r_outer * (1.0 + tol) {
                return Err(CliError::Config(format!(
                    "window [{lo}, {hi}] lies outside the grid [{}, {}]",
                    g.r_inner, g.r_outer
                )));
            }
        }
        if self.windows.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(CliError::Config("windows must be ordered by radius".into()));
        }
        if let OperatorConfig::SpecialLagrangian { theta } = self.operator {
            if !(theta.abs() < std::f64::consts::PI) {
                return Err(CliError::Config(format!("special Lagrangian phase {theta} must lie in (−π, π)")));
            }
        }
        if let OperatorConfig::LinearCustom { a, .. } = self.operator {
            let (lo, _) = Sym2::new(a[0], a[1], a[2]).eigenvalues();
            if !(lo > 0.0) {
                return Err(CliError::Config(format!("linear_custom matrix {a:?} is not positive definite")));
            }
        }
        if !(self.solver.tol > 0.0) {
            return Err(CliError::Config("solver.tol must be positive".into()));
        }
        Ok(())
    }

    /// `a,b;c,d;…` with either `,` or `:` inside a pair.
    pub fn parse_windows(s: &str) -> Result<Vec<(f64, f64)>, CliError> {
        let bad = || CliError::Usage(format!("--windows expects lo:hi;lo:hi;…, got {s:?}"));
        s.split(';')
            .map(|w| {
                let mut it = w.split([':', ',']).map(str::trim);
                let lo = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                let hi = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                if it.next().is_some() {
                    return Err(bad());
                }
                Ok((lo, hi))
            })
            .collect()
    }
}

pub const BUILTIN_NAMES: [&str; 2] = ["ma-radial-a2", "identity-quadratic"];

pub fn builtin(name: &str) -> Option<Scenario> {
    let grid = GridConfig {
        r_inner: 1.0,
        r_outer: 64.0,
        n_r: 256,
        n_theta: 128,
        spacing: Spacing::LogRadial,
        order: StencilOrder::Fourth,
    };
    let windows = vec![(8.0, 16.0), (16.0, 32.0), (32.0, 64.0)];
    match name {
        "ma-radial-a2" => Some(Scenario {
            name: name.into(),
            operator: OperatorConfig::MongeAmpere,
            grid,
            boundary: BoundaryConfig::RadialReference { a: 2.0 },
            windows,
            solver: SolverConfig::default(),
            assertions: Assertions {
                a: Some(ExpectVec { value: [1.0, 0.0, 1.0], tol: 1e-4 }),
                b: Some(ExpectVec { value: [0.0, 0.0], tol: 1e-6 }),
                d: Some(Expect { value: 1.0, tol: 1e-3 }),
                c: Some(Expect { value: 0.5 + 2f64.ln(), tol: 1e-2 }),
                d_consistency: Some(2e-3),
                hessian_decay_min: Some(1.8),
                ..Assertions::default()
            },
        }),
        "identity-quadratic" => Some(Scenario {
            name: name.into(),
            operator: OperatorConfig::None,
            grid: GridConfig { n_r: 128, n_theta: 64, ..grid },
            boundary: BoundaryConfig::ExplicitPolynomial {
                a: [1.0, 0.0, 1.0],
                b: [0.0; 2],
                d: 0.0,
                c: 0.0,
                e: [0.0; 2],
            },
            windows,
            solver: SolverConfig::default(),
            assertions: Assertions {
                a: Some(ExpectVec { value: [1.0, 0.0, 1.0], tol: 1e-10 }),
                b: Some(ExpectVec { value: [0.0, 0.0], tol: 1e-10 }),
                d: Some(Expect { value: 0.0, tol: 1e-10 }),
                c: Some(Expect { value: 0.0, tol: 1e-9 }),
                e: Some(ExpectVec { value: [0.0, 0.0], tol: 1e-9 }),
                d_consistency: Some(1e-8),
                dilatation_max: Some(1.0 + 1e-6),
                ..Assertions::default()
            },
        }),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_validate_and_round_trip() {
        for name in BUILTIN_NAMES {
            let s = builtin(name).unwrap();
            s.validate().unwrap();
            let text = serde_json::to_string(&s).unwrap();
            assert_eq!(Scenario::from_json(&text).unwrap(), s);
        }
    }

    #[test]
    fn window_outside_grid_is_rejected() {
        let mut s = builtin("ma-radial-a2").unwrap();
        s.windows[2] = (32.0, 128.0);
        assert!(matches!(s.validate(), Err(CliError::Config(_))));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let s = serde_json::to_value(builtin("identity-quadratic").unwrap()).unwrap();
        let mut obj = s.as_object().unwrap().clone();
        obj.insert("bogus".into(), 1.into());
        assert!(Scenario::from_json(&serde_json::Value::Object(obj).to_string()).is_err());
    }

    #[test]
    fn overrides_parse() {
        let g = builtin("ma-radial-a2").unwrap().grid;
        let o = g.parse_override("1,16,65,64,uniform-radial").unwrap();
        assert_eq!((o.r_outer, o.n_r, o.n_theta, o.spacing), (16.0, 65, 64, Spacing::UniformRadial));
        assert!(g.parse_override("1,16").is_err());
        assert_eq!(Scenario::parse_windows("2:4;4:8;8:16").unwrap(), vec![(2.0, 4.0), (4.0, 8.0), (8.0, 16.0)]);
        assert!(Scenario::parse_windows("2:4;x").is_err());
    }
}
