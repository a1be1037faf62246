//! Solve or load a field, analyze it, and evaluate the scenario assertions.

use std::io::BufReader;
use std::sync::Arc;

use extlab_core::elliptic::ellipticity_constants;
use extlab_core::expansion::{
    d_from_divergence, derivative_decay, fit_expansion, hessian_limit, laurent_coefficients, DerivativeDecay,
    DivergenceEstimate, ExpansionCoefficients,
};
use extlab_core::grid::{gradient, hessian, read_snapshot, AnnularGrid, PlanarMapping, ScalarField, Snapshot};
use extlab_core::nonlinear::{default_initial_guess, newton_solve, radial_ma_reference, NewtonStep};
use extlab_core::qcmap::{dilatation_field, holder_exponent, limit_and_decay, Derivatives, QcError};
use extlab_core::{DecayFit, Sym2};
use serde::{Deserialize, Serialize};

use crate::scenario::{BoundaryConfig, OperatorConfig, Scenario};
use crate::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveSummary {
    pub iterations: usize,
    pub initial_residual: f64,
    pub final_residual: f64,
    pub tolerance: f64,
    pub steps: Vec<NewtonStep>,
}

/// Dilatation of the gradient map in the orientation with a positive Jacobian.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DilatationSummary {
    /// `"(u1, u2)"` or `"(u2, u1)"`.
    pub orientation: String,
    pub k_max: f64,
    pub alpha: f64,
    pub jacobian_min: f64,
    pub degenerate_nodes: usize,
    /// Ellipticity ratio of the linearization, when an operator is set.
    pub gamma: Option<f64>,
    /// `(1 + γ)/2`.
    pub linear_bound: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HessianLimit {
    pub a: Sym2,
    pub fit: DecayFit,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LaurentSummary {
    pub radius: f64,
    pub d: Option<f64>,
    pub b: Option<[f64; 2]>,
    pub imag_a1: Option<f64>,
    pub harmonic_ratio: Option<f64>,
    /// Reason the contour extraction was skipped.
    pub skipped: Option<String>,
}

/// Radial profile at every ring.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProfileRow {
    pub radius: f64,
    pub u_mean: f64,
    /// `sup_θ |D²u − A|`.
    pub hessian_deviation: f64,
    /// `sup_θ |u − expansion|`.
    pub expansion_residual: f64,
    /// Largest pointwise dilatation on the ring.
    pub k_max: f64,
}

/// One `(radius, value)` series of a decay fit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayTable {
    pub name: String,
    pub exponent: Option<f64>,
    pub samples: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AssertionOutcome {
    pub name: String,
    pub measured: Vec<f64>,
    pub expected: Vec<f64>,
    pub tolerance: f64,
    /// Window or radius the measurement refers to.
    pub context: String,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub scenario: Scenario,
    pub mode: String,
    pub solve: Option<SolveSummary>,
    /// `sup |u − u_source|` when the boundary source defines a whole field.
    pub reference_deviation: Option<f64>,
    pub dilatation: Option<DilatationSummary>,
    pub dilatation_error: Option<String>,
    /// Limit and decay of `∇u − Ax` at the window radii.
    pub gradient_limit: Option<DecayFit>,
    pub expansion: ExpansionCoefficients,
    pub hessian_limit: HessianLimit,
    pub divergence: DivergenceEstimate,
    pub laurent: LaurentSummary,
    pub derivative_decay: DerivativeDecay,
    pub profiles: Vec<ProfileRow>,
    pub decay_tables: Vec<DecayTable>,
    pub assertions: Vec<AssertionOutcome>,
    pub passed: bool,
}

/// Output of a run: the report and the analyzed field.
pub struct RunOutput {
    pub report: Report,
    pub field: ScalarField,
}

fn source_field(grid: &Arc<AnnularGrid>, boundary: &BoundaryConfig) -> Result<ScalarField, CliError> {
    let field = match boundary {
        BoundaryConfig::RadialReference { a } => {
            if !(*a >= 0.0) {
                return Err(CliError::Config(format!("radial_reference needs a ≥ 0, got {a}")));
            }
            ScalarField::from_polar_fn(grid.clone(), |r, _| radial_ma_reference(*a, r).u)
        }
        BoundaryConfig::ExplicitPolynomial { a, b, d, c, e } => {
            let coef = [a[0], a[1], a[2], b[0], b[1], *d, *c, e[0], e[1]];
            ScalarField::from_fn(grid.clone(), |x| extlab_core::expansion::evaluate_basis(&coef, x))
        }
        BoundaryConfig::File { path } => return load_field(path, grid),
    };
    field.map_err(|e| CliError::Config(format!("boundary data: {e}")))
}

/// Reads a scalar snapshot and checks it lives on `grid`.
pub fn load_field(path: &std::path::Path, grid: &Arc<AnnularGrid>) -> Result<ScalarField, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let snap = read_snapshot(BufReader::new(file), grid.order())
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let Snapshot::Scalar(u) = snap else {
        return Err(CliError::Config(format!("{}: expected a scalar field", path.display())));
    };
    if u.grid().spec() != grid.spec() {
        return Err(CliError::Config(format!("{}: snapshot grid differs from the scenario grid", path.display())));
    }
    Ok(u)
}

/// Runs the scenario: solve when an operator is set, otherwise analyze the source field.
pub fn run_scenario(s: &Scenario) -> Result<RunOutput, CliError> {
    s.validate()?;
    let grid = s.grid.build()?;
    let src = source_field(&grid, &s.boundary)?;
    let last = grid.n_r() - 1;
    let (u, solve) = match s.operator.spec() {
        Some(spec) => {
            let (gi, go) = (src.ring(0).to_vec(), src.ring(last).to_vec());
            let u0 = default_initial_guess(&grid, &gi, &go).map_err(|e| run_err(s, e))?;
            let sol = newton_solve(&spec, &gi, &go, &u0, None, &s.solver.options()).map_err(|e| run_err(s, e))?;
            let summary = SolveSummary {
                iterations: sol.trace.iterations(),
                initial_residual: sol.trace.initial_residual,
                final_residual: sol.trace.final_residual,
                tolerance: s.solver.tol,
                steps: sol.trace.steps.clone(),
            };
            (sol.u, Some(summary))
        }
        None => (src.clone(), None),
    };
    let reference = match s.boundary {
        BoundaryConfig::File { .. } => None,
        _ => Some(src),
    };
    analyze(s, u, solve, reference.as_ref(), if s.operator.spec().is_some() { "solve" } else { "load" })
}

/// Analyzes a field read from `path` under the scenario's windows and assertions.
pub fn analyze_file(s: &Scenario, path: &std::path::Path) -> Result<RunOutput, CliError> {
    s.validate()?;
    let grid = s.grid.build()?;
    let u = load_field(path, &grid)?;
    analyze(s, u, None, None, "analyze")
}

fn run_err(s: &Scenario, e: impl std::fmt::Display) -> CliError {
    CliError::Run(format!("scenario {}: {e}", s.name))
}

fn gradient_dilatation(s: &Scenario, u: &ScalarField) -> (Option<DilatationSummary>, Option<String>) {
    let w = gradient(u);
    let (gamma, linear_bound) = match s.operator.spec() {
        Some(spec) => {
            let h = hessian(u);
            let a: Vec<Sym2> = h.values().iter().map(|m| spec.derivative(m)).collect();
            match ellipticity_constants(&a) {
                Ok(c) => (Some(c.gamma), Some(extlab_core::qcmap::gradient_map_bound(c.gamma))),
                Err(_) => (None, None),
            }
        }
        None => (None, None),
    };
    let mut errors = Vec::new();
    for (label, map) in [("(u1, u2)", w.clone()), ("(u2, u1)", w.swapped())] {
        match dilatation_field(&map, Derivatives::Stencil) {
            Ok(r) => {
                return (
                    Some(DilatationSummary {
                        orientation: label.into(),
                        k_max: r.k_min,
                        alpha: r.alpha,
                        jacobian_min: r.jacobian_min,
                        degenerate_nodes: r.degenerate_nodes,
                        gamma,
                        linear_bound,
                    }),
                    None,
                )
            }
            Err(QcError::OrientationFailure(r)) => {
                errors.push(format!("{label}: {} orientation failures", r.orientation_failures.len()))
            }
            Err(e) => errors.push(format!("{label}: {e}")),
        }
    }
    (None, Some(errors.join("; ")))
}

fn pointwise_k(u: &ScalarField, orientation: Option<&str>) -> Vec<f64> {
    let w = gradient(u);
    let map = if orientation == Some("(u2, u1)") { w.swapped() } else { w };
    match dilatation_field(&map, Derivatives::Stencil) {
        Ok(r) => r.k_field.iter().map(|k| k.unwrap_or(1.0)).collect(),
        Err(QcError::OrientationFailure(r)) => r.k_field.iter().map(|k| k.unwrap_or(f64::NAN)).collect(),
        Err(_) => vec![f64::NAN; u.grid().len()],
    }
}

fn window_radii(windows: &[(f64, f64)]) -> Vec<f64> {
    let mut r: Vec<f64> = windows.iter().flat_map(|&(lo, hi)| [lo, hi]).collect();
    r.sort_by(f64::total_cmp);
    r.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    r
}

fn table(name: &str, fit: &DecayFit) -> DecayTable {
    DecayTable {
        name: name.into(),
        exponent: fit.exponent.is_finite().then_some(fit.exponent),
        samples: fit
            .windows
            .iter()
            .filter(|s| s.deviation.is_finite() && s.deviation > 0.0)
            .map(|s| (s.radius, s.deviation))
            .collect(),
    }
}

fn analyze(
    s: &Scenario,
    u: ScalarField,
    solve: Option<SolveSummary>,
    reference: Option<&ScalarField>,
    mode: &str,
) -> Result<RunOutput, CliError> {
    let g = u.grid().clone();
    let ctx = |e: &dyn std::fmt::Display| CliError::Run(format!("scenario {}: {e}", s.name));
    let reference_deviation =
        reference.map(|r| u.axpby(1.0, r, -1.0).map(|d| d.max_abs())).transpose().map_err(|e| ctx(&e))?;
    let expansion = fit_expansion(&u, &s.windows).map_err(|e| ctx(&e))?;
    let (a, hfit) = hessian_limit(&u, &s.windows).map_err(|e| ctx(&e))?;
    let r_div = g.radius(g.nearest_ring(s.windows.iter().map(|w| w.1).fold(0.0, f64::max)));
    let divergence = d_from_divergence(&u, a, r_div).map_err(|e| ctx(&e))?;
    let v = u.minus_fn(|x| 0.5 * a.quad_form(x)).map_err(|e| ctx(&e))?;
    let laurent = match laurent_coefficients(&v, r_div, 2) {
        Ok(l) => LaurentSummary {
            radius: l.radius_used,
            d: Some(l.d()),
            b: Some(l.b()),
            imag_a1: Some(l.a(1).im),
            harmonic_ratio: Some(l.harmonic_ratio),
            skipped: None,
        },
        Err(e) => LaurentSummary {
            radius: r_div,
            d: None,
            b: None,
            imag_a1: None,
            harmonic_ratio: None,
            skipped: Some(e.to_string()),
        },
    };
    let (dilatation, dilatation_error) = gradient_dilatation(s, &u);
    let grad = gradient(&u);
    let shifted = PlanarMapping::new(
        g.clone(),
        (0..g.len()).map(|k| grad.p()[k] - (a.m11 * point(&g, k)[0] + a.m12 * point(&g, k)[1])).collect(),
        (0..g.len()).map(|k| grad.q()[k] - (a.m12 * point(&g, k)[0] + a.m22 * point(&g, k)[1])).collect(),
    )
    .map_err(|e| ctx(&e))?;
    let gradient_limit = limit_and_decay(&shifted, &window_radii(&s.windows)).ok();
    let phi = u.minus_fn(|x| expansion.evaluate(x)).map_err(|e| ctx(&e))?;
    let derivative_decay = derivative_decay(&phi, &s.windows).map_err(|e| ctx(&e))?;

    let h = hessian(&u);
    let kf = pointwise_k(&u, dilatation.as_ref().map(|d| d.orientation.as_str()));
    let profiles = (0..g.n_r())
        .map(|i| {
            let nodes = (0..g.n_theta()).map(|j| g.index(i, j));
            ProfileRow {
                radius: g.radius(i),
                u_mean: u.ring(i).iter().sum::<f64>() / g.n_theta() as f64,
                hessian_deviation: nodes.clone().map(|k| h.values()[k].sub(&a).spectral_norm()).fold(0.0, f64::max),
                expansion_residual: phi.ring(i).iter().fold(0.0, |m, v| m.max(v.abs())),
                k_max: nodes.map(|k| kf[k]).filter(|k| k.is_finite()).fold(1.0, f64::max),
            }
        })
        .collect();
    let mut decay_tables =
        vec![table("hessian_deviation", &hfit), table("expansion_residual", &expansion.residual_fit)];
    if let Some(gl) = &gradient_limit {
        decay_tables.push(table("gradient_deviation", gl));
    }
    for (name, fit) in [
        ("residual_d1", &derivative_decay.first),
        ("residual_d2", &derivative_decay.second),
        ("residual_d3", &derivative_decay.third),
    ] {
        decay_tables.push(table(name, fit));
    }

    let mut report = Report {
        scenario: s.clone(),
        mode: mode.into(),
        solve,
        reference_deviation,
        dilatation,
        dilatation_error,
        gradient_limit,
        expansion,
        hessian_limit: HessianLimit { a, fit: hfit },
        divergence,
        laurent,
        derivative_decay,
        profiles,
        decay_tables,
        assertions: Vec::new(),
        passed: false,
    };
    report.assertions = evaluate_assertions(&report);
    report.passed = report.assertions.iter().all(|a| a.passed);
    Ok(RunOutput { report, field: u })
}

fn point(g: &AnnularGrid, k: usize) -> [f64; 2] {
    let (i, j) = g.ring_angle(k);
    g.point(i, j)
}

fn within(measured: &[f64], expected: &[f64], tol: f64) -> bool {
    measured.iter().zip(expected).all(|(m, e)| (m - e).abs() <= tol)
}

fn evaluate_assertions(r: &Report) -> Vec<AssertionOutcome> {
    let s = &r.scenario.assertions;
    let e = &r.expansion;
    let final_window = e
        .windows
        .iter()
        .max_by(|x, y| x.r_hi.total_cmp(&y.r_hi))
        .map_or(String::new(), |w| format!("window [{}, {}]", w.r_lo, w.r_hi));
    let mut out = Vec::new();
    let mut push =
        |name: &str, measured: Vec<f64>, expected: Vec<f64>, tolerance: f64, context: String, passed: bool| {
            out.push(AssertionOutcome { name: name.into(), measured, expected, tolerance, context, passed });
        };
    if let Some(x) = &s.a {
        let m = vec![e.a.m11, e.a.m12, e.a.m22];
        let ok = within(&m, &x.value, x.tol);
        push("A", m, x.value.to_vec(), x.tol, final_window.clone(), ok);
    }
    if let Some(x) = &s.b {
        let m = e.b.to_vec();
        let ok = within(&m, &x.value, x.tol);
        push("b", m, x.value.to_vec(), x.tol, final_window.clone(), ok);
    }
    if let Some(x) = &s.d {
        let ok = within(&[e.d], &[x.value], x.tol);
        push("d", vec![e.d], vec![x.value], x.tol, final_window.clone(), ok);
    }
    if let Some(x) = &s.c {
        let ok = within(&[e.c], &[x.value], x.tol);
        push("c", vec![e.c], vec![x.value], x.tol, final_window.clone(), ok);
    }
    if let Some(x) = &s.e {
        let m = e.e.to_vec();
        let ok = within(&m, &x.value, x.tol);
        push("e", m, x.value.to_vec(), x.tol, final_window.clone(), ok);
    }
    if let Some(tol) = s.d_consistency {
        let mut ds = vec![e.d, r.divergence.d];
        ds.extend(r.laurent.d);
        let spread =
            ds.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - ds.iter().cloned().fold(f64::INFINITY, f64::min);
        push(
            "d_consistency",
            ds,
            Vec::new(),
            tol,
            format!("{final_window}; divergence and contour at R = {}", r.divergence.radius),
            spread <= tol,
        );
    }
    if let Some(kmax) = s.dilatation_max {
        let (m, ok) = match &r.dilatation {
            Some(d) => (vec![d.k_max], d.k_max <= kmax),
            None => (Vec::new(), false),
        };
        push("dilatation_max", m, vec![kmax], 0.0, "all interior nodes".into(), ok);
    }
    if let Some(pmin) = s.hessian_decay_min {
        let p = r.hessian_limit.fit.exponent;
        let ok = p >= pmin;
        push("hessian_decay_min", vec![p], vec![pmin], 0.0, "analysis windows".into(), ok);
    }
    out
}

/// Alpha of a measured dilatation, for table output.
pub fn alpha_of(k: f64) -> Option<f64> {
    holder_exponent(k).ok()
}

impl OperatorConfig {
    pub fn label(&self) -> &'static str {
        match self {
            OperatorConfig::MongeAmpere => "monge_ampere",
            OperatorConfig::SpecialLagrangian { .. } => "special_lagrangian",
            OperatorConfig::LinearTrace { .. } => "linear_trace",
            OperatorConfig::LinearCustom { .. } => "linear_custom",
            OperatorConfig::None => "none",
        }
    }
}
