//! Registry of acceptance criteria with their tolerances.

use std::collections::BTreeMap;
use std::f64::consts::{LN_2, PI};
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use extlab_core::elliptic::{
    ellipticity_constants, newtonian_potential, potential_growth, solve_linear_dirichlet, LinearCoefficients,
};
use extlab_core::expansion::{
    bootstrap_schedule, d_from_divergence, fit_expansion, hessian_limit, laurent_coefficients,
    laurent_coefficients_from_gradient, literal_step_schedule,
};
use extlab_core::fit::observed_order;
use extlab_core::grid::{
    build_grid, gradient, laplacian, AnnularGrid, PlanarMapping, ScalarField, Spacing, SymMatrixField,
};
use extlab_core::nonlinear::{
    default_initial_guess, monge_ampere_spec, newton_solve, radial_ma_field, special_lagrangian_spec, NewtonOptions,
    NewtonSolution,
};
use extlab_core::qcmap::{
    dilatation_field, gradient_map_bound, holder_exponent, limit_and_decay, verify_kelvin_identities, Derivatives,
};
use extlab_core::Sym2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

const SEED: u64 = 0x5eed_2024;
const MA_WINDOWS: [(f64, f64); 3] = [(8.0, 16.0), (16.0, 32.0), (32.0, 64.0)];
const MA_FAMILY: [f64; 3] = [0.0, 1.0, 2.0];

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("no scenarios: the criteria registry is empty")]
    Empty,
    #[error("unknown tolerance key `{0}`")]
    UnknownTolerance(String),
    #[error("unknown criterion {0}")]
    UnknownCriterion(u32),
}

/// Named tolerances; every criterion reads its bounds from here.
#[derive(Clone, Debug, Serialize)]
pub struct Tolerances(BTreeMap<&'static str, f64>);

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances(BTreeMap::from([
            ("d_fit", 1e-3),
            ("d_div", 1e-4),
            ("run_seconds", 60.0),
            ("c_fit", 1e-2),
            ("holder_identity", 1e-12),
            ("kelvin_exact", 1e-10),
            ("kelvin_order", 1.8),
            ("qc_margin", 0.05),
            ("newton_residual", 1e-10),
            ("newton_iterations", 12.0),
            ("newton_order", 1.8),
            ("newton_seconds", 300.0),
            ("sl_ma", 1e-8),
            ("decay_relative", 0.05),
            ("laurent", 1e-10),
            ("laurent_imag", 1e-8),
            ("potential_order", 1.8),
            ("growth_exponent", 0.6),
            ("delta_max", 0.125),
            ("hessian_relative", 0.10),
            ("triangle", 2e-3),
        ]))
    }
}

impl Tolerances {
    pub fn get(&self, key: &str) -> f64 {
        *self.0.get(key).unwrap_or_else(|| panic!("tolerance `{key}` is registered"))
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<(), VerifyError> {
        match self.0.get_mut(key) {
            Some(v) => {
                *v = value;
                Ok(())
            }
            None => Err(VerifyError::UnknownTolerance(key.into())),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &&'static str> {
        self.0.keys()
    }
}

/// A measured value against its bound.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub label: String,
    pub measured: f64,
    pub bound: f64,
    /// `true` when `measured ≤ bound` is required, `false` for `measured ≥ bound`.
    pub upper: bool,
    pub passed: bool,
}

impl Check {
    pub fn at_most(label: impl Into<String>, measured: f64, bound: f64) -> Check {
        Check { label: label.into(), measured, bound, upper: true, passed: measured <= bound }
    }
    pub fn at_least(label: impl Into<String>, measured: f64, bound: f64) -> Check {
        Check { label: label.into(), measured, bound, upper: false, passed: measured >= bound }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: &'static str,
    pub checks: Vec<Check>,
    pub error: Option<String>,
    pub seconds: f64,
    pub passed: bool,
}

impl CriterionOutcome {
    /// One line: id, verdict, name, and the worst check.
    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let detail = match &self.error {
            Some(e) => format!("error: {e}"),
            None => {
                let worst = self.checks.iter().find(|c| !c.passed).or(self.checks.last());
                match worst {
                    Some(c) => format!(
                        "{} = {:.3e} {} {:.3e} ({} checks)",
                        c.label,
                        c.measured,
                        if c.upper { "<=" } else { ">=" },
                        c.bound,
                        self.checks.len()
                    ),
                    None => "no checks".into(),
                }
            }
        };
        format!("criterion {:>2} [{verdict}] {:<34} {detail} [{:.1}s]", self.id, self.name, self.seconds)
    }
}

/// Radial Monge–Ampère solution on `grid(1, 64, 256, 128)`.
pub struct MaRun {
    pub a: f64,
    pub solution: NewtonSolution,
    pub seconds: f64,
}

/// Shared state of a suite run; the radial Monge–Ampère family is solved once.
pub struct Context {
    pub tol: Tolerances,
    ma: OnceLock<Result<Vec<Arc<MaRun>>, String>>,
}

impl Context {
    pub fn new(tol: Tolerances) -> Context {
        Context { tol, ma: OnceLock::new() }
    }

    pub fn ma_runs(&self) -> Result<&[Arc<MaRun>], String> {
        self.ma
            .get_or_init(|| {
                let g = build_grid(1.0, 64.0, 256, 128, Spacing::LogRadial).map_err(|e| e.to_string())?;
                MA_FAMILY
                    .iter()
                    .map(|&a| {
                        let t = Instant::now();
                        let solution = solve_radial_ma(&g, a).map_err(|e| format!("a = {a}: {e}"))?;
                        Ok(Arc::new(MaRun { a, solution, seconds: t.elapsed().as_secs_f64() }))
                    })
                    .collect()
            })
            .as_deref()
            .map_err(Clone::clone)
    }
}

fn solve_radial_ma(g: &Arc<AnnularGrid>, a: f64) -> Result<NewtonSolution, String> {
    let exact = radial_ma_field(g, a);
    let last = g.n_r() - 1;
    let (gi, go) = (exact.ring(0), exact.ring(last));
    let u0 = default_initial_guess(g, gi, go).map_err(|e| e.to_string())?;
    newton_solve(&monge_ampere_spec(), gi, go, &u0, None, &NewtonOptions::default()).map_err(|e| e.to_string())
}

type Runner = fn(&Context) -> Result<Vec<Check>, String>;

pub struct Criterion {
    pub id: u32,
    pub name: &'static str,
    run: Runner,
}

impl Criterion {
    pub fn run(&self, ctx: &Context) -> CriterionOutcome {
        let t = Instant::now();
        let result = (self.run)(ctx);
        let seconds = t.elapsed().as_secs_f64();
        match result {
            Ok(checks) => {
                let passed = !checks.is_empty() && checks.iter().all(|c| c.passed);
                CriterionOutcome { id: self.id, name: self.name, checks, error: None, seconds, passed }
            }
            Err(e) => CriterionOutcome {
                id: self.id,
                name: self.name,
                checks: Vec::new(),
                error: Some(e),
                seconds,
                passed: false,
            },
        }
    }
}

pub fn registry() -> Vec<Criterion> {
    vec![
        Criterion { id: 1, name: "d-recovery, radial Monge-Ampere", run: d_recovery },
        Criterion { id: 2, name: "constant-term recovery", run: constant_term },
        Criterion { id: 3, name: "Holder-exponent formula", run: holder_formula },
        Criterion { id: 4, name: "Kelvin identities", run: kelvin_identities },
        Criterion { id: 5, name: "gradient-map quasiconformality", run: gradient_map_qc },
        Criterion { id: 6, name: "Newton solver", run: newton_convergence },
        Criterion { id: 7, name: "special Lagrangian cross-check", run: special_lagrangian },
        Criterion { id: 8, name: "decay-rate estimator", run: decay_estimator },
        Criterion { id: 9, name: "Laurent extraction", run: laurent_extraction },
        Criterion { id: 10, name: "Newtonian potential", run: potential },
        Criterion { id: 11, name: "bootstrap scheduler", run: bootstrap },
        Criterion { id: 12, name: "Hessian-limit decay and consistency", run: hessian_decay },
    ]
}

/// Runs `criteria` in id order; with `parallel` they run concurrently but are reported in order.
pub fn run_suite(criteria: &[Criterion], ctx: &Context, parallel: bool) -> Result<Vec<CriterionOutcome>, VerifyError> {
    if criteria.is_empty() {
        return Err(VerifyError::Empty);
    }
    Ok(if parallel {
        criteria.par_iter().map(|c| c.run(ctx)).collect()
    } else {
        criteria.iter().map(|c| c.run(ctx)).collect()
    })
}

/// Keeps the criteria whose ids are listed; all when `ids` is empty.
pub fn select(ids: &[u32]) -> Result<Vec<Criterion>, VerifyError> {
    let all = registry();
    if let Some(bad) = ids.iter().find(|id| !all.iter().any(|c| c.id == **id)) {
        return Err(VerifyError::UnknownCriterion(*bad));
    }
    Ok(all.into_iter().filter(|c| ids.is_empty() || ids.contains(&c.id)).collect())
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn d_recovery(ctx: &Context) -> Result<Vec<Check>, String> {
    let t = &ctx.tol;
    let mut checks = Vec::new();
    for run in ctx.ma_runs()? {
        let start = Instant::now();
        let u = &run.solution.u;
        let fit = fit_expansion(u, &MA_WINDOWS).map_err(err)?;
        let div = d_from_divergence(u, Sym2::IDENTITY, 64.0).map_err(err)?;
        let seconds = run.seconds + start.elapsed().as_secs_f64();
        let a = run.a;
        checks.push(Check::at_most(format!("a={a} |fit d - a/2|"), (fit.d - a / 2.0).abs(), t.get("d_fit")));
        checks.push(Check::at_most(format!("a={a} |divergence d - a/2|"), (div.d - a / 2.0).abs(), t.get("d_div")));
        checks.push(Check::at_most(format!("a={a} seconds"), seconds, t.get("run_seconds")));
    }
    Ok(checks)
}

fn constant_term(ctx: &Context) -> Result<Vec<Check>, String> {
    let run = ctx.ma_runs()?.iter().find(|r| r.a == 2.0).ok_or("a = 2 run missing")?;
    let fit = fit_expansion(&run.solution.u, &MA_WINDOWS).map_err(err)?;
    Ok(vec![Check::at_most("|c - (1/2 + log 2)|", (fit.c - (0.5 + LN_2)).abs(), ctx.tol.get("c_fit"))])
}

fn holder_formula(ctx: &Context) -> Result<Vec<Check>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let k: f64 = rng.gen_range(1.0..=100.0);
        let a = holder_exponent(k).map_err(err)?;
        worst = worst.max((a + 1.0 / a - 2.0 * k).abs());
    }
    Ok(vec![
        Check::at_most("max |alpha + 1/alpha - 2K|", worst, ctx.tol.get("holder_identity")),
        Check::at_most("|alpha(1) - 1|", (holder_exponent(1.0).map_err(err)? - 1.0).abs(), 0.0),
        Check::at_most("|alpha(5/4) - 1/2|", (holder_exponent(1.25).map_err(err)? - 0.5).abs(), 0.0),
    ])
}

type ExactMap = (&'static str, fn([f64; 2]) -> [f64; 2], fn([f64; 2]) -> [f64; 4]);

fn kelvin_test_maps() -> [ExactMap; 3] {
    [
        ("identity", |x| x, |_| [1.0, 0.0, 0.0, 1.0]),
        (
            "z^2",
            |x| [x[0] * x[0] - x[1] * x[1], 2.0 * x[0] * x[1]],
            |x| [2.0 * x[0], -2.0 * x[1], 2.0 * x[1], 2.0 * x[0]],
        ),
        (
            "x/|x|^2",
            |x| {
                let r2 = x[0] * x[0] + x[1] * x[1];
                [x[0] / r2, x[1] / r2]
            },
            |x| {
                let r4 = (x[0] * x[0] + x[1] * x[1]).powi(2);
                let (a, b) = ((x[1] * x[1] - x[0] * x[0]) / r4, -2.0 * x[0] * x[1] / r4);
                [a, b, b, -a]
            },
        ),
    ]
}

fn kelvin_identities(ctx: &Context) -> Result<Vec<Check>, String> {
    let t = &ctx.tol;
    let mut checks = Vec::new();
    let g = build_grid(1.0, 4.0, 32, 64, Spacing::LogRadial).map_err(err)?;
    for (name, map, deriv) in kelvin_test_maps() {
        let w = PlanarMapping::from_fn(g.clone(), map).map_err(err)?;
        let d = move |x: [f64; 2]| deriv(x);
        let r = verify_kelvin_identities(&w, Derivatives::Exact(&d)).map_err(err)?;
        checks.push(Check::at_most(
            format!("{name} exact residual"),
            r.gradient_norm.max(r.jacobian),
            t.get("kelvin_exact"),
        ));
    }
    for (name, map, _) in &kelvin_test_maps()[1..] {
        let mut samples = Vec::new();
        for n in [16usize, 32, 64] {
            let g = build_grid(1.0, 4.0, n, 2 * n, Spacing::LogRadial).map_err(err)?;
            let w = PlanarMapping::from_fn(g.clone(), *map).map_err(err)?;
            let r = verify_kelvin_identities(&w, Derivatives::Stencil).map_err(err)?;
            samples.push((g.mesh_size(), r.gradient_norm.max(r.jacobian)));
        }
        checks.push(Check::at_least(
            format!("{name} stencil observed order"),
            observed_order(&samples),
            t.get("kelvin_order"),
        ));
    }
    Ok(checks)
}

fn rotation(phi: f64, d1: f64, d2: f64) -> Sym2 {
    Sym2::diag(d1, d2).rotated(phi)
}

fn gradient_map_qc(ctx: &Context) -> Result<Vec<Check>, String> {
    let g = build_grid(1.0, 8.0, 65, 64, Spacing::LogRadial).map_err(err)?;
    let mut checks = Vec::new();
    for gamma in [1.0, 2.0, 3.0] {
        let a = rotation(0.3, 1.0, gamma);
        let b = rotation(0.3, gamma, -1.0);
        let ainv = a.inverse().ok_or("singular coefficient")?;
        // ½xᵀBx with tr(AB) = 0 plus the fundamental solution ½ log(xᵀA⁻¹x).
        let exact = move |x: [f64; 2]| 0.5 * b.quad_form(x) + 0.25 * ainv.quad_form(x).ln() + 0.3 * x[0];
        let coeffs = LinearCoefficients::new(SymMatrixField::uniform(g.clone(), a)).map_err(err)?;
        let measured_gamma = ellipticity_constants(&[a]).map_err(err)?.gamma;
        let data = ScalarField::from_fn(g.clone(), exact).map_err(err)?;
        let u = solve_linear_dirichlet(&coeffs, &ScalarField::zeros(g.clone()), data.ring(0), data.ring(g.n_r() - 1))
            .map_err(err)?;
        let rep = dilatation_field(&gradient(&u).swapped(), Derivatives::Stencil).map_err(err)?;
        checks.push(Check::at_most(
            format!("gamma={gamma} K_min"),
            rep.k_min,
            gradient_map_bound(measured_gamma) + ctx.tol.get("qc_margin"),
        ));
    }
    Ok(checks)
}

fn newton_convergence(ctx: &Context) -> Result<Vec<Check>, String> {
    let t = &ctx.tol;
    let start = Instant::now();
    let mut checks = Vec::new();
    let mut errors = Vec::new();
    for (n_r, n_t) in [(33usize, 32usize), (65, 64), (129, 128)] {
        let g = build_grid(1.0, 16.0, n_r, n_t, Spacing::LogRadial).map_err(err)?;
        let sol = solve_radial_ma(&g, 1.0)?;
        let e = sol.u.axpby(1.0, &radial_ma_field(&g, 1.0), -1.0).map_err(err)?.max_abs();
        errors.push((g.mesh_size(), e));
        checks.push(Check::at_most(format!("n_r={n_r} residual"), sol.trace.final_residual, t.get("newton_residual")));
        checks.push(Check::at_most(
            format!("n_r={n_r} iterations"),
            sol.trace.iterations() as f64,
            t.get("newton_iterations"),
        ));
    }
    checks.push(Check::at_least("observed order of sup error", observed_order(&errors), t.get("newton_order")));
    checks.push(Check::at_most("total seconds", start.elapsed().as_secs_f64(), t.get("newton_seconds")));
    Ok(checks)
}

fn special_lagrangian(ctx: &Context) -> Result<Vec<Check>, String> {
    let g = build_grid(1.0, 16.0, 65, 64, Spacing::LogRadial).map_err(err)?;
    let ma = solve_radial_ma(&g, 1.0)?;
    let exact = radial_ma_field(&g, 1.0);
    let (gi, go) = (exact.ring(0), exact.ring(g.n_r() - 1));
    let u0 = default_initial_guess(&g, gi, go).map_err(err)?;
    let sl =
        newton_solve(&special_lagrangian_spec(PI / 2.0), gi, go, &u0, None, &NewtonOptions::default()).map_err(err)?;
    let diff = sl.u.axpby(1.0, &ma.u, -1.0).map_err(err)?.max_abs();
    Ok(vec![Check::at_most("sup |u_SL - u_MA|", diff, ctx.tol.get("sl_ma"))])
}

fn decay_estimator(ctx: &Context) -> Result<Vec<Check>, String> {
    let rel = ctx.tol.get("decay_relative");
    let g = build_grid(1.0, 1024.0, 256, 64, Spacing::LogRadial).map_err(err)?;
    let radii = [8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0];
    let windows: Vec<(f64, f64)> = radii.windows(2).map(|w| (w[0], w[1])).collect();
    let mut checks = Vec::new();
    for p in [0.3, 0.5, 1.0, 2.0] {
        // Mapping tending to (1, −2) with sup deviation r^{−p}.
        let w = PlanarMapping::from_fn(g.clone(), |x| {
            let r = x[0].hypot(x[1]);
            let s = r.powf(-p - 1.0);
            [1.0 + s * x[0], -2.0 + s * x[1]]
        })
        .map_err(err)?;
        let fit = limit_and_decay(&w, &radii).map_err(err)?;
        checks.push(Check::at_most(format!("p={p} mapping decay error"), (fit.exponent / p - 1.0).abs(), rel));
        // Hessian of ½|x|² + r^{2−p}, or of log r when p = 2, deviates from I like r^{−p}.
        let u =
            ScalarField::from_polar_fn(g.clone(), |r, _| 0.5 * r * r + if p == 2.0 { r.ln() } else { r.powf(2.0 - p) })
                .map_err(err)?;
        let (_, hfit) = hessian_limit(&u, &windows).map_err(err)?;
        checks.push(Check::at_most(format!("p={p} Hessian decay error"), (hfit.exponent / p - 1.0).abs(), rel));
    }
    Ok(checks)
}

/// Name, field and the expected `(Re, Im)` of the coefficients of `1, z⁻¹, z⁻²`.
type LaurentCase = (&'static str, fn([f64; 2]) -> f64, [(f64, f64); 3]);

fn laurent_extraction(ctx: &Context) -> Result<Vec<Check>, String> {
    let t = &ctx.tol;
    let g = build_grid(1.0, 64.0, 256, 128, Spacing::LogRadial).map_err(err)?;
    let cases: [LaurentCase; 3] = [
        ("log|x|", |x| 0.5 * (x[0] * x[0] + x[1] * x[1]).ln(), [(0.0, 0.0), (1.0, 0.0), (0.0, 0.0)]),
        ("x1", |x| x[0], [(1.0, 0.0), (0.0, 0.0), (0.0, 0.0)]),
        ("Re(1/z)", |x| x[0] / (x[0] * x[0] + x[1] * x[1]), [(0.0, 0.0), (0.0, 0.0), (-1.0, 0.0)]),
    ];
    let mut checks = Vec::new();
    for (name, f, expected) in cases {
        let u = ScalarField::from_fn(g.clone(), f).map_err(err)?;
        let l = laurent_coefficients(&u, 16.0, 4).map_err(err)?;
        let worst = l
            .coefficients
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let e = expected.get(k).copied().unwrap_or((0.0, 0.0));
                (c.re - e.0).abs().max((c.im - e.1).abs())
            })
            .fold(0.0, f64::max);
        checks.push(Check::at_most(format!("{name} coefficient error"), worst, t.get("laurent")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 9);
    let mut imag: f64 = 0.0;
    for _ in 0..20 {
        let c: Vec<f64> = (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // Re of c0 z + c1 z² + (c2 + i c3)/z + (c4 + i c5)/z² plus c6 log|z|.
        let f = |x: [f64; 2]| {
            let (a, b) = (x[0], x[1]);
            let r2 = a * a + b * b;
            let inv = (a / r2, -b / r2);
            let inv2 = (inv.0 * inv.0 - inv.1 * inv.1, 2.0 * inv.0 * inv.1);
            c[0] * a + c[1] * (a * a - b * b) + c[2] * inv.0 - c[3] * inv.1 + c[4] * inv2.0 - c[5] * inv2.1
                + 0.5 * c[6] * r2.ln()
        };
        let u = ScalarField::from_fn(g.clone(), f).map_err(err)?;
        imag = imag.max(laurent_coefficients(&u, 16.0, 3).map_err(err)?.a(1).im.abs());
        let w = gradient(&u);
        imag = imag.max(laurent_coefficients_from_gradient(&w, 16.0, 3).map_err(err)?.a(1).im.abs());
    }
    checks.push(Check::at_most("max |Im a_-1| on real harmonic samples", imag, t.get("laurent_imag")));
    Ok(checks)
}

fn potential(ctx: &Context) -> Result<Vec<Check>, String> {
    let t = &ctx.tol;
    let mut samples = Vec::new();
    for n in [32usize, 64, 128] {
        let g = build_grid(1.0, 8.0, n, n, Spacing::LogRadial).map_err(err)?;
        let f = ScalarField::from_polar_fn(g.clone(), |r, _| r.powi(-4)).map_err(err)?;
        let targets: Vec<[f64; 2]> = (0..g.len())
            .map(|k| {
                let (i, j) = g.ring_angle(k);
                g.point(i, j)
            })
            .collect();
        let pot = newtonian_potential(&f, &targets).map_err(err)?;
        let u = ScalarField::new(g.clone(), pot.values).map_err(err)?;
        let lap = laplacian(&u);
        // Interior sub-annulus away from the density's jump at the boundary circles.
        let (lo, hi) = (1.25 * g.r_inner(), g.r_outer() / 1.25);
        let res = (0..g.len())
            .filter(|&k| {
                let r = g.radius(g.ring_angle(k).0);
                r >= lo && r <= hi
            })
            .map(|k| (lap.values()[k] - f.values()[k]).abs())
            .fold(0.0, f64::max);
        samples.push((g.mesh_size(), res));
    }
    let g = build_grid(1.0, 1024.0, 256, 64, Spacing::LogRadial).map_err(err)?;
    let f = ScalarField::from_polar_fn(g, |r, _| r.powf(-1.5)).map_err(err)?;
    let growth = potential_growth(&f, &[32.0, 64.0, 128.0, 256.0, 512.0], 16).map_err(err)?;
    Ok(vec![
        Check::at_least(
            "observed order of interior Laplacian residual",
            observed_order(&samples),
            t.get("potential_order"),
        ),
        Check::at_most("growth exponent for beta = 3/2", growth.exponent, t.get("growth_exponent")),
    ])
}

fn bootstrap(ctx: &Context) -> Result<Vec<Check>, String> {
    let delta_max = ctx.tol.get("delta_max");
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 11);
    let (mut min_delta, mut max_delta, mut identity, mut eps_margin) = (f64::INFINITY, 0.0f64, 0.0f64, f64::INFINITY);
    for _ in 0..1000 {
        let alpha: f64 = rng.gen_range(0.01..0.99);
        let s = bootstrap_schedule(alpha).map_err(err)?;
        let p = 2f64.powi(s.n as i32);
        min_delta = min_delta.min(s.delta);
        max_delta = max_delta.max(s.delta);
        identity = identity.max((s.delta - (1.0 - p * alpha + (p - 1.0) * s.epsilon)).abs());
        eps_margin = eps_margin.min(s.epsilon).min(alpha - s.epsilon);
    }
    let lit = literal_step_schedule(2.0 - 3f64.sqrt(), 0.02).map_err(err)?;
    Ok(vec![
        Check::at_least("min delta (strict)", min_delta, f64::MIN_POSITIVE),
        Check::at_most("max delta", max_delta, delta_max - 1e-15),
        Check::at_most("max |delta - formula|", identity, 1e-14),
        Check::at_least("min(epsilon, alpha - epsilon)", eps_margin, f64::MIN_POSITIVE),
        Check::at_most("literal formula delta at alpha = 2 - sqrt 3", lit.delta, -f64::MIN_POSITIVE),
    ])
}

fn hessian_decay(ctx: &Context) -> Result<Vec<Check>, String> {
    let t = &ctx.tol;
    let mut checks = Vec::new();
    for run in ctx.ma_runs()? {
        let u = &run.solution.u;
        let a = run.a;
        let fit = fit_expansion(u, &MA_WINDOWS).map_err(err)?;
        let div = d_from_divergence(u, Sym2::IDENTITY, 64.0).map_err(err)?;
        checks.push(Check::at_most(format!("a={a} |fit d - divergence d|"), (fit.d - div.d).abs(), t.get("triangle")));
        let v = u.minus_fn(|x| 0.5 * (x[0] * x[0] + x[1] * x[1])).map_err(err)?;
        let l = laurent_coefficients(&v, 64.0, 2).map_err(err)?;
        let spread = [(l.d() - fit.d).abs(), (l.d() - div.d).abs()].into_iter().fold(0.0, f64::max);
        checks.push(Check::at_most(format!("a={a} |contour d - others|"), spread, t.get("triangle")));
        if a == 0.0 {
            continue;
        }
        let (_, hfit) = hessian_limit(u, &MA_WINDOWS).map_err(err)?;
        let k = dilatation_field(&gradient(u), Derivatives::Stencil).map_err(err)?;
        checks.push(Check::at_least(format!("a={a} decay exponent vs alpha(K)"), hfit.exponent, k.alpha));
        checks.push(Check::at_most(
            format!("a={a} |exponent/2 - 1|"),
            (hfit.exponent / 2.0 - 1.0).abs(),
            t.get("hessian_relative"),
        ));
    }
    Ok(checks)
}
