use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use extlab_cli::report::{self, Format};
use extlab_cli::run::{analyze_file, run_scenario, RunOutput};
use extlab_cli::scenario::Scenario;
use extlab_cli::verify::{run_suite, select, Context, Tolerances};
use extlab_cli::CliError;

#[derive(Parser)]
#[command(name = "extlab", version, about = "Exterior expansions of fully nonlinear elliptic equations on annuli")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Grid override `r_in,r_out,n_r,n_theta[,spacing]`.
    #[arg(long)]
    grid: Option<String>,
    /// Window override `lo:hi;lo:hi;…`.
    #[arg(long)]
    windows: Option<String>,
    /// Tolerance override `key=value`; repeatable.
    #[arg(long = "tol", value_name = "KEY=VALUE")]
    tol: Vec<String>,
    /// Directory for the report artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Artifact formats; JSON is always written with `--out`.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "json")]
    format: Vec<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario (config file or built-in name) and analyze the solution.
    Solve {
        config: String,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Analyze a stored scalar field under a scenario's windows and assertions.
    Analyze {
        field: PathBuf,
        config: String,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Run the acceptance criteria and print a pass/fail table.
    Verify {
        /// Run criteria concurrently; output order is unchanged.
        #[arg(long)]
        parallel: bool,
        /// Criterion ids to run, comma separated; all by default.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
        /// Tolerance override `key=value`; repeatable.
        #[arg(long = "tol", value_name = "KEY=VALUE")]
        tol: Vec<String>,
        /// Directory for `verify.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-render a stored run directory.
    Report {
        run_dir: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Write into this directory instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_kv(s: &str) -> Result<(&str, f64), CliError> {
    let (k, v) = s.split_once('=').ok_or_else(|| CliError::Usage(format!("--tol expects key=value, got {s:?}")))?;
    let v = v.trim().parse().map_err(|_| CliError::Usage(format!("--tol value in {s:?} is not a number")))?;
    Ok((k.trim(), v))
}

fn apply_overrides(mut s: Scenario, o: &Overrides) -> Result<Scenario, CliError> {
    if let Some(g) = &o.grid {
        s.grid = s.grid.parse_override(g)?;
    }
    if let Some(w) = &o.windows {
        s.windows = Scenario::parse_windows(w)?;
    }
    for kv in &o.tol {
        let (k, v) = parse_kv(kv)?;
        let a = &mut s.assertions;
        let missing = || CliError::Usage(format!("--tol {k}: the scenario has no `{k}` assertion"));
        match k {
            "newton" => s.solver.tol = v,
            "a" => a.a.as_mut().ok_or_else(missing)?.tol = v,
            "b" => a.b.as_mut().ok_or_else(missing)?.tol = v,
            "c" => a.c.as_mut().ok_or_else(missing)?.tol = v,
            "d" => a.d.as_mut().ok_or_else(missing)?.tol = v,
            "e" => a.e.as_mut().ok_or_else(missing)?.tol = v,
            "d_consistency" => a.d_consistency = Some(v),
            "dilatation_max" => a.dilatation_max = Some(v),
            "hessian_decay_min" => a.hessian_decay_min = Some(v),
            other => return Err(CliError::Usage(format!("unknown tolerance key `{other}`"))),
        }
    }
    s.validate()?;
    Ok(s)
}

fn emit(out: &RunOutput, o: &Overrides) -> Result<(), CliError> {
    let r = &out.report;
    match &o.out {
        Some(dir) => {
            for p in report::write_run(dir, out, &o.format)? {
                eprintln!("wrote {}", p.display());
            }
            print!("{}", report::assertion_table(&r.scenario.name, &r.assertions));
        }
        None => {
            if o.format.contains(&Format::Json) {
                print!("{}", report::to_json(r));
            }
            if o.format.contains(&Format::Csv) {
                print!("{}", report::profiles_csv(&r.profiles));
            }
            if o.format.contains(&Format::Svg) {
                print!("{}", report::decay_svg(&r.decay_tables));
            }
            eprint!("{}", report::assertion_table(&r.scenario.name, &r.assertions));
        }
    }
    let failed = r.assertions.iter().filter(|a| !a.passed).count();
    if failed > 0 {
        Err(CliError::Assertion(failed))
    } else {
        Ok(())
    }
}

fn verify(parallel: bool, only: &[u32], tol: &[String], out: Option<&Path>) -> Result<(), CliError> {
    let mut t = Tolerances::default();
    for kv in tol {
        let (k, v) = parse_kv(kv)?;
        t.set(k, v).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let criteria = select(only).map_err(|e| CliError::Usage(e.to_string()))?;
    let ctx = Context::new(t);
    let outcomes = run_suite(&criteria, &ctx, parallel).map_err(|e| CliError::Config(e.to_string()))?;
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("{} of {} criteria passed", outcomes.len() - failed, outcomes.len());
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        let doc = serde_json::json!({ "tolerances": ctx.tol, "criteria": outcomes });
        let p = dir.join("verify.json");
        std::fs::write(&p, serde_json::to_string_pretty(&doc).expect("serializable") + "\n")
            .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
    }
    if failed > 0 {
        Err(CliError::Assertion(failed))
    } else {
        Ok(())
    }
}

fn render(dir: &Path, format: Format, out: Option<&Path>) -> Result<(), CliError> {
    let (raw, stored) = report::load_report(dir)?;
    let (name, text) = match format {
        Format::Json => (report::REPORT_FILE, raw),
        Format::Csv => (report::PROFILE_FILE, report::profiles_csv(&stored.profiles)),
        Format::Svg => (report::PLOT_FILE, report::decay_svg(&stored.decay_tables)),
    };
    match out {
        Some(o) => {
            std::fs::create_dir_all(o).map_err(|e| CliError::Io(format!("{}: {e}", o.display())))?;
            let p = o.join(name);
            std::fs::write(&p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            eprintln!("wrote {}", p.display());
        }
        None => print!("{text}"),
    }
    let scenario = stored.scenario.get("name").and_then(|v| v.as_str()).unwrap_or("?").to_string();
    eprint!("{}", report::assertion_table(&scenario, &stored.assertions));
    if stored.passed {
        Ok(())
    } else {
        Err(CliError::Assertion(stored.assertions.iter().filter(|a| !a.passed).count()))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve { config, opts } => {
            let s = apply_overrides(Scenario::load(&config)?, &opts)?;
            emit(&run_scenario(&s)?, &opts)
        }
        Command::Analyze { field, config, opts } => {
            let s = apply_overrides(Scenario::load(&config)?, &opts)?;
            emit(&analyze_file(&s, &field)?, &opts)
        }
        Command::Verify { parallel, only, tol, out } => verify(parallel, &only, &tol, out.as_deref()),
        Command::Report { run_dir, format, out } => render(&run_dir, format, out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("extlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
