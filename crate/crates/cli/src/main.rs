//! Command-line front end: derive phase dynamics and field equations from
//! model files, integrate mechanics models, evaluate PDE residual grids and
//! run the verification suites.
//!
//! Exit codes: 0 success, 1 check-suite failure, 2 model parse/validation
//! error, 3 inconsistent initial data, 4 data shape mismatch.

mod fielddata;
mod modelfile;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use geomech_core::fieldtheory::{
    field_dynamics, field_el, field_legendre, hamilton_field_equations, pde_residual,
    ResidualKind,
};
use geomech_core::mechanics::{
    euler_lagrange, hamiltonian_dynamics, hamiltonize, lagrangian_dynamics, legendre,
    HamiltonizeResult, MechModel,
};
use geomech_core::numerics::{integrate_phase, NewtonConfig, NumericsError};
use geomech_core::points::PointTuple;
use geomech_core::suites::{run_suite, CheckConfig, SuiteKind};
use geomech_core::system::ImplicitSystem;

use modelfile::{parse_model_file, ParsedModel};

#[derive(Parser)]
#[command(
    name = "geomech",
    about = "Symbolic-numeric engine for variational mechanics and first-order field theory",
    version
)]
struct Cli {
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Newton solver tolerance override.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Latex,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    El,
    Hamilton,
    Dynamics,
}

#[derive(Subcommand)]
enum Command {
    /// Print the phase dynamics, Euler-Lagrange equations and Legendre map
    /// of a model file.
    Derive {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Integrate a mechanics model with the implicit midpoint scheme.
    Integrate(IntegrateArgs),
    /// Run the verification suites.
    Check {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Dimension of V for the theorem-1 suite.
        #[arg(long = "dimV", default_value_t = 4)]
        dim_v: usize,
        /// Dimension of W for the theorem-1 suite.
        #[arg(long = "dimW", default_value_t = 2)]
        dim_w: usize,
        /// Write the machine-readable report here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Evaluate a symbolic field system on grid data.
    Residual {
        file: PathBuf,
        #[arg(long)]
        field_data: PathBuf,
        #[arg(long, value_enum, default_value_t = Which::El)]
        which: Which,
        /// Write per-node residuals as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eliminate velocities: print the Hamiltonian or the generating-family
    /// report.
    Hamiltonize { file: PathBuf },
}

#[derive(Args)]
struct IntegrateArgs {
    file: PathBuf,
    /// Initial state, comma separated: x1,..,xn,p1,..,pn.
    #[arg(long)]
    z0: String,
    #[arg(long, default_value_t = 0.0)]
    t0: f64,
    #[arg(long)]
    t1: f64,
    #[arg(long, default_value_t = 0.01)]
    h: f64,
    /// Trajectory CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let newton = NewtonConfig {
        tol: cli.tol.unwrap_or(1e-10),
        ..Default::default()
    };
    match cli.command {
        Command::Derive { file, format } => cmd_derive(&file, format),
        Command::Integrate(args) => cmd_integrate(&args, &newton),
        Command::Check {
            suite,
            trials,
            dim_v,
            dim_w,
            json,
        } => cmd_check(&suite, trials, dim_v, dim_w, cli.seed, json.as_deref()),
        Command::Residual {
            file,
            field_data,
            which,
            out,
        } => cmd_residual(&file, &field_data, which, out.as_deref()),
        Command::Hamiltonize { file } => cmd_hamiltonize(&file),
    }
}

fn load_model(path: &std::path::Path) -> Result<ParsedModel, ExitCode> {
    let source = match std::fs::read_to_string(path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return Err(ExitCode::from(2));
        }
    };
    parse_model_file(&source).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(2)
    })
}

fn print_system(header: &str, sys: &ImplicitSystem, format: Format) {
    println!("{header}:");
    let lines = match format {
        Format::Text => sys.text_lines(),
        Format::Latex => sys.latex_lines(),
    };
    for line in lines {
        println!("  {line}");
    }
}

fn print_equations(header: &str, eqs: &[geomech_core::Expr], format: Format) {
    println!("{header}:");
    for e in eqs {
        match format {
            Format::Text => println!("  {}", e.equation_text()),
            Format::Latex => println!("  {}", e.equation_latex()),
        }
    }
}

fn cmd_derive(file: &std::path::Path, format: Format) -> ExitCode {
    let parsed = match load_model(file) {
        Ok(p) => p,
        Err(code) => return code,
    };
    match parsed {
        ParsedModel::Mechanics { name, model } => {
            println!("model {name} (mechanics, dim {})", model.dim());
            if model.lagrangian.is_some() {
                let dynamics = lagrangian_dynamics(&model).expect("L present");
                print_system("dynamics", &dynamics, format);
                let el = euler_lagrange(&model).expect("L present");
                print_equations("euler-lagrange", &el, format);
                let leg = legendre(&model).expect("L present");
                println!("legendre map:");
                for (p, e) in model.momenta().iter().zip(&leg.momenta_exprs) {
                    match format {
                        Format::Text => println!("  {p} = {e}"),
                        Format::Latex => println!("  {p} = {}", e.to_latex()),
                    }
                }
            }
            if model.hamiltonian.is_some() {
                let dynamics = hamiltonian_dynamics(&model).expect("H present");
                print_system("hamilton equations", &dynamics, format);
            }
        }
        ParsedModel::Field { name, model, .. } => {
            println!("model {name} (field, m = {}, k = {})", model.m, model.k);
            if model.lagrangian.is_some() {
                let dynamics = field_dynamics(&model).expect("L present");
                print_system("dynamics", &dynamics, format);
                let el = field_el(&model).expect("L present");
                print_equations("euler-lagrange", &el, format);
                let leg = field_legendre(&model).expect("L present");
                println!("legendre map:");
                for (p, e) in model.momenta().iter().zip(&leg.momenta_exprs) {
                    match format {
                        Format::Text => println!("  {p} = {e}"),
                        Format::Latex => println!("  {p} = {}", e.to_latex()),
                    }
                }
            }
            if model.hamiltonian.is_some() {
                let dynamics = hamilton_field_equations(&model).expect("H present");
                print_system("hamilton equations", &dynamics, format);
            }
        }
    }
    ExitCode::SUCCESS
}

fn cmd_integrate(args: &IntegrateArgs, newton: &NewtonConfig) -> ExitCode {
    let parsed = match load_model(&args.file) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let ParsedModel::Mechanics { name, model } = parsed else {
        eprintln!("error: `integrate` needs a mechanics model");
        return ExitCode::from(2);
    };
    let z0: Result<Vec<f64>, _> = args
        .z0
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect();
    let Ok(z0) = z0 else {
        eprintln!("error: --z0 must be a comma-separated list of numbers");
        return ExitCode::from(2);
    };
    if z0.len() != 2 * model.dim() {
        eprintln!(
            "error: --z0 has {} entries, model needs {}",
            z0.len(),
            2 * model.dim()
        );
        return ExitCode::from(2);
    }
    let sys = if model.lagrangian.is_some() {
        lagrangian_dynamics(&model).expect("L present")
    } else {
        hamiltonian_dynamics(&model).expect("H present")
    };
    let trajectory = match integrate_phase(&sys, &z0, (args.t0, args.t1), args.h, newton) {
        Ok(t) => t,
        Err(NumericsError::InconsistentInitialData { residual }) => {
            eprintln!("error: inconsistent initial data (algebraic residual {residual:.3e})");
            return ExitCode::from(3);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    println!(
        "integrated {name}: {} steps to t = {}",
        trajectory.times.len() - 1,
        trajectory.times.last().unwrap()
    );

    // Energy drift summary for an autonomous Hamiltonian: use the given H,
    // or derive one when the Lagrangian admits a closed form.
    let h_expr = model.hamiltonian.clone().or_else(|| match hamiltonize(&model) {
        Ok(HamiltonizeResult::ClosedForm { hamiltonian, .. }) => Some(hamiltonian),
        _ => None,
    });
    if let Some(h) = h_expr {
        let names: Vec<String> = model
            .positions()
            .iter()
            .chain(model.momenta())
            .cloned()
            .collect();
        let energies: Vec<f64> = trajectory
            .states
            .iter()
            .map(|z| {
                let point = PointTuple::from_pairs(names.iter().cloned().zip(z.iter().copied()));
                h.evaluate(&point).unwrap_or(f64::NAN)
            })
            .collect();
        let e0 = energies[0];
        let worst = energies
            .iter()
            .map(|e| (e - e0).abs())
            .fold(0.0f64, f64::max);
        println!("energy drift |H - H0| <= {worst:.3e}");
    }
    if trajectory.diagnostics.rank_deficient_steps > 0 {
        println!(
            "note: {} steps had a rank-deficient step system (constraint residual {:.3e})",
            trajectory.diagnostics.rank_deficient_steps,
            trajectory.diagnostics.max_constraint_residual
        );
    }
    if let Some(out) = &args.out {
        let labels: Vec<String> = model
            .positions()
            .iter()
            .chain(model.momenta())
            .cloned()
            .collect();
        let mut file = match std::fs::File::create(out) {
            Ok(f) => f,
            Err(e) => {
                eprintln!("error: cannot write {}: {e}", out.display());
                return ExitCode::FAILURE;
            }
        };
        if let Err(e) = trajectory.write_csv(&labels, &mut file) {
            eprintln!("error: cannot write {}: {e}", out.display());
            return ExitCode::FAILURE;
        }
        println!("trajectory written to {}", out.display());
    }
    ExitCode::SUCCESS
}

fn cmd_check(
    suite: &str,
    trials: usize,
    dim_v: usize,
    dim_w: usize,
    seed: u64,
    json: Option<&std::path::Path>,
) -> ExitCode {
    let Some(kinds) = SuiteKind::parse(suite) else {
        eprintln!("error: unknown suite `{suite}` (bundles|theorem1|mechanics|field|models|all)");
        return ExitCode::from(2);
    };
    let cfg = CheckConfig {
        seed,
        trials,
        dim_v,
        dim_w,
    };
    let reports: Vec<_> = kinds.into_iter().map(|k| run_suite(k, &cfg)).collect();
    let mut all_passed = true;
    for report in &reports {
        for r in &report.results {
            let status = if r.passed { "PASS" } else { "FAIL" };
            println!(
                "[{}] {}: {} (deviation {:.3e}, tolerance {:.3e})",
                report.name, r.name, status, r.max_deviation, r.tolerance
            );
            all_passed &= r.passed;
        }
    }
    if let Some(path) = json {
        let doc = serde_json::json!({
            "schema_version": 1,
            "seed": seed,
            "trials": trials,
            "passed": all_passed,
            "suites": reports,
        });
        match std::fs::write(path, serde_json::to_string_pretty(&doc).unwrap()) {
            Ok(()) => println!("report written to {}", path.display()),
            Err(e) => {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::FAILURE;
            }
        }
    }
    if all_passed {
        println!("all checks passed");
        ExitCode::SUCCESS
    } else {
        eprintln!("some checks failed");
        ExitCode::FAILURE
    }
}

fn cmd_residual(
    file: &std::path::Path,
    data_path: &std::path::Path,
    which: Which,
    out: Option<&std::path::Path>,
) -> ExitCode {
    let parsed = match load_model(file) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let ParsedModel::Field { model, grid, .. } = parsed else {
        eprintln!("error: `residual` needs a field model");
        return ExitCode::from(2);
    };
    let data = match std::fs::read_to_string(data_path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", data_path.display());
            return ExitCode::from(4);
        }
    };
    let section = match fielddata::read_phase_section(&model, &data) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(4);
        }
    };
    // A [grid] block in the model file pins the expected data layout.
    if let Some(expected) = grid {
        if expected.dims != section.grid.dims
            || expected.origin != section.grid.origin
            || expected.spacing != section.grid.spacing
        {
            eprintln!("error: data grid does not match the [grid] block of the model file");
            return ExitCode::from(4);
        }
    }
    let kind = match which {
        Which::El => ResidualKind::EulerLagrange,
        Which::Hamilton => ResidualKind::Hamilton,
        Which::Dynamics => ResidualKind::Dynamics,
    };
    let report = match pde_residual(&model, &section, kind) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(4);
        }
    };
    println!(
        "max residual {:.6e} over {} interior nodes",
        report.max_abs,
        report.interior.len()
    );
    if let Some(path) = out {
        let mut buf = String::from("node,residual\n");
        for (idx, r) in &report.interior {
            buf.push_str(&format!("{idx},{r}\n"));
        }
        if let Err(e) = std::fs::write(path, buf) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::FAILURE;
        }
        println!("per-node residuals written to {}", path.display());
    }
    ExitCode::SUCCESS
}

fn cmd_hamiltonize(file: &std::path::Path) -> ExitCode {
    let parsed = match load_model(file) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let ParsedModel::Mechanics { name, model } = parsed else {
        eprintln!("error: `hamiltonize` needs a mechanics model");
        return ExitCode::from(2);
    };
    let model: MechModel = model;
    match hamiltonize(&model) {
        Ok(HamiltonizeResult::ClosedForm { hamiltonian, probe }) => {
            println!("model {name}: H = {hamiltonian}");
            println!(
                "hessian rank {}/{} on {} probe points (min |eigenvalue| {:.3e})",
                probe.min_rank, probe.dim, probe.samples, probe.min_abs_eigenvalue
            );
        }
        Ok(HamiltonizeResult::Numeric { family, probe }) => {
            println!(
                "model {name}: hyperregular on the probe set but not quadratic; \
                 returning the generating family"
            );
            println!("generating family: {}", family.expr);
            println!(
                "hessian rank {}/{} on {} probe points",
                probe.min_rank, probe.dim, probe.samples
            );
        }
        Ok(HamiltonizeResult::Singular { family, probe }) => {
            println!("model {name}: singular Lagrangian, no single Hamiltonian exists");
            println!("generating family: {}", family.expr);
            println!(
                "hessian rank {}/{} on {} probe points (min |eigenvalue| {:.3e})",
                probe.min_rank, probe.dim, probe.samples, probe.min_abs_eigenvalue
            );
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    ExitCode::SUCCESS
}
