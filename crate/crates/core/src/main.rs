use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use varorder::config::RunConfig;
use varorder::experiments::{
    fmt_f64, run_counterexample, run_ek_sweep, run_local_boundedness, run_schauder, with_jobs, ExperimentOutput,
};
use varorder::holder::{seminorm, GridFunction, SeminormReport};
use varorder::scale::{compute_c_phi, make_modulus, make_scale_function, HolderModulus, ProductModulus};
use varorder::solver::{solve, Method};
use varorder::Error;

#[derive(Parser)]
#[command(name = "varorder", version, about = "Variable-order nonlocal operators in one dimension")]
struct Cli {
    /// Worker threads for sweeps (0 uses every core).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the normalizing constant c_phi.
    Cphi {
        #[arg(long)]
        phi_kind: String,
        #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
        phi_params: Vec<f64>,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Solve the Dirichlet problem of the `[solve]` section.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the seminorm of a grid function CSV over a window.
    Seminorm {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        modulus: String,
        #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
        modulus_params: Vec<f64>,
        /// Multiply the modulus by this scale function.
        #[arg(long, requires = "phi_params")]
        phi_kind: Option<String>,
        #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
        phi_params: Vec<f64>,
        #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true)]
        window: Vec<f64>,
    },
    /// Run a scripted experiment.
    Experiment {
        #[arg(long, value_enum)]
        name: ExperimentName,
        /// Sections missing from the file use their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentName {
    Counterexample,
    EkSweep,
    Schauder,
    LocalBoundedness,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NotConverged { .. } | Error::Divergence { .. } | Error::Quadrature { .. } | Error::Tail(_) => 1,
        Error::Gate(_) => 3,
        _ => 2,
    }
}

fn json<T: Serialize>(value: &T) -> Result<String, Error> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))
}

#[derive(Serialize)]
struct SolveSummary {
    operator: &'static str,
    method: Method,
    converged: bool,
    iterations: usize,
    residual: f64,
    residual_history: Vec<f64>,
    tau: f64,
    h: f64,
    nodes: usize,
    sup_norm: f64,
    seminorm: Option<SeminormReport>,
}

fn run_solve(config: &Path) -> Result<bool, Error> {
    let cfg = RunConfig::load(config)?;
    let s = cfg
        .solve
        .as_ref()
        .ok_or_else(|| Error::Config(format!("{} has no [solve] section", config.display())))?;
    let problem = s.problem()?;
    let report = solve(&problem, &s.solver)?;
    let seminorm = match &s.seminorm {
        Some(sc) => {
            let psi = varorder::scale::Modulus::new(sc.modulus)?;
            let [a, b] = sc.window;
            Some(if sc.times_phi {
                seminorm(&report.u, &ProductModulus::new(s.phi()?, psi)?, a, b)?
            } else {
                seminorm(&report.u, &psi, a, b)?
            })
        }
        None => None,
    };
    let summary = SolveSummary {
        operator: problem.op.name(),
        method: report.method,
        converged: report.converged,
        iterations: report.iterations,
        residual: report.residual(),
        residual_history: report.residual_history.clone(),
        tau: report.tau,
        h: problem.h,
        nodes: problem.nodes(),
        sup_norm: report.u.sup_abs(),
        seminorm,
    };
    let dir = cfg.output_dir();
    std::fs::create_dir_all(&dir)?;
    let csv = dir.join("solution.csv");
    report.u.save(&csv)?;
    std::fs::write(dir.join("solve.summary.json"), json(&summary)? + "\n")?;
    println!("{}", csv.display());
    if !report.converged {
        eprintln!(
            "not converged after {} iterations (residual {})",
            report.iterations,
            fmt_f64(report.residual())
        );
    }
    Ok(report.converged)
}

fn run_seminorm(
    input: &Path,
    modulus: &str,
    modulus_params: &[f64],
    phi: Option<(&str, &[f64])>,
    window: &[f64],
) -> Result<(), Error> {
    let u = GridFunction::load(input)?;
    let psi = make_modulus(modulus, modulus_params)?;
    let m: Box<dyn HolderModulus> = match phi {
        Some((kind, params)) => Box::new(ProductModulus::new(make_scale_function(kind, params)?, psi)?),
        None => Box::new(psi),
    };
    let (a, b) = match window {
        [a, b] => (*a, *b),
        _ => (u.x0(), u.x_end()),
    };
    println!("{}", json(&seminorm(&u, m.as_ref(), a, b)?)?);
    Ok(())
}

fn run_experiment(name: ExperimentName, config: Option<&Path>) -> Result<ExperimentOutput, Error> {
    let cfg = match config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::parse("schema = 1")?,
    };
    let out = match name {
        ExperimentName::Counterexample => run_counterexample(&cfg.counterexample.clone().unwrap_or_default())?.1,
        ExperimentName::EkSweep => run_ek_sweep(&cfg.ek_sweep.clone().unwrap_or_default())?.1,
        ExperimentName::Schauder => run_schauder(&cfg.schauder.clone().unwrap_or_default())?.1,
        ExperimentName::LocalBoundedness => {
            run_local_boundedness(&cfg.local_boundedness.clone().unwrap_or_default())?.1
        }
    };
    let (csv, summary) = out.write(&cfg.output_dir())?;
    println!("{}", csv.display());
    println!("{}", summary.display());
    Ok(out)
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Cphi { phi_kind, phi_params, tol } => {
            let phi = make_scale_function(&phi_kind, &phi_params)?;
            println!("{}", fmt_f64(compute_c_phi(&phi, tol)?));
        }
        Command::Solve { config } => {
            if !with_jobs(cli.jobs, || run_solve(&config))?? {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Seminorm {
            input,
            modulus,
            modulus_params,
            phi_kind,
            phi_params,
            window,
        } => {
            let phi = phi_kind.as_deref().map(|k| (k, phi_params.as_slice()));
            run_seminorm(&input, &modulus, &modulus_params, phi, &window)?;
        }
        Command::Experiment { name, config } => {
            let out = with_jobs(cli.jobs, || run_experiment(name, config.as_deref()))??;
            if !out.passed {
                eprintln!("{}: acceptance checks did not pass, see the summary", out.name);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
