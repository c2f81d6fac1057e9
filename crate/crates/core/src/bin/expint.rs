use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};

use expint::harness::{
    compute_reference, preset, run_with_reference, selftest, write_csv, BuiltProblem,
    ExperimentSpec, PresetName, ProblemSpec,
};
use expint::integrators::Method;
use expint::problems::KappaProfile;
use expint::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "expint",
    version,
    about = "Work-precision experiments for exponential integrators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProblemKind {
    Advdiff,
    Ns,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment grid and write its records as CSV.
    #[command(allow_negative_numbers = true)]
    Run {
        #[arg(long, value_enum)]
        problem: ProblemKind,
        /// Diffusion profile of the 1D problem: `const:<value>` or `mixed`.
        #[arg(long, default_value = "const:0.0125")]
        kappa: String,
        /// Kinematic viscosity of the Navier-Stokes problem.
        #[arg(long, default_value_t = 1e-6)]
        nu: f64,
        /// Grid size (interior points in 1D, points per direction in 2D).
        #[arg(long)]
        n: Option<usize>,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "rk2,rk4,exprb-euler-krylov,exprb-euler-leja,exprb42-krylov,exprb42-leja"
        )]
        methods: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        tau: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1e-4,1e-7")]
        tol: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1,10")]
        zeta: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
        #[arg(long)]
        out: PathBuf,
        /// Write rho, u, v and omega of the Navier-Stokes reference solution
        /// to this directory.
        #[arg(long)]
        dump_fields: Option<PathBuf>,
    },
    /// Run a named study.
    Preset {
        #[arg(long)]
        name: String,
        #[arg(long)]
        out: PathBuf,
        /// Override the default grid size.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Compare both phi-action backends against the dense oracle.
    Selftest,
}

fn parse_list<T: FromStr<Err = Error>>(items: &[String]) -> Result<Vec<T>> {
    items.iter().map(|s| s.trim().parse()).collect()
}

fn dump_fields(problem: &BuiltProblem, reference: &[f64], dir: &Path) -> Result<()> {
    let BuiltProblem::NavierStokes(ns) = problem else {
        return Err(Error::InvalidSpec(
            "--dump-fields needs the ns problem".into(),
        ));
    };
    std::fs::create_dir_all(dir)?;
    for (name, field) in ns.fields(reference)? {
        field.write_csv(dir.join(format!("{name}.csv")))?;
    }
    Ok(())
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run {
            problem,
            kappa,
            nu,
            n,
            methods,
            tau,
            tol,
            zeta,
            t_end,
            out,
            dump_fields: dump_dir,
        } => {
            let problem = match problem {
                ProblemKind::Advdiff => ProblemSpec::AdvDiff {
                    n: n.unwrap_or(159),
                    kappa: kappa.parse::<KappaProfile>()?,
                },
                ProblemKind::Ns => ProblemSpec::NavierStokes {
                    n: n.unwrap_or(40),
                    nu,
                },
            };
            let spec = ExperimentSpec {
                problem,
                methods: parse_list::<Method>(&methods)?,
                taus: tau,
                tols: tol,
                zetas: zeta,
                t_end,
            };
            spec.validate()?;
            if dump_dir.is_some() && !matches!(spec.problem, ProblemSpec::NavierStokes { .. }) {
                return Err(Error::InvalidSpec(
                    "--dump-fields needs the ns problem".into(),
                ));
            }
            let built = spec.problem.build()?;
            let min_tau = spec.taus.iter().copied().fold(f64::INFINITY, f64::min);
            let reference = compute_reference(&built, spec.t_end, min_tau)?;
            let records = run_with_reference(&spec, &built, &reference)?;
            write_csv(&records, &out)?;
            if let Some(dir) = dump_dir {
                dump_fields(&built, &reference, &dir)?;
            }
            eprintln!("wrote {} records to {}", records.len(), out.display());
            Ok(())
        }
        Command::Preset { name, out, n } => {
            let p = preset(name.parse::<PresetName>()?, n);
            let records = p.run()?;
            write_csv(&records, &out)?;
            eprintln!("wrote {} records to {}", records.len(), out.display());
            Ok(())
        }
        Command::Selftest => {
            let report = selftest()?;
            for case in &report.cases {
                println!("{case}");
            }
            println!(
                "{} cases, max relative error {:.3e}",
                report.cases.len(),
                report.max_rel_err()
            );
            if report.passed() {
                Ok(())
            } else {
                Err(Error::InvalidRequest("oracle check failed".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
