use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rigiditylab::scenario::{self, Params, Report, Task};
use rigiditylab::{Error, Spin};

#[derive(Parser)]
#[command(name = "rigiditylab", version, about = "Cohomology, spectral gaps and conjugacy solving for unitary group actions")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    flags: Flags,
}

#[derive(Args)]
struct Flags {
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Also write the report's table as CSV.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,

    /// Worker threads for sweeps.
    #[arg(long, global = true, env = "RIGIDITYLAB_THREADS")]
    threads: Option<usize>,

    /// Seed for every sampled computation.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Convergence / residual tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Relative tolerance for numerical rank.
    #[arg(long, global = true)]
    rank_tol: Option<f64>,

    /// Largest SU(2) spin j (half-integer).
    #[arg(long, global = true)]
    max_spin: Option<f64>,

    /// Largest word length for net growth.
    #[arg(long, global = true)]
    radius: Option<u32>,

    /// Weight box half-width L for torus scans.
    #[arg(long, global = true)]
    weight_bound: Option<u32>,

    /// Exponent on ‖l‖ in the torus scan.
    #[arg(long, global = true)]
    alpha: Option<u32>,

    /// Number of probe points on S³.
    #[arg(long, global = true)]
    probe_size: Option<usize>,

    /// Include wall-clock time in the report (breaks byte-determinism).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run any scenario file.
    Run { scenario: PathBuf },
    /// Check that a representation satisfies the relators.
    Check { scenario: PathBuf },
    /// H⁰ and H¹ of the presentation complex.
    Cohomology { scenario: PathBuf },
    /// Splitting operators and their residual.
    Split { scenario: PathBuf },
    /// Tame estimates on graded families.
    Tame {
        #[command(subcommand)]
        op: TameOp,
    },
    /// Spectral-gap sweeps.
    Gap {
        #[command(subcommand)]
        op: GapOp,
    },
    /// Covering radii of word balls in SU(2).
    Net { scenario: Option<PathBuf> },
    /// Averaging-operator certificate.
    Averaging { scenario: PathBuf },
    /// Diophantine gap scan on a torus.
    Torus {
        scenario: Option<PathBuf>,
        /// Torus angles in turns, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        angles: Option<Vec<f64>>,
        /// A unit complex number `re,im` whose argument is the angle.
        #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
        phase: Option<Vec<f64>>,
    },
    /// Conjugacy solving and deformations.
    Rigidity {
        #[command(subcommand)]
        op: RigidityOp,
    },
}

#[derive(Subcommand)]
enum TameOp {
    /// Fit tame constants on a graded family.
    Fit { scenario: PathBuf },
    /// Probe the tame degree of an operator.
    Probe { scenario: PathBuf },
}

#[derive(Subcommand)]
enum GapOp {
    /// Gap bounds over SU(2) irreducibles.
    Sweep { scenario: Option<PathBuf> },
}

#[derive(Subcommand)]
enum RigidityOp {
    /// Newton conjugacy solve.
    Solve { scenario: PathBuf },
    /// Sample a centralizer deformation family.
    Deform { scenario: PathBuf },
}

const DEFAULT_ROTATIONS: &str = r#"[{"axis":[0,0,1],"angle":1},{"axis":[1,0,0],"angle":1}]"#;

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Validation {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// The scenario text and the task the subcommand requires, if any.
fn scenario_text(cmd: &Command) -> Result<(String, Option<Task>), Error> {
    let with = |path: &Path, task| Ok((read(path)?, Some(task)));
    match cmd {
        Command::Run { scenario } => Ok((read(scenario)?, None)),
        Command::Check { scenario } => with(scenario, Task::Check),
        Command::Cohomology { scenario } => with(scenario, Task::Cohomology),
        Command::Split { scenario } => with(scenario, Task::Split),
        Command::Tame { op: TameOp::Fit { scenario } } => with(scenario, Task::TameFit),
        Command::Tame { op: TameOp::Probe { scenario } } => with(scenario, Task::TameProbe),
        Command::Gap { op: GapOp::Sweep { scenario } } => match scenario {
            Some(p) => with(p, Task::GapSweep),
            None => Ok((format!(r#"{{"task":"gap-sweep","rotations":{DEFAULT_ROTATIONS}}}"#), Some(Task::GapSweep))),
        },
        Command::Net { scenario } => match scenario {
            Some(p) => with(p, Task::Net),
            None => Ok((format!(r#"{{"task":"net","rotations":{DEFAULT_ROTATIONS}}}"#), Some(Task::Net))),
        },
        Command::Averaging { scenario } => with(scenario, Task::Averaging),
        Command::Torus { scenario, angles, phase } => match (scenario, angles, phase) {
            (Some(p), None, None) => with(p, Task::Torus),
            (None, Some(a), None) => Ok((
                serde_json::json!({"task": "torus", "torus": {"angles": a}}).to_string(),
                Some(Task::Torus),
            )),
            (None, None, Some(z)) if z.len() == 2 => Ok((
                serde_json::json!({"task": "torus", "torus": {"phase": z}}).to_string(),
                Some(Task::Torus),
            )),
            _ => Err(Error::Validation {
                path: "torus".into(),
                message: "give a scenario file, --angles, or --phase re,im".into(),
            }),
        },
        Command::Rigidity { op: RigidityOp::Solve { scenario } } => with(scenario, Task::RigiditySolve),
        Command::Rigidity { op: RigidityOp::Deform { scenario } } => with(scenario, Task::RigidityDeform),
    }
}

fn overrides(f: &Flags) -> Result<Params, Error> {
    let max_spin = f
        .max_spin
        .map(Spin::from_f64)
        .transpose()
        .map_err(|e| Error::Validation { path: "--max-spin".into(), message: e.to_string() })?;
    Ok(Params {
        seed: f.seed,
        tol: f.tol,
        rank_tol: f.rank_tol,
        max_spin,
        radius: f.radius,
        weight_bound: f.weight_bound,
        alpha: f.alpha,
        probe_size: f.probe_size,
        ..Params::default()
    })
}

fn execute(cli: &Cli) -> Result<(Report, Option<String>), Error> {
    let (text, expected) = scenario_text(&cli.command)?;
    let parsed = scenario::parse_scenario(&text)?;
    if let Some(task) = expected {
        if parsed.task != task {
            return Err(Error::Validation {
                path: "task".into(),
                message: format!("scenario task `{}` does not match subcommand `{}`", parsed.task.name(), task.name()),
            });
        }
    }
    let start = Instant::now();
    let mut report = scenario::run_scenario(&parsed, &overrides(&cli.flags)?, scenario::input_digest(&text)?)?;
    if cli.flags.timing {
        report.timing_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    let csv = cli.flags.csv.as_ref().and_then(|_| scenario::emit_csv(&report));
    Ok((report, csv))
}

fn write(path: &Path, contents: &str) -> Result<(), Error> {
    std::fs::write(path, contents).map_err(|e| Error::Validation {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.flags.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: could not size the thread pool: {e}");
        }
    }
    let outcome = execute(&cli).and_then(|(report, csv)| {
        let json = report.to_json();
        match (&cli.flags.csv, csv) {
            (Some(path), Some(table)) => write(path, &table)?,
            (Some(_), None) => eprintln!("warning: task `{}` has no table; CSV not written", report.task.name()),
            _ => {}
        }
        match &cli.flags.output {
            Some(path) => write(path, &json),
            None => {
                print!("{json}");
                Ok(())
            }
        }
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
