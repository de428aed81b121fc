use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dic_cli::artifacts::{summary_text, write_atomic};
use dic_cli::config::{bundled, RunConfig};
use dic_cli::study::{self, CertifyArgs, StudyResult, PRECISION_SETTLE_TOL, PRECISION_STEPS};
use dic_cli::{figures, run, CliError, OUTPUT_DIR_ENV};
use dic_core::controllers::GainSet;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "dic", version, about = "Discontinuous integral control experiments")]
struct Cli {
    /// Directory for artifacts.
    #[arg(long, global = true, env = OUTPUT_DIR_ENV, default_value = ".")]
    outdir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one configuration (a file, or the name of a bundled one).
    Run { config: String },
    /// Write the four comparison datasets from the bundled pendulum runs.
    ReproduceFigures,
    /// Print a bundled configuration.
    ShowConfig { name: String },
    /// Numerical studies; each writes a `study_<kind>.toml` record.
    #[command(subcommand)]
    Study(StudyCommand),
}

#[derive(Subcommand)]
enum StudyCommand {
    /// Fit steady-state precision orders against the step size.
    Precision {
        #[arg(long, default_value = "sf_pendulum")]
        config: String,
        #[arg(long, value_delimiter = ',', default_values_t = PRECISION_STEPS)]
        steps: Vec<f64>,
        #[arg(long, default_value_t = PRECISION_SETTLE_TOL)]
        settle_tol: f64,
    },
    /// Compare a run with its gain-scaled counterpart.
    Scaling {
        #[arg(long, default_value = "sf_pendulum")]
        config: String,
        #[arg(long, default_value_t = 3.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long, default_value_t = 30.0)]
        t_end: f64,
    },
    /// Search for and check Lyapunov certificates.
    Certify(CertifyFlags),
}

#[derive(Args)]
struct CertifyFlags {
    #[arg(long, default_value_t = 2.0)]
    k1: f64,
    #[arg(long, default_value_t = 5.0)]
    k2: f64,
    #[arg(long, default_value_t = 0.5)]
    k3: f64,
    #[arg(long, default_value_t = 0.0)]
    k4: f64,
    /// Observer gains; both or neither.
    #[arg(long, requires = "l2")]
    l1: Option<f64>,
    #[arg(long, requires = "l1")]
    l2: Option<f64>,
    /// Lipschitz bound of the perturbation.
    #[arg(long = "L", default_value_t = 0.4)]
    lipschitz: f64,
    #[arg(long, default_value_t = dic_core::lyapunov::DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = 20_000)]
    search_samples: usize,
    #[arg(long, default_value_t = 400)]
    budget: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

/// A bundled config name, or a path.
fn load(spec: &str) -> Result<(RunConfig, Option<PathBuf>), CliError> {
    let path = Path::new(spec);
    if path.exists() {
        return Ok((RunConfig::load(path)?, Some(path.to_path_buf())));
    }
    match bundled::get(spec) {
        Some(text) => Ok((RunConfig::parse(text)?, None)),
        None => Err(CliError::UnknownConfig(spec.to_owned())),
    }
}

/// Prints to stdout, ignoring a closed pipe.
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

fn write_record<R: Serialize>(outdir: &Path, name: &str, r: &StudyResult<R>) -> Result<PathBuf, CliError> {
    let p = outdir.join(name);
    let text = summary_text(&r.record);
    write_atomic(&p, text.as_bytes())?;
    say!("{}", text.trim_end());
    say!("# written to {}", p.display());
    Ok(p)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let out = &cli.outdir;
    match cli.command {
        Command::Run { config } => {
            let (cfg, src) = load(&config)?;
            let res = run::execute(&cfg)?;
            let stem = run::artifact_stem(&cfg, src.as_deref());
            let [csv, summary] = run::write_run(out, &stem, &cfg, &res)?;
            let s = &res.summary.settling;
            match s.settle_time {
                Some(t) => say!("settled at t = {t} (tol {})", s.tolerance),
                None => say!("not settled within tol {}", s.tolerance),
            }
            say!("sup|x1| = {:e}, sup|x2| = {:e} over [{}, end]", s.sup_x1, s.sup_x2, s.window_start);
            say!("{}\n{}", csv.display(), summary.display());
        }
        Command::ReproduceFigures => {
            for p in figures::run_bundled()?.write(out)? {
                say!("{}", p.display());
            }
        }
        Command::ShowConfig { name } => {
            let text = bundled::get(&name).ok_or(CliError::UnknownConfig(name))?;
            say!("{}", text.trim_end());
        }
        Command::Study(StudyCommand::Precision {
            config,
            steps,
            settle_tol,
        }) => {
            let (cfg, _) = load(&config)?;
            let r = study::precision(&cfg, &steps, settle_tol)?;
            write_record(out, "study_precision.toml", &r)?;
            r.verdict("precision slopes outside their bands")?;
        }
        Command::Study(StudyCommand::Scaling {
            config,
            lambda,
            step,
            t_end,
        }) => {
            let (cfg, _) = load(&config)?;
            let r = study::scaling(&cfg, lambda, step, t_end)?;
            write_record(out, "study_scaling.toml", &r)?;
            r.verdict("scaled trajectories differ by more than the tolerance")?;
        }
        Command::Study(StudyCommand::Certify(f)) => {
            let invalid = |e: dic_core::Error| CliError::Invalid {
                section: "gains",
                key: "",
                message: e.to_string(),
            };
            let mut gains = GainSet::new(f.k1, f.k2, f.k3, f.k4).map_err(invalid)?;
            if let (Some(l1), Some(l2)) = (f.l1, f.l2) {
                gains = gains.with_observer(l1, l2).map_err(invalid)?;
            }
            let r = study::certify(&CertifyArgs {
                gains,
                lipschitz: f.lipschitz,
                samples: f.samples,
                search_samples: f.search_samples,
                budget: f.budget,
                seed: f.seed,
            })?;
            write_record(out, "study_certify.toml", &r)?;
            r.verdict("no certificate found")?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dic: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
