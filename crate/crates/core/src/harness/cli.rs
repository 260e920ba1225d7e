use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{error, info};

use super::config::{RunConfig, DEFAULT_TAU};
use super::output;
use super::study;
use crate::error::{Result, SavError};
use crate::groundstate::{gaussian_guess, solve_ground_state, GroundStateProblem};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sav-nls", version, about = "SAV and splitting solvers for the periodic 1-D NLS / GP equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one simulation and write the per-step trace.
    Simulate(Flags),
    /// Temporal convergence study over tau, tau/2, ... (see --levels).
    Converge(Flags),
    /// Ground state by the normalized gradient flow.
    Groundstate(Flags),
    /// Convergence study for all four schemes on a shared reference.
    Compare(Flags),
}

/// Flags shared by every subcommand. Values are validated by the
/// configuration layer so that file and command line behave the same.
#[derive(Debug, Args)]
struct Flags {
    /// `key = value` file; flags given on the command line take precedence.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// sav1 | sav2 | lie | strang
    #[arg(long)]
    scheme: Option<String>,
    /// Number of grid points (even).
    #[arg(long)]
    n: Option<String>,
    /// Domain is [-L, L).
    #[arg(long, value_name = "L")]
    domain_half_length: Option<String>,
    #[arg(long)]
    tau: Option<String>,
    #[arg(long, value_name = "T")]
    t_end: Option<String>,
    /// cubic:BETA | power:BETA:GAMMA | none
    #[arg(long)]
    nonlinearity: Option<String>,
    /// none | harmonic | constant:V0 | file:PATH
    #[arg(long)]
    potential: Option<String>,
    /// soliton:a:beta:v | solitary | sine | plane:A:k | halpha:alpha:seed | file:PATH
    #[arg(long)]
    ic: Option<String>,
    /// Energy shift E_c.
    #[arg(long)]
    ec: Option<String>,
    /// Raise E_c automatically when E_1 + E_c would be too small (true|false).
    #[arg(long)]
    adapt_shift: Option<String>,
    /// predictor | frozen
    #[arg(long)]
    bootstrap: Option<String>,
    /// reset | carry
    #[arg(long)]
    gs_r_mode: Option<String>,
    #[arg(long)]
    gs_tol: Option<String>,
    #[arg(long)]
    gs_max_steps: Option<String>,
    /// Number of step sizes in a convergence family.
    #[arg(long)]
    levels: Option<String>,
    /// Seed for random initial data.
    #[arg(long)]
    seed: Option<String>,
    /// Output CSV (stdout when absent).
    #[arg(long, value_name = "PATH")]
    out: Option<String>,
}

impl Flags {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let pairs = [
            ("scheme", &self.scheme),
            ("n", &self.n),
            ("domain-half-length", &self.domain_half_length),
            ("tau", &self.tau),
            ("t-end", &self.t_end),
            ("nonlinearity", &self.nonlinearity),
            ("potential", &self.potential),
            ("ic", &self.ic),
            ("ec", &self.ec),
            ("adapt-shift", &self.adapt_shift),
            ("bootstrap", &self.bootstrap),
            ("gs-r-mode", &self.gs_r_mode),
            ("gs-tol", &self.gs_tol),
            ("gs-max-steps", &self.gs_max_steps),
            ("levels", &self.levels),
            ("seed", &self.seed),
            ("out", &self.out),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        Ok(cfg)
    }
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            SavError::Config(format!("--out: cannot create {}: {e}", p.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn profile_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}_profile.csv"))
}

fn execute(command: &Command) -> Result<i32> {
    match command {
        Command::Simulate(flags) => {
            let cfg = flags.resolve()?;
            let run = study::simulate(&cfg)?;
            let last = run.final_report();
            info!("reached t = {} after {} steps, mass {:e}, H {:e}", last.time, last.step, last.mass, last.hamiltonian);
            output::write_trace(open_out(&cfg.out)?, &cfg, &run)?;
        }
        Command::Converge(flags) => {
            let cfg = flags.resolve()?;
            let study = study::convergence_study(&cfg, &cfg.tau_family(DEFAULT_TAU))?;
            info!("mean order: e_u {:?}, e_H {:?}", study.mean_order_u(), study.mean_order_h());
            output::write_convergence(open_out(&cfg.out)?, &cfg, DEFAULT_TAU, &study)?;
        }
        Command::Compare(flags) => {
            let cfg = flags.resolve()?;
            let studies = study::compare_schemes(&cfg, &cfg.tau_family(DEFAULT_TAU))?;
            output::write_comparison(open_out(&cfg.out)?, &cfg, DEFAULT_TAU, &studies)?;
        }
        Command::Groundstate(flags) => {
            let cfg = flags.resolve()?;
            let grid = cfg.grid()?;
            let problem = cfg.ground_state_problem(&grid)?;
            let res = solve_ground_state(&problem, &gaussian_guess(&grid)?)?;
            info!(
                "E = {}, modified E = {}, mu = {}, {} iterations",
                res.energy, res.modified_energy, res.chemical_potential, res.iterations
            );
            let tau = GroundStateProblem::DEFAULT_TAU;
            output::write_ground_state(open_out(&cfg.out)?, &cfg, tau, &res)?;
            if let Some(out) = &cfg.out {
                let path = profile_path(out);
                let file = File::create(&path)
                    .map_err(|e| SavError::Config(format!("--out: cannot create {}: {e}", path.display())))?;
                output::write_profile(BufWriter::new(file), &cfg, tau, &res)?;
            }
            if !res.converged {
                error!("ground-state iteration did not converge within {} steps", problem.max_steps);
                return Ok(EXIT_NUMERICAL);
            }
        }
    }
    Ok(EXIT_OK)
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code: 0 on success, 2 for configuration errors and 3 for
/// numerical failures.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                EXIT_CONFIG
            } else {
                EXIT_NUMERICAL
            }
        }
    }
}
