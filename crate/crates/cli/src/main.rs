use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use jclass_lab::commands::{self, BuilderChoice, ExampleArgs, OracleArgs};
use jclass_lab::{ConfigError, Overrides, Scenario, ScenarioConfig, Status, EXIT_CONFIG};

const DEFAULT_OUT: &str = "jclass-out";

#[derive(Parser)]
#[command(
    name = "jclass-lab",
    version,
    about = "Check J-class conditions for weighted translations on discretized L^p(G)",
    after_help = "EXAMPLES:\n\
                  \n  jclass-lab describe --config crates/cli/configs/example3.toml\
                  \n  jclass-lab check --config crates/cli/configs/example1.toml --eps 1e-6\
                  \n  jclass-lab witness --config crates/cli/configs/example3.toml --target 3:4\
                  \n  jclass-lab oracle --gamma 4 --trials 200 --seed 42\
                  \n  jclass-lab example 3 --out results\
                  \n\nThe JCLASS_OUT environment variable overrides --out."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML)
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[command(flatten)]
    tol: Tolerances,
}

#[derive(Args, Default)]
struct Tolerances {
    /// Threshold epsilon for the checks and the witness
    #[arg(long)]
    eps: Option<f64>,
    /// Absolute residual-mass tolerance delta
    #[arg(long)]
    delta: Option<f64>,
    /// Largest n scanned
    #[arg(long)]
    nmax: Option<u64>,
    /// Target function LO:HI[@AMP][,LO:HI[@AMP]...] in native coordinates
    #[arg(long)]
    target: Option<String>,
    /// Output directory for CSV files
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl Tolerances {
    fn overrides(&self) -> Overrides {
        Overrides {
            eps: self.eps,
            delta: self.delta,
            n_max: self.nmax,
            target: self.target.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the carrier, element and weight; write weight_profile.csv
    Describe(Common),
    /// Run the condition checkers and classify; write products.csv and orbit_norms.csv
    Check(Common),
    /// Build and verify a witness certificate; write witness.csv
    Witness {
        #[command(flatten)]
        common: Common,
        /// Witness construction (default: torsion on Z_n, jvector when K is set, zero otherwise)
        #[arg(long, value_enum)]
        builder: Option<BuilderChoice>,
    },
    /// Compare the torsion checker with the dense-matrix oracle on random Z_n
    Oracle {
        /// Group order (default: random in 2..=8 per trial)
        #[arg(long)]
        gamma: Option<u32>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        nmax: u64,
        #[arg(long, default_value_t = 1e-3)]
        eta: f64,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Run describe, check and witness on a built-in example (1, 2 or 3)
    Example {
        id: u8,
        /// Example 1: weight on [1, inf)
        #[arg(long)]
        alpha: Option<f64>,
        /// Example 1: weight on (-inf, -1]
        #[arg(long)]
        beta: Option<f64>,
        #[command(flatten)]
        tol: Tolerances,
    },
}

fn out_dir(flag: Option<&Path>, scenario: Option<&Scenario>) -> PathBuf {
    if let Some(env) = std::env::var_os("JCLASS_OUT").filter(|v| !v.is_empty()) {
        return PathBuf::from(env);
    }
    flag.map(Path::to_path_buf)
        .or_else(|| scenario.and_then(|s| s.out_dir.clone()))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn load(common: &Common) -> Result<Scenario, ConfigError> {
    ScenarioConfig::load(&common.config)?
        .validate()?
        .with_overrides(&common.tol.overrides())
}

fn run(cli: Cli, w: &mut dyn Write) -> Result<Status> {
    match cli.command {
        Command::Describe(c) => {
            let s = load(&c)?;
            commands::describe(&s, &out_dir(c.tol.out.as_deref(), Some(&s)), w)
        }
        Command::Check(c) => {
            let s = load(&c)?;
            commands::check(&s, &out_dir(c.tol.out.as_deref(), Some(&s)), w)
        }
        Command::Witness { common, builder } => {
            let s = load(&common)?;
            commands::witness(
                &s,
                builder,
                &out_dir(common.tol.out.as_deref(), Some(&s)),
                w,
            )
        }
        Command::Oracle {
            gamma,
            trials,
            seed,
            nmax,
            eta,
            out,
        } => {
            let args = OracleArgs {
                gamma,
                trials,
                seed,
                n_max: nmax,
                eta,
            };
            commands::oracle(&args, &out_dir(out.as_deref(), None), w)
        }
        Command::Example {
            id,
            alpha,
            beta,
            tol,
        } => {
            let s = commands::example_scenario(&ExampleArgs {
                id,
                alpha,
                beta,
                overrides: tol.overrides(),
            })?;
            commands::example(&s, &out_dir(tol.out.as_deref(), Some(&s)), w)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    let code = match run(cli, &mut lock) {
        Ok(status) => status.code(),
        Err(e) => {
            let _ = lock.flush();
            if let Some(c) = e.downcast_ref::<ConfigError>() {
                eprintln!("config error: {c}");
                EXIT_CONFIG
            } else {
                eprintln!("error: {e:#}");
                1
            }
        }
    };
    ExitCode::from(code as u8)
}
