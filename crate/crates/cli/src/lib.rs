//! Batch driver for the exdev laboratory: experiment configs in, JSON and CSV reports out.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;

use config::{ConfigFile, ExperimentKind, ResolvedConfig};
pub use error::CliError;
use report::SCHEMA_VERSION;

pub const THREADS_ENV: &str = "EXDEV_THREADS";

pub fn version_line() -> String {
    format!(
        "exdev {} (exdev-core {}, report schema v{SCHEMA_VERSION})",
        env!("CARGO_PKG_VERSION"),
        exdev::VERSION
    )
}

#[derive(Parser, Debug)]
#[command(name = "exdev", about = "Extreme-deviation conditional limit laboratory", disable_version_flag = true)]
struct Cli {
    /// Print library and schema versions.
    #[arg(short = 'V', long)]
    version: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Experiment config (TOML); flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Density spec file (TOML, or JSON by extension).
    #[arg(long)]
    density: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; falls back to EXDEV_THREADS, then to all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// JSON report path.
    #[arg(long)]
    json: Option<PathBuf>,
    /// CSV table path.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Output path; `.csv` sets the table, anything else the JSON report.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cumulants and Abelian ratios on a geometric grid of tilts.
    Tilt {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        a: Option<f64>,
        /// `t_lo:t_hi:points`, geometric.
        #[arg(long)]
        grid: Option<String>,
        /// Alias for --json.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Edgeworth density against the convolution oracle.
    Edgeworth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
    },
    /// Saddlepoint tail probability with an importance-sampling oracle.
    Tail {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        oracle_samples: Option<usize>,
    },
    /// TV distance between the point-conditional marginal and the tilt.
    GibbsTv {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        chains: Option<usize>,
        /// Retained draws per chain.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        stride_factor: Option<u64>,
        #[arg(long)]
        burn_in_factor: Option<u64>,
    },
    /// Probability that every summand lies in the localization window.
    Dlp {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Sampling under an f-tilt and concentration on the level set.
    Levelset {
        #[command(flatten)]
        common: Common,
        /// linear | sumsq | norm2
        #[arg(long)]
        f: Option<String>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        a: Option<Vec<f64>>,
        #[arg(long)]
        count: Option<usize>,
        /// signed_root | positive
        #[arg(long)]
        ambient: Option<String>,
    },
    /// Exceedance-conditional mass against the tilt on intervals around the level.
    Equiv {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        count: Option<usize>,
    },
    /// Runs the experiment named in a config file.
    Run {
        #[command(flatten)]
        common: Common,
    },
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

/// Loads the config, applies flag overrides, and resolves it.
fn resolve(command: Command) -> Result<(ResolvedConfig, Option<usize>), CliError> {
    let common = match &command {
        Command::Tilt { common, .. }
        | Command::Edgeworth { common, .. }
        | Command::Tail { common, .. }
        | Command::GibbsTv { common, .. }
        | Command::Dlp { common, .. }
        | Command::Levelset { common, .. }
        | Command::Equiv { common, .. }
        | Command::Run { common } => common.clone(),
    };
    let mut file = match &common.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let kind = match &command {
        Command::Tilt { t, a, grid, report, .. } => {
            let p = &mut file.tilt;
            if t.is_some() || a.is_some() {
                p.t = *t;
                p.a = *a;
            }
            set(&mut p.grid, grid.clone());
            if report.is_some() {
                file.output.json = report.clone();
            }
            ExperimentKind::Tilt
        }
        Command::Edgeworth { a, n_list, .. } => {
            set(&mut file.edgeworth.a, *a);
            set(&mut file.edgeworth.n_list, n_list.clone());
            ExperimentKind::Edgeworth
        }
        Command::Tail {
            n, a, oracle_samples, ..
        } => {
            set(&mut file.tail.n, *n);
            set(&mut file.tail.a, *a);
            set(&mut file.tail.oracle_samples, *oracle_samples);
            ExperimentKind::Tail
        }
        Command::GibbsTv {
            n_list,
            alpha,
            chains,
            steps,
            stride_factor,
            burn_in_factor,
            ..
        } => {
            let p = &mut file.gibbs_tv;
            set(&mut p.n_list, n_list.clone());
            set(&mut p.alpha, *alpha);
            set(&mut p.chains, *chains);
            set(&mut p.steps, *steps);
            set(&mut p.stride_factor, *stride_factor);
            set(&mut p.burn_in_factor, *burn_in_factor);
            ExperimentKind::GibbsTv
        }
        Command::Dlp {
            k,
            alpha,
            n_list,
            count,
            delta,
            ..
        } => {
            let p = &mut file.dlp;
            if k.is_some() {
                p.k = *k;
            }
            set(&mut p.alpha, *alpha);
            set(&mut p.n_list, n_list.clone());
            set(&mut p.count, *count);
            set(&mut p.delta, *delta);
            ExperimentKind::Dlp
        }
        Command::Levelset {
            f,
            dim,
            a,
            count,
            ambient,
            ..
        } => {
            let p = &mut file.levelset;
            set(&mut p.f, f.clone());
            set(&mut p.dim, *dim);
            set(&mut p.a_list, a.clone());
            set(&mut p.count, *count);
            set(&mut p.ambient, ambient.clone());
            ExperimentKind::Levelset
        }
        Command::Equiv {
            n, alpha, a, count, ..
        } => {
            let p = &mut file.equiv;
            set(&mut p.n, *n);
            set(&mut p.alpha, *alpha);
            if a.is_some() {
                p.a = *a;
            }
            set(&mut p.count, *count);
            ExperimentKind::Equiv
        }
        Command::Run { .. } => match (&common.config, file.experiment) {
            (None, _) => return Err(CliError::Invalid("run needs --config".into())),
            (Some(_), None) => {
                return Err(CliError::Invalid(
                    "config does not name an experiment".into(),
                ))
            }
            (Some(_), Some(k)) => k,
        },
    };
    if let Some(d) = common.density {
        // a flag density replaces whatever the file gave
        file.density = None;
        file.density_file = Some(d);
    }
    set(&mut file.seed, common.seed.map(Some));
    if let Some(out) = common.out {
        if out.extension().is_some_and(|e| e == "csv") {
            file.output.csv = Some(out);
        } else {
            file.output.json = Some(out);
        }
    }
    if common.json.is_some() {
        file.output.json = common.json;
    }
    if common.csv.is_some() {
        file.output.csv = common.csv;
    }
    let threads = common.threads.or(file.threads);
    let cfg = file.resolve(kind)?;
    Ok((cfg, threads))
}

fn thread_count(requested: Option<usize>) -> Result<Option<usize>, CliError> {
    let n = match requested {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(s) => Some(s.trim().parse::<usize>().map_err(|_| {
                CliError::Invalid(format!("{THREADS_ENV}='{s}' is not a thread count"))
            })?),
            Err(_) => None,
        },
    };
    if n == Some(0) {
        return Err(CliError::Invalid("threads must be positive".into()));
    }
    Ok(n)
}

fn execute(command: Command) -> Result<Vec<PathBuf>, CliError> {
    let (cfg, threads) = resolve(command)?;
    let threads = thread_count(threads)?;
    let work = || -> Result<Vec<PathBuf>, CliError> {
        let (result, table) = experiments::run(&cfg)?;
        let json = report::to_json(&cfg, &result)?;
        let csv = table.to_csv()?;
        report::write_file(&cfg.output.json, &json)?;
        report::write_file(&cfg.output.csv, &csv)?;
        Ok(vec![cfg.output.json.clone(), cfg.output.csv.clone()])
    };
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Invalid(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

/// Entry point shared by the binary and the tests. Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    print!("{e}");
                    0
                }
                _ => {
                    let msg = e.to_string();
                    let first = msg
                        .lines()
                        .next()
                        .unwrap_or("bad arguments")
                        .trim_start_matches("error: ");
                    eprintln!("CONFIG_INVALID: {first}");
                    2
                }
            };
        }
    };
    if cli.version {
        println!("{}", version_line());
        return 0;
    }
    let Some(command) = cli.command else {
        eprintln!("CONFIG_INVALID: no subcommand given (see --help)");
        return 2;
    };
    match std::panic::catch_unwind(|| execute(command)) {
        Ok(Ok(paths)) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            0
        }
        Ok(Err(e)) => {
            eprintln!("{}", config::one_line(&e.to_string()));
            e.exit_code()
        }
        Err(_) => {
            eprintln!("INTERNAL_ERROR: unexpected failure");
            3
        }
    }
}
