use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rabi_lab::criticality::{a2_crossings, a2_threshold_j_tilde, critical_coupling_dimensionless};
use rabi_lab::sweep::output::render;
use rabi_lab::sweep::wigner::{wigner_csv, wigner_summary_json};
use rabi_lab::sweep::{run_figure, run_sweep, run_wigner, Cache, FigureOptions, Format, SweepSpec, WignerSpec};
use rabi_lab::Error;

#[derive(Parser)]
#[command(name = "rabi-lab", version, about = "Sweeps, figure data and Wigner tomography for the indirect Rabi model")]
struct Cli {
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Neither read nor write the point cache.
    #[arg(long, global = true)]
    no_cache: bool,
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Csv)]
    format: OutFormat,
    /// Override the eigensolver residual tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Csv => Format::Csv,
            OutFormat::Json => Format::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a TOML file.
    Sweep {
        config: PathBuf,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the data behind one figure target.
    Figure {
        name: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Print the critical coupling for a hopping strength.
    Critical {
        #[arg(long)]
        j_tilde: f64,
        /// With an A^2 term: list every boundary crossing instead.
        #[arg(long)]
        d_tilde: Option<f64>,
        /// Upper end of the crossing search.
        #[arg(long, default_value_t = 3.0)]
        g_max: f64,
    },
    /// Evaluate a Wigner function described by a TOML file.
    Wigner {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inspect or empty the point cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Subcommand)]
enum CacheAction {
    Stats,
    Clear,
}

enum Outcome {
    Done,
    Partial(usize),
}

fn workers(cli: &Cli) -> usize {
    cli.workers
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
        .max(1)
}

fn emit(out: &Option<PathBuf>, body: &str) -> Result<(), Error> {
    match out {
        Some(p) => std::fs::write(p, body)?,
        None => print!("{body}"),
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    match &cli.command {
        Command::Sweep { config, out } => {
            let mut spec = SweepSpec::load(config)?;
            if let Some(t) = cli.tol {
                spec.numerics.solver_tol = t;
                spec.validate()?;
            }
            let cache = if cli.no_cache {
                None
            } else {
                Some(Cache::open(Cache::resolve_dir(spec.cache_dir.as_deref()))?)
            };
            let result = run_sweep(&spec, workers(cli), cache.as_ref())?;
            emit(out, &render(&result, cli.format.into())?)?;
            match result.failures() {
                0 => Ok(Outcome::Done),
                n => Ok(Outcome::Partial(n)),
            }
        }
        Command::Figure { name, out } => {
            let opts = FigureOptions {
                workers: workers(cli),
                cache: if cli.no_cache { None } else { Some(Cache::open(Cache::resolve_dir(None))?) },
                solver_tol: cli.tol,
                format: cli.format.into(),
            };
            let res = run_figure(name, out, &opts)?;
            for f in &res.files {
                eprintln!("wrote {}", f.display());
            }
            match res.failures {
                0 => Ok(Outcome::Done),
                n => Ok(Outcome::Partial(n)),
            }
        }
        Command::Critical { j_tilde, d_tilde, g_max } => {
            match d_tilde {
                None => println!("g_tilde_c = {:.10}", critical_coupling_dimensionless(*j_tilde)?),
                Some(d) => {
                    let xs = a2_crossings(*j_tilde, *d, *g_max);
                    if xs.is_empty() {
                        println!("g_tilde_c = none in (0, {g_max}]");
                    } else {
                        let list: Vec<String> = xs.iter().map(|x| format!("{x:.10}")).collect();
                        println!("g_tilde_c = {}", list.join(", "));
                    }
                    if let Some(t) = (*d < 1.0).then(|| a2_threshold_j_tilde(*d, 0.1).ok()).flatten() {
                        println!("j_tilde_threshold = {t:.10}");
                    }
                }
            }
            Ok(Outcome::Done)
        }
        Command::Wigner { config, out } => {
            let mut spec = WignerSpec::load(config)?;
            if let Some(t) = cli.tol {
                spec.solver_tol = t;
            }
            let report = run_wigner(&spec)?;
            let body = match cli.format {
                OutFormat::Csv => {
                    eprint!("{}", wigner_summary_json(&report)?);
                    wigner_csv(&report.grid)?
                }
                OutFormat::Json => {
                    let mut s = serde_json::to_string_pretty(&report)?;
                    s.push('\n');
                    s
                }
            };
            emit(out, &body)?;
            Ok(Outcome::Done)
        }
        Command::Cache { action } => {
            let cache = Cache::open(Cache::resolve_dir(None))?;
            match action {
                CacheAction::Stats => {
                    let s = cache.stats()?;
                    println!("dir = {}", cache.dir().display());
                    println!("entries = {}", s.entries);
                    println!("bytes = {}", s.bytes);
                }
                CacheAction::Clear => println!("removed = {}", cache.clear()?),
            }
            Ok(Outcome::Done)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Partial(n)) => {
            eprintln!("{n} point(s) failed; see the error column");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
