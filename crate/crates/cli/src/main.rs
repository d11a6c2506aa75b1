use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use kaw_core::abstraction::CacheError;
use kaw_core::audit::{audit, AuditOptions};
use kaw_core::scenario::ScenarioError;
use kaw_core::spec::compile_objective;
use kaw_core::{run_closed_loop, Abstraction, CellSet, Scenario, Solver, Trace};

#[derive(Parser)]
#[command(name = "kaw", version, about = "Knowledge-aware abstraction-based controller synthesis")]
struct Cli {
    #[arg(long, value_enum, default_value_t = LogLevel::Info, global = true)]
    log_level: LogLevel,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LogLevel {
    Error,
    Info,
    Debug,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KnownSigns {
    All,
    None,
}

#[derive(Subcommand)]
enum Command {
    /// Build the finite abstraction of a scenario and save it.
    Abstract {
        scenario: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Solve the reach-avoid game and export the controller.
    Synthesize {
        scenario: PathBuf,
        /// Abstraction cache; built in memory when omitted.
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = KnownSigns::None)]
        known_signs: KnownSigns,
        /// Controller CSV.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the closed loop and write the trace.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        /// Defaults to the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Defaults to the scenario's step limit.
        #[arg(long)]
        max_steps: Option<usize>,
        /// Also write the controller in force at the end of the run.
        #[arg(long)]
        controller: Option<PathBuf>,
    },
    /// Draw the map, detection zones and trajectory as SVG.
    Render {
        trace: PathBuf,
        scenario: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Audit a trace against a scenario; exits 0 iff every property holds.
    Check {
        trace: PathBuf,
        scenario: PathBuf,
        /// Fail when the reroute check fails.
        #[arg(long)]
        require_reroute: bool,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error("{0:#}")]
    Io(anyhow::Error),
    #[error("{0:#}")]
    Parse(anyhow::Error),
    #[error("{0:#}")]
    Validation(anyhow::Error),
    #[error("{0:#}")]
    Synthesis(anyhow::Error),
    #[error("{0:#}")]
    Runtime(anyhow::Error),
}

impl CliError {
    fn category(&self) -> &'static str {
        match self {
            CliError::Scenario(e) => e.category(),
            CliError::Cache(CacheError::Io(_)) | CliError::Io(_) => "io",
            CliError::Cache(_) => "cache",
            CliError::Parse(_) => "parse",
            CliError::Validation(_) => "validation",
            CliError::Synthesis(_) => "synthesis",
            CliError::Runtime(_) => "runtime",
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn io_err(e: impl Into<anyhow::Error>, what: impl std::fmt::Display) -> CliError {
    CliError::Io(e.into().context(what.to_string()))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(e, format!("cannot create {}", path.display())))
}

fn load_abstraction(scenario: &Scenario, cache: Option<&Path>) -> CliResult<Abstraction> {
    let start = Instant::now();
    let abs = match cache {
        Some(path) => {
            let abs = Abstraction::load(path)?;
            if !scenario.matches_abstraction(&abs) {
                return Err(CliError::Validation(anyhow::anyhow!(
                    "cache {} was built for a different system or grid",
                    path.display()
                )));
            }
            abs
        }
        None => scenario.build_abstraction().map_err(|e| CliError::Validation(e.into()))?,
    };
    log::info!("abstraction ready in {:.2} s", start.elapsed().as_secs_f64());
    Ok(abs)
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    match cli.command {
        Command::Abstract { scenario, output } => {
            let s = Scenario::load(&scenario)?;
            let start = Instant::now();
            let abs = s.build_abstraction().map_err(|e| CliError::Validation(e.into()))?;
            let elapsed = start.elapsed();
            abs.save(&output)?;
            let stats = abs.stats();
            println!("states: {}", stats.states);
            println!("inputs: {}", stats.inputs);
            println!("transitions: {}", stats.transitions);
            println!("blocked pairs: {}", stats.blocked_pairs);
            println!("wall time: {:.2} s", elapsed.as_secs_f64());
        }
        Command::Synthesize { scenario, cache, known_signs, output } => {
            let s = Scenario::load(&scenario)?;
            let abs = load_abstraction(&s, cache.as_deref())?;
            let interp = s.interpretation().map_err(|e| CliError::Validation(e.into()))?;
            let spec = kaw_core::CompositeSpec::new(s.objective().clone(), &interp)
                .map_err(|e| CliError::Validation(e.into()))?;
            let mut known = CellSet::empty(interp.domain_len());
            if known_signs == KnownSigns::All {
                for sign in interp.signs() {
                    known.union_with(&sign.cells);
                }
            }
            let game = compile_objective(spec.template(), &interp, spec.obligations(), &known)
                .map_err(|e| CliError::Validation(e.into()))?;
            let start = Instant::now();
            let controller =
                Solver::new(&abs).solve_reach_avoid(&game).map_err(|e| CliError::Synthesis(e.into()))?;
            let elapsed = start.elapsed();
            println!("target cells: {}", game.target.len());
            println!("avoid cells: {}", game.avoid.len());
            println!("winning cells: {}", controller.winning().len());
            println!("iterations: {}", controller.iterations());
            println!("wall time: {:.2} s", elapsed.as_secs_f64());
            let x0 = s.grid_x().quantize(&s.file.initial_state);
            match x0 {
                Ok(x0) => println!("initial cell {} winning: {}", x0.0, controller.is_winning(x0)),
                Err(_) => println!("initial state outside the state domain"),
            }
            if let Some(path) = output {
                let mut w = create(&path)?;
                controller.write_csv(&mut w).and_then(|_| w.flush()).map_err(|e| io_err(e, path.display()))?;
            }
        }
        Command::Simulate { scenario, cache, output, seed, max_steps, controller } => {
            let s = Scenario::load(&scenario)?;
            let abs = load_abstraction(&s, cache.as_deref())?;
            let seed = seed.unwrap_or(s.file.seed);
            let max_steps = max_steps.unwrap_or(s.file.max_steps);
            let start = Instant::now();
            let result = run_closed_loop(&s, &abs, seed, max_steps).map_err(|e| CliError::Runtime(e.into()))?;
            let elapsed = start.elapsed();
            let mut w = create(&output)?;
            result.trace.write_csv(&mut w).and_then(|_| w.flush()).map_err(|e| io_err(e, output.display()))?;
            if let Some(path) = controller {
                let mut w = create(&path)?;
                result.controller.write_csv(&mut w).and_then(|_| w.flush()).map_err(|e| io_err(e, path.display()))?;
            }
            println!("outcome: {}", result.trace.outcome);
            println!("steps: {}", result.trace.steps.len() - 1);
            for e in &result.syntheses {
                println!(
                    "synthesis at step {}: winning {} cells, avoid {} cells, {:.3} s",
                    e.step,
                    e.winning,
                    e.avoid,
                    e.elapsed.as_secs_f64()
                );
            }
            println!("wall time: {:.2} s", elapsed.as_secs_f64());
        }
        Command::Render { trace, scenario, output } => {
            let s = Scenario::load(&scenario)?;
            let t = read_trace(&trace)?;
            let svg = kaw_cli::render_svg(&s, &t).map_err(|e| CliError::Validation(e.into()))?;
            std::fs::write(&output, svg).map_err(|e| io_err(e, output.display()))?;
        }
        Command::Check { trace, scenario, require_reroute } => {
            let s = Scenario::load(&scenario)?;
            let t = read_trace(&trace)?;
            let report =
                audit(&t, &s, AuditOptions { require_reroute }).map_err(|e| CliError::Validation(e.into()))?;
            print!("{report}");
            if !report.passed() {
                println!("audit failed");
                return Ok(ExitCode::from(1));
            }
            println!("audit passed");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn read_trace(path: &Path) -> CliResult<Trace> {
    let file = File::open(path).map_err(|e| io_err(e, format!("cannot open {}", path.display())))?;
    Trace::read_csv(BufReader::new(file))
        .with_context(|| format!("reading trace {}", path.display()))
        .map_err(CliError::Parse)
}

fn init_threads() {
    if let Some(n) = std::env::var("KAW_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            log::warn!("cannot configure {n} threads: {e}");
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.log_level {
        LogLevel::Error => log::LevelFilter::Error,
        LogLevel::Info => log::LevelFilter::Info,
        LogLevel::Debug => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    init_threads();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(2)
        }
    }
}
