//! Command-line front end: run configs, regenerate the worked-example
//! figures, check assignments, and list switching patterns.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chaossync_core::analysis;
use chaossync_core::controller::Reduction;
use chaossync_core::scheme::{
    enumerate_patterns, validate_assignment, ValidationOptions, MAX_CATALOG_DIM,
};
use chaossync_core::simulate::run_many;
use chaossync_core::{
    classify_pattern, convergence_report, decay_residual, export_report_csv, export_trace_csv,
    run_closed_loop, ClosedLoopTrace, Error, Overrides, Registry, RunSpec, SimConfig, SplitPolicy,
    Variant,
};
use clap::{Args, Parser, Subcommand};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DIVERGENCE: u8 = 3;

/// Output directory used when neither flag, environment nor config names one.
pub const DEFAULT_OUT: &str = "out";

#[derive(Debug, Parser)]
#[command(
    name = "chaossync",
    version,
    about = "Multi-switching synchronization of eight chaotic systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one config and write the trace and convergence report.
    Simulate(SimulateArgs),
    /// Write the seven worked-example CSVs (six slot pairs, one error table).
    ReproducePaper(OutArg),
    /// Check a config's assignment and scaling without running it.
    Validate(ConfigArg),
    /// Count switching tuples per index pattern for indices 1..=n.
    EnumeratePatterns { n: usize },
    /// Run several configs concurrently, each into its own subdirectory.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Args)]
pub struct OutArg {
    /// Output directory (defaults to the config's output.dir, then "out").
    #[arg(long, env = "CHAOSSYNC_OUT")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OverrideArgs {
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub gain: Option<f64>,
    /// "even" or "w-channel".
    #[arg(long)]
    pub policy: Option<SplitPolicy>,
    /// "full", "non-switched", "uncontrolled", or a reduction name.
    #[arg(long)]
    pub variant: Option<Variant>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub out: OutArg,
    #[command(flatten)]
    pub overrides: OverrideArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long = "config", required = true)]
    pub configs: Vec<PathBuf>,
    #[command(flatten)]
    pub out: OutArg,
    #[command(flatten)]
    pub overrides: OverrideArgs,
}

/// A command failure with its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Divergence { .. } => EXIT_DIVERGENCE,
            _ => EXIT_CONFIG,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Failure::config(format!("{}: {e}", path.display()))
    }
}

type CmdResult = std::result::Result<(), Failure>;

pub fn run(cli: Cli, stdout: &mut dyn Write) -> CmdResult {
    match cli.command {
        Command::Simulate(args) => simulate(&args, stdout),
        Command::ReproducePaper(args) => {
            let dir = args.out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
            let files = reproduce_paper(&dir)?;
            for f in files {
                say(stdout, format_args!("wrote {}", f.display()))?;
            }
            Ok(())
        }
        Command::Validate(args) => validate(&args.config, stdout),
        Command::EnumeratePatterns { n } => patterns(n, stdout),
        Command::Sweep(args) => sweep(&args, stdout),
    }
}

fn say(w: &mut dyn Write, args: fmt::Arguments<'_>) -> CmdResult {
    writeln!(w, "{args}").map_err(|e| Failure::config(format!("stdout: {e}")))
}

pub fn load_spec(path: &Path) -> std::result::Result<RunSpec, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    RunSpec::from_toml_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

fn overrides(args: &OverrideArgs, out: &OutArg) -> Overrides {
    Overrides {
        dt: args.dt,
        t_end: args.t_end,
        gain: args.gain,
        policy: args.policy,
        variant: args.variant,
        out: out.out.clone(),
    }
}

fn create(path: &Path) -> std::result::Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::io(path, e))
}

fn make_dir(dir: &Path) -> CmdResult {
    fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))
}

/// Writes the trace and report of a finished run into `dir`.
fn write_run(spec: &RunSpec, trace: &ClosedLoopTrace, dir: &Path) -> CmdResult {
    make_dir(dir)?;
    export_trace_csv(trace, create(&dir.join(&spec.output.trace))?)?;
    let report = convergence_report(trace, spec.output.threshold)?;
    export_report_csv(&report, create(&dir.join(&spec.output.report))?)?;
    Ok(())
}

fn summary(w: &mut dyn Write, trace: &ClosedLoopTrace, dir: &Path) -> CmdResult {
    let last = trace.samples.last().map(|s| s.error.norm()).unwrap_or(0.0);
    say(
        w,
        format_args!(
            "{}: {} samples, final |e| = {last:.3e}, decay residual = {:.3e}",
            dir.display(),
            trace.len(),
            decay_residual(trace, trace.gain)
        ),
    )
}

fn simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> CmdResult {
    let mut spec = load_spec(&args.config)?;
    spec.apply_overrides(&overrides(&args.overrides, &args.out));
    let cfg = spec.to_sim_config(&Registry::with_builtins())?;
    let trace = run_closed_loop(&cfg)?;
    let dir = out_dir(&spec);
    write_run(&spec, &trace, &dir)?;
    summary(stdout, &trace, &dir)
}

fn out_dir(spec: &RunSpec) -> PathBuf {
    spec.output
        .dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// File names written by [`reproduce_paper`], in order.
pub fn figure_names() -> Vec<String> {
    analysis::figure_names(SimConfig::paper().dim())
}

/// Runs the built-in worked example and writes `figure1.csv`..`figure7.csv`.
pub fn reproduce_paper(dir: &Path) -> std::result::Result<Vec<PathBuf>, Failure> {
    let trace = run_closed_loop(&SimConfig::paper())?;
    analysis::export_figure_set(&trace, dir).map_err(|e| match e {
        Error::Io(io) => Failure::io(dir, io),
        other => other.into(),
    })
}

fn validate(path: &Path, stdout: &mut dyn Write) -> CmdResult {
    let spec = load_spec(path)?;
    let n = spec.dim();
    let assignment = spec.assignment();
    let mut problems: Vec<String> = Vec::new();

    let report = validate_assignment(
        &assignment,
        n,
        ValidationOptions {
            allow_non_permutation: spec.assignment.allow_non_permutation,
        },
    );
    if assignment.check_structure(n).is_ok() {
        for b in 1..=2 {
            for t in assignment.tuples(b) {
                say(
                    stdout,
                    format_args!(
                        "block {b} slot {}: ({},{},{}) {}",
                        t.m,
                        t.i,
                        t.j,
                        t.l,
                        classify_pattern(t)
                    ),
                )?;
            }
        }
    }
    for w in &report.warnings {
        say(stdout, format_args!("warning: {w}"))?;
    }
    problems.extend(report.errors.iter().map(|v| v.to_string()));

    let zero_ok = match spec.controller.variant {
        Variant::Reduced(r) => r.zero_pairs(),
        _ => Vec::new(),
    };
    let mut scaling = spec.scaling.clone();
    if let Variant::Reduced(r) = spec.controller.variant {
        Reduction::apply(r, &mut scaling);
    }
    problems.extend(scaling.check(n, &zero_ok).iter().map(|i| i.to_string()));

    // Everything else (system names, dimensions, integrator settings) is
    // caught by building the run itself.
    if problems.is_empty() {
        if let Err(e) = spec.to_sim_config(&Registry::with_builtins()) {
            problems.push(e.to_string());
        }
    }
    if problems.is_empty() {
        say(stdout, format_args!("ok"))
    } else {
        for p in &problems {
            say(stdout, format_args!("error: {p}"))?;
        }
        Err(Failure::config(format!(
            "{}: {} problem(s)",
            path.display(),
            problems.len()
        )))
    }
}

fn patterns(n: usize, stdout: &mut dyn Write) -> CmdResult {
    if !(2..=MAX_CATALOG_DIM).contains(&n) {
        return Err(Failure::config(format!(
            "n must be between 2 and {MAX_CATALOG_DIM}, got {n} (n = 1 has no switching tuple)"
        )));
    }
    let catalog = enumerate_patterns(n)?;
    for (class, count) in &catalog.counts {
        let note = if class.is_switching() {
            ""
        } else {
            "  (non-switching)"
        };
        say(
            stdout,
            format_args!("{:<10} {count:>5}{note}", class.name()),
        )?;
    }
    say(
        stdout,
        format_args!(
            "n = {n}: {} valid switching tuples of {}",
            catalog.valid, catalog.total
        ),
    )
}

fn sweep(args: &SweepArgs, stdout: &mut dyn Write) -> CmdResult {
    let root = args
        .out
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let ov = Overrides {
        out: None,
        ..overrides(&args.overrides, &OutArg { out: None })
    };
    let mut specs = Vec::new();
    let mut configs = Vec::new();
    for path in &args.configs {
        let mut spec = load_spec(path)?;
        spec.apply_overrides(&ov);
        configs.push(spec.to_sim_config(&Registry::with_builtins())?);
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| format!("run{}", specs.len() + 1));
        specs.push((spec, root.join(stem)));
    }
    let mut dirs: Vec<&PathBuf> = specs.iter().map(|(_, d)| d).collect();
    dirs.sort();
    if dirs.windows(2).any(|w| w[0] == w[1]) {
        return Err(Failure::config(
            "sweep configs must have distinct file names",
        ));
    }

    let mut worst: Option<Failure> = None;
    for ((spec, dir), result) in specs.iter().zip(run_many(&configs)) {
        let outcome = result
            .map_err(Failure::from)
            .and_then(|trace| write_run(spec, &trace, dir).map(|_| trace));
        match outcome {
            Ok(trace) => summary(stdout, &trace, dir)?,
            Err(f) => {
                say(stdout, format_args!("{}: failed: {f}", dir.display()))?;
                if worst.as_ref().is_none_or(|w| f.code > w.code) {
                    worst = Some(f);
                }
            }
        }
    }
    match worst {
        None => Ok(()),
        Some(f) => Err(f),
    }
}
