use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bentkus_core::confseq::Method;
use bentkus_harness::config::{ExperimentConfig, Format, Kind};
use bentkus_harness::runners::run;
use bentkus_harness::{HarnessError, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bentkus", version, about = "Confidence-sequence experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Miscoverage and width of confidence sequences (config may say "width").
    Coverage(Flags),
    /// Adaptive stopping times.
    Stopping(Flags),
    /// Best-arm identification.
    Bestarm(Flags),
    /// Fixed-n and stitched boundaries over an n grid.
    BoundTable(Flags),
    /// Stitched boundaries over eta and power grids.
    Sweep(Flags),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct Flags {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Comma-separated method names, e.g. A-Bentkus,E-Bernstein.
    #[arg(long)]
    methods: Option<String>,
}

fn resolve(kind: Kind, flags: &Flags) -> Result<ExperimentConfig> {
    let mut cfg = match &flags.config {
        Some(path) => ExperimentConfig::load(path, Some(kind))?,
        None => ExperimentConfig::defaults(kind),
    };
    if let Some(s) = flags.seed {
        cfg.seed = s;
    }
    if let Some(r) = flags.reps {
        cfg.replications = r;
    }
    if let Some(h) = flags.horizon {
        cfg.set_horizon(h);
    }
    if let Some(d) = flags.delta {
        cfg.delta = d;
    }
    if let Some(list) = &flags.methods {
        cfg.methods = list
            .split(',')
            .map(|s| s.parse::<Method>().map_err(|e| HarnessError::Config(e.to_string())))
            .collect::<Result<_>>()?;
    }
    if let Some(f) = flags.format {
        cfg.format = match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
    }
    if let Some(out) = &flags.out {
        cfg.output = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn trace_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    let ext = out.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    out.with_file_name(format!("{stem}.trace.{ext}"))
}

fn execute(cli: Cli) -> Result<()> {
    let (kind, flags) = match &cli.command {
        Command::Coverage(f) => (Kind::Coverage, f),
        Command::Stopping(f) => (Kind::Stopping, f),
        Command::Bestarm(f) => (Kind::Bestarm, f),
        Command::BoundTable(f) => (Kind::BoundTable, f),
        Command::Sweep(f) => (Kind::Sweep, f),
    };
    let cfg = resolve(kind, flags)?;
    let outcome = run(&cfg)?;
    match &cfg.output {
        Some(path) => {
            outcome.report.write(cfg.format, BufWriter::new(File::create(path)?))?;
            if let Some(trace) = &outcome.trace {
                trace.write(cfg.format, BufWriter::new(File::create(trace_path(path))?))?;
            }
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            outcome.report.write(cfg.format, &mut lock)?;
            if let Some(trace) = &outcome.trace {
                writeln!(lock)?;
                trace.write(cfg.format, &mut lock)?;
            }
        }
    }
    Ok(())
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
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bentkus: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
