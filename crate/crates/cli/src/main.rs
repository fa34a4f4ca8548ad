//! `chebstep`: reproducible experiment runner.
//!
//! Subcommands: `list`, `run <experiment>`, `rates`, `permsearch`. Failures
//! print a one-line JSON object `{"error": kind, "message": text}` on stderr
//! and exit with a nonzero status.

mod config;
mod error;
mod experiments;
mod output;
mod tables;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use chebstep::SpectralBounds;
use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{split_assignment, ExperimentConfig, ParamKind};
use error::{CliError, Result};
use output::{to_json_string, OutputWriter, MANIFEST_FILE};

#[derive(Parser)]
#[command(name = "chebstep", version, about = "Chebyshev step schedules and Chebyshev-PSOR experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the registered experiments and their parameters.
    List,
    /// Run a registered experiment and write traces, metadata and a manifest.
    Run(RunArgs),
    /// Convergence rates R_s, R_*, q_ch(T) and q_ch* over a condition-number grid.
    Rates(RatesArgs),
    /// Order Chebyshev steps by the incremental permutation search.
    Permsearch(PermArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Registered experiment name (see `list`).
    experiment: String,
    /// Master seed [default: 1].
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for trial-level parallelism [default: available cores].
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Number of trials (shorthand for `--set trials=N`).
    #[arg(long)]
    trials: Option<u64>,
    /// Parameter override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Flat JSON object of overrides, applied before `--set`.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct RatesArgs {
    /// Explicit condition numbers, comma separated; replaces the grid.
    #[arg(long, value_delimiter = ',')]
    kappa: Vec<f64>,
    /// Bounds `a,b` of a single spectrum; adds the row for κ = b/a.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    bounds: Vec<f64>,
    #[arg(long, default_value_t = 1.1)]
    kappa_min: f64,
    #[arg(long, default_value_t = 1000.0)]
    kappa_max: f64,
    #[arg(long, default_value_t = 40)]
    points: usize,
    /// Periods T, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32")]
    periods: Vec<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PermArgs {
    #[arg(long, allow_negative_numbers = true)]
    lambda_min: f64,
    #[arg(long, allow_negative_numbers = true)]
    lambda_max: f64,
    /// Period T (at most 10).
    #[arg(short = 'T', long = "period")]
    period: usize,
    /// Evaluation point parameter u of the search.
    #[arg(long, default_value_t = 0.3)]
    u: f64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("writing stdout", e)),
    }
}

fn cmd_list() -> Result<()> {
    let mut s = String::new();
    for e in experiments::REGISTRY {
        s.push_str(&format!("{}\n    {}\n", e.name, e.description));
        for p in e.params {
            let default = match p.kind {
                ParamKind::Int(v) => v.to_string(),
                ParamKind::Float(v) => v.to_string(),
                ParamKind::Bound(Some(v)) => v.to_string(),
                ParamKind::Bound(None) => "auto".to_string(),
            };
            s.push_str(&format!("    {:<12} {:<8} {}\n", p.key, default, p.help));
        }
    }
    emit(None, &s)
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let started = Instant::now();
    let exp = experiments::find(&args.experiment)?;
    let (file_seed, mut overrides) = match &args.config {
        Some(path) => config::read_config_file(path)?,
        None => (None, Vec::new()),
    };
    for s in &args.set {
        overrides.push(split_assignment(s)?);
    }
    if let Some(t) = args.trials {
        overrides.push(("trials".into(), t.to_string()));
    }
    let seed = args.seed.or(file_seed).unwrap_or(1);
    let cfg = ExperimentConfig::resolve(exp.name, seed, exp.params, &overrides, args.out.clone())?;

    let jobs = match args.jobs {
        Some(0) => return Err(CliError::Usage("--jobs must be at least 1".into())),
        Some(j) => j,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;

    let result = (exp.run)(&cfg, &pool)?;

    let mut writer = OutputWriter::create(&cfg.output_dir)?;
    let snapshot = cfg.snapshot();
    writer.write_json(&format!("{}_config.json", exp.name), &snapshot)?;
    for (method, trace) in &result.traces {
        writer.write(&format!("{}_{method}.csv", exp.name), &trace.to_csv())?;
    }
    writer.write_json(&format!("{}_meta.json", exp.name), &result.meta)?;
    for (suffix, contents) in &result.extra {
        writer.write(&format!("{}_{suffix}", exp.name), contents)?;
    }
    let manifest = writer.finish(snapshot, started)?;
    let summary = serde_json::json!({
        "experiment": exp.name,
        "manifest": cfg.output_dir.join(MANIFEST_FILE),
        "outputs": manifest.outputs.len(),
        "duration_seconds": manifest.duration_seconds,
    });
    emit(None, &to_json_string(&summary))
}

fn cmd_rates(args: RatesArgs) -> Result<()> {
    let mut kappas = if args.kappa.is_empty() && args.bounds.is_empty() {
        tables::kappa_grid(args.kappa_min, args.kappa_max, args.points)?
    } else {
        args.kappa.clone()
    };
    if !args.bounds.is_empty() {
        if args.bounds.len() != 2 {
            return Err(CliError::Usage("--bounds takes exactly two values a,b".into()));
        }
        let b = SpectralBounds::new(args.bounds[0], args.bounds[1])?;
        kappas.push(chebstep::spectral::condition_number(&b)?);
    }
    let rows = tables::rate_table(&kappas, &args.periods)?;
    let text = match args.format {
        Format::Csv => tables::rate_table_csv(&rows, &args.periods),
        Format::Json => to_json_string(&tables::rate_table_json(&rows, &args.periods)),
    };
    emit(args.out.as_ref(), &text)
}

fn cmd_permsearch(args: PermArgs) -> Result<()> {
    let bounds = SpectralBounds::new(args.lambda_min, args.lambda_max)?;
    let text = tables::permsearch_csv(&bounds, args.period, args.u)?;
    emit(args.out.as_ref(), &text)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Usage(e.render().to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::List => cmd_list(),
        Command::Run(a) => cmd_run(a),
        Command::Rates(a) => cmd_rates(a),
        Command::Permsearch(a) => cmd_permsearch(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
