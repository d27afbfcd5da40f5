//! Command-line driver: run the Type I error study, compute p-value grids
//! for user data, and render results CSVs as aligned tables.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use srtail::approx::Format;
use srtail::expratio::{ExpRatioModel, PairedSample};
use srtail::inference::{pvalue_suite, RowTag};
use srtail::mcsim::{fmt_sig6, run_simulation, Sidedness, SimConfig};
use srtail::numeric::NumericKitConfig;
use srtail::SingularityPolicy;

#[derive(Parser)]
#[command(
    name = "srtail",
    version,
    about = "Tail-probability approximations for signed likelihood roots",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the null-hypothesis rejection-rate study and write a results CSV
    Simulate(SimulateArgs),
    /// Compute the p-value grid for a paired-data CSV at a null value
    Pvalue(PvalueArgs),
    /// Render a results CSV as one aligned table per output format
    Table(TableArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Observation pairs per replicate
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Replicates per round
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
    /// Number of rounds
    #[arg(long, default_value_t = 100)]
    rounds: usize,
    /// Rejection level
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Null value of the interest parameter
    #[arg(long, default_value_t = 1.0)]
    psi0: f64,
    /// Master seed; drawn from system entropy when omitted (the seed used is
    /// always echoed in the diagnostics rows)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: one per CPU); results are identical for any
    /// worker count
    #[arg(long)]
    workers: Option<usize>,
    /// Output path (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PvalueArgs {
    /// Input CSV with header `x,y`, one positive pair per line
    #[arg(long)]
    data: PathBuf,
    /// Null value of the interest parameter
    #[arg(long)]
    psi0: f64,
    /// Output path (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TableArgs {
    /// Results CSV produced by `simulate`
    #[arg(long = "in")]
    input: PathBuf,
}

/// Validation / input problems exit 2; internal failures exit 1.
enum CliError {
    Usage(String),
    Internal(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Internal(e)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Pvalue(args) => cmd_pvalue(args),
        Command::Table(args) => cmd_table(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run `srtail --help` for usage");
            ExitCode::from(2)
        }
        Err(CliError::Internal(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn write_output(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(CliError::from),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .context("writing stdout")?;
            Ok(())
        }
    }
}

fn entropy_seed() -> u64 {
    let nanos = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0);
    nanos ^ (u64::from(std::process::id()) << 32)
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let master_seed = args.seed.unwrap_or_else(entropy_seed);
    let config = SimConfig {
        n: args.n,
        reps_per_round: args.reps,
        rounds: args.rounds,
        alpha: args.alpha,
        psi0: args.psi0,
        master_seed,
        ..SimConfig::default()
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    let report = if let Some(workers) = args.workers {
        if workers == 0 {
            return Err(usage("--workers must be at least 1"));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .context("building worker pool")?;
        pool.install(|| run_simulation(&config))
    } else {
        run_simulation(&config)
    }
    .map_err(|e| CliError::Internal(anyhow::anyhow!(e.to_string())))?;
    write_output(args.out.as_deref(), &report.to_results_csv())
}

fn cmd_pvalue(args: PvalueArgs) -> Result<(), CliError> {
    if !args.psi0.is_finite() || args.psi0 <= 0.0 {
        return Err(usage(format!("--psi0 must be positive, got {}", args.psi0)));
    }
    let sample = parse_data_csv(&args.data)?;
    let model = ExpRatioModel::new(sample);
    let grid = pvalue_suite(
        &model,
        args.psi0,
        &SingularityPolicy::default(),
        &NumericKitConfig::default(),
    );
    let mut out = String::from("row,format,cdf,one_sided,two_sided,fallback_used\n");
    for (row, format, cell) in grid.iter() {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.as_str(),
            format.as_str(),
            fmt_sig6(cell.pair.cdf),
            fmt_sig6(cell.pair.one_sided),
            fmt_sig6(cell.pair.two_sided),
            cell.pair.fallback_used
        ));
    }
    write_output(args.out.as_deref(), &out)
}

/// Parse the paired-data CSV: header `x,y`, then one strictly positive,
/// finite decimal pair per line. Errors cite 1-based line numbers.
fn parse_data_csv(path: &Path) -> Result<PairedSample, CliError> {
    let content = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = content.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == "x,y" => {}
        Some((_, header)) => {
            return Err(usage(format!(
                "line 1: expected header `x,y`, found `{}`",
                header.trim_end()
            )))
        }
        None => return Err(usage("empty data file; expected header `x,y`")),
    }
    let mut pairs = Vec::new();
    for (idx, line) in lines {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let (xs, ys) = line
            .split_once(',')
            .ok_or_else(|| usage(format!("line {lineno}: expected `x,y`, found `{line}`")))?;
        let parse = |field: &str, name: &str| -> Result<f64, CliError> {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| usage(format!("line {lineno}: {name} is not a number: `{field}`")))?;
            if !v.is_finite() || v <= 0.0 {
                return Err(usage(format!(
                    "line {lineno}: {name} must be a strictly positive finite number, got {field}"
                )));
            }
            Ok(v)
        };
        pairs.push((parse(xs, "x")?, parse(ys, "y")?));
    }
    PairedSample::new(pairs).map_err(|e| usage(e.to_string()))
}

fn round3(v: f64) -> String {
    format!("{:.3}", (v * 1000.0).round_ties_even() / 1000.0)
}

fn cmd_table(args: TableArgs) -> Result<(), CliError> {
    let content = std::fs::read_to_string(&args.input)
        .map_err(|e| usage(format!("cannot read {}: {e}", args.input.display())))?;
    let mut lines = content.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == "kind,row,format,sidedness,round,value" => {}
        _ => {
            return Err(usage(
                "expected a results CSV with header `kind,row,format,sidedness,round,value`",
            ))
        }
    }
    let mut averages: BTreeMap<(RowTag, Format, Sidedness), f64> = BTreeMap::new();
    for (idx, line) in lines {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(usage(format!(
                "line {lineno}: expected 6 fields, found {}",
                fields.len()
            )));
        }
        if fields[0] != "average" {
            continue;
        }
        let row = RowTag::parse(fields[1])
            .ok_or_else(|| usage(format!("line {lineno}: unknown row tag `{}`", fields[1])))?;
        let format = Format::parse(fields[2])
            .ok_or_else(|| usage(format!("line {lineno}: unknown format `{}`", fields[2])))?;
        let side = match fields[3] {
            "one" => Sidedness::One,
            "two" => Sidedness::Two,
            other => return Err(usage(format!("line {lineno}: unknown sidedness `{other}`"))),
        };
        let value: f64 = fields[5].parse().map_err(|_| {
            usage(format!(
                "line {lineno}: value is not a number: `{}`",
                fields[5]
            ))
        })?;
        averages.insert((row, format, side), value);
    }
    if averages.is_empty() {
        return Err(usage("no average rows found in the results CSV"));
    }

    let mut out = String::new();
    for format in Format::ALL {
        let rows: Vec<RowTag> = RowTag::ALL
            .into_iter()
            .filter(|&row| averages.contains_key(&(row, format, Sidedness::One)))
            .collect();
        if rows.is_empty() {
            continue;
        }
        out.push_str(&format!(
            "Type I error probability (%), {} format\n",
            format.as_str()
        ));
        out.push_str(&format!(
            "{:<12}{:>12}{:>12}\n",
            "row", "one-sided", "two-sided"
        ));
        for row in rows {
            let one = averages[&(row, format, Sidedness::One)];
            let two = averages
                .get(&(row, format, Sidedness::Two))
                .copied()
                .ok_or_else(|| {
                    usage(format!(
                        "missing two-sided average for {}/{}",
                        row.as_str(),
                        format.as_str()
                    ))
                })?;
            out.push_str(&format!(
                "{:<12}{:>12}{:>12}\n",
                row.as_str(),
                round3(one),
                round3(two)
            ));
        }
        out.push('\n');
    }
    write_output(None, &out)
}
