use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use parsmc::Precision;
use parsmc_bench::config::default_lanes;
use parsmc_bench::report::{render_ratios, render_scaling};
use parsmc_bench::{
    ratio_table, read_csv, run_benchmark_with, run_single, scaling_report, simulate_data,
    write_csv, write_csv_to, Algorithm, BenchConfig, BenchError, Field, RunOptions,
};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "parsmc",
    version,
    about = "Particle filtering benchmarks on the trend-plus-noise model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time every algorithm over a sweep of particle counts.
    Bench(BenchArgs),
    /// Run one filter and print its posterior summaries.
    Filter(FilterArgs),
    /// Ratio of one timing field between algorithms, from a benchmark CSV.
    Ratio(RatioArgs),
    /// Log-log slopes of timing against particle count, from a benchmark CSV.
    Scaling(ScalingArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(clap::Args)]
struct BenchArgs {
    /// Particle counts, comma separated.
    #[arg(long = "n", value_delimiter = ',', default_value = "1024")]
    ns: Vec<usize>,
    /// Length of the simulated series.
    #[arg(long, default_value_t = 100)]
    t: usize,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(
        long = "algo",
        value_delimiter = ',',
        default_value = "cpu_naive,cpu_sorted,cpu_stratified,cpu_systematic,par_cutpoint"
    )]
    algorithms: Vec<Algorithm>,
    #[arg(long, default_value = "single")]
    precision: Precision,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker lanes for parallel algorithms [default: available cores].
    #[arg(long)]
    lanes: Option<usize>,
    #[arg(long)]
    store_particles: bool,
    /// Add a digest of each trial's resampled index stream.
    #[arg(long)]
    digest_indices: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Print each record to stderr as it finishes.
    #[arg(short, long)]
    verbose: bool,
}

#[derive(clap::Args)]
struct FilterArgs {
    #[arg(long = "n", default_value_t = 4096)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    t: usize,
    #[arg(long = "algo", default_value = "par_cutpoint")]
    algorithm: Algorithm,
    #[arg(long, default_value = "double")]
    precision: Precision,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    lanes: Option<usize>,
    #[arg(long)]
    store_particles: bool,
    /// Filter with the true variances instead of learning them.
    #[arg(long)]
    known: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(clap::Args)]
struct RatioArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "total")]
    field: Field,
    /// Numerator algorithms [default: every other algorithm in the file].
    #[arg(long = "num", value_delimiter = ',')]
    numerators: Vec<Algorithm>,
    #[arg(long = "den", default_value = "par_cutpoint")]
    denominator: Algorithm,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(clap::Args)]
struct ScalingArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "total")]
    field: Field,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

fn main() -> ExitCode {
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    let result = match cli.command {
        Command::Bench(a) => bench(a),
        Command::Filter(a) => filter(a),
        Command::Ratio(a) => ratio(a),
        Command::Scaling(a) => scaling(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &BenchError) -> u8 {
    match e {
        BenchError::Config(_) => 2,
        _ if e.is_degeneracy() => 3,
        BenchError::Filter {
            source: parsmc::Error::Config(_) | parsmc::Error::NotPowerOfTwo { .. },
            ..
        } => 2,
        _ => 1,
    }
}

fn stdout_error(e: std::io::Error) -> BenchError {
    BenchError::Io {
        path: "<stdout>".into(),
        source: e,
    }
}

fn bench(a: BenchArgs) -> Result<(), BenchError> {
    let config = BenchConfig {
        ns: a.ns,
        t: a.t,
        trials: a.trials,
        algorithms: a.algorithms,
        precision: a.precision,
        seed: a.seed,
        lanes: a.lanes.unwrap_or_else(default_lanes),
        store_particles: a.store_particles,
        digest_indices: a.digest_indices,
    };
    let records = run_benchmark_with(&config, |r| {
        if a.verbose {
            eprintln!(
                "{:<15} n={:<8} {:<9} total {:.3} ms",
                r.algorithm.as_str(),
                r.n,
                r.trial.map_or("aggregate".into(), |t| format!("trial {t}")),
                r.total_ns / 1e6
            );
        }
    })?;
    match (a.format, a.out) {
        (Format::Json, Some(path)) => {
            let text = serde_json::to_string_pretty(&records)?;
            std::fs::write(&path, text).map_err(|source| BenchError::Io { path, source })
        }
        (Format::Json, None) => {
            println!("{}", serde_json::to_string_pretty(&records)?);
            Ok(())
        }
        (_, Some(path)) => write_csv(&records, &path),
        (_, None) => {
            write_csv_to(&records, std::io::stdout().lock()).map_err(|source| BenchError::Csv {
                path: "<stdout>".into(),
                source,
            })
        }
    }
}

fn filter(a: FilterArgs) -> Result<(), BenchError> {
    let lanes = a.lanes.unwrap_or_else(default_lanes);
    if lanes == 0 {
        return Err(BenchError::Config("lanes must be at least 1".into()));
    }
    let y = simulate_data(a.t, a.seed);
    let opts = RunOptions {
        store_particles: a.store_particles,
        digest_indices: true,
        known_params: a.known,
    };
    let run =
        run_single(a.algorithm, a.n, &y, a.precision, a.seed, lanes, opts).map_err(|source| {
            BenchError::Filter {
                algorithm: a.algorithm,
                n: a.n,
                trial: 0,
                source,
            }
        })?;
    let index_digest = format!("{:016x}", run.index_digest.unwrap_or_default());
    let summary_digest = format!("{:016x}", run.summary_digest);
    let mut out = std::io::stdout().lock();
    match a.format {
        Format::Json => {
            let steps: Vec<_> = run
                .state
                .iter()
                .enumerate()
                .map(|(t, s)| {
                    let mut v = json!({
                        "t": t + 1, "y": y[t],
                        "x": {"mean": s.mean, "sd": s.sd, "q005": s.q005, "q05": s.q05, "q50": s.q50, "q95": s.q95, "q995": s.q995},
                    });
                    if let Some(p) = run.params.as_ref().map(|p| p[t]) {
                        v["sigma2"] = json!({"mean": p.sigma2.mean, "q005": p.sigma2.q005, "q995": p.sigma2.q995});
                        v["tau2"] = json!({"mean": p.tau2.mean, "q005": p.tau2.q005, "q995": p.tau2.q995});
                    }
                    v
                })
                .collect();
            let doc = json!({
                "algorithm": a.algorithm, "n": a.n, "precision": a.precision.as_str(), "seed": a.seed,
                "steps": steps, "index_digest": index_digest, "summary_digest": summary_digest,
                "total_ns": run.timings.total.as_nanos() as u64,
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc)?).map_err(stdout_error)
        }
        format => {
            let sep = if format == Format::Csv { "," } else { " " };
            let learning = run.params.is_some();
            let mut head = vec!["t", "y", "x_mean", "x_sd", "x_q05", "x_q50", "x_q95"];
            if learning {
                head.extend([
                    "sigma2_mean",
                    "sigma2_q005",
                    "sigma2_q995",
                    "tau2_mean",
                    "tau2_q005",
                    "tau2_q995",
                ]);
            }
            let mut text = head.join(sep) + "\n";
            for (t, s) in run.state.iter().enumerate() {
                let mut row = vec![(t + 1).to_string(), fmt(y[t])];
                row.extend([s.mean, s.sd, s.q05, s.q50, s.q95].map(fmt));
                if let Some(p) = run.params.as_ref().map(|p| p[t]) {
                    row.extend(
                        [
                            p.sigma2.mean,
                            p.sigma2.q005,
                            p.sigma2.q995,
                            p.tau2.mean,
                            p.tau2.q005,
                            p.tau2.q995,
                        ]
                        .map(fmt),
                    );
                }
                text += &row.join(sep);
                text.push('\n');
            }
            out.write_all(text.as_bytes()).map_err(stdout_error)?;
            if format == Format::Text {
                writeln!(
                    out,
                    "index digest {index_digest}\nsummary digest {summary_digest}"
                )
                .map_err(stdout_error)?;
            } else {
                eprintln!("index digest {index_digest}\nsummary digest {summary_digest}");
            }
            Ok(())
        }
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

fn ratio(a: RatioArgs) -> Result<(), BenchError> {
    let records = read_csv(&a.input)?;
    let numerators = if a.numerators.is_empty() {
        Algorithm::ALL.to_vec()
    } else {
        a.numerators
    };
    let rows = ratio_table(&records, a.field, &numerators, a.denominator);
    let mut out = std::io::stdout().lock();
    match a.format {
        Format::Json => {
            writeln!(out, "{}", serde_json::to_string_pretty(&rows)?).map_err(stdout_error)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in &rows {
                w.serialize(r).map_err(|source| BenchError::Csv {
                    path: "<stdout>".into(),
                    source,
                })?;
            }
            w.flush().map_err(stdout_error)
        }
        Format::Text => out
            .write_all(render_ratios(&rows, a.field).as_bytes())
            .map_err(stdout_error),
    }
}

fn scaling(a: ScalingArgs) -> Result<(), BenchError> {
    let records = read_csv(&a.input)?;
    let report = scaling_report(&records, a.field)?;
    let mut out = std::io::stdout().lock();
    match a.format {
        Format::Json => {
            writeln!(out, "{}", serde_json::to_string_pretty(&report)?).map_err(stdout_error)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for s in &report.slopes {
                w.serialize(s).map_err(|source| BenchError::Csv {
                    path: "<stdout>".into(),
                    source,
                })?;
            }
            w.flush().map_err(stdout_error)
        }
        Format::Text => out
            .write_all(render_scaling(&report).as_bytes())
            .map_err(stdout_error),
    }
}
