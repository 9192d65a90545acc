//! Command-line front end: Monte Carlo ensembles, analytic moments,
//! diagram verification, reference-table and grid reproduction, and
//! log-normal fitting — all with reproducible seeds and manifests.

mod output;
mod ranges;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cuemap_core::diagrams;
use cuemap_core::ensemble::{
    moment_grid, run_ensemble, table1_report, EnsembleConfig, GridQuantity, RunManifest,
};
use cuemap_core::moments;
use cuemap_core::stats::{fit_lognormal, BinScale};
use cuemap_core::weingarten::{brute_mean, brute_second_moment};

const WORKERS_ENV: &str = "CUEMAP_WORKERS";

/// Package version plus the build's source revision when available.
fn version_string() -> String {
    let build_ref = env!("CUEMAP_BUILD_REF");
    if build_ref.is_empty() {
        env!("CARGO_PKG_VERSION").to_string()
    } else {
        format!("{}+{build_ref}", env!("CARGO_PKG_VERSION"))
    }
}

#[derive(Parser)]
#[command(
    name = "cuemap",
    version,
    about = "Interference statistics of CUE-random completely positive maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Scale {
    Linear,
    Log,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Quantity {
    Mean,
    Std,
}

/// Shared (n, d, s, x) parameter block.
#[derive(Args)]
struct PointArgs {
    /// System dimension n.
    #[arg(long)]
    n: usize,
    /// Levels per environment spin.
    #[arg(long)]
    d: usize,
    /// Number of environment spins (environment dimension is d^s).
    #[arg(long, default_value_t = 1)]
    s: usize,
    /// Dimensionless inverse temperature; accepts "inf" for T = 0.
    #[arg(long, value_parser = parse_x)]
    x: f64,
}

fn parse_x(raw: &str) -> Result<f64, String> {
    let x = if raw.eq_ignore_ascii_case("inf") || raw.eq_ignore_ascii_case("infinity") {
        f64::INFINITY
    } else {
        raw.parse::<f64>().map_err(|e| e.to_string())?
    };
    if x.is_nan() || x < 0.0 {
        return Err(format!("x must be >= 0 or inf, got {raw}"));
    }
    Ok(x)
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo ensemble: histogram + running statistics.
    Mc {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, default_value_t = 100_000)]
        realizations: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        bins: usize,
        #[arg(long, value_enum, default_value_t = Scale::Log)]
        bin_scale: Scale,
        /// Worker threads (default: CUEMAP_WORKERS or all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Histogram destination (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write raw per-realization samples as CSV.
        #[arg(long)]
        samples_out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Analytic mean, second moment, variance, and standard deviation.
    Moments {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Human-readable 5-decimal table instead of machine output.
        #[arg(long)]
        pretty: bool,
    },
    /// Verify the diagram table (and, with --deep, the brute-force
    /// second-moment equivalence) against the Weingarten oracle.
    Verify {
        /// Dimensions at which to check the 23 diagram closed forms.
        #[arg(long, value_delimiter = ',', default_values_t = vec![4usize, 5, 6, 8])]
        n_list: Vec<usize>,
        /// Also run brute-force second-moment comparisons (slower).
        #[arg(long)]
        deep: bool,
    },
    /// Monte Carlo vs analytic comparison for the five reference rows.
    Table1 {
        #[arg(long, default_value_t = 100_000)]
        realizations: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Analytic ln(mean) or ln(std) grid over (n, m) ranges.
    Grid {
        /// Inverse temperature; accepts "inf".
        #[arg(long, value_parser = parse_x)]
        x: f64,
        #[arg(long, value_enum, default_value_t = Quantity::Mean)]
        quantity: Quantity,
        /// n range as start:end:log|lin or a single value.
        #[arg(long, default_value = "2:1024:log")]
        n: String,
        /// m range as start:end:log|lin or a single value.
        #[arg(long, default_value = "2:1024:log")]
        m: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Maximum-likelihood log-normal fit of a sample file.
    Fit {
        /// CSV of samples; last column is used, header optional.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn resolve_workers(cli_workers: Option<usize>) -> Option<usize> {
    cli_workers
        .or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|raw| raw.parse::<usize>().ok()))
}

fn dispatch(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Mc {
            point,
            realizations,
            seed,
            bins,
            bin_scale,
            workers,
            out,
            samples_out,
            format,
        } => {
            let config = EnsembleConfig {
                n: point.n,
                d: point.d,
                s: point.s,
                x: point.x,
                realizations,
                master_seed: seed,
                bins,
                bin_scale: match bin_scale {
                    Scale::Linear => BinScale::Linear,
                    Scale::Log => BinScale::Log,
                },
                workers: resolve_workers(workers),
                keep_samples: samples_out.is_some(),
            };
            config.validate()?;
            let started = Instant::now();
            let result = run_ensemble(&config)?;
            let elapsed = started.elapsed().as_secs_f64();

            let mut outputs = Vec::new();
            if let Some(path) = &samples_out {
                output::write_samples_csv(path, seed, result.samples.as_deref().unwrap())?;
                outputs.push(path.display().to_string());
            }
            if let Some(path) = &out {
                outputs.push(path.display().to_string());
            }
            let manifest = RunManifest {
                tool: "cuemap".into(),
                version: version_string(),
                command: std::env::args().collect::<Vec<_>>().join(" "),
                config: config.clone(),
                elapsed_seconds: elapsed,
                outputs,
            };
            output::emit_mc(&manifest, &result, out.as_deref(), format)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Moments { point, format, pretty } => {
            let report = moments::moment_report(point.n, point.d, point.s, point.x)?;
            output::emit_moments(&report, format, pretty)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Verify { n_list, deep } => {
            if let Some(&bad) = n_list.iter().find(|&&v| v < 4) {
                return Err(format!(
                    "diagram verification needs N >= 4 (k = 4 moments); got N = {bad}"
                )
                .into());
            }
            let ok = run_verify(&n_list, deep)?;
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }

        Command::Table1 { realizations, seed, workers, out, format } => {
            if realizations == 0 {
                return Err("realizations must be >= 1".into());
            }
            let started = Instant::now();
            let rows = table1_report(realizations, seed, resolve_workers(workers))?;
            let elapsed = started.elapsed().as_secs_f64();
            output::emit_table1(&rows, seed, realizations, elapsed, out.as_deref(), format)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Grid { x, quantity, n, m, out, format } => {
            let n_values = ranges::parse(&n)?;
            let m_values = ranges::parse(&m)?;
            let cells = n_values.len().saturating_mul(m_values.len());
            if cells > 16_384 {
                return Err(
                    format!("grid of {cells} cells is too large; use log-spaced ranges").into()
                );
            }
            let quantity = match quantity {
                Quantity::Mean => GridQuantity::Mean,
                Quantity::Std => GridQuantity::Std,
            };
            let points = moment_grid(&n_values, &m_values, x, quantity)?;
            output::emit_grid(&points, x, quantity, out.as_deref(), format)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Fit { input, format } => {
            let samples = output::read_samples_csv(&input)?;
            let fit = fit_lognormal(&samples)?;
            output::emit_fit(&fit, format)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run_verify(n_list: &[usize], deep: bool) -> Result<bool, Box<dyn std::error::Error>> {
    let mut all_pass = true;
    println!("diagram closed forms vs Weingarten oracle");
    println!(
        "{:<6} {:>4} {:>24} {:>24} {:>10}  status",
        "id", "N", "closed_form", "oracle", "rel_err"
    );
    for check in diagrams::verify_diagrams(n_list, 1e-12)? {
        all_pass &= check.pass;
        println!(
            "{:<6} {:>4} {:>24.16e} {:>24.16e} {:>10.2e}  {}",
            check.id,
            check.dim_n,
            check.closed_form,
            check.oracle,
            check.rel_error,
            if check.pass { "pass" } else { "FAIL" }
        );
    }

    println!();
    println!("brute-force mean vs closed form");
    for &(n, m) in &[(2usize, 2usize), (3, 2), (2, 3), (4, 2)] {
        for &x in &[0.0, 0.5, 5.0] {
            let brute = brute_mean(n, m, x)?;
            let closed = moments::mean_interference(n, m, 1, x)?;
            let rel = (brute - closed).abs() / closed.abs().max(f64::MIN_POSITIVE);
            let pass = rel <= 1e-12;
            all_pass &= pass;
            println!(
                "  n={n} m={m} x={x:<4} brute={brute:.12e} closed={closed:.12e} rel={rel:.2e} {}",
                if pass { "pass" } else { "FAIL" }
            );
        }
    }

    if deep {
        println!();
        println!("brute-force second moment vs closed form (B-coefficient arbitration)");
        let mut worst_rejected = 0.0f64;
        for &(n, m) in &[(2usize, 2usize), (2, 3), (3, 2)] {
            for &x in &[0.0, 0.5, 5.0] {
                let brute = brute_second_moment(n, m, x)?;
                let shipped = moments::second_moment(n, m, 1, x)?;
                let rejected = moments::second_moment_with_coeff(
                    n,
                    m,
                    1,
                    x,
                    moments::SECOND_MOMENT_B_COEFF_REJECTED,
                )?;
                let rel = (shipped - brute).abs() / brute.abs();
                let rel_rejected = (rejected - brute).abs() / brute.abs();
                worst_rejected = worst_rejected.max(rel_rejected);
                let pass = rel <= 1e-10;
                all_pass &= pass;
                println!(
                    "  n={n} m={m} x={x:<4} brute={brute:.12e} shipped_rel={rel:.2e} rejected_rel={rel_rejected:.2e} {}",
                    if pass { "pass" } else { "FAIL" }
                );
            }
        }
        // The losing B coefficient must be visibly wrong somewhere.
        let lock = worst_rejected > 0.01;
        all_pass &= lock;
        println!(
            "  rejected-coefficient regression lock: max rel deviation {worst_rejected:.2e} {}",
            if lock { "pass" } else { "FAIL" }
        );
    }

    println!();
    println!("{}", if all_pass { "all checks passed" } else { "CHECKS FAILED" });
    Ok(all_pass)
}
