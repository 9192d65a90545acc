//! Output formatting: CSV with a seed-bearing comment header, JSON
//! envelopes, and sample-file round-trips.
//!
//! Machine formats carry 17 significant digits; human tables are
//! rounded to five decimals.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use cuemap_core::ensemble::{EnsembleOutput, GridPoint, GridQuantity, RunManifest, Table1Row};
use cuemap_core::moments::MomentReport;
use cuemap_core::stats::LogNormalFit;

use crate::Format;

type AnyError = Box<dyn std::error::Error>;

fn machine(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), AnyError> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct StatsEnvelope {
    count: u64,
    mean: f64,
    variance: f64,
    std_dev: f64,
    se_mean: f64,
    se_std: f64,
    min: f64,
    max: f64,
}

#[derive(Serialize)]
struct McEnvelope<'a> {
    manifest: &'a RunManifest,
    stats: StatsEnvelope,
    histogram: &'a cuemap_core::stats::Histogram,
}

pub fn emit_mc(
    manifest: &RunManifest,
    result: &EnsembleOutput,
    out: Option<&Path>,
    format: Format,
) -> Result<(), AnyError> {
    let stats = StatsEnvelope {
        count: result.stats.count,
        mean: result.stats.mean,
        variance: result.stats.variance(),
        std_dev: result.stats.std_dev(),
        se_mean: result.stats.se_mean(),
        se_std: result.stats.se_std(),
        min: result.stats.min,
        max: result.stats.max,
    };
    match format {
        Format::Json => {
            let envelope = McEnvelope { manifest, stats, histogram: &result.histogram };
            let mut text = serde_json::to_string_pretty(&envelope)?;
            text.push('\n');
            write_text(out, &text)?;
        }
        Format::Csv => {
            let mut text = format!(
                "# master_seed={} realizations={} version={}\n",
                manifest.config.master_seed, manifest.config.realizations, manifest.version
            );
            text.push_str("edge_low,edge_high,count,density\n");
            let h = &result.histogram;
            for b in 0..h.counts.len() {
                text.push_str(&format!(
                    "{},{},{},{}\n",
                    machine(h.edges[b]),
                    machine(h.edges[b + 1]),
                    h.counts[b],
                    machine(h.density(b))
                ));
            }
            write_text(out, &text)?;
            let manifest_json = serde_json::to_string_pretty(manifest)?;
            match out {
                Some(p) => {
                    let mpath = manifest_path(p);
                    fs::write(&mpath, manifest_json + "\n")?;
                    eprintln!(
                        "stats: mean={} se={} std={} (manifest: {})",
                        machine(stats.mean),
                        machine(stats.se_mean),
                        machine(stats.std_dev),
                        mpath.display()
                    );
                }
                None => eprintln!("{manifest_json}"),
            }
        }
    }
    Ok(())
}

fn manifest_path(out: &Path) -> std::path::PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

pub fn emit_moments(report: &MomentReport, format: Format, pretty: bool) -> Result<(), AnyError> {
    if pretty {
        println!(
            "n={} d={} s={} x={}  mean={:.5}  std={:.5}  variance={:.5e}",
            report.n, report.d, report.s, report.x, report.mean, report.std_dev, report.variance
        );
        return Ok(());
    }
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(report)?),
        Format::Csv => {
            println!("n,d,s,x,mean,second_moment,variance,std_dev");
            println!(
                "{},{},{},{},{},{},{},{}",
                report.n,
                report.d,
                report.s,
                report.x,
                machine(report.mean),
                machine(report.second_moment),
                machine(report.variance),
                machine(report.std_dev)
            );
        }
    }
    Ok(())
}

pub fn emit_table1(
    rows: &[Table1Row],
    seed: u64,
    realizations: usize,
    elapsed: f64,
    out: Option<&Path>,
    format: Format,
) -> Result<(), AnyError> {
    match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Envelope<'a> {
                master_seed: u64,
                realizations: usize,
                elapsed_seconds: f64,
                rows: &'a [Table1Row],
            }
            let mut text = serde_json::to_string_pretty(&Envelope {
                master_seed: seed,
                realizations,
                elapsed_seconds: elapsed,
                rows,
            })?;
            text.push('\n');
            write_text(out, &text)?;
        }
        Format::Csv => {
            let mut text = format!(
                "# master_seed={seed} realizations={realizations} elapsed_s={elapsed:.3}\n"
            );
            text.push_str("n,m,mc_mean,mc_se,ana_mean,mc_std,ana_std\n");
            for r in rows {
                text.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.n,
                    r.m,
                    machine(r.mc_mean),
                    machine(r.mc_se),
                    machine(r.ana_mean),
                    machine(r.mc_std),
                    machine(r.ana_std)
                ));
            }
            write_text(out, &text)?;
            if out.is_some() {
                for r in rows {
                    eprintln!(
                        "n={} m={}: mc {:.5} ± {:.5} vs ana {:.5}; std mc {:.5} vs ana {:.5}",
                        r.n, r.m, r.mc_mean, r.mc_se, r.ana_mean, r.mc_std, r.ana_std
                    );
                }
            }
        }
    }
    Ok(())
}

pub fn emit_grid(
    points: &[GridPoint],
    x: f64,
    quantity: GridQuantity,
    out: Option<&Path>,
    format: Format,
) -> Result<(), AnyError> {
    let label = match quantity {
        GridQuantity::Mean => "ln_mean",
        GridQuantity::Std => "ln_std",
    };
    match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Envelope<'a> {
                x: f64,
                quantity: &'a str,
                points: &'a [GridPoint],
            }
            let mut text = serde_json::to_string_pretty(&Envelope { x, quantity: label, points })?;
            text.push('\n');
            write_text(out, &text)
        }
        Format::Csv => {
            let mut text = format!("# x={x} quantity={label}\n");
            text.push_str("n,m,value\n");
            for p in points {
                text.push_str(&format!("{},{},{}\n", p.n, p.m, machine(p.value)));
            }
            write_text(out, &text)
        }
    }
}

pub fn emit_fit(fit: &LogNormalFit, format: Format) -> Result<(), AnyError> {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(fit)?),
        Format::Csv => {
            println!("mu,sigma,ks_distance,used,excluded");
            println!(
                "{},{},{},{},{}",
                machine(fit.mu),
                machine(fit.sigma),
                machine(fit.ks_distance),
                fit.used,
                fit.excluded
            );
        }
    }
    Ok(())
}

pub fn write_samples_csv(path: &Path, seed: u64, samples: &[f64]) -> Result<(), AnyError> {
    let mut text = format!("# master_seed={seed}\n");
    text.push_str("realization,interference\n");
    for (k, v) in samples.iter().enumerate() {
        text.push_str(&format!("{k},{}\n", machine(*v)));
    }
    fs::write(path, text)?;
    Ok(())
}

/// Read samples written by [`write_samples_csv`] (or any CSV whose last
/// column is numeric; comment and header lines are skipped).
pub fn read_samples_csv(path: &Path) -> Result<Vec<f64>, AnyError> {
    let raw = fs::read_to_string(path)?;
    let mut samples = Vec::new();
    for line in raw.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let last = line.rsplit(',').next().unwrap_or(line);
        match last.trim().parse::<f64>() {
            Ok(v) => samples.push(v),
            Err(_) => continue, // header row
        }
    }
    if samples.is_empty() {
        return Err(format!("no numeric samples found in {}", path.display()).into());
    }
    Ok(samples)
}
