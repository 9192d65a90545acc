//! Parallel Monte Carlo estimation of the interference distribution.
//!
//! Realization k of an ensemble draws its joint unitary from the RNG
//! stream (master_seed, k); partial statistics are merged in fixed chunk
//! order, so results are bit-identical for any worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cue::{sample_cue, SeedSpec};
use crate::error::{Error, Result};
use crate::interference::interference_fast;
use crate::moments;
use crate::stats::{ks_statistic_sorted, BinScale, Histogram, RunningStats};
use crate::thermal::ThermalEnvironment;

/// Largest joint dimension N = n·d^s we are willing to sample.
pub const MAX_SAMPLING_DIM: usize = 4096;

/// Realizations processed per work item; also the merge granularity.
const CHUNK: usize = 4096;

/// Parameters of one Monte Carlo ensemble.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n: usize,
    pub d: usize,
    pub s: usize,
    pub x: f64,
    pub realizations: usize,
    pub master_seed: u64,
    pub bins: usize,
    pub bin_scale: BinScale,
    /// None means the global rayon pool.
    pub workers: Option<usize>,
    /// Retain per-realization interference values in the output.
    pub keep_samples: bool,
}

impl EnsembleConfig {
    pub fn environment(&self) -> Result<ThermalEnvironment> {
        ThermalEnvironment::new(self.d, self.s, self.x)
    }

    pub fn joint_dim(&self) -> Result<usize> {
        let env = self.environment()?;
        let m = env.dim()?;
        let joint =
            self.n.checked_mul(m).ok_or_else(|| Error::SizeCap("n·d^s overflows".into()))?;
        if joint > MAX_SAMPLING_DIM {
            return Err(Error::SizeCap(format!(
                "joint dimension n·d^s = {joint} exceeds the sampling cap {MAX_SAMPLING_DIM}"
            )));
        }
        Ok(joint)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidDimension("system dimension n must be >= 1".into()));
        }
        if self.realizations == 0 {
            return Err(Error::InvalidArgument("realizations must be >= 1".into()));
        }
        if self.bins < 2 {
            return Err(Error::InvalidArgument("bins must be >= 2".into()));
        }
        self.joint_dim()?;
        Ok(())
    }
}

/// Result of [`run_ensemble`].
#[derive(Debug, Clone)]
pub struct EnsembleOutput {
    pub stats: RunningStats,
    pub histogram: Histogram,
    pub samples: Option<Vec<f64>>,
}

/// Run the Monte Carlo loop: for each realization k, sample U from CUE
/// with SeedSpec(master_seed, k), evaluate the interference fast path,
/// and accumulate.
pub fn run_ensemble(config: &EnsembleConfig) -> Result<EnsembleOutput> {
    config.validate()?;
    let env = config.environment()?;
    let joint = config.joint_dim()?;
    let n = config.n;
    let seed = SeedSpec::new(config.master_seed, 0);

    let compute = |samples: &mut Vec<f64>| {
        samples.par_chunks_mut(CHUNK).enumerate().for_each(|(chunk_idx, chunk)| {
            for (offset, slot) in chunk.iter_mut().enumerate() {
                let k = (chunk_idx * CHUNK + offset) as u64;
                let u = sample_cue(joint, seed.realization(k)).expect("dimension validated");
                *slot = interference_fast(&u, &env, n).expect("dimension validated");
            }
        });
    };

    let mut samples = vec![0.0f64; config.realizations];
    match config.workers {
        None => compute(&mut samples),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
            pool.install(|| compute(&mut samples));
        }
    }

    // Deterministic merge: per-chunk accumulators combined in index order.
    let mut stats = RunningStats::new();
    for chunk in samples.chunks(CHUNK) {
        let mut partial = RunningStats::new();
        for &v in chunk {
            partial.push(v);
        }
        stats = stats.merge(&partial);
    }
    let histogram = Histogram::from_samples(&samples, config.bins, config.bin_scale)?;
    Ok(EnsembleOutput { stats, histogram, samples: config.keep_samples.then_some(samples) })
}

/// KS distance of n=2, m=1 interference samples against the analytic CDF
/// F(I) = 1 − √(1 − I).
pub fn analytic_cdf_check_n2(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples for the n=2 CDF check".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(ks_statistic_sorted(&sorted, |v| {
        let clamped = v.clamp(0.0, 1.0);
        1.0 - (1.0 - clamped).sqrt()
    }))
}

/// One comparison row of the reference table at x = 0.1.
#[derive(Debug, Clone, Serialize)]
pub struct Table1Row {
    pub n: usize,
    pub m: usize,
    pub mc_mean: f64,
    pub mc_se: f64,
    pub ana_mean: f64,
    pub mc_std: f64,
    pub mc_std_se: f64,
    pub ana_std: f64,
}

pub const TABLE1_CASES: [(usize, usize); 5] = [(4, 2), (4, 4), (4, 8), (8, 2), (8, 4)];
pub const TABLE1_X: f64 = 0.1;

/// Monte Carlo vs analytic mean/std for the five reference (n, m) pairs.
///
/// Each row runs on its own decorrelated stream derived from the master
/// seed, so rows sharing a joint dimension do not reuse unitaries.
pub fn table1_report(
    realizations: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<Vec<Table1Row>> {
    let mut rows = Vec::with_capacity(TABLE1_CASES.len());
    for (idx, &(n, m)) in TABLE1_CASES.iter().enumerate() {
        let config = EnsembleConfig {
            n,
            d: m,
            s: 1,
            x: TABLE1_X,
            realizations,
            master_seed: master_seed.wrapping_add((idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
            bins: 64,
            bin_scale: BinScale::Log,
            workers,
            keep_samples: false,
        };
        let out = run_ensemble(&config)?;
        rows.push(Table1Row {
            n,
            m,
            mc_mean: out.stats.mean,
            mc_se: out.stats.se_mean(),
            ana_mean: moments::mean_interference(n, m, 1, TABLE1_X)?,
            mc_std: out.stats.std_dev(),
            mc_std_se: out.stats.se_std(),
            ana_std: moments::std_dev(n, m, 1, TABLE1_X)?,
        });
    }
    Ok(rows)
}

/// Which analytic quantity a grid tabulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridQuantity {
    Mean,
    Std,
}

/// One cell of an analytic ln-value grid.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GridPoint {
    pub n: usize,
    pub m: usize,
    pub value: f64,
}

/// Analytic grid of ln(mean) or ln(σ) over the given n and m values;
/// data suitable for external contour plotting.
pub fn moment_grid(
    n_values: &[usize],
    m_values: &[usize],
    x: f64,
    quantity: GridQuantity,
) -> Result<Vec<GridPoint>> {
    if n_values.is_empty() || m_values.is_empty() {
        return Err(Error::InvalidArgument("grid ranges must be non-empty".into()));
    }
    if let Some(&bad) = n_values.iter().chain(m_values.iter()).find(|&&v| !(2..=1024).contains(&v))
    {
        return Err(Error::InvalidArgument(format!("grid values must lie in 2..=1024, got {bad}")));
    }
    let mut out = Vec::with_capacity(n_values.len() * m_values.len());
    for &n in n_values {
        for &m in m_values {
            let value = match quantity {
                GridQuantity::Mean => moments::mean_interference(n, m, 1, x)?,
                GridQuantity::Std => moments::std_dev(n, m, 1, x)?,
            };
            out.push(GridPoint { n, m, value: value.ln() });
        }
    }
    Ok(out)
}

/// Reproducibility manifest emitted next to every Monte Carlo output.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: EnsembleConfig,
    pub elapsed_seconds: f64,
    pub outputs: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> EnsembleConfig {
        EnsembleConfig {
            n: 2,
            d: 2,
            s: 1,
            x: 0.1,
            realizations: 2000,
            master_seed: 11,
            bins: 16,
            bin_scale: BinScale::Linear,
            workers: None,
            keep_samples: true,
        }
    }

    #[test]
    fn worker_count_invariance() {
        let mut c1 = base_config();
        c1.workers = Some(1);
        let mut c8 = base_config();
        c8.workers = Some(8);
        let a = run_ensemble(&c1).unwrap();
        let b = run_ensemble(&c8).unwrap();
        assert_eq!(a.stats, b.stats);
        assert_eq!(a.histogram, b.histogram);
        assert_eq!(a.samples, b.samples);
    }

    #[test]
    fn streaming_matches_two_pass() {
        let out = run_ensemble(&base_config()).unwrap();
        let samples = out.samples.unwrap();
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (samples.len() - 1) as f64;
        assert!((out.stats.mean - mean).abs() <= 1e-12 * mean.abs());
        assert!((out.stats.variance() - var).abs() <= 1e-12 * var.abs());
    }

    #[test]
    fn unitary_samples_respect_bound() {
        let mut config = base_config();
        config.d = 1;
        config.realizations = 3000;
        let out = run_ensemble(&config).unwrap();
        let bound = config.n as f64 - 1.0 + 1e-12;
        assert!(out.stats.max <= bound);
        assert!(out.stats.min >= 0.0);
    }

    #[test]
    fn histogram_conserves_realizations() {
        let out = run_ensemble(&base_config()).unwrap();
        assert_eq!(out.histogram.total, 2000);
        assert_eq!(out.histogram.counts.iter().sum::<u64>(), 2000);
    }

    #[test]
    fn mc_mean_tracks_analytic() {
        let mut config = base_config();
        config.n = 4;
        config.realizations = 20_000;
        config.master_seed = 2;
        let out = run_ensemble(&config).unwrap();
        let ana = moments::mean_interference(4, 2, 1, 0.1).unwrap();
        let z = (out.stats.mean - ana).abs() / out.stats.se_mean();
        assert!(z < 3.0, "z = {z}");
    }

    #[test]
    fn n2_mc_matches_arcsine_like_cdf() {
        let config = EnsembleConfig {
            n: 2,
            d: 1,
            s: 1,
            x: 0.0,
            realizations: 10_000,
            master_seed: 5,
            bins: 16,
            bin_scale: BinScale::Linear,
            workers: None,
            keep_samples: true,
        };
        let out = run_ensemble(&config).unwrap();
        let ks = analytic_cdf_check_n2(&out.samples.unwrap()).unwrap();
        assert!(ks < 0.02, "ks = {ks}");
    }

    #[test]
    fn n3_samples_fail_n2_cdf() {
        let config = EnsembleConfig {
            n: 3,
            d: 1,
            s: 1,
            x: 0.0,
            realizations: 4000,
            master_seed: 5,
            bins: 16,
            bin_scale: BinScale::Linear,
            workers: None,
            keep_samples: true,
        };
        let out = run_ensemble(&config).unwrap();
        let ks = analytic_cdf_check_n2(&out.samples.unwrap()).unwrap();
        assert!(ks > 0.1, "negative control too close: {ks}");
        assert!(analytic_cdf_check_n2(&[]).is_err());
    }

    #[test]
    fn grid_values_and_monotonicity() {
        let single = moment_grid(&[4], &[2], 10.0, GridQuantity::Mean).unwrap();
        assert_eq!(single.len(), 1);
        let expect = moments::mean_interference(4, 2, 1, 10.0).unwrap().ln();
        assert!((single[0].value - expect).abs() < 1e-14);

        let ms = [2usize, 4, 8, 16, 32];
        let grid = moment_grid(&[4, 8], &ms, 0.001, GridQuantity::Mean).unwrap();
        for row in grid.chunks(ms.len()) {
            for pair in row.windows(2) {
                assert!(pair[1].value < pair[0].value, "not decreasing along m");
            }
        }
    }

    #[test]
    fn grid_range_bounds() {
        assert!(moment_grid(&[1], &[4], 0.1, GridQuantity::Mean).is_err());
        assert!(moment_grid(&[4], &[2048], 0.1, GridQuantity::Mean).is_err());
        assert!(moment_grid(&[2], &[1024], 0.1, GridQuantity::Mean).is_ok());
    }

    #[test]
    fn config_validation_errors() {
        let mut c = base_config();
        c.realizations = 0;
        assert!(c.validate().is_err());
        let mut c = base_config();
        c.s = 21;
        assert!(matches!(c.validate(), Err(Error::SizeCap(_))));
        let mut c = base_config();
        c.n = 0;
        assert!(c.validate().is_err());
    }
}
