//! Haar-distributed (CUE) unitary matrices with reproducible seeding.
//!
//! Sampling uses the QR route: fill a matrix with i.i.d. standard
//! complex Gaussians, QR-factorize, and absorb the phases of R's
//! diagonal into Q. With that phase fix the distribution of Q is exactly
//! the Haar measure on U(N). The RNG stream for realization k is a pure
//! function of (master_seed, k), so ensembles are reproducible for any
//! worker count.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{adjoint, qr_square, unitarity_deviation, C64};

/// Tolerance on per-entry unitarity deviation, adequate for double
/// precision at N ≤ 4096.
pub const UNITARITY_TOL: f64 = 1e-12;

/// Identifies one member of a reproducible ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub realization_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, realization_index: u64) -> Self {
        SeedSpec { master_seed, realization_index }
    }

    /// The same master seed pointing at realization `k`.
    pub fn realization(&self, k: u64) -> Self {
        SeedSpec { master_seed: self.master_seed, realization_index: k }
    }

    /// The RNG stream for this realization.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.realization_index);
        rng
    }
}

/// A dense N×N unitary matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    data: Array2<C64>,
}

impl UnitaryMatrix {
    /// Wrap a matrix, checking unitarity to [`UNITARITY_TOL`].
    pub fn new(data: Array2<C64>) -> Result<Self> {
        if data.nrows() == 0 || data.nrows() != data.ncols() {
            return Err(Error::InvalidDimension(format!(
                "unitary matrix must be square and non-empty, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        let dev = unitarity_deviation(&data);
        if dev > UNITARITY_TOL {
            return Err(Error::InvalidArgument(format!(
                "matrix is not unitary: max |UU† − 1| = {dev:.3e}"
            )));
        }
        Ok(UnitaryMatrix { data })
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.data[[i, j]]
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.data
    }

    pub fn adjoint_matrix(&self) -> Array2<C64> {
        adjoint(&self.data)
    }

    /// Max |(UU†)_ij − δ_ij|.
    pub fn unitarity_deviation(&self) -> f64 {
        unitarity_deviation(&self.data)
    }
}

/// Draw one Haar-distributed unitary of the given dimension.
pub fn sample_cue(dim: usize, seed: SeedSpec) -> Result<UnitaryMatrix> {
    if dim == 0 {
        return Err(Error::InvalidDimension("sample_cue needs dim >= 1".into()));
    }
    let mut rng = seed.rng();
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let z = Array2::from_shape_fn((dim, dim), |_| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * inv_sqrt2, im * inv_sqrt2)
    });
    let (q, r) = qr_square(&z);
    // Column phase fix: U = Q · diag(R_jj / |R_jj|).
    let mut u = q;
    for j in 0..dim {
        let rjj = r[[j, j]];
        let phase = if rjj.norm() == 0.0 { C64::new(1.0, 0.0) } else { rjj / rjj.norm() };
        for i in 0..dim {
            u[[i, j]] *= phase;
        }
    }
    Ok(UnitaryMatrix { data: u })
}

/// The N-dimensional discrete Fourier matrix, |U_ij| = 1/√N.
pub fn dft_matrix(dim: usize) -> Result<UnitaryMatrix> {
    if dim == 0 {
        return Err(Error::InvalidDimension("dft_matrix needs dim >= 1".into()));
    }
    let scale = 1.0 / (dim as f64).sqrt();
    let data = Array2::from_shape_fn((dim, dim), |(i, j)| {
        C64::from_polar(scale, 2.0 * std::f64::consts::PI * (i * j) as f64 / dim as f64)
    });
    Ok(UnitaryMatrix { data })
}

/// The 2×2 Hadamard gate.
pub fn hadamard2() -> UnitaryMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let data = ndarray::array![
        [C64::new(s, 0.0), C64::new(s, 0.0)],
        [C64::new(s, 0.0), C64::new(-s, 0.0)]
    ];
    UnitaryMatrix { data }
}

/// One empirical moment identity checked by [`haar_self_test`].
#[derive(Debug, Clone, Serialize)]
pub struct MomentCheck {
    pub name: String,
    pub estimate: f64,
    pub expected: f64,
    pub std_error: f64,
    pub z_score: f64,
    pub pass: bool,
}

/// Diagnostic report of [`haar_self_test`].
#[derive(Debug, Clone, Serialize)]
pub struct HaarSelfTest {
    pub dim: usize,
    pub samples: usize,
    pub max_unitarity_deviation: f64,
    pub checks: Vec<MomentCheck>,
}

impl HaarSelfTest {
    pub fn all_pass(&self) -> bool {
        self.max_unitarity_deviation < UNITARITY_TOL && self.checks.iter().all(|c| c.pass)
    }
}

/// Empirical check of low-order Haar moment identities:
/// ⟨|U_ij|²⟩ = 1/N, ⟨|U_ij|⁴⟩ = 2/(N(N+1)), ⟨|U_ij|²|U_ij'|²⟩ = 1/(N(N+1)).
///
/// Each identity is averaged over all index positions per sampled matrix;
/// z-scores come from the sample spread of those per-matrix averages.
pub fn haar_self_test(dim: usize, samples: usize, seed: SeedSpec) -> Result<HaarSelfTest> {
    if dim == 0 {
        return Err(Error::InvalidDimension("haar_self_test needs dim >= 1".into()));
    }
    if samples < 10_000 {
        return Err(Error::InvalidArgument(format!(
            "haar_self_test needs at least 1e4 samples, got {samples}"
        )));
    }
    let nf = dim as f64;
    let mut acc: [(f64, f64); 3] = [(0.0, 0.0); 3];
    let mut max_dev = 0.0f64;
    for r in 0..samples {
        let u = sample_cue(dim, seed.realization(r as u64))?;
        max_dev = max_dev.max(u.unitarity_deviation());
        let mut p2 = 0.0f64;
        let mut p4 = 0.0f64;
        let mut cross = 0.0f64;
        for i in 0..dim {
            let mut row2: Vec<f64> = Vec::with_capacity(dim);
            for j in 0..dim {
                let a2 = u.entry(i, j).norm_sqr();
                p2 += a2;
                p4 += a2 * a2;
                row2.push(a2);
            }
            if dim > 1 {
                for j in 0..dim {
                    for jp in 0..dim {
                        if j != jp {
                            cross += row2[j] * row2[jp];
                        }
                    }
                }
            }
        }
        let stats = [
            p2 / (nf * nf),
            p4 / (nf * nf),
            if dim > 1 { cross / (nf * nf * (nf - 1.0)) } else { 1.0 },
        ];
        for (slot, value) in acc.iter_mut().zip(stats.iter()) {
            slot.0 += value;
            slot.1 += value * value;
        }
    }
    let expected =
        [1.0 / nf, 2.0 / (nf * (nf + 1.0)), if dim > 1 { 1.0 / (nf * (nf + 1.0)) } else { 1.0 }];
    let names = ["<|U_ij|^2>", "<|U_ij|^4>", "<|U_ij|^2 |U_ij'|^2>"];
    let ns = samples as f64;
    let checks = (0..3)
        .map(|idx| {
            let mean = acc[idx].0 / ns;
            let var = (acc[idx].1 / ns - mean * mean).max(0.0);
            let se = (var / ns).sqrt();
            let z = if se > 0.0 { (mean - expected[idx]) / se } else { 0.0 };
            MomentCheck {
                name: names[idx].to_string(),
                estimate: mean,
                expected: expected[idx],
                std_error: se,
                z_score: z,
                pass: z.abs() <= 3.0,
            }
        })
        .collect();
    Ok(HaarSelfTest { dim, samples, max_unitarity_deviation: max_dev, checks })
}
