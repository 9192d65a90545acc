//! Completely positive propagators P from a joint unitary and a diagonal
//! thermal environment state, plus density-matrix plumbing.
//!
//! Composite index convention: the joint basis index for (system α,
//! environment μ) is α·m + μ, i.e. system-major.

use ndarray::{Array2, Array4};
use serde::Serialize;

use crate::cue::UnitaryMatrix;
use crate::error::{Error, Result};
use crate::linalg::{adjoint, hermitian_eigen, C64};
use crate::thermal::ThermalEnvironment;

pub const TRACE_TOL: f64 = 1e-10;
pub const HERMITICITY_TOL: f64 = 1e-12;
pub const CHOI_EIG_TOL: f64 = -1e-10;

/// A density matrix with validated invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    data: Array2<C64>,
}

impl DensityMatrix {
    pub fn new(data: Array2<C64>) -> Result<Self> {
        let n = data.nrows();
        if n == 0 || n != data.ncols() {
            return Err(Error::InvalidDimension("density matrix must be square".into()));
        }
        let mut trace = C64::new(0.0, 0.0);
        for i in 0..n {
            trace += data[[i, i]];
            for j in 0..n {
                if (data[[i, j]] - data[[j, i]].conj()).norm() > HERMITICITY_TOL {
                    return Err(Error::InvalidArgument("density matrix not hermitian".into()));
                }
            }
        }
        if (trace - C64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(Error::InvalidArgument(format!("density matrix trace {} != 1", trace.re)));
        }
        let (vals, _) = hermitian_eigen(&data);
        if vals.first().copied().unwrap_or(0.0) < CHOI_EIG_TOL {
            return Err(Error::InvalidArgument(format!(
                "density matrix has negative eigenvalue {}",
                vals[0]
            )));
        }
        Ok(DensityMatrix { data })
    }

    /// The maximally mixed state I/n.
    pub fn maximally_mixed(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension("need n >= 1".into()));
        }
        let mut data = Array2::<C64>::zeros((n, n));
        for i in 0..n {
            data[[i, i]] = C64::new(1.0 / n as f64, 0.0);
        }
        Ok(DensityMatrix { data })
    }

    /// Pure state |ψ⟩⟨ψ| from an (unnormalized) amplitude vector.
    pub fn pure_state(amplitudes: &[C64]) -> Result<Self> {
        let n = amplitudes.len();
        if n == 0 {
            return Err(Error::InvalidDimension("empty state vector".into()));
        }
        let norm2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if norm2 == 0.0 {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        let data =
            Array2::from_shape_fn((n, n), |(i, j)| amplitudes[i] * amplitudes[j].conj() / norm2);
        Ok(DensityMatrix { data })
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.data
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.data).0
    }
}

/// Rank-4 superoperator P_{αβ,γδ} acting on n×n density matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    n: usize,
    tensor: Array4<C64>,
}

/// Serializable row-major dump of the tensor as (re, im) pairs.
#[derive(Debug, Serialize)]
pub struct SuperoperatorDump {
    pub n: usize,
    /// Entries in row-major (α, β, γ, δ) order.
    pub entries: Vec<(f64, f64)>,
}

impl Superoperator {
    pub fn from_tensor(tensor: Array4<C64>) -> Result<Self> {
        let n = tensor.shape()[0];
        if tensor.shape() != [n, n, n, n] || n == 0 {
            return Err(Error::InvalidDimension("superoperator tensor must be n^4".into()));
        }
        Ok(Superoperator { n, tensor })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entry(&self, a: usize, b: usize, g: usize, d: usize) -> C64 {
        self.tensor[[a, b, g, d]]
    }

    /// The superoperator of the completely depolarizing channel ρ ↦ I/n.
    pub fn depolarizing(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension("need n >= 1".into()));
        }
        let tensor = Array4::from_shape_fn((n, n, n, n), |(a, b, g, d)| {
            if a == b && g == d {
                C64::new(1.0 / n as f64, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Ok(Superoperator { n, tensor })
    }

    /// ρ' = P ρ.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "superoperator acts on dimension {}, state has {}",
                self.n,
                rho.dim()
            )));
        }
        let r = rho.matrix();
        let data = Array2::from_shape_fn((self.n, self.n), |(a, b)| {
            let mut acc = C64::new(0.0, 0.0);
            for g in 0..self.n {
                for d in 0..self.n {
                    acc += self.tensor[[a, b, g, d]] * r[[g, d]];
                }
            }
            acc
        });
        DensityMatrix::new(data)
    }

    /// Max |Σ_α P_{αα,γδ} − δ_{γδ}|.
    pub fn trace_preservation_deviation(&self) -> f64 {
        let mut dev = 0.0f64;
        for g in 0..self.n {
            for d in 0..self.n {
                let mut s = C64::new(0.0, 0.0);
                for a in 0..self.n {
                    s += self.tensor[[a, a, g, d]];
                }
                let target = if g == d { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                dev = dev.max((s - target).norm());
            }
        }
        dev
    }

    /// Max |P_{αβ,γδ} − conj(P_{βα,δγ})|.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut dev = 0.0f64;
        for a in 0..self.n {
            for b in 0..self.n {
                for g in 0..self.n {
                    for d in 0..self.n {
                        let diff = self.tensor[[a, b, g, d]] - self.tensor[[b, a, d, g]].conj();
                        dev = dev.max(diff.norm());
                    }
                }
            }
        }
        dev
    }

    /// The n²×n² Choi matrix C_{(αγ),(βδ)} = P_{αβ,γδ}; positive
    /// semidefiniteness certifies complete positivity.
    pub fn choi_matrix(&self) -> Array2<C64> {
        let n = self.n;
        Array2::from_shape_fn((n * n, n * n), |(rc, cc)| {
            let (a, g) = (rc / n, rc % n);
            let (b, d) = (cc / n, cc % n);
            self.tensor[[a, b, g, d]]
        })
    }

    pub fn choi_eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.choi_matrix()).0
    }

    pub fn choi_min_eigenvalue(&self) -> f64 {
        self.choi_eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn dump(&self) -> SuperoperatorDump {
        let mut entries = Vec::with_capacity(self.n.pow(4));
        for a in 0..self.n {
            for b in 0..self.n {
                for g in 0..self.n {
                    for d in 0..self.n {
                        let z = self.tensor[[a, b, g, d]];
                        entries.push((z.re, z.im));
                    }
                }
            }
        }
        SuperoperatorDump { n: self.n, entries }
    }
}

/// Build P_{αβ,γδ} = Σ_{μν} U_{αμ,γν} ε_ν U*_{βμ,δν} from the joint
/// unitary and the diagonal thermal state of the environment.
pub fn build_propagator(
    u: &UnitaryMatrix,
    env: &ThermalEnvironment,
    n: usize,
) -> Result<Superoperator> {
    if n == 0 {
        return Err(Error::InvalidDimension("system dimension must be >= 1".into()));
    }
    let m = env.dim()?;
    if u.dim() != n * m {
        return Err(Error::DimensionMismatch(format!(
            "joint unitary must have dimension N = n·m = {}·{} = {}, got {}",
            n,
            m,
            n * m,
            u.dim()
        )));
    }
    let w = env.weights()?.values;
    let um = u.matrix();
    let tensor = Array4::from_shape_fn((n, n, n, n), |(a, b, g, d)| {
        let mut acc = C64::new(0.0, 0.0);
        for mu in 0..m {
            for nu in 0..m {
                if w[nu] == 0.0 {
                    continue;
                }
                acc += um[[a * m + mu, g * m + nu]] * um[[b * m + mu, d * m + nu]].conj() * w[nu];
            }
        }
        acc
    });
    Ok(Superoperator { n, tensor })
}

/// Independent reference route: ρ' = Tr_E[ U (ρ ⊗ ε) U† ] by dense matrix
/// products over the joint space.
pub fn propagate_embedded(
    u: &UnitaryMatrix,
    env: &ThermalEnvironment,
    rho: &DensityMatrix,
) -> Result<Array2<C64>> {
    let n = rho.dim();
    let m = env.dim()?;
    if u.dim() != n * m {
        return Err(Error::DimensionMismatch(format!(
            "joint unitary must have dimension {}, got {}",
            n * m,
            u.dim()
        )));
    }
    let w = env.weights()?.values;
    let big = n * m;
    let mut joint = Array2::<C64>::zeros((big, big));
    for a in 0..n {
        for b in 0..n {
            for mu in 0..m {
                joint[[a * m + mu, b * m + mu]] = rho.matrix()[[a, b]] * w[mu];
            }
        }
    }
    let evolved = u.matrix().dot(&joint).dot(&adjoint(u.matrix()));
    let mut out = Array2::<C64>::zeros((n, n));
    for a in 0..n {
        for b in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for mu in 0..m {
                acc += evolved[[a * m + mu, b * m + mu]];
            }
            out[[a, b]] = acc;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cue::{hadamard2, sample_cue, SeedSpec};
    use ndarray::array;

    fn env(d: usize, s: usize, x: f64) -> ThermalEnvironment {
        ThermalEnvironment::new(d, s, x).unwrap()
    }

    #[test]
    fn trivial_env_gives_unitary_conjugation() {
        let h = hadamard2();
        let p = build_propagator(&h, &env(1, 1, 0.0), 2).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                for g in 0..2 {
                    for d in 0..2 {
                        let want = h.entry(a, g) * h.entry(b, d).conj();
                        assert!((p.entry(a, b, g, d) - want).norm() < 1e-15);
                    }
                }
            }
        }
        // Applying to ρ gives UρU†.
        let rho = DensityMatrix::pure_state(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let out = p.apply(&rho).unwrap();
        let direct = h.matrix().dot(rho.matrix()).dot(&adjoint(h.matrix()));
        for i in 0..2 {
            for j in 0..2 {
                assert!((out.matrix()[[i, j]] - direct[[i, j]]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn n1_propagator_is_scalar_one() {
        let u = sample_cue(3, SeedSpec::new(5, 0)).unwrap();
        let p = build_propagator(&u, &env(3, 1, 0.4), 1).unwrap();
        assert!((p.entry(0, 0, 0, 0) - C64::new(1.0, 0.0)).norm() < 1e-12);
        let rho = DensityMatrix::maximally_mixed(1).unwrap();
        let out = p.apply(&rho).unwrap();
        assert!((out.matrix()[[0, 0]].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_joint_unitary_preserves_state() {
        let u = UnitaryMatrix::new(Array2::eye(2)).unwrap();
        let p = build_propagator(&u, &env(1, 1, 0.0), 2).unwrap();
        let rho = DensityMatrix::new(array![
            [C64::new(0.7, 0.0), C64::new(0.1, 0.2)],
            [C64::new(0.1, -0.2), C64::new(0.3, 0.0)]
        ])
        .unwrap();
        let out = p.apply(&rho).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((out.matrix()[[i, j]] - rho.matrix()[[i, j]]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn dimension_mismatch_reports_expected() {
        let u = sample_cue(5, SeedSpec::new(5, 1)).unwrap();
        let err = build_propagator(&u, &env(2, 1, 0.0), 2).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains('4'), "{msg}");
    }

    #[test]
    fn sampled_propagator_invariants() {
        let u = sample_cue(4, SeedSpec::new(42, 0)).unwrap();
        let p = build_propagator(&u, &env(2, 1, 0.0), 2).unwrap();
        assert!(p.trace_preservation_deviation() < TRACE_TOL);
        assert!(p.hermiticity_deviation() < HERMITICITY_TOL);
        assert!(p.choi_min_eigenvalue() >= CHOI_EIG_TOL);
    }

    #[test]
    fn unitary_channel_choi_is_rank_one() {
        let h = hadamard2();
        let p = build_propagator(&h, &env(1, 1, 0.0), 2).unwrap();
        let eigs = p.choi_eigenvalues();
        assert!((eigs[3] - 2.0).abs() < 1e-12, "top eigenvalue {} != n", eigs[3]);
        for &e in &eigs[..3] {
            assert!(e.abs() < 1e-12);
        }
    }

    #[test]
    fn depolarizing_choi_is_scaled_identity() {
        let p = Superoperator::depolarizing(3).unwrap();
        for e in p.choi_eigenvalues() {
            assert!((e - 1.0 / 3.0).abs() < 1e-13);
        }
        let rho = DensityMatrix::pure_state(&[
            C64::new(0.6, 0.0),
            C64::new(0.0, 0.8),
            C64::new(0.0, 0.0),
        ])
        .unwrap();
        let out = p.apply(&rho).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 / 3.0 } else { 0.0 };
                assert!((out.matrix()[[i, j]] - C64::new(want, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn apply_positivity_at_zero_temperature() {
        let u = sample_cue(4, SeedSpec::new(9, 3)).unwrap();
        let p = build_propagator(&u, &env(2, 1, f64::INFINITY), 2).unwrap();
        let rho = DensityMatrix::pure_state(&[C64::new(0.6, 0.0), C64::new(0.8, 0.0)]).unwrap();
        let out = p.apply(&rho).unwrap();
        for e in out.eigenvalues() {
            assert!((-1e-10..=1.0 + 1e-10).contains(&e));
        }
    }

    #[test]
    fn embedding_route_agrees_with_superoperator() {
        for (n, d, s, x, seed) in [
            (2usize, 2usize, 1usize, 0.0f64, 1u64),
            (3, 2, 1, 1.3, 2),
            (2, 2, 2, 0.5, 3),
            (8, 8, 1, 0.2, 4),
        ] {
            let e = env(d, s, x);
            let m = e.dim().unwrap();
            let u = sample_cue(n * m, SeedSpec::new(seed, 0)).unwrap();
            let p = build_propagator(&u, &e, n).unwrap();
            let rho = DensityMatrix::maximally_mixed(n).unwrap();
            // Perturb the mixed state into a generic valid one.
            let mut mat = rho.matrix().clone();
            mat[[0, 1]] = C64::new(0.08, 0.05);
            mat[[1, 0]] = C64::new(0.08, -0.05);
            let rho = DensityMatrix::new(mat).unwrap();
            let via_p = p.apply(&rho).unwrap();
            let via_embed = propagate_embedded(&u, &e, &rho).unwrap();
            for i in 0..n {
                for j in 0..n {
                    assert!(
                        (via_p.matrix()[[i, j]] - via_embed[[i, j]]).norm() < 1e-12,
                        "n={n} d={d} s={s} x={x}"
                    );
                }
            }
        }
    }

    #[test]
    fn dump_serializes_row_major() {
        let p = Superoperator::depolarizing(2).unwrap();
        let dump = p.dump();
        assert_eq!(dump.entries.len(), 16);
        let json = serde_json::to_string(&dump).unwrap();
        assert!(json.contains("\"n\":2"));
        // First entry is P_{00,00} = 1/2 for the depolarizing channel.
        assert_eq!(dump.entries[0], (0.5, 0.0));
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(array![
            [C64::new(0.5, 0.0), C64::new(0.0, 0.0)],
            [C64::new(0.0, 0.0), C64::new(0.4, 0.0)]
        ])
        .is_err());
        assert!(DensityMatrix::new(array![
            [C64::new(1.5, 0.0), C64::new(0.0, 0.0)],
            [C64::new(0.0, 0.0), C64::new(-0.5, 0.0)]
        ])
        .is_err());
    }
}
