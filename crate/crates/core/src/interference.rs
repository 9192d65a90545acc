//! The interference measure I(P) = Σ_{i,k,l}|P_{ii,kl}|² − Σ_{i,k}|P_{ii,kk}|²
//! for superoperators, pure unitaries, and the propagator-free fast path.

use crate::cue::UnitaryMatrix;
use crate::error::{Error, Result};
use crate::propagator::Superoperator;
use crate::thermal::ThermalEnvironment;
use num_complex::Complex64;

/// Round-off floor: sums of squares cannot be genuinely negative, so
/// anything in [−1e-12, 0) is reported as 0.
fn clamp(value: f64) -> f64 {
    if (-1e-12..0.0).contains(&value) {
        0.0
    } else {
        value
    }
}

/// I(P), evaluated in the equivalent off-diagonal form Σ_{i, k≠l} |P_{ii,kl}|².
pub fn interference_of_map(p: &Superoperator) -> f64 {
    let n = p.dim();
    let mut total = 0.0f64;
    for i in 0..n {
        for k in 0..n {
            for l in 0..n {
                if k != l {
                    total += p.entry(i, i, k, l).norm_sqr();
                }
            }
        }
    }
    clamp(total)
}

/// Interference of purely unitary propagation: N − Σ_{ij} |U_ij|⁴.
pub fn interference_unitary(u: &UnitaryMatrix) -> f64 {
    let n = u.dim();
    let mut quart = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            quart += u.entry(i, j).norm_sqr().powi(2);
        }
    }
    clamp(n as f64 - quart)
}

/// Fast path that never materializes P:
/// I = Σ_{α, γ≠δ} |Σ_{μν} U_{αμ,γν} w_ν U*_{αμ,δν}|²
/// with normalized thermal weights w; O(n³m²) time, O(n) auxiliary space
/// per (γ, δ) pair.
pub fn interference_fast(u: &UnitaryMatrix, env: &ThermalEnvironment, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidDimension("system dimension must be >= 1".into()));
    }
    let m = env.dim()?;
    if u.dim() != n * m {
        return Err(Error::DimensionMismatch(format!(
            "joint unitary must have dimension N = n·m = {}, got {}",
            n * m,
            u.dim()
        )));
    }
    let w = env.weights()?.values;
    let um = u.matrix();
    let mut total = 0.0f64;
    let mut amp = vec![Complex64::new(0.0, 0.0); n];
    for g in 0..n {
        for d in 0..n {
            if g == d {
                continue;
            }
            for (alpha, slot) in amp.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for mu in 0..m {
                    let row = alpha * m + mu;
                    for (nu, &wn) in w.iter().enumerate() {
                        if wn == 0.0 {
                            continue;
                        }
                        acc += um[[row, g * m + nu]] * um[[row, d * m + nu]].conj() * wn;
                    }
                }
                *slot = acc;
            }
            total += amp.iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
    }
    Ok(clamp(total))
}
