//! Thermal spin environments: d equally spaced levels per spin, s
//! independent spins, dimensionless inverse temperature x = βħΩ.
//!
//! x = +∞ (`f64::INFINITY`) is accepted everywhere as the
//! zero-temperature marker; all factors return their analytic limits.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Default cap on the total environment dimension d^s for weight
/// materialization.
pub const DEFAULT_DIM_CAP: usize = 1 << 20;

/// Environment of `s` independent spins with `d` levels each at inverse
/// temperature `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalEnvironment {
    pub d: usize,
    pub s: usize,
    pub x: f64,
}

impl ThermalEnvironment {
    pub fn new(d: usize, s: usize, x: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension("environment levels d must be >= 1".into()));
        }
        if s == 0 {
            return Err(Error::InvalidDimension("spin count s must be >= 1".into()));
        }
        if x.is_nan() || x < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "inverse temperature x must be >= 0 or +inf, got {x}"
            )));
        }
        Ok(ThermalEnvironment { d, s, x })
    }

    /// Total environment dimension m = d^s, checked against `cap`.
    pub fn dim_checked(&self, cap: usize) -> Result<usize> {
        let mut m: usize = 1;
        for _ in 0..self.s {
            m = m
                .checked_mul(self.d)
                .ok_or_else(|| Error::SizeCap(format!("d^s = {}^{} overflows", self.d, self.s)))?;
            if m > cap {
                return Err(Error::SizeCap(format!(
                    "environment dimension d^s = {}^{} exceeds cap {}",
                    self.d, self.s, cap
                )));
            }
        }
        Ok(m)
    }

    /// Total environment dimension m = d^s under the default cap.
    pub fn dim(&self) -> Result<usize> {
        self.dim_checked(DEFAULT_DIM_CAP)
    }

    /// Diagonal thermal weights over the full d^s-dimensional environment,
    /// flattened row-major over (ν₁, .., ν_s).
    pub fn weights(&self) -> Result<ThermalWeights> {
        let m = self.dim()?;
        let single = boltzmann_weights(self.d, self.x);
        let mut values = vec![1.0f64; m];
        // Row-major tensor power: index = ((ν₁·d + ν₂)·d + ν₃)·d + ...
        for (idx, w) in values.iter_mut().enumerate() {
            let mut rest = idx;
            let mut acc = 1.0;
            for _ in 0..self.s {
                acc *= single[rest % self.d];
                rest /= self.d;
            }
            *w = acc;
        }
        // Renormalize against a compensated total so ∑w = 1 holds at the
        // 1e-15 level even for m ~ 1e6 entries.
        let total = crate::stats::kahan_sum(&values);
        for w in &mut values {
            *w /= total;
        }
        Ok(ThermalWeights { values })
    }
}

/// Normalized diagonal thermal state, stored as a probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalWeights {
    pub values: Vec<f64>,
}

impl ThermalWeights {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Normalized single-spin Boltzmann weights w_ν ∝ e^{−x·ν}, ν = 0..d−1.
///
/// The energy origin is shifted to the ground state so that nothing
/// underflows before normalization; the normalized vector is identical
/// to e^{−x(ν+1)}/Z.
pub fn boltzmann_weights(d: usize, x: f64) -> Vec<f64> {
    assert!(d >= 1);
    if x.is_infinite() {
        let mut w = vec![0.0; d];
        w[0] = 1.0;
        return w;
    }
    let raw: Vec<f64> = (0..d).map(|nu| (-x * nu as f64).exp()).collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / z).collect()
}

/// Ground-shifted partition sum s(x) = Σ_{j=0..d−1} e^{−x·j} = e^x·Z(x).
///
/// Stable for all x ≥ 0 including +∞ (limit 1).
pub fn shifted_partition(d: usize, x: f64) -> f64 {
    if x.is_infinite() {
        return 1.0;
    }
    if x == 0.0 {
        return d as f64;
    }
    (0..d).map(|j| (-x * j as f64).exp()).sum()
}

/// Partition function Z(x) = Σ_{ν=1..d} e^{−xν} = (1 − e^{−dx})/(e^x − 1).
///
/// At x = 0 the limit d is returned; at x = +∞ the limit 0.
pub fn partition_z(d: usize, x: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidDimension("partition_z needs d >= 1".into()));
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::InvalidArgument(format!("x must be >= 0, got {x}")));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok((-x).exp() * shifted_partition(d, x))
}

/// h(x) = Z(2x)/Z²(x) = coth(dx/2)·tanh(x/2); ranges over [1/d, 1].
pub fn h_factor(d: usize, x: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidDimension("h_factor needs d >= 1".into()));
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::InvalidArgument(format!("x must be >= 0, got {x}")));
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let s1 = shifted_partition(d, x);
    let s2 = shifted_partition(d, 2.0 * x);
    Ok(s2 / (s1 * s1))
}

/// f(x) = Z(4x), from the square of the interference expression.
pub fn f_factor(d: usize, x: f64) -> Result<f64> {
    partition_z(d, 4.0 * x)
}

/// g(x) = Z²(2x) − Z(4x), the off-diagonal thermal double sum.
pub fn g_factor(d: usize, x: f64) -> Result<f64> {
    let z2 = partition_z(d, 2.0 * x)?;
    let z4 = partition_z(d, 4.0 * x)?;
    Ok((z2 * z2 - z4).max(0.0))
}

/// f(x)/Z⁴(x), stable at every x including the +∞ marker (limit 1).
pub fn f_over_z4(d: usize, x: f64) -> f64 {
    if x.is_infinite() {
        return 1.0;
    }
    let s1 = shifted_partition(d, x);
    shifted_partition(d, 4.0 * x) / s1.powi(4)
}

/// g(x)/Z⁴(x), stable at every x including the +∞ marker (limit 0).
pub fn g_over_z4(d: usize, x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    let s1 = shifted_partition(d, x);
    let s2 = shifted_partition(d, 2.0 * x);
    let s4 = shifted_partition(d, 4.0 * x);
    ((s2 * s2 - s4) / s1.powi(4)).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn partition_z_examples() {
        assert_eq!(partition_z(5, 0.0).unwrap(), 5.0);
        assert!((partition_z(1, 2.0).unwrap() - (-2.0f64).exp()).abs() < 1e-15);
        assert!((partition_z(2, LN2).unwrap() - 0.75).abs() < 1e-15);
        assert!(partition_z(0, 1.0).is_err());
    }

    #[test]
    fn weights_examples() {
        let env = ThermalEnvironment::new(2, 1, 0.0).unwrap();
        assert_eq!(env.weights().unwrap().values, vec![0.5, 0.5]);

        let env = ThermalEnvironment::new(3, 1, f64::INFINITY).unwrap();
        assert_eq!(env.weights().unwrap().values, vec![1.0, 0.0, 0.0]);

        let env = ThermalEnvironment::new(2, 2, LN2).unwrap();
        let w = env.weights().unwrap().values;
        let expect = [4.0 / 9.0, 2.0 / 9.0, 2.0 / 9.0, 1.0 / 9.0];
        for (got, want) in w.iter().zip(expect.iter()) {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
    }

    #[test]
    fn weights_normalized_and_monotone() {
        for &d in &[1usize, 2, 3, 16] {
            for &s in &[1usize, 2, 4] {
                if d.pow(s as u32) > 1 << 16 {
                    continue;
                }
                for &x in &[0.0, 0.1, 1.0, 10.0, f64::INFINITY] {
                    let env = ThermalEnvironment::new(d, s, x).unwrap();
                    let w = env.weights().unwrap();
                    let sum = crate::stats::kahan_sum(&w.values);
                    assert!((sum - 1.0).abs() < 1e-14, "d={d} s={s} x={x} sum={sum}");
                    assert!(w.values.iter().all(|&v| v >= 0.0));
                }
            }
        }
        // Single spin weights are non-increasing in the level index.
        let w = boltzmann_weights(6, 0.7);
        for pair in w.windows(2) {
            assert!(pair[0] >= pair[1]);
        }
        // Multi-spin weights are non-increasing when flattened in order
        // of increasing total excitation S(ν).
        let env = ThermalEnvironment::new(3, 2, 0.7).unwrap();
        let w = env.weights().unwrap().values;
        let excitation = |idx: usize| -> usize {
            let mut rest = idx;
            let mut total = 0;
            for _ in 0..2 {
                total += rest % 3;
                rest /= 3;
            }
            total
        };
        let mut order: Vec<usize> = (0..w.len()).collect();
        order.sort_by_key(|&i| excitation(i));
        for pair in order.windows(2) {
            assert!(w[pair[0]] >= w[pair[1]] - 1e-15);
        }
    }

    #[test]
    fn weights_survive_large_x() {
        for &x in &[100.0, 700.0] {
            let w = boltzmann_weights(8, x);
            let sum: f64 = w.iter().sum();
            assert!((sum - 1.0).abs() < 1e-14);
            assert!(w.iter().all(|v| v.is_finite()));
            assert!(f_factor(8, x).unwrap().is_finite());
            assert!(g_factor(8, x).unwrap().is_finite());
            assert!(h_factor(8, x).unwrap().is_finite());
        }
    }

    #[test]
    fn dimension_cap_enforced() {
        let env = ThermalEnvironment::new(2, 21, 0.0).unwrap();
        assert!(matches!(env.weights(), Err(Error::SizeCap(_))));
        let env = ThermalEnvironment::new(2, 20, 0.0).unwrap();
        assert_eq!(env.dim().unwrap(), 1 << 20);
    }

    #[test]
    fn h_factor_examples_and_closed_form() {
        assert!((h_factor(4, 0.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((h_factor(1, 0.7).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(h_factor(3, f64::INFINITY).unwrap(), 1.0);

        // Z(2)/Z(1)² against coth(d/2·x)·tanh(x/2) at d=3, x=1.
        let d = 3;
        let x = 1.0;
        let z1 = partition_z(d, x).unwrap();
        let z2 = partition_z(d, 2.0 * x).unwrap();
        let via_z = z2 / (z1 * z1);
        let via_trig = (d as f64 * x / 2.0).tanh().recip() * (x / 2.0).tanh();
        assert!((h_factor(d, x).unwrap() - via_z).abs() < 1e-14);
        assert!((via_z - via_trig).abs() < 1e-14);
    }

    #[test]
    fn h_factor_monotone_in_x() {
        for &d in &[1usize, 2, 3, 5, 16] {
            let mut prev = h_factor(d, 0.0).unwrap();
            assert!((prev - 1.0 / d as f64).abs() < 1e-14);
            let mut x = 0.01;
            while x <= 20.0 {
                let cur = h_factor(d, x).unwrap();
                assert!(cur >= prev - 1e-13, "h not monotone at d={d}, x={x}");
                assert!(cur <= 1.0 + 1e-13);
                prev = cur;
                x += 0.01;
            }
        }
    }

    #[test]
    fn f_g_examples() {
        // d=1: Z²(2x) = Z(4x) = e^{-4x}, so g vanishes identically.
        for &x in &[0.0, 0.3, 2.0, 40.0] {
            assert!(g_factor(1, x).unwrap().abs() < 1e-16);
        }
        assert_eq!(f_factor(3, 0.0).unwrap(), 3.0);
        assert_eq!(g_factor(3, 0.0).unwrap(), 6.0);

        let f = f_factor(2, 0.5).unwrap();
        assert!((f - ((-2.0f64).exp() + (-4.0f64).exp())).abs() < 1e-15);
        let g = g_factor(2, 0.5).unwrap();
        let z2 = (-1.0f64).exp() + (-2.0f64).exp();
        assert!((g - (z2 * z2 - ((-2.0f64).exp() + (-4.0f64).exp()))).abs() < 1e-15);
    }

    #[test]
    fn g_product_form_agrees() {
        // Product form of the off-diagonal double sum:
        // g(x) = 2e^{−6x}·(1−e^{−2xd})/(1−e^{−2x})·(1−e^{−2x(d−1)})/(1−e^{−4x}).
        // (The leading 2 is forced by the ν≠σ sum: at d=2 the smallest
        // exponent 3 = 1+2 is reached by two ordered pairs.)
        for &d in &[2usize, 3, 5, 8] {
            for &x in &[0.1f64, 0.5, 1.0, 3.0] {
                let dd = d as f64;
                let prod = 2.0 * (-6.0 * x).exp() * (1.0 - (-2.0 * x * dd).exp())
                    / (1.0 - (-2.0 * x).exp())
                    * (1.0 - (-2.0 * x * (dd - 1.0)).exp())
                    / (1.0 - (-4.0 * x).exp());
                let g = g_factor(d, x).unwrap();
                assert!(
                    (g - prod).abs() <= 1e-13 * prod.abs().max(1e-300),
                    "d={d} x={x}: {g} vs {prod}"
                );
            }
        }
    }

    #[test]
    fn stable_ratios_match_naive_at_moderate_x() {
        for &d in &[2usize, 4, 7] {
            for &x in &[0.0, 0.2, 1.0, 5.0] {
                let z = partition_z(d, x).unwrap();
                let f = f_factor(d, x).unwrap();
                let g = g_factor(d, x).unwrap();
                let fr = f_over_z4(d, x);
                let gr = g_over_z4(d, x);
                assert!((fr - f / z.powi(4)).abs() < 1e-13 * fr.abs().max(1.0));
                assert!((gr - g / z.powi(4)).abs() < 1e-13 * gr.abs().max(1.0));
            }
        }
        assert_eq!(f_over_z4(5, f64::INFINITY), 1.0);
        assert_eq!(g_over_z4(5, f64::INFINITY), 0.0);
    }

    #[test]
    fn multispin_prefactor_coincides_only_in_limits() {
        // h^s(d, x) vs h(d^s, x): equal at x=0 and x=∞, different at x=1 for d=2, s=2.
        let hs0 = h_factor(2, 0.0).unwrap().powi(2);
        let h0 = h_factor(4, 0.0).unwrap();
        assert!((hs0 - h0).abs() < 1e-14);
        let hsi = h_factor(2, f64::INFINITY).unwrap().powi(2);
        let hi = h_factor(4, f64::INFINITY).unwrap();
        assert!((hsi - hi).abs() < 1e-14);
        let hs1 = h_factor(2, 1.0).unwrap().powi(2);
        let h1 = h_factor(4, 1.0).unwrap();
        assert!((hs1 - h1).abs() > 1e-2);
    }
}
