//! Closed-form ensemble moments of the interference distribution over
//! CUE: mean, second moment, variance, limiting cases, asymptotic
//! expansions, and the combinator assembly over the diagram table.
//!
//! The second moment is assembled as
//!
//!   ⟨I²⟩ = n [ F·(A1 + (n−1)A3)
//!            + G·(A2 + (n−1)A4 + c·n(n−1)B1 + c·n(n−1)²B2) ],
//!
//! where F and G are the thermal prefactors f^s/Z^{4s} and
//! (Z^{2s}(2x) − Z^s(4x))/Z^{4s}, the A/B combinators are rational
//! functions of (m, N) built from the diagram table with falling-product
//! multiplicities, and c is the B-term coefficient. The squared
//! interference contains two symmetric cross configurations, so the
//! combinatorial derivation gives c = 2; a single-counting variant c = 1
//! also circulates. Brute-force Weingarten summation arbitrates cleanly
//! for c = 2, shipped as [`SECOND_MOMENT_B_COEFF`];
//! `second_moment_with_coeff` keeps the losing variant reachable for
//! regression locks.
//!
//! A12 and A13 involve diagram identities with no usable tabulated
//! closed forms; they are reconstructed from their defining index sums:
//! a sum over the 15 set partitions of the four row vertices, each class
//! counted by a falling factorial of m and valued by the Weingarten
//! oracle at N (cached per (m, N)). At m = 1 they collapse to the single
//! closed forms D13 and D12, which also covers N < 4 where the k = 4
//! Gram matrix is singular.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::Serialize;

use crate::diagrams::DiagramId;
use crate::error::{Error, Result};
use crate::thermal::{h_factor, shifted_partition};
use crate::weingarten::{Monomial, MonomialEvaluator};

/// B-term coefficient fixed by brute-force oracle arbitration.
pub const SECOND_MOMENT_B_COEFF: f64 = 2.0;

/// The single-counting variant rejected by the arbitration.
pub const SECOND_MOMENT_B_COEFF_REJECTED: f64 = 1.0;

/// Falling product `n[i] = n(n−1)(n−2)···(n−i)`, i.e. i+1 factors.
/// Zero whenever n ≤ i (a factor vanishes).
pub fn falling_product(n: u128, i: u32) -> u128 {
    let mut acc: u128 = 1;
    for j in 0..=i as u128 {
        if j >= n {
            return 0;
        }
        acc *= n - j;
    }
    acc
}

fn ff(n: f64, i: u32) -> f64 {
    let mut acc = 1.0;
    for j in 0..=i {
        let factor = n - j as f64;
        if factor <= 0.0 {
            return 0.0;
        }
        acc *= factor;
    }
    acc
}

/// Both combinatorial counting identities, exactly in integer
/// arithmetic: `n[3] + 4n[2] + 2n[1] = n²(n−1)²` (row-vertex classes)
/// and `m[3] + 6m[2] + 7m[1] + m = m⁴` (column-vertex classes).
pub fn counting_identities_check(n: u128, m: u128) -> bool {
    if n == 0 || m == 0 {
        return false;
    }
    let lhs_n = falling_product(n, 3) + 4 * falling_product(n, 2) + 2 * falling_product(n, 1);
    let rhs_n = n * n * (n - 1) * (n - 1);
    let lhs_m = falling_product(m, 3) + 6 * falling_product(m, 2) + 7 * falling_product(m, 1) + m;
    let rhs_m = m * m * m * m;
    lhs_n == rhs_n && lhs_m == rhs_m
}

fn validate(n: usize, d: usize, s: usize, x: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidDimension("system dimension n must be >= 1".into()));
    }
    if d == 0 || s == 0 {
        return Err(Error::InvalidDimension("environment needs d >= 1 and s >= 1".into()));
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::InvalidArgument(format!("x must be >= 0 or +inf, got {x}")));
    }
    Ok((d as f64).powi(s as i32))
}

/// ⟨I(n, m, x)⟩ = h^s(x) · n·m(n−1)² / (n²m² − 1) with m = d^s.
pub fn mean_interference(n: usize, d: usize, s: usize, x: f64) -> Result<f64> {
    let m = validate(n, d, s, x)?;
    let nf = n as f64;
    let big_n = nf * m;
    if big_n == 1.0 {
        return Ok(0.0);
    }
    let h = h_factor(d, x)?.powi(s as i32);
    Ok(h * big_n * (nf - 1.0) * (nf - 1.0) / (big_n * big_n - 1.0))
}

/// Limits of the mean: (x→0 value, x→∞ value).
pub fn mean_limits(n: usize, m: usize) -> Result<(f64, f64)> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidDimension("mean_limits needs n, m >= 1".into()));
    }
    let nf = n as f64;
    let mf = m as f64;
    let big_n = nf * mf;
    if big_n == 1.0 {
        return Ok((0.0, 0.0));
    }
    let denom = big_n * big_n - 1.0;
    Ok((nf * (nf - 1.0) * (nf - 1.0) / denom, big_n * (nf - 1.0) * (nf - 1.0) / denom))
}

// Diagram shorthands.
fn dg(id: DiagramId, big_n: f64) -> f64 {
    closed_form_f(id, big_n)
}

// Closed forms as functions of a (possibly huge) float N; mirrors
// diagrams::closed_form but avoids integer width limits for N = n·m.
fn closed_form_f(id: DiagramId, n: f64) -> f64 {
    let n2 = n * n;
    match id {
        DiagramId::F11 => 1.0 / (n * (n + 1.0)),
        DiagramId::E2 => -1.0 / (n * (n2 - 1.0)),
        DiagramId::D13 => 2.0 / ((n + 3.0) * (n + 2.0) * (n + 1.0) * n),
        DiagramId::D14 => 1.0 / ((n + 3.0) * (n + 2.0) * (n + 1.0) * n),
        DiagramId::Da22 => (n2 + n + 2.0) / ((n + 3.0) * (n + 2.0) * (n2 - 1.0) * n2),
        DiagramId::Db22 => 8.0 / ((n + 3.0) * (n + 2.0) * (n2 - 1.0) * n2),
        DiagramId::Dc22 => -4.0 / ((n + 3.0) * (n + 2.0) * (n2 - 1.0) * n),
        DiagramId::Da23 => (n + 1.0) / ((n + 3.0) * (n + 2.0) * n2 * (n - 1.0)),
        DiagramId::Db23 => -2.0 / ((n + 3.0) * (n + 2.0) * (n2 - 1.0) * n),
        DiagramId::Dc23 => -1.0 / ((n + 3.0) * (n + 2.0) * (n + 1.0) * n2),
        DiagramId::Da24 => 1.0 / ((n + 3.0) * (n - 1.0) * n2),
        DiagramId::Db24 => -1.0 / ((n + 3.0) * (n + 2.0) * (n2 - 1.0) * n),
        DiagramId::Dc24 => 2.0 / ((n + 3.0) * (n + 2.0) * (n2 - 1.0) * n2),
        DiagramId::Da32 => -1.0 / ((n + 3.0) * (n + 2.0) * (n + 1.0) * n2),
        DiagramId::Db32 => 4.0 / ((n + 3.0) * (n + 2.0) * (n2 - 1.0) * n2),
        DiagramId::Da33 => (3.0 * n - 1.0) / ((n + 3.0) * (n2 - 4.0) * (n2 - 1.0) * n2),
        DiagramId::Db33 => -(n2 + 1.0) / ((n + 3.0) * (n2 - 4.0) * (n2 - 1.0) * n2),
        DiagramId::Dc33 => 2.0 / ((n + 3.0) * (n + 2.0) * (n2 - 1.0) * n2),
        DiagramId::Da34 => 1.0 / ((n + 3.0) * (n + 2.0) * (n2 - 1.0) * n2),
        DiagramId::Db34 => -(n2 + 2.0 * n + 2.0) / ((n + 3.0) * (n2 - 4.0) * (n2 - 1.0) * n2),
        DiagramId::D42 => 2.0 / ((n + 3.0) * (n + 2.0) * (n2 - 1.0) * n2),
        DiagramId::D43 => 1.0 / ((n + 3.0) * (n + 2.0) * (n2 - 1.0) * n2),
        DiagramId::D44 => (n2 + 6.0) / ((n2 - 9.0) * (n2 - 4.0) * (n2 - 1.0) * n2),
    }
}

fn d12_f(n: f64) -> f64 {
    4.0 / ((n + 3.0) * (n + 2.0) * (n + 1.0) * n)
}

/// A11 = B1 from the legible expansion; pure function of (m, N).
fn a11(m: f64, big_n: f64) -> f64 {
    let m3 = ff(m, 3);
    let m2 = ff(m, 2);
    let m1 = ff(m, 1);
    let mut acc = m * dg(DiagramId::D14, big_n);
    if m3 != 0.0 {
        acc += m3 * dg(DiagramId::D44, big_n);
    }
    if m2 != 0.0 {
        acc += m2 * (4.0 * dg(DiagramId::Da34, big_n) + 2.0 * dg(DiagramId::Db34, big_n));
    }
    if m1 != 0.0 {
        acc += m1
            * (dg(DiagramId::Da24, big_n)
                + 2.0 * dg(DiagramId::Dc24, big_n)
                + 4.0 * dg(DiagramId::Db24, big_n));
    }
    acc
}

/// A31, A32, A33, B2 share the barred-row coefficient pattern
/// (m[3]+4m[2]+2m[1], 2m[2]+4m[1], m[1]+m) over their three diagrams.
fn barred_combo(m: f64, big_n: f64, full: DiagramId, single: DiagramId, double: DiagramId) -> f64 {
    let m3 = ff(m, 3);
    let m2 = ff(m, 2);
    let m1 = ff(m, 1);
    let c_full = m3 + 4.0 * m2 + 2.0 * m1;
    let c_single = 2.0 * m2 + 4.0 * m1;
    let c_double = m1 + m;
    let mut acc = c_double * dg(double, big_n);
    if c_full != 0.0 {
        acc += c_full * dg(full, big_n);
    }
    if c_single != 0.0 {
        acc += c_single * dg(single, big_n);
    }
    acc
}

fn a31(m: f64, big_n: f64) -> f64 {
    barred_combo(m, big_n, DiagramId::D44, DiagramId::Db34, DiagramId::Da24)
}

fn a32(m: f64, big_n: f64) -> f64 {
    barred_combo(m, big_n, DiagramId::D43, DiagramId::Db33, DiagramId::Da23)
}

fn a33(m: f64, big_n: f64) -> f64 {
    barred_combo(m, big_n, DiagramId::D42, DiagramId::Da32, DiagramId::Da22)
}

fn b2(m: f64, big_n: f64) -> f64 {
    barred_combo(m, big_n, DiagramId::D44, DiagramId::Da34, DiagramId::Dc24)
}

/// Base row-line structures of the A12/A13 defining sums: factor lists
/// (row vertex id, column id). A12's two 4-cycles share column 0; A13's
/// share both columns.
const A12_BASE_U: [(usize, usize); 4] = [(0, 0), (1, 1), (2, 2), (3, 0)];
const A12_BASE_USTAR: [(usize, usize); 4] = [(0, 1), (1, 0), (2, 0), (3, 2)];
const A13_BASE_U: [(usize, usize); 4] = [(0, 0), (1, 1), (2, 1), (3, 0)];
const A13_BASE_USTAR: [(usize, usize); 4] = [(0, 1), (1, 0), (2, 0), (3, 1)];

/// Restricted-growth strings for all 15 set partitions of {0,1,2,3}.
fn set_partitions_4() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(15);
    for b in 0..=1usize {
        for c in 0..=(b + 1) {
            for d in 0..=(b.max(c) + 1) {
                out.push([0, b, c, d]);
            }
        }
    }
    out
}

fn partition_sum(
    ev: &mut MonomialEvaluator,
    base_u: &[(usize, usize); 4],
    base_ustar: &[(usize, usize); 4],
    m: f64,
) -> Result<f64> {
    let mut acc = 0.0f64;
    for labels in set_partitions_4() {
        let blocks = labels.iter().max().unwrap() + 1;
        let count = ff(m, blocks as u32 - 1);
        if count == 0.0 {
            continue;
        }
        let u: Vec<(usize, usize)> = base_u.iter().map(|&(l, c)| (labels[l], c)).collect();
        let ustar: Vec<(usize, usize)> = base_ustar.iter().map(|&(l, c)| (labels[l], c)).collect();
        let value = ev.average(&Monomial::from_factors(&u, &ustar)?)?;
        acc += count * value;
    }
    Ok(acc)
}

type CombinatorCache = Mutex<HashMap<(usize, usize), (f64, f64)>>;

static A_CACHE: OnceLock<CombinatorCache> = OnceLock::new();

/// Reconstructed (A12, A13) at integer (m, N), memoized.
fn a12_a13(m: usize, big_n: usize) -> Result<(f64, f64)> {
    if m == 1 {
        let nf = big_n as f64;
        return Ok((dg(DiagramId::D13, nf), d12_f(nf)));
    }
    let cache = A_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&hit) = cache.lock().unwrap().get(&(m, big_n)) {
        return Ok(hit);
    }
    let mut ev = MonomialEvaluator::new(big_n)?;
    let mf = m as f64;
    let a12 = partition_sum(&mut ev, &A12_BASE_U, &A12_BASE_USTAR, mf)?;
    let a13 = partition_sum(&mut ev, &A13_BASE_U, &A13_BASE_USTAR, mf)?;
    cache.lock().unwrap().insert((m, big_n), (a12, a13));
    Ok((a12, a13))
}

/// ⟨I²⟩ with an explicit B-term coefficient (for arbitration and
/// regression locks); production entry point is [`second_moment`].
pub fn second_moment_with_coeff(n: usize, d: usize, s: usize, x: f64, c_b: f64) -> Result<f64> {
    validate(n, d, s, x)?;
    let m_int: usize = d
        .checked_pow(s as u32)
        .ok_or_else(|| Error::SizeCap(format!("d^s = {d}^{s} overflows")))?;
    let big_n_int = n.checked_mul(m_int).ok_or_else(|| Error::SizeCap("n·m overflows".into()))?;
    if n == 1 || big_n_int == 1 {
        return Ok(0.0);
    }

    let nf = n as f64;
    let m = m_int as f64;
    let big_n = big_n_int as f64;

    // Thermal prefactors in Z-normalized form: F = Z^s(4x)/Z^{4s}(x),
    // G = (Z^{2s}(2x) − Z^s(4x))/Z^{4s}(x); the ground-state shift cancels.
    let (f_pref, g_pref) = if x.is_infinite() {
        (1.0, 0.0)
    } else {
        let s1 = shifted_partition(d, x);
        let s2 = shifted_partition(d, 2.0 * x);
        let s4 = shifted_partition(d, 4.0 * x);
        let denom = s1.powi(4 * s as i32);
        let f = s4.powi(s as i32) / denom;
        let g = ((s2.powi(2 * s as i32) - s4.powi(s as i32)) / denom).max(0.0);
        (f, g)
    };

    let v_a11 = a11(m, big_n);
    let v_a31 = a31(m, big_n);
    let (v_a12, v_a13) = a12_a13(m_int, big_n_int)?;

    let n3 = ff(nf, 3);
    let n2 = ff(nf, 2);
    let n1 = ff(nf, 1);
    let a1 = n3 * v_a11 + 4.0 * n2 * v_a12 + 2.0 * n1 * v_a13;
    let a3 = n3 * v_a31 + 4.0 * n2 * a32(m, big_n) + 2.0 * n1 * a33(m, big_n);
    let sq = nf * nf * (nf - 1.0) * (nf - 1.0);
    let a2 = sq * v_a11;
    let a4 = sq * v_a31;
    let b1 = v_a11;
    let v_b2 = b2(m, big_n);

    let f_part = a1 + (nf - 1.0) * a3;
    let g_part = a2
        + (nf - 1.0) * a4
        + c_b * nf * (nf - 1.0) * b1
        + c_b * nf * (nf - 1.0) * (nf - 1.0) * v_b2;
    Ok(nf * (f_pref * f_part + g_pref * g_part))
}

/// ⟨I²(n, d, s, x)⟩ with the arbitrated B coefficient.
pub fn second_moment(n: usize, d: usize, s: usize, x: f64) -> Result<f64> {
    second_moment_with_coeff(n, d, s, x, SECOND_MOMENT_B_COEFF)
}

/// var = ⟨I²⟩ − ⟨I⟩²; more negative than −1e-12 signals a formula bug.
pub fn variance(n: usize, d: usize, s: usize, x: f64) -> Result<f64> {
    let mean = mean_interference(n, d, s, x)?;
    let second = second_moment(n, d, s, x)?;
    let var = second - mean * mean;
    if var < -1e-12 {
        return Err(Error::Inconsistent(format!(
            "negative variance {var:.3e} at n={n}, d={d}, s={s}, x={x}"
        )));
    }
    Ok(var)
}

pub fn std_dev(n: usize, d: usize, s: usize, x: f64) -> Result<f64> {
    Ok(variance(n, d, s, x)?.max(0.0).sqrt())
}

/// Analytic moments for one parameter point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MomentReport {
    pub n: usize,
    pub d: usize,
    pub s: usize,
    pub x: f64,
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
    pub std_dev: f64,
}

pub fn moment_report(n: usize, d: usize, s: usize, x: f64) -> Result<MomentReport> {
    let mean = mean_interference(n, d, s, x)?;
    let second = second_moment(n, d, s, x)?;
    let var = second - mean * mean;
    if var < -1e-12 {
        return Err(Error::Inconsistent(format!(
            "negative variance {var:.3e} at n={n}, d={d}, s={s}, x={x}"
        )));
    }
    Ok(MomentReport {
        n,
        d,
        s,
        x,
        mean,
        second_moment: second,
        variance: var,
        std_dev: var.max(0.0).sqrt(),
    })
}

/// Asymptotic variance truncations.
///
/// The m ≫ 1, x = 0 leading term is 2(n−1)²/(n³m⁴); a variant without
/// the 2 circulates but is inconsistent with both the n ≫ 1 expansion
/// (whose large-m limit is 2(n−2)/(n²m⁴)) and the exact variance: the
/// exact/truncation ratio at (n, m) = (4, 256) is 1.0000 to five digits
/// with the coefficient used here.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsymptoticRegime {
    /// n ≫ 1, fixed m, x → ∞ (two terms).
    NLargeXInf,
    /// n ≫ 1, fixed m, x = 0 (two terms).
    NLargeX0,
    /// m ≫ 1, fixed n, x → ∞ (one term).
    MLargeXInf,
    /// m ≫ 1, fixed n, x = 0 (one term, corrected coefficient).
    MLargeX0,
}

pub fn variance_asymptotics(n: usize, m: usize, regime: AsymptoticRegime) -> Result<f64> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidDimension("variance_asymptotics needs n, m >= 1".into()));
    }
    let nf = n as f64;
    let mf = m as f64;
    Ok(match regime {
        AsymptoticRegime::NLargeXInf => {
            2.0 * (mf - 1.0) * (mf - 1.0) / (nf * mf.powi(4))
                - 4.0 * (mf.powi(4) - 3.0 * mf.powi(3) + 3.0 * mf * mf - 5.0 * mf + 3.0)
                    / (mf.powi(6) * nf * nf)
        }
        AsymptoticRegime::NLargeX0 => {
            2.0 * (mf * mf - 1.0) / (nf * mf.powi(6))
                + (8.0 - 4.0 * mf.powi(4)) / (mf.powi(8) * nf * nf)
        }
        AsymptoticRegime::MLargeXInf => 2.0 * (nf - 1.0) * (nf - 1.0) / (nf.powi(3) * mf * mf),
        AsymptoticRegime::MLargeX0 => 2.0 * (nf - 1.0) * (nf - 1.0) / (nf.powi(3) * mf.powi(4)),
    })
}

/// m = 1 reduction of the second moment: (N(N³−5N+8)−4)/((N+1)(N+3)).
pub fn unitary_second_moment_closed(big_n: usize) -> f64 {
    let n = big_n as f64;
    (n * (n.powi(3) - 5.0 * n + 8.0) - 4.0) / ((n + 1.0) * (n + 3.0))
}

/// m = 1 standard deviation: 2/(N+1)·√((N−1)/(N+3)).
pub fn unitary_std_closed(big_n: usize) -> f64 {
    let n = big_n as f64;
    2.0 / (n + 1.0) * ((n - 1.0) / (n + 3.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weingarten::{brute_mean, brute_second_moment};

    const INF: f64 = f64::INFINITY;

    fn round5(v: f64) -> f64 {
        (v * 1e5).round() / 1e5
    }

    #[test]
    fn float_closed_forms_match_integer_table() {
        for id in DiagramId::ALL {
            for &n in &[4usize, 5, 8, 16] {
                let via_frac = crate::diagrams::closed_form(id, n);
                let via_float = closed_form_f(id, n as f64);
                assert!(
                    (via_frac - via_float).abs() <= 1e-15 * via_frac.abs(),
                    "{} at N={n}",
                    id.name()
                );
            }
        }
        for &n in &[4usize, 7] {
            assert!((crate::diagrams::d12_closed_form(n) - d12_f(n as f64)).abs() < 1e-18);
        }
    }

    #[test]
    fn falling_product_examples() {
        assert_eq!(falling_product(2, 1), 2);
        assert_eq!(falling_product(2, 3), 0);
        assert_eq!(falling_product(5, 2), 60);
        assert_eq!(falling_product(0, 0), 0);
        assert_eq!(falling_product(4, 0), 4);
    }

    #[test]
    fn counting_identities() {
        assert!(counting_identities_check(2, 2));
        assert!(counting_identities_check(2, 3));
        assert!(counting_identities_check(10, 10));
        for n in 1..=12u128 {
            for m in 1..=12u128 {
                assert!(counting_identities_check(n, m), "n={n} m={m}");
            }
        }
    }

    #[test]
    fn set_partitions_count_and_validity() {
        let parts = set_partitions_4();
        assert_eq!(parts.len(), 15);
        let blocks: Vec<usize> = parts.iter().map(|p| p.iter().max().unwrap() + 1).collect();
        assert_eq!(blocks.iter().filter(|&&b| b == 1).count(), 1);
        assert_eq!(blocks.iter().filter(|&&b| b == 2).count(), 7);
        assert_eq!(blocks.iter().filter(|&&b| b == 3).count(), 6);
        assert_eq!(blocks.iter().filter(|&&b| b == 4).count(), 1);
    }

    #[test]
    fn mean_table1_values() {
        // Five-decimal reference values carry ±1e-5 quantization; the
        // (4,2) mean is exactly 0.5728548 (reference entry 0.57286 is a
        // double-rounding of 0.572855).
        let cases = [
            (4usize, 2usize, 0.57286),
            (4, 4, 0.14293),
            (4, 8, 0.03702),
            (8, 2, 1.54109),
            (8, 4, 0.38796),
        ];
        for (n, m, reference) in cases {
            let mean = mean_interference(n, m, 1, 0.1).unwrap();
            assert!(
                (mean - reference).abs() <= 1e-5,
                "(n,m)=({n},{m}): {mean} vs reference {reference}"
            );
        }
        assert_eq!(round5(mean_interference(8, 2, 1, 0.1).unwrap()), 1.54109);
        assert_eq!(round5(mean_interference(4, 8, 1, 0.1).unwrap()), 0.03702);
    }

    #[test]
    fn mean_unitary_and_limits() {
        // m=1: N(N−1)/(N+1) independent of x.
        for &x in &[0.0, 3.0, INF] {
            let v = mean_interference(2, 1, 1, x).unwrap();
            assert!((v - 2.0 / 3.0).abs() < 1e-15);
        }
        // (4,2): x→∞ gives 8/7, x→0 gives 4/7.
        let v = mean_interference(4, 2, 1, INF).unwrap();
        assert!((v - 8.0 / 7.0).abs() < 1e-14);
        let (x0, xinf) = mean_limits(4, 2).unwrap();
        assert!((x0 - 4.0 / 7.0).abs() < 1e-14);
        assert!((xinf - 8.0 / 7.0).abs() < 1e-14);
        assert_eq!(mean_interference(4, 2, 1, 0.0).unwrap(), x0);
        assert_eq!(mean_interference(4, 2, 1, INF).unwrap(), xinf);
        // n = 1 has no off-diagonal propagation at all.
        assert_eq!(mean_interference(1, 5, 2, 0.7).unwrap(), 0.0);
        assert_eq!(mean_limits(1, 7).unwrap(), (0.0, 0.0));
        let (a, b) = mean_limits(3, 1).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn mean_equals_diagram_chain() {
        // n²(n−1)·h·[m·F11(N) + m(m−1)·E2(N)] reproduces the closed form;
        // pins the negative sign of E2.
        for &n in &[2usize, 3, 7, 16] {
            for &m in &[1usize, 2, 5, 16] {
                for &x in &[0.0, 0.3, 2.0, INF] {
                    let nf = n as f64;
                    let mf = m as f64;
                    let big_n = nf * mf;
                    if big_n == 1.0 {
                        continue;
                    }
                    let h = h_factor(m, x).unwrap();
                    let chain = nf
                        * nf
                        * (nf - 1.0)
                        * h
                        * (mf * closed_form_f(DiagramId::F11, big_n)
                            + mf * (mf - 1.0) * closed_form_f(DiagramId::E2, big_n));
                    let direct = mean_interference(n, m, 1, x).unwrap();
                    assert!(
                        (chain - direct).abs() <= 1e-13 * direct.abs().max(1e-30),
                        "n={n} m={m} x={x}: {chain} vs {direct}"
                    );
                }
            }
        }
    }

    #[test]
    fn mean_monotone_in_n_and_m() {
        let grid = [2usize, 4, 8, 16, 32, 64];
        for &x in &[0.001, 0.01, 0.1, 10.0] {
            for (i, &n) in grid.iter().enumerate() {
                for (j, &m) in grid.iter().enumerate() {
                    if i + 1 < grid.len() {
                        assert!(
                            mean_interference(grid[i + 1], m, 1, x).unwrap()
                                > mean_interference(n, m, 1, x).unwrap()
                        );
                    }
                    if j + 1 < grid.len() {
                        assert!(
                            mean_interference(n, grid[j + 1], 1, x).unwrap()
                                < mean_interference(n, m, 1, x).unwrap()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn second_moment_unitary_reduction() {
        for big_n in 2..=12usize {
            let closed = unitary_second_moment_closed(big_n);
            for &x in &[0.0, 0.9, INF] {
                let got = second_moment(big_n, 1, 1, x).unwrap();
                assert!(
                    (got - closed).abs() <= 1e-13 * closed,
                    "N={big_n} x={x}: {got} vs {closed}"
                );
            }
        }
        // N=2: 8/15; N=3: 7/3.
        assert!((second_moment(2, 1, 1, 0.0).unwrap() - 8.0 / 15.0).abs() < 1e-14);
        assert!((second_moment(3, 1, 1, 1.0).unwrap() - 7.0 / 3.0).abs() < 1e-14);
        // σ(N=2) = (2/3)√(1/5).
        let sigma = std_dev(2, 1, 1, 0.0).unwrap();
        assert!((sigma - 2.0 / 3.0 * (0.2f64).sqrt()).abs() < 1e-14);
        assert!((sigma - unitary_std_closed(2)).abs() < 1e-14);
    }

    #[test]
    fn unitary_reduction_exact_over_rationals() {
        // At m = 1 the combinators collapse to single diagrams; assembling
        // ⟨I²⟩ = N(A1 + (N−1)A3) in exact rational arithmetic must equal
        // (N(N³−5N+8)−4)/((N+1)(N+3)) identically for N ∈ {2,…,12}.
        use crate::diagrams::{closed_form_frac, d12_frac};
        use num_bigint::BigInt;
        use num_rational::BigRational;

        let frac = |p: (i128, i128)| -> BigRational {
            BigRational::new(BigInt::from(p.0), BigInt::from(p.1))
        };
        let int = |v: i128| BigRational::from_integer(BigInt::from(v));

        for big_n in 2..=12i128 {
            let nn = |i: u32| int(falling_product(big_n as u128, i) as i128);
            let a1 = nn(3) * frac(closed_form_frac(DiagramId::D14, big_n))
                + int(4) * nn(2) * frac(closed_form_frac(DiagramId::D13, big_n))
                + int(2) * nn(1) * frac(d12_frac(big_n));
            let a3 = nn(3) * frac(closed_form_frac(DiagramId::Da24, big_n))
                + int(4) * nn(2) * frac(closed_form_frac(DiagramId::Da23, big_n))
                + int(2) * nn(1) * frac(closed_form_frac(DiagramId::Da22, big_n));
            let assembled = int(big_n) * (a1 + int(big_n - 1) * a3);
            let closed = BigRational::new(
                BigInt::from(big_n * (big_n * big_n * big_n - 5 * big_n + 8) - 4),
                BigInt::from((big_n + 1) * (big_n + 3)),
            );
            assert_eq!(assembled, closed, "exact mismatch at N={big_n}");
        }
    }

    #[test]
    fn second_moment_matches_brute_force() {
        for &(n, m) in &[(2usize, 2usize), (2, 3), (3, 2)] {
            for &x in &[0.0, 0.5, 5.0, INF] {
                let brute = brute_second_moment(n, m, x).unwrap();
                let closed = second_moment(n, m, 1, x).unwrap();
                assert!(
                    (closed - brute).abs() <= 1e-10 * brute.abs(),
                    "n={n} m={m} x={x}: closed {closed} vs brute {brute}"
                );
            }
        }
    }

    #[test]
    fn rejected_b_coefficient_disagrees() {
        let mut max_rel = 0.0f64;
        for &(n, m) in &[(2usize, 2usize), (2, 3), (3, 2)] {
            for &x in &[0.0, 0.5, 5.0] {
                let brute = brute_second_moment(n, m, x).unwrap();
                let rejected =
                    second_moment_with_coeff(n, m, 1, x, SECOND_MOMENT_B_COEFF_REJECTED).unwrap();
                max_rel = max_rel.max((rejected - brute).abs() / brute.abs());
            }
        }
        assert!(max_rel > 0.01, "rejected variant too close: {max_rel}");
    }

    #[test]
    fn brute_mean_agrees_with_closed_form() {
        for n in 1..=4usize {
            for m in 1..=4usize {
                for &x in &[0.0, 0.5, 5.0] {
                    let brute = brute_mean(n, m, x).unwrap();
                    let closed = mean_interference(n, m, 1, x).unwrap();
                    assert!(
                        (closed - brute).abs() <= 1e-12 * brute.abs().max(1e-30),
                        "n={n} m={m} x={x}: {closed} vs {brute}"
                    );
                }
            }
        }
    }

    #[test]
    fn table1_sigma_values() {
        let sigma = |n: usize, m: usize| round5(std_dev(n, m, 1, 0.1).unwrap());
        assert_eq!(sigma(4, 2), 0.11719);
        assert_eq!(sigma(4, 4), 0.03255);
        assert_eq!(sigma(4, 8), 0.00864);
        assert_eq!(sigma(8, 2), 0.09409);
        assert_eq!(sigma(8, 4), 0.02666);
    }

    #[test]
    fn multispin_coincides_in_limits_only() {
        for &x in &[0.0, INF] {
            let m2s2 = moment_report(3, 2, 2, x).unwrap();
            let m4s1 = moment_report(3, 4, 1, x).unwrap();
            assert!((m2s2.mean - m4s1.mean).abs() <= 1e-12 * m4s1.mean.abs());
            assert!(
                (m2s2.second_moment - m4s1.second_moment).abs() <= 1e-12 * m4s1.second_moment.abs()
            );
        }
        let a = moment_report(3, 2, 2, 1.0).unwrap();
        let b = moment_report(3, 4, 1, 1.0).unwrap();
        assert!((a.mean - b.mean).abs() / b.mean.abs() > 1e-3);
        assert!((a.second_moment - b.second_moment).abs() / b.second_moment.abs() > 1e-3);
    }

    #[test]
    fn asymptotic_expansions_match_exact() {
        // n-expansions at (256, 2), m-expansions at (4, 256), x ∈ {0, ∞}.
        let cases = [
            (256usize, 2usize, INF, AsymptoticRegime::NLargeXInf),
            (256, 2, 0.0, AsymptoticRegime::NLargeX0),
            (4, 256, INF, AsymptoticRegime::MLargeXInf),
            (4, 256, 0.0, AsymptoticRegime::MLargeX0),
        ];
        for (n, m, x, regime) in cases {
            let exact = variance(n, m, 1, x).unwrap();
            let asym = variance_asymptotics(n, m, regime).unwrap();
            let rel = (asym - exact).abs() / exact.abs();
            assert!(rel < 0.05, "{regime:?} at n={n}, m={m}: rel err {rel}");
        }
        // m = 1 reductions of the n-expansions recover var_U ≈ 4/n².
        let v = variance_asymptotics(100, 1, AsymptoticRegime::NLargeXInf).unwrap();
        assert!((v - 4.0 / 1e4).abs() < 1e-12);
        let v = variance_asymptotics(100, 1, AsymptoticRegime::NLargeX0).unwrap();
        assert!((v - 4.0 / 1e4).abs() < 1e-12);
        // m ≫ 1, x = 0 at n=4, m=64: 2·(n−1)²/(n³m⁴).
        let v = variance_asymptotics(4, 64, AsymptoticRegime::MLargeX0).unwrap();
        assert!((v - 18.0 / (64.0 * 64f64.powi(4))).abs() < 1e-25);
    }

    #[test]
    fn m_expansion_coefficient_scaling() {
        // The exact variance times n³m⁴/(n−1)² converges to 2 as m grows
        // at x = 0, pinning the corrected leading coefficient.
        let n = 4usize;
        for &m in &[64usize, 128, 256] {
            let var = variance(n, m, 1, 0.0).unwrap();
            let scaled = var * (n as f64).powi(3) * (m as f64).powi(4)
                / ((n as f64 - 1.0) * (n as f64 - 1.0));
            assert!(
                (scaled - 2.0).abs() < 20.0 / (m as f64 * m as f64),
                "m={m}: scaled coefficient {scaled}"
            );
        }
    }

    #[test]
    fn variance_nonnegative_on_grid() {
        for &n in &[1usize, 2, 3, 5, 16] {
            for &m in &[1usize, 2, 3, 8] {
                for &x in &[0.0, 0.1, 1.0, 10.0, INF] {
                    let var = variance(n, m, 1, x).unwrap();
                    assert!(var >= -1e-12, "n={n} m={m} x={x}: {var}");
                }
            }
        }
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(mean_interference(0, 2, 1, 0.0).is_err());
        assert!(mean_interference(2, 0, 1, 0.0).is_err());
        assert!(second_moment(2, 2, 0, 0.0).is_err());
        assert!(mean_interference(2, 2, 1, -1.0).is_err());
    }
}
