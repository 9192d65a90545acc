//! Exact CUE monomial averages of order k ≤ 4 via Weingarten calculus.
//!
//! The average of a product of k matrix elements of U and k of U* over
//! the unitary group with Haar measure is
//!
//!   ⟨Π U_{i_t j_t} Π U*_{i'_t j'_t}⟩ =
//!       Σ_{σ,τ} [i = i'∘σ][j = j'∘τ] · W(σ, τ),
//!
//! where W is the inverse of the Gram matrix G(σ,τ) = N^{#cycles(στ⁻¹)}
//! of permutation operators. W is obtained here by a dense linear solve
//! per (k, N) rather than by hard-coded character formulas; for N < k
//! (singular Gram) the Moore-Penrose pseudo-inverse is used, which is
//! the generalized Weingarten function.
//!
//! This module is the ground-truth oracle for the diagram table and the
//! analytic moment formulas; `brute_mean` / `brute_second_moment`
//! evaluate the interference moments by direct index sums over it.

use std::collections::HashMap;

use ndarray::Array2;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::cue::{sample_cue, SeedSpec};
use crate::error::{Error, Result};
use crate::linalg::pseudo_inverse_symmetric;
use crate::perm::{enumerate_permutations, Permutation};
use crate::thermal::boltzmann_weights;

/// Inverse (or pseudo-inverse) of the S_k Gram matrix at dimension N,
/// indexed by pairs of permutations in enumeration order.
///
/// For N ≥ k the inverse is computed in exact rational arithmetic, so
/// monomial averages keep full relative precision even at huge N, where
/// the small Weingarten entries (∼N^{−2k+1}) would drown in the rounding
/// of a floating-point solve.
pub struct WeingartenMatrix {
    pub k: usize,
    pub dim_n: usize,
    perms: Vec<Permutation>,
    values: Array2<f64>,
    exact: Option<Vec<Vec<BigRational>>>,
    /// Max-norm residual of G·W − I; exactly 0 on the rational path.
    pub residual: f64,
}

impl WeingartenMatrix {
    pub fn perms(&self) -> &[Permutation] {
        &self.perms
    }

    /// Entry W(σ_i, τ_j).
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    /// Weingarten function of the class of στ⁻¹ containing `pi`.
    pub fn class_value(&self, pi: &Permutation) -> f64 {
        let idx = self.perms.iter().position(|p| p == pi).expect("permutation of matching order");
        // W(σ, τ) with σ = pi, τ = id has στ⁻¹ = pi.
        let id_idx = self.perms.iter().position(|p| *p == Permutation::identity(self.k)).unwrap();
        self.values[[idx, id_idx]]
    }
}

fn gram_matrix(perms: &[Permutation], dim_n: usize) -> Array2<f64> {
    let sz = perms.len();
    Array2::from_shape_fn((sz, sz), |(i, j)| {
        let cycles = perms[i].compose(&perms[j].inverse()).cycle_count();
        (dim_n as f64).powi(cycles as i32)
    })
}

fn gram_matrix_exact(perms: &[Permutation], dim_n: usize) -> Vec<Vec<BigRational>> {
    let n = BigInt::from(dim_n);
    perms
        .iter()
        .map(|p| {
            perms
                .iter()
                .map(|q| {
                    let cycles = p.compose(&q.inverse()).cycle_count();
                    BigRational::from_integer(n.pow(cycles as u32))
                })
                .collect()
        })
        .collect()
}

/// Exact Gauss-Jordan inverse; None when singular.
fn invert_exact(mut a: Vec<Vec<BigRational>>) -> Option<Vec<Vec<BigRational>>> {
    let sz = a.len();
    let mut inv: Vec<Vec<BigRational>> = (0..sz)
        .map(|i| {
            (0..sz).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }).collect()
        })
        .collect();
    for col in 0..sz {
        let pivot_row = (col..sz).max_by_key(|&r| a[r][col].abs())?;
        if a[pivot_row][col].is_zero() {
            return None;
        }
        a.swap(col, pivot_row);
        inv.swap(col, pivot_row);
        let pivot = a[col][col].clone();
        for j in 0..sz {
            a[col][j] /= &pivot;
            inv[col][j] /= &pivot;
        }
        for r in 0..sz {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            for j in 0..sz {
                let upd = &factor * &a[col][j];
                a[r][j] -= upd;
                let upd = &factor * &inv[col][j];
                inv[r][j] -= upd;
            }
        }
    }
    Some(inv)
}

/// Weingarten matrix by exact dense inversion of the Gram matrix.
///
/// Refuses N < k, where the Gram matrix is singular; the internal
/// monomial-average path falls back to the pseudo-inverse in that case.
pub fn weingarten(k: usize, dim_n: usize) -> Result<WeingartenMatrix> {
    if dim_n < k {
        return Err(Error::SingularGram { k, n: dim_n });
    }
    let perms = enumerate_permutations(k)?;
    let g = gram_matrix_exact(&perms, dim_n);
    let w_exact = invert_exact(g.clone()).ok_or(Error::SingularGram { k, n: dim_n })?;
    // Exact verification: G·W = I by construction, checked defensively.
    let sz = perms.len();
    for (i, g_row) in g.iter().enumerate() {
        for j in 0..sz {
            let mut acc = BigRational::zero();
            for (gil, w_row) in g_row.iter().zip(w_exact.iter()) {
                acc += gil * &w_row[j];
            }
            let target = if i == j { BigRational::one() } else { BigRational::zero() };
            if acc != target {
                return Err(Error::Inconsistent(format!(
                    "exact Gram inversion failed at ({i},{j}) for k={k}, N={dim_n}"
                )));
            }
        }
    }
    let values = Array2::from_shape_fn((sz, sz), |(i, j)| {
        w_exact[i][j].to_f64().expect("weingarten entry representable")
    });
    Ok(WeingartenMatrix { k, dim_n, perms, values, exact: Some(w_exact), residual: 0.0 })
}

/// Weingarten matrix valid for any N ≥ 1: plain inverse when N ≥ k,
/// Moore-Penrose pseudo-inverse otherwise.
pub fn weingarten_general(k: usize, dim_n: usize) -> Result<WeingartenMatrix> {
    if dim_n == 0 {
        return Err(Error::InvalidDimension("weingarten needs N >= 1".into()));
    }
    if dim_n >= k {
        return weingarten(k, dim_n);
    }
    let perms = enumerate_permutations(k)?;
    let g = gram_matrix(&perms, dim_n);
    let w = pseudo_inverse_symmetric(&g, 1e-9);
    // Pseudo-inverse consistency: G W G = G.
    let gwg = g.dot(&w).dot(&g);
    let mut residual = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..perms.len() {
        for j in 0..perms.len() {
            residual = residual.max((gwg[[i, j]] - g[[i, j]]).abs());
            scale = scale.max(g[[i, j]].abs());
        }
    }
    residual /= scale;
    if residual > 1e-10 {
        return Err(Error::Inconsistent(format!(
            "Gram pseudo-inversion residual {residual:.3e} for k={k}, N={dim_n}"
        )));
    }
    Ok(WeingartenMatrix { k, dim_n, perms, values: w, exact: None, residual })
}

/// A monomial `Π_t U_{rows[t], cols[t]} · Π_t U*_{conj_rows[t], conj_cols[t]}`.
///
/// All indices are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub conj_rows: Vec<usize>,
    pub conj_cols: Vec<usize>,
}

impl Monomial {
    pub fn new(
        rows: Vec<usize>,
        cols: Vec<usize>,
        conj_rows: Vec<usize>,
        conj_cols: Vec<usize>,
    ) -> Result<Self> {
        let k = rows.len();
        if k == 0 || k > 4 {
            return Err(Error::InvalidArgument(format!(
                "monomial order {k} out of supported range 1..=4"
            )));
        }
        if cols.len() != k || conj_rows.len() != k || conj_cols.len() != k {
            return Err(Error::InvalidArgument(
                "monomial index lists must have equal length".into(),
            ));
        }
        Ok(Monomial { rows, cols, conj_rows, conj_cols })
    }

    /// From factor lists: pairs (row, col) of U factors and of U* factors.
    pub fn from_factors(u: &[(usize, usize)], ustar: &[(usize, usize)]) -> Result<Self> {
        Monomial::new(
            u.iter().map(|f| f.0).collect(),
            u.iter().map(|f| f.1).collect(),
            ustar.iter().map(|f| f.0).collect(),
            ustar.iter().map(|f| f.1).collect(),
        )
    }

    pub fn order(&self) -> usize {
        self.rows.len()
    }

    fn max_index(&self) -> usize {
        *self
            .rows
            .iter()
            .chain(&self.cols)
            .chain(&self.conj_rows)
            .chain(&self.conj_cols)
            .max()
            .unwrap()
    }

    /// A relabeling- and reordering-invariant key. Two monomials with the
    /// same key have the same Haar average (diagram rule (a) plus factor
    /// commutativity); the converse is not required for cache soundness.
    fn canonical_key(&self) -> u128 {
        let k = self.order();
        let mut u: Vec<(usize, usize)> = (0..k).map(|t| (self.rows[t], self.cols[t])).collect();
        let mut s: Vec<(usize, usize)> =
            (0..k).map(|t| (self.conj_rows[t], self.conj_cols[t])).collect();

        for _ in 0..4 {
            let mut row_map: HashMap<usize, usize> = HashMap::new();
            let mut col_map: HashMap<usize, usize> = HashMap::new();
            for &(r, c) in u.iter().chain(s.iter()) {
                let next = row_map.len();
                row_map.entry(r).or_insert(next);
                let next = col_map.len();
                col_map.entry(c).or_insert(next);
            }
            for f in u.iter_mut().chain(s.iter_mut()) {
                *f = (row_map[&f.0], col_map[&f.1]);
            }
            let before = (u.clone(), s.clone());
            u.sort_unstable();
            s.sort_unstable();
            if (u.clone(), s.clone()) == before {
                break;
            }
        }

        // Relabeled indices are < 2k ≤ 8, so a byte per factor suffices;
        // the order marker keeps keys of different k disjoint.
        let mut key: u128 = k as u128;
        for &(r, c) in u.iter().chain(s.iter()) {
            key = (key << 8) | ((r as u128) << 4) | (c as u128);
        }
        key
    }
}

/// Evaluator with a per-dimension memo of monomial averages.
pub struct MonomialEvaluator {
    dim_n: usize,
    wg: [Option<WeingartenMatrix>; 5],
    memo: HashMap<u128, f64>,
}

impl MonomialEvaluator {
    pub fn new(dim_n: usize) -> Result<Self> {
        if dim_n == 0 {
            return Err(Error::InvalidDimension("monomial averages need N >= 1".into()));
        }
        Ok(MonomialEvaluator { dim_n, wg: [None, None, None, None, None], memo: HashMap::new() })
    }

    pub fn dim_n(&self) -> usize {
        self.dim_n
    }

    /// Memoized Haar average of `mon` at this dimension. Always real.
    pub fn average(&mut self, mon: &Monomial) -> Result<f64> {
        if mon.max_index() >= self.dim_n {
            return Err(Error::InvalidArgument(format!(
                "monomial index {} out of range for N={}",
                mon.max_index(),
                self.dim_n
            )));
        }
        let key = mon.canonical_key();
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        let k = mon.order();
        if self.wg[k].is_none() {
            self.wg[k] = Some(weingarten_general(k, self.dim_n)?);
        }
        let wg = self.wg[k].as_ref().unwrap();

        // Permutations matching the row and column delta constraints.
        let mut row_matches: Vec<usize> = Vec::new();
        let mut col_matches: Vec<usize> = Vec::new();
        for (idx, p) in wg.perms().iter().enumerate() {
            if (0..k).all(|t| mon.rows[t] == mon.conj_rows[p.apply(t)]) {
                row_matches.push(idx);
            }
            if (0..k).all(|t| mon.cols[t] == mon.conj_cols[p.apply(t)]) {
                col_matches.push(idx);
            }
        }
        // The pair sum cancels from ∼N^{−k} terms down to values as small
        // as N^{−2k+2}, so it is carried out exactly when the rational
        // inverse is available.
        let total = match &wg.exact {
            Some(exact) => {
                let mut acc = BigRational::zero();
                for &si in &row_matches {
                    for &ti in &col_matches {
                        acc += &exact[si][ti];
                    }
                }
                acc.to_f64().expect("monomial average representable")
            }
            None => {
                let mut acc = 0.0f64;
                for &si in &row_matches {
                    for &ti in &col_matches {
                        acc += wg.value(si, ti);
                    }
                }
                acc
            }
        };
        self.memo.insert(key, total);
        Ok(total)
    }
}

/// One-shot Haar average of a monomial of order k ≤ 4 at dimension N.
///
/// Configurations with unbalanced U/U* index multisets at any vertex
/// return exactly 0 (diagram rule (b)); otherwise the Weingarten double
/// sum. The imaginary part is identically zero by construction.
pub fn monomial_average(
    rows: &[usize],
    cols: &[usize],
    conj_rows: &[usize],
    conj_cols: &[usize],
    dim_n: usize,
) -> Result<Complex64> {
    let mon = Monomial::new(rows.to_vec(), cols.to_vec(), conj_rows.to_vec(), conj_cols.to_vec())?;
    let mut ev = MonomialEvaluator::new(dim_n)?;
    Ok(Complex64::new(ev.average(&mon)?, 0.0))
}

/// Monte Carlo estimate of a monomial average over CUE draws.
#[derive(Debug, Clone, Copy)]
pub struct McMonomialEstimate {
    pub mean: Complex64,
    pub se_re: f64,
    pub se_im: f64,
    pub samples: usize,
}

impl McMonomialEstimate {
    /// Largest componentwise z-score against an exact (real) reference.
    pub fn z_against(&self, exact: f64) -> f64 {
        let zr = (self.mean.re - exact).abs() / self.se_re.max(f64::MIN_POSITIVE);
        let zi = self.mean.im.abs() / self.se_im.max(f64::MIN_POSITIVE);
        zr.max(zi)
    }
}

/// Independent second oracle: estimate the monomial average by sampling.
pub fn mc_monomial_average(
    mon: &Monomial,
    dim_n: usize,
    samples: usize,
    seed: SeedSpec,
) -> Result<McMonomialEstimate> {
    if samples < 10_000 {
        return Err(Error::InvalidArgument(format!(
            "need at least 1e4 samples for the MC oracle, got {samples}"
        )));
    }
    if mon.max_index() >= dim_n {
        return Err(Error::InvalidArgument("monomial index out of range".into()));
    }
    let k = mon.order();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut sum_sq_re = 0.0f64;
    let mut sum_sq_im = 0.0f64;
    for r in 0..samples {
        let u = sample_cue(dim_n, seed.realization(r as u64))?;
        let mut prod = Complex64::new(1.0, 0.0);
        for t in 0..k {
            prod *= u.entry(mon.rows[t], mon.cols[t]);
        }
        for t in 0..k {
            prod *= u.entry(mon.conj_rows[t], mon.conj_cols[t]).conj();
        }
        sum += prod;
        sum_sq_re += prod.re * prod.re;
        sum_sq_im += prod.im * prod.im;
    }
    let ns = samples as f64;
    let mean = sum / ns;
    let var_re = (sum_sq_re / ns - mean.re * mean.re).max(0.0);
    let var_im = (sum_sq_im / ns - mean.im * mean.im).max(0.0);
    Ok(McMonomialEstimate {
        mean,
        se_re: (var_re / ns).sqrt(),
        se_im: (var_im / ns).sqrt(),
        samples,
    })
}

fn joint(sys: usize, env: usize, m: usize) -> usize {
    sys * m + env
}

/// Exact ⟨I⟩ for CUE at N = n·m by direct index summation of k=2
/// monomial averages, Boltzmann-weighted over the environment columns.
pub fn brute_mean(n: usize, m: usize, x: f64) -> Result<f64> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidDimension("brute_mean needs n, m >= 1".into()));
    }
    let dim_n = n * m;
    if dim_n > 64 {
        return Err(Error::SizeCap(format!("brute_mean caps N = n·m at 64, got {dim_n}")));
    }
    if dim_n == 1 {
        return Ok(0.0);
    }
    let w = boltzmann_weights(m, x);
    let mut ev = MonomialEvaluator::new(dim_n)?;
    let mut total = 0.0f64;
    for alpha in 0..n {
        for gamma in 0..n {
            for delta in 0..n {
                if gamma == delta {
                    continue;
                }
                for mu in 0..m {
                    for rho in 0..m {
                        for nu in 0..m {
                            for sigma in 0..m {
                                let weight = w[nu] * w[sigma];
                                if weight == 0.0 {
                                    continue;
                                }
                                let mon = Monomial::from_factors(
                                    &[
                                        (joint(alpha, mu, m), joint(gamma, nu, m)),
                                        (joint(alpha, rho, m), joint(delta, sigma, m)),
                                    ],
                                    &[
                                        (joint(alpha, mu, m), joint(delta, nu, m)),
                                        (joint(alpha, rho, m), joint(gamma, sigma, m)),
                                    ],
                                )?;
                                total += weight * ev.average(&mon)?;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(total)
}

/// Exact ⟨I²⟩ for CUE at N = n·m by direct summation over all six system
/// indices (γ≠δ in both factors) and eight environment indices of k=4
/// monomial averages.
pub fn brute_second_moment(n: usize, m: usize, x: f64) -> Result<f64> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidDimension("brute_second_moment needs n, m >= 1".into()));
    }
    if n > 3 || m > 3 {
        return Err(Error::SizeCap(format!(
            "brute_second_moment caps n, m at 3 (n⁶m⁸ terms), got n={n}, m={m}"
        )));
    }
    let dim_n = n * m;
    if dim_n == 1 {
        return Ok(0.0);
    }
    let w = boltzmann_weights(m, x);
    let mut ev = MonomialEvaluator::new(dim_n)?;
    let mut total = 0.0f64;

    // Eight environment indices: μ1..μ4 free rows, μ5..μ8 thermal columns.
    let env4: Vec<[usize; 4]> = {
        let mut v = Vec::with_capacity(m.pow(4));
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    for d in 0..m {
                        v.push([a, b, c, d]);
                    }
                }
            }
        }
        v
    };

    for a1 in 0..n {
        for a2 in 0..n {
            for a3 in 0..n {
                for a4 in 0..n {
                    if a3 == a4 {
                        continue;
                    }
                    for a5 in 0..n {
                        for a6 in 0..n {
                            if a5 == a6 {
                                continue;
                            }
                            for rowm in &env4 {
                                let [m1, m2, m3, m4] = *rowm;
                                for colm in &env4 {
                                    let [m5, m6, m7, m8] = *colm;
                                    let weight = w[m5] * w[m6] * w[m7] * w[m8];
                                    if weight == 0.0 {
                                        continue;
                                    }
                                    let mon = Monomial::from_factors(
                                        &[
                                            (joint(a1, m1, m), joint(a3, m5, m)),
                                            (joint(a1, m2, m), joint(a4, m6, m)),
                                            (joint(a2, m3, m), joint(a6, m7, m)),
                                            (joint(a2, m4, m), joint(a5, m8, m)),
                                        ],
                                        &[
                                            (joint(a1, m1, m), joint(a4, m5, m)),
                                            (joint(a1, m2, m), joint(a3, m6, m)),
                                            (joint(a2, m3, m), joint(a5, m7, m)),
                                            (joint(a2, m4, m), joint(a6, m8, m)),
                                        ],
                                    )?;
                                    total += weight * ev.average(&mon)?;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(total)
}
