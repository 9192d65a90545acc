//! Small dense linear-algebra kernels used across the crate.
//!
//! Everything here targets matrices of modest size (N up to a few
//! thousand for QR, a few dozen elsewhere), so the implementations
//! favor clarity and numerical robustness over blocking tricks.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

pub type C64 = Complex64;

/// Conjugate transpose.
pub fn adjoint(a: &Array2<C64>) -> Array2<C64> {
    let mut out = a.t().to_owned();
    out.mapv_inplace(|z| z.conj());
    out
}

/// Largest entry magnitude of `a`.
pub fn max_abs(a: &Array2<C64>) -> f64 {
    a.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

/// Max-norm deviation of `u` from unitarity, max |(U U†)_ij − δ_ij|.
pub fn unitarity_deviation(u: &Array2<C64>) -> f64 {
    let n = u.nrows();
    let prod = u.dot(&adjoint(u));
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            dev = dev.max((prod[[i, j]] - target).norm());
        }
    }
    dev
}

/// In-place Householder QR of a square complex matrix.
///
/// Returns (Q, R) with A = Q R, Q unitary, R upper triangular.
pub fn qr_square(a: &Array2<C64>) -> (Array2<C64>, Array2<C64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "qr_square needs a square matrix");
    let mut r = a.to_owned();
    // Reflectors v_j with scalars beta_j, H_j = I - beta v v†.
    let mut vs: Vec<Array1<C64>> = Vec::with_capacity(n);
    let mut betas: Vec<f64> = Vec::with_capacity(n);

    for j in 0..n {
        let m = n - j;
        let mut v = Array1::<C64>::zeros(m);
        for i in 0..m {
            v[i] = r[[j + i, j]];
        }
        let norm_x = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            vs.push(v);
            betas.push(0.0);
            continue;
        }
        let x0 = v[0];
        let phase = if x0.norm() == 0.0 { C64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let alpha = -phase * norm_x;
        v[0] = x0 - alpha;
        let vnorm2 = v.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let beta = if vnorm2 == 0.0 { 0.0 } else { 2.0 / vnorm2 };
        // Apply H to the trailing block of R.
        for col in j..n {
            let mut dot = C64::new(0.0, 0.0);
            for i in 0..m {
                dot += v[i].conj() * r[[j + i, col]];
            }
            let s = dot * beta;
            for i in 0..m {
                let upd = s * v[i];
                r[[j + i, col]] -= upd;
            }
        }
        vs.push(v);
        betas.push(beta);
    }

    // Q = H_0 H_1 ... H_{n-1} applied to the identity, built by applying
    // reflectors in reverse order.
    let mut q = Array2::<C64>::eye(n);
    for j in (0..n).rev() {
        let beta = betas[j];
        if beta == 0.0 {
            continue;
        }
        let v = &vs[j];
        let m = n - j;
        for col in 0..n {
            let mut dot = C64::new(0.0, 0.0);
            for i in 0..m {
                dot += v[i].conj() * q[[j + i, col]];
            }
            let s = dot * beta;
            for i in 0..m {
                let upd = s * v[i];
                q[[j + i, col]] -= upd;
            }
        }
    }

    // Zero the strictly-lower part of R left over from rounding.
    for j in 0..n {
        for i in (j + 1)..n {
            r[[i, j]] = C64::new(0.0, 0.0);
        }
    }
    (q, r)
}

/// Eigendecomposition of a hermitian matrix by cyclic complex Jacobi.
///
/// Returns (eigenvalues, eigenvectors) with columns of the vector matrix
/// forming an orthonormal eigenbasis; eigenvalues in ascending order.
pub fn hermitian_eigen(h: &Array2<C64>) -> (Vec<f64>, Array2<C64>) {
    let n = h.nrows();
    assert_eq!(n, h.ncols());
    let mut a = h.to_owned();
    let mut v = Array2::<C64>::eye(n);
    if n <= 1 {
        let vals = (0..n).map(|i| a[[i, i]].re).collect();
        return (vals, v);
    }

    let max_sweeps = 60;
    for _ in 0..max_sweeps {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[[p, q]].norm_sqr();
            }
        }
        if off.sqrt() < 1e-15 * (1.0 + max_abs(&a)) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq.norm() == 0.0 {
                    continue;
                }
                let app = a[[p, p]].re;
                let aqq = a[[q, q]].re;
                let abs_apq = apq.norm();
                let phi = apq / abs_apq;
                let tau = (aqq - app) / (2.0 * abs_apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // G zeroes a[p,q]: columns/rows p,q mix with phase phi.
                // Update A = G† A G.
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = akp * c - akq * phi.conj() * s;
                    a[[k, q]] = akp * phi * s + akq * c;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = apk * c - aqk * phi * s;
                    a[[q, k]] = apk * phi.conj() * s + aqk * c;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = vkp * c - vkq * phi.conj() * s;
                    v[[k, q]] = vkp * phi * s + vkq * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let vals: Vec<f64> = (0..n).map(|i| a[[i, i]].re).collect();
    order.sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap());
    let sorted_vals: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let mut sorted_vecs = Array2::<C64>::zeros((n, n));
    for (new_col, &old_col) in order.iter().enumerate() {
        for k in 0..n {
            sorted_vecs[[k, new_col]] = v[[k, old_col]];
        }
    }
    (sorted_vals, sorted_vecs)
}

/// Eigenvalues of a real symmetric matrix (ascending) with eigenvectors.
pub fn symmetric_eigen(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    let h = Array2::from_shape_fn((n, n), |(i, j)| C64::new(a[[i, j]], 0.0));
    let (vals, vecs) = hermitian_eigen(&h);
    let rvecs = Array2::from_shape_fn((n, n), |(i, j)| vecs[[i, j]].re);
    (vals, rvecs)
}

/// Moore-Penrose pseudo-inverse of a real symmetric matrix, dropping
/// eigenvalues below `rel_tol * max|lambda|`.
pub fn pseudo_inverse_symmetric(a: &Array2<f64>, rel_tol: f64) -> Array2<f64> {
    let n = a.nrows();
    let (vals, vecs) = symmetric_eigen(a);
    let lmax = vals.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let cutoff = rel_tol * lmax;
    let mut out = Array2::<f64>::zeros((n, n));
    for (idx, &lam) in vals.iter().enumerate() {
        if lam.abs() <= cutoff {
            continue;
        }
        let inv = 1.0 / lam;
        for i in 0..n {
            for j in 0..n {
                out[[i, j]] += inv * vecs[[i, idx]] * vecs[[j, idx]];
            }
        }
    }
    out
}

/// Eigenphases of a unitary matrix, each in (−π, π].
///
/// U is normal, so it shares an eigenbasis with the hermitian matrix
/// H = (U + U†)/2 + c·(U − U†)/(2i) for generic real c; the phase of the
/// eigenvalue on each eigenvector is recovered from the two hermitian
/// parts. c is a fixed irrational-ish constant so that distinct
/// eigenphases collide in H only on a measure-zero set.
pub fn eigenphases_unitary(u: &Array2<C64>) -> Vec<f64> {
    let n = u.nrows();
    let udag = adjoint(u);
    let i = C64::new(0.0, 1.0);
    let h_re = Array2::from_shape_fn((n, n), |(r, c)| (u[[r, c]] + udag[[r, c]]) * 0.5);
    let h_im = Array2::from_shape_fn((n, n), |(r, c)| (u[[r, c]] - udag[[r, c]]) / (2.0 * i));
    const MIX: f64 = 0.739_085_133_215_160_6;
    let h = Array2::from_shape_fn((n, n), |(r, c)| h_re[[r, c]] + h_im[[r, c]] * MIX);
    let (_, vecs) = hermitian_eigen(&h);
    let mut phases = Vec::with_capacity(n);
    for col in 0..n {
        let v: Array1<C64> = vecs.column(col).to_owned();
        let cosv = quad_form(&h_re, &v);
        let sinv = quad_form(&h_im, &v);
        phases.push(sinv.atan2(cosv));
    }
    phases
}

fn quad_form(h: &Array2<C64>, v: &Array1<C64>) -> f64 {
    let n = h.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for r in 0..n {
        let mut row = C64::new(0.0, 0.0);
        for c in 0..n {
            row += h[[r, c]] * v[c];
        }
        acc += v[r].conj() * row;
    }
    acc.re
}
