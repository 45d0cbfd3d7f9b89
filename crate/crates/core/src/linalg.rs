//! Tridiagonal kernels: pivoted LU solves, Lanczos for the smallest singular
//! value, Sturm bisection for real symmetrizable matrices, and dense helpers.

use crate::error::{Error, Result};
use crate::operator::Tridiagonal;
use faer::{Mat, Side};
use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn cabs1(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// LU factorization with partial pivoting of a tridiagonal matrix, in the
/// layout of LAPACK's `?gttrf` (second superdiagonal fill-in in `du2`).
#[derive(Clone, Debug)]
pub struct TridiagonalLu {
    dl: Vec<Complex64>,
    d: Vec<Complex64>,
    du: Vec<Complex64>,
    du2: Vec<Complex64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    /// Returns `None` when a pivot vanishes exactly.
    pub fn factor(a: &Tridiagonal) -> Option<Self> {
        let n = a.n();
        let mut dl = a.lower.clone();
        let mut d = a.diag.clone();
        let mut du = a.upper.clone();
        let mut du2 = vec![ZERO; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if cabs1(d[i]) >= cabs1(dl[i]) {
                if d[i] != ZERO {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        if d.iter().any(|&v| v == ZERO || !(v.re.is_finite() && v.im.is_finite())) {
            return None;
        }
        Some(Self { dl, d, du, du2, swapped })
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [Complex64]) {
        let n = self.d.len();
        for i in 0..n - 1 {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }

    /// Solves `Aᴴ x = b` in place.
    pub fn solve_adjoint(&self, b: &mut [Complex64]) {
        let n = self.d.len();
        b[0] /= self.d[0].conj();
        if n > 1 {
            b[1] = (b[1] - self.du[0].conj() * b[0]) / self.d[1].conj();
        }
        for i in 2..n {
            b[i] = (b[i] - self.du[i - 1].conj() * b[i - 1] - self.du2[i - 2].conj() * b[i - 2]) / self.d[i].conj();
        }
        for i in (0..n - 1).rev() {
            if self.swapped[i] {
                let temp = b[i + 1];
                b[i + 1] = b[i] - self.dl[i].conj() * temp;
                b[i] = temp;
            } else {
                b[i] -= self.dl[i].conj() * b[i + 1];
            }
        }
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Fixed, non-symmetric start vector so runs are reproducible.
fn start_vector(n: usize) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..n)
        .map(|i| {
            let t = i as f64;
            Complex64::new(1.0 + 0.5 * (0.7 * t + 0.3).sin(), 0.25 * (1.3 * t).cos())
        })
        .collect();
    let s = norm(&v);
    v.into_iter().map(|x| x / s).collect()
}

/// Largest eigenvalue and last-component of its eigenvector, for the
/// symmetric tridiagonal Lanczos matrix.
fn top_ritz(alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let k = alpha.len();
    let t = Mat::<f64>::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i == j + 1 {
            beta[j]
        } else if j == i + 1 {
            beta[i]
        } else {
            0.0
        }
    });
    match t.self_adjoint_eigen(Side::Lower) {
        Ok(e) => (e.S().column_vector()[k - 1], e.U()[(k - 1, k - 1)]),
        Err(_) => (f64::NAN, f64::NAN),
    }
}

pub const LANCZOS_MAX_ITERATIONS: usize = 400;

/// Smallest singular value of a tridiagonal matrix `C` from the largest
/// eigenvalue of `C⁻¹C⁻ᴴ` (Lanczos with full reorthogonalization).
pub fn sigma_min_tridiagonal(c: &Tridiagonal) -> Result<f64> {
    let n = c.n();
    let Some(lu) = TridiagonalLu::factor(c) else {
        return Ok(0.0);
    };
    let apply = |x: &[Complex64]| {
        let mut y = x.to_vec();
        lu.solve_adjoint(&mut y);
        lu.solve(&mut y);
        y
    };
    let max_iter = n.min(LANCZOS_MAX_ITERATIONS);
    let mut basis: Vec<Vec<Complex64>> = vec![start_vector(n)];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut last = (f64::NAN, f64::INFINITY);
    for k in 0..max_iter {
        let mut w = apply(&basis[k]);
        if !w.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Ok(0.0);
        }
        let a = inner(&basis[k], &w).re;
        alpha.push(a);
        for _ in 0..2 {
            for q in &basis {
                let proj = inner(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= proj * qi;
                }
            }
        }
        let b = norm(&w);
        let check = k < 8 || k % 4 == 3 || b == 0.0 || k + 1 == max_iter;
        if check {
            let (theta, s_last) = top_ritz(&alpha, &beta);
            let residual = b * s_last.abs();
            last = (theta, residual);
            if theta.is_finite() && (residual <= 1e-10 * theta || b <= 1e-300) {
                return Ok(1.0 / theta.sqrt());
            }
        }
        if b <= 1e-300 {
            break;
        }
        beta.push(b);
        basis.push(w.into_iter().map(|x| x / b).collect());
    }
    let (theta, residual) = last;
    if theta.is_finite() && residual <= 1e-6 * theta {
        return Ok(1.0 / theta.sqrt());
    }
    Err(Error::Convergence { iterations: max_iter, residual: residual / theta })
}

/// Dense copy of a tridiagonal matrix.
pub fn to_dense(a: &Tridiagonal) -> Mat<Complex64> {
    let n = a.n();
    Mat::from_fn(n, n, |i, j| a.get(i, j))
}

/// Smallest singular value from a dense SVD.
pub fn sigma_min_dense(a: &Tridiagonal) -> Result<f64> {
    let sv = to_dense(a)
        .singular_values()
        .map_err(|e| Error::Solver(format!("SVD failed: {e:?}")))?;
    Ok(sv.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Eigenvalues of a real tridiagonal matrix with `A[i][i+1]·A[i+1][i] > 0`
/// are those of the symmetric matrix with off-diagonal `√(A[i][i+1]A[i+1][i])`.
/// Returns `(diag, offdiag²)` or `None` when that structure is absent.
pub fn symmetrizable(a: &Tridiagonal) -> Option<(Vec<f64>, Vec<f64>)> {
    if a.diag.iter().chain(&a.lower).chain(&a.upper).any(|v| v.im != 0.0) {
        return None;
    }
    let e2: Vec<f64> = a.upper.iter().zip(&a.lower).map(|(u, l)| u.re * l.re).collect();
    if e2.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    Some((a.diag.iter().map(|v| v.re).collect(), e2))
}

/// Number of eigenvalues below `x` (Sturm count via LDLᵀ pivots).
fn sturm_count(diag: &[f64], e2: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let prev = if q == 0.0 { f64::EPSILON * (e2[i - 1].sqrt() + 1.0) } else { q };
        q = diag[i] - x - e2[i - 1] / prev;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `k` smallest eigenvalues by bisection, to about machine precision.
pub fn lowest_eigenvalues_symmetrizable(a: &Tridiagonal, k: usize) -> Result<Vec<f64>> {
    let (diag, e2) = symmetrizable(a)
        .ok_or_else(|| Error::Solver("matrix is not real symmetrizable tridiagonal".into()))?;
    let n = diag.len();
    let k = k.min(n);
    // Gershgorin bounds
    let e: Vec<f64> = e2.iter().map(|v| v.sqrt()).collect();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let radius = if i > 0 { e[i - 1] } else { 0.0 } + if i + 1 < n { e[i] } else { 0.0 };
        lo = lo.min(diag[i] - radius);
        hi = hi.max(diag[i] + radius);
    }
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        let (mut a_lo, mut a_hi) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (a_lo + a_hi);
            if mid <= a_lo || mid >= a_hi {
                break;
            }
            if sturm_count(&diag, &e2, mid) > j {
                a_hi = mid;
            } else {
                a_lo = mid;
            }
        }
        out.push(0.5 * (a_lo + a_hi));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, shift: Complex64) -> Tridiagonal {
        let mut t = Tridiagonal::zeros(n);
        for i in 0..n {
            t.diag[i] = Complex64::new((i as f64 * 0.37).sin(), 0.1 * (i as f64).cos()) - shift;
        }
        for i in 0..n - 1 {
            t.lower[i] = Complex64::new(0.6 + 0.002 * i as f64, -0.2);
            t.upper[i] = Complex64::new(-0.5, 0.4 * (i as f64).sin());
        }
        t
    }

    #[test]
    fn lu_solves_both_systems() {
        let a = sample(37, ZERO);
        let lu = TridiagonalLu::factor(&a).unwrap();
        let x: Vec<Complex64> = (0..37).map(|i| Complex64::new(i as f64, 1.0 - i as f64 * 0.5)).collect();
        let mut b = a.matvec(&x);
        lu.solve(&mut b);
        assert!(b.iter().zip(&x).all(|(u, v)| (u - v).norm() < 1e-9 * (1.0 + v.norm())));

        let dense = to_dense(&a);
        let mut b: Vec<Complex64> = (0..37)
            .map(|i| (0..37).map(|j| dense[(j, i)].conj() * x[j]).sum())
            .collect();
        lu.solve_adjoint(&mut b);
        assert!(b.iter().zip(&x).all(|(u, v)| (u - v).norm() < 1e-9 * (1.0 + v.norm())));
    }

    #[test]
    fn lanczos_matches_dense_svd() {
        for &shift in &[Complex64::new(0.2, 0.0), Complex64::new(-0.4, 0.3), Complex64::new(1.1, -0.05)] {
            let a = sample(120, shift);
            let fast = sigma_min_tridiagonal(&a).unwrap();
            let dense = sigma_min_dense(&a).unwrap();
            assert!((fast - dense).abs() <= 1e-8 * dense.max(1e-12), "{fast} vs {dense}");
        }
    }

    #[test]
    fn sturm_bisection_matches_dense() {
        let n = 50;
        let mut t = Tridiagonal::zeros(n);
        for i in 0..n {
            t.diag[i] = Complex64::new(2.0 + 0.01 * i as f64, 0.0);
        }
        for i in 0..n - 1 {
            t.lower[i] = Complex64::new(-1.0 - 0.001 * i as f64, 0.0);
            t.upper[i] = Complex64::new(-0.5, 0.0);
        }
        let low = lowest_eigenvalues_symmetrizable(&t, 3).unwrap();
        let mut dense: Vec<f64> = to_dense(&t).eigenvalues().unwrap().iter().map(|v| v.re).collect();
        dense.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for k in 0..3 {
            assert!((low[k] - dense[k]).abs() < 1e-12, "{} vs {}", low[k], dense[k]);
        }
    }
}
