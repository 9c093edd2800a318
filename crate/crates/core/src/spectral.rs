//! Cartan (KAK) data via one-sided Jacobi SVD.
//!
//! Singular values are kept in descending order throughout:
//! `sigma[0] >= sigma[1] >= ... >= sigma[n-1] > 0`. For a unimodular input the
//! lower half of the spectrum is taken from the SVD of the exact integer
//! inverse, using `a_i(g) = 1 / a_{n+1-i}(g^-1)`. This keeps every singular
//! value accurate relative to its own size, which the gap tests rely on.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::matrix::IntMatrix;

/// Off-diagonal threshold for a Jacobi rotation, relative to the column norms.
pub const JACOBI_TOL: f64 = 1e-14;
/// Sweep cap before [`Error::NoConvergence`].
pub const MAX_SWEEPS: usize = 64;
/// Slack added to every certifying inequality.
pub const DELTA_NUM: f64 = 1e-8;

/// Plain real SVD `m = u * diag(sigma) * v^T` with descending `sigma`.
#[derive(Clone, Debug)]
pub struct RealSvd {
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<f64>,
    pub sweeps: usize,
}

/// Hestenes one-sided Jacobi on the columns of `m`.
pub fn jacobi_svd(m: &DMatrix<f64>) -> Result<RealSvd> {
    let n = m.ncols();
    let rows = m.nrows();
    let mut w = m.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let mut sweeps = 0;
    loop {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps });
        }
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for r in 0..rows {
                    let (x, y) = (w[(r, p)], w[(r, q)]);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == 0.0 || gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..rows {
                    let (x, y) = (w[(r, p)], w[(r, q)]);
                    w[(r, p)] = c * x - s * y;
                    w[(r, q)] = s * x + c * y;
                }
                for r in 0..n {
                    let (x, y) = (v[(r, p)], v[(r, q)]);
                    v[(r, p)] = c * x - s * y;
                    v[(r, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));

    let mut u = DMatrix::<f64>::zeros(rows, n);
    let mut v_sorted = DMatrix::<f64>::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        sigma.push(s);
        v_sorted.set_column(dst, &v.column(src));
        if s > 0.0 {
            u.set_column(dst, &(w.column(src) / s));
        }
    }
    Ok(RealSvd {
        u,
        sigma,
        v: v_sorted,
        sweeps,
    })
}

/// Numeric Cartan decomposition `g = k * diag(sigma) * k_prime`.
#[derive(Clone, Debug)]
pub struct SvdTriple {
    /// Left orthogonal factor; column `i` is the `i`-th left singular vector.
    pub k: DMatrix<f64>,
    /// Singular values, strictly positive and descending.
    pub sigma: Vec<f64>,
    /// Right orthogonal factor; row `i` is the `i`-th right singular vector.
    pub k_prime: DMatrix<f64>,
    /// Max-norm of `k * diag(sigma) * k_prime - g`.
    pub residual: f64,
}

impl SvdTriple {
    pub fn dim(&self) -> usize {
        self.sigma.len()
    }

    /// `j_i = log a_i`.
    pub fn log_sigma(&self) -> Vec<f64> {
        self.sigma.iter().map(|s| s.ln()).collect()
    }

    /// `a_k / a_{k+1}` for 1-based `k`.
    pub fn gap(&self, k: usize) -> f64 {
        assert!(k >= 1 && k < self.sigma.len(), "gap position {k} out of range");
        self.sigma[k - 1] / self.sigma[k]
    }

    /// Top left singular vector `k_g(e_1)`.
    pub fn top_left(&self) -> DVector<f64> {
        self.k.column(0).into_owned()
    }

    /// Top right singular vector (first row of `k_prime`).
    pub fn top_right(&self) -> DVector<f64> {
        self.k_prime.row(0).transpose()
    }

    /// `max |k^T k - I|` and the same for `k_prime`.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.dim();
        let id = DMatrix::<f64>::identity(n, n);
        let dk = (self.k.transpose() * &self.k - &id).amax();
        let dkp = (&self.k_prime * self.k_prime.transpose() - &id).amax();
        dk.max(dkp)
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&DVector::from_vec(self.sigma.clone()));
        &self.k * d * &self.k_prime
    }
}

/// SVD of a unimodular integer matrix.
pub fn svd(m: &IntMatrix) -> Result<SvdTriple> {
    let inv = m.inverse()?;
    svd_with_inverse(m, &inv)
}

/// As [`svd`], reusing a known exact inverse.
pub fn svd_with_inverse(m: &IntMatrix, inv: &IntMatrix) -> Result<SvdTriple> {
    let n = m.dim();
    let g = m.to_f64();
    let fwd = jacobi_svd(&g)?;
    let bwd = jacobi_svd(&inv.to_f64())?;

    let s1 = fwd.sigma[0];
    let sn = 1.0 / bwd.sigma[0];
    let mut sigma = Vec::with_capacity(n);
    let mut u = DMatrix::<f64>::zeros(n, n);
    let mut v = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let direct = fwd.sigma[i];
        let from_inv = 1.0 / bwd.sigma[n - 1 - i];
        // Absolute error of either route is about eps times the top singular
        // value of the matrix it came from; pick the smaller relative error.
        let use_direct = s1 / direct <= from_inv / sn;
        if use_direct {
            sigma.push(direct);
            u.set_column(i, &fwd.u.column(i));
            v.set_column(i, &fwd.v.column(i));
        } else {
            sigma.push(from_inv);
            // g^-1 = V' S' U'^T  =>  g = U' S'^-1 V'^T
            u.set_column(i, &bwd.v.column(n - 1 - i));
            v.set_column(i, &bwd.u.column(n - 1 - i));
        }
    }
    // Keep the ordering strict even if the two routes disagree in the last ulp.
    for i in 1..n {
        if sigma[i] > sigma[i - 1] {
            sigma[i] = sigma[i - 1];
        }
    }
    orthonormalize_columns(&mut u);
    orthonormalize_columns(&mut v);

    let mut triple = SvdTriple {
        k: u,
        sigma,
        k_prime: v.transpose(),
        residual: 0.0,
    };
    triple.residual = (triple.reconstruct() - g).amax();
    Ok(triple)
}

/// Modified Gram-Schmidt, in column order, twice for stability.
fn orthonormalize_columns(m: &mut DMatrix<f64>) {
    let n = m.ncols();
    for _ in 0..2 {
        for j in 0..n {
            for i in 0..j {
                let proj = m.column(i).dot(&m.column(j));
                let ci = m.column(i).into_owned();
                let mut cj = m.column_mut(j);
                cj.axpy(-proj, &ci, 1.0);
            }
            let norm = m.column(j).norm();
            if norm > 0.0 {
                m.column_mut(j).unscale_mut(norm);
            }
        }
    }
}

/// `||m|| = a_1(m)`, the largest singular value.
pub fn spectral_norm(m: &IntMatrix) -> f64 {
    match jacobi_svd(&m.to_f64()) {
        Ok(s) => s.sigma[0],
        Err(_) => {
            // Power iteration on m^T m as a fallback; convergence failure of
            // Jacobi is not expected at the sizes used here.
            let a = m.to_f64();
            let ata = a.transpose() * &a;
            let mut x = DVector::from_element(m.dim(), 1.0);
            for _ in 0..500 {
                x = &ata * &x;
                let nx = x.norm();
                x /= nx;
            }
            (x.dot(&(&ata * &x))).sqrt()
        }
    }
}

/// `a_k(m) / a_{k+1}(m)` for 1-based `k`.
pub fn singular_gap(m: &IntMatrix, k: usize) -> Result<f64> {
    let n = m.dim();
    if k == 0 || k >= n {
        return Err(Error::Config(format!("gap position {k} outside 1..{n}")));
    }
    Ok(svd(m)?.gap(k))
}
