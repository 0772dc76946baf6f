//! Dense symmetric and tridiagonal eigensolvers.
//!
//! Matrices are stored row-major in flat slices.

use crate::error::{Error, Result};

/// Eigenvalues sorted descending with matching unit eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// Cyclic Jacobi diagonalization of a real symmetric `n × n` matrix.
///
/// Rotations are applied until every off-diagonal element is negligible
/// against the product of its diagonal neighbours, which keeps small
/// eigenvalues of graded positive matrices relatively accurate.
pub fn jacobi_eigen(a: &[f64], n: usize) -> Result<SymEigen> {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    for i in 0..n {
        for j in 0..i {
            let s = 0.5 * (m[i * n + j] + m[j * n + i]);
            m[i * n + j] = s;
            m[j * n + i] = s;
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    const MAX_SWEEPS: usize = 100;
    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                if apq.abs() <= 1e-18 * (app.abs() * aqq.abs()).sqrt()
                    || apq.abs() <= f64::MIN_POSITIVE
                {
                    m[p * n + q] = 0.0;
                    m[q * n + p] = 0.0;
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::NonConvergence {
            routine: "Jacobi eigensolver",
            iterations: MAX_SWEEPS,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]));
    Ok(SymEigen {
        values: order.iter().map(|&i| m[i * n + i]).collect(),
        vectors: order
            .iter()
            .map(|&i| (0..n).map(|k| v[k * n + i]).collect())
            .collect(),
    })
}

/// Symmetric tridiagonal matrix with diagonal `d` and off-diagonal `e`
/// (`e.len() == d.len() - 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub d: Vec<f64>,
    pub e: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(d: Vec<f64>, e: Vec<f64>) -> Self {
        assert_eq!(e.len() + 1, d.len().max(1));
        Self { d, e }
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let n = self.d.len();
        let mut count = 0;
        let mut q = self.d[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..n {
            let qq = if q == 0.0 {
                f64::EPSILON * (self.e[i - 1].abs() + 1e-300)
            } else {
                q
            };
            q = self.d[i] - x - self.e[i - 1] * self.e[i - 1] / qq;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.d.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.e[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.e[i].abs() } else { 0.0 };
            lo = lo.min(self.d[i] - r);
            hi = hi.max(self.d[i] + r);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (0-based) by Sturm bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        assert!(k < self.d.len());
        let (mut lo, mut hi) = self.gershgorin();
        let span = hi - lo;
        lo -= 1e-12 * span + 1e-300;
        hi += 1e-12 * span + 1e-300;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Unit eigenvector for an eigenvalue estimate `lambda` by inverse
    /// iteration.
    pub fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.d.len();
        if n == 1 {
            return vec![1.0];
        }
        let scale = self
            .d
            .iter()
            .map(|x| x.abs())
            .chain(self.e.iter().map(|x| x.abs()))
            .fold(0.0, f64::max);
        let sigma = lambda + 4.0 * f64::EPSILON * scale.max(1e-300);
        let mut y: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.1 * ((i as f64) * 0.7).sin())
            .collect();
        for _ in 0..4 {
            y = self.shifted_solve(sigma, &y);
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 && norm.is_finite() {
                for v in &mut y {
                    *v /= norm;
                }
            }
        }
        y
    }

    /// Solves `(T - sigma I) x = b` by Gaussian elimination with partial
    /// pivoting.
    fn shifted_solve(&self, sigma: f64, b: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        let tiny = f64::EPSILON * f64::EPSILON;
        // row i: sub a[i] (col i-1), diag dd[i], sup c[i] (col i+1), sup2 c2[i] (col i+2)
        let mut dd: Vec<f64> = self.d.iter().map(|x| x - sigma).collect();
        let mut c: Vec<f64> = self.e.clone();
        c.push(0.0);
        let mut c2 = vec![0.0; n];
        let mut rhs = b.to_vec();
        for i in 0..n - 1 {
            let sub = self.e[i];
            if sub.abs() > dd[i].abs() {
                // swap rows i and i+1
                let (d_i, c_i, c2_i, r_i) = (dd[i], c[i], c2[i], rhs[i]);
                dd[i] = sub;
                c[i] = dd[i + 1];
                c2[i] = c[i + 1];
                rhs[i] = rhs[i + 1];
                let m = d_i / sub;
                dd[i + 1] = c_i - m * c[i];
                c[i + 1] = c2_i - m * c2[i];
                rhs[i + 1] = r_i - m * rhs[i];
            } else {
                let piv = if dd[i] == 0.0 { tiny } else { dd[i] };
                dd[i] = piv;
                let m = sub / piv;
                dd[i + 1] -= m * c[i];
                c[i + 1] -= m * c2[i];
                rhs[i + 1] -= m * rhs[i];
            }
        }
        if dd[n - 1] == 0.0 {
            dd[n - 1] = tiny;
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = rhs[i];
            if i + 1 < n {
                s -= c[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= c2[i] * x[i + 2];
            }
            x[i] = s / dd[i];
        }
        x
    }
}
