//! Prolate spheroidal wave functions on (-1, 1).
//!
//! `Ψ_n` are the band-limited eigenfunctions of the sinc kernel
//!
//! ```text
//! ∫_{-1}^{1} sin(C(x - y)) / (π(x - y)) Ψ_n(y) dy = λ_n Ψ_n(x)
//! ```
//!
//! normalized to unit norm on the whole line, so that `∫_{-1}^{1} Ψ_n² = λ_n`.
//! The concentration eigenvalues `λ_n` are sorted descending and `Ψ_n` has
//! parity `(-1)^n`, with `Ψ_n(1) > 0`.
//!
//! Two constructions are available. [`PswfMethod::Legendre`] diagonalizes the
//! commuting differential operator in a normalized Legendre basis, which gives
//! the functions everywhere on [-1, 1] and eigenvalues with small relative
//! error even when they are tiny. [`PswfMethod::Dpss`] diagonalizes the
//! discrete commuting tridiagonal matrix of the discrete prolate sequences on
//! a midpoint grid; it is only accurate in absolute terms and serves as an
//! independent check.

use crate::error::{invalid, Error, Result};
use crate::linalg::Tridiagonal;
use crate::quadrature::{gauss_chebyshev_u, gauss_legendre};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PswfMethod {
    #[default]
    Legendre,
    Dpss,
}

#[derive(Debug, Clone)]
enum Repr {
    /// Coefficients of the unit-norm `ψ_n` in `√(k+½) P_k`, indexed by `k`.
    Legendre(Vec<Vec<f64>>),
    Sampled,
}

#[derive(Debug, Clone)]
pub struct PswfBasis {
    /// Space-bandwidth product `C`.
    pub c: f64,
    /// Truncation order requested at construction; `psi.len()` may be smaller
    /// when trailing functions fall below the method's noise floor.
    pub requested: usize,
    /// Midpoints of `K` equal cells on (-1, 1).
    pub x_grid: Vec<f64>,
    /// `Ψ_n` sampled on `x_grid`.
    pub psi: Vec<Vec<f64>>,
    pub conc_eigs: Vec<f64>,
    pub method: PswfMethod,
    repr: Repr,
}

/// `⌈2C/π⌉`, the number of eigenvalues close to one.
pub fn shannon_number(c: f64) -> usize {
    (2.0 * c / PI).ceil() as usize
}

/// Default truncation order for a given `C`.
pub fn default_truncation(c: f64) -> usize {
    (shannon_number(c) + 10).max(16)
}

/// Builds the basis with the default (Legendre) method.
pub fn build_basis(c: f64, n: usize, k: usize) -> Result<PswfBasis> {
    PswfBasis::build(c, n, k, PswfMethod::Legendre)
}

impl PswfBasis {
    pub fn build(c: f64, n: usize, k: usize, method: PswfMethod) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid(
                "C",
                format!("must be positive and finite, got {c}"),
            ));
        }
        if n < 4 {
            return Err(invalid(
                "N",
                format!("truncation order must be at least 4, got {n}"),
            ));
        }
        if k < 64 * n {
            return Err(invalid(
                "K",
                format!("need at least 64·N = {} samples, got {k}", 64 * n),
            ));
        }
        let required = shannon_number(c) + 6;
        if n < required {
            return Err(Error::TruncationInsufficient { n, c, required });
        }
        let x_grid: Vec<f64> = (0..k)
            .map(|i| (2.0 * i as f64 + 1.0 - k as f64) / k as f64)
            .collect();
        match method {
            PswfMethod::Legendre => Self::build_legendre(c, n, x_grid),
            PswfMethod::Dpss => Self::build_dpss(c, n, x_grid),
        }
    }

    fn build_legendre(c: f64, n: usize, x_grid: Vec<f64>) -> Result<Self> {
        let terms = n / 2 + c.ceil() as usize + 30;
        let kmax = 2 * terms + 1;
        let c2 = c * c;
        let mut coeffs = vec![Vec::new(); n];
        let mut eigs = vec![0.0; n];
        let p0 = legendre_at_zero(kmax);
        for parity in 0..2usize {
            let ks: Vec<usize> = (0..terms).map(|j| parity + 2 * j).collect();
            let d: Vec<f64> = ks
                .iter()
                .map(|&k| {
                    let kf = k as f64;
                    kf * (kf + 1.0)
                        + c2 * (2.0 * kf * (kf + 1.0) - 1.0) / ((2.0 * kf + 3.0) * (2.0 * kf - 1.0))
                })
                .collect();
            let e: Vec<f64> = ks[..terms - 1]
                .iter()
                .map(|&k| {
                    let kf = k as f64;
                    c2 * (kf + 2.0) * (kf + 1.0)
                        / ((2.0 * kf + 3.0) * ((2.0 * kf + 1.0) * (2.0 * kf + 5.0)).sqrt())
                })
                .collect();
            let t = Tridiagonal::new(d, e);
            for (i, m) in (parity..n).step_by(2).enumerate() {
                let chi = t.eigenvalue(i);
                let mut beta = t.eigenvector(chi);
                let at_one: f64 = beta
                    .iter()
                    .zip(&ks)
                    .map(|(b, &k)| b * (k as f64 + 0.5).sqrt())
                    .sum();
                if at_one < 0.0 {
                    for b in &mut beta {
                        *b = -*b;
                    }
                }
                let mu = if parity == 0 {
                    let psi0: f64 = beta
                        .iter()
                        .zip(&ks)
                        .map(|(b, &k)| b * (k as f64 + 0.5).sqrt() * p0[k])
                        .sum();
                    2f64.sqrt() * beta[0] / psi0
                } else {
                    let dpsi0: f64 = beta
                        .iter()
                        .zip(&ks)
                        .map(|(b, &k)| b * (k as f64 + 0.5).sqrt() * k as f64 * p0[k - 1])
                        .sum();
                    c * (2.0f64 / 3.0).sqrt() * beta[0] / dpsi0
                };
                eigs[m] = c * mu * mu / (2.0 * PI);
                let mut full = vec![0.0; kmax + 1];
                for (b, &k) in beta.iter().zip(&ks) {
                    full[k] = *b;
                }
                coeffs[m] = full;
            }
        }
        let keep = eigs
            .iter()
            .take_while(|&&l| l > 0.0 && l.is_finite())
            .count();
        coeffs.truncate(keep);
        eigs.truncate(keep);
        let mut basis = Self {
            c,
            requested: n,
            x_grid,
            psi: Vec::new(),
            conc_eigs: eigs,
            method: PswfMethod::Legendre,
            repr: Repr::Legendre(coeffs),
        };
        let mut psi = vec![vec![0.0; basis.x_grid.len()]; keep];
        for (i, &x) in basis.x_grid.iter().enumerate() {
            for (row, v) in psi.iter_mut().zip(basis.eval_all(x)) {
                row[i] = v;
            }
        }
        basis.psi = psi;
        Ok(basis)
    }

    fn build_dpss(c: f64, n: usize, x_grid: Vec<f64>) -> Result<Self> {
        let k = x_grid.len();
        let w = c / (PI * k as f64);
        let cw = (2.0 * PI * w).cos();
        let d: Vec<f64> = (0..k)
            .map(|i| {
                let a = 0.5 * (k as f64 - 1.0 - 2.0 * i as f64);
                a * a * cw
            })
            .collect();
        let e: Vec<f64> = (1..k).map(|i| 0.5 * (i * (k - i)) as f64).collect();
        let t = Tridiagonal::new(d, e);
        let dx = 2.0 / k as f64;
        let toeplitz: Vec<f64> = (0..k)
            .map(|m| {
                if m == 0 {
                    2.0 * w
                } else {
                    (2.0 * PI * w * m as f64).sin() / (PI * m as f64)
                }
            })
            .collect();
        let mut psi = Vec::with_capacity(n);
        let mut eigs = Vec::with_capacity(n);
        for m in 0..n {
            let theta = t.eigenvalue(k - 1 - m);
            let mut v = t.eigenvector(theta);
            if v[k - 1] < 0.0 {
                for x in &mut v {
                    *x = -*x;
                }
            }
            let lam = rayleigh_toeplitz(&toeplitz, &v);
            if m > 0 && lam < 1e-14 * eigs[0] {
                break;
            }
            let s = (lam / dx).sqrt();
            psi.push(v.iter().map(|x| x * s).collect::<Vec<f64>>());
            eigs.push(lam);
        }
        Ok(Self {
            c,
            requested: n,
            x_grid,
            psi,
            conc_eigs: eigs,
            method: PswfMethod::Dpss,
            repr: Repr::Sampled,
        })
    }

    /// Number of retained functions.
    pub fn len(&self) -> usize {
        self.conc_eigs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conc_eigs.is_empty()
    }

    pub fn shannon_number(&self) -> usize {
        shannon_number(self.c)
    }

    /// `Ψ_n(x)` for all retained `n`, at `|x| <= 1`.
    pub fn eval_all(&self, x: f64) -> Vec<f64> {
        match &self.repr {
            Repr::Legendre(coeffs) => {
                let kmax = coeffs.first().map_or(0, |c| c.len() - 1);
                let pbar = normalized_legendre(kmax, x);
                coeffs
                    .iter()
                    .zip(&self.conc_eigs)
                    .map(|(cf, l)| l.sqrt() * cf.iter().zip(&pbar).map(|(a, b)| a * b).sum::<f64>())
                    .collect()
            }
            Repr::Sampled => {
                let (idx, wts) = lagrange_stencil(&self.x_grid, x);
                self.psi
                    .iter()
                    .map(|row| idx.iter().zip(&wts).map(|(&i, w)| w * row[i]).sum())
                    .collect()
            }
        }
    }

    /// `ψ_n(x) = Ψ_n(x)/√λ_n`, unit norm on (-1, 1), for all retained `n`.
    pub fn eval_unit(&self, x: f64) -> Vec<f64> {
        match &self.repr {
            Repr::Legendre(coeffs) => {
                let kmax = coeffs.first().map_or(0, |c| c.len() - 1);
                let pbar = normalized_legendre(kmax, x);
                coeffs
                    .iter()
                    .map(|cf| cf.iter().zip(&pbar).map(|(a, b)| a * b).sum::<f64>())
                    .collect()
            }
            Repr::Sampled => self
                .eval_all(x)
                .into_iter()
                .zip(&self.conc_eigs)
                .map(|(v, l)| v / l.sqrt())
                .collect(),
        }
    }

    /// `∫_{-1}^{1} √(1-x²) e^{iωx} ψ_m(x) ψ_n(x) dx` for unit-norm `ψ`, as
    /// real and imaginary `N × N` row-major matrices.
    pub fn weighted_overlaps(&self, omega: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        let mut re = vec![0.0; n * n];
        let mut im = vec![0.0; n * n];
        let (nodes, weights, values): (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) = match &self.repr {
            Repr::Legendre(coeffs) => {
                let kmax = coeffs.first().map_or(0, |c| c.len() - 1);
                let q = 2 * kmax + 2 * (omega.abs().ceil() as usize) + 64;
                let (x, w) = gauss_chebyshev_u(q);
                let vals = x.iter().map(|&t| self.eval_unit(t)).collect();
                (x, w, vals)
            }
            Repr::Sampled => {
                let w = sqrt_weight_product_weights(&self.x_grid);
                let vals = (0..self.x_grid.len())
                    .map(|i| {
                        self.psi
                            .iter()
                            .zip(&self.conc_eigs)
                            .map(|(row, l)| row[i] / l.sqrt())
                            .collect()
                    })
                    .collect();
                (self.x_grid.clone(), w, vals)
            }
        };
        for ((x, w), v) in nodes.iter().zip(&weights).zip(&values) {
            let (s, c) = (omega * x).sin_cos();
            for a in 0..n {
                let wa = w * v[a];
                for b in a..n {
                    let p = wa * v[b];
                    re[a * n + b] += c * p;
                    im[a * n + b] += s * p;
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                re[a * n + b] = re[b * n + a];
                im[a * n + b] = im[b * n + a];
            }
        }
        (re, im)
    }
}

/// Rayleigh quotients of the sinc kernel on (-1, 1) for the sampled `Ψ_n`,
/// by midpoint quadrature on the basis grid, sorted descending.
pub fn concentration_eigenvalues(basis: &PswfBasis) -> Vec<f64> {
    let k = basis.x_grid.len();
    let dx = 2.0 / k as f64;
    let kern: Vec<f64> = (0..k)
        .map(|m| {
            if m == 0 {
                basis.c / PI
            } else {
                let d = m as f64 * dx;
                (basis.c * d).sin() / (PI * d)
            }
        })
        .collect();
    let mut out: Vec<f64> = basis
        .psi
        .iter()
        .map(|row| {
            let num = rayleigh_toeplitz(&kern, row) * dx * dx;
            let den: f64 = row.iter().map(|v| v * v).sum::<f64>() * dx;
            num / den
        })
        .collect();
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

/// `√(2l/(Bλ_n)) Ψ_n(2f/B)` for each retained `n` (rows) and frequency `f`
/// (columns). The basis must have been built for `C = πBl`.
pub fn self_fourier_map(
    basis: &PswfBasis,
    bandwidth: f64,
    distance: f64,
    f_grid: &[f64],
) -> Result<Vec<Vec<f64>>> {
    if !(bandwidth > 0.0 && distance > 0.0) {
        return Err(invalid("B, l", "must be positive"));
    }
    let c = PI * bandwidth * distance;
    if (c - basis.c).abs() > 1e-12 * basis.c {
        return Err(Error::BandwidthMismatch {
            basis: basis.c,
            problem: c,
        });
    }
    let half = 0.5 * bandwidth;
    if let Some(f) = f_grid.iter().find(|f| f.abs() > half * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!(
            "frequency {f} outside the band ±{half}"
        )));
    }
    let scale = (2.0 * distance / bandwidth).sqrt();
    let mut out = vec![vec![0.0; f_grid.len()]; basis.len()];
    for (j, &f) in f_grid.iter().enumerate() {
        let x = (f / half).clamp(-1.0, 1.0);
        for (row, v) in out.iter_mut().zip(basis.eval_unit(x)) {
            row[j] = scale * v;
        }
    }
    Ok(out)
}

fn rayleigh_toeplitz(row: &[f64], v: &[f64]) -> f64 {
    let k = v.len();
    let mut s = 0.0;
    for i in 0..k {
        let mut acc = row[0] * v[i];
        for j in 0..i {
            acc += 2.0 * row[i - j] * v[j];
        }
        s += v[i] * acc;
    }
    s
}

fn legendre_at_zero(kmax: usize) -> Vec<f64> {
    let mut p = vec![0.0; kmax + 1];
    p[0] = 1.0;
    for k in (2..=kmax).step_by(2) {
        p[k] = -((k - 1) as f64) / k as f64 * p[k - 2];
    }
    p
}

/// `√(k+½) P_k(x)` for `k = 0..=kmax`.
fn normalized_legendre(kmax: usize, x: f64) -> Vec<f64> {
    let mut p = vec![0.0; kmax + 1];
    p[0] = 1.0;
    if kmax >= 1 {
        p[1] = x;
    }
    for k in 2..=kmax {
        p[k] = ((2 * k - 1) as f64 * x * p[k - 1] - (k - 1) as f64 * p[k - 2]) / k as f64;
    }
    for (k, v) in p.iter_mut().enumerate() {
        *v *= (k as f64 + 0.5).sqrt();
    }
    p
}

fn lagrange_stencil(grid: &[f64], x: f64) -> (Vec<usize>, Vec<f64>) {
    const WIDTH: usize = 8;
    let k = grid.len();
    let h = grid[1] - grid[0];
    let pos = ((x - grid[0]) / h).floor() as isize;
    let start = (pos - (WIDTH as isize / 2 - 1)).clamp(0, (k - WIDTH) as isize) as usize;
    let idx: Vec<usize> = (start..start + WIDTH).collect();
    let wts = idx
        .iter()
        .map(|&i| {
            idx.iter()
                .filter(|&&j| j != i)
                .map(|&j| (x - grid[j]) / (grid[i] - grid[j]))
                .product()
        })
        .collect();
    (idx, wts)
}

/// Weights `w_i` such that `Σ w_i g(x_i) ≈ ∫_{-1}^{1} √(1-x²) g(x) dx` on the
/// midpoint grid, by integrating the local quadratic interpolant of `g`
/// against the weight over each cell.
pub fn sqrt_weight_product_weights(grid: &[f64]) -> Vec<f64> {
    let k = grid.len();
    let h = 2.0 / k as f64;
    let (gx, gw) = gauss_legendre(10);
    let mut w = vec![0.0; k];
    for cell in 0..k {
        let lo = -1.0 + cell as f64 * h;
        let centre = cell.clamp(1, k - 2);
        let nodes = [centre - 1, centre, centre + 1];
        let mut acc = |x: f64, weight: f64| {
            for (a, &i) in nodes.iter().enumerate() {
                let mut l = 1.0;
                for (b, &j) in nodes.iter().enumerate() {
                    if a != b {
                        l *= (x - grid[j]) / (grid[i] - grid[j]);
                    }
                }
                w[i] += weight * l;
            }
        };
        if cell == 0 || cell == k - 1 {
            // x = ∓(1 - t²) removes the square-root endpoint behaviour
            let sign = if cell == 0 { -1.0 } else { 1.0 };
            let tmax = h.sqrt();
            for (t, wt) in gx.iter().zip(&gw) {
                let t = 0.5 * tmax * (t + 1.0);
                let x = sign * (1.0 - t * t);
                let f = 2.0 * t * t * (2.0 - t * t).sqrt();
                acc(x, 0.5 * tmax * wt * f);
            }
        } else {
            for (t, wt) in gx.iter().zip(&gw) {
                let x = lo + 0.5 * h * (t + 1.0);
                acc(x, 0.5 * h * wt * (1.0 - x * x).sqrt());
            }
        }
    }
    w
}
