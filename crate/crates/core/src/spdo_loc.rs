//! Eigendecomposition of the source density operator for a single point
//! source with a flat-top spectrum.
//!
//! In the PSWF basis the operator becomes the real symmetric matrix
//!
//! ```text
//! M_mn = (2/C) √(λ_m λ_n) ∫_{-1}^{1} √(1-x²) ψ_m(x) ψ_n(x) dx,   C = πBl
//! ```
//!
//! which vanishes unless `m - n` is even, so it splits into an even and an
//! odd block. Each eigenvector yields a coefficient function `d_p(f)` on the
//! frequency band, normalized so that `Σ_k w_k d_p(f_k) d_q(f_k) λ_q = δ_pq`
//! with spectrally weighted quadrature weights `w_k`.

use crate::error::{invalid, Error, Result};
use crate::linalg::jacobi_eigen;
use crate::pswf::{default_truncation, self_fourier_map, PswfBasis, PswfMethod};
use crate::quadrature::{FrequencyRule, FrequencyRuleKind};
use crate::specfun::KernelTriple;
use std::f64::consts::PI;

/// Numerical settings shared by the SPDO solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Samples of the PSWF grid.
    pub k_samples: usize,
    /// PSWF truncation order. `None` starts at `max(16, ⌈2C/π⌉ + 10)` and
    /// grows until the spectrum has decayed well past the cutoff.
    pub n_trunc: Option<usize>,
    /// Frequency quadrature nodes.
    pub n_quad: usize,
    /// Eigenvalues below `cutoff · λ_max` are dropped.
    pub cutoff: f64,
    pub freq_rule: FrequencyRuleKind,
    pub method: PswfMethod,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            k_samples: 4096,
            n_trunc: None,
            n_quad: 64,
            cutoff: 1e-12,
            freq_rule: FrequencyRuleKind::GaussLegendre,
            method: PswfMethod::Legendre,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.cutoff > 0.0 && self.cutoff < 1.0) {
            return Err(invalid(
                "cutoff",
                format!("must lie in (0, 1), got {}", self.cutoff),
            ));
        }
        if self.n_quad < 2 {
            return Err(invalid(
                "n_quad",
                format!("need at least 2 nodes, got {}", self.n_quad),
            ));
        }
        if let Some(n) = self.n_trunc {
            if n < 4 {
                return Err(invalid(
                    "N",
                    format!("truncation order must be at least 4, got {n}"),
                ));
            }
        }
        Ok(())
    }

    fn basis_with(&self, c: f64, n: usize) -> Result<PswfBasis> {
        PswfBasis::build(c, n, self.k_samples.max(64 * n), self.method)
    }

    /// Runs `solve` on a basis for `C`. With automatic truncation the order
    /// grows in steps of 8 until the smallest eigenvalue reported by `solve`
    /// falls below `1e-4 · cutoff` times the largest.
    pub(crate) fn with_grown_basis<T>(
        &self,
        c: f64,
        mut solve: impl FnMut(&PswfBasis) -> Result<(T, f64, f64)>,
    ) -> Result<(PswfBasis, T)> {
        let start = self.n_trunc.unwrap_or_else(|| default_truncation(c));
        let mut n = start;
        loop {
            let basis = self.basis_with(c, n)?;
            let (out, lmin, lmax) = solve(&basis)?;
            let decayed = lmin <= 1e-4 * self.cutoff * lmax || basis.len() < n;
            if self.n_trunc.is_some() || decayed || n >= start + 64 {
                return Ok((basis, out));
            }
            n += 8;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn index(self) -> usize {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        }
    }
}

/// One eigenpair of a density operator expressed on the frequency rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenstate {
    pub eigenvalue: f64,
    /// PSWF-basis coefficients, rescaled by `√(B/(lλ))`.
    pub t_vector: Vec<f64>,
    /// Coefficient function on the rule nodes.
    pub coeff: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SpdoEigensystem {
    pub bandwidth: f64,
    pub distance: f64,
    pub cutoff: f64,
    /// Retained states, eigenvalue descending.
    pub states: Vec<Eigenstate>,
    pub parities: Vec<Parity>,
    /// States between `cutoff/2` and `cutoff` relative to the largest
    /// eigenvalue, used to gauge sensitivity to the cutoff.
    pub reserve: Vec<Eigenstate>,
    pub reserve_parities: Vec<Parity>,
    /// Full spectrum of the truncated matrix.
    pub all_eigs: Vec<f64>,
    pub rule: FrequencyRule,
    /// Index pairs of retained eigenvalues closer than `1e-13 λ_max`.
    pub degenerate: Vec<(usize, usize)>,
}

impl SpdoEigensystem {
    pub fn eigs(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.eigenvalue).collect()
    }

    pub fn trace(&self) -> f64 {
        self.all_eigs.iter().sum()
    }
}

/// The localization matrix `M` (row-major) for a basis built at `C = πBl`.
pub fn build_loc_matrix(basis: &PswfBasis) -> Vec<f64> {
    let n = basis.len();
    let (re, _) = basis.weighted_overlaps(0.0);
    let mut m = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            if (a + b) % 2 == 0 {
                m[a * n + b] = 2.0 / basis.c
                    * (basis.conc_eigs[a] * basis.conc_eigs[b]).sqrt()
                    * re[a * n + b];
            }
        }
    }
    m
}

pub(crate) fn check_band(bandwidth: f64, distance: f64) -> Result<()> {
    if !(bandwidth.is_finite() && (0.0..=0.5).contains(&bandwidth)) {
        return Err(invalid(
            "B",
            format!("fractional bandwidth must lie in [0, 0.5], got {bandwidth}"),
        ));
    }
    if !(distance > 0.0 && distance.is_finite()) {
        return Err(invalid(
            "l",
            format!("separation must be positive and finite, got {distance}"),
        ));
    }
    Ok(())
}

pub(crate) fn find_degenerate(eigs: &[f64], scale: f64) -> Vec<(usize, usize)> {
    eigs.windows(2)
        .enumerate()
        .filter(|(_, w)| (w[0] - w[1]).abs() < 1e-13 * scale)
        .map(|(i, _)| (i, i + 1))
        .collect()
}

/// Eigenpairs of the localization matrix, solved per parity block and
/// sorted by descending eigenvalue.
fn loc_spectrum(basis: &PswfBasis) -> Result<Vec<(f64, Parity, Vec<f64>)>> {
    let n = basis.len();
    let m = build_loc_matrix(basis);
    let mut pairs: Vec<(f64, Parity, Vec<f64>)> = Vec::new();
    for parity in [Parity::Even, Parity::Odd] {
        let idx: Vec<usize> = (parity.index()..n).step_by(2).collect();
        let k = idx.len();
        if k == 0 {
            continue;
        }
        let mut block = vec![0.0; k * k];
        for (i, &a) in idx.iter().enumerate() {
            for (j, &b) in idx.iter().enumerate() {
                block[i * k + j] = m[a * n + b];
            }
        }
        let eig = jacobi_eigen(&block, k)?;
        for (val, vec) in eig.values.into_iter().zip(eig.vectors) {
            let mut u = vec![0.0; n];
            for (i, &a) in idx.iter().enumerate() {
                u[a] = vec[i];
            }
            pairs.push((val, parity, u));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(pairs)
}

/// Solves the localization problem at bandwidth `B` and separation `l`.
/// `B = 0` gives the monochromatic single-state system.
pub fn solve_loc(bandwidth: f64, distance: f64, opts: &SolveOptions) -> Result<SpdoEigensystem> {
    check_band(bandwidth, distance)?;
    opts.validate()?;
    let rule = FrequencyRule::flat_top(bandwidth, opts.n_quad, opts.freq_rule)?;
    if bandwidth == 0.0 {
        return Ok(SpdoEigensystem {
            bandwidth,
            distance,
            cutoff: opts.cutoff,
            states: vec![Eigenstate {
                eigenvalue: 1.0,
                t_vector: Vec::new(),
                coeff: vec![1.0],
            }],
            parities: vec![Parity::Even],
            reserve: Vec::new(),
            reserve_parities: Vec::new(),
            all_eigs: vec![1.0],
            rule,
            degenerate: Vec::new(),
        });
    }
    let c = PI * bandwidth * distance;
    let (basis, pairs) = opts.with_grown_basis(c, |basis| {
        let pairs = loc_spectrum(basis)?;
        let lmin = pairs.last().map_or(0.0, |p| p.0);
        let lmax = pairs.first().map_or(0.0, |p| p.0);
        Ok((pairs, lmin, lmax))
    })?;
    let all_eigs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let lmax = all_eigs[0];
    if !(lmax > 0.0) {
        return Err(Error::EmptySpectrum {
            cutoff: opts.cutoff,
        });
    }

    let sfm = self_fourier_map(&basis, bandwidth, distance, &rule.nodes)?;
    let make_state = |val: f64, parity: Parity, u: &[f64]| -> Eigenstate {
        let scale = (bandwidth / (distance * val)).sqrt();
        let mut t: Vec<f64> = u.iter().map(|x| x * scale).collect();
        let mut coeff = vec![0.0; rule.len()];
        for (nn, row) in sfm.iter().enumerate() {
            if t[nn] == 0.0 {
                continue;
            }
            let s = if ((nn - parity.index()) / 2) % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            for (cf, v) in coeff.iter_mut().zip(row) {
                *cf += s * t[nn] * v;
            }
        }
        let moment: f64 = match parity {
            Parity::Even => rule.integrate_values(&coeff, |_| 1.0),
            Parity::Odd => rule.integrate_values(&coeff, |f| f),
        };
        if moment < 0.0 {
            for x in coeff.iter_mut().chain(t.iter_mut()) {
                *x = -*x;
            }
        }
        Eigenstate {
            eigenvalue: val,
            t_vector: t,
            coeff,
        }
    };

    let mut states = Vec::new();
    let mut parities = Vec::new();
    let mut reserve = Vec::new();
    let mut reserve_parities = Vec::new();
    for (val, parity, u) in &pairs {
        if *val >= opts.cutoff * lmax {
            states.push(make_state(*val, *parity, u));
            parities.push(*parity);
        } else if *val >= 0.5 * opts.cutoff * lmax {
            reserve.push(make_state(*val, *parity, u));
            reserve_parities.push(*parity);
        }
    }
    let degenerate = find_degenerate(&all_eigs[..states.len()], lmax);
    Ok(SpdoEigensystem {
        bandwidth,
        distance,
        cutoff: opts.cutoff,
        states,
        parities,
        reserve,
        reserve_parities,
        all_eigs,
        rule,
        degenerate,
    })
}

/// Residual of the frequency-space eigen-equation
/// `∫ W(f') O(f - f') d_p(f') df' = λ_p d_p(f)` for each retained state, as
/// `max_f |lhs - rhs| / λ_p` over the rule nodes.
pub fn verify_integral_equation(sys: &SpdoEigensystem) -> Result<Vec<f64>> {
    let k = KernelTriple::new(sys.distance)?;
    let nodes = &sys.rule.nodes;
    Ok(sys
        .states
        .iter()
        .map(|s| {
            nodes
                .iter()
                .enumerate()
                .map(|(a, &fa)| {
                    let lhs: f64 = nodes
                        .iter()
                        .zip(&sys.rule.weights)
                        .zip(&s.coeff)
                        .map(|((&fb, w), d)| w * k.o(fa - fb) * d)
                        .sum();
                    (lhs - s.eigenvalue * s.coeff[a]).abs() / s.eigenvalue
                })
                .fold(0.0, f64::max)
        })
        .collect())
}
