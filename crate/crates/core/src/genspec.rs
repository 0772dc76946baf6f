//! Single-source density operator for an arbitrary symmetric emission
//! spectrum `W(f)`.
//!
//! The Fourier transform `d̃(v)` of a coefficient function is supported on
//! `|v| < l` and satisfies
//!
//! ```text
//! (2/π) √(1-x²) ∫_{-1}^{1} d̃(lx') W̃(l(x-x')) dx' = λ d̃(lx)
//! ```
//!
//! which is solved by expanding `d̃(lx)` in an orthonormal basis for the
//! weight `(1-x²)^{-1/2}` and diagonalizing the resulting symmetric matrices,
//! one per parity. Two bases are available: [`GenspecBasis::AngularSine`],
//! `√(2/π) sin((m+1)θ)` with `x = cos θ`, which carries the exact `√(1-x²)`
//! edge behaviour and converges spectrally; and
//! [`GenspecBasis::FourierQuarterWeight`], cosines and sines in `x` times
//! `(1-x²)^{1/4}`, which converges algebraically.

use crate::error::{invalid, Error, Result};
use crate::fisher::{qfi_from_eigenstates, Convergence, FisherResult, ProblemKind};
use crate::linalg::jacobi_eigen;
use crate::quadrature::{gauss_legendre, gauss_legendre_on, FrequencyRule};
use crate::spdo_loc::Eigenstate;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumProfile {
    /// Uniform over `|f| < bandwidth/2`.
    FlatTop {
        bandwidth: f64,
    },
    Gaussian {
        fwhm: f64,
    },
    Lorentzian {
        fwhm: f64,
    },
    /// Sampled `W` on an ascending grid, renormalized by the trapezoid rule.
    Tabulated {
        f: Vec<f64>,
        w: Vec<f64>,
    },
}

fn gaussian_sigma(fwhm: f64) -> f64 {
    fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt())
}

fn trapezoid_weights(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut t = vec![0.0; n];
    for i in 0..n - 1 {
        let h = 0.5 * (f[i + 1] - f[i]);
        t[i] += h;
        t[i + 1] += h;
    }
    t
}

impl SpectrumProfile {
    pub fn flat_top(bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth <= 0.5) {
            return Err(invalid(
                "B",
                format!("must lie in (0, 0.5], got {bandwidth}"),
            ));
        }
        Ok(Self::FlatTop { bandwidth })
    }

    pub fn gaussian(fwhm: f64) -> Result<Self> {
        if !(fwhm > 0.0 && fwhm <= 0.5) {
            return Err(invalid("fwhm", format!("must lie in (0, 0.5], got {fwhm}")));
        }
        Ok(Self::Gaussian { fwhm })
    }

    pub fn lorentzian(fwhm: f64) -> Result<Self> {
        if !(fwhm > 0.0 && fwhm <= 0.5) {
            return Err(invalid("fwhm", format!("must lie in (0, 0.5], got {fwhm}")));
        }
        Ok(Self::Lorentzian { fwhm })
    }

    /// Tabulated spectrum; `w` is renormalized to unit trapezoid integral.
    pub fn tabulated(f: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        if f.len() != w.len() || f.len() < 3 {
            return Err(invalid(
                "spectrum",
                "need at least 3 (f, W) rows of equal length",
            ));
        }
        if f.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(invalid(
                "spectrum",
                "frequencies must be strictly ascending",
            ));
        }
        if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || f.iter().any(|x| !x.is_finite()) {
            return Err(invalid("spectrum", "values must be finite with W >= 0"));
        }
        let total: f64 = trapezoid_weights(&f)
            .iter()
            .zip(&w)
            .map(|(t, w)| t * w)
            .sum();
        if !(total > 0.0) {
            return Err(invalid("spectrum", "W integrates to zero"));
        }
        Ok(Self::Tabulated {
            f,
            w: w.iter().map(|x| x / total).collect(),
        })
    }

    /// Parses two-column `f, W` text (comma or whitespace separated). Blank
    /// lines, `#` comments and a non-numeric header line are skipped.
    pub fn tabulated_from_csv(text: &str) -> Result<Self> {
        let mut f = Vec::new();
        let mut w = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            let parsed: Option<Vec<f64>> = cols.iter().map(|c| c.parse().ok()).collect();
            match parsed {
                Some(v) if v.len() == 2 => {
                    f.push(v[0]);
                    w.push(v[1]);
                }
                None if f.is_empty() => continue,
                _ => {
                    return Err(invalid(
                        "spectrum",
                        format!("line {}: expected two numeric columns", lineno + 1),
                    ))
                }
            }
        }
        Self::tabulated(f, w)
    }

    /// Spectral density `W(f)`.
    pub fn w(&self, f: f64) -> f64 {
        match self {
            Self::FlatTop { bandwidth } => {
                if f.abs() < 0.5 * bandwidth {
                    1.0 / bandwidth
                } else {
                    0.0
                }
            }
            Self::Gaussian { fwhm } => {
                let s = gaussian_sigma(*fwhm);
                (-0.5 * (f / s).powi(2)).exp() / (s * (2.0 * PI).sqrt())
            }
            Self::Lorentzian { fwhm } => {
                let g = 0.5 * fwhm;
                g / (PI * (f * f + g * g))
            }
            Self::Tabulated { f: grid, w } => {
                if f < grid[0] || f > grid[grid.len() - 1] {
                    return 0.0;
                }
                let i = grid.partition_point(|x| *x <= f).clamp(1, grid.len() - 1);
                let t = (f - grid[i - 1]) / (grid[i] - grid[i - 1]);
                w[i - 1] + t * (w[i] - w[i - 1])
            }
        }
    }

    /// `W̃(v) = ∫ W(f) e^{i2πfv} df`, real for symmetric spectra.
    pub fn w_tilde(&self, v: f64) -> f64 {
        match self {
            Self::FlatTop { bandwidth } => {
                let a = PI * bandwidth * v;
                if a.abs() < 1e-8 {
                    1.0 - a * a / 6.0
                } else {
                    a.sin() / a
                }
            }
            Self::Gaussian { fwhm } => {
                let s = gaussian_sigma(*fwhm);
                (-2.0 * PI * PI * s * s * v * v).exp()
            }
            Self::Lorentzian { fwhm } => (-PI * fwhm * v.abs()).exp(),
            Self::Tabulated { f, w } => trapezoid_weights(f)
                .iter()
                .zip(f)
                .zip(w)
                .map(|((t, f), w)| t * w * (2.0 * PI * f * v).cos())
                .sum(),
        }
    }

    /// Characteristic width: the bandwidth of a flat top, otherwise the FWHM
    /// (estimated from the samples for a tabulated spectrum).
    pub fn width(&self) -> f64 {
        match self {
            Self::FlatTop { bandwidth } => *bandwidth,
            Self::Gaussian { fwhm } | Self::Lorentzian { fwhm } => *fwhm,
            Self::Tabulated { f, w } => {
                let peak = w.iter().cloned().fold(0.0, f64::max);
                let above: Vec<f64> = f
                    .iter()
                    .zip(w)
                    .filter(|(_, w)| **w >= 0.5 * peak)
                    .map(|(f, _)| *f)
                    .collect();
                above.last().copied().unwrap_or(0.0) - above.first().copied().unwrap_or(0.0)
            }
        }
    }

    /// `C_eff = π · width · l`.
    pub fn effective_space_bandwidth(&self, distance: f64) -> f64 {
        PI * self.width() * distance
    }

    pub fn check_symmetric(&self) -> Result<()> {
        if let Self::Tabulated { f, w } = self {
            let n = f.len();
            let span = f[n - 1] - f[0];
            let peak = w.iter().cloned().fold(0.0, f64::max);
            for i in 0..n {
                if (f[i] + f[n - 1 - i]).abs() > 1e-9 * span
                    || (w[i] - w[n - 1 - i]).abs() > 1e-9 * peak
                {
                    return Err(Error::UnsupportedProfile(
                        "tabulated spectrum is not symmetric about zero detuning".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Frequency rule with weights `W(f_k) Δf_k`.
    pub fn frequency_rule(&self, n: usize) -> Result<FrequencyRule> {
        match self {
            Self::FlatTop { bandwidth } => FrequencyRule::flat_top(
                *bandwidth,
                n,
                crate::quadrature::FrequencyRuleKind::GaussLegendre,
            ),
            Self::Gaussian { fwhm } => {
                let s = gaussian_sigma(*fwhm);
                let (nodes, w) = gauss_legendre_on(n, -8.0 * s, 8.0 * s);
                let weights = nodes.iter().zip(&w).map(|(f, w)| w * self.w(*f)).collect();
                Ok(FrequencyRule { nodes, weights })
            }
            Self::Lorentzian { .. } => Err(Error::UnsupportedProfile(
                "Lorentzian tails give the (1+f)-weighted moments no finite value".into(),
            )),
            Self::Tabulated { f, w } => Ok(FrequencyRule {
                nodes: f.clone(),
                weights: trapezoid_weights(f)
                    .iter()
                    .zip(w)
                    .map(|(t, w)| t * w)
                    .collect(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GenspecBasis {
    #[default]
    AngularSine,
    FourierQuarterWeight,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenspecOptions {
    /// Basis functions per parity.
    pub m_order: usize,
    pub basis: GenspecBasis,
    /// Frequency quadrature nodes for coefficient functions and QFI.
    pub n_quad: usize,
    pub cutoff: f64,
}

impl Default for GenspecOptions {
    fn default() -> Self {
        Self {
            m_order: 24,
            basis: GenspecBasis::AngularSine,
            n_quad: 64,
            cutoff: 1e-12,
        }
    }
}

/// Sample points of the transform variable `x ∈ (-1, 1)` with basis values
/// and quadrature weights, for one parity.
struct BasisSamples {
    x: Vec<f64>,
    /// `values[j][m]` already multiplied by the quadrature weight at `x_j`.
    weighted: Vec<Vec<f64>>,
}

fn quadrature_size(m_order: usize, extent: f64) -> usize {
    4 * m_order + 64 + 8 * extent.ceil() as usize
}

fn basis_samples(basis: GenspecBasis, parity: usize, m_order: usize, extent: f64) -> BasisSamples {
    let nq = quadrature_size(m_order, extent);
    match basis {
        GenspecBasis::AngularSine => {
            let h = PI / nq as f64;
            let norm = (2.0 / PI).sqrt();
            let mut x = Vec::with_capacity(nq);
            let mut weighted = Vec::with_capacity(nq);
            for j in 0..nq {
                let th = (j as f64 + 0.5) * h;
                x.push(th.cos());
                weighted.push(
                    (0..m_order)
                        .map(|m| norm * (((2 * m + parity + 1) as f64) * th).sin() * th.sin() * h)
                        .collect(),
                );
            }
            BasisSamples { x, weighted }
        }
        GenspecBasis::FourierQuarterWeight => {
            let (s, w) = gauss_legendre(nq);
            let mut x = Vec::with_capacity(nq);
            let mut weighted = Vec::with_capacity(nq);
            for (s, w) in s.iter().zip(&w) {
                let xx = (0.5 * PI * s).sin();
                let wx = w * 0.5 * PI * (0.5 * PI * s).cos();
                let q = (1.0 - xx * xx).max(0.0).powf(0.25);
                x.push(xx);
                weighted.push(
                    (0..m_order)
                        .map(|m| {
                            let v = if parity == 0 {
                                let g = if m == 0 { 2f64.sqrt() } else { 1.0 };
                                (PI * m as f64 * xx).cos() / g
                            } else {
                                (PI * (m + 1) as f64 * xx).sin()
                            };
                            v * q * wx
                        })
                        .collect(),
                );
            }
            BasisSamples { x, weighted }
        }
    }
}

fn extent(profile: &SpectrumProfile, distance: f64) -> f64 {
    let support = match profile {
        SpectrumProfile::FlatTop { bandwidth } => *bandwidth,
        SpectrumProfile::Gaussian { fwhm } => 4.0 * fwhm,
        SpectrumProfile::Lorentzian { fwhm } => 4.0 * fwhm,
        SpectrumProfile::Tabulated { f, .. } => f[f.len() - 1] - f[0],
    };
    PI * support * distance
}

fn check_inputs(profile: &SpectrumProfile, distance: f64, m_order: usize) -> Result<()> {
    if !(distance > 0.0 && distance.is_finite()) {
        return Err(invalid(
            "l",
            format!("must be positive and finite, got {distance}"),
        ));
    }
    if m_order < 8 {
        return Err(invalid(
            "M",
            format!("basis order must be at least 8, got {m_order}"),
        ));
    }
    profile.check_symmetric()
}

/// `(M⁺, M⁻)`, each `m_order × m_order` row-major.
pub fn build_genspec_matrices(
    profile: &SpectrumProfile,
    distance: f64,
    m_order: usize,
    basis: GenspecBasis,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_inputs(profile, distance, m_order)?;
    let ext = extent(profile, distance);
    let mut out = Vec::with_capacity(2);
    for parity in 0..2 {
        let s = basis_samples(basis, parity, m_order, ext);
        let nq = s.x.len();
        let mut kern = vec![0.0; nq * nq];
        for a in 0..nq {
            for b in 0..=a {
                let v = profile.w_tilde(distance * (s.x[a] - s.x[b]));
                kern[a * nq + b] = v;
                kern[b * nq + a] = v;
            }
        }
        // KE[a][n] = Σ_b K[a,b] E[b][n]
        let mut ke = vec![0.0; nq * m_order];
        for a in 0..nq {
            for b in 0..nq {
                let k = kern[a * nq + b];
                for (n, e) in s.weighted[b].iter().enumerate() {
                    ke[a * m_order + n] += k * e;
                }
            }
        }
        let mut m = vec![0.0; m_order * m_order];
        for i in 0..m_order {
            for j in 0..=i {
                let v: f64 = (0..nq)
                    .map(|a| s.weighted[a][i] * ke[a * m_order + j])
                    .sum::<f64>()
                    * 2.0
                    / PI;
                m[i * m_order + j] = v;
                m[j * m_order + i] = v;
            }
        }
        out.push(m);
    }
    let minus = out.pop().expect("two parities");
    let plus = out.pop().expect("two parities");
    Ok((plus, minus))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpecSystem {
    /// `+1` for even coefficient functions, `-1` for odd.
    pub parity: i8,
    pub profile: SpectrumProfile,
    pub distance: f64,
    pub basis: GenspecBasis,
    pub m_order: usize,
    /// Eigenvalues, descending.
    pub eigs: Vec<f64>,
    /// Basis coefficients of `d̃(lx)√l`, scaled to squared norm `2/(πλ²l)`.
    pub coeffs: Vec<Vec<f64>>,
}

impl GenSpecSystem {
    /// `d_p(f)` by inverse transform of the basis expansion. Odd-parity
    /// functions carry an overall factor `i` so that they are real.
    pub fn coefficient_function(&self, p: usize, f_nodes: &[f64]) -> Vec<f64> {
        let l = self.distance;
        let parity = if self.parity > 0 { 0 } else { 1 };
        let zmax = f_nodes
            .iter()
            .fold(0.0f64, |m, f| m.max((2.0 * PI * f * l).abs()));
        let s = basis_samples(self.basis, parity, self.m_order, zmax);
        let c = &self.coeffs[p];
        let dt: Vec<f64> = s
            .weighted
            .iter()
            .map(|row| row.iter().zip(c).map(|(e, c)| e * c).sum::<f64>())
            .collect();
        f_nodes
            .iter()
            .map(|&f| {
                let acc: f64 =
                    s.x.iter()
                        .zip(&dt)
                        .map(|(x, d)| {
                            let z = 2.0 * PI * f * l * x;
                            d * if parity == 0 { z.cos() } else { z.sin() }
                        })
                        .sum();
                l.sqrt() * acc
            })
            .collect()
    }
}

/// Solves both parity systems, returning `(even, odd)`.
pub fn solve_genspec(
    profile: &SpectrumProfile,
    distance: f64,
    m_order: usize,
    basis: GenspecBasis,
) -> Result<(GenSpecSystem, GenSpecSystem)> {
    let (mp, mm) = build_genspec_matrices(profile, distance, m_order, basis)?;
    let mut out = Vec::with_capacity(2);
    for (parity, m) in [(1i8, mp), (-1i8, mm)] {
        let e = jacobi_eigen(&m, m_order)?;
        let coeffs = e
            .values
            .iter()
            .zip(&e.vectors)
            .map(|(&lam, v)| {
                let s = if lam > 0.0 {
                    (2.0 / (PI * lam * lam * distance)).sqrt()
                } else {
                    0.0
                };
                v.iter().map(|x| x * s).collect()
            })
            .collect();
        out.push(GenSpecSystem {
            parity,
            profile: profile.clone(),
            distance,
            basis,
            m_order,
            eigs: e.values,
            coeffs,
        });
    }
    let odd = out.pop().expect("two parities");
    let even = out.pop().expect("two parities");
    Ok((even, odd))
}

fn genspec_states(
    profile: &SpectrumProfile,
    distance: f64,
    opts: &GenspecOptions,
    rule: &FrequencyRule,
) -> Result<(Vec<Eigenstate>, Vec<Eigenstate>)> {
    let (even, odd) = solve_genspec(profile, distance, opts.m_order, opts.basis)?;
    let lmax = even
        .eigs
        .iter()
        .chain(&odd.eigs)
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    if !(lmax > 0.0) {
        return Err(Error::EmptySpectrum {
            cutoff: opts.cutoff,
        });
    }
    let mut all: Vec<(f64, &GenSpecSystem, usize)> = Vec::new();
    for sys in [&even, &odd] {
        for (p, &lam) in sys.eigs.iter().enumerate() {
            if lam >= 0.5 * opts.cutoff * lmax {
                all.push((lam, sys, p));
            }
        }
    }
    all.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut kept = Vec::new();
    let mut reserve = Vec::new();
    for (lam, sys, p) in all {
        let mut coeff = sys.coefficient_function(p, &rule.nodes);
        let moment = if sys.parity > 0 {
            rule.integrate_values(&coeff, |_| 1.0)
        } else {
            rule.integrate_values(&coeff, |f| f)
        };
        if moment < 0.0 {
            coeff.iter_mut().for_each(|x| *x = -*x);
        }
        let state = Eigenstate {
            eigenvalue: lam,
            t_vector: sys.coeffs[p].clone(),
            coeff,
        };
        if lam >= opts.cutoff * lmax {
            kept.push(state);
        } else {
            reserve.push(state);
        }
    }
    Ok((kept, reserve))
}

/// Eigenstates of the general-spectrum problem with coefficient functions
/// on the profile's frequency rule, eigenvalue descending.
pub fn genspec_eigenstates(
    profile: &SpectrumProfile,
    distance: f64,
    opts: &GenspecOptions,
) -> Result<(FrequencyRule, Vec<Eigenstate>)> {
    let rule = profile.frequency_rule(opts.n_quad)?;
    let (kept, _) = genspec_states(profile, distance, opts, &rule)?;
    Ok((rule, kept))
}

/// Localization QFI for a general symmetric spectrum. The convergence
/// report includes the shift from doubling both the basis order and the
/// frequency quadrature.
pub fn qfi_general(
    profile: &SpectrumProfile,
    distance: f64,
    opts: &GenspecOptions,
) -> Result<FisherResult> {
    let mut r = qfi_general_unchecked(profile, distance, opts)?;
    let fine = GenspecOptions {
        m_order: 2 * opts.m_order,
        n_quad: 2 * opts.n_quad,
        ..*opts
    };
    let v2 = qfi_general_unchecked(profile, distance, &fine)?.value;
    r.convergence = Convergence::new(
        r.convergence.cutoff_shift,
        Some((v2 - r.value).abs() / r.value.abs()),
    );
    Ok(r)
}

fn qfi_general_unchecked(
    profile: &SpectrumProfile,
    distance: f64,
    opts: &GenspecOptions,
) -> Result<FisherResult> {
    let rule = profile.frequency_rule(opts.n_quad)?;
    let (kept, reserve) = genspec_states(profile, distance, opts, &rule)?;
    let (value, diag, cross) = qfi_from_eigenstates(&rule, distance, &kept)?;
    let cutoff_shift = if reserve.is_empty() {
        0.0
    } else {
        let all: Vec<Eigenstate> = kept.iter().chain(&reserve).cloned().collect();
        let v2 = qfi_from_eigenstates(&rule, distance, &all)?.0;
        (v2 - value).abs() / value.abs()
    };
    Ok(FisherResult {
        problem: ProblemKind::GeneralSpectrum,
        bandwidth: profile.width(),
        distance,
        value,
        diagonal_sum: diag,
        cross_sum: cross,
        retained: kept.len(),
        convergence: Convergence::new(cutoff_shift, None),
        notes: Vec::new(),
    })
}
