//! Eigendecomposition of the density operator for a symmetric pair of
//! equally bright sources at `±l` sharing a flat-top spectrum.
//!
//! The operator splits into two invariant subspaces, spanned by the sum and
//! the difference of the single-source states. In the PSWF basis each
//! subspace is the real symmetric matrix `F̃ ± G̃` with
//!
//! ```text
//! F_mn = (1/C) √(λ_m λ_n) ∫ √(1-x²) ψ_m ψ_n dx
//! G_mn = (1/C) √(λ_m λ_n) ∫ √(1-x²) e^{4πilx} ψ_m ψ_n dx
//! F̃_mn = i^{n-m} F_mn,   G̃_mn = i^{n+m} G_mn
//! ```
//!
//! Coefficient functions `d(f)` are normalized as `4λ Σ_k w_k d(f_k)² = 1`.

use crate::error::{Error, Result};
use crate::linalg::jacobi_eigen;
use crate::pswf::{self_fourier_map, PswfBasis};
use crate::quadrature::FrequencyRule;
use crate::spdo_loc::{check_band, find_degenerate, Eigenstate, SolveOptions};
use crate::specfun::KernelTriple;
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct PairSubspaceSystem {
    /// `+1` for the symmetric subspace, `-1` for the antisymmetric one.
    pub sign: i8,
    pub bandwidth: f64,
    pub distance: f64,
    pub cutoff: f64,
    pub states: Vec<Eigenstate>,
    pub reserve: Vec<Eigenstate>,
    /// Full spectrum of this subspace's truncated matrix.
    pub all_eigs: Vec<f64>,
    pub rule: FrequencyRule,
    pub degenerate: Vec<(usize, usize)>,
}

impl PairSubspaceSystem {
    pub fn eigs(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.eigenvalue).collect()
    }

    pub fn trace(&self) -> f64 {
        self.all_eigs.iter().sum()
    }
}

/// `(F̃, G̃)` as real row-major matrices for a basis built at `C = πBl`.
pub fn build_pair_matrices(basis: &PswfBasis, distance: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = basis.len();
    let c = basis.c;
    let (f_re, _) = basis.weighted_overlaps(0.0);
    let (g_re, g_im) = basis.weighted_overlaps(4.0 * PI * distance);
    let mut ft = vec![0.0; n * n];
    let mut gt = vec![0.0; n * n];
    let mut residue = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            let s = (basis.conc_eigs[a] * basis.conc_eigs[b]).sqrt() / c;
            let k = a * n + b;
            if (a + b) % 2 == 0 {
                let phase = if ((b as isize - a as isize).rem_euclid(4)) == 0 {
                    1.0
                } else {
                    -1.0
                };
                ft[k] = phase * s * f_re[k];
                let phase = if ((a + b) / 2) % 2 == 0 { 1.0 } else { -1.0 };
                gt[k] = phase * s * g_re[k];
                residue = residue.max((s * g_im[k]).abs());
            } else {
                // i^{a+b} · i Im G is real
                let phase = if ((a + b + 1) / 2) % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                gt[k] = phase * s * g_im[k];
                residue = residue.max((s * g_re[k]).abs());
            }
        }
    }
    if residue > 1e-10 {
        return Err(Error::ImaginaryResidue(residue));
    }
    Ok((ft, gt))
}

/// Solves both pair subspaces at bandwidth `B` and half-separation `l`,
/// returning `(symmetric, antisymmetric)`. `B = 0` gives the monochromatic
/// rank-two system.
pub fn solve_pair(
    bandwidth: f64,
    distance: f64,
    opts: &SolveOptions,
) -> Result<(PairSubspaceSystem, PairSubspaceSystem)> {
    check_band(bandwidth, distance)?;
    opts.validate()?;
    let rule = FrequencyRule::flat_top(bandwidth, opts.n_quad, opts.freq_rule)?;
    let spectra: Vec<(i8, Vec<(f64, Vec<f64>)>)>;
    let sfm;
    if bandwidth == 0.0 {
        let o2 = KernelTriple::new(distance)?.o(2.0);
        spectra = [1i8, -1]
            .into_iter()
            .map(|sign| (sign, vec![(0.5 * (1.0 + sign as f64 * o2), Vec::new())]))
            .collect();
        sfm = None;
    } else {
        let c = PI * bandwidth * distance;
        let (basis, solved) = opts.with_grown_basis(c, |basis| {
            let n = basis.len();
            let (ft, gt) = build_pair_matrices(basis, distance)?;
            let mut out = Vec::with_capacity(2);
            let (mut lmin, mut lmax) = (f64::INFINITY, f64::NEG_INFINITY);
            for sign in [1i8, -1] {
                let a: Vec<f64> = ft
                    .iter()
                    .zip(&gt)
                    .map(|(f, g)| f + sign as f64 * g)
                    .collect();
                let eig = jacobi_eigen(&a, n)?;
                lmin = lmin.min(eig.values.iter().copied().fold(f64::INFINITY, f64::min));
                lmax = lmax.max(eig.values.iter().copied().fold(f64::NEG_INFINITY, f64::max));
                out.push((sign, eig.values.into_iter().zip(eig.vectors).collect()));
            }
            Ok((out, lmin, lmax))
        })?;
        spectra = solved;
        sfm = Some(self_fourier_map(&basis, bandwidth, distance, &rule.nodes)?);
    }
    let lmax = spectra
        .iter()
        .flat_map(|(_, s)| s.iter().map(|p| p.0))
        .fold(f64::NEG_INFINITY, f64::max);
    if !(lmax > 0.0) {
        return Err(Error::EmptySpectrum {
            cutoff: opts.cutoff,
        });
    }

    let make_state = |val: f64, u: &[f64]| -> Eigenstate {
        let (mut t, mut coeff) = match &sfm {
            None => (Vec::new(), vec![0.5 / val.sqrt()]),
            Some(sfm) => {
                let scale = (bandwidth / (distance * val)).sqrt();
                let t: Vec<f64> = u.iter().map(|x| x * scale).collect();
                let mut coeff = vec![0.0; rule.len()];
                for (tn, row) in t.iter().zip(sfm) {
                    for (cf, v) in coeff.iter_mut().zip(row) {
                        *cf += 0.5 * tn * v;
                    }
                }
                (t, coeff)
            }
        };
        let mean = rule.integrate_values(&coeff, |_| 1.0);
        let scale = coeff.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let moment = if mean.abs() > 1e-8 * scale {
            mean
        } else {
            rule.integrate_values(&coeff, |f| f)
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

    let mut out = Vec::with_capacity(2);
    for (sign, mut pairs) in spectra {
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let all_eigs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let mut states = Vec::new();
        let mut reserve = Vec::new();
        for (val, u) in &pairs {
            if *val >= opts.cutoff * lmax {
                states.push(make_state(*val, u));
            } else if *val >= 0.5 * opts.cutoff * lmax {
                reserve.push(make_state(*val, u));
            }
        }
        let degenerate = find_degenerate(&all_eigs[..states.len()], lmax);
        out.push(PairSubspaceSystem {
            sign,
            bandwidth,
            distance,
            cutoff: opts.cutoff,
            states,
            reserve,
            all_eigs,
            rule: rule.clone(),
            degenerate,
        });
    }
    let minus = out.pop().expect("two subspaces");
    let plus = out.pop().expect("two subspaces");
    Ok((plus, minus))
}
