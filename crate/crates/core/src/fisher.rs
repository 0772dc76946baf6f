//! Quantum Fisher information from the density-operator eigensystems.
//!
//! For eigenvalues `λ_i`, matrix elements `D_ij = ⟨λ_i|∂ρ|λ_j⟩` and diagonal
//! elements `S_i = ⟨λ_i|(∂ρ)²|λ_i⟩`, the QFI restricted to the support of `ρ`
//! is
//!
//! ```text
//! H = Σ_i (4 S_i - 3 D_ii²) / λ_i
//!   + 2 Σ_{i≠j} [1/(λ_i+λ_j) - 1/λ_i - 1/λ_j] D_ij²
//! ```
//!
//! Both `D` and `S` are assembled in frequency space from the coefficient
//! functions and the pupil kernels `O`, `P`, `Q`. The pair problem reuses the
//! single-source machinery in each subspace with the symmetrized kernels
//! `O(f-f') ± O(2+f+f')`, `P(f-f') ± P(2+f+f')`, `Q(f-f') ∓ Q(2+f+f')`.

use crate::error::{invalid, Error, Result};
use crate::quadrature::FrequencyRule;
use crate::spdo_loc::{solve_loc, Eigenstate, SolveOptions, SpdoEigensystem};
use crate::spdo_pair::{solve_pair, PairSubspaceSystem};
use crate::specfun::KernelTriple;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Localization,
    Pair,
    GeneralSpectrum,
    ZernikeCfi,
}

/// Sensitivity of a Fisher information value to its numerical settings, as
/// relative shifts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convergence {
    /// Shift from halving the eigenvalue cutoff.
    pub cutoff_shift: f64,
    /// Shift from doubling the frequency quadrature (and, for general
    /// spectra, the basis order), when computed.
    pub grid_shift: Option<f64>,
    pub converged: bool,
}

impl Convergence {
    pub const TOLERANCE: f64 = 1e-6;

    pub fn new(cutoff_shift: f64, grid_shift: Option<f64>) -> Self {
        let converged =
            cutoff_shift <= Self::TOLERANCE && grid_shift.map_or(true, |g| g <= Self::TOLERANCE);
        Self {
            cutoff_shift,
            grid_shift,
            converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FisherResult {
    pub problem: ProblemKind,
    pub bandwidth: f64,
    pub distance: f64,
    pub value: f64,
    pub diagonal_sum: f64,
    pub cross_sum: f64,
    pub retained: usize,
    pub convergence: Convergence,
    pub notes: Vec<String>,
}

impl FisherResult {
    /// Fisher information for `photons` independent detections.
    pub fn scaled(&self, photons: u64) -> Result<f64> {
        qfi_scaled(self.value, photons)
    }

    /// Cramér–Rao lower bound on the standard deviation for `photons`
    /// detections.
    pub fn min_std_dev(&self, photons: u64) -> Result<f64> {
        min_std_dev(self.value, photons)
    }
}

pub fn qfi_scaled(value: f64, photons: u64) -> Result<f64> {
    if photons < 1 {
        return Err(invalid("photons", "at least one photon is required"));
    }
    Ok(photons as f64 * value)
}

pub fn min_std_dev(value: f64, photons: u64) -> Result<f64> {
    if !(value > 0.0) {
        return Err(invalid("value", "Fisher information must be positive"));
    }
    Ok(1.0 / qfi_scaled(value, photons)?.sqrt())
}

/// Eigen-formula for the QFI from `λ_i`, the `r × r` matrix `D_ij`
/// (row-major) and `S_i`. Returns `(value, diagonal_sum, cross_sum)`.
pub fn qfi_eigen_formula(eigs: &[f64], d: &[f64], s: &[f64]) -> (f64, f64, f64) {
    let r = eigs.len();
    let mut diag = 0.0;
    let mut cross = 0.0;
    for i in 0..r {
        let dii = d[i * r + i];
        diag += (4.0 * s[i] - 3.0 * dii * dii) / eigs[i];
        for j in 0..r {
            if i != j {
                let (li, lj) = (eigs[i], eigs[j]);
                let dij = d[i * r + j];
                cross += 2.0 * (1.0 / (li + lj) - 1.0 / li - 1.0 / lj) * dij * dij;
            }
        }
    }
    (diag + cross, diag, cross)
}

/// Kernel matrices over the rule nodes: `o[a,b]`, `p[a,b]`, `q[a,b]`, with
/// `⟨K_b|∂K_a⟩ = (1+f_a) p[a,b]` and `⟨∂K_a|∂K_b⟩ = (1+f_a)(1+f_b) q[a,b]`.
struct KernelMatrices {
    o: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
}

impl KernelMatrices {
    /// `pair_sign = None` for a single source, `Some(±1)` for a pair subspace.
    fn new(nodes: &[f64], distance: f64, pair_sign: Option<f64>) -> Result<Self> {
        let k = KernelTriple::new(distance)?;
        let n = nodes.len();
        let mut o = vec![0.0; n * n];
        let mut p = vec![0.0; n * n];
        let mut q = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                let (mut ko, mut kp, mut kq) = k.opq(nodes[a] - nodes[b]);
                if let Some(s) = pair_sign {
                    let (xo, xp, xq) = k.opq(2.0 + nodes[a] + nodes[b]);
                    ko += s * xo;
                    kp += s * xp;
                    kq -= s * xq;
                }
                o[a * n + b] = ko;
                p[a * n + b] = kp;
                q[a * n + b] = kq;
            }
        }
        Ok(Self { o, p, q })
    }
}

/// `D` (r × r) and `S` (r) from eigenvalues and coefficient functions on
/// the rule, with `ρ = Σ_k w_k |K_k⟩⟨K_k|` and `|λ_i⟩ = Σ_k w_k d_i(f_k) |K_k⟩`.
fn matrix_elements(
    nodes: &[f64],
    weights: &[f64],
    kern: &KernelMatrices,
    eigs: &[f64],
    coeffs: &[&[f64]],
) -> (Vec<f64>, Vec<f64>) {
    let n = nodes.len();
    let r = eigs.len();
    let a_fun: Vec<Vec<f64>> = coeffs
        .iter()
        .map(|d| {
            (0..n)
                .map(|a| {
                    (1.0 + nodes[a])
                        * (0..n)
                            .map(|b| weights[b] * kern.p[a * n + b] * d[b])
                            .sum::<f64>()
                })
                .collect()
        })
        .collect();
    let mut dm = vec![0.0; r * r];
    for i in 0..r {
        for j in 0..r {
            dm[i * r + j] = (0..n)
                .map(|a| {
                    weights[a]
                        * (a_fun[i][a] * eigs[j] * coeffs[j][a]
                            + eigs[i] * coeffs[i][a] * a_fun[j][a])
                })
                .sum();
        }
    }
    let s: Vec<f64> = (0..r)
        .map(|i| {
            let (d, af, li) = (coeffs[i], &a_fun[i], eigs[i]);
            let mut acc = 0.0;
            for a in 0..n {
                let mut inner = 0.0;
                for b in 0..n {
                    let k = a * n + b;
                    inner += weights[b]
                        * (li * li * (1.0 + nodes[a]) * (1.0 + nodes[b]) * kern.q[k] * d[a] * d[b]
                            + 2.0 * li * (1.0 + nodes[a]) * d[a] * kern.p[k] * af[b]
                            + kern.o[k] * af[a] * af[b]);
                }
                acc += weights[a] * inner;
            }
            acc
        })
        .collect();
    (dm, s)
}

fn formula_on(
    rule: &FrequencyRule,
    weight_scale: f64,
    kern: &KernelMatrices,
    states: &[&Eigenstate],
    coeff_scale: f64,
) -> (f64, f64, f64) {
    let weights: Vec<f64> = rule.weights.iter().map(|w| w * weight_scale).collect();
    let eigs: Vec<f64> = states.iter().map(|s| s.eigenvalue).collect();
    let scaled: Vec<Vec<f64>> = states
        .iter()
        .map(|s| s.coeff.iter().map(|x| x * coeff_scale).collect())
        .collect();
    let refs: Vec<&[f64]> = scaled.iter().map(|v| v.as_slice()).collect();
    let (d, s) = matrix_elements(&rule.nodes, &weights, kern, &eigs, &refs);
    qfi_eigen_formula(&eigs, &d, &s)
}

/// QFI for a single source from eigenstates normalized as
/// `λ_q Σ_k w_k d_p d_q = δ_pq` on `rule`.
pub fn qfi_from_eigenstates(
    rule: &FrequencyRule,
    distance: f64,
    states: &[Eigenstate],
) -> Result<(f64, f64, f64)> {
    let kern = KernelMatrices::new(&rule.nodes, distance, None)?;
    let refs: Vec<&Eigenstate> = states.iter().collect();
    Ok(formula_on(rule, 1.0, &kern, &refs, 1.0))
}

/// `(D, S)` for the retained localization states, `D` row-major.
pub fn localization_matrix_elements(sys: &SpdoEigensystem) -> Result<(Vec<f64>, Vec<f64>)> {
    let kern = KernelMatrices::new(&sys.rule.nodes, sys.distance, None)?;
    let eigs: Vec<f64> = sys.states.iter().map(|s| s.eigenvalue).collect();
    let refs: Vec<&[f64]> = sys.states.iter().map(|s| s.coeff.as_slice()).collect();
    Ok(matrix_elements(
        &sys.rule.nodes,
        &sys.rule.weights,
        &kern,
        &eigs,
        &refs,
    ))
}

/// `(D, S)` for the retained states of one pair subspace, `D` row-major.
pub fn pair_matrix_elements(sys: &PairSubspaceSystem) -> Result<(Vec<f64>, Vec<f64>)> {
    let kern = KernelMatrices::new(&sys.rule.nodes, sys.distance, Some(sys.sign as f64))?;
    let weights: Vec<f64> = sys.rule.weights.iter().map(|w| w * PAIR_WEIGHT).collect();
    let eigs: Vec<f64> = sys.states.iter().map(|s| s.eigenvalue).collect();
    let scaled: Vec<Vec<f64>> = sys
        .states
        .iter()
        .map(|s| s.coeff.iter().map(|x| x * PAIR_COEFF).collect())
        .collect();
    let refs: Vec<&[f64]> = scaled.iter().map(|v| v.as_slice()).collect();
    Ok(matrix_elements(
        &sys.rule.nodes,
        &weights,
        &kern,
        &eigs,
        &refs,
    ))
}

fn degenerate_notes(pairs: &[(usize, usize)]) -> Vec<String> {
    pairs
        .iter()
        .map(|(i, j)| format!("eigenvalues {i} and {j} nearly degenerate"))
        .collect()
}

fn relative_shift(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(f64::MIN_POSITIVE)
}

pub fn qfi_localization(sys: &SpdoEigensystem) -> Result<FisherResult> {
    let kern = KernelMatrices::new(&sys.rule.nodes, sys.distance, None)?;
    let kept: Vec<&Eigenstate> = sys.states.iter().collect();
    let (value, diag, cross) = formula_on(&sys.rule, 1.0, &kern, &kept, 1.0);
    let cutoff_shift = if sys.reserve.is_empty() {
        0.0
    } else {
        let all: Vec<&Eigenstate> = sys.states.iter().chain(&sys.reserve).collect();
        relative_shift(value, formula_on(&sys.rule, 1.0, &kern, &all, 1.0).0)
    };
    Ok(FisherResult {
        problem: ProblemKind::Localization,
        bandwidth: sys.bandwidth,
        distance: sys.distance,
        value,
        diagonal_sum: diag,
        cross_sum: cross,
        retained: kept.len(),
        convergence: Convergence::new(cutoff_shift, None),
        notes: degenerate_notes(&sys.degenerate),
    })
}

fn check_pair(plus: &PairSubspaceSystem, minus: &PairSubspaceSystem) -> Result<()> {
    if plus.sign != 1 || minus.sign != -1 {
        return Err(Error::Mismatch(
            "expected (symmetric, antisymmetric) subspaces".into(),
        ));
    }
    if plus.bandwidth != minus.bandwidth
        || plus.distance != minus.distance
        || plus.rule != minus.rule
    {
        return Err(Error::Mismatch(
            "subspaces solved at different (B, l) or grids".into(),
        ));
    }
    Ok(())
}

// Each subspace is a single-source problem for the normalized states
// (Φ_+ ± Φ_-)/√2 with half the spectral weight; its coefficient functions are
// 2√2 times the pair-normalized ones.
const PAIR_WEIGHT: f64 = 0.5;
const PAIR_COEFF: f64 = 2.0 * std::f64::consts::SQRT_2;

pub fn qfi_pair(plus: &PairSubspaceSystem, minus: &PairSubspaceSystem) -> Result<FisherResult> {
    check_pair(plus, minus)?;
    let mut value = 0.0;
    let mut with_reserve = 0.0;
    let mut diag = 0.0;
    let mut cross = 0.0;
    let mut retained = 0;
    for sys in [plus, minus] {
        if sys.states.is_empty() {
            continue;
        }
        let kern = KernelMatrices::new(&sys.rule.nodes, sys.distance, Some(sys.sign as f64))?;
        let kept: Vec<&Eigenstate> = sys.states.iter().collect();
        let (v, d, c) = formula_on(&sys.rule, PAIR_WEIGHT, &kern, &kept, PAIR_COEFF);
        value += v;
        diag += d;
        cross += c;
        retained += kept.len();
        with_reserve += if sys.reserve.is_empty() {
            v
        } else {
            let all: Vec<&Eigenstate> = sys.states.iter().chain(&sys.reserve).collect();
            formula_on(&sys.rule, PAIR_WEIGHT, &kern, &all, PAIR_COEFF).0
        };
    }
    Ok(FisherResult {
        problem: ProblemKind::Pair,
        bandwidth: plus.bandwidth,
        distance: plus.distance,
        value,
        diagonal_sum: diag,
        cross_sum: cross,
        retained,
        convergence: Convergence::new(relative_shift(value, with_reserve), None),
        notes: [plus, minus]
            .iter()
            .flat_map(|s| degenerate_notes(&s.degenerate))
            .collect(),
    })
}

fn doubled(opts: &SolveOptions) -> SolveOptions {
    SolveOptions {
        n_quad: 2 * opts.n_quad,
        ..*opts
    }
}

/// Localization QFI with both cutoff-halving and frequency-grid-doubling
/// checks in the convergence report.
pub fn qfi_localization_checked(
    bandwidth: f64,
    distance: f64,
    opts: &SolveOptions,
) -> Result<FisherResult> {
    let mut r = qfi_localization(&solve_loc(bandwidth, distance, opts)?)?;
    if bandwidth > 0.0 {
        let fine = qfi_localization(&solve_loc(bandwidth, distance, &doubled(opts))?)?;
        r.convergence = Convergence::new(
            r.convergence.cutoff_shift,
            Some(relative_shift(r.value, fine.value)),
        );
    }
    Ok(r)
}

/// Pair QFI with both cutoff-halving and frequency-grid-doubling checks.
pub fn qfi_pair_checked(
    bandwidth: f64,
    distance: f64,
    opts: &SolveOptions,
) -> Result<FisherResult> {
    let (p, m) = solve_pair(bandwidth, distance, opts)?;
    let mut r = qfi_pair(&p, &m)?;
    if bandwidth > 0.0 {
        let (p, m) = solve_pair(bandwidth, distance, &doubled(opts))?;
        let fine = qfi_pair(&p, &m)?;
        r.convergence = Convergence::new(
            r.convergence.cutoff_shift,
            Some(relative_shift(r.value, fine.value)),
        );
    }
    Ok(r)
}

/// Largest `|⟨λ_j^-|∂ρ|λ_i^+⟩|` between the two pair subspaces, evaluated
/// from the single-source overlaps without using the subspace symmetry.
pub fn pair_cross_elements(plus: &PairSubspaceSystem, minus: &PairSubspaceSystem) -> Result<f64> {
    check_pair(plus, minus)?;
    let mut worst = 0.0f64;
    for i in &plus.states {
        for j in &minus.states {
            worst = worst.max(pair_drho_element(plus, i, 1.0, j, -1.0)?.abs());
        }
    }
    Ok(worst)
}

/// `⟨j|∂ρ|i⟩` for pair states `|i⟩ = Σ_b w_b d_i(f_b)(|K_{+b}⟩ + π_i|K_{-b}⟩)`,
/// built directly from the overlaps of the two single-source families.
pub fn pair_drho_element(
    sys: &PairSubspaceSystem,
    i: &Eigenstate,
    pi_i: f64,
    j: &Eigenstate,
    pi_j: f64,
) -> Result<f64> {
    let k = KernelTriple::new(sys.distance)?;
    let nodes = &sys.rule.nodes;
    let w = &sys.rule.weights;
    let n = nodes.len();
    // ⟨K_{τ b}|K_{σ a}⟩ and ⟨K_{τ b}|∂K_{σ a}⟩ for τ = σ (same) or τ ≠ σ (other)
    let mut o_same = vec![0.0; n * n];
    let mut o_other = vec![0.0; n * n];
    let mut p_same = vec![0.0; n * n];
    let mut p_other = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            let (o, p, _) = k.opq(nodes[a] - nodes[b]);
            let (xo, xp, _) = k.opq(2.0 + nodes[a] + nodes[b]);
            o_same[a * n + b] = o;
            o_other[a * n + b] = xo;
            p_same[a * n + b] = (1.0 + nodes[a]) * p;
            p_other[a * n + b] = (1.0 + nodes[a]) * xp;
        }
    }
    // overlaps of a state with K_{σ a} and ∂K_{σ a}, for σ = + and σ = -
    let project = |st: &Eigenstate, pi: f64, same: &[f64], other: &[f64], sigma: f64| -> Vec<f64> {
        (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| {
                        let (to_plus, to_minus) = if sigma > 0.0 {
                            (same[a * n + b], other[a * n + b])
                        } else {
                            (other[a * n + b], same[a * n + b])
                        };
                        w[b] * st.coeff[b] * (to_plus + pi * to_minus)
                    })
                    .sum()
            })
            .collect()
    };
    let mut total = 0.0;
    for sigma in [1.0, -1.0] {
        let ki = project(i, pi_i, &o_same, &o_other, sigma);
        let kj = project(j, pi_j, &o_same, &o_other, sigma);
        let dki = project(i, pi_i, &p_same, &p_other, sigma);
        let dkj = project(j, pi_j, &p_same, &p_other, sigma);
        for a in 0..n {
            total += 0.5 * w[a] * (dkj[a] * ki[a] + kj[a] * dki[a]);
        }
    }
    Ok(total)
}
