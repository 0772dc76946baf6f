//! Quadrature rules: Gauss–Legendre, Gauss–Chebyshev of the second kind,
//! adaptive Gauss–Kronrod, and frequency rules over a spectral band.

use crate::error::{invalid, Error, Result};
use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    if n == 0 {
        return (x, w);
    }
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() <= 1e-16 * z.abs().max(1e-300) {
                dp = legendre_with_derivative(n, z).1;
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let h = 0.5 * (b - a);
    let c = 0.5 * (b + a);
    (
        x.iter().map(|t| c + h * t).collect(),
        w.iter().map(|t| h * t).collect(),
    )
}

/// Gauss–Chebyshev rule of the second kind: `Σ w_j g(x_j) ≈ ∫ √(1-x²) g(x) dx`
/// over [-1, 1].
pub fn gauss_chebyshev_u(n: usize) -> (Vec<f64>, Vec<f64>) {
    let h = PI / (n as f64 + 1.0);
    (1..=n)
        .map(|j| {
            let t = j as f64 * h;
            let s = t.sin();
            (t.cos(), h * s * s)
        })
        .unzip()
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = WGK[7] * fc;
    let mut rg = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

/// Globally adaptive 7/15-point Gauss–Kronrod integration of `f` over [a, b].
///
/// Subdivides the interval with the largest error estimate until the total
/// estimate is below `max(abs_tol, rel_tol·|I|)`.
pub fn integrate_adaptive(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Integral> {
    const MAX_INTERVALS: usize = 2000;
    if !(a.is_finite() && b.is_finite()) {
        return Err(invalid("interval", "endpoints must be finite"));
    }
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            intervals: 0,
        });
    }
    let (v, e) = kronrod15(&f, a, b);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(Integral {
                value: total,
                error: err,
                intervals: parts.len(),
            });
        }
        if parts.len() >= MAX_INTERVALS {
            return Err(Error::NonConvergence {
                routine: "adaptive Gauss-Kronrod",
                iterations: parts.len(),
            });
        }
        let (idx, _) =
            parts.iter().enumerate().fold(
                (0, -1.0),
                |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc },
            );
        let (pa, pb, _, _) = parts.swap_remove(idx);
        let m = 0.5 * (pa + pb);
        let (v1, e1) = kronrod15(&f, pa, m);
        let (v2, e2) = kronrod15(&f, m, pb);
        parts.push((pa, m, v1, e1));
        parts.push((m, pb, v2, e2));
    }
}

/// How frequencies across a band are discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyRuleKind {
    GaussLegendre,
    /// Midpoint Riemann sum.
    Riemann,
}

/// Quadrature over relative frequency. Weights already include the spectral
/// density, so `Σ_k weights[k]` is the total power (1 for a normalized
/// spectrum) and `Σ_k weights[k] g(nodes[k]) ≈ ∫ W(f) g(f) df`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl FrequencyRule {
    /// Uniform (flat-top) spectrum of fractional width `bandwidth`, with `n`
    /// nodes. A zero bandwidth gives the single monochromatic node.
    pub fn flat_top(bandwidth: f64, n: usize, kind: FrequencyRuleKind) -> Result<Self> {
        if !(bandwidth >= 0.0 && bandwidth.is_finite()) {
            return Err(invalid(
                "bandwidth",
                format!("must be >= 0, got {bandwidth}"),
            ));
        }
        if n == 0 {
            return Err(invalid("n_quad", "must be positive"));
        }
        if bandwidth == 0.0 {
            return Ok(Self {
                nodes: vec![0.0],
                weights: vec![1.0],
            });
        }
        let half = 0.5 * bandwidth;
        let (nodes, weights) = match kind {
            FrequencyRuleKind::GaussLegendre => {
                let (x, w) = gauss_legendre(n);
                (
                    x.iter().map(|t| half * t).collect(),
                    w.iter().map(|t| 0.5 * t).collect(),
                )
            }
            FrequencyRuleKind::Riemann => (
                (0..n)
                    .map(|k| -half + bandwidth * (k as f64 + 0.5) / n as f64)
                    .collect(),
                vec![1.0 / n as f64; n],
            ),
        };
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ w_k g(f_k)`.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&f, &w)| w * g(f))
            .sum()
    }

    /// `Σ w_k v_k g(f_k)` for values `v` sampled on the nodes.
    pub fn integrate_values(&self, v: &[f64], g: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .zip(v)
            .map(|((&f, &w), &v)| w * v * g(f))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 16, 64, 200] {
            let (x, w) = gauss_legendre(n);
            for k in 0..(2 * n).min(40) {
                let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                let exact = if k % 2 == 1 {
                    0.0
                } else {
                    2.0 / (k as f64 + 1.0)
                };
                assert!((s - exact).abs() < 1e-13, "n={n} k={k} {s} {exact}");
            }
        }
    }

    #[test]
    fn chebyshev_u_weight() {
        let (x, w) = gauss_chebyshev_u(40);
        let s: f64 = w.iter().sum();
        assert!((s - PI / 2.0).abs() < 1e-14);
        let s2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        assert!((s2 - PI / 8.0).abs() < 1e-14);
    }

    #[test]
    fn kronrod_adaptive() {
        let r = integrate_adaptive(|x| x.exp(), 0.0, 1.0, 1e-14, 0.0).unwrap();
        assert!((r.value - (1f64.exp() - 1.0)).abs() < 1e-14);
        let r = integrate_adaptive(|x| x.sqrt(), 0.0, 1.0, 1e-12, 0.0).unwrap();
        assert!((r.value - 2.0 / 3.0).abs() < 1e-12);
        for k in 0..=22 {
            let (v, _) = kronrod15(&|x: f64| x.powi(k), -1.0, 1.0);
            let exact = if k % 2 == 1 {
                0.0
            } else {
                2.0 / (k as f64 + 1.0)
            };
            assert!((v - exact).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn flat_top_rules_are_normalized() {
        for kind in [FrequencyRuleKind::GaussLegendre, FrequencyRuleKind::Riemann] {
            let r = FrequencyRule::flat_top(0.1, 33, kind).unwrap();
            assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            let m2 = r.integrate(|f| f * f);
            let tol = if kind == FrequencyRuleKind::Riemann {
                1e-6
            } else {
                1e-16
            };
            assert!((m2 - 0.01 / 12.0).abs() < tol);
        }
        assert_eq!(
            FrequencyRule::flat_top(0.0, 64, FrequencyRuleKind::GaussLegendre)
                .unwrap()
                .len(),
            1
        );
        assert!(FrequencyRule::flat_top(-0.1, 8, FrequencyRuleKind::Riemann).is_err());
    }
}
