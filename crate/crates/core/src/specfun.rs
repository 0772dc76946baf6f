//! Bessel functions of the first kind and the pupil overlap kernels.
//!
//! For a circular pupil the overlap of two single-frequency point-spread
//! states, and of their derivatives with respect to source position, reduce
//! to three radial kernels of the detuning `x` at separation `l`, with
//! `z = 2πxl`:
//!
//! ```text
//! O(x) = 2 J1(z) / z
//! P(x) = -4π J2(z) / z
//! Q(x) = (8π²/z²)(J0(z) - 2 J1(z)/z) + (4π²/z)(J1(z) - J3(z))
//! ```
//!
//! `O` and `Q` are even in `x`, `P` is odd. Near `z = 0` all three are
//! evaluated from their power series.

use crate::error::{invalid, Error, Result};
use std::f64::consts::PI;

const SERIES_RADIUS: f64 = 2.0;
const ASYMPTOTIC_RADIUS: f64 = 1500.0;

/// `J_n(z)` for integer order `0 <= n <= 3` and finite real `z`.
pub fn bessel_j(n: u32, z: f64) -> Result<f64> {
    if n > 3 {
        return Err(Error::Domain(format!(
            "Bessel order {n} not supported (0..=3)"
        )));
    }
    if !z.is_finite() {
        return Err(Error::Domain(format!("Bessel argument {z} is not finite")));
    }
    Ok(bessel_j0123(z)[n as usize])
}

/// `[J0(z), J1(z), J2(z), J3(z)]` for finite `z`.
pub fn bessel_j0123(z: f64) -> [f64; 4] {
    let a = z.abs();
    let mut out = if a < SERIES_RADIUS {
        [series(0, a), series(1, a), series(2, a), series(3, a)]
    } else if a < ASYMPTOTIC_RADIUS {
        miller(a)
    } else {
        hankel(a)
    };
    if z < 0.0 {
        out[1] = -out[1];
        out[3] = -out[3];
    }
    out
}

fn series(n: u32, z: f64) -> f64 {
    let h = 0.5 * z;
    let h2 = h * h;
    let mut term = 1.0;
    for k in 1..=n {
        term *= h / k as f64;
    }
    let mut sum = term;
    for k in 1..60 {
        term *= -h2 / (k as f64 * (k + n as usize) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn miller(z: f64) -> [f64; 4] {
    let start = (z + 30.0 + 12.0 * z.cbrt()) as usize;
    let start = start + start % 2;
    let mut jp1 = 0.0;
    let mut j = 1e-300;
    let mut low = [0.0f64; 4];
    let mut norm = 0.0;
    let two_over_z = 2.0 / z;
    for k in (1..=start).rev() {
        let jm1 = k as f64 * two_over_z * j - jp1;
        jp1 = j;
        j = jm1;
        let order = k - 1;
        if order % 2 == 0 && order > 0 {
            norm += 2.0 * j;
        }
        if order <= 3 {
            low[order] = j;
        }
        if j.abs() > 1e250 {
            let s = 1e-250;
            j *= s;
            jp1 *= s;
            norm *= s;
            for v in &mut low {
                *v *= s;
            }
        }
    }
    norm += low[0];
    [low[0] / norm, low[1] / norm, low[2] / norm, low[3] / norm]
}

fn hankel(z: f64) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (n, o) in out.iter_mut().enumerate() {
        let mu = 4.0 * (n * n) as f64;
        let mut p = 1.0;
        let mut q = 0.0;
        let mut term = 1.0;
        for k in 1..12 {
            let kf = k as f64;
            term *= (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * z);
            if k % 2 == 1 {
                q += if (k / 2) % 2 == 0 { term } else { -term };
            } else {
                p += if (k / 2) % 2 == 0 { term } else { -term };
            }
        }
        let chi = z - (0.5 * n as f64 + 0.25) * PI;
        *o = (2.0 / (PI * z)).sqrt() * (p * chi.cos() - q * chi.sin());
    }
    out
}

/// The three pupil kernels at a fixed source separation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelTriple {
    pub distance: f64,
    /// Below this `|z|` the kernels use their power series.
    pub switch_radius: f64,
}

/// Default `|z|` below which the kernels are summed as power series.
pub const DEFAULT_SWITCH_RADIUS: f64 = 1.0;

impl KernelTriple {
    pub fn new(distance: f64) -> Result<Self> {
        if !(distance > 0.0 && distance.is_finite()) {
            return Err(invalid(
                "l",
                format!("separation must be positive and finite, got {distance}"),
            ));
        }
        Ok(Self {
            distance,
            switch_radius: DEFAULT_SWITCH_RADIUS,
        })
    }

    pub fn with_switch_radius(mut self, r: f64) -> Self {
        self.switch_radius = r;
        self
    }

    pub fn o(&self, x: f64) -> f64 {
        self.opq(x).0
    }

    pub fn p(&self, x: f64) -> f64 {
        self.opq(x).1
    }

    pub fn q(&self, x: f64) -> f64 {
        self.opq(x).2
    }

    /// `(O(x), P(x), Q(x))`. `O` and `Q` depend only on `|x|` and
    /// `P(-x) = -P(x)` exactly.
    pub fn opq(&self, x: f64) -> (f64, f64, f64) {
        let z = 2.0 * PI * x.abs() * self.distance;
        let (o, p, q) = if z < self.switch_radius {
            kernel_series(z)
        } else {
            let [j0, j1, j2, j3] = bessel_j0123(z);
            let o = 2.0 * j1 / z;
            let p = -4.0 * PI * j2 / z;
            let q = 8.0 * PI * PI / (z * z) * (j0 - 2.0 * j1 / z) + 4.0 * PI * PI / z * (j1 - j3);
            (o, p, q)
        };
        (o, if x < 0.0 { -p } else { p }, q)
    }
}

/// Power series of `(O, P, Q)` at `z >= 0`.
fn kernel_series(z: f64) -> (f64, f64, f64) {
    let h2 = 0.25 * z * z;
    let mut o = 0.0;
    let mut p = 0.0;
    let mut q = 0.0;
    // t = (-1)^k h2^k / (k!)^2
    let mut t = 1.0;
    for k in 0..40usize {
        let kf = k as f64;
        if k > 0 {
            t *= -h2 / (kf * kf);
        }
        let to = t / (kf + 1.0);
        let tp = to / (kf + 2.0);
        // 1/((k-1)!(k+1)!) = k/(k+1) · 1/(k!)^2
        let tq = t * (1.0 + kf / (kf + 1.0)) / (2.0 * kf + 4.0);
        o += to;
        p += tp;
        q += tq;
        if t.abs() < 1e-18 {
            break;
        }
    }
    (o, -PI * z * p, 4.0 * PI * PI * q)
}

pub fn kernel_o(x: f64, l: f64) -> Result<f64> {
    Ok(KernelTriple::new(l)?.o(x))
}

pub fn kernel_p(x: f64, l: f64) -> Result<f64> {
    Ok(KernelTriple::new(l)?.p(x))
}

pub fn kernel_q(x: f64, l: f64) -> Result<f64> {
    Ok(KernelTriple::new(l)?.q(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        // tabulated values
        let j = bessel_j0123(1.0);
        assert!((j[0] - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((j[1] - 0.440_050_585_744_933_5).abs() < 1e-15);
        let j = bessel_j0123(10.0);
        assert!((j[0] + 0.245_935_764_451_348_3).abs() < 1e-14);
        assert!((j[1] - 0.043_472_746_168_861_44).abs() < 1e-14);
        assert!((j[2] - 0.254_630_313_685_120_9).abs() < 1e-14);
        assert!((j[3] - 0.058_379_379_305_186_81).abs() < 1e-14);
    }

    #[test]
    fn domain_errors() {
        assert!(bessel_j(4, 1.0).is_err());
        assert!(bessel_j(0, f64::NAN).is_err());
        assert!(KernelTriple::new(0.0).is_err());
    }

    #[test]
    fn regimes_agree() {
        for &z in &[1.0, 1.9, 2.0, 2.1] {
            let s = [series(0, z), series(1, z), series(2, z), series(3, z)];
            let m = miller(z);
            for n in 0..4 {
                assert!((s[n] - m[n]).abs() < 1e-15, "z={z} n={n}");
            }
        }
        for &z in &[1200.0, 1500.0, 1800.0] {
            let m = miller(z);
            let h = hankel(z);
            for n in 0..4 {
                assert!((m[n] - h[n]).abs() < 1e-14, "z={z} n={n}");
            }
        }
    }

    #[test]
    fn kernel_switch_is_continuous() {
        let k = KernelTriple::new(1.0).unwrap();
        let x = k.switch_radius / (2.0 * PI);
        let below = k.with_switch_radius(2.0).opq(x);
        let above = k.with_switch_radius(0.5).opq(x);
        assert!((below.0 - above.0).abs() < 1e-15);
        assert!((below.1 - above.1).abs() < 1e-14);
        assert!((below.2 - above.2).abs() < 1e-13);
        let zero = k.opq(0.0);
        assert_eq!(zero, (1.0, 0.0, PI * PI));
    }
}
