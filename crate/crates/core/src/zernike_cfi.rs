//! Projection of the image wavefront onto the four lowest Zernike modes
//! (piston, tip, tilt, defocus) and the classical Fisher information of
//! counting photons in those modes.
//!
//! With `x_± = 2πl(1 ± B/2)` and source azimuth `φ`,
//!
//! ```text
//! P_n = a_n / (2πlB) ∫_{x_-}^{x_+} J_k(x)² / x² dx
//! ```
//!
//! where `(a_n, k)` is `(4, 1)`, `(16cos²φ, 2)`, `(16sin²φ, 2)` and `(12, 3)`.
//! The same probabilities hold for localization at distance `l` and for a
//! symmetric pair at half-separation `l`. Photons outside the chosen modes
//! may be pooled into a single "bucket" outcome.

use crate::error::{invalid, Error, Result};
use crate::fisher::{Convergence, FisherResult, ProblemKind};
use crate::quadrature::integrate_adaptive;
use crate::specfun::bessel_j0123;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ZernikeMode {
    Piston,
    Tip,
    Tilt,
    Defocus,
}

impl ZernikeMode {
    pub const ALL: [ZernikeMode; 4] = [Self::Piston, Self::Tip, Self::Tilt, Self::Defocus];

    /// Noll index, 1 through 4.
    pub fn noll(self) -> usize {
        self as usize + 1
    }

    pub fn from_noll(n: usize) -> Result<Self> {
        match n {
            1..=4 => Ok(Self::ALL[n - 1]),
            _ => Err(invalid(
                "mode",
                format!("Zernike index must be 1..=4, got {n}"),
            )),
        }
    }

    fn bessel_order(self) -> usize {
        match self {
            Self::Piston => 1,
            Self::Tip | Self::Tilt => 2,
            Self::Defocus => 3,
        }
    }

    fn prefactor(self, phi: f64) -> f64 {
        match self {
            Self::Piston => 4.0,
            Self::Tip => 16.0 * phi.cos().powi(2),
            Self::Tilt => 16.0 * phi.sin().powi(2),
            Self::Defocus => 12.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZernikeModeSet {
    pub bandwidth: f64,
    pub distance: f64,
    pub phi: f64,
    pub probs: [f64; 4],
    pub derivs: [f64; 4],
    pub bucket_prob: f64,
    pub bucket_deriv: f64,
}

/// `J_k(x)/x` and its derivative.
fn scaled_bessel(k: usize, x: f64) -> (f64, f64) {
    let j = bessel_j0123(x);
    let h = j[k] / x;
    let dh = match k {
        1 => -j[2] / x,
        2 => j[2] / (x * x) - j[3] / x,
        _ => j[2] / x - 4.0 * j[3] / (x * x),
    };
    (h, dh)
}

fn integrand(k: usize, x: f64) -> f64 {
    let h = scaled_bessel(k, x).0;
    h * h
}

fn check_args(bandwidth: f64, distance: f64, phi: f64) -> Result<()> {
    if !(bandwidth.is_finite() && (0.0..=0.5).contains(&bandwidth)) {
        return Err(invalid(
            "B",
            format!("fractional bandwidth must lie in [0, 0.5], got {bandwidth}"),
        ));
    }
    if !(distance > 0.0 && distance.is_finite()) {
        return Err(invalid(
            "l",
            format!("must be positive and finite, got {distance}"),
        ));
    }
    if !phi.is_finite() {
        return Err(invalid("phi", "must be finite"));
    }
    Ok(())
}

/// Mode probabilities and their `l`-derivatives.
pub fn mode_probabilities(bandwidth: f64, distance: f64, phi: f64) -> Result<ZernikeModeSet> {
    check_args(bandwidth, distance, phi)?;
    let mut probs = [0.0; 4];
    let xc = 2.0 * PI * distance;
    for (p, mode) in probs.iter_mut().zip(ZernikeMode::ALL) {
        let k = mode.bessel_order();
        let a = mode.prefactor(phi);
        *p = if bandwidth == 0.0 {
            a * integrand(k, xc)
        } else {
            let lo = xc * (1.0 - 0.5 * bandwidth);
            let hi = xc * (1.0 + 0.5 * bandwidth);
            let scale = a / (xc * bandwidth);
            let tol = 1e-17 / scale.max(1e-300);
            scale * integrate_adaptive(|x| integrand(k, x), lo, hi, tol, 1e-15)?.value
        };
    }
    let mut set = ZernikeModeSet {
        bandwidth,
        distance,
        phi,
        probs,
        derivs: [0.0; 4],
        bucket_prob: 1.0 - probs.iter().sum::<f64>(),
        bucket_deriv: 0.0,
    };
    set.derivs = mode_prob_derivatives(&set);
    set.bucket_deriv = -set.derivs.iter().sum::<f64>();
    Ok(set)
}

/// `dP_n/dl` from the endpoint values of the integrand.
pub fn mode_prob_derivatives(set: &ZernikeModeSet) -> [f64; 4] {
    let (b, l) = (set.bandwidth, set.distance);
    let xc = 2.0 * PI * l;
    let mut out = [0.0; 4];
    for ((d, mode), p) in out.iter_mut().zip(ZernikeMode::ALL).zip(set.probs) {
        let k = mode.bessel_order();
        let a = mode.prefactor(set.phi);
        *d = if b == 0.0 {
            let (h, dh) = scaled_bessel(k, xc);
            a * 2.0 * h * dh * 2.0 * PI
        } else {
            let up = 1.0 + 0.5 * b;
            let dn = 1.0 - 0.5 * b;
            let edge = integrand(k, xc * up) * up - integrand(k, xc * dn) * dn;
            -p / l + a * edge / (l * b)
        };
    }
    out
}

/// Classical Fisher information per photon for counting in `modes`,
/// optionally with the remaining probability pooled as one more outcome.
///
/// `diagonal_sum` holds the observed-mode part and `cross_sum` the bucket
/// part. Outcomes with vanishing probability are skipped and noted.
pub fn cfi(
    set: &ZernikeModeSet,
    modes: &[ZernikeMode],
    include_bucket: bool,
) -> Result<FisherResult> {
    if modes.is_empty() {
        return Err(invalid("modes", "at least one Zernike mode is required"));
    }
    let mut selected = modes.to_vec();
    selected.sort();
    selected.dedup();
    let mut observed = 0.0;
    let mut notes = Vec::new();
    let mut psum = 0.0;
    let mut dsum = 0.0;
    for m in &selected {
        let i = *m as usize;
        let (p, d) = (set.probs[i], set.derivs[i]);
        psum += p;
        dsum += d;
        if p > 1e-300 {
            observed += d * d / p;
        } else {
            notes.push(format!("Z{} has zero probability", m.noll()));
        }
    }
    let mut bucket = 0.0;
    if include_bucket {
        let pb = 1.0 - psum;
        if pb > 1e-12 {
            bucket = dsum * dsum / pb;
        } else {
            notes.push(format!("bucket probability {pb:e} below resolution"));
        }
    }
    let value = observed + bucket;
    if !value.is_finite() {
        return Err(Error::Domain(format!(
            "non-finite CFI at l = {}",
            set.distance
        )));
    }
    Ok(FisherResult {
        problem: ProblemKind::ZernikeCfi,
        bandwidth: set.bandwidth,
        distance: set.distance,
        value,
        diagonal_sum: observed,
        cross_sum: bucket,
        retained: selected.len(),
        convergence: Convergence::new(0.0, None),
        notes,
    })
}
