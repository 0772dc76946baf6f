//! Fisher information bounds for estimating the position of a point source,
//! or the separation of a symmetric source pair, observed through a circular
//! pupil when the light has a finite spectral bandwidth.
//!
//! The source density operator is diagonalized through a prolate spheroidal
//! wave function basis ([`pswf`]), which turns the continuous-frequency
//! eigenproblem into a small symmetric matrix problem ([`spdo_loc`],
//! [`spdo_pair`], [`genspec`]). The quantum Fisher information follows in
//! [`fisher`], and a Zernike-projection measurement is scored by its
//! classical Fisher information in [`zernike_cfi`].
//!
//! Lengths are in units of the diffraction scale, frequencies are measured
//! relative to the band center, and bandwidths are fractional.

pub mod error;
pub mod fisher;
pub mod genspec;
pub mod linalg;
pub mod pswf;
pub mod quadrature;
pub mod spdo_loc;
pub mod spdo_pair;
pub mod specfun;
pub mod zernike_cfi;

pub use error::{Error, Result};
pub use fisher::{FisherResult, ProblemKind};
pub use pswf::{PswfBasis, PswfMethod};
pub use quadrature::FrequencyRule;
pub use spdo_loc::{Eigenstate, Parity, SolveOptions, SpdoEigensystem};
pub use spdo_pair::PairSubspaceSystem;
pub use specfun::KernelTriple;

/// 4π², the single-photon Fisher information of a monochromatic source.
pub const MONOCHROMATIC_QFI: f64 = 4.0 * std::f64::consts::PI * std::f64::consts::PI;
