//! Argument definitions.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "qfi-bandlimit",
    version,
    about = "Fisher information bounds for finite-bandwidth point sources"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Problem {
    /// Single-source localization.
    Loc,
    /// Symmetric two-source separation.
    Pair,
}

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Problem::Loc => "loc",
            Problem::Pair => "pair",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    Flat,
    Gaussian,
    Lorentzian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Basis {
    /// Sine series in the angle `θ = arccos x`.
    Angular,
    /// Fourier series with a `(1-x²)^{1/4}` weight.
    Fourier,
}

#[derive(Debug, Clone, Args)]
pub struct Numerics {
    /// TOML file with any of the keys K, N, N_q, cutoff.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// PSWF grid samples.
    #[arg(long = "K")]
    pub k: Option<usize>,
    /// PSWF truncation order (automatic when omitted).
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// Frequency quadrature nodes.
    #[arg(long = "N_q")]
    pub n_q: Option<usize>,
    /// Relative eigenvalue cutoff.
    #[arg(long)]
    pub cutoff: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct Outputs {
    /// CSV output file; stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// JSON sidecar; defaults to the CSV path with a `.json` extension.
    #[arg(long)]
    pub meta: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct Grid {
    /// Fractional bandwidths: numbers and start:step:stop ranges, comma separated.
    #[arg(long = "B")]
    pub bandwidths: String,
    /// Distances in diffraction units, same syntax.
    #[arg(long = "l")]
    pub distances: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Density-operator eigenvalues, or eigenfunctions with --dump-eigenfunctions.
    Eig {
        #[arg(long, value_enum, default_value = "loc")]
        problem: Problem,
        #[command(flatten)]
        grid: Grid,
        /// Write eigenfunction samples instead of eigenvalues.
        #[arg(long)]
        dump_eigenfunctions: bool,
        /// Eigenfunctions to dump.
        #[arg(long, default_value_t = 3)]
        count: usize,
        #[command(flatten)]
        numerics: Numerics,
        #[command(flatten)]
        outputs: Outputs,
    },
    /// Quantum Fisher information per photon.
    Qfi {
        #[arg(long, value_enum, default_value = "loc")]
        problem: Problem,
        #[command(flatten)]
        grid: Grid,
        #[command(flatten)]
        numerics: Numerics,
        #[command(flatten)]
        outputs: Outputs,
    },
    /// Classical Fisher information of Zernike-mode photon counting.
    Cfi {
        /// Noll indices 1-4, e.g. z2,z3.
        #[arg(long, default_value = "z2,z3")]
        modes: String,
        /// Count the photons outside the chosen modes as one more outcome.
        #[arg(long)]
        bucket: bool,
        /// Source azimuth in radians.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        phi: f64,
        #[command(flatten)]
        grid: Grid,
        #[command(flatten)]
        outputs: Outputs,
    },
    /// Localization with a general symmetric spectrum.
    Genspec {
        #[arg(long, value_enum, default_value = "flat")]
        profile: Profile,
        /// Two-column f,W table; replaces --profile and --B.
        #[arg(long)]
        spectrum_file: Option<PathBuf>,
        /// Widths (bandwidth or FWHM); same syntax as `qfi --B`.
        #[arg(long = "B")]
        widths: Option<String>,
        /// Distances in diffraction units.
        #[arg(long = "l")]
        distances: String,
        /// Basis functions per parity.
        #[arg(long = "M", default_value_t = 24)]
        m_order: usize,
        #[arg(long, value_enum, default_value = "angular")]
        basis: Basis,
        /// Emit the eigenvalue spectrum instead of the QFI.
        #[arg(long)]
        eigs: bool,
        #[command(flatten)]
        numerics: Numerics,
        #[command(flatten)]
        outputs: Outputs,
    },
    /// Samples of the PSWF basis.
    PswfDump {
        /// Space-bandwidth parameters.
        #[arg(long = "C")]
        c_values: String,
        /// Sample points on [-1, 1].
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[command(flatten)]
        numerics: Numerics,
        #[command(flatten)]
        outputs: Outputs,
    },
}
