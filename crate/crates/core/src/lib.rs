//! Multi-photon NOON-state interference toolkit.
//!
//! Three engines compute the probability that an `m/n` detector split
//! registers a full coincidence behind a polarization NOON interferometer:
//!
//! * [`analytic`]: closed-form harmonic expressions in the indistinguishability
//!   `I(τ)` and the phase `φ = ω₀τ`, including numerically reconstructed
//!   six-photon forms.
//! * [`fock`]: brute-force fixed-photon-number evolution over two temporal
//!   Schmidt modes per optical path. Ground truth for the closed forms.
//! * [`gaussian`]: squeezed-vacuum source with all multi-pair terms, loss and
//!   dark counts, using threshold-click inclusion–exclusion over vacuum
//!   projections of the covariance matrix.
//!
//! [`analysis`] extracts envelope shape, coherence length/time and visibility
//! from any [`PatternScan`].

pub mod analysis;
pub mod analytic;
pub mod config;
mod error;
pub mod fock;
pub mod gaussian;
pub mod io;
pub mod types;

pub use error::{Error, ErrorKind, Result, Violation};
pub use types::{
    validate, DelayUnit, DetectionScheme, EnvelopeStats, PatternScan, ScanConfig, ScanMode,
    ScanPoint, Shape, SourceSpec, Validated, SPEED_OF_LIGHT,
};
