//! Simulation and design toolkit for spectrally engineered spontaneous
//! parametric down-conversion (SPDC) sources of polarisation–frequency
//! hyperentangled photon pairs.
//!
//! The crate covers the full desk-scale pipeline of such a source:
//!
//! - [`spectra`] — frequency grids, multi-Gaussian pump envelopes, and a
//!   pulse-shaper transmission model with closed-loop optimization;
//! - [`crystal`] — target nonlinearity profiles, sub-coherence-length poling
//!   synthesis, and phase-matching-function evaluation;
//! - [`jsa`] — joint-spectral-amplitude assembly, Schmidt decomposition,
//!   marginals, phase masks, and low-rank denoising;
//! - [`hom`] — intra-pair and heralded inter-pair Hong-Ou-Mandel traces,
//!   closed-form fit models, and a visibility fitter;
//! - [`hyperhom`] — polarisation-resolved HOM interference of the full
//!   hyperentangled state;
//! - [`tofs`] — time-of-flight spectrometry detector simulation and JSI
//!   reconstruction;
//! - [`tomo`] — two-qubit polarisation tomography with maximum-likelihood
//!   reconstruction and Monte-Carlo uncertainty propagation.
//!
//! All quantities use angular frequency in rad/ps internally; wavelength
//! conversions live in [`units`].

pub mod crystal;
pub mod error;
pub mod hom;
pub mod hyperhom;
pub mod io;
pub mod jsa;
pub mod spectra;
pub mod tofs;
pub mod tomo;
pub mod units;

pub use error::{Error, Result};
pub use jsa::{JointSpectralAmplitude, SchmidtResult};
pub use spectra::{PumpEnvelope, SpectralAxis};
