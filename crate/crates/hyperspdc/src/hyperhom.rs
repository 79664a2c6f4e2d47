//! Polarisation-resolved HOM interference of the hyperentangled state:
//! beam-splitter algebra over polarisation ⊗ frequency, polarisation basis
//! changes, and per-detector-pair coincidence traces.
//!
//! The frequency content enters only through the exchange overlap
//! S(τ) = ∫∫ f*(ωs,ωi) f(ωi,ωs) e^{i(ωi−ωs)τ}, which is real for any JSA;
//! everything else reduces to a 4×4 scalar amplitude table over
//! (output port, polarisation) detector labels.

use nalgebra::Matrix2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hom::exchange_overlap;
use crate::jsa::JointSpectralAmplitude;

/// Hyperentangled polarisation ⊗ frequency two-photon state:
/// (|HV⟩ + e^{iφ}|VH⟩)/√2 ⊗ f(ωs, ωi).
#[derive(Debug, Clone)]
pub struct HyperState {
    /// Polarisation Bell phase: 0 for ψ⁺, π for ψ⁻.
    pub phi: f64,
    pub jsa: JointSpectralAmplitude,
    pub label: String,
}

impl HyperState {
    /// Polarisation coefficient matrix c over {H,V}²: c_HV = 1/√2,
    /// c_VH = e^{iφ}/√2.
    pub fn pol_coefficients(&self) -> Matrix2<Complex64> {
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let mut c = Matrix2::zeros();
        c[(0, 1)] = Complex64::new(inv_sqrt2, 0.0);
        c[(1, 0)] = Complex64::from_polar(inv_sqrt2, self.phi);
        c
    }
}

/// Measurement basis for the polarising analysis after the splitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolBasis {
    Hv,
    Da,
}

impl PolBasis {
    pub fn labels(self) -> [&'static str; 2] {
        match self {
            PolBasis::Hv => ["H", "V"],
            PolBasis::Da => ["D", "A"],
        }
    }
}

/// Rotates a two-photon polarisation coefficient matrix from H/V to D/A
/// (|D⟩ = (|H⟩+|V⟩)/√2, |A⟩ = (|H⟩−|V⟩)/√2); its own inverse.
pub fn basis_change(c: &Matrix2<Complex64>) -> Matrix2<Complex64> {
    let h = Matrix2::from_row_slice(&[
        Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        Complex64::new(-std::f64::consts::FRAC_1_SQRT_2, 0.0),
    ]);
    h * c * h.transpose()
}

/// Beam-splitter output port.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Port {
    A,
    B,
}

const N_OUTCOMES: usize = 4;

/// Detector label: output port × polarisation (index in the analysis
/// basis). Packed as port·2 + pol.
pub fn outcome_index(port: Port, pol: usize) -> usize {
    let p = match port {
        Port::A => 0,
        Port::B => 1,
    };
    p * 2 + pol
}

fn port_of(outcome: usize) -> Port {
    if outcome < 2 {
        Port::A
    } else {
        Port::B
    }
}

fn pol_of(outcome: usize) -> usize {
    outcome % 2
}

/// Scalar amplitude table after the balanced splitter, plus the frequency
/// exchange overlap at the requested delay.
///
/// `table[(o1, o2)]` is the amplitude for photon 1 (signal input, delayed
/// by τ) reaching detector `o1` and photon 2 reaching `o2`; the frequency
/// dependence factors out and enters pair probabilities only via
/// `exchange`.
#[derive(Debug, Clone)]
pub struct BsAmplitudes {
    pub table: [[Complex64; N_OUTCOMES]; N_OUTCOMES],
    /// S(τ), real up to roundoff.
    pub exchange: Complex64,
    pub basis: PolBasis,
    pub tau: f64,
}

/// Applies a† → (c†+d†)/√2, b† → (c†−d†)/√2 to the state and tabulates
/// the scalar output amplitudes at delay τ on the signal input.
pub fn beam_splitter_amplitudes(
    state: &HyperState,
    basis: PolBasis,
    tau: f64,
) -> Result<BsAmplitudes> {
    let c = match basis {
        PolBasis::Hv => state.pol_coefficients(),
        PolBasis::Da => basis_change(&state.pol_coefficients()),
    };
    let exchange = exchange_overlap(&state.jsa, tau)?;
    let t = |port: Port| match port {
        Port::A => 1.0,
        Port::B => -1.0,
    };
    let mut table = [[Complex64::ZERO; N_OUTCOMES]; N_OUTCOMES];
    for o1 in 0..N_OUTCOMES {
        for o2 in 0..N_OUTCOMES {
            table[o1][o2] = 0.5 * t(port_of(o2)) * c[(pol_of(o1), pol_of(o2))];
        }
    }
    Ok(BsAmplitudes {
        table,
        exchange,
        basis,
        tau,
    })
}

impl BsAmplitudes {
    /// Coincidence probability between two distinct detectors, summed over
    /// all frequency outcomes.
    pub fn coincidence_probability(&self, o1: usize, o2: usize) -> f64 {
        assert_ne!(o1, o2, "use double_probability for a single detector");
        let u1 = self.table[o1][o2];
        let u2 = self.table[o2][o1];
        u1.norm_sqr() + u2.norm_sqr() + 2.0 * (u1 * u2.conj() * self.exchange).re
    }

    /// Probability of both photons landing on the same detector.
    pub fn double_probability(&self, o: usize) -> f64 {
        let u = self.table[o][o];
        u.norm_sqr() * (1.0 + self.exchange.re)
    }

    /// Total two-photon output probability; 1 for any input state and
    /// delay.
    pub fn total_probability(&self) -> f64 {
        let mut total = 0.0;
        for o1 in 0..N_OUTCOMES {
            total += self.double_probability(o1);
            for o2 in (o1 + 1)..N_OUTCOMES {
                total += self.coincidence_probability(o1, o2);
            }
        }
        total
    }
}

/// Detector-pair category of a coincidence trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairCategory {
    CrossPolSamePort,
    CrossPolCrossPort,
    SamePolCrossPort,
}

impl PairCategory {
    /// Unordered detector pairs belonging to the category.
    fn pairs(self) -> [(usize, usize); 2] {
        let o = outcome_index;
        match self {
            PairCategory::CrossPolSamePort => [
                (o(Port::A, 0), o(Port::A, 1)),
                (o(Port::B, 0), o(Port::B, 1)),
            ],
            PairCategory::CrossPolCrossPort => [
                (o(Port::A, 0), o(Port::B, 1)),
                (o(Port::A, 1), o(Port::B, 0)),
            ],
            PairCategory::SamePolCrossPort => [
                (o(Port::A, 0), o(Port::B, 0)),
                (o(Port::A, 1), o(Port::B, 1)),
            ],
        }
    }
}

/// Coincidence probability versus delay for one detector-pair category.
#[derive(Debug, Clone)]
pub struct PortPairTrace {
    pub basis: PolBasis,
    pub pair: PairCategory,
    pub delays: Vec<f64>,
    pub probability: Vec<f64>,
}

/// Polarisation-resolved HOM trace for one category of detector pairs.
pub fn polarised_hom_trace(
    state: &HyperState,
    basis: PolBasis,
    pair: PairCategory,
    delays: &[f64],
) -> Result<PortPairTrace> {
    let probability = delays
        .par_iter()
        .map(|&tau| {
            let amps = beam_splitter_amplitudes(state, basis, tau)?;
            let p: f64 = pair
                .pairs()
                .iter()
                .map(|&(o1, o2)| amps.coincidence_probability(o1, o2))
                .sum();
            if !(-1e-9..=1.0 + 1e-9).contains(&p) {
                return Err(Error::Validation(format!(
                    "category probability {p} outside [0,1]"
                )));
            }
            Ok(p.clamp(0.0, 1.0))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PortPairTrace {
        basis,
        pair,
        delays: delays.to_vec(),
        probability,
    })
}
