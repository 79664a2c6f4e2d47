//! Hong-Ou-Mandel interference: intra-pair and heralded inter-pair
//! coincidence traces by direct integration of the JSA, closed-form fit
//! models, and a visibility fitter for counted data.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::jsa::JointSpectralAmplitude;
use crate::spectra::SpectralAxis;

/// Which interferometer produced a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Intra,
    InterHeralded,
}

/// Coincidence probability versus relative delay.
#[derive(Debug, Clone)]
pub struct HomTrace {
    pub delays: Vec<f64>,
    pub probability: Vec<f64>,
    pub kind: TraceKind,
}

/// Default delay grid: 201 points over ±10/σ.
pub fn default_delays(sigma: f64) -> Vec<f64> {
    let half = 10.0 / sigma;
    (0..201).map(|i| -half + i as f64 * half / 100.0).collect()
}

fn clamp_probability(p: f64) -> Result<f64> {
    if p < -1e-9 || p > 1.0 + 1e-9 {
        return Err(Error::Validation(format!(
            "coincidence probability {p} outside [0,1] beyond numerical tolerance"
        )));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Exchange overlap S(τ) = ∫∫ f*(ωs,ωi) f(ωi,ωs) e^{i(ωi−ωs)τ} dωs dωi.
pub fn exchange_overlap(jsa: &JointSpectralAmplitude, tau: f64) -> Result<Complex64> {
    if !jsa.is_square_grid() {
        return Err(Error::Shape(
            "intra-pair interference needs a square frequency grid".into(),
        ));
    }
    let v = jsa.values();
    let axis = jsa.s_axis();
    let w2 = jsa.cell_weight();
    let n = v.nrows();
    let sum = (0..n)
        .into_par_iter()
        .map(|r| {
            let wr = axis.value(r);
            let mut acc = Complex64::ZERO;
            for c in 0..n {
                let phase = Complex64::from_polar(1.0, (axis.value(c) - wr) * tau);
                acc += v[(r, c)].conj() * v[(c, r)] * phase;
            }
            acc
        })
        .reduce(|| Complex64::ZERO, |a, b| a + b);
    Ok(sum * w2)
}

/// Coincidence trace when both photons of one pair meet at the splitter.
pub fn intra_pair_trace(jsa: &JointSpectralAmplitude, delays: &[f64]) -> Result<HomTrace> {
    if !jsa.is_square_grid() {
        return Err(Error::Shape(
            "intra-pair interference needs a square frequency grid".into(),
        ));
    }
    let probability = delays
        .par_iter()
        .map(|&tau| {
            let s = exchange_overlap(jsa, tau)?;
            clamp_probability(0.5 - 0.5 * s.re)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HomTrace {
        delays: delays.to_vec(),
        probability,
        kind: TraceKind::Intra,
    })
}

/// Relative phase between the two PMF peaks in the closed-form model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseShift {
    Pi,
    Zero,
}

/// Approximate intra-pair model for well-separated bins:
/// p = 1/2 ± (V/2) e^{−σ²τ²/4} cos(δτ), sign set by the PMF phase shift.
pub fn intra_fit_model(tau: f64, sigma: f64, delta: f64, v: f64, phase: PhaseShift) -> f64 {
    let env = (-sigma * sigma * tau * tau / 4.0).exp();
    let sign = match phase {
        PhaseShift::Pi => 1.0,
        PhaseShift::Zero => -1.0,
    };
    0.5 + sign * 0.5 * v * env * (delta * tau).cos()
}

/// Exact intra-pair model for the π-phase double-Gaussian JSA, keeping the
/// bin-overlap correction η = e^{−δ²/σ²}.
pub fn intra_exact_model(tau: f64, sigma: f64, delta: f64, v: f64) -> f64 {
    let eta = (-delta * delta / (sigma * sigma)).exp();
    let env = (-sigma * sigma * tau * tau / 4.0).exp();
    0.5 + 0.5 * v * env * ((delta * tau).cos() - eta) / (1.0 - eta)
}

/// Reduced spectral state of the signal photon conditioned on the idler:
/// ρ(ωs, ωs′) = ∫ f(ωs, ωi) f*(ωs′, ωi) dωi, discretized to unit trace.
#[derive(Debug, Clone)]
pub struct HeraldedDensity {
    pub axis: SpectralAxis,
    pub matrix: DMatrix<Complex64>,
}

impl HeraldedDensity {
    pub fn purity(&self) -> f64 {
        let m = &self.matrix;
        let mut acc = 0.0;
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                acc += (m[(r, c)] * m[(c, r)]).re;
            }
        }
        acc
    }
}

/// Heralded signal density matrix of a JSA.
pub fn heralded_density(jsa: &JointSpectralAmplitude) -> HeraldedDensity {
    let w = jsa.cell_weight().sqrt();
    let a = jsa.values().map(|v| v * w);
    let matrix = &a * a.adjoint();
    HeraldedDensity {
        axis: jsa.s_axis().clone(),
        matrix,
    }
}

/// Coincidence trace when heralded signal photons from two pairs meet:
/// p_H(τ) = 1/2 − 1/2 ∫∫ ρ(ωs,ωs′) ρ(ωs′,ωs) e^{i(ωs′−ωs)τ}.
pub fn inter_pair_trace(rho: &HeraldedDensity, delays: &[f64]) -> Result<HomTrace> {
    let m = &rho.matrix;
    if m.nrows() != m.ncols() || m.nrows() != rho.axis.n_points() {
        return Err(Error::Shape("density matrix does not match its axis".into()));
    }
    let herm_dev = (m - m.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max);
    if herm_dev > 1e-8 {
        return Err(Error::Validation(format!(
            "density matrix not Hermitian (deviation {herm_dev:.3e})"
        )));
    }
    let n = m.nrows();
    let probability = delays
        .par_iter()
        .map(|&tau| {
            let mut acc = Complex64::ZERO;
            for r in 0..n {
                let wr = rho.axis.value(r);
                for c in 0..n {
                    let phase = Complex64::from_polar(1.0, (rho.axis.value(c) - wr) * tau);
                    acc += m[(r, c)] * m[(c, r)] * phase;
                }
            }
            clamp_probability(0.5 - 0.5 * acc.re)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HomTrace {
        delays: delays.to_vec(),
        probability,
        kind: TraceKind::InterHeralded,
    })
}

/// Approximate inter-pair model:
/// p = 1/2 − (V/16) e^{−σ²τ²/4} (3 + cos 2δτ).
pub fn inter_fit_model(tau: f64, sigma: f64, delta: f64, v: f64) -> f64 {
    let env = (-sigma * sigma * tau * tau / 4.0).exp();
    0.5 - v / 16.0 * env * (3.0 + (2.0 * delta * tau).cos())
}

/// Frequency (rad/ps) of the dominant Fourier component of a trace sampled
/// on a uniform delay grid, restricted to ω ≥ `min_omega` so the slow
/// Gaussian envelope (and DC) can be excluded when hunting for the beating.
pub fn dominant_frequency(delays: &[f64], values: &[f64], min_omega: f64) -> Result<f64> {
    if delays.len() != values.len() || delays.len() < 4 {
        return Err(Error::Shape("need at least 4 matching samples".into()));
    }
    let n = delays.len();
    let dt = delays[1] - delays[0];
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut best = (0.0f64, -1.0f64);
    for k in 1..=n / 2 {
        let omega = 2.0 * std::f64::consts::PI * k as f64 / (n as f64 * dt);
        if omega < min_omega {
            continue;
        }
        let mut acc = Complex64::ZERO;
        for (j, &v) in values.iter().enumerate() {
            acc += Complex64::from_polar(v - mean, -omega * j as f64 * dt);
        }
        if acc.norm() > best.1 {
            best = (omega, acc.norm());
        }
    }
    if best.1 < 0.0 {
        return Err(Error::Validation("no frequency bins above min_omega".into()));
    }
    Ok(best.0)
}

/// Closed-form model selected for fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    IntraPi,
    IntraZero,
    Inter,
}

/// Initial guess for [`fit_trace`].
#[derive(Debug, Clone, Copy)]
pub struct FitGuess {
    pub sigma: f64,
    pub delta: f64,
    pub visibility: f64,
    pub baseline: f64,
}

/// Fit result: model parameters, covariance from the Jacobian at the
/// optimum (order σ, δ, V, baseline), and the weighted residual norm.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub sigma: f64,
    pub delta: f64,
    pub visibility: f64,
    pub baseline: f64,
    pub covariance: DMatrix<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
}

fn model_counts(model: FitModel, tau: f64, p: &[f64; 4]) -> (f64, [f64; 4]) {
    let [sigma, delta, v, b] = *p;
    let env = (-sigma * sigma * tau * tau / 4.0).exp();
    let denv_dsigma = env * (-sigma * tau * tau / 2.0);
    match model {
        FitModel::IntraPi | FitModel::IntraZero => {
            let sign = if model == FitModel::IntraPi { 1.0 } else { -1.0 };
            let c = (delta * tau).cos();
            let m = b * (1.0 + sign * v * env * c);
            let grad = [
                b * sign * v * c * denv_dsigma,
                -b * sign * v * env * (delta * tau).sin() * tau,
                b * sign * env * c,
                1.0 + sign * v * env * c,
            ];
            (m, grad)
        }
        FitModel::Inter => {
            let c = (2.0 * delta * tau).cos();
            let m = b * (1.0 - v / 8.0 * env * (3.0 + c));
            let grad = [
                -b * v / 8.0 * (3.0 + c) * denv_dsigma,
                b * v / 8.0 * env * (2.0 * delta * tau).sin() * 2.0 * tau,
                -b / 8.0 * env * (3.0 + c),
                1.0 - v / 8.0 * env * (3.0 + c),
            ];
            (m, grad)
        }
    }
}

fn project(p: &mut [f64; 4]) {
    p[0] = p[0].max(1e-12);
    p[1] = p[1].max(1e-12);
    p[2] = p[2].clamp(0.0, 1.0);
    p[3] = p[3].max(1e-12);
}

/// Weighted least-squares fit of counted coincidences to a closed-form
/// model. Counts are modeled as baseline × (normalized probability / 1/2),
/// so the baseline is the large-delay count level; weights are Poissonian
/// (1/max(n,1)).
pub fn fit_trace(
    delays: &[f64],
    counts: &[f64],
    model: FitModel,
    guess: FitGuess,
) -> Result<FitOutcome> {
    if delays.len() != counts.len() {
        return Err(Error::Shape("delays and counts length mismatch".into()));
    }
    if delays.len() < 10 {
        return Err(Error::Validation("need at least 10 data points".into()));
    }
    if counts.iter().any(|&n| n < 0.0 || !n.is_finite()) {
        return Err(Error::Validation("counts must be finite and non-negative".into()));
    }
    let span = delays.iter().cloned().fold(f64::MIN, f64::max)
        - delays.iter().cloned().fold(f64::MAX, f64::min);
    let period = 2.0 * std::f64::consts::PI / guess.delta;
    if span < period {
        return Err(Error::Validation(format!(
            "delay span {span:.3} ps shorter than one beating period {period:.3} ps"
        )));
    }
    let weights: Vec<f64> = counts.iter().map(|&n| 1.0 / n.max(1.0)).collect();
    let mut p = [guess.sigma, guess.delta, guess.visibility, guess.baseline];
    project(&mut p);

    let chi2_of = |p: &[f64; 4]| -> f64 {
        delays
            .iter()
            .zip(counts)
            .zip(&weights)
            .map(|((&tau, &n), &w)| {
                let (m, _) = model_counts(model, tau, p);
                w * (n - m) * (n - m)
            })
            .sum()
    };

    let max_iter = 300;
    let mut lambda = 1e-3;
    let mut chi2 = chi2_of(&p);
    let mut converged = false;
    let mut iterations = 0;
    let mut stall = 0u32;
    for it in 0..max_iter {
        iterations = it + 1;
        let mut jtj = DMatrix::<f64>::zeros(4, 4);
        let mut jtr = DVector::<f64>::zeros(4);
        for ((&tau, &n), &w) in delays.iter().zip(counts).zip(&weights) {
            let (m, grad) = model_counts(model, tau, &p);
            let r = n - m;
            for a in 0..4 {
                jtr[a] += w * grad[a] * r;
                for b in 0..4 {
                    jtj[(a, b)] += w * grad[a] * grad[b];
                }
            }
        }
        // active-set: freeze parameters pinned at a bound whose gradient
        // points outward, otherwise the clamped trial spoils the LM step
        let lo = [1e-12, 1e-12, 0.0, 1e-12];
        let hi = [f64::INFINITY, f64::INFINITY, 1.0, f64::INFINITY];
        for a in 0..4 {
            let pushing_out = (p[a] <= lo[a] + 1e-15 && jtr[a] < 0.0)
                || (p[a] >= hi[a] - 1e-15 && jtr[a] > 0.0);
            if pushing_out {
                jtr[a] = 0.0;
                for b in 0..4 {
                    jtj[(a, b)] = 0.0;
                    jtj[(b, a)] = 0.0;
                }
                jtj[(a, a)] = 1.0;
            }
        }
        if jtr.norm() < 1e-12 * (1.0 + chi2) {
            converged = true;
            break;
        }
        let mut accepted = false;
        for _ in 0..30 {
            let mut damped = jtj.clone();
            for a in 0..4 {
                damped[(a, a)] += lambda * jtj[(a, a)].max(1e-30);
            }
            let step = match damped.lu().solve(&jtr) {
                Some(s) => s,
                None => break,
            };
            let mut trial = p;
            for a in 0..4 {
                trial[a] += step[a];
            }
            project(&mut trial);
            let trial_chi2 = chi2_of(&trial);
            if trial_chi2 <= chi2 {
                let rel = (chi2 - trial_chi2) / chi2.max(1e-300);
                let step_small =
                    (0..4).all(|a| (trial[a] - p[a]).abs() <= 1e-10 * (1.0 + p[a].abs()));
                p = trial;
                chi2 = trial_chi2;
                lambda = (lambda * 0.3).max(1e-12);
                accepted = true;
                stall = if rel < 1e-12 { stall + 1 } else { 0 };
                if rel < 1e-14 || step_small || stall >= 3 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if converged {
            break;
        }
        if !accepted {
            converged = chi2.is_finite();
            break;
        }
    }
    if !converged {
        return Err(Error::FitDiverged {
            iterations,
            residual: chi2.sqrt(),
            sigma: p[0],
            delta: p[1],
            visibility: p[2],
        });
    }

    let mut jtj = DMatrix::<f64>::zeros(4, 4);
    for ((&tau, _), &w) in delays.iter().zip(counts).zip(&weights) {
        let (_, grad) = model_counts(model, tau, &p);
        for a in 0..4 {
            for b in 0..4 {
                jtj[(a, b)] += w * grad[a] * grad[b];
            }
        }
    }
    let covariance = jtj
        .clone()
        .try_inverse()
        .unwrap_or_else(|| DMatrix::from_element(4, 4, f64::NAN));
    Ok(FitOutcome {
        sigma: p[0],
        delta: p[1],
        visibility: p[2].clamp(0.0, 1.0),
        baseline: p[3],
        covariance,
        residual_norm: chi2.sqrt(),
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jsa::{gaussian_model_jsa, GaussianModel};
    use crate::spectra::SpectralAxis;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::SeedableRng;
    use rand_distr::{Distribution, Poisson};

    const OMEGA0: f64 = 1191.0;
    const DELTA: f64 = 4.0;
    const SIGMA: f64 = 0.5;

    fn model_jsa(pi_phase: bool) -> JointSpectralAmplitude {
        let axis = SpectralAxis::centered(OMEGA0, 12.0, 192).unwrap();
        gaussian_model_jsa(
            &axis,
            GaussianModel {
                omega0: OMEGA0,
                delta: DELTA,
                sigma: SIGMA,
                pi_phase,
            },
        )
        .unwrap()
    }

    #[test]
    fn fit_model_endpoints() {
        assert_abs_diff_eq!(
            intra_fit_model(0.0, 1.0, 5.0, 1.0, PhaseShift::Pi),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            intra_fit_model(0.0, 1.0, 5.0, 1.0, PhaseShift::Zero),
            0.0,
            epsilon = 1e-15
        );
        let tau = std::f64::consts::PI / 5.0;
        let expect = 0.5 - 0.5 * (-std::f64::consts::PI.powi(2) / 100.0).exp();
        assert_relative_eq!(
            intra_fit_model(tau, 1.0, 5.0, 1.0, PhaseShift::Pi),
            expect,
            epsilon = 1e-15
        );
    }

    #[test]
    fn exact_model_reference_points() {
        assert_abs_diff_eq!(intra_exact_model(0.0, 1.0, 2.0, 1.0), 1.0, epsilon = 1e-15);
        // direct evaluation of the closed form at σ=1, δ=2, τ=π/2
        let eta = (-4.0f64).exp();
        let expect = 0.5
            + 0.5 * (-std::f64::consts::PI.powi(2) / 16.0).exp() * (-1.0 - eta) / (1.0 - eta);
        assert_relative_eq!(
            intra_exact_model(std::f64::consts::PI / 2.0, 1.0, 2.0, 1.0),
            expect,
            epsilon = 1e-14
        );
        // well-separated bins collapse to the approximate model
        for &tau in &[0.0, 0.3, 1.1, 4.0] {
            assert_abs_diff_eq!(
                intra_exact_model(tau, 1.0, 6.0, 1.0),
                intra_fit_model(tau, 1.0, 6.0, 1.0, PhaseShift::Pi),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn inter_model_endpoints() {
        assert_abs_diff_eq!(inter_fit_model(0.0, 1.0, 2.0, 1.0), 0.25, epsilon = 1e-15);
        let delta = 2.0f64;
        let tau = std::f64::consts::PI / (2.0 * delta);
        let expect = 0.5 - 2.0 / 16.0 * (-tau * tau / 4.0).exp();
        assert_relative_eq!(inter_fit_model(tau, 1.0, delta, 1.0), expect, epsilon = 1e-14);
    }

    #[test]
    fn intra_trace_dichotomy_at_zero_delay() {
        let pi = intra_pair_trace(&model_jsa(true), &[0.0]).unwrap();
        assert_abs_diff_eq!(pi.probability[0], 1.0, epsilon = 1e-6);
        let zero = intra_pair_trace(&model_jsa(false), &[0.0]).unwrap();
        assert_abs_diff_eq!(zero.probability[0], 0.0, epsilon = 1e-6);
    }

    #[test]
    fn intra_trace_matches_closed_form() {
        let jsa = model_jsa(true);
        let delays = default_delays(SIGMA);
        let trace = intra_pair_trace(&jsa, &delays).unwrap();
        for (&tau, &p) in delays.iter().zip(&trace.probability) {
            let model = intra_fit_model(tau, SIGMA, DELTA, 1.0, PhaseShift::Pi);
            assert!(
                (p - model).abs() < 1e-3,
                "τ={tau}: numeric {p} vs model {model}"
            );
        }
        // edges sit at the baseline
        assert_abs_diff_eq!(trace.probability[0], 0.5, epsilon = 0.01);
        // symmetric in τ
        let n = delays.len();
        for i in 0..n / 2 {
            assert_abs_diff_eq!(
                trace.probability[i],
                trace.probability[n - 1 - i],
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn zero_delay_identity_against_plain_sum() {
        let jsa = model_jsa(true);
        let v = jsa.values();
        let mut s = Complex64::ZERO;
        for r in 0..v.nrows() {
            for c in 0..v.ncols() {
                s += v[(r, c)].conj() * v[(c, r)];
            }
        }
        let s = s * jsa.cell_weight();
        let p0 = intra_pair_trace(&jsa, &[0.0]).unwrap().probability[0];
        assert_abs_diff_eq!(p0, 0.5 - 0.5 * s.re, epsilon = 1e-9);
    }

    #[test]
    fn non_square_grid_rejected() {
        let s = SpectralAxis::centered(OMEGA0, 12.0, 64).unwrap();
        let i = SpectralAxis::centered(OMEGA0, 10.0, 64).unwrap();
        let v = DMatrix::from_element(64, 64, Complex64::new(1.0, 0.0));
        let jsa = JointSpectralAmplitude::new(s, i, v).unwrap();
        assert!(matches!(
            intra_pair_trace(&jsa, &[0.0]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn heralded_density_of_four_bin_state() {
        let rho = heralded_density(&model_jsa(true));
        let trace: Complex64 = (0..rho.matrix.nrows()).map(|r| rho.matrix[(r, r)]).sum();
        assert_abs_diff_eq!(trace.re, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(trace.im, 0.0, epsilon = 1e-12);
        let herm = (&rho.matrix - rho.matrix.adjoint())
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        assert!(herm < 1e-12);
        assert_relative_eq!(rho.purity(), 0.5, epsilon = 3e-3);
    }

    #[test]
    fn separable_jsa_heralds_pure_state() {
        let axis = SpectralAxis::centered(OMEGA0, 8.0, 96).unwrap();
        let v = DMatrix::from_fn(96, 96, |r, c| {
            let ws = axis.value(r) - OMEGA0;
            let wi = axis.value(c) - OMEGA0;
            Complex64::new((-ws * ws / 2.0 - wi * wi / 2.0).exp(), 0.0)
        });
        let jsa = JointSpectralAmplitude::new(axis.clone(), axis, v).unwrap();
        let rho = heralded_density(&jsa);
        assert_relative_eq!(rho.purity(), 1.0, epsilon = 1e-9);
        let trace = inter_pair_trace(&rho, &[0.0]).unwrap();
        assert_abs_diff_eq!(trace.probability[0], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn inter_trace_zero_delay_identity_and_model_match() {
        let rho = heralded_density(&model_jsa(true));
        let delays = default_delays(SIGMA);
        let trace = inter_pair_trace(&rho, &delays).unwrap();
        let p0 = inter_pair_trace(&rho, &[0.0]).unwrap().probability[0];
        assert_abs_diff_eq!(p0, 0.5 - 0.5 * rho.purity(), epsilon = 1e-9);
        assert_abs_diff_eq!(p0, 0.25, epsilon = 2e-3);
        for (&tau, &p) in delays.iter().zip(&trace.probability) {
            let model = inter_fit_model(tau, SIGMA, DELTA, 1.0);
            assert!(
                (p - model).abs() < 2e-3,
                "τ={tau}: numeric {p} vs model {model}"
            );
        }
    }

    #[test]
    fn non_hermitian_density_rejected() {
        let axis = SpectralAxis::centered(OMEGA0, 4.0, 8).unwrap();
        let mut m = DMatrix::from_element(8, 8, Complex64::ZERO);
        m[(0, 0)] = Complex64::new(1.0, 0.0);
        m[(0, 1)] = Complex64::new(0.1, 0.0);
        let rho = HeraldedDensity { axis, matrix: m };
        assert!(matches!(
            inter_pair_trace(&rho, &[0.0]),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn beating_frequency_doubles_for_inter_trace() {
        // delay grid chosen so δ and 2δ land exactly on DFT bins, wide
        // enough for the Gaussian envelope to decay inside the window
        let n = 512usize;
        let dt = 2.0 * std::f64::consts::PI / (DELTA * 16.0);
        let delays: Vec<f64> = (0..n).map(|i| (i as f64 - n as f64 / 2.0) * dt).collect();
        let jsa = model_jsa(true);
        let intra = intra_pair_trace(&jsa, &delays).unwrap();
        let inter = inter_pair_trace(&heralded_density(&jsa), &delays).unwrap();
        let floor = DELTA / 2.0;
        let f_intra = dominant_frequency(&delays, &intra.probability, floor).unwrap();
        let f_inter = dominant_frequency(&delays, &inter.probability, floor).unwrap();
        assert_relative_eq!(f_inter, 2.0 * f_intra, epsilon = 1e-12);
        assert_relative_eq!(f_intra, DELTA, max_relative = 1e-12);
    }

    fn synthetic_counts(model: FitModel, p: [f64; 4], delays: &[f64]) -> Vec<f64> {
        delays.iter().map(|&t| model_counts(model, t, &p).0).collect()
    }

    #[test]
    fn noiseless_fit_recovers_parameters() {
        let delays = default_delays(0.5);
        let truth = [0.5, 4.0, 0.9, 1000.0];
        let counts = synthetic_counts(FitModel::IntraPi, truth, &delays);
        let fit = fit_trace(
            &delays,
            &counts,
            FitModel::IntraPi,
            FitGuess {
                sigma: 0.4,
                delta: 4.3,
                visibility: 0.7,
                baseline: 900.0,
            },
        )
        .unwrap();
        assert_relative_eq!(fit.sigma, truth[0], max_relative = 1e-6);
        assert_relative_eq!(fit.delta, truth[1], max_relative = 1e-6);
        assert_relative_eq!(fit.visibility, truth[2], max_relative = 1e-6);
        assert_relative_eq!(fit.baseline, truth[3], max_relative = 1e-6);
        assert!(fit.residual_norm < 1e-6);
    }

    #[test]
    fn wrong_model_inflates_residual() {
        let delays = default_delays(0.5);
        let truth = [0.5, 4.0, 1.0, 1000.0];
        let counts = synthetic_counts(FitModel::IntraZero, truth, &delays);
        let guess = FitGuess {
            sigma: 0.5,
            delta: 4.0,
            visibility: 0.9,
            baseline: 1000.0,
        };
        let right = fit_trace(&delays, &counts, FitModel::IntraZero, guess).unwrap();
        let wrong = fit_trace(&delays, &counts, FitModel::IntraPi, guess).unwrap();
        assert!(
            wrong.residual_norm > 10.0 * right.residual_norm.max(1e-9),
            "right {} wrong {}",
            right.residual_norm,
            wrong.residual_norm
        );
    }

    #[test]
    fn poisson_noise_fit_within_three_standard_errors() {
        let delays = default_delays(0.5);
        let truth = [0.5, 4.0, 0.9, 1000.0];
        let ideal = synthetic_counts(FitModel::IntraPi, truth, &delays);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        let mut ok = 0;
        let trials = 100;
        for _ in 0..trials {
            let noisy: Vec<f64> = ideal
                .iter()
                .map(|&m| Poisson::new(m.max(1e-9)).unwrap().sample(&mut rng))
                .collect();
            let fit = fit_trace(
                &delays,
                &noisy,
                FitModel::IntraPi,
                FitGuess {
                    sigma: 0.45,
                    delta: 4.1,
                    visibility: 0.8,
                    baseline: 950.0,
                },
            )
            .unwrap();
            let se = fit.covariance[(2, 2)].sqrt();
            if (fit.visibility - truth[2]).abs() <= 3.0 * se {
                ok += 1;
            }
        }
        assert!(ok >= 95, "{ok}/{trials} within 3 standard errors");
    }

    #[test]
    fn short_traces_rejected() {
        let delays: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let counts = vec![1.0; 5];
        let guess = FitGuess {
            sigma: 1.0,
            delta: 1.0,
            visibility: 1.0,
            baseline: 1.0,
        };
        assert!(fit_trace(&delays, &counts, FitModel::IntraPi, guess).is_err());
    }
}
