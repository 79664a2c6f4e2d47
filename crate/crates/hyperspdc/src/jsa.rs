//! Joint spectral amplitudes: assembly from PEF × PMF, Schmidt
//! decomposition, marginals, phase masks over measured intensities, and
//! low-rank denoising of noisy joint spectra.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::crystal::{phase_mismatch, pmf_analytic, DispersionModel};
use crate::error::{Error, Result};
use crate::spectra::{PumpEnvelope, SpectralAxis};

/// Two-photon amplitude f(ωs, ωi) on a signal × idler frequency grid,
/// normalized so Σ|f|²·Δωs·Δωi = 1.
#[derive(Debug, Clone)]
pub struct JointSpectralAmplitude {
    s_axis: SpectralAxis,
    i_axis: SpectralAxis,
    values: DMatrix<Complex64>,
}

impl JointSpectralAmplitude {
    /// Wraps and normalizes raw amplitudes (rows = signal, cols = idler).
    pub fn new(
        s_axis: SpectralAxis,
        i_axis: SpectralAxis,
        mut values: DMatrix<Complex64>,
    ) -> Result<Self> {
        if values.nrows() != s_axis.n_points() || values.ncols() != i_axis.n_points() {
            return Err(Error::Shape(format!(
                "values {}×{} vs axes {}×{}",
                values.nrows(),
                values.ncols(),
                s_axis.n_points(),
                i_axis.n_points()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Validation("non-finite JSA entry".into()));
        }
        let weight = s_axis.step() * i_axis.step();
        let norm2: f64 = values.iter().map(|v| v.norm_sqr()).sum::<f64>() * weight;
        if norm2 <= 0.0 {
            return Err(Error::DegenerateState(
                "all-zero joint spectral amplitude".into(),
            ));
        }
        values /= Complex64::new(norm2.sqrt(), 0.0);
        Ok(Self {
            s_axis,
            i_axis,
            values,
        })
    }

    pub fn s_axis(&self) -> &SpectralAxis {
        &self.s_axis
    }

    pub fn i_axis(&self) -> &SpectralAxis {
        &self.i_axis
    }

    pub fn values(&self) -> &DMatrix<Complex64> {
        &self.values
    }

    /// Grid cell weight Δωs·Δωi.
    pub fn cell_weight(&self) -> f64 {
        self.s_axis.step() * self.i_axis.step()
    }

    pub fn is_square_grid(&self) -> bool {
        self.s_axis == self.i_axis
    }

    /// Joint spectral intensity |f|² as discrete cell probabilities
    /// (sums to 1).
    pub fn jsi(&self) -> DMatrix<f64> {
        let w = self.cell_weight();
        self.values.map(|v| v.norm_sqr() * w)
    }
}

/// Assembles a JSA as the pointwise product of the pump envelope (evaluated
/// on the sum coordinate) and PMF values given on the same grid.
pub fn assemble_jsa(
    pef: &PumpEnvelope,
    pmf: &DMatrix<Complex64>,
    s_axis: &SpectralAxis,
    i_axis: &SpectralAxis,
) -> Result<JointSpectralAmplitude> {
    if pmf.nrows() != s_axis.n_points() || pmf.ncols() != i_axis.n_points() {
        return Err(Error::Shape(format!(
            "PMF {}×{} vs axes {}×{}",
            pmf.nrows(),
            pmf.ncols(),
            s_axis.n_points(),
            i_axis.n_points()
        )));
    }
    let mut values = DMatrix::zeros(s_axis.n_points(), i_axis.n_points());
    for (r, ws) in s_axis.values().enumerate() {
        for (c, wi) in i_axis.values().enumerate() {
            values[(r, c)] = pef.eval(ws + wi) * pmf[(r, c)];
        }
    }
    JointSpectralAmplitude::new(s_axis.clone(), i_axis.clone(), values)
}

/// Evaluates the analytic double-Gaussian PMF on a signal × idler grid
/// through a dispersion model.
pub fn pmf_grid_analytic(
    s_axis: &SpectralAxis,
    i_axis: &SpectralAxis,
    model: &DispersionModel,
    dk0: f64,
    epsilon: f64,
    xi: f64,
) -> Result<DMatrix<Complex64>> {
    let mut out = DMatrix::zeros(s_axis.n_points(), i_axis.n_points());
    for (r, ws) in s_axis.values().enumerate() {
        for (c, wi) in i_axis.values().enumerate() {
            let dk = phase_mismatch(ws, wi, model)?;
            out[(r, c)] = pmf_analytic(&[dk], dk0, epsilon, xi)?[0];
        }
    }
    Ok(out)
}

/// Schmidt decomposition of a JSA.
#[derive(Debug, Clone)]
pub struct SchmidtResult {
    /// Non-negative singular values, descending, of the grid-weighted
    /// amplitude matrix.
    pub singular_values: Vec<f64>,
    /// Normalized squared coefficients λ (sum to 1).
    pub lambdas: Vec<f64>,
    /// Schmidt number K = 1/Σλ².
    pub schmidt_number: f64,
    /// Purity P = 1/K.
    pub purity: f64,
    /// Orthonormal signal mode functions (columns).
    pub signal_modes: DMatrix<Complex64>,
    /// Orthonormal idler mode functions (columns).
    pub idler_modes: DMatrix<Complex64>,
}

fn schmidt_of_matrix(a: &DMatrix<Complex64>) -> Result<SchmidtResult> {
    if a.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Validation("non-finite entry".into()));
    }
    let svd = nalgebra::linalg::SVD::new(a.clone(), true, true);
    let mut sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
    // nalgebra returns them sorted descending already, but do not rely on it
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[j].partial_cmp(&sv[i]).unwrap());
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let total: f64 = sv.iter().map(|s| s * s).sum();
    if total <= 0.0 {
        return Err(Error::DegenerateState("zero matrix".into()));
    }
    let lambdas: Vec<f64> = sv.iter().map(|s| s * s / total).collect();
    let sum_sq: f64 = lambdas.iter().map(|l| l * l).sum();
    let k = 1.0 / sum_sq;
    let u = svd.u.expect("requested");
    let vt = svd.v_t.expect("requested");
    let mut signal_modes = DMatrix::zeros(u.nrows(), u.ncols());
    let mut idler_modes = DMatrix::zeros(vt.ncols(), vt.nrows());
    for (new, &old) in order.iter().enumerate() {
        signal_modes.set_column(new, &u.column(old));
        for r in 0..vt.ncols() {
            idler_modes[(r, new)] = vt[(old, r)].conj();
        }
    }
    Ok(SchmidtResult {
        singular_values: sv,
        lambdas,
        schmidt_number: k,
        purity: 1.0 / k,
        signal_modes,
        idler_modes,
    })
}

/// Schmidt decomposition of the complex JSA (simulation-side path).
///
/// Grid-spacing weights are folded in so K is resolution-independent.
pub fn schmidt_decompose(jsa: &JointSpectralAmplitude) -> Result<SchmidtResult> {
    let w = jsa.cell_weight().sqrt();
    let a = jsa.values.map(|v| v * w);
    schmidt_of_matrix(&a)
}

/// Schmidt decomposition of √JSI (experimental-side path): operates on the
/// entrywise square root of a non-negative intensity matrix.
pub fn schmidt_of_sqrt_jsi(jsi: &DMatrix<f64>) -> Result<SchmidtResult> {
    if jsi.iter().any(|&v| v < 0.0) {
        return Err(Error::Validation("negative JSI entry".into()));
    }
    let a = jsi.map(|v| Complex64::new(v.sqrt(), 0.0));
    schmidt_of_matrix(&a)
}

/// Phase mask applied when promoting a measured JSI to an amplitude.
#[derive(Debug, Clone)]
pub enum PhaseMask {
    /// θ = π for ωs > ωi, 0 otherwise — the designed PMF sign structure.
    PiAboveDiagonal,
    Zero,
    Custom(DMatrix<f64>),
}

/// Builds a JSA from a measured intensity: f = e^{iθ}·√JSI.
pub fn jsa_from_jsi(
    jsi: &DMatrix<f64>,
    mask: &PhaseMask,
    s_axis: &SpectralAxis,
    i_axis: &SpectralAxis,
) -> Result<JointSpectralAmplitude> {
    if jsi.iter().any(|&v| v < 0.0) {
        return Err(Error::Validation("negative JSI entry".into()));
    }
    if jsi.nrows() != s_axis.n_points() || jsi.ncols() != i_axis.n_points() {
        return Err(Error::Shape(format!(
            "JSI {}×{} vs axes {}×{}",
            jsi.nrows(),
            jsi.ncols(),
            s_axis.n_points(),
            i_axis.n_points()
        )));
    }
    let theta = |r: usize, c: usize| -> f64 {
        match mask {
            PhaseMask::Zero => 0.0,
            PhaseMask::PiAboveDiagonal => {
                if s_axis.value(r) > i_axis.value(c) {
                    std::f64::consts::PI
                } else {
                    0.0
                }
            }
            PhaseMask::Custom(m) => m[(r, c)],
        }
    };
    if let PhaseMask::Custom(m) = mask {
        if m.nrows() != jsi.nrows() || m.ncols() != jsi.ncols() {
            return Err(Error::Shape("custom mask shape mismatch".into()));
        }
    }
    let values = DMatrix::from_fn(jsi.nrows(), jsi.ncols(), |r, c| {
        Complex64::from_polar(jsi[(r, c)].sqrt(), theta(r, c))
    });
    JointSpectralAmplitude::new(s_axis.clone(), i_axis.clone(), values)
}

/// Result of low-rank denoising.
#[derive(Debug, Clone)]
pub struct DenoisedJsi {
    pub jsi: DMatrix<f64>,
    /// Set when the requested rank exceeded the matrix dimension and was
    /// capped.
    pub rank_capped: bool,
}

/// Noise correction by truncating √JSI to its top `rank` singular triplets,
/// squaring, and renormalizing; negative reconstruction artifacts are
/// clipped to zero.
pub fn denoise_lowrank(jsi: &DMatrix<f64>, rank: usize) -> Result<DenoisedJsi> {
    if rank == 0 {
        return Err(Error::Validation("rank must be at least 1".into()));
    }
    if jsi.iter().any(|&v| v < 0.0) {
        return Err(Error::Validation("negative JSI entry".into()));
    }
    let max_rank = jsi.nrows().min(jsi.ncols());
    let (rank, rank_capped) = if rank > max_rank {
        (max_rank, true)
    } else {
        (rank, false)
    };
    // Truncate via the eigendecomposition of the Gram matrix; the bidiagonal
    // SVD in nalgebra can silently misconverge on exactly rank-deficient
    // inputs. With √JSI·v_k = s_k·u_k the rank-r projection is
    // Σ_k (√JSI·v_k)·v_kᵀ, no singular values needed.
    let sqrt = jsi.map(|v| v.sqrt());
    let mut gram = sqrt.transpose() * &sqrt;
    let scale = gram.norm();
    if scale > 0.0 {
        gram /= scale;
    }
    // Ridge keeps the tridiagonalization away from the exactly zero
    // rows an underflowed JSI produces, which otherwise derail the QL
    // iteration into inf/NaN eigenvalues.
    for d in 0..gram.nrows() {
        gram[(d, d)] += 1e-14;
    }
    let eig = nalgebra::linalg::SymmetricEigen::new(gram);
    let key = |i: usize| -> f64 {
        let v = eig.eigenvalues[i];
        if v.is_finite() {
            v
        } else {
            f64::NEG_INFINITY
        }
    };
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| key(j).total_cmp(&key(i)));
    let mut recon = DMatrix::<f64>::zeros(jsi.nrows(), jsi.ncols());
    for &k in order.iter().take(rank) {
        let v = eig.eigenvectors.column(k);
        let uv = &sqrt * v;
        for r in 0..jsi.nrows() {
            for c in 0..jsi.ncols() {
                recon[(r, c)] += uv[r] * v[c];
            }
        }
    }
    recon.apply(|v| *v = v.max(0.0));
    let mut out = recon.map(|v| v * v);
    let total: f64 = out.iter().sum();
    if total > 0.0 {
        let input_total: f64 = jsi.iter().sum();
        out *= input_total / total;
    }
    Ok(DenoisedJsi {
        jsi: out,
        rank_capped,
    })
}

/// Marginal intensity distributions (signal, idler); each sums to 1.
pub fn marginals(jsa: &JointSpectralAmplitude) -> (Vec<f64>, Vec<f64>) {
    let jsi = jsa.jsi();
    let signal: Vec<f64> = (0..jsi.nrows()).map(|r| jsi.row(r).sum()).collect();
    let idler: Vec<f64> = (0..jsi.ncols()).map(|c| jsi.column(c).sum()).collect();
    (signal, idler)
}

/// Parameters of the Gaussian-model JSA: double-Gaussian pump envelope
/// (peaks at 2ω₀ ± δ_pump) times double-Gaussian PMF in ωs − ωi
/// (peaks at ±δ).
#[derive(Debug, Clone, Copy)]
pub struct GaussianModel {
    /// Degenerate signal/idler frequency ω₀ (rad/ps).
    pub omega0: f64,
    /// Frequency-bin half-separation δ (rad/ps).
    pub delta: f64,
    /// Bin width σ (rad/ps).
    pub sigma: f64,
    /// Relative phase between the two PMF Gaussians: π (antisymmetric
    /// design) or 0 (symmetric).
    pub pi_phase: bool,
}

/// Builds the four-bin Gaussian-model JSA on a square grid.
///
/// With `pi_phase`, the PMF is the difference of Gaussians at ωs−ωi = ±δ
/// (the engineered crystal); without, their sum.
pub fn gaussian_model_jsa(
    axis: &SpectralAxis,
    model: GaussianModel,
) -> Result<JointSpectralAmplitude> {
    let GaussianModel {
        omega0,
        delta,
        sigma,
        pi_phase,
    } = model;
    if !(sigma > 0.0 && delta > 0.0) {
        return Err(Error::Validation(format!(
            "delta = {delta}, sigma = {sigma} must be positive"
        )));
    }
    let two_s2 = 2.0 * sigma * sigma;
    let n = axis.n_points();
    let mut values = DMatrix::zeros(n, n);
    for (r, ws) in axis.values().enumerate() {
        for (c, wi) in axis.values().enumerate() {
            let sum = ws + wi - 2.0 * omega0;
            let pef = (-(sum - delta).powi(2) / two_s2).exp()
                + (-(sum + delta).powi(2) / two_s2).exp();
            let d = ws - wi;
            let sign = if pi_phase { -1.0 } else { 1.0 };
            let pmf =
                (-(d - delta).powi(2) / two_s2).exp() + sign * (-(d + delta).powi(2) / two_s2).exp();
            values[(r, c)] = Complex64::new(pef * pmf, 0.0);
        }
    }
    JointSpectralAmplitude::new(axis.clone(), axis.clone(), values)
}
