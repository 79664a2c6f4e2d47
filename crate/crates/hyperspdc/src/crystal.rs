//! Crystal-side spectral engineering: target nonlinearity profiles,
//! sub-coherence-length poling synthesis, and phase-matching-function
//! evaluation from either the analytic target or a realized poling pattern.
//!
//! Conventions: crystal coordinate z in mm over [0, L]; the nonlinearity
//! target is sampled in centered coordinates zc = z − L/2. Wavevectors in
//! rad/mm. The realized PMF of a domain pattern d(z) = ±1 is
//! φ(Δk) = ∫₀ᴸ d(z) e^{iΔk z} dz, so it carries the linear phase e^{iΔk L/2}
//! relative to the centered analytic form.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::units::C_MM_PER_PS;

/// Complex nonlinearity profile g(z) sampled on a uniform centered z-grid,
/// the Fourier partner of a double-Gaussian phase-matching function.
#[derive(Debug, Clone)]
pub struct NonlinearityTarget {
    /// Crystal length (mm).
    pub length_mm: f64,
    /// Design phase mismatch Δk₀ (rad/mm).
    pub dk0: f64,
    /// Gaussian separation ε in wavevector space (rad/mm).
    pub epsilon: f64,
    /// Gaussian width ξ (rad/mm).
    pub xi: f64,
    /// Centered z positions (mm), uniform, spanning ±L/2.
    pub z_centered: Vec<f64>,
    /// g(z) samples, carrier included.
    pub g_samples: Vec<Complex64>,
}

impl NonlinearityTarget {
    /// Wraps externally supplied samples. `dk0` identifies the carrier used
    /// for demodulation during poling synthesis.
    pub fn from_samples(length_mm: f64, dk0: f64, g_samples: Vec<Complex64>) -> Result<Self> {
        if g_samples.len() < 2 {
            return Err(Error::InvalidCrystal("need at least 2 samples".into()));
        }
        let n = g_samples.len();
        let z_centered = (0..n)
            .map(|i| -length_mm / 2.0 + length_mm * i as f64 / (n - 1) as f64)
            .collect();
        Ok(Self {
            length_mm,
            dk0,
            epsilon: 0.0,
            xi: 0.0,
            z_centered,
            g_samples,
        })
    }

    /// Complex envelope with the e^{iΔk₀ zc} carrier removed.
    pub fn envelope(&self) -> Vec<Complex64> {
        self.z_centered
            .iter()
            .zip(&self.g_samples)
            .map(|(&zc, &g)| g * Complex64::from_polar(1.0, -self.dk0 * zc))
            .collect()
    }
}

/// Samples g(z) = i √(2/π) sin(εz/2) exp(iΔk₀z − ξ²z²/2) on a centered
/// uniform grid of `n_z` points spanning the crystal.
pub fn target_nonlinearity(
    length_mm: f64,
    dk0: f64,
    epsilon: f64,
    xi: f64,
    n_z: usize,
) -> Result<NonlinearityTarget> {
    if !(length_mm > 0.0 && epsilon > 0.0 && xi > 0.0) {
        return Err(Error::InvalidCrystal(format!(
            "L = {length_mm}, ε = {epsilon}, ξ = {xi} must all be positive"
        )));
    }
    if n_z < 1000 {
        return Err(Error::InvalidCrystal(format!(
            "n_z = {n_z}, need at least 1000 to resolve the coherence structure"
        )));
    }
    let z_centered: Vec<f64> = (0..n_z)
        .map(|i| -length_mm / 2.0 + length_mm * i as f64 / (n_z - 1) as f64)
        .collect();
    let amp = (2.0 / PI).sqrt();
    let g_samples = z_centered
        .iter()
        .map(|&z| {
            let envelope = amp * (epsilon * z / 2.0).sin() * (-xi * xi * z * z / 2.0).exp();
            Complex64::new(0.0, envelope) * Complex64::from_polar(1.0, dk0 * z)
        })
        .collect();
    Ok(NonlinearityTarget {
        length_mm,
        dk0,
        epsilon,
        xi,
        z_centered,
        g_samples,
    })
}

/// Evaluates the analytic double-Gaussian PMF
/// φ(Δk) = [exp(−(Δk−Δk₀−ε/2)²/2ξ²) − exp(−(Δk−Δk₀+ε/2)²/2ξ²)] / (√(2π)ξ).
pub fn pmf_analytic(dk_grid: &[f64], dk0: f64, epsilon: f64, xi: f64) -> Result<Vec<Complex64>> {
    if !(xi > 0.0) {
        return Err(Error::InvalidCrystal(format!("ξ = {xi} must be positive")));
    }
    let norm = 1.0 / ((2.0 * PI).sqrt() * xi);
    Ok(dk_grid
        .iter()
        .map(|&dk| {
            let plus = (-(dk - dk0 - epsilon / 2.0).powi(2) / (2.0 * xi * xi)).exp();
            let minus = (-(dk - dk0 + epsilon / 2.0).powi(2) / (2.0 * xi * xi)).exp();
            Complex64::new(norm * (plus - minus), 0.0)
        })
        .collect())
}

/// Ferroelectric domain pattern: boundaries 0 = z₀ < z₁ < … < zₙ = L with a
/// ±1 nonlinearity sign per domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolingPattern {
    pub boundaries: Vec<f64>,
    pub signs: Vec<i8>,
}

impl PolingPattern {
    pub fn validate(&self) -> Result<()> {
        if self.boundaries.len() != self.signs.len() + 1 {
            return Err(Error::InvalidCrystal(format!(
                "{} boundaries for {} domains",
                self.boundaries.len(),
                self.signs.len()
            )));
        }
        if self.boundaries.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidCrystal(
                "boundaries not strictly increasing".into(),
            ));
        }
        if self.signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidCrystal("signs must be ±1".into()));
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        self.boundaries[self.boundaries.len() - 1] - self.boundaries[0]
    }

    pub fn min_domain(&self) -> f64 {
        self.boundaries
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_domain(&self) -> f64 {
        self.boundaries
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    pub fn n_domains(&self) -> usize {
        self.signs.len()
    }
}

/// Greedy sub-coherence-length tracking of a target nonlinearity profile.
///
/// Walks the crystal in fine steps, keeping the cumulative demodulated
/// amplitude E(z) = ∫₀ᶻ d(z′) e^{−iΔk₀z′} dz′ close to the cumulative target
/// envelope (scaled by 2/π, the first-order QPM limit for ±1 domains). A
/// sign flip is only allowed once the current domain has reached
/// `min_domain_mm`.
pub fn synthesize_poling(
    target: &NonlinearityTarget,
    min_domain_mm: f64,
    base_period_mm: f64,
) -> Result<PolingPattern> {
    if !(min_domain_mm > 0.0) || min_domain_mm >= base_period_mm / 2.0 {
        return Err(Error::InvalidCrystal(format!(
            "min_domain = {min_domain_mm} mm must be positive and below base_period/2 = {}",
            base_period_mm / 2.0
        )));
    }
    let length = target.length_mm;
    let dk0 = target.dk0;

    // Demodulated envelope, normalized to unit peak; zero targets collapse
    // to a single unpoled domain.
    let envelope = target.envelope();
    let peak = envelope.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(PolingPattern {
            boundaries: vec![0.0, length],
            signs: vec![1],
        });
    }
    let env_at = |z: f64| -> Complex64 {
        // linear interpolation on the centered grid
        let zc = z - length / 2.0;
        let n = envelope.len();
        let pos = (zc + length / 2.0) / length * (n - 1) as f64;
        let i = (pos.floor() as usize).min(n - 2);
        let frac = pos - i as f64;
        (envelope[i] * (1.0 - frac) + envelope[i + 1] * frac) / peak
    };

    // Fine walking step: well below both the coherence length and the
    // minimum domain size.
    let base_step = (base_period_mm / 64.0).min(min_domain_mm / 8.0);
    let track_scale = 2.0 / PI;

    // Greedy walk over [0, walk_len] with the QPM carrier referenced to the
    // walk origin; returns (boundaries, signs, max tracking error).
    let walk = |walk_len: f64, env: &dyn Fn(f64) -> Complex64| -> (Vec<f64>, Vec<i8>, f64) {
        let n_steps = (walk_len / base_step).ceil() as usize;
        let step = walk_len / n_steps as f64;
        let mut boundaries = vec![0.0];
        let mut signs: Vec<i8> = Vec::new();
        let mut cum_err = Complex64::new(0.0, 0.0); // E(z) − T(z)
        let mut current_sign: i8 = 1;
        let mut domain_len = 0.0;
        let mut max_err = 0.0f64;

        // First step decides the opening sign.
        let mut first = true;
        for i in 0..n_steps {
            let z = i as f64 * step;
            // increment of E for one step with sign s
            let de = {
                let a = Complex64::from_polar(1.0, -dk0 * (z + step));
                let b = Complex64::from_polar(1.0, -dk0 * z);
                (a - b) / Complex64::new(0.0, -dk0)
            };
            // increment of T over the step (midpoint rule)
            let dt = env(z + step / 2.0) * track_scale * step;
            let err_keep = cum_err + de * (current_sign as f64) - dt;
            let chosen = if first {
                first = false;
                let err_flip = cum_err - de * (current_sign as f64) - dt;
                if err_flip.norm() < err_keep.norm() {
                    current_sign = -current_sign;
                    err_flip
                } else {
                    err_keep
                }
            } else if domain_len >= min_domain_mm - 1e-12 {
                let err_flip = cum_err - de * (current_sign as f64) - dt;
                if err_flip.norm() < err_keep.norm() {
                    boundaries.push(z);
                    signs.push(current_sign);
                    current_sign = -current_sign;
                    domain_len = 0.0;
                    err_flip
                } else {
                    err_keep
                }
            } else {
                err_keep
            };
            cum_err = chosen;
            domain_len += step;
            max_err = max_err.max(cum_err.norm());
        }
        boundaries.push(walk_len);
        signs.push(current_sign);

        // If the last domain came out shorter than min_domain, merge it into
        // its neighbour.
        if signs.len() > 1 {
            let n = boundaries.len();
            if boundaries[n - 1] - boundaries[n - 2] < min_domain_mm {
                boundaries.remove(n - 2);
                signs.pop();
            }
        }
        (boundaries, signs, max_err)
    };

    // An odd target envelope (the engineered double-Gaussian PMF) has a
    // first-order polarity pattern d ∝ −sin(Δk₀ z_c)·A(z_c) that is even
    // about the crystal centre: walk the right half with the carrier
    // referenced to the centre and mirror it. The even pattern makes the
    // centred PMF purely real, so the antinode phase difference is exactly
    // π; a single full walk realizes the envelope slightly translated,
    // which tilts the spectral phase instead.
    let odd = envelope
        .iter()
        .zip(envelope.iter().rev())
        .all(|(a, b)| (a + b).norm() <= 1e-6 * peak);

    let (pattern, max_err) = if odd && length / 2.0 > min_domain_mm {
        let half = length / 2.0;
        let (hb, hs, max_err) = walk(half, &|z| env_at(half + z));
        let inner = &hb[1..hb.len() - 1];
        let mut boundaries: Vec<f64> = vec![0.0];
        boundaries.extend(inner.iter().rev().map(|&b| half - b));
        boundaries.extend(inner.iter().map(|&b| half + b));
        boundaries.push(length);
        let mut signs: Vec<i8> = hs[1..].iter().rev().copied().collect();
        signs.extend(&hs);
        (PolingPattern { boundaries, signs }, max_err)
    } else {
        let (boundaries, signs, max_err) = walk(length, &env_at);
        (PolingPattern { boundaries, signs }, max_err)
    };
    pattern.validate()?;

    // Sanity bound on the tracking error: the cumulative target has total
    // magnitude ≲ (2/π)·L·mean|ĝ|; if the walk lost track badly, the caller
    // gets a synthesis error with the achieved figure.
    let budget = track_scale * length;
    if max_err > 0.5 * budget {
        return Err(Error::PolingSynthesis {
            reason: format!(
                "min_domain = {min_domain_mm} mm too coarse to track the profile \
                 (tracking error {max_err:.3} vs budget {budget:.3})"
            ),
            fidelity: 1.0 - max_err / budget,
        });
    }
    Ok(pattern)
}

/// Exact PMF of a domain pattern: φ(Δk) = Σⱼ sⱼ (e^{iΔk z_{j+1}} − e^{iΔk zⱼ})/(iΔk).
///
/// Closed form per domain, no quadrature error; Δk = 0 uses the analytic
/// limit sⱼ(z_{j+1} − zⱼ).
pub fn pmf_from_poling(pattern: &PolingPattern, dk_grid: &[f64]) -> Result<Vec<Complex64>> {
    pattern.validate()?;
    let mut out = Vec::with_capacity(dk_grid.len());
    for &dk in dk_grid {
        let mut acc = Complex64::new(0.0, 0.0);
        if dk == 0.0 {
            for (j, &s) in pattern.signs.iter().enumerate() {
                acc += Complex64::new(
                    s as f64 * (pattern.boundaries[j + 1] - pattern.boundaries[j]),
                    0.0,
                );
            }
        } else {
            let idk = Complex64::new(0.0, dk);
            // e^{iΔk z_{j+1}} of one domain is e^{iΔk z_j} of the next;
            // evaluate each boundary exponential once.
            let mut prev = Complex64::from_polar(1.0, dk * pattern.boundaries[0]);
            for (j, &s) in pattern.signs.iter().enumerate() {
                let next = Complex64::from_polar(1.0, dk * pattern.boundaries[j + 1]);
                acc += (next - prev) / idk * (s as f64);
                prev = next;
            }
        }
        out.push(acc);
    }
    Ok(out)
}

/// PMF of a pattern with the e^{iΔk L/2} offset phase removed, directly
/// comparable to the centered analytic form.
pub fn pmf_from_poling_centered(pattern: &PolingPattern, dk_grid: &[f64]) -> Result<Vec<Complex64>> {
    let raw = pmf_from_poling(pattern, dk_grid)?;
    let mid = (pattern.boundaries[0] + pattern.boundaries[pattern.boundaries.len() - 1]) / 2.0;
    Ok(raw
        .into_iter()
        .zip(dk_grid)
        .map(|(v, &dk)| v * Complex64::from_polar(1.0, -dk * mid))
        .collect())
}

/// Dispersion model mapping photon frequencies to the phase mismatch Δk.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DispersionModel {
    /// Linearized symmetric group-velocity matching around the degenerate
    /// point: Δk = Δk₀ + a(ωs − ωs°) − a(ωi − ωi°).
    LinearizedGvm {
        /// Design phase mismatch (rad/mm).
        dk0: f64,
        /// Group-velocity-mismatch slope a (rad/mm per rad/ps).
        slope: f64,
        /// Degenerate signal/idler angular frequency (rad/ps).
        degenerate_omega: f64,
        /// Half-width of the validity window around the degenerate point (rad/ps).
        valid_half_width: f64,
    },
    /// k_p(ωs+ωi) − k_s(ωs) − k_i(ωi) − 2π/Λ from user-supplied refractive
    /// index polynomials n(ω) = Σ c_m (ω − ω_ref)^m per polarisation.
    SellmeierTable {
        /// Reference angular frequency for the signal/idler polynomials (rad/ps).
        omega_ref: f64,
        /// Index polynomial coefficients for the pump (referenced to 2·omega_ref).
        n_pump: Vec<f64>,
        /// Index polynomial coefficients for the signal.
        n_signal: Vec<f64>,
        /// Index polynomial coefficients for the idler.
        n_idler: Vec<f64>,
        /// Poling period Λ (mm).
        period_mm: f64,
        /// Half-width of the validity window around omega_ref (rad/ps).
        valid_half_width: f64,
    },
}

impl DispersionModel {
    /// Degenerate design wavelength (nm).
    pub fn degenerate_wavelength_nm(&self) -> f64 {
        match self {
            DispersionModel::LinearizedGvm {
                degenerate_omega, ..
            } => crate::units::wavelength_nm(*degenerate_omega),
            DispersionModel::SellmeierTable { omega_ref, .. } => {
                crate::units::wavelength_nm(*omega_ref)
            }
        }
    }
}

fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Phase mismatch Δk(ωs, ωi) in rad/mm.
pub fn phase_mismatch(omega_s: f64, omega_i: f64, model: &DispersionModel) -> Result<f64> {
    match model {
        DispersionModel::LinearizedGvm {
            dk0,
            slope,
            degenerate_omega,
            valid_half_width,
        } => {
            let ds = omega_s - degenerate_omega;
            let di = omega_i - degenerate_omega;
            if ds.abs() > *valid_half_width || di.abs() > *valid_half_width {
                return Err(Error::DispersionRange(format!(
                    "(ωs, ωi) = ({omega_s}, {omega_i}) outside ±{valid_half_width} around {degenerate_omega}"
                )));
            }
            Ok(dk0 + slope * ds - slope * di)
        }
        DispersionModel::SellmeierTable {
            omega_ref,
            n_pump,
            n_signal,
            n_idler,
            period_mm,
            valid_half_width,
        } => {
            let ds = omega_s - omega_ref;
            let di = omega_i - omega_ref;
            if ds.abs() > *valid_half_width || di.abs() > *valid_half_width {
                return Err(Error::DispersionRange(format!(
                    "(ωs, ωi) = ({omega_s}, {omega_i}) outside ±{valid_half_width} around {omega_ref}"
                )));
            }
            let omega_p = omega_s + omega_i;
            let k = |coeffs: &[f64], omega: f64, x: f64| poly_eval(coeffs, x) * omega / C_MM_PER_PS;
            let k_p = k(n_pump, omega_p, omega_p - 2.0 * omega_ref);
            let k_s = k(n_signal, omega_s, ds);
            let k_i = k(n_idler, omega_i, di);
            Ok(k_p - k_s - k_i - 2.0 * PI / period_mm)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    // Paper-scale design: L = 30 mm, period ≈ 23 µm, ξ = 4/L, ε ≈ 1.331 /mm.
    pub(crate) const L: f64 = 30.0;
    pub(crate) const PERIOD: f64 = 0.023;
    pub(crate) const EPSILON: f64 = 1.331;
    const XI: f64 = 4.0 / L;

    fn dk0() -> f64 {
        2.0 * PI / PERIOD
    }

    #[test]
    fn target_center_is_zero() {
        let t = target_nonlinearity(L, dk0(), EPSILON, XI, 30001).unwrap();
        // odd number of samples puts one exactly at z = 0
        let mid = t.g_samples[15000];
        assert_abs_diff_eq!(mid.norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn target_envelope_symmetric() {
        let t = target_nonlinearity(L, dk0(), EPSILON, XI, 10001).unwrap();
        let n = t.g_samples.len();
        for i in 0..n {
            let a = t.g_samples[i].norm();
            let b = t.g_samples[n - 1 - i].norm();
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn target_envelope_maxima_symmetric_pair() {
        let t = target_nonlinearity(L, dk0(), EPSILON, XI, 60001).unwrap();
        let norms: Vec<f64> = t.g_samples.iter().map(|g| g.norm()).collect();
        let imax = norms
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        let z_max = t.z_centered[imax].abs();
        // the mirrored position carries the same envelope value
        let mirrored = norms[t.g_samples.len() - 1 - imax];
        assert_relative_eq!(norms[imax], mirrored, max_relative = 1e-9);
        // maximum of |sin(εz/2)|e^{−ξ²z²/2}: solves (ε/2)cot(εz/2) = ξ²z
        let f = |z: f64| (EPSILON / 2.0) * (EPSILON * z / 2.0).cos()
            * (-XI * XI * z * z / 2.0).exp()
            - XI * XI * z * (EPSILON * z / 2.0).sin() * (-XI * XI * z * z / 2.0).exp();
        // bisect on [0.1, L/2]
        let (mut lo, mut hi) = (0.1, 4.0 / EPSILON * 1.1);
        for _ in 0..200 {
            let m = (lo + hi) / 2.0;
            if f(lo) * f(m) <= 0.0 {
                hi = m;
            } else {
                lo = m;
            }
        }
        assert_relative_eq!(z_max, (lo + hi) / 2.0, max_relative = 1e-3);
    }

    #[test]
    fn pmf_analytic_antisymmetry() {
        let d = dk0();
        let offsets = [0.0, 0.1, 0.33, 0.8, 1.5];
        for &x in &offsets {
            let v = pmf_analytic(&[d + x, d - x], d, EPSILON, XI).unwrap();
            assert_abs_diff_eq!((v[0] + v[1]).norm(), 0.0, epsilon = 1e-15);
        }
        // direct evaluation at Δk0 + ε/2
        let v = pmf_analytic(&[d + EPSILON / 2.0], d, EPSILON, XI).unwrap();
        let expected = (1.0 - (-EPSILON * EPSILON / (2.0 * XI * XI)).exp())
            / ((2.0 * PI).sqrt() * XI);
        assert_relative_eq!(v[0].re, expected, max_relative = 1e-14);
    }

    #[test]
    fn fourier_duality_target_vs_analytic() {
        // numerical FT of g(z) against the analytic PMF, relative L2 < 1e-6.
        // The window is stretched to 4L so the Gaussian tail (e^{−2} at ±L/2
        // for the physical crystal) has decayed and the finite transform
        // approximates the infinite one.
        let t = target_nonlinearity(4.0 * L, dk0(), EPSILON, XI, 160001).unwrap();
        let dz = t.z_centered[1] - t.z_centered[0];
        let dk_grid: Vec<f64> = (0..801)
            .map(|i| dk0() - 2.0 + 4.0 * i as f64 / 800.0)
            .collect();
        let analytic = pmf_analytic(&dk_grid, dk0(), EPSILON, XI).unwrap();
        let mut ft = Vec::with_capacity(dk_grid.len());
        for &dk in &dk_grid {
            let mut acc = Complex64::new(0.0, 0.0);
            for (&z, &g) in t.z_centered.iter().zip(&t.g_samples) {
                acc += g * Complex64::from_polar(1.0, -dk * z);
            }
            ft.push(acc * dz);
        }
        // compare after normalizing both to unit L2
        let n2 = |v: &[Complex64]| v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let (na, nf) = (n2(&analytic), n2(&ft));
        let mut diff = 0.0;
        for (a, f) in analytic.iter().zip(&ft) {
            diff += (a / na - f / nf).norm_sqr();
        }
        assert!(diff.sqrt() < 1e-6, "relative L2 {}", diff.sqrt());
    }

    #[test]
    fn single_domain_is_sinc() {
        let p = PolingPattern {
            boundaries: vec![0.0, L],
            signs: vec![1],
        };
        let dks = [0.0, 0.05, 0.11, 0.4];
        let v = pmf_from_poling(&p, &dks).unwrap();
        for (&dk, val) in dks.iter().zip(&v) {
            let expected = if dk == 0.0 {
                L
            } else {
                L * (dk * L / 2.0).sin() / (dk * L / 2.0)
            };
            assert_relative_eq!(val.norm(), expected.abs(), max_relative = 1e-12);
        }
    }

    #[test]
    fn periodic_pattern_peaks_at_first_qpm_order() {
        let period = 0.1;
        let n = (L / (period / 2.0)) as usize;
        let mut boundaries = vec![0.0];
        let mut signs = Vec::new();
        for j in 0..n {
            boundaries.push((j + 1) as f64 * period / 2.0);
            signs.push(if j % 2 == 0 { 1 } else { -1 });
        }
        let p = PolingPattern { boundaries, signs };
        let dk_grid: Vec<f64> = (0..4001).map(|i| 20.0 + 80.0 * i as f64 / 4000.0).collect();
        let v = pmf_from_poling(&p, &dk_grid).unwrap();
        let imax = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
            .unwrap()
            .0;
        assert_relative_eq!(dk_grid[imax], 2.0 * PI / period, max_relative = 1e-2);
    }

    #[test]
    fn poling_exactness_vs_quadrature() {
        // closed form vs high-resolution quadrature of the step function
        let t = target_nonlinearity(L, dk0(), EPSILON, XI, 20000).unwrap();
        let p = synthesize_poling(&t, 0.009, PERIOD).unwrap();
        let dks = [dk0() - 0.7, dk0(), dk0() + 0.7, 10.0];
        let exact = pmf_from_poling(&p, &dks).unwrap();
        for (&dk, val) in dks.iter().zip(&exact) {
            let mut acc = Complex64::new(0.0, 0.0);
            let n_q = 4_000_000usize;
            let h = L / n_q as f64;
            let mut j = 0usize;
            for i in 0..n_q {
                let z = (i as f64 + 0.5) * h;
                while z > p.boundaries[j + 1] {
                    j += 1;
                }
                acc += Complex64::from_polar(p.signs[j] as f64, dk * z);
            }
            acc *= h;
            assert!(
                (acc - val).norm() < 1e-4 * L,
                "quadrature mismatch at dk {dk}: {}",
                (acc - val).norm()
            );
        }
    }

    #[test]
    fn constant_envelope_gives_periodic_qpm() {
        // constant envelope target → standard periodic QPM at the base period
        let d = dk0();
        let n = 20000;
        let samples: Vec<Complex64> = (0..n)
            .map(|i| {
                let zc = -L / 2.0 + L * i as f64 / (n - 1) as f64;
                Complex64::from_polar(1.0, d * zc)
            })
            .collect();
        let t = NonlinearityTarget::from_samples(L, d, samples).unwrap();
        let p = synthesize_poling(&t, 0.009, PERIOD).unwrap();
        // average realized period across the bulk
        let widths: Vec<f64> = p.boundaries.windows(2).map(|w| w[1] - w[0]).collect();
        let mean_width = widths.iter().sum::<f64>() / widths.len() as f64;
        assert_relative_eq!(2.0 * mean_width, PERIOD, max_relative = 0.05);
        assert!(p.min_domain() >= 0.009 - 1e-12);
    }

    #[test]
    fn zero_target_single_domain() {
        let n = 2000;
        let samples = vec![Complex64::new(0.0, 0.0); n];
        let t = NonlinearityTarget::from_samples(L, dk0(), samples).unwrap();
        let p = synthesize_poling(&t, 0.009, PERIOD).unwrap();
        assert_eq!(p.n_domains(), 1);
    }

    #[test]
    fn antinode_phase_difference_is_pi() {
        let t = target_nonlinearity(L, dk0(), EPSILON, XI, 60001).unwrap();
        let p = synthesize_poling(&t, 0.009, PERIOD).unwrap();
        let at = |dk: f64| pmf_from_poling_centered(&p, &[dk]).unwrap()[0];
        let hi = at(dk0() + EPSILON / 2.0);
        let lo = at(dk0() - EPSILON / 2.0);
        let diff = (hi / lo).arg().abs();
        assert_abs_diff_eq!(diff, PI, epsilon = 1e-2);
    }

    #[test]
    fn min_domain_respected_and_too_coarse_rejected() {
        let t = target_nonlinearity(L, dk0(), EPSILON, XI, 20000).unwrap();
        let p = synthesize_poling(&t, 0.009, PERIOD).unwrap();
        assert!(p.min_domain() >= 0.009 - 1e-12);
        assert!(synthesize_poling(&t, 0.012, PERIOD).is_err());
    }

    #[test]
    fn linearized_gvm_geometry() {
        let model = DispersionModel::LinearizedGvm {
            dk0: 273.0,
            slope: 0.5,
            degenerate_omega: 1191.0,
            valid_half_width: 50.0,
        };
        assert_relative_eq!(
            phase_mismatch(1191.0, 1191.0, &model).unwrap(),
            273.0,
            max_relative = 1e-14
        );
        // anti-diagonal (ωs−ω° = +(ωi−ω°)): constant Δk0
        assert_relative_eq!(
            phase_mismatch(1195.0, 1195.0, &model).unwrap(),
            273.0,
            max_relative = 1e-14
        );
        // diagonal: varies
        let v = phase_mismatch(1195.0, 1187.0, &model).unwrap();
        assert_relative_eq!(v, 273.0 + 0.5 * 8.0, max_relative = 1e-14);
        assert!(phase_mismatch(1300.0, 1191.0, &model).is_err());
    }

    #[test]
    fn sellmeier_table_degenerate_point() {
        // constant indices chosen so Δk(ω°, ω°) comes out at a known value
        let omega0 = 1191.0;
        let (np, ns, ni) = (1.8, 1.74, 1.84);
        let period = 0.023;
        let model = DispersionModel::SellmeierTable {
            omega_ref: omega0,
            n_pump: vec![np],
            n_signal: vec![ns],
            n_idler: vec![ni],
            period_mm: period,
            valid_half_width: 100.0,
        };
        let expected =
            (np * 2.0 * omega0 - ns * omega0 - ni * omega0) / C_MM_PER_PS - 2.0 * PI / period;
        assert_relative_eq!(
            phase_mismatch(omega0, omega0, &model).unwrap(),
            expected,
            max_relative = 1e-12
        );
    }
}
