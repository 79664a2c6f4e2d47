//! Frequency grids, multi-Gaussian pump envelopes, and the pulse-shaper
//! transmission model.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid of angular frequencies (rad/ps).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralAxis {
    start: f64,
    step: f64,
    n_points: usize,
}

impl SpectralAxis {
    /// Axis of `n_points` frequencies centered on `center`, spanning
    /// `center ± half_span`.
    pub fn centered(center: f64, half_span: f64, n_points: usize) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::InvalidAxis(format!(
                "n_points = {n_points}, need at least 2"
            )));
        }
        if !(half_span > 0.0) {
            return Err(Error::InvalidAxis(format!("half_span = {half_span}")));
        }
        let step = 2.0 * half_span / (n_points - 1) as f64;
        Ok(Self {
            start: center - half_span,
            step,
            n_points,
        })
    }

    /// Axis from an explicit first point and spacing.
    pub fn from_start_step(start: f64, step: f64, n_points: usize) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::InvalidAxis(format!(
                "n_points = {n_points}, need at least 2"
            )));
        }
        if !(step > 0.0) {
            return Err(Error::InvalidAxis(format!("non-positive spacing {step}")));
        }
        Ok(Self {
            start,
            step,
            n_points,
        })
    }

    /// Validates an explicit list of frequencies as a uniform axis.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidAxis(format!(
                "{} points, need at least 2",
                values.len()
            )));
        }
        let step = values[1] - values[0];
        if !(step > 0.0) {
            return Err(Error::InvalidAxis(format!("non-positive spacing {step}")));
        }
        for w in values.windows(2) {
            let d = w[1] - w[0];
            if ((d - step) / step).abs() >= 1e-12 {
                return Err(Error::InvalidAxis(format!(
                    "non-uniform spacing: {d} vs {step}"
                )));
            }
        }
        Ok(Self {
            start: values[0],
            step,
            n_points: values.len(),
        })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn center(&self) -> f64 {
        self.start + self.step * (self.n_points - 1) as f64 / 2.0
    }

    pub fn value(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.value(i))
    }

    pub fn min(&self) -> f64 {
        self.start
    }

    pub fn max(&self) -> f64 {
        self.value(self.n_points - 1)
    }
}

/// One Gaussian component of a pump envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    /// Center angular frequency (rad/ps).
    pub center: f64,
    /// 1/e² amplitude width σ (rad/ps).
    pub sigma: f64,
    /// Relative weight.
    pub weight: f64,
    /// Phase offset (rad).
    pub phase: f64,
}

impl GaussianComponent {
    pub fn new(center: f64, sigma: f64, weight: f64, phase: f64) -> Self {
        Self {
            center,
            sigma,
            weight,
            phase,
        }
    }
}

/// Pump envelope function α(ωs + ωi): a sum of Gaussians in the sum
/// frequency, normalized to unit peak amplitude.
#[derive(Debug, Clone)]
pub struct PumpEnvelope {
    axis: SpectralAxis,
    amplitude: Vec<Complex64>,
    params: Vec<GaussianComponent>,
    peak: f64,
}

impl PumpEnvelope {
    pub fn axis(&self) -> &SpectralAxis {
        &self.axis
    }

    pub fn amplitude(&self) -> &[Complex64] {
        &self.amplitude
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.params
    }

    /// Evaluates the normalized envelope at an arbitrary sum frequency.
    ///
    /// The value depends only on the sum coordinate, so any two (ωs, ωi)
    /// pairs with the same sum produce bit-identical amplitudes.
    pub fn eval(&self, omega_sum: f64) -> Complex64 {
        raw_multi_gaussian(&self.params, omega_sum) / self.peak
    }
}

fn raw_multi_gaussian(components: &[GaussianComponent], omega: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for c in components {
        let d = omega - c.center;
        let env = (-d * d / (2.0 * c.sigma * c.sigma)).exp();
        acc += Complex64::from_polar(c.weight * env, c.phase);
    }
    acc
}

/// Builds a multi-Gaussian pump envelope on `axis`.
///
/// Every component must have its ±5σ support inside the axis.
pub fn multi_gaussian_pef(
    axis: &SpectralAxis,
    components: &[GaussianComponent],
) -> Result<PumpEnvelope> {
    if components.is_empty() {
        return Err(Error::Validation("no pump components given".into()));
    }
    for (k, c) in components.iter().enumerate() {
        if !(c.sigma > 0.0) {
            return Err(Error::Validation(format!(
                "component {k}: sigma = {} must be positive",
                c.sigma
            )));
        }
        if c.center - 5.0 * c.sigma < axis.min() || c.center + 5.0 * c.sigma > axis.max() {
            return Err(Error::AxisTooNarrow(format!(
                "component {k} (center {}, sigma {}) clipped by axis [{}, {}]",
                c.center,
                c.sigma,
                axis.min(),
                axis.max()
            )));
        }
    }
    // Peak search on the grid, refined so max |amplitude| = 1 holds to
    // grid resolution; component centers are also candidates.
    let mut peak = 0.0f64;
    for w in axis.values() {
        peak = peak.max(raw_multi_gaussian(components, w).norm());
    }
    for c in components {
        peak = peak.max(raw_multi_gaussian(components, c.center).norm());
    }
    if peak == 0.0 {
        return Err(Error::DegenerateState("pump envelope is all zero".into()));
    }
    let amplitude = axis
        .values()
        .map(|w| raw_multi_gaussian(components, w) / peak)
        .collect();
    Ok(PumpEnvelope {
        axis: axis.clone(),
        amplitude,
        params: components.to_vec(),
        peak,
    })
}

/// Pulse-shaper configuration: pixelated waveplate angles in front of a
/// polariser, acting on a known input spectrum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShaperConfig {
    pub n_pixels: usize,
    /// Pixel boundaries in frequency, length `n_pixels + 1`, increasing.
    pub pixel_edges: Vec<f64>,
    /// Waveplate rotation per pixel (rad), each in [0, π/2].
    pub pixel_angles: Vec<f64>,
    /// Frequencies at which the input spectrum is sampled.
    pub axis: SpectralAxis,
    /// Input intensity spectrum on `axis`.
    pub input_spectrum: Vec<f64>,
}

impl ShaperConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pixel_edges.len() != self.n_pixels + 1 {
            return Err(Error::InvalidShaper(format!(
                "{} pixel edges for {} pixels",
                self.pixel_edges.len(),
                self.n_pixels
            )));
        }
        if self.pixel_edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidShaper(
                "pixel edges not strictly increasing".into(),
            ));
        }
        if self.pixel_angles.len() != self.n_pixels {
            return Err(Error::InvalidShaper(format!(
                "{} angles for {} pixels",
                self.pixel_angles.len(),
                self.n_pixels
            )));
        }
        if self
            .pixel_angles
            .iter()
            .any(|&a| !(0.0..=std::f64::consts::FRAC_PI_2).contains(&a))
        {
            return Err(Error::InvalidShaper("angle outside [0, π/2]".into()));
        }
        if self.input_spectrum.len() != self.axis.n_points() {
            return Err(Error::InvalidShaper(format!(
                "{} spectrum samples on an axis of {} points",
                self.input_spectrum.len(),
                self.axis.n_points()
            )));
        }
        if self.input_spectrum.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidShaper("negative or non-finite input".into()));
        }
        Ok(())
    }

    fn pixel_of(&self, freq: f64) -> Option<usize> {
        if freq < self.pixel_edges[0] || freq > self.pixel_edges[self.n_pixels] {
            return None;
        }
        let idx = self
            .pixel_edges
            .partition_point(|&e| e <= freq)
            .saturating_sub(1);
        Some(idx.min(self.n_pixels - 1))
    }
}

/// Amplitude transmission per axis frequency: t = |cos 2θ| of the pixel the
/// frequency falls into. Frequencies outside the pixel aperture are blocked.
pub fn shaper_transmission(cfg: &ShaperConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    Ok(cfg
        .axis
        .values()
        .map(|w| match cfg.pixel_of(w) {
            Some(p) => (2.0 * cfg.pixel_angles[p]).cos().abs(),
            None => 0.0,
        })
        .collect())
}

/// Result of a shaper optimization run.
#[derive(Debug, Clone)]
pub struct OptimizedShaper {
    pub config: ShaperConfig,
    /// Final L2 error between shaped and target intensity, relative to the
    /// target peak.
    pub residual: f64,
    /// Set when the target requires gain somewhere (a passive shaper can
    /// only attenuate); the residual then carries the remaining error.
    pub infeasible: bool,
    pub iterations: usize,
}

/// Optimizes pixel angles so the shaped intensity t²·input matches `target`
/// in the least-squares sense.
///
/// Starts from the per-pixel analytic solution t = √(target/input) and
/// refines with coordinate descent; the residual is monotone non-increasing
/// and the loop stops once it improves by less than `tol`.
pub fn optimize_shaper(
    target: &[f64],
    cfg: &ShaperConfig,
    max_iter: usize,
    tol: f64,
) -> Result<OptimizedShaper> {
    cfg.validate()?;
    if target.len() != cfg.axis.n_points() {
        return Err(Error::Shape(format!(
            "target has {} samples, axis has {}",
            target.len(),
            cfg.axis.n_points()
        )));
    }
    if target.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Validation("negative or non-finite target".into()));
    }

    // Group sample indices by pixel once.
    let mut by_pixel: Vec<Vec<usize>> = vec![Vec::new(); cfg.n_pixels];
    for (i, w) in cfg.axis.values().enumerate() {
        if let Some(p) = cfg.pixel_of(w) {
            by_pixel[p].push(i);
        }
    }

    let mut infeasible = false;
    let mut t = vec![1.0f64; cfg.n_pixels];
    let solve_pixel = |idx: &[usize]| -> (f64, bool) {
        // Least squares over u = t²: minimize Σ (u·I − T)² → u = Σ IT / Σ I².
        let (mut num, mut den) = (0.0, 0.0);
        for &i in idx {
            num += cfg.input_spectrum[i] * target[i];
            den += cfg.input_spectrum[i] * cfg.input_spectrum[i];
        }
        if den == 0.0 {
            return (0.0, false);
        }
        let u = num / den;
        if u > 1.0 {
            (1.0, true)
        } else {
            (u.max(0.0).sqrt(), false)
        }
    };

    let residual_of = |t: &[f64]| -> f64 {
        // RMS error of the shaped intensity, relative to the target peak.
        let peak = target.iter().cloned().fold(f64::MIN, f64::max).max(1e-300);
        let mut acc = 0.0;
        for (i, w) in cfg.axis.values().enumerate() {
            let tr = cfg.pixel_of(w).map(|p| t[p]).unwrap_or(0.0);
            let d = tr * tr * cfg.input_spectrum[i] - target[i];
            acc += d * d;
        }
        (acc / cfg.axis.n_points() as f64).sqrt() / peak
    };

    let mut residual = residual_of(&t);
    let mut iterations = 0;
    for _ in 0..max_iter.max(1) {
        iterations += 1;
        for p in 0..cfg.n_pixels {
            let (tp, clipped) = solve_pixel(&by_pixel[p]);
            t[p] = tp;
            infeasible |= clipped;
        }
        let next = residual_of(&t);
        let improved = residual - next;
        residual = next;
        if improved.abs() < tol || residual < tol {
            break;
        }
    }

    let mut config = cfg.clone();
    config.pixel_angles = t.iter().map(|&tp| tp.clamp(0.0, 1.0).acos() / 2.0).collect();
    Ok(OptimizedShaper {
        config,
        residual,
        infeasible,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::PI;

    fn simple_axis() -> SpectralAxis {
        SpectralAxis::centered(100.0, 20.0, 401).unwrap()
    }

    #[test]
    fn axis_invariants() {
        let ax = simple_axis();
        assert_eq!(ax.n_points(), 401);
        assert_relative_eq!(ax.center(), 100.0, max_relative = 1e-14);
        assert_relative_eq!(ax.step(), 0.1, max_relative = 1e-12);
        assert!(SpectralAxis::centered(1.0, 1.0, 1).is_err());
        assert!(SpectralAxis::from_values(&[1.0, 2.0, 2.5]).is_err());
        assert!(SpectralAxis::from_values(&[1.0, 2.0, 3.0]).is_ok());
    }

    #[test]
    fn single_gaussian_identity() {
        let ax = simple_axis();
        let pef =
            multi_gaussian_pef(&ax, &[GaussianComponent::new(100.0, 1.5, 1.0, 0.0)]).unwrap();
        assert_relative_eq!(pef.eval(100.0).re, 1.0, max_relative = 1e-12);
        assert_abs_diff_eq!(pef.eval(100.0).im, 0.0, epsilon = 1e-15);
        // Gaussian falls off as expected
        assert_relative_eq!(pef.eval(101.5).norm(), (-0.5f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn double_gaussian_midpoint_value() {
        // Two equal components at ωp ± δ: midpoint value 2·exp(−δ²/2σ²)/peak.
        let (wp, delta, sigma) = (100.0, 2.0, 0.8);
        let ax = SpectralAxis::centered(wp, 15.0, 2001).unwrap();
        let pef = multi_gaussian_pef(
            &ax,
            &[
                GaussianComponent::new(wp - delta, sigma, 1.0, 0.0),
                GaussianComponent::new(wp + delta, sigma, 1.0, 0.0),
            ],
        )
        .unwrap();
        // Well-separated peaks: peak amplitude ≈ 1 at each component center.
        let expected = 2.0 * (-delta * delta / (2.0 * sigma * sigma)).exp();
        let at_center = pef.eval(wp).norm();
        // peak is slightly above 1 from the tail of the other Gaussian
        let peak = 1.0 + (-2.0 * delta * delta / (sigma * sigma)).exp();
        assert_relative_eq!(at_center, expected / peak, max_relative = 1e-6);
    }

    #[test]
    fn pef_depends_only_on_sum() {
        let ax = simple_axis();
        let pef = multi_gaussian_pef(
            &ax,
            &[
                GaussianComponent::new(98.0, 1.0, 1.0, 0.3),
                GaussianComponent::new(102.0, 1.0, 0.7, -0.4),
            ],
        )
        .unwrap();
        // bit-identical values for identical sums
        let a = pef.eval(50.5 + 49.5);
        let b = pef.eval(60.25 + 39.75);
        assert_eq!(a, b);
    }

    #[test]
    fn narrow_axis_rejected() {
        let ax = SpectralAxis::centered(100.0, 2.0, 51).unwrap();
        let err = multi_gaussian_pef(&ax, &[GaussianComponent::new(100.0, 1.0, 1.0, 0.0)]);
        assert!(matches!(err, Err(Error::AxisTooNarrow(_))));
    }

    fn shaper_fixture(angles: Vec<f64>) -> ShaperConfig {
        let axis = SpectralAxis::centered(100.0, 10.0, 501).unwrap();
        let n = angles.len();
        let edges: Vec<f64> = (0..=n)
            .map(|i| 90.0 + 20.0 * i as f64 / n as f64)
            .collect();
        let input = axis.values().map(|_| 1.0).collect();
        ShaperConfig {
            n_pixels: n,
            pixel_edges: edges,
            pixel_angles: angles,
            axis,
            input_spectrum: input,
        }
    }

    #[test]
    fn transmission_laws() {
        // all angles zero → full transmission
        let cfg = shaper_fixture(vec![0.0; 8]);
        let t = shaper_transmission(&cfg).unwrap();
        assert!(t.iter().all(|&v| (v - 1.0).abs() < 1e-15));

        // θ = π/4 extinguishes, θ = π/8 transmits cos(π/4)
        let mut angles = vec![0.0; 8];
        angles[3] = PI / 4.0;
        angles[5] = PI / 8.0;
        let cfg = shaper_fixture(angles);
        let t = shaper_transmission(&cfg).unwrap();
        let in_pixel = |i: usize, p: usize| cfg.pixel_of(cfg.axis.value(i)) == Some(p);
        for i in 0..cfg.axis.n_points() {
            if in_pixel(i, 3) {
                assert_abs_diff_eq!(t[i], 0.0, epsilon = 1e-15);
            } else if in_pixel(i, 5) {
                assert_relative_eq!(t[i], (PI / 4.0).cos(), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn optimize_identity_target() {
        let cfg = shaper_fixture(vec![0.3; 16]);
        let target: Vec<f64> = cfg.input_spectrum.clone();
        let out = optimize_shaper(&target, &cfg, 50, 1e-10).unwrap();
        assert!(out.residual < 1e-10, "residual {}", out.residual);
        assert!(!out.infeasible);
        assert!(out.config.pixel_angles.iter().all(|&a| a < 1e-6));
    }

    #[test]
    fn optimize_infeasible_target() {
        let cfg = shaper_fixture(vec![0.0; 16]);
        let target: Vec<f64> = cfg.input_spectrum.iter().map(|v| 2.0 * v).collect();
        let out = optimize_shaper(&target, &cfg, 50, 1e-10).unwrap();
        assert!(out.infeasible);
        assert!(out.residual > 0.1);
    }

    #[test]
    fn optimize_double_gaussian_carve() {
        // Broad Gaussian input, double-Gaussian target carved from it at
        // pixel resolution, so the analytic solution t = √(target/input)
        // is exactly representable.
        let axis = SpectralAxis::centered(100.0, 10.0, 2001).unwrap();
        let n = 128;
        let edges: Vec<f64> = (0..=n)
            .map(|i| 92.0 + 16.0 * i as f64 / n as f64)
            .collect();
        let input: Vec<f64> = axis
            .values()
            .map(|w| (-(w - 100.0f64).powi(2) / (2.0 * 16.0)).exp())
            .collect();
        let ratio = |w: f64| {
            let g1 = (-(w - 98.5f64).powi(2) / (2.0 * 0.25)).exp();
            let g2 = (-(w - 101.5f64).powi(2) / (2.0 * 0.25)).exp();
            0.8 * (g1 + g2)
        };
        // piecewise-constant carve ratio sampled at pixel centers
        let pixel_ratio: Vec<f64> = (0..n)
            .map(|p| ratio((edges[p] + edges[p + 1]) / 2.0))
            .collect();
        let mut cfg = ShaperConfig {
            n_pixels: n,
            pixel_edges: edges,
            pixel_angles: vec![0.0; n],
            axis,
            input_spectrum: input.clone(),
        };
        let target: Vec<f64> = cfg
            .axis
            .values()
            .zip(&input)
            .map(|(w, &i)| cfg.pixel_of(w).map(|p| pixel_ratio[p] * i).unwrap_or(0.0))
            .collect();
        cfg.input_spectrum = input.clone();
        let out = optimize_shaper(&target, &cfg, 100, 1e-12).unwrap();
        assert!(!out.infeasible);
        assert!(out.residual < 1e-3, "residual {}", out.residual);
        // the optimizer recovers the analytic per-pixel solution
        for (p, &r) in pixel_ratio.iter().enumerate() {
            let t = (2.0 * out.config.pixel_angles[p]).cos().abs();
            assert_relative_eq!(t * t, r, max_relative = 1e-9);
        }

        // passivity: shaped ≤ input pointwise
        let t = shaper_transmission(&out.config).unwrap();
        for (i, &ti) in t.iter().enumerate() {
            assert!(ti * ti * input[i] <= input[i] + 1e-12);
        }

        // idempotence: rerunning on its own output barely moves the residual
        let again = optimize_shaper(&target, &out.config, 100, 1e-12).unwrap();
        assert!((again.residual - out.residual).abs() < 1e-12);
    }
}
