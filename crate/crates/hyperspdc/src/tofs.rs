//! Time-of-flight spectrometry: dispersion mapping of photon wavelengths
//! to arrival times, Poissonian coincidence-histogram simulation with
//! detector jitter, JSI reconstruction, trigger-window cropping, and
//! frequency-bin count extraction.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::error::{Error, Result};
use crate::spectra::SpectralAxis;
use crate::units::wavelength_nm;

/// Uniform time-bin axis (ps); same representation as a spectral axis.
pub type TimeAxis = SpectralAxis;

/// Dispersion module and detection-chain parameters.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct DispersionSpec {
    /// Dispersion D (ps/nm); the deployed modules provide −1350.
    pub dispersion_ps_per_nm: f64,
    /// Wavelength mapped to t = 0 (nm).
    pub lambda_ref_nm: f64,
    /// Combined Gaussian timing jitter, standard deviation (ps).
    pub jitter_sigma_ps: f64,
    /// Histogram bin width (ps).
    pub bin_width_ps: f64,
}

/// 37 ps FWHM combined jitter expressed as a standard deviation.
pub const DEFAULT_JITTER_SIGMA_PS: f64 = 37.0 / 2.354_820_045_030_949_3;

impl DispersionSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dispersion_ps_per_nm == 0.0 || !self.dispersion_ps_per_nm.is_finite() {
            return Err(Error::Validation("dispersion must be nonzero".into()));
        }
        if !(self.bin_width_ps > 0.0) {
            return Err(Error::Validation("bin width must be positive".into()));
        }
        if !(self.jitter_sigma_ps >= 0.0) {
            return Err(Error::Validation("jitter must be non-negative".into()));
        }
        if !(self.lambda_ref_nm > 0.0) {
            return Err(Error::Validation("reference wavelength must be positive".into()));
        }
        Ok(())
    }
}

/// Arrival time (ps) of a photon at wavelength λ: t = D·(λ − λ_ref).
pub fn wavelength_to_time(lambda_nm: f64, spec: &DispersionSpec) -> f64 {
    spec.dispersion_ps_per_nm * (lambda_nm - spec.lambda_ref_nm)
}

/// Inverse of [`wavelength_to_time`].
pub fn time_to_wavelength(t_ps: f64, spec: &DispersionSpec) -> f64 {
    spec.lambda_ref_nm + t_ps / spec.dispersion_ps_per_nm
}

/// Two-dimensional signal × idler coincidence-time histogram.
#[derive(Debug, Clone)]
pub struct CoincidenceHistogram {
    pub t_s_axis: TimeAxis,
    pub t_i_axis: TimeAxis,
    pub counts: DMatrix<u64>,
    pub integration_time_s: f64,
    pub seed: u64,
}

impl CoincidenceHistogram {
    pub fn total_counts(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Optional features of the forward simulation.
#[derive(Debug, Clone, Copy)]
pub struct TofsOptions {
    /// Fraction of events time-tagged against a neighbouring trigger,
    /// displacing both photons by ± one repetition period.
    pub ghost_fraction: f64,
    /// Pump laser repetition period (ps); 76 MHz by default.
    pub rep_period_ps: f64,
    pub integration_time_s: f64,
}

impl Default for TofsOptions {
    fn default() -> Self {
        Self {
            ghost_fraction: 0.0,
            rep_period_ps: 1e6 / 76.0,
            integration_time_s: 1.0,
        }
    }
}

/// Simulates coincidence detection of `n_pairs` expected pairs drawn from
/// a JSI given on angular-frequency axes (rad/ps).
///
/// Per-cell pair numbers are Poissonian, each photon's arrival time gets
/// independent Gaussian jitter, and counts are accumulated on a time grid
/// wide enough for the mapped JSI plus jitter tails. Deterministic per
/// seed.
pub fn simulate_tofs(
    jsi: &DMatrix<f64>,
    s_axis: &SpectralAxis,
    i_axis: &SpectralAxis,
    spec: &DispersionSpec,
    n_pairs: f64,
    seed: u64,
    options: &TofsOptions,
) -> Result<CoincidenceHistogram> {
    spec.validate()?;
    if jsi.nrows() != s_axis.n_points() || jsi.ncols() != i_axis.n_points() {
        return Err(Error::Shape("JSI does not match its axes".into()));
    }
    if jsi.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::Validation("JSI must be non-negative and finite".into()));
    }
    if !(n_pairs >= 1.0) {
        return Err(Error::Validation("need at least one expected pair".into()));
    }
    if !(0.0..=1.0).contains(&options.ghost_fraction) {
        return Err(Error::Validation("ghost fraction must lie in [0,1]".into()));
    }

    let t_of = |omega: f64| wavelength_to_time(wavelength_nm(omega), spec);
    let time_range = |axis: &SpectralAxis| {
        let a = t_of(axis.min());
        let b = t_of(axis.max());
        (a.min(b), a.max(b))
    };
    let margin = 8.0 * spec.jitter_sigma_ps + spec.bin_width_ps;
    let ghost_span = if options.ghost_fraction > 0.0 {
        options.rep_period_ps
    } else {
        0.0
    };
    let build_axis = |axis: &SpectralAxis| -> Result<TimeAxis> {
        let (lo, hi) = time_range(axis);
        let lo = lo - margin - ghost_span;
        let hi = hi + margin + ghost_span;
        let n = ((hi - lo) / spec.bin_width_ps).ceil() as usize + 1;
        TimeAxis::from_start_step(lo + spec.bin_width_ps / 2.0, spec.bin_width_ps, n)
    };
    let t_s_axis = build_axis(s_axis)?;
    let t_i_axis = build_axis(i_axis)?;
    let t_s_start = t_s_axis.min() - spec.bin_width_ps / 2.0;
    let t_i_start = t_i_axis.min() - spec.bin_width_ps / 2.0;

    let mut counts = DMatrix::<u64>::zeros(t_s_axis.n_points(), t_i_axis.n_points());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = if spec.jitter_sigma_ps > 0.0 {
        Some(Normal::new(0.0, spec.jitter_sigma_ps).map_err(|e| Error::Validation(e.to_string()))?)
    } else {
        None
    };

    for (r, ws) in s_axis.values().enumerate() {
        let ts0 = t_of(ws);
        for (c, wi) in i_axis.values().enumerate() {
            let mean = n_pairs * jsi[(r, c)];
            if mean <= 0.0 {
                continue;
            }
            let n_events = Poisson::new(mean)
                .map_err(|e| Error::Validation(e.to_string()))?
                .sample(&mut rng) as u64;
            let ti0 = t_of(wi);
            for _ in 0..n_events {
                let mut ts = ts0;
                let mut ti = ti0;
                if let Some(j) = &jitter {
                    ts += j.sample(&mut rng);
                    ti += j.sample(&mut rng);
                }
                if options.ghost_fraction > 0.0
                    && rand::Rng::random::<f64>(&mut rng) < options.ghost_fraction
                {
                    let shift = if rand::Rng::random::<bool>(&mut rng) {
                        options.rep_period_ps
                    } else {
                        -options.rep_period_ps
                    };
                    ts += shift;
                    ti += shift;
                }
                let bs = ((ts - t_s_start) / spec.bin_width_ps).floor();
                let bi = ((ti - t_i_start) / spec.bin_width_ps).floor();
                if bs < 0.0
                    || bi < 0.0
                    || bs as usize >= counts.nrows()
                    || bi as usize >= counts.ncols()
                {
                    return Err(Error::TimeWindow(format!(
                        "event at ({ts:.1}, {ti:.1}) ps outside histogram range \
                         [{:.1}, {:.1}] × [{:.1}, {:.1}] ps",
                        t_s_start,
                        t_s_start + counts.nrows() as f64 * spec.bin_width_ps,
                        t_i_start,
                        t_i_start + counts.ncols() as f64 * spec.bin_width_ps,
                    )));
                }
                counts[(bs as usize, bi as usize)] += 1;
            }
        }
    }

    Ok(CoincidenceHistogram {
        t_s_axis,
        t_i_axis,
        counts,
        integration_time_s: options.integration_time_s,
        seed,
    })
}

/// JSI recovered from a histogram by the inverse dispersion map.
#[derive(Debug, Clone)]
pub struct ReconstructedJsi {
    /// Wavelengths (nm) of the signal rows, in histogram bin order.
    pub s_wavelengths_nm: Vec<f64>,
    /// Wavelengths (nm) of the idler columns.
    pub i_wavelengths_nm: Vec<f64>,
    /// Counts normalized to unit sum.
    pub jsi: DMatrix<f64>,
}

/// Maps histogram bins back to wavelengths and normalizes counts.
pub fn reconstruct_jsi(hist: &CoincidenceHistogram, spec: &DispersionSpec) -> Result<ReconstructedJsi> {
    spec.validate()?;
    let total = hist.total_counts();
    if total == 0 {
        return Err(Error::DegenerateState("empty histogram".into()));
    }
    let s_wavelengths_nm = hist
        .t_s_axis
        .values()
        .map(|t| time_to_wavelength(t, spec))
        .collect();
    let i_wavelengths_nm = hist
        .t_i_axis
        .values()
        .map(|t| time_to_wavelength(t, spec))
        .collect();
    let jsi = hist.counts.map(|n| n as f64 / total as f64);
    Ok(ReconstructedJsi {
        s_wavelengths_nm,
        i_wavelengths_nm,
        jsi,
    })
}

/// Rectangular time window.
#[derive(Debug, Clone, Copy)]
pub struct TimeWindow {
    pub t_s_min: f64,
    pub t_s_max: f64,
    pub t_i_min: f64,
    pub t_i_max: f64,
}

/// Zeroes all counts outside the window, isolating the coincidences that
/// belong to the central trigger.
pub fn crop_trigger_window(
    hist: &CoincidenceHistogram,
    window: &TimeWindow,
) -> Result<CoincidenceHistogram> {
    if !(window.t_s_min < window.t_s_max && window.t_i_min < window.t_i_max) {
        return Err(Error::Validation("empty crop window".into()));
    }
    let mut out = hist.clone();
    for (r, ts) in hist.t_s_axis.values().enumerate() {
        for (c, ti) in hist.t_i_axis.values().enumerate() {
            let inside = ts >= window.t_s_min
                && ts <= window.t_s_max
                && ti >= window.t_i_min
                && ti <= window.t_i_max;
            if !inside {
                out.counts[(r, c)] = 0;
            }
        }
    }
    if hist.total_counts() > 0 && out.total_counts() == 0 {
        return Err(Error::DegenerateState(
            "crop window excludes every recorded count".into(),
        ));
    }
    Ok(out)
}

/// Totals per extraction region.
#[derive(Debug, Clone)]
pub struct BinCounts {
    pub counts: Vec<u64>,
    /// (t_s_min, t_s_max, t_i_min, t_i_max) per region.
    pub regions: Vec<(f64, f64, f64, f64)>,
}

/// Integrates counts over square ±half_width regions centred on the given
/// (t_s, t_i) points; regions must be pairwise disjoint and inside the
/// histogram.
pub fn extract_bins(
    hist: &CoincidenceHistogram,
    centers: &[(f64, f64)],
    half_width_ps: f64,
) -> Result<BinCounts> {
    if !(half_width_ps > 0.0) {
        return Err(Error::Validation("half width must be positive".into()));
    }
    let regions: Vec<(f64, f64, f64, f64)> = centers
        .iter()
        .map(|&(ts, ti)| {
            (
                ts - half_width_ps,
                ts + half_width_ps,
                ti - half_width_ps,
                ti + half_width_ps,
            )
        })
        .collect();
    for (i, a) in regions.iter().enumerate() {
        for b in regions.iter().skip(i + 1) {
            let overlap_s = a.0 < b.1 && b.0 < a.1;
            let overlap_i = a.2 < b.3 && b.2 < a.3;
            if overlap_s && overlap_i {
                return Err(Error::Validation(format!(
                    "extraction regions around ({}, {}) overlap",
                    (a.0 + a.1) / 2.0,
                    (a.2 + a.3) / 2.0
                )));
            }
        }
    }
    let half_bin_s = hist.t_s_axis.step() / 2.0;
    let half_bin_i = hist.t_i_axis.step() / 2.0;
    for r in &regions {
        if r.0 < hist.t_s_axis.min() - half_bin_s
            || r.1 > hist.t_s_axis.max() + half_bin_s
            || r.2 < hist.t_i_axis.min() - half_bin_i
            || r.3 > hist.t_i_axis.max() + half_bin_i
        {
            return Err(Error::Validation(
                "extraction region extends outside the histogram".into(),
            ));
        }
    }
    let counts = regions
        .iter()
        .map(|&(s0, s1, i0, i1)| {
            let mut total = 0u64;
            for (r, ts) in hist.t_s_axis.values().enumerate() {
                if ts < s0 || ts > s1 {
                    continue;
                }
                for (c, ti) in hist.t_i_axis.values().enumerate() {
                    if ti >= i0 && ti <= i1 {
                        total += hist.counts[(r, c)];
                    }
                }
            }
            total
        })
        .collect();
    Ok(BinCounts { counts, regions })
}
