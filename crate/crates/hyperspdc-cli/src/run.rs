//! Experiment execution: turns a validated config into CSV artifacts, a
//! summary.toml, and a manifest.toml in the output directory.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;
use toml::Value;

use hyperspdc::crystal::{
    pmf_analytic, pmf_from_poling_centered, synthesize_poling, target_nonlinearity,
};
use hyperspdc::error::{Error, Result};
use hyperspdc::hom::{heralded_density, inter_pair_trace, intra_pair_trace};
use hyperspdc::hyperhom::{polarised_hom_trace, HyperState, PairCategory, PolBasis};
use hyperspdc::io;
use hyperspdc::jsa::{
    gaussian_model_jsa, jsa_from_jsi, schmidt_decompose, schmidt_of_sqrt_jsi, GaussianModel,
    JointSpectralAmplitude, PhaseMask, SchmidtResult,
};
use hyperspdc::spectra::{
    multi_gaussian_pef, optimize_shaper, shaper_transmission, GaussianComponent, ShaperConfig,
    SpectralAxis,
};
use hyperspdc::tofs::{reconstruct_jsi, simulate_tofs, DispersionSpec, TofsOptions};
use hyperspdc::tomo::{
    concurrence, fidelity, mle_reconstruct, monte_carlo_uncertainty, phi_plus, predicted_counts,
    standard_settings, Metric, ProjectionSet,
};
use hyperspdc::units::angular_frequency_rad_per_ps;

use crate::config::{ExperimentConfig, Kind};

/// Tracks every file written so the manifest stays complete.
struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    version: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    files: Vec<String>,
    parameters: &'a ExperimentConfig,
}

type Summary = toml::map::Map<String, Value>;

fn summary_entry(summary: &mut Summary, key: &str, value: impl Into<Value>) {
    summary.insert(key.to_string(), value.into());
}

/// Runs one experiment and returns the headline summary line for stdout.
pub fn run(kind: Kind, cfg: &ExperimentConfig, base: &Path, out_dir: &Path) -> Result<String> {
    std::fs::create_dir_all(out_dir)?;
    let mut out = Outputs {
        dir: out_dir.to_path_buf(),
        files: Vec::new(),
    };
    let mut summary = Summary::new();

    let headline = match kind {
        Kind::DesignCrystal => design_crystal(cfg, &mut out, &mut summary)?,
        Kind::ShapePump => shape_pump(cfg, &mut out, &mut summary)?,
        Kind::SimulateJsa => simulate_jsa(cfg, &mut out, &mut summary)?,
        Kind::Schmidt => schmidt(cfg, base, &mut out, &mut summary)?,
        Kind::HomIntra => hom_intra(cfg, &mut out, &mut summary)?,
        Kind::HomInter => hom_inter(cfg, base, &mut out, &mut summary)?,
        Kind::HomHyper => hom_hyper(cfg, &mut out, &mut summary)?,
        Kind::TofsRoundtrip => tofs_roundtrip(cfg, &mut out, &mut summary)?,
        Kind::TomoFit => tomo_fit(cfg, base, &mut out, &mut summary)?,
        Kind::FigureRepro => figure_repro(cfg, &mut out, &mut summary)?,
    };

    let summary_path = out.path("summary.toml");
    std::fs::write(&summary_path, toml::to_string_pretty(&summary).unwrap())?;

    out.files.push("manifest.toml".to_string());
    out.files.sort();
    let manifest = Manifest {
        experiment: kind.name(),
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        files: out.files.clone(),
        parameters: cfg,
    };
    let text = toml::to_string_pretty(&manifest)
        .map_err(|e| Error::Validation(format!("manifest serialization: {e}")))?;
    std::fs::write(out_dir.join("manifest.toml"), text)?;
    Ok(headline)
}

fn signal_axis(cfg: &ExperimentConfig) -> Result<SpectralAxis> {
    let g = cfg.grid.as_ref().expect("validated");
    SpectralAxis::centered(g.center_rad_per_ps, g.half_span_rad_per_ps, g.n_points)
}

fn model_jsa(cfg: &ExperimentConfig) -> Result<JointSpectralAmplitude> {
    let m = cfg.model.as_ref().expect("validated");
    gaussian_model_jsa(
        &signal_axis(cfg)?,
        GaussianModel {
            omega0: m.omega0_rad_per_ps,
            delta: m.delta_rad_per_ps,
            sigma: m.sigma_rad_per_ps,
            pi_phase: m.pi_phase,
        },
    )
}

fn linspace(half: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64)
        .collect()
}

fn value_at_zero(delays: &[f64], values: &[f64]) -> f64 {
    let mut best = 0;
    for (i, d) in delays.iter().enumerate() {
        if d.abs() < delays[best].abs() {
            best = i;
        }
    }
    values[best]
}

fn design_crystal(cfg: &ExperimentConfig, out: &mut Outputs, summary: &mut Summary) -> Result<String> {
    let c = cfg.crystal.as_ref().expect("validated");
    let dk0 = TAU / c.period_mm;
    let target = target_nonlinearity(c.length_mm, dk0, c.epsilon_per_mm, c.xi_per_mm, c.n_samples)?;
    let pattern = synthesize_poling(&target, c.min_domain_mm, c.period_mm)?;

    let dk_grid: Vec<f64> = (0..1501).map(|i| dk0 - 3.0 + 6.0 * i as f64 / 1500.0).collect();
    let realized = pmf_from_poling_centered(&pattern, &dk_grid)?;
    let analytic = pmf_analytic(&dk_grid, dk0, c.epsilon_per_mm, c.xi_per_mm)?;
    let mut rt = Complex64::ZERO;
    let (mut rr, mut tt) = (0.0, 0.0);
    for (r, t) in realized.iter().zip(&analytic) {
        rt += r.conj() * t;
        rr += r.norm_sqr();
        tt += t.norm_sqr();
    }
    let fidelity = rt.norm_sqr() / (rr * tt);
    let at = |dk: f64| pmf_from_poling_centered(&pattern, &[dk]).map(|v| v[0]);
    let antinode_phase = (at(dk0 + c.epsilon_per_mm / 2.0)? / at(dk0 - c.epsilon_per_mm / 2.0)?)
        .arg()
        .abs();

    io::write_poling_csv(&out.path("poling.csv"), &pattern)?;
    let realized_abs: Vec<f64> = realized.iter().map(|v| v.norm()).collect();
    let realized_phase: Vec<f64> = realized.iter().map(|v| v.arg()).collect();
    let target_abs: Vec<f64> = analytic.iter().map(|v| v.norm()).collect();
    io::write_columns_csv(
        &out.path("pmf.csv"),
        &["phase mismatch scan of the synthesized poling pattern".into()],
        &["dk_rad_per_mm", "target_abs", "realized_abs", "realized_phase_rad"],
        &[&dk_grid, &target_abs, &realized_abs, &realized_phase],
    )?;

    summary_entry(summary, "n_domains", pattern.n_domains() as i64);
    summary_entry(summary, "min_domain_mm", pattern.min_domain());
    summary_entry(summary, "max_domain_mm", pattern.max_domain());
    summary_entry(summary, "pmf_fidelity", fidelity);
    summary_entry(summary, "antinode_phase_rad", antinode_phase);
    Ok(format!(
        "design-crystal: {} domains, fidelity {:.5}, antinode phase {:.5} rad",
        pattern.n_domains(),
        fidelity,
        antinode_phase
    ))
}

fn shape_pump(cfg: &ExperimentConfig, out: &mut Outputs, summary: &mut Summary) -> Result<String> {
    let g = cfg.grid.as_ref().expect("validated");
    let p = cfg.pump.as_ref().expect("validated");
    let s = cfg.shaper.as_ref().expect("validated");

    let axis = SpectralAxis::centered(
        2.0 * g.center_rad_per_ps,
        2.0 * g.half_span_rad_per_ps,
        g.n_points,
    )?;
    let comps: Vec<GaussianComponent> = p
        .components
        .iter()
        .map(|c| GaussianComponent::new(c.center_rad_per_ps, c.sigma_rad_per_ps, c.weight, c.phase_rad))
        .collect();
    let pef = multi_gaussian_pef(&axis, &comps)?;

    let sig2 = 2.0 * s.input_sigma_rad_per_ps * s.input_sigma_rad_per_ps;
    let input: Vec<f64> = axis
        .values()
        .map(|w| (-(w - axis.center()).powi(2) / sig2).exp())
        .collect();
    let mut target: Vec<f64> = pef.amplitude().iter().map(|a| a.norm_sqr()).collect();
    // scale the target so its peak sits on the input spectrum; the shaper
    // can then realize it wherever the input is broad enough
    let peak_idx = target
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    if target[peak_idx] > 0.0 {
        let scale = input[peak_idx] / target[peak_idx];
        for t in &mut target {
            *t *= scale;
        }
    }

    let edges: Vec<f64> = (0..=s.n_pixels)
        .map(|i| axis.min() + (axis.max() - axis.min()) * i as f64 / s.n_pixels as f64)
        .collect();
    let shaper_cfg = ShaperConfig {
        n_pixels: s.n_pixels,
        pixel_edges: edges,
        pixel_angles: vec![0.0; s.n_pixels],
        axis: axis.clone(),
        input_spectrum: input.clone(),
    };
    let optimized = optimize_shaper(&target, &shaper_cfg, 500, 1e-12)?;
    let transmission = shaper_transmission(&optimized.config)?;
    let shaped: Vec<f64> = transmission
        .iter()
        .zip(&input)
        .map(|(t, i)| t * t * i)
        .collect();

    let omegas: Vec<f64> = axis.values().collect();
    io::write_columns_csv(
        &out.path("shaper.csv"),
        &["pump shaping: input, target, and realized intensity".into()],
        &["omega_rad_per_ps", "input", "target", "transmission", "shaped"],
        &[&omegas, &input, &target, &transmission, &shaped],
    )?;

    summary_entry(summary, "residual", optimized.residual);
    summary_entry(summary, "infeasible", optimized.infeasible);
    summary_entry(summary, "iterations", optimized.iterations as i64);
    summary_entry(summary, "n_pixels", s.n_pixels as i64);
    Ok(format!(
        "shape-pump: residual {:.3e}, {} pixels{}",
        optimized.residual,
        s.n_pixels,
        if optimized.infeasible { " (target needs gain)" } else { "" }
    ))
}

fn write_jsa_products(
    jsa: &JointSpectralAmplitude,
    out: &mut Outputs,
    summary: &mut Summary,
) -> Result<SchmidtResult> {
    let s_axis: Vec<f64> = jsa.s_axis().values().collect();
    let i_axis: Vec<f64> = jsa.i_axis().values().collect();
    io::write_matrix_csv(
        &out.path("jsi.csv"),
        &["joint spectral intensity; axes in rad/ps".into()],
        &s_axis,
        &i_axis,
        &jsa.jsi(),
    )?;
    let (ms, mi) = hyperspdc::jsa::marginals(jsa);
    io::write_columns_csv(
        &out.path("marginals.csv"),
        &["signal and idler marginal intensities".into()],
        &["omega_s_rad_per_ps", "signal", "omega_i_rad_per_ps", "idler"],
        &[&s_axis, &ms, &i_axis, &mi],
    )?;
    let schmidt = schmidt_decompose(jsa)?;
    summary_entry(summary, "schmidt_number", schmidt.schmidt_number);
    summary_entry(summary, "purity", schmidt.purity);
    Ok(schmidt)
}

fn simulate_jsa(cfg: &ExperimentConfig, out: &mut Outputs, summary: &mut Summary) -> Result<String> {
    let jsa = model_jsa(cfg)?;
    let schmidt = write_jsa_products(&jsa, out, summary)?;
    Ok(format!("simulate-jsa: K = {:.4}", schmidt.schmidt_number))
}

/// JSA from the Gaussian model, or from a measured JSI with the designed
/// sign structure imposed as phase.
fn load_jsa(cfg: &ExperimentConfig, base: &Path) -> Result<JointSpectralAmplitude> {
    if cfg.model.is_some() {
        return model_jsa(cfg);
    }
    let rel = cfg
        .inputs
        .as_ref()
        .and_then(|i| i.jsi_csv.as_ref())
        .expect("validated");
    let path = cfg.resolve(base, rel);
    let (rows, cols, jsi) = io::read_matrix_csv(&path)?;
    let s_axis = SpectralAxis::from_values(&rows)?;
    let i_axis = SpectralAxis::from_values(&cols)?;
    jsa_from_jsi(&jsi, &PhaseMask::PiAboveDiagonal, &s_axis, &i_axis)
}

fn schmidt(
    cfg: &ExperimentConfig,
    base: &Path,
    out: &mut Outputs,
    summary: &mut Summary,
) -> Result<String> {
    let jsa = load_jsa(cfg, base)?;
    let res = if cfg.model.is_some() {
        schmidt_decompose(&jsa)?
    } else {
        schmidt_of_sqrt_jsi(&jsa.jsi())?
    };
    let modes: Vec<f64> = (0..res.lambdas.len()).map(|i| i as f64).collect();
    io::write_columns_csv(
        &out.path("schmidt.csv"),
        &["Schmidt spectrum, descending".into()],
        &["mode", "lambda", "singular_value"],
        &[&modes, &res.lambdas, &res.singular_values],
    )?;
    summary_entry(summary, "schmidt_number", res.schmidt_number);
    summary_entry(summary, "purity", res.purity);
    Ok(format!(
        "schmidt: K = {:.4}, purity = {:.4}",
        res.schmidt_number, res.purity
    ))
}

fn hom_intra(cfg: &ExperimentConfig, out: &mut Outputs, summary: &mut Summary) -> Result<String> {
    let m = cfg.model.as_ref().expect("validated");
    let h = cfg.hom.as_ref().expect("validated");
    let jsa = model_jsa(cfg)?;
    let delays = linspace(10.0 / m.sigma_rad_per_ps, h.n_delays);
    let trace = intra_pair_trace(&jsa, &delays)?;
    io::write_columns_csv(
        &out.path("hom_intra.csv"),
        &["intra-pair HOM coincidence trace".into()],
        &["delay_ps", "probability"],
        &[&trace.delays, &trace.probability],
    )?;
    let p0 = value_at_zero(&trace.delays, &trace.probability);
    summary_entry(summary, "p_at_zero", p0);
    summary_entry(summary, "pi_phase", m.pi_phase);
    Ok(format!("hom-intra: p(0) = {:.4}", p0))
}

fn hom_inter(
    cfg: &ExperimentConfig,
    base: &Path,
    out: &mut Outputs,
    summary: &mut Summary,
) -> Result<String> {
    let h = cfg.hom.as_ref().expect("validated");
    let jsa = load_jsa(cfg, base)?;
    let half = match (&cfg.model, h.max_delay_ps) {
        (_, Some(t)) => t,
        (Some(m), None) => 10.0 / m.sigma_rad_per_ps,
        (None, None) => unreachable!("validated"),
    };
    let rho = heralded_density(&jsa);
    let trace = inter_pair_trace(&rho, &linspace(half, h.n_delays))?;
    io::write_columns_csv(
        &out.path("hom_inter.csv"),
        &["heralded inter-pair HOM coincidence trace".into()],
        &["delay_ps", "probability"],
        &[&trace.delays, &trace.probability],
    )?;
    let p0 = value_at_zero(&trace.delays, &trace.probability);
    summary_entry(summary, "p_at_zero", p0);
    // heralded-state purity doubles as the interference visibility
    summary_entry(summary, "heralded_purity", rho.purity());
    Ok(format!(
        "hom-inter: p(0) = {:.4}, heralded purity = {:.4}",
        p0,
        rho.purity()
    ))
}

fn category_file(pair: PairCategory) -> &'static str {
    match pair {
        PairCategory::CrossPolSamePort => "cross_pol_same_port.csv",
        PairCategory::CrossPolCrossPort => "cross_pol_cross_port.csv",
        PairCategory::SamePolCrossPort => "same_pol_cross_port.csv",
    }
}

fn hom_hyper(cfg: &ExperimentConfig, out: &mut Outputs, summary: &mut Summary) -> Result<String> {
    let m = cfg.model.as_ref().expect("validated");
    let h = cfg.hom.as_ref().expect("validated");
    let phi = h.phi_rad.expect("validated");
    let basis = match h.basis.as_deref().expect("validated") {
        "HV" => PolBasis::Hv,
        _ => PolBasis::Da,
    };
    let state = HyperState {
        phi,
        jsa: model_jsa(cfg)?,
        label: format!("phi={phi}"),
    };
    let delays = linspace(10.0 / m.sigma_rad_per_ps, h.n_delays);
    for pair in [
        PairCategory::CrossPolSamePort,
        PairCategory::CrossPolCrossPort,
        PairCategory::SamePolCrossPort,
    ] {
        let trace = polarised_hom_trace(&state, basis, pair, &delays)?;
        io::write_columns_csv(
            &out.path(category_file(pair)),
            &[format!("polarisation-resolved HOM trace, basis {:?}", basis)],
            &["delay_ps", "probability"],
            &[&trace.delays, &trace.probability],
        )?;
        let key = category_file(pair).trim_end_matches(".csv").to_string();
        summary.insert(
            format!("p_at_zero_{key}"),
            value_at_zero(&trace.delays, &trace.probability).into(),
        );
    }
    summary_entry(summary, "phi_rad", phi);
    summary_entry(summary, "basis", h.basis.clone().expect("validated"));
    Ok(format!(
        "hom-hyper: phi = {:.3}, basis {}",
        phi,
        h.basis.as_deref().expect("validated")
    ))
}

fn tofs_roundtrip(cfg: &ExperimentConfig, out: &mut Outputs, summary: &mut Summary) -> Result<String> {
    let t = cfg.tofs.as_ref().expect("validated");
    let seed = cfg.seed.expect("validated");
    let jsa = model_jsa(cfg)?;
    let spec = DispersionSpec {
        dispersion_ps_per_nm: t.dispersion_ps_per_nm,
        lambda_ref_nm: t.lambda_ref_nm,
        jitter_sigma_ps: t.jitter_sigma_ps,
        bin_width_ps: t.bin_width_ps,
    };
    let hist = simulate_tofs(
        &jsa.jsi(),
        jsa.s_axis(),
        jsa.i_axis(),
        &spec,
        t.n_pairs,
        seed,
        &TofsOptions::default(),
    )?;
    let t_s: Vec<f64> = hist.t_s_axis.values().collect();
    let t_i: Vec<f64> = hist.t_i_axis.values().collect();
    io::write_matrix_csv(
        &out.path("histogram.csv"),
        &["coincidence-time histogram; axes in ps".into()],
        &t_s,
        &t_i,
        &hist.counts.map(|n| n as f64),
    )?;
    let recon = reconstruct_jsi(&hist, &spec)?;
    io::write_matrix_csv(
        &out.path("reconstructed_jsi.csv"),
        &["reconstructed JSI; axes in nm".into()],
        &recon.s_wavelengths_nm,
        &recon.i_wavelengths_nm,
        &recon.jsi,
    )?;
    let k_ref = schmidt_decompose(&jsa)?.schmidt_number;
    let k_rec = schmidt_of_sqrt_jsi(&recon.jsi)?.schmidt_number;
    summary_entry(summary, "schmidt_number_noiseless", k_ref);
    summary_entry(summary, "schmidt_number_reconstructed", k_rec);
    summary_entry(summary, "relative_error", (k_rec - k_ref).abs() / k_ref);
    summary_entry(summary, "total_counts", hist.total_counts() as i64);
    Ok(format!(
        "tofs-roundtrip: K {:.4} -> {:.4} over {} counts",
        k_ref,
        k_rec,
        hist.total_counts()
    ))
}

fn tomo_fit(
    cfg: &ExperimentConfig,
    base: &Path,
    out: &mut Outputs,
    summary: &mut Summary,
) -> Result<String> {
    let t = cfg.tomo.as_ref().expect("validated");
    let seed = cfg.seed.expect("validated");
    let set = match &t.counts_csv {
        Some(rel) => io::read_projection_csv(&cfg.resolve(base, rel))?,
        None => {
            let settings = standard_settings();
            let counts = predicted_counts(
                &hyperspdc::tomo::DensityMatrix::new(phi_plus() * phi_plus().adjoint())?,
                &settings,
                t.n_per_basis,
            );
            ProjectionSet { settings, counts }
        }
    };
    io::write_projection_csv(&out.path("counts.csv"), &set)?;
    let res = mle_reconstruct(&set)?;
    io::write_density_matrix_csv(&out.path("rho.csv"), &res.rho)?;
    let f = fidelity(&res.rho, &phi_plus());
    let c = concurrence(&res.rho);
    let (mc_mean, mc_std) =
        monte_carlo_uncertainty(&set, t.n_mc_trials, seed, &Metric::Fidelity(phi_plus()))?;
    summary_entry(summary, "fidelity", f);
    summary_entry(summary, "concurrence", c);
    summary_entry(summary, "purity", res.rho.purity());
    summary_entry(summary, "converged", res.converged);
    summary_entry(summary, "iterations", res.iterations as i64);
    summary_entry(summary, "fidelity_mc_mean", mc_mean);
    summary_entry(summary, "fidelity_mc_std", mc_std);
    Ok(format!(
        "tomo-fit: F = {:.4} +/- {:.1e}, C = {:.4}",
        f, mc_std, c
    ))
}

fn figure_repro(cfg: &ExperimentConfig, out: &mut Outputs, summary: &mut Summary) -> Result<String> {
    let id = cfg.figure.as_ref().expect("validated").id.clone();
    // design-point defaults; [grid] and [model] override when present
    let omega0 = angular_frequency_rad_per_ps(1582.0);
    let axis = match &cfg.grid {
        Some(g) => SpectralAxis::centered(g.center_rad_per_ps, g.half_span_rad_per_ps, g.n_points)?,
        None => SpectralAxis::centered(omega0, 12.0, 256)?,
    };
    let model = match &cfg.model {
        Some(m) => GaussianModel {
            omega0: m.omega0_rad_per_ps,
            delta: m.delta_rad_per_ps,
            sigma: m.sigma_rad_per_ps,
            pi_phase: m.pi_phase,
        },
        None => GaussianModel {
            omega0,
            delta: 4.0,
            sigma: 0.5,
            pi_phase: true,
        },
    };
    let sigma = model.sigma;
    let jsa = gaussian_model_jsa(&axis, model)?;
    summary_entry(summary, "figure", id.clone());
    match id.as_str() {
        "fig1c" => {
            let schmidt = write_jsa_products(&jsa, out, summary)?;
            Ok(format!("figure-repro fig1c: K = {:.4}", schmidt.schmidt_number))
        }
        _ => {
            let state = HyperState {
                phi: 0.0,
                jsa,
                label: "fig6d".into(),
            };
            let delays = linspace(10.0 / sigma, 201);
            for pair in [
                PairCategory::CrossPolSamePort,
                PairCategory::CrossPolCrossPort,
                PairCategory::SamePolCrossPort,
            ] {
                let trace = polarised_hom_trace(&state, PolBasis::Da, pair, &delays)?;
                io::write_columns_csv(
                    &out.path(category_file(pair)),
                    &["polarisation-resolved HOM trace, basis Da, phi = 0".into()],
                    &["delay_ps", "probability"],
                    &[&trace.delays, &trace.probability],
                )?;
            }
            summary_entry(summary, "phi_rad", 0.0);
            summary_entry(summary, "basis", "DA");
            Ok("figure-repro fig6d: three traces written".to_string())
        }
    }
}
