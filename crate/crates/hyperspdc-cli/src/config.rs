//! TOML experiment configuration and cross-field validation.
//!
//! Keys carry their unit in the name (`sigma_rad_per_ps`, `length_mm`) so a
//! config file can be audited without consulting the docs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    DesignCrystal,
    ShapePump,
    SimulateJsa,
    Schmidt,
    HomIntra,
    HomInter,
    HomHyper,
    TofsRoundtrip,
    TomoFit,
    FigureRepro,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::DesignCrystal => "design-crystal",
            Kind::ShapePump => "shape-pump",
            Kind::SimulateJsa => "simulate-jsa",
            Kind::Schmidt => "schmidt",
            Kind::HomIntra => "hom-intra",
            Kind::HomInter => "hom-inter",
            Kind::HomHyper => "hom-hyper",
            Kind::TofsRoundtrip => "tofs-roundtrip",
            Kind::TomoFit => "tomo-fit",
            Kind::FigureRepro => "figure-repro",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridConfig {
    /// Degenerate signal/idler angular frequency (rad/ps).
    pub center_rad_per_ps: f64,
    pub half_span_rad_per_ps: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub omega0_rad_per_ps: f64,
    pub delta_rad_per_ps: f64,
    pub sigma_rad_per_ps: f64,
    pub pi_phase: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PumpComponent {
    /// Sum-frequency center of the component (rad/ps).
    pub center_rad_per_ps: f64,
    pub sigma_rad_per_ps: f64,
    pub weight: f64,
    #[serde(default)]
    pub phase_rad: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PumpConfig {
    pub components: Vec<PumpComponent>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrystalConfig {
    pub length_mm: f64,
    pub period_mm: f64,
    pub epsilon_per_mm: f64,
    pub xi_per_mm: f64,
    pub min_domain_mm: f64,
    pub n_samples: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShaperConfigBlock {
    pub n_pixels: usize,
    /// Width of the unshaped input spectrum (rad/ps).
    pub input_sigma_rad_per_ps: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HomConfig {
    pub n_delays: usize,
    /// Polarisation analysis basis for hom-hyper: "HV" or "DA".
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<String>,
    /// Bell phase φ for hom-hyper.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_rad: Option<f64>,
    /// Delay half-range when no Gaussian model sets the scale.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_delay_ps: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TofsConfig {
    pub dispersion_ps_per_nm: f64,
    pub lambda_ref_nm: f64,
    pub jitter_sigma_ps: f64,
    pub bin_width_ps: f64,
    pub n_pairs: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TomoConfig {
    pub n_per_basis: f64,
    pub n_mc_trials: usize,
    /// Measured projection counts; predicted |φ⁺⟩ counts are used if absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FigureConfig {
    /// "fig1c" (four-bin JSA + marginals + Schmidt) or "fig6d"
    /// (polarisation-resolved HOM traces).
    pub id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct InputsConfig {
    /// Externally measured JSI on angular-frequency axes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jsi_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pump: Option<PumpConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crystal: Option<CrystalConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shaper: Option<ShaperConfigBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hom: Option<HomConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tofs: Option<TofsConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tomo: Option<TomoConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub figure: Option<FigureConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inputs: Option<InputsConfig>,
}

impl ExperimentConfig {
    /// Resolves a configured path relative to the config file location.
    pub fn resolve(&self, base: &Path, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    }
}

fn require<'a, T>(
    block: &'a Option<T>,
    name: &str,
    kind: Kind,
    diags: &mut Vec<String>,
) -> Option<&'a T> {
    if block.is_none() {
        diags.push(format!("[{}] section required for {}", name, kind.name()));
    }
    block.as_ref()
}

fn positive(value: f64, field: &str, diags: &mut Vec<String>) {
    if !(value > 0.0) {
        diags.push(format!("{field} = {value} must be positive"));
    }
}

fn file_exists(path: &Path, field: &str, diags: &mut Vec<String>) {
    if !path.exists() {
        diags.push(format!("{field}: input file {} not found", path.display()));
    }
}

/// Checks the config against an experiment kind without running anything.
/// Returns every problem found, not just the first.
pub fn validate(kind: Kind, cfg: &ExperimentConfig, base: &Path) -> Vec<String> {
    let mut diags = Vec::new();
    let d = &mut diags;

    let check_grid = |cfg: &ExperimentConfig, d: &mut Vec<String>| {
        if let Some(g) = require(&cfg.grid, "grid", kind, d) {
            positive(g.half_span_rad_per_ps, "grid.half_span_rad_per_ps", d);
            if g.n_points < 2 {
                d.push(format!("grid.n_points = {} must be at least 2", g.n_points));
            }
        }
    };
    let check_model = |cfg: &ExperimentConfig, d: &mut Vec<String>| {
        if let Some(m) = require(&cfg.model, "model", kind, d) {
            positive(m.omega0_rad_per_ps, "model.omega0_rad_per_ps", d);
            positive(m.delta_rad_per_ps, "model.delta_rad_per_ps", d);
            positive(m.sigma_rad_per_ps, "model.sigma_rad_per_ps", d);
        }
    };
    // schmidt and hom-inter accept either the Gaussian model or a measured
    // JSI file as the amplitude source
    let check_jsa_source = |cfg: &ExperimentConfig, d: &mut Vec<String>| {
        let jsi = cfg.inputs.as_ref().and_then(|i| i.jsi_csv.as_ref());
        match (&cfg.model, jsi) {
            (None, None) => d.push(
                "missing jsa input: provide [model] (with [grid]) or inputs.jsi_csv".into(),
            ),
            (Some(m), _) => {
                positive(m.delta_rad_per_ps, "model.delta_rad_per_ps", d);
                positive(m.sigma_rad_per_ps, "model.sigma_rad_per_ps", d);
                if cfg.grid.is_none() {
                    d.push(format!("[grid] section required with [model] for {}", kind.name()));
                }
            }
            (None, Some(p)) => file_exists(&cfg.resolve(base, p), "inputs.jsi_csv", d),
        }
    };
    let check_seed = |cfg: &ExperimentConfig, d: &mut Vec<String>| {
        if cfg.seed.is_none() {
            d.push(format!("seed required for stochastic experiment {}", kind.name()));
        }
    };

    match kind {
        Kind::DesignCrystal => {
            if let Some(c) = require(&cfg.crystal, "crystal", kind, d) {
                positive(c.length_mm, "crystal.length_mm", d);
                positive(c.period_mm, "crystal.period_mm", d);
                positive(c.epsilon_per_mm, "crystal.epsilon_per_mm", d);
                positive(c.xi_per_mm, "crystal.xi_per_mm", d);
                positive(c.min_domain_mm, "crystal.min_domain_mm", d);
                if c.min_domain_mm >= c.period_mm / 2.0 {
                    d.push(format!(
                        "crystal.min_domain_mm = {} must be below period_mm/2 = {}",
                        c.min_domain_mm,
                        c.period_mm / 2.0
                    ));
                }
                if c.n_samples < 1000 {
                    d.push(format!(
                        "crystal.n_samples = {} must be at least 1000",
                        c.n_samples
                    ));
                }
            }
        }
        Kind::ShapePump => {
            check_grid(cfg, d);
            if let Some(p) = require(&cfg.pump, "pump", kind, d) {
                if p.components.is_empty() {
                    d.push("pump.components must not be empty".into());
                }
                for (i, c) in p.components.iter().enumerate() {
                    positive(c.sigma_rad_per_ps, &format!("pump.components[{i}].sigma_rad_per_ps"), d);
                    positive(c.weight, &format!("pump.components[{i}].weight"), d);
                }
            }
            if let Some(s) = require(&cfg.shaper, "shaper", kind, d) {
                if s.n_pixels == 0 {
                    d.push("shaper.n_pixels must be at least 1".into());
                }
                positive(s.input_sigma_rad_per_ps, "shaper.input_sigma_rad_per_ps", d);
            }
        }
        Kind::SimulateJsa | Kind::HomIntra | Kind::HomHyper => {
            check_grid(cfg, d);
            check_model(cfg, d);
            if kind != Kind::SimulateJsa {
                if let Some(h) = require(&cfg.hom, "hom", kind, d) {
                    if h.n_delays < 3 {
                        d.push(format!("hom.n_delays = {} must be at least 3", h.n_delays));
                    }
                    if kind == Kind::HomHyper {
                        match h.basis.as_deref() {
                            Some("HV") | Some("DA") => {}
                            Some(other) => d.push(format!(
                                "hom.basis = {other:?} must be \"HV\" or \"DA\""
                            )),
                            None => d.push("hom.basis required for hom-hyper".into()),
                        }
                        if h.phi_rad.is_none() {
                            d.push("hom.phi_rad required for hom-hyper".into());
                        }
                    }
                }
            }
        }
        Kind::Schmidt => check_jsa_source(cfg, d),
        Kind::HomInter => {
            check_jsa_source(cfg, d);
            if let Some(h) = require(&cfg.hom, "hom", kind, d) {
                if h.n_delays < 3 {
                    d.push(format!("hom.n_delays = {} must be at least 3", h.n_delays));
                }
                if cfg.model.is_none() && h.max_delay_ps.is_none() {
                    d.push("hom.max_delay_ps required when the delay scale \
                            cannot come from [model]".into());
                }
            }
        }
        Kind::TofsRoundtrip => {
            check_grid(cfg, d);
            check_model(cfg, d);
            if let Some(t) = require(&cfg.tofs, "tofs", kind, d) {
                if t.dispersion_ps_per_nm == 0.0 {
                    d.push("tofs.dispersion_ps_per_nm must be nonzero".into());
                }
                positive(t.lambda_ref_nm, "tofs.lambda_ref_nm", d);
                if t.jitter_sigma_ps < 0.0 {
                    d.push(format!(
                        "tofs.jitter_sigma_ps = {} must be non-negative",
                        t.jitter_sigma_ps
                    ));
                }
                positive(t.bin_width_ps, "tofs.bin_width_ps", d);
                if !(t.n_pairs >= 1.0) {
                    d.push(format!("tofs.n_pairs = {} must be at least 1", t.n_pairs));
                }
            }
            check_seed(cfg, d);
        }
        Kind::TomoFit => {
            if let Some(t) = require(&cfg.tomo, "tomo", kind, d) {
                positive(t.n_per_basis, "tomo.n_per_basis", d);
                if t.n_mc_trials < 50 {
                    d.push(format!(
                        "tomo.n_mc_trials = {} must be at least 50",
                        t.n_mc_trials
                    ));
                }
                if let Some(p) = &t.counts_csv {
                    file_exists(&cfg.resolve(base, p), "tomo.counts_csv", d);
                }
            }
            check_seed(cfg, d);
        }
        Kind::FigureRepro => {
            if let Some(f) = require(&cfg.figure, "figure", kind, d) {
                if !matches!(f.id.as_str(), "fig1c" | "fig6d") {
                    d.push(format!(
                        "figure.id = {:?} not recognised (known: fig1c, fig6d)",
                        f.id
                    ));
                }
            }
        }
    }
    diags
}
