//! Run configuration: a TOML file with `[system]`, `[experiment]`,
//! `[pulse]`, `[grid]`, `[numerics]` and `[output]` tables.
//!
//! Frequencies are in the units of `omega_A` (or `omega_1`). Lengths and
//! times carry a `_gamma` suffix and are in units of `1/Gamma`, where
//! `Gamma = pi (V_A^2 + V_C^2)`.

use std::path::{Path, PathBuf};

use eesim_core::coherent::{FockSpaceSpec, MasterOptions};
use eesim_core::model::{solve_g_for_ee, solve_j_for_ee, SystemParams, ThreeModeParams};
use eesim_core::protocols::TrapNumerics;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemBlock,
    pub experiment: Experiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse: Option<PulseBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridBlock>,
    #[serde(default)]
    pub numerics: NumericsBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    CavityAtom,
    TwoCavity,
    ThreeMode,
}

/// Fields of every system kind; which ones are allowed depends on `kind`.
/// A missing `j` (cavity-atom, two-cavity) or `g` (three-mode) is solved
/// from the EE condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    pub kind: SystemKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_prime_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_prime_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_prime_1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_prime_2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    /// Single-excitation (classical) response to one pulse.
    Linear { t_final_gamma: f64 },
    /// Master-equation run under a coherent pulse.
    Coherent {
        mean_photons: f64,
        t_final_gamma: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_max: Option<usize>,
    },
    /// Two identical photons until `P_EE` settles.
    Trap {},
    /// Release of a stored photon, scanned over pulse widths.
    Release {
        #[serde(default = "default_release_sigmas")]
        sigmas_gamma: Vec<f64>,
        #[serde(default = "default_release_target")]
        target: f64,
    },
    Pipeline {
        #[serde(default = "default_pipeline_sigma")]
        sigma_release_gamma: f64,
        #[serde(default = "default_extract_threshold")]
        extract_threshold: f64,
        #[serde(default = "default_right_edge")]
        right_edge_gamma: f64,
    },
    SweepVcSigma {
        #[serde(default = "default_ratio_axis")]
        rows: AxisBlock,
        #[serde(default = "default_sigma_axis")]
        cols: AxisBlock,
        #[serde(default = "default_j_mask")]
        j_mask_fraction: f64,
    },
    /// Rows are carrier offsets from `omega_B` in units of `Gamma`.
    SweepKSigma {
        #[serde(default = "default_k_axis")]
        rows: AxisBlock,
        #[serde(default = "default_sigma_axis")]
        cols: AxisBlock,
        #[serde(default = "default_j_mask")]
        j_mask_fraction: f64,
    },
    LossCompare {
        #[serde(default = "default_loss_ratios")]
        ratios: Vec<f64>,
        #[serde(default = "default_one")]
        sigma_gamma: f64,
        #[serde(default = "default_loss_duration")]
        duration_gamma: f64,
        #[serde(default = "default_full_window")]
        full_window_gamma: [f64; 2],
        #[serde(default = "default_cavity_window")]
        cavity_window_gamma: [f64; 2],
    },
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Linear { .. } => "linear",
            Experiment::Coherent { .. } => "coherent",
            Experiment::Trap {} => "trap",
            Experiment::Release { .. } => "release",
            Experiment::Pipeline { .. } => "pipeline",
            Experiment::SweepVcSigma { .. } => "sweep-vc-sigma",
            Experiment::SweepKSigma { .. } => "sweep-k-sigma",
            Experiment::LossCompare { .. } => "loss-compare",
        }
    }
}

fn default_release_sigmas() -> Vec<f64> {
    vec![1.0, 2.0, 3.0, 5.0]
}
fn default_release_target() -> f64 {
    0.05
}
fn default_pipeline_sigma() -> f64 {
    5.0
}
fn default_extract_threshold() -> f64 {
    0.1
}
fn default_right_edge() -> f64 {
    61.0
}
fn default_j_mask() -> f64 {
    0.1
}
fn default_ratio_axis() -> AxisBlock {
    AxisBlock { min: 0.1, max: 0.9, n: 17, scale: ScaleName::Linear }
}
fn default_sigma_axis() -> AxisBlock {
    AxisBlock { min: 0.2, max: 5.0, n: 17, scale: ScaleName::Log }
}
fn default_k_axis() -> AxisBlock {
    AxisBlock { min: -4.0, max: 4.0, n: 17, scale: ScaleName::Linear }
}
fn default_loss_ratios() -> Vec<f64> {
    vec![0.05, 0.1, 0.2]
}
fn default_one() -> f64 {
    1.0
}
fn default_loss_duration() -> f64 {
    45.0
}
fn default_full_window() -> [f64; 2] {
    [20.0, 45.0]
}
fn default_cavity_window() -> [f64; 2] {
    [7.0, 12.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleName {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisBlock {
    pub min: f64,
    pub max: f64,
    pub n: usize,
    #[serde(default = "default_scale")]
    pub scale: ScaleName,
}

fn default_scale() -> ScaleName {
    ScaleName::Linear
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CarrierRef {
    Bright,
    Ee,
}

/// Pulse shape. For waveguide experiments `center_gamma` is a position
/// (default: the protocol's incoming centre); for coherent drives it is the
/// peak time (default `5 sigma`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseBlock {
    #[serde(default = "default_one")]
    pub sigma_gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_gamma: Option<f64>,
    #[serde(default = "default_carrier")]
    pub carrier: CarrierRef,
    #[serde(default)]
    pub carrier_offset_gamma: f64,
}

fn default_carrier() -> CarrierRef {
    CarrierRef::Bright
}

impl Default for PulseBlock {
    fn default() -> Self {
        Self { sigma_gamma: 1.0, center_gamma: None, carrier: CarrierRef::Bright, carrier_offset_gamma: 0.0 }
    }
}

/// Explicit waveguide grid: `cells` cells of `dx_gamma` starting at `x0_gamma`.
/// `x0_gamma` must be a whole number of cells left of the emitters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub cells: usize,
    pub dx_gamma: f64,
    pub x0_gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsBlock {
    #[serde(default = "default_cells_per_unit")]
    pub cells_per_unit: f64,
    #[serde(default = "default_cells_per_sigma")]
    pub cells_per_sigma: f64,
    #[serde(default = "default_sample_interval")]
    pub sample_interval_gamma: f64,
    #[serde(default = "default_true")]
    pub calibrated: bool,
    #[serde(default = "default_steady_window")]
    pub steady_window_gamma: f64,
    #[serde(default = "default_steady_rel_tol")]
    pub steady_rel_tol: f64,
    /// Master-equation step; chosen from the spectrum when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_dt_gamma: Option<f64>,
    #[serde(default = "default_convergence_tol")]
    pub master_convergence_tol: f64,
    #[serde(default = "default_max_halvings")]
    pub master_max_halvings: usize,
}

fn default_cells_per_unit() -> f64 {
    20.0
}
fn default_cells_per_sigma() -> f64 {
    10.0
}
fn default_sample_interval() -> f64 {
    0.5
}
fn default_true() -> bool {
    true
}
fn default_steady_window() -> f64 {
    2.0
}
fn default_steady_rel_tol() -> f64 {
    1e-4
}
fn default_convergence_tol() -> f64 {
    1e-6
}
fn default_max_halvings() -> usize {
    5
}

impl Default for NumericsBlock {
    fn default() -> Self {
        Self {
            cells_per_unit: default_cells_per_unit(),
            cells_per_sigma: default_cells_per_sigma(),
            sample_interval_gamma: default_sample_interval(),
            calibrated: true,
            steady_window_gamma: default_steady_window(),
            steady_rel_tol: default_steady_rel_tol(),
            master_dt_gamma: None,
            master_convergence_tol: default_convergence_tol(),
            master_max_halvings: default_max_halvings(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    /// Also write EE2P grids where the experiment produces them.
    #[serde(default = "default_true")]
    pub grids: bool,
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { directory: default_directory(), grids: true }
    }
}

/// System with every derived coupling filled in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum System {
    CavityAtom(SystemParams<f64>),
    /// Cavity 1 in the atom slot, cavity 2 in the cavity slot.
    TwoCavity(SystemParams<f64>),
    ThreeMode(ThreeModeParams<f64>),
}

impl System {
    pub fn gamma_unit(&self) -> f64 {
        match self {
            System::CavityAtom(p) | System::TwoCavity(p) => p.gamma_unit(),
            System::ThreeMode(p) => p.gamma_unit(),
        }
    }

    pub fn cavity_atom(&self) -> Option<&SystemParams<f64>> {
        match self {
            System::CavityAtom(p) | System::TwoCavity(p) => Some(p),
            System::ThreeMode(_) => None,
        }
    }
}

fn config_err(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

impl SystemBlock {
    fn present(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        for (name, v) in [
            ("omega_a", self.omega_a),
            ("omega_c", self.omega_c),
            ("omega_1", self.omega_1),
            ("omega_2", self.omega_2),
            ("v_a", self.v_a),
            ("v_c", self.v_c),
            ("v_1", self.v_1),
            ("v_2", self.v_2),
            ("j", self.j),
            ("g", self.g),
            ("gamma_prime_a", self.gamma_prime_a),
            ("gamma_prime_c", self.gamma_prime_c),
            ("gamma_prime_1", self.gamma_prime_1),
            ("gamma_prime_2", self.gamma_prime_2),
        ] {
            if v.is_some() {
                out.push(name);
            }
        }
        out
    }

    pub fn resolve(&self) -> Result<System, CliError> {
        let (allowed, required): (&[&str], &[&str]) = match self.kind {
            SystemKind::CavityAtom => (
                &["omega_a", "omega_c", "v_a", "v_c", "j", "gamma_prime_a", "gamma_prime_c"],
                &["omega_a", "omega_c", "v_a", "v_c"],
            ),
            SystemKind::TwoCavity => (
                &["omega_1", "omega_2", "v_1", "v_2", "j", "gamma_prime_1", "gamma_prime_2"],
                &["omega_1", "omega_2", "v_1", "v_2"],
            ),
            SystemKind::ThreeMode => (
                &["omega_1", "omega_2", "omega_a", "v_1", "v_2", "j", "g", "gamma_prime_1", "gamma_prime_2", "gamma_prime_a"],
                &["omega_1", "omega_2", "omega_a", "v_1", "v_2", "j"],
            ),
        };
        let present = self.present();
        if let Some(bad) = present.iter().find(|f| !allowed.contains(f)) {
            return Err(config_err(&format!("system.{bad}"), format!("not a parameter of a {:?} system", self.kind)));
        }
        if let Some(missing) = required.iter().find(|f| !present.contains(f)) {
            return Err(config_err(&format!("system.{missing}"), "required"));
        }
        let get = |v: Option<f64>| v.unwrap_or(0.0);
        let model = |e: eesim_core::Error| CliError::Config(format!("system: {e} [{}]", e.name()));
        match self.kind {
            SystemKind::CavityAtom | SystemKind::TwoCavity => {
                let (wa, wc, va, vc, ga, gc) = if self.kind == SystemKind::CavityAtom {
                    (self.omega_a, self.omega_c, self.v_a, self.v_c, self.gamma_prime_a, self.gamma_prime_c)
                } else {
                    (self.omega_1, self.omega_2, self.v_1, self.v_2, self.gamma_prime_1, self.gamma_prime_2)
                };
                let (wa, wc, va, vc) = (get(wa), get(wc), get(va), get(vc));
                let j = match self.j {
                    Some(j) => j,
                    None => solve_j_for_ee(wa, wc, va, vc).map_err(model)?,
                };
                let p = SystemParams::new(wa, wc, j, va, vc).with_losses(get(ga), get(gc));
                p.validate(true).map_err(model)?;
                Ok(if self.kind == SystemKind::CavityAtom { System::CavityAtom(p) } else { System::TwoCavity(p) })
            }
            SystemKind::ThreeMode => {
                let mut p = ThreeModeParams::new(
                    get(self.omega_1),
                    get(self.omega_2),
                    get(self.omega_a),
                    get(self.j),
                    0.0,
                    get(self.v_1),
                    get(self.v_2),
                );
                p.gamma_prime_1 = get(self.gamma_prime_1);
                p.gamma_prime_2 = get(self.gamma_prime_2);
                p.gamma_prime_a = get(self.gamma_prime_a);
                p.g_coupling = match self.g {
                    Some(g) => g,
                    None => solve_g_for_ee(&p).map_err(model)?,
                };
                p.validate().map_err(model)?;
                Ok(System::ThreeMode(p))
            }
        }
    }
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(config_err(field, format!("must be positive, got {v}")))
    }
}

impl NumericsBlock {
    pub fn trap(&self) -> TrapNumerics {
        TrapNumerics {
            cells_per_unit: self.cells_per_unit,
            cells_per_sigma: self.cells_per_sigma,
            sample_interval: self.sample_interval_gamma,
            calibrated: self.calibrated,
            steady_window: self.steady_window_gamma,
            steady_rel_tol: self.steady_rel_tol,
        }
    }

    pub fn master(&self, gamma: f64) -> MasterOptions {
        MasterOptions {
            dt: self.master_dt_gamma.map(|d| d / gamma),
            sample_interval: self.sample_interval_gamma / gamma,
            convergence_tol: self.master_convergence_tol,
            max_halvings: self.master_max_halvings,
            ..MasterOptions::default()
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        positive("numerics.cells_per_unit", self.cells_per_unit)?;
        positive("numerics.cells_per_sigma", self.cells_per_sigma)?;
        positive("numerics.sample_interval_gamma", self.sample_interval_gamma)?;
        positive("numerics.steady_window_gamma", self.steady_window_gamma)?;
        positive("numerics.steady_rel_tol", self.steady_rel_tol)?;
        positive("numerics.master_convergence_tol", self.master_convergence_tol)?;
        if let Some(dt) = self.master_dt_gamma {
            positive("numerics.master_dt_gamma", dt)?;
        }
        Ok(())
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Normalized TOML: every default written out.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Checks everything that can be checked without simulating.
    pub fn validate(&self) -> Result<(), CliError> {
        self.system.resolve()?;
        self.numerics.validate()?;
        if let Some(p) = &self.pulse {
            positive("pulse.sigma_gamma", p.sigma_gamma)?;
            if !p.carrier_offset_gamma.is_finite() {
                return Err(config_err("pulse.carrier_offset_gamma", "must be finite"));
            }
        }
        if let Some(g) = &self.grid {
            positive("grid.dx_gamma", g.dx_gamma)?;
            let idx = -g.x0_gamma / g.dx_gamma;
            if g.x0_gamma >= 0.0 || (idx - idx.round()).abs() > 1e-9 * idx.abs().max(1.0) {
                return Err(config_err("grid.x0_gamma", "must be a negative whole number of cells"));
            }
            if g.cells < 16 || idx.round() as usize >= g.cells {
                return Err(config_err("grid.cells", "must be at least 16 and extend past x = 0"));
            }
        }
        let kind = self.system.kind;
        let need_cavity_atom = |what: &str| {
            if kind == SystemKind::CavityAtom {
                Ok(())
            } else {
                Err(config_err("experiment.kind", format!("{what} needs a cavity-atom system")))
            }
        };
        match &self.experiment {
            Experiment::Linear { t_final_gamma } => {
                positive("experiment.t_final_gamma", *t_final_gamma)?;
                if kind == SystemKind::ThreeMode {
                    return Err(config_err("experiment.kind", "linear runs need a cavity-atom or two-cavity system"));
                }
            }
            Experiment::Coherent { mean_photons, t_final_gamma, n_max } => {
                positive("experiment.mean_photons", *mean_photons)?;
                positive("experiment.t_final_gamma", *t_final_gamma)?;
                if kind == SystemKind::TwoCavity {
                    return Err(config_err("experiment.kind", "coherent runs need an atom"));
                }
                if let Some(n) = n_max {
                    let need = FockSpaceSpec::cutoff_for(*mean_photons);
                    if *n < need {
                        return Err(config_err("experiment.n_max", format!("{n} is below the cutoff {need} for <N> = {mean_photons}")));
                    }
                }
            }
            Experiment::Trap {} => need_cavity_atom("trap")?,
            Experiment::Release { sigmas_gamma, target } => {
                need_cavity_atom("release")?;
                if sigmas_gamma.is_empty() || sigmas_gamma.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(config_err("experiment.sigmas_gamma", "must be non-empty and strictly ascending"));
                }
                for s in sigmas_gamma {
                    positive("experiment.sigmas_gamma", *s)?;
                }
                positive("experiment.target", *target)?;
            }
            Experiment::Pipeline { sigma_release_gamma, extract_threshold, right_edge_gamma } => {
                need_cavity_atom("pipeline")?;
                positive("experiment.sigma_release_gamma", *sigma_release_gamma)?;
                positive("experiment.extract_threshold", *extract_threshold)?;
                positive("experiment.right_edge_gamma", *right_edge_gamma)?;
            }
            Experiment::SweepVcSigma { rows, cols, j_mask_fraction } | Experiment::SweepKSigma { rows, cols, j_mask_fraction } => {
                need_cavity_atom("a sweep")?;
                rows.axis("experiment.rows", "row")?;
                cols.axis("experiment.cols", "sigma_gamma")?;
                positive("experiment.j_mask_fraction", *j_mask_fraction)?;
            }
            Experiment::LossCompare { ratios, sigma_gamma, duration_gamma, full_window_gamma, cavity_window_gamma } => {
                need_cavity_atom("loss-compare")?;
                if ratios.is_empty() {
                    return Err(config_err("experiment.ratios", "must not be empty"));
                }
                for r in ratios {
                    positive("experiment.ratios", *r)?;
                }
                positive("experiment.sigma_gamma", *sigma_gamma)?;
                positive("experiment.duration_gamma", *duration_gamma)?;
                for (name, w) in [("experiment.full_window_gamma", full_window_gamma), ("experiment.cavity_window_gamma", cavity_window_gamma)] {
                    if !(w[0] >= 0.0 && w[1] > w[0] && w[1] <= *duration_gamma) {
                        return Err(config_err(name, "must satisfy 0 <= start < end <= duration_gamma"));
                    }
                }
            }
        }
        Ok(())
    }
}

impl AxisBlock {
    pub fn axis(&self, field: &str, name: &str) -> Result<eesim_core::protocols::Axis, CliError> {
        let scale = match self.scale {
            ScaleName::Linear => eesim_core::protocols::Scale::Linear,
            ScaleName::Log => eesim_core::protocols::Scale::Log,
        };
        eesim_core::protocols::Axis::new(name, self.min, self.max, self.n, scale).map_err(|e| config_err(field, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRAP: &str = r#"
[system]
kind = "cavity-atom"
omega_a = 1.0
omega_c = 0.96
v_a = 0.1
v_c = 0.05

[experiment]
kind = "trap"
"#;

    #[test]
    fn minimal_config_resolves_the_ee_coupling() {
        let cfg = RunConfig::parse(TRAP).unwrap();
        let System::CavityAtom(p) = cfg.system.resolve().unwrap() else { panic!() };
        assert!((p.j_coupling - 0.0266667).abs() < 1e-6);
        assert_eq!(cfg.numerics, NumericsBlock::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = TRAP.replace("v_c = 0.05", "v_c = 0.05\nv_x = 1.0");
        let e = RunConfig::parse(&bad).unwrap_err();
        assert!(e.to_string().contains("v_x"), "{e}");
        let bad = format!("{TRAP}\n[numerics]\ncell_per_unit = 3\n");
        assert!(RunConfig::parse(&bad).is_err());
        let bad = TRAP.replace("kind = \"trap\"", "kind = \"trap\"\nsigma = 2");
        assert!(RunConfig::parse(&bad).is_err());
    }

    #[test]
    fn fields_of_other_system_kinds_are_rejected() {
        let bad = TRAP.replace("v_c = 0.05", "v_c = 0.05\nv_1 = 0.1");
        let e = RunConfig::parse(&bad).unwrap_err();
        assert!(e.to_string().contains("system.v_1"), "{e}");
    }

    #[test]
    fn degenerate_couplings_are_a_config_error() {
        let bad = TRAP.replace("v_c = 0.05", "v_c = 0.1");
        let e = RunConfig::parse(&bad).unwrap_err();
        assert!(e.to_string().contains("DegenerateCouplings"), "{e}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn grid_origin_must_fall_on_a_cell_edge() {
        let good = format!("{TRAP}\n[grid]\ncells = 1024\ndx_gamma = 0.05\nx0_gamma = -11.0\n");
        RunConfig::parse(&good).unwrap();
        let bad = format!("{TRAP}\n[grid]\ncells = 1024\ndx_gamma = 0.05\nx0_gamma = -11.02\n");
        assert!(RunConfig::parse(&bad).is_err());
    }

    #[test]
    fn normalized_form_round_trips() {
        let cfg = RunConfig::parse(TRAP).unwrap();
        let again = RunConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn three_mode_solves_g() {
        let text = r#"
[system]
kind = "three-mode"
omega_1 = 1.0
omega_2 = 0.96
omega_a = 1.0
v_1 = 0.1
v_2 = 0.05
j = 0.003

[experiment]
kind = "coherent"
mean_photons = 2.0
t_final_gamma = 40.0
"#;
        let cfg = RunConfig::parse(text).unwrap();
        let System::ThreeMode(p) = cfg.system.resolve().unwrap() else { panic!() };
        assert!(eesim_core::model::three_mode_ee_residual(&p).unwrap().abs() < 1e-10);
    }

    fn experiment() -> impl proptest::strategy::Strategy<Value = Experiment> {
        use proptest::prelude::*;
        prop_oneof![
            (1.0f64..100.0).prop_map(|t| Experiment::Linear { t_final_gamma: t }),
            Just(Experiment::Trap {}),
            (0.001f64..0.2).prop_map(|target| Experiment::Release { sigmas_gamma: vec![0.5, 1.5, 4.0], target }),
            (0.5f64..8.0, 0.01f64..0.5).prop_map(|(s, e)| Experiment::Pipeline { sigma_release_gamma: s, extract_threshold: e, right_edge_gamma: 61.0 }),
            (2usize..30, 0.01f64..0.5).prop_map(|(n, f)| Experiment::SweepKSigma {
                rows: AxisBlock { min: -3.0, max: 2.5, n, scale: ScaleName::Linear },
                cols: AxisBlock { min: 0.3, max: 4.0, n: n + 1, scale: ScaleName::Log },
                j_mask_fraction: f,
            }),
            (1.0f64..60.0).prop_map(|d| Experiment::LossCompare {
                ratios: vec![0.01, 0.3],
                sigma_gamma: 0.7,
                duration_gamma: d,
                full_window_gamma: [0.0, d],
                cavity_window_gamma: [0.25 * d, 0.5 * d],
            }),
        ]
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(200))]

        #[test]
        fn normalized_configs_round_trip(
            wc in 0.8f64..1.2,
            va in 0.02f64..0.2,
            r in 0.1f64..0.9,
            loss in proptest::option::of(0.0f64..0.01),
            exp in experiment(),
            pulse in proptest::option::of((0.1f64..5.0, proptest::bool::ANY, -3.0f64..3.0)),
            interval in 0.1f64..4.0,
            calibrated in proptest::bool::ANY,
        ) {
            let text = format!("[system]\nkind = \"cavity-atom\"\nomega_a = 1.0\nomega_c = {wc:?}\nv_a = {va:?}\nv_c = {:?}\n", r * va);
            let mut cfg = RunConfig::parse(&format!("{text}[experiment]\nkind = \"trap\"\n")).unwrap();
            cfg.system.gamma_prime_c = loss;
            cfg.experiment = exp;
            cfg.pulse = pulse.map(|(s, bright, off)| PulseBlock {
                sigma_gamma: s,
                center_gamma: None,
                carrier: if bright { CarrierRef::Bright } else { CarrierRef::Ee },
                carrier_offset_gamma: off,
            });
            cfg.numerics.sample_interval_gamma = interval;
            cfg.numerics.calibrated = calibrated;
            cfg.validate().unwrap();
            let again = RunConfig::parse(&cfg.to_toml()).unwrap();
            proptest::prop_assert_eq!(&again, &cfg);
            proptest::prop_assert_eq!(again.to_toml(), cfg.to_toml());
        }
    }
}
