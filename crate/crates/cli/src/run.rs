//! Experiment dispatch, artifact bookkeeping and the spectrum report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use eesim_core::coherent::{build_generator, build_three_mode_generator, evolve_master, DriveEnvelope, FockSpaceSpec, SteadySummary};
use eesim_core::grid::{gaussian_pulse, restrict_to_incoming, GridSpec, PulseSpec};
use eesim_core::linalg::CMat;
use eesim_core::model::{ee_condition_residual, three_mode_ee_residual, three_mode_heff, ComplexSpectrum, SpectralSummary, SystemParams};
use eesim_core::onephoton::{classical_two_cavity, evolve_single, post_pulse_ratio, EvolveOptions, SingleExcState};
use eesim_core::protocols::{
    bunching, incoming_center, loss_comparison, optimal_trap_pipeline, release, sweep_k_sigma, sweep_vc_sigma, trap_efficiency, trap_grid,
    LossOptions, PipelineOptions, SweepKind, SweepSpec, TrapNumerics,
};
use eesim_core::trajectory::Trajectory;
use eesim_core::twophoton::build_gaussian_two_photon;

use crate::config::{CarrierRef, Experiment, PulseBlock, RunConfig, System};
use crate::error::CliError;
use crate::manifest::{Artifact, Derived, GridInfo, RunManifest};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Files written by a run, removed again if the run fails.
struct Outputs {
    dir: PathBuf,
    created: bool,
    written: Vec<PathBuf>,
}

impl Outputs {
    fn open(dir: &Path) -> Result<Self, CliError> {
        let created = !dir.exists();
        std::fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), created, written: Vec::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.push(p.clone());
        p
    }

    fn trajectory(&mut self, name: &str, traj: &Trajectory) -> Result<(), CliError> {
        let p = self.path(name);
        traj.save_csv(&p)?;
        Ok(())
    }

    fn record(&mut self, files: &[PathBuf]) {
        self.written.extend(files.iter().cloned());
    }

    fn cleanup(self) {
        for p in &self.written {
            let _ = std::fs::remove_file(p);
        }
        if self.created {
            let _ = std::fs::remove_dir(&self.dir);
        }
    }
}

type Results = BTreeMap<String, Option<f64>>;

fn put(r: &mut Results, key: impl Into<String>, v: f64) {
    r.insert(key.into(), v.is_finite().then_some(v));
}

/// Carrier of the configured pulse as a detuning from the EE frame.
fn carrier(system: &System, pulse: &PulseBlock) -> Result<f64, CliError> {
    let gamma = system.gamma_unit();
    let offset = pulse.carrier_offset_gamma * gamma;
    match (system, pulse.carrier) {
        (_, CarrierRef::Ee) => Ok(offset),
        (System::CavityAtom(p) | System::TwoCavity(p), CarrierRef::Bright) => Ok(p.omega_bright() - p.omega_ee() + offset),
        (System::ThreeMode(_), CarrierRef::Bright) => Err(CliError::Config("pulse.carrier: three-mode drives are referenced to the EE".into())),
    }
}

fn grid_info(g: &GridSpec<f64>) -> GridInfo {
    GridInfo { cells: g.n_cells, dx: g.dx, x0: g.x0, coupling_index: g.coupling_index, chi_bytes: (g.n_cells * g.n_cells * 16) as u64 }
}

fn explicit_grid(cfg: &RunConfig, gamma: f64) -> Result<Option<GridSpec<f64>>, CliError> {
    match &cfg.grid {
        None => Ok(None),
        Some(g) => {
            let dx = g.dx_gamma / gamma;
            let idx = (-g.x0_gamma / g.dx_gamma).round() as usize;
            Ok(Some(GridSpec::new(g.cells, dx, idx)?))
        }
    }
}

/// Waveguide pulse of the config: `(center, sigma)` in time units.
fn waveguide_pulse(pulse: &PulseBlock, gamma: f64) -> (f64, f64) {
    let sigma = pulse.sigma_gamma / gamma;
    let center = pulse.center_gamma.map(|c| c / gamma).unwrap_or_else(|| incoming_center(gamma, sigma));
    (center, sigma)
}

fn linear_grid(cfg: &RunConfig, gamma: f64, t_final: f64, numerics: &TrapNumerics) -> Result<GridSpec<f64>, CliError> {
    if let Some(g) = explicit_grid(cfg, gamma)? {
        return Ok(g);
    }
    let (center, sigma) = waveguide_pulse(&cfg.pulse.clone().unwrap_or_default(), gamma);
    let dx = numerics.dx(gamma, sigma);
    Ok(GridSpec::spanning(dx, center - 5.0 * sigma - 1.0 / gamma, (center + 5.0 * sigma + t_final + 2.0 / gamma).max(1.0 / gamma))?)
}

fn trap_grid_for(cfg: &RunConfig, gamma: f64, numerics: &TrapNumerics) -> Result<GridSpec<f64>, CliError> {
    if let Some(g) = explicit_grid(cfg, gamma)? {
        return Ok(g);
    }
    let (center, sigma) = waveguide_pulse(&cfg.pulse.clone().unwrap_or_default(), gamma);
    Ok(trap_grid(gamma, center, sigma, numerics)?)
}

/// Everything derivable from the config without running the experiment.
pub fn derive(cfg: &RunConfig) -> Result<Derived, CliError> {
    let system = cfg.system.resolve()?;
    let gamma = system.gamma_unit();
    let pulse = cfg.pulse.clone().unwrap_or_default();
    let numerics = cfg.numerics.trap();
    let mut d = match &system {
        System::CavityAtom(p) | System::TwoCavity(p) => Derived {
            gamma_unit: gamma,
            j_coupling: p.j_coupling,
            g_coupling: None,
            ee_residual: ee_condition_residual(p),
            omega_ee: p.omega_ee(),
            omega_bright: Some(p.omega_bright()),
            carrier: None,
            grid: None,
            n_max: None,
        },
        System::ThreeMode(p) => Derived {
            gamma_unit: gamma,
            j_coupling: p.j_coupling,
            g_coupling: Some(p.g_coupling),
            ee_residual: three_mode_ee_residual(p)?,
            omega_ee: p.omega_ee(),
            omega_bright: None,
            carrier: None,
            grid: None,
            n_max: None,
        },
    };
    match &cfg.experiment {
        Experiment::Linear { t_final_gamma } => {
            d.carrier = Some(d.omega_ee + carrier(&system, &pulse)?);
            d.grid = Some(grid_info(&linear_grid(cfg, gamma, t_final_gamma / gamma, &numerics)?));
        }
        Experiment::Coherent { mean_photons, n_max, .. } => {
            d.carrier = Some(d.omega_ee + carrier(&system, &pulse)?);
            d.n_max = Some(n_max.unwrap_or_else(|| FockSpaceSpec::cutoff_for(*mean_photons)));
        }
        Experiment::Trap {} => {
            d.carrier = Some(d.omega_ee + carrier(&system, &pulse)?);
            d.grid = Some(grid_info(&trap_grid_for(cfg, gamma, &numerics)?));
        }
        _ => {}
    }
    Ok(d)
}

/// Runs the experiment of `cfg` and writes its artifacts and manifest.
/// On failure every file this run created is removed.
pub fn run(cfg: &RunConfig, dry_run: bool) -> Result<RunManifest, CliError> {
    let t0 = Instant::now();
    let derived = derive(cfg)?;
    let mut out = Outputs::open(&cfg.output.directory)?;
    let outcome = if dry_run { Ok(Results::new()) } else { execute(cfg, &mut out) };
    let finish = |out: &mut Outputs, results: Results| -> Result<RunManifest, CliError> {
        let mut artifacts = Vec::new();
        for p in &out.written {
            artifacts.push(Artifact::of(&out.dir, p)?);
        }
        let manifest = RunManifest {
            tool: format!("eesim {}", env!("CARGO_PKG_VERSION")),
            experiment: cfg.experiment.name().to_string(),
            dry_run,
            config: cfg.clone(),
            derived: derived.clone(),
            artifacts,
            results,
            wall_seconds: t0.elapsed().as_secs_f64(),
        };
        let path = out.path(MANIFEST_FILE);
        std::fs::write(&path, manifest.to_json())?;
        Ok(manifest)
    };
    match outcome.and_then(|r| finish(&mut out, r)) {
        Ok(m) => Ok(m),
        Err(e) => {
            out.cleanup();
            Err(e)
        }
    }
}

fn execute(cfg: &RunConfig, out: &mut Outputs) -> Result<Results, CliError> {
    let system = cfg.system.resolve()?;
    let gamma = system.gamma_unit();
    let pulse = cfg.pulse.clone().unwrap_or_default();
    let numerics = cfg.numerics.trap();
    let mut r = Results::new();
    match &cfg.experiment {
        Experiment::Linear { t_final_gamma } => {
            let p = system.cavity_atom().expect("validated");
            let frame = p.in_frame(p.omega_ee());
            let t_final = t_final_gamma / gamma;
            let grid = linear_grid(cfg, gamma, t_final, &numerics)?;
            let (center, sigma) = waveguide_pulse(&pulse, gamma);
            let spec = PulseSpec::new(center, sigma, carrier(&system, &pulse)?);
            let stride = ((numerics.sample_interval / gamma / grid.dx).round() as usize).max(1);
            let opts = EvolveOptions { sample_every: stride, gamma_unit: gamma, ..Default::default() };
            let (traj, stored): (Trajectory, [&str; 2]) = match system {
                System::TwoCavity(_) => (classical_two_cavity(&frame, &grid, &spec, t_final, &opts)?, ["intensity_1", "intensity_2"]),
                _ => {
                    let mut xi = gaussian_pulse(&spec, &grid)?;
                    restrict_to_incoming(&mut xi, &grid, 1e-6)?;
                    (evolve_single(&frame, &grid, &SingleExcState::photon(xi), t_final, grid.dx, &opts)?.0, ["pop_atom", "pop_cavity"])
                }
            };
            let after = -center + 5.0 * sigma + 10.0 / gamma;
            put(&mut r, "post_pulse_ratio", post_pulse_ratio(&traj, &stored, after));
            put(&mut r, "peak_stored", traj.column(stored[0]).unwrap_or_default().iter().zip(traj.column(stored[1]).unwrap_or_default()).map(|(a, b)| a + b).fold(0.0, f64::max));
            out.trajectory("trajectory.csv", &traj)?;
        }
        Experiment::Coherent { mean_photons, t_final_gamma, n_max } => {
            let n_max = n_max.unwrap_or_else(|| FockSpaceSpec::cutoff_for(*mean_photons));
            let gen = match &system {
                System::CavityAtom(p) => build_generator(p, p.omega_ee(), FockSpaceSpec::new(n_max, 1)?)?,
                System::ThreeMode(p) => build_three_mode_generator(p, p.omega_ee(), FockSpaceSpec::new(n_max, 2)?)?,
                System::TwoCavity(_) => unreachable!("rejected by validation"),
            };
            let sigma = pulse.sigma_gamma / gamma;
            let center = pulse.center_gamma.map(|c| c / gamma).unwrap_or(5.0 * sigma);
            let drive = DriveEnvelope::gaussian(*mean_photons, center, sigma, carrier(&system, &pulse)?)?;
            let run = evolve_master(&gen, &drive, t_final_gamma / gamma, &cfg.numerics.master(gamma))?;
            put(&mut r, "dt", run.dt);
            if let Some(s) = SteadySummary::of(&run.trajectory, 5.0 / gamma) {
                for (k, (v, slope)) in s.p_ee.iter().zip(&s.p_ee_slope).enumerate() {
                    put(&mut r, format!("p_ee{}", k + 1), *v);
                    put(&mut r, format!("p_ee{}_slope_per_gamma", k + 1), slope / gamma);
                }
                put(&mut r, "atom_cavity_ratio", s.atom_cavity_ratio());
            }
            out.trajectory("trajectory.csv", &run.trajectory)?;
        }
        Experiment::Trap {} => {
            let p = system.cavity_atom().expect("validated");
            let frame = p.in_frame(p.omega_ee());
            let grid = trap_grid_for(cfg, gamma, &numerics)?;
            let (center, sigma) = waveguide_pulse(&pulse, gamma);
            let spec = PulseSpec::new(center, sigma, carrier(&system, &pulse)?);
            let input = build_gaussian_two_photon(&spec, &spec, &grid)?;
            let o = trap_efficiency(&frame, &input, &numerics)?;
            put(&mut r, "p_ee", o.p_ee);
            put(&mut r, "t_steady_gamma", o.t_steady * gamma);
            out.trajectory("trajectory.csv", &o.trajectory)?;
        }
        Experiment::Release { sigmas_gamma, target } => {
            let p = system.cavity_atom().expect("validated");
            let mut table = Trajectory::new(&["sigma_gamma", "residual", "t_steady_gamma"]);
            let mut best = None;
            for s in sigmas_gamma {
                let o = release(p, s / gamma, &numerics)?;
                table.push(vec![*s, o.residual, o.t_steady * gamma]);
                put(&mut r, format!("residual_sigma_{s}"), o.residual);
                if best.is_none() && o.residual < *target {
                    best = Some(*s);
                }
                out.trajectory(&format!("release_sigma_{s}.csv"), &o.trajectory)?;
            }
            let res = table.column("residual").unwrap_or_default();
            put(&mut r, "monotone", if res.windows(2).all(|w| w[1] <= w[0]) { 1.0 } else { 0.0 });
            out.trajectory("release.csv", &table)?;
            match best {
                Some(s) => put(&mut r, "best_sigma_gamma", s),
                None => return Err(eesim_core::Error::TargetNotMet { target: *target }.into()),
            }
        }
        Experiment::Pipeline { sigma_release_gamma, extract_threshold, right_edge_gamma } => {
            let p = system.cavity_atom().expect("validated");
            let opts = PipelineOptions { extract_threshold: *extract_threshold, right_edge: *right_edge_gamma };
            let dir = cfg.output.grids.then(|| out.dir.clone());
            let o = optimal_trap_pipeline(p, sigma_release_gamma / gamma, &numerics, &opts, dir.as_deref())?;
            out.record(&o.artifacts);
            let b = bunching(&o.input, 1.0 / gamma)?;
            put(&mut r, "release_residual", o.release_residual);
            put(&mut r, "p_ee", o.p_ee);
            put(&mut r, "t_steady_gamma", o.t_steady * gamma);
            put(&mut r, "diagonal_weight", b.diagonal_weight);
            put(&mut r, "reference_weight", b.reference_weight);
            out.trajectory("release_trajectory.csv", &o.release_trajectory)?;
            out.trajectory("trap_trajectory.csv", &o.trap_trajectory)?;
        }
        Experiment::SweepVcSigma { rows, cols, j_mask_fraction } | Experiment::SweepKSigma { rows, cols, j_mask_fraction } => {
            let p = *system.cavity_atom().expect("validated");
            let ratio = matches!(cfg.experiment, Experiment::SweepVcSigma { .. });
            let mut row_axis = rows.axis("experiment.rows", if ratio { "vc_over_va" } else { "k" })?;
            if !ratio {
                row_axis.min = p.omega_bright() + rows.min * gamma;
                row_axis.max = p.omega_bright() + rows.max * gamma;
            }
            let spec = SweepSpec {
                kind: if ratio { SweepKind::RatioSigma } else { SweepKind::CarrierSigma },
                rows: row_axis,
                cols: cols.axis("experiment.cols", "sigma_gamma")?,
                base: p,
                j_mask_fraction: *j_mask_fraction,
                numerics,
            };
            let res = if ratio { sweep_vc_sigma(&spec)? } else { sweep_k_sigma(&spec)? };
            if let Some((row, col, v)) = res.argmax() {
                put(&mut r, "argmax_row", row);
                put(&mut r, "argmax_sigma_gamma", col);
                put(&mut r, "max_p_ee", v);
            }
            let masked = (0..res.rows.len()).flat_map(|i| (0..res.cols.len()).map(move |j| (i, j))).filter(|&(i, j)| res.is_masked(i, j)).count();
            put(&mut r, "masked_cells", masked as f64);
            for (label, omega) in &res.overlays {
                put(&mut r, format!("line_{label}"), *omega);
            }
            let path = out.path("sweep.csv");
            res.save_csv(&path)?;
        }
        Experiment::LossCompare { ratios, sigma_gamma, duration_gamma, full_window_gamma, cavity_window_gamma } => {
            let p = system.cavity_atom().expect("validated");
            let opts = LossOptions {
                sigma: *sigma_gamma,
                duration: *duration_gamma,
                full_window: (full_window_gamma[0], full_window_gamma[1]),
                cavity_window: (cavity_window_gamma[0], cavity_window_gamma[1]),
            };
            let branches = loss_comparison(p, ratios, &opts, &numerics)?;
            let mut table = Trajectory::new(&["ratio", "gamma_prime_c", "full_decay", "cavity_only_decay", "predicted_decay", "full_peak", "cavity_only_peak"]);
            for b in &branches {
                table.push(vec![b.ratio, b.gamma_prime_c, b.full_decay, b.cavity_only_decay, b.predicted_decay, b.full_peak, b.cavity_only_peak]);
                put(&mut r, format!("decay_error_{}", b.ratio), (b.full_decay / b.predicted_decay - 1.0).abs());
                out.trajectory(&format!("full_{}.csv", b.ratio), &b.full)?;
                out.trajectory(&format!("cavity_only_{}.csv", b.ratio), &b.cavity_only)?;
            }
            out.trajectory("loss.csv", &table)?;
        }
    }
    Ok(r)
}

fn eig_rows(s: &ComplexSpectrum<f64>) -> Vec<(f64, f64)> {
    s.eigenvalues.iter().map(|z| (z.re, z.im)).collect()
}

/// Spectrum report of a config's system; also written to `spectrum.csv`
/// in the output directory.
pub fn spectrum(cfg: &RunConfig) -> Result<String, CliError> {
    let system = cfg.system.resolve()?;
    let mut text = String::new();
    let mut rows: Vec<(String, f64, f64)> = Vec::new();
    match &system {
        System::CavityAtom(p) | System::TwoCavity(p) => {
            let s = SpectralSummary::of(p)?;
            let (a, c) = s.ee_amplitudes;
            rows.push(("J".into(), p.j_coupling, 0.0));
            rows.push(("ee_residual".into(), s.ee_residual, 0.0));
            rows.push(("closed_form_c".into(), p.omega_c - p.j_coupling * p.v_c / p.v_a, 0.0));
            rows.push(("closed_form_a".into(), p.omega_a - p.j_coupling * p.v_a / p.v_c, 0.0));
            rows.push(("omega_EE1".into(), s.omega_ee, s.single.eigenvalues[0].im));
            rows.push(("omega_B1".into(), s.omega_bright, -s.bright_decay));
            rows.push(("Gamma".into(), s.gamma_unit, 0.0));
            rows.push(("two_bright".into(), s.two_bright.re, s.two_bright.im));
            rows.push(("two_dark".into(), s.two_dark.re, s.two_dark.im));
            rows.push(("ee_amplitude_atom".into(), a, 0.0));
            rows.push(("ee_amplitude_cavity".into(), c, 0.0));
            rows.push(("ee_balance".into(), p.v_a * a + p.v_c * c, 0.0));
        }
        System::ThreeMode(p) => {
            let h: CMat<f64> = three_mode_heff(p);
            let s = ComplexSpectrum::of(&h)?;
            rows.push(("J".into(), p.j_coupling, 0.0));
            rows.push(("g".into(), p.g_coupling, 0.0));
            rows.push(("ee_residual".into(), three_mode_ee_residual(p)?, 0.0));
            rows.push(("Gamma".into(), p.gamma_unit(), 0.0));
            for (k, (re, im)) in eig_rows(&s).into_iter().enumerate() {
                rows.push((format!("lambda_{}", k + 1), re, im));
            }
        }
    }
    let _ = writeln!(text, "{:<22} {:>22} {:>22}", "quantity", "re", "im");
    for (name, re, im) in &rows {
        let _ = writeln!(text, "{name:<22} {re:>22.12e} {im:>22.12e}");
    }
    let mut csv = String::from("quantity,re,im\n");
    for (name, re, im) in &rows {
        let _ = writeln!(csv, "{name},{re:e},{im:e}");
    }
    let mut out = Outputs::open(&cfg.output.directory)?;
    let path = out.path("spectrum.csv");
    if let Err(e) = std::fs::write(&path, csv) {
        out.cleanup();
        return Err(CliError::Output(format!("{}: {e}", path.display())));
    }
    Ok(text)
}

/// Lab-frame parameters of a cavity-atom config, for tests and scripts.
pub fn cavity_atom_params(cfg: &RunConfig) -> Result<SystemParams<f64>, CliError> {
    cfg.system.resolve()?.cavity_atom().copied().ok_or_else(|| CliError::Config("system.kind: expected a cavity-atom system".into()))
}
