//! Experiments built on the two-photon engine: trapping efficiency, release
//! and the release / reverse / trap pipeline, the efficiency sweeps and the
//! loss comparison.
//!
//! Everything here runs in `f64` in the frame rotating at the EE frequency;
//! carriers are detunings from that frame.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fit::exponential_decay_rate;
use crate::grid::{gaussian_pulse, GridSpec, PulseSpec};
use crate::model::{ee_condition_residual, solve_j_for_ee, SpectralSummary, SystemParams};
use crate::trajectory::Trajectory;
use crate::twophoton::{
    build_gaussian_two_photon, evolve_two_photon, evolve_until_steady, extract_outgoing, make_release_state, save_ee2p,
    time_reverse, SteadyOutcome, SteadyStateRule, TwoPhotonOptions, TwoPhotonPulse, TwoPhotonState, Watch,
};

/// Environment variable overriding the worker-pool size.
pub const WORKERS_ENV: &str = "EESIM_WORKERS";

/// Grid resolution and sampling used by the protocols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapNumerics {
    /// Cells per `1/Gamma`.
    pub cells_per_unit: f64,
    /// Lower bound on cells per pulse width.
    pub cells_per_sigma: f64,
    /// Sampling interval in units of `1/Gamma`.
    pub sample_interval: f64,
    pub calibrated: bool,
    /// Steady-state window in `1/Gamma` and its relative tolerance.
    pub steady_window: f64,
    pub steady_rel_tol: f64,
}

impl Default for TrapNumerics {
    fn default() -> Self {
        Self {
            cells_per_unit: 20.0,
            cells_per_sigma: 10.0,
            sample_interval: 0.5,
            calibrated: true,
            steady_window: 2.0,
            steady_rel_tol: 1e-4,
        }
    }
}

impl TrapNumerics {
    /// Sparser sampling for sweeps, where only the settled value is kept.
    pub fn sweep() -> Self {
        Self { sample_interval: 2.0, ..Self::default() }
    }

    pub fn dx(&self, gamma: f64, sigma: f64) -> f64 {
        (1.0 / (self.cells_per_unit * gamma)).min(sigma / self.cells_per_sigma)
    }

    pub fn rule(&self, gamma: f64, arrival: f64) -> SteadyStateRule {
        SteadyStateRule { window: self.steady_window / gamma, rel_tol: self.steady_rel_tol, ..SteadyStateRule::standard(gamma, arrival) }
    }

    pub fn options(&self, gamma: f64, dx: f64) -> TwoPhotonOptions {
        TwoPhotonOptions {
            sample_every: ((self.sample_interval / gamma / dx).round() as usize).max(1),
            gamma_unit: gamma,
            calibrated: self.calibrated,
            ..Default::default()
        }
    }
}

/// Centre of an incoming Gaussian of width `sigma`: `-5/Gamma`, moved back
/// to `-5 sigma` for wide pulses so the packet starts outside the system.
pub fn incoming_center(gamma: f64, sigma: f64) -> f64 {
    -(5.0 / gamma).max(5.0 * sigma)
}

/// Grid holding an incoming packet `(center, sigma)` and everything that
/// can leave the system before the steady-state rule gives up.
pub fn trap_grid(gamma: f64, center: f64, sigma: f64, numerics: &TrapNumerics) -> Result<GridSpec<f64>> {
    let dx = numerics.dx(gamma, sigma);
    let left = center - 5.0 * sigma - 1.0 / gamma;
    let right = center + 5.0 * sigma + 60.0 / gamma + 1.0 / gamma;
    GridSpec::spanning(dx, left, right.max(1.0 / gamma))
}

fn frame(params: &SystemParams<f64>) -> SystemParams<f64> {
    params.in_frame(params.omega_ee())
}

fn check_ee(params: &SystemParams<f64>) -> Result<()> {
    let r = ee_condition_residual(params);
    if r.abs() >= 1e-9 {
        return Err(Error::InvalidParameter { name: "j_coupling", reason: format!("EE condition residual {r:e} exceeds 1e-9") });
    }
    Ok(())
}

/// Result of a trapping run.
#[derive(Debug, Clone)]
pub struct TrapOutcome {
    pub p_ee: f64,
    pub t_steady: f64,
    pub trajectory: Trajectory,
}

/// Runs `pulse` into the system until the steady-state rule fires on
/// `P_EE` and returns the settled value. `params` and the pulse carrier
/// must share a frame; arrival is taken as `-<x>` of the packet.
pub fn trap_efficiency(params: &SystemParams<f64>, pulse: &TwoPhotonPulse<f64>, numerics: &TrapNumerics) -> Result<TrapOutcome> {
    check_ee(params)?;
    let gamma = params.gamma_unit();
    if pulse.norm() == 0.0 {
        let mut trajectory = Trajectory::new(&crate::twophoton::TWO_PHOTON_COLUMNS);
        trajectory.add_meta("t_steady", 0.0);
        return Ok(TrapOutcome { p_ee: 0.0, t_steady: 0.0, trajectory });
    }
    let arrival = (-pulse.mean_position()).max(0.0);
    let rule = numerics.rule(gamma, arrival);
    let st = TwoPhotonState::from_pulse(pulse);
    let out = evolve_until_steady(params, &st, &rule, Watch::PEe, &numerics.options(gamma, pulse.grid.dx))?;
    Ok(TrapOutcome { p_ee: out.value, t_steady: out.t_steady, trajectory: out.trajectory })
}

/// Two identical Gaussian photons `(center, sigma, carrier)` on the grid of
/// [`trap_grid`].
pub fn gaussian_trap(params_frame: &SystemParams<f64>, sigma: f64, carrier: f64, numerics: &TrapNumerics) -> Result<TrapOutcome> {
    let gamma = params_frame.gamma_unit();
    let center = incoming_center(gamma, sigma);
    let grid = trap_grid(gamma, center, sigma, numerics)?;
    let spec = PulseSpec::new(center, sigma, carrier);
    let pulse = build_gaussian_two_photon(&spec, &spec, &grid)?;
    trap_efficiency(params_frame, &pulse, numerics)
}

/// Release of a trapped photon by a single incoming Gaussian.
#[derive(Debug, Clone)]
pub struct ReleaseOutcome {
    pub sigma: f64,
    /// Stored population left once the rule fires.
    pub residual: f64,
    pub t_steady: f64,
    pub final_state: TwoPhotonState<f64>,
    pub trajectory: Trajectory,
}

/// Grid for the release of a photon by a Gaussian of width `sigma`.
pub fn release_grid(gamma: f64, sigma: f64, numerics: &TrapNumerics) -> Result<GridSpec<f64>> {
    trap_grid(gamma, incoming_center(gamma, sigma), sigma, numerics)
}

/// One photon in the EE hit by a Gaussian single photon of width `sigma`
/// with carrier at the bright mode. The stored population is followed until
/// it settles, and never before the incoming packet has fully passed.
pub fn release(params: &SystemParams<f64>, sigma: f64, numerics: &TrapNumerics) -> Result<ReleaseOutcome> {
    check_ee(params)?;
    let p = frame(params);
    let gamma = p.gamma_unit();
    let grid = release_grid(gamma, sigma, numerics)?;
    release_on(&p, sigma, &grid, numerics)
}

/// [`release`] on an explicit grid; `params` already in the EE frame.
pub fn release_on(p: &SystemParams<f64>, sigma: f64, grid: &GridSpec<f64>, numerics: &TrapNumerics) -> Result<ReleaseOutcome> {
    let gamma = p.gamma_unit();
    let center = incoming_center(gamma, sigma);
    let f = gaussian_pulse(&PulseSpec::new(center, sigma, p.omega_bright()), grid)?;
    let st = make_release_state(p, &f, grid)?;
    let mut rule = numerics.rule(gamma, -center);
    rule.earliest = rule.earliest.max(-center + 6.0 * sigma);
    let SteadyOutcome { value, t_steady, trajectory, state, .. } =
        evolve_until_steady(p, &st, &rule, Watch::Stored, &numerics.options(gamma, grid.dx))?;
    Ok(ReleaseOutcome { sigma, residual: value, t_steady, final_state: state, trajectory })
}

#[derive(Debug, Clone)]
pub struct ReleaseReport {
    /// `(sigma, residual, t_steady)` per width, in input order.
    pub rows: Vec<(f64, f64, f64)>,
    pub best_sigma: f64,
    pub target: f64,
    /// Residuals never increase along the list.
    pub monotone: bool,
}

/// Releases with each width in `sigma_list` (ascending) and returns the
/// smallest one whose residual is below `target`.
pub fn optimize_release_pulse(params: &SystemParams<f64>, sigma_list: &[f64], target: f64, numerics: &TrapNumerics) -> Result<ReleaseReport> {
    if sigma_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter { name: "sigma_list", reason: "must be strictly ascending".into() });
    }
    let rows = with_pool(|| {
        sigma_list
            .par_iter()
            .map(|&s| release(params, s, numerics).map(|r| (s, r.residual, r.t_steady)))
            .collect::<Result<Vec<_>>>()
    })?;
    let monotone = rows.windows(2).all(|w| w[1].1 <= w[0].1);
    let best = rows.iter().find(|r| r.1 < target).ok_or(Error::TargetNotMet { target })?;
    Ok(ReleaseReport { best_sigma: best.0, rows, target, monotone })
}

/// Stages and results of release, reversal and trapping.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub sigma_release: f64,
    pub release_residual: f64,
    pub p_ee: f64,
    pub t_steady: f64,
    /// The reversed packet used as trapping input.
    pub input: TwoPhotonPulse<f64>,
    pub trap_trajectory: Trajectory,
    pub release_trajectory: Trajectory,
    pub artifacts: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    /// Largest stored population accepted when extracting the outgoing pair.
    pub extract_threshold: f64,
    /// Right edge of the trapping grid in `1/Gamma`; the reversed packet is
    /// padded up to it so nothing reaches the boundary before `t_max`.
    pub right_edge: f64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self { extract_threshold: 0.1, right_edge: 61.0 }
    }
}

/// Release with width `sigma_release`, keep the outgoing pair, reverse it
/// in time and trap it. With `artifacts` set, the outgoing and reversed
/// grids are written there as EE2P files together with `pipeline.csv`.
pub fn optimal_trap_pipeline(
    params: &SystemParams<f64>,
    sigma_release: f64,
    numerics: &TrapNumerics,
    opts: &PipelineOptions,
    artifacts: Option<&Path>,
) -> Result<PipelineOutcome> {
    let rel = release(params, sigma_release, numerics)?;
    let p = frame(params);
    let gamma = p.gamma_unit();
    let outgoing = extract_outgoing(&rel.final_state, opts.extract_threshold)?;
    let reversed = time_reverse(&outgoing)?;
    let pad = ((opts.right_edge / gamma - reversed.grid.x_right()) / reversed.grid.dx).ceil().max(0.0) as usize;
    let input = reversed.padded(0, pad);
    let trap = trap_efficiency(&p, &input, numerics)?;
    let mut written = Vec::new();
    if let Some(dir) = artifacts {
        std::fs::create_dir_all(dir)?;
        let out_path = dir.join("outgoing.ee2p");
        save_ee2p(&outgoing, rel.final_state.t, &out_path)?;
        let in_path = dir.join("reversed_input.ee2p");
        save_ee2p(&input, 0.0, &in_path)?;
        let mut manifest = Trajectory::new(&["stage", "t", "norm", "discarded"]);
        manifest.push(vec![0.0, rel.t_steady, 1.0 - rel.residual, rel.residual]);
        manifest.push(vec![1.0, rel.final_state.t, outgoing.norm(), outgoing.discarded]);
        manifest.push(vec![2.0, 0.0, input.norm(), input.discarded]);
        manifest.push(vec![3.0, trap.t_steady, trap.p_ee, 0.0]);
        manifest.add_meta("stages", "0=release 1=outgoing.ee2p 2=reversed_input.ee2p 3=trap");
        manifest.add_meta("sigma_release", sigma_release);
        manifest.add_meta("dx", input.grid.dx);
        let man_path = dir.join("pipeline.csv");
        manifest.save_csv(&man_path)?;
        written = vec![out_path, in_path, man_path];
    }
    Ok(PipelineOutcome {
        sigma_release,
        release_residual: rel.residual,
        p_ee: trap.p_ee,
        t_steady: trap.t_steady,
        input,
        trap_trajectory: trap.trajectory,
        release_trajectory: rel.trajectory,
        artifacts: written,
    })
}

/// Near-diagonal weight of a packet against an uncorrelated product with the
/// same marginal width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bunching {
    pub width: f64,
    pub diagonal_weight: f64,
    pub reference_weight: f64,
}

impl Bunching {
    pub fn is_bunched(&self) -> bool {
        self.diagonal_weight > self.reference_weight
    }
}

/// Compares the weight within `|x1 - x2| < width` to that of a product of
/// identical Gaussians whose intensity has the packet's marginal spread.
pub fn bunching(pulse: &TwoPhotonPulse<f64>, width: f64) -> Result<Bunching> {
    let m = pulse.grid.n_cells;
    let total = pulse.norm();
    let mean = pulse.mean_position();
    let mut var = 0.0;
    for i in 0..m {
        let row: f64 = pulse.chi[i * m..(i + 1) * m].iter().map(|z| z.norm_sqr()).sum();
        var += row * (pulse.grid.x(i) - mean).powi(2);
    }
    let std = (var / total).sqrt();
    let reference = crate::twophoton::bunching_reference(pulse, std * 2f64.sqrt())?;
    Ok(Bunching { width, diagonal_weight: pulse.diagonal_weight(width), reference_weight: reference.diagonal_weight(width) })
}

/// Axis spacing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub n_points: usize,
    pub scale: Scale,
}

impl Axis {
    pub fn new(name: &str, min: f64, max: f64, n_points: usize, scale: Scale) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::InvalidParameter { name: "n_points", reason: format!("axis `{name}` needs at least 2 points") });
        }
        if !(max > min) || (scale == Scale::Log && !(min > 0.0)) {
            return Err(Error::InvalidParameter { name: "axis", reason: format!("bad range [{min}, {max}] for `{name}`") });
        }
        Ok(Self { name: name.to_string(), min, max, n_points, scale })
    }

    pub fn values(&self) -> Vec<f64> {
        let n = (self.n_points - 1) as f64;
        (0..self.n_points)
            .map(|i| {
                let u = i as f64 / n;
                match self.scale {
                    Scale::Linear => self.min + (self.max - self.min) * u,
                    Scale::Log => (self.min.ln() + (self.max.ln() - self.min.ln()) * u).exp(),
                }
            })
            .collect()
    }
}

/// Which pair of quantities a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    /// Rows `V_C/V_A` (J re-derived per row), columns `sigma Gamma`; carrier
    /// at the bright mode.
    RatioSigma,
    /// Rows carrier frequency `k` in the units of `omega`, columns
    /// `sigma Gamma`; the base system is kept.
    CarrierSigma,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub rows: Axis,
    pub cols: Axis,
    /// Source of `omega_A`, `omega_c` and `V_A` (and `V_C` for carrier sweeps).
    pub base: SystemParams<f64>,
    /// A point is masked when `J > fraction * (omega_c + omega_A) / 2`.
    pub j_mask_fraction: f64,
    pub numerics: TrapNumerics,
}

impl SweepSpec {
    /// 17 x 17 over `V_C/V_A in [0.1, 0.9]` and `sigma Gamma in [0.2, 5]`.
    pub fn ratio_sigma_default(base: SystemParams<f64>) -> Self {
        Self {
            kind: SweepKind::RatioSigma,
            rows: Axis::new("vc_over_va", 0.1, 0.9, 17, Scale::Linear).expect("valid axis"),
            cols: Axis::new("sigma_gamma", 0.2, 5.0, 17, Scale::Log).expect("valid axis"),
            base,
            j_mask_fraction: 0.1,
            numerics: TrapNumerics::sweep(),
        }
    }

    /// 17 x 17 over `k in omega_B +- 4 Gamma` and `sigma Gamma in [0.2, 5]`.
    pub fn carrier_sigma_default(base: SystemParams<f64>) -> Self {
        let gamma = base.gamma_unit();
        let wb = base.omega_bright();
        Self {
            kind: SweepKind::CarrierSigma,
            rows: Axis::new("k", wb - 4.0 * gamma, wb + 4.0 * gamma, 17, Scale::Linear).expect("valid axis"),
            cols: Axis::new("sigma_gamma", 0.2, 5.0, 17, Scale::Log).expect("valid axis"),
            base,
            j_mask_fraction: 0.1,
            numerics: TrapNumerics::sweep(),
        }
    }

    /// System for a row value, in the lab frame.
    pub fn system_for_row(&self, row: f64) -> Result<SystemParams<f64>> {
        match self.kind {
            SweepKind::RatioSigma => {
                let b = &self.base;
                SystemParams::at_ee_condition(b.omega_a, b.omega_c, b.v_a, row * b.v_a)
            }
            SweepKind::CarrierSigma => Ok(self.base),
        }
    }

    /// Whether `J` breaks the weak-coupling limit `fraction * (omega_c + omega_A) / 2`.
    pub fn j_exceeds_limit(&self, params: &SystemParams<f64>) -> bool {
        params.j_coupling > self.j_mask_fraction * (params.omega_c + params.omega_a) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Value { p_ee: f64, t_steady: f64 },
    Masked { reason: String },
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub row_axis: Axis,
    pub col_axis: Axis,
    pub rows: Vec<f64>,
    pub cols: Vec<f64>,
    /// Row-major cells.
    pub cells: Vec<Cell>,
    pub j_used: Vec<f64>,
    pub runtime: Vec<f64>,
    pub overlays: Vec<(String, f64)>,
}

impl SweepResult {
    pub fn value(&self, r: usize, c: usize) -> Option<f64> {
        match &self.cells[r * self.cols.len() + c] {
            Cell::Value { p_ee, .. } => Some(*p_ee),
            Cell::Masked { .. } => None,
        }
    }

    pub fn is_masked(&self, r: usize, c: usize) -> bool {
        self.value(r, c).is_none()
    }

    /// Row and column values of the largest unmasked cell.
    pub fn argmax(&self) -> Option<(f64, f64, f64)> {
        let mut best: Option<(f64, f64, f64)> = None;
        for (r, &rv) in self.rows.iter().enumerate() {
            for (c, &cv) in self.cols.iter().enumerate() {
                if let Some(v) = self.value(r, c) {
                    if best.map_or(true, |b| v > b.2) {
                        best = Some((rv, cv, v));
                    }
                }
            }
        }
        best
    }

    /// CSV with one line per cell; identical inputs give identical bytes.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([self.row_axis.name.as_str(), self.col_axis.name.as_str(), "p_ee", "masked", "mask_reason", "j_used", "t_steady"])?;
        for (r, &rv) in self.rows.iter().enumerate() {
            for (c, &cv) in self.cols.iter().enumerate() {
                let k = r * self.cols.len() + c;
                let (p, masked, reason, ts) = match &self.cells[k] {
                    Cell::Value { p_ee, t_steady } => (p_ee.to_string(), "0", String::new(), t_steady.to_string()),
                    Cell::Masked { reason } => (String::new(), "1", reason.clone(), String::new()),
                };
                w.write_record([rv.to_string(), cv.to_string(), p, masked.to_string(), reason, self.j_used[k].to_string(), ts])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Runs `f` on a pool sized by [`WORKERS_ENV`], or rayon's default.
pub fn with_pool<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let n = std::env::var(WORKERS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0);
    match n.map(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build()) {
        Some(Ok(pool)) => pool.install(f),
        _ => f(),
    }
}

fn sweep_point(spec: &SweepSpec, row: f64, col: f64) -> (Cell, f64) {
    let params = match spec.system_for_row(row) {
        Ok(p) => p,
        Err(e) => return (Cell::Masked { reason: e.name().to_string() }, f64::NAN),
    };
    let j = params.j_coupling;
    if spec.j_exceeds_limit(&params) {
        return (Cell::Masked { reason: "j_limit".into() }, j);
    }
    let p = frame(&params);
    let gamma = p.gamma_unit();
    let carrier = match spec.kind {
        SweepKind::RatioSigma => p.omega_bright(),
        SweepKind::CarrierSigma => row - params.omega_ee(),
    };
    match gaussian_trap(&p, col / gamma, carrier, &spec.numerics) {
        Ok(o) => (Cell::Value { p_ee: o.p_ee.clamp(0.0, 1.0), t_steady: o.t_steady * gamma }, j),
        Err(e) => (Cell::Masked { reason: e.name().to_string() }, j),
    }
}

fn run_sweep(spec: &SweepSpec, overlays: Vec<(String, f64)>) -> SweepResult {
    let rows = spec.rows.values();
    let cols = spec.cols.values();
    let points: Vec<(f64, f64)> = rows.iter().flat_map(|&r| cols.iter().map(move |&c| (r, c))).collect();
    let out: Vec<(Cell, f64, f64)> = with_pool(|| {
        points
            .par_iter()
            .map(|&(r, c)| {
                let t0 = Instant::now();
                let (cell, j) = sweep_point(spec, r, c);
                (cell, j, t0.elapsed().as_secs_f64())
            })
            .collect()
    });
    let mut cells = Vec::with_capacity(out.len());
    let mut j_used = Vec::with_capacity(out.len());
    let mut runtime = Vec::with_capacity(out.len());
    for (c, j, t) in out {
        cells.push(c);
        j_used.push(j);
        runtime.push(t);
    }
    SweepResult { row_axis: spec.rows.clone(), col_axis: spec.cols.clone(), rows, cols, cells, j_used, runtime, overlays }
}

/// Steady EE population against `V_C/V_A` and `sigma Gamma`.
pub fn sweep_vc_sigma(spec: &SweepSpec) -> Result<SweepResult> {
    if spec.kind != SweepKind::RatioSigma {
        return Err(Error::InvalidParameter { name: "kind", reason: "expected a V_C/V_A sweep".into() });
    }
    Ok(run_sweep(spec, Vec::new()))
}

/// Steady EE population against carrier `k` and `sigma Gamma`, with the
/// one- and two-excitation frequencies attached as overlays.
pub fn sweep_k_sigma(spec: &SweepSpec) -> Result<SweepResult> {
    if spec.kind != SweepKind::CarrierSigma {
        return Err(Error::InvalidParameter { name: "kind", reason: "expected a carrier sweep".into() });
    }
    let summary = SpectralSummary::of(&spec.base)?;
    let overlays = summary.carrier_lines().into_iter().map(|l| (l.label.to_string(), l.omega)).collect();
    Ok(run_sweep(spec, overlays))
}

/// One loss value of the comparison.
#[derive(Debug, Clone)]
pub struct LossBranch {
    pub ratio: f64,
    pub gamma_prime_c: f64,
    pub full: Trajectory,
    pub cavity_only: Trajectory,
    /// Fitted decay rate of the trapped cavity population.
    pub full_decay: f64,
    pub cavity_only_decay: f64,
    /// `2 Gamma'_C V_A^2 / (V_A^2 + V_C^2)`.
    pub predicted_decay: f64,
    pub full_peak: f64,
    pub cavity_only_peak: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossOptions {
    /// Width of the two-photon Gaussian, in `1/Gamma`.
    pub sigma: f64,
    /// Time simulated after arrival, in `1/Gamma`.
    pub duration: f64,
    /// Fit window for the full system after arrival, in `1/Gamma`.
    pub full_window: (f64, f64),
    /// Fit window for the bare cavity after arrival, in `1/Gamma`.
    pub cavity_window: (f64, f64),
}

impl Default for LossOptions {
    fn default() -> Self {
        Self { sigma: 1.0, duration: 45.0, full_window: (20.0, 45.0), cavity_window: (7.0, 12.0) }
    }
}

fn fit_window(traj: &Trajectory, col: &str, from: f64, to: f64) -> Result<f64> {
    let t = traj.column("t").ok_or_else(|| Error::Numerical("trajectory without time column".into()))?;
    let y = traj.column(col).ok_or_else(|| Error::Numerical(format!("trajectory without `{col}`")))?;
    let (ts, ys): (Vec<f64>, Vec<f64>) = t.iter().zip(&y).filter(|(t, _)| **t >= from && **t <= to).map(|(a, b)| (*a, *b)).unzip();
    exponential_decay_rate(&ts, &ys).map(|r| r.0).ok_or_else(|| Error::Numerical(format!("no decay fit for `{col}` in [{from}, {to}]")))
}

/// Two-photon Gaussian excitation (width `sigma`, carrier at the bright
/// mode) of the system with cavity loss `ratio * 2 pi V_C^2`, against a
/// bare cavity with the same `V_C`, loss and pulse.
pub fn loss_comparison(params: &SystemParams<f64>, ratios: &[f64], opts: &LossOptions, numerics: &TrapNumerics) -> Result<Vec<LossBranch>> {
    check_ee(params)?;
    let p0 = frame(params);
    let gamma = p0.gamma_unit();
    let sigma = opts.sigma / gamma;
    let center = incoming_center(gamma, sigma);
    let arrival = -center;
    let dx = numerics.dx(gamma, sigma);
    let grid = GridSpec::spanning(dx, center - 5.0 * sigma - 1.0 / gamma, center + 5.0 * sigma + opts.duration / gamma + arrival + 1.0 / gamma)?;
    let spec = PulseSpec::new(center, sigma, p0.omega_bright());
    let pulse = build_gaussian_two_photon(&spec, &spec, &grid)?;
    let st = TwoPhotonState::from_pulse(&pulse);
    let topts = numerics.options(gamma, dx);
    let t_final = arrival + opts.duration / gamma;
    let n2 = p0.v_a * p0.v_a + p0.v_c * p0.v_c;
    with_pool(|| {
        ratios
            .par_iter()
            .map(|&ratio| {
                let gp = ratio * p0.gamma_c();
                let full_p = p0.with_losses(0.0, gp);
                let bare = SystemParams { v_a: 0.0, j_coupling: 0.0, ..p0 }.with_losses(0.0, gp);
                let (full, _) = evolve_two_photon(&full_p, &st, t_final, dx, &topts)?;
                let (cavity_only, _) = evolve_two_photon(&bare, &st, t_final, dx, &topts)?;
                let fw = (arrival + opts.full_window.0 / gamma, arrival + opts.full_window.1 / gamma);
                let cw = (arrival + opts.cavity_window.0 / gamma, arrival + opts.cavity_window.1 / gamma);
                Ok(LossBranch {
                    ratio,
                    gamma_prime_c: gp,
                    full_decay: fit_window(&full, "p_cav", fw.0, fw.1)?,
                    cavity_only_decay: fit_window(&cavity_only, "p_cav", cw.0, cw.1)?,
                    predicted_decay: 2.0 * gp * p0.v_a * p0.v_a / n2,
                    full_peak: full.max("p_cav").unwrap_or(0.0),
                    cavity_only_peak: cavity_only.max("p_cav").unwrap_or(0.0),
                    full,
                    cavity_only,
                })
            })
            .collect()
    })
}

/// `J` that [`sweep_vc_sigma`] uses for a ratio, for mask checks.
pub fn j_for_ratio(base: &SystemParams<f64>, ratio: f64) -> Result<f64> {
    solve_j_for_ee(base.omega_a, base.omega_c, base.v_a, ratio * base.v_a)
}
