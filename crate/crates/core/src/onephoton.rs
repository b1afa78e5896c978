//! Single-excitation real-space dynamics: one waveguide photon `xi(x)`
//! together with the atom and cavity amplitudes. The same equations describe
//! two classical coupled cavities driven by a weak pulse.

use crate::error::{Error, Result};
use crate::grid::{GridSpec, PulseSpec};
use crate::local::{apply3, LocalHamiltonian};
use crate::model::SystemParams;
use crate::scalar::{cx, czero, Cx, Real};
use crate::trajectory::Trajectory;

/// Amplitudes of the single-excitation sector. `xi` holds the continuum
/// amplitude at the cell centres, normalized as `sum |xi|^2 dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleExcState<T> {
    pub xi: Vec<Cx<T>>,
    pub e_a: Cx<T>,
    pub e_c: Cx<T>,
}

impl<T: Real> SingleExcState<T> {
    pub fn photon(xi: Vec<Cx<T>>) -> Self {
        Self { xi, e_a: czero(), e_c: czero() }
    }

    pub fn emitters(n_cells: usize, e_a: Cx<T>, e_c: Cx<T>) -> Self {
        Self { xi: vec![czero(); n_cells], e_a, e_c }
    }

    pub fn waveguide_population(&self, dx: T) -> T {
        self.xi.iter().fold(T::zero(), |a, z| a + z.norm_sqr()) * dx
    }

    pub fn norm(&self, dx: T) -> T {
        self.waveguide_population(dx) + self.e_a.norm_sqr() + self.e_c.norm_sqr()
    }
}

/// Probability of the single-photon embedded eigenstate,
/// `|V_C e_A - V_A e_C|^2 / (V_A^2 + V_C^2)`.
pub fn p_ee_single<T: Real>(params: &SystemParams<T>, e_a: Cx<T>, e_c: Cx<T>) -> T {
    let n2 = params.v_a * params.v_a + params.v_c * params.v_c;
    if n2 == T::zero() {
        return T::zero();
    }
    (e_a * params.v_c - e_c * params.v_a).norm_sqr() / n2
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    /// Steps between recorded samples.
    pub sample_every: usize,
    /// Allowed `|norm - 1|` in lossless runs.
    pub norm_tolerance: f64,
    /// Threshold on the continuum amplitude in the 8 rightmost cells.
    pub boundary_threshold: f64,
    /// Value of the reporting unit used for the `t_gamma` column.
    pub gamma_unit: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { sample_every: 1, norm_tolerance: 1e-6, boundary_threshold: 1e-8, gamma_unit: 1.0 }
    }
}

pub const SINGLE_COLUMNS: [&str; 7] = ["t", "t_gamma", "pop_atom", "pop_cavity", "pop_waveguide", "p_ee", "norm"];

pub(crate) fn check_step<T: Real>(dt: T, dx: T) -> Result<()> {
    if (dt - dx).abs() > T::lit(1e-9) * dx {
        return Err(Error::StepMismatch { dt: dt.as_f64(), dx: dx.as_f64() });
    }
    Ok(())
}

pub(crate) fn n_steps<T: Real>(t_final: T, dt: T) -> usize {
    (t_final / dt).round().to_usize().unwrap_or(0)
}

/// Integrates the single-excitation equations on `grid` for `t_final`.
/// `params` are rotating-frame parameters and `dt` must equal `grid.dx`.
pub fn evolve_single<T: Real>(
    params: &SystemParams<T>,
    grid: &GridSpec<T>,
    state: &SingleExcState<T>,
    t_final: T,
    dt: T,
    opts: &EvolveOptions,
) -> Result<(Trajectory, SingleExcState<T>)> {
    params.validate(false)?;
    grid.validate()?;
    check_step(dt, grid.dx)?;
    if state.xi.len() != grid.n_cells {
        return Err(Error::GridMismatch(format!("state has {} cells, grid has {}", state.xi.len(), grid.n_cells)));
    }
    let dx = grid.dx;
    let m = grid.n_cells;
    let i0 = grid.coupling_index;
    let u1 = LocalHamiltonian::uncalibrated(params, dx.as_f64())?.propagators::<T>()?.u1;
    let sq = dx.sqrt();
    let mut buf: Vec<Cx<T>> = state.xi.iter().map(|z| *z * sq).collect();
    let (mut ea, mut ec) = (state.e_a, state.e_c);
    let lossless = params.gamma_prime_a == T::zero() && params.gamma_prime_c == T::zero();
    let bthr = T::lit(opts.boundary_threshold) * sq;
    let stride = opts.sample_every.max(1);

    let mut traj = Trajectory::new(&SINGLE_COLUMNS);
    // norm checks only make sense for a normalized input
    let check_norm = (state.norm(dx).as_f64() - 1.0).abs() <= opts.norm_tolerance;
    let mut last_norm = f64::INFINITY;
    let mut record = |step: usize, buf: &[Cx<T>], ea: Cx<T>, ec: Cx<T>| -> Result<()> {
        let t = (T::from_usize_lossy(step) * dt).as_f64();
        let wg = buf.iter().fold(T::zero(), |a, z| a + z.norm_sqr()).as_f64();
        let pa = ea.norm_sqr().as_f64();
        let pc = ec.norm_sqr().as_f64();
        let norm = wg + pa + pc;
        if check_norm && lossless && (norm - 1.0).abs() > opts.norm_tolerance {
            return Err(Error::NormDrift { t, drift: norm - 1.0 });
        }
        if check_norm && !lossless && norm > last_norm + opts.norm_tolerance {
            return Err(Error::NormDrift { t, drift: norm - last_norm });
        }
        last_norm = norm;
        traj.push(vec![t, t * opts.gamma_unit, pa, pc, wg, p_ee_single(params, ea, ec).as_f64(), norm]);
        Ok(())
    };
    record(0, &buf, ea, ec)?;

    let steps = n_steps(t_final, dt);
    for s in 1..=steps {
        let r = s % m;
        buf[(m - r) % m] = czero();
        let bc = (i0 + m - r) % m;
        let v = apply3(&u1, [buf[bc], ea, ec]);
        buf[bc] = v[0];
        ea = v[1];
        ec = v[2];
        for lab in m.saturating_sub(8)..m {
            let a = buf[(lab + m - r) % m].norm();
            if a > bthr {
                let t = (T::from_usize_lossy(s) * dt).as_f64();
                return Err(Error::BoundaryReached { t, amplitude: (a / sq).as_f64() });
            }
        }
        if s % stride == 0 || s == steps {
            record(s, &buf, ea, ec)?;
        }
    }
    let r = steps % m;
    let xi: Vec<Cx<T>> = (0..m).map(|lab| buf[(lab + m - r) % m] / sq).collect();
    traj.add_meta("steps", steps);
    Ok((traj, SingleExcState { xi, e_a: ea, e_c: ec }))
}

/// Two coupled classical cavities driven by a pulse. Cavity 1 takes the atom
/// slot of `params` and cavity 2 the cavity slot; in the single-excitation
/// sector the quantum amplitudes coincide with the classical mode amplitudes.
pub fn classical_two_cavity<T: Real>(
    params: &SystemParams<T>,
    grid: &GridSpec<T>,
    pulse: &PulseSpec<T>,
    t_final: T,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    let mut xi = crate::grid::gaussian_pulse(pulse, grid)?;
    crate::grid::restrict_to_incoming(&mut xi, grid, T::lit(1e-6))?;
    let (mut traj, _) = evolve_single(params, grid, &SingleExcState::photon(xi), t_final, grid.dx, opts)?;
    traj.rename("pop_atom", "intensity_1");
    traj.rename("pop_cavity", "intensity_2");
    traj.rename("p_ee", "p_dark");
    Ok(traj)
}

/// Ratio of the largest stored population after `t_after` to its overall peak.
pub fn post_pulse_ratio(traj: &Trajectory, stored_cols: &[&str], t_after: f64) -> f64 {
    let t = traj.column("t").unwrap_or_default();
    let cols: Vec<Vec<f64>> = stored_cols.iter().filter_map(|c| traj.column(c)).collect();
    let stored: Vec<f64> = (0..t.len()).map(|k| cols.iter().map(|c| c[k]).sum()).collect();
    let peak = stored.iter().cloned().fold(0.0, f64::max);
    let late = t.iter().zip(&stored).filter(|(ti, _)| **ti >= t_after).map(|(_, s)| *s).fold(0.0, f64::max);
    if peak == 0.0 {
        0.0
    } else {
        late / peak
    }
}

/// Single-excitation state of the cavity-atom system with the emitters in
/// the given superposition and an empty waveguide; convenience for decay runs.
pub fn emitter_state<T: Real>(grid: &GridSpec<T>, e_a: T, e_c: T) -> SingleExcState<T> {
    SingleExcState::emitters(grid.n_cells, cx(e_a, T::zero()), cx(e_c, T::zero()))
}
