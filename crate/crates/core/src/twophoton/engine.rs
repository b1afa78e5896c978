//! Split-step propagation of the two-excitation amplitudes.
//!
//! Per step both photon coordinates advance by one cell, then every
//! amplitude with a photon in the coupling cell is updated by the local
//! propagators: `(sqrt(2) chi(c, j), phi_A(j), phi_C(j))` for each `j != c`
//! and `(chi(c, c), phi_A(c), phi_C(c), E_AC, E_2C)` at the coupling cell.
//!
//! The field lives in a ring buffer so the shift is an index offset: buffer
//! cell `b` holds lab cell `(b + s) mod M` after `s` steps.

use super::state::{p_ee_cells, sum_sq, symmetry_defect, Observables, TwoPhotonState};
use crate::error::{Error, Result};
use crate::local::{apply3, apply5, LocalHamiltonian, LocalPropagators};
use crate::model::SystemParams;
use crate::onephoton::{check_step, n_steps};
use crate::scalar::{czero, Cx, Real};
use crate::trajectory::Trajectory;

pub const TWO_PHOTON_COLUMNS: [&str; 9] = ["t", "t_gamma", "p_atom", "p_cav", "p_wg2", "e_ac2", "e_2c2", "p_ee", "norm"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhotonOptions {
    /// Steps between recorded samples.
    pub sample_every: usize,
    pub norm_tolerance: f64,
    pub symmetry_tolerance: f64,
    /// Continuum amplitude allowed in the 8 rightmost cells.
    pub boundary_threshold: f64,
    pub gamma_unit: f64,
    /// Use the calibrated doubly-excited block.
    pub calibrated: bool,
}

impl Default for TwoPhotonOptions {
    fn default() -> Self {
        Self {
            sample_every: 20,
            norm_tolerance: 1e-6,
            symmetry_tolerance: 1e-9,
            boundary_threshold: 1e-8,
            gamma_unit: 1.0,
            calibrated: true,
        }
    }
}

/// Stepper holding the ring buffer and the local propagators.
pub struct TwoPhotonEngine<T: Real> {
    params: SystemParams<T>,
    grid: crate::grid::GridSpec<T>,
    /// Single-photon block acting on `(chi(c, j), phi_A(j), phi_C(j))`
    /// directly, the `sqrt(2)` folded into the couplings.
    u3: [[Cx<T>; 3]; 3],
    prop: LocalPropagators<T>,
    chi: Vec<Cx<T>>,
    phi_a: Vec<Cx<T>>,
    phi_c: Vec<Cx<T>>,
    e_ac: Cx<T>,
    e_2c: Cx<T>,
    t0: T,
    steps: usize,
    lossless: bool,
    check_norm: bool,
    last_norm: f64,
    opts: TwoPhotonOptions,
}

impl<T: Real> TwoPhotonEngine<T> {
    /// `params` are rotating-frame parameters.
    pub fn new(params: &SystemParams<T>, state: &TwoPhotonState<T>, opts: &TwoPhotonOptions) -> Result<Self> {
        params.validate(false)?;
        state.grid.validate()?;
        let m = state.grid.n_cells;
        if state.chi.len() != m * m || state.phi_a.len() != m || state.phi_c.len() != m {
            return Err(Error::GridMismatch("state arrays do not match the grid".into()));
        }
        let dx = state.grid.dx.as_f64();
        let local = if opts.calibrated {
            LocalHamiltonian::new(params, dx)?
        } else {
            LocalHamiltonian::uncalibrated(params, dx)?
        };
        let norm = state.norm();
        let prop: LocalPropagators<T> = local.propagators()?;
        let s2 = T::SQRT_2();
        let mut u3 = prop.u1;
        for k in 1..3 {
            u3[0][k] = u3[0][k] / s2;
            u3[k][0] = u3[k][0] * s2;
        }
        Ok(Self {
            u3,
            params: *params,
            grid: state.grid,
            prop,
            chi: state.chi.clone(),
            phi_a: state.phi_a.clone(),
            phi_c: state.phi_c.clone(),
            e_ac: state.e_ac,
            e_2c: state.e_2c,
            t0: state.t,
            steps: 0,
            lossless: params.gamma_prime_a == T::zero() && params.gamma_prime_c == T::zero(),
            check_norm: (norm - 1.0).abs() <= opts.norm_tolerance,
            last_norm: norm,
            opts: *opts,
        })
    }

    pub fn t(&self) -> T {
        self.t0 + T::from_usize_lossy(self.steps) * self.grid.dx
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    fn offset(&self) -> usize {
        self.steps % self.grid.n_cells
    }

    /// Buffer index of lab cell `lab`.
    fn buf(&self, lab: usize) -> usize {
        let m = self.grid.n_cells;
        (lab + m - self.offset()) % m
    }

    pub fn step(&mut self) -> Result<()> {
        let m = self.grid.n_cells;
        self.steps += 1;
        let entering = self.buf(0);
        for k in 0..m {
            self.chi[entering * m + k] = czero();
            self.chi[k * m + entering] = czero();
        }
        self.phi_a[entering] = czero();
        self.phi_c[entering] = czero();

        let c = self.buf(self.grid.coupling_index);
        let pair = [self.chi[c * m + c], self.phi_a[c], self.phi_c[c], self.e_ac, self.e_2c];
        let u3 = &self.u3;
        for j in 0..m {
            if j == c {
                continue;
            }
            let v = apply3(u3, [self.chi[c * m + j], self.phi_a[j], self.phi_c[j]]);
            self.chi[c * m + j] = v[0];
            self.chi[j * m + c] = v[0];
            self.phi_a[j] = v[1];
            self.phi_c[j] = v[2];
        }
        let w = apply5(&self.prop.u5, pair);
        self.chi[c * m + c] = w[0];
        self.phi_a[c] = w[1];
        self.phi_c[c] = w[2];
        self.e_ac = w[3];
        self.e_2c = w[4];
        self.guard_boundary()
    }

    fn guard_boundary(&self) -> Result<()> {
        let m = self.grid.n_cells;
        let dx = self.grid.dx;
        let sq = dx.sqrt();
        let thr = T::lit(self.opts.boundary_threshold);
        for lab in m.saturating_sub(8)..m {
            let b = self.buf(lab);
            let one = self.phi_a[b].norm().max(self.phi_c[b].norm()) / sq;
            let two = self.chi[b * m..(b + 1) * m].iter().fold(T::zero(), |a, z| a.max(z.norm())) / dx;
            let worst = one.max(two);
            if worst > thr {
                return Err(Error::BoundaryReached { t: self.t().as_f64(), amplitude: worst.as_f64() });
            }
        }
        Ok(())
    }

    pub fn p_ee(&self) -> f64 {
        p_ee_cells(&self.params, &self.phi_a, &self.phi_c).as_f64()
    }

    /// Population with at least one excitation in the emitters.
    pub fn stored(&self) -> f64 {
        (sum_sq(&self.phi_a) + sum_sq(&self.phi_c) + self.e_ac.norm_sqr() + self.e_2c.norm_sqr()).as_f64()
    }

    pub fn observables(&self) -> Observables {
        let wg2 = sum_sq(&self.chi).as_f64();
        let pa = sum_sq(&self.phi_a).as_f64();
        let pc = sum_sq(&self.phi_c).as_f64();
        let eac = self.e_ac.norm_sqr().as_f64();
        let e2c = self.e_2c.norm_sqr().as_f64();
        Observables {
            t: self.t().as_f64(),
            p_ee: self.p_ee(),
            p_atom: pa + eac,
            p_cav: pc + eac + 2.0 * e2c,
            p_wg2: wg2,
            e_ac2: eac,
            e_2c2: e2c,
            norm: wg2 + pa + pc + eac + e2c,
        }
    }

    /// Samples the observables, checking norm and exchange symmetry.
    pub fn sample(&mut self) -> Result<Observables> {
        let o = self.observables();
        if self.check_norm {
            if self.lossless && (o.norm - 1.0).abs() > self.opts.norm_tolerance {
                return Err(Error::NormDrift { t: o.t, drift: o.norm - 1.0 });
            }
            if !self.lossless && o.norm > self.last_norm + self.opts.norm_tolerance {
                return Err(Error::NormDrift { t: o.t, drift: o.norm - self.last_norm });
            }
        }
        self.last_norm = o.norm;
        let drift = symmetry_defect(&self.chi, self.grid.n_cells) / self.grid.dx.as_f64();
        if drift > self.opts.symmetry_tolerance {
            return Err(Error::SymmetryDrift { t: o.t, drift });
        }
        Ok(o)
    }

    pub fn row(&self, o: &Observables) -> Vec<f64> {
        vec![o.t, o.t * self.opts.gamma_unit, o.p_atom, o.p_cav, o.p_wg2, o.e_ac2, o.e_2c2, o.p_ee, o.norm]
    }

    /// Current state in lab order.
    pub fn state(&self) -> TwoPhotonState<T> {
        let m = self.grid.n_cells;
        let idx: Vec<usize> = (0..m).map(|lab| self.buf(lab)).collect();
        let mut chi = vec![czero(); m * m];
        for i in 0..m {
            let bi = idx[i] * m;
            for j in 0..m {
                chi[i * m + j] = self.chi[bi + idx[j]];
            }
        }
        TwoPhotonState {
            grid: self.grid,
            chi,
            phi_a: idx.iter().map(|&b| self.phi_a[b]).collect(),
            phi_c: idx.iter().map(|&b| self.phi_c[b]).collect(),
            e_ac: self.e_ac,
            e_2c: self.e_2c,
            t: self.t(),
        }
    }
}

/// Integrates the two-excitation equations for `t_final` with `dt = dx`.
pub fn evolve_two_photon<T: Real>(
    params: &SystemParams<T>,
    state: &TwoPhotonState<T>,
    t_final: T,
    dt: T,
    opts: &TwoPhotonOptions,
) -> Result<(Trajectory, TwoPhotonState<T>)> {
    check_step(dt, state.grid.dx)?;
    let mut eng = TwoPhotonEngine::new(params, state, opts)?;
    let mut traj = Trajectory::new(&TWO_PHOTON_COLUMNS);
    let o = eng.sample()?;
    traj.push(eng.row(&o));
    let steps = n_steps(t_final, dt);
    let stride = opts.sample_every.max(1);
    for s in 1..=steps {
        eng.step()?;
        if s % stride == 0 || s == steps {
            let o = eng.sample()?;
            traj.push(eng.row(&o));
        }
    }
    traj.add_meta("steps", steps);
    Ok((traj, eng.state()))
}

/// Operational `t -> infinity`: the watched quantity has settled once its
/// change over `window` is below `rel_tol * value + abs_tol`, no earlier
/// than `earliest`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateRule {
    pub window: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub earliest: f64,
    pub t_max: f64,
}

impl SteadyStateRule {
    /// Defaults in units of `1/gamma_unit`: window 2, settle no earlier than
    /// `arrival + 10`, give up at 60.
    pub fn standard(gamma_unit: f64, arrival: f64) -> Self {
        Self { window: 2.0 / gamma_unit, rel_tol: 1e-4, abs_tol: 1e-7, earliest: arrival + 10.0 / gamma_unit, t_max: 60.0 / gamma_unit }
    }
}

/// Quantity the steady-state rule watches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Watch {
    PEe,
    Stored,
}

#[derive(Debug, Clone)]
pub struct SteadyOutcome<T> {
    pub value: f64,
    pub t_steady: f64,
    pub observables: Observables,
    pub trajectory: Trajectory,
    pub state: TwoPhotonState<T>,
}

/// Runs until `rule` fires on the watched quantity.
pub fn evolve_until_steady<T: Real>(
    params: &SystemParams<T>,
    state: &TwoPhotonState<T>,
    rule: &SteadyStateRule,
    watch: Watch,
    opts: &TwoPhotonOptions,
) -> Result<SteadyOutcome<T>> {
    let mut eng = TwoPhotonEngine::new(params, state, opts)?;
    let dx = state.grid.dx.as_f64();
    let lag = ((rule.window / dx).round() as usize).max(1);
    let mut history: std::collections::VecDeque<f64> = std::collections::VecDeque::with_capacity(lag + 1);
    let value = |e: &TwoPhotonEngine<T>| match watch {
        Watch::PEe => e.p_ee(),
        Watch::Stored => e.stored(),
    };
    let mut traj = Trajectory::new(&TWO_PHOTON_COLUMNS);
    let o = eng.sample()?;
    traj.push(eng.row(&o));
    history.push_back(value(&eng));
    let stride = opts.sample_every.max(1);
    loop {
        eng.step()?;
        let v = value(&eng);
        history.push_back(v);
        if history.len() > lag + 1 {
            history.pop_front();
        }
        let t = eng.t().as_f64();
        let settled = history.len() == lag + 1
            && t >= rule.earliest
            && (v - history[0]).abs() <= rule.rel_tol * v.abs() + rule.abs_tol;
        if eng.steps() % stride == 0 || settled {
            let o = eng.sample()?;
            traj.push(eng.row(&o));
        }
        if settled {
            let o = eng.sample()?;
            traj.add_meta("t_steady", t);
            return Ok(SteadyOutcome { value: v, t_steady: t, observables: o, trajectory: traj, state: eng.state() });
        }
        if t >= rule.t_max {
            return Err(Error::NoSteadyState { t_max: rule.t_max });
        }
    }
}
