//! Two-excitation amplitudes and two-photon wave packets.
//!
//! Amplitudes are stored per cell: `chi` holds `chi(x1, x2) dx` for every
//! ordered pair of cells (row-major in `x1`), the one-photon fields hold
//! `phi(x) sqrt(dx)`. With this scaling every norm is a plain sum of squared
//! moduli and free transport is a relabelling of cells.

use crate::error::{Error, Result};
use crate::grid::{gaussian_pulse, restrict_to_incoming, GridSpec, PulseSpec};
use crate::model::{ee_state, SystemParams};
use crate::scalar::{czero, Cx, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhotonState<T> {
    pub grid: GridSpec<T>,
    pub chi: Vec<Cx<T>>,
    pub phi_a: Vec<Cx<T>>,
    pub phi_c: Vec<Cx<T>>,
    pub e_ac: Cx<T>,
    pub e_2c: Cx<T>,
    pub t: T,
}

/// Observables of one sample; populations are expectation values, so
/// `p_cav` counts the doubly occupied cavity twice.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Observables {
    pub t: f64,
    pub p_ee: f64,
    pub p_atom: f64,
    pub p_cav: f64,
    pub p_wg2: f64,
    pub e_ac2: f64,
    pub e_2c2: f64,
    pub norm: f64,
}

impl Observables {
    /// Probability that at least one excitation is stored in the emitters.
    pub fn stored(&self) -> f64 {
        self.norm - self.p_wg2
    }
}

pub(crate) fn sum_sq<T: Real>(v: &[Cx<T>]) -> T {
    v.iter().fold(T::zero(), |a, z| a + z.norm_sqr())
}

/// `sum |V_C phi_A - V_A phi_C|^2 / (V_A^2 + V_C^2)` over cell amplitudes.
pub(crate) fn p_ee_cells<T: Real>(params: &SystemParams<T>, pa: &[Cx<T>], pc: &[Cx<T>]) -> T {
    let n2 = params.v_a * params.v_a + params.v_c * params.v_c;
    if n2 == T::zero() {
        return T::zero();
    }
    pa.iter().zip(pc).fold(T::zero(), |acc, (a, c)| acc + (*a * params.v_c - *c * params.v_a).norm_sqr()) / n2
}

impl<T: Real> TwoPhotonState<T> {
    pub fn vacuum(grid: GridSpec<T>) -> Self {
        let m = grid.n_cells;
        Self {
            grid,
            chi: vec![czero(); m * m],
            phi_a: vec![czero(); m],
            phi_c: vec![czero(); m],
            e_ac: czero(),
            e_2c: czero(),
            t: T::zero(),
        }
    }

    pub fn from_pulse(pulse: &TwoPhotonPulse<T>) -> Self {
        let mut s = Self::vacuum(pulse.grid);
        s.chi.clone_from(&pulse.chi);
        s
    }

    pub fn n_cells(&self) -> usize {
        self.grid.n_cells
    }

    /// Continuum value `chi(x_i, x_j)`.
    pub fn chi_at(&self, i: usize, j: usize) -> Cx<T> {
        self.chi[i * self.grid.n_cells + j] / self.grid.dx
    }

    /// Continuum values `phi_A(x_i)`, `phi_C(x_i)`.
    pub fn phi_at(&self, i: usize) -> (Cx<T>, Cx<T>) {
        let s = self.grid.dx.sqrt();
        (self.phi_a[i] / s, self.phi_c[i] / s)
    }

    pub fn observables(&self, params: &SystemParams<T>) -> Observables {
        let wg2 = sum_sq(&self.chi).as_f64();
        let pa = sum_sq(&self.phi_a).as_f64();
        let pc = sum_sq(&self.phi_c).as_f64();
        let eac = self.e_ac.norm_sqr().as_f64();
        let e2c = self.e_2c.norm_sqr().as_f64();
        Observables {
            t: self.t.as_f64(),
            p_ee: p_ee(self, params),
            p_atom: pa + eac,
            p_cav: pc + eac + 2.0 * e2c,
            p_wg2: wg2,
            e_ac2: eac,
            e_2c2: e2c,
            norm: wg2 + pa + pc + eac + e2c,
        }
    }

    pub fn norm(&self) -> f64 {
        (sum_sq(&self.chi) + sum_sq(&self.phi_a) + sum_sq(&self.phi_c) + self.e_ac.norm_sqr() + self.e_2c.norm_sqr()).as_f64()
    }

    /// Largest `|chi(x1, x2) - chi(x2, x1)|` in continuum units.
    pub fn symmetry_defect(&self) -> f64 {
        symmetry_defect(&self.chi, self.grid.n_cells) / self.grid.dx.as_f64()
    }

    /// Same state on a grid with `left` and `right` extra empty cells.
    pub fn padded(&self, left: usize, right: usize) -> Self {
        let grid = self.grid.padded(left, right);
        let m = self.grid.n_cells;
        let mut out = Self::vacuum(grid);
        let n = grid.n_cells;
        for i in 0..m {
            out.chi[(i + left) * n + left..(i + left) * n + left + m].copy_from_slice(&self.chi[i * m..(i + 1) * m]);
        }
        out.phi_a[left..left + m].copy_from_slice(&self.phi_a);
        out.phi_c[left..left + m].copy_from_slice(&self.phi_c);
        out.e_ac = self.e_ac;
        out.e_2c = self.e_2c;
        out.t = self.t;
        out
    }
}

pub(crate) fn symmetry_defect<T: Real>(chi: &[Cx<T>], m: usize) -> f64 {
    // tiled so the transposed reads stay in cache
    const B: usize = 64;
    let mut worst = T::zero();
    for bi in (0..m).step_by(B) {
        for bj in (bi..m).step_by(B) {
            for i in bi..(bi + B).min(m) {
                for j in bj.max(i + 1)..(bj + B).min(m) {
                    worst = worst.max((chi[i * m + j] - chi[j * m + i]).norm_sqr());
                }
            }
        }
    }
    worst.sqrt().as_f64()
}

/// EE occupation `int |V_C phi_A - V_A phi_C|^2 dx / (V_A^2 + V_C^2)`.
pub fn p_ee<T: Real>(state: &TwoPhotonState<T>, params: &SystemParams<T>) -> f64 {
    p_ee_cells(params, &state.phi_a, &state.phi_c).as_f64()
}

#[derive(Debug, Clone, PartialEq)]
pub enum PulseDescriptor<T> {
    GaussianProduct { a: PulseSpec<T>, b: PulseSpec<T> },
    /// Grid read from a file or produced by a previous run.
    Grid { source: String },
}

/// Two-photon wave packet with cell amplitudes laid out like
/// [`TwoPhotonState::chi`].
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhotonPulse<T> {
    pub grid: GridSpec<T>,
    pub chi: Vec<Cx<T>>,
    pub descriptor: PulseDescriptor<T>,
    /// Stored population discarded when the packet was extracted.
    pub discarded: f64,
}

impl<T: Real> TwoPhotonPulse<T> {
    pub fn from_grid(grid: GridSpec<T>, chi: Vec<Cx<T>>, source: &str) -> Result<Self> {
        if chi.len() != grid.n_cells * grid.n_cells {
            return Err(Error::GridMismatch(format!("{} amplitudes for {} cells", chi.len(), grid.n_cells)));
        }
        Ok(Self { grid, chi, descriptor: PulseDescriptor::Grid { source: source.to_string() }, discarded: 0.0 })
    }

    pub fn norm(&self) -> f64 {
        sum_sq(&self.chi).as_f64()
    }

    pub fn normalize(&mut self) {
        let n = sum_sq(&self.chi).sqrt();
        if n > T::zero() {
            for z in self.chi.iter_mut() {
                *z = *z / n;
            }
        }
    }

    /// Weight with at least one photon at `x >= 0`.
    pub fn weight_outside_incoming(&self) -> f64 {
        let m = self.grid.n_cells;
        let c = self.grid.coupling_index;
        let mut w = T::zero();
        for i in 0..m {
            for j in 0..m {
                if i >= c || j >= c {
                    w = w + self.chi[i * m + j].norm_sqr();
                }
            }
        }
        w.as_f64()
    }

    /// Weight with at least one photon at `x < 0`.
    pub fn weight_outside_outgoing(&self) -> f64 {
        let m = self.grid.n_cells;
        let c = self.grid.coupling_index;
        let mut w = T::zero();
        for i in 0..m {
            for j in 0..m {
                if i < c || j < c {
                    w = w + self.chi[i * m + j].norm_sqr();
                }
            }
        }
        w.as_f64()
    }

    pub fn padded(&self, left: usize, right: usize) -> Self {
        let st = TwoPhotonState::from_pulse(self).padded(left, right);
        Self { grid: st.grid, chi: st.chi, descriptor: self.descriptor.clone(), discarded: self.discarded }
    }

    /// Normalized weight within `|x1 - x2| < width`.
    pub fn diagonal_weight(&self, width: T) -> f64 {
        let m = self.grid.n_cells;
        let total = sum_sq(&self.chi);
        if total == T::zero() {
            return 0.0;
        }
        let mut w = T::zero();
        for i in 0..m {
            for j in 0..m {
                if (self.grid.x(i) - self.grid.x(j)).abs() < width {
                    w = w + self.chi[i * m + j].norm_sqr();
                }
            }
        }
        (w / total).as_f64()
    }

    /// Mean single-photon position `<x>`.
    pub fn mean_position(&self) -> T {
        let m = self.grid.n_cells;
        let total = sum_sq(&self.chi);
        let mut acc = T::zero();
        for i in 0..m {
            let row = sum_sq(&self.chi[i * m..(i + 1) * m]);
            acc = acc + row * self.grid.x(i);
        }
        acc / total
    }
}

/// Symmetrized product `f_A(x1) f_B(x2) + f_B(x1) f_A(x2)` normalized to one.
pub fn build_gaussian_two_photon<T: Real>(a: &PulseSpec<T>, b: &PulseSpec<T>, grid: &GridSpec<T>) -> Result<TwoPhotonPulse<T>> {
    let m = grid.n_cells;
    let mut fa = gaussian_pulse(a, grid)?;
    let mut fb = gaussian_pulse(b, grid)?;
    restrict_to_incoming(&mut fa, grid, T::lit(1e-6))?;
    restrict_to_incoming(&mut fb, grid, T::lit(1e-6))?;
    let mut chi = vec![czero(); m * m];
    for i in 0..m {
        for j in 0..m {
            chi[i * m + j] = fa[i] * fb[j] + fb[i] * fa[j];
        }
    }
    let mut p = TwoPhotonPulse { grid: *grid, chi, descriptor: PulseDescriptor::GaussianProduct { a: *a, b: *b }, discarded: 0.0 };
    if p.norm() == 0.0 {
        return Err(Error::SupportViolation("pulse vanishes on the grid".into()));
    }
    p.normalize();
    Ok(p)
}

/// One photon trapped in the EE and a second photon `f` (continuum samples,
/// `sum |f|^2 dx = 1`) incoming.
pub fn make_release_state<T: Real>(params: &SystemParams<T>, f: &[Cx<T>], grid: &GridSpec<T>) -> Result<TwoPhotonState<T>> {
    if f.len() != grid.n_cells {
        return Err(Error::GridMismatch(format!("pulse has {} samples, grid has {}", f.len(), grid.n_cells)));
    }
    let mut f = f.to_vec();
    restrict_to_incoming(&mut f, grid, T::lit(1e-6))?;
    let (a, c) = ee_state(params)?;
    let s = grid.dx.sqrt();
    let mut st = TwoPhotonState::vacuum(*grid);
    for (i, z) in f.iter().enumerate() {
        st.phi_a[i] = *z * s * a;
        st.phi_c[i] = *z * s * c;
    }
    Ok(st)
}

/// Two-photon part of a state whose stored population is below `threshold`,
/// renormalized; the discarded population is recorded on the result.
pub fn extract_outgoing<T: Real>(state: &TwoPhotonState<T>, threshold: f64) -> Result<TwoPhotonPulse<T>> {
    let stored = (sum_sq(&state.phi_a) + sum_sq(&state.phi_c) + state.e_ac.norm_sqr() + state.e_2c.norm_sqr()).as_f64();
    if !(stored < threshold) {
        return Err(Error::ResidualTooLarge { residual: stored, threshold });
    }
    let mut p = TwoPhotonPulse {
        grid: state.grid,
        chi: state.chi.clone(),
        descriptor: PulseDescriptor::Grid { source: format!("outgoing at t = {}", state.t) },
        discarded: stored,
    };
    if p.norm() == 0.0 {
        return Err(Error::ResidualTooLarge { residual: stored, threshold });
    }
    p.normalize();
    Ok(p)
}

/// `chi'(x1, x2) = conj(chi(-x1, -x2))` on the mirrored grid. The input must
/// be outgoing: weight with a photon at `x < 0` above `1e-6` is rejected.
pub fn time_reverse<T: Real>(pulse: &TwoPhotonPulse<T>) -> Result<TwoPhotonPulse<T>> {
    let total = pulse.norm();
    let outside = pulse.weight_outside_outgoing();
    if total > 0.0 && outside / total > 1e-6 {
        return Err(Error::SupportViolation(format!("{outside:.3e} of the packet has a photon at x < 0")));
    }
    let m = pulse.grid.n_cells;
    let c = pulse.grid.coupling_index;
    let grid = pulse.grid.mirrored();
    let mut chi = vec![czero(); m * m];
    for i in c..m {
        for j in c..m {
            chi[(m - 1 - i) * m + (m - 1 - j)] = pulse.chi[i * m + j].conj();
        }
    }
    let mut out = TwoPhotonPulse {
        grid,
        chi,
        descriptor: PulseDescriptor::Grid { source: "time-reversed".into() },
        discarded: pulse.discarded,
    };
    // restore the input norm after dropping the sub-threshold tail
    let n = out.norm();
    if n > 0.0 {
        let s = T::lit((total / n).sqrt());
        for z in out.chi.iter_mut() {
            *z = *z * s;
        }
    }
    Ok(out)
}

/// Reference for the bunching comparison: the symmetrized product of two
/// identical Gaussians of width `sigma` centred where `pulse` is.
pub fn bunching_reference<T: Real>(pulse: &TwoPhotonPulse<T>, sigma: T) -> Result<TwoPhotonPulse<T>> {
    let spec = PulseSpec::new(pulse.mean_position(), sigma, T::zero());
    let g = &pulse.grid;
    let m = g.n_cells;
    let mut f = gaussian_pulse(&PulseSpec { normalize: true, ..spec }, g)?;
    for (i, z) in f.iter_mut().enumerate() {
        if (i < g.coupling_index) != (spec.center < T::zero()) {
            *z = czero();
        }
    }
    let mut chi = vec![czero(); m * m];
    for i in 0..m {
        for j in 0..m {
            chi[i * m + j] = f[i] * f[j];
        }
    }
    let mut p = TwoPhotonPulse { grid: *g, chi, descriptor: PulseDescriptor::GaussianProduct { a: spec, b: spec }, discarded: 0.0 };
    p.normalize();
    Ok(p)
}
