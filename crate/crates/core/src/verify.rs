//! Fast oracle suite.
//!
//! The centrepiece is a brute-force check of the two-excitation scheme: the
//! discretized Hamiltonian is assembled from ladder operators over the
//! symmetric occupation basis of a small grid, checked for Hermiticity and
//! exponentiated, and the result is compared with the split-step engine.

use std::collections::HashMap;
use std::fmt;

use crate::error::Result;
use crate::fit::exponential_decay_rate;
use crate::grid::{GridSpec, PulseSpec};
use crate::linalg::{expm, CMat};
use crate::local::LocalHamiltonian;
use crate::model::{ee_state, single_excitation_heff, SystemParams};
use crate::onephoton::{emitter_state, evolve_single, EvolveOptions};
use crate::scalar::{cx, czero, Cx};
use crate::twophoton::{build_gaussian_two_photon, evolve_two_photon, TwoPhotonOptions, TwoPhotonState};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value <= tolerance`; a tolerance of zero asks for exact equality.
    fn at_most(name: &'static str, value: f64, tolerance: f64) -> Self {
        Self { name, value, tolerance, passed: value <= tolerance }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status}  {:<34} {:>12.3e}  (tol {:.1e})", self.name, self.value, self.tolerance)
    }
}

/// Occupation-number state with two excitations: photon cells (sorted),
/// atom excitation, cavity photon number.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Occ {
    photons: Vec<usize>,
    atom: u8,
    cavity: u8,
}

impl Occ {
    fn in_cell(&self, c: usize) -> usize {
        self.photons.iter().filter(|&&p| p == c).count()
    }

    fn add_photon(&self, c: usize) -> (Self, f64) {
        let n = self.in_cell(c);
        let mut next = self.clone();
        next.photons.push(c);
        next.photons.sort_unstable();
        (next, ((n + 1) as f64).sqrt())
    }
}

/// Two-excitation basis of an `m`-cell grid plus atom and cavity.
pub struct DenseBasis {
    states: Vec<Occ>,
    index: HashMap<Occ, usize>,
    m: usize,
}

impl DenseBasis {
    pub fn new(m: usize) -> Self {
        let mut states = Vec::new();
        for i in 0..m {
            for j in i..m {
                states.push(Occ { photons: vec![i, j], atom: 0, cavity: 0 });
            }
        }
        for i in 0..m {
            states.push(Occ { photons: vec![i], atom: 1, cavity: 0 });
        }
        for i in 0..m {
            states.push(Occ { photons: vec![i], atom: 0, cavity: 1 });
        }
        states.push(Occ { photons: vec![], atom: 1, cavity: 1 });
        states.push(Occ { photons: vec![], atom: 0, cavity: 2 });
        let index = states.iter().cloned().enumerate().map(|(k, s)| (s, k)).collect();
        Self { states, index, m }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// Coupling-cell Hamiltonian `g_a (b_c^+ s + h.c.) + g_c (b_c^+ a + h.c.)
    /// + J (a^+ s + h.c.)` plus emitter detunings and losses.
    /// `corrupt` flips the sign of the Hermitian partner of the atom emission term.
    pub fn local_hamiltonian(&self, p: &SystemParams<f64>, g_a: f64, g_c: f64, c: usize, corrupt: bool) -> CMat<f64> {
        let n = self.dim();
        let mut h = CMat::<f64>::zeros(n, n);
        let mut entries: Vec<(usize, usize, Cx<f64>)> = Vec::new();
        let mut put = |from: usize, to: &Occ, amp: f64, partner_sign: f64| {
            let k = self.index[to];
            entries.push((k, from, cx(amp, 0.0)));
            entries.push((from, k, cx(partner_sign * amp, 0.0)));
        };
        let flip = if corrupt { -1.0 } else { 1.0 };
        for (k, s) in self.states.iter().enumerate() {
            if s.atom == 1 {
                let mut lowered = s.clone();
                lowered.atom = 0;
                let (to, f) = lowered.add_photon(c);
                put(k, &to, g_a * f, flip);
                let mut to = lowered.clone();
                to.cavity += 1;
                put(k, &to, p.j_coupling * (to.cavity as f64).sqrt(), 1.0);
            }
            if s.cavity > 0 {
                let mut lowered = s.clone();
                lowered.cavity -= 1;
                let (to, f) = lowered.add_photon(c);
                put(k, &to, g_c * (s.cavity as f64).sqrt() * f, 1.0);
            }
        }
        for (r, c, z) in entries {
            h[(r, c)] = h[(r, c)] + z;
        }
        for (k, s) in self.states.iter().enumerate() {
            let (na, nc) = (s.atom as f64, s.cavity as f64);
            h[(k, k)] = cx(p.omega_a * na + p.omega_c * nc, -(p.gamma_prime_a * na + p.gamma_prime_c * nc));
        }
        h
    }

    /// One-cell translation of every photon; photons leaving the last cell are dropped.
    pub fn shift(&self, v: &[Cx<f64>]) -> Vec<Cx<f64>> {
        let mut out = vec![czero(); v.len()];
        for (k, s) in self.states.iter().enumerate() {
            if s.photons.iter().any(|&p| p + 1 >= self.m) {
                continue;
            }
            let mut t = s.clone();
            t.photons.iter_mut().for_each(|p| *p += 1);
            out[self.index[&t]] = v[k];
        }
        out
    }

    /// Engine amplitudes to occupation-basis amplitudes.
    pub fn from_state(&self, st: &TwoPhotonState<f64>) -> Vec<Cx<f64>> {
        let m = self.m;
        let s2 = 2f64.sqrt();
        self.states
            .iter()
            .map(|s| match (s.photons.as_slice(), s.atom, s.cavity) {
                (&[i, j], _, _) if i == j => st.chi[i * m + i],
                (&[i, j], _, _) => st.chi[i * m + j] * s2,
                (&[i], 1, _) => st.phi_a[i],
                (&[i], _, _) => st.phi_c[i],
                (_, 1, _) => st.e_ac,
                _ => st.e_2c,
            })
            .collect()
    }
}

fn oracle_params(loss: bool) -> SystemParams<f64> {
    let lab = SystemParams::reference();
    let p = lab.in_frame(lab.omega_ee());
    if loss {
        p.with_losses(0.1 * lab.gamma_a(), 0.2 * lab.gamma_c())
    } else {
        p
    }
}

/// Deterministic test state: both photons left of the coupling cell, some
/// stored excitation, unit norm, symmetric.
fn oracle_state(grid: GridSpec<f64>) -> TwoPhotonState<f64> {
    let m = grid.n_cells;
    let mut st = TwoPhotonState::vacuum(grid);
    let wave = |k: usize, a: f64| cx((0.7 * k as f64 + a).cos(), (1.3 * k as f64 - a).sin());
    for i in 0..4 {
        for j in 0..4 {
            let z = wave(i + j, 0.3) * (0.5 + 0.1 * (i * j) as f64);
            st.chi[i * m + j] = z;
        }
        st.phi_a[i] = wave(i, 1.1) * 0.4;
        st.phi_c[i] = wave(i, 2.3) * 0.3;
    }
    st.e_ac = cx(0.2, -0.1);
    st.e_2c = cx(-0.15, 0.25);
    let n = st.norm().sqrt();
    let inv = cx(1.0 / n, 0.0);
    st.chi.iter_mut().chain(st.phi_a.iter_mut()).chain(st.phi_c.iter_mut()).for_each(|z| *z = *z * inv);
    st.e_ac = st.e_ac * inv;
    st.e_2c = st.e_2c * inv;
    st
}

// wide enough that nothing reaches the right edge within the compared steps
const ORACLE_CELLS: usize = 28;
const ORACLE_STEPS: usize = 20;

fn oracle_dx() -> f64 {
    0.25 / SystemParams::<f64>::reference().gamma_unit()
}

/// Hermiticity defect of the lossless assembled Hamiltonian.
pub fn hermiticity_defect(corrupt: bool) -> Result<f64> {
    let p = oracle_params(false);
    let dx = oracle_dx();
    let lh = LocalHamiltonian::uncalibrated(&p, dx)?;
    let basis = DenseBasis::new(ORACLE_CELLS);
    let h = basis.local_hamiltonian(&p, lh.g_a, lh.g_c, 5, corrupt);
    Ok(h.hermiticity_defect())
}

/// Largest amplitude difference after 20 steps between the uncalibrated
/// engine and `(exp(-i H dx) S)^20` in the occupation basis.
pub fn dense_propagation_error(loss: bool, corrupt: bool) -> Result<f64> {
    let p = oracle_params(loss);
    let dx = oracle_dx();
    let grid = GridSpec::new(ORACLE_CELLS, dx, 5)?;
    let lh = LocalHamiltonian::uncalibrated(&p, dx)?;
    let basis = DenseBasis::new(ORACLE_CELLS);
    let h = basis.local_hamiltonian(&p, lh.g_a, lh.g_c, grid.coupling_index, corrupt);
    let u = expm(&h.scale(cx(0.0, -dx)))?;

    let st = oracle_state(grid);
    let mut v = basis.from_state(&st);
    for _ in 0..ORACLE_STEPS {
        v = u.mul_vec(&basis.shift(&v));
    }
    let opts = TwoPhotonOptions { calibrated: false, boundary_threshold: f64::INFINITY, ..Default::default() };
    let (_, out) = evolve_two_photon(&p, &st, ORACLE_STEPS as f64 * dx, dx, &opts)?;
    let w = basis.from_state(&out);
    Ok(v.iter().zip(&w).fold(0.0, |m, (a, b)| m.max((*a - *b).norm())))
}

/// Norm drift and symmetry defect of a lossless trapping run on a coarse grid.
pub fn small_trapping_run() -> Result<(f64, f64)> {
    let lab = SystemParams::reference();
    let p = lab.in_frame(lab.omega_ee());
    let gamma = lab.gamma_unit();
    let dx = 0.1 / gamma;
    let g = GridSpec::spanning(dx, -11.0 / gamma, 14.0 / gamma)?;
    let spec = PulseSpec::new(-5.0 / gamma, 1.0 / gamma, p.omega_bright());
    let st = TwoPhotonState::from_pulse(&build_gaussian_two_photon(&spec, &spec, &g)?);
    let opts = TwoPhotonOptions { sample_every: 5, gamma_unit: gamma, ..Default::default() };
    let (traj, out) = evolve_two_photon(&p, &st, 12.0 / gamma, dx, &opts)?;
    let drift = traj.column("norm").unwrap_or_default().iter().fold(0.0, |m: f64, n| m.max((n - 1.0).abs()));
    Ok((drift, out.symmetry_defect()))
}

/// Largest difference between a coupling-free evolution and the shifted input.
pub fn free_transport_defect() -> Result<f64> {
    let p = SystemParams::<f64>::new(0.02, -0.01, 0.004, 0.0, 0.0);
    let g = GridSpec::new(64, 0.25, 40)?;
    let a = PulseSpec::new(-4.0, 0.7, 0.3);
    let b = PulseSpec::new(-6.0, 0.6, -0.2);
    let st = TwoPhotonState::from_pulse(&build_gaussian_two_photon(&a, &b, &g)?);
    let shift = 12;
    let (_, out) = evolve_two_photon(&p, &st, shift as f64 * 0.25, 0.25, &TwoPhotonOptions::default())?;
    let m = 64;
    let mut worst = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let want = if i >= shift && j >= shift { st.chi[(i - shift) * m + j - shift] } else { czero() };
            worst = worst.max((out.chi[i * m + j] - want).norm());
        }
    }
    Ok(worst)
}

/// `|V~_A A + V~_C C|` for the unnormalized EE amplitudes `(V~_C, -V~_A)`.
pub fn port_on_ee() -> f64 {
    let p = SystemParams::<f64>::reference();
    let (va, vc) = (p.vt_a(), p.vt_c());
    (va * vc + vc * (-va)).abs()
}

/// `|H_eff v - omega_EE v|` for the normalized EE vector.
pub fn ee_eigen_residual() -> Result<f64> {
    let p = SystemParams::<f64>::reference();
    let (a, c) = ee_state(&p)?;
    let v = [cx(a, 0.0), cx(c, 0.0)];
    let hv = single_excitation_heff(&p).mul_vec(&v);
    let w = p.omega_ee();
    Ok(hv.iter().zip(&v).fold(0.0, |m, (x, y)| m.max((*x - *y * w).norm())))
}

/// Relative error of the fitted single-cavity decay rate against
/// `-2 Im` of the effective-Hamiltonian eigenvalue.
pub fn decay_fit_error() -> Result<f64> {
    let p = SystemParams::new(0.0, 0.0, 0.0, 0.0, 0.05);
    let gamma = p.gamma_unit();
    let dx = 0.02 / gamma;
    let g = GridSpec::spanning(dx, -1.0 / gamma, 12.0 / gamma)?;
    let opts = EvolveOptions { sample_every: 10, ..Default::default() };
    let (traj, _) = evolve_single(&p, &g, &emitter_state(&g, 0.0, 1.0), 10.0 / gamma, dx, &opts)?;
    let t = traj.column("t").unwrap_or_default();
    let pc = traj.column("pop_cavity").unwrap_or_default();
    let (rate, _) = exponential_decay_rate(&t, &pc).unwrap_or((f64::NAN, 0.0));
    let want = -2.0 * single_excitation_heff(&p)[(1, 1)].im;
    Ok((rate / want - 1.0).abs())
}

/// Runs every check. `corrupt` swaps in the sign-corrupted Hamiltonian.
pub fn run_oracles(corrupt: bool) -> Result<Vec<Check>> {
    let (drift, sym) = small_trapping_run()?;
    let free = free_transport_defect()?;
    Ok(vec![
        Check::at_most("hermiticity", hermiticity_defect(corrupt)?, 1e-14),
        Check::at_most("dense propagation (lossless)", dense_propagation_error(false, corrupt)?, 1e-6),
        Check::at_most("dense propagation (lossy)", dense_propagation_error(true, corrupt)?, 1e-6),
        Check::at_most("lossless norm drift", drift, 1e-6),
        Check::at_most("bosonic symmetry", sym, 1e-9),
        Check::at_most("free transport", free, 0.0),
        Check::at_most("port annihilates EE", port_on_ee(), 0.0),
        Check::at_most("EE eigenvector residual", ee_eigen_residual()?, 1e-12),
        Check::at_most("decay fit vs eigenvalue", decay_fit_error()?, 0.02),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_dimension() {
        assert_eq!(DenseBasis::new(20).dim(), 252);
        assert_eq!(DenseBasis::new(3).dim(), 6 + 6 + 2);
    }

    #[test]
    fn shift_drops_the_last_cell() {
        let b = DenseBasis::new(3);
        let mut v = vec![czero(); b.dim()];
        v[b.index[&Occ { photons: vec![0, 1], atom: 0, cavity: 0 }]] = cx(1.0, 0.0);
        v[b.index[&Occ { photons: vec![2], atom: 1, cavity: 0 }]] = cx(0.5, 0.0);
        let w = b.shift(&v);
        assert_eq!(w[b.index[&Occ { photons: vec![1, 2], atom: 0, cavity: 0 }]], cx(1.0, 0.0));
        assert!(w.iter().filter(|z| **z != czero()).count() == 1);
    }

    #[test]
    fn oracle_state_is_normalized_and_symmetric() {
        let st = oracle_state(GridSpec::new(ORACLE_CELLS, 1.0, 5).unwrap());
        assert!((st.norm() - 1.0).abs() < 1e-14);
        assert_eq!(st.symmetry_defect(), 0.0);
        let b = DenseBasis::new(ORACLE_CELLS);
        let v = b.from_state(&st);
        let n: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        assert!((n - 1.0).abs() < 1e-14);
    }

    #[test]
    fn corrupted_sign_breaks_hermiticity_and_propagation() {
        assert!(hermiticity_defect(true).unwrap() > 1e-3);
        assert!(dense_propagation_error(false, true).unwrap() > 1e-6);
    }

    #[test]
    fn suite_passes() {
        let checks = run_oracles(false).unwrap();
        for c in &checks {
            assert!(c.passed, "{c}");
        }
    }
}
