//! Local coupling blocks of the split-step scheme.
//!
//! Each time step is a one-cell shift of the chiral field followed by the
//! exact propagator of the coupling Hamiltonian restricted to the cell at
//! the emitters. The point coupling `V~ delta(x)` becomes `V~ s / sqrt(dx)`
//! on the normalized cell amplitude, where `s` is chosen so that a single
//! step reproduces the continuum amplitude decay `exp(-V~^2 dx / 2)` of the
//! bright mode exactly.
//!
//! In the doubly-excited block the emitted photon stays in the coupling cell
//! for the rest of the step, which biases the two-excitation decay at
//! `O(dx)`. The block is therefore calibrated: a 2x2 mixing of the
//! photon-to-pair couplings and three real shifts are fitted so that the
//! pair-to-pair part of the 5x5 propagator equals
//! `exp(-i H_eff^(2) dx)` exactly.

use crate::error::{Error, Result};
use crate::linalg::{lm, propagator, CMat};
use crate::model::SystemParams;
use crate::scalar::{cx, Cx, Real};

/// Coupling renormalization `s(dx)`; tends to 1 as `dx -> 0`.
pub fn coupling_scale(vt_a: f64, vt_c: f64, dx: f64) -> f64 {
    let vb2 = vt_a * vt_a + vt_c * vt_c;
    let x = vb2 * dx;
    if x == 0.0 {
        return 1.0;
    }
    (-x / 2.0).exp().acos() / x.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Frame {
    d_a: f64,
    d_c: f64,
    j: f64,
    loss_a: f64,
    loss_c: f64,
}

impl Frame {
    fn of<T: Real>(p: &SystemParams<T>) -> Self {
        Self {
            d_a: p.omega_a.as_f64(),
            d_c: p.omega_c.as_f64(),
            j: p.j_coupling.as_f64(),
            loss_a: p.gamma_prime_a.as_f64(),
            loss_c: p.gamma_prime_c.as_f64(),
        }
    }
}

/// Cell couplings and block Hamiltonians for one parameter set and cell size,
/// kept in `f64` regardless of the simulation scalar.
#[derive(Debug, Clone)]
pub struct LocalHamiltonian {
    pub dx: f64,
    pub scale: f64,
    /// Photon-atom and photon-cavity couplings on the normalized cell amplitude.
    pub g_a: f64,
    pub g_c: f64,
    /// Calibration parameters: mixing `[p0..p3]`, diagonal shifts `p4, p5`,
    /// off-diagonal shift `p6`.
    pub calibration: [f64; 7],
    pub calibration_residual: f64,
    frame: Frame,
    vt_a: f64,
    vt_c: f64,
}

impl LocalHamiltonian {
    /// `params` are rotating-frame parameters (frequencies are detunings).
    pub fn new<T: Real>(params: &SystemParams<T>, dx: f64) -> Result<Self> {
        Self::build(params, dx, true)
    }

    /// Same blocks without the two-excitation calibration.
    pub fn uncalibrated<T: Real>(params: &SystemParams<T>, dx: f64) -> Result<Self> {
        Self::build(params, dx, false)
    }

    fn build<T: Real>(params: &SystemParams<T>, dx: f64, calibrate: bool) -> Result<Self> {
        if !(dx > 0.0) || !dx.is_finite() {
            return Err(Error::InvalidParameter { name: "dx", reason: format!("must be positive, got {dx}") });
        }
        let vt_a = params.vt_a().as_f64();
        let vt_c = params.vt_c().as_f64();
        let scale = coupling_scale(vt_a, vt_c, dx);
        let mut out = Self {
            dx,
            scale,
            g_a: vt_a * scale / dx.sqrt(),
            g_c: vt_c * scale / dx.sqrt(),
            calibration: [0.0; 7],
            calibration_residual: 0.0,
            frame: Frame::of(params),
            vt_a,
            vt_c,
        };
        out.calibration_residual = out.pair_block_mismatch(&out.calibration)?;
        if calibrate && (vt_a != 0.0 || vt_c != 0.0) {
            let target = out.pair_target()?;
            let report = lm::levenberg_marquardt(
                |p| {
                    let p: [f64; 7] = p.try_into().expect("seven calibration parameters");
                    out.pair_residuals(&p, &target).unwrap_or_else(|_| vec![1e3; 8])
                },
                &[0.0; 7],
                lm::LmOptions::default(),
            );
            out.calibration = report.x.as_slice().try_into().expect("seven calibration parameters");
            out.calibration_residual = report.max_residual;
            if !(report.max_residual < 1e-9) {
                return Err(Error::CalibrationFailed { residual: report.max_residual });
            }
        }
        Ok(out)
    }

    /// Block acting on `(sqrt(2) chi(c, j), phi_A(j), phi_C(j))` for `j` away
    /// from the coupling cell, and on `(xi(c), e_A, e_C)` for one excitation.
    pub fn h1(&self) -> CMat<f64> {
        let f = &self.frame;
        CMat::from_rows(&[
            vec![cx(0.0, 0.0), cx(self.g_a, 0.0), cx(self.g_c, 0.0)],
            vec![cx(self.g_a, 0.0), cx(f.d_a, -f.loss_a), cx(f.j, 0.0)],
            vec![cx(self.g_c, 0.0), cx(f.j, 0.0), cx(f.d_c, -f.loss_c)],
        ])
    }

    /// Photon-to-pair couplings: rows `(phi_A(c), phi_C(c))`, columns
    /// `(E_AC, E_2C)`, with the calibration mixing applied.
    pub fn pair_couplings(&self, p: &[f64; 7]) -> [[f64; 2]; 2] {
        let s2 = 2f64.sqrt();
        let w = [[self.g_c, 0.0], [self.g_a, s2 * self.g_c]];
        let m = [[1.0 + p[0], p[1]], [p[2], 1.0 + p[3]]];
        let mut out = [[0.0; 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                out[r][c] = w[r][0] * m[0][c] + w[r][1] * m[1][c];
            }
        }
        out
    }

    /// Block on `(chi(c,c), phi_A(c), phi_C(c), E_AC, E_2C)`.
    pub fn h5_with(&self, p: &[f64; 7]) -> CMat<f64> {
        let f = &self.frame;
        let s2 = 2f64.sqrt();
        let w = self.pair_couplings(p);
        let mut h = CMat::<f64>::zeros(5, 5);
        let mut set = |i: usize, j: usize, v: f64| {
            h[(i, j)] = cx(v, 0.0);
            h[(j, i)] = cx(v, 0.0);
        };
        set(0, 1, s2 * self.g_a);
        set(0, 2, s2 * self.g_c);
        set(1, 2, f.j);
        set(1, 3, w[0][0]);
        set(1, 4, w[0][1]);
        set(2, 3, w[1][0]);
        set(2, 4, w[1][1]);
        set(3, 4, s2 * f.j + p[6]);
        h[(1, 1)] = cx(f.d_a, -f.loss_a);
        h[(2, 2)] = cx(f.d_c, -f.loss_c);
        h[(3, 3)] = cx(f.d_a + f.d_c + p[4], -(f.loss_a + f.loss_c));
        h[(4, 4)] = cx(2.0 * f.d_c + p[5], -2.0 * f.loss_c);
        h
    }

    pub fn h5(&self) -> CMat<f64> {
        self.h5_with(&self.calibration)
    }

    /// Continuum two-excitation effective Hamiltonian on `(E_AC, E_2C)`.
    pub fn pair_heff(&self) -> CMat<f64> {
        let f = &self.frame;
        let s2 = 2f64.sqrt();
        let (a, c) = (self.vt_a, self.vt_c);
        // W^T W with W = [[c, 0], [a, sqrt2 c]]
        let ww = [[c * c + a * a, s2 * a * c], [s2 * a * c, 2.0 * c * c]];
        CMat::from_rows(&[
            vec![cx(f.d_a + f.d_c, -(f.loss_a + f.loss_c) - 0.5 * ww[0][0]), cx(s2 * f.j, -0.5 * ww[0][1])],
            vec![cx(s2 * f.j, -0.5 * ww[1][0]), cx(2.0 * f.d_c, -2.0 * f.loss_c - 0.5 * ww[1][1])],
        ])
    }

    fn pair_target(&self) -> Result<CMat<f64>> {
        propagator(&self.pair_heff(), self.dx)
    }

    fn pair_residuals(&self, p: &[f64; 7], target: &CMat<f64>) -> Result<Vec<f64>> {
        let u = propagator(&self.h5_with(p), self.dx)?;
        let mut r = Vec::with_capacity(8);
        for i in 0..2 {
            for j in 0..2 {
                let d = u[(3 + i, 3 + j)] - target[(i, j)];
                r.push(d.re);
                r.push(d.im);
            }
        }
        Ok(r)
    }

    /// Largest deviation of the pair block of the 5x5 propagator from the
    /// continuum two-excitation propagator.
    pub fn pair_block_mismatch(&self, p: &[f64; 7]) -> Result<f64> {
        let target = self.pair_target()?;
        Ok(self.pair_residuals(p, &target)?.iter().fold(0.0, |m, v| m.max(v.abs())))
    }

    pub fn propagators<T: Real>(&self) -> Result<LocalPropagators<T>> {
        let u1 = propagator(&self.h1(), self.dx)?;
        let u5 = propagator(&self.h5(), self.dx)?;
        let conv = |z: Cx<f64>| cx(T::lit(z.re), T::lit(z.im));
        let mut p1 = [[cx(T::zero(), T::zero()); 3]; 3];
        let mut p5 = [[cx(T::zero(), T::zero()); 5]; 5];
        for i in 0..3 {
            for j in 0..3 {
                p1[i][j] = conv(u1[(i, j)]);
            }
        }
        for i in 0..5 {
            for j in 0..5 {
                p5[i][j] = conv(u5[(i, j)]);
            }
        }
        Ok(LocalPropagators { u1: p1, u5: p5 })
    }
}

/// One-step propagators of the local blocks in the simulation scalar.
#[derive(Debug, Clone, Copy)]
pub struct LocalPropagators<T> {
    pub u1: [[Cx<T>; 3]; 3],
    pub u5: [[Cx<T>; 5]; 5],
}

#[inline]
pub fn apply3<T: Real>(u: &[[Cx<T>; 3]; 3], v: [Cx<T>; 3]) -> [Cx<T>; 3] {
    [
        u[0][0] * v[0] + u[0][1] * v[1] + u[0][2] * v[2],
        u[1][0] * v[0] + u[1][1] * v[1] + u[1][2] * v[2],
        u[2][0] * v[0] + u[2][1] * v[1] + u[2][2] * v[2],
    ]
}

#[inline]
pub fn apply5<T: Real>(u: &[[Cx<T>; 5]; 5], v: [Cx<T>; 5]) -> [Cx<T>; 5] {
    let mut out = [cx(T::zero(), T::zero()); 5];
    for (o, row) in out.iter_mut().zip(u) {
        *o = row.iter().zip(&v).fold(cx(T::zero(), T::zero()), |acc, (a, b)| acc + *a * *b);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotating_reference() -> SystemParams<f64> {
        let p = SystemParams::reference();
        p.in_frame(p.omega_ee())
    }

    #[test]
    fn scale_tends_to_one() {
        assert!((coupling_scale(0.35, 0.18, 1e-8) - 1.0).abs() < 1e-6);
        assert_eq!(coupling_scale(0.0, 0.0, 1.0), 1.0);
    }

    #[test]
    fn bright_decay_is_exact_in_one_step() {
        let p = SystemParams::<f64>::new(0.0, 0.0, 0.0, 0.1, 0.05);
        let dx = 1.3;
        let lh = LocalHamiltonian::new(&p, dx).unwrap();
        let u = propagator(&lh.h1(), dx).unwrap();
        let (a, c) = (p.vt_a(), p.vt_c());
        let n = a.hypot(c);
        let bright = [cx(0.0, 0.0), cx(a / n, 0.0), cx(c / n, 0.0)];
        let out = u.mul_vec(&bright);
        let amp = (out[1] * a / n + out[2] * c / n).norm();
        assert!((amp - (-(a * a + c * c) * dx / 2.0).exp()).abs() < 1e-14);
    }

    #[test]
    fn calibration_is_exact_and_small() {
        let p = rotating_reference();
        let dx = 0.05 / p.gamma_unit();
        let raw = LocalHamiltonian::uncalibrated(&p, dx).unwrap();
        let cal = LocalHamiltonian::new(&p, dx).unwrap();
        assert!(raw.calibration_residual > 1e-6);
        assert!(cal.calibration_residual < 1e-12, "{}", cal.calibration_residual);
        assert!(cal.calibration.iter().all(|v| v.abs() < 0.1), "{:?}", cal.calibration);
    }

    #[test]
    fn lossless_blocks_are_hermitian() {
        let lh = LocalHamiltonian::new(&rotating_reference(), 1.0).unwrap();
        assert_eq!(lh.h1().hermiticity_defect(), 0.0);
        assert_eq!(lh.h5().hermiticity_defect(), 0.0);
    }

    #[test]
    fn calibration_holds_with_loss() {
        let p = rotating_reference().with_losses(0.0, 0.2 * SystemParams::<f64>::reference().gamma_c());
        let lh = LocalHamiltonian::new(&p, 0.1 / p.gamma_unit()).unwrap();
        assert!(lh.calibration_residual < 1e-12);
    }
}
