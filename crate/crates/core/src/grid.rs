//! Spatial grid of the chiral waveguide field and Gaussian wave packets.
//!
//! Cell `i` covers `[x0 + i dx, x0 + (i + 1) dx)`; the emitters sit at the
//! left edge of the coupling cell, so cells left of it hold `x < 0`.

use crate::error::{Error, Result};
use crate::scalar::{cx, Cx, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<T> {
    pub n_cells: usize,
    pub dx: T,
    /// Left edge of cell 0, equal to `-coupling_index * dx`.
    pub x0: T,
    pub coupling_index: usize,
}

impl<T: Real> GridSpec<T> {
    pub fn new(n_cells: usize, dx: T, coupling_index: usize) -> Result<Self> {
        let g = Self { n_cells, dx, x0: -T::from_usize_lossy(coupling_index) * dx, coupling_index };
        g.validate()?;
        Ok(g)
    }

    /// Smallest grid with cell size `dx` covering `[x_left, x_right]`.
    pub fn spanning(dx: T, x_left: T, x_right: T) -> Result<Self> {
        if !(x_left < T::zero() && x_right > T::zero()) {
            return Err(Error::InvalidParameter { name: "grid", reason: "the domain must contain x = 0".into() });
        }
        let left = (-x_left / dx).ceil().to_usize().unwrap_or(0);
        let right = (x_right / dx).ceil().to_usize().unwrap_or(0);
        Self::new((left + right).max(16), dx, left)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cells < 16 {
            return Err(Error::InvalidParameter { name: "n_cells", reason: format!("need at least 16, got {}", self.n_cells) });
        }
        if !(self.dx > T::zero()) || !self.dx.is_finite() {
            return Err(Error::InvalidParameter { name: "dx", reason: format!("must be positive, got {}", self.dx) });
        }
        if self.coupling_index >= self.n_cells {
            return Err(Error::InvalidParameter {
                name: "coupling_index",
                reason: format!("{} is outside the {} cells", self.coupling_index, self.n_cells),
            });
        }
        Ok(())
    }

    /// Centre of cell `i`.
    pub fn x(&self, i: usize) -> T {
        self.x0 + (T::from_usize_lossy(i) + T::lit(0.5)) * self.dx
    }

    pub fn x_left(&self) -> T {
        self.x0
    }

    pub fn x_right(&self) -> T {
        self.x0 + T::from_usize_lossy(self.n_cells) * self.dx
    }

    /// Grid mirrored through `x = 0`: cell `i` maps to `n - 1 - i`.
    pub fn mirrored(&self) -> Self {
        let ci = self.n_cells - self.coupling_index;
        Self { x0: -T::from_usize_lossy(ci) * self.dx, coupling_index: ci, ..*self }
    }

    /// Same cell size, padded by `left` and `right` extra cells.
    pub fn padded(&self, left: usize, right: usize) -> Self {
        let ci = self.coupling_index + left;
        Self { n_cells: self.n_cells + left + right, x0: -T::from_usize_lossy(ci) * self.dx, coupling_index: ci, dx: self.dx }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec<T> {
    pub center: T,
    pub sigma: T,
    /// Carrier wavenumber, equal to the detuning from the frame frequency.
    pub carrier: T,
    pub normalize: bool,
}

impl<T: Real> PulseSpec<T> {
    pub fn new(center: T, sigma: T, carrier: T) -> Self {
        Self { center, sigma, carrier, normalize: true }
    }
}

/// `exp(-(x - x_a)^2 / 2 sigma^2) exp(i k x)` at the cell centres, scaled to
/// `sum |f|^2 dx = 1` when requested.
pub fn gaussian_pulse<T: Real>(spec: &PulseSpec<T>, grid: &GridSpec<T>) -> Result<Vec<Cx<T>>> {
    if !(spec.sigma > T::zero()) {
        return Err(Error::InvalidParameter { name: "sigma", reason: format!("must be positive, got {}", spec.sigma) });
    }
    let margin = T::lit(5.0) * spec.sigma;
    if spec.center - margin < grid.x_left() || spec.center + margin > grid.x_right() {
        return Err(Error::PulseOutOfDomain { center: spec.center.as_f64(), sigma: spec.sigma.as_f64() });
    }
    let two = T::lit(2.0);
    let mut f: Vec<Cx<T>> = (0..grid.n_cells)
        .map(|i| {
            let x = grid.x(i);
            let env = (-(x - spec.center).powi(2) / (two * spec.sigma * spec.sigma)).exp();
            let ph = spec.carrier * x;
            cx(env * ph.cos(), env * ph.sin())
        })
        .collect();
    if spec.normalize {
        normalize_continuum(&mut f, grid.dx);
    }
    Ok(f)
}

/// Scales a sampled continuum amplitude to `sum |f|^2 dx = 1`.
pub fn normalize_continuum<T: Real>(f: &mut [Cx<T>], dx: T) {
    let n = (f.iter().fold(T::zero(), |a, z| a + z.norm_sqr()) * dx).sqrt();
    if n > T::zero() {
        for z in f.iter_mut() {
            *z = *z / n;
        }
    }
}

/// Zeroes the samples at `x >= 0` and renormalizes. Fails when the discarded
/// weight exceeds `tol`.
pub fn restrict_to_incoming<T: Real>(f: &mut [Cx<T>], grid: &GridSpec<T>, tol: T) -> Result<()> {
    let total = f.iter().fold(T::zero(), |a, z| a + z.norm_sqr());
    let cut = f[grid.coupling_index..].iter().fold(T::zero(), |a, z| a + z.norm_sqr());
    if total == T::zero() {
        return Ok(());
    }
    if cut / total > tol {
        return Err(Error::SupportViolation(format!("{:.3e} of the pulse weight lies at x >= 0", (cut / total).as_f64())));
    }
    for z in f[grid.coupling_index..].iter_mut() {
        *z = cx(T::zero(), T::zero());
    }
    normalize_continuum(f, grid.dx);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pulse_is_normalized_and_symmetric() {
        let g = GridSpec::<f64>::spanning(0.05, -20.0, 20.0).unwrap();
        let f = gaussian_pulse(&PulseSpec::new(0.0, 2.0, 0.0), &g).unwrap();
        let n: f64 = f.iter().map(|z| z.norm_sqr()).sum::<f64>() * g.dx;
        assert!((n - 1.0).abs() < 1e-12);
        assert!(f.iter().all(|z| z.im == 0.0));
        let i0 = g.coupling_index;
        assert!((f[i0] - f[i0 - 1]).norm() < 1e-15);
    }

    #[test]
    fn out_of_domain_is_rejected() {
        let g = GridSpec::<f64>::spanning(0.1, -10.0, 10.0).unwrap();
        assert!(matches!(gaussian_pulse(&PulseSpec::new(-8.0, 1.0, 0.0), &g), Err(Error::PulseOutOfDomain { .. })));
    }

    #[test]
    fn mirror_maps_cell_centres() {
        let g = GridSpec::<f64>::new(40, 0.5, 12).unwrap();
        let m = g.mirrored();
        for i in 0..40 {
            assert!((m.x(39 - i) + g.x(i)).abs() < 1e-12);
        }
        assert_eq!(m.mirrored(), g);
    }

    #[test]
    fn grid_rejects_bad_specs() {
        assert!(GridSpec::<f64>::new(8, 0.1, 2).is_err());
        assert!(GridSpec::<f64>::new(32, 0.1, 40).is_err());
        assert!(GridSpec::<f64>::new(32, -0.1, 4).is_err());
    }
}
