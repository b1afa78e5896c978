//! Master-equation dynamics under a coherent pulsed drive injected through
//! the collective waveguide port.
//!
//! With `K = H - (i/2) sum L_k^+ L_k` and drive `beta(t)` on the port `L`,
//!
//! ```text
//! d rho = X + X^+ + sum_k L_k rho L_k^+,   X = -i K rho + beta L^+ rho - beta* L rho
//! ```
//!
//! which is the Lindblad equation with `H_d = i (beta L^+ - beta* L)`.

use crate::error::{Error, Result};
use crate::linalg::{CMat, Csr};
use crate::model::{three_mode_heff, SystemParams, ThreeModeParams};
use crate::scalar::{cx, czero, Cx, Real};
use crate::trajectory::Trajectory;

/// Fock truncation: `n_max` photons per cavity mode plus a two-level atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockSpaceSpec {
    pub n_max: usize,
    pub cavities: usize,
}

impl FockSpaceSpec {
    pub fn new(n_max: usize, cavities: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::InvalidParameter { name: "n_max", reason: "must be at least 1".into() });
        }
        if !(1..=2).contains(&cavities) {
            return Err(Error::InvalidParameter { name: "cavities", reason: format!("one or two supported, got {cavities}") });
        }
        Ok(Self { n_max, cavities })
    }

    /// Smallest cutoff with `n_max >= N + 5 sqrt(N)`.
    pub fn cutoff_for(mean_photons: f64) -> usize {
        ((mean_photons + 5.0 * mean_photons.sqrt()).ceil() as usize).max(1)
    }

    pub fn dim(&self) -> usize {
        (self.n_max + 1).pow(self.cavities as u32) * 2
    }

    /// Index of `|n_1 (, n_2), s>`, `s = 1` for the excited atom.
    fn index(&self, n: &[usize], s: usize) -> usize {
        let mut k = 0;
        for &ni in n {
            k = k * (self.n_max + 1) + ni;
        }
        k * 2 + s
    }

    fn states(&self) -> Vec<(Vec<usize>, usize)> {
        let mut out = Vec::with_capacity(self.dim());
        let levels = self.n_max + 1;
        for k in 0..levels.pow(self.cavities as u32) {
            let mut n = vec![0; self.cavities];
            let mut r = k;
            for slot in n.iter_mut().rev() {
                *slot = r % levels;
                r /= levels;
            }
            for s in 0..2 {
                out.push((n.clone(), s));
            }
        }
        out
    }
}

/// Operators of one open system in a truncated Fock space.
#[derive(Debug, Clone)]
pub struct Generator<T> {
    pub fock: FockSpaceSpec,
    pub hamiltonian: Csr<T>,
    /// Collective waveguide port, also the drive channel.
    pub port: Csr<T>,
    /// Intrinsic-loss jump operators.
    pub losses: Vec<Csr<T>>,
    /// Photon-number operators, one per cavity.
    pub cavity_numbers: Vec<Csr<T>>,
    pub atom_population: Csr<T>,
    /// Single-excitation EE states to project on.
    pub ee_states: Vec<Vec<Cx<T>>>,
    /// Diagonal projector on states with some cavity at `n_max`.
    pub tail: Csr<T>,
    pub gamma_unit: T,
}

struct Ops<T> {
    fock: FockSpaceSpec,
    a: Vec<Csr<T>>,
    sm: Csr<T>,
}

impl<T: Real> Ops<T> {
    fn new(fock: FockSpaceSpec) -> Self {
        let states = fock.states();
        let d = fock.dim();
        let a = (0..fock.cavities)
            .map(|c| {
                let trip: Vec<_> = states
                    .iter()
                    .filter(|(n, _)| n[c] > 0)
                    .map(|(n, s)| {
                        let mut m = n.clone();
                        m[c] -= 1;
                        (fock.index(&m, *s), fock.index(n, *s), cx(T::from_usize_lossy(n[c]).sqrt(), T::zero()))
                    })
                    .collect();
                Csr::from_triplets(d, d, &trip)
            })
            .collect();
        let trip: Vec<_> = states
            .iter()
            .filter(|(_, s)| *s == 1)
            .map(|(n, _)| (fock.index(n, 0), fock.index(n, 1), cx(T::one(), T::zero())))
            .collect();
        Self { fock, a, sm: Csr::from_triplets(d, d, &trip) }
    }

    fn number(&self, c: usize) -> Csr<T> {
        self.a[c].adjoint().matmul(&self.a[c])
    }

    fn atom(&self) -> Csr<T> {
        self.sm.adjoint().matmul(&self.sm)
    }

    /// `V_atom sigma^+ + sum V_c a_c^+` applied to the vacuum, normalized.
    fn single(&self, atom: Cx<T>, cav: &[Cx<T>]) -> Vec<Cx<T>> {
        let d = self.fock.dim();
        let zero = vec![0; self.fock.cavities];
        let mut v = vec![czero(); d];
        v[self.fock.index(&zero, 1)] = atom;
        for (c, amp) in cav.iter().enumerate() {
            let mut n = zero.clone();
            n[c] = 1;
            v[self.fock.index(&n, 0)] = *amp;
        }
        let norm = v.iter().fold(T::zero(), |a, z| a + z.norm_sqr()).sqrt();
        v.iter().map(|z| *z / norm).collect()
    }

    fn tail(&self) -> Csr<T> {
        let d = self.fock.dim();
        let trip: Vec<_> = self
            .fock
            .states()
            .iter()
            .filter(|(n, _)| n.iter().any(|&k| k == self.fock.n_max))
            .map(|(n, s)| {
                let i = self.fock.index(n, *s);
                (i, i, cx(T::one(), T::zero()))
            })
            .collect();
        Csr::from_triplets(d, d, &trip)
    }
}

fn re<T: Real>(x: T) -> Cx<T> {
    cx(x, T::zero())
}

/// Cavity-atom system in the frame rotating at `omega_ref`.
pub fn build_generator<T: Real>(params: &SystemParams<T>, omega_ref: T, fock: FockSpaceSpec) -> Result<Generator<T>> {
    params.validate(true)?;
    if fock.cavities != 1 {
        return Err(Error::InvalidParameter { name: "cavities", reason: "the cavity-atom system has one cavity".into() });
    }
    let p = params.in_frame(omega_ref);
    let ops = Ops::new(fock);
    let a = &ops.a[0];
    let ad = a.adjoint();
    let sp = ops.sm.adjoint();
    let h = ops
        .number(0)
        .scale(re(p.omega_c))
        .add(&ops.atom().scale(re(p.omega_a)))
        .add(&ad.matmul(&ops.sm).add(&sp.matmul(a)).scale(re(p.j_coupling)));
    let port = a.scale(re(p.vt_c())).add(&ops.sm.scale(re(p.vt_a())));
    let mut losses = Vec::new();
    let two = T::lit(2.0);
    if p.gamma_prime_c > T::zero() {
        losses.push(a.scale(re((two * p.gamma_prime_c).sqrt())));
    }
    if p.gamma_prime_a > T::zero() {
        losses.push(ops.sm.scale(re((two * p.gamma_prime_a).sqrt())));
    }
    let ee = ops.single(re(p.v_c), &[re(-p.v_a)]);
    Ok(Generator {
        fock,
        hamiltonian: h,
        port,
        losses,
        cavity_numbers: vec![ops.number(0)],
        atom_population: ops.atom(),
        ee_states: vec![ee],
        tail: ops.tail(),
        gamma_unit: params.gamma_unit(),
    })
}

/// Two cavities (cavity 1 hosting the atom) in the frame rotating at
/// `omega_ref`. The projected EE states are the eigenvectors of the
/// single-excitation effective Hamiltonian with the two smallest linewidths.
pub fn build_three_mode_generator<T: Real>(params: &ThreeModeParams<T>, omega_ref: T, fock: FockSpaceSpec) -> Result<Generator<T>> {
    params.validate()?;
    if fock.cavities != 2 {
        return Err(Error::InvalidParameter { name: "cavities", reason: "the three-mode system has two cavities".into() });
    }
    let p = params.in_frame(omega_ref);
    let ops = Ops::new(fock);
    let (a1, a2) = (&ops.a[0], &ops.a[1]);
    let sp = ops.sm.adjoint();
    let h = ops
        .number(0)
        .scale(re(p.omega_1))
        .add(&ops.number(1).scale(re(p.omega_2)))
        .add(&ops.atom().scale(re(p.omega_a)))
        .add(&a1.adjoint().matmul(a2).add(&a2.adjoint().matmul(a1)).scale(re(p.j_coupling)))
        .add(&a1.adjoint().matmul(&ops.sm).add(&sp.matmul(a1)).scale(re(p.g_coupling)));
    let tv = T::lit(2.0) * T::PI().sqrt();
    let port = a1.scale(re(tv * p.v_1)).add(&a2.scale(re(tv * p.v_2)));
    let two = T::lit(2.0);
    let mut losses = Vec::new();
    for (op, g) in [(a1, p.gamma_prime_1), (a2, p.gamma_prime_2), (&ops.sm, p.gamma_prime_a)] {
        if g > T::zero() {
            losses.push(op.scale(re((two * g).sqrt())));
        }
    }
    let spec = crate::model::ComplexSpectrum::of(&three_mode_heff(&p))?;
    let ee_states = spec.eigenvectors[..2].iter().map(|v| ops.single(v[0], &[v[1], v[2]])).collect();
    Ok(Generator {
        fock,
        hamiltonian: h,
        port,
        losses,
        cavity_numbers: vec![ops.number(0), ops.number(1)],
        atom_population: ops.atom(),
        ee_states,
        tail: ops.tail(),
        gamma_unit: params.gamma_unit(),
    })
}

/// Gaussian coherent input: photon-flux amplitude
/// `beta(t) = sqrt(N) (pi sigma^2)^(-1/4) exp(-(t - t0)^2 / 2 sigma^2) exp(-i delta t)`
/// with `delta` the carrier detuning from the frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveEnvelope<T> {
    pub mean_photons: T,
    pub center: T,
    pub sigma: T,
    pub detuning: T,
}

impl<T: Real> DriveEnvelope<T> {
    pub fn gaussian(mean_photons: T, center: T, sigma: T, detuning: T) -> Result<Self> {
        if !(mean_photons >= T::zero()) || !(sigma > T::zero()) {
            return Err(Error::InvalidParameter { name: "drive", reason: "need N >= 0 and sigma > 0".into() });
        }
        Ok(Self { mean_photons, center, sigma, detuning })
    }

    pub fn none() -> Self {
        Self { mean_photons: T::zero(), center: T::zero(), sigma: T::one(), detuning: T::zero() }
    }

    pub fn beta(&self, t: T) -> Cx<T> {
        if self.mean_photons == T::zero() {
            return czero();
        }
        let amp = self.mean_photons.sqrt() * (T::PI() * self.sigma * self.sigma).powf(T::lit(-0.25));
        let u = (t - self.center) / self.sigma;
        let env = amp * (-u * u / T::lit(2.0)).exp();
        let ph = -self.detuning * t;
        cx(env * ph.cos(), env * ph.sin())
    }

    /// Time after which `|beta|^2` is negligible (five widths past the peak).
    pub fn end(&self) -> T {
        self.center + T::lit(5.0) * self.sigma
    }

    /// `int |beta|^2 dt` by the trapezoid rule on `[0, t_end]`.
    pub fn photon_number(&self, t_end: T, steps: usize) -> T {
        let h = t_end / T::from_usize_lossy(steps);
        let mut acc = T::zero();
        for k in 0..=steps {
            let w = if k == 0 || k == steps { T::lit(0.5) } else { T::one() };
            acc = acc + w * self.beta(h * T::from_usize_lossy(k)).norm_sqr();
        }
        acc * h
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterOptions {
    /// Initial step; `None` applies the resolution rule `dt <= 0.01 / rate`.
    pub dt: Option<f64>,
    /// Time between samples.
    pub sample_interval: f64,
    pub convergence_tol: f64,
    /// Zero disables the refinement check.
    pub max_halvings: usize,
    pub trace_tol: f64,
    pub tail_tol: f64,
    pub positivity_tol: f64,
}

impl Default for MasterOptions {
    fn default() -> Self {
        Self { dt: None, sample_interval: 1.0, convergence_tol: 1e-6, max_halvings: 5, trace_tol: 1e-6, tail_tol: 1e-6, positivity_tol: 1e-7 }
    }
}

#[derive(Debug, Clone)]
pub struct MasterRun<T> {
    pub trajectory: Trajectory,
    pub rho: CMat<T>,
    pub dt: f64,
}

impl<T: Real> Generator<T> {
    fn effective(&self) -> Csr<T> {
        let half = cx(T::zero(), T::lit(-0.5));
        let mut k = self.hamiltonian.add(&self.port.adjoint().matmul(&self.port).scale(half));
        for l in &self.losses {
            k = k.add(&l.adjoint().matmul(l).scale(half));
        }
        // -i K
        k.scale(cx(T::zero(), -T::one()))
    }

    /// Largest single-excitation rate, used by the step rule.
    pub fn characteristic_rate(&self) -> T {
        let k = self.effective().to_dense();
        let idx: Vec<usize> = self
            .fock
            .states()
            .iter()
            .filter(|(n, s)| n.iter().sum::<usize>() + s == 1)
            .map(|(n, s)| self.fock.index(n, *s))
            .collect();
        let sub = k.submatrix(&idx);
        crate::linalg::eigenvalues(&sub).map(|v| v.iter().fold(T::zero(), |m, z| m.max(z.norm()))).unwrap_or_else(|_| sub.norm1())
    }

    fn columns(&self) -> Vec<String> {
        let mut c = vec!["t".to_string(), "t_gamma".to_string(), "n_cavity".to_string()];
        if self.cavity_numbers.len() > 1 {
            c.push("n_cavity2".into());
        }
        c.push("p_atom".into());
        c.push("p_ee".into());
        if self.ee_states.len() > 1 {
            c.push("p_ee2".into());
        }
        c.push("trace_err".into());
        c.push("tail_pop".into());
        c
    }

    fn observe(&self, t: f64, rho: &CMat<T>) -> Vec<f64> {
        let mut row = vec![t, t * self.gamma_unit.as_f64()];
        for n in &self.cavity_numbers {
            row.push(n.trace_with(rho).re.as_f64());
        }
        row.push(self.atom_population.trace_with(rho).re.as_f64());
        for v in &self.ee_states {
            let rv = rho.mul_vec(v);
            let p = v.iter().zip(&rv).fold(czero::<T>(), |a, (x, y)| a + x.conj() * *y);
            row.push(p.re.as_f64());
        }
        row.push((rho.trace().re - T::one()).as_f64());
        row.push(self.tail.trace_with(rho).re.as_f64());
        row
    }
}

struct Rhs<'a, T: Real> {
    gen: &'a Generator<T>,
    mik: Csr<T>,
    port_dag: Csr<T>,
    lr: CMat<T>,
    lr_dag: CMat<T>,
}

impl<'a, T: Real> Rhs<'a, T> {
    fn new(gen: &'a Generator<T>) -> Self {
        let d = gen.fock.dim();
        Self { gen, mik: gen.effective(), port_dag: gen.port.adjoint(), lr: CMat::zeros(d, d), lr_dag: CMat::zeros(d, d) }
    }

    /// Writes the time derivative of a Hermitian `rho` into `out`.
    fn eval(&mut self, rho: &CMat<T>, beta: Cx<T>, out: &mut CMat<T>) {
        let one = cx(T::one(), T::zero());
        out.fill_zero();
        self.mik.mul_dense_acc(one, rho, out);
        self.lr.fill_zero();
        self.gen.port.mul_dense_acc(one, rho, &mut self.lr);
        if beta != czero() {
            self.port_dag.mul_dense_acc(beta, rho, out);
            out.axpy(-beta.conj(), &self.lr);
        }
        let n = out.rows();
        for i in 0..n {
            out[(i, i)] = cx(out[(i, i)].re + out[(i, i)].re, T::zero());
            for j in i + 1..n {
                let z = out[(i, j)] + out[(j, i)].conj();
                out[(i, j)] = z;
                out[(j, i)] = z.conj();
            }
        }
        self.lr.adjoint_into(&mut self.lr_dag);
        self.gen.port.mul_dense_acc(one, &self.lr_dag, out);
        for l in &self.gen.losses {
            self.lr.fill_zero();
            l.mul_dense_acc(one, rho, &mut self.lr);
            self.lr.adjoint_into(&mut self.lr_dag);
            l.mul_dense_acc(one, &self.lr_dag, out);
        }
    }
}

// The right-hand side is the Lindbladian only on Hermitian matrices; an
// anti-Hermitian rounding residue would otherwise grow.
fn hermitize<T: Real>(rho: &mut CMat<T>) {
    let n = rho.rows();
    let half = T::lit(0.5);
    for i in 0..n {
        rho[(i, i)].im = T::zero();
        for j in i + 1..n {
            let z = (rho[(i, j)] + rho[(j, i)].conj()) * half;
            rho[(i, j)] = z;
            rho[(j, i)] = z.conj();
        }
    }
}

fn ground<T: Real>(dim: usize) -> CMat<T> {
    let mut rho = CMat::zeros(dim, dim);
    rho.as_mut_slice()[0] = cx(T::one(), T::zero());
    rho
}

fn integrate<T: Real>(gen: &Generator<T>, drive: &DriveEnvelope<T>, t_final: f64, dt: f64, opts: &MasterOptions) -> Result<MasterRun<T>> {
    let mut rhs = Rhs::new(gen);
    let steps = (t_final / dt).round() as usize;
    let stride = ((opts.sample_interval / dt).round() as usize).max(1);
    let mut rho = ground::<T>(gen.fock.dim());
    let mut traj = Trajectory::new(&gen.columns());
    let h = T::lit(dt);
    let half = T::lit(0.5);
    let half_h = cx(h * half, T::zero());
    let sixth_h = cx(h / T::lit(6.0), T::zero());
    let third_h = cx(h / T::lit(3.0), T::zero());
    let d = gen.fock.dim();
    let (mut acc, mut tmp, mut k) = (CMat::zeros(d, d), CMat::zeros(d, d), CMat::zeros(d, d));
    let record = |traj: &mut Trajectory, t: f64, rho: &CMat<T>| -> Result<()> {
        let row = gen.observe(t, rho);
        let n = row.len();
        let (trace_err, tail) = (row[n - 2], row[n - 1]);
        if trace_err.abs() > opts.trace_tol {
            return Err(Error::TraceDrift { t, drift: trace_err });
        }
        if tail > opts.tail_tol {
            return Err(Error::TruncationBreach { t, population: tail });
        }
        let mut shifted = rho.clone();
        for i in 0..rho.rows() {
            shifted[(i, i)] = shifted[(i, i)] + cx(T::lit(opts.positivity_tol), T::zero());
        }
        if !shifted.is_positive_definite() {
            return Err(Error::PositivityLost { t });
        }
        traj.push(row);
        Ok(())
    };
    record(&mut traj, 0.0, &rho)?;
    for s in 0..steps {
        let t = T::lit(s as f64 * dt);
        let b0 = drive.beta(t);
        let bm = drive.beta(t + h * half);
        let b1 = drive.beta(t + h);
        acc.copy_from(&rho);
        rhs.eval(&rho, b0, &mut k);
        acc.axpy(sixth_h, &k);
        tmp.copy_from(&rho);
        tmp.axpy(half_h, &k);
        rhs.eval(&tmp, bm, &mut k);
        acc.axpy(third_h, &k);
        tmp.copy_from(&rho);
        tmp.axpy(half_h, &k);
        rhs.eval(&tmp, bm, &mut k);
        acc.axpy(third_h, &k);
        tmp.copy_from(&rho);
        tmp.axpy(cx(h, T::zero()), &k);
        rhs.eval(&tmp, b1, &mut k);
        acc.axpy(sixth_h, &k);
        std::mem::swap(&mut rho, &mut acc);
        hermitize(&mut rho);
        if (s + 1) % stride == 0 || s + 1 == steps {
            record(&mut traj, (s + 1) as f64 * dt, &rho)?;
        }
    }
    traj.add_meta("dt", dt);
    Ok(MasterRun { trajectory: traj, rho, dt })
}

/// Integrates from the ground state to `t_final`, halving the step until the
/// sampled observables change by less than `opts.convergence_tol`.
pub fn evolve_master<T: Real>(gen: &Generator<T>, drive: &DriveEnvelope<T>, t_final: f64, opts: &MasterOptions) -> Result<MasterRun<T>> {
    let rate = gen.characteristic_rate().as_f64().max(1.0 / drive.sigma.as_f64()).max(drive.detuning.abs().as_f64());
    let mut dt = opts.dt.unwrap_or(0.01 / rate);
    // samples must fall on steps of every refinement
    let per_sample = (opts.sample_interval / dt).ceil().max(1.0);
    dt = opts.sample_interval / per_sample;
    let mut run = integrate(gen, drive, t_final, dt, opts)?;
    if opts.max_halvings == 0 {
        return Ok(run);
    }
    for _ in 0..opts.max_halvings {
        dt /= 2.0;
        let fine = integrate(gen, drive, t_final, dt, opts)?;
        let diff = observable_distance(&run.trajectory, &fine.trajectory);
        run = fine;
        if diff < opts.convergence_tol {
            run.trajectory.add_meta("refinement_change", diff);
            return Ok(run);
        }
    }
    Err(Error::Numerical(format!("no step-size convergence down to dt = {dt}")))
}

fn observable_distance(a: &Trajectory, b: &Trajectory) -> f64 {
    let mut worst = 0.0f64;
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        for (x, y) in ra.iter().zip(rb).skip(2) {
            worst = worst.max((x - y).abs());
        }
    }
    worst
}

/// Late-time behaviour of a coherent run: means over the last `window` and
/// the slope of each EE projection there.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadySummary {
    pub p_ee: Vec<f64>,
    pub p_ee_slope: Vec<f64>,
    pub n_cavity: f64,
    pub p_atom: f64,
}

impl SteadySummary {
    pub fn of(traj: &Trajectory, window: f64) -> Option<Self> {
        let t = traj.column("t")?;
        let t_end = *t.last()?;
        let idx: Vec<usize> = (0..t.len()).filter(|&k| t[k] >= t_end - window).collect();
        if idx.len() < 2 {
            return None;
        }
        let mean = |c: &[f64]| idx.iter().map(|&k| c[k]).sum::<f64>() / idx.len() as f64;
        let slope = |c: &[f64]| {
            let (k0, k1) = (idx[0], *idx.last().unwrap());
            (c[k1] - c[k0]) / (t[k1] - t[k0])
        };
        let mut p_ee = Vec::new();
        let mut p_ee_slope = Vec::new();
        for name in ["p_ee", "p_ee2"] {
            if let Some(c) = traj.column(name) {
                p_ee.push(c[*idx.last().unwrap()]);
                p_ee_slope.push(slope(&c));
            }
        }
        Some(Self { p_ee, p_ee_slope, n_cavity: mean(&traj.column("n_cavity")?), p_atom: mean(&traj.column("p_atom")?) })
    }

    pub fn atom_cavity_ratio(&self) -> f64 {
        self.p_atom / self.n_cavity
    }
}

fn check_cutoff(mean_photons: f64, n_max: usize) -> Result<()> {
    let need = FockSpaceSpec::cutoff_for(mean_photons);
    if n_max < need {
        return Err(Error::InvalidParameter { name: "n_max", reason: format!("{n_max} is below the cutoff {need} required for <N> = {mean_photons}") });
    }
    Ok(())
}

/// Three-mode system driven by a Gaussian pulse of `mean_photons` photons
/// with width `1/Gamma`, carrier at the EE frequency and the given cutoff.
pub fn run_fig4c<T: Real>(params: &ThreeModeParams<T>, mean_photons: f64, n_max: usize, t_final: f64, opts: &MasterOptions) -> Result<MasterRun<T>> {
    check_cutoff(mean_photons, n_max)?;
    let omega_ref = params.omega_ee();
    let gen = build_three_mode_generator(params, omega_ref, FockSpaceSpec::new(n_max, 2)?)?;
    let sigma = 1.0 / params.gamma_unit().as_f64();
    let drive = DriveEnvelope::gaussian(T::lit(mean_photons), T::lit(5.0 * sigma), T::lit(sigma), T::zero())?;
    evolve_master(&gen, &drive, t_final, opts)
}

/// Cavity-atom counterpart: drive at the EE frequency, width `1/Gamma`.
pub fn run_coherent<T: Real>(params: &SystemParams<T>, mean_photons: f64, n_max: usize, t_final: f64, opts: &MasterOptions) -> Result<MasterRun<T>> {
    check_cutoff(mean_photons, n_max)?;
    let gen = build_generator(params, params.omega_ee(), FockSpaceSpec::new(n_max, 1)?)?;
    let sigma = 1.0 / params.gamma_unit().as_f64();
    let drive = DriveEnvelope::gaussian(T::lit(mean_photons), T::lit(5.0 * sigma), T::lit(sigma), T::zero())?;
    evolve_master(&gen, &drive, t_final, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_gen(n_max: usize) -> Generator<f64> {
        let p = SystemParams::reference();
        build_generator(&p, p.omega_ee(), FockSpaceSpec::new(n_max, 1).unwrap()).unwrap()
    }

    #[test]
    fn port_annihilates_the_ee_state() {
        let g = reference_gen(4);
        let out = g.port.mul_vec(&g.ee_states[0]);
        assert!(out.iter().all(|z| z.norm() < 1e-15));
        // the EE is an eigenstate at the frame frequency
        let h = g.hamiltonian.mul_vec(&g.ee_states[0]);
        assert!(h.iter().all(|z| z.norm() < 1e-14), "{h:?}");
    }

    #[test]
    fn port_without_atom_coupling_is_pure_cavity() {
        let p = SystemParams::<f64>::new(1.0, 0.96, 0.02, 0.0, 0.05);
        let g = build_generator(&p, 1.0, FockSpaceSpec::new(3, 1).unwrap()).unwrap();
        let d = g.port.to_dense();
        for i in 0..d.rows() {
            for j in 0..d.cols() {
                // the atom flag never flips
                if d[(i, j)] != czero() {
                    assert_eq!(i % 2, j % 2);
                }
            }
        }
    }

    #[test]
    fn three_mode_port_has_no_atom_component() {
        let p = ThreeModeParams::<f64>::reference();
        let g = build_three_mode_generator(&p, p.omega_ee(), FockSpaceSpec::new(2, 2).unwrap()).unwrap();
        let d = g.port.to_dense();
        for i in 0..d.rows() {
            for j in 0..d.cols() {
                if d[(i, j)] != czero() {
                    assert_eq!(i % 2, j % 2);
                }
            }
        }
        let out = g.port.mul_vec(&g.ee_states[0]);
        assert!(out.iter().fold(0.0f64, |m, z| m.max(z.norm())) < 1e-10);
    }

    #[test]
    fn drive_carries_the_requested_photon_number() {
        let d = DriveEnvelope::<f64>::gaussian(2.0, 50.0, 8.0, 0.01).unwrap();
        let n = d.photon_number(100.0, 20000);
        assert!((n - 2.0).abs() < 1e-6 * 2.0);
    }

    #[test]
    fn undriven_ground_state_stays_put() {
        let g = reference_gen(3);
        let run = evolve_master(&g, &DriveEnvelope::none(), 50.0, &MasterOptions { sample_interval: 5.0, ..Default::default() }).unwrap();
        for row in &run.trajectory.rows {
            assert!(row[2..].iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn weak_drive_leaves_almost_nothing_trapped() {
        let p = SystemParams::<f64>::reference();
        let gamma = p.gamma_unit();
        let run = run_coherent(&p, 1e-4, 3, 40.0 / gamma, &MasterOptions { sample_interval: 1.0 / gamma, ..Default::default() }).unwrap();
        assert!(run.trajectory.last("p_ee").unwrap() < 1e-6);
    }

    #[test]
    fn cutoff_rule() {
        assert_eq!(FockSpaceSpec::cutoff_for(2.0), 10);
        assert_eq!(FockSpaceSpec::cutoff_for(1.0), 6);
        assert_eq!(FockSpaceSpec::new(4, 2).unwrap().dim(), 50);
    }

    #[test]
    fn coherent_run_traps_with_balanced_populations() {
        let p = SystemParams::<f64>::reference();
        let gamma = p.gamma_unit();
        let opts = MasterOptions { sample_interval: 0.5 / gamma, ..Default::default() };
        assert!(matches!(run_coherent(&p, 2.0, 8, 60.0 / gamma, &opts), Err(Error::InvalidParameter { .. })));
        let run = run_coherent(&p, 2.0, 10, 60.0 / gamma, &opts).unwrap();
        let s = SteadySummary::of(&run.trajectory, 5.0 / gamma).unwrap();
        assert!(s.p_ee[0] > 0.01, "{s:?}");
        assert!((s.atom_cavity_ratio() / 0.25 - 1.0).abs() < 0.05, "{s:?}");
        assert!(s.p_ee_slope[0].abs() < 1e-6 * gamma, "{s:?}");
    }

    #[test]
    fn cutoff_increase_barely_moves_observables() {
        let p = SystemParams::<f64>::reference();
        let gamma = p.gamma_unit();
        let opts = MasterOptions { sample_interval: 2.0 / gamma, ..Default::default() };
        let a = run_coherent(&p, 2.0, 10, 30.0 / gamma, &opts).unwrap().trajectory;
        let b = run_coherent(&p, 2.0, 12, 30.0 / gamma, &opts).unwrap().trajectory;
        for name in ["n_cavity", "p_atom", "p_ee"] {
            let (x, y) = (a.column(name).unwrap(), b.column(name).unwrap());
            let scale = y.iter().cloned().fold(0.0, f64::max);
            for (u, v) in x.iter().zip(&y) {
                assert!((u - v).abs() < 1e-4 * scale, "{name}: {u} vs {v}");
            }
        }
    }

    #[test]
    fn stronger_pulse_traps_at_least_as_much() {
        let p = SystemParams::<f64>::reference();
        let gamma = p.gamma_unit();
        let opts = MasterOptions { sample_interval: 1.0 / gamma, ..Default::default() };
        let two = run_coherent(&p, 2.0, 10, 40.0 / gamma, &opts).unwrap();
        let four = run_coherent(&p, 4.0, 14, 40.0 / gamma, &opts).unwrap();
        assert!(four.trajectory.last("p_ee").unwrap() >= two.trajectory.last("p_ee").unwrap());
    }

    #[test]
    fn decoupled_atom_in_three_mode_system_stays_dark() {
        let mut p = ThreeModeParams::<f64>::reference();
        p.g_coupling = 0.0;
        let gamma = p.gamma_unit();
        let gen = build_three_mode_generator(&p, p.omega_ee(), FockSpaceSpec::new(4, 2).unwrap()).unwrap();
        let sigma = 1.0 / gamma;
        let drive = DriveEnvelope::gaussian(0.05, 5.0 * sigma, sigma, 0.0).unwrap();
        let run = evolve_master(&gen, &drive, 20.0 / gamma, &MasterOptions { sample_interval: 1.0 / gamma, ..Default::default() }).unwrap();
        assert!(run.trajectory.column("p_atom").unwrap().iter().all(|v| *v == 0.0));
        // the bare atom is the real-eigenvalue state
        assert!(run.trajectory.column("p_ee").unwrap().iter().all(|v| *v == 0.0));
        assert!(run.trajectory.max("n_cavity").unwrap() > 1e-3);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(6))]

        #[test]
        fn random_drives_keep_trace_and_positivity(n in 0.05f64..1.0, sig in 0.5f64..2.0, det in -2.0f64..2.0) {
            let p = SystemParams::<f64>::reference();
            let gamma = p.gamma_unit();
            // a few levels above the minimum so the tail check never fires
            let gen = build_generator(&p, p.omega_ee(), FockSpaceSpec::new(FockSpaceSpec::cutoff_for(n) + 3, 1).unwrap()).unwrap();
            let drive = DriveEnvelope::gaussian(n, 5.0 * sig / gamma, sig / gamma, det * gamma).unwrap();
            let opts = MasterOptions { sample_interval: 1.0 / gamma, max_halvings: 0, ..Default::default() };
            let run = evolve_master(&gen, &drive, 12.0 / gamma, &opts).unwrap();
            for v in run.trajectory.column("trace_err").unwrap() {
                proptest::prop_assert!(v.abs() < 1e-8);
            }
            let tr = (0..run.rho.rows()).fold(0.0, |a, i| a + run.rho[(i, i)].re);
            proptest::prop_assert!((tr - 1.0).abs() < 1e-8);
            for i in 0..run.rho.rows() {
                proptest::prop_assert!(run.rho[(i, i)].re > -1e-7);
            }
        }
    }
}
