//! System parameters, effective non-Hermitian Hamiltonians, embedded
//! eigenstate conditions and spectral summaries.
//!
//! Units: frequencies in units of the reference frequency (the atom by
//! default), group velocity 1, waveguide couplings `V` in units of
//! `sqrt(omega_ref * v_g)`. A mode coupled with strength `V` loses amplitude
//! at `gamma = 2 pi V^2`; the reporting unit is `Gamma = pi (V_A^2 + V_C^2)`.

use crate::error::{Error, Result};
use crate::linalg::{eig, CMat};
use crate::scalar::{cx, czero, Cx, Real};

/// Cavity-atom system (also used for two coupled cavities, with the atom
/// slot read as cavity 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams<T> {
    pub omega_c: T,
    pub omega_a: T,
    pub j_coupling: T,
    pub v_c: T,
    pub v_a: T,
    pub gamma_prime_c: T,
    pub gamma_prime_a: T,
}

impl<T: Real> SystemParams<T> {
    pub fn new(omega_a: T, omega_c: T, j_coupling: T, v_a: T, v_c: T) -> Self {
        Self {
            omega_c,
            omega_a,
            j_coupling,
            v_c,
            v_a,
            gamma_prime_c: T::zero(),
            gamma_prime_a: T::zero(),
        }
    }

    /// Parameters with `J` chosen so the embedded-eigenstate condition holds.
    pub fn at_ee_condition(omega_a: T, omega_c: T, v_a: T, v_c: T) -> Result<Self> {
        let j = solve_j_for_ee(omega_a, omega_c, v_a, v_c)?;
        Ok(Self::new(omega_a, omega_c, j, v_a, v_c))
    }

    /// The cavity-atom system of the headline experiments: `omega_A = 1`,
    /// `omega_c = 0.96`, `V_A = 0.1`, `V_C = 0.05`, `J` from the EE condition.
    pub fn reference() -> Self {
        Self::at_ee_condition(T::one(), T::lit(0.96), T::lit(0.1), T::lit(0.05)).expect("reference parameters are valid")
    }

    pub fn with_losses(mut self, gamma_prime_a: T, gamma_prime_c: T) -> Self {
        self.gamma_prime_a = gamma_prime_a;
        self.gamma_prime_c = gamma_prime_c;
        self
    }

    /// Checks sign constraints; `dynamics` additionally rejects two zero couplings.
    pub fn validate(&self, dynamics: bool) -> Result<()> {
        let fields = [
            ("omega_c", self.omega_c),
            ("omega_a", self.omega_a),
            ("j_coupling", self.j_coupling),
            ("v_c", self.v_c),
            ("v_a", self.v_a),
            ("gamma_prime_c", self.gamma_prime_c),
            ("gamma_prime_a", self.gamma_prime_a),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::InvalidParameter { name, reason: "not finite".into() });
            }
        }
        for (name, v) in [("v_c", self.v_c), ("v_a", self.v_a), ("gamma_prime_c", self.gamma_prime_c), ("gamma_prime_a", self.gamma_prime_a)] {
            if v < T::zero() {
                return Err(Error::InvalidParameter { name, reason: format!("must be non-negative, got {v}") });
            }
        }
        if dynamics && self.v_a == T::zero() && self.v_c == T::zero() {
            return Err(Error::ZeroCoupling);
        }
        Ok(())
    }

    /// Amplitude decay rate of the atom into the waveguide, `2 pi V_A^2`.
    pub fn gamma_a(&self) -> T {
        T::lit(2.0) * T::PI() * self.v_a * self.v_a
    }

    pub fn gamma_c(&self) -> T {
        T::lit(2.0) * T::PI() * self.v_c * self.v_c
    }

    /// Reporting unit `pi (V_A^2 + V_C^2)`.
    pub fn gamma_unit(&self) -> T {
        T::PI() * (self.v_a * self.v_a + self.v_c * self.v_c)
    }

    /// Real-space coupling `2 sqrt(pi) V_A`.
    pub fn vt_a(&self) -> T {
        T::lit(2.0) * T::PI().sqrt() * self.v_a
    }

    pub fn vt_c(&self) -> T {
        T::lit(2.0) * T::PI().sqrt() * self.v_c
    }

    /// Same system seen from a frame rotating at `omega_ref`.
    pub fn in_frame(&self, omega_ref: T) -> Self {
        Self { omega_a: self.omega_a - omega_ref, omega_c: self.omega_c - omega_ref, ..*self }
    }

    /// The embedded-eigenstate frequency from the eigenvector closed form,
    /// `omega_c - J V_C / V_A`. Meaningful at the EE condition only.
    pub fn omega_ee(&self) -> T {
        if self.v_a == T::zero() {
            return self.omega_c;
        }
        self.omega_c - self.j_coupling * self.v_c / self.v_a
    }

    /// The bright-mode frequency `omega_A + omega_c - omega_EE`.
    pub fn omega_bright(&self) -> T {
        self.omega_a + self.omega_c - self.omega_ee()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitConvention<T> {
    pub omega_ref: T,
    gamma_unit: T,
}

impl<T: Real> UnitConvention<T> {
    pub fn from_params(params: &SystemParams<T>, omega_ref: T) -> Self {
        Self { omega_ref, gamma_unit: params.gamma_unit() }
    }

    pub fn gamma_unit(&self) -> T {
        self.gamma_unit
    }

    /// Converts a duration or length given in units of `1/Gamma`.
    pub fn from_gamma(&self, x: T) -> T {
        x / self.gamma_unit
    }

    pub fn to_gamma(&self, x: T) -> T {
        x * self.gamma_unit
    }
}

/// `(omega_A - omega_c) V_A V_C - J (V_A^2 - V_C^2)`; zero iff an embedded
/// eigenstate exists.
pub fn ee_condition_residual<T: Real>(p: &SystemParams<T>) -> T {
    (p.omega_a - p.omega_c) * p.v_a * p.v_c - p.j_coupling * (p.v_a * p.v_a - p.v_c * p.v_c)
}

pub fn solve_j_for_ee<T: Real>(omega_a: T, omega_c: T, v_a: T, v_c: T) -> Result<T> {
    let detuning = omega_a - omega_c;
    if detuning == T::zero() {
        return Ok(T::zero());
    }
    let vmax = v_a.max(v_c);
    if vmax == T::zero() || (v_a - v_c).abs() / vmax < T::lit(1e-12) {
        return Err(Error::DegenerateCouplings);
    }
    Ok(detuning * v_a * v_c / (v_a * v_a - v_c * v_c))
}

/// Single-excitation effective Hamiltonian in the basis `{|e,0>, |g,1>}`.
pub fn single_excitation_heff<T: Real>(p: &SystemParams<T>) -> CMat<T> {
    let (ga, gc) = (p.gamma_a(), p.gamma_c());
    let off = cx(p.j_coupling, -(ga * gc).sqrt());
    CMat::from_rows(&[
        vec![cx(p.omega_a, -(ga + p.gamma_prime_a)), off],
        vec![off, cx(p.omega_c, -(gc + p.gamma_prime_c))],
    ])
}

/// Two-excitation effective Hamiltonian in the basis `{|2,g>, |1,e>}`.
pub fn two_excitation_heff<T: Real>(p: &SystemParams<T>) -> CMat<T> {
    let two = T::lit(2.0);
    let s2 = two.sqrt();
    let half = T::lit(0.5);
    let four_pi = T::lit(4.0) * T::PI();
    let gt_c = four_pi * p.v_c * p.v_c;
    let gt_a = four_pi * p.v_a * p.v_a;
    let gt_ca = four_pi * p.v_c * p.v_a;
    CMat::from_rows(&[
        vec![
            cx(two * p.omega_c, -half * two * gt_c - two * p.gamma_prime_c),
            cx(s2 * p.j_coupling, -half * s2 * gt_ca),
        ],
        vec![
            cx(s2 * p.j_coupling, -half * s2 * gt_ca),
            cx(p.omega_c + p.omega_a, -half * (gt_c + gt_a) - p.gamma_prime_c - p.gamma_prime_a),
        ],
    ])
}

/// Normalized EE amplitudes `(A, C) = (V_C, -V_A) / sqrt(V_A^2 + V_C^2)`.
pub fn ee_state<T: Real>(p: &SystemParams<T>) -> Result<(T, T)> {
    let n = p.v_a.hypot(p.v_c);
    if n == T::zero() {
        return Err(Error::ZeroCoupling);
    }
    Ok((p.v_c / n, -p.v_a / n))
}

/// Eigenvalues sorted by ascending `|Im|`, ties by ascending `Re`, with unit
/// eigenvectors.
#[derive(Debug, Clone)]
pub struct ComplexSpectrum<T> {
    pub eigenvalues: Vec<Cx<T>>,
    pub eigenvectors: Vec<Vec<Cx<T>>>,
}

impl<T: Real> ComplexSpectrum<T> {
    pub fn of(h: &CMat<T>) -> Result<Self> {
        let e = eig(h)?;
        let mut pairs: Vec<(Cx<T>, Vec<Cx<T>>)> = e.values.into_iter().zip(e.vectors).collect();
        pairs.sort_by(|a, b| {
            a.0.im
                .abs()
                .partial_cmp(&b.0.im.abs())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.0.re.partial_cmp(&b.0.re).unwrap_or(std::cmp::Ordering::Equal))
        });
        let (eigenvalues, eigenvectors) = pairs.into_iter().unzip();
        Ok(Self { eigenvalues, eigenvectors })
    }

    /// Relative mismatch between the eigenvalue sum and the trace of `h`.
    pub fn trace_error(&self, h: &CMat<T>) -> T {
        let sum = self.eigenvalues.iter().fold(czero::<T>(), |acc, &z| acc + z);
        let tr = h.trace();
        (sum - tr).norm() / tr.norm().max(T::min_positive_value())
    }

    pub fn is_passive(&self) -> bool {
        self.eigenvalues.iter().all(|z| z.im <= T::lit(1e-12))
    }
}

/// Two coupled cavities with an atom inside cavity 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeModeParams<T> {
    pub omega_1: T,
    pub omega_2: T,
    pub omega_a: T,
    pub j_coupling: T,
    pub g_coupling: T,
    pub v_1: T,
    pub v_2: T,
    pub gamma_prime_1: T,
    pub gamma_prime_2: T,
    pub gamma_prime_a: T,
}

impl<T: Real> ThreeModeParams<T> {
    pub fn new(omega_1: T, omega_2: T, omega_a: T, j_coupling: T, g_coupling: T, v_1: T, v_2: T) -> Self {
        Self {
            omega_1,
            omega_2,
            omega_a,
            j_coupling,
            g_coupling,
            v_1,
            v_2,
            gamma_prime_1: T::zero(),
            gamma_prime_2: T::zero(),
            gamma_prime_a: T::zero(),
        }
    }

    /// `omega_1 = omega_A = 1`, `omega_2 = 0.96`, `V_1 = 0.1`, `V_2 = 0.05`,
    /// `J = 0.003`, with `g` solved from the three-mode EE condition.
    pub fn reference() -> Self {
        let mut p = Self::new(T::one(), T::lit(0.96), T::one(), T::lit(0.003), T::zero(), T::lit(0.1), T::lit(0.05));
        p.g_coupling = solve_g_for_ee(&p).expect("reference three-mode parameters admit a real g");
        p
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("v_1", self.v_1),
            ("v_2", self.v_2),
            ("gamma_prime_1", self.gamma_prime_1),
            ("gamma_prime_2", self.gamma_prime_2),
            ("gamma_prime_a", self.gamma_prime_a),
        ] {
            if !v.is_finite() || v < T::zero() {
                return Err(Error::InvalidParameter { name, reason: format!("must be finite and non-negative, got {v}") });
            }
        }
        Ok(())
    }

    pub fn gamma_unit(&self) -> T {
        T::PI() * (self.v_1 * self.v_1 + self.v_2 * self.v_2)
    }

    pub fn in_frame(&self, omega_ref: T) -> Self {
        Self {
            omega_1: self.omega_1 - omega_ref,
            omega_2: self.omega_2 - omega_ref,
            omega_a: self.omega_a - omega_ref,
            ..*self
        }
    }

    /// Frequency of the dark mode when the condition holds: `omega_2 - J V_2 / V_1`.
    pub fn omega_ee(&self) -> T {
        if self.v_1 == T::zero() {
            return self.omega_2;
        }
        self.omega_2 - self.j_coupling * self.v_2 / self.v_1
    }
}

/// LHS minus RHS of the three-mode EE condition
/// `(w1 - w2) V1 V2 = J (V1^2 - V2^2) + V1^2 V2 g^2 / (V2 J + V1 (wA - w2))`.
pub fn three_mode_ee_residual<T: Real>(p: &ThreeModeParams<T>) -> Result<T> {
    let base = (p.omega_1 - p.omega_2) * p.v_1 * p.v_2 - p.j_coupling * (p.v_1 * p.v_1 - p.v_2 * p.v_2);
    if p.g_coupling == T::zero() {
        return Ok(base);
    }
    let den = p.v_2 * p.j_coupling + p.v_1 * (p.omega_a - p.omega_2);
    if den.abs() < T::lit(1e-14) {
        return Err(Error::SingularDenominator { value: den.as_f64() });
    }
    Ok(base - p.v_1 * p.v_1 * p.v_2 * p.g_coupling * p.g_coupling / den)
}

/// The non-negative `g` that satisfies the three-mode condition.
pub fn solve_g_for_ee<T: Real>(p: &ThreeModeParams<T>) -> Result<T> {
    let den = p.v_2 * p.j_coupling + p.v_1 * (p.omega_a - p.omega_2);
    if den.abs() < T::lit(1e-14) {
        return Err(Error::SingularDenominator { value: den.as_f64() });
    }
    let pref = p.v_1 * p.v_1 * p.v_2;
    if pref == T::zero() {
        return Err(Error::ZeroCoupling);
    }
    let base = (p.omega_1 - p.omega_2) * p.v_1 * p.v_2 - p.j_coupling * (p.v_1 * p.v_1 - p.v_2 * p.v_2);
    let g2 = base * den / pref;
    if g2 < T::zero() {
        return Err(Error::NoRealCoupling { g_squared: g2.as_f64() });
    }
    Ok(g2.sqrt())
}

/// Single-excitation effective Hamiltonian in the basis
/// `{|e>_atom, |1>_cav1, |1>_cav2}`; only the cavities see the waveguide.
pub fn three_mode_heff<T: Real>(p: &ThreeModeParams<T>) -> CMat<T> {
    let tau = T::lit(2.0) * T::PI();
    let g11 = tau * p.v_1 * p.v_1;
    let g22 = tau * p.v_2 * p.v_2;
    let g12 = tau * p.v_1 * p.v_2;
    let z = czero();
    CMat::from_rows(&[
        vec![cx(p.omega_a, -p.gamma_prime_a), cx(p.g_coupling, T::zero()), z],
        vec![cx(p.g_coupling, T::zero()), cx(p.omega_1, -g11 - p.gamma_prime_1), cx(p.j_coupling, -g12)],
        vec![z, cx(p.j_coupling, -g12), cx(p.omega_2, -g22 - p.gamma_prime_2)],
    ])
}

/// A labelled frequency to overlay on carrier-frequency axes.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyLine<T> {
    pub label: &'static str,
    pub omega: T,
}

/// Everything the spectrum report prints for a cavity-atom system.
#[derive(Debug, Clone)]
pub struct SpectralSummary<T> {
    pub ee_residual: T,
    pub omega_ee: T,
    pub omega_bright: T,
    /// Amplitude decay of the bright mode, `gamma_A + gamma_C`.
    pub bright_decay: T,
    pub gamma_unit: T,
    pub single: ComplexSpectrum<T>,
    /// Two-excitation eigenvalues: `[bright, dark]` (dark = smaller decay).
    pub two_bright: Cx<T>,
    pub two_dark: Cx<T>,
    pub ee_amplitudes: (T, T),
}

impl<T: Real> SpectralSummary<T> {
    pub fn of(p: &SystemParams<T>) -> Result<Self> {
        let h1 = single_excitation_heff(p);
        let single = ComplexSpectrum::of(&h1)?;
        let two = ComplexSpectrum::of(&two_excitation_heff(p))?;
        let omega_ee = single.eigenvalues[0].re;
        let bright = single.eigenvalues[1];
        Ok(Self {
            ee_residual: ee_condition_residual(p),
            omega_ee,
            omega_bright: bright.re,
            bright_decay: -bright.im,
            gamma_unit: p.gamma_unit(),
            single,
            two_bright: two.eigenvalues[1],
            two_dark: two.eigenvalues[0],
            ee_amplitudes: ee_state(p)?,
        })
    }

    /// Candidate single-photon carrier frequencies tied to the one- and
    /// two-excitation states. The pairing rule for two-excitation states is
    /// ambiguous, so every reading is listed.
    pub fn carrier_lines(&self) -> Vec<FrequencyLine<T>> {
        let half = T::lit(0.5);
        vec![
            FrequencyLine { label: "omega_B1", omega: self.omega_bright },
            FrequencyLine { label: "omega_EE1", omega: self.omega_ee },
            FrequencyLine { label: "omega_B2/2", omega: self.two_bright.re * half },
            FrequencyLine { label: "omega_D2/2", omega: self.two_dark.re * half },
            FrequencyLine { label: "omega_B2-omega_EE1", omega: self.two_bright.re - self.omega_ee },
            FrequencyLine { label: "omega_D2-omega_EE1", omega: self.two_dark.re - self.omega_ee },
            FrequencyLine { label: "omega_B2-omega_B1", omega: self.two_bright.re - self.omega_bright },
            FrequencyLine { label: "omega_D2-omega_B1", omega: self.two_dark.re - self.omega_bright },
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn reference_j_and_frequencies() {
        let p = SystemParams::<f64>::reference();
        assert_abs_diff_eq!(p.j_coupling, 0.04 * 0.5 / 0.75, epsilon = 1e-15);
        assert!(ee_condition_residual(&p).abs() < 1e-15);
        let s = SpectralSummary::of(&p).unwrap();
        assert!(s.single.eigenvalues[0].im.abs() < 1e-12);
        assert_abs_diff_eq!(s.omega_ee, 0.946_666_666_666_666_7, epsilon = 1e-12);
        assert_abs_diff_eq!(s.omega_bright, 1.013_333_333_333_333_3, epsilon = 1e-12);
        assert_abs_diff_eq!(s.bright_decay, 2.0 * std::f64::consts::PI * 0.0125, epsilon = 1e-12);
        assert_abs_diff_eq!(p.omega_a - p.j_coupling * p.v_a / p.v_c, s.omega_ee, epsilon = 1e-12);
    }

    #[test]
    fn residual_without_coupling_is_plain_arithmetic() {
        let p = SystemParams::new(1.0, 0.96, 0.0, 0.1, 0.05);
        assert_abs_diff_eq!(ee_condition_residual(&p), 2e-4, epsilon = 1e-15);
        let q = SystemParams::new(1.0, 1.0, 0.37, 0.1, 0.1);
        assert_eq!(ee_condition_residual(&q), 0.0);
    }

    #[test]
    fn j_diverges_near_equal_couplings() {
        let j = solve_j_for_ee(1.0, 0.96, 0.1, 0.099).unwrap();
        assert_abs_diff_eq!(j, 0.04 * 0.0099 / (0.01 * 0.0199), epsilon = 1e-12);
        assert_eq!(solve_j_for_ee(1.0, 0.96, 0.1, 0.1), Err(Error::DegenerateCouplings));
        assert_eq!(solve_j_for_ee(1.0, 1.0, 0.1, 0.1), Ok(0.0));
    }

    #[test]
    fn two_excitation_dark_branch_is_much_longer_lived() {
        let s = SpectralSummary::of(&SystemParams::<f64>::reference()).unwrap();
        let ratio = s.two_dark.im / s.two_bright.im;
        assert!(ratio < 0.3, "{ratio}");
        // frozen from an independent numpy eigendecomposition
        assert_abs_diff_eq!(s.two_dark.re, 1.897_312_505_083_781_4, epsilon = 1e-12);
        assert_abs_diff_eq!(s.two_dark.im, -0.004_687_851_276_966_581, epsilon = 1e-12);
        assert_abs_diff_eq!(s.two_bright.re, 1.982_687_494_916_219, epsilon = 1e-12);
        assert_abs_diff_eq!(s.two_bright.im, -0.105_267_891_598_676_04, epsilon = 1e-12);
    }

    #[test]
    fn ee_state_balances() {
        let p = SystemParams::<f64>::reference();
        let (a, c) = ee_state(&p).unwrap();
        assert_abs_diff_eq!(a * a, 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(c * c, 0.8, epsilon = 1e-15);
        assert_eq!(p.v_c * c + p.v_a * a, 0.0);
        let q = SystemParams::new(1.0, 0.96, 0.0, 0.1, 0.0);
        assert_eq!(ee_state(&q).unwrap(), (0.0, -1.0));
        let z = SystemParams::new(1.0, 0.96, 0.0, 0.0, 0.0);
        assert_eq!(ee_state(&z), Err(Error::ZeroCoupling));
    }

    #[test]
    fn closed_system_spectrum_is_real() {
        let p = SystemParams::<f64>::new(1.0, 0.9, 0.05, 0.0, 0.0);
        let s = ComplexSpectrum::of(&single_excitation_heff(&p)).unwrap();
        assert!(s.eigenvalues.iter().all(|z| z.im.abs() < 1e-15));
    }

    #[test]
    fn independent_photon_limit_of_two_excitations() {
        let p = SystemParams::new(1.0, 0.96, 0.0, 0.0, 0.05);
        let h = two_excitation_heff(&p);
        let gc = 2.0 * std::f64::consts::PI * 0.0025;
        assert_abs_diff_eq!(h[(0, 0)].im, -2.0 * gc, epsilon = 1e-15);
        assert_abs_diff_eq!(h[(0, 0)].re, 1.92, epsilon = 1e-15);
    }

    #[test]
    fn three_mode_reference_has_a_dark_mode() {
        let p = ThreeModeParams::<f64>::reference();
        assert!(three_mode_ee_residual(&p).unwrap().abs() < 1e-15);
        let g2: f64 = (2e-4 - 0.003 * 0.0075) * (0.05 * 0.003 + 0.1 * 0.04) / (0.01 * 0.05);
        assert_abs_diff_eq!(p.g_coupling, g2.sqrt(), epsilon = 1e-14);
        let s = ComplexSpectrum::of(&three_mode_heff(&p)).unwrap();
        assert!(s.eigenvalues[0].im.abs() < 1e-10);
        assert_abs_diff_eq!(s.eigenvalues[0].re, p.omega_ee(), epsilon = 1e-10);
    }

    #[test]
    fn three_mode_without_real_g() {
        // J large enough that the bracket changes sign
        let p = ThreeModeParams::new(1.0, 0.96, 1.0, 0.05, 0.0, 0.1, 0.05);
        assert!(matches!(solve_g_for_ee(&p), Err(Error::NoRealCoupling { .. })));
        for k in 0..200 {
            let q = ThreeModeParams { g_coupling: k as f64 * 0.002, ..p };
            assert!(three_mode_ee_residual(&q).unwrap().abs() > 1e-6);
        }
    }

    #[test]
    fn singular_denominator_is_reported() {
        let p = ThreeModeParams::new(1.0, 0.96, 0.96, 0.0, 0.01, 0.1, 0.05);
        assert!(matches!(three_mode_ee_residual(&p), Err(Error::SingularDenominator { .. })));
    }

    #[test]
    fn decoupled_atom_three_mode_spectrum() {
        let mut p = ThreeModeParams::<f64>::new(1.0, 0.96, 1.0, 0.0, 0.0, 0.1, 0.05);
        p.j_coupling = solve_j_for_ee(1.0, 0.96, 0.1, 0.05).unwrap();
        let s = ComplexSpectrum::of(&three_mode_heff(&p)).unwrap();
        let real: Vec<_> = s.eigenvalues.iter().filter(|z| z.im.abs() < 1e-12).collect();
        assert_eq!(real.len(), 2);
        assert!(real.iter().any(|z| (z.re - 1.0).abs() < 1e-12));
        let closed = ThreeModeParams::<f64>::new(1.0, 0.96, 1.0, 0.003, 0.02, 0.0, 0.0);
        let s = ComplexSpectrum::of(&three_mode_heff(&closed)).unwrap();
        assert!(s.eigenvalues.iter().all(|z| z.im.abs() < 1e-14));
    }

    #[test]
    fn f32_matches_f64_at_reference() {
        let p = SystemParams::<f32>::reference();
        let s = SpectralSummary::of(&p).unwrap();
        assert!((s.omega_ee - 0.946_666_7).abs() < 1e-5);
    }

    fn random_params() -> impl Strategy<Value = SystemParams<f64>> {
        (0.5f64..1.5, 0.5f64..1.5, 0.01f64..0.3, 0.05f64..0.95).prop_filter_map("J defined", |(wa, wc, va, r)| {
            SystemParams::at_ee_condition(wa, wc, va, r * va).ok()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn dark_vector_is_an_eigenvector(p in random_params()) {
            let h = single_excitation_heff(&p);
            let v = [cx(p.v_c, 0.0), cx(-p.v_a, 0.0)];
            let hv = h.mul_vec(&v);
            let lambda = hv[1] / v[1];
            prop_assert!((hv[0] - lambda * v[0]).norm() < 1e-12);
            prop_assert!(lambda.im.abs() < 1e-12);
            let s = ComplexSpectrum::of(&h).unwrap();
            prop_assert!(s.eigenvalues[0].im.abs() < 1e-12);
            prop_assert!(s.trace_error(&h) < 1e-10);
            prop_assert!(s.is_passive());
        }

        #[test]
        fn off_condition_both_modes_decay(p in random_params(), dj in prop_oneof![-0.05f64..-0.001, 0.001f64..0.05]) {
            let q = SystemParams { j_coupling: p.j_coupling + dj, ..p };
            prop_assume!(ee_condition_residual(&q).abs() > 1e-6);
            let s = ComplexSpectrum::of(&single_excitation_heff(&q)).unwrap();
            let floor = -1e-12 * q.gamma_a().min(q.gamma_c());
            prop_assert!(s.eigenvalues.iter().all(|z| z.im < floor));
        }

        #[test]
        fn solved_j_zeroes_residual(wa in 0.5f64..1.5, wc in 0.5f64..1.5, va in 0.01f64..0.3, r in 0.05f64..0.95) {
            let p = SystemParams::at_ee_condition(wa, wc, va, r * va).unwrap();
            let scale = ((wa - wc).abs() * va * va * r).max(1e-300);
            prop_assert!(ee_condition_residual(&p).abs() / scale < 1e-12);
        }

        #[test]
        fn three_mode_reduces_to_two_mode(w1 in 0.5f64..1.5, w2 in 0.5f64..1.5, wa in 0.5f64..1.5, j in -0.1f64..0.1, v1 in 0.0f64..0.3, v2 in 0.0f64..0.3) {
            let three = ThreeModeParams::new(w1, w2, wa, j, 0.0, v1, v2);
            let two = SystemParams::new(w1, w2, j, v1, v2);
            let a = three_mode_ee_residual(&three).unwrap();
            let b = ee_condition_residual(&two);
            prop_assert!((a - b).abs() <= 1e-15 * a.abs().max(b.abs()));
        }

        #[test]
        fn trace_identities(p in random_params(), gpc in 0.0f64..0.01, gpa in 0.0f64..0.01) {
            let q = p.with_losses(gpa, gpc);
            let h2 = two_excitation_heff(&q);
            let s = ComplexSpectrum::of(&h2).unwrap();
            prop_assert!(s.trace_error(&h2) < 1e-10);
            let four_pi = 4.0 * std::f64::consts::PI;
            let want = -(2.0 * four_pi * q.v_c * q.v_c + four_pi * q.v_c * q.v_c + four_pi * q.v_a * q.v_a) / 2.0
                - 3.0 * gpc - gpa;
            let got: f64 = s.eigenvalues.iter().map(|z| z.im).sum();
            prop_assert!((got - want).abs() < 1e-12);
        }

        #[test]
        fn three_mode_condition_gives_real_eigenvalue(j in 0.0f64..0.01, v1 in 0.05f64..0.2, r in 0.2f64..0.8) {
            let mut p = ThreeModeParams::new(1.0, 0.96, 1.0, j, 0.0, v1, r * v1);
            if let Ok(g) = solve_g_for_ee(&p) {
                p.g_coupling = g;
                let s = ComplexSpectrum::of(&three_mode_heff(&p)).unwrap();
                prop_assert!(s.eigenvalues[0].im.abs() < 1e-10);
            }
        }
    }
}
