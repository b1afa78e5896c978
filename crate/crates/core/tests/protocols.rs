use eesim_core::model::{solve_j_for_ee, SystemParams};
use eesim_core::protocols::{
    bunching, gaussian_trap, incoming_center, j_for_ratio, optimize_release_pulse, sweep_k_sigma, sweep_vc_sigma, Axis, Cell, Scale, SweepKind, SweepSpec,
    TrapNumerics,
};
use eesim_core::grid::{GridSpec, PulseSpec};
use eesim_core::twophoton::build_gaussian_two_photon;
use eesim_core::Error;
use proptest::prelude::*;

fn coarse() -> TrapNumerics {
    TrapNumerics { cells_per_unit: 5.0, cells_per_sigma: 3.0, sample_interval: 2.0, ..Default::default() }
}

fn small_spec(kind: SweepKind) -> SweepSpec {
    let p = SystemParams::reference();
    let mut spec = match kind {
        SweepKind::RatioSigma => SweepSpec::ratio_sigma_default(p),
        SweepKind::CarrierSigma => SweepSpec::carrier_sigma_default(p),
    };
    spec.rows = match kind {
        SweepKind::RatioSigma => Axis::new("vc_over_va", 0.5, 0.9, 2, Scale::Linear).unwrap(),
        SweepKind::CarrierSigma => Axis::new("k", p.omega_bright() - p.gamma_unit(), p.omega_bright(), 2, Scale::Linear).unwrap(),
    };
    spec.cols = Axis::new("sigma_gamma", 1.0, 2.0, 2, Scale::Log).unwrap();
    spec.numerics = coarse();
    spec
}

#[test]
fn incoming_centre_keeps_wide_pulses_outside() {
    let gamma = 0.04;
    assert_eq!(incoming_center(gamma, 0.5 / gamma), -5.0 / gamma);
    assert_eq!(incoming_center(gamma, 3.0 / gamma), -15.0 / gamma);
}

#[test]
fn log_axis_is_geometric() {
    let a = Axis::new("s", 0.2, 5.0, 17, Scale::Log).unwrap();
    let v = a.values();
    assert_eq!(v.len(), 17);
    assert!((v[0] - 0.2).abs() < 1e-15 && (v[16] - 5.0).abs() < 1e-12);
    let r = v[1] / v[0];
    assert!(v.windows(2).all(|w| (w[1] / w[0] - r).abs() < 1e-12));
    assert!(Axis::new("s", 0.0, 1.0, 3, Scale::Log).is_err());
    assert!(Axis::new("s", 0.0, 1.0, 1, Scale::Linear).is_err());
}

#[test]
fn sweeps_are_bitwise_reproducible() {
    let spec = small_spec(SweepKind::RatioSigma);
    let csv = |spec: &SweepSpec| {
        let mut out = Vec::new();
        sweep_vc_sigma(spec).unwrap().write_csv(&mut out).unwrap();
        out
    };
    let a = csv(&spec);
    assert_eq!(a, csv(&spec));
    let text = String::from_utf8(a).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(header, "vc_over_va,sigma_gamma,p_ee,masked,mask_reason,j_used,t_steady");
    assert_eq!(text.lines().count(), 5);
    // V_C / V_A = 0.9 needs J far above the limit
    assert!(text.lines().filter(|l| l.contains("j_limit")).count() == 2, "{text}");
}

#[test]
fn sweep_kinds_are_checked() {
    let spec = small_spec(SweepKind::RatioSigma);
    assert!(matches!(sweep_k_sigma(&spec), Err(Error::InvalidParameter { .. })));
    let spec = small_spec(SweepKind::CarrierSigma);
    assert!(matches!(sweep_vc_sigma(&spec), Err(Error::InvalidParameter { .. })));
}

#[test]
fn carrier_sweep_values_lie_in_the_unit_interval() {
    let res = sweep_k_sigma(&small_spec(SweepKind::CarrierSigma)).unwrap();
    assert!(res.overlays.iter().any(|(l, _)| l == "omega_B1"));
    for c in &res.cells {
        match c {
            Cell::Value { p_ee, .. } => assert!((0.0..=1.0).contains(p_ee)),
            Cell::Masked { reason } => panic!("unexpected mask {reason}"),
        }
    }
    let (k, _, v) = res.argmax().unwrap();
    assert!(v > 0.3, "{v}");
    assert_eq!(k, res.rows[1]);
}

#[test]
fn off_resonant_pair_is_barely_trapped() {
    let p = SystemParams::reference();
    let f = p.in_frame(p.omega_ee());
    let g = f.gamma_unit();
    let on = gaussian_trap(&f, 1.0 / g, f.omega_bright(), &coarse()).unwrap().p_ee;
    let off = gaussian_trap(&f, 1.0 / g, f.omega_bright() + 15.0 * g, &coarse()).unwrap().p_ee;
    assert!(off < 0.05 * on, "{off} vs {on}");
}

#[test]
fn unreachable_release_target_is_reported() {
    let p = SystemParams::reference();
    let g = p.gamma_unit();
    let e = optimize_release_pulse(&p, &[1.0 / g], 1e-6, &coarse()).unwrap_err();
    assert!(matches!(e, Error::TargetNotMet { .. }));
    assert!(optimize_release_pulse(&p, &[2.0 / g, 1.0 / g], 0.1, &coarse()).is_err());
}

#[test]
fn uncorrelated_pair_matches_its_own_reference() {
    let g = GridSpec::new(160, 0.1, 150).unwrap();
    let spec = PulseSpec::new(-7.0, 1.0, 0.0);
    let pulse = build_gaussian_two_photon(&spec, &spec, &g).unwrap();
    let b = bunching(&pulse, 0.5).unwrap();
    assert!((b.diagonal_weight - b.reference_weight).abs() < 1e-3, "{b:?}");
}

#[test]
fn ee_condition_is_enforced() {
    let p = SystemParams::new(1.0, 0.96, 0.02, 0.1, 0.05);
    assert!(matches!(gaussian_trap(&p, 25.0, 0.0, &coarse()), Err(Error::InvalidParameter { name: "j_coupling", .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn mask_follows_the_solved_coupling(wa in 0.5f64..1.5, wc in 0.5f64..1.5, va in 0.01f64..0.3, r in 0.05f64..0.95, frac in 0.01f64..0.5) {
        let base = SystemParams::new(wa, wc, 0.0, va, 0.5 * va);
        let mut spec = SweepSpec::ratio_sigma_default(base);
        spec.j_mask_fraction = frac;
        match spec.system_for_row(r) {
            Ok(p) => {
                let j = solve_j_for_ee(wa, wc, va, r * va).unwrap();
                prop_assert_eq!(p.j_coupling.to_bits(), j.to_bits());
                prop_assert_eq!(j_for_ratio(&base, r).unwrap().to_bits(), j.to_bits());
                prop_assert_eq!(spec.j_exceeds_limit(&p), j > frac * (wc + wa) / 2.0);
            }
            Err(_) => prop_assert!(solve_j_for_ee(wa, wc, va, r * va).is_err()),
        }
    }
}
