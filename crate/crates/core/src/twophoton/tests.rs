use super::*;
use crate::grid::{gaussian_pulse, GridSpec, PulseSpec};
use crate::model::{ee_state, SystemParams};
use crate::onephoton::{evolve_single, EvolveOptions, SingleExcState};
use crate::scalar::{cx, czero};

fn frame() -> (SystemParams<f64>, f64) {
    let p = SystemParams::reference();
    (p.in_frame(p.omega_ee()), p.gamma_unit())
}

fn fig2a_pulse(grid: &GridSpec<f64>, p: &SystemParams<f64>, gamma: f64) -> TwoPhotonPulse<f64> {
    let spec = PulseSpec::new(-5.0 / gamma, 1.0 / gamma, p.omega_bright());
    build_gaussian_two_photon(&spec, &spec, grid).unwrap()
}

#[test]
fn free_transport_is_a_diagonal_shift() {
    let p = SystemParams::<f64>::new(0.02, -0.01, 0.004, 0.0, 0.0);
    let g = GridSpec::new(64, 0.25, 40).unwrap();
    let a = PulseSpec::new(-4.0, 0.7, 0.3);
    let b = PulseSpec::new(-6.0, 0.6, -0.2);
    let pulse = build_gaussian_two_photon(&a, &b, &g).unwrap();
    let st = TwoPhotonState::from_pulse(&pulse);
    let (traj, out) = evolve_two_photon(&p, &st, 12.0 * 0.25, 0.25, &TwoPhotonOptions::default()).unwrap();
    let m = 64;
    for i in 12..m {
        for j in 12..m {
            assert_eq!(out.chi[i * m + j], st.chi[(i - 12) * m + j - 12]);
        }
    }
    assert!(traj.column("norm").unwrap().iter().all(|n| (n - 1.0).abs() < 1e-12));
    let ext = extract_outgoing(&out, 0.05).unwrap();
    assert!((ext.norm() - 1.0).abs() < 1e-12);
}

#[test]
fn gaussian_input_is_symmetric_and_normalized() {
    let (p, gamma) = frame();
    let g = GridSpec::spanning(0.2 / gamma, -12.0 / gamma, 4.0 / gamma).unwrap();
    let pulse = fig2a_pulse(&g, &p, gamma);
    assert!((pulse.norm() - 1.0).abs() < 1e-12);
    let st = TwoPhotonState::from_pulse(&pulse);
    assert_eq!(st.symmetry_defect(), 0.0);
    assert_eq!(pulse.weight_outside_incoming(), 0.0);
    let other = build_gaussian_two_photon(&PulseSpec::new(-5.5 / gamma, 1.0 / gamma, 0.0), &PulseSpec::new(-6.0 / gamma, 0.8 / gamma, 0.0), &g).unwrap();
    assert!((other.norm() - 1.0).abs() < 1e-12);
}

#[test]
fn pulse_crossing_the_origin_is_rejected() {
    let g = GridSpec::new(64, 0.5, 32).unwrap();
    let spec = PulseSpec::new(0.0, 1.0, 0.0);
    assert!(matches!(build_gaussian_two_photon(&spec, &spec, &g), Err(crate::Error::SupportViolation(_))));
}

#[test]
fn p_ee_of_dressed_packets() {
    let (p, _) = frame();
    let g = GridSpec::new(32, 0.5, 16).unwrap();
    let f = gaussian_pulse(&PulseSpec::new(-3.0, 0.5, 0.0), &g).unwrap();
    let st = make_release_state(&p, &f, &g).unwrap();
    assert!((p_ee(&st, &p) - 1.0).abs() < 1e-12);
    assert!((st.norm() - 1.0).abs() < 1e-12);
    let n = (p.v_a * p.v_a + p.v_c * p.v_c).sqrt();
    let mut bright = TwoPhotonState::vacuum(g);
    let s = g.dx.sqrt();
    for (i, z) in f.iter().enumerate() {
        bright.phi_a[i] = *z * s * (p.v_a / n);
        bright.phi_c[i] = *z * s * (p.v_c / n);
    }
    assert!(p_ee(&bright, &p) < 1e-15);
}

#[test]
fn extraction_rejects_stored_excitation() {
    let g = GridSpec::new(32, 0.5, 16).unwrap();
    let mut st = TwoPhotonState::vacuum(g);
    st.e_2c = cx(1.0, 0.0);
    assert!(matches!(extract_outgoing(&st, 0.05), Err(crate::Error::ResidualTooLarge { .. })));
}

#[test]
fn time_reversal_is_an_involution() {
    let g = GridSpec::new(48, 0.5, 20).unwrap();
    let a = PulseSpec::new(-4.0, 0.7, 0.3);
    let b = PulseSpec::new(-6.0, 0.6, -0.2);
    let incoming = build_gaussian_two_photon(&a, &b, &g).unwrap();
    // an incoming packet is the reversal of an outgoing one on the mirrored grid
    let mut outgoing = incoming.clone();
    outgoing.grid = g.mirrored();
    let m = 48;
    for i in 0..m {
        for j in 0..m {
            outgoing.chi[(m - 1 - i) * m + (m - 1 - j)] = incoming.chi[i * m + j].conj();
        }
    }
    let rev = time_reverse(&outgoing).unwrap();
    assert_eq!(rev.grid, g);
    for (x, y) in rev.chi.iter().zip(&incoming.chi) {
        assert!((*x - *y).norm() < 1e-15);
    }
    assert!((rev.norm() - outgoing.norm()).abs() < 1e-12);
    assert!(matches!(time_reverse(&incoming), Err(crate::Error::SupportViolation(_))));
}

#[test]
fn ee2p_round_trip() {
    let g = GridSpec::new(20, 0.25, 12).unwrap();
    let spec = PulseSpec::new(-1.2, 0.2, 0.7);
    let pulse = build_gaussian_two_photon(&spec, &spec, &g).unwrap();
    let mut bytes = Vec::new();
    write_ee2p(&pulse, 3.5, &mut bytes).unwrap();
    assert_eq!(&bytes[..4], b"EE2P");
    assert_eq!(bytes.len(), 4 + 2 + 4 + 24 + 16 * 400);
    let (back, t) = read_ee2p::<f64, _>(bytes.as_slice(), "mem").unwrap();
    assert_eq!(t, 3.5);
    assert_eq!(back.grid, g);
    for (x, y) in back.chi.iter().zip(&pulse.chi) {
        assert!((*x - *y).norm() <= 1e-16 * y.norm().max(1e-300) + 1e-300);
    }
    bytes[0] = b'X';
    assert!(read_ee2p::<f64, _>(bytes.as_slice(), "mem").is_err());
}

#[test]
fn norm_and_symmetry_hold_with_coupling() {
    let (p, gamma) = frame();
    let dx = 0.1 / gamma;
    let g = GridSpec::spanning(dx, -11.0 / gamma, 14.0 / gamma).unwrap();
    let st = TwoPhotonState::from_pulse(&fig2a_pulse(&g, &p, gamma));
    let opts = TwoPhotonOptions { sample_every: 5, gamma_unit: gamma, ..Default::default() };
    let (traj, out) = evolve_two_photon(&p, &st, 12.0 / gamma, dx, &opts).unwrap();
    for v in traj.column("norm").unwrap() {
        assert!((v - 1.0).abs() < 1e-9);
    }
    assert!(out.symmetry_defect() < 1e-12);
    assert!(traj.max("p_ee").unwrap() > 0.3);
}

#[test]
fn losses_make_the_norm_decrease() {
    let (p, gamma) = frame();
    let p = p.with_losses(0.0, 0.1 * p.gamma_c());
    let dx = 0.1 / gamma;
    let g = GridSpec::spanning(dx, -11.0 / gamma, 14.0 / gamma).unwrap();
    let st = TwoPhotonState::from_pulse(&fig2a_pulse(&g, &p, gamma));
    let (traj, _) = evolve_two_photon(&p, &st, 12.0 / gamma, dx, &TwoPhotonOptions { sample_every: 1, ..Default::default() }).unwrap();
    let n = traj.column("norm").unwrap();
    assert!(n.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    assert!(*n.last().unwrap() < 0.999);
}

#[test]
fn detached_second_photon_reproduces_single_excitation_run() {
    let (p, gamma) = frame();
    let dx = 0.05 / gamma;
    let g = GridSpec::spanning(dx, -40.0 / gamma, 25.0 / gamma).unwrap();
    let near = PulseSpec::new(-5.0 / gamma, 1.0 / gamma, p.omega_bright());
    let far = PulseSpec::new(-30.0 / gamma, 1.0 / gamma, p.omega_bright());
    let pulse = build_gaussian_two_photon(&near, &far, &g).unwrap();
    let st = TwoPhotonState::from_pulse(&pulse);
    let t_end = 15.0 / gamma;
    let opts = TwoPhotonOptions { sample_every: 10, ..Default::default() };
    let (two, _) = evolve_two_photon(&p, &st, t_end, dx, &opts).unwrap();
    let f = gaussian_pulse(&near, &g).unwrap();
    let (one, _) = evolve_single(&p, &g, &SingleExcState::photon(f), t_end, dx, &EvolveOptions { sample_every: 10, ..Default::default() }).unwrap();
    let stored2: Vec<f64> = two.rows.iter().map(|r| r[2] + r[3]).collect();
    let stored1: Vec<f64> = one.rows.iter().map(|r| r[2] + r[3]).collect();
    let peak = stored1.iter().cloned().fold(0.0, f64::max);
    for (a, b) in stored2.iter().zip(&stored1) {
        assert!((a - b).abs() < 0.01 * peak, "{a} vs {b}");
    }
}

#[test]
fn steady_state_rule_waits_for_arrival() {
    let (p, gamma) = frame();
    let dx = 0.1 / gamma;
    let g = GridSpec::spanning(dx, -11.0 / gamma, 42.0 / gamma).unwrap();
    let st = TwoPhotonState::from_pulse(&fig2a_pulse(&g, &p, gamma));
    let rule = SteadyStateRule::standard(gamma, 5.0 / gamma);
    let out = evolve_until_steady(&p, &st, &rule, Watch::PEe, &TwoPhotonOptions { gamma_unit: gamma, ..Default::default() }).unwrap();
    assert!(out.t_steady >= 15.0 / gamma);
    assert!((out.value - 0.5).abs() < 0.05, "{}", out.value);
}

#[test]
fn vacuum_is_stationary() {
    let (p, _) = frame();
    let g = GridSpec::new(32, 1.0, 16).unwrap();
    let st = TwoPhotonState::vacuum(g);
    let (traj, out) = evolve_two_photon(&p, &st, 10.0, 1.0, &TwoPhotonOptions::default()).unwrap();
    assert!(traj.column("norm").unwrap().iter().all(|v| *v == 0.0));
    assert!(out.chi.iter().all(|z| *z == czero()));
    let _ = ee_state(&p).unwrap();
}

#[test]
fn padding_keeps_amplitudes() {
    let g = GridSpec::<f64>::new(20, 0.5, 10).unwrap();
    let spec = PulseSpec::new(-2.0, 0.3, 0.0);
    let pulse = build_gaussian_two_photon(&spec, &spec, &g).unwrap();
    let padded = pulse.padded(3, 5);
    assert_eq!(padded.grid.n_cells, 28);
    assert_eq!(padded.grid.coupling_index, 13);
    assert!((padded.norm() - 1.0).abs() < 1e-14);
    assert_eq!(padded.chi[(3 + 4) * 28 + 3 + 6], pulse.chi[4 * 20 + 6]);
    assert!((padded.grid.x(13) - g.x(10)).abs() < 1e-15);
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(8))]

    #[test]
    fn random_systems_keep_norm_and_symmetry(ratio in 0.2f64..0.8, sig in 0.5f64..1.5, k in -1.0f64..1.0) {
        let lab = SystemParams::at_ee_condition(1.0, 0.96, 0.1, 0.1 * ratio).unwrap();
        let p = lab.in_frame(lab.omega_ee());
        let gamma = p.gamma_unit();
        let dx = 0.2 / gamma;
        let center = crate::protocols::incoming_center(gamma, sig / gamma);
        let g = GridSpec::spanning(dx, center - 6.0 * sig / gamma, 16.0 / gamma).unwrap();
        let spec = PulseSpec::new(center, sig / gamma, p.omega_bright() + k * gamma);
        let st = TwoPhotonState::from_pulse(&build_gaussian_two_photon(&spec, &spec, &g).unwrap());
        let opts = TwoPhotonOptions { sample_every: 4, gamma_unit: gamma, ..Default::default() };
        let (traj, out) = evolve_two_photon(&p, &st, 8.0 / gamma, dx, &opts).unwrap();
        for v in traj.column("norm").unwrap() {
            proptest::prop_assert!((v - 1.0).abs() < 1e-6);
        }
        proptest::prop_assert!(out.symmetry_defect() < 1e-9);
    }
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

    #[test]
    fn ee2p_round_trip_is_exact(m in 16usize..48, dx in 0.05f64..1.0, k in -3.0f64..3.0, t in -50.0f64..50.0) {
        let g = GridSpec::new(m, dx, m - 2).unwrap();
        let span = (m - 2) as f64 * dx;
        let spec = PulseSpec::new(-0.5 * span, span / 14.0, k / dx);
        let pulse = build_gaussian_two_photon(&spec, &spec, &g).unwrap();
        let mut bytes = Vec::new();
        write_ee2p(&pulse, t, &mut bytes).unwrap();
        let (back, t_back) = read_ee2p::<f64, _>(bytes.as_slice(), "mem").unwrap();
        proptest::prop_assert_eq!(t_back.to_bits(), t.to_bits());
        proptest::prop_assert_eq!(&back.grid, &g);
        // the file holds chi itself, the state holds chi * dx
        proptest::prop_assert!(back.chi.iter().zip(&pulse.chi).all(|(a, b)| (*a - *b).norm() <= 4.0 * f64::EPSILON * b.norm()));
    }
}
