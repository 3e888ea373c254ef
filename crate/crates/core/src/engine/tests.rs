use std::f64::consts::{PI, TAU};

use super::*;
use crate::linalg::{identity, kron, pauli_x, pauli_y, unitarity_error, CMat, C64, ONE, ZERO};
use crate::model::{load_profile, DeviceProfile, DriveTone, PulseSegment, QuantumState, Schedule};

fn two_dot(j: f64) -> DeviceProfile {
    load_profile(&format!(
        r#"{{"n_dots": 2, "zeeman_hz": [18.33e9, 18.40e9], "drive_amplitude_hz": 5e6,
            "modes": {{"off": [0.0], "on": [{j}]}}}}"#
    ))
    .unwrap()
}

fn one_dot() -> DeviceProfile {
    load_profile(r#"{"n_dots": 1, "zeeman_hz": [18.33e9], "drive_amplitude_hz": 5e6, "modes": {"off": []}}"#).unwrap()
}

fn tone(f: f64, a: f64, phase: f64, target: usize) -> DriveTone {
    DriveTone { frequency: f, amplitude: a, phase, target }
}

/// Physical Z (`+1` on spin up) in the `|down>, |up>` index basis.
fn z_phys() -> CMat {
    CMat::from_row_slice(2, 2, &[-ONE, ZERO, ZERO, ONE])
}

fn max_diff(a: &CMat, b: &CMat) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn single_dot_zeeman_gap() {
    let p = one_dot();
    let seg = PulseSegment::idle(1e-9, "off".into(), "idle");
    let h = hamiltonian_at(&HamiltonianModel::new(&p, Frame::Lab), &seg, 0.3e-9).unwrap();
    assert!(h[(0, 1)].norm() == 0.0 && h[(1, 0)].norm() == 0.0);
    let gap = (h[(1, 1)] - h[(0, 0)]).re;
    assert!((gap - TAU * 18.33e9).abs() < 1e-3);
}

#[test]
fn zero_coupling_without_tones_is_diagonal() {
    let p = DeviceProfile::reference();
    let seg = PulseSegment::idle(1e-9, "J_off".into(), "idle");
    let mut zero = p.clone();
    zero.modes.insert("J_off".into(), vec![0.0; 4]);
    for frame in [Frame::Lab, Frame::Rwa] {
        let h = hamiltonian_at(&HamiltonianModel::new(&zero, frame), &seg, 2e-9).unwrap();
        for r in 0..32 {
            for c in 0..32 {
                if r != c {
                    assert_eq!(h[(r, c)], ZERO);
                }
            }
        }
    }
}

/// Hand assembly of the two-dot lab Hamiltonian from Pauli tensor products.
fn brute_force_lab(p: &DeviceProfile, j: f64, tones: &[DriveTone], t: f64) -> CMat {
    let id = identity(2);
    // Dot 1 is the low bit, so it is the right factor of the Kronecker product.
    let on1 = |m: &CMat| kron(&id, m);
    let on2 = |m: &CMat| kron(m, &id);
    let c = |x: f64| C64::new(x, 0.0);
    let b: f64 = tones.iter().map(|tn| tn.amplitude * (TAU * tn.frequency * t + tn.phase).cos()).sum();
    let (x, y, z) = (pauli_x(), pauli_y(), z_phys());
    let zeeman = on1(&z) * c(PI * p.zeeman[0]) + on2(&z) * c(PI * p.zeeman[1]);
    let drive = (on1(&y) + on2(&y)) * c(TAU * b);
    let heis = (on1(&x) * on2(&x) + on1(&y) * on2(&y) + on1(&z) * on2(&z) - identity(4)) * c(TAU * j / 4.0);
    zeeman + drive + heis
}

#[test]
fn lab_hamiltonian_matches_hand_assembly() {
    let j = 12.4e6;
    let p = two_dot(j);
    let tones = vec![tone(18.33e9, 5e6, 0.4, 0), tone(18.40e9, 2e6, -1.1, 1)];
    let seg = PulseSegment { duration: 1e-8, mode: "on".into(), tones: tones.clone(), label: "t".into() };
    for t in [0.0, 1.234e-9, 7.77e-8] {
        let h = hamiltonian_at(&HamiltonianModel::new(&p, Frame::Lab), &seg, t).unwrap();
        let expect = brute_force_lab(&p, j, &tones, t);
        assert!(max_diff(&h, &expect) < 1e-6 * TAU * 18.4e9 * 1e-9, "t = {t}");
    }
}

#[test]
fn rwa_hamiltonian_matches_rotated_hand_assembly() {
    // Rotate the hand-assembled lab Hamiltonian and keep only co-rotating
    // drive terms: for a resonant tone on dot 1 the drive block is pi A Y.
    let p = two_dot(0.0);
    let seg = PulseSegment { duration: 1e-8, mode: "off".into(), tones: vec![tone(18.33e9, 5e6, 0.0, 0)], label: "t".into() };
    let h = hamiltonian_at(&HamiltonianModel::new(&p, Frame::Rwa), &seg, 0.0).unwrap();
    let expect = kron(&identity(2), &pauli_y()) * C64::new(PI * 5e6, 0.0);
    // Dot 2 sees the tone detuned by -70 MHz; at t = 0 its coefficient is i pi A.
    let mut dot2 = kron(&pauli_y(), &identity(2)) * C64::new(PI * 5e6, 0.0);
    dot2 += &expect;
    assert!(max_diff(&h, &dot2) < 1e-6);
}

#[test]
fn empty_schedule_is_identity() {
    let p = DeviceProfile::reference();
    let s = QuantumState::ground(5);
    for frame in [Frame::Lab, Frame::Rwa] {
        let out = evolve(&s, &Schedule::new(5), &HamiltonianModel::new(&p, frame), &IntegratorConfig::for_frame(frame)).unwrap();
        assert!((out.overlap(&s) - 1.0).abs() < 1e-15);
    }
}

fn pi_pulse(p: &DeviceProfile, dot: usize, duration: f64) -> Schedule {
    let mut s = Schedule::new(p.n_dots);
    let mut seg = PulseSegment::idle(duration, p.weak_mode().unwrap(), "rabi");
    seg.tones.push(tone(p.zeeman[dot], p.drive_amplitude, 0.0, dot));
    s.push_segment(seg).unwrap();
    s
}

#[test]
fn rwa_pi_pulse_flips_single_dot() {
    let p = one_dot();
    let s = pi_pulse(&p, 0, 100e-9);
    let out = evolve(&QuantumState::ground(1), &s, &HamiltonianModel::new(&p, Frame::Rwa), &IntegratorConfig::for_frame(Frame::Rwa)).unwrap();
    assert!(out.p_up(0) >= 0.9999);
}

#[test]
fn lab_pulse_addresses_only_resonant_dot() {
    let p = DeviceProfile::reference();
    let s = pi_pulse(&p, 0, 100e-9);
    let out = evolve(&QuantumState::ground(5), &s, &HamiltonianModel::new(&p, Frame::Lab), &IntegratorConfig::for_frame(Frame::Lab)).unwrap();
    assert!(out.p_up(0) > 0.999);
    for d in 1..5 {
        assert!(out.p_up(d) < 0.01, "dot {} p_up {}", d + 1, out.p_up(d));
    }
    assert!((out.norm() - 1.0).abs() < 1e-9);
}

#[test]
fn lab_and_rwa_agree_on_single_qubit_pulse() {
    let p = one_dot();
    let s = pi_pulse(&p, 0, 50e-9);
    let lab = evolve(&QuantumState::ground(1), &s, &HamiltonianModel::new(&p, Frame::Lab), &IntegratorConfig::for_frame(Frame::Lab)).unwrap();
    let rwa = evolve(&QuantumState::ground(1), &s, &HamiltonianModel::new(&p, Frame::Rwa), &IntegratorConfig::for_frame(Frame::Rwa)).unwrap();
    assert!(lab.overlap(&rwa) > 0.999);
}

#[test]
fn magnus_and_rk4_agree() {
    let p = DeviceProfile::reference();
    let mut s = pi_pulse(&p, 2, 30e-9);
    s.push_segment(PulseSegment::idle(20e-9, "J23_on".into(), "cz")).unwrap();
    let psi = QuantumState::product(&[[ONE, ONE], [ONE, ONE], [ONE, ZERO], [ONE, ONE], [ONE, ZERO]]).unwrap();
    let m = HamiltonianModel::new(&p, Frame::Rwa);
    let a = evolve(&psi, &s, &m, &IntegratorConfig::for_frame(Frame::Rwa)).unwrap();
    let b = evolve(&psi, &s, &m, &IntegratorConfig::for_frame(Frame::Rwa).with_method(Method::Magnus4)).unwrap();
    assert!(a.overlap(&b) > 1.0 - 1e-9);
}

#[test]
fn halving_dt_converges() {
    let p = DeviceProfile::reference();
    let mut s = pi_pulse(&p, 1, 50e-9);
    s.push_segment(PulseSegment::idle(40e-9, "J12_on".into(), "cz")).unwrap();
    let psi = QuantumState::product(&[[ONE, ONE], [ONE, ZERO], [ONE, ZERO], [ONE, ZERO], [ONE, ZERO]]).unwrap();
    let m = HamiltonianModel::new(&p, Frame::Rwa);
    let cfg = IntegratorConfig::for_frame(Frame::Rwa);
    let a = evolve(&psi, &s, &m, &cfg).unwrap();
    let b = evolve(&psi, &s, &m, &cfg.with_dt(cfg.dt / 2.0)).unwrap();
    assert!(1.0 - a.overlap(&b) < 1e-6);
}

#[test]
fn evolution_is_linear() {
    let p = DeviceProfile::reference();
    let s = pi_pulse(&p, 3, 30e-9);
    let m = HamiltonianModel::new(&p, Frame::Rwa);
    let cfg = IntegratorConfig::for_frame(Frame::Rwa);
    let a = QuantumState::basis(5, 0b01000);
    let b = QuantumState::basis(5, 0b00110);
    let (alpha, beta) = (C64::new(0.6, 0.0), C64::new(0.0, 0.8));
    let mix: Vec<C64> = a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| alpha * x + beta * y).collect();
    let out = evolve(&QuantumState::from_amplitudes(mix).unwrap(), &s, &m, &cfg).unwrap();
    let ea = evolve(&a, &s, &m, &cfg).unwrap();
    let eb = evolve(&b, &s, &m, &cfg).unwrap();
    for k in 0..32 {
        let lin = alpha * ea.amplitudes()[k] + beta * eb.amplitudes()[k];
        assert!((out.amplitudes()[k] - lin).norm() < 1e-8);
    }
}

#[test]
fn zero_duration_propagator_is_identity() {
    let p = DeviceProfile::reference();
    let seg = PulseSegment::idle(0.0, "J12_on".into(), "carrier");
    let u = segment_propagator(&seg, &HamiltonianModel::new(&p, Frame::Rwa), &IntegratorConfig::for_frame(Frame::Rwa)).unwrap();
    assert_eq!(u, identity(32));
}

#[test]
fn exchange_segment_gives_conditional_phase_pi() {
    // Closed-form reference: exp(-i 2 pi (J/4) Z Z t) has conditional phase
    // -2 pi J t = -pi at t = 1/(2J). The flip-flop term, detuned by 70 MHz,
    // only perturbs this at the percent level.
    let p = DeviceProfile::reference();
    let j = 1.24e7;
    let seg = PulseSegment::idle(1.0 / (2.0 * j), "J12_on".into(), "cz");
    let u = segment_propagator(&seg, &HamiltonianModel::new(&p, Frame::Rwa), &IntegratorConfig::for_frame(Frame::Rwa)).unwrap();
    assert!(unitarity_error(&u) < 1e-9);
    let d = [u[(0, 0)], u[(1, 1)], u[(2, 2)], u[(3, 3)]];
    assert!(d.iter().all(|z| z.norm() > 0.99));
    let cond = (d[3] * d[0] / (d[1] * d[2])).arg();
    assert!((cond.abs() - PI).abs() < 0.1, "conditional phase {cond}");
}

#[test]
fn propagators_are_unitary() {
    let p = DeviceProfile::reference();
    let mut seg = PulseSegment::idle(20e-9, "J34_on".into(), "mix");
    seg.tones.push(tone(p.zeeman[2], 5e6, 0.3, 2));
    seg.tones.push(tone(p.zeeman[4], 3e6, 1.3, 4));
    for frame in [Frame::Rwa, Frame::Lab] {
        let cfg = match frame {
            Frame::Lab => IntegratorConfig::for_frame(frame).with_dt(1e-12),
            Frame::Rwa => IntegratorConfig::for_frame(frame),
        };
        let seg = PulseSegment { duration: if frame == Frame::Lab { 2e-9 } else { 20e-9 }, ..seg.clone() };
        let u = segment_propagator(&seg, &HamiltonianModel::new(&p, frame), &cfg).unwrap();
        assert!(unitarity_error(&u) < 1e-9);
    }
}

#[test]
fn frame_unwind_basics() {
    let p = DeviceProfile::reference();
    let psi = QuantumState::normalized((0..32).map(|k| C64::new(k as f64, 1.0 - k as f64 * 0.1)).collect()).unwrap();
    let same = frame_unwind(&psi, 0.0, &p, &[0.0; 5]).unwrap();
    assert_eq!(same, psi);
    let phases = [0.1, 2.0, -0.3, 4.0, 0.0];
    let out = frame_unwind(&psi, 315.8e-9, &p, &phases).unwrap();
    for (a, b) in psi.probabilities().iter().zip(out.probabilities()) {
        assert!((a - b).abs() < 1e-15);
    }
    let back = frame_wind(&out, 315.8e-9, &p, &phases).unwrap();
    assert!((back.overlap(&psi) - 1.0).abs() < 1e-12);
}

#[test]
fn step_rejection_reports_drift() {
    let p = one_dot();
    let s = pi_pulse(&p, 0, 100e-9);
    let cfg = IntegratorConfig::for_frame(Frame::Lab).with_dt(20e-12);
    match evolve(&QuantumState::ground(1), &s, &HamiltonianModel::new(&p, Frame::Lab), &cfg) {
        Err(crate::Error::StepRejected { drift, .. }) => assert!(drift > 1e-9),
        other => panic!("expected rejection, got {other:?}"),
    }
}
