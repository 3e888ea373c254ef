use super::operator::{zeeman_energy, SegmentOperator};
use super::{HamiltonianModel, IntegratorConfig, Method};
use crate::linalg::{cis, expm_hermitian, CMat, C64, I, ZERO};
use crate::model::{PulseSegment, QuantumState, Schedule};
use crate::{Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;

struct Workspace {
    k: Vec<C64>,
    acc: Vec<C64>,
    tmp: Vec<C64>,
}

impl Workspace {
    fn new(dim: usize) -> Self {
        Workspace {
            k: vec![ZERO; dim],
            acc: vec![ZERO; dim],
            tmp: vec![ZERO; dim],
        }
    }
}

fn rk4_step(op: &mut SegmentOperator, t: f64, h: f64, psi: &mut [C64], ws: &mut Workspace) {
    let mh = -I * h;
    // k1
    op.apply(t, psi, &mut ws.k);
    for i in 0..psi.len() {
        ws.acc[i] = ws.k[i];
        ws.tmp[i] = psi[i] + mh * 0.5 * ws.k[i];
    }
    // k2
    op.apply(t + 0.5 * h, &ws.tmp, &mut ws.k);
    for i in 0..psi.len() {
        ws.acc[i] += 2.0 * ws.k[i];
        ws.tmp[i] = psi[i] + mh * 0.5 * ws.k[i];
    }
    // k3
    op.apply(t + 0.5 * h, &ws.tmp, &mut ws.k);
    for i in 0..psi.len() {
        ws.acc[i] += 2.0 * ws.k[i];
        ws.tmp[i] = psi[i] + mh * ws.k[i];
    }
    // k4
    op.apply(t + h, &ws.tmp, &mut ws.k);
    for i in 0..psi.len() {
        psi[i] += mh / 6.0 * (ws.acc[i] + ws.k[i]);
    }
}

/// Propagator of one step from the two-point Gauss-Legendre Magnus expansion.
fn magnus4_step(op: &mut SegmentOperator, t: f64, h: f64) -> CMat {
    let h1 = op.dense(t + h * (0.5 - SQRT3 / 6.0));
    let h2 = op.dense(t + h * (0.5 + SQRT3 / 6.0));
    // Omega = -i K with K Hermitian.
    let comm = &h2 * &h1 - &h1 * &h2;
    let k = (&h1 + &h2) * C64::new(h / 2.0, 0.0) + comm * (-I * (SQRT3 * h * h / 12.0));
    expm_hermitian(&k, 1.0)
}

fn steps_for(duration: f64, dt: f64) -> usize {
    ((duration / dt) - 1e-9).ceil().max(1.0) as usize
}

/// Integrates `psi` (interaction picture) over `[t0, t0 + duration]`.
fn integrate_segment(
    op: &mut SegmentOperator,
    t0: f64,
    duration: f64,
    cfg: &IntegratorConfig,
    psi: &mut Vec<C64>,
    observer: &mut dyn FnMut(f64, &[C64]),
) {
    if duration == 0.0 {
        return;
    }
    let n = steps_for(duration, cfg.dt);
    let h = duration / n as f64;
    match cfg.method {
        Method::Rk4 => {
            let mut ws = Workspace::new(psi.len());
            for s in 0..n {
                let t = t0 + s as f64 * h;
                rk4_step(op, t, h, psi, &mut ws);
                observer(t0 + (s + 1) as f64 * h, psi);
            }
        }
        Method::Magnus4 => {
            for s in 0..n {
                let t = t0 + s as f64 * h;
                let u = magnus4_step(op, t, h);
                let v = nalgebra::DVector::from_column_slice(psi);
                *psi = (u * v).iter().copied().collect();
                observer(t0 + (s + 1) as f64 * h, psi);
            }
        }
    }
}

fn to_interaction(model: &HamiltonianModel, amps: &mut [C64], t: f64, sign: f64) {
    for (k, a) in amps.iter_mut().enumerate() {
        *a *= cis(sign * zeeman_energy(model.profile, k) * t);
    }
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Evolves a lab-frame state through `schedule`, calling `observer` with the
/// absolute time and interaction-picture amplitudes after every step.
pub fn evolve_observed(
    state: &QuantumState,
    schedule: &Schedule,
    model: &HamiltonianModel,
    cfg: &IntegratorConfig,
    mut observer: impl FnMut(f64, &[C64]),
) -> Result<QuantumState> {
    cfg.validate()?;
    let n = model.profile.n_dots;
    if state.n_qubits() != n || schedule.n_dots() != n {
        return Err(Error::Dimension {
            expected: n,
            got: if state.n_qubits() != n { state.n_qubits() } else { schedule.n_dots() },
        });
    }
    schedule.validate()?;

    let mut psi = state.amplitudes().to_vec();
    let mut t = schedule.start();
    to_interaction(model, &mut psi, t, 1.0);
    let norm0 = norm(&psi);
    observer(t, &psi);

    let mut phases = schedule.initial_phases().to_vec();
    let frames = schedule.frames();
    let mut next_frame = 0;
    let mut offset = 0.0;
    for seg in schedule.segments() {
        let eps = 1e-15 + 1e-12 * offset;
        while next_frame < frames.len() && frames[next_frame].time <= offset + eps {
            let ev = &frames[next_frame];
            phases[ev.dot] += ev.phase;
            next_frame += 1;
        }
        let mut op = SegmentOperator::new(model.profile, seg, model.frame, Some(&phases))?;
        integrate_segment(&mut op, t, seg.duration, cfg, &mut psi, &mut observer);
        offset += seg.duration;
        t = schedule.start() + offset;
    }

    let drift = (norm(&psi) - norm0).abs();
    if !(drift <= cfg.unitarity_tol) {
        return Err(Error::StepRejected {
            drift,
            tolerance: cfg.unitarity_tol,
        });
    }
    to_interaction(model, &mut psi, t, -1.0);
    Ok(QuantumState::from_raw(n, psi))
}

/// Evolves a lab-frame state through `schedule`, starting at
/// `schedule.start()`. Virtual frame events are folded into the phases of
/// later tones on the same dot; they change no Hamiltonian term directly.
pub fn evolve(
    state: &QuantumState,
    schedule: &Schedule,
    model: &HamiltonianModel,
    cfg: &IntegratorConfig,
) -> Result<QuantumState> {
    evolve_observed(state, schedule, model, cfg, |_, _| {})
}

/// Per-dot spin-up probabilities sampled along an evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub n_dots: usize,
    /// `(time in seconds, p_up per dot)`.
    pub rows: Vec<(f64, Vec<f64>)>,
}

impl Trace {
    pub fn header(&self) -> Vec<String> {
        std::iter::once("t_ns".to_string())
            .chain((1..=self.n_dots).map(|i| format!("p_up_{i}")))
            .collect()
    }
}

fn p_up(amps: &[C64], n: usize) -> Vec<f64> {
    (0..n)
        .map(|d| {
            amps.iter()
                .enumerate()
                .filter(|(k, _)| k >> d & 1 == 1)
                .map(|(_, a)| a.norm_sqr())
                .sum()
        })
        .collect()
}

/// [`evolve`] with a trace sampled every `interval` seconds (at the first
/// integration step reaching each sampling instant).
pub fn evolve_traced(
    state: &QuantumState,
    schedule: &Schedule,
    model: &HamiltonianModel,
    cfg: &IntegratorConfig,
    interval: f64,
) -> Result<(QuantumState, Trace)> {
    if !(interval > 0.0) {
        return Err(Error::Invalid("sampling interval must be positive".into()));
    }
    let n = model.profile.n_dots;
    let mut rows = Vec::new();
    let mut next = schedule.start();
    let tol = 1e-6 * cfg.dt;
    let out = evolve_observed(state, schedule, model, cfg, |t, amps| {
        if t + tol >= next {
            rows.push((t, p_up(amps, n)));
            while next <= t + tol {
                next += interval;
            }
        }
    })?;
    Ok((out, Trace { n_dots: n, rows }))
}

/// Interaction-picture propagator of `segment` started at absolute time `t0`;
/// column `j` is the evolved basis state `j`. Tone phases are used as stored.
pub fn segment_propagator_at(
    segment: &PulseSegment,
    t0: f64,
    model: &HamiltonianModel,
    cfg: &IntegratorConfig,
) -> Result<CMat> {
    cfg.validate()?;
    let dim = 1usize << model.profile.n_dots;
    let mut op = SegmentOperator::new(model.profile, segment, model.frame, None)?;
    let mut u = CMat::zeros(dim, dim);
    for j in 0..dim {
        let mut psi = vec![ZERO; dim];
        psi[j] = C64::new(1.0, 0.0);
        integrate_segment(&mut op, t0, segment.duration, cfg, &mut psi, &mut |_, _| {});
        let drift = (norm(&psi) - 1.0).abs();
        if !(drift <= cfg.unitarity_tol) {
            return Err(Error::StepRejected {
                drift,
                tolerance: cfg.unitarity_tol,
            });
        }
        for (i, a) in psi.iter().enumerate() {
            u[(i, j)] = *a;
        }
    }
    Ok(u)
}

/// [`segment_propagator_at`] with the segment starting at `t = 0`.
pub fn segment_propagator(segment: &PulseSegment, model: &HamiltonianModel, cfg: &IntegratorConfig) -> Result<CMat> {
    segment_propagator_at(segment, 0.0, model, cfg)
}
