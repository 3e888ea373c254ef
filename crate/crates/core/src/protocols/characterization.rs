use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use super::ProtocolContext;
use crate::compiler::{GateSpec, ScheduleBuilder};
use crate::engine::{evolve_observed, evolve_traced, HamiltonianModel, IntegratorConfig, Trace};
use crate::engine::Frame;
use crate::model::{DeviceProfile, DriveTone, PulseSegment, QuantumState, Schedule};
use crate::{Error, Result};

/// Continuous drive of one dot's resonance from `|down...down>`.
#[derive(Debug, Clone)]
pub struct RabiRun {
    pub dot: usize,
    pub frequency: f64,
    /// Time of the first population maximum of the driven dot.
    pub pi_time: f64,
    /// Driven dot's spin-up probability at `pi_time`.
    pub flip_probability: f64,
    /// Largest spin-up probability of any other dot over the run.
    pub max_spectator: f64,
    pub trace: Trace,
}

/// Vertex of the least-squares parabola through `(t, p)` samples with
/// `|t - center| <= half`. Averaging over the window suppresses the
/// counter-rotating ripple of lab-frame runs.
fn parabola_peak(samples: &[(f64, f64)], center: f64, half: f64) -> Option<(f64, f64)> {
    let mut a = Matrix3::zeros();
    let mut b = Vector3::zeros();
    for &(t, p) in samples.iter().filter(|(t, _)| (t - center).abs() <= half) {
        let x = (t - center) / half;
        let v = Vector3::new(1.0, x, x * x);
        a += v * v.transpose();
        b += v * p;
    }
    let c = a.lu().solve(&b)?;
    if c[2] >= 0.0 {
        return None;
    }
    let x = -c[1] / (2.0 * c[2]);
    Some((center + x * half, c[0] + c[1] * x + c[2] * x * x))
}

/// Drives each dot in turn with one tone at its Zeeman frequency and
/// amplitude `drive_amplitude`, in the weak mode, for `duration` seconds.
pub fn rabi(
    profile: &DeviceProfile,
    frame: Frame,
    cfg: &IntegratorConfig,
    duration: f64,
    interval: f64,
) -> Result<Vec<RabiRun>> {
    profile.validate()?;
    if !(duration > 0.0) {
        return Err(Error::Invalid("rabi duration must be positive".into()));
    }
    let weak = profile.weak_mode()?;
    let n = profile.n_dots;
    let model = HamiltonianModel::new(profile, frame);
    (0..n)
        .into_par_iter()
        .map(|dot| {
            let mut schedule = Schedule::new(n);
            schedule.push_segment(PulseSegment {
                duration,
                mode: weak.clone(),
                tones: vec![DriveTone {
                    frequency: profile.zeeman[dot],
                    amplitude: profile.drive_amplitude,
                    phase: 0.0,
                    target: dot,
                }],
                label: format!("drive {}", dot + 1),
            })?;
            let mut samples = Vec::new();
            let mut max_spectator = 0.0f64;
            let mut next = 0.0;
            let mut rows = Vec::new();
            let tol = 1e-6 * cfg.dt;
            evolve_observed(&QuantumState::ground(n), &schedule, &model, cfg, |t, amps| {
                let mut p = vec![0.0; n];
                for (k, a) in amps.iter().enumerate() {
                    let w = a.norm_sqr();
                    for (d, pd) in p.iter_mut().enumerate() {
                        if k >> d & 1 == 1 {
                            *pd += w;
                        }
                    }
                }
                samples.push((t, p[dot]));
                for (d, &pd) in p.iter().enumerate() {
                    if d != dot {
                        max_spectator = max_spectator.max(pd);
                    }
                }
                if t + tol >= next {
                    rows.push((t, p));
                    while next <= t + tol {
                        next += interval;
                    }
                }
            })?;
            // First maximum: the resonant pi time is 1 / (2 B).
            let guess = 1.0 / (2.0 * profile.drive_amplitude);
            let window = 0.1 * guess;
            let (mut center, _) = samples
                .iter()
                .filter(|(t, _)| (t - guess).abs() <= 3.0 * window)
                .fold((guess, f64::NEG_INFINITY), |m, &(t, p)| if p > m.1 { (t, p) } else { m });
            let mut peak = None;
            for _ in 0..3 {
                peak = parabola_peak(&samples, center, window);
                match peak {
                    Some((t, _)) => center = t,
                    None => break,
                }
            }
            let (pi_time, flip_probability) = peak.ok_or_else(|| Error::Invalid(format!("no population maximum found for dot {}", dot + 1)))?;
            Ok(RabiRun {
                dot,
                frequency: profile.zeeman[dot],
                pi_time,
                flip_probability: flip_probability.min(1.0),
                max_spectator,
                trace: Trace { n_dots: n, rows },
            })
        })
        .collect()
}

/// One input row of a CNOT truth table.
#[derive(Debug, Clone)]
pub struct TruthRow {
    /// Spins of (control, target) at the input, e.g. `"ud"`.
    pub input: String,
    pub expected: String,
    /// Probability of the expected basis state at the end.
    pub probability: f64,
    pub trace: Trace,
}

#[derive(Debug, Clone)]
pub struct CnotTable {
    pub control: usize,
    pub target: usize,
    pub duration: f64,
    pub rows: Vec<TruthRow>,
}

/// CNOT on the pair `(lower, lower + 1)` with the upper dot as control,
/// run from the four basis inputs of the pair.
pub fn cnot_truth_table(ctx: &ProtocolContext, lower: usize, interval: f64) -> Result<CnotTable> {
    let (control, target) = (lower + 1, lower);
    let gate = GateSpec::Cnot { control, target };
    let mut b = ScheduleBuilder::new(&ctx.calibration);
    b.push_group(&[gate])?;
    let schedule = b.finish();
    let model = HamiltonianModel::new(&ctx.profile, ctx.frame);
    let n = ctx.profile.n_dots;
    let spin = |u: bool| if u { 'u' } else { 'd' };
    let rows = [(false, false), (false, true), (true, false), (true, true)]
        .into_par_iter()
        .map(|(c, t)| {
            let index = (c as usize) << control | (t as usize) << target;
            let (out, trace) = evolve_traced(&QuantumState::basis(n, index), &schedule, &model, &ctx.integrator, interval)?;
            let flipped = t ^ c;
            let expected = (c as usize) << control | (flipped as usize) << target;
            Ok(TruthRow {
                input: [spin(c), spin(t)].iter().collect(),
                expected: [spin(c), spin(flipped)].iter().collect(),
                probability: out.amplitudes()[expected].norm_sqr(),
                trace,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CnotTable {
        control,
        target,
        duration: schedule.total_duration(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parabola_recovers_vertex() {
        let samples: Vec<(f64, f64)> = (0..200).map(|i| {
            let t = i as f64 * 0.1;
            (t, 1.0 - (t - 9.3).powi(2) * 0.01)
        }).collect();
        let (t, p) = parabola_peak(&samples, 9.0, 3.0).unwrap();
        assert!((t - 9.3).abs() < 1e-9 && (p - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_dot_rwa_pi_pulse() {
        let p = crate::model::load_profile(
            r#"{"n_dots": 1, "zeeman_hz": [18.33e9], "drive_amplitude_hz": 5e6, "modes": {"off": []}}"#,
        )
        .unwrap();
        let runs = rabi(&p, Frame::Rwa, &IntegratorConfig::for_frame(Frame::Rwa), 120e-9, 1e-9).unwrap();
        assert!((runs[0].pi_time - 100e-9).abs() < 0.05e-9, "{}", runs[0].pi_time);
        assert!(runs[0].flip_probability >= 0.9999);
    }
}
